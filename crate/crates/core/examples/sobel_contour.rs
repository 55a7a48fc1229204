//! Sobel responses on simple volumes and the soft contour of a blurred mask.

use voxelseg::filter::{contour, correlate3, Axis, SobelKernels};
use voxelseg::{Mask, Shape3, Volume};

fn main() -> voxelseg::Result<()> {
    let k = SobelKernels::new();
    println!("sz, one plane per dz:");
    for plane in k.get(Axis::Z) {
        println!("  {plane:?}");
    }

    let shape = Shape3::cube(5);
    let ramp = Volume::from_fn(shape, |_, _, z| z as f32)?;
    let r = correlate3(&ramp, k.get(Axis::Z));
    println!(
        "\nramp v = z: sz response at the centre {}, at z = 0 {}",
        r.get(2, 2, 2),
        r.get(2, 2, 0)
    );
    println!(
        "constant volume: contour sum {}",
        voxelseg::volume::sum(&contour(&Volume::filled(shape, 0.7)))
    );

    let step = Mask::from_fn(Shape3::cube(6), |x, _, _| x >= 3).to_volume();
    let c = contour(&step);
    let profile: Vec<f32> = (0..6).map(|x| c.get(x, 2, 2)).collect();
    println!("half-space step along x, contour profile: {profile:?}");
    Ok(())
}
