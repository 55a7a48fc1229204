//! Overlap and surface-distance metrics of a shifted, dented mask.

use voxelseg::metrics::{confusion, evaluate, hausdorff_pair};
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::{Mask, Shape3};

fn main() -> voxelseg::Result<()> {
    let shape = Shape3::new(40, 32, 32)?;
    let truth = make_phantom(PhantomKind::Ellipsoid, shape, 0)?;
    // shift one voxel along x and carve a notch
    let pred = Mask::from_fn(shape, |x, y, z| {
        x > 0 && truth.get(x - 1, y, z) && !(y > 20 && z > 20)
    });

    let c = confusion(&pred, &truth)?;
    println!("confusion: {c:?}");
    let (hd, avg) = hausdorff_pair(&pred, &truth)?;
    println!("hd {hd:.3}, average hd {avg:.3}\n");
    println!("{}", evaluate(&pred, &truth)?);
    println!("\nempty prediction:");
    println!("{}", evaluate(&Mask::zeros(shape), &truth)?);
    Ok(())
}
