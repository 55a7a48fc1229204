//! Distance maps and the boundary-voxel bound that the drain relies on.

use voxelseg::distance::{boundary_voxels, distance_to_opposite_label, Connectivity};
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::Shape3;

fn main() -> voxelseg::Result<()> {
    let mask = make_phantom(PhantomKind::TwoLobes, Shape3::new(32, 24, 24)?, 0)?;
    let d = distance_to_opposite_label(&mask)?;
    let (_, deepest) = d.to_volume().min_max();
    println!(
        "mask {} with {} foreground voxels",
        mask.shape(),
        mask.count()
    );
    println!("largest distance to the opposite label: {deepest:.3}");

    for conn in [Connectivity::Six, Connectivity::TwentySix] {
        let boundary = boundary_voxels(&mask, conn);
        let max_on_boundary = boundary
            .iter()
            .map(|&(x, y, z)| d.get(x, y, z))
            .fold(0.0f32, f32::max);
        println!(
            "{:>2}-connected boundary: {} voxels, max D {max_on_boundary:.4} (sqrt 3 = {:.4})",
            conn.count(),
            boundary.len(),
            3f32.sqrt()
        );
    }

    let z = mask.shape().nz() / 2;
    println!("\nD on the middle slice, rounded:");
    for y in 0..mask.shape().ny() {
        let row: String = (0..mask.shape().nx())
            .map(|x| {
                let v = d.get(x, y, z).round() as u32;
                if mask.get(x, y, z) {
                    char::from_digit(v.min(9), 10).unwrap()
                } else {
                    '.'
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
