//! Component labeling, largest-component cleanup and count statistics.

use voxelseg::components::{component_stats, label_components, largest_component};
use voxelseg::distance::Connectivity;
use voxelseg::{Mask, Shape3};

fn main() -> voxelseg::Result<()> {
    let shape = Shape3::cube(12);
    let blob = |c: (i64, i64, i64), r: i64| {
        move |x: usize, y: usize, z: usize| {
            let d = [x as i64 - c.0, y as i64 - c.1, z as i64 - c.2];
            d.iter().map(|v| v * v).sum::<i64>() <= r * r
        }
    };
    let main_part = blob((5, 5, 5), 4);
    let speck = blob((11, 11, 11), 0);
    let corner = |x, y, z| (x, y, z) == (10, 10, 10);
    let noisy = Mask::from_fn(shape, |x, y, z| {
        main_part(x, y, z) || speck(x, y, z) || corner(x, y, z)
    });

    for conn in [Connectivity::Six, Connectivity::TwentySix] {
        let l = label_components(&noisy, conn);
        println!(
            "{:>2}-connectivity: {} components, sizes {:?}",
            conn.count(),
            l.count,
            l.sizes
        );
    }
    let clean = largest_component(&noisy, Connectivity::TwentySix)?;
    println!(
        "largest component keeps {} of {} voxels",
        clean.count(),
        noisy.count()
    );

    let stats = component_stats(&[noisy, clean], Connectivity::Six)?;
    println!(
        "component count over two masks: mean {} stddev {} max {}",
        stats.mean, stats.stddev, stats.max
    );
    Ok(())
}
