//! Contour loss value and gradient on a soft sphere, with and without drain.

use voxelseg::distance::distance_to_opposite_label;
use voxelseg::loss::{contour_loss, soft_dice_loss, ContourLossConfig};
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::{Shape3, Volume};

fn main() -> voxelseg::Result<()> {
    let target = make_phantom(PhantomKind::Sphere, Shape3::cube(16), 0)?;
    let d = distance_to_opposite_label(&target)?;
    // soft mask: logistic of the signed distance
    let p = Volume::from_fn(target.shape(), |x, y, z| {
        let s = if target.get(x, y, z) { 1.0 } else { -1.0 };
        1.0 / (1.0 + (-2.0 * s * d.get(x, y, z)).exp())
    })?;

    for drain in [0.0f32, -1.8] {
        let cfg = ContourLossConfig::with_drain(drain);
        let r = contour_loss(&p, &d, &cfg)?;
        let (lo, hi) = r.gradient.min_max();
        println!(
            "drain {drain:>4}: loss {:>10.3}, gradient range [{lo:.2}, {hi:.2}], covers boundary: {}",
            r.value,
            cfg.drain_covers_boundary()
        );
    }
    let capped = ContourLossConfig {
        distance_cap: Some(4.0),
        ..Default::default()
    };
    println!(
        "drain -1.8 with D capped at 4: loss {:.3}",
        contour_loss(&p, &d, &capped)?.value
    );

    let dice = soft_dice_loss(&p, &target, 1.0)?;
    println!("soft Dice loss of the soft mask: {:.4}", dice.value);
    Ok(())
}
