//! Gradient descent on a free logit volume: the flat start that never moves
//! without drain, the drained contour fit, and Dice against mixed losses.

use voxelseg::loss::DEFAULT_DRAIN;
use voxelseg::optimize::{fit_volume, make_phantom, InitKind, OptimizeConfig, PhantomKind};
use voxelseg::Shape3;

fn main() -> voxelseg::Result<()> {
    let sphere = make_phantom(PhantomKind::Sphere, Shape3::cube(16), 0)?;

    let flat = OptimizeConfig {
        init: InitKind::UniformLogit,
        ..OptimizeConfig::contour_only(0.0, 0)
    };
    let t = fit_volume(&sphere, &flat)?;
    println!(
        "drain 0, flat start: final loss {}, dice {:.3}",
        t.final_loss(),
        t.metrics.dice
    );

    let t = fit_volume(&sphere, &OptimizeConfig::contour_only(DEFAULT_DRAIN, 0))?;
    let first_negative = t.losses.iter().position(|&l| l < 0.0);
    println!(
        "drain -1.8: loss {:.1} -> {:.1} (negative from step {first_negative:?}), avg hd {:?}",
        t.losses[0],
        t.final_loss(),
        t.metrics.avg_hausdorff
    );

    println!("\ntwo lobes, dice-only vs mixed:");
    for seed in 0..3 {
        let target = make_phantom(PhantomKind::TwoLobes, Shape3::cube(16), seed)?;
        let d = fit_volume(&target, &OptimizeConfig::dice_only(seed))?;
        let m = fit_volume(&target, &OptimizeConfig::mixed(DEFAULT_DRAIN, seed))?;
        println!(
            "  seed {seed}: dice {:.3} / {:.3}, avg hd {:.3} / {:.3}, components {} / {}",
            d.metrics.dice,
            m.metrics.dice,
            d.metrics.avg_hausdorff.unwrap_or(f64::NAN),
            m.metrics.avg_hausdorff.unwrap_or(f64::NAN),
            d.metrics.components,
            m.metrics.components
        );
    }
    Ok(())
}
