//! Coarse-to-fine segmentation of a synthetic image with seeded reference
//! predictors standing in for trained networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use voxelseg::components::largest_component;
use voxelseg::distance::Connectivity;
use voxelseg::metrics::evaluate;
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::pipeline::{run_two_stage, IntensityThreshold, OraclePerturb, PipelineConfig};
use voxelseg::{Shape3, Volume};

fn main() -> voxelseg::Result<()> {
    let shape = Shape3::new(96, 80, 64)?;
    let truth = make_phantom(PhantomKind::Ellipsoid, shape, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise = Normal::new(0.0f32, 15.0).unwrap();
    let image = Volume::new(
        shape,
        truth
            .data()
            .iter()
            .map(|&b| if b == 1 { 180.0 } else { 60.0 } + rng.sample(noise))
            .collect(),
    )?;

    let cfg = PipelineConfig::default();
    let stage1 = OraclePerturb::new(truth.clone(), 1);
    for (name, stage2) in [
        (
            "oracle-perturb",
            &OraclePerturb::new(truth.clone(), 2) as &dyn voxelseg::pipeline::Predictor,
        ),
        ("intensity-threshold", &IntensityThreshold),
    ] {
        let out = run_two_stage(&image, &stage1, stage2, &cfg)?;
        println!("stage 2 = {name}");
        println!(
            "  window origin {:?}, size {}, padding {:?} / {:?}",
            out.crop.origin, out.crop.size, out.crop.pre_pad, out.crop.post_pad
        );
        for t in &out.diagnostics.timings {
            println!("  {:<10} {:>8.4} s", t.step, t.seconds);
        }
        let r = evaluate(&out.mask, &truth)?;
        println!(
            "  dice {:.4}, hd {:?}, components {}",
            r.dice, r.hausdorff, r.components
        );
        let kept = largest_component(&out.mask, Connectivity::TwentySix)?;
        let r = evaluate(&kept, &truth)?;
        println!(
            "  largest component only: dice {:.4}, hd {:?}, fp {}, fn {}",
            r.dice, r.hausdorff, r.fp, r.fn_
        );
    }
    Ok(())
}
