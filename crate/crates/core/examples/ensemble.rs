//! Majority voting over eleven noisy segmentations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voxelseg::ensemble::{ensemble_vote, EnsembleConfig};
use voxelseg::metrics::dice;
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::{Mask, Shape3, Volume};

fn main() -> voxelseg::Result<()> {
    let truth = make_phantom(PhantomKind::TwoLobes, Shape3::cube(24), 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // each member flips 15% of the voxels
    let members: Vec<Mask> = (0..11)
        .map(|_| {
            Mask::from_fn(truth.shape(), |x, y, z| {
                truth.get(x, y, z) ^ rng.random_bool(0.15)
            })
        })
        .collect();
    for (i, m) in members.iter().enumerate().take(3) {
        println!("member {i}: dice {:.4}", dice(m, &truth)?);
    }
    let probs: Vec<Volume> = members.iter().map(Mask::to_volume).collect();
    let vote = ensemble_vote(&probs, &EnsembleConfig::default())?;
    println!("6-of-11 vote: dice {:.4}", dice(&vote, &truth)?);
    Ok(())
}
