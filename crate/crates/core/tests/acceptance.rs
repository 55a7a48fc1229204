//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use voxelseg::components::{label_components, largest_component};
use voxelseg::distance::{boundary_voxels, distance_to_opposite_label, Connectivity};
use voxelseg::ensemble::{ensemble_vote, EnsembleConfig};
use voxelseg::filter::{correlate3, correlate3_adjoint, Axis, SobelKernels};
use voxelseg::io::{read_nifti1, read_rvol, write_rvol, RvolData};
use voxelseg::loss::{contour_loss, soft_dice_loss, ContourLossConfig, DEFAULT_DRAIN};
use voxelseg::metrics::{confusion, dice, hausdorff, HausdorffMode};
use voxelseg::optimize::{fit_volume, make_phantom, InitKind, OptimizeConfig, PhantomKind};
use voxelseg::pipeline::{
    crop, paste_back, run_two_stage, CropSpec, ExternalPredictor, IntensityThreshold,
    OraclePerturb, PipelineConfig,
};
use voxelseg::{Error, Mask, Shape3, Volume};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    ensure(start.elapsed() < limit, || {
        format!("took {secs:.1} s, limit {} s", limit.as_secs())
    })?;
    Ok(secs)
}

fn criterion_1_edt_exact() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let shape = loop {
            let s = random_shape(&mut rng, 10);
            if s.len() >= 2 {
                break s;
            }
        };
        let m = random_two_label_mask(&mut rng, shape);
        let d = distance_to_opposite_label(&m).map_err(|e| format!("case {case}: {e}"))?;
        for (i, &want) in brute_edt(&m).iter().enumerate() {
            let err = (d.data()[i] as f64 - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-5, || {
                format!(
                    "case {case} shape {shape} voxel {i}: got {} want {want}",
                    d.data()[i]
                )
            })?;
        }
    }
    for m in [
        Mask::zeros(Shape3::cube(4)),
        Mask::ones(Shape3::new(3, 2, 5).unwrap()),
    ] {
        ensure(
            matches!(distance_to_opposite_label(&m), Err(Error::SingleLabel)),
            || "uniform mask did not raise the single-label error".into(),
        )?;
    }
    let secs = within(start, Duration::from_secs(10))?;
    Ok(format!("100 masks, max abs error {worst:.1e}, {secs:.2} s"))
}

fn criterion_2_drain_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let bound = 3f64.sqrt() + 1e-6;
    let mut checked = 0usize;
    let mut largest = 0.0f64;
    for case in 0..50 {
        let shape = loop {
            let s = random_shape(&mut rng, 12);
            if s.len() >= 2 {
                break s;
            }
        };
        let m = random_two_label_mask(&mut rng, shape);
        let d = distance_to_opposite_label(&m).map_err(|e| e.to_string())?;
        let scanned: Vec<(usize, usize, usize)> = coords(shape)
            .into_iter()
            .enumerate()
            .filter(|&(i, (x, y, z))| {
                neighbors26(shape, x, y, z)
                    .iter()
                    .any(|&j| m.is_set(j) != m.is_set(i))
            })
            .map(|(_, c)| c)
            .collect();
        let reported = boundary_voxels(&m, Connectivity::TwentySix);
        ensure(reported == scanned, || {
            format!("case {case}: boundary set differs from neighbor scan")
        })?;
        for &(x, y, z) in &scanned {
            let v = d.get(x, y, z) as f64;
            largest = largest.max(v);
            ensure(v <= bound && v + DEFAULT_DRAIN as f64 <= 0.0, || {
                format!("case {case}: boundary voxel ({x},{y},{z}) has D = {v}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} boundary voxels, max D {largest:.6}"))
}

/// Central differences of `f` at voxel `i`, dividing by the exact step.
fn central_difference(p: &[f64], i: usize, eps: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut hi = p.to_vec();
    let mut lo = p.to_vec();
    hi[i] += eps;
    lo[i] -= eps;
    (f(&hi) - f(&lo)) / (hi[i] - lo[i])
}

fn near_kink(shape: Shape3, p: &[f64], i: usize, eps: f64) -> bool {
    let mut hi = p.to_vec();
    let mut lo = p.to_vec();
    hi[i] += eps;
    lo[i] -= eps;
    let (rh, rl) = (naive_responses(shape, &hi), naive_responses(shape, &lo));
    (0..3).any(|a| {
        rh[a].iter().zip(&rl[a]).any(|(&h, &l)| {
            h != l && (h.abs() <= 1e-6 || l.abs() <= 1e-6 || h.signum() != l.signum())
        })
    })
}

fn relative(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-6)
}

fn criterion_3_gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let shape = Shape3::cube(6);
    let eps = 1e-3;
    let (mut worst_c, mut worst_d, mut skipped, mut compared) = (0.0f64, 0.0f64, 0usize, 0usize);
    for case in 0..20 {
        let p = Volume::from_fn(shape, |_, _, _| rng.random::<f32>()).unwrap();
        let m = random_two_label_mask(&mut rng, shape);
        let d = distance_to_opposite_label(&m).unwrap();
        let pf = to_f64(&p);
        let df: Vec<f64> = d.data().iter().map(|&v| v as f64).collect();
        let cfg = ContourLossConfig::default();
        let drain = cfg.drain as f64;

        let c = contour_loss(&p, &d, &cfg).map_err(|e| e.to_string())?;
        for i in 0..shape.len() {
            if near_kink(shape, &pf, i, eps) {
                skipped += 1;
                continue;
            }
            compared += 1;
            let fd = central_difference(&pf, i, eps, |q| naive_contour_loss(shape, q, &df, drain));
            let err = relative(c.gradient.data()[i] as f64, fd);
            worst_c = worst_c.max(err);
            ensure(err < 1e-3, || {
                format!(
                    "contour case {case} voxel {i}: analytic {} fd {fd}",
                    c.gradient.data()[i]
                )
            })?;
        }

        let s = soft_dice_loss(&p, &m, 1.0).map_err(|e| e.to_string())?;
        for i in 0..shape.len() {
            let fd = central_difference(&pf, i, eps, |q| naive_soft_dice(q, &m, 1.0));
            let err = relative(s.gradient.data()[i] as f64, fd);
            worst_d = worst_d.max(err);
            ensure(err < 1e-3, || {
                format!(
                    "dice case {case} voxel {i}: analytic {} fd {fd}",
                    s.gradient.data()[i]
                )
            })?;
        }
    }

    let kernels = SobelKernels::new();
    let mut worst_adj = 0.0f64;
    for _ in 0..20 {
        let s = random_shape(&mut rng, 7);
        let u = Volume::from_fn(s, |_, _, _| rng.random_range(-1.0f32..1.0)).unwrap();
        let v = Volume::from_fn(s, |_, _, _| rng.random_range(-1.0f32..1.0)).unwrap();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let k = kernels.get(axis);
            let dot = |a: &Volume, b: &Volume| -> f64 {
                a.data()
                    .iter()
                    .zip(b.data())
                    .map(|(&x, &y)| x as f64 * y as f64)
                    .sum()
            };
            let lhs = dot(&correlate3(&u, k), &v);
            let rhs = dot(&u, &correlate3_adjoint(&v, k));
            let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12);
            worst_adj = worst_adj.max(err);
            ensure(err < 1e-4, || {
                format!("adjoint {axis:?} on {s}: {lhs} vs {rhs}")
            })?;
        }
    }
    Ok(format!(
        "contour max rel {worst_c:.1e} ({compared} voxels, {skipped} near kinks), dice max rel {worst_d:.1e}, adjoint max rel {worst_adj:.1e}"
    ))
}

fn sphere() -> Mask {
    make_phantom(PhantomKind::Sphere, Shape3::cube(16), 0).unwrap()
}

fn criterion_4_degenerate_minimum() -> Check {
    let start = Instant::now();
    let target = sphere();

    let drained = fit_volume(&target, &OptimizeConfig::contour_only(DEFAULT_DRAIN, 0))
        .map_err(|e| e.to_string())?;
    let initial = drained.losses[0].abs();
    let avg = drained.metrics.avg_hausdorff.unwrap_or(f64::INFINITY);
    ensure(drained.final_loss() < 0.0 && avg < 1.0, || {
        format!(
            "drain -1.8: final loss {} avg HD {avg}",
            drained.final_loss()
        )
    })?;

    let stalled_cfg = OptimizeConfig {
        init: InitKind::UniformLogit,
        ..OptimizeConfig::contour_only(0.0, 0)
    };
    let stalled = fit_volume(&target, &stalled_cfg).map_err(|e| e.to_string())?;
    let peak = stalled.losses.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    ensure(peak <= 1e-3 * initial && stalled.metrics.dice < 0.5, || {
        format!("drain 0: max |loss| {peak} dice {}", stalled.metrics.dice)
    })?;

    for kind in [PhantomKind::Ellipsoid, PhantomKind::TwoLobes] {
        let t = make_phantom(kind, Shape3::cube(16), 0).unwrap();
        let run = fit_volume(&t, &OptimizeConfig::contour_only(DEFAULT_DRAIN, 0))
            .map_err(|e| e.to_string())?;
        ensure(run.final_loss() < 0.0, || {
            format!("{kind}: final loss {}", run.final_loss())
        })?;
    }
    let secs = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "drain -1.8: loss {:.1} -> {:.1}, avg HD {avg:.3}; drain 0: max |loss| {peak}, dice {:.3}; {secs:.1} s",
        drained.losses[0],
        drained.final_loss(),
        stalled.metrics.dice
    ))
}

fn criterion_5_mixed_vs_dice() -> Check {
    let mut wins = 0;
    let mut ties = 0;
    let mut rows = Vec::new();
    let mut more_components = false;
    for seed in 0..5u64 {
        let t = make_phantom(PhantomKind::TwoLobes, Shape3::cube(16), seed).unwrap();
        let d = fit_volume(&t, &OptimizeConfig::dice_only(seed)).map_err(|e| e.to_string())?;
        let m = fit_volume(&t, &OptimizeConfig::mixed(DEFAULT_DRAIN, seed))
            .map_err(|e| e.to_string())?;
        let (da, ma) = (
            d.metrics.avg_hausdorff.unwrap_or(f64::INFINITY),
            m.metrics.avg_hausdorff.unwrap_or(f64::INFINITY),
        );
        if ma <= da {
            wins += 1;
        }
        if ma == da {
            ties += 1;
        }
        more_components |= m.metrics.components > d.metrics.components;
        rows.push(format!(
            "seed {seed}: avg HD mixed {ma:.3} dice {da:.3}, components {} vs {}",
            m.metrics.components, d.metrics.components
        ));
    }
    let summary = format!(
        "mixed <= dice-only in {wins}/5 seeds ({ties} ties); {}",
        rows.join("; ")
    );
    if wins >= 4 && !more_components {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion_6_metrics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let shape = Shape3::cube(8);
    for case in 0..200 {
        let (a, b) = loop {
            let da = rng.random_range(0.02..0.9);
            let db = rng.random_range(0.02..0.9);
            let a = random_mask(&mut rng, shape, da);
            let b = random_mask(&mut rng, shape, db);
            if a.count() > 0 && b.count() > 0 {
                break (a, b);
            }
        };
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for i in 0..shape.len() {
            match (a.is_set(i), b.is_set(i)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let c = confusion(&a, &b).unwrap();
        ensure((c.tp, c.fp, c.fn_, c.tn) == (tp, fp, fn_, tn), || {
            format!("case {case}: confusion {c:?}")
        })?;
        let want_dice = 2.0 * tp as f64 / (a.count() + b.count()) as f64;
        ensure(dice(&a, &b).unwrap() == want_dice, || {
            format!("case {case}: dice")
        })?;

        let (sa, sb) = (brute_surface(&a), brute_surface(&b));
        let d_ab = brute_directed(shape, &sa, &sb);
        let d_ba = brute_directed(shape, &sb, &sa);
        let want_max = d_ab.iter().chain(&d_ba).fold(0.0f64, |m, &v| m.max(v));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let want_avg = (mean(&d_ab) + mean(&d_ba)) / 2.0;
        let max = hausdorff(&a, &b, HausdorffMode::Max).unwrap();
        let avg = hausdorff(&a, &b, HausdorffMode::Average).unwrap();
        ensure(max == want_max && avg == want_avg, || {
            format!("case {case}: HD {max}/{avg}, oracle {want_max}/{want_avg}")
        })?;
        let max_r = hausdorff(&b, &a, HausdorffMode::Max).unwrap();
        let avg_r = hausdorff(&b, &a, HausdorffMode::Average).unwrap();
        ensure(max_r == max && avg_r == avg && avg <= max, || {
            format!("case {case}: asymmetric or avg > max")
        })?;
    }
    Ok("200 pairs match confusion, dice and both Hausdorff oracles exactly".into())
}

fn twin_cubes() -> (Mask, usize) {
    // The cube at high x and low z comes first in storage order.
    let shape = Shape3::new(10, 6, 8).unwrap();
    let inside = |o: (usize, usize, usize), x: usize, y: usize, z: usize| {
        (o.0..o.0 + 2).contains(&x) && (o.1..o.1 + 2).contains(&y) && (o.2..o.2 + 2).contains(&z)
    };
    let early = (7, 3, 1);
    let late = (1, 0, 5);
    let m = Mask::from_fn(shape, |x, y, z| {
        inside(early, x, y, z) || inside(late, x, y, z)
    });
    (m, shape.index(early.0, early.1, early.2))
}

fn criterion_7_components() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let shape = Shape3::cube(10);
    let mut total = 0usize;
    for case in 0..100 {
        let density = rng.random_range(0.05..0.6);
        let m = random_mask(&mut rng, shape, density);
        for (six, conn) in [(true, Connectivity::Six), (false, Connectivity::TwentySix)] {
            let got = label_components(&m, conn);
            let (want, count) = flood_fill(&m, six);
            ensure(
                got.count == count && same_partition(&got.labels, &want),
                || format!("case {case} {conn:?}: partition differs"),
            )?;
            let mut sizes = vec![0usize; count + 1];
            want.iter().for_each(|&l| sizes[l as usize] += 1);
            let mut sorted: Vec<usize> = sizes[1..].to_vec();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            ensure(got.sizes == sorted, || format!("case {case}: sizes"))?;
            total += count;
        }
    }

    let (m, early_index) = twin_cubes();
    for conn in [Connectivity::Six, Connectivity::TwentySix] {
        let lab = label_components(&m, conn);
        ensure(lab.count == 2 && lab.sizes == vec![8, 8], || {
            "twin fixture".into()
        })?;
        ensure(lab.labels[early_index] == 1, || {
            "tie not broken by smallest flat index".into()
        })?;
        let kept = largest_component(&m, conn).unwrap();
        ensure(kept.count() == 8 && kept.is_set(early_index), || {
            "largest_component kept the wrong twin".into()
        })?;
    }
    Ok(format!(
        "100 masks x 2 connectivities, {total} components; twin tie-break ok"
    ))
}

fn ellipsoid_case() -> (Mask, Volume) {
    let shape = Shape3::new(96, 80, 64).unwrap();
    let truth = make_phantom(PhantomKind::Ellipsoid, shape, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let noise = rand_distr::Normal::new(0.0f32, 10.0).unwrap();
    let image = Volume::new(
        shape,
        truth
            .data()
            .iter()
            .map(|&b| if b == 1 { 200.0 } else { 50.0 } + rng.sample(noise))
            .collect(),
    )
    .unwrap();
    (truth, image)
}

/// Window placement from its definition, per axis.
fn place_oracle(center: i64, s: usize, n: usize) -> (i64, usize, usize) {
    if s <= n {
        ((center - (s / 2) as i64).clamp(0, (n - s) as i64), 0, 0)
    } else {
        let pad = s - n;
        (-((pad / 2) as i64), pad / 2, pad - pad / 2)
    }
}

fn criterion_8_pipeline() -> Check {
    let start = Instant::now();
    let (truth, image) = ellipsoid_case();
    let cfg = PipelineConfig::default();
    let out = run_two_stage(
        &image,
        &OraclePerturb::new(truth.clone(), 11),
        &OraclePerturb::new(truth.clone(), 12),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let score = dice(&out.mask, &truth).unwrap();
    ensure(score >= 0.95, || format!("dice {score}"))?;

    let round = paste_back(&crop(&image, &out.crop).unwrap(), &out.crop, image.shape()).unwrap();
    ensure(round == image, || {
        "crop/paste round trip of the run's window differs".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(809);
    let window = cfg.crop_shape;
    for case in 0..1000 {
        let img = Shape3::new(
            rng.random_range(1..=300),
            rng.random_range(1..=300),
            rng.random_range(1..=200),
        )
        .unwrap();
        let center: [i64; 3] =
            std::array::from_fn(|a| rng.random_range(-40..img.dims()[a] as i64 + 40));
        let spec = CropSpec::place(center, window, img);
        for (a, &c) in center.iter().enumerate() {
            let want = place_oracle(c, window.dims()[a], img.dims()[a]);
            ensure(
                (spec.origin[a], spec.pre_pad[a], spec.post_pad[a]) == want,
                || format!("case {case} axis {a}: {spec:?} vs {want:?} for image {img}"),
            )?;
        }
        spec.validate(img)
            .map_err(|e| format!("case {case}: {e}"))?;
    }

    for case in 0..100 {
        let img = random_shape(&mut rng, 12);
        let size = random_shape(&mut rng, 14);
        let v = Volume::from_fn(img, |_, _, _| rng.random_range(0.5f32..1.0)).unwrap();
        let center: [i64; 3] = std::array::from_fn(|a| rng.random_range(0..img.dims()[a] as i64));
        let spec = CropSpec::place(center, size, img);
        let pasted = paste_back(&crop(&v, &spec).unwrap(), &spec, img).unwrap();
        for (i, (x, y, z)) in coords(img).into_iter().enumerate() {
            let inside = (0..3).all(|a| {
                let c = [x, y, z][a] as i64;
                c >= spec.origin[a] && c < spec.origin[a] + size.dims()[a] as i64
            });
            let want = if inside { v.data()[i] } else { 0.0 };
            ensure(pasted.data()[i].to_bits() == want.to_bits(), || {
                format!("round trip case {case} voxel {i}")
            })?;
        }
    }
    let secs = within(start, Duration::from_secs(30))?;
    Ok(format!(
        "dice {score:.4}, window origin {:?}, 1000 placements + 100 round trips exact, {secs:.1} s",
        out.crop.origin
    ))
}

fn criterion_9_ensemble() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let shape = Shape3::new(6, 5, 4).unwrap();
    let cfg = EnsembleConfig::default();
    for case in 0..100 {
        let inputs: Vec<Mask> = (0..11).map(|_| random_mask(&mut rng, shape, 0.5)).collect();
        let probs: Vec<Volume> = inputs.iter().map(Mask::to_volume).collect();
        let got = ensemble_vote(&probs, &cfg).unwrap();
        let want = Mask::from_fn(shape, |x, y, z| {
            inputs.iter().filter(|m| m.get(x, y, z)).count() >= 6
        });
        ensure(got == want, || {
            format!("case {case}: not the 6-of-11 majority")
        })?;

        let soft: Vec<Volume> = (0..11)
            .map(|_| Volume::from_fn(shape, |_, _, _| rng.random::<f32>()).unwrap())
            .collect();
        let base = ensemble_vote(&soft, &cfg).unwrap();
        let mut shuffled = soft.clone();
        shuffled.shuffle(&mut rng);
        ensure(ensemble_vote(&shuffled, &cfg).unwrap() == base, || {
            format!("case {case}: permutation changed the result")
        })?;
        let mut raised = soft.clone();
        let k = rng.random_range(0..11);
        raised[k] = raised[k].map(|v| v + (1.0 - v) * 0.5).unwrap();
        let up = ensemble_vote(&raised, &cfg).unwrap();
        let lower = EnsembleConfig {
            threshold: 4.5,
            ..cfg
        };
        let loose = ensemble_vote(&soft, &lower).unwrap();
        ensure(
            (0..shape.len()).all(|i| !base.is_set(i) || (up.is_set(i) && loose.is_set(i))),
            || format!("case {case}: not monotone"),
        )?;
    }
    Ok("100 majority cases, permutation and monotonicity fuzz ok".into())
}

fn nifti_fixture() -> (Vec<u8>, Vec<f32>) {
    let mut b = vec![0u8; 352];
    b[0..4].copy_from_slice(&348i32.to_le_bytes());
    for (i, d) in [3i16, 3, 2, 2].iter().enumerate() {
        b[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    b[70..72].copy_from_slice(&4i16.to_le_bytes());
    b[72..74].copy_from_slice(&16i16.to_le_bytes());
    b[108..112].copy_from_slice(&352f32.to_le_bytes());
    b[112..116].copy_from_slice(&0.5f32.to_le_bytes());
    b[116..120].copy_from_slice(&(-3f32).to_le_bytes());
    b[344..348].copy_from_slice(b"n+1\0");
    let stored: Vec<i16> = (0..12).map(|i| i * 7 - 20).collect();
    for v in &stored {
        b.extend_from_slice(&v.to_le_bytes());
    }
    (b, stored.iter().map(|&v| v as f32 * 0.5 - 3.0).collect())
}

fn criterion_10_formats() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut shapes: Vec<Shape3> = (0..30).map(|_| random_shape(&mut rng, 64)).collect();
    shapes.push(Shape3::cube(64));
    for (case, &s) in shapes.iter().enumerate() {
        let v = Volume::from_fn(s, |_, _, _| {
            f32::from_bits(rng.random::<u32>() & 0xbf7f_ffff)
        })
        .unwrap();
        let m = random_mask(&mut rng, s, 0.3);
        for data in [RvolData::F32(v), RvolData::U8(m)] {
            let path = dir.path().join(format!("case{case}.rvol"));
            write_rvol(&path, &data).map_err(|e| e.to_string())?;
            let bytes = fs::read(&path).unwrap();
            let back = read_rvol(&path).map_err(|e| e.to_string())?;
            let same = match (&data, &back) {
                (RvolData::F32(a), RvolData::F32(b)) => {
                    a.shape() == b.shape()
                        && a.data()
                            .iter()
                            .zip(b.data())
                            .all(|(x, y)| x.to_bits() == y.to_bits())
                }
                (RvolData::U8(a), RvolData::U8(b)) => a == b,
                _ => false,
            };
            ensure(same, || format!("case {case}: round trip differs"))?;
            write_rvol(&path, &back).unwrap();
            ensure(fs::read(&path).unwrap() == bytes, || {
                format!("case {case}: rewrite changed bytes")
            })?;
        }
    }

    let (bytes, want) = nifti_fixture();
    let nii = dir.path().join("fixture.nii");
    fs::write(&nii, bytes).unwrap();
    let v = read_nifti1(&nii).map_err(|e| e.to_string())?;
    ensure(
        v.shape() == Shape3::new(3, 2, 2).unwrap() && v.data() == want.as_slice(),
        || format!("nifti decoded {:?}", v.data()),
    )?;

    let (truth, image) = protocol_case();
    let stub = write_stub(
        dir.path(),
        "stub.sh",
        &format!(
            "#!/bin/sh\nexec '{}' predict --builtin intensity-threshold \"$1\"\n",
            env!("CARGO_BIN_EXE_voxelseg")
        ),
    );
    let cfg = small_pipeline();
    let stage1 = OraclePerturb::new(truth, 3);
    let external = run_two_stage(&image, &stage1, &ExternalPredictor::new(&stub), &cfg)
        .map_err(|e| e.to_string())?;
    let direct = run_two_stage(&image, &stage1, &IntensityThreshold, &cfg).unwrap();
    ensure(external.probability == direct.probability, || {
        "external predictor output differs from the in-process predictor".into()
    })?;

    let failing = write_stub(
        dir.path(),
        "fail.sh",
        "#!/bin/sh\necho broken >&2\nexit 3\n",
    );
    let err = run_two_stage(&image, &stage1, &ExternalPredictor::new(&failing), &cfg)
        .err()
        .map(|e| e.to_string())
        .unwrap_or_default();
    ensure(
        err.starts_with("stage 2:") && err.contains("broken"),
        || format!("failing stub reported {err:?}"),
    )?;
    Ok(format!(
        "{} rvol round trips, nifti fixture, stub predictor protocol ok",
        shapes.len() * 2
    ))
}

fn protocol_case() -> (Mask, Volume) {
    let shape = Shape3::new(20, 18, 16).unwrap();
    let truth = make_phantom(PhantomKind::Sphere, shape, 1).unwrap();
    let image = truth.to_volume().map(|v| 10.0 + 90.0 * v).unwrap();
    (truth, image)
}

fn small_pipeline() -> PipelineConfig {
    PipelineConfig {
        coarse_shape: Shape3::cube(10),
        crop_shape: Shape3::new(14, 12, 12).unwrap(),
        ..Default::default()
    }
}

fn write_stub(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 10] = [
        ("EDT exactness", criterion_1_edt_exact),
        ("drain bound on boundary voxels", criterion_2_drain_bound),
        ("gradient correctness", criterion_3_gradients),
        ("degenerate minimum", criterion_4_degenerate_minimum),
        ("mixed vs dice-only", criterion_5_mixed_vs_dice),
        ("metrics oracles", criterion_6_metrics),
        ("component labeling", criterion_7_components),
        ("pipeline end to end", criterion_8_pipeline),
        ("ensemble semantics", criterion_9_ensemble),
        ("format round trips", criterion_10_formats),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
