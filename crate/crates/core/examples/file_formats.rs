//! Writing and reading `.rvol` volumes and decoding a minimal NIfTI-1 file.

use std::fs;

use voxelseg::io::{load_volume, read_rvol, write_mask, write_volume, RvolData};
use voxelseg::optimize::{make_phantom, PhantomKind};
use voxelseg::{Shape3, Volume};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let v = Volume::from_fn(Shape3::new(4, 3, 2)?, |x, y, z| {
        x as f32 - 0.5 * y as f32 + z as f32
    })?;
    let path = dir.path().join("ramp.rvol");
    write_volume(&path, &v)?;
    println!(
        "sidecar: {}",
        fs::read_to_string(path.with_extension("json"))?
    );
    println!("payload bytes: {}", fs::metadata(&path)?.len());
    assert_eq!(read_rvol(&path)?.into_volume(), v);

    let m = make_phantom(PhantomKind::Sphere, Shape3::cube(16), 0)?;
    let mpath = dir.path().join("sphere.rvol");
    write_mask(&mpath, &m)?;
    match read_rvol(&mpath)? {
        RvolData::U8(back) => println!("mask round trip equal: {}", back == m),
        RvolData::F32(_) => unreachable!("masks are stored as u8"),
    }

    // 2x2x1 int16 image with slope 2 and intercept 10
    let mut nii = vec![0u8; 352];
    nii[0..4].copy_from_slice(&348i32.to_le_bytes());
    for (i, d) in [3i16, 2, 2, 1].iter().enumerate() {
        nii[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    nii[70..72].copy_from_slice(&4i16.to_le_bytes());
    nii[72..74].copy_from_slice(&16i16.to_le_bytes());
    nii[108..112].copy_from_slice(&352f32.to_le_bytes());
    nii[112..116].copy_from_slice(&2f32.to_le_bytes());
    nii[116..120].copy_from_slice(&10f32.to_le_bytes());
    nii[344..348].copy_from_slice(b"n+1\0");
    for v in [1i16, -2, 3, 40] {
        nii.extend_from_slice(&v.to_le_bytes());
    }
    let npath = dir.path().join("tiny.nii");
    fs::write(&npath, nii)?;
    let img = load_volume(&npath)?;
    println!("nifti {} -> {:?}", img.shape(), img.data());
    Ok(())
}
