#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvqnn::npy::{DType, NpyArray};
use cvqnn::npz::write_npz;
use cvqnn_core::rng::Xoshiro256;

pub const SIDE: usize = 28;

/// A bright 8x8 square whose position depends on the class, over dim noise.
fn image(class: usize, rng: &mut Xoshiro256) -> Vec<u8> {
    let (r0, c0) = [(2, 2), (18, 18), (10, 10), (2, 18)][class % 4];
    let mut px = vec![0u8; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let bright = (r0..r0 + 8).contains(&r) && (c0..c0 + 8).contains(&c);
            let base = if bright { 170 } else { 10 };
            px[r * SIDE + c] = base + rng.below(60) as u8;
        }
    }
    px
}

/// Writes a MedMNIST-layout archive with `counts` images per split.
pub fn write_archive(path: &Path, classes: usize, counts: [usize; 3], seed: u64) {
    let mut rng = Xoshiro256::new(seed);
    let mut arrays = Vec::new();
    for (split, n) in ["train", "val", "test"].into_iter().zip(counts) {
        let labels: Vec<u8> = (0..n).map(|i| (i % classes) as u8).collect();
        let pixels: Vec<u8> = labels.iter().flat_map(|&l| image(l as usize, &mut rng)).collect();
        arrays.push((format!("{split}_images"), NpyArray::from_u8(vec![n, SIDE, SIDE], pixels)));
        arrays.push((format!("{split}_labels"), NpyArray { dtype: DType::U8, shape: vec![n, 1], data: labels }));
    }
    let refs: Vec<(&str, &NpyArray)> = arrays.iter().map(|(k, v)| (k.as_str(), v)).collect();
    write_npz(path, &refs).unwrap();
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqnn")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs `train` and returns the output directory.
pub fn train(archive: &Path, out: &Path, model: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec![
        "train",
        "--dataset",
        "toy",
        "--archive",
        archive.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        model,
        "--epochs",
        "3",
        "--batch-size",
        "8",
        "--lr",
        "0.05",
    ];
    args.extend_from_slice(extra);
    let res = run(&args);
    assert_eq!(code(&res), 0, "train failed: {}", stderr(&res));
    out.to_path_buf()
}
