//! MedMNIST-style archive loading and checksum handling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cvqnn_core::data::{ImageSet, IMAGE_SIDE};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::npy::NpyArray;

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// A dataset whose class count and split sizes are known in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownDataset {
    pub name: &'static str,
    pub file: &'static str,
    pub num_classes: usize,
    /// Expected `(train, val, test)` sizes, when they are checked.
    pub counts: Option<[usize; 3]>,
}

pub const KNOWN_DATASETS: [KnownDataset; 3] = [
    KnownDataset { name: "pneumonia", file: "pneumoniamnist.npz", num_classes: 2, counts: Some([4708, 524, 624]) },
    KnownDataset { name: "breast", file: "breastmnist.npz", num_classes: 2, counts: Some([546, 78, 156]) },
    // Published archives disagree on the OrganA training size, so only the
    // class count is enforced.
    KnownDataset { name: "organa", file: "organamnist.npz", num_classes: 11, counts: None },
];

/// Looks up `name`, accepting the `...mnist` spellings as well.
pub fn known_dataset(name: &str) -> Option<KnownDataset> {
    let key = name.trim().to_ascii_lowercase();
    let key = key.strip_suffix(".npz").unwrap_or(&key);
    let key = key.strip_suffix("mnist").unwrap_or(key);
    KNOWN_DATASETS.iter().copied().find(|d| d.name == key)
}

/// Canonical short name (`pneumonia`, `breast`, `organa`) or the input lowercased.
pub fn canonical_name(name: &str) -> String {
    known_dataset(name).map_or_else(|| name.trim().to_ascii_lowercase(), |d| d.name.to_string())
}

/// `archive` if given, else the dataset's conventional file name in `data_dir`.
pub fn archive_path(name: &str, archive: Option<&Path>, data_dir: &Path) -> PathBuf {
    match archive {
        Some(p) => p.to_path_buf(),
        None => data_dir.join(known_dataset(name).map_or_else(|| format!("{}.npz", canonical_name(name)), |d| d.file.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub name: String,
    pub train: ImageSet,
    pub val: ImageSet,
    pub test: ImageSet,
    /// Hex SHA-256 of the archive file.
    pub sha256: String,
}

impl Splits {
    pub fn split(&self, which: &str) -> CliResult<&ImageSet> {
        match which {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(CliError::config(format!("unknown split '{other}' (expected train, val or test)"))),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn labels_of(arr: &NpyArray, key: &str, n: usize) -> CliResult<Vec<usize>> {
    let ok_shape = arr.shape == [n] || arr.shape == [n, 1];
    if !ok_shape {
        return Err(CliError::data(format!("{key} has shape {:?}, expected ({n},) or ({n}, 1)", arr.shape)));
    }
    arr.to_integers()
        .into_iter()
        .map(|v| usize::try_from(v).map_err(|_| CliError::data(format!("{key} contains negative label {v}"))))
        .collect()
}

/// `(count, pixels per image)` for an `(n, h, w)` or `(n, h, w, 1)` array.
fn image_shape(arr: &NpyArray, key: &str) -> CliResult<(usize, usize, usize)> {
    match arr.shape.as_slice() {
        [n, h, w] | [n, h, w, 1] => Ok((*n, *h, *w)),
        s => Err(CliError::data(format!("{key} has shape {s:?}; expected grayscale (n, h, w)"))),
    }
}

/// Loads the three splits of `name` from an archive already read into memory.
pub fn parse_archive(bytes: &[u8], name: &str) -> CliResult<Splits> {
    let arrays = crate::npz::parse_npz(bytes)?;
    build_splits(arrays, name, sha256_hex(bytes))
}

pub fn load_archive(path: &Path, name: &str) -> CliResult<Splits> {
    if !path.is_file() {
        return Err(CliError::data(format!("archive {} not found", path.display())));
    }
    let bytes = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    let arrays = crate::npz::parse_npz(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    build_splits(arrays, name, sha256_hex(&bytes))
}

fn build_splits(mut arrays: BTreeMap<String, NpyArray>, name: &str, sha256: String) -> CliResult<Splits> {
    let known = known_dataset(name);
    let canonical = canonical_name(name);
    let mut raw = Vec::with_capacity(3);
    for split in SPLITS {
        let ik = format!("{split}_images");
        let lk = format!("{split}_labels");
        let images = arrays.remove(&ik).ok_or_else(|| CliError::data(format!("archive lacks '{ik}'")))?;
        let labels = arrays.remove(&lk).ok_or_else(|| CliError::data(format!("archive lacks '{lk}'")))?;
        let (n, h, w) = image_shape(&images, &ik)?;
        if known.is_some() && (h, w) != (IMAGE_SIDE, IMAGE_SIDE) {
            return Err(CliError::data(format!("{ik} images are {h}x{w}; {canonical} expects {IMAGE_SIDE}x{IMAGE_SIDE}")));
        }
        let labels = labels_of(&labels, &lk, n)?;
        raw.push((split, images, labels, h * w));
    }
    let num_classes = match known {
        Some(k) => k.num_classes,
        None => {
            let inferred = raw.iter().flat_map(|r| r.2.iter()).max().map_or(0, |m| m + 1);
            log::warn!("'{name}' is not a known dataset; inferred {inferred} classes and skipped size checks");
            inferred.max(2)
        }
    };
    if let Some(counts) = known.and_then(|k| k.counts) {
        for ((split, _, labels, _), want) in raw.iter().zip(counts) {
            if labels.len() != want {
                return Err(CliError::data(format!("{canonical} {split} split has {} samples, expected {want}", labels.len())));
            }
        }
    }
    let mut sets = Vec::with_capacity(3);
    for (split, images, labels, dim) in raw {
        let pixels = images.as_u8().map_err(|e| CliError::data(format!("{split}_images: {e}")))?;
        let set = ImageSet::from_u8(&canonical, dim, num_classes, pixels, labels)
            .map_err(|e| CliError::data(format!("{split} split: {e}")))?;
        sets.push(set);
    }
    let test = sets.pop().unwrap();
    let val = sets.pop().unwrap();
    let train = sets.pop().unwrap();
    Ok(Splits { name: canonical, train, val, test, sha256 })
}

/// Parses `dataset sha256` lines; `#` starts a comment.
pub fn parse_checksums(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(hash), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::config(format!("checksum line {}: expected 'dataset sha256'", i + 1)));
        };
        if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(CliError::config(format!("checksum line {}: '{hash}' is not a SHA-256 hex digest", i + 1)));
        }
        out.insert(canonical_name(name), hash.to_ascii_lowercase());
    }
    Ok(out)
}

/// Fails when `checksums` lists `splits.name` with a different digest.
pub fn verify_checksum(splits: &Splits, checksums: &BTreeMap<String, String>) -> CliResult<()> {
    match checksums.get(&splits.name) {
        Some(want) if *want != splits.sha256 => Err(CliError::data(format!(
            "checksum mismatch for {}: archive is {}, manifest lists {want}",
            splits.name, splits.sha256
        ))),
        Some(_) => Ok(()),
        None => {
            log::warn!("no checksum listed for {}; archive sha256 is {}", splits.name, splits.sha256);
            Ok(())
        }
    }
}
