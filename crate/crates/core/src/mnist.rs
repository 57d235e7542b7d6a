//! IDX reader/writer and the balanced MNIST 1-vs-7 task.
//!
//! IDX files are big-endian: a `u32` magic (2051 for images, 2049 for
//! labels), `u32` dimensions, then raw `u8` payload. Gzip-compressed files
//! are recognised by their `1f 8b` prefix.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::logreg::LabeledDataset;
use crate::loss::Label;

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Digit mapped to label +1.
pub const POSITIVE_DIGIT: u8 = 1;
/// Digit mapped to label -1.
pub const NEGATIVE_DIGIT: u8 = 7;
pub const TRAIN_POOL_PER_CLASS: usize = 6_250;
pub const TEST_PER_CLASS: usize = 1_025;
pub const VALIDATION_SIZE: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, image-major.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }

    /// Serializes back to IDX bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        for v in [IMAGES_MAGIC, self.count as u32, self.rows as u32, self.cols as u32] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found == expected {
        Ok(())
    } else {
        Err(Error::WrongMagic { expected, found })
    }
}

fn check_length(bytes: &[u8], expected: usize) -> Result<()> {
    match bytes.len() {
        n if n < expected => Err(Error::Truncated { expected, found: n }),
        n if n > expected => Err(Error::TrailingBytes(n - expected)),
        _ => Ok(()),
    }
}

pub fn load_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(format!("image dimensions {rows}x{cols} must be positive")));
    }
    check_length(bytes, 16 + count * rows * cols)?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

/// Digit labels, each checked to be in `0..=9`.
pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    check_length(bytes, 8 + count)?;
    let labels = bytes[8..].to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &v)| v > 9) {
        return Err(Error::InvalidDigit { index, value });
    }
    Ok(labels)
}

pub fn labels_to_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Reads a file, inflating it when it starts with the gzip magic.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Finds `name` or `name.gz` in `dir`.
fn locate(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let plain = dir.join(name);
    if plain.exists() {
        return read_maybe_gzip(&plain);
    }
    read_maybe_gzip(&dir.join(format!("{name}.gz")))
}

/// The four standard MNIST files.
#[derive(Debug, Clone)]
pub struct MnistCorpus {
    pub train_images: IdxImages,
    pub train_labels: Vec<u8>,
    pub test_images: IdxImages,
    pub test_labels: Vec<u8>,
}

impl MnistCorpus {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(MnistCorpus {
            train_images: load_idx_images(&locate(dir, TRAIN_IMAGES)?)?,
            train_labels: load_idx_labels(&locate(dir, TRAIN_LABELS)?)?,
            test_images: load_idx_images(&locate(dir, TEST_IMAGES)?)?,
            test_labels: load_idx_labels(&locate(dir, TEST_LABELS)?)?,
        })
    }

    pub fn binary_task(&self, seed: u64) -> Result<BinaryTaskSplit> {
        build_binary_task(
            &self.train_images,
            &self.train_labels,
            &self.test_images,
            &self.test_labels,
            seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTaskSplit {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: LabeledDataset,
}

/// Balanced 1-vs-7 task: 11,500 train, 1,000 validation and 2,050 test rows
/// from the full corpus.
///
/// Each class is subsampled uniformly (seeded, then re-sorted by index) to
/// 6,250 pool and 1,025 test rows. The pool is split by a seeded per-class
/// shuffle so that both parts stay balanced. Pixels are scaled to `[0, 1]`
/// and a constant-1 bias feature is appended.
pub fn build_binary_task(
    images: &IdxImages,
    labels: &[u8],
    test_images: &IdxImages,
    test_labels: &[u8],
    seed: u64,
) -> Result<BinaryTaskSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [pool_pos, pool_neg] = subsample(images, labels, TRAIN_POOL_PER_CLASS, &mut rng)?;
    let [test_pos, test_neg] = subsample(test_images, test_labels, TEST_PER_CLASS, &mut rng)?;

    let (mut pos, mut neg) = (pool_pos, pool_neg);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let val_pos = VALIDATION_SIZE / 2;
    let val_neg = VALIDATION_SIZE - val_pos;
    let (pos_val, pos_train) = pos.split_at(val_pos);
    let (neg_val, neg_train) = neg.split_at(val_neg);

    let train = to_dataset(images, labels, &sorted_merge(pos_train, neg_train))?;
    let validation = to_dataset(images, labels, &sorted_merge(pos_val, neg_val))?;
    let test = to_dataset(test_images, test_labels, &sorted_merge(&test_pos, &test_neg))?;
    Ok(BinaryTaskSplit {
        train,
        validation,
        test,
    })
}

/// Seeded uniform subsample of `per_class` indices for each of the two
/// digits, each list sorted.
fn subsample(
    images: &IdxImages,
    labels: &[u8],
    per_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<[Vec<usize>; 2]> {
    if images.count != labels.len() {
        return Err(Error::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let pick = |digit: u8, rng: &mut ChaCha8Rng| -> Result<Vec<usize>> {
        let all: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == digit).collect();
        if all.len() < per_class {
            return Err(Error::InsufficientClass {
                digit,
                needed: per_class,
                available: all.len(),
            });
        }
        let mut chosen: Vec<usize> = all.choose_multiple(rng, per_class).copied().collect();
        chosen.sort_unstable();
        Ok(chosen)
    };
    let pos = pick(POSITIVE_DIGIT, rng)?;
    let neg = pick(NEGATIVE_DIGIT, rng)?;
    Ok([pos, neg])
}

fn sorted_merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut all = [a, b].concat();
    all.sort_unstable();
    all
}

/// Rows of `images` at `indices` (digits 1 or 7 only), scaled to `[0, 1]`,
/// with the bias coordinate appended.
fn to_dataset(images: &IdxImages, digits: &[u8], indices: &[usize]) -> Result<LabeledDataset> {
    let dim = images.rows * images.cols + 1;
    let mut features = Vec::with_capacity(indices.len() * dim);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        features.extend(images.image(i).iter().map(|&p| f64::from(p) / 255.0));
        features.push(1.0);
        labels.push(if digits[i] == POSITIVE_DIGIT {
            Label::Positive
        } else {
            Label::Negative
        });
    }
    // every coordinate lies in [0, 1]
    let radius = (dim as f64).sqrt();
    LabeledDataset::from_flat(features, dim, labels, radius)
}
