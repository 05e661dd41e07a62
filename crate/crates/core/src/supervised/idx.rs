//! IDX (MNIST) binary format: big-endian magic, dimension header, raw bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;
use crate::supervised::dataset::{Dataset, Split};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct IdxReader {
    path: PathBuf,
    bytes: Vec<u8>,
    pos: usize,
}

impl IdxReader {
    fn open(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(IdxReader {
            path: path.to_path_buf(),
            bytes,
            pos: 0,
        })
    }

    fn read_u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        if end > self.bytes.len() {
            return Err(Error::IdxTruncated {
                path: self.path.clone(),
                needed: end,
                found: self.bytes.len(),
            });
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn expect_magic(&mut self, expected: u32) -> Result<()> {
        let actual = self.read_u32()?;
        if actual != expected {
            return Err(Error::IdxBadMagic {
                path: self.path.clone(),
                expected,
                actual,
            });
        }
        Ok(())
    }

    fn payload(&self, needed: usize) -> Result<&[u8]> {
        if self.pos + needed > self.bytes.len() {
            return Err(Error::IdxTruncated {
                path: self.path.clone(),
                needed: self.pos + needed,
                found: self.bytes.len(),
            });
        }
        Ok(&self.bytes[self.pos..self.pos + needed])
    }
}

/// Load an image/label IDX pair into a dataset. Pixel bytes are scaled by
/// 1/255 into [0, 1].
pub fn load_idx<S: Scalar>(
    images_path: &Path,
    labels_path: &Path,
    split: Split,
) -> Result<Dataset<S>> {
    let mut images = IdxReader::open(images_path)?;
    images.expect_magic(IMAGES_MAGIC)?;
    let count = images.read_u32()? as usize;
    let rows = images.read_u32()? as usize;
    let cols = images.read_u32()? as usize;
    let dim = rows * cols;
    let pixels = images.payload(count * dim)?;

    let mut labels = IdxReader::open(labels_path)?;
    labels.expect_magic(LABELS_MAGIC)?;
    let label_count = labels.read_u32()? as usize;
    if label_count != count {
        return Err(Error::IdxCountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let label_bytes = labels.payload(label_count)?;

    let scale = S::from_f(1.0 / 255.0);
    let data: Vec<S> = pixels.iter().map(|&b| S::from_f(f64::from(b)) * scale).collect();
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().max().map_or(1, |&m| m + 1);
    Dataset::new(Tensor::matrix(count, dim, data)?, labels, split, num_classes.max(10))
}

/// Load the four standard MNIST files from a directory.
pub fn load_mnist<S: Scalar>(dir: &Path) -> Result<(Dataset<S>, Dataset<S>)> {
    let train = load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
        Split::Train,
    )?;
    let test = load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
        Split::Test,
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_images(dir: &Path, name: &str, magic: u32, images: &[[u8; 4]]) -> PathBuf {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&magic.to_be_bytes());
        bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        for img in images {
            bytes.extend_from_slice(img);
        }
        let path = dir.join(name);
        fs::write(&path, bytes).unwrap();
        path
    }

    fn write_labels(dir: &Path, name: &str, magic: u32, labels: &[u8]) -> PathBuf {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&magic.to_be_bytes());
        bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        bytes.extend_from_slice(labels);
        let path = dir.join(name);
        fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn crafted_fixture_loads_exact_floats() {
        let dir = tempfile::tempdir().unwrap();
        let images = write_images(
            dir.path(),
            "imgs",
            IMAGES_MAGIC,
            &[[0, 128, 255, 64], [10, 20, 30, 40]],
        );
        let labels = write_labels(dir.path(), "lbls", LABELS_MAGIC, &[7, 3]);
        let ds: Dataset<f64> = load_idx(&images, &labels, Split::Train).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_dim(), 4);
        assert_eq!(ds.labels, vec![7, 3]);
        let expected: Vec<f64> = [0.0, 128.0, 255.0, 64.0, 10.0, 20.0, 30.0, 40.0]
            .iter()
            .map(|v| v * (1.0 / 255.0))
            .collect();
        assert_eq!(ds.inputs.data(), &expected[..]);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let images = write_images(dir.path(), "imgs", IMAGES_MAGIC, &[[0; 4]]);
        let labels = write_labels(dir.path(), "lbls", 0xdead_beef, &[1]);
        let err = load_idx::<f64>(&images, &labels, Split::Train).unwrap_err();
        assert!(matches!(err, Error::IdxBadMagic { .. }), "{err}");
    }

    #[test]
    fn truncated_file_detected() {
        let dir = tempfile::tempdir().unwrap();
        let images = write_images(dir.path(), "imgs", IMAGES_MAGIC, &[[0; 4]]);
        let mut bytes = fs::read(&images).unwrap();
        bytes.truncate(bytes.len() - 2);
        fs::write(&images, bytes).unwrap();
        let labels = write_labels(dir.path(), "lbls", LABELS_MAGIC, &[1]);
        let err = load_idx::<f64>(&images, &labels, Split::Train).unwrap_err();
        assert!(matches!(err, Error::IdxTruncated { .. }), "{err}");
    }

    #[test]
    fn count_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let images = write_images(dir.path(), "imgs", IMAGES_MAGIC, &[[0; 4]]);
        let labels = write_labels(dir.path(), "lbls", LABELS_MAGIC, &[1, 2]);
        let err = load_idx::<f64>(&images, &labels, Split::Train).unwrap_err();
        assert!(matches!(err, Error::IdxCountMismatch { images: 1, labels: 2 }), "{err}");
    }

    #[test]
    fn loading_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let images = write_images(dir.path(), "imgs", IMAGES_MAGIC, &[[5, 6, 7, 8]]);
        let labels = write_labels(dir.path(), "lbls", LABELS_MAGIC, &[2]);
        let a: Dataset<f32> = load_idx(&images, &labels, Split::Train).unwrap();
        let b: Dataset<f32> = load_idx(&images, &labels, Split::Train).unwrap();
        assert_eq!(a.inputs.data(), b.inputs.data());
        assert_eq!(a.labels, b.labels);
    }
}
