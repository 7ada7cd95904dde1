//! MNIST IDX and CIFAR-10 binary batch readers.

use crate::error::{Error, FormatError, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const CIFAR_SIDE: usize = 32;
const CIFAR_RECORD: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;

/// CIFAR-10 class index of "frog".
pub const CIFAR_FROG: u8 = 6;

/// Images stored channel-major (`channels x rows x cols`) one after another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImages {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_len(&self) -> usize {
        self.rows * self.cols * self.channels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.image_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Pixel values scaled to `[0, 1]`.
    pub fn image_unit(&self, i: usize) -> Vec<f32> {
        self.image(i).iter().map(|&p| p as f32 / 255.0).collect()
    }

    /// Subset with the given label, in original order, with original indices.
    pub fn filter_label(&self, label: u8) -> (LabeledImages, Vec<usize>) {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        let mut pixels = Vec::with_capacity(idx.len() * self.image_len());
        for &i in &idx {
            pixels.extend_from_slice(self.image(i));
        }
        let subset = LabeledImages {
            rows: self.rows,
            cols: self.cols,
            channels: self.channels,
            pixels,
            labels: vec![label; idx.len()],
        };
        (subset, idx)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, FormatError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or(FormatError::Truncated)
}

fn exact_payload(bytes: &[u8], offset: usize, expected: usize) -> Result<&[u8], FormatError> {
    let payload = bytes.get(offset..).ok_or(FormatError::Truncated)?;
    match payload.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(FormatError::Truncated),
        std::cmp::Ordering::Greater => Err(FormatError::SizeMismatch {
            expected,
            actual: payload.len(),
        }),
        std::cmp::Ordering::Equal => Ok(payload),
    }
}

fn check_labels(labels: &[u8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::InvalidInput(format!("label {bad} outside 0..=9")));
    }
    Ok(())
}

/// Parses an MNIST image file and its label file (both big-endian IDX).
pub fn read_mnist_idx(images: &[u8], labels: &[u8]) -> Result<LabeledImages> {
    if be_u32(images, 0)? != IDX_IMAGES_MAGIC || be_u32(labels, 0)? != IDX_LABELS_MAGIC {
        return Err(FormatError::BadMagic.into());
    }
    let count = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let label_count = be_u32(labels, 4)? as usize;
    let pixels = exact_payload(images, 16, count * rows * cols)?;
    let label_bytes = exact_payload(labels, 8, label_count)?;
    if label_count != count {
        return Err(Error::InvalidInput(format!(
            "{count} images but {label_count} labels"
        )));
    }
    check_labels(label_bytes)?;
    Ok(LabeledImages {
        rows,
        cols,
        channels: 1,
        pixels: pixels.to_vec(),
        labels: label_bytes.to_vec(),
    })
}

/// Parses a CIFAR-10 binary batch: records of one label byte plus R, G and B planes.
pub fn read_cifar10_batch(bytes: &[u8]) -> Result<LabeledImages> {
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
        return Err(FormatError::SizeMismatch {
            expected: (bytes.len() / CIFAR_RECORD + 1) * CIFAR_RECORD,
            actual: bytes.len(),
        }
        .into());
    }
    let count = bytes.len() / CIFAR_RECORD;
    let mut pixels = Vec::with_capacity(count * (CIFAR_RECORD - 1));
    let mut labels = Vec::with_capacity(count);
    for rec in bytes.chunks_exact(CIFAR_RECORD) {
        labels.push(rec[0]);
        pixels.extend_from_slice(&rec[1..]);
    }
    check_labels(&labels)?;
    Ok(LabeledImages {
        rows: CIFAR_SIDE,
        cols: CIFAR_SIDE,
        channels: 3,
        pixels,
        labels,
    })
}

/// Serializes images in MNIST IDX form, returning `(images, labels)` files.
pub fn write_mnist_idx(set: &LabeledImages) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + set.pixels.len());
    for v in [
        IDX_IMAGES_MAGIC,
        set.len() as u32,
        set.rows as u32,
        set.cols as u32,
    ] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(&set.pixels);
    let mut lab = Vec::with_capacity(8 + set.len());
    for v in [IDX_LABELS_MAGIC, set.len() as u32] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    lab.extend_from_slice(&set.labels);
    (img, lab)
}

/// Serializes 32x32 RGB images as a CIFAR-10 binary batch.
pub fn write_cifar10_batch(set: &LabeledImages) -> Result<Vec<u8>> {
    if (set.rows, set.cols, set.channels) != (CIFAR_SIDE, CIFAR_SIDE, 3) {
        return Err(Error::InvalidInput("CIFAR-10 records are 3x32x32".into()));
    }
    let mut out = Vec::with_capacity(set.len() * CIFAR_RECORD);
    for i in 0..set.len() {
        out.push(set.labels[i]);
        out.extend_from_slice(set.image(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_mnist(n: usize) -> LabeledImages {
        LabeledImages {
            rows: 28,
            cols: 28,
            channels: 1,
            pixels: (0..n * 784).map(|i| (i % 251) as u8).collect(),
            labels: (0..n).map(|i| (i % 10) as u8).collect(),
        }
    }

    #[test]
    fn mnist_header_and_counts() {
        let set = tiny_mnist(12);
        let (img, lab) = write_mnist_idx(&set);
        assert_eq!(&img[..4], &[0, 0, 8, 3]);
        let back = read_mnist_idx(&img, &lab).unwrap();
        assert_eq!((back.len(), back.rows, back.cols), (12, 28, 28));
        assert_eq!(back.pixels.len(), 12 * 784);
        assert!(back.labels.iter().all(|&l| l <= 9));
        assert_eq!(back, set);
    }

    #[test]
    fn mnist_rejects_bad_files() {
        let (img, lab) = write_mnist_idx(&tiny_mnist(2));
        let mut bad = img.clone();
        bad[3] = 0x01;
        assert!(read_mnist_idx(&bad, &lab).is_err());
        assert!(read_mnist_idx(&img, &img).is_err());
        assert!(read_mnist_idx(&img[..img.len() - 1], &lab).is_err());
        assert!(read_mnist_idx(&img, &lab[..lab.len() - 1]).is_err());
        let mut bad = lab.clone();
        *bad.last_mut().unwrap() = 11;
        assert!(read_mnist_idx(&img, &bad).is_err());
        let (img3, _) = write_mnist_idx(&tiny_mnist(3));
        assert!(read_mnist_idx(&img3, &lab).is_err());
    }

    #[test]
    fn cifar_planes_and_frog_filter() {
        let mut bytes = Vec::new();
        for i in 0..20u8 {
            bytes.push(i % 10);
            bytes.extend(std::iter::repeat_n(1, 1024));
            bytes.extend(std::iter::repeat_n(2, 1024));
            bytes.extend(std::iter::repeat_n(i, 1024));
        }
        let set = read_cifar10_batch(&bytes).unwrap();
        assert_eq!(set.len(), 20);
        let img = set.image(7);
        assert_eq!((img[0], img[1024], img[2048]), (1, 2, 7));
        let (frogs, idx) = set.filter_label(CIFAR_FROG);
        assert_eq!(idx, vec![6, 16]);
        assert_eq!(frogs.len(), 2);
        assert_eq!(frogs.image(1)[2048], 16);
        assert_eq!(write_cifar10_batch(&set).unwrap(), bytes);
        assert!(read_cifar10_batch(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_cifar10_batch(&[]).is_err());
    }
}
