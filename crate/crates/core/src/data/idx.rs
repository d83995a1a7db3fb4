//! IDX image and label files (big-endian headers).

use std::path::Path;

use super::{read_file, DataError};
use crate::bytes::Reader;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Decoded image file: `count` images of `rows x cols` bytes, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image_bytes(&self, i: usize) -> &[u8] {
        let n = self.pixels_per_image();
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Image `i` scaled to `[0, 1]`.
    pub fn image(&self, i: usize) -> Vec<f64> {
        self.image_bytes(i).iter().map(|&p| f64::from(p) / 255.0).collect()
    }
}

fn header(r: &mut Reader<'_>, expected: u32) -> Result<(), DataError> {
    let magic = r.u32_be()?;
    if magic != expected {
        return Err(DataError::BadMagic {
            found: magic,
            expected,
        });
    }
    Ok(())
}

fn exact_payload(r: &Reader<'_>, expected: usize) -> Result<(), DataError> {
    r.ensure(expected, 1)?;
    if r.remaining() != expected {
        return Err(DataError::Format(format!(
            "header announces {expected} payload bytes, file holds {}",
            r.remaining()
        )));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages, DataError> {
    let mut r = Reader::new(bytes);
    header(&mut r, IMAGES_MAGIC)?;
    let count = r.u32_be()? as usize;
    let rows = r.u32_be()? as usize;
    let cols = r.u32_be()? as usize;
    let total = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| DataError::Format("image dimensions overflow".into()))?;
    exact_payload(&r, total)?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: r.take(total)?.to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    let mut r = Reader::new(bytes);
    header(&mut r, LABELS_MAGIC)?;
    let count = r.u32_be()? as usize;
    exact_payload(&r, count)?;
    Ok(r.take(count)?.to_vec())
}

/// Digit images with their labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mnist {
    pub images: IdxImages,
    pub labels: Vec<usize>,
}

impl Mnist {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn histogram(&self) -> [usize; 10] {
        let mut h = [0; 10];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }
}

/// Pairs an image buffer with a label buffer and checks that they agree.
pub fn parse_mnist(images: &[u8], labels: &[u8]) -> Result<Mnist, DataError> {
    pair(parse_images(images)?, parse_labels(labels)?)
}

fn pair(images: IdxImages, labels: Vec<u8>) -> Result<Mnist, DataError> {
    if images.rows != 28 || images.cols != 28 {
        return Err(DataError::Format(format!(
            "expected 28x28 images, found {}x{}",
            images.rows, images.cols
        )));
    }
    if images.count != labels.len() {
        return Err(DataError::Format(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(DataError::Format(format!("label {l} at index {i} is not a digit")));
    }
    Ok(Mnist {
        images,
        labels: labels.into_iter().map(usize::from).collect(),
    })
}

pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Mnist, DataError> {
    let images = read_file(images_path)?;
    let labels = read_file(labels_path)?;
    pair(
        parse_images(&images).map_err(|e| e.in_file(images_path))?,
        parse_labels(&labels).map_err(|e| e.in_file(labels_path))?,
    )
}
