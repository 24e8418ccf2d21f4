//! IDX (MNIST distribution format) reader and writer.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images stored as raw bytes, one row-major image after another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageDataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
    pub source: String,
}

impl ImageDataset {
    pub fn new(pixels: Vec<u8>, labels: Vec<u8>, rows: usize, cols: usize, source: impl Into<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows * cols == 0 || pixels.len() != labels.len() * rows * cols {
            return Err(Error::Format(format!(
                "{} pixel bytes do not hold {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        Ok(ImageDataset { pixels, labels, rows, cols, source: source.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pixel_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw(&self, i: usize) -> &[u8] {
        let d = self.pixel_dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    /// Image `i` scaled to `[0, 1]`.
    pub fn image(&self, i: usize) -> Vec<f64> {
        self.raw(i).iter().map(|&b| b as f64 / 255.0).collect()
    }

    pub fn images(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.image(i)).collect()
    }

    /// The first `n` images (or all of them).
    pub fn take(&self, n: usize) -> ImageDataset {
        let n = n.min(self.len());
        ImageDataset {
            pixels: self.pixels[..n * self.pixel_dim()].to_vec(),
            labels: self.labels[..n].to_vec(),
            rows: self.rows,
            cols: self.cols,
            source: self.source.clone(),
        }
    }
}

fn open(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        return Ok(out);
    }
    Ok(raw)
}

fn be_u32(buf: &[u8], at: usize, what: &str) -> Result<u32> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

/// Parses an IDX3 image file, returning `(count, rows, cols, pixels)`.
pub fn parse_images(buf: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = be_u32(buf, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!("images: bad magic {magic:#010x}")));
    }
    let n = be_u32(buf, 4, "images")? as usize;
    let rows = be_u32(buf, 8, "images")? as usize;
    let cols = be_u32(buf, 12, "images")? as usize;
    let body = &buf[16..];
    let want = n * rows * cols;
    if body.len() < want {
        return Err(Error::Format(format!("images: truncated, expected {want} bytes, found {}", body.len())));
    }
    Ok((n, rows, cols, body[..want].to_vec()))
}

pub fn parse_labels(buf: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(buf, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!("labels: bad magic {magic:#010x}")));
    }
    let n = be_u32(buf, 4, "labels")? as usize;
    let body = &buf[8..];
    if body.len() < n {
        return Err(Error::Format(format!("labels: truncated, expected {n} bytes, found {}", body.len())));
    }
    Ok(body[..n].to_vec())
}

/// Loads an image/label pair of IDX files; gzip input is detected.
pub fn load_idx(images: &Path, labels: &Path) -> Result<ImageDataset> {
    let (n, rows, cols, pixels) = parse_images(&open(images)?)?;
    let labels_v = parse_labels(&open(labels)?)?;
    if labels_v.len() != n {
        return Err(Error::Format(format!("{n} images but {} labels", labels_v.len())));
    }
    ImageDataset::new(pixels, labels_v, rows, cols, images.display().to_string())
}

/// Loads the `train` or `t10k` split from an MNIST-layout directory.
pub fn load_mnist_split(dir: &Path, split: &str) -> Result<ImageDataset> {
    let find = |stem: &str| {
        let plain = dir.join(stem);
        let gz = dir.join(format!("{stem}.gz"));
        if plain.exists() || !gz.exists() {
            plain
        } else {
            gz
        }
    };
    load_idx(&find(&format!("{split}-images-idx3-ubyte")), &find(&format!("{split}-labels-idx1-ubyte")))
}

/// Writes an image/label pair in IDX format.
pub fn write_idx(ds: &ImageDataset, images: &Path, labels: &Path) -> Result<()> {
    let mut f = File::create(images)?;
    for v in [IMAGE_MAGIC, ds.len() as u32, ds.rows as u32, ds.cols as u32] {
        f.write_all(&v.to_be_bytes())?;
    }
    f.write_all(&ds.pixels)?;
    let mut f = File::create(labels)?;
    f.write_all(&LABEL_MAGIC.to_be_bytes())?;
    f.write_all(&(ds.len() as u32).to_be_bytes())?;
    f.write_all(&ds.labels)?;
    Ok(())
}
