//! Datasets: the block-scaled synthetic regression generator, IDX/MNIST
//! reading, and CSV import/export.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkit::Mat;
use crate::rng::seeded;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Mat,
    pub y: Vec<f64>,
    /// Where the rows came from (generator seed, file names).
    pub source: String,
}

impl Dataset {
    pub fn new(x: Mat, y: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Arity { what: "dataset labels", expected: x.rows(), got: y.len() });
        }
        Ok(Self { x, y, source: source.into() })
    }

    pub fn num_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Keeps the first `rows` rows.
    pub fn truncate(&self, rows: usize) -> Dataset {
        let rows = rows.min(self.num_rows());
        let idx: Vec<usize> = (0..rows).collect();
        Dataset { x: self.x.select_rows(&idx), y: self.y[..rows].to_vec(), source: self.source.clone() }
    }

    /// Keeps the largest prefix whose length is a multiple of `parts`.
    pub fn truncate_to_multiple(&self, parts: usize) -> Result<Dataset> {
        if parts == 0 {
            return Err(Error::InvalidInput("part count must be positive".into()));
        }
        let keep = self.num_rows() / parts * parts;
        if keep == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(self.truncate(keep))
    }

    /// CSV with header `x_0,…,x_{p−1},y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.num_rows() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.y[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let p = header.len().checked_sub(1).filter(|&p| p > 0).ok_or_else(|| {
            Error::InvalidInput(format!("{}: need at least one feature column and y", path.display()))
        })?;
        if header.get(p) != Some("y") {
            return Err(Error::InvalidInput(format!("{}: last column must be `y`", path.display())));
        }
        let (mut data, mut y) = (Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("row {}: {s:?}: {e}", line + 1)))
            };
            for j in 0..p {
                data.push(parse(&rec[j])?);
            }
            y.push(parse(&rec[p])?);
        }
        let x = Mat::new(y.len(), p, data)?;
        Dataset::new(x, y, format!("csv:{}", path.display()))
    }
}

/// Synthetic regression instance with the generating parameters.
#[derive(Clone, Debug)]
pub struct SyntheticRegression {
    pub dataset: Dataset,
    pub theta_true: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Shape of the block-scaled generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthShape {
    pub blocks: usize,
    pub rows_per_block: usize,
    pub dim: usize,
    /// Block `i` (1-based) draws integers from `[−step·i, step·i]`.
    pub step: i64,
}

impl Default for SynthShape {
    fn default() -> Self {
        Self { blocks: 20, rows_per_block: 50, dim: 20, step: 15 }
    }
}

/// 1000×20 integer design whose row blocks grow in scale, shuffled, with
/// `y = Xθ + ε`, `θ ~ U[−1, 1]^20` and standard Gaussian `ε`.
pub fn synth_regression(seed: u64) -> SyntheticRegression {
    synth_regression_with(SynthShape::default(), seed)
}

pub fn synth_regression_with(shape: SynthShape, seed: u64) -> SyntheticRegression {
    let mut rng = seeded(seed);
    let n = shape.blocks * shape.rows_per_block;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for block in 1..=shape.blocks as i64 {
        let bound = shape.step * block;
        for _ in 0..shape.rows_per_block {
            rows.push((0..shape.dim).map(|_| rng.random_range(-bound..=bound) as f64).collect());
        }
    }
    rows.shuffle(&mut rng);
    let x = Mat::from_rows(&rows).expect("finite integer entries");
    let theta_true: Vec<f64> = (0..shape.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let clean = x.matvec(&theta_true).expect("conforming");
    let y = clean.iter().zip(&noise).map(|(a, e)| a + e).collect();
    let dataset = Dataset::new(x, y, format!("synthetic:seed={seed}")).expect("conforming");
    SyntheticRegression { dataset, theta_true, noise }
}

/// Decoded IDX image file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let chunk = self.take(4, what)?;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(Error::Format {
                offset: self.bytes.len() as u64,
                message: format!("truncated {what}: need {len} bytes at offset {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let at = self.pos as u64;
        let magic = self.u32("magic number")?;
        if magic != expected {
            return Err(Error::Format {
                offset: at,
                message: format!("bad magic number {magic:#010x}, expected {expected:#010x}"),
            });
        }
        Ok(())
    }
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(IDX_IMAGES_MAGIC)?;
    let count = c.u32("image count")? as usize;
    let rows = c.u32("row count")? as usize;
    let cols = c.u32("column count")? as usize;
    let pixels = c.take(count * rows * cols, "pixel data")?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(IDX_LABELS_MAGIC)?;
    let count = c.u32("label count")? as usize;
    Ok(c.take(count, "label data")?.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IDX_IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Reads an IDX image/label pair, keeps the two requested digit classes in
/// file order (first class → +1, second → −1), scales pixels to [0, 1],
/// and stops after `limit` rows.
pub fn load_mnist(images_path: &Path, labels_path: &Path, classes: (u8, u8), limit: usize) -> Result<Dataset> {
    if limit == 0 {
        return Err(Error::EmptyDataset);
    }
    let images = parse_idx_images(&fs::read(images_path)?)?;
    let labels = parse_idx_labels(&fs::read(labels_path)?)?;
    if images.count != labels.len() {
        return Err(Error::Format {
            offset: 4,
            message: format!("{} images but {} labels", images.count, labels.len()),
        });
    }
    for class in [classes.0, classes.1] {
        if !labels.contains(&class) {
            return Err(Error::EmptyClass(class));
        }
    }
    let p = images.rows * images.cols;
    let (mut data, mut y) = (Vec::new(), Vec::new());
    for (i, &label) in labels.iter().enumerate() {
        if y.len() == limit {
            break;
        }
        let sign = if label == classes.0 {
            1.0
        } else if label == classes.1 {
            -1.0
        } else {
            continue;
        };
        data.extend(images.image(i).iter().map(|&px| px as f64 / 255.0));
        y.push(sign);
    }
    let x = Mat::new(y.len(), p, data)?;
    let source = format!("mnist:{}:{}:classes={}/{}", images_path.display(), labels_path.display(), classes.0, classes.1);
    Dataset::new(x, y, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{leverage_scores, normalize_scores};

    #[test]
    fn synthetic_shape_and_ranges() {
        let s = synth_regression(1);
        assert_eq!((s.dataset.num_rows(), s.dataset.dim()), (1000, 20));
        assert_eq!(s.dataset.y.len(), 1000);
        let max_abs = s.dataset.x.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs <= 300.0);
        assert!(s.dataset.x.as_slice().iter().all(|v| v.fract() == 0.0));
        assert!(s.theta_true.iter().all(|t| t.abs() <= 1.0));
    }

    #[test]
    fn unshuffled_block_ranges() {
        // Every block-1 row lies in [−15, 15]; larger blocks only add to the count.
        let s = synth_regression(7);
        let small = (0..1000).filter(|&i| s.dataset.x.row(i).iter().all(|v| v.abs() <= 15.0)).count();
        assert!(small >= 50, "block 1 rows lie within [-15, 15]");
    }

    #[test]
    fn synthetic_is_reproducible() {
        let (a, b) = (synth_regression(42), synth_regression(42));
        assert_eq!(a.dataset.x, b.dataset.x);
        assert_eq!(a.dataset.y, b.dataset.y);
        assert_eq!(a.theta_true, b.theta_true);
        assert_ne!(synth_regression(43).dataset.x, a.dataset.x);
    }

    #[test]
    fn synthetic_scores_are_nonuniform() {
        let s = synth_regression(3);
        let pi = normalize_scores(&leverage_scores(&s.dataset.x).unwrap()).unwrap();
        let (max, min) = pi.iter().fold((0.0f64, 1.0f64), |(a, b), &v| (a.max(v), b.min(v)));
        assert!(max / min > 2.0);
    }

    fn fixture() -> (IdxImages, Vec<u8>) {
        let images = IdxImages {
            count: 3,
            rows: 2,
            cols: 2,
            pixels: vec![0, 255, 51, 102, 1, 2, 3, 4, 255, 255, 0, 0],
        };
        (images, vec![4, 7, 9])
    }

    #[test]
    fn idx_round_trip_and_filtering() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let (ip, lp) = (dir.path().join("img"), dir.path().join("lbl"));
        fs::write(&ip, encode_idx_images(&images)).unwrap();
        fs::write(&lp, encode_idx_labels(&labels)).unwrap();
        assert_eq!(parse_idx_images(&fs::read(&ip).unwrap()).unwrap(), images);

        let ds = load_mnist(&ip, &lp, (4, 9), 100).unwrap();
        assert_eq!(ds.num_rows(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.y, vec![1.0, -1.0]);
        assert_eq!(ds.x.row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.x.row(1), &[1.0, 1.0, 0.0, 0.0]);

        assert_eq!(load_mnist(&ip, &lp, (4, 9), 1).unwrap().num_rows(), 1);
        assert!(matches!(load_mnist(&ip, &lp, (4, 9), 0), Err(Error::EmptyDataset)));
        assert!(matches!(load_mnist(&ip, &lp, (4, 5), 10), Err(Error::EmptyClass(5))));
    }

    #[test]
    fn idx_errors_carry_offsets() {
        let (images, labels) = fixture();
        let mut bytes = encode_idx_images(&images);
        bytes[3] = 0x01;
        match parse_idx_images(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
        let bytes = encode_idx_images(&images);
        match parse_idx_images(&bytes[..bytes.len() - 1]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset as usize, bytes.len() - 1),
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(parse_idx_labels(&encode_idx_labels(&labels)[..5]).is_err());
        assert!(parse_idx_labels(&encode_idx_images(&images)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let s = synth_regression(5).dataset.truncate(10);
        s.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x_0,x_1,"));
        assert!(text.lines().next().unwrap().ends_with(",x_19,y"));
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back.x, s.x);
        assert_eq!(back.y, s.y);
    }

    #[test]
    fn truncation_to_multiple() {
        let s = synth_regression(5).dataset.truncate(23);
        assert_eq!(s.truncate_to_multiple(5).unwrap().num_rows(), 20);
        assert!(matches!(s.truncate_to_multiple(24), Err(Error::EmptyDataset)));
    }
}
