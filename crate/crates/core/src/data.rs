//! Datasets and their partition across devices.
//!
//! Covariates are stored row-major as a [`Matrix`]; labels are real for
//! regression and integer-valued class indices for classification.

use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::numerics::{Matrix, SimRng};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("IDX format error in {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(DataError::Dimension(format!(
                "{} covariate rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(DataError::Dimension("dataset must hold at least one sample".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], f64) {
        (self.features.row(i), self.labels[i])
    }

    /// Writes one sample per line, covariates `u1..ud` then the label `v`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("u{j}")).collect();
        header.push("v".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let (u, v) = self.sample(i);
            let mut rec: Vec<String> = u.iter().map(|x| format!("{x:e}")).collect();
            rec.push(format!("{v:e}"));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let cols = r.headers()?.len();
        if cols < 2 {
            return Err(DataError::Dimension("CSV needs at least one covariate and a label".into()));
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parsed = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| DataError::Dimension(format!("bad number in CSV: {e}")))?;
            labels.push(parsed[cols - 1]);
            data.extend_from_slice(&parsed[..cols - 1]);
        }
        let features = Matrix::from_row_major(labels.len(), cols - 1, data)
            .map_err(|e| DataError::Dimension(e.to_string()))?;
        Self::new(features, labels)
    }
}

/// Draws `total` rows `u ~ N(0, I_dim)` with labels `v = u[1] + 3 u[4] + noise_std z`
/// (0-indexed, i.e. the second and fifth covariates).
pub fn generate_synthetic(total: usize, dim: usize, noise_std: f64, rng: &mut SimRng) -> Result<Dataset> {
    if dim < 5 {
        return Err(DataError::Dimension(format!("synthetic labels need dim >= 5, got {dim}")));
    }
    let mut data = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let start = data.len();
        data.extend((0..dim).map(|_| rng.standard_normal()));
        let u = &data[start..];
        labels.push(u[1] + 3.0 * u[4] + rng.gauss(0.0, noise_std));
    }
    let features = Matrix::from_row_major(total, dim, data).map_err(|e| DataError::Dimension(e.to_string()))?;
    Dataset::new(features, labels)
}

/// Disjoint contiguous shards covering `0..total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    shards: Vec<Range<usize>>,
}

impl Partition {
    fn from_sizes(sizes: &[usize]) -> Self {
        let mut start = 0;
        let shards = sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect();
        Self { shards }
    }

    pub fn num_devices(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, k: usize) -> Range<usize> {
        self.shards[k].clone()
    }

    pub fn shards(&self) -> &[Range<usize>] {
        &self.shards
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.shards.iter().map(|r| r.len()).collect()
    }

    pub fn total(&self) -> usize {
        self.shards.iter().map(|r| r.len()).sum()
    }
}

fn even_sizes(total: usize, parts: usize) -> Vec<usize> {
    let (base, extra) = (total / parts, total % parts);
    (0..parts).map(|k| base + usize::from(k < extra)).collect()
}

/// Splits `total` samples over `devices` shards whose sizes differ by at most one.
pub fn partition_uniform(total: usize, devices: usize) -> Result<Partition> {
    if devices == 0 || devices > total {
        return Err(DataError::Partition(format!("cannot split {total} samples over {devices} devices")));
    }
    Ok(Partition::from_sizes(&even_sizes(total, devices)))
}

/// Device 0 receives `ceil(max_fraction * total)` samples; the rest are spread evenly.
pub fn partition_skewed(total: usize, devices: usize, max_fraction: f64) -> Result<Partition> {
    if devices == 0 || devices > total {
        return Err(DataError::Partition(format!("cannot split {total} samples over {devices} devices")));
    }
    if devices == 1 {
        return Ok(Partition::from_sizes(&[total]));
    }
    if !(max_fraction >= 1.0 / devices as f64 - 1e-12 && max_fraction < 1.0) {
        return Err(DataError::Partition(format!(
            "max fraction {max_fraction} outside [1/{devices}, 1)"
        )));
    }
    let large = (max_fraction * total as f64 - 1e-9).ceil() as usize;
    if large > total - (devices - 1) {
        return Err(DataError::Partition(format!(
            "max fraction {max_fraction} leaves fewer than one sample for some device"
        )));
    }
    let mut sizes = vec![large];
    sizes.extend(even_sizes(total - large, devices - 1));
    Ok(Partition::from_sizes(&sizes))
}

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Format { path: path.display().to_string(), reason: "truncated header".into() })
}

/// Reads an IDX image/label pair. Pixels are scaled to `[0, 1]`, each image is
/// flattened and extended with a trailing bias entry of 1. `limit` keeps the
/// first samples in file order.
pub fn load_idx(images_path: &Path, labels_path: &Path, limit: Option<usize>) -> Result<Dataset> {
    let fmt = |path: &Path, reason: String| DataError::Format { path: path.display().to_string(), reason };
    let images = read_file(images_path)?;
    let labels = read_file(labels_path)?;

    let magic = be_u32(&images, 0, images_path)?;
    if magic != IMAGE_MAGIC {
        return Err(fmt(images_path, format!("bad image magic {magic:#010x}")));
    }
    let count = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    let pixels = rows * cols;
    if images.len() != 16 + count * pixels {
        return Err(fmt(images_path, format!("expected {} bytes, found {}", 16 + count * pixels, images.len())));
    }

    let magic = be_u32(&labels, 0, labels_path)?;
    if magic != LABEL_MAGIC {
        return Err(fmt(labels_path, format!("bad label magic {magic:#010x}")));
    }
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    if labels.len() != 8 + label_count {
        return Err(fmt(labels_path, format!("expected {} bytes, found {}", 8 + label_count, labels.len())));
    }
    if label_count != count {
        return Err(fmt(labels_path, format!("{count} images but {label_count} labels")));
    }

    let n = limit.map_or(count, |l| l.min(count));
    let dim = pixels + 1;
    let mut data = Vec::with_capacity(n * dim);
    for img in images[16..].chunks_exact(pixels).take(n) {
        data.extend(img.iter().map(|&p| f64::from(p) / 255.0));
        data.push(1.0);
    }
    let labels: Vec<f64> = labels[8..8 + n].iter().map(|&l| f64::from(l)).collect();
    if let Some(bad) = labels.iter().find(|&&l| l > 9.0) {
        return Err(fmt(labels_path, format!("label {bad} outside 0..9")));
    }
    let features = Matrix::from_row_major(n, dim, data).map_err(|e| DataError::Dimension(e.to_string()))?;
    Dataset::new(features, labels)
}
