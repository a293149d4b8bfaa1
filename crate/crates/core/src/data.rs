//! Datasets: CSV and IDX loaders, min-max scaling, train/test split,
//! one-hot targets, mini-batch slicing, and a synthetic blob generator.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// 1797 8×8 handwritten digits, pixel intensities 0–16, label in the last column.
const DIGITS_CSV: &str = include_str!("../../../data/digits.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// One sample per row.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// `(rows, cols)` when features are the pixels of an image.
    pub image_shape: Option<(usize, usize)>,
    pub name: Option<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidData(format!("label {bad} outside 0..{class_count}")));
        }
        if features.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidData("features contain NaN".into()));
        }
        Ok(Dataset {
            features,
            labels,
            class_count,
            image_shape: None,
            name: None,
        })
    }

    pub fn with_image_shape(mut self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.dim() {
            return Err(Error::InvalidData(format!(
                "image shape {rows}x{cols} does not match {} features",
                self.dim()
            )));
        }
        self.image_shape = Some((rows, cols));
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            image_shape: self.image_shape,
            name: self.name.clone(),
        }
    }

    /// First `n` samples (all of them if `n` exceeds the size).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }
}

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn parse_label(cell: &str, row: usize) -> Result<usize> {
    let value: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("row {row}: label {cell:?} is not numeric")))?;
    if value < 0.0 || value.fract() != 0.0 {
        return Err(Error::InvalidData(format!(
            "row {row}: label {cell:?} is not a non-negative integer"
        )));
    }
    Ok(value as usize)
}

/// Parses numeric CSV text whose last column holds the integer class label.
/// A first row that does not parse as numbers is treated as a header.
pub fn parse_csv(text: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidData(format!("CSV row {row}: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let numeric = record.iter().all(|c| c.parse::<f64>().is_ok());
        if row == 0 && !numeric {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::InvalidData(format!("CSV row {row}: need features and a label")));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::InvalidData(format!(
                    "CSV row {row} has {} columns, expected {w}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        let (label, feats) = record.iter().collect::<Vec<_>>().split_last().map(|(l, f)| (*l, f.to_vec())).unwrap();
        for cell in feats {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::InvalidData(format!("CSV row {row}: {cell:?} is not numeric")))?;
            values.push(v);
        }
        labels.push(parse_label(label, row)?);
    }
    let Some(width) = width else {
        return Err(Error::InvalidData("CSV contains no data rows".into()));
    };
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let features = Array2::from_shape_vec((labels.len(), width - 1), values).expect("rectangular");
    Dataset::new(features, labels, class_count)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read_maybe_gzip(path)?;
    let mut ds = parse_csv(&bytes)?;
    ds.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(ds)
}

/// The bundled 8×8 digits dataset (raw intensities, not normalized).
pub fn bundled_digits() -> Dataset {
    parse_csv(DIGITS_CSV.as_bytes())
        .and_then(|d| d.with_image_shape(8, 8))
        .expect("bundled digits parse")
        .with_name("digits")
}

struct IdxCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl IdxCursor<'_> {
    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::InvalidData(format!("{}: truncated header", self.what)))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn payload(&self, len: usize) -> Result<&[u8]> {
        self.bytes
            .get(self.pos..self.pos + len)
            .ok_or_else(|| {
                Error::InvalidData(format!(
                    "{}: truncated payload, expected {len} bytes, found {}",
                    self.what,
                    self.bytes.len() - self.pos
                ))
            })
    }
}

/// Parses an IDX image file and an IDX label file (raw or gzip).
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let mut img = IdxCursor {
        bytes: images,
        pos: 0,
        what: "IDX images",
    };
    let magic = img.u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::InvalidData(format!("IDX images: bad magic {magic:#010x}")));
    }
    let (n, rows, cols) = (img.u32()? as usize, img.u32()? as usize, img.u32()? as usize);
    let pixels = img.payload(n * rows * cols)?;

    let mut lab = IdxCursor {
        bytes: labels,
        pos: 0,
        what: "IDX labels",
    };
    let magic = lab.u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::InvalidData(format!("IDX labels: bad magic {magic:#010x}")));
    }
    let label_count = lab.u32()? as usize;
    if label_count != n {
        return Err(Error::InvalidData(format!("{n} images but {label_count} labels")));
    }
    let label_bytes = lab.payload(n)?;

    let features = Array2::from_shape_vec((n, rows * cols), pixels.iter().map(|&p| f64::from(p)).collect())
        .expect("payload length checked");
    let labels: Vec<usize> = label_bytes.iter().map(|&l| usize::from(l)).collect();
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(features, labels, class_count)?.with_image_shape(rows, cols)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = read_maybe_gzip(images_path.as_ref())?;
    let labels = read_maybe_gzip(labels_path.as_ref())?;
    parse_idx(&images, &labels)
}

/// Writes uncompressed IDX image and label files. Every feature must be an
/// integer in 0–255 and the dataset must carry an image shape.
pub fn write_idx(dataset: &Dataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let (rows, cols) = dataset
        .image_shape
        .ok_or_else(|| Error::InvalidData("IDX export needs an image shape".into()))?;
    let mut img = Vec::with_capacity(16 + dataset.features.len());
    for v in [IDX_IMAGES_MAGIC, dataset.len() as u32, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for &v in dataset.features.iter() {
        if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
            return Err(Error::InvalidData(format!("pixel value {v} is not a byte")));
        }
        img.push(v as u8);
    }
    let mut lab = Vec::with_capacity(8 + dataset.len());
    for v in [IDX_LABELS_MAGIC, dataset.len() as u32] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    for &l in &dataset.labels {
        lab.push(u8::try_from(l).map_err(|_| Error::InvalidData(format!("label {l} does not fit a byte")))?);
    }
    for (path, bytes) in [(images_path.as_ref(), img), (labels_path.as_ref(), lab)] {
        File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Affine rescaling of every column onto [0, 1]; constant columns become 0.
pub fn normalize_minmax(dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    for mut col in out.features.axis_iter_mut(Axis(1)) {
        let min = col.fold(f64::INFINITY, |m, &v| m.min(v));
        let max = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let range = max - min;
        if range > 0.0 {
            col.mapv_inplace(|v| (v - min) / range);
        } else {
            col.fill(0.0);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Uniform, non-stratified split; the test side gets `floor(N · fraction)` samples.
pub fn split(dataset: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = dataset.len();
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let test_len = (n as f64 * spec.test_fraction).floor() as usize;
    if test_len == 0 || test_len == n {
        return Err(Error::InvalidConfig(format!(
            "test fraction {} leaves an empty side for {n} samples",
            spec.test_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, rng::STREAM_SPLIT));
    let (test_idx, train_idx) = order.split_at(test_len);
    Ok((dataset.subset(train_idx), dataset.subset(test_idx)))
}

pub fn one_hot(labels: &[usize], class_count: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((labels.len(), class_count));
    for (i, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::InvalidData(format!("label {l} outside 0..{class_count}")));
        }
        out[[i, l]] = 1.0;
    }
    Ok(out)
}

/// Shuffles `0..n` with `epoch_seed` and cuts it into consecutive slices of
/// `batch_size`; the last slice may be shorter.
pub fn minibatches(n: usize, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(epoch_seed, rng::STREAM_SHUFFLE));
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// Gaussian classes on `informative_d` dimensions followed by `noise_d`
/// pure-noise dimensions, min-max normalized.
///
/// Class `c` is centred at `4·(1 + c / informative_d)` on dimension
/// `c mod informative_d` and at 0 elsewhere, with unit variance everywhere,
/// so any two classes are at least 4σ apart.
pub fn synth_blobs(
    n_per_class: usize,
    informative_d: usize,
    noise_d: usize,
    class_count: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 || informative_d == 0 || class_count == 0 {
        return Err(Error::InvalidConfig("synthetic blobs need positive sizes".into()));
    }
    let d = informative_d + noise_d;
    let n = n_per_class * class_count;
    let mut rng = rng::stream(seed, rng::STREAM_SYNTH);
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for c in 0..class_count {
        let axis = c % informative_d;
        let offset = 4.0 * (1 + c / informative_d) as f64;
        for _ in 0..n_per_class {
            let row = labels.len();
            for j in 0..d {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features[[row, j]] = noise + if j == axis { offset } else { 0.0 };
            }
            labels.push(c);
        }
    }
    let ds = Dataset::new(features, labels, class_count)?;
    Ok(normalize_minmax(&ds).with_name("blobs"))
}
