//! Dataset loading, min-max normalization and the shared squared-distance matrix.
//!
//! Every downstream kernel evaluation goes through [`DistanceMatrix`], so the
//! O(N²d) distance work is done once per dataset and the kernel for any width
//! `q` is a cheap elementwise `exp(-q * d²)`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use sha2::{Digest, Sha256};

use crate::error::{EdsvcError, Result};
use crate::labeling::Labeling;

/// N×d matrix of finite feature values, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n == 0 || d == 0 {
            return Err(EdsvcError::InvalidData(format!(
                "data matrix must be non-empty, got {n}x{d}"
            )));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(EdsvcError::InvalidData(format!(
                "non-finite value {v} at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        Ok(DataMatrix { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(EdsvcError::RaggedRow {
                row: i + 1,
                expected: d,
                found: r.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((n, d), flat).map_err(|e| EdsvcError::InvalidData(e.to_string()))?;
        Self::new(values)
    }

    pub fn n_points(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.values * factor)
    }
}

/// Class identifiers read from the label column. Only ever used for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthLabels {
    labels: Vec<String>,
}

impl GroundTruthLabels {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(EdsvcError::InvalidData("no labels".into()));
        }
        Ok(GroundTruthLabels { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.to_labeling().n_clusters()
    }

    /// Class names mapped to ids in order of first appearance.
    pub fn to_labeling(&self) -> Labeling {
        let mut names: Vec<&str> = Vec::new();
        let ids = self
            .labels
            .iter()
            .map(|l| match names.iter().position(|n| *n == l.as_str()) {
                Some(p) => p,
                None => {
                    names.push(l);
                    names.len() - 1
                }
            })
            .collect();
        Labeling::from_assignments(ids)
    }
}

/// Which CSV column, if any, holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    /// Zero-based column index.
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "last" | "-1" => Ok(LabelColumn::Last),
            other => other
                .parse::<usize>()
                .map(LabelColumn::Index)
                .map_err(|_| format!("label column must be 'last' or a 0-based index, got {s:?}")),
        }
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Loads a comma-separated file. A first row with no numeric cell is taken
/// as a header. Row and column numbers in errors are 1-based file positions.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<LabelColumn>,
) -> Result<(DataMatrix, Option<GroundTruthLabels>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| EdsvcError::io(path, e))?;
    load_csv_from_reader(BufReader::new(file), label_column)
}

pub fn load_csv_from_reader<R: Read>(
    reader: R,
    label_column: Option<LabelColumn>,
) -> Result<(DataMatrix, Option<GroundTruthLabels>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;

    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = line + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let n_cols = record.len();
        match width {
            None => {
                width = Some(n_cols);
                label_idx = match label_column {
                    None => None,
                    Some(LabelColumn::Last) => Some(n_cols - 1),
                    Some(LabelColumn::Index(c)) if c < n_cols => Some(c),
                    Some(LabelColumn::Index(c)) => {
                        return Err(EdsvcError::LabelColumnOutOfRange {
                            column: c as isize,
                            n_columns: n_cols,
                        })
                    }
                };
                if label_idx.is_some() && n_cols < 2 {
                    return Err(EdsvcError::InvalidData(
                        "a label column needs at least one feature column beside it".into(),
                    ));
                }
                if line == 0 && record.iter().all(|c| parse_number(c).is_none()) {
                    continue;
                }
            }
            Some(w) if w != n_cols => {
                return Err(EdsvcError::RaggedRow {
                    row: row_no,
                    expected: w,
                    found: n_cols,
                })
            }
            Some(_) => {}
        }

        let mut features = Vec::with_capacity(n_cols);
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            match parse_number(cell) {
                Some(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(EdsvcError::ParseCell {
                        row: row_no,
                        column: col + 1,
                        value: cell.to_string(),
                    })
                }
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(EdsvcError::InvalidData("file contains no data rows".into()));
    }
    let data = DataMatrix::from_rows(&rows)?;
    let truth = match label_idx {
        Some(_) => Some(GroundTruthLabels::new(labels)?),
        None => None,
    };
    Ok((data, truth))
}

/// Maps each column affinely onto [0, 1]. Constant columns become all zeros.
pub fn normalize_minmax(data: &DataMatrix) -> DataMatrix {
    let mut values = data.values.clone();
    for mut col in values.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span > 0.0 {
            col.mapv_inplace(|v| ((v - lo) / span).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
        }
    }
    DataMatrix { values }
}

/// Symmetric N×N matrix of squared Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    sq_dists: Array2<f64>,
}

const CACHE_MAGIC: &[u8; 8] = b"EDSVCDM1";

impl DistanceMatrix {
    pub fn n_points(&self) -> usize {
        self.sq_dists.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sq_dists[[i, j]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.sq_dists.row(i)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.sq_dists
    }

    /// Mean of the nonzero off-diagonal entries, or `None` when every point coincides.
    pub fn mean_nonzero(&self) -> Option<f64> {
        let n = self.n_points();
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.sq_dists[[i, j]];
                if v > 0.0 {
                    sum += v;
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Binary layout: 8-byte magic, N as little-endian u64, then N² little-endian f64 row-major.
    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.n_points();
        let mut buf = Vec::with_capacity(16 + 8 * n * n);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        for v in self.sq_dists.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = File::create(path).map_err(|e| EdsvcError::io(path, e))?;
        f.write_all(&buf).map_err(|e| EdsvcError::io(path, e))
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |reason: &str| EdsvcError::BadCache {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let bytes = std::fs::read(path).map_err(|e| EdsvcError::io(path, e))?;
        if bytes.len() < 16 || &bytes[..8] != CACHE_MAGIC {
            return Err(bad("missing magic header"));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let expected = n
            .checked_mul(n)
            .and_then(|nn| nn.checked_mul(8))
            .and_then(|b| b.checked_add(16))
            .ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes for N = {n}, found {}",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let sq_dists = Array2::from_shape_vec((n, n), values).map_err(|e| bad(&e.to_string()))?;
        Ok(DistanceMatrix { sq_dists })
    }
}

/// Squared distances Σ_k (x_ik − x_jk)², computed once per unordered pair and mirrored.
pub fn pairwise_sq_dists(data: &DataMatrix) -> DistanceMatrix {
    let n = data.n_points();
    let mut sq_dists = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let xi = data.row(i);
        for j in (i + 1)..n {
            let d: f64 = xi.iter().zip(data.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            sq_dists[[i, j]] = d;
            sq_dists[[j, i]] = d;
        }
    }
    DistanceMatrix { sq_dists }
}

/// Hex SHA-256 over the shape and the exact bit patterns of the data.
pub fn content_key(data: &DataMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update((data.n_points() as u64).to_le_bytes());
    hasher.update((data.n_dims() as u64).to_le_bytes());
    for v in data.values().iter() {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

pub fn cache_path(cache_dir: impl AsRef<Path>, data: &DataMatrix) -> PathBuf {
    cache_dir.as_ref().join(format!("{}.dmat", &content_key(data)[..32]))
}

/// Reads the distance matrix from `cache_dir` if a sidecar for this exact data
/// exists, otherwise computes and writes it.
pub fn cached_pairwise_sq_dists(data: &DataMatrix, cache_dir: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let dir = cache_dir.as_ref();
    let path = cache_path(dir, data);
    if path.exists() {
        match DistanceMatrix::read_from(&path) {
            Ok(dm) if dm.n_points() == data.n_points() => return Ok(dm),
            Ok(_) => log::warn!("ignoring cache {} with wrong size", path.display()),
            Err(e) => log::warn!("ignoring unreadable cache: {e}"),
        }
    }
    let dm = pairwise_sq_dists(data);
    std::fs::create_dir_all(dir).map_err(|e| EdsvcError::io(dir, e))?;
    dm.write_to(&path)?;
    Ok(dm)
}
