//! Datasets: synthetic generators, LIBSVM input and a CSV cache.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Features and real targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    /// `N × d`
    pub features: DenseMatrix,
    pub targets: Vec<f64>,
    /// Seed and mode, or the source path.
    pub source: String,
}

/// Features and labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDataset {
    pub features: DenseMatrix,
    pub labels: Vec<f64>,
    pub source: String,
}

fn check_finite(features: &DenseMatrix, targets: &[f64]) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::InsufficientData("dataset has no samples".into()));
    }
    if features.rows() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "dataset targets",
            expected: features.rows(),
            got: targets.len(),
        });
    }
    if features.as_slice().iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "data",
            reason: "non-finite entry".into(),
        });
    }
    Ok(())
}

impl RegressionDataset {
    pub fn new(features: DenseMatrix, targets: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        check_finite(&features, &targets)?;
        Ok(Self {
            features,
            targets,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Mean squared error `(1/N) Σ (θᵀx_i - y_i)²`.
    pub fn mse(&self, theta: &[f64]) -> f64 {
        let pred = self.features.mul_vec(theta);
        pred.iter().zip(&self.targets).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// First `count` samples and the rest.
    pub fn split(&self, count: usize) -> Result<(Self, Self)> {
        if count == 0 || count >= self.len() {
            return Err(Error::InvalidParameter {
                name: "count",
                reason: format!("split point {count} must lie strictly inside 0..{}", self.len()),
            });
        }
        let d = self.dim();
        let part = |lo: usize, hi: usize, tag: &str| {
            Self::new(
                DenseMatrix::from_row_major(hi - lo, d, self.features.as_slice()[lo * d..hi * d].to_vec()),
                self.targets[lo..hi].to_vec(),
                format!("{} [{tag}]", self.source),
            )
        };
        Ok((part(0, count, "train")?, part(count, self.len(), "test")?))
    }
}

impl ClassificationDataset {
    pub fn new(features: DenseMatrix, labels: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        check_finite(&features, &labels)?;
        if let Some(bad) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(Error::InvalidParameter {
                name: "labels",
                reason: format!("labels must be -1 or +1, got {bad}"),
            });
        }
        Ok(Self {
            features,
            labels,
            source: source.into(),
        })
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
}

/// How synthetic regression targets are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// `y = θ*ᵀx + 0.5 ε` with `θ* ~ N(0, I)` and `ε ~ N(0, 1)`.
    Planted,
    /// `y ~ N(0, 1)` independent of `x`.
    Independent,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "planted" | "planted-linear-model" => Ok(TargetMode::Planted),
            "independent" | "independent-gaussian-targets" => Ok(TargetMode::Independent),
            other => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("expected planted or independent, got `{other}`"),
            }),
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard normal features from a ChaCha8 stream seeded with `seed`.
pub fn synth_regression_data(n: usize, d: usize, seed: u64, mode: TargetMode) -> Result<RegressionDataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter {
            name: "shape",
            reason: format!("need N, d >= 1, got {n} x {d}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta_star: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
    let mut data = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let noise = gauss(&mut rng);
        targets.push(match mode {
            TargetMode::Planted => crate::linalg::dot(&theta_star, &row) + 0.5 * noise,
            TargetMode::Independent => noise,
        });
        data.extend(row);
    }
    let mode_name = match mode {
        TargetMode::Planted => "planted",
        TargetMode::Independent => "independent",
    };
    RegressionDataset::new(
        DenseMatrix::from_row_major(n, d, data),
        targets,
        format!("synthetic regression seed={seed} mode={mode_name}"),
    )
}

/// Draws `count` points from `N(0, I_2)`, drops those with `‖x‖ ∈ (√2/η, η√2)` and labels
/// the rest by `sign(‖x‖ - √2)` (`+1` on the circle itself).
pub fn synth_ring_classification(count: usize, eta: f64, seed: u64) -> Result<ClassificationDataset> {
    if !(eta >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: format!("must be at least 1, got {eta}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (std::f64::consts::SQRT_2 / eta, eta * std::f64::consts::SQRT_2);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..count {
        let p = [gauss(&mut rng), gauss(&mut rng)];
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r > lo && r < hi {
            continue;
        }
        labels.push(if r >= std::f64::consts::SQRT_2 { 1.0 } else { -1.0 });
        data.extend_from_slice(&p);
    }
    ClassificationDataset::new(
        DenseMatrix::from_row_major(labels.len(), 2, data),
        labels,
        format!("ring seed={seed} eta={eta}"),
    )
}

/// Parses LIBSVM text: `target idx:val idx:val …` per line with 1-based indices. Blank
/// lines and lines starting with `#` are skipped. The dimension is `dim` when given (an
/// index beyond it is an error), else the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>, source: &str) -> Result<RegressionDataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut max_idx = 0;
    for (no, line) in reader.lines().enumerate() {
        let line_no = no + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let t = tokens.next().expect("nonempty line");
        let target: f64 = t.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad target `{t}`"),
        })?;
        let mut row = Vec::new();
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected idx:value, got `{tok}`"),
            })?;
            let idx: usize = i.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad index `{i}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "indices are 1-based".into(),
                });
            }
            let val: f64 = v.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad value `{v}`"),
            })?;
            if let Some(d) = dim {
                if idx > d {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("index {idx} exceeds the declared dimension {d}"),
                    });
                }
            }
            max_idx = max_idx.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        targets.push(target);
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{source}: no samples")));
    }
    let d = dim.unwrap_or(max_idx).max(1);
    let mut m = DenseMatrix::zeros(rows.len(), d);
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            m.set(r, j, v);
        }
    }
    RegressionDataset::new(m, targets, source)
}

pub fn load_libsvm(path: &Path, dim: Option<usize>) -> Result<RegressionDataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_libsvm(std::io::BufReader::new(f), dim, &path.display().to_string())
}

fn write_rows<W: Write>(mut w: W, head: &str, features: &DenseMatrix, first: &[f64]) -> Result<()> {
    let mut header = vec![head.to_string()];
    header.extend((1..=features.cols()).map(|j| format!("x{j}")));
    writeln!(w, "{}", header.join(","))?;
    for (i, t) in first.iter().enumerate() {
        let mut cells = vec![format!("{t:e}")];
        cells.extend(features.row(i).iter().map(|v| format!("{v:e}")));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn read_rows<R: BufRead>(reader: R) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })??;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "need a target column and at least one feature".into(),
        });
    }
    let mut data = Vec::new();
    let mut first = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: no + 2,
                message: e.to_string(),
            })?;
        if vals.len() != cols {
            return Err(Error::Parse {
                line: no + 2,
                message: format!("expected {cols} fields, got {}", vals.len()),
            });
        }
        first.push(vals[0]);
        data.extend_from_slice(&vals[1..]);
    }
    Ok((DenseMatrix::from_row_major(first.len(), cols - 1, data), first))
}

/// CSV cache with header `target,x1,…,xd`.
pub fn write_regression_csv<W: Write>(w: W, data: &RegressionDataset) -> Result<()> {
    write_rows(w, "target", &data.features, &data.targets)
}

pub fn read_regression_csv<R: BufRead>(reader: R, source: &str) -> Result<RegressionDataset> {
    let (m, t) = read_rows(reader)?;
    RegressionDataset::new(m, t, source)
}

/// CSV cache with header `label,x1,…,xd`.
pub fn write_classification_csv<W: Write>(w: W, data: &ClassificationDataset) -> Result<()> {
    write_rows(w, "label", &data.features, &data.labels)
}

pub fn read_classification_csv<R: BufRead>(reader: R, source: &str) -> Result<ClassificationDataset> {
    let (m, l) = read_rows(reader)?;
    ClassificationDataset::new(m, l, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn libsvm_zero_fills_absent_indices() {
        let d = parse_libsvm("1.5 1:0.2 3:-1\n".as_bytes(), Some(3), "inline").unwrap();
        assert_eq!(d.features.row(0), &[0.2, 0.0, -1.0]);
        assert_eq!(d.targets, vec![1.5]);
    }

    #[test]
    fn libsvm_reports_line_numbers() {
        let err = parse_libsvm("1 1:0.5\n2 2:x\n".as_bytes(), None, "inline").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                message: "bad value `x`".into()
            }
        );
        assert!(matches!(parse_libsvm("".as_bytes(), None, "e"), Err(Error::InsufficientData(_))));
        assert!(matches!(parse_libsvm("1 0:1\n".as_bytes(), None, "e"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_cache_round_trips() {
        let d = synth_regression_data(7, 3, 11, TargetMode::Planted).unwrap();
        let mut buf = Vec::new();
        write_regression_csv(&mut buf, &d).unwrap();
        let back = read_regression_csv(buf.as_slice(), &d.source).unwrap();
        assert_eq!(back, d);
        let c = synth_ring_classification(40, 1.2, 3).unwrap();
        let mut buf = Vec::new();
        write_classification_csv(&mut buf, &c).unwrap();
        assert_eq!(read_classification_csv(buf.as_slice(), &c.source).unwrap(), c);
    }

    #[test]
    fn ring_band_is_empty_of_samples() {
        let c = synth_ring_classification(2000, 1.2, 5).unwrap();
        let (lo, hi) = (2f64.sqrt() / 1.2, 1.2 * 2f64.sqrt());
        for i in 0..c.len() {
            let r = crate::linalg::norm(c.features.row(i));
            assert!(!(r > lo && r < hi));
            assert_eq!(c.labels[i], if r >= 2f64.sqrt() { 1.0 } else { -1.0 });
        }
        assert_eq!(synth_ring_classification(500, 1.0, 5).unwrap().len(), 500);
        assert!(synth_ring_classification(10, 0.9, 5).is_err());
    }

    #[test]
    fn synthetic_regression_is_deterministic_and_centered() {
        let a = synth_regression_data(500, 10, 42, TargetMode::Planted).unwrap();
        assert_eq!(a, synth_regression_data(500, 10, 42, TargetMode::Planted).unwrap());
        assert_eq!((a.features.rows(), a.features.cols(), a.targets.len()), (500, 10, 500));
        for j in 0..10 {
            let mean: f64 = (0..500).map(|i| a.features.get(i, j)).sum::<f64>() / 500.0;
            assert!(mean.abs() <= 4.0 / 500f64.sqrt());
        }
        assert_ne!(a, synth_regression_data(500, 10, 43, TargetMode::Planted).unwrap());
    }
}
