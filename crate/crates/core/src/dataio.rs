//! Dataset ingestion and synthetic generation.
//!
//! The single ingestion format is CSV with a header row and a column named
//! `label`; every other column is a feature, in header order. Labels {0, 1}
//! are mapped to {-1, +1}; labels already in {-1, +1} pass through. The
//! synthetic generator stands in for real data in tests and imbalance
//! studies.

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// An immutable tabular dataset with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<i32>,
    pub feature_names: Vec<String>,
    /// Where the data came from, embedded in result metadata.
    pub source: String,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// (positives, negatives).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&v| v == 1).count();
        (pos, self.labels.len() - pos)
    }
}

/// Load a dataset from CSV.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or(Error::MissingLabelColumn)?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut saw_zero = false;
    let mut saw_minus_one = false;

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        for (col, cell) in record.iter().enumerate() {
            let column = headers.get(col).unwrap_or("?").to_string();
            let value: f64 = cell.trim().parse().map_err(|_| Error::CsvCell {
                row,
                column: column.clone(),
                value: cell.to_string(),
            })?;
            if col == label_col {
                match value {
                    0.0 => saw_zero = true,
                    -1.0 => saw_minus_one = true,
                    1.0 => {}
                    other => {
                        return Err(Error::CsvCell {
                            row,
                            column,
                            value: other.to_string(),
                        })
                    }
                }
                raw_labels.push(value);
            } else {
                if !value.is_finite() {
                    return Err(Error::NonFinite("feature column"));
                }
                rows.push(value);
            }
        }
    }

    if raw_labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if saw_zero && saw_minus_one {
        return Err(Error::MixedLabelConventions);
    }
    let labels: Vec<i32> = raw_labels
        .iter()
        .map(|&v| if v == 0.0 || v == -1.0 { -1 } else { 1 })
        .collect();

    let n = labels.len();
    let d = feature_names.len();
    let features = Array2::from_shape_vec((n, d), rows).map_err(|_| Error::Config(
        "ragged CSV rows".into(),
    ))?;

    let dataset = Dataset {
        features,
        labels,
        feature_names,
        source: format!("csv:{}", path.display()),
    };
    let (pos, neg) = dataset.class_counts();
    log::info!(
        "loaded {} rows x {} features from {} ({pos} positive, {neg} negative)",
        n,
        d,
        path.display()
    );
    Ok(dataset)
}

/// Write a dataset to CSV with a `label` column holding ±1.
///
/// Feature values use the shortest decimal representation that round-trips,
/// so load(save(ds)) reproduces the matrix bit for bit.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = dataset.feature_names.clone();
    header.push("label".to_string());
    writer.write_record(&header)?;
    for (row, &label) in dataset.features.rows().into_iter().zip(&dataset.labels) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Two spherical unit-variance Gaussian clusters whose means sit
/// `separation` apart along the first axis. Exactly round(n * pos_fraction)
/// samples are positive; generation is deterministic per seed.
pub fn generate_synthetic(
    n: usize,
    d: usize,
    pos_fraction: f64,
    separation: f64,
    rng_seed: u64,
) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument {
            what: "synthetic sample count",
            details: format!("{n} < 2"),
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument {
            what: "synthetic feature count",
            details: "must be at least 1".into(),
        });
    }
    if !(0.0 < pos_fraction && pos_fraction < 1.0) {
        return Err(Error::InvalidArgument {
            what: "positive fraction",
            details: format!("{pos_fraction} outside (0, 1)"),
        });
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument {
            what: "separation",
            details: format!("{separation} must be finite and nonnegative"),
        });
    }

    let n_pos = (n as f64 * pos_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (label, offset) = if i < n_pos {
            (1, separation / 2.0)
        } else {
            (-1, -separation / 2.0)
        };
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features[[i, j]] = noise + if j == 0 { offset } else { 0.0 };
        }
        labels.push(label);
    }

    Ok(Dataset {
        features,
        labels,
        feature_names: (0..d).map(|j| format!("f{j}")).collect(),
        source: format!(
            "synthetic(n={n},d={d},pos_fraction={pos_fraction},separation={separation},seed={rng_seed})"
        ),
    })
}
