//! Result rendering: markdown tables, plot-ready CSVs, Gram-matrix caching.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

use super::config::ModelKind;
use super::runner::ResultRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Acc,
    Auc,
    Mcc,
}

impl MetricKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acc" | "accuracy" => Ok(MetricKind::Acc),
            "auc" => Ok(MetricKind::Auc),
            "mcc" => Ok(MetricKind::Mcc),
            other => Err(Error::Config(format!("unknown metric \"{other}\""))),
        }
    }

    fn extract(&self, record: &ResultRecord) -> f64 {
        match self {
            MetricKind::Acc => record.acc,
            MetricKind::Auc => record.auc,
            MetricKind::Mcc => record.mcc,
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricKind::Acc => write!(f, "acc"),
            MetricKind::Auc => write!(f, "auc"),
            MetricKind::Mcc => write!(f, "mcc"),
        }
    }
}

/// Render one model's metric as a markdown table: dimensions as ascending
/// rows, sample sizes as ascending columns, 4-decimal cells, every maximal
/// cell bolded, missing cells as an em dash.
///
/// `epochs` selects among VQC depths; pass `None` when the selection is
/// unambiguous (SVM models, or a single epoch value in the records).
pub fn render_table(
    records: &[ResultRecord],
    metric: MetricKind,
    model: ModelKind,
    epochs: Option<usize>,
) -> Result<String> {
    let model_rows: Vec<&ResultRecord> = records.iter().filter(|r| r.model == model).collect();
    let epochs = match epochs {
        Some(e) => e,
        None => {
            let distinct: BTreeSet<usize> = model_rows.iter().map(|r| r.epochs).collect();
            match distinct.len() {
                0 => 0,
                1 => *distinct.iter().next().unwrap(),
                _ => {
                    return Err(Error::Config(format!(
                        "records hold multiple epoch values {distinct:?}; pass --epochs"
                    )))
                }
            }
        }
    };
    let selected: Vec<&ResultRecord> = model_rows
        .into_iter()
        .filter(|r| r.epochs == epochs)
        .collect();
    if selected.is_empty() {
        return Err(Error::Config(format!(
            "no records for model {model} at {epochs} epochs"
        )));
    }

    let dims: Vec<usize> = selected.iter().map(|r| r.dim).collect::<BTreeSet<_>>().into_iter().collect();
    let sizes: Vec<usize> = selected
        .iter()
        .map(|r| r.n_samples)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let value_at = |dim: usize, n: usize| -> Option<f64> {
        selected
            .iter()
            .find(|r| r.dim == dim && r.n_samples == n)
            .map(|r| metric.extract(r))
    };
    let max = selected
        .iter()
        .map(|r| metric.extract(r))
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut out = String::new();
    out.push_str("| dim |");
    for n in &sizes {
        out.push_str(&format!(" {n} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &sizes {
        out.push_str("---|");
    }
    out.push('\n');
    for &dim in &dims {
        out.push_str(&format!("| {dim} |"));
        for &n in &sizes {
            match value_at(dim, n) {
                Some(v) if v.is_nan() => out.push_str(" — |"),
                Some(v) if v == max => out.push_str(&format!(" **{v:.4}** |")),
                Some(v) => out.push_str(&format!(" {v:.4} |")),
                None => out.push_str(" — |"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write plot-ready CSVs under `out_dir/<model>/`:
/// `acc_vs_dim.csv` (rows = dims, one accuracy column per sample size) and
/// `auc_vs_samples.csv` (rows = sizes, one AUC column per dim). When several
/// epoch values exist for a (dim, size) pair, the deepest run wins. With no
/// records, header-only files land directly in `out_dir`.
pub fn emit_plot_data(records: &[ResultRecord], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    if records.is_empty() {
        std::fs::write(out_dir.join("acc_vs_dim.csv"), "dim\n")?;
        std::fs::write(out_dir.join("auc_vs_samples.csv"), "n\n")?;
        return Ok(());
    }

    let models: BTreeSet<&'static str> = records.iter().map(|r| r.model.as_str()).collect();
    for model_name in models {
        let selected: Vec<&ResultRecord> = records
            .iter()
            .filter(|r| r.model.as_str() == model_name)
            .collect();
        let dims: Vec<usize> = selected.iter().map(|r| r.dim).collect::<BTreeSet<_>>().into_iter().collect();
        let sizes: Vec<usize> = selected
            .iter()
            .map(|r| r.n_samples)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let best = |dim: usize, n: usize| -> Option<&&ResultRecord> {
            selected
                .iter()
                .filter(|r| r.dim == dim && r.n_samples == n)
                .max_by_key(|r| r.epochs)
        };

        let dir = out_dir.join(model_name.to_ascii_lowercase());
        std::fs::create_dir_all(&dir)?;

        let mut acc = String::from("dim");
        for n in &sizes {
            acc.push_str(&format!(",{n}"));
        }
        acc.push('\n');
        for &dim in &dims {
            acc.push_str(&dim.to_string());
            for &n in &sizes {
                acc.push(',');
                if let Some(r) = best(dim, n) {
                    acc.push_str(&r.acc.to_string());
                }
            }
            acc.push('\n');
        }
        std::fs::write(dir.join("acc_vs_dim.csv"), acc)?;

        let mut auc = String::from("n");
        for dim in &dims {
            auc.push_str(&format!(",{dim}"));
        }
        auc.push('\n');
        for &n in &sizes {
            auc.push_str(&n.to_string());
            for &dim in &dims {
                auc.push(',');
                if let Some(r) = best(dim, n) {
                    auc.push_str(&r.auc.to_string());
                }
            }
            auc.push('\n');
        }
        std::fs::write(dir.join("auc_vs_samples.csv"), auc)?;
    }
    Ok(())
}

/// Write a Gram matrix as headerless square CSV, row-major.
pub fn save_kernel_csv(values: &Array2<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in values.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a Gram matrix written by [`save_kernel_csv`].
pub fn load_kernel_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .enumerate()
            .map(|(j, cell)| {
                cell.trim().parse().map_err(|_| Error::CsvCell {
                    row: i + 1,
                    column: format!("{j}"),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "kernel CSV is not square: {n} rows but row widths vary"
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((n, n), flat).expect("n*n entries"))
}
