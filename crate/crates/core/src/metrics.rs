//! Binary-classification metrics: accuracy, ROC AUC, Matthews correlation
//! coefficient, and the confusion matrix behind them. Labels are ±1 with +1
//! as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub auc: f64,
    pub mcc: f64,
    pub confusion: ConfusionMatrix,
}

fn check_labels(y_true: &[i32], y_pred: &[i32]) -> Result<()> {
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction vector",
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    for &v in y_true.iter().chain(y_pred) {
        if v != 1 && v != -1 {
            return Err(Error::InvalidLabel(f64::from(v)));
        }
    }
    Ok(())
}

pub fn confusion(y_true: &[i32], y_pred: &[i32]) -> Result<ConfusionMatrix> {
    check_labels(y_true, y_pred)?;
    let mut cm = ConfusionMatrix {
        true_pos: 0,
        true_neg: 0,
        false_pos: 0,
        false_neg: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.true_pos += 1,
            (-1, -1) => cm.true_neg += 1,
            (-1, 1) => cm.false_pos += 1,
            (1, -1) => cm.false_neg += 1,
            _ => unreachable!("labels validated"),
        }
    }
    Ok(cm)
}

/// Fraction of matching labels.
pub fn accuracy(y_true: &[i32], y_pred: &[i32]) -> Result<f64> {
    check_labels(y_true, y_pred)?;
    let matches = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(matches as f64 / y_true.len() as f64)
}

/// Matthews correlation coefficient. Any zero factor in the denominator
/// yields 0.0, the usual convention for degenerate predictors.
pub fn mcc(y_true: &[i32], y_pred: &[i32]) -> Result<f64> {
    let cm = confusion(y_true, y_pred)?;
    let (tp, tn, fp, fn_) = (
        cm.true_pos as f64,
        cm.true_neg as f64,
        cm.false_pos as f64,
        cm.false_neg as f64,
    );
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.iter().any(|&f| f == 0.0) {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt())
}

/// ROC AUC in the Mann–Whitney formulation: the probability that a random
/// positive outscores a random negative, ties counted half. Computed from
/// average ranks; equals the trapezoidal area under the ROC curve.
pub fn roc_auc(y_true: &[i32], scores: &[f64]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            what: "score vector",
            expected: y_true.len(),
            actual: scores.len(),
        });
    }
    for &v in y_true {
        if v != 1 && v != -1 {
            return Err(Error::InvalidLabel(f64::from(v)));
        }
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let n_pos = y_true.iter().filter(|&&v| v == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average 1-based ranks within tie groups, then sum ranks of positives.
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end + 1) as f64 / 2.0;
        for &idx in &order[start..=end] {
            if y_true[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end + 1;
    }

    let p = n_pos as f64;
    let n = n_neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// All metrics at once; AUC comes from the continuous scores, never from the
/// thresholded predictions.
pub fn evaluate(y_true: &[i32], y_pred: &[i32], scores: &[f64]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        acc: accuracy(y_true, y_pred)?,
        auc: roc_auc(y_true, scores)?,
        mcc: mcc(y_true, y_pred)?,
        confusion: confusion(y_true, y_pred)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accuracy_basics() {
        assert_abs_diff_eq!(accuracy(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        assert_abs_diff_eq!(accuracy(&[1, -1, 1], &[-1, 1, -1]).unwrap(), 0.0);
        let y = [1, 1, 1, 1, 1, 1, 1, -1, -1, -1];
        let p = [1, 1, 1, 1, 1, 1, -1, 1, 1, -1];
        assert_abs_diff_eq!(accuracy(&y, &p).unwrap(), 0.7);
    }

    #[test]
    fn accuracy_error_paths() {
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyInput)));
        assert!(accuracy(&[1, -1], &[1]).is_err());
        assert!(matches!(accuracy(&[1, 0], &[1, 1]), Err(Error::InvalidLabel(_))));
    }

    #[test]
    fn auc_perfect_and_tied() {
        assert_abs_diff_eq!(roc_auc(&[1, -1], &[0.9, 0.1]).unwrap(), 1.0);
        assert_abs_diff_eq!(roc_auc(&[1, -1, 1], &[0.5, 0.5, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn auc_pair_counting_example() {
        // Pairs: (0.8 vs 0.6) win, (0.4 vs 0.6) loss -> 1/2.
        assert_abs_diff_eq!(roc_auc(&[1, 1, -1], &[0.8, 0.4, 0.6]).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_an_error() {
        assert!(matches!(
            roc_auc(&[1, 1], &[0.3, 0.4]),
            Err(Error::AucUndefined)
        ));
    }

    #[test]
    fn auc_matches_exhaustive_pair_counting() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            let y: Vec<i32> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            if y.iter().all(|&v| v == y[0]) {
                continue;
            }
            // Coarse grid makes ties common.
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 / 4.0).collect();
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if y[i] == 1 && y[j] == -1 {
                        pairs += 1.0;
                        if s[i] > s[j] {
                            wins += 1.0;
                        } else if s[i] == s[j] {
                            wins += 0.5;
                        }
                    }
                }
            }
            assert_eq!(roc_auc(&y, &s).unwrap(), wins / pairs);
        }
    }

    #[test]
    fn auc_equals_trapezoidal_area() {
        // Trapezoidal ROC integration as an independent second route.
        fn trapezoid_auc(y: &[i32], s: &[f64]) -> f64 {
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
            let p = y.iter().filter(|&&v| v == 1).count() as f64;
            let n = y.len() as f64 - p;
            let mut auc = 0.0;
            let (mut tp, mut fp) = (0.0, 0.0);
            let (mut prev_tp, mut prev_fp) = (0.0, 0.0);
            let mut i = 0;
            while i < order.len() {
                let mut j = i;
                while j + 1 < order.len() && s[order[j + 1]] == s[order[i]] {
                    j += 1;
                }
                for &idx in &order[i..=j] {
                    if y[idx] == 1 {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                }
                auc += (fp - prev_fp) / n * (tp + prev_tp) / (2.0 * p);
                prev_tp = tp;
                prev_fp = fp;
                i = j + 1;
            }
            auc
        }

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let n = rng.random_range(3..30);
            let mut y: Vec<i32> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            y[0] = 1;
            y[1] = -1;
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 7.0).collect();
            assert_abs_diff_eq!(roc_auc(&y, &s).unwrap(), trapezoid_auc(&y, &s), epsilon = 1e-12);
        }
    }

    #[test]
    fn auc_complement_under_score_negation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let y: Vec<i32> = (0..20).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        // Tie-free scores.
        let s: Vec<f64> = (0..20).map(|i| i as f64 + rng.random::<f64>() * 0.5).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(
            roc_auc(&y, &s).unwrap() + roc_auc(&y, &neg).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let y = [1, -1, 1, -1, 1, -1, -1];
        let s: [f64; 7] = [0.9, 0.3, 0.5, 0.1, 0.8, 0.45, 0.2];
        let squashed: Vec<f64> = s.iter().map(|v| (3.0 * v).tanh()).collect();
        assert_abs_diff_eq!(
            roc_auc(&y, &s).unwrap(),
            roc_auc(&y, &squashed).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn mcc_known_values() {
        assert_abs_diff_eq!(mcc(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        // All-positive predictions on mixed truth: degenerate denominator.
        assert_abs_diff_eq!(mcc(&[1, -1, 1], &[1, 1, 1]).unwrap(), 0.0);
        // tp=2, tn=1, fp=1, fn=0 -> 2 / sqrt(12).
        let y = [1, 1, -1, -1];
        let p = [1, 1, 1, -1];
        assert_abs_diff_eq!(mcc(&y, &p).unwrap(), 2.0 / 12.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn mcc_symmetric_under_class_swap() {
        let y = [1, -1, 1, 1, -1, -1, 1];
        let p = [1, 1, -1, 1, -1, 1, 1];
        let swapped_y: Vec<i32> = y.iter().map(|&v| -v).collect();
        let swapped_p: Vec<i32> = p.iter().map(|&v| -v).collect();
        assert_abs_diff_eq!(
            mcc(&y, &p).unwrap(),
            mcc(&swapped_y, &swapped_p).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[1], &[1]).unwrap();
        assert_eq!((cm.true_pos, cm.true_neg, cm.false_pos, cm.false_neg), (1, 0, 0, 0));
        let cm = confusion(&[-1], &[1]).unwrap();
        assert_eq!(cm.false_pos, 1);
        let cm = confusion(&[1, -1, 1, -1], &[1, -1, -1, 1]).unwrap();
        assert_eq!((cm.true_pos, cm.true_neg, cm.false_pos, cm.false_neg), (1, 1, 1, 1));
        assert_eq!(cm.total(), 4);
    }

    #[test]
    fn exhaustive_brute_force_equivalence_length_four() {
        // Every label/prediction assignment of length 4 against definitional
        // implementations. (The acceptance suite runs length 6.)
        for mask_t in 0..16u32 {
            for mask_p in 0..16u32 {
                let y: Vec<i32> = (0..4).map(|b| if mask_t >> b & 1 == 1 { 1 } else { -1 }).collect();
                let p: Vec<i32> = (0..4).map(|b| if mask_p >> b & 1 == 1 { 1 } else { -1 }).collect();

                let matches = y.iter().zip(&p).filter(|(a, b)| a == b).count();
                assert_abs_diff_eq!(accuracy(&y, &p).unwrap(), matches as f64 / 4.0);

                let tp = y.iter().zip(&p).filter(|&(&t, &q)| t == 1 && q == 1).count() as f64;
                let tn = y.iter().zip(&p).filter(|&(&t, &q)| t == -1 && q == -1).count() as f64;
                let fp = y.iter().zip(&p).filter(|&(&t, &q)| t == -1 && q == 1).count() as f64;
                let fn_ = y.iter().zip(&p).filter(|&(&t, &q)| t == 1 && q == -1).count() as f64;
                let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
                let expected = if denom == 0.0 {
                    0.0
                } else {
                    (tp * tn - fp * fn_) / denom.sqrt()
                };
                assert_abs_diff_eq!(mcc(&y, &p).unwrap(), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn evaluate_bundles_consistently() {
        let y = [1, -1, 1, -1];
        let p = [1, -1, -1, -1];
        let s = [0.8, -0.5, -0.1, -0.9];
        let report = evaluate(&y, &p, &s).unwrap();
        assert_abs_diff_eq!(report.acc, 0.75);
        assert_abs_diff_eq!(report.auc, 1.0);
        assert_eq!(report.confusion.total(), 4);
    }
}
