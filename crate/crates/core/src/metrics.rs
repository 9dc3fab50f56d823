//! Evaluation metrics: parameter-error norms, validation MSE, and AUC.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("AUC requires at least one positive and one negative label")]
    SingleClassLabels,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Parameter estimation error (‖β̂ − β*‖₁, ‖β̂ − β*‖₂²).
pub fn param_error(beta_hat: &[f64], beta_star: &[f64]) -> (f64, f64) {
    assert_eq!(beta_hat.len(), beta_star.len());
    let mut l1 = 0.0;
    let mut l2sq = 0.0;
    for (a, b) in beta_hat.iter().zip(beta_star) {
        let d = a - b;
        l1 += d.abs();
        l2sq += d * d;
    }
    (l1, l2sq)
}

/// Mean squared error (1/n)‖y − ŷ‖₂².
pub fn mse(y_hat: &[f64], y: &[f64]) -> f64 {
    assert_eq!(y_hat.len(), y.len());
    let n = y.len() as f64;
    y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n
}

/// Area under the ROC curve by the rank-based Mann–Whitney statistic,
/// with half credit for tied score pairs. O(n log n).
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must not be NaN"));

    // average ranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k] == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * nn))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_error_identical() {
        assert_eq!(param_error(&[1.0, 2.0], &[1.0, 2.0]), (0.0, 0.0));
    }

    #[test]
    fn param_error_hand_values() {
        assert_eq!(param_error(&[1.0, 0.0], &[0.0, 1.0]), (2.0, 2.0));
    }

    #[test]
    fn mse_hand_values() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, -1.0]), 1.0);
    }

    #[test]
    fn auc_one_concordant_one_discordant() {
        let a = auc(&[0.9, 0.8, 0.3], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(a, 0.5);
    }

    #[test]
    fn auc_perfect_separation() {
        let a = auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn auc_all_tied_scores() {
        let a = auc(&[0.5, 0.5, 0.5], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(a, 0.5);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert_eq!(auc(&[0.1, 0.9], &[1.0, 1.0]).unwrap_err(), MetricError::SingleClassLabels);
    }
}
