use crate::error::{Error, Result};
use crate::estimation::bernoulli_loglik;

/// Area under the ROC curve by the Mann-Whitney statistic; tied scores
/// count one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC needs both classes among the labels".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // Midrank of positions start..end, 1-based.
        let midrank = 0.5 * ((start + 1) + end) as f64;
        rank_sum += idx[start..end].iter().filter(|&&i| labels[i] == 1.0).count() as f64 * midrank;
        start = end;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Total Bernoulli log-likelihood of `labels` under predicted log-odds.
pub fn oos_loglik(log_odds: &[f64], labels: &[f64]) -> f64 {
    log_odds.iter().zip(labels).map(|(&e, &y)| bernoulli_loglik(y, e)).sum()
}
