//! Rank-based discrimination measures.

use std::cmp::Ordering;

use super::PredictionSet;
use crate::error::{PpmError, Result};

/// Mann-Whitney estimate of the area under the ROC curve; ties count 1/2.
pub fn auroc(ps: &PredictionSet) -> Result<f64> {
    let (pos, neg) = ps.class_counts();
    if pos == 0 || neg == 0 {
        return Err(PpmError::Undefined("AUROC needs both outcome classes"));
    }
    let p = ps.predictions();
    let y = ps.outcomes();
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap_or(Ordering::Equal));

    // Sum of mid-ranks of the positives; mid-ranks are half-integers, so
    // every partial sum below is exact.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && p[order[end]] == p[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let block_pos = order[start..end].iter().filter(|&&i| y[i] == 1).count();
        rank_sum += mid_rank * block_pos as f64;
        start = end;
    }
    let (pos, neg) = (pos as f64, neg as f64);
    Ok((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// Average precision over a descending-score sweep; tied scores form one block.
pub fn auprc(ps: &PredictionSet) -> Result<f64> {
    let (pos, _) = ps.class_counts();
    if pos == 0 {
        return Err(PpmError::Undefined("AUPRC needs at least one positive"));
    }
    let p = ps.predictions();
    let y = ps.outcomes();
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(Ordering::Equal));

    let (mut tp, mut fp, mut area) = (0usize, 0usize, 0.0);
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && p[order[end]] == p[order[start]] {
            end += 1;
        }
        let block_tp = order[start..end].iter().filter(|&&i| y[i] == 1).count();
        tp += block_tp;
        fp += (end - start) - block_tp;
        if block_tp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            area += precision * block_tp as f64 / pos as f64;
        }
        start = end;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn ps(y: &[u8], p: &[f64]) -> PredictionSet {
        PredictionSet::new(y.to_vec(), p.to_vec()).unwrap()
    }

    fn pair_count(y: &[u8], p: &[f64]) -> f64 {
        let (mut score, mut pairs) = (0.0, 0.0);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    if p[i] > p[j] {
                        score += 1.0;
                    } else if p[i] == p[j] {
                        score += 0.5;
                    }
                }
            }
        }
        score / pairs
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&ps(&[1, 1, 0, 0], &[0.9, 0.8, 0.3, 0.1])).unwrap(), 1.0);
        assert_eq!(auroc(&ps(&[1, 0, 1, 0], &[0.4; 4])).unwrap(), 0.5);
        assert_eq!(auroc(&ps(&[1, 1, 0, 0], &[0.9, 0.4, 0.6, 0.2])).unwrap(), 0.75);
        assert!(auroc(&ps(&[1, 1], &[0.2, 0.3])).is_err());
    }

    #[test]
    fn auroc_equals_exhaustive_pair_count() {
        let mut rng = rng_from_seed(3);
        for _ in 0..500 {
            let n = rng.random_range(2..=12);
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            // coarse grid forces ties
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 / 4.0).collect();
            let set = ps(&y, &p);
            match auroc(&set) {
                Ok(a) => assert_eq!(a, pair_count(&y, &p)),
                Err(_) => assert!(y.iter().all(|&v| v == y[0])),
            }
        }
    }

    #[test]
    fn auroc_invariant_under_monotone_transform() {
        let mut rng = rng_from_seed(4);
        let y: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
        let p: Vec<f64> = (0..200).map(|_| (rng.random_range(0..40) as f64) / 40.0).collect();
        let q: Vec<f64> = p.iter().map(|v| (3.0 * v).exp() / 30.0).collect();
        assert_eq!(auroc(&ps(&y, &p)).unwrap(), auroc(&ps(&y, &q)).unwrap());
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&ps(&[1, 1, 0], &[0.9, 0.8, 0.1])).unwrap(), 1.0);
        assert_eq!(auprc(&ps(&[1, 0], &[0.2, 0.9])).unwrap(), 0.5);
        let y = [1, 0, 0, 1, 0, 0, 0, 0, 0, 0];
        assert_abs_diff_eq!(auprc(&ps(&y, &[0.3; 10])).unwrap(), 0.2, epsilon = 1e-15);
        assert!(auprc(&ps(&[0, 0], &[0.3, 0.4])).is_err());
    }
}
