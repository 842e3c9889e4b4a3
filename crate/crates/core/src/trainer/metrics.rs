use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("vectors of length {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two entries, got {0}")]
    TooShort(usize),
    #[error("a constant vector has no rank correlation")]
    Degenerate,
    #[error("ranking {0:?} is not a permutation of 1..k")]
    InvalidRanking(Vec<usize>),
    #[error("no instance has both a solving and a failing verifier")]
    NoEligibleInstances,
    #[error("K = {k} outside 1..={portfolio}")]
    BadK { k: usize, portfolio: usize },
}

/// 1-based ranks in ascending value order; ties share their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of the average-rank vectors. Without
/// ties this is 1 − 6Σd²/(n(n²−1)).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(MetricError::TooShort(n));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(MetricError::Degenerate);
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    // Average ranks always have mean (n + 1) / 2.
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

fn check_permutation(r: &[usize], k: usize) -> Result<(), MetricError> {
    let mut seen = vec![false; k];
    let ok = r.len() == k
        && r.iter().all(|&x| {
            (1..=k).contains(&x) && !std::mem::replace(&mut seen[x - 1], true)
        });
    if ok {
        Ok(())
    } else {
        Err(MetricError::InvalidRanking(r.to_vec()))
    }
}

/// Borda count per verifier, `Σ k − rank`.
pub fn borda_counts(rankings: &[Vec<usize>], k: usize) -> Result<Vec<usize>, MetricError> {
    let mut counts = vec![0; k];
    for r in rankings {
        check_permutation(r, k)?;
        for (v, &rank) in r.iter().enumerate() {
            counts[v] += k - rank;
        }
    }
    Ok(counts)
}

/// Verifiers by descending Borda count, ties by ascending index.
/// `rankings[i][v]` is verifier `v`'s rank (1 = best) on instance `i`.
pub fn borda_ordering(rankings: &[Vec<usize>], k: usize) -> Result<Vec<usize>, MetricError> {
    let counts = borda_counts(rankings, k)?;
    Ok(order_by_count(&counts))
}

/// Indices sorted by descending count, ties by ascending index.
pub fn order_by_count(counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessSummary {
    pub accuracy: f64,
    pub eligible: usize,
    pub all_solved: usize,
    pub none_solved: usize,
}

/// Share of eligible instances whose top-1 choice solved them. Instances
/// solved by every verifier or by none are left out.
pub fn success_accuracy(top1: &[usize], solved: &[Vec<bool>]) -> Result<SuccessSummary, MetricError> {
    if top1.len() != solved.len() {
        return Err(MetricError::LengthMismatch(top1.len(), solved.len()));
    }
    let (mut hits, mut eligible, mut all, mut none) = (0usize, 0usize, 0usize, 0usize);
    for (&pick, row) in top1.iter().zip(solved) {
        if row.iter().all(|&s| s) {
            all += 1;
        } else if !row.iter().any(|&s| s) {
            none += 1;
        } else {
            eligible += 1;
            hits += usize::from(row[pick]);
        }
    }
    if eligible == 0 {
        return Err(MetricError::NoEligibleInstances);
    }
    Ok(SuccessSummary {
        accuracy: hits as f64 / eligible as f64,
        eligible,
        all_solved: all,
        none_solved: none,
    })
}

/// Share of instances whose best verifier is missing from the first `k`
/// predicted.
pub fn topk_error(orderings: &[Vec<usize>], best: &[usize], k: usize) -> Result<f64, MetricError> {
    if orderings.len() != best.len() {
        return Err(MetricError::LengthMismatch(orderings.len(), best.len()));
    }
    let portfolio = orderings.first().map_or(0, Vec::len);
    if k == 0 || k > portfolio {
        return Err(MetricError::BadK { k, portfolio });
    }
    let misses = orderings
        .iter()
        .zip(best)
        .filter(|(o, b)| !o[..k].contains(b))
        .count();
    Ok(misses as f64 / orderings.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(spearman(&x, &[1.0, 2.0, 4.0, 3.0]).unwrap(), 0.8);
        assert_eq!(spearman(&x, &[1.0; 4]), Err(MetricError::Degenerate));
        assert_eq!(spearman(&x, &[1.0]), Err(MetricError::LengthMismatch(4, 1)));
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn borda_examples() {
        assert_eq!(borda_ordering(&[vec![2, 3, 1]], 3).unwrap(), vec![2, 0, 1]);
        let r = vec![vec![1, 2, 3], vec![2, 1, 3]];
        assert_eq!(borda_counts(&r, 3).unwrap(), vec![3, 3, 0]);
        assert_eq!(borda_ordering(&r, 3).unwrap(), vec![0, 1, 2]);
        assert!(matches!(
            borda_ordering(&[vec![1, 1, 3]], 3),
            Err(MetricError::InvalidRanking(_))
        ));
    }

    #[test]
    fn success_examples() {
        let solved = vec![vec![true, true, true], vec![false, true, false]];
        let s = success_accuracy(&[0, 1], &solved).unwrap();
        assert_eq!((s.accuracy, s.eligible, s.all_solved), (1.0, 1, 1));
        assert_eq!(
            success_accuracy(&[0], &[vec![false, false]]),
            Err(MetricError::NoEligibleInstances)
        );
    }

    #[test]
    fn success_matches_a_hand_count() {
        let solved: Vec<Vec<bool>> = [
            [true, false, false],
            [true, true, true],
            [false, false, false],
            [false, true, true],
            [false, false, true],
            [true, true, false],
            [false, true, false],
            [true, false, true],
            [true, true, true],
            [false, false, true],
        ]
        .iter()
        .map(|r| r.to_vec())
        .collect();
        let top1 = [0, 2, 1, 0, 2, 1, 0, 2, 1, 0];
        // Eligible rows 0,3,4,5,6,7,9; hits at 0,4,5,7.
        let s = success_accuracy(&top1, &solved).unwrap();
        assert_eq!(s.eligible, 7);
        assert_eq!(s.accuracy, 4.0 / 7.0);
        assert_eq!((s.all_solved, s.none_solved), (2, 1));
    }

    #[test]
    fn topk_examples() {
        let o = vec![vec![0, 2, 1]];
        assert_eq!(topk_error(&o, &[2], 1).unwrap(), 1.0);
        assert_eq!(topk_error(&o, &[2], 2).unwrap(), 0.0);
        assert_eq!(topk_error(&o, &[1], 3).unwrap(), 0.0);
        assert!(matches!(topk_error(&o, &[1], 4), Err(MetricError::BadK { .. })));
        assert!(matches!(topk_error(&o, &[1], 0), Err(MetricError::BadK { .. })));
    }

    proptest! {
        #[test]
        fn topk_is_monotone(
            perms in proptest::collection::vec(Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), 1..30),
            seed in 0usize..6,
        ) {
            let best: Vec<usize> = (0..perms.len()).map(|i| (i * 7 + seed) % 6).collect();
            let errs: Vec<f64> = (1..=6).map(|k| topk_error(&perms, &best, k).unwrap()).collect();
            prop_assert!(errs.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(errs[5], 0.0);
        }
    }
}
