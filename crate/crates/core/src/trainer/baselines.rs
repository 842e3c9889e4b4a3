use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::metrics::{borda_ordering, order_by_count, MetricError};
use crate::graphio::LabeledInstance;
use crate::model::RankingResult;

/// Static selectors learned from a training set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Baselines {
    /// Verifiers by number of solved training instances; the first one is
    /// the single best solver.
    pub iss_success: Vec<usize>,
    /// Borda ordering of the training rankings.
    pub iss_rank: Vec<usize>,
    /// Verifiers by how often they were the best.
    pub iss_topk: Vec<usize>,
}

pub fn baselines(train: &[LabeledInstance]) -> Result<Baselines, MetricError> {
    let k = train.first().map_or(0, |i| i.labels.len());
    if train.is_empty() || k == 0 {
        return Err(MetricError::TooShort(0));
    }
    let mut solved = vec![0; k];
    let mut best = vec![0; k];
    for inst in train {
        for (v, &s) in inst.solved.iter().enumerate() {
            solved[v] += usize::from(s);
        }
        best[inst.best()] += 1;
    }
    let ranks: Vec<Vec<usize>> = train.iter().map(LabeledInstance::true_ranks).collect();
    Ok(Baselines {
        iss_success: order_by_count(&solved),
        iss_rank: borda_ordering(&ranks, k)?,
        iss_topk: order_by_count(&best),
    })
}

/// Ranking result for a fixed ordering; scores are `k − position`.
pub fn static_ranking(ordering: &[usize]) -> RankingResult {
    let k = ordering.len();
    let mut scores = vec![0.0; k];
    for (pos, &v) in ordering.iter().enumerate() {
        scores[v] = (k - pos) as f64;
    }
    RankingResult::from_scores(scores)
}

/// One uniformly random ordering per instance, reproducible per seed.
pub fn random_rankings(instances: usize, k: usize, seed: u64) -> Vec<RankingResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..instances)
        .map(|_| {
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            static_ranking(&order)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphio::{ProgramGraph, PropertyKind};

    fn inst(labels: Vec<f64>, solved: Vec<bool>) -> LabeledInstance {
        LabeledInstance {
            graph: ProgramGraph::new("x", PropertyKind::ReachSafety, vec![0], Default::default(), None)
                .unwrap(),
            labels,
            solved,
        }
    }

    #[test]
    fn iss_examples() {
        let train = vec![
            inst(vec![2.0, 1.0, 0.0], vec![true, true, false]),
            inst(vec![2.0, 0.0, 1.0], vec![false, true, false]),
            inst(vec![0.0, 1.0, 2.0], vec![false, true, true]),
        ];
        let b = baselines(&train).unwrap();
        assert_eq!(b.iss_success[0], 1);
        assert_eq!(b.iss_topk, vec![0, 2, 1]);
        assert_eq!(b.iss_rank, vec![0, 2, 1]);
    }

    #[test]
    fn static_and_random_rankings() {
        let r = static_ranking(&[2, 0, 1]);
        assert_eq!(r.ordering, vec![2, 0, 1]);
        assert_eq!(random_rankings(5, 4, 1), random_rankings(5, 4, 1));
        assert_ne!(random_rankings(5, 4, 1), random_rankings(5, 4, 2));
    }
}
