use super::ModelError;
use crate::tensor::{Matrix, Tape, Var};

/// Ordered pairs `(a, b)` with `labels[a] > labels[b]`.
pub fn ranked_pairs(labels: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..labels.len() {
        for b in 0..labels.len() {
            if labels[a] > labels[b] {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

fn check(scores: usize, labels: usize) -> Result<(), ModelError> {
    if scores != labels {
        return Err(ModelError::LengthMismatch { scores, labels });
    }
    if scores < 2 {
        return Err(ModelError::Config("ranking needs at least two verifiers".into()));
    }
    Ok(())
}

/// Mean hinge `max(0, margin − (s_a − s_b))` over correctly ordered pairs;
/// zero when no pair is ordered.
pub fn margin_rank_loss(scores: &[f64], labels: &[f64], margin: f64) -> Result<f64, ModelError> {
    check(scores.len(), labels.len())?;
    let pairs = ranked_pairs(labels);
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = pairs
        .iter()
        .map(|&(a, b)| (margin - (scores[a] - scores[b])).max(0.0))
        .sum();
    Ok(total / pairs.len() as f64)
}

/// Same loss on the tape; `scores` is `1 × k`.
pub fn margin_rank_loss_on_tape(
    tape: &mut Tape,
    scores: Var,
    labels: &[f64],
    margin: f64,
) -> Result<Var, ModelError> {
    check(tape.shape(scores).1, labels.len())?;
    let pairs = ranked_pairs(labels);
    if pairs.is_empty() {
        return Ok(tape.constant(Matrix::scalar(0.0)));
    }
    let (hi, lo): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
    let column = tape.transpose(scores);
    let s_hi = tape.gather_rows(column, &hi)?;
    let s_lo = tape.gather_rows(column, &lo)?;
    let diff = tape.sub(s_hi, s_lo)?;
    let neg = tape.scalar_mul(diff, -1.0);
    let shifted = tape.add_scalar(neg, margin);
    let hinge = tape.relu(shifted);
    Ok(tape.mean_all(hinge))
}
