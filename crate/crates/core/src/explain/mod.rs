//! Edge-mask explanations: a soft weight per edge, optimized so the masked
//! graph keeps the model's scores while as few edges as possible stay on.

mod report;

pub use report::{report_size, top_m_edges, ExplanationReport, RankedEdge};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graphio::{EdgeSet, ProgramGraph, TokenVocabulary};
use crate::model::{forward, load_params, GraphInput, ModelError, ModelParameters};
use crate::tensor::{sigmoid, Matrix, Tape};

const LOGIT_BOUND: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub iters: usize,
    pub lr: f64,
    pub size_weight: f64,
    pub entropy_weight: f64,
    pub init_logit: f64,
    /// Half-width of the uniform noise added to the initial logits.
    pub init_noise: f64,
    pub seed: u64,
    /// Sets whose edges are masked; `None` masks every set the model uses.
    pub edge_sets: Option<Vec<EdgeSet>>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            iters: 100,
            lr: 0.01,
            size_weight: 0.05,
            entropy_weight: 0.1,
            init_logit: 0.0,
            init_noise: 0.0,
            seed: 0,
            edge_sets: None,
        }
    }
}

/// Learned per-edge scores for one graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeMask {
    pub graph_id: String,
    /// Masked edges as (set, position in that set), in message order.
    pub edges: Vec<(EdgeSet, usize)>,
    /// One score in (0, 1) per entry of `edges`.
    pub scores: Vec<f64>,
    /// Objective value before each update.
    pub trace: Vec<f64>,
}

/// Optimizes an edge mask for `g` by gradient descent.
pub fn explain(
    params: &ModelParameters,
    vocab: &TokenVocabulary,
    g: &ProgramGraph,
    cfg: &ExplainConfig,
) -> Result<EdgeMask, ModelError> {
    params.check_vocabulary(vocab)?;
    let input = params.input(g)?;
    let selected = |s: EdgeSet| cfg.edge_sets.as_ref().is_none_or(|v| v.contains(&s));
    let edges: Vec<(EdgeSet, usize)> = input
        .maskable
        .iter()
        .copied()
        .filter(|&(s, _)| selected(s))
        .collect();
    let n = edges.len();
    let mut slot = Vec::with_capacity(input.maskable.len());
    let mut next = 0;
    for &(s, _) in &input.maskable {
        if selected(s) {
            slot.push(next);
            next += 1;
        } else {
            slot.push(n);
        }
    }

    let original = Matrix::row_vector(&masked_scores(params, &input, None)?);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut logits: Vec<f64> = (0..n)
        .map(|_| {
            let noise = if cfg.init_noise > 0.0 {
                rng.random_range(-cfg.init_noise..=cfg.init_noise)
            } else {
                0.0
            };
            cfg.init_logit + noise
        })
        .collect();
    let mut trace = Vec::with_capacity(cfg.iters);

    if n > 0 {
        for _ in 0..cfg.iters {
            let mut tape = Tape::new();
            let vars = load_params(&mut tape, params, false);
            let structure = params.shape_of(&vars);
            let z = tape.leaf(Matrix::from_vec(n, 1, logits.clone()));
            let mask = tape.sigmoid(z);
            let one = tape.constant(Matrix::scalar(1.0));
            let padded = tape.concat_rows(&[mask, one])?;
            let full = tape.gather_rows(padded, &slot)?;
            let out = forward(&mut tape, &structure, &params.config, &input, Some(full))?;

            let target = tape.constant(original.clone());
            let diff = tape.sub(out.scores, target)?;
            let sq = tape.mul(diff, diff)?;
            let fidelity = tape.sum_all(sq);
            let size = tape.mean_all(mask);
            let size = tape.scalar_mul(size, cfg.size_weight);
            let entropy = binary_entropy_sum(&mut tape, mask)?;
            let entropy = tape.scalar_mul(entropy, cfg.entropy_weight);
            let partial = tape.add(fidelity, size)?;
            let objective = tape.add(partial, entropy)?;

            trace.push(tape.value(objective).item());
            tape.backward(objective)?;
            let grad = tape.grad(z).expect("mask logits are trainable");
            for (l, d) in logits.iter_mut().zip(grad.as_slice()) {
                *l = (*l - cfg.lr * d).clamp(-LOGIT_BOUND, LOGIT_BOUND);
            }
        }
    }

    Ok(EdgeMask {
        graph_id: g.id.clone(),
        edges,
        scores: logits.iter().map(|&l| sigmoid(l)).collect(),
        trace,
    })
}

/// Model scores with every maskable message of `input` scaled by the matching
/// entry of `mask`.
pub fn masked_scores(
    params: &ModelParameters,
    input: &GraphInput,
    mask: Option<&[f64]>,
) -> Result<Vec<f64>, ModelError> {
    let mut tape = Tape::new();
    let vars = load_params(&mut tape, params, false);
    let structure = params.shape_of(&vars);
    let mask = match mask {
        Some(m) if m.len() != input.maskable.len() => {
            return Err(ModelError::Config(format!(
                "{} mask entries for {} edges",
                m.len(),
                input.maskable.len()
            )));
        }
        Some(m) => Some(tape.constant(Matrix::from_vec(m.len(), 1, m.to_vec()))),
        None => None,
    };
    let out = forward(&mut tape, &structure, &params.config, input, mask)?;
    Ok(tape.value(out.scores).as_slice().to_vec())
}

fn binary_entropy_sum(tape: &mut Tape, p: crate::tensor::Var) -> Result<crate::tensor::Var, ModelError> {
    let neg = tape.scalar_mul(p, -1.0);
    let q = tape.add_scalar(neg, 1.0);
    let ln_p = tape.ln(p);
    let ln_q = tape.ln(q);
    let a = tape.mul(p, ln_p)?;
    let b = tape.mul(q, ln_q)?;
    let s = tape.add(a, b)?;
    let total = tape.sum_all(s);
    Ok(tape.scalar_mul(total, -1.0))
}

#[cfg(test)]
mod tests;
