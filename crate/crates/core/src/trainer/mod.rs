//! Training loop, ranking metrics, static baselines and evaluation reports.

pub mod baselines;
pub mod metrics;
pub mod optim;
pub mod report;
pub mod schedule;

pub use baselines::{baselines, random_rankings, static_ranking, Baselines};
pub use metrics::{
    average_ranks, borda_counts, borda_ordering, order_by_count, spearman, success_accuracy,
    topk_error, MetricError, SuccessSummary,
};
pub use optim::{Optimizer, OptimizerConfig};
pub use report::{evaluate, render_table, EvalReport, Metrics};
pub use schedule::{PlateauScheduler, Step};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::graphio::LabeledInstance;
use crate::model::{loss_and_gradient, predict, GraphInput, ModelError, ModelParameters, RankingResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("instance '{id}' has {found} labels, the model ranks {expected} verifiers")]
    Portfolio {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub plateau_patience: usize,
    pub lr_decay_factor: f64,
    pub min_lr: f64,
    pub margin: f64,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Visit training instances in a fresh seeded order each epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            initial_lr: 1e-3,
            plateau_patience: 3,
            lr_decay_factor: 0.1,
            min_lr: 1e-8,
            margin: 1.0,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.plateau_patience == 0 {
            return bad("plateau_patience must be at least 1");
        }
        for (name, v) in [
            ("initial_lr", self.initial_lr),
            ("min_lr", self.min_lr),
            ("margin", self.margin),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return bad("lr_decay_factor must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochCap,
    LrFloor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Rate used for this epoch's updates.
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

struct Prepared<'a> {
    input: GraphInput,
    labels: &'a [f64],
}

fn prepare<'a>(
    set: &'a [LabeledInstance],
    params: &ModelParameters,
) -> Result<Vec<Prepared<'a>>, TrainError> {
    let k = params.portfolio.len();
    set.iter()
        .map(|inst| {
            if inst.labels.len() != k {
                return Err(TrainError::Portfolio {
                    id: inst.graph.id.clone(),
                    expected: k,
                    found: inst.labels.len(),
                });
            }
            Ok(Prepared {
                input: params.input(&inst.graph)?,
                labels: &inst.labels,
            })
        })
        .collect()
}

fn mean_loss(
    exec: Execution,
    set: &[Prepared<'_>],
    params: &ModelParameters,
    margin: f64,
) -> Result<f64, ModelError> {
    let losses = exec::map(exec, set, |p| {
        predict_loss(params, &p.input, p.labels, margin)
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / set.len() as f64)
}

fn predict_loss(
    params: &ModelParameters,
    input: &GraphInput,
    labels: &[f64],
    margin: f64,
) -> Result<f64, ModelError> {
    use crate::model::{forward, load_params, margin_rank_loss};
    use crate::tensor::Tape;
    let mut tape = Tape::new();
    let vars = load_params(&mut tape, params, false);
    let structure = params.shape_of(&vars);
    let out = forward(&mut tape, &structure, &params.config, input, None)?;
    margin_rank_loss(tape.value(out.scores).as_slice(), labels, margin)
}

/// Fits `init` to `train` with one optimizer step per instance, decaying the
/// rate on validation plateaus. Returns the parameters of the epoch with the
/// lowest validation loss.
pub fn train(
    train_set: &[LabeledInstance],
    val_set: &[LabeledInstance],
    init: ModelParameters,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<(ModelParameters, TrainHistory), TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptySplit("training"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let train_data = prepare(train_set, &init)?;
    let val_data = prepare(val_set, &init)?;

    let mut params = init;
    let mut best = params.clone();
    let mut optimizer = Optimizer::new(cfg.optimizer, params.blocks());
    let mut scheduler = PlateauScheduler::new(
        cfg.initial_lr,
        cfg.plateau_patience,
        cfg.lr_decay_factor,
        cfg.min_lr,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut epochs = Vec::new();
    let mut best_epoch = 0;
    let mut best_val = f64::INFINITY;
    let mut stop_reason = StopReason::EpochCap;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let lr = scheduler.lr;
        let mut train_total = 0.0;
        for &i in &order {
            let p = &train_data[i];
            let (loss, grads) = loss_and_gradient(&params, &p.input, p.labels, cfg.margin)?;
            train_total += loss;
            optimizer.step(params.blocks_mut(), &grads, lr);
        }
        let val_loss = mean_loss(exec, &val_data, &params, cfg.margin)?;
        let train_loss = train_total / train_data.len() as f64;
        log::info!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6} lr {lr:e}");
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = params.clone();
        }
        if scheduler.step(val_loss) == Step::Stop {
            stop_reason = StopReason::LrFloor;
            break;
        }
    }
    Ok((
        best,
        TrainHistory {
            epochs,
            stop_reason,
            best_epoch,
            best_val_loss: best_val,
        },
    ))
}

/// Ranks every instance with the model.
pub fn rank_instances(
    exec: Execution,
    instances: &[LabeledInstance],
    params: &ModelParameters,
) -> Result<Vec<RankingResult>, ModelError> {
    exec::map(exec, instances, |i| predict(&i.graph, params))
        .into_iter()
        .collect()
}

/// Mean loss of `params` on a labelled set.
pub fn dataset_loss(
    exec: Execution,
    set: &[LabeledInstance],
    params: &ModelParameters,
    margin: f64,
) -> Result<f64, TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptySplit("evaluation"));
    }
    let data = prepare(set, params)?;
    Ok(mean_loss(exec, &data, params, margin)?)
}
