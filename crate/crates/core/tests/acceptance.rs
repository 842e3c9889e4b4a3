//! Acceptance criteria 1-10. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use graves_core::exec::Execution;
use graves_core::explain::{explain, report_size, top_m_edges, ExplainConfig};
use graves_core::frontend::{build_icfg, extract, parse, reaching_definitions, tokenize};
use graves_core::graphio::{EdgeSet, LabeledInstance, ProgramGraph, PropertyKind, TokenVocabulary};
use graves_core::model::{container, forward, margin_rank_loss_on_tape, predict, ModelConfig, ModelError, ModelParameters};
use graves_core::synthetic::{planted_dataset, PlantedInstance, PSEUDO_VERIFIERS};
use graves_core::tensor::{grad_check_many, Tape, TensorError, Var};
use graves_core::trainer::{
    borda_ordering, evaluate, random_rankings, rank_instances, spearman, static_ranking, topk_error,
    train, PlateauScheduler, Step, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPEARMAN_TOL: f64 = 1e-9;
const BORDA_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const PERMUTATION_TOL: f64 = 1e-9;
const TRAIN_SPEARMAN_MIN: f64 = 0.9;
const RANDOM_SEEDS: u64 = 10;
const EXPLAIN_RUNS: usize = 50;
const EXPLAIN_HIT_RATE: f64 = 0.8;
const MONTE_CARLO_TRIALS: usize = 10_000;
const MONTE_CARLO_TOL: f64 = 0.02;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn portfolio() -> Vec<String> {
    PSEUDO_VERIFIERS.iter().map(|s| s.to_string()).collect()
}

/// Ranks with ties averaged, counted directly: rank = #smaller + (#equal + 1) / 2.
fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let less = x.iter().filter(|&&b| b < a).count() as f64;
            let equal = x.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 1000 {
        let n = rng.random_range(2..30);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if x.iter().all(|&a| a == x[0]) {
            continue;
        }
        let want = pearson(&ranks_by_counting(&x), &ranks_by_counting(&y));
        worst = worst.max((spearman(&x, &y).unwrap() - want).abs());
        pairs += 1;
    }
    let worked = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap();
    check(
        worst < SPEARMAN_TOL && worked == 0.8,
        format!("max |spearman - pearson(ranks)| = {worst:.2e} over {pairs} pairs; worked case = {worked}"),
    )
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn mean_spearman(ordering: &[usize], tables: &[Vec<usize>]) -> f64 {
    let k = ordering.len();
    let mut static_scores = vec![0.0; k];
    for (pos, &v) in ordering.iter().enumerate() {
        static_scores[v] = (k - pos) as f64;
    }
    tables
        .iter()
        .map(|ranks| {
            let truth: Vec<f64> = ranks.iter().map(|&r| -(r as f64)).collect();
            spearman(&static_scores, &truth).unwrap()
        })
        .sum::<f64>()
        / tables.len() as f64
}

fn borda_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut worst_gap: f64 = 0.0;
    for k in 3..=5 {
        let all = permutations(k);
        for _ in 0..20 {
            let instances = rng.random_range(1..12);
            let table: Vec<Vec<usize>> = (0..instances)
                .map(|_| {
                    let mut r: Vec<usize> = (1..=k).collect();
                    r.shuffle(&mut rng);
                    r
                })
                .collect();
            let best = all
                .iter()
                .map(|o| mean_spearman(o, &table))
                .fold(f64::NEG_INFINITY, f64::max);
            let got = mean_spearman(&borda_ordering(&table, k).unwrap(), &table);
            worst_gap = worst_gap.max(best - got);
            checked += 1;
        }
    }
    check(
        worst_gap <= BORDA_TOL,
        format!("{checked} tables; largest shortfall from the exhaustive optimum {worst_gap:.2e}"),
    )
}

fn small_graphs(vocab_len: usize) -> Vec<ProgramGraph> {
    let g = |id: &str, kinds: Vec<u32>, sets: [Vec<(u32, u32)>; 3]| {
        ProgramGraph::new(id, PropertyKind::ReachSafety, kinds, sets, Some(vocab_len)).unwrap()
    };
    vec![
        g(
            "chain",
            vec![0, 1, 2, 3],
            [vec![(0, 1), (1, 2), (1, 3)], vec![(1, 2), (2, 3)], vec![(2, 3)]],
        ),
        g(
            "loop",
            vec![0, 1, 4, 2, 5, 3],
            [
                vec![(0, 1), (1, 2), (2, 3), (2, 4), (1, 5)],
                vec![(1, 2), (2, 3), (3, 2), (2, 5)],
                vec![(3, 4), (1, 4), (3, 5)],
            ],
        ),
        g(
            "branch",
            vec![0, 1, 2, 2, 4, 5, 3, 1],
            [
                vec![(0, 1), (1, 2), (1, 3), (2, 4), (3, 5), (1, 6), (0, 7)],
                vec![(1, 2), (1, 3), (2, 6), (3, 6), (7, 1)],
                vec![(4, 6), (5, 6), (2, 5), (7, 4)],
            ],
        ),
    ]
}

fn gradient_soundness() -> Outcome {
    let kinds: Vec<String> = ["Unknown", "Decl", "Stmt", "Ref", "Lit", "Op"].map(String::from).to_vec();
    let vocab = TokenVocabulary::new(kinds).unwrap();
    let graphs = small_graphs(vocab.len());
    let labels = [2.0, 0.5, 1.0];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut runs = 0;
    for layers in 0..=2 {
        for jk in [false, true] {
            for set in EdgeSet::ALL {
                let cfg = ModelConfig {
                    num_gat_layers: layers,
                    jumping_knowledge: jk,
                    edge_sets: vec![set],
                    gat_width: Some(4),
                    pool_hidden: vec![5, 3],
                    head_hidden: Some(vec![5, 4]),
                    ..ModelConfig::default()
                };
                let params = ModelParameters::init(cfg, &vocab, portfolio(), runs as u64).unwrap();
                for g in &graphs {
                    let input = params.input(g).unwrap();
                    let f = |tape: &mut Tape, vars: &[Var]| -> Result<Var, TensorError> {
                        let tensor = |e: ModelError| match e {
                            ModelError::Tensor(t) => t,
                            other => panic!("{other}"),
                        };
                        let s = params.shape_of(vars);
                        let out = forward(tape, &s, &params.config, &input, None).map_err(tensor)?;
                        margin_rank_loss_on_tape(tape, out.scores, &labels, 10.0).map_err(tensor)
                    };
                    let report = grad_check_many(f, params.blocks(), FD_STEP, FD_TOL).unwrap();
                    worst = worst.max(report.max_relative_error);
                    if !report.passed {
                        failures.push(format!("{layers} layers, jk {jk}, {set:?}, {}", g.id));
                    }
                    runs += 1;
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{runs} checks, max relative error {worst:.2e}; failing: {failures:?}"),
    )
}

fn random_graph(rng: &mut ChaCha8Rng, vocab_len: usize) -> ProgramGraph {
    let n = rng.random_range(1..25u32);
    let kinds = (0..n).map(|_| rng.random_range(0..vocab_len as u32)).collect();
    let mut sets: [Vec<(u32, u32)>; 3] = Default::default();
    for set in &mut sets {
        for _ in 0..rng.random_range(0..3 * n) {
            set.push((rng.random_range(0..n), rng.random_range(0..n)));
        }
        set.sort_unstable();
        set.dedup();
    }
    let property = PropertyKind::ALL[rng.random_range(0..PropertyKind::ALL.len())];
    ProgramGraph::new("random", property, kinds, sets, Some(vocab_len)).unwrap()
}

fn permutation_invariance() -> Outcome {
    let vocab = TokenVocabulary::builtin();
    let params = ModelParameters::init(ModelConfig::default(), &vocab, portfolio(), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_graph(&mut rng, vocab.len());
        let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
        perm.shuffle(&mut rng);
        let a = predict(&g, &params).unwrap();
        let b = predict(&g.permuted(&perm), &params).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            worst = worst.max((x - y).abs());
        }
    }
    check(
        worst < PERMUTATION_TOL,
        format!("100 graphs, max score difference {worst:.2e}"),
    )
}

fn dataflow_oracle() -> Outcome {
    let corpus = common::corpus();
    let mut mismatched = Vec::new();
    let mut edges = 0;
    for (name, src) in &corpus {
        let ast = parse(&tokenize(src).unwrap()).unwrap();
        let icfg = build_icfg(&ast);
        let got: BTreeSet<_> = reaching_definitions(&ast, &icfg)
            .edges
            .into_iter()
            .map(|e| (e.def, e.use_site, e.var))
            .collect();
        edges += got.len();
        if got != common::brute_force_reaching(&ast, &icfg) {
            mismatched.push(name.clone());
        }
    }
    check(
        corpus.len() == 20 && mismatched.is_empty(),
        format!("{} programs, {edges} def-use edges; mismatches: {mismatched:?}", corpus.len()),
    )
}

struct Overfit {
    params: ModelParameters,
    train_spearman: f64,
    held_out_success: f64,
    random_success: f64,
    epochs: usize,
}

fn instances(set: &[PlantedInstance]) -> Vec<LabeledInstance> {
    set.iter().map(|p| p.instance.clone()).collect()
}

/// Trains once; the explainer criterion reuses the model.
fn overfit() -> &'static Overfit {
    static CELL: OnceLock<Overfit> = OnceLock::new();
    CELL.get_or_init(|| {
        let vocab = TokenVocabulary::builtin();
        let train_set = instances(&planted_dataset(30, 1, &vocab).unwrap());
        let val_set = instances(&planted_dataset(10, 2, &vocab).unwrap());
        let test_set = instances(&planted_dataset(30, 3, &vocab).unwrap());
        let init = ModelParameters::init(ModelConfig::default(), &vocab, portfolio(), 0).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let (params, history) = train(&train_set, &val_set, init, &cfg, Execution::Parallel).unwrap();
        let exec = Execution::Parallel;
        let on_train = rank_instances(exec, &train_set, &params).unwrap();
        let train_spearman = evaluate("model", &on_train, &train_set, &[1])
            .unwrap()
            .overall
            .spearman_mean;
        let on_test = rank_instances(exec, &test_set, &params).unwrap();
        let success = |r: &[graves_core::model::RankingResult]| {
            evaluate("s", r, &test_set, &[1])
                .unwrap()
                .overall
                .success_accuracy
                .unwrap()
        };
        let held_out_success = success(&on_test);
        let random_success = (0..RANDOM_SEEDS)
            .map(|s| success(&random_rankings(test_set.len(), 3, s)))
            .sum::<f64>()
            / RANDOM_SEEDS as f64;
        Overfit {
            params,
            train_spearman,
            held_out_success,
            random_success,
            epochs: history.epochs.len(),
        }
    })
}

fn synthetic_overfit() -> Outcome {
    let o = overfit();
    check(
        o.train_spearman >= TRAIN_SPEARMAN_MIN && o.held_out_success > o.random_success,
        format!(
            "{} epochs; train spearman {:.3}; held-out success {:.3} vs random mean {:.3}",
            o.epochs, o.train_spearman, o.held_out_success, o.random_success
        ),
    )
}

fn scheduler_law() -> Outcome {
    let mut s = PlateauScheduler::new(1e-3, 3, 0.1, 1e-8);
    let mut steps = vec![s.step(1.0)];
    steps.extend([1.0, 1.5, 1.0].map(|v| s.step(v)));
    let first_decay = steps == [Step::Continue, Step::Continue, Step::Continue, Step::Decayed];
    let decayed_lr = s.lr;

    let mut s2 = PlateauScheduler::new(1e-3, 3, 0.1, 1e-8);
    let improving = (0..10).all(|i| s2.step(10.0 - i as f64) == Step::Continue) && s2.lr == 1e-3;

    let mut s3 = PlateauScheduler::new(1e-3, 3, 0.1, 1e-8);
    let mut epochs = 0;
    let mut decays = 0;
    let stopped = loop {
        epochs += 1;
        match s3.step(1.0) {
            Step::Stop => break true,
            Step::Decayed => decays += 1,
            Step::Continue => {}
        }
        if epochs > 100 {
            break false;
        }
    };
    check(
        first_decay
            && (decayed_lr - 1e-4).abs() < 1e-18
            && improving
            && stopped
            && decays == 5
            && epochs == 19
            && s3.lr < 1e-8,
        format!("first decay at epoch 4 to {decayed_lr:e}; flat trace stops at epoch {epochs} after {decays} decays, lr {:e}", s3.lr),
    )
}

fn explainer_faithfulness() -> Outcome {
    let params = &overfit().params;
    let vocab = TokenVocabulary::builtin();
    let runs: Vec<PlantedInstance> = planted_dataset(2 * EXPLAIN_RUNS, 4, &vocab)
        .unwrap()
        .into_iter()
        .filter(|p| p.loops_back)
        .collect();
    let mut hits = 0;
    for (i, p) in runs.iter().enumerate() {
        let g = &p.instance.graph;
        let cfg = ExplainConfig {
            seed: i as u64,
            ..ExplainConfig::default()
        };
        let report = top_m_edges(&explain(params, &vocab, g, &cfg).unwrap(), g, &vocab);
        let planted: Vec<(u32, u32)> = p.planted_edges.iter().map(|&e| g.edges(EdgeSet::Icfg)[e]).collect();
        hits += usize::from(
            report
                .top
                .iter()
                .any(|e| e.edge_set == EdgeSet::Icfg && planted.contains(&(e.src, e.dst))),
        );
    }
    let rate = hits as f64 / runs.len() as f64;
    let law = (1..1000).all(|n| report_size(n) == if n < 50 { 5 } else { n / 10 });
    check(
        runs.len() == EXPLAIN_RUNS && rate >= EXPLAIN_HIT_RATE && law,
        format!("planted loop-back edge in top-m for {hits}/{} runs; size law for n in 1..1000: {law}", runs.len()),
    )
}

fn topk_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut monotone = true;
    let mut full_is_zero = true;
    for k in 2..=10 {
        let n = 50;
        let orderings: Vec<Vec<usize>> = random_rankings(n, k, k as u64).into_iter().map(|r| r.ordering).collect();
        let best: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let curve: Vec<f64> = (1..=k).map(|kk| topk_error(&orderings, &best, kk).unwrap()).collect();
        monotone &= curve.windows(2).all(|w| w[1] <= w[0]);
        full_is_zero &= curve[k - 1] == 0.0;
    }
    let fixed = vec![static_ranking(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]).ordering; MONTE_CARLO_TRIALS];
    let orderings: Vec<Vec<usize>> = random_rankings(MONTE_CARLO_TRIALS, 10, 99)
        .into_iter()
        .map(|r| r.ordering)
        .collect();
    let best: Vec<usize> = (0..MONTE_CARLO_TRIALS).map(|_| rng.random_range(0..10)).collect();
    let random_err = topk_error(&orderings, &best, 5).unwrap();
    let static_err = topk_error(&fixed, &best, 5).unwrap();
    check(
        monotone && full_is_zero && (random_err - 0.5).abs() <= MONTE_CARLO_TOL,
        format!(
            "non-increasing: {monotone}; zero at K = k: {full_is_zero}; random top-5 error at k = 10: {random_err:.4} (static {static_err:.4})"
        ),
    )
}

fn round_trips() -> Outcome {
    let vocab = TokenVocabulary::builtin();
    let params = ModelParameters::init(ModelConfig::default(), &vocab, portfolio(), 10).unwrap();
    let bytes = container::to_bytes(&params);
    let reloaded = container::from_bytes(&bytes).unwrap();
    let mut failures = Vec::new();
    let corpus = common::corpus();
    for (name, src) in &corpus {
        let g = extract(src, name, PropertyKind::ReachSafety, &vocab, None).unwrap().graph;
        let json = g.to_json();
        let back = ProgramGraph::from_json_checked(&json, Some(vocab.len())).unwrap();
        let a = predict(&g, &params).unwrap().scores;
        let b = predict(&back, &reloaded).unwrap().scores;
        let same_bits = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        if back.to_json() != json || !same_bits {
            failures.push(name.clone());
        }
    }
    let bytes_stable = container::to_bytes(&reloaded) == bytes;
    check(
        failures.is_empty() && bytes_stable,
        format!("{} programs; container bytes stable: {bytes_stable}; failures: {failures:?}", corpus.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 metric oracles", Some(Duration::from_secs(1)), metric_oracles),
        ("2 borda optimality", Some(Duration::from_secs(10)), borda_optimality),
        ("3 gradient soundness", Some(Duration::from_secs(120)), gradient_soundness),
        ("4 permutation invariance", None, permutation_invariance),
        ("5 dataflow oracle", None, dataflow_oracle),
        ("6 synthetic overfit", Some(Duration::from_secs(300)), synthetic_overfit),
        ("7 scheduler law", None, scheduler_law),
        ("8 explainer faithfulness", None, explainer_faithfulness),
        ("9 top-k laws", None, topk_laws),
        ("10 round trips", None, round_trips),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
