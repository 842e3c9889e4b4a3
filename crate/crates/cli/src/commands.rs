use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use graves_core::exec::{self, Execution};
use graves_core::explain::{explain as explain_graph, top_m_edges, ExplainConfig};
use graves_core::frontend;
use graves_core::graphio::{
    assemble_instances, portfolio_of, read_labels_path, split_dataset, LabelPenalty,
    LabeledInstance, ProgramGraph, TokenVocabulary,
};
use graves_core::model::{container, predict_with, ModelParameters, RankingResult};
use graves_core::trainer::{
    self, baselines, evaluate as evaluate_selector, random_rankings, rank_instances, render_table,
    static_ranking, EvalReport,
};
use serde::Serialize;

use crate::config::{load_vocabulary, RunConfig};
use crate::stats::{corpus_stats, render};
use crate::{EvaluateArgs, ExplainArgs, ExtractArgs, RankArgs, TrainArgs};

pub const GRAPH_SUFFIX: &str = ".graph.json";
const DEFAULT_CUTOFFS: [usize; 3] = [1, 3, 5];

pub struct Context {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

impl Context {
    fn exec(&self) -> Execution {
        match self.jobs {
            Some(1) => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let value = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn sources_in(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("cannot list {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "c" || x == "i"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

/// Graph files under `path` (a directory or a single file), sorted by name.
pub fn load_graphs(path: &Path, vocab: &TokenVocabulary) -> Result<Vec<ProgramGraph>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("cannot list {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(GRAPH_SUFFIX))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files
        .iter()
        .map(|f| {
            let text =
                fs::read_to_string(f).with_context(|| format!("cannot read {}", f.display()))?;
            ProgramGraph::from_json_checked(&text, Some(vocab.len()))
                .with_context(|| format!("{}", f.display()))
        })
        .collect()
}

fn load_instances(
    graphs: &Path,
    labels: &Path,
    vocab: &TokenVocabulary,
    portfolio: Option<&[String]>,
    penalty: &LabelPenalty,
) -> Result<(Vec<LabeledInstance>, Vec<String>)> {
    let graphs = load_graphs(graphs, vocab)?;
    let records = read_labels_path(labels)?;
    let portfolio = match portfolio {
        Some(p) if !p.is_empty() => p.to_vec(),
        _ => portfolio_of(&records),
    };
    if portfolio.is_empty() {
        bail!("no verifiers in {}", labels.display());
    }
    let (instances, skipped) = assemble_instances(graphs, &records, &portfolio, penalty);
    for s in &skipped {
        log::warn!("skipped {s}");
    }
    if instances.is_empty() {
        bail!("no graph has a complete set of labels");
    }
    Ok((instances, portfolio))
}

pub fn extract(ctx: &Context, args: &ExtractArgs) -> Result<ExitCode> {
    let vocab = load_vocabulary(args.vocab.as_deref())?;
    let files = sources_in(&args.inputs)?;
    if files.is_empty() {
        bail!("no source files found");
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let results = exec::map(ctx.exec(), &files, |path| -> Result<ProgramGraph> {
        let source =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ex = frontend::extract(&source, &id, args.property, &vocab, args.max_nodes)?;
        for d in ex.diagnostics() {
            log::info!("{}: {d}", path.display());
        }
        let out = args.out_dir.join(format!("{id}{GRAPH_SUFFIX}"));
        fs::write(&out, ex.graph.to_json())
            .with_context(|| format!("cannot write {}", out.display()))?;
        Ok(ex.graph)
    });
    let mut graphs = Vec::new();
    let mut failed = 0;
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok(g) => graphs.push(g),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    let stats = corpus_stats(&graphs);
    write_json(&args.out_dir.join("stats.json"), &stats)?;
    print!("{}", render(&stats));
    println!("{} graphs written, {failed} failed", graphs.len());
    Ok(if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    config: &'a RunConfig,
    portfolio: &'a [String],
    split: [usize; 3],
    history: &'a trainer::TrainHistory,
    test: Option<EvalReport>,
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = ctx.seed {
        cfg.train.seed = seed;
        cfg.split.seed = seed;
    }
    let vocab = cfg.vocabulary()?;
    let (instances, portfolio) = load_instances(
        &args.graphs,
        &args.labels,
        &vocab,
        Some(&cfg.portfolio),
        &cfg.labels,
    )?;
    let ([train_set, val_set, test_set], warnings) =
        split_dataset(instances, cfg.split.ratios(), cfg.split.seed)?;
    for w in warnings {
        log::warn!("{w:?}");
    }
    let init = ModelParameters::init(cfg.model.clone(), &vocab, portfolio.clone(), cfg.train.seed)?;
    let (params, history) = trainer::train(&train_set, &val_set, init, &cfg.train, ctx.exec())?;
    container::save(&params, &args.out)?;

    let test = if test_set.is_empty() {
        None
    } else {
        let rankings = rank_instances(ctx.exec(), &test_set, &params)?;
        Some(evaluate_selector("model", &rankings, &test_set, &[1])?)
    };
    let history_path = args.history.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".history.json");
        p.into()
    });
    write_json(
        &history_path,
        &TrainSummary {
            config: &cfg,
            portfolio: &portfolio,
            split: [train_set.len(), val_set.len(), test_set.len()],
            history: &history,
            test: test.clone(),
        },
    )?;
    println!(
        "trained {} epochs ({:?}); best validation loss {:.6} at epoch {}",
        history.epochs.len(),
        history.stop_reason,
        history.best_val_loss,
        history.best_epoch
    );
    if let Some(t) = test {
        print!("{}", render_table(&[t]));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RankedVerifier<'a> {
    rank: usize,
    verifier: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct RankOutput<'a> {
    graph_id: &'a str,
    property: String,
    ranking: Vec<RankedVerifier<'a>>,
}

pub fn rank(_ctx: &Context, args: &RankArgs) -> Result<ExitCode> {
    let params = container::load(&args.model)?;
    let vocab = load_vocabulary(args.vocab.as_deref())?;
    let text = fs::read_to_string(&args.graph)
        .with_context(|| format!("cannot read {}", args.graph.display()))?;
    let g = ProgramGraph::from_json_checked(&text, Some(vocab.len()))?.with_property(args.property);
    let result = predict_with(&g, &vocab, &params)?;
    let out = RankOutput {
        graph_id: &g.id,
        property: g.property.to_string(),
        ranking: result
            .ordering
            .iter()
            .enumerate()
            .map(|(r, &v)| RankedVerifier {
                rank: r + 1,
                verifier: &params.portfolio[v],
                score: result.scores[v],
            })
            .collect(),
    };
    if let Some(p) = &args.json {
        write_json(p, &out)?;
    }
    println!("{} ({})", out.graph_id, out.property);
    let width = params.portfolio.iter().map(String::len).max().unwrap_or(8).max(8);
    for r in &out.ranking {
        println!("{:>4}  {:<width$}  {:>12.6}", r.rank, r.verifier, r.score);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<ExitCode> {
    let params = container::load(&args.model)?;
    let vocab = load_vocabulary(args.vocab.as_deref())?;
    params.check_vocabulary(&vocab)?;
    let penalty = LabelPenalty {
        time_limit: args.time_limit,
        ..LabelPenalty::default()
    };
    let (test, _) = load_instances(
        &args.graphs,
        &args.labels,
        &vocab,
        Some(&params.portfolio),
        &penalty,
    )?;
    let k = params.portfolio.len();
    let ks: Vec<usize> = if args.k.is_empty() {
        DEFAULT_CUTOFFS.into_iter().filter(|&c| c <= k).collect()
    } else {
        args.k.clone()
    };
    if let Some(&bad) = ks.iter().find(|&&x| x == 0 || x > k) {
        bail!("top-K cut-off {bad} outside 1..={k}");
    }
    let mut reports = Vec::new();
    let model_rankings = rank_instances(ctx.exec(), &test, &params)?;
    reports.push(evaluate_selector("model", &model_rankings, &test, &ks)?);
    if let Some(dir) = &args.train_graphs {
        let (train, _) =
            load_instances(dir, &args.labels, &vocab, Some(&params.portfolio), &penalty)?;
        let b = baselines(&train)?;
        for (name, order) in [
            ("iss-success", &b.iss_success),
            ("iss-rank", &b.iss_rank),
            ("iss-topk", &b.iss_topk),
        ] {
            let rankings = vec![static_ranking(order); test.len()];
            reports.push(evaluate_selector(name, &rankings, &test, &ks)?);
        }
    }
    let random = random_rankings(test.len(), k, ctx.seed.unwrap_or(0));
    reports.push(evaluate_selector("random", &random, &test, &ks)?);
    if args.oracle {
        let truth: Vec<RankingResult> = test
            .iter()
            .map(|i| RankingResult::from_scores(i.labels.clone()))
            .collect();
        reports.push(evaluate_selector("oracle", &truth, &test, &ks)?);
    }
    if let Some(p) = &args.json {
        write_json(p, &reports)?;
    }
    print!("{}", render_table(&reports));
    Ok(ExitCode::SUCCESS)
}

pub fn explain(ctx: &Context, args: &ExplainArgs) -> Result<ExitCode> {
    let params = container::load(&args.model)?;
    let vocab = load_vocabulary(args.vocab.as_deref())?;
    let text = fs::read_to_string(&args.graph)
        .with_context(|| format!("cannot read {}", args.graph.display()))?;
    let g = ProgramGraph::from_json_checked(&text, Some(vocab.len()))?;
    let cfg = ExplainConfig {
        iters: args.iters,
        lr: args.lr,
        size_weight: args.size_weight,
        entropy_weight: args.entropy_weight,
        seed: ctx.seed.unwrap_or(0),
        edge_sets: (!args.edge_sets.is_empty()).then(|| args.edge_sets.clone()),
        ..ExplainConfig::default()
    };
    let mask = explain_graph(&params, &vocab, &g, &cfg)?;
    let report = top_m_edges(&mask, &g, &vocab);
    if let Some(p) = &args.json {
        fs::write(p, report.to_json() + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(p) = &args.dot {
        fs::write(p, report.to_dot(&g, &vocab))
            .with_context(|| format!("cannot write {}", p.display()))?;
    }
    println!(
        "{} ({}): top {} of {} edges",
        report.graph_id, report.property, report.m, report.num_edges
    );
    for e in &report.top {
        println!(
            "{:>3}  {:<4}  {:>4} {:<24} -> {:>4} {:<24}  {:.4}",
            e.rank,
            e.edge_set.as_str(),
            e.src,
            e.src_kind,
            e.dst,
            e.dst_kind,
            e.score
        );
    }
    Ok(ExitCode::SUCCESS)
}
