use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::{spearman, success_accuracy, topk_error, MetricError};
use crate::graphio::LabeledInstance;
use crate::model::RankingResult;

/// Metrics over one group of instances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub instances: usize,
    /// `None` when no instance is eligible.
    pub success_accuracy: Option<f64>,
    pub success_eligible: usize,
    pub filtered_all_solved: usize,
    pub filtered_none_solved: usize,
    /// Mean over instances; degenerate instances contribute 0.
    pub spearman_mean: f64,
    pub spearman_degenerate: usize,
    pub topk_error: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub selector: String,
    pub overall: Metrics,
    pub per_property: BTreeMap<String, Metrics>,
}

fn metrics(
    rankings: &[&RankingResult],
    instances: &[&LabeledInstance],
    ks: &[usize],
) -> Result<Metrics, MetricError> {
    let top1: Vec<usize> = rankings.iter().map(|r| r.top()).collect();
    let solved: Vec<Vec<bool>> = instances.iter().map(|i| i.solved.clone()).collect();
    let (success, eligible, all, none) = match success_accuracy(&top1, &solved) {
        Ok(s) => (Some(s.accuracy), s.eligible, s.all_solved, s.none_solved),
        Err(MetricError::NoEligibleInstances) => {
            let all = solved.iter().filter(|r| r.iter().all(|&s| s)).count();
            (None, 0, all, solved.len() - all)
        }
        Err(e) => return Err(e),
    };
    let mut rho_sum = 0.0;
    let mut degenerate = 0;
    for (r, i) in rankings.iter().zip(instances) {
        match spearman(&r.scores, &i.labels) {
            Ok(rho) => rho_sum += rho,
            Err(MetricError::Degenerate) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    let orderings: Vec<Vec<usize>> = rankings.iter().map(|r| r.ordering.clone()).collect();
    let best: Vec<usize> = instances.iter().map(|i| i.best()).collect();
    let mut topk = BTreeMap::new();
    for &k in ks {
        topk.insert(k, topk_error(&orderings, &best, k)?);
    }
    Ok(Metrics {
        instances: instances.len(),
        success_accuracy: success,
        success_eligible: eligible,
        filtered_all_solved: all,
        filtered_none_solved: none,
        spearman_mean: rho_sum / instances.len() as f64,
        spearman_degenerate: degenerate,
        topk_error: topk,
    })
}

/// Scores a selector's rankings against the true labels, overall and per
/// property.
pub fn evaluate(
    selector: &str,
    rankings: &[RankingResult],
    instances: &[LabeledInstance],
    ks: &[usize],
) -> Result<EvalReport, MetricError> {
    if rankings.len() != instances.len() {
        return Err(MetricError::LengthMismatch(rankings.len(), instances.len()));
    }
    if instances.is_empty() {
        return Err(MetricError::TooShort(0));
    }
    let all_r: Vec<&RankingResult> = rankings.iter().collect();
    let all_i: Vec<&LabeledInstance> = instances.iter().collect();
    let overall = metrics(&all_r, &all_i, ks)?;
    let mut groups: BTreeMap<String, (Vec<&RankingResult>, Vec<&LabeledInstance>)> = BTreeMap::new();
    for (r, i) in rankings.iter().zip(instances) {
        let g = groups.entry(i.graph.property.to_string()).or_default();
        g.0.push(r);
        g.1.push(i);
    }
    let per_property = groups
        .into_iter()
        .map(|(p, (r, i))| Ok((p, metrics(&r, &i, ks)?)))
        .collect::<Result<_, MetricError>>()?;
    Ok(EvalReport {
        selector: selector.to_string(),
        overall,
        per_property,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Aligned text table, one row per (selector, scope).
pub fn render_table(reports: &[EvalReport]) -> String {
    let ks: Vec<usize> = reports
        .first()
        .map(|r| r.overall.topk_error.keys().copied().collect())
        .unwrap_or_default();
    let mut header = vec![
        "selector".to_string(),
        "scope".into(),
        "n".into(),
        "eligible".into(),
        "success".into(),
        "spearman".into(),
    ];
    header.extend(ks.iter().map(|k| format!("top{k}-err")));
    let mut rows = vec![header];
    for rep in reports {
        let scopes = std::iter::once(("all".to_string(), &rep.overall))
            .chain(rep.per_property.iter().map(|(p, m)| (p.clone(), m)));
        for (scope, m) in scopes {
            let mut row = vec![
                rep.selector.clone(),
                scope,
                m.instances.to_string(),
                m.success_eligible.to_string(),
                fmt_opt(m.success_accuracy),
                format!("{:.4}", m.spearman_mean),
            ];
            row.extend(ks.iter().map(|k| fmt_opt(m.topk_error.get(k).copied())));
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
