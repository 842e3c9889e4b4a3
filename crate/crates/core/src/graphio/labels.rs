use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GraphIoError, ProgramGraph, PropertyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Incorrect,
    Unknown,
}

impl FromStr for Outcome {
    type Err = GraphIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "correct" | "true" | "solved" => Ok(Outcome::Correct),
            "incorrect" | "wrong" => Ok(Outcome::Incorrect),
            "unknown" | "timeout" | "error" | "" => Ok(Outcome::Unknown),
            other => Err(GraphIoError::Labels(format!("unknown outcome '{other}'"))),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Correct => "correct",
            Outcome::Incorrect => "incorrect",
            Outcome::Unknown => "unknown",
        })
    }
}

/// One verifier's result on one (program, property) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifierLabelRecord {
    pub program_id: String,
    pub property: PropertyKind,
    pub verifier: String,
    pub svcomp_score: f64,
    pub cpu_seconds: f64,
    pub outcome: Outcome,
    /// Precomputed label; when present it is used verbatim.
    pub label: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelPenalty {
    pub time_limit: f64,
    pub weight: f64,
}

impl Default for LabelPenalty {
    fn default() -> Self {
        Self {
            time_limit: 900.0,
            weight: 1.0,
        }
    }
}

/// `score − weight · min(t, limit) / limit`.
pub fn compute_label(record: &VerifierLabelRecord, time_limit: f64, penalty_weight: f64) -> f64 {
    assert!(time_limit > 0.0, "time limit must be positive");
    let t = record.cpu_seconds.max(0.0).min(time_limit);
    record.svcomp_score - penalty_weight * t / time_limit
}

impl VerifierLabelRecord {
    pub fn label_with(&self, penalty: &LabelPenalty) -> f64 {
        self.label
            .unwrap_or_else(|| compute_label(self, penalty.time_limit, penalty.weight))
    }
}

#[derive(Deserialize)]
struct RawRecord {
    program_id: String,
    property: String,
    verifier: String,
    svcomp_score: f64,
    cpu_seconds: f64,
    outcome: String,
    #[serde(default)]
    label: Option<f64>,
}

/// Reads the labels CSV, rejecting duplicate (program, property, verifier)
/// triples and negative times.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<VerifierLabelRecord>, GraphIoError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, raw) in csv.deserialize::<RawRecord>().enumerate() {
        let line = row + 2;
        let raw = raw.map_err(|e| GraphIoError::Labels(e.to_string()))?;
        let property: PropertyKind = raw
            .property
            .parse()
            .map_err(|_| GraphIoError::Labels(format!("line {line}: unknown property '{}'", raw.property)))?;
        let outcome: Outcome = raw
            .outcome
            .parse()
            .map_err(|e: GraphIoError| GraphIoError::Labels(format!("line {line}: {e}")))?;
        if raw.cpu_seconds.is_nan() || raw.cpu_seconds < 0.0 {
            return Err(GraphIoError::Labels(format!(
                "line {line}: cpu_seconds must be non-negative"
            )));
        }
        if !seen.insert((raw.program_id.clone(), property, raw.verifier.clone())) {
            return Err(GraphIoError::DuplicateRecord {
                program: raw.program_id,
                property: property.to_string(),
                verifier: raw.verifier,
            });
        }
        out.push(VerifierLabelRecord {
            program_id: raw.program_id,
            property,
            verifier: raw.verifier,
            svcomp_score: raw.svcomp_score,
            cpu_seconds: raw.cpu_seconds,
            outcome,
            label: raw.label,
        });
    }
    Ok(out)
}

pub fn read_labels_path(path: &Path) -> Result<Vec<VerifierLabelRecord>, GraphIoError> {
    let file = std::fs::File::open(path).map_err(|e| GraphIoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_labels(file)
}

/// A graph with one label and one success flag per portfolio verifier.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstance {
    pub graph: ProgramGraph,
    pub labels: Vec<f64>,
    pub solved: Vec<bool>,
}

impl LabeledInstance {
    /// Index of the best verifier; lowest index among tied maxima.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.labels.iter().enumerate() {
            if l > self.labels[best] {
                best = i;
            }
        }
        best
    }

    /// Verifier indices from best to worst, ties by ascending index.
    pub fn true_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by(|&a, &b| self.labels[b].total_cmp(&self.labels[a]).then(a.cmp(&b)));
        order
    }

    /// Rank of each verifier (1 = best), consistent with `true_order`.
    pub fn true_ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.labels.len()];
        for (pos, v) in self.true_order().into_iter().enumerate() {
            ranks[v] = pos + 1;
        }
        ranks
    }
}

/// (label, solved) for one verifier, once its record has been seen.
type Cell = Option<(f64, bool)>;

/// Joins graphs with label records over the given portfolio. Pairs missing
/// any portfolio verifier, and graphs without records, are skipped with a
/// message in the returned list.
pub fn assemble_instances(
    graphs: Vec<ProgramGraph>,
    records: &[VerifierLabelRecord],
    portfolio: &[String],
    penalty: &LabelPenalty,
) -> (Vec<LabeledInstance>, Vec<String>) {
    let slot: HashMap<&str, usize> = portfolio
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut table: BTreeMap<(&str, PropertyKind), Vec<Cell>> = BTreeMap::new();
    for r in records {
        let Some(&i) = slot.get(r.verifier.as_str()) else {
            continue;
        };
        let row = table
            .entry((r.program_id.as_str(), r.property))
            .or_insert_with(|| vec![None; portfolio.len()]);
        row[i] = Some((r.label_with(penalty), r.outcome == Outcome::Correct));
    }

    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for g in graphs {
        let Some(row) = table.get(&(g.id.as_str(), g.property)) else {
            skipped.push(format!("{} ({}): no label records", g.id, g.property));
            continue;
        };
        let missing: Vec<&str> = row
            .iter()
            .zip(portfolio)
            .filter(|(cell, _)| cell.is_none())
            .map(|(_, v)| v.as_str())
            .collect();
        if !missing.is_empty() {
            skipped.push(format!(
                "{} ({}): missing verifiers {}",
                g.id,
                g.property,
                missing.join(", ")
            ));
            continue;
        }
        let (labels, solved) = row.iter().map(|c| c.expect("checked above")).unzip();
        out.push(LabeledInstance {
            graph: g,
            labels,
            solved,
        });
    }
    (out, skipped)
}

/// Verifier names in order of first appearance.
pub fn portfolio_of(records: &[VerifierLabelRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.verifier.as_str()))
        .map(|r| r.verifier.clone())
        .collect()
}
