use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::GraphIoError;

/// Verification property a graph is labelled for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropertyKind {
    ReachSafety,
    Termination,
    MemSafety,
    Overflow,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 4] = [
        PropertyKind::ReachSafety,
        PropertyKind::Termination,
        PropertyKind::MemSafety,
        PropertyKind::Overflow,
    ];

    pub fn encode(self) -> usize {
        match self {
            PropertyKind::ReachSafety => 0,
            PropertyKind::Termination => 1,
            PropertyKind::MemSafety => 2,
            PropertyKind::Overflow => 3,
        }
    }

    pub fn decode(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::ReachSafety => "ReachSafety",
            PropertyKind::Termination => "Termination",
            PropertyKind::MemSafety => "MemSafety",
            PropertyKind::Overflow => "Overflow",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyKind {
    type Err = GraphIoError;

    /// Accepts the canonical names plus the usual SV-COMP spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "reachsafety" | "unreachcall" | "reach" => Ok(PropertyKind::ReachSafety),
            "termination" => Ok(PropertyKind::Termination),
            "memsafety" | "validmemsafety" | "validmemory" => Ok(PropertyKind::MemSafety),
            "overflow" | "nooverflow" => Ok(PropertyKind::Overflow),
            _ => Err(GraphIoError::Property(s.to_string())),
        }
    }
}

/// The three edge families of a program graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeSet {
    #[serde(rename = "AST")]
    Ast,
    #[serde(rename = "ICFG")]
    Icfg,
    #[serde(rename = "DFG")]
    Dfg,
}

impl EdgeSet {
    pub const ALL: [EdgeSet; 3] = [EdgeSet::Ast, EdgeSet::Icfg, EdgeSet::Dfg];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeSet::Ast => "AST",
            EdgeSet::Icfg => "ICFG",
            EdgeSet::Dfg => "DFG",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeSet {
    type Err = GraphIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AST" => Ok(EdgeSet::Ast),
            "ICFG" | "CFG" => Ok(EdgeSet::Icfg),
            "DFG" => Ok(EdgeSet::Dfg),
            _ => Err(GraphIoError::Schema(format!("unknown edge set '{s}'"))),
        }
    }
}

pub type Edge = (u32, u32);

/// Typed program graph: one vocabulary index per node plus three directed
/// edge sets. Edge lists are kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramGraph {
    pub id: String,
    pub property: PropertyKind,
    node_kinds: Vec<u32>,
    edges: [Vec<Edge>; 3],
}

impl ProgramGraph {
    /// Validates and canonicalizes (sorts) the edge sets.
    ///
    /// `vocab_len` bounds the node kinds; pass `None` to skip that check.
    pub fn new(
        id: impl Into<String>,
        property: PropertyKind,
        node_kinds: Vec<u32>,
        mut edges: [Vec<Edge>; 3],
        vocab_len: Option<usize>,
    ) -> Result<Self, GraphIoError> {
        let n = node_kinds.len();
        if n == 0 {
            return Err(GraphIoError::Schema("graph has no nodes".into()));
        }
        if let Some(len) = vocab_len {
            if let Some(&k) = node_kinds.iter().find(|&&k| k as usize >= len) {
                return Err(GraphIoError::Schema(format!(
                    "node_kinds: index {k} outside vocabulary of {len}"
                )));
            }
        }
        for (set, list) in EdgeSet::ALL.iter().zip(edges.iter_mut()) {
            if list.iter().any(|&(s, d)| s as usize >= n || d as usize >= n) {
                return Err(GraphIoError::Schema(format!(
                    "edges.{set}: edge endpoint out of range"
                )));
            }
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(GraphIoError::Schema(format!("edges.{set}: duplicate edge")));
            }
        }
        Ok(Self {
            id: id.into(),
            property,
            node_kinds,
            edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_kinds.len()
    }

    pub fn node_kinds(&self) -> &[u32] {
        &self.node_kinds
    }

    pub fn edges(&self, set: EdgeSet) -> &[Edge] {
        &self.edges[set.index()]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Same graph under a different property label.
    pub fn with_property(&self, property: PropertyKind) -> Self {
        Self {
            property,
            ..self.clone()
        }
    }

    /// Relabels nodes: node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_nodes(), "permutation length");
        let mut kinds = vec![0; self.num_nodes()];
        for (i, &p) in perm.iter().enumerate() {
            kinds[p] = self.node_kinds[i];
        }
        let map = |list: &Vec<Edge>| -> Vec<Edge> {
            list.iter()
                .map(|&(s, d)| (perm[s as usize] as u32, perm[d as usize] as u32))
                .collect()
        };
        Self::new(
            self.id.clone(),
            self.property,
            kinds,
            [map(&self.edges[0]), map(&self.edges[1]), map(&self.edges[2])],
            None,
        )
        .expect("permutation preserves validity")
    }

    /// Copy with some edges removed, addressed by (set, position in set).
    pub fn without_edges(&self, removed: &[(EdgeSet, usize)]) -> Self {
        let mut edges = self.edges.clone();
        for set in EdgeSet::ALL {
            let mut drop: Vec<usize> = removed
                .iter()
                .filter(|(s, _)| *s == set)
                .map(|&(_, i)| i)
                .collect();
            drop.sort_unstable();
            for i in drop.into_iter().rev() {
                edges[set.index()].remove(i);
            }
        }
        Self {
            edges,
            ..self.clone()
        }
    }

    /// Canonical JSON: sorted keys, sorted edges, no insignificant whitespace.
    pub fn to_json(&self) -> String {
        let mut edges = Map::new();
        for set in EdgeSet::ALL {
            let list: Vec<Value> = self.edges(set).iter().map(|&(s, d)| json!([s, d])).collect();
            edges.insert(set.as_str().to_string(), Value::Array(list));
        }
        let mut root = Map::new();
        root.insert("edges".into(), Value::Object(edges));
        root.insert("id".into(), json!(self.id));
        root.insert("node_kinds".into(), json!(self.node_kinds));
        root.insert("num_nodes".into(), json!(self.num_nodes()));
        root.insert("property".into(), json!(self.property.as_str()));
        serde_json::to_string(&Value::Object(root)).expect("json values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphIoError> {
        Self::from_json_checked(text, None)
    }

    pub fn from_json_checked(text: &str, vocab_len: Option<usize>) -> Result<Self, GraphIoError> {
        let raw: RawGraph = serde_json::from_str(text)
            .map_err(|e| GraphIoError::Schema(e.to_string()))?;
        if raw.num_nodes != raw.node_kinds.len() {
            return Err(GraphIoError::Schema(format!(
                "num_nodes: {} but node_kinds has {} entries",
                raw.num_nodes,
                raw.node_kinds.len()
            )));
        }
        let property: PropertyKind = raw
            .property
            .parse()
            .map_err(|_| GraphIoError::Schema(format!("property: unknown '{}'", raw.property)))?;
        let take = |v: Option<Vec<Edge>>| v.unwrap_or_default();
        Self::new(
            raw.id,
            property,
            raw.node_kinds,
            [take(raw.edges.ast), take(raw.edges.icfg), take(raw.edges.dfg)],
            vocab_len,
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    id: String,
    property: String,
    num_nodes: usize,
    node_kinds: Vec<u32>,
    edges: RawEdges,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdges {
    #[serde(rename = "AST")]
    ast: Option<Vec<Edge>>,
    #[serde(rename = "ICFG")]
    icfg: Option<Vec<Edge>>,
    #[serde(rename = "DFG")]
    dfg: Option<Vec<Edge>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single() -> ProgramGraph {
        ProgramGraph::new("p", PropertyKind::ReachSafety, vec![1], Default::default(), None).unwrap()
    }

    #[test]
    fn property_encoding_is_a_bijection() {
        for (i, p) in PropertyKind::ALL.iter().enumerate() {
            assert_eq!(p.encode(), i);
            assert_eq!(PropertyKind::decode(i), Some(*p));
            assert_eq!(p.as_str().parse::<PropertyKind>().unwrap(), *p);
        }
        assert_eq!("unreach-call".parse::<PropertyKind>().unwrap(), PropertyKind::ReachSafety);
        assert!("liveness".parse::<PropertyKind>().is_err());
    }

    #[test]
    fn single_node_graph_round_trips_bytewise() {
        let g = single();
        let text = g.to_json();
        assert_eq!(
            text,
            r#"{"edges":{"AST":[],"DFG":[],"ICFG":[]},"id":"p","node_kinds":[1],"num_nodes":1,"property":"ReachSafety"}"#
        );
        let back = ProgramGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn out_of_range_endpoint_is_rejected() {
        let text = r#"{"edges":{"AST":[[0,3]],"DFG":[],"ICFG":[]},"id":"p","node_kinds":[1,2],"num_nodes":2,"property":"ReachSafety"}"#;
        let err = ProgramGraph::from_json(text).unwrap_err();
        assert_eq!(
            err,
            GraphIoError::Schema("edges.AST: edge endpoint out of range".into())
        );
    }

    #[test]
    fn schema_errors_name_the_field() {
        let missing = r#"{"edges":{},"id":"p","node_kinds":[1],"property":"ReachSafety"}"#;
        let GraphIoError::Schema(msg) = ProgramGraph::from_json(missing).unwrap_err() else {
            panic!("expected schema error");
        };
        assert!(msg.contains("num_nodes"), "{msg}");

        let mismatch = r#"{"edges":{},"id":"p","node_kinds":[1],"num_nodes":2,"property":"ReachSafety"}"#;
        let GraphIoError::Schema(msg) = ProgramGraph::from_json(mismatch).unwrap_err() else {
            panic!("expected schema error");
        };
        assert!(msg.starts_with("num_nodes"), "{msg}");

        let dup = r#"{"edges":{"DFG":[[0,0],[0,0]]},"id":"p","node_kinds":[1],"num_nodes":1,"property":"ReachSafety"}"#;
        assert_eq!(
            ProgramGraph::from_json(dup).unwrap_err(),
            GraphIoError::Schema("edges.DFG: duplicate edge".into())
        );
        let kinds = r#"{"edges":{},"id":"p","node_kinds":[9],"num_nodes":1,"property":"ReachSafety"}"#;
        assert!(ProgramGraph::from_json_checked(kinds, Some(4)).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = ProgramGraph> {
        (1usize..12, 0u8..4).prop_flat_map(|(n, prop)| {
            let edge = (0..n as u32, 0..n as u32);
            (
                proptest::collection::vec(0u32..20, n),
                proptest::collection::btree_set(edge.clone(), 0..20),
                proptest::collection::btree_set(edge.clone(), 0..20),
                proptest::collection::btree_set(edge, 0..20),
            )
                .prop_map(move |(kinds, a, c, d)| {
                    ProgramGraph::new(
                        "g",
                        PropertyKind::decode(prop as usize).unwrap(),
                        kinds,
                        [a.into_iter().collect(), c.into_iter().collect(), d.into_iter().collect()],
                        None,
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn serialization_round_trips(g in arb_graph()) {
            let text = g.to_json();
            let back = ProgramGraph::from_json(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
