use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::graphio::{EdgeSet, PropertyKind};

pub const MAX_GAT_LAYERS: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyEncoding {
    /// The property's index as a single number.
    #[default]
    Index,
    OneHot,
}

impl PropertyEncoding {
    pub fn width(self) -> usize {
        match self {
            PropertyEncoding::Index => 1,
            PropertyEncoding::OneHot => PropertyKind::ALL.len(),
        }
    }

    pub fn encode(self, p: PropertyKind) -> Vec<f64> {
        match self {
            PropertyEncoding::Index => vec![p.encode() as f64],
            PropertyEncoding::OneHot => {
                let mut v = vec![0.0; PropertyKind::ALL.len()];
                v[p.encode()] = 1.0;
                v
            }
        }
    }
}

/// Architecture choices. Unset widths are derived from the vocabulary size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub num_gat_layers: usize,
    pub edge_sets: Vec<EdgeSet>,
    pub jumping_knowledge: bool,
    /// Output width of every GAT layer; defaults to the one-hot width.
    pub gat_width: Option<usize>,
    /// Leaky-ReLU applied to each GAT layer's output inside the model.
    pub gat_activation: bool,
    pub pool_hidden: Vec<usize>,
    /// Hidden widths of the scoring head; defaults to `[|T|, |T|/2]`.
    pub head_hidden: Option<Vec<usize>>,
    pub property_encoding: PropertyEncoding,
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_gat_layers: 2,
            edge_sets: EdgeSet::ALL.to_vec(),
            jumping_knowledge: true,
            gat_width: None,
            gat_activation: true,
            pool_hidden: vec![64, 12],
            head_hidden: None,
            property_encoding: PropertyEncoding::Index,
            leaky_slope: 0.2,
        }
    }
}

/// Concrete layer widths for one vocabulary and portfolio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Widths {
    pub input: usize,
    pub gat: Vec<(usize, usize)>,
    pub node_state: usize,
    pub pool: Vec<usize>,
    pub head: Vec<usize>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_gat_layers > MAX_GAT_LAYERS {
            return Err(ModelError::Config(format!(
                "num_gat_layers {} exceeds {MAX_GAT_LAYERS}",
                self.num_gat_layers
            )));
        }
        let mut sets = self.edge_sets.clone();
        sets.sort();
        sets.dedup();
        if sets.len() != self.edge_sets.len() {
            return Err(ModelError::Config("edge_sets lists a set twice".into()));
        }
        if self.gat_width == Some(0)
            || self.pool_hidden.contains(&0)
            || self.head_hidden.as_ref().is_some_and(|h| h.contains(&0))
        {
            return Err(ModelError::Config("layer widths must be positive".into()));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(ModelError::Config("leaky_slope must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn uses(&self, set: EdgeSet) -> bool {
        self.edge_sets.contains(&set)
    }

    pub fn widths(&self, vocab_len: usize, portfolio_len: usize) -> Widths {
        let hidden = self.gat_width.unwrap_or(vocab_len);
        let mut gat = Vec::with_capacity(self.num_gat_layers);
        let mut d = vocab_len;
        for _ in 0..self.num_gat_layers {
            gat.push((d, hidden));
            d = hidden;
        }
        let node_state = if self.jumping_knowledge {
            vocab_len + gat.iter().map(|&(_, o)| o).sum::<usize>()
        } else {
            d
        };
        let mut pool = vec![node_state];
        pool.extend(&self.pool_hidden);
        pool.push(1);
        let mut head = vec![node_state + self.property_encoding.width()];
        match &self.head_hidden {
            Some(h) => head.extend(h),
            None => head.extend([vocab_len, (vocab_len / 2).max(1)]),
        }
        head.push(portfolio_len);
        Widths {
            input: vocab_len,
            gat,
            node_state,
            pool,
            head,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_widths_follow_the_vocabulary() {
        let w = ModelConfig::default().widths(156, 10);
        assert_eq!(w.gat, vec![(156, 156), (156, 156)]);
        assert_eq!(w.node_state, 156 * 3);
        assert_eq!(w.pool, vec![468, 64, 12, 1]);
        assert_eq!(w.head, vec![469, 156, 78, 10]);
    }

    #[test]
    fn zero_layers_without_jk_is_the_encoding() {
        let cfg = ModelConfig {
            num_gat_layers: 0,
            jumping_knowledge: false,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.widths(8, 3).node_state, 8);
        assert!(ModelConfig {
            num_gat_layers: 6,
            ..ModelConfig::default()
        }
        .validate()
        .is_err());
    }
}
