use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, Widths};
use super::ModelError;
use crate::graphio::TokenVocabulary;
use crate::tensor::Matrix;

/// One GAT layer: receiver and sender projections plus the attention vector
/// over `[receiver ‖ sender]`.
#[derive(Clone, Copy, Debug)]
pub struct GatLayer<T> {
    pub w_in: T,
    pub w_out: T,
    pub attn: T,
}

/// Affine layer `x · weight + bias`, weight stored `in × out`.
#[derive(Clone, Copy, Debug)]
pub struct Dense<T> {
    pub weight: T,
    pub bias: T,
}

/// Parameters grouped by role; `T` is a matrix reference or a tape handle.
#[derive(Clone, Debug)]
pub struct Structure<T> {
    pub gat: Vec<GatLayer<T>>,
    pub pool: Vec<Dense<T>>,
    pub head: Vec<Dense<T>>,
}

impl<T: Copy> Structure<T> {
    /// Splits a flat list laid out by [`layout`].
    pub fn from_flat(items: &[T], gat: usize, pool: usize, head: usize) -> Self {
        assert_eq!(items.len(), 3 * gat + 2 * (pool + head), "parameter count");
        let mut it = items.iter().copied();
        let mut next = || it.next().expect("length checked");
        let gat = (0..gat)
            .map(|_| GatLayer {
                w_in: next(),
                w_out: next(),
                attn: next(),
            })
            .collect();
        let mut dense = |n: usize| -> Vec<Dense<T>> {
            (0..n)
                .map(|_| Dense {
                    weight: next(),
                    bias: next(),
                })
                .collect()
        };
        let pool = dense(pool);
        let head = dense(head);
        Self { gat, pool, head }
    }
}

/// Block names and shapes, in storage order.
pub fn layout(widths: &Widths) -> Vec<(String, (usize, usize))> {
    let mut out = Vec::new();
    for (l, &(i, o)) in widths.gat.iter().enumerate() {
        out.push((format!("gat.{l}.w_in"), (o, i)));
        out.push((format!("gat.{l}.w_out"), (o, i)));
        out.push((format!("gat.{l}.attn"), (2 * o, 1)));
    }
    for (prefix, dims) in [("pool", &widths.pool), ("head", &widths.head)] {
        for (j, w) in dims.windows(2).enumerate() {
            out.push((format!("{prefix}.{j}.weight"), (w[0], w[1])));
            out.push((format!("{prefix}.{j}.bias"), (1, w[1])));
        }
    }
    out
}

fn init_bound(name: &str, (rows, cols): (usize, usize)) -> f64 {
    if name.starts_with("gat.") {
        (6.0 / (rows + cols) as f64).sqrt()
    } else {
        1.0 / (rows as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    pub config: ModelConfig,
    pub portfolio: Vec<String>,
    pub vocab_fingerprint: String,
    pub vocab_len: usize,
    names: Vec<String>,
    blocks: Vec<Matrix>,
}

impl ModelParameters {
    /// Seeded uniform initialization: Glorot bounds for attention layers,
    /// `±1/√fan_in` for dense layers, whose biases share the weight's bound.
    pub fn init(
        config: ModelConfig,
        vocab: &TokenVocabulary,
        portfolio: Vec<String>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let mut params = Self::zeros(config, vocab, portfolio)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bound = 1.0;
        for (name, block) in params.names.iter().zip(params.blocks.iter_mut()) {
            if !name.ends_with(".bias") {
                bound = init_bound(name, block.shape());
            }
            for x in block.as_mut_slice() {
                *x = rng.random_range(-bound..bound);
            }
        }
        Ok(params)
    }

    pub fn zeros(
        config: ModelConfig,
        vocab: &TokenVocabulary,
        portfolio: Vec<String>,
    ) -> Result<Self, ModelError> {
        Self::empty(config, vocab.fingerprint(), vocab.len(), portfolio)
    }

    pub(crate) fn empty(
        config: ModelConfig,
        vocab_fingerprint: String,
        vocab_len: usize,
        portfolio: Vec<String>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if portfolio.is_empty() {
            return Err(ModelError::Config("portfolio is empty".into()));
        }
        if vocab_len == 0 {
            return Err(ModelError::Config("vocabulary is empty".into()));
        }
        let (names, blocks) = layout(&config.widths(vocab_len, portfolio.len()))
            .into_iter()
            .map(|(n, (r, c))| (n, Matrix::zeros(r, c)))
            .unzip();
        Ok(Self {
            config,
            portfolio,
            vocab_fingerprint,
            vocab_len,
            names,
            blocks,
        })
    }

    pub fn widths(&self) -> Widths {
        self.config.widths(self.vocab_len, self.portfolio.len())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Matrix] {
        &mut self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Matrix> {
        self.names.iter().position(|n| n == name).map(|i| &self.blocks[i])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &mut self.blocks[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.blocks.iter().map(Matrix::len).sum()
    }

    pub fn structure(&self) -> Structure<&Matrix> {
        let refs: Vec<&Matrix> = self.blocks.iter().collect();
        self.shape_of(&refs)
    }

    /// Groups a flat list laid out like [`Self::blocks`] by layer.
    pub fn shape_of<T: Copy>(&self, flat: &[T]) -> Structure<T> {
        let w = self.widths();
        Structure::from_flat(flat, w.gat.len(), w.pool.len() - 1, w.head.len() - 1)
    }

    /// Replaces all blocks; shapes must match the layout.
    pub fn set_blocks(&mut self, blocks: Vec<Matrix>) -> Result<(), ModelError> {
        if blocks.len() != self.blocks.len()
            || blocks
                .iter()
                .zip(&self.blocks)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(ModelError::Config("parameter blocks do not match the layout".into()));
        }
        self.blocks = blocks;
        Ok(())
    }
}
