use super::config::ModelConfig;
use super::params::{Dense, GatLayer, ModelParameters, Structure};
use super::ModelError;
use crate::graphio::{EdgeSet, ProgramGraph};
use crate::tensor::{Matrix, Tape, Var};

/// A graph prepared for message passing.
///
/// Messages are the enabled edges in set order (AST, ICFG, DFG), followed by
/// one self-loop per node. The first `maskable.len()` messages are the edges
/// an explainer may mask.
#[derive(Clone, Debug)]
pub struct GraphInput {
    pub num_nodes: usize,
    pub onehot: Matrix,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub maskable: Vec<(EdgeSet, usize)>,
    pub property: Vec<f64>,
}

impl GraphInput {
    pub fn new(g: &ProgramGraph, config: &ModelConfig, vocab_len: usize) -> Result<Self, ModelError> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(ModelError::EmptyGraph);
        }
        let mut onehot = Matrix::zeros(n, vocab_len);
        for (i, &k) in g.node_kinds().iter().enumerate() {
            let k = k as usize;
            if k >= vocab_len {
                return Err(ModelError::KindOutOfRange {
                    index: k,
                    len: vocab_len,
                });
            }
            onehot[(i, k)] = 1.0;
        }
        let (mut src, mut dst, mut maskable) = (Vec::new(), Vec::new(), Vec::new());
        for set in EdgeSet::ALL.into_iter().filter(|s| config.uses(*s)) {
            for (pos, &(s, d)) in g.edges(set).iter().enumerate() {
                src.push(s as usize);
                dst.push(d as usize);
                maskable.push((set, pos));
            }
        }
        src.extend(0..n);
        dst.extend(0..n);
        Ok(Self {
            num_nodes: n,
            onehot,
            src,
            dst,
            maskable,
            property: config.property_encoding.encode(g.property),
        })
    }

    pub fn num_messages(&self) -> usize {
        self.src.len()
    }
}

/// One attention pass. Returns the new node states and the attention weight
/// of every message.
///
/// `mask`, when given, is a `maskable × 1` column multiplying the attention
/// weight of each maskable edge; self-loops are never masked.
pub fn gat_layer_on_tape(
    tape: &mut Tape,
    h: Var,
    input: &GraphInput,
    layer: &GatLayer<Var>,
    mask: Option<Var>,
    slope: f64,
) -> Result<(Var, Var), ModelError> {
    let w_in_t = tape.transpose(layer.w_in);
    let w_out_t = tape.transpose(layer.w_out);
    let receiver = tape.matmul(h, w_in_t)?;
    let sender = tape.matmul(h, w_out_t)?;
    let recv_rows = tape.gather_rows(receiver, &input.dst)?;
    let send_rows = tape.gather_rows(sender, &input.src)?;
    let pair = tape.concat_cols(&[recv_rows, send_rows])?;
    let logits = tape.matmul(pair, layer.attn)?;
    let logits = tape.leaky_relu(logits, slope);
    let mut alpha = tape.segment_softmax(logits, &input.dst)?;
    if let Some(m) = mask {
        let loops = tape.constant(Matrix::filled(input.num_nodes, 1, 1.0));
        let full = tape.concat_rows(&[m, loops])?;
        alpha = tape.mul(alpha, full)?;
    }
    let messages = tape.mul(send_rows, alpha)?;
    let out = tape.scatter_add_rows(messages, &input.dst, input.num_nodes)?;
    Ok((out, alpha))
}

pub(crate) fn dense_stack(
    tape: &mut Tape,
    mut x: Var,
    layers: &[Dense<Var>],
    slope: f64,
) -> Result<Var, ModelError> {
    for (j, layer) in layers.iter().enumerate() {
        let z = tape.matmul(x, layer.weight)?;
        x = tape.add(z, layer.bias)?;
        if j + 1 < layers.len() {
            x = tape.leaky_relu(x, slope);
        }
    }
    Ok(x)
}

/// Scores every node with the pooling network, softmaxes across nodes and
/// returns `(graph vector 1×d, node weights 1×n)`.
pub fn attention_pool_on_tape(
    tape: &mut Tape,
    states: Var,
    pool: &[Dense<Var>],
    slope: f64,
) -> Result<(Var, Var), ModelError> {
    if tape.shape(states).0 == 0 {
        return Err(ModelError::EmptyGraph);
    }
    let scores = dense_stack(tape, states, pool, slope)?;
    let row = tape.transpose(scores);
    let weights = tape.softmax_rows(row);
    let pooled = tape.matmul(weights, states)?;
    Ok((pooled, weights))
}

/// Tape handles produced by one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub scores: Var,
    pub pool_weights: Var,
    pub attention: Vec<Var>,
}

/// Full model: GAT stack, jumping knowledge, pooling, property, head.
pub fn forward(
    tape: &mut Tape,
    params: &Structure<Var>,
    config: &ModelConfig,
    input: &GraphInput,
    mask: Option<Var>,
) -> Result<Forward, ModelError> {
    let slope = config.leaky_slope;
    let x = tape.constant(input.onehot.clone());
    let mut outputs = vec![x];
    let mut attention = Vec::with_capacity(params.gat.len());
    let mut h = x;
    for layer in &params.gat {
        let (out, alpha) = gat_layer_on_tape(tape, h, input, layer, mask, slope)?;
        h = if config.gat_activation {
            tape.leaky_relu(out, slope)
        } else {
            out
        };
        outputs.push(h);
        attention.push(alpha);
    }
    let states = if config.jumping_knowledge {
        tape.concat_cols(&outputs)?
    } else {
        h
    };
    let (pooled, pool_weights) = attention_pool_on_tape(tape, states, &params.pool, slope)?;
    let prop = tape.constant(Matrix::row_vector(&input.property));
    let joined = tape.concat_cols(&[pooled, prop])?;
    let scores = dense_stack(tape, joined, &params.head, slope)?;
    Ok(Forward {
        scores,
        pool_weights,
        attention,
    })
}

/// Places every parameter block on the tape, as trainable leaves or as
/// constants.
pub fn load_params(tape: &mut Tape, params: &ModelParameters, trainable: bool) -> Vec<Var> {
    params
        .blocks()
        .iter()
        .map(|b| {
            if trainable {
                tape.leaf(b.clone())
            } else {
                tape.constant(b.clone())
            }
        })
        .collect()
}

/// Dense matrices of one GAT layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GatLayerParams {
    pub w_in: Matrix,
    pub w_out: Matrix,
    pub attn: Matrix,
}

/// Applies one attention layer to `states` over `edges` plus self-loops.
pub fn gat_layer(
    states: &Matrix,
    edges: &[(usize, usize)],
    params: &GatLayerParams,
    slope: f64,
) -> Result<Matrix, ModelError> {
    let n = states.rows();
    if n == 0 {
        return Err(ModelError::EmptyGraph);
    }
    if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= n || d >= n) {
        return Err(ModelError::Config(format!("edge ({s}, {d}) outside {n} nodes")));
    }
    let input = GraphInput {
        num_nodes: n,
        onehot: Matrix::zeros(n, 0),
        src: edges.iter().map(|e| e.0).chain(0..n).collect(),
        dst: edges.iter().map(|e| e.1).chain(0..n).collect(),
        maskable: Vec::new(),
        property: Vec::new(),
    };
    let mut tape = Tape::new();
    let h = tape.constant(states.clone());
    let layer = GatLayer {
        w_in: tape.constant(params.w_in.clone()),
        w_out: tape.constant(params.w_out.clone()),
        attn: tape.constant(params.attn.clone()),
    };
    let (out, _) = gat_layer_on_tape(&mut tape, h, &input, &layer, None, slope)?;
    Ok(tape.value(out).clone())
}

/// Column-wise concatenation of layer outputs, or the last one alone.
pub fn jumping_knowledge(outputs: &[Matrix], enabled: bool) -> Result<Matrix, ModelError> {
    let Some(last) = outputs.last() else {
        return Err(ModelError::EmptyGraph);
    };
    if !enabled {
        return Ok(last.clone());
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = outputs.iter().map(|m| tape.constant(m.clone())).collect();
    let out = tape.concat_cols(&vars)?;
    Ok(tape.value(out).clone())
}

/// Dense matrices of one pooling-network layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

/// Graph vector and per-node weights of the attention pool.
pub fn attention_pool(
    states: &Matrix,
    pool: &[DenseParams],
    slope: f64,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut tape = Tape::new();
    let s = tape.constant(states.clone());
    let layers: Vec<Dense<Var>> = pool
        .iter()
        .map(|l| Dense {
            weight: tape.constant(l.weight.clone()),
            bias: tape.constant(l.bias.clone()),
        })
        .collect();
    let (g, w) = attention_pool_on_tape(&mut tape, s, &layers, slope)?;
    Ok((tape.value(g).as_slice().to_vec(), tape.value(w).as_slice().to_vec()))
}
