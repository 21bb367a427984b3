//! Graph-attention forward pass over the type–predicate graph and the
//! node-scoring head that turns decoder state into a distribution over
//! graph nodes.
//!
//! For each head `k` and node `i`:
//!
//! ```text
//! e_ij   = LeakyReLU(a_k · [W_k h_i ‖ W_k h_j])      j ∈ N(i), N(i) ∋ i
//! α_ij   = softmax_j(e_ij)
//! out_i  = σ( (1/K) Σ_k Σ_j α_ij W_k h_j )
//! ```
//!
//! Heads are averaged before the nonlinearity, not concatenated.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::TypePredicateGraph;
use crate::matrix::{dot, leaky_relu, softmax, Matrix};

pub const DEFAULT_INPUT_DIM: usize = 3072;
pub const DEFAULT_OUTPUT_DIM: usize = 300;
pub const DEFAULT_HEADS: usize = 2;
pub const ATTENTION_NEGATIVE_SLOPE: f64 = 0.2;
/// Slope of the LeakyReLU in the context projection of [`score_nodes`].
pub const SCORE_NEGATIVE_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("at least one attention head is required")]
    NoHeads,
    #[error("embedding matrix contains a non-finite entry")]
    NonFinite,
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<(), GatError> {
    if expected == found {
        Ok(())
    } else {
        Err(GatError::Dimension {
            what,
            expected,
            found,
        })
    }
}

/// One row per graph node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbeddings(Matrix);

impl NodeEmbeddings {
    pub fn new(matrix: Matrix) -> Result<Self, GatError> {
        if !matrix.is_finite() {
            return Err(GatError::NonFinite);
        }
        Ok(NodeEmbeddings(matrix))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    /// Deterministic embeddings: each row is drawn uniformly from
    /// `[-1/√dim, 1/√dim]` by a generator seeded from `(seed, node name)`,
    /// so a row does not depend on the other nodes in the graph.
    pub fn seeded(graph: &TypePredicateGraph, seed: u64, dim: usize) -> Self {
        let bound = 1.0 / libm::sqrt(dim.max(1) as f64);
        let mut m = Matrix::zeros(graph.len(), dim);
        for (i, node) in graph.nodes().iter().enumerate() {
            let name = alloc::format!("{node}");
            let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(seed, name.as_bytes()));
            for v in m.row_mut(i) {
                *v = bound * (2.0 * unit_f64(&mut rng) - 1.0);
            }
        }
        NodeEmbeddings(m)
    }
}

/// FNV-1a over the seed bytes followed by `key`.
fn stable_hash(seed: u64, key: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    seed.to_le_bytes()
        .iter()
        .chain(key)
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Uniform in `[0, 1)` with 53 bits of precision.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    /// Exponential linear unit with α = 1.
    #[default]
    Elu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu if x <= 0.0 => libm::expm1(x),
            _ => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu if x <= 0.0 => libm::exp(x),
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatHead {
    /// `d_out × d_in`.
    pub weight: Matrix,
    /// Length `2 · d_out`: the first half scores the attending node, the
    /// second half the attended neighbor.
    pub attention: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatParams {
    heads: Vec<GatHead>,
    pub negative_slope: f64,
    pub activation: Activation,
}

impl GatParams {
    pub fn new(heads: Vec<GatHead>, activation: Activation) -> Result<Self, GatError> {
        let first = heads.first().ok_or(GatError::NoHeads)?;
        let (d_out, d_in) = (first.weight.rows(), first.weight.cols());
        for h in &heads {
            check_dim("head weight rows", d_out, h.weight.rows())?;
            check_dim("head weight columns", d_in, h.weight.cols())?;
            check_dim("attention vector", 2 * d_out, h.attention.len())?;
        }
        Ok(GatParams {
            heads,
            negative_slope: ATTENTION_NEGATIVE_SLOPE,
            activation,
        })
    }

    /// Glorot-uniform weights and attention vectors from a seed.
    pub fn seeded(d_in: usize, d_out: usize, heads: usize, seed: u64) -> Result<Self, GatError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |bound: f64| bound * (2.0 * unit_f64(&mut rng) - 1.0);
        let w_bound = libm::sqrt(6.0 / (d_in + d_out).max(1) as f64);
        let a_bound = libm::sqrt(6.0 / (2 * d_out + 1) as f64);
        let heads = (0..heads)
            .map(|_| GatHead {
                weight: Matrix::from_fn(d_out, d_in, |_, _| uniform(w_bound)),
                attention: (0..2 * d_out).map(|_| uniform(a_bound)).collect(),
            })
            .collect();
        GatParams::new(heads, Activation::Elu)
    }

    pub fn heads(&self) -> &[GatHead] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [GatHead] {
        &mut self.heads
    }

    pub fn input_dim(&self) -> usize {
        self.heads[0].weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.heads[0].weight.rows()
    }
}

/// Forward pass with intermediate values kept.
#[derive(Debug, Clone, PartialEq)]
pub struct GatTrace {
    /// `W_k h_j` for every head.
    pub projected: Vec<Matrix>,
    /// `attention[k][i][m]` is α between node `i` and its `m`-th neighbor
    /// (in [`TypePredicateGraph::neighbors`] order) for head `k`.
    pub attention: Vec<Vec<Vec<f64>>>,
    /// Head-averaged aggregation before the nonlinearity.
    pub pre_activation: Matrix,
    pub output: NodeEmbeddings,
}

pub fn gat_forward(
    graph: &TypePredicateGraph,
    h: &NodeEmbeddings,
    params: &GatParams,
) -> Result<NodeEmbeddings, GatError> {
    Ok(gat_forward_trace(graph, h, params)?.output)
}

pub fn gat_forward_trace(
    graph: &TypePredicateGraph,
    h: &NodeEmbeddings,
    params: &GatParams,
) -> Result<GatTrace, GatError> {
    check_dim("embedding rows", graph.len(), h.len())?;
    check_dim("embedding columns", params.input_dim(), h.dim())?;
    let n = graph.len();
    let d_out = params.output_dim();
    let k_inv = 1.0 / params.heads.len() as f64;

    let mut pre = Matrix::zeros(n, d_out);
    let mut projected = Vec::with_capacity(params.heads.len());
    let mut attention = Vec::with_capacity(params.heads.len());
    for head in &params.heads {
        let z = Matrix::from_rows(
            &(0..n)
                .map(|j| head.weight.mul_vec(h.row(j)))
                .collect::<Vec<_>>(),
        )
        .unwrap_or_else(|| Matrix::zeros(0, d_out));
        let (a_self, a_nb) = head.attention.split_at(d_out);
        let self_score: Vec<f64> = (0..n).map(|i| dot(a_self, z.row(i))).collect();
        let nb_score: Vec<f64> = (0..n).map(|j| dot(a_nb, z.row(j))).collect();
        let mut head_alpha = Vec::with_capacity(n);
        for (i, &own) in self_score.iter().enumerate() {
            let nbrs = graph.neighbors(i);
            let e: Vec<f64> = nbrs
                .iter()
                .map(|&j| leaky_relu(own + nb_score[j], params.negative_slope))
                .collect();
            let alpha = softmax(&e);
            let out = pre.row_mut(i);
            for (&j, &a) in nbrs.iter().zip(&alpha) {
                for (o, zj) in out.iter_mut().zip(z.row(j)) {
                    *o += k_inv * a * zj;
                }
            }
            head_alpha.push(alpha);
        }
        projected.push(z);
        attention.push(head_alpha);
    }
    let mut out = pre.clone();
    for v in out.as_mut_slice() {
        *v = params.activation.apply(*v);
    }
    Ok(GatTrace {
        projected,
        attention,
        pre_activation: pre,
        output: NodeEmbeddings(out),
    })
}

/// Gradient of `Σ_ic upstream[i][c] · out[i][c]` with respect to each head's
/// weight matrix.
///
/// Derived by hand through the aggregation, the neighborhood softmax and
/// the LeakyReLU scores; no autodiff is involved.
pub fn gat_weight_gradient(
    graph: &TypePredicateGraph,
    h: &NodeEmbeddings,
    params: &GatParams,
    upstream: &Matrix,
) -> Result<Vec<Matrix>, GatError> {
    let trace = gat_forward_trace(graph, h, params)?;
    let n = graph.len();
    let d_out = params.output_dim();
    check_dim("upstream rows", n, upstream.rows())?;
    check_dim("upstream columns", d_out, upstream.cols())?;
    let k_inv = 1.0 / params.heads.len() as f64;

    // gradient at the pre-activation
    let g = Matrix::from_fn(n, d_out, |i, c| {
        upstream[(i, c)] * params.activation.derivative(trace.pre_activation[(i, c)])
    });

    let mut grads = Vec::with_capacity(params.heads.len());
    for (k, head) in params.heads.iter().enumerate() {
        let z = &trace.projected[k];
        let (a_self, a_nb) = head.attention.split_at(d_out);
        let mut dz = Matrix::zeros(n, d_out);
        for i in 0..n {
            let nbrs = graph.neighbors(i);
            let alpha = &trace.attention[k][i];
            let gi = g.row(i);
            let s_self = dot(a_self, z.row(i));
            let d_alpha: Vec<f64> = nbrs.iter().map(|&j| k_inv * dot(gi, z.row(j))).collect();
            let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            for (m, &j) in nbrs.iter().enumerate() {
                // direct path through the weighted sum
                for (dzj, gic) in dz.row_mut(j).iter_mut().zip(gi) {
                    *dzj += k_inv * alpha[m] * gic;
                }
                let s = s_self + dot(a_nb, z.row(j));
                let slope = if s > 0.0 { 1.0 } else { params.negative_slope };
                let ds = alpha[m] * (d_alpha[m] - mean) * slope;
                for (dzi, a) in dz.row_mut(i).iter_mut().zip(a_self) {
                    *dzi += ds * a;
                }
                for (dzj, a) in dz.row_mut(j).iter_mut().zip(a_nb) {
                    *dzj += ds * a;
                }
            }
        }
        let d_in = params.input_dim();
        let mut dw = Matrix::zeros(d_out, d_in);
        for j in 0..n {
            let hj = h.row(j);
            for r in 0..d_out {
                let coef = dz[(j, r)];
                if coef == 0.0 {
                    continue;
                }
                for (w, x) in dw.row_mut(r).iter_mut().zip(hj) {
                    *w += coef * x;
                }
            }
        }
        grads.push(dw);
    }
    Ok(grads)
}

/// Probability of each graph node given the encoder context vector and the
/// current decoder state:
/// `softmax(h_bar · LeakyReLU(W_g [h_ctx ‖ h_dec]))`.
pub fn score_nodes(
    h_bar: &NodeEmbeddings,
    h_ctx: &[f64],
    h_dec: &[f64],
    w_g: &Matrix,
) -> Result<Vec<f64>, GatError> {
    let d = h_bar.dim();
    check_dim("context vector", d, h_ctx.len())?;
    check_dim("decoder vector", d, h_dec.len())?;
    check_dim("projection rows", d, w_g.rows())?;
    check_dim("projection columns", 2 * d, w_g.cols())?;
    let mut joined = Vec::with_capacity(2 * d);
    joined.extend_from_slice(h_ctx);
    joined.extend_from_slice(h_dec);
    let h_c: Vec<f64> = w_g
        .mul_vec(&joined)
        .into_iter()
        .map(|x| leaky_relu(x, SCORE_NEGATIVE_SLOPE))
        .collect();
    let logits: Vec<f64> = (0..h_bar.len()).map(|i| dot(h_bar.row(i), &h_c)).collect();
    Ok(softmax(&logits))
}
