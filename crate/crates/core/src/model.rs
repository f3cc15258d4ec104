//! Desk-scale teacher and student taggers.
//!
//! The encoder is a windowed embedding lookup followed by a tanh MLP: the
//! embeddings of the tokens in a fixed context window (zero vectors outside
//! the sentence) are concatenated and pushed through the hidden layers, and
//! an output projection yields the per-position emission vector. Transition
//! and start parameters complete the lattice: `start[j] = start_param[j] +
//! e_1[j]`, `pair(l, i, j) = transition[i][j] + e_{l+2}[j]`.
//!
//! Backprop is written out by hand; gradients are checked against central
//! finite differences in the tests.

use std::io::{BufRead, BufReader, Read as _};
use std::path::Path;
use std::sync::atomic::Ordering;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counters::ENCODER_FORWARDS;
use crate::lattice::{LatticeGrad, ScoreLattice};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Context window width; must be odd. (window-1)/2 tokens each side.
    pub window: usize,
    pub hidden_dims: Vec<usize>,
    pub num_tags: usize,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0
            || self.embed_dim == 0
            || self.num_tags == 0
            || self.hidden_dims.contains(&0)
        {
            return Err(Error::Config("all dimensions must be >= 1".into()));
        }
        if self.window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window must be odd, got {}",
                self.window
            )));
        }
        Ok(())
    }

    /// Default teacher: embed 64, window 5, hidden [128, 128].
    pub fn teacher_default(vocab_size: usize, num_tags: usize, seed: u64) -> Self {
        Self {
            vocab_size,
            embed_dim: 64,
            window: 5,
            hidden_dims: vec![128, 128],
            num_tags,
            seed,
        }
    }

    /// Default student: embed 32, window 3, hidden [32].
    pub fn student_default(vocab_size: usize, num_tags: usize, seed: u64) -> Self {
        Self {
            vocab_size,
            embed_dim: 32,
            window: 3,
            hidden_dims: vec![32],
            num_tags,
            seed,
        }
    }
}

/// Dense matrix, row-major, with explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = W x + b
    fn affine(&self, x: &[f64], b: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = b[r];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *out = acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// All learnable tensors of one tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: EncoderConfig,
    /// vocab_size x embed_dim
    pub embeddings: Matrix,
    /// Hidden layers (tanh), then the output projection to num_tags (linear).
    pub layers: Vec<Layer>,
    pub output: Layer,
    /// N x N transition scores, row = previous tag.
    pub transition: Matrix,
    pub start: Vec<f64>,
}

impl ModelParams {
    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flat views of every tensor in fixed declared order:
    /// embeddings, each hidden (weight, bias), output (weight, bias),
    /// transition, start.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embeddings.data.as_slice()];
        for l in &self.layers {
            out.push(&l.weight.data);
            out.push(&l.bias);
        }
        out.push(&self.output.weight.data);
        out.push(&self.output.bias);
        out.push(&self.transition.data);
        out.push(&self.start);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.embeddings.data];
        for l in &mut self.layers {
            out.push(&mut l.weight.data);
            out.push(&mut l.bias);
        }
        out.push(&mut self.output.weight.data);
        out.push(&mut self.output.bias);
        out.push(&mut self.transition.data);
        out.push(&mut self.start);
        out
    }
}

/// Gradients for every tensor in [`ModelParams`], same layout.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub embeddings: Matrix,
    pub layers: Vec<Layer>,
    pub output: Layer,
    pub transition: Matrix,
    pub start: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            embeddings: Matrix::zeros(params.embeddings.rows, params.embeddings.cols),
            layers: params
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Matrix::zeros(l.weight.rows, l.weight.cols),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            output: Layer {
                weight: Matrix::zeros(params.output.weight.rows, params.output.weight.cols),
                bias: vec![0.0; params.output.bias.len()],
            },
            transition: Matrix::zeros(params.transition.rows, params.transition.cols),
            start: vec![0.0; params.start.len()],
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embeddings.data.as_slice()];
        for l in &self.layers {
            out.push(&l.weight.data);
            out.push(&l.bias);
        }
        out.push(&self.output.weight.data);
        out.push(&self.output.bias);
        out.push(&self.transition.data);
        out.push(&self.start);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.embeddings.data];
        for l in &mut self.layers {
            out.push(&mut l.weight.data);
            out.push(&mut l.bias);
        }
        out.push(&mut self.output.weight.data);
        out.push(&mut self.output.bias);
        out.push(&mut self.transition.data);
        out.push(&mut self.start);
        out
    }

    /// self += other
    pub fn accumulate(&mut self, other: &ParamGrads) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
    }
}

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights; zero transitions/start.
pub fn init_model(config: &EncoderConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Matrix {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect(),
        }
    };

    let embeddings = uniform(config.vocab_size, config.embed_dim, config.embed_dim);
    let mut in_dim = config.window * config.embed_dim;
    let mut layers = Vec::with_capacity(config.hidden_dims.len());
    for &h in &config.hidden_dims {
        layers.push(Layer {
            weight: uniform(h, in_dim, in_dim),
            bias: vec![0.0; h],
        });
        in_dim = h;
    }
    let output = Layer {
        weight: uniform(config.num_tags, in_dim, in_dim),
        bias: vec![0.0; config.num_tags],
    };
    Ok(ModelParams {
        config: config.clone(),
        embeddings,
        layers,
        output,
        transition: Matrix::zeros(config.num_tags, config.num_tags),
        start: vec![0.0; config.num_tags],
    })
}

struct ForwardTrace {
    /// Concatenated window input per position.
    inputs: Vec<Vec<f64>>,
    /// Post-tanh activations per hidden layer per position.
    hidden: Vec<Vec<Vec<f64>>>,
    /// Emission vectors per position.
    emissions: Vec<Vec<f64>>,
}

fn window_input(params: &ModelParams, sentence: &[usize], pos: usize) -> Vec<f64> {
    let cfg = &params.config;
    let half = (cfg.window - 1) / 2;
    let mut x = vec![0.0; cfg.window * cfg.embed_dim];
    for w in 0..cfg.window {
        let offset = pos as isize + w as isize - half as isize;
        if offset >= 0 && (offset as usize) < sentence.len() {
            let row = params.embeddings.row(sentence[offset as usize]);
            x[w * cfg.embed_dim..(w + 1) * cfg.embed_dim].copy_from_slice(row);
        }
    }
    x
}

/// Input window, hidden activations, and emissions for one position.
type PositionTrace = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>);

/// One position of the windowed MLP; positions are independent of each
/// other, which is what makes the encoder parallel across a sentence.
fn position_forward(params: &ModelParams, sentence: &[usize], pos: usize) -> PositionTrace {
    let cfg = &params.config;
    let x = window_input(params, sentence, pos);
    let mut acts = Vec::with_capacity(params.layers.len());
    let mut cur = x.clone();
    for layer in &params.layers {
        let mut h = vec![0.0; layer.weight.rows];
        layer.weight.affine(&cur, &layer.bias, &mut h);
        for v in &mut h {
            *v = v.tanh();
        }
        cur = h.clone();
        acts.push(h);
    }
    let mut e = vec![0.0; cfg.num_tags];
    params
        .output
        .weight
        .affine(&cur, &params.output.bias, &mut e);
    (x, acts, e)
}

fn check_sentence(params: &ModelParams, sentence: &[usize]) -> Result<()> {
    if sentence.is_empty() {
        return Err(Error::InvalidInput("empty sentence".into()));
    }
    if let Some(&bad) = sentence.iter().find(|&&t| t >= params.config.vocab_size) {
        return Err(Error::InvalidInput(format!(
            "token id {bad} out of range for vocab {}",
            params.config.vocab_size
        )));
    }
    Ok(())
}

fn forward_trace(params: &ModelParams, sentence: &[usize]) -> Result<ForwardTrace> {
    check_sentence(params, sentence)?;
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(sentence.len()),
        hidden: Vec::with_capacity(sentence.len()),
        emissions: Vec::with_capacity(sentence.len()),
    };
    for pos in 0..sentence.len() {
        let (x, acts, e) = position_forward(params, sentence, pos);
        trace.inputs.push(x);
        trace.hidden.push(acts);
        trace.emissions.push(e);
    }
    Ok(trace)
}

/// Same trace, computed with the positions split across the ambient
/// rayon pool.
fn forward_trace_par(params: &ModelParams, sentence: &[usize]) -> Result<ForwardTrace> {
    use rayon::prelude::*;
    check_sentence(params, sentence)?;
    let per_pos: Vec<PositionTrace> = (0..sentence.len())
        .into_par_iter()
        .map(|pos| position_forward(params, sentence, pos))
        .collect();
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(sentence.len()),
        hidden: Vec::with_capacity(sentence.len()),
        emissions: Vec::with_capacity(sentence.len()),
    };
    for (x, acts, e) in per_pos {
        trace.inputs.push(x);
        trace.hidden.push(acts);
        trace.emissions.push(e);
    }
    Ok(trace)
}

/// Encode a sentence into its score lattice.
pub fn encode(params: &ModelParams, sentence: &[usize]) -> Result<ScoreLattice> {
    ENCODER_FORWARDS.fetch_add(1, Ordering::Relaxed);
    let trace = forward_trace(params, sentence)?;
    lattice_from_emissions(params, &trace.emissions)
}

/// `encode` with the positions computed on the ambient rayon pool.
/// The windowed encoder has no recurrence, so every position of the
/// lattice can be filled in independently.
pub fn encode_par(params: &ModelParams, sentence: &[usize]) -> Result<ScoreLattice> {
    ENCODER_FORWARDS.fetch_add(1, Ordering::Relaxed);
    let trace = forward_trace_par(params, sentence)?;
    lattice_from_emissions(params, &trace.emissions)
}

fn lattice_from_emissions(params: &ModelParams, emissions: &[Vec<f64>]) -> Result<ScoreLattice> {
    let n = params.config.num_tags;
    let len = emissions.len();
    let start: Vec<f64> = (0..n).map(|j| params.start[j] + emissions[0][j]).collect();
    let mut pair = vec![0.0; len.saturating_sub(1) * n * n];
    for l in 0..len.saturating_sub(1) {
        for i in 0..n {
            for j in 0..n {
                pair[(l * n + i) * n + j] = params.transition.row(i)[j] + emissions[l + 1][j];
            }
        }
    }
    ScoreLattice::new(len, n, start, pair)
}

/// Chain rule from a lattice gradient back to every parameter tensor.
pub fn backward(
    params: &ModelParams,
    sentence: &[usize],
    grad: &LatticeGrad,
) -> Result<ParamGrads> {
    backward_impl(params, sentence, grad, 1)
}

/// `backward`, with the per-position work split into `chunks` ranges
/// run on the ambient rayon pool. Partial gradients are reduced in a
/// fixed chunk order so the result is deterministic for a given chunk
/// count.
pub fn backward_par(
    params: &ModelParams,
    sentence: &[usize],
    grad: &LatticeGrad,
    chunks: usize,
) -> Result<ParamGrads> {
    backward_impl(params, sentence, grad, chunks.max(1))
}

fn backward_impl(
    params: &ModelParams,
    sentence: &[usize],
    grad: &LatticeGrad,
    chunks: usize,
) -> Result<ParamGrads> {
    let cfg = &params.config;
    let n = cfg.num_tags;
    if grad.len() != sentence.len() || grad.num_tags() != n {
        return Err(Error::ShapeMismatch(
            "lattice gradient does not match sentence".into(),
        ));
    }
    let trace = if chunks > 1 {
        forward_trace_par(params, sentence)?
    } else {
        forward_trace(params, sentence)?
    };
    let mut grads = ParamGrads::zeros_like(params);

    // d loss / d emission[l][j]
    let len = sentence.len();
    let mut d_emissions = vec![vec![0.0; n]; len];
    for j in 0..n {
        d_emissions[0][j] = grad.d_start[j];
        grads.start[j] += grad.d_start[j];
    }
    for l in 0..len.saturating_sub(1) {
        for i in 0..n {
            for j in 0..n {
                let g = grad.d_pair[(l * n + i) * n + j];
                grads.transition.row_mut(i)[j] += g;
                d_emissions[l + 1][j] += g;
            }
        }
    }

    if chunks > 1 {
        use rayon::prelude::*;
        let chunk_len = len.div_ceil(chunks);
        let partials: Vec<ParamGrads> = (0..len)
            .step_by(chunk_len)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|lo| {
                let hi = (lo + chunk_len).min(len);
                let mut part = ParamGrads::zeros_like(params);
                for pos in lo..hi {
                    backprop_position(params, sentence, &trace, &d_emissions[pos], pos, &mut part);
                }
                part
            })
            .collect();
        for part in &partials {
            grads.accumulate(part);
        }
    } else {
        for pos in 0..len {
            backprop_position(params, sentence, &trace, &d_emissions[pos], pos, &mut grads);
        }
    }
    Ok(grads)
}

/// Backprop through the MLP for one position, accumulating into `grads`.
fn backprop_position(
    params: &ModelParams,
    sentence: &[usize],
    trace: &ForwardTrace,
    d_e: &[f64],
    pos: usize,
    grads: &mut ParamGrads,
) {
    let cfg = &params.config;
    let len = sentence.len();
    let half = (cfg.window - 1) / 2;
    {
        // output projection
        let last_act: &[f64] = if params.layers.is_empty() {
            &trace.inputs[pos]
        } else {
            trace.hidden[pos].last().unwrap()
        };
        let mut d_act = vec![0.0; last_act.len()];
        for (r, &g) in d_e.iter().enumerate() {
            grads.output.bias[r] += g;
            let w_row = params.output.weight.row(r);
            let gw_row = grads.output.weight.row_mut(r);
            for (c, (&a, gw)) in last_act.iter().zip(gw_row.iter_mut()).enumerate() {
                *gw += g * a;
                d_act[c] += g * w_row[c];
            }
        }
        // hidden layers in reverse
        for li in (0..params.layers.len()).rev() {
            let act = &trace.hidden[pos][li];
            let input: &[f64] = if li == 0 {
                &trace.inputs[pos]
            } else {
                &trace.hidden[pos][li - 1]
            };
            // through tanh
            let d_pre: Vec<f64> = d_act
                .iter()
                .zip(act)
                .map(|(&g, &a)| g * (1.0 - a * a))
                .collect();
            let layer = &params.layers[li];
            let glayer = &mut grads.layers[li];
            let mut d_in = vec![0.0; input.len()];
            for (r, &g) in d_pre.iter().enumerate() {
                glayer.bias[r] += g;
                let w_row = layer.weight.row(r);
                let gw_row = glayer.weight.row_mut(r);
                for (c, (&x, gw)) in input.iter().zip(gw_row.iter_mut()).enumerate() {
                    *gw += g * x;
                    d_in[c] += g * w_row[c];
                }
            }
            d_act = d_in;
        }
        // into the embedding rows actually inside the window
        for w in 0..cfg.window {
            let offset = pos as isize + w as isize - half as isize;
            if offset >= 0 && (offset as usize) < len {
                let row = grads.embeddings.row_mut(sentence[offset as usize]);
                let seg = &d_act[w * cfg.embed_dim..(w + 1) * cfg.embed_dim];
                for (g, d) in row.iter_mut().zip(seg) {
                    *g += d;
                }
            }
        }
    }
}

/// Adam accumulators; one moment pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// Bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ParamGrads,
    state: &mut AdamState,
) -> Result<()> {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let tensors = params.tensors_mut();
    let gtensors = grads.tensors();
    if tensors.len() != gtensors.len() {
        return Err(Error::ShapeMismatch("gradient tensor count".into()));
    }
    for ((p, g), (m, v)) in tensors
        .into_iter()
        .zip(gtensors)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if p.len() != g.len() {
            return Err(Error::ShapeMismatch("gradient tensor shape".into()));
        }
        for k in 0..p.len() {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            p[k] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: EncoderConfig,
    tag_vocab: Vec<String>,
    tensor_lens: Vec<usize>,
}

/// Write a checkpoint: one JSON header line, then every tensor as flat
/// little-endian f32 in declared order.
pub fn save_checkpoint(params: &ModelParams, tag_vocab: &[String], path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        config: params.config.clone(),
        tag_vocab: tag_vocab.to_vec(),
        tensor_lens: params.tensors().iter().map(|t| t.len()).collect(),
    };
    let mut buf = serde_json::to_vec(&header).expect("header serializes");
    buf.push(b'\n');
    for tensor in params.tensors() {
        for &x in tensor {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Load a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, Vec<String>)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = BufReader::new(file);
    let mut header_line = String::new();
    reader
        .read_line(&mut header_line)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let header: CheckpointHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::InvalidInput(format!("bad checkpoint header: {e}")))?;
    let mut params = init_model(&header.config)?;
    {
        let tensors = params.tensors_mut();
        if tensors.len() != header.tensor_lens.len() {
            return Err(Error::InvalidInput("checkpoint tensor count".into()));
        }
        for (tensor, &expect) in tensors.into_iter().zip(&header.tensor_lens) {
            if tensor.len() != expect {
                return Err(Error::InvalidInput("checkpoint tensor length".into()));
            }
            let mut raw = vec![0u8; expect * 4];
            reader
                .read_exact(&mut raw)
                .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            for (k, chunk) in raw.chunks_exact(4).enumerate() {
                tensor[k] = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
            }
        }
    }
    Ok((params, header.tag_vocab))
}
