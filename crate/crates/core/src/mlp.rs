//! Bias-free fully-connected networks.
//!
//! Hidden layers use ReLU; the output activation is chosen per network.
//! Every dot product accumulates in `f32` from `0.0` in ascending input
//! index, so batched and single-point inference agree bit for bit.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binio::{CrcReader, CrcWriter};
use crate::encoding::FeatureTable;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"NGMP";
const VERSION: u32 = 1;

/// Hidden width used by every application network.
pub const HIDDEN_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    Identity,
    Sigmoid,
    Exp,
}

impl OutputActivation {
    pub fn apply(self, z: f32) -> f32 {
        match self {
            OutputActivation::Identity => z,
            OutputActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            OutputActivation::Exp => z.exp(),
        }
    }

    /// Derivative expressed through the activated value `y = apply(z)`.
    fn derivative(self, y: f32) -> f32 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::Sigmoid => y * (1.0 - y),
            OutputActivation::Exp => y,
        }
    }

    fn code(self) -> u32 {
        match self {
            OutputActivation::Identity => 0,
            OutputActivation::Sigmoid => 1,
            OutputActivation::Exp => 2,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(OutputActivation::Identity),
            1 => Some(OutputActivation::Sigmoid),
            2 => Some(OutputActivation::Exp),
            _ => None,
        }
    }
}

/// Weights of a bias-free MLP. `weights[k]` is row-major
/// `widths[k + 1] x widths[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    widths: Vec<usize>,
    weights: Vec<Vec<f32>>,
    output: OutputActivation,
}

/// Parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f32>>,
    pub input: Vec<f32>,
}

impl MlpGrads {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            input: vec![0.0; model.input_width()],
        }
    }
}

/// Layer widths `[input, hidden; hidden_layers, output]`.
pub fn layer_widths(input: usize, hidden_layers: usize, output: usize) -> Vec<usize> {
    let mut w = Vec::with_capacity(hidden_layers + 2);
    w.push(input);
    w.extend(std::iter::repeat(HIDDEN_WIDTH).take(hidden_layers));
    w.push(output);
    w
}

impl MlpModel {
    pub fn from_weights(
        widths: Vec<usize>,
        weights: Vec<Vec<f32>>,
        output: OutputActivation,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::config(format!("invalid layer widths {widths:?}")));
        }
        if weights.len() != widths.len() - 1 {
            return Err(Error::config(format!(
                "{} weight matrices for {} layer transitions",
                weights.len(),
                widths.len() - 1
            )));
        }
        for (k, w) in weights.iter().enumerate() {
            if w.len() != widths[k] * widths[k + 1] {
                return Err(Error::config(format!(
                    "weight matrix {k} has {} values, expected {}x{}",
                    w.len(),
                    widths[k + 1],
                    widths[k]
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("weight matrix {k} has non-finite values")));
            }
        }
        Ok(Self {
            widths,
            weights,
            output,
        })
    }

    pub fn zeros(widths: Vec<usize>, output: OutputActivation) -> Result<Self> {
        let weights = widths.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect();
        Self::from_weights(widths, weights, output)
    }

    /// Uniform init in `±sqrt(6 / (fan_in + fan_out))` per matrix.
    pub fn random(widths: Vec<usize>, output: OutputActivation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = widths
            .windows(2)
            .map(|p| {
                let bound = (6.0 / (p[0] + p[1]) as f32).sqrt();
                (0..p[0] * p[1]).map(|_| rng.gen_range(-bound..=bound)).collect()
            })
            .collect();
        Self::from_weights(widths, weights, output)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn weights(&self) -> &[Vec<f32>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f32>] {
        &mut self.weights
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn layer_transitions(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    fn check_input(&self, input: &[f32]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::config(format!(
                "input of width {} for a network expecting {}",
                input.len(),
                self.input_width()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite network input"));
        }
        Ok(())
    }

    /// Runs the network and returns every layer's activations, input first.
    fn trace(&self, input: &[f32]) -> Vec<Vec<f32>> {
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(input.to_vec());
        for (k, w) in self.weights.iter().enumerate() {
            let x = &acts[k];
            let n_in = self.widths[k];
            let y: Vec<f32> = w
                .chunks_exact(n_in)
                .map(|row| {
                    let mut acc = 0.0f32;
                    for (a, b) in row.iter().zip(x) {
                        acc += a * b;
                    }
                    if k == last {
                        self.output.apply(acc)
                    } else {
                        acc.max(0.0)
                    }
                })
                .collect();
            acts.push(y);
        }
        acts
    }

    pub fn forward(&self, input: &[f32]) -> Result<Vec<f32>> {
        self.check_input(input)?;
        Ok(self.trace(input).pop().unwrap())
    }

    /// Elementwise [`forward`](Self::forward), bit-identical per element.
    ///
    /// Inputs are processed in chunks through the feature-major kernel; each
    /// element still accumulates in ascending input order.
    pub fn forward_batch(&self, inputs: &[Vec<f32>]) -> Result<Vec<Vec<f32>>> {
        for (i, x) in inputs.iter().enumerate() {
            self.check_input(x).map_err(|e| e.in_batch(i))?;
        }
        let chunks: Vec<Vec<Vec<f32>>> = inputs
            .par_chunks(BATCH_CHUNK)
            .map(|chunk| {
                let trace = self.trace_batch(&to_feature_major(chunk, self.input_width()), chunk.len());
                from_feature_major(trace.output(), self.output_width(), chunk.len())
            })
            .collect();
        Ok(chunks.into_iter().flatten().collect())
    }

    /// Forward pass over a feature-major batch (`x[j * batch + b]`),
    /// keeping every layer's activations.
    pub(crate) fn trace_batch(&self, inputs: &[f32], batch: usize) -> BatchTrace {
        debug_assert_eq!(inputs.len(), self.input_width() * batch);
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(inputs.to_vec());
        for (k, w) in self.weights.iter().enumerate() {
            let n_in = self.widths[k];
            let n_out = self.widths[k + 1];
            let x = &acts[k];
            let mut y = vec![0.0f32; n_out * batch];
            for (i, acc) in y.chunks_exact_mut(batch).enumerate() {
                let row = &w[i * n_in..(i + 1) * n_in];
                for (j, &wij) in row.iter().enumerate() {
                    let xj = &x[j * batch..(j + 1) * batch];
                    for (a, xv) in acc.iter_mut().zip(xj) {
                        *a += wij * xv;
                    }
                }
                if k == last {
                    for a in acc.iter_mut() {
                        *a = self.output.apply(*a);
                    }
                } else {
                    for a in acc.iter_mut() {
                        *a = a.max(0.0);
                    }
                }
            }
            acts.push(y);
        }
        BatchTrace { batch, acts }
    }

    /// Reverse pass over a batch trace. Weight gradients are summed over the
    /// batch in ascending sample order and added into `weight_grads`; the
    /// feature-major input gradient is returned.
    pub(crate) fn backward_batch(
        &self,
        trace: &BatchTrace,
        upstream: &[f32],
        weight_grads: &mut [Vec<f32>],
    ) -> Vec<f32> {
        let batch = trace.batch;
        let out = trace.output();
        debug_assert_eq!(upstream.len(), out.len());
        let mut delta: Vec<f32> = upstream
            .iter()
            .zip(out)
            .map(|(u, y)| u * self.output.derivative(*y))
            .collect();
        for k in (0..self.weights.len()).rev() {
            let n_in = self.widths[k];
            let x = &trace.acts[k];
            let w = &self.weights[k];
            for (i, d) in delta.chunks_exact(batch).enumerate() {
                let grow = &mut weight_grads[k][i * n_in..(i + 1) * n_in];
                for (j, g) in grow.iter_mut().enumerate() {
                    let mut acc = 0.0f32;
                    for (dv, xv) in d.iter().zip(&x[j * batch..(j + 1) * batch]) {
                        acc += dv * xv;
                    }
                    *g += acc;
                }
            }
            let mut prev = vec![0.0f32; n_in * batch];
            for (i, d) in delta.chunks_exact(batch).enumerate() {
                for (j, &wij) in w[i * n_in..(i + 1) * n_in].iter().enumerate() {
                    for (p, dv) in prev[j * batch..(j + 1) * batch].iter_mut().zip(d) {
                        *p += wij * dv;
                    }
                }
            }
            if k > 0 {
                for (p, xv) in prev.iter_mut().zip(x) {
                    if *xv <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    /// Reverse-mode pass for one input. `upstream` is the loss gradient with
    /// respect to the (activated) output.
    pub fn backward(&self, input: &[f32], upstream: &[f32]) -> Result<MlpGrads> {
        let mut grads = MlpGrads::zeros_like(self);
        let input_grad = self.backward_accumulate(input, upstream, &mut grads)?;
        grads.input = input_grad;
        Ok(grads)
    }

    /// Adds this input's weight gradients into `grads` and returns the input
    /// gradient. `grads.input` is left untouched.
    pub fn backward_accumulate(
        &self,
        input: &[f32],
        upstream: &[f32],
        grads: &mut MlpGrads,
    ) -> Result<Vec<f32>> {
        self.check_input(input)?;
        if upstream.len() != self.output_width() {
            return Err(Error::config(format!(
                "upstream gradient of width {} for output width {}",
                upstream.len(),
                self.output_width()
            )));
        }
        if grads.weights.len() != self.weights.len()
            || grads.weights.iter().zip(&self.weights).any(|(g, w)| g.len() != w.len())
        {
            return Err(Error::config("gradient buffers do not match the model"));
        }
        let acts = self.trace(input);
        let out = acts.last().unwrap();
        let mut delta: Vec<f32> = upstream
            .iter()
            .zip(out)
            .map(|(u, y)| u * self.output.derivative(*y))
            .collect();
        for k in (0..self.weights.len()).rev() {
            let n_in = self.widths[k];
            let x = &acts[k];
            for (i, d) in delta.iter().enumerate() {
                let row = &mut grads.weights[k][i * n_in..(i + 1) * n_in];
                for (g, xj) in row.iter_mut().zip(x) {
                    *g += d * xj;
                }
            }
            let w = &self.weights[k];
            let mut prev = vec![0.0f32; n_in];
            for (i, d) in delta.iter().enumerate() {
                for (p, wij) in prev.iter_mut().zip(&w[i * n_in..(i + 1) * n_in]) {
                    *p += wij * d;
                }
            }
            if k > 0 {
                // ReLU mask from the activated hidden values
                for (p, xj) in prev.iter_mut().zip(x) {
                    if *xj <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Writes a checkpoint: `"NGMP"`, version, layer count, widths, output
    /// activation, row-major f32 weights, CRC-32 trailer. Little-endian.
    pub fn write_checkpoint<W: Write>(&self, w: W) -> Result<()> {
        let mut w = CrcWriter::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u32(self.widths.len() as u32)?;
        for &n in &self.widths {
            w.u32(n as u32)?;
        }
        w.u32(self.output.code())?;
        for m in &self.weights {
            w.f32_slice(m)?;
        }
        w.finish()?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: R) -> Result<Self> {
        const WHAT: &str = "mlp checkpoint";
        let mut r = CrcReader::new(r, WHAT);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(WHAT, format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::format(WHAT, format!("{n} layers")));
        }
        let widths = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if widths.iter().any(|&w| w == 0 || w > 1 << 16) {
            return Err(Error::format(WHAT, format!("layer widths {widths:?}")));
        }
        let code = r.u32()?;
        let output = OutputActivation::from_code(code)
            .ok_or_else(|| Error::format(WHAT, format!("unknown activation {code}")))?;
        let weights = widths
            .windows(2)
            .map(|p| r.f32_vec(p[0] * p[1]))
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Self::from_weights(widths, weights, output)
    }
}

const BATCH_CHUNK: usize = 256;

/// Per-layer activations of a feature-major batch, input first.
pub(crate) struct BatchTrace {
    batch: usize,
    acts: Vec<Vec<f32>>,
}

impl BatchTrace {
    pub(crate) fn output(&self) -> &[f32] {
        self.acts.last().unwrap()
    }
}

pub(crate) fn to_feature_major(rows: &[Vec<f32>], width: usize) -> Vec<f32> {
    let batch = rows.len();
    let mut out = vec![0.0; width * batch];
    for (b, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j * batch + b] = *v;
        }
    }
    out
}

pub(crate) fn from_feature_major(data: &[f32], width: usize, batch: usize) -> Vec<Vec<f32>> {
    (0..batch)
        .map(|b| (0..width).map(|j| data[j * batch + b]).collect())
        .collect()
}

/// Gradients for one joint update of a network and its feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub mlp: MlpGrads,
    /// Dense, laid out like [`FeatureTable::values`].
    pub table: Vec<f32>,
}

/// Plain gradient descent: `param -= learning_rate * grad` for every weight
/// and table value.
pub fn sgd_step(
    model: &mut MlpModel,
    table: &mut FeatureTable,
    grads: &Gradients,
    learning_rate: f32,
) -> Result<()> {
    if grads.mlp.weights.len() != model.weights.len()
        || grads.mlp.weights.iter().zip(&model.weights).any(|(g, w)| g.len() != w.len())
    {
        return Err(Error::shape("weight gradients do not match the model"));
    }
    if grads.table.len() != table.values().len() {
        return Err(Error::shape("table gradient does not match the table"));
    }
    if !learning_rate.is_finite() {
        return Err(Error::domain("learning rate must be finite"));
    }
    for (w, g) in model.weights.iter_mut().zip(&grads.mlp.weights) {
        for (wi, gi) in w.iter_mut().zip(g) {
            *wi -= learning_rate * gi;
        }
    }
    table.apply_dense_update(&grads.table, learning_rate);
    Ok(())
}
