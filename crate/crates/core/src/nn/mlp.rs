//! Dense feed-forward network with hand-derived backpropagation.
//!
//! Layer `i` computes `z = W_i x + b_i` followed by the hidden activation;
//! the output layer is always affine. Weights are stored with shape
//! `(layer_sizes[i + 1], layer_sizes[i])`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    /// ReLU uses subgradient 0 at `z == 0`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

/// Parameters of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradient (or any tensor) with the same shapes as an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `inputs[i]` is the input to layer `i`; the last entry is the network output.
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.inputs.last().expect("trace always holds the input")
    }
}

impl Mlp {
    /// Scaled-uniform initialization: weights from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
    /// zero biases. Every hidden layer uses `activation`.
    pub fn init(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "an MLP needs at least an input and an output size".into(),
            ));
        }
        if layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("layer sizes must be positive".into()));
        }
        let mut rng = seeding::rng(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new(-bound, bound).expect("bound is positive and finite");
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| dist.sample(&mut rng));
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activations: vec![activation; layer_sizes.len() - 2],
            weights,
            biases,
        })
    }

    /// Builds a network from explicit parameters, validating shapes and finiteness.
    pub fn from_parts(
        activations: Vec<Activation>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::InvalidArgument(
                "weights and biases must be non-empty and equal in count".into(),
            ));
        }
        if activations.len() + 1 != weights.len() {
            return Err(Error::dim(
                "hidden activation count",
                weights.len() - 1,
                activations.len(),
            ));
        }
        let mut layer_sizes = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            let fan_in = *layer_sizes.last().unwrap();
            if w.ncols() != fan_in {
                return Err(Error::dim("weight columns", fan_in, w.ncols()));
            }
            if b.len() != w.nrows() {
                return Err(Error::dim("bias length", w.nrows(), b.len()));
            }
            if w.nrows() == 0 {
                return Err(Error::InvalidArgument("layer sizes must be positive".into()));
            }
            layer_sizes.push(w.nrows());
        }
        let mlp = Self {
            layer_sizes,
            activations,
            weights,
            biases,
        };
        if !mlp.is_finite() {
            return Err(Error::Numerical("parameters must be finite".into()));
        }
        Ok(mlp)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        self.activations
            .get(layer)
            .copied()
            .unwrap_or(Activation::Identity)
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameters flattened layer by layer: row-major weights, then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim("flat parameter vector", self.num_params(), flat.len()));
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::dim("mlp input", self.input_dim(), input.len()));
        }
        let mut x = Array1::from(input.to_vec());
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let act = self.activation_of(i);
            let mut z = w.dot(&x);
            z += b;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        Ok(x.to_vec())
    }

    /// Batched forward pass; rows of `inputs` are samples.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::dim("mlp batch input", self.input_dim(), inputs.ncols()));
        }
        let mut x = inputs.to_owned();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let act = self.activation_of(i);
            let mut z = x.dot(&w.t());
            z += b;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        Ok(x)
    }

    /// Forward pass that records what backpropagation needs.
    pub fn forward_trace(&self, inputs: ArrayView2<'_, f64>) -> Result<ForwardTrace> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::dim("mlp batch input", self.input_dim(), inputs.ncols()));
        }
        let mut layer_inputs = vec![inputs.to_owned()];
        let mut pre = Vec::with_capacity(self.num_layers());
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let act = self.activation_of(i);
            let mut z = layer_inputs[i].dot(&w.t());
            z += b;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLayer { layer: i });
            }
            let y = z.mapv(|v| act.apply(v));
            pre.push(z);
            layer_inputs.push(y);
        }
        Ok(ForwardTrace {
            inputs: layer_inputs,
            pre_activations: pre,
        })
    }

    /// Backpropagates `output_grad` through a recorded trace. The returned parameter
    /// gradient is summed over the batch rows; the input gradient is per row.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace,
        output_grad: ArrayView2<'_, f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        let out = trace.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::dim(
                "output gradient rows*cols",
                out.len(),
                output_grad.len(),
            ));
        }
        let n = self.num_layers();
        let mut grad_w = Vec::with_capacity(n);
        let mut grad_b = Vec::with_capacity(n);
        let mut delta = output_grad.to_owned();
        for i in (0..n).rev() {
            let act = self.activation_of(i);
            let z = &trace.pre_activations[i];
            let y = &trace.inputs[i + 1];
            ndarray::Zip::from(&mut delta)
                .and(z)
                .and(y)
                .for_each(|d, &z, &y| *d *= act.derivative(z, y));
            let gw = delta.t().dot(&trace.inputs[i]);
            let gb = delta.sum_axis(Axis(0));
            let next = delta.dot(&self.weights[i]);
            if gw.iter().chain(gb.iter()).chain(next.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLayer { layer: i });
            }
            grad_w.push(gw);
            grad_b.push(gb);
            delta = next;
        }
        grad_w.reverse();
        grad_b.reverse();
        Ok((
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
            delta,
        ))
    }

    /// Gradient of `<output_grad, forward(input)>` with respect to every parameter and
    /// the input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if input.len() != self.input_dim() {
            return Err(Error::dim("mlp input", self.input_dim(), input.len()));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::dim("mlp output gradient", self.output_dim(), output_grad.len()));
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        let g = ArrayView2::from_shape((1, output_grad.len()), output_grad).expect("row view");
        let trace = self.forward_trace(x)?;
        let (grads, input_grad) = self.backward_trace(&trace, g)?;
        Ok((grads, input_grad.row(0).to_vec()))
    }

    /// Batched backward pass from raw inputs.
    pub fn backward_batch(
        &self,
        inputs: ArrayView2<'_, f64>,
        output_grad: ArrayView2<'_, f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        let trace = self.forward_trace(inputs)?;
        self.backward_trace(&trace, output_grad)
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: mlp.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn matches_shape(&self, mlp: &Mlp) -> bool {
        self.weights.len() == mlp.weights.len()
            && self
                .weights
                .iter()
                .zip(&mlp.weights)
                .all(|(g, w)| g.dim() == w.dim())
            && self
                .biases
                .iter()
                .zip(&mlp.biases)
                .all(|(g, b)| g.len() == b.len())
    }

    /// Same ordering as [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

/// Mean squared error `mean_rows(½‖pred − target‖²)` and its gradient with respect to
/// `pred` (already divided by the batch size).
pub fn half_squared_error(
    pred: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
) -> (f64, Array2<f64>) {
    let n = pred.nrows().max(1) as f64;
    let diff = &pred - &target;
    let loss = diff.iter().map(|d| 0.5 * d * d).sum::<f64>() / n;
    (loss, diff / n)
}
