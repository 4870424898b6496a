use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::gemm;
use super::{Matrix, NnError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerLayout {
    inputs: usize,
    outputs: usize,
    weight_offset: usize,
    bias_offset: usize,
    activation: Activation,
}

/// Fully connected feed-forward network with rectifier hidden layers and a
/// linear output layer.
///
/// All parameters live in one flat buffer: for each layer, the row-major
/// `outputs x inputs` weight matrix followed by the bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    widths: Vec<usize>,
    layers: Vec<LayerLayout>,
    params: Vec<f64>,
}

/// Gradient buffer congruent with a [`Network`]'s flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    pub values: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            values: vec![0.0; net.num_params()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Everything `backward` needs from a `forward` call.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    widths: Vec<usize>,
    /// Input to each layer (`inputs[0]` is the network input).
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pre_activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs[0].rows()
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }

    /// Hash of the sign pattern of every rectifier pre-activation. Two
    /// evaluations with equal patterns lie on the same linear piece.
    pub fn activation_pattern(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (i, z) in self.pre_activations.iter().enumerate() {
            if i + 1 == self.pre_activations.len() {
                break;
            }
            for v in z.data() {
                (*v > 0.0).hash(&mut h);
            }
        }
        h.finish()
    }
}

impl Network {
    /// Zero-initialized network with the given layer widths
    /// (`[input, hidden.., output]`).
    pub fn zeros(widths: &[usize]) -> Result<Self, NnError> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(NnError::Shape(format!("invalid layer widths {widths:?}")));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        let mut offset = 0;
        for (i, pair) in widths.windows(2).enumerate() {
            let (inputs, outputs) = (pair[0], pair[1]);
            let activation = if i + 2 == widths.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(LayerLayout {
                inputs,
                outputs,
                weight_offset: offset,
                bias_offset: offset + inputs * outputs,
                activation,
            });
            offset += inputs * outputs + outputs;
        }
        Ok(Self {
            widths: widths.to_vec(),
            layers,
            params: vec![0.0; offset],
        })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`;
    /// the output layer is additionally multiplied by `output_scale`.
    pub fn init<R: Rng + ?Sized>(widths: &[usize], output_scale: f64, rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::zeros(widths)?;
        let last = net.layers.len() - 1;
        for (i, l) in net.layers.clone().iter().enumerate() {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            let scale = if i == last { output_scale } else { 1.0 };
            for p in &mut net.params[l.weight_offset..l.bias_offset + l.outputs] {
                *p = rng.random_range(-bound..bound) * scale;
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.params.len() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Named views of each weight and bias tensor: `(name, shape, range)`.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>, std::ops::Range<usize>)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            out.push((
                format!("l{i}.weight"),
                vec![l.outputs, l.inputs],
                l.weight_offset..l.bias_offset,
            ));
            out.push((
                format!("l{i}.bias"),
                vec![l.outputs],
                l.bias_offset..l.bias_offset + l.outputs,
            ));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache), NnError> {
        if input.cols() != self.input_width() {
            return Err(NnError::Shape(format!(
                "network expects input width {}, got {}",
                self.input_width(),
                input.cols()
            )));
        }
        let batch = input.rows();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for l in &self.layers {
            let z = self.affine(l, &x);
            let next = match l.activation {
                Activation::Relu => {
                    let mut a = z.clone();
                    a.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                    a
                }
                Activation::Identity => z.clone(),
            };
            inputs.push(x);
            pre_activations.push(z);
            x = next;
            debug_assert_eq!(x.rows(), batch);
        }
        Ok((
            x,
            ForwardCache {
                widths: self.widths.clone(),
                inputs,
                pre_activations,
            },
        ))
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix, NnError> {
        if input.cols() != self.input_width() {
            return Err(NnError::Shape(format!(
                "network expects input width {}, got {}",
                self.input_width(),
                input.cols()
            )));
        }
        let mut x = self.affine(&self.layers[0], input);
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                x = self.affine(l, &x);
            }
            if l.activation == Activation::Relu {
                x.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(x)
    }

    fn affine(&self, l: &LayerLayout, x: &Matrix) -> Matrix {
        let batch = x.rows();
        let bias = &self.params[l.bias_offset..l.bias_offset + l.outputs];
        let mut z = Matrix::zeros(batch, l.outputs);
        for i in 0..batch {
            z.row_mut(i).copy_from_slice(bias);
        }
        let w = &self.params[l.weight_offset..l.bias_offset];
        // z (batch x out) += x (batch x in) * w^T (in x out)
        gemm(
            batch,
            l.inputs,
            l.outputs,
            1.0,
            x.data(),
            (l.inputs as isize, 1),
            w,
            (1, l.inputs as isize),
            1.0,
            z.data_mut(),
            (l.outputs as isize, 1),
        );
        z
    }

    fn check_cache(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<(), NnError> {
        if cache.widths != self.widths || cache.inputs.len() != self.layers.len() {
            return Err(NnError::Shape(format!(
                "cache from a {:?} network used with a {:?} network",
                cache.widths, self.widths
            )));
        }
        let expected = (cache.batch_size(), self.output_width());
        if output_gradient.shape() != expected {
            return Err(NnError::Shape(format!(
                "output gradient is {:?}, expected {expected:?}",
                output_gradient.shape()
            )));
        }
        Ok(())
    }

    /// Reverse-mode gradients of `sum(output .* output_gradient)` with
    /// respect to every parameter and to the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &Matrix,
    ) -> Result<(GradientBundle, Matrix), NnError> {
        let mut grads = GradientBundle::zeros_like(self);
        let dx = self.backward_impl(cache, output_gradient, Some(&mut grads))?;
        Ok((grads, dx))
    }

    /// Input gradient only; skips the weight-gradient products.
    pub fn backward_input(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<Matrix, NnError> {
        self.backward_impl(cache, output_gradient, None)
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        output_gradient: &Matrix,
        mut grads: Option<&mut GradientBundle>,
    ) -> Result<Matrix, NnError> {
        self.check_cache(cache, output_gradient)?;
        let batch = cache.batch_size();
        let mut delta = output_gradient.clone();
        for (idx, l) in self.layers.iter().enumerate().rev() {
            if l.activation == Activation::Relu {
                let z = &cache.pre_activations[idx];
                for (d, &zv) in delta.data_mut().iter_mut().zip(z.data()) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &cache.inputs[idx];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = g.values[l.weight_offset..l.bias_offset + l.outputs].split_at_mut(l.inputs * l.outputs);
                // dW (out x in) = delta^T (out x batch) * x (batch x in)
                gemm(
                    l.outputs,
                    batch,
                    l.inputs,
                    1.0,
                    delta.data(),
                    (1, l.outputs as isize),
                    x.data(),
                    (l.inputs as isize, 1),
                    0.0,
                    gw,
                    (l.inputs as isize, 1),
                );
                for i in 0..batch {
                    for (b, d) in gb.iter_mut().zip(delta.row(i)) {
                        *b += d;
                    }
                }
            }
            // dx (batch x in) = delta (batch x out) * W (out x in)
            let w = &self.params[l.weight_offset..l.bias_offset];
            let mut dx = Matrix::zeros(batch, l.inputs);
            gemm(
                batch,
                l.outputs,
                l.inputs,
                1.0,
                delta.data(),
                (l.outputs as isize, 1),
                w,
                (l.inputs as isize, 1),
                0.0,
                dx.data_mut(),
                (l.inputs as isize, 1),
            );
            delta = dx;
        }
        Ok(delta)
    }

    /// `self <- tau * self + (1 - tau) * online`, elementwise.
    pub fn blend_from(&mut self, online: &Network, tau: f64) -> Result<(), NnError> {
        if online.widths != self.widths {
            return Err(NnError::Shape(format!(
                "cannot blend {:?} into {:?}",
                online.widths, self.widths
            )));
        }
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * *t + (1.0 - tau) * o;
        }
        Ok(())
    }
}
