use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// Fully connected network with ReLU hidden layers.
///
/// Parameters live in one flat vector. Layer `l` occupies
/// `offsets[l]..offsets[l + 1]`: an `out x in` row-major weight block
/// followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Layer inputs and pre-activations from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` feeds layer `l`; the final entry is the network output.
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("non-empty cache")
    }
}

fn layout(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0];
    for w in sizes.windows(2) {
        let last = *offsets.last().unwrap();
        offsets.push(last + w[0] * w[1] + w[1]);
    }
    offsets
}

impl Mlp {
    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!(
                "network needs at least an input and an output layer, all non-empty; got {sizes:?}"
            )));
        }
        let offsets = layout(sizes);
        Ok(Mlp {
            sizes: sizes.to_vec(),
            output,
            params: vec![0.0; *offsets.last().unwrap()],
            offsets,
        })
    }

    /// Uniform fan-in initialization: every parameter of a layer with `n`
    /// inputs is drawn from `U(-1/sqrt(n), 1/sqrt(n))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, output)?;
        for l in 0..net.layers() {
            let bound = 1.0 / (sizes[l] as f64).sqrt();
            let (a, b) = (net.offsets[l], net.offsets[l + 1]);
            for p in &mut net.params[a..b] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Redraws the last layer's weights and biases from `U(-bound, bound)`.
    pub fn reinit_output_layer<R: Rng + ?Sized>(&mut self, bound: f64, rng: &mut R) {
        let l = self.layers() - 1;
        let (a, b) = (self.offsets[l], self.offsets[l + 1]);
        for p in &mut self.params[a..b] {
            *p = rng.random_range(-bound..=bound);
        }
    }

    pub fn from_params(sizes: &[usize], output: OutputActivation, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes, output)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape {
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
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

    /// Flat index of weight `(row, col)` in layer `l`.
    pub fn weight_index(&self, l: usize, row: usize, col: usize) -> usize {
        self.offsets[l] + row * self.sizes[l] + col
    }

    pub fn bias_index(&self, l: usize, row: usize) -> usize {
        self.offsets[l] + self.sizes[l] * self.sizes[l + 1] + row
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn affine(&self, l: usize, x: &[f64], out: &mut Vec<f64>) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let base = self.offsets[l];
        let w = &self.params[base..base + n_in * n_out];
        let b = &self.params[base + n_in * n_out..base + n_in * n_out + n_out];
        out.clear();
        out.extend(
            w.chunks_exact(n_in)
                .zip(b)
                .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()),
        );
    }

    fn activate(&self, l: usize, z: &[f64]) -> Vec<f64> {
        if l + 1 < self.layers() {
            z.iter().map(|v| v.max(0.0)).collect()
        } else {
            match self.output {
                OutputActivation::Identity => z.to_vec(),
                OutputActivation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for l in 0..self.layers() {
            self.affine(l, &a, &mut z);
            a = self.activate(l, &z);
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers() + 1);
        let mut pre = Vec::with_capacity(self.layers());
        inputs.push(x.to_vec());
        for l in 0..self.layers() {
            let mut z = Vec::new();
            self.affine(l, &inputs[l], &mut z);
            inputs.push(self.activate(l, &z));
            pre.push(z);
        }
        Ok(ForwardCache { inputs, pre })
    }

    /// Reverse pass for the scalar `upstream · output`. Parameter gradients
    /// are accumulated into `grads`; the gradient with respect to the input is
    /// returned.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if grads.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                found: grads.len(),
            });
        }
        self.reverse(cache, upstream, Some(grads))
    }

    /// Like [`Mlp::backward`], with `pre_extra` added to the gradient at the
    /// output layer's pre-activation.
    pub fn backward_with_pre(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        pre_extra: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        if grads.len() != self.params.len() || pre_extra.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.params.len() + self.output_dim(),
                found: grads.len() + pre_extra.len(),
            });
        }
        self.reverse_inner(cache, upstream, Some(pre_extra), Some(grads))
    }

    /// Gradient of `upstream · output` with respect to the input only.
    pub fn input_gradient(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Vec<f64>> {
        self.reverse(cache, upstream, None)
    }

    fn reverse(&self, cache: &ForwardCache, upstream: &[f64], grads: Option<&mut [f64]>) -> Result<Vec<f64>> {
        self.reverse_inner(cache, upstream, None, grads)
    }

    fn reverse_inner(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        pre_extra: Option<&[f64]>,
        mut grads: Option<&mut [f64]>,
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                found: upstream.len(),
            });
        }
        let last = self.layers() - 1;
        let mut delta: Vec<f64> = match self.output {
            OutputActivation::Identity => upstream.to_vec(),
            OutputActivation::Tanh => upstream
                .iter()
                .zip(&cache.inputs[last + 1])
                .map(|(g, y)| g * (1.0 - y * y))
                .collect(),
        };
        if let Some(extra) = pre_extra {
            for (d, e) in delta.iter_mut().zip(extra) {
                *d += e;
            }
        }
        for l in (0..=last).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = self.offsets[l];
            let input = &cache.inputs[l];
            if let Some(grads) = grads.as_deref_mut() {
                let (gw, gb) = grads[base..base + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, &a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            let w = &self.params[base..base + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *p += d * wv;
                }
            }
            if l > 0 {
                for (p, &z) in prev.iter_mut().zip(&cache.pre[l - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        if self.sizes != online.sizes {
            return Err(Error::Architecture {
                expected: self.sizes.clone(),
                found: online.sizes.clone(),
            });
        }
        if tau == 1.0 {
            self.params.copy_from_slice(&online.params);
            return Ok(());
        }
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
