//! Function approximation from scratch: MLPs with exact reverse-mode
//! gradients, Adam, replay storage and checkpoint files.

mod adam;
mod checkpoint;
mod mlp;
mod replay;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, Manifest, NetworkEntry, FORMAT_VERSION};
pub use mlp::{ForwardCache, Mlp, OutputActivation};
pub use replay::{Action, ReplayBuffer, SharedReplayBuffer, Tag, Transition};

/// An MLP with its optimizer.
#[derive(Debug, Clone)]
pub struct Trainable {
    pub net: Mlp,
    pub opt: Adam,
    grads: Vec<f64>,
}

impl Trainable {
    pub fn new(net: Mlp, lr: f64) -> Self {
        let n = net.num_params();
        Trainable {
            net,
            opt: Adam::new(n, lr),
            grads: vec![0.0; n],
        }
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Backpropagates `upstream` through a cached pass into the gradient
    /// accumulator, returning the input gradient.
    pub fn accumulate(&mut self, cache: &ForwardCache, upstream: &[f64]) -> crate::Result<Vec<f64>> {
        self.net.backward(cache, upstream, &mut self.grads)
    }

    pub fn accumulate_with_pre(&mut self, cache: &ForwardCache, upstream: &[f64], pre_extra: &[f64]) -> crate::Result<Vec<f64>> {
        self.net.backward_with_pre(cache, upstream, pre_extra, &mut self.grads)
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn apply(&mut self) -> crate::Result<()> {
        self.opt.step(self.net.params_mut(), &self.grads)
    }
}
