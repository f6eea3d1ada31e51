use super::DqnError;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => libm::tanh(z),
            Activation::Linear => z,
        }
    }

    /// Derivative in terms of the pre-activation `z` and output `y`.
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
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    fn forward_into(&self, x: &[f64], z: &mut Vec<f64>, y: &mut Vec<f64>) {
        z.clear();
        y.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            let pre = row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi);
            z.push(pre);
            y.push(self.activation.apply(pre));
        }
    }
}

/// Feed-forward action-value approximator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    layers: Vec<DenseLayer>,
}

/// Parameter-shaped buffer: one `(weights, biases)` pair per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }
}

impl QNetwork {
    /// Glorot-uniform weights, zero biases. `hidden` applies to every layer
    /// but the last, which is linear.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Result<Self, DqnError> {
        let mut net = QNetwork::zeros(sizes, hidden)?;
        for layer in &mut net.layers {
            let limit = libm::sqrt(6.0 / (layer.inputs + layer.outputs) as f64);
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self, DqnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(DqnError::BadArchitecture);
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, pair)| DenseLayer {
                inputs: pair[0],
                outputs: pair[1],
                weights: vec![0.0; pair[0] * pair[1]],
                biases: vec![0.0; pair[1]],
                activation: if i == last { Activation::Linear } else { hidden },
            })
            .collect();
        Ok(QNetwork { layers })
    }

    /// Build from explicit layers, checking that consecutive shapes chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, DqnError> {
        if layers.is_empty() {
            return Err(DqnError::BadArchitecture);
        }
        for l in &layers {
            if l.inputs == 0
                || l.outputs == 0
                || l.weights.len() != l.inputs * l.outputs
                || l.biases.len() != l.outputs
            {
                return Err(DqnError::BadArchitecture);
            }
        }
        if layers.windows(2).any(|p| p[0].outputs != p[1].inputs) {
            return Err(DqnError::BadArchitecture);
        }
        Ok(QNetwork { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, DqnError> {
        if input.len() != self.input_len() {
            return Err(DqnError::DimensionMismatch {
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut x = input.to_vec();
        let (mut z, mut y) = (Vec::new(), Vec::new());
        for layer in &self.layers {
            layer.forward_into(&x, &mut z, &mut y);
            core::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    /// Mean squared error over the batch, counting only each sample's taken
    /// action, together with its gradient.
    pub fn loss_and_gradients(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Gradients), DqnError> {
        let mut grads = Gradients::zeros_like(self);
        let n = inputs.len();
        if n == 0 {
            return Err(DqnError::EmptyBatch);
        }
        let depth = self.layers.len();
        let mut zs: Vec<Vec<f64>> = vec![Vec::new(); depth];
        let mut ys: Vec<Vec<f64>> = vec![Vec::new(); depth];
        let mut loss = 0.0;
        for ((input, &action), &target) in inputs.iter().zip(actions).zip(targets) {
            if input.len() != self.input_len() {
                return Err(DqnError::DimensionMismatch {
                    expected: self.input_len(),
                    got: input.len(),
                });
            }
            if action >= self.output_len() {
                return Err(DqnError::ActionOutOfRange(action));
            }
            for k in 0..depth {
                let (before, after) = ys.split_at_mut(k);
                let x: &[f64] = if k == 0 { input } else { &before[k - 1] };
                self.layers[k].forward_into(x, &mut zs[k], &mut after[0]);
            }
            let q = ys[depth - 1][action];
            let err = q - target;
            loss += err * err;

            // delta holds dL/dz for the current layer
            let out = &self.layers[depth - 1];
            let mut delta = vec![0.0; out.outputs];
            delta[action] = 2.0 * err / n as f64
                * out.activation.derivative(zs[depth - 1][action], ys[depth - 1][action]);
            for k in (0..depth).rev() {
                let layer = &self.layers[k];
                let x: &[f64] = if k == 0 { input } else { &ys[k - 1] };
                let (gw, gb) = &mut grads.layers[k];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
                if k > 0 {
                    let below = &self.layers[k - 1];
                    let mut next = vec![0.0; layer.inputs];
                    for (o, d) in delta.iter().enumerate() {
                        if *d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (acc, w) in next.iter_mut().zip(row) {
                            *acc += d * w;
                        }
                    }
                    for (i, acc) in next.iter_mut().enumerate() {
                        *acc *= below.activation.derivative(zs[k - 1][i], ys[k - 1][i]);
                    }
                    delta = next;
                }
            }
        }
        Ok((loss / n as f64, grads))
    }
}
