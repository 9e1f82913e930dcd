//! Fully-connected Q-network with manual forward and backward passes.
//!
//! Rectified-linear activation on every layer, including the output. Since
//! rewards are non-positive, the network represents the negated Q-function
//! (a non-negative cost-to-go); [`QNetwork::q_values`] applies the negation.
//! Dropout (inverted scaling) acts on the outputs of all layers except the
//! last, in training mode only.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Forward-pass mode: training applies dropout, evaluation does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Multilayer perceptron with per-layer weights (rows = outputs) and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub dropout_p: f64,
}

/// Layer sizes for a scheduler network: input `M²+M+C`, hidden `2.5M`
/// (rounded to the nearest even integer when fractional), then `M`, then one
/// output per sensor.
pub fn scheduler_layer_sizes(state_dim: usize, clients: usize, sensors: usize) -> Vec<usize> {
    let five_m = 5 * state_dim;
    let hidden = if five_m.is_multiple_of(2) {
        five_m / 2
    } else {
        let lo = five_m / 2;
        if lo.is_multiple_of(2) {
            lo
        } else {
            lo + 1
        }
    };
    vec![
        state_dim * state_dim + state_dim + clients,
        hidden,
        state_dim,
        sensors,
    ]
}

impl QNetwork {
    /// He-uniform weight initialization, seeded by the caller's generator.
    ///
    /// Biases start positive (0.1 hidden, 1.0 output) so every rectifier
    /// begins in its linear region: a dead output unit would read as the
    /// best possible Q-value under the negation convention and the gradient
    /// could never revive it.
    pub fn new<R: Rng + ?Sized>(sizes: Vec<usize>, dropout_p: f64, rng: &mut R) -> Result<Self> {
        Self::validate_sizes(&sizes, dropout_p)?;
        let layers = sizes.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for (l, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                rng.random_range(-limit..limit)
            }));
            let bias = if l + 1 == layers { 1.0 } else { 0.1 };
            biases.push(DVector::from_element(fan_out, bias));
        }
        Ok(Self {
            sizes,
            weights,
            biases,
            dropout_p,
        })
    }

    /// All-zero parameters (outputs are identically zero).
    pub fn zeros(sizes: Vec<usize>, dropout_p: f64) -> Result<Self> {
        Self::validate_sizes(&sizes, dropout_p)?;
        let weights = sizes
            .windows(2)
            .map(|p| DMatrix::zeros(p[1], p[0]))
            .collect();
        let biases = sizes.windows(2).map(|p| DVector::zeros(p[1])).collect();
        Ok(Self {
            sizes,
            weights,
            biases,
            dropout_p,
        })
    }

    pub(crate) fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        dropout_p: f64,
    ) -> Result<Self> {
        Self::validate_sizes(&sizes, dropout_p)?;
        for (i, pair) in sizes.windows(2).enumerate() {
            if weights[i].nrows() != pair[1] || weights[i].ncols() != pair[0] {
                return Err(Error::Config(format!("layer {i} weight shape mismatch")));
            }
            if biases[i].len() != pair[1] {
                return Err(Error::Config(format!("layer {i} bias length mismatch")));
            }
        }
        Ok(Self {
            sizes,
            weights,
            biases,
            dropout_p,
        })
    }

    fn validate_sizes(sizes: &[usize], dropout_p: f64) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(
                "network needs at least two non-empty layers".into(),
            ));
        }
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::Config(format!(
                "dropout probability {dropout_p} outside [0, 1)"
            )));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Whether every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Copy all parameters from another network of identical shape.
    pub fn copy_params_from(&mut self, other: &QNetwork) {
        self.weights.clone_from(&other.weights);
        self.biases.clone_from(&other.biases);
    }

    /// Raw network output for one input. Training mode draws dropout masks
    /// from `rng`; evaluation mode consumes no randomness.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &DVector<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Config(format!(
                "input length {} does not match network input {}",
                input.len(),
                self.input_dim()
            )));
        }
        if input.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("NaN in network input".into()));
        }
        let batch = DMatrix::from_column_slice(input.len(), 1, input.as_slice());
        let cache = self.forward_batch(&batch, mode, rng);
        Ok(cache.activations.last().unwrap().column(0).into_owned())
    }

    /// Q-values for action selection: the negated evaluation-mode output.
    pub fn q_values(&self, input: &DVector<f64>) -> Result<DVector<f64>> {
        let mut rng = NoRandom;
        Ok(-self.forward(input, Mode::Eval, &mut rng)?)
    }

    /// Batched forward pass keeping everything backprop needs.
    pub(crate) fn forward_batch<R: Rng + ?Sized>(
        &self,
        inputs: &DMatrix<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> ForwardCache {
        let layers = self.weights.len();
        let keep = 1.0 - self.dropout_p;
        let mut pre_activations = Vec::with_capacity(layers);
        let mut activations = Vec::with_capacity(layers);
        let mut masks: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(layers);
        let mut current = inputs.clone();
        for l in 0..layers {
            let mut z = &self.weights[l] * &current;
            for mut col in z.column_iter_mut() {
                col += &self.biases[l];
            }
            let mut act = z.map(|v| v.max(0.0));
            let mask = if mode == Mode::Train && l + 1 < layers && self.dropout_p > 0.0 {
                let m = DMatrix::from_fn(act.nrows(), act.ncols(), |_, _| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                act.component_mul_assign(&m);
                Some(m)
            } else {
                None
            };
            pre_activations.push(z);
            activations.push(act.clone());
            masks.push(mask);
            current = act;
        }
        ForwardCache {
            inputs: inputs.clone(),
            pre_activations,
            activations,
            masks,
        }
    }
}

/// No-op generator for paths that must not consume randomness.
struct NoRandom;

impl rand::RngCore for NoRandom {
    fn next_u32(&mut self) -> u32 {
        unreachable!("evaluation mode must not draw randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("evaluation mode must not draw randomness")
    }
    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("evaluation mode must not draw randomness")
    }
}

/// Intermediate values of one batched forward pass.
pub(crate) struct ForwardCache {
    pub inputs: DMatrix<f64>,
    pub pre_activations: Vec<DMatrix<f64>>,
    pub activations: Vec<DMatrix<f64>>,
    pub masks: Vec<Option<DMatrix<f64>>>,
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Mean-squared-error loss on the selected action outputs, with gradients.
///
/// `labels[b]` is the regression target for raw output `actions[b]` of
/// sample `b`; all other outputs carry no gradient. Returns the loss and the
/// parameter gradients of its mean over the batch.
pub fn loss_and_gradients<R: Rng + ?Sized>(
    net: &QNetwork,
    inputs: &DMatrix<f64>,
    actions: &[usize],
    labels: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    let batch = inputs.ncols();
    if batch == 0 || actions.len() != batch || labels.len() != batch {
        return Err(Error::InvalidArgument(
            "batch, actions and labels must align".into(),
        ));
    }
    if inputs.nrows() != net.input_dim() {
        return Err(Error::Config("batch input dimension mismatch".into()));
    }
    if actions.iter().any(|a| *a >= net.output_dim()) {
        return Err(Error::InvalidArgument(
            "action index outside network output".into(),
        ));
    }
    let cache = net.forward_batch(inputs, mode, rng);
    let output = cache.activations.last().unwrap();

    let mut loss = 0.0;
    let mut delta = DMatrix::zeros(output.nrows(), batch);
    for b in 0..batch {
        let diff = output[(actions[b], b)] - labels[b];
        loss += diff * diff;
        delta[(actions[b], b)] = 2.0 * diff / batch as f64;
    }
    loss /= batch as f64;

    let layers = net.weights.len();
    let mut grad_w = vec![DMatrix::zeros(0, 0); layers];
    let mut grad_b = vec![DVector::zeros(0); layers];
    let mut upstream = delta;
    for l in (0..layers).rev() {
        if let Some(mask) = &cache.masks[l] {
            upstream.component_mul_assign(mask);
        }
        let relu_grad = cache.pre_activations[l].map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        upstream.component_mul_assign(&relu_grad);
        let below = if l == 0 {
            &cache.inputs
        } else {
            &cache.activations[l - 1]
        };
        grad_w[l] = &upstream * below.transpose();
        grad_b[l] = DVector::from_fn(upstream.nrows(), |i, _| upstream.row(i).sum());
        if l > 0 {
            upstream = net.weights[l].transpose() * upstream;
        }
    }
    Ok((
        loss,
        Gradients {
            weights: grad_w,
            biases: grad_b,
        },
    ))
}

/// Adam optimizer with bias correction (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m_weights: Vec<DMatrix<f64>>,
    v_weights: Vec<DMatrix<f64>>,
    m_biases: Vec<DVector<f64>>,
    v_biases: Vec<DVector<f64>>,
}

impl Adam {
    pub fn new(net: &QNetwork, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_weights: net
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            v_weights: net
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            m_biases: net.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
            v_biases: net.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    /// One update of every parameter from the given gradients.
    pub fn apply(&mut self, net: &mut QNetwork, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for l in 0..net.weights.len() {
            Self::update_matrix(
                &mut net.weights[l],
                &grads.weights[l],
                &mut self.m_weights[l],
                &mut self.v_weights[l],
                self.beta1,
                self.beta2,
                self.epsilon,
                self.learning_rate,
                bc1,
                bc2,
            );
            Self::update_vector(
                &mut net.biases[l],
                &grads.biases[l],
                &mut self.m_biases[l],
                &mut self.v_biases[l],
                self.beta1,
                self.beta2,
                self.epsilon,
                self.learning_rate,
                bc1,
                bc2,
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_matrix(
        param: &mut DMatrix<f64>,
        grad: &DMatrix<f64>,
        m: &mut DMatrix<f64>,
        v: &mut DMatrix<f64>,
        beta1: f64,
        beta2: f64,
        eps: f64,
        lr: f64,
        bc1: f64,
        bc2: f64,
    ) {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_vector(
        param: &mut DVector<f64>,
        grad: &DVector<f64>,
        m: &mut DVector<f64>,
        v: &mut DVector<f64>,
        beta1: f64,
        beta2: f64,
        eps: f64,
        lr: f64,
        bc1: f64,
        bc2: f64,
    ) {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
