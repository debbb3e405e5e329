//! A small fully-connected value approximator with rectified-linear hidden
//! layers, plain backpropagation and SGD-with-momentum updates. Everything
//! runs in f64 on a single thread so that training is bitwise reproducible
//! under a fixed seed.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    /// Weights, shape (out, in).
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Feed-forward network mapping feature vectors to one value per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    pub(crate) layers: Vec<Dense>,
}

/// Per-layer parameter gradients, same shapes as the layers.
pub(crate) struct Grads {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl Mlp {
    /// Uniform Kaiming-style init: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// zero biases. Draw order is fixed, so a seeded generator yields
    /// identical networks.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.random_range(-limit..limit)
            });
            layers.push(Dense { w, b: Array1::zeros(fan_out) });
        }
        Self { dims: dims.to_vec(), layers }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Batch forward pass; `x` has shape (batch, input_len).
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.w.t()) + &layer.b;
            if i + 1 < self.layers.len() {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Values for a single observation.
    pub fn values(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_len());
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).unwrap();
        self.forward(&x).row(0).to_vec()
    }

    /// Forward pass keeping every layer activation for backprop. The first
    /// element is the input itself; the last is the network output.
    fn forward_cached(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations.last().unwrap().dot(&layer.w.t()) + &layer.b;
            if i + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        activations
    }

    /// Mean-squared error between the value picked by `actions` and
    /// `targets`, plus its parameter gradients.
    ///
    /// loss = (1/B) * sum_i (out[i, actions[i]] - targets[i])^2
    pub(crate) fn selected_mse_and_grads(
        &self,
        x: &Array2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> (f64, Grads) {
        let batch = x.nrows();
        debug_assert_eq!(actions.len(), batch);
        debug_assert_eq!(targets.len(), batch);
        let activations = self.forward_cached(x);
        let output = activations.last().unwrap();

        let mut loss = 0.0;
        let mut delta = Array2::<f64>::zeros(output.raw_dim());
        for i in 0..batch {
            let diff = output[(i, actions[i])] - targets[i];
            loss += diff * diff;
            delta[(i, actions[i])] = 2.0 * diff / batch as f64;
        }
        loss /= batch as f64;

        let mut grad_w = vec![Array2::zeros((0, 0)); self.layers.len()];
        let mut grad_b = vec![Array1::zeros(0); self.layers.len()];
        let mut grad_out = delta;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &activations[i];
            grad_w[i] = grad_out.t().dot(input);
            grad_b[i] = grad_out.sum_axis(Axis(0));
            if i > 0 {
                let mut upstream = grad_out.dot(&layer.w);
                // relu subgradient: the cached activation is already rectified
                upstream.zip_mut_with(input, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                grad_out = upstream;
            }
        }
        (loss, Grads { w: grad_w, b: grad_b })
    }

    /// The loss of `selected_mse_and_grads` without gradients.
    #[cfg(test)]
    pub(crate) fn selected_mse(&self, x: &Array2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
        let output = self.forward(x);
        let batch = x.nrows();
        let mut loss = 0.0;
        for i in 0..batch {
            let diff = output[(i, actions[i])] - targets[i];
            loss += diff * diff;
        }
        loss / batch as f64
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters flattened in a fixed order (per layer: weights
    /// row-major, then biases).
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            flat.extend(layer.w.iter());
            flat.extend(layer.b.iter());
        }
        flat
    }

    /// Inverse of [`flatten_params`].
    pub fn assign_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.w.iter_mut() {
                *w = flat[offset];
                offset += 1;
            }
            for b in layer.b.iter_mut() {
                *b = flat[offset];
                offset += 1;
            }
        }
    }
}

/// Stochastic gradient descent with classical momentum:
/// `v = momentum * v + g; p -= lr * v`.
pub(crate) struct SgdMomentum {
    lr: f64,
    momentum: f64,
    vel_w: Vec<Array2<f64>>,
    vel_b: Vec<Array1<f64>>,
}

impl SgdMomentum {
    pub fn new(net: &Mlp, lr: f64, momentum: f64) -> Self {
        Self {
            lr,
            momentum,
            vel_w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            vel_b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn apply(&mut self, net: &mut Mlp, grads: &Grads) {
        for (i, layer) in net.layers.iter_mut().enumerate() {
            self.vel_w[i].zip_mut_with(&grads.w[i], |v, &g| *v = self.momentum * *v + g);
            self.vel_b[i].zip_mut_with(&grads.b[i], |v, &g| *v = self.momentum * *v + g);
            layer.w.zip_mut_with(&self.vel_w[i], |p, &v| *p -= self.lr * v);
            layer.b.zip_mut_with(&self.vel_b[i], |p, &v| *p -= self.lr * v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&[4, 8, 5], &mut rng);
        assert_eq!(net.num_params(), 4 * 8 + 8 + 8 * 5 + 5);
        let out = net.values(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|v| v.is_finite()));
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let net2 = Mlp::new(&[4, 8, 5], &mut rng2);
        assert_eq!(net, net2);
    }

    #[test]
    fn flatten_assign_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 6, 2], &mut rng);
        let flat = net.flatten_params();
        let mut other = Mlp::new(&[3, 6, 2], &mut rng);
        other.assign_params(&flat);
        assert_eq!(net, other);
    }

    /// Analytic gradients match central finite differences to 1e-4
    /// relative on a fixed random batch.
    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::new(&[5, 12, 5], &mut rng);
        let batch = 6;
        let x = Array2::from_shape_fn((batch, 5), |_| rng.random_range(-1.0..1.0));
        let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..5)).collect();
        let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-1.0..1.0)).collect();

        let (_, grads) = net.selected_mse_and_grads(&x, &actions, &targets);
        let mut flat_grads: Vec<f64> = Vec::new();
        for i in 0..net.layers.len() {
            flat_grads.extend(grads.w[i].iter());
            flat_grads.extend(grads.b[i].iter());
        }

        let params = net.flatten_params();
        let h = 1e-6;
        for (idx, &analytic) in flat_grads.iter().enumerate() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let mut p = params.clone();
            p[idx] += h;
            plus.assign_params(&p);
            p[idx] -= 2.0 * h;
            minus.assign_params(&p);
            let numeric = (plus.selected_mse(&x, &actions, &targets)
                - minus.selected_mse(&x, &actions, &targets))
                / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic - numeric).abs() / denom < 1e-4,
                "param {idx}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn sgd_momentum_reduces_loss_on_fixed_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[4, 16, 3], &mut rng);
        let x = Array2::from_shape_fn((8, 4), |_| rng.random_range(-1.0..1.0));
        let actions: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let targets: Vec<f64> = (0..8).map(|i| (i as f64 / 8.0) - 0.5).collect();
        let mut opt = SgdMomentum::new(&net, 0.01, 0.9);
        let initial = net.selected_mse(&x, &actions, &targets);
        for _ in 0..200 {
            let (_, grads) = net.selected_mse_and_grads(&x, &actions, &targets);
            opt.apply(&mut net, &grads);
        }
        let trained = net.selected_mse(&x, &actions, &targets);
        assert!(trained < initial * 0.1, "loss {initial} -> {trained}");
    }
}
