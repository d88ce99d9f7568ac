//! Small dense networks with in-module reverse-mode differentiation, plus a
//! momentum-free adaptive optimizer. Hidden layers use ELU (smooth, so
//! finite-difference gradient checks pass at tight tolerance); the output
//! layer is linear.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn elu_grad_from_value(y: f64) -> f64 {
    // derivative expressed through the activation value: 1 for y > 0,
    // else e^x = y + 1
    if y > 0.0 {
        1.0
    } else {
        y + 1.0
    }
}

/// Fully connected network: `sizes` = [input, hidden..., output].
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Per-layer activations kept for the backward pass. `acts[0]` is the input
/// batch; `acts[i]` the output of layer i−1 (post-ELU for hidden layers).
pub struct ForwardCache {
    acts: Vec<Array2<f64>>,
}

/// Parameter-shaped gradients.
#[derive(Debug, Clone)]
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Grads {
            weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.weights {
            *a *= s;
        }
        for a in &mut self.biases {
            *a *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0f64, |m, &g| m.max(g.abs()))
    }
}

impl Mlp {
    /// Uniform init scaled by 1/sqrt(fan_in); biases start at zero.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.gen_range(-bound..bound)
            });
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Batch forward pass (rows are samples).
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_cache(x).0.last().unwrap().clone()
    }

    fn forward_cache(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, ()) {
        let mut acts = vec![x.to_owned()];
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts.last().unwrap().dot(w) + b;
            if i + 1 < self.n_layers() {
                z.mapv_inplace(elu);
            }
            acts.push(z);
        }
        (acts, ())
    }

    /// Forward pass that retains activations for `backward`.
    pub fn forward_train(&self, x: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        let (acts, ()) = self.forward_cache(x);
        (acts.last().unwrap().clone(), ForwardCache { acts })
    }

    /// Reverse-mode pass: given dL/d(output), produce parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Grads {
        let mut grads = Grads::zeros_like(self);
        let mut delta = grad_out.to_owned();
        for layer in (0..self.n_layers()).rev() {
            let input = &cache.acts[layer];
            grads.weights[layer] = input.t().dot(&delta);
            grads.biases[layer] = delta.sum_axis(Axis(0));
            if layer > 0 {
                delta = delta.dot(&self.weights[layer].t());
                // cached activation of the previous hidden layer is post-ELU
                delta.zip_mut_with(&cache.acts[layer], |d, &a| {
                    *d *= elu_grad_from_value(a)
                });
            }
        }
        grads
    }

    /// Single-sample convenience forward.
    pub fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let batch = x.insert_axis(Axis(0));
        self.forward(batch).index_axis(Axis(0), 0).to_owned()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flat parameter vector (weights then bias per layer, row-major).
    pub fn param_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend(w.iter());
            v.extend(b.iter());
        }
        v
    }

    pub fn set_param_vec(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.param_count(), "parameter vector length");
        let mut it = v.iter();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for x in w.iter_mut() {
                *x = *it.next().unwrap();
            }
            for x in b.iter_mut() {
                *x = *it.next().unwrap();
            }
        }
    }

    pub fn apply_grads(&mut self, grads: &Grads, scale: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(scale, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(scale, g);
        }
    }
}

/// RMSProp: momentum-free adaptive step sizes.
pub struct RmsProp {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    sq_w: Vec<Array2<f64>>,
    sq_b: Vec<Array1<f64>>,
}

impl RmsProp {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        RmsProp {
            lr,
            rho: 0.99,
            eps: 1e-8,
            sq_w: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            sq_b: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        let (rho, eps, lr) = (self.rho, self.eps, self.lr);
        for ((w, g), sq) in net.weights.iter_mut().zip(&grads.weights).zip(&mut self.sq_w) {
            sq.zip_mut_with(g, |s, &gv| *s = rho * *s + (1.0 - rho) * gv * gv);
            azip_update(w, g, sq, lr, eps);
        }
        for ((b, g), sq) in net.biases.iter_mut().zip(&grads.biases).zip(&mut self.sq_b) {
            sq.zip_mut_with(g, |s, &gv| *s = rho * *s + (1.0 - rho) * gv * gv);
            for ((p, &gv), &sv) in b.iter_mut().zip(g.iter()).zip(sq.iter()) {
                *p -= lr * gv / (sv.sqrt() + eps);
            }
        }
    }
}

fn azip_update(w: &mut Array2<f64>, g: &Array2<f64>, sq: &Array2<f64>, lr: f64, eps: f64) {
    for ((p, &gv), &sv) in w.iter_mut().zip(g.iter()).zip(sq.iter()) {
        *p -= lr * gv / (sv.sqrt() + eps);
    }
}

/// Numerically stable log-softmax of one logit row.
pub fn log_softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let shifted = logits.mapv(|v| v - max);
    let log_z = shifted.mapv(f64::exp).sum().ln();
    shifted - log_z
}

pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    log_softmax(logits).mapv(f64::exp)
}

/// Entropy of the softmax distribution, in nats.
pub fn softmax_entropy(logits: ArrayView1<f64>) -> f64 {
    let logp = log_softmax(logits);
    -logp.iter().map(|&lp| lp.exp() * lp).sum::<f64>()
}

/// Sample an index from the softmax distribution.
pub fn sample_categorical(logits: ArrayView1<f64>, rng: &mut impl Rng) -> usize {
    let probs = softmax(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
