//! Minimal neural function approximation: fully connected networks with
//! rectifier hidden layers, analytic backpropagation, Adam, and soft target
//! copies.
//!
//! Checkpoint layout (all integers and reals little-endian): an 8-byte magic
//! `TGRLNET1`, a u64 network count, then per network a u64 layer-size count
//! followed by the sizes as u64, then every parameter as f64 in layer order
//! (weight matrix row-major, then biases).

use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::NnError;

const CHECKPOINT_MAGIC: &[u8; 8] = b"TGRLNET1";

/// Anything that maps an encoded history to one value per action.
pub trait QFunction {
    fn q_values(&self, input: &[f64]) -> Vec<f64>;
    fn num_actions(&self) -> usize;
}

/// Dense batch of row vectors.
#[derive(Debug, Clone)]
pub struct Batch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged batch");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Fully connected network. Hidden layers apply a rectifier; the output
/// layer is linear.
#[derive(Debug, Clone)]
pub struct Net {
    sizes: Vec<usize>,
    /// weights[l] is sizes[l+1] x sizes[l], row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-parameter quantities shaped like a [`Net`]: gradients or moments.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Net) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.weights {
            for v in w {
                *v *= c;
            }
        }
        for b in &mut self.biases {
            for v in b {
                *v *= c;
            }
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|v| v.is_finite())
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

/// Post-activation values per layer for one batch, kept for backprop.
#[derive(Debug)]
pub struct Trace {
    /// activations[0] is the input batch; activations.last() the output.
    activations: Vec<Batch>,
}

impl Trace {
    pub fn output(&self) -> &Batch {
        self.activations.last().expect("trace has layers")
    }
}

impl Net {
    /// Seeded He-uniform initialization; biases start at zero.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let limit = (6.0 / sizes[l] as f64).sqrt();
            weights.push(
                (0..sizes[l + 1] * sizes[l])
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect(),
            );
            biases.push(vec![0.0; sizes[l + 1]]);
        }
        Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let mut net = Net {
            sizes: sizes.to_vec(),
            weights: Vec::new(),
            biases: Vec::new(),
        };
        for l in 0..sizes.len() - 1 {
            net.weights.push(vec![0.0; sizes[l + 1] * sizes[l]]);
            net.biases.push(vec![0.0; sizes[l + 1]]);
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params_finite(&self) -> bool {
        self.weights.iter().flatten().all(|v| v.is_finite())
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    /// Visit every parameter; used by tests and the gradient checker.
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for w in &self.weights {
            if i < w.len() {
                return w[i];
            }
            i -= w.len();
        }
        for b in &self.biases {
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut i = idx;
        for w in &mut self.weights {
            if i < w.len() {
                return &mut w[i];
            }
            i -= w.len();
        }
        for b in &mut self.biases {
            if i < b.len() {
                return &mut b[i];
            }
            i -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn grad_component(grads: &Gradients, idx: usize) -> f64 {
        let mut i = idx;
        for w in &grads.weights {
            if i < w.len() {
                return w[i];
            }
            i -= w.len();
        }
        for b in &grads.biases {
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("gradient index out of range");
    }

    fn layer_forward(&self, l: usize, input: &Batch, relu: bool) -> Batch {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let mut out = Batch::zeros(input.rows, n_out);
        let w = &self.weights[l];
        let b = &self.biases[l];
        for r in 0..input.rows {
            let x = input.row(r);
            let y = out.row_mut(r);
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(x) {
                    acc += wi * xi;
                }
                *yo = if relu && acc < 0.0 { 0.0 } else { acc };
            }
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let batch = Batch {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        };
        self.forward_batch(&batch).data
    }

    pub fn forward_batch(&self, xs: &Batch) -> Batch {
        assert_eq!(xs.cols, self.input_dim(), "input dimension mismatch");
        let mut cur = xs.clone();
        for l in 0..self.num_layers() {
            cur = self.layer_forward(l, &cur, l + 1 < self.num_layers());
        }
        cur
    }

    /// Forward pass that keeps per-layer activations for [`Net::backward`].
    pub fn forward_trace(&self, xs: &Batch) -> Trace {
        assert_eq!(xs.cols, self.input_dim(), "input dimension mismatch");
        let mut activations = Vec::with_capacity(self.num_layers() + 1);
        activations.push(xs.clone());
        for l in 0..self.num_layers() {
            let next = self.layer_forward(l, activations.last().unwrap(), l + 1 < self.num_layers());
            activations.push(next);
        }
        Trace { activations }
    }

    /// Exact gradients of `sum_i out_grad_i . output_i` with respect to every
    /// parameter, given a trace of the same batch. Linear in `out_grad`.
    pub fn backward(&self, trace: &Trace, out_grad: &Batch) -> Gradients {
        let out = trace.output();
        assert_eq!(out_grad.rows, out.rows, "gradient batch size mismatch");
        assert_eq!(out_grad.cols, out.cols, "gradient width mismatch");

        let mut grads = Gradients::zeros_like(self);
        let mut delta = out_grad.clone();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let below = &trace.activations[l];
            {
                let gw = &mut grads.weights[l];
                let gb = &mut grads.biases[l];
                for r in 0..delta.rows {
                    let d = delta.row(r);
                    let a = below.row(r);
                    for (o, &dv) in d.iter().enumerate() {
                        if dv == 0.0 {
                            continue;
                        }
                        gb[o] += dv;
                        let row = &mut gw[o * n_in..(o + 1) * n_in];
                        for (g, ai) in row.iter_mut().zip(a) {
                            *g += dv * ai;
                        }
                    }
                }
            }
            if l > 0 {
                // delta_below = (W^T delta) masked by the rectifier.
                let mut next = Batch::zeros(delta.rows, n_in);
                let w = &self.weights[l];
                for r in 0..delta.rows {
                    let d = delta.row(r);
                    let a = below.row(r);
                    let nd = next.row_mut(r);
                    for (o, &dv) in d.iter().enumerate() {
                        if dv == 0.0 {
                            continue;
                        }
                        let row = &w[o * n_in..(o + 1) * n_in];
                        for (ndi, wi) in nd.iter_mut().zip(row) {
                            *ndi += dv * wi;
                        }
                    }
                    for (ndi, &ai) in nd.iter_mut().zip(a) {
                        if ai <= 0.0 {
                            *ndi = 0.0;
                        }
                    }
                }
                delta = next;
            }
        }
        grads
    }
}

impl QFunction for Net {
    fn q_values(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input)
    }

    fn num_actions(&self) -> usize {
        self.output_dim()
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Option<Gradients>,
    v: Option<Gradients>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: None,
            v: None,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. Rejects non-finite gradients and fails hard if parameters
    /// stop being finite afterwards.
    pub fn step(&mut self, net: &mut Net, grads: &Gradients) -> Result<(), NnError> {
        if !grads.is_finite() {
            return Err(NnError::NonFinite { what: "gradients" });
        }
        if self.m.is_none() {
            self.m = Some(Gradients::zeros_like(net));
            self.v = Some(Gradients::zeros_like(net));
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.learning_rate * bc2.sqrt() / bc1;
        let m = self.m.as_mut().unwrap();
        let v = self.v.as_mut().unwrap();

        let mut update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * *m / (v.sqrt() + self.epsilon);
        };
        for l in 0..net.weights.len() {
            for i in 0..net.weights[l].len() {
                update(
                    &mut net.weights[l][i],
                    grads.weights[l][i],
                    &mut m.weights[l][i],
                    &mut v.weights[l][i],
                );
            }
            for i in 0..net.biases[l].len() {
                update(
                    &mut net.biases[l][i],
                    grads.biases[l][i],
                    &mut m.biases[l][i],
                    &mut v.biases[l][i],
                );
            }
        }
        if !net.params_finite() {
            return Err(NnError::NonFinite { what: "parameters" });
        }
        Ok(())
    }
}

/// Soft-updated shadow of an online network.
#[derive(Debug, Clone)]
pub struct TargetNet {
    net: Net,
    pub tau: f64,
}

impl TargetNet {
    /// Starts as an exact copy of the online network.
    pub fn new(online: &Net, tau: f64) -> Self {
        Self {
            net: online.clone(),
            tau,
        }
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    /// shadow <- (1 - tau) * shadow + tau * online, elementwise.
    pub fn soft_update(&mut self, online: &Net) -> Result<(), NnError> {
        if self.net.sizes != online.sizes {
            return Err(NnError::ShapeMismatch {
                what: "target network sizes",
                expected: self.net.param_count(),
                got: online.param_count(),
            });
        }
        let t = self.tau;
        for (sw, ow) in self.net.weights.iter_mut().zip(&online.weights) {
            for (s, o) in sw.iter_mut().zip(ow) {
                *s = (1.0 - t) * *s + t * o;
            }
        }
        for (sb, ob) in self.net.biases.iter_mut().zip(&online.biases) {
            for (s, o) in sb.iter_mut().zip(ob) {
                *s = (1.0 - t) * *s + t * o;
            }
        }
        Ok(())
    }
}

/// Serialize several networks into one checkpoint file.
pub fn save_nets(path: &Path, nets: &[&Net]) -> Result<(), NnError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(nets.len() as u64).to_le_bytes());
    for net in nets {
        buf.extend_from_slice(&(net.sizes.len() as u64).to_le_bytes());
        for &s in &net.sizes {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for l in 0..net.num_layers() {
            for &w in &net.weights[l] {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            for &b in &net.biases[l] {
                buf.extend_from_slice(&b.to_le_bytes());
            }
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_nets(path: &Path) -> Result<Vec<Net>, NnError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], NnError> {
        if *pos + n > bytes.len() {
            return Err(NnError::BadCheckpoint("unexpected end of file".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 8)? != CHECKPOINT_MAGIC {
        return Err(NnError::BadCheckpoint("bad magic".into()));
    }
    let read_u64 = |pos: &mut usize| -> Result<u64, NnError> {
        let s = take(pos, 8)?;
        Ok(u64::from_le_bytes(s.try_into().unwrap()))
    };
    let count = read_u64(&mut pos)? as usize;
    let mut nets = Vec::with_capacity(count);
    for _ in 0..count {
        let n_sizes = read_u64(&mut pos)? as usize;
        if n_sizes < 2 {
            return Err(NnError::BadCheckpoint("network with fewer than 2 layers".into()));
        }
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            sizes.push(read_u64(&mut pos)? as usize);
        }
        let mut net = Net::zeros(&sizes);
        for l in 0..net.num_layers() {
            for i in 0..net.weights[l].len() {
                let s = take(&mut pos, 8)?;
                net.weights[l][i] = f64::from_le_bytes(s.try_into().unwrap());
            }
            for i in 0..net.biases[l].len() {
                let s = take(&mut pos, 8)?;
                net.biases[l][i] = f64::from_le_bytes(s.try_into().unwrap());
            }
        }
        nets.push(net);
    }
    if pos != bytes.len() {
        return Err(NnError::BadCheckpoint("trailing bytes".into()));
    }
    Ok(nets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::seed_stream;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Net::zeros(&[5, 8, 3]);
        assert!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_like_single_layer_selects_inputs() {
        let mut net = Net::zeros(&[3, 2]);
        // Output 0 copies input 1; output 1 copies input 2.
        net.weights[0][1] = 1.0;
        net.weights[0][3 + 2] = 1.0;
        assert_eq!(net.forward(&[7.0, -4.0, 2.5]), vec![-4.0, 2.5]);
    }

    #[test]
    fn batched_forward_matches_per_sample() {
        let mut rng = seed_stream(11, 0);
        let net = Net::new(&[6, 10, 4], &mut rng);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let batch = Batch::from_rows(&rows);
        let out = net.forward_batch(&batch);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(out.row(i), net.forward(row).as_slice());
        }
    }

    #[test]
    fn zero_out_grad_gives_zero_param_grads() {
        let mut rng = seed_stream(3, 0);
        let net = Net::new(&[4, 6, 2], &mut rng);
        let batch = Batch::from_rows(&[vec![0.3, -0.1, 0.8, 0.2]]);
        let trace = net.forward_trace(&batch);
        let grads = net.backward(&trace, &Batch::zeros(1, 2));
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_linear_in_out_grads() {
        let mut rng = seed_stream(4, 0);
        let net = Net::new(&[3, 5, 2], &mut rng);
        let batch = Batch::from_rows(&[vec![0.5, -0.2, 0.9], vec![-0.6, 0.1, 0.4]]);
        let trace = net.forward_trace(&batch);
        let g1 = Batch::from_rows(&[vec![1.0, -0.5], vec![0.2, 0.7]]);
        let g2 = Batch::from_rows(&[vec![-0.3, 0.4], vec![0.9, -0.1]]);
        let mut sum = g1.clone();
        for (s, v) in sum.data.iter_mut().zip(&g2.data) {
            *s += v;
        }
        let mut combined = net.backward(&trace, &g1);
        combined.add(&net.backward(&trace, &g2));
        let direct = net.backward(&trace, &sum);
        for (a, b) in combined.weights.iter().flatten().zip(direct.weights.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Central finite differences against the analytic gradient of a
    /// mean-squared loss, the independent oracle for backprop.
    fn finite_diff_check(sizes: &[usize], seed: u64) {
        let mut rng = seed_stream(seed, 0);
        let mut net = Net::new(sizes, &mut rng);
        let n = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..*sizes.last().unwrap())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let batch = Batch::from_rows(&rows);

        let loss = |net: &Net| -> f64 {
            let out = net.forward_batch(&batch);
            let mut total = 0.0;
            for i in 0..n {
                for (o, t) in out.row(i).iter().zip(&targets[i]) {
                    total += (o - t) * (o - t);
                }
            }
            total / n as f64
        };

        let trace = net.forward_trace(&batch);
        let mut out_grad = Batch::zeros(n, *sizes.last().unwrap());
        for i in 0..n {
            let row = trace.output().row(i).to_vec();
            for (j, (&o, t)) in row.iter().zip(&targets[i]).enumerate() {
                out_grad.row_mut(i)[j] = 2.0 * (o - t) / n as f64;
            }
        }
        let grads = net.backward(&trace, &out_grad);

        let eps = 1e-5;
        let count = net.param_count();
        for probe in 0..20 {
            let idx = (probe * 7919) % count;
            let orig = net.param(idx);
            *net.param_mut(idx) = orig + eps;
            let up = loss(&net);
            *net.param_mut(idx) = orig - eps;
            let down = loss(&net);
            *net.param_mut(idx) = orig;
            let fd = (up - down) / (2.0 * eps);
            let analytic = Net::grad_component(&grads, idx);
            let denom = fd.abs().max(analytic.abs()).max(1e-8);
            assert!(
                (fd - analytic).abs() / denom < 1e-4,
                "probe {probe} param {idx}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_diff_check(&[7, 16, 16, 3], 101);
        finite_diff_check(&[12, 8, 4], 202);
        finite_diff_check(&[5, 32, 2], 303);
    }

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let mut rng = seed_stream(5, 0);
        let mut net = Net::new(&[3, 4, 2], &mut rng);
        let before = net.clone();
        let mut adam = Adam::new(3e-4);
        let zero = Gradients::zeros_like(&net);
        for _ in 0..10 {
            adam.step(&mut net, &zero).unwrap();
        }
        for (a, b) in net.weights.iter().flatten().zip(before.weights.iter().flatten()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adam_constant_gradient_moves_at_learning_rate() {
        let mut net = Net::zeros(&[1, 1]);
        let mut adam = Adam::new(1e-3);
        let mut grads = Gradients::zeros_like(&net);
        grads.weights[0][0] = 0.5;
        let mut prev = net.weights[0][0];
        let mut last_delta = 0.0;
        for _ in 0..2000 {
            adam.step(&mut net, &grads).unwrap();
            last_delta = net.weights[0][0] - prev;
            prev = net.weights[0][0];
        }
        // Steady state: parameter moves at ~ -lr * sign(g) per step.
        assert!((last_delta + 1e-3).abs() < 1e-5, "delta {last_delta}");
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut net = Net::zeros(&[2, 2]);
        let mut adam = Adam::new(1e-3);
        let mut grads = Gradients::zeros_like(&net);
        grads.weights[0][0] = f64::NAN;
        assert!(adam.step(&mut net, &grads).is_err());
    }

    #[test]
    fn adam_descends_on_a_tiny_regression_task() {
        let mut rng = seed_stream(17, 0);
        let mut net = Net::new(&[2, 16, 1], &mut rng);
        let mut adam = Adam::new(3e-3);
        let data: Vec<(Vec<f64>, f64)> = (0..32)
            .map(|_| {
                let x = rng.gen_range(-1.0..1.0);
                let y = rng.gen_range(-1.0..1.0);
                (vec![x, y], x - 2.0 * y)
            })
            .collect();
        let batch = Batch::from_rows(&data.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>());
        let mut losses = Vec::new();
        for _ in 0..100 {
            let trace = net.forward_trace(&batch);
            let mut out_grad = Batch::zeros(data.len(), 1);
            let mut loss = 0.0;
            for (i, (_, target)) in data.iter().enumerate() {
                let pred = trace.output().row(i)[0];
                loss += (pred - target) * (pred - target);
                out_grad.row_mut(i)[0] = 2.0 * (pred - target) / data.len() as f64;
            }
            losses.push(loss / data.len() as f64);
            let grads = net.backward(&trace, &out_grad);
            adam.step(&mut net, &grads).unwrap();
        }
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn soft_update_arithmetic_and_decay() {
        let online = {
            let mut n = Net::zeros(&[1, 1]);
            n.weights[0][0] = 1.0;
            n
        };
        let mut target = TargetNet::new(&Net::zeros(&[1, 1]), 0.005);
        target.soft_update(&online).unwrap();
        assert!((target.net().weights[0][0] - 0.005).abs() < 1e-15);

        // Identical nets stay identical.
        let mut same = TargetNet::new(&online, 0.005);
        same.soft_update(&online).unwrap();
        assert_eq!(same.net().weights[0][0], 1.0);

        // 1000 updates against a frozen online net shrink the gap geometrically.
        let mut t = TargetNet::new(&Net::zeros(&[1, 1]), 0.005);
        for _ in 0..1000 {
            t.soft_update(&online).unwrap();
        }
        let gap = (1.0 - t.net().weights[0][0]).abs();
        let expect = 0.995f64.powi(1000);
        assert!((gap - expect).abs() < 1e-9, "gap {gap} vs {expect}");
    }

    #[test]
    fn soft_update_rejects_shape_mismatch() {
        let online = Net::zeros(&[2, 3]);
        let mut target = TargetNet::new(&Net::zeros(&[2, 4]), 0.5);
        assert!(target.soft_update(&online).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let mut rng = seed_stream(23, 0);
        let a = Net::new(&[4, 8, 3], &mut rng);
        let b = Net::new(&[2, 5, 5, 1], &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nets.bin");
        save_nets(&path, &[&a, &b]).unwrap();
        let loaded = load_nets(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].sizes(), a.sizes());
        assert_eq!(loaded[1].sizes(), b.sizes());
        for (x, y) in loaded[0].weights.iter().flatten().zip(a.weights.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn deterministic_training_given_identical_seeds() {
        let run = || {
            let mut rng = seed_stream(99, 0);
            let mut net = Net::new(&[3, 8, 2], &mut rng);
            let mut adam = Adam::new(1e-3);
            let batch = Batch::from_rows(&[vec![0.1, 0.2, 0.3], vec![-0.4, 0.5, -0.6]]);
            for _ in 0..50 {
                let trace = net.forward_trace(&batch);
                let mut og = Batch::zeros(2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        og.row_mut(i)[j] = trace.output().row(i)[j] - 0.5;
                    }
                }
                let grads = net.backward(&trace, &og);
                adam.step(&mut net, &grads).unwrap();
            }
            net
        };
        let (a, b) = (run(), run());
        for (x, y) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
