//! Dense tanh MLP over a flat parameter slice.
//!
//! Layer `l` stores its weight matrix row-major (`out x in`) followed by its
//! bias. Hidden layers use tanh, the output layer is linear. Forward and
//! backward work on row-major minibatches.

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpShape {
    sizes: Vec<usize>,
}

/// Activations kept for the backward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub batch: usize,
    acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("at least one layer")
    }
}

impl MlpShape {
    /// `sizes = [input, hidden.., output]`.
    pub fn new(sizes: Vec<usize>) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0));
        Self { sizes }
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

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// `(in, out)` of layer `l`.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        (self.sizes[l], self.sizes[l + 1])
    }

    pub fn layer_offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.layer_params(k)).sum()
    }

    fn layer_params(&self, l: usize) -> usize {
        let (i, o) = self.layer_dims(l);
        o * i + o
    }

    pub fn n_params(&self) -> usize {
        (0..self.n_layers()).map(|l| self.layer_params(l)).sum()
    }

    /// Orthogonal weights (gain `hidden_gain` on hidden layers, `output_gain`
    /// on the last), zero biases.
    pub fn init(&self, rng: &mut SplitMix64, hidden_gain: f64, output_gain: f64) -> Vec<f64> {
        let mut params = vec![0.0; self.n_params()];
        for l in 0..self.n_layers() {
            let (i, o) = self.layer_dims(l);
            let gain = if l + 1 == self.n_layers() { output_gain } else { hidden_gain };
            let w = orthogonal(rng, o, i, gain);
            let off = self.layer_offset(l);
            params[off..off + o * i].copy_from_slice(&w);
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &[f64], batch: usize) -> MlpCache {
        debug_assert_eq!(params.len(), self.n_params());
        debug_assert_eq!(input.len(), batch * self.input_dim());
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = self.layer_dims(l);
            let off = self.layer_offset(l);
            let w = &params[off..off + n_out * n_in];
            let b = &params[off + n_out * n_in..off + n_out * n_in + n_out];
            let x = acts.last().unwrap();
            let hidden = l + 1 < self.n_layers();
            let mut y = vec![0.0; batch * n_out];
            for r in 0..batch {
                let xr = &x[r * n_in..(r + 1) * n_in];
                for (o, yo) in y[r * n_out..(r + 1) * n_out].iter_mut().enumerate() {
                    let wo = &w[o * n_in..(o + 1) * n_in];
                    let z = b[o] + wo.iter().zip(xr).map(|(a, c)| a * c).sum::<f64>();
                    *yo = if hidden { z.tanh() } else { z };
                }
            }
            acts.push(y);
        }
        MlpCache { batch, acts }
    }

    /// Accumulate `d(loss)/d(params)` into `grad` given `d(loss)/d(output)`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, grad_out: &[f64], grad: &mut [f64]) {
        let batch = cache.batch;
        debug_assert_eq!(grad_out.len(), batch * self.output_dim());
        let mut delta = grad_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = self.layer_dims(l);
            let off = self.layer_offset(l);
            let x = &cache.acts[l];
            {
                let (gw, gb) = grad[off..off + n_out * n_in + n_out].split_at_mut(n_out * n_in);
                for r in 0..batch {
                    let xr = &x[r * n_in..(r + 1) * n_in];
                    for o in 0..n_out {
                        let d = delta[r * n_out + o];
                        if d == 0.0 {
                            continue;
                        }
                        gb[o] += d;
                        for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(xr) {
                            *g += d * xi;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &params[off..off + n_out * n_in];
            let mut prev = vec![0.0; batch * n_in];
            for r in 0..batch {
                let pr = &mut prev[r * n_in..(r + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[r * n_out + o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wi) in pr.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wi;
                    }
                }
                // Hidden activations are tanh outputs a; tanh' = 1 - a^2.
                for (p, a) in pr.iter_mut().zip(&x[r * n_in..(r + 1) * n_in]) {
                    *p *= 1.0 - a * a;
                }
            }
            delta = prev;
        }
    }
}

/// `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// shorter) scaled by `gain`, via modified Gram-Schmidt on a Gaussian draw.
pub fn orthogonal(rng: &mut SplitMix64, rows: usize, cols: usize, gain: f64) -> Vec<f64> {
    let (n_vec, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
    while vecs.len() < n_vec {
        let mut v: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
        for u in &vecs {
            let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain
                * if rows <= cols {
                    vecs[r][c]
                } else {
                    vecs[c][r]
                };
        }
    }
    out
}
