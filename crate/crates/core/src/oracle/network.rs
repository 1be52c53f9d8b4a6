//! Finite-width deep Elman RNN in NTK parametrisation.
//!
//! Raw weights are standard normal; the forward pass applies the scales
//!
//! ```text
//! g^{(ℓ,t)} = σ_w/√n W h^{(ℓ,t−1)} + σ_u/√m' U h^{(ℓ−1,t)} + σ_b b
//! h^{(ℓ,t)} = φ(g^{(ℓ,t)}),    f = σ_v/√n v·h^{(L,T)}
//! ```
//!
//! with `h^{(0,t)} = x_t`, `m' = m` at the first layer and `n` above.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::params::RntkParams;
use crate::rng::{self, streams};
use crate::sequence::{dot, Sequence};

/// Raw weights of one layer at one time step (all steps share index 0 when tied).
#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    /// `n × n`, row-major.
    pub w: Vec<f64>,
    /// `n × fan_in`, row-major.
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

/// Every trainable parameter of the network, in raw (unscaled) units.
///
/// Also used for gradients and perturbation directions, hence the vector
/// space operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// `[layer][copy]`; one copy when tied, one per time step when untied.
    pub layers: Vec<Vec<StepParams>>,
    pub v: Vec<f64>,
}

/// A named parameter block, used for per-block gradient checks and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    W(usize),
    U(usize),
    B(usize),
    V,
}

impl Parameters {
    fn shaped(width: usize, input_dim: usize, depth: usize, copies: usize, mut fill: impl FnMut(usize) -> Vec<f64>) -> Self {
        let layers = (0..depth)
            .map(|l| {
                let fan_in = if l == 0 { input_dim } else { width };
                (0..copies)
                    .map(|_| StepParams {
                        w: fill(width * width),
                        u: fill(width * fan_in),
                        b: fill(width),
                    })
                    .collect()
            })
            .collect();
        Parameters { layers, v: fill(width) }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|s| s.fill(0.0));
        z
    }

    /// A standard normal direction with the same shape.
    pub fn random_like(&self, rng: &mut rng::Rng) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|s| {
            for v in s.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
        });
        z
    }

    fn slices(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for s in layer {
                out.extend([&s.w, &s.u, &s.b]);
            }
        }
        out.push(&self.v);
        out
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut Vec<f64>)) {
        for layer in &mut self.layers {
            for s in layer {
                f(&mut s.w);
                f(&mut s.u);
                f(&mut s.b);
            }
        }
        f(&mut self.v);
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Parameters) {
        let src = other.slices();
        let mut i = 0;
        self.for_each_mut(|dst| {
            for (d, s) in dst.iter_mut().zip(src[i]) {
                *d += a * s;
            }
            i += 1;
        });
    }

    pub fn dot(&self, other: &Parameters) -> f64 {
        self.slices().iter().zip(other.slices()).map(|(a, b)| dot(a, b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// A copy with every entry outside `block` set to zero.
    pub fn restricted(&self, block: Block) -> Parameters {
        let mut out = self.zeros_like();
        match block {
            Block::V => out.v.clone_from(&self.v),
            Block::W(l) => {
                for (o, s) in out.layers[l].iter_mut().zip(&self.layers[l]) {
                    o.w.clone_from(&s.w);
                }
            }
            Block::U(l) => {
                for (o, s) in out.layers[l].iter_mut().zip(&self.layers[l]) {
                    o.u.clone_from(&s.u);
                }
            }
            Block::B(l) => {
                for (o, s) in out.layers[l].iter_mut().zip(&self.layers[l]) {
                    o.b.clone_from(&s.b);
                }
            }
        }
        out
    }
}

/// `out += scale · A x` for row-major `A` with `x.len()` columns.
pub(crate) fn matvec_add(a: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(a.chunks_exact(cols)) {
        *o += scale * dot(row, x);
    }
}

/// `out += scale · Aᵀ y` for row-major `A` with `out.len()` columns.
pub(crate) fn matvec_t_add(a: &[f64], y: &[f64], scale: f64, out: &mut [f64]) {
    let cols = out.len();
    for (row, &yi) in a.chunks_exact(cols).zip(y) {
        let c = scale * yi;
        if c != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += c * r;
            }
        }
    }
}

/// `A += scale · y xᵀ`.
pub(crate) fn outer_add(a: &mut [f64], y: &[f64], x: &[f64], scale: f64) {
    let cols = x.len();
    for (row, &yi) in a.chunks_exact_mut(cols).zip(y) {
        let c = scale * yi;
        if c != 0.0 {
            for (r, xj) in row.iter_mut().zip(x) {
                *r += c * xj;
            }
        }
    }
}

/// Activations retained by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `h[l][t]` for `t = 0..=T`; `h[l][0]` is the initial state.
    pub(crate) h: Vec<Vec<Vec<f64>>>,
    /// `g[l][t]` for steps `t = 1..=T`, stored at index `t − 1`.
    pub(crate) g: Vec<Vec<Vec<f64>>>,
    pub(crate) input: Sequence,
    pub output: f64,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    /// Pre-activation `g^{(l+1, t+1)}` (0-based indices).
    pub fn pre_activation(&self, layer: usize, t: usize) -> &[f64] {
        &self.g[layer][t]
    }

    /// Hidden state `h^{(l+1, t)}`; `t = 0` is the initial state.
    pub fn hidden(&self, layer: usize, t: usize) -> &[f64] {
        &self.h[layer][t]
    }
}

/// A randomly initialised RNN of width `n` with a scalar readout.
#[derive(Debug, Clone)]
pub struct FiniteRnn {
    width: usize,
    input_dim: usize,
    params: RntkParams,
    tied: bool,
    seed: u64,
    weights: Parameters,
}

impl FiniteRnn {
    /// Draws weights from `(seed, "init")`. Untied networks hold `max_len`
    /// independent copies per layer; a sequence of length `T` uses the first `T`.
    pub fn new(params: &RntkParams, width: usize, input_dim: usize, tied: bool, max_len: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if width == 0 || input_dim == 0 {
            return Err(Error::InvalidParam("width and input dimension must be positive".into()));
        }
        let copies = if tied { 1 } else { max_len.max(1) };
        let mut stream = rng::substream(seed, streams::INIT, &[width as u64]);
        let weights = Parameters::shaped(width, input_dim, params.depth, copies, |len| rng::normal_vec(&mut stream, len));
        Ok(FiniteRnn {
            width,
            input_dim,
            params: params.clone(),
            tied,
            seed,
            weights,
        })
    }

    /// Uses explicit raw weights (shapes are checked).
    pub fn from_parameters(
        params: &RntkParams,
        width: usize,
        input_dim: usize,
        tied: bool,
        weights: Parameters,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let copies = weights.layers.first().map_or(0, Vec::len);
        let template = Parameters::shaped(width, input_dim, params.depth, copies, |len| vec![0.0; len]);
        let shapes_match = weights.layers.len() == params.depth
            && copies >= 1
            && (!tied || copies == 1)
            && weights.slices().iter().zip(template.slices()).all(|(a, b)| a.len() == b.len())
            && weights.layers.iter().all(|l| l.len() == copies);
        if !shapes_match {
            return Err(Error::Shape("weights do not match width, input dimension and depth".into()));
        }
        Ok(FiniteRnn {
            width,
            input_dim,
            params: params.clone(),
            tied,
            seed,
            weights,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &RntkParams {
        &self.params
    }

    pub fn is_tied(&self) -> bool {
        self.tied
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &Parameters {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Parameters) -> Result<()> {
        *self = Self::from_parameters(&self.params, self.width, self.input_dim, self.tied, weights, self.seed)?;
        Ok(())
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Parameters {
        &mut self.weights
    }

    /// Index of the weight copy used at 0-based step `t`.
    pub(crate) fn copy(&self, t: usize) -> usize {
        if self.tied {
            0
        } else {
            t
        }
    }

    fn fan_in(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.width
        }
    }

    /// Initial state `h^{(ℓ,0)} ~ N(0, σ_h² I)`. It is keyed by the input
    /// values, so identical sequences share it and distinct ones do not.
    fn initial_state(&self, x: &Sequence, layer: usize) -> Vec<f64> {
        if self.params.sigma_h == 0.0 {
            return vec![0.0; self.width];
        }
        let key = rng::hash_f64s(x.as_flat());
        let mut stream = rng::substream(self.seed, streams::INITIAL_STATE, &[self.width as u64, key, layer as u64]);
        let mut h = rng::normal_vec(&mut stream, self.width);
        for v in &mut h {
            *v *= self.params.sigma_h;
        }
        h
    }

    fn check_input(&self, x: &Sequence) -> Result<()> {
        if x.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                left: x.dim(),
                right: self.input_dim,
            });
        }
        let copies = self.weights.layers[0].len();
        if !self.tied && x.len() > copies {
            return Err(Error::Shape(format!(
                "untied network holds {copies} steps, sequence has {}",
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Sequence) -> Result<ForwardCache> {
        self.check_input(x)?;
        let n = self.width;
        let depth = self.params.depth;
        let act = &self.params.activation;
        let sn = (n as f64).sqrt();
        let mut h: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth);
        let mut g: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth);
        for l in 0..depth {
            let s = self.params.layer(l);
            let in_scale = s.sigma_u / (self.fan_in(l) as f64).sqrt();
            let mut hl = vec![self.initial_state(x, l)];
            let mut gl = Vec::with_capacity(x.len());
            for t in 0..x.len() {
                let p = &self.weights.layers[l][self.copy(t)];
                let mut pre: Vec<f64> = p.b.iter().map(|b| s.sigma_b * b).collect();
                matvec_add(&p.w, &hl[t], s.sigma_w / sn, &mut pre);
                let input = if l == 0 { x.step(t) } else { &h[l - 1][t + 1][..] };
                matvec_add(&p.u, input, in_scale, &mut pre);
                hl.push(pre.iter().map(|&z| act.phi(z)).collect());
                gl.push(pre);
            }
            h.push(hl);
            g.push(gl);
        }
        let last = &h[depth - 1][x.len()];
        let output = self.params.sigma_v / sn * dot(&self.weights.v, last);
        if !output.is_finite() {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(ForwardCache {
            h,
            g,
            input: x.clone(),
            output,
        })
    }

    pub fn output(&self, x: &Sequence) -> Result<f64> {
        Ok(self.forward(x)?.output)
    }

    /// Scaled backward signals `δ^{(ℓ,t)} = √n ∂f/∂g^{(ℓ,t)}`, indexed `[l][t−1]`.
    pub fn deltas(&self, cache: &ForwardCache) -> Vec<Vec<Vec<f64>>> {
        let n = self.width;
        let depth = self.params.depth;
        let len = cache.len();
        let act = &self.params.activation;
        let sn = (n as f64).sqrt();
        let mut delta = vec![vec![Vec::new(); len]; depth];
        for l in (0..depth).rev() {
            let s = self.params.layer(l);
            for t in (0..len).rev() {
                let mut back = vec![0.0; n];
                if l + 1 == depth && t + 1 == len {
                    for (b, v) in back.iter_mut().zip(&self.weights.v) {
                        *b = self.params.sigma_v * v;
                    }
                }
                if t + 1 < len {
                    let w = &self.weights.layers[l][self.copy(t + 1)].w;
                    matvec_t_add(w, &delta[l][t + 1], s.sigma_w / sn, &mut back);
                }
                if l + 1 < depth {
                    let up = self.params.layer(l + 1);
                    let u = &self.weights.layers[l + 1][self.copy(t)].u;
                    matvec_t_add(u, &delta[l + 1][t], up.sigma_u / sn, &mut back);
                }
                for (b, &z) in back.iter_mut().zip(&cache.g[l][t]) {
                    *b *= act.dphi(z);
                }
                delta[l][t] = back;
            }
        }
        delta
    }

    /// `∇_θ f(x)` in raw parameter units.
    pub fn gradient(&self, x: &Sequence) -> Result<Parameters> {
        let cache = self.forward(x)?;
        let mut grad = self.weights.zeros_like();
        self.accumulate_gradient(&cache, &self.deltas(&cache), 1.0, &mut grad);
        Ok(grad)
    }

    /// `grad += coef · ∇_θ f(x)` from a forward cache and its deltas.
    pub(crate) fn accumulate_gradient(&self, cache: &ForwardCache, delta: &[Vec<Vec<f64>>], coef: f64, grad: &mut Parameters) {
        let n = self.width as f64;
        let sn = n.sqrt();
        for l in 0..self.params.depth {
            let s = self.params.layer(l);
            let in_scale = s.sigma_u / (self.fan_in(l) as f64).sqrt();
            for t in 0..cache.len() {
                let gp = &mut grad.layers[l][self.copy(t)];
                let d = &delta[l][t];
                outer_add(&mut gp.w, d, &cache.h[l][t], coef * s.sigma_w / n);
                let input = if l == 0 { cache.input.step(t) } else { &cache.h[l - 1][t + 1][..] };
                outer_add(&mut gp.u, d, input, coef * in_scale / sn);
                for (gb, di) in gp.b.iter_mut().zip(d) {
                    *gb += coef * s.sigma_b / sn * di;
                }
            }
        }
        let last = &cache.h[self.params.depth - 1][cache.len()];
        for (gv, h) in grad.v.iter_mut().zip(last) {
            *gv += coef * self.params.sigma_v / sn * h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vphi::Activation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_computed_two_unit_network() {
        let p = RntkParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 1, Activation::Relu).unwrap();
        let weights = Parameters {
            layers: vec![vec![StepParams {
                w: vec![0.0; 4],
                u: vec![1.0, -2.0],
                b: vec![0.5, 0.5],
            }]],
            v: vec![3.0, 4.0],
        };
        let rnn = FiniteRnn::from_parameters(&p, 2, 1, true, weights, 0).unwrap();
        // g = (1·x + 0.5, −2·x + 0.5) at x = 1 → (1.5, −1.5) → h = (1.5, 0)
        let f = rnn.output(&Sequence::scalar(&[1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(f, 3.0 * 1.5 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let rnn = FiniteRnn::new(&RntkParams::relu_default().with_depth(2).unwrap(), 32, 1, true, 0, 5).unwrap();
        let f = rnn.output(&Sequence::scalar(&[0.0; 4]).unwrap()).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn initial_state_is_shared_only_by_identical_inputs() {
        let p = RntkParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 1, Activation::Erf).unwrap();
        let rnn = FiniteRnn::new(&p, 8, 1, true, 0, 1).unwrap();
        let a = Sequence::scalar(&[0.2, 0.3]).unwrap();
        let b = Sequence::scalar(&[0.2, 0.3]).unwrap().with_id("copy");
        let c = Sequence::scalar(&[0.2, 0.30001]).unwrap();
        let ha = rnn.forward(&a).unwrap();
        assert_eq!(ha.hidden(0, 0), rnn.forward(&b).unwrap().hidden(0, 0));
        assert_ne!(ha.hidden(0, 0), rnn.forward(&c).unwrap().hidden(0, 0));
    }

    #[test]
    fn shapes_are_checked() {
        let p = RntkParams::relu_default();
        let rnn = FiniteRnn::new(&p, 4, 2, false, 3, 0).unwrap();
        assert_eq!(rnn.weights().layers[0].len(), 3);
        assert!(rnn.forward(&Sequence::scalar(&[1.0]).unwrap()).is_err());
        let long = Sequence::new(vec![vec![0.0, 0.0]; 4]).unwrap();
        assert!(rnn.forward(&long).is_err());
        let bad = rnn.weights().clone();
        assert!(FiniteRnn::from_parameters(&p, 5, 2, false, bad, 0).is_err());
    }

    #[test]
    fn parameter_vector_space() {
        let rnn = FiniteRnn::new(&RntkParams::relu_default().with_depth(2).unwrap(), 3, 2, true, 0, 0).unwrap();
        let w = rnn.weights();
        assert_eq!(w.count(), 2 * (9 + 3) + 6 + 9 + 3);
        let mut z = w.zeros_like();
        z.axpy(2.0, w);
        assert_abs_diff_eq!(z.dot(w), 2.0 * w.norm().powi(2), epsilon = 1e-12);
        let parts: f64 = [
            Block::W(0),
            Block::U(0),
            Block::B(0),
            Block::W(1),
            Block::U(1),
            Block::B(1),
            Block::V,
        ]
        .iter()
        .map(|&b| w.restricted(b).norm().powi(2))
        .sum();
        assert_abs_diff_eq!(parts, w.norm().powi(2), epsilon = 1e-10);
    }
}
