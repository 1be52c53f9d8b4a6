//! Empirical NTK `⟨∇_θ f(x), ∇_θ f(x′)⟩` of a finite network.
//!
//! Each weight gradient is a sum of rank-one terms `δ_t h_{t−1}ᵀ`, so the
//! inner product factors as `Σ_{t,t′} ⟨δ_t, δ′_{t′}⟩·⟨h_{t−1}, h′_{t′−1}⟩` and
//! the `n × n` gradients are never formed.

use serde::Serialize;

use super::network::{FiniteRnn, ForwardCache};
use crate::error::Result;
use crate::sequence::{dot, Sequence};

/// Contributions of the weight blocks, summed over layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NtkBreakdown {
    pub w: f64,
    pub u: f64,
    pub b: f64,
    pub v: f64,
}

impl NtkBreakdown {
    pub fn total(&self) -> f64 {
        self.w + self.u + self.b + self.v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalNtkResult {
    /// Equal to `breakdown.total()`.
    pub value: f64,
    pub breakdown: NtkBreakdown,
    pub width: usize,
    pub seed: u64,
}

/// A forward pass together with its backward signals.
pub struct Traced {
    pub cache: ForwardCache,
    pub delta: Vec<Vec<Vec<f64>>>,
}

impl FiniteRnn {
    pub fn trace(&self, x: &Sequence) -> Result<Traced> {
        let cache = self.forward(x)?;
        let delta = self.deltas(&cache);
        Ok(Traced { cache, delta })
    }

    /// Gradient inner product of two traced inputs.
    pub fn ntk_from_traces(&self, a: &Traced, b: &Traced) -> NtkBreakdown {
        let n = self.width() as f64;
        let p = self.params();
        let mut out = NtkBreakdown::default();
        for l in 0..p.depth {
            let s = p.layer(l);
            let fan_in = if l == 0 { self.input_dim() } else { self.width() } as f64;
            for t in 0..a.cache.len() {
                for t2 in 0..b.cache.len() {
                    if self.copy(t) != self.copy(t2) {
                        continue;
                    }
                    let dd = dot(&a.delta[l][t], &b.delta[l][t2]) / n;
                    let hh = dot(a.cache.hidden(l, t), b.cache.hidden(l, t2)) / n;
                    let xx = if l == 0 {
                        dot(a.cache.input.step(t), b.cache.input.step(t2))
                    } else {
                        dot(a.cache.hidden(l - 1, t + 1), b.cache.hidden(l - 1, t2 + 1))
                    } / fan_in;
                    out.w += dd * s.sigma_w * s.sigma_w * hh;
                    out.u += dd * s.sigma_u * s.sigma_u * xx;
                    out.b += dd * s.sigma_b * s.sigma_b;
                }
            }
        }
        let last = p.depth - 1;
        out.v = p.sigma_v * p.sigma_v / n * dot(a.cache.hidden(last, a.cache.len()), b.cache.hidden(last, b.cache.len()));
        out
    }

    pub fn empirical_ntk(&self, x: &Sequence, x2: &Sequence) -> Result<EmpiricalNtkResult> {
        let a = self.trace(x)?;
        let b = if x.same_values(x2) { None } else { Some(self.trace(x2)?) };
        let breakdown = self.ntk_from_traces(&a, b.as_ref().unwrap_or(&a));
        Ok(EmpiricalNtkResult {
            value: breakdown.total(),
            breakdown,
            width: self.width(),
            seed: self.seed(),
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::oracle::network::{Block, FiniteRnn};
    use crate::params::RntkParams;
    use crate::rng::substream;
    use crate::sequence::Sequence;
    use crate::vphi::Activation;
    use approx::assert_relative_eq;

    fn erf_params(depth: usize) -> RntkParams {
        RntkParams::new(1.1, 0.9, 0.3, 0.4, 1.2, depth, Activation::Erf).unwrap()
    }

    #[test]
    fn factored_kernel_matches_materialised_gradients() {
        for tied in [true, false] {
            let rnn = FiniteRnn::new(&erf_params(2), 12, 2, tied, 4, 3).unwrap();
            let x = Sequence::new(vec![vec![0.3, -1.0], vec![0.8, 0.1], vec![-0.5, 0.5]]).unwrap();
            let y = Sequence::new(vec![vec![1.2, 0.0], vec![-0.3, 0.9], vec![0.1, 0.1], vec![0.7, -0.7]]).unwrap();
            let gx = rnn.gradient(&x).unwrap();
            let gy = rnn.gradient(&y).unwrap();
            let e = rnn.empirical_ntk(&x, &y).unwrap();
            assert_relative_eq!(e.value, gx.dot(&gy), max_relative = 1e-12);
            assert_eq!(e.value, e.breakdown.total());
            let w: f64 = (0..2).map(|l| gx.restricted(Block::W(l)).dot(&gy)).sum();
            let v = gx.restricted(Block::V).dot(&gy);
            assert_relative_eq!(e.breakdown.w, w, max_relative = 1e-12);
            assert_relative_eq!(e.breakdown.v, v, max_relative = 1e-12);
            let s = rnn.empirical_ntk(&x, &x).unwrap();
            assert_relative_eq!(s.value, gx.norm().powi(2), max_relative = 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-4;
        for tied in [true, false] {
            let rnn = FiniteRnn::new(&erf_params(2), 16, 1, tied, 3, 8).unwrap();
            let x = Sequence::scalar(&[0.4, -0.9, 1.3]).unwrap();
            let grad = rnn.gradient(&x).unwrap();
            let mut rng = substream(1, "test", &[]);
            for block in [
                Block::W(0),
                Block::U(0),
                Block::B(0),
                Block::W(1),
                Block::U(1),
                Block::B(1),
                Block::V,
            ] {
                let dir = rnn.weights().random_like(&mut rng).restricted(block);
                let eval = |a: f64| {
                    let mut w = rnn.weights().clone();
                    w.axpy(a, &dir);
                    let mut r = rnn.clone();
                    r.set_weights(w).unwrap();
                    r.output(&x).unwrap()
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let an = grad.dot(&dir);
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{block:?} tied={tied}: {fd} vs {an}");
            }
        }
    }
}
