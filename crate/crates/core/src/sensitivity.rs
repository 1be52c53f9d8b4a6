//! Per-step input sensitivity `s(t) = ‖∇_{x_t} Θ(x, x′)‖₂` of the RNTK.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{rntk_pair_prepared, self_table};
use crate::params::RntkParams;
use crate::rng::{self, streams};
use crate::sequence::Sequence;

pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityProfile {
    /// Trial mean of `s(t)`, `t = 1..=T`.
    pub raw: Vec<f64>,
    /// `raw / max(raw)`.
    pub normalized: Vec<f64>,
    pub params: RntkParams,
    pub num_trials: usize,
    pub seed: u64,
    pub fd_step: f64,
}

/// Divides by the maximum; an identically zero profile is an error.
pub fn normalize_profile(raw: &[f64]) -> Result<Vec<f64>> {
    let max = raw.iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::NonFinite(format!("profile maximum is {max}")));
    }
    Ok(raw.iter().map(|v| v / max).collect())
}

/// `s(t)` for one pair, by central differences on each coordinate of `x_t`.
pub fn pair_sensitivity(params: &RntkParams, x: &Sequence, y: &Sequence, fd_step: f64) -> Result<Vec<f64>> {
    let sy = self_table(params, y)?;
    let theta = |xp: &Sequence| -> Result<f64> {
        let sx = self_table(params, xp)?;
        Ok(rntk_pair_prepared(params, xp, &sx, y, &sy, false)?.theta)
    };
    let mut out = Vec::with_capacity(x.len());
    let mut xp = x.clone();
    for t in 0..x.len() {
        let mut sq = 0.0;
        for j in 0..x.dim() {
            let idx = t * x.dim() + j;
            let orig = x.as_flat()[idx];
            xp.as_flat_mut()[idx] = orig + fd_step;
            let plus = theta(&xp)?;
            xp.as_flat_mut()[idx] = orig - fd_step;
            let minus = theta(&xp)?;
            xp.as_flat_mut()[idx] = orig;
            let d = (plus - minus) / (2.0 * fd_step);
            if !d.is_finite() {
                return Err(Error::NonFinite(format!("kernel derivative at step {}", t + 1)));
            }
            sq += d * d;
        }
        out.push(sq.sqrt());
    }
    Ok(out)
}

/// Mean sensitivity over `num_trials` pairs of i.i.d. standard normal sequences.
///
/// Trial `i` draws its pair from the substream `(seed, "trials", i)`, so the
/// result does not depend on scheduling.
pub fn sensitivity_profile(
    params: &RntkParams,
    len: usize,
    dim: usize,
    num_trials: usize,
    seed: u64,
    fd_step: f64,
) -> Result<SensitivityProfile> {
    params.validate()?;
    if len == 0 || dim == 0 || num_trials == 0 {
        return Err(Error::InvalidParam(format!(
            "sensitivity needs T >= 1, m >= 1 and at least one trial (got T={len}, m={dim}, trials={num_trials})"
        )));
    }
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::InvalidParam(format!("fd_step must be positive, got {fd_step}")));
    }
    let per_trial: Vec<Vec<f64>> = (0..num_trials)
        .into_par_iter()
        .map(|trial| {
            let mut stream = rng::substream(seed, streams::TRIALS, &[trial as u64]);
            let x = Sequence::from_flat(rng::normal_vec(&mut stream, len * dim), dim)?;
            let y = Sequence::from_flat(rng::normal_vec(&mut stream, len * dim), dim)?;
            pair_sensitivity(params, &x, &y, fd_step).map_err(|e| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!("{msg} in trial {}", trial + 1)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut raw = vec![0.0; len];
    for s in &per_trial {
        for (r, v) in raw.iter_mut().zip(s) {
            *r += v;
        }
    }
    for r in &mut raw {
        *r /= num_trials as f64;
    }
    let normalized = normalize_profile(&raw)?;
    Ok(SensitivityProfile {
        raw,
        normalized,
        params: params.clone(),
        num_trials,
        seed,
        fd_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rntk_pair;

    #[test]
    fn single_step_normalizes_to_one() {
        let p = sensitivity_profile(&RntkParams::relu_default(), 1, 1, 5, 0, DEFAULT_FD_STEP).unwrap();
        assert_eq!(p.normalized, vec![1.0]);
        assert!(p.raw[0] > 0.0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let p = RntkParams::erf_default();
        let a = sensitivity_profile(&p, 6, 2, 7, 42, 1e-3).unwrap();
        let b = sensitivity_profile(&p, 6, 2, 7, 42, 1e-3).unwrap();
        assert_eq!(a, b);
        let c = sensitivity_profile(&p, 6, 2, 7, 43, 1e-3).unwrap();
        assert_ne!(a.raw, c.raw);
    }

    #[test]
    fn normalization_is_idempotent() {
        let n = normalize_profile(&[0.5, 2.0, 1.0]).unwrap();
        assert_eq!(n, vec![0.25, 1.0, 0.5]);
        assert_eq!(normalize_profile(&n).unwrap(), n);
        assert!(normalize_profile(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn finite_differences_are_step_stable_for_erf() {
        let p = RntkParams::new(1.2, 0.9, 0.1, 0.0, 1.0, 1, crate::Activation::Erf).unwrap();
        let a = sensitivity_profile(&p, 8, 1, 20, 3, 1e-3).unwrap();
        let b = sensitivity_profile(&p, 8, 1, 20, 3, 5e-4).unwrap();
        for (x, y) in a.raw.iter().zip(&b.raw) {
            assert!((x - y).abs() <= 0.01 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn matches_a_direct_difference() {
        let p = RntkParams::relu_default();
        let x = Sequence::scalar(&[0.3, -0.8]).unwrap();
        let y = Sequence::scalar(&[1.1, 0.4, -0.2]).unwrap();
        let s = pair_sensitivity(&p, &x, &y, 1e-4).unwrap();
        let th = |v: f64| rntk_pair(&p, &Sequence::scalar(&[v, -0.8]).unwrap(), &y).unwrap().theta;
        let direct = ((th(0.3 + 1e-4) - th(0.3 - 1e-4)) / 2e-4).abs();
        assert!((s[0] - direct).abs() < 1e-9);
    }

    #[test]
    fn invalid_arguments() {
        let p = RntkParams::relu_default();
        assert!(sensitivity_profile(&p, 0, 1, 1, 0, 1e-3).is_err());
        assert!(sensitivity_profile(&p, 3, 1, 0, 0, 1e-3).is_err());
        assert!(sensitivity_profile(&p, 3, 1, 1, 0, 0.0).is_err());
    }
}
