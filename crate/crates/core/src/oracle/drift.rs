//! Parameter and kernel drift of a finite network under full-batch gradient descent.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::network::FiniteRnn;
use super::ntk::Traced;
use crate::error::{Error, Result};
use crate::gram::gram;
use crate::kernel::KernelKind;
use crate::sequence::Sequence;

/// Loss above which training is declared divergent.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub width: usize,
    pub steps: usize,
    pub lr: f64,
    /// `2/(λ_min + λ_max)` of the analytic RNTK Gram matrix.
    pub eta_star: f64,
    /// `sup_s ‖θ_s − θ_0‖ / √n`.
    pub param_drift: f64,
    /// `sup_s ‖Θ̂_s − Θ̂_0‖₂` (spectral norm).
    pub gram_drift: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Step-size bound `2/(λ_min + λ_max)` for the squared loss `½‖f − y‖²`.
pub fn eta_star(gram: &DMatrix<f64>) -> Result<f64> {
    if gram.is_empty() || !gram.is_square() {
        return Err(Error::Shape("eta* needs a non-empty square Gram matrix".into()));
    }
    let eig = gram.clone().symmetric_eigenvalues();
    let s = eig.min() + eig.max();
    if !(s > 0.0) {
        return Err(Error::Solve("Gram matrix has no positive spectrum".into()));
    }
    Ok(2.0 / s)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().amax()
}

/// Trains a copy of `rnn` on `½Σ(f(x_i) − y_i)²` and records the drifts.
///
/// `steps = 0` returns zero drifts. The initial states are functions of the
/// inputs and are not trained.
pub fn drift_experiment(rnn: &FiniteRnn, data: &[Sequence], targets: &[f64], lr: f64, steps: usize) -> Result<DriftReport> {
    if data.is_empty() {
        return Err(Error::Empty("drift experiment needs at least one sequence".into()));
    }
    if targets.len() != data.len() {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: data.len(),
        });
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidParam(format!("learning rate must be positive, got {lr}")));
    }
    let analytic = gram(rnn.params(), data, KernelKind::Theta)?;
    let eta_star = eta_star(&analytic.values)?;

    let mut net = rnn.clone();
    let theta0 = rnn.weights().clone();
    let sn = (rnn.width() as f64).sqrt();
    let n = data.len();
    let mut gram0: Option<DMatrix<f64>> = None;
    let (mut param_drift, mut gram_drift) = (0.0f64, 0.0f64);
    let mut initial_loss = f64::NAN;
    let mut loss = f64::NAN;

    for step in 0..=steps {
        let traces: Vec<Traced> = data.par_iter().map(|x| net.trace(x)).collect::<Result<_>>()?;
        let residual: Vec<f64> = traces.iter().zip(targets).map(|(tr, y)| tr.cache.output - y).collect();
        loss = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged {
                step,
                loss,
                bound: eta_star,
            });
        }
        if step == 0 {
            initial_loss = loss;
        }

        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = net.ntk_from_traces(&traces[i], &traces[j]).total();
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        match &gram0 {
            None => gram0 = Some(g),
            Some(g0) => gram_drift = gram_drift.max(spectral_norm(&(g - g0))),
        }
        let mut diff = net.weights().clone();
        diff.axpy(-1.0, &theta0);
        param_drift = param_drift.max(diff.norm() / sn);

        if step == steps {
            break;
        }
        let mut grad = net.weights().zeros_like();
        for (tr, r) in traces.iter().zip(&residual) {
            net.accumulate_gradient(&tr.cache, &tr.delta, *r, &mut grad);
        }
        net.weights_mut().axpy(-lr, &grad);
    }

    Ok(DriftReport {
        width: rnn.width(),
        steps,
        lr,
        eta_star,
        param_drift,
        gram_drift,
        initial_loss,
        final_loss: loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RntkParams;

    fn task() -> (Vec<Sequence>, Vec<f64>) {
        let data = vec![
            Sequence::scalar(&[0.5, -0.3, 0.8]).unwrap(),
            Sequence::scalar(&[-1.0, 0.2]).unwrap(),
            Sequence::scalar(&[0.1, 0.9, -0.4, 0.6]).unwrap(),
            Sequence::scalar(&[1.2, 0.0, -0.7]).unwrap(),
        ];
        (data, vec![0.5, -0.5, 1.0, -1.0])
    }

    #[test]
    fn zero_steps_means_zero_drift() {
        let (data, y) = task();
        let rnn = FiniteRnn::new(&RntkParams::relu_default(), 32, 1, true, 0, 1).unwrap();
        let r = drift_experiment(&rnn, &data, &y, 0.1, 0).unwrap();
        assert_eq!(r.param_drift, 0.0);
        assert_eq!(r.gram_drift, 0.0);
        assert_eq!(r.initial_loss, r.final_loss);
    }

    #[test]
    fn training_below_the_bound_reduces_the_loss() {
        let (data, y) = task();
        let rnn = FiniteRnn::new(&RntkParams::relu_default(), 64, 1, true, 0, 2).unwrap();
        let probe = drift_experiment(&rnn, &data, &y, 1e-3, 0).unwrap();
        let r = drift_experiment(&rnn, &data, &y, 0.5 * probe.eta_star, 50).unwrap();
        assert!(r.final_loss < r.initial_loss);
        assert!(r.param_drift > 0.0 && r.gram_drift > 0.0);
    }

    #[test]
    fn huge_step_diverges_with_the_bound_in_the_error() {
        let (data, y) = task();
        let rnn = FiniteRnn::new(&RntkParams::relu_default(), 32, 1, true, 0, 3).unwrap();
        match drift_experiment(&rnn, &data, &y, 1e3, 50) {
            Err(Error::Diverged { bound, .. }) => assert!(bound > 0.0 && bound < 1e3),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn eta_star_of_identity_is_one() {
        assert_eq!(eta_star(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        assert!(eta_star(&DMatrix::zeros(2, 2)).is_err());
    }
}
