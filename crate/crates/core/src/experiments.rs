//! End-to-end experiment pipelines shared by the command line and the test suites.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::BaselineParams;
use crate::datasets::WindowedRegressionTask;
use crate::error::{Error, Result};
use crate::gram::{cross_gram_with, gram_with, GramMatrix, RntkKernel};
use crate::kernel::{rntk_pair, KernelKind};
use crate::learners::{cross_validate, fit_ridge, predict, snr_db};
use crate::oracle::FiniteRnn;
use crate::params::RntkParams;
use crate::rng::{self, streams};
use crate::sequence::Sequence;
use crate::vphi::Activation;

/// One kernel with fixed hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Rntk(RntkParams),
    Nngp(RntkParams),
    Baseline(BaselineParams),
}

impl KernelSpec {
    pub fn descriptor(&self) -> String {
        use crate::gram::SequenceKernel;
        match self {
            KernelSpec::Rntk(p) => RntkKernel::new(p.clone(), KernelKind::Theta).descriptor(),
            KernelSpec::Nngp(p) => RntkKernel::new(p.clone(), KernelKind::Nngp).descriptor(),
            KernelSpec::Baseline(b) => b.descriptor(),
        }
    }

    /// Baselines are padded to the longest of `all`, so train and test share one input dimension.
    fn fitted_to(&self, all: &[&Sequence]) -> KernelSpec {
        match self {
            KernelSpec::Baseline(b) => KernelSpec::Baseline(b.clone().padded_for(all.iter().copied())),
            other => other.clone(),
        }
    }

    pub fn gram(&self, data: &[Sequence]) -> Result<GramMatrix> {
        match self {
            KernelSpec::Rntk(p) => gram_with(&RntkKernel::new(p.clone(), KernelKind::Theta), data),
            KernelSpec::Nngp(p) => gram_with(&RntkKernel::new(p.clone(), KernelKind::Nngp), data),
            KernelSpec::Baseline(b) => gram_with(b, data),
        }
    }

    pub fn cross_gram(&self, rows: &[Sequence], cols: &[Sequence]) -> Result<GramMatrix> {
        match self {
            KernelSpec::Rntk(p) => cross_gram_with(&RntkKernel::new(p.clone(), KernelKind::Theta), rows, cols),
            KernelSpec::Nngp(p) => cross_gram_with(&RntkKernel::new(p.clone(), KernelKind::Nngp), rows, cols),
            KernelSpec::Baseline(b) => cross_gram_with(b, rows, cols),
        }
    }
}

/// A named set of candidate kernels searched by cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub name: String,
    pub candidates: Vec<KernelSpec>,
}

/// Hyperparameter grids used for the kernel comparisons.
pub mod grids {
    use super::*;

    pub const SIGMA_W_RNTK: [f64; 15] = [
        1.34,
        1.35,
        1.36,
        1.37,
        1.38,
        1.39,
        1.40,
        1.41,
        1.42,
        std::f64::consts::SQRT_2,
        1.43,
        1.44,
        1.45,
        1.46,
        1.47,
    ];
    pub const SIGMA_B_RNTK: [f64; 12] = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.0, 2.0];
    pub const SIGMA_H_RNTK: [f64; 5] = [0.0, 0.01, 0.1, 0.5, 1.0];
    pub const SIGMA_W_MLP: [f64; 6] = [0.5, 1.0, std::f64::consts::SQRT_2, 2.0, 2.5, 3.0];
    pub const SIGMA_B_MLP: [f64; 9] = [0.0, 0.01, 0.1, 0.2, 0.5, 0.8, 1.0, 2.0, 5.0];
    pub const RBF_ALPHA: [f64; 18] = [
        0.01, 0.05, 0.1, 0.2, 0.5, 0.6, 0.7, 0.8, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 30.0, 40.0, 100.0,
    ];
    pub const POLY_OFFSET: [f64; 6] = [0.0, 0.1, 0.2, 0.5, 1.0, 2.0];
    pub const LAMBDA: [f64; 7] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

    /// Single-layer ReLU RNTK over `σ_w × σ_b × σ_h` with `σ_u = σ_v = 1`.
    pub fn rntk() -> ModelFamily {
        let mut candidates = Vec::new();
        for &w in &SIGMA_W_RNTK {
            for &b in &SIGMA_B_RNTK {
                for &h in &SIGMA_H_RNTK {
                    let p = RntkParams::new(w, 1.0, b, h, 1.0, 1, Activation::Relu).expect("grid values are valid");
                    candidates.push(KernelSpec::Rntk(p));
                }
            }
        }
        ModelFamily {
            name: "rntk".into(),
            candidates,
        }
    }

    /// ReLU MLP NTK over `L ∈ 1..=10`, `σ_w`, `σ_b` on zero-padded inputs.
    pub fn mlp_ntk() -> ModelFamily {
        let mut candidates = Vec::new();
        for depth in 1..=10 {
            for &w in &SIGMA_W_MLP {
                for &b in &SIGMA_B_MLP {
                    candidates.push(KernelSpec::Baseline(
                        BaselineParams::mlp_ntk(depth, w, b).expect("grid values are valid"),
                    ));
                }
            }
        }
        ModelFamily {
            name: "mlp-ntk".into(),
            candidates,
        }
    }

    pub fn rbf() -> ModelFamily {
        ModelFamily {
            name: "rbf".into(),
            candidates: RBF_ALPHA
                .iter()
                .map(|&a| KernelSpec::Baseline(BaselineParams::rbf(a).expect("grid values are valid")))
                .collect(),
        }
    }

    pub fn polynomial() -> ModelFamily {
        let mut candidates = Vec::new();
        for d in 1..=5 {
            for &r in &POLY_OFFSET {
                candidates.push(KernelSpec::Baseline(
                    BaselineParams::polynomial(d, r).expect("grid values are valid"),
                ));
            }
        }
        ModelFamily {
            name: "poly".into(),
            candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyResult {
    pub name: String,
    pub snr_db: f64,
    pub chosen: String,
    pub lambda: f64,
    pub cv_mse: f64,
}

/// Selects kernel and `λ` by k-fold CV on the training windows, refits and
/// reports the test SNR against the noiseless next values.
pub fn evaluate_family(task: &WindowedRegressionTask, family: &ModelFamily, lambdas: &[f64], folds: usize) -> Result<FamilyResult> {
    if family.candidates.is_empty() || lambdas.is_empty() {
        return Err(Error::Empty(format!("{}: no candidates or no lambdas", family.name)));
    }
    let train = task.train_inputs();
    let test = task.test_inputs();
    let y = task.train_targets();
    let all: Vec<&Sequence> = train.iter().chain(&test).collect();
    let folds = folds.min(train.len());
    let scored: Vec<(f64, usize, usize)> = family
        .candidates
        .par_iter()
        .enumerate()
        .map(|(ci, spec)| {
            let spec = spec.fitted_to(&all);
            let g = spec.gram(&train)?;
            let scores = if folds >= 2 {
                cross_validate(&g, &y, lambdas, folds, task.config.seed)?
            } else {
                vec![0.0; lambdas.len()]
            };
            let (li, s) = scores
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, s)| (i, *s))
                .expect("lambdas are non-empty");
            Ok((s, ci, li))
        })
        .collect::<Result<_>>()?;
    // ties go to the earliest candidate, independent of scheduling
    let &(cv_mse, ci, li) = scored
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("candidates are non-empty");
    if !cv_mse.is_finite() {
        return Err(Error::Solve(format!("{}: every candidate failed to fit", family.name)));
    }
    let spec = family.candidates[ci].fitted_to(&all);
    let model = fit_ridge(&spec.gram(&train)?, &y, lambdas[li])?;
    let pred = predict(&model, &spec.cross_gram(&test, &train)?)?;
    Ok(FamilyResult {
        name: family.name.clone(),
        snr_db: snr_db(&task.test_truth(), &pred)?,
        chosen: spec.descriptor(),
        lambda: lambdas[li],
        cv_mse,
    })
}

/// SNR of the previous-time-step predictor.
pub fn previous_step_snr(task: &WindowedRegressionTask) -> Result<f64> {
    let pred: Vec<f64> = task.test.iter().map(|s| s.previous_step()).collect();
    snr_db(&task.test_truth(), &pred)
}

/// `count` pairs of i.i.d. standard normal sequences of length `len`.
pub fn random_pairs(len: usize, dim: usize, count: usize, seed: u64) -> Result<Vec<(Sequence, Sequence)>> {
    (0..count)
        .map(|i| {
            let mut s = rng::substream(seed, streams::PAIRS, &[i as u64]);
            let x = Sequence::from_flat(rng::normal_vec(&mut s, len * dim), dim)?;
            let y = Sequence::from_flat(rng::normal_vec(&mut s, len * dim), dim)?;
            Ok((x, y))
        })
        .collect()
}

/// Memory kept for concurrently alive networks.
const NETWORK_MEMORY_BUDGET: f64 = 2e9;

/// `(Θ, Θ̂₀)` per pair, each pair on its own freshly initialised network.
pub fn empirical_vs_analytic(
    params: &RntkParams,
    pairs: &[(Sequence, Sequence)],
    width: usize,
    tied: bool,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let max_len = pairs.iter().map(|(x, y)| x.len().max(y.len())).max().unwrap_or(1);
    let copies = if tied { 1 } else { max_len };
    let bytes = 8.0 * (params.depth * copies * width * width) as f64;
    let concurrent = ((NETWORK_MEMORY_BUDGET / bytes) as usize).max(1);
    let mut out = Vec::with_capacity(pairs.len());
    for (c, chunk) in pairs.chunks(concurrent).enumerate() {
        let part: Vec<(f64, f64)> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, (x, y))| {
                let i = c * concurrent + k;
                let net_seed = rng::derive_seed(seed, streams::PAIRS, &[i as u64, u64::from(tied)]);
                let rnn = FiniteRnn::new(params, width, x.dim(), tied, max_len, net_seed)?;
                let analytic = rntk_pair(params, x, y)?.theta;
                Ok((analytic, rnn.empirical_ntk(x, y)?.value))
            })
            .collect::<Result<_>>()?;
        out.extend(part);
    }
    Ok(out)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentile bootstrap interval of the median.
pub fn bootstrap_median_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    let mut s = rng::substream(seed, streams::BOOTSTRAP, &[values.len() as u64]);
    let mut meds: Vec<f64> = (0..resamples)
        .map(|_| {
            let draw: Vec<f64> = (0..values.len()).map(|_| values[s.random_range(0..values.len())]).collect();
            median(&draw)
        })
        .collect();
    meds.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    let idx = |q: f64| ((q * resamples as f64).floor() as usize).min(resamples - 1);
    (meds[idx(a)], meds[idx(1.0 - a)])
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub width: usize,
    pub tied: bool,
    pub pairs: usize,
    pub median_rel_error: f64,
    pub median_signed_rel_error: f64,
}

/// Median relative error of the empirical NTK at each width.
pub fn convergence_sweep(
    params: &RntkParams,
    pairs: &[(Sequence, Sequence)],
    widths: &[usize],
    tied: bool,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    widths
        .iter()
        .map(|&width| {
            let vals = empirical_vs_analytic(params, pairs, width, tied, seed)?;
            let signed: Vec<f64> = vals.iter().map(|(a, e)| (e - a) / a).collect();
            let abs: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
            Ok(ConvergenceRow {
                width,
                tied,
                pairs: pairs.len(),
                median_rel_error: median(&abs),
                median_signed_rel_error: median(&signed),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub analytic: f64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
}

/// Kernel between `{1, −1, 1}` and `{cos α, sin α}` along a grid of angles,
/// with the empirical NTK averaged over `seeds` networks of width `width`.
pub fn alpha_curve(params: &RntkParams, alphas: &[f64], width: usize, seeds: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    let x = Sequence::scalar(&[1.0, -1.0, 1.0])?;
    let nets: Vec<FiniteRnn> = (0..seeds)
        .map(|s| FiniteRnn::new(params, width, 1, true, 0, rng::derive_seed(seed, streams::INIT, &[s as u64])))
        .collect::<Result<_>>()?;
    alphas
        .par_iter()
        .map(|&a| {
            let y = Sequence::scalar(&[a.cos(), a.sin()])?;
            let analytic = rntk_pair(params, &x, &y)?.theta;
            let emp: Vec<f64> = nets
                .iter()
                .map(|n| n.empirical_ntk(&x, &y).map(|r| r.value))
                .collect::<Result<_>>()?;
            let k = emp.len() as f64;
            let mean = emp.iter().sum::<f64>() / k;
            let var = if emp.len() > 1 {
                emp.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            Ok(CurvePoint {
                alpha: a,
                analytic,
                empirical_mean: mean,
                empirical_std: var.sqrt(),
            })
        })
        .collect()
}
