//! Kernel ridge regression and one-hot ridge classification on precomputed Grams.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::rng::{self, streams};

/// Largest accepted condition number of `K + λI`.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative jitter `ε·trace/N` tried when `λ = 0` and `K` is singular.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeModel {
    pub alpha: Vec<f64>,
    pub lambda: f64,
    /// Diagonal jitter added on top of `lambda` (0 unless the fallback fired).
    pub jitter: f64,
    pub train_ids: Vec<String>,
}

fn check_gram(gram: &GramMatrix) -> Result<()> {
    if !gram.is_square() || gram.nrows() == 0 {
        return Err(Error::Shape(format!(
            "ridge needs a non-empty square Gram matrix, got {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if gram.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram matrix entry".into()));
    }
    Ok(())
}

fn condition(a: &DMatrix<f64>) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `(K + λI) X = B` column-wise with Cholesky and one refinement step.
fn solve_spd(k: &DMatrix<f64>, lambda: f64, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let shifted = |shift: f64| k + DMatrix::identity(n, n) * shift;
    let mut jitter = 0.0;
    let mut a = shifted(lambda);
    if condition(&a) > MAX_CONDITION {
        if lambda > 0.0 {
            return Err(Error::Solve(format!(
                "K + lambda I is ill-conditioned (condition > {MAX_CONDITION:e}); increase lambda above {lambda}"
            )));
        }
        jitter = JITTER * k.trace() / n as f64;
        a = shifted(jitter);
        if !(jitter > 0.0) || condition(&a) > MAX_CONDITION {
            return Err(Error::Solve(format!(
                "Gram matrix is singular (condition > {MAX_CONDITION:e} even with jitter); use lambda > 0"
            )));
        }
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solve("Cholesky factorisation failed; increase lambda".into()))?;
    let mut x = chol.solve(b);
    let r = b - &a * &x;
    x += chol.solve(&r);
    let res = (b - &a * &x).norm();
    if res > 1e-8 * b.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Solve(format!("residual {res:e} too large; increase lambda")));
    }
    Ok((x, jitter))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParam(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

pub fn fit_ridge(gram: &GramMatrix, targets: &[f64], lambda: f64) -> Result<RidgeModel> {
    check_gram(gram)?;
    check_lambda(lambda)?;
    if targets.len() != gram.nrows() {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: gram.nrows(),
        });
    }
    let y = DMatrix::from_column_slice(targets.len(), 1, targets);
    let (alpha, jitter) = solve_spd(&gram.values, lambda, &y)?;
    Ok(RidgeModel {
        alpha: alpha.column(0).iter().copied().collect(),
        lambda,
        jitter,
        train_ids: gram.row_ids.clone(),
    })
}

fn check_cross(cross: &GramMatrix, train_ids: &[String]) -> Result<()> {
    if cross.ncols() != train_ids.len() {
        return Err(Error::Shape(format!(
            "cross Gram has {} columns, model was trained on {} points",
            cross.ncols(),
            train_ids.len()
        )));
    }
    if cross.col_ids != train_ids {
        return Err(Error::Shape("cross Gram columns are not in training order".into()));
    }
    Ok(())
}

/// `cross · α` where `cross` is the `N_test × N_train` kernel block.
pub fn predict(model: &RidgeModel, cross: &GramMatrix) -> Result<Vec<f64>> {
    check_cross(cross, &model.train_ids)?;
    let p = &cross.values * DVector::from_column_slice(&model.alpha);
    Ok(p.iter().copied().collect())
}

/// One-hot ridge regression decoded by argmax.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeClassifier {
    pub classes: Vec<String>,
    /// `N_train × classes` coefficients, row-major.
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub jitter: f64,
    pub train_ids: Vec<String>,
}

pub fn fit_classifier(gram: &GramMatrix, labels: &[String], lambda: f64) -> Result<RidgeClassifier> {
    check_gram(gram)?;
    check_lambda(lambda)?;
    if labels.len() != gram.nrows() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: gram.nrows(),
        });
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut y = DMatrix::zeros(labels.len(), classes.len());
    for (i, l) in labels.iter().enumerate() {
        let c = classes.binary_search(l).expect("label is in the class list");
        y[(i, c)] = 1.0;
    }
    let (alpha, jitter) = solve_spd(&gram.values, lambda, &y)?;
    Ok(RidgeClassifier {
        alpha: alpha.transpose().as_slice().to_vec(),
        classes,
        lambda,
        jitter,
        train_ids: gram.row_ids.clone(),
    })
}

impl RidgeClassifier {
    pub fn predict(&self, cross: &GramMatrix) -> Result<Vec<String>> {
        check_cross(cross, &self.train_ids)?;
        let a = DMatrix::from_row_slice(self.train_ids.len(), self.classes.len(), &self.alpha);
        let scores = &cross.values * a;
        Ok(scores.row_iter().map(|r| self.classes[r.transpose().argmax().0].clone()).collect())
    }
}

/// Shuffled fold assignment; fold sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParam(format!("need 2 <= folds <= {n}, got {k}")));
    }
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::substream(seed, streams::WINDOWS, &[n as u64, k as u64]));
    let mut folds = vec![Vec::new(); k];
    for (i, v) in idx.into_iter().enumerate() {
        folds[i % k].push(v);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Mean validation squared error of ridge regression for each `λ`.
///
/// Folds run in parallel; a `λ` whose solve fails scores `+∞`.
pub fn cross_validate(gram: &GramMatrix, targets: &[f64], lambdas: &[f64], folds: usize, seed: u64) -> Result<Vec<f64>> {
    check_gram(gram)?;
    if targets.len() != gram.nrows() {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: gram.nrows(),
        });
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let split = kfold_indices(targets.len(), folds, seed)?;
    let per_fold: Vec<Vec<f64>> = split
        .par_iter()
        .map(|val| {
            let train: Vec<usize> = (0..targets.len()).filter(|i| val.binary_search(i).is_err()).collect();
            let k = submatrix(&gram.values, &train, &train);
            let cross = submatrix(&gram.values, val, &train);
            let y = DMatrix::from_fn(train.len(), 1, |i, _| targets[train[i]]);
            lambdas
                .iter()
                .map(|&l| match solve_spd(&k, l, &y) {
                    Ok((alpha, _)) => {
                        let pred = &cross * alpha;
                        val.iter()
                            .enumerate()
                            .map(|(i, &v)| (pred[(i, 0)] - targets[v]).powi(2))
                            .sum::<f64>()
                    }
                    Err(_) => f64::INFINITY,
                })
                .collect()
        })
        .collect();
    Ok((0..lambdas.len())
        .map(|j| per_fold.iter().map(|f| f[j]).sum::<f64>() / targets.len() as f64)
        .collect())
}

/// Relative residual below which a prediction counts as exact; it matches
/// the residual guaranteed by the ridge solve.
pub const EXACT_FIT: f64 = 1e-8;

/// `10·log10(‖signal‖² / ‖signal − prediction‖²)`; `+∞` when
/// `‖signal − prediction‖ ≤ EXACT_FIT·‖signal‖`.
pub fn snr_db(signal: &[f64], prediction: &[f64]) -> Result<f64> {
    if signal.len() != prediction.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: prediction.len(),
        });
    }
    let s: f64 = signal.iter().map(|v| v * v).sum();
    let e: f64 = signal.iter().zip(prediction).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(if e <= EXACT_FIT * EXACT_FIT * s {
        f64::INFINITY
    } else {
        10.0 * (s / e).log10()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, substream};
    use approx::assert_abs_diff_eq;

    fn labelled(values: DMatrix<f64>) -> GramMatrix {
        let ids: Vec<String> = (1..=values.nrows()).map(|i| i.to_string()).collect();
        let cols: Vec<String> = (1..=values.ncols()).map(|i| i.to_string()).collect();
        GramMatrix {
            values,
            row_ids: ids,
            col_ids: cols,
            descriptor: "test".into(),
        }
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, "test", &[]);
        let a = DMatrix::from_vec(n, rank, normal_vec(&mut rng, n * rank));
        &a * a.transpose()
    }

    #[test]
    fn scalar_case() {
        let g = labelled(DMatrix::from_element(1, 1, 2.0));
        let m = fit_ridge(&g, &[3.0], 0.5).unwrap();
        let p = predict(&m, &g).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 * 3.0 / 2.5, epsilon = 1e-14);
    }

    #[test]
    fn interpolates_without_regularisation() {
        let g = labelled(random_psd(8, 12, 1));
        let y: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let m = fit_ridge(&g, &y, 0.0).unwrap();
        assert_eq!(m.jitter, 0.0);
        for (p, t) in predict(&m, &g).unwrap().iter().zip(&y) {
            assert_abs_diff_eq!(p, t, epsilon = 1e-6);
        }
        let zero = labelled(DMatrix::zeros(3, 8));
        assert!(predict(&m, &zero).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jitter_fallback_and_singular_errors() {
        // rank one: rescued by the jitter, reported on the model
        let g = labelled(DMatrix::from_element(2, 2, 1.0));
        let m = fit_ridge(&g, &[1.0, 1.0], 0.0).unwrap();
        assert!(m.jitter > 0.0);
        // a small explicit lambda is not silently increased
        assert!(matches!(fit_ridge(&g, &[1.0, 1.0], 1e-14), Err(Error::Solve(_))));
        assert!(fit_ridge(&g, &[1.0, 1.0], 1e-3).is_ok());
        let zero = labelled(DMatrix::zeros(2, 2));
        assert!(matches!(fit_ridge(&zero, &[1.0, 0.0], 0.0), Err(Error::Solve(_))));
        assert!(fit_ridge(&g, &[1.0, 1.0], -1.0).is_err());
        assert!(fit_ridge(&g, &[1.0], 1.0).is_err());
    }

    #[test]
    fn matches_pseudo_inverse_oracle() {
        for seed in 0..5 {
            let n = 10 + 8 * seed as usize;
            let k = random_psd(n, n + 5, seed);
            let lambda = 0.1;
            let mut rng = substream(seed, "y", &[]);
            let y = normal_vec(&mut rng, n);
            let m = fit_ridge(&labelled(k.clone()), &y, lambda).unwrap();
            let a = k + DMatrix::identity(n, n) * lambda;
            let pinv = a.pseudo_inverse(1e-14).unwrap();
            let oracle = pinv * DVector::from_vec(y);
            for (x, o) in m.alpha.iter().zip(oracle.iter()) {
                assert!((x - o).abs() < 1e-8, "{x} vs {o}");
            }
        }
    }

    #[test]
    fn fit_degrades_monotonically_with_lambda() {
        let g = labelled(random_psd(12, 6, 3));
        let y: Vec<f64> = (0..12).map(|i| (0.7 * i as f64).cos()).collect();
        let mut last = 0.0;
        for lambda in [1e-6, 1e-3, 1e-1, 1.0, 10.0, 100.0] {
            let m = fit_ridge(&g, &y, lambda).unwrap();
            let p = predict(&m, &g).unwrap();
            let r: f64 = p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(r >= last - 1e-12);
            last = r;
        }
    }

    #[test]
    fn column_order_is_checked() {
        let g = labelled(random_psd(3, 3, 4));
        let m = fit_ridge(&g, &[1.0, 2.0, 3.0], 0.1).unwrap();
        let mut c = g.clone();
        c.col_ids.reverse();
        assert!(predict(&m, &c).is_err());
        assert!(predict(&m, &labelled(DMatrix::zeros(1, 2))).is_err());
    }

    #[test]
    fn classifier_separates_blocks() {
        let mut k = DMatrix::from_element(4, 4, 0.1);
        for i in 0..4 {
            k[(i, i)] = 1.0;
        }
        k[(0, 1)] = 0.9;
        k[(1, 0)] = 0.9;
        k[(2, 3)] = 0.9;
        k[(3, 2)] = 0.9;
        let labels: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let c = fit_classifier(&labelled(k.clone()), &labels, 0.01).unwrap();
        assert_eq!(c.predict(&labelled(k)).unwrap(), labels);
    }

    #[test]
    fn kfold_partitions() {
        let f = kfold_indices(10, 3, 1).unwrap();
        let mut all: Vec<usize> = f.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(f.iter().all(|x| x.len() == 3 || x.len() == 4));
        assert!(kfold_indices(3, 4, 0).is_err());
    }

    #[test]
    fn cross_validation_prefers_reasonable_lambda() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let g = labelled(DMatrix::from_fn(20, 20, |i, j| (-(x[i] - x[j]).powi(2)).exp()));
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let scores = cross_validate(&g, &y, &[1e-3, 1.0, 1e6], 4, 0).unwrap();
        assert!(scores[2] > scores[0].min(scores[1]));
        assert_eq!(scores, cross_validate(&g, &y, &[1e-3, 1.0, 1e6], 4, 0).unwrap());
    }

    #[test]
    fn snr_definition() {
        assert_eq!(snr_db(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), f64::INFINITY);
        assert_eq!(snr_db(&[1.0, 2.0], &[1.0 + 1e-12, 2.0]).unwrap(), f64::INFINITY);
        assert!(snr_db(&[1.0, 2.0], &[1.0 + 1e-6, 2.0]).unwrap().is_finite());
        assert_abs_diff_eq!(snr_db(&[3.0, 4.0], &[3.0, 3.5]).unwrap(), 20.0, epsilon = 1e-12);
    }
}
