//! Analytic recurrent NTK and NNGP kernels.
//!
//! The forward GP kernel `Σ^{(ℓ,t,t')}` of a pair of sequences depends only
//! on `Σ^{(ℓ,t−1,t'−1)}` (recurrent path), on `Σ^{(ℓ−1,t,t')}` (input path)
//! and on the same-sequence diagonals `Σ^{(ℓ,t,t)}(x,x)`, `Σ^{(ℓ,t',t')}(x',x')`.
//! Every diagonal `t' − t = d` of the grid is therefore an independent
//! recursion. The kernel itself only needs the diagonal `d = τ = T' − T`
//! (the backward kernel `Π` vanishes elsewhere), so [`rntk_pair`] costs
//! `O(L·T)`; [`forward_table`] fills every diagonal for inspection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::RntkParams;
use crate::sequence::{dot, Sequence};
use crate::vphi::{vphi, vphi_prime, BivariateCov};

/// Which scalar kernel to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Theta,
    Nngp,
}

/// Per-layer values along one time diagonal, indexed `[layer][cell]`.
type Diagonal = Vec<Vec<f64>>;

/// Same-sequence diagonal `Σ^{(ℓ,t,t)}(x,x)` for every layer and step.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfTable {
    diag: Diagonal,
}

impl SelfTable {
    pub fn sigma(&self, layer: usize, t: usize) -> f64 {
        self.diag[layer][t]
    }

    pub fn len(&self) -> usize {
        self.diag[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag[0].is_empty()
    }
}

/// Forward GP kernel grid for one ordered pair `(x, x')`.
///
/// Indices are 0-based: `sigma(l, t, t2)` is `Σ^{(l+1, t+1, t2+1)}(x, x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    depth: usize,
    len_x: usize,
    len_y: usize,
    cross: Vec<f64>,
    self_x: SelfTable,
    self_y: SelfTable,
}

impl KernelTable {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len_x(&self) -> usize {
        self.len_x
    }

    pub fn len_y(&self) -> usize {
        self.len_y
    }

    pub fn sigma(&self, layer: usize, t: usize, t2: usize) -> f64 {
        self.cross[(layer * self.len_x + t) * self.len_y + t2]
    }

    pub fn diag_x(&self, layer: usize, t: usize) -> f64 {
        self.self_x.sigma(layer, t)
    }

    pub fn diag_y(&self, layer: usize, t: usize) -> f64 {
        self.self_y.sigma(layer, t)
    }

    /// The covariance `K^{(ℓ,t+1,t2+1)}` of the pre-activations at `(t, t2)`.
    pub fn cov(&self, layer: usize, t: usize, t2: usize) -> BivariateCov {
        BivariateCov::new(self.diag_x(layer, t), self.diag_y(layer, t2), self.sigma(layer, t, t2))
    }
}

/// Backward kernel `Π^{(ℓ,t,t+τ)}` on the aligned diagonal, indexed `[layer][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiBand {
    pub offset: usize,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOutput {
    pub theta: f64,
    pub nngp: f64,
    /// `Π^{(ℓ,t,t+τ)}` as `[layer][t]`, when requested.
    pub pi_trace: Option<Vec<Vec<f64>>>,
}

impl KernelOutput {
    pub fn get(&self, kind: KernelKind) -> f64 {
        match kind {
            KernelKind::Theta => self.theta,
            KernelKind::Nngp => self.nngp,
        }
    }
}

fn check_dims(x: &Sequence, y: &Sequence) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

/// Runs the forward recursion along the diagonal that starts at `(t0, t20)`.
///
/// With `diags = None` the pair is `(x, x)` on the main diagonal and the
/// recursion reads the same-sequence variances from its own output.
fn run_diagonal(
    params: &RntkParams,
    x: &Sequence,
    y: &Sequence,
    same: bool,
    diags: Option<(&SelfTable, &SelfTable)>,
    t0: usize,
    t20: usize,
    cells: usize,
) -> Result<Diagonal> {
    let depth = params.depth;
    let act = &params.activation;
    let inv_m = 1.0 / x.dim() as f64;
    let h2 = params.sigma_h * params.sigma_h;
    let mut out: Diagonal = vec![vec![0.0; cells]; depth];

    for l in 0..depth {
        let s = params.layer(l);
        let (w2, u2, b2) = (s.sigma_w * s.sigma_w, s.sigma_u * s.sigma_u, s.sigma_b * s.sigma_b);
        for k in 0..cells {
            let (t, t2) = (t0 + k, t20 + k);
            let input = if l == 0 {
                u2 * inv_m * dot(x.step(t), y.step(t2))
            } else {
                let (vx, vy) = match diags {
                    Some((dx, dy)) => (dx.sigma(l - 1, t), dy.sigma(l - 1, t2)),
                    None => (out[l - 1][k], out[l - 1][k]),
                };
                u2 * vphi(act, BivariateCov::new(vx, vy, out[l - 1][k]))?
            };
            let recurrent = if k == 0 {
                if t == 0 && t2 == 0 && same {
                    w2 * h2
                } else {
                    0.0
                }
            } else {
                let (vx, vy) = match diags {
                    Some((dx, dy)) => (dx.sigma(l, t - 1), dy.sigma(l, t2 - 1)),
                    None => (out[l][k - 1], out[l][k - 1]),
                };
                w2 * vphi(act, BivariateCov::new(vx, vy, out[l][k - 1]))?
            };
            let v = recurrent + input + b2;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("Sigma at layer {}, steps ({}, {})", l + 1, t + 1, t2 + 1)));
            }
            out[l][k] = v;
        }
    }
    Ok(out)
}

/// `Σ^{(ℓ,t,t)}(x,x)` for all layers and steps.
pub fn self_table(params: &RntkParams, x: &Sequence) -> Result<SelfTable> {
    let diag = run_diagonal(params, x, x, true, None, 0, 0, x.len())?;
    Ok(SelfTable { diag })
}

/// Fills the full forward grid `Σ^{(ℓ,t,t')}(x, x')` plus both same-sequence diagonals.
pub fn forward_table(params: &RntkParams, x: &Sequence, x2: &Sequence) -> Result<KernelTable> {
    check_dims(x, x2)?;
    let self_x = self_table(params, x)?;
    let self_y = self_table(params, x2)?;
    let same = x.same_values(x2);
    let (tx, ty) = (x.len(), x2.len());
    let mut cross = vec![0.0; params.depth * tx * ty];
    for d in -(tx as isize - 1)..=(ty as isize - 1) {
        let t0 = (-d).max(0) as usize;
        let t20 = d.max(0) as usize;
        let cells = (tx - t0).min(ty - t20);
        let diag = run_diagonal(params, x, x2, same, Some((&self_x, &self_y)), t0, t20, cells)?;
        for (l, row) in diag.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                cross[(l * tx + t0 + k) * ty + t20 + k] = v;
            }
        }
    }
    Ok(KernelTable {
        depth: params.depth,
        len_x: tx,
        len_y: ty,
        cross,
        self_x,
        self_y,
    })
}

/// Backward recursion for `Π` and the output GP kernel on the aligned diagonal.
///
/// `band[l][k] = Σ^{(l,k,k+τ)}(x,x')`; requires `len(x) ≤ len(x')`.
fn backward_band(params: &RntkParams, band: &Diagonal, self_x: &SelfTable, self_y: &SelfTable) -> Result<(PiBand, f64)> {
    let depth = params.depth;
    let tx = self_x.len();
    let tau = self_y.len() - tx;
    let act = &params.activation;
    let cov = |l: usize, k: usize| BivariateCov::new(self_x.sigma(l, k), self_y.sigma(l, k + tau), band[l][k]);

    let v2 = params.sigma_v * params.sigma_v;
    let mut pi = vec![vec![0.0; tx]; depth];
    for l in (0..depth).rev() {
        let w2 = params.layer(l).sigma_w.powi(2);
        let u2_above = if l + 1 < depth { params.layer(l + 1).sigma_u.powi(2) } else { 0.0 };
        for k in (0..tx).rev() {
            let dv = vphi_prime(act, cov(l, k))?;
            let mut acc = 0.0;
            if l + 1 == depth && k + 1 == tx {
                acc = v2;
            }
            if k + 1 < tx {
                acc += w2 * pi[l][k + 1];
            }
            if l + 1 < depth {
                acc += u2_above * pi[l + 1][k];
            }
            pi[l][k] = dv * acc;
        }
    }
    let nngp = v2 * vphi(act, cov(depth - 1, tx - 1))?;
    Ok((PiBand { offset: tau, values: pi }, nngp))
}

/// `Π^{(ℓ,t,t+τ)}` from a filled forward table (`τ = len_y − len_x ≥ 0`).
pub fn backward_table(params: &RntkParams, table: &KernelTable) -> Result<PiBand> {
    if table.len_x > table.len_y {
        return Err(Error::Shape(format!(
            "backward recursion needs the shorter sequence first ({} > {})",
            table.len_x, table.len_y
        )));
    }
    let tau = table.len_y - table.len_x;
    let band: Diagonal = (0..table.depth)
        .map(|l| (0..table.len_x).map(|k| table.sigma(l, k, k + tau)).collect())
        .collect();
    Ok(backward_band(params, &band, &table.self_x, &table.self_y)?.0)
}

fn assemble(params: &RntkParams, band: &Diagonal, pi: &PiBand, nngp: f64, traced: bool) -> KernelOutput {
    let mut theta = 0.0;
    for (pl, sl) in pi.values.iter().zip(band) {
        for (p, s) in pl.iter().zip(sl) {
            theta += p * s;
        }
    }
    let _ = params;
    KernelOutput {
        theta: theta + nngp,
        nngp,
        pi_trace: traced.then(|| pi.values.clone()),
    }
}

/// Kernel of a pair whose same-sequence tables are already known.
pub fn rntk_pair_prepared(
    params: &RntkParams,
    x: &Sequence,
    self_x: &SelfTable,
    y: &Sequence,
    self_y: &SelfTable,
    traced: bool,
) -> Result<KernelOutput> {
    check_dims(x, y)?;
    // the recursion aligns the ends of the sequences; keep the shorter first
    let (x, self_x, y, self_y) = if x.len() <= y.len() {
        (x, self_x, y, self_y)
    } else {
        (y, self_y, x, self_x)
    };
    let same = x.same_values(y);
    let tau = y.len() - x.len();
    let band = if same {
        self_x.diag.clone()
    } else {
        run_diagonal(params, x, y, false, Some((self_x, self_y)), 0, tau, x.len())?
    };
    let (pi, nngp) = backward_band(params, &band, self_x, self_y)?;
    let out = assemble(params, &band, &pi, nngp, traced);
    if !(out.theta.is_finite() && out.nngp.is_finite()) {
        return Err(Error::NonFinite(format!("kernel value {out:?}")));
    }
    Ok(out)
}

/// The RNTK `Θ` and NNGP kernel `K` of two sequences of possibly different lengths.
pub fn rntk_pair(params: &RntkParams, x: &Sequence, x2: &Sequence) -> Result<KernelOutput> {
    check_dims(x, x2)?;
    let sx = self_table(params, x)?;
    let sy = self_table(params, x2)?;
    rntk_pair_prepared(params, x, &sx, x2, &sy, false)
}

/// As [`rntk_pair`], also returning `Π^{(ℓ,t,t+τ)}`.
pub fn rntk_pair_traced(params: &RntkParams, x: &Sequence, x2: &Sequence) -> Result<KernelOutput> {
    check_dims(x, x2)?;
    let sx = self_table(params, x)?;
    let sy = self_table(params, x2)?;
    rntk_pair_prepared(params, x, &sx, x2, &sy, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vphi::Activation;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn relu(sw: f64, su: f64, sb: f64, sh: f64, sv: f64, depth: usize) -> RntkParams {
        RntkParams::new(sw, su, sb, sh, sv, depth, Activation::Relu).unwrap()
    }

    fn seq(v: &[f64]) -> Sequence {
        Sequence::scalar(v).unwrap()
    }

    fn vr(k1: f64, k2: f64, k3: f64) -> f64 {
        vphi(&Activation::Relu, BivariateCov::new(k1, k2, k3)).unwrap()
    }

    fn dvr(k1: f64, k2: f64, k3: f64) -> f64 {
        vphi_prime(&Activation::Relu, BivariateCov::new(k1, k2, k3)).unwrap()
    }

    #[test]
    fn first_step_values() {
        let x = seq(&[1.0]);
        let t = forward_table(&relu(SQRT_2, 1.0, 0.0, 0.0, 1.0, 1), &x, &x).unwrap();
        assert_abs_diff_eq!(t.sigma(0, 0, 0), 1.0, epsilon = 1e-15);

        let z = seq(&[0.0]);
        let t = forward_table(&relu(SQRT_2, 1.0, 0.0, 1.0, 1.0, 1), &z, &z).unwrap();
        assert_abs_diff_eq!(t.sigma(0, 0, 0), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn initial_state_term_only_for_identical_inputs() {
        let p = relu(SQRT_2, 1.0, 0.0, 1.0, 1.0, 1);
        let a = seq(&[0.5, 1.0]);
        let b = seq(&[0.5, 1.0 + 1e-9]);
        let taa = forward_table(&p, &a, &a.clone()).unwrap();
        let tab = forward_table(&p, &a, &b).unwrap();
        assert_abs_diff_eq!(taa.sigma(0, 0, 0) - tab.sigma(0, 0, 0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(taa.diag_x(0, 0), 2.0 + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn second_layer_first_step_hand_unrolled() {
        // layer 1: Σ = 1, so layer 2 sees σ_u²·V_φ[(1,1,1)] = 0.5
        let p = relu(SQRT_2, 1.0, 0.0, 0.0, 1.0, 2);
        let x = seq(&[1.0]);
        let t = forward_table(&p, &x, &x).unwrap();
        assert_abs_diff_eq!(t.sigma(1, 0, 0), vr(1.0, 1.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(t.sigma(1, 0, 0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn single_step_theta_hand_unrolled() {
        let p = relu(SQRT_2, 1.0, 0.0, 0.0, 1.0, 1);
        let x = seq(&[1.0]);
        let out = rntk_pair_traced(&p, &x, &x).unwrap();
        // Π = V'[(1,1,1)] = 1/2, Σ = 1, K = V[(1,1,1)] = 1/2
        assert_abs_diff_eq!(out.pi_trace.as_ref().unwrap()[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.nngp, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.theta, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn offset_backward_step_hand_unrolled() {
        // L = 1, T = 2, T' = 3, τ = 1, general scales
        let (sw, su, sb, sv) = (1.3, 0.8, 0.2, 1.7);
        let p = relu(sw, su, sb, 0.0, sv, 1);
        let x = seq(&[0.4, -1.1]);
        let y = seq(&[0.9, 0.3, -0.6]);
        let (w2, u2, b2) = (sw * sw, su * su, sb * sb);

        // same-sequence diagonals
        let sxx1 = u2 * 0.16 + b2;
        let sxx2 = w2 * vr(sxx1, sxx1, sxx1) + u2 * 1.21 + b2;
        let syy1 = u2 * 0.81 + b2;
        let syy2 = w2 * vr(syy1, syy1, syy1) + u2 * 0.09 + b2;
        let syy3 = w2 * vr(syy2, syy2, syy2) + u2 * 0.36 + b2;
        // aligned cross diagonal (1,2), (2,3)
        let s12 = u2 * 0.4 * 0.3 + b2;
        let s23 = w2 * vr(sxx1, syy2, s12) + u2 * (-1.1 * -0.6) + b2;
        let pi23 = sv * sv * dvr(sxx2, syy3, s23);
        let pi12 = w2 * dvr(sxx1, syy2, s12) * pi23;
        let k = sv * sv * vr(sxx2, syy3, s23);

        let table = forward_table(&p, &x, &y).unwrap();
        assert_abs_diff_eq!(table.sigma(0, 1, 2), s23, epsilon = 1e-14);
        let band = backward_table(&p, &table).unwrap();
        assert_eq!(band.offset, 1);
        assert_abs_diff_eq!(band.values[0][1], pi23, epsilon = 1e-14);
        assert_abs_diff_eq!(band.values[0][0], pi12, epsilon = 1e-14);

        let out = rntk_pair(&p, &x, &y).unwrap();
        assert_abs_diff_eq!(out.nngp, k, epsilon = 1e-14);
        assert_abs_diff_eq!(out.theta, pi12 * s12 + pi23 * s23 + k, epsilon = 1e-13);
    }

    #[test]
    fn two_layer_interior_pi_combines_both_paths() {
        let (sw, su, sv) = (1.2, 0.9, 1.1);
        let p = relu(sw, su, 0.1, 0.0, sv, 2);
        let x = seq(&[0.7, -0.2]);
        let y = seq(&[-0.5, 1.3]);
        let t = forward_table(&p, &x, &y).unwrap();
        let pi = backward_table(&p, &t).unwrap();
        let dv = |l: usize, k: usize| dvr(t.diag_x(l, k), t.diag_y(l, k), t.sigma(l, k, k));
        let top_last = sv * sv * dv(1, 1);
        let top_first = sw * sw * dv(1, 0) * top_last;
        let bottom_last = su * su * dv(0, 1) * top_last;
        let bottom_first = dv(0, 0) * (sw * sw * bottom_last + su * su * top_first);
        assert_abs_diff_eq!(pi.values[1][1], top_last, epsilon = 1e-14);
        assert_abs_diff_eq!(pi.values[1][0], top_first, epsilon = 1e-14);
        assert_abs_diff_eq!(pi.values[0][1], bottom_last, epsilon = 1e-14);
        assert_abs_diff_eq!(pi.values[0][0], bottom_first, epsilon = 1e-14);
    }

    #[test]
    fn band_evaluation_matches_full_table() {
        let p = relu(1.1, 0.7, 0.3, 0.4, 1.2, 3);
        let x = Sequence::new(vec![vec![0.3, -0.2], vec![1.0, 0.5], vec![-0.7, 0.1]]).unwrap();
        let y = Sequence::new(vec![
            vec![0.2, 0.2],
            vec![-0.4, 0.9],
            vec![0.6, -1.2],
            vec![0.1, 0.0],
            vec![1.5, 0.3],
        ])
        .unwrap();
        let table = forward_table(&p, &x, &y).unwrap();
        let pi = backward_table(&p, &table).unwrap();
        let mut theta = 0.0;
        for l in 0..3 {
            for k in 0..3 {
                theta += pi.values[l][k] * table.sigma(l, k, k + 2);
            }
        }
        let k = p.sigma_v.powi(2) * vr(table.diag_x(2, 2), table.diag_y(2, 4), table.sigma(2, 2, 4));
        let out = rntk_pair(&p, &x, &y).unwrap();
        assert_abs_diff_eq!(out.theta, theta + k, epsilon = 1e-12);
        assert_abs_diff_eq!(out.nngp, k, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_tables_are_nonnegative_and_cross_entries_psd() {
        let p = RntkParams::erf_default().with_depth(2).unwrap();
        let x = seq(&[0.3, -1.2, 0.8, 2.0]);
        let y = seq(&[-0.1, 0.5, 1.1]);
        let t = forward_table(&p, &x, &y).unwrap();
        for l in 0..2 {
            for a in 0..4 {
                assert!(t.diag_x(l, a) >= 0.0);
                for b in 0..3 {
                    let c = t.cov(l, a, b);
                    assert!(c.k3.abs() <= (c.k1 * c.k2).sqrt() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn argument_order_does_not_matter() {
        let p = relu(SQRT_2, 1.0, 0.2, 0.3, 1.0, 2);
        let x = seq(&[1.0, -1.0, 1.0]);
        let y = seq(&[0.3, 0.8]);
        let a = rntk_pair(&p, &x, &y).unwrap();
        let b = rntk_pair(&p, &y, &x).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.nngp, b.nngp);
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let p = relu(SQRT_2, 1.0, 0.0, 0.0, 1.0, 2);
        let z = seq(&[0.0, 0.0, 0.0]);
        let t = forward_table(&p, &z, &z).unwrap();
        for l in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(t.sigma(l, a, b), 0.0);
                }
            }
        }
        let out = rntk_pair_traced(&p, &z, &z).unwrap();
        assert_eq!(out.theta, 0.0);
        assert_eq!(out.nngp, 0.0);
        assert!(out.pi_trace.unwrap().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = RntkParams::relu_default();
        let x = seq(&[1.0]);
        let y = Sequence::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(rntk_pair(&p, &x, &y), Err(Error::DimensionMismatch { .. })));
        assert!(forward_table(&p, &x, &y).is_err());
    }

    #[test]
    fn backward_table_requires_shorter_first() {
        let p = RntkParams::relu_default();
        let t = forward_table(&p, &seq(&[1.0, 2.0]), &seq(&[1.0])).unwrap();
        assert!(backward_table(&p, &t).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sequence(max_len: usize) -> impl Strategy<Value = Sequence> {
            prop::collection::vec(-2.0f64..2.0, 1..=max_len).prop_map(|v| Sequence::scalar(&v).unwrap())
        }

        fn params() -> impl Strategy<Value = RntkParams> {
            (
                0.5f64..2.0,
                0.3f64..2.0,
                0.0f64..1.0,
                0.0f64..1.0,
                0.5f64..2.0,
                1usize..=3,
                any::<bool>(),
            )
                .prop_map(|(w, u, b, h, v, l, erf)| {
                    let act = if erf { Activation::Erf } else { Activation::Relu };
                    RntkParams::new(w, u, b, h, v, l, act).unwrap()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn symmetric_in_its_arguments(p in params(), x in sequence(8), y in sequence(8)) {
                let a = rntk_pair(&p, &x, &y).unwrap();
                let b = rntk_pair(&p, &y, &x).unwrap();
                prop_assert!((a.theta - b.theta).abs() <= 1e-12 * (1.0 + a.theta.abs()));
                prop_assert!((a.nngp - b.nngp).abs() <= 1e-12 * (1.0 + a.nngp.abs()));
            }

            #[test]
            fn self_kernel_dominates_nngp(p in params(), x in sequence(10)) {
                let out = rntk_pair(&p, &x, &x).unwrap();
                prop_assert!(out.nngp >= 0.0);
                prop_assert!(out.theta >= out.nngp);
            }

            #[test]
            fn cauchy_schwarz(p in params(), x in sequence(6), y in sequence(6)) {
                let xy = rntk_pair(&p, &x, &y).unwrap().theta;
                let xx = rntk_pair(&p, &x, &x).unwrap().theta;
                let yy = rntk_pair(&p, &y, &y).unwrap().theta;
                prop_assert!(xy * xy <= xx * yy * (1.0 + 1e-9) + 1e-12);
            }
        }
    }
}
