//! Baseline kernels on flattened sequences: RBF, polynomial and the MLP NTK.

use crate::error::{Error, Result};
use crate::gram::SequenceKernel;
use crate::sequence::{dot, Sequence};
use crate::vphi::{vphi, vphi_prime, Activation, BivariateCov};

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineKind {
    Rbf {
        alpha: f64,
    },
    Polynomial {
        degree: u32,
        offset: f64,
    },
    MlpNtk {
        depth: usize,
        sigma_w: f64,
        sigma_b: f64,
        activation: Activation,
    },
}

/// How sequences of different lengths are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Append zero steps at the tail.
    #[default]
    ZeroPadToMax,
    ErrorOnMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub kind: BaselineKind,
    pub padding: Padding,
    /// Common padded length in steps. Set it to the longest sequence of the
    /// dataset so that every pair sees the same input dimension; the MLP NTK
    /// depends on it through `1/m`.
    pub pad_len: Option<usize>,
}

impl BaselineParams {
    pub fn new(kind: BaselineKind) -> Result<Self> {
        let p = BaselineParams {
            kind,
            padding: Padding::ZeroPadToMax,
            pad_len: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rbf(alpha: f64) -> Result<Self> {
        Self::new(BaselineKind::Rbf { alpha })
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        Self::new(BaselineKind::Polynomial { degree, offset })
    }

    pub fn mlp_ntk(depth: usize, sigma_w: f64, sigma_b: f64) -> Result<Self> {
        Self::new(BaselineKind::MlpNtk {
            depth,
            sigma_w,
            sigma_b,
            activation: Activation::Relu,
        })
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    /// Pads to the longest sequence among `data`.
    pub fn padded_for<'a>(mut self, data: impl IntoIterator<Item = &'a Sequence>) -> Self {
        self.pad_len = data.into_iter().map(Sequence::len).max();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        match &self.kind {
            BaselineKind::Rbf { alpha } if !(alpha.is_finite() && *alpha > 0.0) => bad(format!("rbf alpha must be positive, got {alpha}")),
            BaselineKind::Polynomial { degree, offset } if *degree < 1 || !(offset.is_finite() && *offset >= 0.0) => {
                bad(format!("polynomial needs degree >= 1 and offset >= 0, got d={degree}, r={offset}"))
            }
            BaselineKind::MlpNtk {
                depth, sigma_w, sigma_b, ..
            } if *depth < 1 || !(sigma_w.is_finite() && *sigma_w > 0.0) || !(sigma_b.is_finite() && *sigma_b >= 0.0) => bad(format!(
                "mlp-ntk needs depth >= 1, sigma_w > 0, sigma_b >= 0, got L={depth}, sigma_w={sigma_w}, sigma_b={sigma_b}"
            )),
            _ => Ok(()),
        }
    }

    pub fn descriptor(&self) -> String {
        let pad = match self.padding {
            Padding::ZeroPadToMax => "zero-pad",
            Padding::ErrorOnMismatch => "strict",
        };
        match &self.kind {
            BaselineKind::Rbf { alpha } => format!("rbf(alpha={alpha},{pad})"),
            BaselineKind::Polynomial { degree, offset } => format!("poly(d={degree},r={offset},{pad})"),
            BaselineKind::MlpNtk {
                depth,
                sigma_w,
                sigma_b,
                activation,
            } => format!(
                "mlp-ntk(L={depth},sigma_w={sigma_w},sigma_b={sigma_b},phi={},{pad})",
                activation.label()
            ),
        }
    }
}

/// Flattened, tail-padded copies of a pair.
fn flatten_pair(params: &BaselineParams, x: &Sequence, y: &Sequence) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    if params.padding == Padding::ErrorOnMismatch && x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let len = x.len().max(y.len()).max(params.pad_len.unwrap_or(0));
    Ok((x.padded_flat(len), y.padded_flat(len)))
}

fn mlp_ntk(depth: usize, sigma_w: f64, sigma_b: f64, act: &Activation, x: &[f64], y: &[f64]) -> Result<f64> {
    let (w2, b2) = (sigma_w * sigma_w, sigma_b * sigma_b);
    let m = x.len() as f64;
    // Σ^{(ℓ)} for (x,x), (y,y) and (x,y)
    let mut sxx = w2 / m * dot(x, x) + b2;
    let mut syy = w2 / m * dot(y, y) + b2;
    let mut sxy = w2 / m * dot(x, y) + b2;
    let mut sigmas = Vec::with_capacity(depth);
    let mut dots = Vec::with_capacity(depth);
    for l in 1..=depth {
        sigmas.push(sxy);
        let k = BivariateCov::new(sxx, syy, sxy);
        // the last layer feeds the unit-variance readout
        let scale = if l == depth { 1.0 } else { w2 };
        dots.push(scale * vphi_prime(act, k)?);
        if l < depth {
            let kx = BivariateCov::new(sxx, sxx, sxx);
            let ky = BivariateCov::new(syy, syy, syy);
            sxy = w2 * vphi(act, k)? + b2;
            sxx = w2 * vphi(act, kx)? + b2;
            syy = w2 * vphi(act, ky)? + b2;
        }
    }
    let nngp = vphi(act, BivariateCov::new(sxx, syy, sxy))?;
    let mut total = nngp;
    let mut tail = 1.0;
    for l in (0..depth).rev() {
        tail *= dots[l];
        total += sigmas[l] * tail;
    }
    Ok(total)
}

/// A baseline kernel value for one pair.
pub fn baseline_pair(params: &BaselineParams, x: &Sequence, y: &Sequence) -> Result<f64> {
    let (a, b) = flatten_pair(params, x, y)?;
    let v = match &params.kind {
        BaselineKind::Rbf { alpha } => {
            let d2: f64 = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum();
            (-alpha * d2).exp()
        }
        BaselineKind::Polynomial { degree, offset } => (offset + dot(&a, &b)).powi(*degree as i32),
        BaselineKind::MlpNtk {
            depth,
            sigma_w,
            sigma_b,
            activation,
        } => mlp_ntk(*depth, *sigma_w, *sigma_b, activation, &a, &b)?,
    };
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{} kernel value", params.descriptor())));
    }
    Ok(v)
}

impl SequenceKernel for BaselineParams {
    type Prepared = ();

    fn prepare(&self, _: &Sequence) -> Result<()> {
        Ok(())
    }

    fn eval(&self, x: &Sequence, _: &(), y: &Sequence, _: &()) -> Result<f64> {
        baseline_pair(self, x, y)
    }

    fn descriptor(&self) -> String {
        BaselineParams::descriptor(self)
    }
}
