//! Gaussian expectation operators `V_φ[K] = E[φ(z₁)φ(z₂)]` and
//! `V_φ'[K] = E[φ'(z₁)φ'(z₂)]` for `(z₁, z₂) ~ N(0, K)`.
//!
//! ReLU and erf use closed forms (arc-cosine kernel and the arcsine kernel).
//! Any other nonlinearity goes through a Monte Carlo estimate that reuses one
//! fixed batch of standard normal pairs for every evaluation, so the estimate
//! is a deterministic, smooth function of `K`.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// The 2×2 covariance `[[k1, k3], [k3, k2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateCov {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl BivariateCov {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Self {
        Self { k1, k2, k3 }
    }

    /// Clamps tiny negative variances to zero and `k3` into `±√(k1·k2)`.
    pub fn clamped(self) -> Result<Self> {
        if !(self.k1.is_finite() && self.k2.is_finite() && self.k3.is_finite()) {
            return Err(Error::NonFinite(format!("covariance {self:?}")));
        }
        let k1 = self.k1.max(0.0);
        let k2 = self.k2.max(0.0);
        let bound = (k1 * k2).sqrt();
        Ok(Self {
            k1,
            k2,
            k3: self.k3.clamp(-bound, bound),
        })
    }

    /// Correlation clamped to [-1, 1]; `None` when a variance is zero.
    pub fn correlation(&self) -> Option<f64> {
        let denom = (self.k1 * self.k2).sqrt();
        if denom > 0.0 {
            Some((self.k3 / denom).clamp(-1.0, 1.0))
        } else {
            None
        }
    }

    pub fn scaled(self, a: f64) -> Self {
        Self::new(a * self.k1, a * self.k2, a * self.k3)
    }
}

/// A nonlinearity evaluated by Monte Carlo.
#[derive(Clone)]
pub struct CustomActivation {
    name: String,
    phi: fn(f64) -> f64,
    dphi: fn(f64) -> f64,
    seed: u64,
    samples: Arc<[(f64, f64)]>,
}

impl CustomActivation {
    pub fn new(name: impl Into<String>, phi: fn(f64) -> f64, dphi: fn(f64) -> f64, mc_samples: usize, seed: u64) -> Result<Self> {
        if mc_samples == 0 {
            return Err(Error::InvalidParam("mc_samples must be positive".into()));
        }
        let mut stream = rng::substream(seed, streams::KERNEL_MC, &[]);
        let raw = rng::normal_vec(&mut stream, 2 * mc_samples);
        let samples: Arc<[(f64, f64)]> = raw.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Ok(Self {
            name: name.into(),
            phi,
            dphi,
            seed,
            samples,
        })
    }

    /// Monte Carlo versions of the built-in nonlinearities, plus tanh.
    pub fn named(name: &str, mc_samples: usize, seed: u64) -> Result<Self> {
        let (phi, dphi): (fn(f64) -> f64, fn(f64) -> f64) = match name {
            "relu" => (relu, relu_prime),
            "erf" => (libm::erf, erf_prime),
            "tanh" => (f64::tanh, tanh_prime),
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown Monte Carlo activation '{other}' (expected relu, erf or tanh)"
                )))
            }
        };
        Self::new(name, phi, dphi, mc_samples, seed)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mc_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn expectation(&self, k: &BivariateCov, f: fn(f64) -> f64) -> f64 {
        // z1 = a·√k1, z2 = a·k3/√k1 + b·√(k2 − k3²/k1)
        let (s1, c21, s2) = if k.k1 > 0.0 {
            let s1 = k.k1.sqrt();
            let c21 = k.k3 / s1;
            (s1, c21, (k.k2 - c21 * c21).max(0.0).sqrt())
        } else {
            (0.0, 0.0, k.k2.sqrt())
        };
        let sum: f64 = self.samples.iter().map(|&(a, b)| f(s1 * a) * f(c21 * a + s2 * b)).sum();
        sum / self.samples.len() as f64
    }
}

impl fmt::Debug for CustomActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomActivation")
            .field("name", &self.name)
            .field("mc_samples", &self.samples.len())
            .field("seed", &self.seed)
            .finish()
    }
}

impl PartialEq for CustomActivation {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.seed == other.seed && self.samples.len() == other.samples.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Erf,
    Custom(CustomActivation),
}

impl Activation {
    pub fn phi(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => relu(z),
            Activation::Erf => libm::erf(z),
            Activation::Custom(c) => (c.phi)(z),
        }
    }

    /// Derivative; ReLU'(0) is taken as 0.
    pub fn dphi(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => relu_prime(z),
            Activation::Erf => erf_prime(z),
            Activation::Custom(c) => (c.dphi)(z),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::Erf => "erf".into(),
            Activation::Custom(c) => format!("mc-{}({}x{})", c.name, c.mc_samples(), c.seed),
        }
    }
}

pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

pub fn relu_prime(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn erf_prime(z: f64) -> f64 {
    FRAC_2_SQRT_PI * (-z * z).exp()
}

fn tanh_prime(z: f64) -> f64 {
    let t = z.tanh();
    1.0 - t * t
}

/// `E[φ(z₁)φ(z₂)]`.
pub fn vphi(activation: &Activation, k: BivariateCov) -> Result<f64> {
    let k = k.clamped()?;
    let v = match activation {
        Activation::Relu => match k.correlation() {
            Some(c) => {
                let scale = (k.k1 * k.k2).sqrt();
                (c * (PI - c.acos()) + (1.0 - c * c).sqrt()) * scale / (2.0 * PI)
            }
            None => 0.0,
        },
        Activation::Erf => {
            let arg = 2.0 * k.k3 / ((1.0 + 2.0 * k.k1) * (1.0 + 2.0 * k.k2)).sqrt();
            2.0 / PI * arg.clamp(-1.0, 1.0).asin()
        }
        Activation::Custom(c) => c.expectation(&k, c.phi),
    };
    Ok(v)
}

/// `E[φ'(z₁)φ'(z₂)]`.
pub fn vphi_prime(activation: &Activation, k: BivariateCov) -> Result<f64> {
    let k = k.clamped()?;
    let v = match activation {
        Activation::Relu => match k.correlation() {
            Some(c) => (PI - c.acos()) / (2.0 * PI),
            None if k.k1 == 0.0 && k.k2 == 0.0 => 0.0,
            // one variance vanishes: limit of the closed form at c = 0
            None => 0.25,
        },
        Activation::Erf => {
            let radicand = (1.0 + 2.0 * k.k1) * (1.0 + 2.0 * k.k2) - 4.0 * k.k3 * k.k3;
            if radicand <= 0.0 {
                return Err(Error::NonFinite(format!("erf derivative kernel radicand {radicand} for {k:?}")));
            }
            4.0 / (PI * radicand.sqrt())
        }
        Activation::Custom(c) => c.expectation(&k, c.dphi),
    };
    Ok(v)
}
