//! JSON experiment configuration. Every field is optional; command-line
//! flags take precedence over the file, and the file over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use rntk::datasets::TaskConfig;
use rntk::{Activation, CustomActivation, Error, RntkParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub kernel: Option<KernelConfig>,
    pub baseline: Option<BaselineConfig>,
    pub task: Option<TaskConfig>,
    pub sensitivity: Option<SensitivityConfig>,
    pub converge: Option<ConvergeConfig>,
    pub drift: Option<DriftConfig>,
    pub regress: Option<RegressConfig>,
    pub curve: Option<CurveConfig>,
}

/// RNTK hyperparameters. Unset fields come from `preset` (`relu` or `erf`).
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Starting point for unset sigmas: relu = {√2, 1, 0, 0, σ_v=1}, erf = {1, 0.01, 0.05, 0, σ_v=1}
    #[arg(long)]
    pub preset: Option<String>,
    /// relu, erf, or a Monte Carlo activation (tanh, mc-relu, mc-erf)
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long)]
    pub sigma_u: Option<f64>,
    #[arg(long)]
    pub sigma_b: Option<f64>,
    #[arg(long)]
    pub sigma_h: Option<f64>,
    #[arg(long)]
    pub sigma_v: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Samples for Monte Carlo activations
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

/// Baseline kernel settings, used by `gram` and by fixed-kernel regression.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// RBF bandwidth in exp(-alpha ‖x - x'‖²)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Polynomial degree
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial offset
    #[arg(long)]
    pub offset: Option<f64>,
    /// MLP-NTK depth
    #[arg(long)]
    pub mlp_depth: Option<usize>,
    #[arg(long)]
    pub mlp_sigma_w: Option<f64>,
    #[arg(long)]
    pub mlp_sigma_b: Option<f64>,
    /// zero-pad (default) or error-on-mismatch
    #[arg(long)]
    pub padding: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub length: Option<usize>,
    pub dim: Option<usize>,
    pub trials: Option<usize>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub widths: Option<Vec<usize>>,
    pub pairs: Option<usize>,
    pub length: Option<usize>,
    pub weights: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub widths: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub lr_fraction: Option<f64>,
    pub sequences: Option<usize>,
    pub max_length: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    pub repeats: Option<usize>,
    pub families: Option<Vec<String>>,
    pub lambdas: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub grid: Option<String>,
    pub evaluate_on_train: Option<bool>,
    pub csv: Option<PathBuf>,
    pub split: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub points: Option<usize>,
    pub width: Option<usize>,
    pub seeds: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("{}: {e}", path.display()),
        })
    }
}

/// Field-wise `a.or(b)` for the flag/config pairs above.
pub trait Overlay {
    fn overlay(self, under: Option<Self>) -> Self
    where
        Self: Sized;
}

macro_rules! overlay_impl {
    ($t:ty, $($f:ident),*) => {
        impl Overlay for $t {
            fn overlay(self, under: Option<Self>) -> Self {
                let under = under.unwrap_or_default();
                Self { $($f: self.$f.or(under.$f)),* }
            }
        }
    };
}

overlay_impl!(
    KernelConfig,
    preset,
    activation,
    sigma_w,
    sigma_u,
    sigma_b,
    sigma_h,
    sigma_v,
    depth,
    mc_samples
);
overlay_impl!(BaselineConfig, alpha, degree, offset, mlp_depth, mlp_sigma_w, mlp_sigma_b, padding);
overlay_impl!(SensitivityConfig, length, dim, trials, fd_step);
overlay_impl!(ConvergeConfig, widths, pairs, length, weights);
overlay_impl!(DriftConfig, widths, steps, lr_fraction, sequences, max_length);
overlay_impl!(
    RegressConfig,
    repeats,
    families,
    lambdas,
    folds,
    grid,
    evaluate_on_train,
    csv,
    split
);
overlay_impl!(CurveConfig, points, width, seeds);

pub const DEFAULT_MC_SAMPLES: usize = 100_000;

impl KernelConfig {
    pub fn to_params(&self, seed: u64) -> Result<RntkParams, Error> {
        let base = match self.preset.as_deref().unwrap_or("relu") {
            "relu" => RntkParams::relu_default(),
            "erf" => RntkParams::erf_default(),
            other => return Err(Error::InvalidParam(format!("unknown preset '{other}' (expected relu or erf)"))),
        };
        let activation = match self.activation.as_deref() {
            None => base.activation.clone(),
            Some("relu") => Activation::Relu,
            Some("erf") => Activation::Erf,
            Some(other) => {
                let name = other.strip_prefix("mc-").unwrap_or(other);
                let samples = self.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
                Activation::Custom(CustomActivation::named(name, samples, seed)?)
            }
        };
        RntkParams::new(
            self.sigma_w.unwrap_or(base.sigma_w),
            self.sigma_u.unwrap_or(base.sigma_u),
            self.sigma_b.unwrap_or(base.sigma_b),
            self.sigma_h.unwrap_or(base.sigma_h),
            self.sigma_v.unwrap_or(base.sigma_v),
            self.depth.unwrap_or(base.depth),
            activation,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"kernel": {"sigma_q": 1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("sigma_q"));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seeed": 1}"#).is_err());
    }

    #[test]
    fn flags_win_over_the_file() {
        let file = KernelConfig {
            sigma_w: Some(1.2),
            sigma_b: Some(0.3),
            ..Default::default()
        };
        let flags = KernelConfig {
            sigma_w: Some(1.5),
            ..Default::default()
        };
        let merged = flags.overlay(Some(file));
        assert_eq!(merged.sigma_w, Some(1.5));
        assert_eq!(merged.sigma_b, Some(0.3));
        let p = merged.to_params(0).unwrap();
        assert_eq!((p.sigma_w, p.sigma_b, p.sigma_u), (1.5, 0.3, 1.0));
    }

    #[test]
    fn presets_and_activations() {
        let erf = KernelConfig {
            preset: Some("erf".into()),
            ..Default::default()
        };
        assert_eq!(erf.to_params(0).unwrap(), RntkParams::erf_default());
        let bad = KernelConfig {
            activation: Some("sigmoid".into()),
            ..Default::default()
        };
        assert!(bad.to_params(0).is_err());
    }
}
