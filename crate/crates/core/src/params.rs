use crate::error::{Error, Result};
use crate::vphi::Activation;

/// Per-layer weight scales `(σ_w^ℓ, σ_u^ℓ, σ_b^ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSigmas {
    pub sigma_w: f64,
    pub sigma_u: f64,
    pub sigma_b: f64,
}

/// Hyperparameters of an RNN under NTK initialization and of its kernels.
///
/// `sigma_h` is the standard deviation of the initial hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct RntkParams {
    pub sigma_w: f64,
    pub sigma_u: f64,
    pub sigma_b: f64,
    pub sigma_h: f64,
    pub sigma_v: f64,
    pub depth: usize,
    pub activation: Activation,
    pub per_layer_overrides: Option<Vec<LayerSigmas>>,
}

impl RntkParams {
    pub fn new(sigma_w: f64, sigma_u: f64, sigma_b: f64, sigma_h: f64, sigma_v: f64, depth: usize, activation: Activation) -> Result<Self> {
        let p = Self {
            sigma_w,
            sigma_u,
            sigma_b,
            sigma_h,
            sigma_v,
            depth,
            activation,
            per_layer_overrides: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Single-layer ReLU with `{σ_w, σ_u, σ_b, σ_h} = {√2, 1, 0, 0}` and `σ_v = 1`.
    pub fn relu_default() -> Self {
        Self::new(std::f64::consts::SQRT_2, 1.0, 0.0, 0.0, 1.0, 1, Activation::Relu).expect("default parameters are valid")
    }

    /// Single-layer erf with `{σ_w, σ_u, σ_b, σ_h} = {1, 0.01, 0.05, 0}` and `σ_v = 1`.
    pub fn erf_default() -> Self {
        Self::new(1.0, 0.01, 0.05, 0.0, 1.0, 1, Activation::Erf).expect("default parameters are valid")
    }

    pub fn with_depth(mut self, depth: usize) -> Result<Self> {
        self.depth = depth;
        self.per_layer_overrides = None;
        self.validate()?;
        Ok(self)
    }

    pub fn with_overrides(mut self, layers: Vec<LayerSigmas>) -> Result<Self> {
        self.per_layer_overrides = Some(layers);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let check_pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        let check_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        check_pos("sigma_w", self.sigma_w)?;
        check_pos("sigma_u", self.sigma_u)?;
        check_pos("sigma_v", self.sigma_v)?;
        check_nonneg("sigma_b", self.sigma_b)?;
        check_nonneg("sigma_h", self.sigma_h)?;
        if self.depth == 0 {
            return Err(Error::InvalidParam("depth must be >= 1".into()));
        }
        if let Some(layers) = &self.per_layer_overrides {
            if layers.len() != self.depth {
                return Err(Error::InvalidParam(format!(
                    "per_layer_overrides has {} entries, depth is {}",
                    layers.len(),
                    self.depth
                )));
            }
            for (l, s) in layers.iter().enumerate() {
                check_pos(&format!("sigma_w[{l}]"), s.sigma_w)?;
                check_pos(&format!("sigma_u[{l}]"), s.sigma_u)?;
                check_nonneg(&format!("sigma_b[{l}]"), s.sigma_b)?;
            }
        }
        Ok(())
    }

    /// Scales of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> LayerSigmas {
        match &self.per_layer_overrides {
            Some(layers) => layers[l],
            None => LayerSigmas {
                sigma_w: self.sigma_w,
                sigma_u: self.sigma_u,
                sigma_b: self.sigma_b,
            },
        }
    }

    pub fn descriptor(&self) -> String {
        let mut s = format!(
            "rntk(sigma_w={}, sigma_u={}, sigma_b={}, sigma_h={}, sigma_v={}, depth={}, activation={})",
            self.sigma_w,
            self.sigma_u,
            self.sigma_b,
            self.sigma_h,
            self.sigma_v,
            self.depth,
            self.activation.label()
        );
        if let Some(layers) = &self.per_layer_overrides {
            s.push_str(&format!(" layers={layers:?}"));
        }
        s
    }
}
