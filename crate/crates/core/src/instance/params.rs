use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Exp,
    ExpReg,
    Gamma,
    GammaReg,
}

impl ModelKind {
    pub fn is_regular(self) -> bool {
        matches!(self, ModelKind::ExpReg | ModelKind::GammaReg)
    }

    /// Outer part is a spectral expander (as opposed to a gamma-bounded graph).
    pub fn is_expander(self) -> bool {
        matches!(self, ModelKind::Exp | ModelKind::ExpReg)
    }
}

/// How the planted core is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreStyle {
    Regular,
    WeightedRandom,
}

/// Model kind plus every scalar the recovery guarantees depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct ModelParams<T: Scalar> {
    pub kind: ModelKind,
    pub n: usize,
    pub k: usize,
    pub d: T,
    pub delta: T,
    /// Outer expander degree (expander kinds only).
    #[serde(default)]
    pub d_prime: usize,
    /// Outer expander spectral bound (expander kinds only).
    #[serde(default)]
    pub lambda: T,
    /// Outer density parameter (gamma kinds only).
    #[serde(default)]
    pub gamma: T,
    #[serde(default = "default_xi")]
    pub xi: T,
    #[serde(default = "default_kappa")]
    pub kappa: T,
    pub core_style: CoreStyle,
}

fn default_xi<T: Scalar>() -> T {
    T::of(2.0)
}

fn default_kappa<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> ModelParams<T> {
    fn base(kind: ModelKind, n: usize, k: usize, d: T, delta: T) -> Self {
        ModelParams {
            kind,
            n,
            k,
            d,
            delta,
            d_prime: 0,
            lambda: T::zero(),
            gamma: T::zero(),
            xi: default_xi(),
            kappa: default_kappa(),
            core_style: if kind.is_regular() {
                CoreStyle::Regular
            } else {
                CoreStyle::WeightedRandom
            },
        }
    }

    pub fn exp(n: usize, k: usize, d: T, delta: T, d_prime: usize, lambda: T) -> Self {
        ModelParams {
            d_prime,
            lambda,
            ..Self::base(ModelKind::Exp, n, k, d, delta)
        }
    }

    pub fn exp_reg(n: usize, k: usize, d: T, delta: T, d_prime: usize, lambda: T) -> Self {
        ModelParams {
            d_prime,
            lambda,
            ..Self::base(ModelKind::ExpReg, n, k, d, delta)
        }
    }

    pub fn gamma(n: usize, k: usize, d: T, delta: T, gamma: T) -> Self {
        ModelParams {
            gamma,
            ..Self::base(ModelKind::Gamma, n, k, d, delta)
        }
    }

    pub fn gamma_reg(n: usize, k: usize, d: T, delta: T, gamma: T) -> Self {
        ModelParams {
            gamma,
            ..Self::base(ModelKind::GammaReg, n, k, d, delta)
        }
    }

    pub fn with_xi(mut self, xi: T) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_core_style(mut self, style: CoreStyle) -> Self {
        self.core_style = style;
        self
    }

    /// Cross-edge probability `delta d / k`.
    pub fn p(&self) -> T {
        self.delta * self.d / T::of_usize(self.k)
    }

    /// Number of vertices outside the planted set.
    pub fn m(&self) -> usize {
        self.n - self.k
    }

    /// Planted density target `k d / 2`.
    pub fn planted_density(&self) -> T {
        T::of_usize(self.k) * self.d / T::of(2.0)
    }

    /// Integer core degree for regular styles.
    pub fn d_integer(&self) -> Result<usize> {
        let d = self.d.as_f64();
        if d.fract() != 0.0 || d < 1.0 {
            return Err(DksError::param(format!("d = {d} must be a positive integer for a regular core")));
        }
        Ok(d as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(DksError::Param(m));
        if self.k == 0 || self.k >= self.n {
            return err(format!("need 0 < k < n, got k = {}, n = {}", self.k, self.n));
        }
        if !(self.d > T::zero()) || !self.d.is_finite() {
            return err(format!("d must be positive, got {}", self.d));
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return err(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        let p = self.p();
        if p > T::one() {
            return err(format!("cross-edge probability p = delta d / k = {p} exceeds 1"));
        }
        if !(self.xi > T::zero()) {
            return err(format!("xi must be positive, got {}", self.xi));
        }
        if self.kind.is_expander() {
            let dp = T::of_usize(self.d_prime);
            if !(self.lambda >= T::zero() && self.lambda < dp && self.d_prime < self.m()) {
                return err(format!(
                    "expander kinds need 0 <= lambda < d' < n - k, got lambda = {}, d' = {}, n - k = {}",
                    self.lambda,
                    self.d_prime,
                    self.m()
                ));
            }
        } else if !(self.gamma > T::zero()) {
            return err(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.kind.is_regular() && self.core_style != CoreStyle::Regular {
            return err("regular kinds need a regular core".into());
        }
        if self.core_style == CoreStyle::Regular {
            let d = self.d_integer()?;
            if d >= self.k || (self.k * d) % 2 == 1 {
                return err(format!("a {d}-regular core on {} vertices does not exist", self.k));
            }
        }
        Ok(())
    }

    /// True when `p < kappa ln(n) / n`, i.e. outside the range of the high-probability claims.
    pub fn advisory(&self) -> bool {
        let n = T::of_usize(self.n);
        self.p() < self.kappa * n.ln() / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ModelParams::<f64>::gamma_reg(1000, 125, 100.0, 0.005, 0.005);
        p.validate().unwrap();
        assert!((p.p() - 0.004).abs() < 1e-15);
        assert_eq!(p.m(), 875);
        assert_eq!(p.planted_density(), 6250.0);
        assert_eq!(p.core_style, CoreStyle::Regular);
        // p = 0.004 < ln(1000)/1000 ~ 0.0069
        assert!(p.advisory());
    }

    #[test]
    fn invariant_violations() {
        let ok = ModelParams::exp(200, 40, 20.0, 0.1, 9, 7.0);
        ok.validate().unwrap();
        assert!(ModelParams::exp(200, 40, 20.0, 0.1, 9, 9.0).validate().is_err());
        assert!(ModelParams::exp(200, 0, 20.0, 0.1, 9, 7.0).validate().is_err());
        assert!(ModelParams::exp(200, 40, 20.0, 0.0, 9, 7.0).validate().is_err());
        // p = 1 * 100 / 40 > 1
        assert!(ModelParams::gamma(200, 40, 100.0, 1.0, 0.1).validate().is_err());
        assert!(ModelParams::gamma(200, 40, 20.0, 0.1, 0.0).validate().is_err());
        // odd kd
        assert!(ModelParams::gamma_reg(200, 5, 3.0, 0.1, 0.1).validate().is_err());
        assert!(ModelParams::gamma_reg(200, 40, 2.5, 0.1, 0.1).validate().is_err());
        let mixed = ModelParams::gamma_reg(200, 40, 20.0, 0.1, 0.1).with_core_style(CoreStyle::WeightedRandom);
        assert!(mixed.validate().is_err());
    }

    #[test]
    fn serde_defaults() {
        let text = r#"{"kind":"GammaReg","n":1000,"k":125,"d":100.0,"delta":0.005,"gamma":0.005,"core_style":"regular"}"#;
        let p: ModelParams<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(p, ModelParams::gamma_reg(1000, 125, 100.0, 0.005, 0.005));
        let q: ModelParams<f32> = serde_json::from_str(text).unwrap();
        assert_eq!(q.xi, 2.0f32);
    }
}
