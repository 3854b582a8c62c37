use std::path::{Path, PathBuf};

use dks_core::instance::{AdversarySpec, ModelParams};
use dks_core::Params;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Where the spectral constant comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum XiSource {
    /// Use the value in `params.xi` unchanged.
    Params,
    Fixed { value: f64 },
    /// Monte-Carlo estimate at the grid point's `(n, k, p)`.
    Calibrate { trials: usize, seed: u64 },
}

impl Default for XiSource {
    fn default() -> Self {
        XiSource::Params
    }
}

/// Optional axes swept around `params`; empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub d: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: Params,
    #[serde(default)]
    pub grid: GridAxes,
    #[serde(default)]
    pub adversary: AdversarySpec,
    pub seeds: Vec<u64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub xi: XiSource,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_tol() -> f64 {
    1e-5
}

fn default_max_iter() -> usize {
    50_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(params: Params, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            params,
            grid: GridAxes::default(),
            adversary: AdversarySpec::none(),
            seeds,
            tol: default_tol(),
            max_iter: default_max_iter(),
            xi: XiSource::Params,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seed list is empty".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(HarnessError::Config("need tol > 0 and max_iter > 0".into()));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let g = &self.grid;
        if !(finite(&g.d) && finite(&g.delta) && finite(&g.gamma) && finite(&g.lambda)) {
            return Err(HarnessError::Config("grid axes must be finite".into()));
        }
        if let XiSource::Fixed { value } = self.xi {
            if !(value > 0.0) {
                return Err(HarnessError::Config(format!("fixed xi must be positive, got {value}")));
            }
        }
        if let XiSource::Calibrate { trials: 0, .. } = self.xi {
            return Err(HarnessError::Config("calibration needs at least one trial".into()));
        }
        Ok(())
    }

    /// Cartesian product of the grid axes applied to `params`, in row-major
    /// order (n, k, d, delta, gamma, lambda).
    pub fn grid_points(&self) -> Vec<Params> {
        fn axis<V: Copy>(values: &[V], base: V) -> Vec<V> {
            if values.is_empty() {
                vec![base]
            } else {
                values.to_vec()
            }
        }
        let b = &self.params;
        let g = &self.grid;
        let mut out = Vec::new();
        for &n in &axis(&g.n, b.n) {
            for &k in &axis(&g.k, b.k) {
                for &d in &axis(&g.d, b.d) {
                    for &delta in &axis(&g.delta, b.delta) {
                        for &gamma in &axis(&g.gamma, b.gamma) {
                            for &lambda in &axis(&g.lambda, b.lambda) {
                                out.push(ModelParams {
                                    n,
                                    k,
                                    d,
                                    delta,
                                    gamma,
                                    lambda,
                                    ..b.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
