use dks_core::instance::CoreStyle;
use dks_core::oracles::{certify_expander, densest_subgraph, ExpanderCertificate};
use dks_core::{Instance, VertexSubset};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Re-checks the structural promises of a freshly generated (pre-adversary)
/// instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCertificates {
    pub core_rho: f64,
    pub core_average_degree: f64,
    /// Every core vertex has degree exactly `d` (regular cores only).
    pub core_regular: Option<bool>,
    pub expander: Option<ExpanderCertificate>,
    /// Exact maximum density of the outer part (gamma kinds only).
    pub outer_max_density: Option<f64>,
    pub outer_density_limit: Option<f64>,
    pub passed: bool,
}

pub fn certify_instance(instance: &Instance) -> Result<GeneratorCertificates> {
    let p = &instance.params;
    let (k, n) = (p.k, p.n);
    let core_rho = instance.graph.rho(&instance.planted)?;
    let core_average_degree = instance.graph.average_degree(&instance.planted)?;
    let (core, _) = instance.graph.induced_subgraph(&instance.planted)?;
    let core_regular = (p.core_style == CoreStyle::Regular)
        .then(|| core.degrees().iter().all(|&x| (x - p.d).abs() <= 1e-9 * p.d.max(1.0)));
    let (outer, _) = instance.graph.induced_subgraph(&VertexSubset::new(k..n))?;
    let mut passed = core_regular.unwrap_or(true) && (core_average_degree - p.d).abs() <= 1e-9 * p.d.max(1.0);
    let (mut expander, mut outer_max_density, mut outer_density_limit) = (None, None, None);
    if p.kind.is_expander() {
        let cert = certify_expander(&outer, p.d_prime as f64, p.lambda)?;
        passed &= cert.certified;
        expander = Some(cert);
    } else {
        let value = densest_subgraph(&outer)?.value;
        let limit = p.gamma * p.d;
        passed &= value <= limit + 1e-9 * limit.max(1.0);
        outer_max_density = Some(value);
        outer_density_limit = Some(limit);
    }
    Ok(GeneratorCertificates {
        core_rho,
        core_average_degree,
        core_regular,
        expander,
        outer_max_density,
        outer_density_limit,
        passed,
    })
}
