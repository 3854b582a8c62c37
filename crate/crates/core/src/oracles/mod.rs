//! Independent checks: exact densest subgraph, expander certificates,
//! brute-force search and inequality audits.

mod audit;
mod brute;
mod densest;
mod flow;
mod spectral;

pub use audit::{
    audit_mass_split, check_lp_feasibility_map, quadratic_form_bound_check, random_vector, subset_means, tau_comparison_check,
    tau_pair, AuditReport, LpMapReport, QuadraticFormBound, QuadraticFormCheck, TauComparison,
};
pub use brute::{brute_force_dks, BRUTE_FORCE_MAX_N};
pub use densest::{densest_subgraph, LpDensestResult};
pub use spectral::{calibrate_xi, centered_cross_matrix, certify_expander, xi_trial, ExpanderCertificate, XiCalibration};
pub use crate::linalg::spectral_norm;
