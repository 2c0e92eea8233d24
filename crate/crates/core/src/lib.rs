//! Symmetric jump processes on finite state spaces.
//!
//! A [`Model`] is a finite set with a positive measure `m` and a symmetric
//! jump intensity `J`. From it the crate builds the generator
//! `Lu(x) = Σ_y (u(y) - u(x)) J(x,y)/m(x)`, its spectral decomposition and
//! the semigroup `P_t = e^{tL}`, and evaluates
//!
//! * the Dirichlet form and its approximations `E^(t)`,
//! * the p-form `E_p(u) = E(u, u^<p-1>)` by three independent routes,
//! * the Bregman divergences `F_p`, `H_p` and their comparability constants,
//! * both sides of the Hardy–Stein identity with a certified tail bound,
//! * Monte Carlo paths of the associated jump process.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod error;
pub mod forms;
pub mod hardy_stein;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod semigroup;

pub use bregman::{
    bregman_f, bregman_h, comparability_ratio, comparability_scan, default_comparability_scan, ratio_at_one,
    signed_power, spow, ComparabilityScan,
};
pub use error::{Error, Result};
pub use forms::{
    approx_form, approx_pform_kernel, default_schedule, dirichlet_form, halfpower_inclusion_check, pform_generator,
    pform_jump, pform_limit, pform_report, HalfPowerCheck, KernelVariant, PFormReport,
};
pub use hardy_stein::{decay_check, finite_horizon_check, hardy_stein_verify, DecayVerdict, Report};
pub use model::{
    build_model_from_spec, builder_alpha_stable_ring, builder_complete_graph, builder_random_connected,
    parse_model_document, validate_model, Diagnostics, Model, ModelDocument, StateFunction, Violation,
};
pub use montecarlo::{
    detailed_balance_check, empirical_pt_check, simulate_paths, simulate_stationary, DetailedBalanceCheck,
    PathEnsemble, PtCheck,
};
pub use quadrature::QuadratureConfig;
pub use semigroup::{assemble_generator, decompose_model, spectral_decompose, Generator, Spectral, SpectralSummary};
