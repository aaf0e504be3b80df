//! Causal analysis for multivariate time series built on vector autoregressions.

/// Matrix backend, re-exported so downstream code matches the crate's
/// linear-algebra types without pinning its own copy.
pub use nalgebra;

pub mod cvar;
pub mod estimands;
pub mod ident;
pub mod inference;
pub mod panel;
pub mod var;
pub mod vecm;

mod error;
mod linalg;

pub use cvar::{
    dummy_policy_transform, rank_controls, simple_difference_cvar, vecm_cvar, CvarDiagnostics,
    CvarMode, CvarSpec, DummyCutoff,
};
pub use estimands::{
    acrt_weights, nonneg_weights, regress_residuals, response_fn, simulate_dgp, verify_theorem,
    CausalWeightProfile, DgpSpec, DgpTruth, PanelDesign, PolicyDist, ReplicationRecord,
    ResponseFn, TheoremId, TheoremReport, WeightInput,
};
pub use error::{Error, Result};
pub use ident::{cholesky_identify, identify_covariance, structural_irf, StructuralIdentification};
pub use inference::{
    breusch_godfrey, wild_bootstrap_irf, wild_bootstrap_irf_with, BgTestResult, FitRef,
    IrfBundle, IrfSpace, PolicyIrf, WildMultiplier,
};
pub use panel::{load_panel, load_panel_files, parse_role_map, SeriesRole, TimeSeriesPanel};
pub use var::{estimate_var, reduced_irf, select_lag_bic, VarModel};
pub use vecm::{
    estimate_vecm, granger_representation, johansen_trace_test, vecm_structural_irf,
    RankTestResult, VecmModel,
};
