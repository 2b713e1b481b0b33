//! Identification pipeline: the deterministic feedback-channel fit, AR and
//! ARMA fits, BIC order scans, inner-factor recovery, the canonical Wiener
//! pair, the equivalent feedback family and the external-input scheme.

mod arma;
mod family;
mod input;
mod lsq;
mod recover;
mod relation;
mod report;
mod wiener;

pub use arma::{fit_ar, fit_arma, ArmaFit};
pub use family::{f_family, FamilyMember};
pub use input::{identify_with_input, InputModelFit, InputOptions, OrderChoice};
pub use lsq::{solve_min_norm, LsqSolution, RANK_REL_TOL};
pub use recover::{recover_w1_w2, RecoveredPair};
pub use relation::{
    bic_score, fit_arx, fit_relation, fit_relation_with, scan_arx_bic, scan_bic, BicEntry,
    BicTable, RelationFit, BIC_RSS_FLOOR,
};
pub use report::EstimationReport;
pub use wiener::{wiener_predictor, WienerPair, RECONSTRUCTION_TOL};
