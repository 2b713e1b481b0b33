use std::collections::BTreeMap;

use serde::Serialize;

use super::arma::ArmaFit;
use super::relation::RelationFit;
use crate::ratfun::RatTF;

/// JSON summary of one estimation call.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EstimationReport {
    pub operation: String,
    pub orders: BTreeMap<String, Vec<usize>>,
    pub coefficients: BTreeMap<String, Vec<f64>>,
    pub residual_rms: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub rank_warnings: Vec<String>,
}

impl EstimationReport {
    pub fn new(operation: impl Into<String>) -> Self {
        EstimationReport {
            operation: operation.into(),
            ..Default::default()
        }
    }

    pub fn relation(&mut self, name: &str, f: &RelationFit) -> &mut Self {
        self.orders
            .insert(name.into(), vec![f.a.len(), f.b.len() - 1]);
        self.coefficients.insert(format!("{name}.a"), f.a.clone());
        self.coefficients.insert(format!("{name}.b"), f.b.clone());
        self.residual_rms.insert(name.into(), f.residual_rms);
        self.flags.insert(format!("{name}.pinned_b0"), f.pinned_b0);
        if f.rank_deficient() {
            self.rank_warnings.push(format!(
                "{name}: regressor rank {} < {} parameters",
                f.solver_rank, f.n_params
            ));
        }
        self
    }

    pub fn arma(&mut self, name: &str, f: &ArmaFit) -> &mut Self {
        self.orders
            .insert(name.into(), vec![f.ar.len(), f.ma.len()]);
        self.coefficients.insert(format!("{name}.ar"), f.ar.clone());
        self.coefficients.insert(format!("{name}.ma"), f.ma.clone());
        self.coefficients.insert(
            format!("{name}.innovation_variance"),
            vec![f.innovation_variance],
        );
        self.flags
            .insert(format!("{name}.minimum_phase"), f.minimum_phase);
        self.flags
            .insert(format!("{name}.ma_stabilized"), f.ma_stabilized);
        self.flags
            .insert(format!("{name}.noninvertible"), f.noninvertible);
        if f.rank_deficient {
            self.rank_warnings
                .push(format!("{name}: rank-deficient regressor"));
        }
        self
    }

    pub fn tf(&mut self, name: &str, w: &RatTF) -> &mut Self {
        self.coefficients
            .insert(format!("{name}.num"), w.num().coeffs().to_vec());
        self.coefficients
            .insert(format!("{name}.den"), w.den().coeffs().to_vec());
        self
    }

    pub fn flag(&mut self, name: &str, v: bool) -> &mut Self {
        self.flags.insert(name.into(), v);
        self
    }
}
