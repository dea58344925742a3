//! Closed-form oracle states, the numeric bounds, channel-distance
//! estimation and the entropy continuity checks.

mod channel;
mod closed_form;
mod distance;
mod entropy;
mod formulas;

pub use channel::{ma_mi_channels, u_channel, w_channel, Channel};
pub use closed_form::{
    amplitude_gap, closed_form_cor_err, verify_appendix_bounds, ClosedForm, GeneralInput,
};
pub use distance::{
    channel_distance_search, AnsatzStrategy, DistanceStrategy, RandomStrategy, SearchConfig,
    SearchOutcome, StrategyRegistry, DEFAULT_RESTARTS,
};
pub use entropy::{
    continuity_gap_check, entanglement_delta, fannes_alicki_bound, fannes_alicki_check,
    continuity_bound, mutual_info_gain, output_distance, CqEnsemble,
};
pub use formulas::{
    capacity_bound_chain, epr_lower_bound, simulation_cost, closed_form_bits, trivial_teleport_cost,
    CapacityChain, EprBound, SimulationCost,
};

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::ModelError;
use crate::protocols::ProtocolError;

/// Slack used when deciding whether a bound holds.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        AnalysisError::Protocol(e.into())
    }
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// One checked inequality `measured ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub context: BTreeMap<String, Value>,
    pub measured: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(check: &str, measured: f64, bound: f64) -> Self {
        let mut context = BTreeMap::new();
        context.insert("check".to_string(), Value::from(check));
        Self {
            context,
            measured,
            bound,
            satisfied: measured <= bound + BOUND_SLACK,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.context.insert(key.to_string(), value.into());
        self
    }

    pub fn check(&self) -> &str {
        self.context
            .get("check")
            .and_then(Value::as_str)
            .unwrap_or("")
    }
}
