//! The measurement and gate-simulation protocols, written against the
//! [`Engine`] trait so the same step sequence runs on every backend.

mod dense;
mod engine;
mod generalized;
mod measurement;
mod ring;
mod symmetric;

pub use dense::{DenseBackend, DenseEngine};
pub use engine::{Backend, BackendRegistry, Engine, FinalState, RunShape};
pub use generalized::{nontrivial_eigenvectors, Eigenpair, DEFAULT_EIGEN_THRESHOLD};
pub use measurement::{MeasurementTarget, WMode, CONTROL, FLAG};
pub use ring::{orthonormal_completion, RingBackend, RingEngine, RingShape, RingState};
pub use symmetric::{
    run_symmetric_test, symmetric_probability, symmetric_probability_formula, CyclicVariant,
    FullVariant, SymmetricVariant, VariantRegistry,
};

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{DensityOperator, LinalgError};
use crate::model::{Budget, CommLedger, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("amplitude budget exceeded{}: need {} amplitudes, cap is {cap}",
        if context.is_empty() { String::new() } else { format!(" for {context}") },
        crate::model::show_count(*needed))]
    Budget {
        context: String,
        needed: u128,
        cap: usize,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate eigenvalues: {0}")]
    Degenerate(String),
}

impl From<ModelError> for ProtocolError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Budget { needed, cap } => ProtocolError::Budget {
                context: String::new(),
                needed,
                cap,
            },
            ModelError::Linalg(l) => ProtocolError::Linalg(l),
            other => ProtocolError::Model(other),
        }
    }
}

impl ProtocolError {
    /// Attach a parameter description to a budget error.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            ProtocolError::Budget { needed, cap, .. } => ProtocolError::Budget {
                context: ctx.into(),
                needed,
                cap,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Outcome of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Global state before any discard (measurement protocols).
    pub final_state: Option<FinalState>,
    /// State of the kept registers after the discard (gate simulations).
    pub final_density: Option<DensityOperator>,
    pub ledger: CommLedger,
    /// Step labels in execution order.
    pub transcript: Vec<String>,
    pub backend: &'static str,
}

impl ProtocolResult {
    pub fn state(&self) -> Result<&FinalState> {
        self.final_state
            .as_ref()
            .ok_or_else(|| ProtocolError::Unsupported("run kept no pure state".into()))
    }

    pub fn density(&self) -> Result<&DensityOperator> {
        self.final_density
            .as_ref()
            .ok_or_else(|| ProtocolError::Unsupported("run produced no reduced state".into()))
    }

    pub fn summary(&self) -> LedgerSummary {
        LedgerSummary {
            forward_qubits: self.ledger.forward_qubits,
            backward_qubits: self.ledger.backward_qubits,
            bits_equiv: self.ledger.bits_equivalent(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerSummary {
    pub forward_qubits: f64,
    pub backward_qubits: f64,
    pub bits_equiv: f64,
}

/// Runs protocols with a backend choice, an amplitude budget and a qubit
/// accounting mode.
pub struct Simulator {
    registry: BackendRegistry,
    budget: Budget,
    backend: String,
    integral: bool,
}

impl Default for Simulator {
    fn default() -> Self {
        Self::new(Budget::default())
    }
}

impl Simulator {
    pub fn new(budget: Budget) -> Self {
        Self {
            registry: BackendRegistry::default(),
            budget,
            backend: BackendRegistry::AUTO.to_string(),
            integral: false,
        }
    }

    pub fn with_backend(mut self, name: impl Into<String>) -> Self {
        self.backend = name.into();
        self
    }

    /// Charge whole qubits per transmission.
    pub fn with_integral_qubits(mut self, integral: bool) -> Self {
        self.integral = integral;
        self
    }

    pub fn registry(&self) -> &BackendRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut BackendRegistry {
        &mut self.registry
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn backend_name(&self) -> &str {
        &self.backend
    }

    pub(crate) fn start(
        &self,
        input: &crate::model::PureState,
        legs: usize,
        shape: &RunShape,
        context: &str,
    ) -> Result<(Box<dyn Engine>, &'static str)> {
        let backend = self
            .registry
            .select(&self.backend, shape, &self.budget)
            .map_err(|e| e.with_context(context))?;
        let mut engine = backend
            .start(input, legs, self.budget)
            .map_err(|e| e.with_context(context))?;
        engine.ledger_mut().integral = self.integral;
        Ok((engine, backend.name()))
    }
}
