//! Registers, ownership, global pure states, the specific gates and states
//! used by the protocols, and the communication ledger.

mod gates;
mod layout;
mod ledger;
mod state;

pub use gates::{
    gate_u_matrix, make_gate_u, make_phi, make_phi_minus, make_uniform_s, phi_minus_vector,
    phi_vector, uniform_vector, GateSpec,
};
pub use layout::{Party, Register, RegisterLayout};
pub use ledger::{CommLedger, LedgerEvent};
pub use state::{
    adjoin, apply_controlled_cycle, apply_local, coherent_flag, send_register, CycleDirection,
    PureState,
};

use thiserror::Error;

use crate::linalg::LinalgError;

/// Default cap on the number of stored amplitudes.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 24;

/// Smallest cap accepted from configuration.
pub const MIN_MAX_AMPLITUDES: usize = 1 << 10;

pub const MAX_AMPLITUDES_ENV: &str = "NONLOCALSIM_MAX_AMPLITUDES";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("register label {0:?} already in use")]
    LabelCollision(String),
    #[error("unknown register {0:?}")]
    UnknownRegister(String),
    #[error("invalid register: {0}")]
    InvalidRegister(String),
    #[error("locality violation: {actor} acted on {register} held by {owner}")]
    Locality {
        actor: Party,
        register: String,
        owner: Party,
    },
    #[error("invalid transfer: {0}")]
    InvalidTransfer(String),
    #[error("state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("operator is not a projector (deviation {0:e})")]
    NotProjector(f64),
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("amplitude budget exceeded: need {} amplitudes, cap is {cap}", show_count(*needed))]
    Budget { needed: u128, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Amplitude counts saturate at `u128::MAX`; print those as a bound.
pub fn show_count(n: u128) -> String {
    if n == u128::MAX {
        "more than 2^128".into()
    } else {
        n.to_string()
    }
}

/// Hard cap on stored amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_amplitudes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_amplitudes: DEFAULT_MAX_AMPLITUDES,
        }
    }
}

impl Budget {
    pub fn new(max_amplitudes: usize) -> Result<Self> {
        if max_amplitudes < MIN_MAX_AMPLITUDES {
            return Err(ModelError::InvalidParameter(format!(
                "amplitude cap {max_amplitudes} below minimum {MIN_MAX_AMPLITUDES}"
            )));
        }
        Ok(Self { max_amplitudes })
    }

    /// Default cap, overridden by `NONLOCALSIM_MAX_AMPLITUDES` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_AMPLITUDES_ENV) {
            Ok(v) => {
                let n = v.trim().parse::<usize>().map_err(|_| {
                    ModelError::InvalidParameter(format!("{MAX_AMPLITUDES_ENV}={v:?}"))
                })?;
                Self::new(n)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn check(&self, needed: u128) -> Result<()> {
        if needed > self.max_amplitudes as u128 {
            Err(ModelError::Budget {
                needed,
                cap: self.max_amplitudes,
            })
        } else {
            Ok(())
        }
    }
}
