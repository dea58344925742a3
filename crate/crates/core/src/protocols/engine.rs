//! Execution backends. A protocol is written once as a sequence of engine
//! calls; each backend decides how the global state is stored.

use num_complex::Complex64;

use super::ring::RingState;
use super::{ProtocolError, Result};
use crate::linalg::{CMatrix, CVector, DensityOperator};
use crate::model::{Budget, CommLedger, CycleDirection, Party, PureState, RegisterLayout};

/// State-evolution primitives used by the protocols. Every call enforces the
/// register ownership recorded in [`Engine::layout`].
pub trait Engine {
    fn layout(&self) -> &RegisterLayout;

    fn ledger(&self) -> &CommLedger;

    fn ledger_mut(&mut self) -> &mut CommLedger;

    /// Adjoin one copy of `state` per group. Each group lists one register
    /// per leg of `state`; leg `i` gets dimension `dims[i]` and owner
    /// `owners[i]`.
    fn adjoin_copies(
        &mut self,
        groups: &[Vec<String>],
        dims: &[usize],
        owners: &[Party],
        state: &CVector,
    ) -> Result<()>;

    /// Adjoin a register in the uniform superposition Σ_j |j⟩/√m.
    fn adjoin_uniform(&mut self, label: &str, m: usize, owner: Party) -> Result<()>;

    /// Adjoin a flag qubit in |0⟩.
    fn adjoin_flag(&mut self, label: &str, owner: Party) -> Result<()>;

    fn controlled_cycle(
        &mut self,
        control: &str,
        targets: &[String],
        party: Party,
        direction: CycleDirection,
    ) -> Result<()>;

    fn send(&mut self, label: &str, from: Party, to: Party, step: &str) -> Result<()>;

    /// Coherent measurement of `control` against the uniform state, outcome
    /// written into `flag`.
    fn flag_uniform(&mut self, control: &str, flag: &str, party: Party) -> Result<()>;

    /// Coherent measurement of `targets` with projector `projector`.
    fn flag_projector(
        &mut self,
        targets: &[String],
        projector: &CMatrix,
        flag: &str,
        party: Party,
    ) -> Result<()>;

    /// Diagonal gate `diag(phases[0], phases[1])` on a flag qubit.
    fn phase_flag(&mut self, flag: &str, phases: [Complex64; 2], party: Party) -> Result<()>;

    fn finish(self: Box<Self>) -> Result<FinalState>;
}

/// Size description of a run, used to pick a backend before allocating.
#[derive(Debug, Clone, PartialEq)]
pub struct RunShape {
    /// Total dimension of the reference registers.
    pub ref_dim: usize,
    /// Local dimensions of one copy of the target state, one per party.
    pub leg_dims: Vec<usize>,
    /// Number of catalyst groups, each holding `copies` extra copies.
    pub groups: usize,
    pub copies: usize,
    /// Dimension of each control register.
    pub controls: Vec<usize>,
    pub flags: usize,
}

impl RunShape {
    pub fn leg_product(&self) -> u128 {
        self.leg_dims.iter().map(|&d| d as u128).product()
    }

    pub fn dense_amplitudes(&self) -> u128 {
        let pair = self.leg_product();
        let mut n = (self.ref_dim as u128).saturating_mul(pair);
        for _ in 0..self.groups * self.copies {
            n = n.saturating_mul(pair);
        }
        for &c in &self.controls {
            n = n.saturating_mul(c as u128);
        }
        for _ in 0..self.flags {
            n = n.saturating_mul(2);
        }
        n
    }
}

/// A named way of storing and evolving the global state.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of complex slots a run of this shape needs, or `None` if the
    /// backend cannot represent it.
    fn footprint(&self, shape: &RunShape) -> Option<u128>;

    /// Start from `input`, whose layout is `[reference registers…, legs…]`.
    fn start(&self, input: &PureState, legs: usize, budget: Budget) -> Result<Box<dyn Engine>>;
}

/// Backends registered by name; `auto` picks the one with the smallest
/// footprint.
pub struct BackendRegistry {
    backends: Vec<Box<dyn Backend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(super::dense::DenseBackend));
        r.register(Box::new(super::ring::RingBackend));
        r
    }
}

impl BackendRegistry {
    pub const AUTO: &'static str = "auto";

    pub fn empty() -> Self {
        Self {
            backends: Vec::new(),
        }
    }

    /// Later registrations with an existing name replace the earlier entry.
    pub fn register(&mut self, backend: Box<dyn Backend>) {
        if let Some(slot) = self
            .backends
            .iter_mut()
            .find(|b| b.name() == backend.name())
        {
            *slot = backend;
        } else {
            self.backends.push(backend);
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.backends.iter().map(|b| b.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Backend> {
        self.backends
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
    }

    /// Resolve `name` (or `auto`) for a run of the given shape.
    pub fn select(&self, name: &str, shape: &RunShape, budget: &Budget) -> Result<&dyn Backend> {
        let candidates: Vec<&dyn Backend> = if name == Self::AUTO {
            self.backends.iter().map(|b| b.as_ref()).collect()
        } else {
            vec![self
                .get(name)
                .ok_or_else(|| ProtocolError::UnknownStrategy(name.to_string()))?]
        };
        // Smallest footprint wins; ties go to the earlier registration.
        let mut best: Option<(&dyn Backend, u128)> = None;
        for b in candidates {
            if let Some(n) = b.footprint(shape) {
                if best.is_none_or(|(_, s)| n < s) {
                    best = Some((b, n));
                }
            }
        }
        if let Some((b, n)) = best {
            if n <= budget.max_amplitudes as u128 {
                return Ok(b);
            }
        }
        match best.map(|(_, n)| n) {
            Some(needed) => Err(ProtocolError::Budget {
                context: String::new(),
                needed,
                cap: budget.max_amplitudes,
            }),
            None => Err(ProtocolError::Unsupported(format!(
                "no backend named {name:?} can represent this run"
            ))),
        }
    }
}

/// Final global state as produced by a backend.
#[derive(Debug, Clone)]
pub enum FinalState {
    Dense(PureState),
    Ring(RingState),
}

impl FinalState {
    pub fn layout(&self) -> &RegisterLayout {
        match self {
            FinalState::Dense(s) => s.layout(),
            FinalState::Ring(s) => s.layout(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            FinalState::Dense(s) => s.norm(),
            FinalState::Ring(s) => s.norm(),
        }
    }

    pub fn inner(&self, other: &FinalState) -> Result<Complex64> {
        match (self, other) {
            (FinalState::Dense(a), FinalState::Dense(b)) => Ok(a.inner(b)?),
            (FinalState::Ring(a), FinalState::Ring(b)) => a.inner(b),
            _ => Err(ProtocolError::Unsupported(
                "inner product across backends; densify the ring state first".into(),
            )),
        }
    }

    /// Reduced density operator on the listed registers.
    pub fn reduced(&self, labels: &[&str]) -> Result<DensityOperator> {
        match self {
            FinalState::Dense(s) => Ok(s.reduced(labels)?),
            FinalState::Ring(s) => s.reduced(labels),
        }
    }

    /// Dense amplitudes in layout order, subject to the budget.
    pub fn to_dense(&self, budget: &Budget) -> Result<PureState> {
        match self {
            FinalState::Dense(s) => Ok(s.clone()),
            FinalState::Ring(s) => s.to_dense(budget),
        }
    }

    pub fn as_dense(&self) -> Option<&PureState> {
        match self {
            FinalState::Dense(s) => Some(s),
            FinalState::Ring(_) => None,
        }
    }

    pub fn as_ring(&self) -> Option<&RingState> {
        match self {
            FinalState::Ring(s) => Some(s),
            FinalState::Dense(_) => None,
        }
    }
}
