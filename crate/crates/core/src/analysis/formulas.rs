//! Closed-form cost and capacity bounds.

use serde::Serialize;

use super::{AnalysisError, BoundReport, Result};
use crate::linalg::binary_entropy;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationCost {
    pub epsilon: f64,
    /// Ring size used; `8/ε²`, or its power-of-two ceiling in integral mode.
    pub m: f64,
    pub qubits_each_direction: f64,
    pub classical_bits: f64,
}

/// Resources for simulating the gate to diamond accuracy ε.
pub fn simulation_cost(epsilon: f64, integral: bool) -> Result<SimulationCost> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 1]"
        )));
    }
    let exact = 8.0 / (epsilon * epsilon);
    let m = if integral {
        2f64.powf(exact.log2().ceil())
    } else {
        exact
    };
    let q = 2.0 * m.log2();
    Ok(SimulationCost {
        epsilon,
        m,
        qubits_each_direction: q,
        // Teleporting each qubit costs two bits, in both directions.
        classical_bits: 2.0 * 2.0 * q,
    })
}

/// `24 + 16 log₂(1/ε)`.
pub fn closed_form_bits(epsilon: f64) -> f64 {
    24.0 + 16.0 * (1.0 / epsilon).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EprBound {
    Bound {
        delta: f64,
        bits: f64,
    },
    /// `δ ≥ 1/2`: the logarithm's argument is not positive.
    Vacuous {
        delta: f64,
    },
}

impl EprBound {
    pub fn bits(&self) -> Option<f64> {
        match self {
            EprBound::Bound { bits, .. } => Some(*bits),
            EprBound::Vacuous { .. } => None,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            EprBound::Bound { delta, .. } | EprBound::Vacuous { delta } => *delta,
        }
    }
}

/// `Δ_ε = 2 log₂ d − 1 + log₂((1 − 2δ)(1 − δ)²)` with `δ = (4ε)^{1/8}`.
pub fn epr_lower_bound(d: usize, epsilon: f64) -> Result<EprBound> {
    if d < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "d = {d}, need d >= 2"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "epsilon = {epsilon} must be > 0"
        )));
    }
    let delta = (4.0 * epsilon).powf(0.125);
    if delta >= 0.5 {
        return Ok(EprBound::Vacuous { delta });
    }
    let arg = (1.0 - 2.0 * delta) * (1.0 - delta) * (1.0 - delta);
    Ok(EprBound::Bound {
        delta,
        bits: 2.0 * (d as f64).log2() - 1.0 + arg.log2(),
    })
}

/// Communication needed to teleport an n-qubit input over and the output
/// back: 2n bits each way.
pub fn trivial_teleport_cost(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(AnalysisError::InvalidParameter(
            "n must be at least 1".into(),
        ));
    }
    Ok(4.0 * n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityChain {
    pub n: f64,
    pub c: f64,
    pub m: f64,
    pub eta: f64,
    /// `4 log₂ m + 16 η n + 4 H₂(2η)`; absent when `2η > 1`.
    pub line1: Option<f64>,
    /// `4 log₂ m + 16 η n + 8 √(2η)`.
    pub line2: f64,
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub total: f64,
    /// Each line checked against the next.
    pub reports: Vec<BoundReport>,
}

/// Upper bound on the forward classical capacity for `m = n^c`.
pub fn capacity_bound_chain(n: f64, c: f64) -> Result<CapacityChain> {
    if !(n >= 2.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "n = {n}, need n >= 2"
        )));
    }
    if !(c > 2.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "c = {c}: the bound diverges unless c > 2"
        )));
    }
    let m = n.powf(c);
    let eta = std::f64::consts::SQRT_2 / m.sqrt();
    let log_term = 4.0 * m.log2();
    let eta_term = 16.0 * eta * n;
    let line1 = if 2.0 * eta <= 1.0 {
        Some(log_term + eta_term + 4.0 * binary_entropy(2.0 * eta)?)
    } else {
        None
    };
    let line2 = log_term + eta_term + 8.0 * (2.0 * eta).sqrt();
    let term1 = 4.0 * c * n.log2();
    let term2 = 16.0 * std::f64::consts::SQRT_2 * n.powf(1.0 - c / 2.0);
    let term3 = 8.0 * 2f64.powf(0.75) * n.powf(-c / 4.0);
    let total = term1 + term2 + term3;

    let ctx = |r: BoundReport| r.with("n", n).with("c", c);
    let mut reports = Vec::new();
    if let Some(l1) = line1 {
        reports.push(ctx(BoundReport::new("chain_line1_le_line2", l1, line2)));
    }
    // Equal in exact arithmetic; compared with a relative slack.
    reports.push(ctx(BoundReport::new(
        "chain_line2_le_line3",
        line2,
        total * (1.0 + 1e-12),
    )));
    reports.push(ctx(BoundReport::new(
        "chain_eta_term",
        eta_term,
        term2 * (1.0 + 1e-12),
    )));
    Ok(CapacityChain {
        n,
        c,
        m,
        eta,
        line1,
        line2,
        term1,
        term2,
        term3,
        total,
        reports,
    })
}
