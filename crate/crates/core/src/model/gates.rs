use super::{ModelError, Party, PureState, Register, RegisterLayout, Result};
use crate::linalg::{self, identity, outer, re, CMatrix, CVector};

const UNITARY_TOL: f64 = 1e-10;

/// A unitary bound to target registers and an acting party.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub matrix: CMatrix,
    pub targets: Vec<String>,
    /// `Party::Referee` marks an analysis-only global gate.
    pub party: Party,
}

impl GateSpec {
    pub fn new<S: AsRef<str>>(matrix: CMatrix, targets: &[S], party: Party) -> Result<Self> {
        if !linalg::is_unitary(&matrix, UNITARY_TOL) {
            return Err(ModelError::NotUnitary);
        }
        Ok(Self {
            matrix,
            targets: targets.iter().map(|s| s.as_ref().to_string()).collect(),
            party,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 1 {
        return Err(ModelError::InvalidParameter(format!(
            "d = {d}, need d >= 1"
        )));
    }
    Ok(())
}

fn ab_layout(d: usize) -> RegisterLayout {
    RegisterLayout::new(vec![
        Register::new("A", d + 1, Party::Alice),
        Register::new("B", d + 1, Party::Bob),
    ])
    .expect("distinct labels")
}

/// (|11⟩ + … + |dd⟩)/√d on ℂ^{d+1} ⊗ ℂ^{d+1}.
pub fn phi_vector(d: usize) -> CVector {
    let n = d + 1;
    let mut v = CVector::zeros(n * n);
    let a = re(1.0 / (d as f64).sqrt());
    for k in 1..=d {
        v[k * n + k] = a;
    }
    v
}

/// (|Φ⟩ − |00⟩)/√2.
pub fn phi_minus_vector(d: usize) -> CVector {
    let mut v = phi_vector(d);
    v[0] = re(-1.0);
    v * re(std::f64::consts::FRAC_1_SQRT_2)
}

pub fn uniform_vector(m: usize) -> CVector {
    CVector::from_element(m, re(1.0 / (m as f64).sqrt()))
}

/// U = |00⟩⟨Φ| + |Φ⟩⟨00| + I − P with P = |00⟩⟨00| + |Φ⟩⟨Φ|.
pub fn gate_u_matrix(d: usize) -> CMatrix {
    let n = (d + 1) * (d + 1);
    let zero = linalg::basis_vector(n, 0);
    let phi = phi_vector(d);
    let p = outer(&zero, &zero) + outer(&phi, &phi);
    outer(&zero, &phi) + outer(&phi, &zero) + identity(n) - p
}

pub fn make_phi(d: usize) -> Result<PureState> {
    check_d(d)?;
    PureState::new(ab_layout(d), phi_vector(d))
}

pub fn make_phi_minus(d: usize) -> Result<PureState> {
    check_d(d)?;
    PureState::new(ab_layout(d), phi_minus_vector(d))
}

/// The swap gate U on registers A, B. It is nonlocal, so the actor is the
/// referee.
pub fn make_gate_u(d: usize) -> Result<GateSpec> {
    check_d(d)?;
    GateSpec::new(gate_u_matrix(d), &["A", "B"], Party::Referee)
}

/// |s⟩ = Σ_j |j⟩/√m on a single register S held by Alice.
pub fn make_uniform_s(m: usize) -> Result<PureState> {
    if m < 1 {
        return Err(ModelError::InvalidParameter("m must be at least 1".into()));
    }
    let layout = RegisterLayout::new(vec![Register::new("S", m, Party::Alice)])?;
    PureState::new(layout, uniform_vector(m))
}
