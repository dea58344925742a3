use num_complex::Complex64;

use super::{Budget, CommLedger, GateSpec, ModelError, Party, Register, RegisterLayout, Result};
use crate::linalg::{
    self, complement, factor_offsets, identity, max_abs_diff, CMatrix, CVector, DensityOperator,
};

const NORM_TOL: f64 = 1e-10;

/// Global wavefunction over a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        let state = Self::from_parts(layout, amplitudes)?;
        let n = state.amplitudes.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(ModelError::NotNormalized(n));
        }
        Ok(state)
    }

    /// Like [`PureState::new`] without the norm check; used for unnormalized
    /// pieces such as error terms.
    pub fn from_parts(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(ModelError::Dimension(format!(
                "{} amplitudes for a layout of dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Computational basis state with one digit per register.
    pub fn basis(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        let dims = layout.dims();
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(ModelError::Dimension(format!(
                "digits {digits:?} for dims {dims:?}"
            )));
        }
        let index = digits.iter().zip(&dims).fold(0, |acc, (d, n)| acc * n + d);
        let amplitudes = linalg::basis_vector(layout.total_dim(), index);
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layout.dims()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.layout.dims() != other.layout.dims() {
            return Err(ModelError::Dimension("inner product across layouts".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn with_owner(mut self, label: &str, owner: Party) -> Result<Self> {
        self.layout.set_owner(label, owner)?;
        Ok(self)
    }

    /// Reduced density operator on the listed registers.
    pub fn reduced(&self, labels: &[&str]) -> Result<DensityOperator> {
        let keep = self.layout.indices_of(labels)?;
        let dims = self.layout.dims();
        let m = linalg::reduced_from_pure(&self.amplitudes, &dims, &keep)?;
        let kept = keep.iter().map(|&k| dims[k]).collect();
        Ok(DensityOperator::new(linalg::hermitian_part(&m), kept)?)
    }

    /// Reorder registers to the given label order.
    pub fn permuted(&self, order: &[&str]) -> Result<PureState> {
        let idx = self.layout.indices_of(order)?;
        if idx.len() != self.layout.len() {
            return Err(ModelError::Dimension(
                "reorder must list every register".into(),
            ));
        }
        let dims = self.layout.dims();
        let offsets = factor_offsets(&dims, &idx);
        let mut out = CVector::zeros(self.amplitudes.len());
        for (new_index, &old_index) in offsets.iter().enumerate() {
            out[new_index] = self.amplitudes[old_index];
        }
        let layout = RegisterLayout::new(
            idx.iter()
                .map(|&i| self.layout.registers()[i].clone())
                .collect(),
        )?;
        Ok(PureState {
            layout,
            amplitudes: out,
        })
    }

    /// Apply `matrix` to the listed registers (first listed most significant)
    /// with no ownership check.
    pub fn apply_matrix_unchecked(&self, labels: &[&str], matrix: &CMatrix) -> Result<PureState> {
        let idx = self.layout.indices_of(labels)?;
        let amplitudes = apply_on_factors(&self.amplitudes, &self.layout.dims(), &idx, matrix)?;
        Ok(PureState {
            layout: self.layout.clone(),
            amplitudes,
        })
    }
}

/// Apply a square matrix to a subset of tensor factors.
pub(crate) fn apply_on_factors(
    amps: &CVector,
    dims: &[usize],
    targets: &[usize],
    matrix: &CMatrix,
) -> Result<CVector> {
    let t_off = factor_offsets(dims, targets);
    if matrix.nrows() != t_off.len() || matrix.ncols() != t_off.len() {
        return Err(ModelError::Dimension(format!(
            "{}x{} matrix on a {}-dimensional target",
            matrix.nrows(),
            matrix.ncols(),
            t_off.len()
        )));
    }
    let r_off = factor_offsets(dims, &complement(dims.len(), targets));
    let mut out = CVector::zeros(amps.len());
    let mut buf = CVector::zeros(t_off.len());
    for &r in &r_off {
        for (i, &t) in t_off.iter().enumerate() {
            buf[i] = amps[r + t];
        }
        let y = matrix * &buf;
        for (i, &t) in t_off.iter().enumerate() {
            out[r + t] = y[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleDirection {
    Forward,
    Inverse,
}

/// S-controlled cyclic shift: `|j⟩|ψ_0 … ψ_{m-1}⟩ → |j⟩|ψ_{-j} … ψ_{m-1-j}⟩`,
/// i.e. register `k` receives the old content of register `k - j (mod m)`.
///
/// For `m = 3`:
///
/// | j | reg 0 | reg 1 | reg 2 |
/// |---|-------|-------|-------|
/// | 0 | ψ0    | ψ1    | ψ2    |
/// | 1 | ψ2    | ψ0    | ψ1    |
/// | 2 | ψ1    | ψ2    | ψ0    |
pub fn apply_controlled_cycle(
    state: &PureState,
    s_label: &str,
    cycle_labels: &[&str],
    party: Party,
    direction: CycleDirection,
) -> Result<PureState> {
    let layout = state.layout();
    let mut touched = vec![s_label];
    touched.extend_from_slice(cycle_labels);
    layout.check_owned(&touched, party)?;
    let m = cycle_labels.len();
    if m == 0 {
        return Err(ModelError::InvalidParameter("empty cycle".into()));
    }
    let q = layout.dim_of(cycle_labels[0])?;
    for l in cycle_labels {
        if layout.dim_of(l)? != q {
            return Err(ModelError::Dimension(format!(
                "cycle register {l} has unequal dimension"
            )));
        }
    }
    let s_dim = layout.dim_of(s_label)?;
    if s_dim != m {
        return Err(ModelError::Dimension(format!(
            "control {s_label} has dimension {s_dim} for a cycle of {m} registers"
        )));
    }
    let targets = layout.indices_of(&touched)?;
    let dims = layout.dims();
    let t_off = factor_offsets(&dims, &targets);
    let r_off = factor_offsets(&dims, &complement(dims.len(), &targets));

    // Target multi-index i ↔ (j, x_0, …, x_{m-1}) with x_{m-1} least significant.
    let block = q.pow(m as u32);
    let mut perm = vec![0usize; t_off.len()];
    let mut digits = vec![0usize; m];
    let mut moved = vec![0usize; m];
    for (i, p) in perm.iter_mut().enumerate() {
        let j = i / block;
        let mut rest = i % block;
        for k in (0..m).rev() {
            digits[k] = rest % q;
            rest /= q;
        }
        for k in 0..m {
            let src = match direction {
                CycleDirection::Forward => (k + m - j % m) % m,
                CycleDirection::Inverse => (k + j) % m,
            };
            moved[k] = digits[src];
        }
        *p = j * block + moved.iter().fold(0, |acc, &x| acc * q + x);
    }

    let amps = state.amplitudes();
    let mut out = CVector::zeros(amps.len());
    for &r in &r_off {
        for (i, &t) in t_off.iter().enumerate() {
            out[r + t_off[perm[i]]] = amps[r + t];
        }
    }
    Ok(PureState {
        layout: layout.clone(),
        amplitudes: out,
    })
}

/// Coherent two-outcome measurement: applies `P ⊗ I + (I − P) ⊗ X` on the
/// targets and the flag qubit, so flag 0 marks the range of `P`.
pub fn coherent_flag(
    state: &PureState,
    projector: &CMatrix,
    targets: &[&str],
    flag_label: &str,
    party: Party,
) -> Result<PureState> {
    let layout = state.layout();
    let mut touched = targets.to_vec();
    touched.push(flag_label);
    layout.check_owned(&touched, party)?;
    if layout.dim_of(flag_label)? != 2 {
        return Err(ModelError::Dimension(format!(
            "flag {flag_label} must be a qubit"
        )));
    }
    let n = projector.nrows();
    if !projector.is_square() {
        return Err(ModelError::NotProjector(f64::INFINITY));
    }
    let dev = max_abs_diff(&(projector * projector), projector)
        .max(max_abs_diff(&projector.adjoint(), projector));
    if dev > NORM_TOL {
        return Err(ModelError::NotProjector(dev));
    }
    let x = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let u = projector.kronecker(&identity(2)) + (identity(n) - projector).kronecker(&x);
    state.apply_matrix_unchecked(&touched, &u)
}

/// Apply a local gate; the enforcement point for "local operations are free".
pub fn apply_local(state: &PureState, gate: &GateSpec) -> Result<PureState> {
    let targets: Vec<&str> = gate.targets.iter().map(String::as_str).collect();
    state.layout().check_owned(&targets, gate.party)?;
    state.apply_matrix_unchecked(&targets, &gate.matrix)
}

/// Hand a register to another party and charge the ledger. Amplitudes are
/// untouched.
pub fn send_register(
    state: &PureState,
    label: &str,
    from: Party,
    to: Party,
    ledger: &mut CommLedger,
    step: &str,
) -> Result<PureState> {
    let reg = state.layout().register(label)?.clone();
    if reg.owner != from {
        return Err(ModelError::InvalidTransfer(format!(
            "{from} does not hold {label} (held by {})",
            reg.owner
        )));
    }
    ledger.record(step, label, reg.dim, from, to)?;
    state.clone().with_owner(label, to)
}

/// Tensor new registers onto the end of the layout.
pub fn adjoin(
    state: &PureState,
    new_registers: Vec<Register>,
    their_state: &CVector,
    budget: &Budget,
) -> Result<PureState> {
    let mut layout = state.layout().clone();
    for r in new_registers {
        layout.push(r)?;
    }
    let needed = layout
        .registers()
        .iter()
        .fold(1u128, |acc, r| acc.saturating_mul(r.dim as u128));
    budget.check(needed)?;
    let expected = layout.total_dim() / state.layout().total_dim();
    if their_state.len() != expected {
        return Err(ModelError::Dimension(format!(
            "adjoined state has {} amplitudes, registers need {expected}",
            their_state.len()
        )));
    }
    Ok(PureState {
        layout,
        amplitudes: state.amplitudes().kronecker(their_state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, re};
    use crate::model::{make_gate_u, make_phi_minus, phi_minus_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout_cycle(m: usize, q: usize) -> RegisterLayout {
        let mut regs = vec![Register::new("S", m, Party::Alice)];
        for k in 0..m {
            regs.push(Register::new(format!("X{k}"), q, Party::Alice));
        }
        RegisterLayout::new(regs).unwrap()
    }

    fn labels(m: usize) -> Vec<String> {
        (0..m).map(|k| format!("X{k}")).collect()
    }

    #[test]
    fn cycle_with_j_zero_is_identity() {
        let layout = layout_cycle(3, 2);
        let s = PureState::basis(layout, &[0, 1, 0, 1]).unwrap();
        let l = labels(3);
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        let out =
            apply_controlled_cycle(&s, "S", &l, Party::Alice, CycleDirection::Forward).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn cycle_m2_j1_swaps() {
        let layout = layout_cycle(2, 3);
        let s = PureState::basis(layout.clone(), &[1, 2, 0]).unwrap();
        let out = apply_controlled_cycle(
            &s,
            "S",
            &["X0", "X1"],
            Party::Alice,
            CycleDirection::Forward,
        )
        .unwrap();
        assert_eq!(out, PureState::basis(layout, &[1, 0, 2]).unwrap());
    }

    #[test]
    fn cycle_m3_matches_table() {
        let layout = layout_cycle(3, 3);
        // contents ψ0=0, ψ1=1, ψ2=2 under j=1 → (ψ2, ψ0, ψ1).
        let s = PureState::basis(layout.clone(), &[1, 0, 1, 2]).unwrap();
        let out = apply_controlled_cycle(
            &s,
            "S",
            &["X0", "X1", "X2"],
            Party::Alice,
            CycleDirection::Forward,
        )
        .unwrap();
        assert_eq!(
            out,
            PureState::basis(layout.clone(), &[1, 2, 0, 1]).unwrap()
        );
        let s = PureState::basis(layout.clone(), &[2, 0, 1, 2]).unwrap();
        let out = apply_controlled_cycle(
            &s,
            "S",
            &["X0", "X1", "X2"],
            Party::Alice,
            CycleDirection::Forward,
        )
        .unwrap();
        assert_eq!(out, PureState::basis(layout, &[2, 1, 2, 0]).unwrap());
    }

    #[test]
    fn cycle_forward_then_inverse_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let layout = layout_cycle(4, 2);
        let l = labels(4);
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        for _ in 0..100 {
            let psi = PureState::new(
                layout.clone(),
                linalg::random_pure(layout.total_dim(), &mut rng),
            )
            .unwrap();
            let f = apply_controlled_cycle(&psi, "S", &l, Party::Alice, CycleDirection::Forward)
                .unwrap();
            let back =
                apply_controlled_cycle(&f, "S", &l, Party::Alice, CycleDirection::Inverse).unwrap();
            assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn cycle_rejects_foreign_register_and_unequal_dims() {
        let mut layout = layout_cycle(2, 2);
        layout.set_owner("X1", Party::Bob).unwrap();
        let s = PureState::basis(layout, &[0, 0, 0]).unwrap();
        assert!(matches!(
            apply_controlled_cycle(
                &s,
                "S",
                &["X0", "X1"],
                Party::Alice,
                CycleDirection::Forward
            ),
            Err(ModelError::Locality { .. })
        ));
        let layout = RegisterLayout::new(vec![
            Register::new("S", 2, Party::Alice),
            Register::new("X0", 2, Party::Alice),
            Register::new("X1", 3, Party::Alice),
        ])
        .unwrap();
        let s = PureState::basis(layout, &[0, 0, 0]).unwrap();
        assert!(matches!(
            apply_controlled_cycle(
                &s,
                "S",
                &["X0", "X1"],
                Party::Alice,
                CycleDirection::Forward
            ),
            Err(ModelError::Dimension(_))
        ));
    }

    fn ab_c_layout(d: usize) -> RegisterLayout {
        RegisterLayout::new(vec![
            Register::new("A", d + 1, Party::Bob),
            Register::new("B", d + 1, Party::Bob),
            Register::new("C", 2, Party::Bob),
        ])
        .unwrap()
    }

    #[test]
    fn flag_inside_and_outside_projector() {
        let d = 2;
        let v = phi_minus_vector(d);
        let p = linalg::outer(&v, &v);
        let input = PureState::new(ab_c_layout(d), v.kronecker(&basis_vector(2, 0))).unwrap();
        let out = coherent_flag(&input, &p, &["A", "B"], "C", Party::Bob).unwrap();
        assert!((out.amplitudes() - input.amplitudes()).norm() < 1e-12);

        // |12⟩ is orthogonal to φ₋ → flag flips.
        let input = PureState::basis(ab_c_layout(d), &[1, 2, 0]).unwrap();
        let out = coherent_flag(&input, &p, &["A", "B"], "C", Party::Bob).unwrap();
        assert_eq!(out, PureState::basis(ab_c_layout(d), &[1, 2, 1]).unwrap());
        let twice = coherent_flag(&out, &p, &["A", "B"], "C", Party::Bob).unwrap();
        assert_eq!(twice, input);
    }

    #[test]
    fn flag_rejects_non_projector() {
        let input = PureState::basis(ab_c_layout(1), &[0, 0, 0]).unwrap();
        let not_p = identity(4) * re(0.5);
        assert!(matches!(
            coherent_flag(&input, &not_p, &["A", "B"], "C", Party::Bob),
            Err(ModelError::NotProjector(_))
        ));
    }

    #[test]
    fn local_gates_and_locality() {
        let layout = RegisterLayout::new(vec![
            Register::new("A", 2, Party::Alice),
            Register::new("C", 2, Party::Bob),
        ])
        .unwrap();
        let s = PureState::basis(layout, &[1, 0]).unwrap();
        let z = GateSpec::new(
            CMatrix::from_diagonal(&CVector::from_vec(vec![re(-1.0), re(1.0)])),
            &["C"],
            Party::Bob,
        )
        .unwrap();
        let out = apply_local(&s, &z).unwrap();
        assert!((out.amplitudes()[2] + re(1.0)).norm() < 1e-15);
        let id = GateSpec::new(identity(2), &["C"], Party::Bob).unwrap();
        assert_eq!(apply_local(&s, &id).unwrap(), s);
        let alice_on_c = GateSpec::new(identity(2), &["C"], Party::Alice).unwrap();
        assert!(matches!(
            apply_local(&s, &alice_on_c),
            Err(ModelError::Locality { .. })
        ));
    }

    #[test]
    fn send_changes_only_metadata() {
        let layout = RegisterLayout::new(vec![Register::new("S", 8, Party::Alice)]).unwrap();
        let s = PureState::new(layout, crate::model::uniform_vector(8)).unwrap();
        let mut ledger = CommLedger::new();
        let moved = send_register(&s, "S", Party::Alice, Party::Bob, &mut ledger, "3").unwrap();
        assert_eq!(moved.amplitudes(), s.amplitudes());
        assert_eq!(moved.layout().owner("S").unwrap(), Party::Bob);
        assert_eq!(ledger.forward_qubits, 3.0);
        let back = send_register(&moved, "S", Party::Bob, Party::Alice, &mut ledger, "7").unwrap();
        assert_eq!(ledger.backward_qubits, 3.0);
        assert!(send_register(&back, "S", Party::Bob, Party::Alice, &mut ledger, "x").is_err());
    }

    #[test]
    fn adjoin_embeds_and_checks() {
        let phi = make_phi_minus(1).unwrap();
        let budget = Budget::default();
        let out = adjoin(
            &phi,
            vec![Register::new("C", 2, Party::Bob)],
            &basis_vector(2, 0),
            &budget,
        )
        .unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        for (i, a) in out.amplitudes().iter().enumerate() {
            if i % 2 == 1 {
                assert_eq!(*a, re(0.0));
            } else {
                assert_eq!(*a, phi.amplitudes()[i / 2]);
            }
        }
        let pairs = adjoin(
            &phi,
            vec![
                Register::new("A2", 2, Party::Alice),
                Register::new("B2", 2, Party::Bob),
            ],
            &phi_minus_vector(1),
            &budget,
        )
        .unwrap();
        assert_eq!(pairs.layout().owner("A2").unwrap(), Party::Alice);
        assert_eq!(pairs.layout().owner("B2").unwrap(), Party::Bob);
        assert!(adjoin(
            &phi,
            vec![Register::new("A", 2, Party::Bob)],
            &basis_vector(2, 0),
            &budget
        )
        .is_err());
        let tiny = Budget::new(1 << 10).unwrap();
        let big = adjoin(
            &phi,
            vec![Register::new("Z", 1 << 9, Party::Bob)],
            &basis_vector(1 << 9, 0),
            &tiny,
        );
        assert!(matches!(big, Err(ModelError::Budget { .. })));
    }

    #[test]
    fn gate_u_through_apply_local_needs_global_actor() {
        let phi_m = make_phi_minus(2).unwrap();
        let u = make_gate_u(2).unwrap();
        let out = apply_local(&phi_m, &u).unwrap();
        assert!((out.amplitudes() + phi_m.amplitudes()).norm() < 1e-12);
        let mut local = u.clone();
        local.party = Party::Alice;
        assert!(apply_local(&phi_m, &local).is_err());
    }

    #[test]
    fn permuted_reorders_registers() {
        let layout = RegisterLayout::new(vec![
            Register::new("A", 2, Party::Alice),
            Register::new("B", 3, Party::Bob),
        ])
        .unwrap();
        let s = PureState::basis(layout, &[1, 2]).unwrap();
        let p = s.permuted(&["B", "A"]).unwrap();
        assert_eq!(p.layout().registers()[0].label, "B");
        assert_eq!(p.amplitudes()[2 * 2 + 1], re(1.0));
    }
}
