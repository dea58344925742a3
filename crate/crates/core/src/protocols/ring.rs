//! Exact backend for the bipartite ring protocols.
//!
//! The m bipartite slots (the input pair plus m−1 catalyst copies) are only
//! ever rearranged by cyclic shifts of Alice's halves and of Bob's halves.
//! So the global state stays in the span of
//!
//! ```text
//! |r⟩_R ⊗ (σ_A^a ⊗ σ_B^b)(|k⟩ ⊗ |α⟩^{⊗ m−1}) ⊗ |j⟩_S ⊗ |c⟩_C
//! ```
//!
//! where `k` runs over a basis of the input pair and `σ^a` shifts registers
//! by `a`. The engine stores one coefficient per `(r, k, a, b, j, c)` and
//! applies every protocol step to those coefficients exactly. Storage is
//! `dim R · D · m² · m · 2` instead of `dim R · D^m · m · 2`.
//!
//! When the run ends with Alice's and Bob's shifts equal on every term, the
//! state is re-expressed in an orthonormal basis of product vectors (see
//! [`RingState`]), which supports inner products, reduced states and
//! conversion back to dense amplitudes.

use num_complex::Complex64;

use super::engine::{Backend, Engine, FinalState, RunShape};
use super::{ProtocolError, Result};
use crate::linalg::{
    self, hermitian_part, max_abs_diff, partial_trace_matrix, re, CMatrix, CVector, DensityOperator,
};
use crate::model::{
    Budget, CommLedger, CycleDirection, ModelError, Party, PureState, Register, RegisterLayout,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Residual below which a shifted-but-misaligned coefficient counts as zero.
const ALIGN_TOL: f64 = 1e-13;

pub struct RingBackend;

impl Backend for RingBackend {
    fn name(&self) -> &'static str {
        "ring"
    }

    fn footprint(&self, shape: &RunShape) -> Option<u128> {
        if shape.leg_dims.len() != 2 || shape.groups != 1 || shape.copies == 0 {
            return None;
        }
        if shape.controls.len() > 1 || shape.flags > 1 {
            return None;
        }
        let m = (shape.copies + 1) as u128;
        let s = shape.controls.first().copied().unwrap_or(1) as u128;
        if s != 1 && s != m {
            return None;
        }
        let c = if shape.flags == 1 { 2 } else { 1 };
        Some((shape.ref_dim as u128) * shape.leg_product() * m * m * s * c)
    }

    fn start(&self, input: &PureState, legs: usize, budget: Budget) -> Result<Box<dyn Engine>> {
        if legs != 2 {
            return Err(ProtocolError::Unsupported(
                "the ring backend handles two-party runs only".into(),
            ));
        }
        let dims = input.dims();
        if dims.len() < 2 {
            return Err(ProtocolError::Dimension(
                "input needs A and B registers".into(),
            ));
        }
        let n = dims.len();
        let regs = input.layout().registers();
        budget.check(input.amplitudes().len() as u128)?;
        Ok(Box::new(RingEngine {
            layout: input.layout().clone(),
            ledger: CommLedger::new(),
            budget,
            ref_dims: dims[..n - 2].to_vec(),
            ref_dim: dims[..n - 2].iter().product(),
            da: dims[n - 2],
            db: dims[n - 1],
            a_labels: vec![regs[n - 2].label.clone()],
            b_labels: vec![regs[n - 1].label.clone()],
            catalyst: None,
            m: 1,
            control: None,
            flag: None,
            coef: input.amplitudes().iter().copied().collect(),
        }))
    }
}

pub struct RingEngine {
    layout: RegisterLayout,
    ledger: CommLedger,
    budget: Budget,
    ref_dims: Vec<usize>,
    ref_dim: usize,
    da: usize,
    db: usize,
    a_labels: Vec<String>,
    b_labels: Vec<String>,
    catalyst: Option<CVector>,
    m: usize,
    control: Option<String>,
    flag: Option<String>,
    /// Index `((((r·D + k)·m + a)·m + b)·s + j)·c + f`.
    coef: Vec<Complex64>,
}

impl RingEngine {
    fn pair_dim(&self) -> usize {
        self.da * self.db
    }

    fn s_dim(&self) -> usize {
        if self.control.is_some() {
            self.m
        } else {
            1
        }
    }

    fn c_dim(&self) -> usize {
        if self.flag.is_some() {
            2
        } else {
            1
        }
    }

    fn slots(&self, m: usize, s: usize, c: usize) -> u128 {
        (self.ref_dim * self.pair_dim()) as u128 * (m * m * s * c) as u128
    }

    fn unsupported(what: &str) -> ProtocolError {
        ProtocolError::Unsupported(format!("ring backend: {what}"))
    }

    fn require_control(&self, label: &str) -> Result<()> {
        match &self.control {
            Some(s) if s == label => Ok(()),
            _ => Err(Self::unsupported(&format!(
                "{label} is not the ring control register"
            ))),
        }
    }

    fn require_flag(&self, label: &str) -> Result<()> {
        match &self.flag {
            Some(c) if c == label => Ok(()),
            _ => Err(Self::unsupported(&format!(
                "{label} is not the ring flag register"
            ))),
        }
    }
}

impl Engine for RingEngine {
    fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut CommLedger {
        &mut self.ledger
    }

    fn adjoin_copies(
        &mut self,
        groups: &[Vec<String>],
        dims: &[usize],
        owners: &[Party],
        state: &CVector,
    ) -> Result<()> {
        if self.catalyst.is_some() || self.control.is_some() || self.flag.is_some() {
            return Err(Self::unsupported(
                "catalyst copies must be adjoined first and once",
            ));
        }
        if dims != [self.da, self.db] || owners.len() != 2 || groups.is_empty() {
            return Err(Self::unsupported(
                "catalyst must be a copy of the input pair space",
            ));
        }
        if state.len() != self.pair_dim() {
            return Err(ProtocolError::Dimension("catalyst state size".into()));
        }
        let m = groups.len() + 1;
        self.budget.check(self.slots(m, 1, 1))?;
        let mut layout = self.layout.clone();
        for g in groups {
            if g.len() != 2 {
                return Err(ProtocolError::Dimension("catalyst group arity".into()));
            }
            layout.push(Register::new(g[0].clone(), self.da, owners[0]))?;
            layout.push(Register::new(g[1].clone(), self.db, owners[1]))?;
        }
        let mut coef = vec![ZERO; self.coef.len() * m * m];
        for (i, &x) in self.coef.iter().enumerate() {
            coef[i * m * m] = x;
        }
        self.layout = layout;
        self.coef = coef;
        self.m = m;
        self.a_labels.extend(groups.iter().map(|g| g[0].clone()));
        self.b_labels.extend(groups.iter().map(|g| g[1].clone()));
        self.catalyst = Some(state.clone());
        Ok(())
    }

    fn adjoin_uniform(&mut self, label: &str, m: usize, owner: Party) -> Result<()> {
        if self.catalyst.is_none() || self.control.is_some() || self.flag.is_some() {
            return Err(Self::unsupported(
                "control register must follow the catalyst",
            ));
        }
        if m != self.m {
            return Err(Self::unsupported(
                "control dimension must equal the ring size",
            ));
        }
        self.budget.check(self.slots(self.m, m, 1))?;
        self.layout.push(Register::new(label, m, owner))?;
        let amp = re(1.0 / (m as f64).sqrt());
        let mut coef = vec![ZERO; self.coef.len() * m];
        for (i, &x) in self.coef.iter().enumerate() {
            for j in 0..m {
                coef[i * m + j] = x * amp;
            }
        }
        self.coef = coef;
        self.control = Some(label.to_string());
        Ok(())
    }

    fn adjoin_flag(&mut self, label: &str, owner: Party) -> Result<()> {
        if self.flag.is_some() {
            return Err(Self::unsupported("a single flag register"));
        }
        self.budget.check(self.slots(self.m, self.s_dim(), 2))?;
        self.layout.push(Register::new(label, 2, owner))?;
        let mut coef = vec![ZERO; self.coef.len() * 2];
        for (i, &x) in self.coef.iter().enumerate() {
            coef[2 * i] = x;
        }
        self.coef = coef;
        self.flag = Some(label.to_string());
        Ok(())
    }

    fn controlled_cycle(
        &mut self,
        control: &str,
        targets: &[String],
        party: Party,
        direction: CycleDirection,
    ) -> Result<()> {
        self.require_control(control)?;
        let alice_side = if targets == self.a_labels.as_slice() {
            true
        } else if targets == self.b_labels.as_slice() {
            false
        } else {
            return Err(Self::unsupported(
                "cycle targets must be one side of the ring",
            ));
        };
        let mut touched = vec![control.to_string()];
        touched.extend_from_slice(targets);
        self.layout.check_owned(&touched, party)?;

        let (m, s, c) = (self.m, self.s_dim(), self.c_dim());
        let block = m * m * s * c;
        let mut out = vec![ZERO; self.coef.len()];
        for (rk, chunk) in self.coef.chunks(block).enumerate() {
            for (i, &x) in chunk.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let f = i % c;
                let j = (i / c) % s;
                let b = (i / (s * c)) % m;
                let a = i / (m * s * c);
                let shift = |v: usize| match direction {
                    CycleDirection::Forward => (v + j) % m,
                    CycleDirection::Inverse => (v + m - j) % m,
                };
                let (a2, b2) = if alice_side {
                    (shift(a), b)
                } else {
                    (a, shift(b))
                };
                out[rk * block + ((a2 * m + b2) * s + j) * c + f] = x;
            }
        }
        self.coef = out;
        Ok(())
    }

    fn send(&mut self, label: &str, from: Party, to: Party, step: &str) -> Result<()> {
        let reg = self.layout.register(label)?.clone();
        if reg.owner != from {
            return Err(ModelError::InvalidTransfer(format!(
                "{from} does not hold {label} (held by {})",
                reg.owner
            ))
            .into());
        }
        self.ledger.record(step, label, reg.dim, from, to)?;
        self.layout.set_owner(label, to)?;
        Ok(())
    }

    fn flag_uniform(&mut self, control: &str, flag: &str, party: Party) -> Result<()> {
        self.require_control(control)?;
        self.require_flag(flag)?;
        self.layout.check_owned(&[control, flag], party)?;
        let m = self.m;
        let inv_m = re(1.0 / m as f64);
        // Each block is v[j][f] for fixed (r, k, a, b).
        for block in self.coef.chunks_mut(2 * m) {
            let mut sums = [ZERO; 2];
            for j in 0..m {
                sums[0] += block[2 * j];
                sums[1] += block[2 * j + 1];
            }
            let old: Vec<Complex64> = block.to_vec();
            for j in 0..m {
                for f in 0..2 {
                    // P ⊗ I + (I − P) ⊗ X with P = |s⟩⟨s|.
                    block[2 * j + f] = sums[f] * inv_m + old[2 * j + 1 - f] - sums[1 - f] * inv_m;
                }
            }
        }
        Ok(())
    }

    fn flag_projector(
        &mut self,
        targets: &[String],
        projector: &CMatrix,
        flag: &str,
        party: Party,
    ) -> Result<()> {
        self.require_flag(flag)?;
        if targets.len() != 2 || targets[0] != self.a_labels[0] || targets[1] != self.b_labels[0] {
            return Err(Self::unsupported("projector must act on the input pair"));
        }
        let mut touched = targets.to_vec();
        touched.push(flag.to_string());
        self.layout.check_owned(&touched, party)?;
        let dp = self.pair_dim();
        if projector.nrows() != dp || projector.ncols() != dp {
            return Err(ProtocolError::Dimension("projector size".into()));
        }
        let dev = max_abs_diff(&(projector * projector), projector)
            .max(max_abs_diff(&projector.adjoint(), projector));
        if dev > 1e-10 {
            return Err(ModelError::NotProjector(dev).into());
        }
        let (m, s) = (self.m, self.s_dim());
        let block = m * m * s * 2;
        // Only valid while every slot sits unshifted.
        for (i, x) in self.coef.iter().enumerate() {
            if *x != ZERO && (i % block) / (s * 2) != 0 {
                return Err(Self::unsupported("projector on a shifted ring"));
            }
        }
        let comp = linalg::identity(dp) - projector;
        let mut out = self.coef.clone();
        for r in 0..self.ref_dim {
            for j in 0..s {
                for f in 0..2 {
                    for k2 in 0..dp {
                        let mut acc = ZERO;
                        for k in 0..dp {
                            let base = (r * dp + k) * block + j * 2;
                            // flag unchanged inside P, flipped outside.
                            acc += projector[(k2, k)] * self.coef[base + f]
                                + comp[(k2, k)] * self.coef[base + 1 - f];
                        }
                        out[(r * dp + k2) * block + j * 2 + f] = acc;
                    }
                }
            }
        }
        self.coef = out;
        Ok(())
    }

    fn phase_flag(&mut self, flag: &str, phases: [Complex64; 2], party: Party) -> Result<()> {
        self.require_flag(flag)?;
        self.layout.check_owned(&[flag], party)?;
        for (i, x) in self.coef.iter_mut().enumerate() {
            *x *= phases[i % 2];
        }
        Ok(())
    }

    fn finish(self: Box<Self>) -> Result<FinalState> {
        let alpha = self
            .catalyst
            .clone()
            .ok_or_else(|| Self::unsupported("no catalyst to align against"))?;
        let basis = orthonormal_completion(&alpha)?;
        let (m, s, c) = (self.m, self.s_dim(), self.c_dim());
        let dp = self.pair_dim();
        let block = m * m * s * c;
        let shape = RingShape {
            ref_dims: self.ref_dims.clone(),
            da: self.da,
            db: self.db,
            m,
            s,
            c,
        };
        let mut coords = CVector::zeros(shape.len());
        for (rk, chunk) in self.coef.chunks(block).enumerate() {
            let (r, k) = (rk / dp, rk % dp);
            for (i, &x) in chunk.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let f = i % c;
                let j = (i / c) % s;
                let b = (i / (s * c)) % m;
                let a = i / (m * s * c);
                if a != b {
                    if x.norm() > ALIGN_TOL {
                        return Err(Self::unsupported("run ended with misaligned shifts"));
                    }
                    continue;
                }
                for e in 0..dp {
                    let w = basis[(k, e)].conj();
                    if w == ZERO {
                        continue;
                    }
                    let pos = if e == 0 { 0 } else { a };
                    coords[shape.slot(r, e, pos, j, f)] += x * w;
                }
            }
        }
        Ok(FinalState::Ring(RingState {
            layout: self.layout,
            shape,
            basis,
            coords,
        }))
    }
}

/// Orthonormal basis (as columns) whose first column is `v/‖v‖`.
pub fn orthonormal_completion(v: &CVector) -> Result<CMatrix> {
    let n = v.len();
    let norm = v.norm();
    if norm < 1e-12 {
        return Err(ProtocolError::InvalidParameter("zero target state".into()));
    }
    let mut cols: Vec<CVector> = vec![v / re(norm)];
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = linalg::basis_vector(n, i);
        // Two Gram–Schmidt passes for numerical orthogonality.
        for _ in 0..2 {
            for u in &cols {
                let p = u.dotc(&w);
                w -= u * p;
            }
        }
        let wn = w.norm();
        if wn > 1e-8 {
            cols.push(w / re(wn));
        }
    }
    Ok(CMatrix::from_columns(&cols))
}

/// Dimensions of an aligned ring state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingShape {
    pub ref_dims: Vec<usize>,
    pub da: usize,
    pub db: usize,
    /// Ring size (number of bipartite slots).
    pub m: usize,
    /// Control register dimension (1 if absent).
    pub s: usize,
    /// Flag dimension (1 if absent).
    pub c: usize,
}

impl RingShape {
    pub fn ref_dim(&self) -> usize {
        self.ref_dims.iter().product()
    }

    pub fn pair_dim(&self) -> usize {
        self.da * self.db
    }

    pub fn len(&self) -> usize {
        self.ref_dim() * self.pair_dim() * self.m * self.s * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of `|r⟩ ⊗ u_e@pos ⊗ |j⟩ ⊗ |f⟩`. `e = 0` is the all-catalyst
    /// product and only `pos = 0` is used for it.
    pub fn slot(&self, r: usize, e: usize, pos: usize, j: usize, f: usize) -> usize {
        (((r * self.pair_dim() + e) * self.m + pos) * self.s + j) * self.c + f
    }
}

/// Ring state in aligned form.
///
/// With `u_0 = α, u_1, …` an orthonormal basis of the pair space, the
/// vectors `|r⟩ ⊗ [u_e in slot pos, α elsewhere] ⊗ |j⟩ ⊗ |f⟩` (and the
/// all-α product for `e = 0`) are orthonormal. `coords` holds the
/// components in that basis, so norms and inner products are plain vector
/// operations on `coords`.
#[derive(Debug, Clone)]
pub struct RingState {
    layout: RegisterLayout,
    shape: RingShape,
    basis: CMatrix,
    coords: CVector,
}

impl RingState {
    /// Build from coordinates. `layout` must list the reference registers,
    /// then the m pairs `A_i, B_i`, then the control and flag if present.
    pub fn from_coordinates(
        layout: RegisterLayout,
        shape: RingShape,
        basis: CMatrix,
        coords: CVector,
    ) -> Result<Self> {
        if coords.len() != shape.len() {
            return Err(ProtocolError::Dimension("coordinate count".into()));
        }
        let mut expected = shape.ref_dims.clone();
        for _ in 0..shape.m {
            expected.push(shape.da);
            expected.push(shape.db);
        }
        if shape.s > 1 {
            expected.push(shape.s);
        }
        if shape.c > 1 {
            expected.push(shape.c);
        }
        if layout.dims() != expected {
            return Err(ProtocolError::Dimension(format!(
                "layout dims {:?} do not match ring shape {:?}",
                layout.dims(),
                expected
            )));
        }
        let dp = shape.pair_dim();
        if basis.nrows() != dp || basis.ncols() != dp || !linalg::is_unitary(&basis, 1e-10) {
            return Err(ProtocolError::InvalidParameter(
                "pair basis must be orthonormal".into(),
            ));
        }
        Ok(Self {
            layout,
            shape,
            basis,
            coords,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn shape(&self) -> &RingShape {
        &self.shape
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn coords(&self) -> &CVector {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    fn compatible(&self, other: &RingState) -> Result<()> {
        if self.shape != other.shape
            || self.layout.dims() != other.layout.dims()
            || max_abs_diff(&self.basis, &other.basis) > 1e-12
        {
            return Err(ProtocolError::Dimension(
                "ring states over different bases".into(),
            ));
        }
        Ok(())
    }

    pub fn inner(&self, other: &RingState) -> Result<Complex64> {
        self.compatible(other)?;
        Ok(self.coords.dotc(&other.coords))
    }

    /// Coordinate-wise difference, e.g. for amplitude comparisons.
    pub fn sub(&self, other: &RingState) -> Result<RingState> {
        self.compatible(other)?;
        Ok(RingState {
            coords: &self.coords - &other.coords,
            ..self.clone()
        })
    }

    /// Reduced state of the reference registers and the first pair. Other
    /// registers are traced out. `labels` may be any subset of those.
    pub fn reduced(&self, labels: &[&str]) -> Result<DensityOperator> {
        let sh = &self.shape;
        let nref = sh.ref_dims.len();
        let regs = self.layout.registers();
        let small: Vec<&str> = regs[..nref + 2].iter().map(|r| r.label.as_str()).collect();
        let keep = labels
            .iter()
            .map(|l| {
                small.iter().position(|s| s == l).ok_or_else(|| {
                    ProtocolError::Unsupported(format!(
                        "ring reduced state keeps reference and first pair only, not {l}"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dp = sh.pair_dim();
        let rd = sh.ref_dim();
        let n = rd * dp;
        let mut rho = CMatrix::zeros(n, n);

        // Terms sharing (rest of the ring, j, f) interfere; all other pairs of
        // terms are orthogonal on the traced part.
        let mut accumulate = |w: &CVector| {
            rho += w * w.adjoint();
        };
        for j in 0..sh.s {
            for f in 0..sh.c {
                // Rest = all α: e = 0, or excitation in slot 0.
                let mut w = CVector::zeros(n);
                for r in 0..rd {
                    for e in 0..dp {
                        let x = self.coords[sh.slot(r, e, 0, j, f)];
                        if x != ZERO {
                            for k in 0..dp {
                                w[r * dp + k] += x * self.basis[(k, e)];
                            }
                        }
                    }
                }
                accumulate(&w);
                // Excitation e elsewhere: slot 0 holds α.
                for e in 1..dp {
                    for pos in 1..sh.m {
                        let mut w = CVector::zeros(n);
                        let mut any = false;
                        for r in 0..rd {
                            let x = self.coords[sh.slot(r, e, pos, j, f)];
                            if x != ZERO {
                                any = true;
                                for k in 0..dp {
                                    w[r * dp + k] += x * self.basis[(k, 0)];
                                }
                            }
                        }
                        if any {
                            accumulate(&w);
                        }
                    }
                }
            }
        }
        let mut small_dims = sh.ref_dims.clone();
        small_dims.push(sh.da);
        small_dims.push(sh.db);
        let out = partial_trace_matrix(&rho, &small_dims, &keep)?;
        let dims = keep.iter().map(|&k| small_dims[k]).collect();
        Ok(DensityOperator::new(hermitian_part(&out), dims)?)
    }

    /// Dense amplitudes in layout order.
    pub fn to_dense(&self, budget: &Budget) -> Result<PureState> {
        let sh = &self.shape;
        let total = self
            .layout
            .checked_total_dim()
            .ok_or(ProtocolError::Budget {
                context: String::new(),
                needed: u128::MAX,
                cap: budget.max_amplitudes,
            })?;
        budget.check(total as u128)?;
        let dp = sh.pair_dim();
        let ring_len = dp.pow(sh.m as u32);
        let alpha = self.basis.column(0).into_owned();
        let product = |e: usize, pos: usize| {
            let parts: Vec<CVector> = (0..sh.m)
                .map(|p| {
                    if e != 0 && p == pos {
                        self.basis.column(e).into_owned()
                    } else {
                        alpha.clone()
                    }
                })
                .collect();
            linalg::tensor_all(&parts)
        };
        let mut out = CVector::zeros(total);
        for e in 0..dp {
            let positions = if e == 0 { 1 } else { sh.m };
            for pos in 0..positions {
                let mut vec: Option<CVector> = None;
                for r in 0..sh.ref_dim() {
                    for j in 0..sh.s {
                        for f in 0..sh.c {
                            let x = self.coords[sh.slot(r, e, pos, j, f)];
                            if x == ZERO {
                                continue;
                            }
                            let v = vec.get_or_insert_with(|| product(e, pos));
                            for (t, amp) in v.iter().enumerate() {
                                let idx = ((r * ring_len + t) * sh.s + j) * sh.c + f;
                                out[idx] += x * amp;
                            }
                        }
                    }
                }
            }
        }
        Ok(PureState::from_parts(self.layout.clone(), out)?)
    }
}
