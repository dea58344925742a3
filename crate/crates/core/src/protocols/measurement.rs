//! Ideal and catalysed two-outcome measurements, the gate simulation built
//! from them, and the k-party variant.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::engine::{Engine, FinalState, RunShape};
use super::{ProtocolError, ProtocolResult, Result, Simulator};
use crate::linalg::{outer, re, CMatrix, CVector};
use crate::model::{make_phi_minus, CycleDirection, Party, PureState};

pub const CONTROL: &str = "S";
pub const FLAG: &str = "C";

/// The state a measurement tests for, one register per party.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTarget {
    alpha: PureState,
}

impl MeasurementTarget {
    pub fn new(alpha: PureState) -> Result<Self> {
        if alpha.layout().len() < 2 {
            return Err(ProtocolError::Dimension(
                "target needs one register per party".into(),
            ));
        }
        if (alpha.norm() - 1.0).abs() > 1e-10 {
            return Err(crate::model::ModelError::NotNormalized(alpha.norm()).into());
        }
        Ok(Self { alpha })
    }

    /// |φ₋⟩ on ℂ^{d+1} ⊗ ℂ^{d+1}.
    pub fn phi_minus(d: usize) -> Result<Self> {
        Self::new(make_phi_minus(d)?)
    }

    pub fn alpha(&self) -> &PureState {
        &self.alpha
    }

    pub fn vector(&self) -> &CVector {
        self.alpha.amplitudes()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.alpha.dims()
    }

    pub fn parties(&self) -> usize {
        self.alpha.layout().len()
    }

    pub fn projector(&self) -> CMatrix {
        outer(self.vector(), self.vector())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WMode {
    Approx,
    Ideal,
}

impl fmt::Display for WMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WMode::Approx => "approx",
            WMode::Ideal => "ideal",
        })
    }
}

impl FromStr for WMode {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx" => Ok(WMode::Approx),
            "ideal" => Ok(WMode::Ideal),
            other => Err(ProtocolError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Register names and actors for one catalysed measurement.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    /// Input legs, one per party.
    pub legs: Vec<String>,
    pub leg_dims: Vec<usize>,
    /// `m − 1` catalyst copies, each one label per party.
    pub groups: Vec<Vec<String>>,
    pub parties: Vec<Party>,
    pub control: String,
    pub flag: String,
}

impl Plan {
    pub fn new(
        legs: Vec<String>,
        leg_dims: Vec<usize>,
        parties: Vec<Party>,
        m: usize,
        tag: &str,
    ) -> Self {
        let groups = (2..=m)
            .map(|i| legs.iter().map(|l| format!("{l}{tag}{i}")).collect())
            .collect();
        Self {
            legs,
            leg_dims,
            groups,
            parties,
            control: format!("{CONTROL}{tag}"),
            flag: format!("{FLAG}{tag}"),
        }
    }

    pub fn m(&self) -> usize {
        self.groups.len() + 1
    }

    /// Registers of party `i` in ring order.
    pub fn side(&self, i: usize) -> Vec<String> {
        std::iter::once(self.legs[i].clone())
            .chain(self.groups.iter().map(|g| g[i].clone()))
            .collect()
    }

    fn last(&self) -> Party {
        *self.parties.last().expect("at least two parties")
    }

    /// Catalyst copies, then the control (held by the first party) and the
    /// flag (held by the last).
    pub fn adjoin_resources(&self, e: &mut dyn Engine, alpha: &CVector) -> Result<()> {
        e.adjoin_copies(&self.groups, &self.leg_dims, &self.parties, alpha)?;
        e.adjoin_uniform(&self.control, self.m(), self.parties[0])?;
        e.adjoin_flag(&self.flag, self.last())?;
        Ok(())
    }

    /// Everything after preparing the control: the cycles, the hops of the
    /// control register and the coherent flag. The unitary part squares to
    /// the identity, so the same call also undoes a previous run.
    pub fn core(&self, e: &mut dyn Engine, log: &mut Vec<String>, prefix: &str) -> Result<()> {
        let k = self.parties.len();
        let s = self.control.as_str();
        let mut step = |label: String| -> String {
            log.push(label.clone());
            label
        };
        step(format!("{prefix}cycle {}", self.parties[0]));
        e.controlled_cycle(s, &self.side(0), self.parties[0], CycleDirection::Forward)?;
        for i in 1..k {
            let (from, to) = (self.parties[i - 1], self.parties[i]);
            let label = step(format!("{prefix}send {s} {from}->{to}"));
            e.send(s, from, to, &label)?;
            step(format!("{prefix}cycle {to}"));
            e.controlled_cycle(s, &self.side(i), to, CycleDirection::Forward)?;
        }
        step(format!("{prefix}flag {s} into {}", self.flag));
        e.flag_uniform(s, &self.flag, self.last())?;
        for i in (1..k).rev() {
            let (from, to) = (self.parties[i], self.parties[i - 1]);
            step(format!("{prefix}uncycle {from}"));
            e.controlled_cycle(s, &self.side(i), from, CycleDirection::Inverse)?;
            let label = step(format!("{prefix}send {s} {from}->{to}"));
            e.send(s, from, to, &label)?;
        }
        step(format!("{prefix}uncycle {}", self.parties[0]));
        e.controlled_cycle(s, &self.side(0), self.parties[0], CycleDirection::Inverse)?;
        Ok(())
    }
}

/// Split `input` into reference registers and `legs` trailing legs.
pub(crate) fn split_input(input: &PureState, legs: usize) -> Result<(Vec<String>, Vec<String>)> {
    let regs = input.layout().registers();
    if regs.len() < legs {
        return Err(ProtocolError::Dimension(format!(
            "input has {} registers, need at least {legs}",
            regs.len()
        )));
    }
    let cut = regs.len() - legs;
    let names = |r: &[crate::model::Register]| r.iter().map(|r| r.label.clone()).collect();
    Ok((names(&regs[..cut]), names(&regs[cut..])))
}

fn check_target(
    input: &PureState,
    target: &MeasurementTarget,
) -> Result<(Vec<String>, Vec<String>)> {
    let k = target.parties();
    let (refs, legs) = split_input(input, k)?;
    let dims = input.dims();
    if dims[dims.len() - k..] != target.dims()[..] {
        return Err(ProtocolError::Dimension(format!(
            "input legs {:?} do not match target dims {:?}",
            &dims[dims.len() - k..],
            target.dims()
        )));
    }
    Ok((refs, legs))
}

pub(crate) fn context(dims: &[usize], m: usize) -> String {
    if dims.iter().all(|&x| x == dims[0]) && dims[0] >= 2 {
        format!("d={}, m={m}", dims[0] - 1)
    } else {
        format!("dims={dims:?}, m={m}")
    }
}

fn ref_dim(input: &PureState, refs: &[String]) -> Result<usize> {
    refs.iter()
        .map(|l| input.layout().dim_of(l).map_err(ProtocolError::from))
        .product()
}

fn full_shape(ref_dim: usize, leg_dims: &[usize], m: usize) -> RunShape {
    RunShape {
        ref_dim,
        leg_dims: leg_dims.to_vec(),
        groups: 1,
        copies: m - 1,
        controls: vec![m],
        flags: 1,
    }
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(ProtocolError::InvalidParameter(format!(
            "m = {m}, need m >= 2"
        )));
    }
    Ok(())
}

fn kept(refs: &[String], legs: &[String]) -> Vec<String> {
    refs.iter().chain(legs).cloned().collect()
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl Simulator {
    /// The ideal measurement {|α⟩⟨α|, I − |α⟩⟨α|}, applied coherently with
    /// the outcome in a new flag register `C` held by the last party.
    pub fn run_ideal_measurement(
        &self,
        input: &PureState,
        target: &MeasurementTarget,
    ) -> Result<ProtocolResult> {
        let (refs, legs) = check_target(input, target)?;
        let dims = target.dims();
        let shape = RunShape {
            ref_dim: ref_dim(input, &refs)?,
            leg_dims: dims.clone(),
            groups: 0,
            copies: 0,
            controls: vec![],
            flags: 1,
        };
        let owner = input.layout().owner(legs.last().expect("legs"))?;
        let (mut e, backend) = self.start(input, legs.len(), &shape, &context(&dims, 1))?;
        e.adjoin_flag(FLAG, owner)?;
        e.flag_projector(&legs, &target.projector(), FLAG, Party::Referee)?;
        Ok(ProtocolResult {
            ledger: e.ledger().clone(),
            final_state: Some(e.finish()?),
            final_density: None,
            transcript: vec![format!("adjoin {FLAG}"), "ideal flag".into()],
            backend,
        })
    }

    /// The catalysed measurement with ring size `m`. The output keeps every
    /// register: the input, the `m − 1` catalyst copies, `S` and `C`.
    pub fn run_approx_measurement(
        &self,
        input: &PureState,
        target: &MeasurementTarget,
        m: usize,
    ) -> Result<ProtocolResult> {
        if target.parties() != 2 {
            return Err(ProtocolError::Dimension("bipartite target expected".into()));
        }
        self.catalysed(input, target, m, vec![Party::Alice, Party::Bob])
    }

    /// Circulating-control variant for `k` parties. Leg `i` of the input is
    /// handed to party `P{i+1}` before the run; `P1` prepares `S` and `Pk`
    /// holds the flag.
    pub fn run_kparty_measurement(
        &self,
        input: &PureState,
        target: &MeasurementTarget,
        m: usize,
    ) -> Result<ProtocolResult> {
        let k = target.parties();
        let (_, legs) = check_target(input, target)?;
        let mut input = input.clone();
        let parties: Vec<Party> = (1..=k).map(Party::Party).collect();
        for (l, &p) in legs.iter().zip(&parties) {
            input = input.with_owner(l, p)?;
        }
        self.catalysed(&input, target, m, parties)
    }

    fn catalysed(
        &self,
        input: &PureState,
        target: &MeasurementTarget,
        m: usize,
        parties: Vec<Party>,
    ) -> Result<ProtocolResult> {
        check_m(m)?;
        let (refs, legs) = check_target(input, target)?;
        let dims = target.dims();
        let plan = Plan::new(legs, dims.clone(), parties, m, "");
        let shape = full_shape(ref_dim(input, &refs)?, &dims, m);
        let ctx = context(&dims, m);
        let (mut e, backend) = self.start(input, plan.legs.len(), &shape, &ctx)?;
        let mut log = vec![format!("prepare {} and catalysts", plan.control)];
        plan.adjoin_resources(e.as_mut(), target.vector())
            .map_err(|err| err.with_context(&ctx))?;
        plan.core(e.as_mut(), &mut log, "")?;
        Ok(ProtocolResult {
            ledger: e.ledger().clone(),
            final_state: Some(e.finish()?),
            final_density: None,
            transcript: log,
            backend,
        })
    }

    /// What the catalysed measurement would output if it were exact: same
    /// registers and layout, with the ideal measurement applied to the input
    /// legs. Runs on the same backend the catalysed run would pick.
    pub fn ideal_reference(
        &self,
        input: &PureState,
        target: &MeasurementTarget,
        m: usize,
    ) -> Result<FinalState> {
        check_m(m)?;
        let (refs, legs) = check_target(input, target)?;
        let dims = target.dims();
        let k = target.parties();
        let parties = if k == 2 {
            vec![Party::Alice, Party::Bob]
        } else {
            (1..=k).map(Party::Party).collect()
        };
        let plan = Plan::new(legs, dims.clone(), parties, m, "");
        let shape = full_shape(ref_dim(input, &refs)?, &dims, m);
        let ctx = context(&dims, m);
        let (mut e, _) = self.start(input, k, &shape, &ctx)?;
        plan.adjoin_resources(e.as_mut(), target.vector())
            .map_err(|err| err.with_context(&ctx))?;
        e.flag_projector(&plan.legs, &target.projector(), &plan.flag, Party::Referee)?;
        e.finish()
    }

    /// Simulate the two-qudit gate `U = I − 2|φ₋⟩⟨φ₋|` on the last two
    /// registers of `input`. Returns the reduced state of the input
    /// registers after the ancillas are discarded.
    pub fn run_w(
        &self,
        input: &PureState,
        d: usize,
        m: usize,
        mode: WMode,
    ) -> Result<ProtocolResult> {
        let target = MeasurementTarget::phi_minus(d)?;
        let (refs, legs) = check_target(input, &target)?;
        let dims = target.dims();
        let rd = ref_dim(input, &refs)?;
        let keep = kept(&refs, &legs);
        let minus = [re(-1.0), re(1.0)];
        match mode {
            WMode::Ideal => {
                let shape = RunShape {
                    ref_dim: rd,
                    leg_dims: dims.clone(),
                    groups: 0,
                    copies: 0,
                    controls: vec![],
                    flags: 1,
                };
                let (mut e, backend) = self.start(input, 2, &shape, &context(&dims, 1))?;
                let p = target.projector();
                e.adjoin_flag(FLAG, Party::Bob)?;
                e.flag_projector(&legs, &p, FLAG, Party::Referee)?;
                e.phase_flag(FLAG, minus, Party::Bob)?;
                e.flag_projector(&legs, &p, FLAG, Party::Referee)?;
                let ledger = e.ledger().clone();
                let fin = e.finish()?;
                Ok(ProtocolResult {
                    final_density: Some(fin.reduced(&as_strs(&keep))?),
                    final_state: None,
                    ledger,
                    transcript: vec![
                        format!("adjoin {FLAG}"),
                        "ideal flag".into(),
                        "phase".into(),
                        "ideal unflag".into(),
                        "discard".into(),
                    ],
                    backend,
                })
            }
            WMode::Approx => {
                check_m(m)?;
                let plan = Plan::new(legs, dims.clone(), vec![Party::Alice, Party::Bob], m, "");
                let ctx = context(&dims, m);
                let (mut e, backend) = self.start(input, 2, &full_shape(rd, &dims, m), &ctx)?;
                let mut log = vec!["adjoin ancillas".to_string()];
                plan.adjoin_resources(e.as_mut(), target.vector())
                    .map_err(|err| err.with_context(&ctx))?;
                plan.core(e.as_mut(), &mut log, "measure: ")?;
                log.push("phase".into());
                e.phase_flag(&plan.flag, minus, Party::Bob)?;
                plan.core(e.as_mut(), &mut log, "reverse: ")?;
                log.push("discard".into());
                let ledger = e.ledger().clone();
                let fin = e.finish()?;
                Ok(ProtocolResult {
                    final_density: Some(fin.reduced(&as_strs(&keep))?),
                    final_state: None,
                    ledger,
                    transcript: log,
                    backend,
                })
            }
        }
    }
}

/// Phases `diag(λ, 1)` for a flag qubit.
pub(crate) fn eigen_phase(lambda: Complex64) -> [Complex64; 2] {
    [lambda, re(1.0)]
}
