//! Full statevector backend built directly on the model operations.

use num_complex::Complex64;

use super::engine::{Backend, Engine, FinalState, RunShape};
use super::{ProtocolError, Result};
use crate::linalg::{basis_vector, tensor_all, CMatrix, CVector};
use crate::model::{
    self, adjoin, apply_controlled_cycle, apply_local, coherent_flag, send_register, Budget,
    CommLedger, CycleDirection, GateSpec, Party, PureState, Register, RegisterLayout,
};

pub struct DenseBackend;

impl Backend for DenseBackend {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn footprint(&self, shape: &RunShape) -> Option<u128> {
        Some(shape.dense_amplitudes())
    }

    fn start(&self, input: &PureState, _legs: usize, budget: Budget) -> Result<Box<dyn Engine>> {
        budget.check(input.amplitudes().len() as u128)?;
        Ok(Box::new(DenseEngine {
            state: input.clone(),
            ledger: CommLedger::new(),
            budget,
        }))
    }
}

pub struct DenseEngine {
    state: PureState,
    ledger: CommLedger,
    budget: Budget,
}

impl DenseEngine {
    pub fn new(state: PureState, budget: Budget) -> Self {
        Self {
            state,
            ledger: CommLedger::new(),
            budget,
        }
    }

    pub fn with_ledger(mut self, ledger: CommLedger) -> Self {
        self.ledger = ledger;
        self
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl Engine for DenseEngine {
    fn layout(&self) -> &RegisterLayout {
        self.state.layout()
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
        if groups.is_empty() {
            return Ok(());
        }
        let mut regs = Vec::new();
        for g in groups {
            if g.len() != dims.len() || g.len() != owners.len() {
                return Err(ProtocolError::Dimension("catalyst group arity".into()));
            }
            for ((label, &dim), &owner) in g.iter().zip(dims).zip(owners) {
                regs.push(Register::new(label.clone(), dim, owner));
            }
        }
        // Check the budget before building the product vector.
        let mut grown = self.state.layout().clone();
        for r in &regs {
            grown.push(r.clone())?;
        }
        let needed = grown
            .registers()
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul(r.dim as u128));
        self.budget.check(needed)?;
        let copies = tensor_all(&vec![state.clone(); groups.len()]);
        self.state = adjoin(&self.state, regs, &copies, &self.budget)?;
        Ok(())
    }

    fn adjoin_uniform(&mut self, label: &str, m: usize, owner: Party) -> Result<()> {
        self.state = adjoin(
            &self.state,
            vec![Register::new(label, m, owner)],
            &model::uniform_vector(m),
            &self.budget,
        )?;
        Ok(())
    }

    fn adjoin_flag(&mut self, label: &str, owner: Party) -> Result<()> {
        self.state = adjoin(
            &self.state,
            vec![Register::new(label, 2, owner)],
            &basis_vector(2, 0),
            &self.budget,
        )?;
        Ok(())
    }

    fn controlled_cycle(
        &mut self,
        control: &str,
        targets: &[String],
        party: Party,
        direction: CycleDirection,
    ) -> Result<()> {
        self.state =
            apply_controlled_cycle(&self.state, control, &strs(targets), party, direction)?;
        Ok(())
    }

    fn send(&mut self, label: &str, from: Party, to: Party, step: &str) -> Result<()> {
        self.state = send_register(&self.state, label, from, to, &mut self.ledger, step)?;
        Ok(())
    }

    fn flag_uniform(&mut self, control: &str, flag: &str, party: Party) -> Result<()> {
        let m = self.state.layout().dim_of(control)?;
        let s = model::uniform_vector(m);
        let p = &s * s.adjoint();
        self.state = coherent_flag(&self.state, &p, &[control], flag, party)?;
        Ok(())
    }

    fn flag_projector(
        &mut self,
        targets: &[String],
        projector: &CMatrix,
        flag: &str,
        party: Party,
    ) -> Result<()> {
        self.state = coherent_flag(&self.state, projector, &strs(targets), flag, party)?;
        Ok(())
    }

    fn phase_flag(&mut self, flag: &str, phases: [Complex64; 2], party: Party) -> Result<()> {
        let gate = GateSpec::new(
            CMatrix::from_diagonal(&CVector::from_vec(phases.to_vec())),
            &[flag],
            party,
        )?;
        self.state = apply_local(&self.state, &gate)?;
        Ok(())
    }

    fn finish(self: Box<Self>) -> Result<FinalState> {
        Ok(FinalState::Dense(self.state))
    }
}
