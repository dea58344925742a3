use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

/// Who holds a register.
///
/// `Referee` owns reference systems and is also the actor for analysis-only
/// global operations (ideal nonlocal measurements, the exact gate). Every
/// other party may only touch what it currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Referee,
    Party(usize),
}

impl Party {
    /// Position used to orient communication: a move toward a higher rank is
    /// forward. Alice and Bob rank as the first and second party.
    pub fn rank(self) -> Option<usize> {
        match self {
            Party::Alice => Some(1),
            Party::Bob => Some(2),
            Party::Party(i) => Some(i),
            Party::Referee => None,
        }
    }

    pub fn is_global(self) -> bool {
        self == Party::Referee
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => write!(f, "Alice"),
            Party::Bob => write!(f, "Bob"),
            Party::Referee => write!(f, "Referee"),
            Party::Party(i) => write!(f, "P{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub label: String,
    pub dim: usize,
    pub owner: Party,
}

impl Register {
    pub fn new(label: impl Into<String>, dim: usize, owner: Party) -> Self {
        Self {
            label: label.into(),
            dim,
            owner,
        }
    }
}

/// Ordered registers; amplitude indices enumerate them in this order with the
/// first register most significant.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        let mut layout = Self::default();
        for r in registers {
            layout.push(r)?;
        }
        Ok(layout)
    }

    pub fn push(&mut self, register: Register) -> Result<()> {
        if register.dim == 0 {
            return Err(ModelError::InvalidRegister(format!(
                "{} has dimension 0",
                register.label
            )));
        }
        if self.position(&register.label).is_some() {
            return Err(ModelError::LabelCollision(register.label));
        }
        self.registers.push(register);
        Ok(())
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    /// Total dimension with overflow detection, for budget checks.
    pub fn checked_total_dim(&self) -> Option<usize> {
        self.registers
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.dim))
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.label == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| ModelError::UnknownRegister(label.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn register(&self, label: &str) -> Result<&Register> {
        Ok(&self.registers[self.index_of(label)?])
    }

    pub fn owner(&self, label: &str) -> Result<Party> {
        Ok(self.register(label)?.owner)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.register(label)?.dim)
    }

    pub fn set_owner(&mut self, label: &str, owner: Party) -> Result<()> {
        let i = self.index_of(label)?;
        self.registers[i].owner = owner;
        Ok(())
    }

    /// Locality contract: `party` may act on every listed register.
    pub fn check_owned<S: AsRef<str>>(&self, labels: &[S], party: Party) -> Result<()> {
        if party.is_global() {
            return Ok(());
        }
        for l in labels {
            let owner = self.owner(l.as_ref())?;
            if owner != party {
                return Err(ModelError::Locality {
                    actor: party,
                    register: l.as_ref().to_string(),
                    owner,
                });
            }
        }
        Ok(())
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<RegisterLayout> {
        let mut out = self.clone();
        for r in other.registers() {
            out.push(r.clone())?;
        }
        Ok(out)
    }
}
