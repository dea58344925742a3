//! Permutation tests on `|α⟩^{⊗ m−1} ⊗ |β⟩`.
//!
//! Averaging the permutation operators of a group G gives the projector
//! onto the G-invariant subspace, so the acceptance probability is
//! `(1/|G|) Σ_π ⟨ψ|π|ψ⟩`. For a product state each term is a product of
//! single-copy overlaps, so no m-fold vector is ever built.

use itertools::Itertools;
use num_complex::Complex64;

use super::{ProtocolError, Result};
use crate::linalg::CVector;
use crate::model::PureState;

/// A group of register permutations used for the test.
pub trait SymmetricVariant: Send + Sync {
    fn name(&self) -> &'static str;

    /// Largest m this variant accepts.
    fn max_m(&self) -> usize;

    /// The group elements, each as `perm[k]` = source register of slot `k`.
    fn permutations(&self, m: usize) -> Vec<Vec<usize>>;
}

/// The m cyclic shifts.
pub struct CyclicVariant;

impl SymmetricVariant for CyclicVariant {
    fn name(&self) -> &'static str {
        "cyclic"
    }

    fn max_m(&self) -> usize {
        usize::MAX
    }

    fn permutations(&self, m: usize) -> Vec<Vec<usize>> {
        (0..m)
            .map(|j| (0..m).map(|k| (k + m - j) % m).collect())
            .collect()
    }
}

/// All m! permutations.
pub struct FullVariant;

impl SymmetricVariant for FullVariant {
    fn name(&self) -> &'static str {
        "full"
    }

    fn max_m(&self) -> usize {
        6
    }

    fn permutations(&self, m: usize) -> Vec<Vec<usize>> {
        (0..m).permutations(m).collect()
    }
}

pub struct VariantRegistry {
    variants: Vec<Box<dyn SymmetricVariant>>,
}

impl Default for VariantRegistry {
    fn default() -> Self {
        Self {
            variants: vec![Box::new(CyclicVariant), Box::new(FullVariant)],
        }
    }
}

impl VariantRegistry {
    pub fn register(&mut self, v: Box<dyn SymmetricVariant>) {
        self.variants.retain(|x| x.name() != v.name());
        self.variants.push(v);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.variants.iter().map(|v| v.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn SymmetricVariant> {
        self.variants
            .iter()
            .find(|v| v.name() == name)
            .map(|v| v.as_ref())
            .ok_or_else(|| ProtocolError::UnknownStrategy(name.to_string()))
    }
}

/// Acceptance probability of the permutation test named `variant`.
pub fn run_symmetric_test(
    alpha: &PureState,
    beta: &PureState,
    m: usize,
    variant: &str,
) -> Result<f64> {
    let registry = VariantRegistry::default();
    let v = registry.get(variant)?;
    symmetric_probability(alpha.amplitudes(), beta.amplitudes(), m, v)
}

pub fn symmetric_probability(
    alpha: &CVector,
    beta: &CVector,
    m: usize,
    variant: &dyn SymmetricVariant,
) -> Result<f64> {
    if alpha.len() != beta.len() {
        return Err(ProtocolError::Dimension(
            "α and β differ in dimension".into(),
        ));
    }
    if m < 1 {
        return Err(ProtocolError::InvalidParameter(
            "m must be at least 1".into(),
        ));
    }
    if m > variant.max_m() {
        return Err(ProtocolError::InvalidParameter(format!(
            "variant {} supports m <= {}, got {m}",
            variant.name(),
            variant.max_m()
        )));
    }
    let ab = alpha.dotc(beta);
    let gram = |x: usize, y: usize| -> Complex64 {
        // Slot m−1 holds β, the rest hold α.
        match (x == m - 1, y == m - 1) {
            (false, false) => alpha.dotc(alpha),
            (true, true) => beta.dotc(beta),
            (false, true) => ab,
            (true, false) => ab.conj(),
        }
    };
    let perms = variant.permutations(m);
    let total: Complex64 = perms
        .iter()
        .map(|p| (0..m).map(|k| gram(k, p[k])).product::<Complex64>())
        .sum();
    Ok(total.re / perms.len() as f64)
}

/// `1/m + (1 − 1/m)|⟨α|β⟩|²`.
pub fn symmetric_probability_formula(overlap_abs: f64, m: usize) -> f64 {
    let m = m as f64;
    1.0 / m + (1.0 - 1.0 / m) * overlap_abs * overlap_abs
}
