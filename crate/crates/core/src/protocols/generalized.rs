//! Simulating a bipartite unitary with a few eigenvalues different from 1,
//! one catalysed measurement per nontrivial eigenvector.

use num_complex::Complex64;

use super::engine::RunShape;
use super::measurement::{context, eigen_phase, split_input, Plan, WMode};
use super::{ProtocolError, ProtocolResult, Result, Simulator};
use crate::linalg::{hermitian_eigen, identity, outer, re, CMatrix, CVector};
use crate::model::{GateSpec, Party, PureState};

/// Eigenvalues closer than this to 1 count as trivial.
pub const DEFAULT_EIGEN_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: Complex64,
    pub vector: CVector,
}

/// Eigenpairs of a unitary with eigenvalue away from 1. Fails with
/// [`ProtocolError::Degenerate`] when two nontrivial eigenvalues coincide,
/// since the eigenbasis is then a choice the caller has to make.
pub fn nontrivial_eigenvectors(gate: &CMatrix, threshold: f64) -> Result<Vec<Eigenpair>> {
    let n = gate.nrows();
    let dev = gate - identity(n);
    // Range of G − I is the nontrivial subspace.
    let (vals, vecs) = hermitian_eigen(&(dev.adjoint() * &dev))?;
    let cols: Vec<CVector> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold * threshold)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(vec![]);
    }
    let basis = CMatrix::from_columns(&cols);
    let k = basis.adjoint() * gate * &basis;
    // K is normal; a generic real combination of its Hermitian and
    // anti-Hermitian parts shares its eigenvectors.
    let h1 = (&k + k.adjoint()) * re(0.5);
    let h2 = (&k - k.adjoint()) * Complex64::new(0.0, -0.5);
    let mix = h1 + h2 * re(std::f64::consts::SQRT_2 / 3.0);
    let (_, w) = hermitian_eigen(&mix)?;
    let mut pairs = Vec::with_capacity(cols.len());
    for i in 0..cols.len() {
        let v = &basis * w.column(i);
        let lambda = v.dotc(&(gate * &v));
        if (gate * &v - &v * lambda).norm() > 1e-8 {
            return Err(ProtocolError::Degenerate(
                "could not separate eigenvectors".into(),
            ));
        }
        pairs.push(Eigenpair {
            value: lambda,
            vector: v,
        });
    }
    for i in 0..pairs.len() {
        for j in 0..i {
            if (pairs[i].value - pairs[j].value).norm() < threshold {
                return Err(ProtocolError::Degenerate(format!(
                    "eigenvalue {} repeats; supply eigenvectors",
                    pairs[i].value
                )));
            }
        }
    }
    Ok(pairs)
}

fn check_supplied(gate: &CMatrix, pairs: &[Eigenpair], threshold: f64) -> Result<()> {
    let n = gate.nrows();
    let mut proj = CMatrix::zeros(n, n);
    for (i, p) in pairs.iter().enumerate() {
        if p.vector.len() != n || (p.vector.norm() - 1.0).abs() > 1e-10 {
            return Err(ProtocolError::InvalidParameter(format!(
                "eigenvector {i} not unit"
            )));
        }
        if (gate * &p.vector - &p.vector * p.value).norm() > 1e-8
            || (p.value - 1.0).norm() <= threshold
        {
            return Err(ProtocolError::InvalidParameter(format!(
                "vector {i} is not a nontrivial eigenvector"
            )));
        }
        for q in &pairs[..i] {
            if q.vector.dotc(&p.vector).norm() > 1e-8 {
                return Err(ProtocolError::InvalidParameter(
                    "eigenvectors not orthogonal".into(),
                ));
            }
        }
        proj += outer(&p.vector, &p.vector);
    }
    // The listed vectors must reproduce the gate.
    let mut rebuilt = identity(n) - &proj;
    for p in pairs {
        rebuilt += outer(&p.vector, &p.vector) * p.value;
    }
    if crate::linalg::max_abs_diff(&rebuilt, gate) > 1e-8 {
        return Err(ProtocolError::InvalidParameter(
            "eigenvectors do not span the nontrivial subspace".into(),
        ));
    }
    Ok(())
}

impl Simulator {
    /// Apply `gate` (acting on the last two registers of `input`) as a
    /// sequence of measure, phase, unmeasure rounds, one per nontrivial
    /// eigenvector. `eigen` overrides the computed eigenpairs; it is
    /// required when nontrivial eigenvalues repeat.
    pub fn run_generalized_sim(
        &self,
        gate: &GateSpec,
        input: &PureState,
        m_per_test: usize,
        mode: WMode,
        eigen: Option<Vec<Eigenpair>>,
    ) -> Result<ProtocolResult> {
        let (refs, legs) = split_input(input, 2)?;
        if gate.targets != legs {
            return Err(ProtocolError::Dimension(format!(
                "gate acts on {:?}, input legs are {:?}",
                gate.targets, legs
            )));
        }
        let dims = input.layout().dims()[refs.len()..].to_vec();
        if gate.dim() != dims[0] * dims[1] {
            return Err(ProtocolError::Dimension("gate size".into()));
        }
        let pairs = match eigen {
            Some(p) => {
                check_supplied(&gate.matrix, &p, DEFAULT_EIGEN_THRESHOLD)?;
                p
            }
            None => nontrivial_eigenvectors(&gate.matrix, DEFAULT_EIGEN_THRESHOLD)?,
        };
        let r = pairs.len();
        if mode == WMode::Approx && r > 0 && m_per_test < 2 {
            return Err(ProtocolError::InvalidParameter(
                "m_per_test must be at least 2".into(),
            ));
        }
        let ref_dim = refs
            .iter()
            .map(|l| input.layout().dim_of(l))
            .product::<std::result::Result<usize, _>>()?;
        let approx = mode == WMode::Approx;
        let shape = RunShape {
            ref_dim,
            leg_dims: dims.clone(),
            groups: if approx { r } else { 0 },
            copies: if approx { m_per_test - 1 } else { 0 },
            controls: if approx { vec![m_per_test; r] } else { vec![] },
            flags: r,
        };
        let ctx = format!("r={r}, {}", context(&dims, m_per_test));
        let (mut e, backend) = self.start(input, 2, &shape, &ctx)?;
        let parties = vec![Party::Alice, Party::Bob];
        let plans: Vec<Plan> = (0..r)
            .map(|t| {
                let tag = if r == 1 {
                    String::new()
                } else {
                    format!("_{}_", t + 1)
                };
                let m = if approx { m_per_test } else { 1 };
                Plan::new(legs.clone(), dims.clone(), parties.clone(), m, &tag)
            })
            .collect();
        let mut log = Vec::new();
        for (t, (plan, pair)) in plans.iter().zip(&pairs).enumerate() {
            if approx {
                log.push(format!("test {}: adjoin ancillas", t + 1));
                plan.adjoin_resources(e.as_mut(), &pair.vector)
                    .map_err(|err| err.with_context(&ctx))?;
            } else {
                log.push(format!("test {}: adjoin {}", t + 1, plan.flag));
                e.adjoin_flag(&plan.flag, Party::Bob)?;
            }
        }
        for (t, (plan, pair)) in plans.iter().zip(&pairs).enumerate() {
            let prefix = format!("test {}: ", t + 1);
            if approx {
                plan.core(e.as_mut(), &mut log, &format!("{prefix}measure: "))?;
            } else {
                log.push(format!("{prefix}ideal flag"));
                e.flag_projector(
                    &legs,
                    &outer(&pair.vector, &pair.vector),
                    &plan.flag,
                    Party::Referee,
                )?;
            }
            log.push(format!("{prefix}phase"));
            e.phase_flag(&plan.flag, eigen_phase(pair.value), Party::Bob)?;
            if approx {
                plan.core(e.as_mut(), &mut log, &format!("{prefix}reverse: "))?;
            } else {
                log.push(format!("{prefix}ideal unflag"));
                e.flag_projector(
                    &legs,
                    &outer(&pair.vector, &pair.vector),
                    &plan.flag,
                    Party::Referee,
                )?;
            }
        }
        log.push("discard".into());
        let ledger = e.ledger().clone();
        let keep: Vec<&str> = refs.iter().chain(&legs).map(String::as_str).collect();
        let fin = e.finish()?;
        Ok(ProtocolResult {
            final_density: Some(fin.reduced(&keep)?),
            final_state: None,
            ledger,
            transcript: log,
            backend,
        })
    }
}
