//! Channels as Kraus lists, and the four channels compared in the error
//! analysis of the catalysed protocols.

use num_complex::Complex64;

use super::{AnalysisError, Result};
use crate::linalg::{hermitian_eigen, re, CMatrix, CVector};
use crate::model::{gate_u_matrix, Party, PureState, Register, RegisterLayout};
use crate::protocols::{FinalState, MeasurementTarget, Simulator, WMode};

/// Eigenvalues below this (relative to the largest) are dropped when
/// building Kraus operators or compressing Gram matrices.
const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Channel {
    pub name: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub kraus: Vec<CMatrix>,
}

impl Channel {
    pub fn new(name: &str, kraus: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(AnalysisError::InvalidParameter("no Kraus operators".into()));
        };
        let (out, inp) = first.shape();
        if kraus.iter().any(|k| k.shape() != (out, inp)) {
            return Err(AnalysisError::Dimension(
                "Kraus operators differ in shape".into(),
            ));
        }
        Ok(Self {
            name: name.to_string(),
            input_dim: inp,
            output_dim: out,
            kraus,
        })
    }

    pub fn unitary(name: &str, u: CMatrix) -> Result<Self> {
        Self::new(name, vec![u])
    }

    pub fn identity(dim: usize) -> Self {
        Self::new("id", vec![CMatrix::identity(dim, dim)]).expect("nonempty")
    }

    /// `Σ K†K`, which is the identity for a trace-preserving channel.
    pub fn completeness(&self) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.input_dim, self.input_dim), |acc, k| {
                acc + k.adjoint() * k
            })
    }

    /// Apply `id_R ⊗ N` to a pure state on `R ⊗ input` with `dim R = ref_dim`.
    pub fn apply_pure(&self, phi: &CVector, ref_dim: usize) -> Result<CMatrix> {
        if phi.len() != ref_dim * self.input_dim {
            return Err(AnalysisError::Dimension(format!(
                "state of size {} for reference {ref_dim} and input {}",
                phi.len(),
                self.input_dim
            )));
        }
        let n = ref_dim * self.output_dim;
        let mut out = CMatrix::zeros(n, n);
        // Column r of Φ holds the input block paired with reference |r⟩.
        let phi_mat = CMatrix::from_fn(self.input_dim, ref_dim, |i, r| phi[r * self.input_dim + i]);
        for k in &self.kraus {
            let img = k * &phi_mat;
            let v = CVector::from_fn(n, |idx, _| {
                img[(idx % self.output_dim, idx / self.output_dim)]
            });
            out += &v * v.adjoint();
        }
        Ok(out)
    }

    /// Apply `N` to the factors `targets` of an operator on `dims`, which
    /// must hold `input_dim` jointly. Requires `output_dim == input_dim`.
    pub fn apply_on_factors(
        &self,
        rho: &CMatrix,
        dims: &[usize],
        targets: &[usize],
    ) -> Result<CMatrix> {
        if self.output_dim != self.input_dim {
            return Err(AnalysisError::Dimension("channel changes dimension".into()));
        }
        let local: usize = targets.iter().map(|&t| dims[t]).product();
        if local != self.input_dim {
            return Err(AnalysisError::Dimension(format!(
                "targets span {local}, channel acts on {}",
                self.input_dim
            )));
        }
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus {
            let full = embed(k, dims, targets)?;
            out += &full * rho * full.adjoint();
        }
        Ok(out)
    }
}

/// `op` on the `targets` factors, identity elsewhere.
fn embed(op: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    use crate::linalg::{complement, factor_offsets};
    let n: usize = dims.iter().product();
    let t_off = factor_offsets(dims, targets);
    let r_off = factor_offsets(dims, &complement(dims.len(), targets));
    if t_off.len() != op.nrows() {
        return Err(AnalysisError::Dimension("operator size".into()));
    }
    let mut full = CMatrix::zeros(n, n);
    for &r in &r_off {
        for (i, &ti) in t_off.iter().enumerate() {
            for (j, &tj) in t_off.iter().enumerate() {
                full[(r + ti, r + tj)] = op[(i, j)];
            }
        }
    }
    Ok(full)
}

/// Kraus operators from a Choi matrix `J = Σ_{kl} |k⟩⟨l| ⊗ N(|k⟩⟨l|)`.
fn kraus_from_choi(j: &CMatrix, input_dim: usize, output_dim: usize) -> Result<Vec<CMatrix>> {
    let (vals, vecs) = hermitian_eigen(j)?;
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let mut kraus = Vec::new();
    for (i, &lambda) in vals.iter().enumerate() {
        if lambda <= RANK_TOL * top.max(1.0) {
            continue;
        }
        let v = vecs.column(i);
        let s = re(lambda.sqrt());
        kraus.push(CMatrix::from_fn(output_dim, input_dim, |o, k| {
            v[k * output_dim + o] * s
        }));
    }
    Ok(kraus)
}

/// Isometric coordinates preserving every inner product among `states`:
/// returns one coordinate vector per state, all of length ≤ `states.len()`.
fn compress(states: &[&FinalState]) -> Result<Vec<CVector>> {
    let n = states.len();
    let mut gram = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let g = states[a].inner(states[b])?;
            gram[(a, b)] = g;
            gram[(b, a)] = g.conj();
        }
    }
    let (vals, vecs) = hermitian_eigen(&gram)?;
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > RANK_TOL * top).collect();
    // Γ = Q Λ Q†, so column b of Λ^{1/2} Q† has Gram matrix Γ.
    Ok((0..n)
        .map(|b| {
            CVector::from_iterator(
                keep.len(),
                keep.iter()
                    .map(|&i| re(vals[i].sqrt()) * vecs[(b, i)].conj()),
            )
        })
        .collect())
}

fn basis_input(target: &MeasurementTarget, k: usize) -> Result<PureState> {
    let layout = target.alpha().layout().clone();
    let dims = layout.dims();
    let digits = [k / dims[1], k % dims[1]];
    Ok(PureState::basis(layout, &digits)?)
}

/// The catalysed measurement and the ideal one as isometries into a common
/// space of dimension at most `2·dim(AB)`. Both see the catalysts, `S`
/// and `C` in their output, so their output spaces coincide.
pub fn ma_mi_channels(
    sim: &Simulator,
    target: &MeasurementTarget,
    m: usize,
) -> Result<(Channel, Channel)> {
    let dim = target.vector().len();
    let mut fins = Vec::with_capacity(dim);
    let mut cors = Vec::with_capacity(dim);
    for k in 0..dim {
        let input = basis_input(target, k)?;
        let run = sim.run_approx_measurement(&input, target, m)?;
        fins.push(run.final_state.expect("measurement keeps its state"));
        cors.push(sim.ideal_reference(&input, target, m)?);
    }
    let all: Vec<&FinalState> = fins.iter().chain(cors.iter()).collect();
    let coords = compress(&all)?;
    let va = CMatrix::from_columns(&coords[..dim]);
    let vi = CMatrix::from_columns(&coords[dim..]);
    Ok((
        Channel::new("M_a", vec![va])?,
        Channel::new("M_i", vec![vi])?,
    ))
}

/// The simulation protocol as a channel on `A ⊗ B`, from one run on a
/// maximally entangled input.
pub fn w_channel(sim: &Simulator, d: usize, m: usize, mode: WMode) -> Result<Channel> {
    let n = (d + 1) * (d + 1);
    let layout = RegisterLayout::new(vec![
        Register::new("R", n, Party::Referee),
        Register::new("A", d + 1, Party::Alice),
        Register::new("B", d + 1, Party::Bob),
    ])?;
    let mut omega = CVector::zeros(n * n);
    for k in 0..n {
        omega[k * n + k] = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    }
    let input = PureState::new(layout, omega)?;
    let run = sim.run_w(&input, d, m, mode)?;
    let rho = run
        .final_density
        .expect("gate simulation returns a density");
    let choi = rho.matrix() * re(n as f64);
    Channel::new(&format!("W({mode})"), kraus_from_choi(&choi, n, n)?)
}

pub fn u_channel(d: usize) -> Result<Channel> {
    Channel::unitary("U", gate_u_matrix(d))
}
