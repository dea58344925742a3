//! The general two-branch input and the explicit output of the catalysed
//! measurement on it, written as `fin = cor + err`.

use rand::Rng;

use super::{AnalysisError, BoundReport, Result};
use crate::linalg::{random_pure, re, CVector};
use crate::model::{Budget, Party, PureState, Register, RegisterLayout};
use crate::protocols::{
    orthonormal_completion, FinalState, MeasurementTarget, RingShape, RingState, CONTROL, FLAG,
};

const UNIT_TOL: f64 = 1e-10;

/// `√p |a₀⟩|α⟩ + √(1−p) |a₁⟩|α⊥⟩` with `⟨α⊥|α⟩ = 0`.
#[derive(Debug, Clone)]
pub struct GeneralInput {
    pub p: f64,
    pub a0: CVector,
    pub a1: CVector,
    pub alpha: MeasurementTarget,
    pub alpha_perp: CVector,
}

impl GeneralInput {
    pub fn new(
        p: f64,
        a0: CVector,
        a1: CVector,
        alpha: MeasurementTarget,
        alpha_perp: CVector,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AnalysisError::InvalidParameter(format!(
                "p = {p} outside [0, 1]"
            )));
        }
        for (name, v) in [("a0", &a0), ("a1", &a1), ("alpha_perp", &alpha_perp)] {
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(AnalysisError::InvalidParameter(format!(
                    "{name} is not a unit vector"
                )));
            }
        }
        if a0.len() != a1.len() {
            return Err(AnalysisError::Dimension(
                "a0 and a1 differ in dimension".into(),
            ));
        }
        if alpha_perp.len() != alpha.vector().len() {
            return Err(AnalysisError::Dimension(
                "alpha_perp lives on the wrong space".into(),
            ));
        }
        if alpha.parties() != 2 {
            return Err(AnalysisError::Dimension("bipartite target expected".into()));
        }
        let overlap = alpha.vector().dotc(&alpha_perp).norm();
        if overlap > UNIT_TOL {
            return Err(AnalysisError::InvalidParameter(format!(
                "alpha_perp overlaps alpha by {overlap:e}"
            )));
        }
        Ok(Self {
            p,
            a0,
            a1,
            alpha,
            alpha_perp,
        })
    }

    /// Random instance: p uniform, Haar-random reference vectors and a
    /// Haar-random direction orthogonal to α.
    pub fn random<R: Rng + ?Sized>(
        alpha: MeasurementTarget,
        ref_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let p = rng.random::<f64>();
        let a0 = random_pure(ref_dim, rng);
        let a1 = random_pure(ref_dim, rng);
        let v = alpha.vector().clone();
        let mut w = random_pure(v.len(), rng);
        w -= &v * v.dotc(&w);
        let w = &w / re(w.norm());
        Self::new(p, a0, a1, alpha, w)
    }

    pub fn ref_dim(&self) -> usize {
        self.a0.len()
    }

    /// The input as a state on `R ⊗ A ⊗ B`.
    pub fn state(&self) -> Result<PureState> {
        let layout = input_layout(self)?;
        let v = self.a0.kronecker(self.alpha.vector()) * re(self.p.sqrt())
            + self.a1.kronecker(&self.alpha_perp) * re((1.0 - self.p).sqrt());
        let n = v.norm();
        Ok(PureState::new(layout, v / re(n))?)
    }
}

fn input_layout(g: &GeneralInput) -> Result<RegisterLayout> {
    let mut regs = vec![Register::new("R", g.ref_dim(), Party::Referee)];
    regs.extend(g.alpha.alpha().layout().registers().iter().cloned());
    Ok(RegisterLayout::new(regs)?)
}

/// Register layout of the catalysed measurement's output for this input.
fn output_layout(g: &GeneralInput, m: usize) -> Result<RegisterLayout> {
    let mut layout = input_layout(g)?;
    let legs: Vec<Register> = g.alpha.alpha().layout().registers().to_vec();
    for i in 2..=m {
        for leg in &legs {
            layout.push(Register::new(
                format!("{}{i}", leg.label),
                leg.dim,
                leg.owner,
            ))?;
        }
    }
    layout.push(Register::new(CONTROL, m, Party::Alice))?;
    layout.push(Register::new(FLAG, 2, Party::Bob))?;
    Ok(layout)
}

/// `fin = cor + err` in the aligned product basis used by the ring
/// backend, so the states can be compared with protocol output directly.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub cor: RingState,
    pub err: RingState,
    pub fin: RingState,
}

impl ClosedForm {
    /// Dense amplitudes of `(cor, err, fin)`, subject to the budget.
    pub fn dense(&self, budget: &Budget) -> Result<(PureState, PureState, PureState)> {
        Ok((
            self.cor.to_dense(budget)?,
            self.err.to_dense(budget)?,
            self.fin.to_dense(budget)?,
        ))
    }
}

/// Build `cor` and `err` from their explicit expressions:
///
/// ```text
/// cor = √p |a₀⟩|α⟩^{⊗m}|s⟩|0⟩ + √(1−p) |a₁⟩|α⊥⟩|α⟩^{⊗m−1}|s⟩|1⟩
/// err = √2 m^{−3/2} √(1−p) Σ_{j,j'} |a₁⟩ [α⊥ in slot j−j'] |j'⟩|−⟩
/// ```
pub fn closed_form_cor_err(g: &GeneralInput, m: usize) -> Result<ClosedForm> {
    if m < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "m = {m}, need m >= 2"
        )));
    }
    let dims = g.alpha.dims();
    let shape = RingShape {
        ref_dims: vec![g.ref_dim()],
        da: dims[0],
        db: dims[1],
        m,
        s: m,
        c: 2,
    };
    let basis = orthonormal_completion(g.alpha.vector())?;
    // Components of α⊥ along u_1, u_2, … (the u_0 = α component is zero).
    let perp = basis.adjoint() * &g.alpha_perp;
    let dp = shape.pair_dim();
    let mf = m as f64;
    let sp = g.p.sqrt();
    let sq = (1.0 - g.p).sqrt();
    let s_amp = 1.0 / mf.sqrt();
    let minus = std::f64::consts::FRAC_1_SQRT_2;
    let err_amp = std::f64::consts::SQRT_2 / mf.powf(1.5) * sq;

    let mut cor = CVector::zeros(shape.len());
    let mut err = CVector::zeros(shape.len());
    for r in 0..g.ref_dim() {
        for j in 0..m {
            cor[shape.slot(r, 0, 0, j, 0)] += g.a0[r] * re(sp * s_amp);
            for e in 1..dp {
                cor[shape.slot(r, e, 0, j, 1)] += g.a1[r] * perp[e] * re(sq * s_amp);
            }
        }
        for j in 0..m {
            for jp in 0..m {
                let pos = (j + m - jp) % m;
                for e in 1..dp {
                    let x = g.a1[r] * perp[e] * re(err_amp * minus);
                    err[shape.slot(r, e, pos, jp, 0)] += x;
                    err[shape.slot(r, e, pos, jp, 1)] -= x;
                }
            }
        }
    }
    let layout = output_layout(g, m)?;
    let fin = &cor + &err;
    let mk =
        |v: CVector| RingState::from_coordinates(layout.clone(), shape.clone(), basis.clone(), v);
    Ok(ClosedForm {
        cor: mk(cor)?,
        err: mk(err)?,
        fin: mk(fin)?,
    })
}

/// Euclidean norm of `a − b`, for protocol output against a closed form.
/// Ring output is compared in coordinates (an isometric change of basis);
/// dense output is compared against the densified closed form.
pub fn amplitude_gap(a: &FinalState, b: &RingState, budget: &Budget) -> Result<f64> {
    match a {
        FinalState::Ring(r) => Ok(r.sub(b)?.norm()),
        FinalState::Dense(d) => {
            let bd = b.to_dense(budget)?;
            if d.dims() != bd.dims() {
                return Err(AnalysisError::Dimension("layouts differ".into()));
            }
            Ok((d.amplitudes() - bd.amplitudes()).norm())
        }
    }
}

/// The three error-term inequalities, evaluated on the closed form:
/// `‖err‖ ≤ √(2(1−p)/m)`, `|⟨cor|err⟩| ≤ √((1−p)/m)` and
/// `|⟨cor|fin⟩| ≥ 1 − √((1−p)/m)` (reported as the deficit
/// `1 − |⟨cor|fin⟩|`).
pub fn verify_appendix_bounds(g: &GeneralInput, m: usize) -> Result<Vec<BoundReport>> {
    let cf = closed_form_cor_err(g, m)?;
    let mf = m as f64;
    let q = 1.0 - g.p;
    let err_norm = cf.err.norm();
    let cor_err = cf.cor.inner(&cf.err)?.norm();
    let cor_fin = cf.cor.inner(&cf.fin)?.norm();
    let ctx = |r: BoundReport| {
        r.with("p", g.p)
            .with("m", m as u64)
            .with("d", (g.alpha.dims()[0] as u64).saturating_sub(1))
    };
    Ok(vec![
        ctx(BoundReport::new(
            "err_norm",
            err_norm,
            (2.0 * q / mf).sqrt(),
        )),
        ctx(BoundReport::new(
            "cor_err_overlap",
            cor_err,
            (q / mf).sqrt(),
        )),
        ctx(
            BoundReport::new("cor_fin_deficit", 1.0 - cor_fin, (q / mf).sqrt())
                .with("fidelity", cor_fin),
        ),
    ])
}
