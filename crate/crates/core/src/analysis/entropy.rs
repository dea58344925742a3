//! Mutual-information gains, the per-ensemble continuity inequality and the
//! Fannes–Alicki bound.

use super::{AnalysisError, BoundReport, Channel, Result};
use crate::linalg::{
    binary_entropy, conditional_entropy, holevo_information, trace_distance_matrices,
    von_neumann_entropy, CMatrix, DensityOperator, Ensemble,
};
use crate::model::PureState;

/// Ensemble of states on `A' ⊗ A ⊗ B ⊗ B'` style factor lists, with the
/// positions of the channel's `A, B` and of Bob's side `B, B'`.
#[derive(Debug, Clone)]
pub struct CqEnsemble {
    pub ensemble: Ensemble,
    /// Factors the channel acts on, in the channel's input order.
    pub ab: Vec<usize>,
    /// Factors whose Holevo information with the label is measured.
    pub bob: Vec<usize>,
}

impl CqEnsemble {
    pub fn new(ensemble: Ensemble, ab: Vec<usize>, bob: Vec<usize>) -> Result<Self> {
        let n = ensemble.dims().len();
        if ab.iter().chain(&bob).any(|&i| i >= n) || ab.is_empty() || bob.is_empty() {
            return Err(AnalysisError::Dimension("factor index out of range".into()));
        }
        Ok(Self { ensemble, ab, bob })
    }

    fn apply(&self, channel: &Channel) -> Result<Ensemble> {
        let dims = self.ensemble.dims().to_vec();
        let members = self
            .ensemble
            .members()
            .iter()
            .map(|(p, rho)| {
                let out = channel.apply_on_factors(rho.matrix(), &dims, &self.ab)?;
                Ok((
                    *p,
                    DensityOperator::new(crate::linalg::hermitian_part(&out), dims.clone())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble::new(members)?)
    }

    pub fn holevo(&self) -> Result<f64> {
        Ok(holevo_information(&self.ensemble, &self.bob)?)
    }
}

/// `I(X; BB')` after the channel minus before.
pub fn mutual_info_gain(channel: &Channel, cq: &CqEnsemble) -> Result<f64> {
    let after = cq.apply(channel)?;
    Ok(holevo_information(&after, &cq.bob)? - cq.holevo()?)
}

/// `8 ε log₂(d+1) + 4 H₂(ε)`. For `ε > 1` the entropy term is dropped:
/// the linear term alone already exceeds the largest possible gap
/// `4 log₂(d+1)`.
pub fn continuity_bound(epsilon: f64, d: usize) -> Result<f64> {
    let h = if epsilon <= 1.0 {
        binary_entropy(epsilon)?
    } else {
        0.0
    };
    Ok(8.0 * epsilon * ((d + 1) as f64).log2() + 4.0 * h)
}

/// Per-ensemble continuity: `|I(X;BB')_{A(ρ)} − I(X;BB')_{B(ρ)}|` against
/// `8ε log₂(d+1) + 4H₂(ε)`. The supplied `epsilon` must dominate the
/// trace distance between the two output ensembles; otherwise a
/// [`AnalysisError::Precondition`] error is returned.
pub fn continuity_gap_check(
    chan_a: &Channel,
    chan_b: &Channel,
    epsilon: f64,
    cq: &CqEnsemble,
    d: usize,
) -> Result<BoundReport> {
    let ea = cq.apply(chan_a)?;
    let eb = cq.apply(chan_b)?;
    let dist = ensemble_distance(&ea, &eb)?;
    if dist > epsilon + super::BOUND_SLACK {
        return Err(AnalysisError::Precondition(format!(
            "output distance {dist} exceeds epsilon {epsilon}"
        )));
    }
    let gap = (holevo_information(&ea, &cq.bob)? - holevo_information(&eb, &cq.bob)?).abs();
    Ok(
        BoundReport::new("continuity_gap", gap, continuity_bound(epsilon, d)?)
            .with("channels", format!("{} vs {}", chan_a.name, chan_b.name))
            .with("d", d as u64)
            .with("epsilon", epsilon)
            .with("output_trace_distance", dist)
            .with("output_trace_norm", 2.0 * dist),
    )
}

// The label is classical, so the distance splits over members.
fn ensemble_distance(ea: &Ensemble, eb: &Ensemble) -> Result<f64> {
    let mut dist = 0.0;
    for ((p, x), (_, y)) in ea.members().iter().zip(eb.members()) {
        dist += p * trace_distance_matrices(x.matrix(), y.matrix())?;
    }
    Ok(dist)
}

/// Trace distance between the two channels' output ensembles.
pub fn output_distance(chan_a: &Channel, chan_b: &Channel, cq: &CqEnsemble) -> Result<f64> {
    ensemble_distance(&cq.apply(chan_a)?, &cq.apply(chan_b)?)
}

/// `4 ε log₂ dim Y + 2 H₂(ε)`, with the entropy term dropped for `ε > 1`.
pub fn fannes_alicki_bound(epsilon: f64, dim_y: usize) -> Result<f64> {
    let h = if epsilon <= 1.0 {
        binary_entropy(epsilon)?
    } else {
        0.0
    };
    Ok(4.0 * epsilon * (dim_y as f64).log2() + 2.0 * h)
}

/// `|H(Y|Z)_σ − H(Y|Z)_σ'|` against the Fannes–Alicki bound, with
/// `ε = ‖σ − σ'‖₁`. `y` lists the factors of Y; Z is the rest.
pub fn fannes_alicki_check(
    sigma: &DensityOperator,
    sigma_prime: &DensityOperator,
    y: &[usize],
) -> Result<BoundReport> {
    if sigma.dims() != sigma_prime.dims() {
        return Err(AnalysisError::Dimension("σ and σ' differ in dims".into()));
    }
    let epsilon = 2.0 * trace_distance_matrices(sigma.matrix(), sigma_prime.matrix())?;
    let dim_y: usize = y.iter().map(|&i| sigma.dims()[i]).product();
    let dim_z = sigma.dim() / dim_y;
    let gap = (conditional_entropy(sigma, y)? - conditional_entropy(sigma_prime, y)?).abs();
    Ok(
        BoundReport::new("fannes_alicki", gap, fannes_alicki_bound(epsilon, dim_y)?)
            .with("epsilon", epsilon)
            .with("dim_y", dim_y as u64)
            .with("dim_z", dim_z as u64),
    )
}

/// Change in entanglement entropy across `cut` when `gate` acts on the
/// whole of `input`.
pub fn entanglement_delta(gate: &CMatrix, input: &PureState, cut: &[&str]) -> Result<f64> {
    let n = input.amplitudes().len();
    if gate.shape() != (n, n) {
        return Err(AnalysisError::Dimension(format!(
            "gate of size {} for a state of size {n}",
            gate.nrows()
        )));
    }
    let out = PureState::from_parts(input.layout().clone(), gate * input.amplitudes())?;
    let before = von_neumann_entropy(&input.reduced(cut)?);
    let after = von_neumann_entropy(&out.reduced(cut)?);
    Ok(after - before)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::u_channel;
    use crate::linalg::{basis_vector, outer, random_density, re, CVector};
    use crate::model::{gate_u_matrix, make_phi, Party, Register, RegisterLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ab(d: usize) -> RegisterLayout {
        RegisterLayout::new(vec![
            Register::new("A", d + 1, Party::Alice),
            Register::new("B", d + 1, Party::Bob),
        ])
        .unwrap()
    }

    #[test]
    fn entanglement_delta_examples() {
        for d in 2..=4 {
            let u = gate_u_matrix(d);
            let zero = PureState::basis(ab(d), &[0, 0]).unwrap();
            let phi = make_phi(d).unwrap();
            let ld = (d as f64).log2();
            assert!((entanglement_delta(&u, &zero, &["A"]).unwrap() - ld).abs() < 1e-9);
            assert!((entanglement_delta(&u, &phi, &["A"]).unwrap() + ld).abs() < 1e-9);
            let fixed = PureState::basis(ab(d), &[1, 2]).unwrap();
            assert!(entanglement_delta(&u, &fixed, &["A"]).unwrap().abs() < 1e-12);
        }
    }

    fn pure_member(v: &CVector, dims: Vec<usize>) -> DensityOperator {
        DensityOperator::from_pure(v, dims).unwrap()
    }

    #[test]
    fn mutual_info_gain_examples() {
        // {|00⟩, |Φ⟩} with d = 2: U swaps the two states, gain 0.
        let d = 2;
        let n = (d + 1) * (d + 1);
        let members = vec![
            (0.5, pure_member(&basis_vector(n, 0), vec![d + 1, d + 1])),
            (
                0.5,
                pure_member(make_phi(d).unwrap().amplitudes(), vec![d + 1, d + 1]),
            ),
        ];
        let cq = CqEnsemble::new(Ensemble::new(members).unwrap(), vec![0, 1], vec![1]).unwrap();
        let u = u_channel(d).unwrap();
        assert!(mutual_info_gain(&u, &cq).unwrap().abs() < 1e-10);
        // Bob's half alone: |0⟩ vs maximally mixed on {1, 2}, I = 1.
        assert!((cq.holevo().unwrap() - 1.0).abs() < 1e-10);
        let id = Channel::identity(n);
        assert!(mutual_info_gain(&id, &cq).unwrap().abs() < 1e-12);

        // A channel copying A's basis value into B gains log₂|X|.
        let q = 4;
        let mut cnot = CMatrix::zeros(q * q, q * q);
        for a in 0..q {
            for b in 0..q {
                cnot[(a * q + (a + b) % q, a * q + b)] = re(1.0);
            }
        }
        let copy = Channel::unitary("copy", cnot).unwrap();
        let members = (0..q)
            .map(|x| (0.25, pure_member(&basis_vector(q * q, x * q), vec![q, q])))
            .collect();
        let cq = CqEnsemble::new(Ensemble::new(members).unwrap(), vec![0, 1], vec![1]).unwrap();
        assert!((mutual_info_gain(&copy, &cq).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn fannes_alicki_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = DensityOperator::new(random_density(4, 4, &mut rng), vec![2, 2]).unwrap();
        let r = fannes_alicki_check(&s, &s, &[0]).unwrap();
        assert!(r.measured.abs() < 1e-12 && r.bound.abs() < 1e-12 && r.satisfied);

        // Orthogonal pure states: ε = 2, bound 4·2·1.
        let a = pure_member(&basis_vector(4, 0), vec![2, 2]);
        let b = pure_member(&basis_vector(4, 3), vec![2, 2]);
        let r = fannes_alicki_check(&a, &b, &[0]).unwrap();
        assert!((r.bound - 8.0).abs() < 1e-12 && r.satisfied);

        // Same Y-marginal pair, growing Z in a fixed state: identical bound.
        let sy = random_density(2, 2, &mut rng);
        let sy2 = random_density(2, 2, &mut rng);
        let mut bounds = vec![];
        for dz in [2, 4, 8] {
            let z = outer(&basis_vector(dz, 0), &basis_vector(dz, 0));
            let x = DensityOperator::new(sy.kronecker(&z), vec![2, dz]).unwrap();
            let y = DensityOperator::new(sy2.kronecker(&z), vec![2, dz]).unwrap();
            bounds.push(fannes_alicki_check(&x, &y, &[0]).unwrap().bound);
        }
        assert!(bounds.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }

    #[test]
    fn continuity_identical_channels_and_precondition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = u_channel(1).unwrap();
        let members = (0..3)
            .map(|_| {
                (
                    1.0 / 3.0,
                    DensityOperator::new(random_density(4, 2, &mut rng), vec![2, 2]).unwrap(),
                )
            })
            .collect();
        let cq = CqEnsemble::new(Ensemble::new(members).unwrap(), vec![0, 1], vec![1]).unwrap();
        let r = continuity_gap_check(&u, &u, 0.0, &cq, 1).unwrap();
        assert!(r.measured < 1e-12 && r.satisfied);
        let id = Channel::identity(4);
        assert!(matches!(
            continuity_gap_check(&u, &id, 1e-6, &cq, 1),
            Err(AnalysisError::Precondition(_))
        ));
    }
}
