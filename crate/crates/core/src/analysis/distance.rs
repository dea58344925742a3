//! Lower estimates of the diamond distance between two channels from
//! searches over pure inputs with a reference system.
//!
//! Every value is `½‖(id ⊗ A)(φ) − (id ⊗ B)(φ)‖₁` for some explicit `φ`, so
//! it can only under-estimate half the diamond norm.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{AnalysisError, BoundReport, Channel, Result};
use crate::linalg::{c, random_pure, re, trace_distance_matrices, CVector};
use crate::protocols::orthonormal_completion;

/// Restarts used by the ansatz strategy when the caller has no preference.
pub const DEFAULT_RESTARTS: usize = 20;

const MIN_STEP: f64 = 1e-4;
const MAX_EVALS_PER_RESTART: usize = 4000;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Restarts (ansatz) or samples (random).
    pub trials: usize,
    pub seed: u64,
    /// State the ansatz family is built around.
    pub target: Option<CVector>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub value: f64,
    pub ref_dim: usize,
    /// Best input found, on `R ⊗ input`.
    pub input: CVector,
    pub evaluations: usize,
}

pub trait DistanceStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn search(&self, a: &Channel, b: &Channel, cfg: &SearchConfig) -> Result<SearchOutcome>;
}

fn distance(a: &Channel, b: &Channel, phi: &CVector, ref_dim: usize) -> Result<f64> {
    let x = a.apply_pure(phi, ref_dim)?;
    let y = b.apply_pure(phi, ref_dim)?;
    Ok(trace_distance_matrices(&x, &y)?)
}

/// Haar-random inputs with a reference as large as the input.
pub struct RandomStrategy;

impl DistanceStrategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn search(&self, a: &Channel, b: &Channel, cfg: &SearchConfig) -> Result<SearchOutcome> {
        let r = a.input_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut best = SearchOutcome {
            value: f64::NEG_INFINITY,
            ref_dim: r,
            input: CVector::zeros(r * r),
            evaluations: 0,
        };
        for _ in 0..cfg.trials.max(1) {
            let phi = random_pure(r * r, &mut rng);
            let v = distance(a, b, &phi, r)?;
            best.evaluations += 1;
            if v > best.value {
                best.value = v;
                best.input = phi;
            }
        }
        Ok(best)
    }
}

/// Inputs `√p |a₀⟩|α⟩ + √(1−p) |a₁⟩|α⊥⟩` with a two-dimensional
/// reference, refined coordinate-wise from random starting points.
///
/// Parameters: `p = sin²x₀`, `a₀ = |0⟩`,
/// `a₁ = cos x₁ |0⟩ + e^{i x₂} sin x₁ |1⟩`, and `α⊥` given by unnormalized
/// complex coordinates along an orthonormal basis of `α`'s complement.
pub struct AnsatzStrategy;

impl AnsatzStrategy {
    fn build(params: &[f64], alpha: &CVector, perp_basis: &[CVector]) -> CVector {
        let p = params[0].sin().powi(2);
        let a0 = CVector::from_vec(vec![re(1.0), re(0.0)]);
        let a1 = CVector::from_vec(vec![
            re(params[1].cos()),
            c(0.0, params[2]).exp() * params[1].sin(),
        ]);
        let mut perp = CVector::zeros(alpha.len());
        for (i, u) in perp_basis.iter().enumerate() {
            perp += u * c(params[3 + 2 * i], params[4 + 2 * i]);
        }
        let n = perp.norm();
        let perp = if n > 1e-12 {
            perp / re(n)
        } else {
            perp_basis[0].clone()
        };
        a0.kronecker(alpha) * re(p.sqrt()) + a1.kronecker(&perp) * re((1.0 - p).sqrt())
    }
}

impl DistanceStrategy for AnsatzStrategy {
    fn name(&self) -> &'static str {
        "ansatz"
    }

    fn search(&self, a: &Channel, b: &Channel, cfg: &SearchConfig) -> Result<SearchOutcome> {
        let alpha = cfg.target.clone().ok_or_else(|| {
            AnalysisError::InvalidParameter("ansatz search needs a target state".into())
        })?;
        if alpha.len() != a.input_dim || alpha.len() < 2 {
            return Err(AnalysisError::Dimension(
                "target does not match channel input".into(),
            ));
        }
        let basis = orthonormal_completion(&alpha)?;
        let perp_basis: Vec<CVector> = (1..alpha.len())
            .map(|i| basis.column(i).into_owned())
            .collect();
        let alpha = basis.column(0).into_owned();
        let n_params = 3 + 2 * perp_basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut evals = 0usize;
        let eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
            *evals += 1;
            distance(a, b, &Self::build(x, &alpha, &perp_basis), 2)
        };
        let mut best_val = f64::NEG_INFINITY;
        let mut best_x = vec![0.0; n_params];
        for _ in 0..cfg.trials.max(1) {
            let mut x: Vec<f64> = (0..n_params)
                .map(|i| {
                    if i < 3 {
                        rng.random::<f64>() * PI
                    } else {
                        rng.sample(StandardNormal)
                    }
                })
                .collect();
            let mut val = eval(&x, &mut evals)?;
            let mut step = 0.5;
            let start = evals;
            while step > MIN_STEP && evals - start < MAX_EVALS_PER_RESTART {
                let mut improved = false;
                for i in 0..n_params {
                    for dir in [1.0, -1.0] {
                        let mut y = x.clone();
                        y[i] += dir * step;
                        let v = eval(&y, &mut evals)?;
                        if v > val {
                            val = v;
                            x = y;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            if val > best_val {
                best_val = val;
                best_x = x;
            }
        }
        Ok(SearchOutcome {
            value: best_val,
            ref_dim: 2,
            input: Self::build(&best_x, &alpha, &perp_basis),
            evaluations: evals,
        })
    }
}

pub struct StrategyRegistry {
    strategies: Vec<Box<dyn DistanceStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self {
            strategies: vec![Box::new(AnsatzStrategy), Box::new(RandomStrategy)],
        }
    }
}

impl StrategyRegistry {
    pub fn register(&mut self, s: Box<dyn DistanceStrategy>) {
        self.strategies.retain(|x| x.name() != s.name());
        self.strategies.push(s);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn DistanceStrategy> {
        self.strategies
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| AnalysisError::InvalidParameter(format!("unknown strategy {name:?}")))
    }
}

/// Search with the named strategy and compare the estimate with `bound`.
pub fn channel_distance_search(
    a: &Channel,
    b: &Channel,
    strategy: &str,
    cfg: &SearchConfig,
    bound: f64,
) -> Result<(BoundReport, SearchOutcome)> {
    if a.input_dim != b.input_dim || a.output_dim != b.output_dim {
        return Err(AnalysisError::Dimension(format!(
            "channels {} and {} act on different spaces",
            a.name, b.name
        )));
    }
    let registry = StrategyRegistry::default();
    let out = registry.get(strategy)?.search(a, b, cfg)?;
    let report = BoundReport::new("channel_distance", out.value, bound)
        .with("channels", format!("{} vs {}", a.name, b.name))
        .with("strategy", strategy)
        .with("trials", cfg.trials as u64)
        .with("seed", cfg.seed)
        .with("reference_dim", out.ref_dim as u64);
    Ok((report, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ma_mi_channels, u_channel};
    use crate::protocols::{MeasurementTarget, Simulator};

    #[test]
    fn identical_channels_are_at_distance_zero() {
        let u = u_channel(1).unwrap();
        let target = MeasurementTarget::phi_minus(1).unwrap();
        for s in ["ansatz", "random"] {
            let cfg = SearchConfig {
                trials: 3,
                seed: 1,
                target: Some(target.vector().clone()),
            };
            let (r, _) = channel_distance_search(&u, &u, s, &cfg, 0.0).unwrap();
            assert!(r.measured.abs() < 1e-7 && r.satisfied, "{s}");
        }
    }

    #[test]
    fn ansatz_finds_the_analytic_maximum() {
        // For the measurement pair the maximum is at p = 0:
        // √(1 − (1 − 1/m)²).
        let sim = Simulator::default();
        let target = MeasurementTarget::phi_minus(1).unwrap();
        for m in [2, 4] {
            let (ma, mi) = ma_mi_channels(&sim, &target, m).unwrap();
            let cfg = SearchConfig {
                trials: 4,
                seed: 7,
                target: Some(target.vector().clone()),
            };
            let bound = (2.0 / m as f64).sqrt();
            let (r, best) = channel_distance_search(&ma, &mi, "ansatz", &cfg, bound).unwrap();
            let exact = (1.0 - (1.0 - 1.0 / m as f64).powi(2)).sqrt();
            assert!((r.measured - exact).abs() < 1e-6, "m={m}: {}", r.measured);
            assert!(r.satisfied);
            assert_eq!(best.ref_dim, 2);
        }
    }

    #[test]
    fn unknown_strategy_and_mismatched_channels() {
        let u1 = u_channel(1).unwrap();
        let u2 = u_channel(2).unwrap();
        let cfg = SearchConfig {
            trials: 1,
            seed: 0,
            target: None,
        };
        assert!(channel_distance_search(&u1, &u2, "random", &cfg, 1.0).is_err());
        assert!(channel_distance_search(&u1, &u1, "sdp", &cfg, 1.0).is_err());
        assert!(channel_distance_search(&u1, &u1, "ansatz", &cfg, 1.0).is_err());
    }
}
