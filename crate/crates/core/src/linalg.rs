//! Dense complex linear algebra and entropic functionals.
//!
//! Everything here works on `nalgebra` dense matrices of `Complex64`. Entropies
//! are reported in bits. Hermitian eigensolves symmetrize their input first, so
//! callers can pass matrices that carry a little roundoff asymmetry.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance used when validating states and operators.
pub const VALIDITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("factor index {index} out of range for {factors} factors")]
    IndexOutOfRange { index: usize, factors: usize },
    #[error("invalid subsystem selection: {0}")]
    BadSelection(String),
    #[error("not a density operator: {0}")]
    InvalidDensity(String),
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Kronecker product `a ⊗ b`. Works for column vectors too since they are
/// just `n x 1` matrices.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Tensor product of a list of vectors, first factor most significant.
pub fn tensor_all(parts: &[CVector]) -> CVector {
    parts
        .iter()
        .fold(CVector::from_element(1, re(1.0)), |acc, v| acc.kronecker(v))
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = re(1.0);
    v
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * re(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`; eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.0)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|x| x.abs()).sum())
}

/// Offsets into a flat row-major tensor index for every multi-index over the
/// selected factors. Full index = Σ digit·stride is separable, so any index
/// splits as `offsets(selected)[i] + offsets(rest)[j]`.
pub fn factor_offsets(dims: &[usize], selected: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut offsets = vec![0usize];
    for &f in selected {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &o in &offsets {
            for digit in 0..dims[f] {
                next.push(o + digit * strides[f]);
            }
        }
        offsets = next;
    }
    offsets
}

fn check_selection(factors: usize, keep: &[usize]) -> Result<()> {
    for (i, &k) in keep.iter().enumerate() {
        if k >= factors {
            return Err(LinalgError::IndexOutOfRange { index: k, factors });
        }
        if keep[..i].contains(&k) {
            return Err(LinalgError::BadSelection(format!(
                "factor {k} listed twice"
            )));
        }
    }
    Ok(())
}

pub fn complement(factors: usize, keep: &[usize]) -> Vec<usize> {
    (0..factors).filter(|f| !keep.contains(f)).collect()
}

/// Partial trace of an arbitrary square matrix over the factors not in `keep`.
/// The kept factors appear in the order given.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_selection(dims.len(), keep)?;
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(LinalgError::DimensionMismatch(m.nrows(), total));
    }
    let rest = complement(dims.len(), keep);
    let ko = factor_offsets(dims, keep);
    let ro = factor_offsets(dims, &rest);
    let mut out = CMatrix::zeros(ko.len(), ko.len());
    for (i, &oi) in ko.iter().enumerate() {
        for (j, &oj) in ko.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &t in &ro {
                acc += m[(oi + t, oj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a pure vector without forming `|ψ⟩⟨ψ|`.
pub fn reduced_from_pure(psi: &CVector, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_selection(dims.len(), keep)?;
    let total: usize = dims.iter().product();
    if psi.len() != total {
        return Err(LinalgError::DimensionMismatch(psi.len(), total));
    }
    let rest = complement(dims.len(), keep);
    let ko = factor_offsets(dims, keep);
    let ro = factor_offsets(dims, &rest);
    let mut out = CMatrix::zeros(ko.len(), ko.len());
    for &t in &ro {
        for (i, &oi) in ko.iter().enumerate() {
            let a = psi[oi + t];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, &oj) in ko.iter().enumerate() {
                out[(i, j)] += a * psi[oj + t].conj();
            }
        }
    }
    Ok(out)
}

/// A validated density operator on a tensor product of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if matrix.nrows() != total {
            return Err(LinalgError::DimensionMismatch(matrix.nrows(), total));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LinalgError::InvalidDensity("non-finite entry".into()));
        }
        let asym = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > VALIDITY_TOL {
            return Err(LinalgError::InvalidDensity(format!(
                "not Hermitian ({asym:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > VALIDITY_TOL || tr.im.abs() > VALIDITY_TOL {
            return Err(LinalgError::InvalidDensity(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&matrix)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -VALIDITY_TOL {
            return Err(LinalgError::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        Ok(Self { matrix, dims })
    }

    pub fn from_pure(psi: &CVector, dims: Vec<usize>) -> Result<Self> {
        Self::new(outer(psi, psi), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            matrix: identity(n) * re(1.0 / n as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityOperator {
            matrix: tensor_product(&self.matrix, &other.matrix),
            dims,
        }
    }
}

pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(LinalgError::BadSelection("nothing kept".into()));
    }
    let m = partial_trace_matrix(rho.matrix(), rho.dims(), keep)?;
    let dims = keep.iter().map(|&k| rho.dims()[k]).collect();
    // Output of a valid input is valid up to roundoff; re-symmetrize.
    Ok(DensityOperator {
        matrix: hermitian_part(&m),
        dims,
    })
}

/// Squared Schmidt coefficients across the cut `factors(cut) | rest`,
/// sorted descending.
pub fn schmidt_spectrum(psi: &CVector, dims: &[usize], cut: &[usize]) -> Result<Vec<f64>> {
    check_selection(dims.len(), cut)?;
    if cut.is_empty() || cut.len() == dims.len() {
        return Err(LinalgError::BadSelection(
            "cut must be a proper nonempty subset".into(),
        ));
    }
    let total: usize = dims.iter().product();
    if psi.len() != total {
        return Err(LinalgError::DimensionMismatch(psi.len(), total));
    }
    let rest = complement(dims.len(), cut);
    let co = factor_offsets(dims, cut);
    let ro = factor_offsets(dims, &rest);
    let m = CMatrix::from_fn(co.len(), ro.len(), |i, j| psi[co[i] + ro[j]]);
    let mut values: Vec<f64> = m
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Shannon entropy (bits) of a probability list; `0·log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy_of_matrix(m: &CMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    // Negative roundoff eigenvalues carry no entropy.
    Ok(shannon_entropy(&values))
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(rho.matrix()).expect("density operators are square")
}

/// ½‖a − b‖₁.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(LinalgError::DimensionMismatch(a.dim(), b.dim()));
    }
    trace_distance_matrices(a.matrix(), b.matrix())
}

pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(0.5 * trace_norm_hermitian(&(a - b))?)
}

/// ½‖|a⟩⟨a| − |b⟩⟨b|‖₁ for unit vectors, via the overlap.
pub fn pure_trace_distance(a: &CVector, b: &CVector) -> f64 {
    let f = inner(a, b).norm_sqr().min(1.0);
    (1.0 - f).sqrt()
}

pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(LinalgError::Domain(x));
    }
    Ok(shannon_entropy(&[x, 1.0 - x]))
}

/// H(Y|Z) = H(YZ) − H(Z), where `y` lists the factors of Y and Z is
/// everything else.
pub fn conditional_entropy(rho: &DensityOperator, y: &[usize]) -> Result<f64> {
    check_selection(rho.dims().len(), y)?;
    if y.is_empty() {
        return Err(LinalgError::BadSelection("Y is empty".into()));
    }
    let z = complement(rho.dims().len(), y);
    let h_yz = von_neumann_entropy(rho);
    if z.is_empty() {
        return Ok(h_yz);
    }
    let h_z = von_neumann_entropy(&partial_trace(rho, &z)?);
    Ok(h_yz - h_z)
}

/// Classically labelled list of states.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<(f64, DensityOperator)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, DensityOperator)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(LinalgError::InvalidEnsemble("empty".into()));
        };
        let dims = first.dims().to_vec();
        let mut total = 0.0;
        for (p, rho) in &members {
            if !(*p >= 0.0) {
                return Err(LinalgError::InvalidEnsemble(format!("probability {p}")));
            }
            if rho.dims() != dims.as_slice() {
                return Err(LinalgError::InvalidEnsemble(
                    "members on different spaces".into(),
                ));
            }
            total += p;
        }
        if (total - 1.0).abs() > VALIDITY_TOL {
            return Err(LinalgError::InvalidEnsemble(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, DensityOperator)] {
        &self.members
    }

    pub fn dims(&self) -> &[usize] {
        self.members[0].1.dims()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Average state Σ pₓ ρₓ.
    pub fn average(&self) -> CMatrix {
        let n = self.members[0].1.dim();
        self.members
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (p, rho)| {
                acc + rho.matrix() * re(*p)
            })
    }
}

/// Holevo information of the ensemble restricted to the factors in `subsystem`.
pub fn holevo_information(e: &Ensemble, subsystem: &[usize]) -> Result<f64> {
    let dims = e.dims().to_vec();
    let mut avg: Option<CMatrix> = None;
    let mut mean_entropy = 0.0;
    for (p, rho) in e.members() {
        let reduced = partial_trace_matrix(rho.matrix(), &dims, subsystem)?;
        mean_entropy += p * entropy_of_matrix(&reduced)?;
        let term = reduced * re(*p);
        avg = Some(match avg {
            Some(a) => a + term,
            None => term,
        });
    }
    let h_avg = entropy_of_matrix(&avg.expect("nonempty ensemble"))?;
    Ok((h_avg - mean_entropy).max(0.0))
}

/// Haar-random unit vector from normalized complex Gaussian amplitudes.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / re(n)
}

/// Random density matrix of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, rank.max(1), |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    hermitian_part(&(m / tr))
}

/// Max |a_ij - b_ij|.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(&(m.adjoint() * m), &identity(m.nrows())) <= tol
}
