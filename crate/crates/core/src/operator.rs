//! Square complex operators and Hilbert-Schmidt orthonormal operator
//! subspaces.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, c, CMat, RMat, ONE, ZERO};

/// Default relative rank tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An `n x n` complex matrix: a state, observable or Kraus operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMat);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl Operator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        Ok(Operator(m))
    }

    /// Builds from row-major entries.
    pub fn from_rows(n: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        Operator::new(CMat::from_row_slice(n, n, entries))
    }

    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<Complex64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Operator::from_rows(n, &z)
    }

    pub fn identity(n: usize) -> Self {
        Operator(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Operator(CMat::zeros(n, n))
    }

    /// `|i><j|` on `C^n`.
    pub fn ket_bra(n: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        m[(i, j)] = ONE;
        Operator(m)
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let v = DVector::from_column_slice(psi);
        Operator(&v * v.adjoint())
    }

    pub fn pauli(p: Pauli) -> Self {
        let m = match p {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        Operator(CMat::from_row_slice(2, 2, &m))
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_real_rows(2, &[s, s, s, -s]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Operator(self.0.map(|z| z * s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Operator(self.0.scale(s))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frob(&self.0)
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Operator(linalg::kron(&self.0, &other.0))
    }

    pub fn hermitian_part(&self) -> Self {
        Operator(linalg::hermitian_part(&self.0))
    }

    /// `||X - X^dagger||_F / ||X||_F`, zero for the zero operator.
    pub fn hermiticity_residual(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        linalg::frob(&(&self.0 - self.0.adjoint())) / norm
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Sorted eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.0).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_density(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (self.trace() - ONE).norm() <= tol && self.min_eigenvalue() >= -tol
    }

    /// Matrix exponential `exp(-i H)` of a Hermitian operator.
    pub fn unitary_from_hamiltonian(h: &Operator) -> Self {
        let (vals, vecs) = linalg::eigh(&h.0);
        let phases = CMat::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&e| Complex64::from_polar(1.0, -e)),
        ));
        Operator(&vecs * phases * vecs.adjoint())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.dim();
        linalg::frob(&(self.0.adjoint() * &self.0 - CMat::identity(n, n))) <= tol * (n as f64).sqrt()
    }
}

impl From<Operator> for CMat {
    fn from(op: Operator) -> CMat {
        op.0
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// Hilbert-Schmidt inner product `tr(A^dagger B)`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<Complex64> {
    ensure_dim(a.dim(), b.dim())?;
    Ok(a.0.dotc(&b.0))
}

/// `sigma_p` acting on qubit `site` (1-based, leftmost is most significant)
/// of an `n_qubits` register.
pub fn pauli_on(n_qubits: usize, site: usize, p: Pauli) -> Operator {
    pauli_string(n_qubits, &[(site, p)])
}

/// Tensor product of Paulis at the given 1-based sites, identity elsewhere.
///
/// Panics on a site outside `1..=n_qubits`.
pub fn pauli_string(n_qubits: usize, factors: &[(usize, Pauli)]) -> Operator {
    if let Some((s, _)) = factors.iter().find(|(s, _)| *s == 0 || *s > n_qubits) {
        panic!("qubit site {s} outside 1..={n_qubits}");
    }
    let mut acc = Operator(CMat::identity(1, 1));
    for site in 1..=n_qubits {
        let p = factors
            .iter()
            .filter(|(s, _)| *s == site)
            .map(|(_, p)| *p)
            .next()
            .unwrap_or(Pauli::I);
        acc = acc.kron(&Operator::pauli(p));
    }
    acc
}

/// A subspace of operators on `C^n` with a Hilbert-Schmidt orthonormal basis.
#[derive(Clone, Debug)]
pub struct OperatorSubspace {
    ambient_dim: usize,
    basis: Vec<Operator>,
}

impl OperatorSubspace {
    pub fn empty(ambient_dim: usize) -> Self {
        OperatorSubspace { ambient_dim, basis: Vec::new() }
    }

    /// The full operator space `B(C^n)` with the matrix-unit basis.
    pub fn full(n: usize) -> Self {
        let basis = (0..n)
            .flat_map(|j| (0..n).map(move |i| Operator::ket_bra(n, i, j)))
            .collect();
        OperatorSubspace { ambient_dim: n, basis }
    }

    /// Wraps a basis that is already orthonormal. Callers are trusted; use
    /// [`orthonormalize`] otherwise.
    pub(crate) fn from_orthonormal(ambient_dim: usize, basis: Vec<Operator>) -> Self {
        OperatorSubspace { ambient_dim, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Operator] {
        &self.basis
    }

    /// Coefficients `<B_i, X>` in the orthonormal basis.
    pub fn coordinates(&self, x: &Operator) -> Result<DVector<Complex64>> {
        ensure_dim(self.ambient_dim, x.dim())?;
        Ok(DVector::from_iterator(self.dim(), self.basis.iter().map(|b| b.0.dotc(&x.0))))
    }

    pub fn synthesize(&self, coords: &[Complex64]) -> Result<Operator> {
        ensure_dim(self.dim(), coords.len())?;
        let mut acc = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for (b, &z) in self.basis.iter().zip(coords) {
            acc += b.0.map(|v| v * z);
        }
        Ok(Operator(acc))
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, x: &Operator) -> Result<Operator> {
        let coords = self.coordinates(x)?;
        self.synthesize(coords.as_slice())
    }

    /// `||X - Pi X||_F`.
    pub fn residual(&self, x: &Operator) -> Result<f64> {
        let p = self.project(x)?;
        Ok((x - &p).frobenius_norm())
    }

    pub fn contains(&self, x: &Operator, tol: f64) -> Result<bool> {
        Ok(self.residual(x)? <= tol * x.frobenius_norm().max(1.0))
    }

    /// Max deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((a.0.dotc(&b.0) - target).norm());
            }
        }
        worst
    }

    /// `n^2 x dim` matrix whose columns are the vectorized basis elements.
    pub fn vectorized_basis(&self) -> CMat {
        let n2 = self.ambient_dim * self.ambient_dim;
        let mut m = CMat::zeros(n2, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            m.set_column(j, &linalg::vec_col(&b.0));
        }
        m
    }

    /// Matrix of the orthogonal projector acting on column-stacked vectors.
    pub fn projector_matrix(&self) -> CMat {
        let v = self.vectorized_basis();
        &v * v.adjoint()
    }

    /// Whether each element of `other` lies in `self` (within `tol`).
    pub fn contains_subspace(&self, other: &OperatorSubspace, tol: f64) -> Result<bool> {
        for b in other.basis() {
            if self.residual(b)? > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn all_hermitian(&self, tol: f64) -> bool {
        self.basis.iter().all(|b| b.is_hermitian(tol))
    }

    /// Span of `self` together with `candidates`, extended incrementally by
    /// two-pass Gram-Schmidt. A candidate is added when its residual exceeds
    /// `tol` times its own norm. Existing basis elements are kept unchanged.
    pub fn extended(&self, candidates: &[Operator], tol: f64) -> Result<OperatorSubspace> {
        let mut out = self.clone();
        for cand in candidates {
            out.push_if_new(cand, tol)?;
        }
        Ok(out)
    }

    pub(crate) fn push_if_new(&mut self, cand: &Operator, tol: f64) -> Result<bool> {
        ensure_dim(self.ambient_dim, cand.dim())?;
        let norm = cand.frobenius_norm();
        if norm == 0.0 || self.dim() >= self.ambient_dim * self.ambient_dim {
            return Ok(false);
        }
        let mut r = cand.0.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let z = b.0.dotc(&r);
                r -= b.0.map(|v| v * z);
            }
        }
        let rn = linalg::frob(&r);
        if rn > tol * norm {
            self.basis.push(Operator(r.unscale(rn)));
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Orthonormal basis of `span(ops)`, rank decided by singular values
/// `sigma_i > tol * sigma_max`. All-Hermitian input yields a Hermitian basis.
pub fn orthonormalize(ops: &[Operator], tol: f64) -> Result<OperatorSubspace> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidArgument("orthonormalize needs at least one operator".into()))?;
    let n = first.dim();
    for op in ops {
        ensure_dim(n, op.dim())?;
    }
    // Same threshold as the complex path: the real embedding is isometric.
    if ops.iter().all(|o| o.is_hermitian(1e-13)) {
        return Ok(orthonormalize_hermitian(n, ops, tol));
    }
    let mut m = CMat::zeros(n * n, ops.len());
    for (j, op) in ops.iter().enumerate() {
        m.set_column(j, &linalg::vec_col(&op.0));
    }
    let range = linalg::range_basis_complex(&m, tol);
    let basis = (0..range.ncols())
        .map(|j| Operator(linalg::devec(range.column(j).as_slice(), n, n)))
        .collect();
    Ok(OperatorSubspace { ambient_dim: n, basis })
}

fn orthonormalize_hermitian(n: usize, ops: &[Operator], tol: f64) -> OperatorSubspace {
    let mut m = RMat::zeros(n * n, ops.len());
    for (j, op) in ops.iter().enumerate() {
        m.set_column(j, &linalg::herm_to_real(&op.0));
    }
    let range = linalg::range_basis_real(&m, tol);
    let basis = (0..range.ncols())
        .map(|j| Operator(linalg::real_to_herm(range.column(j).as_slice(), n)))
        .collect();
    OperatorSubspace { ambient_dim: n, basis }
}
