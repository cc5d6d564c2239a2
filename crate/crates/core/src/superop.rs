//! Linear maps between operator spaces.
//!
//! A [`Superoperator`] from `B(C^{n_in})` to `B(C^{n_out})` is stored as the
//! `(n_out^2) x (n_in^2)` matrix acting on column-stacked vectorizations,
//! `vec(S(X)) = M vec(X)`. When a Kraus family `{K_i}` is known it is kept
//! alongside, and `M = sum_i conj(K_i) (x) K_i`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMat, ONE};
use crate::operator::Operator;

#[derive(Clone, Debug)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    matrix: CMat,
    kraus: Option<Vec<CMat>>,
}

/// Complete-positivity / trace / unitality diagnostics.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ChannelReport {
    pub cp: bool,
    pub tp: bool,
    pub unital: bool,
    pub min_choi_eig: f64,
    pub tp_residual: f64,
    pub unital_residual: f64,
}

fn kraus_matrix(kraus: &[CMat]) -> CMat {
    let (r, c) = kraus[0].shape();
    if kraus.len() == 1 {
        return linalg::kron(&kraus[0].map(|z| z.conj()), &kraus[0]);
    }
    // G = conj(V) V^T with V = [vec K_1 ...] holds every entry of the sum
    // of Kronecker products; only a reindexing is left.
    let mut v = CMat::zeros(r * c, kraus.len());
    for (i, k) in kraus.iter().enumerate() {
        v.set_column(i, &linalg::vec_col(k));
    }
    let g = v.map(|z| z.conj()) * v.transpose();
    let mut m = CMat::zeros(r * r, c * c);
    for t in 0..c {
        for s in 0..c {
            for q in 0..r {
                for p in 0..r {
                    m[(p * r + q, s * c + t)] = g[(s * r + p, t * r + q)];
                }
            }
        }
    }
    m
}

impl Superoperator {
    /// `X -> sum_i K_i X K_i^dagger`.
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("Kraus list must be nonempty".into()))?;
        let (out_dim, in_dim) = first.shape();
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::InvalidArgument("Kraus operators must be nonempty".into()));
        }
        for k in &kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::InvalidArgument(format!(
                    "Kraus operators must share shape {}x{}, got {}x{}",
                    out_dim,
                    in_dim,
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let matrix = kraus_matrix(&kraus);
        Ok(Superoperator { in_dim, out_dim, matrix, kraus: Some(kraus) })
    }

    pub fn from_kraus_ops(kraus: &[Operator]) -> Result<Self> {
        Superoperator::from_kraus(kraus.iter().map(|k| k.matrix().clone()).collect())
    }

    pub fn from_matrix(in_dim: usize, out_dim: usize, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (out_dim * out_dim, in_dim * in_dim) {
            return Err(Error::InvalidArgument(format!(
                "superoperator matrix must be {}x{}, got {}x{}",
                out_dim * out_dim,
                in_dim * in_dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Superoperator { in_dim, out_dim, matrix, kraus: None })
    }

    /// Matrix of an arbitrary linear action, built column by column from the
    /// images of the matrix units.
    pub fn from_fn<F: Fn(&CMat) -> CMat>(in_dim: usize, out_dim: usize, f: F) -> Result<Self> {
        let mut matrix = CMat::zeros(out_dim * out_dim, in_dim * in_dim);
        for j in 0..in_dim {
            for i in 0..in_dim {
                let mut e = CMat::zeros(in_dim, in_dim);
                e[(i, j)] = ONE;
                let img = f(&e);
                ensure_dim(out_dim, img.nrows())?;
                matrix.set_column(j * in_dim + i, &linalg::vec_col(&img));
            }
        }
        Superoperator::from_matrix(in_dim, out_dim, matrix)
    }

    pub fn identity(n: usize) -> Self {
        Superoperator::from_kraus(vec![CMat::identity(n, n)]).expect("identity Kraus")
    }

    /// `X -> U X U^dagger`.
    pub fn unitary(u: &Operator) -> Self {
        Superoperator::from_kraus(vec![u.matrix().clone()]).expect("single Kraus")
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Superoperator {
            in_dim,
            out_dim,
            matrix: CMat::zeros(out_dim * out_dim, in_dim * in_dim),
            kraus: None,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn kraus(&self) -> Option<&[CMat]> {
        self.kraus.as_deref()
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        ensure_dim(self.in_dim, x.dim())?;
        Ok(Operator::new(self.apply_mat(x.matrix())).expect("square output"))
    }

    /// Action of the Hilbert-Schmidt adjoint map.
    pub fn apply_dual(&self, x: &Operator) -> Result<Operator> {
        ensure_dim(self.out_dim, x.dim())?;
        Ok(Operator::new(self.apply_dual_mat(x.matrix())).expect("square output"))
    }

    pub(crate) fn apply_mat(&self, x: &CMat) -> CMat {
        match &self.kraus {
            Some(ks) if ks.len() * self.in_dim < self.in_dim * self.in_dim * 4 => {
                let mut acc = CMat::zeros(self.out_dim, self.out_dim);
                for k in ks {
                    acc += k * x * k.adjoint();
                }
                acc
            }
            _ => {
                let v = &self.matrix * linalg::vec_col(x);
                linalg::devec(v.as_slice(), self.out_dim, self.out_dim)
            }
        }
    }

    pub(crate) fn apply_dual_mat(&self, x: &CMat) -> CMat {
        match &self.kraus {
            Some(ks) if ks.len() * self.in_dim < self.in_dim * self.in_dim * 4 => {
                let mut acc = CMat::zeros(self.in_dim, self.in_dim);
                for k in ks {
                    acc += k.adjoint() * x * k;
                }
                acc
            }
            _ => {
                let v = self.matrix.ad_mul(&linalg::vec_col(x));
                linalg::devec(v.as_slice(), self.in_dim, self.in_dim)
            }
        }
    }

    /// Hilbert-Schmidt adjoint: conjugate transpose of the matrix.
    pub fn adjoint(&self) -> Self {
        Superoperator {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            matrix: self.matrix.adjoint(),
            kraus: self.kraus.as_ref().map(|ks| ks.iter().map(|k| k.adjoint()).collect()),
        }
    }

    /// `self` after `first`, i.e. `X -> self(first(X))`.
    pub fn after(&self, first: &Superoperator) -> Result<Self> {
        compose(self, first)
    }

    pub fn scale(&self, s: f64) -> Self {
        let kraus = if s >= 0.0 {
            let r = s.sqrt();
            self.kraus.as_ref().map(|ks| ks.iter().map(|k| k.scale(r)).collect())
        } else {
            None
        };
        Superoperator { in_dim: self.in_dim, out_dim: self.out_dim, matrix: self.matrix.scale(s), kraus }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Self> {
        ensure_dim(self.in_dim, other.in_dim)?;
        ensure_dim(self.out_dim, other.out_dim)?;
        let kraus = match (&self.kraus, &other.kraus) {
            (Some(a), Some(b)) => Some(a.iter().chain(b.iter()).cloned().collect()),
            _ => None,
        };
        Ok(Superoperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: &self.matrix + &other.matrix,
            kraus,
        })
    }

    /// Frobenius norm of the matrix difference; an upper bound on the
    /// operator-norm distance.
    pub fn distance(&self, other: &Superoperator) -> Result<f64> {
        ensure_dim(self.in_dim, other.in_dim)?;
        ensure_dim(self.out_dim, other.out_dim)?;
        Ok(linalg::frob(&(&self.matrix - &other.matrix)))
    }

    /// Operator-norm distance of the matrices (largest singular value).
    pub fn op_distance(&self, other: &Superoperator) -> Result<f64> {
        ensure_dim(self.in_dim, other.in_dim)?;
        ensure_dim(self.out_dim, other.out_dim)?;
        Ok(linalg::op_norm(&(&self.matrix - &other.matrix)))
    }

    /// `|| M - sum_i conj(K_i) (x) K_i ||_F`, zero when no Kraus form is held.
    pub fn kraus_consistency(&self) -> f64 {
        match &self.kraus {
            Some(ks) => linalg::frob(&(&self.matrix - kraus_matrix(ks))),
            None => 0.0,
        }
    }

    /// Choi matrix `sum_{ij} |i><j| (x) S(|i><j|)`, of size
    /// `n_in n_out`.
    pub fn choi(&self) -> CMat {
        let (ni, no) = (self.in_dim, self.out_dim);
        let mut choi = CMat::zeros(ni * no, ni * no);
        for j in 0..ni {
            for i in 0..ni {
                let col = self.matrix.column(j * ni + i);
                let img = linalg::devec(col.as_slice(), no, no);
                choi.view_mut((i * no, j * no), (no, no)).copy_from(&img);
            }
        }
        choi
    }

    /// Smallest Choi eigenvalue. With a short Kraus list the Choi matrix is
    /// `V V^dagger` for `V = [vec K_1 ...]`, whose nonzero spectrum is that of
    /// the Gram matrix `V^dagger V`.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        let full = self.in_dim * self.out_dim;
        if let Some(ks) = &self.kraus {
            if ks.len() < full {
                return 0.0;
            }
        }
        linalg::eigh(&self.choi()).0[0]
    }

    pub fn channel_checks(&self, tol: f64) -> ChannelReport {
        let min_choi_eig = self.min_choi_eigenvalue();
        let id_out = CMat::identity(self.out_dim, self.out_dim);
        let id_in = CMat::identity(self.in_dim, self.in_dim);
        let tp_residual = linalg::frob(&(self.apply_dual_mat(&id_out) - &id_in));
        let unital_residual = linalg::frob(&(self.apply_mat(&id_in) - &id_out));
        ChannelReport {
            cp: min_choi_eig >= -tol,
            tp: tp_residual <= tol,
            unital: unital_residual <= tol,
            min_choi_eig,
            tp_residual,
            unital_residual,
        }
    }
}

/// `second o first`: matrix product, or the pairwise Kraus products when
/// both factors carry short Kraus lists.
pub fn compose(second: &Superoperator, first: &Superoperator) -> Result<Superoperator> {
    ensure_dim(second.in_dim, first.out_dim)?;
    let (ni, nm, no) = (first.in_dim, first.out_dim, second.out_dim);
    if let (Some(k2), Some(k1)) = (&second.kraus, &first.kraus) {
        if k2.len() * k1.len() <= (nm * nm).max(4 * ni * no) {
            let mut prods = Vec::with_capacity(k2.len() * k1.len());
            let mut biggest = 0.0f64;
            for b in k2 {
                for a in k1 {
                    let p = b * a;
                    biggest = biggest.max(linalg::frob(&p));
                    prods.push(p);
                }
            }
            let floor = 1e-14 * biggest;
            let mut kept: Vec<CMat> = prods.into_iter().filter(|p| linalg::frob(p) > floor).collect();
            if kept.is_empty() {
                kept.push(CMat::zeros(no, ni));
            }
            return Superoperator::from_kraus(kept);
        }
    }
    Ok(Superoperator { in_dim: ni, out_dim: no, matrix: &second.matrix * &first.matrix, kraus: None })
}

/// `sum_k c_k S_k` over matrices (Kraus forms are dropped).
pub fn linear_combination(maps: &[&Superoperator], coeffs: &[Complex64]) -> Result<Superoperator> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
    ensure_dim(maps.len(), coeffs.len())?;
    let mut m = CMat::zeros(first.matrix.nrows(), first.matrix.ncols());
    for (s, &z) in maps.iter().zip(coeffs) {
        ensure_dim(first.in_dim, s.in_dim)?;
        ensure_dim(first.out_dim, s.out_dim)?;
        m += s.matrix.map(|v| v * z);
    }
    Superoperator::from_matrix(first.in_dim, first.out_dim, m)
}
