//! Dense linear-algebra helpers shared by the operator, algebra and reduction
//! modules. Everything here works on `nalgebra` dynamic matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Column-stacking vectorization. `nalgebra` stores matrices column-major,
/// so this is a plain copy of the storage.
pub fn vec_col(m: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`].
pub fn devec(v: &[Complex64], rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "devec length mismatch");
    CMat::from_column_slice(rows, cols, v)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Eigenvectors belonging to numerically degenerate eigenvalues are
/// re-orthonormalized inside each cluster, so the returned matrix is unitary
/// to working precision even for highly degenerate input.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let degenerate = 1e3 * f64::EPSILON * scale * n as f64;
    let mut start = 0;
    for j in 1..=n {
        if j == n || values[j] - values[j - 1] > degenerate {
            if j - start > 1 {
                let block = vectors.columns(start, j - start).into_owned();
                let q = gram_schmidt(&block);
                vectors.columns_mut(start, j - start).copy_from(&q);
            }
            start = j;
        }
    }
    (values, vectors)
}

/// Two-pass classical Gram-Schmidt on the columns of a full-rank block.
pub fn gram_schmidt(block: &CMat) -> CMat {
    let mut q = block.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let proj = qi.dotc(&q.column(j));
                let mut col = q.column_mut(j);
                col -= qi * proj;
            }
        }
        let norm = q.column(j).norm();
        if norm > 0.0 {
            q.column_mut(j).unscale_mut(norm);
        }
    }
    q
}

/// Left singular vectors whose singular values exceed `tol * sigma_max`.
/// Returns an empty (rows x 0) matrix for an all-zero input.
pub fn range_basis_complex(m: &CMat, tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax <= 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    let mut out = CMat::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

/// Real counterpart of [`range_basis_complex`].
pub fn range_basis_real(m: &RMat, tol: f64) -> RMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax <= 0.0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    let mut out = RMat::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

/// Orthonormal basis of the null space of a real matrix: right singular
/// vectors with singular value `<= tol * max(sigma_max, floor)`, padded with
/// the directions the thin SVD does not report when `ncols > nrows`.
///
/// `floor` is the size a non-null direction would have; without it a matrix
/// made only of roundoff looks full rank.
pub fn null_space_real(m: &RMat, tol: f64, floor: f64) -> RMat {
    let ncols = m.ncols();
    if ncols == 0 {
        return RMat::zeros(0, 0);
    }
    // Square up so that the SVD returns a complete set of right vectors.
    let work = if m.nrows() < ncols {
        let mut padded = RMat::zeros(ncols, ncols);
        padded.rows_mut(0, m.nrows()).copy_from(m);
        padded
    } else if m.nrows() > 4 * ncols {
        // Tall input: the R factor has the same right singular structure.
        m.clone().qr().r()
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(floor);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax <= 0.0 || svd.singular_values[i] <= cut)
        .collect();
    let mut out = RMat::zeros(ncols, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &vt.row(i).transpose());
    }
    out
}

/// Isometric embedding of Hermitian `n x n` matrices into `R^{n^2}`:
/// diagonal entries first, then `sqrt(2) Re`, `sqrt(2) Im` of the strict upper
/// triangle. Hilbert-Schmidt inner products become Euclidean dot products.
pub fn herm_to_real(m: &CMat) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(n * n);
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        v[i] = m[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            // Average the two triangles so near-Hermitian input is symmetrized.
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            v[k] = s * z.re;
            v[k + 1] = s * z.im;
            k += 2;
        }
    }
    v
}

pub fn real_to_herm(v: &[f64], n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        m[(i, i)] = c(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = c(s * v[k], s * v[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Outcome of grouping sorted eigenvalues into clusters.
#[derive(Debug, Clone, PartialEq)]
pub enum Clustering {
    Clusters(Vec<std::ops::Range<usize>>),
    /// Some gap fell between the noise level and the separation threshold.
    Ambiguous { gap: f64, threshold: f64 },
}

/// Groups ascending eigenvalues. Gaps below `tol * scale` merge, gaps above
/// `sqrt(tol) * spread` split, anything in between is ambiguous.
pub fn cluster_eigenvalues(values: &[f64], tol: f64) -> Clustering {
    if values.is_empty() {
        return Clustering::Clusters(Vec::new());
    }
    let spread = values[values.len() - 1] - values[0];
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let noise = (tol * scale).max(1e3 * f64::EPSILON * scale);
    if spread <= noise {
        return Clustering::Clusters(std::iter::once(0..values.len()).collect());
    }
    let threshold = tol.sqrt() * spread;
    let mut clusters = Vec::new();
    let mut start = 0;
    for j in 1..values.len() {
        let gap = values[j] - values[j - 1];
        if gap > threshold {
            clusters.push(start..j);
            start = j;
        } else if gap > noise {
            return Clustering::Ambiguous { gap, threshold };
        }
    }
    clusters.push(start..values.len());
    Clustering::Clusters(clusters)
}

/// Partial trace over the second factor of a `(a*b) x (a*b)` matrix whose
/// index is `i_a * b + i_b`.
pub fn partial_trace_second(m: &CMat, a: usize, b: usize) -> CMat {
    let mut out = CMat::zeros(a, a);
    for i in 0..a {
        for j in 0..a {
            let mut acc = ZERO;
            for f in 0..b {
                acc += m[(i * b + f, j * b + f)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_is_column_stacking() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vec_col(&m);
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(devec(v.as_slice(), 2, 2), m);
    }

    #[test]
    fn herm_embedding_is_isometric() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.5, -0.25), c(0.5, 0.25), c(-2.0, 0.0)],
        );
        let b = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let hs = a.adjoint() * &b;
        let dot = herm_to_real(&a).dot(&herm_to_real(&b));
        assert!((hs.trace().re - dot).abs() < 1e-14);
        let back = real_to_herm(herm_to_real(&a).as_slice(), 2);
        assert!(frob(&(back - a)) < 1e-15);
    }

    #[test]
    fn degenerate_eigenvectors_are_orthonormal() {
        let mut m = CMat::identity(4, 4);
        m[(3, 3)] = c(2.0, 0.0);
        let (vals, vecs) = eigh(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[3] - 2.0).abs() < 1e-14);
        let gram = vecs.adjoint() * &vecs;
        assert!(frob(&(gram - CMat::identity(4, 4))) < 1e-13);
    }

    #[test]
    fn clustering_rules() {
        let v = [0.0, 1e-15, 1.0, 1.0, 2.0];
        assert_eq!(
            cluster_eigenvalues(&v, 1e-9),
            Clustering::Clusters(vec![0..2, 2..4, 4..5])
        );
        let v = [0.0, 1e-6, 1.0];
        assert!(matches!(cluster_eigenvalues(&v, 1e-9), Clustering::Ambiguous { .. }));
        let v = [3.0, 3.0 + 1e-15];
        assert_eq!(cluster_eigenvalues(&v, 1e-9), Clustering::Clusters(std::iter::once(0..2).collect()));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = RMat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space_real(&m, 1e-9, 0.0);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-14);
    }
}
