//! Seeded random operators.
//!
//! All randomness uses `ChaCha8Rng`. Independent streams (one per trajectory,
//! one per random state) are split off with [`stream_rng`], which keeps the
//! seed and selects the ChaCha stream number, so results do not depend on
//! evaluation order or thread count.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMat};
use crate::operator::Operator;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_operator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    Operator::new(gaussian_matrix(n, n, rng)).expect("square")
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    random_operator(n, rng).hermitian_part()
}

/// `G G^dagger / tr(G G^dagger)` with complex Gaussian `G`: full rank with
/// probability one.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(n, n, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    Operator::new(rho.unscale(tr)).expect("square").hermitian_part()
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `diag(R)` absorbed so the distribution is exact.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    Operator::new(q).expect("square")
}

/// Random Kraus family `{K_k}` with `sum_k K_k^dagger K_k = 1`: Gaussian
/// operators rescaled by `S^{-1/2}` where `S = sum_k G_k^dagger G_k`.
pub fn random_kraus_family<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<CMat> {
    let gs: Vec<CMat> = (0..count).map(|_| gaussian_matrix(n, n, rng)).collect();
    let mut s = CMat::zeros(n, n);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let (vals, vecs) = crate::linalg::eigh(&s);
    let inv_sqrt = CMat::from_diagonal(&DVector::from_iterator(
        n,
        vals.iter().map(|&v| c(1.0 / v.max(1e-300).sqrt(), 0.0)),
    ));
    let s_inv_sqrt = &vecs * inv_sqrt * vecs.adjoint();
    gs.into_iter().map(|g| g * &s_inv_sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = seeded_rng(1);
        for n in 1..6 {
            assert!(haar_unitary(n, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn random_density_is_density() {
        let mut rng = seeded_rng(2);
        let rho = random_density(4, &mut rng);
        assert!(rho.is_density(1e-12));
        assert!(rho.min_eigenvalue() > 0.0);
    }

    #[test]
    fn kraus_family_is_normalized() {
        let mut rng = seeded_rng(5);
        let ks = random_kraus_family(3, 4, &mut rng);
        let mut s = CMat::zeros(3, 3);
        for k in &ks {
            s += k.adjoint() * k;
        }
        assert!(crate::linalg::frob(&(s - CMat::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: f64 = stream_rng(7, 0).random();
        let b: f64 = stream_rng(7, 1).random();
        let a2: f64 = stream_rng(7, 0).random();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}
