//! Observable subspace `N^perp` of a conditional evolution and the minimal
//! linear (not necessarily CP) reduced model built on it.
//!
//! `N^perp` is the span of all `M_{k_0}^dagger ... M_{k_t}^dagger (O_j)`. Instead
//! of enumerating outcome words it is computed as the smallest subspace that
//! contains the observables and is invariant under every dual map `M_k^dagger`:
//! each sweep applies all dual maps to the current basis and re-orthonormalizes,
//! and the loop stops after a sweep that adds no dimension.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::equivalence::ConditionalSystem;
use crate::error::{Error, Result};
use crate::linalg::{CMat, ZERO};
use crate::model::ConditionalEvolution;
use crate::operator::{orthonormalize, Operator, OperatorSubspace};
use crate::superop::Superoperator;

/// Smallest subspace containing `generators` and invariant under each map
/// (or each dual map when `dual`). Stops when a sweep adds nothing, or after
/// `n^2` sweeps.
pub fn invariant_closure(
    generators: &[Operator],
    maps: &[&Superoperator],
    dual: bool,
    tol: f64,
) -> Result<OperatorSubspace> {
    let mut basis = orthonormalize(generators, tol)?;
    let n = basis.ambient_dim();
    for _ in 0..n * n {
        if basis.dim() == n * n {
            break;
        }
        let mut candidates: Vec<Operator> = basis.basis().to_vec();
        for b in basis.basis() {
            for m in maps {
                let img = if dual { m.apply_dual(b)? } else { m.apply(b)? };
                candidates.push(img);
            }
        }
        let next = orthonormalize(&candidates, tol)?;
        let grew = next.dim() > basis.dim();
        basis = next;
        if !grew {
            break;
        }
    }
    Ok(basis)
}

/// `N^perp`: closure of the observables under the dual instrument maps.
pub fn nonobservable_complement(ce: &ConditionalEvolution, tol: f64) -> Result<OperatorSubspace> {
    let maps: Vec<&Superoperator> = ce.instrument().maps().iter().collect();
    invariant_closure(ce.output().observables(), &maps, true, tol)
}

/// `max_B || (I - Pi) S(B) ||_F` over the orthonormal basis (with `S^dagger`
/// in place of `S` when `dual`). The subspace is invariant iff this is within
/// tolerance.
pub fn check_invariance(subspace: &OperatorSubspace, map: &Superoperator, dual: bool) -> Result<f64> {
    let mut worst = 0.0f64;
    for b in subspace.basis() {
        let img = if dual { map.apply_dual(b)? } else { map.apply(b)? };
        worst = worst.max(subspace.residual(&img)?);
    }
    Ok(worst)
}

/// Linear reduced model `x(t+1) = A_k x(t)`, `y = C x`, with
/// `x(0) = encode(rho0)`.
#[derive(Clone, Debug)]
pub struct LinearReducedModel {
    outcomes: Vec<String>,
    output_names: Vec<String>,
    a: Vec<CMat>,
    c: CMat,
    trace_row: Vec<Complex64>,
    basis: OperatorSubspace,
}

impl LinearReducedModel {
    pub fn q(&self) -> usize {
        self.basis.dim()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// Transition matrices, one per outcome in declaration order.
    pub fn a(&self) -> &[CMat] {
        &self.a
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }

    pub fn basis(&self) -> &OperatorSubspace {
        &self.basis
    }

    /// `R_L`: Hilbert-Schmidt coordinates in the orthonormal basis.
    pub fn encode(&self, x: &Operator) -> Result<DVector<Complex64>> {
        self.basis.coordinates(x)
    }

    /// `J_L`: basis synthesis.
    pub fn decode(&self, x: &DVector<Complex64>) -> Result<Operator> {
        self.basis.synthesize(x.as_slice())
    }

    pub fn output(&self, x: &DVector<Complex64>) -> Vec<Complex64> {
        (&self.c * x).iter().cloned().collect()
    }

    /// Rank of the stacked observability matrix `[C; C A_w ...]` over all
    /// words, computed as the closure of the row space of `C` under right
    /// multiplication by each `A_k`.
    pub fn observability_rank(&self, tol: f64) -> usize {
        let q = self.q();
        // Row vectors v^T are stored as columns v.
        let mut span: Vec<DVector<Complex64>> = Vec::new();
        let mut frontier: Vec<DVector<Complex64>> = Vec::new();
        for i in 0..self.c.nrows() {
            if let Some(v) = push_independent(self.c.row(i).transpose(), &mut span, tol) {
                frontier.push(v);
            }
        }
        while !frontier.is_empty() && span.len() < q {
            let mut next = Vec::new();
            for v in &frontier {
                for a in &self.a {
                    if let Some(w) = push_independent(a.transpose() * v, &mut span, tol) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        span.len()
    }
}

fn push_independent(
    v: DVector<Complex64>,
    span: &mut Vec<DVector<Complex64>>,
    tol: f64,
) -> Option<DVector<Complex64>> {
    let norm = v.norm();
    if norm == 0.0 {
        return None;
    }
    let mut r = v;
    for _ in 0..2 {
        for b in span.iter() {
            let z = b.dotc(&r);
            r -= b * z;
        }
    }
    let rn = r.norm();
    if rn > tol * norm {
        let unit = r / Complex64::new(rn, 0.0);
        span.push(unit.clone());
        Some(unit)
    } else {
        None
    }
}

impl ConditionalSystem for LinearReducedModel {
    type State = DVector<Complex64>;

    fn n_outcomes(&self) -> usize {
        self.a.len()
    }

    fn step(&self, x: &Self::State, k: usize) -> Self::State {
        &self.a[k] * x
    }

    fn outputs(&self, x: &Self::State) -> Vec<Complex64> {
        self.output(x)
    }

    fn probability(&self, x: &Self::State) -> Complex64 {
        self.trace_row.iter().zip(x.iter()).fold(ZERO, |acc, (t, v)| acc + t * v)
    }
}

/// Projects the CE onto `subspace` (which must contain `N^perp`):
/// `A_k = R_L M_k J_L`, `C = C J_L`.
pub fn linear_reduce(ce: &ConditionalEvolution, subspace: &OperatorSubspace) -> Result<LinearReducedModel> {
    let q = subspace.dim();
    if q == 0 {
        return Err(Error::InvalidArgument("cannot reduce onto a zero-dimensional subspace".into()));
    }
    crate::error::ensure_dim(ce.dim(), subspace.ambient_dim())?;
    let basis = subspace.basis();
    let mut a = Vec::with_capacity(ce.instrument().len());
    for m in ce.instrument().maps() {
        let mut ak = CMat::zeros(q, q);
        for (j, bj) in basis.iter().enumerate() {
            let img = m.apply(bj)?;
            for (i, bi) in basis.iter().enumerate() {
                ak[(i, j)] = bi.matrix().dotc(img.matrix());
            }
        }
        a.push(ak);
    }
    let obs = ce.output().observables();
    let mut c = CMat::zeros(obs.len(), q);
    for (i, o) in obs.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            c[(i, j)] = o.matrix().adjoint().dotc(b.matrix());
        }
    }
    let trace_row = basis.iter().map(|b| b.trace()).collect();
    Ok(LinearReducedModel {
        outcomes: ce.outcomes().to_vec(),
        output_names: ce.output().basis_labels().to_vec(),
        a,
        c,
        trace_row,
        basis: subspace.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob;
    use crate::model::{Instrument, OutputMap};
    use crate::operator::{Pauli, DEFAULT_TOL};

    fn identity_ce(n: usize) -> ConditionalEvolution {
        let inst = Instrument::new(vec!["0".into()], vec![Superoperator::identity(n)]).unwrap();
        ConditionalEvolution::new(inst, OutputMap::identity_only(n)).unwrap()
    }

    #[test]
    fn identity_ce_has_one_dimensional_complement() {
        let ce = identity_ce(3);
        let np = nonobservable_complement(&ce, DEFAULT_TOL).unwrap();
        assert_eq!(np.dim(), 1);
        let lin = linear_reduce(&ce, &np).unwrap();
        assert_eq!(lin.q(), 1);
        assert!((lin.a()[0][(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // C = tr(1 * 1/sqrt(3)) = sqrt(3) with the normalized basis element.
        let x = lin.encode(&Operator::identity(3).scale_real(1.0 / 3.0)).unwrap();
        assert!((lin.output(&x)[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hadamard_moves_sigma_x_out_of_its_span() {
        let sx = orthonormalize(&[Operator::pauli(Pauli::X)], DEFAULT_TOL).unwrap();
        let h = Superoperator::unitary(&Operator::hadamard());
        // Normalized sigma_x / sqrt(2) maps to sigma_z / sqrt(2), fully orthogonal.
        let r = check_invariance(&sx, &h, false).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
        let full = orthonormalize(&Pauli::ALL.map(Operator::pauli), DEFAULT_TOL).unwrap();
        assert!(check_invariance(&full, &h, false).unwrap() < 1e-14);
    }

    #[test]
    fn complement_is_dual_invariant() {
        let mut rng = crate::random::seeded_rng(4);
        let ce = crate::model::random_ce(3, 2, 1, 1, &mut rng);
        let np = nonobservable_complement(&ce, DEFAULT_TOL).unwrap();
        for m in ce.instrument().maps() {
            assert!(check_invariance(&np, m, true).unwrap() < 1e-9);
        }
        for o in ce.output().observables() {
            assert!(np.residual(o).unwrap() < 1e-9 * o.frobenius_norm());
        }
    }

    #[test]
    fn encode_decode_factor_the_projector() {
        let mut rng = crate::random::seeded_rng(5);
        let ce = crate::model::random_ce(3, 2, 1, 0, &mut rng);
        let np = nonobservable_complement(&ce, DEFAULT_TOL).unwrap();
        let lin = linear_reduce(&ce, &np).unwrap();
        let q = lin.q();
        for i in 0..q {
            let mut e = DVector::zeros(q);
            e[i] = Complex64::new(1.0, 0.0);
            let back = lin.encode(&lin.decode(&e).unwrap()).unwrap();
            assert!((back - e).norm() < 1e-12);
        }
        let x = crate::random::random_operator(3, &mut rng);
        let p = lin.decode(&lin.encode(&x).unwrap()).unwrap();
        assert!(frob(&(p.matrix() - np.project(&x).unwrap().matrix())) < 1e-12);
        assert_eq!(lin.observability_rank(DEFAULT_TOL), q);
    }

    #[test]
    fn zero_subspace_is_rejected() {
        let ce = identity_ce(2);
        assert!(linear_reduce(&ce, &OperatorSubspace::empty(2)).is_err());
    }
}
