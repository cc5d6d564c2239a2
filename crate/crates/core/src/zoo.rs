//! Two model families with known reductions: a projectively measured
//! quantum walk, and an Ising chain whose last spin is measured.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::algebra::Block;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::model::{ConditionalEvolution, OutputMap};
use crate::observability::invariant_closure;
use crate::operator::{pauli_on, Operator, Pauli, DEFAULT_TOL};
use crate::random::{haar_unitary, seeded_rng};
use crate::reduction::ReducedCE;
use crate::superop::Superoperator;

/// Largest chain handled with dense matrices.
pub const MAX_ISING_SPINS: usize = 6;

#[derive(Clone, Debug)]
pub enum WalkUnitary {
    Haar { seed: u64 },
    Hadamard,
    Identity,
    Explicit(Operator),
}

#[derive(Clone, Debug)]
pub enum ZooSpec {
    Walk { n: usize, unitary: WalkUnitary },
    Ising { spins: usize, p: f64, delta: f64 },
}

/// Expected dimensions of a reduction, compared as multisets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnownAnswer {
    pub nperp_dim: usize,
    pub blocks: Vec<Block>,
    pub reduced_dim: usize,
}

impl KnownAnswer {
    fn new(nperp_dim: usize, mut blocks: Vec<Block>, reduced_dim: usize) -> Self {
        blocks.sort();
        KnownAnswer { nperp_dim, blocks, reduced_dim }
    }

    /// Differences against a computed reduction, empty when all match.
    pub fn mismatches(&self, red: &ReducedCE) -> Vec<String> {
        let mut out = Vec::new();
        let p = &red.provenance;
        if p.nperp_dim != self.nperp_dim {
            out.push(format!("nperp dim {} (expected {})", p.nperp_dim, self.nperp_dim));
        }
        let mut blocks = p.blocks.clone();
        blocks.sort();
        if blocks != self.blocks {
            out.push(format!("blocks {:?} (expected {:?})", blocks, self.blocks));
        }
        if p.reduced_dim != self.reduced_dim {
            out.push(format!("reduced dim {} (expected {})", p.reduced_dim, self.reduced_dim));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ZooModel {
    pub ce: ConditionalEvolution,
    pub spec: ZooSpec,
    pub expected: Option<KnownAnswer>,
    pub warnings: Vec<String>,
}

pub fn build(spec: &ZooSpec) -> Result<ZooModel> {
    match spec {
        ZooSpec::Walk { n, unitary } => {
            let u = match unitary {
                WalkUnitary::Haar { seed } => haar_unitary(*n, &mut seeded_rng(*seed)),
                WalkUnitary::Hadamard => {
                    if *n != 2 {
                        return Err(Error::InvalidArgument("the Hadamard walk has n = 2".into()));
                    }
                    Operator::hadamard()
                }
                WalkUnitary::Identity => Operator::identity(*n),
                WalkUnitary::Explicit(u) => u.clone(),
            };
            let ce = measured_quantum_walk(&u)?;
            let mut warnings = Vec::new();
            let orbit = walk_orbit_dimension(&u, false, DEFAULT_TOL)?;
            let expected = if orbit == n * n {
                Some(KnownAnswer::new(*n, vec![Block { d_s: 1, d_f: 1 }; *n], *n))
            } else {
                warnings.push(format!(
                    "unitary is not generic: the orbit of the measurement projectors spans {orbit} of {} dimensions",
                    n * n
                ));
                None
            };
            Ok(ZooModel { ce, spec: spec.clone(), expected, warnings })
        }
        ZooSpec::Ising { spins, p, delta } => {
            let ce = ising_chain(*spins, *p, *delta)?;
            let mut warnings = Vec::new();
            let expected = if let Some(reason) = ising_delta_exclusion(*delta) {
                warnings.push(reason);
                None
            } else {
                let d_f = 1 << (spins - 3);
                Some(if *p == 0.0 {
                    KnownAnswer::new(12, vec![Block { d_s: 2, d_f }; 4], 16)
                } else {
                    KnownAnswer::new(18, vec![Block { d_s: 4, d_f }; 2], 32)
                })
            };
            Ok(ZooModel { ce, spec: spec.clone(), expected, warnings })
        }
    }
}

/// Outcome `j` projects onto `|j>`, then the walker moves by `U`:
/// `K_j = |j><j| . |j><j|`, `E = U . U^dagger`, observables `{1}`.
pub fn measured_quantum_walk(u: &Operator) -> Result<ConditionalEvolution> {
    if !u.is_unitary(1e-9) {
        return Err(Error::InvalidArgument("walk operator is not unitary".into()));
    }
    let n = u.dim();
    let effects = (0..n)
        .map(|j| Superoperator::from_kraus_ops(&[Operator::ket_bra(n, j, j)]))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = (0..n).map(|j| j.to_string()).collect();
    ConditionalEvolution::from_split(outcomes, Superoperator::unitary(u), effects, OutputMap::identity_only(n))
}

/// Dimension of the smallest `E`-invariant (or `E^dagger`-invariant when
/// `dual`) subspace containing every `|j><j|`. The walk is generic when this
/// is `n^2`.
pub fn walk_orbit_dimension(u: &Operator, dual: bool, tol: f64) -> Result<usize> {
    let n = u.dim();
    let projectors: Vec<Operator> = (0..n).map(|j| Operator::ket_bra(n, j, j)).collect();
    let e = Superoperator::unitary(u);
    Ok(invariant_closure(&projectors, &[&e], dual, tol)?.dim())
}

/// Classical transition matrix `P_{jk} = |<j|U|k>|^2` (column stochastic).
pub fn walk_markov_oracle(u: &Operator) -> RMat {
    u.matrix().map(|z| z.norm_sqr())
}

/// `sum_k M~_k` of a reduced walk restricted to the diagonal, re-indexed into
/// the original site basis through `R(|j><j|)`.
pub fn walk_reduced_chain(red: &ReducedCE) -> Result<RMat> {
    let n = red.provenance.hilbert_dim;
    let d = red.reduced_model.dim();
    if d != n {
        return Err(Error::InvalidArgument(format!("reduced walk has dimension {d}, expected {n}")));
    }
    let r = red.reduction_map();
    let mut site_of = vec![usize::MAX; n];
    for j in 0..n {
        let img = r.apply(&Operator::ket_bra(n, j, j))?;
        let (a, weight) = (0..d)
            .map(|a| (a, img.matrix()[(a, a)].re))
            .fold((0, f64::MIN), |best, x| if x.1 > best.1 { x } else { best });
        if (weight - 1.0).abs() > 1e-8 || site_of[a] != usize::MAX {
            return Err(Error::Validation("reduction map does not permute the site projectors".into()));
        }
        site_of[a] = j;
    }
    let total = red.reduced_model.instrument().total_map();
    let mut p = RMat::zeros(n, n);
    for b in 0..d {
        let img = total.apply(&Operator::ket_bra(d, b, b))?;
        for a in 0..d {
            p[(site_of[a], site_of[b])] = img.matrix()[(a, a)].re;
        }
    }
    Ok(p)
}

/// `None` when `delta` is admissible for the known answers, otherwise why not.
/// Besides `pi/4 + j pi/2`, multiples of `pi/2` make `exp(-iH)` a Pauli
/// operator up to phase, which collapses the observable space.
pub fn ising_delta_exclusion(delta: f64) -> Option<String> {
    let r = delta.rem_euclid(FRAC_PI_2);
    let near = |x: f64| (r - x).abs() < 1e-6;
    if near(FRAC_PI_4) {
        Some(format!("delta = {delta} lies in pi/4 + j pi/2; dimensions are not asserted"))
    } else if near(0.0) || near(FRAC_PI_2) {
        Some(format!("delta = {delta} is a multiple of pi/2; dimensions are not asserted"))
    } else {
        None
    }
}

/// Outcome labels of the Ising chain: `-1` means no measurement happened.
pub fn ising_outcomes(p: f64) -> Vec<String> {
    let mut out = Vec::new();
    if p > 0.0 {
        out.push("-1".to_string());
    }
    out.push("0".to_string());
    out.push("1".to_string());
    out
}

/// Chain of `spins` qubits with `H = delta sum_j X_j X_{j+1}`. With probability
/// `1 - p` the last spin is measured in the `Z` basis, then `exp(-iH)` acts.
/// Observables are the Pauli operators on the first spin.
pub fn ising_chain(spins: usize, p: f64, delta: f64) -> Result<ConditionalEvolution> {
    if spins < 4 {
        return Err(Error::InvalidArgument(format!("N >= 4 required, got N = {spins}")));
    }
    if spins > MAX_ISING_SPINS {
        return Err(Error::InvalidArgument(format!("N <= {MAX_ISING_SPINS} supported, got N = {spins}")));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1), got {p}")));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidArgument("delta must be finite".into()));
    }
    let n = 1usize << spins;
    let mut h = CMat::zeros(n, n);
    for j in 1..spins {
        h += (&pauli_on(spins, j, Pauli::X) * &pauli_on(spins, j + 1, Pauli::X)).matrix();
    }
    let u = Operator::unitary_from_hamiltonian(&Operator::new(h.scale(delta))?);
    let evolution = Superoperator::unitary(&u);

    let id = Operator::identity(n);
    let z = pauli_on(spins, spins, Pauli::Z);
    let pi0 = (&id + &z).scale_real(0.5);
    let pi1 = (&id - &z).scale_real(0.5);
    let mut effects = Vec::new();
    if p > 0.0 {
        effects.push(Superoperator::identity(n).scale(p));
    }
    for pi in [pi0, pi1] {
        effects.push(Superoperator::from_kraus_ops(&[pi])?.scale(1.0 - p));
    }
    let observables = Pauli::ALL
        .iter()
        .map(|&q| {
            let name = if q == Pauli::I { "I".to_string() } else { format!("{}1", q.symbol()) };
            (name, pauli_on(spins, 1, q))
        })
        .collect();
    ConditionalEvolution::from_split(ising_outcomes(p), evolution, effects, OutputMap::new(observables)?)
}

/// First-spin state `(<I> 1 + <X> X + <Y> Y + <Z> Z) / 2` from the four
/// first-spin Pauli outputs in `I, X, Y, Z` order.
pub fn first_qubit_state(outputs: &[num_complex::Complex64]) -> Result<CMat> {
    if outputs.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: outputs.len() });
    }
    let mut tau = CMat::zeros(2, 2);
    for (q, y) in Pauli::ALL.iter().zip(outputs) {
        tau += Operator::pauli(*q).matrix() * *y;
    }
    Ok(tau.unscale(2.0))
}

/// Partial trace over every spin but the first.
pub fn first_qubit_marginal(rho: &Operator) -> CMat {
    let n = rho.dim();
    linalg::partial_trace_second(rho.matrix(), 2, n / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let p = walk_markov_oracle(&Operator::identity(3));
        assert_eq!(p, RMat::identity(3, 3));
        let p = walk_markov_oracle(&Operator::hadamard());
        assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let u = haar_unitary(4, &mut seeded_rng(1));
        let p = walk_markov_oracle(&u);
        for k in 0..4 {
            assert!((p.column(k).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_genericity() {
        let hadamard = build(&ZooSpec::Walk { n: 2, unitary: WalkUnitary::Hadamard }).unwrap();
        assert!(hadamard.expected.is_none() && !hadamard.warnings.is_empty());
        assert_eq!(walk_orbit_dimension(&Operator::hadamard(), false, DEFAULT_TOL).unwrap(), 3);
        let ident = build(&ZooSpec::Walk { n: 3, unitary: WalkUnitary::Identity }).unwrap();
        assert!(ident.expected.is_none() && !ident.warnings.is_empty());
        let haar = build(&ZooSpec::Walk { n: 4, unitary: WalkUnitary::Haar { seed: 7 } }).unwrap();
        assert!(haar.warnings.is_empty());
        assert_eq!(haar.expected.unwrap().reduced_dim, 4);
    }

    #[test]
    fn walk_rejects_non_unitary() {
        let m = Operator::ket_bra(2, 0, 1);
        assert!(measured_quantum_walk(&m).is_err());
    }

    #[test]
    fn ising_parameter_checks() {
        assert!(ising_chain(3, 0.0, 0.3).is_err());
        assert!(ising_chain(7, 0.0, 0.3).is_err());
        assert!(ising_chain(4, 1.0, 0.3).is_err());
        assert!(ising_chain(4, -0.1, 0.3).is_err());
        assert!(ising_delta_exclusion(0.3).is_none());
        assert!(ising_delta_exclusion(FRAC_PI_4 + 3.0 * FRAC_PI_2).is_some());
    }

    #[test]
    fn ising_models_validate() {
        for p in [0.0, 0.5] {
            let ce = ising_chain(4, p, 0.3).unwrap();
            let rep = ce.validate(1e-9);
            assert!(rep.passed, "{:?}", rep.failures());
            assert_eq!(ce.outcomes().len(), if p > 0.0 { 3 } else { 2 });
        }
    }

    #[test]
    fn first_qubit_reconstruction() {
        let mut rng = seeded_rng(3);
        let rho = crate::random::random_density(16, &mut rng);
        let ce = ising_chain(4, 0.0, 0.3).unwrap();
        let y = ce.output_eval(&rho).unwrap();
        let tau = first_qubit_state(&y).unwrap();
        assert!(linalg::frob(&(tau - first_qubit_marginal(&rho))) < 1e-12);
    }
}
