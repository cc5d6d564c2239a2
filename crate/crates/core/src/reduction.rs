//! End-to-end reduction onto the output algebra, the split-form assumptions
//! and separable reduction, and equivalence certification.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{algebra_closure, conditional_expectation, wedderburn, Block, CEFactorization, StarAlgebra};
use crate::equivalence::{compare_systems, Deviation, WordPlan, SAMPLE_CAP};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{ConditionalEvolution, Instrument, OutputMap, Split};
use crate::observability::{check_invariance, nonobservable_complement, LinearReducedModel};
use crate::operator::{Operator, OperatorSubspace};
use crate::random::{random_density, stream_rng};
use crate::superop::{compose, Superoperator};

/// Dimensions and settings that produced a reduction.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub hilbert_dim: usize,
    pub original_dim: usize,
    pub nperp_dim: usize,
    pub algebra_dim: usize,
    pub reduced_hilbert_dim: usize,
    pub reduced_dim: usize,
    pub blocks: Vec<Block>,
    pub tol: f64,
    pub seed: u64,
    pub wedderburn_attempts: usize,
}

/// Reduced model `M~_k = R M_k J`, `C~ = C J`, with reduction map `R`.
#[derive(Clone, Debug)]
pub struct ReducedCE {
    pub reduced_model: ConditionalEvolution,
    pub factorization: CEFactorization,
    pub nperp: OperatorSubspace,
    pub algebra: StarAlgebra,
    pub provenance: Provenance,
}

impl ReducedCE {
    /// The reduction map applied to initial states.
    pub fn reduction_map(&self) -> &Superoperator {
        &self.factorization.r
    }

    pub fn reduced_dim(&self) -> usize {
        self.provenance.reduced_dim
    }

    /// Max over outcomes of the reduced instrument's Choi min-eigenvalue
    /// deficit and the normalization residual.
    pub fn structure_check(&self) -> (f64, f64) {
        let inst = self.reduced_model.instrument();
        let min_eig = inst.maps().iter().map(|m| m.min_choi_eigenvalue()).fold(f64::INFINITY, f64::min);
        (min_eig, inst.normalization_residual())
    }
}

/// `R o S o J` for a map `S` on the full space.
pub fn reduce_map(f: &CEFactorization, map: &Superoperator) -> Result<Superoperator> {
    compose(&f.r, &compose(map, &f.j)?)
}

/// `C~ = C J`: the reduced observables are `J^dagger(O_j)`.
pub fn reduce_output(f: &CEFactorization, output: &OutputMap) -> Result<OutputMap> {
    let obs = output
        .basis_labels()
        .iter()
        .zip(output.observables())
        .map(|(name, o)| {
            let r = f.j.apply_dual(o)?;
            Ok((name.clone(), Operator::new(linalg::hermitian_part(r.matrix()))?))
        })
        .collect::<Result<Vec<_>>>()?;
    OutputMap::new(obs)
}

/// Runs the whole pipeline: `N^perp`, its *-algebra, the Wedderburn
/// decomposition, the `R`/`J` factorization, and the reduced instrument.
pub fn reduce_ce(ce: &ConditionalEvolution, tol: f64, seed: u64) -> Result<ReducedCE> {
    let nperp = nonobservable_complement(ce, tol)?;
    let algebra = algebra_closure(&nperp, tol)?;
    let dec = wedderburn(&algebra, tol, seed)?;
    let factorization = conditional_expectation(&dec)?;
    let maps = ce
        .instrument()
        .maps()
        .iter()
        .map(|m| reduce_map(&factorization, m))
        .collect::<Result<Vec<_>>>()?;
    let instrument = Instrument::new(ce.outcomes().to_vec(), maps)?;
    let output = reduce_output(&factorization, ce.output())?;
    let reduced_model = ConditionalEvolution::new(instrument, output)?;
    let n = ce.dim();
    let provenance = Provenance {
        hilbert_dim: n,
        original_dim: n * n,
        nperp_dim: nperp.dim(),
        algebra_dim: algebra.dim(),
        reduced_hilbert_dim: dec.reduced_hilbert_dim(),
        reduced_dim: dec.reduced_dim(),
        blocks: dec.blocks().to_vec(),
        tol,
        seed,
        wedderburn_attempts: dec.attempts,
    };
    Ok(ReducedCE { reduced_model, factorization, nperp, algebra, provenance })
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub holds: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaCheck {
    pub holds: bool,
    /// Coefficients of `sum_k lambda_k M_k = E`, one per outcome.
    pub lambdas: Vec<(String, Complex64)>,
    /// Least-squares residual relative to `||E||_F`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub a1: LambdaCheck,
    pub a2: AssumptionCheck,
    pub a3: AssumptionCheck,
    pub a4: AssumptionCheck,
}

impl AssumptionReport {
    pub fn any_holds(&self) -> bool {
        self.a1.holds || self.a2.holds || self.a3.holds || self.a4.holds
    }

    pub fn holding(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, holds) in [("A1", self.a1.holds), ("A2", self.a2.holds), ("A3", self.a3.holds), ("A4", self.a4.holds)]
        {
            if holds {
                out.push(name);
            }
        }
        out
    }
}

fn require_split(ce: &ConditionalEvolution) -> Result<&Split> {
    ce.split()
        .ok_or_else(|| Error::InvalidArgument("model has no evolution/effect split".into()))
}

/// Least squares for `sum_k lambda_k M_k = E` through the Gram matrix of the
/// maps under the Frobenius inner product.
fn solve_a1(ce: &ConditionalEvolution, evolution: &Superoperator) -> (Vec<Complex64>, f64) {
    let maps = ce.instrument().maps();
    let m = maps.len();
    let mut gram = CMat::zeros(m, m);
    let mut rhs = DVector::<Complex64>::zeros(m);
    for (i, a) in maps.iter().enumerate() {
        for (j, b) in maps.iter().enumerate() {
            gram[(i, j)] = a.matrix().dotc(b.matrix());
        }
        rhs[i] = a.matrix().dotc(evolution.matrix());
    }
    let svd = gram.svd(true, true);
    let lambdas = svd
        .solve(&rhs, 1e-12 * svd.singular_values.max())
        .map(|x| x.iter().cloned().collect::<Vec<_>>())
        .unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); m]);
    let mut combo = -evolution.matrix();
    for (l, a) in lambdas.iter().zip(maps) {
        combo += a.matrix() * *l;
    }
    let residual = linalg::frob(&combo) / linalg::frob(evolution.matrix()).max(f64::MIN_POSITIVE);
    (lambdas, residual)
}

/// Checks the four sufficient conditions for separable reduction.
///
/// A2 (`N` is `E`-invariant) is tested in the equivalent dual form: `N^perp`
/// is `E^dagger`-invariant.
pub fn check_assumptions(
    ce: &ConditionalEvolution,
    nperp: &OperatorSubspace,
    alg: &StarAlgebra,
    tol: f64,
) -> Result<AssumptionReport> {
    let split = require_split(ce)?;
    ensure_dim(ce.dim(), nperp.ambient_dim())?;
    ensure_dim(ce.dim(), alg.ambient_dim())?;
    let (lambdas, a1_res) = solve_a1(ce, &split.evolution);
    let a2_res = check_invariance(nperp, &split.evolution, true)?;
    let mut a3_res = 0.0f64;
    for k in &split.effects {
        a3_res = a3_res.max(check_invariance(alg.subspace(), k, false)?);
    }
    let a4_res = check_invariance(alg.subspace(), &split.evolution, true)?;
    Ok(AssumptionReport {
        a1: LambdaCheck {
            holds: a1_res <= tol,
            lambdas: ce.outcomes().iter().cloned().zip(lambdas).collect(),
            residual: a1_res,
        },
        a2: AssumptionCheck { holds: a2_res <= tol, residual: a2_res },
        a3: AssumptionCheck { holds: a3_res <= tol, residual: a3_res },
        a4: AssumptionCheck { holds: a4_res <= tol, residual: a4_res },
    })
}

/// Reduced evolution and effects, reduced separately.
#[derive(Clone, Debug)]
pub struct SeparableReduction {
    pub evolution: Superoperator,
    pub effects: Vec<Superoperator>,
    /// `E~ o K~_k` as a CE carrying the reduced split.
    pub recomposed: ConditionalEvolution,
    pub assumptions: AssumptionReport,
    pub joint: ReducedCE,
    /// `max_k || E~ K~_k - R M_k J ||_F`.
    pub map_agreement: f64,
}

impl SeparableReduction {
    pub fn reduction_map(&self) -> &Superoperator {
        self.joint.reduction_map()
    }
}

/// Reduces `E` and each `K_k` separately. Refuses when none of the
/// assumptions holds.
pub fn reduce_separably(ce: &ConditionalEvolution, tol: f64, seed: u64) -> Result<SeparableReduction> {
    let split = require_split(ce)?.clone();
    let joint = reduce_ce(ce, tol, seed)?;
    let assumptions = check_assumptions(ce, &joint.nperp, &joint.algebra, tol)?;
    if !assumptions.any_holds() {
        return Err(Error::NoAssumptionHolds {
            a1: assumptions.a1.residual,
            a2: assumptions.a2.residual,
            a3: assumptions.a3.residual,
            a4: assumptions.a4.residual,
        });
    }
    let f = &joint.factorization;
    let evolution = reduce_map(f, &split.evolution)?;
    let effects = split.effects.iter().map(|k| reduce_map(f, k)).collect::<Result<Vec<_>>>()?;
    let recomposed = ConditionalEvolution::from_split(
        ce.outcomes().to_vec(),
        evolution.clone(),
        effects.clone(),
        joint.reduced_model.output().clone(),
    )?;
    let mut map_agreement = 0.0f64;
    for (a, b) in recomposed.instrument().maps().iter().zip(joint.reduced_model.instrument().maps()) {
        map_agreement = map_agreement.max(a.distance(b)?);
    }
    Ok(SeparableReduction { evolution, effects, recomposed, assumptions, joint, map_agreement })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub max_dev: f64,
    pub max_prob_dev: f64,
    pub pass: bool,
    /// `(state index, outcome labels)` of the worst output deviation.
    pub worst_case: Option<(usize, Vec<String>)>,
    pub nodes: usize,
    pub n_states: usize,
    pub words: String,
    pub tol: f64,
    pub seed: u64,
}

impl EquivalenceReport {
    fn from_deviation(d: Deviation, outcomes: &[String], n_states: usize, plan: &WordPlan, tol: f64, seed: u64) -> Self {
        let worst_case = d
            .worst_case
            .map(|(id, w)| (id, w.into_iter().map(|k| outcomes[k].clone()).collect()));
        EquivalenceReport {
            max_dev: d.max_dev,
            max_prob_dev: d.max_prob_dev,
            pass: d.max_dev <= tol && d.max_prob_dev <= tol,
            worst_case,
            nodes: d.nodes,
            n_states,
            words: plan.description(),
            tol,
            seed,
        }
    }
}

/// Seeded random density operators, one stream per state.
pub fn random_states(n: usize, count: usize, seed: u64) -> Vec<Operator> {
    (0..count)
        .map(|i| random_density(n, &mut stream_rng(seed, i as u64)))
        .collect()
}

fn check_outcomes(full: &ConditionalEvolution, reduced: &ConditionalEvolution) -> Result<()> {
    if full.outcomes() != reduced.outcomes() {
        return Err(Error::InvalidArgument(format!(
            "outcome sets differ: {:?} vs {:?}",
            full.outcomes(),
            reduced.outcomes()
        )));
    }
    if full.output().len() != reduced.output().len() {
        return Err(Error::DimensionMismatch { expected: full.output().len(), found: reduced.output().len() });
    }
    Ok(())
}

/// Compares `C M_w(rho0)` with `C~ M~_w(Phi rho0)` over random states and
/// outcome words up to `max_len` (sampled when there are more than
/// [`SAMPLE_CAP`] words).
pub fn equivalence_check_with_map(
    full: &ConditionalEvolution,
    reduced: &ConditionalEvolution,
    phi: &Superoperator,
    max_len: usize,
    n_states: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    check_outcomes(full, reduced)?;
    ensure_dim(full.dim(), phi.in_dim())?;
    ensure_dim(reduced.dim(), phi.out_dim())?;
    let states = random_states(full.dim(), n_states, seed);
    let pairs: Vec<(CMat, CMat)> = states
        .iter()
        .map(|rho| Ok((rho.matrix().clone(), phi.apply(rho)?.into_matrix())))
        .collect::<Result<_>>()?;
    let plan = WordPlan::new(full.instrument().len(), max_len, SAMPLE_CAP, seed);
    let d = compare_systems(full, reduced, &pairs, &plan);
    Ok(EquivalenceReport::from_deviation(d, full.outcomes(), n_states, &plan, tol, seed))
}

pub fn equivalence_check(
    full: &ConditionalEvolution,
    reduced: &ReducedCE,
    max_len: usize,
    n_states: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    equivalence_check_with_map(full, &reduced.reduced_model, reduced.reduction_map(), max_len, n_states, tol, seed)
}

/// The same check for the linear model, with `encode` as the reduction map.
pub fn linear_equivalence_check(
    full: &ConditionalEvolution,
    lin: &LinearReducedModel,
    max_len: usize,
    n_states: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    if full.outcomes() != lin.outcomes() {
        return Err(Error::InvalidArgument("outcome sets differ".into()));
    }
    let states = random_states(full.dim(), n_states, seed);
    let pairs: Vec<(CMat, DVector<Complex64>)> = states
        .iter()
        .map(|rho| Ok((rho.matrix().clone(), lin.encode(rho)?)))
        .collect::<Result<_>>()?;
    let plan = WordPlan::new(full.instrument().len(), max_len, SAMPLE_CAP, seed);
    let d = compare_systems(full, lin, &pairs, &plan);
    Ok(EquivalenceReport::from_deviation(d, full.outcomes(), n_states, &plan, tol, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_ce;
    use crate::operator::DEFAULT_TOL;
    use crate::random::seeded_rng;

    fn identity_ce(n: usize) -> ConditionalEvolution {
        let inst = Instrument::new(vec!["0".into()], vec![Superoperator::identity(n)]).unwrap();
        ConditionalEvolution::new(inst, OutputMap::identity_only(n)).unwrap()
    }

    #[test]
    fn identity_ce_reduces_to_a_scalar() {
        let ce = identity_ce(3);
        let red = reduce_ce(&ce, DEFAULT_TOL, 0).unwrap();
        assert_eq!(red.reduced_dim(), 1);
        let m = red.reduced_model.instrument().maps()[0].matrix();
        assert!((m[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let rep = equivalence_check(&ce, &red, 4, 5, 1e-14, 0).unwrap();
        assert!(rep.pass && rep.max_dev <= 1e-14, "{rep:?}");
    }

    #[test]
    fn random_ces_reduce_exactly() {
        let mut rng = seeded_rng(31);
        for _ in 0..4 {
            let ce = random_ce(3, 2, 1, 1, &mut rng);
            let red = reduce_ce(&ce, DEFAULT_TOL, 0).unwrap();
            assert!(red.provenance.nperp_dim <= red.provenance.algebra_dim);
            let rep = equivalence_check(&ce, &red, 4, 5, 1e-8, 1).unwrap();
            assert!(rep.pass, "{rep:?}");
            let (min_eig, norm) = red.structure_check();
            assert!(min_eig >= -1e-9 && norm <= 1e-9);
        }
    }

    #[test]
    fn zeroed_map_is_caught() {
        let mut rng = seeded_rng(32);
        let ce = random_ce(2, 2, 1, 1, &mut rng);
        let mut red = reduce_ce(&ce, DEFAULT_TOL, 0).unwrap();
        let d = red.reduced_model.dim();
        red.reduced_model.replace_map(1, Superoperator::zero(d, d));
        let rep = equivalence_check(&ce, &red, 3, 3, 1e-8, 0).unwrap();
        assert!(!rep.pass);
        let (_, word) = rep.worst_case.unwrap();
        assert!(word.contains(&"1".to_string()), "{word:?}");
    }

    #[test]
    fn assumptions_need_a_split() {
        let ce = identity_ce(2);
        let red = reduce_ce(&ce, DEFAULT_TOL, 0).unwrap();
        assert!(check_assumptions(&ce, &red.nperp, &red.algebra, DEFAULT_TOL).is_err());
    }

    #[test]
    fn skip_outcome_satisfies_a1() {
        // With probability p nothing is measured, so E = M_skip / p.
        let p = 0.25;
        let u = crate::random::haar_unitary(2, &mut seeded_rng(3));
        let e = Superoperator::unitary(&u);
        let mut effects = vec![Superoperator::identity(2).scale(p)];
        for j in 0..2 {
            effects.push(Superoperator::from_kraus_ops(&[Operator::ket_bra(2, j, j)]).unwrap().scale(1.0 - p));
        }
        let outcomes = vec!["skip".into(), "0".into(), "1".into()];
        let ce = ConditionalEvolution::from_split(outcomes, e, effects, OutputMap::identity_only(2)).unwrap();
        let sep = reduce_separably(&ce, DEFAULT_TOL, 0).unwrap();
        assert!(sep.assumptions.a1.holds && sep.assumptions.a2.holds, "{:?}", sep.assumptions);
        let l = &sep.assumptions.a1.lambdas;
        assert!((l[0].1 - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        assert!(l[1].1.norm() < 1e-12 && l[2].1.norm() < 1e-12);
        assert!(sep.map_agreement < 1e-10);
    }

    #[test]
    fn projective_walk_split_fails_a1_but_satisfies_a3() {
        let u = crate::random::haar_unitary(3, &mut seeded_rng(5));
        let effects = (0..3)
            .map(|j| Superoperator::from_kraus_ops(&[Operator::ket_bra(3, j, j)]).unwrap())
            .collect();
        let outcomes = (0..3).map(|j| j.to_string()).collect();
        let ce = ConditionalEvolution::from_split(outcomes, Superoperator::unitary(&u), effects, OutputMap::identity_only(3))
            .unwrap();
        let sep = reduce_separably(&ce, DEFAULT_TOL, 0).unwrap();
        assert!(!sep.assumptions.a1.holds && sep.assumptions.a3.holds);
        assert!(sep.map_agreement < 1e-10);
    }
}
