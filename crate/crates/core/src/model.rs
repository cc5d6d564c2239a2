//! Conditional evolutions: a quantum instrument `{M_k}` plus a linear output
//! map `C(X) = sum_j E_j tr[O_j X]`, propagated on unnormalized states
//! `rho(t+1) = M_{k_t}(rho(t))`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMat};
use crate::operator::{Operator, DEFAULT_TOL};
use crate::random;
use crate::superop::{compose, Superoperator};

/// One CP map per outcome label, in declaration order.
#[derive(Clone, Debug)]
pub struct Instrument {
    dim: usize,
    outcomes: Vec<String>,
    maps: Vec<Superoperator>,
}

impl Instrument {
    pub fn new(outcomes: Vec<String>, maps: Vec<Superoperator>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument("instrument needs at least one outcome".into()));
        }
        ensure_dim(outcomes.len(), maps.len())?;
        let dim = maps[0].in_dim();
        for (label, m) in outcomes.iter().zip(&maps) {
            if m.in_dim() != dim || m.out_dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "map for outcome `{label}` acts on {}->{}, expected {dim}->{dim}",
                    m.in_dim(),
                    m.out_dim()
                )));
            }
        }
        for (i, a) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate outcome label `{a}`")));
            }
        }
        Ok(Instrument { dim, outcomes, maps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn maps(&self) -> &[Superoperator] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    pub fn map(&self, label: &str) -> Result<&Superoperator> {
        Ok(&self.maps[self.index_of(label)?])
    }

    /// `|| sum_k M_k^dagger(1) - 1 ||_F`.
    pub fn normalization_residual(&self) -> f64 {
        let id = CMat::identity(self.dim, self.dim);
        let mut acc = CMat::zeros(self.dim, self.dim);
        for m in &self.maps {
            acc += m.apply_dual_mat(&id);
        }
        linalg::frob(&(acc - id))
    }

    /// The averaged (unconditional) map `sum_k M_k`.
    pub fn total_map(&self) -> Superoperator {
        let mut acc = self.maps[0].clone();
        for m in &self.maps[1..] {
            acc = acc.add(m).expect("instrument maps share dims");
        }
        acc
    }
}

/// Named Hermitian observables `O_j`; the output space basis `E_j` is
/// labelled by the observable names.
#[derive(Clone, Debug)]
pub struct OutputMap {
    names: Vec<String>,
    observables: Vec<Operator>,
}

impl OutputMap {
    pub fn new(observables: Vec<(String, Operator)>) -> Result<Self> {
        let first = observables
            .first()
            .ok_or_else(|| Error::InvalidArgument("output map needs at least one observable".into()))?;
        let dim = first.1.dim();
        for (_, o) in &observables {
            ensure_dim(dim, o.dim())?;
        }
        let (names, observables) = observables.into_iter().unzip();
        Ok(OutputMap { names, observables })
    }

    /// Output map with only the identity: reproduces sequence probabilities.
    pub fn identity_only(n: usize) -> Self {
        OutputMap { names: vec!["I".into()], observables: vec![Operator::identity(n)] }
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.names
    }

    pub fn observables(&self) -> &[Operator] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn has_identity(&self, tol: f64) -> bool {
        let id = Operator::identity(self.dim());
        let scale = (self.dim() as f64).sqrt();
        self.observables.iter().any(|o| (o - &id).frobenius_norm() <= tol * scale)
    }

    /// `[tr(O_j X)]_j`.
    pub fn eval(&self, x: &Operator) -> Result<Vec<Complex64>> {
        ensure_dim(self.dim(), x.dim())?;
        Ok(self.eval_mat(x.matrix()))
    }

    pub(crate) fn eval_mat(&self, x: &CMat) -> Vec<Complex64> {
        self.observables.iter().map(|o| o.matrix().adjoint().dotc(x)).collect()
    }
}

/// Evolution / effect factorization `M_k = E o K_k`.
#[derive(Clone, Debug)]
pub struct Split {
    pub evolution: Superoperator,
    pub effects: Vec<Superoperator>,
}

#[derive(Clone, Debug)]
pub struct ConditionalEvolution {
    instrument: Instrument,
    output: OutputMap,
    split: Option<Split>,
}

/// Result of conditioning a density operator on one outcome.
#[derive(Clone, Debug)]
pub struct Conditioned {
    pub state: Operator,
    pub probability: f64,
    /// Raw probability before clamping, when clamping was needed.
    pub clamped_from: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub tol: f64,
    pub dims_consistent: bool,
    /// Minimum Choi eigenvalue per outcome.
    pub cp_min_eigs: Vec<(String, f64)>,
    pub normalization_residual: f64,
    pub hermiticity_residuals: Vec<(String, f64)>,
    pub identity_present: bool,
    pub split_residual: Option<f64>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.dims_consistent {
            out.push("instrument and output map dimensions differ".to_string());
        }
        for (label, e) in &self.cp_min_eigs {
            if *e < -self.tol {
                out.push(format!("map `{label}` is not CP (min Choi eigenvalue {e:e})"));
            }
        }
        if self.normalization_residual > self.tol {
            out.push(format!(
                "normalization residual {:e} exceeds tolerance {:e}",
                self.normalization_residual, self.tol
            ));
        }
        for (name, r) in &self.hermiticity_residuals {
            if *r > self.tol {
                out.push(format!("observable `{name}` is not Hermitian (residual {r:e})"));
            }
        }
        if !self.identity_present {
            out.push("identity is missing from the observables".to_string());
        }
        if let Some(r) = self.split_residual {
            if r > self.tol {
                out.push(format!("split residual {r:e} exceeds tolerance"));
            }
        }
        out
    }
}

impl ConditionalEvolution {
    pub fn new(instrument: Instrument, output: OutputMap) -> Result<Self> {
        ensure_dim(instrument.dim(), output.dim())?;
        Ok(ConditionalEvolution { instrument, output, split: None })
    }

    /// Builds `M_k = E o K_k` from an evolution map and one effect per outcome.
    pub fn from_split(
        outcomes: Vec<String>,
        evolution: Superoperator,
        effects: Vec<Superoperator>,
        output: OutputMap,
    ) -> Result<Self> {
        let maps = effects
            .iter()
            .map(|k| compose(&evolution, k))
            .collect::<Result<Vec<_>>>()?;
        let instrument = Instrument::new(outcomes, maps)?;
        ensure_dim(instrument.dim(), output.dim())?;
        Ok(ConditionalEvolution { instrument, output, split: Some(Split { evolution, effects }) })
    }

    /// Attaches a split to an existing instrument; consistency is checked by
    /// [`ConditionalEvolution::validate`].
    pub fn with_split(mut self, evolution: Superoperator, effects: Vec<Superoperator>) -> Result<Self> {
        ensure_dim(self.instrument.len(), effects.len())?;
        self.split = Some(Split { evolution, effects });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.instrument.dim()
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn output(&self) -> &OutputMap {
        &self.output
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    pub fn outcomes(&self) -> &[String] {
        self.instrument.outcomes()
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let dims_consistent = self.instrument.dim() == self.output.dim();
        let cp_min_eigs: Vec<(String, f64)> = self
            .instrument
            .outcomes
            .iter()
            .zip(&self.instrument.maps)
            .map(|(l, m)| (l.clone(), m.min_choi_eigenvalue()))
            .collect();
        let normalization_residual = self.instrument.normalization_residual();
        let hermiticity_residuals: Vec<(String, f64)> = self
            .output
            .names
            .iter()
            .zip(&self.output.observables)
            .map(|(n, o)| (n.clone(), o.hermiticity_residual()))
            .collect();
        let identity_present = self.output.has_identity(tol);
        let split_residual = self.split.as_ref().map(|s| {
            self.instrument
                .maps
                .iter()
                .zip(&s.effects)
                .map(|(m, k)| {
                    compose(&s.evolution, k)
                        .and_then(|ek| m.distance(&ek))
                        .unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max)
        });
        let mut report = ValidationReport {
            tol,
            dims_consistent,
            cp_min_eigs,
            normalization_residual,
            hermiticity_residuals,
            identity_present,
            split_residual,
            passed: false,
        };
        report.passed = report.failures().is_empty();
        report
    }

    /// `M_k(rho)` without renormalization.
    pub fn step_unnormalized(&self, rho_tilde: &Operator, outcome: &str) -> Result<Operator> {
        let k = self.instrument.index_of(outcome)?;
        self.instrument.maps[k].apply(rho_tilde)
    }

    /// Outcome probability and post-measurement state.
    pub fn condition(&self, rho: &Operator, outcome: &str) -> Result<Conditioned> {
        self.condition_with_tol(rho, outcome, DEFAULT_TOL)
    }

    pub fn condition_with_tol(&self, rho: &Operator, outcome: &str, tol: f64) -> Result<Conditioned> {
        let out = self.step_unnormalized(rho, outcome)?;
        let raw = out.trace().re;
        if raw <= tol {
            return Err(Error::OutcomeImpossible { probability: raw });
        }
        let probability = raw.min(1.0);
        let clamped_from = if probability != raw {
            log::warn!("outcome probability {raw} clamped to 1");
            Some(raw)
        } else {
            None
        };
        Ok(Conditioned { state: out.scale_real(1.0 / raw), probability, clamped_from })
    }

    /// `M_{k_t} o ... o M_{k_0}(rho0)`.
    pub fn propagate(&self, rho0: &Operator, seq: &[impl AsRef<str>]) -> Result<Operator> {
        ensure_dim(self.dim(), rho0.dim())?;
        let mut x = rho0.matrix().clone();
        for label in seq {
            let k = self.instrument.index_of(label.as_ref())?;
            x = self.instrument.maps[k].apply_mat(&x);
        }
        Ok(Operator::new(x).expect("square"))
    }

    /// Joint probability of an outcome sequence: the trace of the
    /// unnormalized propagated state. The empty sequence has probability 1.
    pub fn trajectory_probability(&self, rho0: &Operator, seq: &[impl AsRef<str>]) -> Result<f64> {
        if seq.is_empty() {
            ensure_dim(self.dim(), rho0.dim())?;
            return Ok(1.0);
        }
        let p = self.propagate(rho0, seq)?.trace().re;
        if p < 0.0 {
            log::debug!("negative sequence probability {p:e} clamped to 0");
        }
        Ok(p.max(0.0))
    }

    /// `y = C(rho_tilde)`.
    pub fn output_eval(&self, rho_tilde: &Operator) -> Result<Vec<Complex64>> {
        self.output.eval(rho_tilde)
    }

    #[cfg(test)]
    pub(crate) fn replace_map(&mut self, k: usize, map: Superoperator) {
        self.instrument.maps[k] = map;
    }
}

/// Random CE on `C^n`: a jointly normalized Kraus family split over the
/// outcomes (`kraus_per_outcome` each), observables `{1}` plus
/// `extra_observables` random Hermitian operators.
pub fn random_ce<R: Rng + ?Sized>(
    n: usize,
    n_outcomes: usize,
    kraus_per_outcome: usize,
    extra_observables: usize,
    rng: &mut R,
) -> ConditionalEvolution {
    let family = random::random_kraus_family(n, n_outcomes * kraus_per_outcome, rng);
    let maps = family
        .chunks(kraus_per_outcome)
        .map(|ks| Superoperator::from_kraus(ks.to_vec()).expect("nonempty"))
        .collect();
    let outcomes = (0..n_outcomes).map(|k| k.to_string()).collect();
    let mut obs = vec![("I".to_string(), Operator::identity(n))];
    for j in 0..extra_observables {
        obs.push((format!("O{}", j + 1), random::random_hermitian(n, rng)));
    }
    ConditionalEvolution::new(
        Instrument::new(outcomes, maps).expect("valid instrument"),
        OutputMap::new(obs).expect("valid observables"),
    )
    .expect("dims agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Pauli;
    use crate::random::{random_density, seeded_rng};

    fn projective_z() -> ConditionalEvolution {
        let p0 = Operator::ket_bra(2, 0, 0);
        let p1 = Operator::ket_bra(2, 1, 1);
        let inst = Instrument::new(
            vec!["0".into(), "1".into()],
            vec![
                Superoperator::from_kraus_ops(&[p0]).unwrap(),
                Superoperator::from_kraus_ops(&[p1]).unwrap(),
            ],
        )
        .unwrap();
        ConditionalEvolution::new(inst, OutputMap::identity_only(2)).unwrap()
    }

    fn plus() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::projector(&[linalg::c(s, 0.0), linalg::c(s, 0.0)])
    }

    #[test]
    fn projective_measurement_validates() {
        let ce = projective_z();
        let r = ce.validate(1e-9);
        assert!(r.passed, "{:?}", r.failures());
    }

    #[test]
    fn halved_instrument_fails_normalization() {
        let ce = projective_z();
        let maps = ce.instrument().maps().iter().map(|m| m.scale(0.5)).collect();
        let inst = Instrument::new(ce.outcomes().to_vec(), maps).unwrap();
        let bad = ConditionalEvolution::new(inst, OutputMap::identity_only(2)).unwrap();
        let r = bad.validate(1e-9);
        assert!(!r.passed);
        assert!((r.normalization_residual - 0.5 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn missing_identity_is_reported() {
        let ce = projective_z();
        let out = OutputMap::new(vec![("Z".into(), Operator::pauli(Pauli::Z))]).unwrap();
        let ce = ConditionalEvolution::new(ce.instrument().clone(), out).unwrap();
        let r = ce.validate(1e-9);
        assert!(!r.identity_present && !r.passed);
    }

    #[test]
    fn conditioning_follows_born_rule() {
        let ce = projective_z();
        let zero = Operator::ket_bra(2, 0, 0);
        let c0 = ce.condition(&zero, "0").unwrap();
        assert_eq!(c0.probability, 1.0);
        assert!((&c0.state - &zero).frobenius_norm() < 1e-15);

        let c1 = ce.condition(&plus(), "1").unwrap();
        assert!((c1.probability - 0.5).abs() < 1e-15);
        assert!((&c1.state - &Operator::ket_bra(2, 1, 1)).frobenius_norm() < 1e-14);

        assert!(matches!(ce.condition(&zero, "1"), Err(Error::OutcomeImpossible { .. })));
        assert!(matches!(ce.condition(&zero, "2"), Err(Error::UnknownOutcome(_))));
    }

    #[test]
    fn empty_sequence_has_unit_probability() {
        let ce = projective_z();
        let empty: [&str; 0] = [];
        assert_eq!(ce.trajectory_probability(&plus(), &empty).unwrap(), 1.0);
    }

    #[test]
    fn output_eval_examples() {
        let z = OutputMap::new(vec![
            ("I".into(), Operator::identity(2)),
            ("Z".into(), Operator::pauli(Pauli::Z)),
        ])
        .unwrap();
        let y = z.eval(&Operator::ket_bra(2, 0, 0)).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-15 && (y[1].re - 1.0).abs() < 1e-15);
        let x = OutputMap::new(vec![
            ("I".into(), Operator::identity(2)),
            ("X".into(), Operator::pauli(Pauli::X)),
        ])
        .unwrap();
        let y = x.eval(&plus().scale_real(0.3)).unwrap();
        assert!((y[0].re - 0.3).abs() < 1e-15 && (y[1].re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn random_ce_conserves_trace() {
        let mut rng = seeded_rng(9);
        let ce = random_ce(3, 3, 2, 1, &mut rng);
        assert!(ce.validate(1e-9).passed);
        let rho = random_density(3, &mut rng);
        let total: f64 = ce
            .outcomes()
            .iter()
            .map(|k| ce.step_unnormalized(&rho, k).unwrap().trace().re)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_two_qubit_sequences_sum_to_one() {
        let mut rng = seeded_rng(10);
        let ce = random_ce(4, 4, 1, 0, &mut rng);
        let rho = random_density(4, &mut rng);
        let mut total = 0.0;
        for a in ce.outcomes() {
            for b in ce.outcomes() {
                total += ce.trajectory_probability(&rho, &[a, b]).unwrap();
            }
        }
        assert_eq!(ce.outcomes().len(), 4);
        assert!((total - 1.0).abs() < 1e-12);
    }
}
