//! Finite-dimensional *-algebras of operators: closure, commutant and center,
//! a numerical Wedderburn decomposition, and the trace-preserving conditional
//! expectation `E = J o R` onto the algebra.
//!
//! Algebra bases are always Hermitian and Hilbert-Schmidt orthonormal; a
//! *-closed span always admits one, and it lets random Hermitian elements be
//! drawn with real coefficients.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, c, CMat, Clustering, RMat, I};
use crate::operator::{orthonormalize, Operator, OperatorSubspace};
use crate::random::{complex_gaussian, seeded_rng, SeededRng};
use crate::superop::{compose, ChannelReport, Superoperator};

/// Number of redraws after the first attempt before giving up.
pub const MAX_REDRAWS: usize = 8;

#[derive(Clone, Debug)]
pub struct StarAlgebra {
    basis: OperatorSubspace,
    unital: bool,
}

/// Splits operators into Hermitian generators `(X + X^dagger)/2` and
/// `(X - X^dagger)/(2i)`; their complex span is `span{X, X^dagger}`.
fn hermitian_generators(ops: &[Operator]) -> Vec<Operator> {
    let mut out = Vec::with_capacity(2 * ops.len());
    for x in ops {
        let m = x.matrix();
        out.push(Operator::new(linalg::hermitian_part(m)).expect("square"));
        let anti = (m - m.adjoint()).map(|z| z * c(0.0, -0.5));
        out.push(Operator::new(anti).expect("square"));
    }
    out
}

/// Gram-Schmidt push keeping the basis Hermitian. The residual is compared
/// against `tol * scale`; `scale` must be the norm of the product the
/// candidate came from, since a Hermitian or anti-Hermitian part can be pure
/// roundoff.
fn push_hermitian(basis: &mut Vec<Operator>, cand: &CMat, scale: f64, tol: f64) -> bool {
    let norm = linalg::frob(cand);
    if norm == 0.0 || norm <= tol * scale {
        return false;
    }
    let mut r = cand.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            // <B, X> is real for Hermitian B, X.
            let z = b.matrix().dotc(&r).re;
            r -= b.matrix().scale(z);
        }
    }
    let r = linalg::hermitian_part(&r);
    let rn = linalg::frob(&r);
    if rn > tol * scale.max(norm) {
        basis.push(Operator::new(r.unscale(rn)).expect("square"));
        true
    } else {
        false
    }
}

/// Smallest *-algebra containing the subspace: repeatedly adds the Hermitian
/// and anti-Hermitian parts of `A G` for current basis elements `A` and
/// generators `G`, until no new dimension appears (at most `n^2` rounds).
pub fn algebra_closure(subspace: &OperatorSubspace, tol: f64) -> Result<StarAlgebra> {
    if subspace.dim() == 0 {
        return Err(Error::InvalidArgument("algebra closure of an empty subspace".into()));
    }
    let n = subspace.ambient_dim();
    let gens = orthonormalize(&hermitian_generators(subspace.basis()), tol)?;
    let generators: Vec<CMat> = gens.basis().iter().map(|g| g.matrix().clone()).collect();
    let mut basis: Vec<Operator> = gens.basis().to_vec();
    let mut frontier: Vec<usize> = (0..basis.len()).collect();
    for _ in 0..n * n {
        if frontier.is_empty() || basis.len() >= n * n {
            break;
        }
        let mut added = Vec::new();
        for &i in &frontier {
            let a = basis[i].matrix().clone();
            for g in &generators {
                let p = &a * g;
                let scale = linalg::frob(&p);
                let herm = linalg::hermitian_part(&p);
                let anti = (&p - p.adjoint()).map(|z| z * c(0.0, -0.5));
                for cand in [herm, anti] {
                    if push_hermitian(&mut basis, &cand, scale, tol) {
                        added.push(basis.len() - 1);
                    }
                }
            }
        }
        frontier = added;
    }
    Ok(StarAlgebra::from_hermitian_basis(n, basis, tol))
}

impl StarAlgebra {
    fn from_hermitian_basis(n: usize, basis: Vec<Operator>, tol: f64) -> Self {
        let basis = OperatorSubspace::from_orthonormal(n, basis);
        let id = Operator::identity(n);
        let unital = basis.residual(&id).map(|r| r <= tol * (n as f64).sqrt()).unwrap_or(false);
        StarAlgebra { basis, unital }
    }

    /// Wraps a span that is already known to be a *-algebra (for instance
    /// `span{1}` or a matrix-unit family); the basis is re-orthonormalized
    /// into Hermitian form.
    pub fn from_span(ops: &[Operator], tol: f64) -> Result<Self> {
        let n = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty algebra span".into()))?
            .dim();
        let s = orthonormalize(&hermitian_generators(ops), tol)?;
        Ok(StarAlgebra::from_hermitian_basis(n, s.basis().to_vec(), tol))
    }

    /// The full algebra `B(C^n)`.
    pub fn full(n: usize, tol: f64) -> Self {
        StarAlgebra::from_span(OperatorSubspace::full(n).basis(), tol).expect("nonempty")
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &[Operator] {
        self.basis.basis()
    }

    pub fn subspace(&self) -> &OperatorSubspace {
        &self.basis
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    /// Max residual of `B_i B_j` outside the span.
    pub fn product_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in self.basis() {
            for b in self.basis() {
                worst = worst.max(self.basis.residual(&(a * b)).expect("dims"));
            }
        }
        worst
    }

    /// Max residual of `B_i^dagger` outside the span.
    pub fn adjoint_residual(&self) -> f64 {
        self.basis()
            .iter()
            .map(|b| self.basis.residual(&b.adjoint()).expect("dims"))
            .fold(0.0, f64::max)
    }

    /// Matrix of the Hilbert-Schmidt orthogonal projector onto the span.
    pub fn orthogonal_projector(&self) -> Superoperator {
        let n = self.ambient_dim();
        Superoperator::from_matrix(n, n, self.basis.projector_matrix()).expect("square")
    }

    /// Span equality in both directions: max residual of each basis in the
    /// other span.
    pub fn span_distance(&self, other: &StarAlgebra) -> Result<f64> {
        ensure_dim(self.ambient_dim(), other.ambient_dim())?;
        let mut worst = 0.0f64;
        for b in other.basis() {
            worst = worst.max(self.basis.residual(b)?);
        }
        for b in self.basis() {
            worst = worst.max(other.basis.residual(b)?);
        }
        if self.dim() != other.dim() {
            worst = worst.max(1.0);
        }
        Ok(worst)
    }

    /// A random Hermitian element `sum_j g_j B_j` with standard normal `g_j`.
    pub fn random_hermitian_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Operator {
        random_hermitian_combination(self.basis(), rng)
    }

    /// Center `Z(A) = A cap A'`, solved in algebra coordinates: real
    /// coefficient vectors `c` with `sum_j c_j [B_j, B_i] = 0` for all `i`.
    pub fn center(&self, tol: f64) -> OperatorSubspace {
        let n = self.ambient_dim();
        let m = self.dim();
        let mut sys = RMat::zeros(m * n * n, m);
        for (j, bj) in self.basis().iter().enumerate() {
            for (i, bi) in self.basis().iter().enumerate() {
                let comm = commutator_hermitian(bj.matrix(), bi.matrix());
                sys.view_mut((i * n * n, j), (n * n, 1)).copy_from(&linalg::herm_to_real(&comm));
            }
        }
        let null = linalg::null_space_real(&sys, tol, 1.0);
        let basis = (0..null.ncols())
            .map(|l| {
                let mut acc = CMat::zeros(n, n);
                for (j, b) in self.basis().iter().enumerate() {
                    acc += b.matrix().scale(null[(j, l)]);
                }
                Operator::new(linalg::hermitian_part(&acc)).expect("square")
            })
            .collect();
        OperatorSubspace::from_orthonormal(n, basis)
    }
}

/// `i [A, B]`, Hermitian when `A` and `B` are.
fn commutator_hermitian(a: &CMat, b: &CMat) -> CMat {
    (a * b - b * a).map(|z| z * I)
}

fn random_hermitian_combination<R: Rng + ?Sized>(basis: &[Operator], rng: &mut R) -> Operator {
    let n = basis[0].dim();
    let mut acc = CMat::zeros(n, n);
    for b in basis {
        let g: f64 = rng.sample(StandardNormal);
        acc += b.matrix().scale(g);
    }
    Operator::new(linalg::hermitian_part(&acc)).expect("square")
}

/// Commutant `{X : X B = B X for all B in A}`, the real null space of the
/// stacked maps `X -> i[X, B]` on Hermitian `X`.
///
/// Two random elements generate `A` with probability one, so their commutant
/// is tried first and then checked against the whole basis; on failure the
/// full basis is stacked.
pub fn commutant(alg: &StarAlgebra, tol: f64) -> StarAlgebra {
    let n = alg.ambient_dim();
    if alg.dim() > 2 {
        let mut rng = seeded_rng(COMMUTANT_SEED);
        let probes: Vec<CMat> = (0..2)
            .map(|_| {
                let h = alg.random_hermitian_element(&mut rng).into_matrix();
                let norm = linalg::frob(&h);
                h.unscale(norm)
            })
            .collect();
        let cand = commutant_of(n, &probes, tol);
        let check = tol.sqrt();
        let commutes = cand.basis().iter().all(|x| {
            alg.basis().iter().all(|b| linalg::frob(&commutator_hermitian(x.matrix(), b.matrix())) <= check)
        });
        if commutes {
            return cand;
        }
        log::debug!("commutant from random elements failed its check; stacking the full basis");
    }
    let all: Vec<CMat> = alg.basis().iter().map(|b| b.matrix().clone()).collect();
    commutant_of(n, &all, tol)
}

const COMMUTANT_SEED: u64 = 0x5eed;

fn commutant_of(n: usize, ops: &[CMat], tol: f64) -> StarAlgebra {
    let n2 = n * n;
    let mut sys = RMat::zeros(ops.len() * n2, n2);
    let mut unit = vec![0.0; n2];
    for a in 0..n2 {
        unit.iter_mut().for_each(|v| *v = 0.0);
        unit[a] = 1.0;
        let h = linalg::real_to_herm(&unit, n);
        for (i, b) in ops.iter().enumerate() {
            let comm = commutator_hermitian(&h, b);
            sys.view_mut((i * n2, a), (n2, 1)).copy_from(&linalg::herm_to_real(&comm));
        }
    }
    let null = linalg::null_space_real(&sys, tol, 1.0);
    let basis: Vec<Operator> = (0..null.ncols())
        .map(|l| Operator::new(linalg::real_to_herm(null.column(l).as_slice(), n)).expect("square"))
        .collect();
    StarAlgebra::from_hermitian_basis(n, basis, tol)
}

/// One block `B(C^{d_S}) (x) 1_{d_F}` of a Wedderburn decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Block {
    pub d_s: usize,
    pub d_f: usize,
}

/// `U^dagger A U = (+)_k B(C^{d_S,k}) (x) 1_{d_F,k}`. Columns of `U` are
/// ordered by (block, S index, F index), so within block `k` the index is
/// `s * d_F + f`.
#[derive(Clone, Debug)]
pub struct WedderburnDecomposition {
    u: Operator,
    blocks: Vec<Block>,
    /// Draw attempts used (1 = first draw succeeded).
    pub attempts: usize,
}

impl WedderburnDecomposition {
    /// Assembles a decomposition from a unitary and block list.
    pub fn new(u: Operator, blocks: Vec<Block>) -> Result<Self> {
        let total: usize = blocks.iter().map(|b| b.d_s * b.d_f).sum();
        ensure_dim(u.dim(), total)?;
        Ok(WedderburnDecomposition { u, blocks, attempts: 1 })
    }

    pub fn u(&self) -> &Operator {
        &self.u
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Blocks sorted, for seed-independent comparison.
    pub fn block_multiset(&self) -> Vec<Block> {
        let mut b = self.blocks.clone();
        b.sort();
        b
    }

    /// Column offset of each block in `U`.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.d_s * b.d_f;
                Some(o)
            })
            .collect()
    }

    /// Offset of each block in the reduced Hilbert space `C^{sum d_S}`.
    pub fn reduced_offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.d_s;
                Some(o)
            })
            .collect()
    }

    /// `sum_k d_S,k`: size of the block-diagonal reduced matrices.
    pub fn reduced_hilbert_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d_s).sum()
    }

    /// `sum_k d_S,k^2`: dimension of the reduced operator algebra.
    pub fn reduced_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d_s * b.d_s).sum()
    }

    /// Isometry `W_k^dagger`: the `n x (d_S d_F)` column block of `U`.
    pub fn isometry(&self, k: usize) -> CMat {
        let off = self.offsets()[k];
        let b = self.blocks[k];
        self.u.matrix().columns(off, b.d_s * b.d_f).into_owned()
    }

    pub fn unitarity_residual(&self) -> f64 {
        let n = self.u.dim();
        linalg::frob(&(self.u.matrix().adjoint() * self.u.matrix() - CMat::identity(n, n)))
    }

    /// Max over `X` of the part of `U^dagger X U` outside the block form
    /// `(+)_k X_S,k (x) 1_F,k`, relative to `||X||_F`.
    pub fn structure_residual(&self, ops: &[Operator]) -> f64 {
        let offsets = self.offsets();
        let mut worst = 0.0f64;
        for x in ops {
            let y = self.u.matrix().adjoint() * x.matrix() * self.u.matrix();
            let mut ideal = CMat::zeros(y.nrows(), y.ncols());
            for (b, &off) in self.blocks.iter().zip(&offsets) {
                let size = b.d_s * b.d_f;
                let yk = y.view((off, off), (size, size)).into_owned();
                let xs = linalg::partial_trace_second(&yk, b.d_s, b.d_f).unscale(b.d_f as f64);
                let rebuilt = linalg::kron(&xs, &CMat::identity(b.d_f, b.d_f));
                ideal.view_mut((off, off), (size, size)).copy_from(&rebuilt);
            }
            let norm = x.frobenius_norm().max(f64::MIN_POSITIVE);
            worst = worst.max(linalg::frob(&(y - ideal)) / norm);
        }
        worst
    }

    /// Orthonormal basis of the reduced block-diagonal algebra
    /// `(+)_k B(C^{d_S,k})` inside `B(C^{sum d_S})`.
    pub fn reduced_basis(&self) -> Vec<Operator> {
        let d = self.reduced_hilbert_dim();
        let mut out = Vec::with_capacity(self.reduced_dim());
        for (b, off) in self.blocks.iter().zip(self.reduced_offsets()) {
            for j in 0..b.d_s {
                for i in 0..b.d_s {
                    out.push(Operator::ket_bra(d, off + i, off + j));
                }
            }
        }
        out
    }

    /// Projection of a `sum d_S` square matrix onto its diagonal blocks.
    pub fn block_diagonal_part(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(x.nrows(), x.ncols());
        for (b, off) in self.blocks.iter().zip(self.reduced_offsets()) {
            out.view_mut((off, off), (b.d_s, b.d_s))
                .copy_from(&x.view((off, off), (b.d_s, b.d_s)));
        }
        out
    }
}

fn cluster_or_reason(values: &[f64], tol: f64, what: &str) -> std::result::Result<Vec<std::ops::Range<usize>>, String> {
    match linalg::cluster_eigenvalues(values, tol) {
        Clustering::Clusters(c) => Ok(c),
        Clustering::Ambiguous { gap, threshold } => Err(format!(
            "ambiguous eigenvalue gap {gap:e} (threshold {threshold:e}) in {what}"
        )),
    }
}

/// One attempt at the decomposition with the given random stream.
fn try_wedderburn(
    alg: &StarAlgebra,
    center: &OperatorSubspace,
    rng: &mut SeededRng,
    tol: f64,
) -> std::result::Result<(CMat, Vec<Block>), String> {
    let n = alg.ambient_dim();
    // (1)-(2): a generic central element separates the minimal central
    // projections.
    let z = random_hermitian_combination(center.basis(), rng);
    let (zvals, zvecs) = linalg::eigh(z.matrix());
    let central = cluster_or_reason(&zvals, tol, "central element")?;

    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(central.len());
    for range in central {
        let r = range.len();
        let q = zvecs.columns(range.start, r).into_owned();
        // Compression P_k A P_k, expressed on the block's own coordinates.
        let compressed: Vec<Operator> = alg
            .basis()
            .iter()
            .map(|b| Operator::new(linalg::hermitian_part(&(q.adjoint() * b.matrix() * &q))).expect("square"))
            .collect();
        let block_alg = orthonormalize(&compressed, tol).map_err(|e| e.to_string())?;
        let m = block_alg.dim();
        let d_s = (m as f64).sqrt().round() as usize;
        if d_s == 0 || d_s * d_s != m || r % d_s != 0 {
            return Err(format!(
                "block of size {r} carries a {m}-dimensional algebra, not a full matrix factor"
            ));
        }
        let d_f = r / d_s;
        if d_s == 1 {
            for j in 0..r {
                columns.push(q.column(j).into_owned());
            }
            blocks.push(Block { d_s, d_f });
            continue;
        }
        // (3): eigenspaces of a generic Hermitian element of the block are the
        // slices |s> (x) C^{d_F}.
        let h = random_hermitian_combination(block_alg.basis(), rng);
        let (hvals, hvecs) = linalg::eigh(h.matrix());
        let slices = cluster_or_reason(&hvals, tol, "block element")?;
        if slices.len() != d_s || slices.iter().any(|s| s.len() != d_f) {
            return Err(format!(
                "block element split into {:?}, expected {d_s} slices of size {d_f}",
                slices.iter().map(|s| s.len()).collect::<Vec<_>>()
            ));
        }
        // (4): align the F factor across slices with the matrix units
        // P_i a P_0 of a generic element a, which are multiples of partial
        // isometries between slices.
        let mut a = CMat::zeros(r, r);
        for b in block_alg.basis() {
            a += b.matrix() * complex_gaussian(rng);
        }
        let a_norm = linalg::frob(&a);
        let v0 = hvecs.columns(slices[0].start, d_f).into_owned();
        let mut aligned = vec![v0.clone()];
        for s in &slices[1..] {
            let vi = hvecs.columns(s.start, d_f).into_owned();
            let t = &vi * (vi.adjoint() * &a * &v0);
            let scale = linalg::frob(&t) / (d_f as f64).sqrt();
            if scale <= tol.sqrt() * a_norm {
                return Err(format!("vanishing matrix unit (scale {scale:e})"));
            }
            aligned.push(t.unscale(scale));
        }
        for w in &aligned {
            let embedded = &q * w;
            for j in 0..d_f {
                columns.push(embedded.column(j).into_owned());
            }
        }
        blocks.push(Block { d_s, d_f });
    }
    if columns.len() != n {
        return Err(format!("assembled {} columns for dimension {n}", columns.len()));
    }
    let u = CMat::from_columns(&columns);
    Ok((u, blocks))
}

/// Numerical Wedderburn decomposition of a unital *-algebra.
///
/// Minimal central projections come from the eigenspaces of a random
/// Hermitian central element. Inside each central block the eigenspaces of a
/// random Hermitian algebra element give the `|s> (x) C^{d_F}` slices, and
/// the compressions `P_i a P_0` of a random element `a` fix a common basis of
/// the `F` factor. Ambiguous eigenvalue gaps trigger a redraw from the same
/// seeded stream; the resulting block dimensions do not depend on the seed.
pub fn wedderburn(alg: &StarAlgebra, tol: f64, seed: u64) -> Result<WedderburnDecomposition> {
    if !alg.is_unital() {
        return Err(Error::NotUnital);
    }
    let center = alg.center(tol);
    if center.dim() == 0 {
        return Err(Error::DegenerateAlgebra { attempts: 0, diagnostics: "empty center".into() });
    }
    let mut rng = seeded_rng(seed);
    let mut diagnostics = Vec::new();
    for attempt in 1..=(MAX_REDRAWS + 1) {
        match try_wedderburn(alg, &center, &mut rng, tol) {
            Ok((u, blocks)) => {
                let dec = WedderburnDecomposition { u: Operator::new(u)?, blocks, attempts: attempt };
                let structure = dec.structure_residual(alg.basis());
                let unitary = dec.unitarity_residual();
                if structure <= tol.sqrt() && unitary <= tol.sqrt() {
                    return Ok(dec);
                }
                diagnostics.push(format!(
                    "attempt {attempt}: structure residual {structure:e}, unitarity residual {unitary:e}"
                ));
            }
            Err(reason) => diagnostics.push(format!("attempt {attempt}: {reason}")),
        }
    }
    Err(Error::DegenerateAlgebra { attempts: MAX_REDRAWS + 1, diagnostics: diagnostics.join("; ") })
}

/// Factorization `E = J o R` of the conditional expectation onto the algebra.
///
/// `R(X) = (+)_k tr_F(W_k X W_k^dagger)` maps `B(C^n)` onto block-diagonal
/// matrices of size `sum d_S`; `J(Y) = U ((+)_k Y_k (x) 1_F / d_F) U^dagger`
/// maps back.
#[derive(Clone, Debug)]
pub struct CEFactorization {
    pub decomposition: WedderburnDecomposition,
    pub r: Superoperator,
    pub j: Superoperator,
    pub e: Superoperator,
}

impl CEFactorization {
    /// `sum_k d_S,k^2`.
    pub fn reduced_dim(&self) -> usize {
        self.decomposition.reduced_dim()
    }

    pub fn reduced_hilbert_dim(&self) -> usize {
        self.decomposition.reduced_hilbert_dim()
    }

    /// Checks every structural property against the algebra it projects on.
    pub fn check(&self, alg: &StarAlgebra, tol: f64) -> FactorizationReport {
        let reduced = self.decomposition.reduced_basis();
        let mut rj_identity = 0.0f64;
        for x in &reduced {
            let back = self.r.apply(&self.j.apply(x).expect("dims")).expect("dims");
            rj_identity = rj_identity.max((&back - x).frobenius_norm());
        }
        let ee = compose(&self.e, &self.e).expect("square");
        let idempotence = ee.distance(&self.e).expect("dims");
        let self_adjointness = self.e.adjoint().distance(&self.e).expect("dims");
        let fixes_algebra = alg
            .basis()
            .iter()
            .map(|b| (&self.e.apply(b).expect("dims") - b).frobenius_norm())
            .fold(0.0, f64::max);
        let projector_distance = self.e.distance(&alg.orthogonal_projector()).expect("dims");
        FactorizationReport {
            rj_identity,
            idempotence,
            self_adjointness,
            fixes_algebra,
            projector_distance,
            e: self.e.channel_checks(tol),
            r: self.r.channel_checks(tol),
            j: self.j.channel_checks(tol),
        }
    }
}

/// Residuals of the conditional-expectation invariants. Map distances are
/// Frobenius norms of matrix differences (upper bounds on operator norms).
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub rj_identity: f64,
    pub idempotence: f64,
    pub self_adjointness: f64,
    pub fixes_algebra: f64,
    pub projector_distance: f64,
    pub e: ChannelReport,
    pub r: ChannelReport,
    pub j: ChannelReport,
}

impl FactorizationReport {
    pub fn max_residual(&self) -> f64 {
        [self.rj_identity, self.idempotence, self.self_adjointness, self.fixes_algebra, self.projector_distance]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Builds `R`, `J` and `E = J o R` from a decomposition, with Kraus forms
/// `R_{k,f} = (1_S (x) <f|) W_k` and `J_{k,f} = W_k^dagger (1_S (x) |f>) / sqrt(d_F)`.
pub fn conditional_expectation(dec: &WedderburnDecomposition) -> Result<CEFactorization> {
    let n = dec.u().dim();
    let d = dec.reduced_hilbert_dim();
    let u = dec.u().matrix();
    let mut r_kraus = Vec::new();
    let mut j_kraus = Vec::new();
    for ((b, off), roff) in dec.blocks().iter().zip(dec.offsets()).zip(dec.reduced_offsets()) {
        let norm = 1.0 / (b.d_f as f64).sqrt();
        for f in 0..b.d_f {
            let mut rk = CMat::zeros(d, n);
            let mut jk = CMat::zeros(n, d);
            for s in 0..b.d_s {
                let col = u.column(off + s * b.d_f + f);
                rk.set_row(roff + s, &col.adjoint());
                jk.set_column(roff + s, &col.scale(norm));
            }
            r_kraus.push(rk);
            j_kraus.push(jk);
        }
    }
    let r = Superoperator::from_kraus(r_kraus)?;
    let j = Superoperator::from_kraus(j_kraus)?;
    let e = compose(&j, &r)?;
    Ok(CEFactorization { decomposition: dec.clone(), r, j, e })
}

/// A random unital *-algebra `V ((+)_k B(C^{d_S,k}) (x) 1_{d_F,k}) V^dagger`
/// with Haar-random `V`, together with its true block list.
pub fn random_structured_algebra<R: Rng + ?Sized>(blocks: &[Block], rng: &mut R) -> (Vec<Operator>, Operator) {
    let n: usize = blocks.iter().map(|b| b.d_s * b.d_f).sum();
    let v = crate::random::haar_unitary(n, rng);
    let mut ops = Vec::new();
    let mut off = 0;
    for b in blocks {
        for i in 0..b.d_s {
            for j in 0..b.d_s {
                let mut m = CMat::zeros(n, n);
                let unit = {
                    let mut e = CMat::zeros(b.d_s, b.d_s);
                    e[(i, j)] = c(1.0, 0.0);
                    e
                };
                let blk = linalg::kron(&unit, &CMat::identity(b.d_f, b.d_f));
                m.view_mut((off, off), (b.d_s * b.d_f, b.d_s * b.d_f)).copy_from(&blk);
                ops.push(Operator::new(v.matrix() * m * v.matrix().adjoint()).expect("square"));
            }
        }
        off += b.d_s * b.d_f;
    }
    (ops, v)
}

/// Two random elements of a span; they generate the whole algebra with
/// probability one.
pub fn random_generators<R: Rng + ?Sized>(span: &[Operator], count: usize, rng: &mut R) -> Vec<Operator> {
    let n = span[0].dim();
    (0..count)
        .map(|_| {
            let mut acc = CMat::zeros(n, n);
            for b in span {
                acc += b.matrix() * complex_gaussian(rng);
            }
            Operator::new(acc).expect("square")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DEFAULT_TOL;
    use crate::random::seeded_rng;

    fn diagonal_algebra(n: usize) -> StarAlgebra {
        let ops: Vec<Operator> = (0..n).map(|j| Operator::ket_bra(n, j, j)).collect();
        StarAlgebra::from_span(&ops, DEFAULT_TOL).unwrap()
    }

    fn scalars(n: usize) -> StarAlgebra {
        StarAlgebra::from_span(&[Operator::identity(n)], DEFAULT_TOL).unwrap()
    }

    #[test]
    fn closure_of_identity_and_diagonals() {
        let s = orthonormalize(&[Operator::identity(3)], DEFAULT_TOL).unwrap();
        let a = algebra_closure(&s, DEFAULT_TOL).unwrap();
        assert_eq!(a.dim(), 1);
        assert!(a.is_unital());
        let diag: Vec<Operator> = (0..4).map(|j| Operator::ket_bra(4, j, j)).collect();
        let s = orthonormalize(&diag, DEFAULT_TOL).unwrap();
        let a = algebra_closure(&s, DEFAULT_TOL).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.product_residual() < 1e-12 && a.adjoint_residual() < 1e-12);
    }

    #[test]
    fn closure_of_non_hermitian_generator() {
        // |0><1| generates all of B(C^2) together with its adjoint.
        let s = orthonormalize(&[Operator::ket_bra(2, 0, 1)], DEFAULT_TOL).unwrap();
        let a = algebra_closure(&s, DEFAULT_TOL).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.is_unital());
    }

    #[test]
    fn commutant_examples() {
        let full = StarAlgebra::full(3, DEFAULT_TOL);
        assert_eq!(commutant(&full, DEFAULT_TOL).dim(), 1);
        assert_eq!(commutant(&scalars(3), DEFAULT_TOL).dim(), 9);
        let diag = diagonal_algebra(4);
        let comm = commutant(&diag, DEFAULT_TOL);
        assert_eq!(comm.dim(), 4);
        assert!(comm.span_distance(&diag).unwrap() < 1e-10);
    }

    #[test]
    fn commutant_matches_direct_null_space_oracle() {
        // Oracle: complex null space of the stacked Kronecker commutator
        // matrices (1 (x) B - B^T (x) 1), independent of the Hermitian route.
        let mut rng = seeded_rng(21);
        let blocks = [Block { d_s: 1, d_f: 2 }, Block { d_s: 1, d_f: 1 }];
        let (ops, _) = random_structured_algebra(&blocks, &mut rng);
        let alg = StarAlgebra::from_span(&ops, DEFAULT_TOL).unwrap();
        let n = 3;
        let mut stacked = CMat::zeros(alg.dim() * n * n, n * n);
        let id = CMat::identity(n, n);
        for (i, b) in alg.basis().iter().enumerate() {
            let l = linalg::kron(&id, b.matrix()) - linalg::kron(&b.matrix().transpose(), &id);
            stacked.view_mut((i * n * n, 0), (n * n, n * n)).copy_from(&l);
        }
        let svd = stacked.svd(false, false);
        let smax = svd.singular_values.max();
        let nullity = svd.singular_values.iter().filter(|&&s| s <= 1e-9 * smax).count();
        assert_eq!(commutant(&alg, DEFAULT_TOL).dim(), nullity);
        assert_eq!(nullity, 5);
    }

    #[test]
    fn center_of_block_algebra() {
        let mut rng = seeded_rng(2);
        let blocks = [Block { d_s: 2, d_f: 1 }, Block { d_s: 1, d_f: 2 }];
        let (ops, _) = random_structured_algebra(&blocks, &mut rng);
        let alg = StarAlgebra::from_span(&ops, DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 5);
        assert_eq!(alg.center(DEFAULT_TOL).dim(), 2);
    }

    #[test]
    fn wedderburn_trivial_cases() {
        let d = wedderburn(&scalars(3), DEFAULT_TOL, 0).unwrap();
        assert_eq!(d.blocks(), &[Block { d_s: 1, d_f: 3 }]);
        let d = wedderburn(&diagonal_algebra(4), DEFAULT_TOL, 0).unwrap();
        assert_eq!(d.block_multiset(), vec![Block { d_s: 1, d_f: 1 }; 4]);
        let d = wedderburn(&StarAlgebra::full(3, DEFAULT_TOL), DEFAULT_TOL, 0).unwrap();
        assert_eq!(d.blocks(), &[Block { d_s: 3, d_f: 1 }]);
    }

    #[test]
    fn wedderburn_rejects_non_unital() {
        let alg = StarAlgebra::from_span(&[Operator::ket_bra(2, 0, 0)], DEFAULT_TOL).unwrap();
        assert!(!alg.is_unital());
        assert!(matches!(wedderburn(&alg, DEFAULT_TOL, 0), Err(Error::NotUnital)));
    }

    #[test]
    fn wedderburn_tensor_alignment_regression() {
        // Every basis element must come out as X_S (x) 1_F in every block.
        let mut rng = seeded_rng(8);
        let blocks = [Block { d_s: 2, d_f: 3 }, Block { d_s: 3, d_f: 1 }, Block { d_s: 1, d_f: 2 }];
        let (ops, _) = random_structured_algebra(&blocks, &mut rng);
        let alg = algebra_closure(
            &orthonormalize(&random_generators(&ops, 2, &mut rng), DEFAULT_TOL).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        // The closure of generic elements is the whole algebra (1 is included
        // as a polynomial in the generators).
        assert_eq!(alg.dim(), 4 + 9 + 1);
        for seed in 0..5 {
            let d = wedderburn(&alg, DEFAULT_TOL, seed).unwrap();
            let mut expect = blocks.to_vec();
            expect.sort();
            assert_eq!(d.block_multiset(), expect);
            assert!(d.structure_residual(alg.basis()) < 1e-10);
            assert!(d.unitarity_residual() < 1e-10);
        }
    }

    #[test]
    fn conditional_expectation_of_scalars_is_normalized_trace() {
        let d = wedderburn(&scalars(3), DEFAULT_TOL, 0).unwrap();
        let f = conditional_expectation(&d).unwrap();
        let mut rng = seeded_rng(3);
        let x = crate::random::random_operator(3, &mut rng);
        let ex = f.e.apply(&x).unwrap();
        let expect = Operator::identity(3).scale(x.trace() / 3.0);
        assert!((&ex - &expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn conditional_expectation_of_full_algebra_is_identity() {
        let d = wedderburn(&StarAlgebra::full(2, DEFAULT_TOL), DEFAULT_TOL, 0).unwrap();
        let f = conditional_expectation(&d).unwrap();
        assert!(f.e.distance(&Superoperator::identity(2)).unwrap() < 1e-12);
    }

    #[test]
    fn conditional_expectation_of_diagonal_algebra_is_dephasing() {
        let d = wedderburn(&diagonal_algebra(3), DEFAULT_TOL, 4).unwrap();
        let f = conditional_expectation(&d).unwrap();
        let mut rng = seeded_rng(4);
        let x = crate::random::random_operator(3, &mut rng);
        let ex = f.e.apply(&x).unwrap();
        let mut diag = CMat::zeros(3, 3);
        for i in 0..3 {
            diag[(i, i)] = x.matrix()[(i, i)];
        }
        assert!(linalg::frob(&(ex.into_matrix() - diag)) < 1e-12);
    }

    #[test]
    fn factor_j_for_qubit_diagonal_algebra_is_cptp() {
        let d = wedderburn(&diagonal_algebra(2), DEFAULT_TOL, 0).unwrap();
        let f = conditional_expectation(&d).unwrap();
        // Full Choi spectrum from the matrix, not the Kraus shortcut.
        let bare = Superoperator::from_matrix(2, 2, f.j.matrix().clone()).unwrap();
        let r = bare.channel_checks(1e-9);
        assert!(r.cp && r.tp);
    }

    #[test]
    fn factorization_report_on_block_algebra() {
        let mut rng = seeded_rng(12);
        let blocks = [Block { d_s: 2, d_f: 2 }, Block { d_s: 1, d_f: 1 }];
        let (ops, _) = random_structured_algebra(&blocks, &mut rng);
        let alg = StarAlgebra::from_span(&ops, DEFAULT_TOL).unwrap();
        let d = wedderburn(&alg, DEFAULT_TOL, 1).unwrap();
        let f = conditional_expectation(&d).unwrap();
        let rep = f.check(&alg, 1e-9);
        assert!(rep.max_residual() < 1e-9, "{rep:?}");
        assert!(rep.e.cp && rep.e.tp && rep.e.unital);
        assert!(rep.r.cp && rep.r.tp && rep.j.cp && rep.j.tp);
    }

    #[test]
    fn rotated_abelian_algebras_keep_their_center() {
        // commutators here are roundoff, not exact zeros
        let mut rng = seeded_rng(0);
        for blocks in [vec![Block { d_s: 1, d_f: 1 }; 3], vec![Block { d_s: 1, d_f: 2 }]] {
            let (span, _) = random_structured_algebra(&blocks, &mut rng);
            let alg = StarAlgebra::from_span(&span, 1e-9).unwrap();
            assert_eq!(alg.center(1e-9).dim(), alg.dim());
            let comm = commutant(&alg, 1e-9);
            let n: usize = blocks.iter().map(|b| b.d_f).sum();
            let expected: usize = blocks.iter().map(|b| b.d_f * b.d_f).sum();
            assert_eq!((comm.ambient_dim(), comm.dim()), (n, expected));
            let mut got = wedderburn(&alg, 1e-9, 0).unwrap().block_multiset();
            got.sort();
            assert_eq!(got, blocks);
        }
    }

    #[test]
    fn commutant_from_probes_matches_full_stack() {
        let mut rng = seeded_rng(9);
        let blocks = [Block { d_s: 2, d_f: 2 }, Block { d_s: 1, d_f: 3 }, Block { d_s: 1, d_f: 1 }];
        let (span, _) = random_structured_algebra(&blocks, &mut rng);
        let alg = StarAlgebra::from_span(&span, 1e-9).unwrap();
        let fast = commutant(&alg, 1e-9);
        let all: Vec<CMat> = alg.basis().iter().map(|b| b.matrix().clone()).collect();
        let slow = commutant_of(alg.ambient_dim(), &all, 1e-9);
        assert_eq!(fast.dim(), 4 + 9 + 1);
        assert!(fast.span_distance(&slow).unwrap() < 1e-9);
    }
}
