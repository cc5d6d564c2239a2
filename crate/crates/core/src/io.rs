//! JSON interchange. Complex numbers are `[re, im]`, matrices are row-major
//! nested arrays, superoperator matrices act on column-stacked vectors.
//!
//! A model file:
//!
//! ```json
//! {
//!   "dim": 2,
//!   "outcomes": ["0", "1"],
//!   "instrument": { "0": {"kraus": [M0]}, "1": {"matrix": S1} },
//!   "split": { "evolution": {"kraus": [U]}, "effects": {"0": ..., "1": ...} },
//!   "observables": [{"name": "I", "matrix": ...}]
//! }
//! ```
//!
//! `split` is optional. Reduced models are ordinary model files with an
//! extra `reduction` section holding the reduction map and block structure.

use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Block, CEFactorization, FactorizationReport, StarAlgebra, WedderburnDecomposition};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::{ConditionalEvolution, Instrument, OutputMap};
use crate::observability::LinearReducedModel;
use crate::operator::Operator;
use crate::reduction::{Provenance, ReducedCE};
use crate::superop::Superoperator;

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc, what: &str) -> Result<CMat> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("{what}: empty matrix")));
    }
    if let Some(i) = doc.iter().position(|r| r.len() != cols) {
        return Err(Error::Format(format!("{what}: row {i} has {} entries, expected {cols}", doc[i].len())));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| Complex64::new(doc[i][j][0], doc[i][j][1])))
}

/// A superoperator as Kraus operators or as its matrix. `in_dim`/`out_dim`
/// are only needed for rectangular matrix-form maps.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDoc>,
}

/// Kraus form when it is no larger than the matrix.
pub fn map_to_doc(s: &Superoperator) -> MapDoc {
    let (ni, no) = (s.in_dim(), s.out_dim());
    let rect = ni != no;
    let mut doc = MapDoc {
        in_dim: rect.then_some(ni),
        out_dim: rect.then_some(no),
        ..MapDoc::default()
    };
    match s.kraus() {
        Some(ks) if ks.len() * ni * no <= ni * ni * no * no => {
            doc.kraus = Some(ks.iter().map(matrix_to_doc).collect());
        }
        _ => doc.matrix = Some(matrix_to_doc(s.matrix())),
    }
    doc
}

/// Matrix form only, as used for the reduction map.
pub fn map_to_matrix_doc(s: &Superoperator) -> MapDoc {
    MapDoc {
        in_dim: Some(s.in_dim()),
        out_dim: Some(s.out_dim()),
        kraus: None,
        matrix: Some(matrix_to_doc(s.matrix())),
    }
}

pub fn map_from_doc(doc: &MapDoc, default_dim: Option<usize>, what: &str) -> Result<Superoperator> {
    let map = match (&doc.kraus, &doc.matrix) {
        (Some(ks), None) => {
            let kraus = ks
                .iter()
                .enumerate()
                .map(|(i, k)| matrix_from_doc(k, &format!("{what}.kraus[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Superoperator::from_kraus(kraus).map_err(|e| Error::Format(format!("{what}: {e}")))?
        }
        (None, Some(m)) => {
            let m = matrix_from_doc(m, &format!("{what}.matrix"))?;
            let ni = doc.in_dim.or(default_dim).unwrap_or_else(|| (m.ncols() as f64).sqrt().round() as usize);
            let no = doc.out_dim.or(default_dim).unwrap_or_else(|| (m.nrows() as f64).sqrt().round() as usize);
            Superoperator::from_matrix(ni, no, m).map_err(|e| Error::Format(format!("{what}: {e}")))?
        }
        _ => return Err(Error::Format(format!("{what}: exactly one of `kraus` and `matrix` is required"))),
    };
    if let Some(n) = default_dim {
        if map.in_dim() != n || map.out_dim() != n {
            return Err(Error::Format(format!(
                "{what}: maps {}x{} operators, model dimension is {n}",
                map.in_dim(),
                map.out_dim()
            )));
        }
    }
    Ok(map)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDoc {
    pub name: String,
    pub matrix: MatrixDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDoc {
    pub evolution: MapDoc,
    pub effects: IndexMap<String, MapDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionDoc {
    /// The reduction map `R`, applied to initial states of the full model.
    pub map: MapDoc,
    /// `[d_S, d_F]` per block.
    pub blocks: Vec<[usize; 2]>,
    pub hilbert_dim: usize,
    pub original_dim: usize,
    pub nperp_dim: usize,
    pub algebra_dim: usize,
    pub reduced_hilbert_dim: usize,
    pub reduced_dim: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(default)]
    pub wedderburn_attempts: usize,
}

impl ReductionDoc {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            hilbert_dim: self.hilbert_dim,
            original_dim: self.original_dim,
            nperp_dim: self.nperp_dim,
            algebra_dim: self.algebra_dim,
            reduced_hilbert_dim: self.reduced_hilbert_dim,
            reduced_dim: self.reduced_dim,
            blocks: self.blocks.iter().map(|b| Block { d_s: b[0], d_f: b[1] }).collect(),
            tol: self.tol,
            seed: self.seed,
            wedderburn_attempts: self.wedderburn_attempts,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    pub dim: usize,
    pub outcomes: Vec<String>,
    pub instrument: IndexMap<String, MapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitDoc>,
    pub observables: Vec<ObservableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionDoc>,
}

pub fn model_to_doc(ce: &ConditionalEvolution) -> ModelDoc {
    let instrument = ce
        .outcomes()
        .iter()
        .cloned()
        .zip(ce.instrument().maps().iter().map(map_to_doc))
        .collect();
    let split = ce.split().map(|s| SplitDoc {
        evolution: map_to_doc(&s.evolution),
        effects: ce.outcomes().iter().cloned().zip(s.effects.iter().map(map_to_doc)).collect(),
    });
    let observables = ce
        .output()
        .basis_labels()
        .iter()
        .zip(ce.output().observables())
        .map(|(name, o)| ObservableDoc { name: name.clone(), matrix: matrix_to_doc(o.matrix()) })
        .collect();
    ModelDoc { dim: ce.dim(), outcomes: ce.outcomes().to_vec(), instrument, split, observables, reduction: None }
}

fn ordered_maps(
    outcomes: &[String],
    maps: &IndexMap<String, MapDoc>,
    dim: usize,
    section: &str,
) -> Result<Vec<Superoperator>> {
    if let Some(extra) = maps.keys().find(|k| !outcomes.contains(k)) {
        return Err(Error::Format(format!("{section}: label `{extra}` is not a declared outcome")));
    }
    outcomes
        .iter()
        .map(|label| {
            let doc = maps
                .get(label)
                .ok_or_else(|| Error::Format(format!("{section}: no map for outcome `{label}`")))?;
            map_from_doc(doc, Some(dim), &format!("{section}.{label}"))
        })
        .collect()
}

pub fn model_from_doc(doc: &ModelDoc) -> Result<ConditionalEvolution> {
    if doc.dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    if doc.outcomes.is_empty() {
        return Err(Error::Format("outcomes must be nonempty".into()));
    }
    let maps = ordered_maps(&doc.outcomes, &doc.instrument, doc.dim, "instrument")?;
    let instrument = Instrument::new(doc.outcomes.clone(), maps).map_err(|e| Error::Format(e.to_string()))?;
    let observables = doc
        .observables
        .iter()
        .map(|o| {
            let m = matrix_from_doc(&o.matrix, &format!("observable `{}`", o.name))?;
            if m.nrows() != doc.dim || m.ncols() != doc.dim {
                return Err(Error::Format(format!(
                    "observable `{}` is {}x{}, model dimension is {}",
                    o.name,
                    m.nrows(),
                    m.ncols(),
                    doc.dim
                )));
            }
            Ok((o.name.clone(), Operator::new(m)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let output = OutputMap::new(observables).map_err(|e| Error::Format(e.to_string()))?;
    let mut ce = ConditionalEvolution::new(instrument, output)?;
    if let Some(split) = &doc.split {
        let evolution = map_from_doc(&split.evolution, Some(doc.dim), "split.evolution")?;
        let effects = ordered_maps(&doc.outcomes, &split.effects, doc.dim, "split.effects")?;
        ce = ce.with_split(evolution, effects)?;
    }
    Ok(ce)
}

/// A model file together with its reduction section, if any.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: ConditionalEvolution,
    pub reduction: Option<LoadedReduction>,
}

#[derive(Clone, Debug)]
pub struct LoadedReduction {
    pub map: Superoperator,
    pub provenance: Provenance,
}

pub fn parse_model(text: &str) -> Result<LoadedModel> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let model = model_from_doc(&doc)?;
    let reduction = match &doc.reduction {
        Some(r) => {
            let map = map_from_doc(&r.map, None, "reduction.map")?;
            if map.out_dim() != model.dim() {
                return Err(Error::Format(format!(
                    "reduction.map has output dimension {}, model dimension is {}",
                    map.out_dim(),
                    model.dim()
                )));
            }
            Some(LoadedReduction { map, provenance: r.provenance() })
        }
        None => None,
    };
    Ok(LoadedModel { model, reduction })
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn model_to_json(ce: &ConditionalEvolution) -> Result<String> {
    Ok(serde_json::to_string_pretty(&model_to_doc(ce))?)
}

pub fn reduced_to_doc(red: &ReducedCE) -> ModelDoc {
    let mut doc = model_to_doc(&red.reduced_model);
    let p = &red.provenance;
    doc.reduction = Some(ReductionDoc {
        map: map_to_matrix_doc(red.reduction_map()),
        blocks: p.blocks.iter().map(|b| [b.d_s, b.d_f]).collect(),
        hilbert_dim: p.hilbert_dim,
        original_dim: p.original_dim,
        nperp_dim: p.nperp_dim,
        algebra_dim: p.algebra_dim,
        reduced_hilbert_dim: p.reduced_hilbert_dim,
        reduced_dim: p.reduced_dim,
        tol: p.tol,
        seed: p.seed,
        wedderburn_attempts: p.wedderburn_attempts,
    });
    doc
}

pub fn reduced_to_json(red: &ReducedCE) -> Result<String> {
    Ok(serde_json::to_string_pretty(&reduced_to_doc(red))?)
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearModelDoc {
    pub q: usize,
    #[serde(rename = "A")]
    pub a: IndexMap<String, MatrixDoc>,
    #[serde(rename = "C")]
    pub c: MatrixDoc,
    pub basis: Vec<MatrixDoc>,
}

pub fn linear_model_to_json(lin: &LinearReducedModel) -> Result<String> {
    let doc = LinearModelDoc {
        q: lin.q(),
        a: lin.outcomes().iter().cloned().zip(lin.a().iter().map(matrix_to_doc)).collect(),
        c: matrix_to_doc(lin.c()),
        basis: lin.basis().basis().iter().map(|b| matrix_to_doc(b.matrix())).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResiduals {
    pub structure: f64,
    pub unitarity: f64,
    pub factorization: FactorizationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionDoc {
    pub blocks: Vec<[usize; 2]>,
    #[serde(rename = "U")]
    pub u: MatrixDoc,
    pub residuals: DecompositionResiduals,
}

pub fn decomposition_doc(dec: &WedderburnDecomposition, f: &CEFactorization, alg: &StarAlgebra, tol: f64) -> DecompositionDoc {
    DecompositionDoc {
        blocks: dec.blocks().iter().map(|b| [b.d_s, b.d_f]).collect(),
        u: matrix_to_doc(dec.u().matrix()),
        residuals: DecompositionResiduals {
            structure: dec.structure_residual(alg.basis()),
            unitarity: dec.unitarity_residual(),
            factorization: f.check(alg, tol),
        },
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
