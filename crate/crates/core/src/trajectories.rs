//! Monte Carlo measurement records, exhaustive sequence distributions, and
//! total-variation comparison.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMat};
use crate::model::ConditionalEvolution;
use crate::operator::{Operator, DEFAULT_TOL};
use crate::random::stream_rng;

/// Default limit on `|Omega|^T` for exhaustive enumeration.
pub const ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<String>,
    /// Conditional probability of each observed outcome given the past.
    pub probabilities: Vec<f64>,
    /// Normalized state after each step.
    #[serde(skip)]
    pub states: Option<Vec<Operator>>,
    /// Conditioned expectation values after each step.
    pub outputs: Vec<Vec<Complex64>>,
    /// Largest `|sum_k p_k - 1|` seen before renormalizing.
    pub max_drift: f64,
}

impl TrajectoryRecord {
    pub fn joint_probability(&self) -> f64 {
        self.probabilities.iter().product()
    }
}

/// One record of `steps` outcomes from the normalized recursion
/// `rho -> M_k(rho) / tr M_k(rho)`, with `k` drawn with probability
/// `tr M_k(rho)`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    ce: &ConditionalEvolution,
    rho0: &Operator,
    steps: usize,
    rng: &mut R,
    tol: f64,
) -> Result<TrajectoryRecord> {
    ensure_dim(ce.dim(), rho0.dim())?;
    if steps == 0 {
        return Err(Error::InvalidArgument("a trajectory needs at least one step".into()));
    }
    let maps = ce.instrument().maps();
    let mut rho = rho0.matrix().clone();
    let mut rec = TrajectoryRecord {
        outcomes: Vec::with_capacity(steps),
        probabilities: Vec::with_capacity(steps),
        states: Some(Vec::with_capacity(steps)),
        outputs: Vec::with_capacity(steps),
        max_drift: 0.0,
    };
    for _ in 0..steps {
        let images: Vec<CMat> = maps.iter().map(|m| m.apply_mat(&rho)).collect();
        let probs: Vec<f64> = images.iter().map(|x| x.trace().re.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total < tol {
            return Err(Error::StateEscaped { mass: total });
        }
        let drift = (total - 1.0).abs();
        if drift > tol {
            log::warn!("outcome probabilities sum to {total}; renormalizing");
        }
        rec.max_drift = rec.max_drift.max(drift);
        let u: f64 = rng.random::<f64>() * total;
        let mut k = 0;
        let mut acc = probs[0];
        while u >= acc && k + 1 < probs.len() {
            k += 1;
            acc += probs[k];
        }
        // Skip zero-probability outcomes that the cumulative search can land
        // on through roundoff.
        while probs[k] == 0.0 {
            k -= 1;
        }
        rho = linalg::hermitian_part(&images[k].unscale(probs[k]));
        rec.outcomes.push(ce.outcomes()[k].clone());
        rec.probabilities.push(probs[k] / total);
        rec.outputs.push(ce.output().eval_mat(&rho));
        if let Some(states) = rec.states.as_mut() {
            states.push(Operator::new(rho.clone())?);
        }
    }
    Ok(rec)
}

/// `count` independent records; record `i` uses stream `i` of `seed`, so
/// results do not depend on thread scheduling. States are not kept.
pub fn sample_trajectories(
    ce: &ConditionalEvolution,
    rho0: &Operator,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut rec = sample_trajectory(ce, rho0, steps, &mut rng, DEFAULT_TOL)?;
            rec.states = None;
            Ok(rec)
        })
        .collect()
}

/// Writes one JSON object per line.
pub fn write_records<W: Write>(records: &[TrajectoryRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionEntry {
    pub seq: Vec<String>,
    /// `tr rho~` after the sequence.
    pub p: f64,
    /// Unnormalized outputs `C(rho~)`; empty for empirical tables.
    pub y: Vec<Complex64>,
}

/// Sequences of a fixed length in declaration (lexicographic) order.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct DistributionTable {
    pub entries: Vec<DistributionEntry>,
}

impl DistributionTable {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.p).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Max entrywise output difference against a table over the same
    /// sequences.
    pub fn max_output_deviation(&self, other: &DistributionTable) -> Result<f64> {
        let index = other.index()?;
        let mut worst = 0.0f64;
        for e in &self.entries {
            let o = index
                .get(&e.seq)
                .ok_or_else(|| Error::InvalidArgument(format!("sequence {:?} missing", e.seq)))?;
            ensure_dim(e.y.len(), o.y.len())?;
            for (a, b) in e.y.iter().zip(&o.y) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok(worst)
    }

    fn index(&self) -> Result<HashMap<&Vec<String>, &DistributionEntry>> {
        let mut map = HashMap::with_capacity(self.entries.len());
        for e in &self.entries {
            if map.insert(&e.seq, e).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate sequence {:?}", e.seq)));
            }
        }
        Ok(map)
    }
}

fn check_cap(n_outcomes: usize, steps: usize, cap: u128) -> Result<u128> {
    let required = (n_outcomes as u128)
        .checked_pow(steps as u32)
        .unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }
    Ok(required)
}

/// Probability and unnormalized outputs of every length-`steps` sequence.
pub fn enumerate_distribution(
    ce: &ConditionalEvolution,
    rho0: &Operator,
    steps: usize,
    cap: u128,
) -> Result<DistributionTable> {
    ensure_dim(ce.dim(), rho0.dim())?;
    let n_out = ce.instrument().len();
    let required = check_cap(n_out, steps, cap)?;
    let mut entries = Vec::with_capacity(required as usize);
    let mut word = Vec::with_capacity(steps);
    enumerate_rec(ce, rho0.matrix(), steps, &mut word, &mut entries);
    Ok(DistributionTable { entries })
}

fn enumerate_rec(
    ce: &ConditionalEvolution,
    rho: &CMat,
    remaining: usize,
    word: &mut Vec<usize>,
    out: &mut Vec<DistributionEntry>,
) {
    if remaining == 0 {
        out.push(DistributionEntry {
            seq: word.iter().map(|&k| ce.outcomes()[k].clone()).collect(),
            p: rho.trace().re,
            y: ce.output().eval_mat(rho),
        });
        return;
    }
    for (k, m) in ce.instrument().maps().iter().enumerate() {
        let next = m.apply_mat(rho);
        word.push(k);
        enumerate_rec(ce, &next, remaining - 1, word, out);
        word.pop();
    }
}

/// Frequencies of the sampled records over every length-`steps` sequence.
pub fn empirical_distribution(
    outcomes: &[String],
    steps: usize,
    records: &[TrajectoryRecord],
) -> Result<DistributionTable> {
    check_cap(outcomes.len(), steps, ENUMERATION_CAP)?;
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    for r in records {
        if r.outcomes.len() < steps {
            return Err(Error::InvalidArgument("record shorter than the requested length".into()));
        }
        *counts.entry(&r.outcomes[..steps]).or_default() += 1;
    }
    let total = records.len().max(1) as f64;
    let mut entries = Vec::new();
    let mut idx = vec![0usize; steps];
    loop {
        let seq: Vec<String> = idx.iter().map(|&k| outcomes[k].clone()).collect();
        let c = counts.get(seq.as_slice()).copied().unwrap_or(0);
        entries.push(DistributionEntry { seq, p: c as f64 / total, y: Vec::new() });
        // Odometer increment, last position fastest.
        let mut pos = steps;
        loop {
            if pos == 0 {
                return Ok(DistributionTable { entries });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < outcomes.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `1/2 sum |p - q|` over a common sequence set.
pub fn total_variation(a: &DistributionTable, b: &DistributionTable) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "tables cover different sequence sets ({} vs {} entries)",
            a.len(),
            b.len()
        )));
    }
    let index = b.index()?;
    let mut sum = 0.0;
    for e in &a.entries {
        let o = index
            .get(&e.seq)
            .ok_or_else(|| Error::InvalidArgument(format!("sequence {:?} missing from second table", e.seq)))?;
        sum += (e.p - o.p).abs();
    }
    Ok(0.5 * sum)
}
