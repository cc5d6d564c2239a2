//! Output-equivalence comparison between two conditional systems driven by
//! the same outcome words.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::CMat;
use crate::model::ConditionalEvolution;
use crate::random::stream_rng;

/// Anything that evolves a state by outcome index and reports outputs.
pub trait ConditionalSystem: Sync {
    type State: Clone + Send + Sync;

    fn n_outcomes(&self) -> usize;
    fn step(&self, state: &Self::State, k: usize) -> Self::State;
    fn outputs(&self, state: &Self::State) -> Vec<Complex64>;
    /// Trace of the unnormalized state, i.e. the sequence probability.
    fn probability(&self, state: &Self::State) -> Complex64;
}

impl ConditionalSystem for ConditionalEvolution {
    type State = CMat;

    fn n_outcomes(&self) -> usize {
        self.instrument().len()
    }

    fn step(&self, state: &CMat, k: usize) -> CMat {
        self.instrument().maps()[k].apply_mat(state)
    }

    fn outputs(&self, state: &CMat) -> Vec<Complex64> {
        self.output().eval_mat(state)
    }

    fn probability(&self, state: &CMat) -> Complex64 {
        state.trace()
    }
}

/// Which outcome words to test.
#[derive(Clone, Debug)]
pub enum WordPlan {
    /// Every word of length `0..=max_len`.
    Exhaustive { max_len: usize },
    /// Seeded sample of words of length `max_len`; every prefix is checked.
    Sampled { words: Vec<Vec<usize>> },
}

/// Default number of sampled words when exhaustive enumeration is too large.
pub const SAMPLE_CAP: usize = 10_000;

pub fn count_words(n_outcomes: usize, max_len: usize) -> u128 {
    (0..=max_len).map(|t| (n_outcomes as u128).pow(t as u32)).sum()
}

impl WordPlan {
    pub fn new(n_outcomes: usize, max_len: usize, cap: usize, seed: u64) -> Self {
        if count_words(n_outcomes, max_len) <= cap as u128 {
            return WordPlan::Exhaustive { max_len };
        }
        let mut rng = stream_rng(seed, u64::MAX);
        let words = (0..cap)
            .map(|_| (0..max_len).map(|_| rng.random_range(0..n_outcomes)).collect())
            .collect();
        WordPlan::Sampled { words }
    }

    pub fn description(&self) -> String {
        match self {
            WordPlan::Exhaustive { max_len } => format!("all words up to length {max_len}"),
            WordPlan::Sampled { words } => format!(
                "{} sampled words of length {}",
                words.len(),
                words.first().map_or(0, |w| w.len())
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Deviation {
    /// Max over nodes and observables of the output deviation.
    pub max_dev: f64,
    /// Max deviation of sequence probabilities (traces).
    pub max_prob_dev: f64,
    /// `(state index, outcome word)` achieving `max_dev`.
    pub worst_case: Option<(usize, Vec<usize>)>,
    pub nodes: usize,
}

impl Deviation {
    fn zero() -> Self {
        Deviation { max_dev: 0.0, max_prob_dev: 0.0, worst_case: None, nodes: 0 }
    }

    fn merge(self, other: Deviation) -> Deviation {
        let take_other = self.worst_case.is_none() || other.max_dev > self.max_dev;
        let (max_dev, worst_case) = if take_other {
            (other.max_dev, other.worst_case)
        } else {
            (self.max_dev, self.worst_case)
        };
        Deviation {
            max_dev,
            max_prob_dev: self.max_prob_dev.max(other.max_prob_dev),
            worst_case,
            nodes: self.nodes + other.nodes,
        }
    }
}

fn node_deviation<A: ConditionalSystem, B: ConditionalSystem>(
    a: &A,
    b: &B,
    sa: &A::State,
    sb: &B::State,
) -> (f64, f64) {
    let ya = a.outputs(sa);
    let yb = b.outputs(sb);
    let dev = ya
        .iter()
        .zip(&yb)
        .map(|(x, y)| (x - y).norm())
        .fold(if ya.len() == yb.len() { 0.0 } else { f64::INFINITY }, f64::max);
    let pdev = (a.probability(sa) - b.probability(sb)).norm();
    (dev, pdev)
}

#[allow(clippy::too_many_arguments)]
fn dfs<A: ConditionalSystem, B: ConditionalSystem>(
    a: &A,
    b: &B,
    sa: &A::State,
    sb: &B::State,
    word: &mut Vec<usize>,
    remaining: usize,
    id: usize,
    acc: &mut Deviation,
) {
    let (dev, pdev) = node_deviation(a, b, sa, sb);
    acc.nodes += 1;
    acc.max_prob_dev = acc.max_prob_dev.max(pdev);
    if acc.worst_case.is_none() || dev > acc.max_dev {
        acc.max_dev = acc.max_dev.max(dev);
        acc.worst_case = Some((id, word.clone()));
    }
    if remaining == 0 {
        return;
    }
    for k in 0..a.n_outcomes() {
        let na = a.step(sa, k);
        let nb = b.step(sb, k);
        word.push(k);
        dfs(a, b, &na, &nb, word, remaining - 1, id, acc);
        word.pop();
    }
}

/// Runs both systems over the planned words from each paired initial state
/// and reports the worst output and probability deviations.
pub fn compare_systems<A: ConditionalSystem, B: ConditionalSystem>(
    a: &A,
    b: &B,
    initial: &[(A::State, B::State)],
    plan: &WordPlan,
) -> Deviation {
    assert_eq!(a.n_outcomes(), b.n_outcomes(), "systems must share the outcome set");
    initial
        .par_iter()
        .enumerate()
        .map(|(id, (sa, sb))| {
            let mut acc = Deviation::zero();
            match plan {
                WordPlan::Exhaustive { max_len } => {
                    dfs(a, b, sa, sb, &mut Vec::new(), *max_len, id, &mut acc);
                }
                WordPlan::Sampled { words } => {
                    let (d0, p0) = node_deviation(a, b, sa, sb);
                    acc.max_dev = d0;
                    acc.max_prob_dev = p0;
                    acc.worst_case = Some((id, Vec::new()));
                    acc.nodes = 1;
                    for w in words {
                        let mut xa = sa.clone();
                        let mut xb = sb.clone();
                        for (t, &k) in w.iter().enumerate() {
                            xa = a.step(&xa, k);
                            xb = b.step(&xb, k);
                            let (d, p) = node_deviation(a, b, &xa, &xb);
                            acc.nodes += 1;
                            acc.max_prob_dev = acc.max_prob_dev.max(p);
                            if d > acc.max_dev {
                                acc.max_dev = d;
                                acc.worst_case = Some((id, w[..=t].to_vec()));
                            }
                        }
                    }
                }
            }
            acc
        })
        .reduce(Deviation::zero, Deviation::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_switches_to_sampling_above_cap() {
        assert!(matches!(WordPlan::new(3, 4, SAMPLE_CAP, 0), WordPlan::Exhaustive { .. }));
        assert_eq!(count_words(3, 4), 121);
        match WordPlan::new(10, 5, 100, 0) {
            WordPlan::Sampled { words } => {
                assert_eq!(words.len(), 100);
                assert!(words.iter().all(|w| w.len() == 5 && w.iter().all(|&k| k < 10)));
            }
            _ => panic!("expected sampling"),
        }
    }

    #[test]
    fn identical_systems_have_zero_deviation() {
        let mut rng = crate::random::seeded_rng(1);
        let ce = crate::model::random_ce(2, 2, 1, 1, &mut rng);
        let rho = crate::random::random_density(2, &mut rng).into_matrix();
        let d = compare_systems(&ce, &ce, &[(rho.clone(), rho)], &WordPlan::Exhaustive { max_len: 3 });
        assert_eq!(d.max_dev, 0.0);
        assert_eq!(d.nodes, 15);
    }
}
