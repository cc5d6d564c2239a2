//! Projectively measured quantum walk: the conditional model reduces to a
//! classical Markov chain although no unconditional reduction exists.
//!
//!     cargo run --release --example walk_reduction -- 4 7

use cereduce::operator::DEFAULT_TOL;
use cereduce::reduction::{equivalence_check, reduce_ce};
use cereduce::zoo::{build, walk_markov_oracle, walk_orbit_dimension, walk_reduced_chain, WalkUnitary, ZooSpec};

fn main() -> cereduce::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(4, |s| s.parse().expect("n"));
    let seed: u64 = args.get(1).map_or(7, |s| s.parse().expect("seed"));

    let model = build(&ZooSpec::Walk { n, unitary: WalkUnitary::Haar { seed } })?;
    for w in &model.warnings {
        println!("warning: {w}");
    }
    let red = reduce_ce(&model.ce, 1e-9, 0)?;
    println!("reduced dim {} / original {}", red.reduced_dim(), n * n);
    println!("blocks {:?}", red.provenance.blocks.iter().map(|b| (b.d_s, b.d_f)).collect::<Vec<_>>());

    let rep = equivalence_check(&model.ce, &red, 4, 25, 1e-8, 1)?;
    println!("equivalence: max deviation {:.2e}, pass {}", rep.max_dev, rep.pass);

    let u = model.ce.split().expect("walk has a split").evolution.kraus().expect("unitary")[0].clone();
    let u = cereduce::Operator::new(u)?;
    let chain = walk_reduced_chain(&red)?;
    let oracle = walk_markov_oracle(&u);
    println!("max |P_reduced - P_oracle| = {:.2e}", (&chain - &oracle).abs().max());

    let orbit = walk_orbit_dimension(&u, true, DEFAULT_TOL)?;
    println!("unconditional: orbit of the site projectors spans {orbit} of {} dimensions", n * n);
    Ok(())
}
