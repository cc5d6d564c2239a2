//! Reduce the measured Ising chain for both measurement regimes and print
//! the dimensions at each pipeline stage.
//!
//!     cargo run --release --example ising_reduction -- 4 0.5

use std::time::Instant;

use cereduce::reduction::{equivalence_check, reduce_ce};
use cereduce::zoo::{build, ZooSpec};

fn main() -> cereduce::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spins: usize = args.first().map_or(4, |s| s.parse().expect("N"));
    let ps: Vec<f64> = match args.get(1) {
        Some(p) => vec![p.parse().expect("p")],
        None => vec![0.0, 0.5],
    };
    for p in ps {
        let start = Instant::now();
        let model = build(&ZooSpec::Ising { spins, p, delta: 0.3 })?;
        let red = reduce_ce(&model.ce, 1e-9, 0)?;
        let pv = &red.provenance;
        println!("N = {spins}, p = {p}");
        println!("  operator space      {}", pv.original_dim);
        println!("  observable subspace {}", pv.nperp_dim);
        println!("  output algebra      {}", pv.algebra_dim);
        let blocks: Vec<_> = pv.blocks.iter().map(|b| (b.d_s, b.d_f)).collect();
        println!("  blocks (d_S, d_F)   {blocks:?}");
        println!("  reduced dim         {}", pv.reduced_dim);
        if let Some(expected) = &model.expected {
            let miss = expected.mismatches(&red);
            println!("  known answer        {}", if miss.is_empty() { "matches".into() } else { miss.join("; ") });
        }
        let rep = equivalence_check(&model.ce, &red, 3, 5, 1e-8, 1)?;
        println!("  max output deviation {:.2e} over {}", rep.max_dev, rep.words);
        println!("  elapsed {:.1?}", start.elapsed());
    }
    Ok(())
}
