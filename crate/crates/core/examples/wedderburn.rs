//! Closure of a random operator set into a *-algebra, its block structure,
//! and the conditional expectation onto it.
//!
//!     cargo run --release --example wedderburn

use cereduce::algebra::{
    algebra_closure, commutant, conditional_expectation, random_generators, random_structured_algebra, wedderburn,
    Block,
};
use cereduce::operator::orthonormalize;
use cereduce::random::seeded_rng;

fn main() -> cereduce::Result<()> {
    let tol = 1e-9;
    let mut rng = seeded_rng(5);
    let blocks = [Block { d_s: 2, d_f: 2 }, Block { d_s: 1, d_f: 3 }];
    // a hidden algebra (M_2 (x) 1_2) + (C (x) 1_3) inside M_7, in a random basis
    let (span, _) = random_structured_algebra(&blocks, &mut rng);
    let gens = random_generators(&span, 2, &mut rng);
    let start = orthonormalize(&gens, tol)?;
    let alg = algebra_closure(&start, tol)?;
    println!("2 random elements generate an algebra of dimension {} in M_{}", alg.dim(), alg.ambient_dim());
    println!("product residual {:.1e}, unital {}", alg.product_residual(), alg.is_unital());

    let comm = commutant(&alg, tol);
    let back = commutant(&comm, tol);
    println!("commutant dim {}, double commutant distance {:.1e}", comm.dim(), back.span_distance(&alg)?);

    for seed in 0..3 {
        let dec = wedderburn(&alg, tol, seed)?;
        println!("seed {seed}: blocks {:?}, structure residual {:.1e}",
            dec.block_multiset(), dec.structure_residual(alg.basis()));
    }

    let dec = wedderburn(&alg, tol, 0)?;
    let f = conditional_expectation(&dec)?;
    let rep = f.check(&alg, tol);
    println!("E = J R: reduced dim {}, worst residual {:.1e}, E CPTP {}",
        f.reduced_dim(), rep.max_residual(), rep.e.cp && rep.e.tp);
    Ok(())
}
