//! Sampling measurement records and comparing the empirical distribution with
//! exact enumeration.
//!
//!     cargo run --release --example trajectories

use cereduce::operator::Operator;
use cereduce::trajectories::{
    empirical_distribution, enumerate_distribution, sample_trajectories, total_variation, ENUMERATION_CAP,
};
use cereduce::zoo::ising_chain;

fn main() -> cereduce::Result<()> {
    let ce = ising_chain(4, 0.5, 0.3)?;
    let n = ce.dim();
    let rho0 = Operator::ket_bra(n, 0, 0);
    let steps = 4;

    let exact = enumerate_distribution(&ce, &rho0, steps, ENUMERATION_CAP)?;
    println!("{} sequences of length {steps}, total probability {:.12}", exact.len(), exact.total_probability());

    let records = sample_trajectories(&ce, &rho0, steps, 20_000, 11)?;
    let first = &records[0];
    println!("first record: outcomes {:?}, joint probability {:.4}", first.outcomes, first.joint_probability());

    let empirical = empirical_distribution(ce.outcomes(), steps, &records)?;
    println!("TV(empirical, exact) = {:.4} with {} samples", total_variation(&empirical, &exact)?, records.len());

    let mut top: Vec<_> = exact.entries.iter().collect();
    top.sort_by(|a, b| b.p.total_cmp(&a.p));
    for e in top.iter().take(4) {
        println!("  {:?}  p = {:.4}", e.seq, e.p);
    }
    Ok(())
}
