//! The observable subspace and the linear reduced model built on it.
//!
//!     cargo run --release --example observability

use cereduce::observability::{check_invariance, linear_reduce, nonobservable_complement};
use cereduce::operator::{pauli_string, Pauli};
use cereduce::reduction::{linear_equivalence_check, reduce_ce};
use cereduce::zoo::ising_chain;

fn main() -> cereduce::Result<()> {
    let tol = 1e-9;
    let ce = ising_chain(4, 0.0, 0.3)?;
    let nperp = nonobservable_complement(&ce, tol)?;
    println!("operator space {}, observable subspace {}", ce.dim() * ce.dim(), nperp.dim());

    // closed under every dual instrument map
    let worst = ce
        .instrument()
        .maps()
        .iter()
        .map(|m| check_invariance(&nperp, m, true))
        .collect::<cereduce::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("dual invariance residual {worst:.2e}");

    let y1x2 = pauli_string(4, &[(1, Pauli::Y), (2, Pauli::X)]);
    let z1z4 = pauli_string(4, &[(1, Pauli::Z), (4, Pauli::Z)]);
    println!("Y1 X2 residual {:.1e}, Z1 Z4 residual {:.1e}", nperp.residual(&y1x2)?, nperp.residual(&z1z4)?);
    println!("X4 residual {:.3}", nperp.residual(&pauli_string(4, &[(4, Pauli::X)]))?);

    let lin = linear_reduce(&ce, &nperp)?;
    let rep = linear_equivalence_check(&ce, &lin, 3, 10, 1e-8, 0)?;
    println!("linear model: q = {}, equivalence max deviation {:.2e} ({})", lin.q(), rep.max_dev, rep.words);

    let red = reduce_ce(&ce, tol, 0)?;
    println!("CPTP reduced model: dim {} (> q, the price of positivity)", red.reduced_dim());
    Ok(())
}
