//! Superoperators: Kraus and matrix forms, the dual map, composition and the
//! CP/TP/unital checks.
//!
//!     cargo run --example channel_basics

use cereduce::linalg::c;
use cereduce::operator::{Operator, Pauli};
use cereduce::superop::{compose, Superoperator};

fn main() -> cereduce::Result<()> {
    let gamma: f64 = 0.3;
    let k0 = Operator::from_rows(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)])?;
    let k1 = Operator::from_rows(2, &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)])?;
    let damping = Superoperator::from_kraus_ops(&[k0, k1])?;

    let excited = Operator::ket_bra(2, 1, 1);
    let out = damping.apply(&excited)?;
    println!("amplitude damping of |1><1|: populations {:.3} {:.3}", out.matrix()[(0, 0)].re, out.matrix()[(1, 1)].re);

    let rep = damping.channel_checks(1e-12);
    println!("damping: CP {} TP {} unital {} (min Choi eig {:.2e}, unital residual {:.3})",
        rep.cp, rep.tp, rep.unital, rep.min_choi_eig, rep.unital_residual);

    // the dual map acts on observables; tr(O M(rho)) = tr(M^dagger(O) rho)
    let z = Operator::pauli(Pauli::Z);
    let lhs = (z.matrix() * out.matrix()).trace();
    let rhs = (damping.apply_dual(&z)?.matrix() * excited.matrix()).trace();
    println!("<Z> after damping: {:.6} = {:.6}", lhs.re, rhs.re);

    let flip = Superoperator::unitary(&Operator::pauli(Pauli::X));
    let both = compose(&damping, &flip)?;
    let rep = both.channel_checks(1e-12);
    println!("damping after bit flip: CP {} TP {}, {} Kraus operators",
        rep.cp, rep.tp, both.kraus().map_or(0, |k| k.len()));

    // a positive but not completely positive map: transpose
    let transpose = Superoperator::from_fn(2, 2, |x| x.transpose())?;
    println!("transpose: min Choi eigenvalue {:.2}", transpose.min_choi_eigenvalue());
    Ok(())
}
