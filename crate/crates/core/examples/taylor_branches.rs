//! Analytic branches through a critical point of `U`.
//!
//! Run with `cargo run --example taylor_branches`.

use planar_perspective::taylor::{branches_at, second_derivative_roots, CriticalIC};
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse("pi^2/16 - pi^2/128*theta^2", Interval::new(0.0, 2.0)?)?;
    let ic = CriticalIC::new(&u, 0.0, 16)?;
    let (b1, b2) = second_derivative_roots(ic.rho0, ic.u_jet.coeffs[2])?;
    println!("rho0 = {:.12}, candidate rho'' = {b1:.12}, {b2:.12}", ic.rho0);

    for b in branches_at(&ic, 16)? {
        println!("beta = {:+.6}  status {:?}  radius {:?}", b.beta(), b.status, b.radius);
        let worst = b.recursion_residuals().into_iter().fold(0.0, f64::max);
        println!("  first derivatives {:?}", &b.derivs[..6]);
        println!("  recursion residual {worst:.1e}");
    }
    Ok(())
}
