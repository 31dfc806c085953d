//! The maximal-depth solution for a modulus with three extrema.
//!
//! `U` is built from `rho = 2 + 0.1 cos 4 theta`, which touches `sqrt(U)`
//! at every critical point; the solver should give it back.
//!
//! Run with `cargo run --example maximal_solution`.

use planar_perspective::assembler::{maximal_solution, AssemblyOptions};
use planar_perspective::maximal::find_critical_points;
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse(
        "4.16 + 0.4*cos(4*theta) - 0.15*cos(4*theta)^2",
        Interval::new(0.4, 2.75)?,
    )?;
    for c in find_critical_points(&u, 1e-12)?.points {
        println!("critical point theta = {:.6}  depth = {:.6}  {:?}", c.theta, c.depth, c.kind);
    }

    let sol = maximal_solution(&u, &AssemblyOptions::default())?;
    println!("signature {}  C1 {}", sol.signature(), sol.c1);
    let err = sol
        .nodes()
        .iter()
        .map(|n| (n.rho - (2.0 + 0.1 * (4.0 * n.theta).cos())).abs())
        .fold(0.0, f64::max);
    println!("max error against the generating curve {err:.2e}");
    println!("residual {:.2e}", sol.residual(&u));
    Ok(())
}
