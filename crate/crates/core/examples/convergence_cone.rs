//! Solutions squeezed into the apex of a convergence cone.
//!
//! Run with `cargo run --example convergence_cone`.

use planar_perspective::assembler::{build_cone, sample_cone_solution, AssemblyOptions};
use planar_perspective::ivp::RegularIC;
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse("pi^2/16 - pi^2/128*theta^2", Interval::new(0.0, 2.0)?)?;
    let opts = AssemblyOptions::default();
    let cone = build_cone(&u, 0.0, &opts)?;
    println!("apex ({}, {:.12}), betas {:?}", cone.apex_theta, cone.apex_depth, cone.betas);

    let theta = 1.0;
    let (lo, hi) = cone.bounds(theta).expect("theta inside the cone");
    println!("at theta = {theta}: {lo:.6} < rho < {hi:.6}");
    for f in [0.1, 0.5, 0.9] {
        let ic = RegularIC::new(theta, lo + f * (hi - lo));
        let sol = sample_cone_solution(&cone, &u, ic, &opts)?;
        let first = sol.nodes()[0];
        println!("  start {:.6}: reaches theta = {:.1e} at depth {:.12}", ic.rho0, first.theta, first.rho);
    }
    Ok(())
}
