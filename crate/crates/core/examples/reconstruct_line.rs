//! Reconstructs the line `x = 5` from its velocity modulus `25 / cos^4`.
//!
//! Run with `cargo run --example reconstruct_line`.

use planar_perspective::ivp::{solve_regular, BranchSign, Direction, IvpOptions, RegularIC};
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse("25/cos(theta)^4", Interval::new(-1.0, 1.0)?)?;
    let ic = RegularIC::new(0.3, 5.0 / 0.3f64.cos());
    let opts = IvpOptions::default();

    // Back toward the foot of the perpendicular, then on to the far end.
    let back = solve_regular(&u, ic, BranchSign::Plus, Direction::Backward, &opts)?;
    let fwd = solve_regular(&u, ic, BranchSign::Plus, Direction::Forward, &opts)?;
    println!("backward: {} nodes, {:?}", back.nodes.len(), back.end);
    println!("forward:  {} nodes, {:?}", fwd.nodes.len(), fwd.end);

    let err = back
        .nodes
        .iter()
        .chain(&fwd.nodes)
        .map(|n| (n.rho - 5.0 / n.theta.cos()).abs())
        .fold(0.0, f64::max);
    println!("max |rho - 5/cos| = {err:.2e}");
    Ok(())
}
