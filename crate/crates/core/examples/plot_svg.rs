//! Writes an SVG with `sqrt(U)`, the maximal solution and one regular
//! solution for the unit modulus.
//!
//! Run with `cargo run --example plot_svg > unit.svg`.

use std::f64::consts::FRAC_PI_2;

use planar_perspective::assembler::{maximal_solution, AssemblyOptions};
use planar_perspective::cli::svg::{Plot, Style};
use planar_perspective::ivp::{solve_regular, BranchSign, Direction, RegularIC};
use planar_perspective::param::polar_to_cartesian;
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse("1", Interval::new(0.0, FRAC_PI_2)?)?;
    let opts = AssemblyOptions::default();
    let xy = |t: f64, r: f64| polar_to_cartesian(t, r).map(|p| (p.x, p.y));

    let mut plot = Plot::new();
    let maximal = maximal_solution(&u, &opts)?;
    let pts = maximal.nodes().iter().map(|n| xy(n.theta, n.rho)).collect::<Result<_, _>>()?;
    plot.path("maximal", Style::Maximal, pts);

    let sol = solve_regular(&u, RegularIC::new(0.8, 0.8f64.cos()), BranchSign::Minus, Direction::Forward, &opts.ivp)?;
    let pts = sol.nodes.iter().map(|n| xy(n.theta, n.rho)).collect::<Result<_, _>>()?;
    plot.path("cos", Style::Solution, pts);
    let (x, y) = xy(0.8, 0.8f64.cos())?;
    plot.marker(x, y);

    print!("{}", plot.render());
    Ok(())
}
