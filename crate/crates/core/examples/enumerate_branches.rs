//! All solutions through one initial condition, switching branch at most
//! once at each critical point passed.
//!
//! Run with `cargo run --example enumerate_branches`.

use std::f64::consts::FRAC_PI_2;

use planar_perspective::assembler::{enumerate_branches, QueryIC, SolutionSetQuery};
use planar_perspective::{Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    let u = ModulusModel::parse("1", Interval::new(0.0, FRAC_PI_2)?)?;
    let q = SolutionSetQuery::new(u.clone(), Some(QueryIC::Regular { theta0: 0.6, rho0: 0.6f64.cos() }));
    for s in enumerate_branches(&q, 1)? {
        let (lo, hi) = s.theta_range();
        println!(
            "{:<8} [{lo:.3}, {hi:.3}]  extendable {}  residual {:.1e}",
            s.signature(),
            s.is_extendable(),
            s.residual(&u)
        );
    }
    Ok(())
}
