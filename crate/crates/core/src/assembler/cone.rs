use serde::{Deserialize, Serialize};

use super::{merge_seed, AssemblyOptions, PiecewiseSolution};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::ivp::{
    self, constant_piece, launch_branch, local_branches, BranchSign, Direction,
    RegularIC, SolutionPiece, Termination,
};
use crate::maximal::find_critical_points;
use crate::modulus::ModulusModel;
use crate::taylor::second_derivative_roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSide {
    /// The cone opens toward increasing `theta`.
    Forward,
    Backward,
}

impl ConeSide {
    pub fn direction(self) -> Direction {
        match self {
            ConeSide::Forward => Direction::Forward,
            ConeSide::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCone {
    pub apex_theta: f64,
    pub apex_depth: f64,
    /// Second-derivative roots at the apex, ascending.
    pub betas: (f64, f64),
    pub side: ConeSide,
    pub upper: PiecewiseSolution,
    pub lower: PiecewiseSolution,
    /// Range on which both bounds are defined.
    pub domain: Interval,
}

impl ConvergenceCone {
    /// Branch sign of the regular solutions inside the cone.
    pub fn inner_sign(&self) -> BranchSign {
        match self.side {
            ConeSide::Forward => BranchSign::Minus,
            ConeSide::Backward => BranchSign::Plus,
        }
    }

    pub fn bounds(&self, theta: f64) -> Option<(f64, f64)> {
        let (lo, _) = self.lower.eval(theta)?;
        let (hi, _) = self.upper.eval(theta)?;
        Some((lo, hi))
    }

    /// Strict interior test with relative margin `tol`.
    pub fn contains(&self, theta: f64, rho: f64, tol: f64) -> bool {
        if (theta - self.apex_theta).abs() <= 1e-12 || !self.domain.contains(theta) {
            return false;
        }
        match self.bounds(theta) {
            Some((lo, hi)) => rho > lo + tol * (1.0 + lo) && rho < hi - tol * (1.0 + hi),
            None => false,
        }
    }
}

/// The two analytic solutions leaving a maximum-type critical point and the
/// region between them.
pub fn build_cone(u: &ModulusModel, apex_theta: f64, opts: &AssemblyOptions) -> Result<ConvergenceCone> {
    let jet = u.jet(apex_theta, 2)?;
    let ic = crate::taylor::CriticalIC::from_jet(jet)?;
    let (b1, b2) = second_derivative_roots(ic.rho0, ic.u_jet.coeffs[2])?;
    if b2 > 1e-9 * (1.0 + ic.rho0) {
        return Err(Error::NotConeApex {
            theta: apex_theta,
            beta1: b1,
            beta2: b2,
        });
    }
    let dom = u.domain();
    let side = if dom.hi - apex_theta <= 1e-12 * (1.0 + dom.hi.abs()) {
        ConeSide::Backward
    } else {
        ConeSide::Forward
    };
    let hints = find_critical_points(u, 1e-13)?.hint_thetas();
    let mut bounds = Vec::new();
    for b in local_branches(u, apex_theta, &opts.ivp)? {
        bounds.push(launch_branch(u, &b, side.direction(), &opts.ivp, &hints)?);
    }
    if bounds.len() != 2 {
        return Err(Error::NoContinuation {
            theta: apex_theta,
            reason: format!("expected two analytic branches, found {}", bounds.len()),
        });
    }
    let (a0, a1) = bounds[0].theta_range();
    let (c0, c1) = bounds[1].theta_range();
    let domain = Interval::new(a0.max(c0), a1.min(c1))?;
    let mut score = 0.0;
    for t in domain.grid(32) {
        if let (Some((ra, _)), Some((rc, _))) = (bounds[0].eval(t), bounds[1].eval(t)) {
            score += ra - rc;
        }
    }
    let (upper, lower) = if score >= 0.0 {
        (bounds.remove(0), bounds.remove(0))
    } else {
        let l = bounds.remove(0);
        (bounds.remove(0), l)
    };
    Ok(ConvergenceCone {
        apex_theta,
        apex_depth: ic.rho0,
        betas: (b1, b2),
        side,
        upper: PiecewiseSolution::single(upper),
        lower: PiecewiseSolution::single(lower),
        domain,
    })
}

/// A solution seeded strictly inside the cone: integrated toward the apex
/// (through any contact on a locally constant stretch of `U`) and away
/// from it.
pub fn sample_cone_solution(
    cone: &ConvergenceCone,
    u: &ModulusModel,
    ic: RegularIC,
    opts: &AssemblyOptions,
) -> Result<PiecewiseSolution> {
    if !cone.contains(ic.theta0, ic.rho0, 1e-9) {
        return Err(Error::OutsideCone {
            theta: ic.theta0,
            rho: ic.rho0,
        });
    }
    let hints = find_critical_points(u, 1e-13)?.hint_thetas();
    let sign = cone.inner_sign();
    let inward = cone.side.direction().reverse();
    let back = ivp::solve_regular_near(u, ic, sign, inward, &opts.ivp, &hints)?;
    let fwd = ivp::solve_regular_near(u, ic, sign, inward.reverse(), &opts.ivp, &hints)?;
    let mut pieces: Vec<SolutionPiece> = Vec::new();
    let mut last = back.clone();
    for _ in 0..64 {
        let Termination::Contact { theta } = last.end else { break };
        if (theta - cone.apex_theta).abs() <= 1e-9 {
            break;
        }
        let depth = u.eval(theta)?.sqrt();
        let next = constant_piece(u, theta, depth, inward, &opts.ivp)?;
        if next.nodes.len() < 2 {
            return Err(Error::NoContinuation {
                theta,
                reason: "contact inside the cone away from a constant stretch of U".into(),
            });
        }
        pieces.push(next.clone());
        last = next;
    }
    let mut seed = if inward == Direction::Backward {
        merge_seed(&back, &fwd)
    } else {
        merge_seed(&fwd, &back)
    };
    seed.sign = sign;
    pieces.push(seed);
    Ok(PiecewiseSolution::new(pieces, opts.tol_c1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model(src: &str, lo: f64, hi: f64) -> ModulusModel {
        ModulusModel::parse(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn unit_modulus_cone() {
        let u = model("1", 0.0, PI / 2.0);
        let opts = AssemblyOptions::default();
        let cone = build_cone(&u, 0.0, &opts).unwrap();
        for n in cone.upper.nodes() {
            assert!((n.rho - 1.0).abs() < 1e-14);
        }
        for n in cone.lower.nodes() {
            assert!((n.rho - n.theta.cos()).abs() < 1e-8);
        }
        let s = sample_cone_solution(&cone, &u, RegularIC::new(0.8, 0.5f64.cos()), &opts).unwrap();
        let shifted = |t: f64| if t <= 0.3 { 1.0 } else { (t - 0.3).cos() };
        let (lo, hi) = s.theta_range();
        assert!(lo.abs() < 1e-12 && (hi - PI / 2.0).abs() < 1e-12);
        for n in s.nodes() {
            assert!((n.rho - shifted(n.theta)).abs() < 1e-7, "{} {}", n.theta, n.rho);
        }
        assert!(s.c1);
    }

    #[test]
    fn lower_bound_is_not_interior() {
        let u = model("1", 0.0, PI / 2.0);
        let opts = AssemblyOptions::default();
        let cone = build_cone(&u, 0.0, &opts).unwrap();
        let (lo, _) = cone.bounds(0.7).unwrap();
        let e = sample_cone_solution(&cone, &u, RegularIC::new(0.7, lo), &opts);
        assert!(matches!(e, Err(Error::OutsideCone { .. })));
    }

    #[test]
    fn parabola_cone_squeezes_into_apex() {
        let u = model("pi^2/16 - pi^2/128*theta^2", 0.0, 2.0);
        let opts = AssemblyOptions::default();
        let cone = build_cone(&u, 0.0, &opts).unwrap();
        assert!((cone.betas.1 + 0.1150).abs() < 1e-4);
        assert!((cone.betas.0 + 0.6704).abs() < 1e-4);
        let (lo, hi) = cone.bounds(0.5).unwrap();
        let s = sample_cone_solution(&cone, &u, RegularIC::new(0.5, 0.5 * (lo + hi)), &opts).unwrap();
        let first = s.nodes()[0];
        assert!(first.theta.abs() < 1e-9);
        assert!((first.rho - PI / 4.0).abs() < 1e-6, "{}", first.rho);
    }

    #[test]
    fn line_apex_is_rejected() {
        let u = model("25/cos(theta)^4", -1.0, 1.0);
        let e = build_cone(&u, 0.0, &AssemblyOptions::default());
        assert!(matches!(e, Err(Error::NotConeApex { .. })));
    }
}
