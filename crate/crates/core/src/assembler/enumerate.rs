use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{contact_theta, merge_seed, AssemblyOptions, PiecewiseSolution};
use crate::error::{Error, Result};
use crate::ivp::{
    self, continuations_at, local_branches, launch_branch, BranchSign, Direction, RegularIC,
    SolutionPiece,
};
use crate::maximal::find_critical_points;
use crate::modulus::ModulusModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryIC {
    Regular { theta0: f64, rho0: f64 },
    /// A critical point of `U`; the depth is `sqrt(U(theta0))`.
    Critical { theta0: f64 },
}

#[derive(Debug, Clone)]
pub struct SolutionSetQuery {
    pub u: ModulusModel,
    pub ic: Option<QueryIC>,
    pub options: AssemblyOptions,
}

impl SolutionSetQuery {
    pub fn new(u: ModulusModel, ic: Option<QueryIC>) -> Self {
        SolutionSetQuery {
            u,
            ic,
            options: AssemblyOptions::default(),
        }
    }
}

const MAX_CHAIN: usize = 32;

struct Tree<'a> {
    u: &'a ModulusModel,
    opts: &'a AssemblyOptions,
    hints: Vec<f64>,
}

impl Tree<'_> {
    fn is_critical(&self, theta: f64) -> bool {
        let Ok((du, _)) = self.u.slope_and_curvature(theta) else { return false };
        let uv = self.u.eval(theta).unwrap_or(0.0);
        du.abs() <= 1e-6 * (1.0 + uv)
    }

    /// All chains starting with `first`, continued through critical
    /// contacts with at most `switches` sign changes.
    fn chains(&self, first: SolutionPiece, switches: usize, depth: usize) -> Vec<Vec<SolutionPiece>> {
        let Some(tc) = contact_theta(&first) else {
            return vec![vec![first]];
        };
        if depth >= MAX_CHAIN || !self.is_critical(tc) {
            return vec![vec![first]];
        }
        let conts = continuations_at(self.u, tc, first.direction, &self.opts.ivp, &self.hints)
            .unwrap_or_default();
        let mut out = Vec::new();
        for c in conts {
            let span = (c.end_node().theta - c.launch_node().theta).abs();
            if span <= 1e-12 {
                continue;
            }
            let switch = c.sign != first.sign || c.dense_contact != first.dense_contact;
            if switch && switches == 0 {
                continue;
            }
            let left = if switch { switches - 1 } else { switches };
            for mut tail in self.chains(c, left, depth + 1) {
                tail.insert(0, first.clone());
                out.push(tail);
            }
        }
        if out.is_empty() {
            out.push(vec![first]);
        }
        out
    }

    fn combine(
        &self,
        back: &[Vec<SolutionPiece>],
        fwd: &[Vec<SolutionPiece>],
        seed_merge: bool,
    ) -> Vec<PiecewiseSolution> {
        let mut out = Vec::new();
        for b in back {
            for f in fwd {
                let mut pieces: Vec<SolutionPiece> = b.iter().skip(1).rev().cloned().collect();
                if seed_merge {
                    pieces.push(merge_seed(&b[0], &f[0]));
                } else {
                    pieces.push(b[0].clone());
                    pieces.push(f[0].clone());
                }
                pieces.extend(f.iter().skip(1).cloned());
                pieces.retain(|p| p.nodes.len() > 1);
                out.push(PiecewiseSolution::new(pieces, self.opts.tol_c1));
            }
        }
        out
    }

    fn from_regular(&self, ic: RegularIC) -> Result<Vec<PiecewiseSolution>> {
        let mut out = Vec::new();
        for sign in [BranchSign::Plus, BranchSign::Minus] {
            let mut halves = Vec::new();
            for dir in [Direction::Backward, Direction::Forward] {
                let p = ivp::solve_regular_near(self.u, ic, sign, dir, &self.opts.ivp, &self.hints)?;
                halves.push(self.chains(p, self.opts.max_switches, 0));
            }
            out.extend(self.combine(&halves[0], &halves[1], true));
        }
        Ok(out)
    }

    fn from_critical(&self, theta0: f64) -> Result<Vec<PiecewiseSolution>> {
        let branches = local_branches(self.u, theta0, &self.opts.ivp)?;
        let mut halves = Vec::new();
        for dir in [Direction::Backward, Direction::Forward] {
            let mut chains = Vec::new();
            for b in &branches {
                if let Ok(p) = launch_branch(self.u, b, dir, &self.opts.ivp, &self.hints) {
                    chains.extend(self.chains(p, self.opts.max_switches, 0));
                }
            }
            if chains.is_empty() {
                // The point sits on the domain end on this side.
                let node = crate::ivp::Node::new(theta0, self.u.eval(theta0)?.sqrt(), 0.0);
                chains.push(vec![SolutionPiece {
                    sign: BranchSign::Plus,
                    direction: dir,
                    nodes: vec![node],
                    start: crate::ivp::Termination::CriticalLaunch { theta: theta0 },
                    end: crate::ivp::Termination::DomainEnd,
                    dense_contact: false,
                }]);
            }
            halves.push(chains);
        }
        Ok(self.combine(&halves[0], &halves[1], false))
    }
}

/// Generators of the solution set. From a regular initial condition: both
/// signs in both directions, continued through every admissible critical
/// contact with at most `max_switches` sign changes. Without an initial
/// condition the result is an illustrative fan from seeded random initial
/// conditions; the full solution set can be dense.
pub fn enumerate_branches(q: &SolutionSetQuery, max_switches: usize) -> Result<Vec<PiecewiseSolution>> {
    let mut opts = q.options.clone();
    opts.max_switches = max_switches;
    let crit = find_critical_points(&q.u, 1e-13)?;
    let tree = Tree {
        u: &q.u,
        opts: &opts,
        hints: crit.hint_thetas(),
    };
    match q.ic {
        Some(QueryIC::Regular { theta0, rho0 }) => {
            let uv = q.u.eval(theta0)?;
            if rho0 * rho0 > uv * (1.0 + 1e-12) {
                return Err(Error::Input(format!(
                    "initial depth {rho0} exceeds the maximal depth {}",
                    uv.sqrt()
                )));
            }
            if uv - rho0 * rho0 <= opts.ivp.tol_reg * (1.0 + uv) {
                return tree.from_critical(theta0);
            }
            tree.from_regular(RegularIC::new(theta0, rho0))
        }
        Some(QueryIC::Critical { theta0 }) => tree.from_critical(theta0),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let dom = q.u.domain();
            let mut out = Vec::new();
            for _ in 0..opts.fan_size {
                let theta0 = rng.gen_range(dom.lo..=dom.hi);
                let frac: f64 = rng.gen_range(0.2..0.95);
                let rho0 = frac * q.u.eval(theta0)?.sqrt();
                if let Ok(sols) = tree.from_regular(RegularIC::new(theta0, rho0)) {
                    out.extend(sols);
                }
            }
            Ok(out)
        }
    }
}
