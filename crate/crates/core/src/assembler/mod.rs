//! Global solutions: branch trees across critical points, the maximal-depth
//! solution, and convergence cones.

mod bvp;
mod cone;
mod enumerate;

pub use bvp::{maximal_solution, solve_bvp_between_criticals};
pub use cone::{build_cone, sample_cone_solution, ConeSide, ConvergenceCone};
pub use enumerate::{enumerate_branches, QueryIC, SolutionSetQuery};

use serde::{Deserialize, Serialize};

use crate::ivp::{hermite, Direction, IvpOptions, Node, SolutionPiece, Termination};
use crate::modulus::ModulusModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub ivp: IvpOptions,
    pub max_switches: usize,
    /// Seeds used when no initial condition is given.
    pub fan_size: usize,
    pub seed: u64,
    pub tol_bvp: f64,
    pub tol_c1: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            ivp: IvpOptions::default(),
            max_switches: 2,
            fan_size: 6,
            seed: 0,
            tol_bvp: 1e-8,
            tol_c1: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionKind {
    Start,
    End,
    /// Consecutive pieces keep the branch sign through a critical point.
    CriticalPass,
    /// The branch sign changes at a critical point.
    BranchSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub theta: f64,
    pub kind: JunctionKind,
    pub delta_rho: f64,
    pub delta_drho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSolution {
    /// Pieces ordered by `theta`, each abutting the next.
    pub pieces: Vec<SolutionPiece>,
    pub junctions: Vec<Junction>,
    pub c1: bool,
}

impl PiecewiseSolution {
    pub fn new(mut pieces: Vec<SolutionPiece>, tol: f64) -> Self {
        pieces.retain(|p| !p.nodes.is_empty());
        pieces.sort_by(|a, b| a.nodes[0].theta.total_cmp(&b.nodes[0].theta));
        let mut sol = PiecewiseSolution {
            pieces,
            junctions: Vec::new(),
            c1: true,
        };
        let report = c1_check(&sol, tol);
        sol.junctions = report.junctions;
        sol.c1 = report.c1;
        sol
    }

    pub fn single(piece: SolutionPiece) -> Self {
        Self::new(vec![piece], f64::INFINITY)
    }

    /// All nodes in increasing `theta`, junction duplicates removed.
    pub fn nodes(&self) -> Vec<Node> {
        let mut out: Vec<Node> = Vec::new();
        for p in &self.pieces {
            for n in &p.nodes {
                match out.last() {
                    Some(last) if n.theta <= last.theta => {}
                    _ => out.push(*n),
                }
            }
        }
        out
    }

    pub fn theta_range(&self) -> (f64, f64) {
        let first = self.pieces.first().map(|p| p.nodes[0].theta).unwrap_or(f64::NAN);
        let last = self
            .pieces
            .last()
            .map(|p| p.nodes.last().unwrap().theta)
            .unwrap_or(f64::NAN);
        (first, last)
    }

    /// How the solution ends on the left and on the right.
    pub fn ends(&self) -> Option<(Termination, Termination)> {
        let first = self.pieces.first()?;
        let last = self.pieces.last()?;
        let left = match first.direction {
            Direction::Backward => first.end.clone(),
            Direction::Forward => first.start.clone(),
        };
        let right = match last.direction {
            Direction::Forward => last.end.clone(),
            Direction::Backward => last.start.clone(),
        };
        Some((left, right))
    }

    /// False when either end is a contact with the maximal curve, past
    /// which no solution continues.
    pub fn is_extendable(&self) -> bool {
        self.ends().is_some_and(|(l, r)| {
            !matches!(l, Termination::Contact { .. }) && !matches!(r, Termination::Contact { .. })
        })
    }

    /// `(rho, rho')` by Hermite interpolation within the covering piece.
    pub fn eval(&self, theta: f64) -> Option<(f64, f64)> {
        self.pieces.iter().find_map(|p| hermite(&p.nodes, theta))
    }

    pub fn residual(&self, u: &ModulusModel) -> f64 {
        self.pieces
            .iter()
            .map(|p| crate::ivp::residual(p, u))
            .fold(0.0, f64::max)
    }

    /// Short description of the branch-sign sequence, e.g. `+|-`.
    pub fn signature(&self) -> String {
        self.pieces
            .iter()
            .map(|p| if p.dense_contact { "c".to_string() } else { p.sign.to_string() })
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Report {
    pub junctions: Vec<Junction>,
    pub max_delta_rho: f64,
    pub max_delta_drho: f64,
    pub c1: bool,
}

/// Per-junction jumps in `rho` and `rho'`.
pub fn c1_check(sol: &PiecewiseSolution, tol: f64) -> C1Report {
    let mut junctions = Vec::new();
    let (mut mr, mut md) = (0.0f64, 0.0f64);
    let mut c1 = true;
    if let Some(first) = sol.pieces.first() {
        junctions.push(Junction {
            theta: first.nodes[0].theta,
            kind: JunctionKind::Start,
            delta_rho: 0.0,
            delta_drho: 0.0,
        });
    }
    for w in sol.pieces.windows(2) {
        let a = *w[0].nodes.last().unwrap();
        let b = w[1].nodes[0];
        let dr = (a.rho - b.rho).abs();
        let dd = (a.drho - b.drho).abs();
        let gap = (a.theta - b.theta).abs();
        let kind = if w[0].sign == w[1].sign && w[0].dense_contact == w[1].dense_contact {
            JunctionKind::CriticalPass
        } else {
            JunctionKind::BranchSwitch
        };
        mr = mr.max(dr);
        md = md.max(dd);
        if !(dr < tol && dd < tol && gap <= 1e-9 * (1.0 + a.theta.abs())) {
            c1 = false;
        }
        junctions.push(Junction {
            theta: b.theta,
            kind,
            delta_rho: dr,
            delta_drho: dd,
        });
    }
    if let Some(last) = sol.pieces.last() {
        junctions.push(Junction {
            theta: last.nodes.last().unwrap().theta,
            kind: JunctionKind::End,
            delta_rho: 0.0,
            delta_drho: 0.0,
        });
    }
    C1Report {
        junctions,
        max_delta_rho: mr,
        max_delta_drho: md,
        c1,
    }
}

/// Joins a backward and a forward piece launched from the same regular
/// initial condition into one piece.
pub fn merge_seed(back: &SolutionPiece, fwd: &SolutionPiece) -> SolutionPiece {
    let mut nodes = back.nodes.clone();
    nodes.extend(fwd.nodes.iter().skip(1).copied());
    SolutionPiece {
        sign: fwd.sign,
        direction: fwd.direction,
        nodes,
        start: back.end.clone(),
        end: fwd.end.clone(),
        dense_contact: false,
    }
}

pub(crate) fn contact_theta(p: &SolutionPiece) -> Option<f64> {
    match p.end {
        Termination::Contact { theta } => Some(theta),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivp::BranchSign;

    fn piece(nodes: Vec<Node>, sign: BranchSign) -> SolutionPiece {
        SolutionPiece {
            sign,
            direction: Direction::Forward,
            nodes,
            start: Termination::Seed,
            end: Termination::DomainEnd,
            dense_contact: false,
        }
    }

    #[test]
    fn single_piece_is_c1() {
        let s = PiecewiseSolution::single(piece(vec![Node::new(0.0, 1.0, 0.0), Node::new(1.0, 1.0, 0.0)], BranchSign::Plus));
        assert!(c1_check(&s, 1e-8).c1);
    }

    #[test]
    fn mismatched_junction_is_flagged() {
        let a = piece(vec![Node::new(0.0, 1.0, 0.0), Node::new(1.0, 1.0, 0.0)], BranchSign::Plus);
        let b = piece(vec![Node::new(1.0, 1.1, 0.0), Node::new(2.0, 1.0, -0.1)], BranchSign::Minus);
        let s = PiecewiseSolution::new(vec![b, a], 1e-8);
        assert!(!s.c1);
        let r = c1_check(&s, 1e-8);
        assert_eq!(r.junctions[1].kind, JunctionKind::BranchSwitch);
        assert!((r.junctions[1].delta_rho - 0.1).abs() < 1e-12);
        assert_eq!(s.nodes().len(), 3);
    }
}
