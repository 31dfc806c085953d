use super::{AssemblyOptions, PiecewiseSolution};
use crate::error::{Error, Result};
use crate::ivp::{launch_branch, local_branches, Direction, Node, SolutionPiece, Termination};
use crate::maximal::{find_critical_points, CriticalKind, CriticalPoint};
use crate::modulus::ModulusModel;

/// Snaps a piece that reached `target` onto the exact critical node.
fn close_at(mut piece: SolutionPiece, target: f64, depth: f64, tol: f64) -> Option<SolutionPiece> {
    let end = piece.end_node();
    let dt = (end.theta - target).abs();
    let dr = (end.rho - depth).abs();
    if dt > tol.sqrt() * (1.0 + target.abs()) || dr > tol * (1.0 + depth) {
        return None;
    }
    let exact = Node::new(target, depth, 0.0);
    match piece.direction {
        Direction::Forward => *piece.nodes.last_mut().unwrap() = exact,
        Direction::Backward => piece.nodes[0] = exact,
    }
    piece.end = Termination::Contact { theta: target };
    Some(piece)
}

fn launch_toward(
    u: &ModulusModel,
    from: &CriticalPoint,
    to: &CriticalPoint,
    opts: &AssemblyOptions,
    hints: &[f64],
    rising_first: bool,
) -> Option<SolutionPiece> {
    let dir = if to.theta > from.theta { Direction::Forward } else { Direction::Backward };
    let mut branches = local_branches(u, from.theta, &opts.ivp).ok()?;
    branches.sort_by(|a, b| a.beta().total_cmp(&b.beta()));
    if rising_first {
        branches.reverse();
    }
    branches.iter().find_map(|b| {
        let p = launch_branch(u, b, dir, &opts.ivp, hints).ok()?;
        if p.dense_contact {
            return None;
        }
        close_at(p, to.theta, to.depth, opts.tol_bvp)
    })
}

fn is_min_like(p: &CriticalPoint) -> bool {
    matches!(p.kind, CriticalKind::Minimum | CriticalKind::Inflection)
}

/// The piece joining two consecutive critical points with zero slope at
/// both ends. The rising branch is launched from the minimum-type end;
/// if it misses, every branch from either end is tried.
pub fn solve_bvp_between_criticals(
    u: &ModulusModel,
    left: &CriticalPoint,
    right: &CriticalPoint,
    opts: &AssemblyOptions,
) -> Result<SolutionPiece> {
    if !(left.theta < right.theta) {
        return Err(Error::Input(format!(
            "BVP endpoints out of order: {} >= {}",
            left.theta, right.theta
        )));
    }
    let no_solution = |reason: &str| Error::NoSolution {
        left: left.theta,
        right: right.theta,
        reason: reason.to_string(),
    };
    if !is_min_like(left) && !is_min_like(right) {
        return Err(no_solution("both endpoints are maxima of U"));
    }
    let hints = [left.theta, right.theta];
    let mut order: Vec<(&CriticalPoint, &CriticalPoint)> = Vec::new();
    if is_min_like(left) {
        order.push((left, right));
    }
    if is_min_like(right) {
        order.push((right, left));
    }
    for (a, b) in &order {
        if let Some(p) = launch_toward(u, a, b, opts, &hints, true) {
            return Ok(p);
        }
    }
    for (a, b) in [(right, left), (left, right)] {
        if let Some(p) = launch_toward(u, a, b, opts, &hints, false) {
            return Ok(p);
        }
    }
    Err(no_solution("no branch from either end reaches the other"))
}

fn dense_maximal(u: &ModulusModel, n: usize) -> Result<PiecewiseSolution> {
    let nodes = u
        .domain()
        .grid(n)
        .into_iter()
        .map(|t| Ok(Node::new(t, u.eval(t)?.sqrt(), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewiseSolution::single(SolutionPiece {
        sign: crate::ivp::BranchSign::Plus,
        direction: Direction::Forward,
        nodes,
        start: Termination::DomainEnd,
        end: Termination::DomainEnd,
        dense_contact: true,
    }))
}

/// Mean depth over the range shared by two pieces, compared pointwise.
fn dominates(a: &SolutionPiece, b: &SolutionPiece) -> bool {
    let (a0, a1) = a.theta_range();
    let (b0, b1) = b.theta_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if !(hi > lo) {
        return a1 - a0 >= b1 - b0;
    }
    let mut score = 0.0;
    for k in 0..=16 {
        let t = lo + (hi - lo) * k as f64 / 16.0;
        if let (Some((ra, _)), Some((rb, _))) = (a.eval(t), b.eval(t)) {
            score += ra - rb;
        }
    }
    score >= 0.0
}

fn extreme_piece(
    u: &ModulusModel,
    cp: &CriticalPoint,
    dir: Direction,
    opts: &AssemblyOptions,
    hints: &[f64],
) -> Result<Option<SolutionPiece>> {
    let dom = u.domain();
    let at_end = match dir {
        Direction::Forward => dom.hi - cp.theta <= 1e-12 * (1.0 + dom.hi.abs()),
        Direction::Backward => cp.theta - dom.lo <= 1e-12 * (1.0 + dom.lo.abs()),
    };
    if at_end {
        return Ok(None);
    }
    let mut best: Option<SolutionPiece> = None;
    for b in local_branches(u, cp.theta, &opts.ivp)? {
        let Ok(p) = launch_branch(u, &b, dir, &opts.ivp, hints) else { continue };
        if p.nodes.len() < 2 {
            continue;
        }
        let reaches = |q: &SolutionPiece| q.end == Termination::DomainEnd;
        best = match best {
            None => Some(p),
            Some(cur) => {
                let better = match (reaches(&p), reaches(&cur)) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => dominates(&p, &cur),
                };
                Some(if better { p } else { cur })
            }
        };
    }
    best.map(Some).ok_or_else(|| Error::NoContinuation {
        theta: cp.theta,
        reason: "no analytic branch leaves the outermost critical point".into(),
    })
}

/// The maximal-depth solution: BVP pieces between consecutive critical
/// points, extended to the domain ends by the dominant analytic branch.
/// Where `U' = 0` throughout, `sqrt(U)` itself is returned.
pub fn maximal_solution(u: &ModulusModel, opts: &AssemblyOptions) -> Result<PiecewiseSolution> {
    let crit = find_critical_points(u, 1e-13)?;
    let dom = u.domain();
    let fully_dense = crit.dense_intervals.iter().any(|(a, b)| {
        *a - dom.lo <= 1e-9 * (1.0 + dom.lo.abs()) && dom.hi - *b <= 1e-9 * (1.0 + dom.hi.abs())
    });
    if fully_dense {
        return dense_maximal(u, 401);
    }
    if crit.points.is_empty() {
        return Err(Error::NoSolution {
            left: dom.lo,
            right: dom.hi,
            reason: "U has no critical points".into(),
        });
    }
    let hints = crit.hint_thetas();
    let pts = &crit.points;
    let mut pieces = Vec::new();
    if let Some(p) = extreme_piece(u, &pts[0], Direction::Backward, opts, &hints)? {
        pieces.push(p);
    }
    for w in pts.windows(2) {
        pieces.push(solve_bvp_between_criticals(u, &w[0], &w[1], opts)?);
    }
    if let Some(p) = extreme_piece(u, pts.last().unwrap(), Direction::Forward, opts, &hints)? {
        pieces.push(p);
    }
    Ok(PiecewiseSolution::new(pieces, opts.tol_c1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::taylor::{self, CriticalIC};
    use std::f64::consts::PI;

    fn model(src: &str, lo: f64, hi: f64) -> ModulusModel {
        ModulusModel::parse(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn unit_modulus_maximal_is_one() {
        let u = model("1", 0.0, PI / 2.0);
        let m = maximal_solution(&u, &AssemblyOptions::default()).unwrap();
        assert!(m.nodes().iter().all(|n| (n.rho - 1.0).abs() < 1e-15));
    }

    #[test]
    fn parabola_maximal_is_upper_branch() {
        let u = model("pi^2/16 - pi^2/128*theta^2", 0.0, 2.0);
        let m = maximal_solution(&u, &AssemblyOptions::default()).unwrap();
        let ic = CriticalIC::new(&u, 0.0, 20).unwrap();
        let upper = taylor::branches_at(&ic, 20)
            .unwrap()
            .into_iter()
            .max_by(|a, b| a.beta().total_cmp(&b.beta()))
            .unwrap();
        assert!((upper.beta() + 0.1150).abs() < 1e-4);
        for n in m.nodes().iter().filter(|n| n.theta <= 0.3) {
            let (r, _) = taylor::eval_series(&upper, n.theta).unwrap();
            assert!((n.rho - r).abs() < 1e-8, "{} {} {}", n.theta, n.rho, r);
        }
        assert!(m.residual(&u) < 1e-8);
    }

    #[test]
    fn three_bump_recovers_tangent_solution() {
        let u = model("4.16 + 0.4*cos(4*theta) - 0.15*cos(4*theta)^2", 0.4, 2.75);
        let m = maximal_solution(&u, &AssemblyOptions::default()).unwrap();
        assert!(m.c1, "{:?}", m.junctions);
        let err = m
            .nodes()
            .iter()
            .map(|n| (n.rho - (2.0 + 0.1 * (4.0 * n.theta).cos())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn single_critical_bvp_needs_two_points() {
        let u = model("pi^2/16 - pi^2/128*theta^2", 0.0, 2.0);
        let crit = find_critical_points(&u, 1e-13).unwrap();
        assert_eq!(crit.points.len(), 1);
        let p = &crit.points[0];
        assert!(solve_bvp_between_criticals(&u, p, p, &AssemblyOptions::default()).is_err());
    }

    #[test]
    fn sine_squared_bvp() {
        let u = model("1 + 0.05*sin(2*theta)^2", 0.0, PI);
        let crit = find_critical_points(&u, 1e-13).unwrap();
        assert_eq!(crit.points.len(), 5);
        let opts = AssemblyOptions::default();
        for w in crit.points.windows(2) {
            let p = solve_bvp_between_criticals(&u, &w[0], &w[1], &opts).unwrap();
            let (a, b) = p.theta_range();
            assert!((a - w[0].theta).abs() < 1e-12 && (b - w[1].theta).abs() < 1e-12);
            assert!(crate::ivp::residual(&p, &u) < 1e-8);
            let s = p.nodes.first().unwrap().drho.abs() + p.nodes.last().unwrap().drho.abs();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn maximum_without_real_roots_has_no_bvp() {
        // At the maxima rho0^2 + 2 U'' < 0, so no solution touches there.
        let u = model("1 + 0.1*sin(2*theta)^2", 0.0, PI);
        let crit = find_critical_points(&u, 1e-13).unwrap();
        let e = solve_bvp_between_criticals(&u, &crit.points[0], &crit.points[1], &AssemblyOptions::default());
        assert!(matches!(e, Err(Error::NoSolution { .. })));
    }
}
