//! Regular branches `rho' = sign * sqrt(U - rho^2)` and their continuation
//! through contacts with the maximal curve.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulus::ModulusModel;
use crate::taylor::{self, BranchStatus, CriticalIC, TaylorBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl BranchSign {
    pub fn value(self) -> f64 {
        match self {
            BranchSign::Plus => 1.0,
            BranchSign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            BranchSign::Plus => BranchSign::Minus,
            BranchSign::Minus => BranchSign::Plus,
        }
    }

    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            BranchSign::Minus
        } else {
            BranchSign::Plus
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "+" | "+1" | "1" | "plus" => Some(BranchSign::Plus),
            "-" | "-1" | "minus" => Some(BranchSign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for BranchSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchSign::Plus => "+",
            BranchSign::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn value(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularIC {
    pub theta0: f64,
    pub rho0: f64,
}

impl RegularIC {
    pub fn new(theta0: f64, rho0: f64) -> Self {
        RegularIC { theta0, rho0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub theta: f64,
    pub rho: f64,
    pub drho: f64,
}

impl Node {
    pub fn new(theta: f64, rho: f64, drho: f64) -> Self {
        Node { theta, rho, drho }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Termination {
    /// Launched from a regular initial condition.
    Seed,
    /// Launched from a critical point along an analytic branch.
    CriticalLaunch { theta: f64 },
    DomainEnd,
    /// Reached the maximal curve.
    Contact { theta: f64 },
    /// Depth fell to the floor (curve through the origin).
    FloorContact { theta: f64 },
    StepFailure { theta: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPiece {
    pub sign: BranchSign,
    pub direction: Direction,
    /// Nodes in increasing `theta`.
    pub nodes: Vec<Node>,
    /// How the piece starts (at the launch end).
    pub start: Termination,
    /// How the integration stopped (at the far end).
    pub end: Termination,
    /// The piece runs along the maximal curve inside a dense critical set.
    pub dense_contact: bool,
}

impl SolutionPiece {
    pub fn termination(&self) -> &Termination {
        &self.end
    }

    pub fn launch_node(&self) -> Node {
        match self.direction {
            Direction::Forward => self.nodes[0],
            Direction::Backward => *self.nodes.last().unwrap(),
        }
    }

    pub fn end_node(&self) -> Node {
        match self.direction {
            Direction::Forward => *self.nodes.last().unwrap(),
            Direction::Backward => self.nodes[0],
        }
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.nodes[0].theta, self.nodes.last().unwrap().theta)
    }

    /// Cubic Hermite interpolation of `(rho, rho')`; `None` outside the piece.
    pub fn eval(&self, theta: f64) -> Option<(f64, f64)> {
        hermite(&self.nodes, theta)
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        let s = self.sign.value();
        self.nodes
            .windows(2)
            .all(|w| s * (w[1].rho - w[0].rho) >= -tol)
    }
}

/// Cubic Hermite interpolation over nodes sorted by `theta`.
pub fn hermite(nodes: &[Node], theta: f64) -> Option<(f64, f64)> {
    let first = nodes.first()?;
    let last = nodes.last()?;
    let slack = 1e-12 * (1.0 + theta.abs());
    if theta < first.theta - slack || theta > last.theta + slack {
        return None;
    }
    if nodes.len() == 1 {
        return Some((first.rho, first.drho));
    }
    let i = match nodes.binary_search_by(|n| n.theta.total_cmp(&theta)) {
        Ok(i) => return Some((nodes[i].rho, nodes[i].drho)),
        Err(0) => 0,
        Err(i) => (i - 1).min(nodes.len() - 2),
    };
    let (a, b) = (nodes[i], nodes[i + 1]);
    let h = b.theta - a.theta;
    if h <= 0.0 {
        return Some((a.rho, a.drho));
    }
    let t = ((theta - a.theta) / h).clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let rho = h00 * a.rho + h10 * h * a.drho + h01 * b.rho + h11 * h * b.drho;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let d11 = 3.0 * t2 - 2.0 * t;
    let drho = (d00 * a.rho + d01 * b.rho) / h + d10 * a.drho + d11 * b.drho;
    Some((rho, drho))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvpOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step; `None` means `width / 200`.
    pub h_max: Option<f64>,
    /// Relative contact threshold on `U - rho^2`.
    pub tol_contact: f64,
    pub tol_floor: f64,
    /// Relative regularity margin required of initial conditions.
    pub tol_reg: f64,
    /// Distance from a known critical point inside which the local series
    /// replaces integration.
    pub series_radius: f64,
    pub taylor_order: usize,
    pub max_steps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: None,
            tol_contact: 1e-10,
            tol_floor: 1e-12,
            tol_reg: 1e-13,
            series_radius: 0.05,
            taylor_order: taylor::DEFAULT_ORDER,
            max_steps: 200_000,
        }
    }
}

impl IvpOptions {
    fn h_max(&self, u: &ModulusModel) -> f64 {
        self.h_max.unwrap_or(u.domain().width() / 200.0)
    }
}

fn check_regular(u: &ModulusModel, ic: RegularIC, opts: &IvpOptions) -> Result<f64> {
    u.domain().check(ic.theta0)?;
    let uv = u.eval(ic.theta0)?;
    let m = uv - ic.rho0 * ic.rho0;
    if !(ic.rho0 > 0.0) || m <= opts.tol_reg * (1.0 + uv) {
        return Err(Error::NotRegular {
            theta: ic.theta0,
            rho: ic.rho0,
            margin: m,
        });
    }
    Ok(m)
}

/// The two initial slopes `(+alpha, -alpha)` at a regular initial condition.
pub fn derivative_pair(u: &ModulusModel, ic: RegularIC) -> Result<(f64, f64)> {
    let a = check_regular(u, ic, &IvpOptions::default())?.sqrt();
    Ok((a, -a))
}

/// Max over nodes of `|rho'^2 + rho^2 - U|`.
pub fn residual(piece: &SolutionPiece, u: &ModulusModel) -> f64 {
    node_residual(&piece.nodes, u)
}

pub fn node_residual(nodes: &[Node], u: &ModulusModel) -> f64 {
    nodes
        .iter()
        .map(|n| match u.eval(n.theta) {
            Ok(v) => (n.drho * n.drho + n.rho * n.rho - v).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

struct Field<'a> {
    u: &'a ModulusModel,
    s: f64,
}

impl Field<'_> {
    fn slope(&self, theta: f64, rho: f64) -> Result<f64> {
        let theta = self.u.domain().clamp(theta);
        Ok(self.s * (self.u.eval(theta)? - rho * rho).max(0.0).sqrt())
    }

    /// One Dormand-Prince 5(4) step; returns the 5th-order value and the
    /// embedded error estimate.
    fn step(&self, theta: f64, rho: f64, k1: f64, h: f64) -> Result<(f64, f64, f64)> {
        let f = |t: f64, r: f64| self.slope(t, r);
        let k2 = f(theta + h / 5.0, rho + h * k1 / 5.0)?;
        let k3 = f(theta + 0.3 * h, rho + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2))?;
        let k4 = f(
            theta + 0.8 * h,
            rho + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
        )?;
        let k5 = f(
            theta + 8.0 / 9.0 * h,
            rho + h
                * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                    - 212.0 / 729.0 * k4),
        )?;
        let k6 = f(
            theta + h,
            rho + h
                * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                    + 46732.0 / 5247.0 * k3
                    + 49.0 / 176.0 * k4
                    - 5103.0 / 18656.0 * k5),
        )?;
        let next = rho
            + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                - 2187.0 / 6784.0 * k5
                + 11.0 / 84.0 * k6);
        let k7 = f(theta + h, next)?;
        let err = h
            * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
                - 17253.0 / 339200.0 * k5
                + 22.0 / 525.0 * k6
                - 1.0 / 40.0 * k7);
        Ok((next, err.abs(), k7))
    }
}

struct HintBranches {
    theta: f64,
    branches: Option<Vec<TaylorBranch>>,
}

/// Known critical points with lazily expanded analytic branches.
struct Hints<'a> {
    u: &'a ModulusModel,
    order: usize,
    items: Vec<HintBranches>,
}

impl<'a> Hints<'a> {
    fn new(u: &'a ModulusModel, thetas: &[f64], order: usize) -> Self {
        let mut t: Vec<f64> = thetas.to_vec();
        t.sort_by(f64::total_cmp);
        Hints {
            u,
            order,
            items: t
                .into_iter()
                .map(|theta| HintBranches {
                    theta,
                    branches: None,
                })
                .collect(),
        }
    }

    /// First hint strictly ahead of `theta` in direction `dir`.
    fn next(&self, theta: f64, dir: f64) -> Option<usize> {
        let eps = 1e-12 * (1.0 + theta.abs());
        if dir > 0.0 {
            self.items.iter().position(|h| h.theta > theta + eps)
        } else {
            self.items.iter().rposition(|h| h.theta < theta - eps)
        }
    }

    fn branches(&mut self, i: usize) -> &[TaylorBranch] {
        let item = &mut self.items[i];
        if item.branches.is_none() {
            let built = if self.u.is_closed_form() {
                CriticalIC::new(self.u, item.theta, self.order)
                    .and_then(|ic| taylor::branches_at(&ic, self.order))
                    .map(|bs| bs.into_iter().filter(|b| b.is_usable()).collect())
                    .unwrap_or_default()
            } else {
                Vec::new()
            };
            item.branches = Some(built);
        }
        item.branches.as_deref().unwrap()
    }
}

const SERIES_NODES: usize = 24;

/// Matching tolerance between an integrated value and a series branch.
fn match_tol(rho: f64) -> f64 {
    1e-9 * (1.0 + rho)
}

/// Integrates from `start` in direction `dir`; nodes are returned in
/// integration order, excluding `start`.
fn integrate(
    u: &ModulusModel,
    start: Node,
    sign: BranchSign,
    dir: Direction,
    opts: &IvpOptions,
    hints: &mut Hints,
) -> Result<(Vec<Node>, Termination)> {
    let field = Field { u, s: sign.value() };
    let d = dir.value();
    let dom = u.domain();
    let target = if d > 0.0 { dom.hi } else { dom.lo };
    let h_max = opts.h_max(u);
    let mut h = h_max.min(0.01 * dom.width()).max(1e-6 * dom.width());
    let mut theta = start.theta;
    let mut rho = start.rho;
    let mut k1 = field.slope(theta, rho)?;
    // Integration history including `start`; stripped on return.
    let mut out = vec![start];
    let mut steps = 0usize;
    let finish = |mut out: Vec<Node>, t: Termination| -> Result<(Vec<Node>, Termination)> {
        out.remove(0);
        Ok((out, t))
    };
    let series_radius = opts.series_radius;

    loop {
        let eps = 1e-14 * (1.0 + theta.abs());
        if (target - theta) * d <= eps {
            return finish(out, Termination::DomainEnd);
        }
        steps += 1;
        if steps > opts.max_steps {
            return finish(out, Termination::StepFailure {
                    theta,
                    reason: format!("exceeded {} steps", opts.max_steps),
                });
        }
        let hint = hints.next(theta, d);
        let stop = match hint {
            Some(i) if (hints.items[i].theta - target) * d < 0.0 => hints.items[i].theta,
            _ => target,
        };
        let remaining = (stop - theta).abs();
        let mut hh = h.min(h_max).min(remaining);
        // Never step across a predicted tangency: |rho'| falls linearly there.
        if let Some(gap) = predicted_zero(&out) {
            hh = hh.min((0.5 * gap).max(1e-7 * dom.width()));
        }
        if remaining - hh < 1e-9 * hh {
            hh = remaining;
        }
        let (mut next, err, k_next) = match field.step(theta, rho, k1, d * hh) {
            Ok(v) => v,
            Err(e) => {
                return finish(
                    out,
                    Termination::StepFailure {
                        theta,
                        reason: e.to_string(),
                    },
                )
            }
        };
        let scale = opts.atol + opts.rtol * rho.abs().max(next.abs());
        let ratio = err / scale;
        if !(ratio <= 1.0) {
            h = hh * (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.5);
            if !h.is_finite() || h < 1e-14 * (1.0 + theta.abs()) {
                return finish(
                    out,
                    Termination::StepFailure {
                        theta,
                        reason: "step size underflow".into(),
                    },
                );
            }
            continue;
        }
        let theta_new = if hh == remaining { stop } else { theta + d * hh };
        // The exact flow is monotone; only rounding can reverse it.
        if sign.value() * d * (next - rho) < 0.0 {
            next = rho;
        }
        let u_new = u.eval(theta_new)?;
        let g = u_new - next * next;
        if g < opts.tol_contact * (1.0 + u_new) {
            let contact = locate_contact(u, &field, &mut out, k1, d * hh, opts)?;
            return finish(out, contact);
        }
        if next < opts.tol_floor {
            let node = locate_floor(&field, theta, rho, k1, d * hh, opts)?;
            out.push(node);
            return finish(out, Termination::FloorContact { theta: node.theta });
        }
        let node = Node::new(theta_new, next, k_next);
        out.push(node);
        theta = theta_new;
        rho = next;
        k1 = k_next;
        h = hh * (0.9 * ratio.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);

        if let Some(i) = hint {
            let hc = hints.items[i].theta;
            if (hc - theta).abs() <= series_radius && (hc - theta) * d > 0.0 {
                if let Some(nodes) = series_handoff(hints.branches(i), theta, rho, sign)? {
                    // The series takes over at `theta`; earlier nodes that sit
                    // past its value would break monotonicity.
                    out.pop();
                    let r0 = nodes[0].rho;
                    while out.len() > 1 && sign.value() * d * (r0 - out.last().unwrap().rho) < 0.0 {
                        out.pop();
                    }
                    out.extend(nodes);
                    return finish(out, Termination::Contact { theta: hc });
                }
            }
        }
    }
}

/// Replaces integration by the analytic branch through the critical point
/// ahead when the current state lies on it.
fn series_handoff(
    branches: &[TaylorBranch],
    theta: f64,
    rho: f64,
    sign: BranchSign,
) -> Result<Option<Vec<Node>>> {
    let values: Vec<(f64, f64)> = branches
        .iter()
        .map(|b| taylor::eval_series(b, theta))
        .collect::<Result<_>>()?;
    let gap = if values.len() == 2 {
        (values[0].0 - values[1].0).abs()
    } else {
        f64::INFINITY
    };
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, (r, dr))| {
            let dev = (r - rho).abs();
            dev <= match_tol(rho) && dev < 0.5 * gap && dr * sign.value() >= -match_tol(rho)
        })
        .min_by(|a, b| (a.1 .0 - rho).abs().total_cmp(&(b.1 .0 - rho).abs()));
    let Some((i, _)) = best else {
        return Ok(None);
    };
    let b = &branches[i];
    if !b.within_radius(theta) {
        return Ok(None);
    }
    let hc = b.ic.theta0;
    let mut nodes = Vec::with_capacity(SERIES_NODES + 1);
    for k in 0..=SERIES_NODES {
        let t = theta + (hc - theta) * k as f64 / SERIES_NODES as f64;
        let t = if k == SERIES_NODES { hc } else { t };
        let (r, dr) = taylor::eval_series(b, t)?;
        nodes.push(Node::new(t, r, if k == SERIES_NODES { 0.0 } else { dr }));
    }
    Ok(Some(nodes))
}

/// Distance ahead at which |rho'| extrapolates linearly to zero, when it
/// is falling over the last two nodes.
fn predicted_zero(hist: &[Node]) -> Option<f64> {
    let [.., a, b] = hist else { return None };
    let (sa, sb) = (a.drho.abs(), b.drho.abs());
    (sb < sa && sb > 0.0).then(|| (b.theta - a.theta).abs() * sb / (sa - sb))
}

/// Bisects the last step on the contact function, then places the
/// tangency where |rho'| extrapolates to zero from nodes on which it is
/// still well conditioned. Nodes past the contact are dropped.
fn locate_contact(
    u: &ModulusModel,
    field: &Field,
    hist: &mut Vec<Node>,
    k1: f64,
    h: f64,
    opts: &IvpOptions,
) -> Result<Termination> {
    let cur = *hist.last().unwrap();
    let (theta, rho) = (cur.theta, cur.rho);
    let contact = |t: f64, r: f64| -> Result<bool> {
        let uv = u.eval(t)?;
        Ok(uv - r * r < opts.tol_contact * (1.0 + uv))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let t = theta + mid * h;
        let (mut r, _, k) = field.step(theta, rho, k1, mid * h)?;
        if field.s * h * (r - rho) < 0.0 {
            r = rho;
        }
        if contact(t, r)? {
            hi = mid;
        } else {
            lo = mid;
            if mid * h.abs() > 1e-15 * (1.0 + theta.abs()) {
                if hist.last().unwrap().theta != theta {
                    hist.pop();
                }
                hist.push(Node::new(t, r, k));
            }
        }
        if (hi - lo) * h.abs() < 1e-15 * (1.0 + theta.abs()) {
            break;
        }
    }
    let best = *hist.last().unwrap();
    let d = h.signum();
    let scale = (1.0 + u.eval(best.theta)?).sqrt();
    let conditioned: Vec<Node> = hist
        .iter()
        .rev()
        .filter(|n| n.drho.abs() >= 1e-4 * scale)
        .take(3)
        .copied()
        .collect();
    let mut tc = best.theta;
    let falling = conditioned.windows(2).all(|w| w[0].drho.abs() < w[1].drho.abs());
    if conditioned.len() >= 2 && falling {
        // Lagrange interpolation of theta as a function of |rho'|, at 0.
        let mut est = 0.0;
        for (i, ni) in conditioned.iter().enumerate() {
            let mut w = 1.0;
            for (j, nj) in conditioned.iter().enumerate() {
                if i != j {
                    w *= nj.drho.abs() / (nj.drho.abs() - ni.drho.abs());
                }
            }
            est += w * ni.theta;
        }
        let anchor = conditioned[0].theta;
        let span = (best.theta - anchor).abs().max(1e-12);
        if (est - anchor) * d > 0.0 && (est - best.theta).abs() <= 2.0 * span {
            tc = u.domain().clamp(est);
        }
    }
    let mut rc = u.eval(tc)?.sqrt();
    hist.retain(|n| (n.theta - tc) * d < 0.0);
    let last = *hist.last().unwrap_or(&best);
    if field.s * d * (rc - last.rho) < 0.0 {
        tc = best.theta;
        rc = u.eval(tc)?.sqrt();
        hist.retain(|n| (n.theta - tc) * d < 0.0);
    }
    if hist.is_empty() {
        hist.push(cur);
    }
    hist.push(Node::new(tc, rc, 0.0));
    Ok(Termination::Contact { theta: tc })
}

fn locate_floor(field: &Field, theta: f64, rho: f64, k1: f64, h: f64, opts: &IvpOptions) -> Result<Node> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (theta, rho);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (r, _, _) = field.step(theta, rho, k1, mid * h)?;
        if r < opts.tol_floor {
            hi = mid;
        } else {
            lo = mid;
            best = (theta + mid * h, r);
        }
    }
    let (t, r) = best;
    Ok(Node::new(t, r.max(opts.tol_floor), field.slope(t, r)?))
}

fn assemble(
    sign: BranchSign,
    dir: Direction,
    first: Node,
    mut rest: Vec<Node>,
    start: Termination,
    end: Termination,
) -> SolutionPiece {
    let mut nodes = Vec::with_capacity(rest.len() + 1);
    nodes.push(first);
    nodes.append(&mut rest);
    if dir == Direction::Backward {
        nodes.reverse();
    }
    SolutionPiece {
        sign,
        direction: dir,
        nodes,
        start,
        end,
        dense_contact: false,
    }
}

pub fn solve_regular(
    u: &ModulusModel,
    ic: RegularIC,
    sign: BranchSign,
    dir: Direction,
    opts: &IvpOptions,
) -> Result<SolutionPiece> {
    check_regular(u, ic, opts)?;
    let hints = crate::maximal::find_critical_points(u, 1e-13)
        .map(|s| s.hint_thetas())
        .unwrap_or_default();
    solve_regular_near(u, ic, sign, dir, opts, &hints)
}

/// As [`solve_regular`], handing off to the analytic branch when the
/// trajectory runs into one of the critical points `hints`.
pub fn solve_regular_near(
    u: &ModulusModel,
    ic: RegularIC,
    sign: BranchSign,
    dir: Direction,
    opts: &IvpOptions,
    hints: &[f64],
) -> Result<SolutionPiece> {
    let m = check_regular(u, ic, opts)?;
    let first = Node::new(ic.theta0, ic.rho0, sign.value() * m.sqrt());
    let mut hints = Hints::new(u, hints, opts.taylor_order);
    let (rest, end) = integrate(u, first, sign, dir, opts, &mut hints)?;
    Ok(assemble(sign, dir, first, rest, Termination::Seed, end))
}

/// A constant piece `rho = rho_c` running along the maximal curve while `U`
/// stays equal to `rho_c^2`.
pub fn constant_piece(
    u: &ModulusModel,
    theta_c: f64,
    rho_c: f64,
    dir: Direction,
    opts: &IvpOptions,
) -> Result<SolutionPiece> {
    let d = dir.value();
    let dom = u.domain();
    let target = if d > 0.0 { dom.hi } else { dom.lo };
    let on_curve = |t: f64| -> bool {
        u.eval(t)
            .map(|v| (v - rho_c * rho_c).abs() <= opts.tol_contact * (1.0 + v))
            .unwrap_or(false)
    };
    let step = opts.h_max(u);
    let mut nodes = vec![Node::new(theta_c, rho_c, 0.0)];
    let mut t = theta_c;
    let end = loop {
        if (target - t) * d <= 1e-14 * (1.0 + t.abs()) {
            break Termination::DomainEnd;
        }
        let next = if ((target - t) * d) <= step { target } else { t + d * step };
        if on_curve(next) {
            t = next;
            nodes.push(Node::new(t, rho_c, 0.0));
            continue;
        }
        let (mut a, mut b) = (t, next);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if on_curve(m) {
                a = m;
            } else {
                b = m;
            }
        }
        if a != t {
            t = a;
            nodes.push(Node::new(t, rho_c, 0.0));
        }
        break Termination::Contact { theta: t };
    };
    if dir == Direction::Backward {
        nodes.reverse();
    }
    Ok(SolutionPiece {
        sign: BranchSign::Plus,
        direction: dir,
        nodes,
        start: Termination::CriticalLaunch { theta: theta_c },
        end,
        dense_contact: true,
    })
}

/// Sign of `rho'` just past `theta0` when following `branch` in `dir`, or
/// `None` for the constant branch.
pub fn branch_sign(branch: &TaylorBranch, dir: Direction) -> Option<BranchSign> {
    if branch.status == BranchStatus::ConstantCircle {
        return None;
    }
    let scale = 1e-14 * (1.0 + branch.ic.rho0);
    let mut fact = 1.0;
    for (k, v) in branch.derivs.iter().enumerate().skip(2) {
        fact *= k as f64;
        if (v / fact).abs() > scale {
            let h_sign = if dir == Direction::Backward && (k - 1) % 2 == 1 { -1.0 } else { 1.0 };
            return Some(BranchSign::of(v * h_sign));
        }
    }
    None
}

/// Follows an analytic branch away from its critical point: series close
/// to the point, integration beyond.
pub fn launch_branch(
    u: &ModulusModel,
    branch: &TaylorBranch,
    dir: Direction,
    opts: &IvpOptions,
    hints: &[f64],
) -> Result<SolutionPiece> {
    let theta_c = branch.ic.theta0;
    let rho_c = branch.ic.rho0;
    let Some(sign) = branch_sign(branch, dir) else {
        return constant_piece(u, theta_c, rho_c, dir, opts);
    };
    let d = dir.value();
    let dom = u.domain();
    let target = if d > 0.0 { dom.hi } else { dom.lo };
    let radius = branch.radius.or(opts.series_radius);
    let mut reach = opts
        .series_radius
        .max(0.25 * radius)
        .min(0.5 * radius)
        .min((target - theta_c) * d);
    let others: Vec<f64> = hints
        .iter()
        .copied()
        .filter(|t| (t - theta_c).abs() > 1e-9 * (1.0 + t.abs()))
        .collect();
    if let Some(near) = others
        .iter()
        .filter(|t| (*t - theta_c) * d > 0.0)
        .map(|t| (t - theta_c).abs())
        .min_by(f64::total_cmp)
    {
        reach = reach.min(0.5 * near);
    }
    if !(reach > 0.0) {
        return Err(Error::NoContinuation {
            theta: theta_c,
            reason: "critical point sits on the domain end".into(),
        });
    }
    if branch.derivs.len() > 3 {
        let end_residual = |h: f64| -> Result<f64> {
            let t = theta_c + d * h;
            let (r, dr) = taylor::eval_series(branch, t)?;
            let v = u.eval(t)?;
            Ok((r * r + dr * dr - v).abs() / (1.0 + v))
        };
        while reach > 1e-3 * opts.series_radius && end_residual(reach)? > 1e-11 {
            reach *= 0.5;
        }
    }
    let mut series = vec![Node::new(theta_c, rho_c, 0.0)];
    for k in 1..=SERIES_NODES {
        let t = theta_c + d * reach * k as f64 / SERIES_NODES as f64;
        let (r, dr) = taylor::eval_series(branch, t)?;
        if !(r > opts.tol_floor) {
            return Err(Error::NoContinuation {
                theta: t,
                reason: "series left the positive half-plane".into(),
            });
        }
        series.push(Node::new(t, r, dr));
    }
    let last = *series.last().unwrap();
    let uv = u.eval(last.theta)?;
    let m = uv - last.rho * last.rho;
    let (rest, end) = if (last.theta - target) * d >= -1e-14 * (1.0 + target.abs()) {
        (Vec::new(), Termination::DomainEnd)
    } else if m <= opts.tol_contact * (1.0 + uv) {
        return Err(Error::NoContinuation {
            theta: last.theta,
            reason: format!("series meets the maximal curve again (margin {m:e})"),
        });
    } else {
        let start = Node::new(last.theta, last.rho, sign.value() * m.sqrt());
        let mut hints = Hints::new(u, &others, opts.taylor_order);
        integrate(u, start, sign, dir, opts, &mut hints)?
    };
    let first = series.remove(0);
    series.extend(rest);
    Ok(assemble(
        sign,
        dir,
        first,
        series,
        Termination::CriticalLaunch { theta: theta_c },
        end,
    ))
}

/// Local quadratic branches `rho_c + beta h^2/2` for models without
/// high-order derivatives.
fn quadratic_branches(u: &ModulusModel, theta_c: f64) -> Result<Vec<TaylorBranch>> {
    let jet = u.jet(theta_c, 2)?;
    let ic = CriticalIC::from_jet(jet)?;
    let (b1, b2) = taylor::second_derivative_roots(ic.rho0, ic.u_jet.coeffs[2])?;
    let mut betas = vec![b1];
    if b2 != b1 {
        betas.push(b2);
    }
    Ok(betas
        .into_iter()
        .map(|beta| {
            let constant = beta == 0.0;
            TaylorBranch {
                ic: ic.clone(),
                derivs: vec![ic.rho0, 0.0, beta],
                status: if constant {
                    BranchStatus::ConstantCircle
                } else {
                    BranchStatus::Complete
                },
                radius: taylor::Radius::Unknown,
            }
        })
        .collect())
}

/// Analytic (or locally quadratic) branches at a critical point.
pub fn local_branches(u: &ModulusModel, theta_c: f64, opts: &IvpOptions) -> Result<Vec<TaylorBranch>> {
    if u.is_closed_form() {
        let ic = CriticalIC::new(u, theta_c, opts.taylor_order)?;
        Ok(taylor::branches_at(&ic, opts.taylor_order)?
            .into_iter()
            .filter(|b| b.is_usable())
            .collect())
    } else {
        quadratic_branches(u, theta_c)
    }
}

/// Every admissible way to leave the critical point `theta_c` in `dir`.
pub fn continuations_at(
    u: &ModulusModel,
    theta_c: f64,
    dir: Direction,
    opts: &IvpOptions,
    hints: &[f64],
) -> Result<Vec<SolutionPiece>> {
    let mut out = Vec::new();
    for b in local_branches(u, theta_c, opts)? {
        if let Ok(p) = launch_branch(u, &b, dir, opts, hints) {
            if p.nodes.len() > 1 {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Continues a piece that ended in contact, in the same direction, with
/// the branch of sign `choice` (the constant branch counts as `+`).
pub fn continue_through_critical(
    piece: &SolutionPiece,
    u: &ModulusModel,
    choice: BranchSign,
    opts: &IvpOptions,
    hints: &[f64],
) -> Result<SolutionPiece> {
    let Termination::Contact { theta } = piece.end else {
        return Err(Error::NoContinuation {
            theta: piece.end_node().theta,
            reason: format!("piece ended with {:?}, not a contact", piece.end),
        });
    };
    let dir = piece.direction;
    let (du, _) = u.slope_and_curvature(theta)?;
    let uv = u.eval(theta)?;
    if du.abs() > 1e-6 * (1.0 + uv) {
        return Err(Error::NoContinuation {
            theta,
            reason: format!("contact at a non-critical point (U' = {du:e})"),
        });
    }
    let branches = local_branches(u, theta, opts)?;
    let pick = branches
        .iter()
        .find(|b| branch_sign(b, dir) == Some(choice))
        .or_else(|| {
            (choice == BranchSign::Plus)
                .then(|| branches.iter().find(|b| branch_sign(b, dir).is_none()))
                .flatten()
        });
    match pick {
        Some(b) => launch_branch(u, b, dir, opts, hints),
        None if choice == BranchSign::Plus && is_locally_dense(u, theta, opts)? => {
            constant_piece(u, theta, uv.sqrt(), dir, opts)
        }
        None => Err(Error::NoContinuation {
            theta,
            reason: format!("no {choice} branch leaves this critical point"),
        }),
    }
}

fn is_locally_dense(u: &ModulusModel, theta: f64, opts: &IvpOptions) -> Result<bool> {
    let h = opts.h_max(u) * 0.5;
    let uv = u.eval(theta)?;
    let dom = u.domain();
    Ok([theta - h, theta + h]
        .iter()
        .map(|t| dom.clamp(*t))
        .all(|t| u.eval(t).map(|v| (v - uv).abs() <= opts.tol_contact * (1.0 + v)).unwrap_or(false)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use std::f64::consts::PI;

    fn model(src: &str, lo: f64, hi: f64) -> ModulusModel {
        ModulusModel::parse(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    fn max_err(p: &SolutionPiece, f: impl Fn(f64) -> f64) -> f64 {
        p.nodes.iter().map(|n| (n.rho - f(n.theta)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn derivative_pair_fixtures() {
        let one = model("1", 0.0, 1.5);
        let (a, b) = derivative_pair(&one, RegularIC::new(0.0, 0.5)).unwrap();
        assert_eq!((a, b), (0.75f64.sqrt(), -(0.75f64.sqrt())));
        assert!(matches!(
            derivative_pair(&one, RegularIC::new(0.0, 1.0)),
            Err(Error::NotRegular { .. })
        ));
        let line = model("25/cos(theta)^4", -1.0, 1.0);
        let (a, _) = derivative_pair(&line, RegularIC::new(0.2, 5.0)).unwrap();
        let expect = (25.0 / 0.2f64.cos().powi(4) - 25.0).sqrt();
        assert!((a - expect).abs() < 1e-12);
    }

    #[test]
    fn rising_sine_reaches_contact() {
        let one = model("1", 0.0, 1.5);
        let p = solve_regular(&one, RegularIC::new(0.0, 0.5), BranchSign::Plus, Direction::Forward, &IvpOptions::default())
            .unwrap();
        let Termination::Contact { theta } = p.end else { panic!("{:?}", p.end) };
        assert!((theta - PI / 3.0).abs() < 1e-6, "{theta}");
        assert!(max_err(&p, |t| (t + PI / 6.0).sin().min(1.0)) < 1e-8);
        assert!(p.is_monotone(1e-12));
    }

    #[test]
    fn falling_cosine_hits_floor() {
        let one = model("1", 0.0, 1.5);
        let p = solve_regular(&one, RegularIC::new(0.0, 0.5), BranchSign::Minus, Direction::Forward, &IvpOptions::default())
            .unwrap();
        let Termination::FloorContact { theta } = p.end else { panic!("{:?}", p.end) };
        assert!((theta - PI / 6.0).abs() < 1e-9);
        assert!(max_err(&p, |t| (t + PI / 3.0).cos()) < 1e-8);
    }

    #[test]
    fn line_backward_to_contact() {
        let line = model("25/cos(theta)^4", -1.0, 1.0);
        let ic = RegularIC::new(0.3, 5.0 / 0.3f64.cos());
        let opts = IvpOptions::default();
        let p = solve_regular(&line, ic, BranchSign::Plus, Direction::Backward, &opts).unwrap();
        assert_eq!(p.end, Termination::Contact { theta: 0.0 });
        assert!(max_err(&p, |t| 5.0 / t.cos()) < 1e-7);
        assert!(residual(&p, &line) < 1e-8);
    }

    #[test]
    fn continuation_through_dense_contact() {
        let one = model("1", 0.0, 1.5);
        let opts = IvpOptions::default();
        let p = solve_regular(&one, RegularIC::new(0.0, 0.5), BranchSign::Plus, Direction::Forward, &opts).unwrap();
        let Termination::Contact { theta: tc } = p.end else { panic!() };
        let down = continue_through_critical(&p, &one, BranchSign::Minus, &opts, &[]).unwrap();
        assert!(max_err(&down, |t| (t - tc).cos()) < 1e-8);
        assert!(max_err(&down, |t| (t - PI / 3.0).cos()) < 1e-5);
        let flat = continue_through_critical(&p, &one, BranchSign::Plus, &opts, &[]).unwrap();
        assert!(flat.dense_contact);
        assert_eq!(flat.end, Termination::DomainEnd);
        assert!(residual(&flat, &one) == 0.0);
    }

    #[test]
    fn line_contact_continuations() {
        let line = model("25/cos(theta)^4", -1.0, 1.0);
        let opts = IvpOptions::default();
        let ic = RegularIC::new(-0.3, 5.0 / 0.3f64.cos());
        let p = solve_regular_near(&line, ic, BranchSign::Minus, Direction::Forward, &opts, &[0.0]).unwrap();
        assert_eq!(p.end, Termination::Contact { theta: 0.0 });
        let up = continue_through_critical(&p, &line, BranchSign::Plus, &opts, &[0.0]).unwrap();
        assert!(max_err(&up, |t| 5.0 / t.cos()) < 1e-7);
        let down = continue_through_critical(&p, &line, BranchSign::Minus, &opts, &[0.0]).unwrap();
        assert!(residual(&down, &line) < 1e-8);
        assert!(down.is_monotone(1e-12));
    }

    #[test]
    fn residual_fixtures() {
        let one = model("1", 0.0, 1.5);
        let nodes = |f: &dyn Fn(f64) -> (f64, f64)| -> Vec<Node> {
            (0..=50)
                .map(|k| {
                    let t = k as f64 * 0.01;
                    let (r, d) = f(t);
                    Node::new(t, r, d)
                })
                .collect()
        };
        let exact = nodes(&|t| ((t + PI / 6.0).sin(), (t + PI / 6.0).cos()));
        assert!(node_residual(&exact, &one) < 1e-10);
        let constant = nodes(&|_| (1.0, 0.0));
        assert_eq!(node_residual(&constant, &one), 0.0);
        let perturbed = nodes(&|t| ((t + PI / 6.0).sin() + 1e-3, (t + PI / 6.0).cos()));
        assert!(node_residual(&perturbed, &one) > 1e-4);
    }

    #[test]
    fn hermite_interpolates_cubics_exactly() {
        let f = |t: f64| (t * t * t - t, 3.0 * t * t - 1.0);
        let nodes: Vec<Node> = [0.0, 0.3, 1.0]
            .iter()
            .map(|&t| {
                let (r, d) = f(t);
                Node::new(t, r, d)
            })
            .collect();
        let (r, d) = hermite(&nodes, 0.6).unwrap();
        assert!((r - f(0.6).0).abs() < 1e-14);
        assert!((d - f(0.6).1).abs() < 1e-13);
        assert!(hermite(&nodes, 1.1).is_none());
    }
}
