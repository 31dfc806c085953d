//! The maximal depth function `sqrt(U)` and its critical points.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ivp::Node;
use crate::modulus::{Jet, ModulusModel};

pub fn maximal_depth(u: &ModulusModel, theta: f64) -> Result<f64> {
    Ok(u.eval(theta)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Inflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub theta: f64,
    pub depth: f64,
    pub kind: CriticalKind,
    pub u_jet: Jet,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
    pub dense: bool,
    /// Intervals on which `U' = 0` identically.
    pub dense_intervals: Vec<(f64, f64)>,
    pub diagnostics: Vec<String>,
}

impl CriticalSet {
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    /// Isolated points plus the ends of dense intervals.
    pub fn hint_thetas(&self) -> Vec<f64> {
        let mut t = self.thetas();
        for (a, b) in &self.dense_intervals {
            t.push(*a);
            t.push(*b);
        }
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    pub fn in_dense(&self, theta: f64) -> bool {
        self.dense_intervals
            .iter()
            .any(|(a, b)| theta >= *a - 1e-12 && theta <= *b + 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    pub cells: usize,
    /// Root polishing tolerance in `theta`.
    pub tol: f64,
    /// `|U'|` below `tol_flat * scale` counts as zero.
    pub tol_flat: f64,
    /// `|U''|` below `tol_class * scale` leaves the kind to the sign change.
    pub tol_class: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            cells: 2048,
            tol: 1e-13,
            tol_flat: 1e-11,
            tol_class: 1e-9,
        }
    }
}

/// Bracketed root of `f` on `[a, b]` by bisection with secant acceleration
/// (Illinois variant). `f(a)` and `f(b)` must differ in sign.
pub(crate) fn bracket_root(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64> {
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let lo = a.min(b) + 0.01 * (b - a).abs();
        let hi = a.max(b) - 0.01 * (b - a).abs();
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn find_critical_points(u: &ModulusModel, tol: f64) -> Result<CriticalSet> {
    find_critical_points_with(
        u,
        &CriticalOptions {
            tol,
            ..CriticalOptions::default()
        },
    )
}

pub fn find_critical_points_with(u: &ModulusModel, opts: &CriticalOptions) -> Result<CriticalSet> {
    let dom = u.domain();
    let grid = dom.grid(opts.cells);
    let n = grid.len();
    let mut vals = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &t in &grid {
        vals.push(u.eval(t)?);
        let (a, b) = u.slope_and_curvature(t)?;
        d1.push(a);
        d2.push(b);
    }
    let scale = 1.0 + vals.iter().copied().fold(0.0, f64::max);
    let flat_tol = opts.tol_flat * scale;
    let class_tol = opts.tol_class * scale;
    let flat: Vec<bool> = d1.iter().map(|d| d.abs() <= flat_tol).collect();

    let mut set = CriticalSet::default();
    let mut in_dense = vec![false; n];
    let mut i = 0;
    while i < n {
        if !flat[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && flat[j + 1] {
            j += 1;
        }
        if j >= i + 2 {
            let run = &vals[i..=j];
            let spread = run.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - run.iter().copied().fold(f64::INFINITY, f64::min);
            if spread <= 1e-12 * scale {
                let edge = |k: usize, step: isize| -> Result<f64> {
                    let k2 = k as isize + step;
                    if k2 < 0 || k2 as usize >= n {
                        return Ok(grid[k]);
                    }
                    let (inside, outside) = (grid[k], grid[k2 as usize]);
                    let level = vals[k];
                    let off = |t: f64| -> Result<f64> {
                        Ok((u.eval(t)? - level).abs() - 1e-12 * scale)
                    };
                    if off(outside)? <= 0.0 {
                        return Ok(outside);
                    }
                    bracket_root(&off, inside, outside, opts.tol)
                };
                let a = edge(i, -1)?;
                let b = edge(j, 1)?;
                set.dense_intervals.push((a, b));
                for flag in &mut in_dense[i..=j] {
                    *flag = true;
                }
            }
        }
        i = j + 1;
    }
    set.dense = !set.dense_intervals.is_empty();

    // Candidate roots: sign changes of U', exact zeros, and touches where U''
    // changes sign while U' nearly vanishes.
    let mut cands: Vec<(f64, Option<bool>)> = Vec::new();
    let du = |t: f64| u.derivative(t);
    for k in 0..n {
        if in_dense[k] {
            continue;
        }
        let isolated_flat = flat[k]
            && (k == 0 || !flat[k - 1] || in_dense[k - 1])
            && (k + 1 == n || !flat[k + 1] || in_dense[k + 1]);
        if isolated_flat || d1[k] == 0.0 {
            let rising = if k > 0 && k + 1 < n {
                Some(d1[k + 1] > d1[k - 1])
            } else {
                None
            };
            cands.push((grid[k], rising));
            continue;
        }
        if k + 1 < n && !in_dense[k + 1] && !flat[k + 1] && d1[k] * d1[k + 1] < 0.0 {
            let r = bracket_root(&du, grid[k], grid[k + 1], opts.tol)?;
            cands.push((r, Some(d1[k + 1] > 0.0)));
        }
    }
    for k in 0..n.saturating_sub(1) {
        if in_dense[k] || in_dense[k + 1] || d2[k] * d2[k + 1] >= 0.0 || d1[k] * d1[k + 1] < 0.0 {
            continue;
        }
        let d2f = |t: f64| Ok(u.slope_and_curvature(t)?.1);
        let r = bracket_root(&d2f, grid[k], grid[k + 1], opts.tol)?;
        if du(r)?.abs() <= 1e-9 * scale {
            cands.push((r, None));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    cands.dedup_by(|b, a| (b.0 - a.0).abs() <= 1e-9 * (1.0 + a.0.abs()));

    let width = dom.width();
    for (theta, rising) in cands {
        let uv = u.eval(theta)?;
        if uv <= 1e-14 * scale {
            set.diagnostics.push(format!(
                "critical point at theta = {theta} rejected: U = {uv} (curve through the origin)"
            ));
            continue;
        }
        let jet = u.jet(theta, 2)?;
        let u2 = jet.coeffs[2];
        let kind = if u2 > class_tol {
            CriticalKind::Minimum
        } else if u2 < -class_tol {
            CriticalKind::Maximum
        } else {
            match rising {
                Some(true) => CriticalKind::Minimum,
                Some(false) => CriticalKind::Maximum,
                None => CriticalKind::Inflection,
            }
        };
        let boundary = (theta - dom.lo).abs() <= 1e-9 * width || (dom.hi - theta).abs() <= 1e-9 * width;
        set.points.push(CriticalPoint {
            theta,
            depth: uv.sqrt(),
            kind,
            u_jet: jet,
            boundary,
        });
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UpperBoundReport {
    /// `(theta, rho - sqrt(U))` where the bound fails by more than `tol`.
    pub violations: Vec<(f64, f64)>,
    /// Abscissae where `rho` is within `tol` of `sqrt(U)`.
    pub contacts: Vec<f64>,
    pub max_excess: f64,
}

impl UpperBoundReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `rho <= sqrt(U) + tol` at every node.
pub fn upper_bound_check<'a>(
    nodes: impl IntoIterator<Item = &'a Node>,
    u: &ModulusModel,
    tol: f64,
) -> UpperBoundReport {
    let mut r = UpperBoundReport {
        max_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for n in nodes {
        let cap = match u.eval(n.theta) {
            Ok(v) => v.sqrt(),
            Err(_) => {
                r.violations.push((n.theta, f64::INFINITY));
                continue;
            }
        };
        let excess = n.rho - cap;
        r.max_excess = r.max_excess.max(excess);
        if excess > tol {
            r.violations.push((n.theta, excess));
        } else if excess.abs() <= tol {
            r.contacts.push(n.theta);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use std::f64::consts::PI;

    fn model(src: &str, lo: f64, hi: f64) -> ModulusModel {
        ModulusModel::parse(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn maximal_depth_fixtures() {
        assert_eq!(maximal_depth(&model("1", 0.0, 1.0), 0.4).unwrap(), 1.0);
        let p = model("pi^2/16 - pi^2/128*theta^2", 0.0, 2.0);
        assert!((maximal_depth(&p, 0.0).unwrap() - PI / 4.0).abs() < 1e-15);
        let l = model("25/cos(theta)^4", -1.0, 1.0);
        assert_eq!(maximal_depth(&l, 0.0).unwrap(), 5.0);
        assert!(maximal_depth(&model("theta - 1", 0.0, 2.0), 0.5).is_err());
    }

    #[test]
    fn parabola_has_boundary_maximum() {
        let s = find_critical_points(&model("pi^2/16 - pi^2/128*theta^2", 0.0, 2.0), 1e-13).unwrap();
        assert!(!s.dense);
        assert_eq!(s.points.len(), 1);
        let p = &s.points[0];
        assert_eq!(p.theta, 0.0);
        assert_eq!(p.kind, CriticalKind::Maximum);
        assert!(p.boundary);
    }

    #[test]
    fn constant_is_dense() {
        let s = find_critical_points(&model("1", 0.0, PI / 2.0), 1e-13).unwrap();
        assert!(s.dense);
        assert!(s.points.is_empty());
        assert_eq!(s.dense_intervals, vec![(0.0, PI / 2.0)]);
    }

    #[test]
    fn line_has_interior_minimum() {
        let s = find_critical_points(&model("25/cos(theta)^4", -1.0, 1.0), 1e-13).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!(s.points[0].theta.abs() < 1e-12);
        assert_eq!(s.points[0].kind, CriticalKind::Minimum);
        assert_eq!(s.points[0].depth, 5.0);
    }

    #[test]
    fn off_grid_extrema_and_inflection() {
        let s = find_critical_points(&model("2 + sin(3*theta)", 0.1, 3.0), 1e-13).unwrap();
        let expect = [PI / 6.0, PI / 2.0, 5.0 * PI / 6.0];
        assert_eq!(s.points.len(), 3);
        for (p, e) in s.points.iter().zip(expect) {
            assert!((p.theta - e).abs() < 1e-10);
        }
        assert_eq!(s.points[0].kind, CriticalKind::Maximum);
        assert_eq!(s.points[1].kind, CriticalKind::Minimum);

        let c = find_critical_points(&model("2 + (theta - 0.3)^3", 0.0, 1.0), 1e-13).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!((c.points[0].theta - 0.3).abs() < 1e-4);
        assert_eq!(c.points[0].kind, CriticalKind::Inflection);
    }

    #[test]
    fn partially_dense_modulus() {
        let u = ModulusModel::sampled(
            (0..=100).map(|k| k as f64 * 0.01).collect(),
            (0..=100)
                .map(|k| {
                    let t = k as f64 * 0.01;
                    if t < 0.5 { 1.0 } else { 1.0 + (t - 0.5).powi(4) }
                })
                .collect(),
        )
        .unwrap();
        let s = find_critical_points(&u, 1e-13).unwrap();
        assert!(s.dense);
        assert_eq!(s.dense_intervals[0].0, 0.0);
    }

    #[test]
    fn upper_bound_reports() {
        let one = model("1", 0.0, PI / 2.0);
        let nodes = |f: &dyn Fn(f64) -> f64| -> Vec<Node> {
            (0..=20).map(|k| {
                let t = k as f64 * PI / 40.0;
                Node::new(t, f(t), 0.0)
            }).collect()
        };
        let r = upper_bound_check(&nodes(&|t| t.cos()), &one, 1e-12);
        assert!(r.ok());
        assert_eq!(r.contacts, vec![0.0]);
        let r = upper_bound_check(&nodes(&|_| 1.0), &one, 1e-12);
        assert_eq!(r.contacts.len(), 21);
        let r = upper_bound_check(&nodes(&|_| 1.01), &one, 1e-12);
        assert_eq!(r.violations.len(), 21);
    }
}
