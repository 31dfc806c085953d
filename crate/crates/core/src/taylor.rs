//! Analytic branches at critical initial conditions.
//!
//! At a critical point `rho' = 0` and `rho = sqrt(U)`. Differentiating
//! `rho'^2 + rho^2 = U` twice gives a quadratic for `rho''` with roots
//! `beta = (-rho0 +- sqrt(rho0^2 + 2 U''))/2`. Each root fixes the higher
//! derivatives through a linear recursion whose leading coefficient is
//! `2 (rho0 + n beta)` at derivative order `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulus::{Jet, ModulusModel};

pub const DEFAULT_ORDER: usize = 20;
/// Deepest lattice point `-rho0/(i+1)` scanned for degeneracy.
pub const LATTICE_DEPTH: usize = 10_000;

/// Degeneracy threshold for the leading coefficient.
pub fn tol_deg(rho0: f64) -> f64 {
    1e-9 * (1.0 + rho0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalIC {
    pub theta0: f64,
    pub rho0: f64,
    pub u_jet: Jet,
}

impl CriticalIC {
    /// Critical initial condition at `theta0` with a jet of order `order + 1`.
    pub fn new(u: &ModulusModel, theta0: f64, order: usize) -> Result<Self> {
        let u_jet = u.jet(theta0, order + 1)?;
        Self::from_jet(u_jet)
    }

    pub fn from_jet(u_jet: Jet) -> Result<Self> {
        let theta0 = u_jet.center;
        let u0 = u_jet.coeffs[0];
        if u0 <= 0.0 {
            return Err(Error::NotCritical {
                theta: theta0,
                reason: format!("U = {u0} is not positive"),
            });
        }
        let u1 = u_jet.coeffs.get(1).copied().unwrap_or(0.0);
        let tol = 1e-7 * (1.0 + u0);
        if u1.abs() > tol {
            return Err(Error::NotCritical {
                theta: theta0,
                reason: format!("U' = {u1} exceeds {tol}"),
            });
        }
        Ok(CriticalIC {
            theta0,
            rho0: u0.sqrt(),
            u_jet,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BranchStatus {
    Complete,
    /// The leading coefficient vanished at `iteration`; derivative
    /// `free_order` is a free parameter if `residual` is zero and no
    /// analytic branch exists otherwise.
    Degenerate {
        iteration: usize,
        free_order: usize,
        residual: f64,
    },
    ConstantCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Radius {
    Finite(f64),
    Infinite,
    Unknown,
}

impl Radius {
    /// Usable step bound: `Unknown` falls back to `default`.
    pub fn or(self, default: f64) -> f64 {
        match self {
            Radius::Finite(r) => r,
            Radius::Infinite => f64::INFINITY,
            Radius::Unknown => default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorBranch {
    pub ic: CriticalIC,
    /// `[rho0, 0, beta, rho_3, ...]`, derivative values at `theta0`.
    pub derivs: Vec<f64>,
    pub status: BranchStatus,
    pub radius: Radius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizTerms {
    pub n: usize,
    pub x: f64,
    pub y: f64,
}

pub fn second_derivative_roots(rho0: f64, u2: f64) -> Result<(f64, f64)> {
    let mut delta = rho0 * rho0 + 2.0 * u2;
    let tol = 1e-12 * (1.0 + rho0 * rho0 + 2.0 * u2.abs());
    if delta < -tol {
        return Err(Error::ComplexDiscriminant {
            discriminant: delta,
        });
    }
    if delta < tol {
        delta = 0.0;
    }
    let s = delta.sqrt();
    // The root near zero loses digits in the direct formula when U2 is small.
    let b1 = (-rho0 - s) / 2.0;
    let b2 = if b1 != 0.0 { -u2 / (2.0 * b1) } else { (-rho0 + s) / 2.0 };
    Ok((b1.min(b2), b1.max(b2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    /// `beta1 < 0 < beta2` (U'' > 0).
    Mixed,
    /// `(-rho0, 0)` (U'' = 0).
    NegativeAndZero,
    /// Both strictly negative and distinct.
    BothNegative,
    /// `beta1 = beta2 = -rho0/2` (vanishing discriminant).
    DoubleNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub class: SignClass,
    pub beta1: f64,
    pub beta2: f64,
    /// Row of the published interval table selected by `U''` (1-based).
    pub table_row: usize,
    /// Whether the roots fall inside that row's literal intervals.
    pub table_agrees: bool,
}

pub fn beta_sign_class(rho0: f64, u2: f64) -> Result<SignReport> {
    let (beta1, beta2) = second_derivative_roots(rho0, u2)?;
    let tol = 1e-12 * (1.0 + rho0);
    let class = if beta2 > tol {
        SignClass::Mixed
    } else if beta2 >= -tol {
        SignClass::NegativeAndZero
    } else if (beta2 - beta1).abs() <= tol {
        SignClass::DoubleNegative
    } else {
        SignClass::BothNegative
    };
    let r = rho0;
    let in_oc = |x: f64, lo: f64, hi: f64| x > lo && x <= hi;
    let in_co = |x: f64, lo: f64, hi: f64| x >= lo && x < hi;
    let (table_row, table_agrees) = if u2 >= 0.0 {
        (1, beta1 <= -r && beta2 >= 0.0)
    } else if u2 >= -4.0 * r * r / 9.0 {
        (2, in_oc(beta1, -r, -2.0 * r / 3.0) && in_co(beta2, -r / 3.0, 0.0))
    } else {
        (
            3,
            in_oc(beta1, -2.0 * r / 3.0, -r * r / 2.0) && in_co(beta2, -r / 2.0, -r / 3.0),
        )
    };
    Ok(SignReport {
        class,
        beta1,
        beta2,
        table_row,
        table_agrees,
    })
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64; n + 1];
    if n <= 60 {
        let mut c: u128 = 1;
        for k in 1..=n {
            c = c * (n + 1 - k) as u128 / k as u128;
            row[k] = c as f64;
        }
    } else {
        for k in 1..=n {
            row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
        }
    }
    row
}

/// Neumaier compensated sum.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut sum, mut comp, mut mag) = (0.0f64, 0.0f64, 0.0f64);
    for t in terms {
        mag += t.abs();
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    (sum + comp, mag)
}

fn leibniz_with_magnitude(n: usize, d: &[f64]) -> (LeibnizTerms, f64) {
    let c = binomial_row(n);
    let (x, mx) = compensated_sum((0..=n).map(|k| c[k] * d[k + 1] * d[n - k + 1]));
    let (y, my) = compensated_sum((0..=n).map(|k| c[k] * d[k] * d[n - k]));
    (LeibnizTerms { n, x, y }, mx + my)
}

/// `x_n = (rho' rho')^(n)` and `y_n = (rho rho)^(n)` by the Leibniz rule.
pub fn leibniz_terms(n: usize, derivs: &[f64]) -> Result<LeibnizTerms> {
    if derivs.len() < n + 2 {
        return Err(Error::Input(format!(
            "need {} derivatives for n = {n}, got {}",
            n + 2,
            derivs.len()
        )));
    }
    Ok(leibniz_with_magnitude(n, derivs).0)
}

/// Builds the derivative vector `[rho0, 0, beta, rho_3, ..., rho_N]`.
pub fn expand_branch(ic: &CriticalIC, beta: f64, order: usize) -> Result<TaylorBranch> {
    let order = order.max(2);
    if ic.u_jet.order() < order {
        return Err(Error::OrderUnavailable {
            requested: order,
            available: ic.u_jet.order(),
        });
    }
    let rho0 = ic.rho0;
    let tol = tol_deg(rho0);
    let mut d = vec![0.0; order + 2];
    d[0] = rho0;
    d[2] = beta;
    let mut status = BranchStatus::Complete;
    let mut len = order + 1;
    for i in 2..order {
        let n = i + 1;
        let alpha = 2.0 * (rho0 + n as f64 * beta);
        // Unknowns rho_n and rho_{n+1} are still zero in `d`.
        let (known, _) = leibniz_with_magnitude(n, &d);
        let rhs = ic.u_jet.coeffs[n] - (known.x + known.y);
        if alpha.abs() < tol {
            status = BranchStatus::Degenerate {
                iteration: i,
                free_order: n,
                residual: rhs,
            };
            len = n;
            break;
        }
        d[n] = rhs / alpha;
    }
    d.truncate(len);
    if status == BranchStatus::Complete {
        let mut fact = 1.0;
        let flat = d.iter().enumerate().skip(1).all(|(k, v)| {
            if k > 1 {
                fact *= k as f64;
            }
            (v / fact).abs() <= 1e-15 * (1.0 + rho0)
        });
        if flat {
            status = BranchStatus::ConstantCircle;
        }
    }
    let mut branch = TaylorBranch {
        ic: ic.clone(),
        derivs: d,
        status,
        radius: Radius::Unknown,
    };
    branch.radius = estimate_radius(&branch);
    Ok(branch)
}

/// Both analytic branches at a critical IC, ordered by `beta`. A double root
/// yields one branch.
pub fn branches_at(ic: &CriticalIC, order: usize) -> Result<Vec<TaylorBranch>> {
    let (b1, b2) = second_derivative_roots(ic.rho0, ic.u_jet.coeffs[2])?;
    let mut out = vec![expand_branch(ic, b1, order)?];
    if b2 != b1 {
        out.push(expand_branch(ic, b2, order)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", content = "iteration", rename_all = "snake_case")]
pub enum SafeRegion {
    /// `beta >= 0` or `beta < -rho0/3`: no iteration can degenerate.
    Safe,
    DegenerateAt(usize),
    PotentiallyDegenerate,
}

pub fn check_safe_region(rho0: f64, beta: f64) -> SafeRegion {
    let tol = tol_deg(rho0);
    if beta >= 0.0 || beta < -rho0 / 3.0 - tol {
        return SafeRegion::Safe;
    }
    let i = (rho0 / -beta - 1.0).round();
    if i >= 2.0 && i <= LATTICE_DEPTH as f64 {
        let i = i as usize;
        if (rho0 + (i + 1) as f64 * beta).abs() < tol {
            return SafeRegion::DegenerateAt(i);
        }
    }
    SafeRegion::PotentiallyDegenerate
}

impl TaylorBranch {
    pub fn beta(&self) -> f64 {
        self.derivs.get(2).copied().unwrap_or(0.0)
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn is_usable(&self) -> bool {
        !matches!(self.status, BranchStatus::Degenerate { .. })
    }

    pub fn within_radius(&self, theta: f64) -> bool {
        (theta - self.ic.theta0).abs() <= self.radius.or(f64::INFINITY)
    }

    /// `|x_n + y_n - U_n|` relative to the magnitude of the summed terms, for
    /// `n = 1 ..= order - 1`.
    pub fn recursion_residuals(&self) -> Vec<f64> {
        let mut d = self.derivs.clone();
        d.push(0.0);
        (1..self.order())
            .map(|n| {
                let (t, mag) = leibniz_with_magnitude(n, &d);
                let un = self.ic.u_jet.coeffs[n];
                (t.x + t.y - un).abs() / (1.0 + mag + un.abs())
            })
            .collect()
    }
}

/// Value and first derivative of the truncated series.
pub fn eval_series(branch: &TaylorBranch, theta: f64) -> Result<(f64, f64)> {
    if let BranchStatus::Degenerate { iteration, .. } = branch.status {
        return Err(Error::NoContinuation {
            theta: branch.ic.theta0,
            reason: format!("branch is degenerate at iteration {iteration}"),
        });
    }
    let h = theta - branch.ic.theta0;
    let d = &branch.derivs;
    let n = d.len() - 1;
    // Horner on the normalized coefficients d_k/k!.
    let mut fact = vec![1.0; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut rho = 0.0;
    for k in (0..=n).rev() {
        rho = rho * h + d[k] / fact[k];
    }
    let mut drho = 0.0;
    for k in (1..=n).rev() {
        drho = drho * h + d[k] / fact[k - 1];
    }
    Ok((rho, drho))
}

/// Root-test estimate of the convergence radius from the series tail.
pub fn estimate_radius(branch: &TaylorBranch) -> Radius {
    if branch.status == BranchStatus::ConstantCircle {
        return Radius::Infinite;
    }
    let d = &branch.derivs;
    let n = d.len() - 1;
    let mut log_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let scale = 1e-15 * (1.0 + branch.ic.rho0);
    let tail: Vec<(usize, f64)> = (n / 2..=n)
        .filter(|&k| k >= 3)
        .filter_map(|k| {
            let c = d[k].abs().ln() - log_fact[k];
            (c.is_finite() && c > scale.ln()).then_some((k, c))
        })
        .collect();
    if tail.is_empty() {
        let lower = (1..n / 2).any(|k| d[k].abs() > scale);
        return if lower || n >= 6 {
            Radius::Infinite
        } else {
            Radius::Unknown
        };
    }
    if tail.len() < 2 {
        return Radius::Unknown;
    }
    let est: Vec<f64> = tail
        .iter()
        .rev()
        .take(3)
        .map(|&(k, c)| (-c / k as f64).exp())
        .collect();
    let r = est.iter().copied().fold(f64::INFINITY, f64::min);
    if r.is_finite() && r > 0.0 {
        Radius::Finite(r)
    } else {
        Radius::Unknown
    }
}
