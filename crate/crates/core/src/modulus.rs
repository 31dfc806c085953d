//! The squared speed `U(theta) = rho'^2 + rho^2` with derivative access.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::param::{DepthForm, DepthFunction};
use crate::sampled::{CubicSpline, SampledFn};

/// Negative values down to this are rounding noise and read as zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

const VALIDATION_CELLS: usize = 1024;

/// Value and derivatives `[U, U', ..., U^(N)]` at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub center: f64,
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.coeffs[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModulusForm {
    /// `U` given directly as an expression.
    Expr(Expr),
    /// `U = rho'^2 + rho^2` for a closed-form depth `rho`.
    DepthOf(Expr),
    /// Cubic spline through samples; derivatives up to order 2.
    Spline(CubicSpline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusModel {
    domain: Interval,
    form: ModulusForm,
}

impl ModulusModel {
    pub fn closed(expr: Expr, domain: Interval) -> Self {
        ModulusModel {
            domain,
            form: ModulusForm::Expr(expr),
        }
    }

    pub fn parse(src: &str, domain: Interval) -> Result<Self> {
        Ok(Self::closed(crate::expr::parse(src)?, domain))
    }

    pub fn sampled(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let data = SampledFn::new(thetas, values)?;
        Ok(ModulusModel {
            domain: data.domain(),
            form: ModulusForm::Spline(CubicSpline::new(data)),
        })
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let (t, u) = read_grid_csv(path)?;
        Self::sampled(t, u)
    }

    /// Forward model: the modulus generated by a depth function.
    pub fn from_depth(rho: &DepthFunction) -> Result<Self> {
        match rho.form() {
            DepthForm::ClosedForm(e) => Ok(ModulusModel {
                domain: rho.domain(),
                form: ModulusForm::DepthOf(e.clone()),
            }),
            DepthForm::Sampled(s) => {
                let u = s
                    .values()
                    .iter()
                    .zip(s.node_derivatives())
                    .map(|(r, d)| d * d + r * r)
                    .collect();
                Self::sampled(s.thetas().to_vec(), u)
            }
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn form(&self) -> &ModulusForm {
        &self.form
    }

    /// Restricts the model to a sub-interval.
    pub fn with_domain(&self, domain: Interval) -> Result<Self> {
        if !(self.domain.contains_approx(domain.lo) && self.domain.contains_approx(domain.hi)) {
            return Err(Error::Domain(format!(
                "[{}, {}] not inside [{}, {}]",
                domain.lo, domain.hi, self.domain.lo, self.domain.hi
            )));
        }
        Ok(ModulusModel {
            domain,
            form: self.form.clone(),
        })
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.form, ModulusForm::Spline(_))
    }

    /// Highest derivative order available exactly; `None` means unbounded.
    pub fn max_order(&self) -> Option<usize> {
        match self.form {
            ModulusForm::Spline(_) => Some(2),
            _ => None,
        }
    }

    /// Unclamped value.
    pub fn raw(&self, theta: f64) -> Result<f64> {
        self.domain.check(theta)?;
        match &self.form {
            ModulusForm::Expr(e) => e.eval(theta),
            ModulusForm::DepthOf(e) => {
                let c = e.eval_series(theta, 1)?;
                let (r, d) = (c.coeffs()[0], c.coeffs()[1]);
                Ok(d * d + r * r)
            }
            ModulusForm::Spline(s) => Ok(s.eval(theta)[0]),
        }
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        let v = self.raw(theta)?;
        if v >= 0.0 {
            Ok(v)
        } else if v >= -NEGATIVE_CLAMP {
            Ok(0.0)
        } else {
            Err(Error::InvalidModulus { theta, value: v })
        }
    }

    /// `[U, U', ..., U^(order)]` at `theta`.
    pub fn jet(&self, theta: f64, order: usize) -> Result<Jet> {
        if let Some(max) = self.max_order() {
            if order > max {
                return Err(Error::OrderUnavailable {
                    requested: order,
                    available: max,
                });
            }
        }
        let value = self.eval(theta)?;
        let mut coeffs = match &self.form {
            ModulusForm::Expr(e) => e.eval_series(theta, order)?.derivatives(),
            ModulusForm::DepthOf(e) => {
                let rho = e.eval_series(theta, order + 1)?;
                let d = rho.derivative();
                let rho = rho.truncate(order);
                (&(&d * &d) + &(&rho * &rho)).derivatives()
            }
            ModulusForm::Spline(s) => s.eval(theta)[..=order].to_vec(),
        };
        coeffs[0] = value;
        Ok(Jet {
            center: theta,
            coeffs,
        })
    }

    /// `U'(theta)`.
    pub fn derivative(&self, theta: f64) -> Result<f64> {
        self.domain.check(theta)?;
        Ok(match &self.form {
            ModulusForm::Spline(s) => s.eval(theta)[1],
            _ => self.jet(theta, 1)?.coeffs[1],
        })
    }

    /// `(U', U'')` at `theta`.
    pub fn slope_and_curvature(&self, theta: f64) -> Result<(f64, f64)> {
        self.domain.check(theta)?;
        Ok(match &self.form {
            ModulusForm::Spline(s) => {
                let [_, d1, d2] = s.eval(theta);
                (d1, d2)
            }
            _ => {
                let j = self.jet(theta, 2)?;
                (j.coeffs[1], j.coeffs[2])
            }
        })
    }

    /// Largest value over a probe grid; used for tolerance scaling.
    pub fn max_value(&self) -> f64 {
        self.domain
            .grid(VALIDATION_CELLS)
            .into_iter()
            .filter_map(|t| self.eval(t).ok())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let probes = match &self.form {
            ModulusForm::Spline(s) => {
                let mut p = s.data().thetas().to_vec();
                p.extend(self.domain.grid(VALIDATION_CELLS));
                p.sort_by(f64::total_cmp);
                p.dedup();
                p
            }
            _ => self.domain.grid(VALIDATION_CELLS),
        };
        for theta in probes {
            match self.raw(theta) {
                Ok(v) if v < -NEGATIVE_CLAMP => report.negative.push(theta),
                Ok(_) => {}
                Err(Error::Eval { reason, .. }) if reason.contains("non-finite") => {
                    report.non_finite.push(theta)
                }
                Err(e) => report.eval_errors.push((theta, e.to_string())),
            }
        }
        report.clean = report.is_clean();
        report
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub clean: bool,
    /// Probe abscissae where `U < 0` beyond rounding.
    pub negative: Vec<f64>,
    pub non_finite: Vec<f64>,
    pub eval_errors: Vec<(f64, String)>,
    /// Grid indices of NaN/infinite samples.
    pub bad_samples: Vec<usize>,
    /// Grid indices where the abscissae stop increasing.
    pub non_monotone: Vec<usize>,
}

impl ValidationReport {
    fn is_clean(&self) -> bool {
        self.negative.is_empty()
            && self.non_finite.is_empty()
            && self.eval_errors.is_empty()
            && self.bad_samples.is_empty()
            && self.non_monotone.is_empty()
    }

    /// First offending abscissa of the negative region, if any.
    pub fn negative_span(&self) -> Option<(f64, f64)> {
        let lo = self.negative.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.negative.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Checks raw grid data before it becomes a model.
pub fn validate_samples(thetas: &[f64], values: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, (t, v)) in thetas.iter().zip(values).enumerate() {
        if !t.is_finite() || !v.is_finite() {
            report.bad_samples.push(i);
        } else if *v < -NEGATIVE_CLAMP {
            report.negative.push(*t);
        }
    }
    for i in 1..thetas.len() {
        if !(thetas[i] > thetas[i - 1]) {
            report.non_monotone.push(i);
        }
    }
    if thetas.len() != values.len() {
        report
            .eval_errors
            .push((f64::NAN, "column lengths differ".to_string()));
    }
    report.clean = report.is_clean();
    report
}

/// Reads a two-column `theta,<value>` CSV. A header row is optional.
pub fn read_grid_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut thetas = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Input(e.to_string()))?;
        if record.len() < 2 {
            return Err(Error::Input(format!("line {}: expected 2 columns", line + 1)));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().take(2).map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                thetas.push(v[0]);
                values.push(v[1]);
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Input(format!("line {}: {e}", line + 1))),
        }
    }
    Ok((thetas, values))
}
