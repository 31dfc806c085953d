//! Perspective parametrizations of planar curves.
//!
//! The polar form maps a viewing angle `theta` to `rho(theta) (cos theta, sin theta)`.
//! The two Cartesian forms use the image-line coordinate `t` with projection
//! direction `(t, 1)`: `BarRho` measures depth to the x-axis, `TildeRho`
//! distance to the origin, related by `tilde = bar * sqrt(1 + t^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::interval::Interval;
use crate::sampled::SampledFn;

const POSITIVITY_PROBES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DepthForm {
    ClosedForm(Expr),
    Sampled(SampledFn),
}

/// A strictly positive depth function on a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFunction {
    domain: Interval,
    form: DepthForm,
}

impl DepthFunction {
    /// Closed-form depth; positivity is probed on a uniform grid.
    pub fn closed(expr: Expr, domain: Interval) -> Result<Self> {
        for theta in domain.grid(POSITIVITY_PROBES) {
            let rho = expr.eval(theta)?;
            if rho <= 0.0 {
                return Err(Error::Domain(format!(
                    "depth must be positive: rho({theta}) = {rho}"
                )));
            }
        }
        Ok(DepthFunction {
            domain,
            form: DepthForm::ClosedForm(expr),
        })
    }

    pub fn sampled(thetas: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        let data = SampledFn::new(thetas, rhos)?;
        if let Some(i) = data.values().iter().position(|r| *r <= 0.0) {
            return Err(Error::Domain(format!(
                "depth must be positive: sample {i} is {}",
                data.values()[i]
            )));
        }
        Ok(DepthFunction {
            domain: data.domain(),
            form: DepthForm::Sampled(data),
        })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn form(&self) -> &DepthForm {
        &self.form
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        self.domain.check(theta)?;
        match &self.form {
            DepthForm::ClosedForm(e) => e.eval(theta),
            DepthForm::Sampled(s) => Ok(s.interp(theta)),
        }
    }

    /// `(rho, rho')` at `theta`. Closed forms are differentiated exactly;
    /// grids by finite differences, linearly interpolated between nodes.
    pub fn eval_with_derivative(&self, theta: f64) -> Result<(f64, f64)> {
        self.domain.check(theta)?;
        match &self.form {
            DepthForm::ClosedForm(e) => {
                let s = e.eval_series(theta, 1)?;
                Ok((s.coeffs()[0], s.coeffs()[1]))
            }
            DepthForm::Sampled(s) => {
                let d = SampledFn::new(s.thetas().to_vec(), s.node_derivatives())?;
                Ok((s.interp(theta), d.interp(theta)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CartesianKind {
    /// Distance to the x-axis: `X(t) = bar(t) (t, 1)`.
    BarRho,
    /// Distance to the origin: `X(t) = tilde(t) (t, 1) / sqrt(1 + t^2)`.
    TildeRho,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianParametrization {
    pub kind: CartesianKind,
    /// Depth as a function of the image-line coordinate `t`.
    pub depth: DepthFunction,
}

impl CartesianParametrization {
    pub fn point(&self, t: f64) -> Result<PlanarPoint> {
        let d = self.depth.eval(t)?;
        let scale = match self.kind {
            CartesianKind::BarRho => d,
            CartesianKind::TildeRho => d / (1.0 + t * t).sqrt(),
        };
        Ok(PlanarPoint {
            x: scale * t,
            y: scale,
        })
    }
}

pub fn polar_to_cartesian(theta: f64, rho: f64) -> Result<PlanarPoint> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("depth must be positive, got {rho}")));
    }
    Ok(PlanarPoint {
        x: rho * theta.cos(),
        y: rho * theta.sin(),
    })
}

/// Angle of the ray through image-line point `t`: `arctan(1/t)` taken in
/// `(0, pi)`, with `t = 0` mapped to `pi/2`. Strictly decreasing in `t`.
pub fn image_line_to_angle(t: f64) -> f64 {
    1.0f64.atan2(t)
}

/// Inverse of [`image_line_to_angle`] on `(0, pi)`: `t = cot(theta)`.
pub fn angle_to_image_line(theta: f64) -> f64 {
    theta.cos() / theta.sin()
}

/// Rewrites a Cartesian parametrization as a polar depth function with
/// `rho(eta(t)) = tilde(t)`.
pub fn convert(param: &CartesianParametrization) -> Result<DepthFunction> {
    let t_dom = param.depth.domain();
    let domain = Interval::new(image_line_to_angle(t_dom.hi), image_line_to_angle(t_dom.lo))?;
    match param.depth.form() {
        DepthForm::ClosedForm(e) => {
            let cot = Expr::div(Expr::call(Func::Cos, Expr::Var), Expr::call(Func::Sin, Expr::Var));
            let in_theta = e.substitute(&cot);
            let polar = match param.kind {
                // sqrt(1 + cot^2) = 1 / sin on (0, pi)
                CartesianKind::BarRho => Expr::div(in_theta, Expr::call(Func::Sin, Expr::Var)),
                CartesianKind::TildeRho => in_theta,
            };
            DepthFunction::closed(polar, domain)
        }
        DepthForm::Sampled(s) => {
            let mut pairs: Vec<(f64, f64)> = s
                .thetas()
                .iter()
                .zip(s.values())
                .map(|(&t, &d)| {
                    let tilde = match param.kind {
                        CartesianKind::BarRho => d * (1.0 + t * t).sqrt(),
                        CartesianKind::TildeRho => d,
                    };
                    (image_line_to_angle(t), tilde)
                })
                .collect();
            pairs.reverse();
            let (thetas, rhos) = pairs.into_iter().unzip();
            DepthFunction::sampled(thetas, rhos)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub vector: (f64, f64),
    /// `rho'^2 + rho^2`.
    pub speed_sq: f64,
}

/// Velocity of the polar parametrization at `theta`.
pub fn velocity(rho: &DepthFunction, theta: f64) -> Result<Velocity> {
    let (r, dr) = rho.eval_with_derivative(theta)?;
    let (s, c) = theta.sin_cos();
    Ok(Velocity {
        vector: (dr * c - r * s, dr * s + r * c),
        speed_sq: dr * dr + r * r,
    })
}
