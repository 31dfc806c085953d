//! Truncated power series in one variable.
//!
//! A [`Series`] of order `n` stores the normalized Taylor coefficients
//! `c[k] = f^(k)(x0) / k!` for `k = 0..=n`. Arithmetic propagates the
//! coefficients exactly (up to rounding) through the usual recurrences, so
//! high derivatives never go through finite differences.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<f64>,
}

/// Reason a series operation is undefined at the expansion point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFault {
    DivisionByZero,
    SqrtOfNonPositive,
    LogOfNonPositive,
}

impl SeriesFault {
    pub fn describe(self) -> &'static str {
        match self {
            SeriesFault::DivisionByZero => "division by zero",
            SeriesFault::SqrtOfNonPositive => "sqrt of a non-positive value",
            SeriesFault::LogOfNonPositive => "log of a non-positive value",
        }
    }
}

impl Series {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Series { coeffs }
    }

    /// The independent variable expanded around `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut s = Series::constant(x0, order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Series { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Derivative values `f^(k)(x0) = k! c[k]`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    /// Series of the derivative; the order drops by one.
    pub fn derivative(&self) -> Series {
        if self.order() == 0 {
            return Series::constant(0.0, 0);
        }
        let coeffs = (1..=self.order())
            .map(|k| k as f64 * self.coeffs[k])
            .collect();
        Series { coeffs }
    }

    pub fn truncate(&self, order: usize) -> Series {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        Series { coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, k: f64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn div(&self, rhs: &Series) -> Result<Series, SeriesFault> {
        let n = self.order().min(rhs.order());
        let b0 = rhs.coeffs[0];
        if b0 == 0.0 {
            return Err(SeriesFault::DivisionByZero);
        }
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Ok(Series { coeffs: q })
    }

    pub fn recip(&self) -> Result<Series, SeriesFault> {
        Series::constant(1.0, self.order()).div(self)
    }

    pub fn powi(&self, exp: i32) -> Result<Series, SeriesFault> {
        let base = if exp < 0 { self.recip()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Series::constant(1.0, self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Series {
        let n = self.order();
        let a = &self.coeffs;
        let mut e = vec![0.0; n + 1];
        e[0] = a[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Series { coeffs: e }
    }

    pub fn ln(&self) -> Result<Series, SeriesFault> {
        let n = self.order();
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            return Err(SeriesFault::LogOfNonPositive);
        }
        let mut l = vec![0.0; n + 1];
        l[0] = a[0].ln();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..k {
                acc += j as f64 * l[j] * a[k - j];
            }
            l[k] = (a[k] - acc / k as f64) / a[0];
        }
        Ok(Series { coeffs: l })
    }

    /// Returns `(sin, cos)` of the series.
    pub fn sin_cos(&self) -> (Series, Series) {
        let n = self.order();
        let a = &self.coeffs;
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..=n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                let ja = j as f64 * a[j];
                ds += ja * c[k - j];
                dc += ja * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = -dc / k as f64;
        }
        (Series { coeffs: s }, Series { coeffs: c })
    }

    pub fn sqrt(&self) -> Result<Series, SeriesFault> {
        let n = self.order();
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            // sqrt(0) has no power-series expansion past order 0.
            if a[0] == 0.0 && n == 0 {
                return Ok(Series::constant(0.0, 0));
            }
            return Err(SeriesFault::SqrtOfNonPositive);
        }
        let mut r = vec![0.0; n + 1];
        r[0] = a[0].sqrt();
        for k in 1..=n {
            let mut acc = a[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r[k] = acc / (2.0 * r[0]);
        }
        Ok(Series { coeffs: r })
    }

    /// Horner evaluation of the truncated polynomial at offset `dx`.
    pub fn eval_at(&self, dx: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * dx + c)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let n = self.order().min(rhs.order());
        Series {
            coeffs: (0..=n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let n = self.order().min(rhs.order());
        Series {
            coeffs: (0..=n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum())
            .collect();
        Series { coeffs }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    #[test]
    fn exp_of_variable_at_zero() {
        let e = Series::variable(0.0, 6).exp();
        for (k, c) in e.coeffs().iter().enumerate() {
            assert_relative_eq!(*c, 1.0 / factorial(k), epsilon = 1e-15);
        }
    }

    #[test]
    fn sin_cos_derivatives_cycle() {
        let x0 = 0.7;
        let (s, c) = Series::variable(x0, 8).sin_cos();
        let ds = s.derivatives();
        let dc = c.derivatives();
        let expected_s = [x0.sin(), x0.cos(), -x0.sin(), -x0.cos()];
        let expected_c = [x0.cos(), -x0.sin(), -x0.cos(), x0.sin()];
        for k in 0..=8 {
            assert_relative_eq!(ds[k], expected_s[k % 4], epsilon = 1e-13);
            assert_relative_eq!(dc[k], expected_c[k % 4], epsilon = 1e-13);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let x = Series::variable(1.3, 10);
        let f = &(&x * &x) + &Series::constant(2.0, 10);
        let r = f.sqrt().unwrap();
        let back = &r * &r;
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let x = Series::variable(0.4, 9);
        let back = x.exp().ln().unwrap();
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn negative_power_is_reciprocal_power() {
        let x = Series::variable(0.9, 7);
        let a = x.powi(-3).unwrap();
        let b = x.powi(3).unwrap().recip().unwrap();
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert_relative_eq!(*p, *q, max_relative = 1e-13);
        }
    }

    #[test]
    fn faults_are_reported() {
        let zero = Series::constant(0.0, 3);
        assert_eq!(zero.recip(), Err(SeriesFault::DivisionByZero));
        assert_eq!(zero.sqrt(), Err(SeriesFault::SqrtOfNonPositive));
        assert_eq!(
            Series::constant(-1.0, 3).ln(),
            Err(SeriesFault::LogOfNonPositive)
        );
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let (s, _) = Series::variable(0.0, 5).sin_cos();
        let d = s.derivative();
        assert_eq!(d.order(), 4);
        assert_relative_eq!(d.coeffs()[0], 1.0);
        assert_relative_eq!(d.coeffs()[2], -0.5);
    }
}
