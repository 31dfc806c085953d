//! Functions known only on a grid.

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Values on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFn {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.len() != values.len() {
            return Err(Error::Input(format!(
                "grid has {} abscissae but {} values",
                thetas.len(),
                values.len()
            )));
        }
        if thetas.len() < 2 {
            return Err(Error::Input("a sampled function needs at least 2 points".into()));
        }
        if let Some(i) = thetas.iter().position(|t| !t.is_finite()) {
            return Err(Error::Input(format!("non-finite abscissa at index {i}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at index {i}")));
        }
        if let Some(i) = thetas.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(SampledFn { thetas, values })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.thetas[0],
            hi: *self.thetas.last().unwrap(),
        }
    }

    /// Index `i` of the cell `[t_i, t_{i+1}]` containing `x` (clamped).
    fn cell(&self, x: f64) -> usize {
        let n = self.thetas.len();
        match self.thetas.binary_search_by(|t| t.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn interp(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let (t0, t1) = (self.thetas[i], self.thetas[i + 1]);
        let w = (x - t0) / (t1 - t0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// First derivative at every node: three-point central differences on
    /// the interior (non-uniform spacing), one-sided three-point at the ends.
    pub fn node_derivatives(&self) -> Vec<f64> {
        let t = &self.thetas;
        let f = &self.values;
        let n = t.len();
        if n == 2 {
            let s = (f[1] - f[0]) / (t[1] - t[0]);
            return vec![s, s];
        }
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h1 = t[i] - t[i - 1];
            let h2 = t[i + 1] - t[i];
            d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1]
                + (h2 - h1) / (h1 * h2) * f[i]
                + h1 / (h2 * (h1 + h2)) * f[i + 1];
        }
        let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1]
            - h1 / (h2 * (h1 + h2)) * f[2];
        let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
        d[n - 1] = h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2]
            + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * f[n - 1];
        d
    }
}

/// Natural cubic spline through a [`SampledFn`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    data: SampledFn,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(data: SampledFn) -> Self {
        let t = data.thetas();
        let y = data.values();
        let n = t.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = t[j + 1] - t[j];
                let w = lower / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                sol[j] = (rhs[j] - upper[j] * sol[j + 1]) / diag[j];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        CubicSpline { data, m }
    }

    pub fn data(&self) -> &SampledFn {
        &self.data
    }

    pub fn domain(&self) -> Interval {
        self.data.domain()
    }

    /// Value and first two derivatives at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let i = self.data.cell(x);
        let t = self.data.thetas();
        let y = self.data.values();
        let h = t[i + 1] - t[i];
        let a = (t[i + 1] - x) / h;
        let b = (x - t[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let value = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0
            + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        [value, d1, d2]
    }
}
