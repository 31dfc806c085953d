//! Closed-form expressions in one variable.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?        exponent must fold to an integer
//! atom  := number | 'pi' | 'theta' | 't' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | tan | sqrt | exp | log
//! ```
//!
//! `theta` and `t` name the same independent variable.

mod parser;

use std::f64::consts::PI;
use std::fmt;

pub use parser::{parse, ParseError};

use crate::error::{Error, Result};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sqrt,
        Func::Exp,
        Func::Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse(s)
    }
}

fn eval_err(theta: f64, reason: impl Into<String>) -> Error {
    Error::Eval {
        theta,
        reason: reason.into(),
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn has_var(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.has_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_var() || b.has_var()
            }
        }
    }

    /// Replaces every occurrence of the variable by `with`.
    pub fn substitute(&self, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(with));
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Pi => Expr::Pi,
            Expr::Var => with.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Call(f, a) => Expr::Call(*f, sub(a)),
        }
    }

    /// Point evaluation. Fails with the offending `theta` when any
    /// intermediate value leaves the function's domain or overflows.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => PI,
            Expr::Var => theta,
            Expr::Neg(a) => -a.eval(theta)?,
            Expr::Add(a, b) => a.eval(theta)? + b.eval(theta)?,
            Expr::Sub(a, b) => a.eval(theta)? - b.eval(theta)?,
            Expr::Mul(a, b) => a.eval(theta)? * b.eval(theta)?,
            Expr::Div(a, b) => {
                let den = b.eval(theta)?;
                if den == 0.0 {
                    return Err(eval_err(theta, "division by zero"));
                }
                a.eval(theta)? / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(theta)?;
                if base == 0.0 && *n < 0 {
                    return Err(eval_err(theta, "zero raised to a negative power"));
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval(theta)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        if x.cos() == 0.0 {
                            return Err(eval_err(theta, "tan at a pole"));
                        }
                        x.tan()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(eval_err(theta, "sqrt of a negative value"));
                        }
                        x.sqrt()
                    }
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(eval_err(theta, "log of a non-positive value"));
                        }
                        x.ln()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(eval_err(theta, "non-finite value"))
        }
    }

    /// Truncated Taylor expansion of order `order` around `theta`.
    pub fn eval_series(&self, theta: f64, order: usize) -> Result<Series> {
        let fault = |f: crate::series::SeriesFault| eval_err(theta, f.describe());
        let s = match self {
            Expr::Num(v) => Series::constant(*v, order),
            Expr::Pi => Series::constant(PI, order),
            Expr::Var => Series::variable(theta, order),
            Expr::Neg(a) => -&a.eval_series(theta, order)?,
            Expr::Add(a, b) => &a.eval_series(theta, order)? + &b.eval_series(theta, order)?,
            Expr::Sub(a, b) => &a.eval_series(theta, order)? - &b.eval_series(theta, order)?,
            Expr::Mul(a, b) => &a.eval_series(theta, order)? * &b.eval_series(theta, order)?,
            Expr::Div(a, b) => a
                .eval_series(theta, order)?
                .div(&b.eval_series(theta, order)?)
                .map_err(fault)?,
            Expr::Pow(a, n) => a.eval_series(theta, order)?.powi(*n).map_err(fault)?,
            Expr::Call(f, a) => {
                let x = a.eval_series(theta, order)?;
                match f {
                    Func::Sin => x.sin_cos().0,
                    Func::Cos => x.sin_cos().1,
                    Func::Tan => {
                        let (s, c) = x.sin_cos();
                        s.div(&c).map_err(fault)?
                    }
                    Func::Sqrt => x.sqrt().map_err(fault)?,
                    Func::Exp => x.exp(),
                    Func::Log => x.ln().map_err(fault)?,
                }
            }
        };
        if s.is_finite() {
            Ok(s)
        } else {
            Err(eval_err(theta, "non-finite series coefficient"))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_bare(f)?;
            write!(f, ")")
        } else {
            self.write_bare(f)
        }
    }

    fn write_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "-{:?}", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var => write!(f, "theta"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " - ")?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "/")?;
                b.write_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn literal_one() {
        assert_eq!(parse("1").unwrap(), Expr::Num(1.0));
    }

    #[test]
    fn parabola_modulus() {
        let e = parse("pi^2/16 - pi^2/128*theta^2").unwrap();
        let expected = Expr::Sub(
            Box::new(Expr::div(Expr::Pow(Box::new(Expr::Pi), 2), Expr::Num(16.0))),
            Box::new(Expr::mul(
                Expr::div(Expr::Pow(Box::new(Expr::Pi), 2), Expr::Num(128.0)),
                Expr::Pow(Box::new(Expr::Var), 2),
            )),
        );
        assert_eq!(e, expected);
        assert_relative_eq!(e.eval(0.0).unwrap(), PI * PI / 16.0);
    }

    #[test]
    fn line_modulus() {
        let e = parse("25/cos(theta)^4").unwrap();
        assert_eq!(
            e,
            Expr::div(
                Expr::Num(25.0),
                Expr::Pow(Box::new(Expr::call(Func::Cos, Expr::Var)), 4)
            )
        );
        assert_relative_eq!(e.eval(0.0).unwrap(), 25.0);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        let e = parse("-theta^2").unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var), 2))));
        assert_relative_eq!(e.eval(3.0).unwrap(), -9.0);
    }

    #[test]
    fn subtraction_is_left_associative() {
        assert_relative_eq!(parse("10 - 4 - 3").unwrap().eval(0.0).unwrap(), 3.0);
        assert_relative_eq!(parse("12 / 3 / 2").unwrap().eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn negative_exponent() {
        let e = parse("2^-2").unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::Num(2.0)), -2));
        assert_relative_eq!(e.eval(0.0).unwrap(), 0.25);
    }

    #[test]
    fn t_and_theta_are_the_same_variable() {
        assert_eq!(parse("t + 1").unwrap(), parse("theta + 1").unwrap());
    }

    #[test]
    fn print_then_parse_is_identity() {
        for src in [
            "1",
            "pi^2/16 - pi^2/128*theta^2",
            "25/cos(theta)^4",
            "-(theta - 1)^3*2",
            "1 - (2 - 3)",
            "2/(3*theta)",
            "(-theta)^2",
            "--theta",
            "exp(log(sqrt(theta + 1)))*tan(theta)/sin(theta)",
            "1e-7 + 2.5e10",
        ] {
            let Ok(e) = parse(src) else { continue };
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }

    #[test]
    fn eval_errors_carry_theta() {
        let e = parse("log(theta - 1)").unwrap();
        match e.eval(0.5) {
            Err(Error::Eval { theta, .. }) => assert_eq!(theta, 0.5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("1/theta").unwrap().eval(0.0).is_err());
        assert!(parse("sqrt(theta)").unwrap().eval(-1.0).is_err());
    }

    #[test]
    fn series_matches_point_value_and_derivative() {
        let e = parse("25/cos(theta)^4").unwrap();
        let s = e.eval_series(0.0, 2).unwrap();
        let d = s.derivatives();
        assert_relative_eq!(d[0], 25.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(d[2], 100.0, epsilon = 1e-12);
    }

    #[test]
    fn substitute_replaces_variable() {
        let e = parse("theta^2 + 1").unwrap();
        let s = e.substitute(&parse("2*theta").unwrap());
        assert_relative_eq!(s.eval(3.0).unwrap(), 37.0);
    }
}
