//! Smooth test functions with analytic directional derivatives.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::Evaluate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `Π_i sin(2π x_i)`.
    Sinusoid { dim: usize },
    /// `Π_i exp(-(x_i - 0.4)² / (2·0.2²))`.
    Gaussian { dim: usize },
    /// `Π_i q_i(x_i)` with `q_i` of degree `degrees[i]`.
    TensorPolynomial { degrees: Vec<usize> },
}

const GAUSS_CENTER: f64 = 0.4;
const GAUSS_WIDTH: f64 = 0.2;

impl TestFunction {
    /// Parses a catalog name for a given dimension; polynomials take the
    /// spline degrees.
    pub fn from_name(name: &str, degrees: &[usize]) -> Result<Self> {
        let dim = degrees.len();
        match name.parse::<Catalog>()? {
            Catalog::Sinusoid => Ok(Self::Sinusoid { dim }),
            Catalog::Gaussian => Ok(Self::Gaussian { dim }),
            Catalog::Polynomial => Ok(Self::TensorPolynomial { degrees: degrees.to_vec() }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Sinusoid { dim } | Self::Gaussian { dim } => *dim,
            Self::TensorPolynomial { degrees } => degrees.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sinusoid { .. } => "sinusoid",
            Self::Gaussian { .. } => "gaussian",
            Self::TensorPolynomial { .. } => "polynomial",
        }
    }

    fn factor(&self, dir: usize, order: usize, t: f64) -> f64 {
        match self {
            Self::Sinusoid { .. } => TAU.powi(order as i32) * (TAU * t + order as f64 * PI / 2.0).sin(),
            Self::Gaussian { .. } => {
                let s = GAUSS_WIDTH * 2f64.sqrt();
                let u = (t - GAUSS_CENTER) / s;
                (-1.0 / s).powi(order as i32) * hermite(order, u) * (-u * u).exp()
            }
            Self::TensorPolynomial { degrees } => {
                // q(t) = Σ_k (-1)^k t^k / (k+1)
                (order..=degrees[dir])
                    .map(|k| {
                        let falling: f64 = (k - order + 1..=k).map(|j| j as f64).product();
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sign / (k as f64 + 1.0) * falling * t.powi((k - order) as i32)
                    })
                    .sum()
            }
        }
    }

    /// `∂^order f / ∂x_dir^order` at `x`.
    pub fn derivative(&self, dir: usize, order: usize, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &t)| self.factor(i, if i == dir { order } else { 0 }, t))
            .product()
    }
}

impl Evaluate for TestFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &t)| self.factor(i, 0, t)).product()
    }
}

/// Physicists' Hermite polynomial `H_n(u)`.
fn hermite(n: usize, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * u * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Catalog {
    Sinusoid,
    Gaussian,
    Polynomial,
}

impl FromStr for Catalog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sin" | "sinusoid" => Ok(Self::Sinusoid),
            "gauss" | "gaussian" => Ok(Self::Gaussian),
            "poly" | "polynomial" => Ok(Self::Polynomial),
            other => Err(Error::Precondition(format!(
                "unknown test function '{other}', expected sinusoid, gaussian or polynomial"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference(f: &TestFunction, dir: usize, order: usize, x: &[f64]) -> f64 {
        let h = 1e-3;
        if order == 0 {
            return f.derivative(dir, 0, x);
        }
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[dir] += h;
        b[dir] -= h;
        (f.derivative(dir, order - 1, &a) - f.derivative(dir, order - 1, &b)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_differences() {
        let x = [0.3, 0.71];
        for f in [
            TestFunction::Sinusoid { dim: 2 },
            TestFunction::Gaussian { dim: 2 },
            TestFunction::TensorPolynomial { degrees: vec![3, 2] },
        ] {
            assert_eq!(f.derivative(0, 0, &x), f.eval(&x));
            for dir in 0..2 {
                for order in 1..=4 {
                    let exact = f.derivative(dir, order, &x);
                    let approx = finite_difference(&f, dir, order, &x);
                    assert!((exact - approx).abs() < 1e-4 * (1.0 + exact.abs()), "{f:?} {dir} {order}");
                }
            }
        }
    }

    #[test]
    fn polynomial_derivative_vanishes_beyond_degree() {
        let f = TestFunction::TensorPolynomial { degrees: vec![2] };
        assert_eq!(f.derivative(0, 3, &[0.4]), 0.0);
        assert!((f.eval(&[1.0]) - (1.0 - 0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn names() {
        assert_eq!(TestFunction::from_name("sin", &[2]).unwrap(), TestFunction::Sinusoid { dim: 1 });
        assert!(TestFunction::from_name("cosh", &[2]).is_err());
    }
}
