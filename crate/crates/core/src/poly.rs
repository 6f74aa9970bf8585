//! Real polynomials in ascending-degree storage, optionally shadowed by exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial {
            coeffs,
            exact: None,
        }
    }

    pub fn from_rationals(mut exact: Vec<BigRational>) -> Self {
        while exact.last().is_some_and(|c| c.is_zero()) {
            exact.pop();
        }
        let coeffs = exact.iter().map(rational_to_f64).collect();
        Polynomial {
            coeffs,
            exact: Some(exact),
        }
    }

    pub fn zero() -> Self {
        Polynomial::new(Vec::new())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        let exact = self.exact.as_ref().map(|ex| {
            ex.iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect::<Vec<_>>()
        });
        match exact {
            Some(ex) => Polynomial::from_rationals(ex),
            None => Polynomial::new(coeffs),
        }
    }

    pub fn nth_derivative(&self, k: usize) -> Polynomial {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    /// `self + factor * other`, exact when both operands are exact.
    pub fn add_scaled(&self, other: &Polynomial, factor: f64) -> Polynomial {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            if let Some(f) = BigRational::from_float(factor) {
                let n = a.len().max(b.len());
                let out = (0..n)
                    .map(|k| {
                        let x = a.get(k).cloned().unwrap_or_else(BigRational::zero);
                        let y = b.get(k).cloned().unwrap_or_else(BigRational::zero);
                        x + y * &f
                    })
                    .collect();
                return Polynomial::from_rationals(out);
            }
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let out = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(0.0)
                    + factor * other.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        Polynomial::new(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Exact rational coefficients, falling back to the binary value of each f64.
    pub fn rationals(&self) -> Vec<BigRational> {
        match &self.exact {
            Some(ex) => ex.clone(),
            None => self
                .coeffs
                .iter()
                .map(|&c| BigRational::from_float(c).unwrap_or_else(BigRational::zero))
                .collect(),
        }
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse `"8/5"`, `"-0.25"`, `"1.5e-3"` or an integer into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Config(format!("cannot parse coefficient {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Ok(if neg { -value } else { value })
}

/// A coefficient as written in JSON: a number or a decimal/fraction string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Text(String),
}

impl Coefficient {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            Coefficient::Number(x) => BigRational::from_float(*x)
                .ok_or_else(|| Error::Config(format!("non-finite coefficient {x}"))),
            Coefficient::Text(s) => parse_rational(s),
        }
    }
}

pub fn polynomial_from_coefficients(cs: &[Coefficient]) -> Result<Polynomial> {
    let ex = cs.iter().map(Coefficient::to_rational).collect::<Result<Vec<_>>>()?;
    Ok(Polynomial::from_rationals(ex))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Render a rational as `"n/d"` or `"n"`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(ser)
    }
}

pub fn from_i64_slice(cs: &[i64]) -> Polynomial {
    Polynomial::from_rationals(cs.iter().map(|&c| BigRational::from_i64(c).unwrap()).collect())
}
