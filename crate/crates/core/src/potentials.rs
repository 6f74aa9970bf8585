//! The deformation family V_{s,t} = V0 + s V1 + t V2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{polynomial_from_coefficients, ratio, Coefficient, Polynomial};

#[derive(Debug, Clone)]
pub struct DeformedFamily {
    pub v0: Polynomial,
    pub v1: Polynomial,
    pub v2: Polynomial,
    pub confinement_checked: bool,
}

impl DeformedFamily {
    /// Builds the family, rejecting a V0 that is not of even degree >= 4 with positive leading term.
    pub fn new(v0: Polynomial, v1: Polynomial, v2: Polynomial) -> Result<Self> {
        match v0.degree() {
            Some(d) if d >= 4 && d % 2 == 0 && v0.leading() > 0.0 => {}
            d => {
                return Err(Error::InvalidFamily(format!(
                    "v0 must have even degree >= 4 and positive leading coefficient (degree {d:?}, leading {})",
                    v0.leading()
                )))
            }
        }
        Ok(DeformedFamily {
            v0,
            v1,
            v2,
            confinement_checked: true,
        })
    }

    /// No confinement check; for semicircle-type sanity inputs.
    pub fn unchecked(v0: Polynomial, v1: Polynomial, v2: Polynomial) -> Self {
        DeformedFamily {
            v0,
            v1,
            v2,
            confinement_checked: false,
        }
    }

    pub fn combined(&self, s: f64, t: f64) -> Polynomial {
        self.v0.add_scaled(&self.v1, s).add_scaled(&self.v2, t)
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        let v0 = polynomial_from_coefficients(&spec.v0)?;
        let v1 = polynomial_from_coefficients(&spec.v1)?;
        let v2 = polynomial_from_coefficients(&spec.v2)?;
        DeformedFamily::new(v0, v1, v2)
    }
}

/// JSON shape `{"v0": [..], "v1": [..], "v2": [..]}`, ascending degree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub v0: Vec<Coefficient>,
    #[serde(default)]
    pub v1: Vec<Coefficient>,
    #[serde(default)]
    pub v2: Vec<Coefficient>,
}

impl FamilySpec {
    pub fn example() -> Self {
        let t = |s: &str| Coefficient::Text(s.to_string());
        FamilySpec {
            v0: vec![t("0"), t("8/5"), t("1/5"), t("-4/15"), t("1/20")],
            v1: vec![t("0"), t("1")],
            v2: vec![t("0"), t("-6"), t("0"), t("1")],
        }
    }
}

/// V0 = x^4/20 - 4x^3/15 + x^2/5 + 8x/5, V1 = x, V2 = x^3 - 6x; critical edge at b = 2.
pub fn build_example_family() -> DeformedFamily {
    let v0 = Polynomial::from_rationals(vec![
        ratio(0, 1),
        ratio(8, 5),
        ratio(1, 5),
        ratio(-4, 15),
        ratio(1, 20),
    ]);
    let v1 = Polynomial::from_rationals(vec![ratio(0, 1), ratio(1, 1)]);
    let v2 = Polynomial::from_rationals(vec![ratio(0, 1), ratio(-6, 1), ratio(0, 1), ratio(1, 1)]);
    DeformedFamily::new(v0, v1, v2).expect("example family is confining")
}

pub fn eval_deformed(f: &DeformedFamily, s: f64, t: f64, x: f64) -> f64 {
    f.v0.eval(x) + s * f.v1.eval(x) + t * f.v2.eval(x)
}

pub fn eval_deformed_derivative(f: &DeformedFamily, s: f64, t: f64, x: f64) -> f64 {
    f.v0.derivative().eval(x) + s * f.v1.derivative().eval(x) + t * f.v2.derivative().eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_values() {
        let f = build_example_family();
        assert!((eval_deformed(&f, 0.0, 0.0, 2.0) - 8.0 / 3.0).abs() < 1e-14);
        assert_eq!(eval_deformed(&f, 1.0, 0.0, 0.0), 0.0);
        assert!((eval_deformed(&f, 0.0, 1.0, 1.0) + 41.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_odd_or_low_degree() {
        let p2 = Polynomial::new(vec![0.0, 0.0, 0.5]);
        assert!(DeformedFamily::new(p2, Polynomial::zero(), Polynomial::zero()).is_err());
        let neg = Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(DeformedFamily::new(neg, Polynomial::zero(), Polynomial::zero()).is_err());
    }

    #[test]
    fn spec_parses_to_example() {
        let f = DeformedFamily::from_spec(&FamilySpec::example()).unwrap();
        let g = build_example_family();
        assert_eq!(f.v0.exact(), g.v0.exact());
        assert_eq!(f.v2.exact(), g.v2.exact());
    }
}
