//! Thin context around astro-float: fixed precision, one rounding mode, cached constants.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_rational::BigRational;

pub type Mp = BigFloat;

pub struct MpCtx {
    bits: usize,
    rm: RoundingMode,
    cc: Consts,
}

impl MpCtx {
    /// Context carrying at least `digits` decimal digits.
    pub fn with_digits(digits: usize) -> Self {
        let bits = ((digits as f64) * std::f64::consts::LOG2_10).ceil() as usize + 16;
        Self::with_bits(bits)
    }

    pub fn with_bits(bits: usize) -> Self {
        MpCtx {
            bits: bits.div_ceil(64) * 64,
            rm: RoundingMode::ToEven,
            cc: Consts::new().expect("astro-float constants cache"),
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn f(&self, x: f64) -> Mp {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn int(&self, k: i64) -> Mp {
        BigFloat::from_i64(k, self.bits)
    }

    pub fn rational(&mut self, r: &BigRational) -> Mp {
        let n = BigFloat::parse(&r.numer().to_string(), astro_float::Radix::Dec, self.bits, self.rm, &mut self.cc);
        let d = BigFloat::parse(&r.denom().to_string(), astro_float::Radix::Dec, self.bits, self.rm, &mut self.cc);
        n.div(&d, self.bits, self.rm)
    }

    pub fn add(&self, a: &Mp, b: &Mp) -> Mp {
        a.add(b, self.bits, self.rm)
    }
    pub fn sub(&self, a: &Mp, b: &Mp) -> Mp {
        a.sub(b, self.bits, self.rm)
    }
    pub fn mul(&self, a: &Mp, b: &Mp) -> Mp {
        a.mul(b, self.bits, self.rm)
    }
    pub fn div(&self, a: &Mp, b: &Mp) -> Mp {
        a.div(b, self.bits, self.rm)
    }
    pub fn sqrt(&self, a: &Mp) -> Mp {
        a.sqrt(self.bits, self.rm)
    }
    pub fn exp(&mut self, a: &Mp) -> Mp {
        a.exp(self.bits, self.rm, &mut self.cc)
    }
    pub fn cos(&mut self, a: &Mp) -> Mp {
        a.cos(self.bits, self.rm, &mut self.cc)
    }
    pub fn pi(&mut self) -> Mp {
        self.cc.pi(self.bits, self.rm)
    }
    /// a * b + c
    pub fn fma(&self, a: &Mp, b: &Mp, c: &Mp) -> Mp {
        self.add(&self.mul(a, b), c)
    }
}

/// Nearest double (up to one rounding of the top mantissa word).
pub fn to_f64(x: &Mp) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().unwrap_or(&0) as f64;
    let e = exponent as i32 - 64;
    let half = e / 2;
    let v = top * 2f64.powi(half) * 2f64.powi(e - half);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    #[test]
    fn round_trip() {
        let ctx = MpCtx::with_digits(40);
        for x in [1.0, -3.25e-7, 6.02e23, 1e-300, -2.5] {
            assert_eq!(to_f64(&ctx.f(x)), x);
        }
        assert_eq!(to_f64(&ctx.f(0.0)), 0.0);
    }

    #[test]
    fn rational_and_exp() {
        let mut ctx = MpCtx::with_digits(50);
        let r = ctx.rational(&ratio(8, 5));
        assert!((to_f64(&r) - 1.6).abs() < 1e-16);
        let e = ctx.exp(&ctx.f(-1000.0));
        assert_eq!(to_f64(&e), 0.0);
        let e1 = ctx.exp(&ctx.f(1.0));
        assert!((to_f64(&e1) - std::f64::consts::E).abs() < 1e-15);
    }
}
