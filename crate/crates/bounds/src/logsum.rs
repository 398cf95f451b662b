use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// A sum of integer multiples of base-2 logarithms of exact integers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LogSum {
    pub terms: Vec<(i64, BigUint)>,
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plus(mut self, coeff: i64, arg: BigUint) -> Self {
        self.terms.push((coeff, arg));
        self
    }

    /// Numeric value; log2 of zero contributes negative infinity.
    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(c, a)| *c as f64 * log2(a)).sum()
    }

    /// 2^sum as an exact fraction (numerator, denominator).
    pub fn exp2(&self) -> (BigUint, BigUint) {
        let mut num = BigUint::from(1u8);
        let mut den = BigUint::from(1u8);
        for (c, a) in &self.terms {
            let p = a.pow(c.unsigned_abs() as u32);
            if *c >= 0 {
                num *= p;
            } else {
                den *= p;
            }
        }
        (num, den)
    }
}

pub(crate) fn log2(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().log2() + shift as f64
}

impl fmt::Display for LogSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, a)) in self.terms.iter().enumerate() {
            match (i, *c < 0) {
                (0, false) => {}
                (0, true) => write!(f, "-")?,
                (_, false) => write!(f, " + ")?,
                (_, true) => write!(f, " - ")?,
            }
            if c.unsigned_abs() != 1 {
                write!(f, "{}*", c.unsigned_abs())?;
            }
            write!(f, "log2({a})")?;
        }
        Ok(())
    }
}
