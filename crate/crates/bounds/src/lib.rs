//! Closed-form storage lower bounds and the upper bounds of the replication
//! and erasure-coded algorithms, evaluated in exact arithmetic.

mod logsum;
mod table;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

pub use logsum::LogSum;
pub use table::{crossover, figure1_csv, figure1_table, Figure1Row};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Cluster size `n`, failure tolerance `f`, active-write bound `nu` and
/// value-domain size `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundParams {
    pub n: u64,
    pub f: u64,
    pub nu: u64,
    pub v: BigUint,
}

impl BoundParams {
    pub fn new(n: u64, f: u64, nu: u64, v: impl Into<BigUint>) -> Result<Self, BoundsError> {
        let p = Self { n, f, nu, v: v.into() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.f < 1 || self.f >= self.n {
            return Err(BoundsError::InvalidParams(format!("need 1 <= f < N, got N={} f={}", self.n, self.f)));
        }
        if self.nu < 1 {
            return Err(BoundsError::InvalidParams("need nu >= 1".into()));
        }
        if self.v < BigUint::from(2u8) {
            return Err(BoundsError::InvalidParams(format!("need |V| >= 2, got {}", self.v)));
        }
        Ok(())
    }

    /// min(nu, f + 1)
    pub fn nu_star(&self) -> u64 {
        self.nu.min(self.f + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    One,
    Two,
    Three,
    Four,
}

/// Multiplicative form of a counting inequality:
/// `factor * prod(counts) * max(counts)^max_power >= rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductForm {
    pub factor: BigUint,
    pub max_power: u32,
    pub rhs: BigUint,
}

impl ProductForm {
    pub fn lhs(&self, counts: &[u64]) -> BigUint {
        let mut x = self.factor.clone();
        for c in counts {
            x *= BigUint::from(*c);
        }
        let max = counts.iter().copied().max().unwrap_or(1);
        x * BigUint::from(max).pow(self.max_power)
    }

    pub fn holds(&self, counts: &[u64]) -> bool {
        self.lhs(counts) >= self.rhs
    }

    /// Template for a theorem at the given parameters without checking the
    /// theorem's own hypotheses beyond basic validity.
    pub fn for_theorem(t: Theorem, p: &BoundParams) -> Self {
        let v = p.v.clone();
        let one = BigUint::one();
        let k = BigUint::from(p.n - p.f);
        match t {
            Theorem::One => Self { factor: one, max_power: 0, rhs: v },
            Theorem::Two => Self { factor: k, max_power: 1, rhs: &v * (&v - 1u8) },
            Theorem::Three => Self { factor: &k * &k, max_power: 2, rhs: &v * (&v - 1u8) },
            Theorem::Four => {
                let s = p.nu_star();
                let width = BigUint::from(p.n - p.f + s - 1);
                Self { factor: factorial(s) * width.pow(s as u32), max_power: 0, rhs: falling(&(&v - 1u8), s) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub theorem: Theorem,
    /// Coefficient of log2|V| in the total-storage bound.
    pub normalized: BigRational,
    /// Right-hand side, in bits, of the per-subset inequality.
    pub bits: LogSum,
    /// Number of servers the per-subset inequality sums over.
    pub subset: u64,
    pub product_form: ProductForm,
    pub note: Option<&'static str>,
}

pub const THM4_COUNT_NOTE: &str = "the value-tuple family has (V-1)(V-2)..(V-nu) ordered members; the stated bits bound uses the binomial C(V-1, nu)";

pub fn normalized_thm1(n: u64, f: u64) -> BigRational {
    ratio(n, n - f)
}

pub fn normalized_thm2(n: u64, f: u64) -> BigRational {
    ratio(2 * n, n - f + 1)
}

pub fn normalized_thm3(n: u64, f: u64) -> BigRational {
    ratio(2 * n, n - f + 2)
}

pub fn normalized_thm4(n: u64, f: u64, nu: u64) -> BigRational {
    let s = nu.min(f + 1);
    ratio(s * n, n - f + s - 1)
}

/// Replication stores the value at f + 1 servers in the worst case.
pub fn normalized_abd(f: u64) -> BigRational {
    ratio(f + 1, 1)
}

pub fn normalized_erasure(n: u64, f: u64, nu: u64) -> BigRational {
    ratio(nu * n, n - f)
}

pub fn bound_thm1(p: &BoundParams) -> Result<BoundResult, BoundsError> {
    p.validate()?;
    Ok(BoundResult {
        theorem: Theorem::One,
        normalized: normalized_thm1(p.n, p.f),
        bits: LogSum::new().plus(1, p.v.clone()),
        subset: p.n - p.f,
        product_form: ProductForm::for_theorem(Theorem::One, p),
        note: None,
    })
}

pub fn bound_thm2(p: &BoundParams) -> Result<BoundResult, BoundsError> {
    p.validate()?;
    if p.f < 2 {
        return Err(BoundsError::InvalidParams(format!("the no-gossip bound is stated for f >= 2, got f={}", p.f)));
    }
    Ok(BoundResult {
        theorem: Theorem::Two,
        normalized: normalized_thm2(p.n, p.f),
        bits: LogSum::new().plus(1, p.v.clone()).plus(1, &p.v - 1u8).plus(-1, BigUint::from(p.n - p.f)),
        subset: p.n - p.f,
        product_form: ProductForm::for_theorem(Theorem::Two, p),
        note: None,
    })
}

pub fn bound_thm3(p: &BoundParams) -> Result<BoundResult, BoundsError> {
    p.validate()?;
    Ok(BoundResult {
        theorem: Theorem::Three,
        normalized: normalized_thm3(p.n, p.f),
        bits: LogSum::new().plus(1, p.v.clone()).plus(1, &p.v - 1u8).plus(-2, BigUint::from(p.n - p.f)),
        subset: p.n - p.f,
        product_form: ProductForm::for_theorem(Theorem::Three, p),
        note: None,
    })
}

pub fn bound_thm4(p: &BoundParams) -> Result<BoundResult, BoundsError> {
    p.validate()?;
    let s = p.nu_star();
    let width = p.n - p.f + s - 1;
    Ok(BoundResult {
        theorem: Theorem::Four,
        normalized: normalized_thm4(p.n, p.f, p.nu),
        bits: LogSum::new()
            .plus(1, binomial(&(&p.v - 1u8), s))
            .plus(-(s as i64), BigUint::from(width))
            .plus(-1, factorial(s)),
        subset: width,
        product_form: ProductForm::for_theorem(Theorem::Four, p),
        note: Some(THM4_COUNT_NOTE),
    })
}

fn ratio(a: u64, b: u64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// x (x-1) ... (x-k+1), zero once a factor reaches zero.
pub fn falling(x: &BigUint, k: u64) -> BigUint {
    let mut out = BigUint::one();
    for i in 0..k {
        let i = BigUint::from(i);
        if &i >= x {
            return BigUint::default();
        }
        out *= x - i;
    }
    out
}

pub fn binomial(x: &BigUint, k: u64) -> BigUint {
    falling(x, k) / factorial(k)
}

/// Convenience for display and tests.
pub fn to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
