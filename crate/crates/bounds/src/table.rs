use std::fmt::Write;

use num_rational::BigRational;

use crate::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Row {
    pub nu: u64,
    pub abd: BigRational,
    pub erasure: BigRational,
    pub thm1: BigRational,
    pub thm3: BigRational,
    pub thm4: BigRational,
}

/// Normalized totals for each ν in the range; the value-domain size does not
/// enter the coefficients.
pub fn figure1_table(n: u64, f: u64, nus: impl IntoIterator<Item = u64>) -> Result<Vec<Figure1Row>, BoundsError> {
    BoundParams::new(n, f, 1, 2u8)?;
    nus.into_iter()
        .map(|nu| {
            if nu < 1 {
                return Err(BoundsError::InvalidParams("need nu >= 1".into()));
            }
            Ok(Figure1Row {
                nu,
                abd: normalized_abd(f),
                erasure: normalized_erasure(n, f, nu),
                thm1: normalized_thm1(n, f),
                thm3: normalized_thm3(n, f),
                thm4: normalized_thm4(n, f, nu),
            })
        })
        .collect()
}

/// Smallest ν whose erasure-coded cost exceeds replication.
pub fn crossover(rows: &[Figure1Row]) -> Option<u64> {
    rows.iter().find(|r| r.erasure > r.abd).map(|r| r.nu)
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = String::from("nu,abd,erasure,thm1,thm3,thm4\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.nu, r.abd, r.erasure, r.thm1, r.thm3, r.thm4).unwrap();
    }
    out
}
