use std::collections::{BTreeMap, BTreeSet};

use crate::{CodingError, Gf};

const AMBIGUITY_RESULT_LIMIT: u128 = 1_000_000;
const AMBIGUITY_ENUM_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub m: u8,
}

impl CodeParams {
    pub fn new(n: usize, k: usize, m: u8) -> Result<Self, CodingError> {
        let p = CodeParams { n, k, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CodingError> {
        let gf = Gf::get(self.m)
            .ok_or_else(|| CodingError::InvalidParams(format!("unsupported field GF(2^{})", self.m)))?;
        if self.k == 0 || self.k > self.n {
            return Err(CodingError::InvalidParams(format!("need 1 <= k <= n, got k={} n={}", self.k, self.n)));
        }
        if self.n > gf.size() - 1 {
            return Err(CodingError::InvalidParams(format!(
                "n={} exceeds the {} nonzero evaluation points",
                self.n,
                gf.size() - 1
            )));
        }
        Ok(())
    }

    pub fn field(&self) -> &'static Gf {
        Gf::get(self.m).expect("validated field")
    }

    pub fn stripes(&self, value_len: usize) -> usize {
        value_len.div_ceil(self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    /// Server index (1-based) to symbol, one element per stripe.
    pub symbols: BTreeMap<usize, Vec<u8>>,
    pub value_len: usize,
}

pub fn encode(value: &[u8], p: &CodeParams) -> Result<Codeword, CodingError> {
    p.validate()?;
    if value.is_empty() {
        return Err(CodingError::InvalidParams("empty value".into()));
    }
    let gf = p.field();
    if value.iter().any(|&x| x as usize >= gf.size()) {
        return Err(CodingError::InvalidParams("value element outside the field".into()));
    }
    let stripes = p.stripes(value.len());
    let mut padded = value.to_vec();
    padded.resize(stripes * p.k, 0);
    let mut symbols = BTreeMap::new();
    for i in 1..=p.n {
        let a = gf.alpha(i);
        let sym = padded.chunks(p.k).map(|coeffs| eval(gf, coeffs, a)).collect();
        symbols.insert(i, sym);
    }
    Ok(Codeword { symbols, value_len: value.len() })
}

fn eval(gf: &Gf, coeffs: &[u8], x: u8) -> u8 {
    coeffs.iter().rev().fold(0, |acc, &c| gf.add(gf.mul(acc, x), c))
}

/// Decodes from at least k symbols. Symbols beyond the first k are checked
/// against the decoded value.
pub fn decode(symbols: &[(usize, Vec<u8>)], p: &CodeParams, value_len: usize) -> Result<Vec<u8>, CodingError> {
    p.validate()?;
    let mut seen = BTreeSet::new();
    for (i, _) in symbols {
        if *i == 0 || *i > p.n {
            return Err(CodingError::InvalidParams(format!("symbol index {i} out of range")));
        }
        if !seen.insert(*i) {
            return Err(CodingError::SingularSystem(*i));
        }
    }
    if symbols.len() < p.k {
        return Err(CodingError::NotEnoughSymbols { need: p.k, got: symbols.len() });
    }
    let gf = p.field();
    let stripes = p.stripes(value_len);
    if symbols.iter().any(|(_, s)| s.len() != stripes) {
        return Err(CodingError::InvalidParams("symbol length does not match value length".into()));
    }
    let chosen = &symbols[..p.k];
    let points: Vec<u8> = chosen.iter().map(|(i, _)| gf.alpha(*i)).collect();
    let inv = invert_vandermonde(gf, &points).ok_or(CodingError::SingularSystem(chosen[0].0))?;
    let mut value = Vec::with_capacity(stripes * p.k);
    for s in 0..stripes {
        for row in &inv {
            let mut acc = 0u8;
            for (c, (_, sym)) in row.iter().zip(chosen) {
                acc = gf.add(acc, gf.mul(*c, sym[s]));
            }
            value.push(acc);
        }
    }
    for (i, sym) in &symbols[p.k..] {
        let a = gf.alpha(*i);
        for (s, coeffs) in value.chunks(p.k).enumerate() {
            if eval(gf, coeffs, a) != sym[s] {
                return Err(CodingError::InconsistentSymbols(*i));
            }
        }
    }
    value.truncate(value_len);
    Ok(value)
}

/// Inverse of the k x k matrix V[r][j] = points[r]^j, as rows indexed by j.
fn invert_vandermonde(gf: &Gf, points: &[u8]) -> Option<Vec<Vec<u8>>> {
    let k = points.len();
    let mut a: Vec<Vec<u8>> = points.iter().map(|&x| (0..k).map(|j| gf.pow(x, j)).collect()).collect();
    let mut inv: Vec<Vec<u8>> = (0..k).map(|r| (0..k).map(|c| (r == c) as u8).collect()).collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = gf.inv(a[col][col]);
        for c in 0..k {
            a[col][c] = gf.mul(a[col][c], scale);
            inv[col][c] = gf.mul(inv[col][c], scale);
        }
        for r in 0..k {
            if r != col && a[r][col] != 0 {
                let factor = a[r][col];
                for c in 0..k {
                    a[r][c] = gf.add(a[r][c], gf.mul(factor, a[col][c]));
                    inv[r][c] = gf.add(inv[r][c], gf.mul(factor, inv[col][c]));
                }
            }
        }
    }
    // a^-1 maps symbols to coefficients: coeff_j = sum_r inv[j][r] * sym_r
    Some(inv)
}

/// Counts values of `stripes` stripes consistent with the given symbols by
/// enumerating every coefficient vector of each stripe.
pub fn ambiguity_count(symbols: &[(usize, Vec<u8>)], p: &CodeParams, stripes: usize) -> Result<u128, CodingError> {
    p.validate()?;
    let mut seen = BTreeSet::new();
    for (i, s) in symbols {
        if *i == 0 || *i > p.n || !seen.insert(*i) {
            return Err(CodingError::InvalidParams(format!("bad or duplicate symbol index {i}")));
        }
        if s.len() != stripes {
            return Err(CodingError::InvalidParams("symbol length does not match stripes".into()));
        }
    }
    let gf = p.field();
    let q = gf.size() as u128;
    let per_stripe = q.checked_pow(p.k as u32).unwrap_or(u128::MAX);
    if per_stripe > AMBIGUITY_ENUM_LIMIT {
        return Err(CodingError::FieldTooLarge(format!("{per_stripe} candidates per stripe")));
    }
    let free = p.k.saturating_sub(symbols.len()) as u32;
    if q.checked_pow(free * stripes as u32).is_none_or(|x| x > AMBIGUITY_RESULT_LIMIT) {
        return Err(CodingError::FieldTooLarge(format!("|field|^{} exceeds budget", free as usize * stripes)));
    }
    let points: Vec<(u8, usize)> = symbols.iter().map(|(i, _)| (gf.alpha(*i), *i)).collect();
    let mut total: u128 = 1;
    for s in 0..stripes {
        let mut coeffs = vec![0u8; p.k];
        let mut count: u128 = 0;
        loop {
            if symbols.iter().zip(&points).all(|((_, sym), (a, _))| eval(gf, &coeffs, *a) == sym[s]) {
                count += 1;
            }
            if !next_vector(&mut coeffs, gf.size()) {
                break;
            }
        }
        total *= count;
    }
    Ok(total)
}

fn next_vector(v: &mut [u8], base: usize) -> bool {
    for x in v.iter_mut() {
        if (*x as usize) + 1 < base {
            *x += 1;
            return true;
        }
        *x = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_is_replication() {
        let p = CodeParams::new(5, 1, 4).unwrap();
        let cw = encode(&[7, 3], &p).unwrap();
        for sym in cw.symbols.values() {
            assert_eq!(sym, &vec![7, 3]);
        }
    }

    #[test]
    fn k_two_symbols_are_linear_in_alpha() {
        let p = CodeParams::new(3, 2, 4).unwrap();
        let gf = p.field();
        let (a, b) = (9u8, 5u8);
        let cw = encode(&[a, b], &p).unwrap();
        for i in 1..=3 {
            assert_eq!(cw.symbols[&i], vec![a ^ gf.mul(b, gf.alpha(i))]);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CodeParams::new(16, 2, 4).is_err());
        assert!(CodeParams::new(3, 0, 4).is_err());
        assert!(CodeParams::new(3, 4, 4).is_err());
        assert!(CodeParams::new(3, 2, 5).is_err());
    }

    #[test]
    fn duplicate_index_is_singular() {
        let p = CodeParams::new(3, 2, 4).unwrap();
        let cw = encode(&[1, 2], &p).unwrap();
        let s = vec![(1, cw.symbols[&1].clone()), (1, cw.symbols[&1].clone())];
        assert_eq!(decode(&s, &p, 2), Err(CodingError::SingularSystem(1)));
    }

    #[test]
    fn too_few_symbols() {
        let p = CodeParams::new(3, 2, 4).unwrap();
        let cw = encode(&[1, 2], &p).unwrap();
        let s = vec![(2, cw.symbols[&2].clone())];
        assert!(matches!(decode(&s, &p, 2), Err(CodingError::NotEnoughSymbols { .. })));
    }

    #[test]
    fn overdetermined_check_catches_corruption() {
        let p = CodeParams::new(4, 2, 4).unwrap();
        let cw = encode(&[1, 2], &p).unwrap();
        let mut s: Vec<_> = cw.symbols.clone().into_iter().collect();
        assert_eq!(decode(&s, &p, 2).unwrap(), vec![1, 2]);
        s[3].1[0] ^= 1;
        assert_eq!(decode(&s, &p, 2), Err(CodingError::InconsistentSymbols(4)));
    }

    #[test]
    fn ambiguity_small_cases() {
        let p = CodeParams::new(3, 2, 4).unwrap();
        let cw = encode(&[4, 11], &p).unwrap();
        let one = vec![(2, cw.symbols[&2].clone())];
        assert_eq!(ambiguity_count(&one, &p, 1).unwrap(), 16);
        let two = vec![(1, cw.symbols[&1].clone()), (3, cw.symbols[&3].clone())];
        assert_eq!(ambiguity_count(&two, &p, 1).unwrap(), 1);
        let p1 = CodeParams::new(3, 1, 4).unwrap();
        assert_eq!(ambiguity_count(&[], &p1, 1).unwrap(), 16);
    }

    #[test]
    fn ambiguity_budget() {
        let p = CodeParams::new(3, 2, 8).unwrap();
        assert!(matches!(ambiguity_count(&[], &p, 3), Err(CodingError::FieldTooLarge(_))));
    }
}
