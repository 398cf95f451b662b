use crate::CodingError;

/// Packs integer values from a domain of `domain_size` elements into a
/// vector of field elements whose length is a multiple of k. Bits are spread
/// evenly so that small domains still use every coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueLayout {
    pub bits: u32,
    pub elems: usize,
    pub chunk: u32,
}

impl ValueLayout {
    pub fn new(domain_size: u64, k: usize, m: u8) -> Result<Self, CodingError> {
        if domain_size < 1 || k == 0 {
            return Err(CodingError::InvalidParams("empty domain or k = 0".into()));
        }
        let bits = (64 - (domain_size - 1).leading_zeros()).max(1);
        let min_elems = (bits as usize).div_ceil(m as usize);
        let elems = min_elems.max(k).div_ceil(k) * k;
        let chunk = bits.div_ceil(elems as u32);
        Ok(ValueLayout { bits, elems, chunk })
    }

    pub fn to_elements(&self, v: u64) -> Vec<u8> {
        let mask = (1u64 << self.chunk) - 1;
        (0..self.elems)
            .map(|i| {
                let shift = i as u32 * self.chunk;
                if shift >= 64 {
                    0
                } else {
                    ((v >> shift) & mask) as u8
                }
            })
            .collect()
    }

    pub fn from_elements(&self, e: &[u8]) -> u64 {
        e.iter().enumerate().fold(0u64, |acc, (i, &x)| {
            let shift = i as u32 * self.chunk;
            if shift >= 64 {
                acc
            } else {
                acc | (x as u64) << shift
            }
        })
    }
}
