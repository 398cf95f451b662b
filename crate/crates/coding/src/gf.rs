use std::sync::OnceLock;

/// Arithmetic in GF(2^m) for m in {4, 8} via log/antilog tables.
#[derive(Debug)]
pub struct Gf {
    m: u8,
    exp: Vec<u8>,
    log: Vec<u8>,
}

static GF16: OnceLock<Gf> = OnceLock::new();
static GF256: OnceLock<Gf> = OnceLock::new();

impl Gf {
    /// Returns the shared table for GF(2^m), or `None` for unsupported m.
    pub fn get(m: u8) -> Option<&'static Gf> {
        match m {
            4 => Some(GF16.get_or_init(|| Gf::build(4, 0x13))),
            8 => Some(GF256.get_or_init(|| Gf::build(8, 0x11d))),
            _ => None,
        }
    }

    fn build(m: u8, poly: u16) -> Gf {
        let size = 1usize << m;
        let order = size - 1;
        let mut exp = vec![0u8; 2 * order];
        let mut log = vec![0u8; size];
        let mut x: u16 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (size as u16) != 0 {
                x ^= poly;
            }
        }
        exp.copy_within(0..order, order);
        Gf { m, exp, log }
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn size(&self) -> usize {
        1 << self.m
    }

    fn order(&self) -> usize {
        self.size() - 1
    }

    pub fn add(&self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order() - self.log[a as usize] as usize) % self.order()]
    }

    pub fn div(&self, a: u8, b: u8) -> u8 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u8, e: usize) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] as usize * e) % self.order()]
    }

    /// The i-th nonzero element in generator order, i >= 1.
    pub fn alpha(&self, i: usize) -> u8 {
        self.exp[(i - 1) % self.order()]
    }
}
