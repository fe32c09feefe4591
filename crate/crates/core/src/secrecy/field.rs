//! Binary extension fields GF(2^w) for 1 ≤ w ≤ 8, elements stored in `u8`.

use alloc::vec::Vec;

/// Primitive polynomials, indexed by width. Bit `w` is the leading term.
const PRIMITIVE: [u16; 9] = [
    0,
    0b11,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b100_0011,
    0b1000_1001,
    0b1_0001_1101,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaloisField {
    width: u8,
}

impl GaloisField {
    pub const GF2: GaloisField = GaloisField { width: 1 };
    pub const GF4: GaloisField = GaloisField { width: 2 };
    pub const GF256: GaloisField = GaloisField { width: 8 };

    pub fn new(width: u8) -> Option<Self> {
        (1..=8).contains(&width).then_some(GaloisField { width })
    }

    /// Smallest field with at least `n` elements, if one fits in a byte.
    pub fn smallest_with(n: usize) -> Option<Self> {
        (1u8..=8).find(|&w| (1usize << w) >= n).map(|width| GaloisField { width })
    }

    #[inline]
    pub fn width(self) -> u8 {
        self.width
    }

    #[inline]
    pub fn order(self) -> usize {
        1 << self.width
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    /// Shift-and-add multiplication reduced by the primitive polynomial.
    pub fn mul(self, a: u8, b: u8) -> u8 {
        let top = 1u16 << self.width;
        let poly = PRIMITIVE[self.width as usize];
        let (mut a, mut b, mut r) = (a as u16, b, 0u16);
        while b != 0 {
            if b & 1 != 0 {
                r ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= poly;
            }
        }
        r as u8
    }

    pub fn pow(self, a: u8, mut e: u32) -> u8 {
        let (mut base, mut acc) = (a, 1u8);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(q−2)`; `None` for zero.
    pub fn inv(self, a: u8) -> Option<u8> {
        (a != 0).then(|| self.pow(a, self.order() as u32 - 2))
    }

    /// Full `q × q` product table, row-major.
    pub fn mul_table(self) -> Vec<u8> {
        let q = self.order();
        let mut t = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                t.push(self.mul(a as u8, b as u8));
            }
        }
        t
    }

    /// Reduce a `u8` to a valid element by masking off high bits.
    #[inline]
    pub fn element(self, v: u8) -> u8 {
        if self.width == 8 {
            v
        } else {
            v & ((1u8 << self.width) - 1)
        }
    }
}

impl Default for GaloisField {
    fn default() -> Self {
        GaloisField::GF256
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_hold_for_every_width() {
        for w in 1..=8 {
            let f = GaloisField::new(w).unwrap();
            let q = f.order();
            for a in 0..q as u8 {
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.mul(a, 0), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "w={w} a={a}");
                }
            }
            // Primitive polynomial: a generator reaches all q−1 nonzero elements.
            if q > 2 {
                let mut seen = alloc::vec![false; q];
                let mut x = 1u8;
                for _ in 0..q - 1 {
                    seen[x as usize] = true;
                    x = f.mul(x, 2);
                }
                assert!(seen[1..].iter().all(|&s| s), "w={w}");
            }
        }
    }

    #[test]
    fn gf256_known_products() {
        let f = GaloisField::GF256;
        // 0x02 * 0x80 wraps through 0x11D.
        assert_eq!(f.mul(0x02, 0x80), 0x1D);
        assert_eq!(f.mul(0x53, 0x53), f.pow(0x53, 2));
        assert_eq!(f.inv(0), None);
    }

    #[test]
    fn distributive_in_gf8() {
        let f = GaloisField::new(3).unwrap();
        for a in 0..8u8 {
            for b in 0..8u8 {
                for c in 0..8u8 {
                    assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                }
            }
        }
    }

    #[test]
    fn smallest_field() {
        assert_eq!(GaloisField::smallest_with(1).unwrap().order(), 2);
        assert_eq!(GaloisField::smallest_with(4).unwrap().order(), 4);
        assert_eq!(GaloisField::smallest_with(6).unwrap().order(), 8);
        assert!(GaloisField::smallest_with(257).is_none());
    }
}
