//! Exhaustive secrecy check: enumerates every payload assignment over one
//! symbol per packet and verifies that, for every set of `e` intercepted
//! packets and every value they take, the key is uniformly distributed.
//!
//! This deliberately counts outcomes instead of reasoning about ranks, so it
//! stays independent of [`Combiner::survives_any`](super::Combiner::survives_any).

use alloc::vec;

use super::combiner::{for_each_subset, Combiner};
use super::SecrecyError;

/// Upper bound on `m · w` (bits enumerated per subset).
pub const ORACLE_BIT_BUDGET: u32 = 20;

pub fn secrecy_oracle(combiner: &Combiner, e: usize) -> Result<bool, SecrecyError> {
    let m = combiner.cols();
    let k = combiner.rows();
    let field = combiner.field();
    let w = field.width() as u32;
    if m as u32 * w > ORACLE_BIT_BUDGET {
        return Err(SecrecyError::OracleBudget {
            bits: m as u32 * w,
            budget: ORACLE_BIT_BUDGET,
        });
    }
    if e >= m {
        return Ok(false);
    }
    // k symbols driven by fewer than k unknown symbols cannot be uniform.
    if k > m - e {
        return Ok(false);
    }
    let q = field.order();
    let table = field.mul_table();
    let assignments = q.pow(m as u32);
    let key_space = q.pow(k as u32);
    let expected = q.pow((m - e - k) as u32) as u32;

    let mut x = vec![0u8; m];
    let mut uniform = true;
    for_each_subset(m, e, |seen| {
        let mut counts = vec![0u32; q.pow(e as u32) * key_space];
        x.iter_mut().for_each(|s| *s = 0);
        for _ in 0..assignments {
            let mut key_index = 0usize;
            for r in 0..k {
                let mut acc = 0u8;
                for (c, &xs) in x.iter().enumerate() {
                    acc ^= table[combiner.get(r, c) as usize * q + xs as usize];
                }
                key_index = key_index * q + acc as usize;
            }
            let seen_index = seen.iter().fold(0usize, |a, &c| a * q + x[c] as usize);
            counts[seen_index * key_space + key_index] += 1;
            // Next assignment, little-endian counter in base q.
            for s in x.iter_mut() {
                if (*s as usize) + 1 < q {
                    *s += 1;
                    break;
                }
                *s = 0;
            }
        }
        uniform = counts.iter().all(|&n| n == expected);
        uniform
    });
    Ok(uniform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secrecy::{build_combiner, GaloisField};

    #[test]
    fn plain_sum_of_three_single_bits_is_secret() {
        let c = build_combiner(3, 2, GaloisField::GF2).unwrap();
        assert_eq!(secrecy_oracle(&c, 2), Ok(true));
    }

    #[test]
    fn first_packet_only_leaks() {
        let c = Combiner::from_rows(GaloisField::GF2, &[&[1, 0]]).unwrap();
        assert_eq!(secrecy_oracle(&c, 1), Ok(false));
        // Without interception the same key is fine.
        assert_eq!(secrecy_oracle(&c, 0), Ok(true));
    }

    #[test]
    fn four_packets_over_gf4() {
        let c = build_combiner(4, 1, GaloisField::GF4).unwrap();
        assert_eq!((c.rows(), c.cols()), (3, 4));
        assert_eq!(secrecy_oracle(&c, 1), Ok(true));
    }

    #[test]
    fn too_long_key_is_not_uniform() {
        // Two key symbols from one unknown packet.
        let c = build_combiner(2, 0, GaloisField::GF4).unwrap();
        assert_eq!(secrecy_oracle(&c, 1), Ok(false));
    }

    #[test]
    fn budget_enforced() {
        let c = build_combiner(3, 1, GaloisField::GF256).unwrap();
        assert!(matches!(
            secrecy_oracle(&c, 1),
            Err(SecrecyError::OracleBudget { bits: 24, .. })
        ));
    }

    #[test]
    fn gf256_pairs_enumerated_fully() {
        for e in 0..2 {
            let c = build_combiner(2, e, GaloisField::GF256).unwrap();
            assert_eq!(secrecy_oracle(&c, e), Ok(true));
        }
    }
}
