use alloc::vec;
use alloc::vec::Vec;

use super::field::GaloisField;
use super::SecrecyError;

/// A `k × m` matrix over GF(2^w) mapping `m` received packets to `k` key
/// packets. Entries are row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Combiner {
    field: GaloisField,
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl Combiner {
    pub fn from_rows(field: GaloisField, rows: &[&[u8]]) -> Result<Self, SecrecyError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(SecrecyError::MalformedCombiner);
        }
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            for &v in r.iter() {
                if v as usize >= field.order() {
                    return Err(SecrecyError::MalformedCombiner);
                }
                entries.push(v);
            }
        }
        Ok(Combiner {
            field,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    #[inline]
    pub fn field(&self) -> GaloisField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Rank of the submatrix formed by the given columns.
    pub fn rank_of_columns(&self, cols: &[usize]) -> usize {
        let f = self.field;
        let mut m: Vec<Vec<u8>> = (0..self.rows)
            .map(|r| cols.iter().map(|&c| self.get(r, c)).collect())
            .collect();
        let (nr, nc) = (self.rows, cols.len());
        let mut rank = 0;
        for c in 0..nc {
            let Some(p) = (rank..nr).find(|&r| m[r][c] != 0) else {
                continue;
            };
            m.swap(rank, p);
            let inv = f.inv(m[rank][c]).expect("pivot is nonzero");
            for x in m[rank].iter_mut() {
                *x = f.mul(*x, inv);
            }
            for r in 0..nr {
                if r != rank && m[r][c] != 0 {
                    let factor = m[r][c];
                    for j in 0..nc {
                        let v = f.mul(factor, m[rank][j]);
                        m[r][j] ^= v;
                    }
                }
            }
            rank += 1;
            if rank == nr {
                break;
            }
        }
        rank
    }

    /// True when every choice of `e` hidden columns leaves a complement of
    /// full row rank.
    pub fn survives_any(&self, e: usize) -> bool {
        if e >= self.cols || self.rows > self.cols - e {
            return false;
        }
        let mut ok = true;
        for_each_subset(self.cols, e, |hidden| {
            let keep: Vec<usize> = (0..self.cols).filter(|c| !hidden.contains(c)).collect();
            if self.rank_of_columns(&keep) != self.rows {
                ok = false;
            }
            ok
        });
        ok
    }
}

/// `(m − e) × m` Vandermonde matrix `G[i][j] = α_j^i` with `α_j = j`.
///
/// Any `m − e` columns form a square Vandermonde matrix over distinct
/// evaluation points, so every complement of `e` columns is invertible.
/// The first row is all ones; for `e = m − 1` the key is the plain sum.
pub fn build_combiner(m: usize, e: usize, field: GaloisField) -> Result<Combiner, SecrecyError> {
    if m == 0 || e >= m {
        return Err(SecrecyError::NoKey {
            received: m,
            bound: e,
        });
    }
    let k = m - e;
    // A single all-ones row needs no distinct points.
    if k > 1 && m > field.order() {
        return Err(SecrecyError::FieldTooSmall {
            needed: m,
            order: field.order(),
        });
    }
    let mut entries = vec![0u8; k * m];
    for j in 0..m {
        let alpha = j as u8;
        for i in 0..k {
            // 0^0 = 1 keeps the zero point usable.
            entries[i * m + j] = field.pow(alpha, i as u32);
        }
    }
    Ok(Combiner {
        field,
        rows: k,
        cols: m,
        entries,
    })
}

/// Visits every `k`-subset of `0..n` in lexicographic order until `f`
/// returns false.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_packets_two_intercepted_is_the_plain_sum() {
        let c = build_combiner(3, 2, GaloisField::GF256).unwrap();
        assert_eq!((c.rows(), c.cols()), (1, 3));
        assert_eq!(c.row(0), &[1, 1, 1]);
    }

    #[test]
    fn single_packet_is_identity() {
        let c = build_combiner(1, 0, GaloisField::GF256).unwrap();
        assert_eq!(c.row(0), &[1]);
    }

    #[test]
    fn five_choose_two_complements_all_invertible() {
        let c = build_combiner(5, 2, GaloisField::GF256).unwrap();
        assert_eq!((c.rows(), c.cols()), (3, 5));
        let mut count = 0;
        for_each_subset(5, 2, |hidden| {
            let keep: Vec<usize> = (0..5).filter(|x| !hidden.contains(x)).collect();
            assert_eq!(c.rank_of_columns(&keep), 3, "hidden {hidden:?}");
            count += 1;
            true
        });
        assert_eq!(count, 10);
    }

    #[test]
    fn rank_property_up_to_twelve() {
        for m in 1..=12 {
            for e in 0..m {
                let c = build_combiner(m, e, GaloisField::GF256).unwrap();
                assert!(c.survives_any(e), "m={m} e={e}");
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_combiner(3, 3, GaloisField::GF256),
            Err(SecrecyError::NoKey { .. })
        ));
        assert!(matches!(
            build_combiner(5, 1, GaloisField::GF4),
            Err(SecrecyError::FieldTooSmall { needed: 5, order: 4 })
        ));
    }

    #[test]
    fn leaking_combiner_fails_rank_check() {
        let c = Combiner::from_rows(GaloisField::GF2, &[&[1, 0]]).unwrap();
        assert!(!c.survives_any(1));
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut n = 0;
        for_each_subset(6, 3, |_| {
            n += 1;
            true
        });
        assert_eq!(n, 20);
        let mut empty = 0;
        for_each_subset(4, 0, |s| {
            assert!(s.is_empty());
            empty += 1;
            true
        });
        assert_eq!(empty, 1);
    }
}
