//! Secret-key agreement over a broadcast erasure channel.
//!
//! Alice broadcasts packets of random bits. Bob publicly acknowledges the
//! ones he decoded; Eve overhears the acknowledgments and whatever packets
//! her own channel delivers. Given an upper bound `e` on how many of Bob's
//! packets Eve holds, Alice and Bob apply a combiner whose every
//! `(m − e)`-column submatrix is invertible and obtain `m − e` key packets
//! Eve knows nothing about.

mod combiner;
mod field;
mod oracle;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

pub use combiner::{build_combiner, Combiner};
pub use field::GaloisField;
pub use oracle::{secrecy_oracle, ORACLE_BIT_BUDGET};

use crate::rng;

pub type PacketId = u32;

/// Payload size carried by each random packet unless configured otherwise.
pub const DEFAULT_PAYLOAD_BITS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecrecyError {
    /// Eve may hold everything Bob received.
    NoKey { received: usize, bound: usize },
    FieldTooSmall { needed: usize, order: usize },
    OracleBudget { bits: u32, budget: u32 },
    MalformedCombiner,
    MissingPayload(PacketId),
    PayloadLength { expected: usize, found: usize },
    /// Payload length not a whole number of field symbols.
    SymbolAlignment { bits: usize, width: u8 },
    PacketOutOfRange { id: PacketId, n_sent: u32 },
}

impl fmt::Display for SecrecyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecrecyError::NoKey { received, bound } => write!(
                f,
                "no key: eve may hold {bound} of the {received} packets bob received"
            ),
            SecrecyError::FieldTooSmall { needed, order } => write!(
                f,
                "combiner needs {needed} distinct points but the field has {order} elements"
            ),
            SecrecyError::OracleBudget { bits, budget } => write!(
                f,
                "exhaustive check over {bits} bits exceeds the {budget}-bit budget"
            ),
            SecrecyError::MalformedCombiner => f.write_str("combiner rows are empty or ragged"),
            SecrecyError::MissingPayload(id) => write!(f, "payload for packet {id} not available"),
            SecrecyError::PayloadLength { expected, found } => {
                write!(f, "payload of {found} bits, expected {expected}")
            }
            SecrecyError::SymbolAlignment { bits, width } => {
                write!(f, "{bits}-bit payload is not a multiple of {width}-bit symbols")
            }
            SecrecyError::PacketOutOfRange { id, n_sent } => {
                write!(f, "packet id {id} out of range for {n_sent} sent packets")
            }
        }
    }
}

impl core::error::Error for SecrecyError {}

/// Fixed-length bit string, most significant bit first within each byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitString {
    bits: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(bits: usize) -> Self {
        BitString {
            bits,
            bytes: alloc::vec![0; bits.div_ceil(8)],
        }
    }

    pub fn random(bits: usize, rng: &mut impl RngCore) -> Self {
        let mut s = BitString::zeros(bits);
        rng.fill_bytes(&mut s.bytes);
        s.clear_tail();
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let mask = 1u8 << (7 - i % 8);
        if v {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    /// Symbol `i` of width `w` (bits `i·w .. (i+1)·w`).
    pub fn symbol(&self, i: usize, w: u8) -> u8 {
        if w == 8 {
            return self.bytes[i];
        }
        let start = i * w as usize;
        (0..w as usize).fold(0u8, |acc, b| acc << 1 | self.get(start + b) as u8)
    }

    pub fn set_symbol(&mut self, i: usize, w: u8, v: u8) {
        if w == 8 {
            self.bytes[i] = v;
            return;
        }
        let start = i * w as usize;
        for b in 0..w as usize {
            self.set(start + b, v >> (w as usize - 1 - b) & 1 == 1);
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.bits % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xFFu8 << (8 - rem);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomPacket {
    pub id: PacketId,
    pub payload: BitString,
}

/// Alice's `n` packets of fresh random payload.
pub fn generate_packets(n: u32, payload_bits: usize, seed: u64) -> Vec<RandomPacket> {
    let mut rng = rng::stream(rng::derive(&[rng::tag::PAYLOAD, seed]));
    (0..n)
        .map(|id| RandomPacket {
            id,
            payload: BitString::random(payload_bits, &mut rng),
        })
        .collect()
}

/// Who decoded what. Bob's acknowledgments are public, so Eve always knows
/// `bob_received` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReceptionLog {
    pub n_sent: u32,
    pub bob_received: BTreeSet<PacketId>,
    pub eve_received: BTreeSet<PacketId>,
}

impl ReceptionLog {
    pub fn new(
        n_sent: u32,
        bob_received: BTreeSet<PacketId>,
        eve_received: BTreeSet<PacketId>,
    ) -> Result<Self, SecrecyError> {
        if let Some(&id) = bob_received.iter().chain(&eve_received).find(|&&id| id >= n_sent) {
            return Err(SecrecyError::PacketOutOfRange { id, n_sent });
        }
        Ok(ReceptionLog {
            n_sent,
            bob_received,
            eve_received,
        })
    }

    /// Packets of Bob's that Eve also holds.
    pub fn intercepted_of_bob(&self) -> usize {
        self.bob_received.intersection(&self.eve_received).count()
    }
}

/// Upper bound on how many of Bob's packets Eve holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EveBound {
    pub max_intercepted: usize,
}

impl EveBound {
    pub fn new(max_intercepted: usize) -> Self {
        EveBound { max_intercepted }
    }
}

/// Broadcasts `n` packets; each predicate sees the packet index and a shared
/// seeded stream (Bob's draw precedes Eve's for every packet).
pub fn run_exchange<B, E>(n: u32, mut decode_bob: B, mut decode_eve: E, seed: u64) -> ReceptionLog
where
    B: FnMut(PacketId, &mut ChaCha8Rng) -> bool,
    E: FnMut(PacketId, &mut ChaCha8Rng) -> bool,
{
    let mut rng = rng::stream(rng::derive(&[rng::tag::EXCHANGE, seed]));
    let mut log = ReceptionLog {
        n_sent: n,
        ..ReceptionLog::default()
    };
    for id in 0..n {
        if decode_bob(id, &mut rng) {
            log.bob_received.insert(id);
        }
        if decode_eve(id, &mut rng) {
            log.eve_received.insert(id);
        }
    }
    log
}

/// Decode predicate for an i.i.d. erasure channel.
pub fn iid_erasures(erasure_probability: f64) -> impl FnMut(PacketId, &mut ChaCha8Rng) -> bool {
    move |_, rng| rng.random::<f64>() >= erasure_probability
}

/// Worst case that still leaves a key: Eve missed exactly one of Bob's packets.
pub fn worst_case_bound(log: &ReceptionLog) -> Result<EveBound, SecrecyError> {
    match log.bob_received.len() {
        0 => Err(SecrecyError::NoKey {
            received: 0,
            bound: 0,
        }),
        m => Ok(EveBound::new(m - 1)),
    }
}

/// The bound a simulator with full knowledge of Eve's receptions can use.
pub fn exact_bound(log: &ReceptionLog) -> EveBound {
    EveBound::new(log.intercepted_of_bob())
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecretKey {
    pub key_packets: Vec<BitString>,
    pub combiner: Combiner,
    /// Bob's packet ids in column order of the combiner.
    pub source_ids: Vec<PacketId>,
}

impl SecretKey {
    pub fn bits(&self) -> usize {
        self.key_packets.iter().map(BitString::len).sum()
    }
}

/// Derives the key from Bob's packets. Alice passes all her packets, Bob
/// passes only those he decoded; both get the same key.
pub fn extract_key(
    log: &ReceptionLog,
    payloads: &[RandomPacket],
    bound: EveBound,
    field: GaloisField,
) -> Result<SecretKey, SecrecyError> {
    let m = log.bob_received.len();
    if bound.max_intercepted >= m {
        return Err(SecrecyError::NoKey {
            received: m,
            bound: bound.max_intercepted,
        });
    }
    let combiner = build_combiner(m, bound.max_intercepted, field)?;
    let source_ids: Vec<PacketId> = log.bob_received.iter().copied().collect();
    let sources = source_ids
        .iter()
        .map(|&id| {
            payloads
                .iter()
                .find(|p| p.id == id)
                .map(|p| &p.payload)
                .ok_or(SecrecyError::MissingPayload(id))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let bits = sources[0].len();
    if let Some(bad) = sources.iter().find(|s| s.len() != bits) {
        return Err(SecrecyError::PayloadLength {
            expected: bits,
            found: bad.len(),
        });
    }
    let w = field.width();
    if bits % w as usize != 0 {
        return Err(SecrecyError::SymbolAlignment { bits, width: w });
    }
    let symbols = bits / w as usize;

    let key_packets = (0..combiner.rows())
        .map(|r| {
            let coeffs = combiner.row(r);
            let mut out = BitString::zeros(bits);
            for s in 0..symbols {
                let v = coeffs
                    .iter()
                    .zip(&sources)
                    .fold(0u8, |acc, (&g, src)| acc ^ field.mul(g, src.symbol(s, w)));
                out.set_symbol(s, w, v);
            }
            out
        })
        .collect();
    Ok(SecretKey {
        key_packets,
        combiner,
        source_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    #[test]
    fn eve_misses_the_middle_packet() {
        let log = run_exchange(3, |_, _| true, |i, _| i != 1, 1);
        assert_eq!(log.bob_received, set(&[0, 1, 2]));
        assert_eq!(log.eve_received, set(&[0, 2]));
    }

    #[test]
    fn bob_decodes_nothing() {
        let log = run_exchange(5, |_, _| false, |_, _| true, 1);
        assert!(log.bob_received.is_empty());
        assert!(matches!(worst_case_bound(&log), Err(SecrecyError::NoKey { .. })));
        let pk = generate_packets(5, 8, 1);
        assert!(matches!(
            extract_key(&log, &pk, EveBound::new(0), GaloisField::GF256),
            Err(SecrecyError::NoKey { .. })
        ));
    }

    #[test]
    fn iid_exchange_is_reproducible() {
        let a = run_exchange(10, |_, _| true, iid_erasures(0.5), 42);
        let b = run_exchange(10, |_, _| true, iid_erasures(0.5), 42);
        assert_eq!(a, b);
        assert_eq!(a.bob_received.len(), 10);
        let differs = (43..60).any(|s| run_exchange(10, |_, _| true, iid_erasures(0.5), s) != a);
        assert!(differs);
    }

    #[test]
    fn single_bit_sum_of_three() {
        let log = ReceptionLog::new(3, set(&[0, 1, 2]), set(&[0, 2])).unwrap();
        for bits in 0..8u8 {
            let x: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let pk: Vec<RandomPacket> = (0..3)
                .map(|i| RandomPacket {
                    id: i,
                    payload: BitString::from_bits(&[x[i as usize]]),
                })
                .collect();
            let key = extract_key(&log, &pk, EveBound::new(2), GaloisField::GF2).unwrap();
            assert_eq!(key.key_packets.len(), 1);
            assert_eq!(key.key_packets[0].get(0), x[0] ^ x[1] ^ x[2]);
        }
    }

    #[test]
    fn alice_and_bob_agree() {
        let alice = generate_packets(12, DEFAULT_PAYLOAD_BITS, 9);
        let log = run_exchange(12, iid_erasures(0.3), iid_erasures(0.5), 9);
        let bob: Vec<RandomPacket> = alice
            .iter()
            .filter(|p| log.bob_received.contains(&p.id))
            .cloned()
            .collect();
        let bound = worst_case_bound(&log).unwrap();
        let ka = extract_key(&log, &alice, bound, GaloisField::GF256).unwrap();
        let kb = extract_key(&log, &bob, bound, GaloisField::GF256).unwrap();
        assert_eq!(ka, kb);
        assert_eq!(ka.key_packets.len(), 1);
        assert_eq!(ka.bits(), DEFAULT_PAYLOAD_BITS);
    }

    #[test]
    fn five_received_two_intercepted_gives_three_packets() {
        let log = ReceptionLog::new(5, set(&[0, 1, 2, 3, 4]), set(&[1, 3])).unwrap();
        let pk = generate_packets(5, 64, 3);
        let key = extract_key(&log, &pk, exact_bound(&log), GaloisField::GF256).unwrap();
        assert_eq!(key.key_packets.len(), 3);
        assert!(key.combiner.survives_any(2));
        // Same combiner over one-symbol payloads passes the exhaustive check
        // in the smallest field that fits five points.
        let small = build_combiner(5, 2, GaloisField::smallest_with(5).unwrap()).unwrap();
        assert_eq!(secrecy_oracle(&small, 2), Ok(true));
    }

    #[test]
    fn worst_case_bounds() {
        for (m, e) in [(3usize, 2usize), (1, 0), (7, 6)] {
            let log = ReceptionLog::new(10, (0..m as u32).collect(), BTreeSet::new()).unwrap();
            assert_eq!(worst_case_bound(&log).unwrap().max_intercepted, e);
            let pk = generate_packets(10, 16, 0);
            let key = extract_key(&log, &pk, worst_case_bound(&log).unwrap(), GaloisField::GF256)
                .unwrap();
            assert_eq!(key.key_packets.len(), 1);
        }
    }

    #[test]
    fn input_validation() {
        assert!(ReceptionLog::new(2, set(&[2]), BTreeSet::new()).is_err());
        let log = ReceptionLog::new(2, set(&[0, 1]), BTreeSet::new()).unwrap();
        let short = vec![RandomPacket {
            id: 0,
            payload: BitString::zeros(8),
        }];
        assert_eq!(
            extract_key(&log, &short, EveBound::new(0), GaloisField::GF256),
            Err(SecrecyError::MissingPayload(1))
        );
        let odd: Vec<RandomPacket> = (0..2)
            .map(|id| RandomPacket {
                id,
                payload: BitString::zeros(12),
            })
            .collect();
        assert!(matches!(
            extract_key(&log, &odd, EveBound::new(0), GaloisField::GF256),
            Err(SecrecyError::SymbolAlignment { .. })
        ));
    }

    #[test]
    fn symbols_round_trip() {
        let mut s = BitString::zeros(12);
        s.set_symbol(1, 3, 0b101);
        s.set_symbol(3, 3, 0b011);
        assert_eq!(s.symbol(1, 3), 0b101);
        assert_eq!(s.symbol(3, 3), 0b011);
        assert_eq!(s.symbol(0, 3), 0);
        assert!(s.get(3) && !s.get(4) && s.get(5));
    }
}
