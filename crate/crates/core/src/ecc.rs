//! Block codes over small alphabets: repetition codes, Reed-Solomon codes
//! over prime fields, minimum-distance decoding, and the constituent-based
//! list decoder the block simulators rely on.
//!
//! Messages are integers. A Reed-Solomon message is read as its
//! little-endian base-q digit string, the digits become polynomial
//! coefficients, and the codeword is the evaluation at 0..length. With
//! `k <= length <= q` the code is MDS: minimum distance `length - k + 1`.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EccError {
    #[error("repetition codes carry 1..=24 bits, got {0}")]
    BadBits(usize),
    #[error("block length {0} is invalid here")]
    BadLength(usize),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("need k <= length <= q, got k={k} length={len} q={q}")]
    BadShape { k: usize, len: usize, q: u64 },
    #[error("message space of {0} ids does not fit in a u64")]
    MessageSpaceOverflow(f64),
    #[error("received word has {got} symbols, code length is {want}")]
    BadWord { got: usize, want: usize },
    #[error("{messages} messages exceed the brute-force decode cap")]
    CapExceeded { messages: u64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Kind {
    /// Each message is one alphabet symbol repeated `length` times; the
    /// alphabet is `2^bits`.
    Repetition { bits: usize },
    /// Degree < k polynomials over F_q evaluated at 0..length.
    ReedSolomon { k: usize },
}

/// A fixed block code.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockCode {
    kind: Kind,
    length: usize,
    q: u64,
    messages: u64,
    min_distance: usize,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// The `bits`-bit repetition code of the given block length: alphabet
/// `2^bits`, one symbol repeated `length` times, minimum distance `length`.
pub fn make_repetition_code(bits: usize, length: usize) -> Result<BlockCode, EccError> {
    if !(1..=24).contains(&bits) {
        return Err(EccError::BadBits(bits));
    }
    if length == 0 {
        return Err(EccError::BadLength(length));
    }
    Ok(BlockCode {
        kind: Kind::Repetition { bits },
        length,
        q: 1 << bits,
        messages: 1 << bits,
        min_distance: length,
    })
}

/// Reed-Solomon code with `q^k` messages, block length `length`, over the
/// prime field F_q. Requires `k <= length <= q` and a message space that
/// fits in a u64.
pub fn make_rs_code(k: usize, length: usize, q: u64) -> Result<BlockCode, EccError> {
    if !is_prime(q) {
        return Err(EccError::NotPrime(q));
    }
    if k == 0 || k > length || length as u64 > q {
        return Err(EccError::BadShape { k, len: length, q });
    }
    let bits = k as f64 * (q as f64).log2();
    if bits >= 64.0 {
        return Err(EccError::MessageSpaceOverflow(bits));
    }
    let messages = q.checked_pow(k as u32).ok_or(EccError::MessageSpaceOverflow(bits))?;
    Ok(BlockCode {
        kind: Kind::ReedSolomon { k },
        length,
        q,
        messages,
        min_distance: length - k + 1,
    })
}

impl BlockCode {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet(&self) -> u64 {
        self.q
    }

    pub fn message_count(&self) -> u64 {
        self.messages
    }

    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    /// Message capacity in field symbols (RS: k; repetition: 1).
    pub fn message_symbols(&self) -> usize {
        match self.kind {
            Kind::Repetition { .. } => 1,
            Kind::ReedSolomon { k } => k,
        }
    }

    /// Relative minimum distance `d / length`.
    pub fn relative_distance(&self) -> f64 {
        self.min_distance as f64 / self.length as f64
    }

    pub fn encode(&self, msg: u64) -> Vec<u64> {
        assert!(msg < self.messages, "message id out of range");
        match self.kind {
            Kind::Repetition { .. } => vec![msg; self.length],
            Kind::ReedSolomon { k } => {
                let coeffs = digits(msg, self.q, k);
                (0..self.length as u64)
                    .map(|x| horner(&coeffs, x, self.q))
                    .collect()
            }
        }
    }

    /// Hamming distance from `word` to the codeword of `msg`.
    pub fn distance_to(&self, msg: u64, word: &[u64]) -> Result<usize, EccError> {
        if word.len() != self.length {
            return Err(EccError::BadWord {
                got: word.len(),
                want: self.length,
            });
        }
        Ok(match self.kind {
            Kind::Repetition { .. } => word.iter().filter(|&&w| w != msg).count(),
            Kind::ReedSolomon { k } => {
                let coeffs = digits(msg, self.q, k);
                word.iter()
                    .enumerate()
                    .filter(|&(x, &w)| horner(&coeffs, x as u64, self.q) != w)
                    .count()
            }
        })
    }
}

fn digits(mut v: u64, base: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(v % base);
        v /= base;
    }
    out
}

fn from_digits(ds: &[u64], base: u64) -> u64 {
    ds.iter().rev().fold(0u64, |acc, &d| acc * base + d)
}

fn horner(coeffs: &[u64], x: u64, q: u64) -> u64 {
    coeffs.iter().rev().fold(0u64, |acc, &c| (acc * x + c) % q)
}

/// Messages above this are refused by [`min_distance_decode`]'s brute-force
/// path (repetition codes decode by majority at any size).
pub const BRUTE_FORCE_CAP: u64 = 1 << 20;

/// Nearest-codeword decode. Ties go to the smallest message id. Intractable
/// message spaces return [`EccError::CapExceeded`] instead of pretending.
pub fn min_distance_decode(code: &BlockCode, word: &[u64]) -> Result<(u64, usize), EccError> {
    if word.len() != code.length {
        return Err(EccError::BadWord {
            got: word.len(),
            want: code.length,
        });
    }
    if let Kind::Repetition { .. } = code.kind {
        // Majority symbol; distance is everything else. Ties resolve to the
        // smallest symbol because the map iterates in value order.
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &w in word {
            if w < code.messages {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
        let (best, n) = counts
            .iter()
            .max_by_key(|&(v, n)| (*n, std::cmp::Reverse(*v)))
            .map(|(v, n)| (*v, *n))
            .unwrap_or((0, 0));
        return Ok((best, word.len() - n));
    }
    if code.messages > BRUTE_FORCE_CAP {
        return Err(EccError::CapExceeded {
            messages: code.messages,
        });
    }
    let mut best = (0u64, code.length + 1);
    for msg in 0..code.messages {
        let d = code.distance_to(msg, word)?;
        if d < best.1 {
            best = (msg, d);
        }
    }
    Ok(best)
}

/// A received block together with the decoder's candidate bookkeeping: the
/// message ids whose codewords contributed coordinates (the true sender's
/// plus declared blends). The channel model keeps this list at three or
/// fewer entries.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReceivedBlock {
    pub word: Vec<u64>,
    pub constituents: Vec<u64>,
}

impl ReceivedBlock {
    pub fn new(word: Vec<u64>, constituents: Vec<u64>) -> ReceivedBlock {
        assert!(constituents.len() <= 3, "at most three constituents");
        ReceivedBlock { word, constituents }
    }
}

/// List-decode by scoring each constituent: candidates whose relative
/// distance to the word is at most `radius` survive, sorted by (distance,
/// message id) and truncated to `cap`.
pub fn list_decode(
    code: &BlockCode,
    block: &ReceivedBlock,
    radius: f64,
    cap: usize,
) -> Result<Vec<(u64, f64)>, EccError> {
    let max_dist = ((radius * code.length as f64) + 1e-9).floor() as usize;
    let mut seen = Vec::new();
    let mut out: Vec<(usize, u64)> = Vec::new();
    for &c in &block.constituents {
        if seen.contains(&c) || c >= code.messages {
            continue;
        }
        seen.push(c);
        let d = code.distance_to(c, &block.word)?;
        if d <= max_dist {
            out.push((d, c));
        }
    }
    out.sort();
    out.truncate(cap);
    Ok(out
        .into_iter()
        .map(|(d, m)| (m, d as f64 / code.length as f64))
        .collect())
}

/// Oracle route for the list decoder: scan every message. Only viable for
/// small codes; tests compare it against [`list_decode`].
pub fn brute_force_list(
    code: &BlockCode,
    word: &[u64],
    radius: f64,
) -> Result<Vec<(u64, f64)>, EccError> {
    if code.messages > BRUTE_FORCE_CAP {
        return Err(EccError::CapExceeded {
            messages: code.messages,
        });
    }
    let max_dist = ((radius * code.length as f64) + 1e-9).floor() as usize;
    let mut out = Vec::new();
    for msg in 0..code.messages {
        let d = code.distance_to(msg, word)?;
        if d <= max_dist {
            out.push((msg, d as f64 / code.length as f64));
        }
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Vote weight for a candidate at relative distance `delta`: `1 - 2δ`,
/// floored at zero. Candidates past half the block contribute nothing.
///
/// Panics if `delta` is outside `[0, 1]`.
pub fn vote_weight(delta: f64) -> f64 {
    assert!((0.0..=1.0).contains(&delta), "relative distance out of range");
    (1.0 - 2.0 * delta).max(0.0)
}

/// Pack a digit string (values below `base`) into a message id for a code
/// with `symbols` base-`base` digits of capacity. Returns `None` when the
/// string is too long.
pub fn pack_digits(ds: &[u64], base: u64, symbols: usize) -> Option<u64> {
    if ds.len() > symbols || ds.iter().any(|&d| d >= base) {
        return None;
    }
    let mut padded = ds.to_vec();
    padded.resize(symbols, 0);
    Some(from_digits(&padded, base))
}

/// Inverse of [`pack_digits`].
pub fn unpack_digits(msg: u64, base: u64, symbols: usize) -> Vec<u64> {
    digits(msg, base, symbols)
}
