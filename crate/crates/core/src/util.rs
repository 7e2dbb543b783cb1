//! Small shared helpers: deterministic seed derivation and float guards.

/// SplitMix64 step. Stable, portable, and good enough for deriving
/// independent sub-seeds from a base seed.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the `index`-th sub-seed of `base` under a component `tag`.
///
/// This is the documented counter scheme used everywhere a run needs a
/// family of independent seeds (per-trial seeds, per-party seeds, ...):
/// `seed(base, tag, index)` = three SplitMix64 steps over
/// `base ^ (tag << 32) ^ index`.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut s = base ^ (tag << 32) ^ index;
    splitmix64(&mut s);
    splitmix64(&mut s);
    splitmix64(&mut s)
}

/// `⌈a/b⌉` for floats that are "morally" exact fractions. The 1e-9 slack
/// keeps representation error (e.g. `4.0/0.2 = 19.999...996`) from pushing
/// the result up a notch.
pub fn ceil_ratio(a: f64, b: f64) -> usize {
    ((a / b) - 1e-9).ceil().max(0.0) as usize
}

/// `⌊x⌋` with the same slack, used for corruption budgets: `⌊ρ·N⌋` must
/// come out as 40 for ρ=2/7, N=140 even though 2/7 is not a dyadic float.
pub fn floor_guarded(x: f64) -> u64 {
    (x + 1e-9).floor().max(0.0) as u64
}

/// FNV-1a over a byte stream, rendered by callers as a short hex digest for
/// report output.
pub fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
