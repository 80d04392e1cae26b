//! Small deterministic hashing helpers.
//!
//! Everything that needs a platform-independent, seed-stable scramble
//! (glyph patterns, fill-in payloads, restore sentinels, per-app sub-seeds)
//! goes through FNV-1a so the outputs are identical across runs and targets.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// FNV-1a over a string plus a 64-bit salt.
pub fn fnv1a_salted(s: &str, salt: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in salt.to_le_bytes().iter() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    for &b in s.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Extracts byte `i` of the hash stream seeded by `h`, mixing the index in
/// so long pixel runs do not repeat with period 8.
pub fn stream_byte(h: u64, i: u64) -> u8 {
    let mixed = h
        .rotate_left((i % 61) as u32)
        .wrapping_add(i.wrapping_mul(FNV_PRIME));
    (mixed ^ (mixed >> 32)) as u8
}
