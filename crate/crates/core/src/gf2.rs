//! Binary-field arithmetic.
//!
//! Two flavors:
//!
//! * [`gf64_mul`] — multiplication in GF(2^64) modulo the minimal-weight
//!   irreducible polynomial x^64 + x^4 + x^3 + x + 1.  This is the field the
//!   full-size polynomial hash family lives in.
//! * [`SmallField`] — GF(2^b) for 1 <= b <= 16, used by the exhaustive
//!   enumeration oracles where the whole coefficient space of a degree-3
//!   polynomial family must be walked.
//!
//! Irreducibility of every modulus used here is checked by tests (brute-force
//! trial division for the small fields, a Frobenius/gcd argument for the
//! 64-bit one), so the 4-wise independence facts downstream rest on verified
//! arithmetic rather than on a transcribed constant.

use crate::error::Error;
use crate::Result;
use alloc::format;

/// Low 64 bits of x^64 + x^4 + x^3 + x + 1 (the x^64 term is implicit).
pub const REDUCTION_POLY_64: u64 = 0x1B;

/// Carry-less multiplication of two 64-bit polynomials over GF(2).
///
/// Windowed shift-xor: a 16-entry table of the carry-less multiples of `b`
/// by all 4-bit polynomials, then one lookup per nibble of `a`.  Obviously
/// correct and fast enough for the Monte-Carlo loops in this crate.
#[inline]
pub fn clmul64(a: u64, b: u64) -> u128 {
    let b = b as u128;
    let mut table = [0u128; 16];
    table[1] = b;
    table[2] = b << 1;
    table[4] = b << 2;
    table[8] = b << 3;
    let mut j = 3usize;
    while j < 16 {
        if !j.is_power_of_two() {
            let low = j & j.wrapping_neg();
            table[j] = table[low] ^ table[j ^ low];
        }
        j += 1;
    }
    let mut acc = 0u128;
    let mut i = 0;
    while i < 16 {
        let nib = ((a >> (4 * i)) & 0xF) as usize;
        acc ^= table[nib] << (4 * i);
        i += 1;
    }
    acc
}

/// Multiplication in GF(2^64) = GF(2)[x] / (x^64 + x^4 + x^3 + x + 1).
#[inline]
pub fn gf64_mul(a: u64, b: u64) -> u64 {
    let wide = clmul64(a, b);
    reduce128(wide)
}

/// Reduce a 128-bit polynomial modulo x^64 + x^4 + x^3 + x + 1.
///
/// Folding the high half with the low reduction polynomial twice suffices
/// because deg(0x1B) = 4 < 64 - 4.
#[inline]
fn reduce128(wide: u128) -> u64 {
    let lo = wide as u64;
    let hi = (wide >> 64) as u64;
    // hi * x^64 == hi * 0x1B (mod p); that product has degree < 64 + 5.
    let folded = clmul64(hi, REDUCTION_POLY_64);
    let f_lo = folded as u64;
    let f_hi = (folded >> 64) as u64; // at most 4 bits
    lo ^ f_lo ^ clmul64(f_hi, REDUCTION_POLY_64) as u64
}

/// Minimal-weight irreducible polynomials for GF(2^b), b = 1..=16, with the
/// leading x^b term dropped.  Index 0 is unused.
const SMALL_REDUCTION: [u32; 17] = [
    0,    //
    0x3,  // x + 1
    0x7,  // x^2 + x + 1
    0xB,  // x^3 + x + 1
    0x13, // x^4 + x + 1
    0x25, // x^5 + x^2 + 1
    0x43, // x^6 + x + 1
    0x83, // x^7 + x + 1
    0x11B, // x^8 + x^4 + x^3 + x + 1
    0x203, // x^9 + x + 1
    0x409, // x^10 + x^3 + 1
    0x805, // x^11 + x^2 + 1
    0x1009, // x^12 + x^3 + 1
    0x201B, // x^13 + x^4 + x^3 + x + 1
    0x4021, // x^14 + x^5 + 1
    0x8003, // x^15 + x + 1
    0x1002B, // x^16 + x^5 + x^3 + x + 1
];

/// GF(2^b) for small b, with full-polynomial moduli from a fixed table.
///
/// Elements are the low `bits` bits of a `u32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallField {
    bits: u32,
    /// Full modulus including the leading term, e.g. 0x13 for GF(2^4).
    modulus: u32,
}

impl SmallField {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::InvalidParameter(format!(
                "small field size must be 1..=16 bits, got {bits}"
            )));
        }
        Ok(SmallField {
            bits,
            modulus: SMALL_REDUCTION[bits as usize],
        })
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of field elements, 2^bits.
    #[inline]
    pub fn order(&self) -> u32 {
        1 << self.bits
    }

    #[inline]
    pub fn mask(&self) -> u32 {
        self.order() - 1
    }

    /// Field multiplication by shift-and-xor with on-the-fly reduction.
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.order() && b < self.order());
        let top = 1u32 << self.bits;
        let mut a = a;
        let mut b = b;
        let mut acc = 0u32;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }

    /// Evaluate the degree-3 polynomial with coefficients
    /// `(c3, c2, c1, c0)` at `x` (Horner).
    #[inline]
    pub fn eval_cubic(&self, c: [u32; 4], x: u32) -> u32 {
        let mut acc = c[0]; // c3
        acc = self.mul(acc, x) ^ c[1];
        acc = self.mul(acc, x) ^ c[2];
        self.mul(acc, x) ^ c[3]
    }
}
