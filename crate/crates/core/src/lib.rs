//! Finite-domain probability distributions, exact (smooth) min-entropy
//! computations, 4-wise independent polynomial hashing over GF(2^64), and the
//! sliced sign-distinguisher construction built on top of them.
//!
//! The crate is `no_std` + `alloc`: everything here is pure computation.
//! File formats, the CLI, and the experiment harness live in the companion
//! `pedl-cli` crate.
//!
//! Conventions used throughout (documented once, relied on everywhere):
//!
//! * `statistical_distance` is **half** the L1 distance (the total-variation
//!   convention), so "Y within distance delta of X" composes exactly with the
//!   threshold-mass characterization of smooth min-entropy.
//! * Distinguishers output ±1; the boolean 0/1 view has exactly half the
//!   advantage (see [`attack::boolean_advantage`]).
//! * Entropy parameters `k` are real-valued bit counts.
//! * All randomness is derived from explicit `u64` seeds through the
//!   counter-based mixer in [`rng`], so every result is reproducible.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod attack;
pub mod dist;
pub mod error;
pub mod gf2;
pub mod hash;
pub mod moments;
pub mod rng;
pub mod stats;
mod sum;

/// Serialize `u64` values (hash coefficients, seeds) as fixed-width
/// lowercase hex strings — JSON numbers cannot hold 64 bits exactly.
#[cfg(feature = "serde")]
pub mod serde_hex {
    use alloc::format;
    use alloc::string::String;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        let t = s.strip_prefix("0x").unwrap_or(&s);
        u64::from_str_radix(t, 16).map_err(|e| D::Error::custom(format!("bad hex u64: {e}")))
    }
}

pub use attack::{AttackParams, AttackReport, SlicedDistinguisher};
pub use dist::{Distribution, EntropyReport, FixtureKind};
pub use error::Error;
pub use hash::{PolyHash, SignHash, SliceHash};
pub use moments::{IndependenceMode, MomentReport, WalkSpec};
pub use rng::SplitMix64;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
