//! Moment analysis of hash-signed random walks.
//!
//! The walk is `Z = sum_i eps_i * w_i` where `eps_i` is the ±1 output of a
//! random 4-wise independent sign hash at point `i`.  In sliced mode the sum
//! is further restricted to the points an independent slice hash sends to
//! slice 0, so each term survives with probability `1/T`.
//!
//! For any exactly 4-wise family the second and fourth moments are fully
//! determined by the weights:
//!
//! - unsliced: `E[Z^2] = s2` and `E[Z^4] = 3*s2^2 - 2*s4`,
//! - sliced:   `E[Z^2] = s2/T` and `E[Z^4] = s4/T + 3*(s2^2 - s4)/T^2`,
//!
//! with `s2 = sum w_i^2`, `s4 = sum w_i^4`.  The first absolute moment is
//! not pinned by 4-wise independence but is sandwiched by Hölder and
//! Cauchy-Schwarz: `m2^(3/2)/sqrt(m4) <= E|Z| <= sqrt(m2)`.  Chaining that
//! through Paley-Zygmund gives the distribution-free tail floor
//! `Pr[|Z| >= sqrt(m2)/3] >= (1 - 3^(-1/2))^2 / 3 ≈ 0.0595`, which is what
//! keeps the per-trial success probability above [`SUCCESS_FLOOR`].
//!
//! Moments are computed either exactly, by enumerating every hash in a
//! small-field family, or by Monte-Carlo sampling from the full 64-bit
//! family.

use crate::error::Error;
use crate::gf2::SmallField;
use crate::hash::{SignHash, SliceHash};
use crate::rng::{derive_stream, SplitMix64};
use crate::stats::{wilson_lower_bound, WILSON_Z_95};
use crate::sum::Neumaier;
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

/// Guaranteed per-trial success probability of the sliced attack: 1/17.
pub const SUCCESS_FLOOR: f64 = 1.0 / 17.0;

/// Largest field size enumerated exhaustively without slicing (2^(3b) sign
/// polynomials after the free-coefficient reduction).
pub const MAX_EXHAUSTIVE_BITS: u32 = 6;

/// Largest field size enumerated exhaustively with a joint slice hash
/// (2^(7b) hash pairs).
pub const MAX_EXHAUSTIVE_SLICED_BITS: u32 = 3;

/// How the hash family is explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "kebab-case"))]
pub enum IndependenceMode {
    /// Enumerate every cubic polynomial over GF(2^field_bits); moments are
    /// exact averages over the whole family.
    ExhaustiveSmallField { field_bits: u32 },
    /// Sample hashes from the GF(2^64) family.
    MonteCarlo,
}

/// A signed walk to analyse.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkSpec {
    /// Step weights; point `i` of the walk is domain element `i`.
    pub weights: Vec<f64>,
    pub independence: IndependenceMode,
    /// `Some(t)` restricts the walk to slice 0 of an independent slice hash
    /// with `T = 2^t` slices.
    pub slice_bits: Option<u32>,
}

/// Provable envelope for the measured moments.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentBounds {
    /// `predicted_m2^(3/2) / sqrt(predicted_m4)` (Hölder).
    pub m1_lower: f64,
    /// `sqrt(predicted_m2)` (Cauchy-Schwarz).
    pub m1_upper: f64,
    /// `predicted_m2^2` (Jensen).
    pub m4_lower: f64,
    /// `3 * predicted_m2^2` unsliced; the exact 4-wise value when sliced.
    pub m4_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentReport {
    /// Measured `E|Z|`.
    pub m1: f64,
    /// Measured `E[Z^2]`.
    pub m2: f64,
    /// Measured `E[Z^4]`.
    pub m4: f64,
    /// `sum w_i^2`, the full walk variance before any slicing.
    pub sigma2: f64,
    /// Exact 4-wise value of `E[Z^2]` (`sigma2`, or `sigma2/T` sliced).
    pub predicted_m2: f64,
    /// Exact 4-wise value of `E[Z^4]`.
    pub predicted_m4: f64,
    pub bounds: MomentBounds,
    /// Measured moments match the predictions and the m1 sandwich, up to
    /// 1e-9 relative in exhaustive mode or a sampling-noise allowance in
    /// Monte-Carlo mode.
    pub bounds_ok: bool,
}

/// Tail mass of `|Z|` at the threshold `sqrt(predicted_m2)/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailReport {
    pub threshold: f64,
    /// `Pr[|Z| >= threshold]`: exact in exhaustive mode, empirical otherwise.
    pub tail_probability: f64,
    /// What we can certify: the exact probability itself, or a 95% Wilson
    /// lower bound on it.
    pub lower_confidence: f64,
    pub exact: bool,
    /// `lower_confidence >= SUCCESS_FLOOR`.
    pub pass: bool,
}

struct Prepared {
    s2: f64,
    s4: f64,
    slice_count: u64,
}

fn prepare(spec: &WalkSpec) -> Result<Prepared> {
    if spec.weights.is_empty() {
        return Err(Error::InvalidParameter("walk needs at least one weight".into()));
    }
    if spec.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("walk weights must be finite".into()));
    }
    if spec.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter("walk needs a nonzero weight".into()));
    }
    let m = spec.weights.len() as u64;
    match spec.independence {
        IndependenceMode::ExhaustiveSmallField { field_bits } => {
            let cap = if spec.slice_bits.is_some() {
                MAX_EXHAUSTIVE_SLICED_BITS
            } else {
                MAX_EXHAUSTIVE_BITS
            };
            if field_bits == 0 || field_bits > cap {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive field_bits={field_bits} outside 1..={cap}"
                )));
            }
            if m > 1u64 << field_bits {
                return Err(Error::InvalidParameter(format!(
                    "{m} walk points do not fit in GF(2^{field_bits})"
                )));
            }
            if let Some(t) = spec.slice_bits {
                if t > field_bits {
                    return Err(Error::InvalidParameter(format!(
                        "slice_bits={t} exceeds field_bits={field_bits}"
                    )));
                }
            }
        }
        IndependenceMode::MonteCarlo => {
            if m > 1 << 20 {
                return Err(Error::InvalidParameter(format!("{m} walk points is too many")));
            }
            if let Some(t) = spec.slice_bits {
                if t > 20 {
                    return Err(Error::InvalidParameter(format!("slice_bits={t} exceeds 20")));
                }
            }
        }
    }
    let mut s2 = Neumaier::new();
    let mut s4 = Neumaier::new();
    for &w in &spec.weights {
        s2.add(w * w);
        s4.add(w * w * w * w);
    }
    Ok(Prepared {
        s2: s2.total(),
        s4: s4.total(),
        slice_count: 1u64 << spec.slice_bits.unwrap_or(0),
    })
}

fn predictions(p: &Prepared) -> (f64, f64) {
    let t = p.slice_count as f64;
    let pm2 = p.s2 / t;
    // Pair terms carry E[b_i b_j] = 1/T^2, diagonal terms E[b_i] = 1/T;
    // at T = 1 this collapses to the unsliced 3*s2^2 - 2*s4.
    let pm4 = p.s4 / t + 3.0 * (p.s2 * p.s2 - p.s4) / (t * t);
    (pm2, pm4)
}

fn envelope(p: &Prepared, pm2: f64, pm4: f64) -> MomentBounds {
    MomentBounds {
        m1_lower: pm2 * libm::sqrt(pm2 / pm4),
        m1_upper: libm::sqrt(pm2),
        m4_lower: pm2 * pm2,
        m4_upper: if p.slice_count == 1 { 3.0 * pm2 * pm2 } else { pm4 },
    }
}

/// Exhaustive enumerations average over the sign hash's free coefficient
/// analytically: adding c0 only XORs a constant into every evaluation, so
/// its low bit either preserves or flips *all* signs, and |Z| is unchanged.
struct SignTables {
    /// `t3[i][c] = c * x_i^3`, etc.; sign of point i under (c3,c2,c1) is the
    /// low bit of `t3[i][c3] ^ t2[i][c2] ^ t1[i][c1]`.
    t3: Vec<Vec<u32>>,
    t2: Vec<Vec<u32>>,
    t1: Vec<Vec<u32>>,
}

fn sign_tables(field: &SmallField, m: usize) -> SignTables {
    let order = field.order() as usize;
    let mut t3 = Vec::with_capacity(m);
    let mut t2 = Vec::with_capacity(m);
    let mut t1 = Vec::with_capacity(m);
    for i in 0..m {
        let x = i as u32;
        let x2 = field.mul(x, x);
        let x3 = field.mul(x2, x);
        t3.push((0..order as u32).map(|c| field.mul(c, x3)).collect());
        t2.push((0..order as u32).map(|c| field.mul(c, x2)).collect());
        t1.push((0..order as u32).map(|c| field.mul(c, x)).collect());
    }
    SignTables { t3, t2, t1 }
}

struct Accum {
    m1: Neumaier,
    m2: Neumaier,
    m4: Neumaier,
    tail: u64,
    count: u64,
}

impl Accum {
    fn new() -> Self {
        Accum { m1: Neumaier::new(), m2: Neumaier::new(), m4: Neumaier::new(), tail: 0, count: 0 }
    }

    fn push(&mut self, z: f64, threshold: f64) {
        let a = if z < 0.0 { -z } else { z };
        self.m1.add(a);
        let z2 = z * z;
        self.m2.add(z2);
        self.m4.add(z2 * z2);
        if a >= threshold {
            self.tail += 1;
        }
        self.count += 1;
    }
}

fn scan_exhaustive_unsliced(
    field: &SmallField,
    weights: &[f64],
    threshold: f64,
    acc: &mut Accum,
) {
    let order = field.order() as usize;
    let tabs = sign_tables(field, weights.len());
    for c3 in 0..order {
        for c2 in 0..order {
            for c1 in 0..order {
                let mut z = 0.0f64;
                for (i, &w) in weights.iter().enumerate() {
                    let v = tabs.t3[i][c3] ^ tabs.t2[i][c2] ^ tabs.t1[i][c1];
                    if v & 1 == 0 {
                        z += w;
                    } else {
                        z -= w;
                    }
                }
                acc.push(z, threshold);
            }
        }
    }
}

fn scan_exhaustive_sliced(
    field: &SmallField,
    weights: &[f64],
    t_bits: u32,
    threshold: f64,
    acc: &mut Accum,
) {
    let order = field.order() as usize;
    let mask = (1u32 << t_bits) - 1;
    let tabs = sign_tables(field, weights.len());
    let slice_tabs = sign_tables(field, weights.len()); // same tables; reuse for the slicer
    // The slicer's free coefficient relabels slices, so it genuinely changes
    // which points survive; enumerate all four of its coefficients.
    for c3 in 0..order {
        for c2 in 0..order {
            for c1 in 0..order {
                // Signs for this sign-hash triple, packed once.
                let signs: Vec<bool> = (0..weights.len())
                    .map(|i| (tabs.t3[i][c3] ^ tabs.t2[i][c2] ^ tabs.t1[i][c1]) & 1 == 0)
                    .collect();
                for d3 in 0..order {
                    for d2 in 0..order {
                        for d1 in 0..order {
                            let partial: Vec<u32> = (0..weights.len())
                                .map(|i| {
                                    slice_tabs.t3[i][d3]
                                        ^ slice_tabs.t2[i][d2]
                                        ^ slice_tabs.t1[i][d1]
                                })
                                .collect();
                            for d0 in 0..order as u32 {
                                let mut z = 0.0f64;
                                for (i, &w) in weights.iter().enumerate() {
                                    if (partial[i] ^ d0) & mask == 0 {
                                        if signs[i] {
                                            z += w;
                                        } else {
                                            z -= w;
                                        }
                                    }
                                }
                                acc.push(z, threshold);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn scan_monte_carlo(
    weights: &[f64],
    slice_bits: Option<u32>,
    trials: u64,
    seed: u64,
    threshold: f64,
    acc: &mut Accum,
) -> Result<()> {
    for i in 0..trials {
        let mut rng = SplitMix64::new(derive_stream(seed, i));
        let sign = SignHash::sample(&mut rng);
        let slicer = match slice_bits {
            Some(t) => Some(SliceHash::sample(&mut rng, t)?),
            None => None,
        };
        let mut z = 0.0f64;
        for (i, &w) in weights.iter().enumerate() {
            let pt = i as u64;
            if let Some(ref s) = slicer {
                if s.slice(pt) != 0 {
                    continue;
                }
            }
            z += sign.sign(pt) as f64 * w;
        }
        acc.push(z, threshold);
    }
    Ok(())
}

fn run_scan(spec: &WalkSpec, trials: u64, seed: u64, threshold: f64) -> Result<(Prepared, Accum)> {
    let p = prepare(spec)?;
    let mut acc = Accum::new();
    match spec.independence {
        IndependenceMode::ExhaustiveSmallField { field_bits } => {
            let field = SmallField::new(field_bits)?;
            match spec.slice_bits {
                None | Some(0) => {
                    scan_exhaustive_unsliced(&field, &spec.weights, threshold, &mut acc)
                }
                Some(t) => {
                    scan_exhaustive_sliced(&field, &spec.weights, t, threshold, &mut acc)
                }
            }
        }
        IndependenceMode::MonteCarlo => {
            if trials < 100 {
                return Err(Error::InvalidParameter(format!(
                    "Monte-Carlo moments need at least 100 trials, got {trials}"
                )));
            }
            scan_monte_carlo(&spec.weights, spec.slice_bits, trials, seed, threshold, &mut acc)?;
        }
    }
    Ok((p, acc))
}

/// Measure `E|Z|`, `E[Z^2]`, `E[Z^4]` and compare them against the exact
/// 4-wise predictions.  `trials` and `seed` only matter in Monte-Carlo mode;
/// exhaustive mode averages over the entire family and is deterministic.
pub fn walk_moments(spec: &WalkSpec, trials: u64, seed: u64) -> Result<MomentReport> {
    let (p, acc) = run_scan(spec, trials, seed, f64::INFINITY)?;
    let count = acc.count as f64;
    let m1 = acc.m1.total() / count;
    let m2 = acc.m2.total() / count;
    let m4 = acc.m4.total() / count;
    let (pm2, pm4) = predictions(&p);
    let bounds = envelope(&p, pm2, pm4);
    let tol = match spec.independence {
        IndependenceMode::ExhaustiveSmallField { .. } => 1e-9,
        // Generous 4-5 sigma allowance for sampling noise on the fourth
        // moment, whose relative standard error dominates.
        IndependenceMode::MonteCarlo => 20.0 / libm::sqrt(trials as f64),
    };
    let bounds_ok = (m2 - pm2).abs() <= tol * pm2.max(1e-300)
        && (m4 - pm4).abs() <= tol * pm4.max(1e-300)
        && m1 >= bounds.m1_lower * (1.0 - tol)
        && m1 <= bounds.m1_upper * (1.0 + tol);
    Ok(MomentReport {
        m1,
        m2,
        m4,
        sigma2: p.s2,
        predicted_m2: pm2,
        predicted_m4: pm4,
        bounds,
        bounds_ok,
    })
}

/// `m2^(3/2) / sqrt(m4)`: the Hölder lower bound on `E|Z|` from the second
/// and fourth moments.
pub fn first_moment_lower_bound(m2: f64, m4: f64) -> Result<f64> {
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::InvalidParameter(format!("m2 = {m2} must be positive")));
    }
    if !m4.is_finite() || m4 < m2 * m2 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "m4 = {m4} below the Jensen floor m2^2 = {}",
            m2 * m2
        )));
    }
    Ok(m2 * libm::sqrt(m2 / m4.max(m2 * m2)))
}

/// Paley-Zygmund on `|Z|`: `Pr[|Z| >= theta * m1] >= (1-theta)^2 * m1^2 / m2`.
pub fn paley_zygmund_lower(theta: f64, m1: f64, m2: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} not in (0, 1)")));
    }
    if !(m1 > 0.0) || !m1.is_finite() {
        return Err(Error::InvalidParameter(format!("m1 = {m1} must be positive")));
    }
    if !m2.is_finite() || m2 < m1 * m1 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "m2 = {m2} below the Jensen floor m1^2 = {}",
            m1 * m1
        )));
    }
    Ok((1.0 - theta) * (1.0 - theta) * m1 * m1 / m2.max(m1 * m1))
}

/// Measure `Pr[|Z| >= sqrt(E[Z^2])/3]` and certify it against the 1/17
/// floor.  Monte-Carlo mode certifies via a 95% Wilson lower bound and
/// needs at least 1000 trials; exhaustive mode computes the probability
/// exactly over the whole family.
pub fn anticoncentration_check(spec: &WalkSpec, trials: u64, seed: u64) -> Result<TailReport> {
    if matches!(spec.independence, IndependenceMode::MonteCarlo) && trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "tail estimation needs at least 1000 trials, got {trials}"
        )));
    }
    let p = prepare(spec)?;
    let (pm2, _) = predictions(&p);
    let threshold = libm::sqrt(pm2) / 3.0;
    let (_, acc) = run_scan(spec, trials, seed, threshold)?;
    let tail_probability = acc.tail as f64 / acc.count as f64;
    let exact = matches!(spec.independence, IndependenceMode::ExhaustiveSmallField { .. });
    let lower_confidence = if exact {
        tail_probability
    } else {
        wilson_lower_bound(acc.tail, acc.count, WILSON_Z_95)
    };
    Ok(TailReport {
        threshold,
        tail_probability,
        lower_confidence,
        exact,
        pass: lower_confidence >= SUCCESS_FLOOR,
    })
}
