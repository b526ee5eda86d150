//! Distinguisher construction and evaluation.
//!
//! The pipeline: draw a random ±1 hash `D` and an independent slice hash
//! `h` splitting the domain into `T` slices, measure the signed advantage of
//! `D` restricted to each slice, and flip each slice by the sign of its own
//! advantage (the advice vector).  The composed distinguisher
//! `D̂(x) = advice[h(x)] * D(x)` then collects the absolute values: its total
//! advantage is the sum of the per-slice magnitudes, which can only improve
//! on the unsliced `|advantage|`.
//!
//! For distributions X whose smooth min-entropy at distance `delta` is below
//! `k`, facing any Y with min-entropy at least `k`, this succeeds with
//! advantage at least `(1/3) * sqrt(T) * 2^(-k/2) * delta` with probability
//! at least 1/17 over the hash draws.  [`run_trial`] measures one draw,
//! [`estimate_success_probability`] aggregates many, and
//! [`worst_case_advantage`] computes the exact value of a fixed distinguisher
//! against the *worst* Y of min-entropy `k` (a small linear program with a
//! closed-form greedy solution).

use crate::dist::{for_each_diff, Distribution, DENSE_MAX_N};
use crate::error::Error;
use crate::hash::{PolyHash, SignHash, SliceHash};
use crate::rng::{derive_stream, SplitMix64};
use crate::stats::{wilson_lower_bound, WILSON_Z_95};
use crate::sum::Neumaier;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Parameters shared by a batch of attack trials.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackParams {
    /// Domain exponent of both distributions.
    pub n: u32,
    /// Min-entropy floor assumed of Y, in bits (real-valued).
    pub k: f64,
    /// Smoothing distance of the hypothesis on X.
    pub delta: f64,
    /// log2 of the slice count, so T = 2^t_bits is always a power of two.
    pub t_bits: u32,
}

/// Slice counts above 2^20 would make every report carry millions of
/// per-slice entries; nothing in the intended regime needs that.
pub const MAX_T_BITS: u32 = 20;

impl AttackParams {
    pub fn new(n: u32, k: f64, delta: f64, t_bits: u32) -> Result<Self> {
        if n == 0 || n > crate::dist::MAX_N {
            return Err(Error::InvalidParameter(format!("bad domain exponent {n}")));
        }
        if !k.is_finite() || k < 0.0 || k > n as f64 {
            return Err(Error::InvalidParameter(format!(
                "entropy floor k={k} not in [0, {n}]"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing distance {delta} not in (0, 1]"
            )));
        }
        if t_bits > MAX_T_BITS || t_bits > n {
            return Err(Error::InvalidParameter(format!(
                "t_bits={t_bits} exceeds min({MAX_T_BITS}, n={n})"
            )));
        }
        Ok(AttackParams { n, k, delta, t_bits })
    }

    /// Pick the slice count for a target advantage via [`choose_slice_count`].
    pub fn from_epsilon(n: u32, k: f64, delta: f64, epsilon: f64) -> Result<Self> {
        let t = choose_slice_count(epsilon, k, delta, n)?;
        Self::new(n, k, delta, t.trailing_zeros())
    }

    /// Number of slices, T.
    #[inline]
    pub fn slice_count(&self) -> u64 {
        1u64 << self.t_bits
    }

    /// The guaranteed advantage when the entropy hypothesis holds:
    /// `(1/3) * sqrt(T) * 2^(-k/2) * delta`.
    pub fn advantage_bound(&self) -> f64 {
        (1.0 / 3.0)
            * libm::sqrt(self.slice_count() as f64)
            * libm::exp2(-self.k / 2.0)
            * self.delta
    }
}

/// Smallest power-of-two slice count whose advantage bound reaches `epsilon`,
/// i.e. the least `T = 2^t` (integer `t >= 0`) with `T >= 9 * eps^2 * 2^k / delta^2`.
///
/// Errors when the request is out of the tradeoff's range on either side:
/// `epsilon` above what `T = 2^n` can promise, or below the single-slice
/// bound `(1/3) * 2^(-k/2) * delta` (the solution would need `t < 0`).
pub fn choose_slice_count(epsilon: f64, k: f64, delta: f64, n: u32) -> Result<u64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!("target advantage {epsilon} must be > 0")));
    }
    if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
        return Err(Error::InvalidParameter(format!("smoothing distance {delta} not in (0, 1]")));
    }
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidParameter(format!("entropy floor {k} must be >= 0")));
    }
    let target = 9.0 * epsilon * epsilon * libm::exp2(k) / (delta * delta);
    // Tiny relative slack so exact-boundary requests (target equal to a
    // power of two up to roundoff) resolve to that power of two.
    let slack = 1.0 + 1e-9;
    if target * slack < 1.0 {
        return Err(Error::OutOfRange(format!(
            "target advantage {epsilon} is below the single-slice bound \
             (1/3)*2^(-k/2)*delta = {}; T >= 1 requires a larger epsilon",
            libm::exp2(-k / 2.0) * delta / 3.0
        )));
    }
    if target > libm::exp2(n as f64) * slack {
        return Err(Error::OutOfRange(format!(
            "target advantage {epsilon} unreachable: required T exceeds the domain 2^{n}"
        )));
    }
    let mut t = 1u64;
    while (t as f64) * slack < target {
        t <<= 1;
    }
    Ok(t)
}

/// Size of the composed distinguisher in the fixed cost model: `T` units of
/// advice plus two degree-3 hash evaluations at `n^2` apiece.
pub fn circuit_size_estimate(params: &AttackParams) -> u64 {
    params.slice_count() + 2 * (params.n as u64) * (params.n as u64)
}

/// Anything that labels domain points with ±1.
pub trait Distinguisher {
    fn sign_at(&self, x: u64) -> i8;
}

impl Distinguisher for SignHash {
    #[inline]
    fn sign_at(&self, x: u64) -> i8 {
        self.sign(x)
    }
}

impl<F: Fn(u64) -> i8> Distinguisher for F {
    #[inline]
    fn sign_at(&self, x: u64) -> i8 {
        self(x)
    }
}

/// `sum_x D(x) * (P_X(x) - P_Y(x))`, optionally restricted to a sorted
/// subset of points.  The absolute value is the distinguishing advantage in
/// the ±1 convention (at most 2); the boolean 0/1 convention halves it.
pub fn signed_advantage<D: Distinguisher + ?Sized>(
    d: &D,
    x: &Distribution,
    y: &Distribution,
    subset: Option<&[u64]>,
) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { left: x.n(), right: y.n() });
    }
    if let Some(s) = subset {
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "subset restriction must be sorted and duplicate-free".into(),
            ));
        }
    }
    let mut acc = Neumaier::new();
    for_each_diff(x, y, |pt, px, py| {
        if let Some(s) = subset {
            if s.binary_search(&pt).is_err() {
                return;
            }
        }
        acc.add(d.sign_at(pt) as f64 * (px - py));
    });
    Ok(acc.total())
}

/// Advantage of the 0/1-output view of `d`: exactly half the ±1 advantage.
pub fn boolean_advantage<D: Distinguisher + ?Sized>(
    d: &D,
    x: &Distribution,
    y: &Distribution,
) -> Result<f64> {
    Ok(signed_advantage(d, x, y, None)?.abs() / 2.0)
}

/// The signed advantage of `sign` restricted to each slice of `slicer`.
pub fn slice_advantages(
    sign: &SignHash,
    slicer: &SliceHash,
    x: &Distribution,
    y: &Distribution,
) -> Result<Vec<f64>> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { left: x.n(), right: y.n() });
    }
    if slicer.t_bits > MAX_T_BITS {
        return Err(Error::InvalidParameter(format!(
            "slice count 2^{} too large to tabulate",
            slicer.t_bits
        )));
    }
    let mut acc = vec![Neumaier::new(); slicer.slice_count() as usize];
    for_each_diff(x, y, |pt, px, py| {
        let s = slicer.slice(pt) as usize;
        acc[s].add(sign.sign(pt) as f64 * (px - py));
    });
    Ok(acc.into_iter().map(|a| a.total()).collect())
}

/// A sign hash composed with per-slice advice flips.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlicedDistinguisher {
    pub sign: SignHash,
    pub slicer: SliceHash,
    /// One ±1 flip per slice.  Ties (zero or empty slice advantage)
    /// resolve to +1 so the advice is always well defined.
    pub advice: Vec<i8>,
}

impl SlicedDistinguisher {
    /// `advice[h(x)] * D(x)`.
    #[inline]
    pub fn evaluate(&self, x: u64) -> i8 {
        self.advice[self.slicer.slice(x) as usize] * self.sign.sign(x)
    }

    pub fn slice_count(&self) -> u64 {
        self.advice.len() as u64
    }
}

impl Distinguisher for SlicedDistinguisher {
    #[inline]
    fn sign_at(&self, x: u64) -> i8 {
        self.evaluate(x)
    }
}

/// Compose `sign` and `slicer` with the advantage-sign advice against the
/// concrete pair (X, Y).  The composed total advantage is the sum of the
/// per-slice absolute advantages, hence at least `|signed_advantage(sign)|`.
pub fn build_sliced(
    sign: SignHash,
    slicer: SliceHash,
    x: &Distribution,
    y: &Distribution,
) -> Result<SlicedDistinguisher> {
    let advs = slice_advantages(&sign, &slicer, x, y)?;
    Ok(SlicedDistinguisher {
        sign,
        slicer,
        advice: advice_from(&advs),
    })
}

fn advice_from(advs: &[f64]) -> Vec<i8> {
    advs.iter().map(|&a| if a < 0.0 { -1 } else { 1 }).collect()
}

/// Seeds recorded in a trial report, sufficient to reproduce it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialSeeds {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_hex"))]
    pub trial: u64,
    pub sign: PolyHash,
    pub slicer: PolyHash,
}

/// Outcome of a single hash draw.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackReport {
    /// Total advantage of the composed distinguisher: sum of `per_slice`.
    pub advantage: f64,
    /// `(1/3) * sqrt(T) * 2^(-k/2) * delta`.
    pub bound: f64,
    /// `advantage >= bound`.
    pub success: bool,
    /// True when the entropy hypothesis held for this X (its smooth
    /// min-entropy at `delta` is below `k`), so `success` carries the
    /// guaranteed 1/17 floor.  False marks the trial as vacuous.
    pub guaranteed: bool,
    /// Circuit size in the fixed cost model, `T + 2n^2`.
    pub size_units: u64,
    /// Absolute per-slice advantages (length T).
    pub per_slice: Vec<f64>,
    pub seeds: TrialSeeds,
}

/// Draw a sign hash and a slice hash from `trial_seed`, build the advice
/// against (X, Y), and report the composed advantage.
///
/// Preconditions: matching domains, and `Y` must actually have min-entropy
/// at least `k` — a Y below the floor makes the comparison meaningless, so
/// it raises instead of reporting.
pub fn run_trial(
    x: &Distribution,
    y: &Distribution,
    params: &AttackParams,
    trial_seed: u64,
) -> Result<AttackReport> {
    if x.n() != params.n || y.n() != params.n {
        return Err(Error::DimensionMismatch { left: x.n(), right: y.n() });
    }
    if y.min_entropy() < params.k - 1e-9 {
        return Err(Error::PreconditionViolated(format!(
            "Y has min-entropy {} < k = {}",
            y.min_entropy(),
            params.k
        )));
    }
    let guaranteed = x.smooth_min_entropy(params.delta)? < params.k;
    let mut rng = SplitMix64::new(trial_seed);
    let sign = SignHash::sample(&mut rng);
    let slicer = SliceHash::sample(&mut rng, params.t_bits)?;
    let advs = slice_advantages(&sign, &slicer, x, y)?;
    let per_slice: Vec<f64> = advs.iter().map(|a| a.abs()).collect();
    let advantage = crate::sum::sum(per_slice.iter().copied());
    let bound = params.advantage_bound();
    Ok(AttackReport {
        advantage,
        bound,
        success: advantage >= bound,
        guaranteed,
        size_units: circuit_size_estimate(params),
        per_slice,
        seeds: TrialSeeds {
            trial: trial_seed,
            sign: sign.0,
            slicer: slicer.hash,
        },
    })
}

/// Aggregate of many trials.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub fraction: f64,
    /// 95% Wilson lower confidence bound on the success probability.
    pub wilson_lower: f64,
    pub mean_advantage: f64,
}

/// Run `trials` independent trials with seeds derived from `root_seed` and
/// estimate the success probability.  Needs at least 30 trials for the
/// Wilson bound to mean anything.
pub fn estimate_success_probability(
    x: &Distribution,
    y: &Distribution,
    params: &AttackParams,
    trials: u64,
    root_seed: u64,
) -> Result<SuccessEstimate> {
    if trials < 30 {
        return Err(Error::InvalidParameter(format!(
            "need at least 30 trials for a meaningful estimate, got {trials}"
        )));
    }
    let mut successes = 0u64;
    let mut advantage = Neumaier::new();
    for i in 0..trials {
        let report = run_trial(x, y, params, derive_stream(root_seed, i))?;
        if report.success {
            successes += 1;
        }
        advantage.add(report.advantage);
    }
    Ok(SuccessEstimate {
        trials,
        successes,
        fraction: successes as f64 / trials as f64,
        wilson_lower: wilson_lower_bound(successes, trials, WILSON_Z_95),
        mean_advantage: advantage.total() / trials as f64,
    })
}

/// Exact distance from `E_X[D̂]` to the achievable range of `E_Y[D̂]` over
/// *all* Y with min-entropy at least `k`, together with an optimizing Y.
///
/// Since D̂ is ±1-valued, the achievable range is the interval obtained by
/// packing mass `2^-k` greedily onto the +1 points (upper end) or the -1
/// points (lower end); the optimum over the min-entropy polytope is its
/// projection onto that interval.  Witnesses fill points in ascending order,
/// mixing the two extreme fillings when the interval already covers the
/// target.
pub fn worst_case_advantage<D: Distinguisher + ?Sized>(
    d: &D,
    x: &Distribution,
    k: f64,
) -> Result<(f64, Distribution)> {
    let n = x.n();
    if n > DENSE_MAX_N {
        return Err(Error::OutOfRange(format!(
            "worst-case search enumerates the domain; n = {n} too large"
        )));
    }
    if !k.is_finite() || k < 0.0 || k > n as f64 {
        return Err(Error::PreconditionViolated(format!(
            "need 0 <= k <= n for a nonempty min-entropy polytope, got k={k}"
        )));
    }
    let domain = 1u64 << n;
    let w = libm::exp2(-k);

    let mut plus = 0u64;
    for pt in 0..domain {
        if d.sign_at(pt) > 0 {
            plus += 1;
        }
    }
    let minus = domain - plus;

    let mut a_acc = Neumaier::new();
    for (pt, p) in x.support() {
        a_acc.add(d.sign_at(pt) as f64 * p);
    }
    let a = a_acc.total();

    let hi = if plus as f64 * w >= 1.0 { 1.0 } else { 2.0 * plus as f64 * w - 1.0 };
    let lo = if minus as f64 * w >= 1.0 { -1.0 } else { 1.0 - 2.0 * minus as f64 * w };

    // Flat-pack mass w per point over the given sign class first, ascending,
    // spilling into the other class if the preferred one runs out.
    let pack = |prefer: i8| -> Vec<(u64, f64)> {
        let mut entries = Vec::new();
        let mut remaining = 1.0f64;
        for pass in 0..2 {
            let want = if pass == 0 { prefer } else { -prefer };
            for pt in 0..domain {
                if remaining <= 0.0 {
                    break;
                }
                if d.sign_at(pt) == want {
                    let add = remaining.min(w);
                    entries.push((pt, add));
                    remaining -= add;
                }
            }
        }
        entries.sort_unstable_by_key(|&(pt, _)| pt);
        entries
    };

    let (value, entries) = if a > hi {
        (a - hi, pack(1))
    } else if a < lo {
        (lo - a, pack(-1))
    } else {
        // Already achievable: mix the extreme packings to land exactly on a.
        let hi_pack = pack(1);
        let lo_pack = pack(-1);
        let lambda = if hi > lo { (hi - a) / (hi - lo) } else { 0.0 };
        let mut mixed: Vec<(u64, f64)> = Vec::with_capacity(hi_pack.len() + lo_pack.len());
        let mut ih = hi_pack.iter().peekable();
        let mut il = lo_pack.iter().peekable();
        loop {
            match (ih.peek(), il.peek()) {
                (None, None) => break,
                (Some(&&(pt, ph)), None) => {
                    mixed.push((pt, (1.0 - lambda) * ph));
                    ih.next();
                }
                (None, Some(&&(pt, pl))) => {
                    mixed.push((pt, lambda * pl));
                    il.next();
                }
                (Some(&&(ph_pt, ph)), Some(&&(pl_pt, pl))) => {
                    if ph_pt < pl_pt {
                        mixed.push((ph_pt, (1.0 - lambda) * ph));
                        ih.next();
                    } else if pl_pt < ph_pt {
                        mixed.push((pl_pt, lambda * pl));
                        il.next();
                    } else {
                        mixed.push((ph_pt, (1.0 - lambda) * ph + lambda * pl));
                        ih.next();
                        il.next();
                    }
                }
            }
        }
        (0.0, mixed)
    };
    let witness = Distribution::from_sparse(n, entries)?;
    Ok((value, witness))
}
