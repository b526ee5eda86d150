//! Probability distributions on the domain `{0,1}^n` (points are the
//! integers `0..2^n`), with the entropy measures the distinguisher
//! construction is calibrated against.
//!
//! Distance convention: [`Distribution::statistical_distance`] is **half**
//! the L1 distance.  With that convention, "there is a Y within distance
//! `delta` whose min-entropy is at least `k`" is *exactly* equivalent to
//! "the mass of X above the threshold `2^-k` is at most `delta`", and
//! [`Distribution::smoothing_witness`] realizes the optimal Y constructively.
//!
//! Representation: dense `Vec<f64>` over the whole domain when the support
//! exceeds `2^n / 8` (and the domain is small enough to materialize),
//! otherwise a sorted sparse list.  Conversions are exact; every operation
//! accepts any mix of representations.

use crate::error::Error;
use crate::rng::SplitMix64;
use crate::sum::Neumaier;
use crate::Result;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Largest supported domain exponent.
pub const MAX_N: u32 = 30;
/// Domains above this stay sparse regardless of support size: a dense
/// vector for n = 24 is already 128 MiB.
pub const DENSE_MAX_N: u32 = 24;
/// |sum(p) - 1| must be below this at construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Repr {
    /// Probability for every point of the domain, length 2^n.
    Dense(Vec<f64>),
    /// (point, probability) with strictly increasing points and p > 0.
    Sparse(Vec<(u64, f64)>),
}

/// A validated probability distribution on `{0,1}^n`.
#[derive(Debug, Clone)]
pub struct Distribution {
    n: u32,
    repr: Repr,
}

/// Summary emitted by [`Distribution::entropy_report`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyReport {
    pub min_entropy: f64,
    /// Smooth min-entropy at `delta`.
    pub smooth_min_entropy: f64,
    pub delta: f64,
    /// Number of points whose mass exceeds `2^-k` at `k = smooth_min_entropy`.
    pub biased_set_size: u64,
}

/// Deterministic fixture constructors for [`Distribution::make`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum FixtureKind {
    Uniform { n: u32 },
    PointMass { n: u32, point: u64 },
    /// Flat on a random subset of the given size.
    FlatSubset { n: u32, count: u64 },
    /// Image distribution of a random function {0,1}^k -> {0,1}^n
    /// (injective = flat on a random 2^k-subset).
    Pushforward { n: u32, k: u32, injective: bool },
    /// Mass `spike` on one point, the rest uniform.
    SpikedUniform { n: u32, spike: f64, point: u64 },
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::InvalidParameter(format!(
            "domain exponent n must be in 1..={MAX_N}, got {n}"
        )));
    }
    Ok(())
}

fn check_threshold_exponent(k: f64) -> Result<()> {
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold exponent k must be finite and >= 0, got {k}"
        )));
    }
    Ok(())
}

impl Distribution {
    // ---- construction ----------------------------------------------------

    /// Build from a full probability vector of length `2^n`.
    pub fn from_dense(n: u32, probs: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if n > DENSE_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "dense input limited to n <= {DENSE_MAX_N}"
            )));
        }
        if probs.len() != 1usize << n {
            return Err(Error::InvalidDistribution(format!(
                "dense vector has length {}, domain needs {}",
                probs.len(),
                1u64 << n
            )));
        }
        validate_masses(probs.iter().copied())?;
        Ok(Distribution { n, repr: Repr::Dense(probs) }.normalized_repr())
    }

    /// Build from sorted `(point, probability)` entries.  Entries must be
    /// strictly increasing in the point; zero-probability entries are
    /// dropped.
    pub fn from_sparse(n: u32, entries: Vec<(u64, f64)>) -> Result<Self> {
        check_n(n)?;
        let domain = 1u64 << n;
        let mut last: Option<u64> = None;
        for &(x, _) in &entries {
            if x >= domain {
                return Err(Error::InvalidDistribution(format!(
                    "point {x:#x} outside domain of size 2^{n}"
                )));
            }
            if let Some(prev) = last {
                if x <= prev {
                    return Err(Error::InvalidDistribution(format!(
                        "support must be strictly increasing, {x:#x} follows {prev:#x}"
                    )));
                }
            }
            last = Some(x);
        }
        validate_masses(entries.iter().map(|&(_, p)| p))?;
        let entries: Vec<(u64, f64)> = entries.into_iter().filter(|&(_, p)| p != 0.0).collect();
        Ok(Distribution { n, repr: Repr::Sparse(entries) }.normalized_repr())
    }

    /// Apply the representation rule: dense when the support exceeds an
    /// eighth of the domain (and the domain is materializable).
    fn normalized_repr(self) -> Self {
        let n = self.n;
        let domain = 1u64 << n;
        let want_dense = self.support_len() as u64 * 8 > domain && n <= DENSE_MAX_N;
        if want_dense == self.is_dense() {
            return self;
        }
        match self.repr {
            Repr::Dense(probs) => {
                let entries = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(x, &p)| (x as u64, p))
                    .collect();
                Distribution { n, repr: Repr::Sparse(entries) }
            }
            Repr::Sparse(entries) => {
                let mut probs = vec![0.0; domain as usize];
                for &(x, p) in &entries {
                    probs[x as usize] = p;
                }
                Distribution { n, repr: Repr::Dense(probs) }
            }
        }
    }

    // ---- fixtures ---------------------------------------------------------

    pub fn uniform(n: u32) -> Result<Self> {
        check_n(n)?;
        if n > DENSE_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "uniform distribution is dense; limited to n <= {DENSE_MAX_N}"
            )));
        }
        let p = libm::exp2(-(n as f64));
        Self::from_dense(n, vec![p; 1usize << n])
    }

    pub fn point_mass(n: u32, point: u64) -> Result<Self> {
        Self::from_sparse(n, vec![(point, 1.0)])
    }

    /// Flat on the given (distinct) points.
    pub fn flat(n: u32, points: &[u64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("flat support must be nonempty".into()));
        }
        let mut sorted: Vec<u64> = points.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("flat support has repeated points".into()));
        }
        let p = 1.0 / points.len() as f64;
        Self::from_sparse(n, sorted.into_iter().map(|x| (x, p)).collect())
    }

    /// Flat on a uniformly random `count`-subset of the domain.
    pub fn flat_random_subset(n: u32, count: u64, seed: u64) -> Result<Self> {
        check_n(n)?;
        let domain = 1u64 << n;
        if count == 0 || count > domain {
            return Err(Error::InvalidParameter(format!(
                "subset size {count} not in 1..=2^{n}"
            )));
        }
        let points = sample_distinct(n, count, seed)?;
        Self::flat(n, &points)
    }

    /// Image distribution of `f : {0,1}^k -> {0,1}^n` under a uniform input.
    /// Probabilities are exact dyadic rationals `|f^-1(y)| * 2^-k`.
    pub fn pushforward(n: u32, k: u32, mut f: impl FnMut(u64) -> u64) -> Result<Self> {
        check_n(n)?;
        if k > 26 {
            return Err(Error::InvalidParameter(format!(
                "pushforward enumerates 2^k inputs; k = {k} is too large (max 26)"
            )));
        }
        let domain = 1u64 << n;
        let weight = libm::exp2(-(k as f64));
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for u in 0..1u64 << k {
            let y = f(u);
            if y >= domain {
                return Err(Error::InvalidParameter(format!(
                    "pushforward image {y:#x} outside domain of size 2^{n}"
                )));
            }
            *counts.entry(y).or_insert(0) += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(y, c)| (y, c as f64 * weight))
            .collect();
        Self::from_sparse(n, entries)
    }

    /// Pushforward of a uniformly random function.
    pub fn random_pushforward(n: u32, k: u32, seed: u64) -> Result<Self> {
        check_n(n)?;
        let mut rng = SplitMix64::new(seed);
        let domain = 1u64 << n;
        Self::pushforward(n, k, move |_| rng.next_below(domain))
    }

    /// Pushforward of a uniformly random *injective* function, i.e. flat on
    /// a random `2^k`-subset.
    pub fn random_injective_pushforward(n: u32, k: u32, seed: u64) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter(format!(
                "injective pushforward needs k <= n, got k={k}, n={n}"
            )));
        }
        Self::flat_random_subset(n, 1u64 << k, seed)
    }

    /// Mass `spike` on `point`, the rest spread uniformly.
    pub fn spiked_uniform(n: u32, spike: f64, point: u64) -> Result<Self> {
        check_n(n)?;
        if n > DENSE_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "spiked uniform is dense; limited to n <= {DENSE_MAX_N}"
            )));
        }
        if !(0.0..=1.0).contains(&spike) || !spike.is_finite() {
            return Err(Error::InvalidParameter(format!("spike mass {spike} not in [0,1]")));
        }
        let domain = 1usize << n;
        if point as usize >= domain {
            return Err(Error::InvalidParameter(format!("spike point {point:#x} outside domain")));
        }
        let rest = (1.0 - spike) / (domain - 1) as f64;
        let mut probs = vec![rest; domain];
        probs[point as usize] = spike;
        Self::from_dense(n, probs)
    }

    /// Seeded fixture dispatch (the CLI's `dist gen`).
    pub fn make(kind: &FixtureKind, seed: u64) -> Result<Self> {
        match *kind {
            FixtureKind::Uniform { n } => Self::uniform(n),
            FixtureKind::PointMass { n, point } => Self::point_mass(n, point),
            FixtureKind::FlatSubset { n, count } => Self::flat_random_subset(n, count, seed),
            FixtureKind::Pushforward { n, k, injective: true } => {
                Self::random_injective_pushforward(n, k, seed)
            }
            FixtureKind::Pushforward { n, k, injective: false } => {
                Self::random_pushforward(n, k, seed)
            }
            FixtureKind::SpikedUniform { n, spike, point } => {
                Self::spiked_uniform(n, spike, point)
            }
        }
    }

    // ---- accessors ---------------------------------------------------------

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn domain_size(&self) -> u64 {
        1u64 << self.n
    }

    pub fn support_len(&self) -> usize {
        match &self.repr {
            Repr::Dense(p) => p.iter().filter(|&&v| v != 0.0).count(),
            Repr::Sparse(e) => e.len(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    pub fn prob(&self, x: u64) -> f64 {
        if x >= self.domain_size() {
            return 0.0;
        }
        match &self.repr {
            Repr::Dense(p) => p[x as usize],
            Repr::Sparse(e) => e
                .binary_search_by_key(&x, |&(pt, _)| pt)
                .map(|i| e[i].1)
                .unwrap_or(0.0),
        }
    }

    /// Support as ascending `(point, probability)` pairs.
    pub fn support(&self) -> SupportIter<'_> {
        SupportIter { dist: self, index: 0 }
    }

    pub fn max_prob(&self) -> f64 {
        let mut best = 0.0f64;
        for (_, p) in self.support() {
            if p > best {
                best = p;
            }
        }
        best
    }

    /// Full probability vector (dense materialization).
    pub fn dense_probs(&self) -> Result<Vec<f64>> {
        if self.n > DENSE_MAX_N {
            return Err(Error::OutOfRange(format!(
                "refusing to materialize 2^{} probabilities",
                self.n
            )));
        }
        match &self.repr {
            Repr::Dense(p) => Ok(p.clone()),
            Repr::Sparse(e) => {
                let mut probs = vec![0.0; self.domain_size() as usize];
                for &(x, p) in e {
                    probs[x as usize] = p;
                }
                Ok(probs)
            }
        }
    }

    // ---- entropy and distance ----------------------------------------------

    /// Min-entropy, `-log2(max_x P(x))`, in bits.
    pub fn min_entropy(&self) -> f64 {
        let h = -libm::log2(self.max_prob());
        h.clamp(0.0, self.n as f64)
    }

    /// Half the L1 distance (total-variation convention, in `[0, 1]`).
    pub fn statistical_distance(&self, other: &Distribution) -> Result<f64> {
        self.check_same_domain(other)?;
        let mut acc = Neumaier::new();
        for_each_diff(self, other, |_, pa, pb| acc.add((pa - pb).abs()));
        Ok(0.5 * acc.total())
    }

    /// Euclidean (L2) distance between the probability vectors.
    pub fn euclidean_distance(&self, other: &Distribution) -> Result<f64> {
        self.check_same_domain(other)?;
        let mut acc = Neumaier::new();
        for_each_diff(self, other, |_, pa, pb| {
            let d = pa - pb;
            acc.add(d * d);
        });
        Ok(libm::sqrt(acc.total()))
    }

    /// Total mass exceeding the threshold `2^-k`:
    /// `sum_x max(P(x) - 2^-k, 0)`.
    ///
    /// This is exactly the cheapest statistical distance at which the mass
    /// above the threshold can be smoothed away, so
    /// `smooth_min_entropy(delta) >= k  <=>  mass_above_threshold(k) <= delta`.
    pub fn mass_above_threshold(&self, k: f64) -> Result<f64> {
        check_threshold_exponent(k)?;
        let t = libm::exp2(-k);
        let mut acc = Neumaier::new();
        for (_, p) in self.support() {
            if p > t {
                acc.add(p - t);
            }
        }
        Ok(acc.total().max(0.0))
    }

    /// Points whose mass strictly exceeds `2^-k`, ascending.
    ///
    /// Whenever the excess mass is positive this set has fewer than `2^k`
    /// elements, since each member holds more than `2^-k` of a total of 1.
    pub fn biased_set(&self, k: f64) -> Result<Vec<u64>> {
        check_threshold_exponent(k)?;
        let t = libm::exp2(-k);
        Ok(self
            .support()
            .filter(|&(_, p)| p > t)
            .map(|(x, _)| x)
            .collect())
    }

    /// Largest `k` such that some Y within statistical distance `delta`
    /// has min-entropy at least `k`, capped at `n` (no distribution on this
    /// domain can exceed `n` bits).
    ///
    /// Computed exactly: the excess mass `g(t) = sum_x max(P(x) - t, 0)` is
    /// piecewise linear and decreasing in the threshold `t`, so the smallest
    /// feasible threshold solves `g(t) = delta` on one segment of the sorted
    /// probability profile.
    pub fn smooth_min_entropy(&self, delta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&delta) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing distance {delta} not in [0,1]"
            )));
        }
        let n = self.n as f64;
        if delta >= 1.0 {
            return Ok(n);
        }
        let mut probs: Vec<f64> = self.support().map(|(_, p)| p).collect();
        // Descending.
        probs.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite"));
        let mut prefix = Neumaier::new();
        let mut t_star = probs[0];
        for (j, &p) in probs.iter().enumerate() {
            prefix.add(p);
            let next = probs.get(j + 1).copied().unwrap_or(0.0);
            // On the segment [next, p] the excess is prefix - (j+1) * t.
            let t = (prefix.total() - delta) / (j + 1) as f64;
            if t >= next {
                t_star = t;
                break;
            }
        }
        if t_star <= libm::exp2(-n) {
            return Ok(n);
        }
        Ok((-libm::log2(t_star)).clamp(0.0, n))
    }

    /// The optimal smoothing target: the closest distribution (in statistical
    /// distance) with min-entropy at least `k`.
    ///
    /// Caps every point at `2^-k` and refills the removed excess onto points
    /// with remaining headroom in ascending point order.  The distance to the
    /// result equals `mass_above_threshold(k)` exactly, which is optimal.
    /// Requires `k <= n` (no distribution on the domain can do better).
    pub fn smoothing_witness(&self, k: f64) -> Result<Distribution> {
        check_threshold_exponent(k)?;
        if k > self.n as f64 {
            return Err(Error::PreconditionViolated(format!(
                "cannot reach min-entropy {k} on a 2^{}-point domain",
                self.n
            )));
        }
        let t = libm::exp2(-k);
        let mut excess = Neumaier::new();
        for (_, p) in self.support() {
            if p > t {
                excess.add(p - t);
            }
        }
        let mut remaining = excess.total().max(0.0);
        if remaining == 0.0 {
            return Ok(self.clone());
        }

        // Capped entries plus fill, in one ascending sweep.  Gaps between
        // support points are filled in bulk so sparse inputs stay cheap.
        let mut out: Vec<(u64, f64)> = Vec::with_capacity(self.support_len() + 16);
        let mut cursor: u64 = 0; // next unexamined point
        let domain = self.domain_size();
        let fill_gap = |out: &mut Vec<(u64, f64)>, from: u64, to: u64, remaining: &mut f64| {
            // Fill points in [from, to) with up to t each until exhausted.
            if *remaining <= 0.0 || from >= to {
                return;
            }
            let mut x = from;
            while x < to && *remaining > 0.0 {
                let add = remaining.min(t);
                out.push((x, add));
                *remaining -= add;
                x += 1;
            }
        };
        for (x, p) in self.support() {
            fill_gap(&mut out, cursor, x, &mut remaining);
            if p > t {
                out.push((x, t));
            } else {
                let headroom = t - p;
                let add = remaining.min(headroom);
                remaining -= add;
                out.push((x, p + add));
            }
            cursor = x + 1;
        }
        fill_gap(&mut out, cursor, domain, &mut remaining);
        debug_assert!(remaining <= 1e-12, "fill ran out of headroom: {remaining}");
        Distribution::from_sparse(self.n, out)
    }

    /// Entropy summary at smoothing distance `delta`.
    pub fn entropy_report(&self, delta: f64) -> Result<EntropyReport> {
        let smooth = self.smooth_min_entropy(delta)?;
        Ok(EntropyReport {
            min_entropy: self.min_entropy(),
            smooth_min_entropy: smooth,
            delta,
            biased_set_size: self.biased_set(smooth)?.len() as u64,
        })
    }

    fn check_same_domain(&self, other: &Distribution) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

impl PartialEq for Distribution {
    /// Measure equality: same domain and identical probability at every
    /// point, regardless of representation.
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n {
            return false;
        }
        let mut equal = true;
        for_each_diff(self, other, |_, pa, pb| {
            if pa != pb {
                equal = false;
            }
        });
        equal
    }
}

/// Ascending iterator over nonzero (point, probability) pairs.
pub struct SupportIter<'a> {
    dist: &'a Distribution,
    index: usize,
}

impl Iterator for SupportIter<'_> {
    type Item = (u64, f64);

    fn next(&mut self) -> Option<(u64, f64)> {
        match &self.dist.repr {
            Repr::Sparse(e) => {
                let item = e.get(self.index).copied();
                self.index += 1;
                item
            }
            Repr::Dense(p) => {
                while self.index < p.len() {
                    let i = self.index;
                    self.index += 1;
                    if p[i] != 0.0 {
                        return Some((i as u64, p[i]));
                    }
                }
                None
            }
        }
    }
}

/// Visit the union of two supports in ascending point order with both
/// probabilities (0 where absent).  Callers must already have checked the
/// domains match.
pub(crate) fn for_each_diff(
    a: &Distribution,
    b: &Distribution,
    mut f: impl FnMut(u64, f64, f64),
) {
    let mut ia = a.support().peekable();
    let mut ib = b.support().peekable();
    loop {
        match (ia.peek().copied(), ib.peek().copied()) {
            (None, None) => break,
            (Some((x, pa)), None) => {
                f(x, pa, 0.0);
                ia.next();
            }
            (None, Some((y, pb))) => {
                f(y, 0.0, pb);
                ib.next();
            }
            (Some((x, pa)), Some((y, pb))) => {
                if x < y {
                    f(x, pa, 0.0);
                    ia.next();
                } else if y < x {
                    f(y, 0.0, pb);
                    ib.next();
                } else {
                    f(x, pa, pb);
                    ia.next();
                    ib.next();
                }
            }
        }
    }
}

fn validate_masses(probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut acc = Neumaier::new();
    let mut any = false;
    for p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is negative or not finite"
            )));
        }
        acc.add(p);
        any = true;
    }
    if !any {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    let total = acc.total();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, expected 1 within {NORMALIZATION_TOL}"
        )));
    }
    Ok(())
}

/// `count` distinct uniform points of `{0,1}^n`, ascending, deterministic in
/// the seed.  Rejection sampling for sparse requests, a partial
/// Fisher-Yates shuffle once the subset would cover most of the domain.
fn sample_distinct(n: u32, count: u64, seed: u64) -> Result<Vec<u64>> {
    let domain = 1u64 << n;
    let mut rng = SplitMix64::new(seed);
    if count * 2 > domain {
        if n > DENSE_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "subset of {count} points from 2^{n} is too large to sample"
            )));
        }
        let mut all: Vec<u64> = (0..domain).collect();
        for i in 0..count as usize {
            let j = i + rng.next_below(domain - i as u64) as usize;
            all.swap(i, j);
        }
        let mut picked = all[..count as usize].to_vec();
        picked.sort_unstable();
        return Ok(picked);
    }
    let mut set = BTreeSet::new();
    while (set.len() as u64) < count {
        set.insert(rng.next_below(domain));
    }
    Ok(set.into_iter().collect())
}
