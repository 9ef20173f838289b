//! Subsets of the cyclic ring Z_2K.
//!
//! A [`SumSet`] is a bit mask of `2K` bits, so every ring used with sets is
//! capped at `2K <= 64`. [`RingSize`] itself carries no such cap because the
//! simulators work with much larger moduli.
//!
//! The sumset `A ⊕ B` is the set of all sums `(x + y) mod 2K` with `x ∈ A`
//! and `y ∈ B`. A set is *K-free* when it holds no pair of elements that
//! differ by exactly `K`, which is the condition under which the last party
//! of a chain can read off the parity without error.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest modulus a [`SumSet`] can represent.
pub const MAX_SET_MODULUS: u64 = 64;

/// Largest modulus accepted by [`sweep_growth_lemma`].
pub const MAX_SWEEP_MODULUS: u64 = 20;

/// The modulus `2K` of the ring of partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingSize {
    two_k: u64,
    k: u64,
}

impl RingSize {
    pub fn new(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let two_k = k
            .checked_mul(2)
            .ok_or_else(|| Error::invalid(format!("K = {k} overflows the modulus")))?;
        Ok(RingSize { two_k, k })
    }

    /// Builds the ring from its modulus, which must be even and positive.
    pub fn from_modulus(two_k: u64) -> Result<Self> {
        if two_k == 0 || !two_k.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "modulus 2K must be a positive even number, got {two_k}"
            )));
        }
        Self::new(two_k / 2)
    }

    #[inline]
    pub fn k(self) -> u64 {
        self.k
    }

    #[inline]
    pub fn two_k(self) -> u64 {
        self.two_k
    }

    pub fn k_is_power_of_two(self) -> bool {
        self.k.is_power_of_two()
    }

    #[inline]
    pub fn reduce(self, x: u64) -> u64 {
        x % self.two_k
    }

    pub fn check_element(self, x: u64) -> Result<u64> {
        if x < self.two_k {
            Ok(x)
        } else {
            Err(Error::invalid(format!(
                "ring element {x} is out of range for 2K = {}",
                self.two_k
            )))
        }
    }

    /// Errors unless sets over this ring fit in a machine word.
    pub fn require_set_capacity(self) -> Result<()> {
        if self.two_k > MAX_SET_MODULUS {
            Err(Error::UnsupportedSize { two_k: self.two_k })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn mask(self) -> u64 {
        if self.two_k >= 64 {
            u64::MAX
        } else {
            (1u64 << self.two_k) - 1
        }
    }

    /// Cyclic left rotation of a `2K`-bit mask, i.e. the shift `A ⊕ {by}`.
    #[inline]
    pub(crate) fn rotate(self, bits: u64, by: u64) -> u64 {
        let by = by % self.two_k;
        if by == 0 {
            return bits;
        }
        ((bits << by) | (bits >> (self.two_k - by))) & self.mask()
    }

    #[inline]
    pub(crate) fn bits_k_free(self, bits: u64) -> bool {
        bits & self.rotate(bits, self.k) == 0
    }
}

impl Serialize for RingSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u64(self.k)
    }
}

impl<'de> Deserialize<'de> for RingSize {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let k = u64::deserialize(deserializer)?;
        RingSize::new(k).map_err(serde::de::Error::custom)
    }
}

/// A subset of Z_2K stored as a bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SumSet {
    bits: u64,
    ring: RingSize,
}

impl SumSet {
    pub fn empty(ring: RingSize) -> Result<Self> {
        ring.require_set_capacity()?;
        Ok(SumSet { bits: 0, ring })
    }

    pub fn full(ring: RingSize) -> Result<Self> {
        ring.require_set_capacity()?;
        Ok(SumSet { bits: ring.mask(), ring })
    }

    pub fn from_bits(ring: RingSize, bits: u64) -> Result<Self> {
        ring.require_set_capacity()?;
        if bits & !ring.mask() != 0 {
            return Err(Error::invalid(format!(
                "bit mask {bits:#x} has members outside Z_{}",
                ring.two_k
            )));
        }
        Ok(SumSet { bits, ring })
    }

    pub fn from_elements<I: IntoIterator<Item = u64>>(ring: RingSize, elements: I) -> Result<Self> {
        let mut set = Self::empty(ring)?;
        for x in elements {
            set.insert(x)?;
        }
        Ok(set)
    }

    pub fn singleton(ring: RingSize, x: u64) -> Result<Self> {
        Self::from_elements(ring, [x])
    }

    /// Crate-internal constructor for masks already known to be in range.
    #[inline]
    pub(crate) fn from_raw(ring: RingSize, bits: u64) -> Self {
        debug_assert!(ring.two_k <= MAX_SET_MODULUS && bits & !ring.mask() == 0);
        SumSet { bits, ring }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn ring(&self) -> RingSize {
        self.ring
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, x: u64) -> bool {
        x < self.ring.two_k && self.bits >> x & 1 == 1
    }

    pub fn insert(&mut self, x: u64) -> Result<()> {
        self.ring.check_element(x)?;
        self.bits |= 1 << x;
        Ok(())
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let x = rest.trailing_zeros() as u64;
                rest &= rest - 1;
                Some(x)
            }
        })
    }

    /// `A ⊕ {by}`.
    #[inline]
    pub fn shift(&self, by: u64) -> SumSet {
        SumSet {
            bits: self.ring.rotate(self.bits, by),
            ring: self.ring,
        }
    }

    pub fn union(&self, other: &SumSet) -> Result<SumSet> {
        same_ring(self, other)?;
        Ok(SumSet {
            bits: self.bits | other.bits,
            ring: self.ring,
        })
    }

    pub fn is_subset(&self, other: &SumSet) -> bool {
        self.ring == other.ring && self.bits & !other.bits == 0
    }
}

impl Serialize for SumSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

fn same_ring(a: &SumSet, b: &SumSet) -> Result<()> {
    if a.ring != b.ring {
        return Err(Error::invalid(format!(
            "ring mismatch: Z_{} vs Z_{}",
            a.ring.two_k, b.ring.two_k
        )));
    }
    Ok(())
}

/// The sumset `A ⊕ B`.
pub fn oplus(a: &SumSet, b: &SumSet) -> Result<SumSet> {
    same_ring(a, b)?;
    let bits = b.iter().fold(0, |acc, y| acc | a.ring.rotate(a.bits, y));
    Ok(SumSet::from_raw(a.ring, bits))
}

/// True iff no two members of `a` differ by exactly `K`.
pub fn is_k_free(a: &SumSet) -> bool {
    a.ring.bits_k_free(a.bits)
}

/// `|A ⊕ {x, y}| − |A|` for distinct ring elements `x` and `y`.
pub fn growth(a: &SumSet, x: u64, y: u64) -> Result<usize> {
    let ring = a.ring;
    ring.check_element(x)?;
    ring.check_element(y)?;
    if x == y {
        return Err(Error::invalid("growth needs two distinct shifts"));
    }
    if a.is_empty() {
        return Err(Error::invalid("growth is undefined for the empty set"));
    }
    let merged = ring.rotate(a.bits, x) | ring.rotate(a.bits, y);
    Ok(merged.count_ones() as usize - a.len())
}

/// The descending sequence of shifts leading from `|y − x|` to a period of a
/// set that does not grow under `⊕ {x, y}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodReport {
    pub deltas: Vec<u64>,
    pub period_v: u64,
    /// Whether `period_v` divides `2K`.
    pub divides_two_k: bool,
    /// `gcd(|y − x|, 2K)`, which always leaves the set invariant as well.
    pub gcd_shortcut: u64,
}

/// Walks the Δ sequence for a set with zero growth.
///
/// Starting at `Δ_1 = |y − x|`, each step looks for the smallest `i ≥ 1` with
/// `0 < i·Δ_j mod 2K < Δ_j` and sets `Δ_{j+1}` to that residue. The walk
/// stops when no such `i` exists, and the final `Δ` is checked to leave the
/// set invariant.
pub fn period_sequence(a: &SumSet, x: u64, y: u64) -> Result<PeriodReport> {
    if growth(a, x, y)? != 0 {
        return Err(Error::invalid(
            "period sequence requires a set that does not grow under the pair",
        ));
    }
    let ring = a.ring;
    let two_k = ring.two_k;
    let mut deltas = vec![x.abs_diff(y)];
    loop {
        let delta = *deltas.last().expect("non-empty");
        // i·Δ mod 2K cycles with period 2K / gcd, so 2K steps suffice.
        let next = (1..=two_k)
            .map(|i| (i * delta) % two_k)
            .find(|&r| r > 0 && r < delta);
        match next {
            Some(r) => deltas.push(r),
            None => break,
        }
    }
    let period_v = *deltas.last().expect("non-empty");
    if ring.rotate(a.bits, period_v) != a.bits {
        return Err(Error::Validation(format!(
            "terminal delta {period_v} does not leave the set invariant"
        )));
    }
    let gcd_shortcut = gcd(deltas[0], two_k);
    if ring.rotate(a.bits, gcd_shortcut) != a.bits || period_v % gcd_shortcut != 0 {
        return Err(Error::Validation(format!(
            "gcd cross-check failed: gcd {gcd_shortcut}, terminal delta {period_v}"
        )));
    }
    Ok(PeriodReport {
        deltas,
        period_v,
        divides_two_k: two_k.is_multiple_of(period_v),
        gcd_shortcut,
    })
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A zero-growth case found by [`sweep_growth_lemma`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthWitness {
    pub set: SumSet,
    pub a: u64,
    pub b: u64,
    pub k_free: bool,
}

/// Outcome of an exhaustive sweep over every nonempty subset of Z_2K and
/// every pair of distinct shifts.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaSweepReport {
    pub two_k: u64,
    pub k_is_power_of_two: bool,
    pub sets_checked: u64,
    pub k_free_sets: u64,
    pub pairs_checked: u64,
    /// Nonempty K-free sets with a pair of shifts giving zero growth.
    pub violations: u64,
    /// The first few violations, in ascending bit-mask order.
    pub violation_examples: Vec<GrowthWitness>,
    /// Cases where `A ⊕ {a,b}` differs from `(A ⊕ {a}) ∪ (A ⊕ {b})`.
    pub union_identity_failures: u64,
    /// Zero-growth cases (K-free or not) whose Δ walk ended in a period.
    pub zero_growth_cases: u64,
    /// Zero-growth cases where the Δ walk failed its invariance checks.
    pub period_failures: u64,
    /// Zero-growth cases where the set held no pair differing by K even
    /// though K is a power of two.
    pub contrapositive_failures: u64,
}

/// Exhaustively checks `|A ⊕ {a,b}| ≥ |A| + 1` for nonempty K-free `A`.
///
/// Along the way every zero-growth case is run through [`period_sequence`],
/// and the union identity for `A ⊕ {a,b}` is checked on every input.
pub fn sweep_growth_lemma(ring: RingSize, max_examples: usize) -> Result<LemmaSweepReport> {
    if ring.two_k > MAX_SWEEP_MODULUS {
        return Err(Error::UnsupportedSize { two_k: ring.two_k });
    }
    let two_k = ring.two_k;
    let mut report = LemmaSweepReport {
        two_k,
        k_is_power_of_two: ring.k_is_power_of_two(),
        sets_checked: 0,
        k_free_sets: 0,
        pairs_checked: 0,
        violations: 0,
        violation_examples: Vec::new(),
        union_identity_failures: 0,
        zero_growth_cases: 0,
        period_failures: 0,
        contrapositive_failures: 0,
    };
    for bits in 1..=ring.mask() {
        let set = SumSet::from_raw(ring, bits);
        let k_free = is_k_free(&set);
        report.sets_checked += 1;
        report.k_free_sets += u64::from(k_free);
        for a in 0..two_k {
            for b in a + 1..two_k {
                report.pairs_checked += 1;
                let pair = SumSet::from_raw(ring, (1 << a) | (1 << b));
                let joint = oplus(&set, &pair)?;
                let split = set.shift(a).union(&set.shift(b))?;
                if joint != split {
                    report.union_identity_failures += 1;
                }
                if growth(&set, a, b)? != 0 {
                    continue;
                }
                report.zero_growth_cases += 1;
                if period_sequence(&set, a, b).is_err() {
                    report.period_failures += 1;
                }
                if k_free {
                    report.violations += 1;
                    if report.violation_examples.len() < max_examples {
                        report.violation_examples.push(GrowthWitness { set, a, b, k_free });
                    }
                    if ring.k_is_power_of_two() {
                        report.contrapositive_failures += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(two_k: u64) -> RingSize {
        RingSize::from_modulus(two_k).unwrap()
    }

    fn set(two_k: u64, xs: &[u64]) -> SumSet {
        SumSet::from_elements(ring(two_k), xs.iter().copied()).unwrap()
    }

    /// Pairwise-sum enumeration, independent of the rotation path.
    fn naive_oplus(a: &SumSet, b: &SumSet) -> Vec<u64> {
        let m = a.ring().two_k();
        let mut out: Vec<u64> = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| (x + y) % m))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    #[test]
    fn ring_size_flags() {
        assert!(ring(8).k_is_power_of_two());
        assert!(!ring(6).k_is_power_of_two());
        assert!(RingSize::from_modulus(7).is_err());
        assert!(RingSize::new(0).is_err());
        assert!(SumSet::empty(ring(66)).is_err());
        assert!(SumSet::empty(ring(64)).is_ok());
    }

    #[test]
    fn oplus_examples() {
        assert_eq!(oplus(&set(8, &[1, 3]), &set(8, &[2])).unwrap(), set(8, &[3, 5]));
        assert_eq!(oplus(&set(8, &[0, 4]), &set(8, &[0, 4])).unwrap(), set(8, &[0, 4]));
        assert_eq!(
            naive_oplus(&set(8, &[0, 4]), &set(8, &[0, 4])),
            vec![0, 4]
        );
        assert!(oplus(&set(8, &[]), &set(8, &[1])).unwrap().is_empty());
        assert!(oplus(&set(8, &[1]), &set(6, &[1])).is_err());
    }

    #[test]
    fn full_width_ring_rotates() {
        let r = ring(64);
        let s = SumSet::from_elements(r, [63]).unwrap();
        assert_eq!(s.shift(1), SumSet::from_elements(r, [0]).unwrap());
        assert!(!is_k_free(&SumSet::from_elements(r, [5, 37]).unwrap()));
    }

    #[test]
    fn k_free_examples() {
        assert!(!is_k_free(&set(8, &[0, 4])));
        assert!(is_k_free(&set(8, &[0, 1, 2, 3])));
        assert!(is_k_free(&set(4, &[])));
    }

    #[test]
    fn growth_examples() {
        assert_eq!(growth(&set(8, &[0, 1]), 0, 1).unwrap(), 1);
        let evens = set(6, &[0, 2, 4]);
        assert_eq!(growth(&evens, 0, 2).unwrap(), 0);
        assert!(is_k_free(&evens));
        let pair = set(8, &[0, 4]);
        assert_eq!(growth(&pair, 0, 4).unwrap(), 0);
        assert!(!is_k_free(&pair));
        assert!(growth(&pair, 3, 3).is_err());
        assert!(growth(&set(8, &[]), 0, 1).is_err());
        assert!(growth(&pair, 0, 8).is_err());
    }

    #[test]
    fn period_examples() {
        assert_eq!(period_sequence(&set(8, &[0, 2, 4, 6]), 0, 2).unwrap().period_v, 2);
        let r = period_sequence(&set(8, &[0, 4]), 0, 4).unwrap();
        assert_eq!((r.deltas.clone(), r.period_v), (vec![4], 4));
        assert_eq!(period_sequence(&set(6, &[0, 3]), 0, 3).unwrap().period_v, 3);
        assert!(period_sequence(&set(8, &[0, 1]), 0, 1).is_err());
        assert!(period_sequence(&set(8, &[0, 4]), 4, 4).is_err());
    }

    #[test]
    fn period_walk_may_stop_above_gcd() {
        // Shift 6 in Z_8: 2·6 = 12 ≡ 4 is the first smaller residue, and 4
        // divides 8, so the walk stops at 4 while gcd(6, 8) = 2.
        let r = period_sequence(&set(8, &[0, 2, 4, 6]), 0, 6).unwrap();
        assert_eq!(r.deltas, vec![6, 4]);
        assert_eq!(r.period_v, 4);
        assert_eq!(r.gcd_shortcut, 2);
        assert!(r.divides_two_k);
    }

    #[test]
    fn non_power_of_two_sweep_has_witness() {
        let report = sweep_growth_lemma(ring(6), 64).unwrap();
        assert!(report.violations > 0);
        assert!(report
            .violation_examples
            .iter()
            .any(|w| w.set == set(6, &[0, 2, 4])));
        assert_eq!(report.union_identity_failures, 0);
        assert_eq!(report.period_failures, 0);
    }

    #[test]
    fn serializes_as_member_list() {
        assert_eq!(serde_json::to_string(&set(8, &[5, 1])).unwrap(), "[1,5]");
    }
}
