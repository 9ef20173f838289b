//! The parity task: a field on the unit interval whose integral is `m·α`,
//! its split into `N` sections, and the discrete promise instances the
//! protocols run on.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zring::RingSize;

/// Segment lengths must sum to one within this tolerance.
pub const LENGTH_TOLERANCE: f64 = 1e-12;

/// Section integrals snap to the `α/K` grid within this many grid units.
pub const GRID_TOLERANCE: f64 = 1e-6;

/// Whether `m` is even or odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_m(m: i64) -> Self {
        if m.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::invalid(format!("unknown parity '{other}'"))),
        }
    }
}

/// Piecewise-constant field on `[0, 1]`, listed from A to B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// `(length, value)` pairs.
    pub segments: Vec<(f64, f64)>,
    pub alpha: f64,
}

impl FieldSpec {
    pub fn new(segments: Vec<(f64, f64)>, alpha: f64) -> Result<Self> {
        let field = FieldSpec { segments, alpha };
        field.validate()?;
        Ok(field)
    }

    pub fn constant(value: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![(1.0, value)], alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.segments.is_empty() {
            return Err(Error::Validation("field has no segments".into()));
        }
        for &(len, value) in &self.segments {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Validation(format!("segment length {len} is not positive")));
            }
            if !value.is_finite() {
                return Err(Error::Validation(format!("field value {value} is not finite")));
            }
        }
        let total: f64 = self.segments.iter().map(|s| s.0).sum();
        if (total - 1.0).abs() > LENGTH_TOLERANCE {
            return Err(Error::Validation(format!(
                "segment lengths sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn integral(&self) -> f64 {
        self.segments.iter().map(|&(len, v)| len * v).sum()
    }

    /// Segment start points and values, with the last segment closed at 1.
    pub(crate) fn breakpoints(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len());
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (i, &(len, v)) in self.segments.iter().enumerate() {
            let end = if i == last { 1.0 } else { start + len };
            out.push((start, end, v));
            start = end;
        }
        out
    }
}

/// Integrals of the field over `n_sections` equal sections.
pub fn discretize(field: &FieldSpec, n_sections: usize) -> Result<Vec<f64>> {
    field.validate()?;
    if n_sections == 0 {
        return Err(Error::invalid("need at least one section"));
    }
    let pieces = field.breakpoints();
    let width = 1.0 / n_sections as f64;
    let mut phis = vec![0.0; n_sections];
    for (s, e, v) in pieces {
        let first = ((s / width).floor() as usize).min(n_sections - 1);
        let last = ((e / width).ceil() as usize).clamp(first + 1, n_sections);
        for (n, phi) in phis.iter_mut().enumerate().take(last).skip(first) {
            let lo = n as f64 * width;
            let hi = if n + 1 == n_sections { 1.0 } else { (n + 1) as f64 * width };
            let overlap = hi.min(e) - lo.max(s);
            if overlap > 0.0 {
                *phi += overlap * v;
            }
        }
    }
    Ok(phis)
}

/// `N` parties' values over Z_2K whose sum is a multiple of `K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiscreteInstance {
    ring: RingSize,
    values: Vec<u64>,
}

impl DiscreteInstance {
    pub fn new(ring: RingSize, values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("an instance needs at least one party"));
        }
        for &v in &values {
            ring.check_element(v)?;
        }
        let sum = sum_mod(ring, &values);
        if !sum.is_multiple_of(ring.k()) {
            return Err(Error::Promise { sum, k: ring.k() });
        }
        Ok(DiscreteInstance { ring, values })
    }

    pub fn ring(&self) -> RingSize {
        self.ring
    }

    pub fn n_parties(&self) -> usize {
        self.values.len()
    }

    /// `k_1..k_N`; equivalently the function `g(j) = k_j`.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        if sum_mod(self.ring, &self.values) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: serde_json::Value = serde_json::from_str(text)?;
        let k = file
            .get("K")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Validation("instance file needs an integer \"K\"".into()))?;
        let values = file
            .get("k")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Validation("instance file needs an array \"k\"".into()))?
            .iter()
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| Error::Validation(format!("value {v} is not a non-negative integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(RingSize::new(k)?, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "K": self.ring.k(), "k": self.values }).to_string()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Serialize for DiscreteInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serde_json::json!({ "K": self.ring.k(), "k": self.values }).serialize(serializer)
    }
}

fn sum_mod(ring: RingSize, values: &[u64]) -> u64 {
    values.iter().fold(0, |acc, &v| ring.reduce(acc + v))
}

/// Snaps section integrals to the `α/K` grid.
pub fn quantize(phis: &[f64], ring: RingSize, alpha: f64) -> Result<DiscreteInstance> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let two_k = ring.two_k() as i64;
    let values = phis
        .iter()
        .map(|&phi| {
            let units = phi * ring.k() as f64 / alpha;
            let nearest = units.round();
            let offset = units - nearest;
            if !units.is_finite() || offset.abs() > GRID_TOLERANCE {
                return Err(Error::Quantization { value: phi, offset });
            }
            Ok((nearest as i64).rem_euclid(two_k) as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteInstance::new(ring, values)
}

/// A seeded uniform instance with the requested parity.
pub fn random_instance(n_parties: usize, ring: RingSize, parity: Parity, seed: u64) -> Result<DiscreteInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance_with(&mut rng, n_parties, ring, parity)
}

pub fn random_instance_with<R: Rng>(
    rng: &mut R,
    n_parties: usize,
    ring: RingSize,
    parity: Parity,
) -> Result<DiscreteInstance> {
    if n_parties == 0 {
        return Err(Error::invalid("an instance needs at least one party"));
    }
    let mut values: Vec<u64> = (0..n_parties - 1)
        .map(|_| rng.gen_range(0..ring.two_k()))
        .collect();
    let target = match parity {
        Parity::Even => 0,
        Parity::Odd => ring.k(),
    };
    let partial = sum_mod(ring, &values);
    values.push(ring.reduce(target + ring.two_k() - partial));
    DiscreteInstance::new(ring, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 0.75;

    fn ring(k: u64) -> RingSize {
        RingSize::new(k).unwrap()
    }

    /// Fine left-Riemann sum, independent of the overlap computation.
    fn riemann(field: &FieldSpec, lo: f64, hi: f64, steps: usize) -> f64 {
        let pieces = field.breakpoints();
        let h = (hi - lo) / steps as f64;
        (0..steps)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                pieces.iter().find(|p| x >= p.0 && x < p.1).map_or(0.0, |p| p.2) * h
            })
            .sum()
    }

    #[test]
    fn discretize_constant_field() {
        let f = FieldSpec::constant(2.0 * ALPHA, ALPHA).unwrap();
        let phis = discretize(&f, 4).unwrap();
        for phi in &phis {
            assert!((phi - ALPHA / 2.0).abs() < 1e-12);
        }
        assert!((phis.iter().sum::<f64>() - 2.0 * ALPHA).abs() < 1e-9 * ALPHA);
    }

    #[test]
    fn discretize_step_field() {
        let f = FieldSpec::new(vec![(0.5, 4.0 * ALPHA), (0.5, 0.0)], ALPHA).unwrap();
        let two = discretize(&f, 2).unwrap();
        assert!((two[0] - 2.0 * ALPHA).abs() < 1e-12 && two[1].abs() < 1e-12);
        let four = discretize(&f, 4).unwrap();
        let want = [ALPHA, ALPHA, 0.0, 0.0];
        for (n, (got, want)) in four.iter().zip(want).enumerate() {
            assert!((got - want).abs() < 1e-12);
            let lo = n as f64 / 4.0;
            assert!((got - riemann(&f, lo, lo + 0.25, 40_000)).abs() < 1e-6);
        }
    }

    #[test]
    fn discretize_misaligned_segments_match_riemann() {
        let f = FieldSpec::new(vec![(0.3, 1.0), (0.45, -2.5), (0.25, 7.0)], 1.0).unwrap();
        let phis = discretize(&f, 7).unwrap();
        for (n, phi) in phis.iter().enumerate() {
            let lo = n as f64 / 7.0;
            assert!((phi - riemann(&f, lo, lo + 1.0 / 7.0, 70_000)).abs() < 1e-4);
        }
        assert!((phis.iter().sum::<f64>() - f.integral()).abs() < 1e-12);
    }

    #[test]
    fn malformed_fields_rejected() {
        assert!(FieldSpec::new(vec![(0.5, 1.0)], 1.0).is_err());
        assert!(FieldSpec::new(vec![(1.0, 1.0)], 0.0).is_err());
        assert!(FieldSpec::new(vec![(1.2, 1.0), (-0.2, 1.0)], 1.0).is_err());
        assert!(FieldSpec::new(vec![], 1.0).is_err());
        let f = FieldSpec::constant(1.0, 1.0).unwrap();
        assert!(discretize(&f, 0).is_err());
    }

    #[test]
    fn quantize_examples() {
        let odd = quantize(&[ALPHA / 2.0, ALPHA / 2.0], ring(2), ALPHA).unwrap();
        assert_eq!(odd.values(), &[1, 1]);
        assert_eq!(odd.parity(), Parity::Odd);
        let even = quantize(&[0.0, 0.0], ring(2), ALPHA).unwrap();
        assert_eq!(even.parity(), Parity::Even);
        assert!(matches!(
            quantize(&[ALPHA / 2.0, ALPHA], ring(2), ALPHA),
            Err(Error::Promise { sum: 3, k: 2 })
        ));
        assert!(matches!(
            quantize(&[ALPHA / 3.0, 0.0], ring(2), ALPHA),
            Err(Error::Quantization { .. })
        ));
        // Values wrap around the ring: 5 grid units in Z_4 is 1.
        let wrapped = quantize(&[5.0 * ALPHA / 2.0, -ALPHA / 2.0], ring(2), ALPHA).unwrap();
        assert_eq!(wrapped.values(), &[1, 3]);
    }

    #[test]
    fn random_instance_examples() {
        for seed in 0..20 {
            let single = random_instance(1, ring(2), Parity::Odd, seed).unwrap();
            assert_eq!(single.values(), &[2]);
        }
        let inst = random_instance(2, ring(2), Parity::Even, 7).unwrap();
        assert_eq!((inst.values()[0] + inst.values()[1]) % 4, 0);
        assert_eq!(inst, random_instance(2, ring(2), Parity::Even, 7).unwrap());
        assert!(random_instance(0, ring(2), Parity::Even, 0).is_err());
    }

    #[test]
    fn completion_is_unique() {
        let seed = (0..1000u64)
            .find(|&s| random_instance(2, ring(2), Parity::Even, s).unwrap().values()[0] == 3)
            .expect("some seed draws k_1 = 3");
        let inst = random_instance(2, ring(2), Parity::Even, seed).unwrap();
        assert_eq!(inst.values(), &[3, 1]);
    }

    #[test]
    fn instance_file_round_trip() {
        let inst = DiscreteInstance::from_json(r#"{"K": 4, "k": [1, 2, 5]}"#).unwrap();
        assert_eq!(inst.n_parties(), 3);
        assert_eq!(inst.parity(), Parity::Even);
        assert_eq!(DiscreteInstance::from_json(&inst.to_json()).unwrap(), inst);
        assert!(matches!(
            DiscreteInstance::from_json(r#"{"K": 4, "k": [1, 2]}"#),
            Err(Error::Promise { .. })
        ));
        assert!(DiscreteInstance::from_json(r#"{"K": 4, "k": [9]}"#).is_err());
        assert!(DiscreteInstance::from_json(r#"{"K": 4}"#).is_err());
        assert!(DiscreteInstance::from_json(r#"{"K": 4, "k": []}"#).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn piecewise_field() -> impl Strategy<Value = FieldSpec> {
        prop::collection::vec((0.05f64..1.0, -3.0f64..3.0), 1..8).prop_map(|raw| {
            let total: f64 = raw.iter().map(|s| s.0).sum();
            let mut segments: Vec<(f64, f64)> = raw.iter().map(|&(l, v)| (l / total, v)).collect();
            let head: f64 = segments[..segments.len() - 1].iter().map(|s| s.0).sum();
            segments.last_mut().unwrap().0 = 1.0 - head;
            FieldSpec { segments, alpha: 1.0 }
        })
    }

    proptest! {
        #[test]
        fn refinement_keeps_total(field in piecewise_field(), n in 1usize..40) {
            let coarse: f64 = discretize(&field, n).unwrap().iter().sum();
            let fine: f64 = discretize(&field, 2 * n).unwrap().iter().sum();
            prop_assert!((coarse - fine).abs() < 1e-9);
            prop_assert!((coarse - field.integral()).abs() < 1e-9);
        }

        #[test]
        fn random_instances_keep_promise(
            n in 1usize..50,
            k in 1u64..300,
            odd in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let parity = if odd { Parity::Odd } else { Parity::Even };
            let inst = random_instance(n, RingSize::new(k).unwrap(), parity, seed).unwrap();
            let sum: u64 = inst.values().iter().sum();
            prop_assert_eq!(sum % k, 0);
            prop_assert_eq!(inst.parity(), parity);
            prop_assert_eq!(inst.n_parties(), n);
        }

        #[test]
        fn quantize_round_trips_grid_fields(values in prop::collection::vec(0u64..8, 1..10)) {
            // Build a field with one constant section per value, K = 4.
            let ring = RingSize::new(4).unwrap();
            let mut values = values;
            let partial: u64 = values.iter().sum();
            values.push((8 - partial % 8) % 8);
            let n = values.len();
            let alpha = 1.3;
            let segments = values
                .iter()
                .map(|&k| (1.0 / n as f64, alpha * k as f64 / 4.0 * n as f64))
                .collect();
            let field = FieldSpec { segments, alpha };
            let inst = quantize(&discretize(&field, n).unwrap(), ring, alpha).unwrap();
            prop_assert_eq!(inst.values(), &values[..]);
            let m = (field.integral() / alpha).round() as i64;
            prop_assert_eq!(inst.parity(), Parity::from_m(m));
        }
    }
}
