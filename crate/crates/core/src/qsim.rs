//! The traveling system S as a spin-half particle and as a classical rod.
//!
//! Section `n` turns the spin vector by `π·k_n/K` in the y–z plane, so a full
//! chain turns it by `m·π` (that is, `m/2` full turns) and the z measurement
//! at B reads the parity of `m`. On the Hilbert space the same rotation acts
//! with half the angle.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::task::{DiscreteInstance, FieldSpec, Parity, GRID_TOLERANCE};
use crate::zring::RingSize;

/// Norm drift allowed on a [`QubitState`].
pub const NORM_TOLERANCE: f64 = 1e-12;

/// The rod and the spin vector are misread once the angle error reaches a
/// quarter of a full turn.
pub const QUARTER_ROTATION: f64 = FRAC_PI_2;

/// Something S can be: advanced by one section, then read out along z.
pub trait SpinCarrier {
    fn apply_section(&mut self, k: u64, ring: RingSize) -> Result<()>;
    fn measure_z(&self) -> Parity;
}

/// `a|0⟩ + b|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    amp0: Complex64,
    amp1: Complex64,
}

impl QubitState {
    pub fn up() -> Self {
        QubitState {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn down() -> Self {
        QubitState {
            amp0: Complex64::new(0.0, 0.0),
            amp1: Complex64::new(1.0, 0.0),
        }
    }

    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let state = QubitState { amp0, amp1 };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "amplitudes have squared norm {}",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn prob_up(&self) -> f64 {
        self.amp0.norm_sqr()
    }

    pub fn prob_down(&self) -> f64 {
        self.amp1.norm_sqr()
    }

    /// Turns the spin vector by `theta` in the y–z plane.
    pub fn rotate(&mut self, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let (a, b) = (self.amp0, self.amp1);
        self.amp0 = a * c - b * s;
        self.amp1 = a * s + b * c;
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &QubitState) -> f64 {
        (self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1).norm_sqr()
    }
}

impl SpinCarrier for QubitState {
    fn apply_section(&mut self, k: u64, ring: RingSize) -> Result<()> {
        ring.check_element(k)?;
        self.rotate(PI * k as f64 / ring.k() as f64);
        Ok(())
    }

    /// The more probable z outcome; the ideal protocol never leaves a tie.
    fn measure_z(&self) -> Parity {
        if self.prob_up() >= self.prob_down() {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Spin-vector angle as an exact count of `π/K` quanta, modulo `2K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AngleState {
    quanta: u64,
    ring: RingSize,
}

impl AngleState {
    pub fn up(ring: RingSize) -> Self {
        AngleState { quanta: 0, ring }
    }

    pub fn quanta(&self) -> u64 {
        self.quanta
    }

    pub fn radians(&self) -> f64 {
        PI * self.quanta as f64 / self.ring.k() as f64
    }
}

impl SpinCarrier for AngleState {
    fn apply_section(&mut self, k: u64, ring: RingSize) -> Result<()> {
        if ring != self.ring {
            return Err(Error::invalid("angle state belongs to a different ring"));
        }
        ring.check_element(k)?;
        self.quanta = ring.reduce(self.quanta + k);
        Ok(())
    }

    /// Nearest pole; quanta in `(K/2, 3K/2)` read as down.
    fn measure_z(&self) -> Parity {
        let k = self.ring.k();
        let q = self.quanta;
        // Distance to the up pole is min(q, 2K − q) quanta; to the down
        // pole it is |q − K|. Ties go to up.
        if q.min(2 * k - q) <= q.abs_diff(k) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A real-valued spin angle in radians, reduced into `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealAngle(pub f64);

impl RealAngle {
    pub fn advance(&mut self, delta: f64) {
        self.0 = (self.0 + delta).rem_euclid(2.0 * PI);
    }

    /// Nearest pole: up when the angle is within a quarter turn of zero.
    pub fn nearest_pole(&self) -> Parity {
        if self.0.cos() >= 0.0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl SpinCarrier for RealAngle {
    fn apply_section(&mut self, k: u64, ring: RingSize) -> Result<()> {
        ring.check_element(k)?;
        self.advance(PI * k as f64 / ring.k() as f64);
        Ok(())
    }

    fn measure_z(&self) -> Parity {
        self.nearest_pole()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainModel {
    Angle,
    Amplitude,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainOutcome {
    pub parity: Parity,
    /// Probability of the other z outcome; zero for the exact angle model.
    pub wrong_outcome_probability: f64,
}

/// Carries S through every section of `instance` and measures it at B.
pub fn run_chain(instance: &DiscreteInstance, model: ChainModel) -> ChainOutcome {
    let ring = instance.ring();
    match model {
        ChainModel::Angle => {
            let mut state = AngleState::up(ring);
            for &k in instance.values() {
                state.apply_section(k, ring).expect("instance values are ring elements");
            }
            ChainOutcome {
                parity: state.measure_z(),
                wrong_outcome_probability: 0.0,
            }
        }
        ChainModel::Amplitude => {
            let mut state = QubitState::up();
            for &k in instance.values() {
                state.apply_section(k, ring).expect("instance values are ring elements");
            }
            let parity = state.measure_z();
            let wrong = match parity {
                Parity::Even => state.prob_down(),
                Parity::Odd => state.prob_up(),
            };
            ChainOutcome {
                parity,
                wrong_outcome_probability: wrong,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuousOutcome {
    pub parity: Parity,
    /// Final spin angle from the quadrature, in radians (unreduced).
    pub theta: f64,
    /// Rigorous bound on `|theta − m·π|`.
    pub error_bound: f64,
}

/// Integrates `dθ = (π/α)·φ(x) dx` with the composite midpoint rule.
///
/// For a piecewise-constant field the midpoint rule is exact on every step
/// that lies inside one segment, and on any other step it is off by at most
/// `h·(max φ − min φ)` over that step. Summing those terms gives the bound.
pub fn run_continuous(field: &FieldSpec, ring: RingSize, steps: usize) -> Result<ContinuousOutcome> {
    field.validate()?;
    if steps == 0 {
        return Err(Error::invalid("quadrature needs at least one step"));
    }
    let exact = field.integral();
    let units = exact * ring.k() as f64 / field.alpha;
    let nearest = units.round();
    if (units - nearest).abs() > GRID_TOLERANCE {
        return Err(Error::Quantization {
            value: exact,
            offset: units - nearest,
        });
    }
    let grid = nearest as i64;
    if grid.rem_euclid(ring.k() as i64) != 0 {
        return Err(Error::Promise {
            sum: grid.rem_euclid(ring.two_k() as i64) as u64,
            k: ring.k(),
        });
    }

    let eta = PI / field.alpha;
    let pieces = field.breakpoints();
    let h = 1.0 / steps as f64;
    let mut sum = 0.0;
    let mut spread_sum = 0.0;
    let mut magnitude = 0.0;
    let mut seg = 0;
    for i in 0..steps {
        let lo = i as f64 * h;
        let hi = if i + 1 == steps { 1.0 } else { (i + 1) as f64 * h };
        let mid = (lo + hi) / 2.0;
        while seg + 1 < pieces.len() && pieces[seg].1 <= lo {
            seg += 1;
        }
        let mut lo_v = f64::INFINITY;
        let mut hi_v = f64::NEG_INFINITY;
        let mut mid_v = pieces[seg].2;
        for &(s, e, v) in pieces[seg..].iter().take_while(|p| p.0 < hi) {
            if e > lo && s < hi {
                lo_v = lo_v.min(v);
                hi_v = hi_v.max(v);
            }
            if mid >= s && mid < e {
                mid_v = v;
            }
        }
        sum += mid_v * (hi - lo);
        spread_sum += (hi_v - lo_v) * (hi - lo);
        magnitude += mid_v.abs() * (hi - lo);
    }
    let theta = eta * sum;
    // Rounding slack: a few ulps per step on the accumulated magnitude.
    let slack = 4.0 * f64::EPSILON * steps as f64 * eta * (magnitude + exact.abs());
    let error_bound = eta * spread_sum + slack;
    if error_bound >= QUARTER_ROTATION {
        return Err(Error::Indeterminate { bound: error_bound });
    }
    Ok(ContinuousOutcome {
        parity: Parity::from_m((theta / PI).round() as i64),
        theta,
        error_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RodOutcome {
    pub parity: Parity,
    /// Signed sum of the injected per-section noise, in radians.
    pub accumulated_jitter: f64,
}

/// Classical rod: real angle plus uniform noise in `[−jitter, jitter]` per
/// section, read at the nearest pole.
pub fn run_rod(instance: &DiscreteInstance, jitter_amplitude: f64, seed: u64) -> Result<RodOutcome> {
    if !(jitter_amplitude.is_finite() && jitter_amplitude >= 0.0) {
        return Err(Error::invalid(format!(
            "jitter amplitude must be a non-negative number, got {jitter_amplitude}"
        )));
    }
    let ring = instance.ring();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rod = RealAngle(0.0);
    let mut accumulated = 0.0;
    for &k in instance.values() {
        rod.apply_section(k, ring)?;
        if jitter_amplitude > 0.0 {
            let noise = rng.gen_range(-jitter_amplitude..=jitter_amplitude);
            accumulated += noise;
            rod.advance(noise);
        }
    }
    Ok(RodOutcome {
        parity: rod.nearest_pole(),
        accumulated_jitter: accumulated,
    })
}
