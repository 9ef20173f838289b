//! The qubit chain with every hop replaced by teleportation: a shared Bell
//! pair plus two classical bits sent forward.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qsim::{QubitState, SpinCarrier, NORM_TOLERANCE};
use crate::task::{DiscreteInstance, Parity};

/// Amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let state = TwoQubitState { amps };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "two-qubit amplitudes have squared norm {}",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        TwoQubitState { amps: [h, z, z, h] }
    }

    pub fn amps(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Bell-measurement outcome `(m0, m1)`: `m1` selects the X correction and
/// `m0` the Z correction.
pub type HopBits = [u8; 2];

pub const ALL_OUTCOMES: [HopBits; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopRecord {
    /// Sender's party index; the hop goes to `from + 1`.
    pub from: usize,
    pub bits: HopBits,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TeleportTranscript {
    pub hops: Vec<HopRecord>,
}

impl TeleportTranscript {
    pub fn bit_count(&self) -> usize {
        self.hops.iter().map(|h| h.bits.len()).sum()
    }
}

/// Sender's qubit, then the Bell pair: index bits are `(q0, q1, q2)`.
fn joint_state(input: &QubitState, pair: &TwoQubitState) -> [Complex64; 8] {
    let inp = [input.amp0(), input.amp1()];
    let mut out = [Complex64::new(0.0, 0.0); 8];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = inp[i >> 2] * pair.amps[i & 3];
    }
    out
}

/// CNOT from the input onto the sender's half of the pair, then H on the
/// input. Afterwards `(q0, q1)` read out the Bell outcome.
fn bell_basis_rotation(psi: &mut [Complex64; 8]) {
    for q2 in 0..2 {
        psi.swap(0b100 | q2, 0b110 | q2);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for low in 0..4 {
        let (a, b) = (psi[low], psi[0b100 | low]);
        psi[low] = (a + b) * h;
        psi[0b100 | low] = (a - b) * h;
    }
}

fn outcome_probabilities(psi: &[Complex64; 8]) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (i, a) in psi.iter().enumerate() {
        p[i >> 1] += a.norm_sqr();
    }
    p
}

/// Receiver's qubit after the outcome `bits` and its correction.
fn collapse_and_correct(psi: &[Complex64; 8], bits: HopBits) -> Result<QubitState> {
    let base = ((bits[0] as usize) << 2) | ((bits[1] as usize) << 1);
    let (mut a, mut b) = (psi[base], psi[base | 1]);
    let p = a.norm_sqr() + b.norm_sqr();
    if p < 1e-300 {
        return Err(Error::invalid(format!("Bell outcome {bits:?} has probability zero")));
    }
    let scale = p.sqrt().recip();
    a *= scale;
    b *= scale;
    if bits[1] == 1 {
        std::mem::swap(&mut a, &mut b);
    }
    if bits[0] == 1 {
        b = -b;
    }
    QubitState::new(a, b)
}

fn check_bits(bits: HopBits) -> Result<()> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::invalid(format!("Bell outcome bits must be 0 or 1, got {bits:?}")));
    }
    Ok(())
}

/// Teleports `state` with the Bell outcome fixed to `bits`.
pub fn teleport_hop_forced(state: &QubitState, bits: HopBits) -> Result<QubitState> {
    check_bits(bits)?;
    let mut psi = joint_state(state, &TwoQubitState::phi_plus());
    bell_basis_rotation(&mut psi);
    collapse_and_correct(&psi, bits)
}

/// Teleports `state`, sampling the Bell outcome from `seed`.
pub fn teleport_hop(state: &QubitState, seed: u64) -> Result<(QubitState, HopBits)> {
    let mut psi = joint_state(state, &TwoQubitState::phi_plus());
    bell_basis_rotation(&mut psi);
    let probs = outcome_probabilities(&psi);
    let draw: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    let mut acc = 0.0;
    let mut pick = ALL_OUTCOMES[3];
    for (outcome, p) in ALL_OUTCOMES.iter().zip(probs) {
        acc += p;
        if draw < acc {
            pick = *outcome;
            break;
        }
    }
    Ok((collapse_and_correct(&psi, pick)?, pick))
}

/// Probabilities of the four Bell outcomes for `state`.
pub fn bell_outcome_probabilities(state: &QubitState) -> [f64; 4] {
    let mut psi = joint_state(state, &TwoQubitState::phi_plus());
    bell_basis_rotation(&mut psi);
    outcome_probabilities(&psi)
}

#[derive(Clone, Debug, Serialize)]
pub struct TeleportOutcome {
    pub parity: Parity,
    pub transcript: TeleportTranscript,
    /// Smallest fidelity between a sent and a received qubit.
    pub min_fidelity: f64,
}

/// Runs the qubit chain with a teleportation between consecutive parties.
/// Hop seeds are drawn from a generator seeded with `seed`.
pub fn run_teleport_chain(instance: &DiscreteInstance, seed: u64) -> Result<TeleportOutcome> {
    let ring = instance.ring();
    let mut hop_seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut state = QubitState::up();
    let mut transcript = TeleportTranscript::default();
    let mut min_fidelity = 1.0f64;
    let n = instance.n_parties();
    for (i, &k) in instance.values().iter().enumerate() {
        state.apply_section(k, ring)?;
        if i + 1 == n {
            break;
        }
        let hop_seed = hop_seeds.next_u64();
        let (received, bits) = teleport_hop(&state, hop_seed)?;
        min_fidelity = min_fidelity.min(state.fidelity(&received));
        transcript.hops.push(HopRecord {
            from: i + 1,
            bits,
            seed: hop_seed,
        });
        state = received;
    }
    Ok(TeleportOutcome {
        parity: state.measure_z(),
        transcript,
        min_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{run_chain, ChainModel};
    use crate::task::random_instance;
    use crate::zring::RingSize;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Textbook branch table: after the Bell measurement the receiver holds
    // X^{m1} Z^{m0} |ψ⟩ up to phase, written out here by hand.
    fn expected_uncorrected(a: Complex64, b: Complex64, bits: HopBits) -> (Complex64, Complex64) {
        match bits {
            [0, 0] => (a, b),
            [0, 1] => (b, a),
            [1, 0] => (a, -b),
            _ => (-b, a),
        }
    }

    #[test]
    fn up_state_survives_any_seed() {
        for seed in 0..64 {
            let (out, _) = teleport_hop(&QubitState::up(), seed).unwrap();
            assert!((out.fidelity(&QubitState::up()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outcomes_are_uniform() {
        let s = QubitState::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        for p in bell_outcome_probabilities(&s) {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn pre_correction_branches_match_hand_table() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let mut psi = joint_state(&QubitState::new(a, b).unwrap(), &TwoQubitState::phi_plus());
        bell_basis_rotation(&mut psi);
        for bits in ALL_OUTCOMES {
            let base = ((bits[0] as usize) << 2) | ((bits[1] as usize) << 1);
            let (x, y) = (psi[base] * 2.0, psi[base | 1] * 2.0);
            let (ex, ey) = expected_uncorrected(a, b, bits);
            // Branch states before correction, up to the common phase.
            let overlap = (ex.conj() * x + ey.conj() * y).norm();
            assert!((overlap - 1.0).abs() < 1e-12, "{bits:?}");
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let s = QubitState::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let seen: std::collections::HashSet<HopBits> =
            (0..200).map(|seed| teleport_hop(&s, seed).unwrap().1).collect();
        assert_eq!(seen.len(), 4);
        for seed in [0, 7, 12345] {
            assert_eq!(teleport_hop(&s, seed).unwrap().1, teleport_hop(&s, seed).unwrap().1);
        }
    }

    #[test]
    fn chain_counts_bits() {
        let ring = RingSize::new(4).unwrap();
        let inst = DiscreteInstance::new(ring, vec![1, 2, 3, 0, 2]).unwrap();
        let out = run_teleport_chain(&inst, 9).unwrap();
        assert_eq!(out.transcript.hops.len(), 4);
        assert_eq!(out.transcript.bit_count(), 8);
        assert_eq!(out.parity, inst.parity());
        let again = run_teleport_chain(&inst, 9).unwrap();
        assert_eq!(out.transcript, again.transcript);
    }

    #[test]
    fn zero_instance_is_even_for_every_seed() {
        let ring = RingSize::new(8).unwrap();
        let inst = DiscreteInstance::new(ring, vec![0; 6]).unwrap();
        for seed in 0..100 {
            assert_eq!(run_teleport_chain(&inst, seed).unwrap().parity, Parity::Even);
        }
    }

    #[test]
    fn single_party_sends_nothing() {
        let ring = RingSize::new(2).unwrap();
        let inst = DiscreteInstance::new(ring, vec![2]).unwrap();
        let out = run_teleport_chain(&inst, 0).unwrap();
        assert_eq!(out.parity, Parity::Odd);
        assert_eq!(out.transcript.bit_count(), 0);
    }

    #[test]
    fn forced_bits_validated() {
        assert!(teleport_hop_forced(&QubitState::up(), [2, 0]).is_err());
    }

    #[test]
    fn phi_plus_is_normalized() {
        assert!((TwoQubitState::phi_plus().norm_sqr() - 1.0).abs() < 1e-15);
        let z = c(0.0, 0.0);
        assert!(TwoQubitState::new([c(1.0, 0.0), z, z, c(1.0, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn every_branch_restores_the_state(theta in 0.0..std::f64::consts::TAU, phase in 0.0..std::f64::consts::TAU) {
            let s = QubitState::new(
                c((theta / 2.0).cos(), 0.0),
                Complex64::from_polar((theta / 2.0).sin(), phase),
            ).unwrap();
            for bits in ALL_OUTCOMES {
                let out = teleport_hop_forced(&s, bits).unwrap();
                prop_assert!((out.fidelity(&s) - 1.0).abs() < 1e-12);
                prop_assert!((out.prob_up() - s.prob_up()).abs() < 1e-12);
            }
        }

        #[test]
        fn chain_matches_direct_qubit(seed in any::<u64>(), n in 1usize..40, k in 1u64..64, odd in any::<bool>()) {
            let ring = RingSize::new(k).unwrap();
            let parity = if odd { Parity::Odd } else { Parity::Even };
            let inst = random_instance(n, ring, parity, seed).unwrap();
            let tele = run_teleport_chain(&inst, seed ^ 0x5eed).unwrap();
            prop_assert_eq!(tele.parity, run_chain(&inst, ChainModel::Amplitude).parity);
            prop_assert_eq!(tele.parity, parity);
            prop_assert_eq!(tele.transcript.bit_count(), 2 * (n - 1));
            prop_assert!((tele.min_fidelity - 1.0).abs() < 1e-12);
        }
    }
}
