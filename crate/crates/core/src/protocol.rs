//! Deterministic one-way chain protocols over a finite alphabet.
//!
//! Party `n` receives message `l_{n-1}`, holds `k_n`, and sends
//! `l_n = t_n(l_{n-1}, k_n)`. Messages are numbered `1..=L` and the first
//! party always "receives" `l_0 = 1`. The last party outputs
//! `decision(l_{N-1}, k_N)`.
//!
//! The reach set of a stage-`n` message is the set of partial sums
//! `k_1 + … + k_n (mod 2K)` that can produce it. The last party can answer
//! without error exactly when every final reach set is K-free, which gives a
//! fast decidability test and a canonical decision table. [`verify`] checks
//! the same thing by brute force over every promise input.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{DiscreteInstance, Parity};
use crate::zring::{is_k_free, RingSize, SumSet};

/// Transition tables `t_1..t_{N-1}` without a decision table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transitions {
    n_parties: usize,
    ring: RingSize,
    alphabet: usize,
    /// Party 1 holds one row of `2K` entries; later parties hold `L` rows.
    tables: Vec<Vec<u16>>,
}

impl Transitions {
    /// `tables[0]` is party 1's single row; `tables[n]` for `n ≥ 1` is the
    /// row-major `L × 2K` table of party `n + 1`.
    pub fn new(n_parties: usize, ring: RingSize, alphabet: usize, tables: Vec<Vec<u16>>) -> Result<Self> {
        if n_parties == 0 {
            return Err(Error::invalid("a protocol needs at least one party"));
        }
        if alphabet == 0 || alphabet > u16::MAX as usize {
            return Err(Error::invalid(format!("alphabet size {alphabet} is out of range")));
        }
        if tables.len() != n_parties - 1 {
            return Err(Error::Validation(format!(
                "{n_parties} parties need {} transition tables, got {}",
                n_parties - 1,
                tables.len()
            )));
        }
        let width = ring.two_k() as usize;
        for (i, table) in tables.iter().enumerate() {
            let want = if i == 0 { width } else { alphabet * width };
            if table.len() != want {
                return Err(Error::Validation(format!(
                    "table of party {} has {} entries, expected {want}",
                    i + 1,
                    table.len()
                )));
            }
            if let Some(&bad) = table.iter().find(|&&m| m == 0 || m as usize > alphabet) {
                return Err(Error::Validation(format!(
                    "party {} sends message {bad}, outside 1..={alphabet}",
                    i + 1
                )));
            }
        }
        Ok(Transitions {
            n_parties,
            ring,
            alphabet,
            tables,
        })
    }

    /// Forwards the running sum: message `s + 1` encodes partial sum `s`.
    pub fn partial_sum(n_parties: usize, ring: RingSize) -> Result<Self> {
        let width = ring.two_k() as usize;
        let alphabet = width;
        let first = (0..width).map(|k| k as u16 + 1).collect();
        let later: Vec<u16> = (0..alphabet)
            .flat_map(|l| (0..width).map(move |k| ((l + k) % width) as u16 + 1))
            .collect();
        let mut tables = vec![first];
        tables.extend(std::iter::repeat_n(later, n_parties.saturating_sub(2)));
        tables.truncate(n_parties.saturating_sub(1));
        Self::new(n_parties, ring, alphabet, tables)
    }

    /// Every party sends message 1.
    pub fn constant(n_parties: usize, ring: RingSize) -> Result<Self> {
        let width = ring.two_k() as usize;
        let tables = (0..n_parties.saturating_sub(1)).map(|_| vec![1; width]).collect();
        Self::new(n_parties, ring, 1, tables)
    }

    /// Uniformly random tables.
    pub fn random<R: Rng>(rng: &mut R, n_parties: usize, ring: RingSize, alphabet: usize) -> Result<Self> {
        let width = ring.two_k() as usize;
        let tables = (0..n_parties.saturating_sub(1))
            .map(|i| {
                let len = if i == 0 { width } else { alphabet * width };
                (0..len).map(|_| rng.gen_range(1..=alphabet as u16)).collect()
            })
            .collect();
        Self::new(n_parties, ring, alphabet, tables)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn ring(&self) -> RingSize {
        self.ring
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn tables(&self) -> &[Vec<u16>] {
        &self.tables
    }

    /// `t_party(incoming, k)` for `party` in `1..N`.
    #[inline]
    pub fn next(&self, party: usize, incoming: usize, k: u64) -> usize {
        let width = self.ring.two_k() as usize;
        let table = &self.tables[party - 1];
        let idx = if party == 1 {
            k as usize
        } else {
            (incoming - 1) * width + k as usize
        };
        table[idx] as usize
    }

    /// Message received by the last party.
    pub fn route(&self, values: &[u64]) -> usize {
        values[..self.n_parties - 1]
            .iter()
            .enumerate()
            .fold(1, |l, (i, &k)| self.next(i + 1, l, k))
    }
}

/// A full protocol: transitions plus the last party's decision table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProtocolTable {
    transitions: Transitions,
    /// Row-major `L × 2K`.
    decision: Vec<Parity>,
}

impl ProtocolTable {
    pub fn new(transitions: Transitions, decision: Vec<Parity>) -> Result<Self> {
        let want = transitions.alphabet * transitions.ring.two_k() as usize;
        if decision.len() != want {
            return Err(Error::Validation(format!(
                "decision table has {} entries, expected {want}",
                decision.len()
            )));
        }
        Ok(ProtocolTable { transitions, decision })
    }

    /// Transitions completed with [`decide_from_reach`].
    pub fn with_canonical_decision(transitions: Transitions) -> Result<Self> {
        let decision = decide_from_reach(&transitions)?;
        Self::new(transitions, decision)
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn decision(&self) -> &[Parity] {
        &self.decision
    }

    pub fn n_parties(&self) -> usize {
        self.transitions.n_parties
    }

    pub fn ring(&self) -> RingSize {
        self.transitions.ring
    }

    pub fn alphabet(&self) -> usize {
        self.transitions.alphabet
    }

    #[inline]
    pub fn decide(&self, incoming: usize, k: u64) -> Parity {
        self.decision[(incoming - 1) * self.ring().two_k() as usize + k as usize]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProtocolFile = serde_json::from_str(text)?;
        file.into_table()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProtocolFile::from_table(self))?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Serialize for ProtocolTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ProtocolFile::from_table(self).serialize(serializer)
    }
}

/// On-disk protocol layout; messages are 1-based.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolFile {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "L")]
    l: usize,
    /// `[party][l][k]`; party 1 may give one row or `L` rows.
    transitions: Vec<Vec<Vec<u16>>>,
    /// `[l][k]`.
    decision: Vec<Vec<Parity>>,
}

impl ProtocolFile {
    fn from_table(p: &ProtocolTable) -> Self {
        let width = p.ring().two_k() as usize;
        let transitions = p
            .transitions
            .tables
            .iter()
            .map(|t| t.chunks(width).map(<[u16]>::to_vec).collect())
            .collect();
        ProtocolFile {
            n: p.n_parties(),
            k: p.ring().k(),
            l: p.alphabet(),
            transitions,
            decision: p.decision.chunks(width).map(<[Parity]>::to_vec).collect(),
        }
    }

    fn into_table(self) -> Result<ProtocolTable> {
        let ring = RingSize::new(self.k)?;
        let width = ring.two_k() as usize;
        let check_rows = |what: &str, rows: usize, widths: &mut dyn Iterator<Item = usize>| -> Result<()> {
            for w in widths {
                if w != width {
                    return Err(Error::Validation(format!("{what} has a row of {w} entries, expected {width}")));
                }
            }
            if rows == 0 {
                return Err(Error::Validation(format!("{what} has no rows")));
            }
            Ok(())
        };
        let mut tables = Vec::with_capacity(self.transitions.len());
        for (i, party) in self.transitions.into_iter().enumerate() {
            let what = format!("transition table of party {}", i + 1);
            check_rows(&what, party.len(), &mut party.iter().map(Vec::len))?;
            let rows_ok = if i == 0 {
                party.len() == 1 || party.len() == self.l
            } else {
                party.len() == self.l
            };
            if !rows_ok {
                return Err(Error::Validation(format!("{what} has {} rows, expected {}", party.len(), self.l)));
            }
            if i == 0 {
                // Rows other than l_0 = 1 are ignored, but must still be in range.
                for row in &party[1..] {
                    if let Some(&bad) = row.iter().find(|&&m| m == 0 || m as usize > self.l) {
                        return Err(Error::Validation(format!("{what} sends message {bad}, outside 1..={}", self.l)));
                    }
                }
                tables.push(party.into_iter().next().expect("checked non-empty"));
            } else {
                tables.push(party.concat());
            }
        }
        let transitions = Transitions::new(self.n, ring, self.l, tables)?;
        check_rows("decision table", self.decision.len(), &mut self.decision.iter().map(Vec::len))?;
        if self.decision.len() != self.l {
            return Err(Error::Validation(format!(
                "decision table has {} rows, expected {}",
                self.decision.len(),
                self.l
            )));
        }
        ProtocolTable::new(transitions, self.decision.concat())
    }
}

/// Runs the protocol on one input.
pub fn execute(p: &ProtocolTable, inst: &DiscreteInstance) -> Result<Parity> {
    if inst.n_parties() != p.n_parties() || inst.ring() != p.ring() {
        return Err(Error::invalid(format!(
            "protocol is for N = {}, K = {} but instance has N = {}, K = {}",
            p.n_parties(),
            p.ring().k(),
            inst.n_parties(),
            inst.ring().k()
        )));
    }
    Ok(run(p, inst.values()))
}

#[inline]
fn run(p: &ProtocolTable, values: &[u64]) -> Parity {
    let last = p.transitions.route(values);
    p.decide(last, values[values.len() - 1])
}

/// The reach set of one message at one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachSet {
    pub stage: usize,
    pub message: usize,
    pub set: SumSet,
}

/// Reach sets for stages `1..N`, indexed `[stage − 1][message − 1]`.
pub fn reach_profiles(t: &Transitions) -> Result<Vec<Vec<SumSet>>> {
    let ring = t.ring;
    ring.require_set_capacity()?;
    let width = ring.two_k();
    let mut stages: Vec<Vec<u64>> = Vec::with_capacity(t.n_parties.saturating_sub(1));
    if t.n_parties < 2 {
        return Ok(Vec::new());
    }
    let mut bits = vec![0u64; t.alphabet];
    for k in 0..width {
        bits[t.next(1, 1, k) - 1] |= 1 << k;
    }
    stages.push(bits);
    for party in 2..t.n_parties {
        let prev = stages.last().expect("stage 1 present");
        let mut next = vec![0u64; t.alphabet];
        for (l, &set) in prev.iter().enumerate() {
            if set == 0 {
                continue;
            }
            for k in 0..width {
                next[t.next(party, l + 1, k) - 1] |= ring.rotate(set, k);
            }
        }
        stages.push(next);
    }
    Ok(stages
        .into_iter()
        .map(|s| s.into_iter().map(|b| SumSet::from_raw(ring, b)).collect())
        .collect())
}

/// Every reach set, reachable or not, for stages `1..N`.
pub fn reach_sets(t: &Transitions) -> Result<Vec<ReachSet>> {
    Ok(reach_profiles(t)?
        .into_iter()
        .enumerate()
        .flat_map(|(i, stage)| {
            stage.into_iter().enumerate().map(move |(l, set)| ReachSet {
                stage: i + 1,
                message: l + 1,
                set,
            })
        })
        .collect())
}

/// Reach sets seen by the last party, one per message.
pub fn final_reach(t: &Transitions) -> Result<Vec<SumSet>> {
    let mut profiles = reach_profiles(t)?;
    Ok(match profiles.pop() {
        Some(last) => last,
        None => {
            let mut sets = vec![SumSet::empty(t.ring)?; t.alphabet];
            sets[0] = SumSet::singleton(t.ring, 0)?;
            sets
        }
    })
}

/// True iff every final reach set is K-free.
pub fn decidable(t: &Transitions) -> Result<bool> {
    Ok(final_reach(t)?.iter().all(is_k_free))
}

/// Canonical decision table, with any conflicting view resolved to even.
///
/// Returns the table and the first message whose reach set is not K-free.
pub fn canonical_decision(t: &Transitions) -> Result<(Vec<Parity>, Option<usize>)> {
    let ring = t.ring;
    let finals = final_reach(t)?;
    let mut conflict = None;
    let mut table = Vec::with_capacity(t.alphabet * ring.two_k() as usize);
    for (l, set) in finals.iter().enumerate() {
        if conflict.is_none() && !is_k_free(set) {
            conflict = Some(l + 1);
        }
        for k in 0..ring.two_k() {
            let shifted = set.shift(k);
            let parity = if shifted.contains(ring.k()) && !shifted.contains(0) {
                Parity::Odd
            } else {
                // Both (undecidable) or neither (unreachable view) fall to even.
                Parity::Even
            };
            table.push(parity);
        }
    }
    Ok((table, conflict))
}

/// Optimal decision table for decidable transitions.
pub fn decide_from_reach(t: &Transitions) -> Result<Vec<Parity>> {
    match canonical_decision(t)? {
        (table, None) => Ok(table),
        (_, Some(message)) => Err(Error::Undecidable { message }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Perfect,
    Flawed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub values: Vec<u64>,
    pub expected: Parity,
    pub produced: Parity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyResult {
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub inputs_checked: u128,
}

/// Number of promise inputs: `2·(2K)^(N−1)`, if it fits.
pub fn promise_input_count(n_parties: usize, ring: RingSize) -> Option<u128> {
    let exp = u32::try_from(n_parties.checked_sub(1)?).ok()?;
    (ring.two_k() as u128).checked_pow(exp)?.checked_mul(2)
}

/// First failing input among prefixes `first_k1 = k_1` (or all inputs when
/// `N = 1`), scanned in lexicographic order.
fn scan(p: &ProtocolTable, first_k1: Option<u64>) -> (Option<Counterexample>, u128) {
    let ring = p.ring();
    let width = ring.two_k();
    let n = p.n_parties();
    let mut values = vec![0u64; n];
    let free = n - 1;
    let mut checked = 0u128;
    // Odometer over k_1..k_{N-1}, k_1 most significant.
    let start = usize::from(first_k1.is_some());
    if let Some(k1) = first_k1 {
        values[0] = k1;
    }
    loop {
        let partial = values[..free].iter().fold(0, |acc, &v| (acc + v) % width);
        let mut completions = [(width - partial) % width, (ring.k() + width - partial) % width];
        completions.sort_unstable();
        for last in completions {
            values[n - 1] = last;
            checked += 1;
            let expected = if (partial + last) % width == 0 { Parity::Even } else { Parity::Odd };
            let produced = run(p, &values);
            if produced != expected {
                return (
                    Some(Counterexample {
                        values,
                        expected,
                        produced,
                    }),
                    checked,
                );
            }
        }
        // Advance the odometer over positions start..free.
        let mut pos = free;
        loop {
            if pos == start {
                return (None, checked);
            }
            pos -= 1;
            values[pos] += 1;
            if values[pos] < width {
                break;
            }
            values[pos] = 0;
        }
    }
}

/// Brute-force check over every promise input; the counterexample, if any,
/// is the lexicographically smallest failing value vector.
pub fn verify(p: &ProtocolTable) -> VerifyResult {
    let (counterexample, inputs_checked) = scan(p, None);
    to_result(counterexample, inputs_checked)
}

/// [`verify`] split over `k_1` across `workers` threads. The counterexample
/// is the same one the sequential scan finds.
pub fn verify_parallel(p: &ProtocolTable, workers: usize) -> Result<VerifyResult> {
    if p.n_parties() < 2 || workers <= 1 {
        return Ok(verify(p));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
    let chunks: Vec<(Option<Counterexample>, u128)> = pool.install(|| {
        (0..p.ring().two_k())
            .into_par_iter()
            .map(|k1| scan(p, Some(k1)))
            .collect()
    });
    // Chunks are ordered by k_1, so the first failing chunk holds the global
    // lexicographic minimum.
    let mut checked = 0;
    for (cex, n) in chunks {
        checked += n;
        if cex.is_some() {
            return Ok(to_result(cex, checked));
        }
    }
    Ok(to_result(None, checked))
}

fn to_result(counterexample: Option<Counterexample>, inputs_checked: u128) -> VerifyResult {
    VerifyResult {
        verdict: if counterexample.is_some() { Verdict::Flawed } else { Verdict::Perfect },
        counterexample,
        inputs_checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(k: u64) -> RingSize {
        RingSize::new(k).unwrap()
    }

    fn set(r: RingSize, xs: &[u64]) -> SumSet {
        SumSet::from_elements(r, xs.iter().copied()).unwrap()
    }

    /// Party 1 sends 1 for {0,1}, 2 for {2}, 3 for {3}.
    fn three_block(n_parties: usize) -> Transitions {
        assert_eq!(n_parties, 2);
        Transitions::new(2, ring(2), 3, vec![vec![1, 1, 2, 3]]).unwrap()
    }

    /// Every decision table of `L × 2K` entries, as bit patterns.
    fn all_decisions(alphabet: usize, width: usize) -> impl Iterator<Item = Vec<Parity>> {
        let cells = alphabet * width;
        (0u64..1 << cells).map(move |mask| {
            (0..cells)
                .map(|i| if mask >> i & 1 == 1 { Parity::Odd } else { Parity::Even })
                .collect()
        })
    }

    #[test]
    fn partial_sum_executes() {
        let p = ProtocolTable::with_canonical_decision(Transitions::partial_sum(2, ring(2)).unwrap()).unwrap();
        let inst = DiscreteInstance::new(ring(2), vec![3, 1]).unwrap();
        assert_eq!(execute(&p, &inst).unwrap(), Parity::Even);
        let zero = DiscreteInstance::new(ring(2), vec![0, 0]).unwrap();
        assert_eq!(execute(&p, &zero).unwrap(), Parity::Even);
    }

    #[test]
    fn execute_rejects_mismatched_instance() {
        let p = ProtocolTable::with_canonical_decision(Transitions::partial_sum(3, ring(2)).unwrap()).unwrap();
        let inst = DiscreteInstance::new(ring(2), vec![3, 1]).unwrap();
        assert!(execute(&p, &inst).is_err());
        let other_ring = DiscreteInstance::new(ring(4), vec![3, 1, 0]).unwrap();
        assert!(execute(&p, &other_ring).is_err());
    }

    #[test]
    fn constant_protocol_cannot_separate_views() {
        let t = Transitions::constant(2, ring(2)).unwrap();
        for decision in all_decisions(1, 4) {
            let p = ProtocolTable::new(t.clone(), decision).unwrap();
            let even = execute(&p, &DiscreteInstance::new(ring(2), vec![0, 0]).unwrap()).unwrap();
            let odd = execute(&p, &DiscreteInstance::new(ring(2), vec![2, 0]).unwrap()).unwrap();
            assert_eq!(even, odd);
            let result = verify(&p);
            assert_eq!(result.verdict, Verdict::Flawed);
        }
        // Correct everywhere except the shared view (l = 1, k_2 = 0): the
        // smallest failure is then one of the colliding pair.
        use Parity::{Even, Odd};
        let p = ProtocolTable::new(t.clone(), vec![Even, Odd, Odd, Even]).unwrap();
        assert_eq!(verify(&p).counterexample.unwrap().values, vec![2, 0]);
        let p = ProtocolTable::new(t.clone(), vec![Odd, Odd, Odd, Even]).unwrap();
        assert_eq!(verify(&p).counterexample.unwrap().values, vec![0, 0]);
        assert_eq!(canonical_decision(&t).unwrap().1, Some(1));
    }

    #[test]
    fn constant_protocol_counterexample_is_smallest() {
        // Canonical decision for the full-ring reach set is all-even, so the
        // first odd input in lexicographic order fails: (0, 2).
        let t = Transitions::constant(2, ring(2)).unwrap();
        let (table, _) = canonical_decision(&t).unwrap();
        let p = ProtocolTable::new(t, table).unwrap();
        let cex = verify(&p).counterexample.unwrap();
        assert_eq!(cex.values, vec![0, 2]);
        assert_eq!((cex.expected, cex.produced), (Parity::Odd, Parity::Even));
    }

    #[test]
    fn reach_set_examples() {
        let r = ring(2);
        let ps = reach_profiles(&Transitions::partial_sum(4, r).unwrap()).unwrap();
        assert_eq!(ps.len(), 3);
        for stage in &ps {
            for (l, s) in stage.iter().enumerate() {
                assert_eq!(*s, set(r, &[l as u64]));
            }
        }
        let c = reach_profiles(&Transitions::constant(3, r).unwrap()).unwrap();
        assert_eq!(c[1][0], SumSet::full(r).unwrap());
        let b = reach_profiles(&three_block(2)).unwrap();
        assert_eq!(b[0], vec![set(r, &[0, 1]), set(r, &[2]), set(r, &[3])]);
        let flat = reach_sets(&three_block(2)).unwrap();
        assert_eq!(flat.len(), 3);
        assert_eq!((flat[2].stage, flat[2].message), (1, 3));
    }

    #[test]
    fn decidability_examples() {
        assert!(decidable(&Transitions::partial_sum(3, ring(4)).unwrap()).unwrap());
        for n in 2..5 {
            assert!(!decidable(&Transitions::constant(n, ring(2)).unwrap()).unwrap());
            assert!(matches!(
                decide_from_reach(&Transitions::constant(n, ring(2)).unwrap()),
                Err(Error::Undecidable { message: 1 })
            ));
        }
        assert!(decidable(&three_block(2)).unwrap());
    }

    #[test]
    fn verify_examples() {
        for (n, k) in [(1, 1), (2, 2), (3, 2), (3, 4), (4, 1)] {
            let p = ProtocolTable::with_canonical_decision(Transitions::partial_sum(n, ring(k)).unwrap()).unwrap();
            let result = verify(&p);
            assert_eq!(result.verdict, Verdict::Perfect);
            assert_eq!(Some(result.inputs_checked), promise_input_count(n, ring(k)));
        }
        let p = ProtocolTable::with_canonical_decision(three_block(2)).unwrap();
        let result = verify(&p);
        assert_eq!(result.verdict, Verdict::Perfect);
        assert_eq!(result.inputs_checked, 8);
    }

    #[test]
    fn single_party_decides_alone() {
        let t = Transitions::new(1, ring(2), 1, vec![]).unwrap();
        assert!(decidable(&t).unwrap());
        let p = ProtocolTable::with_canonical_decision(t).unwrap();
        assert_eq!(verify(&p).verdict, Verdict::Perfect);
        assert_eq!(p.decision(), &[Parity::Even, Parity::Even, Parity::Odd, Parity::Even]);
    }

    #[test]
    fn parallel_verify_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t = Transitions::random(&mut rng, 3, ring(2), 3).unwrap();
            let (table, _) = canonical_decision(&t).unwrap();
            let p = ProtocolTable::new(t, table).unwrap();
            assert_eq!(verify(&p), verify_parallel(&p, 3).unwrap());
        }
    }

    #[test]
    fn counterexamples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let t = Transitions::random(&mut rng, 3, ring(2), 2).unwrap();
            let decision = (0..8).map(|_| if rng.gen() { Parity::Odd } else { Parity::Even }).collect();
            let p = ProtocolTable::new(t, decision).unwrap();
            if let Some(cex) = verify(&p).counterexample {
                let inst = DiscreteInstance::new(ring(2), cex.values.clone()).unwrap();
                assert_eq!(inst.parity(), cex.expected);
                assert_eq!(execute(&p, &inst).unwrap(), cex.produced);
                assert_ne!(cex.expected, cex.produced);
            }
        }
    }

    #[test]
    fn reach_criterion_matches_brute_force_on_random_protocols() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for i in 0..400 {
            let alphabet = 1 + i % 5;
            let t = Transitions::random(&mut rng, 3, ring(4), alphabet).unwrap();
            let (table, conflict) = canonical_decision(&t).unwrap();
            let perfect = verify(&ProtocolTable::new(t.clone(), table).unwrap()).verdict == Verdict::Perfect;
            assert_eq!(perfect, decidable(&t).unwrap());
            assert_eq!(conflict.is_none(), perfect);
        }
    }

    #[test]
    fn reach_sets_grow_when_alphabet_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in [2u64, 4] {
            let r = ring(k);
            for i in 0..300 {
                let alphabet = 1 + i % (2 * k as usize - 1);
                let t = Transitions::random(&mut rng, 4, r, alphabet).unwrap();
                let profiles = reach_profiles(&t).unwrap();
                for stage in 0..profiles.len() - 1 {
                    for set in &profiles[stage] {
                        if set.is_empty() || !is_k_free(set) {
                            continue;
                        }
                        assert!(profiles[stage + 1].iter().any(|s| s.len() > set.len()));
                    }
                }
            }
        }
    }

    #[test]
    fn protocol_file_round_trip() {
        let p = ProtocolTable::with_canonical_decision(Transitions::partial_sum(3, ring(2)).unwrap()).unwrap();
        let text = p.to_json().unwrap();
        assert_eq!(ProtocolTable::from_json(&text).unwrap(), p);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["transitions"][0].as_array().unwrap().len(), 1);
        assert_eq!(v["transitions"][1].as_array().unwrap().len(), 4);
        assert_eq!(v["decision"][0][0], "even");
    }

    #[test]
    fn protocol_file_accepts_full_first_table() {
        let text = r#"{"N": 2, "K": 1, "L": 2,
            "transitions": [[[1, 2], [2, 2]]],
            "decision": [["even", "odd"], ["odd", "even"]]}"#;
        let p = ProtocolTable::from_json(text).unwrap();
        assert_eq!(verify(&p).verdict, Verdict::Perfect);
    }

    #[test]
    fn protocol_file_rejects_bad_ranges() {
        let bad = [
            // message 3 with L = 2
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[1, 3]]], "decision": [["even","odd"],["odd","even"]]}"#,
            // message 0
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[0, 1]]], "decision": [["even","odd"],["odd","even"]]}"#,
            // short row
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[1]]], "decision": [["even","odd"],["odd","even"]]}"#,
            // missing decision row
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[1, 2]]], "decision": [["even","odd"]]}"#,
            // wrong table count
            r#"{"N": 3, "K": 1, "L": 2, "transitions": [[[1, 2]]], "decision": [["even","odd"],["odd","even"]]}"#,
            // unknown parity
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[1, 2]]], "decision": [["even","odd"],["odd","maybe"]]}"#,
            // out-of-range ignored row of party 1
            r#"{"N": 2, "K": 1, "L": 2, "transitions": [[[1, 2], [1, 5]]], "decision": [["even","odd"],["odd","even"]]}"#,
            // K = 0
            r#"{"N": 1, "K": 0, "L": 1, "transitions": [], "decision": [["even","odd"]]}"#,
        ];
        for text in bad {
            assert!(ProtocolTable::from_json(text).is_err(), "{text}");
        }
    }
}
