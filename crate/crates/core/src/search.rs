//! Does a perfect classical protocol exist for given `(N, K, L)`?
//!
//! Two independent engines answer the question:
//!
//! * [`exhaustive_exists`] walks every transition table and keeps the ones
//!   whose final reach sets are all K-free. Decision tables never need to be
//!   enumerated because [`decide_from_reach`] is optimal.
//! * [`profile_exists`] searches over reach-set *profiles* instead of
//!   tables. Party `n + 1` sees the stage-`n` profile `(A_1, …, A_L)`, and
//!   choosing its table amounts to colouring the shifted sets `A_l ⊕ {k}`
//!   with `L` colours so that every colour class stays K-free. A stage-`n`
//!   profile is only ever kept when all of its sets are K-free, since every
//!   set is contained in some later shift-union.
//!
//! Pruning in the profile search rests on one monotonicity fact: if every
//! set of profile `P` is contained in some set of profile `Q` (not
//! necessarily injectively), any continuation that works from `Q` also works
//! from `P`. So once `P` is known to fail, every such `Q` fails too. The same
//! holds for `P` rotated by any ring element. Profiles are only recorded as
//! failed after their subtree has been exhausted.

use std::collections::HashSet;
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{decide_from_reach, verify, ProtocolTable, Transitions, Verdict};
use crate::zring::RingSize;

pub const DEFAULT_TABLE_BUDGET: u128 = 100_000_000;
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchVerdict {
    Exists,
    Impossible,
    /// The node budget ran out before the space was exhausted.
    Unknown,
}

impl std::fmt::Display for SearchVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchVerdict::Exists => "exists",
            SearchVerdict::Impossible => "impossible",
            SearchVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    ProfileDp,
}

pub type ProgressHook = Arc<dyn Fn(u64) + Send + Sync>;

#[derive(Clone)]
pub struct SearchConfig {
    /// Cap on the number of transition tables [`exhaustive_exists`] may walk.
    pub table_budget: u128,
    /// Cap on search nodes in [`profile_exists`].
    pub node_budget: u64,
    pub dominance_pruning: bool,
    /// Treat profiles that differ by a rotation of Z_2K as equivalent.
    pub rotation_symmetry: bool,
    pub workers: usize,
    /// Called with the node count every `progress_interval` nodes.
    pub progress: Option<ProgressHook>,
    pub progress_interval: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            table_budget: DEFAULT_TABLE_BUDGET,
            node_budget: DEFAULT_NODE_BUDGET,
            dominance_pruning: true,
            rotation_symmetry: true,
            workers: 1,
            progress: None,
            progress_interval: 1 << 24,
        }
    }
}

impl std::fmt::Debug for SearchConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SearchConfig")
            .field("table_budget", &self.table_budget)
            .field("node_budget", &self.node_budget)
            .field("dominance_pruning", &self.dominance_pruning)
            .field("rotation_symmetry", &self.rotation_symmetry)
            .field("workers", &self.workers)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub n: usize,
    pub k: u64,
    pub l: usize,
    pub verdict: SearchVerdict,
    pub witness: Option<ProtocolTable>,
    /// Exact for one worker; may vary between runs with several.
    pub nodes_explored: u64,
    pub method: SearchMethod,
    /// `log2(L)`.
    pub memory_bits: f64,
}

impl SearchReport {
    fn new(n: usize, ring: RingSize, l: usize, method: SearchMethod) -> Self {
        SearchReport {
            n,
            k: ring.k(),
            l,
            verdict: SearchVerdict::Unknown,
            witness: None,
            nodes_explored: 0,
            method,
            memory_bits: (l as f64).log2(),
        }
    }
}

/// Column order of the summary CSV.
pub const CSV_HEADER: [&str; 7] = ["n", "k", "l", "verdict", "nodes", "seconds", "memory_bits"];

/// Writes one CSV row per `(report, seconds)` pair, with a header.
pub fn write_csv<W: Write>(rows: &[(SearchReport, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for (r, seconds) in rows {
        w.write_record([
            r.n.to_string(),
            r.k.to_string(),
            r.l.to_string(),
            r.verdict.to_string(),
            r.nodes_explored.to_string(),
            format!("{seconds:.6}"),
            format!("{:.6}", r.memory_bits),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_params(n: usize, l: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if l == 0 || l > u16::MAX as usize {
        return Err(Error::invalid(format!("alphabet size {l} is out of range")));
    }
    Ok(())
}

/// Number of transition tables for `(N, K, L)`, if it fits in a `u128`.
pub fn table_count(n: usize, ring: RingSize, l: usize) -> Option<u128> {
    if n <= 1 {
        return Some(1);
    }
    let width = u32::try_from(ring.two_k()).ok()?;
    let later = u32::try_from(l).ok()?.checked_mul(width)?.checked_mul(u32::try_from(n - 2).ok()?)?;
    (l as u128).checked_pow(width.checked_add(later)?)
}

fn finish_witness(t: Transitions) -> Result<ProtocolTable> {
    let p = ProtocolTable::with_canonical_decision(t)?;
    debug_assert_eq!(verify(&p).verdict, Verdict::Perfect);
    Ok(p)
}

/// Enumerates every transition table.
pub fn exhaustive_exists(n: usize, ring: RingSize, l: usize, config: &SearchConfig) -> Result<SearchReport> {
    check_params(n, l)?;
    ring.require_set_capacity()?;
    let total = table_count(n, ring, l).unwrap_or(u128::MAX);
    if total > config.table_budget {
        return Err(Error::Budget {
            needed: total,
            budget: config.table_budget,
        });
    }
    let mut report = SearchReport::new(n, ring, l, SearchMethod::Exhaustive);
    let width = ring.two_k() as usize;
    if n == 1 {
        report.nodes_explored = 1;
        report.verdict = SearchVerdict::Exists;
        report.witness = Some(finish_witness(Transitions::new(1, ring, l, vec![])?)?);
        return Ok(report);
    }
    // Flattened tables: party 1's row, then L×2K per later party. Entries
    // are 0-based here and shifted to 1-based messages for the witness.
    let len = width + (n - 2) * l * width;
    let mut entries = vec![0u16; len];
    let mut stage = vec![0u64; l];
    let mut next = vec![0u64; l];
    loop {
        report.nodes_explored += 1;
        if raw_decidable(ring, l, &entries, &mut stage, &mut next) {
            let tables = split_tables(&entries, width, l, n);
            report.verdict = SearchVerdict::Exists;
            report.witness = Some(finish_witness(Transitions::new(n, ring, l, tables)?)?);
            return Ok(report);
        }
        // Odometer, last entry fastest.
        let mut pos = len;
        loop {
            if pos == 0 {
                report.verdict = SearchVerdict::Impossible;
                return Ok(report);
            }
            pos -= 1;
            entries[pos] += 1;
            if (entries[pos] as usize) < l {
                break;
            }
            entries[pos] = 0;
        }
    }
}

fn raw_decidable(ring: RingSize, l: usize, entries: &[u16], stage: &mut [u64], next: &mut [u64]) -> bool {
    let width = ring.two_k() as usize;
    stage.fill(0);
    for (k, &m) in entries[..width].iter().enumerate() {
        stage[m as usize] |= 1 << k;
    }
    for table in entries[width..].chunks(l * width) {
        next.fill(0);
        for (msg, &set) in stage.iter().enumerate() {
            if set == 0 {
                continue;
            }
            for k in 0..width {
                next[table[msg * width + k] as usize] |= ring.rotate(set, k as u64);
            }
        }
        stage.copy_from_slice(next);
    }
    stage.iter().all(|&s| ring.bits_k_free(s))
}

fn split_tables(entries: &[u16], width: usize, l: usize, n: usize) -> Vec<Vec<u16>> {
    let mut tables = vec![entries[..width].iter().map(|&m| m + 1).collect()];
    tables.extend(
        entries[width..]
            .chunks(l * width)
            .map(|t| t.iter().map(|&m| m + 1).collect()),
    );
    debug_assert_eq!(tables.len(), n - 1);
    tables
}

/// Reach sets of one stage, one per message (empty for unreachable ones).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Profile {
    pub stage: usize,
    pub sets: Vec<u64>,
}

impl Profile {
    /// Masks sorted ascending with empty sets last.
    pub fn canonical(&self) -> Vec<u64> {
        let mut masks = self.sets.clone();
        masks.sort_unstable_by_key(|&m| (m == 0, m));
        masks
    }
}

/// Maximal nonempty sets of a profile, sorted, optionally minimised over
/// rotations. Profiles with equal keys succeed or fail together.
fn profile_key(ring: RingSize, sets: &[u64], rotation: bool) -> Vec<u64> {
    let maximal = antichain(sets);
    if !rotation {
        return maximal;
    }
    (0..ring.two_k())
        .map(|c| {
            let mut rotated: Vec<u64> = maximal.iter().map(|&m| ring.rotate(m, c)).collect();
            rotated.sort_unstable();
            rotated
        })
        .min()
        .unwrap_or_default()
}

fn antichain(sets: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = sets
        .iter()
        .copied()
        .filter(|&m| m != 0 && !sets.iter().any(|&o| o != m && m & !o == 0))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Every set of `failed` (possibly rotated) lies inside some set of `sets`.
fn dominated_by(ring: RingSize, failed: &[u64], sets: &[u64], rotation: bool) -> bool {
    let covers = |c: u64| {
        failed
            .iter()
            .all(|&p| {
                let p = ring.rotate(p, c);
                sets.iter().any(|&q| p & !q == 0)
            })
    };
    if rotation {
        (0..ring.two_k()).any(covers)
    } else {
        covers(0)
    }
}

#[derive(Default)]
struct Memo {
    exact: Vec<HashSet<Vec<u64>>>,
    failed: Vec<Vec<Vec<u64>>>,
}

struct Engine<'a> {
    ring: RingSize,
    n: usize,
    l: usize,
    config: &'a SearchConfig,
    memo: RwLock<Memo>,
    nodes: AtomicU64,
    out_of_budget: AtomicBool,
    /// Lowest stage-1 branch index that found a witness (parallel mode).
    best_branch: AtomicUsize,
}

enum Outcome {
    /// Tables for this party and every later one, with 1-based messages.
    Found(Vec<Vec<u16>>),
    Failed,
    Aborted,
}

/// Shifted sets to colour for one party, after folding duplicates and
/// subsets into the maximal sets that contain them.
struct Items {
    masks: Vec<u64>,
    /// For each `(message, k)`, the index of the item it is folded into, or
    /// `None` for unreachable messages. Party 1 uses message 0 only.
    origin: Vec<Option<usize>>,
}

impl<'a> Engine<'a> {
    fn new(ring: RingSize, n: usize, l: usize, config: &'a SearchConfig) -> Self {
        Engine {
            ring,
            n,
            l,
            config,
            memo: RwLock::new(Memo {
                exact: vec![HashSet::new(); n],
                failed: vec![Vec::new(); n],
            }),
            nodes: AtomicU64::new(0),
            out_of_budget: AtomicBool::new(false),
            best_branch: AtomicUsize::new(usize::MAX),
        }
    }

    /// Counts one node; false once the budget is gone.
    fn tick(&self) -> bool {
        let count = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(hook) = &self.config.progress {
            if count.is_multiple_of(self.config.progress_interval.max(1)) {
                hook(count);
            }
        }
        if count > self.config.node_budget {
            self.out_of_budget.store(true, Ordering::Relaxed);
        }
        !self.out_of_budget.load(Ordering::Relaxed)
    }

    fn items(&self, sets: &[u64]) -> Items {
        let width = self.ring.two_k();
        let mut raw = Vec::with_capacity(sets.len() * width as usize);
        let mut origin = vec![None; sets.len() * width as usize];
        for (msg, &set) in sets.iter().enumerate() {
            if set == 0 {
                continue;
            }
            for k in 0..width {
                raw.push(((msg, k), self.ring.rotate(set, k)));
            }
        }
        let mut unique: Vec<u64> = raw.iter().map(|r| r.1).collect();
        unique.sort_unstable();
        unique.dedup();
        let mut masks: Vec<u64> = unique
            .iter()
            .copied()
            .filter(|&m| !unique.iter().any(|&o| o != m && m & !o == 0))
            .collect();
        // Largest sets first; they constrain the colouring most.
        masks.sort_unstable_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m));
        for ((msg, k), m) in raw {
            let rep = masks
                .iter()
                .position(|&big| m & !big == 0)
                .expect("every set lies inside a maximal one");
            origin[msg * width as usize + k as usize] = Some(rep);
        }
        Items { masks, origin }
    }

    fn table_for(&self, party: usize, items: &Items, colour: &[u8]) -> Vec<u16> {
        let width = self.ring.two_k() as usize;
        let rows = if party == 1 { 1 } else { self.l };
        (0..rows * width)
            .map(|i| items.origin.get(i).copied().flatten().map_or(1, |it| colour[it] as u16 + 1))
            .collect()
    }

    fn is_known_failure(&self, stage: usize, key: &[u64], sets: &[u64]) -> bool {
        let memo = self.memo.read().expect("memo lock");
        if memo.exact[stage].contains(key) {
            return true;
        }
        self.config.dominance_pruning
            && memo.failed[stage]
                .iter()
                .any(|p| dominated_by(self.ring, p, sets, self.config.rotation_symmetry))
    }

    fn record_failure(&self, stage: usize, key: Vec<u64>) {
        let mut memo = self.memo.write().expect("memo lock");
        if self.config.dominance_pruning {
            memo.failed[stage].push(key.clone());
        }
        memo.exact[stage].insert(key);
    }

    /// Explores the profile reached after `stage` parties have spoken.
    fn explore(&self, stage: usize, sets: &[u64], branch: usize) -> Outcome {
        let party = stage + 1;
        let items = self.items(sets);
        if items.masks.iter().any(|&m| !self.ring.bits_k_free(m)) {
            return Outcome::Failed;
        }
        let leaf = party == self.n - 1;
        let mut colour = vec![0u8; items.masks.len()];
        let mut unions = vec![0u64; self.l];
        let mut result = Outcome::Failed;
        self.colour(&items.masks, 0, 0, &mut colour, &mut unions, &mut |colour, unions| {
            if branch > self.best_branch.load(Ordering::Relaxed) {
                return Flow::Abort;
            }
            let table = self.table_for(party, &items, colour);
            if leaf {
                result = Outcome::Found(vec![table]);
                return Flow::Stop;
            }
            let key = profile_key(self.ring, unions, self.config.rotation_symmetry);
            if self.is_known_failure(party, &key, unions) {
                return Flow::Continue;
            }
            match self.explore(party, unions, branch) {
                Outcome::Found(mut rest) => {
                    rest.insert(0, table);
                    result = Outcome::Found(rest);
                    Flow::Stop
                }
                Outcome::Failed => {
                    self.record_failure(party, key);
                    Flow::Continue
                }
                Outcome::Aborted => Flow::Abort,
            }
        })
        .map_or(Outcome::Aborted, |_| result)
    }

    /// Backtracking colouring of `items` with at most `L` colours, each
    /// colour class K-free. Colours are opened in order, and a new colour is
    /// tried before reusing old ones so finer profiles come first. Returns
    /// `None` when aborted.
    fn colour(
        &self,
        items: &[u64],
        idx: usize,
        used: usize,
        colour: &mut [u8],
        unions: &mut [u64],
        visit: &mut dyn FnMut(&[u8], &[u64]) -> Flow,
    ) -> Option<Flow> {
        if idx == items.len() {
            return match visit(colour, unions) {
                Flow::Abort => None,
                flow => Some(flow),
            };
        }
        if !self.tick() {
            return None;
        }
        // Forward check: every remaining item still needs a home.
        if used == self.l
            && items[idx..]
                .iter()
                .any(|&m| !unions[..used].iter().any(|&u| self.ring.bits_k_free(u | m)))
        {
            return Some(Flow::Continue);
        }
        let item = items[idx];
        let fresh = (used < self.l).then_some(used);
        for c in fresh.into_iter().chain(0..used) {
            let merged = unions[c] | item;
            if !self.ring.bits_k_free(merged) {
                continue;
            }
            let saved = unions[c];
            unions[c] = merged;
            colour[idx] = c as u8;
            let next_used = if c == used { used + 1 } else { used };
            let flow = self.colour(items, idx + 1, next_used, colour, unions, visit);
            unions[c] = saved;
            match flow {
                None => return None,
                Some(Flow::Stop) => return Some(Flow::Stop),
                Some(_) => {}
            }
        }
        Some(Flow::Continue)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flow {
    Continue,
    Stop,
    Abort,
}

/// Running-sum witness padded to an alphabet of `l ≥ 2K` messages.
pub fn partial_sum_witness(n: usize, ring: RingSize, l: usize) -> Result<ProtocolTable> {
    let width = ring.two_k() as usize;
    if l < width {
        return Err(Error::invalid(format!("the running sum needs L ≥ 2K = {width}, got {l}")));
    }
    let base = Transitions::partial_sum(n, ring)?;
    let tables = base
        .tables()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut t = t.clone();
            if i > 0 {
                t.resize(l * width, 1);
            }
            t
        })
        .collect();
    finish_witness(Transitions::new(n, ring, l, tables)?)
}

/// Depth-first search over reach-set profiles.
pub fn profile_exists(n: usize, ring: RingSize, l: usize, config: &SearchConfig) -> Result<SearchReport> {
    check_params(n, l)?;
    ring.require_set_capacity()?;
    if l > u8::MAX as usize + 1 {
        return Err(Error::invalid(format!("profile search supports L ≤ 256, got {l}")));
    }
    let mut report = SearchReport::new(n, ring, l, SearchMethod::ProfileDp);
    if n == 1 {
        report.nodes_explored = 1;
        report.verdict = SearchVerdict::Exists;
        report.witness = Some(finish_witness(Transitions::new(1, ring, l, vec![])?)?);
        return Ok(report);
    }
    if l >= ring.two_k() as usize {
        report.verdict = SearchVerdict::Exists;
        report.witness = Some(partial_sum_witness(n, ring, l)?);
        return Ok(report);
    }

    let engine = Engine::new(ring, n, l, config);
    let mut root = vec![0u64; l];
    root[0] = 1;
    let outcome = if config.workers > 1 && n >= 3 {
        run_parallel(&engine, &root)?
    } else {
        engine.explore(0, &root, 0)
    };
    report.nodes_explored = engine.nodes.load(Ordering::Relaxed);
    match outcome {
        Outcome::Found(tables) => {
            report.verdict = SearchVerdict::Exists;
            report.witness = Some(finish_witness(Transitions::new(n, ring, l, tables)?)?);
        }
        Outcome::Failed => report.verdict = SearchVerdict::Impossible,
        Outcome::Aborted => report.verdict = SearchVerdict::Unknown,
    }
    Ok(report)
}

/// Splits the search over party 1's colourings. The witness is the one the
/// sequential search would return: branches only give up early when a
/// lower-numbered branch has already succeeded.
fn run_parallel(engine: &Engine<'_>, root: &[u64]) -> Result<Outcome> {
    let items = engine.items(root);
    let mut branches: Vec<(Vec<u16>, Vec<u64>)> = Vec::new();
    let mut seen = HashSet::new();
    let mut colour = vec![0u8; items.masks.len()];
    let mut unions = vec![0u64; engine.l];
    let complete = engine
        .colour(&items.masks, 0, 0, &mut colour, &mut unions, &mut |colour, unions| {
            let key = profile_key(engine.ring, unions, engine.config.rotation_symmetry);
            if seen.insert(key) {
                branches.push((engine.table_for(1, &items, colour), unions.to_vec()));
            }
            Flow::Continue
        })
        .is_some();
    if !complete {
        return Ok(Outcome::Aborted);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(engine.config.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {} workers: {e}", engine.config.workers)))?;
    let results: Vec<Outcome> = pool.install(|| {
        branches
            .par_iter()
            .enumerate()
            .map(|(i, (table, sets))| {
                if i > engine.best_branch.load(Ordering::Relaxed) {
                    return Outcome::Aborted;
                }
                let key = profile_key(engine.ring, sets, engine.config.rotation_symmetry);
                if engine.is_known_failure(1, &key, sets) {
                    return Outcome::Failed;
                }
                match engine.explore(1, sets, i) {
                    Outcome::Found(mut rest) => {
                        engine.best_branch.fetch_min(i, Ordering::Relaxed);
                        rest.insert(0, table.clone());
                        Outcome::Found(rest)
                    }
                    Outcome::Failed => {
                        engine.record_failure(1, key);
                        Outcome::Failed
                    }
                    Outcome::Aborted => Outcome::Aborted,
                }
            })
            .collect()
    });
    let mut aborted = false;
    for outcome in results {
        match outcome {
            Outcome::Found(tables) => return Ok(Outcome::Found(tables)),
            Outcome::Aborted => aborted = true,
            Outcome::Failed => {}
        }
    }
    Ok(if aborted { Outcome::Aborted } else { Outcome::Failed })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinLReport {
    pub n: usize,
    pub k: u64,
    pub reports: Vec<SearchReport>,
    /// Smallest feasible `L`, if any `L ≤ l_max` is feasible.
    pub min_l: Option<usize>,
}

/// Runs the chosen engine for `L = 1..=l_max` and reports the first
/// feasible alphabet size.
pub fn min_l(n: usize, ring: RingSize, l_max: usize, method: SearchMethod, config: &SearchConfig) -> Result<MinLReport> {
    if l_max == 0 || l_max > ring.two_k() as usize {
        return Err(Error::invalid(format!(
            "l_max must lie in 1..=2K = {}, got {l_max}",
            ring.two_k()
        )));
    }
    let reports = (1..=l_max)
        .map(|l| search(n, ring, l, method, config))
        .collect::<Result<Vec<_>>>()?;
    let min_l = minimal_feasible(&reports)?;
    Ok(MinLReport {
        n,
        k: ring.k(),
        reports,
        min_l,
    })
}

/// Smallest `L` with verdict `exists` among reports sorted by `L`. Errors if
/// a larger alphabet is reported impossible after a smaller one succeeded,
/// since any protocol can ignore extra messages.
pub fn minimal_feasible(reports: &[SearchReport]) -> Result<Option<usize>> {
    let Some(first) = reports.iter().position(|r| r.verdict == SearchVerdict::Exists) else {
        return Ok(None);
    };
    if let Some(bad) = reports[first..].iter().find(|r| r.verdict == SearchVerdict::Impossible) {
        return Err(Error::Validation(format!(
            "feasibility is not monotone in L: L = {} feasible but L = {} impossible",
            reports[first].l, bad.l
        )));
    }
    Ok(Some(reports[first].l))
}

/// Decides `(N, K, L)` with the chosen engine.
pub fn search(n: usize, ring: RingSize, l: usize, method: SearchMethod, config: &SearchConfig) -> Result<SearchReport> {
    match method {
        SearchMethod::Exhaustive => exhaustive_exists(n, ring, l, config),
        SearchMethod::ProfileDp => profile_exists(n, ring, l, config),
    }
}

/// Checks a report's invariants: a witness exactly when feasible, and the
/// witness verifies perfectly.
pub fn check_report(report: &SearchReport) -> Result<()> {
    match (&report.witness, report.verdict) {
        (Some(w), SearchVerdict::Exists) => {
            if w.n_parties() != report.n || w.ring().k() != report.k || w.alphabet() != report.l {
                return Err(Error::Validation("witness dimensions do not match the report".into()));
            }
            if verify(w).verdict != Verdict::Perfect {
                return Err(Error::Validation("witness protocol is flawed".into()));
            }
            decide_from_reach(w.transitions())?;
            Ok(())
        }
        (None, SearchVerdict::Impossible | SearchVerdict::Unknown) => Ok(()),
        _ => Err(Error::Validation("witness present iff verdict is exists".into())),
    }
}
