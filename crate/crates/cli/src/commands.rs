use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use chain_parity::protocol::{decidable, verify, verify_parallel, ProtocolTable, Verdict};
use chain_parity::qsim::{run_chain, run_continuous, run_rod, ChainModel, QUARTER_ROTATION};
use chain_parity::search::{self, minimal_feasible, SearchConfig, SearchMethod, SearchReport, SearchVerdict};
use chain_parity::teleport::run_teleport_chain;
use chain_parity::zring::{sweep_growth_lemma, MAX_SWEEP_MODULUS};
use chain_parity::{DiscreteInstance, FieldSpec, Parity, RingSize};

use crate::{exit, Cli, CliError, Command, Method, Model, Rendered};

pub fn dispatch(cli: &Cli) -> Result<Rendered, CliError> {
    match &cli.command {
        Command::LemmaCheck {
            two_k,
            allow_non_power_of_two,
            max_examples,
        } => lemma_check(*two_k, *allow_non_power_of_two, *max_examples),
        Command::Quantum { instance, model, steps } => quantum(instance, *model, *steps),
        Command::Rod { instance, jitter, seed } => rod(instance, *jitter, *seed),
        Command::Verify { protocol } => verify_protocol(protocol, cli.workers),
        Command::Search {
            n,
            k,
            max_l,
            method,
            budget,
            node_budget,
            no_prune,
            allow_non_power_of_two,
        } => {
            let config = SearchConfig {
                table_budget: *budget,
                node_budget: *node_budget,
                dominance_pruning: !no_prune,
                rotation_symmetry: !no_prune,
                workers: cli.workers,
                progress: Some(Arc::new(|nodes| log::info!("search: {nodes} nodes explored"))),
                ..SearchConfig::default()
            };
            search_min_l(*n, *k, *max_l, *method, *allow_non_power_of_two, &config)
        }
        Command::Teleport { instance, seed, trials } => teleport(instance, *seed, *trials),
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn require_power_of_two(ring: RingSize, allow: bool) -> Result<(), CliError> {
    if ring.k_is_power_of_two() || allow {
        return Ok(());
    }
    Err(CliError::usage(format!(
        "K = {} is not a power of two; pass --allow-non-power-of-two for an exploratory run",
        ring.k()
    )))
}

fn lemma_check(two_k: u64, allow: bool, max_examples: usize) -> Result<Rendered, CliError> {
    if two_k < 2 || !two_k.is_multiple_of(2) || two_k > MAX_SWEEP_MODULUS {
        return Err(CliError::usage(format!(
            "--two-k must be even and in 2..={MAX_SWEEP_MODULUS}, got {two_k}"
        )));
    }
    let ring = RingSize::from_modulus(two_k)?;
    require_power_of_two(ring, allow)?;
    let report = sweep_growth_lemma(ring, max_examples)?;
    let asserted = ring.k_is_power_of_two();
    let broken = report.violations > 0 || report.period_failures > 0 || report.union_identity_failures > 0;
    let csv = csv_bytes(
        &[
            "two_k",
            "k_is_power_of_two",
            "sets_checked",
            "k_free_sets",
            "pairs_checked",
            "violations",
            "zero_growth_cases",
        ],
        &[vec![
            report.two_k.to_string(),
            report.k_is_power_of_two.to_string(),
            report.sets_checked.to_string(),
            report.k_free_sets.to_string(),
            report.pairs_checked.to_string(),
            report.violations.to_string(),
            report.zero_growth_cases.to_string(),
        ]],
    );
    Ok(Rendered {
        asserted,
        result: to_value(&report),
        csv,
        status: if asserted && broken { exit::CLAIM_FAILED } else { 0 },
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    #[serde(rename = "K")]
    k: u64,
    alpha: f64,
    segments: Vec<(f64, f64)>,
}

/// The piecewise field whose section integrals are `k_n·α/K` with `α = 1`.
fn field_from_instance(inst: &DiscreteInstance) -> Result<FieldSpec, CliError> {
    let n = inst.n_parties() as f64;
    let k = inst.ring().k() as f64;
    let segments = inst.values().iter().map(|&v| (1.0 / n, v as f64 * n / k)).collect();
    Ok(FieldSpec::new(segments, 1.0)?)
}

fn quantum(path: &Path, model: Model, steps: usize) -> Result<Rendered, CliError> {
    let text = read_text(path)?;
    let raw: Value = serde_json::from_str(&text).map_err(chain_parity::Error::from)?;
    let is_field = raw.get("segments").is_some();
    let (parity, expected, mut result) = match model {
        Model::Continuous => {
            let (field, ring) = if is_field {
                let file: FieldFile = serde_json::from_value(raw).map_err(chain_parity::Error::from)?;
                let ring = RingSize::new(file.k)?;
                (FieldSpec::new(file.segments, file.alpha)?, ring)
            } else {
                let inst = DiscreteInstance::from_json(&text)?;
                (field_from_instance(&inst)?, inst.ring())
            };
            let out = run_continuous(&field, ring, steps)?;
            let expected = Parity::from_m((field.integral() / field.alpha).round() as i64);
            (
                out.parity,
                expected,
                json!({
                    "theta": out.theta,
                    "error_bound": out.error_bound,
                    "steps": steps,
                }),
            )
        }
        Model::Angle | Model::Amplitude => {
            if is_field {
                return Err(CliError {
                    code: exit::MALFORMED,
                    kind: "malformed-input",
                    message: "the angle and amplitude models need a discrete {\"K\", \"k\"} instance".into(),
                });
            }
            let inst = DiscreteInstance::from_json(&text)?;
            let chain_model = if model == Model::Angle {
                ChainModel::Angle
            } else {
                ChainModel::Amplitude
            };
            let out = run_chain(&inst, chain_model);
            (
                out.parity,
                inst.parity(),
                json!({
                    "n_parties": inst.n_parties(),
                    "wrong_outcome_probability": out.wrong_outcome_probability,
                }),
            )
        }
    };
    result["model"] = to_value(&model);
    result["parity"] = to_value(&parity);
    result["expected"] = to_value(&expected);
    result["correct"] = json!(parity == expected);
    let csv = csv_bytes(
        &["model", "parity", "expected", "correct"],
        &[vec![
            format!("{model:?}").to_lowercase(),
            parity.to_string(),
            expected.to_string(),
            (parity == expected).to_string(),
        ]],
    );
    Ok(Rendered {
        asserted: true,
        result,
        csv,
        status: if parity == expected { 0 } else { exit::CLAIM_FAILED },
    })
}

fn rod(path: &Path, jitter: f64, seed: u64) -> Result<Rendered, CliError> {
    let inst = DiscreteInstance::from_json(&read_text(path)?)?;
    let out = run_rod(&inst, jitter, seed)?;
    let expected = inst.parity();
    // Total noise below a quarter rotation cannot move the rod to the wrong
    // pole; beyond that the outcome is an observation, not a guarantee.
    let worst_case = jitter * inst.n_parties() as f64;
    let guaranteed = worst_case < QUARTER_ROTATION;
    let correct = out.parity == expected;
    let result = json!({
        "parity": out.parity,
        "expected": expected,
        "correct": correct,
        "accumulated_jitter": out.accumulated_jitter,
        "worst_case_jitter": worst_case,
        "guaranteed": guaranteed,
    });
    let csv = csv_bytes(
        &["parity", "expected", "correct", "accumulated_jitter", "guaranteed"],
        &[vec![
            out.parity.to_string(),
            expected.to_string(),
            correct.to_string(),
            out.accumulated_jitter.to_string(),
            guaranteed.to_string(),
        ]],
    );
    Ok(Rendered {
        asserted: guaranteed,
        result,
        csv,
        status: if guaranteed && !correct { exit::CLAIM_FAILED } else { 0 },
    })
}

fn verify_protocol(path: &Path, workers: usize) -> Result<Rendered, CliError> {
    let p = ProtocolTable::from_json(&read_text(path)?)?;
    let res = if workers > 1 { verify_parallel(&p, workers)? } else { verify(&p) };
    let dec = decidable(p.transitions())?;
    let perfect = res.verdict == Verdict::Perfect;
    let mut result = to_value(&res);
    result["decidable"] = json!(dec);
    result["n"] = json!(p.n_parties());
    result["k"] = json!(p.ring().k());
    result["l"] = json!(p.alphabet());
    let counterexample = res
        .counterexample
        .as_ref()
        .map(|c| c.values.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
        .unwrap_or_default();
    let csv = csv_bytes(
        &["verdict", "inputs_checked", "decidable", "counterexample"],
        &[vec![
            if perfect { "perfect" } else { "flawed" }.to_string(),
            res.inputs_checked.to_string(),
            dec.to_string(),
            counterexample,
        ]],
    );
    Ok(Rendered {
        asserted: true,
        result,
        csv,
        // A perfect protocol must have K-free final reach sets.
        status: if perfect && !dec { exit::CLAIM_FAILED } else { 0 },
    })
}

/// The verdict a proof pins down, if any: the running sum works once
/// `L ≥ 2K`, and for `K` a power of two every `L < 2K` fails when `N > K`.
fn proven_verdict(n: usize, ring: RingSize, l: usize) -> Option<SearchVerdict> {
    if n == 1 || l >= ring.two_k() as usize {
        Some(SearchVerdict::Exists)
    } else if ring.k_is_power_of_two() && n as u64 > ring.k() {
        Some(SearchVerdict::Impossible)
    } else {
        None
    }
}

#[derive(Serialize)]
struct SearchRow<'a> {
    #[serde(flatten)]
    report: &'a SearchReport,
    asserted: bool,
}

fn search_min_l(
    n: usize,
    k: u64,
    max_l: usize,
    method: Method,
    allow: bool,
    config: &SearchConfig,
) -> Result<Rendered, CliError> {
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let ring = RingSize::new(k)?;
    ring.require_set_capacity()?;
    require_power_of_two(ring, allow)?;
    if max_l == 0 || max_l > ring.two_k() as usize {
        return Err(CliError::usage(format!(
            "--max-l must lie in 1..=2K = {}, got {max_l}",
            ring.two_k()
        )));
    }
    let method = match method {
        Method::Exhaustive => SearchMethod::Exhaustive,
        Method::Profile => SearchMethod::ProfileDp,
    };
    let mut rows = Vec::with_capacity(max_l);
    for l in 1..=max_l {
        let clock = Instant::now();
        let report = search::search(n, ring, l, method, config)?;
        log::info!("search: N={n} K={k} L={l} -> {}", report.verdict);
        rows.push((report, clock.elapsed().as_secs_f64()));
    }
    let reports: Vec<SearchReport> = rows.iter().map(|r| r.0.clone()).collect();
    let min_l = minimal_feasible(&reports).map_err(|e| CliError {
        code: exit::CLAIM_FAILED,
        kind: "claim-failed",
        message: e.to_string(),
    })?;
    let mut contradicted = false;
    let mut unknown = false;
    let mut all_asserted = true;
    let json_rows: Vec<SearchRow> = reports
        .iter()
        .map(|r| {
            let proven = proven_verdict(n, ring, r.l);
            unknown |= r.verdict == SearchVerdict::Unknown;
            contradicted |= proven.is_some_and(|v| r.verdict != SearchVerdict::Unknown && r.verdict != v);
            all_asserted &= proven.is_some();
            SearchRow {
                report: r,
                asserted: proven.is_some(),
            }
        })
        .collect();
    let result = json!({
        "n": n,
        "k": k,
        "method": method,
        "min_l": min_l,
        "min_memory_bits": min_l.map(|l| (l as f64).log2()),
        "rows": json_rows,
    });
    let mut csv = Vec::new();
    search::write_csv(&rows, &mut csv)?;
    let status = if contradicted {
        exit::CLAIM_FAILED
    } else if unknown {
        exit::BUDGET
    } else {
        0
    };
    Ok(Rendered {
        asserted: all_asserted,
        result,
        csv,
        status,
    })
}

fn teleport(path: &Path, seed: u64, trials: usize) -> Result<Rendered, CliError> {
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let inst = DiscreteInstance::from_json(&read_text(path)?)?;
    let expected = inst.parity();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(trials);
    let mut csv_rows = Vec::with_capacity(trials);
    let mut all_correct = true;
    let mut min_fidelity = 1.0f64;
    for trial in 0..trials {
        let trial_seed = seeds.next_u64();
        let out = run_teleport_chain(&inst, trial_seed)?;
        let correct = out.parity == expected;
        all_correct &= correct;
        min_fidelity = min_fidelity.min(out.min_fidelity);
        let bits: Vec<String> = out
            .transcript
            .hops
            .iter()
            .map(|h| format!("{}{}", h.bits[0], h.bits[1]))
            .collect();
        csv_rows.push(vec![
            trial.to_string(),
            trial_seed.to_string(),
            out.parity.to_string(),
            correct.to_string(),
            bits.join(" "),
        ]);
        runs.push(json!({
            "seed": trial_seed,
            "parity": out.parity,
            "correct": correct,
            "transcript": out.transcript,
        }));
    }
    let hops = inst.n_parties() - 1;
    let result = json!({
        "expected": expected,
        "all_correct": all_correct,
        "hops": hops,
        "bits_per_hop": 2,
        "classical_bits_per_trial": 2 * hops,
        "min_fidelity": min_fidelity,
        "trials": runs,
    });
    Ok(Rendered {
        asserted: true,
        result,
        csv: csv_bytes(&["trial", "seed", "parity", "correct", "bits"], &csv_rows),
        status: if all_correct { 0 } else { exit::CLAIM_FAILED },
    })
}
