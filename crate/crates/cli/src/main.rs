//! seqspace: batch CLI over the seqspace-core library.
//!
//! stdout carries the JSON/CSV payload; stderr carries a short human log.
//! Exit codes: 0 success / assertion held, 2 assertion failure, 1 usage or
//! input error.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde_json::{json, Value};

use seqspace_core::json as sj;
use seqspace_core::limits::{
    axiom_residuals, dilation_averaged_estimate, estimate_limit, ratio_sequence, sandwich_check,
    symmetric_functional, EstimatorSpec, MultiplierSpec,
};
use seqspace_core::scalar::{parse_rat, Prec, Rat};
use seqspace_core::seq::Sequence;
use seqspace_core::spaces::{membership, norm, psi_axiom_report, PsiSpec};
use seqspace_core::verify::{run_suite, SuiteParams, SUITES};
use seqspace_core::witness::{
    garling_witness, oscillating_construct, oscillating_verify, renorm_contradiction,
    weighted_l1_witness,
};
use seqspace_core::{Coeff, Error, Result};

#[derive(Parser)]
#[command(name = "seqspace", version, about = "norms, rearrangements and approximate symmetric functionals on representable sequences")]
struct Cli {
    /// Working precision in decimal digits (>= 20). Overridden by the
    /// SEQSPACE_PRECISION environment variable.
    #[arg(long, global = true)]
    precision: Option<u32>,

    /// Plain-text key=value config file (keys: precision, seed, format).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output format for the payload stream.
    #[arg(long, global = true, value_parser = ["json", "table", "csv"])]
    format: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Norm of a sequence in a space (or a membership verdict).
    Norm {
        /// Space: lp:P, linf, garling, wl1, marcinkiewicz:log2|loge|log:B.
        #[arg(long)]
        space: String,
        #[command(flatten)]
        seq: SeqArg,
        /// Report membership instead of failing on divergence.
        #[arg(long)]
        membership: bool,
    },
    /// Decreasing rearrangement of |x|.
    Rearrange {
        #[command(flatten)]
        seq: SeqArg,
        /// Also list the first N rearranged values.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Closing up: nonzero terms in original order.
    Closeup {
        #[command(flatten)]
        seq: SeqArg,
    },
    /// Pull back through an index map: y_n = x_{pi(n)}.
    Apply {
        #[command(flatten)]
        seq: SeqArg,
        /// dilation2 | evens-to-all | odds-to-all | interleave-with-zeros,
        /// or JSON {"shift":k} / {"permutation":[..]} / {"injection":[..]}.
        #[arg(long)]
        map: String,
    },
    /// Rearranged partial sums s_n, optionally as a s_n/Psi(n) trajectory.
    Sums {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long, default_value_t = 64)]
        n: u64,
        /// With a Psi spec, include the ratio trajectory (use --format csv
        /// for a plottable export).
        #[arg(long)]
        psi: Option<String>,
    },
    /// Banach-limit style estimate of a sequence.
    Limit {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long, value_parser = ["cesaro", "iterated", "dilation"], default_value = "cesaro")]
        method: String,
        #[arg(long, default_value_t = 10_000)]
        window: u64,
        #[arg(long, default_value_t = 0)]
        offset: u64,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, default_value_t = 8)]
        stages: u32,
        /// Also report Banach-limit axiom residuals.
        #[arg(long)]
        axioms: bool,
        /// Multiplier for the product rule: a sequence spec, or the name
        /// one-plus-harmonic for a_n = 1 + 1/n.
        #[arg(long)]
        multiplier: Option<String>,
    },
    /// Approximate symmetric functional gamma(x) on m_Psi.
    Gamma {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long, default_value = "loge")]
        psi: String,
        #[arg(long, default_value_t = 1_000_000)]
        window: u64,
    },
    /// Check s_n(x+y) <= s_n(x) + s_n(y) <= s_2n(x+y) for nonnegative x, y.
    Sandwich {
        /// First sequence (file or inline JSON).
        #[arg(long)]
        x: String,
        /// Second sequence (file or inline JSON).
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Construct and check the built-in counterexample witnesses.
    Witness {
        #[command(subcommand)]
        which: WitnessCmd,
    },
    /// Run a seeded verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 64)]
        n: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        psi: Option<String>,
    },
    /// Axiom report for a Psi spec: Psi(1), monotonicity, decay, doubling.
    PsiReport {
        #[arg(long, default_value = "log2")]
        psi: String,
        #[arg(long, default_value_t = 1 << 20)]
        n_max: u64,
    },
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// Weighted-l1 asymmetry: ||e_1|| = 1/2 != 1 = ||e_n||.
    Wl1 {
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// The renorming of l_infinity by sup + |gamma| is not symmetric.
    Renorm,
    /// Garling-space asymmetry at length m: ||x^m|| = H_m != ||y^m||.
    Garling {
        #[arg(long, default_value_t = 4)]
        m: u64,
    },
    /// Oscillating member of m_Psi whose ratio s_n/Psi(n) does not converge.
    Oscillate {
        #[arg(long, default_value_t = 5)]
        stages: u32,
        /// Extra sampled candidates per block in the independent recheck.
        #[arg(long, default_value_t = 8)]
        depth: u64,
    },
}

#[derive(Args)]
struct SeqArg {
    /// Sequence spec: a file path, inline JSON, or - for stdin.
    #[arg(long)]
    seq: String,
}

struct Config {
    prec: Prec,
    seed: u64,
    format: String,
}

fn usage_err(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut precision: Option<u32> = None;
    let mut seed: u64 = 1;
    let mut format: Option<String> = None;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage_err(format!("cannot read config {path}: {e}")))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage_err(format!("{path}:{}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "precision" => {
                    precision = Some(v.parse().map_err(|_| {
                        usage_err(format!("{path}:{}: precision must be an integer", lineno + 1))
                    })?)
                }
                "seed" => {
                    seed = v.parse().map_err(|_| {
                        usage_err(format!("{path}:{}: seed must be an integer", lineno + 1))
                    })?
                }
                "format" => format = Some(v.to_string()),
                other => return Err(usage_err(format!("{path}: unknown config key '{other}'"))),
            }
        }
    }
    if let Some(p) = cli.precision {
        precision = Some(p);
    }
    if let Ok(env) = std::env::var("SEQSPACE_PRECISION") {
        precision = Some(
            env.parse()
                .map_err(|_| usage_err("SEQSPACE_PRECISION must be an integer"))?,
        );
    }
    let p = precision.unwrap_or(50);
    if p < 20 {
        return Err(usage_err("precision must be at least 20 digits"));
    }
    let format = cli.format.clone().or(format).unwrap_or_else(|| "json".into());
    if !matches!(format.as_str(), "json" | "table" | "csv") {
        return Err(usage_err("format must be json, table or csv"));
    }
    Ok(Config { prec: Prec(p), seed, format })
}

fn load_seq(spec: &str) -> Result<Sequence<Rat>> {
    let text = if spec == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| usage_err(format!("cannot read stdin: {e}")))?;
        buf
    } else if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| usage_err(format!("cannot read sequence file {spec}: {e}")))?
    };
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| usage_err(format!("malformed sequence JSON: {e}")))?;
    sj::parse_sequence(&value)
}

fn load_json(spec: &str) -> Result<Value> {
    let text = if spec.trim_start().starts_with(['{', '[', '"']) {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| usage_err(format!("cannot read file {spec}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage_err(format!("malformed JSON: {e}")))
}

/// Render the payload: compact JSON by default, an aligned key: value
/// listing for --format table.
fn render(cfg: &Config, payload: &Value) -> String {
    if cfg.format == "table" {
        if let Value::Object(m) = payload {
            let mut out = String::new();
            for (k, v) in m {
                if k == "schema" {
                    continue;
                }
                out.push_str(&format!("{k:<24} {v}\n"));
            }
            return out;
        }
    }
    serde_json::to_string_pretty(payload).expect("serializable payload")
}

fn run(cli: &Cli, cfg: &Config) -> Result<ExitCode> {
    let prec = cfg.prec;
    match &cli.cmd {
        Cmd::Norm { space, seq, membership: want_membership } => {
            let space = sj::parse_space_shorthand(space)?;
            let x = load_seq(&seq.seq)?;
            let payload = if *want_membership {
                sj::emit_membership(&membership(&space, &x, prec)?)
            } else {
                sj::emit_norm(&norm(&space, &x, prec)?)
            };
            eprintln!("norm: space {} at precision {}", space.id(), prec.0);
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Rearrange { seq, n } => {
            let x = load_seq(&seq.seq)?;
            let r = x.decreasing_rearrangement()?;
            let mut payload = json!({
                "schema": sj::SCHEMA,
                "rearranged": sj::emit_sequence(&r),
            });
            if let Some(n) = n {
                let prefix: Vec<String> = (1..=*n)
                    .map(|i| seqspace_core::scalar::format_rat(&r.value_at(i)))
                    .collect();
                payload["prefix"] = json!(prefix);
            }
            eprintln!("rearrange: done");
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Closeup { seq } => {
            let x = load_seq(&seq.seq)?;
            let c = x.closing_up()?;
            let payload = json!({"schema": sj::SCHEMA, "closed_up": sj::emit_sequence(&c)});
            eprintln!("closeup: done");
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Apply { seq, map } => {
            let x = load_seq(&seq.seq)?;
            let spec = sj::parse_injection(&if map.trim_start().starts_with('{') {
                load_json(map)?
            } else {
                Value::String(map.clone())
            })?;
            let y = x.apply_map(&spec)?;
            let payload = json!({"schema": sj::SCHEMA, "result": sj::emit_sequence(&y)});
            eprintln!("apply: done");
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sums { seq, n, psi } => {
            let x = load_seq(&seq.seq)?;
            let sums = x.decreasing_rearrangement()?.partial_sums(*n)?;
            if let Some(psi) = psi {
                let psi = sj::parse_psi_shorthand(psi)?;
                let ratios = ratio_sequence(&psi, &x, *n, prec)?;
                let mut rows = Vec::with_capacity(*n as usize);
                for (i, r) in ratios.iter().enumerate() {
                    let nn = i as u64 + 1;
                    let p = psi.eval(&BigUint::from(nn), prec)?;
                    rows.push((nn, sums[i].to_interval(), p, r.clone()));
                }
                if cfg.format == "csv" {
                    eprintln!("sums: trajectory of {} rows", rows.len());
                    print!("{}", sj::ratio_csv(&rows));
                    return Ok(ExitCode::SUCCESS);
                }
                let traj: Vec<Value> = rows
                    .iter()
                    .map(|(nn, s, p, r)| {
                        json!({
                            "n": nn,
                            "s_n": sj::interval_json(s),
                            "psi_n": sj::interval_json(p),
                            "ratio": sj::interval_json(r),
                        })
                    })
                    .collect();
                let payload = json!({"schema": sj::SCHEMA, "psi": sj::emit_psi(&psi), "trajectory": traj});
                eprintln!("sums: trajectory of {} rows", traj.len());
                println!("{}", render(cfg, &payload));
                return Ok(ExitCode::SUCCESS);
            }
            let sums_s: Vec<String> =
                sums.iter().map(seqspace_core::scalar::format_rat).collect();
            let payload = json!({"schema": sj::SCHEMA, "partial_sums": sums_s});
            eprintln!("sums: {} values", sums_s.len());
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Limit { seq, method, window, offset, depth, stages, axioms, multiplier } => {
            let x = load_seq(&seq.seq)?;
            let est = match method.as_str() {
                "cesaro" => EstimatorSpec::Cesaro { window: *window, offset: *offset },
                "iterated" => EstimatorSpec::IteratedCesaro { depth: *depth, window: *window },
                "dilation" => EstimatorSpec::DilationAveraged { stages: *stages, window: *window },
                _ => unreachable!("clap value_parser"),
            };
            let e = if let EstimatorSpec::DilationAveraged { stages, window } = est {
                dilation_averaged_estimate(stages, window, &x, prec)?
            } else {
                estimate_limit(&est, &x, prec)?
            };
            let mut payload = sj::emit_limit(&e);
            if *axioms {
                let m = match multiplier.as_deref() {
                    None => None,
                    Some("one-plus-harmonic") => Some(MultiplierSpec::ConstantPlusHarmonic {
                        constant: parse_rat("1")?,
                        coeff: parse_rat("1")?,
                        offset: 0,
                    }),
                    Some(other) => Some(MultiplierSpec::Sequence(load_seq(other)?)),
                };
                payload["axiom_residuals"] = sj::emit_axiom_report(&axiom_residuals(
                    &est,
                    &x,
                    m.as_ref(),
                    prec,
                )?);
            }
            eprintln!("limit: method {} window {}", est.id(), est.window());
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gamma { seq, psi, window } => {
            let x = load_seq(&seq.seq)?;
            let psi = sj::parse_psi_shorthand(psi)?;
            let est = EstimatorSpec::Cesaro { window: *window, offset: 0 };
            let e = symmetric_functional(&psi, &est, &x, prec)?;
            let mut payload = sj::emit_limit(&e);
            payload["psi"] = sj::emit_psi(&psi);
            eprintln!("gamma: window {window} at precision {}", prec.0);
            println!("{}", render(cfg, &payload));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sandwich { x, y, n } => {
            let xs = load_seq(x)?;
            let ys = load_seq(y)?;
            let rep = sandwich_check(&xs, &ys, *n)?;
            let payload = sj::emit_sandwich(&rep);
            eprintln!("sandwich: {} checks, {} violations", rep.n_checked, rep.violations);
            println!("{}", render(cfg, &payload));
            Ok(if rep.holds { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Witness { which } => run_witness(which, cfg),
        Cmd::Verify { suite, trials, n, seed, space, psi } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(usage_err(format!(
                    "unknown suite '{suite}'; available: {}",
                    SUITES.join(", ")
                )));
            }
            let params = SuiteParams {
                trials: *trials,
                n: *n,
                seed: seed.unwrap_or(cfg.seed),
                space: space.as_deref().map(sj::parse_space_shorthand).transpose()?,
                psi: psi.as_deref().map(sj::parse_psi_shorthand).transpose()?,
                prec,
            };
            let rep = run_suite(suite, &params)?;
            let mut payload = sj::emit_verification_report(&rep);
            payload["seed"] = json!(params.seed);
            eprintln!(
                "verify: suite {suite} ({} trials, seed {}, {} ms): {}",
                rep.trials,
                params.seed,
                rep.millis,
                if rep.passed { "passed" } else { "FAILED" }
            );
            println!("{}", render(cfg, &payload));
            Ok(if rep.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::PsiReport { psi, n_max } => {
            let psi = sj::parse_psi_shorthand(psi)?;
            let rep = psi_axiom_report(&psi, *n_max, prec)?;
            let ok = rep.monotone_certified && rep.tends_to_infinity;
            let payload = sj::emit_psi_report(&rep);
            eprintln!("psi-report: {} up to n = {n_max}", psi.id());
            println!("{}", render(cfg, &payload));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn run_witness(which: &WitnessCmd, cfg: &Config) -> Result<ExitCode> {
    let prec = cfg.prec;
    match which {
        WitnessCmd::Wl1 { trials, seed } => {
            let seed = seed.unwrap_or(cfg.seed);
            let rep = weighted_l1_witness(*trials, seed, prec)?;
            let ok = rep.norms_differ && rep.swap_membership_ok;
            let mut payload = sj::emit_wl1_report(&rep);
            payload["seed"] = json!(seed);
            eprintln!("witness wl1: norms differ = {}", rep.norms_differ);
            println!("{}", render(cfg, &payload));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        WitnessCmd::Renorm => {
            let rep = renorm_contradiction()?;
            // the witness stands exactly when the symmetric-norm assumption
            // is contradicted
            let ok = rep.splitting_verified && !rep.consistent;
            let payload = sj::emit_renorm_report(&rep);
            eprintln!("witness renorm: contradiction exhibited = {ok}");
            println!("{}", render(cfg, &payload));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        WitnessCmd::Garling { m } => {
            let w = garling_witness(*m, prec)?;
            let ok = w.norm_x_matches && w.upper_holds && w.distinct;
            let payload = sj::emit_garling_witness(&w);
            eprintln!("witness garling: m = {m}, distinct = {}", w.distinct);
            println!("{}", render(cfg, &payload));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        WitnessCmd::Oscillate { stages, depth } => {
            let w = oscillating_construct(*stages, &PsiSpec::log_e(), prec)?;
            let rep = oscillating_verify(&w, *depth, prec)?;
            let mut payload = sj::emit_oscillation_witness(&w);
            payload["verification"] = sj::emit_oscillation_report(&rep);
            eprintln!(
                "witness oscillate: {stages} stages, recheck ok = {}, gap >= {}",
                rep.ok,
                seqspace_core::scalar::format_rat_directed(&rep.oscillation_gap, 6, false)
            );
            println!("{}", render(cfg, &payload));
            Ok(if rep.ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are success paths; anything else is a usage error
            let code = if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
