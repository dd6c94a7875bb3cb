use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use flagprep::assembly::{assemble_ft_circuit, schedule_circuit, AssemblyOptions, GadgetPolicy, ScheduleObjective};
use flagprep::catalog;
use flagprep::circuit::Circuit;
use flagprep::css::{CssState, StateLabel};
use flagprep::decoder::{build_ml_lut, build_mw_lut, evaluate_test_set, DecodePolicy};
use flagprep::gadget::{discover_gadget, discover_minimal, GadgetError, GadgetLibrary, SearchBudget};
use flagprep::io;
use flagprep::noise::{build_subset_plan, count_fault_locations, run_monte_carlo, FrameSimulator};
use flagprep::pauli::ErrorType;
use flagprep::steane_qec::{run_steane_qec_experiment, PrepMode, SteaneExperimentConfig};
use flagprep::synth::best_of_trials;
use flagprep::verify::{verify_with_cap, Verdict, DEFAULT_COMBINATION_CAP};

#[derive(Parser)]
#[command(name = "flagprep", version, about = "Fault-tolerant preparation of CSS code states with flag gadgets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Catalog code name (see `flagprep codes`).
    #[arg(long)]
    code: Option<String>,
    /// JSON code description, instead of a catalog name.
    #[arg(long)]
    code_file: Option<PathBuf>,
    /// Logical state: zero or plus. Defaults to the code's own default.
    #[arg(long)]
    state: Option<StateLabel>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    MinQubits,
    MinDepth,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    X,
    Z,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the built-in codes.
    Codes,
    /// Synthesize a non-FT bipartite preparation circuit.
    Synth {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a flag gadget with the fewest flags (or exactly --m flags).
    Gadget {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        m: Option<usize>,
        /// Node budget for the search.
        #[arg(long, default_value_t = 2_000_000_000)]
        budget: u64,
        #[arg(long, value_enum, default_value = "x")]
        r#type: TypeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a flag-protected preparation circuit.
    Assemble {
        #[command(flatten)]
        code: CodeArgs,
        /// Faults to protect against; defaults to the code's t.
        #[arg(long)]
        t: Option<usize>,
        /// Protect Z errors against only this many faults (needs a coset certificate).
        #[arg(long)]
        z_override: Option<usize>,
        #[arg(long)]
        x_override: Option<usize>,
        /// Leave Z errors unprotected.
        #[arg(long)]
        no_z_gadgets: bool,
        /// Leave X errors unprotected.
        #[arg(long)]
        no_x_gadgets: bool,
        #[arg(long, default_value_t = 200)]
        retries: usize,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Gate-order shuffles for scheduling; 0 keeps the assembled order.
        #[arg(long, default_value_t = 0)]
        shuffles: usize,
        #[arg(long, value_enum, default_value = "min-qubits")]
        objective: Objective,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively check a circuit for fault tolerance.
    Verify {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        r#type: TypeArg,
        /// Refuse runs with more fault combinations than this.
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Circuit-level noise simulation with subset sampling.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        shards: u64,
        /// Output prefix: writes <out>.train.bin, <out>.test.bin and <out>.json.
        #[arg(long)]
        out: PathBuf,
        /// Also export the test outcomes as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Train look-up tables on one outcome file and evaluate on another.
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Discard syndromes whose lightest explanation has weight d/2.
        #[arg(long)]
        even_discard: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the trained most-likely table as JSON.
        #[arg(long)]
        lut_out: Option<PathBuf>,
    },
    /// Build the minimum-weight look-up table.
    LutMw {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        wmax: Option<usize>,
        #[arg(long, value_enum)]
        r#type: Option<TypeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steane error correction with flag-prepared resource states.
    Steane {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "full_ft,ft_x_only,no_qec")]
        mode: Vec<PrepMode>,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        /// Data noise rate as a multiple of p.
        #[arg(long, default_value_t = 10.0)]
        data_noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_state(args: &CodeArgs, fallback_name: Option<&str>, fallback_label: Option<StateLabel>) -> Result<CssState> {
    let label = args.state.or(fallback_label);
    if let Some(path) = &args.code_file {
        return io::read_code_file(path, label).with_context(|| format!("reading {}", path.display()));
    }
    let name = args.code.as_deref().or(fallback_name).context("pass --code or --code-file")?;
    let entry = catalog::entry(name)?;
    Ok(entry.to_state(label.unwrap_or_else(|| entry.default_label()))?)
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_circuit(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn types(t: TypeArg) -> Vec<ErrorType> {
    match t {
        TypeArg::X => vec![ErrorType::X],
        TypeArg::Z => vec![ErrorType::Z],
        TypeArg::Both => vec![ErrorType::X, ErrorType::Z],
    }
}

fn policy(over: Option<usize>) -> GadgetPolicy {
    over.map_or(GadgetPolicy::Auto, GadgetPolicy::Override)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Codes => {
            for e in catalog::entries() {
                println!("{:<14} [[{},{},{}]]  {}", e.name, e.n, e.k, e.d, e.description);
            }
        }
        Cmd::Synth { code, trials, seed, out } => {
            let state = load_state(&code, None, None)?;
            let bip = best_of_trials(&state, trials, seed)?;
            let c = bip.to_circuit(&state);
            println!(
                "{} |{}>: {} CX, {} controls, {} targets, max degree {}",
                state.name,
                state.label,
                bip.edge_count(),
                bip.controls.len(),
                bip.targets.len(),
                bip.max_degree()
            );
            write_out(&out, &io::write_circuit(&c))?;
        }
        Cmd::Gadget { t, r, m, budget, r#type, out } => {
            let budget = SearchBudget::nodes(budget);
            let found = match m {
                Some(m) => discover_gadget(t, r, m, budget).map(|g| (g, None)),
                None => discover_minimal(t, r, budget, r).map(|e| (e.gadget, Some(e.optimal))),
            };
            let (mut g, optimal) = match found {
                Ok(x) => x,
                Err(e @ GadgetError::SearchExhausted { .. }) => {
                    println!("{e}");
                    return Ok(ExitCode::from(1));
                }
                Err(e) => return Err(e.into()),
            };
            if matches!(r#type, TypeArg::Z) {
                g = g.conjugated();
            }
            let note = match optimal {
                Some(true) => " (minimal)",
                Some(false) => " (not proven minimal)",
                None => "",
            };
            println!("{} flags, {} CX{note}", g.m, g.cx_count());
            write_out(&out, &io::write_gadget(&g))?;
        }
        Cmd::Assemble {
            code,
            t,
            z_override,
            x_override,
            no_z_gadgets,
            no_x_gadgets,
            retries,
            trials,
            seed,
            shuffles,
            objective,
            out,
        } => {
            let state = load_state(&code, None, None)?;
            let bip = best_of_trials(&state, trials, seed)?;
            let mut lib = GadgetLibrary::new(SearchBudget::default());
            let opts = AssemblyOptions {
                t,
                x_policy: if no_x_gadgets { GadgetPolicy::Off } else { policy(x_override) },
                z_policy: if no_z_gadgets { GadgetPolicy::Off } else { policy(z_override) },
                retries,
                seed,
            };
            let a = assemble_ft_circuit(&state, &bip, &mut lib, &opts)?;
            let c = if shuffles > 0 {
                let obj = match objective {
                    Objective::MinQubits => ScheduleObjective::MinMaxQubits,
                    Objective::MinDepth => ScheduleObjective::MinDepth,
                };
                schedule_circuit(&a, obj, shuffles, seed)
            } else {
                a.circuit.clone()
            };
            let m = c.metrics();
            println!(
                "{} |{}>: {} CX, {} flags, {} qubits at once, depth {} (t_x={}, t_z={})",
                state.name, state.label, m.cx_count, m.flags, m.max_simultaneous_qubits, m.depth, a.t_x, a.t_z
            );
            write_out(&out, &io::write_circuit(&c))?;
        }
        Cmd::Verify { circuit, code, t, r#type, cap, out } => {
            let c = read_circuit(&circuit)?;
            let state = load_state(&code, Some(&c.code), Some(c.label))?;
            let t = t.unwrap_or(state.t());
            let cap = cap.map_or(DEFAULT_COMBINATION_CAP, |x| x as u128);
            let mut failed = false;
            let mut report = Vec::new();
            for kind in types(r#type) {
                match verify_with_cap(&c, &state, t, kind, cap)? {
                    Verdict::Pass => {
                        println!("{kind}: pass (t={t})");
                        report.push(json!({"type": kind.to_string(), "t": t, "pass": true}));
                    }
                    Verdict::Counterexample(ce) => {
                        failed = true;
                        println!("{kind}: FAIL (t={t})\n{ce}");
                        report.push(json!({"type": kind.to_string(), "t": t, "pass": false,
                            "counterexample": ce.to_string()}));
                    }
                }
            }
            write_out(&out, &serde_json::to_string_pretty(&report)?)?;
            if failed {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Simulate { circuit, code, p, samples, seed, shards, out, csv } => {
            let c = read_circuit(&circuit)?;
            let state = load_state(&code, Some(&c.code), Some(c.label))?;
            let sim = FrameSimulator::new(&c, &state)?;
            let (lp, lq) = count_fault_locations(&c);
            let plan = build_subset_plan(lp, lq, p, samples)?;
            let r = run_monte_carlo(&sim, &plan, seed, shards);
            let sb = sim.syndrome_bits;
            let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", out.display()));
            for (h, ext) in [(&r.train, "train.bin"), (&r.test, "test.bin")] {
                let f = fs::File::create(with_ext(ext))?;
                io::write_outcomes(&mut BufWriter::new(f), h, sb)?;
            }
            if csv {
                fs::write(with_ext("test.csv"), io::outcomes_csv(&r.test, sb))?;
            }
            let (lo, hi) = r.acceptance_interval();
            let summary = json!({
                "code": state.name, "state": state.label.to_string(), "p": p, "samples": samples, "seed": seed,
                "l_p": lp, "l_q": lq, "effective_samples": r.effective_samples(),
                "acceptance": r.acceptance_rate(), "acceptance_ci": [lo, hi],
                "syndrome_bits": sb, "decoding_type": state.decoding_type().to_string(),
            });
            fs::write(with_ext("json"), serde_json::to_string_pretty(&summary)?)?;
            println!(
                "{} at p={p}: {} locations ({lp} gate, {lq} idle), {:.3e} effective samples, acceptance {:.5} [{lo:.5}, {hi:.5}]",
                state.name,
                lp + lq,
                r.effective_samples(),
                r.acceptance_rate()
            );
        }
        Cmd::Decode { code, train, test, even_discard, out, lut_out } => {
            let state = load_state(&code, None, None)?;
            let read = |p: &Path| -> Result<_> {
                let f = fs::File::open(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(io::read_outcomes(&mut std::io::BufReader::new(f))?)
            };
            let (train_h, sb) = read(&train)?;
            let (test_h, sb2) = read(&test)?;
            if sb != sb2 || sb != state.num_syndrome_bits(state.decoding_type()) {
                bail!("outcome files do not match the code's syndrome size");
            }
            let ml = build_ml_lut(&train_h, sb);
            let mw = build_mw_lut(&state, state.decoding_type(), state.t())?;
            let pol = DecodePolicy { even_distance_discard: even_discard, t: state.d / 2 };
            let ev = evaluate_test_set(&test_h, sb, &ml, &mw, &pol);
            let (lo, hi) = ev.logical_error_interval();
            println!(
                "{}: logical error rate {:.3e} [{lo:.3e}, {hi:.3e}], post-discard {:.5}, ML table {} syndromes",
                state.name,
                ev.logical_error_rate(),
                ev.post_discard_rate(),
                ml.len()
            );
            let summary = json!({
                "code": state.name, "logical_error_rate": ev.logical_error_rate(),
                "logical_error_ci": [lo, hi], "post_discard_rate": ev.post_discard_rate(),
                "ml_entries": ml.len(), "mw_entries": mw.entries.len(), "evaluation": ev,
            });
            write_out(&out, &serde_json::to_string_pretty(&summary)?)?;
            write_out(&lut_out, &io::ml_to_json(&ml))?;
        }
        Cmd::LutMw { code, wmax, r#type, out } => {
            let state = load_state(&code, None, None)?;
            let kind = match r#type {
                None | Some(TypeArg::Both) => state.decoding_type(),
                Some(TypeArg::X) => ErrorType::X,
                Some(TypeArg::Z) => ErrorType::Z,
            };
            let mw = build_mw_lut(&state, kind, wmax.unwrap_or(state.t()))?;
            println!("{} {kind}: {} syndromes, {} conflicts", state.name, mw.entries.len(), mw.conflicts);
            write_out(&out, &io::mw_to_json(&mw))?;
        }
        Cmd::Steane { code, p, mode, samples, seed, trials, data_noise, out } => {
            let state = load_state(&code, None, Some(StateLabel::Zero))?;
            let zero = CssState { label: StateLabel::Zero, ..state.clone() };
            let bip = best_of_trials(&zero, trials, seed)?;
            let mut lib = GadgetLibrary::new(SearchBudget::default());
            let mut rows = Vec::new();
            for m in &mode {
                let resource = match m {
                    PrepMode::NoQec => None,
                    PrepMode::FullFt => Some(AssemblyOptions { seed, ..Default::default() }),
                    PrepMode::FtXOnly => Some(AssemblyOptions { seed, z_policy: GadgetPolicy::Off, ..Default::default() }),
                }
                .map(|o| assemble_ft_circuit(&zero, &bip, &mut lib, &o).map(|a| a.circuit))
                .transpose()?;
                for &pi in &p {
                    let mut cfg = SteaneExperimentConfig::new(pi, samples, *m, seed);
                    cfg.data_noise_multiplier = data_noise;
                    let r = run_steane_qec_experiment(&zero, resource.as_ref(), &cfg)?;
                    let (lo, hi) = r.interval();
                    println!(
                        "{} {m} p={pi}: logical error rate {:.3e} [{lo:.3e}, {hi:.3e}], resource acceptance {:.4}",
                        state.name,
                        r.logical_error_rate(),
                        r.acceptance()
                    );
                    rows.push(vec![
                        state.name.clone(),
                        pi.to_string(),
                        m.to_string(),
                        samples.to_string(),
                        r.failures.to_string(),
                        r.logical_error_rate().to_string(),
                        lo.to_string(),
                        hi.to_string(),
                        r.acceptance().to_string(),
                    ]);
                }
            }
            let header = ["code", "p", "mode", "samples", "failures", "rate", "ci_low", "ci_high", "acceptance"];
            write_out(&out, &io::csv(&header, &rows))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("FLAGPREP_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
