//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to the
//! real stdout (bypassing the test harness capture) and then asserts.
//!
//! Run with `cargo test --release -p flagprep --test acceptance`.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flagprep::assembly::{
    assemble_ft_circuit, schedule_circuit, AssembledCircuit, AssemblyOptions, GadgetPolicy, ScheduleObjective,
};
use flagprep::catalog;
use flagprep::circuit::Circuit;
use flagprep::css::{max_coset_weight, CssState, StateLabel};
use flagprep::decoder::{build_ml_lut, build_mw_lut, decode_error, evaluate_test_set, DecodePolicy};
use flagprep::gadget::{discover_gadget, GadgetError, GadgetLibrary, SearchBudget};
use flagprep::noise::{
    build_subset_plan, count_fault_locations, frame_prediction, run_monte_carlo, tableau_reference, FrameSimulator,
    DEFAULT_SHARDS,
};
use flagprep::pauli::ErrorType;
use flagprep::steane_qec::{run_steane_qec_experiment, PrepMode, SteaneExperimentConfig};
use flagprep::synth::best_of_trials;
use flagprep::verify::{verify_fault_tolerance, Verdict};

struct Report {
    n: usize,
    title: &'static str,
    lines: Vec<(bool, String)>,
}

impl Report {
    fn new(n: usize, title: &'static str) -> Self {
        Report { n, title, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.lines.push((ok, detail.into()));
    }

    fn finish(self) {
        let ok = self.lines.iter().all(|l| l.0);
        let mut out = std::io::stdout().lock();
        let details: Vec<String> =
            self.lines.iter().map(|(ok, d)| format!("{}{d}", if *ok { "" } else { "[x] " })).collect();
        writeln!(out, "criterion {:>2} {}: {} ({})", self.n, if ok { "PASS" } else { "FAIL" }, self.title, details.join("; "))
            .unwrap();
        out.flush().unwrap();
        assert!(ok, "criterion {} failed: {:?}", self.n, self.lines);
    }
}

fn assembled(state: &CssState, opts: &AssemblyOptions) -> AssembledCircuit {
    let bip = best_of_trials(state, 64, 0).unwrap();
    let mut lib = GadgetLibrary::new(SearchBudget::default());
    assemble_ft_circuit(state, &bip, &mut lib, opts).unwrap()
}

fn scheduled(name: &str) -> (CssState, Circuit) {
    let s = catalog::default_state(name).unwrap();
    let a = assembled(&s, &AssemblyOptions::default());
    (s, schedule_circuit(&a, ScheduleObjective::MinMaxQubits, 1000, 0))
}

struct Rates {
    acceptance: f64,
    acceptance_ci: (f64, f64),
    ler: f64,
    ler_ci: (f64, f64),
    effective: f64,
}

fn simulate(s: &CssState, c: &Circuit, p: f64, samples: u64, seed: u64) -> Rates {
    let sim = FrameSimulator::new(c, s).unwrap();
    let (lp, lq) = count_fault_locations(c);
    let plan = build_subset_plan(lp, lq, p, samples).unwrap();
    let r = run_monte_carlo(&sim, &plan, seed, DEFAULT_SHARDS);
    let kind = s.decoding_type();
    let sb = s.num_syndrome_bits(kind);
    let ml = build_ml_lut(&r.train, sb);
    let mw = build_mw_lut(s, kind, s.t()).unwrap();
    let ev = evaluate_test_set(&r.test, sb, &ml, &mw, &DecodePolicy::default());
    Rates {
        acceptance: r.acceptance_rate(),
        acceptance_ci: r.acceptance_interval(),
        ler: ev.logical_error_rate(),
        ler_ci: ev.logical_error_interval(),
        effective: r.effective_samples(),
    }
}

/// Least-squares slope of ln(y) against ln(x).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Minimal flag count with a SearchExhausted certificate one below.
fn certified_flags(t: usize, r: usize) -> Result<(usize, bool), GadgetError> {
    for m in 0..=r {
        match discover_gadget(t, r, m, SearchBudget::unlimited()) {
            Ok(g) => {
                let certified = m == 0
                    || matches!(discover_gadget(t, r, m - 1, SearchBudget::unlimited()), Err(GadgetError::SearchExhausted { .. }));
                return Ok((g.m, certified));
            }
            Err(GadgetError::SearchExhausted { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("r flags always suffice")
}

fn gadget_row(n: usize, title: &'static str, t: usize, expected: &[usize], limit: Duration) {
    let mut rep = Report::new(n, title);
    let start = Instant::now();
    for (i, &want) in expected.iter().enumerate() {
        let r = i + 1;
        match certified_flags(t, r) {
            Ok((m, certified)) => {
                let detail = if m == want {
                    format!("r={r}: {m}")
                } else {
                    format!("r={r}: {m} flags, table lists {want}")
                };
                rep.check(m == want && certified, detail);
            }
            Err(e) => rep.check(false, format!("r={r}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    rep.check(elapsed <= limit, format!("{elapsed:.1?} of {limit:?}"));
    rep.finish();
}

#[test]
fn criterion_01_gadget_flags_t2() {
    let table = [1, 1, 1, 1, 2, 3, 3, 3, 3, 3, 3, 4, 4];
    gadget_row(1, "t=2 flag counts, 1 to 13 targets", 2, &table, Duration::from_secs(600));
}

#[test]
fn criterion_02_gadget_flags_t3() {
    let table = [1, 1, 1, 1, 2, 3, 4, 4];
    gadget_row(2, "t=3 flag counts, 1 to 8 targets", 3, &table, Duration::from_secs(7200));
}

fn verdict_faults(v: &Verdict) -> Option<usize> {
    match v {
        Verdict::Pass => None,
        Verdict::Counterexample(c) => Some(c.faults.len()),
    }
}

#[test]
fn criterion_03_exhaustive_verification() {
    let mut rep = Report::new(3, "exhaustive FT verification");
    let steane = catalog::state("steane", StateLabel::Zero).unwrap();
    let start = Instant::now();
    let c = assembled(&steane, &AssemblyOptions::default()).circuit;
    for kind in [ErrorType::X, ErrorType::Z] {
        let v = verify_fault_tolerance(&c, &steane, 1, kind).unwrap();
        rep.check(v.is_pass(), format!("Steane t=1 {kind} {}", if v.is_pass() { "passes" } else { "fails" }));
    }
    let el = start.elapsed();
    rep.check(el < Duration::from_secs(60), format!("Steane in {el:.1?}"));

    let color = catalog::state("color_17", StateLabel::Zero).unwrap();
    let start = Instant::now();
    let c = assembled(&color, &AssemblyOptions::default()).circuit;
    for kind in [ErrorType::X, ErrorType::Z] {
        let v = verify_fault_tolerance(&c, &color, 2, kind).unwrap();
        rep.check(v.is_pass(), format!("[[17,1,5]] t=2 {kind} {}", if v.is_pass() { "passes" } else { "fails" }));
    }
    rep.check(start.elapsed() < Duration::from_secs(4 * 3600), format!("[[17,1,5]] in {:.1?}", start.elapsed()));

    let bare = AssemblyOptions { x_policy: GadgetPolicy::Off, z_policy: GadgetPolicy::Off, ..Default::default() };
    let c = assembled(&steane, &bare).circuit;
    let f = verdict_faults(&verify_fault_tolerance(&c, &steane, 1, ErrorType::X).unwrap());
    rep.check(f == Some(1), format!("stripped Steane X counterexample with {f:?} faults"));
    let c = assembled(&color, &bare).circuit;
    for kind in [ErrorType::X, ErrorType::Z] {
        let f = verdict_faults(&verify_fault_tolerance(&c, &color, 1, kind).unwrap());
        rep.check(f == Some(1), format!("stripped [[17,1,5]] {kind} counterexample with {f:?} faults"));
    }
    rep.finish();
}

#[test]
fn criterion_04_steane_table_row() {
    let mut rep = Report::new(4, "Steane at p=1e-3");
    let start = Instant::now();
    let (s, c) = scheduled("steane");
    let r = simulate(&s, &c, 1e-3, 4_000_000, 11);
    rep.check(r.effective >= 1e8, format!("{:.2e} effective samples", r.effective));
    rep.check(
        (0.975..=0.981).contains(&r.acceptance),
        format!("acceptance {:.5} [{:.5}, {:.5}], band [0.975, 0.981]", r.acceptance, r.acceptance_ci.0, r.acceptance_ci.1),
    );
    rep.check(
        (1.8e-5..=4.4e-5).contains(&r.ler),
        format!("logical error rate {:.2e} [{:.2e}, {:.2e}], band [1.8e-5, 4.4e-5]", r.ler, r.ler_ci.0, r.ler_ci.1),
    );
    rep.check(start.elapsed() < Duration::from_secs(3600), format!("{:.1?}", start.elapsed()));
    rep.finish();
}

#[test]
fn criterion_05_scaling_law() {
    let mut rep = Report::new(5, "logical error scaling");
    let (s, c) = scheduled("steane");
    let pts: Vec<(f64, f64)> =
        [2.5e-3, 5e-3, 7.5e-3, 1e-2].iter().map(|&p| (p, simulate(&s, &c, p, 2_000_000, 21).ler)).collect();
    let k = loglog_slope(&pts);
    rep.check((k - 2.0).abs() <= 0.3, format!("Steane slope {k:.2} (2.0 +- 0.3)"));
    let (s, c) = scheduled("color_17");
    let pts: Vec<(f64, f64)> =
        [5e-3, 7.5e-3, 1e-2].iter().map(|&p| (p, simulate(&s, &c, p, 4_000_000, 22).ler)).collect();
    let k = loglog_slope(&pts);
    rep.check((k - 3.0).abs() <= 0.5, format!("[[17,1,5]] slope {k:.2} (3.0 +- 0.5)"));
    rep.finish();
}

#[test]
fn criterion_06_golay_code_capacity() {
    let mut rep = Report::new(6, "Golay minimum-weight table");
    let s = catalog::state("golay", StateLabel::Zero).unwrap();
    let mw = build_mw_lut(&s, ErrorType::X, 3).unwrap();
    rep.check(mw.entries.len() == 2047, format!("{} syndromes", mw.entries.len()));
    let all = (1u128..1 << 11).all(|syn| mw.entries.contains_key(&syn));
    rep.check(all, "every nonzero 11-bit syndrome present");
    let mut wrong = 0;
    let mut checked = 0;
    for w in 1..=3 {
        flagprep::combin::for_each_combination(23, w, |support| {
            let (truth, decoded) = decode_error(&s, ErrorType::X, support, &mw);
            checked += 1;
            if decoded != Some(truth) {
                wrong += 1;
            }
            true
        });
    }
    rep.check(wrong == 0, format!("{checked} errors of weight <= 3, {wrong} misdecoded"));
    rep.finish();
}

#[test]
fn criterion_07_max_coset_weight() {
    let mut rep = Report::new(7, "maximum coset weight");
    let steane = catalog::state("steane", StateLabel::Zero).unwrap();
    let golay = catalog::state("golay", StateLabel::Zero).unwrap();
    let a = max_coset_weight(&steane, ErrorType::Z).unwrap();
    let b = max_coset_weight(&golay, ErrorType::Z).unwrap();
    rep.check(a == 1, format!("Steane Z {a}"));
    rep.check(b == 3, format!("Golay Z {b}"));
    rep.finish();
}

#[test]
fn criterion_08_golay_circuit_size() {
    let mut rep = Report::new(8, "Golay circuit size");
    let s = catalog::state("golay", StateLabel::Zero).unwrap();
    let a = assembled(&s, &AssemblyOptions { z_policy: GadgetPolicy::Override(2), ..Default::default() });
    let c = schedule_circuit(&a, ScheduleObjective::MinMaxQubits, 10_000, 0);
    let m = c.metrics();
    rep.check(m.cx_count <= 260, format!("{} CX (<= 260)", m.cx_count));
    rep.check(m.max_simultaneous_qubits <= 56, format!("{} qubits (<= 56)", m.max_simultaneous_qubits));
    rep.check(true, format!("{} flags, depth {}", m.flags, m.depth));
    rep.finish();
}

#[test]
fn criterion_09_steane_qec_ablation() {
    let mut rep = Report::new(9, "Steane-QEC ablation on [[17,1,5]]");
    let zero = catalog::state("color_17", StateLabel::Zero).unwrap();
    let full = assembled(&zero, &AssemblyOptions::default()).circuit;
    let x_only = assembled(&zero, &AssemblyOptions { z_policy: GadgetPolicy::Off, ..Default::default() }).circuit;
    let run = |mode: PrepMode, c: Option<&Circuit>, p: f64, samples: u64| {
        run_steane_qec_experiment(&zero, c, &SteaneExperimentConfig::new(p, samples, mode, 31)).unwrap()
    };
    let ps = [2.5e-3, 5e-3, 7.5e-3, 1e-2];
    for (mode, c, want, tol) in
        [(PrepMode::FtXOnly, Some(&x_only), 2.0, 0.3), (PrepMode::FullFt, Some(&full), 3.0, 0.5)]
    {
        let pts: Vec<(f64, f64)> = ps.iter().map(|&p| (p, run(mode, c, p, 2_000_000).logical_error_rate())).collect();
        let k = loglog_slope(&pts);
        rep.check((k - want).abs() <= tol, format!("{mode} slope {k:.2} ({want} +- {tol})"));
    }
    for p in [1e-3, 2.5e-3] {
        let a = run(PrepMode::FullFt, Some(&full), p, 10_000_000);
        let b = run(PrepMode::NoQec, None, p, 10_000_000);
        rep.check(
            a.logical_error_rate() <= b.logical_error_rate(),
            format!("p={p}: full_ft {:.3e} vs no_qec {:.3e}", a.logical_error_rate(), b.logical_error_rate()),
        );
    }
    rep.finish();
}

#[test]
fn criterion_10_frame_matches_tableau() {
    let mut rep = Report::new(10, "Pauli frame vs tableau");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for e in catalog::entries().iter().filter(|e| e.n <= 12) {
        let s = e.default_state().unwrap();
        let c = assembled(&s, &AssemblyOptions::default()).circuit;
        let sim = FrameSimulator::new(&c, &s).unwrap();
        let mut mismatches = 0;
        for _ in 0..10_000 {
            let f = rng.random_range(1..=4);
            let faults: Vec<(bool, usize, usize)> = (0..f)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        (true, rng.random_range(0..sim.q_locations.len()), rng.random_range(0..3))
                    } else {
                        let l = rng.random_range(0..sim.p_locations.len());
                        (false, l, rng.random_range(0..sim.p_locations[l].variants()))
                    }
                })
                .collect();
            let effect = sim.propagate(&faults);
            if frame_prediction(&s, &sim, &effect) != tableau_reference(&c, &s, &sim, &faults) {
                mismatches += 1;
            }
        }
        rep.check(mismatches == 0, format!("{} ({} qubits): {mismatches} of 10000 differ", e.name, c.num_qubits()));
    }
    rep.finish();
}
