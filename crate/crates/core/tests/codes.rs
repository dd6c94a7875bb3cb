use flagprep::assembly::{assemble_ft_circuit, AssemblyOptions, GadgetPolicy};
use flagprep::catalog;
use flagprep::circuit::Op;
use flagprep::css::{CosetWeightTable, StateLabel};
use flagprep::gadget::{GadgetLibrary, SearchBudget};
use flagprep::pauli::ErrorType;
use flagprep::synth::best_of_trials;
use flagprep::tableau::{tableau_check_circuit, TableauMismatch};
use flagprep::verify::verify_fault_tolerance;

fn assemble(name: &str, opts: &AssemblyOptions) -> (flagprep::css::CssState, flagprep::circuit::Circuit) {
    let s = catalog::default_state(name).unwrap();
    let bip = best_of_trials(&s, 16, 0).unwrap();
    let mut lib = GadgetLibrary::new(SearchBudget::default());
    let c = assemble_ft_circuit(&s, &bip, &mut lib, opts).unwrap().circuit;
    (s, c)
}

#[test]
fn every_catalog_state_prepares_noiselessly() {
    for e in catalog::entries() {
        let s = e.default_state().unwrap();
        s.validate().unwrap();
        // Distance-11 gadgets are out of reach; a t=1 circuit still exercises assembly.
        let t = if e.d > 7 { Some(1) } else { None };
        let mut opts = AssemblyOptions { t, ..Default::default() };
        if e.name == "golay" {
            opts.z_policy = GadgetPolicy::Override(2);
        }
        let (_, c) = assemble(&e.name, &opts);
        assert_eq!(tableau_check_circuit(&c, &s), Ok(()), "{}", e.name);
    }
}

#[test]
fn dropping_a_disentangling_gate_randomizes_the_flag() {
    let (s, c) = assemble("steane", &AssemblyOptions::default());
    // The last gate on the first flag closes its parity check.
    let flag = c.n_code;
    let last = c
        .ops
        .iter()
        .rposition(|op| matches!(*op, Op::Cx { control, target } if control == flag || target == flag))
        .unwrap();
    let mut broken = c.clone();
    broken.ops.remove(last);
    assert_eq!(tableau_check_circuit(&broken, &s), Err(TableauMismatch::NondeterministicFlag(0)));
}

#[test]
fn golay_smoke_and_three_fault_check() {
    let opts = AssemblyOptions { z_policy: GadgetPolicy::Override(2), ..Default::default() };
    let (s, c) = assemble("golay", &opts);
    assert!(verify_fault_tolerance(&c, &s, 1, ErrorType::X).unwrap().is_pass());
    assert!(verify_fault_tolerance(&c, &s, 1, ErrorType::Z).unwrap().is_pass());
    assert!(verify_fault_tolerance(&c, &s, 3, ErrorType::X).unwrap().is_pass());
    // Z is protected against two faults only; the override certificate
    // covers the third.
    assert!(verify_fault_tolerance(&c, &s, 2, ErrorType::Z).unwrap().is_pass());
}

#[test]
fn golay_t1_budget_smoke() {
    let (s, c) = assemble("golay", &AssemblyOptions { t: Some(1), ..Default::default() });
    for kind in [ErrorType::X, ErrorType::Z] {
        assert!(verify_fault_tolerance(&c, &s, 1, kind).unwrap().is_pass());
    }
}

#[test]
fn quadratic_residue_code_has_distance_eleven() {
    for label in [StateLabel::Zero, StateLabel::Plus] {
        let s = catalog::state("qr_47", label).unwrap();
        let kind = if label == StateLabel::Zero { ErrorType::X } else { ErrorType::Z };
        let table = CosetWeightTable::build(&s, kind).unwrap();
        let logical = 1u128 << s.num_syndrome_bits(kind);
        assert_eq!(table.weight_of_key(logical), 11);
    }
}
