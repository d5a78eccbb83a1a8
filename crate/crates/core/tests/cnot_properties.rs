use dcat_core::cnot::{
    geometric_phase_closed_form, geometric_phase_extract, parity_mixing, run_cnot, Basis, CnotOptions, TwoModeParams,
};
use dcat_core::units::default_kerr;
use std::f64::consts::PI;

fn params(t: f64, corr: bool) -> TwoModeParams {
    TwoModeParams::new(default_kerr(), 1.63, 1.63, t, corr).unwrap()
}

#[test]
fn slow_gate_variants_converge_without_bit_flips() {
    let opts = CnotOptions::default();
    let t = 0.689e-6;
    let plain = run_cnot(&params(t, false), &opts).unwrap();
    let corrected = run_cnot(&params(t, true), &opts).unwrap();
    let gap = (plain.run(Basis::B10).fidelity - corrected.run(Basis::B10).fidelity).abs();
    assert!(gap < 0.02, "gap {gap}");
    for report in [&plain, &corrected] {
        for run in &report.runs {
            assert!(run.fidelity <= 1.0 - run.leakage + 1e-9, "{:?}", run.basis);
            assert!(run.fidelity <= 1.0 + 1e-9);
        }
    }
    let scale = (-2.0f64 * 1.63 * 1.63).exp();
    for corr in [false, true] {
        let mixed = parity_mixing(&params(t, corr), &opts).unwrap();
        assert!(mixed < scale, "correction {corr}: {mixed}");
    }
}

#[test]
fn adiabatic_limit_and_phase_removal() {
    // four times the slowest gate
    let t = 4.0 * 0.689e-6;
    let opts = CnotOptions::default();
    let plain = geometric_phase_extract(&params(t, false), &opts).unwrap();
    let corrected = geometric_phase_extract(&params(t, true), &opts).unwrap();
    let closed = geometric_phase_closed_form(1.63, PI);
    assert!(!plain.non_adiabatic && !corrected.non_adiabatic);
    assert!(plain.control_one_fidelity > 0.99, "{}", plain.control_one_fidelity);
    assert!(
        corrected.control_one_fidelity > 0.99,
        "{}",
        corrected.control_one_fidelity
    );
    // without the rate term the parity sectors pick up the closed-form phase
    assert!(
        (plain.relative - closed).abs() < 0.1 * closed,
        "{} vs {closed}",
        plain.relative
    );
    assert!(corrected.relative.abs() < closed, "{}", corrected.relative);
}
