use proptest::prelude::*;

use dcat_core::analysis::{x_fidelity_trace, FidelityBasis};
use dcat_core::fockspace::{coherent_state, default_cutoff, parity, truncation_check, C64, DEFAULT_TAIL_TOL};
use dcat_core::hamiltonians::{full_single_mode, sta_correction};
use dcat_core::sparse::{SparseOperator, TermStack};
use dcat_core::states::{beta_of, cat_state, gamma_roots, CatParams, Parity};

fn parity_strategy() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coherent_states_are_normalized(re in -2.5f64..2.5, im in -2.5f64..2.5) {
        let amp = C64::new(re, im);
        let d = default_cutoff(amp.norm(), false);
        let s = coherent_state(amp, d).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        prop_assert!(truncation_check(&s, DEFAULT_TAIL_TOL).passed);
    }

    #[test]
    fn cats_are_parity_eigenstates(beta in 0.2f64..2.5, phi in 0.0f64..std::f64::consts::PI, par in parity_strategy()) {
        let d = default_cutoff(beta, false);
        let s = cat_state(beta, par, phi, d).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        let p = parity(d).unwrap();
        prop_assert!((p.expectation(&s).re - par.sign()).abs() < 1e-12);
        let other = cat_state(beta, if par == Parity::Even { Parity::Odd } else { Parity::Even }, phi, d).unwrap();
        prop_assert!(s.inner(&other).norm() < 1e-12);
    }

    #[test]
    fn single_mode_hamiltonians_are_hermitian(
        alpha in 0.5f64..2.0,
        r in 0.0f64..6.0,
        er in -1.0f64..1.0,
        ei in -1.0f64..1.0,
    ) {
        let p = CatParams::new(1.0, r, alpha).unwrap().with_drive(C64::new(er, ei));
        let d = default_cutoff(beta_of(alpha, r).unwrap() + 1.5, false);
        if let Ok(h) = full_single_mode(&p, d) {
            prop_assert!(h.hermiticity_deviation() < 1e-12);
        }
        let h = sta_correction(alpha, er, ei, d).unwrap();
        prop_assert!(h.hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn cubic_roots_solve_the_well_equation(beta in 0.0f64..3.0, er in -4.0f64..4.0, ei in -4.0f64..4.0) {
        let eps = C64::new(er, ei);
        let roots = gamma_roots(beta, eps);
        let scale = 1.0 + beta * beta + eps.norm();
        for g in roots {
            let resid = g * g * g - g * (beta * beta) - eps * 0.5;
            prop_assert!(resid.norm() < 1e-9 * scale * (1.0 + g.norm().powi(3)));
        }
        for w in roots.windows(2) {
            prop_assert!(w[0].re <= w[1].re + 1e-12);
        }
    }

    #[test]
    fn x_fidelity_never_exceeds_code_population(alpha in 0.8f64..1.8, r in 0.1f64..3.0, t_end in 1.0f64..200.0) {
        let p = CatParams::new(1.0, r, alpha).unwrap();
        let times: Vec<f64> = (0..25).map(|k| t_end * k as f64 / 24.0).collect();
        let tr = x_fidelity_trace(&p, &times, None, FidelityBasis::Raw).unwrap();
        for (f, pop) in tr.fidelity.iter().zip(&tr.code_population) {
            prop_assert!(*f <= pop + 1e-9, "{} > {}", f, pop);
        }
    }

    #[test]
    fn stacked_terms_match_linear_combination(
        a in -2.0f64..2.0, b in -2.0f64..2.0, ci in -2.0f64..2.0, beta in 0.5f64..2.0,
    ) {
        let d = 30;
        let ops: Vec<SparseOperator> = [0.0, 0.7, 1.9]
            .iter()
            .map(|phi| SparseOperator::from_dense(&sta_correction(beta, *phi, 1.0, d).unwrap()))
            .collect();
        let refs: Vec<&SparseOperator> = ops.iter().collect();
        let stack = TermStack::new(&refs);
        let coeffs = [C64::new(a, 0.0), C64::new(b, ci), C64::new(0.0, a * b)];
        let fast = stack.combine(&coeffs).to_dense(vec![d]);
        let pairs: Vec<(C64, &SparseOperator)> = coeffs.iter().copied().zip(refs.iter().copied()).collect();
        let slow = SparseOperator::linear_combination(&pairs).to_dense(vec![d]);
        prop_assert!(fast.max_abs_diff(&slow) < 1e-12);
    }
}
