use proptest::prelude::*;
use tmfa_core::hbsolver::{linear_grid, static_sparams};
use tmfa_core::synth::{
    chebyshev_g_values, chebyshev_prototype, design_ladder, ripple_from_return_loss, FilterSpec,
};

fn spec(order: usize, fbw: f64, rl: f64) -> FilterSpec {
    FilterSpec {
        order,
        fbw,
        rl,
        ..FilterSpec::default()
    }
}

proptest! {
    #[test]
    fn g_values_positive_and_palindromic_for_odd_order(half in 1usize..5, rl in 3.5f64..30.0) {
        let n = 2 * half + 1;
        let g = chebyshev_g_values(n, ripple_from_return_loss(rl));
        prop_assert_eq!(g.len(), n + 2);
        prop_assert!(g.iter().all(|v| *v > 0.0));
        for i in 0..g.len() {
            let (a, b) = (g[i], g[g.len() - 1 - i]);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()));
        }
    }

    #[test]
    fn halving_fbw_halves_k_and_doubles_qe(order in 2usize..8, fbw in 0.01f64..0.19, rl in 4.0f64..25.0) {
        let a = chebyshev_prototype(&spec(order, fbw, rl)).unwrap();
        let b = chebyshev_prototype(&spec(order, fbw / 2.0, rl)).unwrap();
        prop_assert_eq!(&a.g, &b.g);
        for (ka, kb) in a.couplings.iter().zip(&b.couplings) {
            prop_assert!((ka / 2.0 - kb).abs() <= 1e-15 * ka.abs());
        }
        prop_assert!((a.qe_in * 2.0 - b.qe_in).abs() <= 1e-12 * b.qe_in);
        prop_assert!((a.qe_out * 2.0 - b.qe_out).abs() <= 1e-12 * b.qe_out);
    }

    #[test]
    fn ripple_strictly_decreases_with_return_loss(rl in 3.1f64..40.0, step in 0.01f64..5.0) {
        prop_assert!(ripple_from_return_loss(rl + step) < ripple_from_return_loss(rl));
    }

    #[test]
    fn realized_ladder_is_mirror_symmetric_and_positive(half in 1usize..4, fbw in 0.01f64..0.08, rl in 8.0f64..25.0) {
        let l = design_ladder(&spec(2 * half + 1, fbw, rl), 0.86e-12, 200.0).unwrap();
        prop_assert!(l.is_mirror_symmetric(1e-12));
        prop_assert!(l.capacitance_vector().iter().all(|c| *c > 0.0));
    }
}

#[test]
fn lossless_ladder_conserves_power() {
    let l = design_ladder(&FilterSpec::default(), 0.86e-12, f64::INFINITY).unwrap();
    for f in linear_grid(2.0e9, 2.8e9, 161) {
        let r = static_sparams(&l, f).unwrap();
        let p = r.s11_fund().norm_sqr() + r.s21_fund().norm_sqr();
        assert!((p - 1.0).abs() < 1e-9, "f = {f}: {p}");
    }
}

#[test]
fn isolated_resonators_sit_at_f0() {
    let s = FilterSpec::default();
    let l = design_ladder(&s, 0.86e-12, 200.0).unwrap();
    for i in 0..l.order() {
        let f = 1.0 / (2.0 * std::f64::consts::PI * (l.resonators[i].inductance * l.node_capacitance(i)).sqrt());
        assert!((f / s.f0 - 1.0).abs() < 1e-6);
    }
}
