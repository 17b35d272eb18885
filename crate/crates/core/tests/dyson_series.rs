//! The numerical Dyson map against its first-order interaction-picture series
//! `η ≈ η₀(I − iκ(α̃a + β̃a†))e^{−iχN}`.

use dyson_core::diagnostics::evaluate;
use dyson_core::fock::{ladder_operators, relative};
use dyson_core::library;
use dyson_core::oscillator::phase_integrals;
use dyson_core::{FockOperator, C64};

fn series_deviation(kappa: f64) -> f64 {
    let mut s = library::s1();
    s.kappa = kappa;
    let ev = evaluate(&s).unwrap();
    let p = phase_integrals(&s);
    let (a, ad) = ladder_operators(s.dim).unwrap();
    let id = FockOperator::identity(s.dim).unwrap();
    // the second-order remainder grows like κ²|α̃|²n, so only low levels are compared
    let block = 6;
    let mut worst: f64 = 0.0;
    for k in (0..s.grid.len()).step_by(50) {
        let first = &a.scale(p.alpha_tilde[k]) + &ad.scale(p.beta_tilde[k]);
        let phases: Vec<C64> = (0..s.dim).map(|n| C64::new(0.0, -p.chi[k] * n as f64).exp()).collect();
        let r = FockOperator::diagonal(&phases).unwrap();
        let oracle = &(&ev.traj.eta0 * &(&id + &first.scale(C64::new(0.0, -kappa)))) * &r;
        let num = ev.traj.eta[k].leading_block(block);
        let den = oracle.leading_block(block);
        worst = worst.max(relative((num - &den).norm(), den.norm()));
    }
    worst
}

#[test]
fn dyson_map_matches_first_order_series() {
    let coarse = series_deviation(0.1);
    let fine = series_deviation(0.05);
    assert!(coarse <= 20.0 * 0.1f64.powi(2), "{coarse:e}");
    // the remainder is second order in κ
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "{coarse:e} / {fine:e} = {ratio}");
}
