mod common;

use condensate_twa::analytic::{rho_mean, AnalyticCurves, PhaseDiffusion, QuenchParams};
use common::{quench_oracle, rk4};

fn grid(f: f64) -> Vec<f64> {
    let end = 10.0 / f + 5.0;
    (0..=200).map(|i| end * i as f64 / 200.0).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn density_matches_logistic_integration() {
    let q = QuenchParams::new(2.0, 0.6, 1.0, 1.0).unwrap();
    let y = rk4(|_, y: &[f64; 1]| [(2.0 - y[0]) * y[0]], [2.6], 0.0, 1.0, 1e-4);
    assert!(rel(rho_mean(&q, 1.0), y[0]) < 1e-10);
}

#[test]
fn closed_forms_match_moment_equations() {
    for &(f, z) in &[(2.0, 0.6), (50.0, 0.8), (0.5, 1.0), (8.0, 0.45)] {
        let q = QuenchParams::with_initial_density(f, z, 1.0, 200.0).unwrap();
        let curves = AnalyticCurves::new(q, PhaseDiffusion::SingleMode).unwrap();
        let m = curves.initial;
        let taus = grid(f);
        let ys = quench_oracle(f, q.alpha / q.gamma, [m.rho_m, m.c, m.c12, m.c_theta.unwrap()], &taus);
        for (&tau, y) in taus.iter().zip(&ys) {
            let (c, c12, ct) = curves.cumulants(tau);
            assert!(rel(curves.rho_m(tau), y[0]) < 1e-8, "ρ f={f} τ={tau}");
            assert!(rel(c, y[1]) < 1e-8, "C f={f} τ={tau}: {c} vs {}", y[1]);
            assert!(rel(c12, y[2]) < 1e-8, "C12 f={f} τ={tau}: {c12} vs {}", y[2]);
            assert!(rel(ct, y[3]) < 1e-8, "Cθ f={f} τ={tau}: {ct} vs {}", y[3]);
        }
    }
}

#[test]
fn doubled_diffusion_matches_doubled_rate() {
    let q = QuenchParams::with_initial_density(2.0, 0.6, 1.0, 200.0).unwrap();
    let single = AnalyticCurves::new(q, PhaseDiffusion::SingleMode).unwrap();
    let double = AnalyticCurves::new(q, PhaseDiffusion::PhaseSum).unwrap();
    let ct0 = single.initial.c_theta.unwrap();
    for &tau in &[0.3, 1.0, 3.0] {
        let d1 = single.cumulants(tau).2 - ct0;
        let d2 = double.cumulants(tau).2 - ct0;
        assert!(rel(d2, 2.0 * d1) < 1e-14);
    }
}

#[test]
fn interpolation_is_the_scaled_population_source() {
    // With zero initial density variance the population cumulant is (Γ/α)·e(τ).
    let q = QuenchParams::with_initial_density(3.0, 0.7, 1.0, 150.0).unwrap();
    let curves = AnalyticCurves::new(q, PhaseDiffusion::SingleMode).unwrap();
    let a = q.alpha / q.gamma;
    let taus: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
    let ys = quench_oracle(q.f, a, [curves.initial.rho_m, 0.0, 0.0, 0.0], &taus);
    for (&tau, y) in taus.iter().zip(&ys).skip(1) {
        assert!(rel(curves.e(tau) / a, y[1]) < 1e-8, "τ={tau}");
    }
}

#[test]
fn c12_decays_faster_than_excess_pump_rate() {
    for &f in &[2.0, 10.0, 50.0] {
        let q = QuenchParams::with_initial_density(f, 0.8, 1.0, 200.0).unwrap();
        let curves = AnalyticCurves::new(q, PhaseDiffusion::SingleMode).unwrap();
        let (t1, t2) = (1.0 / f, 3.0 / f);
        let rate = -(curves.cumulants(t2).1 / curves.cumulants(t1).1).ln() / (t2 - t1);
        assert!(rate >= f, "f={f}: rate {rate}");
    }
}

#[test]
fn squeezing_outlives_entanglement() {
    for &(f, z) in &[(2.0, 0.6), (10.0, 0.7), (50.0, 0.8), (80.0, 1.0)] {
        let q = QuenchParams::with_initial_density(f, z, 1.0, 200.0).unwrap();
        let curves = AnalyticCurves::new(q, PhaseDiffusion::SingleMode).unwrap();
        let td = curves.disentanglement_time().unwrap();
        let xi = curves.xi(2.0 * td.numeric);
        assert!(xi > 0.0 && xi < curves.threshold(2.0 * td.numeric), "f={f}: {xi}");
    }
}
