//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Classical fourth-order Runge–Kutta for `y' = rhs(t, y)` from `t0` to `t1`
/// with at most `h` per step.
pub fn rk4<const N: usize>(rhs: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t0: f64, t1: f64, h: f64) -> [f64; N] {
    let steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    for _ in 0..steps {
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = rhs(t + h, &axpy(&y, &k3, h));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    y
}

/// Weak-noise moment equations after switching off the entangled pumping,
/// linear saturation law, `η = 1`. State `[ρ_m, C, C₁₂, C_θ]`, `a = α/Γ`.
pub fn quench_rhs(f: f64, a: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
    move |_, y| {
        let [rho, c, c12, _] = *y;
        [
            (f - a * rho) * rho,
            2.0 * (f - 2.0 * a * rho) * c + (f + 2.0 - a * rho) * rho,
            2.0 * (f - 2.0 * a * rho) * c12,
            0.25 * ((f + 2.0) / rho - a),
        ]
    }
}

/// Integrates [`quench_rhs`] from `y0` to each time in `taus` (ascending).
pub fn quench_oracle(f: f64, a: f64, y0: [f64; 4], taus: &[f64]) -> Vec<[f64; 4]> {
    let h = (0.0025 / f).min(1e-3);
    let rhs = quench_rhs(f, a);
    let mut out = Vec::with_capacity(taus.len());
    let (mut t, mut y) = (0.0, y0);
    for &tau in taus {
        if tau > t {
            y = rk4(&rhs, y, t, tau, h);
            t = tau;
        }
        out.push(y);
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Sample variance about the sample mean and its standard error.
pub fn variance_with_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let v = xs.clone().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (v, ((m4 - v * v) / n).sqrt())
}
