#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// `ln I_ν(z)` from the power series `Σ (z/2)^(2k+ν) / (k! Γ(k+ν+1))`.
fn ln_bessel_i(nu: f64, z: f64) -> f64 {
    let lz = (z / 2.0).ln();
    let mut best = f64::NEG_INFINITY;
    let mut terms = Vec::new();
    for k in 0..5000 {
        let kf = k as f64;
        let t = (2.0 * kf + nu) * lz - ln_gamma(kf + 1.0) - ln_gamma(kf + nu + 1.0);
        terms.push(t);
        best = best.max(t);
        if kf > z && t < best - 60.0 {
            break;
        }
    }
    best + terms.iter().map(|t| (t - best).exp()).sum::<f64>().ln()
}

/// `Q_M(a, b) = ∫_b^∞ x (x/a)^(M-1) exp(-(x²+a²)/2) I_(M-1)(a x) dx` by composite Simpson.
pub fn marcum_q_quadrature(m: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0);
    let f = |x: f64| -> f64 {
        (x.ln() + (m - 1.0) * (x.ln() - a.ln()) - (x * x + a * a) / 2.0
            + ln_bessel_i(m - 1.0, a * x))
        .exp()
    };
    let hi = b.max(a) + 40.0;
    let steps = (((hi - b) / 2e-3).ceil() as usize).next_multiple_of(2);
    let h = (hi - b) / steps as f64;
    let mut acc = f(b) + f(hi);
    for i in 1..steps {
        acc += f(b + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Gaussian-perturbed point with norm uniform in `[0, max_r]`.
pub fn noise_ball(ell: usize, max_r: f64, r: &mut impl rand::Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..ell)
        .map(|_| r.sample(rand_distr::StandardNormal))
        .collect();
    let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    let rad = r.gen_range(0.0..max_r);
    g.iter().map(|v| v / norm * rad).collect()
}
