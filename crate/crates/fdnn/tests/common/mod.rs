//! Reference implementations shared by the integration tests. Everything
//! here is written from the design definitions directly and shares no code
//! with the library's density routines.

#![allow(dead_code)]

use std::f64::consts::PI;

use fdnn::dgp::GaussianScale;
use fdnn::dnn::{hinge_risk, subgradient};
use fdnn::{Label, NetworkArchitecture, NetworkParams, ScoreMatrix};
use nalgebra::DVector;
use rand::Rng;
use statrs::distribution::{Continuous, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

/// Noncentral t density from its integral representation
///
/// f(x) = ν^{ν/2} e^{-νμ²/(2(x²+ν))} / (√π Γ(ν/2) 2^{(ν-1)/2} (x²+ν)^{(ν+1)/2})
///        · ∫₀^∞ y^ν exp(-½ (y - μx/√(x²+ν))²) dy,
///
/// the integral done by tanh-sinh quadrature in log-shifted form.
pub fn noncentral_t_ln_pdf(x: f64, df: f64, mu: f64) -> f64 {
    let s = x * x + df;
    let c = mu * x / s.sqrt();
    let peak = 0.5 * (c + (c * c + 4.0 * df).sqrt());
    let exponent = |y: f64| df * y.ln() - 0.5 * (y - c).powi(2);
    let top = exponent(peak);
    let upper = peak + 40.0;
    let integral = tanh_sinh(|y| if y > 0.0 { (exponent(y) - top).exp() } else { 0.0 }, 0.0, upper);
    0.5 * df * df.ln() - df * mu * mu / (2.0 * s) - 0.5 * PI.ln() - ln_gamma(df / 2.0)
        - 0.5 * (df - 1.0) * 2f64.ln()
        - 0.5 * (df + 1.0) * s.ln()
        + top
        + integral.ln()
}

/// Tanh-sinh quadrature on `[a, b]` with step 1/64 over `|t| ≤ 4`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 1.0 / 64.0;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for k in -256i32..=256 {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let x = mid + half * u.tanh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        if x > a && x < b {
            sum += w * f(x);
        }
    }
    sum * h * half
}

fn normal_ln(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).unwrap().ln_pdf(x)
}

fn t_ln(x: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).unwrap().ln_pdf(x)
}

fn sd_of(diag: f64, scale: GaussianScale) -> f64 {
    match scale {
        GaussianScale::Variance => diag.sqrt(),
        GaussianScale::StdDev => diag,
    }
}

fn gaussian_sum(xi: &[f64], means: &[f64], diag: &[f64], scale: GaussianScale) -> f64 {
    xi.iter()
        .zip(means)
        .zip(diag)
        .map(|((&x, &m), &d)| normal_ln(x, m, sd_of(d, scale)))
        .sum()
}

/// Bivariate t log density with 2×2 scale `[[a, b], [b, d]]`.
fn bivariate_t_ln(x: &[f64], mean: [f64; 2], a: f64, b: f64, d: f64, df: f64) -> f64 {
    let det = a * d - b * b;
    let (u, v) = (x[0] - mean[0], x[1] - mean[1]);
    let q = (d * u * u - 2.0 * b * u * v + a * v * v) / det;
    ln_gamma((df + 2.0) / 2.0) - ln_gamma(df / 2.0) - (df * PI).ln() - 0.5 * det.ln() - 0.5 * (df + 2.0) * (1.0 + q / df).ln()
}

/// `log h₁(ξ) − log h₋₁(ξ)` for the built-in designs, summed coordinate by
/// coordinate (block by block for design 5).
pub fn reference_log_ratio(id: u32, scale: GaussianScale, xi: &[f64]) -> f64 {
    match id {
        1 => {
            gaussian_sum(xi, &[-1.0, 2.0, -3.0], &[0.6, 0.4, 0.2], scale)
                - gaussian_sum(xi, &[-0.5, 2.5, -2.5], &[0.9, 0.5, 0.3], scale)
        }
        2 => {
            gaussian_sum(xi, &[-1.0, 2.0, -3.0], &[3.0, 2.0, 1.0], scale)
                - (t_ln(xi[0], 5.0) + t_ln(xi[1], 3.0) + t_ln(xi[2], 1.0))
        }
        3 => {
            gaussian_sum(xi, &[8.0, -6.0, 4.0, -2.0], &[8.0, 6.0, 4.0, 2.0], scale)
                - gaussian_sum(xi, &[-3.5, -2.5, 1.5, -0.5], &[4.5, 3.5, 2.5, 1.5], scale)
        }
        4 => {
            let nc = [2.0, 1.5, 1.0, 0.5];
            (0..4)
                .map(|j| {
                    let k = (j + 1) as f64;
                    t_ln(xi[j], 2.0 * k) - noncentral_t_ln_pdf(xi[j], 2.0 * k + 1.0, nc[j])
                })
                .sum()
        }
        5 => {
            let r = 0.3 * 2f64.sqrt();
            bivariate_t_ln(&xi[0..2], [1.0, -1.0], 1.0, 0.5, 1.0, 5.0) + bivariate_t_ln(&xi[2..4], [0.0, 0.0], 1.0, 0.0, 1.0, 5.0)
                - bivariate_t_ln(&xi[0..2], [0.0, 0.0], 1.0, 0.5, 1.0, 5.0)
                - bivariate_t_ln(&xi[2..4], [0.0, 0.0], 2.0, r, 1.0, 5.0)
        }
        _ => panic!("no reference for design {id}"),
    }
}

fn toy_scores(seed: u64, n: usize, j: usize) -> ScoreMatrix {
    let mut rng = fdnn::rng::seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..j).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let labels = rows.iter().map(|r| Label::from_sign(r[0] - 0.5 * r.get(1).copied().unwrap_or(0.0))).collect();
    ScoreMatrix::from_rows(&rows, labels).unwrap()
}

/// Pre-activations of every hidden unit and the output, computed without
/// the library's forward pass.
fn activations(net: &NetworkParams, x: &[f64]) -> (Vec<f64>, f64) {
    let mut h = DVector::from_column_slice(x);
    let mut pre = Vec::new();
    for (w, v) in net.weights.iter().zip(&net.shifts) {
        let z = w * &h - v;
        pre.extend(z.iter().copied());
        h = z.map(|t| t.max(0.0));
    }
    let out = (net.weights.last().unwrap() * h)[0];
    (pre, out)
}

fn perturbed(net: &NetworkParams, layer: usize, is_shift: bool, idx: usize, delta: f64) -> NetworkParams {
    let mut p = net.clone();
    if is_shift {
        p.shifts[layer][idx] += delta;
    } else {
        p.weights[layer][idx] += delta;
    }
    p
}

/// Compares the hinge-risk subgradient with central differences on
/// `networks` random networks whose inputs all sit at least 1e-3 away from
/// a ReLU or hinge kink. Returns the worst relative deviation.
pub fn gradient_check(networks: usize) -> f64 {
    let h = 1e-6;
    let mut checked = 0;
    let mut seed = 0u64;
    let mut worst: f64 = 0.0;
    while checked < networks {
        seed += 1;
        let mut rng = fdnn::rng::seeded(1000 + seed);
        let j = rng.random_range(1..5);
        let depth = rng.random_range(1..4);
        let width = rng.random_range(2..7);
        let arch = NetworkArchitecture::uniform(j, depth, width, 10.0).unwrap();
        let mut net = NetworkParams::init(&arch, seed);
        for s in &mut net.shifts {
            s.apply(|v| *v = rng.random_range(-0.5..0.5));
        }
        let scores = toy_scores(seed, 12, j);
        let kink_free = (0..scores.len()).all(|i| {
            let (pre, out) = activations(&net, &scores.row(i));
            let y = scores.labels()[i].as_f64();
            pre.iter().all(|z| z.abs() > 1e-3) && (1.0 - y * out).abs() > 1e-3
        });
        if !kink_free {
            continue;
        }
        let lib_out = net.forward_rows(scores.scores()).unwrap();
        for (i, f) in lib_out.iter().enumerate() {
            assert!((f - activations(&net, &scores.row(i)).1).abs() < 1e-12);
        }
        let batch: Vec<usize> = (0..scores.len()).collect();
        let grad = subgradient(&net, &scores, &batch).unwrap();
        let risk = |p: &NetworkParams| hinge_risk(p, &scores).unwrap();
        let mut compare = |analytic: f64, layer, is_shift, idx| {
            let fd = (risk(&perturbed(&net, layer, is_shift, idx, h)) - risk(&perturbed(&net, layer, is_shift, idx, -h))) / (2.0 * h);
            let scale = analytic.abs().max(fd.abs()).max(1e-6);
            worst = worst.max((analytic - fd).abs() / scale);
        };
        for (l, g) in grad.weights.iter().enumerate() {
            for idx in 0..g.len() {
                compare(g[idx], l, false, idx);
            }
        }
        for (l, g) in grad.shifts.iter().enumerate() {
            for idx in 0..g.len() {
                compare(g[idx], l, true, idx);
            }
        }
        checked += 1;
    }
    worst
}
