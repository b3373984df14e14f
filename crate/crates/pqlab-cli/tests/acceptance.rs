//! Acceptance gate: one test per criterion, each printing a pass line.
//!
//! The criteria pin the project's quantitative claims end to end: exact
//! classifier agreement, exact scaling identities, fitted concentration
//! rates against closed-form exponents, two-sided estimates of the embedding
//! constant, eigenvalue oracles, fibering closed forms, level-gap sweeps,
//! manufactured identity residuals with mesh-convergence order, gradient
//! consistency order, the borderline descent scan, and byte-level
//! determinism of the command-line driver.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqlab::bubble::{
    gradient_p_rate, gradient_q_rate, power_integral_rate, scaling_check, BubbleParams,
    CutoffProfile,
};
use pqlab::classify::{
    classify_existence_combined, classify_existence_fixed, kappa_midpoint, kappa_window,
    q_regime_boundary,
};
use pqlab::mesh::{build_mesh, RadialField, RadialMesh};
use pqlab::mountain_pass::{
    epsilon_sweep, fibering_max, limit_root, FiberingCoefficients,
};
use pqlab::pohozaev::{
    manufactured_solution, nonexistence_scan, pohozaev_residual, recombination_residual,
    tested_identity_check, volume_identity_check, ManufacturedProfile,
};
use pqlab::problem::{mu_nonexistence_bound, threshold_energy};
use pqlab::ratefit::fit_rate;
use pqlab::solver::{
    descent, dot, rayleigh_min, sobolev_constant, sobolev_constant_minimized, DescentOptions,
    Model,
};
use pqlab::ProblemSpec;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn base_spec(dim: u32, p: f64, q: f64, s: f64) -> ProblemSpec {
    ProblemSpec {
        dim,
        p,
        q,
        s,
        b: 0.0,
        nu: 0.0,
        mu: 0.0,
        radius: 1.0,
        rho: 1.0,
    }
}

fn random_valid_tuple(rng: &mut ChaCha8Rng) -> ProblemSpec {
    loop {
        let dim = rng.gen_range(3..=10u32);
        let n = dim as f64;
        let p = rng.gen_range(1.05..n - 0.05);
        let q = rng.gen_range(1.01..p - 1e-3);
        let pstar = n * p / (n - p);
        let s = rng.gen_range(q + 1e-6..pstar - 1e-6);
        let spec = base_spec(dim, p, q, s);
        if spec.validated().is_ok() {
            return spec;
        }
    }
}

#[test]
fn criterion_01_classifier_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10_000 {
        let spec = random_valid_tuple(&mut rng);
        let piecewise = classify_existence_fixed(&spec);
        let max_form = classify_existence_combined(&spec);
        assert_eq!(
            piecewise.admissible, max_form.admissible,
            "classifier split on {spec:?}"
        );
        assert_eq!(
            piecewise.case_tag, max_form.case_tag,
            "case tag split on {spec:?}"
        );
    }
    println!("[acceptance] criterion 1 (classifier equivalence, 10^4 tuples): PASS");
}

#[test]
fn criterion_02_kappa_window_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut checked = 0;
    while checked < 1_000 {
        let spec = random_valid_tuple(&mut rng);
        // the window is defined on the slow-decay branch only
        if spec.q >= q_regime_boundary(spec.dim, spec.p) {
            continue;
        }
        let window = kappa_window(spec.dim, spec.p, spec.q, spec.s).unwrap();
        let verdict = classify_existence_fixed(&spec);
        assert_eq!(
            window.feasible, verdict.admissible,
            "window/classifier split on {spec:?}: {window:?} vs {verdict:?}"
        );
        checked += 1;
    }
    println!("[acceptance] criterion 2 (kappa window <=> slow-branch admissibility, 10^3 tuples): PASS");
}

#[test]
fn criterion_03_exact_scaling_identities() {
    let cases = [(4u32, 2.0, 3.0, 1.5), (3u32, 2.0, 2.5, 1.3)];
    for (dim, p, s, q) in cases {
        let cutoff = CutoffProfile::quintic(1.0).unwrap();
        for eps in [1e-3, 1e-2, 1e-1] {
            for delta in [0.25, 0.5, 1.0] {
                let report = scaling_check(eps, delta, cutoff, dim, p, s, q).unwrap();
                assert!(
                    report.max_residual() < 1e-10,
                    "N={dim} p={p} eps={eps} delta={delta}: residual {:.3e}",
                    report.max_residual()
                );
            }
        }
    }
    println!("[acceptance] criterion 3 (exact scaling identities < 1e-10 on the eps x delta grid): PASS");
}

/// Normalized concentration-family integral of the requested kind.
fn family_value(dim: u32, p: f64, eps: f64, delta: f64, kind: &str, exponent: f64) -> f64 {
    let cutoff = CutoffProfile::quintic(1.0).unwrap();
    let params = BubbleParams::new(eps, delta, dim, p, cutoff)
        .unwrap()
        .normalize()
        .unwrap();
    match kind {
        "grad_q" => params.grad_norm_q(exponent).unwrap(),
        "power" => params.power_integral(exponent).unwrap(),
        "excess" => params.grad_norm_p().unwrap(),
        other => panic!("unknown kind {other}"),
    }
}

#[test]
fn criterion_04_theta_rates_all_regimes() {
    let eps_schedule: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 - 0.5 * i as f64)).collect();
    for (dim, p) in [(3u32, 2.0), (4u32, 2.0)] {
        let q0 = q_regime_boundary(dim, p);
        let s0 = dim as f64 * (p - 1.0) / (dim as f64 - p);
        let q_cases = [(q0 + 0.3, "above"), (q0, "boundary"), (1.2, "below")];
        let s_cases = [(s0 + 1.0, "above"), (s0, "boundary"), (s0 - 1.3 + 1e-1, "below")];

        for &(q, label) in &q_cases {
            let rate = gradient_q_rate(dim, p, q);
            let samples: Vec<(f64, f64)> = eps_schedule
                .iter()
                .map(|&e| (e, family_value(dim, p, e, 0.5, "grad_q", q)))
                .collect();
            let fit = fit_rate(&samples, rate.log_power != 0).unwrap();
            assert!(
                (fit.slope - rate.eps_exponent).abs() <= 0.05 * rate.eps_exponent,
                "grad_q {label} (N={dim}, q={q}): slope {} vs {}",
                fit.slope,
                rate.eps_exponent
            );
        }
        for &(s, label) in &s_cases {
            let rate = power_integral_rate(dim, p, s);
            let samples: Vec<(f64, f64)> = eps_schedule
                .iter()
                .map(|&e| (e, family_value(dim, p, e, 0.5, "power", s)))
                .collect();
            let fit = fit_rate(&samples, rate.log_power != 0).unwrap();
            assert!(
                (fit.slope - rate.eps_exponent).abs() <= 0.05 * rate.eps_exponent,
                "power {label} (N={dim}, s={s}): slope {} vs {}",
                fit.slope,
                rate.eps_exponent
            );
        }

        // gradient excess over the embedding constant, at delta = 1
        let sobolev = sobolev_constant(dim, p).unwrap();
        let rate = gradient_p_rate(dim, p);
        let samples: Vec<(f64, f64)> = (0..5)
            .map(|i| {
                let e = 10f64.powf(-2.0 - 0.5 * i as f64);
                (e, family_value(dim, p, e, 1.0, "excess", p) - sobolev)
            })
            .collect();
        let fit = fit_rate(&samples, false).unwrap();
        assert!(
            (fit.slope - rate.eps_exponent).abs() <= 0.05 * rate.eps_exponent,
            "gradient excess (N={dim}): slope {} vs {}",
            fit.slope,
            rate.eps_exponent
        );
    }
    println!("[acceptance] criterion 4 (concentration rates, all regimes and log boundaries, within 5%): PASS");
}

#[test]
fn criterion_05_sobolev_two_estimators() {
    for (dim, p) in [(3u32, 2.0), (4u32, 2.0)] {
        let extrapolated = sobolev_constant(dim, p).unwrap();
        let minimized_r1 = sobolev_constant_minimized(dim, p, 1.0, 300, 2.0).unwrap();
        let minimized_r2 = sobolev_constant_minimized(dim, p, 2.0, 300, 2.0).unwrap();
        assert!(
            rel(extrapolated, minimized_r1) < 0.01,
            "N={dim}: estimators {extrapolated} vs {minimized_r1}"
        );
        assert!(
            rel(minimized_r1, minimized_r2) < 0.01,
            "N={dim}: radius dependence {minimized_r1} vs {minimized_r2}"
        );
    }
    println!("[acceptance] criterion 5 (embedding constant, two estimators within 1%, scale-invariant): PASS");
}

/// Independent eigenvalue oracle: dense second-order finite differences for
/// -u'' - ((N-1)/r) u' = lambda u with a symmetry closure at the origin,
/// smallest eigenvalue by inverse iteration, Richardson-extrapolated in h.
mod fd_oracle {
    /// Tridiagonal solve with distinct sub/super diagonals.
    fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sub[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = sup[i] / m;
            }
            d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
        x
    }

    fn apply(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y += sub[i - 1] * x[i - 1];
                }
                if i < n - 1 {
                    y += sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Smallest eigenvalue of the radial Laplacian on the unit ball (N = 3).
    pub fn lambda_h(n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        // origin row from the even extension: the operator limit is -3 u''(0)
        diag[0] = 6.0 / (h * h);
        sup[0] = -6.0 / (h * h);
        for i in 1..n {
            let r = i as f64 * h;
            diag[i] = 2.0 / (h * h);
            sub[i - 1] = -1.0 / (h * h) + 1.0 / (r * h);
            if i < n - 1 {
                sup[i] = -1.0 / (h * h) - 1.0 / (r * h);
            }
        }
        let mut u: Vec<f64> = (0..n).map(|i| 1.0 - (i as f64 / n as f64)).collect();
        for _ in 0..200 {
            u = thomas(&sub, &diag, &sup, &u);
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut u {
                *x /= norm;
            }
        }
        let au = apply(&sub, &diag, &sup, &u);
        let num: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
        let den: f64 = u.iter().map(|x| x * x).sum();
        num / den
    }

    pub fn lambda_extrapolated() -> f64 {
        let coarse = lambda_h(512);
        let fine = lambda_h(1024);
        (4.0 * fine - coarse) / 3.0
    }
}

#[test]
fn criterion_06_eigenvalue_oracle_and_dilation() {
    let pi_sq = std::f64::consts::PI * std::f64::consts::PI;
    let oracle = fd_oracle::lambda_extrapolated();
    assert!(
        rel(oracle, pi_sq) < 1e-6,
        "finite-difference oracle {oracle} vs {pi_sq}"
    );

    let mesh = build_mesh(3, 1.0, 400, 1.0).unwrap();
    let eig = rayleigh_min(&mesh, 2.0).unwrap();
    assert!(eig.converged);
    assert!(
        rel(eig.value, pi_sq) < 0.005 && rel(eig.value, oracle) < 0.005,
        "lambda_1 {} vs pi^2 {pi_sq} / oracle {oracle}",
        eig.value
    );

    // dilation law on meshes that are not scaled copies of each other
    for m in [2.0, 1.5] {
        let unit = rayleigh_min(&build_mesh(3, 1.0, 400, 1.0).unwrap(), m).unwrap();
        let doubled = rayleigh_min(&build_mesh(3, 2.0, 352, 1.0).unwrap(), m).unwrap();
        assert!(unit.converged && doubled.converged);
        let predicted = unit.value / 2f64.powf(m);
        assert!(
            rel(doubled.value, predicted) < 0.005,
            "m={m}: {} vs {}",
            doubled.value,
            predicted
        );
    }
    println!("[acceptance] criterion 6 (eigenvalue pi^2 within 0.5% of the FD oracle; dilation law): PASS");
}

#[test]
fn criterion_07_fibering_closed_form() {
    for (dim, p, a) in [(3u32, 2.0, 1.7), (4u32, 2.0, 0.6), (5u32, 2.5, 3.3)] {
        let n = dim as f64;
        let pstar = n * p / (n - p);
        let c = FiberingCoefficients::new(a, 0.0, 1.0, p, 0.5 * (1.0 + p), 0.5 * (p + pstar), pstar, 0.0, 0.0)
            .unwrap();
        let (t_max, phi_max) = fibering_max(&c).unwrap();
        let t_closed = a.powf(1.0 / (pstar - p));
        let phi_closed = a.powf(n / p) / n;
        assert!(rel(t_max, t_closed) < 1e-10, "t_max {t_max} vs {t_closed}");
        assert!(
            rel(phi_max, phi_closed) < 1e-10,
            "phi_max {phi_max} vs {phi_closed}"
        );
    }

    // consistency with the threshold level at the measured constant
    let sobolev = sobolev_constant(4, 2.0).unwrap();
    let c = FiberingCoefficients::new(sobolev, 0.0, 1.0, 2.0, 1.5, 3.0, 4.0, 0.0, 0.0).unwrap();
    let (_, phi_max) = fibering_max(&c).unwrap();
    let c_star = threshold_energy(sobolev, 4, 2.0).unwrap();
    assert!(
        rel(phi_max, c_star) < 1e-8,
        "phi_max {phi_max} vs threshold {c_star}"
    );
    println!("[acceptance] criterion 7 (fibering closed form to 1e-10; threshold consistency to 1e-8): PASS");
}

#[test]
fn criterion_08_limit_root() {
    let sobolev = sobolev_constant(4, 2.0).unwrap();
    let t0 = limit_root(sobolev, 4, 2.0).unwrap();
    let cutoff = CutoffProfile::quintic(1.0).unwrap();
    let params = BubbleParams::new(1e-3, 1.0, 4, 2.0, cutoff)
        .unwrap()
        .normalize()
        .unwrap();
    let a = params.grad_norm_p().unwrap();
    let c = FiberingCoefficients::new(a, 0.0, 1.0, 2.0, 1.5, 3.0, 4.0, 0.0, 0.0).unwrap();
    let (t_max, _) = fibering_max(&c).unwrap();
    assert!(
        rel(t_max, t0) < 1e-2,
        "t_max at eps=1e-3 is {t_max}, limit root {t0}"
    );
    println!("[acceptance] criterion 8 (ray maximizer approaches the limit root within 1e-2 at eps=1e-3): PASS");
}

fn fit_last_rows(rows: &[(f64, f64)], count: usize) -> f64 {
    let tail = &rows[rows.len() - count..];
    fit_rate(tail, false).unwrap().slope
}

#[test]
fn criterion_09_level_gap_sweeps() {
    // fast-decay configuration, fixed truncation radius
    let spec_a = ProblemSpec {
        b: 1.0,
        nu: 1.0,
        ..base_spec(4, 2.0, 1.5, 3.5)
    };
    let schedule_a: Vec<(f64, f64)> = (0..7)
        .map(|i| (10f64.powf(-2.0 - 0.5 * i as f64), 1.0))
        .collect();
    let table_a = epsilon_sweep(&spec_a, &schedule_a).unwrap();
    assert!(
        table_a.first_flagged.is_some(),
        "sweep A never flagged a positive margin"
    );
    let rates_a = pqlab::bubble::quotient_rates(4, 2.0, 1.5, 3.5, 0.0).unwrap();
    let grad_rows: Vec<(f64, f64)> = table_a
        .rows
        .iter()
        .map(|r| (r.estimate.eps, r.quotient_grad))
        .collect();
    let scale_rows: Vec<(f64, f64)> = table_a
        .rows
        .iter()
        .map(|r| (r.estimate.eps, r.quotient_scale))
        .collect();
    let grad_slope = fit_last_rows(&grad_rows, 5);
    let scale_slope = fit_last_rows(&scale_rows, 5);
    assert!(
        (grad_slope - rates_a.grad_exponent).abs() <= 0.05 * rates_a.grad_exponent,
        "sweep A grad quotient: {grad_slope} vs {}",
        rates_a.grad_exponent
    );
    assert!(
        (scale_slope - rates_a.scale_exponent).abs() <= 0.05 * rates_a.scale_exponent,
        "sweep A scale quotient: {scale_slope} vs {}",
        rates_a.scale_exponent
    );

    // slow-decay configuration, coupling from the middle of its window
    let window = kappa_window(3, 2.0, 1.2, 5.0).unwrap();
    let kappa = kappa_midpoint(&window).unwrap();
    let spec_b = ProblemSpec {
        b: 1.0,
        nu: 1.0,
        ..base_spec(3, 2.0, 1.2, 5.0)
    };
    let schedule_b: Vec<(f64, f64)> = (0..9)
        .map(|i| {
            let e = 10f64.powf(-2.0 - 0.5 * i as f64);
            (e, e.powf(kappa))
        })
        .collect();
    let table_b = epsilon_sweep(&spec_b, &schedule_b).unwrap();
    assert!(
        table_b.first_flagged.is_some(),
        "sweep B never flagged a positive margin"
    );
    let rates_b = pqlab::bubble::quotient_rates(3, 2.0, 1.2, 5.0, kappa).unwrap();
    let grad_rows: Vec<(f64, f64)> = table_b
        .rows
        .iter()
        .map(|r| (r.estimate.eps, r.quotient_grad))
        .collect();
    let scale_rows: Vec<(f64, f64)> = table_b
        .rows
        .iter()
        .map(|r| (r.estimate.eps, r.quotient_scale))
        .collect();
    let grad_slope = fit_last_rows(&grad_rows, 5);
    let scale_slope = fit_last_rows(&scale_rows, 5);
    assert!(
        (grad_slope - rates_b.grad_exponent).abs() <= 0.05 * rates_b.grad_exponent,
        "sweep B grad quotient: {grad_slope} vs {}",
        rates_b.grad_exponent
    );
    assert!(
        (scale_slope - rates_b.scale_exponent).abs() <= 0.05 * rates_b.scale_exponent,
        "sweep B scale quotient: {scale_slope} vs {}",
        rates_b.scale_exponent
    );
    println!("[acceptance] criterion 9 (level sweeps flag positive margins; quotient decays match within 5%): PASS");
}

#[test]
fn criterion_10_pohozaev_manufactured_convergence() {
    let spec = ProblemSpec {
        nu: 1.0,
        ..base_spec(3, 2.0, 1.5, 1.5)
    };
    let mut samples = Vec::new();
    let mut finest = None;
    for k in [128usize, 256, 512, 1024, 2048, 4096] {
        let mesh = build_mesh(3, 1.0, k, 1.0).unwrap();
        let (u, nl) = manufactured_solution(ManufacturedProfile::Cosine, &spec, &mesh).unwrap();
        let combined = pohozaev_residual(&u, &nl, &spec);
        samples.push((1.0 / k as f64, combined.relative()));
        if k == 4096 {
            let volume = volume_identity_check(&u, &nl, &spec);
            let tested = tested_identity_check(&u, &nl, &spec);
            let recomb = recombination_residual(&volume, &tested, &combined, spec.dim, spec.p);
            finest = Some((combined.relative(), recomb));
        }
    }
    let (finest_residual, recombination) = finest.unwrap();
    assert!(
        finest_residual < 1e-6,
        "residual at n=4096: {finest_residual:.3e}"
    );
    assert!(
        recombination < 1e-12,
        "recombination mismatch: {recombination:.3e}"
    );
    let order = fit_rate(&samples, false).unwrap().slope;
    assert!(order >= 1.5, "convergence order {order}");
    println!("[acceptance] criterion 10 (manufactured identity residual < 1e-6, order >= 1.5, recombination to 1e-12): PASS");
}

#[test]
fn criterion_11_gradient_consistency_order() {
    let spec = ProblemSpec {
        b: 3.0,
        nu: 1.0,
        ..base_spec(3, 2.0, 1.5, 3.5)
    };
    let model = Model::new(spec, true).unwrap();
    let mesh = build_mesh(3, 1.0, 256, 1.0).unwrap();
    let probe = RadialField::from_fn(&mesh, |r| (1.0 - r * r) * (0.7 - r));
    let profiles: [fn(f64) -> f64; 4] = [
        |x| 1.0 - x * x,
        |x| 1.0 - x * x * x,
        |x| (1.0 - x * x) * (1.0 - x * x),
        |x| (std::f64::consts::FRAC_PI_2 * x).cos(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for field_idx in 0..20 {
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.3..1.0)).collect();
        let u = RadialField::from_fn(&mesh, |r| {
            coeffs
                .iter()
                .zip(&profiles)
                .map(|(c, f)| c * f(r))
                .sum::<f64>()
        });
        let analytic = dot(&model.energy_gradient(&u), probe.values());
        let mut errors = Vec::new();
        for h in [1e-3, 1e-4] {
            let fd = (model.energy(&u.axpy(h, &probe)) - model.energy(&u.axpy(-h, &probe)))
                / (2.0 * h);
            errors.push((fd - analytic).abs());
        }
        let order = (errors[0] / errors[1]).ln() / 10f64.ln();
        assert!(
            order >= 1.9,
            "field {field_idx}: order {order} (errors {errors:?})"
        );
    }
    println!("[acceptance] criterion 11 (gradient matches central differences at order >= 1.9 on 20 fields): PASS");
}

#[test]
fn criterion_12_borderline_scan_stays_trivial() {
    let mesh = build_mesh(3, 1.0, 256, 2.0).unwrap();
    let eig = rayleigh_min(&mesh, 1.5).unwrap();
    assert!(eig.converged);
    let bound = mu_nonexistence_bound(3, 2.0, 1.5, eig.value).unwrap();
    let base = ProblemSpec {
        nu: 1.0,
        ..base_spec(3, 2.0, 1.5, 1.5)
    };
    let specs: Vec<ProblemSpec> = [0.0, 0.5 * bound, bound]
        .iter()
        .map(|&mu| ProblemSpec { mu, ..base })
        .collect();
    let opts = DescentOptions {
        max_iters: 20_000,
        sample_every: Some(500),
        ..DescentOptions::default()
    };
    let table = nonexistence_scan(&specs, &mesh, 10, 20_260_819, &opts).unwrap();
    assert_eq!(table.rows.len(), 36);
    assert!(
        table.passes(),
        "a run settled on a nontrivial state: {:?}",
        table
            .rows
            .iter()
            .filter(|r| r.outcome == pqlab::pohozaev::ScanOutcome::Nontrivial)
            .collect::<Vec<_>>()
    );
    for row in &table.rows {
        assert!(
            row.rayleigh_ok,
            "Rayleigh inequality failed on a sampled iterate: {row:?}"
        );
    }
    println!(
        "[acceptance] criterion 12 (borderline scan: 36/36 runs trivial or recorded non-convergence, \
         Rayleigh inequality on every sampled iterate; consistency evidence, not proof): PASS"
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pqlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn criterion_13_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    std::fs::write(
        &cfg,
        "spec.N = 3\nspec.p = 2.0\nspec.q = 1.5\nspec.s = 1.5\nspec.nu = 1.0\n\
         mesh.n = 96\nmesh.grading = 1.5\nscan.mu = 0.0\nscan.inits = 3\n\
         scan.max_iters = 4000\nseed = 7\n",
    )
    .unwrap();
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    let out3 = dir.path().join("r3");

    // same config, different thread counts
    let s1 = run_cli(&[
        "nonexist-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(s1.status.success(), "{}", String::from_utf8_lossy(&s1.stderr));
    let s2 = run_cli(&[
        "nonexist-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "3",
    ]);
    assert!(s2.status.success(), "{}", String::from_utf8_lossy(&s2.stderr));
    for file in ["manifest.txt", "scan.csv", "scan_summary.csv"] {
        assert_eq!(
            read(&out1.join(file)),
            read(&out2.join(file)),
            "{file} differs across thread counts"
        );
    }

    // rerunning the manifest reproduces the run byte for byte
    let s3 = run_cli(&[
        "nonexist-scan",
        "--config",
        out1.join("manifest.txt").to_str().unwrap(),
        "--out",
        out3.to_str().unwrap(),
    ]);
    assert!(s3.status.success(), "{}", String::from_utf8_lossy(&s3.stderr));
    for file in ["manifest.txt", "scan.csv", "scan_summary.csv"] {
        assert_eq!(
            read(&out1.join(file)),
            read(&out3.join(file)),
            "{file} differs when rerun from the manifest"
        );
    }

    // a second command class for coverage: pure floating-point pipeline
    let sweep_cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &sweep_cfg,
        "spec.N = 4\nspec.p = 2.0\nspec.q = 1.5\nspec.s = 3.5\nspec.b = 1.0\n\
         spec.nu = 1.0\nschedule.eps = geom:1e-1:1e-3:5\n",
    )
    .unwrap();
    let w1 = dir.path().join("w1");
    let w2 = dir.path().join("w2");
    for out in [&w1, &w2] {
        let s = run_cli(&[
            "level-sweep",
            "--config",
            sweep_cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    }
    assert_eq!(
        read(&w1.join("sweep.csv")),
        read(&w2.join("sweep.csv")),
        "sweep.csv differs between identical runs"
    );
    println!("[acceptance] criterion 13 (byte-identical CSVs across reruns, thread counts, and manifest replay): PASS");
}

/// Shared-mesh helper used by a few criteria; kept here so the suite builds
/// meshes through one code path.
#[allow(dead_code)]
fn unit_ball_mesh(cells: usize) -> Arc<RadialMesh> {
    build_mesh(3, 1.0, cells, 1.0).unwrap()
}

/// The suite above must never silence a failed criterion: descent is only
/// referenced through the scan, but keep the import exercised in case the
/// scan implementation changes.
#[allow(dead_code)]
fn _descent_reference(model: &Model, init: RadialField, opts: &DescentOptions) {
    let _ = descent(model, init, opts);
}
