//! One function per subcommand. Each resolves its parameters, writes the
//! manifest, runs the computation, and emits CSV tables.

use pqlab::bubble::{
    gradient_p_rate, gradient_q_rate, power_integral_rate, BubbleParams, CutoffProfile, ThetaRate,
};
use pqlab::classify::{kappa_window, q_regime_boundary, region_map};
use pqlab::mesh::build_mesh;
use pqlab::mountain_pass::epsilon_sweep;
use pqlab::pohozaev::{
    manufactured_solution, nonexistence_scan, pohozaev_residual, recombination_residual,
    tested_identity_check, volume_identity_check, ManufacturedProfile, ScanOutcome,
};
use pqlab::ratefit::fit_rate;
use pqlab::solver::{rayleigh_min, sobolev_constant, sobolev_constant_minimized, DescentOptions};

use crate::config::{Config, ConfigError};
use crate::output::{fmt_f64, fmt_opt, list_value, OutDir};
use crate::AppError;

fn config_err(msg: impl Into<String>) -> AppError {
    AppError::Config(ConfigError(msg.into()))
}

/// `classify`: admissibility raster over a (q, s) grid at fixed (N, p).
pub fn classify(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let dim = cfg.require_u32("spec.N").map_err(AppError::Config)?;
    let p = cfg.require_f64("spec.p").map_err(AppError::Config)?;
    let q_grid = cfg.require_list("grid.q").map_err(AppError::Config)?;
    let s_grid = cfg.require_list("grid.s").map_err(AppError::Config)?;
    let kind = cfg.str_or("map.kind", "fixed").to_string();
    let perturbed = match kind.as_str() {
        "fixed" => false,
        "perturbed" => true,
        other => return Err(config_err(format!("map.kind `{other}` (fixed|perturbed)"))),
    };

    out.write_manifest(
        "classify",
        &[
            ("spec.N".into(), dim.to_string()),
            ("spec.p".into(), fmt_f64(p)),
            ("grid.q".into(), list_value(&q_grid)),
            ("grid.s".into(), list_value(&s_grid)),
            ("map.kind".into(), kind.clone()),
        ],
    )
    .map_err(AppError::Config)?;

    let cells = region_map(dim, p, &q_grid, &s_grid, perturbed)?;
    let boundary = q_regime_boundary(dim, p);
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            // the coupling window is defined only on the slow-decay branch
            // of the unperturbed problem
            let window = if !perturbed && c.q > 1.0 && c.q < p && c.q < boundary && c.s >= c.q {
                kappa_window(dim, p, c.q, c.s).ok()
            } else {
                None
            };
            vec![
                fmt_f64(c.q),
                fmt_f64(c.s),
                c.verdict.admissible.to_string(),
                c.verdict.case_tag.to_string(),
                fmt_opt(Some(c.verdict.threshold_s)),
                fmt_opt(window.map(|w| w.lower)),
                fmt_opt(window.map(|w| w.upper)),
                window.map(|w| w.feasible.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    out.write_csv(
        "region_map.csv",
        &[
            "q",
            "s",
            "admissible",
            "case",
            "threshold_s",
            "kappa_lower",
            "kappa_upper",
            "kappa_feasible",
        ],
        &rows,
    )
    .map_err(AppError::Config)?;
    Ok(())
}

fn theta_fit(
    rate: ThetaRate,
    kappa: Option<f64>,
    samples: &[(f64, f64)],
) -> Result<(Option<f64>, f64, bool, f64), AppError> {
    // with delta = eps^kappa the predicted slope couples both exponents;
    // a constant delta contributes no slope
    let predicted = match kappa {
        Some(k) => Some(rate.coupled_exponent(k)),
        None => Some(rate.eps_exponent),
    };
    let with_log = rate.log_power != 0;
    let fit = fit_rate(samples, with_log)?;
    Ok((predicted, fit.slope, with_log, fit.r_squared))
}

/// `bubble-rates`: concentration-family integrals over an eps schedule plus
/// fitted decay slopes against the closed-form rate tables.
pub fn bubble_rates(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let spec = cfg.problem_spec().map_err(AppError::Config)?;
    let schedule = cfg.schedule().map_err(AppError::Config)?;
    if schedule.len() < 4 {
        return Err(config_err("schedule.eps needs at least 4 points to fit"));
    }
    let kappa = match cfg.get("schedule.kappa") {
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|e| config_err(format!("schedule.kappa: {e}")))?,
        ),
        None => {
            let deltas: Vec<f64> = schedule.iter().map(|&(_, d)| d).collect();
            if deltas.windows(2).all(|w| w[0] == w[1]) {
                None // constant delta: plain eps exponents apply
            } else {
                return Err(config_err(
                    "varying schedule.delta without schedule.kappa has no closed-form slope; \
                     use schedule.kappa or a constant delta",
                ));
            }
        }
    };

    let mut manifest = vec![
        ("spec.N".into(), spec.dim.to_string()),
        ("spec.p".into(), fmt_f64(spec.p)),
        ("spec.q".into(), fmt_f64(spec.q)),
        ("spec.s".into(), fmt_f64(spec.s)),
        ("spec.b".into(), fmt_f64(spec.b)),
        ("spec.nu".into(), fmt_f64(spec.nu)),
        ("spec.mu".into(), fmt_f64(spec.mu)),
        ("spec.radius".into(), fmt_f64(spec.radius)),
        ("spec.rho".into(), fmt_f64(spec.rho)),
        (
            "schedule.eps".into(),
            list_value(&schedule.iter().map(|&(e, _)| e).collect::<Vec<_>>()),
        ),
    ];
    match kappa {
        Some(k) => manifest.push(("schedule.kappa".into(), fmt_f64(k))),
        None => manifest.push((
            "schedule.delta".into(),
            list_value(&schedule.iter().map(|&(_, d)| d).collect::<Vec<_>>()),
        )),
    }
    out.write_manifest("bubble-rates", &manifest)
        .map_err(AppError::Config)?;

    let sobolev = sobolev_constant(spec.dim, spec.p)?;
    let cutoff = CutoffProfile::quintic(spec.rho)?;
    let mut rows = Vec::new();
    let mut grad_q_samples = Vec::new();
    let mut power_samples = Vec::new();
    let mut excess_samples = Vec::new();
    for &(eps, delta) in &schedule {
        let params = BubbleParams::new(eps, delta, spec.dim, spec.p, cutoff)?.normalize()?;
        let grad_p = params.grad_norm_p()?;
        let grad_q = params.grad_norm_q(spec.q)?;
        let power_s = params.power_integral(spec.s)?;
        let excess = grad_p - sobolev;
        rows.push(vec![
            fmt_f64(eps),
            fmt_f64(delta),
            fmt_f64(grad_p),
            fmt_f64(grad_q),
            fmt_f64(power_s),
            fmt_f64(excess),
        ]);
        grad_q_samples.push((eps, grad_q));
        power_samples.push((eps, power_s));
        excess_samples.push((eps, excess));
    }
    out.write_csv(
        "rates.csv",
        &["eps", "delta", "grad_p", "grad_q", "power_s", "excess_grad_p"],
        &rows,
    )
    .map_err(AppError::Config)?;

    let fits = [
        (
            "excess_grad_p",
            theta_fit(gradient_p_rate(spec.dim, spec.p), kappa, &excess_samples)?,
        ),
        (
            "grad_q",
            theta_fit(
                gradient_q_rate(spec.dim, spec.p, spec.q),
                kappa,
                &grad_q_samples,
            )?,
        ),
        (
            "power_s",
            theta_fit(
                power_integral_rate(spec.dim, spec.p, spec.s),
                kappa,
                &power_samples,
            )?,
        ),
    ];
    let fit_rows: Vec<Vec<String>> = fits
        .iter()
        .map(|(name, (predicted, slope, with_log, r2))| {
            vec![
                name.to_string(),
                fmt_f64(*slope),
                fmt_opt(*predicted),
                with_log.to_string(),
                fmt_f64(*r2),
            ]
        })
        .collect();
    out.write_csv(
        "rate_fits.csv",
        &[
            "quantity",
            "fitted_slope",
            "predicted_exponent",
            "log_corrected",
            "r_squared",
        ],
        &fit_rows,
    )
    .map_err(AppError::Config)?;
    Ok(())
}

/// `level-sweep`: ray-maximum level estimates along a concentration schedule.
pub fn level_sweep(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let spec = cfg.problem_spec().map_err(AppError::Config)?;
    let schedule = cfg.schedule().map_err(AppError::Config)?;

    let mut manifest = vec![
        ("spec.N".into(), spec.dim.to_string()),
        ("spec.p".into(), fmt_f64(spec.p)),
        ("spec.q".into(), fmt_f64(spec.q)),
        ("spec.s".into(), fmt_f64(spec.s)),
        ("spec.b".into(), fmt_f64(spec.b)),
        ("spec.nu".into(), fmt_f64(spec.nu)),
        ("spec.mu".into(), fmt_f64(spec.mu)),
        ("spec.radius".into(), fmt_f64(spec.radius)),
        ("spec.rho".into(), fmt_f64(spec.rho)),
        (
            "schedule.eps".into(),
            list_value(&schedule.iter().map(|&(e, _)| e).collect::<Vec<_>>()),
        ),
        (
            "schedule.delta".into(),
            list_value(&schedule.iter().map(|&(_, d)| d).collect::<Vec<_>>()),
        ),
    ];
    // kappa (when present) is already folded into schedule.delta; echo it
    // for the reader but keep delta authoritative
    if let Some(k) = cfg.get("schedule.kappa") {
        let k: f64 = k
            .parse()
            .map_err(|e| config_err(format!("schedule.kappa: {e}")))?;
        manifest.push(("schedule.kappa.resolved".into(), fmt_f64(k)));
    }
    out.write_manifest("level-sweep", &manifest)
        .map_err(AppError::Config)?;

    let table = epsilon_sweep(&spec, &schedule)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.estimate.eps),
                fmt_f64(r.estimate.delta),
                fmt_f64(r.estimate.t_max),
                fmt_f64(r.estimate.phi_max),
                fmt_f64(r.estimate.c_star),
                fmt_f64(r.estimate.margin),
                r.flagged.to_string(),
                fmt_f64(r.quotient_grad),
                fmt_f64(r.quotient_scale),
            ]
        })
        .collect();
    out.write_csv(
        "sweep.csv",
        &[
            "eps",
            "delta",
            "t_max",
            "phi_max",
            "c_star",
            "margin",
            "flagged",
            "quotient_grad",
            "quotient_scale",
        ],
        &rows,
    )
    .map_err(AppError::Config)?;
    Ok(())
}

/// `eigen`: least Rayleigh quotient of the m-gradient over the mesh space.
pub fn eigen(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let dim = cfg.require_u32("spec.N").map_err(AppError::Config)?;
    let radius = cfg.f64_or("spec.radius", 1.0).map_err(AppError::Config)?;
    let m = cfg.require_f64("eigen.m").map_err(AppError::Config)?;
    let (n, grading) = cfg.mesh_params().map_err(AppError::Config)?;

    out.write_manifest(
        "eigen",
        &[
            ("spec.N".into(), dim.to_string()),
            ("spec.radius".into(), fmt_f64(radius)),
            ("eigen.m".into(), fmt_f64(m)),
            ("mesh.n".into(), n.to_string()),
            ("mesh.grading".into(), fmt_f64(grading)),
        ],
    )
    .map_err(AppError::Config)?;

    let mesh = build_mesh(dim, radius, n, grading)?;
    let eig = rayleigh_min(&mesh, m)?;
    if !eig.converged {
        return Err(AppError::Numerical(format!(
            "eigenvalue iteration did not converge after {} iterations",
            eig.iters
        )));
    }
    out.write_csv(
        "eigen.csv",
        &["m", "value", "iters", "converged"],
        &[vec![
            fmt_f64(m),
            fmt_f64(eig.value),
            eig.iters.to_string(),
            eig.converged.to_string(),
        ]],
    )
    .map_err(AppError::Config)?;

    let mut rows: Vec<Vec<String>> = eig
        .field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &u)| vec![fmt_f64(mesh.nodes()[i]), fmt_f64(u)])
        .collect();
    rows.push(vec![fmt_f64(radius), fmt_f64(0.0)]);
    out.write_csv("eigenfunction.csv", &["r", "u"], &rows)
        .map_err(AppError::Config)?;
    Ok(())
}

/// `sobolev`: the embedding constant by the two independent estimators.
pub fn sobolev(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let dim = cfg.require_u32("spec.N").map_err(AppError::Config)?;
    let p = cfg.require_f64("spec.p").map_err(AppError::Config)?;
    let radius = cfg.f64_or("spec.radius", 1.0).map_err(AppError::Config)?;
    let (n, grading) = cfg.mesh_params().map_err(AppError::Config)?;

    out.write_manifest(
        "sobolev",
        &[
            ("spec.N".into(), dim.to_string()),
            ("spec.p".into(), fmt_f64(p)),
            ("spec.radius".into(), fmt_f64(radius)),
            ("mesh.n".into(), n.to_string()),
            ("mesh.grading".into(), fmt_f64(grading)),
        ],
    )
    .map_err(AppError::Config)?;

    let extrapolated = sobolev_constant(dim, p)?;
    let minimized = sobolev_constant_minimized(dim, p, radius, n, grading)?;
    out.write_csv(
        "sobolev.csv",
        &["method", "value", "radius", "cells", "grading"],
        &[
            vec![
                "extrapolated".into(),
                fmt_f64(extrapolated),
                String::new(),
                String::new(),
                String::new(),
            ],
            vec![
                "minimized".into(),
                fmt_f64(minimized),
                fmt_f64(radius),
                n.to_string(),
                fmt_f64(grading),
            ],
        ],
    )
    .map_err(AppError::Config)?;
    Ok(())
}

/// `pohozaev`: identity residuals for a manufactured solution pair.
pub fn pohozaev(cfg: &Config, out: &OutDir) -> Result<(), AppError> {
    let spec = cfg.problem_spec().map_err(AppError::Config)?;
    let (n, grading) = cfg.mesh_params().map_err(AppError::Config)?;
    let profile_name = cfg.str_or("pohozaev.profile", "cosine").to_string();
    let profile = match profile_name.as_str() {
        "parabola" => ManufacturedProfile::Parabola,
        "cosine" => ManufacturedProfile::Cosine,
        other => {
            return Err(config_err(format!(
                "pohozaev.profile `{other}` (parabola|cosine)"
            )))
        }
    };

    out.write_manifest(
        "pohozaev",
        &[
            ("spec.N".into(), spec.dim.to_string()),
            ("spec.p".into(), fmt_f64(spec.p)),
            ("spec.q".into(), fmt_f64(spec.q)),
            ("spec.s".into(), fmt_f64(spec.s)),
            ("spec.radius".into(), fmt_f64(spec.radius)),
            ("spec.rho".into(), fmt_f64(spec.rho)),
            ("mesh.n".into(), n.to_string()),
            ("mesh.grading".into(), fmt_f64(grading)),
            ("pohozaev.profile".into(), profile_name.clone()),
        ],
    )
    .map_err(AppError::Config)?;

    let mesh = build_mesh(spec.dim, spec.radius, n, grading)?;
    let (u, nl) = manufactured_solution(profile, &spec, &mesh)?;
    let combined = pohozaev_residual(&u, &nl, &spec);
    let volume = volume_identity_check(&u, &nl, &spec);
    let tested = tested_identity_check(&u, &nl, &spec);
    let recombination = recombination_residual(&volume, &tested, &combined, spec.dim, spec.p);

    let rows = vec![
        vec!["combined".into(), "gradq_term".into(), fmt_f64(combined.gradq_term)],
        vec!["combined".into(), "potential_term".into(), fmt_f64(combined.potential_term)],
        vec!["combined".into(), "boundary_term".into(), fmt_f64(combined.boundary_term)],
        vec!["combined".into(), "residual".into(), fmt_f64(combined.residual)],
        vec!["combined".into(), "relative".into(), fmt_f64(combined.relative())],
        vec!["volume".into(), "gradp_term".into(), fmt_f64(volume.gradp_term)],
        vec!["volume".into(), "gradq_term".into(), fmt_f64(volume.gradq_term)],
        vec!["volume".into(), "potential_term".into(), fmt_f64(volume.potential_term)],
        vec!["volume".into(), "boundary_term".into(), fmt_f64(volume.boundary_term)],
        vec!["volume".into(), "residual".into(), fmt_f64(volume.residual)],
        vec!["tested".into(), "gradp_term".into(), fmt_f64(tested.gradp_term)],
        vec!["tested".into(), "gradq_term".into(), fmt_f64(tested.gradq_term)],
        vec!["tested".into(), "source_term".into(), fmt_f64(tested.source_term)],
        vec!["tested".into(), "residual".into(), fmt_f64(tested.residual)],
        vec!["recombination".into(), "relative".into(), fmt_f64(recombination)],
    ];
    out.write_csv("pohozaev.csv", &["identity", "quantity", "value"], &rows)
        .map_err(AppError::Config)?;
    Ok(())
}

/// `nonexist-scan`: borderline descent experiment over a mu grid.
pub fn nonexist_scan(cfg: &Config, out: &OutDir, seed: u64) -> Result<(), AppError> {
    let base = cfg.problem_spec().map_err(AppError::Config)?;
    let (n, grading) = cfg.mesh_params().map_err(AppError::Config)?;
    let mu_grid = cfg.list_or("scan.mu", &[base.mu]).map_err(AppError::Config)?;
    let inits = cfg.usize_or("scan.inits", 10).map_err(AppError::Config)?;
    let max_iters = cfg.usize_or("scan.max_iters", 20_000).map_err(AppError::Config)?;
    let sample_every = cfg.usize_or("scan.sample_every", 500).map_err(AppError::Config)?;

    out.write_manifest(
        "nonexist-scan",
        &[
            ("spec.N".into(), base.dim.to_string()),
            ("spec.p".into(), fmt_f64(base.p)),
            ("spec.q".into(), fmt_f64(base.q)),
            ("spec.s".into(), fmt_f64(base.s)),
            ("spec.b".into(), fmt_f64(base.b)),
            ("spec.nu".into(), fmt_f64(base.nu)),
            ("spec.mu".into(), fmt_f64(base.mu)),
            ("spec.radius".into(), fmt_f64(base.radius)),
            ("spec.rho".into(), fmt_f64(base.rho)),
            ("mesh.n".into(), n.to_string()),
            ("mesh.grading".into(), fmt_f64(grading)),
            ("scan.mu".into(), list_value(&mu_grid)),
            ("scan.inits".into(), inits.to_string()),
            ("scan.max_iters".into(), max_iters.to_string()),
            ("scan.sample_every".into(), sample_every.to_string()),
            ("seed".into(), seed.to_string()),
        ],
    )
    .map_err(AppError::Config)?;

    let mesh = build_mesh(base.dim, base.radius, n, grading)?;
    let specs: Vec<_> = mu_grid
        .iter()
        .map(|&mu| pqlab::ProblemSpec { mu, ..base })
        .collect();
    let opts = DescentOptions {
        max_iters,
        sample_every: Some(sample_every),
        ..DescentOptions::default()
    };
    let table = nonexistence_scan(&specs, &mesh, inits, seed, &opts)?;

    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.mu),
                r.init_label.clone(),
                r.outcome.as_str().to_string(),
                fmt_f64(r.final_norm),
                fmt_f64(r.final_energy),
                fmt_f64(r.residual),
                r.iters.to_string(),
                r.rayleigh_ok.to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "scan.csv",
        &[
            "mu",
            "init",
            "outcome",
            "final_norm",
            "final_energy",
            "residual",
            "iters",
            "rayleigh_ok",
        ],
        &rows,
    )
    .map_err(AppError::Config)?;

    let trivial = table
        .rows
        .iter()
        .filter(|r| r.outcome == ScanOutcome::Trivial)
        .count();
    let nonconv = table
        .rows
        .iter()
        .filter(|r| r.outcome == ScanOutcome::NonConverged)
        .count();
    let nontrivial = table.rows.len() - trivial - nonconv;
    out.write_csv(
        "scan_summary.csv",
        &[
            "mu1",
            "runs",
            "trivial",
            "non_converged",
            "nontrivial",
            "all_rayleigh_ok",
        ],
        &[vec![
            fmt_f64(table.mu1),
            table.rows.len().to_string(),
            trivial.to_string(),
            nonconv.to_string(),
            nontrivial.to_string(),
            table.rows.iter().all(|r| r.rayleigh_ok).to_string(),
        ]],
    )
    .map_err(AppError::Config)?;
    Ok(())
}

