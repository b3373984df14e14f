//! Fibering-map analysis along bubble rays and level-vs-threshold bookkeeping.
//!
//! Restricting the energy to the ray t -> t v through a normalized bubble v
//! gives the fibering profile
//!
//! ```text
//!   phi(t) = (t^p/p) A + nu (t^q/q) B - b t^s C - t^{p*}/p*,
//!   A = int |grad v|^p,  B = int |grad v|^q,  C = int v^s,
//! ```
//!
//! whose maximum over t > 0 bounds the mountain-pass level from above. When
//! that maximum dips below the compactness threshold S^{N/p}/N the
//! concentration-compactness argument produces a nontrivial critical point;
//! this module measures the margin, sweeps it over concentration schedules,
//! and converts a positive margin at nu = 0 into a certified range of nu.

use crate::bubble::{BubbleParams, CutoffProfile};
use crate::error::{Error, Result};
use crate::problem::{threshold_energy, ProblemSpec};
use crate::ratefit::{fit_rate, RateFit};
use crate::solver::sobolev_constant;

/// Ray-restriction coefficients of one profile, with the exponent and
/// coupling data needed to evaluate the fibering map.
#[derive(Debug, Clone, Copy)]
pub struct FiberingCoefficients {
    /// int |grad v|^p.
    pub grad_p: f64,
    /// int |grad v|^q.
    pub grad_q: f64,
    /// int v^s.
    pub power_s: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub p_star: f64,
    pub b: f64,
    pub nu: f64,
}

impl FiberingCoefficients {
    // nine named scalars form one cohesive record; a builder would add
    // ceremony without preventing any mix-up a positional call allows
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grad_p: f64,
        grad_q: f64,
        power_s: f64,
        p: f64,
        q: f64,
        s: f64,
        p_star: f64,
        b: f64,
        nu: f64,
    ) -> Result<Self> {
        if !(grad_p > 0.0 && power_s > 0.0 && grad_q >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "need A, C > 0 and B >= 0, got A={grad_p}, B={grad_q}, C={power_s}"
            )));
        }
        if !(1.0 < q && q < p && p < p_star) {
            return Err(Error::ExponentOrder(format!(
                "need 1 < q < p < p*, got q={q}, p={p}, p*={p_star}"
            )));
        }
        if !(b >= 0.0 && nu >= 0.0 && s > 1.0) {
            return Err(Error::OutOfRange(format!(
                "need b, nu >= 0 and s > 1, got b={b}, nu={nu}, s={s}"
            )));
        }
        Ok(FiberingCoefficients {
            grad_p,
            grad_q,
            power_s,
            p,
            q,
            s,
            p_star,
            b,
            nu,
        })
    }

    /// Coefficients of the spec's energy along the ray through a normalized
    /// bubble (so the critical integral is exactly 1).
    pub fn from_bubble(spec: &ProblemSpec, params: &BubbleParams) -> Result<Self> {
        FiberingCoefficients::new(
            params.grad_norm_p()?,
            params.grad_norm_q(spec.q)?,
            params.power_integral(spec.s)?,
            spec.p,
            spec.q,
            spec.s,
            spec.p_star(),
            spec.b,
            spec.nu,
        )
    }
}

/// phi(t) and phi'(t).
pub fn fibering_profile(c: &FiberingCoefficients, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("t = {t}, need >= 0")));
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let phi = t.powf(c.p) / c.p * c.grad_p + c.nu * t.powf(c.q) / c.q * c.grad_q
        - c.b * t.powf(c.s) * c.power_s
        - t.powf(c.p_star) / c.p_star;
    let dphi = t.powf(c.p - 1.0) * c.grad_p + c.nu * t.powf(c.q - 1.0) * c.grad_q
        - c.s * c.b * t.powf(c.s - 1.0) * c.power_s
        - t.powf(c.p_star - 1.0);
    Ok((phi, dphi))
}

/// Global maximum of phi over t > 0. Sign changes of phi' are located on a
/// 1000-point log grid spanning [1e-6, 1e6] times the natural scale
/// A^{1/(p*-p)}, then refined by bisection; with several critical points the
/// largest value wins.
pub fn fibering_max(c: &FiberingCoefficients) -> Result<(f64, f64)> {
    let scale = c.grad_p.powf(1.0 / (c.p_star - c.p));
    let grid_points = 1000;
    let lo = 1e-6 * scale;
    let hi = 1e6 * scale;
    let step = (hi / lo).powf(1.0 / (grid_points - 1) as f64);

    let mut best: Option<(f64, f64)> = None;
    let mut consider = |t: f64, phi: f64| {
        if best.is_none_or(|(_, v)| phi > v) {
            best = Some((t, phi));
        }
    };

    let mut t_prev = lo;
    let (_, mut d_prev) = fibering_profile(c, t_prev)?;
    for i in 1..grid_points {
        let t = lo * step.powi(i);
        let (phi, d) = fibering_profile(c, t)?;
        if d == 0.0 {
            consider(t, phi);
        } else if d_prev > 0.0 && d < 0.0 {
            // descending sign change brackets a local maximum
            let (mut a, mut b_end) = (t_prev, t);
            for _ in 0..200 {
                let m = 0.5 * (a + b_end);
                let (_, dm) = fibering_profile(c, m)?;
                if dm > 0.0 {
                    a = m;
                } else {
                    b_end = m;
                }
                if (b_end - a) <= f64::EPSILON * b_end {
                    break;
                }
            }
            let root = 0.5 * (a + b_end);
            let (phi_root, _) = fibering_profile(c, root)?;
            consider(root, phi_root);
        }
        t_prev = t;
        d_prev = d;
    }

    best.ok_or_else(|| {
        Error::BracketFailure(format!(
            "no descending sign change of phi' in [{lo:.3e}, {hi:.3e}]"
        ))
    })
}

/// The limiting maximizer t_0 = S^{(N-p)/p^2} of the clean (b = nu = 0)
/// profile as the gradient integral approaches the Sobolev constant.
pub fn limit_root(sobolev: f64, dim: u32, p: f64) -> Result<f64> {
    if !(sobolev > 0.0 && sobolev.is_finite()) {
        return Err(Error::OutOfRange(format!("S = {sobolev}, need > 0")));
    }
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::OutOfRange(format!("need 1 < p < N, got p={p}, N={dim}")));
    }
    Ok(sobolev.powf((n - p) / (p * p)))
}

/// One level-vs-threshold comparison.
#[derive(Debug, Clone, Copy)]
pub struct LevelEstimate {
    pub t_max: f64,
    pub phi_max: f64,
    pub c_star: f64,
    /// c_star - phi_max; positive means the ray maximum sits below the
    /// compactness threshold.
    pub margin: f64,
    pub eps: f64,
    pub delta: f64,
}

/// Ray upper bound for the spec along a normalized bubble, compared against
/// the threshold built from the supplied Sobolev constant.
pub fn level_upper_bound_with(
    spec: &ProblemSpec,
    params: &BubbleParams,
    sobolev: f64,
) -> Result<LevelEstimate> {
    let coeffs = FiberingCoefficients::from_bubble(spec, params)?;
    let (t_max, phi_max) = fibering_max(&coeffs)?;
    let c_star = threshold_energy(sobolev, spec.dim, spec.p)?;
    Ok(LevelEstimate {
        t_max,
        phi_max,
        c_star,
        margin: c_star - phi_max,
        eps: params.eps,
        delta: params.delta,
    })
}

/// As [`level_upper_bound_with`], computing the Sobolev constant internally.
pub fn level_upper_bound(spec: &ProblemSpec, params: &BubbleParams) -> Result<LevelEstimate> {
    let sobolev = sobolev_constant(spec.dim, spec.p)?;
    level_upper_bound_with(spec, params, sobolev)
}

/// One sweep row: the level estimate plus the two competition quotients
/// whose decay drives the margin positive.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub estimate: LevelEstimate,
    /// nu int|grad v|^q / int v^s.
    pub quotient_grad: f64,
    /// (eps/delta)^{(N-p)/(p-1)} / int v^s.
    pub quotient_scale: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Index of the first row with positive margin; None means the schedule
    /// was inconclusive.
    pub first_flagged: Option<usize>,
}

/// Runs the level estimate over a concentration schedule of (eps, delta)
/// pairs with strictly decreasing eps/delta.
pub fn epsilon_sweep(spec: &ProblemSpec, schedule: &[(f64, f64)]) -> Result<SweepTable> {
    if schedule.is_empty() {
        return Err(Error::Precondition("empty sweep schedule".into()));
    }
    let mut prev = f64::INFINITY;
    for &(eps, delta) in schedule {
        if !(delta > 0.0) {
            return Err(Error::OutOfRange(format!("delta = {delta}, need > 0")));
        }
        let ratio = eps / delta;
        if !(ratio < prev) {
            return Err(Error::Precondition(format!(
                "schedule eps/delta must strictly decrease, got {ratio} after {prev}"
            )));
        }
        prev = ratio;
    }
    let sobolev = sobolev_constant(spec.dim, spec.p)?;
    let cutoff = CutoffProfile::quintic(spec.rho)?;
    let mut rows = Vec::with_capacity(schedule.len());
    let mut first_flagged = None;
    for (i, &(eps, delta)) in schedule.iter().enumerate() {
        let params = BubbleParams::new(eps, delta, spec.dim, spec.p, cutoff)?.normalize()?;
        let estimate = level_upper_bound_with(spec, &params, sobolev)?;
        let (quotient_grad, quotient_scale) = params.quotient_ratios(spec.s, spec.q, spec.nu)?;
        let flagged = estimate.margin > 0.0;
        if flagged && first_flagged.is_none() {
            first_flagged = Some(i);
        }
        rows.push(SweepRow {
            estimate,
            quotient_grad,
            quotient_scale,
            flagged,
        });
    }
    Ok(SweepTable { rows, first_flagged })
}

/// Decay exponent of the scale quotient eps^{(N-p)/(p-1)} / int v_eps^s at
/// delta = 1, with the regime boundary at s = N(p-1)/(N-p). The boundary
/// case decays like eps^{exponent} / |log eps| (second return flag).
pub fn perturbed_decay_rate(dim: u32, p: f64, s: f64) -> (f64, bool) {
    let n = dim as f64;
    let boundary = n * (p - 1.0) / (n - p);
    if s > boundary {
        (
            ((n - p) * (p - 1.0) * s - (n * p - 2.0 * n + p) * p) / (p * (p - 1.0)),
            false,
        )
    } else if s == boundary {
        ((n - p * p) / (p * (p - 1.0)), true)
    } else {
        ((n - p) * (p - s) / (p * (p - 1.0)), false)
    }
}

/// Measured decay of the scale quotient against its predicted rate.
#[derive(Debug, Clone)]
pub struct PerturbedCheck {
    /// (eps, quotient) samples at delta = 1.
    pub rows: Vec<(f64, f64)>,
    pub predicted_exponent: f64,
    /// True when the prediction carries a 1/|log eps| factor; the fit is
    /// then performed on log-premultiplied samples.
    pub log_corrected: bool,
    pub fit: RateFit,
}

/// Evaluates the scale quotient over an eps schedule (nu treated as 0,
/// delta = 1) and fits its decay for comparison with the predicted rate.
pub fn perturbed_threshold_check(spec: &ProblemSpec, eps_schedule: &[f64]) -> Result<PerturbedCheck> {
    let cutoff = CutoffProfile::quintic(spec.rho)?;
    let n = spec.dim as f64;
    let scale_power = (n - spec.p) / (spec.p - 1.0);
    let mut rows = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let params = BubbleParams::new(eps, 1.0, spec.dim, spec.p, cutoff)?.normalize()?;
        let quotient = eps.powf(scale_power) / params.power_integral(spec.s)?;
        rows.push((eps, quotient));
    }
    let (predicted_exponent, log_corrected) = perturbed_decay_rate(spec.dim, spec.p, spec.s);
    let fit_samples: Vec<(f64, f64)> = if log_corrected {
        // value ~ eps^e / |log eps|: premultiply so a plain fit sees eps^e
        rows.iter().map(|&(e, v)| (e, v * e.ln().abs())).collect()
    } else {
        rows.clone()
    };
    let fit = fit_rate(&fit_samples, false)?;
    Ok(PerturbedCheck {
        rows,
        predicted_exponent,
        log_corrected,
        fit,
    })
}

/// Largest nu for which a margin won at nu = 0 certifiably survives adding
/// the q-gradient term along the whole ray path: nu0 = q * margin / max
/// path q-energy.
pub fn nu_transfer(level_at_nu0: &LevelEstimate, gamma_max_gradq: f64, q: f64) -> Result<f64> {
    if !(level_at_nu0.margin > 0.0) {
        return Err(Error::Precondition(format!(
            "margin {} is not positive",
            level_at_nu0.margin
        )));
    }
    if !(gamma_max_gradq > 0.0 && q > 1.0) {
        return Err(Error::OutOfRange(format!(
            "need path energy > 0 and q > 1, got {gamma_max_gradq}, {q}"
        )));
    }
    Ok(q * level_at_nu0.margin / gamma_max_gradq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean_coeffs(a: f64, dim: u32, p: f64) -> FiberingCoefficients {
        let pstar = crate::problem::critical_exponent(dim, p).unwrap();
        FiberingCoefficients::new(a, 0.0, 1.0, p, 0.5 * (1.0 + p), 0.5 * (p + pstar), pstar, 0.0, 0.0)
            .unwrap()
    }

    #[test]
    fn profile_vanishes_at_zero() {
        let c = clean_coeffs(2.0, 4, 2.0);
        assert_eq!(fibering_profile(&c, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn clean_profile_matches_closed_form_maximum() {
        for (a, dim, p) in [(2.0, 4u32, 2.0f64), (0.7, 3, 2.0), (1.9, 5, 2.5)] {
            let c = clean_coeffs(a, dim, p);
            let n = dim as f64;
            let (t_max, phi_max) = fibering_max(&c).unwrap();
            let t_expect = a.powf(1.0 / (c.p_star - c.p));
            let phi_expect = a.powf(n / p) / n;
            assert!(
                (t_max - t_expect).abs() < 1e-10 * t_expect,
                "t {t_max} vs {t_expect}"
            );
            assert!(
                (phi_max - phi_expect).abs() < 1e-10 * phi_expect,
                "phi {phi_max} vs {phi_expect}"
            );
            // first-order condition holds at the reported point
            let (_, d) = fibering_profile(&c, t_max).unwrap();
            assert!(d.abs() < 1e-10 * phi_max.abs().max(1.0));
        }
    }

    #[test]
    fn maximum_beats_a_dense_grid_search() {
        let pstar = 4.0;
        let c =
            FiberingCoefficients::new(1.7, 0.9, 0.8, 2.0, 1.5, 3.0, pstar, 0.4, 0.6).unwrap();
        let (t_max, phi_max) = fibering_max(&c).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_t = 0.0;
        for i in 0..100_000 {
            let t = 1e-4 * (1e8f64).powf(i as f64 / 99_999.0);
            let (phi, _) = fibering_profile(&c, t).unwrap();
            if phi > best {
                best = phi;
                best_t = t;
            }
        }
        assert!(phi_max >= best - 1e-8 * best.abs(), "{phi_max} < grid {best}");
        assert!((best_t - t_max).abs() < 1e-3 * t_max, "{best_t} vs {t_max}");
        let (_, d) = fibering_profile(&c, t_max).unwrap();
        assert!(d.abs() < 1e-10 * phi_max.abs().max(1.0));
    }

    #[test]
    fn profile_eventually_heads_to_minus_infinity() {
        let c =
            FiberingCoefficients::new(2.0, 1.0, 1.0, 2.0, 1.5, 3.0, 4.0, 0.5, 1.0).unwrap();
        let (t_max, _) = fibering_max(&c).unwrap();
        let (phi, _) = fibering_profile(&c, 1e6 * t_max).unwrap();
        assert!(phi < 0.0);
    }

    #[test]
    fn maximum_is_nonincreasing_in_b() {
        let mut prev = f64::INFINITY;
        for b in [0.0, 0.1, 0.3, 1.0] {
            let c = FiberingCoefficients::new(2.0, 0.8, 0.9, 2.0, 1.5, 3.0, 4.0, b, 1.0).unwrap();
            let (_, phi_max) = fibering_max(&c).unwrap();
            assert!(phi_max <= prev + 1e-14);
            prev = phi_max;
        }
    }

    #[test]
    fn limit_root_identities() {
        assert_eq!(limit_root(1.0, 4, 2.0).unwrap(), 1.0);
        let s = 7.3;
        let t0 = limit_root(s, 5, 2.5).unwrap();
        // defining equation: S t0^p = t0^{p*}
        let pstar = crate::problem::critical_exponent(5, 2.5).unwrap();
        let lhs = s * t0.powf(2.5);
        let rhs = t0.powf(pstar);
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(limit_root(-1.0, 4, 2.0).is_err());
    }

    #[test]
    fn threshold_consistency_with_measured_constant() {
        // with A = S the clean maximum is exactly the compactness threshold
        let s = sobolev_constant(4, 2.0).unwrap();
        let c = clean_coeffs(s, 4, 2.0);
        let (_, phi_max) = fibering_max(&c).unwrap();
        let c_star = threshold_energy(s, 4, 2.0).unwrap();
        assert!(
            (phi_max - c_star).abs() < 1e-8 * c_star,
            "{phi_max} vs {c_star}"
        );
    }

    fn sweep_spec() -> ProblemSpec {
        ProblemSpec {
            dim: 4,
            p: 2.0,
            q: 1.5,
            s: 3.5,
            b: 1.0,
            nu: 1.0,
            mu: 0.0,
            radius: 1.0,
            rho: 1.0,
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn admissible_sweep_is_eventually_flagged() {
        let spec = sweep_spec();
        let schedule: Vec<(f64, f64)> = (0..5)
            .map(|i| (10f64.powf(-1.0 - 0.5 * i as f64), 1.0))
            .collect();
        let table = epsilon_sweep(&spec, &schedule).unwrap();
        assert!(table.first_flagged.is_some());
        let first = table.first_flagged.unwrap();
        assert!(table.rows[first].estimate.margin > 0.0);
        // quotients decrease along the schedule
        let q0 = table.rows[0].quotient_scale;
        let qlast = table.rows[4].quotient_scale;
        assert!(qlast < q0);
    }

    #[test]
    fn single_huge_eps_row_is_inconclusive() {
        let spec = sweep_spec();
        let table = epsilon_sweep(&spec, &[(0.5, 1.0)]).unwrap();
        assert!(table.first_flagged.is_none());
        assert!(!table.rows[0].flagged);
    }

    #[test]
    fn no_flag_when_the_gradient_quotient_cannot_vanish() {
        // b = 0 removes the only negative subcritical term; the ray maximum
        // then always sits above the threshold
        let spec = ProblemSpec {
            b: 0.0,
            q: 1.6,
            s: 3.0,
            ..sweep_spec()
        }
        .validated()
        .unwrap();
        let schedule: Vec<(f64, f64)> = (0..4)
            .map(|i| (10f64.powf(-1.0 - 0.5 * i as f64), 1.0))
            .collect();
        let table = epsilon_sweep(&spec, &schedule).unwrap();
        assert!(table.first_flagged.is_none());
    }

    #[test]
    fn sweep_rejects_bad_schedules() {
        let spec = sweep_spec();
        assert!(matches!(
            epsilon_sweep(&spec, &[]),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            epsilon_sweep(&spec, &[(1e-3, 1.0), (1e-2, 1.0)]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn perturbed_rate_reference_values() {
        // boundary: N = p^2 and s at the regime split
        let (e, log) = perturbed_decay_rate(4, 2.0, 2.0);
        assert_eq!(e, 0.0);
        assert!(log);
        let (e, log) = perturbed_decay_rate(4, 2.0, 3.0);
        assert!((e - 1.0).abs() < 1e-14);
        assert!(!log);
        let (e, log) = perturbed_decay_rate(3, 2.0, 1.7);
        assert!((e - 0.15).abs() < 1e-14);
        assert!(!log);
    }

    #[test]
    fn perturbed_quotient_decays_at_the_predicted_rate() {
        let schedule: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 - 0.5 * i as f64)).collect();

        let spec = ProblemSpec {
            dim: 4,
            s: 3.0,
            q: 1.5,
            ..sweep_spec()
        }
        .validated()
        .unwrap();
        let check = perturbed_threshold_check(&spec, &schedule).unwrap();
        assert!(!check.log_corrected);
        assert!(
            (check.fit.slope - check.predicted_exponent).abs()
                < 0.05 * check.predicted_exponent,
            "slope {} vs {}",
            check.fit.slope,
            check.predicted_exponent
        );

        // slow regime, small exponent: push the schedule further down
        let spec = ProblemSpec {
            dim: 3,
            p: 2.0,
            q: 1.2,
            s: 1.7,
            b: 1.0,
            nu: 1.0,
            mu: 0.0,
            radius: 1.0,
            rho: 1.0,
        }
        .validated()
        .unwrap();
        let schedule: Vec<f64> = (0..5).map(|i| 10f64.powf(-4.0 - 0.5 * i as f64)).collect();
        let check = perturbed_threshold_check(&spec, &schedule).unwrap();
        assert!(
            (check.fit.slope - 0.15).abs() < 0.05 * 0.15,
            "slope {} vs 0.15",
            check.fit.slope
        );
    }

    #[test]
    fn log_boundary_quotient_is_flat_after_premultiplication() {
        let spec = ProblemSpec {
            dim: 4,
            s: 2.0,
            q: 1.5,
            ..sweep_spec()
        }
        .validated()
        .unwrap();
        let schedule: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 - 0.5 * i as f64)).collect();
        let check = perturbed_threshold_check(&spec, &schedule).unwrap();
        assert!(check.log_corrected);
        assert_eq!(check.predicted_exponent, 0.0);
        assert!(check.fit.slope.abs() < 0.03, "slope {}", check.fit.slope);
        // the raw quotient still decays, just slower than any power
        assert!(check.rows[4].1 < check.rows[0].1);
    }

    #[test]
    fn transfer_bound_algebra() {
        let level = LevelEstimate {
            t_max: 1.0,
            phi_max: 0.9,
            c_star: 1.0,
            margin: 0.1,
            eps: 1e-3,
            delta: 1.0,
        };
        assert!((nu_transfer(&level, 1.0, 2.0).unwrap() - 0.2).abs() < 1e-15);
        // enormous path energy pushes the certified range to zero
        assert!(nu_transfer(&level, 1e12, 2.0).unwrap() < 1e-12);
        let bad = LevelEstimate {
            margin: -0.1,
            ..level
        };
        assert!(matches!(
            nu_transfer(&bad, 1.0, 2.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn transfer_produces_a_positive_range_for_an_admissible_spec() {
        // nu = 0 level with b = 1 wins a margin; the path q-energy then
        // certifies a positive nu range
        let spec = ProblemSpec {
            nu: 0.0,
            s: 3.0,
            q: 1.5,
            ..sweep_spec()
        }
        .validated()
        .unwrap();
        let cutoff = CutoffProfile::quintic(spec.rho).unwrap();
        let params = BubbleParams::new(1e-3, 1.0, spec.dim, spec.p, cutoff)
            .unwrap()
            .normalize()
            .unwrap();
        let sobolev = sobolev_constant(spec.dim, spec.p).unwrap();
        let level = level_upper_bound_with(&spec, &params, sobolev).unwrap();
        assert!(level.margin > 0.0, "margin {}", level.margin);

        // ray endpoint: march past the maximizer until the energy is negative
        let coeffs = FiberingCoefficients::from_bubble(&spec, &params).unwrap();
        let mut t_end = level.t_max;
        loop {
            let (phi, _) = fibering_profile(&coeffs, t_end).unwrap();
            if phi < 0.0 {
                break;
            }
            t_end *= 2.0;
        }
        let gamma_max = t_end.powf(spec.q) * coeffs.grad_q;
        let nu0 = nu_transfer(&level, gamma_max, spec.q).unwrap();
        assert!(nu0 > 0.0);
    }
}
