//! Aubin-Talenti-type concentration bubbles and their energy integrals.
//!
//! The two-parameter family is
//!
//! ```text
//!   u_{eps,delta}(x) = psi(x/delta) / (eps^{p'} + |x|^{p'})^{(N-p)/p},
//!   p' = p/(p-1),
//! ```
//!
//! with psi a radial cutoff equal to 1 on B_{rho/2} and supported in B_rho.
//! v_{eps,delta} denotes the same profile normalized in L^{p*}. The family
//! obeys exact scaling identities in delta:
//!
//! ```text
//!   u_{eps,delta}(x)       = delta^{-(N-p)/(p-1)}   u_{eps/delta,1}(x/delta)
//!   |u_{eps,delta}|_{p*}   = delta^{-(N-p)/(p(p-1))} |u_{eps/delta,1}|_{p*}
//!   int v_{eps,delta}^s    = delta^{(Np-(N-p)s)/p}  int v_{eps/delta,1}^s
//!   int |grad v_{eps,delta}|^q = delta^{N(p-q)/p}   int |grad v_{eps/delta,1}|^q
//! ```
//!
//! and concentration-rate laws as eps/delta -> 0: the p-gradient energy
//! approaches the Sobolev constant at rate (eps/delta)^{(N-p)/(p-1)}, while
//! the q-gradient energy and the s-th power integral each decay through three
//! regimes split at q = N(p-1)/(N-1) and s = N(p-1)/(N-p), with a logarithmic
//! factor exactly on the boundary.
//!
//! All integrals reduce to one-dimensional radial quadrature; panels grade
//! geometrically into the concentration scale so that the reported values are
//! accurate to ~1e-13 relative, far below every tolerance asserted on them.

use crate::classify::q_regime_boundary;
use crate::error::{Error, Result};
use crate::quad::{geometric_breaks, integrate_panels, unit_sphere_area, GaussRule};

/// Radial cutoff profile: 1 on [0, rho/2], a quintic smoothstep descent on
/// [rho/2, rho], 0 beyond. The quintic has two continuous derivatives across
/// both junctions and is odd-symmetric about the middle of the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    rho: f64,
}

impl CutoffProfile {
    pub fn quintic(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::OutOfRange(format!("rho = {rho}, need > 0")));
        }
        Ok(CutoffProfile { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// psi(r).
    pub fn value(&self, r: f64) -> f64 {
        let half = 0.5 * self.rho;
        if r <= half {
            1.0
        } else if r >= self.rho {
            0.0
        } else {
            let t = (r - half) / half;
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    /// psi'(r).
    pub fn derivative(&self, r: f64) -> f64 {
        let half = 0.5 * self.rho;
        if r <= half || r >= self.rho {
            0.0
        } else {
            let t = (r - half) / half;
            -30.0 * t * t * (1.0 - t) * (1.0 - t) / half
        }
    }
}

/// One member of the bubble family, with its L^{p*} norm cached once
/// [`normalize`] has run.
#[derive(Debug, Clone)]
pub struct BubbleParams {
    pub eps: f64,
    pub delta: f64,
    pub dim: u32,
    pub p: f64,
    pub cutoff: CutoffProfile,
    norm_pstar: Option<f64>,
}

/// Quadrature knobs for the radial integrals. Two fixed sets exist so that
/// identities can be certified by genuinely independent evaluations.
struct Knobs {
    rule: GaussRule,
    ratio: f64,
    h0_frac: f64,
    transition_panels: usize,
}

impl Knobs {
    fn primary() -> Self {
        Knobs {
            rule: GaussRule::legendre(16),
            ratio: 1.5,
            h0_frac: 1e-3,
            transition_panels: 8,
        }
    }

    fn alternate() -> Self {
        Knobs {
            rule: GaussRule::legendre(20),
            ratio: 1.7,
            h0_frac: 7e-4,
            transition_panels: 11,
        }
    }
}

impl BubbleParams {
    pub fn new(eps: f64, delta: f64, dim: u32, p: f64, cutoff: CutoffProfile) -> Result<Self> {
        if !(2..=10).contains(&dim) {
            return Err(Error::OutOfRange(format!("dim = {dim}, need 2..=10")));
        }
        if !(1.0 < p && p < dim as f64) {
            return Err(Error::ExponentOrder(format!(
                "need 1 < p < N, got p={p}, N={dim}"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange(format!("eps = {eps}, need > 0")));
        }
        if !(0.0 < delta && delta <= 1.0) {
            return Err(Error::OutOfRange(format!("delta = {delta}, need (0, 1]")));
        }
        Ok(BubbleParams {
            eps,
            delta,
            dim,
            p,
            cutoff,
            norm_pstar: None,
        })
    }

    /// Radius of the support B_{rho * delta}.
    pub fn support_radius(&self) -> f64 {
        self.cutoff.rho() * self.delta
    }

    /// Cached L^{p*} norm of the unnormalized profile, if computed.
    pub fn norm_pstar(&self) -> Option<f64> {
        self.norm_pstar
    }

    fn exponents(&self) -> (f64, f64) {
        let n = self.dim as f64;
        let pp = self.p / (self.p - 1.0); // p'
        let alpha = (n - self.p) / self.p; // outer decay power
        (pp, alpha)
    }

    /// Unnormalized profile and its radial derivative at radius r >= 0.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r >= 0.0) {
            return Err(Error::OutOfRange(format!("r = {r}, need >= 0")));
        }
        if r >= self.support_radius() {
            return Ok((0.0, 0.0));
        }
        let (pp, alpha) = self.exponents();
        let base = self.eps.powf(pp) + r.powf(pp);
        let core = base.powf(-alpha);
        // d/dr core = -alpha * p' * r^{p'-1} * base^{-alpha-1}
        let dcore = -alpha * pp * r.powf(pp - 1.0) * base.powf(-alpha - 1.0);
        let psi = self.cutoff.value(r / self.delta);
        let dpsi = self.cutoff.derivative(r / self.delta) / self.delta;
        Ok((psi * core, dpsi * core + psi * dcore))
    }

    fn breaks(&self, knobs: &Knobs) -> Result<Vec<f64>> {
        let support = self.support_radius();
        let mid = 0.5 * support;
        let h0 = knobs.h0_frac * self.eps.min(mid);
        let mut breaks = geometric_breaks(0.0, mid, h0, knobs.ratio)?;
        let step = (support - mid) / knobs.transition_panels as f64;
        for i in 1..=knobs.transition_panels {
            breaks.push(mid + step * i as f64);
        }
        Ok(breaks)
    }

    /// omega_{N-1} int f(u, u') r^{N-1} dr over the support.
    fn weighted_integral(
        &self,
        knobs: &Knobs,
        f: &mut impl FnMut(f64, f64) -> f64,
    ) -> Result<f64> {
        let breaks = self.breaks(knobs)?;
        let omega = unit_sphere_area(self.dim);
        let nm1 = self.dim as i32 - 1;
        let value = integrate_panels(&knobs.rule, &breaks, &mut |r| {
            let (u, du) = self.eval(r).expect("r >= 0 inside panels");
            omega * r.powi(nm1) * f(u, du)
        });
        if !value.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integral for eps={}, delta={}",
                self.eps, self.delta
            )));
        }
        Ok(value)
    }

    fn raw_pstar_integral(&self, knobs: &Knobs) -> Result<f64> {
        let pstar = crate::problem::critical_exponent(self.dim, self.p)?;
        self.weighted_integral(knobs, &mut |u, _| u.powf(pstar))
    }

    fn norm_with(&self, knobs: &Knobs) -> Result<f64> {
        let pstar = crate::problem::critical_exponent(self.dim, self.p)?;
        Ok(self.raw_pstar_integral(knobs)?.powf(1.0 / pstar))
    }

    /// Computes and caches the L^{p*} norm. Idempotent.
    pub fn normalize(mut self) -> Result<Self> {
        if self.norm_pstar.is_none() {
            let norm = self.norm_with(&Knobs::primary())?;
            if !(norm > 0.0) {
                return Err(Error::QuadratureFailure("vanishing p* norm".into()));
            }
            self.norm_pstar = Some(norm);
        }
        Ok(self)
    }

    fn require_norm(&self) -> Result<f64> {
        self.norm_pstar.ok_or_else(|| {
            Error::Precondition("bubble must be normalized before energy queries".into())
        })
    }

    fn grad_norm_q_with(&self, q: f64, knobs: &Knobs) -> Result<f64> {
        if !(1.0 < q && q <= self.p) {
            return Err(Error::OutOfRange(format!(
                "gradient exponent q = {q}, need 1 < q <= p = {}",
                self.p
            )));
        }
        let norm = self.require_norm()?;
        let raw = self.weighted_integral(knobs, &mut |_, du| du.abs().powf(q))?;
        Ok(raw / norm.powf(q))
    }

    fn power_integral_with(&self, s: f64, knobs: &Knobs) -> Result<f64> {
        let pstar = crate::problem::critical_exponent(self.dim, self.p)?;
        if !(0.0 < s && s <= pstar) {
            return Err(Error::OutOfRange(format!(
                "power s = {s}, need 0 < s <= p* = {pstar}"
            )));
        }
        let norm = self.require_norm()?;
        let raw = self.weighted_integral(knobs, &mut |u, _| u.powf(s))?;
        Ok(raw / norm.powf(s))
    }

    /// int |grad v|^p over R^N (v the normalized profile).
    pub fn grad_norm_p(&self) -> Result<f64> {
        self.grad_norm_q_with(self.p, &Knobs::primary())
    }

    /// int |grad v|^q for 1 < q <= p.
    pub fn grad_norm_q(&self, q: f64) -> Result<f64> {
        self.grad_norm_q_with(q, &Knobs::primary())
    }

    /// int v^s for 0 < s <= p*.
    pub fn power_integral(&self, s: f64) -> Result<f64> {
        self.power_integral_with(s, &Knobs::primary())
    }

    /// The two competition quotients attached to the level estimate:
    /// (nu int|grad v|^q / int v^s,  (eps/delta)^{(N-p)/(p-1)} / int v^s).
    pub fn quotient_ratios(&self, s: f64, q: f64, nu: f64) -> Result<(f64, f64)> {
        let c = self.power_integral(s)?;
        if !(c > f64::MIN_POSITIVE) {
            return Err(Error::DivisionDegenerate(format!(
                "power integral {c} too small to divide by"
            )));
        }
        let b = self.grad_norm_q(q)?;
        let n = self.dim as f64;
        let scale = (self.eps / self.delta).powf((n - self.p) / (self.p - 1.0));
        Ok((nu * b / c, scale / c))
    }
}

/// Residuals of the exact delta-scaling identities, each normalized by the
/// magnitude of the two sides. At delta = 1 both sides of every identity are
/// the same integral, so the residuals are exactly zero.
#[derive(Debug, Clone, Copy)]
pub struct ScalingReport {
    /// Pointwise identity for u itself, worst over a radius sample.
    pub pointwise: f64,
    /// L^{p*} norm identity.
    pub norm: f64,
    /// s-th power integral identity for normalized profiles.
    pub power: f64,
    /// q-gradient identity for normalized profiles.
    pub grad_q: f64,
    /// p-gradient invariance (the q = p case, exponent zero).
    pub grad_p: f64,
}

impl ScalingReport {
    pub fn max_residual(&self) -> f64 {
        self.pointwise
            .max(self.norm)
            .max(self.power)
            .max(self.grad_q)
            .max(self.grad_p)
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Verifies the scaling identities by computing both sides with independent
/// quadratures (different rule order, grading ratio, and panel count).
pub fn scaling_check(
    eps: f64,
    delta: f64,
    cutoff: CutoffProfile,
    dim: u32,
    p: f64,
    s: f64,
    q: f64,
) -> Result<ScalingReport> {
    let n = dim as f64;
    let lhs = BubbleParams::new(eps, delta, dim, p, cutoff)?;
    if delta == 1.0 {
        // Both sides collapse to the same member of the family.
        return Ok(ScalingReport {
            pointwise: 0.0,
            norm: 0.0,
            power: 0.0,
            grad_q: 0.0,
            grad_p: 0.0,
        });
    }
    let rhs = BubbleParams::new(eps / delta, 1.0, dim, p, cutoff)?;

    // pointwise: u_{eps,delta}(r) = delta^{-(N-p)/(p-1)} u_{eps/delta,1}(r/delta)
    let pull = delta.powf(-(n - p) / (p - 1.0));
    let mut worst: f64 = 0.0;
    let support = lhs.support_radius();
    let mut radii = vec![0.0];
    let mut r = eps * 1e-2;
    while r < support {
        radii.push(r);
        r *= 1.9;
    }
    for r in radii {
        let (ul, _) = lhs.eval(r)?;
        let (ur, _) = rhs.eval(r / delta)?;
        worst = worst.max(rel_gap(ul, pull * ur));
    }

    let knobs_l = Knobs::primary();
    let knobs_r = Knobs::alternate();

    let norm_l = lhs.norm_with(&knobs_l)?;
    let norm_r = rhs.norm_with(&knobs_r)?;
    let norm_res = rel_gap(norm_l, delta.powf(-(n - p) / (p * (p - 1.0))) * norm_r);

    let lhs = BubbleParams {
        norm_pstar: Some(norm_l),
        ..lhs
    };
    let rhs = BubbleParams {
        norm_pstar: Some(norm_r),
        ..rhs
    };

    let power_l = lhs.power_integral_with(s, &knobs_l)?;
    let power_r = rhs.power_integral_with(s, &knobs_r)?;
    let power_res = rel_gap(power_l, delta.powf((n * p - (n - p) * s) / p) * power_r);

    let gq_l = lhs.grad_norm_q_with(q, &knobs_l)?;
    let gq_r = rhs.grad_norm_q_with(q, &knobs_r)?;
    let gq_res = rel_gap(gq_l, delta.powf(n * (p - q) / p) * gq_r);

    let gp_l = lhs.grad_norm_q_with(p, &knobs_l)?;
    let gp_r = rhs.grad_norm_q_with(p, &knobs_r)?;
    let gp_res = rel_gap(gp_l, gp_r);

    Ok(ScalingReport {
        pointwise: worst,
        norm: norm_res,
        power: power_res,
        grad_q: gq_res,
        grad_p: gp_res,
    })
}

/// Predicted concentration rate: value ~ eps^{eps_exponent} *
/// delta^{delta_exponent} * |log(eps/delta)|^{log_power}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRate {
    pub eps_exponent: f64,
    pub delta_exponent: f64,
    pub log_power: i32,
}

impl ThetaRate {
    /// Exponent of eps once delta = eps^kappa is substituted.
    pub fn coupled_exponent(&self, kappa: f64) -> f64 {
        self.eps_exponent + kappa * self.delta_exponent
    }
}

/// Rate of int |grad v|^p - S: (eps/delta)^{(N-p)/(p-1)}.
pub fn gradient_p_rate(dim: u32, p: f64) -> ThetaRate {
    let n = dim as f64;
    let a = (n - p) / (p - 1.0);
    ThetaRate {
        eps_exponent: a,
        delta_exponent: -a,
        log_power: 0,
    }
}

/// Rate of int |grad v|^q; regimes split at q = N(p-1)/(N-1).
pub fn gradient_q_rate(dim: u32, p: f64, q: f64) -> ThetaRate {
    let n = dim as f64;
    let boundary = q_regime_boundary(dim, p);
    if q > boundary {
        ThetaRate {
            eps_exponent: n * (p - q) / p,
            delta_exponent: 0.0,
            log_power: 0,
        }
    } else if q == boundary {
        ThetaRate {
            eps_exponent: n * (n - p) / ((n - 1.0) * p),
            delta_exponent: 0.0,
            log_power: 1,
        }
    } else {
        ThetaRate {
            eps_exponent: (n - p) * q / (p * (p - 1.0)),
            delta_exponent: (n * (p - 1.0) - (n - 1.0) * q) / (p - 1.0),
            log_power: 0,
        }
    }
}

/// Rate of int v^s; regimes split at s = N(p-1)/(N-p).
pub fn power_integral_rate(dim: u32, p: f64, s: f64) -> ThetaRate {
    let n = dim as f64;
    let boundary = n * (p - 1.0) / (n - p);
    if s > boundary {
        ThetaRate {
            eps_exponent: (n * p - (n - p) * s) / p,
            delta_exponent: 0.0,
            log_power: 0,
        }
    } else if s == boundary {
        ThetaRate {
            eps_exponent: n / p,
            delta_exponent: 0.0,
            log_power: 1,
        }
    } else {
        ThetaRate {
            eps_exponent: (n - p) * s / (p * (p - 1.0)),
            delta_exponent: (n * (p - 1.0) - (n - p) * s) / (p - 1.0),
            log_power: 0,
        }
    }
}

/// Decay exponents, under delta = eps^kappa, of the two quotients that must
/// vanish for the level estimate to dip below the compactness threshold.
#[derive(Debug, Clone, Copy)]
pub struct QuotientRates {
    /// eps-exponent of int|grad v|^q / int v^s.
    pub grad_exponent: f64,
    /// The grad quotient carries |log(eps/delta)| exactly on the boundary.
    pub grad_log: bool,
    /// eps-exponent of (eps/delta)^{(N-p)/(p-1)} / int v^s.
    pub scale_exponent: f64,
    /// True when both quotients decay, i.e. both exponents are positive.
    pub decays: bool,
}

/// Closed-form quotient decay rates. Requires the power integral to sit in
/// its fast regime, s > N(p-1)/(N-p), and 0 <= kappa < 1.
pub fn quotient_rates(dim: u32, p: f64, q: f64, s: f64, kappa: f64) -> Result<QuotientRates> {
    let n = dim as f64;
    if !(1.0 < q && q < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < q < p < N, got q={q}, p={p}, N={dim}"
        )));
    }
    if !(s > n * (p - 1.0) / (n - p)) {
        return Err(Error::Precondition(format!(
            "quotient rates need s > N(p-1)/(N-p) = {}, got s = {s}",
            n * (p - 1.0) / (n - p)
        )));
    }
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::OutOfRange(format!("kappa = {kappa}, need [0, 1)")));
    }
    let grad = gradient_q_rate(dim, p, q);
    let power = power_integral_rate(dim, p, s);
    let grad_exponent = grad.coupled_exponent(kappa) - power.coupled_exponent(kappa);
    let scale = gradient_p_rate(dim, p);
    let scale_exponent = scale.coupled_exponent(kappa) - power.coupled_exponent(kappa);
    let grad_log = grad.log_power != 0;
    Ok(QuotientRates {
        grad_exponent,
        grad_log,
        scale_exponent,
        // a log factor on top of a zero exponent still fails to decay
        decays: grad_exponent > 0.0 && scale_exponent > 0.0,
    })
}

/// Rayleigh quotient of the raw profile (no cutoff), eps = 1, truncated at
/// `radius`: the value converges to the Sobolev constant as radius -> inf at
/// rate radius^{-(N-p)/(p-1)}.
pub fn truncated_profile_quotient(dim: u32, p: f64, radius: f64) -> Result<f64> {
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < p < N, got p={p}, N={dim}"
        )));
    }
    if !(radius > 1.0) {
        return Err(Error::OutOfRange(format!(
            "truncation radius {radius}, need > 1"
        )));
    }
    let pstar = crate::problem::critical_exponent(dim, p)?;
    let pp = p / (p - 1.0);
    let alpha = (n - p) / p;
    let rule = GaussRule::legendre(16);
    let breaks = geometric_breaks(0.0, radius, 1e-3, 1.5)?;
    let omega = unit_sphere_area(dim);
    let nm1 = dim as i32 - 1;
    let grad = integrate_panels(&rule, &breaks, &mut |r| {
        let base = 1.0 + r.powf(pp);
        let dcore = alpha * pp * r.powf(pp - 1.0) * base.powf(-alpha - 1.0);
        omega * r.powi(nm1) * dcore.powf(p)
    });
    let mass = integrate_panels(&rule, &breaks, &mut |r| {
        let base = 1.0 + r.powf(pp);
        omega * r.powi(nm1) * base.powf(-alpha * pstar)
    });
    Ok(grad / mass.powf(p / pstar))
}
