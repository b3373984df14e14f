//! Pohožaev-type identity checks and the borderline nonexistence scan.
//!
//! For the autonomous problem -div(|grad u|^{p-2} grad u + |grad u|^{q-2}
//! grad u) = g(u) with zero boundary data on the ball, every sufficiently
//! regular solution satisfies the identity
//!
//! ```text
//!   (1/q - 1/p) int |grad u|^q - int [G(u) - u g(u)/p*]
//!     + (1/N) bdry[(1 - 1/p)|u'(R)|^p + (1 - 1/q)|u'(R)|^q] (x . nu) = 0,
//! ```
//!
//! which follows by combining a volume identity (multiply the equation by
//! x . grad u and integrate) with the plain tested form. This module checks
//! all three on manufactured solution pairs — profiles whose right-hand side
//! g is constructed exactly so the profile solves the equation — and wires
//! the identity into the borderline s = q nonexistence experiment: with the
//! coefficient below the first-eigenvalue bound, descent from many starts
//! should never settle on a nontrivial state.
//!
//! All scans are deterministic: every run's randomness is derived from the
//! (seed, configuration index, start index) triple, never from thread order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bubble::{BubbleParams, CutoffProfile};
use crate::error::{Error, Result};
use crate::mesh::{RadialField, RadialMesh};
use crate::problem::ProblemSpec;
use crate::quad::{geometric_breaks, unit_sphere_area, GaussRule};
use crate::solver::{descent, rayleigh_min, DescentOptions, DescentOutcome, Model};

/// A continuous nonlinearity together with its primitive G, G(0) = 0.
#[derive(Clone)]
pub struct AutonomousNonlinearity {
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    primitive: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for AutonomousNonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AutonomousNonlinearity").finish_non_exhaustive()
    }
}

impl AutonomousNonlinearity {
    pub fn new(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AutonomousNonlinearity {
            g: Arc::new(g),
            primitive: Arc::new(primitive),
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    pub fn primitive(&self, t: f64) -> f64 {
        (self.primitive)(t)
    }

    /// Verifies G' = g by central differences at the sampled points.
    pub fn check_primitive(&self, samples: &[f64], tol: f64) -> Result<()> {
        for &t in samples {
            let h = 1e-6 * t.abs().max(1.0);
            let fd = (self.primitive(t + h) - self.primitive(t - h)) / (2.0 * h);
            let g = self.g(t);
            if (fd - g).abs() > tol * g.abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "primitive mismatch at t = {t}: d/dt G = {fd}, g = {g}"
                )));
            }
        }
        Ok(())
    }
}

/// The full boundary integral bdry[(1-1/p)|u'(R)|^p + (1-1/q)|u'(R)|^q]
/// (x . nu) dsigma on the sphere of radius R (no 1/N factor).
fn boundary_integral(u: &RadialField, p: f64, q: f64) -> f64 {
    let mesh = u.mesh();
    let r = mesh.radius();
    let du = u.boundary_derivative().abs();
    let area = unit_sphere_area(mesh.dim()) * r.powi(mesh.dim() as i32 - 1);
    area * r * ((1.0 - 1.0 / p) * du.powf(p) + (1.0 - 1.0 / q) * du.powf(q))
}

/// Terms of the combined identity; residual = gradq - potential + boundary.
#[derive(Debug, Clone, Copy)]
pub struct PohozaevReport {
    /// (1/q - 1/p) int |grad u|^q.
    pub gradq_term: f64,
    /// int [G(u) - u g(u)/p*].
    pub potential_term: f64,
    /// (1/N) times the boundary integral.
    pub boundary_term: f64,
    pub residual: f64,
    /// Largest absolute term value, the reference for relative residuals.
    pub scale: f64,
}

impl PohozaevReport {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

pub fn pohozaev_residual(
    u: &RadialField,
    nl: &AutonomousNonlinearity,
    spec: &ProblemSpec,
) -> PohozaevReport {
    let n = spec.dim as f64;
    let pstar = spec.p_star();
    let gradq_term = (1.0 / spec.q - 1.0 / spec.p) * u.grad_norm_pow(spec.q);
    let potential_term = u.integrate(|_, v, _| nl.primitive(v) - v * nl.g(v) / pstar);
    let boundary_term = boundary_integral(u, spec.p, spec.q) / n;
    let residual = gradq_term - potential_term + boundary_term;
    let scale = gradq_term
        .abs()
        .max(potential_term.abs())
        .max(boundary_term.abs());
    PohozaevReport {
        gradq_term,
        potential_term,
        boundary_term,
        residual,
        scale,
    }
}

/// Terms of the volume identity (equation multiplied by x . grad u);
/// residual = gradp + gradq - potential + boundary.
#[derive(Debug, Clone, Copy)]
pub struct VolumeReport {
    /// (N/p - 1) int |grad u|^p.
    pub gradp_term: f64,
    /// (N/q - 1) int |grad u|^q.
    pub gradq_term: f64,
    /// N int G(u).
    pub potential_term: f64,
    /// Boundary integral, no 1/N.
    pub boundary_term: f64,
    pub residual: f64,
    pub scale: f64,
}

pub fn volume_identity_check(
    u: &RadialField,
    nl: &AutonomousNonlinearity,
    spec: &ProblemSpec,
) -> VolumeReport {
    let n = spec.dim as f64;
    let gradp_term = (n / spec.p - 1.0) * u.grad_norm_pow(spec.p);
    let gradq_term = (n / spec.q - 1.0) * u.grad_norm_pow(spec.q);
    let potential_term = n * u.integrate(|_, v, _| nl.primitive(v));
    let boundary_term = boundary_integral(u, spec.p, spec.q);
    let residual = gradp_term + gradq_term - potential_term + boundary_term;
    let scale = gradp_term
        .abs()
        .max(gradq_term.abs())
        .max(potential_term.abs())
        .max(boundary_term.abs());
    VolumeReport {
        gradp_term,
        gradq_term,
        potential_term,
        boundary_term,
        residual,
        scale,
    }
}

/// Terms of the tested form; residual = gradp + gradq - source.
#[derive(Debug, Clone, Copy)]
pub struct TestedReport {
    pub gradp_term: f64,
    pub gradq_term: f64,
    /// int u g(u).
    pub source_term: f64,
    pub residual: f64,
    pub scale: f64,
}

pub fn tested_identity_check(
    u: &RadialField,
    nl: &AutonomousNonlinearity,
    spec: &ProblemSpec,
) -> TestedReport {
    let gradp_term = u.grad_norm_pow(spec.p);
    let gradq_term = u.grad_norm_pow(spec.q);
    let source_term = u.integrate(|_, v, _| v * nl.g(v));
    let residual = gradp_term + gradq_term - source_term;
    let scale = gradp_term.abs().max(gradq_term.abs()).max(source_term.abs());
    TestedReport {
        gradp_term,
        gradq_term,
        source_term,
        residual,
        scale,
    }
}

/// Relative mismatch of the algebraic recombination: volume identity minus
/// (N/p - 1) times the tested form must equal N times the combined identity
/// for any field whatsoever, solution or not.
pub fn recombination_residual(
    volume: &VolumeReport,
    tested: &TestedReport,
    combined: &PohozaevReport,
    dim: u32,
    p: f64,
) -> f64 {
    let n = dim as f64;
    let lhs = volume.residual - (n / p - 1.0) * tested.residual;
    let rhs = n * combined.residual;
    let scale = (n * combined.scale).max(volume.scale).max(tested.scale);
    if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// Monotone decreasing model profiles for manufactured solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedProfile {
    /// u(r) = 1 - (r/R)^2.
    Parabola,
    /// u(r) = cos(pi r / 2R).
    Cosine,
}

impl ManufacturedProfile {
    fn value(&self, r: f64, radius: f64) -> f64 {
        let x = r / radius;
        match self {
            ManufacturedProfile::Parabola => 1.0 - x * x,
            ManufacturedProfile::Cosine => (std::f64::consts::FRAC_PI_2 * x).cos(),
        }
    }

    fn derivative(&self, r: f64, radius: f64) -> f64 {
        let x = r / radius;
        match self {
            ManufacturedProfile::Parabola => -2.0 * x / radius,
            ManufacturedProfile::Cosine => {
                -(std::f64::consts::FRAC_PI_2 / radius)
                    * (std::f64::consts::FRAC_PI_2 * x).sin()
            }
        }
    }

    fn second_derivative(&self, r: f64, radius: f64) -> f64 {
        let x = r / radius;
        match self {
            ManufacturedProfile::Parabola => -2.0 / (radius * radius),
            ManufacturedProfile::Cosine => {
                -(std::f64::consts::FRAC_PI_2 / radius).powi(2)
                    * (std::f64::consts::FRAC_PI_2 * x).cos()
            }
        }
    }

    /// r = u^{-1}(t) in closed form.
    fn inverse(&self, t: f64, radius: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            ManufacturedProfile::Parabola => radius * (1.0 - t).sqrt(),
            ManufacturedProfile::Cosine => {
                radius * t.acos() / std::f64::consts::FRAC_PI_2
            }
        }
    }
}

/// Builds a field solving the autonomous problem by construction: the
/// right-hand side is defined as g(t) = h(u^{-1}(t)) with h the radial
/// (p,q)-Laplacian of the profile, and the primitive is accumulated along
/// the radius (G(u(r)) = -int_r^R h u' drho), which avoids quadrature against
/// the derivative singularity in t-space when q < 2.
pub fn manufactured_solution(
    profile: ManufacturedProfile,
    spec: &ProblemSpec,
    mesh: &Arc<RadialMesh>,
) -> Result<(RadialField, AutonomousNonlinearity)> {
    if spec.p < 2.0 {
        return Err(Error::Precondition(format!(
            "manufactured radial source needs p >= 2 (got p = {}); the second \
             derivative term is otherwise singular at the origin",
            spec.p
        )));
    }
    let radius = mesh.radius();
    if (radius - spec.radius).abs() > 1e-12 * spec.radius {
        return Err(Error::Precondition(format!(
            "mesh radius {radius} does not match spec radius {}",
            spec.radius
        )));
    }
    let n = mesh.dim() as f64;
    // strict monotonicity scan so the inverse is well-defined
    for k in 1..200 {
        let r = radius * k as f64 / 200.0;
        if !(profile.derivative(r, radius) < 0.0) {
            return Err(Error::NonMonotone(format!(
                "profile derivative {} at r = {r}",
                profile.derivative(r, radius)
            )));
        }
    }

    let (p, q) = (spec.p, spec.q);
    let h_of_r = move |r: f64| -> f64 {
        let du = profile.derivative(r, radius);
        let ddu = profile.second_derivative(r, radius);
        let mut h = 0.0;
        for a in [p, q] {
            let m = du.abs().powf(a - 2.0);
            h -= (a - 1.0) * m * ddu + (n - 1.0) / r * m * du;
        }
        h
    };

    // cumulative tail integrals of h u' for the primitive along the radius
    let rule = GaussRule::legendre(16);
    let breaks = geometric_breaks(0.0, radius, 1e-8 * radius, 1.3)?;
    let mut tails = vec![0.0; breaks.len()];
    for i in (0..breaks.len() - 1).rev() {
        let mut f = |r: f64| h_of_r(r) * profile.derivative(r, radius);
        let panel = rule.integrate(breaks[i], breaks[i + 1], &mut f);
        tails[i] = tails[i + 1] + panel;
    }
    let breaks = Arc::new(breaks);
    let tails = Arc::new(tails);

    let g = move |t: f64| h_of_r(profile.inverse(t, radius));

    let breaks_g = Arc::clone(&breaks);
    let tails_g = Arc::clone(&tails);
    let primitive = move |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r = profile.inverse(t, radius);
        // locate the panel containing r
        let idx = match breaks_g.partition_point(|&x| x <= r) {
            0 => 0,
            i => (i - 1).min(breaks_g.len() - 2),
        };
        let rule = GaussRule::legendre(16);
        let mut f = |rho: f64| h_of_r(rho) * profile.derivative(rho, radius);
        let partial = rule.integrate(r, breaks_g[idx + 1], &mut f);
        -(partial + tails_g[idx + 1])
    };

    let field = RadialField::from_fn(mesh, |r| profile.value(r, radius));
    Ok((field, AutonomousNonlinearity::new(g, primitive)))
}

/// Every expression in the borderline nonexistence chain, evaluated for one
/// field: a nonnegative boundary integral on the left, the identity's middle
/// expression, and the eigenvalue upper bound on the right.
#[derive(Debug, Clone, Copy)]
pub struct ChainReport {
    /// (1/N) boundary integral; nonnegative on the ball.
    pub boundary_term: f64,
    /// (1/q - 1/p*) mu int|u|^q - (1/q - 1/p) int|grad u|^q.
    pub middle_term: f64,
    /// (1/q - 1/p)(mu1 int|u|^q - int|grad u|^q).
    pub upper_term: f64,
    /// mu1 int|u|^q <= int|grad u|^q within slack.
    pub rayleigh_ok: bool,
    /// boundary >= 0, middle <= upper, upper <= 0 (all within slack): the
    /// pattern that forces solutions to be trivial.
    pub pattern_holds: bool,
}

pub fn nonexistence_inequality(u: &RadialField, spec: &ProblemSpec, mu1: f64) -> ChainReport {
    let n = spec.dim as f64;
    let pstar = spec.p_star();
    let mass_q = u.lp_norm_pow(spec.q);
    let grad_q = u.grad_norm_pow(spec.q);
    let boundary_term = boundary_integral(u, spec.p, spec.q) / n;
    let middle_term =
        (1.0 / spec.q - 1.0 / pstar) * spec.mu * mass_q - (1.0 / spec.q - 1.0 / spec.p) * grad_q;
    let upper_term = (1.0 / spec.q - 1.0 / spec.p) * (mu1 * mass_q - grad_q);
    let scale = grad_q.max(mu1 * mass_q);
    let slack = 1e-8 * scale;
    let rayleigh_ok = mu1 * mass_q <= grad_q + slack;
    let pattern_holds =
        boundary_term >= -1e-12 && middle_term <= upper_term + slack && upper_term <= slack;
    ChainReport {
        boundary_term,
        middle_term,
        upper_term,
        rayleigh_ok,
        pattern_holds,
    }
}

/// How one descent run of the scan ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOutcome {
    /// Converged to the zero field.
    Trivial,
    /// Ran out of iterations, stalled, or diverged; recorded, not judged.
    NonConverged,
    /// Converged to a state with nontrivial norm — the outcome the
    /// borderline theory forbids.
    Nontrivial,
}

impl ScanOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanOutcome::Trivial => "trivial",
            ScanOutcome::NonConverged => "non-converged",
            ScanOutcome::Nontrivial => "nontrivial",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub mu: f64,
    pub init_label: String,
    pub outcome: ScanOutcome,
    pub final_norm: f64,
    pub final_energy: f64,
    pub residual: f64,
    pub iters: usize,
    /// Rayleigh inequality held on every sampled iterate and the final state.
    pub rayleigh_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub mu1: f64,
}

impl ScanTable {
    /// True when no run settled on a nontrivial state.
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.outcome != ScanOutcome::Nontrivial)
    }
}

const TRIVIAL_NORM: f64 = 1e-6;

/// Runs the borderline consistency experiment: for each spec (s = q
/// required), descend the critical energy from `random_inits` seeded random
/// starts plus two rescaled bubble starts, recording where every run ends.
/// Rows are computed in parallel; outputs depend only on (specs, seed).
pub fn nonexistence_scan(
    specs: &[ProblemSpec],
    mesh: &Arc<RadialMesh>,
    random_inits: usize,
    seed: u64,
    opts: &DescentOptions,
) -> Result<ScanTable> {
    if specs.is_empty() {
        return Err(Error::Precondition("empty scan grid".into()));
    }
    for spec in specs {
        spec.validated()?;
        if spec.s != spec.q {
            return Err(Error::Precondition(format!(
                "scan requires the borderline power s = q, got s = {}, q = {}",
                spec.s, spec.q
            )));
        }
    }
    let q = specs[0].q;
    if specs.iter().any(|s| s.q != q) {
        return Err(Error::Precondition(
            "scan grid must share one q (one eigenvalue computation)".into(),
        ));
    }
    let mu1 = rayleigh_min(mesh, q)?.value;

    // launch descriptions first, then run them in parallel
    let mut launches = Vec::new();
    for spec_idx in 0..specs.len() {
        for init_idx in 0..random_inits {
            launches.push((spec_idx, init_idx, format!("random-{init_idx}")));
        }
        launches.push((spec_idx, random_inits, "bubble-half".to_string()));
        launches.push((spec_idx, random_inits + 1, "bubble-large".to_string()));
    }

    let rows: Vec<ScanRow> = launches
        .into_par_iter()
        .map(|(spec_idx, init_idx, label)| {
            let spec = &specs[spec_idx];
            let init = build_init(spec, mesh, init_idx, random_inits, seed, spec_idx)?;
            let model = Model::new(*spec, true)?;
            let trace = descent(&model, init, opts);
            let final_norm = trace.field.sup_norm();
            let outcome = match trace.outcome {
                DescentOutcome::Converged if final_norm < TRIVIAL_NORM => ScanOutcome::Trivial,
                DescentOutcome::Converged => ScanOutcome::Nontrivial,
                _ => ScanOutcome::NonConverged,
            };
            let mut rayleigh_ok = true;
            for field in trace.samples.iter().chain(std::iter::once(&trace.field)) {
                let mass_q = field.lp_norm_pow(spec.q);
                let grad_q = field.grad_norm_pow(spec.q);
                if mu1 * mass_q > grad_q + 1e-8 * grad_q.max(mu1 * mass_q) {
                    rayleigh_ok = false;
                }
            }
            Ok(ScanRow {
                mu: spec.mu,
                init_label: label,
                outcome,
                final_norm,
                final_energy: trace.energy,
                residual: trace.residual,
                iters: trace.iters,
                rayleigh_ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScanTable { rows, mu1 })
}

fn build_init(
    spec: &ProblemSpec,
    mesh: &Arc<RadialMesh>,
    init_idx: usize,
    random_inits: usize,
    seed: u64,
    spec_idx: usize,
) -> Result<RadialField> {
    let radius = mesh.radius();
    if init_idx < random_inits {
        // small random superposition of smooth Dirichlet modes
        let run_seed = seed ^ ((spec_idx as u64) << 32) ^ (init_idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Ok(RadialField::from_fn(mesh, |r| {
            let x = std::f64::consts::PI * r / radius;
            0.1 * coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * x).sin() / (k + 1) as f64)
                .sum::<f64>()
        }))
    } else {
        let scale = if init_idx == random_inits { 0.5 } else { 1.5 };
        let cutoff = CutoffProfile::quintic(spec.rho.min(radius))?;
        let bubble = BubbleParams::new(0.05, 1.0, spec.dim, spec.p, cutoff)?.normalize()?;
        let norm = bubble.norm_pstar().expect("normalized above");
        Ok(RadialField::from_fn(mesh, |r| {
            let (u, _) = bubble.eval(r).expect("nonnegative radius");
            scale * u / norm
        }))
    }
}
