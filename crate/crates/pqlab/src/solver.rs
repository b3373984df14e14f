//! Energy functional, descent solver, and Rayleigh-type minimizations on the
//! radial finite element space.
//!
//! The functional associated with the problem data is
//!
//! ```text
//!   J(u) = (1/p) int |u'|^p + (nu/q) int |u'|^q
//!        - (b/s) int |u|^s - (mu/q) int |u|^q - (1/p*) int |u|^{p*},
//! ```
//!
//! the last term present only when the critical power is switched on. The
//! gradient is assembled against the piecewise-linear basis with a tiny
//! regularization of the modulus (|x|^{a-2} x becomes x (x^2 + eta^2)^{(a-2)/2},
//! eta = 1e-12) so exponents below 2 stay differentiable at zero; the energy
//! itself is evaluated exactly. Descent directions are preconditioned by the
//! linear stiffness-plus-mass operator and steps chosen by Armijo
//! backtracking. Everything here is deterministic: no randomness, no
//! parallelism, identical inputs give identical iterates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{RadialField, RadialMesh, TriDiag};
use crate::problem::ProblemSpec;
use crate::quad::kahan_sum;

/// Modulus regularization used in gradient assembly only.
const MODULUS_ETA: f64 = 1e-12;

/// x |x|^{a-2}, regularized near x = 0.
fn signed_power(x: f64, a: f64) -> f64 {
    x * (x * x + MODULUS_ETA * MODULUS_ETA).powf(0.5 * (a - 2.0))
}

/// Problem energy with a switch for the critical power term.
#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub spec: ProblemSpec,
    pub critical: bool,
}

impl Model {
    pub fn new(spec: ProblemSpec, critical: bool) -> Result<Self> {
        Ok(Model {
            spec: spec.validated()?,
            critical,
        })
    }

    /// J(u).
    pub fn energy(&self, u: &RadialField) -> f64 {
        let d = self.spec;
        let pstar = d.p_star();
        let crit = if self.critical { 1.0 } else { 0.0 };
        u.integrate(|_, u, du| {
            let g = du.abs();
            let v = u.abs();
            g.powf(d.p) / d.p + d.nu * g.powf(d.q) / d.q
                - d.b * v.powf(d.s) / d.s
                - d.mu * v.powf(d.q) / d.q
                - crit * v.powf(pstar) / pstar
        })
    }

    /// dJ(u), as a vector over the free node values.
    pub fn energy_gradient(&self, u: &RadialField) -> Vec<f64> {
        let d = self.spec;
        let pstar = d.p_star();
        let crit = if self.critical { 1.0 } else { 0.0 };
        assemble_gradient(
            u,
            |du| signed_power(du, d.p) + d.nu * signed_power(du, d.q),
            |v| {
                -d.b * signed_power(v, d.s) - d.mu * signed_power(v, d.q)
                    - crit * signed_power(v, pstar)
            },
        )
    }
}

/// Assembles int f_du(u') phi_i' + f_u(u) phi_i against the radial weight.
fn assemble_gradient(
    u: &RadialField,
    f_du: impl Fn(f64) -> f64,
    f_u: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let mesh = Arc::clone(u.mesh());
    let n = mesh.cells();
    let nodes = mesh.nodes();
    let vals = u.values();
    let mut g = vec![0.0; n];
    mesh.for_each_quad_point(|cell, r, w| {
        let h = mesh.cell_width(cell);
        let left = vals[cell];
        let right = if cell + 1 < n { vals[cell + 1] } else { 0.0 };
        let t = (r - nodes[cell]) / h;
        let uu = left * (1.0 - t) + right * t;
        let du = (right - left) / h;
        let flux = f_du(du);
        let source = f_u(uu);
        g[cell] += w * (flux * (-1.0 / h) + source * (1.0 - t));
        if cell + 1 < n {
            g[cell + 1] += w * (flux * (1.0 / h) + source * t);
        }
    });
    g
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    kahan_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Why a descent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentOutcome {
    /// Gradient sup-norm fell below the tolerance.
    Converged,
    /// The line search could no longer reduce the energy.
    Stalled,
    /// Iteration budget exhausted.
    IterationLimit,
    /// Energy or field magnitude blew past the divergence guards.
    Diverged,
}

#[derive(Debug, Clone)]
pub struct DescentOptions {
    pub max_iters: usize,
    /// Stop when the gradient sup-norm drops below this.
    pub tol: f64,
    /// Armijo sufficient-decrease fraction.
    pub armijo: f64,
    /// Keep a copy of the iterate every this many steps.
    pub sample_every: Option<usize>,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iters: 100_000,
            tol: 1e-8,
            armijo: 1e-4,
            sample_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub field: RadialField,
    pub energy: f64,
    pub residual: f64,
    pub iters: usize,
    pub outcome: DescentOutcome,
    pub samples: Vec<RadialField>,
}

const ENERGY_DIVERGENCE: f64 = -1e12;
const FIELD_DIVERGENCE: f64 = 1e9;

/// Minimizes the model energy from the given start by preconditioned descent
/// with Armijo backtracking. The preconditioner is the (fixed) linear
/// stiffness-plus-mass operator of the mesh.
pub fn descent(model: &Model, init: RadialField, opts: &DescentOptions) -> DescentTrace {
    let mesh = Arc::clone(init.mesh());
    let (k, m) = mesh.laplace_pair();
    let precon = TriDiag::linear_combination(1.0, &k, 1.0, &m);

    let mut u = init;
    let mut energy = model.energy(&u);
    let mut samples = Vec::new();
    let mut iters = 0;
    loop {
        let g = model.energy_gradient(&u);
        let residual = sup_norm(&g);
        if residual < opts.tol {
            return DescentTrace {
                field: u,
                energy,
                residual,
                iters,
                outcome: DescentOutcome::Converged,
                samples,
            };
        }
        if energy < ENERGY_DIVERGENCE || u.sup_norm() > FIELD_DIVERGENCE {
            return DescentTrace {
                field: u,
                energy,
                residual,
                iters,
                outcome: DescentOutcome::Diverged,
                samples,
            };
        }
        if iters >= opts.max_iters {
            return DescentTrace {
                field: u,
                energy,
                residual,
                iters,
                outcome: DescentOutcome::IterationLimit,
                samples,
            };
        }

        let mut dir: Vec<f64> = match precon.solve(&g) {
            Ok(d) => d.into_iter().map(|x| -x).collect(),
            Err(_) => g.iter().map(|x| -x).collect(),
        };
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // fall back to raw steepest descent
            dir = g.iter().map(|x| -x).collect();
            slope = dot(&g, &dir);
            if !(slope < 0.0) {
                return DescentTrace {
                    field: u,
                    energy,
                    residual,
                    iters,
                    outcome: DescentOutcome::Stalled,
                    samples,
                };
            }
        }

        let step_field = RadialField::from_values(&mesh, dir).expect("direction matches mesh");
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = u.axpy(t, &step_field);
            let trial_energy = model.energy(&trial);
            if trial_energy <= energy + opts.armijo * t * slope {
                u = trial;
                energy = trial_energy;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return DescentTrace {
                field: u,
                energy,
                residual,
                iters,
                outcome: DescentOutcome::Stalled,
                samples,
            };
        }
        iters += 1;
        if let Some(every) = opts.sample_every {
            if every > 0 && iters % every == 0 {
                samples.push(u.clone());
            }
        }
    }
}

/// Result of a Rayleigh-quotient minimization.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub value: f64,
    pub field: RadialField,
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes int |u'|^q / int |u|^q over the mesh space. For q = 2 this is
/// the first Dirichlet eigenvalue of the radial Laplacian and is computed by
/// inverse iteration on the assembled matrices; otherwise a normalized
/// preconditioned descent on the quotient runs until the value stabilizes.
pub fn rayleigh_min(mesh: &Arc<RadialMesh>, q: f64) -> Result<EigenResult> {
    if !(1.0 < q && q.is_finite()) {
        return Err(Error::OutOfRange(format!("q = {q}, need > 1")));
    }
    let init = RadialField::from_fn(mesh, |r| {
        let x = r / mesh.radius();
        1.0 - x * x
    });
    if q == 2.0 {
        rayleigh_inverse_iteration(mesh, init)
    } else {
        rayleigh_descent(mesh, q, init)
    }
}

fn rayleigh_inverse_iteration(mesh: &Arc<RadialMesh>, init: RadialField) -> Result<EigenResult> {
    let (k, m) = mesh.laplace_pair();
    let mut u = init.values().to_vec();
    let mut value = f64::INFINITY;
    let max_iters = 500;
    for iter in 0..max_iters {
        let mu = m.apply(&u);
        let mut next = k.solve(&mu)?;
        let norm = dot(&next, &m.apply(&next)).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonConvergence("inverse iteration collapsed".into()));
        }
        for x in &mut next {
            *x /= norm;
        }
        let num = dot(&next, &k.apply(&next));
        let den = dot(&next, &m.apply(&next));
        let new_value = num / den;
        u = next;
        if (new_value - value).abs() <= 1e-14 * new_value.abs() {
            let field = RadialField::from_values(mesh, u)?;
            return Ok(EigenResult {
                value: new_value,
                field,
                iters: iter + 1,
                converged: true,
            });
        }
        value = new_value;
    }
    let field = RadialField::from_values(mesh, u)?;
    Ok(EigenResult {
        value,
        field,
        iters: max_iters,
        converged: false,
    })
}

fn rayleigh_descent(mesh: &Arc<RadialMesh>, q: f64, init: RadialField) -> Result<EigenResult> {
    let (k, m) = mesh.laplace_pair();
    let precon = TriDiag::linear_combination(1.0, &k, 1.0, &m);
    let mut u = init;

    let quotient = |u: &RadialField| -> (f64, f64, f64) {
        let a = u.grad_norm_pow(q);
        let b = u.lp_norm_pow(q);
        (a / b, a, b)
    };

    // normalize int |u|^q = 1
    let renorm = |u: &RadialField| -> RadialField {
        let b = u.lp_norm_pow(q);
        u.scaled(b.powf(-1.0 / q))
    };
    u = renorm(&u);
    let (mut value, mut a, mut b) = quotient(&u);

    let max_iters = 30_000;
    let mut stable = 0usize;
    for iter in 0..max_iters {
        let g_a = assemble_gradient(&u, |du| q * signed_power(du, q), |_| 0.0);
        let g_b = assemble_gradient(&u, |_| 0.0, |v| q * signed_power(v, q));
        let g: Vec<f64> = g_a
            .iter()
            .zip(&g_b)
            .map(|(x, y)| (x - value * y) / b)
            .collect();
        if sup_norm(&g) < 1e-13 * value.max(1.0) {
            return Ok(EigenResult {
                value,
                field: u,
                iters: iter,
                converged: true,
            });
        }
        let dir: Vec<f64> = match precon.solve(&g) {
            Ok(d) => d.into_iter().map(|x| -x).collect(),
            Err(_) => g.iter().map(|x| -x).collect(),
        };
        let slope = dot(&g, &dir);
        if !(slope < 0.0) {
            return Ok(EigenResult {
                value,
                field: u,
                iters: iter,
                converged: stable >= 20,
            });
        }
        let step = RadialField::from_values(mesh, dir)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = renorm(&u.axpy(t, &step));
            let (trial_value, ta, tb) = quotient(&trial);
            if trial_value <= value + 1e-4 * t * slope {
                u = trial;
                if (value - trial_value).abs() <= 1e-13 * value {
                    stable += 1;
                } else {
                    stable = 0;
                }
                value = trial_value;
                a = ta;
                b = tb;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let _ = (a, b);
        if !accepted {
            stable += 1;
        }
        if stable >= 20 {
            return Ok(EigenResult {
                value,
                field: u,
                iters: iter + 1,
                converged: true,
            });
        }
    }
    Ok(EigenResult {
        value,
        field: u,
        iters: max_iters,
        converged: false,
    })
}

/// Sobolev constant of the p-gradient embedding, from the exact optimizer
/// profile truncated at two large radii and extrapolated in the known tail
/// exponent (N-p)/(p-1). Accurate to ~1e-10 relative for moderate (N, p).
pub fn sobolev_constant(dim: u32, p: f64) -> Result<f64> {
    let alpha = (dim as f64 - p) / (p - 1.0);
    let t = 1e5;
    let q1 = crate::bubble::truncated_profile_quotient(dim, p, t)?;
    let q2 = crate::bubble::truncated_profile_quotient(dim, p, 2.0 * t)?;
    let w = 2f64.powf(alpha);
    Ok((w * q2 - q1) / (w - 1.0))
}

/// Independent estimate of the same constant: minimizes the discrete
/// Rayleigh quotient int |u'|^p / (int |u|^{p*})^{p/p*} over the mesh space.
/// The discrete space is conforming, so the exact minimum can only sit above
/// the true constant; the reported value carries the mesh resolution error.
pub fn sobolev_constant_minimized(
    dim: u32,
    p: f64,
    radius: f64,
    cells: usize,
    grading: f64,
) -> Result<f64> {
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < p < N, got p={p}, N={dim}"
        )));
    }
    let pstar = crate::problem::critical_exponent(dim, p)?;
    let mesh = crate::mesh::build_mesh(dim, radius, cells, grading)?;
    let (k, m) = mesh.laplace_pair();
    let precon = TriDiag::linear_combination(1.0, &k, 1.0, &m);

    // concentrated start: optimizer shape at scale a, tapered to the boundary
    let a = 1e-3f64;
    let pp = p / (p - 1.0);
    let mut u = RadialField::from_fn(&mesh, |r| {
        let x = r / radius;
        (a.powf(pp) + x.powf(pp)).powf(-(n - p) / p) * (1.0 - x * x)
    });

    let quotient = |u: &RadialField| -> (f64, f64, f64) {
        let grad = u.grad_norm_pow(p);
        let mass = u.lp_norm_pow(pstar);
        (grad / mass.powf(p / pstar), grad, mass)
    };
    let renorm = |u: &RadialField| -> RadialField {
        let mass = u.lp_norm_pow(pstar);
        u.scaled(mass.powf(-1.0 / pstar))
    };

    u = renorm(&u);
    let (mut value, mut grad, mut mass) = quotient(&u);
    let mut stable = 0usize;
    for _ in 0..40_000 {
        // with int |u|^{p*} = 1 the quotient gradient takes the plain form
        let g_a = assemble_gradient(&u, |du| p * signed_power(du, p), |_| 0.0);
        let g_c = assemble_gradient(&u, |_| 0.0, |v| pstar * signed_power(v, pstar));
        let factor = (p / pstar) * grad / mass;
        let g: Vec<f64> = g_a.iter().zip(&g_c).map(|(x, y)| x - factor * y).collect();
        let dir: Vec<f64> = match precon.solve(&g) {
            Ok(d) => d.into_iter().map(|x| -x).collect(),
            Err(_) => g.iter().map(|x| -x).collect(),
        };
        let slope = dot(&g, &dir);
        if !(slope < 0.0) {
            break;
        }
        let step = RadialField::from_values(&mesh, dir)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = renorm(&u.axpy(t, &step));
            let (tv, tg, tm) = quotient(&trial);
            if tv <= value + 1e-4 * t * slope {
                if (value - tv).abs() <= 1e-12 * value {
                    stable += 1;
                } else {
                    stable = 0;
                }
                u = trial;
                value = tv;
                grad = tg;
                mass = tm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            stable += 1;
        }
        if stable >= 25 {
            break;
        }
    }
    Ok(value)
}
