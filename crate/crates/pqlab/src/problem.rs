//! Problem data and the exact exponent algebra attached to it.
//!
//! The model problem lives on the ball B_R in R^N:
//!
//! ```text
//!   -div(|∇u|^{p-2}∇u) - ν div(|∇u|^{q-2}∇u)
//!       = b|u|^{s-2}u + μ|u|^{q-2}u + |u|^{p*-2}u,   u = 0 on ∂B_R,
//! ```
//!
//! with 1 < q < p < N and p* = Np/(N-p) the critical exponent. Everything in
//! this module is closed-form arithmetic on the exponents; no quadrature.

use crate::error::{Error, Result};

/// Parameters of one problem instance. `rho` is the radius of the ball that
/// carries the concentration cutoff, so bubbles are supported in B_rho ⊆ B_R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    /// Space dimension N, 2..=10.
    pub dim: u32,
    /// Leading exponent p, 1 < p < N.
    pub p: f64,
    /// Secondary exponent q, 1 < q < p.
    pub q: f64,
    /// Subcritical perturbation exponent s, q <= s < p*.
    pub s: f64,
    /// Coefficient of the |u|^{s-2}u term, b >= 0.
    pub b: f64,
    /// Coefficient of the q-gradient term, nu >= 0.
    pub nu: f64,
    /// Coefficient of the |u|^{q-2}u term, mu >= 0.
    pub mu: f64,
    /// Domain radius R > 0.
    pub radius: f64,
    /// Cutoff support radius, 0 < rho <= R.
    pub rho: f64,
}

impl ProblemSpec {
    /// Critical Sobolev exponent Np/(N-p).
    pub fn p_star(&self) -> f64 {
        critical_exponent(self.dim, self.p).expect("validated spec")
    }

    /// Checks every range constraint; returns the spec unchanged on success.
    ///
    /// The borderline s = q is allowed: it is the regime the nonexistence
    /// machinery works in. The existence classifiers themselves only report
    /// admissibility for s strictly above their thresholds.
    pub fn validated(self) -> Result<Self> {
        let ProblemSpec {
            dim,
            p,
            q,
            s,
            b,
            nu,
            mu,
            radius,
            rho,
        } = self;
        if !(2..=10).contains(&dim) {
            return Err(Error::OutOfRange(format!("dim = {dim}, need 2..=10")));
        }
        for (name, v) in [
            ("p", p),
            ("q", q),
            ("s", s),
            ("b", b),
            ("nu", nu),
            ("mu", mu),
            ("radius", radius),
            ("rho", rho),
        ] {
            if !v.is_finite() {
                return Err(Error::OutOfRange(format!("{name} = {v} is not finite")));
            }
        }
        if !(1.0 < q && q < p && p < dim as f64) {
            return Err(Error::ExponentOrder(format!(
                "need 1 < q < p < N, got q={q}, p={p}, N={dim}"
            )));
        }
        let pstar = critical_exponent(dim, p)?;
        if !(q <= s && s < pstar) {
            return Err(Error::OutOfRange(format!(
                "need q <= s < p* = {pstar}, got s={s}"
            )));
        }
        if b < 0.0 || nu < 0.0 || mu < 0.0 {
            return Err(Error::OutOfRange(format!(
                "coefficients must be nonnegative: b={b}, nu={nu}, mu={mu}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::OutOfRange(format!("radius = {radius}, need > 0")));
        }
        if !(0.0 < rho && rho <= radius) {
            return Err(Error::OutOfRange(format!(
                "need 0 < rho <= radius, got rho={rho}, radius={radius}"
            )));
        }
        Ok(self)
    }
}

/// p* = Np/(N-p); requires 1 < p < N.
pub fn critical_exponent(dim: u32, p: f64) -> Result<f64> {
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < p < N for the critical exponent, got p={p}, N={dim}"
        )));
    }
    Ok(n * p / (n - p))
}

/// Compactness threshold c* = S^{N/p}/N attached to a Sobolev constant S.
///
/// Below this energy level, concentrating sequences cannot escape: it is the
/// bar every mountain-pass level estimate is compared against.
pub fn threshold_energy(sobolev: f64, dim: u32, p: f64) -> Result<f64> {
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < p < N, got p={p}, N={dim}"
        )));
    }
    if !(sobolev > 0.0) {
        return Err(Error::OutOfRange(format!("S = {sobolev}, need > 0")));
    }
    Ok(sobolev.powf(n / p) / n)
}

/// Largest coefficient μ for which the Pohozaev obstruction applies when
/// s = q: μ <= N(p-q) μ1 / (N(p-q) + pq), with μ1 the first q-Laplacian
/// eigenvalue of the domain.
pub fn mu_nonexistence_bound(dim: u32, p: f64, q: f64, mu1: f64) -> Result<f64> {
    let n = dim as f64;
    if !(1.0 < q && q < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < q < p < N, got q={q}, p={p}, N={dim}"
        )));
    }
    if !(mu1 > 0.0) {
        return Err(Error::OutOfRange(format!("mu1 = {mu1}, need > 0")));
    }
    Ok(n * (p - q) * mu1 / (n * (p - q) + p * q))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_spec() -> ProblemSpec {
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
    }

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(4, 2.0).unwrap(), 4.0);
        assert_eq!(critical_exponent(3, 2.0).unwrap(), 6.0);
        assert_eq!(critical_exponent(5, 3.0).unwrap(), 7.5);
    }

    #[test]
    fn critical_exponent_rejects_bad_order() {
        assert!(matches!(
            critical_exponent(3, 3.0),
            Err(Error::ExponentOrder(_))
        ));
        assert!(matches!(
            critical_exponent(3, 1.0),
            Err(Error::ExponentOrder(_))
        ));
    }

    #[test]
    fn validate_accepts_reference_spec() {
        assert!(base_spec().validated().is_ok());
    }

    #[test]
    fn validate_rejects_inverted_exponents() {
        let bad = ProblemSpec {
            q: 2.5, // q > p
            ..base_spec()
        };
        assert!(matches!(bad.validated(), Err(Error::ExponentOrder(_))));
    }

    #[test]
    fn validate_rejects_out_of_range_fields() {
        let cases = [
            ProblemSpec {
                s: 4.5,
                ..base_spec()
            }, // s >= p*
            ProblemSpec {
                s: 1.2,
                ..base_spec()
            }, // s < q
            ProblemSpec {
                b: -1.0,
                ..base_spec()
            },
            ProblemSpec {
                mu: -0.5,
                ..base_spec()
            },
            ProblemSpec {
                radius: 0.0,
                ..base_spec()
            },
            ProblemSpec {
                rho: 2.0,
                ..base_spec()
            }, // rho > radius
        ];
        for bad in cases {
            assert!(
                matches!(bad.validated(), Err(Error::OutOfRange(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn validate_allows_borderline_s_equals_q() {
        let spec = ProblemSpec {
            s: 1.5,
            b: 0.0,
            mu: 0.3,
            ..base_spec()
        };
        assert!(spec.validated().is_ok());
    }

    #[test]
    fn threshold_energy_closed_form() {
        // c* = S^{N/p} / N
        let c = threshold_energy(2.0, 4, 2.0).unwrap();
        assert!((c - 2.0_f64.powi(2) / 4.0).abs() < 1e-15);
        let c = threshold_energy(5.0, 3, 2.0).unwrap();
        assert!((c - 5.0_f64.powf(1.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mu_bound_reference_values() {
        let b = mu_nonexistence_bound(3, 2.0, 1.5, 1.0).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-15);
        let b = mu_nonexistence_bound(4, 2.0, 1.2, 2.0).unwrap();
        assert!((b - 8.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn mu_bound_is_monotone_in_gap_and_vanishes_with_it() {
        let mut last = 0.0;
        for q in [1.9, 1.5, 1.2, 1.05] {
            let b = mu_nonexistence_bound(3, 2.0, q, 1.0).unwrap();
            assert!(b > last, "bound should grow as p-q grows");
            last = b;
        }
        let tiny = mu_nonexistence_bound(3, 2.0, 2.0 - 1e-9, 1.0).unwrap();
        assert!(tiny < 1e-8);
    }
}
