//! Gauss-Legendre quadrature on graded panel decompositions, plus the small
//! amount of closed-form geometry (sphere areas, ball volumes) the radial
//! integrals need.
//!
//! All domain integrals in this crate reduce to one-dimensional integrals
//! against the weight r^{N-1}. Integrands concentrate at scales that can sit
//! many decades below the domain size, so the panel builders grade
//! geometrically toward the concentration point and the composite rule keeps
//! full accuracy on each panel.

use crate::error::{Error, Result};

/// Compensated (Kahan) accumulator. Energy differences probed by central
/// finite differences sit close to the rounding floor of a naive sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sum with compensation; order of `xs` still matters at the last ulp, so
/// callers that need bitwise reproducibility must present a fixed order.
pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

impl GaussRule {
    /// Nodes and weights by Newton iteration on the Legendre polynomial,
    /// accurate to machine precision for the small n used here.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 2, "rule order must be at least 2");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_deriv(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_and_deriv(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integral of `f` over [a, b] with this rule.
    pub fn integrate(&self, a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = KahanSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * half * f(mid + half * x));
        }
        acc.value()
    }
}

/// Composite integral over consecutive panels given by `breaks`.
pub fn integrate_panels(
    rule: &GaussRule,
    breaks: &[f64],
    f: &mut impl FnMut(f64) -> f64,
) -> f64 {
    debug_assert!(breaks.windows(2).all(|w| w[0] < w[1]));
    let mut acc = KahanSum::default();
    for w in breaks.windows(2) {
        acc.add(rule.integrate(w[0], w[1], f));
    }
    acc.value()
}

/// Breakpoints from `from` to `to` whose first cell has width `h0` and whose
/// widths then grow by `ratio`. Grades resolution toward `from`.
pub fn geometric_breaks(from: f64, to: f64, h0: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(to > from) || !(h0 > 0.0) || !(ratio > 1.0) {
        return Err(Error::QuadratureFailure(format!(
            "bad panel request: from={from}, to={to}, h0={h0}, ratio={ratio}"
        )));
    }
    let mut breaks = vec![from];
    let mut h = h0.min(to - from);
    let mut x = from;
    loop {
        x += h;
        if x >= to - 1e-3 * h {
            breaks.push(to);
            return Ok(breaks);
        }
        breaks.push(x);
        h *= ratio;
        if breaks.len() > 100_000 {
            return Err(Error::QuadratureFailure(
                "panel count exploded; h0 too small for the interval".into(),
            ));
        }
    }
}

/// Uniform breakpoints with `n` panels.
pub fn uniform_breaks(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| from + (to - from) * i as f64 / n as f64)
        .collect()
}

fn factorial(k: u32) -> f64 {
    (2..=k).map(f64::from).product()
}

/// Gamma(n/2) for integer n in [2, 20]; exact for integer and half-integer
/// arguments, which is all the sphere measures below need.
pub fn gamma_half_integer(n: u32) -> f64 {
    assert!((2..=20).contains(&n), "dimension out of supported range");
    if n.is_multiple_of(2) {
        factorial(n / 2 - 1)
    } else {
        let k = (n - 1) / 2;
        factorial(2 * k) / (4_f64.powi(k as i32) * factorial(k)) * std::f64::consts::PI.sqrt()
    }
}

/// Surface measure of the unit sphere S^{N-1} in R^N, N in [2, 10].
pub fn unit_sphere_area(dim: u32) -> f64 {
    assert!((2..=10).contains(&dim), "dimension out of supported range");
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim)
}

/// Volume of the ball of radius `r` in R^N.
pub fn ball_volume(dim: u32, r: f64) -> f64 {
    unit_sphere_area(dim) / dim as f64 * r.powi(dim as i32)
}
