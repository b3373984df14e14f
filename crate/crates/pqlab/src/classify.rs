//! Existence classifiers: exact inequality checks deciding which (q, s)
//! combinations admit a positive solution, and the window of admissible
//! concentration couplings delta = eps^kappa in the slow-decay regime.
//!
//! Every comparison is strict and performed in exact floating arithmetic;
//! there are no tolerance fudge factors here. Boundary equalities classify
//! as inadmissible on purpose.

use crate::error::{Error, Result};
use crate::problem::{critical_exponent, ProblemSpec};

/// Which existence mechanism applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Slow q-decay branch: q below N(p-1)/(N-1).
    CaseI,
    /// Fast q-decay branch: q at or above N(p-1)/(N-1).
    CaseII,
    /// Gradient perturbation admissible for all s in (q, p*): N >= p^2.
    PerturbedI,
    /// Gradient perturbation admissible on a split s-range: N < p^2.
    PerturbedII,
    Inadmissible,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::CaseI => "case_i",
            CaseTag::CaseII => "case_ii",
            CaseTag::PerturbedI => "perturbed_i",
            CaseTag::PerturbedII => "perturbed_ii",
            CaseTag::Inadmissible => "inadmissible",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict of one classifier. `threshold_s` is the lower bound on s that was
/// actually applied, reported even when the verdict is inadmissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceVerdict {
    pub admissible: bool,
    pub case_tag: CaseTag,
    pub threshold_s: f64,
}

/// Boundary N(p-1)/(N-1) separating the two decay regimes of the q-gradient
/// energy of a concentrating bubble.
pub fn q_regime_boundary(dim: u32, p: f64) -> f64 {
    let n = dim as f64;
    n * (p - 1.0) / (n - 1.0)
}

fn case_i_threshold(dim: u32, p: f64) -> f64 {
    let n = dim as f64;
    n * n * (p - 1.0) / ((n - 1.0) * (n - p))
}

fn case_ii_threshold(dim: u32, p: f64, q: f64) -> f64 {
    let n = dim as f64;
    n * q / (n - p)
}

/// Lower bound on s in the high branch of the split perturbed range:
/// (Np - 2N + p) p / ((N - p)(p - 1)).
pub fn perturbed_split_threshold(dim: u32, p: f64) -> f64 {
    let n = dim as f64;
    (n * p - 2.0 * n + p) * p / ((n - p) * (p - 1.0))
}

/// Branch-wise classifier for the unperturbed critical problem.
pub fn classify_existence_fixed(spec: &ProblemSpec) -> ExistenceVerdict {
    let pstar = spec.p_star();
    let (threshold, tag) = if spec.q < q_regime_boundary(spec.dim, spec.p) {
        (case_i_threshold(spec.dim, spec.p), CaseTag::CaseI)
    } else {
        (case_ii_threshold(spec.dim, spec.p, spec.q), CaseTag::CaseII)
    };
    let admissible = spec.s > threshold && spec.s < pstar;
    ExistenceVerdict {
        admissible,
        case_tag: if admissible { tag } else { CaseTag::Inadmissible },
        threshold_s: threshold,
    }
}

/// Single-formula variant: admissible iff s exceeds the larger of the two
/// case thresholds. Must agree with [`classify_existence_fixed`] everywhere.
pub fn classify_existence_combined(spec: &ProblemSpec) -> ExistenceVerdict {
    let pstar = spec.p_star();
    let t1 = case_i_threshold(spec.dim, spec.p);
    let t2 = case_ii_threshold(spec.dim, spec.p, spec.q);
    let threshold = t1.max(t2);
    let admissible = spec.s > threshold && spec.s < pstar;
    let tag = if !admissible {
        CaseTag::Inadmissible
    } else if spec.q < q_regime_boundary(spec.dim, spec.p) {
        CaseTag::CaseI
    } else {
        CaseTag::CaseII
    };
    ExistenceVerdict {
        admissible,
        case_tag: tag,
        threshold_s: threshold,
    }
}

/// Classifier for the gradient-perturbed problem (q-Laplacian with small
/// coefficient): full range q < s < p* when N >= p^2, split range otherwise.
pub fn classify_existence_perturbed(spec: &ProblemSpec) -> ExistenceVerdict {
    let n = spec.dim as f64;
    let pstar = spec.p_star();
    if n >= spec.p * spec.p {
        let admissible = spec.s > spec.q && spec.s < pstar;
        return ExistenceVerdict {
            admissible,
            case_tag: if admissible {
                CaseTag::PerturbedI
            } else {
                CaseTag::Inadmissible
            },
            threshold_s: spec.q,
        };
    }
    // N < p^2: the admissible range splits, with a gap at [p, split threshold].
    if spec.s < spec.p {
        let admissible = spec.s > spec.q;
        ExistenceVerdict {
            admissible,
            case_tag: if admissible {
                CaseTag::PerturbedII
            } else {
                CaseTag::Inadmissible
            },
            threshold_s: spec.q,
        }
    } else {
        let t3 = perturbed_split_threshold(spec.dim, spec.p);
        let admissible = spec.s > t3 && spec.s < pstar;
        ExistenceVerdict {
            admissible,
            case_tag: if admissible {
                CaseTag::PerturbedII
            } else {
                CaseTag::Inadmissible
            },
            threshold_s: t3,
        }
    }
}

/// Admissible window for the coupling delta = eps^kappa in the slow-decay
/// case. `lower` may be negative; the usable window is the intersection with
/// [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaWindow {
    pub lower: f64,
    pub upper: f64,
    pub feasible: bool,
}

/// Window endpoints for q below the regime boundary:
///
/// ```text
///   lower = [Np(p-1) - (N-p)(p-1)s - (N-p)q] / ([N(p-1) - (N-1)q] p)
///   upper = [(N-p)(p-1)s - (Np-2N+p)p] / ((N-p)p)
/// ```
///
/// feasible iff max(lower, 0) < min(upper, 1).
pub fn kappa_window(dim: u32, p: f64, q: f64, s: f64) -> Result<KappaWindow> {
    let n = dim as f64;
    if !(1.0 < q && q < p && p < n) {
        return Err(Error::ExponentOrder(format!(
            "need 1 < q < p < N, got q={q}, p={p}, N={dim}"
        )));
    }
    if !(q < q_regime_boundary(dim, p)) {
        return Err(Error::Precondition(format!(
            "kappa window requires q < N(p-1)/(N-1) = {}, got q = {q}",
            q_regime_boundary(dim, p)
        )));
    }
    let lower = (n * p * (p - 1.0) - (n - p) * (p - 1.0) * s - (n - p) * q)
        / ((n * (p - 1.0) - (n - 1.0) * q) * p);
    let upper = ((n - p) * (p - 1.0) * s - (n * p - 2.0 * n + p) * p) / ((n - p) * p);
    let feasible = lower.max(0.0) < upper.min(1.0);
    Ok(KappaWindow {
        lower,
        upper,
        feasible,
    })
}

/// Midpoint of the usable part of a feasible window.
pub fn kappa_midpoint(w: &KappaWindow) -> Result<f64> {
    if !w.feasible {
        return Err(Error::Precondition(
            "kappa window is empty; no midpoint".into(),
        ));
    }
    Ok(0.5 * (w.lower.max(0.0) + w.upper.min(1.0)))
}

/// One cell of a (q, s) region map.
#[derive(Debug, Clone, Copy)]
pub struct RegionCell {
    pub q: f64,
    pub s: f64,
    pub verdict: ExistenceVerdict,
}

/// Classifier grid over q_grid x s_grid at fixed (N, p, R, rho). Cells that
/// violate the basic ordering (q >= p, s < q, s >= p*) come back inadmissible
/// rather than erroring, so rasters can cover the full rectangle.
pub fn region_map(
    dim: u32,
    p: f64,
    q_grid: &[f64],
    s_grid: &[f64],
    perturbed: bool,
) -> Result<Vec<RegionCell>> {
    let n = dim as f64;
    if !(1.0 < p && p < n) {
        return Err(Error::ExponentOrder(format!("need 1 < p < N, got p={p}")));
    }
    let pstar = critical_exponent(dim, p)?;
    let mut cells = Vec::with_capacity(q_grid.len() * s_grid.len());
    for &q in q_grid {
        for &s in s_grid {
            let ok = 1.0 < q && q < p && q <= s && s < pstar;
            let verdict = if ok {
                let spec = ProblemSpec {
                    dim,
                    p,
                    q,
                    s,
                    b: 0.0,
                    nu: 0.0,
                    mu: 0.0,
                    radius: 1.0,
                    rho: 1.0,
                };
                if perturbed {
                    classify_existence_perturbed(&spec)
                } else {
                    classify_existence_fixed(&spec)
                }
            } else {
                ExistenceVerdict {
                    admissible: false,
                    case_tag: CaseTag::Inadmissible,
                    threshold_s: f64::NAN,
                }
            };
            cells.push(RegionCell { q, s, verdict });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(dim: u32, p: f64, q: f64, s: f64) -> ProblemSpec {
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
        .validated()
        .unwrap()
    }

    #[test]
    fn fixed_classifier_reference_points() {
        // q = 1.2 < 3*1/2: slow-decay branch, threshold 9/(2*1) / ... = 4.5
        let v = classify_existence_fixed(&spec(3, 2.0, 1.2, 5.0));
        assert!(v.admissible);
        assert_eq!(v.case_tag, CaseTag::CaseI);
        assert!((v.threshold_s - 4.5).abs() < 1e-15);

        // q = 1.5 > 4/3: fast-decay branch, threshold 4*1.5/2 = 3
        let v = classify_existence_fixed(&spec(4, 2.0, 1.5, 3.5));
        assert!(v.admissible);
        assert_eq!(v.case_tag, CaseTag::CaseII);
        assert!((v.threshold_s - 3.0).abs() < 1e-15);

        let v = classify_existence_fixed(&spec(4, 2.0, 1.5, 2.5));
        assert!(!v.admissible);
        assert_eq!(v.case_tag, CaseTag::Inadmissible);
        assert!((v.threshold_s - 3.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_strict() {
        // exactly at the bound: inadmissible
        let v = classify_existence_fixed(&spec(4, 2.0, 1.5, 3.0));
        assert!(!v.admissible);
        let v = classify_existence_combined(&spec(4, 2.0, 1.5, 3.0));
        assert!(!v.admissible);
    }

    #[test]
    fn perturbed_classifier_reference_points() {
        // N = p^2 = 4: full range
        let v = classify_existence_perturbed(&spec(4, 2.0, 1.5, 3.0));
        assert!(v.admissible);
        assert_eq!(v.case_tag, CaseTag::PerturbedI);

        // N = 3 < 4: low branch q < s < p
        let v = classify_existence_perturbed(&spec(3, 2.0, 1.5, 1.8));
        assert!(v.admissible);
        assert_eq!(v.case_tag, CaseTag::PerturbedII);

        // N = 3: the gap [p, split] = [2, 4] is inadmissible
        let v = classify_existence_perturbed(&spec(3, 2.0, 1.5, 2.5));
        assert!(!v.admissible);
        assert!((v.threshold_s - 4.0).abs() < 1e-15);

        // high branch above the split threshold
        let v = classify_existence_perturbed(&spec(3, 2.0, 1.5, 4.5));
        assert!(v.admissible);
        assert_eq!(v.case_tag, CaseTag::PerturbedII);
    }

    #[test]
    fn split_threshold_sits_above_p_when_n_below_p_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let dim = rng.gen_range(3..=10u32);
            let n = dim as f64;
            let p = rng.gen_range(n.sqrt().max(1.01)..n.min(n.sqrt() * 1.8));
            if n >= p * p || p >= n {
                continue;
            }
            assert!(
                perturbed_split_threshold(dim, p) > p,
                "N={dim}, p={p}: split threshold not above p"
            );
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
            let spec = ProblemSpec {
                dim,
                p,
                q,
                s,
                b: 0.0,
                nu: 0.0,
                mu: 0.0,
                radius: 1.0,
                rho: 1.0,
            };
            if spec.validated().is_ok() {
                return spec;
            }
        }
    }

    #[test]
    fn combined_equals_fixed_on_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let spec = random_valid_tuple(&mut rng);
            let a = classify_existence_fixed(&spec);
            let b = classify_existence_combined(&spec);
            assert_eq!(a.admissible, b.admissible, "{spec:?}");
            assert_eq!(a.case_tag, b.case_tag, "{spec:?}");
        }
    }

    #[test]
    fn small_p_never_lands_in_case_i() {
        // p <= 2 - 1/N forces the regime boundary below 1, so the slow-decay
        // branch is unreachable for any admissible q > 1.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..2000 {
            let dim = rng.gen_range(3..=10u32);
            let n = dim as f64;
            let p = rng.gen_range(1.05..=(2.0 - 1.0 / n));
            let q = rng.gen_range(1.005..p - 1e-3);
            if q >= p {
                continue;
            }
            let pstar = n * p / (n - p);
            let s = rng.gen_range(q + 1e-6..pstar - 1e-6);
            let spec = ProblemSpec {
                dim,
                p,
                q,
                s,
                b: 0.0,
                nu: 0.0,
                mu: 0.0,
                radius: 1.0,
                rho: 1.0,
            };
            let v = classify_existence_fixed(&spec);
            assert_ne!(v.case_tag, CaseTag::CaseI, "{spec:?}");
        }
    }

    #[test]
    fn kappa_window_reference_points() {
        let w = kappa_window(3, 2.0, 1.2, 5.0).unwrap();
        assert!((w.lower - (-1.0 / 6.0)).abs() < 1e-14);
        assert!((w.upper - 0.5).abs() < 1e-14);
        assert!(w.feasible);
        let mid = kappa_midpoint(&w).unwrap();
        assert!((mid - 0.25).abs() < 1e-14);

        let w = kappa_window(3, 2.0, 1.2, 4.0).unwrap();
        assert!(!w.feasible);
    }

    #[test]
    fn kappa_window_requires_slow_decay_branch() {
        assert!(matches!(
            kappa_window(4, 2.0, 1.5, 3.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn kappa_feasibility_matches_case_i_admissibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut hits = 0;
        for _ in 0..5000 {
            let spec = random_valid_tuple(&mut rng);
            if spec.q >= q_regime_boundary(spec.dim, spec.p) {
                continue;
            }
            hits += 1;
            let w = kappa_window(spec.dim, spec.p, spec.q, spec.s).unwrap();
            let v = classify_existence_fixed(&spec);
            assert_eq!(
                w.feasible, v.admissible,
                "window/classifier disagree on {spec:?}: {w:?} vs {v:?}"
            );
        }
        assert!(hits > 200, "sampler barely reached the slow-decay branch");
    }

    #[test]
    fn region_map_never_marks_supercritical_cells_admissible() {
        let q_grid: Vec<f64> = (1..=12).map(|i| 1.0 + 0.08 * i as f64).collect();
        let s_grid: Vec<f64> = (1..=30).map(|i| 0.2 * i as f64).collect(); // runs past p* = 4
        let cells = region_map(4, 2.0, &q_grid, &s_grid, false).unwrap();
        assert_eq!(cells.len(), q_grid.len() * s_grid.len());
        for c in &cells {
            if c.s >= 4.0 {
                assert!(!c.verdict.admissible, "supercritical cell admissible: {c:?}");
            }
        }
        // and the map is not trivially empty
        assert!(cells.iter().any(|c| c.verdict.admissible));
    }
}
