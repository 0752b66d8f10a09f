//! Exact feasibility for a 2×2 matrix inequality that is affine in one scalar.
//!
//! With a one-dimensional storage matrix normalized to `P = 1`, each grid
//! block is `G + λ Q` with `G`, `Q` of order two. Negative semidefiniteness of
//! a 2×2 symmetric matrix is "both diagonal entries ≤ 0 and determinant ≥ 0",
//! which gives two half-lines and a quadratic inequality in `λ`. The feasible
//! set is convex, hence an interval.

use crate::linalg::SymMatrix;
use crate::model::FunctionClass;

/// Relative band under which a negative discriminant is treated as a double root.
pub const DISCRIMINANT_RTOL: f64 = 1e-12;

/// Closed interval `[lo, hi]` of admissible multipliers; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl LambdaInterval {
    pub const NONNEGATIVE: LambdaInterval = LambdaInterval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &LambdaInterval) -> Option<LambdaInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(LambdaInterval { lo, hi })
    }

    /// A representative interior point.
    pub fn pick(&self) -> f64 {
        if self.hi.is_finite() {
            self.lo + 0.5 * (self.hi - self.lo)
        } else if self.lo > 0.0 {
            2.0 * self.lo
        } else {
            1.0
        }
    }
}

/// Restricts `iv` to `{λ : x0 + λ x1 ≤ 0}`.
fn half_line(iv: LambdaInterval, x0: f64, x1: f64) -> Option<LambdaInterval> {
    if x1 > 0.0 {
        iv.intersect(&LambdaInterval {
            lo: f64::NEG_INFINITY,
            hi: -x0 / x1,
        })
    } else if x1 < 0.0 {
        iv.intersect(&LambdaInterval {
            lo: -x0 / x1,
            hi: f64::INFINITY,
        })
    } else if x0 <= 0.0 {
        Some(iv)
    } else {
        None
    }
}

/// Pieces of `{λ : a λ² + b λ + c ≥ 0}` (at most two).
fn quadratic_nonneg(a: f64, b: f64, c: f64) -> Vec<LambdaInterval> {
    let all = LambdaInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    if a == 0.0 {
        return if b > 0.0 {
            vec![LambdaInterval {
                lo: -c / b,
                hi: f64::INFINITY,
            }]
        } else if b < 0.0 {
            vec![LambdaInterval {
                lo: f64::NEG_INFINITY,
                hi: -c / b,
            }]
        } else if c >= 0.0 {
            vec![all]
        } else {
            vec![]
        };
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc >= -DISCRIMINANT_RTOL * (b * b + (4.0 * a * c).abs()) {
            disc = 0.0;
        } else {
            return if a > 0.0 { vec![all] } else { vec![] };
        }
    }
    // stable roots: q = −(b + sign(b)√disc)/2, r1 = q/a, r2 = c/q
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if a < 0.0 {
        vec![LambdaInterval { lo, hi }]
    } else {
        vec![
            LambdaInterval {
                lo: f64::NEG_INFINITY,
                hi: lo,
            },
            LambdaInterval {
                lo: hi,
                hi: f64::INFINITY,
            },
        ]
    }
}

/// The set of `λ ≥ 0` with `g + λ q ⪯ −eps·I`, for order-2 `g` and `q`.
pub fn lambda_interval_2x2(g: &SymMatrix, q: &SymMatrix, eps: f64) -> Option<LambdaInterval> {
    assert!(
        g.order() == 2 && q.order() == 2,
        "scalar backend needs order-2 blocks"
    );
    let (a0, a1) = (g.get(0, 0) + eps, q.get(0, 0));
    let (b0, b1) = (g.get(1, 1) + eps, q.get(1, 1));
    let (c0, c1) = (g.get(0, 1), q.get(0, 1));

    let diag = half_line(LambdaInterval::NONNEGATIVE, a0, a1)?;
    let diag = half_line(diag, b0, b1)?;

    let qa = a1 * b1 - c1 * c1;
    let qb = a0 * b1 + a1 * b0 - 2.0 * c0 * c1;
    let qc = a0 * b0 - c0 * c0;
    let pieces: Vec<LambdaInterval> = quadratic_nonneg(qa, qb, qc)
        .iter()
        .filter_map(|p| diag.intersect(p))
        .collect();
    // the feasible set is convex, so surviving pieces are contiguous
    let lo = pieces.iter().map(|p| p.lo).reduce(f64::min)?;
    let hi = pieces.iter().map(|p| p.hi).reduce(f64::max)?;
    Some(LambdaInterval { lo, hi })
}

/// Sector multiplier, gradient-descent plant, `P = 1`:
///
/// ```text
/// [1 − ρ²  −α ]     [−2mL  L+m]
/// [ −α     α² ] + λ [ L+m   −2 ]  ⪯ −eps·I
/// ```
pub fn lambda_interval_sector(
    rho: f64,
    alpha: f64,
    fc: &FunctionClass,
    eps: f64,
) -> Option<LambdaInterval> {
    let (m, l) = (fc.m(), fc.l());
    let g = SymMatrix::from_lower(2, vec![1.0 - rho * rho, -alpha, alpha * alpha]).ok()?;
    let q = SymMatrix::from_lower(2, vec![-2.0 * m * l, l + m, -2.0]).ok()?;
    lambda_interval_2x2(&g, &q, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix2;

    fn fc(m: f64, l: f64) -> FunctionClass {
        FunctionClass::new(m, l).unwrap()
    }

    /// Brute-force scan: λ is admissible iff both eigenvalues of the 2×2 block are ≤ 0.
    fn scan(
        rho: f64,
        alpha: f64,
        f: &FunctionClass,
        lam_max: f64,
        steps: usize,
    ) -> Option<(f64, f64)> {
        let (m, l) = (f.m(), f.l());
        let mut found: Option<(f64, f64)> = None;
        for i in 0..=steps {
            let lam = lam_max * i as f64 / steps as f64;
            let blk = Matrix2::new(
                1.0 - rho * rho - 2.0 * lam * m * l,
                -alpha + lam * (l + m),
                -alpha + lam * (l + m),
                alpha * alpha - 2.0 * lam,
            );
            let ev = blk.symmetric_eigenvalues();
            if ev.max() <= 0.0 {
                found = Some(found.map_or((lam, lam), |(lo, _)| (lo, lam)));
            }
        }
        found
    }

    #[test]
    fn tangent_case_is_a_single_point() {
        // −81λ² + 1.62λ − 0.0081 has a double root at 0.01
        let iv = lambda_interval_sector(0.9, 0.1, &fc(1.0, 10.0), 0.0).unwrap();
        assert_abs_diff_eq!(iv.lo, 0.01, epsilon = 1e-7);
        assert_abs_diff_eq!(iv.hi, 0.01, epsilon = 1e-7);
    }

    #[test]
    fn below_rate_is_empty() {
        // discriminant 2.50969 − 2.56640 < 0
        assert_eq!(lambda_interval_sector(0.89, 0.1, &fc(1.0, 10.0), 0.0), None);
    }

    #[test]
    fn unit_rate_matches_scan() {
        let f = fc(1.0, 10.0);
        let iv = lambda_interval_sector(1.0, 0.1, &f, 0.0).unwrap();
        let (lo, hi) = scan(1.0, 0.1, &f, 0.05, 50_000).unwrap();
        let step = 0.05 / 50_000.0;
        assert!(
            (iv.lo - lo).abs() <= step && (iv.hi - hi).abs() <= step,
            "{iv:?} vs {lo}..{hi}"
        );
        // roots of −81λ² + 2λ − 0.01
        assert_abs_diff_eq!(iv.lo, (2.0 - 0.76f64.sqrt()) / 162.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, (2.0 + 0.76f64.sqrt()) / 162.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_agreement_on_a_sample() {
        for &(rho, alpha, m, l) in &[
            (0.95, 0.12, 1.0, 10.0),
            (0.7, 0.4, 1.0, 3.0),
            (0.99, 0.011, 1.0, 100.0),
            (0.5, 0.6, 1.0, 1.5),
        ] {
            let f = fc(m, l);
            let lam_max = 4.0 * alpha * alpha;
            let steps = 200_000;
            let iv = lambda_interval_sector(rho, alpha, &f, 0.0);
            let sc = scan(rho, alpha, &f, lam_max, steps);
            match (iv, sc) {
                (Some(iv), Some((lo, hi))) => {
                    let step = lam_max / steps as f64;
                    assert!(iv.lo <= lo + 1e-15 && lo - iv.lo <= step, "{rho} {alpha}");
                    assert!(iv.hi.min(lam_max) >= hi - 1e-15 && iv.hi.min(lam_max) - hi <= step);
                }
                (None, None) => {}
                other => panic!("disagreement at ({rho}, {alpha}): {other:?}"),
            }
        }
    }

    #[test]
    fn equal_moduli_give_a_linear_determinant() {
        // m = L makes the λ² coefficient vanish
        let f = fc(1.0, 1.0);
        let iv = lambda_interval_sector(0.5, 1.2, &f, 0.0).unwrap();
        assert!(iv.contains(iv.pick()));
        assert!(lambda_interval_sector(0.1, 1.2, &f, 0.0).is_none());
    }

    #[test]
    fn convex_determinant_case() {
        // q with positive determinant: −I block, feasible for all large λ
        let g = SymMatrix::from_lower(2, vec![1.0, 0.0, 1.0]).unwrap();
        let q = SymMatrix::from_lower(2, vec![-1.0, 0.0, -1.0]).unwrap();
        let iv = lambda_interval_2x2(&g, &q, 0.0).unwrap();
        assert_eq!(iv.lo, 1.0);
        assert_eq!(iv.hi, f64::INFINITY);
        assert_eq!(iv.pick(), 2.0);
    }
}
