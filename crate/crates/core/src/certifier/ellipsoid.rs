//! Deep-cut ellipsoid method for families of affine matrix inequalities.
//!
//! Each constraint is `F(v) = F₀ + Σ vᵢ Fᵢ ⪯ −margin·I`. At a center `x`
//! violating some constraint, the top eigenvector `q` of the worst `F(x)`
//! gives the linear cut `qᵀF(y)q + margin ≤ 0`, which every feasible `y`
//! satisfies. The method stops with a feasible center, or declares the set
//! empty once the ellipsoid volume drops below that of a ball of radius
//! `r_min`.

use crate::linalg::{max_eigenvalue, SymMatrix};

use super::CertifyError;

/// `constant + Σ v[i] * coeffs[i] ⪯ −margin·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFamily {
    pub constant: SymMatrix,
    pub coeffs: Vec<SymMatrix>,
    pub margin: f64,
}

impl AffineFamily {
    pub fn eval(&self, v: &[f64]) -> SymMatrix {
        assert_eq!(v.len(), self.coeffs.len(), "decision vector length");
        self.coeffs
            .iter()
            .zip(v)
            .fold(self.constant.clone(), |acc, (c, &x)| {
                acc.add_scaled(c, x).expect("family members share an order")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidOptions {
    /// Radius of the initial ball centered at the origin.
    pub radius: f64,
    /// Smallest ball the feasible set must contain to be reported feasible.
    pub r_min: f64,
    /// Defaults to `⌈10 n² ln(radius / r_min)⌉`.
    pub max_iters: Option<usize>,
}

impl EllipsoidOptions {
    pub fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iters.unwrap_or_else(|| {
            let n = dim as f64;
            (10.0 * n * n * (self.radius / self.r_min).ln())
                .ceil()
                .max(1.0) as usize
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EllipsoidOutcome {
    Feasible { point: Vec<f64>, iterations: usize },
    Infeasible { iterations: usize },
}

struct Cut {
    violation: f64,
    grad: Vec<f64>,
}

/// Most violated constraint at `x`, or `None` if `x` is feasible. Ties keep the first.
fn worst_cut(families: &[AffineFamily], x: &[f64]) -> Option<Cut> {
    let mut worst: Option<(f64, usize, Vec<f64>)> = None;
    for (idx, fam) in families.iter().enumerate() {
        let top = max_eigenvalue(&fam.eval(x));
        let violation = top.value + fam.margin;
        if violation > 0.0 && worst.as_ref().is_none_or(|(w, _, _)| violation > *w) {
            worst = Some((violation, idx, top.vector));
        }
    }
    worst.map(|(violation, idx, q)| Cut {
        violation,
        grad: families[idx]
            .coeffs
            .iter()
            .map(|c| c.quadratic_form(&q))
            .collect(),
    })
}

pub fn ellipsoid_feasibility(
    families: &[AffineFamily],
    dim: usize,
    opts: &EllipsoidOptions,
) -> Result<EllipsoidOutcome, CertifyError> {
    if dim == 0 {
        return Err(CertifyError::InvalidInput(
            "decision dimension must be positive".into(),
        ));
    }
    if families.iter().any(|f| f.coeffs.len() != dim) {
        return Err(CertifyError::DimensionMismatch(
            "constraint family does not match the decision dimension".into(),
        ));
    }
    if !(opts.radius > opts.r_min && opts.r_min > 0.0) {
        return Err(CertifyError::InvalidInput(format!(
            "need radius > r_min > 0, got radius = {}, r_min = {}",
            opts.radius, opts.r_min
        )));
    }
    if dim == 1 {
        return interval_search(families, opts);
    }

    let n = dim as f64;
    let cap = opts.iteration_cap(dim);
    let mut x = vec![0.0; dim];
    let mut shape = vec![0.0; dim * dim];
    for i in 0..dim {
        shape[i * dim + i] = opts.radius * opts.radius;
    }
    let mut log_det = 2.0 * n * opts.radius.ln();
    let log_det_floor = 2.0 * n * opts.r_min.ln();

    for it in 0..cap {
        let Some(cut) = worst_cut(families, &x) else {
            return Ok(EllipsoidOutcome::Feasible {
                point: x,
                iterations: it,
            });
        };
        let hg: Vec<f64> = (0..dim)
            .map(|i| (0..dim).map(|j| shape[i * dim + j] * cut.grad[j]).sum())
            .collect();
        let ghg: f64 = cut.grad.iter().zip(&hg).map(|(g, h)| g * h).sum();
        if !(ghg > 0.0 && ghg.is_finite()) {
            // constant violation, or the ellipsoid has collapsed along the cut
            return Ok(EllipsoidOutcome::Infeasible { iterations: it + 1 });
        }
        let h = ghg.sqrt();
        let depth = cut.violation / h;
        if depth >= 1.0 {
            return Ok(EllipsoidOutcome::Infeasible { iterations: it + 1 });
        }
        let tau = (1.0 + n * depth) / (n + 1.0);
        let sigma = 2.0 * (1.0 + n * depth) / ((n + 1.0) * (1.0 + depth));
        let delta = n * n * (1.0 - depth * depth) / (n * n - 1.0);
        for i in 0..dim {
            x[i] -= tau * hg[i] / h;
        }
        for i in 0..dim {
            for j in 0..=i {
                let v = delta * (shape[i * dim + j] - sigma * hg[i] * hg[j] / ghg);
                shape[i * dim + j] = v;
                shape[j * dim + i] = v;
            }
        }
        log_det += n * delta.ln() + (1.0 - sigma).ln();
        if log_det < log_det_floor {
            return Ok(EllipsoidOutcome::Infeasible { iterations: it + 1 });
        }
    }
    Err(CertifyError::SolverBudgetExceeded { iterations: cap })
}

/// One-dimensional case: the ellipsoid is an interval and cuts are exact.
fn interval_search(
    families: &[AffineFamily],
    opts: &EllipsoidOptions,
) -> Result<EllipsoidOutcome, CertifyError> {
    let cap = opts.iteration_cap(1);
    let (mut lo, mut hi) = (-opts.radius, opts.radius);
    let mut x = 0.0;
    for it in 0..cap {
        let Some(cut) = worst_cut(families, &[x]) else {
            return Ok(EllipsoidOutcome::Feasible {
                point: vec![x],
                iterations: it,
            });
        };
        let g = cut.grad[0];
        if g > 0.0 {
            hi = hi.min(x - cut.violation / g);
        } else if g < 0.0 {
            lo = lo.max(x - cut.violation / g);
        } else {
            return Ok(EllipsoidOutcome::Infeasible { iterations: it + 1 });
        }
        if hi - lo < 2.0 * opts.r_min {
            return Ok(EllipsoidOutcome::Infeasible { iterations: it + 1 });
        }
        x = lo + 0.5 * (hi - lo);
    }
    Err(CertifyError::SolverBudgetExceeded { iterations: cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SymMatrix {
        SymMatrix::from_diag(&[v]).unwrap()
    }

    fn opts() -> EllipsoidOptions {
        EllipsoidOptions {
            radius: 10.0,
            r_min: 1e-7,
            max_iters: None,
        }
    }

    #[test]
    fn one_dimensional_toy() {
        // [[v]] ⪯ −0.1
        let fam = AffineFamily {
            constant: scalar(0.0),
            coeffs: vec![scalar(1.0)],
            margin: 0.1,
        };
        match ellipsoid_feasibility(&[fam], 1, &opts()).unwrap() {
            EllipsoidOutcome::Feasible { point, .. } => assert!(point[0] <= -0.1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_infeasible() {
        let fam = AffineFamily {
            constant: scalar(1.0),
            coeffs: vec![scalar(0.0)],
            margin: 0.0,
        };
        assert!(matches!(
            ellipsoid_feasibility(std::slice::from_ref(&fam), 1, &opts()).unwrap(),
            EllipsoidOutcome::Infeasible { .. }
        ));
        let fam2 = AffineFamily {
            constant: scalar(1.0),
            coeffs: vec![scalar(0.0), scalar(0.0)],
            margin: 0.0,
        };
        assert!(matches!(
            ellipsoid_feasibility(&[fam2], 2, &opts()).unwrap(),
            EllipsoidOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn finds_point_in_small_box() {
        // 0.3 ≤ v0 ≤ 0.31, −2 ≤ v1 ≤ −1.99, written as two 2×2 diagonal LMIs
        let d = |a: f64, b: f64| SymMatrix::from_diag(&[a, b]).unwrap();
        let upper = AffineFamily {
            constant: d(-0.31, 1.99),
            coeffs: vec![d(1.0, 0.0), d(0.0, 1.0)],
            margin: 0.0,
        };
        let lower = AffineFamily {
            constant: d(0.3, -2.0),
            coeffs: vec![d(-1.0, 0.0), d(0.0, -1.0)],
            margin: 0.0,
        };
        match ellipsoid_feasibility(&[upper, lower], 2, &opts()).unwrap() {
            EllipsoidOutcome::Feasible { point, .. } => {
                assert!((0.3..=0.31).contains(&point[0]), "{point:?}");
                assert!((-2.0..=-1.99).contains(&point[1]), "{point:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disjoint_halfspaces_are_infeasible() {
        // v0 + v1 ≥ 1 and v0 + v1 ≤ 0.5
        let a = AffineFamily {
            constant: scalar(1.0),
            coeffs: vec![scalar(-1.0), scalar(-1.0)],
            margin: 0.0,
        };
        let b = AffineFamily {
            constant: scalar(-0.5),
            coeffs: vec![scalar(1.0), scalar(1.0)],
            margin: 0.0,
        };
        assert!(matches!(
            ellipsoid_feasibility(&[a, b], 2, &opts()).unwrap(),
            EllipsoidOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn budget_is_reported_distinctly() {
        let fam = AffineFamily {
            constant: scalar(-1.0),
            coeffs: vec![scalar(1.0), scalar(0.0), scalar(0.0)],
            margin: 0.0,
        };
        // feasible only far from the start: v0 ≤ 1 holds at the origin, so shift it
        let far = AffineFamily {
            constant: scalar(5.0),
            coeffs: vec![scalar(0.0), scalar(-1.0), scalar(0.0)],
            margin: 0.0,
        };
        let tight = EllipsoidOptions {
            max_iters: Some(1),
            ..opts()
        };
        assert_eq!(
            ellipsoid_feasibility(&[fam, far], 3, &tight),
            Err(CertifyError::SolverBudgetExceeded { iterations: 1 })
        );
    }

    #[test]
    fn iteration_cap_formula() {
        let o = opts();
        let expected = (10.0 * 9.0 * (10.0f64 / 1e-7).ln()).ceil() as usize;
        assert_eq!(o.iteration_cap(3), expected);
    }
}
