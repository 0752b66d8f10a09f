//! Rate certification for gradient descent with interval-bounded step sizes.
//!
//! For a candidate rate `ρ` the certifier looks for `P ≻ 0`, `λ ≥ 0` with
//!
//! ```text
//! [AᵀPA − ρ²P   AᵀPB(α)  ]
//! [B(α)ᵀPA      B(α)ᵀPB(α)] + λ [C D]ᵀ M [C D] ⪯ 0
//! ```
//!
//! at every step size `α` of a grid over the admissible interval, then
//! bisects on `ρ`. The inequality is jointly homogeneous in `(P, λ)`, so `P`
//! is normalized to unit trace. A one-dimensional storage matrix reduces the
//! problem to intersecting exact `λ`-intervals; larger ones go through an
//! ellipsoid method.
//!
//! The block is matrix-convex in `α` (`B(α)` is affine and enters through a
//! Gram term), so feasibility at the two interval endpoints already implies
//! feasibility on the whole interval between them.

pub mod ellipsoid;
pub mod scalar;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iqc::{self, AugmentedSystem, IqcError, IqcKind, IqcMultiplier};
use crate::linalg::{self, cond_spd, LinalgError, SymMatrix};
use crate::model::{make_grid, FunctionClass, ModelError, Plant, StepGrid, StepSizeInterval};

pub use ellipsoid::{ellipsoid_feasibility, AffineFamily, EllipsoidOptions, EllipsoidOutcome};
pub use scalar::{lambda_interval_2x2, lambda_interval_sector, LambdaInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ellipsoid iteration budget of {iterations} exhausted before a decision")]
    SolverBudgetExceeded { iterations: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Iqc(#[from] IqcError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which feasibility routine handles an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Backend {
    /// λ-intervals for a one-dimensional storage matrix, ellipsoid otherwise.
    #[default]
    Auto,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub rho_tol: f64,
    /// Blocks must satisfy `⪯ −ε·I` in normalized coordinates, with
    /// `ε = feas_tol · (1 + max |[C D]ᵀM[C D]|)`.
    pub feas_tol: f64,
    /// Lower bound `δ` on the eigenvalues of the unit-trace `P` in normalized coordinates.
    pub p_min: f64,
    pub r_min: f64,
    /// Initial ellipsoid radius; `None` means `10 √dim`.
    pub radius: Option<f64>,
    pub max_iters: Option<usize>,
    pub backend: Backend,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            rho_lo: 1e-3,
            rho_hi: 1.0,
            rho_tol: 1e-4,
            feas_tol: 1e-9,
            p_min: 1e-8,
            r_min: 1e-7,
            radius: None,
            max_iters: None,
            backend: Backend::Auto,
        }
    }
}

impl CertifyOptions {
    fn validate(&self) -> Result<(), CertifyError> {
        let ok = self.rho_lo > 0.0
            && self.rho_lo < self.rho_hi
            && self.rho_tol > 0.0
            && self.feas_tol >= 0.0
            && self.p_min >= 0.0
            && self.p_min < 1.0
            && self.r_min > 0.0
            && [
                self.rho_lo,
                self.rho_hi,
                self.rho_tol,
                self.feas_tol,
                self.p_min,
                self.r_min,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(CertifyError::InvalidInput(format!(
                "inconsistent options: {self:?}"
            )))
        }
    }
}

/// The matrix-inequality family at one candidate rate.
#[derive(Debug, Clone, Copy)]
pub struct LmiInstance<'a> {
    pub rho: f64,
    pub grid: &'a StepGrid,
    pub aug: &'a AugmentedSystem,
    pub quad: &'a SymMatrix,
}

impl LmiInstance<'_> {
    pub fn state_dim(&self) -> usize {
        self.aug.state_dim()
    }

    fn margin(&self, opts: &CertifyOptions) -> f64 {
        opts.feas_tol * (1.0 + self.quad.max_abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "sym_rows")]
    pub p: SymMatrix,
    pub lambda: f64,
    /// Largest eigenvalue over all grid blocks at `(p, lambda)`.
    pub slack: f64,
    /// `trace(p)`.
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(self) -> Option<Witness> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rho_star: Option<f64>,
    pub witness: Option<Witness>,
    pub cond_p: Option<f64>,
    pub fc: FunctionClass,
    pub interval: StepSizeInterval,
    pub grid: StepGrid,
    pub iqc: IqcKind,
    /// Multiplier weights at `rho_star`.
    pub weights: Vec<f64>,
    pub bisection_iters: usize,
    pub options: CertifyOptions,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.rho_star.is_some()
    }
}

/// Rate of gradient descent with the constant step `alpha`: `max{|1 − αm|, |1 − αL|}`.
pub fn closed_form_rate(alpha: f64, fc: &FunctionClass) -> f64 {
    (1.0 - alpha * fc.m())
        .abs()
        .max((1.0 - alpha * fc.l()).abs())
}

/// The grid block at step size `alpha`, of order `state_dim + 1`.
pub fn assemble_lmi_block(
    aug: &AugmentedSystem,
    quad: &SymMatrix,
    rho: f64,
    alpha: f64,
    p: &SymMatrix,
    lambda: f64,
) -> Result<SymMatrix, CertifyError> {
    let n = aug.state_dim();
    if p.order() != n || quad.order() != n + 1 {
        return Err(CertifyError::DimensionMismatch(format!(
            "state dimension {n}, P of order {}, quadratic form of order {}",
            p.order(),
            quad.order()
        )));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(CertifyError::InvalidInput(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let ab = aug.a.hstack(&aug.b_at(alpha))?;
    let gram = ab.congruence(p)?;
    let rho2 = rho * rho;
    Ok(SymMatrix::from_fn(n + 1, |i, j| {
        let decay = if i < n && j < n {
            rho2 * p.get(i, j)
        } else {
            0.0
        };
        gram.get(i, j) - decay + lambda * quad.get(i, j)
    })?)
}

/// Largest eigenvalue over all grid blocks.
pub fn block_slack(
    inst: &LmiInstance<'_>,
    p: &SymMatrix,
    lambda: f64,
) -> Result<f64, CertifyError> {
    let mut worst = f64::NEG_INFINITY;
    for &alpha in inst.grid.points() {
        let blk = assemble_lmi_block(inst.aug, inst.quad, inst.rho, alpha, p, lambda)?;
        worst = worst.max(linalg::max_eigenvalue(&blk).value);
    }
    Ok(worst)
}

pub fn feasible_at_rho(
    inst: &LmiInstance<'_>,
    opts: &CertifyOptions,
) -> Result<Feasibility, CertifyError> {
    if !(inst.rho > 0.0 && inst.rho.is_finite()) {
        return Err(CertifyError::InvalidInput(format!(
            "rate must be positive, got {}",
            inst.rho
        )));
    }
    if inst.grid.is_empty() {
        return Err(CertifyError::InvalidInput("empty step-size grid".into()));
    }
    let norm = Normalized::new(inst)?;
    let scaled = LmiInstance {
        rho: inst.rho,
        grid: inst.grid,
        aug: &norm.aug,
        quad: &norm.quad,
    };
    let found = match (opts.backend, inst.state_dim()) {
        (Backend::Auto, 1) => feasible_scalar(&scaled, opts)?,
        _ => feasible_ellipsoid(&scaled, opts)?,
    };
    let Feasibility::Feasible(w) = found else {
        return Ok(Feasibility::Infeasible);
    };
    let t = &norm.state_scale;
    let p = SymMatrix::from_fn(w.p.order(), |i, j| w.p.get(i, j) / (t[i] * t[j]))?;
    let lambda = w.lambda / norm.quad_scale;
    Ok(Feasibility::Feasible(Witness {
        slack: block_slack(inst, &p, lambda)?,
        normalization: p.trace(),
        p,
        lambda,
    }))
}

/// Dimensionless form of an instance. With `σ = 1 / maxᵅ |B(α)₀|`, filter
/// states and the input are measured in units of `σ`, and the quadratic form
/// is divided by its largest entry. A witness `(P̃, λ̃)` of the scaled
/// instance maps back to `P = T⁻¹P̃T⁻¹`, `λ = λ̃ / quad_scale`.
struct Normalized {
    aug: AugmentedSystem,
    quad: SymMatrix,
    state_scale: Vec<f64>,
    quad_scale: f64,
}

impl Normalized {
    #[allow(clippy::needless_range_loop)]
    fn new(inst: &LmiInstance<'_>) -> Result<Self, CertifyError> {
        let n = inst.state_dim();
        let gain = inst
            .grid
            .points()
            .iter()
            .map(|&a| inst.aug.b_at(a).get(0, 0).abs())
            .fold(0.0, f64::max);
        let sigma = if gain > 0.0 && gain.is_finite() {
            1.0 / gain
        } else {
            1.0
        };
        let t: Vec<f64> = (0..=n).map(|i| if i == 0 { 1.0 } else { sigma }).collect();

        let aug = inst.aug;
        let mut a = aug.a.clone();
        let mut b0 = aug.b0.clone();
        let mut b1 = aug.b1.clone();
        let mut c = aug.c.clone();
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, aug.a.get(i, j) * t[j] / t[i]);
            }
            b0.set(i, 0, aug.b0.get(i, 0) * sigma / t[i]);
            b1.set(i, 0, aug.b1.get(i, 0) * sigma / t[i]);
        }
        for r in 0..c.rows() {
            for j in 0..n {
                c.set(r, j, aug.c.get(r, j) * t[j]);
            }
        }
        let d = aug.d.scale(sigma);
        let tq = SymMatrix::from_fn(n + 1, |i, j| inst.quad.get(i, j) * t[i] * t[j])?;
        let mu = tq.max_abs();
        let quad_scale = if mu > 0.0 { mu } else { 1.0 };
        Ok(Self {
            aug: AugmentedSystem { a, b0, b1, c, d },
            quad: tq.scale(1.0 / quad_scale),
            state_scale: t[..n].to_vec(),
            quad_scale,
        })
    }
}

fn feasible_scalar(
    inst: &LmiInstance<'_>,
    opts: &CertifyOptions,
) -> Result<Feasibility, CertifyError> {
    let eps = inst.margin(opts);
    let one = SymMatrix::identity(1);
    let mut acc = LambdaInterval::NONNEGATIVE;
    for &alpha in inst.grid.points() {
        let g = assemble_lmi_block(inst.aug, inst.quad, inst.rho, alpha, &one, 0.0)?;
        let Some(iv) = lambda_interval_2x2(&g, inst.quad, eps) else {
            return Ok(Feasibility::Infeasible);
        };
        match acc.intersect(&iv) {
            Some(next) => acc = next,
            None => return Ok(Feasibility::Infeasible),
        }
    }
    let lambda = acc.pick();
    Ok(Feasibility::Feasible(Witness {
        slack: block_slack(inst, &one, lambda)?,
        p: one,
        lambda,
        normalization: 1.0,
    }))
}

/// Decision vector layout: the packed lower triangle of `P` without its last
/// diagonal entry (fixed by `trace P = 1`), then a scaled `λ`.
struct Parametrization {
    order: usize,
    basis: Vec<SymMatrix>,
    anchor: SymMatrix,
    lambda_scale: f64,
}

impl Parametrization {
    fn new(order: usize, lambda_scale: f64) -> Result<Self, CertifyError> {
        let last = order - 1;
        let anchor =
            SymMatrix::from_fn(order, |i, j| if i == last && j == last { 1.0 } else { 0.0 })?;
        let mut basis = Vec::new();
        for i in 0..order {
            for j in 0..=i {
                if i == last && j == last {
                    continue;
                }
                basis.push(SymMatrix::from_fn(order, |r, c| {
                    if i == j {
                        match (r == i && c == i, r == last && c == last) {
                            (true, _) => 1.0,
                            (_, true) => -1.0,
                            _ => 0.0,
                        }
                    } else if (r == i && c == j) || (r == j && c == i) {
                        1.0
                    } else {
                        0.0
                    }
                })?);
            }
        }
        Ok(Self {
            order,
            basis,
            anchor,
            lambda_scale,
        })
    }

    fn dim(&self) -> usize {
        self.basis.len() + 1
    }

    fn p_at(&self, v: &[f64]) -> Result<SymMatrix, CertifyError> {
        let mut p = self.anchor.clone();
        for (b, &x) in self.basis.iter().zip(v) {
            p = p.add_scaled(b, x)?;
        }
        Ok(p)
    }

    fn lambda_at(&self, v: &[f64]) -> f64 {
        v[self.dim() - 1] * self.lambda_scale
    }
}

fn feasible_ellipsoid(
    inst: &LmiInstance<'_>,
    opts: &CertifyOptions,
) -> Result<Feasibility, CertifyError> {
    let n = inst.state_dim();
    let eps = inst.margin(opts);

    // λ scales like the squared plant gain over the |u|² weight of the quadratic form
    let quad_uu = inst.quad.get(n, n).abs();
    let gain = inst
        .grid
        .points()
        .iter()
        .map(|&a| inst.aug.b_at(a).get(0, 0).powi(2))
        .fold(0.0, f64::max);
    let lambda_scale = if quad_uu > 0.0 && gain > 0.0 {
        gain / quad_uu
    } else {
        1.0
    };

    let param = Parametrization::new(n, lambda_scale)?;
    let dim = param.dim();
    let zero_p = SymMatrix::zeros(n);

    let mut families = Vec::with_capacity(inst.grid.len() + 2);
    for &alpha in inst.grid.points() {
        let block = |p: &SymMatrix, lam: f64| {
            assemble_lmi_block(inst.aug, inst.quad, inst.rho, alpha, p, lam)
        };
        let mut coeffs = Vec::with_capacity(dim);
        for b in &param.basis {
            coeffs.push(block(b, 0.0)?);
        }
        coeffs.push(inst.quad.scale(lambda_scale));
        families.push(AffineFamily {
            constant: block(&param.anchor, 0.0)?,
            coeffs,
            margin: eps,
        });
    }
    // δI − P(v) ⪯ 0
    let mut p_coeffs: Vec<SymMatrix> = param.basis.iter().map(|b| b.scale(-1.0)).collect();
    p_coeffs.push(zero_p);
    families.push(AffineFamily {
        constant: param.anchor.scale(-1.0).shift_diagonal(opts.p_min),
        coeffs: p_coeffs,
        margin: 0.0,
    });
    // −λ ≤ 0
    let mut l_coeffs = vec![SymMatrix::zeros(1); dim];
    l_coeffs[dim - 1] = SymMatrix::identity(1).scale(-1.0);
    families.push(AffineFamily {
        constant: SymMatrix::zeros(1),
        coeffs: l_coeffs,
        margin: 0.0,
    });

    let eopts = EllipsoidOptions {
        radius: opts.radius.unwrap_or(10.0 * (dim as f64).sqrt()),
        r_min: opts.r_min,
        max_iters: opts.max_iters,
    };
    match ellipsoid_feasibility(&families, dim, &eopts)? {
        EllipsoidOutcome::Infeasible { .. } => Ok(Feasibility::Infeasible),
        EllipsoidOutcome::Feasible { point, .. } => {
            let p = param.p_at(&point)?;
            let lambda = param.lambda_at(&point).max(0.0);
            debug_assert_eq!(p.order(), param.order);
            Ok(Feasibility::Feasible(Witness {
                slack: block_slack(inst, &p, lambda)?,
                normalization: p.trace(),
                p,
                lambda,
            }))
        }
    }
}

struct System {
    mult: IqcMultiplier,
    aug: AugmentedSystem,
    quad: SymMatrix,
}

fn system_for(kind: IqcKind, fc: &FunctionClass, rho: f64) -> Result<System, CertifyError> {
    let mult = kind.instantiate(fc, rho)?;
    system_from(mult)
}

fn system_from(mult: IqcMultiplier) -> Result<System, CertifyError> {
    let aug = iqc::augment(&Plant::gradient_descent(), &mult)?;
    let quad = iqc::quad_form(&aug, &mult)?;
    Ok(System { mult, aug, quad })
}

/// Smallest certified rate in `[rho_lo, rho_hi)` by bisection.
///
/// The returned `rho_star` is always the feasible end of the final bracket.
pub fn certify(
    fc: &FunctionClass,
    interval: &StepSizeInterval,
    grid_size: usize,
    kind: IqcKind,
    opts: &CertifyOptions,
) -> Result<Certificate, CertifyError> {
    opts.validate()?;
    let grid = make_grid(interval, grid_size)?;
    let sector_cache = match kind {
        IqcKind::Sector => Some(system_from(iqc::sector(fc))?),
        _ => None,
    };

    let check = |rho: f64| -> Result<(Feasibility, Vec<f64>), CertifyError> {
        let owned;
        let sys = match &sector_cache {
            Some(s) => s,
            None => {
                owned = system_for(kind, fc, rho)?;
                &owned
            }
        };
        let inst = LmiInstance {
            rho,
            grid: &grid,
            aug: &sys.aug,
            quad: &sys.quad,
        };
        Ok((feasible_at_rho(&inst, opts)?, sys.mult.weights.clone()))
    };

    let mut cert = Certificate {
        rho_star: None,
        witness: None,
        cond_p: None,
        fc: *fc,
        interval: *interval,
        grid: grid.clone(),
        iqc: kind,
        weights: Vec::new(),
        bisection_iters: 0,
        options: *opts,
    };

    let top = opts.rho_hi - opts.rho_tol;
    if top <= opts.rho_lo {
        return Err(CertifyError::InvalidInput(
            "rho_hi - rho_tol must exceed rho_lo".into(),
        ));
    }
    let (best, mut best_weights) = match check(top)? {
        (Feasibility::Feasible(w), h) => (w, h),
        (Feasibility::Infeasible, _) => return Ok(cert),
    };
    let mut best = best;

    let (mut lo, mut hi) = (opts.rho_lo, top);
    if let (Feasibility::Feasible(w), h) = check(lo)? {
        best = w;
        best_weights = h;
        hi = lo;
    }
    while hi - lo > opts.rho_tol {
        let mid = lo + 0.5 * (hi - lo);
        cert.bisection_iters += 1;
        match check(mid)? {
            (Feasibility::Feasible(w), h) => {
                hi = mid;
                best = w;
                best_weights = h;
            }
            (Feasibility::Infeasible, _) => lo = mid,
        }
    }

    cert.cond_p = Some(cond_spd(&best.p)?);
    cert.rho_star = Some(hi);
    cert.witness = Some(best);
    cert.weights = best_weights;
    Ok(cert)
}

/// Replays every grid block at `(rho_star, P, λ)` and checks `P ≻ 0` and each block `⪯ 0`.
pub fn verify_certificate(cert: &Certificate) -> bool {
    let (Some(rho), Some(w)) = (cert.rho_star, cert.witness.as_ref()) else {
        return false;
    };
    let mult = match cert.iqc {
        IqcKind::Sector => Ok(iqc::sector(&cert.fc)),
        IqcKind::WeightedOffBy1 => cert
            .weights
            .first()
            .map_or(Err(IqcError::EmptyWeights), |&h| {
                iqc::weighted_off_by_1(&cert.fc, rho, h)
            }),
        IqcKind::ZamesFalb(_) => iqc::zames_falb(&cert.fc, rho, &cert.weights),
    };
    let Ok(sys) = mult.map_err(CertifyError::from).and_then(system_from) else {
        return false;
    };
    if w.lambda < 0.0 || w.p.order() != sys.aug.state_dim() {
        return false;
    }
    if linalg::min_eigenvalue(&w.p).value <= 0.0 {
        return false;
    }
    let inst = LmiInstance {
        rho,
        grid: &cert.grid,
        aug: &sys.aug,
        quad: &sys.quad,
    };
    matches!(block_slack(&inst, &w.p, w.lambda), Ok(s) if s <= 0.0)
}

mod sym_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::SymMatrix;

    pub fn serialize<S: Serializer>(m: &SymMatrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SymMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
