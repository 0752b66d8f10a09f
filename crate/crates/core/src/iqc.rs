//! IQC multipliers for the gradient of a function in `S(m, L)` and the
//! augmented plant/filter system they induce.
//!
//! A multiplier is a pair `(Ψ, M)`: a discrete-time filter
//!
//! ```text
//! η⁺ = A_Ψ η + B_Ψʸ y + B_Ψᵘ u
//! z  = C_Ψ η + D_Ψʸ y + D_Ψᵘ u
//! ```
//!
//! and a symmetric middle matrix `M`. All three families here (sector,
//! weighted off-by-1, Zames-Falb off-by-k) share `M = [[0, 1], [1, 0]]` and
//! differ only in the filter memory and its weights `h`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, SymMatrix};
use crate::model::{FunctionClass, Plant};

/// Relative slack when checking weight constraints that defaults meet with equality.
pub const WEIGHT_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IqcError {
    #[error("weight out of range: {0}")]
    WeightOutOfRange(String),
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("filter order must be at least 1")]
    EmptyWeights,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("plant feedthrough must be zero, got {0}")]
    Feedthrough(f64),
    #[error("unknown IQC kind '{0}' (expected sector, wob1 or zf:<k>)")]
    UnknownKind(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which multiplier family to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum IqcKind {
    Sector,
    WeightedOffBy1,
    ZamesFalb(usize),
}

impl IqcKind {
    /// Number of filter states.
    pub fn filter_order(&self) -> usize {
        match self {
            IqcKind::Sector => 0,
            IqcKind::WeightedOffBy1 => 1,
            IqcKind::ZamesFalb(k) => *k,
        }
    }

    /// Weights used when none are supplied: `h_j = ρ^(2j) / k`.
    pub fn default_weights(&self, rho: f64) -> Vec<f64> {
        default_weights(rho, self.filter_order())
    }

    /// The multiplier of this family with default weights at rate `rho`.
    pub fn instantiate(&self, fc: &FunctionClass, rho: f64) -> Result<IqcMultiplier, IqcError> {
        match self {
            IqcKind::Sector => Ok(sector(fc)),
            IqcKind::WeightedOffBy1 => weighted_off_by_1(fc, rho, rho * rho),
            IqcKind::ZamesFalb(_) => zames_falb(fc, rho, &self.default_weights(rho)),
        }
    }
}

impl fmt::Display for IqcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IqcKind::Sector => write!(f, "sector"),
            IqcKind::WeightedOffBy1 => write!(f, "wob1"),
            IqcKind::ZamesFalb(k) => write!(f, "zf:{k}"),
        }
    }
}

impl FromStr for IqcKind {
    type Err = IqcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sector" => Ok(IqcKind::Sector),
            "wob1" => Ok(IqcKind::WeightedOffBy1),
            other => match other.strip_prefix("zf:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(IqcKind::ZamesFalb(k)),
                _ => Err(IqcError::UnknownKind(s.to_string())),
            },
        }
    }
}

impl From<IqcKind> for String {
    fn from(k: IqcKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for IqcKind {
    type Error = IqcError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `h_j = ρ^(2j) / k` for `j = 1..=k`. Meets `Σ ρ^(-2j) h_j ≤ 1` with equality.
pub fn default_weights(rho: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|j| rho.powi(2 * j as i32) / k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqcMultiplier {
    pub kind: IqcKind,
    pub weights: Vec<f64>,
    pub psi_a: Matrix,
    pub psi_by: Matrix,
    pub psi_bu: Matrix,
    pub psi_c: Matrix,
    pub psi_dy: Matrix,
    pub psi_du: Matrix,
    pub mid: SymMatrix,
}

impl IqcMultiplier {
    pub fn filter_order(&self) -> usize {
        self.psi_a.rows()
    }

    /// Runs the filter from a zero state on the sequences `ys`, `us`.
    pub fn filter(&self, ys: &[f64], us: &[f64]) -> Vec<[f64; 2]> {
        assert_eq!(ys.len(), us.len(), "input sequences must have equal length");
        let k = self.filter_order();
        let mut eta = vec![0.0; k];
        let mut out = Vec::with_capacity(ys.len());
        for (&y, &u) in ys.iter().zip(us) {
            let mut z = [0.0; 2];
            for (r, zr) in z.iter_mut().enumerate() {
                *zr = self.psi_dy.get(r, 0) * y
                    + self.psi_du.get(r, 0) * u
                    + (0..k).map(|j| self.psi_c.get(r, j) * eta[j]).sum::<f64>();
            }
            out.push(z);
            let next: Vec<f64> = (0..k)
                .map(|i| {
                    (0..k).map(|j| self.psi_a.get(i, j) * eta[j]).sum::<f64>()
                        + self.psi_by.get(i, 0) * y
                        + self.psi_bu.get(i, 0) * u
                })
                .collect();
            eta = next;
        }
        out
    }
}

fn unit_swap() -> SymMatrix {
    SymMatrix::from_lower(2, vec![0.0, 1.0, 0.0]).expect("static 2x2")
}

fn build(fc: &FunctionClass, kind: IqcKind, weights: Vec<f64>) -> IqcMultiplier {
    let k = weights.len();
    let mut psi_a = Matrix::zeros(k, k);
    for i in 1..k {
        psi_a.set(i, i - 1, 1.0);
    }
    let mut psi_by = Matrix::zeros(k, 1);
    let mut psi_bu = Matrix::zeros(k, 1);
    if k > 0 {
        psi_by.set(0, 0, -fc.l());
        psi_bu.set(0, 0, 1.0);
    }
    let mut psi_c = Matrix::zeros(2, k);
    for (j, &h) in weights.iter().enumerate() {
        psi_c.set(0, j, h);
    }
    IqcMultiplier {
        kind,
        weights,
        psi_a,
        psi_by,
        psi_bu,
        psi_c,
        psi_dy: Matrix::column(&[fc.l(), -fc.m()]),
        psi_du: Matrix::column(&[-1.0, 1.0]),
        mid: unit_swap(),
    }
}

fn check_rate(rho: f64) -> Result<(), IqcError> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(IqcError::InvalidRate(rho))
    }
}

/// Static sector multiplier: `z = (L y − u, u − m y)`.
pub fn sector(fc: &FunctionClass) -> IqcMultiplier {
    build(fc, IqcKind::Sector, Vec::new())
}

/// One-step memory multiplier, valid for `h1 ∈ [0, ρ²]`.
pub fn weighted_off_by_1(fc: &FunctionClass, rho: f64, h1: f64) -> Result<IqcMultiplier, IqcError> {
    check_rate(rho)?;
    let cap = rho * rho;
    if !(h1.is_finite() && h1 >= 0.0 && h1 <= cap * (1.0 + WEIGHT_RTOL)) {
        return Err(IqcError::WeightOutOfRange(format!(
            "h1 = {h1} not in [0, rho^2 = {cap}]"
        )));
    }
    Ok(build(fc, IqcKind::WeightedOffBy1, vec![h1]))
}

/// Off-by-k multiplier with a shift-register filter.
///
/// Requires `0 ≤ h_j ≤ 1` and `Σ_j ρ^(-2j) h_j ≤ 1`.
pub fn zames_falb(fc: &FunctionClass, rho: f64, h: &[f64]) -> Result<IqcMultiplier, IqcError> {
    check_rate(rho)?;
    if h.is_empty() {
        return Err(IqcError::EmptyWeights);
    }
    if let Some((j, &hj)) = h
        .iter()
        .enumerate()
        .find(|(_, &hj)| !(hj.is_finite() && (0.0..=1.0).contains(&hj)))
    {
        return Err(IqcError::WeightOutOfRange(format!(
            "h_{} = {hj} not in [0, 1]",
            j + 1
        )));
    }
    let weighted: f64 = h
        .iter()
        .enumerate()
        .map(|(j, &hj)| hj * rho.powi(-2 * (j as i32 + 1)))
        .sum();
    if weighted > 1.0 + WEIGHT_RTOL {
        return Err(IqcError::WeightOutOfRange(format!(
            "sum of rho^(-2j) h_j = {weighted} exceeds 1"
        )));
    }
    Ok(build(fc, IqcKind::ZamesFalb(h.len()), h.to_vec()))
}

/// Plant in feedback with the multiplier filter; state `x = (ξ, η)`.
///
/// `B(α) = b0 + α b1`, where `b1` is nonzero only in the plant row.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub a: Matrix,
    pub b0: Matrix,
    pub b1: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl AugmentedSystem {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn b_at(&self, alpha: f64) -> Matrix {
        self.b0
            .add_scaled(&self.b1, alpha)
            .expect("b0 and b1 share a shape by construction")
    }
}

fn expect_shape(name: &str, m: &Matrix, shape: (usize, usize)) -> Result<(), IqcError> {
    if m.shape() == shape {
        Ok(())
    } else {
        Err(IqcError::DimensionMismatch(format!(
            "{name} has shape {:?}, expected {:?}",
            m.shape(),
            shape
        )))
    }
}

/// Assembles
///
/// ```text
/// A = [A_G 0; B_Ψʸ C_G  A_Ψ]    B(α) = [B_G(α); B_Ψᵘ]
/// C = [D_Ψʸ C_G  C_Ψ]           D = D_Ψᵘ
/// ```
pub fn augment(plant: &Plant, iqc: &IqcMultiplier) -> Result<AugmentedSystem, IqcError> {
    if plant.d != 0.0 {
        return Err(IqcError::Feedthrough(plant.d));
    }
    let k = iqc.psi_a.rows();
    expect_shape("psi_a", &iqc.psi_a, (k, k))?;
    expect_shape("psi_by", &iqc.psi_by, (k, 1))?;
    expect_shape("psi_bu", &iqc.psi_bu, (k, 1))?;
    expect_shape("psi_c", &iqc.psi_c, (2, k))?;
    expect_shape("psi_dy", &iqc.psi_dy, (2, 1))?;
    expect_shape("psi_du", &iqc.psi_du, (2, 1))?;
    if iqc.mid.order() != 2 {
        return Err(IqcError::DimensionMismatch(format!(
            "middle matrix has order {}, expected 2",
            iqc.mid.order()
        )));
    }

    let n = 1 + k;
    let mut a = Matrix::zeros(n, n);
    a.set(0, 0, plant.a);
    for i in 0..k {
        a.set(1 + i, 0, iqc.psi_by.get(i, 0) * plant.c);
        for j in 0..k {
            a.set(1 + i, 1 + j, iqc.psi_a.get(i, j));
        }
    }
    let mut b0 = Matrix::zeros(n, 1);
    let mut b1 = Matrix::zeros(n, 1);
    b0.set(0, 0, plant.b0);
    b1.set(0, 0, plant.b1);
    for i in 0..k {
        b0.set(1 + i, 0, iqc.psi_bu.get(i, 0));
    }
    let mut c = Matrix::zeros(2, n);
    for r in 0..2 {
        c.set(r, 0, iqc.psi_dy.get(r, 0) * plant.c);
        for j in 0..k {
            c.set(r, 1 + j, iqc.psi_c.get(r, j));
        }
    }
    Ok(AugmentedSystem {
        a,
        b0,
        b1,
        c,
        d: iqc.psi_du.clone(),
    })
}

/// `[C D]ᵀ M [C D]`, of order `state_dim + 1`.
pub fn quad_form(aug: &AugmentedSystem, iqc: &IqcMultiplier) -> Result<SymMatrix, IqcError> {
    let cd = aug.c.hstack(&aug.d)?;
    Ok(cd.congruence(&iqc.mid)?)
}
