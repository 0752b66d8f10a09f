//! Gradient descent with varying step sizes on diagonal quadratics.
//!
//! Trajectories are compared against the certified envelope
//! `‖ξ_k‖ ≤ √cond(P) ρᵏ ‖ξ₀‖`. Randomness comes from ChaCha8 seeded with a
//! `u64`, so reports reproduce bit for bit on every platform.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certifier::Certificate;
use crate::model::{FunctionClass, StepSizeInterval};

/// Ratio above which a trajectory counts as violating its bound.
pub const VIOLATION_TOL: f64 = 1e-9;

const PROBLEM_STREAM: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown policy '{0}' (expected uniform, endpoints, alternating, constant:<alpha> or adversarial)")]
    UnknownPolicy(String),
    #[error("the certificate carries no rate")]
    CertificateMissing,
    #[error("problem class (m = {m}, L = {l}) does not match the certificate")]
    FunctionClassMismatch { m: f64, l: f64 },
    #[error("step-size interval [{lo}, {hi}] is not covered by the certificate")]
    IntervalNotCertified { lo: f64, hi: f64 },
    #[error("constant step {alpha} lies outside [{lo}, {hi}]")]
    ConstantOutsideInterval { alpha: f64, lo: f64, hi: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// `f(x) = ½ Σ qᵢ xᵢ²` with every `qᵢ ∈ [m, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticProblem {
    eigenvalues: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(eigenvalues: Vec<f64>, fc: &FunctionClass) -> Result<Self, SimError> {
        if eigenvalues.is_empty() {
            return Err(SimError::InvalidProblem(
                "dimension must be at least 1".into(),
            ));
        }
        if let Some(q) = eigenvalues.iter().find(|&&q| !(fc.m() <= q && q <= fc.l())) {
            return Err(SimError::InvalidProblem(format!(
                "eigenvalue {q} outside [{}, {}]",
                fc.m(),
                fc.l()
            )));
        }
        Ok(Self { eigenvalues })
    }

    /// Random spectrum in `[m, L]`. From dimension two on, both extremes are included.
    pub fn random<R: Rng + ?Sized>(
        fc: &FunctionClass,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self, SimError> {
        let (m, l) = (fc.m(), fc.l());
        let draw = |rng: &mut R| if m < l { rng.random_range(m..=l) } else { m };
        let eigenvalues = match dim {
            0 => {
                return Err(SimError::InvalidProblem(
                    "dimension must be at least 1".into(),
                ))
            }
            1 => vec![match rng.random_range(0..3) {
                0 => m,
                1 => l,
                _ => draw(rng),
            }],
            _ => {
                let mut q: Vec<f64> = (0..dim).map(|_| draw(rng)).collect();
                q[0] = m;
                q[dim - 1] = l;
                q
            }
        };
        Self::new(eigenvalues, fc)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(x)
            .map(|(q, v)| q * v * v)
            .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.eigenvalues.iter().zip(x).map(|(q, v)| q * v).collect()
    }
}

/// One gradient step `ξ ← ξ − α ∇f(ξ)`.
pub fn step(xi: &[f64], alpha: f64, prob: &QuadraticProblem) -> Vec<f64> {
    assert_eq!(xi.len(), prob.dim(), "state dimension");
    xi.iter()
        .zip(prob.eigenvalues())
        .map(|(x, q)| (1.0 - alpha * q) * x)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// I.i.d. uniform on the interval.
    Uniform,
    /// I.i.d. fair coin between the endpoints.
    Endpoints,
    /// `lo, hi, lo, …`
    Alternating,
    Constant(f64),
    /// The endpoint with the larger `maxᵢ |1 − α qᵢ|`; ties go to `lo`.
    AdversarialGreedy,
}

impl Policy {
    pub const ALL_RANDOMIZED: [Policy; 4] = [
        Policy::Uniform,
        Policy::Endpoints,
        Policy::Alternating,
        Policy::AdversarialGreedy,
    ];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Uniform => f.write_str("uniform"),
            Policy::Endpoints => f.write_str("endpoints"),
            Policy::Alternating => f.write_str("alternating"),
            Policy::Constant(a) => write!(f, "constant:{a}"),
            Policy::AdversarialGreedy => f.write_str("adversarial"),
        }
    }
}

impl FromStr for Policy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "uniform" => Ok(Policy::Uniform),
            "endpoints" => Ok(Policy::Endpoints),
            "alternating" => Ok(Policy::Alternating),
            "adversarial" | "adversarial-greedy" | "greedy" => Ok(Policy::AdversarialGreedy),
            _ => t
                .strip_prefix("constant:")
                .and_then(|a| a.parse::<f64>().ok())
                .filter(|a| a.is_finite())
                .map(Policy::Constant)
                .ok_or_else(|| SimError::UnknownPolicy(s.to_string())),
        }
    }
}

fn contraction(alpha: f64, prob: &QuadraticProblem) -> f64 {
    prob.eigenvalues()
        .iter()
        .map(|q| (1.0 - alpha * q).abs())
        .fold(0.0, f64::max)
}

/// Step size for iteration `k`.
pub fn sample_alpha<R: Rng + ?Sized>(
    policy: Policy,
    interval: &StepSizeInterval,
    k: usize,
    prob: &QuadraticProblem,
    rng: &mut R,
) -> Result<f64, SimError> {
    let (lo, hi) = (interval.lo(), interval.hi());
    Ok(match policy {
        Policy::Uniform => {
            if lo < hi {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        }
        Policy::Endpoints => {
            if rng.random_bool(0.5) {
                hi
            } else {
                lo
            }
        }
        Policy::Alternating => {
            if k.is_multiple_of(2) {
                lo
            } else {
                hi
            }
        }
        Policy::Constant(alpha) => {
            if !interval.contains(alpha) {
                return Err(SimError::ConstantOutsideInterval { alpha, lo, hi });
            }
            alpha
        }
        Policy::AdversarialGreedy => {
            if contraction(hi, prob) > contraction(lo, prob) {
                hi
            } else {
                lo
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// `‖ξ_k‖` for `k = 0..=steps`.
    pub norms: Vec<f64>,
    /// `√cond(P) ρᵏ ‖ξ₀‖`.
    pub bound: Vec<f64>,
    pub alphas: Vec<f64>,
    pub max_ratio: f64,
    pub violated: bool,
    pub seed: u64,
    pub policy: Policy,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_certificate(
    prob: &QuadraticProblem,
    interval: &StepSizeInterval,
    cert: &Certificate,
) -> Result<(f64, f64), SimError> {
    let rho = cert.rho_star.ok_or(SimError::CertificateMissing)?;
    let cond = cert.cond_p.ok_or(SimError::CertificateMissing)?;
    let fc = &cert.fc;
    if prob
        .eigenvalues()
        .iter()
        .any(|&q| !(fc.m() <= q && q <= fc.l()))
    {
        return Err(SimError::FunctionClassMismatch {
            m: fc.m(),
            l: fc.l(),
        });
    }
    let ci = &cert.interval;
    let slack = 1e-12 * ci.hi();
    if interval.lo() < ci.lo() - slack || interval.hi() > ci.hi() + slack {
        return Err(SimError::IntervalNotCertified {
            lo: interval.lo(),
            hi: interval.hi(),
        });
    }
    Ok((rho, cond))
}

/// Runs `steps` iterations from `xi0` with step sizes drawn from a generator seeded by `seed`.
pub fn run(
    prob: &QuadraticProblem,
    interval: &StepSizeInterval,
    policy: Policy,
    steps: usize,
    xi0: &[f64],
    cert: &Certificate,
    seed: u64,
) -> Result<TrajectoryReport, SimError> {
    let (rho, cond) = check_certificate(prob, interval, cert)?;
    if xi0.len() != prob.dim() {
        return Err(SimError::InvalidProblem(format!(
            "initial state has length {}, problem dimension is {}",
            xi0.len(),
            prob.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = cond.sqrt() * norm(xi0);

    let mut xi = xi0.to_vec();
    let mut norms = Vec::with_capacity(steps + 1);
    let mut bound = Vec::with_capacity(steps + 1);
    let mut alphas = Vec::with_capacity(steps);
    norms.push(norm(&xi));
    bound.push(scale);
    for k in 0..steps {
        let alpha = sample_alpha(policy, interval, k, prob, &mut rng)?;
        xi = step(&xi, alpha, prob);
        alphas.push(alpha);
        norms.push(norm(&xi));
        bound.push(scale * rho.powi(k as i32 + 1));
    }
    let max_ratio = norms
        .iter()
        .zip(&bound)
        .map(|(&n, &b)| if n == 0.0 { 0.0 } else { n / b })
        .fold(0.0, f64::max);
    Ok(TrajectoryReport {
        norms,
        bound,
        alphas,
        violated: max_ratio > 1.0 + VIOLATION_TOL,
        max_ratio,
        seed,
        policy,
    })
}

/// One entry of a batch: a random problem of dimension `dim`, started at the all-ones vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub seed: u64,
    pub dim: usize,
    pub policy: Policy,
    pub steps: usize,
}

impl Trial {
    pub fn problem(&self, fc: &FunctionClass) -> Result<QuadraticProblem, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(PROBLEM_STREAM);
        QuadraticProblem::random(fc, self.dim, &mut rng)
    }
}

/// Seeds `master, master + 1, …` for `count` trials.
pub fn trial_seeds(master: u64, count: usize) -> impl Iterator<Item = u64> {
    (0..count as u64).map(move |i| master.wrapping_add(i))
}

pub fn run_trial(
    trial: &Trial,
    interval: &StepSizeInterval,
    cert: &Certificate,
) -> Result<TrajectoryReport, SimError> {
    let prob = trial.problem(&cert.fc)?;
    let xi0 = vec![1.0; prob.dim()];
    run(
        &prob,
        interval,
        trial.policy,
        trial.steps,
        &xi0,
        cert,
        trial.seed,
    )
}

/// Runs trials in parallel; reports come back in input order.
pub fn run_trials(
    trials: &[Trial],
    interval: &StepSizeInterval,
    cert: &Certificate,
) -> Result<Vec<TrajectoryReport>, SimError> {
    trials
        .par_iter()
        .map(|t| run_trial(t, interval, cert))
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::certifier::{certify, CertifyOptions};
    use crate::iqc::IqcKind;

    fn fc(m: f64, l: f64) -> FunctionClass {
        FunctionClass::new(m, l).unwrap()
    }

    fn cert_for(kappa: f64, c: f64) -> (StepSizeInterval, Certificate) {
        let f = fc(1.0, kappa);
        let iv = StepSizeInterval::from_c(&f, c).unwrap();
        let cert = certify(&f, &iv, 10, IqcKind::Sector, &CertifyOptions::default()).unwrap();
        (iv, cert)
    }

    #[test]
    fn step_examples() {
        let f = fc(1.0, 10.0);
        let p = QuadraticProblem::new(vec![1.0, 10.0], &f).unwrap();
        let x = step(&[1.0, 1.0], 0.1, &p);
        assert_abs_diff_eq!(x[0], 0.9, epsilon = 1e-15);
        assert_eq!(x[1], 0.0);
        assert_eq!(step(&[0.3, -2.0], 0.0, &p), vec![0.3, -2.0]);
        let one = QuadraticProblem::new(vec![10.0], &f).unwrap();
        assert_eq!(step(&[1.0], 0.1, &one), vec![0.0]);
    }

    #[test]
    fn problem_validation() {
        let f = fc(1.0, 10.0);
        assert!(QuadraticProblem::new(vec![], &f).is_err());
        assert!(QuadraticProblem::new(vec![0.5], &f).is_err());
        assert!(QuadraticProblem::new(vec![10.5], &f).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 1..=5 {
            let p = QuadraticProblem::random(&f, dim, &mut rng).unwrap();
            assert_eq!(p.dim(), dim);
            if dim >= 2 {
                assert_eq!(p.eigenvalues()[0], 1.0);
                assert_eq!(p.eigenvalues()[dim - 1], 10.0);
            }
        }
        assert_abs_diff_eq!(
            QuadraticProblem::new(vec![1.0, 10.0], &f)
                .unwrap()
                .value(&[1.0, 1.0]),
            5.5
        );
    }

    #[test]
    fn policy_examples() {
        let f = fc(1.0, 10.0);
        let p = QuadraticProblem::new(vec![1.0, 10.0], &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let iv = StepSizeInterval::new(0.05, 0.2).unwrap();
        for k in 0..5 {
            assert_eq!(
                sample_alpha(Policy::Constant(0.1), &iv, k, &p, &mut rng).unwrap(),
                0.1
            );
        }
        let iv = StepSizeInterval::new(0.1, 0.14).unwrap();
        let alt: Vec<f64> = (0..3)
            .map(|k| sample_alpha(Policy::Alternating, &iv, k, &p, &mut rng).unwrap())
            .collect();
        assert_eq!(alt, vec![0.1, 0.14, 0.1]);
        assert!(matches!(
            sample_alpha(Policy::Constant(0.5), &iv, 0, &p, &mut rng),
            Err(SimError::ConstantOutsideInterval { .. })
        ));
    }

    #[test]
    fn greedy_compares_both_endpoints() {
        let f = fc(1.0, 10.0);
        let p = QuadraticProblem::new(vec![1.0, 10.0], &f).unwrap();
        let iv = StepSizeInterval::new(1.0 / 14.0, 0.14).unwrap();
        let at_lo = (1.0f64 - 1.0 / 14.0)
            .abs()
            .max((1.0f64 - 10.0 / 14.0).abs());
        let at_hi = (1.0f64 - 0.14).abs().max((1.0f64 - 1.4).abs());
        let want = if at_hi > at_lo { 0.14 } else { 1.0 / 14.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_alpha(Policy::AdversarialGreedy, &iv, 0, &p, &mut rng).unwrap(),
            want
        );
        assert_eq!(want, 1.0 / 14.0);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("uniform".parse::<Policy>().unwrap(), Policy::Uniform);
        assert_eq!("Endpoints".parse::<Policy>().unwrap(), Policy::Endpoints);
        assert_eq!(
            "constant:0.1".parse::<Policy>().unwrap(),
            Policy::Constant(0.1)
        );
        assert_eq!(
            "adversarial".parse::<Policy>().unwrap(),
            Policy::AdversarialGreedy
        );
        assert!(matches!(
            "random".parse::<Policy>(),
            Err(SimError::UnknownPolicy(_))
        ));
        assert!("constant:x".parse::<Policy>().is_err());
        for p in [
            Policy::Uniform,
            Policy::Constant(0.25),
            Policy::AdversarialGreedy,
        ] {
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
    }

    #[test]
    fn first_step_within_bound() {
        let f = fc(1.0, 10.0);
        let (iv, mut cert) = cert_for(10.0, 1.0);
        cert.rho_star = Some(0.9);
        cert.cond_p = Some(1.0);
        let p = QuadraticProblem::new(vec![1.0, 10.0], &f).unwrap();
        let r = run(&p, &iv, Policy::Constant(0.1), 1, &[1.0, 1.0], &cert, 0).unwrap();
        assert_abs_diff_eq!(r.norms[1], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound[1], 0.9 * 2f64.sqrt(), epsilon = 1e-15);
        assert!(!r.violated);
    }

    #[test]
    fn zero_start_never_violates() {
        let f = fc(1.0, 10.0);
        let (iv, cert) = cert_for(10.0, 1.4);
        let p = QuadraticProblem::new(vec![1.0, 4.0, 10.0], &f).unwrap();
        let r = run(&p, &iv, Policy::Uniform, 50, &[0.0; 3], &cert, 9).unwrap();
        assert!(r.norms.iter().all(|&n| n == 0.0));
        assert_eq!(r.max_ratio, 0.0);
        assert!(!r.violated);
    }

    #[test]
    fn zero_steps_ratio_is_one_with_unit_condition() {
        let f = fc(1.0, 10.0);
        let (iv, cert) = cert_for(10.0, 1.0);
        let p = QuadraticProblem::new(vec![2.0, 3.0], &f).unwrap();
        let r = run(&p, &iv, Policy::Uniform, 0, &[1.0, 1.0], &cert, 0).unwrap();
        assert_eq!(r.norms.len(), 1);
        assert_abs_diff_eq!(r.max_ratio, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn missing_or_mismatched_certificate() {
        let (iv, cert) = cert_for(10.0, 2.1);
        let f = fc(1.0, 10.0);
        let p = QuadraticProblem::new(vec![1.0], &f).unwrap();
        assert_eq!(
            run(&p, &iv, Policy::Uniform, 5, &[1.0], &cert, 0),
            Err(SimError::CertificateMissing)
        );
        let (iv, cert) = cert_for(5.0, 1.0);
        let p = QuadraticProblem::new(vec![8.0], &f).unwrap();
        assert!(matches!(
            run(&p, &iv, Policy::Uniform, 5, &[1.0], &cert, 0),
            Err(SimError::FunctionClassMismatch { .. })
        ));
        let p = QuadraticProblem::new(vec![2.0], &f).unwrap();
        let wide = StepSizeInterval::new(iv.lo(), 2.0 * iv.hi()).unwrap();
        assert!(matches!(
            run(&p, &wide, Policy::Uniform, 5, &[1.0], &cert, 0),
            Err(SimError::IntervalNotCertified { .. })
        ));
    }

    #[test]
    fn slow_mode_attains_the_gradient_rate() {
        for kappa in [2.0, 10.0, 100.0] {
            let f = fc(1.0, kappa);
            let (iv, cert) = cert_for(kappa, 1.0);
            let rho = 1.0 - 1.0 / kappa;
            let p = QuadraticProblem::new(vec![1.0], &f).unwrap();
            let r = run(
                &p,
                &iv,
                Policy::Constant(1.0 / kappa),
                100,
                &[1.0],
                &cert,
                0,
            )
            .unwrap();
            for (k, n) in r.norms.iter().enumerate() {
                assert!(n / rho.powi(k as i32) >= 1.0 - 1e-6, "kappa {kappa}, k {k}");
            }
            assert!(!r.violated);
        }
    }

    #[test]
    fn soundness_on_a_thousand_uniform_runs() {
        let (iv, cert) = cert_for(10.0, 1.4);
        let trials: Vec<Trial> = trial_seeds(42, 1000)
            .map(|seed| Trial {
                seed,
                dim: 1 + (seed % 5) as usize,
                policy: Policy::Uniform,
                steps: 200,
            })
            .collect();
        let reports = run_trials(&trials, &iv, &cert).unwrap();
        assert_eq!(reports.len(), 1000);
        assert!(reports.iter().all(|r| !r.violated));
    }

    #[test]
    fn batches_are_ordered_and_deterministic() {
        let (iv, cert) = cert_for(10.0, 1.4);
        let trials: Vec<Trial> = trial_seeds(7, 64)
            .map(|seed| Trial {
                seed,
                dim: 3,
                policy: Policy::Endpoints,
                steps: 40,
            })
            .collect();
        let a = run_trials(&trials, &iv, &cert).unwrap();
        let b = run_trials(&trials, &iv, &cert).unwrap();
        assert_eq!(a, b);
        for (t, r) in trials.iter().zip(&a) {
            assert_eq!(t.seed, r.seed);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn identical_inputs_identical_reports(seed in any::<u64>(), dim in 1usize..5, pick in 0usize..4) {
            let (iv, cert) = cert_for(10.0, 1.2);
            let t = Trial { seed, dim, policy: Policy::ALL_RANDOMIZED[pick], steps: 30 };
            let a = run_trial(&t, &iv, &cert).unwrap();
            let b = run_trial(&t, &iv, &cert).unwrap();
            prop_assert_eq!(a.norms.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            b.norms.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn sampled_steps_stay_in_interval(seed in any::<u64>(), lo in 0.01f64..1.0, w in 0.0f64..1.0, k in 0usize..100) {
            let f = fc(1.0, 10.0);
            let p = QuadraticProblem::new(vec![1.0, 10.0], &f).unwrap();
            let iv = StepSizeInterval::new(lo, lo + w).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for policy in Policy::ALL_RANDOMIZED.into_iter().chain([Policy::Constant(lo)]) {
                let a = sample_alpha(policy, &iv, k, &p, &mut rng).unwrap();
                prop_assert!(iv.contains(a));
            }
        }
    }
}
