//! The malicious RIS: a weighted stack of per-user cascade operators and a
//! projected-gradient ascent that keeps every reflection coefficient on the
//! unit circle.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{largest_eigenvalue, unit_phase, CMat, CVec, C64};
use crate::scenario::ThetaInit;

/// Weighted vertical stack `[√ν_1 S_1; ...; √ν_K S_K]` with its Gram matrix.
#[derive(Debug, Clone)]
pub struct StackedOperator {
    pub stacked: CMat,
    /// `S̄ᴴ S̄`, `L x L` Hermitian.
    pub gram: CMat,
    /// Largest eigenvalue of `gram`.
    pub lambda_star: f64,
    pub weights: Vec<f64>,
}

pub fn stack_weighted(ops: &[CMat], nu: &[f64]) -> Result<StackedOperator> {
    if ops.is_empty() || ops.len() != nu.len() {
        return Err(Error::Dimension(format!(
            "{} operators and {} weights",
            ops.len(),
            nu.len()
        )));
    }
    let l = ops[0].ncols();
    if let Some(bad) = ops.iter().find(|s| s.ncols() != l) {
        return Err(Error::Dimension(format!(
            "operators have {l} and {} columns",
            bad.ncols()
        )));
    }
    if let Some(bad) = nu.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("attack weight {bad} is not positive")));
    }
    let rows: usize = ops.iter().map(|s| s.nrows()).sum();
    let mut stacked = CMat::zeros(rows, l);
    let mut at = 0;
    for (s, &w) in ops.iter().zip(nu) {
        let mut block = stacked.rows_mut(at, s.nrows());
        block.copy_from(s);
        block *= C64::new(w.sqrt(), 0.0);
        at += s.nrows();
    }
    let gram = stacked.ad_mul(&stacked);
    let lambda_star = largest_eigenvalue(&gram).max(0.0);
    Ok(StackedOperator {
        stacked,
        gram,
        lambda_star,
        weights: nu.to_vec(),
    })
}

impl StackedOperator {
    pub fn ris_elements(&self) -> usize {
        self.stacked.ncols()
    }

    pub fn objective(&self, theta: &CVec) -> f64 {
        attack_objective(&self.stacked, theta)
    }
}

/// `‖S̄ θ‖²`.
pub fn attack_objective(stacked: &CMat, theta: &CVec) -> f64 {
    (stacked * theta).norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Optimized,
    Disco,
    /// No RIS in the propagation environment.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisProfile {
    pub theta: CVec,
    pub provenance: Provenance,
}

impl RisProfile {
    pub fn absent(ris_elements: usize) -> Self {
        RisProfile {
            theta: CVec::zeros(ris_elements),
            provenance: Provenance::Zero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    /// Objective at each iterate, starting with the initial point.
    pub objective: Vec<f64>,
    pub step: f64,
    pub iterations_run: usize,
    /// Largest `||θ_l| - 1|` over all projected iterates.
    pub max_modulus_error: f64,
    /// The operator was identically zero and the initial point was returned.
    pub zero_operator: bool,
}

pub fn initial_theta(ris_elements: usize, init: ThetaInit) -> CVec {
    match init {
        ThetaInit::Ones => CVec::from_element(ris_elements, C64::new(1.0, 0.0)),
        ThetaInit::FirstBasis => {
            let mut t = CVec::zeros(ris_elements);
            if ris_elements > 0 {
                t[0] = C64::new(1.0, 0.0);
            }
            t
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOptimizer {
    pub iterations: usize,
    pub beta: f64,
    /// Stop once the relative objective change stays below `1e-10` for ten iterations.
    pub early_stop: bool,
}

const EARLY_STOP_TOL: f64 = 1e-10;
const EARLY_STOP_PATIENCE: usize = 10;

impl PhaseOptimizer {
    /// Projected gradient ascent on `‖S̄θ‖²` subject to `|θ_l| = 1`.
    ///
    /// With step `α = β/λ*` each iteration forms `δ = S̄ᴴS̄θ` (through the
    /// precomputed Gram matrix), takes `φ = θ + αδ` and projects every entry
    /// back to the unit circle. Runs `iterations - 1` updates, so the trace
    /// holds `iterations` objective values.
    pub fn run(&self, op: &StackedOperator, theta0: &CVec) -> Result<(RisProfile, OptimizationTrace)> {
        if self.iterations == 0 {
            return Err(Error::Domain("iteration count must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Domain("beta out of (0,1)".into()));
        }
        let l = op.ris_elements();
        if theta0.len() != l {
            return Err(Error::Dimension(format!(
                "initial phase vector has {} entries, RIS has {l}",
                theta0.len()
            )));
        }

        let mut theta = theta0.clone();
        let mut delta = CVec::zeros(l);
        op.gram.mul_to(&theta, &mut delta);
        let mut objective = Vec::with_capacity(self.iterations);
        objective.push(theta.dotc(&delta).re);

        if op.lambda_star <= 0.0 {
            return Ok((
                RisProfile {
                    theta,
                    provenance: Provenance::Optimized,
                },
                OptimizationTrace {
                    objective,
                    step: 0.0,
                    iterations_run: 0,
                    max_modulus_error: 0.0,
                    zero_operator: true,
                },
            ));
        }

        let step = self.beta / op.lambda_star;
        let step_c = C64::new(step, 0.0);
        let mut max_modulus_error: f64 = 0.0;
        let mut quiet = 0;
        let mut iterations_run = 0;
        for _ in 1..self.iterations {
            for (t, d) in theta.iter_mut().zip(delta.iter()) {
                *t = unit_phase(*t + step_c * d);
                max_modulus_error = max_modulus_error.max((t.norm() - 1.0).abs());
            }
            op.gram.mul_to(&theta, &mut delta);
            let f = theta.dotc(&delta).re;
            let prev = *objective.last().expect("trace starts non-empty");
            objective.push(f);
            iterations_run += 1;

            if self.early_stop {
                if (f - prev).abs() <= EARLY_STOP_TOL * f.abs() {
                    quiet += 1;
                    if quiet >= EARLY_STOP_PATIENCE {
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
        }

        Ok((
            RisProfile {
                theta,
                provenance: Provenance::Optimized,
            },
            OptimizationTrace {
                objective,
                step,
                iterations_run,
                max_modulus_error,
                zero_operator: false,
            },
        ))
    }
}

/// Uniformly random reflection phases.
pub fn disco_profile<R: Rng + ?Sized>(ris_elements: usize, rng: &mut R) -> RisProfile {
    let theta = CVec::from_iterator(
        ris_elements,
        (0..ris_elements).map(|_| C64::from_polar(1.0, rng.random_range(0.0..TAU))),
    );
    RisProfile {
        theta,
        provenance: Provenance::Disco,
    }
}
