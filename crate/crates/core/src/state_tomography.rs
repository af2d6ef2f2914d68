//! Density-matrix reconstruction from Pauli expectation values.
//!
//! The estimate minimizes the squared mismatch with the measured expectation
//! values over the Bloch ball, with a small von Neumann entropy bonus that
//! decides the components the data leave open. The entropy term is a
//! tie-break only: once it has fixed the unmeasured components, the measured
//! ones are re-fit with the bonus switched off, so consistent data are
//! reproduced without entropy bias.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QptError, Result};
use crate::state::{bloch_entropy, density_from_bloch, BlochVector, DensityMatrix};

/// Default weight of the entropy bonus.
pub const DEFAULT_ENTROPY_WEIGHT: f64 = 1e-6;

const MAX_ITERATIONS: usize = 10_000;
const STEP_TOLERANCE: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;

/// Measurement axis of a Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn component(self, r: BlochVector) -> f64 {
        r.to_array()[self.index()]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Number of repetitions behind an expectation value.
///
/// Serialized as the string `"exact"` or a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shots {
    #[default]
    Exact,
    Finite(u64),
}

impl Shots {
    pub fn count(self) -> Option<u64> {
        match self {
            Shots::Exact => None,
            Shots::Finite(n) => Some(n),
        }
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Finite(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(Shots::Exact);
        }
        s.parse::<u64>()
            .map(Shots::Finite)
            .map_err(|_| QptError::Domain(format!("shots must be 'exact' or an integer, got '{s}'")))
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => serializer.serialize_str("exact"),
            Shots::Finite(n) => serializer.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ShotsVisitor;

        impl Visitor<'_> for ShotsVisitor {
            type Value = Shots;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"exact\" or a non-negative integer")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Shots, E> {
                Ok(Shots::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Shots, E> {
                u64::try_from(v)
                    .map(Shots::Finite)
                    .map_err(|_| E::custom("shots must be non-negative"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Shots, E> {
                if v == "exact" {
                    Ok(Shots::Exact)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(ShotsVisitor)
    }
}

/// One measured Pauli expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRecord {
    pub axis: Axis,
    pub value: f64,
    pub shots: Shots,
}

impl ExpectationRecord {
    pub fn exact(axis: Axis, value: f64) -> Self {
        Self {
            axis,
            value,
            shots: Shots::Exact,
        }
    }
}

/// Exact expectation records of a known state on all three axes.
pub fn exact_records(r: BlochVector) -> Vec<ExpectationRecord> {
    Axis::ALL
        .iter()
        .map(|&axis| ExpectationRecord::exact(axis, axis.component(r)))
        .collect()
}

/// A reconstructed state and its fit diagnostics.
#[derive(Debug, Clone)]
pub struct StateEstimate {
    pub rho: DensityMatrix,
    /// Root-sum-square mismatch with the measured expectation values.
    pub residual: f64,
    /// Von Neumann entropy in nats.
    pub entropy: f64,
    /// All three axes were measured.
    pub complete: bool,
}

/// Minimizes `objective` over the closed unit ball by projected gradient
/// descent with central finite-difference gradients, starting at `start`.
///
/// Stops when an accepted step is shorter than 1e-9 or after 10 000
/// iterations.
pub fn optimize_bloch(
    objective: impl Fn(BlochVector) -> f64,
    start: BlochVector,
) -> Result<BlochVector> {
    optimize_masked(&objective, start.clamped_to_ball(), [true; 3])
}

fn optimize_masked(
    objective: &dyn Fn(BlochVector) -> f64,
    start: BlochVector,
    free: [bool; 3],
) -> Result<BlochVector> {
    let eval = |r: [f64; 3]| -> Result<f64> {
        let v = objective(BlochVector::from_array(r).clamped_to_ball());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QptError::Domain(format!("objective is not finite at {r:?}")))
        }
    };
    let project = |r: [f64; 3]| BlochVector::from_array(r).clamped_to_ball().to_array();

    let mut r = start.to_array();
    let mut value = eval(r)?;
    let mut rate = 0.5;
    for _ in 0..MAX_ITERATIONS {
        let mut grad = [0.0; 3];
        for i in (0..3).filter(|&i| free[i]) {
            let mut up = r;
            let mut down = r;
            up[i] += FD_STEP;
            down[i] -= FD_STEP;
            grad[i] = (eval(up)? - eval(down)?) / (2.0 * FD_STEP);
        }

        let mut accepted = None;
        while rate > 1e-12 {
            let mut trial = r;
            for i in 0..3 {
                trial[i] -= rate * grad[i];
            }
            let trial = project(trial);
            let step2: f64 = (0..3).map(|i| (trial[i] - r[i]).powi(2)).sum();
            let trial_value = eval(trial)?;
            if trial_value <= value - 1e-4 * step2 / rate {
                accepted = Some((trial, trial_value, step2.sqrt()));
                break;
            }
            rate *= 0.5;
        }
        let Some((next, next_value, step)) = accepted else {
            break;
        };
        r = next;
        value = next_value;
        if step < STEP_TOLERANCE {
            break;
        }
        rate = (rate * 2.0).min(1.0);
    }
    Ok(BlochVector::from_array(r))
}

fn check_records(records: &[ExpectationRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(QptError::Domain("no expectation records".into()));
    }
    let mut seen = [false; 3];
    for rec in records {
        let i = rec.axis.index();
        if seen[i] {
            return Err(QptError::Domain(format!("axis {} measured twice", rec.axis)));
        }
        seen[i] = true;
        if !rec.value.is_finite() {
            return Err(QptError::Domain(format!("non-finite value on axis {}", rec.axis)));
        }
        if rec.shots == Shots::Finite(0) {
            return Err(QptError::Domain(format!("zero shots on axis {}", rec.axis)));
        }
    }
    Ok(())
}

fn residual(records: &[ExpectationRecord], r: BlochVector) -> f64 {
    records
        .iter()
        .map(|rec| (rec.axis.component(r) - rec.value).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Reconstructs a valid density matrix from expectation records.
pub fn reconstruct_state(records: &[ExpectationRecord], entropy_weight: f64) -> Result<StateEstimate> {
    check_records(records)?;
    if !(entropy_weight >= 0.0) || !entropy_weight.is_finite() {
        return Err(QptError::Domain(format!(
            "entropy weight must be finite and >= 0, got {entropy_weight}"
        )));
    }
    let mut measured = [false; 3];
    for rec in records {
        measured[rec.axis.index()] = true;
    }

    let mismatch = |r: BlochVector| -> f64 {
        records
            .iter()
            .map(|rec| (rec.axis.component(r) - rec.value).powi(2))
            .sum()
    };
    let penalized = |r: BlochVector| mismatch(r) - entropy_weight * bloch_entropy(r);

    let coarse = optimize_masked(&penalized, BlochVector::ORIGIN, [true; 3])?;
    let refined = optimize_masked(&mismatch, coarse, measured)?.clamped_to_ball();

    let rho = density_from_bloch(refined)?;
    Ok(StateEstimate {
        residual: residual(records, refined),
        entropy: bloch_entropy(refined),
        complete: measured.iter().all(|&m| m),
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(axis: Axis, value: f64) -> ExpectationRecord {
        ExpectationRecord::exact(axis, value)
    }

    /// Minimizer of the mismatch over a 0.005-step grid covering the ball.
    fn grid_oracle(records: &[ExpectationRecord]) -> BlochVector {
        let n = 200;
        let step = 1.0 / n as f64;
        let mut best = (f64::INFINITY, BlochVector::ORIGIN);
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let r = BlochVector::new(i as f64 * step, j as f64 * step, k as f64 * step);
                    if r.norm() > 1.0 {
                        continue;
                    }
                    let v = residual(records, r);
                    if v < best.0 {
                        best = (v, r);
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn consistent_pure_state() {
        let est = reconstruct_state(&[rec(Axis::X, 1.0), rec(Axis::Y, 0.0), rec(Axis::Z, 0.0)], 1e-6)
            .unwrap();
        assert!(est.rho.bloch().distance(BlochVector::new(1.0, 0.0, 0.0)) < 1e-8);
        assert!(est.residual < 1e-8);
        assert!(est.complete);
    }

    #[test]
    fn incomplete_data_leaves_unmeasured_at_zero() {
        let est = reconstruct_state(&[rec(Axis::Z, 0.5)], DEFAULT_ENTROPY_WEIGHT).unwrap();
        assert!(est.rho.bloch().distance(BlochVector::new(0.0, 0.0, 0.5)) < 1e-8);
        assert!(!est.complete);
    }

    #[test]
    fn inconsistent_data_matches_grid_oracle() {
        let records = [rec(Axis::X, 0.8), rec(Axis::Y, 0.0), rec(Axis::Z, 0.8)];
        let est = reconstruct_state(&records, DEFAULT_ENTROPY_WEIGHT).unwrap();
        let oracle = grid_oracle(&records);
        let r = est.rho.bloch();
        assert!(r.distance(oracle) < 0.01, "{r:?} vs {oracle:?}");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(r.distance(BlochVector::new(s, 0.0, s)) < 1e-6);
        // The shortfall is the distance from the data point to the sphere.
        let shortfall = (0.8f64 * 0.8 * 2.0).sqrt() - 1.0;
        assert!((est.residual - shortfall).abs() < 1e-6);
    }

    #[test]
    fn optimizer_examples() {
        let target = BlochVector::new(0.0, 0.0, 0.3);
        let r = optimize_bloch(|r| r.distance(target).powi(2), BlochVector::ORIGIN).unwrap();
        assert!(r.distance(target) < 1e-8);

        let outside = BlochVector::new(0.0, 0.0, 2.0);
        let r = optimize_bloch(|r| r.distance(outside).powi(2), BlochVector::ORIGIN).unwrap();
        assert!(r.distance(BlochVector::new(0.0, 0.0, 1.0)) < 1e-8);

        let records = [rec(Axis::X, 0.8), rec(Axis::Y, 0.0), rec(Axis::Z, 0.8)];
        let r = optimize_bloch(|r| residual(&records, r), BlochVector::ORIGIN).unwrap();
        let oracle = grid_oracle(&records);
        assert!(r.distance(oracle) < 0.01, "{r:?} vs {oracle:?}");

        assert!(optimize_bloch(|_| f64::NAN, BlochVector::ORIGIN).is_err());
    }

    #[test]
    fn record_validation() {
        assert!(reconstruct_state(&[], 1e-6).is_err());
        assert!(reconstruct_state(&[rec(Axis::X, 0.1), rec(Axis::X, 0.2)], 1e-6).is_err());
        assert!(reconstruct_state(&[rec(Axis::X, f64::NAN)], 1e-6).is_err());
        assert!(reconstruct_state(&[rec(Axis::X, 0.1)], -1.0).is_err());
        let zero_shots = ExpectationRecord {
            axis: Axis::Z,
            value: 1.0,
            shots: Shots::Finite(0),
        };
        assert!(reconstruct_state(&[zero_shots], 1e-6).is_err());
    }

    #[test]
    fn shots_serde() {
        assert_eq!(serde_json::to_string(&Shots::Exact).unwrap(), "\"exact\"");
        assert_eq!(serde_json::to_string(&Shots::Finite(1000)).unwrap(), "1000");
        assert_eq!(serde_json::from_str::<Shots>("\"exact\"").unwrap(), Shots::Exact);
        assert_eq!(serde_json::from_str::<Shots>("250").unwrap(), Shots::Finite(250));
        assert!(serde_json::from_str::<Shots>("\"lots\"").is_err());
        assert!(serde_json::from_str::<Shots>("-3").is_err());
        assert_eq!("exact".parse::<Shots>().unwrap(), Shots::Exact);
        assert_eq!("42".parse::<Shots>().unwrap(), Shots::Finite(42));
    }
}
