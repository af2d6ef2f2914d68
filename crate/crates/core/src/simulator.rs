//! Synthetic stand-in for the tomography experiment: imperfect optical
//! initialization, rotation pulses into the four input states, a
//! decoherence interval, and three-axis readout with shot noise.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_chi, apply_kraus, ChiMatrix, StandardChannel};
use crate::error::{QptError, Result};
use crate::state::{bloch_from_density, DensityMatrix};
use crate::state_tomography::{Axis, ExpectationRecord, Shots};
use crate::linalg::ComplexMatrix;

/// Transverse relaxation time of the bundled presets, in ns.
pub const DEFAULT_T2_NS: f64 = 100.0;

/// Named presets and their decoherence intervals in ns.
pub const PRESETS: [(&str, f64); 3] = [("paper-20ns", 20.0), ("paper-40ns", 40.0), ("paper-80ns", 80.0)];

/// Parameters of one simulated run. Times are in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub t2: f64,
    /// Longitudinal relaxation time; `None` means no amplitude damping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    pub decoherence_time: f64,
    /// Population of `|0⟩` after initialization.
    #[serde(default = "full_polarization")]
    pub polarization: f64,
    #[serde(default)]
    pub shots: Shots,
    #[serde(default)]
    pub seed: u64,
    /// Fractional over-rotation of every preparation pulse.
    #[serde(default)]
    pub pulse_error: f64,
}

fn full_polarization() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Ideal initialization, exact readout, no amplitude damping.
    pub fn new(t2: f64, decoherence_time: f64) -> Self {
        Self {
            t2,
            t1: None,
            decoherence_time,
            polarization: 1.0,
            shots: Shots::Exact,
            seed: 0,
            pulse_error: 0.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, time)| Self::new(DEFAULT_T2_NS, time))
    }

    pub fn with_shots(mut self, shots: Shots) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(QptError::InvalidConfig(msg));
        if !(self.t2 > 0.0 && self.t2.is_finite()) {
            return bad(format!("t2 must be a positive duration, got {}", self.t2));
        }
        if let Some(t1) = self.t1 {
            if !(t1 > 0.0) {
                return bad(format!("t1 must be positive, got {t1}"));
            }
        }
        if !(self.decoherence_time >= 0.0 && self.decoherence_time.is_finite()) {
            return bad(format!(
                "decoherenceTime must be a non-negative duration, got {}",
                self.decoherence_time
            ));
        }
        if !(0.5..=1.0).contains(&self.polarization) {
            return bad(format!("polarization must lie in [0.5, 1], got {}", self.polarization));
        }
        if self.shots == Shots::Finite(0) {
            return bad("shots must be positive".into());
        }
        if !(self.pulse_error >= 0.0 && self.pulse_error.is_finite()) {
            return bad(format!("pulseError must be non-negative, got {}", self.pulse_error));
        }
        Ok(())
    }
}

/// Readout of one input state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasurementRecord {
    /// 1-based position in the input basis.
    pub input_index: usize,
    pub records: Vec<ExpectationRecord>,
    pub config: ExperimentConfig,
}

fn check_index(index: usize) -> Result<()> {
    if (1..=4).contains(&index) {
        Ok(())
    } else {
        Err(QptError::Domain(format!("input index must be 1..4, got {index}")))
    }
}

/// Pulse taking `|0⟩` to the given input state: none, `R_x(π)`, `R_y(π/2)`,
/// `R_x(−π/2)`.
fn preparation_pulse(index: usize) -> Option<([f64; 3], f64)> {
    match index {
        2 => Some(([1.0, 0.0, 0.0], PI)),
        3 => Some(([0.0, 1.0, 0.0], FRAC_PI_2)),
        4 => Some(([1.0, 0.0, 0.0], -FRAC_PI_2)),
        _ => None,
    }
}

/// Initialized and pulsed input state `index` (1..4).
pub fn prepare_input(config: &ExperimentConfig, index: usize) -> Result<DensityMatrix> {
    check_index(index)?;
    let p = config.polarization;
    let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[p, 1.0 - p]))?;
    match preparation_pulse(index) {
        None => Ok(rho),
        Some((axis, angle)) => {
            let pulse = StandardChannel::UnitaryRotation {
                axis,
                angle: angle * (1.0 + config.pulse_error),
            };
            apply_kraus(&pulse.kraus()?, &rho).into_density()
        }
    }
}

/// Dephasing over the decoherence interval, followed by amplitude damping
/// when `t1` is set.
pub fn evolve(config: &ExperimentConfig, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let time = config.decoherence_time;
    let mut out = apply_kraus(&StandardChannel::Dephasing { time, t2: config.t2 }.kraus()?, rho).into_density()?;
    if let Some(t1) = config.t1 {
        out = apply_kraus(&StandardChannel::AmplitudeDamping { time, t1 }.kraus()?, &out).into_density()?;
    }
    Ok(out)
}

/// Random stream for one (input, axis) pair, independent of draw order
/// elsewhere.
fn stream(seed: u64, index: usize, axis: Axis) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index * 3 + axis.index()) as u64);
    rng
}

/// Mean of `shots` draws of ±1 with `P(+1) = (1 + expectation)/2`.
fn sample_mean(rng: &mut ChaCha8Rng, expectation: f64, shots: u64) -> f64 {
    let p_up = (0.5 * (1.0 + expectation)).clamp(0.0, 1.0);
    let ups = (0..shots).filter(|_| rng.gen::<f64>() < p_up).count() as f64;
    (2.0 * ups - shots as f64) / shots as f64
}

/// Three-axis readout of input `index`'s output state.
pub fn measure(config: &ExperimentConfig, index: usize, rho: &DensityMatrix) -> Result<Vec<ExpectationRecord>> {
    check_index(index)?;
    let r = bloch_from_density(rho);
    Axis::ALL
        .iter()
        .map(|&axis| {
            let exact = axis.component(r);
            let value = match config.shots {
                Shots::Exact => exact,
                Shots::Finite(0) => return Err(QptError::InvalidConfig("shots must be positive".into())),
                Shots::Finite(n) => sample_mean(&mut stream(config.seed, index, axis), exact, n),
            };
            Ok(ExpectationRecord {
                axis,
                value,
                shots: config.shots,
            })
        })
        .collect()
}

fn run_with<F>(config: &ExperimentConfig, process: F) -> Result<Vec<MeasurementRecord>>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix> + Sync,
{
    config.validate()?;
    (1..=4usize)
        .into_par_iter()
        .map(|index| {
            let output = process(&prepare_input(config, index)?)?;
            Ok(MeasurementRecord {
                input_index: index,
                records: measure(config, index, &output)?,
                config: *config,
            })
        })
        .collect()
}

/// initialize → prepare → decohere → measure, for all four inputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MeasurementRecord>> {
    run_with(config, |rho| evolve(config, rho))
}

/// Like [`run_experiment`], with `channel` in place of the decoherence
/// interval.
pub fn run_channel_experiment(config: &ExperimentConfig, channel: &ChiMatrix) -> Result<Vec<MeasurementRecord>> {
    run_with(config, |rho| apply_chi(channel, rho).into_density())
}

/// Record sets in input order, as consumed by process tomography.
pub fn record_sets(records: &[MeasurementRecord]) -> Vec<Vec<ExpectationRecord>> {
    let mut sorted: Vec<&MeasurementRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.input_index);
    sorted.into_iter().map(|r| r.records.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AffineMap;
    use crate::process_tomography::{run_process_tomography, InputBasis};
    use crate::state::BlochVector;

    fn bloch_close(a: BlochVector, b: [f64; 3], tol: f64) -> bool {
        a.distance(BlochVector::from_array(b)) < tol
    }

    #[test]
    fn prepared_inputs() {
        let ideal = ExperimentConfig::new(100.0, 0.0);
        for (i, expected) in InputBasis::standard().states().iter().enumerate() {
            let rho = prepare_input(&ideal, i + 1).unwrap();
            assert!(rho.matrix().approx_eq(expected.matrix(), 1e-15), "input {}", i + 1);
        }
        let partial = ExperimentConfig {
            polarization: 0.7,
            ..ideal
        };
        assert!(bloch_close(prepare_input(&partial, 1).unwrap().bloch(), [0.0, 0.0, 0.4], 1e-15));
        assert!(bloch_close(prepare_input(&partial, 3).unwrap().bloch(), [0.4, 0.0, 0.0], 1e-15));
        assert!(prepare_input(&ideal, 0).is_err());
        assert!(prepare_input(&ideal, 5).is_err());
    }

    #[test]
    fn pulse_error_over_rotates() {
        let config = ExperimentConfig {
            pulse_error: 0.1,
            ..ExperimentConfig::new(100.0, 0.0)
        };
        let angle = FRAC_PI_2 * 1.1;
        let r = prepare_input(&config, 3).unwrap().bloch();
        assert!(bloch_close(r, [angle.sin(), 0.0, angle.cos()], 1e-14));
    }

    #[test]
    fn evolve_examples() {
        let still = ExperimentConfig::new(100.0, 0.0);
        let plus = DensityMatrix::plus();
        assert!(evolve(&still, &plus).unwrap().matrix().approx_eq(plus.matrix(), 1e-15));

        let twenty = ExperimentConfig::new(100.0, 20.0);
        assert!(bloch_close(evolve(&twenty, &plus).unwrap().bloch(), [(-0.2f64).exp(), 0.0, 0.0], 1e-14));

        let eighty = ExperimentConfig::new(100.0, 80.0);
        let zero = DensityMatrix::zero();
        assert!(evolve(&eighty, &zero).unwrap().matrix().approx_eq(zero.matrix(), 1e-15));

        // With t1 the poles relax towards |0>.
        let damped = ExperimentConfig {
            t1: Some(50.0),
            ..eighty
        };
        let z = evolve(&damped, &DensityMatrix::one()).unwrap().bloch().z;
        assert!((z - (1.0 - 2.0 * (-80.0f64 / 50.0).exp())).abs() < 1e-14);
    }

    #[test]
    fn exact_measurement() {
        let config = ExperimentConfig::new(100.0, 0.0);
        let records = measure(&config, 1, &DensityMatrix::zero()).unwrap();
        let values: Vec<f64> = records.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.0, 0.0, 1.0]);
        assert!(records.iter().all(|r| r.shots == Shots::Exact));
    }

    #[test]
    fn finite_shots_stay_near_expectation() {
        for seed in 0..100 {
            let config = ExperimentConfig::new(100.0, 0.0)
                .with_shots(Shots::Finite(10_000))
                .with_seed(seed);
            let records = measure(&config, 1, &DensityMatrix::zero()).unwrap();
            assert!((records[2].value - 1.0).abs() < 3e-2);
            assert!(records.iter().all(|r| (-1.0..=1.0).contains(&r.value)));
        }
    }

    #[test]
    fn shot_noise_matches_binomial_statistics() {
        // ⟨σ_z⟩ = 0.6: mean 0.6, variance (1 − 0.36)/shots per estimate.
        let rho = crate::state::density_from_bloch(BlochVector::new(0.0, 0.0, 0.6)).unwrap();
        let shots = 1_000u64;
        let runs = 2_000u64;
        let values: Vec<f64> = (0..runs)
            .map(|seed| {
                let config = ExperimentConfig::new(100.0, 0.0)
                    .with_shots(Shots::Finite(shots))
                    .with_seed(seed);
                measure(&config, 1, &rho).unwrap()[2].value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / runs as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let expected_var = 0.64 / shots as f64;
        // Standard error of the mean is ~5.7e-4; of the variance ~3%.
        assert!((mean - 0.6).abs() < 3e-3, "mean {mean}");
        assert!((var / expected_var - 1.0).abs() < 0.15, "variance ratio {}", var / expected_var);
    }

    #[test]
    fn records_are_deterministic() {
        let config = ExperimentConfig::preset("paper-40ns")
            .unwrap()
            .with_shots(Shots::Finite(500))
            .with_seed(42);
        let parallel = run_experiment(&config).unwrap();
        let again = run_experiment(&config).unwrap();
        assert_eq!(parallel, again);
        // Single-input evaluation in reverse order gives the same draws.
        for index in (1..=4).rev() {
            let out = evolve(&config, &prepare_input(&config, index).unwrap()).unwrap();
            assert_eq!(measure(&config, index, &out).unwrap(), parallel[index - 1].records);
        }
        let other = run_experiment(&config.with_seed(43)).unwrap();
        assert_ne!(parallel, other);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::new(100.0, 20.0);
        let cases = [
            ExperimentConfig { t2: 0.0, ..base },
            ExperimentConfig { t1: Some(-1.0), ..base },
            ExperimentConfig { decoherence_time: -1.0, ..base },
            ExperimentConfig { polarization: 0.4, ..base },
            ExperimentConfig { shots: Shots::Finite(0), ..base },
            ExperimentConfig { pulse_error: -0.1, ..base },
        ];
        for config in cases {
            assert!(matches!(run_experiment(&config), Err(QptError::InvalidConfig(_))), "{config:?}");
        }
    }

    #[test]
    fn identity_round_trip() {
        let records = run_experiment(&ExperimentConfig::new(100.0, 0.0)).unwrap();
        let estimate = run_process_tomography(&record_sets(&records)).unwrap();
        assert!(estimate.chi.frobenius_distance(&ChiMatrix::identity()) < 1e-7);
    }

    #[test]
    fn presets_reproduce_dephasing_maps() {
        for (name, time) in PRESETS {
            let config = ExperimentConfig::preset(name).unwrap();
            assert_eq!(config.decoherence_time, time);
            let estimate = run_process_tomography(&record_sets(&run_experiment(&config).unwrap())).unwrap();
            let c = (-time / DEFAULT_T2_NS).exp();
            let expected = AffineMap::diagonal([c, c, 1.0], [0.0; 3]);
            assert!(estimate.affine.max_abs_difference(&expected) < 1e-7, "{name}");
        }
        assert!(ExperimentConfig::preset("paper-10ns").is_none());
    }

    #[test]
    fn partial_polarization_deforms_the_map() {
        let config = ExperimentConfig {
            polarization: 0.7,
            ..ExperimentConfig::new(100.0, 0.0)
        };
        let estimate = run_process_tomography(&record_sets(&run_experiment(&config).unwrap())).unwrap();
        // Inputs shrink to radius 0.4 about the origin, read as if they were
        // the ideal basis: r ↦ 0.4 r plus the offset the linear fit needs to
        // map |0>,|1> to ±0.4 z.
        let oracle = {
            let images: [[f64; 3]; 4] = [[0.0, 0.0, 0.4], [0.0, 0.0, -0.4], [0.4, 0.0, 0.0], [0.0, 0.4, 0.0]];
            let t: [f64; 3] = std::array::from_fn(|i| 0.5 * (images[0][i] + images[1][i]));
            let col_z: [f64; 3] = std::array::from_fn(|i| 0.5 * (images[0][i] - images[1][i]));
            let col_x: [f64; 3] = std::array::from_fn(|i| images[2][i] - t[i]);
            let col_y: [f64; 3] = std::array::from_fn(|i| images[3][i] - t[i]);
            let e = std::array::from_fn(|i| [col_x[i], col_y[i], col_z[i]]);
            AffineMap::new(e, t)
        };
        assert!(estimate.affine.max_abs_difference(&oracle) < 1e-7);
        assert!(estimate.chi.frobenius_distance(&ChiMatrix::identity()) > 0.1);
    }
}
