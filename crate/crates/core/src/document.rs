//! JSON file formats: experiment configuration, measurement records,
//! reconstruction results, comparisons and mesh sidecars.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Floats are written in shortest round-trip form, so every document reads
//! back to an identical value.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use num_complex::Complex64;

use crate::channel::{affine_from_chi, AffineMap, ChiMatrix};
use crate::error::{QptError, Result};
use crate::linalg::ComplexMatrix;
use crate::mesh::MeshSummary;
use crate::metrics::{DiscrepancyReport, ProcessComparison};
use crate::process_tomography::{ProcessEstimate, INPUT_LABELS};
use crate::projection::{ProjectionResult, RestartOutcome};
use crate::simulator::{ExperimentConfig, MeasurementRecord};
use crate::state_tomography::Shots;

pub const SCHEMA_VERSION: u32 = 1;

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("matrix rows have different lengths"));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        ComplexMatrix::from_vec(rows.len(), cols, data).map_err(D::Error::custom)
    }
}

impl Serialize for ChiMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChiMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        ChiMatrix::new(ComplexMatrix::deserialize(deserializer)?).map_err(D::Error::custom)
    }
}

/// Config file that names a preset and optionally overrides its fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PresetFile {
    preset: String,
    t2: Option<f64>,
    t1: Option<f64>,
    decoherence_time: Option<f64>,
    polarization: Option<f64>,
    shots: Option<Shots>,
    seed: Option<u64>,
    pulse_error: Option<f64>,
}

fn syntax_error(e: serde_json::Error) -> QptError {
    QptError::InvalidConfig(e.to_string())
}

/// Parses and validates a configuration file.
///
/// A file either lists the fields of [`ExperimentConfig`] (with `t2` and
/// `decoherenceTime` required) or names a `preset` and overrides some of
/// its fields.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(syntax_error)?;
    let config = if value.get("preset").is_some() {
        let file: PresetFile = serde_json::from_str(text).map_err(syntax_error)?;
        let base = ExperimentConfig::preset(&file.preset)
            .ok_or_else(|| QptError::InvalidConfig(format!("unknown preset '{}'", file.preset)))?;
        ExperimentConfig {
            t2: file.t2.unwrap_or(base.t2),
            t1: file.t1.or(base.t1),
            decoherence_time: file.decoherence_time.unwrap_or(base.decoherence_time),
            polarization: file.polarization.unwrap_or(base.polarization),
            shots: file.shots.unwrap_or(base.shots),
            seed: file.seed.unwrap_or(base.seed),
            pulse_error: file.pulse_error.unwrap_or(base.pulse_error),
        }
    } else {
        serde_json::from_str(text).map_err(syntax_error)?
    };
    config.validate()?;
    Ok(config)
}

/// Output of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordsDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub measurements: Vec<MeasurementRecord>,
}

impl RecordsDocument {
    pub fn new(config: ExperimentConfig, measurements: Vec<MeasurementRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            measurements,
        }
    }
}

/// The physical process nearest to the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectionSection {
    pub chi_tilde: ChiMatrix,
    pub affine_tilde: AffineMap,
    pub distance: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub seed_index: usize,
    pub restarts: Vec<RestartOutcome>,
    pub discrepancy: DiscrepancyReport,
}

impl ProjectionSection {
    pub fn new(result: &ProjectionResult, discrepancy: DiscrepancyReport) -> Self {
        Self {
            chi_tilde: result.chi_tilde.clone(),
            affine_tilde: affine_from_chi(&result.chi_tilde),
            distance: result.distance,
            evaluations: result.iterations,
            converged: result.converged,
            seed_index: result.seed_index,
            restarts: result.restarts.clone(),
            discrepancy,
        }
    }
}

/// A process reconstruction, its projection and comparison, as far as
/// they have been carried out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultDocument {
    pub schema_version: u32,
    pub config: Option<ExperimentConfig>,
    /// Input states, in the order of `residuals`.
    pub input_states: Vec<String>,
    /// Per-input state tomography residuals.
    pub residuals: Vec<f64>,
    /// Linear-inversion χ, symmetrized.
    pub chi: ChiMatrix,
    pub anti_hermitian_norm: f64,
    pub lambda_residual: f64,
    pub affine: AffineMap,
    pub affine_direct: AffineMap,
    pub cp_flag: bool,
    pub min_choi_eigenvalue: f64,
    pub tp_flag: bool,
    pub tp_deficit: f64,
    pub projection: Option<ProjectionSection>,
    pub comparison: Option<ProcessComparison>,
}

impl ResultDocument {
    pub fn from_estimate(estimate: &ProcessEstimate, config: Option<ExperimentConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            input_states: INPUT_LABELS.iter().map(|s| s.to_string()).collect(),
            residuals: estimate.residuals(),
            chi: estimate.chi.clone(),
            anti_hermitian_norm: estimate.anti_hermitian_norm,
            lambda_residual: estimate.lambda_residual,
            affine: estimate.affine,
            affine_direct: estimate.affine_direct,
            cp_flag: estimate.cp.completely_positive,
            min_choi_eigenvalue: estimate.cp.min_choi_eigenvalue,
            tp_flag: estimate.tp.trace_preserving,
            tp_deficit: estimate.tp.deficit,
            projection: None,
            comparison: None,
        }
    }

    /// The projected χ when available, otherwise the raw estimate.
    pub fn best_chi(&self) -> &ChiMatrix {
        self.projection.as_ref().map_or(&self.chi, |p| &p.chi_tilde)
    }

    pub fn best_label(&self) -> &'static str {
        if self.projection.is_some() {
            "projected"
        } else {
            "raw"
        }
    }
}

/// Output of comparing two result documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompareDocument {
    pub schema_version: u32,
    pub comparison: ProcessComparison,
}

/// Sidecar of a rendered OBJ file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeshDocument {
    pub schema_version: u32,
    pub subdivisions: u32,
    pub objects: Vec<MeshSummary>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}

/// Parses a document, reporting the line and column of any error.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| QptError::InvalidConfig(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{chi_from_affine, StandardChannel};
    use crate::metrics::{process_distance_report, ReportContext};
    use crate::process_tomography::run_process_tomography;
    use crate::projection::{project_to_physical, projection_report};
    use crate::simulator::{record_sets, run_experiment};

    #[test]
    fn config_examples() {
        let config = parse_config(r#"{"preset": "paper-20ns"}"#).unwrap();
        assert_eq!(config.decoherence_time, 20.0);
        assert_eq!(config.t2, 100.0);

        let config = parse_config(r#"{"preset": "paper-80ns", "shots": 1000, "seed": 7}"#).unwrap();
        assert_eq!(config.shots, Shots::Finite(1000));
        assert_eq!(config.seed, 7);

        let config = parse_config(r#"{"t2": 50, "t1": 400, "decoherenceTime": 10, "shots": "exact"}"#).unwrap();
        assert_eq!(config.t1, Some(400.0));
        assert_eq!(config.polarization, 1.0);

        let missing = parse_config("{\n  \"decoherenceTime\": 20\n}").unwrap_err().to_string();
        assert!(missing.contains("t2") && missing.contains("line 3"), "{missing}");

        let syntax = parse_config("{\n  \"t2\": 100,\n  \"decoherenceTime\": ,\n}").unwrap_err().to_string();
        assert!(syntax.contains("line 3"), "{syntax}");

        assert!(parse_config(r#"{"preset": "nope"}"#).is_err());
        assert!(parse_config(r#"{"t2": 100, "decoherenceTime": 20, "colour": 1}"#).is_err());
        assert!(parse_config(r#"{"t2": -1, "decoherenceTime": 20}"#).is_err());
        assert!(parse_config(r#"{"preset": "paper-20ns", "shots": 0}"#).is_err());
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let chi = StandardChannel::UnitaryRotation {
            axis: [0.3, -0.2, 0.9],
            angle: 1.234567890123,
        }
        .chi()
        .unwrap();
        let back: ChiMatrix = from_json(&to_json(&chi)).unwrap();
        assert_eq!(back, chi);
        let not_square: Result<ComplexMatrix> = from_json("[[[1, 0], [0, 0]], [[0, 0]]]");
        assert!(not_square.is_err());
        let wrong_size: Result<ChiMatrix> = from_json("[[[1, 0]]]");
        assert!(wrong_size.is_err());
    }

    #[test]
    fn documents_round_trip_field_by_field() {
        let config = ExperimentConfig::preset("paper-40ns")
            .unwrap()
            .with_shots(Shots::Finite(1000))
            .with_seed(11);
        let measurements = run_experiment(&config).unwrap();
        let records = RecordsDocument::new(config, measurements.clone());
        assert_eq!(from_json::<RecordsDocument>(&to_json(&records)).unwrap(), records);

        let estimate = run_process_tomography(&record_sets(&measurements)).unwrap();
        let mut doc = ResultDocument::from_estimate(&estimate, Some(config));
        let round: ResultDocument = from_json(&to_json(&doc)).unwrap();
        assert_eq!(round, doc);
        assert_eq!(round.best_label(), "raw");

        let projected = project_to_physical(&doc.chi).unwrap();
        let report = projection_report(&doc.chi, &projected).unwrap();
        doc.projection = Some(ProjectionSection::new(&projected, report));
        doc.comparison = Some(
            process_distance_report(doc.best_chi(), &ChiMatrix::identity(), ReportContext::new("projected", "identity"))
                .unwrap(),
        );
        let round: ResultDocument = from_json(&to_json(&doc)).unwrap();
        assert_eq!(round, doc);
        assert_eq!(round.best_chi(), &projected.chi_tilde);
    }

    #[test]
    fn unphysical_comparison_keeps_skip_reason() {
        let transpose = chi_from_affine(&AffineMap::diagonal([1.0, -1.0, 1.0], [0.0; 3]));
        let comparison = process_distance_report(&transpose, &ChiMatrix::identity(), ReportContext::default()).unwrap();
        let doc = CompareDocument {
            schema_version: SCHEMA_VERSION,
            comparison,
        };
        let text = to_json(&doc);
        assert!(text.contains("\"status\": \"skipped\""));
        assert_eq!(from_json::<CompareDocument>(&text).unwrap(), doc);
    }
}
