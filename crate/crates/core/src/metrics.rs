//! Distance measures between states and between processes.
//!
//! State measures (trace distance, fidelity, Bures, C) act on density
//! matrices of any small dimension; for processes they are applied to the
//! Choi states. Fidelity uses the squared convention
//! `F = (tr √(√a b √a))²`. Matrix p-norms are the induced operator norms, so
//! `‖X‖₁ = ‖X‖_∞` whenever `X` is Hermitian.

use serde::{Deserialize, Serialize};

use crate::channel::{choi_from_chi, ChiMatrix};
use crate::error::{QptError, Result};
use crate::linalg::{
    clamp_eigenvalue, hermitian_eigensystem, singular_values, ComplexMatrix,
};

const DENSITY_TOLERANCE: f64 = 1e-8;
const ROUNDING_CUTOFF: f64 = 1e-15;

fn same_dims(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dims() != b.dims() || !a.is_square() {
        return Err(QptError::DimensionMismatch {
            expected: format!("square {}x{}", a.rows(), a.cols()),
            actual: format!("{}x{}", b.rows(), b.cols()),
        });
    }
    Ok(())
}

fn check_density(m: &ComplexMatrix) -> Result<()> {
    if !m.is_hermitian(DENSITY_TOLERANCE) {
        return Err(QptError::Domain("input is not Hermitian".into()));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
        return Err(QptError::Domain(format!("trace {:.6} != 1", tr.re)));
    }
    let min = hermitian_eigensystem(m)?.min_value();
    clamp_eigenvalue(min)
        .map_err(|_| QptError::Domain(format!("negative eigenvalue {min:.3e}: unphysical input")))?;
    Ok(())
}

/// `½ Σ |eig(a − b)|`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    same_dims(a, b)?;
    let eig = hermitian_eigensystem(&(a - b))?;
    Ok(0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// `‖√a √b‖₁²`, rejecting unphysical inputs.
///
/// Qubit states use the exact form `tr(ab) + 2√(det a · det b)`. Larger
/// inputs take the trace norm from the Hermitian dilation `[[0, X], [X†, 0]]`,
/// whose eigenvalues are `±σ(X)`; this avoids squaring the spectrum, so small
/// but genuine eigenvalues keep their weight.
pub fn fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    same_dims(a, b)?;
    check_density(a)?;
    check_density(b)?;
    let f = if a.rows() == 2 {
        let det = |m: &ComplexMatrix| (m[(0, 0)].re * m[(1, 1)].re - m[(0, 1)].norm_sqr()).max(0.0);
        let overlap = (a * b).trace().re;
        overlap + 2.0 * (det(a) * det(b)).sqrt()
    } else {
        let x = &psd_sqrt(a)? * &psd_sqrt(b)?;
        let n = x.rows();
        let mut dilation = ComplexMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                dilation[(i, n + j)] = x[(i, j)];
                dilation[(n + j, i)] = x[(i, j)].conj();
            }
        }
        let trace_norm = 0.5 * hermitian_eigensystem(&dilation)?.values.iter().map(|v| v.abs()).sum::<f64>();
        trace_norm * trace_norm
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Square root with rounding-level eigenvalues set to zero, so that pure
/// inputs do not pick up `√ε` components.
fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigensystem(m)?;
    let cutoff = ROUNDING_CUTOFF * eig.max_value().max(1.0);
    Ok(eig.reconstruct_with(|x| if x > cutoff { x.sqrt() } else { 0.0 }))
}

/// `√(2 − 2√F)`.
pub fn bures_metric(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let f = fidelity(a, b)?;
    Ok((2.0 - 2.0 * f.sqrt()).max(0.0).sqrt())
}

/// `√(1 − F)`.
pub fn c_metric(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let f = fidelity(a, b)?;
    Ok((1.0 - f).max(0.0).sqrt())
}

/// Induced p-norms, Frobenius norm and half trace norm of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatrixNorms {
    /// Maximum absolute column sum.
    pub p1: f64,
    /// Largest singular value.
    pub p2: f64,
    /// Maximum absolute row sum.
    pub p_inf: f64,
    pub frobenius: f64,
    /// `½ Σ |eig|`; only defined for Hermitian input.
    pub half_trace: Option<f64>,
}

pub fn matrix_norms(x: &ComplexMatrix) -> Result<MatrixNorms> {
    if !x.is_square() {
        return Err(QptError::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", x.rows(), x.cols()),
        });
    }
    let n = x.rows();
    let p1 = (0..n)
        .map(|j| (0..n).map(|i| x[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let p_inf = (0..n)
        .map(|i| (0..n).map(|j| x[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let p2 = singular_values(x).first().copied().unwrap_or(0.0);
    let half_trace = if x.is_hermitian(DENSITY_TOLERANCE) {
        let eig = hermitian_eigensystem(x)?;
        Some(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    } else {
        None
    };
    Ok(MatrixNorms {
        p1,
        p2,
        p_inf,
        frobenius: x.frobenius_norm(),
        half_trace,
    })
}

/// Labels of the two processes being compared.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportContext {
    pub first: String,
    pub second: String,
}

impl ReportContext {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        Self {
            first: first.into(),
            second: second.into(),
        }
    }
}

/// Disparity between two process matrices, `X = χ_a − χ_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscrepancyReport {
    pub p1_norm: f64,
    pub p2_norm: f64,
    pub p_inf_norm: f64,
    pub frobenius_norm: f64,
    /// `½ Σ |eig(X)|`.
    pub trace_distance_pro: f64,
    pub context: ReportContext,
}

impl DiscrepancyReport {
    /// Norms of `chi_a − chi_b`. Both inputs must be Hermitian.
    pub fn between(chi_a: &ChiMatrix, chi_b: &ChiMatrix, context: ReportContext) -> Result<Self> {
        let x = chi_a.matrix() - chi_b.matrix();
        let norms = matrix_norms(&x)?;
        let half_trace = norms.half_trace.ok_or_else(|| {
            QptError::Domain("difference of process matrices is not Hermitian".into())
        })?;
        Ok(Self {
            p1_norm: norms.p1,
            p2_norm: norms.p2,
            p_inf_norm: norms.p_inf,
            frobenius_norm: norms.frobenius,
            trace_distance_pro: half_trace,
            context,
        })
    }

    /// `‖X‖₁ = ‖X‖_∞` and `‖X‖₂ ≤ ‖X‖_Fro ≤ 2·D_pro`, each within `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        (self.p1_norm - self.p_inf_norm).abs() <= tol
            && self.p2_norm <= self.frobenius_norm + tol
            && self.frobenius_norm <= 2.0 * self.trace_distance_pro + tol
    }
}

/// Choi-state measures between two processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateMetrics {
    pub trace_distance: f64,
    pub fidelity: f64,
    pub bures: f64,
    pub c_metric: f64,
}

/// State measures, or the reason they were not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StateMetricBlock {
    Computed(StateMetrics),
    Skipped { reason: String },
}

impl StateMetricBlock {
    pub fn computed(&self) -> Option<&StateMetrics> {
        match self {
            StateMetricBlock::Computed(m) => Some(m),
            StateMetricBlock::Skipped { .. } => None,
        }
    }
}

/// Matrix-norm report plus Choi-state measures for a pair of processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessComparison {
    pub discrepancy: DiscrepancyReport,
    pub state_metrics: StateMetricBlock,
}

/// Choi-state measures, computed only when both Choi states are physical.
pub fn choi_state_metrics(chi_a: &ChiMatrix, chi_b: &ChiMatrix) -> StateMetricBlock {
    let a = choi_from_chi(chi_a).into_matrix();
    let b = choi_from_chi(chi_b).into_matrix();
    for (label, m) in [("first", &a), ("second", &b)] {
        if let Err(e) = check_density(m) {
            return StateMetricBlock::Skipped {
                reason: format!("unphysical Choi state ({label} process): {e}"),
            };
        }
    }
    let computed = (|| -> Result<StateMetrics> {
        let f = fidelity(&a, &b)?;
        Ok(StateMetrics {
            trace_distance: trace_distance(&a, &b)?,
            fidelity: f,
            bures: (2.0 - 2.0 * f.sqrt()).max(0.0).sqrt(),
            c_metric: (1.0 - f).max(0.0).sqrt(),
        })
    })();
    match computed {
        Ok(m) => StateMetricBlock::Computed(m),
        Err(e) => StateMetricBlock::Skipped {
            reason: format!("state metrics unavailable: {e}"),
        },
    }
}

/// Norms of `chi_a − chi_b` and, when both processes are physical, the
/// Choi-state measures.
pub fn process_distance_report(
    chi_a: &ChiMatrix,
    chi_b: &ChiMatrix,
    context: ReportContext,
) -> Result<ProcessComparison> {
    Ok(ProcessComparison {
        discrepancy: DiscrepancyReport::between(chi_a, chi_b, context)?,
        state_metrics: choi_state_metrics(chi_a, chi_b),
    })
}
