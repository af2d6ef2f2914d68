//! Single-qubit states: the Pauli basis, density matrices and Bloch vectors.
//!
//! `|0⟩` is the +1 eigenstate of σ_z, so the Bloch vector of `|0⟩⟨0|` is
//! `(0, 0, 1)`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::linalg::{clamp_eigenvalue, hermitian_eigensystem, ComplexMatrix, I, ONE, ZERO};

/// Tolerance on Hermiticity and unit trace for a valid density matrix.
pub const STATE_TOLERANCE: f64 = 1e-8;

/// Slack on the Bloch-ball constraint `|r| ≤ 1`.
pub const BLOCH_TOLERANCE: f64 = 1e-9;

/// The Pauli matrices and the operation elements `{σ₀, σ_x, −iσ_y, σ_z}`
/// used to expand process matrices.
#[derive(Debug)]
pub struct PauliBasis {
    /// `(I, σ_x, σ_y, σ_z)`.
    pub elements: [ComplexMatrix; 4],
    /// `(I, σ_x, −iσ_y, σ_z)`.
    pub operation_elements: [ComplexMatrix; 4],
}

impl PauliBasis {
    /// Shared, lazily built instance.
    pub fn get() -> &'static PauliBasis {
        static BASIS: OnceLock<PauliBasis> = OnceLock::new();
        BASIS.get_or_init(PauliBasis::build)
    }

    fn build() -> Self {
        let m = |d: [Complex64; 4]| ComplexMatrix::from_vec(2, 2, d.to_vec()).expect("2x2");
        let identity = m([ONE, ZERO, ZERO, ONE]);
        let x = m([ZERO, ONE, ONE, ZERO]);
        let y = m([ZERO, -I, I, ZERO]);
        let z = m([ONE, ZERO, ZERO, -ONE]);
        let minus_i_y = y.scale(-I);
        Self {
            elements: [identity.clone(), x.clone(), y, z.clone()],
            operation_elements: [identity, x, minus_i_y, z],
        }
    }

    pub fn identity(&self) -> &ComplexMatrix {
        &self.elements[0]
    }

    /// σ_x, σ_y, σ_z for `axis` 0, 1, 2.
    pub fn sigma(&self, axis: usize) -> &ComplexMatrix {
        &self.elements[axis + 1]
    }
}

/// A point of the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: BlochVector) -> f64 {
        let d = [self.x - other.x, self.y - other.y, self.z - other.z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn is_physical(self) -> bool {
        self.norm() <= 1.0 + BLOCH_TOLERANCE
    }

    /// The nearest point of the closed unit ball.
    pub fn clamped_to_ball(self) -> Self {
        let n = self.norm();
        if n > 1.0 {
            Self::new(self.x / n, self.y / n, self.z / n)
        } else {
            self
        }
    }
}

/// A validated 2×2 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_density(&matrix)?;
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Pure state `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(amplitudes: [Complex64; 2]) -> Result<Self> {
        let norm = (amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(QptError::InvalidState("zero state vector".into()));
        }
        let v = [amplitudes[0] / norm, amplitudes[1] / norm];
        Self::new(ComplexMatrix::outer(&v, &v))
    }

    pub fn zero() -> Self {
        density_from_bloch(BlochVector::new(0.0, 0.0, 1.0)).expect("pole")
    }

    pub fn one() -> Self {
        density_from_bloch(BlochVector::new(0.0, 0.0, -1.0)).expect("pole")
    }

    pub fn plus() -> Self {
        density_from_bloch(BlochVector::new(1.0, 0.0, 0.0)).expect("equator")
    }

    pub fn plus_i() -> Self {
        density_from_bloch(BlochVector::new(0.0, 1.0, 0.0)).expect("equator")
    }

    pub fn maximally_mixed() -> Self {
        density_from_bloch(BlochVector::ORIGIN).expect("center")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_components(&self.matrix)
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> DensityMatrix {
        let m = &self.matrix.scale_real(w) + &other.matrix.scale_real(1.0 - w);
        Self::new_unchecked(m)
    }
}

fn check_density(m: &ComplexMatrix) -> Result<()> {
    if m.dims() != (2, 2) {
        return Err(QptError::DimensionMismatch {
            expected: "2x2 density matrix".into(),
            actual: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if !m.is_finite() {
        return Err(QptError::InvalidState("non-finite entries".into()));
    }
    if !m.is_hermitian(STATE_TOLERANCE) {
        return Err(QptError::InvalidState("matrix is not Hermitian".into()));
    }
    let tr = m.trace();
    if (tr - ONE).norm() > STATE_TOLERANCE {
        return Err(QptError::InvalidState(format!("trace {:.6} != 1", tr.re)));
    }
    let eig = hermitian_eigensystem(m)?;
    clamp_eigenvalue(eig.min_value())
        .map_err(|_| QptError::InvalidState(format!("negative eigenvalue {:.3e}", eig.min_value())))?;
    Ok(())
}

fn bloch_components(m: &ComplexMatrix) -> BlochVector {
    let basis = PauliBasis::get();
    let c = |axis: usize| (m * basis.sigma(axis)).trace().re;
    BlochVector::new(c(0), c(1), c(2))
}

/// `r_i = tr(ρ σ_i)`.
pub fn bloch_from_density(rho: &DensityMatrix) -> BlochVector {
    rho.bloch()
}

/// Bloch components of an arbitrary 2×2 matrix, rejecting other shapes.
pub fn bloch_from_matrix(m: &ComplexMatrix) -> Result<BlochVector> {
    if m.dims() != (2, 2) {
        return Err(QptError::DimensionMismatch {
            expected: "2x2".into(),
            actual: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    Ok(bloch_components(m))
}

/// `ρ = (I + r·σ) / 2`.
pub fn density_from_bloch(r: BlochVector) -> Result<DensityMatrix> {
    if !r.is_physical() || !r.norm().is_finite() {
        return Err(QptError::InvalidState(format!(
            "Bloch vector norm {:.6} exceeds 1",
            r.norm()
        )));
    }
    Ok(DensityMatrix::new_unchecked(matrix_from_bloch(r)))
}

/// `(I + r·σ) / 2` without any validity check.
pub fn matrix_from_bloch(r: BlochVector) -> ComplexMatrix {
    let h = 0.5;
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            Complex64::new(h * (1.0 + r.z), 0.0),
            Complex64::new(h * r.x, -h * r.y),
            Complex64::new(h * r.x, h * r.y),
            Complex64::new(h * (1.0 - r.z), 0.0),
        ],
    )
    .expect("2x2")
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let eig = hermitian_eigensystem(rho.matrix()).expect("validated density matrix");
    entropy_of_spectrum(&eig.values)
}

/// Entropy of the state with Bloch vector `r`; depends only on `|r|`.
pub fn bloch_entropy(r: BlochVector) -> f64 {
    let n = r.norm().min(1.0);
    entropy_of_spectrum(&[(1.0 + n) / 2.0, (1.0 - n) / 2.0])
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&p| p.max(0.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}
