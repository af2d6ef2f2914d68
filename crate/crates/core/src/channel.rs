//! Process representations: χ matrix, Kraus operators, affine Bloch map and
//! Choi state, with conversions between them and a small library of analytic
//! reference channels.
//!
//! χ is always expanded in the operation elements `{σ₀, σ_x, −iσ_y, σ_z}`:
//! `ℰ(ρ) = Σ_mn χ_mn Â_m ρ Â_n†`. The Choi state is normalized to unit trace
//! and built as `(I ⊗ ℰ)(|Φ⟩⟨Φ|)` with `|Φ⟩ = (|00⟩ + |11⟩)/√2`, the ancilla
//! being the first tensor factor.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::linalg::{hermitian_eigensystem, singular_values, ComplexMatrix, ONE, ZERO};
use crate::state::{bloch_from_matrix, BlochVector, DensityMatrix, PauliBasis};

/// Hermiticity tolerance for χ matrices.
pub const CHI_HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Eigenvalues of χ in `[−KRAUS_CLAMP, 0)` are treated as zero when
/// extracting Kraus operators.
pub const KRAUS_CLAMP: f64 = 1e-9;

/// Kraus operators whose weight falls below this are dropped.
pub const KRAUS_DROP: f64 = 1e-12;

/// A 4×4 process matrix in the operation basis `{σ₀, σ_x, −iσ_y, σ_z}`.
///
/// Hermiticity is not enforced: experimental estimates may violate it, and
/// [`ChiMatrix::hermitian_deviation`] reports by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    matrix: ComplexMatrix,
}

impl ChiMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dims() != (4, 4) {
            return Err(QptError::DimensionMismatch {
                expected: "4x4 process matrix".into(),
                actual: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        if !matrix.is_finite() {
            return Err(QptError::Domain("process matrix has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    pub fn from_real_diagonal(diag: [f64; 4]) -> Self {
        Self {
            matrix: ComplexMatrix::from_real_diagonal(&diag),
        }
    }

    /// `diag(1, 0, 0, 0)`.
    pub fn identity() -> Self {
        Self::from_real_diagonal([1.0, 0.0, 0.0, 0.0])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.matrix.hermitian_deviation()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= CHI_HERMITIAN_TOLERANCE
    }

    /// `(χ + χ†)/2` and the Frobenius norm of the discarded anti-Hermitian part.
    pub fn symmetrized(&self) -> (ChiMatrix, f64) {
        let anti = self.matrix.anti_hermitian_part().frobenius_norm();
        (
            ChiMatrix {
                matrix: self.matrix.hermitian_part(),
            },
            anti,
        )
    }

    /// Convex (or affine) combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &ChiMatrix, w: f64) -> ChiMatrix {
        ChiMatrix {
            matrix: &self.matrix.scale_real(w) + &other.matrix.scale_real(1.0 - w),
        }
    }

    pub fn frobenius_distance(&self, other: &ChiMatrix) -> f64 {
        (&self.matrix - &other.matrix).frobenius_norm()
    }
}

/// A set of 2×2 Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        if operators.is_empty() {
            return Err(QptError::Domain("empty Kraus operator list".into()));
        }
        if let Some(bad) = operators.iter().find(|op| op.dims() != (2, 2)) {
            return Err(QptError::DimensionMismatch {
                expected: "2x2 Kraus operators".into(),
                actual: format!("{}x{}", bad.rows(), bad.cols()),
            });
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `Σ_k A_k† A_k`.
    pub fn completeness(&self) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, a| &acc + &(&a.adjoint() * a))
    }

    /// `‖Σ_k A_k† A_k − I‖_Fro`.
    pub fn completeness_deficit(&self) -> f64 {
        (&self.completeness() - &ComplexMatrix::identity(2)).frobenius_norm()
    }

    /// Kraus operators of "apply `self`, then `next`".
    pub fn then(&self, next: &KrausSet) -> KrausSet {
        let operators = next
            .operators
            .iter()
            .flat_map(|b| self.operators.iter().map(move |a| b * a))
            .collect();
        KrausSet { operators }
    }
}

/// Action on Bloch vectors `r ↦ E r + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major 3×3 deformation matrix.
    pub e: [[f64; 3]; 3],
    pub t: [f64; 3],
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        e: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        t: [0.0; 3],
    };

    pub fn new(e: [[f64; 3]; 3], t: [f64; 3]) -> Self {
        Self { e, t }
    }

    pub fn diagonal(d: [f64; 3], t: [f64; 3]) -> Self {
        let mut e = [[0.0; 3]; 3];
        for i in 0..3 {
            e[i][i] = d[i];
        }
        Self { e, t }
    }

    pub fn apply(&self, r: BlochVector) -> BlochVector {
        let v = r.to_array();
        let mut out = self.t;
        for (i, row) in self.e.iter().enumerate() {
            out[i] += row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        }
        BlochVector::from_array(out)
    }

    /// Singular values of `E` in descending order: the ellipsoid semi-axes.
    pub fn axis_lengths(&self) -> [f64; 3] {
        let flat: Vec<f64> = self.e.iter().flatten().copied().collect();
        let m = ComplexMatrix::from_real(3, 3, &flat).expect("3x3");
        let s = singular_values(&m);
        [s[0], s[1], s[2]]
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().chain(&self.t).all(|x| x.is_finite())
    }

    pub fn max_abs_difference(&self, other: &AffineMap) -> f64 {
        self.e
            .iter()
            .flatten()
            .chain(&self.t)
            .zip(other.e.iter().flatten().chain(&other.t))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Linear action on an arbitrary 2×2 operator `M = (m₀ I + m·σ)/2`.
    fn apply_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let basis = PauliBasis::get();
        let m0 = m.trace();
        let comps: Vec<Complex64> = (0..3).map(|k| (m * basis.sigma(k)).trace()).collect();
        let mut out = basis.identity().scale(m0 * 0.5);
        for i in 0..3 {
            let mut coeff = m0 * self.t[i];
            for (k, c) in comps.iter().enumerate() {
                coeff += c * self.e[i][k];
            }
            out = &out + &basis.sigma(i).scale(coeff * 0.5);
        }
        out
    }
}

/// The unit-trace Choi state `(I ⊗ ℰ)(|Φ⟩⟨Φ|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    matrix: ComplexMatrix,
}

impl ChoiState {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Partial trace over the second (channel output) factor.
    pub fn reduced_input(&self) -> ComplexMatrix {
        let mut r = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                for k in 0..2 {
                    r[(a, b)] += self.matrix[(2 * a + k, 2 * b + k)];
                }
            }
        }
        r
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigensystem(&self.matrix.hermitian_part())
            .expect("Hermitian part")
            .min_value()
    }
}

/// Result of applying a possibly unphysical map to a state.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub matrix: ComplexMatrix,
    /// Whether `matrix` passes density-matrix validation.
    pub valid: bool,
}

impl ChannelOutput {
    fn new(matrix: ComplexMatrix) -> Self {
        let valid = DensityMatrix::new(matrix.clone()).is_ok();
        Self { matrix, valid }
    }

    pub fn into_density(self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.matrix)
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_from_matrix(&self.matrix).expect("2x2 output")
    }
}

/// `Σ_mn χ_mn Â_m M Â_n†` for an arbitrary 2×2 operator `M`.
pub fn apply_chi_to_operator(chi: &ChiMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    let ops = &PauliBasis::get().operation_elements;
    let left: Vec<ComplexMatrix> = ops.iter().map(|a| a * m).collect();
    let mut out = ComplexMatrix::zeros(2, 2);
    for (mi, lm) in left.iter().enumerate() {
        for (ni, an) in ops.iter().enumerate() {
            let c = chi.matrix[(mi, ni)];
            if c == ZERO {
                continue;
            }
            out = &out + &(lm * &an.adjoint()).scale(c);
        }
    }
    out
}

/// `ℰ(ρ) = Σ_mn χ_mn Â_m ρ Â_n†`.
pub fn apply_chi(chi: &ChiMatrix, rho: &DensityMatrix) -> ChannelOutput {
    ChannelOutput::new(apply_chi_to_operator(chi, rho.matrix()))
}

/// `ℰ(ρ) = Σ_k A_k ρ A_k†`.
pub fn apply_kraus(kraus: &KrausSet, rho: &DensityMatrix) -> ChannelOutput {
    let out = kraus
        .operators
        .iter()
        .fold(ComplexMatrix::zeros(2, 2), |acc, a| {
            &acc + &(&(a * rho.matrix()) * &a.adjoint())
        });
    ChannelOutput::new(out)
}

/// Expansion coefficients of a 2×2 operator in the operation basis.
pub fn operation_coefficients(a: &ComplexMatrix) -> [Complex64; 4] {
    let ops = &PauliBasis::get().operation_elements;
    // tr(Â_m† Â_n) = 2 δ_mn
    std::array::from_fn(|m| (&ops[m].adjoint() * a).trace() * 0.5)
}

/// `χ_mn = Σ_k c_km c*_kn` where `A_k = Σ_m c_km Â_m`.
pub fn chi_from_kraus(kraus: &KrausSet) -> ChiMatrix {
    let mut chi = ComplexMatrix::zeros(4, 4);
    for a in &kraus.operators {
        let c = operation_coefficients(a);
        for m in 0..4 {
            for n in 0..4 {
                chi[(m, n)] += c[m] * c[n].conj();
            }
        }
    }
    ChiMatrix { matrix: chi }
}

/// Kraus operators from the eigendecomposition of χ.
pub fn kraus_from_chi(chi: &ChiMatrix) -> Result<KrausSet> {
    let eig = hermitian_eigensystem(&chi.matrix)?;
    if eig.min_value() < -KRAUS_CLAMP {
        return Err(QptError::NotCompletelyPositive {
            min_eigenvalue: eig.min_value(),
        });
    }
    let ops = &PauliBasis::get().operation_elements;
    let mut operators = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        let weight = lambda.max(0.0);
        if weight < KRAUS_DROP {
            continue;
        }
        let s = weight.sqrt();
        let mut a = ComplexMatrix::zeros(2, 2);
        for (m, op) in ops.iter().enumerate() {
            a = &a + &op.scale(eig.vectors[(m, k)] * s);
        }
        operators.push(a);
    }
    if operators.is_empty() {
        return Err(QptError::Domain("process matrix is zero".into()));
    }
    Ok(KrausSet { operators })
}

/// `E_ij = ½ tr(σ_i ℰ(σ_j))`, `t_i = ½ tr(σ_i ℰ(I))`.
pub fn affine_from_chi(chi: &ChiMatrix) -> AffineMap {
    let basis = PauliBasis::get();
    let image_of_identity = apply_chi_to_operator(chi, basis.identity());
    let images: Vec<ComplexMatrix> = (0..3)
        .map(|j| apply_chi_to_operator(chi, basis.sigma(j)))
        .collect();
    let mut e = [[0.0; 3]; 3];
    let mut t = [0.0; 3];
    for i in 0..3 {
        let s = basis.sigma(i);
        t[i] = 0.5 * (s * &image_of_identity).trace().re;
        for j in 0..3 {
            e[i][j] = 0.5 * (s * &images[j]).trace().re;
        }
    }
    AffineMap { e, t }
}

/// The trace-preserving χ whose Bloch action is `a`. Not necessarily CP.
pub fn chi_from_affine(a: &AffineMap) -> ChiMatrix {
    let mut choi = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = ComplexMatrix::zeros(2, 2);
            unit[(i, j)] = ONE;
            let image = a.apply_operator(&unit);
            for k in 0..2 {
                for l in 0..2 {
                    choi[(2 * i + k, 2 * j + l)] = image[(k, l)] * 0.5;
                }
            }
        }
    }
    chi_from_choi_matrix(&choi)
}

/// Columns are `(I ⊗ Â_m)|Φ⟩`; unitary because `tr(Â_m† Â_n) = 2 δ_mn`.
fn choi_basis() -> &'static ComplexMatrix {
    static BASIS: OnceLock<ComplexMatrix> = OnceLock::new();
    BASIS.get_or_init(|| {
        let ops = &PauliBasis::get().operation_elements;
        let columns: Vec<Vec<Complex64>> = ops
            .iter()
            .map(|a| {
                let mut v = vec![ZERO; 4];
                for j in 0..2 {
                    for i in 0..2 {
                        v[2 * j + i] = a[(i, j)] * FRAC_1_SQRT_2;
                    }
                }
                v
            })
            .collect();
        ComplexMatrix::from_columns(&columns).expect("4 columns of length 4")
    })
}

/// `ρ_ℰ = V χ V†`.
pub fn choi_from_chi(chi: &ChiMatrix) -> ChoiState {
    let v = choi_basis();
    ChoiState {
        matrix: &(v * &chi.matrix) * &v.adjoint(),
    }
}

fn chi_from_choi_matrix(choi: &ComplexMatrix) -> ChiMatrix {
    let v = choi_basis();
    ChiMatrix {
        matrix: &(&v.adjoint() * choi) * v,
    }
}

/// Inverse of [`choi_from_chi`].
pub fn chi_from_choi(choi: &ChoiState) -> ChiMatrix {
    chi_from_choi_matrix(&choi.matrix)
}

/// Outcome of a complete-positivity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CpCheck {
    pub completely_positive: bool,
    pub min_choi_eigenvalue: f64,
}

/// Outcome of a trace-preservation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TpCheck {
    pub trace_preserving: bool,
    pub deficit: f64,
}

/// CP iff the Choi state has no eigenvalue below `-tol`.
pub fn is_completely_positive(chi: &ChiMatrix, tol: f64) -> Result<CpCheck> {
    if !chi.is_hermitian() {
        return Err(QptError::Domain(format!(
            "process matrix is not Hermitian (deviation {:.3e})",
            chi.hermitian_deviation()
        )));
    }
    let min = choi_from_chi(chi).min_eigenvalue();
    Ok(CpCheck {
        completely_positive: min >= -tol,
        min_choi_eigenvalue: min,
    })
}

/// `deficit = ‖Σ_mn χ_mn Â_n† Â_m − I‖_Fro`.
pub fn is_trace_preserving(chi: &ChiMatrix, tol: f64) -> TpCheck {
    let ops = &PauliBasis::get().operation_elements;
    let mut sum = ComplexMatrix::zeros(2, 2);
    for m in 0..4 {
        for n in 0..4 {
            let c = chi.matrix[(m, n)];
            if c != ZERO {
                sum = &sum + &(&ops[n].adjoint() * &ops[m]).scale(c);
            }
        }
    }
    let deficit = (&sum - &ComplexMatrix::identity(2)).frobenius_norm();
    TpCheck {
        trace_preserving: deficit <= tol,
        deficit,
    }
}

/// Composition "`first`, then `second`", computed through Kraus products.
pub fn compose(first: &ChiMatrix, second: &ChiMatrix) -> Result<ChiMatrix> {
    let a = kraus_from_chi(first)?;
    let b = kraus_from_chi(second)?;
    Ok(chi_from_kraus(&a.then(&b)))
}

/// Analytic reference channels. Times share whatever unit the caller uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardChannel {
    Identity,
    /// Multiplies Bloch x and y by `exp(−time/t2)`.
    Dephasing { time: f64, t2: f64 },
    /// Decay towards `|0⟩` with `γ = 1 − exp(−time/t1)`.
    AmplitudeDamping { time: f64, t1: f64 },
    /// Amplitude damping given the decay probability `γ ∈ [0, 1]` directly.
    AmplitudeDampingStrength { gamma: f64 },
    /// `ρ ↦ (1−p) ρ + p I/2`.
    Depolarizing { p: f64 },
    /// `exp(−i·angle/2·n·σ)` for a (normalized) axis `n`.
    UnitaryRotation { axis: [f64; 3], angle: f64 },
}

impl StandardChannel {
    /// Parses a channel by name with positional parameters, e.g.
    /// `("dephasing", [20.0, 100.0])`.
    pub fn from_name(kind: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(QptError::Domain(format!(
                    "channel '{kind}' takes {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        let channel = match kind {
            "identity" => {
                want(0)?;
                Self::Identity
            }
            "dephasing" => {
                want(2)?;
                Self::Dephasing { time: params[0], t2: params[1] }
            }
            "amplitude_damping" => {
                want(2)?;
                Self::AmplitudeDamping { time: params[0], t1: params[1] }
            }
            "amplitude_damping_strength" => {
                want(1)?;
                Self::AmplitudeDampingStrength { gamma: params[0] }
            }
            "depolarizing" => {
                want(1)?;
                Self::Depolarizing { p: params[0] }
            }
            "unitary_rotation" => {
                want(4)?;
                Self::UnitaryRotation {
                    axis: [params[0], params[1], params[2]],
                    angle: params[3],
                }
            }
            other => return Err(QptError::Domain(format!("unknown channel kind '{other}'"))),
        };
        Ok(channel)
    }

    pub fn kraus(&self) -> Result<KrausSet> {
        let basis = PauliBasis::get();
        let real = |d: [f64; 4]| ComplexMatrix::from_real(2, 2, &d).expect("2x2");
        match *self {
            Self::Identity => KrausSet::new(vec![basis.identity().clone()]),
            Self::Dephasing { time, t2 } => {
                if !(t2 > 0.0) || !(time >= 0.0) {
                    return Err(QptError::Domain(format!(
                        "dephasing needs t2 > 0 and time >= 0 (t2={t2}, time={time})"
                    )));
                }
                let lambda = (-time / t2).exp();
                let keep = 0.5 * (1.0 + lambda);
                KrausSet::new(vec![
                    basis.identity().scale_real(keep.sqrt()),
                    basis.sigma(2).scale_real((1.0 - keep).max(0.0).sqrt()),
                ])
            }
            Self::AmplitudeDamping { time, t1 } => {
                if !(t1 > 0.0) || !(time >= 0.0) {
                    return Err(QptError::Domain(format!(
                        "amplitude damping needs t1 > 0 and time >= 0 (t1={t1}, time={time})"
                    )));
                }
                Self::AmplitudeDampingStrength {
                    gamma: 1.0 - (-time / t1).exp(),
                }
                .kraus()
            }
            Self::AmplitudeDampingStrength { gamma } => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(QptError::Domain(format!("gamma {gamma} outside [0, 1]")));
                }
                KrausSet::new(vec![
                    real([1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]),
                    real([0.0, gamma.sqrt(), 0.0, 0.0]),
                ])
            }
            Self::Depolarizing { p } => {
                if !(0.0..=4.0 / 3.0).contains(&p) {
                    return Err(QptError::Domain(format!("depolarizing p {p} outside [0, 4/3]")));
                }
                let mut ops = vec![basis.identity().scale_real((1.0 - 0.75 * p).sqrt())];
                for axis in 0..3 {
                    ops.push(basis.sigma(axis).scale_real((0.25 * p).sqrt()));
                }
                KrausSet::new(ops)
            }
            Self::UnitaryRotation { axis, angle } => {
                let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                if !(norm > 0.0) || !angle.is_finite() {
                    return Err(QptError::Domain("rotation needs a nonzero axis".into()));
                }
                let (s, c) = (0.5 * angle).sin_cos();
                let mut u = basis.identity().scale_real(c);
                for (k, &n) in axis.iter().enumerate() {
                    u = &u + &basis.sigma(k).scale(Complex64::new(0.0, -s * n / norm));
                }
                KrausSet::new(vec![u])
            }
        }
    }

    pub fn chi(&self) -> Result<ChiMatrix> {
        Ok(chi_from_kraus(&self.kraus()?))
    }
}

/// χ of a standard channel.
pub fn standard_channel(kind: StandardChannel) -> Result<ChiMatrix> {
    kind.chi()
}
