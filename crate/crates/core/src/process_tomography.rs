//! Process reconstruction from the tomographed images of four input states.
//!
//! Two routes are provided. The χ route expands each output in the input
//! basis (`ℰ(ρ_j) = Σ_k λ_jk ρ_k`) and inverts the fixed linear relation
//! `λ_jk = Σ_mn β^{mn}_jk χ_mn` with a pseudoinverse. The affine route reads
//! the Bloch map directly off the images of `I/2, ρ_x, ρ_y, ρ_z`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::channel::{
    affine_from_chi, is_completely_positive, is_trace_preserving, AffineMap, ChiMatrix, CpCheck,
    TpCheck,
};
use crate::error::{QptError, Result};
use crate::linalg::{pseudoinverse, ComplexMatrix};
use crate::state::{BlochVector, DensityMatrix, PauliBasis};
use crate::state_tomography::{reconstruct_state, ExpectationRecord, StateEstimate, DEFAULT_ENTROPY_WEIGHT};

/// Relative singular-value cutoff of the β pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Tolerance on the minimum Choi eigenvalue for the CP verdict.
pub const CP_TOLERANCE: f64 = 1e-9;

/// Tolerance on the completeness deficit for the TP verdict.
pub const TP_TOLERANCE: f64 = 1e-8;

/// Labels of the input states, in order.
pub const INPUT_LABELS: [&str; 4] = ["|0><0|", "|1><1|", "|+><+|", "|+i><+i|"];

/// The prepared inputs `|0⟩, |1⟩, |+⟩, |+i⟩`, which double as the basis the
/// outputs are expanded in.
#[derive(Debug, Clone)]
pub struct InputBasis {
    states: [DensityMatrix; 4],
}

impl InputBasis {
    pub fn standard() -> &'static InputBasis {
        static BASIS: OnceLock<InputBasis> = OnceLock::new();
        BASIS.get_or_init(|| InputBasis {
            states: [
                DensityMatrix::zero(),
                DensityMatrix::one(),
                DensityMatrix::plus(),
                DensityMatrix::plus_i(),
            ],
        })
    }

    pub fn states(&self) -> &[DensityMatrix; 4] {
        &self.states
    }

    pub fn matrices(&self) -> [ComplexMatrix; 4] {
        std::array::from_fn(|k| self.states[k].matrix().clone())
    }

    /// Determinant of the Gram matrix `tr(ρ_j† ρ_k)`.
    pub fn gram_determinant(&self) -> f64 {
        let mats = self.matrices();
        let mut gram = ComplexMatrix::zeros(4, 4);
        for j in 0..4 {
            for k in 0..4 {
                gram[(j, k)] = (&mats[j].adjoint() * &mats[k]).trace();
            }
        }
        determinant(&gram).re
    }
}

fn determinant(m: &ComplexMatrix) -> Complex64 {
    let n = m.rows();
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let Some(pivot) = (col..n).max_by(|&r, &s| a[(r, col)].norm().total_cmp(&a[(s, col)].norm()))
        else {
            return det;
        };
        if a[(pivot, col)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
        }
    }
    det
}

/// Row-major flattening of a 2×2 operator.
fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

/// Solves for the coefficients of 2×2 operators in a fixed operator basis.
#[derive(Debug, Clone)]
struct Expander {
    basis: ComplexMatrix,
}

impl Expander {
    fn new(rho_basis: &[ComplexMatrix; 4]) -> Result<Self> {
        if rho_basis.iter().any(|m| m.dims() != (2, 2)) {
            return Err(QptError::DimensionMismatch {
                expected: "2x2 basis operators".into(),
                actual: "other".into(),
            });
        }
        let columns: Vec<Vec<Complex64>> = rho_basis.iter().map(vectorize).collect();
        let basis = ComplexMatrix::from_columns(&columns)?;
        // Probe for rank deficiency once, up front.
        basis
            .solve(&[Complex64::new(1.0, 0.0); 4])
            .map_err(|_| QptError::Domain("basis does not span 2x2 operators".into()))?;
        Ok(Self { basis })
    }

    fn expand(&self, m: &ComplexMatrix) -> Result<Vec<Complex64>> {
        self.basis.solve(&vectorize(m))
    }
}

/// The 16×16 matrix `B[(j,k), (m,n)] = β^{mn}_jk` with
/// `Â_m ρ_j Â_n† = Σ_k β^{mn}_jk ρ_k`, and its pseudoinverse.
#[derive(Debug, Clone)]
pub struct BetaTensor {
    matrix: ComplexMatrix,
    pseudoinverse: ComplexMatrix,
    rank: usize,
    rho_basis: [ComplexMatrix; 4],
    expander: Expander,
}

impl BetaTensor {
    /// β for the operation elements and the standard input basis, built once.
    pub fn standard() -> &'static BetaTensor {
        static BETA: OnceLock<BetaTensor> = OnceLock::new();
        BETA.get_or_init(|| {
            build_beta(
                &PauliBasis::get().operation_elements,
                &InputBasis::standard().matrices(),
            )
            .expect("standard bases are complete")
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn pseudoinverse(&self) -> &ComplexMatrix {
        &self.pseudoinverse
    }

    /// Number of singular values above the cutoff.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rho_basis(&self) -> &[ComplexMatrix; 4] {
        &self.rho_basis
    }

    /// `β^{mn}_jk`.
    pub fn entry(&self, m: usize, n: usize, j: usize, k: usize) -> Complex64 {
        self.matrix[(4 * j + k, 4 * m + n)]
    }
}

/// Builds β for the given operation elements and decomposition basis.
pub fn build_beta(operations: &[ComplexMatrix; 4], rho_basis: &[ComplexMatrix; 4]) -> Result<BetaTensor> {
    let expander = Expander::new(rho_basis)?;
    let mut matrix = ComplexMatrix::zeros(16, 16);
    for (j, rho) in rho_basis.iter().enumerate() {
        for (m, am) in operations.iter().enumerate() {
            let left = am * rho;
            for (n, an) in operations.iter().enumerate() {
                let coeffs = expander.expand(&(&left * &an.adjoint()))?;
                for (k, c) in coeffs.into_iter().enumerate() {
                    matrix[(4 * j + k, 4 * m + n)] = c;
                }
            }
        }
    }
    let (pseudoinverse, rank) = pseudoinverse(&matrix, PINV_CUTOFF);
    Ok(BetaTensor {
        matrix,
        pseudoinverse,
        rank,
        rho_basis: rho_basis.clone(),
        expander,
    })
}

/// `λ_jk` with `ℰ(ρ_j) = Σ_k λ_jk ρ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix {
    pub matrix: ComplexMatrix,
}

impl LambdaMatrix {
    /// `Σ_k λ_jk ρ_k` for input `j`.
    pub fn image(&self, j: usize, rho_basis: &[ComplexMatrix; 4]) -> ComplexMatrix {
        (0..4).fold(ComplexMatrix::zeros(2, 2), |acc, k| {
            &acc + &rho_basis[k].scale(self.matrix[(j, k)])
        })
    }
}

/// Expands the four outputs (in input-basis order) in the β decomposition basis.
pub fn lambda_from_outputs(outputs: &[DensityMatrix], beta: &BetaTensor) -> Result<LambdaMatrix> {
    if outputs.len() != 4 {
        return Err(QptError::Domain(format!(
            "need exactly 4 output states, got {}",
            outputs.len()
        )));
    }
    let mut matrix = ComplexMatrix::zeros(4, 4);
    for (j, out) in outputs.iter().enumerate() {
        let coeffs = beta.expander.expand(out.matrix())?;
        for (k, c) in coeffs.into_iter().enumerate() {
            matrix[(j, k)] = c;
        }
    }
    Ok(LambdaMatrix { matrix })
}

/// χ recovered from λ, with the diagnostics of the inversion.
#[derive(Debug, Clone)]
pub struct ChiReconstruction {
    /// The Hermitian part of the pseudoinverse solution.
    pub chi: ChiMatrix,
    /// The solution before symmetrization.
    pub raw: ChiMatrix,
    /// Frobenius norm of the discarded anti-Hermitian part.
    pub anti_hermitian_norm: f64,
    /// `‖β·vec(χ) − vec(λ)‖_Fro` for the symmetrized χ.
    pub lambda_residual: f64,
}

/// Applies the β pseudoinverse to λ and symmetrizes the result.
pub fn chi_from_lambda(lambda: &LambdaMatrix, beta: &BetaTensor) -> ChiReconstruction {
    let lam: Vec<Complex64> = lambda.matrix.as_slice().to_vec();
    let chi_vec = beta.pseudoinverse.mul_vec(&lam);
    let raw = ChiMatrix::new(ComplexMatrix::from_vec(4, 4, chi_vec).expect("16 entries"))
        .expect("finite 4x4");
    let (chi, anti_hermitian_norm) = raw.symmetrized();
    let predicted = beta.matrix.mul_vec(chi.matrix().as_slice());
    let lambda_residual = predicted
        .iter()
        .zip(&lam)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    ChiReconstruction {
        chi,
        raw,
        anti_hermitian_norm,
        lambda_residual,
    }
}

/// Bloch images of `I/2, ρ_x, ρ_y, ρ_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateImages {
    pub center: BlochVector,
    pub x: BlochVector,
    pub y: BlochVector,
    pub z: BlochVector,
}

impl StateImages {
    /// Synthesizes the images from the outputs of `|0⟩, |1⟩, |+⟩, |+i⟩` by
    /// linearity: `ℰ(I/2) = ½ℰ(|0⟩⟨0|) + ½ℰ(|1⟩⟨1|)`.
    pub fn from_input_outputs(outputs: &[BlochVector; 4]) -> Self {
        let [zero, one, plus, plus_i] = *outputs;
        let center = BlochVector::new(
            0.5 * (zero.x + one.x),
            0.5 * (zero.y + one.y),
            0.5 * (zero.z + one.z),
        );
        Self {
            center,
            x: plus,
            y: plus_i,
            z: zero,
        }
    }
}

/// Affine map with `t = m'` and columns `x' − m'`, `y' − m'`, `z' − m'`.
pub fn affine_from_state_images(images: &StateImages) -> AffineMap {
    let m = images.center.to_array();
    let cols = [images.x.to_array(), images.y.to_array(), images.z.to_array()];
    let mut e = [[0.0; 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            e[i][j] = col[i] - m[i];
        }
    }
    AffineMap::new(e, m)
}

/// Everything produced by one process reconstruction.
#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    /// Per-input state tomography results, in input-basis order.
    pub states: Vec<StateEstimate>,
    pub lambda: LambdaMatrix,
    /// Symmetrized χ; possibly not CP.
    pub chi: ChiMatrix,
    /// χ before symmetrization.
    pub raw_chi: ChiMatrix,
    pub anti_hermitian_norm: f64,
    pub lambda_residual: f64,
    /// Bloch map of `chi`.
    pub affine: AffineMap,
    /// Bloch map read directly off the output states.
    pub affine_direct: AffineMap,
    pub cp: CpCheck,
    pub tp: TpCheck,
}

impl ProcessEstimate {
    pub fn residuals(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.residual).collect()
    }
}

/// State tomography on the four record sets (input-basis order), then the
/// χ and affine reconstructions and the physicality checks.
pub fn run_process_tomography(records: &[Vec<ExpectationRecord>]) -> Result<ProcessEstimate> {
    run_process_tomography_with(records, DEFAULT_ENTROPY_WEIGHT)
}

pub fn run_process_tomography_with(
    records: &[Vec<ExpectationRecord>],
    entropy_weight: f64,
) -> Result<ProcessEstimate> {
    if records.len() != 4 {
        return Err(QptError::Domain(format!(
            "need 4 record sets, got {}",
            records.len()
        )));
    }
    let states = records
        .iter()
        .enumerate()
        .map(|(i, set)| {
            reconstruct_state(set, entropy_weight).map_err(|e| QptError::Tomography {
                index: i + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    estimate_from_states(states)
}

/// The reconstruction from already tomographed output states.
pub fn estimate_from_states(states: Vec<StateEstimate>) -> Result<ProcessEstimate> {
    let beta = BetaTensor::standard();
    let outputs: Vec<DensityMatrix> = states.iter().map(|s| s.rho.clone()).collect();
    let lambda = lambda_from_outputs(&outputs, beta)?;
    let rec = chi_from_lambda(&lambda, beta);
    let blochs: [BlochVector; 4] = std::array::from_fn(|i| outputs[i].bloch());
    let affine_direct = affine_from_state_images(&StateImages::from_input_outputs(&blochs));
    let cp = is_completely_positive(&rec.chi, CP_TOLERANCE)?;
    let tp = is_trace_preserving(&rec.chi, TP_TOLERANCE);
    Ok(ProcessEstimate {
        states,
        lambda,
        affine: affine_from_chi(&rec.chi),
        chi: rec.chi,
        raw_chi: rec.raw,
        anti_hermitian_norm: rec.anti_hermitian_norm,
        lambda_residual: rec.lambda_residual,
        affine_direct,
        cp,
        tp,
    })
}
