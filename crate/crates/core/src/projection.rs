//! Nearest completely positive, trace-preserving process to a χ estimate.
//!
//! Candidates are parametrized by a lower-triangular 4×4 factor `T`
//! (4 real diagonal and 6 complex sub-diagonal entries), giving
//! `χ(T) = T† T ⪰ 0`. The rows of `T` define Kraus operators
//! `A_k = Σ_m conj(T_km) Â_m`; every evaluation replaces them by
//! `A_k S^{-1/2}` with `S = Σ_k A_k† A_k`, so the search only ever visits
//! exactly trace-preserving maps. The Frobenius distance to the target is
//! minimized by a Hooke–Jeeves pattern search from eight deterministic
//! starting points.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{chi_from_kraus, ChiMatrix, KrausSet, CHI_HERMITIAN_TOLERANCE};
use crate::error::{QptError, Result};
use crate::linalg::{hermitian_eigensystem, ComplexMatrix, ONE, ZERO};
use crate::metrics::{DiscrepancyReport, ReportContext};

/// Number of real parameters of the lower-triangular factor.
pub const PARAMETER_COUNT: usize = 16;

/// Number of deterministic restarts.
pub const RESTARTS: usize = 8;

/// `S` must have its smallest eigenvalue above this to be renormalized.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

const FIXED_SEED_BASE: u64 = 0x5eed_c4a1_0000;

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Objective evaluations allowed per restart.
    pub max_evaluations: usize,
    /// Initial pattern step.
    pub initial_step: f64,
    /// The search has converged once the pattern step shrinks below this,
    pub min_step: f64,
    /// or once an improving sweep (with its pattern moves) reduces the
    /// distance by less than this.
    pub sweep_tolerance: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 50_000,
            initial_step: 0.1,
            min_step: 1e-9,
            sweep_tolerance: 1e-10,
        }
    }
}

/// The lower-triangular factor `T` as a flat parameter vector.
///
/// Layout: `T_00, T_11, T_22, T_33` (real), then `(re, im)` pairs for
/// `T_10, T_20, T_21, T_30, T_31, T_32`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyParametrization {
    pub params: [f64; PARAMETER_COUNT],
}

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

impl CholeskyParametrization {
    pub fn factor(&self) -> [[Complex64; 4]; 4] {
        let p = &self.params;
        let mut t = [[ZERO; 4]; 4];
        for i in 0..4 {
            t[i][i] = Complex64::new(p[i], 0.0);
        }
        for (slot, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            t[i][j] = Complex64::new(p[4 + 2 * slot], p[5 + 2 * slot]);
        }
        t
    }

    /// Inverse of [`Self::factor`]; entries above the diagonal and imaginary
    /// parts of the diagonal are ignored.
    pub fn from_factor(t: &[[Complex64; 4]; 4]) -> Self {
        let mut params = [0.0; PARAMETER_COUNT];
        for i in 0..4 {
            params[i] = t[i][i].re;
        }
        for (slot, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            params[4 + 2 * slot] = t[i][j].re;
            params[5 + 2 * slot] = t[i][j].im;
        }
        Self { params }
    }

    /// `T† T`, positive semidefinite for every parameter value.
    pub fn chi(&self) -> ComplexMatrix {
        let t = self.factor();
        let mut m = ComplexMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                m[(a, b)] = (0..4).map(|k| t[k][a].conj() * t[k][b]).sum();
            }
        }
        m
    }

    /// Kraus operators `A_k = Σ_m conj(T_km) Â_m`, one per row of `T`.
    pub fn kraus(&self) -> KrausSet {
        let t = self.factor();
        let ops = (0..4)
            .map(|k| {
                let c: [Complex64; 4] = std::array::from_fn(|m| t[k][m].conj());
                let a = from_operation_coefficients(&c);
                ComplexMatrix::from_vec(2, 2, a.to_vec()).expect("2x2")
            })
            .collect();
        KrausSet::new(ops).expect("four 2x2 operators")
    }

    /// The CPTP process reached from these parameters.
    pub fn physical_chi(&self) -> Result<ChiMatrix> {
        Ok(chi_from_kraus(&tp_normalize(&self.kraus())?))
    }
}

/// 2×2 matrices as row-major `[a, b, c, d]`.
type M2 = [Complex64; 4];

/// `Σ_m c_m Â_m` over `{I, σ_x, −iσ_y, σ_z}`.
fn from_operation_coefficients(c: &[Complex64; 4]) -> M2 {
    // α I + β X + γ (−iY) + δ Z = [[α+δ, β−γ], [β+γ, α−δ]]
    [c[0] + c[3], c[1] - c[2], c[1] + c[2], c[0] - c[3]]
}

fn to_operation_coefficients(m: &M2) -> [Complex64; 4] {
    let [a, b, c, d] = *m;
    [(a + d) * 0.5, (b + c) * 0.5, (c - b) * 0.5, (a - d) * 0.5]
}

fn mul2(x: &M2, y: &M2) -> M2 {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// `S^{-1/2}` for a 2×2 Hermitian `S`, or `None` when its smallest
/// eigenvalue is at or below [`DEGENERACY_THRESHOLD`].
fn inverse_sqrt_2x2(s: &M2) -> Option<M2> {
    let p = s[0].re;
    let r = s[3].re;
    let q = s[1];
    let half_gap = 0.5 * (p - r);
    let radius = half_gap.hypot(q.norm());
    let min_eig = 0.5 * (p + r) - radius;
    if !(min_eig > DEGENERACY_THRESHOLD) {
        return None;
    }
    // √S = (S + √det·I) / √(tr + 2√det), inverted in closed form.
    let det = p * r - q.norm_sqr();
    let root_det = det.sqrt();
    let t = (p + r + 2.0 * root_det).sqrt();
    let a = p + root_det;
    let d = r + root_det;
    let inv_det = 1.0 / (a * d - q.norm_sqr());
    let f = t * inv_det;
    Some([
        Complex64::new(d * f, 0.0),
        -q * f,
        -q.conj() * f,
        Complex64::new(a * f, 0.0),
    ])
}

/// Replaces each `A_k` by `A_k S^{-1/2}` with `S = Σ_k A_k† A_k`.
pub fn tp_normalize(kraus: &KrausSet) -> Result<KrausSet> {
    let s = kraus.completeness();
    let eig = hermitian_eigensystem(&s)?;
    if !(eig.min_value() > DEGENERACY_THRESHOLD) {
        return Err(QptError::DegenerateParametrization(format!(
            "completeness operator is singular (min eigenvalue {:.3e})",
            eig.min_value()
        )));
    }
    let inv_sqrt = eig.reconstruct_with(|x| 1.0 / x.sqrt());
    KrausSet::new(kraus.operators().iter().map(|a| a * &inv_sqrt).collect())
}

/// Squared Frobenius distance between a target χ and the CPTP process of a
/// parameter vector, evaluated on fixed-size arrays.
struct Objective {
    target: [[Complex64; 4]; 4],
}

impl Objective {
    fn new(target: &ChiMatrix) -> Self {
        let m = target.matrix();
        Self {
            target: std::array::from_fn(|a| std::array::from_fn(|b| m[(a, b)])),
        }
    }

    /// Normalized Kraus coefficient vectors, or `None` for a degenerate `T`.
    fn coefficients(params: &[f64; PARAMETER_COUNT]) -> Option<[[Complex64; 4]; 4]> {
        let t = CholeskyParametrization { params: *params }.factor();
        let mut ops = [[ZERO; 4]; 4];
        let mut s = [ZERO; 4];
        for k in 0..4 {
            let c: [Complex64; 4] = std::array::from_fn(|m| t[k][m].conj());
            let a = from_operation_coefficients(&c);
            // S += A† A
            let adj = [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()];
            let prod = mul2(&adj, &a);
            for i in 0..4 {
                s[i] += prod[i];
            }
            ops[k] = a;
        }
        let w = inverse_sqrt_2x2(&s)?;
        Some(std::array::from_fn(|k| {
            to_operation_coefficients(&mul2(&ops[k], &w))
        }))
    }

    fn chi_of(params: &[f64; PARAMETER_COUNT]) -> Option<[[Complex64; 4]; 4]> {
        let c = Self::coefficients(params)?;
        let mut chi = [[ZERO; 4]; 4];
        for ck in &c {
            for m in 0..4 {
                for n in 0..4 {
                    chi[m][n] += ck[m] * ck[n].conj();
                }
            }
        }
        Some(chi)
    }

    fn eval(&self, params: &[f64; PARAMETER_COUNT]) -> f64 {
        match Self::chi_of(params) {
            Some(chi) => {
                let mut acc = 0.0;
                for m in 0..4 {
                    for n in 0..4 {
                        acc += (self.target[m][n] - chi[m][n]).norm_sqr();
                    }
                }
                acc
            }
            None => f64::INFINITY,
        }
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RestartOutcome {
    pub seed_index: usize,
    pub distance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// The nearest CPTP process found and how the search went.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub chi_tilde: ChiMatrix,
    /// `‖χ − χ̃‖_Fro`.
    pub distance: f64,
    /// Objective evaluations spent by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning starting point.
    pub seed_index: usize,
    pub restarts: Vec<RestartOutcome>,
}

impl ProjectionResult {
    /// Gap between the two best converged restarts, or `None` with fewer
    /// than two converged restarts.
    pub fn restart_spread(&self) -> Option<f64> {
        let mut d: Vec<f64> = self
            .restarts
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.distance)
            .collect();
        d.sort_by(f64::total_cmp);
        (d.len() >= 2).then(|| d[1] - d[0])
    }
}

/// Lower-triangular `T` with `T† T = p` for a positive definite `p`.
fn reverse_cholesky(p: &ComplexMatrix) -> Option<[[Complex64; 4]; 4]> {
    // With J the index reversal, J p J = L L† (ordinary Cholesky), so
    // T = (J L J)† is lower triangular and T† T = p.
    let n = 4;
    let rev = |i: usize| n - 1 - i;
    let q: [[Complex64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| p[(rev(i), rev(j))]));
    let mut l = [[ZERO; 4]; 4];
    for j in 0..n {
        let mut diag = q[j][j].re;
        for k in 0..j {
            diag -= l[j][k].norm_sqr();
        }
        if !(diag > 0.0) {
            return None;
        }
        let d = diag.sqrt();
        l[j][j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = q[i][j];
            for k in 0..j {
                acc -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = acc / d;
        }
    }
    // U = J L J, T = U†.
    let u: [[Complex64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| l[rev(i)][rev(j)]));
    Some(std::array::from_fn(|i| std::array::from_fn(|j| u[j][i].conj())))
}

/// The eight starting points: identity-scaled, aligned with the target's
/// clamped spectrum, and six fixed pseudo-random factors.
fn starting_points(target: &ChiMatrix) -> Vec<[f64; PARAMETER_COUNT]> {
    let mut seeds = Vec::with_capacity(RESTARTS);

    let mut identity = [0.0; PARAMETER_COUNT];
    identity[..4].fill(0.5);
    seeds.push(identity);

    let aligned = hermitian_eigensystem(target.matrix())
        .ok()
        .and_then(|eig| {
            let clamped = eig.reconstruct_with(|x| x.max(0.0));
            let regularized = &clamped + &ComplexMatrix::identity(4).scale_real(1e-12);
            reverse_cholesky(&regularized)
        })
        .map(|t| CholeskyParametrization::from_factor(&t).params)
        .unwrap_or(identity);
    seeds.push(aligned);

    for s in 0..(RESTARTS - 2) as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(FIXED_SEED_BASE + s);
        let mut p = [0.0; PARAMETER_COUNT];
        for x in p.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        seeds.push(p);
    }
    seeds
}

struct SearchOutcome {
    params: [f64; PARAMETER_COUNT],
    value: f64,
    evaluations: usize,
    converged: bool,
}

struct PatternSearch<'a> {
    objective: &'a Objective,
    evaluations: usize,
}

impl PatternSearch<'_> {
    fn eval(&mut self, p: &[f64; PARAMETER_COUNT]) -> f64 {
        self.evaluations += 1;
        self.objective.eval(p)
    }

    /// One coordinate sweep around `point`.
    fn explore(&mut self, mut p: [f64; PARAMETER_COUNT], mut value: f64, step: f64) -> ([f64; PARAMETER_COUNT], f64) {
        for i in 0..PARAMETER_COUNT {
            let orig = p[i];
            p[i] = orig + step;
            let up = self.eval(&p);
            if up < value {
                value = up;
                continue;
            }
            p[i] = orig - step;
            let down = self.eval(&p);
            if down < value {
                value = down;
                continue;
            }
            p[i] = orig;
        }
        (p, value)
    }

    /// Hooke–Jeeves: exploratory sweeps, pattern moves along improving
    /// directions, step halving when a sweep fails.
    fn run(mut self, start: [f64; PARAMETER_COUNT], options: &ProjectionOptions) -> SearchOutcome {
        let mut base = start;
        let mut base_value = self.eval(&base);
        let mut step = options.initial_step;
        let mut converged = false;
        while self.evaluations < options.max_evaluations {
            if step < options.min_step {
                converged = true;
                break;
            }
            let start_value = base_value;
            let (mut new, mut new_value) = self.explore(base, base_value, step);
            if new_value >= base_value {
                step *= 0.5;
                continue;
            }
            loop {
                let jump: [f64; PARAMETER_COUNT] = std::array::from_fn(|i| 2.0 * new[i] - base[i]);
                base = new;
                base_value = new_value;
                if self.evaluations >= options.max_evaluations {
                    break;
                }
                let jump_value = self.eval(&jump);
                let (probe, probe_value) = self.explore(jump, jump_value, step);
                if probe_value < base_value {
                    new = probe;
                    new_value = probe_value;
                } else {
                    break;
                }
            }
            // The objective is the squared distance.
            if start_value.sqrt() - base_value.sqrt() < options.sweep_tolerance {
                converged = true;
                break;
            }
        }
        SearchOutcome {
            params: base,
            value: base_value,
            evaluations: self.evaluations,
            converged,
        }
    }
}

fn pattern_search(objective: &Objective, start: [f64; PARAMETER_COUNT], options: &ProjectionOptions) -> SearchOutcome {
    PatternSearch { objective, evaluations: 0 }.run(start, options)
}

/// Finds the CPTP process closest in Frobenius norm to a Hermitian χ.
pub fn project_to_physical(chi: &ChiMatrix) -> Result<ProjectionResult> {
    project_to_physical_with(chi, &ProjectionOptions::default())
}

pub fn project_to_physical_with(chi: &ChiMatrix, options: &ProjectionOptions) -> Result<ProjectionResult> {
    if chi.hermitian_deviation() > CHI_HERMITIAN_TOLERANCE {
        return Err(QptError::Domain(format!(
            "process matrix must be Hermitian before projection (deviation {:.3e})",
            chi.hermitian_deviation()
        )));
    }
    let objective = Objective::new(chi);
    let outcomes: Vec<SearchOutcome> = starting_points(chi)
        .into_par_iter()
        .map(|start| pattern_search(&objective, start, options))
        .collect();

    let restarts: Vec<RestartOutcome> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| RestartOutcome {
            seed_index: i,
            distance: o.value.sqrt(),
            evaluations: o.evaluations,
            converged: o.converged,
        })
        .collect();

    // Lowest objective wins; ties go to the lowest seed index.
    let pick = |only_converged: bool| {
        outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.value.is_finite() && (o.converged || !only_converged))
            .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
            .map(|(i, _)| i)
    };
    let converged_best = pick(true);
    let Some(best) = converged_best.or_else(|| pick(false)) else {
        return Err(QptError::DegenerateParametrization(
            "every restart ended at a degenerate point".into(),
        ));
    };
    let winner = &outcomes[best];
    let chi_tilde = CholeskyParametrization {
        params: winner.params,
    }
    .physical_chi()?;
    let result = ProjectionResult {
        distance: chi.frobenius_distance(&chi_tilde),
        chi_tilde,
        iterations: winner.evaluations,
        converged: converged_best.is_some(),
        seed_index: best,
        restarts,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(QptError::NonConvergence {
            distance: result.distance,
            evaluations: result.iterations,
            best: Box::new(result),
        })
    }
}

/// Disparity between the estimate and its projection.
pub fn projection_report(chi: &ChiMatrix, result: &ProjectionResult) -> Result<DiscrepancyReport> {
    DiscrepancyReport::between(
        chi,
        &result.chi_tilde,
        ReportContext::new("estimate", "nearest physical"),
    )
}

/// Identity factor, useful as a neutral starting point in tests.
pub fn identity_parametrization() -> CholeskyParametrization {
    let mut t = [[ZERO; 4]; 4];
    t[0][0] = ONE;
    CholeskyParametrization::from_factor(&t)
}
