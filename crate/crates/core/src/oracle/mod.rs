//! Brute-force matrix mechanics in truncated boson and exact fermion Fock
//! spaces.

pub mod boson;
pub mod fermion;
pub mod linalg;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfdError};
use crate::mode_solver::{BosonModeVector, FermionModeState};
use crate::C64;

pub use boson::{
    boson_truncation_report, build_boson_hamiltonian, build_boson_ladder, build_boson_tilde_hamiltonian,
    doubled_operator, evolve_doubled_boson, evolve_single_boson, number_operator, position_operator,
    reduced_density, system_expectation, BosonDrive, OracleTrajectory, OscillatorDrive,
};
pub use fermion::{
    build_fermion_hamiltonian, build_fermion_space, evolve_doubled_fermion, FermionHamiltonian, FermionSpace,
    FermionTrajectory,
};

/// Default boson truncation.
pub const DEFAULT_TRUNCATION: usize = 60;
/// Largest boson truncation accepted for doubled spaces (dimension 4096).
pub const MAX_DOUBLED_TRUNCATION: usize = 64;
/// Thermal-state builders refuse when the weight beyond the retained levels
/// exceeds this.
pub const THERMAL_TAIL_LIMIT: f64 = 1e-8;
/// Evolution aborts when the top-level population grows beyond this.
pub const EVOLUTION_TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisDescriptor {
    BosonSingle { levels: usize },
    BosonDoubled { levels: usize },
    FermionSingle,
    FermionDoubled,
}

impl BasisDescriptor {
    pub fn dimension(&self) -> usize {
        match *self {
            BasisDescriptor::BosonSingle { levels } => levels,
            BasisDescriptor::BosonDoubled { levels } => levels * levels,
            BasisDescriptor::FermionSingle => 4,
            BasisDescriptor::FermionDoubled => 16,
        }
    }

    pub fn boson_single(levels: usize) -> Result<Self> {
        check_levels(levels)?;
        Ok(BasisDescriptor::BosonSingle { levels })
    }

    pub fn boson_doubled(levels: usize) -> Result<Self> {
        check_levels(levels)?;
        if levels > MAX_DOUBLED_TRUNCATION {
            return Err(TfdError::param(format!(
                "doubled boson truncation {levels} exceeds the cap of {MAX_DOUBLED_TRUNCATION}"
            )));
        }
        Ok(BasisDescriptor::BosonDoubled { levels })
    }

    /// Levels per boson factor.
    pub fn levels(&self) -> Option<usize> {
        match *self {
            BasisDescriptor::BosonSingle { levels } | BasisDescriptor::BosonDoubled { levels } => Some(levels),
            _ => None,
        }
    }

    /// Levels below the top 10% of each boson factor.
    pub fn retained_levels(&self) -> Option<usize> {
        self.levels().map(retained)
    }
}

pub(crate) fn retained(levels: usize) -> usize {
    levels - levels.div_ceil(10)
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < 2 {
        return Err(TfdError::param(format!("boson truncation must be at least 2, got {levels}")));
    }
    Ok(())
}

fn mismatch(expected: &BasisDescriptor, found: &BasisDescriptor) -> TfdError {
    TfdError::BasisMismatch {
        expected: format!("{expected:?}"),
        found: format!("{found:?}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<C64>,
    pub basis: BasisDescriptor,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<C64>, basis: BasisDescriptor, label: impl Into<String>) -> Result<Self> {
        let d = basis.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(TfdError::BasisMismatch {
                expected: format!("{d}x{d} for {basis:?}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(OperatorMatrix {
            matrix,
            basis,
            label: label.into(),
        })
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            matrix: self.matrix.adjoint(),
            basis: self.basis,
            label: format!("{}^dag", self.label),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    fn same_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(mismatch(&self.basis, &other.basis));
        }
        Ok(())
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        self.same_basis(other)?;
        Ok(OperatorMatrix {
            matrix: &self.matrix * &other.matrix,
            basis: self.basis,
            label: format!("{} {}", self.label, other.label),
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<DMatrix<C64>> {
        self.same_basis(other)?;
        Ok(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<DMatrix<C64>> {
        self.same_basis(other)?;
        Ok(&self.matrix * &other.matrix + &other.matrix * &self.matrix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<C64>,
    pub basis: BasisDescriptor,
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace to 1e-12 and positivity to -1e-10.
    pub fn new(matrix: DMatrix<C64>, basis: BasisDescriptor) -> Result<Self> {
        let d = basis.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(TfdError::BasisMismatch {
                expected: format!("{d}x{d}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let herm = linalg::max_abs(&(&matrix - matrix.adjoint()));
        if herm > 1e-12 {
            return Err(TfdError::param(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - C64::from(1.0)).norm() > 1e-12 {
            return Err(TfdError::param(format!("density matrix trace {tr} differs from 1")));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(TfdError::param(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix { matrix, basis })
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &OperatorMatrix) -> Result<Self> {
        if u.basis != self.basis {
            return Err(mismatch(&self.basis, &u.basis));
        }
        let m = &u.matrix * &self.matrix * u.matrix.adjoint();
        Ok(DensityMatrix {
            matrix: (&m + m.adjoint()) * C64::from(0.5),
            basis: self.basis,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub data: DVector<C64>,
    pub basis: BasisDescriptor,
}

impl StateVector {
    /// Checks unit norm to 1e-12.
    pub fn new(data: DVector<C64>, basis: BasisDescriptor) -> Result<Self> {
        if data.len() != basis.dimension() {
            return Err(TfdError::BasisMismatch {
                expected: format!("length {}", basis.dimension()),
                found: format!("length {}", data.len()),
            });
        }
        let norm = data.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(TfdError::param(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { data, basis })
    }

    pub fn normalized(data: DVector<C64>, basis: BasisDescriptor) -> Result<Self> {
        let norm = data.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(TfdError::NonFinite("state norm".into()));
        }
        Self::new(data / C64::from(norm), basis)
    }

    /// Basis state `index`.
    pub fn basis_state(index: usize, basis: BasisDescriptor) -> Result<Self> {
        let mut data = DVector::zeros(basis.dimension());
        if index >= data.len() {
            return Err(TfdError::param(format!("basis index {index} out of range")));
        }
        data[index] = C64::from(1.0);
        Self::new(data, basis)
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.basis != other.basis {
            return Err(mismatch(&self.basis, &other.basis));
        }
        Ok((&self.data - &other.data).norm())
    }

    pub fn apply(&self, op: &OperatorMatrix) -> Result<DVector<C64>> {
        if op.basis != self.basis {
            return Err(mismatch(&self.basis, &op.basis));
        }
        Ok(&op.matrix * &self.data)
    }

    /// The doubled boson amplitudes as the `N × N` array `Ψ[n, m]`.
    pub fn as_pair_matrix(&self) -> Result<DMatrix<C64>> {
        match self.basis {
            BasisDescriptor::BosonDoubled { levels } => Ok(DMatrix::from_row_slice(levels, levels, self.data.as_slice())),
            other => Err(mismatch(&BasisDescriptor::BosonDoubled { levels: 0 }, &other)),
        }
    }

    pub fn from_pair_matrix(psi: &DMatrix<C64>) -> Result<Self> {
        let n = psi.nrows();
        let data = DVector::from_iterator(n * n, psi.transpose().iter().copied());
        Self::new(data, BasisDescriptor::boson_doubled(n)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TruncationReport {
    pub tail_weight: f64,
    pub commutator_defect: f64,
}

/// `Tr[ρ A]`.
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<C64> {
    if rho.basis != op.basis {
        return Err(mismatch(&rho.basis, &op.basis));
    }
    Ok((&rho.matrix * &op.matrix).trace())
}

/// `⟨ψ|A|ψ⟩`.
pub fn expectation_state(psi: &StateVector, op: &OperatorMatrix) -> Result<C64> {
    let v = psi.apply(op)?;
    Ok(psi.data.dotc(&v))
}

/// `e^{−βℏω N}/Z` on a single-system basis; `N = N_a + N_b` for fermions.
pub fn thermal_density(beta: f64, omega: f64, hbar: f64, basis: BasisDescriptor) -> Result<DensityMatrix> {
    match basis {
        BasisDescriptor::BosonSingle { levels } => boson::thermal_density_boson(beta, omega, hbar, levels),
        BasisDescriptor::FermionSingle => fermion::thermal_density_fermion(beta, omega, hbar),
        other => Err(TfdError::param(format!("thermal_density needs a single-system basis, got {other:?}"))),
    }
}

/// The doubled thermal vacuum built as a normalised pair series and as a
/// squeeze (rotation for fermions) of the doubled vacuum.
#[derive(Debug, Clone)]
pub struct ThermalStatePair {
    pub series: StateVector,
    pub squeezed: StateVector,
    pub distance: f64,
    pub truncation: Option<TruncationReport>,
}

pub fn build_thermal_state_doubled(
    beta: f64,
    omega: f64,
    hbar: f64,
    basis: BasisDescriptor,
) -> Result<ThermalStatePair> {
    let x = boson::thermal_exponent(beta, omega, hbar)?;
    let (series, squeezed, truncation) = match basis {
        BasisDescriptor::BosonDoubled { levels } => {
            let (a, b) = boson::thermal_pair(x, levels)?;
            let report = boson_truncation_report(&a)?;
            (a, b, Some(report))
        }
        BasisDescriptor::FermionDoubled => {
            let (a, b) = fermion::thermal_pair(x)?;
            (a, b, None)
        }
        other => {
            return Err(TfdError::param(format!(
                "doubled thermal states need a doubled basis, got {other:?}"
            )))
        }
    };
    let distance = series.distance(&squeezed)?;
    Ok(ThermalStatePair {
        series,
        squeezed,
        distance,
        truncation,
    })
}

/// Time stepping rule for ordered exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `exp(−iH(t_mid)Δt/ℏ)`.
    Midpoint,
    /// Fourth-order Magnus expansion on two Gauss points.
    Magnus4,
}

/// Gauss nodes and the commutator weight of the fourth-order Magnus step.
pub(crate) const MAGNUS_NODES: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];
pub(crate) const MAGNUS_WEIGHT: f64 = 0.144_337_567_297_406_44; // √3/12

/// Time-ordered `U(t_f, t_i)` as a product of midpoint exponentials.
pub fn evolve_unitary(
    h_of_t: impl Fn(f64) -> OperatorMatrix,
    t_i: f64,
    t_f: f64,
    substeps: usize,
    hbar: f64,
) -> Result<OperatorMatrix> {
    evolve_unitary_with(h_of_t, t_i, t_f, substeps, hbar, Scheme::Midpoint)
}

pub fn evolve_unitary_with(
    h_of_t: impl Fn(f64) -> OperatorMatrix,
    t_i: f64,
    t_f: f64,
    substeps: usize,
    hbar: f64,
    scheme: Scheme,
) -> Result<OperatorMatrix> {
    if substeps < 1 {
        return Err(TfdError::param("evolve_unitary needs at least one substep"));
    }
    if !(hbar > 0.0) {
        return Err(TfdError::param("hbar must be positive"));
    }
    let probe = h_of_t(t_i);
    let basis = probe.basis;
    let dim = basis.dimension();
    let dt = (t_f - t_i) / substeps as f64;
    let mi = C64::new(0.0, -1.0 / hbar);
    let mut u = DMatrix::<C64>::identity(dim, dim);
    let checked = |t: f64| -> Result<DMatrix<C64>> {
        let h = h_of_t(t);
        if h.basis != basis {
            return Err(mismatch(&basis, &h.basis));
        }
        Ok(h.matrix)
    };
    for k in 0..substeps {
        let t0 = t_i + dt * k as f64;
        let omega = match scheme {
            Scheme::Midpoint => checked(t0 + 0.5 * dt)? * (mi * dt),
            Scheme::Magnus4 => {
                let a1 = checked(t0 + MAGNUS_NODES[0] * dt)? * mi;
                let a2 = checked(t0 + MAGNUS_NODES[1] * dt)? * mi;
                let comm = &a2 * &a1 - &a1 * &a2;
                (&a1 + &a2) * C64::from(0.5 * dt) + comm * C64::from(MAGNUS_WEIGHT * dt * dt)
            }
        };
        u = linalg::expm(&omega)? * u;
    }
    OperatorMatrix::new(u, basis, "U")
}

/// Mode coefficients of either statistics.
#[derive(Debug, Clone, Copy)]
pub enum ModeCoefficients<'a> {
    Boson(&'a BosonModeVector),
    Fermion(&'a FermionModeState),
}

/// `a(t)` (or `ã(t)` when `tilde`) as a matrix. Doubled boson matrices are
/// dense `N² × N²` and only built for small truncations.
pub fn invariant_operator_matrix(
    coeffs: ModeCoefficients<'_>,
    basis: BasisDescriptor,
    tilde: bool,
) -> Result<OperatorMatrix> {
    match (coeffs, basis) {
        (ModeCoefficients::Boson(m), BasisDescriptor::BosonSingle { levels }) => {
            if tilde {
                return Err(TfdError::param("tilde operators need a doubled basis"));
            }
            boson::invariant_single(m, levels)
        }
        (ModeCoefficients::Boson(m), BasisDescriptor::BosonDoubled { levels }) => {
            boson::invariant_doubled_dense(m, levels, tilde)
        }
        (ModeCoefficients::Fermion(s), BasisDescriptor::FermionSingle | BasisDescriptor::FermionDoubled) => {
            let space = build_fermion_space(basis == BasisDescriptor::FermionDoubled);
            fermion::invariant(&space, s, crate::mode_solver::FermionChannel::A, tilde)
        }
        (ModeCoefficients::Boson(_), other) => Err(mismatch(&BasisDescriptor::BosonSingle { levels: 0 }, &other)),
        (ModeCoefficients::Fermion(_), other) => Err(mismatch(&BasisDescriptor::FermionDoubled, &other)),
    }
}

/// Residual norms of the thermal-state conditions: boson
/// `‖(a(t) − tanhθ ã†(t))ψ‖`, `‖(ã(t) − tanhθ a†(t))ψ‖`; fermion
/// `‖(a(t) − tanθ ã†(t))ψ‖`, `‖(ã(t) + tanθ a†(t))ψ‖` and the same for `b`.
/// Boson norms are restricted to the retained block.
pub fn thermal_state_condition_residual(
    psi: &StateVector,
    coeffs: ModeCoefficients<'_>,
    theta: f64,
) -> Result<Vec<f64>> {
    match coeffs {
        ModeCoefficients::Boson(m) => boson::thermal_residual(psi, m, theta).map(|r| r.to_vec()),
        ModeCoefficients::Fermion(s) => fermion::thermal_residual(psi, s, theta).map(|r| r.to_vec()),
    }
}

/// Settings of oracle time evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub truncation: usize,
    pub substeps_per_unit: usize,
    pub scheme: Scheme,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            truncation: DEFAULT_TRUNCATION,
            substeps_per_unit: 2000,
            scheme: Scheme::Midpoint,
        }
    }
}

/// Substep boundaries covering `[a, b]` at the requested density.
pub(crate) fn substeps(a: f64, b: f64, per_unit: usize) -> usize {
    (((b - a) * per_unit as f64).ceil() as usize).max(1)
}

/// Sample times of an evolution: every requested time, with segments split
/// at jumps.
pub(crate) fn breakpoints(times: &[f64], jumps: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = times.to_vec();
    let (lo, hi) = (times[0], times[times.len() - 1]);
    all.extend(jumps.iter().copied().filter(|&j| j > lo && j < hi));
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}
