//! Truncated single and doubled boson Fock spaces.

use nalgebra::{DMatrix, DVector};

use super::linalg::{self, Banded, KronGenerator};
use super::{
    breakpoints, retained, substeps, BasisDescriptor, DensityMatrix, OperatorMatrix, OracleConfig, Scheme,
    StateVector, TruncationReport, EVOLUTION_TAIL_LIMIT, MAGNUS_NODES, MAGNUS_WEIGHT, THERMAL_TAIL_LIMIT,
};
use crate::error::{Result, TfdError};
use crate::mode_solver::BosonModeVector;
use crate::protocols::{BosonProtocol, BosonSample, OscillatorProtocol, Protocol, Side};
use crate::thermal::{theta_from_exponent, Statistics, MAX_EXPONENT};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

fn ladder_dense(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |r, c| if c == r + 1 { C64::from((c as f64).sqrt()) } else { ZERO })
}

/// `(a, a†)` with `a[n−1, n] = √n`.
pub fn build_boson_ladder(levels: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let basis = BasisDescriptor::boson_single(levels)?;
    let a = ladder_dense(levels);
    let ad = a.adjoint();
    Ok((OperatorMatrix::new(a, basis, "a")?, OperatorMatrix::new(ad, basis, "a^dag")?))
}

pub fn number_operator(levels: usize) -> Result<OperatorMatrix> {
    let basis = BasisDescriptor::boson_single(levels)?;
    let m = DMatrix::from_fn(levels, levels, |r, c| if r == c { C64::from(r as f64) } else { ZERO });
    OperatorMatrix::new(m, basis, "N")
}

/// `q = √(ℏ/2mω)(a + a†)` in the ladder basis of the oscillator `(m, ω)`.
pub fn position_operator(levels: usize, mass: f64, omega: f64, hbar: f64) -> Result<OperatorMatrix> {
    if !(mass > 0.0 && omega > 0.0 && hbar > 0.0) {
        return Err(TfdError::param("position operator needs positive mass, frequency and hbar"));
    }
    let (a, ad) = build_boson_ladder(levels)?;
    let scale = (hbar / (2.0 * mass * omega)).sqrt();
    OperatorMatrix::new((a.matrix + ad.matrix) * C64::from(scale), a.basis, "q")
}

/// `H/ℏ = ω₀ a†a + ½ω₊ a†² + ½ω₊* a²` by diagonals.
pub(crate) fn hamiltonian_banded(omega0: f64, omega_plus: C64, levels: usize) -> Banded {
    let n = levels;
    let mut diags = vec![(0, (0..n).map(|r| C64::from(omega0 * r as f64)).collect())];
    if omega_plus != ZERO && n > 2 {
        // a†²: (r, r−2) = √(r(r−1)); a²: (r, r+2) = √((r+1)(r+2)).
        let lower = (0..n)
            .map(|r| if r >= 2 { omega_plus * (0.5 * ((r * (r - 1)) as f64).sqrt()) } else { ZERO })
            .collect();
        let upper = (0..n)
            .map(|r| {
                if r + 2 < n {
                    omega_plus.conj() * (0.5 * (((r + 1) * (r + 2)) as f64).sqrt())
                } else {
                    ZERO
                }
            })
            .collect();
        diags.push((-2, lower));
        diags.push((2, upper));
    }
    Banded { n, diags }
}

/// `H = ℏ[ω₀ a†a + ½ω₊ a†² + ½ω₊* a²]`.
pub fn build_boson_hamiltonian(omega0: f64, omega_plus: C64, levels: usize, hbar: f64) -> Result<OperatorMatrix> {
    let basis = BasisDescriptor::boson_single(levels)?;
    let m = hamiltonian_banded(omega0, omega_plus, levels).to_dense() * C64::from(hbar);
    OperatorMatrix::new(m, basis, "H")
}

/// Tilde Hamiltonian: conjugated coefficients on the tilde factor.
pub fn build_boson_tilde_hamiltonian(omega0: f64, omega_plus: C64, levels: usize, hbar: f64) -> Result<OperatorMatrix> {
    let mut h = build_boson_hamiltonian(omega0, omega_plus.conj(), levels, hbar)?;
    h.label = "H_tilde".into();
    Ok(h)
}

/// `e^{−βℏω N}/Z` on the retained levels.
pub fn thermal_density_boson(beta: f64, omega: f64, hbar: f64, levels: usize) -> Result<DensityMatrix> {
    let basis = BasisDescriptor::boson_single(levels)?;
    let x = thermal_exponent(beta, omega, hbar)?;
    let w: Vec<f64> = (0..levels).map(|n| (-x * n as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    let diag = DVector::from_iterator(levels, w.iter().map(|v| C64::from(v / z)));
    DensityMatrix::new(DMatrix::from_diagonal(&diag), basis)
}

pub(crate) fn thermal_exponent(beta: f64, omega: f64, hbar: f64) -> Result<f64> {
    for (name, v) in [("beta", beta), ("omega", omega), ("hbar", hbar)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(TfdError::param(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((beta * hbar * omega).min(MAX_EXPONENT + 1.0))
}

/// Population of the top 10% of levels of either factor, and the defect of
/// `[a, a†] = I` on the retained block.
pub fn boson_truncation_report(psi: &StateVector) -> Result<TruncationReport> {
    let levels = psi
        .basis
        .levels()
        .ok_or_else(|| TfdError::param("truncation report needs a boson basis"))?;
    let keep = retained(levels);
    let tail_weight = match psi.basis {
        BasisDescriptor::BosonDoubled { .. } => {
            let m = psi.as_pair_matrix()?;
            let mut w = 0.0;
            for r in 0..levels {
                for c in 0..levels {
                    if r >= keep || c >= keep {
                        w += m[(r, c)].norm_sqr();
                    }
                }
            }
            w
        }
        _ => psi.data.iter().skip(keep).map(|z| z.norm_sqr()).sum(),
    };
    let a = ladder_dense(levels);
    let comm = &a * a.adjoint() - a.adjoint() * &a - DMatrix::identity(levels, levels);
    let commutator_defect = linalg::max_abs(&comm.view((0, 0), (keep, keep)).into_owned());
    Ok(TruncationReport {
        tail_weight,
        commutator_defect,
    })
}

/// Normalised `Σ e^{−xn/2}|n, ñ⟩` amplitudes; refuses when the weight
/// beyond the retained levels, `e^{−xN}`, exceeds the thermal tail limit.
pub(crate) fn thermal_series(x: f64, levels: usize) -> Result<DMatrix<C64>> {
    let beyond = (-x * levels as f64).exp();
    if beyond > THERMAL_TAIL_LIMIT {
        let need = (THERMAL_TAIL_LIMIT.ln() / -x).ceil();
        return Err(TfdError::Truncation {
            tail_weight: beyond,
            limit: THERMAL_TAIL_LIMIT,
            advice: format!("raise the truncation to at least {need} levels"),
        });
    }
    let amps: Vec<f64> = (0..levels).map(|n| (-0.5 * x * n as f64).exp()).collect();
    let norm = amps.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut psi = DMatrix::zeros(levels, levels);
    for (n, v) in amps.iter().enumerate() {
        psi[(n, n)] = C64::from(v / norm);
    }
    Ok(psi)
}

/// `exp[θ(a†ã† − ãa)]|0, 0̃⟩`, computed in a working space with guard levels
/// so that reflections off the truncation edge stay below round-off, then
/// projected onto `levels` and renormalised.
pub(crate) fn thermal_squeeze(theta: f64, levels: usize) -> Result<DMatrix<C64>> {
    let r = theta.tanh();
    let work = if r <= 0.0 {
        levels
    } else {
        // Amplitudes fall like r^n; keep guard levels until r^n < 1e-17.
        let guard = (-39.0 / r.ln()).ceil() as usize;
        (levels + guard).min(levels * 4)
    };
    let a = Banded::from_dense(&ladder_dense(work));
    let ad = Banded::from_dense(&ladder_dense(work).adjoint());
    let gen = KronGenerator {
        terms: vec![
            (Some(ad.scale(C64::from(theta))), Some(ad.clone())),
            (Some(a.scale(C64::from(-theta))), Some(a.clone())),
        ],
    };
    let mut psi = vec![ZERO; work * work];
    psi[0] = C64::from(1.0);
    gen.exp_action(&mut psi, work)?;
    let full = DMatrix::from_row_slice(work, work, &psi);
    let mut out = full.view((0, 0), (levels, levels)).into_owned();
    let norm = out.norm();
    out /= C64::from(norm);
    Ok(out)
}

/// Both constructions of the doubled boson thermal vacuum.
pub(crate) fn thermal_pair(x: f64, levels: usize) -> Result<(StateVector, StateVector)> {
    BasisDescriptor::boson_doubled(levels)?;
    let series = thermal_series(x, levels)?;
    let theta = theta_from_exponent(x, Statistics::Boson);
    let squeeze = thermal_squeeze(theta, levels)?;
    Ok((StateVector::from_pair_matrix(&series)?, StateVector::from_pair_matrix(&squeeze)?))
}

pub(crate) fn invariant_single(mode: &BosonModeVector, levels: usize) -> Result<OperatorMatrix> {
    let basis = BasisDescriptor::boson_single(levels)?;
    let a = ladder_dense(levels);
    let m = &a * mode.f_minus + a.adjoint() * mode.f_plus;
    OperatorMatrix::new(m, basis, "a(t)")
}

const DENSE_DOUBLED_LIMIT: usize = 24;

pub(crate) fn invariant_doubled_dense(mode: &BosonModeVector, levels: usize, tilde: bool) -> Result<OperatorMatrix> {
    let basis = BasisDescriptor::boson_doubled(levels)?;
    if levels > DENSE_DOUBLED_LIMIT {
        return Err(TfdError::param(format!(
            "dense doubled matrices are limited to {DENSE_DOUBLED_LIMIT} levels per factor"
        )));
    }
    let a = ladder_dense(levels);
    let id = DMatrix::identity(levels, levels);
    if tilde {
        let at = &a * mode.f_minus.conj() + a.adjoint() * mode.f_plus.conj();
        OperatorMatrix::new(linalg::kron(&id, &at), basis, "a_tilde(t)")
    } else {
        let am = &a * mode.f_minus + a.adjoint() * mode.f_plus;
        OperatorMatrix::new(linalg::kron(&am, &id), basis, "a(t)")
    }
}

/// Dense `A ⊗ I` or `I ⊗ A` for small doubled spaces.
pub fn doubled_operator(op: &OperatorMatrix, tilde: bool) -> Result<OperatorMatrix> {
    let levels = match op.basis {
        BasisDescriptor::BosonSingle { levels } => levels,
        other => {
            return Err(TfdError::BasisMismatch {
                expected: "BosonSingle".into(),
                found: format!("{other:?}"),
            })
        }
    };
    let basis = BasisDescriptor::boson_doubled(levels)?;
    if levels > DENSE_DOUBLED_LIMIT {
        return Err(TfdError::param(format!(
            "dense doubled matrices are limited to {DENSE_DOUBLED_LIMIT} levels per factor"
        )));
    }
    let id = DMatrix::identity(levels, levels);
    let m = if tilde {
        linalg::kron(&id, &op.matrix)
    } else {
        linalg::kron(&op.matrix, &id)
    };
    OperatorMatrix::new(m, basis, if tilde { format!("{}_tilde", op.label) } else { op.label.clone() })
}

fn norm_on_block(m: &DMatrix<C64>, keep: usize) -> f64 {
    m.view((0, 0), (keep, keep)).norm()
}

pub(crate) fn thermal_residual(psi: &StateVector, mode: &BosonModeVector, theta: f64) -> Result<[f64; 2]> {
    let levels = match psi.basis {
        BasisDescriptor::BosonDoubled { levels } => levels,
        other => {
            return Err(TfdError::BasisMismatch {
                expected: "BosonDoubled".into(),
                found: format!("{other:?}"),
            })
        }
    };
    let p = psi.as_pair_matrix()?;
    let a = ladder_dense(levels);
    let ad = a.adjoint();
    let (fm, fp) = (mode.f_minus, mode.f_plus);
    let t = C64::from(theta.tanh());
    // a(t) ⊗ I and I ⊗ ã†(t), with ã†(t) = f⁻ã† + f⁺ã.
    let a_t = &a * fm + &ad * fp;
    let a_tilde_dag = &ad * fm + &a * fp;
    let r1 = &a_t * &p - (&p * a_tilde_dag.transpose()) * t;
    // I ⊗ ã(t) and a†(t) ⊗ I, with ã(t) = f⁻*ã + f⁺*ã†.
    let a_tilde = &a * fm.conj() + &ad * fp.conj();
    let a_dag_t = &ad * fm.conj() + &a * fp.conj();
    let r2 = &p * a_tilde.transpose() - (&a_dag_t * &p) * t;
    let keep = retained(levels);
    Ok([norm_on_block(&r1, keep), norm_on_block(&r2, keep)])
}

/// Source of boson Hamiltonian coefficients in a fixed ladder basis.
pub trait BosonDrive: Sync {
    fn window(&self) -> (f64, f64);
    fn jump_times(&self) -> &[f64];
    fn coefficients(&self, t: f64, side: Side) -> BosonSample;
}

impl BosonDrive for BosonProtocol {
    fn window(&self) -> (f64, f64) {
        Protocol::window(self)
    }

    fn jump_times(&self) -> &[f64] {
        Protocol::jump_times(self)
    }

    fn coefficients(&self, t: f64, side: Side) -> BosonSample {
        self.sample(t, side)
    }
}

/// An oscillator written in the ladder basis of `(mass_ref, omega_ref)`.
pub struct OscillatorDrive<'a> {
    pub protocol: &'a OscillatorProtocol,
    pub mass_ref: f64,
    pub omega_ref: f64,
}

impl BosonDrive for OscillatorDrive<'_> {
    fn window(&self) -> (f64, f64) {
        self.protocol.window()
    }

    fn jump_times(&self) -> &[f64] {
        self.protocol.jump_times()
    }

    fn coefficients(&self, t: f64, side: Side) -> BosonSample {
        self.protocol.boson_sample(t, side, self.mass_ref, self.omega_ref)
    }
}

/// Oracle states at the requested times.
#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub max_tail_weight: f64,
    pub norm_drift: f64,
}

/// Generator `−iĤ/ℏ` pieces over one substep: left (system) and right
/// (tilde, transposed action) factors.
fn step_generator(drive: &dyn BosonDrive, levels: usize, t0: f64, dt: f64, scheme: Scheme, doubled: bool) -> KronGenerator {
    let mi = C64::new(0.0, -1.0);
    let pieces = |t: f64| {
        let s = drive.coefficients(t, Side::Right);
        let h = hamiltonian_banded(s.omega0, s.omega_plus, levels);
        // Ĥ = H ⊗ I − I ⊗ H̃ acts as HΨ − ΨH̃ᵀ.
        let h_tilde = hamiltonian_banded(s.omega0, s.omega_plus.conj(), levels);
        (h.scale(mi), h_tilde.scale(-mi))
    };
    let (left, right) = match scheme {
        Scheme::Midpoint => {
            let (l, r) = pieces(t0 + 0.5 * dt);
            (l.scale(C64::from(dt)), r.scale(C64::from(dt)))
        }
        Scheme::Magnus4 => {
            let (l1, r1) = pieces(t0 + MAGNUS_NODES[0] * dt);
            let (l2, r2) = pieces(t0 + MAGNUS_NODES[1] * dt);
            let w = C64::from(MAGNUS_WEIGHT * dt * dt);
            let half = C64::from(0.5 * dt);
            let l = l1.add_scaled(C64::from(1.0), &l2).scale(half).add_scaled(w, &l2.commutator(&l1));
            let r = r1.add_scaled(C64::from(1.0), &r2).scale(half).add_scaled(w, &r2.commutator(&r1));
            (l, r)
        }
    };
    KronGenerator::sum(left, doubled.then_some(right))
}

fn propagate(
    drive: &dyn BosonDrive,
    initial: &StateVector,
    times: &[f64],
    config: &OracleConfig,
    doubled: bool,
) -> Result<OracleTrajectory> {
    let levels = initial.basis.levels().expect("boson basis");
    if times.is_empty() {
        return Err(TfdError::param("no sample times requested"));
    }
    let (t_i, t_f) = drive.window();
    if times.iter().any(|&t| t < t_i || t > t_f) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(TfdError::param("sample times must be ascending and inside the protocol window"));
    }
    let cols = if doubled { levels } else { 1 };
    let mut psi: Vec<C64> = initial.data.iter().copied().collect();
    let mut out = OracleTrajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        max_tail_weight: 0.0,
        norm_drift: 0.0,
    };
    let record = |t: f64, psi: &[C64], out: &mut OracleTrajectory| -> Result<()> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        out.norm_drift = out.norm_drift.max((norm - 1.0).abs());
        let state = StateVector {
            data: DVector::from_column_slice(psi),
            basis: initial.basis,
        };
        let tail = boson_truncation_report(&state)?.tail_weight;
        out.max_tail_weight = out.max_tail_weight.max(tail);
        if tail > EVOLUTION_TAIL_LIMIT {
            return Err(TfdError::Truncation {
                tail_weight: tail,
                limit: EVOLUTION_TAIL_LIMIT,
                advice: format!("population reached the top levels at t = {t}; raise the truncation"),
            });
        }
        out.times.push(t);
        out.states.push(state);
        Ok(())
    };

    let points = breakpoints(&[&[t_i][..], times].concat(), drive.jump_times());
    let mut next_sample = 0;
    while next_sample < times.len() && times[next_sample] <= t_i {
        record(t_i, &psi, &mut out)?;
        next_sample += 1;
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = substeps(a, b, config.substeps_per_unit);
        let dt = (b - a) / n as f64;
        for k in 0..n {
            let gen = step_generator(drive, levels, a + dt * k as f64, dt, config.scheme, doubled);
            gen.exp_action(&mut psi, cols)?;
        }
        while next_sample < times.len() && times[next_sample] == b {
            record(b, &psi, &mut out)?;
            next_sample += 1;
        }
    }
    Ok(out)
}

/// Evolves a doubled boson state under `Ĥ(t) = H(t) − H̃(t)`.
pub fn evolve_doubled_boson(
    drive: &dyn BosonDrive,
    initial: &StateVector,
    times: &[f64],
    config: &OracleConfig,
) -> Result<OracleTrajectory> {
    match initial.basis {
        BasisDescriptor::BosonDoubled { .. } => propagate(drive, initial, times, config, true),
        other => Err(TfdError::BasisMismatch {
            expected: "BosonDoubled".into(),
            found: format!("{other:?}"),
        }),
    }
}

/// Evolves a single-system boson state under `H(t)`.
pub fn evolve_single_boson(
    drive: &dyn BosonDrive,
    initial: &StateVector,
    times: &[f64],
    config: &OracleConfig,
) -> Result<OracleTrajectory> {
    match initial.basis {
        BasisDescriptor::BosonSingle { .. } => propagate(drive, initial, times, config, false),
        other => Err(TfdError::BasisMismatch {
            expected: "BosonSingle".into(),
            found: format!("{other:?}"),
        }),
    }
}

/// `⟨ψ|A ⊗ I|ψ⟩` for a single-system operator on a doubled boson state.
pub fn system_expectation(psi: &StateVector, op: &OperatorMatrix) -> Result<C64> {
    let p = psi.as_pair_matrix()?;
    if op.basis.levels() != psi.basis.levels() || !matches!(op.basis, BasisDescriptor::BosonSingle { .. }) {
        return Err(TfdError::BasisMismatch {
            expected: format!("BosonSingle with {:?} levels", psi.basis.levels()),
            found: format!("{:?}", op.basis),
        });
    }
    Ok(p.iter().zip((&op.matrix * &p).iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Reduced system density `ΨΨ†` of a doubled boson state.
pub fn reduced_density(psi: &StateVector) -> Result<DensityMatrix> {
    let p = psi.as_pair_matrix()?;
    let levels = p.nrows();
    let rho = &p * p.adjoint();
    let rho = (&rho + rho.adjoint()) * C64::from(0.5);
    let tr = rho.trace();
    DensityMatrix::new(rho / tr, BasisDescriptor::boson_single(levels)?)
}
