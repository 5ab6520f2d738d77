//! Exact fermion Fock spaces built from graded tensor products.

use nalgebra::{DMatrix, DVector};

use super::linalg;
use super::{
    breakpoints, substeps, BasisDescriptor, DensityMatrix, OperatorMatrix, OracleConfig, Scheme, StateVector,
    MAGNUS_NODES, MAGNUS_WEIGHT,
};
use crate::error::{Result, TfdError};
use crate::mode_solver::{FermionChannel, FermionModeState};
use crate::protocols::{FermionProtocol, FermionSample, Protocol, Side};
use crate::thermal::{theta_from_exponent, Statistics};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Mode operators in Jordan–Wigner order `a, b, ã, b̃`; the tilde modes are
/// present only in the doubled space.
#[derive(Debug, Clone)]
pub struct FermionSpace {
    pub basis: BasisDescriptor,
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    pub a_tilde: Option<OperatorMatrix>,
    pub b_tilde: Option<OperatorMatrix>,
}

fn mode_operator(index: usize, modes: usize) -> DMatrix<C64> {
    let lower = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    let string = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, -ONE]));
    let id = DMatrix::<C64>::identity(2, 2);
    let mut m = DMatrix::<C64>::identity(1, 1);
    for k in 0..modes {
        let factor = match k.cmp(&index) {
            std::cmp::Ordering::Less => &string,
            std::cmp::Ordering::Equal => &lower,
            std::cmp::Ordering::Greater => &id,
        };
        m = linalg::kron(&m, factor);
    }
    m
}

pub fn build_fermion_space(doubled: bool) -> FermionSpace {
    let (modes, basis) = if doubled {
        (4, BasisDescriptor::FermionDoubled)
    } else {
        (2, BasisDescriptor::FermionSingle)
    };
    let op = |k: usize, label: &str| OperatorMatrix::new(mode_operator(k, modes), basis, label).expect("dimension");
    FermionSpace {
        basis,
        a: op(0, "a"),
        b: op(1, "b"),
        a_tilde: doubled.then(|| op(2, "a_tilde")),
        b_tilde: doubled.then(|| op(3, "b_tilde")),
    }
}

impl FermionSpace {
    pub fn is_doubled(&self) -> bool {
        self.a_tilde.is_some()
    }

    fn tilde_pair(&self) -> Result<(&DMatrix<C64>, &DMatrix<C64>)> {
        match (&self.a_tilde, &self.b_tilde) {
            (Some(at), Some(bt)) => Ok((&at.matrix, &bt.matrix)),
            _ => Err(TfdError::BasisMismatch {
                expected: "FermionDoubled".into(),
                found: "FermionSingle".into(),
            }),
        }
    }

    /// All mode operators in order.
    pub fn modes(&self) -> Vec<&OperatorMatrix> {
        let mut v = vec![&self.a, &self.b];
        v.extend(self.a_tilde.iter());
        v.extend(self.b_tilde.iter());
        v
    }

    /// `N_a + N_b` (plus the tilde modes when doubled).
    pub fn total_number(&self) -> DMatrix<C64> {
        self.modes().iter().map(|m| m.matrix.adjoint() * &m.matrix).sum()
    }

    /// `(−1)^N` over all modes.
    pub fn parity(&self) -> OperatorMatrix {
        let d = self.basis.dimension();
        let n = self.total_number();
        let diag = DVector::from_iterator(d, (0..d).map(|k| if n[(k, k)].re.round() as i64 % 2 == 0 { ONE } else { -ONE }));
        OperatorMatrix::new(DMatrix::from_diagonal(&diag), self.basis, "parity").expect("dimension")
    }
}

/// `H/ℏ` for the given coefficients on mode operators `a, b`.
fn quadratic_form(s: &FermionSample, a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ad, bd) = (a.adjoint(), b.adjoint());
    (&ad * a - &bd * b) * C64::from(s.omega0) + &ad * &bd * s.omega_plus - a * b * s.omega_plus.conj()
        + a * &bd * s.omega_minus
        - &ad * b * s.omega_minus.conj()
}

/// Tilde conjugate of [`quadratic_form`]: conjugated coefficients on the
/// tilde modes, with the normal ordering of the tilde conjugation rule.
fn tilde_form(s: &FermionSample, at: &DMatrix<C64>, bt: &DMatrix<C64>) -> DMatrix<C64> {
    let (atd, btd) = (at.adjoint(), bt.adjoint());
    (&atd * at - &btd * bt) * C64::from(s.omega0) + &atd * &btd * s.omega_plus.conj() - at * bt * s.omega_plus
        + at * &btd * s.omega_minus.conj()
        - &atd * bt * s.omega_minus
}

#[derive(Debug, Clone)]
pub struct FermionHamiltonian {
    pub h: OperatorMatrix,
    pub h_tilde: Option<OperatorMatrix>,
    pub h_hat: Option<OperatorMatrix>,
}

/// `H = ℏ[ω₀(a†a − b†b) + ω₊a†b† − ω₊*ab + ω₋ab† − ω₋*a†b]`, with
/// `H̃` and `Ĥ = H − H̃` when `doubled`.
pub fn build_fermion_hamiltonian(
    omega0: f64,
    omega_plus: C64,
    omega_minus: C64,
    hbar: f64,
    doubled: bool,
) -> Result<FermionHamiltonian> {
    if !(hbar > 0.0) {
        return Err(TfdError::param("hbar must be positive"));
    }
    let space = build_fermion_space(doubled);
    let s = FermionSample {
        omega0,
        omega_plus,
        omega_minus,
    };
    hamiltonian_in(&space, &s, hbar)
}

pub(crate) fn hamiltonian_in(space: &FermionSpace, s: &FermionSample, hbar: f64) -> Result<FermionHamiltonian> {
    let scale = C64::from(hbar);
    let h = quadratic_form(s, &space.a.matrix, &space.b.matrix) * scale;
    let h_op = OperatorMatrix::new(h.clone(), space.basis, "H")?;
    if !space.is_doubled() {
        return Ok(FermionHamiltonian {
            h: h_op,
            h_tilde: None,
            h_hat: None,
        });
    }
    let (at, bt) = space.tilde_pair()?;
    let ht = tilde_form(s, at, bt) * scale;
    Ok(FermionHamiltonian {
        h: h_op,
        h_tilde: Some(OperatorMatrix::new(ht.clone(), space.basis, "H_tilde")?),
        h_hat: Some(OperatorMatrix::new(h - ht, space.basis, "H_hat")?),
    })
}

/// `e^{−βℏω(N_a + N_b)}/Z` on the 4-dim space.
pub fn thermal_density_fermion(beta: f64, omega: f64, hbar: f64) -> Result<DensityMatrix> {
    let x = super::boson::thermal_exponent(beta, omega, hbar)?;
    let space = build_fermion_space(false);
    let n = space.total_number();
    let w: Vec<f64> = (0..4).map(|k| (-x * n[(k, k)].re).exp()).collect();
    let z: f64 = w.iter().sum();
    let diag = DVector::from_iterator(4, w.iter().map(|v| C64::from(v / z)));
    DensityMatrix::new(DMatrix::from_diagonal(&diag), space.basis)
}

fn vacuum() -> DVector<C64> {
    let mut v = DVector::zeros(16);
    v[0] = ONE;
    v
}

/// Construction A (normalised pair series) and construction B (rotation
/// `exp[θ(a†ã† − ãa + b†b̃† − b̃b)]` of the vacuum) of the doubled fermion
/// thermal vacuum.
pub(crate) fn thermal_pair(x: f64) -> Result<(StateVector, StateVector)> {
    let space = build_fermion_space(true);
    let (at, bt) = space.tilde_pair()?;
    let (a, b) = (&space.a.matrix, &space.b.matrix);
    let r = if x > crate::thermal::MAX_EXPONENT { 0.0 } else { (-0.5 * x).exp() };
    let id = DMatrix::<C64>::identity(16, 16);
    let pa = a.adjoint() * at.adjoint();
    let pb = b.adjoint() * bt.adjoint();
    let series = (&id + &pa * C64::from(r)) * (&id + &pb * C64::from(r)) * vacuum();
    let state_a = StateVector::normalized(series, space.basis)?;

    let theta = theta_from_exponent(x, Statistics::Fermion);
    let gen = (&pa - at * a + &pb - bt * b) * C64::from(theta);
    let state_b = StateVector::new(linalg::expm(&gen)? * vacuum(), space.basis)?;
    Ok((state_a, state_b))
}

/// `x(t)` (or its tilde conjugate) for one channel.
pub(crate) fn invariant(
    space: &FermionSpace,
    state: &FermionModeState,
    channel: FermionChannel,
    tilde: bool,
) -> Result<OperatorMatrix> {
    let c = state.coefficients(channel);
    let name = match channel {
        FermionChannel::A => "a",
        FermionChannel::B => "b",
    };
    if tilde {
        let (at, bt) = space.tilde_pair()?;
        let m = at * c[0].conj() + at.adjoint() * c[1].conj() + bt * c[2].conj() + bt.adjoint() * c[3].conj();
        OperatorMatrix::new(m, space.basis, format!("{name}_tilde(t)"))
    } else {
        let (a, b) = (&space.a.matrix, &space.b.matrix);
        let m = a * c[0] + a.adjoint() * c[1] + b * c[2] + b.adjoint() * c[3];
        OperatorMatrix::new(m, space.basis, format!("{name}(t)"))
    }
}

/// `‖(a(t) − tanθ ã†(t))ψ‖`, `‖(ã(t) + tanθ a†(t))ψ‖` and the same for `b`.
pub(crate) fn thermal_residual(psi: &StateVector, state: &FermionModeState, theta: f64) -> Result<[f64; 4]> {
    if psi.basis != BasisDescriptor::FermionDoubled {
        return Err(TfdError::BasisMismatch {
            expected: "FermionDoubled".into(),
            found: format!("{:?}", psi.basis),
        });
    }
    let space = build_fermion_space(true);
    let t = C64::from(theta.tan());
    let mut out = [0.0; 4];
    for (k, channel) in [FermionChannel::A, FermionChannel::B].into_iter().enumerate() {
        let x = invariant(&space, state, channel, false)?.matrix;
        let xt = invariant(&space, state, channel, true)?.matrix;
        out[2 * k] = ((&x - xt.adjoint() * t) * &psi.data).norm();
        out[2 * k + 1] = ((&xt + x.adjoint() * t) * &psi.data).norm();
    }
    Ok(out)
}

/// Doubled fermion states at the requested times.
#[derive(Debug, Clone)]
pub struct FermionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub norm_drift: f64,
}

/// Evolves a doubled fermion state under `Ĥ(t) = H(t) − H̃(t)`.
pub fn evolve_doubled_fermion(
    protocol: &FermionProtocol,
    initial: &StateVector,
    times: &[f64],
    config: &OracleConfig,
    hbar: f64,
) -> Result<FermionTrajectory> {
    if initial.basis != BasisDescriptor::FermionDoubled {
        return Err(TfdError::BasisMismatch {
            expected: "FermionDoubled".into(),
            found: format!("{:?}", initial.basis),
        });
    }
    if !(hbar > 0.0) {
        return Err(TfdError::param("hbar must be positive"));
    }
    let (t_i, t_f) = protocol.window();
    if times.is_empty() || times.iter().any(|&t| t < t_i || t > t_f) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(TfdError::param("sample times must be ascending and inside the protocol window"));
    }
    let space = build_fermion_space(true);
    let generator = |t: f64| -> Result<DMatrix<C64>> {
        let h = hamiltonian_in(&space, &protocol.sample(t, Side::Right), hbar)?;
        Ok(h.h_hat.expect("doubled").matrix * C64::new(0.0, -1.0 / hbar))
    };
    let mut psi = initial.data.clone();
    let mut out = FermionTrajectory {
        times: Vec::new(),
        states: Vec::new(),
        norm_drift: 0.0,
    };
    let record = |t: f64, psi: &DVector<C64>, out: &mut FermionTrajectory| {
        out.norm_drift = out.norm_drift.max((psi.norm() - 1.0).abs());
        out.times.push(t);
        out.states.push(StateVector {
            data: psi.clone(),
            basis: space.basis,
        });
    };
    let points = breakpoints(&[&[t_i][..], times].concat(), protocol.jump_times());
    let mut next = 0;
    while next < times.len() && times[next] <= t_i {
        record(t_i, &psi, &mut out);
        next += 1;
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = substeps(a, b, config.substeps_per_unit);
        let dt = (b - a) / n as f64;
        for k in 0..n {
            let t0 = a + dt * k as f64;
            let omega = match config.scheme {
                Scheme::Midpoint => generator(t0 + 0.5 * dt)? * C64::from(dt),
                Scheme::Magnus4 => {
                    let g1 = generator(t0 + MAGNUS_NODES[0] * dt)?;
                    let g2 = generator(t0 + MAGNUS_NODES[1] * dt)?;
                    let comm = &g2 * &g1 - &g1 * &g2;
                    (g1 + g2) * C64::from(0.5 * dt) + comm * C64::from(MAGNUS_WEIGHT * dt * dt)
                }
            };
            psi = linalg::expm(&omega)? * psi;
        }
        while next < times.len() && times[next] == b {
            record(b, &psi, &mut out);
            next += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) fn free_hamiltonian_for_tests() -> (OperatorMatrix, FermionSpace) {
    let space = build_fermion_space(false);
    let h = hamiltonian_in(
        &space,
        &FermionSample {
            omega0: 1.0,
            omega_plus: C64::new(0.3, -0.2),
            omega_minus: C64::new(0.1, 0.4),
        },
        1.0,
    )
    .unwrap();
    (h.h, space)
}
