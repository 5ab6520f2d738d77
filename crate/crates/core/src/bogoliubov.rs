//! In/out Bogoliubov coefficients against static reference frames.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Result, TfdError};
use crate::mode_solver::{BosonModeVector, FermionChannel, FermionModeState, OscillatorMode};
use crate::protocols::FermionSample;
use crate::thermal::Statistics;
use crate::{C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BogoliubovCoefficients {
    pub mu: C64,
    pub nu: C64,
    pub statistics: Statistics,
}

impl BogoliubovCoefficients {
    /// `|μ|² − |ν|² − 1` (boson) or `|μ|² + |ν|² − 1` (fermion).
    pub fn constraint_defect(&self) -> f64 {
        match self.statistics {
            Statistics::Boson => self.mu.norm_sqr() - self.nu.norm_sqr() - 1.0,
            Statistics::Fermion => self.mu.norm_sqr() + self.nu.norm_sqr() - 1.0,
        }
    }

    /// Quanta found in the evolved vacuum, `ν*ν`.
    pub fn production_number(&self) -> f64 {
        self.nu.norm_sqr()
    }
}

/// Static oscillator mode `u(t) = e^{−iω(t−t₀)}/√(2mω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMode {
    pub m_ref: f64,
    pub omega_ref: f64,
    pub phase_time: f64,
}

impl ReferenceMode {
    pub fn new(m_ref: f64, omega_ref: f64, phase_time: f64) -> Result<Self> {
        if !(m_ref > 0.0 && omega_ref > 0.0) || !m_ref.is_finite() || !omega_ref.is_finite() {
            return Err(TfdError::param(format!(
                "reference mode needs positive mass and frequency, got m = {m_ref}, omega = {omega_ref}"
            )));
        }
        Ok(ReferenceMode {
            m_ref,
            omega_ref,
            phase_time,
        })
    }

    pub fn u(&self, t: f64) -> C64 {
        (-I * self.omega_ref * (t - self.phase_time)).exp() / (2.0 * self.m_ref * self.omega_ref).sqrt()
    }

    pub fn u_dot(&self, t: f64) -> C64 {
        -I * self.omega_ref * self.u(t)
    }

    pub fn as_mode(&self, t: f64) -> OscillatorMode {
        OscillatorMode {
            t,
            v: self.u(t),
            v_dot: self.u_dot(t),
            m: self.m_ref,
        }
    }
}

/// `a(t) = μ a_ref + ν a_ref†` for an oscillator mode, with
/// `μ = i m (v* u̇ − v̇* u)` and `ν = i m (v* u̇* − v̇* u*)`.
pub fn boson_overlap(mode: &OscillatorMode, reference: &ReferenceMode) -> Result<BogoliubovCoefficients> {
    ReferenceMode::new(reference.m_ref, reference.omega_ref, reference.phase_time)?;
    if (mode.m - reference.m_ref).abs() > 1e-12 * reference.m_ref {
        return Err(TfdError::Precondition(format!(
            "mode mass {} differs from reference mass {}",
            mode.m, reference.m_ref
        )));
    }
    let u = reference.u(mode.t);
    let u_dot = reference.u_dot(mode.t);
    let (v, v_dot) = (mode.v.conj(), mode.v_dot.conj());
    Ok(BogoliubovCoefficients {
        mu: I * mode.m * (v * u_dot - v_dot * u),
        nu: I * mode.m * (v * u_dot.conj() - v_dot * u.conj()),
        statistics: Statistics::Boson,
    })
}

/// Matching `v`, `v̇` across an instantaneous frequency jump at fixed mass.
pub fn sudden_coeffs(omega_i: f64, omega_f: f64) -> Result<BogoliubovCoefficients> {
    if !(omega_i > 0.0 && omega_f > 0.0) {
        return Err(TfdError::param(format!(
            "sudden quench needs positive frequencies, got {omega_i} -> {omega_f}"
        )));
    }
    let d = 2.0 * (omega_i * omega_f).sqrt();
    Ok(BogoliubovCoefficients {
        mu: C64::from((omega_f + omega_i) / d),
        nu: C64::from((omega_f - omega_i) / d),
        statistics: Statistics::Boson,
    })
}

/// A static frame `a_f = c a + s a†` in terms of the bare operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticFrame {
    pub c: C64,
    pub s: C64,
}

impl StaticFrame {
    pub fn identity() -> Self {
        StaticFrame {
            c: C64::from(1.0),
            s: C64::from(0.0),
        }
    }

    /// Ladder operators of the oscillator `(m_f, ω_f)` expressed through
    /// those of `(m_i, ω_i)`.
    pub fn oscillator(m_i: f64, omega_i: f64, m_f: f64, omega_f: f64) -> Result<Self> {
        for v in [m_i, omega_i, m_f, omega_f] {
            if !(v > 0.0) {
                return Err(TfdError::param("oscillator frames need positive mass and frequency"));
            }
        }
        let r = (m_f * omega_f / (m_i * omega_i)).sqrt();
        Ok(StaticFrame {
            c: C64::from(0.5 * (r + 1.0 / r)),
            s: C64::from(0.5 * (r - 1.0 / r)),
        })
    }

    /// Frame diagonalising `ω₀ a†a + ½ω₊ a†² + ½ω₊* a²`; needs `ω₀ > |ω₊|`.
    pub fn diagonalising(omega0: f64, omega_plus: C64) -> Result<Self> {
        if !(omega0 > omega_plus.norm()) {
            return Err(TfdError::param(format!(
                "no stable normal mode for omega0 = {omega0}, |omega_plus| = {}",
                omega_plus.norm()
            )));
        }
        let big = (omega0 * omega0 - omega_plus.norm_sqr()).sqrt();
        let ratio = omega_plus / (big + omega0);
        let c = 1.0 / (1.0 - ratio.norm_sqr()).sqrt();
        Ok(StaticFrame {
            c: C64::from(c),
            s: ratio * c,
        })
    }

    /// Normal-mode frequency of the diagonalised Hamiltonian.
    pub fn normal_frequency(omega0: f64, omega_plus: C64) -> f64 {
        (omega0 * omega0 - omega_plus.norm_sqr()).sqrt()
    }

    /// `a(t) = μ a_f + ν a_f†`.
    pub fn coefficients(&self, mode: &BosonModeVector) -> BogoliubovCoefficients {
        BogoliubovCoefficients {
            mu: mode.f_minus * self.c.conj() - mode.f_plus * self.s.conj(),
            nu: mode.f_plus * self.c - mode.f_minus * self.s,
            statistics: Statistics::Boson,
        }
    }
}

/// Row `x` holds the coefficients of the invariant `x(t)` on the bare
/// operators; rows and columns are ordered `(a, a†, b, b†)`. The free
/// rotation of the final diagonal Hamiltonian since `phase_time` is removed.
pub fn fermion_frame_coeffs(
    state: &FermionModeState,
    final_sample: &FermionSample,
    phase_time: f64,
) -> Result<Matrix4<C64>> {
    let scale = 1e-12 * (1.0 + final_sample.omega0.abs());
    if final_sample.omega_plus.norm() > scale || final_sample.omega_minus.norm() > scale {
        return Err(TfdError::Precondition(
            "final fermion Hamiltonian must be diagonal (omega_plus = omega_minus = 0)".into(),
        ));
    }
    let x_a = state.coefficients(FermionChannel::A);
    let x_b = state.coefficients(FermionChannel::B);
    let row = |x: [C64; 4]| [x[0], x[1], x[2], x[3]];
    let row_dag = |x: [C64; 4]| [x[1].conj(), x[0].conj(), x[3].conj(), x[2].conj()];
    let rows = [row(x_a), row_dag(x_a), row(x_b), row_dag(x_b)];

    let phase = final_sample.omega0 * (state.t - phase_time);
    let col_phase = [
        (-I * phase).exp(),
        (I * phase).exp(),
        (I * phase).exp(),
        (-I * phase).exp(),
    ];
    Ok(Matrix4::from_fn(|r, c| rows[r][c] * col_phase[c]))
}

/// Number of `a` quanta in the evolved vacuum: the squared creation-operator
/// entries of the `a` column of `B`.
pub fn fermion_production_number(b: &Matrix4<C64>) -> f64 {
    b[(1, 0)].norm_sqr() + b[(3, 0)].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_solver::{solve_fermion_modes, solve_oscillator_mode, IntegratorConfig};
    use crate::protocols::{ComplexProfile, FermionProtocol, OscillatorProtocol, Profile, Protocol};

    #[test]
    fn identical_mode_gives_identity() {
        let r = ReferenceMode::new(1.3, 0.7, 2.0).unwrap();
        for t in [2.0, 3.1, -4.0] {
            let c = boson_overlap(&r.as_mode(t), &r).unwrap();
            assert!((c.mu - C64::from(1.0)).norm() < 1e-15);
            assert!(c.nu.norm() < 1e-15);
        }
    }

    #[test]
    fn static_mode_against_itself_after_time_is_a_phase() {
        let p = OscillatorProtocol::constant(1.0, 1.0, 0.0, 3.0).unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let c = boson_overlap(traj.last(), &ReferenceMode::new(1.0, 1.0, 3.0).unwrap()).unwrap();
        assert!((c.mu.norm() - 1.0).abs() < 1e-9);
        assert!(c.nu.norm() < 1e-9);
        assert!((c.mu - (I * 3.0).exp()).norm() < 1e-8);
    }

    #[test]
    fn post_jump_mode_gives_sudden_coefficients() {
        let p = OscillatorProtocol::new(Profile::Constant(1.0), Profile::sudden(1.0, 4.0, 0.0), -1.0, 1.0).unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let at_jump = traj.samples.iter().find(|s| s.t == 0.0).unwrap();
        let c = boson_overlap(at_jump, &ReferenceMode::new(1.0, 4.0, 0.0).unwrap()).unwrap();
        assert!((c.nu.norm_sqr() - 0.5625).abs() < 1e-9);
        let s = sudden_coeffs(1.0, 4.0).unwrap();
        assert!((c.nu.norm() - s.nu.norm()).abs() < 1e-9);
        assert!((c.mu.norm() - s.mu.norm()).abs() < 1e-9);
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let mode = OscillatorMode::adiabatic(0.0, 2.0, 1.0);
        let r = ReferenceMode::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(boson_overlap(&mode, &r), Err(TfdError::Precondition(_))));
        assert!(ReferenceMode::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn sudden_examples() {
        let id = sudden_coeffs(2.0, 2.0).unwrap();
        assert_eq!((id.mu, id.nu), (C64::from(1.0), C64::from(0.0)));
        let q = sudden_coeffs(1.0, 4.0).unwrap();
        assert_eq!((q.mu.re, q.nu.re), (1.25, 0.75));
        assert_eq!(q.production_number(), 0.5625);
        assert_eq!(sudden_coeffs(4.0, 1.0).unwrap().production_number(), 0.5625);
        assert!(sudden_coeffs(0.0, 1.0).is_err());
    }

    #[test]
    fn oscillator_frame_matches_overlap() {
        let omega = Profile::tanh_pinned(1.0, 2.0, 4.0, 0.5, 0.0, 8.0).unwrap();
        let p = OscillatorProtocol::new(Profile::Constant(1.0), omega, 0.0, 8.0).unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let last = traj.last();
        let from_overlap = boson_overlap(last, &ReferenceMode::new(1.0, 2.0, 8.0).unwrap()).unwrap();
        let frame = StaticFrame::oscillator(1.0, 1.0, 1.0, 2.0).unwrap();
        let from_frame = frame.coefficients(&last.mode_vector(1.0, 1.0));
        assert!((from_overlap.nu.norm() - from_frame.nu.norm()).abs() < 1e-9);
        assert!(from_frame.constraint_defect().abs() < 1e-9);
    }

    #[test]
    fn diagonalising_frame_of_oscillator_hamiltonian() {
        // The oscillator (1, 2) in the (1, 1) frame has ω₀ = 2.5, ω₊ = 1.5.
        let f = StaticFrame::diagonalising(2.5, C64::from(1.5)).unwrap();
        let g = StaticFrame::oscillator(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((f.c - g.c).norm() < 1e-15 && (f.s - g.s).norm() < 1e-15);
        assert_eq!(StaticFrame::normal_frequency(2.5, C64::from(1.5)), 2.0);
        assert!(StaticFrame::diagonalising(1.0, C64::from(1.0)).is_err());
    }

    #[test]
    fn fermion_identity_and_phase_only() {
        let sample = FermionSample {
            omega0: 0.7,
            omega_plus: C64::from(0.0),
            omega_minus: C64::from(0.0),
        };
        let b = fermion_frame_coeffs(&FermionModeState::initial(0.0), &sample, 0.0).unwrap();
        assert!((b - Matrix4::identity()).norm() < 1e-15);
        assert_eq!(fermion_production_number(&b), 0.0);

        let p = FermionProtocol::new(Profile::Constant(0.7), ComplexProfile::zero(), ComplexProfile::zero(), 0.0, 3.0)
            .unwrap();
        let traj = solve_fermion_modes(&p, &IntegratorConfig::default()).unwrap();
        let sample = p.evaluate(3.0).unwrap();
        let free = fermion_frame_coeffs(traj.last(), &sample, 0.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((free[(r, c)].norm() - want).abs() < 1e-9);
            }
        }
        let nondiag = FermionSample {
            omega_plus: C64::from(0.1),
            ..sample
        };
        assert!(matches!(
            fermion_frame_coeffs(traj.last(), &nondiag, 0.0),
            Err(TfdError::Precondition(_))
        ));
    }
}
