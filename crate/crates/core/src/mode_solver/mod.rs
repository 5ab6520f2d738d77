//! Invariant-operator mode equations and their integration.
//!
//! * boson: `i dV/dt + M_V V = 0` with `V = (f⁻, f⁺)`;
//! * oscillator: `v̈ + (ṁ/m) v̇ + ω² v = 0`;
//! * fermion: `i dX/dt + K X = 0` per channel with `X = (f⁻, f⁺, g⁻, g⁺)`,
//!   reported through `W = (f⁻ + f⁺, f⁻ − f⁺)/√2`, `Z = (g⁻ + g⁺, g⁻ − g⁺)/√2`.
//!
//! Conserved quantities are monitored, never enforced.

mod dopri;

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use crate::error::{Result, TfdError};
use crate::protocols::{
    BosonProtocol, BosonSample, FermionProtocol, FermionSample, OscillatorProtocol, Protocol, Side,
    INITIAL_FRAME_TOL,
};
use crate::{C64, I};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub dense_grid_points: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            dense_grid_points: 1001,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(TfdError::param("integrator tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(TfdError::param("max_step must be positive"));
        }
        if self.dense_grid_points < 2 {
            return Err(TfdError::param("dense_grid_points must be at least 2"));
        }
        Ok(())
    }

    /// Uniform output grid over `[t_i, t_f]`, endpoints exact.
    pub fn grid(&self, t_i: f64, t_f: f64) -> Vec<f64> {
        let n = self.dense_grid_points;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    t_f
                } else {
                    t_i + (t_f - t_i) * (k as f64 / (n - 1) as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Maximum absolute deviation of each monitored quantity over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DriftReport {
    pub entries: Vec<(String, f64)>,
}

impl DriftReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn track(&mut self, name: &str, deviation: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = v.max(deviation),
            None => self.entries.push((name.to_string(), deviation)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<S>,
    pub drift: DriftReport,
    pub stats: IntegratorStats,
}

impl<S> Trajectory<S> {
    pub fn first(&self) -> &S {
        &self.samples[0]
    }

    pub fn last(&self) -> &S {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BosonModeVector {
    pub t: f64,
    pub f_minus: C64,
    pub f_plus: C64,
}

impl BosonModeVector {
    pub fn initial(t: f64) -> Self {
        BosonModeVector {
            t,
            f_minus: ONE,
            f_plus: ZERO,
        }
    }

    /// `|f⁻|² − |f⁺|²`, the equal-time commutator `[a(t), a†(t)]`.
    pub fn commutator(&self) -> f64 {
        self.f_minus.norm_sqr() - self.f_plus.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorMode {
    pub t: f64,
    pub v: C64,
    pub v_dot: C64,
    pub m: f64,
}

impl OscillatorMode {
    /// Ground mode of the static oscillator `(m, ω)` at time `t`.
    pub fn adiabatic(t: f64, m: f64, omega: f64) -> Self {
        let v = C64::new(1.0 / (2.0 * m * omega).sqrt(), 0.0);
        OscillatorMode {
            t,
            v,
            v_dot: -I * omega * v,
            m,
        }
    }

    /// `m (v̇* v − v̇ v*)`, equal to `i` for a canonically normalised mode.
    pub fn wronskian(&self) -> C64 {
        (self.v_dot.conj() * self.v - self.v_dot * self.v.conj()) * self.m
    }

    /// Coefficients of `a(t) = f⁻ a + f⁺ a†` in the ladder operators of the
    /// static oscillator `(mass_ref, omega_ref)`.
    pub fn mode_vector(&self, mass_ref: f64, omega_ref: f64) -> BosonModeVector {
        let s = (mass_ref * omega_ref / 2.0).sqrt();
        let p = -I * self.m * self.v_dot.conj() / (2.0 * mass_ref * omega_ref).sqrt();
        BosonModeVector {
            t: self.t,
            f_minus: s * self.v.conj() + p,
            f_plus: -s * self.v.conj() + p,
        }
    }
}

/// Mode coefficients of the two fermion invariants `a(t)` and `b(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct FermionModeState {
    pub t: f64,
    pub W_a: [C64; 2],
    pub Z_a: [C64; 2],
    pub W_b: [C64; 2],
    pub Z_b: [C64; 2],
}

fn to_wz(x: [C64; 4]) -> ([C64; 2], [C64; 2]) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    (
        [(x[0] + x[1]) * r, (x[0] - x[1]) * r],
        [(x[2] + x[3]) * r, (x[2] - x[3]) * r],
    )
}

fn from_wz(w: [C64; 2], z: [C64; 2]) -> [C64; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [(w[0] + w[1]) * r, (w[0] - w[1]) * r, (z[0] + z[1]) * r, (z[0] - z[1]) * r]
}

/// Selects one of the two fermion invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermionChannel {
    A,
    B,
}

impl FermionModeState {
    /// `a(t) = a`, `b(t) = b`.
    pub fn initial(t: f64) -> Self {
        Self::from_coefficients(t, [ONE, ZERO, ZERO, ZERO], [ZERO, ZERO, ONE, ZERO])
    }

    /// Build from `(f⁻, f⁺, g⁻, g⁺)` of each channel, where
    /// `x(t) = f⁻ a + f⁺ a† + g⁻ b + g⁺ b†`.
    pub fn from_coefficients(t: f64, a: [C64; 4], b: [C64; 4]) -> Self {
        let (w_a, z_a) = to_wz(a);
        let (w_b, z_b) = to_wz(b);
        FermionModeState {
            t,
            W_a: w_a,
            Z_a: z_a,
            W_b: w_b,
            Z_b: z_b,
        }
    }

    /// `(f⁻, f⁺, g⁻, g⁺)` of the chosen channel.
    pub fn coefficients(&self, channel: FermionChannel) -> [C64; 4] {
        match channel {
            FermionChannel::A => from_wz(self.W_a, self.Z_a),
            FermionChannel::B => from_wz(self.W_b, self.Z_b),
        }
    }

    pub fn norm(&self, channel: FermionChannel) -> f64 {
        let (w, z) = match channel {
            FermionChannel::A => (self.W_a, self.Z_a),
            FermionChannel::B => (self.W_b, self.Z_b),
        };
        w.iter().chain(&z).map(|c| c.norm_sqr()).sum()
    }

    /// `W_aᵀσ₃W_b + Z_aᵀσ₃Z_b`, the anticommutator `{a(t), b(t)}`.
    pub fn anticommutator_ab(&self) -> C64 {
        self.W_a[0] * self.W_b[0] - self.W_a[1] * self.W_b[1] + self.Z_a[0] * self.Z_b[0]
            - self.Z_a[1] * self.Z_b[1]
    }

    /// `W_a†W_b + Z_a†Z_b`, the anticommutator `{a(t), b†(t)}`.
    pub fn overlap_ab(&self) -> C64 {
        self.W_a
            .iter()
            .zip(&self.W_b)
            .chain(self.Z_a.iter().zip(&self.Z_b))
            .map(|(x, y)| x.conj() * y)
            .sum()
    }
}

/// `M_V = ω₀σ₃ − ½(ω₊* − ω₊)σ₁ − (i/2)(ω₊* + ω₊)σ₂`.
pub fn build_boson_generator(omega0: f64, omega_plus: C64) -> Matrix2<C64> {
    Matrix2::new(
        C64::from(omega0),
        -omega_plus.conj(),
        omega_plus,
        C64::from(-omega0),
    )
}

/// Hermitian generator `K` of `i dX/dt + K X = 0` for one fermion channel,
/// `X = (f⁻, f⁺, g⁻, g⁺)`.
pub fn build_fermion_generator(sample: &FermionSample) -> Matrix4<C64> {
    let w0 = C64::from(sample.omega0);
    let wp = sample.omega_plus;
    let wm = sample.omega_minus;
    Matrix4::new(
        w0, ZERO, -wm, wp.conj(),
        ZERO, -w0, -wp, wm.conj(),
        -wm.conj(), -wp.conj(), -w0, ZERO,
        wp, wm, ZERO, w0,
    )
}

/// Segments `[t_i, j₁], [j₁, j₂], …, [j_k, t_f]` and the grid points owned
/// by each: a grid point at a jump belongs to the segment after it.
fn segments(t_i: f64, t_f: f64, jumps: &[f64], grid: &[f64]) -> Vec<(f64, f64, Vec<f64>)> {
    let mut bounds = vec![t_i];
    bounds.extend(jumps.iter().copied().filter(|&j| j > t_i && j < t_f));
    bounds.push(t_f);
    let last = bounds.len() - 2;
    (0..bounds.len() - 1)
        .map(|k| {
            let (a, b) = (bounds[k], bounds[k + 1]);
            let pts = grid
                .iter()
                .copied()
                .filter(|&t| t >= a && (t < b || (k == last && t <= b)))
                .collect();
            (a, b, pts)
        })
        .collect()
}

/// Drives the integrator across all segments, applying `at_jump` to the
/// state at every interior boundary.
fn run<const D: usize, F>(
    rhs: F,
    t_i: f64,
    t_f: f64,
    jumps: &[f64],
    y0: [C64; D],
    cfg: &IntegratorConfig,
    mut at_jump: impl FnMut(f64, [C64; D]) -> [C64; D],
    mut record: impl FnMut(f64, &[C64; D]) -> Result<()>,
) -> Result<IntegratorStats>
where
    F: Fn(f64, &[C64; D], Side) -> [C64; D],
{
    cfg.check()?;
    let grid = cfg.grid(t_i, t_f);
    let mut stats = IntegratorStats::default();
    let mut y = y0;
    let segs = segments(t_i, t_f, jumps, &grid);
    let n = segs.len();
    for (k, (a, b, pts)) in segs.into_iter().enumerate() {
        y = dopri::integrate_segment(&rhs, a, b, y, &pts, cfg, &mut stats, &mut record)?;
        if k + 1 < n {
            y = at_jump(b, y);
        }
    }
    Ok(stats)
}

fn check_finite(name: &str, t: f64, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TfdError::NonFinite(format!("{name} at t = {t}")))
    }
}

/// Solves the boson vector equation from `V(t_i) = (1, 0)`.
pub fn solve_boson_mode(protocol: &BosonProtocol, config: &IntegratorConfig) -> Result<Trajectory<BosonModeVector>> {
    let (t_i, t_f) = protocol.window();
    let s0 = protocol.sample(t_i, Side::Right);
    check_finite("boson coefficients", t_i, &[s0.omega0, s0.omega_plus.re, s0.omega_plus.im])?;
    if s0.omega_plus.norm() > 1e-12 * (1.0 + s0.omega0.abs()) {
        return Err(TfdError::Precondition(format!(
            "omega_plus(t_i) = {} must vanish so that a(t_i) = a",
            s0.omega_plus
        )));
    }
    let rhs = |t: f64, y: &[C64; 2], side: Side| {
        let BosonSample { omega0, omega_plus } = protocol.sample(t, side);
        [
            I * (y[0] * omega0 - omega_plus.conj() * y[1]),
            I * (omega_plus * y[0] - y[1] * omega0),
        ]
    };
    solve_boson_with(rhs, t_i, t_f, protocol.jump_times(), config)
}

/// Boson vector equation driven by an arbitrary coefficient function.
pub(crate) fn solve_boson_with(
    rhs: impl Fn(f64, &[C64; 2], Side) -> [C64; 2],
    t_i: f64,
    t_f: f64,
    jumps: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory<BosonModeVector>> {
    let mut samples = Vec::with_capacity(config.dense_grid_points);
    let mut drift = DriftReport::default();
    drift.track("commutator", 0.0);
    let stats = run(
        rhs,
        t_i,
        t_f,
        jumps,
        [ONE, ZERO],
        config,
        |_, y| y,
        |t, y| {
            let s = BosonModeVector {
                t,
                f_minus: y[0],
                f_plus: y[1],
            };
            drift.track("commutator", (s.commutator() - 1.0).abs());
            samples.push(s);
            Ok(())
        },
    )?;
    Ok(Trajectory { samples, drift, stats })
}

/// Solves the oscillator mode equation from the adiabatic vacuum at `t_i`.
/// Across a declared jump `v` and `m v̇` are continuous.
pub fn solve_oscillator_mode(
    protocol: &OscillatorProtocol,
    config: &IntegratorConfig,
) -> Result<Trajectory<OscillatorMode>> {
    let (t_i, t_f) = protocol.window();
    let s0 = protocol.sample(t_i, Side::Right);
    check_finite("oscillator coefficients", t_i, &[s0.mass, s0.mass_dot, s0.omega])?;
    if !(s0.mass > 0.0 && s0.omega > 0.0) {
        return Err(TfdError::Precondition(format!(
            "need m(t_i) > 0 and omega(t_i) > 0, got m = {}, omega = {}",
            s0.mass, s0.omega
        )));
    }
    if (s0.mass_dot / (s0.mass * s0.omega)).abs() > INITIAL_FRAME_TOL {
        return Err(TfdError::Precondition(format!(
            "mass_dot(t_i) = {:e} must vanish for the adiabatic initial mode",
            s0.mass_dot
        )));
    }
    let init = OscillatorMode::adiabatic(t_i, s0.mass, s0.omega);

    let rhs = |t: f64, y: &[C64; 2], side: Side| {
        let s = protocol.sample(t, side);
        [y[1], -(y[1] * (s.mass_dot / s.mass)) - y[0] * (s.omega * s.omega)]
    };
    let at_jump = |t: f64, y: [C64; 2]| {
        let m_left = protocol.mass.value_side(t, Side::Left);
        let m_right = protocol.mass.value_side(t, Side::Right);
        [y[0], y[1] * (m_left / m_right)]
    };

    let mut samples = Vec::with_capacity(config.dense_grid_points);
    let mut drift = DriftReport::default();
    drift.track("wronskian", 0.0);
    let stats = run(rhs, t_i, t_f, protocol.jump_times(), [init.v, init.v_dot], config, at_jump, |t, y| {
        let m = protocol.mass.value(t);
        if !(m > 0.0) {
            return Err(TfdError::Integration {
                t,
                reason: format!("mass became non-positive ({m})"),
            });
        }
        let s = OscillatorMode { t, v: y[0], v_dot: y[1], m };
        drift.track("wronskian", (s.wronskian() - I).norm());
        samples.push(s);
        Ok(())
    })?;
    Ok(Trajectory { samples, drift, stats })
}

/// Solves both fermion channels from `a(t_i) = a`, `b(t_i) = b`.
pub fn solve_fermion_modes(
    protocol: &FermionProtocol,
    config: &IntegratorConfig,
) -> Result<Trajectory<FermionModeState>> {
    let (t_i, t_f) = protocol.window();
    let s0 = protocol.sample(t_i, Side::Right);
    check_finite(
        "fermion coefficients",
        t_i,
        &[s0.omega0, s0.omega_plus.re, s0.omega_plus.im, s0.omega_minus.re, s0.omega_minus.im],
    )?;
    let rhs = |t: f64, y: &[C64; 8], side: Side| {
        let k = build_fermion_generator(&protocol.sample(t, side));
        let mut out = [ZERO; 8];
        for c in 0..2 {
            for r in 0..4 {
                let mut acc = ZERO;
                for j in 0..4 {
                    acc += k[(r, j)] * y[4 * c + j];
                }
                out[4 * c + r] = I * acc;
            }
        }
        out
    };
    let init = FermionModeState::initial(t_i);
    let mut y0 = [ZERO; 8];
    y0[..4].copy_from_slice(&init.coefficients(FermionChannel::A));
    y0[4..].copy_from_slice(&init.coefficients(FermionChannel::B));
    let (ac0, ov0) = (init.anticommutator_ab(), init.overlap_ab());

    let mut samples = Vec::with_capacity(config.dense_grid_points);
    let mut drift = DriftReport::default();
    for name in ["norm_a", "norm_b", "anticommutator_ab", "overlap_ab"] {
        drift.track(name, 0.0);
    }
    let stats = run(rhs, t_i, t_f, protocol.jump_times(), y0, config, |_, y| y, |t, y| {
        let mut a = [ZERO; 4];
        let mut b = [ZERO; 4];
        a.copy_from_slice(&y[..4]);
        b.copy_from_slice(&y[4..]);
        let s = FermionModeState::from_coefficients(t, a, b);
        drift.track("norm_a", (s.norm(FermionChannel::A) - 1.0).abs());
        drift.track("norm_b", (s.norm(FermionChannel::B) - 1.0).abs());
        drift.track("anticommutator_ab", (s.anticommutator_ab() - ac0).norm());
        drift.track("overlap_ab", (s.overlap_ab() - ov0).norm());
        samples.push(s);
        Ok(())
    })?;
    Ok(Trajectory { samples, drift, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{ComplexProfile, Profile};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn generator_examples() {
        assert_eq!(build_boson_generator(1.0, ZERO), Matrix2::new(ONE, ZERO, ZERO, -ONE));
        let w = 0.7;
        assert_eq!(
            build_boson_generator(0.0, c(w, 0.0)),
            Matrix2::new(ZERO, c(-w, 0.0), c(w, 0.0), ZERO)
        );
        // Substituting ω₊ = iw: −½(−2iw)σ₁ = iwσ₁.
        assert_eq!(
            build_boson_generator(0.0, c(0.0, w)),
            Matrix2::new(ZERO, c(0.0, w), c(0.0, w), ZERO)
        );
    }

    #[test]
    fn generator_matches_pauli_form() {
        let s1 = Matrix2::new(ZERO, ONE, ONE, ZERO);
        let s2 = Matrix2::new(ZERO, -I, I, ZERO);
        let s3 = Matrix2::new(ONE, ZERO, ZERO, -ONE);
        for (w0, wp) in [(1.3, c(0.2, -0.9)), (-0.4, c(2.0, 0.5))] {
            let pauli = s3 * C64::from(w0) - s1 * ((wp.conj() - wp) * 0.5) - s2 * (I * 0.5 * (wp.conj() + wp));
            assert!((build_boson_generator(w0, wp) - pauli).norm() < 1e-15);
        }
    }

    #[test]
    fn fermion_generator_is_hermitian() {
        let k = build_fermion_generator(&FermionSample {
            omega0: 0.8,
            omega_plus: c(0.3, 0.4),
            omega_minus: c(-0.2, 0.9),
        });
        assert!((k - k.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn constant_boson_mode_is_a_phase() {
        let w = 1.7;
        let p = BosonProtocol::constant(w, ZERO, 0.5, 4.0).unwrap();
        let traj = solve_boson_mode(&p, &IntegratorConfig::default()).unwrap();
        for s in &traj.samples {
            assert!((s.f_minus - (I * w * (s.t - 0.5)).exp()).norm() < 1e-8);
            assert_eq!(s.f_plus, ZERO);
        }
        assert_eq!(traj.first().t, 0.5);
        assert_eq!(traj.last().t, 4.0);
        assert_eq!(traj.len(), 1001);
    }

    #[test]
    fn boson_mode_is_periodic() {
        let p = BosonProtocol::constant(1.0, ZERO, 0.0, 2.0 * PI).unwrap();
        let traj = solve_boson_mode(&p, &IntegratorConfig::default()).unwrap();
        assert!((traj.last().f_minus - ONE).norm() < 1e-8);
    }

    #[test]
    fn boson_rejects_nondiagonal_start() {
        let p = BosonProtocol::constant(1.0, c(0.1, 0.0), 0.0, 1.0).unwrap();
        assert!(matches!(
            solve_boson_mode(&p, &IntegratorConfig::default()),
            Err(TfdError::Precondition(_))
        ));
    }

    #[test]
    fn static_oscillator_closed_form() {
        let p = OscillatorProtocol::constant(1.0, 1.0, 0.0, 10.0).unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        assert!((traj.first().wronskian() - I).norm() < 1e-15);
        for s in &traj.samples {
            let want = (-I * s.t).exp() / 2f64.sqrt();
            assert!((s.v - want).norm() < 1e-8, "t = {}", s.t);
        }
        assert!(traj.drift.get("wronskian").unwrap() < 1e-9);
    }

    #[test]
    fn oscillator_rejects_moving_mass_at_start() {
        let mass = Profile::linear(1.0, 2.0, 0.0, 1.0).unwrap();
        let p = OscillatorProtocol::new(mass, Profile::Constant(1.0), 0.0, 2.0).unwrap();
        assert!(matches!(
            solve_oscillator_mode(&p, &IntegratorConfig::default()),
            Err(TfdError::Precondition(_))
        ));
    }

    #[test]
    fn sudden_mass_jump_keeps_momentum_continuous() {
        let p = OscillatorProtocol::new(Profile::sudden(1.0, 3.0, 1.0), Profile::Constant(1.0), 0.0, 3.0).unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        assert!(traj.drift.get("wronskian").unwrap() < 1e-9);
    }

    #[test]
    fn oscillator_and_boson_routes_agree() {
        let omega = Profile::tanh_pinned(1.0, 2.0, 5.0, 0.6, 0.0, 10.0).unwrap();
        let osc = OscillatorProtocol::new(Profile::Constant(1.0), omega, 0.0, 10.0).unwrap();
        let cfg = IntegratorConfig::default();
        let vtraj = solve_oscillator_mode(&osc, &cfg).unwrap();
        let btraj = solve_boson_with(
            |t, y, side| {
                let s = osc.boson_sample(t, side, 1.0, 1.0);
                [
                    I * (y[0] * s.omega0 - s.omega_plus.conj() * y[1]),
                    I * (s.omega_plus * y[0] - y[1] * s.omega0),
                ]
            },
            0.0,
            10.0,
            &[],
            &cfg,
        )
        .unwrap();
        for (v, b) in vtraj.samples.iter().zip(&btraj.samples) {
            let mv = v.mode_vector(1.0, 1.0);
            assert!((mv.f_minus - b.f_minus).norm() < 1e-7);
            assert!((mv.f_plus - b.f_plus).norm() < 1e-7);
        }
    }

    #[test]
    fn free_fermion_mode_rotates_with_sigma1() {
        let w0 = 0.9;
        let p = FermionProtocol::new(Profile::Constant(w0), ComplexProfile::zero(), ComplexProfile::zero(), 0.0, 5.0)
            .unwrap();
        let traj = solve_fermion_modes(&p, &IntegratorConfig::default()).unwrap();
        let w_init = traj.first().W_a;
        for s in &traj.samples {
            // σ₁ has (1,1)/√2 as its +1 eigenvector.
            let phase = (I * w0 * s.t).exp();
            assert!((s.W_a[0] - phase * w_init[0]).norm() < 1e-8);
            assert!((s.W_a[1] - phase * w_init[1]).norm() < 1e-8);
            assert!(s.Z_a.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn pairing_fermion_populations_are_bounded() {
        let p = FermionProtocol::new(
            Profile::Constant(0.0),
            ComplexProfile::real(Profile::Constant(0.8)),
            ComplexProfile::zero(),
            0.0,
            10.0,
        )
        .unwrap();
        let traj = solve_fermion_modes(&p, &IntegratorConfig::default()).unwrap();
        let mut peak: f64 = 0.0;
        for s in &traj.samples {
            let x = s.coefficients(FermionChannel::A);
            peak = peak.max(x[3].norm_sqr());
            assert!(x[3].norm_sqr() <= 1.0 + 1e-9);
            // Closed form of the 4×4 system: f⁻ = cos(ω₊t), g⁺ = i sin(ω₊t).
            assert!((x[0] - C64::from((0.8 * s.t).cos())).norm() < 1e-8);
            assert!((x[3] - I * (0.8 * s.t).sin()).norm() < 1e-8);
        }
        assert!(peak > 0.99);
        assert!(traj.drift.max() < 1e-9);
    }
}
