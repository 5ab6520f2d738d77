//! Time-dependent Hamiltonian coefficient profiles.
//!
//! Every profile is right-continuous: at a declared jump time the value
//! after the jump is returned. Solvers that need the value just before a
//! jump ask for [`Side::Left`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TfdError};
use crate::C64;

/// Default step of the centered finite difference used for profiles that
/// carry no analytic derivative.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Number of samples `validate` takes across the protocol window.
const VALIDATION_SAMPLES: usize = 4001;

/// Which one-sided limit to take at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A user-supplied real profile.
#[derive(Clone)]
pub struct CustomProfile {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    fd_step: f64,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile")
            .field("fd_step", &self.fd_step)
            .finish_non_exhaustive()
    }
}

/// Smooth `(1 + tanh)` ramp. With a `window`, the ramp is affinely
/// rescaled so that it takes exactly `start` at the window start and `end`
/// at the window end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhRamp {
    pub start: f64,
    pub end: f64,
    pub center: f64,
    pub width: f64,
    pub window: Option<(f64, f64)>,
}

impl TanhRamp {
    fn unit(&self, t: f64) -> f64 {
        0.5 * (1.0 + ((t - self.center) / self.width).tanh())
    }

    fn unit_dot(&self, t: f64) -> f64 {
        let c = ((t - self.center) / self.width).cosh();
        0.5 / (self.width * c * c)
    }

    /// Returns `(offset, scale)` such that the pinned unit ramp is
    /// `(unit(t) - offset) * scale`.
    fn pin(&self) -> (f64, f64) {
        match self.window {
            Some((t_i, t_f)) => {
                let lo = self.unit(t_i);
                let hi = self.unit(t_f);
                (lo, 1.0 / (hi - lo))
            }
            None => (0.0, 1.0),
        }
    }

    fn value(&self, t: f64) -> f64 {
        let (offset, scale) = self.pin();
        self.start + (self.end - self.start) * (self.unit(t) - offset) * scale
    }

    fn derivative(&self, t: f64) -> f64 {
        let (_, scale) = self.pin();
        (self.end - self.start) * self.unit_dot(t) * scale
    }
}

/// A real-valued coefficient as a function of time.
#[derive(Debug, Clone)]
pub enum Profile {
    Constant(f64),
    /// Step from `start` to `end` at `t_jump`.
    Sudden { start: f64, end: f64, t_jump: f64 },
    /// Linear interpolation between `ramp_start` and `ramp_end`, constant
    /// outside.
    Linear {
        start: f64,
        end: f64,
        ramp_start: f64,
        ramp_end: f64,
    },
    Tanh(TanhRamp),
    Custom(CustomProfile),
}

/// Raw tanh ramp with limits `start_value` at `t → −∞` and `end_value` at
/// `t → +∞`, taking the arithmetic mean at `center`.
pub fn make_tanh_ramp(start_value: f64, end_value: f64, center: f64, width: f64) -> Result<Profile> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(TfdError::param(format!("tanh ramp width must be positive, got {width}")));
    }
    Ok(Profile::Tanh(TanhRamp {
        start: start_value,
        end: end_value,
        center,
        width,
        window: None,
    }))
}

impl Profile {
    pub fn sudden(start: f64, end: f64, t_jump: f64) -> Self {
        Profile::Sudden { start, end, t_jump }
    }

    pub fn linear(start: f64, end: f64, ramp_start: f64, ramp_end: f64) -> Result<Self> {
        if !(ramp_end > ramp_start) {
            return Err(TfdError::param(format!(
                "linear ramp needs ramp_end > ramp_start, got [{ramp_start}, {ramp_end}]"
            )));
        }
        Ok(Profile::Linear {
            start,
            end,
            ramp_start,
            ramp_end,
        })
    }

    /// Tanh ramp pinned to hit `start` and `end` exactly at `t_i` and `t_f`.
    pub fn tanh_pinned(start: f64, end: f64, center: f64, width: f64, t_i: f64, t_f: f64) -> Result<Self> {
        let Profile::Tanh(mut ramp) = make_tanh_ramp(start, end, center, width)? else {
            unreachable!()
        };
        if ramp.unit(t_f) - ramp.unit(t_i) <= 0.0 {
            return Err(TfdError::param(
                "tanh ramp is flat across the protocol window; move the center or widen the ramp",
            ));
        }
        ramp.window = Some((t_i, t_f));
        Ok(Profile::Tanh(ramp))
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom(CustomProfile {
            f: Arc::new(f),
            fd_step: DEFAULT_FD_STEP,
        })
    }

    pub fn custom_with_step(f: impl Fn(f64) -> f64 + Send + Sync + 'static, fd_step: f64) -> Self {
        Profile::Custom(CustomProfile { f: Arc::new(f), fd_step })
    }

    /// Right-continuous value.
    pub fn value(&self, t: f64) -> f64 {
        self.value_side(t, Side::Right)
    }

    pub fn value_side(&self, t: f64, side: Side) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Sudden { start, end, t_jump } => {
                let after = match side {
                    Side::Right => t >= *t_jump,
                    Side::Left => t > *t_jump,
                };
                if after {
                    *end
                } else {
                    *start
                }
            }
            Profile::Linear {
                start,
                end,
                ramp_start,
                ramp_end,
            } => {
                if t <= *ramp_start {
                    *start
                } else if t >= *ramp_end {
                    *end
                } else {
                    start + (end - start) * (t - ramp_start) / (ramp_end - ramp_start)
                }
            }
            Profile::Tanh(r) => r.value(t),
            Profile::Custom(c) => (c.f)(t),
        }
    }

    /// Time derivative; analytic for the built-in families, centered finite
    /// difference for custom profiles. Zero at a sudden jump (the jump
    /// itself is handled by the solver restart).
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(_) | Profile::Sudden { .. } => 0.0,
            Profile::Linear {
                start,
                end,
                ramp_start,
                ramp_end,
            } => {
                if t >= *ramp_start && t < *ramp_end {
                    (end - start) / (ramp_end - ramp_start)
                } else {
                    0.0
                }
            }
            Profile::Tanh(r) => r.derivative(t),
            Profile::Custom(c) => {
                let h = c.fd_step;
                ((c.f)(t + h) - (c.f)(t - h)) / (2.0 * h)
            }
        }
    }

    /// Jump times carried by the profile itself.
    pub fn jumps(&self) -> Option<f64> {
        match self {
            Profile::Sudden { start, end, t_jump } if start != end => Some(*t_jump),
            _ => None,
        }
    }
}

/// Complex coefficient `magnitude(t) · e^{i·phase}`.
#[derive(Debug, Clone)]
pub struct ComplexProfile {
    pub magnitude: Profile,
    pub phase: f64,
}

impl ComplexProfile {
    pub fn real(magnitude: Profile) -> Self {
        ComplexProfile { magnitude, phase: 0.0 }
    }

    pub fn zero() -> Self {
        Self::real(Profile::Constant(0.0))
    }

    pub fn with_phase(magnitude: Profile, phase: f64) -> Self {
        ComplexProfile { magnitude, phase }
    }

    pub fn value_side(&self, t: f64, side: Side) -> C64 {
        C64::from_polar(1.0, self.phase) * self.magnitude.value_side(t, side)
    }

    pub fn value(&self, t: f64) -> C64 {
        self.value_side(t, Side::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonSample {
    pub omega0: f64,
    pub omega_plus: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSample {
    pub mass: f64,
    pub mass_dot: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermionSample {
    pub omega0: f64,
    pub omega_plus: C64,
    pub omega_minus: C64,
}

/// Common interface of the three protocol kinds.
pub trait Protocol: Send + Sync {
    type Sample: Copy;

    fn window(&self) -> (f64, f64);

    /// Declared discontinuities strictly inside the window, ascending.
    fn jump_times(&self) -> &[f64];

    /// Evaluate without a domain check.
    fn sample(&self, t: f64, side: Side) -> Self::Sample;

    /// Coefficients at `t`; the right limit at a jump.
    fn evaluate(&self, t: f64) -> Result<Self::Sample> {
        let (t_i, t_f) = self.window();
        if !(t >= t_i && t <= t_f) {
            return Err(TfdError::Domain { t, t_i, t_f });
        }
        Ok(self.sample(t, Side::Right))
    }

    /// Named real channels used by `validate`.
    fn channels(&self, t: f64) -> Vec<(&'static str, f64)>;

    fn validate(&self) -> ValidationReport {
        validate_channels(self, |_, _| {})
    }
}

fn check_window(t_i: f64, t_f: f64) -> Result<()> {
    if !(t_i.is_finite() && t_f.is_finite() && t_f > t_i) {
        return Err(TfdError::param(format!("protocol window needs t_i < t_f, got [{t_i}, {t_f}]")));
    }
    Ok(())
}

fn collect_jumps<'a>(profiles: impl IntoIterator<Item = &'a Profile>, t_i: f64, t_f: f64) -> Vec<f64> {
    let mut jumps: Vec<f64> = profiles
        .into_iter()
        .filter_map(Profile::jumps)
        .filter(|&t| t > t_i && t < t_f)
        .collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    jumps
}

fn insert_jump(jumps: &mut Vec<f64>, t: f64, t_i: f64, t_f: f64) -> Result<()> {
    if !(t > t_i && t < t_f) {
        return Err(TfdError::param(format!("jump time {t} not inside ({t_i}, {t_f})")));
    }
    if !jumps.contains(&t) {
        jumps.push(t);
        jumps.sort_by(f64::total_cmp);
    }
    Ok(())
}

/// General quadratic boson Hamiltonian
/// `ħ[ω₀ a†a + ½ω₊ a†² + ½ω₊* a²]`.
#[derive(Debug, Clone)]
pub struct BosonProtocol {
    pub omega0: Profile,
    pub omega_plus: ComplexProfile,
    t_i: f64,
    t_f: f64,
    jump_times: Vec<f64>,
}

impl BosonProtocol {
    pub fn new(omega0: Profile, omega_plus: ComplexProfile, t_i: f64, t_f: f64) -> Result<Self> {
        check_window(t_i, t_f)?;
        let jump_times = collect_jumps([&omega0, &omega_plus.magnitude], t_i, t_f);
        Ok(BosonProtocol {
            omega0,
            omega_plus,
            t_i,
            t_f,
            jump_times,
        })
    }

    pub fn constant(omega0: f64, omega_plus: C64, t_i: f64, t_f: f64) -> Result<Self> {
        Self::new(
            Profile::Constant(omega0),
            ComplexProfile::with_phase(Profile::Constant(omega_plus.norm()), omega_plus.arg()),
            t_i,
            t_f,
        )
    }

    /// Declare an additional discontinuity (for custom profiles).
    pub fn with_jump(mut self, t: f64) -> Result<Self> {
        insert_jump(&mut self.jump_times, t, self.t_i, self.t_f)?;
        Ok(self)
    }
}

impl Protocol for BosonProtocol {
    type Sample = BosonSample;

    fn window(&self) -> (f64, f64) {
        (self.t_i, self.t_f)
    }

    fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    fn sample(&self, t: f64, side: Side) -> BosonSample {
        BosonSample {
            omega0: self.omega0.value_side(t, side),
            omega_plus: self.omega_plus.value_side(t, side),
        }
    }

    fn channels(&self, t: f64) -> Vec<(&'static str, f64)> {
        let s = self.sample(t, Side::Right);
        vec![
            ("omega0", s.omega0),
            ("re_omega_plus", s.omega_plus.re),
            ("im_omega_plus", s.omega_plus.im),
        ]
    }
}

/// Oscillator `p²/2m(t) + ½m(t)ω(t)²q²`.
#[derive(Debug, Clone)]
pub struct OscillatorProtocol {
    pub mass: Profile,
    pub omega: Profile,
    t_i: f64,
    t_f: f64,
    jump_times: Vec<f64>,
}

impl OscillatorProtocol {
    pub fn new(mass: Profile, omega: Profile, t_i: f64, t_f: f64) -> Result<Self> {
        check_window(t_i, t_f)?;
        let jump_times = collect_jumps([&mass, &omega], t_i, t_f);
        Ok(OscillatorProtocol {
            mass,
            omega,
            t_i,
            t_f,
            jump_times,
        })
    }

    pub fn constant(mass: f64, omega: f64, t_i: f64, t_f: f64) -> Result<Self> {
        Self::new(Profile::Constant(mass), Profile::Constant(omega), t_i, t_f)
    }

    pub fn with_jump(mut self, t: f64) -> Result<Self> {
        insert_jump(&mut self.jump_times, t, self.t_i, self.t_f)?;
        Ok(self)
    }

    /// The oscillator written in the ladder operators of the static
    /// oscillator `(mass_ref, omega_ref)`:
    /// `ω₀ = (A + B)/2`, `ω₊ = (B − A)/2` with `A = m_ref ω_ref / m(t)` and
    /// `B = m(t) ω(t)² / (m_ref ω_ref)`, dropping the c-number `ħ(A+B)/4`.
    pub fn boson_sample(&self, t: f64, side: Side, mass_ref: f64, omega_ref: f64) -> BosonSample {
        let m = self.mass.value_side(t, side);
        let w = self.omega.value_side(t, side);
        let a = mass_ref * omega_ref / m;
        let b = m * w * w / (mass_ref * omega_ref);
        BosonSample {
            omega0: 0.5 * (a + b),
            omega_plus: C64::new(0.5 * (b - a), 0.0),
        }
    }
}

impl Protocol for OscillatorProtocol {
    type Sample = OscillatorSample;

    fn window(&self) -> (f64, f64) {
        (self.t_i, self.t_f)
    }

    fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    fn sample(&self, t: f64, side: Side) -> OscillatorSample {
        OscillatorSample {
            mass: self.mass.value_side(t, side),
            mass_dot: self.mass.derivative(t),
            omega: self.omega.value_side(t, side),
        }
    }

    fn channels(&self, t: f64) -> Vec<(&'static str, f64)> {
        let s = self.sample(t, Side::Right);
        vec![("mass", s.mass), ("mass_dot", s.mass_dot), ("omega", s.omega)]
    }

    fn validate(&self) -> ValidationReport {
        validate_channels(self, |report, (t_i, _)| {
            let s = self.sample(t_i, Side::Right);
            let scale = (s.mass * s.omega).abs().max(f64::MIN_POSITIVE);
            if (s.mass_dot / scale).abs() > INITIAL_FRAME_TOL {
                report.findings.push(Finding::InitialFrameNotStatic {
                    detail: format!("mass_dot(t_i) = {:e}", s.mass_dot),
                });
            }
        })
    }
}

/// Relative tolerance for the "static at t_i" preconditions.
pub const INITIAL_FRAME_TOL: f64 = 1e-8;

/// Two-mode fermion Hamiltonian
/// `ħ[ω₀(a†a − b†b) + ω₊a†b† − ω₊*ab + ω₋ab† − ω₋*a†b]`.
#[derive(Debug, Clone)]
pub struct FermionProtocol {
    pub omega0: Profile,
    pub omega_plus: ComplexProfile,
    pub omega_minus: ComplexProfile,
    t_i: f64,
    t_f: f64,
    jump_times: Vec<f64>,
}

impl FermionProtocol {
    pub fn new(
        omega0: Profile,
        omega_plus: ComplexProfile,
        omega_minus: ComplexProfile,
        t_i: f64,
        t_f: f64,
    ) -> Result<Self> {
        check_window(t_i, t_f)?;
        let jump_times = collect_jumps(
            [&omega0, &omega_plus.magnitude, &omega_minus.magnitude],
            t_i,
            t_f,
        );
        Ok(FermionProtocol {
            omega0,
            omega_plus,
            omega_minus,
            t_i,
            t_f,
            jump_times,
        })
    }

    pub fn with_jump(mut self, t: f64) -> Result<Self> {
        insert_jump(&mut self.jump_times, t, self.t_i, self.t_f)?;
        Ok(self)
    }
}

impl Protocol for FermionProtocol {
    type Sample = FermionSample;

    fn window(&self) -> (f64, f64) {
        (self.t_i, self.t_f)
    }

    fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    fn sample(&self, t: f64, side: Side) -> FermionSample {
        FermionSample {
            omega0: self.omega0.value_side(t, side),
            omega_plus: self.omega_plus.value_side(t, side),
            omega_minus: self.omega_minus.value_side(t, side),
        }
    }

    fn channels(&self, t: f64) -> Vec<(&'static str, f64)> {
        let s = self.sample(t, Side::Right);
        vec![
            ("omega0", s.omega0),
            ("re_omega_plus", s.omega_plus.re),
            ("im_omega_plus", s.omega_plus.im),
            ("re_omega_minus", s.omega_minus.re),
            ("im_omega_minus", s.omega_minus.im),
        ]
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Finding {
    NonFinite { channel: &'static str, t: f64 },
    NonPositiveMass { t: f64, value: f64 },
    Discontinuity { channel: &'static str, t: f64, jump: f64 },
    InitialFrameNotStatic { detail: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ranges: Vec<ChannelRange>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn discontinuities(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.findings.iter().filter_map(|f| match f {
            Finding::Discontinuity { channel, t, .. } => Some((*channel, *t)),
            _ => None,
        })
    }
}

fn validate_channels<P: Protocol + ?Sized>(
    protocol: &P,
    extra: impl FnOnce(&mut ValidationReport, (f64, f64)),
) -> ValidationReport {
    let (t_i, t_f) = protocol.window();
    let n = VALIDATION_SAMPLES;
    let times: Vec<f64> = (0..n)
        .map(|k| t_i + (t_f - t_i) * k as f64 / (n - 1) as f64)
        .collect();
    let rows: Vec<Vec<(&'static str, f64)>> = times.iter().map(|&t| protocol.channels(t)).collect();
    let mut report = ValidationReport::default();

    let n_channels = rows[0].len();
    for c in 0..n_channels {
        let name = rows[0][c].0;
        let values: Vec<f64> = rows.iter().map(|r| r[c].1).collect();

        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (&t, &v) in times.iter().zip(&values) {
            if !v.is_finite() {
                report.findings.push(Finding::NonFinite { channel: name, t });
                continue;
            }
            min = min.min(v);
            max = max.max(v);
            if name == "mass" && v <= 0.0 {
                report.findings.push(Finding::NonPositiveMass { t, value: v });
            }
        }
        report.ranges.push(ChannelRange { name, min, max });

        // mass_dot follows mass; its spikes are reported through mass.
        if name == "mass_dot" {
            continue;
        }
        let scale = 1.0 + min.abs().max(max.abs());
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        for k in 0..diffs.len() {
            let d = diffs[k].abs();
            if !d.is_finite() || d < 1e-8 * scale {
                continue;
            }
            let before = if k > 0 { diffs[k - 1].abs() } else { 0.0 };
            let after = diffs.get(k + 1).map_or(0.0, |x| x.abs());
            if d < 20.0 * before.max(after) {
                continue;
            }
            let (a, b) = (times[k], times[k + 1]);
            if protocol.jump_times().iter().any(|&j| j > a && j <= b) {
                continue;
            }
            if let Some((t, jump)) = refine_jump(protocol, c, a, b, d) {
                report.findings.push(Finding::Discontinuity { channel: name, t, jump });
            }
        }
    }
    extra(&mut report, (t_i, t_f));
    report
}

/// Bisect a suspicious interval down to a few ulps. A genuine step keeps
/// most of its height; a steep but smooth ramp does not.
fn refine_jump<P: Protocol + ?Sized>(protocol: &P, channel: usize, mut a: f64, mut b: f64, coarse: f64) -> Option<(f64, f64)> {
    let value = |t: f64| protocol.channels(t)[channel].1;
    let (mut fa, mut fb) = (value(a), value(b));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        let fm = value(m);
        if (fm - fa).abs() >= (fb - fm).abs() {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    let jump = fb - fa;
    (jump.abs() > 0.5 * coarse).then_some((b, jump))
}

// ---------------------------------------------------------------------------
// Flat key-value construction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Boson,
    Oscillator,
    Fermion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Constant,
    Sudden,
    Linear,
    Tanh,
}

/// Flat description of a built-in protocol, as read from a config section.
///
/// Every coefficient `X` takes `X_start` and optionally `X_end` (defaults to
/// `X_start`); complex coefficients also take `X_phase` in radians. Family
/// parameters: `t_jump` (sudden), `ramp_start`/`ramp_end` (linear),
/// `center`/`width` (tanh).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub family: Family,
    pub t_i: f64,
    pub t_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_jump: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_plus_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_plus_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_plus_phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_minus_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_minus_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_minus_phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_end: Option<f64>,
}

/// A protocol of any kind.
#[derive(Debug, Clone)]
pub enum AnyProtocol {
    Boson(BosonProtocol),
    Oscillator(OscillatorProtocol),
    Fermion(FermionProtocol),
}

impl AnyProtocol {
    pub fn window(&self) -> (f64, f64) {
        match self {
            AnyProtocol::Boson(p) => p.window(),
            AnyProtocol::Oscillator(p) => p.window(),
            AnyProtocol::Fermion(p) => p.window(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            AnyProtocol::Boson(p) => p.validate(),
            AnyProtocol::Oscillator(p) => p.validate(),
            AnyProtocol::Fermion(p) => p.validate(),
        }
    }
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, family: Family, t_i: f64, t_f: f64) -> Self {
        ProtocolSpec {
            kind,
            family,
            t_i,
            t_f,
            t_jump: None,
            ramp_start: None,
            ramp_end: None,
            center: None,
            width: None,
            omega0_start: None,
            omega0_end: None,
            omega_plus_start: None,
            omega_plus_end: None,
            omega_plus_phase: None,
            omega_minus_start: None,
            omega_minus_end: None,
            omega_minus_phase: None,
            mass_start: None,
            mass_end: None,
            omega_start: None,
            omega_end: None,
        }
    }

    fn slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "t_jump" => &mut self.t_jump,
            "ramp_start" => &mut self.ramp_start,
            "ramp_end" => &mut self.ramp_end,
            "center" => &mut self.center,
            "width" => &mut self.width,
            "omega0_start" => &mut self.omega0_start,
            "omega0_end" => &mut self.omega0_end,
            "omega_plus_start" => &mut self.omega_plus_start,
            "omega_plus_end" => &mut self.omega_plus_end,
            "omega_plus_phase" => &mut self.omega_plus_phase,
            "omega_minus_start" => &mut self.omega_minus_start,
            "omega_minus_end" => &mut self.omega_minus_end,
            "omega_minus_phase" => &mut self.omega_minus_phase,
            "mass_start" => &mut self.mass_start,
            "mass_end" => &mut self.mass_end,
            "omega_start" => &mut self.omega_start,
            "omega_end" => &mut self.omega_end,
            _ => return None,
        })
    }

    /// Set a numeric key by name (used by parameter sweeps).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "t_i" => self.t_i = value,
            "t_f" => self.t_f = value,
            _ => {
                *self
                    .slot(key)
                    .ok_or_else(|| TfdError::param(format!("unknown protocol key `{key}`")))? = Some(value)
            }
        }
        Ok(())
    }

    pub fn with(mut self, key: &str, value: f64) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    fn present(&self) -> Vec<&'static str> {
        let mut probe = self.clone();
        [
            "t_jump",
            "ramp_start",
            "ramp_end",
            "center",
            "width",
            "omega0_start",
            "omega0_end",
            "omega_plus_start",
            "omega_plus_end",
            "omega_plus_phase",
            "omega_minus_start",
            "omega_minus_end",
            "omega_minus_phase",
            "mass_start",
            "mass_end",
            "omega_start",
            "omega_end",
        ]
        .into_iter()
        .filter(|k| probe.slot(k).is_some_and(|v| v.is_some()))
        .collect()
    }

    pub fn build(&self) -> Result<AnyProtocol> {
        let family_keys: &[&str] = match self.family {
            Family::Constant => &[],
            Family::Sudden => &["t_jump"],
            Family::Linear => &["ramp_start", "ramp_end"],
            Family::Tanh => &["center", "width"],
        };
        let coeff_names: &[&str] = match self.kind {
            ProtocolKind::Boson => &["omega0", "omega_plus"],
            ProtocolKind::Oscillator => &["mass", "omega"],
            ProtocolKind::Fermion => &["omega0", "omega_plus", "omega_minus"],
        };
        for key in self.present() {
            let ok = family_keys.contains(&key)
                || coeff_names.iter().any(|c| {
                    key == format!("{c}_start")
                        || (self.family != Family::Constant && key == format!("{c}_end"))
                        || (c.starts_with("omega_") && key == format!("{c}_phase"))
                });
            if !ok {
                return Err(TfdError::param(format!(
                    "key `{key}` does not apply to a {:?} protocol with the {:?} family",
                    self.kind, self.family
                )));
            }
        }

        let profile = |start: Option<f64>, end: Option<f64>, default: Option<f64>, name: &str| -> Result<Profile> {
            let start = start
                .or(default)
                .ok_or_else(|| TfdError::param(format!("missing `{name}_start`")))?;
            let end = end.unwrap_or(start);
            if !start.is_finite() || !end.is_finite() {
                return Err(TfdError::param(format!("`{name}` endpoints must be finite")));
            }
            if start == end {
                return Ok(Profile::Constant(start));
            }
            let need = |v: Option<f64>, k: &str| {
                v.ok_or_else(|| TfdError::param(format!("{:?} family requires `{k}`", self.family)))
            };
            match self.family {
                Family::Constant => Ok(Profile::Constant(start)),
                Family::Sudden => Ok(Profile::sudden(start, end, need(self.t_jump, "t_jump")?)),
                Family::Linear => Profile::linear(
                    start,
                    end,
                    need(self.ramp_start, "ramp_start")?,
                    need(self.ramp_end, "ramp_end")?,
                ),
                Family::Tanh => Profile::tanh_pinned(
                    start,
                    end,
                    need(self.center, "center")?,
                    need(self.width, "width")?,
                    self.t_i,
                    self.t_f,
                ),
            }
        };
        // Family parameters must be present even when every coefficient is flat.
        for k in family_keys {
            let mut probe = self.clone();
            if probe.slot(k).is_some_and(|v| v.is_none()) {
                return Err(TfdError::param(format!("{:?} family requires `{k}`", self.family)));
            }
        }
        if let (Family::Tanh, Some(w)) = (self.family, self.width) {
            if !(w > 0.0) {
                return Err(TfdError::param(format!("tanh width must be positive, got {w}")));
            }
        }

        let (t_i, t_f) = (self.t_i, self.t_f);
        Ok(match self.kind {
            ProtocolKind::Boson => AnyProtocol::Boson(BosonProtocol::new(
                profile(self.omega0_start, self.omega0_end, None, "omega0")?,
                ComplexProfile::with_phase(
                    profile(self.omega_plus_start, self.omega_plus_end, Some(0.0), "omega_plus")?,
                    self.omega_plus_phase.unwrap_or(0.0),
                ),
                t_i,
                t_f,
            )?),
            ProtocolKind::Oscillator => AnyProtocol::Oscillator(OscillatorProtocol::new(
                profile(self.mass_start, self.mass_end, Some(1.0), "mass")?,
                profile(self.omega_start, self.omega_end, None, "omega")?,
                t_i,
                t_f,
            )?),
            ProtocolKind::Fermion => AnyProtocol::Fermion(FermionProtocol::new(
                profile(self.omega0_start, self.omega0_end, None, "omega0")?,
                ComplexProfile::with_phase(
                    profile(self.omega_plus_start, self.omega_plus_end, Some(0.0), "omega_plus")?,
                    self.omega_plus_phase.unwrap_or(0.0),
                ),
                ComplexProfile::with_phase(
                    profile(self.omega_minus_start, self.omega_minus_end, Some(0.0), "omega_minus")?,
                    self.omega_minus_phase.unwrap_or(0.0),
                ),
                t_i,
                t_f,
            )?),
        })
    }
}
