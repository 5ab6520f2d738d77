//! Single quench runs: mode coefficients, observables and the optional
//! oracle comparison.

use tfd_core::bogoliubov::StaticFrame;
use tfd_core::mode_solver::{solve_boson_mode, solve_fermion_modes, solve_oscillator_mode, FermionChannel};
use tfd_core::oracle::{
    build_boson_ladder, build_fermion_space, build_thermal_state_doubled, evolve_doubled_boson,
    evolve_doubled_fermion, expectation_state, position_operator, system_expectation, BasisDescriptor, BosonDrive,
    OperatorMatrix, OscillatorDrive, TruncationReport,
};
use tfd_core::protocols::{AnyProtocol, FermionProtocol, Protocol, Side};
use tfd_core::thermal::{equilibrium_occupation, evolved_occupation_boson, q_moment, theta};
use tfd_core::{BosonModeVector, DriftReport, FermionModeState, Statistics, C64, I};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Comparison, Table};

#[derive(Debug, Clone)]
pub struct QuenchResult {
    pub modes: Table,
    pub observables: Table,
    pub drift: DriftReport,
    pub truncation: Option<TruncationReport>,
    pub comparisons: Vec<Comparison>,
}

pub fn run_quench(config: &RunConfig) -> Result<QuenchResult, CliError> {
    let spec = config
        .protocol
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [protocol] section".into()))?;
    let protocol = spec.build().map_err(|e| CliError::Config(format!("[protocol] {e}")))?;
    match &protocol {
        AnyProtocol::Oscillator(p) => oscillator(config, p),
        AnyProtocol::Boson(p) => boson(config, p),
        AnyProtocol::Fermion(p) => fermion(config, p),
    }
}

/// Frame-independent pieces shared by the boson and oscillator runs.
struct BosonRun<'a> {
    drive: &'a dyn BosonDrive,
    modes: Vec<BosonModeVector>,
    instantaneous: Vec<Option<StaticFrame>>,
    final_frame: StaticFrame,
    mass_ref: f64,
    omega_ref: f64,
}

fn oscillator(config: &RunConfig, p: &tfd_core::OscillatorProtocol) -> Result<QuenchResult, CliError> {
    let traj = solve_oscillator_mode(p, &config.integrator())?;
    let (t_i, t_f) = p.window();
    let s0 = p.sample(t_i, Side::Right);
    let s1 = p.sample(t_f, Side::Left);
    let (m_i, w_i) = (s0.mass, s0.omega);

    let mut modes = Table::new(&[
        "t [time]",
        "v_re [sqrt(time/mass)]",
        "v_im [sqrt(time/mass)]",
        "v_dot_re [1/sqrt(mass*time)]",
        "v_dot_im [1/sqrt(mass*time)]",
        "wronskian_dev [1]",
    ]);
    let mut instantaneous = Vec::with_capacity(traj.len());
    for s in &traj.samples {
        modes.push(vec![s.t, s.v.re, s.v.im, s.v_dot.re, s.v_dot.im, (s.wronskian() - I).norm()]);
        let now = p.sample(s.t, Side::Left);
        instantaneous.push(StaticFrame::oscillator(m_i, w_i, now.mass, now.omega).ok());
    }
    let drive = OscillatorDrive {
        protocol: p,
        mass_ref: m_i,
        omega_ref: w_i,
    };
    let run = BosonRun {
        drive: &drive,
        modes: traj.samples.iter().map(|s| s.mode_vector(m_i, w_i)).collect(),
        instantaneous,
        final_frame: StaticFrame::oscillator(m_i, w_i, s1.mass, s1.omega)?,
        mass_ref: m_i,
        omega_ref: w_i,
    };
    boson_observables(config, run, modes, traj.drift)
}

fn boson(config: &RunConfig, p: &tfd_core::BosonProtocol) -> Result<QuenchResult, CliError> {
    let traj = solve_boson_mode(p, &config.integrator())?;
    let (t_i, t_f) = Protocol::window(p);
    let w_i = p.sample(t_i, Side::Right).omega0;
    if !(w_i > 0.0) {
        return Err(CliError::Config(format!("omega0(t_i) must be positive for a thermal state, got {w_i}")));
    }
    let last = p.sample(t_f, Side::Left);

    let mut modes = Table::new(&[
        "t [time]",
        "f_minus_re [1]",
        "f_minus_im [1]",
        "f_plus_re [1]",
        "f_plus_im [1]",
        "commutator_dev [1]",
    ]);
    let mut instantaneous = Vec::with_capacity(traj.len());
    for s in &traj.samples {
        modes.push(vec![
            s.t,
            s.f_minus.re,
            s.f_minus.im,
            s.f_plus.re,
            s.f_plus.im,
            (s.commutator() - 1.0).abs(),
        ]);
        let now = p.sample(s.t, Side::Left);
        instantaneous.push(StaticFrame::diagonalising(now.omega0, now.omega_plus).ok());
    }
    let run = BosonRun {
        drive: p,
        modes: traj.samples.clone(),
        instantaneous,
        final_frame: StaticFrame::diagonalising(last.omega0, last.omega_plus)?,
        mass_ref: 1.0,
        omega_ref: w_i,
    };
    boson_observables(config, run, modes, traj.drift)
}

/// `a_f†a_f` with `a_f = c a + s a†`.
fn frame_number(frame: &StaticFrame, levels: usize) -> Result<OperatorMatrix, CliError> {
    let (a, ad) = build_boson_ladder(levels)?;
    let af = &a.matrix * frame.c + &ad.matrix * frame.s;
    Ok(OperatorMatrix::new(af.adjoint() * af, a.basis, "a_f^dag a_f")?)
}

fn boson_observables(
    config: &RunConfig,
    run: BosonRun<'_>,
    modes: Table,
    drift: DriftReport,
) -> Result<QuenchResult, CliError> {
    let (beta, hbar) = (config.run.beta, config.run.hbar);
    let th = theta(beta, run.omega_ref, hbar, Statistics::Boson)?;
    let width = 1.0 / (2.0 * run.mass_ref * run.omega_ref).sqrt();

    let mut obs = Table::new(&[
        "t [time]",
        "occupation [quanta]",
        "nu2 [1]",
        "occupation_final [quanta]",
        "q2 [length^2]",
        "q4 [length^4]",
    ]);
    for (mv, frame) in run.modes.iter().zip(&run.instantaneous) {
        let occupation = match frame {
            Some(f) => evolved_occupation_boson(f.coefficients(mv).nu, beta, run.omega_ref, hbar)?,
            None => f64::NAN,
        };
        let nu = run.final_frame.coefficients(mv).nu;
        let v = (mv.f_minus - mv.f_plus) * width;
        obs.push(vec![
            mv.t,
            occupation,
            nu.norm_sqr(),
            evolved_occupation_boson(nu, beta, run.omega_ref, hbar)?,
            q_moment(1, v, th, hbar)?,
            q_moment(2, v, th, hbar)?,
        ]);
    }

    let mut comparisons = Vec::new();
    let mut truncation = None;
    if config.oracle.enabled {
        let n = config.oracle.truncation;
        let times: Vec<f64> = run.modes.iter().map(|m| m.t).collect();
        let pair = build_thermal_state_doubled(beta, run.omega_ref, hbar, BasisDescriptor::boson_doubled(n)?)?;
        let traj = evolve_doubled_boson(run.drive, &pair.series, &times, &config.oracle_config())?;
        let defect = pair.truncation.unwrap_or_default();
        truncation = Some(TruncationReport {
            tail_weight: defect.tail_weight.max(traj.max_tail_weight),
            commutator_defect: defect.commutator_defect,
        });

        let number = frame_number(&run.final_frame, n)?;
        let q = position_operator(n, run.mass_ref, run.omega_ref, hbar)?;
        let q2 = q.product(&q)?;
        let q4 = q2.product(&q2)?;
        let mut columns = [Vec::new(), Vec::new(), Vec::new()];
        for psi in &traj.states {
            for (col, op) in columns.iter_mut().zip([&number, &q2, &q4]) {
                col.push(system_expectation(psi, op)?.re);
            }
        }
        for ((name, unit), col) in [
            ("occupation_final", "quanta"),
            ("q2", "length^2"),
            ("q4", "length^4"),
        ]
        .into_iter()
        .zip(&columns)
        {
            comparisons.push(Comparison {
                column: name.to_string(),
                max_abs_difference: obs.add_comparison(name, unit, col),
            });
        }
    }
    Ok(QuenchResult {
        modes,
        observables: obs,
        drift,
        truncation,
        comparisons,
    })
}

/// Rows `a(t), a†(t), b(t), b†(t)` on the bare `(a, a†, b, b†)`.
fn bare_rows(state: &FermionModeState) -> [[C64; 4]; 4] {
    let x_a = state.coefficients(FermionChannel::A);
    let x_b = state.coefficients(FermionChannel::B);
    let dag = |x: [C64; 4]| [x[1].conj(), x[0].conj(), x[3].conj(), x[2].conj()];
    [x_a, dag(x_a), x_b, dag(x_b)]
}

fn fermion(config: &RunConfig, p: &FermionProtocol) -> Result<QuenchResult, CliError> {
    let (beta, hbar) = (config.run.beta, config.run.hbar);
    let traj = solve_fermion_modes(p, &config.integrator())?;
    let (t_i, _) = p.window();
    let w_i = p.sample(t_i, Side::Right).omega0;
    if !(w_i > 0.0) {
        return Err(CliError::Config(format!("omega0(t_i) must be positive for a thermal state, got {w_i}")));
    }
    let n_eq = equilibrium_occupation(beta, w_i, hbar, Statistics::Fermion)?;

    let mut headers = vec!["t [time]".to_string()];
    for channel in ["a", "b"] {
        for part in ["W", "Z"] {
            for k in 0..2 {
                for c in ["re", "im"] {
                    headers.push(format!("{part}_{channel}{k}_{c} [1]"));
                }
            }
        }
    }
    headers.extend(["norm_a_dev [1]", "norm_b_dev [1]", "anticommutator_dev [1]"].map(String::from));
    let mut modes = Table {
        headers,
        rows: Vec::new(),
    };
    let mut obs = Table::new(&[
        "t [time]",
        "occupation_a [quanta]",
        "occupation_b [quanta]",
        "production_a [quanta]",
        "production_b [quanta]",
    ]);
    for s in &traj.samples {
        let mut row = vec![s.t];
        for part in [s.W_a, s.Z_a, s.W_b, s.Z_b] {
            for c in part {
                row.extend([c.re, c.im]);
            }
        }
        row.push((s.norm(FermionChannel::A) - 1.0).abs());
        row.push((s.norm(FermionChannel::B) - 1.0).abs());
        row.push(s.anticommutator_ab().norm().max(s.overlap_ab().norm()));
        modes.push(row);

        let m = bare_rows(s);
        let created = |col: usize| m[1][col].norm_sqr() + m[3][col].norm_sqr();
        let (pa, pb) = (created(0), created(2));
        obs.push(vec![s.t, n_eq + (1.0 - 2.0 * n_eq) * pa, n_eq + (1.0 - 2.0 * n_eq) * pb, pa, pb]);
    }

    let mut comparisons = Vec::new();
    if config.oracle.enabled {
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        let pair = build_thermal_state_doubled(beta, w_i, hbar, BasisDescriptor::FermionDoubled)?;
        let run = evolve_doubled_fermion(p, &pair.series, &times, &config.oracle_config(), hbar)?;
        let space = build_fermion_space(true);
        let n_a = space.a.adjoint().product(&space.a)?;
        let n_b = space.b.adjoint().product(&space.b)?;
        let mut columns = [Vec::new(), Vec::new()];
        for psi in &run.states {
            columns[0].push(expectation_state(psi, &n_a)?.re);
            columns[1].push(expectation_state(psi, &n_b)?.re);
        }
        for (name, col) in ["occupation_a", "occupation_b"].into_iter().zip(&columns) {
            comparisons.push(Comparison {
                column: name.to_string(),
                max_abs_difference: obs.add_comparison(name, "quanta", col),
            });
        }
    }
    Ok(QuenchResult {
        modes,
        observables: obs,
        drift: traj.drift,
        truncation: None,
        comparisons,
    })
}
