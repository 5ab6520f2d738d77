//! Dormand–Prince 5(4) over fixed-size complex state arrays.
//!
//! Steps are clipped so that every output time is hit exactly; there is no
//! interpolation between accepted steps.

use crate::error::{Result, TfdError};
use crate::protocols::Side;
use crate::C64;

use super::{IntegratorConfig, IntegratorStats};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Error weights: fifth-order minus embedded fourth-order.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 20_000_000;

type State<const D: usize> = [C64; D];

fn axpy<const D: usize>(y: &State<D>, h: f64, terms: &[(f64, &State<D>)]) -> State<D> {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

fn error_norm<const D: usize>(y: &State<D>, y_new: &State<D>, err: &State<D>, cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
        acc += (err[i].norm() / sc).powi(2);
    }
    (acc / D as f64).sqrt()
}

fn is_finite<const D: usize>(y: &State<D>) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Integrates `y' = rhs(t, y, side)` across `[t0, t1]`, recording the state
/// at every time in `outputs` (ascending, within `[t0, t1]`). `rhs` is
/// called with [`Side::Left`] only at `t1`.
pub(crate) fn integrate_segment<const D: usize, F>(
    rhs: &F,
    t0: f64,
    t1: f64,
    y0: State<D>,
    outputs: &[f64],
    cfg: &IntegratorConfig,
    stats: &mut IntegratorStats,
    record: &mut dyn FnMut(f64, &State<D>) -> Result<()>,
) -> Result<State<D>>
where
    F: Fn(f64, &State<D>, Side) -> State<D>,
{
    let f = |t: f64, y: &State<D>| {
        let side = if t >= t1 { Side::Left } else { Side::Right };
        rhs(t, y, side)
    };

    let mut t = t0;
    let mut y = y0;
    let mut out_iter = outputs.iter().copied().peekable();
    while let Some(&to) = out_iter.peek() {
        if to <= t0 {
            record(to, &y)?;
            out_iter.next();
        } else {
            break;
        }
    }
    if t1 <= t0 {
        return Ok(y);
    }

    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let max_step = cfg.max_step.min(t1 - t0);
    let mut h = initial_step(&f, t, &y, &k1, cfg, max_step, stats);
    let mut last_rejected = false;

    loop {
        let target = out_iter.peek().copied().unwrap_or(t1).min(t1);
        let remaining = target - t;
        let hit = h >= remaining * (1.0 - 1e-12);
        let step = if hit { remaining } else { h };

        if step <= 1e-14 * t.abs().max(1.0) && !hit {
            return Err(TfdError::Integration {
                t,
                reason: format!("step size underflow (h = {step:e})"),
            });
        }
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err(TfdError::Integration {
                t,
                reason: format!("exceeded {MAX_STEPS} steps"),
            });
        }

        let k2 = f(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
        let k3 = f(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * step, &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * step,
            &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let t_new = if hit { target } else { t + step };
        let k6 = f(
            t_new,
            &axpy(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t_new, &y_new);
        stats.rhs_evals += 6;

        let mut err = [C64::new(0.0, 0.0); D];
        for i in 0..D {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
        }
        let en = error_norm(&y, &y_new, &err, cfg);
        if !en.is_finite() || !is_finite(&y_new) {
            if step <= 1e-14 * t.abs().max(1.0) {
                return Err(TfdError::Integration {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            stats.rejected += 1;
            h = step * 0.1;
            last_rejected = true;
            continue;
        }

        let mut fac = 0.9 * en.powf(-0.2);
        if en == 0.0 {
            fac = 5.0;
        }
        if en <= 1.0 {
            stats.steps += 1;
            t = t_new;
            y = y_new;
            k1 = if hit && t >= t1 { f(t, &y) } else { k7 };
            let grow = if last_rejected { fac.min(1.0) } else { fac.clamp(0.2, 5.0) };
            // A step shortened to land on an output time says nothing about h.
            if !hit || step >= h {
                h = (step * grow).min(max_step);
            }
            last_rejected = false;
            if hit {
                if out_iter.peek().is_some_and(|&to| to == t) {
                    record(t, &y)?;
                    out_iter.next();
                }
                if t >= t1 {
                    break;
                }
            }
        } else {
            stats.rejected += 1;
            h = step * fac.clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    Ok(y)
}

fn initial_step<const D: usize>(
    f: &impl Fn(f64, &State<D>) -> State<D>,
    t: f64,
    y: &State<D>,
    f0: &State<D>,
    cfg: &IntegratorConfig,
    max_step: f64,
    stats: &mut IntegratorStats,
) -> f64 {
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].norm();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..D).map(|i| v(i).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d0 = rms(&|i| y[i].norm() / scale(i));
    let d1 = rms(&|i| f0[i].norm() / scale(i));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(max_step);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = f(t + h0, &y1);
    stats.rhs_evals += 1;
    let d2 = rms(&|i| (f1[i] - f0[i]).norm() / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(max_step)
}
