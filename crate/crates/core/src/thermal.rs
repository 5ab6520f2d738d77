//! Closed-form finite-temperature quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TfdError};
use crate::C64;

/// `βℏω` above this is treated as zero temperature.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalParameters {
    pub beta: f64,
    pub omega_ref: f64,
    pub hbar: f64,
    pub statistics: Statistics,
    pub theta: f64,
}

impl ThermalParameters {
    pub fn new(beta: f64, omega_ref: f64, hbar: f64, statistics: Statistics) -> Result<Self> {
        Ok(ThermalParameters {
            beta,
            omega_ref,
            hbar,
            statistics,
            theta: theta(beta, omega_ref, hbar, statistics)?,
        })
    }

    /// Parameters with a prescribed `βℏω`.
    pub fn from_exponent(x: f64, omega_ref: f64, hbar: f64, statistics: Statistics) -> Result<Self> {
        Self::new(x / (hbar * omega_ref), omega_ref, hbar, statistics)
    }

    /// `βℏω`.
    pub fn exponent(&self) -> f64 {
        self.beta * self.hbar * self.omega_ref
    }

    pub fn occupation(&self) -> f64 {
        occupation_from_exponent(self.exponent(), self.statistics)
    }

    /// `tanh θ` for bosons, `tan θ` for fermions; both equal `e^{−βℏω/2}`.
    pub fn ratio(&self) -> f64 {
        let x = self.exponent();
        if x > MAX_EXPONENT {
            0.0
        } else {
            (-0.5 * x).exp()
        }
    }
}

fn exponent(beta: f64, omega: f64, hbar: f64) -> Result<f64> {
    for (name, v) in [("beta", beta), ("omega", omega), ("hbar", hbar)] {
        if !(v > 0.0) || v.is_nan() {
            return Err(TfdError::param(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(beta * hbar * omega)
}

/// Squeeze angle with `tanh θ = e^{−βℏω/2}` (boson) or `tan θ = e^{−βℏω/2}`
/// (fermion).
pub fn theta(beta: f64, omega: f64, hbar: f64, statistics: Statistics) -> Result<f64> {
    let x = exponent(beta, omega, hbar)?;
    Ok(theta_from_exponent(x, statistics))
}

pub(crate) fn theta_from_exponent(x: f64, statistics: Statistics) -> f64 {
    if x > MAX_EXPONENT {
        return 0.0;
    }
    let r = (-0.5 * x).exp();
    match statistics {
        // atanh(r) = ½ ln((1 + r)/(1 − r)), with 1 − r = −expm1(−x/2).
        Statistics::Boson => 0.5 * ((1.0 + r) / -(-0.5 * x).exp_m1()).ln(),
        Statistics::Fermion => r.atan(),
    }
}

fn occupation_from_exponent(x: f64, statistics: Statistics) -> f64 {
    if x > MAX_EXPONENT {
        return 0.0;
    }
    match statistics {
        Statistics::Boson => 1.0 / x.exp_m1(),
        Statistics::Fermion => {
            let e = (-x).exp();
            e / (1.0 + e)
        }
    }
}

/// Bose–Einstein or Fermi–Dirac occupation.
pub fn equilibrium_occupation(beta: f64, omega: f64, hbar: f64, statistics: Statistics) -> Result<f64> {
    Ok(occupation_from_exponent(exponent(beta, omega, hbar)?, statistics))
}

/// `ν*ν + (1 + 2ν*ν)/(e^{βℏω} − 1)`.
pub fn evolved_occupation_boson(nu: C64, beta: f64, omega: f64, hbar: f64) -> Result<f64> {
    let n_eq = equilibrium_occupation(beta, omega, hbar, Statistics::Boson)?;
    let p = nu.norm_sqr();
    Ok(p + (1.0 + 2.0 * p) * n_eq)
}

/// `1 + 2ν*ν`.
pub fn amplification_factor(nu: C64) -> f64 {
    1.0 + 2.0 * nu.norm_sqr()
}

/// `⟨q²ⁿ⟩ = (2n)!/(2ⁿ n!) · (ℏ v*v)ⁿ · (1 + 2 sinh²θ)ⁿ`.
pub fn q_moment(n: u32, v: C64, theta: f64, hbar: f64) -> Result<f64> {
    if n < 1 {
        return Err(TfdError::param("q_moment needs n >= 1"));
    }
    let double_factorial: f64 = (1..=n).map(|k| (2 * k - 1) as f64).product();
    let s = theta.sinh();
    let width = hbar * v.norm_sqr() * (1.0 + 2.0 * s * s);
    Ok(double_factorial * width.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn theta_examples() {
        let tb = theta(LN_2, 1.0, 1.0, Statistics::Boson).unwrap();
        assert!((tb.sinh().powi(2) - 1.0).abs() < 1e-14);
        let tf = theta(LN_2, 1.0, 1.0, Statistics::Fermion).unwrap();
        assert!((tf.sin().powi(2) - 1.0 / 3.0).abs() < 1e-15);
        for s in [Statistics::Boson, Statistics::Fermion] {
            assert_eq!(theta(1e4, 1.0, 1.0, s).unwrap(), 0.0);
            assert!(theta(30.0, 1.0, 1.0, s).unwrap() < 1e-6);
        }
    }

    #[test]
    fn nonpositive_inputs_rejected() {
        assert!(theta(0.0, 1.0, 1.0, Statistics::Boson).is_err());
        assert!(theta(1.0, -1.0, 1.0, Statistics::Fermion).is_err());
        assert!(equilibrium_occupation(1.0, 1.0, 0.0, Statistics::Boson).is_err());
    }

    #[test]
    fn occupation_examples() {
        let nb = equilibrium_occupation(LN_2, 1.0, 1.0, Statistics::Boson).unwrap();
        assert!((nb - 1.0).abs() < 1e-14);
        let nf = equilibrium_occupation(LN_2, 1.0, 1.0, Statistics::Fermion).unwrap();
        assert!((nf - 1.0 / 3.0).abs() < 1e-15);
        let n1 = equilibrium_occupation(1.0, 1.0, 1.0, Statistics::Boson).unwrap();
        assert!((n1 - 0.581976706869326).abs() < 1e-12);
    }

    #[test]
    fn evolved_occupation_examples() {
        let nu = C64::new(0.75, 0.0);
        assert_eq!(
            evolved_occupation_boson(C64::new(0.0, 0.0), 0.4, 1.0, 1.0).unwrap(),
            equilibrium_occupation(0.4, 1.0, 1.0, Statistics::Boson).unwrap()
        );
        assert!((evolved_occupation_boson(nu, 1e3, 1.0, 1.0).unwrap() - 0.5625).abs() < 1e-15);
        assert!((evolved_occupation_boson(nu, LN_2, 1.0, 1.0).unwrap() - 2.6875).abs() < 1e-13);
    }

    #[test]
    fn amplification_examples() {
        assert_eq!(amplification_factor(C64::new(0.0, 0.0)), 1.0);
        assert_eq!(amplification_factor(C64::new(0.0, 0.75)), 17.0 / 8.0);
        assert_eq!(amplification_factor(C64::new(1.0, 0.0)), 3.0);
    }

    #[test]
    fn q_moment_examples() {
        let (m, w) = (2.0f64, 1.5f64);
        let v = C64::new(1.0 / (2.0 * m * w).sqrt(), 0.0);
        assert!((q_moment(1, v, 0.0, 1.0).unwrap() - 1.0 / (2.0 * m * w)).abs() < 1e-15);
        let th = theta(LN_2 / w, w, 1.0, Statistics::Boson).unwrap();
        assert!((q_moment(1, v, th, 1.0).unwrap() - 3.0 / (2.0 * m * w)).abs() < 1e-14);
        let (q2, q4) = (q_moment(1, v, th, 1.0).unwrap(), q_moment(2, v, th, 1.0).unwrap());
        assert!((q4 / (q2 * q2) - 3.0).abs() < 1e-14);
        assert!(q_moment(0, v, th, 1.0).is_err());
    }
}
