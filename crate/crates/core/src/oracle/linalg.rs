//! Banded operators and exponential actions used by the propagators.
//!
//! A doubled boson state is stored row-major as an `N × N` array `Ψ` with
//! `ψ[n·N + m] = Ψ[n, m]`; `(L ⊗ I + I ⊗ R)ψ` is then `LΨ + ΨRᵀ`.

use nalgebra::DMatrix;

use crate::error::{Result, TfdError};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square matrix stored by diagonals: entry `(r, r + offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    pub n: usize,
    pub diags: Vec<(isize, Vec<C64>)>,
}

impl Banded {
    pub fn zeros(n: usize) -> Self {
        Banded { n, diags: Vec::new() }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut out = Banded::zeros(n);
        for off in -(n as isize - 1)..=(n as isize - 1) {
            let diag: Vec<C64> = (0..n)
                .map(|r| {
                    let c = r as isize + off;
                    if c >= 0 && (c as usize) < n {
                        m[(r, c as usize)]
                    } else {
                        ZERO
                    }
                })
                .collect();
            if diag.iter().any(|z| *z != ZERO) {
                out.diags.push((off, diag));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (off, d) in &self.diags {
            for (r, v) in d.iter().enumerate() {
                let c = r as isize + off;
                if c >= 0 && (c as usize) < self.n {
                    m[(r, c as usize)] += *v;
                }
            }
        }
        m
    }

    fn diag_mut(&mut self, off: isize) -> &mut Vec<C64> {
        let n = self.n;
        if let Some(pos) = self.diags.iter().position(|(o, _)| *o == off) {
            &mut self.diags[pos].1
        } else {
            self.diags.push((off, vec![ZERO; n]));
            &mut self.diags.last_mut().unwrap().1
        }
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, alpha: C64, other: &Banded) -> Banded {
        let mut out = self.clone();
        for (off, d) in &other.diags {
            let target = out.diag_mut(*off);
            for (t, v) in target.iter_mut().zip(d) {
                *t += alpha * v;
            }
        }
        out
    }

    pub fn scale(&self, alpha: C64) -> Banded {
        Banded {
            n: self.n,
            diags: self
                .diags
                .iter()
                .map(|(o, d)| (*o, d.iter().map(|v| v * alpha).collect()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Banded) -> Banded {
        let n = self.n as isize;
        let mut out = Banded::zeros(self.n);
        for (o1, d1) in &self.diags {
            for (o2, d2) in &other.diags {
                let off = o1 + o2;
                if off.abs() >= n {
                    continue;
                }
                let target = out.diag_mut(off);
                for r in 0..n {
                    let k = r + o1;
                    if k < 0 || k >= n || r + off < 0 || r + off >= n {
                        continue;
                    }
                    target[r as usize] += d1[r as usize] * d2[k as usize];
                }
            }
        }
        out
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Banded) -> Banded {
        self.mul(other).add_scaled(C64::new(-1.0, 0.0), &other.mul(self))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.diags.iter().map(|(_, d)| d[r].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out += B · Ψ` for a row-major `n × cols` array.
    fn apply_left(&self, psi: &[C64], cols: usize, out: &mut [C64]) {
        let n = self.n as isize;
        for (off, d) in &self.diags {
            for r in 0..n {
                let k = r + off;
                if k < 0 || k >= n {
                    continue;
                }
                let coef = d[r as usize];
                if coef == ZERO {
                    continue;
                }
                let src = &psi[k as usize * cols..(k as usize + 1) * cols];
                let dst = &mut out[r as usize * cols..(r as usize + 1) * cols];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += coef * s;
                }
            }
        }
    }

    /// `out += Ψ · Bᵀ` for a row-major `rows × n` array.
    fn apply_right_transpose(&self, psi: &[C64], rows: usize, out: &mut [C64]) {
        let n = self.n as isize;
        for row in 0..rows {
            let src = &psi[row * self.n..(row + 1) * self.n];
            let dst = &mut out[row * self.n..(row + 1) * self.n];
            for (off, d) in &self.diags {
                for c in 0..n {
                    let k = c + off;
                    if k < 0 || k >= n {
                        continue;
                    }
                    dst[c as usize] += d[c as usize] * src[k as usize];
                }
            }
        }
    }
}

/// Generator `Ψ ↦ Σ_k L_k Ψ R_kᵀ` on a row-major `rows × cols` array, i.e.
/// `Σ_k L_k ⊗ R_k`; a missing factor is the identity. Single-factor arrays
/// (`cols = 1`) only take left factors.
#[derive(Debug, Clone)]
pub struct KronGenerator {
    pub terms: Vec<(Option<Banded>, Option<Banded>)>,
}

impl KronGenerator {
    /// `L ⊗ I + I ⊗ R`.
    pub fn sum(left: Banded, right: Option<Banded>) -> Self {
        let mut terms = vec![(Some(left), None)];
        if let Some(r) = right {
            terms.push((None, Some(r)));
        }
        KronGenerator { terms }
    }

    fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(l, r)| l.as_ref().map_or(1.0, Banded::norm_inf) * r.as_ref().map_or(1.0, Banded::norm_inf))
            .sum()
    }

    fn apply(&self, psi: &[C64], cols: usize, out: &mut [C64], scratch: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let rows = psi.len() / cols;
        for (l, r) in &self.terms {
            match (l, r) {
                (Some(l), None) => l.apply_left(psi, cols, out),
                (None, Some(r)) => r.apply_right_transpose(psi, rows, out),
                (Some(l), Some(r)) => {
                    scratch.iter_mut().for_each(|z| *z = ZERO);
                    l.apply_left(psi, cols, scratch);
                    r.apply_right_transpose(scratch, rows, out);
                }
                (None, None) => {
                    for (o, p) in out.iter_mut().zip(psi) {
                        *o += p;
                    }
                }
            }
        }
    }

    /// Replace `psi` by `exp(G)·psi` with a truncated Taylor series, split
    /// into pieces of generator norm at most one.
    pub fn exp_action(&self, psi: &mut [C64], cols: usize) -> Result<()> {
        let norm = self.norm_bound();
        if !norm.is_finite() {
            return Err(TfdError::NonFinite("generator norm".into()));
        }
        let pieces = norm.ceil().max(1.0) as usize;
        let scale = 1.0 / pieces as f64;
        let mut term = vec![ZERO; psi.len()];
        let mut next = vec![ZERO; psi.len()];
        let mut scratch = vec![ZERO; psi.len()];
        for _ in 0..pieces {
            term.copy_from_slice(psi);
            let base: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            for k in 1..=60 {
                self.apply(&term, cols, &mut next, &mut scratch);
                let f = scale / k as f64;
                let mut size = 0.0;
                for (t, nx) in term.iter_mut().zip(&next) {
                    *t = nx * f;
                    size += t.norm_sqr();
                }
                for (p, t) in psi.iter_mut().zip(&term) {
                    *p += t;
                }
                if size.sqrt() <= 1e-18 * base {
                    break;
                }
                if k == 60 {
                    return Err(TfdError::NonFinite("Taylor series did not converge".into()));
                }
            }
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TfdError::NonFinite("propagated state".into()));
        }
        Ok(())
    }
}

/// Dense `exp(m)`.
pub fn expm(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let e = m.clone().exp();
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TfdError::NonFinite("matrix exponential".into()));
    }
    Ok(e)
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> DMatrix<C64> {
        DMatrix::from_fn(n, n, |r, c| {
            let d = r as isize - c as isize;
            if d.abs() <= 2 {
                C64::new((seed * (r + 2 * c + 1) as f64).sin(), (seed * (3 * r + c) as f64).cos())
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn banded_roundtrip_and_products() {
        let a = sample(7, 0.3);
        let b = sample(7, 1.1);
        let (ba, bb) = (Banded::from_dense(&a), Banded::from_dense(&b));
        assert_eq!(ba.to_dense(), a);
        assert!(max_abs(&(ba.mul(&bb).to_dense() - &a * &b)) < 1e-13);
        assert!(max_abs(&(ba.commutator(&bb).to_dense() - (&a * &b - &b * &a))) < 1e-13);
    }

    #[test]
    fn exp_action_matches_dense_exponential() {
        let n = 6;
        let l = sample(n, 0.7) * C64::new(0.0, -1.3);
        let r = sample(n, 0.2) * C64::new(0.4, 0.9);
        let gen = KronGenerator::sum(Banded::from_dense(&l), Some(Banded::from_dense(&r)));
        let mut psi: Vec<C64> = (0..n * n).map(|k| C64::new((k as f64).cos(), (k as f64 * 0.3).sin())).collect();
        let psi_mat = DMatrix::from_row_slice(n, n, &psi);
        gen.exp_action(&mut psi, n).unwrap();
        let want = expm(&l).unwrap() * psi_mat * expm(&r).unwrap().transpose();
        let got = DMatrix::from_row_slice(n, n, &psi);
        assert!(max_abs(&(got - want)) < 1e-11);
    }

    #[test]
    fn product_terms_match_kronecker_products() {
        let n = 5;
        let l = sample(n, 0.4);
        let r = sample(n, 0.9);
        let gen = KronGenerator {
            terms: vec![(Some(Banded::from_dense(&l)), Some(Banded::from_dense(&r)))],
        };
        let psi: Vec<C64> = (0..n * n).map(|k| C64::new((k as f64).sin(), 0.1 * k as f64)).collect();
        let mut out = vec![ZERO; n * n];
        let mut scratch = vec![ZERO; n * n];
        gen.apply(&psi, n, &mut out, &mut scratch);
        let want = kron(&l, &r) * nalgebra::DVector::from_row_slice(&psi);
        for k in 0..n * n {
            assert!((out[k] - want[k]).norm() < 1e-13);
        }
    }
}
