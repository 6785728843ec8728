//! Truncated Fourier-Taylor series over the annulus `T^n x R^n`.
//!
//! A series is a finite sum
//!
//! ```text
//!     f(θ, r) = Σ_{|k|₁ ≤ kmax, |m|₁ ≤ mmax}  c_{k,m} e^{2πi k·θ} r^m
//! ```
//!
//! with complex coefficients satisfying the reality condition
//! `c_{-k,m} = conj(c_{k,m})`, so that `f` is real on real arguments.
//! Every analytic object in the engine (Hamiltonians, quadratic forms,
//! potentials, vector-field components) is one of these.
//!
//! The strip parameter `s` is *not* stored in the series: norms are evaluated
//! against a supplied `s` through [`FourierTaylorSeries::majorant_norm`], the
//! computable weighted-l1 upper bound
//!
//! ```text
//!     |f|_s  :=  Σ |c_{k,m}| e^{2πs|k|₁} s^{|m|₁}
//! ```
//!
//! which dominates the sup norm on the closed strip
//! `max(|Im θ_j|, |r_j|) ≤ s`. All smallness hypotheses checked with it are
//! therefore conservative.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum number of angle/action pairs supported by the fixed-size index.
pub const MAX_DIM: usize = 4;

/// Relative floor used when removing transform-noise coefficients; see
/// [`FourierTaylorSeries::chop`].
pub const CHOP_RELATIVE: f64 = 8.0 * f64::EPSILON;

/// Compact (k, m) multi-index. Components beyond `dim` stay zero so the
/// derived ordering is consistent across dimensions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Index {
    k: [i16; MAX_DIM],
    m: [u8; MAX_DIM],
}

impl Index {
    pub fn new(k: &[i64], m: &[u32]) -> Result<Self> {
        let dim = k.len();
        if dim == 0 || dim > MAX_DIM || m.len() != dim {
            return Err(Error::UnsupportedDimension(dim.max(m.len())));
        }
        let mut idx = Index {
            k: [0; MAX_DIM],
            m: [0; MAX_DIM],
        };
        for j in 0..dim {
            if k[j].unsigned_abs() > i16::MAX as u64 || m[j] > u8::MAX as u32 {
                return Err(Error::IndexOutOfBounds {
                    what: format!("k = {k:?}, m = {m:?}"),
                    kmax: i16::MAX as u32,
                    mmax: u8::MAX as u32,
                });
            }
            idx.k[j] = k[j] as i16;
            idx.m[j] = m[j] as u8;
        }
        Ok(idx)
    }

    pub fn k(&self, j: usize) -> i64 {
        i64::from(self.k[j])
    }

    pub fn m(&self, j: usize) -> u32 {
        u32::from(self.m[j])
    }

    pub fn k_vec(&self, dim: usize) -> Vec<i64> {
        (0..dim).map(|j| self.k(j)).collect()
    }

    pub fn m_vec(&self, dim: usize) -> Vec<u32> {
        (0..dim).map(|j| self.m(j)).collect()
    }

    /// l1 norm of the Fourier part.
    pub fn k_abs(&self) -> u32 {
        self.k.iter().map(|x| x.unsigned_abs() as u32).sum()
    }

    /// l1 norm (total degree) of the Taylor part.
    pub fn m_abs(&self) -> u32 {
        self.m.iter().map(|&x| u32::from(x)).sum()
    }

    /// The reality partner (-k, m).
    pub fn mirror(&self) -> Self {
        let mut k = self.k;
        for x in &mut k {
            *x = -*x;
        }
        Index { k, m: self.m }
    }

    fn is_self_mirrored(&self) -> bool {
        self.k.iter().all(|&x| x == 0)
    }
}

/// Strip half-width `s` and the width `sigma` to be consumed by an operation
/// that loses analyticity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StripParams {
    pub s: f64,
    pub sigma: f64,
}

impl StripParams {
    pub fn new(s: f64, sigma: f64) -> Result<Self> {
        if !(s > 0.0 && sigma > 0.0 && s + sigma < 1.0 && s.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidStrip { s, sigma });
        }
        Ok(StripParams { s, sigma })
    }

    /// The wider strip `s + sigma` on which inputs live.
    pub fn outer(&self) -> f64 {
        self.s + self.sigma
    }
}

/// Truncated Fourier-Taylor series; see the module docs for the conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTaylorSeries {
    dim: usize,
    kmax: u32,
    mmax: u32,
    coeffs: BTreeMap<Index, Complex64>,
}

/// Majorant weight of one coefficient: `e^{2πs|k|₁} s^{|m|₁}` (with `s^0 = 1`).
pub fn majorant_weight(s: f64, k_abs: u32, m_abs: u32) -> f64 {
    let angular = (TAU * s * f64::from(k_abs)).exp();
    let radial = if m_abs == 0 {
        1.0
    } else {
        s.powi(m_abs as i32)
    };
    angular * radial
}

impl FourierTaylorSeries {
    /// Build a series from explicit coefficients, enforcing reality by the
    /// symmetrization `c_{k,m} <- (c_{k,m} + conj(c_{-k,m})) / 2`.
    pub fn new(
        dim: usize,
        kmax: u32,
        mmax: u32,
        coeffs: &[(Vec<i64>, Vec<u32>, Complex64)],
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if kmax == 0 {
            return Err(Error::Config("kmax must be positive".into()));
        }
        let mut raw: BTreeMap<Index, Complex64> = BTreeMap::new();
        for (k, m, c) in coeffs {
            if k.len() != dim || m.len() != dim {
                return Err(Error::DimensionMismatch(k.len(), dim));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFiniteCoefficient(format!("k = {k:?}, m = {m:?}")));
            }
            let idx = Index::new(k, m)?;
            if idx.k_abs() > kmax || idx.m_abs() > mmax {
                return Err(Error::IndexOutOfBounds {
                    what: format!("k = {k:?}, m = {m:?}"),
                    kmax,
                    mmax,
                });
            }
            *raw.entry(idx).or_insert(Complex64::ZERO) += c;
        }
        let mut out = FourierTaylorSeries {
            dim,
            kmax,
            mmax,
            coeffs: raw,
        };
        out.symmetrize();
        Ok(out)
    }

    pub fn zero(dim: usize, kmax: u32, mmax: u32) -> Self {
        FourierTaylorSeries {
            dim,
            kmax,
            mmax,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, kmax: u32, mmax: u32, value: f64) -> Self {
        let mut s = Self::zero(dim, kmax, mmax);
        if value != 0.0 {
            s.coeffs.insert(
                Index {
                    k: [0; MAX_DIM],
                    m: [0; MAX_DIM],
                },
                Complex64::new(value, 0.0),
            );
        }
        s
    }

    /// The monomial `r_axis`.
    pub fn action_monomial(dim: usize, kmax: u32, mmax: u32, axis: usize) -> Self {
        let mut s = Self::zero(dim, kmax, mmax);
        let mut m = [0u8; MAX_DIM];
        m[axis] = 1;
        s.coeffs
            .insert(Index { k: [0; MAX_DIM], m }, Complex64::new(1.0, 0.0));
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn mmax(&self) -> u32 {
        self.mmax
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, k: &[i64], m: &[u32]) -> Complex64 {
        match Index::new(k, m) {
            Ok(idx) => self.coeffs.get(&idx).copied().unwrap_or(Complex64::ZERO),
            Err(_) => Complex64::ZERO,
        }
    }

    pub fn coeff_idx(&self, idx: &Index) -> Complex64 {
        self.coeffs.get(idx).copied().unwrap_or(Complex64::ZERO)
    }

    pub(crate) fn insert_raw(&mut self, idx: Index, c: Complex64) {
        if c != Complex64::ZERO {
            self.coeffs.insert(idx, c);
        }
    }

    /// Largest coefficient magnitude (0 for the zero series).
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Enforce `c_{-k,m} = conj(c_{k,m})` by pair-averaging, and purge exact
    /// zeros. Idempotent; cheap relative to any transform that precedes it.
    pub fn symmetrize(&mut self) {
        let keys: Vec<Index> = self.coeffs.keys().copied().collect();
        let mut done: BTreeMap<Index, Complex64> = BTreeMap::new();
        for idx in keys {
            if done.contains_key(&idx) {
                continue;
            }
            let c = self.coeffs.get(&idx).copied().unwrap_or(Complex64::ZERO);
            if idx.is_self_mirrored() {
                done.insert(idx, Complex64::new(c.re, 0.0));
            } else {
                let mir = idx.mirror();
                let cm = self.coeffs.get(&mir).copied().unwrap_or(Complex64::ZERO);
                let sym = (c + cm.conj()) * 0.5;
                done.insert(idx, sym);
                done.insert(mir, sym.conj());
            }
        }
        done.retain(|_, c| *c != Complex64::ZERO);
        self.coeffs = done;
    }

    /// Check the reality invariant to a tolerance, relative to the largest
    /// coefficient. Drift beyond it signals corrupted coefficients.
    pub fn assert_reality(&self, tol: f64) -> Result<()> {
        let scale = self.max_abs_coeff().max(1.0);
        for (idx, c) in &self.coeffs {
            let cm = self.coeff_idx(&idx.mirror());
            let drift = (c - cm.conj()).norm();
            if drift > tol * scale {
                return Err(Error::RealityViolation {
                    imag: drift,
                    tol: tol * scale,
                });
            }
        }
        Ok(())
    }

    pub fn is_theta_only(&self) -> bool {
        self.coeffs.keys().all(|idx| idx.m_abs() == 0)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// Coefficient-wise sum. The result truncation is the max of the operands'.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let mut out = self.clone();
        out.kmax = self.kmax.max(other.kmax);
        out.mmax = self.mmax.max(other.mmax);
        for (idx, c) in &other.coeffs {
            let e = out.coeffs.entry(*idx).or_insert(Complex64::ZERO);
            *e += c;
            if *e == Complex64::ZERO {
                out.coeffs.remove(idx);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        if lambda == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for c in out.coeffs.values_mut() {
            *c *= lambda;
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Full convolution product, truncated to the result's `(kmax, mmax)`
    /// (the max of the operands'). The majorant mass of the discarded tail,
    /// weighted at the caller-supplied strip `s_tail`, is returned alongside.
    pub fn mul(&self, other: &Self, s_tail: f64) -> Result<(Self, f64)> {
        self.check_same_dim(other)?;
        let kmax = self.kmax.max(other.kmax);
        let mmax = self.mmax.max(other.mmax);
        let mut out = FourierTaylorSeries::zero(self.dim, kmax, mmax);
        let mut tail = 0.0;
        for (ia, ca) in &self.coeffs {
            for (ib, cb) in &other.coeffs {
                let mut k = [0i16; MAX_DIM];
                let mut m = [0u8; MAX_DIM];
                let mut k_abs = 0u32;
                let mut m_abs = 0u32;
                for j in 0..MAX_DIM {
                    k[j] = ia.k[j] + ib.k[j];
                    m[j] = ia.m[j] + ib.m[j];
                    k_abs += k[j].unsigned_abs() as u32;
                    m_abs += u32::from(m[j]);
                }
                let c = ca * cb;
                if k_abs <= kmax && m_abs <= mmax {
                    let e = out
                        .coeffs
                        .entry(Index { k, m })
                        .or_insert(Complex64::ZERO);
                    *e += c;
                } else {
                    tail += c.norm() * majorant_weight(s_tail, k_abs, m_abs);
                }
            }
        }
        out.coeffs.retain(|_, c| *c != Complex64::ZERO);
        Ok((out, tail))
    }

    /// d/dθ_j: multiplies `c_{k,m}` by `2πi k_j`. Exact on stored coefficients.
    pub fn deriv_theta(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::DimensionMismatch(axis + 1, self.dim));
        }
        let mut out = FourierTaylorSeries::zero(self.dim, self.kmax, self.mmax);
        for (idx, c) in &self.coeffs {
            let kj = idx.k(axis);
            if kj != 0 {
                out.coeffs
                    .insert(*idx, c * Complex64::new(0.0, TAU * kj as f64));
            }
        }
        Ok(out)
    }

    /// d/dr_j: shifts `m_j` down with factor `m_j`. Exact on stored coefficients.
    pub fn deriv_r(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::DimensionMismatch(axis + 1, self.dim));
        }
        let mut out = FourierTaylorSeries::zero(self.dim, self.kmax, self.mmax);
        for (idx, c) in &self.coeffs {
            let mj = idx.m(axis);
            if mj > 0 {
                let mut m = idx.m;
                m[axis] -= 1;
                let e = out
                    .coeffs
                    .entry(Index { k: idx.k, m })
                    .or_insert(Complex64::ZERO);
                *e += c * f64::from(mj);
            }
        }
        out.coeffs.retain(|_, c| *c != Complex64::ZERO);
        Ok(out)
    }

    /// Derivative along the constant angle field `alpha`:
    /// multiplies `c_{k,m}` by `2πi (k·alpha)`. This is the operator whose
    /// mode-wise inversion is the small-divisor solve.
    pub fn directional_theta_derivative(&self, alpha: &[f64]) -> Result<Self> {
        if alpha.len() != self.dim {
            return Err(Error::DimensionMismatch(alpha.len(), self.dim));
        }
        let mut out = FourierTaylorSeries::zero(self.dim, self.kmax, self.mmax);
        for (idx, c) in &self.coeffs {
            let ka: f64 = (0..self.dim).map(|j| idx.k(j) as f64 * alpha[j]).sum();
            if ka != 0.0 {
                let v = c * Complex64::new(0.0, TAU * ka);
                if v != Complex64::ZERO {
                    out.coeffs.insert(*idx, v);
                }
            }
        }
        Ok(out)
    }

    /// Taylor jet: keeps the terms with `|m|₁ <= order`.
    pub fn jet(&self, order: u32) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|idx, _| idx.m_abs() <= order);
        out
    }

    /// Taylor remainder: keeps the terms with `|m|₁ > order`.
    /// `jet(d) + remainder(d)` reproduces the series coefficient-exactly.
    pub fn remainder(&self, order: u32) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|idx, _| idx.m_abs() > order);
        out
    }

    /// Angle average: keeps the `k = 0` terms (all Taylor orders).
    pub fn theta_average(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|idx, _| idx.k_abs() == 0);
        out
    }

    /// The scalar average of the `m = 0` part.
    pub fn mean_value(&self) -> f64 {
        self.coeffs
            .iter()
            .find(|(idx, _)| idx.k_abs() == 0 && idx.m_abs() == 0)
            .map(|(_, c)| c.re)
            .unwrap_or(0.0)
    }

    /// Point evaluation `Σ c_{k,m} e^{2πi k·θ} r^m`, real part returned.
    ///
    /// The full (both-signs) summation is kept so that the imaginary part is
    /// a live check of the reality invariant: it errors beyond
    /// `1e-12 (1 + |result|)`, which signals corrupted coefficients.
    pub fn evaluate(&self, theta: &[f64], r: &[f64]) -> Result<f64> {
        if theta.len() != self.dim || r.len() != self.dim {
            return Err(Error::DimensionMismatch(theta.len(), self.dim));
        }
        let z = self.eval_complex(theta, r);
        let tol = 1e-12 * (1.0 + z.re.abs());
        if z.im.abs() > tol {
            return Err(Error::RealityViolation {
                imag: z.im.abs(),
                tol,
            });
        }
        Ok(z.re)
    }

    /// Raw complex evaluation (no reality check); hot paths use this.
    pub fn eval_complex(&self, theta: &[f64], r: &[f64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (idx, c) in &self.coeffs {
            let mut phase = 0.0;
            let mut rm = 1.0;
            for j in 0..self.dim {
                phase += idx.k(j) as f64 * theta[j];
                for _ in 0..idx.m(j) {
                    rm *= r[j];
                }
            }
            let (sin, cos) = (TAU * phase).sin_cos();
            acc += c * Complex64::new(cos, sin) * rm;
        }
        acc
    }

    /// Computable strip norm `Σ |c_{k,m}| e^{2πs|k|₁} s^{|m|₁}`; monotone
    /// increasing in `s` and an upper bound for the sup norm on the strip.
    pub fn majorant_norm(&self, s: f64) -> f64 {
        // The + 0.0 normalizes the empty sum, which is -0.0 in Rust.
        self.coeffs
            .iter()
            .map(|(idx, c)| c.norm() * majorant_weight(s, idx.k_abs(), idx.m_abs()))
            .sum::<f64>()
            + 0.0
    }

    /// Remove coefficients with `|c| <= floor` (transform noise), returning
    /// the plain l1 mass dropped.
    ///
    /// Grid transforms leave a flat noise floor of order `eps * scale` on
    /// every mode; at kmax = 64 the weight `e^{2πs|k|₁}` would amplify that
    /// noise into the norm by up to ~1e17, so chopping is what keeps majorant
    /// norms meaningful. The dropped mass is noise, not analytic signal, so
    /// it is charged flat (its real-torus size) in the truncation-debt log.
    pub fn chop(&mut self, floor: f64) -> f64 {
        let mut debt = 0.0;
        self.coeffs.retain(|_, c| {
            let keep = c.norm() > floor;
            if !keep {
                debt += c.norm();
            }
            keep
        });
        debt + 0.0
    }

    /// Fraction of the l2 coefficient energy sitting in the top third of the
    /// retained Fourier band, `|k|₁ > 2 kmax / 3`. Large values mean the
    /// representation is about to alias.
    pub fn high_mode_energy_fraction(&self) -> f64 {
        let cutoff = 2 * self.kmax / 3;
        let mut top = 0.0;
        let mut total = 0.0;
        for (idx, c) in &self.coeffs {
            let e = c.norm_sqr();
            total += e;
            if idx.k_abs() > cutoff {
                top += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    }

    /// Restrict to the truncation box of this series (used after raising
    /// kmax/mmax bookkeeping); drops nothing unless bounds shrank.
    pub fn retruncate(&mut self, kmax: u32, mmax: u32, s_debt: f64) -> f64 {
        self.kmax = kmax;
        self.mmax = mmax;
        let mut debt = 0.0;
        self.coeffs.retain(|idx, c| {
            let keep = idx.k_abs() <= kmax && idx.m_abs() <= mmax;
            if !keep {
                debt += c.norm() * majorant_weight(s_debt, idx.k_abs(), idx.m_abs());
            }
            keep
        });
        debt
    }
}
