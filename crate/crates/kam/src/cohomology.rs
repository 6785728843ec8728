//! The small-divisor solver and Diophantine diagnostics.
//!
//! This is the only place frequencies divide coefficients. The directional
//! derivative along the constant field `alpha` acts mode-wise as
//! multiplication by `2πi (k·alpha)`, so its inverse on zero-average input is
//!
//! ```text
//!     f_k = g_k / (2πi k·alpha)        (k != 0)
//! ```
//!
//! with the *true* real number `k·alpha` in the denominator — that is what
//! makes the solve round-trip exactly. The safety diagnostics (margin scan,
//! divisor floor, amplification spectrum) use the conservative rotation-vector
//! magnitude `dist(k·alpha, Z)`, which never exceeds `|k·alpha|`, so a guard
//! that passes for the distance also passes for the divisor actually used.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::series::FourierTaylorSeries;
use crate::{Error, Result};

/// Distance from `x` to the nearest integer.
pub fn dist_to_integers(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Diophantine frequency vector with its scan-verified margin data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frequency {
    pub alpha: Vec<f64>,
    /// Largest Diophantine constant valid up to the verified truncation.
    pub gamma: f64,
    pub tau: f64,
    /// Numerical cutoff below which a divisor aborts the solve.
    pub divisor_floor: f64,
    /// Truncation order the margin scan covered.
    pub verified_kmax: u32,
    /// min over 0 < |k|1 <= verified_kmax of dist(k·alpha, Z) |k|1^tau.
    pub min_margin: f64,
    /// The minimizing k.
    pub argmin_k: Vec<i64>,
}

/// Result of the exhaustive margin scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiophantineScan {
    pub min_margin: f64,
    pub argmin_k: Vec<i64>,
    /// Largest gamma with dist(k·alpha, Z) >= gamma |k|1^-tau for all scanned k.
    pub admissible_gamma: f64,
}

/// One line of the small-divisor report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivisorLine {
    pub k: Vec<i64>,
    /// dist(k·alpha, Z)
    pub divisor: f64,
    /// 1 / (2π divisor); infinite on exact resonance.
    pub amplification: f64,
}

/// Enumerate the canonical half of the l1 ball: 0 < |k|1 <= kmax with the
/// first nonzero component positive (the mirror -k carries the same divisor).
fn half_ball(dim: usize, kmax: u32) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let km = kmax as i64;
    let mut cur = vec![0i64; dim];
    fn rec(dim: usize, axis: usize, budget: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if axis == dim {
            if cur.iter().any(|&x| x != 0) {
                let first = cur.iter().find(|&&x| x != 0).copied().unwrap_or(0);
                if first > 0 {
                    out.push(cur.clone());
                }
            }
            return;
        }
        for v in -budget..=budget {
            cur[axis] = v;
            rec(dim, axis + 1, budget - v.abs(), cur, out);
        }
        cur[axis] = 0;
    }
    rec(dim, 0, km, &mut cur, &mut out);
    out.sort();
    out
}

/// Exhaustive scan of `dist(k·alpha, Z) |k|1^tau` over `0 < |k|1 <= kmax`.
pub fn check_diophantine(alpha: &[f64], tau: f64, kmax: u32) -> Result<DiophantineScan> {
    if alpha.is_empty() || alpha.len() > crate::series::MAX_DIM {
        return Err(Error::UnsupportedDimension(alpha.len()));
    }
    if kmax < 1 {
        return Err(Error::Config("kmax must be >= 1 for the margin scan".into()));
    }
    let mut min_margin = f64::INFINITY;
    let mut argmin: Vec<i64> = Vec::new();
    for k in half_ball(alpha.len(), kmax) {
        let ka: f64 = k.iter().zip(alpha).map(|(&ki, &a)| ki as f64 * a).sum();
        let l1: u32 = k.iter().map(|x| x.unsigned_abs() as u32).sum();
        let margin = dist_to_integers(ka) * f64::from(l1).powf(tau);
        if margin < min_margin {
            min_margin = margin;
            argmin = k;
        }
    }
    Ok(DiophantineScan {
        min_margin,
        argmin_k: argmin,
        admissible_gamma: min_margin,
    })
}

impl Frequency {
    /// Build a frequency whose margin has been verified by the scan up to
    /// `kmax`. Errors on exact resonance.
    pub fn checked(alpha: &[f64], tau: f64, kmax: u32, divisor_floor: f64) -> Result<Self> {
        let scan = check_diophantine(alpha, tau, kmax)?;
        if scan.min_margin == 0.0 {
            return Err(Error::Resonance {
                k: scan.argmin_k.clone(),
            });
        }
        Ok(Frequency {
            alpha: alpha.to_vec(),
            gamma: scan.admissible_gamma,
            tau,
            divisor_floor,
            verified_kmax: kmax,
            min_margin: scan.min_margin,
            argmin_k: scan.argmin_k,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn k_dot_alpha(&self, k: &[i64]) -> f64 {
        k.iter()
            .zip(&self.alpha)
            .map(|(&ki, &a)| ki as f64 * a)
            .sum()
    }
}

/// Solve `f'·alpha = g` for the unique zero-average `f`, given zero-average
/// theta-only `g`. Coefficient division by `2πi k·alpha`, guarded by the
/// divisor floor on `dist(k·alpha, Z)`.
pub fn solve_homological(g: &FourierTaylorSeries, freq: &Frequency) -> Result<FourierTaylorSeries> {
    if g.dim() != freq.dim() {
        return Err(Error::DimensionMismatch(g.dim(), freq.dim()));
    }
    if !g.is_theta_only() {
        return Err(Error::NotThetaOnly);
    }
    if g.kmax() > freq.verified_kmax {
        return Err(Error::UnverifiedTruncation {
            requested: g.kmax(),
            verified: freq.verified_kmax,
        });
    }
    // The caller must have subtracted the average (as the triangular solve
    // does); a residual average beyond roundoff is a logic error upstream.
    let avg = g.mean_value().abs();
    let tol = 1e-13 * g.majorant_norm(0.0).max(1.0);
    if avg > tol {
        return Err(Error::NonzeroAverage { avg, tol });
    }
    let mut f = FourierTaylorSeries::zero(g.dim(), g.kmax(), g.mmax());
    for (idx, c) in g.iter() {
        if idx.k_abs() == 0 {
            continue; // residual average at roundoff level
        }
        let kv = idx.k_vec(g.dim());
        let ka = freq.k_dot_alpha(&kv);
        if dist_to_integers(ka) < freq.divisor_floor {
            return Err(Error::SmallDivisor {
                k: kv,
                divisor: dist_to_integers(ka),
                floor: freq.divisor_floor,
            });
        }
        let denom = num_complex::Complex64::new(0.0, TAU * ka);
        f.insert_raw(*idx, c / denom);
    }
    f.symmetrize();
    Ok(f)
}

/// Amplification report for every mode in the canonical half-ball, sorted by
/// amplification descending. Exact resonances come out with infinite
/// amplification rather than an error: this is a diagnostic.
pub fn small_divisor_spectrum(freq: &Frequency, kmax: u32) -> Vec<DivisorLine> {
    let mut lines: Vec<DivisorLine> = half_ball(freq.dim(), kmax)
        .into_iter()
        .map(|k| {
            let divisor = dist_to_integers(freq.k_dot_alpha(&k));
            let amplification = if divisor == 0.0 {
                f64::INFINITY
            } else {
                1.0 / (TAU * divisor)
            };
            DivisorLine {
                k,
                divisor,
                amplification,
            }
        })
        .collect();
    lines.sort_by(|a, b| {
        b.amplification
            .partial_cmp(&a.amplification)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.k.cmp(&b.k))
    });
    lines
}

/// The golden mean (sqrt(5) - 1) / 2, the canonical n = 1 test frequency.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;
