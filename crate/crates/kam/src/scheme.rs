//! The quadratic Newton scheme on shrinking analyticity strips.
//!
//! One step maps `(K, Ḣ)` to `(K + K̇, (K + Ḣ) ∘ exp(−Ġ) − (K + K̇))` where
//! `(K̇, Ġ)` solves the linearized conjugacy equation; the defect is squared
//! (up to a width-loss factor) at the cost of strip width. The driver runs
//! the schedule `s_j = s + 2⁻ʲσ`, accumulates the conjugating map
//! `γ = exp(−Ġ₀) ∘ exp(−Ġ₁) ∘ ⋯`, and certifies convergence against the
//! abstract fixed-point bounds.

use serde::{Deserialize, Serialize};

use crate::grid::Discretization;
use crate::group::{
    compose, contraction_estimate, gamma0, inverse, pullback, time_one_flow, GroupElement,
};
use crate::normalform::{
    check_nondegeneracy, solve_linearized, KolmogorovForm, LieElement, NONDEGENERACY_FLOOR,
};
use crate::series::{FourierTaylorSeries, StripParams, CHOP_RELATIVE};
use crate::{Error, Result};

/// Default smallness-gate constant; advisory (warn-only), since the
/// underlying constants are existential. See `newton_step`.
pub const DEFAULT_GAMMA2: f64 = 1e-2;

/// Strip schedule and stopping rules for a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleParams {
    /// Target strip: the iteration ends on `|Im θ| <= s`.
    pub s: f64,
    /// Total width budget consumed over all steps.
    pub sigma: f64,
    pub max_iters: usize,
    pub defect_tol: f64,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        StripParams::new(self.s, self.sigma)?;
        if self.defect_tol <= 0.0 {
            return Err(Error::Config("defect_tol must be positive".into()));
        }
        Ok(())
    }

    /// Width consumed by step j: `σ_j = 2^{-(j+1)} σ` (exact in floating
    /// point), so the partial widths telescope to `σ`.
    pub fn sigma_j(&self, j: usize) -> f64 {
        self.sigma * (0.5f64).powi(j as i32 + 1)
    }
}

/// Constants of the abstract fixed-point certificate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertificateConstants {
    /// Radius of the x-ball the drifting component must stay in.
    pub x_ball: f64,
    pub gamma: f64,
    pub tau: f64,
    pub c: f64,
    pub t: f64,
}

impl CertificateConstants {
    pub fn new(x_ball: f64, gamma: f64, tau: f64, c: f64, t: f64) -> Result<Self> {
        if !(x_ball > 0.0 && gamma > 0.0 && tau > 0.0 && c > 0.0 && t > 0.0) {
            return Err(Error::CertificateDomain {
                reason: "all certificate constants must be positive".into(),
            });
        }
        if c < (2.0f64).powf(-t) {
            return Err(Error::CertificateDomain {
                reason: format!("need c >= 2^-t, got c = {c}, 2^-t = {}", (2.0f64).powf(-t)),
            });
        }
        Ok(CertificateConstants {
            x_ball,
            gamma,
            tau,
            c,
            t,
        })
    }
}

/// One executed Newton step, as recorded in the report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub j: usize,
    /// Strip the incoming defect lives on.
    pub s_in: f64,
    /// Strip the step lands on.
    pub s_out: f64,
    pub sigma: f64,
    /// `|Ḣ_j|` at `s_in`.
    pub defect_in: f64,
    /// `|Ḣ_{j+1}|` at `s_out`.
    pub defect_out: f64,
    pub kdot_norm: f64,
    pub gdot_norm: f64,
    /// `γ₀ δ² − |Ġ|_{s_out+δ}` with `δ = σ/2`: the analytic exponential
    /// gate margin (negative when formally violated; the empirical
    /// contraction gate below is what is enforced).
    pub exp_margin: f64,
    /// Empirical Lipschitz bound of the Picard operator (enforced <= 1/2).
    pub contraction: f64,
    pub smallness_lhs: f64,
    pub smallness_rhs: f64,
    pub twist_condition: f64,
    pub second_solve_average: f64,
    pub truncation_debt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Converged,
    MaxIters,
    Diverged,
    Failed,
}

/// Step-by-step diagnostics of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationReport {
    pub steps: Vec<StepRecord>,
    /// Defect norms `|Ḣ_j|_{s_j}`, including the final one.
    pub defect_norms: Vec<f64>,
    pub outcome: RunOutcome,
    /// Least-squares slope of `ln d_{j+1}` against `ln d_j` over the pairs
    /// above the fit floor; 2 for clean quadratic convergence.
    pub fitted_exponent: Option<f64>,
    /// Envelope fit of `d_{j+1} <= c σ_j^{-t} d_j²` over all recorded pairs
    /// (the smallest c that dominates them at the fitted t).
    pub fitted_c: Option<f64>,
    pub fitted_t: Option<f64>,
    /// Majorant residual of `H ∘ γ − K` at the target strip (success only).
    pub conjugacy_residual: Option<f64>,
    /// Max over a 256-per-axis real grid of `|H(γ(θ,0)) − K(θ,0)|`.
    pub conjugacy_pointwise: Option<f64>,
    pub truncation_debt: f64,
    pub warnings: Vec<String>,
    /// Error message when outcome is `Failed`.
    pub failure: Option<String>,
}

/// Output of one Newton step.
pub struct NewtonStep {
    pub k_new: KolmogorovForm,
    pub h_new: FourierTaylorSeries,
    pub g_dot: LieElement,
    /// `exp(−Ġ)`, ready for the conjugacy accumulator.
    pub exp_element: GroupElement,
    pub record: StepRecord,
    pub warnings: Vec<String>,
}

/// One application of the Newton map
/// `φ(K, Ḣ) = (K + K̇, (K + Ḣ) ∘ exp(−Ġ) − (K + K̇))`.
///
/// Hard gates: non-degeneracy of the averaged twist (against the reference
/// determinant), the small-divisor floor inside the solve, and the empirical
/// contraction bound of the exponential. The analytic smallness inequalities
/// (`(1+|K|)|Ḣ| ≤ γ₂σ^τ₂` and the `γ₀δ²` exponential gate) carry
/// existential or very conservative constants, so they are recorded and
/// warned about rather than enforced; their margins land in the step record.
#[allow(clippy::too_many_arguments)]
pub fn newton_step(
    k: &KolmogorovForm,
    h_dot: &FourierTaylorSeries,
    strips: &StripParams,
    disc: &Discretization,
    j: usize,
    reference_det: f64,
    gamma2: f64,
    tau2: f64,
) -> Result<NewtonStep> {
    let n = k.dim();
    let s_out = strips.s;
    let s_in = strips.outer();
    let mut warnings = Vec::new();

    let nd = check_nondegeneracy(k, NONDEGENERACY_FLOOR, Some(reference_det));
    if !nd.ok {
        return Err(Error::NondegeneracyLost {
            det: nd.det,
            floor: NONDEGENERACY_FLOOR.max(0.5 * reference_det.abs()),
        });
    }

    let k_series = k.assemble(disc.kmax(), disc.mmax())?;
    let defect_in = h_dot.majorant_norm(s_in);
    let smallness_lhs = (1.0 + k_series.majorant_norm(s_in)) * defect_in;
    let smallness_rhs = gamma2 * strips.sigma.powf(tau2);
    if smallness_lhs > smallness_rhs {
        warnings.push(format!(
            "step {j}: smallness (1+|K|)|Hdot| = {smallness_lhs:.3e} exceeds gamma2*sigma^tau2 = {smallness_rhs:.3e}"
        ));
    }

    let solution = solve_linearized(k, h_dot, s_out)?;
    let mut debt = solution.truncation_debt;

    let delta = strips.sigma / 2.0;
    let exp_margin = gamma0(n) * delta * delta - solution.g_dot.norm(s_out + delta);
    if exp_margin < 0.0 {
        warnings.push(format!(
            "step {j}: analytic exponential gate margin {exp_margin:.3e} is negative; relying on the contraction gate"
        ));
    }
    let contraction = contraction_estimate(&solution.g_dot);
    let exp_element = time_one_flow(&solution.g_dot.neg(), disc)?;

    // Reassemble K + K̇: the constant goes into c, the degree-2 slice of K̇₂
    // merges into Q, the rest into the tail.
    let k2 = &solution.k_dot.k2_dot;
    let quad = k2.jet(2);
    let mut q_new = k.q.clone();
    let zero_m = vec![0u32; n];
    for (idx, c) in quad.iter() {
        let axes: Vec<usize> = (0..n).flat_map(|a| std::iter::repeat_n(a, idx.m(a) as usize)).collect();
        debug_assert_eq!(axes.len(), 2);
        let (i, l) = (axes[0], axes[1]);
        let kv = idx.k_vec(n);
        let zi = crate::series::Index::new(&kv, &zero_m)?;
        if i == l {
            let mut add = FourierTaylorSeries::zero(n, disc.kmax(), 0);
            add.insert_raw(zi, *c);
            q_new[i * n + i] = q_new[i * n + i].add(&add)?;
        } else {
            let mut add = FourierTaylorSeries::zero(n, disc.kmax(), 0);
            add.insert_raw(zi, c * 0.5);
            q_new[i * n + l] = q_new[i * n + l].add(&add)?;
            q_new[l * n + i] = q_new[l * n + i].add(&add)?;
        }
    }
    let tail_new = k.tail.add(&k2.remainder(2))?;
    let k_new = KolmogorovForm::new(
        k.c + solution.k_dot.c_dot,
        k.freq.clone(),
        q_new,
        tail_new,
    )?;

    // New defect through the pullback.
    let h_full = k_series.add(h_dot)?;
    let (pb, pb_debt) = pullback(&h_full, &exp_element, disc, s_out)?;
    debt += pb_debt;
    let mut h_new = pb.sub(&k_new.assemble(disc.kmax(), disc.mmax())?)?;
    // The pullback carries a transform-noise floor relative to |H|; re-chop
    // the difference at that scale so the defect norm reads signal, not noise.
    let pipeline_scale = h_full.max_abs_coeff();
    debt += h_new.chop(CHOP_RELATIVE * pipeline_scale);

    let record = StepRecord {
        j,
        s_in,
        s_out,
        sigma: strips.sigma,
        defect_in,
        defect_out: h_new.majorant_norm(s_out),
        kdot_norm: solution.k_dot.norm(s_out),
        gdot_norm: solution.g_dot.norm(s_out),
        exp_margin,
        contraction,
        smallness_lhs,
        smallness_rhs,
        twist_condition: solution.twist_condition,
        second_solve_average: solution.second_solve_average,
        truncation_debt: debt,
    };
    Ok(NewtonStep {
        k_new,
        h_new,
        g_dot: solution.g_dot,
        exp_element,
        record,
        warnings,
    })
}

/// Full run output.
pub struct KamRun {
    /// Final normal form.
    pub k: KolmogorovForm,
    /// Accumulated conjugating map: `H ∘ γ ≈ K`.
    pub gamma: GroupElement,
    /// `G = γ⁻¹`, so `H = K ∘ G`; present when the run converged.
    pub g_inverse: Option<GroupElement>,
    pub report: IterationReport,
}

/// Drive the Newton iteration on the shrinking-strip schedule, accumulating
/// the conjugacy `γ_j = exp(−Ġ₀) ∘ ⋯ ∘ exp(−Ġ_j)`. Stops on
/// `defect ≤ defect_tol`, on the iteration cap, on two consecutive defect
/// increases, or on a step-level precondition failure (reported in the
/// outcome rather than panicking the run).
pub fn kam_run(
    h: &FourierTaylorSeries,
    k0: &KolmogorovForm,
    schedule: &ScheduleParams,
    disc: &Discretization,
    gamma2: f64,
    tau2: f64,
) -> Result<KamRun> {
    schedule.validate()?;
    let n = k0.dim();
    if h.dim() != n || disc.dim() != n {
        return Err(Error::DimensionMismatch(h.dim(), n));
    }
    let reference_det = check_nondegeneracy(k0, NONDEGENERACY_FLOOR, None).det;

    let mut k = k0.clone();
    let mut h_dot = h.sub(&k0.assemble(disc.kmax(), disc.mmax())?)?;
    let mut gamma = GroupElement::identity(n, disc.kmax(), disc.mmax());
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut defects: Vec<f64> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut debt_total = 0.0;
    let mut outcome = RunOutcome::MaxIters;
    let mut failure = None;

    let mut s_j = schedule.s + schedule.sigma;
    for j in 0..=schedule.max_iters {
        let defect = h_dot.majorant_norm(s_j);
        defects.push(defect);
        if defect <= schedule.defect_tol {
            outcome = RunOutcome::Converged;
            break;
        }
        if j == schedule.max_iters {
            outcome = RunOutcome::MaxIters;
            break;
        }
        // Two consecutive increases abort: a quadratic scheme fails fast,
        // and limping on pollutes the accumulated conjugacy.
        let hist = defects.len();
        if hist >= 3 && defects[hist - 1] > defects[hist - 2] && defects[hist - 2] > defects[hist - 3] {
            outcome = RunOutcome::Diverged;
            failure = Some(format!(
                "defect increased twice: {:.3e} -> {:.3e} -> {:.3e}",
                defects[hist - 3],
                defects[hist - 2],
                defects[hist - 1]
            ));
            break;
        }
        let sigma_j = schedule.sigma_j(j);
        let s_next = s_j - sigma_j;
        let strips = StripParams::new(s_next, sigma_j)?;
        match newton_step(&k, &h_dot, &strips, disc, j, reference_det, gamma2, tau2) {
            Ok(step) => {
                warnings.extend(step.warnings.iter().cloned());
                debt_total += step.record.truncation_debt;
                steps.push(step.record);
                k = step.k_new;
                h_dot = step.h_new;
                gamma = if j == 0 {
                    step.exp_element
                } else {
                    compose(&gamma, &step.exp_element, disc)?
                };
                s_j = s_next;
            }
            Err(err) => {
                outcome = RunOutcome::Failed;
                failure = Some(err.to_string());
                break;
            }
        }
    }

    // Fits over the recorded defect sequence.
    let fit_floor = 100.0 * schedule.defect_tol;
    let fitted_exponent = fit_exponent(&defects, fit_floor);
    let sigmas: Vec<f64> = (0..defects.len().saturating_sub(1))
        .map(|j| schedule.sigma_j(j))
        .collect();
    let (fitted_c, fitted_t) = match fit_quadratic_constants(&defects, &sigmas) {
        Some((c, t)) => (Some(c), Some(t)),
        None => (None, None),
    };

    // Conjugacy diagnostics on success.
    let (mut conjugacy_residual, mut conjugacy_pointwise) = (None, None);
    let mut g_inverse = None;
    if outcome == RunOutcome::Converged {
        let k_series = k.assemble(disc.kmax(), disc.mmax())?;
        let (pb, pb_debt) = pullback(h, &gamma, disc, schedule.s)?;
        debt_total += pb_debt;
        let mut resid = pb.sub(&k_series)?;
        resid.chop(CHOP_RELATIVE * h.max_abs_coeff());
        conjugacy_residual = Some(resid.majorant_norm(schedule.s));

        let per_axis = 256usize;
        let total = per_axis.pow(n as u32).min(65536);
        let mut worst = 0.0f64;
        let r0 = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            let mut theta = vec![0.0; n];
            for t in theta.iter_mut() {
                *t = (rem % per_axis) as f64 / per_axis as f64;
                rem /= per_axis;
            }
            let (ti, ri) = gamma.apply_point(&theta, &r0);
            let hv = h.eval_complex(&ti, &ri).re;
            let kv = k_series.eval_complex(&theta, &r0).re;
            worst = worst.max((hv - kv).abs());
        }
        conjugacy_pointwise = Some(worst);

        g_inverse = Some(inverse(&gamma, disc)?);
    }

    Ok(KamRun {
        k,
        gamma,
        g_inverse,
        report: IterationReport {
            steps,
            defect_norms: defects,
            outcome,
            fitted_exponent,
            fitted_c,
            fitted_t,
            conjugacy_residual,
            conjugacy_pointwise,
            truncation_debt: debt_total,
            warnings,
            failure,
        },
    })
}

/// Least-squares slope of `ln d_{j+1}` against `ln d_j` over consecutive
/// pairs with both defects above `floor`. The slope is invariant under the
/// per-step constant, so clean quadratic convergence reads 2 regardless of
/// the width-loss factors. With a single eligible pair this degenerates to
/// the log-quotient.
pub fn fit_exponent(defects: &[f64], floor: f64) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = defects
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    match pairs.len() {
        0 => None,
        1 => Some(pairs[0].1 / pairs[0].0),
        _ => {
            let m = pairs.len() as f64;
            let sx: f64 = pairs.iter().map(|p| p.0).sum();
            let sy: f64 = pairs.iter().map(|p| p.1).sum();
            let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
            let denom = m * sxx - sx * sx;
            if denom.abs() < 1e-30 {
                None
            } else {
                Some((m * sxy - sx * sy) / denom)
            }
        }
    }
}

/// Fit `d_{j+1} <= c σ_j^{-t} d_j²`: `t` by least squares on
/// `ln(d_{j+1}/d_j²) = ln c − t ln σ_j`, then `c` as the upper envelope, so
/// the abstract recursion fed with the fitted pair dominates the recorded
/// sequence by construction.
pub fn fit_quadratic_constants(defects: &[f64], sigmas: &[f64]) -> Option<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..defects.len().saturating_sub(1) {
        let (d0, d1) = (defects[j], defects[j + 1]);
        if d0 > 0.0 && d1 > 0.0 && j < sigmas.len() {
            xs.push(-sigmas[j].ln());
            ys.push((d1 / (d0 * d0)).ln());
        }
    }
    if xs.is_empty() {
        return None;
    }
    let t = if xs.len() == 1 {
        1.0
    } else {
        let m = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let denom = m * sxx - sx * sx;
        if denom.abs() < 1e-30 {
            1.0
        } else {
            ((m * sxy - sx * sy) / denom).max(0.1)
        }
    };
    let mut c: f64 = 0.0;
    for j in 0..defects.len().saturating_sub(1) {
        let (d0, d1) = (defects[j], defects[j + 1]);
        if d0 > 0.0 && d1 > 0.0 && j < sigmas.len() {
            c = c.max(d1 * sigmas[j].powf(t) / (d0 * d0));
        }
    }
    // Enlarging c keeps the envelope valid and satisfies the certificate
    // normalization c >= 2^-t.
    c = c.max((2.0f64).powf(-t));
    Some((c, t))
}

/// Certificate verdict and the predicted defect envelope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub ok: bool,
    /// `q = c 4^t σ^{-t} |y|`; the iteration contracts when `2q ≤ 1`.
    pub q: f64,
    /// `q^{2^j}` for j up to the requested horizon.
    pub predicted: Vec<f64>,
    pub reason: Option<String>,
}

/// Evaluate the fixed-point convergence certificate: domain membership
/// `|y| ≤ γ σ^τ`, the contraction number `q = c 4^t σ^{-t} |y|`, and the
/// predicted doubly-exponential defect bounds.
pub fn convergence_certificate(
    consts: &CertificateConstants,
    sigma: f64,
    y_norm: f64,
    iters: usize,
) -> Certificate {
    let q = consts.c * (4.0f64).powf(consts.t) * sigma.powf(-consts.t) * y_norm;
    let mut predicted = Vec::with_capacity(iters + 1);
    let mut p = q;
    for _ in 0..=iters {
        predicted.push(p);
        p = p * p;
    }
    if y_norm < 0.0 || sigma <= 0.0 {
        return Certificate {
            ok: false,
            q,
            predicted,
            reason: Some("sigma and |y| must be nonnegative".into()),
        };
    }
    if y_norm > consts.gamma * sigma.powf(consts.tau) {
        return Certificate {
            ok: false,
            q,
            predicted,
            reason: Some(format!(
                "domain violated: |y| = {y_norm:.3e} > gamma sigma^tau = {:.3e}",
                consts.gamma * sigma.powf(consts.tau)
            )),
        };
    }
    if 2.0 * q > 1.0 {
        return Certificate {
            ok: false,
            q,
            predicted,
            reason: Some(format!("2q = {:.3e} > 1", 2.0 * q)),
        };
    }
    Certificate {
        ok: true,
        q,
        predicted,
        reason: None,
    }
}

/// Worst-case simulation of the abstract recursion on the strip schedule:
/// `y_{j+1} = c σ_j^{-t} y_j²` with `σ_j = 2^{-(j+1)} σ`, plus the partial
/// sums of the x-drift (which the certificate caps by the ball radius).
/// Returns `(x_drift_bound, y_bound)` for steps 1..=iters.
pub fn abstract_fp_simulate(
    consts: &CertificateConstants,
    sigma: f64,
    y_norm: f64,
    iters: usize,
) -> Result<Vec<(f64, f64)>> {
    let cert = convergence_certificate(consts, sigma, y_norm, 0);
    if !cert.ok {
        return Err(Error::CertificateDomain {
            reason: cert.reason.unwrap_or_else(|| "certificate not ok".into()),
        });
    }
    let mut out = Vec::with_capacity(iters);
    let mut y = y_norm;
    let mut drift = 0.0;
    for j in 0..iters {
        let sigma_j = sigma * (0.5f64).powi(j as i32 + 1);
        y = consts.c * sigma_j.powf(-consts.t) * y * y;
        drift += y;
        out.push((drift, y));
    }
    Ok(out)
}
