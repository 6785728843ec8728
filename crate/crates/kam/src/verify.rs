//! Independent dynamical verification of a constructed torus.
//!
//! Nothing here reuses the Newton machinery: the embedded torus is checked
//! directly against the Hamiltonian vector field (`invariance_residual`) and
//! against numerically integrated trajectories (`flow_check`). Trajectories
//! are compared to the embedding graph in the actions at the matched angle,
//! and the rotation is measured through the embedding's angle map so that the
//! error budget is defect plus integrator error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::cohomology::dist_to_integers;
use crate::group::GroupElement;
use crate::linalg;
use crate::sampling::SplitMix64;
use crate::series::FourierTaylorSeries;
use crate::{Error, Result};

/// Sampled image of the zero section under the conjugating map.
#[derive(Clone, Debug)]
pub struct TorusEmbedding {
    pub dim: usize,
    pub n_per_axis: usize,
    /// Angle images γ(θ,0).θ − θ, per component, on the uniform grid
    /// (axis 0 fastest).
    pub angle_offset: Vec<Vec<f64>>,
    /// Action images γ(θ,0).r per component.
    pub r_image: Vec<Vec<f64>>,
    /// The generating map, kept for tangent computations.
    pub gamma: GroupElement,
}

fn grid_theta(dim: usize, n_per_axis: usize, flat: usize) -> Vec<f64> {
    let mut rem = flat;
    (0..dim)
        .map(|_| {
            let x = (rem % n_per_axis) as f64 / n_per_axis as f64;
            rem /= n_per_axis;
            x
        })
        .collect()
}

/// Sample `γ(θ, 0)` on a uniform grid and check the embedding winds once
/// around each angle (degree 1).
pub fn torus_embedding(gamma: &GroupElement, n_per_axis: usize) -> Result<TorusEmbedding> {
    let n = gamma.dim();
    if n_per_axis < 8 {
        return Err(Error::Config("embedding grid too coarse (need >= 8)".into()));
    }
    let total = n_per_axis.pow(n as u32);
    let r0 = vec![0.0; n];
    let mut angle_offset = vec![vec![0.0; total]; n];
    let mut r_image = vec![vec![0.0; total]; n];
    for flat in 0..total {
        let theta = grid_theta(n, n_per_axis, flat);
        let (ti, ri) = gamma.apply_point(&theta, &r0);
        for j in 0..n {
            let v = ti[j] - theta[j];
            if !v.is_finite() || !ri[j].is_finite() {
                return Err(Error::Config("embedding produced non-finite points".into()));
            }
            angle_offset[j][flat] = v;
            r_image[j][flat] = ri[j];
        }
    }
    // Degree-1 winding: moving once around axis j, the angle image θ'_j
    // advances by exactly one period; with the offset representation this
    // means the offset returns to itself and stays below a half period.
    for j in 0..n {
        for val in &angle_offset[j] {
            if val.abs() >= 0.5 {
                return Err(Error::Config(format!(
                    "embedding offset {val:.3} reaches half a period; winding check failed"
                )));
            }
        }
    }
    Ok(TorusEmbedding {
        dim: n,
        n_per_axis,
        angle_offset,
        r_image,
        gamma: gamma.clone(),
    })
}

/// Max over the grid of `|X_H(γ(θ,0)) − Dγ(θ,0)·(α,0)|_∞`: the Hamiltonian
/// field on the embedded torus against the pushed-forward rotation.
pub fn invariance_residual(
    h: &FourierTaylorSeries,
    emb: &TorusEmbedding,
    alpha: &[f64],
) -> Result<f64> {
    let n = emb.dim;
    if h.dim() != n || alpha.len() != n {
        return Err(Error::DimensionMismatch(h.dim(), n));
    }
    let g = &emb.gamma;
    // Spectral pieces: v, v', L_α v, ρ, L_α ρ, L_α v' (all theta-only).
    let mut dv = Vec::with_capacity(n * n);
    let mut ldv = Vec::with_capacity(n * n);
    for vi in &g.v {
        for j in 0..n {
            let d = vi.deriv_theta(j)?;
            ldv.push(d.directional_theta_derivative(alpha)?);
            dv.push(d);
        }
    }
    let lv: Vec<FourierTaylorSeries> = g
        .v
        .iter()
        .map(|vi| vi.directional_theta_derivative(alpha))
        .collect::<Result<_>>()?;
    let rho: Vec<FourierTaylorSeries> = (0..n).map(|j| g.rho(j)).collect::<Result<_>>()?;
    let lrho: Vec<FourierTaylorSeries> = rho
        .iter()
        .map(|r| r.directional_theta_derivative(alpha))
        .collect::<Result<_>>()?;
    let dh_dr: Vec<FourierTaylorSeries> = (0..n).map(|i| h.deriv_r(i)).collect::<Result<_>>()?;
    let dh_dth: Vec<FourierTaylorSeries> =
        (0..n).map(|i| h.deriv_theta(i)).collect::<Result<_>>()?;

    let total = emb.n_per_axis.pow(n as u32);
    let r0 = vec![0.0; n];
    let mut worst = 0.0f64;
    for flat in 0..total {
        let theta = grid_theta(n, emb.n_per_axis, flat);
        let mut jac = linalg::identity(n);
        let mut ljac = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                jac[i * n + j] += dv[i * n + j].eval_complex(&theta, &r0).re;
                ljac[i * n + j] = ldv[i * n + j].eval_complex(&theta, &r0).re;
            }
        }
        let a_inv = linalg::invert(&jac, n).ok_or(Error::NotNearIdentity { min_det: 0.0 })?;
        let rho_v: Vec<f64> = (0..n).map(|j| rho[j].eval_complex(&theta, &r0).re).collect();
        let lrho_v: Vec<f64> = (0..n)
            .map(|j| lrho[j].eval_complex(&theta, &r0).re)
            .collect();

        // Tangent of the embedded rotation.
        let mut tangent_theta = alpha.to_vec();
        for j in 0..n {
            tangent_theta[j] += lv[j].eval_complex(&theta, &r0).re;
        }
        let term1 = linalg::vec_mat(&lrho_v, &a_inv, n);
        let rho_a = linalg::vec_mat(&rho_v, &a_inv, n);
        let rho_a_l = linalg::vec_mat(&rho_a, &ljac, n);
        let term2 = linalg::vec_mat(&rho_a_l, &a_inv, n);
        let tangent_r: Vec<f64> = (0..n).map(|j| term1[j] - term2[j]).collect();

        // Hamiltonian field at the image point.
        let mut image_theta = theta.clone();
        for j in 0..n {
            image_theta[j] += emb.angle_offset[j][flat];
        }
        let image_r: Vec<f64> = (0..n).map(|j| emb.r_image[j][flat]).collect();
        for i in 0..n {
            let xd = dh_dr[i].eval_complex(&image_theta, &image_r).re;
            let rd = -dh_dth[i].eval_complex(&image_theta, &image_r).re;
            worst = worst.max((xd - tangent_theta[i]).abs());
            worst = worst.max((rd - tangent_r[i]).abs());
        }
    }
    Ok(worst)
}

/// Sparse trigonometric interpolant of a periodic grid function, used to
/// match trajectory angles back onto the embedding.
struct TrigInterp {
    modes: Vec<(Vec<i64>, Complex64)>,
}

impl TrigInterp {
    fn build(values: &[f64], dim: usize, n_per_axis: usize, cap: i64) -> Self {
        let total = values.len();
        let band = 2 * cap + 1;
        let mut modes = Vec::new();
        let scale: f64 = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-15 * scale.max(1e-300);
        let mode_total = (band as usize).pow(dim as u32);
        for mflat in 0..mode_total {
            let mut rem = mflat;
            let mut k = vec![0i64; dim];
            for kj in k.iter_mut() {
                *kj = (rem % band as usize) as i64 - cap;
                rem /= band as usize;
            }
            let mut acc = Complex64::ZERO;
            for (flat, v) in values.iter().enumerate() {
                let theta = grid_theta(dim, n_per_axis, flat);
                let phase: f64 = k.iter().zip(&theta).map(|(&kj, &t)| kj as f64 * t).sum();
                let (sin, cos) = (-TAU * phase).sin_cos();
                acc += Complex64::new(cos, sin) * *v;
            }
            acc /= total as f64;
            if acc.norm() > floor {
                modes.push((k, acc));
            }
        }
        TrigInterp { modes }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = Complex64::ZERO;
        for (k, c) in &self.modes {
            let phase: f64 = k.iter().zip(x).map(|(&kj, &t)| kj as f64 * t).sum();
            let (sin, cos) = (TAU * phase).sin_cos();
            acc += c * Complex64::new(cos, sin);
        }
        acc.re
    }

    fn eval_deriv(&self, x: &[f64], axis: usize) -> f64 {
        let mut acc = Complex64::ZERO;
        for (k, c) in &self.modes {
            if k[axis] == 0 {
                continue;
            }
            let phase: f64 = k.iter().zip(x).map(|(&kj, &t)| kj as f64 * t).sum();
            let (sin, cos) = (TAU * phase).sin_cos();
            acc += c * Complex64::new(cos, sin) * Complex64::new(0.0, TAU * k[axis] as f64);
        }
        acc.re
    }

    fn is_constant_zero(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Integration parameters for the trajectory check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowCheckParams {
    pub t_final: f64,
    pub dt: f64,
    pub n_points: usize,
    pub seed: u64,
    /// Trajectories with any `|r_j|` beyond this declare non-invariance.
    pub escape_radius: f64,
    /// Optional initial offset added to the actions (negative controls).
    #[serde(default)]
    pub initial_r_offset: f64,
}

impl FlowCheckParams {
    pub fn standard(t_final: f64, dt: f64, seed: u64, escape_radius: f64) -> Self {
        FlowCheckParams {
            t_final,
            dt,
            n_points: 20,
            seed,
            escape_radius,
            initial_r_offset: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FlowCheckResult {
    /// Max action deviation from the embedding graph at the matched angle.
    pub max_torus_distance: f64,
    /// Max per-component distance to the integers of
    /// `ψ(T) − ψ(0) − αT`, with ψ the angle pulled back through the
    /// embedding's angle map.
    pub rotation_error: f64,
    /// Max energy drift along the sampled trajectories.
    pub energy_drift: f64,
}

/// Integrate seeded points on the torus with fixed-step fourth-order
/// Runge-Kutta and measure how far they drift off the embedding.
pub fn flow_check(
    h: &FourierTaylorSeries,
    emb: &TorusEmbedding,
    alpha: &[f64],
    params: &FlowCheckParams,
) -> Result<FlowCheckResult> {
    let n = emb.dim;
    if h.dim() != n || alpha.len() != n {
        return Err(Error::DimensionMismatch(h.dim(), n));
    }
    if params.dt > 1e-2 {
        return Err(Error::Config("flow check needs dt <= 1e-2".into()));
    }
    let steps = (params.t_final / params.dt).round() as usize;
    let stride = (steps / 1000).max(1);

    // Interpolants of the embedding graph.
    let cap = ((emb.n_per_axis as i64 - 1) / 2).min(64);
    let v_interp: Vec<TrigInterp> = (0..n)
        .map(|j| TrigInterp::build(&emb.angle_offset[j], n, emb.n_per_axis, cap))
        .collect();
    let r_interp: Vec<TrigInterp> = (0..n)
        .map(|j| TrigInterp::build(&emb.r_image[j], n, emb.n_per_axis, cap))
        .collect();
    let flat_angle_map = v_interp.iter().all(|t| t.is_constant_zero());

    let dh_dr: Vec<FourierTaylorSeries> = (0..n).map(|i| h.deriv_r(i)).collect::<Result<_>>()?;
    let dh_dth: Vec<FourierTaylorSeries> =
        (0..n).map(|i| h.deriv_theta(i)).collect::<Result<_>>()?;
    let rhs = |theta: &[f64], r: &[f64], out_t: &mut [f64], out_r: &mut [f64]| {
        for i in 0..n {
            out_t[i] = dh_dr[i].eval_complex(theta, r).re;
            out_r[i] = -dh_dth[i].eval_complex(theta, r).re;
        }
    };

    // Invert the angle map θ_amb = ψ + v(ψ) by Newton (angles mod 1).
    let invert_angle = |theta_amb: &[f64]| -> Vec<f64> {
        let mut psi: Vec<f64> = (0..n)
            .map(|j| (theta_amb[j] - v_interp[j].eval(theta_amb)).rem_euclid(1.0))
            .collect();
        if flat_angle_map {
            return psi;
        }
        for _ in 0..12 {
            let mut err = vec![0.0; n];
            let mut jac = linalg::identity(n);
            for a in 0..n {
                let delta = psi[a] + v_interp[a].eval(&psi) - theta_amb[a];
                err[a] = delta - delta.round();
                for b in 0..n {
                    jac[a * n + b] += v_interp[a].eval_deriv(&psi, b);
                }
            }
            let inv = match linalg::invert(&jac, n) {
                Some(m) => m,
                None => break,
            };
            let corr = linalg::mat_vec(&inv, &err, n);
            let biggest = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for a in 0..n {
                psi[a] = (psi[a] - corr[a]).rem_euclid(1.0);
            }
            if biggest < 1e-14 {
                break;
            }
        }
        psi
    };

    let mut rng = SplitMix64::stream(params.seed, "flow-check");
    let mut max_distance = 0.0f64;
    let mut rotation_error = 0.0f64;
    let mut energy_drift = 0.0f64;

    for _ in 0..params.n_points {
        let theta0: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let r_zero = vec![0.0; n];
        let (mut theta, mut r) = emb.gamma.apply_point(&theta0, &r_zero);
        for rj in r.iter_mut() {
            *rj += params.initial_r_offset;
        }
        let psi_start = invert_angle(&theta.iter().map(|t| t.rem_euclid(1.0)).collect::<Vec<_>>());
        let energy0 = h.eval_complex(&theta, &r).re;

        let mut k1t = vec![0.0; n];
        let mut k1r = vec![0.0; n];
        let mut k2t = vec![0.0; n];
        let mut k2r = vec![0.0; n];
        let mut k3t = vec![0.0; n];
        let mut k3r = vec![0.0; n];
        let mut k4t = vec![0.0; n];
        let mut k4r = vec![0.0; n];
        let mut tmp_t = vec![0.0; n];
        let mut tmp_r = vec![0.0; n];

        let sample = |theta: &[f64], r: &[f64], dist: &mut f64, drift: &mut f64| -> Result<()> {
            for rj in r {
                if rj.abs() > params.escape_radius {
                    return Err(Error::NonInvariance {
                        r_max: rj.abs(),
                        limit: params.escape_radius,
                    });
                }
            }
            let frac: Vec<f64> = theta.iter().map(|t| t.rem_euclid(1.0)).collect();
            let psi = invert_angle(&frac);
            for j in 0..n {
                let graph = r_interp[j].eval(&psi);
                *dist = dist.max((r[j] - graph).abs());
            }
            *drift = drift.max((h.eval_complex(theta, r).re - energy0).abs());
            Ok(())
        };

        sample(&theta, &r, &mut max_distance, &mut energy_drift)?;
        let dt = params.dt;
        for step in 1..=steps {
            rhs(&theta, &r, &mut k1t, &mut k1r);
            for i in 0..n {
                tmp_t[i] = theta[i] + 0.5 * dt * k1t[i];
                tmp_r[i] = r[i] + 0.5 * dt * k1r[i];
            }
            rhs(&tmp_t, &tmp_r, &mut k2t, &mut k2r);
            for i in 0..n {
                tmp_t[i] = theta[i] + 0.5 * dt * k2t[i];
                tmp_r[i] = r[i] + 0.5 * dt * k2r[i];
            }
            rhs(&tmp_t, &tmp_r, &mut k3t, &mut k3r);
            for i in 0..n {
                tmp_t[i] = theta[i] + dt * k3t[i];
                tmp_r[i] = r[i] + dt * k3r[i];
            }
            rhs(&tmp_t, &tmp_r, &mut k4t, &mut k4r);
            for i in 0..n {
                theta[i] += dt / 6.0 * (k1t[i] + 2.0 * k2t[i] + 2.0 * k3t[i] + k4t[i]);
                r[i] += dt / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
            }
            if step % stride == 0 || step == steps {
                sample(&theta, &r, &mut max_distance, &mut energy_drift)?;
            }
        }

        let frac: Vec<f64> = theta.iter().map(|t| t.rem_euclid(1.0)).collect();
        let psi_end = invert_angle(&frac);
        for j in 0..n {
            let expected = psi_start[j] + alpha[j] * params.t_final;
            rotation_error = rotation_error.max(dist_to_integers(psi_end[j] - expected));
        }
    }

    Ok(FlowCheckResult {
        max_torus_distance: max_distance,
        rotation_error,
        energy_drift,
    })
}
