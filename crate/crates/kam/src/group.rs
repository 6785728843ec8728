//! The group of fibered symplectomorphisms
//!
//! ```text
//!     G(θ, r) = (φ(θ), (r + ρ(θ)) · φ'(θ)⁻¹),      φ = id + v,   ρ = R + S'
//! ```
//!
//! with `φ` a torus diffeomorphism and `ρ` a closed 1-form stored as constant
//! part `R` plus exact part `S'`. Storing the 1-form this way makes
//! closedness a type-level fact: non-closed contamination cannot be
//! represented, and projections back onto `(R, S)` kill it.
//!
//! Exponentials of generators are computed by Picard iteration of the time-1
//! flow in a Taylor-in-time representation at every grid point; composition,
//! inversion and the pullback action on Hamiltonians work on the oversampled
//! grid and project back to Fourier coefficients.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::grid::{parallel_chunks, Discretization, ALIASING_LIMIT};
use crate::linalg;
use crate::normalform::LieElement;
use crate::sampling::SplitMix64;
use crate::series::FourierTaylorSeries;
use crate::{Error, Result};

/// Smallness constant of the exponential gate: `|Ġ|_{s+σ} ≤ γ₀ σ²` with
/// `γ₀ = 1/(36 n)`.
pub fn gamma0(dim: usize) -> f64 {
    1.0 / (36.0 * dim as f64)
}

/// Constant of the deviation bound `|exp Ġ − id|_s ≤ c₀ σ⁻¹ |Ġ|_{s+σ}`,
/// `c₀ = 6 n`.
pub fn c0(dim: usize) -> f64 {
    6.0 * dim as f64
}

/// Taylor-in-time truncation order of the flow polynomials.
const T_ORDER: usize = 32;

/// Picard stopping tolerance on the time-1 values.
const PICARD_TOL: f64 = 1e-14;

/// Picard sweep cap.
const PICARD_MAX_SWEEPS: usize = 50;

/// A fibered symplectomorphism, near the identity.
#[derive(Clone, Debug)]
pub struct GroupElement {
    /// Periodic displacement: `φ(θ) = θ + v(θ)`, component-wise theta-only.
    pub v: Vec<FourierTaylorSeries>,
    /// Constant part of the closed 1-form `ρ`.
    pub r_const: Vec<f64>,
    /// Potential of the exact part: `ρ = R + S'` (zero average).
    pub s_pot: FourierTaylorSeries,
}

impl GroupElement {
    pub fn identity(dim: usize, kmax: u32, mmax: u32) -> Self {
        GroupElement {
            v: vec![FourierTaylorSeries::zero(dim, kmax, mmax); dim],
            r_const: vec![0.0; dim],
            s_pot: FourierTaylorSeries::zero(dim, kmax, mmax),
        }
    }

    pub fn dim(&self) -> usize {
        self.r_const.len()
    }

    /// Pure translation in the actions: `(θ, r) -> (θ, r + R)`.
    pub fn translation(r: &[f64], kmax: u32, mmax: u32) -> Self {
        let mut g = Self::identity(r.len(), kmax, mmax);
        g.r_const = r.to_vec();
        g
    }

    /// The 1-form component `ρ_j = R_j + ∂_j S` as a series.
    pub fn rho(&self, j: usize) -> Result<FourierTaylorSeries> {
        FourierTaylorSeries::constant(
            self.dim(),
            self.s_pot.kmax(),
            self.s_pot.mmax(),
            self.r_const[j],
        )
        .add(&self.s_pot.deriv_theta(j)?)
    }

    /// Distance to the identity: `max_j max(|v_j|_s, |ρ_j|_s)`.
    pub fn deviation_norm(&self, s: f64) -> f64 {
        let mut out: f64 = 0.0;
        for j in 0..self.dim() {
            out = out.max(self.v[j].majorant_norm(s));
            if let Ok(rho) = self.rho(j) {
                out = out.max(rho.majorant_norm(s));
            }
        }
        out
    }

    /// Minimum of `det(I + v'(θ))` over a uniform check grid (64 per axis up
    /// to two dimensions, 16 beyond, to keep the check bounded).
    pub fn invertibility_margin(&self) -> Result<f64> {
        let n = self.dim();
        let per_axis = if n <= 2 { 64usize } else { 16 };
        let total = per_axis.pow(n as u32);
        let mut dv = Vec::with_capacity(n * n);
        for vi in &self.v {
            for j in 0..n {
                dv.push(vi.deriv_theta(j)?);
            }
        }
        let mut min_det = f64::INFINITY;
        for flat in 0..total {
            let mut rem = flat;
            let mut theta = vec![0.0; n];
            for t in theta.iter_mut() {
                *t = (rem % per_axis) as f64 / per_axis as f64;
                rem /= per_axis;
            }
            let r0 = vec![0.0; n];
            let mut jac = linalg::identity(n);
            for i in 0..n {
                for j in 0..n {
                    jac[i * n + j] += dv[i * n + j].eval_complex(&theta, &r0).re;
                }
            }
            min_det = min_det.min(linalg::det(&jac, n));
        }
        Ok(min_det)
    }

    /// Pointwise application `(θ, r) -> (φ(θ), (r + ρ(θ)) · φ'(θ)⁻¹)`.
    /// The angle image is returned unreduced (callers needing the torus
    /// representative take it mod 1).
    pub fn apply_point(&self, theta: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let r0 = vec![0.0; n];
        let mut theta_out = theta.to_vec();
        for j in 0..n {
            theta_out[j] += self.v[j].eval_complex(theta, &r0).re;
        }
        let mut jac = linalg::identity(n);
        for i in 0..n {
            for j in 0..n {
                if let Ok(d) = self.v[i].deriv_theta(j) {
                    jac[i * n + j] += d.eval_complex(theta, &r0).re;
                }
            }
        }
        let inv = linalg::invert(&jac, n).expect("map is a local diffeomorphism");
        let mut shifted = r.to_vec();
        for j in 0..n {
            let rho_j = self.r_const[j]
                + self
                    .s_pot
                    .deriv_theta(j)
                    .map(|d| d.eval_complex(theta, &r0).re)
                    .unwrap_or(0.0);
            shifted[j] += rho_j;
        }
        let r_out = linalg::vec_mat(&shifted, &inv, n);
        (theta_out, r_out)
    }
}

// ---------------------------------------------------------------------------
// time-1 flow of a generator (Picard iteration in Taylor-in-time form)
// ---------------------------------------------------------------------------

/// Fourier mode data shared by the angle field and the 1-form along the flow.
struct Mode {
    k: Vec<i64>,
    /// φ̇ component coefficients.
    phi: Vec<Complex64>,
    /// ρ̇ component coefficients (R goes into the k = 0 slot).
    rho: Vec<Complex64>,
}

fn collect_modes(g_dot: &LieElement) -> Result<Vec<Mode>> {
    use std::collections::BTreeMap;
    let n = g_dot.dim();
    let mut map: BTreeMap<Vec<i64>, (Vec<Complex64>, Vec<Complex64>)> = BTreeMap::new();
    let zero = || (vec![Complex64::ZERO; n], vec![Complex64::ZERO; n]);
    for (j, phi) in g_dot.phi_dot.iter().enumerate() {
        for (idx, c) in phi.iter() {
            let e = map.entry(idx.k_vec(n)).or_insert_with(zero);
            e.0[j] += c;
        }
    }
    for j in 0..n {
        let rho = g_dot.rho_dot(j)?;
        for (idx, c) in rho.iter() {
            let e = map.entry(idx.k_vec(n)).or_insert_with(zero);
            e.1[j] += c;
        }
    }
    let scale = map
        .values()
        .flat_map(|(p, r)| p.iter().chain(r.iter()))
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let floor = 1e-18 * scale;
    Ok(map
        .into_iter()
        .filter(|(_, (p, r))| {
            p.iter().chain(r.iter()).any(|c| c.norm() > floor)
        })
        .map(|(k, (phi, rho))| Mode { k, phi, rho })
        .collect())
}

/// Upper bound on the real-torus Lipschitz constant of the angle field:
/// `max_i Σ_l |∂φ̇_i/∂θ_l|` bounded by the coefficient sums.
pub fn contraction_estimate(g_dot: &LieElement) -> f64 {
    let n = g_dot.dim();
    let mut worst: f64 = 0.0;
    for phi in &g_dot.phi_dot {
        let mut row = 0.0;
        for l in 0..n {
            if let Ok(d) = phi.deriv_theta(l) {
                row += d.majorant_norm(0.0);
            }
        }
        worst = worst.max(row);
    }
    worst
}

/// `u(t) = exp(w(t))` for a polynomial with `w(0) = 0`, truncated at T_ORDER.
fn exp_poly(w: &[Complex64]) -> Vec<Complex64> {
    let p = w.len();
    let mut u = vec![Complex64::ZERO; p];
    u[0] = Complex64::new(1.0, 0.0);
    for d in 1..p {
        let mut acc = Complex64::ZERO;
        for q in 1..=d {
            acc += w[q] * q as f64 * u[d - q];
        }
        u[d] = acc / d as f64;
    }
    u
}

fn poly_value(p: &[f64]) -> f64 {
    p.iter().sum()
}

/// Per-point output of the flow: time-1 displacement and the r-image of the
/// zero section.
struct FlowPoint {
    v: Vec<f64>,
    r_tilde: Vec<f64>,
}

/// The raw time-1 flow of the generator field
/// `(φ̇(θ), ρ̇(θ) − r·φ̇'(θ))`, computed by Picard iteration of
/// `f(t, θ) = ∫₀ᵗ φ̇(θ + f(u, θ)) du` at every grid point, followed by the
/// linear action ODE along each angle trajectory. Guarded by an empirical
/// contraction bound and the non-contraction alarm rather than the analytic
/// smallness gate; [`exp`] adds that gate on top.
pub fn time_one_flow(g_dot: &LieElement, disc: &Discretization) -> Result<GroupElement> {
    let n = g_dot.dim();
    if n != disc.dim() {
        return Err(Error::DimensionMismatch(n, disc.dim()));
    }
    if g_dot.is_zero() {
        return Ok(GroupElement::identity(n, disc.kmax(), disc.mmax()));
    }
    let lipschitz = contraction_estimate(g_dot);
    if lipschitz > 0.5 {
        return Err(Error::ExpContraction { lipschitz });
    }
    let modes = collect_modes(g_dot)?;
    let total = disc.total_points();

    let mut points: Vec<Option<Result<FlowPoint>>> = Vec::with_capacity(total);
    points.resize_with(total, || None);
    parallel_chunks(&mut points, 256, |offset, chunk| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            *slot = Some(flow_at_point(disc, &modes, n, offset + i));
        }
    });

    let mut v_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    let mut r_tilde: Vec<Vec<f64>> = vec![vec![0.0; total]; n];
    for (flat, slot) in points.into_iter().enumerate() {
        let fp = slot.expect("filled")?;
        for j in 0..n {
            v_grids[j][flat] = Complex64::new(fp.v[j], 0.0);
            r_tilde[j][flat] = fp.r_tilde[j];
        }
    }

    // Project the displacement, then transport the action image through the
    // projected Jacobian: ρ(θ) = r(1; θ, 0) · φ'(θ).
    let mut v = Vec::with_capacity(n);
    for grid in &v_grids {
        let (series, _, _) = disc.theta_series_from_grid(grid, 0.0);
        v.push(series);
    }
    let mut rho_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    let mut dv_grid = Vec::with_capacity(n * n);
    for vi in &v {
        for j in 0..n {
            dv_grid.push(disc.eval_theta_on_grid(&vi.deriv_theta(j)?));
        }
    }
    for flat in 0..total {
        for j in 0..n {
            let mut acc = r_tilde[j][flat];
            for i in 0..n {
                acc += r_tilde[i][flat] * dv_grid[i * n + j][flat].re;
            }
            rho_grids[j][flat] = Complex64::new(acc, 0.0);
        }
    }
    let g = assemble_from_grids(disc, v, &rho_grids)?;
    let margin = g.invertibility_margin()?;
    if margin <= 0.0 {
        return Err(Error::NotNearIdentity { min_det: margin });
    }
    Ok(g)
}

/// Picard iteration and action transport at a single grid point.
fn flow_at_point(
    disc: &Discretization,
    modes: &[Mode],
    n: usize,
    flat: usize,
) -> Result<FlowPoint> {
    let p = T_ORDER + 1;
    let phases: Vec<Complex64> = modes.iter().map(|m| disc.grid_phase(&m.k, flat)).collect();

    // f holds the Taylor-in-time coefficients of the angle displacement.
    let mut f = vec![vec![0.0f64; p]; n];
    let mut w = vec![Complex64::ZERO; p];
    let mut g_poly = vec![vec![0.0f64; p]; n];
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    let mut u_cache: Vec<Vec<Complex64>> = vec![Vec::new(); modes.len()];

    for _sweep in 0..PICARD_MAX_SWEEPS {
        for row in g_poly.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for (mi, mode) in modes.iter().enumerate() {
            // w(t) = 2πi k·f(t); purely imaginary since f is real.
            for d in 0..p {
                let mut kf = 0.0;
                for j in 0..n {
                    kf += mode.k[j] as f64 * f[j][d];
                }
                w[d] = Complex64::new(0.0, TAU * kf);
            }
            let u = exp_poly(&w);
            for j in 0..n {
                let c = mode.phi[j];
                if c == Complex64::ZERO {
                    continue;
                }
                let z = c * phases[mi];
                for d in 0..p {
                    g_poly[j][d] += z.re * u[d].re - z.im * u[d].im;
                }
            }
            u_cache[mi] = u;
        }
        let mut change = 0.0f64;
        for j in 0..n {
            let old = poly_value(&f[j]);
            let mut next = vec![0.0; p];
            for d in 0..p - 1 {
                next[d + 1] = g_poly[j][d] / (d + 1) as f64;
            }
            change = change.max((poly_value(&next) - old).abs());
            f[j] = next;
        }
        if change <= PICARD_TOL {
            converged = true;
            break;
        }
        if change > 2.0 * last_change && change > 1.0 {
            return Err(Error::PicardDivergence {
                sweeps: _sweep + 1,
                change,
            });
        }
        last_change = change;
    }
    if !converged {
        return Err(Error::PicardDivergence {
            sweeps: PICARD_MAX_SWEEPS,
            change: last_change,
        });
    }

    // Refresh the mode exponentials along the converged trajectory (the
    // cached ones lag the final Picard update by one sweep).
    for (mi, mode) in modes.iter().enumerate() {
        for d in 0..p {
            let mut kf = 0.0;
            for j in 0..n {
                kf += mode.k[j] as f64 * f[j][d];
            }
            w[d] = Complex64::new(0.0, TAU * kf);
        }
        u_cache[mi] = exp_poly(&w);
    }

    // Action transport from the zero section: with J_il(t) = ∂φ̇_i/∂θ_l along
    // the trajectory, solve ṙ = ρ̇(θ(t)) − r·J(t), r(0) = 0, order by order.
    // u_cache holds exp(2πi k·f) for the converged f.
    let mut rho_poly = vec![vec![0.0f64; p]; n];
    let mut jac_poly = vec![vec![0.0f64; p]; n * n];
    for (mi, mode) in modes.iter().enumerate() {
        let u = &u_cache[mi];
        if u.is_empty() {
            continue;
        }
        for j in 0..n {
            let c = mode.rho[j];
            if c != Complex64::ZERO {
                let z = c * phases[mi];
                for d in 0..p {
                    rho_poly[j][d] += z.re * u[d].re - z.im * u[d].im;
                }
            }
        }
        for i in 0..n {
            let c = mode.phi[i];
            if c == Complex64::ZERO {
                continue;
            }
            for l in 0..n {
                if mode.k[l] == 0 {
                    continue;
                }
                // ∂φ̇_i/∂θ_l picks up the factor 2πi k_l.
                let z = c * phases[mi] * Complex64::new(0.0, TAU * mode.k[l] as f64);
                for d in 0..p {
                    jac_poly[i * n + l][d] += z.re * u[d].re - z.im * u[d].im;
                }
            }
        }
    }
    let mut r_poly = vec![vec![0.0f64; p]; n];
    for d in 0..p - 1 {
        for l in 0..n {
            let mut rj = rho_poly[l][d];
            for i in 0..n {
                // (r·J)_l at order d
                let mut conv = 0.0;
                for a in 0..=d {
                    conv += r_poly[i][a] * jac_poly[i * n + l][d - a];
                }
                rj -= conv;
            }
            r_poly[l][d + 1] = rj / (d + 1) as f64;
        }
    }

    Ok(FlowPoint {
        v: f.iter().map(|fj| poly_value(fj)).collect(),
        r_tilde: r_poly.iter().map(|rj| poly_value(rj)).collect(),
    })
}

/// Exponential with the analytic smallness gate: requires
/// `|Ġ|_{s+σ} ≤ γ₀ σ²` and asserts the deviation bound
/// `|exp Ġ − id|_s ≤ c₀ σ⁻¹ |Ġ|_{s+σ}` on the result.
pub fn exp(
    g_dot: &LieElement,
    strips: &crate::series::StripParams,
    disc: &Discretization,
) -> Result<GroupElement> {
    let n = g_dot.dim();
    let norm = g_dot.norm(strips.outer());
    let bound = gamma0(n) * strips.sigma * strips.sigma;
    if norm > bound {
        return Err(Error::ExpPrecondition { norm, bound });
    }
    let g = time_one_flow(g_dot, disc)?;
    let deviation = g.deviation_norm(strips.s);
    let cap = c0(n) * norm / strips.sigma;
    if deviation > cap {
        return Err(Error::Config(format!(
            "flow deviation {deviation:.3e} exceeded the bound {cap:.3e}; this is a bug"
        )));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// composition / inversion / pullback
// ---------------------------------------------------------------------------

/// Project 1-form component grids onto `(R, S)`: the constants are the
/// averages, the exact part's potential is recovered mode-wise by the
/// least-squares division `S_k = Σ_j conj(2πi k_j) ρ̂_{j,k} / Σ_j (2π k_j)²`,
/// which annihilates any non-closed numerical contamination.
fn assemble_from_grids(
    disc: &Discretization,
    v: Vec<FourierTaylorSeries>,
    rho_grids: &[Vec<Complex64>],
) -> Result<GroupElement> {
    let n = v.len();
    let mut r_const = vec![0.0; n];
    let mut rho_series = Vec::with_capacity(n);
    for (j, grid) in rho_grids.iter().enumerate() {
        let (series, _, _) = disc.theta_series_from_grid(grid, 0.0);
        r_const[j] = series.mean_value();
        rho_series.push(series);
    }
    let mut s_pot = FourierTaylorSeries::zero(n, disc.kmax(), disc.mmax());
    use std::collections::BTreeSet;
    let mut support: BTreeSet<Vec<i64>> = BTreeSet::new();
    for series in &rho_series {
        for (idx, _) in series.iter() {
            if idx.k_abs() > 0 {
                support.insert(idx.k_vec(n));
            }
        }
    }
    let zero_m = vec![0u32; n];
    for k in support {
        let mut num = Complex64::ZERO;
        let mut den = 0.0;
        for (j, series) in rho_series.iter().enumerate() {
            let c = series.coeff(&k, &zero_m);
            let factor = Complex64::new(0.0, TAU * k[j] as f64);
            num += factor.conj() * c;
            den += factor.norm_sqr();
        }
        if den > 0.0 {
            let sk = num / den;
            if sk != Complex64::ZERO {
                let idx = crate::series::Index::new(&k, &zero_m)?;
                s_pot.insert_raw(idx, sk);
            }
        }
    }
    s_pot.symmetrize();
    Ok(GroupElement {
        v,
        r_const,
        s_pot,
    })
}

/// Group law `(G1 ∘ G2)(x) = G1(G2(x))`: `φ = φ1 ∘ φ2` and
/// `ρ = ρ2 + φ2*ρ1` (pullback of 1-forms), re-projected onto constant +
/// exact parts.
pub fn compose(
    g1: &GroupElement,
    g2: &GroupElement,
    disc: &Discretization,
) -> Result<GroupElement> {
    let n = g1.dim();
    if n != g2.dim() || n != disc.dim() {
        return Err(Error::DimensionMismatch(g2.dim(), n));
    }
    let total = disc.total_points();

    let v2_grid: Vec<Vec<Complex64>> = g2
        .v
        .iter()
        .map(|vi| disc.eval_theta_on_grid(vi))
        .collect();
    let mut dv2_grid = Vec::with_capacity(n * n);
    for vi in &g2.v {
        for j in 0..n {
            dv2_grid.push(disc.eval_theta_on_grid(&vi.deriv_theta(j)?));
        }
    }
    let s2_prime: Vec<Vec<Complex64>> = (0..n)
        .map(|j| Ok(disc.eval_theta_on_grid(&g2.s_pot.deriv_theta(j)?)))
        .collect::<Result<_>>()?;
    let s1_prime: Vec<FourierTaylorSeries> = (0..n)
        .map(|j| g1.s_pot.deriv_theta(j))
        .collect::<Result<_>>()?;

    struct ComposePoint {
        v: Vec<f64>,
        rho: Vec<f64>,
        max_v: f64,
    }
    let mut out: Vec<Option<ComposePoint>> = Vec::with_capacity(total);
    out.resize_with(total, || None);
    parallel_chunks(&mut out, 128, |offset, chunk| {
        let r0 = vec![0.0; n];
        for (i, slot) in chunk.iter_mut().enumerate() {
            let flat = offset + i;
            let theta = disc.point(flat);
            // φ2(θ) and the mapped point.
            let mut phi2 = theta.clone();
            for j in 0..n {
                phi2[j] += v2_grid[j][flat].re;
            }
            // v3 = v2 + v1(φ2)
            let mut v3 = vec![0.0; n];
            let mut max_v = 0.0f64;
            for j in 0..n {
                let v1_at = g1.v[j].eval_complex(&phi2, &r0).re;
                v3[j] = v2_grid[j][flat].re + v1_at;
                max_v = max_v.max(v3[j].abs());
            }
            // ρ3 = ρ2 + ρ1(φ2)·φ2'(θ)
            let mut rho1_at = vec![0.0; n];
            for j in 0..n {
                rho1_at[j] = g1.r_const[j] + s1_prime[j].eval_complex(&phi2, &r0).re;
            }
            let mut rho3 = vec![0.0; n];
            for j in 0..n {
                let mut acc = g2.r_const[j] + s2_prime[j][flat].re;
                for i2 in 0..n {
                    let phi2p = if i2 == j { 1.0 } else { 0.0 } + dv2_grid[i2 * n + j][flat].re;
                    acc += rho1_at[i2] * phi2p;
                }
                rho3[j] = acc;
            }
            *slot = Some(ComposePoint {
                v: v3,
                rho: rho3,
                max_v,
            });
        }
    });

    let mut v_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    let mut rho_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    let mut max_v = 0.0f64;
    for (flat, slot) in out.into_iter().enumerate() {
        let cp = slot.expect("filled");
        max_v = max_v.max(cp.max_v);
        for j in 0..n {
            v_grids[j][flat] = Complex64::new(cp.v[j], 0.0);
            rho_grids[j][flat] = Complex64::new(cp.rho[j], 0.0);
        }
    }
    if max_v > 0.45 {
        return Err(Error::StripBudget { max_v });
    }
    let mut v = Vec::with_capacity(n);
    for grid in &v_grids {
        let (series, _, _) = disc.theta_series_from_grid(grid, 0.0);
        v.push(series);
    }
    let g = assemble_from_grids(disc, v, &rho_grids)?;
    let margin = g.invertibility_margin()?;
    if margin <= 0.0 {
        return Err(Error::NotNearIdentity { min_det: margin });
    }
    Ok(g)
}

/// Group inverse: `φ⁻¹` by pointwise Newton on the grid, with the 1-form
/// transported so that `compose(G, inverse(G))` is the identity.
pub fn inverse(g: &GroupElement, disc: &Discretization) -> Result<GroupElement> {
    let n = g.dim();
    if n != disc.dim() {
        return Err(Error::DimensionMismatch(n, disc.dim()));
    }
    let margin = g.invertibility_margin()?;
    if margin <= 0.5 {
        return Err(Error::NotNearIdentity { min_det: margin });
    }
    let total = disc.total_points();
    let dv: Vec<FourierTaylorSeries> = {
        let mut out = Vec::with_capacity(n * n);
        for vi in &g.v {
            for j in 0..n {
                out.push(vi.deriv_theta(j)?);
            }
        }
        out
    };
    let s_prime: Vec<FourierTaylorSeries> = (0..n)
        .map(|j| g.s_pot.deriv_theta(j))
        .collect::<Result<_>>()?;

    struct InvPoint {
        v_inv: Vec<f64>,
        rho_inv: Vec<f64>,
    }
    let mut out: Vec<Option<Result<InvPoint>>> = Vec::with_capacity(total);
    out.resize_with(total, || None);
    parallel_chunks(&mut out, 128, |offset, chunk| {
        let r0 = vec![0.0; n];
        for (i, slot) in chunk.iter_mut().enumerate() {
            let flat = offset + i;
            let theta = disc.point(flat);
            // Newton for ψ with ψ + v(ψ) = θ.
            let mut psi = theta.clone();
            for j in 0..n {
                psi[j] -= g.v[j].eval_complex(&theta, &r0).re;
            }
            let mut ok = false;
            let mut residual = f64::INFINITY;
            for _iter in 0..30 {
                let mut jac = linalg::identity(n);
                let mut err = vec![0.0; n];
                for a in 0..n {
                    err[a] = psi[a] + g.v[a].eval_complex(&psi, &r0).re - theta[a];
                    for b in 0..n {
                        jac[a * n + b] += dv[a * n + b].eval_complex(&psi, &r0).re;
                    }
                }
                let inv_jac = match linalg::invert(&jac, n) {
                    Some(m) => m,
                    None => break,
                };
                let delta = linalg::mat_vec(&inv_jac, &err, n);
                residual = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                for a in 0..n {
                    psi[a] -= delta[a];
                }
                if residual <= 1e-14 {
                    ok = true;
                    break;
                }
            }
            if !ok {
                *slot = Some(Err(Error::NewtonStagnation {
                    iters: 30,
                    residual,
                }));
                continue;
            }
            // ψ'(θ) = (I + v'(ψ))⁻¹ evaluated at the converged point (the
            // in-loop Jacobian is one iterate stale); transport the form:
            // ρ_inv(θ) = −ρ(ψ)·ψ'(θ).
            let mut jac = linalg::identity(n);
            for a in 0..n {
                for b in 0..n {
                    jac[a * n + b] += dv[a * n + b].eval_complex(&psi, &r0).re;
                }
            }
            let psi_prime = match linalg::invert(&jac, n) {
                Some(m) => m,
                None => {
                    *slot = Some(Err(Error::NotNearIdentity { min_det: 0.0 }));
                    continue;
                }
            };
            let mut rho_at = vec![0.0; n];
            for j in 0..n {
                rho_at[j] = g.r_const[j] + s_prime[j].eval_complex(&psi, &r0).re;
            }
            let transported = linalg::vec_mat(&rho_at, &psi_prime, n);
            *slot = Some(Ok(InvPoint {
                v_inv: (0..n).map(|j| psi[j] - theta[j]).collect(),
                rho_inv: transported.iter().map(|x| -x).collect(),
            }));
        }
    });

    let mut v_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    let mut rho_grids: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; total]; n];
    for (flat, slot) in out.into_iter().enumerate() {
        let ip = slot.expect("filled")?;
        for j in 0..n {
            v_grids[j][flat] = Complex64::new(ip.v_inv[j], 0.0);
            rho_grids[j][flat] = Complex64::new(ip.rho_inv[j], 0.0);
        }
    }
    let mut v = Vec::with_capacity(n);
    for grid in &v_grids {
        let (series, _, _) = disc.theta_series_from_grid(grid, 0.0);
        v.push(series);
    }
    assemble_from_grids(disc, v, &rho_grids)
}

/// Pullback `H ∘ G` on the oversampled grid: evaluate the Taylor
/// coefficients of `H` at the mapped angles, substitute the affine action
/// map `r -> (r + ρ(θ))·φ'(θ)⁻¹`, and project back per Taylor order.
/// Returns the composed series and the discarded majorant mass at `s_debt`.
pub fn pullback(
    h: &FourierTaylorSeries,
    g: &GroupElement,
    disc: &Discretization,
    s_debt: f64,
) -> Result<(FourierTaylorSeries, f64)> {
    let n = h.dim();
    if g.dim() != n || disc.dim() != n {
        return Err(Error::DimensionMismatch(g.dim(), n));
    }
    let total = disc.total_points();
    let n_orders = disc.num_orders();

    let v_grid: Vec<Vec<Complex64>> = g.v.iter().map(|vi| disc.eval_theta_on_grid(vi)).collect();
    let mut dv_grid = Vec::with_capacity(n * n);
    for vi in &g.v {
        for j in 0..n {
            dv_grid.push(disc.eval_theta_on_grid(&vi.deriv_theta(j)?));
        }
    }
    let s_prime_grid: Vec<Vec<Complex64>> = (0..n)
        .map(|j| Ok(disc.eval_theta_on_grid(&g.s_pot.deriv_theta(j)?)))
        .collect::<Result<_>>()?;

    // Precompute m-degree lookup: slot -> per-axis degrees.
    let m_list = disc.m_indices().to_vec();

    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(total);
    out.resize_with(total, Vec::new);
    parallel_chunks(&mut out, 64, |offset, chunk| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            let flat = offset + i;
            let theta = disc.point(flat);
            let mut mapped = theta.clone();
            for j in 0..n {
                mapped[j] += v_grid[j][flat].re;
            }
            // A = (I + v')⁻¹ and b = ρ·A at this point.
            let mut jac = linalg::identity(n);
            for a in 0..n {
                for b in 0..n {
                    jac[a * n + b] += dv_grid[a * n + b][flat].re;
                }
            }
            let a_inv = match linalg::invert(&jac, n) {
                Some(m) => m,
                None => {
                    *slot = vec![Complex64::new(f64::NAN, 0.0); n_orders];
                    continue;
                }
            };
            let mut rho = vec![0.0; n];
            for j in 0..n {
                rho[j] = g.r_const[j] + s_prime_grid[j][flat].re;
            }
            let b_vec = linalg::vec_mat(&rho, &a_inv, n);

            // Taylor coefficients of H at the mapped angle (real by the
            // reality invariant; the imaginary part is transform noise).
            let h_orders = disc.eval_orders_at(h, &mapped);

            // Substitute r'_j = b_j + Σ_l A_lj r_l into the polynomial.
            let powers: Vec<Vec<Vec<f64>>> = (0..n)
                .map(|j| {
                    let linear: Vec<f64> = (0..n).map(|l| a_inv[l * n + j]).collect();
                    disc.poly_powers(&disc.poly_affine(b_vec[j], &linear))
                })
                .collect();
            let mut acc = vec![Complex64::ZERO; n_orders];
            for (in_slot, val) in h_orders.iter().enumerate() {
                if val.norm() == 0.0 {
                    continue;
                }
                let m = m_list[in_slot];
                let mut prod = powers[0][usize::from(m[0])].clone();
                for j in 1..n {
                    prod = disc.poly_mul(&prod, &powers[j][usize::from(m[j])]);
                }
                let v_re = val.re;
                for (o, p) in prod.iter().enumerate() {
                    if *p != 0.0 {
                        acc[o] += Complex64::new(v_re * p, 0.0);
                    }
                }
            }
            *slot = acc;
        }
    });

    // Re-shape into per-order grids and project.
    let mut grids: Vec<(usize, Vec<Complex64>)> = (0..n_orders)
        .map(|o| (o, vec![Complex64::ZERO; total]))
        .collect();
    for (flat, vals) in out.iter().enumerate() {
        for (o, v) in vals.iter().enumerate() {
            if !v.re.is_finite() {
                return Err(Error::NotNearIdentity { min_det: 0.0 });
            }
            grids[o].1[flat] = *v;
        }
    }
    let (series, debt, _) = disc.series_from_order_grids(&grids, s_debt);
    let ratio = series.high_mode_energy_fraction();
    if ratio > ALIASING_LIMIT {
        return Err(Error::AliasingAlarm {
            ratio,
            limit: ALIASING_LIMIT,
        });
    }
    Ok((series, debt))
}

/// Max symplectic-form defect `‖Jᵀ Ω J − Ω‖_∞` of an arbitrary phase-space
/// map over seeded random points with `|r| ≤ 0.1`, Jacobian by central
/// differences (step 1e-5). Exposed generically so negative controls can
/// corrupt the map.
pub fn symplectic_defect_of_map<F>(map: F, n: usize, npoints: usize, seed: u64) -> f64
where
    F: Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
{
    let dim = 2 * n;
    let h = 1e-5;
    let mut rng = SplitMix64::stream(seed, "symplectic-defect");
    let mut worst = 0.0f64;
    for _ in 0..npoints {
        let theta: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let r: Vec<f64> = (0..n).map(|_| rng.uniform(-0.1, 0.1)).collect();
        // Columns of the Jacobian by central differences in each coordinate.
        let mut jac = vec![0.0; dim * dim];
        for col in 0..dim {
            let mut tp = theta.clone();
            let mut rp = r.clone();
            let mut tm = theta.clone();
            let mut rm = r.clone();
            if col < n {
                tp[col] += h;
                tm[col] -= h;
            } else {
                rp[col - n] += h;
                rm[col - n] -= h;
            }
            let (tp_out, rp_out) = map(&tp, &rp);
            let (tm_out, rm_out) = map(&tm, &rm);
            for row in 0..dim {
                let plus = if row < n { tp_out[row] } else { rp_out[row - n] };
                let minus = if row < n { tm_out[row] } else { rm_out[row - n] };
                jac[row * dim + col] = (plus - minus) / (2.0 * h);
            }
        }
        // Ω with blocks [[0, I], [−I, 0]].
        let omega = |i: usize, j: usize| -> f64 {
            if i < n && j == i + n {
                1.0
            } else if i >= n && j == i - n {
                -1.0
            } else {
                0.0
            }
        };
        for a in 0..dim {
            for b in 0..dim {
                // (Jᵀ Ω J)_ab = Σ_ij J_ia Ω_ij J_jb
                let mut acc = 0.0;
                for i in 0..dim {
                    let ji = jac[i * dim + a];
                    if ji == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        let w = omega(i, j);
                        if w != 0.0 {
                            acc += ji * w * jac[j * dim + b];
                        }
                    }
                }
                worst = worst.max((acc - omega(a, b)).abs());
            }
        }
    }
    worst
}

/// Symplectic defect of a group element's phase-space action.
pub fn symplectic_defect(g: &GroupElement, npoints: usize, seed: u64) -> f64 {
    symplectic_defect_of_map(
        |theta, r| g.apply_point(theta, r),
        g.dim(),
        npoints,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::StripParams;

    fn disc1() -> Discretization {
        Discretization::new(1, 8, 4, 2).unwrap()
    }

    fn sin_field(delta: f64, kmax: u32) -> LieElement {
        // φ̇ = δ sin(2πθ)
        let sin = FourierTaylorSeries::new(
            1,
            kmax,
            0,
            &[
                (vec![1], vec![0], Complex64::new(0.0, -delta / 2.0)),
                (vec![-1], vec![0], Complex64::new(0.0, delta / 2.0)),
            ],
        )
        .unwrap();
        LieElement::new(vec![0.0], FourierTaylorSeries::zero(1, kmax, 0), vec![sin]).unwrap()
    }

    #[test]
    fn flow_of_zero_is_identity() {
        let g = time_one_flow(&LieElement::zero(1, 8, 4), &disc1()).unwrap();
        assert!(g.v[0].is_empty());
        assert_eq!(g.r_const[0], 0.0);
        assert!(g.s_pot.is_empty());
    }

    #[test]
    fn flow_of_constant_translation() {
        // Ġ = (Ṙ = 0.1, 0, 0) flows to (θ, r + 0.1).
        let gd = LieElement::new(
            vec![0.1],
            FourierTaylorSeries::zero(1, 8, 0),
            vec![FourierTaylorSeries::zero(1, 8, 0)],
        )
        .unwrap();
        let g = time_one_flow(&gd, &disc1()).unwrap();
        assert!(g.v[0].majorant_norm(0.0) < 1e-14);
        assert!((g.r_const[0] - 0.1).abs() < 1e-13);
        assert!(g.s_pot.majorant_norm(0.0) < 1e-13);
        let (t, r) = g.apply_point(&[0.3], &[0.05]);
        assert!((t[0] - 0.3).abs() < 1e-13);
        assert!((r[0] - 0.15).abs() < 1e-13);
    }

    #[test]
    fn flow_matches_closed_form() {
        // θ̇ = δ sin(2πθ) has the closed-form time-1 map
        // tan(πθ₁) = tan(πθ₀) e^{2πδ}.
        let delta = 0.01;
        let g = time_one_flow(&sin_field(delta, 8), &disc1()).unwrap();
        let theta0 = 0.25;
        let expect = (std::f64::consts::PI * theta0).tan() * (TAU * delta).exp();
        let expect = expect.atan() / std::f64::consts::PI;
        let (t, r) = g.apply_point(&[theta0], &[0.0]);
        assert!(
            (t[0] - expect).abs() < 1e-10,
            "flow {} vs closed form {}",
            t[0],
            expect
        );
        // Pure angle fields leave the zero section invariant.
        assert!(r[0].abs() < 1e-12);
    }

    #[test]
    fn exp_gate_accepts_and_refuses() {
        let strips = StripParams::new(0.1, 0.2).unwrap();
        let disc = disc1();
        let bound = gamma0(1) * strips.sigma * strips.sigma;

        let raw = sin_field(1.0, 8);
        let norm = raw.norm(strips.outer());
        let fit = LieElement::new(
            vec![0.0],
            FourierTaylorSeries::zero(1, 8, 0),
            vec![raw.phi_dot[0].scale(0.9 * bound / norm)],
        )
        .unwrap();
        let g = exp(&fit, &strips, &disc).unwrap();
        let dev = g.deviation_norm(strips.s);
        assert!(dev <= c0(1) / strips.sigma * fit.norm(strips.outer()));

        let too_big = LieElement::new(
            vec![0.0],
            FourierTaylorSeries::zero(1, 8, 0),
            vec![raw.phi_dot[0].scale(1.1 * bound / norm)],
        )
        .unwrap();
        assert!(matches!(
            exp(&too_big, &strips, &disc),
            Err(Error::ExpPrecondition { .. })
        ));
    }

    #[test]
    fn contraction_gate_refuses_large_fields() {
        // δ = 0.5 gives |φ̇'| ≈ π, far beyond contraction.
        let err = time_one_flow(&sin_field(0.5, 8), &disc1());
        assert!(matches!(err, Err(Error::ExpContraction { .. })));
    }

    #[test]
    fn compose_with_identity_and_translations() {
        let disc = disc1();
        let g = time_one_flow(&sin_field(0.01, 8), &disc).unwrap();
        let id = GroupElement::identity(1, 8, 4);
        let right = compose(&g, &id, &disc).unwrap();
        let left = compose(&id, &g, &disc).unwrap();
        for probe in [0.0, 0.3, 0.77] {
            let (a, _) = g.apply_point(&[probe], &[0.0]);
            let (b, _) = right.apply_point(&[probe], &[0.0]);
            let (c, _) = left.apply_point(&[probe], &[0.0]);
            assert!((a[0] - b[0]).abs() < 1e-12);
            assert!((a[0] - c[0]).abs() < 1e-12);
        }

        let t1 = GroupElement::translation(&[0.05], 8, 4);
        let t2 = GroupElement::translation(&[0.07], 8, 4);
        let t3 = compose(&t1, &t2, &disc).unwrap();
        assert!((t3.r_const[0] - 0.12).abs() < 1e-14);
        assert!(t3.s_pot.is_empty());
    }

    #[test]
    fn exp_of_opposite_generators_compose_to_identity() {
        let disc = disc1();
        let gd = sin_field(0.01, 8);
        let gp = time_one_flow(&gd, &disc).unwrap();
        let gm = time_one_flow(&gd.neg(), &disc).unwrap();
        let comp = compose(&gp, &gm, &disc).unwrap();
        assert!(comp.deviation_norm(0.05) < 1e-10, "{}", comp.deviation_norm(0.05));
    }

    #[test]
    fn inverse_examples() {
        let disc = disc1();
        let id = GroupElement::identity(1, 8, 4);
        let inv = inverse(&id, &disc).unwrap();
        assert!(inv.deviation_norm(0.05) < 1e-13);

        let t = GroupElement::translation(&[0.2], 8, 4);
        let ti = inverse(&t, &disc).unwrap();
        assert!((ti.r_const[0] + 0.2).abs() < 1e-13);

        // inverse(exp(Ġ)) vs exp(−Ġ): compose to identity at 1e-10.
        let gd = sin_field(0.01, 8);
        let g = time_one_flow(&gd, &disc).unwrap();
        let gi = inverse(&g, &disc).unwrap();
        let comp = compose(&g, &gi, &disc).unwrap();
        assert!(comp.deviation_norm(0.05) < 1e-10);
        let gm = time_one_flow(&gd.neg(), &disc).unwrap();
        let diff = gi.deviation_norm(0.0) - gm.deviation_norm(0.0);
        assert!(diff.abs() < 1e-3); // agree to O(|Ġ|²)
    }

    #[test]
    fn pullback_examples() {
        let disc = disc1();
        // pullback(H, id) = H
        let r = FourierTaylorSeries::action_monomial(1, 8, 4, 0);
        let (r2, _) = r.mul(&r, 0.1).unwrap();
        let h = r.scale(0.618).add(&r2).unwrap();
        let id = GroupElement::identity(1, 8, 4);
        let (back, _) = pullback(&h, &id, &disc, 0.1).unwrap();
        let diff = back.sub(&h).unwrap();
        assert!(diff.majorant_norm(0.1) < 1e-13);

        // pullback(αr, translation R) = αR + αr
        let alpha = 0.618;
        let lin = r.scale(alpha);
        let t = GroupElement::translation(&[0.1], 8, 4);
        let (pb, _) = pullback(&lin, &t, &disc, 0.1).unwrap();
        assert!((pb.mean_value() - alpha * 0.1).abs() < 1e-13);
        assert!((pb.coeff(&[0], &[1]).re - alpha).abs() < 1e-13);

        // pullback(r², G with ρ = S', S = ε sin(2πθ)/(2π)):
        //   (r + ε cos 2πθ)² = ε²cos² + 2ε cos·r + r².
        let eps = 1e-3;
        let s = FourierTaylorSeries::new(
            1,
            8,
            4,
            &[
                (vec![1], vec![0], Complex64::new(0.0, -eps / (2.0 * TAU))),
                (vec![-1], vec![0], Complex64::new(0.0, eps / (2.0 * TAU))),
            ],
        )
        .unwrap();
        let g = GroupElement {
            v: vec![FourierTaylorSeries::zero(1, 8, 4)],
            r_const: vec![0.0],
            s_pot: s,
        };
        let (pb, _) = pullback(&r2, &g, &disc, 0.1).unwrap();
        let theta = [0.2];
        let rr = [0.03];
        let expect = (rr[0] + eps * (TAU * theta[0]).cos()).powi(2);
        let got = pb.evaluate(&theta, &rr).unwrap();
        assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
    }

    #[test]
    fn aliasing_alarm_fires_on_underresolved_composition() {
        // A narrow band with a sizeable displacement pushes composition
        // sidebands into the top third of the retained modes; a tiny
        // displacement keeps them at roundoff.
        let kmax = 4;
        let disc = Discretization::new(1, kmax, 2, 2).unwrap();
        let h = FourierTaylorSeries::new(
            1,
            kmax,
            2,
            &[
                (vec![1], vec![0], Complex64::new(0.5, 0.0)),
                (vec![-1], vec![0], Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        let shift = |amp: f64| {
            let v = FourierTaylorSeries::new(
                1,
                kmax,
                2,
                &[
                    (vec![1], vec![0], Complex64::new(0.0, -amp / 2.0)),
                    (vec![-1], vec![0], Complex64::new(0.0, amp / 2.0)),
                ],
            )
            .unwrap();
            GroupElement {
                v: vec![v],
                r_const: vec![0.0],
                s_pot: FourierTaylorSeries::zero(1, kmax, 2),
            }
        };
        assert!(pullback(&h, &shift(1e-6), &disc, 0.1).is_ok());
        assert!(matches!(
            pullback(&h, &shift(0.2), &disc, 0.1),
            Err(Error::AliasingAlarm { .. })
        ));
    }

    #[test]
    fn apply_point_translation() {
        let t = GroupElement::translation(&[0.1], 8, 4);
        let (theta, r) = t.apply_point(&[0.4], &[0.02]);
        assert!((theta[0] - 0.4).abs() < 1e-15);
        assert!((r[0] - 0.12).abs() < 1e-15);
    }

    #[test]
    fn symplectic_defect_examples() {
        let disc = disc1();
        let id = GroupElement::identity(1, 8, 4);
        assert!(symplectic_defect(&id, 20, 0) < 1e-9);

        let g = time_one_flow(&sin_field(0.01, 8), &disc).unwrap();
        let d = symplectic_defect(&g, 50, 0);
        assert!(d < 1e-7, "defect {d}");

        // Negative control: a non-closed 1-form needs two angles — inject a
        // θ₂-dependent term into the r₁ pathway only, so ∂ρ₁/∂θ₂ ≠ ∂ρ₂/∂θ₁.
        let corrupted = |theta: &[f64], r: &[f64]| {
            let mut ri = r.to_vec();
            ri[0] += 0.01 * (TAU * theta[1]).sin();
            (theta.to_vec(), ri)
        };
        let dc = symplectic_defect_of_map(corrupted, 2, 50, 0);
        assert!(dc > 1e-3, "corrupted defect {dc}");
    }

    #[test]
    fn pullback_linearizes_to_directional_derivative() {
        // (pullback(H, exp(tĠ)) − H)/t approaches H'·Ġ as t -> 0; compare
        // with Richardson extrapolation from t = 1e-4 and 5e-5.
        let disc = disc1();
        let r = FourierTaylorSeries::action_monomial(1, 8, 4, 0);
        let (r2, _) = r.mul(&r, 0.1).unwrap();
        let cos = FourierTaylorSeries::new(
            1,
            8,
            4,
            &[
                (vec![1], vec![0], Complex64::new(0.15, 0.0)),
                (vec![-1], vec![0], Complex64::new(0.15, 0.0)),
            ],
        )
        .unwrap();
        let h = r.scale(0.618).add(&r2).unwrap().add(&cos).unwrap();

        let sin = FourierTaylorSeries::new(
            1,
            8,
            0,
            &[
                (vec![1], vec![0], Complex64::new(0.0, -0.25)),
                (vec![-1], vec![0], Complex64::new(0.0, 0.25)),
            ],
        )
        .unwrap();
        let g_dot = LieElement::new(vec![0.3], sin.clone(), vec![sin.scale(0.8)]).unwrap();

        let quotient = |t: f64| {
            let scaled = LieElement::new(
                g_dot.r_dot.iter().map(|x| x * t).collect(),
                g_dot.s_dot.scale(t),
                vec![g_dot.phi_dot[0].scale(t)],
            )
            .unwrap();
            let g = time_one_flow(&scaled, &disc).unwrap();
            let (pb, _) = pullback(&h, &g, &disc, 0.1).unwrap();
            pb.sub(&h).unwrap().scale(1.0 / t)
        };
        let d1 = quotient(1e-4);
        let d2 = quotient(5e-5);
        let richardson = d2.scale(2.0).sub(&d1).unwrap();
        let (expect, _) =
            crate::normalform::series_directional_derivative(&h, &g_dot, 0.1).unwrap();
        let err = richardson.sub(&expect).unwrap().majorant_norm(0.1);
        let scale = expect.majorant_norm(0.1);
        assert!(err / scale < 1e-6, "relative error {}", err / scale);
    }

    #[test]
    fn deviation_bound_on_random_generators() {
        // |exp Ġ − id|_s ≤ 6n σ⁻¹ |Ġ|_{s+σ} whenever the gate passes.
        let strips = StripParams::new(0.1, 0.25).unwrap();
        let disc = disc1();
        let mut rng = SplitMix64::new(42);
        let bound = gamma0(1) * strips.sigma * strips.sigma;
        for _ in 0..20 {
            let mut phi_coeffs = Vec::new();
            let mut s_coeffs = Vec::new();
            for k in 1..=4i64 {
                phi_coeffs.push((
                    vec![k],
                    vec![0u32],
                    Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ));
                s_coeffs.push((
                    vec![k],
                    vec![0u32],
                    Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ));
            }
            let phi = FourierTaylorSeries::new(1, 8, 0, &phi_coeffs).unwrap();
            let s = FourierTaylorSeries::new(1, 8, 0, &s_coeffs).unwrap();
            let raw = LieElement::new(vec![rng.uniform(-1.0, 1.0)], s, vec![phi]).unwrap();
            let norm = raw.norm(strips.outer());
            let scale = 0.9 * bound / norm;
            let fit = LieElement::new(
                raw.r_dot.iter().map(|x| x * scale).collect(),
                raw.s_dot.scale(scale),
                vec![raw.phi_dot[0].scale(scale)],
            )
            .unwrap();
            let g = exp(&fit, &strips, &disc).unwrap();
            let dev = g.deviation_norm(strips.s);
            let cap = c0(1) / strips.sigma * fit.norm(strips.outer());
            assert!(dev <= cap, "deviation {dev} vs cap {cap}");
        }
    }
}
