//! Oversampled-grid discretization shared by the group operations.
//!
//! Compositions and flows are computed by evaluating series on a uniform
//! angle grid (oversampled by a configurable factor), doing the pointwise
//! geometry there, and projecting back to Fourier coefficients with a direct
//! separable DFT. Exact N-th roots of unity are used as twiddles, and
//! projected series are chopped at a noise floor proportional to the grid
//! amplitude so that transform roundoff never pollutes majorant norms.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::series::{majorant_weight, FourierTaylorSeries, CHOP_RELATIVE, MAX_DIM};
use crate::{Error, Result};

/// Upper bound used by the aliasing alarm: fraction of coefficient energy
/// allowed in the top third of the retained Fourier band.
pub const ALIASING_LIMIT: f64 = 1e-8;

/// Grid and truncation geometry for one run.
#[derive(Clone, Debug)]
pub struct Discretization {
    dim: usize,
    kmax: u32,
    mmax: u32,
    oversample: u32,
    /// Points per axis.
    n_axis: usize,
    /// e^{2πi j / n_axis} for j in 0..n_axis.
    roots: Vec<Complex64>,
    /// Taylor multi-indices with |m|1 <= mmax, graded-lexicographic.
    m_list: Vec<[u8; MAX_DIM]>,
    /// product_table[a * len + b] = slot of m_a + m_b (always within bounds
    /// for the affine substitutions this basis is used for).
    product_table: Vec<Option<u16>>,
}

impl Discretization {
    pub fn new(dim: usize, kmax: u32, mmax: u32, oversample: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if oversample < 2 {
            return Err(Error::Config("oversample must be >= 2".into()));
        }
        if kmax == 0 {
            return Err(Error::Config("kmax must be positive".into()));
        }
        let n_axis = oversample as usize * (2 * kmax as usize + 1);
        let roots = (0..n_axis)
            .map(|j| {
                let (sin, cos) = (TAU * j as f64 / n_axis as f64).sin_cos();
                Complex64::new(cos, sin)
            })
            .collect();
        let m_list = enumerate_m(dim, mmax);
        let len = m_list.len();
        let mut product_table = vec![None; len * len];
        for (a, ma) in m_list.iter().enumerate() {
            for (b, mb) in m_list.iter().enumerate() {
                let mut sum = [0u8; MAX_DIM];
                let mut tot = 0u32;
                for j in 0..MAX_DIM {
                    sum[j] = ma[j] + mb[j];
                    tot += u32::from(sum[j]);
                }
                if tot <= mmax {
                    let slot = m_list.iter().position(|m| *m == sum).unwrap();
                    product_table[a * len + b] = Some(slot as u16);
                }
            }
        }
        Ok(Discretization {
            dim,
            kmax,
            mmax,
            oversample,
            n_axis,
            roots,
            m_list,
            product_table,
        })
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

    pub fn oversample(&self) -> u32 {
        self.oversample
    }

    pub fn points_per_axis(&self) -> usize {
        self.n_axis
    }

    pub fn total_points(&self) -> usize {
        self.n_axis.pow(self.dim as u32)
    }

    pub fn m_indices(&self) -> &[[u8; MAX_DIM]] {
        &self.m_list
    }

    pub fn m_slot(&self, m: &[u8; MAX_DIM]) -> Option<usize> {
        self.m_list.iter().position(|x| x == m)
    }

    pub fn num_orders(&self) -> usize {
        self.m_list.len()
    }

    /// Angle coordinates of the flat grid index (axis 0 varies fastest).
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push((rem % self.n_axis) as f64 / self.n_axis as f64);
            rem /= self.n_axis;
        }
        out
    }

    /// Exact twiddle `e^{2πi (k * idx) / n_axis}` for signed k.
    fn twiddle(&self, k: i64, idx: usize) -> Complex64 {
        let n = self.n_axis as i64;
        let phase = ((k * idx as i64) % n + n) % n;
        self.roots[phase as usize]
    }

    /// `e^{2πi k·θ}` at the flat grid index, from exact twiddles.
    pub fn grid_phase(&self, k: &[i64], flat: usize) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        let mut rem = flat;
        for kj in k.iter().take(self.dim) {
            let gi = rem % self.n_axis;
            rem /= self.n_axis;
            z *= self.twiddle(*kj, gi);
        }
        z
    }

    /// Evaluate a theta-only series at the uniform grid points (exact
    /// twiddles, sparse-friendly).
    pub fn eval_theta_on_grid(&self, f: &FourierTaylorSeries) -> Vec<Complex64> {
        let total = self.total_points();
        let mut out = vec![Complex64::ZERO; total];
        for (idx, c) in f.iter() {
            for (flat, slot) in out.iter_mut().enumerate() {
                let mut w = *c;
                let mut rem = flat;
                for j in 0..self.dim {
                    let gi = rem % self.n_axis;
                    rem /= self.n_axis;
                    w *= self.twiddle(idx.k(j), gi);
                }
                *slot += w;
            }
        }
        out
    }

    /// Per-axis tables e^{2πi k x_j} for k in 0..=kmax at an arbitrary point.
    /// Negative k use the conjugate.
    pub fn point_powers(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        (0..self.dim)
            .map(|j| {
                (0..=self.kmax as i64)
                    .map(|k| {
                        let (sin, cos) = (TAU * k as f64 * x[j]).sin_cos();
                        Complex64::new(cos, sin)
                    })
                    .collect()
            })
            .collect()
    }

    fn power(&self, tables: &[Vec<Complex64>], axis: usize, k: i64) -> Complex64 {
        if k >= 0 {
            tables[axis][k as usize]
        } else {
            tables[axis][(-k) as usize].conj()
        }
    }

    /// Evaluate every Taylor-order coefficient function of `f` at the point
    /// `x` (theta only); returns one complex value per m-slot.
    pub fn eval_orders_at(&self, f: &FourierTaylorSeries, x: &[f64]) -> Vec<Complex64> {
        let tables = self.point_powers(x);
        let mut out = vec![Complex64::ZERO; self.m_list.len()];
        for (idx, c) in f.iter() {
            let mut w = *c;
            for j in 0..self.dim {
                w *= self.power(&tables, j, idx.k(j));
            }
            let mut m = [0u8; MAX_DIM];
            for j in 0..self.dim {
                m[j] = idx.m(j) as u8;
            }
            if let Some(slot) = self.m_slot(&m) {
                out[slot] += w;
            }
        }
        out
    }

    /// Evaluate a theta-only series at an arbitrary point.
    pub fn eval_theta_at(&self, f: &FourierTaylorSeries, x: &[f64]) -> Complex64 {
        let tables = self.point_powers(x);
        let mut acc = Complex64::ZERO;
        for (idx, c) in f.iter() {
            let mut w = *c;
            for j in 0..self.dim {
                w *= self.power(&tables, j, idx.k(j));
            }
            acc += w;
        }
        acc
    }

    /// Separable forward DFT of a full grid onto the mode rectangle
    /// `|k_j| <= kmax`, normalized so the output are Fourier coefficients.
    /// Returns a flat array over mode slots, axis 0 fastest, slot t <-> k =
    /// t - kmax.
    pub fn dft_rectangle(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_axis;
        let km = self.kmax as i64;
        let modes = 2 * self.kmax as usize + 1;
        let mut shape: Vec<usize> = vec![n; self.dim];
        let mut data = values.to_vec();
        for axis in 0..self.dim {
            let mut new_shape = shape.clone();
            new_shape[axis] = modes;
            let in_strides = strides(&shape);
            let out_strides = strides(&new_shape);
            let mut out = vec![Complex64::ZERO; new_shape.iter().product()];
            // Iterate over every position of the other axes.
            let outer: usize = shape
                .iter()
                .enumerate()
                .filter(|(a, _)| *a != axis)
                .map(|(_, s)| s)
                .product();
            for row in 0..outer {
                // Decode `row` into the other-axis indices.
                let mut rem = row;
                let mut in_base = 0usize;
                let mut out_base = 0usize;
                for a in 0..self.dim {
                    if a == axis {
                        continue;
                    }
                    let ia = rem % shape[a];
                    rem /= shape[a];
                    in_base += ia * in_strides[a];
                    out_base += ia * out_strides[a];
                }
                for t in 0..modes {
                    let k = t as i64 - km;
                    let mut acc = Complex64::ZERO;
                    for i in 0..n {
                        // e^{-2πi k i / n}
                        acc += data[in_base + i * in_strides[axis]] * self.twiddle(-k, i);
                    }
                    out[out_base + t * out_strides[axis]] = acc / n as f64;
                }
            }
            data = out;
            shape = new_shape;
        }
        data
    }

    /// Project per-order grids of values into a series: DFT each order, keep
    /// the l1 Fourier ball, record discarded mass, chop the transform noise
    /// floor and symmetrize. Returns (series, truncation debt at `s_debt`,
    /// grid amplitude used for the chop floor).
    pub fn series_from_order_grids(
        &self,
        grids: &[(usize, Vec<Complex64>)],
        s_debt: f64,
    ) -> (FourierTaylorSeries, f64, f64) {
        let mut series = FourierTaylorSeries::zero(self.dim, self.kmax, self.mmax);
        let mut debt = 0.0;
        let mut scale = 0.0f64;
        for (_, values) in grids {
            for v in values {
                scale = scale.max(v.norm());
            }
        }
        let floor = CHOP_RELATIVE * scale;
        let modes = 2 * self.kmax as usize + 1;
        for (slot, values) in grids {
            let m = self.m_list[*slot];
            let m_abs: u32 = m.iter().map(|&x| u32::from(x)).sum();
            let rect = self.dft_rectangle(values);
            for (flat, c) in rect.iter().enumerate() {
                let mut rem = flat;
                let mut k = [0i64; MAX_DIM];
                let mut k_abs = 0u32;
                for j in 0..self.dim {
                    let t = rem % modes;
                    rem /= modes;
                    k[j] = t as i64 - self.kmax as i64;
                    k_abs += k[j].unsigned_abs() as u32;
                }
                if c.norm() <= floor {
                    // Below the transform noise floor: charged flat.
                    debt += c.norm();
                    continue;
                }
                if k_abs > self.kmax {
                    // Out-of-band signal: charged at the working strip.
                    debt += c.norm() * majorant_weight(s_debt, k_abs, m_abs);
                    continue;
                }
                let kv: Vec<i64> = k[..self.dim].to_vec();
                let mv: Vec<u32> = (0..self.dim).map(|j| u32::from(m[j])).collect();
                let idx = crate::series::Index::new(&kv, &mv).expect("in-range index");
                series.insert_raw(idx, *c);
            }
        }
        series.symmetrize();
        (series, debt, scale)
    }

    /// Single-order convenience wrapper for theta-only grids.
    pub fn theta_series_from_grid(
        &self,
        values: &[Complex64],
        s_debt: f64,
    ) -> (FourierTaylorSeries, f64, f64) {
        self.series_from_order_grids(&[(0usize, values.to_vec())], s_debt)
    }

    // ---- real polynomial algebra over the Taylor basis -------------------

    /// Zero polynomial in the m-basis.
    pub fn poly_zero(&self) -> Vec<f64> {
        vec![0.0; self.m_list.len()]
    }

    /// The affine polynomial `constant + Σ_l linear[l] r_l`.
    pub fn poly_affine(&self, constant: f64, linear: &[f64]) -> Vec<f64> {
        let mut p = self.poly_zero();
        p[0] = constant; // slot 0 is m = 0 by graded order
        for (l, &a) in linear.iter().enumerate() {
            let mut m = [0u8; MAX_DIM];
            m[l] = 1;
            let slot = self.m_slot(&m).expect("degree-one slot");
            p[slot] = a;
        }
        p
    }

    /// Product truncated to the basis (degrees that overflow are dropped;
    /// the affine substitutions used here never overflow).
    pub fn poly_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let len = self.m_list.len();
        let mut out = vec![0.0; len];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0.0 {
                    continue;
                }
                if let Some(slot) = self.product_table[i * len + j] {
                    out[slot as usize] += ai * bj;
                }
            }
        }
        out
    }

    /// Powers p^0, p^1, ..., p^mmax.
    pub fn poly_powers(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.mmax as usize + 1);
        let mut one = self.poly_zero();
        one[0] = 1.0;
        out.push(one);
        for q in 1..=self.mmax as usize {
            let next = self.poly_mul(&out[q - 1], p);
            out.push(next);
        }
        out
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![0usize; shape.len()];
    let mut acc = 1;
    for (a, sh) in shape.iter().enumerate() {
        s[a] = acc;
        acc *= sh;
    }
    s
}

fn enumerate_m(dim: usize, mmax: u32) -> Vec<[u8; MAX_DIM]> {
    let mut out: Vec<[u8; MAX_DIM]> = Vec::new();
    let mut cur = [0u8; MAX_DIM];
    fn rec(dim: usize, mmax: u32, axis: usize, cur: &mut [u8; MAX_DIM], out: &mut Vec<[u8; MAX_DIM]>) {
        if axis == dim {
            out.push(*cur);
            return;
        }
        let used: u32 = cur.iter().map(|&x| u32::from(x)).sum();
        for v in 0..=(mmax - used) {
            cur[axis] = v as u8;
            rec(dim, mmax, axis + 1, cur, out);
        }
        cur[axis] = 0;
    }
    rec(dim, mmax, 0, &mut cur, &mut out);
    out.sort_by_key(|m| {
        let tot: u32 = m.iter().map(|&x| u32::from(x)).sum();
        (tot, *m)
    });
    out
}

/// Thread budget: the `KAM_THREADS` environment variable caps internal
/// parallelism; defaults to a small multiple of the machine's parallelism.
pub fn max_threads() -> usize {
    std::env::var("KAM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get().min(4))
                .unwrap_or(1)
        })
}

/// Run `f(offset, chunk)` over disjoint chunks of `items`, possibly on scoped
/// threads. Each element is written by exactly one invocation, so results do
/// not depend on the thread count.
pub fn parallel_chunks<T, F>(items: &mut [T], min_chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    let len = items.len();
    if len == 0 {
        return;
    }
    let threads = max_threads().min(len.div_ceil(min_chunk.max(1))).max(1);
    if threads == 1 {
        f(0, items);
        return;
    }
    let chunk = len.div_ceil(threads);
    std::thread::scope(|scope| {
        let mut rest = items;
        let mut offset = 0usize;
        let fr = &f;
        let mut handles = Vec::new();
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let off = offset;
            handles.push(scope.spawn(move || fr(off, head)));
            offset += take;
            rest = tail;
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });
}
