//! Dense linear algebra for the tiny (n <= 4) matrices that appear in the
//! averaged quadratic form and in per-grid-point Jacobians.

/// Row-major n x n matrix of f64, n <= 4.
pub type SmallMat = Vec<f64>;

pub fn identity(n: usize) -> SmallMat {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    a
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[piv * n + col].abs() {
                piv = row;
            }
        }
        if m[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            d = -d;
        }
        d *= m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
        }
    }
    d
}

/// Inverse by Gauss-Jordan with partial pivoting. Returns None when singular.
pub fn invert(a: &[f64], n: usize) -> Option<SmallMat> {
    let mut m = a.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[piv * n + col].abs() {
                piv = row;
            }
        }
        let p = m[piv * n + col];
        if p == 0.0 || !p.is_finite() {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
                inv.swap(col * n + j, piv * n + j);
            }
        }
        let p = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col];
            if f != 0.0 {
                for j in 0..n {
                    m[row * n + j] -= f * m[col * n + j];
                    inv[row * n + j] -= f * inv[col * n + j];
                }
            }
        }
    }
    Some(inv)
}

/// Infinity-norm condition estimate ||A||_inf * ||A^-1||_inf.
pub fn condition_inf(a: &[f64], n: usize) -> f64 {
    match invert(a, n) {
        Some(inv) => norm_inf(a, n) * norm_inf(&inv, n),
        None => f64::INFINITY,
    }
}

pub fn norm_inf(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve A x = b for a single right-hand side (n <= 4), with the condition
/// estimate of the matrix returned alongside.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    let inv = invert(a, n)?;
    let cond = norm_inf(a, n) * norm_inf(&inv, n);
    let x = mat_vec(&inv, b, n);
    Some((x, cond))
}

/// y = A v (column action).
pub fn mat_vec(a: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
        .collect()
}

/// y = v A (row-covector action), the convention for 1-forms.
pub fn vec_mat(v: &[f64], a: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (0..n).map(|i| v[i] * a[i * n + j]).sum())
        .collect()
}

#[cfg(test)]
pub fn mat_mul(a: &[f64], b: &[f64], n: usize) -> SmallMat {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            let ail = a[i * n + l];
            if ail != 0.0 {
                for j in 0..n {
                    c[i * n + j] += ail * b[l * n + j];
                }
            }
        }
    }
    c
}
