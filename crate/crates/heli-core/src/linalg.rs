//! Dense linear algebra for small matrices (n <= ~10).
//!
//! Everything here is sized for the 6x6 refined state matrix: Householder
//! reduction to Hessenberg form, a complex single-shift QR iteration for
//! eigenvalues (Wilkinson shifts, Givens rotations), LU solves in complex
//! arithmetic for inverse iteration, Gauss-Jordan inversion, and spectral
//! norms by power iteration on the Gram matrix.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {0:e} at column {1})")]
    Singular(f64, usize),
    #[error("QR eigenvalue iteration did not converge")]
    QrNoConvergence,
    #[error("power iteration did not converge")]
    PowerNoConvergence,
}

/// Real square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    pub n: usize,
    data: Vec<f64>,
}

impl RMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_array6(a: &[[f64; 6]; 6]) -> Self {
        let mut m = Self::zeros(6);
        for i in 0..6 {
            for j in 0..6 {
                m[(i, j)] = a[i][j];
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_complex(&self) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Spectral norm via power iteration on `A^T A`.
    pub fn spectral_norm(&self) -> f64 {
        self.to_complex().spectral_norm()
    }
}

impl std::ops::Index<(usize, usize)> for RMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                out[i] += self[(i, j)] * v[j];
            }
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale_diag(diag: &[Complex64]) -> CMat {
        let n = diag.len();
        let mut m = CMat::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inverse by Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[(col, col)].norm();
            for r in col + 1..n {
                let mag = a[(r, col)].norm();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return Err(LinalgError::Singular(best, col));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Solves `A x = b` by LU with partial pivoting (A copied).
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let n = self.n;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[(col, col)].norm();
            for r in col + 1..n {
                let mag = a[(r, col)].norm();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return Err(LinalgError::Singular(best, col));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            for r in col + 1..n {
                let f = a[(r, col)] / a[(col, col)];
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                let xc = x[col];
                x[r] -= f * xc;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= a[(i, j)] * x[j];
            }
            x[i] = acc / a[(i, i)];
        }
        Ok(x)
    }

    /// Spectral norm (largest singular value) by power iteration on the
    /// Gram matrix `A^H A`, converged to 1e-12 relative.
    pub fn spectral_norm(&self) -> f64 {
        let n = self.n;
        if self.frobenius() == 0.0 {
            return 0.0;
        }
        // deterministic start with a ramp so it is never orthogonal to the
        // leading singular vector by symmetry
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.0))
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0f64;
        for _ in 0..2000 {
            // w = A^H (A v)
            let av = self.matvec(&v);
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    w[j] += self[(i, j)].conj() * av[i];
                }
            }
            let new_lambda = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if new_lambda == 0.0 {
                return 0.0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / new_lambda;
            }
            if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.max(1e-300) {
                return new_lambda.sqrt();
            }
            lambda = new_lambda;
        }
        // power iteration stalls only for pathological spectra; the Gram
        // eigenvalue estimate is still a valid lower bound, return it
        lambda.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

/// Householder reduction of a real matrix to upper Hessenberg form.
fn hessenberg(a: &RMat) -> RMat {
    let n = a.n;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let mut scale = 0.0;
        for i in k + 1..n {
            scale += h[(i, k)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut v = vec![0.0; n];
        let mut sigma = 0.0;
        for i in k + 1..n {
            v[i] = h[(i, k)] / scale;
            sigma += v[i] * v[i];
        }
        let mut alpha = sigma.sqrt();
        if v[k + 1] > 0.0 {
            alpha = -alpha;
        }
        let beta = sigma - v[k + 1] * alpha;
        if beta == 0.0 {
            continue;
        }
        v[k + 1] -= alpha;
        // H := P H P with P = I - v v^T / beta
        for j in 0..n {
            let mut s = 0.0;
            for i in k + 1..n {
                s += v[i] * h[(i, j)];
            }
            s /= beta;
            for i in k + 1..n {
                h[(i, j)] -= s * v[i];
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in k + 1..n {
                s += v[j] * h[(i, j)];
            }
            s /= beta;
            for j in k + 1..n {
                h[(i, j)] -= s * v[j];
            }
        }
        h[(k + 1, k)] = alpha * scale;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

/// All eigenvalues of a real square matrix.
///
/// Reduces to Hessenberg form, then runs an explicit complex single-shift
/// QR iteration with Wilkinson shifts (`H - sI = QR`, `H <- RQ + sI`).
/// Complex arithmetic sidesteps the 2x2 block bookkeeping of the real
/// Francis form; for 6x6 certificates the cost is irrelevant.
/// Returned unsorted.
pub fn eigenvalues(a: &RMat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]);
    }
    let mut h = hessenberg(a).to_complex();
    let scale = h.frobenius().max(1e-300);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1; // active block is rows/cols 0..=hi
    let mut iters_here = 0usize;
    let max_per_eig = 100;

    let negligible =
        |off: f64, local: f64| off <= f64::EPSILON * local.max(1e-3 * f64::EPSILON * scale);

    loop {
        // deflate converged trailing 1x1 blocks
        loop {
            if hi == 0 {
                eigs.push(h[(0, 0)]);
                return Ok(eigs);
            }
            let off = h[(hi, hi - 1)].norm();
            let local = h[(hi - 1, hi - 1)].norm() + h[(hi, hi)].norm();
            if negligible(off, local) {
                h[(hi, hi - 1)] = Complex64::new(0.0, 0.0);
                eigs.push(h[(hi, hi)]);
                hi -= 1;
                iters_here = 0;
            } else {
                break;
            }
        }

        if iters_here >= max_per_eig {
            return Err(LinalgError::QrNoConvergence);
        }
        iters_here += 1;

        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let off = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if negligible(off, local) {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        // Wilkinson shift from the trailing 2x2 of the active block,
        // with an occasional exceptional shift to break symmetry stalls
        let shift = if iters_here.is_multiple_of(20) {
            h[(hi, hi)] + Complex64::new(1.5 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let tr = (a11 + a22) * 0.5;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr - det).sqrt();
            let m1 = tr + disc;
            let m2 = tr - disc;
            if (m1 - a22).norm() < (m2 - a22).norm() {
                m1
            } else {
                m2
            }
        };

        // explicit shifted QR step on the active block via Givens rotations
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let m = hi - lo + 1;
        let mut cs = vec![(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)); m];
        for k in lo..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (x.conj() / r, y.conj() / r)
            };
            cs[k - lo] = (c, s);
            for j in k..n {
                let hkj = h[(k, j)];
                let hk1j = h[(k + 1, j)];
                h[(k, j)] = c * hkj + s * hk1j;
                h[(k + 1, j)] = -s.conj() * hkj + c.conj() * hk1j;
            }
        }
        for k in lo..hi {
            let (c, s) = cs[k - lo];
            let top = (k + 1).min(hi);
            for i in 0..=top {
                let hik = h[(i, k)];
                let hik1 = h[(i, k + 1)];
                h[(i, k)] = hik * c.conj() + hik1 * s.conj();
                h[(i, k + 1)] = -hik * s + hik1 * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
}
