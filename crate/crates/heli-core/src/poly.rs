//! Dense monic polynomials and root finding.
//!
//! Polynomials are stored as real coefficient vectors in ascending powers
//! (`coeffs[i]` multiplies `s^i`) and are normalized to a unit leading
//! coefficient on construction. Degrees in this crate stay small (≤ 7), so
//! a dense representation keeps the closed-loop coefficient identities exact.

use num_complex::Complex64;
use thiserror::Error;

/// Real part above which a root is considered strictly stable. Roots with
/// real part in `[-HURWITZ_MARGIN, 0]` are classified marginal, not stable;
/// a pole at the origin is only marginally stable and any disturbance can
/// push it over.
pub const HURWITZ_MARGIN: f64 = 1e-12;

const ABERTH_MAX_ITER: usize = 200;
const ABERTH_STEP_TOL: f64 = 1e-13;
/// Acceptable residual for a returned root: |p(r)| <= RESIDUAL_TOL * max|coeff|.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("polynomial needs at least two coefficients (degree >= 1), got {0}")]
    TooShort(usize),
    #[error("non-finite coefficient at power {0}")]
    NonFinite(usize),
    #[error("leading coefficient is zero; cannot normalize to monic form")]
    ZeroLeading,
    #[error("root finder did not converge after {iters} iterations; residuals {residuals:?}")]
    NoConvergence { iters: usize, residuals: Vec<f64> },
}

/// Monic polynomial with real coefficients, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    coeffs: Vec<f64>,
}

impl CharPoly {
    /// Builds a polynomial from ascending-power coefficients and normalizes it
    /// to monic form. The leading (last) coefficient must be nonzero.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.len() < 2 {
            return Err(PolyError::TooShort(coeffs.len()));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(PolyError::NonFinite(i));
            }
        }
        let lead = *coeffs.last().unwrap();
        if lead == 0.0 {
            return Err(PolyError::ZeroLeading);
        }
        let mut coeffs = coeffs;
        if lead != 1.0 {
            for c in &mut coeffs {
                *c /= lead;
            }
            // guard against -0.0 leading after division
            *coeffs.last_mut().unwrap() = 1.0;
        }
        Ok(Self { coeffs })
    }

    /// Monic polynomial with the given roots, expanded by repeated
    /// multiplication of linear factors. Complex roots must come in
    /// conjugate pairs for the coefficients to be real; this helper takes
    /// real roots only.
    pub fn from_real_roots(roots: &[f64]) -> Result<Self, PolyError> {
        let mut coeffs = vec![1.0];
        for &r in roots {
            coeffs = mul_raw(&coeffs, &[-r, 1.0]);
        }
        Self::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Derivative evaluation at a complex point.
    pub fn eval_deriv(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (1..self.coeffs.len()).rev() {
            acc = acc * s + self.coeffs[i] * i as f64;
        }
        acc
    }

    /// Product of two monic polynomials (exact degree addition).
    pub fn mul(&self, other: &CharPoly) -> CharPoly {
        CharPoly {
            coeffs: mul_raw(&self.coeffs, &other.coeffs),
        }
    }
}

impl std::fmt::Display for CharPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for i in (0..self.coeffs.len()).rev() {
            let c = self.coeffs[i];
            if c == 0.0 && i != 0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { "-" } else { "+" })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => write!(f, "s")?,
                1 => write!(f, "{a}*s")?,
                _ if a == 1.0 => write!(f, "s^{i}")?,
                _ => write!(f, "{a}*s^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

fn mul_raw(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All complex roots of `p` by Aberth-Ehrlich simultaneous iteration.
///
/// Starting points sit on circles sized by the Cauchy bound, rotated off
/// the real axis so symmetric configurations do not stall. Iteration stops
/// when the largest correction falls below `1e-13` (relative to the root
/// magnitude); roots then get a short Newton polish. A returned set must
/// pass two gates:
///
/// - per-root residual `|p(r)| <= 1e-8 * max|coeff|`, relaxed only to the
///   f64 evaluation noise `32 eps * sum |c_i| |r|^i` when roots are so
///   large that Horner evaluation itself carries more error than the
///   absolute bound (for the closed-loop polynomials this crate builds,
///   the strict form is the binding one);
/// - the root sum must reproduce `-c_{n-1}` (Newton's identity), which
///   catches the multiple-root failure mode where one approximation crowds
///   an existing cluster and another root goes unclaimed.
///
/// On a failed gate the iteration restarts from rotated initial circles a
/// few times before reporting non-convergence. Roots are sorted by (real,
/// imaginary) part so output order is stable.
pub fn poly_roots(p: &CharPoly) -> Result<Vec<Complex64>, PolyError> {
    let n = p.degree();
    if n == 1 {
        return Ok(vec![Complex64::new(-p.coeff(0), 0.0)]);
    }

    let mut last_residuals = Vec::new();
    for attempt in 0..4 {
        let mut z = initial_circle(p, attempt);
        for _ in 0..ABERTH_MAX_ITER {
            let mut max_step = 0.0f64;
            for k in 0..n {
                let pk = p.eval(z[k]);
                if pk.norm() == 0.0 {
                    continue;
                }
                let dpk = p.eval_deriv(z[k]);
                let newton = pk / dpk;
                let mut repulse = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != k {
                        repulse += 1.0 / (z[k] - z[j]);
                    }
                }
                let denom = 1.0 - newton * repulse;
                let step = if denom.norm() > 1e-300 {
                    newton / denom
                } else {
                    newton
                };
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
            if max_step < ABERTH_STEP_TOL {
                break;
            }
        }

        // quadratic cleanup of simple roots
        for zk in z.iter_mut() {
            for _ in 0..3 {
                let pk = p.eval(*zk);
                let dpk = p.eval_deriv(*zk);
                if pk.norm() == 0.0 || dpk.norm() < 1e-300 {
                    break;
                }
                let step = pk / dpk;
                if step.norm() > 0.1 * (1.0 + zk.norm()) {
                    break; // polish must not jump basins
                }
                *zk -= step;
            }
        }

        last_residuals = z.iter().map(|&r| p.eval(r).norm()).collect();
        if multiset_ok(p, &z, &last_residuals) {
            z.sort_by(|a, b| {
                a.re.partial_cmp(&b.re)
                    .unwrap()
                    .then(a.im.partial_cmp(&b.im).unwrap())
            });
            return Ok(z);
        }
    }
    Err(PolyError::NoConvergence {
        iters: ABERTH_MAX_ITER,
        residuals: last_residuals,
    })
}

fn initial_circle(p: &CharPoly, attempt: usize) -> Vec<Complex64> {
    let n = p.degree();
    // Cauchy bound: all roots lie within 1 + max |c_i| for monic p
    let radius = 1.0 + p.coeffs[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let offset = 0.4 + 1.7 * attempt as f64;
    let spread = 1.0 / (1.0 + attempt as f64);
    (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + offset;
            let r = radius * (1.0 - 0.5 * spread + 0.5 * spread * (k as f64 + 1.0) / n as f64);
            Complex64::from_polar(r, angle)
        })
        .collect()
}

fn multiset_ok(p: &CharPoly, roots: &[Complex64], residuals: &[f64]) -> bool {
    let n = p.degree();
    let max_coeff = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for (r, &res) in roots.iter().zip(residuals) {
        // f64 Horner evaluation noise at this point
        let mut mag = 0.0;
        let mut zp = 1.0;
        for &c in &p.coeffs {
            mag += c.abs() * zp;
            zp *= r.norm();
        }
        let eval_noise = 32.0 * f64::EPSILON * mag;
        if res > (RESIDUAL_TOL * max_coeff).max(eval_noise) {
            return false;
        }
    }
    // Newton identity: sum of roots = -c_{n-1} (monic)
    let sum: Complex64 = roots.iter().sum();
    let want = -p.coeff(n - 1);
    let scale = 1.0 + want.abs() + roots.iter().map(|r| r.norm()).sum::<f64>();
    (sum - want).norm() <= 1e-7 * scale
}

/// Stability classification of a root set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// Every root has real part < -1e-12.
    Stable,
    /// No root in the open right half plane, but at least one within
    /// 1e-12 of the imaginary axis.
    Marginal,
    /// At least one root with positive real part.
    Unstable,
}

/// Classifies the roots of `p` against the strict Hurwitz margin.
pub fn classify_stability(p: &CharPoly) -> Result<Stability, PolyError> {
    let roots = poly_roots(p)?;
    let mut marginal = false;
    for r in roots {
        if r.re > HURWITZ_MARGIN {
            return Ok(Stability::Unstable);
        }
        if r.re >= -HURWITZ_MARGIN {
            marginal = true;
        }
    }
    Ok(if marginal {
        Stability::Marginal
    } else {
        Stability::Stable
    })
}

/// True iff every root of `p` has strictly negative real part
/// (margin `1e-12`; marginal roots count as unstable).
pub fn is_hurwitz(p: &CharPoly) -> Result<bool, PolyError> {
    Ok(classify_stability(p)? == Stability::Stable)
}
