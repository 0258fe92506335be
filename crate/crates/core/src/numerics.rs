//! Small numerical kernels shared by the physics modules.

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// e^{iθ} for real θ; `sin_cos` performs exact argument reduction.
#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::new(c, s)
}

/// e^{iz} for complex z, with the decaying modulus applied separately.
#[inline]
pub(crate) fn exp_i(z: C64) -> C64 {
    cis(z.re) * (-z.im).exp()
}

/// e^{iz} − 1 without cancellation for small |z|.
pub(crate) fn exp_i_m1(z: C64) -> C64 {
    // e^{iz} = e^{a}(cos b + i sin b) with a = −Im z, b = Re z
    let a = -z.im;
    let b = z.re;
    let ea_m1 = a.exp_m1();
    let half_sin = (0.5 * b).sin();
    let re = ea_m1 * b.cos() - 2.0 * half_sin * half_sin;
    let im = (ea_m1 + 1.0) * b.sin();
    C64::new(re, im)
}

/// (e^{w} − 1)/w, accurate near w = 0.
fn phi1(w: C64) -> C64 {
    if w.norm() < 0.5 {
        // Taylor series; 20 terms reach machine precision for |w| < 0.5
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..=21 {
            term *= w / n as f64;
            sum += term;
        }
        sum
    } else {
        exp_i_m1(w * C64::new(0.0, -1.0)) / w
    }
}

/// Integration limit of a half-line or finite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Limit {
    NegInf,
    At(f64),
    PosInf,
}

/// ∫ e^{iαx} dx over (lo, hi). Infinite limits require the integrand to
/// decay there: Im α < 0 toward −∞, Im α > 0 toward +∞.
pub(crate) fn exp_integral(alpha: C64, lo: Limit, hi: Limit) -> C64 {
    let i = C64::new(0.0, 1.0);
    match (lo, hi) {
        (Limit::NegInf, Limit::At(b)) => {
            debug_assert!(alpha.im < 0.0);
            exp_i(alpha * b) / (i * alpha)
        }
        (Limit::At(a), Limit::PosInf) => {
            debug_assert!(alpha.im > 0.0);
            -exp_i(alpha * a) / (i * alpha)
        }
        (Limit::At(a), Limit::At(b)) => {
            let len = b - a;
            if len <= 0.0 {
                return C64::new(0.0, 0.0);
            }
            // factor out the endpoint where |e^{iαx}| is largest
            if alpha.im >= 0.0 {
                exp_i(alpha * a) * phi1(i * alpha * len) * len
            } else {
                exp_i(alpha * b) * phi1(-i * alpha * len) * len
            }
        }
        _ => panic!("exp_integral: unsupported limits {lo:?}..{hi:?}"),
    }
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub(crate) fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussLegendre::new(n)
        .map_err(|_| Error::invalid(format!("Gauss-Legendre rule needs at least 2 nodes, got {n}")))?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    Ok(pairs.into_iter().unzip())
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Cumulative trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    if values.is_empty() {
        return out;
    }
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * step * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Sixth-order central first derivative on a uniform grid. The three points
/// at each end, where the stencil does not fit, are `None`.
pub fn central_derivative(values: &[f64], step: f64) -> Vec<Option<f64>> {
    const C: [f64; 3] = [45.0, -9.0, 1.0];
    let n = values.len();
    (0..n)
        .map(|i| {
            if i < 3 || i + 3 >= n {
                return None;
            }
            let mut acc = 0.0;
            for (j, c) in C.iter().enumerate() {
                acc += c * (values[i + j + 1] - values[i - j - 1]);
            }
            Some(acc / (60.0 * step))
        })
        .collect()
}

/// Low-rank factor `K ≈ F F†` of a Hermitian positive semidefinite matrix,
/// stored column-major (`rank` columns of length `n`).
#[derive(Debug, Clone)]
pub(crate) struct LowRank {
    n: usize,
    cols: Vec<Vec<C64>>,
}

impl LowRank {
    /// Pivoted Cholesky with absolute stopping tolerance `rel_tol · max diag`.
    pub(crate) fn factor(n: usize, mut entry: impl FnMut(usize, usize) -> C64, rel_tol: f64) -> Self {
        let mut diag: Vec<f64> = (0..n).map(|i| entry(i, i).re).collect();
        let max_diag = diag.iter().cloned().fold(0.0, f64::max);
        let tol = rel_tol * max_diag;
        let mut cols: Vec<Vec<C64>> = Vec::new();
        let mut used = vec![false; n];
        while cols.len() < n {
            let (p, dp) = diag
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
            if p == usize::MAX || dp <= tol || dp <= 0.0 {
                break;
            }
            used[p] = true;
            let root = dp.sqrt();
            let mut col = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                if used[i] && i != p {
                    continue;
                }
                let mut v = entry(i, p);
                for c in &cols {
                    v -= c[i] * c[p].conj();
                }
                col[i] = v / root;
            }
            col[p] = C64::new(root, 0.0);
            for i in 0..n {
                if !used[i] {
                    diag[i] -= col[i].norm_sqr();
                }
            }
            cols.push(col);
        }
        Self { n, cols }
    }

    #[cfg(test)]
    pub(crate) fn rank(&self) -> usize {
        self.cols.len()
    }

    /// Projections F† c.
    pub(crate) fn project(&self, c: &[C64]) -> Vec<C64> {
        debug_assert_eq!(c.len(), self.n);
        self.cols
            .iter()
            .map(|col| col.iter().zip(c).map(|(f, x)| f.conj() * x).sum())
            .collect()
    }

    /// c† K c.
    pub(crate) fn quadratic(&self, c: &[C64]) -> f64 {
        self.project(c).iter().map(|p| p.norm_sqr()).sum()
    }

    /// a† K b.
    pub(crate) fn bilinear(&self, a: &[C64], b: &[C64]) -> C64 {
        let pa = self.project(a);
        let pb = self.project(b);
        pa.iter().zip(&pb).map(|(x, y)| x.conj() * y).sum()
    }
}
