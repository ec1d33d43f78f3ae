//! Independent Riemannian curvature oracle.
//!
//! Cross-validation only: this path never touches jets. Christoffel symbols
//! come from symbolic derivatives of the coefficient expressions evaluated as
//! plain numbers; their x-derivatives come from central finite differences.
//! Accuracy is far below the 1e-6 comparisons it backs.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use crate::metric::{Metric, MetricFamily};

pub struct RiemannOracle {
    n: usize,
    a: Vec<Expr>,
    /// da[(k*n + i)*n + j] = d a_ij / d x^k
    da: Vec<Expr>,
}

impl RiemannOracle {
    /// Only meaningful for the Riemannian family.
    pub fn new(metric: &Metric) -> Result<RiemannOracle> {
        if metric.family() != MetricFamily::Riemannian {
            return Err(Error::InvalidSpec(
                "the sectional-curvature oracle needs a Riemannian metric".into(),
            ));
        }
        let n = metric.dim();
        let a: Vec<Expr> = match metric.quadratic_coefficients() {
            Some(a) => a.to_vec(),
            None => (0..n * n)
                .map(|idx| Expr::Number(if idx % n == idx / n { 1.0 } else { 0.0 }))
                .collect(),
        };
        let mut da = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                da.push(a[ij].derivative(k));
            }
        }
        Ok(RiemannOracle { n, a, da })
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.a.iter().map(|e| e.eval(x)).collect()
    }

    /// Christoffel symbols `Gamma^i_jk`, flattened `[(i*n + j)*n + k]`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let a = self.metric_at(x)?;
        let inv = linalg::invert(&a, n)?;
        let mut da = vec![0.0; n * n * n];
        for (slot, e) in da.iter_mut().zip(self.da.iter()) {
            *slot = e.eval(x)?;
        }
        let d = |k: usize, i: usize, j: usize| da[(k * n + i) * n + j];
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += inv[i * n + l] * (d(j, l, k) + d(k, l, j) - d(l, j, k));
                    }
                    out[(i * n + j) * n + k] = 0.5 * s;
                }
            }
        }
        Ok(out)
    }

    /// Riemann tensor `R^i_jkl`, flattened `[((i*n + j)*n + k)*n + l]`, with
    /// the Christoffel x-derivatives taken by central differences.
    pub fn riemann(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let gamma = self.christoffel(x)?;
        let scale = f64::EPSILON.powf(1.0 / 3.0);
        let mut dgamma = vec![0.0; n * n * n * n]; // [k][ijl]
        let mut xp = x.to_vec();
        for k in 0..n {
            let h = scale * (1.0 + x[k].abs());
            xp[k] = x[k] + h;
            let plus = self.christoffel(&xp)?;
            xp[k] = x[k] - h;
            let minus = self.christoffel(&xp)?;
            xp[k] = x[k];
            for idx in 0..n * n * n {
                dgamma[k * n * n * n + idx] = (plus[idx] - minus[idx]) / (2.0 * h);
            }
        }
        let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
        let dg = |k: usize, i: usize, j: usize, l: usize| dgamma[k * n * n * n + (i * n + j) * n + l];
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = dg(k, i, j, l) - dg(l, i, j, k);
                        for m in 0..n {
                            s += g(i, m, k) * g(m, j, l) - g(i, m, l) * g(m, j, k);
                        }
                        out[((i * n + j) * n + k) * n + l] = s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.n;
        let a = self.metric_at(x)?;
        let riemann = self.riemann(x)?;
        let form = |p: &[f64], q: &[f64]| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += a[i * n + j] * p[i] * q[j];
                }
            }
            s
        };
        let denom = form(u, u) * form(v, v) - form(u, v).powi(2);
        if denom <= 1e-10 {
            return Err(Error::DegenerateFlag);
        }
        // numerator: a_im R^m_jkl u^i v^j u^k v^l
        let mut num = 0.0;
        for i in 0..n {
            for m in 0..n {
                let aim = a[i * n + m];
                if aim == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            num += aim
                                * riemann[((m * n + j) * n + k) * n + l]
                                * u[i]
                                * v[j]
                                * u[k]
                                * v[l];
                        }
                    }
                }
            }
        }
        Ok(num / denom)
    }
}
