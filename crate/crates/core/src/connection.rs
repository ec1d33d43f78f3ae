//! Geodesic spray, nonlinear connection and Chern connection coefficients.
//!
//! Everything is extracted from a single jet evaluation of `F^2` over the
//! 2n variables `(x, y)`: each differentiation lowers the jet degree by one,
//! so a degree-d start yields `g` at d-2, the spray at d-2, the nonlinear
//! connection and the Chern coefficients at d-3, all exact to their
//! truncation order. The construction used is
//!
//! ```text
//! G^i     = g^{il} ( (F^2)_{x^k y^l} y^k - (F^2)_{x^l} ) / 4
//! N^i_j   = dG^i / dy^j
//! Gamma^i_jk = g^{il} ( dg_lj/dx^k + dg_lk/dx^j - dg_jk/dx^l ) / 2,
//!              with d/dx^k the horizontal derivative d/dx^k - N^m_k d/dy^m
//! ```
//!
//! The defining requirements of the Chern connection — symmetry in the lower
//! indices, `N^i_j = Gamma^i_jk y^k`, and almost-metric-compatibility — are
//! asserted after every construction, so an evaluation that violates them
//! fails loudly instead of returning bad coefficients.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::metric::Metric;
use crate::tol;

/// Spray, nonlinear connection and Chern coefficients at one `(x, y)`.
#[derive(Debug, Clone)]
pub struct ConnectionFrame {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Geodesic spray coefficients `G^i`.
    pub spray: Array1<f64>,
    /// Nonlinear connection `N^i_j`.
    pub nonlinear: Array2<f64>,
    /// Chern coefficients `Gamma^i_jk`, symmetric in `(j, k)`.
    pub gamma: Array3<f64>,
    /// max |Gamma^i_jk - Gamma^i_kj|
    pub gamma_symmetry_residual: f64,
    /// max |N^i_j - Gamma^i_jk y^k|
    pub nonlinear_residual: f64,
    /// Worst almost-metric-compatibility residual over basis tangents.
    pub compatibility_residual: f64,
}

/// Jet-valued stages shared by the connection and curvature computations.
pub(crate) struct Pipeline {
    pub n: usize,
    pub ff_degree: usize,
    /// `g_ij` jets, degree `ff_degree - 2`.
    pub g: Vec<Jet>,
    /// `g^{ij}` jets, same degree.
    pub ginv: Vec<Jet>,
    /// Spray jets `G^i`, degree `ff_degree - 2`.
    pub spray: Vec<Jet>,
    /// `N^i_j` jets, degree `ff_degree - 3`; empty unless requested.
    pub nconn: Vec<Jet>,
    /// `dg_ij/dx^k` jets indexed `[k][i][j]`, degree `ff_degree - 3`.
    pub dgdx: Vec<Jet>,
    /// `dg_ij/dy^m` jets indexed `[m][i][j]`, degree `ff_degree - 3`.
    pub dgdy: Vec<Jet>,
    /// `Gamma^i_jk` jets indexed `[i][j][k]`, degree `ff_degree - 3`.
    pub gamma: Vec<Jet>,
}

impl Pipeline {
    /// Evaluates `F^2` over the 2n seeded variables and differentiates down
    /// to the requested stages. `with_connection` needs `ff_degree >= 3`.
    pub fn new(
        metric: &Metric,
        x: &[f64],
        y: &[f64],
        ff_degree: usize,
        with_connection: bool,
    ) -> Result<Pipeline> {
        let n = metric.dim();
        assert!(ff_degree >= 2);
        assert!(!with_connection || ff_degree >= 3);
        let nv = 2 * n;
        let xj: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(nv, ff_degree, i, v))
            .collect();
        let yj: Vec<Jet> = y
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(nv, ff_degree, n + i, v))
            .collect();
        let f = metric.norm_jet(&xj, &yj)?;
        let ff = f.checked_mul(&f)?;

        let gd = ff_degree - 2;
        let dy: Vec<Jet> = (0..n).map(|i| ff.partial(n + i)).collect();
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(dy[i].partial(n + j).scale(0.5));
            }
        }
        let ginv = linalg::invert_jets(&g, n)?;

        // A_l = (F^2)_{x^k y^l} y^k - (F^2)_{x^l}
        let y_trunc: Vec<Jet> = yj.iter().map(|j| j.truncated(gd)).collect();
        let mut rhs = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = Jet::constant(nv, gd, 0.0);
            for k in 0..n {
                let mixed = dy[l].partial(k);
                acc = acc.checked_add(&mixed.checked_mul(&y_trunc[k])?)?;
            }
            acc = acc.checked_sub(&ff.partial(l).truncated(gd))?;
            rhs.push(acc);
        }
        let mut spray = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Jet::constant(nv, gd, 0.0);
            for l in 0..n {
                acc = acc.checked_add(&ginv[i * n + l].checked_mul(&rhs[l])?)?;
            }
            spray.push(acc.scale(0.25));
        }

        let mut pipeline = Pipeline {
            n,
            ff_degree,
            g,
            ginv,
            spray,
            nconn: Vec::new(),
            dgdx: Vec::new(),
            dgdy: Vec::new(),
            gamma: Vec::new(),
        };
        if with_connection {
            pipeline.build_connection()?;
        }
        Ok(pipeline)
    }

    fn build_connection(&mut self) -> Result<()> {
        let n = self.n;
        let cd = self.ff_degree - 3;

        let mut nconn = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                nconn.push(self.spray[i].partial(n + j));
            }
        }

        let mut dgdx = Vec::with_capacity(n * n * n);
        let mut dgdy = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                dgdx.push(self.g[ij].partial(k));
            }
        }
        for m in 0..n {
            for ij in 0..n * n {
                dgdy.push(self.g[ij].partial(n + m));
            }
        }

        // Horizontal derivative of g: delta[k][ij] = dg/dx^k - N^m_k dg/dy^m
        let mut delta = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                let mut acc = dgdx[k * n * n + ij].clone();
                for m in 0..n {
                    let term = nconn[m * n + k].checked_mul(&dgdy[m * n * n + ij])?;
                    acc = acc.checked_sub(&term)?;
                }
                delta.push(acc);
            }
        }

        let ginv_low: Vec<Jet> = self.ginv.iter().map(|j| j.truncated(cd)).collect();
        let d = |k: usize, l: usize, j: usize| &delta[k * self.n * self.n + l * self.n + j];
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = Jet::constant(2 * n, cd, 0.0);
                    for l in 0..n {
                        let sum = d(k, l, j)
                            .checked_add(d(j, l, k))?
                            .checked_sub(d(l, j, k))?;
                        acc = acc.checked_add(&ginv_low[i * n + l].checked_mul(&sum)?)?;
                    }
                    gamma.push(acc.scale(0.5));
                }
            }
        }

        self.nconn = nconn;
        self.dgdx = dgdx;
        self.dgdy = dgdy;
        self.gamma = gamma;
        Ok(())
    }

    pub fn spray_base(&self) -> Array1<f64> {
        Array1::from_iter(self.spray.iter().map(Jet::value))
    }

    pub fn nonlinear_base(&self) -> Array2<f64> {
        let n = self.n;
        Array2::from_shape_fn((n, n), |(i, j)| self.nconn[i * n + j].value())
    }

    pub fn gamma_base(&self) -> Array3<f64> {
        let n = self.n;
        Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            self.gamma[(i * n + j) * n + k].value()
        })
    }

    pub fn g_base(&self) -> Array2<f64> {
        let n = self.n;
        Array2::from_shape_fn((n, n), |(i, j)| self.g[i * n + j].value())
    }

    /// Cartan tensor at the base point, from the y-derivatives of g.
    pub fn cartan_base(&self) -> Array3<f64> {
        let n = self.n;
        Array3::from_shape_fn((n, n, n), |(i, j, m)| {
            0.5 * self.dgdy[m * n * n + i * n + j].value()
        })
    }

    /// Almost-metric-compatibility residual on the tangent `(dx, dy)`:
    /// both sides of `dg_ij - w^k_i g_jk - w^k_j g_ik = 2 C_ijk delta-y^k`.
    pub fn compatibility_residual(&self, dx: &[f64], dy: &[f64]) -> f64 {
        let n = self.n;
        let g = self.g_base();
        let gamma = self.gamma_base();
        let nconn = self.nonlinear_base();
        let cartan = self.cartan_base();

        let mut delta_y = vec![0.0; n];
        for (k, dyk) in delta_y.iter_mut().enumerate() {
            *dyk = dy[k];
            for (j, dxj) in dx.iter().enumerate() {
                *dyk += nconn[(k, j)] * dxj;
            }
        }

        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dg = 0.0;
                for m in 0..n {
                    dg += self.dgdx[m * n * n + i * n + j].value() * dx[m];
                    dg += self.dgdy[m * n * n + i * n + j].value() * dy[m];
                }
                let mut transport = 0.0;
                for k in 0..n {
                    let mut omega_ki = 0.0;
                    let mut omega_kj = 0.0;
                    for (m, dxm) in dx.iter().enumerate() {
                        omega_ki += gamma[(k, i, m)] * dxm;
                        omega_kj += gamma[(k, j, m)] * dxm;
                    }
                    transport += omega_ki * g[(j, k)] + omega_kj * g[(i, k)];
                }
                let mut rhs = 0.0;
                for k in 0..n {
                    rhs += 2.0 * cartan[(i, j, k)] * delta_y[k];
                }
                worst = worst.max((dg - transport - rhs).abs());
            }
        }
        worst
    }

    /// Worst compatibility residual over the 2n basis tangents. The relation
    /// is linear in the tangent, so this covers every test vector.
    pub fn compatibility_residual_basis(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        let mut dx = vec![0.0; n];
        let dy = vec![0.0; n];
        for m in 0..n {
            dx[m] = 1.0;
            worst = worst.max(self.compatibility_residual(&dx, &dy));
            dx[m] = 0.0;
        }
        let dx = vec![0.0; n];
        let mut dy = vec![0.0; n];
        for m in 0..n {
            dy[m] = 1.0;
            worst = worst.max(self.compatibility_residual(&dx, &dy));
            dy[m] = 0.0;
        }
        worst
    }
}

/// Geodesic spray coefficients `G^i` at `(x, y)`.
pub fn spray(metric: &Metric, x: &[f64], y: &[f64]) -> Result<Array1<f64>> {
    let p = Pipeline::new(metric, x, y, 2, false)?;
    Ok(p.spray_base())
}

/// Chern connection frame at `(x, y)`, with the defining requirements
/// verified post-construction.
pub fn chern_gamma(metric: &Metric, x: &[f64], y: &[f64]) -> Result<ConnectionFrame> {
    let p = Pipeline::new(metric, x, y, 3, true)?;
    let n = p.n;
    let spray = p.spray_base();
    let nonlinear = p.nonlinear_base();
    let gamma = p.gamma_base();

    let mut symmetry = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                symmetry = symmetry.max((gamma[(i, j, k)] - gamma[(i, k, j)]).abs());
            }
        }
    }
    if symmetry > tol::GAMMA_SYMMETRY {
        return Err(Error::ConnectionConsistency {
            check: "gamma_symmetry",
            residual: symmetry,
            tolerance: tol::GAMMA_SYMMETRY,
        });
    }

    let mut ny = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += gamma[(i, j, k)] * y[k];
            }
            ny = ny.max((nonlinear[(i, j)] - s).abs());
        }
    }
    if ny > tol::NONLINEAR_FROM_GAMMA {
        return Err(Error::ConnectionConsistency {
            check: "nonlinear_from_gamma",
            residual: ny,
            tolerance: tol::NONLINEAR_FROM_GAMMA,
        });
    }

    let compatibility = p.compatibility_residual_basis();
    if compatibility > tol::COMPATIBILITY {
        return Err(Error::ConnectionConsistency {
            check: "almost_metric_compatibility",
            residual: compatibility,
            tolerance: tol::COMPATIBILITY,
        });
    }

    Ok(ConnectionFrame {
        x: x.to_vec(),
        y: y.to_vec(),
        spray,
        nonlinear,
        gamma,
        gamma_symmetry_residual: symmetry,
        nonlinear_residual: ny,
        compatibility_residual: compatibility,
    })
}

/// Almost-metric-compatibility residual on an arbitrary test tangent.
pub fn check_compatibility(
    metric: &Metric,
    x: &[f64],
    y: &[f64],
    dx: &[f64],
    dy: &[f64],
) -> Result<f64> {
    assert_eq!(dx.len(), metric.dim());
    assert_eq!(dy.len(), metric.dim());
    let p = Pipeline::new(metric, x, y, 3, true)?;
    Ok(p.compatibility_residual(dx, dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::oracle::RiemannOracle;
    use approx::assert_relative_eq;

    fn parse(src: &str, dim: usize) -> Expr {
        Expr::parse(src, dim).unwrap()
    }

    #[test]
    fn euclidean_connection_vanishes() {
        let m = Metric::euclidean(2);
        let frame = chern_gamma(&m, &[0.3, 0.4], &[1.0, 2.0]).unwrap();
        for v in frame.spray.iter() {
            assert!(v.abs() < 1e-14);
        }
        for v in frame.nonlinear.iter() {
            assert!(v.abs() < 1e-14);
        }
        for v in frame.gamma.iter() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn riemannian_spray_matches_christoffel() {
        // 2 G^i = gamma^i_jk y^j y^k for Riemannian metrics, with the
        // Christoffel symbols from an independent evaluation path.
        let a = vec![
            vec![parse("1 + 0.2*sin(x2)", 2), parse("0.1*x1*x2", 2)],
            vec![parse("0.1*x1*x2", 2), parse("1.3 + 0.1*x1^2", 2)],
        ];
        let m = Metric::riemannian(2, a).unwrap();
        let oracle = RiemannOracle::new(&m).unwrap();
        let x = [0.25, -0.4];
        let y = [0.8, -0.5];
        let g = spray(&m, &x, &y).unwrap();
        let christoffel = oracle.christoffel(&x).unwrap();
        for i in 0..2 {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    s += christoffel[(i * 2 + j) * 2 + k] * y[j] * y[k];
                }
            }
            assert_relative_eq!(2.0 * g[i], s, epsilon = 1e-9);
        }
    }

    #[test]
    fn riemannian_gamma_is_christoffel_and_y_independent() {
        let a = vec![
            vec![parse("1 + 0.1*x1^2 + 0.1*x2^2", 2), parse("0.2*x1*x2", 2)],
            vec![parse("0.2*x1*x2", 2), parse("1.5 - 0.2*cos(x1)", 2)],
        ];
        let m = Metric::riemannian(2, a).unwrap();
        let oracle = RiemannOracle::new(&m).unwrap();
        let x = [0.3, 0.2];
        let christoffel = oracle.christoffel(&x).unwrap();
        let reference = chern_gamma(&m, &x, &[1.0, 0.3]).unwrap();
        for (idx, &c) in christoffel.iter().enumerate() {
            let (i, jk) = (idx / 4, idx % 4);
            let (j, k) = (jk / 2, jk % 2);
            assert_relative_eq!(reference.gamma[(i, j, k)], c, epsilon = 1e-9);
        }
        for y in [[0.5, 1.0], [-1.0, 0.2], [2.0, -3.0]] {
            let frame = chern_gamma(&m, &x, &y).unwrap();
            for (a, b) in frame.gamma.iter().zip(reference.gamma.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn numata_spray_matches_finite_differences() {
        // The same formula assembled from finite differences of F^2.
        let m = Metric::numata(2, parse("0.1*x1*x2", 2)).unwrap();
        let x = [0.0, 0.0];
        let y = [1.0, 1.0];
        let g = spray(&m, &x, &y).unwrap();

        let frame = m.tensor_frame(&x, &y).unwrap();
        let ginv = crate::linalg::invert(frame.g.as_slice().unwrap(), 2).unwrap();
        let ff = |x: &[f64], y: &[f64]| m.norm(x, y).unwrap().powi(2);
        for i in 0..2 {
            let mut s = 0.0;
            for l in 0..2 {
                let mut a_l = 0.0;
                for (k, &yk) in y.iter().enumerate() {
                    let mixed = crate::fd::central_derivative(
                        |p| {
                            let (xs, ys) = p.split_at(2);
                            ff(xs, ys)
                        },
                        &[x[0], x[1], y[0], y[1]],
                        &{
                            let mut alpha = [0usize; 4];
                            alpha[k] = 1;
                            alpha[2 + l] = 1;
                            alpha
                        },
                        None,
                    );
                    a_l += mixed * yk;
                }
                let dxl = crate::fd::central_derivative(
                    |p| {
                        let (xs, ys) = p.split_at(2);
                        ff(xs, ys)
                    },
                    &[x[0], x[1], y[0], y[1]],
                    &{
                        let mut alpha = [0usize; 4];
                        alpha[l] = 1;
                        alpha
                    },
                    None,
                );
                a_l -= dxl;
                s += ginv[i * 2 + l] * a_l;
            }
            assert_relative_eq!(g[i], 0.25 * s, epsilon = 1e-7);
        }
    }

    #[test]
    fn one_dimensional_connection_is_consistent() {
        let m = Metric::numata1d(parse("0.3*sin(x)", 1)).unwrap();
        let frame = chern_gamma(&m, &[0.2], &[1.5]).unwrap();
        assert!(frame.nonlinear_residual < 1e-10);
        assert!(frame.spray[0].is_finite());
        assert!(frame.gamma[(0, 0, 0)].is_finite());
    }

    #[test]
    fn compatibility_residual_small_on_randers() {
        let a = vec![
            vec![parse("1", 2), parse("0", 2)],
            vec![parse("0", 2), parse("1", 2)],
        ];
        let b = vec![parse("0.4", 2), parse("0", 2)];
        let m = Metric::randers(2, a, b).unwrap();
        let r = check_compatibility(&m, &[0.1, 0.2], &[1.0, -0.4], &[0.3, -0.8], &[0.5, 0.1])
            .unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn spray_is_quadratic_in_y() {
        // N^i_j y^j = 2 G^i by Euler homogeneity.
        let m = Metric::numata(2, parse("0.2*sin(x1) + 0.1*x2", 2)).unwrap();
        let x = [0.4, -0.2];
        let y = [1.2, 0.7];
        let frame = chern_gamma(&m, &x, &y).unwrap();
        for i in 0..2 {
            let mut s = 0.0;
            for j in 0..2 {
                s += frame.nonlinear[(i, j)] * y[j];
            }
            assert_relative_eq!(s, 2.0 * frame.spray[i], epsilon = 1e-9);
        }
    }
}
