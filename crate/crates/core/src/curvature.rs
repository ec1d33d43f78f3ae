//! hh-Chern curvature, predecessor tensor and flag curvature.
//!
//! The curvature run starts from a degree-4 jet of `F^2` over `(x, y)`, so
//! the Chern coefficients come out as first-order jets and their horizontal
//! derivative `dGamma/dx^k - N^m_k dGamma/dy^m` is formed from stored
//! coefficients, never from nested numeric differentiation. The assembled
//! tensor is
//!
//! ```text
//! R^i_jkl = delta Gamma^i_jl / delta x^k + Gamma^i_mk Gamma^m_jl  -  (k <-> l)
//! ```
//!
//! and the predecessor of the flag curvature lowers the upper slot and
//! contracts the first and last lower slots with the distinguished section:
//! `R_ik = g_im R^m_jkl l^j l^l`. On the constant-curvature sphere chart this
//! reading yields `R_ik = +1 * h_ik`, which fixes the index convention.

use ndarray::{Array2, Array4};
use rand::Rng;
use serde::Serialize;

use crate::connection::Pipeline;
use crate::error::{Error, Result};
use crate::metric::{Metric, TensorFrame};
use crate::tol;

/// Curvature data at one `(x, y)`, bundled with the tensor frame the flag
/// denominators come from.
#[derive(Debug, Clone)]
pub struct CurvatureFrame {
    pub tensors: TensorFrame,
    /// `R^i_jkl`, antisymmetric in the last two indices.
    pub r4: Array4<f64>,
    /// `R_ik = g_im R^m_jkl l^j l^l`.
    pub r_ik: Array2<f64>,
    /// h-weighted least-squares scalar minimizing `|R_ik - K h_ik|_F`.
    pub fitted_k: f64,
    /// `max |R_ik - fitted_k * h_ik|`.
    pub scalar_residual: f64,
    /// max |R^i_jkl + R^i_jlk|; zero by construction, recorded for reports.
    pub r4_antisymmetry_residual: f64,
    /// max |R_ik - R_ki|.
    pub rik_symmetry_residual: f64,
    /// max_k |R_ik l^k|; recorded, not fatal.
    pub rik_ell_residual: f64,
}

impl CurvatureFrame {
    pub fn dim(&self) -> usize {
        self.tensors.dim()
    }

    pub fn x(&self) -> &[f64] {
        &self.tensors.x
    }

    pub fn y(&self) -> &[f64] {
        &self.tensors.y
    }

    /// Flag curvature of the flag spanned by `y` and `v`.
    pub fn flag_curvature(&self, v: &[f64]) -> Result<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let ell = self.tensors.ell.as_slice().unwrap();
        let denom = self.tensors.g_form(v, v) - self.tensors.g_form(ell, v).powi(2);
        if denom <= tol::FLAG_DENOMINATOR {
            return Err(Error::DegenerateFlag);
        }
        let mut num = 0.0;
        for i in 0..n {
            for k in 0..n {
                num += self.r_ik[(i, k)] * v[i] * v[k];
            }
        }
        Ok(num / denom)
    }
}

/// Assemble the hh-curvature frame. One-dimensional metrics are refused:
/// both sides of the scalar-curvature relation vanish identically there and
/// the flag denominator is empty, so callers must take the Schwarzian route.
pub fn hh_curvature(metric: &Metric, x: &[f64], y: &[f64]) -> Result<CurvatureFrame> {
    let n = metric.dim();
    if n < 2 {
        return Err(Error::OneDimensional);
    }
    let pipeline = Pipeline::new(metric, x, y, 4, true)?;
    let tensors = metric.tensor_frame(x, y)?;

    let nconn = pipeline.nonlinear_base();
    let gamma = pipeline.gamma_base();

    // A[i][j][k][l] = horizontal derivative of Gamma^i_jl along x^k
    //              + Gamma^i_mk Gamma^m_jl
    let mut a4 = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                // first-order coefficients of the Gamma^i_jl jet: x-partials
                // in slots 0..n, y-partials in slots n..2n.
                let grad = pipeline.gamma[(i * n + j) * n + l].gradient();
                for k in 0..n {
                    let mut hderiv = grad[k];
                    for m in 0..n {
                        hderiv -= nconn[(m, k)] * grad[n + m];
                    }
                    let mut quad = 0.0;
                    for m in 0..n {
                        quad += gamma[(i, m, k)] * gamma[(m, j, l)];
                    }
                    a4[(i, j, k, l)] = hderiv + quad;
                }
            }
        }
    }
    let mut r4 = Array4::zeros((n, n, n, n));
    let mut antisym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    r4[(i, j, k, l)] = a4[(i, j, k, l)] - a4[(i, j, l, k)];
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    antisym = antisym.max((r4[(i, j, k, l)] + r4[(i, j, l, k)]).abs());
                }
            }
        }
    }
    if antisym > tol::R4_ANTISYMMETRY {
        return Err(Error::CurvatureConsistency {
            check: "r4_antisymmetry",
            residual: antisym,
            tolerance: tol::R4_ANTISYMMETRY,
        });
    }

    let ell = &tensors.ell;
    let g = &tensors.g;
    let mut r_ik = Array2::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                let gim = g[(i, m)];
                if gim == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for l in 0..n {
                        s += gim * r4[(m, j, k, l)] * ell[j] * ell[l];
                    }
                }
            }
            r_ik[(i, k)] = s;
        }
    }

    let mut rik_sym = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            rik_sym = rik_sym.max((r_ik[(i, k)] - r_ik[(k, i)]).abs());
        }
    }
    if rik_sym > tol::RIK_SYMMETRY {
        return Err(Error::CurvatureConsistency {
            check: "rik_symmetry",
            residual: rik_sym,
            tolerance: tol::RIK_SYMMETRY,
        });
    }

    let mut rik_ell = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..n {
            s += r_ik[(i, k)] * ell[k];
        }
        rik_ell = rik_ell.max(s.abs());
    }

    let h = &tensors.h;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for k in 0..n {
            num += r_ik[(i, k)] * h[(i, k)];
            den += h[(i, k)] * h[(i, k)];
        }
    }
    let fitted_k = num / den;
    let mut scalar_residual = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            scalar_residual = scalar_residual.max((r_ik[(i, k)] - fitted_k * h[(i, k)]).abs());
        }
    }

    Ok(CurvatureFrame {
        tensors,
        r4,
        r_ik,
        fitted_k,
        scalar_residual,
        r4_antisymmetry_residual: antisym,
        rik_symmetry_residual: rik_sym,
        rik_ell_residual: rik_ell,
    })
}

/// Flag-curvature spread over randomly sampled flag vectors.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarCurvatureReport {
    pub samples: usize,
    pub k_min: f64,
    pub k_max: f64,
    /// max - min over the sampled flag vectors.
    pub spread: f64,
    /// h-weighted least-squares fit of `R_ik = K h_ik`.
    pub fitted_k: f64,
    /// `max |R_ik - fitted_k h_ik|`.
    pub max_residual: f64,
}

/// Samples `samples` admissible flag vectors and reports the spread of the
/// flag curvature, the fitted scalar and the tensor-level residual.
pub fn scalar_curvature_check<R: Rng>(
    metric: &Metric,
    x: &[f64],
    y: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<ScalarCurvatureReport> {
    let frame = hh_curvature(metric, x, y)?;
    let n = metric.dim();
    let ell = frame.tensors.ell.to_vec();
    let mut ks = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while ks.len() < samples && attempts < samples * 200 {
        attempts += 1;
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len < 1e-3 {
            continue;
        }
        for c in &mut v {
            *c /= len;
        }
        let denom = frame.tensors.g_form(&v, &v) - frame.tensors.g_form(&ell, &v).powi(2);
        if denom < tol::SAMPLE_DENOMINATOR {
            continue;
        }
        ks.push(frame.flag_curvature(&v)?);
    }
    if ks.is_empty() {
        return Err(Error::DegenerateFlag);
    }
    let k_min = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_max = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalarCurvatureReport {
        samples: ks.len(),
        k_min,
        k_max,
        spread: k_max - k_min,
        fitted_k: frame.fitted_k,
        max_residual: frame.scalar_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::oracle::RiemannOracle;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse(src: &str, dim: usize) -> Expr {
        Expr::parse(src, dim).unwrap()
    }

    fn sphere_chart() -> Metric {
        Metric::riemannian(
            2,
            vec![
                vec![parse("4/(1 + x1^2 + x2^2)^2", 2), parse("0", 2)],
                vec![parse("0", 2), parse("4/(1 + x1^2 + x2^2)^2", 2)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn euclidean_curvature_vanishes() {
        let m = Metric::euclidean(2);
        let frame = hh_curvature(&m, &[0.3, 0.1], &[1.0, 0.5]).unwrap();
        for v in frame.r4.iter() {
            assert!(v.abs() < 1e-13);
        }
        let k = frame.flag_curvature(&[0.0, 1.0]).unwrap();
        assert!(k.abs() < 1e-13);
    }

    #[test]
    fn sphere_chart_flag_curvature_is_one() {
        let m = sphere_chart();
        let frame = hh_curvature(&m, &[0.2, -0.3], &[0.7, 0.4]).unwrap();
        for v in [[1.0, 0.0], [0.3, -1.0], [0.5, 2.0]] {
            let k = frame.flag_curvature(&v).unwrap();
            assert_relative_eq!(k, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn hyperbolic_chart_flag_curvature_is_minus_one() {
        let m = Metric::riemannian(
            2,
            vec![
                vec![parse("4/(1 - x1^2 - x2^2)^2", 2), parse("0", 2)],
                vec![parse("0", 2), parse("4/(1 - x1^2 - x2^2)^2", 2)],
            ],
        )
        .unwrap();
        let frame = hh_curvature(&m, &[0.3, 0.2], &[1.0, -0.2]).unwrap();
        let k = frame.flag_curvature(&[0.1, 1.0]).unwrap();
        assert_relative_eq!(k, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn riemannian_flag_matches_sectional_oracle() {
        let m = Metric::riemannian(
            2,
            vec![
                vec![parse("1 + 0.2*sin(x1)*sin(x2)", 2), parse("0.1*x1*x2", 2)],
                vec![parse("0.1*x1*x2", 2), parse("1.4 + 0.1*x1^2", 2)],
            ],
        )
        .unwrap();
        let oracle = RiemannOracle::new(&m).unwrap();
        let x = [0.3, -0.25];
        let y = [1.0, 0.4];
        let v = [-0.3, 1.0];
        let frame = hh_curvature(&m, &x, &y).unwrap();
        let flag = frame.flag_curvature(&v).unwrap();
        let sect = oracle.sectional(&x, &y, &v).unwrap();
        assert_relative_eq!(flag, sect, epsilon = 1e-6);
    }

    #[test]
    fn flag_depends_only_on_span() {
        let m = Metric::numata(2, parse("0.2*x1*x2", 2)).unwrap();
        let frame = hh_curvature(&m, &[0.1, -0.2], &[1.0, 0.3]).unwrap();
        let v = [0.2, 1.0];
        let k0 = frame.flag_curvature(&v).unwrap();
        for t in [0.5, -2.0, 10.0] {
            let shifted = [v[0] + t * 1.0, v[1] + t * 0.3];
            let k = frame.flag_curvature(&shifted).unwrap();
            assert_relative_eq!(k0, k, epsilon = 1e-8);
        }
    }

    #[test]
    fn numata_is_scalar_curvature() {
        let m = Metric::numata(3, parse("0.2*sin(x1) + 0.1*x2*x3", 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep =
            scalar_curvature_check(&m, &[0.2, -0.1, 0.4], &[1.0, 0.5, -0.3], 24, &mut rng).unwrap();
        assert!(rep.spread < 1e-6, "spread {}", rep.spread);
        assert!(rep.max_residual < 1e-6, "residual {}", rep.max_residual);
    }

    #[test]
    fn generic_riemannian_is_not_scalar_curvature() {
        // Negative control: an anisotropic product-like metric has genuinely
        // v-dependent flag curvature.
        let m = Metric::riemannian(
            3,
            vec![
                vec![parse("1", 3), parse("0", 3), parse("0", 3)],
                vec![parse("0", 3), parse("1 + 0.5*x1^2", 3), parse("0", 3)],
                vec![parse("0", 3), parse("0", 3), parse("1 + 0.5*x2^2", 3)],
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rep =
            scalar_curvature_check(&m, &[0.5, 0.4, -0.3], &[1.0, 0.6, 0.8], 32, &mut rng).unwrap();
        assert!(rep.spread > 1e-4, "spread unexpectedly small: {}", rep.spread);
    }

    #[test]
    fn homogeneity_of_flag_curvature() {
        let m = Metric::numata(2, parse("0.15*x1^2 + 0.1*sin(x2)", 2)).unwrap();
        let x = [0.3, 0.7];
        let v = [0.0, 1.0];
        let base = hh_curvature(&m, &x, &[1.0, 0.2]).unwrap();
        let k0 = base.flag_curvature(&v).unwrap();
        for lambda in [0.3, 2.0, 25.0] {
            let frame = hh_curvature(&m, &x, &[lambda, 0.2 * lambda]).unwrap();
            let k = frame.flag_curvature(&v).unwrap();
            assert_relative_eq!(k0, k, epsilon = 1e-7);
        }
    }

    #[test]
    fn one_dimensional_is_refused() {
        let m = Metric::numata1d(parse("0.2*sin(x)", 1)).unwrap();
        assert!(matches!(
            hh_curvature(&m, &[0.1], &[1.0]),
            Err(Error::OneDimensional)
        ));
    }

    #[test]
    fn degenerate_flag_vector_rejected() {
        let m = sphere_chart();
        let frame = hh_curvature(&m, &[0.1, 0.1], &[1.0, 2.0]).unwrap();
        assert!(matches!(
            frame.flag_curvature(&[0.5, 1.0]),
            Err(Error::DegenerateFlag)
        ));
    }
}
