//! Closed-form flag curvature of the Numata metric `F = |y| + f_{x^i} y^i`,
//! valid for every n >= 1:
//!
//! ```text
//! K(x, y) = (3/4) (f_{x^i x^j} y^i y^j)^2 / F^4
//!         - (1/2) (f_{x^i x^j x^k} y^i y^j y^k) / F^3
//! ```
//!
//! Implemented exactly as written, with the f-derivatives extracted from a
//! degree-3 jet of the declared potential, so any disagreement with the
//! curvature pipeline points at the pipeline rather than at a rewriting of
//! the formula.

use rand::Rng;
use serde::Serialize;

use crate::curvature::{self, ScalarCurvatureReport};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::metric::Metric;

/// Margin keeping query points strictly inside the validity domain
/// `sum_i f_{x^i}^2 < 1`.
pub const DOMAIN_MARGIN: f64 = 1e-9;

/// A Numata potential with its dimension.
#[derive(Debug, Clone)]
pub struct NumataData {
    dim: usize,
    f: Expr,
}

impl NumataData {
    pub fn new(dim: usize, f: Expr) -> Result<NumataData> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if let Some(max) = f.max_var() {
            if max >= dim {
                return Err(Error::Dimension {
                    index: max + 1,
                    dim,
                });
            }
        }
        Ok(NumataData { dim, f })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self) -> &Expr {
        &self.f
    }

    /// The same data as a pipeline metric.
    pub fn metric(&self) -> Result<Metric> {
        if self.dim == 1 {
            Metric::numata1d(self.f.clone())
        } else {
            Metric::numata(self.dim, self.f.clone())
        }
    }

    /// Derivatives of the potential at `x` up to third order, from one
    /// degree-3 jet: (gradient, Hessian, third derivatives), flattened
    /// row-major.
    fn potential_jets(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.dim;
        let seeds: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(n, 3, i, v))
            .collect();
        let jet = self.f.eval_jet(&seeds)?;
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut third = vec![0.0; n * n * n];
        let mut alpha = vec![0usize; n];
        for i in 0..n {
            alpha.fill(0);
            alpha[i] += 1;
            grad[i] = jet.derivative_value(&alpha)?;
            for j in 0..n {
                alpha.fill(0);
                alpha[i] += 1;
                alpha[j] += 1;
                hess[i * n + j] = jet.derivative_value(&alpha)?;
                for k in 0..n {
                    alpha.fill(0);
                    alpha[i] += 1;
                    alpha[j] += 1;
                    alpha[k] += 1;
                    third[(i * n + j) * n + k] = jet.derivative_value(&alpha)?;
                }
            }
        }
        Ok((grad, hess, third))
    }

    /// The closed-form flag curvature at `(x, y)`; y-independent when n = 1.
    pub fn flag_curvature(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let n = self.dim;
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let ynorm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        let xnorm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if ynorm <= 1e-12 * (1.0 + xnorm) {
            return Err(Error::ZeroDirection);
        }
        let (grad, hess, third) = self.potential_jets(x)?;
        let grad2: f64 = grad.iter().map(|g| g * g).sum();
        if grad2 > 1.0 - DOMAIN_MARGIN {
            return Err(Error::OutsideDomain(format!(
                "squared gradient of f is {grad2}, must stay below 1"
            )));
        }
        let mut f_norm = ynorm;
        for i in 0..n {
            f_norm += grad[i] * y[i];
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += hess[i * n + j] * y[i] * y[j];
            }
        }
        let mut cubic = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    cubic += third[(i * n + j) * n + k] * y[i] * y[j] * y[k];
                }
            }
        }
        Ok(0.75 * quad * quad / f_norm.powi(4) - 0.5 * cubic / f_norm.powi(3))
    }

    /// Runs the curvature pipeline's scalar check and compares its fitted
    /// scalar with the closed form. Needs n >= 2.
    pub fn verify_scalar_flag<R: Rng>(
        &self,
        x: &[f64],
        y: &[f64],
        samples: usize,
        rng: &mut R,
    ) -> Result<ScalarFlagReport> {
        if self.dim < 2 {
            return Err(Error::OneDimensional);
        }
        let metric = self.metric()?;
        let pipeline = curvature::scalar_curvature_check(&metric, x, y, samples, rng)?;
        let closed_form = self.flag_curvature(x, y)?;
        let difference = (pipeline.fitted_k - closed_form).abs();
        Ok(ScalarFlagReport {
            pipeline,
            closed_form,
            difference,
        })
    }
}

/// Pipeline-vs-closed-form comparison at one `(x, y)`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarFlagReport {
    pub pipeline: ScalarCurvatureReport,
    pub closed_form: f64,
    /// |fitted pipeline K - closed form|
    pub difference: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse(src: &str, dim: usize) -> Expr {
        Expr::parse(src, dim).unwrap()
    }

    #[test]
    fn affine_potential_is_flat() {
        let d = NumataData::new(2, parse("0.3*x1 - 0.2*x2", 2)).unwrap();
        for (x, y) in [([0.0, 0.0], [1.0, 0.0]), ([0.4, -0.3], [0.2, 0.9])] {
            let k = d.flag_curvature(&x, &y).unwrap();
            assert!(k.abs() < 1e-14, "K = {k}");
        }
    }

    #[test]
    fn quadratic_potential_closed_form() {
        // f = (c/2)|x|^2 with c = 0.5: at x = 0 the gradient vanishes,
        // F = |y|, the Hessian term is c|y|^2 and the third term is zero, so
        // K = 0.75 c^2 = 0.1875 at y = (1, 0).
        let d = NumataData::new(2, parse("0.25*(x1^2 + x2^2)", 2)).unwrap();
        let k = d.flag_curvature(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(k, 0.1875, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_pipeline() {
        let d = NumataData::new(2, parse("0.25*(x1^2 + x2^2)", 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = d
            .verify_scalar_flag(&[0.0, 0.0], &[1.0, 0.0], 16, &mut rng)
            .unwrap();
        assert_relative_eq!(rep.closed_form, 0.1875, epsilon = 1e-12);
        assert!(rep.difference < 1e-7, "difference {}", rep.difference);

        let d = NumataData::new(2, parse("0.2*x1*x2", 2)).unwrap();
        for (x, y) in [
            ([0.1, 0.2], [1.0, -0.5]),
            ([-0.3, 0.4], [0.6, 0.8]),
            ([0.0, 0.0], [2.0, 1.0]),
        ] {
            let rep = d.verify_scalar_flag(&x, &y, 16, &mut rng).unwrap();
            assert!(rep.difference < 1e-6, "difference {}", rep.difference);
            assert!(rep.pipeline.spread < 1e-6, "spread {}", rep.pipeline.spread);
        }

        let d = NumataData::new(2, parse("0.1*sin(x1) + 0.1*cos(x2)", 2)).unwrap();
        let rep = d
            .verify_scalar_flag(&[0.3, -0.2], &[1.0, 0.7], 16, &mut rng)
            .unwrap();
        assert!(rep.difference < 1e-6, "difference {}", rep.difference);
    }

    #[test]
    fn outside_domain_rejected() {
        let d = NumataData::new(2, parse("1.2*x1", 2)).unwrap();
        assert!(matches!(
            d.flag_curvature(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn degree_zero_homogeneous_in_y() {
        let d = NumataData::new(3, parse("0.2*sin(x1) + 0.1*x2*x3", 3)).unwrap();
        let x = [0.2, -0.4, 0.1];
        let y = [1.0, 0.5, -0.2];
        let k0 = d.flag_curvature(&x, &y).unwrap();
        for lambda in [0.01, 0.5, 7.0, 300.0] {
            let scaled: Vec<f64> = y.iter().map(|v| v * lambda).collect();
            let k = d.flag_curvature(&x, &scaled).unwrap();
            assert_relative_eq!(k0, k, epsilon = 1e-10);
        }
    }

    #[test]
    fn one_dimensional_prolongation_is_y_independent() {
        let d = NumataData::new(1, parse("0.4*sin(x)", 1)).unwrap();
        let x = [0.3];
        let k0 = d.flag_curvature(&x, &[1.0]).unwrap();
        for y in [0.01, 0.1, 2.0, 50.0, 100.0] {
            let k = d.flag_curvature(&x, &[y]).unwrap();
            assert!((k - k0).abs() < 1e-10, "spread at y={y}: {}", (k - k0).abs());
        }
        // the negative cone has its own constant
        let km = d.flag_curvature(&x, &[-1.0]).unwrap();
        for y in [-0.01, -3.0, -80.0] {
            let k = d.flag_curvature(&x, &[y]).unwrap();
            assert!((k - km).abs() < 1e-10);
        }
    }
}
