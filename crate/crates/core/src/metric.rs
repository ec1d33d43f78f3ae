//! Finsler metric families and the pointwise tensor frame.
//!
//! Supported families:
//!
//! * `riemannian` — `F = sqrt(a_ij(x) y^i y^j)` for a symmetric matrix of
//!   coefficient expressions.
//! * `randers` — the Riemannian term plus a one-form, `F = sqrt(a y y) + b_i y^i`,
//!   valid where `a^ij b_i b_j < 1`.
//! * `numata` — Euclidean `a` with exact `b = df`: `F = |y| + f_{x^i} y^i`,
//!   valid where the squared gradient of `f` stays below 1.
//! * `numata1d` — the one-dimensional Numata metric `F = |y| + f'(x) y`,
//!   evaluated on the cone selected by the sign of `y`.
//!
//! The gradient coefficients of a Numata `f` are materialized once as
//! symbolic derivatives of the declared expression, so every jet evaluation
//! stays within the degree-4 envelope; the closed-form module re-extracts
//! the same derivatives from jets of `f` itself as a cross-check.

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::linalg;

/// Relative floor below which a direction vector counts as zero.
const SLIT_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFamily {
    Riemannian,
    Randers,
    Numata,
    Numata1d,
}

impl MetricFamily {
    pub fn name(self) -> &'static str {
        match self {
            MetricFamily::Riemannian => "riemannian",
            MetricFamily::Randers => "randers",
            MetricFamily::Numata => "numata",
            MetricFamily::Numata1d => "numata1d",
        }
    }
}

/// A declared Finsler metric, lowered to quadratic-form plus one-form
/// coefficient expressions.
#[derive(Debug, Clone)]
pub struct Metric {
    dim: usize,
    family: MetricFamily,
    /// Row-major n*n symmetric coefficient matrix; `None` is the identity.
    a: Option<Vec<Expr>>,
    /// One-form coefficients; empty means none.
    b: Vec<Expr>,
    /// The potential of a Numata metric, kept for the closed-form modules.
    f: Option<Expr>,
}

impl Metric {
    pub fn euclidean(dim: usize) -> Metric {
        Metric {
            dim,
            family: MetricFamily::Riemannian,
            a: None,
            b: Vec::new(),
            f: None,
        }
    }

    pub fn riemannian(dim: usize, a: Vec<Vec<Expr>>) -> Result<Metric> {
        let a = check_symmetric_matrix(a, dim)?;
        Ok(Metric {
            dim,
            family: MetricFamily::Riemannian,
            a: Some(a),
            b: Vec::new(),
            f: None,
        })
    }

    pub fn randers(dim: usize, a: Vec<Vec<Expr>>, b: Vec<Expr>) -> Result<Metric> {
        let a = check_symmetric_matrix(a, dim)?;
        if b.len() != dim {
            return Err(Error::InvalidSpec(format!(
                "one-form has {} components, expected {dim}",
                b.len()
            )));
        }
        for e in &b {
            check_vars(e, dim)?;
        }
        Ok(Metric {
            dim,
            family: MetricFamily::Randers,
            a: Some(a),
            b,
            f: None,
        })
    }

    pub fn numata(dim: usize, f: Expr) -> Result<Metric> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        check_vars(&f, dim)?;
        let b = (0..dim).map(|i| f.derivative(i)).collect();
        Ok(Metric {
            dim,
            family: MetricFamily::Numata,
            a: None,
            b,
            f: Some(f),
        })
    }

    pub fn numata1d(f: Expr) -> Result<Metric> {
        check_vars(&f, 1)?;
        let b = vec![f.derivative(0)];
        Ok(Metric {
            dim: 1,
            family: MetricFamily::Numata1d,
            a: None,
            b,
            f: Some(f),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> MetricFamily {
        self.family
    }

    /// The Numata potential, when the family has one.
    pub fn potential(&self) -> Option<&Expr> {
        self.f.as_ref()
    }

    /// Row-major quadratic-form coefficients; `None` for the identity.
    pub fn quadratic_coefficients(&self) -> Option<&[Expr]> {
        self.a.as_deref()
    }

    pub fn one_form_coefficients(&self) -> &[Expr] {
        &self.b
    }

    /// Base values of the quadratic form at `x`.
    pub fn quadratic_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        match &self.a {
            None => {
                for i in 0..n {
                    m[i * n + i] = 1.0;
                }
            }
            Some(a) => {
                for (slot, e) in m.iter_mut().zip(a.iter()) {
                    *slot = e.eval(x)?;
                }
            }
        }
        Ok(m)
    }

    fn check_direction(&self, x: &[f64], y: &[f64]) -> Result<()> {
        let xn = norm2(x);
        let yn = norm2(y);
        if yn <= SLIT_GUARD * (1.0 + xn) {
            return Err(Error::ZeroDirection);
        }
        Ok(())
    }

    /// Family-specific validity condition at the base point.
    fn check_validity(&self, x: &[f64]) -> Result<()> {
        match self.family {
            MetricFamily::Riemannian => Ok(()),
            MetricFamily::Randers => {
                let a = self.quadratic_at(x)?;
                if !linalg::is_positive_definite(&a, self.dim) {
                    return Err(Error::NotPositiveDefinite);
                }
                let inv = linalg::invert(&a, self.dim)?;
                let b: Vec<f64> = self
                    .b
                    .iter()
                    .map(|e| e.eval(x))
                    .collect::<Result<_>>()?;
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += inv[i * self.dim + j] * b[i] * b[j];
                    }
                }
                if s >= 1.0 {
                    return Err(Error::OutsideDomain(format!(
                        "a^ij b_i b_j = {s} must stay below 1"
                    )));
                }
                Ok(())
            }
            MetricFamily::Numata | MetricFamily::Numata1d => {
                let mut s = 0.0;
                for e in &self.b {
                    let v = e.eval(x)?;
                    s += v * v;
                }
                if s > 1.0 - crate::numata::DOMAIN_MARGIN {
                    return Err(Error::OutsideDomain(format!(
                        "squared gradient of f is {s}, must stay below 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Jet of `F(x, y)`. The jets carry whatever seeding the caller chose;
    /// base values are read off the constant terms for the domain checks.
    pub fn norm_jet(&self, x: &[Jet], y: &[Jet]) -> Result<Jet> {
        assert_eq!(x.len(), self.dim, "point dimension");
        assert_eq!(y.len(), self.dim, "direction dimension");
        let x_base: Vec<f64> = x.iter().map(Jet::value).collect();
        let y_base: Vec<f64> = y.iter().map(Jet::value).collect();
        self.check_direction(&x_base, &y_base)?;
        self.check_validity(&x_base)?;

        let n = self.dim;
        let probe = &y[0];
        let mut quad = Jet::constant(probe.nvars(), probe.degree(), 0.0);
        match &self.a {
            None => {
                for yi in y {
                    quad = quad.checked_add(&yi.checked_mul(yi)?)?;
                }
            }
            Some(a) => {
                for i in 0..n {
                    for j in 0..n {
                        let aij = a[i * n + j].eval_jet(x)?;
                        quad = quad.checked_add(&aij.checked_mul(&y[i])?.checked_mul(&y[j])?)?;
                    }
                }
            }
        }
        let mut f = quad.sqrt()?;
        for (bi, yi) in self.b.iter().zip(y) {
            let b = bi.eval_jet(x)?;
            f = f.checked_add(&b.checked_mul(yi)?)?;
        }
        Ok(f)
    }

    /// `F(x, y)` as a plain number.
    pub fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let xj: Vec<Jet> = x.iter().map(|&v| Jet::constant(self.dim, 0, v)).collect();
        let yj: Vec<Jet> = y.iter().map(|&v| Jet::constant(self.dim, 0, v)).collect();
        Ok(self.norm_jet(&xj, &yj)?.value())
    }

    /// All pointwise tensors at `(x, y)`: fundamental tensor from the vertical
    /// Hessian of `F^2/2`, distinguished section, angular metric, Cartan
    /// tensor. Positive definiteness is verified on every call.
    pub fn tensor_frame(&self, x: &[f64], y: &[f64]) -> Result<TensorFrame> {
        let n = self.dim;
        let degree = 3;
        let xj: Vec<Jet> = x.iter().map(|&v| Jet::constant(n, degree, v)).collect();
        let yj: Vec<Jet> = y
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(n, degree, i, v))
            .collect();
        let f_jet = self.norm_jet(&xj, &yj)?;
        let norm = f_jet.value();
        if !(norm > 0.0) {
            return Err(Error::OutsideDomain(format!(
                "F(x, y) = {norm} must be positive"
            )));
        }
        let half = f_jet.checked_mul(&f_jet)?.scale(0.5);

        let mut g = Array2::zeros((n, n));
        let mut cartan = Array3::zeros((n, n, n));
        let mut alpha = vec![0usize; n];
        for i in 0..n {
            for j in 0..n {
                alpha.fill(0);
                alpha[i] += 1;
                alpha[j] += 1;
                g[(i, j)] = half.derivative_value(&alpha)?;
                for k in 0..n {
                    alpha.fill(0);
                    alpha[i] += 1;
                    alpha[j] += 1;
                    alpha[k] += 1;
                    cartan[(i, j, k)] = 0.5 * half.derivative_value(&alpha)?;
                }
            }
        }

        if !linalg::is_positive_definite(g.as_slice().unwrap(), n) {
            return Err(Error::NotPositiveDefinite);
        }

        let ell = Array1::from_iter(y.iter().map(|&yi| yi / norm));
        let ell_lower = g.dot(&ell);
        let mut h = g.clone();
        for i in 0..n {
            for k in 0..n {
                h[(i, k)] -= ell_lower[i] * ell_lower[k];
            }
        }

        Ok(TensorFrame {
            x: x.to_vec(),
            y: y.to_vec(),
            norm,
            g,
            ell,
            ell_lower,
            h,
            cartan,
        })
    }

    /// Residuals of first-degree homogeneity of `F` and zero-degree
    /// homogeneity of `g` under `y -> lambda y`.
    pub fn check_homogeneity(&self, x: &[f64], y: &[f64], lambda: f64) -> Result<HomogeneityReport> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "homogeneity scale must be positive, got {lambda}"
            )));
        }
        let base = self.tensor_frame(x, y)?;
        let scaled_y: Vec<f64> = y.iter().map(|&v| v * lambda).collect();
        let scaled = self.tensor_frame(x, &scaled_y)?;
        let norm_residual = (scaled.norm - lambda * base.norm).abs();
        let mut g_residual = 0.0f64;
        for (a, b) in scaled.g.iter().zip(base.g.iter()) {
            g_residual = g_residual.max((a - b).abs());
        }
        Ok(HomogeneityReport {
            lambda,
            norm_residual,
            g_residual,
        })
    }
}

fn check_symmetric_matrix(a: Vec<Vec<Expr>>, dim: usize) -> Result<Vec<Expr>> {
    if dim == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    if a.len() != dim || a.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidSpec(format!(
            "coefficient matrix must be {dim}x{dim}"
        )));
    }
    for i in 0..dim {
        for j in 0..i {
            if a[i][j] != a[j][i] {
                return Err(Error::InvalidSpec(format!(
                    "coefficient matrix is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut flat = Vec::with_capacity(dim * dim);
    for row in a {
        for e in row {
            check_vars(&e, dim)?;
            flat.push(e);
        }
    }
    Ok(flat)
}

fn check_vars(e: &Expr, dim: usize) -> Result<()> {
    if let Some(max) = e.max_var() {
        if max >= dim {
            return Err(Error::Dimension {
                index: max + 1,
                dim,
            });
        }
    }
    Ok(())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Evaluated tensors at one `(x, y)`; an immutable snapshot.
#[derive(Debug, Clone)]
pub struct TensorFrame {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// F(x, y).
    pub norm: f64,
    /// Fundamental tensor `g_ij`.
    pub g: Array2<f64>,
    /// Distinguished section `l^i = y^i / F`.
    pub ell: Array1<f64>,
    /// Lowered section `l_i = g_ij l^j`.
    pub ell_lower: Array1<f64>,
    /// Angular metric `h_ik = g_ik - l_i l_k`.
    pub h: Array2<f64>,
    /// Cartan tensor `C_ijk = (g_ij)_{y^k} / 2`.
    pub cartan: Array3<f64>,
}

impl TensorFrame {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `g(u, v)` at this frame.
    pub fn g_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HomogeneityReport {
    pub lambda: f64,
    /// |F(x, ly) - l F(x, y)|
    pub norm_residual: f64,
    /// max |g(x, ly) - g(x, y)|
    pub g_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use approx::assert_relative_eq;

    fn parse(src: &str, dim: usize) -> Expr {
        Expr::parse(src, dim).unwrap()
    }

    #[test]
    fn euclidean_frame() {
        let m = Metric::euclidean(2);
        let frame = m.tensor_frame(&[0.4, -1.0], &[3.0, 4.0]).unwrap();
        assert_relative_eq!(frame.norm, 5.0);
        assert_relative_eq!(frame.g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(frame.g[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(frame.g[(0, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(frame.ell[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(frame.ell[1], 0.8, epsilon = 1e-12);
        for c in frame.cartan.iter() {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn numata_norm_with_constant_gradient() {
        let m = Metric::numata(2, parse("0.3*x1", 2)).unwrap();
        let f = m.norm(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(f, 1.3, epsilon = 1e-14);
    }

    #[test]
    fn numata_outside_domain() {
        let m = Metric::numata(2, parse("1.2*x1", 2)).unwrap();
        assert!(matches!(
            m.norm(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn randers_outside_domain() {
        let a = vec![
            vec![parse("1", 2), parse("0", 2)],
            vec![parse("0", 2), parse("1", 2)],
        ];
        let b = vec![parse("1.1", 2), parse("0", 2)];
        let m = Metric::randers(2, a, b).unwrap();
        assert!(matches!(
            m.norm(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn zero_direction_rejected() {
        let m = Metric::euclidean(2);
        assert!(matches!(
            m.norm(&[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let a = vec![
            vec![parse("1", 2), parse("x1", 2)],
            vec![parse("x2", 2), parse("1", 2)],
        ];
        assert!(matches!(
            Metric::riemannian(2, a),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn riemannian_g_equals_coefficients() {
        let a = vec![
            vec![parse("1 + 0.2*sin(x2)", 2), parse("0.1*x1*x2", 2)],
            vec![parse("0.1*x1*x2", 2), parse("1.3", 2)],
        ];
        let m = Metric::riemannian(2, a).unwrap();
        let x = [0.3, -0.4];
        for y in [[1.0, 0.0], [0.3, -0.9], [2.0, 5.0]] {
            let frame = m.tensor_frame(&x, &y).unwrap();
            assert_relative_eq!(frame.g[(0, 0)], 1.0 + 0.2 * (-0.4f64).sin(), epsilon = 1e-12);
            assert_relative_eq!(frame.g[(0, 1)], 0.1 * 0.3 * -0.4, epsilon = 1e-12);
            assert_relative_eq!(frame.g[(1, 1)], 1.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn randers_frame_matches_fd_hessian() {
        // a = identity, b = (0.5, 0): F(x, (0,1)) = 1 and g comes from the
        // vertical Hessian of F^2/2, cross-checked against finite differences.
        let a = vec![
            vec![parse("1", 2), parse("0", 2)],
            vec![parse("0", 2), parse("1", 2)],
        ];
        let b = vec![parse("0.5", 2), parse("0", 2)];
        let m = Metric::randers(2, a, b).unwrap();
        let x = [0.2, -0.1];
        let y = [0.0, 1.0];
        let frame = m.tensor_frame(&x, &y).unwrap();
        assert_relative_eq!(frame.norm, 1.0, epsilon = 1e-14);

        for i in 0..2 {
            for j in 0..2 {
                let mut alpha = [0usize; 2];
                alpha[i] += 1;
                alpha[j] += 1;
                let fdh = fd::central_derivative(
                    |yy| 0.5 * m.norm(&x, yy).unwrap().powi(2),
                    &y,
                    &alpha,
                    None,
                );
                assert_relative_eq!(frame.g[(i, j)], fdh, epsilon = 1e-6);
            }
        }
        // g(ell, ell) = 1
        let ell = frame.ell.to_vec();
        assert_relative_eq!(frame.g_form(&ell, &ell), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn numata1d_metric_is_phi_prime_squared() {
        let f = parse("0.25*sin(x)", 1);
        let m = Metric::numata1d(f).unwrap();
        let x = [0.3];
        let fp = 0.25 * 0.3f64.cos();
        // positive cone: phi' = f' + 1
        let frame = m.tensor_frame(&x, &[2.0]).unwrap();
        assert_relative_eq!(frame.g[(0, 0)], (fp + 1.0).powi(2), epsilon = 1e-11);
        assert!(frame.h[(0, 0)].abs() < 1e-12, "angular metric has rank zero");
        // negative cone: phi' = f' - 1
        let frame = m.tensor_frame(&x, &[-0.7]).unwrap();
        assert_relative_eq!(frame.g[(0, 0)], (fp - 1.0).powi(2), epsilon = 1e-11);
    }

    #[test]
    fn frame_invariants_across_families() {
        let specs: Vec<Metric> = vec![
            Metric::euclidean(3),
            Metric::numata(2, parse("0.2*x1*x2", 2)).unwrap(),
            Metric::randers(
                2,
                vec![
                    vec![parse("1 + 0.1*x1^2", 2), parse("0", 2)],
                    vec![parse("0", 2), parse("1", 2)],
                ],
                vec![parse("0.4", 2), parse("0.1*sin(x2)", 2)],
            )
            .unwrap(),
        ];
        for m in &specs {
            let n = m.dim();
            let x: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect();
            let y: Vec<f64> = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
            let frame = m.tensor_frame(&x, &y).unwrap();

            let ell = frame.ell.to_vec();
            assert_relative_eq!(frame.g_form(&ell, &ell), 1.0, epsilon = 1e-10);

            // Euler identity: C_ijk y^k = 0
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += frame.cartan[(i, j, k)] * y[k];
                    }
                    assert!(s.abs() < 1e-10, "cartan contraction {s}");
                }
            }

            // h annihilates ell
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += frame.h[(i, k)] * frame.ell[k];
                }
                assert!(s.abs() < 1e-10, "h ell residual {s}");
            }

            // Cartan symmetry under index permutations
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let c = frame.cartan[(i, j, k)];
                        assert_relative_eq!(c, frame.cartan[(j, i, k)], epsilon = 1e-12);
                        assert_relative_eq!(c, frame.cartan[(i, k, j)], epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn homogeneity_residuals_are_tiny() {
        let m = Metric::numata(2, parse("0.2*sin(x1) + 0.1*x2^2", 2)).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let rep = m
                .check_homogeneity(&[0.1, 0.2], &[0.7, -0.4], lambda)
                .unwrap();
            assert!(rep.norm_residual < 1e-11, "F residual {}", rep.norm_residual);
            assert!(rep.g_residual < 1e-11, "g residual {}", rep.g_residual);
        }
    }

    #[test]
    fn indefinite_riemannian_rejected() {
        let a = vec![
            vec![parse("1", 2), parse("2", 2)],
            vec![parse("2", 2), parse("1", 2)],
        ];
        let m = Metric::riemannian(2, a).unwrap();
        assert!(matches!(
            m.tensor_frame(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite)
        ));
    }
}
