//! The one-dimensional bridge: circle-map dictionary, Schwarzian derivative,
//! the 1D curvature formula and the constant-curvature solution family.
//!
//! A 1D Numata metric restricted to one cone of the slit bundle reads
//! `F = phi'(x) y` with `phi' = f' +/- 1`, so the metric data is a local
//! diffeomorphism `phi`. Its flag curvature prolongs to
//!
//! ```text
//! K(x) = -S(phi)(x) / (2 phi'(x)^2),
//! S(phi) = phi'''/phi' - (3/2)(phi''/phi')^2
//! ```
//!
//! Maps live on an interval chart; global circle topology is not modeled —
//! only the local differential identities, which is all these formulas use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, Func};
use crate::jet::Jet;
use crate::numata::NumataData;
use crate::tol;

/// Closed interval used as the sample domain of a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `count` evenly spaced points including both ends.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        assert!(count >= 2);
        let step = (self.hi - self.lo) / (count - 1) as f64;
        (0..count).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Orientation::Preserving => "+",
            Orientation::Reversing => "-",
        }
    }
}

/// First three derivatives of `phi` at `x`, through one degree-3 jet.
fn derivatives3(phi: &Expr, x: f64) -> Result<(f64, f64, f64, f64)> {
    let seed = Jet::variable(1, 3, 0, x);
    let jet = phi.eval_jet(&[seed])?;
    Ok((
        jet.value(),
        jet.derivative_value(&[1])?,
        jet.derivative_value(&[2])?,
        jet.derivative_value(&[3])?,
    ))
}

/// A diffeomorphism of an interval chart of the circle.
#[derive(Debug, Clone)]
pub struct CircleMap {
    phi: Expr,
    orientation: Orientation,
    domain: Interval,
}

/// Grid density used for domain validation scans.
const SCAN_POINTS: usize = 65;

impl CircleMap {
    /// Wraps an expression in one variable. The orientation is read off the
    /// derivative; a vanishing or sign-changing derivative on the scan grid
    /// is a [`Error::CriticalPoint`].
    pub fn new(phi: Expr, domain: Interval) -> Result<CircleMap> {
        if let Some(max) = phi.max_var() {
            if max >= 1 {
                return Err(Error::Dimension {
                    index: max + 1,
                    dim: 1,
                });
            }
        }
        let mut sign = 0.0f64;
        for x in domain.grid(SCAN_POINTS) {
            let (_, d1, _, _) = derivatives3(&phi, x)?;
            if d1.abs() < tol::CRITICAL_POINT {
                return Err(Error::CriticalPoint);
            }
            if sign == 0.0 {
                sign = d1.signum();
            } else if sign != d1.signum() {
                return Err(Error::CriticalPoint);
            }
        }
        let orientation = if sign >= 0.0 {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        };
        Ok(CircleMap {
            phi,
            orientation,
            domain,
        })
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.phi.eval(&[x])
    }

    /// `(phi, phi', phi'', phi''')` at `x`.
    pub fn derivatives(&self, x: f64) -> Result<(f64, f64, f64, f64)> {
        derivatives3(&self.phi, x)
    }

    /// Schwarzian derivative `phi'''/phi' - (3/2)(phi''/phi')^2`.
    pub fn schwarzian(&self, x: f64) -> Result<f64> {
        let (_, d1, d2, d3) = self.derivatives(x)?;
        schwarzian_from(d1, d2, d3)
    }

    /// The 1D flag curvature `K = -S(phi)/(2 phi'^2)`.
    pub fn curvature(&self, x: f64) -> Result<f64> {
        Ok(self.point(x)?.curvature)
    }

    /// Everything the 1D route produces at one point.
    pub fn point(&self, x: f64) -> Result<OneDimPoint> {
        let (_, d1, d2, d3) = self.derivatives(x)?;
        let schwarzian = schwarzian_from(d1, d2, d3)?;
        let metric_g = d1 * d1;
        Ok(OneDimPoint {
            x,
            phi_prime: d1,
            metric_g,
            schwarzian,
            curvature: -0.5 * schwarzian / metric_g,
        })
    }

    /// Largest contiguous scan subinterval on which `0 < |phi'| < 2`, i.e.
    /// where the map qualifies as Numata-induced. Reported rather than
    /// enforced.
    pub fn numata_admissible_subinterval(&self) -> Result<Option<Interval>> {
        let grid = self.domain.grid(SCAN_POINTS);
        let mut best: Option<(usize, usize)> = None;
        let mut run_start: Option<usize> = None;
        for (i, &x) in grid.iter().enumerate() {
            let (_, d1, _, _) = self.derivatives(x)?;
            let ok = d1.abs() > tol::CRITICAL_POINT && d1.abs() < 2.0;
            if ok {
                let start = *run_start.get_or_insert(i);
                let len = i - start;
                if best.map_or(true, |(b0, b1)| len > b1 - b0) {
                    best = Some((start, i));
                }
            } else {
                run_start = None;
            }
        }
        Ok(best.and_then(|(i0, i1)| {
            (i1 > i0).then(|| Interval {
                lo: grid[i0],
                hi: grid[i1],
            })
        }))
    }
}

fn schwarzian_from(d1: f64, d2: f64, d3: f64) -> Result<f64> {
    if d1.abs() < tol::CRITICAL_POINT {
        return Err(Error::CriticalPoint);
    }
    let ratio = d2 / d1;
    Ok(d3 / d1 - 1.5 * ratio * ratio)
}

/// Values of the 1D route at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OneDimPoint {
    pub x: f64,
    pub phi_prime: f64,
    /// `g(phi) = phi'^2`, the induced Riemannian metric coefficient.
    pub metric_g: f64,
    pub schwarzian: f64,
    pub curvature: f64,
}

/// The dictionary `phi'_± = f' ± 1`: realizes `phi` as `f(x) ± x`, which
/// fixes the antiderivative constant to `phi(0) = f(0)`; the Schwarzian and
/// the curvature do not depend on that choice. Fails with
/// [`Error::OutsideDomain`] where `|f'| >= 1` on the sample grid.
pub fn phi_from_f(f: &Expr, orientation: Orientation, domain: Interval) -> Result<CircleMap> {
    if let Some(max) = f.max_var() {
        if max >= 1 {
            return Err(Error::Dimension {
                index: max + 1,
                dim: 1,
            });
        }
    }
    for x in domain.grid(SCAN_POINTS) {
        let seed = Jet::variable(1, 1, 0, x);
        let fp = f.eval_jet(&[seed])?.gradient()[0];
        if fp.abs() >= 1.0 {
            return Err(Error::OutsideDomain(format!(
                "|f'({x})| = {} must stay below 1",
                fp.abs()
            )));
        }
    }
    let op = match orientation {
        Orientation::Preserving => BinOp::Add,
        Orientation::Reversing => BinOp::Sub,
    };
    let phi = Expr::Binary(op, Box::new(f.clone()), Box::new(Expr::Var(0)));
    Ok(CircleMap {
        phi,
        orientation,
        domain,
    })
}

/// Member of the constant-curvature family
/// `phi(x) = K^(-1/2) arctan(K^(1/2) (a x + b) / (c x + d))` with
/// `a d - b c = ±1`. Implemented for `K > 0` only, as the family is stated.
pub fn constant_curvature_map(
    k: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    domain: Interval,
) -> Result<CircleMap> {
    if !(k > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "constant-curvature maps require K > 0, got {k}"
        )));
    }
    let det = a * d - b * c;
    if (det.abs() - 1.0).abs() > tol::DETERMINANT {
        return Err(Error::BadDeterminant(det));
    }
    if c != 0.0 {
        let pole = -d / c;
        if domain.contains(pole) {
            return Err(Error::PoleInDomain(pole));
        }
    } else if d == 0.0 {
        return Err(Error::PoleInDomain(f64::NAN));
    }
    let var = || Box::new(Expr::Var(0));
    let num = Expr::Binary(
        BinOp::Add,
        Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Number(a)), var())),
        Box::new(Expr::Number(b)),
    );
    let den = Expr::Binary(
        BinOp::Add,
        Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Number(c)), var())),
        Box::new(Expr::Number(d)),
    );
    let moebius = Expr::Binary(BinOp::Div, Box::new(num), Box::new(den));
    let inner = Expr::Binary(
        BinOp::Mul,
        Box::new(Expr::Number(k.sqrt())),
        Box::new(moebius),
    );
    let phi = Expr::Binary(
        BinOp::Mul,
        Box::new(Expr::Number(1.0 / k.sqrt())),
        Box::new(Expr::Call(Func::Arctan, Box::new(inner))),
    );
    let orientation = if det > 0.0 {
        Orientation::Preserving
    } else {
        Orientation::Reversing
    };
    Ok(CircleMap {
        phi,
        orientation,
        domain,
    })
}

/// Schwarzian cocycle residual
/// `|S(phi o psi)(x) - S(phi)(psi(x)) psi'(x)^2 - S(psi)(x)|`.
///
/// The composite's derivatives come from evaluating `phi` on the degree-3
/// jet of `psi`, so the composition itself runs through jet arithmetic.
pub fn cocycle_residual(outer: &CircleMap, inner: &CircleMap, x: f64) -> Result<f64> {
    let seed = Jet::variable(1, 3, 0, x);
    let inner_jet = inner.phi.eval_jet(&[seed])?;
    let composite = outer.phi.eval_jet(&[inner_jet.clone()])?;
    let s_composite = schwarzian_from(
        composite.derivative_value(&[1])?,
        composite.derivative_value(&[2])?,
        composite.derivative_value(&[3])?,
    )?;
    let psi_x = inner_jet.value();
    let psi_prime = inner_jet.derivative_value(&[1])?;
    let s_outer = outer.schwarzian(psi_x)?;
    let s_inner = inner.schwarzian(x)?;
    Ok((s_composite - s_outer * psi_prime * psi_prime - s_inner).abs())
}

/// Per-cone result of the prolongation check.
#[derive(Debug, Clone, Serialize)]
pub struct ConeBridge {
    pub orientation: Orientation,
    /// `-S(phi)/(2 phi'^2)` at the query point.
    pub schwarz_k: f64,
    /// Closed-form values over the y samples.
    pub closed_form_k: Vec<f64>,
    /// max - min over the y samples.
    pub y_spread: f64,
    /// max |closed form - Schwarzian route|.
    pub route_difference: f64,
}

/// Both cones of the prolongation check at one `x`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremBridge {
    pub plus: ConeBridge,
    pub minus: ConeBridge,
}

/// Checks that the prolonged closed-form curvature of an admissible 1D
/// potential is y-independent and equals `-S(phi_±)/(2 phi_±'^2)` on the
/// matching cone.
pub fn theorem_bridge(
    f: &Expr,
    domain: Interval,
    x: f64,
    y_samples: &[f64],
) -> Result<TheoremBridge> {
    if y_samples.is_empty() || y_samples.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::InvalidSpec(
            "theorem bridge needs positive y samples".into(),
        ));
    }
    let data = NumataData::new(1, f.clone())?;
    let cone = |orientation: Orientation| -> Result<ConeBridge> {
        let map = phi_from_f(f, orientation, domain)?;
        let schwarz_k = map.curvature(x)?;
        let mut closed_form_k = Vec::with_capacity(y_samples.len());
        for &y in y_samples {
            closed_form_k.push(data.flag_curvature(&[x], &[orientation.sign() * y])?);
        }
        let min = closed_form_k.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = closed_form_k
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let route_difference = closed_form_k
            .iter()
            .map(|k| (k - schwarz_k).abs())
            .fold(0.0, f64::max);
        Ok(ConeBridge {
            orientation,
            schwarz_k,
            closed_form_k,
            y_spread: max - min,
            route_difference,
        })
    };
    Ok(TheoremBridge {
        plus: cone(Orientation::Preserving)?,
        minus: cone(Orientation::Reversing)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parse1(src: &str) -> Expr {
        Expr::parse(src, 1).unwrap()
    }

    fn interval(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn affine_maps_have_zero_schwarzian() {
        let m = CircleMap::new(parse1("3*x + 1"), interval(-1.0, 1.0)).unwrap();
        for x in [-0.9, 0.0, 0.7] {
            assert!(m.schwarzian(x).unwrap().abs() < 1e-14);
            assert!(m.curvature(x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn moebius_maps_have_zero_schwarzian() {
        let m = CircleMap::new(parse1("(2*x + 1)/(x + 3)"), interval(-1.0, 1.0)).unwrap();
        for x in [-0.8, -0.1, 0.5, 0.95] {
            assert!(m.schwarzian(x).unwrap().abs() < 1e-11);
        }
    }

    #[test]
    fn exponential_schwarzian_is_minus_half() {
        let m = CircleMap::new(parse1("exp(x)"), interval(-1.0, 1.0)).unwrap();
        for x in [-0.5, 0.0, 0.8] {
            assert_relative_eq!(m.schwarzian(x).unwrap(), -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn half_sine_curvature_hand_value() {
        // phi = x + 0.5 sin x at 0: phi' = 1.5, phi'' = 0, phi''' = -0.5,
        // S = -1/3, K = (1/3)/(2*2.25) = 0.074074...
        let map = phi_from_f(
            &parse1("0.5*sin(x)"),
            Orientation::Preserving,
            interval(-1.0, 1.0),
        )
        .unwrap();
        let p = map.point(0.0).unwrap();
        assert_relative_eq!(p.phi_prime, 1.5, epsilon = 1e-13);
        assert_relative_eq!(p.schwarzian, -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.curvature, 1.0 / 13.5, epsilon = 1e-12);
    }

    #[test]
    fn arctan_has_unit_curvature() {
        let m = CircleMap::new(parse1("arctan(x)"), interval(-1.5, 1.5)).unwrap();
        for x in [-1.2, -0.3, 0.0, 0.4, 1.4] {
            assert_relative_eq!(m.curvature(x).unwrap(), 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn phi_from_f_demands_admissible_f() {
        assert!(matches!(
            phi_from_f(&parse1("1.2*x"), Orientation::Preserving, interval(-1.0, 1.0)),
            Err(Error::OutsideDomain(_))
        ));
        // f' = 0.5: reversing orientation gives phi' = -0.5
        let m = phi_from_f(&parse1("0.5*x"), Orientation::Reversing, interval(-1.0, 1.0))
            .unwrap();
        let (_, d1, _, _) = m.derivatives(0.3).unwrap();
        assert_relative_eq!(d1, -0.5, epsilon = 1e-14);
        // f = 0.5 sin x keeps phi' in (0.5, 1.5) on the plus cone
        let m = phi_from_f(
            &parse1("0.5*sin(x)"),
            Orientation::Preserving,
            interval(-3.0, 3.0),
        )
        .unwrap();
        assert_eq!(m.orientation(), Orientation::Preserving);
    }

    #[test]
    fn critical_points_rejected() {
        // phi = x^2 has phi'(0) = 0
        assert!(matches!(
            CircleMap::new(parse1("x^2"), interval(-1.0, 1.0)),
            Err(Error::CriticalPoint)
        ));
    }

    #[test]
    fn constant_curvature_family() {
        // K = 1, identity coefficients: phi = arctan(x)
        let m = constant_curvature_map(1.0, 1.0, 0.0, 0.0, 1.0, interval(-1.0, 1.0)).unwrap();
        for x in [-0.9, 0.0, 0.7] {
            assert_relative_eq!(m.curvature(x).unwrap(), 1.0, epsilon = 1e-11);
        }
        // K = 4: phi = arctan(2x)/2
        let m = constant_curvature_map(4.0, 1.0, 0.0, 0.0, 1.0, interval(-1.0, 1.0)).unwrap();
        for x in [-0.8, 0.1, 0.9] {
            assert_relative_eq!(m.curvature(x).unwrap(), 4.0, epsilon = 1e-9);
        }
        assert!(matches!(
            constant_curvature_map(1.0, 2.0, 0.0, 0.0, 1.0, interval(-1.0, 1.0)),
            Err(Error::BadDeterminant(_))
        ));
        assert!(matches!(
            constant_curvature_map(1.0, 0.0, 1.0, 1.0, 0.0, interval(-1.0, 1.0)),
            Err(Error::PoleInDomain(_))
        ));
    }

    #[test]
    fn cocycle_residuals() {
        let domain = interval(-0.9, 0.9);
        // affine inner map: S(psi) = 0 and the chain rule is exact
        let phi = CircleMap::new(parse1("exp(x)"), domain).unwrap();
        let psi = CircleMap::new(parse1("0.5*x + 0.1"), domain).unwrap();
        assert!(cocycle_residual(&phi, &psi, 0.2).unwrap() < 1e-12);

        // two Moebius maps: everything vanishes
        let phi = CircleMap::new(parse1("(2*x + 1)/(x + 3)"), domain).unwrap();
        let psi = CircleMap::new(parse1("(x + 1)/(x + 4)"), domain).unwrap();
        assert!(cocycle_residual(&phi, &psi, -0.3).unwrap() < 1e-12);

        // exp after arctan
        let phi = CircleMap::new(parse1("exp(x)"), domain).unwrap();
        let psi = CircleMap::new(parse1("arctan(x)"), domain).unwrap();
        assert!(cocycle_residual(&phi, &psi, 0.0).unwrap() < 1e-9);
    }

    #[test]
    fn theorem_bridge_half_sine() {
        let f = parse1("0.5*sin(x)");
        let bridge = theorem_bridge(&f, interval(-1.0, 1.0), 0.0, &[0.1, 1.0, 10.0]).unwrap();
        assert_relative_eq!(bridge.plus.schwarz_k, 1.0 / 13.5, epsilon = 1e-12);
        for k in &bridge.plus.closed_form_k {
            assert_relative_eq!(*k, 1.0 / 13.5, epsilon = 1e-9);
        }
        assert!(bridge.plus.y_spread < 1e-9);
        assert!(bridge.plus.route_difference < 1e-9);
        assert!(bridge.minus.y_spread < 1e-9);
        assert!(bridge.minus.route_difference < 1e-9);
    }

    #[test]
    fn theorem_bridge_zero_potential() {
        let bridge = theorem_bridge(
            &parse1("0"),
            interval(-1.0, 1.0),
            0.3,
            &[0.5, 1.0, 2.0],
        )
        .unwrap();
        assert!(bridge.plus.schwarz_k.abs() < 1e-13);
        assert!(bridge.minus.schwarz_k.abs() < 1e-13);
        for k in bridge.plus.closed_form_k.iter().chain(&bridge.minus.closed_form_k) {
            assert!(k.abs() < 1e-13);
        }
    }

    #[test]
    fn theorem_bridge_recovers_constant_curvature() {
        // f' = phi' - 1 with phi = arctan: f(x) = arctan(x) - x, and both
        // routes must report K = 1 on the plus cone.
        let f = parse1("arctan(x) - x");
        let bridge = theorem_bridge(&f, interval(-0.7, 0.7), 0.2, &[0.3, 1.0, 5.0]).unwrap();
        assert_relative_eq!(bridge.plus.schwarz_k, 1.0, epsilon = 1e-10);
        assert!(bridge.plus.route_difference < 1e-8);
    }

    #[test]
    fn admissible_subinterval_reported() {
        // phi' = 1 + x on [-0.5, 1.5] exceeds 2 beyond x = 1
        let m = CircleMap::new(parse1("x + 0.5*x^2"), interval(-0.5, 1.5)).unwrap();
        let sub = m.numata_admissible_subinterval().unwrap().unwrap();
        assert!(sub.hi <= 1.05);
        assert_relative_eq!(sub.lo, -0.5, epsilon = 1e-12);
    }
}
