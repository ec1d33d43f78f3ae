//! Reproducible random inputs for the verification suite and the acceptance
//! tests: bounded-coefficient metric specs that stay inside their validity
//! domains on the sample box, admissible potentials, Moebius maps with poles
//! kept away from the sample interval, and composable map pairs.
//!
//! Sample boxes: points in [-0.5, 0.5]^n, directions in [-1, 1]^n with norm
//! at least 0.3. Coefficient magnitudes stay at or below 0.5 throughout.

use rand::Rng;

use crate::curvature::CurvatureFrame;
use crate::error::Result;
use crate::expr::{BinOp, Expr, Func};
use crate::metric::Metric;
use crate::schwarz::{constant_curvature_map, CircleMap, Interval};
use crate::tol;

pub fn random_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
}

pub fn random_direction<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if y.iter().map(|c| c * c).sum::<f64>().sqrt() >= 0.3 {
            return y;
        }
    }
}

/// All multi-indices with |alpha| <= order, including zero.
pub fn multi_indices_up_to(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; dim];
    fn rec(slot: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == cur.len() {
            for e in 0..=left {
                cur[slot] = e;
                out.push(cur.clone());
            }
            cur[slot] = 0;
            return;
        }
        for e in 0..=left {
            cur[slot] = e;
            rec(slot + 1, left - e, cur, out);
        }
        cur[slot] = 0;
    }
    if dim == 0 {
        return out;
    }
    rec(0, order, &mut cur, &mut out);
    out
}

fn num(v: f64) -> Expr {
    if v < 0.0 {
        Expr::Neg(Box::new(Expr::Number(-v)))
    } else {
        Expr::Number(v)
    }
}

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, Box::new(l), Box::new(r))
}

fn call(f: Func, e: Expr) -> Expr {
    Expr::Call(f, Box::new(e))
}

fn var(i: usize) -> Expr {
    Expr::Var(i)
}

/// A smooth bounded basis term with gradient norm at most ~1 on the sample
/// box.
fn basis_term<R: Rng>(dim: usize, rng: &mut R) -> Expr {
    let i = rng.random_range(0..dim);
    let j = rng.random_range(0..dim);
    match rng.random_range(0..6u8) {
        0 => call(Func::Sin, var(i)),
        1 => call(Func::Cos, var(i)),
        2 => var(i),
        3 => bin(BinOp::Mul, var(i), var(j)),
        4 => Expr::Pow(Box::new(var(i)), 2),
        // rational term, smooth on the whole box
        _ => bin(
            BinOp::Div,
            var(i),
            bin(BinOp::Add, Expr::Number(2.0), Expr::Pow(Box::new(var(j)), 2)),
        ),
    }
}

/// Sum of a few bounded basis terms; the magnitudes are capped so the total
/// gradient norm stays below `grad_budget` on the sample box.
fn bounded_sum<R: Rng>(dim: usize, terms: usize, grad_budget: f64, rng: &mut R) -> Expr {
    let per_term = grad_budget / terms as f64;
    let mut acc = num(rng.random_range(-per_term..per_term)) ;
    for _ in 0..terms {
        let c = rng.random_range(-per_term..per_term);
        let term = bin(BinOp::Mul, num(c), basis_term(dim, rng));
        acc = bin(BinOp::Add, acc, term);
    }
    acc
}

/// Smooth expression for the jet-vs-FD group; includes exp and rational
/// pieces and stays well-conditioned on the box.
pub fn random_smooth_expr<R: Rng>(dim: usize, rng: &mut R) -> Expr {
    let mut acc = bounded_sum(dim, 2, 1.0, rng);
    if rng.random_bool(0.5) {
        let c = rng.random_range(-0.5..0.5);
        let i = rng.random_range(0..dim);
        let term = bin(
            BinOp::Mul,
            num(c),
            call(Func::Exp, bin(BinOp::Mul, num(0.5), var(i))),
        );
        acc = bin(BinOp::Add, acc, term);
    }
    acc
}

/// Numata potential admissible on the sample box: the gradient norm is kept
/// at or below 0.6, so the squared gradient stays below 0.36 < 1.
pub fn random_potential<R: Rng>(n: usize, rng: &mut R) -> Expr {
    bounded_sum(n, 3, 0.6, rng)
}

/// Diagonally dominant symmetric coefficient matrix: unit diagonal plus
/// perturbations small enough to keep the eigenvalues inside [0.5, 1.5]
/// on the sample box.
fn random_coefficient_matrix<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<Expr>> {
    let off_scale = 0.25 / (n.max(2) - 1) as f64;
    let mut rows: Vec<Vec<Expr>> = vec![Vec::new(); n];
    for i in 0..n {
        rows[i] = (0..n).map(|_| Expr::Number(0.0)).collect();
    }
    for i in 0..n {
        let c = rng.random_range(-0.25..0.25);
        rows[i][i] = bin(
            BinOp::Add,
            Expr::Number(1.0),
            bin(BinOp::Mul, num(c), basis_term(n, rng)),
        );
        for j in 0..i {
            let c = rng.random_range(-off_scale..off_scale);
            let e = bin(BinOp::Mul, num(c), basis_term(n, rng));
            rows[i][j] = e.clone();
            rows[j][i] = e;
        }
    }
    rows
}

pub fn random_riemannian<R: Rng>(n: usize, rng: &mut R) -> Result<Metric> {
    Metric::riemannian(n, random_coefficient_matrix(n, rng))
}

/// Randers data with `a^ij b_i b_j` bounded well below 1 on the box: the
/// matrix eigenvalues stay above 0.5 and the one-form is capped at 0.35 in
/// Euclidean norm.
pub fn random_randers<R: Rng>(n: usize, rng: &mut R) -> Result<Metric> {
    let a = random_coefficient_matrix(n, rng);
    let cap = 0.35 / (n as f64).sqrt();
    let b = (0..n)
        .map(|_| {
            let c0 = rng.random_range(-0.5 * cap..0.5 * cap);
            let c1 = rng.random_range(-0.5 * cap..0.5 * cap);
            let i = rng.random_range(0..n);
            bin(
                BinOp::Add,
                num(c0),
                bin(BinOp::Mul, num(c1), call(Func::Sin, var(i))),
            )
        })
        .collect();
    Metric::randers(n, a, b)
}

pub fn random_numata<R: Rng>(n: usize, rng: &mut R) -> Result<Metric> {
    Metric::numata(n, random_potential(n, rng))
}

/// Random spec across the three n-dimensional families.
pub fn random_metric<R: Rng>(n: usize, rng: &mut R) -> Result<Metric> {
    match rng.random_range(0..3u8) {
        0 => random_riemannian(n, rng),
        1 => random_randers(n, rng),
        _ => random_numata(n, rng),
    }
}

/// Stereographic chart of the unit sphere: constant curvature +1.
pub fn sphere_chart() -> Result<Metric> {
    let e = |s: &str| Expr::parse(s, 2).unwrap();
    Metric::riemannian(
        2,
        vec![
            vec![e("4/(1 + x1^2 + x2^2)^2"), e("0")],
            vec![e("0"), e("4/(1 + x1^2 + x2^2)^2")],
        ],
    )
}

/// Poincaré disk chart: constant curvature -1. Sample inside |x| < 0.99.
pub fn hyperbolic_chart() -> Result<Metric> {
    let e = |s: &str| Expr::parse(s, 2).unwrap();
    Metric::riemannian(
        2,
        vec![
            vec![e("4/(1 - x1^2 - x2^2)^2"), e("0")],
            vec![e("0"), e("4/(1 - x1^2 - x2^2)^2")],
        ],
    )
}

/// Unit flag vector with a well-conditioned flag denominator at this frame.
pub fn admissible_flag_vector<R: Rng>(frame: &CurvatureFrame, rng: &mut R) -> Result<Vec<f64>> {
    let n = frame.dim();
    let ell = frame.tensors.ell.to_vec();
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len < 1e-3 {
            continue;
        }
        for c in &mut v {
            *c /= len;
        }
        let denom = frame.tensors.g_form(&v, &v) - frame.tensors.g_form(&ell, &v).powi(2);
        if denom >= tol::SAMPLE_DENOMINATOR {
            return Ok(v);
        }
    }
}

fn moebius_expr(a: f64, b: f64, c: f64, d: f64) -> Expr {
    let lin = |p: f64, q: f64| bin(BinOp::Add, bin(BinOp::Mul, num(p), var(0)), num(q));
    bin(BinOp::Div, lin(a, b), lin(c, d))
}

/// Moebius map with coefficients in [-2, 2], determinant bounded away from
/// zero and the pole kept off the sample interval.
pub fn random_moebius<R: Rng>(rng: &mut R) -> Result<CircleMap> {
    let domain = Interval::new(-0.5, 0.5)?;
    loop {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        let c: f64 = rng.random_range(-2.0..2.0);
        let d: f64 = rng.random_range(-2.0..2.0);
        if (a * d - b * c).abs() < 0.3 {
            continue;
        }
        let lo = c * -0.6 + d;
        let hi = c * 0.6 + d;
        if lo.signum() != hi.signum() || lo.abs().min(hi.abs()) < 0.3 {
            continue;
        }
        return CircleMap::new(moebius_expr(a, b, c, d), domain);
    }
}

/// Composable pair: the inner map sends [-0.5, 0.5] into [-1.2, 1.2] and the
/// outer map is a diffeomorphism on [-1.3, 1.3].
pub fn random_composable_pair<R: Rng>(rng: &mut R) -> Result<(CircleMap, CircleMap)> {
    let inner_domain = Interval::new(-0.5, 0.5)?;
    let outer_domain = Interval::new(-1.3, 1.3)?;

    let inner = match rng.random_range(0..3u8) {
        0 => {
            // c1 arctan(x) + c0: range within +-(0.6 * pi/4 + 0.2)
            let c1 = rng.random_range(0.2..0.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let c0 = rng.random_range(-0.2..0.2);
            bin(
                BinOp::Add,
                bin(BinOp::Mul, num(c1), call(Func::Arctan, var(0))),
                num(c0),
            )
        }
        1 => {
            // c2 x + c1 sin(x), monotone because c2 > |c1|
            let c2 = rng.random_range(0.5..1.0);
            let c1 = rng.random_range(-0.4..0.4);
            bin(
                BinOp::Add,
                bin(BinOp::Mul, num(c2), var(0)),
                bin(BinOp::Mul, num(c1), call(Func::Sin, var(0))),
            )
        }
        _ => {
            let c1 = rng.random_range(0.3..1.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let c0 = rng.random_range(-0.3..0.3);
            bin(BinOp::Add, bin(BinOp::Mul, num(c1), var(0)), num(c0))
        }
    };

    let outer = match rng.random_range(0..4u8) {
        0 => call(Func::Exp, bin(BinOp::Mul, num(rng.random_range(0.3..0.8)), var(0))),
        1 => {
            // Moebius with the pole far outside [-1.3, 1.3]
            let a = rng.random_range(0.5..1.5);
            let b = rng.random_range(-0.5..0.5);
            let c = rng.random_range(-0.3..0.3);
            let d = rng.random_range(2.5..3.5);
            moebius_expr(a, b, c, d)
        }
        2 => bin(
            BinOp::Add,
            var(0),
            bin(BinOp::Mul, num(rng.random_range(-0.3..0.3)), call(Func::Sin, var(0))),
        ),
        _ => call(Func::Arctan, var(0)),
    };

    Ok((
        CircleMap::new(outer, outer_domain)?,
        CircleMap::new(inner, inner_domain)?,
    ))
}

/// Target curvature in [0.1, 10] and a family member with determinant
/// normalized to +/-1 and the pole kept away from the sample interval.
pub fn random_constant_curvature_map<R: Rng>(rng: &mut R) -> Result<(f64, CircleMap)> {
    let domain = Interval::new(-0.5, 0.5)?;
    loop {
        let k: f64 = rng.random_range(0.1..10.0);
        let a: f64 = rng.random_range(-1.5..1.5);
        let b: f64 = rng.random_range(-1.5..1.5);
        let c: f64 = rng.random_range(-1.5..1.5);
        let d: f64 = rng.random_range(-1.5..1.5);
        let det = a * d - b * c;
        if det.abs() < 0.2 {
            continue;
        }
        let s = 1.0 / det.abs().sqrt();
        let (a, b, c, d) = (a * s, b * s, c * s, d * s);
        // pole margin on the sample interval
        let lo = c * -0.5 + d;
        let hi = c * 0.5 + d;
        if lo.signum() != hi.signum() || lo.abs().min(hi.abs()) < 0.15 {
            continue;
        }
        match constant_curvature_map(k, a, b, c, d, domain) {
            Ok(map) => return Ok((k, map)),
            Err(_) => continue,
        }
    }
}
