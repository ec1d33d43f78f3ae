//! Dense truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `coeffs[alpha] = d^alpha f / alpha!`
//! of a scalar at a base point, for all multi-indices `alpha` of total degree
//! at most `degree`, over `nvars` independent variables. Storing Taylor
//! coefficients (rather than raw derivatives) makes multiplication a plain
//! truncated polynomial convolution.
//!
//! Coefficients are laid out densely in graded-lexicographic order, so the
//! table for `(nvars, degree - 1)` is always a prefix of the table for
//! `(nvars, degree)`. Degree is capped at 4 and the variable count at 16;
//! every computation in this crate fits in that envelope.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Highest truncation order supported.
pub const MAX_DEGREE: usize = 4;
/// Largest variable count supported (2n with n up to 8).
pub const MAX_VARS: usize = 16;

const DIV_GUARD: f64 = 1e-300;

/// Precomputed index tables for one `(nvars, degree)` combination.
struct JetShape {
    nvars: usize,
    degree: usize,
    /// All multi-indices in graded-lex order, flattened `nvars` at a time.
    multis: Vec<u8>,
    /// Total degree of each position.
    grades: Vec<u8>,
    /// alpha! per position, as f64.
    factorials: Vec<f64>,
    /// Position lookup by multi-index.
    index: HashMap<Box<[u8]>, u32>,
    /// prod[i][j] = position of multi(i) + multi(j); row i covers all j with
    /// grade(i) + grade(j) <= degree, which form a prefix of the table.
    prod: Vec<Vec<u32>>,
    /// shift[v][p] = position of multi(p) + e_v, for p with grade < degree.
    shift: Vec<Vec<u32>>,
}

impl JetShape {
    fn build(nvars: usize, degree: usize) -> JetShape {
        assert!(
            (1..=MAX_VARS).contains(&nvars),
            "jet variable count {nvars} outside 1..={MAX_VARS}"
        );
        assert!(
            degree <= MAX_DEGREE,
            "jet degree {degree} exceeds {MAX_DEGREE}"
        );

        let mut multis: Vec<u8> = Vec::new();
        let mut grades: Vec<u8> = Vec::new();
        let mut prefix = vec![0usize; degree + 1];
        for g in 0..=degree {
            enumerate_grade(nvars, g, &mut multis, &mut grades);
            prefix[g] = multis.len() / nvars;
        }
        let count = multis.len() / nvars;

        let mut factorials = Vec::with_capacity(count);
        let mut index = HashMap::with_capacity(count);
        for p in 0..count {
            let alpha = &multis[p * nvars..(p + 1) * nvars];
            let mut fact = 1.0;
            for &a in alpha {
                for k in 2..=a as u64 {
                    fact *= k as f64;
                }
            }
            factorials.push(fact);
            index.insert(alpha.to_vec().into_boxed_slice(), p as u32);
        }

        let mut prod = Vec::with_capacity(count);
        let mut sum = vec![0u8; nvars];
        for i in 0..count {
            let gi = grades[i] as usize;
            let jmax = prefix[degree - gi];
            let mut row = Vec::with_capacity(jmax);
            for j in 0..jmax {
                for v in 0..nvars {
                    sum[v] = multis[i * nvars + v] + multis[j * nvars + v];
                }
                row.push(index[sum.as_slice()]);
            }
            prod.push(row);
        }

        let lower = if degree == 0 { 0 } else { prefix[degree - 1] };
        let mut shift = Vec::with_capacity(nvars);
        for v in 0..nvars {
            let mut col = Vec::with_capacity(lower);
            for p in 0..lower {
                for w in 0..nvars {
                    sum[w] = multis[p * nvars + w];
                }
                sum[v] += 1;
                col.push(index[sum.as_slice()]);
            }
            shift.push(col);
        }

        JetShape {
            nvars,
            degree,
            multis,
            grades,
            factorials,
            index,
            prod,
            shift,
        }
    }

    fn len(&self) -> usize {
        self.grades.len()
    }

    fn multi(&self, p: usize) -> &[u8] {
        &self.multis[p * self.nvars..(p + 1) * self.nvars]
    }
}

/// Multi-indices of total degree exactly `grade`, lex order with the first
/// variable most significant.
fn enumerate_grade(nvars: usize, grade: usize, out: &mut Vec<u8>, grades: &mut Vec<u8>) {
    fn rec(slot: usize, nvars: usize, left: usize, cur: &mut [u8], out: &mut Vec<u8>) {
        if slot + 1 == nvars {
            cur[slot] = left as u8;
            out.extend_from_slice(cur);
            return;
        }
        for e in (0..=left).rev() {
            cur[slot] = e as u8;
            rec(slot + 1, nvars, left - e, cur, out);
        }
    }
    let before = out.len();
    let mut cur = vec![0u8; nvars];
    rec(0, nvars, grade, &mut cur, out);
    let added = (out.len() - before) / nvars;
    grades.extend(std::iter::repeat(grade as u8).take(added));
}

fn shape(nvars: usize, degree: usize) -> Arc<JetShape> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetShape>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((nvars, degree))
        .or_insert_with(|| Arc::new(JetShape::build(nvars, degree)))
        .clone()
}

/// Truncated multivariate Taylor expansion of a scalar at a base point.
///
/// Immutable value type; all arithmetic is pure, so jets can be evaluated in
/// parallel with no shared state.
#[derive(Clone)]
pub struct Jet {
    shape: Arc<JetShape>,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Jet of a constant: every derivative vanishes.
    pub fn constant(nvars: usize, degree: usize, value: f64) -> Jet {
        let shape = shape(nvars, degree);
        let mut coeffs = vec![0.0; shape.len()];
        coeffs[0] = value;
        Jet { shape, coeffs }
    }

    /// Seed for the independent variable `var`: base value plus a unit
    /// first-order coefficient in slot `var`.
    pub fn variable(nvars: usize, degree: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars, "variable index {var} out of range ({nvars} vars)");
        assert!(degree >= 1, "a degree-0 jet cannot carry a seed");
        let mut jet = Jet::constant(nvars, degree, value);
        jet.coeffs[1 + var] = 1.0;
        jet
    }

    /// Jet from raw Taylor coefficients in graded-lex order.
    pub fn from_coeffs(nvars: usize, degree: usize, coeffs: Vec<f64>) -> Jet {
        let shape = shape(nvars, degree);
        assert_eq!(
            coeffs.len(),
            shape.len(),
            "coefficient table for ({nvars} vars, degree {degree}) has {} entries",
            shape.len()
        );
        Jet { shape, coeffs }
    }

    fn constant_like(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            shape: self.shape.clone(),
            coeffs,
        }
    }

    pub fn nvars(&self) -> usize {
        self.shape.nvars
    }

    pub fn degree(&self) -> usize {
        self.shape.degree
    }

    /// Constant term (the value of the underlying function at the base point).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// First-order coefficients, one per variable; these are the raw first
    /// partials of the carried function.
    pub fn gradient(&self) -> &[f64] {
        assert!(self.degree() >= 1);
        &self.coeffs[1..=self.nvars()]
    }

    /// Taylor coefficient at `alpha`, i.e. `d^alpha f / alpha!`.
    pub fn coefficient(&self, alpha: &[usize]) -> Result<f64> {
        Ok(self.coeffs[self.position(alpha)?])
    }

    /// Raw partial derivative `d^alpha f` (the Taylor coefficient times alpha!).
    pub fn derivative_value(&self, alpha: &[usize]) -> Result<f64> {
        let p = self.position(alpha)?;
        Ok(self.coeffs[p] * self.shape.factorials[p])
    }

    fn position(&self, alpha: &[usize]) -> Result<usize> {
        if alpha.len() != self.nvars() {
            return Err(Error::MismatchedJets(
                self.nvars(),
                self.degree(),
                alpha.len(),
                self.degree(),
            ));
        }
        let order: usize = alpha.iter().sum();
        if order > self.degree() {
            return Err(Error::OrderExceeded {
                requested: order,
                degree: self.degree(),
            });
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.shape.index[key.as_slice()] as usize)
    }

    /// Jet of the partial derivative with respect to variable `var`,
    /// truncated one degree lower. Exact on the retained coefficients.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(var < self.nvars());
        assert!(self.degree() >= 1, "cannot differentiate a degree-0 jet");
        let out_shape = shape(self.nvars(), self.degree() - 1);
        let mut coeffs = Vec::with_capacity(out_shape.len());
        let col = &self.shape.shift[var];
        for p in 0..out_shape.len() {
            let src = col[p] as usize;
            let exp = self.shape.multi(p)[var] as f64 + 1.0;
            coeffs.push(self.coeffs[src] * exp);
        }
        Jet {
            shape: out_shape,
            coeffs,
        }
    }

    /// Same expansion truncated to a lower degree.
    pub fn truncated(&self, degree: usize) -> Jet {
        assert!(degree <= self.degree());
        if degree == self.degree() {
            return self.clone();
        }
        let out_shape = shape(self.nvars(), degree);
        let coeffs = self.coeffs[..out_shape.len()].to_vec();
        Jet {
            shape: out_shape,
            coeffs,
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_same_shape(&self, other: &Jet) -> Result<()> {
        if self.nvars() != other.nvars() || self.degree() != other.degree() {
            return Err(Error::MismatchedJets(
                self.nvars(),
                self.degree(),
                other.nvars(),
                other.degree(),
            ));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            shape: self.shape.clone(),
            coeffs,
        })
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            shape: self.shape.clone(),
            coeffs,
        })
    }

    /// Truncated polynomial product.
    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_same_shape(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for (i, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let row = &self.shape.prod[i];
            for (j, &pos) in row.iter().enumerate() {
                let cb = other.coeffs[j];
                if cb != 0.0 {
                    coeffs[pos as usize] += ca * cb;
                }
            }
        }
        Ok(Jet {
            shape: self.shape.clone(),
            coeffs,
        })
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.checked_mul(&other.reciprocal()?)
    }

    /// 1 / self via composition with the geometric series at the constant term.
    pub fn reciprocal(&self) -> Result<Jet> {
        let c = self.value();
        if c.abs() < DIV_GUARD {
            return Err(Error::DivisionByZeroJet);
        }
        let d = self.degree();
        let mut s = vec![0.0; d + 1];
        s[0] = 1.0 / c;
        for k in 1..=d {
            s[k] = -s[k - 1] / c;
        }
        Ok(self.compose(&s))
    }

    pub fn scale(&self, factor: f64) -> Jet {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Jet {
            shape: self.shape.clone(),
            coeffs,
        }
    }

    /// Univariate composition: given the Taylor coefficients
    /// `series[k] = f^(k)(c) / k!` of `f` at the jet's constant term `c`,
    /// returns the truncated expansion of `f(self)`. Exact truncation because
    /// the zero-constant part of the jet is nilpotent at this degree.
    fn compose(&self, series: &[f64]) -> Jet {
        debug_assert_eq!(series.len(), self.degree() + 1);
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        let d = self.degree();
        let mut acc = self.constant_like(series[d]);
        for k in (0..d).rev() {
            acc = acc.checked_mul(&w).expect("same shape");
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let c = self.value();
        if !(c > 0.0) {
            return Err(Error::Domain {
                function: "sqrt",
                value: c,
            });
        }
        let d = self.degree();
        let mut s = vec![0.0; d + 1];
        s[0] = c.sqrt();
        for k in 1..=d {
            s[k] = s[k - 1] * (1.5 - k as f64) / (k as f64 * c);
        }
        Ok(self.compose(&s))
    }

    pub fn exp(&self) -> Result<Jet> {
        let c = self.value();
        let d = self.degree();
        let mut s = vec![0.0; d + 1];
        s[0] = c.exp();
        for k in 1..=d {
            s[k] = s[k - 1] / k as f64;
        }
        Ok(self.compose(&s))
    }

    pub fn ln(&self) -> Result<Jet> {
        let c = self.value();
        if !(c > 0.0) {
            return Err(Error::Domain {
                function: "ln",
                value: c,
            });
        }
        let d = self.degree();
        let mut s = vec![0.0; d + 1];
        s[0] = c.ln();
        if d >= 1 {
            s[1] = 1.0 / c;
            for k in 2..=d {
                s[k] = -s[k - 1] * (k as f64 - 1.0) / (k as f64 * c);
            }
        }
        Ok(self.compose(&s))
    }

    pub fn sin(&self) -> Result<Jet> {
        Ok(self.compose(&sin_cos_series(self.value(), self.degree(), false)))
    }

    pub fn cos(&self) -> Result<Jet> {
        Ok(self.compose(&sin_cos_series(self.value(), self.degree(), true)))
    }

    pub fn atan(&self) -> Result<Jet> {
        let c = self.value();
        let d = self.degree();
        let t = 1.0 + c * c;
        let mut s = [0.0; MAX_DEGREE + 1];
        s[0] = c.atan();
        if d >= 1 {
            s[1] = 1.0 / t;
        }
        if d >= 2 {
            s[2] = -c / (t * t);
        }
        if d >= 3 {
            s[3] = (3.0 * c * c - 1.0) / (3.0 * t * t * t);
        }
        if d >= 4 {
            s[4] = c * (1.0 - c * c) / (t * t * t * t);
        }
        Ok(self.compose(&s[..=d]))
    }

    /// Integer power by repeated squaring; negative exponents go through the
    /// reciprocal and require a nonzero constant term.
    pub fn powi(&self, exponent: i32) -> Result<Jet> {
        if exponent < 0 {
            return self.reciprocal()?.powi(-exponent);
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = exponent as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(result)
    }
}

fn sin_cos_series(c: f64, degree: usize, cosine: bool) -> Vec<f64> {
    // Derivative cycle sin -> cos -> -sin -> -cos, offset by one for cos.
    let cycle = [c.sin(), c.cos(), -c.sin(), -c.cos()];
    let start = if cosine { 1 } else { 0 };
    let mut s = vec![0.0; degree + 1];
    let mut fact = 1.0;
    for (k, slot) in s.iter_mut().enumerate() {
        if k > 1 {
            fact *= k as f64;
        }
        *slot = cycle[(start + k) % 4] / fact;
    }
    s
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.nvars() == other.nvars()
            && self.degree() == other.degree()
            && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars())
            .field("degree", &self.degree())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$checked(rhs).expect("jet operands must share shape")
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, checked_add);
jet_binop!(Sub, sub, checked_sub);
jet_binop!(Mul, mul, checked_mul);
jet_binop!(Div, div, checked_div);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_of_seed() {
        // (2 + h)^2 = 4 + 4h + h^2
        let x = Jet::variable(1, 2, 0, 2.0);
        let sq = &x * &x;
        assert_relative_eq!(sq.coeffs()[0], 4.0);
        assert_relative_eq!(sq.coeffs()[1], 4.0);
        assert_relative_eq!(sq.coeffs()[2], 1.0);
    }

    #[test]
    fn self_division_is_one() {
        let mut a = Jet::variable(2, 3, 0, 1.7);
        a.coeffs[2] = -0.4;
        a.coeffs[4] = 0.9;
        let one = a.checked_div(&a).unwrap();
        assert_relative_eq!(one.coeffs()[0], 1.0, epsilon = 1e-14);
        for &c in &one.coeffs()[1..] {
            assert!(c.abs() < 1e-14, "higher coefficient {c}");
        }
    }

    #[test]
    fn geometric_series() {
        // 1/(1+h) = 1 - h + h^2 - h^3
        let x = Jet::variable(1, 3, 0, 1.0);
        let r = x.reciprocal().unwrap();
        assert_relative_eq!(r.coeffs()[0], 1.0);
        assert_relative_eq!(r.coeffs()[1], -1.0);
        assert_relative_eq!(r.coeffs()[2], 1.0);
        assert_relative_eq!(r.coeffs()[3], -1.0);
    }

    #[test]
    fn sqrt_series_at_four() {
        let x = Jet::variable(1, 2, 0, 4.0);
        let s = x.sqrt().unwrap();
        assert_relative_eq!(s.coeffs()[0], 2.0);
        assert_relative_eq!(s.coeffs()[1], 0.25);
        assert_relative_eq!(s.coeffs()[2], -1.0 / 64.0);
    }

    #[test]
    fn exp_series_at_zero() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let e = x.exp().unwrap();
        assert_relative_eq!(e.coeffs()[0], 1.0);
        assert_relative_eq!(e.coeffs()[1], 1.0);
        assert_relative_eq!(e.coeffs()[2], 0.5);
        assert_relative_eq!(e.coeffs()[3], 1.0 / 6.0);
    }

    #[test]
    fn atan_series_at_zero() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let a = x.atan().unwrap();
        assert_relative_eq!(a.coeffs()[0], 0.0);
        assert_relative_eq!(a.coeffs()[1], 1.0);
        assert_relative_eq!(a.coeffs()[2], 0.0);
        assert_relative_eq!(a.coeffs()[3], -1.0 / 3.0);
    }

    #[test]
    fn derivative_extraction() {
        let x = Jet::variable(1, 2, 0, 2.0);
        let sq = &x * &x;
        assert_relative_eq!(sq.derivative_value(&[2]).unwrap(), 2.0);
        assert_relative_eq!(sq.derivative_value(&[0]).unwrap(), 4.0);

        let e = Jet::variable(1, 3, 0, 0.0).exp().unwrap();
        assert_relative_eq!(e.derivative_value(&[3]).unwrap(), 1.0);
    }

    #[test]
    fn order_exceeded() {
        let x = Jet::variable(1, 2, 0, 1.0);
        assert!(matches!(
            x.derivative_value(&[3]),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let a = Jet::variable(1, 2, 0, 1.0);
        let b = Jet::variable(2, 2, 0, 1.0);
        assert!(matches!(
            a.checked_add(&b),
            Err(Error::MismatchedJets(..))
        ));
    }

    #[test]
    fn division_by_zero_jet() {
        let a = Jet::variable(1, 2, 0, 1.0);
        let z = Jet::constant(1, 2, 0.0);
        assert!(matches!(a.checked_div(&z), Err(Error::DivisionByZeroJet)));
    }

    #[test]
    fn sqrt_domain_error() {
        let x = Jet::variable(1, 2, 0, -1.0);
        assert!(matches!(x.sqrt(), Err(Error::Domain { .. })));
    }

    #[test]
    fn mixed_partial_of_product() {
        // f(u, v) = u*v at (3, 5): d2f/dudv = 1, df/du = 5, df/dv = 3.
        let u = Jet::variable(2, 2, 0, 3.0);
        let v = Jet::variable(2, 2, 1, 5.0);
        let f = &u * &v;
        assert_relative_eq!(f.derivative_value(&[1, 1]).unwrap(), 1.0);
        assert_relative_eq!(f.derivative_value(&[1, 0]).unwrap(), 5.0);
        assert_relative_eq!(f.derivative_value(&[0, 1]).unwrap(), 3.0);
        assert_relative_eq!(f.value(), 15.0);
    }

    #[test]
    fn partial_lowers_degree_exactly() {
        // f = u^2 v, df/du = 2uv as a degree-2 jet.
        let u = Jet::variable(2, 3, 0, 1.5);
        let v = Jet::variable(2, 3, 1, -0.5);
        let f = &(&u * &u) * &v;
        let fu = f.partial(0);
        let expect = {
            let u2 = Jet::variable(2, 2, 0, 1.5);
            let v2 = Jet::variable(2, 2, 1, -0.5);
            (&u2 * &v2).scale(2.0)
        };
        assert_eq!(fu.degree(), 2);
        for (a, b) in fu.coeffs().iter().zip(expect.coeffs()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let x = Jet::variable(2, 4, 0, 1.3);
        let y = Jet::variable(2, 4, 1, 0.7);
        let base = &x + &(&y * &y);
        let p3 = base.powi(3).unwrap();
        let manual = &(&base * &base) * &base;
        for (a, b) in p3.coeffs().iter().zip(manual.coeffs()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let pm2 = base.powi(-2).unwrap();
        let manual = base.reciprocal().unwrap();
        let manual = &manual * &manual;
        for (a, b) in pm2.coeffs().iter().zip(manual.coeffs()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn truncation_is_prefix() {
        let x = Jet::variable(3, 4, 0, 0.3);
        let y = Jet::variable(3, 4, 1, -1.1);
        let z = Jet::variable(3, 4, 2, 0.9);
        let f = (&(&x * &y) + &z).sin().unwrap();
        let t = f.truncated(2);
        assert_eq!(t.coeffs(), &f.coeffs()[..t.coeffs().len()]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        // C(2+3, 3) = 10 coefficients for 2 vars at degree 3
        fn raw_jet() -> impl Strategy<Value = Jet> {
            proptest::collection::vec(-1.0f64..1.0, 10)
                .prop_map(|c| Jet::from_coeffs(2, 3, c))
        }

        proptest! {
            #[test]
            fn mul_is_commutative(a in raw_jet(), b in raw_jet()) {
                let ab = &a * &b;
                let ba = &b * &a;
                for (x, y) in ab.coeffs().iter().zip(ba.coeffs()) {
                    prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0));
                }
            }

            #[test]
            fn mul_is_associative(a in raw_jet(), b in raw_jet(), c in raw_jet()) {
                let left = &(&a * &b) * &c;
                let right = &a * &(&b * &c);
                for (x, y) in left.coeffs().iter().zip(right.coeffs()) {
                    prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0));
                }
            }

            #[test]
            fn division_roundtrip(a in raw_jet(), b in raw_jet()) {
                // keep the divisor's constant term away from zero
                let mut b = b;
                {
                    let c = &mut b.coeffs[0];
                    *c = if *c >= 0.0 { *c + 0.5 } else { *c - 0.5 };
                }
                let q = a.checked_div(&b).unwrap();
                let back = &q * &b;
                for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
                    prop_assert!((x - y).abs() <= 1e-11 * x.abs().max(y.abs()).max(1.0));
                }
            }
        }

        // A monomial term c * u^p * v^q with p + q <= 4.
        fn term() -> impl Strategy<Value = (f64, usize, usize)> {
            (0usize..=4).prop_flat_map(|p| {
                (-1.0f64..1.0, Just(p), 0usize..=(4 - p))
            }).prop_map(|(c, p, q)| (c, p, q))
        }

        proptest! {
            /// Jet evaluation of random degree-<=4 polynomials reproduces the
            /// analytically differentiated polynomial at every multi-index.
            #[test]
            fn polynomial_derivatives_are_exact(
                terms in proptest::collection::vec(term(), 1..6),
                x0 in -1.0f64..1.0,
                x1 in -1.0f64..1.0,
            ) {
                let u = Jet::variable(2, 4, 0, x0);
                let v = Jet::variable(2, 4, 1, x1);
                let mut jet = Jet::constant(2, 4, 0.0);
                for &(c, p, q) in &terms {
                    let m = u.powi(p as i32).unwrap() * v.powi(q as i32).unwrap();
                    jet = jet + m.scale(c);
                }
                // e! / (e-k)!, zero when k > e; the empty product is 1
                let falling = |e: usize, k: usize| -> f64 {
                    if k > e {
                        return 0.0;
                    }
                    ((e - k + 1)..=e).map(|m| m as f64).product()
                };
                for b0 in 0..=4usize {
                    for b1 in 0..=(4 - b0) {
                        let mut analytic = 0.0;
                        for &(c, p, q) in &terms {
                            if p >= b0 && q >= b1 {
                                analytic += c
                                    * falling(p, b0)
                                    * falling(q, b1)
                                    * x0.powi((p - b0) as i32)
                                    * x1.powi((q - b1) as i32);
                            }
                        }
                        let extracted = jet.derivative_value(&[b0, b1]).unwrap();
                        let scale = extracted.abs().max(analytic.abs()).max(1.0);
                        prop_assert!(
                            (extracted - analytic).abs() <= 1e-13 * scale,
                            "alpha = ({b0}, {b1}): {extracted} vs {analytic}"
                        );
                    }
                }
            }
        }
    }
}
