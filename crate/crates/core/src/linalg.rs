//! Dense linear algebra for the small matrices of this crate (n <= 8).
//!
//! Row-major `&[f64]` slices of length n*n. The jet-valued inverse runs
//! Gauss-Jordan over the truncated polynomial ring; pivoting is by the
//! magnitude of the constant term, which is the correct notion of
//! invertibility there.

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Lower Cholesky factor, or `None` when the matrix is not positive definite.
pub fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(m.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

pub fn is_positive_definite(m: &[f64], n: usize) -> bool {
    cholesky(m, n).is_some()
}

/// Inverse by Gauss-Jordan with partial pivoting.
pub fn invert(m: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        let p = a[pivot * n + col];
        if p.abs() < 1e-250 || !p.is_finite() {
            return Err(Error::SingularMetric);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= factor * a[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Ok(inv)
}

/// Inverse of an n x n matrix of jets, exact to the truncation order.
pub fn invert_jets(m: &[Jet], n: usize) -> Result<Vec<Jet>> {
    debug_assert_eq!(m.len(), n * n);
    let mut a: Vec<Jet> = m.to_vec();
    let probe = &m[0];
    let mut inv: Vec<Jet> = Vec::with_capacity(n * n);
    for i in 0..n * n {
        let value = if i % n == i / n { 1.0 } else { 0.0 };
        inv.push(Jet::constant(probe.nvars(), probe.degree(), value));
    }
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].value().abs() > a[pivot * n + col].value().abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].value().abs() < 1e-250 {
            return Err(Error::SingularMetric);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let d = a[col * n + col].clone();
        for k in 0..n {
            a[col * n + k] = a[col * n + k].checked_div(&d)?;
            inv[col * n + k] = inv[col * n + k].checked_div(&d)?;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            if factor.max_abs_coeff() == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] = a[row * n + k].checked_sub(&factor.checked_mul(&a[col * n + k])?)?;
                inv[row * n + k] =
                    inv[row * n + k].checked_sub(&factor.checked_mul(&inv[col * n + k])?)?;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_accepts_spd_rejects_indefinite() {
        let spd = [4.0, 1.0, 1.0, 3.0];
        assert!(is_positive_definite(&spd, 2));
        let indef = [1.0, 2.0, 2.0, 1.0];
        assert!(!is_positive_definite(&indef, 2));
    }

    #[test]
    fn invert_roundtrip() {
        let m = [2.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 4.0];
        let inv = invert(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[i * 3 + k] * inv[k * 3 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(s, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jet_inverse_roundtrips_to_identity() {
        // 2x2 jet matrix with nontrivial derivative structure.
        let u = Jet::variable(2, 2, 0, 0.3);
        let v = Jet::variable(2, 2, 1, -0.2);
        let one = Jet::constant(2, 2, 1.0);
        let m = vec![
            &one + &(&u * &v),
            u.clone(),
            u.clone(),
            &one + &(&v * &v),
        ];
        let inv = invert_jets(&m, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Jet::constant(2, 2, 0.0);
                for k in 0..2 {
                    s = &s + &(&m[i * 2 + k] * &inv[k * 2 + j]);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(s.value(), expect, epsilon = 1e-13);
                for &c in &s.coeffs()[1..] {
                    assert!(c.abs() < 1e-13);
                }
            }
        }
    }
}
