//! Central finite-difference oracle.
//!
//! Used only to cross-validate jet-extracted derivatives; never on the main
//! computation path. Mixed partials are formed by nesting the central
//! first-difference stencil, which keeps the estimate symmetric in every
//! variable.

/// Central finite-difference estimate of `d^alpha f` at `x`.
///
/// `step`, when given, is the relative step scale; it defaults to
/// `eps^(1/(|alpha|+2))`. Per-variable steps are scaled by `1 + |x_i|`.
/// Best-effort: no error reporting, accuracy degrades with |alpha|.
pub fn central_derivative<F>(mut f: F, x: &[f64], alpha: &[usize], step: Option<f64>) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let order: usize = alpha.iter().sum();
    let scale = step.unwrap_or_else(|| f64::EPSILON.powf(1.0 / (order as f64 + 2.0)));
    let h: Vec<f64> = x.iter().map(|xi| scale * (1.0 + xi.abs())).collect();
    let mut point = x.to_vec();
    let mut remaining = alpha.to_vec();
    stencil(&mut f, &mut point, &mut remaining, &h)
}

fn stencil<F>(f: &mut F, x: &mut Vec<f64>, alpha: &mut [usize], h: &[f64]) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    match alpha.iter().position(|&a| a > 0) {
        None => f(x),
        Some(i) => {
            alpha[i] -= 1;
            x[i] += h[i];
            let plus = stencil(f, x, alpha, h);
            x[i] -= 2.0 * h[i];
            let minus = stencil(f, x, alpha, h);
            x[i] += h[i];
            alpha[i] += 1;
            (plus - minus) / (2.0 * h[i])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_derivative_of_cube() {
        let d = central_derivative(|p| p[0].powi(3), &[1.0], &[2], None);
        assert_relative_eq!(d, 6.0, epsilon = 1e-6);
    }

    #[test]
    fn mixed_partial_of_product() {
        let d = central_derivative(|p| p[0] * p[1], &[0.3, -0.7], &[1, 1], None);
        assert_relative_eq!(d, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn third_derivative_of_exp() {
        let d = central_derivative(|p| p[0].exp(), &[0.0], &[3], None);
        assert_relative_eq!(d, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn zero_order_is_plain_evaluation() {
        let d = central_derivative(|p| p[0].sin(), &[0.4], &[0], None);
        assert_relative_eq!(d, 0.4f64.sin());
    }
}
