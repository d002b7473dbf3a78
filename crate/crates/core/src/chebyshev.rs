//! Chebyshev polynomials and the SRJ amplification polynomial.
//!
//! The amplification polynomial of the degree-`M` scheme is a Chebyshev
//! polynomial squeezed onto `[-1, lambda_max]` and scaled by 1/3:
//!
//! ```text
//! G_M(lambda) = T_M(f(lambda)) / 3,   f(lambda) = ((l* + 1) lambda + (l* - 1)) / 2
//! ```
//!
//! where `l*` solves `T_M(l*) = 3`. Then `G_M(1) = 1`, `|G_M| <= 1/3` on
//! `[-1, lambda_max]`, and `lambda_max = g(1)` with `g` the inverse of `f`.

use crate::{Error, Result};

/// Value that bounds `|G_M|` on the captured eigenvalue interval.
pub const BOUND: f64 = 1.0 / 3.0;

/// `T_M(x)`.
///
/// Uses `cos(M acos x)` on `[-1, 1]` and `cosh(M acosh |x|)` with the parity
/// sign outside, which stays accurate for large `M` where the three-term
/// recurrence does not.
pub fn cheb_eval(m: u32, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (m as f64 * x.acos()).cos()
    } else {
        let v = (m as f64 * x.abs().acosh()).cosh();
        if x < 0.0 && m % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// `T_M'(x) = M U_{M-1}(x)`.
pub fn cheb_deriv(m: u32, x: f64) -> f64 {
    let mf = m as f64;
    if m == 0 {
        return 0.0;
    }
    if x.abs() == 1.0 {
        let sign = if x < 0.0 && m.is_multiple_of(2) { -1.0 } else { 1.0 };
        return sign * mf * mf;
    }
    if x.abs() < 1.0 {
        let t = x.acos();
        mf * (mf * t).sin() / t.sin()
    } else {
        let t = x.abs().acosh();
        let v = mf * (mf * t).sinh() / t.sinh();
        // U_{M-1} has the parity of M - 1.
        if x < 0.0 && m.is_multiple_of(2) {
            -v
        } else {
            v
        }
    }
}

/// Roots of `T_M` in descending order: `cos(pi (2j + 1) / 2M)`.
pub fn cheb_roots(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::ZeroDegree);
    }
    let mf = m as f64;
    Ok((0..m)
        .map(|j| {
            // Antisymmetric pairs are computed from the same angle so the
            // set is exactly symmetric about zero.
            let k = j.min(m - 1 - j);
            let v = (std::f64::consts::PI * (2 * k + 1) as f64 / (2.0 * mf)).cos();
            if 2 * j + 1 == m {
                0.0
            } else if j == k {
                v
            } else {
                -v
            }
        })
        .collect())
}

/// The point `l* > 1` with `T_M(l*) = 3`, in closed form.
pub fn lambda_star(m: usize) -> f64 {
    if m == 1 {
        return 3.0;
    }
    (3.0f64.acosh() / m as f64).cosh()
}

/// Affine map taking `[-1, 1]` in eigenvalue space to `[-1, l*]`.
pub fn affine_f(lambda_star: f64, lam: f64) -> f64 {
    ((lambda_star + 1.0) * lam + (lambda_star - 1.0)) / 2.0
}

/// Inverse of [`affine_f`].
pub fn affine_g(lambda_star: f64, x: f64) -> f64 {
    2.0 * x / (lambda_star + 1.0) + (1.0 - lambda_star) / (1.0 + lambda_star)
}

/// Largest Jacobi eigenvalue for which the degree-`m` scheme damps by 1/3.
pub fn lambda_max(m: usize) -> f64 {
    let ls = lambda_star(m);
    (3.0 - ls) / (1.0 + ls)
}

/// `G_M(lam)` for the degree-`m` scheme.
pub fn amplification_eval(m: usize, lam: f64) -> f64 {
    AmplificationPolynomial::new(m).eval(lam)
}

/// The degree-`M` amplification polynomial with its cached constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationPolynomial {
    pub degree: usize,
    pub lambda_star: f64,
    pub lambda_max: f64,
}

impl AmplificationPolynomial {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "amplification polynomial needs degree >= 1");
        let ls = lambda_star(degree);
        Self {
            degree,
            lambda_star: ls,
            lambda_max: (3.0 - ls) / (1.0 + ls),
        }
    }

    pub fn eval(&self, lam: f64) -> f64 {
        cheb_eval(self.degree as u32, affine_f(self.lambda_star, lam)) * BOUND
    }

    /// `G_M'(1)`, the stiffness slope.
    pub fn slope_at_one(&self) -> f64 {
        cheb_deriv(self.degree as u32, self.lambda_star) * (self.lambda_star + 1.0) / 6.0
    }

    /// Roots of `G_M`, i.e. the Chebyshev roots pulled back through `g`.
    pub fn roots(&self) -> Vec<f64> {
        cheb_roots(self.degree)
            .expect("degree >= 1")
            .into_iter()
            .map(|x| affine_g(self.lambda_star, x))
            .collect()
    }
}

/// Number of points of the uniform grid used to check boundedness of `G_M`.
///
/// 10,001 points up to `M = 2500`, doubling the spacing density for longer
/// schemes so every extremum stays resolved.
pub fn boundedness_grid_size(m: usize) -> usize {
    let mut intervals = 10_000usize;
    while m > intervals / 4 {
        intervals *= 2;
    }
    intervals + 1
}

/// Maximum of `|G_M|` on a uniform grid over `[-1, lambda_max(M)]`.
pub fn max_abs_on_bounded_interval(m: usize) -> f64 {
    let poly = AmplificationPolynomial::new(m);
    let points = boundedness_grid_size(m);
    let span = poly.lambda_max + 1.0;
    (0..points)
        .map(|i| {
            let lam = -1.0 + span * i as f64 / (points - 1) as f64;
            poly.eval(lam).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_degree_matches_closed_form() {
        let max = (0..100)
            .map(|i| -1.5 + 3.0 * i as f64 / 99.0)
            .map(|x| (cheb_eval(2, x) - (2.0 * x * x - 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-14, "max diff {max}");
    }

    #[test]
    fn one_is_fixed_point() {
        for m in 1..=50 {
            assert_relative_eq!(cheb_eval(m, 1.0), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cubic_at_half() {
        assert_relative_eq!(cheb_eval(3, 0.5), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_arguments_follow_parity() {
        for m in 1..12u32 {
            for &x in &[-3.0, -1.2, -0.4] {
                let expect = if m % 2 == 0 { 1.0 } else { -1.0 } * cheb_eval(m, -x);
                assert_relative_eq!(cheb_eval(m, x), expect, max_relative = 1e-13);
            }
        }
        assert_relative_eq!(cheb_eval(3, -2.0), 4.0 * -8.0 + 6.0, max_relative = 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for m in [1u32, 2, 3, 5, 8] {
            for &x in &[-2.5, -0.7, 0.1, 0.9, 1.7, 3.0] {
                let h = 1e-6;
                let fd = (cheb_eval(m, x + h) - cheb_eval(m, x - h)) / (2.0 * h);
                assert_relative_eq!(cheb_deriv(m, x), fd, max_relative = 1e-6, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn roots_small_degrees() {
        assert_eq!(cheb_roots(1).unwrap(), vec![0.0]);
        let r2 = cheb_roots(2).unwrap();
        assert_relative_eq!(r2[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(r2[1], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let r3 = cheb_roots(3).unwrap();
        assert_relative_eq!(r3[0], 0.8660254, epsilon = 1e-7);
        assert_eq!(r3[1], 0.0);
        assert_relative_eq!(r3[2], -0.8660254, epsilon = 1e-7);
        assert!(matches!(cheb_roots(0), Err(Error::ZeroDegree)));
    }

    #[test]
    fn roots_descend_and_are_symmetric() {
        for m in [4usize, 7, 47, 256] {
            let r = cheb_roots(m).unwrap();
            assert!(r.windows(2).all(|w| w[0] > w[1]));
            assert!(r.iter().all(|x| x.abs() < 1.0));
            for j in 0..m {
                assert_eq!(r[j], -r[m - 1 - j]);
                assert!(cheb_eval(m as u32, r[j]).abs() < 1e-14 * m as f64);
            }
        }
    }

    #[test]
    fn lambda_star_examples() {
        assert_relative_eq!(lambda_star(1), 3.0, epsilon = 1e-15);
        assert_relative_eq!(lambda_star(2), 2f64.sqrt(), epsilon = 1e-14);
        let ls = lambda_star(2);
        assert!(((ls + 1.0) / 2.0 - 1.2071).abs() < 5e-5);
        assert!(((ls - 1.0) / 2.0 - 0.2071).abs() < 5e-5);
        for m in [1usize, 2, 3, 10, 100, 2362, 10000] {
            // The condition number of T_M at l* grows like M^2.
            let v = cheb_eval(m as u32, lambda_star(m));
            let tol = 1e-14f64.max(2e-16 * (m * m) as f64);
            assert!(((v - 3.0) / 3.0).abs() < tol, "M={m}: {v}");
        }
    }

    #[test]
    fn affine_maps() {
        assert_eq!(affine_f(3.0, -1.0), -1.0);
        for ls in [1.01, 1.5, 3.0, 7.0] {
            assert_relative_eq!(affine_f(ls, 1.0), ls, epsilon = 1e-15);
            for &lam in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
                assert!((affine_g(ls, affine_f(ls, lam)) - lam).abs() < 1e-14);
            }
        }
        assert_relative_eq!(affine_g(3.0, 0.0), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn amplification_examples() {
        for m in 1..60 {
            assert!((amplification_eval(m, 1.0) - 1.0).abs() < 1e-12);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((amplification_eval(m, -1.0) - sign / 3.0).abs() < 1e-12);
        }
        assert_relative_eq!(amplification_eval(1, 0.0), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn lambda_max_examples() {
        assert_eq!(lambda_max(1), 0.0);
        assert!((lambda_max(2) - 0.6569).abs() < 5e-4);
        assert!((lambda_max(3) - 0.8368).abs() < 5e-4);
        assert!((lambda_max(5) - 0.9391).abs() < 5e-4);
        for m in 1..200 {
            let g = amplification_eval(m, lambda_max(m)).abs();
            assert!((g - BOUND).abs() < 1e-12);
            assert!(lambda_max(m + 1) > lambda_max(m));
        }
    }

    #[test]
    fn roots_of_amplification_polynomial() {
        for m in [1usize, 2, 5, 19, 111] {
            let poly = AmplificationPolynomial::new(m);
            for r in poly.roots() {
                assert!(poly.eval(r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_size_doubles_for_long_schemes() {
        assert_eq!(boundedness_grid_size(1), 10_001);
        assert_eq!(boundedness_grid_size(2500), 10_001);
        assert_eq!(boundedness_grid_size(2501), 20_001);
        assert_eq!(boundedness_grid_size(10_000), 40_001);
    }
}
