//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn diag(entries: &[f64]) -> RMat {
    RMat::from_diagonal(&DVector::from_column_slice(entries))
}

fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse via LU with partial pivoting, together with the reciprocal
/// 1-norm condition number.
pub fn inverse_with_rcond(m: &CMat) -> Option<(CMat, f64)> {
    let inv = m.clone().lu().try_inverse()?;
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    if rcond.is_finite() {
        Some((inv, rcond))
    } else {
        None
    }
}

/// Largest real part among the eigenvalues of a real square matrix.
pub fn spectral_abscissa(a: &RMat) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `A V + V Aᵀ + D = 0` through the Kronecker form.
pub fn lyapunov(a: &RMat, d: &RMat) -> Result<RMat> {
    let n = a.nrows();
    let id = RMat::identity(n, n);
    let big = id.kronecker(a) + a.kronecker(&id);
    let rhs = DVector::from_iterator(n * n, d.iter().map(|x| -x));
    let v = big
        .lu()
        .solve(&rhs)
        .ok_or(Error::UnstableModel { max_re: spectral_abscissa(a) })?;
    let v = RMat::from_column_slice(n, n, v.as_slice());
    Ok((&v + v.transpose()) * 0.5)
}

/// Iterated exponential integral
///
/// `∫_{0<t_1<…<t_n<τ} Π_i exp(−λ_i (t_{i+1} − t_i))` with `t_0 = 0`,
/// `t_{n+1} = τ` and `n = rates.len() − 1`.
///
/// The value is the top-right entry of `exp(τ J)` where `J` carries `−λ_i`
/// on the diagonal and ones on the superdiagonal; this is the divided
/// difference of the exponential and stays accurate when rates nearly
/// coincide.
pub fn iterated_exp_integral(rates: &[f64], tau: f64) -> f64 {
    let n = rates.len();
    assert!(n >= 1);
    if n == 1 {
        return (-rates[0] * tau).exp();
    }
    if n == 2 {
        return exp_integral(rates[0], rates[1], tau);
    }
    let mut j = RMat::zeros(n, n);
    for (i, r) in rates.iter().enumerate() {
        j[(i, i)] = -r * tau;
        if i + 1 < n {
            j[(i, i + 1)] = tau;
        }
    }
    j.exp()[(0, n - 1)]
}

/// `∫_0^τ e^{−a t} e^{−b(τ−t)} dt`, evaluated without cancellation.
pub fn exp_integral(a: f64, b: f64, tau: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    // e^{-lo τ} ∫_0^τ e^{-(hi-lo) u} du
    (-lo * tau).exp() * e1(hi - lo, tau)
}

/// `∫_0^τ e^{−p t} dt = (1 − e^{−pτ})/p` with the `p → 0` limit.
pub fn e1(p: f64, tau: f64) -> f64 {
    let x = p * tau;
    if x.abs() < 1e-300 {
        tau
    } else {
        -(-x).exp_m1() / p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lyapunov_residual() {
        let a = RMat::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, -0.2, -0.5, 0.1, 0.0, 0.4, -2.0]);
        let d = diag(&[1.0, 2.0, 0.5]);
        let v = lyapunov(&a, &d).unwrap();
        let r = &a * &v + &v * a.transpose() + &d;
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn iterated_integral_closed_forms() {
        // two distinct rates
        let (a, b, t): (f64, f64, f64) = (0.7, 2.3, 1.9);
        let exact = ((-a * t).exp() - (-b * t).exp()) / (b - a);
        assert_relative_eq!(iterated_exp_integral(&[a, b], t), exact, max_relative = 1e-13);
        // all rates zero gives the simplex volume
        assert_relative_eq!(iterated_exp_integral(&[0.0; 4], 2.0), 8.0 / 6.0, max_relative = 1e-12);
        // equal rates: t^n/n! e^{-λ t}
        assert_relative_eq!(
            iterated_exp_integral(&[0.5, 0.5, 0.5], 3.0),
            4.5 * (-1.5f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn e1_small_rate_limit() {
        assert_relative_eq!(e1(1e-12, 2.0), 2.0 * (1.0 - 1e-12), max_relative = 1e-15);
        assert_relative_eq!(e1(0.0, 2.0), 2.0);
    }

    #[test]
    fn condition_number_of_identity() {
        let (inv, rc) = inverse_with_rcond(&CMat::identity(4, 4)).unwrap();
        assert_eq!(inv, CMat::identity(4, 4));
        assert_relative_eq!(rc, 1.0);
    }
}
