//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All of the regression machinery is written against [`Real`], which is
//! implemented for `f32` and `f64`. Random variate generation and the few
//! special functions we need (error function, regularized incomplete beta)
//! are exposed as trait hooks so generic code does not have to carry
//! `Distribution<T>` bounds around.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon-scale tolerance used for relative comparisons.
    fn tolerance() -> Self;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from Gamma(shape, scale = 1).
    fn gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Uniform draw on [0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable as float")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

macro_rules! impl_real {
    ($t:ty, $tol:expr) => {
        impl Real for $t {
            fn tolerance() -> Self {
                $tol
            }

            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0)
                    .expect("gamma shape must be positive and finite")
                    .sample(rng)
            }

            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_real!(f64, 1e-10);
impl_real!(f32, 1e-5);

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_choose<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::neg_infinity();
    }
    let v = statrs::function::factorial::ln_binomial(n as u64, k as u64);
    T::lit(v)
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(z: T) -> T {
    let v = 0.5 * statrs::function::erf::erfc(-z.as_f64() / std::f64::consts::SQRT_2);
    T::lit(v)
}

/// Standard normal quantile.
pub fn normal_quantile<T: Real>(p: T) -> T {
    let v = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p.as_f64());
    T::lit(v)
}

/// Density of the standard Student-t with `df` degrees of freedom.
pub fn student_t_pdf<T: Real>(t: T, df: T) -> T {
    let (t, nu) = (t.as_f64(), df.as_f64());
    let ln_norm = statrs::function::gamma::ln_gamma((nu + 1.0) / 2.0)
        - statrs::function::gamma::ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln();
    T::lit((ln_norm - (nu + 1.0) / 2.0 * (1.0 + t * t / nu).ln()).exp())
}

/// CDF of the standard Student-t, via the regularized incomplete beta function.
pub fn student_t_cdf<T: Real>(t: T, df: T) -> T {
    let (t, nu) = (t.as_f64(), df.as_f64());
    if t.is_infinite() {
        return T::lit(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let x = nu / (nu + t * t);
    let tail = 0.5 * statrs::function::beta::beta_reg(nu / 2.0, 0.5, x);
    T::lit(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Quantile of the standard Student-t.
pub fn student_t_quantile<T: Real>(p: T, df: T) -> T {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dist = StudentsT::new(0.0, 1.0, df.as_f64()).expect("degrees of freedom must be positive");
    T::lit(dist.inverse_cdf(p.as_f64()))
}

/// Draw from a standard Student-t as Z / sqrt(V / df), V ~ chi-squared(df).
pub fn sample_standard_t<T: Real, R: Rng + ?Sized>(df: T, rng: &mut R) -> T {
    let z = T::standard_normal(rng);
    let two = T::lit(2.0);
    let chi2 = two * T::gamma(df / two, rng);
    z / (chi2 / df).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_matches_known_values() {
        assert!((normal_cdf(0.0_f64) - 0.5).abs() < 1e-15);
        let v: f64 = normal_cdf(1.959963984540054_f64);
        assert!((v - 0.975).abs() < 1e-10, "{v}");
        assert!((normal_quantile(0.975_f64) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn student_t_cdf_symmetric_and_limits() {
        for &t in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            let a: f64 = student_t_cdf(t, 5.0);
            let b: f64 = student_t_cdf(-t, 5.0);
            assert!((a + b - 1.0).abs() < 1e-12);
        }
        // t with 1 df is Cauchy
        let c: f64 = student_t_cdf(1.0, 1.0);
        assert!((c - 0.75).abs() < 1e-12);
        let big: f64 = student_t_cdf(1.3, 1e7);
        assert!((big - normal_cdf(1.3)).abs() < 1e-6);
    }

    #[test]
    fn student_t_quantile_inverts_cdf() {
        for &p in &[0.025, 0.3, 0.5, 0.975] {
            let q: f64 = student_t_quantile(p, 7.5);
            assert!((student_t_cdf(q, 7.5) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn student_t_pdf_cauchy() {
        let d: f64 = student_t_pdf(0.0, 1.0);
        assert!((d - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn ln_choose_small() {
        let v: f64 = ln_choose(5, 2);
        assert!((v - 10f64.ln()).abs() < 1e-12);
        assert_eq!(ln_choose::<f64>(3, 4), f64::NEG_INFINITY);
    }
}
