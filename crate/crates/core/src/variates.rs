//! Random variates needed by the samplers: gamma (shape–rate), inverse
//! Gaussian, and standard normal vectors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval (0, 1).
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma variate with density ∝ x^(shape−1) e^(−rate·x).
///
/// Marsaglia–Tsang squeeze for shape ≥ 1. Below one the draw is boosted:
/// `G(a) = G(a + 1) · U^(1/a)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma needs shape > 0 and rate > 0, got ({shape}, {rate})"
        )));
    }
    Ok(gamma_unit(shape, rng) / rate)
}

fn gamma_unit<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let g = gamma_unit(shape + 1.0, rng);
        let u = open_unit(rng);
        return g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = std_normal(rng);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Inverse Gaussian variate with mean `mu` and shape `lam`, by the
/// Michael–Schucany–Haas transformation with one uniform for root selection.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mu: f64, lam: f64, rng: &mut R) -> Result<f64> {
    if !(mu > 0.0) || !(lam > 0.0 && lam.is_finite()) || mu.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "inverse Gaussian needs mu > 0 and lambda > 0, got ({mu}, {lam})"
        )));
    }
    let n = std_normal(rng);
    let y = n * n;
    let muy = mu * y;
    // The two roots multiply to mu²; take the larger one (no cancellation)
    // and divide.
    let disc = (4.0 * mu * lam * y + muy * muy).sqrt();
    let big = mu + mu * (muy + disc) / (2.0 * lam);
    let x = (mu / big) * mu;
    let x = if x > 0.0 { x } else { f64::MIN_POSITIVE };
    let u: f64 = rng.random();
    if u <= mu / (mu + x) {
        Ok(x)
    } else {
        Ok(mu * mu / x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gamma_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_gamma(3.0, 2.0, &mut rng).unwrap())
            .collect();
        let (m, v) = moments(&xs);
        assert!((m - 1.5).abs() < 0.01, "mean {m}");
        assert!((v - 0.75).abs() < 0.02, "var {v}");
    }

    #[test]
    fn gamma_small_shape_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..400_000)
            .map(|_| sample_gamma(0.3, 1.5, &mut rng).unwrap())
            .collect();
        let (m, v) = moments(&xs);
        assert!((m - 0.2).abs() < 0.003, "mean {m}");
        assert!((v - 0.3 / 2.25).abs() < 0.005, "var {v}");
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn gamma_column_update_parameters() {
        // n = 50, s22 = 1.2, lambda = 1 gives GA(26, 1.1).
        let (n, s22, lam) = (50.0, 1.2, 1.0);
        let (shape, rate) = (n / 2.0 + 1.0, (s22 + lam) / 2.0);
        assert_eq!(shape, 26.0);
        assert!((rate - 1.1_f64).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| sample_gamma(shape, rate, &mut rng).unwrap())
            .collect();
        let (m, _) = moments(&xs);
        assert!((m - 26.0 / 1.1).abs() < 0.05);
    }

    #[test]
    fn gamma_rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(1.0, -1.0, &mut rng).is_err());
        assert!(sample_gamma(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_inverse_gaussian(4.0, 4.0, &mut rng).unwrap())
            .collect();
        let (m, _) = moments(&xs);
        assert!((m - 4.0).abs() < 0.05, "mean {m}");

        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_inverse_gaussian(1.0, 2.0, &mut rng).unwrap())
            .collect();
        let (m, v) = moments(&xs);
        assert!((m - 1.0).abs() < 0.005, "mean {m}");
        assert!((v - 0.5).abs() < 0.01, "var {v}");
    }

    #[test]
    fn inverse_gaussian_latent_scale_parameters() {
        // lambda_ij = 2, theta_ij = 0.5 gives shape 4 and mean 4.
        let (lam_ij, theta_ij) = (2.0_f64, 0.5_f64);
        let shape = lam_ij * lam_ij;
        let mean = (lam_ij * lam_ij / (theta_ij * theta_ij)).sqrt();
        assert_eq!((shape, mean), (4.0, 4.0));
    }

    #[test]
    fn inverse_gaussian_huge_mean_stays_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = sample_inverse_gaussian(1e12, 1.0, &mut rng).unwrap();
            assert!(x.is_finite() && x > 0.0);
        }
        assert!(sample_inverse_gaussian(0.0, 1.0, &mut rng).is_err());
    }
}
