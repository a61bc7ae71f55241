//! Laplace noise, its gamma-difference shares, and the closed-form error
//! bounds of distributed perturbation.
//!
//! A Laplace variable of scale `λ` is the difference of two exponentials of
//! mean `λ`, and an exponential is the sum of `n` i.i.d. gamma variables of
//! shape `1/n` and scale `λ`. Each of `n` meters can therefore add
//! `G1 - G2` with `G1, G2 ~ Gamma(1/n, λ)` to its reading and the cluster sum
//! carries exactly `Laplace(λ)` noise.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Result};
use crate::math::{abs, exp, ln_beta, log, sqrt};

/// Scale `λ` of a Laplace distribution, in the unit of the measurements.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(LaplaceScale(lambda))
        } else {
            Err(invalid("lambda", "must be positive and finite"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Multiplies the scale by a positive factor.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        LaplaceScale::new(self.0 * factor)
    }
}

/// Parameters of one meter's noise share: the Laplace noise is split into
/// `shares` pieces (`N - M` in a cluster tolerating `M` failures).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaShareParams {
    shares: u32,
    lambda: LaplaceScale,
}

impl GammaShareParams {
    pub fn new(shares: u32, lambda: LaplaceScale) -> Result<Self> {
        if shares == 0 {
            return Err(invalid("shares", "must be at least 1"));
        }
        Ok(GammaShareParams { shares, lambda })
    }

    pub fn shares(&self) -> u32 {
        self.shares
    }

    pub fn lambda(&self) -> LaplaceScale {
        self.lambda
    }

    /// Gamma shape `1/n`.
    pub fn shape(&self) -> f64 {
        1.0 / self.shares as f64
    }
}

/// Reusable sampler for one parameter set.
///
/// Gamma variates come from `rand_distr`'s Marsaglia–Tsang sampler, which
/// boosts fractional shapes through `Gamma(k + 1) · U^{1/k}`.
#[derive(Debug, Clone, Copy)]
pub struct ShareSampler {
    params: GammaShareParams,
    gamma: Gamma<f64>,
}

impl ShareSampler {
    pub fn new(params: GammaShareParams) -> Self {
        let gamma = Gamma::new(params.shape(), params.lambda.get())
            .expect("validated shape and scale are positive");
        ShareSampler { params, gamma }
    }

    pub fn params(&self) -> GammaShareParams {
        self.params
    }

    /// One `Gamma(1/n, λ)` draw.
    pub fn gamma<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng)
    }

    /// One noise share `G1 - G2`.
    pub fn share<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g1 = self.gamma(rng);
        let g2 = self.gamma(rng);
        g1 - g2
    }
}

pub fn sample_gamma_share<R: Rng + ?Sized>(params: GammaShareParams, rng: &mut R) -> f64 {
    ShareSampler::new(params).gamma(rng)
}

pub fn sample_noise_share<R: Rng + ?Sized>(params: GammaShareParams, rng: &mut R) -> f64 {
    ShareSampler::new(params).share(rng)
}

/// Uniform draw on the open interval `(0, 1)`.
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Reference Laplace noise by CDF inversion.
pub fn sample_laplace<R: Rng + ?Sized>(scale: LaplaceScale, rng: &mut R) -> f64 {
    let u = open01(rng);
    let lambda = scale.get();
    if u < 0.5 {
        lambda * log(2.0 * u)
    } else {
        -lambda * log(2.0 * (1.0 - u))
    }
}

/// `(1 / 2λ) · e^{-|x|/λ}`.
pub fn laplace_density(x: f64, scale: LaplaceScale) -> f64 {
    let lambda = scale.get();
    exp(-abs(x) / lambda) / (2.0 * lambda)
}

pub fn laplace_log_density(x: f64, scale: LaplaceScale) -> f64 {
    let lambda = scale.get();
    -abs(x) / lambda - log(2.0 * lambda)
}

pub fn laplace_cdf(x: f64, scale: LaplaceScale) -> f64 {
    let lambda = scale.get();
    if x < 0.0 {
        0.5 * exp(x / lambda)
    } else {
        1.0 - 0.5 * exp(-x / lambda)
    }
}

/// Laplace scale `S(f)/ε` giving `ε`-differential privacy for a query of
/// global sensitivity `S(f)`.
pub fn calibrate_lambda(sensitivity: f64, epsilon: f64) -> Result<LaplaceScale> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(invalid("sensitivity", "must be positive and finite"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    LaplaceScale::new(sensitivity / epsilon)
}

/// `B(x, y) = Γ(x)Γ(y)/Γ(x+y)`, evaluated through log-gamma.
pub fn beta_function(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid("x", "must be positive"));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(invalid("y", "must be positive"));
    }
    Ok(exp(ln_beta(x, y)))
}

/// First two moments of `|G1 - G2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsMoments {
    pub mean_abs: f64,
    pub variance_abs: f64,
}

/// Moments of `|G1 - G2|` for i.i.d. `G1, G2 ~ Gamma(shape, λ)`:
/// `E = 2λ / B(1/2, shape)` and `Var = (2·shape - 4/B(1/2, shape)²) λ²`.
///
/// `shape` may be any positive real; a single share uses `1/n` and the sum of
/// all `N` shares of a cluster tolerating `αN` failures uses `1/(1-α)`.
pub fn abs_moments_for_shape(shape: f64, lambda: LaplaceScale) -> Result<AbsMoments> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(invalid("shape", "must be positive"));
    }
    let l = lambda.get();
    let b = exp(ln_beta(0.5, shape));
    let mean_abs = 2.0 * l / b;
    let variance_abs = ((2.0 * shape - 4.0 / (b * b)) * l * l).max(0.0);
    Ok(AbsMoments {
        mean_abs,
        variance_abs,
    })
}

/// Moments of `|G1(n, λ) - G2(n, λ)|`, i.e. of the absolute value of one
/// share when the noise is split `n` ways.
pub fn gamma_diff_moments(n: u32, lambda: LaplaceScale) -> Result<AbsMoments> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    abs_moments_for_shape(1.0 / n as f64, lambda)
}

/// Expected relative error `μ(t)` and its standard deviation `σ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityBound {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
}

/// Error of the released aggregate when all `N` meters add shares calibrated
/// for `N - αN` survivors. The bounds hold with equality when nobody fails.
pub fn utility_bounds(alpha: f64, lambda: LaplaceScale, aggregate: f64) -> Result<UtilityBound> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    if !(aggregate >= 0.0 && aggregate.is_finite()) {
        return Err(invalid("aggregate", "must be nonnegative"));
    }
    let m = abs_moments_for_shape(1.0 / (1.0 - alpha), lambda)?;
    let denom = aggregate + 1.0;
    Ok(UtilityBound {
        mu: m.mean_abs / denom,
        sigma: sqrt(m.variance_abs) / denom,
        alpha,
    })
}

/// Error when every meter adds a full `Laplace(λ)` to its own reading, using
/// the approximation `E|Σ L(λ)| = N·λ`.
pub fn decentralized_error(n: u32, lambda: LaplaceScale, aggregate: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(aggregate >= 0.0 && aggregate.is_finite()) {
        return Err(invalid("aggregate", "must be nonnegative"));
    }
    Ok(n as f64 * lambda.get() / (aggregate + 1.0))
}

/// Largest posterior probability with which an observer can decide a binary
/// fact protected at level `ε`: `1 / (1 + e^{-ε})`.
pub fn ml_success_bound(epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(invalid("epsilon", "must be nonnegative"));
    }
    Ok(1.0 / (1.0 + exp(-epsilon)))
}
