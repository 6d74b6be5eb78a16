//! Multidimensional generalized arcsine distributions on the simplex.
//!
//! A pair `(alpha, beta)` with `alpha` in `[0, 1]` and `beta` a probability
//! vector of length `d >= 2` indexes the law of the occupation-ratio vector:
//!
//! * `0 < alpha < 1` — the normalized vector of independent one-sided
//!   alpha-stable variables with scales `beta_i`;
//! * `alpha = 1` — the constant `beta`;
//! * `alpha = 0` — the vertex `e^(i)` with probability `beta_i`.
//!
//! The law is pinned down by the double Laplace identity
//! `int_0^inf e^{-qu} E[e^{-u lambda . zeta}] du
//!  = sum_i beta_i (q+lambda_i)^(alpha-1) / sum_i beta_i (q+lambda_i)^alpha`,
//! implemented in closed form by [`GasParams::double_laplace`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stable::sample_one_sided_stable;

const BETA_SUM_TOL: f64 = 1e-12;

/// Tolerance on simplex sums of produced samples. The ratio construction is
/// exact up to floating-point rounding; this only documents rounding.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Index pair `(alpha, beta)` of a generalized arcsine law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    alpha: f64,
    beta: Vec<f64>,
}

impl GasParams {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
        }
        if beta.len() < 2 {
            return Err(Error::param(format!(
                "beta needs at least two components, got {}",
                beta.len()
            )));
        }
        if beta.iter().any(|&b| !(0.0..=1.0).contains(&b) || b.is_nan()) {
            return Err(Error::param("every beta component must lie in [0,1]".to_string()));
        }
        let sum: f64 = beta.iter().sum();
        if (sum - 1.0).abs() > BETA_SUM_TOL {
            return Err(Error::param(format!(
                "beta must sum to 1 within {BETA_SUM_TOL:e}, got sum {sum}"
            )));
        }
        Ok(GasParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// True when `beta = e^(i)` for some `i`; then the law is the point mass
    /// at that vertex whatever `alpha` is.
    pub fn is_trivial(&self) -> bool {
        self.trivial_vertex().is_some()
    }

    /// The vertex index when the law is trivial.
    pub fn trivial_vertex(&self) -> Option<usize> {
        self.beta.iter().position(|&b| (b - 1.0).abs() <= BETA_SUM_TOL)
    }

    /// Mean vector: `E[zeta_i] = beta_i` for every `alpha` (differentiate the
    /// double Laplace identity in `lambda_i` at `lambda = 0`).
    pub fn mean(&self) -> Vec<f64> {
        self.beta.clone()
    }

    /// One draw of the occupation-ratio vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimplexSample {
        let d = self.dim();
        if let Some(i) = self.trivial_vertex() {
            return SimplexSample::vertex(d, i);
        }
        if self.alpha == 1.0 {
            return SimplexSample { ratios: self.beta.clone() };
        }
        if self.alpha == 0.0 {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &b) in self.beta.iter().enumerate() {
                acc += b;
                if u < acc {
                    return SimplexSample::vertex(d, i);
                }
            }
            return SimplexSample::vertex(d, d - 1);
        }

        // 0 < alpha < 1: ratio of independent one-sided stables; a zero
        // weight forces xi_i = 0 a.s. (its Laplace transform is 1).
        let xi: Vec<f64> = self
            .beta
            .iter()
            .map(|&b| {
                if b == 0.0 {
                    0.0
                } else {
                    sample_one_sided_stable(self.alpha, b, rng)
                        .expect("validated parameters")
                }
            })
            .collect();
        let total: f64 = xi.iter().sum();
        SimplexSample {
            ratios: xi.iter().map(|&x| x / total).collect(),
        }
    }

    /// Parameters `(alpha, beta_i)` of the exact one-dimensional marginal:
    /// `zeta_i` has the two-ray law with weights `(beta_i, 1 - beta_i)`,
    /// because `sum_{j != i} xi_j` is again one-sided stable with scale
    /// `1 - beta_i`.
    pub fn marginal(&self, i: usize) -> Result<(f64, f64)> {
        if i >= self.dim() {
            return Err(Error::param(format!("marginal index {i} out of range")));
        }
        let b = self.beta[i];
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(b > 0.0 && b < 1.0) {
            return Err(Error::UnsupportedMarginal(format!(
                "marginal law requires alpha in (0,1) and beta_i in (0,1); got alpha={}, beta_{}={}",
                self.alpha, i, b
            )));
        }
        Ok((self.alpha, b))
    }

    /// Closed-form double Laplace transform
    /// `sum_i beta_i (q+lambda_i)^(alpha-1) / sum_i beta_i (q+lambda_i)^alpha`.
    ///
    /// The value always lies in `[(q + max_i lambda_i)^(-1), q^(-1)]`.
    pub fn double_laplace(&self, query: &LaplaceQuery) -> Result<f64> {
        if query.lambda.len() != self.dim() {
            return Err(Error::param(format!(
                "lambda has dimension {}, expected {}",
                query.lambda.len(),
                self.dim()
            )));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (&b, &l) in self.beta.iter().zip(&query.lambda) {
            let base = query.q + l;
            num += b * base.powf(self.alpha - 1.0);
            den += b * base.powf(self.alpha);
        }
        Ok(num / den)
    }
}

/// One occupation-ratio vector in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexSample {
    ratios: Vec<f64>,
}

impl SimplexSample {
    fn vertex(d: usize, i: usize) -> Self {
        let mut ratios = vec![0.0; d];
        ratios[i] = 1.0;
        SimplexSample { ratios }
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn into_ratios(self) -> Vec<f64> {
        self.ratios
    }
}

/// Query point of the double Laplace transform: outer variable `q > 0`
/// (1/time units) and inner vector `lambda >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceQuery {
    q: f64,
    lambda: Vec<f64>,
}

impl LaplaceQuery {
    pub fn new(q: f64, lambda: Vec<f64>) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::param(format!("q must be positive, got {q}")));
        }
        if lambda.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::param("every lambda component must be >= 0".to_string()));
        }
        Ok(LaplaceQuery { q, lambda })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
}
