//! Null-recurrent Markov chain on a star of `d` rays glued at an origin,
//! with exact wandering-rate analytics.
//!
//! From the origin the chain enters ray `i` at height 1 with probability
//! `p_i`; on a ray it performs the simple symmetric walk on heights, hitting
//! height 0 meaning the origin. The chain cannot change rays without
//! visiting the origin.
//!
//! [`ChainModel::exact_survival`] computes, by exact dynamic programming,
//! the excursion-survival probabilities
//! `s_i(n) = P_0[Z_1, ..., Z_n in ray i]`, the first-return masses
//! `b_i(k)` and the wandering rates `w_i(n)` (normalization `mu(Y) = 1`),
//! linked by `w_i(n+1) - w_i(n) = s_i(n) = sum_{k>n} b_i(k)`. Their
//! discrete Laplace transforms `Q_i(s) = sum_n e^{-ns} s_i(n)` come with a
//! certified truncation bracket.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

const P_SUM_TOL: f64 = 1e-12;
const MAX_HORIZON: usize = 5_000_000;

/// Star chain: `d >= 2` rays and origin-exit probabilities `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    p: Vec<f64>,
}

/// Position: `ray = 0` is the origin (`height = 0`); otherwise `ray` is the
/// 1-based ray index and `height >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    ray: usize,
    height: u64,
}

impl ChainState {
    pub const ORIGIN: ChainState = ChainState { ray: 0, height: 0 };

    pub fn on_ray(ray: usize, height: u64) -> Result<Self> {
        if ray == 0 || height == 0 {
            return Err(Error::param(
                "on-ray state needs ray >= 1 and height >= 1".to_string(),
            ));
        }
        Ok(ChainState { ray, height })
    }

    pub fn is_origin(&self) -> bool {
        self.ray == 0
    }

    /// 1-based ray index; 0 for the origin.
    pub fn ray(&self) -> usize {
        self.ray
    }

    pub fn height(&self) -> u64 {
        self.height
    }
}

impl ChainModel {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::param(format!("need at least 2 rays, got {}", p.len())));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x) || x.is_nan()) {
            return Err(Error::param("exit probabilities must lie in [0,1]".to_string()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > P_SUM_TOL {
            return Err(Error::param(format!(
                "exit probabilities must sum to 1 within {P_SUM_TOL:e}, got {sum}"
            )));
        }
        if p.iter().filter(|&&x| x > 0.0).count() < 2 {
            return Err(Error::param(
                "at least two rays need positive exit probability".to_string(),
            ));
        }
        Ok(ChainModel { p })
    }

    pub fn ray_count(&self) -> usize {
        self.p.len()
    }

    pub fn exit_probs(&self) -> &[f64] {
        &self.p
    }

    /// One transition. Origin: enter ray `i` at height 1 with probability
    /// `p_i`. On a ray: height +/- 1 with probability 1/2 each.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, state: ChainState, rng: &mut R) -> ChainState {
        if state.ray == 0 {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &pi) in self.p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    return ChainState { ray: i + 1, height: 1 };
                }
            }
            return ChainState { ray: self.p.len(), height: 1 };
        }
        if rng.random::<u32>() & 1 == 0 {
            ChainState { ray: state.ray, height: state.height + 1 }
        } else if state.height == 1 {
            ChainState::ORIGIN
        } else {
            ChainState { ray: state.ray, height: state.height - 1 }
        }
    }

    /// Exact survival/first-return/wandering table up to horizon `n`.
    ///
    /// The absorbed-walk distribution DP runs over heights `<= n + 1`
    /// (exact for this horizon) and only touches the reachable parity, so
    /// the cost is `O(n^2 / 4)` cell updates with per-value rounding error
    /// of order `n * 2^-52`.
    pub fn exact_survival(&self, horizon: usize) -> Result<WanderingTable> {
        if horizon < 1 {
            return Err(Error::param("horizon must be at least 1".to_string()));
        }
        if horizon > MAX_HORIZON {
            return Err(Error::TableTooLarge(format!(
                "horizon {horizon} exceeds the cap {MAX_HORIZON}"
            )));
        }

        // mass[h] = P[walk from height 1 alive and at height h], heights of
        // one parity valid per step; writes land on the opposite parity of
        // the reads, so in-place updates never clobber a live entry.
        let mut mass = vec![0.0f64; horizon + 3];
        mass[1] = 1.0;
        let mut alive = 1.0f64;
        // surv[m] = P[walk from 1 stays >= 1 for m steps]
        let mut surv = vec![0.0f64; horizon];
        surv[0] = 1.0;
        for m in 1..horizon {
            // the walk sits on heights of parity (m+1) % 2 after m steps
            let killed = if m % 2 == 1 { 0.5 * mass[1] } else { 0.0 };
            let lo = if m % 2 == 0 { 1 } else { 2 };
            let hi = m + 1; // maximum reachable height after m steps
            let mut h = lo;
            while h <= hi {
                mass[h] = 0.5 * (mass[h - 1] + mass[h + 1]);
                h += 2;
            }
            alive -= killed;
            surv[m] = alive;
        }

        let s: Vec<Vec<f64>> = self
            .p
            .iter()
            .map(|&pi| surv.iter().map(|&v| pi * v).collect())
            .collect();
        WanderingTable::build(s, Some(self.p.clone()))
    }
}

/// Exact sequences `s_i(n)`, `b_i(k)`, `w_i(n)` for `n <= horizon`, plus
/// certified Laplace evaluations.
#[derive(Debug, Clone)]
pub struct WanderingTable {
    horizon: usize,
    /// s[i][n-1] = s_i(n) for n = 1..=horizon
    s: Vec<Vec<f64>>,
    /// w[i][n] = w_i(n) for n = 0..=horizon (w_i(0) = w_i(1) = 0)
    w: Vec<Vec<f64>>,
    /// exit probabilities when built from a chain; drives the certified
    /// tail bound. Synthetic tables carry no certification.
    p: Option<Vec<f64>>,
}

/// Truncated Laplace evaluation with its certified tail bracket: the exact
/// value lies in `[value, value + tail_bound]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceEval {
    pub value: f64,
    pub tail_bound: f64,
}

/// Least-squares log-log fit of the total wandering rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegVarFit {
    /// Slope of log w(n) against log n, i.e. the regular-variation index
    /// `1 - alpha`.
    pub slope: f64,
    /// `1 - slope`.
    pub alpha_hat: f64,
}

/// Upper bound on `surv(m) = P[SRW from 1 stays >= 1 for m steps]`,
/// `sqrt(2/(pi m)) (1 + 1/(4m))` for `m >= 1`; validated against the exact
/// DP in tests.
fn srw_survival_bound(m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mf = m as f64;
    ((2.0 / (std::f64::consts::PI * mf)).sqrt() * (1.0 + 0.25 / mf)).min(1.0)
}

impl WanderingTable {
    fn build(s: Vec<Vec<f64>>, p: Option<Vec<f64>>) -> Result<Self> {
        if s.is_empty() || s[0].is_empty() {
            return Err(Error::param("survival table needs at least one sequence".to_string()));
        }
        let horizon = s[0].len();
        for (i, seq) in s.iter().enumerate() {
            if seq.len() != horizon {
                return Err(Error::param("survival sequences must share a length".to_string()));
            }
            if seq.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::param(format!("sequence {i} leaves [0,1]")));
            }
            if seq.windows(2).any(|w| w[1] > w[0] + 1e-15) {
                return Err(Error::param(format!("sequence {i} is not nonincreasing")));
            }
        }
        let w = s
            .iter()
            .map(|seq| {
                let mut acc = Vec::with_capacity(horizon + 1);
                acc.push(0.0);
                acc.push(0.0);
                let mut run = 0.0;
                for &v in &seq[..horizon - 1] {
                    run += v;
                    acc.push(run);
                }
                acc
            })
            .collect();
        Ok(WanderingTable { horizon, s, w, p })
    }

    /// Synthetic table from raw survival sequences (diagnostic fixtures;
    /// no certified Laplace tails).
    pub fn from_survival(sequences: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(sequences, None)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn ray_count(&self) -> usize {
        self.s.len()
    }

    /// `s_i(n) = P_0[Z_1,...,Z_n in ray i]`, `1 <= n <= horizon` (0-based ray).
    pub fn survival(&self, ray: usize, n: usize) -> f64 {
        assert!((1..=self.horizon).contains(&n), "n out of table range");
        self.s[ray][n - 1]
    }

    /// First-return mass `b_i(k) = p_i P[ray walk first returns at step k]`,
    /// computed from the survival differences; zero for `k < 2`.
    pub fn first_return(&self, ray: usize, k: usize) -> f64 {
        assert!((1..=self.horizon).contains(&k), "k out of table range");
        if k < 2 {
            0.0
        } else {
            self.s[ray][k - 2] - self.s[ray][k - 1]
        }
    }

    /// Wandering rate of the junction starting from ray `i`,
    /// `w_i(n) = sum_{k=1}^{n-1} s_i(k)`, for `0 <= n <= horizon`.
    pub fn wandering(&self, ray: usize, n: usize) -> f64 {
        assert!(n <= self.horizon, "n out of table range");
        self.w[ray][n]
    }

    /// Total wandering rate `w(n) = mu(Y) + sum_i w_i(n)` with `mu(Y) = 1`,
    /// for `1 <= n <= horizon`.
    pub fn wandering_total(&self, n: usize) -> f64 {
        assert!((1..=self.horizon).contains(&n), "n out of table range");
        1.0 + self.s.iter().enumerate().map(|(i, _)| self.w[i][n]).sum::<f64>()
    }

    /// Certified upper bound on the truncated part `sum_{n>horizon} e^{-ns} s_i(n)`.
    fn tail_bound(&self, ray: usize, s: f64) -> Option<f64> {
        let p = self.p.as_ref()?;
        let n = self.horizon;
        // s_i(n) = p_i surv(n-1) <= p_i srw_survival_bound(n-1), decreasing,
        // so the tail is bounded by its first coefficient times the
        // geometric remainder.
        let coeff = p[ray] * srw_survival_bound(n);
        Some(coeff * (-(n as f64 + 1.0) * s).exp() / (1.0 - (-s).exp()))
    }

    /// Truncated `Q_i(s) = sum_{n>=1} e^{-ns} s_i(n)` with a certified tail
    /// bracket. Errors when the bracket exceeds `tail_tol` (ask for a larger
    /// horizon) or when the table has no certification (synthetic tables).
    pub fn laplace_q(&self, ray: usize, s: f64, tail_tol: f64) -> Result<LaplaceEval> {
        if !(s > 0.0) {
            return Err(Error::param(format!("Laplace variable must be positive, got {s}")));
        }
        let tail = self.tail_bound(ray, s).ok_or_else(|| {
            Error::HorizonTooSmall("no certified tail for a synthetic table".to_string())
        })?;
        if tail > tail_tol {
            return Err(Error::HorizonTooSmall(format!(
                "tail bound {tail:.3e} exceeds tolerance {tail_tol:.3e} at s={s}; increase the horizon"
            )));
        }
        let mut value = 0.0;
        for n in 1..=self.horizon {
            let term = (-(n as f64) * s).exp() * self.s[ray][n - 1];
            value += term;
            if term < 1e-300 {
                break;
            }
        }
        Ok(LaplaceEval { value, tail_bound: tail })
    }

    /// Log-log least-squares slope of the total wandering rate over
    /// `n in [horizon/10, horizon]`; `alpha_hat = 1 - slope`.
    pub fn regvar_index(&self) -> Result<RegVarFit> {
        if self.horizon < 1000 {
            return Err(Error::param(format!(
                "regular-variation fit needs horizon >= 1000, got {}",
                self.horizon
            )));
        }
        let lo = self.horizon / 10;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut count = 0.0;
        for n in lo..=self.horizon {
            let w = self.wandering_total(n);
            if !(w > 0.0) {
                return Err(Error::Numerical("degenerate fit: nonpositive wandering rate".to_string()));
            }
            let x = (n as f64).ln();
            let y = w.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1.0;
        }
        let denom = count * sxx - sx * sx;
        if denom <= 0.0 {
            return Err(Error::Numerical("degenerate fit: no spread in log n".to_string()));
        }
        let slope = (count * sxy - sx * sy) / denom;
        Ok(RegVarFit { slope, alpha_hat: 1.0 - slope })
    }

    /// CSV export: columns `n, s_1..s_d, w_1..w_d, b_1..b_d`.
    pub fn to_csv(&self) -> String {
        let d = self.ray_count();
        let mut out = String::new();
        out.push('n');
        for i in 1..=d {
            let _ = write!(out, ",s_{i}");
        }
        for i in 1..=d {
            let _ = write!(out, ",w_{i}");
        }
        for i in 1..=d {
            let _ = write!(out, ",b_{i}");
        }
        out.push('\n');
        for n in 1..=self.horizon {
            let _ = write!(out, "{n}");
            for i in 0..d {
                let _ = write!(out, ",{}", self.survival(i, n));
            }
            for i in 0..d {
                let _ = write!(out, ",{}", self.wandering(i, n));
            }
            for i in 0..d {
                let _ = write!(out, ",{}", self.first_return(i, n));
            }
            out.push('\n');
        }
        out
    }
}
