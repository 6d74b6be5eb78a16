//! Goodness-of-fit distances: Kolmogorov–Smirnov, Cramér–von Mises, and the
//! multivariate energy distance with a permutation null.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest sample kept per side when computing the energy statistic; keeps
/// every expectation at or below 10^4 x 10^4 pairs.
pub const ENERGY_SUBSAMPLE_CAP: usize = 10_000;

/// Per-side subsample used inside the permutation test, where the pooled
/// pairwise distance matrix is materialized once and re-read 200 times.
pub const PERMUTATION_SUBSAMPLE_CAP: usize = 2_500;

/// Number of permutations in the two-sample null; fixed for reproducibility.
pub const PERMUTATIONS: usize = 200;

/// Sup over sample points of |ECDF - cdf|. `samples` must be sorted
/// ascending; the ECDF value at the i-th order statistic is (i+1)/n.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "ks_distance: empty sample");
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// Cramér–von Mises statistic
/// `1/(12n) + sum_i (cdf(x_(i)) - (2i-1)/(2n))^2` on sorted samples.
pub fn cvm_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "cvm_distance: empty sample");
    let n = samples.len() as f64;
    let sum: f64 = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let diff = cdf(x) - (2.0 * i as f64 + 1.0) / (2.0 * n);
            diff * diff
        })
        .sum();
    1.0 / (12.0 * n) + sum
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Deterministically thins `rows` down to at most `cap` rows (evenly strided).
fn thin(rows: &[Vec<f64>], cap: usize) -> Vec<&[f64]> {
    if rows.len() <= cap {
        return rows.iter().map(|r| r.as_slice()).collect();
    }
    (0..cap)
        .map(|k| rows[k * rows.len() / cap].as_slice())
        .collect()
}

// V-statistic normalization throughout (all k^2 pairs, zero diagonal): the
// statistic is then nonnegative and exactly zero on identical samples.
fn energy_from_slices(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let cross: f64 = a
        .par_iter()
        .map(|x| b.iter().map(|y| euclidean(x, y)).sum::<f64>())
        .sum();
    let within = |s: &[&[f64]]| -> f64 {
        let total: f64 = s
            .par_iter()
            .enumerate()
            .map(|(i, x)| s[i + 1..].iter().map(|y| euclidean(x, y)).sum::<f64>())
            .sum();
        let k = s.len() as f64;
        2.0 * total / (k * k)
    };
    2.0 * cross / (n * m) - within(a) - within(b)
}

/// Energy statistic `2 E|A-B| - E|A-A'| - E|B-B'|` between two samples of
/// d-vectors. Inputs larger than [`ENERGY_SUBSAMPLE_CAP`] per side are
/// deterministically thinned.
pub fn energy_distance(sample_a: &[Vec<f64>], sample_b: &[Vec<f64>]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: sample_a.len().min(sample_b.len()),
        });
    }
    let dim = sample_a[0].len();
    if sample_a.iter().chain(sample_b).any(|r| r.len() != dim) {
        return Err(Error::param("energy_distance: mixed dimensions".to_string()));
    }
    let a = thin(sample_a, ENERGY_SUBSAMPLE_CAP);
    let b = thin(sample_b, ENERGY_SUBSAMPLE_CAP);
    Ok(energy_from_slices(&a, &b))
}

/// Outcome of the two-sample permutation energy test.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyTest {
    pub statistic: f64,
    pub null_q99: f64,
    pub pass: bool,
    pub n_a: usize,
    pub n_b: usize,
    pub permutations: usize,
}

/// Permutation test on the energy statistic: recomputes the statistic under
/// [`PERMUTATIONS`] pooled relabelings and compares the observed value with
/// the null's 99th percentile. Sides are thinned to
/// [`PERMUTATION_SUBSAMPLE_CAP`] rows so the pooled distance matrix fits in
/// memory and each permutation is a matrix re-read.
pub fn permutation_energy_test(
    sample_a: &[Vec<f64>],
    sample_b: &[Vec<f64>],
    seed: u64,
) -> Result<EnergyTest> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: sample_a.len().min(sample_b.len()),
        });
    }
    let a = thin(sample_a, PERMUTATION_SUBSAMPLE_CAP);
    let b = thin(sample_b, PERMUTATION_SUBSAMPLE_CAP);
    let n_a = a.len();
    let pooled: Vec<&[f64]> = a.iter().chain(b.iter()).copied().collect();
    let n = pooled.len();

    // pooled pairwise distances, row-major upper storage as full matrix
    let dist: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = pooled[i];
            let pooled = &pooled;
            (0..n).map(move |j| euclidean(pi, pooled[j]))
        })
        .collect();
    let at = |i: usize, j: usize| dist[i * n + j];

    // first n_a positions of a permutation are group A, the rest group B
    let stat_for = |idx: &[usize]| -> f64 {
        let (la, lb) = (n_a as f64, (n - n_a) as f64);
        let mut cross = 0.0;
        let mut within_a = 0.0;
        let mut within_b = 0.0;
        for pi in 0..n_a {
            let i = idx[pi];
            for pj in (pi + 1)..n_a {
                within_a += at(i, idx[pj]);
            }
            for pj in n_a..n {
                cross += at(i, idx[pj]);
            }
        }
        for pi in n_a..n {
            let i = idx[pi];
            for pj in (pi + 1)..n {
                within_b += at(i, idx[pj]);
            }
        }
        2.0 * cross / (la * lb) - 2.0 * within_a / (la * la) - 2.0 * within_b / (lb * lb)
    };

    let identity: Vec<usize> = (0..n).collect();
    let observed = stat_for(&identity);

    let mut null: Vec<f64> = (0..PERMUTATIONS)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            stat_for(&idx)
        })
        .collect();
    null.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    let q99 = null[(0.99 * PERMUTATIONS as f64).ceil() as usize - 1];

    Ok(EnergyTest {
        statistic: observed,
        null_q99: q99,
        pass: observed < q99,
        n_a,
        n_b: n - n_a,
        permutations: PERMUTATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::GasParams;
    use rand::Rng;

    #[test]
    fn ks_constant_sample_vs_uniform() {
        let samples = vec![0.5; 1000];
        let d = ks_distance(&samples, |y| y);
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_ecdf_against_itself_is_zero() {
        let samples: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let ecdf = samples.clone();
        let d = ks_distance(&samples, |x| {
            ecdf.iter().filter(|&&v| v <= x).count() as f64 / ecdf.len() as f64
        });
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_of_true_cdf_has_root_n_scale() {
        // samples drawn from the CDF itself: D < 1.95/sqrt(N) holds with
        // ~99.9% probability; run 20 seeded replicas at N = 10^4 and allow
        // none to fail (p_fail ~ 2%).
        let n = 10_000;
        let mut failures = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            if ks_distance(&xs, |y| y) >= 1.95 / (n as f64).sqrt() {
                failures += 1;
            }
        }
        assert!(failures == 0, "{failures}/20 replicas exceeded the KS band");
    }

    #[test]
    fn cvm_is_small_for_true_cdf_and_large_for_wrong_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let good = cvm_distance(&xs, |y| y);
        let bad = cvm_distance(&xs, |y: f64| y * y);
        assert!(good < 1.0, "W^2 on true cdf: {good}");
        assert!(bad > 100.0 * good, "wrong cdf should be far worse: {bad} vs {good}");
    }

    #[test]
    fn energy_identical_samples_is_zero() {
        let a: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 1.0]).collect();
        let e = energy_distance(&a, &a.clone()).unwrap();
        assert!(e.abs() < 1e-12, "{e}");
    }

    #[test]
    fn energy_is_symmetric_and_nonnegative_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random(), rng.random()]).collect();
        let b: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>() + 0.1, rng.random()])
            .collect();
        let e_ab = energy_distance(&a, &b).unwrap();
        let e_ba = energy_distance(&b, &a).unwrap();
        assert!((e_ab - e_ba).abs() < 1e-12);
        assert!(e_ab >= 0.0);
    }

    #[test]
    fn energy_rejects_empty_input() {
        let a: Vec<Vec<f64>> = vec![];
        let b = vec![vec![1.0]];
        assert!(energy_distance(&a, &b).is_err());
    }

    #[test]
    fn permutation_test_accepts_same_law_and_rejects_different_beta() {
        let same = GasParams::new(0.5, vec![0.5, 0.5]).unwrap();
        let other = GasParams::new(0.5, vec![0.9, 0.1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draw = |p: &GasParams, rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| p.sample(rng).into_ratios()).collect()
        };
        let a = draw(&same, &mut rng, 10_000);
        let b = draw(&same, &mut rng, 10_000);
        let c = draw(&other, &mut rng, 10_000);

        let null_case = permutation_energy_test(&a, &b, 11).unwrap();
        assert!(
            null_case.pass,
            "same-law case should pass: stat {} vs q99 {}",
            null_case.statistic, null_case.null_q99
        );

        let alt_case = permutation_energy_test(&a, &c, 12).unwrap();
        assert!(
            !alt_case.pass,
            "different-beta case should fail: stat {} vs q99 {}",
            alt_case.statistic, alt_case.null_q99
        );
    }
}
