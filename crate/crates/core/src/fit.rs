//! Statistical verdicts: parameter recovery for the occupation-ratio limit
//! laws, the Tauberian balance diagnostic, the double-Laplace asymptotic
//! identity, and strong distributional convergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainModel, ChainState, WanderingTable};
use crate::engine::EmpiricalLaw;
use crate::error::{Error, Result};
use crate::lamperti::lamperti_cdf;
use crate::stats::{cvm_distance, ks_distance, permutation_energy_test};

/// Candidate stability indices: 0.01, 0.02, ..., 0.99.
const ALPHA_GRID_STEP: f64 = 0.01;
/// A mean this close to 1 marks the trivial vertex law.
const TRIVIAL_MEAN_TOL: f64 = 1e-3;
/// Marginal variances below this mark the constant (alpha = 1) law.
const CONSTANT_VAR_TOL: f64 = 1e-6;
/// A row counts as an exact vertex when its largest component is this close
/// to one.
const VERTEX_ROW_TOL: f64 = 1e-9;
/// Marginals with weights this close to 0 or 1 are excluded from the CvM
/// objective (their two-ray law degenerates).
const MARGINAL_WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Degeneracy {
    /// Interior law: alpha fitted on the grid.
    None,
    /// Constant vector (alpha = 1).
    ConstantVector,
    /// Mixture of vertices (alpha = 0).
    VertexMixture,
    /// All mass on one vertex; alpha unidentifiable.
    TrivialVertex { ray: usize },
}

/// Recovered parameters of a generalized arcsine law.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub alpha_hat: f64,
    pub beta_hat: Vec<f64>,
    /// Summed CvM objective at the fitted alpha (0 for degenerate cases).
    pub objective: f64,
    pub degeneracy: Degeneracy,
    /// Per-marginal diagnostics at the fit; `None` for marginals excluded
    /// from the objective.
    pub marginal_ks: Vec<Option<f64>>,
    pub marginal_cvm: Vec<Option<f64>>,
    pub n_samples: usize,
    pub renormalized: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Divide each row by its sum before fitting (drops the junction
    /// deficit, which vanishes in the limit). On by default.
    pub renormalize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { renormalize: true }
    }
}

/// Statistic kinds a goodness-of-fit report can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatKind {
    Ks,
    Cvm,
    Energy,
    MaxDeviation,
    RatioError,
}

/// Uniform report shape: which statistic, its value, the sizes involved,
/// the threshold it was held to, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub statistic: StatKind,
    pub value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub threshold: f64,
    pub pass: bool,
    pub notes: String,
}

/// Fits `(alpha, beta)` to simplex-valued rows.
///
/// `beta_hat` is the componentwise sample mean (normalized to unit sum);
/// `alpha_hat` minimizes the summed per-marginal Cramér–von Mises distance
/// to the two-ray CDFs over the alpha grid, ties broken toward smaller
/// alpha. Degenerate laws are detected first: a near-unit mean reports the
/// trivial vertex, vanishing variances report the constant law (alpha = 1),
/// and all-vertex rows report the vertex mixture (alpha = 0).
pub fn fit_gas(rows: &[Vec<f64>], opts: FitOptions) -> Result<FitResult> {
    if rows.len() < 1000 {
        return Err(Error::InsufficientSamples { need: 1000, got: rows.len() });
    }
    let d = rows[0].len();
    if d < 2 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::param("rows must share a dimension of at least 2".to_string()));
    }
    let n = rows.len();

    let data: Vec<Vec<f64>> = if opts.renormalize {
        rows.iter()
            .map(|r| {
                let sum: f64 = r.iter().sum();
                if sum <= 0.0 {
                    return Err(Error::Numerical(
                        "zero-sum row cannot be renormalized".to_string(),
                    ));
                }
                Ok(r.iter().map(|&x| x / sum).collect())
            })
            .collect::<Result<_>>()?
    } else {
        rows.to_vec()
    };

    // componentwise means, normalized to sum exactly to 1
    let mut beta_hat = vec![0.0f64; d];
    for row in &data {
        for (b, &x) in beta_hat.iter_mut().zip(row) {
            *b += x;
        }
    }
    for b in &mut beta_hat {
        *b /= n as f64;
    }
    let total: f64 = beta_hat.iter().sum();
    for b in &mut beta_hat {
        *b /= total;
    }

    let base = |alpha_hat: f64, beta_hat: Vec<f64>, degeneracy: Degeneracy| FitResult {
        alpha_hat,
        beta_hat,
        objective: 0.0,
        degeneracy,
        marginal_ks: vec![None; d],
        marginal_cvm: vec![None; d],
        n_samples: n,
        renormalized: opts.renormalize,
    };

    // 1. trivial vertex: essentially all mass on one component
    if let Some(i) = beta_hat.iter().position(|&b| b > 1.0 - TRIVIAL_MEAN_TOL) {
        let mut vertex = vec![0.0; d];
        vertex[i] = 1.0;
        return Ok(base(1.0, vertex, Degeneracy::TrivialVertex { ray: i }));
    }

    // 2. constant vector: every marginal variance vanishes
    let variances: Vec<f64> = (0..d)
        .map(|j| {
            data.iter()
                .map(|r| (r[j] - beta_hat[j]) * (r[j] - beta_hat[j]))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    if variances.iter().all(|&v| v < CONSTANT_VAR_TOL) {
        return Ok(base(1.0, beta_hat, Degeneracy::ConstantVector));
    }

    // 3. vertex mixture: every row sits on a vertex
    let all_vertices = data
        .iter()
        .all(|r| r.iter().cloned().fold(0.0, f64::max) >= 1.0 - VERTEX_ROW_TOL);
    if all_vertices {
        return Ok(base(0.0, beta_hat, Degeneracy::VertexMixture));
    }

    // interior fit: alpha-grid scan of the summed marginal CvM distance
    let mut marginals: Vec<Option<Vec<f64>>> = Vec::with_capacity(d);
    for j in 0..d {
        if beta_hat[j] > MARGINAL_WEIGHT_FLOOR && beta_hat[j] < 1.0 - MARGINAL_WEIGHT_FLOOR {
            let mut col: Vec<f64> = data.iter().map(|r| r[j].clamp(0.0, 1.0)).collect();
            col.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            marginals.push(Some(col));
        } else {
            marginals.push(None);
        }
    }
    if marginals.iter().all(Option::is_none) {
        return Err(Error::Numerical(
            "no marginal has an interior weight; cannot fit alpha".to_string(),
        ));
    }

    let objective = |alpha: f64| -> f64 {
        marginals
            .iter()
            .enumerate()
            .filter_map(|(j, m)| m.as_ref().map(|col| (j, col)))
            .map(|(j, col)| {
                cvm_distance(col, |y| lamperti_cdf(alpha, beta_hat[j], y).unwrap())
            })
            .sum()
    };

    let grid: Vec<f64> = (1..=99).map(|k| k as f64 * ALPHA_GRID_STEP).collect();
    let objectives: Vec<f64> = grid.par_iter().map(|&a| objective(a)).collect();
    let (mut best_idx, mut best) = (0usize, f64::INFINITY);
    for (i, &o) in objectives.iter().enumerate() {
        if o < best {
            best = o;
            best_idx = i;
        }
    }
    let alpha_hat = grid[best_idx];

    let mut marginal_ks = vec![None; d];
    let mut marginal_cvm = vec![None; d];
    for (j, m) in marginals.iter().enumerate() {
        if let Some(col) = m {
            marginal_ks[j] =
                Some(ks_distance(col, |y| lamperti_cdf(alpha_hat, beta_hat[j], y).unwrap()));
            marginal_cvm[j] =
                Some(cvm_distance(col, |y| lamperti_cdf(alpha_hat, beta_hat[j], y).unwrap()));
        }
    }

    Ok(FitResult {
        alpha_hat,
        beta_hat,
        objective: best,
        degeneracy: Degeneracy::None,
        marginal_ks,
        marginal_cvm,
        n_samples: n,
        renormalized: opts.renormalize,
    })
}

/// Fit on the largest checkpoint of an empirical law.
pub fn fit_empirical_law(law: &EmpiricalLaw, opts: FitOptions) -> Result<FitResult> {
    fit_gas(&law.final_rows(opts.renormalize)?, FitOptions { renormalize: false, ..opts })
}

/// Tauberian balance: max over rays and grid points of
/// `|Q_i(s) / sum_j Q_j(s) - p_i|`. The table must come from a chain (the
/// target weights are its exit probabilities).
pub fn tauberian_check(
    model: &ChainModel,
    table: &WanderingTable,
    s_grid: &[f64],
    threshold: f64,
) -> Result<GofReport> {
    if s_grid.is_empty() {
        return Err(Error::param("empty s grid".to_string()));
    }
    let d = model.ray_count();
    if table.ray_count() != d {
        return Err(Error::param("table/model ray counts differ".to_string()));
    }
    // Tail brackets only need to be small against Q itself; 1e-3 absolute
    // keeps the deviation uncertainty far below any useful threshold.
    let tail_tol = 1e-3;
    let mut worst = 0.0f64;
    let mut notes = String::new();
    for &s in s_grid {
        let qs: Vec<f64> = (0..d)
            .map(|i| table.laplace_q(i, s, tail_tol).map(|e| e.value))
            .collect::<Result<_>>()?;
        let total: f64 = qs.iter().sum();
        let dev = (0..d)
            .map(|i| (qs[i] / total - model.exit_probs()[i]).abs())
            .fold(0.0, f64::max);
        notes.push_str(&format!("s={s:.3e}: max deviation {dev:.3e}\n"));
        worst = worst.max(dev);
    }
    Ok(GofReport {
        statistic: StatKind::MaxDeviation,
        value: worst,
        n_a: table.horizon(),
        n_b: s_grid.len(),
        threshold,
        pass: worst < threshold,
        notes,
    })
}

/// One Monte Carlo evaluation of the double-Laplace left side at scale `t`:
/// `(1/t) sum_{n=0}^{n_max} e^{-qn/t} E[exp(-lambda . S_n / t)]`, the
/// expectation over chains started at the origin. Returns (value, se).
fn double_laplace_lhs_mc(
    model: &ChainModel,
    q: f64,
    lambda: &[f64],
    t: f64,
    n_traj: usize,
    seed: u64,
) -> (f64, f64) {
    let n_max = (40.0 * t / q).ceil() as u64;
    let rho = (-q / t).exp();
    let decs: Vec<f64> = lambda.iter().map(|&l| (-l / t).exp()).collect();
    let sums: Vec<f64> = (0..n_traj)
        .into_par_iter()
        .map(|traj| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64);
            let mut state = ChainState::ORIGIN;
            let mut weight = 1.0f64; // rho^n
            let mut phi = 1.0f64; // exp(-lambda . S_n / t)
            let mut acc = 1.0f64; // n = 0 term
            for _ in 0..n_max {
                state = model.step(state, &mut rng);
                if !state.is_origin() {
                    phi *= decs[state.ray() - 1];
                }
                weight *= rho;
                acc += weight * phi;
            }
            acc / t
        })
        .collect();
    let mean = sums.iter().sum::<f64>() / n_traj as f64;
    let var = sums.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()
        / (n_traj as f64 - 1.0);
    (mean, (var / n_traj as f64).sqrt())
}

/// Double-Laplace asymptotic identity: compares the Monte Carlo left side
/// with `sum_i Q_i((q+lambda_i)/t) / sum_i (q+lambda_i) Q_i((q+lambda_i)/t)`
/// along `t_grid`. Passes when the ratio error decreases along the grid,
/// ends below `threshold`, and every right side respects the resolvent
/// bounds.
#[allow(clippy::too_many_arguments)]
pub fn double_laplace_asymptotic_check(
    model: &ChainModel,
    table: &WanderingTable,
    q: f64,
    lambda: &[f64],
    t_grid: &[f64],
    n_traj: usize,
    seed: u64,
    threshold: f64,
) -> Result<GofReport> {
    if lambda.len() != model.ray_count() {
        return Err(Error::param("lambda dimension mismatch".to_string()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("t grid must be increasing".to_string()));
    }
    let max_l = lambda.iter().cloned().fold(0.0f64, f64::max);
    let mut errors = Vec::with_capacity(t_grid.len());
    let mut notes = String::new();
    let mut bounds_ok = true;
    for (k, &t) in t_grid.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &l) in lambda.iter().enumerate() {
            let s = (q + l) / t;
            let eval = table.laplace_q(i, s, 1e-2)?;
            if eval.tail_bound > 1e-4 * eval.value {
                return Err(Error::HorizonTooSmall(format!(
                    "tail bound {:.2e} too large against Q = {:.4e} at s = {s:.2e}",
                    eval.tail_bound, eval.value
                )));
            }
            num += eval.value;
            den += (q + l) * eval.value;
        }
        let rhs = num / den;
        bounds_ok &= rhs <= 1.0 / q + 1e-12 && rhs >= 1.0 / (q + max_l) - 1e-12;

        let (lhs, se) = double_laplace_lhs_mc(model, q, lambda, t, n_traj, seed + k as u64);
        if se / rhs > 0.01 {
            return Err(Error::Numerical(format!(
                "Monte Carlo SE {se:.2e} too large at t = {t}; request more trajectories"
            )));
        }
        let err = (lhs / rhs - 1.0).abs();
        notes.push_str(&format!(
            "t={t}: lhs={lhs:.6} rhs={rhs:.6} |ratio-1|={err:.5} (se {se:.1e})\n"
        ));
        errors.push(err);
    }
    let decreasing = errors.windows(2).all(|w| w[1] <= w[0]);
    let final_err = *errors.last().unwrap();
    Ok(GofReport {
        statistic: StatKind::RatioError,
        value: final_err,
        n_a: n_traj,
        n_b: t_grid.len(),
        threshold,
        pass: decreasing && final_err < threshold && bounds_ok,
        notes,
    })
}

/// Strong distributional convergence proxy: the final-checkpoint laws from
/// two initial measures must be indistinguishable under the permutation
/// energy test.
pub fn strong_convergence_check(
    law_a: &EmpiricalLaw,
    law_b: &EmpiricalLaw,
    seed: u64,
) -> Result<GofReport> {
    if law_a.dim() != law_b.dim() || law_a.checkpoints() != law_b.checkpoints() {
        return Err(Error::param(
            "laws must share the model dimension and checkpoints".to_string(),
        ));
    }
    let rows_a = law_a.final_rows(false)?;
    let rows_b = law_b.final_rows(false)?;
    let test = permutation_energy_test(&rows_a, &rows_b, seed)?;
    Ok(GofReport {
        statistic: StatKind::Energy,
        value: test.statistic,
        n_a: test.n_a,
        n_b: test.n_b,
        threshold: test.null_q99,
        pass: test.pass,
        notes: format!(
            "energy statistic {:.6e} vs permutation-null q99 {:.6e} ({} permutations)",
            test.statistic, test.null_q99, test.permutations
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::GasParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw_rows(p: &GasParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| p.sample(&mut rng).into_ratios()).collect()
    }

    #[test]
    fn requires_enough_samples() {
        let rows = vec![vec![0.5, 0.5]; 10];
        assert!(matches!(
            fit_gas(&rows, FitOptions::default()),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn recovers_interior_parameters() {
        let p = GasParams::new(0.5, vec![0.2, 0.3, 0.5]).unwrap();
        let rows = draw_rows(&p, 100_000, 21);
        let fit = fit_gas(&rows, FitOptions::default()).unwrap();
        assert_eq!(fit.degeneracy, Degeneracy::None);
        assert!(
            (0.45..=0.55).contains(&fit.alpha_hat),
            "alpha_hat {}",
            fit.alpha_hat
        );
        for (b, want) in fit.beta_hat.iter().zip([0.2, 0.3, 0.5]) {
            assert!((b - want).abs() < 0.01, "beta {b} vs {want}");
        }
        let sum: f64 = fit.beta_hat.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn detects_the_constant_law() {
        let rows = vec![vec![0.2, 0.8]; 2000];
        let fit = fit_gas(&rows, FitOptions::default()).unwrap();
        assert_eq!(fit.degeneracy, Degeneracy::ConstantVector);
        assert_eq!(fit.alpha_hat, 1.0);
        assert!((fit.beta_hat[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn detects_the_vertex_mixture() {
        let p = GasParams::new(0.0, vec![0.7, 0.3]).unwrap();
        let rows = draw_rows(&p, 20_000, 22);
        let fit = fit_gas(&rows, FitOptions::default()).unwrap();
        assert_eq!(fit.degeneracy, Degeneracy::VertexMixture);
        assert_eq!(fit.alpha_hat, 0.0);
        assert!((fit.beta_hat[0] - 0.7).abs() < 0.01);
    }

    #[test]
    fn detects_the_trivial_vertex() {
        let rows = vec![vec![0.0, 1.0, 0.0]; 2000];
        let fit = fit_gas(&rows, FitOptions::default()).unwrap();
        assert_eq!(fit.degeneracy, Degeneracy::TrivialVertex { ray: 1 });
        assert_eq!(fit.beta_hat, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn ties_break_toward_smaller_alpha() {
        // a flat objective cannot arise from real data, but the scan must
        // pick the first minimizer; feed the degenerate screen bypass with
        // data whose objective is minimized on a plateau by construction is
        // impractical, so check the documented argmin rule on the raw scan
        // machinery instead: identical objectives pick the smaller alpha.
        let grid: Vec<f64> = (1..=99).map(|k| k as f64 * 0.01).collect();
        let objectives = vec![1.0; grid.len()];
        let (mut best_idx, mut best) = (0usize, f64::INFINITY);
        for (i, &o) in objectives.iter().enumerate() {
            if o < best {
                best = o;
                best_idx = i;
            }
        }
        assert_eq!(grid[best_idx], 0.01);
    }

    #[test]
    fn tauberian_balance_is_exact_for_symmetric_rays() {
        let model = ChainModel::new(vec![0.5, 0.5]).unwrap();
        let table = model.exact_survival(2_000).unwrap();
        let report =
            tauberian_check(&model, &table, &[0.1, 0.05, 0.02], 0.01).unwrap();
        assert!(report.pass);
        assert!(report.value < 1e-12, "deviation {}", report.value);
    }

    #[test]
    fn tauberian_deviation_shrinks_for_a_skewed_synthetic_table() {
        // rays with genuinely different finite-n survival profiles but the
        // same asymptotic balance: deviation must decrease along s -> 0.
        let n = 20_000usize;
        let s1: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-0.5)).collect();
        let s2: Vec<f64> = (1..=n)
            .map(|k| (k as f64).powf(-0.5) * (1.0 + (k as f64).powf(-0.25)))
            .map(|v| v.min(1.0))
            .collect();
        let table = WanderingTable::from_survival(vec![s1, s2]).unwrap();
        // synthetic tables have no certified tails; evaluate the truncated
        // transforms directly
        let q_of = |seq: &dyn Fn(usize) -> f64, s: f64| -> f64 {
            (1..=n).map(|k| (-(k as f64) * s).exp() * seq(k)).sum()
        };
        let mut prev = f64::INFINITY;
        for &s in &[1e-1, 1e-2, 1e-3] {
            let q1 = q_of(&|k| table.survival(0, k), s);
            let q2 = q_of(&|k| table.survival(1, k), s);
            let dev = (q1 / (q1 + q2) - 0.5).abs();
            assert!(dev < prev, "deviation not decreasing at s={s}");
            prev = dev;
        }
    }

    #[test]
    fn strong_convergence_requires_matching_shapes() {
        use crate::engine::{run_ensemble, EnsembleSpec, InitialMeasure, Model};
        let spec = EnsembleSpec {
            model: Model::Chain(ChainModel::new(vec![0.5, 0.5]).unwrap()),
            measure: InitialMeasure::ChainOrigin,
            checkpoints: vec![100],
            n_traj: 10,
            seed: 1,
        };
        let a = run_ensemble(&spec).unwrap();
        let b = run_ensemble(&EnsembleSpec { checkpoints: vec![200], ..spec.clone() }).unwrap();
        assert!(strong_convergence_check(&a, &b, 3).is_err());
    }
}
