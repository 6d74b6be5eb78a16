//! Browser bindings: three interactive views on the occupation-time theory.
//!
//! * [`lamperti_curve`] — density and CDF of the two-ray law for plotting;
//! * [`gas_samples`] — exact simplex samples of the d-ray law;
//! * [`occupation_ratios`] + [`fit_alpha_beta`] — simulate a model system in
//!   the page and recover `(alpha, beta)` from the run.
//!
//! Everything is seeded explicitly, so a page reload with the same inputs
//! reproduces the same picture. On wasm the ensembles run single-threaded
//! (rayon falls back without atomics).

use wasm_bindgen::prelude::*;

use arcsine_core::engine::{run_ensemble, EnsembleSpec, InitialMeasure, Model};
use arcsine_core::fit::{fit_gas, Degeneracy, FitOptions};
use arcsine_core::gas::GasParams;
use arcsine_core::lamperti::{lamperti_cdf, lamperti_pdf};
use arcsine_core::maps::{InitialDensity, MapModel};
use arcsine_core::chain::ChainModel;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `[y, pdf(y), cdf(y)]` triplets on an n-point interior grid of (0, 1).
#[wasm_bindgen]
pub fn lamperti_curve(alpha: f64, beta1: f64, n_points: usize) -> Result<Vec<f64>, JsError> {
    let n = n_points.clamp(2, 4096);
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let y = (k as f64 + 0.5) / n as f64;
        out.push(y);
        out.push(lamperti_pdf(alpha, beta1, y).map_err(js_err)?);
        out.push(lamperti_cdf(alpha, beta1, y).map_err(js_err)?);
    }
    Ok(out)
}

/// `n` exact draws of the d-ray generalized arcsine law, flattened row-major.
#[wasm_bindgen]
pub fn gas_samples(alpha: f64, beta: &[f64], n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let params = GasParams::new(alpha, beta.to_vec()).map_err(js_err)?;
    let n = n.clamp(1, 200_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * params.dim());
    for _ in 0..n {
        out.extend_from_slice(params.sample(&mut rng).ratios());
    }
    Ok(out)
}

fn demo_spec(model: &str, n_steps: u64, n_traj: usize, seed: u64) -> Result<EnsembleSpec, JsError> {
    let (model, measure) = match model {
        "boole" => (
            Model::Map(MapModel::boole()),
            InitialMeasure::Density(InitialDensity::UniformSym2),
        ),
        "cubic3" => (
            Model::Map(MapModel::cubic3(0.05).map_err(js_err)?),
            InitialMeasure::Density(InitialDensity::Uniform01),
        ),
        "chain" => (
            Model::Chain(ChainModel::new(vec![0.2, 0.3, 0.5]).map_err(js_err)?),
            InitialMeasure::ChainOrigin,
        ),
        other => return Err(JsError::new(&format!("unknown model '{other}'"))),
    };
    Ok(EnsembleSpec {
        model,
        measure,
        checkpoints: vec![n_steps.clamp(100, 3_000_000)],
        n_traj: n_traj.clamp(1, 20_000),
        seed,
    })
}

/// Ray count of the ratio vectors [`occupation_ratios`] returns for a model
/// (the cubic map's four half-rays are merged to one per fixed point).
#[wasm_bindgen]
pub fn model_ray_count(model: &str) -> Result<usize, JsError> {
    match model {
        "boole" => Ok(2),
        "cubic3" | "chain" => Ok(3),
        other => Err(JsError::new(&format!("unknown model '{other}'"))),
    }
}

/// Simulates `n_traj` orbits for `n_steps` steps and returns the
/// renormalized occupation-ratio rows, flattened row-major.
#[wasm_bindgen]
pub fn occupation_ratios(
    model: &str,
    n_steps: u64,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let spec = demo_spec(model, n_steps, n_traj, seed)?;
    let law = run_ensemble(&spec).map_err(js_err)?;
    let law = if model == "cubic3" {
        law.merge_rays(&[vec![0], vec![1, 2], vec![3]]).map_err(js_err)?
    } else {
        law
    };
    let rows = law.final_rows(true).map_err(js_err)?;
    Ok(rows.into_iter().flatten().collect())
}

/// Fits `(alpha, beta)` to flattened d-column rows; returns
/// `[alpha_hat, degeneracy_code, beta_hat...]` where the code is
/// 0 = interior, 1 = constant, 2 = vertex mixture, 3 = trivial vertex.
#[wasm_bindgen]
pub fn fit_alpha_beta(data: &[f64], d: usize) -> Result<Vec<f64>, JsError> {
    if d < 2 || data.len() % d != 0 {
        return Err(JsError::new("data length must be a multiple of d >= 2"));
    }
    let rows: Vec<Vec<f64>> = data.chunks(d).map(<[f64]>::to_vec).collect();
    let fit = fit_gas(&rows, FitOptions { renormalize: true }).map_err(js_err)?;
    let code = match fit.degeneracy {
        Degeneracy::None => 0.0,
        Degeneracy::ConstantVector => 1.0,
        Degeneracy::VertexMixture => 2.0,
        Degeneracy::TrivialVertex { .. } => 3.0,
    };
    let mut out = vec![fit.alpha_hat, code];
    out.extend_from_slice(&fit.beta_hat);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_well_formed() {
        let c = lamperti_curve(0.5, 0.5, 101).unwrap();
        assert_eq!(c.len(), 303);
        // cdf column increasing
        for w in c.chunks(3).collect::<Vec<_>>().windows(2) {
            assert!(w[1][2] >= w[0][2]);
        }
    }

    #[test]
    fn samples_flatten_row_major() {
        let s = gas_samples(1.0, &[0.25, 0.75], 4, 9).unwrap();
        assert_eq!(s, vec![0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75]);
        assert!(gas_samples(0.5, &[0.6, 0.6], 4, 9).is_err());
    }

    #[test]
    fn simulation_and_fit_round_trip_through_the_bindings() {
        let rows = occupation_ratios("chain", 2000, 1200, 5).unwrap();
        assert_eq!(rows.len(), 1200 * 3);
        let fit = fit_alpha_beta(&rows, 3).unwrap();
        assert_eq!(fit.len(), 5);
        assert!((0.0..=1.0).contains(&fit[0]));
        assert!(model_ray_count("chain").unwrap() == 3);
        assert!(model_ray_count("nope").is_err());
    }
}
