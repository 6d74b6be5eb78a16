//! Ensemble driver: many independent trajectories of a map or chain model,
//! occupation counts per ray at checkpoint times, aggregated into empirical
//! laws of the ratio vectors `S_n / n`.
//!
//! Reproducibility contract: each trajectory owns the ChaCha stream
//! `(master seed, trajectory index)`, so the output is a pure function of
//! the [`EnsembleSpec`] whatever the worker count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

use crate::chain::{ChainModel, ChainState};
use crate::error::{Error, Result};
use crate::maps::{InitialDensity, MapModel, MapOrbit, RayLabel};

/// Hard cap on restarts of a single trajectory slot after measure-zero bad
/// starts; exceeding it means the configuration itself is broken.
const RESAMPLE_CAP: u32 = 100;

/// A concrete model under ensemble simulation.
#[derive(Debug, Clone, Serialize)]
pub enum Model {
    Map(MapModel),
    Chain(ChainModel),
}

impl Model {
    pub fn ray_count(&self) -> usize {
        match self {
            Model::Map(m) => m.ray_count(),
            Model::Chain(c) => c.ray_count(),
        }
    }
}

/// Initial condition of a trajectory. Map models take an absolutely
/// continuous density; chain models start from a fixed site (every initial
/// law on the countable state space is absolutely continuous).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitialMeasure {
    Density(InitialDensity),
    ChainOrigin,
    ChainSite { ray: usize, height: u64 },
}

/// Full description of an ensemble run.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSpec {
    pub model: Model,
    pub measure: InitialMeasure,
    /// strictly increasing positive checkpoint times
    pub checkpoints: Vec<u64>,
    pub n_traj: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.checkpoints.is_empty() {
            return Err(Error::Config("at least one checkpoint required".to_string()));
        }
        if self.checkpoints[0] == 0 || self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "checkpoints must be positive and strictly increasing".to_string(),
            ));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be at least 1".to_string()));
        }
        match (&self.model, &self.measure) {
            (Model::Map(_), InitialMeasure::Density(_)) => Ok(()),
            (Model::Chain(c), InitialMeasure::ChainSite { ray, height }) => {
                if *ray == 0 || *ray > c.ray_count() || *height == 0 {
                    Err(Error::Config(format!(
                        "chain site (ray {ray}, height {height}) invalid for d = {}",
                        c.ray_count()
                    )))
                } else {
                    Ok(())
                }
            }
            (Model::Chain(_), InitialMeasure::ChainOrigin) => Ok(()),
            _ => Err(Error::Config(
                "initial measure does not match the model kind".to_string(),
            )),
        }
    }
}

/// Occupation counts of one trajectory at one checkpoint:
/// `sum(counts) + junction_count == n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupationRecord {
    pub n: u64,
    pub counts: Vec<u64>,
    pub junction_count: u64,
}

/// Ensemble of ratio vectors `S_n / n` per checkpoint, junction fraction
/// kept separate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    d: usize,
    checkpoints: Vec<u64>,
    /// ratios[c][t * d + j] = trajectory t's ray-j occupation fraction at checkpoint c
    ratios: Vec<Vec<f64>>,
    /// junction[c][t]
    junction: Vec<Vec<f64>>,
    resample_events: u64,
}

/// Per-checkpoint junction-fraction summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JunctionSummary {
    pub n: u64,
    pub median: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineOptions {
    /// Assert online that between consecutive visits to distinct rays the
    /// orbit passes through the junction (maps only).
    pub audit_separation: bool,
}

pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EmpiricalLaw> {
    run_ensemble_with(spec, EngineOptions::default())
}

pub fn run_ensemble_with(spec: &EnsembleSpec, options: EngineOptions) -> Result<EmpiricalLaw> {
    spec.validate()?;
    let d = spec.model.ray_count();
    let per_traj: Vec<(Vec<OccupationRecord>, u32)> = (0..spec.n_traj)
        .into_par_iter()
        .map(|t| run_trajectory(spec, t as u64, options))
        .collect::<Result<_>>()?;

    let m = spec.checkpoints.len();
    let mut ratios = vec![Vec::with_capacity(spec.n_traj * d); m];
    let mut junction = vec![Vec::with_capacity(spec.n_traj); m];
    let mut resample_events = 0u64;
    for (records, restarts) in &per_traj {
        resample_events += u64::from(*restarts);
        for (c, rec) in records.iter().enumerate() {
            let n = rec.n as f64;
            for &cnt in &rec.counts {
                ratios[c].push(cnt as f64 / n);
            }
            junction[c].push(rec.junction_count as f64 / n);
        }
    }
    Ok(EmpiricalLaw {
        d,
        checkpoints: spec.checkpoints.clone(),
        ratios,
        junction,
        resample_events,
    })
}

/// One trajectory with restart-on-absorption; returns its checkpoint
/// records and how many restarts happened.
fn run_trajectory(
    spec: &EnsembleSpec,
    index: u64,
    options: EngineOptions,
) -> Result<(Vec<OccupationRecord>, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let d = spec.model.ray_count();
    let n_max = *spec.checkpoints.last().unwrap();

    let mut restarts = 0u32;
    'attempt: loop {
        if restarts > RESAMPLE_CAP {
            return Err(Error::Config(format!(
                "trajectory {index} exceeded {RESAMPLE_CAP} restarts; configuration broken"
            )));
        }
        let mut counts = vec![0u64; d];
        let mut junction_count = 0u64;
        let mut records = Vec::with_capacity(spec.checkpoints.len());
        let mut next_checkpoint = 0usize;

        // separation audit state
        let mut last_ray: Option<usize> = None;
        let mut junction_since = true;

        macro_rules! tally {
            ($label:expr, $n:expr) => {{
                match $label {
                    RayLabel::Junction => {
                        junction_count += 1;
                        junction_since = true;
                    }
                    RayLabel::Ray(r) => {
                        counts[r] += 1;
                        if options.audit_separation {
                            if let Some(prev) = last_ray {
                                if prev != r && !junction_since {
                                    return Err(Error::Numerical(format!(
                                        "dynamical separation violated at step {} of trajectory {index}",
                                        $n
                                    )));
                                }
                            }
                            last_ray = Some(r);
                            junction_since = false;
                        }
                    }
                }
                if spec.checkpoints[next_checkpoint] == $n {
                    records.push(OccupationRecord {
                        n: $n,
                        counts: counts.clone(),
                        junction_count,
                    });
                    next_checkpoint += 1;
                    if next_checkpoint == spec.checkpoints.len() {
                        return Ok((records, restarts));
                    }
                }
            }};
        }

        match (&spec.model, &spec.measure) {
            (Model::Map(map), InitialMeasure::Density(density)) => {
                let x0 = map.sample_initial(*density, &mut rng)?;
                let mut orbit = MapOrbit::new(map, x0);
                for n in 1..=n_max {
                    let label = match orbit.advance() {
                        Ok(l) => l,
                        Err(Error::AbsorbedAtFixedPoint) => {
                            restarts += 1;
                            continue 'attempt;
                        }
                        Err(e) => return Err(e),
                    };
                    tally!(label, n);
                }
            }
            (Model::Chain(chain), measure) => {
                let mut state = match measure {
                    InitialMeasure::ChainOrigin => ChainState::ORIGIN,
                    InitialMeasure::ChainSite { ray, height } => {
                        ChainState::on_ray(*ray, *height)?
                    }
                    InitialMeasure::Density(_) => unreachable!("validated"),
                };
                for n in 1..=n_max {
                    state = chain.step(state, &mut rng);
                    let label = if state.is_origin() {
                        RayLabel::Junction
                    } else {
                        RayLabel::Ray(state.ray() - 1)
                    };
                    tally!(label, n);
                }
            }
            (Model::Map(_), _) => unreachable!("validated"),
        }
        unreachable!("final checkpoint returns from the loop");
    }
}

impl EmpiricalLaw {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn n_traj(&self) -> usize {
        self.junction.first().map_or(0, Vec::len)
    }

    /// Restarts after measure-zero bad starts, across all trajectories.
    pub fn resample_events(&self) -> u64 {
        self.resample_events
    }

    /// Ratio vector of one trajectory at one checkpoint.
    pub fn ratios_at(&self, checkpoint: usize, traj: usize) -> &[f64] {
        &self.ratios[checkpoint][traj * self.d..(traj + 1) * self.d]
    }

    pub fn junction_at(&self, checkpoint: usize, traj: usize) -> f64 {
        self.junction[checkpoint][traj]
    }

    /// Rows at one checkpoint; `renormalize` divides each row by its sum
    /// (dropping the junction deficit, which vanishes in the limit).
    pub fn rows_at(&self, checkpoint: usize, renormalize: bool) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(self.n_traj());
        for t in 0..self.n_traj() {
            let row = self.ratios_at(checkpoint, t);
            if renormalize {
                let sum: f64 = row.iter().sum();
                if sum <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "trajectory {t} never left the junction; cannot renormalize"
                    )));
                }
                out.push(row.iter().map(|&x| x / sum).collect());
            } else {
                out.push(row.to_vec());
            }
        }
        Ok(out)
    }

    /// Rows at the last checkpoint.
    pub fn final_rows(&self, renormalize: bool) -> Result<Vec<Vec<f64>>> {
        self.rows_at(self.checkpoints.len() - 1, renormalize)
    }

    /// Law with ray groups merged (columns summed); `groups` must partition
    /// the rays.
    pub fn merge_rays(&self, groups: &[Vec<usize>]) -> Result<EmpiricalLaw> {
        let mut seen = vec![false; self.d];
        for g in groups {
            for &j in g {
                if j >= self.d || seen[j] {
                    return Err(Error::param("groups must partition the rays".to_string()));
                }
                seen[j] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::param("groups must cover every ray".to_string()));
        }
        let d_new = groups.len();
        let n_traj = self.n_traj();
        let ratios = self
            .ratios
            .iter()
            .map(|cp| {
                let mut merged = Vec::with_capacity(n_traj * d_new);
                for t in 0..n_traj {
                    for g in groups {
                        merged.push(g.iter().map(|&j| cp[t * self.d + j]).sum());
                    }
                }
                merged
            })
            .collect();
        Ok(EmpiricalLaw {
            d: d_new,
            checkpoints: self.checkpoints.clone(),
            ratios,
            junction: self.junction.clone(),
            resample_events: self.resample_events,
        })
    }

    /// Median and 90th percentile of the junction fraction per checkpoint.
    pub fn junction_fraction_profile(&self) -> Vec<JunctionSummary> {
        self.checkpoints
            .iter()
            .zip(&self.junction)
            .map(|(&n, fracs)| {
                let mut sorted = fracs.clone();
                sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
                JunctionSummary { n, median: q(0.5), p90: q(0.9) }
            })
            .collect()
    }

    /// CSV export: `trajectory_id,n,ratio_1..ratio_d,junction_fraction`,
    /// trajectory-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trajectory_id,n");
        for j in 1..=self.d {
            let _ = write!(out, ",ratio_{j}");
        }
        out.push_str(",junction_fraction\n");
        for t in 0..self.n_traj() {
            for (c, &n) in self.checkpoints.iter().enumerate() {
                let _ = write!(out, "{t},{n}");
                for &r in self.ratios_at(c, t) {
                    let _ = write!(out, ",{r}");
                }
                let _ = writeln!(out, ",{}", self.junction_at(c, t));
            }
        }
        out
    }
}

/// Provenance manifest echoing the run configuration.
pub fn manifest_json(spec: &EnsembleSpec) -> String {
    #[derive(Serialize)]
    struct Manifest<'a> {
        artifact: &'static str,
        version: &'static str,
        spec: &'a EnsembleSpec,
    }
    serde_json::to_string_pretty(&Manifest {
        artifact: "arcsine-lab",
        version: env!("CARGO_PKG_VERSION"),
        spec,
    })
    .expect("manifest serialization cannot fail")
}
