//! The end-to-end forecasting pipeline: normalize, cluster, re-index,
//! window, evolve and report.

use crate::colony::{self, ClusterAssignment, SimulationResult};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lgp::{evolve, Case, EvolutionOutcome};
use crate::mining::{
    self, chronological, items_from_dataset, make_supervised, normalize, reindex_with_clusters,
    Report, SupervisedCases, TimeSeriesDataset, REQUESTS_INPUT,
};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: Report,
    /// Absent when clustering is disabled.
    pub simulation: Option<SimulationResult>,
    pub assignment: Option<ClusterAssignment>,
    pub cases: SupervisedCases,
    pub evolution: EvolutionOutcome,
}

/// Splits training cases into a fitting head and a validation tail of
/// `ceil(fraction * n)` cases. A zero fraction validates on the whole set.
pub fn validation_split(train: &[Case], fraction: f64) -> Result<(Vec<Case>, Vec<Case>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    if fraction == 0.0 {
        return Ok((train.to_vec(), train.to_vec()));
    }
    let n_val = ((fraction * train.len() as f64).ceil() as usize).max(1);
    if n_val >= train.len() {
        return Err(Error::InvalidArgument(format!(
            "{} training cases leave nothing to fit after validation",
            train.len()
        )));
    }
    let (fit, val) = train.split_at(train.len() - n_val);
    Ok((fit.to_vec(), val.to_vec()))
}

/// Runs the pipeline on a raw (unnormalized) traffic series. With
/// `mining.use_clusters` off the cluster input is constant and the index
/// input is the chronological rank.
pub fn run(config: &RunConfig, raw: &TimeSeriesDataset) -> Result<PipelineOutput> {
    let m = &config.mining;
    let dataset = normalize(raw, m.train_fraction).map_err(Error::at("normalize"))?;

    let (dataset, simulation, assignment) = if m.use_clusters {
        let items = items_from_dataset(&dataset, &m.cluster_columns).map_err(Error::at("items"))?;
        let colony_config = config.colony_config(items.len());
        let sim = colony::run(&colony_config, &items).map_err(Error::at("cluster"))?;
        let assignment =
            colony::extract_clusters(&sim.habitat, config.colony.link_radius).map_err(Error::at("cluster"))?;
        let reindexed = reindex_with_clusters(&dataset, &assignment.labels).map_err(Error::at("reindex"))?;
        (chronological(&reindexed), Some(sim), Some(assignment))
    } else {
        (dataset, None, None)
    };

    let cases = make_supervised(&dataset, m.horizon).map_err(Error::at("supervise"))?;
    let (train, test) = cases.split();
    if train.is_empty() || test.is_empty() {
        return Err(Error::at("split")(Error::InvalidArgument(format!(
            "{} training and {} test cases; both must be non-empty",
            train.len(),
            test.len()
        ))));
    }
    let (fit, validation) = validation_split(&train, m.validation_fraction).map_err(Error::at("split"))?;
    let evolution = evolve(&config.evolution_config(), &fit, &validation).map_err(Error::at("evolve"))?;
    let mut report =
        mining::report(&evolution.best, &train, &test, REQUESTS_INPUT).map_err(Error::at("report"))?;
    report.seed = config.seed;
    report.config_digest = config.digest();
    Ok(PipelineOutput {
        report,
        simulation,
        assignment,
        cases,
        evolution,
    })
}
