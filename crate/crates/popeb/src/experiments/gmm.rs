//! Gaussian-mixture comparison: coordinate ascent against bumping VI on
//! contaminated synthetic mixtures, evaluated by held-out mean log
//! predictive, plus the per-iteration cost sweep over candidate budgets.

use std::time::Instant;

use crate::bumpvi::{bumpvi_run, BumpViConfig};
use crate::config::{ExperimentConfig, Method};
use crate::data::VectorData;
use crate::error::Result;
use crate::eval::mean_log_predictive;
use crate::io::CsvWriter;
use crate::par;
use crate::rng::Seed;
use crate::synth::contaminated_gmm;
use crate::vi::gmm::{
    gmm_cavi, gmm_elbo, gmm_init, gmm_local_step, GmmModel, GmmPredictive, GmmPrior, GmmState,
};

use super::{fmt, k_tag, STREAM_DATA, STREAM_INIT, STREAM_RUN, STREAM_TEST};

#[derive(Debug, Clone)]
pub struct GmmRow {
    pub seed: u64,
    pub k: usize,
    pub method: Method,
    pub heldout_logp: f64,
    pub train_elbo: f64,
    pub iterations: usize,
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub seed: u64,
    pub k: usize,
    pub iter: usize,
    pub chosen: usize,
    pub score: f64,
    pub delta_norm: f64,
}

#[derive(Debug, Clone)]
pub struct CostRow {
    pub b: usize,
    pub secs_per_iter: f64,
}

#[derive(Debug, Clone)]
pub struct GmmOutput {
    pub rows: Vec<GmmRow>,
    pub traces: Vec<TraceRow>,
    pub costs: Vec<CostRow>,
}

fn heldout_logp(globals: &crate::vi::gmm::GmmGlobals, test: &VectorData) -> Result<f64> {
    let table = GmmPredictive::new(globals);
    let logs: Vec<f64> = par::map_indexed(test.len(), |i| table.log_density(test.row(i)));
    mean_log_predictive(&logs)
}

fn train_elbo(
    data: &VectorData,
    globals: crate::vi::gmm::GmmGlobals,
    prior: &GmmPrior,
) -> Result<f64> {
    let resp = gmm_local_step(data, &globals)?;
    let state = GmmState { resp, globals };
    Ok(gmm_elbo(
        data,
        &crate::bootstrap::CandidateWeights::identity(data.len()),
        &state,
        prior,
    ))
}

pub fn compute(config: &ExperimentConfig) -> Result<GmmOutput> {
    let seeds = &config.seeds;
    let per_seed: Vec<Result<(Vec<GmmRow>, Vec<TraceRow>)>> =
        par::map_indexed(seeds.len(), |i| run_seed(config, seeds[i]));

    let mut out = GmmOutput {
        rows: Vec::new(),
        traces: Vec::new(),
        costs: Vec::new(),
    };
    for r in per_seed {
        let (rows, traces) = r?;
        out.rows.extend(rows);
        out.traces.extend(traces);
    }
    if !config.b_sweep.is_empty() {
        out.costs = cost_sweep(config)?;
    }
    Ok(out)
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<(Vec<GmmRow>, Vec<TraceRow>)> {
    let s = &config.synth;
    let train = contaminated_gmm(
        s.n,
        s.dim,
        s.k_true,
        s.contamination,
        &mut Seed(seed).stream(STREAM_DATA),
    )?;
    let test = contaminated_gmm(
        config.heldout.max(1),
        s.dim,
        s.k_true,
        s.contamination,
        &mut Seed(seed).stream(STREAM_TEST),
    )?;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &k in &config.components {
        let prior = GmmPrior::default_for(k)?;
        let init = gmm_init(
            &train,
            &prior,
            &mut Seed(seed).derive(k_tag(k)).stream(STREAM_INIT),
        )?;

        for &method in &config.methods {
            match method {
                Method::Cavi => {
                    let start = Instant::now();
                    let (state, elbos) =
                        gmm_cavi(&train, &prior, init.clone(), config.max_iters, config.tolerance)?;
                    let wall = start.elapsed().as_secs_f64();
                    rows.push(GmmRow {
                        seed,
                        k,
                        method,
                        heldout_logp: heldout_logp(&state.globals, &test)?,
                        train_elbo: *elbos.last().unwrap_or(&f64::NAN),
                        iterations: elbos.len(),
                        wall_secs: wall,
                    });
                }
                Method::BumpVi => {
                    let model = GmmModel::new(prior);
                    let run_cfg = BumpViConfig::new(
                        config.candidates,
                        config.step_size,
                        config.tolerance,
                        config.max_iters,
                        Seed(seed).derive(k_tag(k)).derive(STREAM_RUN),
                    )?;
                    let start = Instant::now();
                    let (globals, trace) =
                        bumpvi_run(&model, &train, init.globals.clone(), &run_cfg)?;
                    let wall = start.elapsed().as_secs_f64();
                    for (it, rec) in trace.records.iter().enumerate() {
                        traces.push(TraceRow {
                            seed,
                            k,
                            iter: it,
                            chosen: rec.chosen,
                            score: rec.score,
                            delta_norm: rec.delta_norm,
                        });
                    }
                    rows.push(GmmRow {
                        seed,
                        k,
                        method,
                        heldout_logp: heldout_logp(&globals, &test)?,
                        train_elbo: train_elbo(&train, globals, &prior)?,
                        iterations: trace.len(),
                        wall_secs: wall,
                    });
                }
                _ => {}
            }
        }
    }
    Ok((rows, traces))
}

/// Per-iteration wall time for each candidate budget, on the first seed and
/// smallest component count. Five fixed iterations per budget.
fn cost_sweep(config: &ExperimentConfig) -> Result<Vec<CostRow>> {
    let s = &config.synth;
    let seed = config.seeds[0];
    let k = *config.components.iter().min().expect("validated nonempty");
    let train = contaminated_gmm(
        s.n,
        s.dim,
        s.k_true,
        s.contamination,
        &mut Seed(seed).stream(STREAM_DATA),
    )?;
    let prior = GmmPrior::default_for(k)?;
    let init = gmm_init(
        &train,
        &prior,
        &mut Seed(seed).derive(k_tag(k)).stream(STREAM_INIT),
    )?;
    let model = GmmModel::new(prior);

    let iters = 5;
    let mut out = Vec::new();
    for &b in &config.b_sweep {
        let run_cfg = BumpViConfig::new(
            b,
            config.step_size,
            // tolerance tiny so all five iterations execute
            1e-300,
            iters,
            Seed(seed).derive(k_tag(k)).derive(b as u64),
        )?;
        let start = Instant::now();
        let (_, trace) = bumpvi_run(&model, &train, init.globals.clone(), &run_cfg)?;
        let total = start.elapsed().as_secs_f64();
        out.push(CostRow {
            b,
            secs_per_iter: total / trace.len().max(1) as f64,
        });
    }
    Ok(out)
}

/// Computes and writes `gmm.csv`, `gmm_trace.csv`, `gmm_timing.csv`, and
/// (when a sweep is configured) `gmm_cost.csv`.
pub fn run(config: &ExperimentConfig) -> Result<()> {
    let out = compute(config)?;
    let hash = config.hash();

    let mut csv = CsvWriter::create(
        &config.out_dir.join("gmm.csv"),
        &[
            "config_hash",
            "seed",
            "k",
            "method",
            "heldout_logp",
            "train_elbo",
            "iterations",
        ],
    )?;
    for r in &out.rows {
        csv.row(&[
            hash.clone(),
            r.seed.to_string(),
            r.k.to_string(),
            r.method.to_string(),
            fmt(r.heldout_logp),
            fmt(r.train_elbo),
            r.iterations.to_string(),
        ])?;
    }

    let mut trace = CsvWriter::create(
        &config.out_dir.join("gmm_trace.csv"),
        &[
            "config_hash",
            "seed",
            "k",
            "iter",
            "chosen_b",
            "score",
            "delta_norm",
        ],
    )?;
    for t in &out.traces {
        trace.row(&[
            hash.clone(),
            t.seed.to_string(),
            t.k.to_string(),
            t.iter.to_string(),
            t.chosen.to_string(),
            fmt(t.score),
            fmt(t.delta_norm),
        ])?;
    }

    let mut timing = CsvWriter::create(
        &config.out_dir.join("gmm_timing.csv"),
        &["config_hash", "seed", "k", "method", "iterations", "wall_secs"],
    )?;
    for r in &out.rows {
        timing.row(&[
            hash.clone(),
            r.seed.to_string(),
            r.k.to_string(),
            r.method.to_string(),
            r.iterations.to_string(),
            fmt(r.wall_secs),
        ])?;
    }

    if !out.costs.is_empty() {
        let mut cost = CsvWriter::create(
            &config.out_dir.join("gmm_cost.csv"),
            &["config_hash", "b", "secs_per_iter", "ratio_vs_b1"],
        )?;
        let base = out
            .costs
            .iter()
            .find(|c| c.b == 1)
            .map(|c| c.secs_per_iter);
        for c in &out.costs {
            let ratio = base.map(|b| c.secs_per_iter / b);
            cost.row(&[
                hash.clone(),
                c.b.to_string(),
                fmt(c.secs_per_iter),
                ratio.map(fmt).unwrap_or_default(),
            ])?;
        }
    }
    Ok(())
}
