//! Topic-model comparison: batch variational EM against bumping VI on a
//! synthetic corpus with off-model noise documents, evaluated by held-out
//! per-word log predictive under fold-in. Also emits each topic's top words.

use std::time::Instant;

use crate::bumpvi::{bumpvi_run, BumpViConfig};
use crate::config::{ExperimentConfig, Method};
use crate::data::DocumentData;
use crate::error::Result;
use crate::eval::mean_log_predictive;
use crate::io::CsvWriter;
use crate::par;
use crate::rng::Seed;
use crate::synth::synthetic_corpus;
use crate::vi::lda::{lda_cavi, lda_init, lda_per_word_log_predictive, LdaGlobals, LdaModel, LdaPrior};

use super::{fmt, k_tag, STREAM_DATA, STREAM_INIT, STREAM_RUN};

#[derive(Debug, Clone)]
pub struct LdaRow {
    pub seed: u64,
    pub k: usize,
    pub method: Method,
    pub heldout_per_word_logp: f64,
    /// Total fold-in log predictive of the training corpus.
    pub train_score: f64,
    pub iterations: usize,
    pub wall_secs: f64,
    pub top_words: Vec<Vec<u32>>,
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
pub struct LdaOutput {
    pub rows: Vec<LdaRow>,
    pub traces: Vec<TraceRow>,
}

fn heldout_per_word(
    globals: &LdaGlobals,
    prior: &LdaPrior,
    test: &DocumentData,
) -> Result<f64> {
    let per_doc: Vec<f64> = par::map_indexed(test.len(), |d| {
        lda_per_word_log_predictive(globals, prior, test.doc(d))
    });
    mean_log_predictive(&per_doc)
}

pub fn compute(config: &ExperimentConfig) -> Result<LdaOutput> {
    let seeds = &config.seeds;
    let per_seed: Vec<Result<(Vec<LdaRow>, Vec<TraceRow>)>> =
        par::map_indexed(seeds.len(), |i| run_seed(config, seeds[i]));
    let mut out = LdaOutput {
        rows: Vec::new(),
        traces: Vec::new(),
    };
    for r in per_seed {
        let (rows, traces) = r?;
        out.rows.extend(rows);
        out.traces.extend(traces);
    }
    Ok(out)
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<(Vec<LdaRow>, Vec<TraceRow>)> {
    let s = &config.synth;
    let total_docs = s.n + config.heldout.max(1);
    let corpus = synthetic_corpus(
        total_docs,
        s.vocab,
        s.k_true,
        s.mean_doc_len,
        s.contamination,
        &mut Seed(seed).stream(STREAM_DATA),
    )?;
    let train = DocumentData::new(corpus.docs()[..s.n].to_vec(), s.vocab)?;
    let test = DocumentData::new(corpus.docs()[s.n..].to_vec(), s.vocab)?;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &k in &config.components {
        let prior = LdaPrior::default_for(k)?;
        let init = lda_init(
            s.vocab,
            &prior,
            &mut Seed(seed).derive(k_tag(k)).stream(STREAM_INIT),
        );

        for &method in &config.methods {
            match method {
                Method::Cavi => {
                    let start = Instant::now();
                    let (globals, iters) =
                        lda_cavi(&train, &prior, init.clone(), config.max_iters, config.tolerance);
                    let wall = start.elapsed().as_secs_f64();
                    let scorer = LdaModel::new(prior);
                    rows.push(LdaRow {
                        seed,
                        k,
                        method,
                        heldout_per_word_logp: heldout_per_word(&globals, &prior, &test)?,
                        train_score: crate::bumpvi::BumpableModel::predictive_score(
                            &scorer, &train, &globals,
                        ),
                        iterations: iters,
                        wall_secs: wall,
                        top_words: globals.top_words(10),
                    });
                }
                Method::BumpVi => {
                    let model = LdaModel::new(prior);
                    let run_cfg = BumpViConfig::new(
                        config.candidates,
                        config.step_size,
                        config.tolerance,
                        config.max_iters,
                        Seed(seed).derive(k_tag(k)).derive(STREAM_RUN),
                    )?;
                    let start = Instant::now();
                    let (globals, trace) = bumpvi_run(&model, &train, init.clone(), &run_cfg)?;
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
                    rows.push(LdaRow {
                        seed,
                        k,
                        method,
                        heldout_per_word_logp: heldout_per_word(&globals, &prior, &test)?,
                        train_score: crate::bumpvi::BumpableModel::predictive_score(
                            &model, &train, &globals,
                        ),
                        iterations: trace.len(),
                        wall_secs: wall,
                        top_words: globals.top_words(10),
                    });
                }
                _ => {}
            }
        }
    }
    Ok((rows, traces))
}

/// Computes and writes `lda.csv`, `lda_trace.csv`, `lda_topics.csv`, and
/// `lda_timing.csv`.
pub fn run(config: &ExperimentConfig) -> Result<()> {
    let out = compute(config)?;
    let hash = config.hash();

    let mut csv = CsvWriter::create(
        &config.out_dir.join("lda.csv"),
        &[
            "config_hash",
            "seed",
            "k",
            "method",
            "heldout_per_word_logp",
            "train_score",
            "iterations",
        ],
    )?;
    for r in &out.rows {
        csv.row(&[
            hash.clone(),
            r.seed.to_string(),
            r.k.to_string(),
            r.method.to_string(),
            fmt(r.heldout_per_word_logp),
            fmt(r.train_score),
            r.iterations.to_string(),
        ])?;
    }

    let mut topics = CsvWriter::create(
        &config.out_dir.join("lda_topics.csv"),
        &["config_hash", "seed", "k", "method", "topic", "top_words"],
    )?;
    for r in &out.rows {
        for (t, words) in r.top_words.iter().enumerate() {
            topics.row(&[
                hash.clone(),
                r.seed.to_string(),
                r.k.to_string(),
                r.method.to_string(),
                t.to_string(),
                words
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ])?;
        }
    }

    let mut trace = CsvWriter::create(
        &config.out_dir.join("lda_trace.csv"),
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
        &config.out_dir.join("lda_timing.csv"),
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
    Ok(())
}
