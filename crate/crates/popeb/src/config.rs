//! Experiment configuration: paper-default settings per experiment, a flat
//! `key = value` config-file format, and a stable hash over the resolved
//! configuration that every output row carries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    GammaPoisson,
    Blr,
    Gmm,
    Lda,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::GammaPoisson => "gamma-poisson",
            ExperimentKind::Blr => "blr",
            ExperimentKind::Gmm => "gmm",
            ExperimentKind::Lda => "lda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bayes,
    Eb,
    PopEbMap,
    PopEbFb,
    Cavi,
    BumpVi,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bayes => "bayes",
            Method::Eb => "eb",
            Method::PopEbMap => "popeb-map",
            Method::PopEbFb => "popeb-fb",
            Method::Cavi => "cavi",
            Method::BumpVi => "bumpvi",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "bayes" => Ok(Method::Bayes),
            "eb" => Ok(Method::Eb),
            "popeb-map" => Ok(Method::PopEbMap),
            "popeb-fb" => Ok(Method::PopEbFb),
            "cavi" => Ok(Method::Cavi),
            "bumpvi" => Ok(Method::BumpVi),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }

    fn valid_for(&self, kind: ExperimentKind) -> bool {
        match kind {
            ExperimentKind::GammaPoisson => {
                matches!(self, Method::Bayes | Method::Eb | Method::PopEbMap | Method::PopEbFb)
            }
            ExperimentKind::Blr => {
                matches!(self, Method::Bayes | Method::PopEbMap | Method::PopEbFb)
            }
            ExperimentKind::Gmm | ExperimentKind::Lda => {
                matches!(self, Method::Cavi | Method::BumpVi)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the experiment's observations come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    File(PathBuf),
}

/// Synthetic-generator knobs; which ones apply depends on the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub dim: usize,
    pub k_true: usize,
    pub contamination: f64,
    pub rate_dominant: f64,
    pub rate_contaminated: f64,
    pub noise_sd: f64,
    pub outlier_scale: f64,
    pub vocab: usize,
    pub mean_doc_len: f64,
}

/// Fully resolved settings for one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub methods: Vec<Method>,
    /// Total candidate budget B (identity included).
    pub candidates: usize,
    /// Constant step size for bumping VI.
    pub step_size: f64,
    /// Component / topic counts to fit.
    pub components: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Train share of file-backed regression splits.
    pub split_fraction: f64,
    pub data: DataSource,
    pub out_dir: PathBuf,
    pub synth: SynthParams,
    /// Candidate budgets for the per-iteration cost sweep (GMM only).
    pub b_sweep: Vec<usize>,
    pub max_iters: usize,
    pub tolerance: f64,
    /// Multiplier applied to file-loaded targets.
    pub target_scale: f64,
    /// Held-out observations (GMM rows / LDA documents).
    pub heldout: usize,
}

impl ExperimentConfig {
    /// Paper-default settings for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base_synth = SynthParams {
            n: 500,
            dim: 10,
            k_true: 5,
            contamination: 0.05,
            rate_dominant: 5.0,
            rate_contaminated: 50.0,
            noise_sd: 0.05,
            outlier_scale: 6.0,
            vocab: 500,
            mean_doc_len: 60.0,
        };
        match kind {
            ExperimentKind::GammaPoisson => ExperimentConfig {
                experiment: kind,
                methods: vec![Method::Bayes, Method::Eb, Method::PopEbMap, Method::PopEbFb],
                candidates: 100,
                step_size: 1.0,
                components: vec![],
                seeds: (0..20).collect(),
                split_fraction: 0.8,
                data: DataSource::Synthetic,
                out_dir: PathBuf::from("out"),
                synth: base_synth,
                b_sweep: vec![],
                max_iters: 0,
                tolerance: 1e-3,
                target_scale: 1.0,
                heldout: 0,
            },
            ExperimentKind::Blr => ExperimentConfig {
                experiment: kind,
                methods: vec![Method::Bayes, Method::PopEbMap, Method::PopEbFb],
                candidates: 25,
                step_size: 1.0,
                components: vec![],
                seeds: (0..6).collect(),
                // 252 rows split 200 / 52
                split_fraction: 200.0 / 252.0,
                data: DataSource::Synthetic,
                out_dir: PathBuf::from("out"),
                synth: SynthParams {
                    n: 252,
                    dim: 14,
                    ..base_synth
                },
                b_sweep: vec![],
                max_iters: 0,
                tolerance: 1e-3,
                target_scale: 0.01,
                heldout: 0,
            },
            ExperimentKind::Gmm => ExperimentConfig {
                experiment: kind,
                methods: vec![Method::Cavi, Method::BumpVi],
                candidates: 10,
                step_size: 0.1,
                components: vec![5, 10],
                seeds: (0..10).collect(),
                split_fraction: 0.8,
                data: DataSource::Synthetic,
                out_dir: PathBuf::from("out"),
                synth: SynthParams {
                    n: 2000,
                    k_true: 2,
                    ..base_synth
                },
                b_sweep: vec![1, 2, 5, 10, 15, 30],
                max_iters: 75,
                tolerance: 1e-3,
                target_scale: 1.0,
                heldout: 2000,
            },
            ExperimentKind::Lda => ExperimentConfig {
                experiment: kind,
                methods: vec![Method::Cavi, Method::BumpVi],
                candidates: 10,
                step_size: 0.05,
                components: vec![2, 4, 8],
                seeds: (0..10).collect(),
                split_fraction: 0.8,
                data: DataSource::Synthetic,
                out_dir: PathBuf::from("out"),
                synth: SynthParams {
                    n: 200,
                    k_true: 6,
                    ..base_synth
                },
                b_sweep: vec![],
                max_iters: 150,
                tolerance: 1e-2,
                target_scale: 1.0,
                heldout: 50,
            },
        }
    }

    /// Applies `key = value` lines over the defaults. Unknown keys are
    /// errors; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: ln + 1,
                detail: "expected 'key = value'".into(),
            })?;
            self.apply(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: ln + 1,
                detail: e.to_string(),
            })?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|s| Method::parse(s.trim()))
                    .collect::<Result<_>>()?
            }
            "b" => self.candidates = parse_num(key, value)?,
            "rho" => self.step_size = parse_num(key, value)?,
            "k" => self.components = parse_list(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "split_fraction" => self.split_fraction = parse_num(key, value)?,
            "data" => {
                self.data = if value == "synthetic" {
                    DataSource::Synthetic
                } else {
                    DataSource::File(PathBuf::from(value))
                }
            }
            "out" => self.out_dir = PathBuf::from(value),
            "n" => self.synth.n = parse_num(key, value)?,
            "dim" => self.synth.dim = parse_num(key, value)?,
            "k_true" => self.synth.k_true = parse_num(key, value)?,
            "contamination" => self.synth.contamination = parse_num(key, value)?,
            "rate1" => self.synth.rate_dominant = parse_num(key, value)?,
            "rate2" => self.synth.rate_contaminated = parse_num(key, value)?,
            "noise_sd" => self.synth.noise_sd = parse_num(key, value)?,
            "outlier_scale" => self.synth.outlier_scale = parse_num(key, value)?,
            "vocab" => self.synth.vocab = parse_num(key, value)?,
            "doc_len" => self.synth.mean_doc_len = parse_num(key, value)?,
            "b_sweep" => self.b_sweep = parse_list(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "tolerance" => self.tolerance = parse_num(key, value)?,
            "target_scale" => self.target_scale = parse_num(key, value)?,
            "heldout" => self.heldout = parse_num(key, value)?,
            other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid("method set must not be empty"));
        }
        for m in &self.methods {
            if !m.valid_for(self.experiment) {
                return Err(Error::invalid(format!(
                    "method '{m}' is not valid for experiment '{}'",
                    self.experiment.as_str()
                )));
            }
        }
        if self.candidates == 0 {
            return Err(Error::invalid("candidate budget b must be at least 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid("split fraction must lie in (0, 1)"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seed list must not be empty"));
        }
        match self.experiment {
            ExperimentKind::Gmm | ExperimentKind::Lda => {
                if self.components.is_empty() {
                    return Err(Error::invalid("k list must not be empty"));
                }
                if !(self.step_size > 0.0 && self.step_size <= 1.0) {
                    return Err(Error::invalid("rho must lie in (0, 1]"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical serialization: sorted `key=value` lines over every resolved
    /// field. Identical configurations serialize identically.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("experiment", self.experiment.as_str().to_string());
        map.insert(
            "methods",
            self.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
        );
        map.insert("b", self.candidates.to_string());
        map.insert("rho", format!("{}", self.step_size));
        map.insert("k", join(&self.components));
        map.insert("seeds", join(&self.seeds));
        map.insert("split_fraction", format!("{}", self.split_fraction));
        map.insert(
            "data",
            match &self.data {
                DataSource::Synthetic => "synthetic".to_string(),
                DataSource::File(p) => p.display().to_string(),
            },
        );
        map.insert("n", self.synth.n.to_string());
        map.insert("dim", self.synth.dim.to_string());
        map.insert("k_true", self.synth.k_true.to_string());
        map.insert("contamination", format!("{}", self.synth.contamination));
        map.insert("rate1", format!("{}", self.synth.rate_dominant));
        map.insert("rate2", format!("{}", self.synth.rate_contaminated));
        map.insert("noise_sd", format!("{}", self.synth.noise_sd));
        map.insert("outlier_scale", format!("{}", self.synth.outlier_scale));
        map.insert("vocab", self.synth.vocab.to_string());
        map.insert("doc_len", format!("{}", self.synth.mean_doc_len));
        map.insert("b_sweep", join(&self.b_sweep));
        map.insert("max_iters", self.max_iters.to_string());
        map.insert("tolerance", format!("{}", self.tolerance));
        map.insert("target_scale", format!("{}", self.target_scale));
        map.insert("heldout", self.heldout.to_string());
        map.iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`]; carried by every
    /// output row. Note the output directory is deliberately excluded so a
    /// run re-rooted elsewhere reproduces identical rows.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex_prefix(&digest, 16)
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse '{value}' for key '{key}'")))
}

/// Comma lists, with `a..b` expanding to the half-open integer range.
fn parse_list<T>(key: &str, value: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once("..") {
            let lo: u64 = parse_num(key, a.trim())?;
            let hi: u64 = parse_num(key, b.trim())?;
            for v in lo..hi {
                out.push(T::try_from(v).map_err(|_| {
                    Error::invalid(format!("value {v} out of range for key '{key}'"))
                })?);
            }
        } else {
            out.push(parse_num(key, part)?);
        }
    }
    Ok(out)
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::GammaPoisson,
            ExperimentKind::Blr,
            ExperimentKind::Gmm,
            ExperimentKind::Lda,
        ] {
            ExperimentConfig::defaults(kind).validate().unwrap();
        }
    }

    #[test]
    fn file_overrides_apply() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Gmm);
        cfg.apply_file("b = 5\nrho = 0.2 # comment\nk = 3,7\nseeds = 0..4\n")
            .unwrap();
        assert_eq!(cfg.candidates, 5);
        assert_eq!(cfg.step_size, 0.2);
        assert_eq!(cfg.components, vec![3, 7]);
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_methods_rejected() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Gmm);
        assert!(cfg.apply_file("bogus = 1\n").is_err());
        cfg.apply_file("methods = bayes\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::defaults(ExperimentKind::Blr);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.candidates = 26;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn out_dir_does_not_change_hash() {
        let a = ExperimentConfig::defaults(ExperimentKind::Lda);
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
    }
}
