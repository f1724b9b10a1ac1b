use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::dataio::SplitSpec;
use crate::downstream::DEFAULT_MAX_ITER;
use crate::fscale::NegativeValue;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Cluster,
    Classify,
}

/// Whether scaling factors are learned (`supervised`) or all ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Supervised,
    Unsupervised,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Cluster => "cluster",
            Task::Classify => "classify",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Supervised => "supervised",
            Method::Unsupervised => "unsupervised",
        })
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(Task::Cluster),
            "classify" => Ok(Task::Classify),
            _ => Err(Error::Config(format!("unknown task '{s}'"))),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Method::Supervised),
            "unsupervised" => Ok(Method::Unsupervised),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

pub fn parse_negative(s: &str) -> Result<NegativeValue> {
    if s == "auto" {
        return Ok(NegativeValue::Auto);
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(NegativeValue::Fixed)
        .ok_or_else(|| Error::Config(format!("fiedler_negative must be a number or 'auto', got '{s}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: '{value}' is not a boolean"))),
    }
}

pub fn parse_sigma_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad sigma '{t}'")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub method: Method,
    pub ell: usize,
    pub sigma_grid: Vec<f64>,
    pub k_neighbors: usize,
    pub fiedler_negative: NegativeValue,
    /// Backward-error tolerance for accepting learned scaling factors.
    pub residual_tol: f64,
    pub split: SplitSpec,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    /// Seeds k-means; splits use `split.seed`.
    pub seed: u64,
    pub standardize: bool,
    /// Build the graph from the signed distance `Σ s_l (y_il − y_jl)²`
    /// instead of from `Z = Y·|S|^{1/2}`.
    pub signed_metric: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Classify,
            method: Method::Supervised,
            ell: 1,
            sigma_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            k_neighbors: 7,
            fiedler_negative: NegativeValue::Fixed(-0.2),
            residual_tol: 1e-2,
            split: SplitSpec {
                train_fraction: 0.5,
                seed: 0,
                repetitions: 10,
            },
            kmeans_restarts: 20,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            standardize: true,
            signed_metric: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=3).contains(&self.ell) {
            return bad(format!("ell must be 1, 2 or 3, got {}", self.ell));
        }
        if self.sigma_grid.is_empty() || self.sigma_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad(format!("sigma_grid must be positive: {:?}", self.sigma_grid));
        }
        if self.k_neighbors == 0 {
            return bad("k_neighbors must be at least 1".into());
        }
        if !(self.residual_tol > 0.0) {
            return bad(format!("residual_tol must be positive, got {}", self.residual_tol));
        }
        let f = self.split.train_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return bad(format!("train_fraction must lie in (0, 1], got {f}"));
        }
        if self.split.repetitions == 0 || self.kmeans_restarts == 0 || self.kmeans_max_iter == 0 {
            return bad("repetitions, kmeans_restarts and kmeans_max_iter must be positive".into());
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("{key}: '{v}' is not a non-negative integer")))
        };
        match key {
            "task" => self.task = value.parse()?,
            "method" => self.method = value.parse()?,
            "ell" => self.ell = int(value)? as usize,
            "sigma_grid" => self.sigma_grid = parse_sigma_grid(value)?,
            "k_neighbors" => self.k_neighbors = int(value)? as usize,
            "fiedler_negative" => self.fiedler_negative = parse_negative(value)?,
            "residual_tol" => self.residual_tol = num(value)?,
            "train_fraction" => self.split.train_fraction = num(value)?,
            "repetitions" => self.split.repetitions = int(value)? as usize,
            "split_seed" => self.split.seed = int(value)?,
            "seed" => self.seed = int(value)?,
            "kmeans_restarts" => self.kmeans_restarts = int(value)? as usize,
            "kmeans_max_iter" => self.kmeans_max_iter = int(value)? as usize,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "signed_metric" => self.signed_metric = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a key-value file: one `key = value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }
}
