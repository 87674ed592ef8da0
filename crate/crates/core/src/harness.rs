//! Benchmark and ablation runner with per-run rows, normalization against a
//! baseline configuration, and mean/median summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{load_problem, ProblemDomain};
use crate::search::{itags, itags_sequential, RunMetrics, SearchConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Itags,
    Sequential,
}

/// A solver configuration with a report label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub search: SearchConfig,
}

impl NamedConfig {
    pub fn itags(name: impl Into<String>, search: SearchConfig) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::Itags,
            search,
        }
    }

    pub fn sequential(name: impl Into<String>, search: SearchConfig) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::Sequential,
            search,
        }
    }

    pub fn run(&self, domain: &ProblemDomain) -> Result<RunMetrics> {
        let outcome = match self.algorithm {
            Algorithm::Itags => itags(domain, &self.search)?,
            Algorithm::Sequential => itags_sequential(domain, &self.search)?,
        };
        Ok(outcome.metrics)
    }
}

/// Reads a JSON list of [`NamedConfig`]s.
pub fn parse_configs(text: &str) -> Result<Vec<NamedConfig>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let configs: Vec<NamedConfig> = serde_path_to_error::deserialize(de)?;
    if configs.is_empty() {
        return Err(Error::Config("config list is empty".into()));
    }
    for c in &configs {
        c.search.validate()?;
    }
    Ok(configs)
}

/// Every `*.json` problem in `dir`, sorted by file name.
pub fn load_problem_dir(dir: &Path) -> Result<Vec<(String, ProblemDomain)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let text = std::fs::read_to_string(&p)?;
            Ok((name, load_problem(&text)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub config: String,
    pub solved: bool,
    pub compute_seconds: f64,
    pub nodes_expanded: u64,
    pub nodes_visited: u64,
    pub makespan: Option<f64>,
    pub normalized_compute_seconds: Option<f64>,
    pub normalized_nodes_expanded: Option<f64>,
    pub normalized_nodes_visited: Option<f64>,
    pub normalized_makespan: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Self {
            mean: Some(v.iter().sum::<f64>() / n as f64),
            median: Some(median),
        }
    }
}

/// Aggregates for one configuration; metric statistics cover solved runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub config: String,
    pub runs: usize,
    pub solved: usize,
    pub compute_seconds: Stat,
    pub nodes_expanded: Stat,
    pub nodes_visited: Stat,
    pub makespan: Stat,
    pub normalized_makespan: Stat,
    pub normalized_nodes_visited: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub configs: Vec<String>,
    pub baseline: String,
    pub rows: Vec<ReportRow>,
}

impl BenchmarkReport {
    pub fn rows_for<'a>(&'a self, config: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.config == config)
    }

    pub fn row(&self, problem: &str, config: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.problem == problem && r.config == config)
    }

    pub fn summary(&self) -> Vec<ConfigSummary> {
        self.configs
            .iter()
            .map(|c| {
                let rows: Vec<&ReportRow> = self.rows_for(c).collect();
                let solved: Vec<&&ReportRow> = rows.iter().filter(|r| r.solved).collect();
                let stat = |f: &dyn Fn(&ReportRow) -> Option<f64>| {
                    Stat::of(&solved.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
                };
                ConfigSummary {
                    config: c.clone(),
                    runs: rows.len(),
                    solved: solved.len(),
                    compute_seconds: stat(&|r| Some(r.compute_seconds)),
                    nodes_expanded: stat(&|r| Some(r.nodes_expanded as f64)),
                    nodes_visited: stat(&|r| Some(r.nodes_visited as f64)),
                    makespan: stat(&|r| r.makespan),
                    normalized_makespan: stat(&|r| r.normalized_makespan),
                    normalized_nodes_visited: stat(&|r| r.normalized_nodes_visited),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

fn relative(value: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| value / baseline - 1.0)
}

fn normalize(rows: &mut [ReportRow], baseline: &str) {
    let reference: Vec<ReportRow> = rows.iter().filter(|r| r.config == baseline).cloned().collect();
    for row in rows.iter_mut() {
        let Some(base) = reference.iter().find(|b| b.problem == row.problem) else {
            continue;
        };
        if !base.solved {
            continue;
        }
        row.normalized_compute_seconds = relative(row.compute_seconds, base.compute_seconds);
        row.normalized_nodes_expanded = relative(row.nodes_expanded as f64, base.nodes_expanded as f64);
        row.normalized_nodes_visited = relative(row.nodes_visited as f64, base.nodes_visited as f64);
        row.normalized_makespan = match (row.makespan, base.makespan) {
            (Some(m), Some(b)) => relative(m, b),
            _ => None,
        };
    }
}

/// Runs every configuration on every problem. Failed runs become unsolved
/// rows. Metrics are normalized against the configuration named
/// `baseline`, or the first configuration when `None`.
pub fn run_benchmark(
    problems: &[(String, ProblemDomain)],
    configs: &[NamedConfig],
    baseline: Option<&str>,
) -> Result<BenchmarkReport> {
    let Some(first) = configs.first() else {
        return Err(Error::Config("no configurations to run".into()));
    };
    let baseline = baseline.unwrap_or(&first.name).to_string();
    if !configs.iter().any(|c| c.name == baseline) {
        return Err(Error::Config(format!(
            "baseline {baseline} is not a configured run"
        )));
    }
    let mut rows = Vec::with_capacity(problems.len() * configs.len());
    for (name, domain) in problems {
        for config in configs {
            let metrics = config.run(domain).unwrap_or_else(|e| {
                log::warn!("{name} / {}: {e}", config.name);
                RunMetrics::default()
            });
            log::info!(
                "{name} / {}: solved={} makespan={:?} visited={}",
                config.name,
                metrics.solved,
                metrics.makespan,
                metrics.nodes_visited
            );
            rows.push(ReportRow {
                problem: name.clone(),
                config: config.name.clone(),
                solved: metrics.solved,
                compute_seconds: metrics.compute_seconds,
                nodes_expanded: metrics.nodes_expanded,
                nodes_visited: metrics.nodes_visited,
                makespan: metrics.makespan,
                normalized_compute_seconds: None,
                normalized_nodes_expanded: None,
                normalized_nodes_visited: None,
                normalized_makespan: None,
            });
        }
    }
    normalize(&mut rows, &baseline);
    Ok(BenchmarkReport {
        configs: configs.iter().map(|c| c.name.clone()).collect(),
        baseline,
        rows,
    })
}

/// Label for an ablation run. `alpha` weights APR; the second tag is the
/// same run under the convention where the weight multiplies NSQ.
pub fn ablation_label(alpha: f64) -> String {
    format!("alpha_apr={alpha}/alpha_prose={}", 1.0 - alpha)
}

/// [`run_benchmark`] over ITAGS configurations that differ only in alpha.
/// Normalized against alpha 0.5 when present.
pub fn run_ablation(
    problems: &[(String, ProblemDomain)],
    alphas: &[f64],
    base: &SearchConfig,
) -> Result<BenchmarkReport> {
    let configs: Vec<NamedConfig> = alphas
        .iter()
        .map(|&alpha| {
            let search = SearchConfig {
                alpha,
                ..base.clone()
            };
            search.validate()?;
            Ok(NamedConfig::itags(ablation_label(alpha), search))
        })
        .collect::<Result<_>>()?;
    let baseline = alphas.contains(&0.5).then(|| ablation_label(0.5));
    run_benchmark(problems, &configs, baseline.as_deref())
}
