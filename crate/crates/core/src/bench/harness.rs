use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ground_truth_check, BenchmarkEntry};
use crate::discovery::{count_report, infer, InferConfig, Property, PropertyRecord};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::verification::{classify, VerifyConfig, VerifyOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub infer: InferConfig,
    pub verify: VerifyConfig,
    pub repetitions: usize,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub seed: u64,
    /// Run the approximate program instead of the closed form where one is
    /// registered.
    pub use_approx: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            infer: InferConfig::default(),
            verify: VerifyConfig::default(),
            repetitions: 5,
            workers: 0,
            seed: 0,
            use_approx: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub category: String,
    pub rsr: usize,
    pub verified: usize,
    pub unverified: usize,
    pub wall_time_seconds: f64,
    /// Properties of the first repetition.
    pub properties: Vec<PropertyRecord>,
    pub matched_ground_truth: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub config: BenchConfig,
    pub seed: u64,
}

struct Repetition {
    counts: (usize, usize, usize),
    seconds: f64,
    properties: Vec<(Property, Vec<VerifyOutcome>)>,
    error: Option<String>,
}

fn run_once(entry: &BenchmarkEntry, cfg: &BenchConfig, rep: usize) -> Result<Repetition> {
    let seed = derive_seed(cfg.seed, &entry.name, rep as u64);
    let icfg = InferConfig { seed, ..entry.infer_config(&cfg.infer) };
    let (oracle, closed) = match (cfg.use_approx, entry.approx_oracle()) {
        (true, Some(o)) => (o?, None),
        _ => (entry.oracle(), Some(&entry.closed_form)),
    };
    let vcfg = VerifyConfig { sample_box: icfg.sample_box, epsilon: icfg.epsilon, ..cfg.verify.clone() };
    let start = Instant::now();
    let out = infer(&oracle, &icfg)?;
    let properties: Vec<(Property, Vec<VerifyOutcome>)> = out
        .properties
        .iter()
        .map(|p| classify(p, &oracle, closed, &vcfg, derive_seed(seed, "verify", 0)))
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    let classified: Vec<Property> = properties.iter().map(|(p, _)| p.clone()).collect();
    Ok(Repetition { counts: count_report(&classified), seconds, properties, error: None })
}

fn lower_median<T: PartialOrd + Copy>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    v[(v.len() - 1) / 2]
}

fn run_entry(entry: &BenchmarkEntry, cfg: &BenchConfig) -> BenchRow {
    let reps = cfg.repetitions.max(1);
    let mut runs = Vec::with_capacity(reps);
    for rep in 0..reps {
        let attempt = catch_unwind(AssertUnwindSafe(|| run_once(entry, cfg, rep)));
        let run = match attempt {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => Repetition { counts: (0, 0, 0), seconds: 0.0, properties: Vec::new(), error: Some(e.to_string()) },
            Err(_) => Repetition {
                counts: (0, 0, 0),
                seconds: 0.0,
                properties: Vec::new(),
                error: Some("internal error".into()),
            },
        };
        runs.push(run);
    }
    let first = &runs[0];
    let props: Vec<Property> = first.properties.iter().map(|(p, _)| p.clone()).collect();
    BenchRow {
        name: entry.name.clone(),
        category: entry.category.to_string(),
        rsr: lower_median(runs.iter().map(|r| r.counts.0).collect()),
        verified: lower_median(runs.iter().map(|r| r.counts.1).collect()),
        unverified: lower_median(runs.iter().map(|r| r.counts.2).collect()),
        wall_time_seconds: lower_median(runs.iter().map(|r| r.seconds).collect()),
        properties: first.properties.iter().map(|(p, o)| p.to_record(o)).collect(),
        matched_ground_truth: ground_truth_check(entry, &props).iter().map(|g| g.text.clone()).collect(),
        error: runs.iter().find_map(|r| r.error.clone()),
    }
}

/// Run discovery and verification over the selected entries. Rows follow the
/// order of `entries` and each row depends only on its entry and the seed.
pub fn run_bench(entries: &[BenchmarkEntry], cfg: &BenchConfig) -> Result<BenchReport> {
    if entries.is_empty() {
        return Err(Error::InvalidConfig("selection is empty".into()));
    }
    let work = || entries.par_iter().map(|e| run_entry(e, cfg)).collect::<Vec<_>>();
    let rows = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    Ok(BenchReport { rows, config: cfg.clone(), seed: cfg.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{lookup, select, registry, Selection};

    fn quick() -> BenchConfig {
        BenchConfig {
            repetitions: 1,
            verify: VerifyConfig { n_test: 200, hp_points: 16, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn linear_row_verifies_additivity() {
        let report = run_bench(&[lookup("linear").unwrap()], &quick()).unwrap();
        let row = &report.rows[0];
        assert!(row.verified >= 1, "{row:?}");
        assert!(row.rsr <= row.verified);
        assert!(!row.matched_ground_truth.is_empty());
    }

    #[test]
    fn rows_keep_registry_order() {
        let entries = select(&registry(), &Selection::Names(vec!["squared".into(), "linear".into(), "floor".into()])).unwrap();
        let report = run_bench(&entries, &BenchConfig { workers: 2, ..quick() }).unwrap();
        let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["linear", "squared", "floor"]);
    }

    #[test]
    fn median_is_lower_middle() {
        assert_eq!(lower_median(vec![3, 1, 2]), 2);
        assert_eq!(lower_median(vec![4, 1, 2, 3]), 2);
    }
}
