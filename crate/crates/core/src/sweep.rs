//! Hyperparameter grid protocol: full grid, random pick, repeated runs.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ceil_fraction, generate, split, SyntheticSpec};
use crate::dc_loss::{classify_config, DCParams, LossConfigKind};
use crate::error::{Error, Result};
use crate::neuron::{train, EpochTrace, TrainConfig};
use crate::rng::{derive_seed, seeded};

/// Test accuracy a run must reach for `epochs_to_threshold` to be recorded.
pub const ACCURACY_THRESHOLD: f64 = 0.9;

/// Inclusive axis `[lo, hi]` sampled at `steps` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub const fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Axis { lo, hi, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub d: Axis,
    pub p_d: Axis,
    pub r: Axis,
    pub c: Axis,
    pub pick_fraction: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            d: Axis::new(0.0, 5.0, 11),
            p_d: Axis::new(0.1, 0.9, 9),
            r: Axis::new(0.1, 12.0, 24),
            c: Axis::new(0.0, 12.0, 25),
            pick_fraction: 0.025,
            runs: 10,
            seed: 0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("d", self.d), ("p_d", self.p_d), ("r", self.r), ("c", self.c)] {
            if axis.steps == 0 {
                return Err(Error::validation(format!("{name} axis needs >= 1 step")));
            }
            if !(axis.lo <= axis.hi) {
                return Err(Error::validation(format!("{name} axis has lo > hi")));
            }
        }
        if !(self.pick_fraction > 0.0 && self.pick_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "pick_fraction must lie in (0, 1], got {}",
                self.pick_fraction
            )));
        }
        if self.runs == 0 {
            return Err(Error::validation("runs must be >= 1"));
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.d.steps * self.p_d.steps * self.r.steps * self.c.steps
    }
}

/// Cartesian product of the four axes, `d` outermost and `c` innermost.
pub fn build_grid(spec: &GridSpec) -> Result<Vec<DCParams>> {
    spec.validate()?;
    let (ds, ps, rs, cs) = (spec.d.values(), spec.p_d.values(), spec.r.values(), spec.c.values());
    let mut grid = Vec::with_capacity(spec.grid_size());
    for &d in &ds {
        for &p in &ps {
            for &r in &rs {
                for &c in &cs {
                    grid.push(DCParams::new(r, c, d, p)?);
                }
            }
        }
    }
    Ok(grid)
}

/// `⌈pick_fraction·|grid|⌉` distinct configs, kept in grid order.
pub fn sample_grid(grid: &[DCParams], pick_fraction: f64, seed: u64) -> Result<Vec<DCParams>> {
    if !(pick_fraction > 0.0 && pick_fraction <= 1.0) {
        return Err(Error::validation(format!(
            "pick_fraction must lie in (0, 1], got {pick_fraction}"
        )));
    }
    let k = ceil_fraction(pick_fraction, grid.len()).min(grid.len());
    let mut picked = index::sample(&mut seeded(seed), grid.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| grid[i]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub final_train_loss: Option<f64>,
    pub final_test_accuracy: Option<f64>,
    /// First epoch whose test accuracy reached [`ACCURACY_THRESHOLD`].
    pub epochs_to_threshold: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub config_id: usize,
    pub params: DCParams,
    pub kind: LossConfigKind,
    pub runs: Vec<RunSummary>,
    /// Runs dropped from the aggregates because training failed.
    pub excluded_runs: usize,
    pub mean_final_accuracy: Option<f64>,
    pub std_final_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub per_config: Vec<ConfigResult>,
    /// Family label to the `config_id` with the best mean final accuracy.
    pub family_best: BTreeMap<String, usize>,
}

/// Families that receive a best-config entry. Decay-only configs are
/// recorded but not ranked.
pub const RANKED_FAMILIES: [LossConfigKind; 3] = [
    LossConfigKind::NoDC,
    LossConfigKind::GrowingDC,
    LossConfigKind::GrowDecayDC,
];

/// Seed for run `run` of config `config_index`.
pub fn run_seed(seed: u64, config_index: usize, run: usize) -> u64 {
    derive_seed(seed, &[config_index as u64, run as u64])
}

fn one_run(
    params: &DCParams,
    data_spec: &SyntheticSpec,
    train_cfg: &TrainConfig,
    run: usize,
    seed: u64,
) -> RunSummary {
    let outcome = (|| -> Result<Vec<EpochTrace>> {
        let data = generate(&data_spec.with_seed(derive_seed(seed, &[0])))?;
        let (tr, te) = split(&data, data_spec.split_fraction, derive_seed(seed, &[1]))?;
        let cfg = TrainConfig {
            seed: derive_seed(seed, &[2]),
            ..train_cfg.clone()
        };
        train(params, &tr, &te, &cfg)
    })();
    match outcome {
        Ok(trace) => {
            let last = trace.last().expect("at least one epoch");
            RunSummary {
                run,
                seed,
                final_train_loss: Some(last.train_loss),
                final_test_accuracy: Some(last.test_accuracy),
                epochs_to_threshold: trace
                    .iter()
                    .find(|t| t.test_accuracy >= ACCURACY_THRESHOLD)
                    .map(|t| t.epoch),
                error: None,
            }
        }
        Err(e) => RunSummary {
            run,
            seed,
            final_train_loss: None,
            final_test_accuracy: None,
            epochs_to_threshold: None,
            error: Some(e.to_string()),
        },
    }
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Trains every config `runs` times on fresh data.
///
/// Run `k` of config `i` uses `run_seed(seed, i, k)` for data generation,
/// the split and SGD shuffling, so both the dataset and the batch order vary
/// between runs. Work is spread over the current rayon pool; results are
/// gathered in `(config, run)` order so the output does not depend on the
/// schedule.
pub fn run_sweep(
    configs: &[DCParams],
    data_spec: &SyntheticSpec,
    train_cfg: &TrainConfig,
    runs: usize,
    seed: u64,
) -> Result<SweepResult> {
    if configs.is_empty() {
        return Err(Error::validation("sweep needs at least one config"));
    }
    if runs == 0 {
        return Err(Error::validation("runs must be >= 1"));
    }
    data_spec.validate()?;

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|i| (0..runs).map(move |k| (i, k)))
        .collect();
    let summaries: Vec<RunSummary> = jobs
        .par_iter()
        .map(|&(i, k)| one_run(&configs[i], data_spec, train_cfg, k, run_seed(seed, i, k)))
        .collect();

    let per_config: Vec<ConfigResult> = summaries
        .chunks(runs)
        .zip(configs)
        .enumerate()
        .map(|(config_id, (runs, params))| {
            let accs: Vec<f64> = runs.iter().filter_map(|r| r.final_test_accuracy).collect();
            let stats = mean_std(&accs);
            ConfigResult {
                config_id,
                params: *params,
                kind: classify_config(params),
                runs: runs.to_vec(),
                excluded_runs: runs.len() - accs.len(),
                mean_final_accuracy: stats.map(|s| s.0),
                std_final_accuracy: stats.map(|s| s.1),
            }
        })
        .collect();

    let mut family_best = BTreeMap::new();
    for family in RANKED_FAMILIES {
        let mut best: Option<(usize, f64)> = None;
        for cfg in per_config.iter().filter(|c| c.kind == family) {
            if let Some(mean) = cfg.mean_final_accuracy {
                // Strict comparison keeps the earliest config on ties.
                if best.is_none_or(|(_, b)| mean > b) {
                    best = Some((cfg.config_id, mean));
                }
            }
        }
        if let Some((id, _)) = best {
            family_best.insert(family.label().to_string(), id);
        }
    }
    Ok(SweepResult {
        per_config,
        family_best,
    })
}

pub const SWEEP_CSV_HEADER: &str = "config_id,r,c,d,p_d,kind,run,final_loss,final_accuracy";

impl SweepResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes") + "\n"
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fmt_err = |e: csv::Error| Error::Format {
            line: 0,
            message: e.to_string(),
        };
        w.write_record(SWEEP_CSV_HEADER.split(',')).map_err(fmt_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for cfg in &self.per_config {
            for run in &cfg.runs {
                w.write_record([
                    cfg.config_id.to_string(),
                    cfg.params.r().to_string(),
                    cfg.params.c().to_string(),
                    cfg.params.d().to_string(),
                    cfg.params.p_d().to_string(),
                    cfg.kind.label().to_string(),
                    run.run.to_string(),
                    opt(run.final_train_loss),
                    opt(run.final_test_accuracy),
                ])
                .map_err(fmt_err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    /// Best config per ranked family as a plain-text table.
    pub fn comparison_table(&self) -> String {
        let mut out = String::from(
            "family          config      r      c      d    p_d   mean_acc    std_acc\n",
        );
        for family in RANKED_FAMILIES {
            let label = family.label();
            match self.family_best.get(label) {
                Some(&id) => {
                    let c = &self.per_config[id];
                    out.push_str(&format!(
                        "{label:<14} {id:>7} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>10.4} {:>10.4}\n",
                        c.params.r(),
                        c.params.c(),
                        c.params.d(),
                        c.params.p_d(),
                        c.mean_final_accuracy.unwrap_or(f64::NAN),
                        c.std_final_accuracy.unwrap_or(f64::NAN),
                    ));
                }
                None => out.push_str(&format!("{label:<14} {:>7}\n", "-")),
            }
        }
        out
    }
}

/// Per-epoch mean and sample standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub epochs: Vec<usize>,
    pub mean_train_loss: Vec<f64>,
    pub std_train_loss: Vec<f64>,
    pub mean_test_accuracy: Vec<f64>,
    pub std_test_accuracy: Vec<f64>,
}

pub fn aggregate_curves(traces: &[Vec<EpochTrace>]) -> Result<CurveStats> {
    let first = traces
        .first()
        .ok_or_else(|| Error::validation("no traces to aggregate"))?;
    if traces.iter().any(|t| t.len() != first.len()) {
        return Err(Error::validation("traces have different lengths"));
    }
    let mut stats = CurveStats {
        epochs: first.iter().map(|t| t.epoch).collect(),
        mean_train_loss: Vec::with_capacity(first.len()),
        std_train_loss: Vec::with_capacity(first.len()),
        mean_test_accuracy: Vec::with_capacity(first.len()),
        std_test_accuracy: Vec::with_capacity(first.len()),
    };
    for e in 0..first.len() {
        let losses: Vec<f64> = traces.iter().map(|t| t[e].train_loss).collect();
        let accs: Vec<f64> = traces.iter().map(|t| t[e].test_accuracy).collect();
        let (ml, sl) = mean_std(&losses).expect("non-empty");
        let (ma, sa) = mean_std(&accs).expect("non-empty");
        stats.mean_train_loss.push(ml);
        stats.std_train_loss.push(sl);
        stats.mean_test_accuracy.push(ma);
        stats.std_test_accuracy.push(sa);
    }
    Ok(stats)
}
