//! Subcommand implementations. Each returns the paths it wrote.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use regretnet_core::baselines::{
    bundled_myerson, itemwise_myerson, monte_carlo_revenue, myerson_optimal, spa_revenue, PostedPriceRule, PriceScope,
    ReserveAuction,
};
use regretnet_core::evaluation::{
    delta_bound, evaluate, grid_regret, uniform_grid, BoundInputs, MetricsReport,
};
use regretnet_core::lpexport::{build_lp, LpCounts, DEFAULT_VARIABLE_CAP};
use regretnet_core::mechanism::Mechanism;
use regretnet_core::myersonnet::train_myersonnet;
use regretnet_core::rng::{self, streams};
use regretnet_core::rochetnet::train_rochetnet;
use regretnet_core::training::{test_set, train_with, Clock, TrainError};
use regretnet_core::valuations::{ProfileBatch, SettingSpec};
use serde::Serialize;

use crate::checkpoint::{self, Model};
use crate::config::{ModelKind, RunConfig};
use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::lpfile::{write_lp, CountingSink};
use crate::write_json;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
/// Grid points per axis for exact regret of menu and transform mechanisms.
pub const GRID_POINTS_2D: usize = 51;
pub const GRID_POINTS_1D: usize = 101;

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn test_profiles(spec: &SettingSpec, count: usize, seed: u64) -> ProfileBatch {
    spec.sample_batch(count, &mut rng::stream(seed, streams::TEST_DATA))
}

#[derive(Serialize)]
struct LossRecord {
    epoch: usize,
    loss: f64,
}

/// Exact regret against a grid over the support box, for mechanisms whose
/// outcomes are piecewise constant in the bids.
pub fn support_grid_regret<M: Mechanism + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    profiles: &ProfileBatch,
) -> regretnet_core::Result<Option<f64>> {
    let bounds = spec.support_box(0);
    let points = match bounds.len() {
        1 => GRID_POINTS_1D,
        2 => GRID_POINTS_2D,
        _ => return Ok(None),
    };
    if (1..spec.n).any(|i| spec.support_box(i) != bounds) || bounds.iter().any(|b| !b.1.is_finite()) {
        return Ok(None);
    }
    let grid = uniform_grid(&bounds, points);
    Ok(Some(grid_regret(mech, profiles, &grid)?.mean))
}

fn report_for(
    mech: &dyn Mechanism,
    name: &str,
    spec: &SettingSpec,
    run: &RunConfig,
    exact_grid: bool,
) -> CliResult<MetricsReport> {
    let test = test_profiles(spec, run.test_size(), run.seed());
    let rc = run.regret_config()?;
    let k = run.regret_profiles(test.rows());
    let mut report = evaluate(mech, spec, &test, k, &rc)?;
    report.mechanism = name.into();
    report.scale = run.scale_name().into();
    if exact_grid {
        if let Some(g) = support_grid_regret(mech, spec, &test.range(0, k))? {
            report.extra.insert("grid_regret".into(), g);
        }
    }
    Ok(report)
}

fn write_report(dir: &Path, report: &MetricsReport) -> CliResult<Vec<PathBuf>> {
    let json = dir.join(METRICS_FILE);
    write_json(&json, report)?;
    let csv = dir.join(METRICS_CSV);
    csvio::write_metrics_row(&csv, report)?;
    Ok(vec![json, csv])
}

pub fn cmd_train(run: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dir = run.out_dir();
    create_dir(&dir)?;
    let spec = run.setting_spec()?;
    let ckpt = dir.join(CHECKPOINT_FILE);
    let mut written = vec![ckpt.clone(), checkpoint::sidecar_path(&ckpt)];
    let hist = dir.join(HISTORY_FILE);
    match run.model_kind()? {
        ModelKind::Regretnet => {
            let config = run.train_config()?;
            let clock = WallClock(Instant::now());
            let trained = match train_with(&config, &clock, &mut |r| {
                eprintln!("epoch {:>3}: rev {:.4} rgt {:.5} rho {}", r.epoch, r.rev, r.rgt_mean, r.rho)
            }) {
                Ok(t) => t,
                Err(TrainError::Invalid(e)) => return Err(CliError::Config(e.to_string())),
                Err(TrainError::Aborted(abort)) => {
                    checkpoint::save(&ckpt, &Model::Regret(abort.last_good.net.clone()), &spec)?;
                    return Err(abort.error.clone().into());
                }
            };
            checkpoint::save(&ckpt, &Model::Regret(trained.net.clone()), &spec)?;
            write_json(&hist, &trained.history)?;
            let test = test_set(&config);
            let rc = run.regret_config()?;
            let mut report = evaluate(&trained.net, &spec, &test, run.regret_profiles(test.rows()), &rc)?;
            report.mechanism = "regretnet".into();
            report.scale = run.scale_name().into();
            let inputs = BoundInputs::from_params(&trained.net.arch, &trained.net.params, config.train_size);
            report.bound_proxy = delta_bound(&inputs).ok();
            report.train_config = Some(config);
            written.push(hist);
            written.extend(write_report(&dir, &report)?);
        }
        ModelKind::Rochetnet => {
            let config = run.rochet_config()?;
            let (net, losses) = train_rochetnet(&spec, &config)?;
            let model = Model::Menu(net);
            checkpoint::save(&ckpt, &model, &spec)?;
            let records: Vec<LossRecord> =
                losses.iter().enumerate().map(|(e, &loss)| LossRecord { epoch: e + 1, loss }).collect();
            write_json(&hist, &records)?;
            let Model::Menu(net) = &model else { unreachable!() };
            let menu = dir.join("menu.csv");
            csvio::write_menu(&menu, net)?;
            let report = report_for(net, "rochetnet", &spec, run, true)?;
            written.extend([hist, menu]);
            written.extend(write_report(&dir, &report)?);
        }
        ModelKind::Myersonnet => {
            let config = run.myerson_config()?;
            let (net, losses) = train_myersonnet(&spec, &config)?;
            let every = (losses.len() / 100).max(1);
            let records: Vec<LossRecord> = losses
                .iter()
                .enumerate()
                .filter(|(k, _)| (k + 1) % every == 0)
                .map(|(k, &loss)| LossRecord { epoch: k + 1, loss })
                .collect();
            write_json(&hist, &records)?;
            let supports: Vec<(f64, f64)> = (0..spec.n)
                .map(|i| {
                    let (lo, hi) = spec.support_box(i)[0];
                    (lo, if hi.is_finite() { hi } else { 4.0 * spec.mean(i, 0) })
                })
                .collect();
            let lines = dir.join("transform_lines.csv");
            let points = dir.join("transform_points.csv");
            csvio::write_transforms(&lines, &points, &net, &supports)?;
            let report = report_for(&net, "myersonnet", &spec, run, true)?;
            checkpoint::save(&ckpt, &Model::Myerson(net), &spec)?;
            written.extend([hist, lines, points]);
            written.extend(write_report(&dir, &report)?);
        }
    }
    Ok(written)
}

pub fn cmd_evaluate(
    run: &RunConfig,
    checkpoint_path: Option<&Path>,
    posted_price: Option<f64>,
    scope: PriceScope,
) -> CliResult<Vec<PathBuf>> {
    let dir = run.out_dir();
    create_dir(&dir)?;
    let report = match (checkpoint_path, posted_price) {
        (Some(path), None) => {
            let (model, spec) = checkpoint::load(path)?;
            let exact = !matches!(model, Model::Regret(_));
            let mut report = report_for(model.mechanism(), model.name(), &spec, run, exact)?;
            if let Model::Regret(net) = &model {
                let inputs = BoundInputs::from_params(&net.arch, &net.params, run.train_size.unwrap_or(5_000));
                report.bound_proxy = delta_bound(&inputs).ok();
            }
            report
        }
        (None, Some(price)) => {
            let spec = run.setting_spec()?;
            let rule = PostedPriceRule::new(price, scope).map_err(|e| CliError::Config(e.to_string()))?;
            let mech = ReserveAuction::new(&spec, rule).map_err(|e| CliError::Config(e.to_string()))?;
            report_for(&mech, "posted-price", &spec, run, true)?
        }
        _ => return Err(CliError::Config("evaluate needs exactly one of --checkpoint or --posted-price".into())),
    };
    write_report(&dir, &report)
}

/// Revenues of every applicable baseline, in a metrics report whose
/// `revenue` is the best of them.
pub fn baseline_report(spec: &SettingSpec, samples: usize, seed: u64, scale: &str) -> CliResult<MetricsReport> {
    let mut extra = std::collections::BTreeMap::new();
    if let Ok((rev, reserves)) = itemwise_myerson(spec, samples, seed) {
        extra.insert("itemwise_myerson".to_string(), rev);
        for (j, r) in reserves.iter().enumerate() {
            extra.insert(format!("itemwise_reserve_{j}"), *r);
        }
    }
    let (rev, reserve) = bundled_myerson(spec, samples, seed)?;
    extra.insert("bundled_myerson".into(), rev);
    extra.insert("bundled_reserve".into(), reserve);
    if let Ok(rev) = spa_revenue(spec, samples, seed) {
        extra.insert("spa".into(), rev);
    }
    if let Ok(net) = myerson_optimal(spec) {
        extra.insert("myerson_optimal".into(), monte_carlo_revenue(&net, spec, samples, seed)?);
    }
    let best = ["itemwise_myerson", "bundled_myerson", "spa", "myerson_optimal"]
        .iter()
        .filter_map(|k| extra.get(*k))
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Ok(MetricsReport {
        setting: spec.id.as_str().into(),
        mechanism: "baselines".into(),
        scale: scale.into(),
        test_size: samples,
        revenue: best,
        revenue_stderr: 0.0,
        regret_per_bidder: vec![0.0; spec.n],
        regret_mean: 0.0,
        regret_profiles: 0,
        regret_config: None,
        ir_violation: 0.0,
        bound_proxy: None,
        train_config: None,
        extra,
    })
}

pub const DEFAULT_BASELINE_SAMPLES: usize = 1_000_000;

pub fn cmd_baseline(run: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dir = run.out_dir();
    create_dir(&dir)?;
    let spec = run.setting_spec()?;
    let samples = run.samples.unwrap_or(DEFAULT_BASELINE_SAMPLES);
    let report = baseline_report(&spec, samples, run.seed(), run.scale_name())?;
    let path = dir.join("baseline.json");
    write_json(&path, &report)?;
    Ok(vec![path])
}

/// Allocation probability of every item over a `grid × grid` lattice of the
/// single bidder's support. Returns `(xs, ys, per-item grids)`.
pub fn heatmap(model: &Model, spec: &SettingSpec, grid: usize) -> CliResult<(Vec<f64>, Vec<f64>, Vec<Vec<Vec<f64>>>)> {
    let mech = model.mechanism();
    if mech.n() != 1 || spec.m != 2 || mech.width() != 2 || grid < 2 {
        return Err(CliError::Config("heatmaps need a single-bidder two-item model and a grid of at least 2".into()));
    }
    let b = spec.support_box(0);
    if b.iter().any(|x| !x.1.is_finite()) {
        return Err(CliError::Config("heatmaps need a bounded support".into()));
    }
    let axis = |(lo, hi): (f64, f64)| (0..grid).map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64).collect::<Vec<_>>();
    let (xs, ys) = (axis(b[0]), axis(b[1]));
    let data: Vec<f64> = ys.iter().flat_map(|&y| xs.iter().flat_map(move |&x| [x, y])).collect();
    let batch = ProfileBatch::new(1, 2, spec.class, data)?;
    let out = mech.outcomes(&batch)?;
    let grids = (0..2)
        .map(|item| (0..grid).map(|r| (0..grid).map(|c| out.allocation_row(r * grid + c, 0)[item]).collect()).collect())
        .collect();
    Ok((xs, ys, grids))
}

pub fn cmd_heatmap(checkpoint_path: &Path, grid: usize, out: &Path) -> CliResult<Vec<PathBuf>> {
    create_dir(out)?;
    let (model, spec) = checkpoint::load(checkpoint_path)?;
    let (xs, ys, grids) = heatmap(&model, &spec, grid)?;
    let mut written = Vec::new();
    for (item, g) in grids.iter().enumerate() {
        let path = out.join(format!("heatmap_item{item}.csv"));
        csvio::write_heatmap(&path, &xs, &ys, g)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct LpStats {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub variables: u64,
    pub ic: u64,
    pub ir: u64,
    pub ic_ir: u64,
    pub feasibility: u64,
    pub constraints: u64,
}

impl From<(usize, usize, usize, LpCounts)> for LpStats {
    fn from((n, m, d, c): (usize, usize, usize, LpCounts)) -> Self {
        Self {
            n,
            m,
            d,
            variables: c.variables,
            ic: c.ic,
            ir: c.ir,
            ic_ir: c.ic_ir(),
            feasibility: c.feasibility,
            constraints: c.constraints(),
        }
    }
}

pub struct LpRequest {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub support: (f64, f64),
    pub stats_only: bool,
    pub out: Option<PathBuf>,
    pub cap: Option<u64>,
}

/// Counts, plus the LP file and a stats JSON next to it unless
/// `stats_only`.
pub fn cmd_lpexport(req: &LpRequest) -> CliResult<(LpStats, Vec<PathBuf>)> {
    let counts = LpCounts::new(req.n, req.m, req.d).map_err(|e| CliError::Config(e.to_string()))?;
    let stats = LpStats::from((req.n, req.m, req.d, counts));
    if req.stats_only {
        return Ok((stats, Vec::new()));
    }
    let model = build_lp(req.n, req.m, req.d, req.support, req.cap.unwrap_or(DEFAULT_VARIABLE_CAP))?;
    let path = req.out.clone().ok_or_else(|| CliError::Config("lpexport needs --out unless --stats-only".into()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    write_lp(&model, &mut w).map_err(|e| CliError::io(&path, e))?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    let stats_path = checkpoint::sidecar_path(&path);
    write_json(&stats_path, &stats)?;
    Ok((stats, vec![path, stats_path]))
}

/// Streams the LP into a counter instead of a file.
pub fn lp_dry_run(n: usize, m: usize, d: usize, cap: u64) -> CliResult<CountingSink> {
    let model = build_lp(n, m, d, (0.0, 1.0), cap)?;
    let mut sink = CountingSink::default();
    write_lp(&model, &mut sink).map_err(|e| CliError::io("<counter>", e))?;
    Ok(sink)
}

pub fn cmd_sample(run: &RunConfig, count: usize) -> CliResult<Vec<PathBuf>> {
    let dir = run.out_dir();
    create_dir(&dir)?;
    let spec = run.setting_spec()?;
    let batch = test_profiles(&spec, count, run.seed());
    let path = dir.join("profiles.csv");
    csvio::write_profiles(&path, &batch)?;
    Ok(vec![path])
}
