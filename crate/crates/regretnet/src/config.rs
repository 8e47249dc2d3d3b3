//! Flat run configuration.
//!
//! A TOML file of `key = value` pairs with the keys below; every key is also
//! a `--kebab-case` flag, and flags win over the file. Unset keys fall back
//! to the full-scale defaults, or the desk-scale ones with `desk_scale`.
//!
//! | key | meaning |
//! |-----|---------|
//! | `setting` | `I`…`XI`, `uniform`, `asymmetric`, `exp`, `irregular` |
//! | `model` | `regretnet` (default), `rochetnet`, `myersonnet` |
//! | `seed`, `out_dir`, `desk_scale` | run identity and output location |
//! | `hidden_layers`, `hidden_width` | RegretNet shape |
//! | `train_size`, `test_size`, `batch_size`, `epochs`, `learning_rate` | data and optimizer |
//! | `rho_initial`, `rho_increment`, `rho_every_epochs`, `lagrange_period` | multiplier schedule |
//! | `misreport_steps`, `misreport_step_size`, `misreport_rule`, `misreport_samples`, `mode` | inner maximization (`plain`/`adam`, `gradient`/`sample-based`) |
//! | `eval_restarts`, `eval_steps`, `eval_step_size`, `eval_profiles` | test-time regret |
//! | `menu_entries`, `kappa` | RochetNet menu size and softmax temperature (also MyersonNet κ) |
//! | `groups`, `lines`, `myerson_steps` | MyersonNet transform shape and training steps |
//! | `samples` | Monte-Carlo draws for baselines |

use std::path::{Path, PathBuf};

use regretnet_core::evaluation::RegretConfig;
use regretnet_core::myersonnet::MyersonConfig;
use regretnet_core::rochetnet::RochetConfig;
use regretnet_core::training::{AscentRule, TrainConfig, TrainMode};
use regretnet_core::valuations::{SettingId, SettingSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Test profiles used for regret at desk scale.
pub const DESK_REGRET_PROFILES: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub desk_scale: Option<bool>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub rho_initial: Option<f64>,
    #[arg(long)]
    pub rho_increment: Option<f64>,
    #[arg(long)]
    pub rho_every_epochs: Option<usize>,
    #[arg(long)]
    pub lagrange_period: Option<usize>,
    #[arg(long)]
    pub misreport_steps: Option<usize>,
    #[arg(long)]
    pub misreport_step_size: Option<f64>,
    #[arg(long)]
    pub misreport_rule: Option<String>,
    #[arg(long)]
    pub misreport_samples: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub eval_restarts: Option<usize>,
    #[arg(long)]
    pub eval_steps: Option<usize>,
    #[arg(long)]
    pub eval_step_size: Option<f64>,
    #[arg(long)]
    pub eval_profiles: Option<usize>,
    #[arg(long)]
    pub menu_entries: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub lines: Option<usize>,
    #[arg(long)]
    pub myerson_steps: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.clone().or($base.$f.clone()),)* }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Regretnet,
    Rochetnet,
    Myersonnet,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values of `self` with the set fields of `top` taking precedence.
    pub fn overridden_by(&self, top: &RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; setting, model, seed, out_dir, desk_scale, hidden_layers, hidden_width, train_size,
            test_size, batch_size, epochs, learning_rate, rho_initial, rho_increment, rho_every_epochs,
            lagrange_period, misreport_steps, misreport_step_size, misreport_rule, misreport_samples, mode,
            eval_restarts, eval_steps, eval_step_size, eval_profiles, menu_entries, kappa, groups, lines,
            myerson_steps, samples)
    }

    pub fn desk(&self) -> bool {
        self.desk_scale.unwrap_or(false)
    }

    pub fn scale_name(&self) -> &'static str {
        if self.desk() {
            "desk"
        } else {
            "full"
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn setting_spec(&self) -> CliResult<SettingSpec> {
        let name = self.setting.as_deref().ok_or_else(|| CliError::Config("no setting given".into()))?;
        let id: SettingId = name.parse().map_err(|e: regretnet_core::Error| CliError::Config(e.to_string()))?;
        id.spec().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model_kind(&self) -> CliResult<ModelKind> {
        match self.model.as_deref().unwrap_or("regretnet") {
            "regretnet" => Ok(ModelKind::Regretnet),
            "rochetnet" => Ok(ModelKind::Rochetnet),
            "myersonnet" => Ok(ModelKind::Myersonnet),
            other => Err(CliError::Config(format!("unknown model `{other}`"))),
        }
    }

    pub fn train_config(&self) -> CliResult<TrainConfig> {
        let spec = self.setting_spec()?;
        let mut c = if self.desk() { TrainConfig::desk_scale(spec) } else { TrainConfig::full_scale(spec) };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(hidden_layers, hidden_width, train_size, test_size, batch_size, epochs, learning_rate, rho_initial,
            rho_increment, rho_every_epochs, lagrange_period, misreport_steps, misreport_step_size, misreport_samples);
        c.seed = self.seed();
        if let Some(rule) = &self.misreport_rule {
            c.misreport_rule = parse_rule(rule)?;
        }
        if let Some(mode) = &self.mode {
            c.mode = match mode.as_str() {
                "gradient" => TrainMode::Gradient,
                "sample-based" | "sample_based" => TrainMode::SampleBased,
                other => return Err(CliError::Config(format!("unknown mode `{other}`"))),
            };
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn regret_config(&self) -> CliResult<RegretConfig> {
        let mut r = if self.desk() { RegretConfig::desk_scale() } else { RegretConfig::full_scale() };
        r.restarts = self.eval_restarts.unwrap_or(r.restarts);
        r.steps = self.eval_steps.unwrap_or(r.steps);
        r.step_size = self.eval_step_size.unwrap_or(r.step_size);
        if let Some(rule) = &self.misreport_rule {
            r.rule = parse_rule(rule)?;
        }
        r.seed = self.seed();
        if r.restarts == 0 {
            return Err(CliError::Config("eval_restarts must be positive".into()));
        }
        Ok(r)
    }

    /// Number of test profiles used for regret.
    pub fn regret_profiles(&self, test_size: usize) -> usize {
        self.eval_profiles.unwrap_or(if self.desk() { DESK_REGRET_PROFILES } else { test_size }).min(test_size)
    }

    pub fn test_size(&self) -> usize {
        self.test_size.unwrap_or(10_000)
    }

    pub fn rochet_config(&self) -> CliResult<RochetConfig> {
        let mut c = RochetConfig::full_scale();
        c.entries = self.menu_entries.unwrap_or(c.entries);
        c.kappa = self.kappa.unwrap_or(c.kappa);
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.batch_size = self.batch_size.unwrap_or(c.batch_size);
        c.train_size = self.train_size.unwrap_or(c.train_size);
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.seed = self.seed();
        Ok(c)
    }

    pub fn myerson_config(&self) -> CliResult<MyersonConfig> {
        let mut c = MyersonConfig::standard();
        c.groups = self.groups.unwrap_or(c.groups);
        c.lines = self.lines.unwrap_or(c.lines);
        c.kappa = self.kappa.unwrap_or(c.kappa);
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.train_size = self.train_size.unwrap_or(c.train_size);
        c.batch_size = self.batch_size.unwrap_or(c.batch_size);
        c.steps = self.myerson_steps.unwrap_or(c.steps);
        c.seed = self.seed();
        Ok(c)
    }
}

fn parse_rule(s: &str) -> CliResult<AscentRule> {
    match s {
        "plain" => Ok(AscentRule::Plain),
        "adam" => Ok(AscentRule::Adam),
        other => Err(CliError::Config(format!("unknown misreport rule `{other}`"))),
    }
}
