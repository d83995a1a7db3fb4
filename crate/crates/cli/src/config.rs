//! Run configuration: a TOML file with `[dataset]`, `[network]`, `[train]`
//! and `[design.*]` sections, plus command-line overrides.

use std::path::{Path, PathBuf};

use condnet::data::SplitStrategy;
use condnet::design::{ProportionConfig, ScaleConfig, SqueezeConfig};
use condnet::seed::derive;
use condnet::trainer::TrainConfig;
use condnet::ActivationKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    /// IDX files reduced to Haar wavelet coefficients chosen by pivoted QR.
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default = "default_wavelets")]
        wavelets: usize,
        /// Keep only the first this many training images.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_subset: Option<usize>,
        #[serde(default = "mnist_split")]
        split: SplitStrategy,
    },
    /// UCI Adult census files.
    Adult {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "adult_split")]
        split: SplitStrategy,
    },
}

fn default_wavelets() -> usize {
    200
}

fn mnist_split() -> SplitStrategy {
    SplitStrategy::Stratified { per_class: 1000 }
}

fn adult_split() -> SplitStrategy {
    SplitStrategy::Fraction { fraction: 0.1 }
}

impl DatasetSource {
    pub fn split(&self) -> &SplitStrategy {
        match self {
            DatasetSource::Mnist { split, .. } | DatasetSource::Adult { split, .. } => split,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: ActivationKind,
}

fn default_activation() -> ActivationKind {
    ActivationKind::TunableErf
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeSection {
    pub tau: f64,
    pub include_output_layer: bool,
    pub retrain_epochs: f64,
    /// Round cap for `squeeze-loop`.
    pub max_rounds: usize,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        let base = SqueezeConfig::default();
        Self {
            tau: base.tau,
            include_output_layer: base.include_output_layer,
            retrain_epochs: base.retrain_epochs,
            max_rounds: 10,
        }
    }
}

impl SqueezeSection {
    pub fn config(&self) -> SqueezeConfig {
        SqueezeConfig {
            tau: self.tau,
            include_output_layer: self.include_output_layer,
            retrain_epochs: self.retrain_epochs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub proportion: ProportionConfig,
    pub scale: ScaleConfig,
    pub squeeze: SqueezeSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Every other seed in the run is derived from it.
    #[serde(default)]
    pub seed: u64,
    /// Run directory.
    pub out: PathBuf,
    pub dataset: DatasetSource,
    pub network: NetworkSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub design: DesignSection,
}

/// Values given on the command line, applied over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub q: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Seed path tags under the master seed.
mod tag {
    pub const SPLIT: u64 = 0;
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const PROPORTION: u64 = 3;
    pub const SCALE: u64 = 4;
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        match &mut self.dataset {
            DatasetSource::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => {
                fix(train_images);
                fix(train_labels);
                fix(test_images);
                fix(test_labels);
            }
            DatasetSource::Adult { train, test, .. } => {
                fix(train);
                fix(test);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tau {
            self.design.proportion.tau = t;
            self.design.squeeze.tau = t;
        }
        if let Some(e) = o.eta {
            self.design.proportion.eta = e;
            self.design.scale.eta = e;
        }
        if let Some(b) = &o.betas {
            self.design.scale.betas = b.clone();
        }
        if let Some(q) = o.q {
            self.design.scale.repeats = q;
        }
        if let Some(j) = o.jobs {
            self.design.scale.jobs = j;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        self.derive_seeds();
    }

    /// Overwrites the per-block seeds with values derived from `seed`.
    pub fn derive_seeds(&mut self) {
        self.train.shuffle_seed = derive(self.seed, &[tag::SHUFFLE]);
        self.design.proportion.seed = derive(self.seed, &[tag::PROPORTION]);
        self.design.scale.seed = derive(self.seed, &[tag::SCALE]);
    }

    pub fn split_seed(&self) -> u64 {
        derive(self.seed, &[tag::SPLIT])
    }

    pub fn init_seed(&self) -> u64 {
        derive(self.seed, &[tag::INIT])
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: &dyn std::fmt::Display| CliError::Validation(e.to_string());
        self.train.validate().map_err(|e| invalid(&e))?;
        self.design.proportion.validate().map_err(|e| invalid(&e))?;
        self.design.scale.validate().map_err(|e| invalid(&e))?;
        let sq = &self.design.squeeze;
        if !(sq.tau > 1.0) || !sq.tau.is_finite() {
            return Err(CliError::Validation(format!("squeeze tau must exceed 1, got {}", sq.tau)));
        }
        if !(sq.retrain_epochs >= 0.0) || !sq.retrain_epochs.is_finite() {
            return Err(CliError::Validation("squeeze retrain_epochs must be non-negative".into()));
        }
        if self.network.hidden.is_empty() || self.network.hidden.contains(&0) {
            return Err(CliError::Validation("network.hidden needs at least one positive width".into()));
        }
        match self.dataset.split() {
            SplitStrategy::Fraction { fraction } if !(0.0..1.0).contains(fraction) => {
                return Err(CliError::Validation(format!("split fraction {fraction} outside [0, 1)")));
            }
            _ => {}
        }
        if let DatasetSource::Mnist { wavelets, .. } = &self.dataset {
            if *wavelets == 0 || *wavelets > condnet::data::wavelet::COEFFICIENTS {
                return Err(CliError::Validation(format!("wavelets must be in 1..=1024, got {wavelets}")));
            }
        }
        Ok(())
    }

    /// Dataset files named by the config, all of which must exist for ingest.
    pub fn input_paths(&self) -> Vec<&Path> {
        match &self.dataset {
            DatasetSource::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => vec![train_images, train_labels, test_images, test_labels],
            DatasetSource::Adult { train, test, .. } => vec![train, test],
        }
        .into_iter()
        .map(PathBuf::as_path)
        .collect()
    }

    pub fn check_inputs_exist(&self) -> Result<(), CliError> {
        let missing: Vec<String> = self
            .input_paths()
            .into_iter()
            .filter(|p| !p.is_file())
            .map(|p| p.display().to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!("missing input files: {}", missing.join(", "))))
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Other(format!("serializing config: {e}")))
    }
}

/// Parses `1.0,1.2,1.4`.
pub fn parse_betas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad beta '{t}': {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADULT: &str = r#"
        seed = 3
        out = "run"

        [dataset]
        kind = "adult"
        train = "adult.data"
        test = "adult.test"
        split = { kind = "fraction", fraction = 0.1 }

        [network]
        hidden = [50, 50, 50]

        [train]
        batch_size = 20

        [design.proportion]
        tau = 40
        eta = 3

        [design.scale]
        betas = [0.6, 0.8, 1.0]
    "#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = RunConfig::parse(ADULT).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.train.batch_size, 20);
        assert_eq!(cfg.train.learning_rate, 0.001);
        assert_eq!(cfg.design.proportion.tau, 40.0);
        assert_eq!(cfg.design.scale.repeats, 5);
        assert_eq!(cfg.design.squeeze.max_rounds, 10);
        assert_eq!(cfg.network.activation, ActivationKind::TunableErf);
        assert!(matches!(cfg.dataset, DatasetSource::Adult { .. }));
        assert_eq!(cfg.dataset.split(), &SplitStrategy::Fraction { fraction: 0.1 });
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = ADULT.replace("batch_size = 20", "batch = 20");
        assert!(matches!(RunConfig::parse(&bad), Err(CliError::Validation(_))));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::parse(ADULT).unwrap();
        cfg.apply(&Overrides {
            tau: Some(35.0),
            betas: Some(vec![1.4]),
            q: Some(2),
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!(cfg.design.proportion.tau, 35.0);
        assert_eq!(cfg.design.squeeze.tau, 35.0);
        assert_eq!(cfg.design.scale.betas, vec![1.4]);
        assert_eq!(cfg.design.scale.repeats, 2);
        assert_eq!(cfg.design.scale.seed, derive(9, &[tag::SCALE]));
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = RunConfig::parse(ADULT).unwrap();
        cfg.apply(&Overrides::default());
        let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = RunConfig::parse(ADULT).unwrap();
        cfg.rebase(Path::new("/cfg"));
        assert_eq!(cfg.out, PathBuf::from("/cfg/run"));
        assert_eq!(cfg.input_paths()[1], Path::new("/cfg/adult.test"));
    }

    #[test]
    fn betas_list() {
        assert_eq!(parse_betas("1, 1.2,2").unwrap(), vec![1.0, 1.2, 2.0]);
        assert!(parse_betas("1,x").is_err());
    }
}
