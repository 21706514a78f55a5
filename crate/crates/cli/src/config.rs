//! Run configuration: a JSON file supplies command parameters, command-line
//! flags override the file, unknown keys are rejected by name.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadownet_core::model::{DropoutMode, ValueMode};
use shadownet_core::train::{SourceLayer, SynthOptions};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Gen,
    Invert,
    Scaling,
    Lemmas,
    Diag,
    Support,
    Twolayer,
    Train,
}

impl CommandName {
    pub const ALL: [CommandName; 8] = [
        CommandName::Gen,
        CommandName::Invert,
        CommandName::Scaling,
        CommandName::Lemmas,
        CommandName::Diag,
        CommandName::Support,
        CommandName::Twolayer,
        CommandName::Train,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Gen => "gen",
            CommandName::Invert => "invert",
            CommandName::Scaling => "scaling",
            CommandName::Lemmas => "lemmas",
            CommandName::Diag => "diag",
            CommandName::Support => "support",
            CommandName::Twolayer => "twolayer",
            CommandName::Train => "train",
        }
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        CommandName::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown command {s:?}; expected one of gen, invert, scaling, lemmas, diag, support, twolayer, train"
                ))
            })
    }
}

fn default_widths() -> Vec<usize> {
    vec![2048, 512, 128]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenParams {
    pub widths: Vec<usize>,
    /// Kept counts per layer; defaults to the recovery ladder when absent.
    pub sparsities: Option<Vec<usize>>,
    pub top_sparsity: usize,
    pub value_mode: ValueMode,
    pub dropout_mode: DropoutMode,
    pub count: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            widths: default_widths(),
            sparsities: None,
            top_sparsity: 4,
            value_mode: ValueMode::Binary,
            dropout_mode: DropoutMode::FixedSubset,
            count: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvertParams {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub trials: usize,
}

impl Default for InvertParams {
    fn default() -> Self {
        InvertParams {
            k: 16,
            m: 256,
            n: 4096,
            t: 256,
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingParams {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub t_values: Vec<usize>,
    pub trials_per_t: usize,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams {
            k: 16,
            m: 256,
            n: 4096,
            t_values: vec![64, 128, 256, 512, 1024],
            trials_per_t: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmasParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagParams {
    /// Binary weight file to analyze (SHDW format).
    pub input: Option<PathBuf>,
    /// CSV matrix to analyze (rows of comma-separated values).
    pub csv_input: Option<PathBuf>,
    /// Fresh Gaussian matrix dimensions when no input is given.
    pub rows: usize,
    pub cols: usize,
    pub bins: usize,
}

impl Default for DiagParams {
    fn default() -> Self {
        DiagParams {
            input: None,
            csv_input: None,
            rows: 512,
            cols: 512,
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupportParams {
    pub widths: Vec<usize>,
    pub top_sparsity: usize,
    pub trials: usize,
    /// 0 keeps one net (and one calibration) for every trial.
    pub resample_net_every: usize,
}

impl Default for SupportParams {
    fn default() -> Self {
        SupportParams {
            widths: default_widths(),
            top_sparsity: 4,
            trials: 1000,
            resample_net_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwolayerParams {
    pub q: usize,
    pub k_values: Vec<usize>,
    pub t_factor: usize,
    pub p: usize,
    pub m: usize,
    pub n: usize,
    pub trials_per_k: usize,
}

impl Default for TwolayerParams {
    fn default() -> Self {
        TwolayerParams {
            q: 5,
            k_values: vec![50, 100, 200, 400],
            t_factor: 4,
            p: 64,
            m: 512,
            n: 2048,
            trials_per_k: 250,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum DatasetSpec {
    Blobs {
        n_per_class: usize,
        n_classes: usize,
        dim: usize,
        spread: f64,
    },
    Csv {
        path: PathBuf,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Blobs {
            n_per_class: 100,
            n_classes: 3,
            dim: 16,
            spread: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub dataset: DatasetSpec,
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub shadow_weight: f64,
    pub reg_lambdas: [f64; 3],
    pub dropout_ratio: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub val_fraction: f64,
    pub source_layer: SourceLayer,
    pub sampling: bool,
    pub sampling_keep: f64,
    pub smoothing: bool,
    pub image_shape: Option<(usize, usize, usize)>,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dataset: DatasetSpec::default(),
            hidden1: 256,
            hidden2: 256,
            learning_rate: 0.05,
            shadow_weight: 1.0,
            reg_lambdas: [0.0; 3],
            dropout_ratio: 0.0,
            batch_size: 20,
            epochs: 8,
            val_fraction: 0.2,
            source_layer: SourceLayer::H2,
            sampling: false,
            sampling_keep: 0.5,
            smoothing: false,
            image_shape: None,
        }
    }
}

impl TrainParams {
    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            source_layer: self.source_layer,
            sampling: self.sampling,
            sampling_keep: self.sampling_keep,
            smoothing: self.smoothing,
            image_shape: self.image_shape,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommandParams {
    Gen(GenParams),
    Invert(InvertParams),
    Scaling(ScalingParams),
    Lemmas(LemmasParams),
    Diag(DiagParams),
    Support(SupportParams),
    Twolayer(TwolayerParams),
    Train(TrainParams),
}

/// Deserializes with the offending key path in the error message.
fn typed<T: serde::de::DeserializeOwned>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Config(format!("params: {}", e.inner()))
        } else {
            CliError::Config(format!("params key \"{path}\": {}", e.inner()))
        }
    })
}

impl CommandParams {
    fn from_value(command: CommandName, value: Value) -> Result<Self> {
        Ok(match command {
            CommandName::Gen => CommandParams::Gen(typed(value)?),
            CommandName::Invert => CommandParams::Invert(typed(value)?),
            CommandName::Scaling => CommandParams::Scaling(typed(value)?),
            CommandName::Lemmas => CommandParams::Lemmas(typed(value)?),
            CommandName::Diag => CommandParams::Diag(typed(value)?),
            CommandName::Support => CommandParams::Support(typed(value)?),
            CommandName::Twolayer => CommandParams::Twolayer(typed(value)?),
            CommandName::Train => CommandParams::Train(typed(value)?),
        })
    }

    fn default_for(command: CommandName) -> Self {
        match command {
            CommandName::Gen => CommandParams::Gen(GenParams::default()),
            CommandName::Invert => CommandParams::Invert(InvertParams::default()),
            CommandName::Scaling => CommandParams::Scaling(ScalingParams::default()),
            CommandName::Lemmas => CommandParams::Lemmas(LemmasParams::default()),
            CommandName::Diag => CommandParams::Diag(DiagParams::default()),
            CommandName::Support => CommandParams::Support(SupportParams::default()),
            CommandName::Twolayer => CommandParams::Twolayer(TwolayerParams::default()),
            CommandName::Train => CommandParams::Train(TrainParams::default()),
        }
    }
}

/// Fully resolved run: file values with CLI overrides applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub check: bool,
    pub params: CommandParams,
}

/// Raw file schema; unknown top-level keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    command: Option<CommandName>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    check: Option<bool>,
    params: Option<Value>,
}

#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub check: bool,
}

pub const DEFAULT_SEED: u64 = 42;

/// Parses a JSON config (pass "{}" when no file is given) and applies the
/// command-line overrides. Flag values beat file values.
pub fn parse_config(
    command: CommandName,
    json_text: &str,
    overrides: &CliOverrides,
) -> Result<RunConfig> {
    let file: FileConfig = serde_json::from_str(json_text)
        .map_err(|e| CliError::Config(format!("config: {e}")))?;
    if let Some(file_cmd) = file.command {
        if file_cmd != command {
            return Err(CliError::Config(format!(
                "config file is for command \"{file_cmd}\" but \"{command}\" was requested"
            )));
        }
    }
    let params = match file.params {
        Some(value) => CommandParams::from_value(command, value)?,
        None => CommandParams::default_for(command),
    };
    Ok(RunConfig {
        command,
        seed: overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out: overrides
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(format!("out/{command}"))),
        threads: overrides.threads.or(file.threads),
        check: overrides.check || file.check.unwrap_or(false),
        params,
    })
}
