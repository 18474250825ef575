//! Input states: named presets or explicit density matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qib_core::classical_ib::JointDistribution;
use qib_core::linalg::{ComplexMatrix, Label, C64};
use qib_core::qib::presets;
use qib_core::qstate::BipartiteState;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Classical,
    BellMix,
    VwMix,
}

impl std::str::FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "classical" => Ok(PresetName::Classical),
            "bell_mix" => Ok(PresetName::BellMix),
            "vw_mix" => Ok(PresetName::VwMix),
            _ => Err(format!("unknown preset {s:?} (classical, bell_mix, vw_mix)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub x: usize,
    pub y: usize,
}

/// `{"name", "params"}` or `{"dims": {"x", "y"}, "matrix": [[re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset {
        name: PresetName,
        #[serde(default)]
        params: Vec<f64>,
    },
    Explicit {
        dims: Dims,
        matrix: Vec<[f64; 2]>,
    },
}

impl StateSpec {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read state file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid state file {}: {e}", path.display())))
    }

    pub fn build(&self) -> CliResult<BipartiteState> {
        match self {
            StateSpec::Preset { name, params } => {
                let want = match name {
                    PresetName::Classical => 4,
                    PresetName::BellMix => 0,
                    PresetName::VwMix => 2,
                };
                if params.len() != want {
                    return Err(CliError::usage(format!(
                        "preset {name:?} takes {want} parameters, got {}",
                        params.len()
                    )));
                }
                Ok(match name {
                    PresetName::Classical => presets::classical([params[0], params[1], params[2], params[3]])?,
                    PresetName::BellMix => presets::bell_mix(),
                    PresetName::VwMix => presets::vw_mix(params[0], params[1])?,
                })
            }
            StateSpec::Explicit { dims, matrix } => {
                let n = dims.x * dims.y;
                if n == 0 || matrix.len() != n * n {
                    return Err(CliError::usage(format!(
                        "matrix has {} entries, expected {} for dims {}×{}",
                        matrix.len(),
                        n * n,
                        dims.x,
                        dims.y
                    )));
                }
                let m = ComplexMatrix::from_vec(n, n, matrix.iter().map(|&[re, im]| C64::new(re, im)).collect())?;
                Ok(BipartiteState::from_matrix(m, (Label::X, dims.x), (Label::Y, dims.y))?)
            }
        }
    }

    /// The explicit form of the resolved state, used for hashing.
    pub fn resolved(&self) -> CliResult<StateSpec> {
        let st = self.build()?;
        let f = st.dims().factors();
        Ok(StateSpec::Explicit {
            dims: Dims { x: f[0].1, y: f[1].1 },
            matrix: st.matrix().as_matrix().data().iter().map(|z| [z.re, z.im]).collect(),
        })
    }
}

/// State from `--state <file>` or `--preset` with `--params`.
pub fn state_from_flags(preset: Option<PresetName>, params: &[f64], file: Option<&Path>) -> CliResult<StateSpec> {
    match (preset, file) {
        (Some(_), Some(_)) => Err(CliError::usage("give either --preset or --state, not both")),
        (Some(name), None) => Ok(StateSpec::Preset { name, params: params.to_vec() }),
        (None, Some(path)) => {
            if !params.is_empty() {
                return Err(CliError::usage("--params only applies to --preset"));
            }
            StateSpec::from_file(path)
        }
        (None, None) => Err(CliError::usage("no input state: use --preset or --state")),
    }
}

/// Joint table from `{"px_y": ...}` or, for a diagonal state spec, its diagonal.
pub fn joint_from_file(path: &Path) -> CliResult<JointDistribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(p) = JointDistribution::from_json(&text) {
        return Ok(p);
    }
    let spec: StateSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{} is neither a joint table nor a state spec: {e}", path.display())))?;
    Ok(JointDistribution::from_diagonal_state(&spec.build()?)?)
}
