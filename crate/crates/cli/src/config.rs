//! Flag parsing into a validated run configuration.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nmchain::chains::{ChainModel, CollisionSchedule, CustomChain, DEFAULT_QUBIT_CAP, MEM, SYS};
use nmchain::gates::{molecule_state, sqrt_xor_gate, xor_gate, MoleculeSpec};
use nmchain::matcore::{DensityMatrix, C64};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    MarkovXor,
    RepeatedXor,
    SqrtXor,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GateArg {
    Xor,
    SqrtXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every model-driven command.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Collision model.
    #[arg(long, value_enum, default_value = "markov-xor")]
    pub model: ModelArg,
    /// Molecule preparation angle in radians (required except for custom,
    /// where it defaults to 0).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Number of steps (default 10; custom models default to the schedule horizon).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial system state as p00,p11,re01,im01.
    #[arg(long, default_value = "0.5,0.5,0.5,0", allow_hyphen_values = true)]
    pub initial: String,
    /// Initial memory (preloaded molecule) state as p00,p11,re01,im01.
    #[arg(long, default_value = "1,0,0,0", allow_hyphen_values = true)]
    pub memory: String,
    /// Schedule file for --model custom (JSON list of {"t", "mol"} events).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Collision gate for --model custom.
    #[arg(long, value_enum, default_value = "xor")]
    pub gate: GateArg,
    /// Largest sliding-window register, system included.
    #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
    pub qubit_cap: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ChainModel,
    pub rho0: DensityMatrix,
    pub memory: DensityMatrix,
    pub steps: usize,
    pub qubit_cap: usize,
}

pub fn parse_qubit(text: &str, flag: &str, slot: &str) -> Result<DensityMatrix, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!("{flag}: expected p00,p11,re01,im01, got {text:?}")));
    }
    let mut v = [0.0; 4];
    for (k, (p, name)) in parts.iter().zip(["p00", "p11", "re01", "im01"]).enumerate() {
        v[k] = p
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Config(format!("{flag}: field {name} = {p:?} is not a finite number")))?;
    }
    DensityMatrix::qubit(v[0], v[1], C64::new(v[2], v[3]), slot)
        .map_err(|e| CliError::Config(format!("{flag}: not a valid density matrix ({e})")))
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let phi = match (self.model, self.phi) {
            (ModelArg::Custom, p) => p.unwrap_or(0.0),
            (_, Some(p)) => p,
            (_, None) => return Err(CliError::Config("--phi is required for this model".into())),
        };
        if !phi.is_finite() {
            return Err(CliError::Config(format!("--phi: {phi} is not finite")));
        }
        if self.qubit_cap < 2 {
            return Err(CliError::Config("--qubit-cap must be at least 2".into()));
        }
        if self.schedule.is_some() && self.model != ModelArg::Custom {
            return Err(CliError::Config("--schedule only applies to --model custom".into()));
        }
        let model = match self.model {
            ModelArg::MarkovXor => ChainModel::MarkovXor { phi },
            ModelArg::RepeatedXor => ChainModel::RepeatedXor { phi },
            ModelArg::SqrtXor => ChainModel::DistributedSqrtXor { phi },
            ModelArg::Custom => {
                let path = self
                    .schedule
                    .as_ref()
                    .ok_or_else(|| CliError::Config("--model custom needs --schedule <path>".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("--schedule {}: {e}", path.display())))?;
                let schedule = CollisionSchedule::from_json(&text)
                    .map_err(|e| CliError::Config(format!("--schedule {}: {e}", path.display())))?;
                let gate = match self.gate {
                    GateArg::Xor => xor_gate(),
                    GateArg::SqrtXor => sqrt_xor_gate(),
                };
                ChainModel::Custom(CustomChain { gate, schedule, molecule: molecule_state(MoleculeSpec { phi }) })
            }
        };
        let steps = match (&model, self.steps) {
            (ChainModel::Custom(c), None) => c.schedule.horizon(),
            (ChainModel::Custom(c), Some(s)) if s > c.schedule.horizon() => {
                return Err(CliError::Config(format!(
                    "--steps {s} exceeds the schedule horizon {}",
                    c.schedule.horizon()
                )))
            }
            (_, Some(s)) => s,
            (_, None) => 10,
        };
        Ok(RunConfig {
            model,
            rho0: parse_qubit(&self.initial, "--initial", SYS)?,
            memory: parse_qubit(&self.memory, "--memory", MEM)?,
            steps,
            qubit_cap: self.qubit_cap,
        })
    }
}
