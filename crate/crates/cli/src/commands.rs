use std::io::Write;

use clap::ValueEnum;
use nmchain::chains::{
    delta, embedded_step, markov_xor_step, memory_overlap, reduced_maps, CollisionSchedule, ChainModel, Figure,
    SlidingWindow, SYS,
};
use nmchain::channels::divisibility_step;
use nmchain::matcore::{trace_norm_distance, DensityMatrix};
use nmchain::measures::{nm_report, MeasuredSide, NmOptions};
use nmchain::trajectories::{ensemble_stats, SelectiveChain, TrajectoryRecord, View};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::output::{complex, float, matrix, to_json_string};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    /// Closed Markov chain of the system (Markov model) or memory+system.
    Embedding,
    /// Direct simulation of the collision schedule.
    Sliding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Memory,
    System,
}

fn checked(t: usize, rho: &DensityMatrix) -> Result<(), CliError> {
    rho.validate().map_err(|e| CliError::Invariant(format!("state at t={t}: {e}")))
}

struct StepRecord {
    t: usize,
    system: DensityMatrix,
    compound: Option<DensityMatrix>,
    delta: Option<nmchain::matcore::C64>,
    register_qubits: Option<usize>,
}

fn run_states(cfg: &RunConfig, engine: EngineArg) -> Result<Vec<StepRecord>, CliError> {
    let mut out = Vec::with_capacity(cfg.steps + 1);
    let sliding = engine == EngineArg::Sliding || matches!(cfg.model, ChainModel::Custom(_));
    if sliding {
        let horizon = match &cfg.model {
            ChainModel::Custom(c) => c.schedule.horizon(),
            ChainModel::MarkovXor { .. } => cfg.steps.max(1),
            _ => cfg.steps + 1,
        };
        let sw = SlidingWindow::for_model(&cfg.model, horizon)?
            .with_memory(cfg.memory.clone())?
            .with_qubit_cap(cfg.qubit_cap);
        let mut s = sw.initial_state(&cfg.rho0)?;
        for t in 0..=cfg.steps {
            if t > 0 {
                s = sw.step(&s)?;
            }
            checked(t, &s.joint)?;
            out.push(StepRecord {
                t,
                system: s.system_marginal(),
                compound: None,
                delta: None,
                register_qubits: Some(s.joint.n_qubits()),
            });
        }
        return Ok(out);
    }
    match cfg.model {
        ChainModel::MarkovXor { phi } => {
            let mut rho = cfg.rho0.clone();
            for t in 0..=cfg.steps {
                if t > 0 {
                    rho = markov_xor_step(&rho, phi)?;
                }
                checked(t, &rho)?;
                out.push(StepRecord { t, system: rho.clone(), compound: None, delta: None, register_qubits: None });
            }
        }
        _ => {
            let with_delta = matches!(cfg.model, ChainModel::DistributedSqrtXor { .. });
            let mut rho = cfg.memory.tensor(&cfg.rho0)?;
            for t in 0..=cfg.steps {
                if t > 0 {
                    rho = embedded_step(&cfg.model, &rho)?;
                }
                checked(t, &rho)?;
                out.push(StepRecord {
                    t,
                    system: rho.partial_trace(&[SYS])?,
                    compound: Some(rho.clone()),
                    delta: with_delta.then(|| delta(&rho).0),
                    register_qubits: None,
                });
            }
        }
    }
    Ok(out)
}

pub fn simulate(cfg: &RunConfig, engine: EngineArg, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let records = run_states(cfg, engine)?;
    match format {
        Format::Json => {
            for r in &records {
                let mut v = json!({ "t": r.t, "rho_system": matrix(r.system.matrix()) });
                if let Some(c) = &r.compound {
                    v["rho_compound"] = matrix(c.matrix());
                }
                if let Some(d) = r.delta {
                    v["delta"] = complex(d);
                }
                if let Some(n) = r.register_qubits {
                    v["register_qubits"] = json!(n);
                }
                writeln!(out, "{}", to_json_string(&v))?;
            }
        }
        Format::Csv => {
            let with_delta = records.iter().any(|r| r.delta.is_some());
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["t", "rho00", "rho11", "re01", "im01", "abs01"];
            if with_delta {
                header.extend(["delta_re", "delta_im", "delta_abs"]);
            }
            w.write_record(&header)?;
            for r in &records {
                let z = r.system.entry(0, 1);
                let mut row = vec![
                    r.t.to_string(),
                    float(r.system.entry(0, 0).re),
                    float(r.system.entry(1, 1).re),
                    float(z.re),
                    float(z.im),
                    float(z.norm()),
                ];
                if let Some(d) = r.delta {
                    row.extend([float(d.re), float(d.im), float(d.norm())]);
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Reporting layer: round-off negatives within 1e-9 are shown as 0.
fn clamp(x: f64) -> f64 {
    if (-1e-9..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

pub fn measures(cfg: &RunConfig, side: SideArg, threshold: f64, out: &mut dyn Write) -> Result<(), CliError> {
    if !(threshold >= 0.0) {
        return Err(CliError::Config(format!("--threshold must be non-negative, got {threshold}")));
    }
    let opts = NmOptions {
        memory: cfg.memory.clone(),
        threshold,
        side: match side {
            SideArg::Memory => MeasuredSide::Memory,
            SideArg::System => MeasuredSide::System,
        },
        horizon: match &cfg.model {
            ChainModel::Custom(c) => c.schedule.horizon(),
            _ => 12,
        },
    };
    let r = nm_report(&cfg.model, &cfg.rho0, &opts)?;
    let overlap = match cfg.model {
        ChainModel::RepeatedXor { .. } | ChainModel::DistributedSqrtXor { .. } => Some(memory_overlap(&cfg.model)?),
        _ => None,
    };
    let v = json!({
        "model": model_name(&cfg.model),
        "phi": cfg.model.phi(),
        "count_qubits": r.count_qubits,
        "mutual_information": r.mutual_info.map(clamp),
        "classical_correlation": r.classical_j.map(clamp),
        "discord": r.discord.map(clamp),
        "discord_raw": r.discord,
        "fixed_basis_classical_correlation": r.fixed_basis_j.map(clamp),
        "classification": r.classification.as_str(),
        "argmax_basis": r.argmax_basis.map(|b| json!({ "theta": b.theta, "psi": b.psi })),
        "measured_side": match side { SideArg::Memory => "memory", SideArg::System => "system" },
        "memory_overlap": overlap,
    });
    writeln!(out, "{}", to_json_string(&v))?;
    Ok(())
}

fn model_name(m: &ChainModel) -> &'static str {
    match m {
        ChainModel::MarkovXor { .. } => "markov-xor",
        ChainModel::RepeatedXor { .. } => "repeated-xor",
        ChainModel::DistributedSqrtXor { .. } => "sqrt-xor",
        ChainModel::Custom(_) => "custom",
    }
}

pub fn divisibility(cfg: &RunConfig, tol: f64, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    if !(tol >= 0.0) {
        return Err(CliError::Config(format!("--tol-cp must be non-negative, got {tol}")));
    }
    let maps = reduced_maps(&cfg.model, &cfg.memory, cfg.steps)?;
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut first: Option<nmchain::channels::LinearMap> = None;
    for t in 1..=cfg.steps {
        let d = divisibility_step(&maps[t], &maps[t - 1], tol)?;
        // distance of this step's map from the first one; zero for a
        // time-homogeneous chain
        let drift = match (&d.intermediate, &first) {
            (Some(n), Some(f)) => Some(n.superop().max_abs_diff(f.superop())),
            (Some(_), None) => Some(0.0),
            _ => None,
        };
        if first.is_none() {
            first = d.intermediate.clone();
        }
        rows.push((t, d.verdict.as_str(), d.min_choi_eig, drift));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["t", "exists", "min_choi_eig", "intermediate_drift"])?;
            let opt = |x: Option<f64>| x.map(float).unwrap_or_default();
            for (t, v, m, d) in rows {
                w.write_record([t.to_string(), v.to_string(), opt(m), opt(d)])?;
            }
            w.flush()?;
        }
        Format::Json => {
            for (t, v, m, d) in rows {
                let row = json!({ "t": t, "exists": v, "min_choi_eig": m, "intermediate_drift": d });
                writeln!(out, "{}", to_json_string(&row))?;
            }
        }
    }
    Ok(())
}

pub struct TrajectoryArgs {
    pub samples: usize,
    pub seed: u64,
    pub enumerate: bool,
    pub prune_below: f64,
    pub view: EngineArg,
}

fn record_json(r: &TrajectoryRecord, with_p: bool) -> Value {
    let mut v = json!({ "outcomes": r.outcomes, "log_p": r.log_probability });
    if with_p {
        v["p"] = json!(r.probability());
    }
    v
}

pub fn trajectories(
    cfg: &RunConfig,
    args: &TrajectoryArgs,
    out: &mut dyn Write,
    summary: &mut dyn Write,
) -> Result<(), CliError> {
    let view = match args.view {
        EngineArg::Embedding => View::Embedding,
        EngineArg::Sliding => View::Sliding,
    };
    let chain = SelectiveChain::with_options(&cfg.model, &cfg.rho0, &cfg.memory, cfg.steps, view)?;
    let target = chain.nonselective(cfg.steps)?;
    let s = if args.enumerate {
        let e = chain.enumerate(cfg.steps, args.prune_below, false)?;
        for r in &e.records {
            writeln!(out, "{}", to_json_string(&record_json(r, true)))?;
        }
        let avg = e.average_state()?;
        json!({
            "mode": "enumeration",
            "branches": e.records.len(),
            "pruned_mass": e.pruned_mass,
            "average_state": matrix(avg.matrix()),
            "nonselective_state": matrix(target.matrix()),
            "trace_distance": trace_norm_distance(&avg, &target)?,
        })
    } else {
        if args.samples == 0 {
            return Err(CliError::Config("--samples must be positive".into()));
        }
        let records = chain.sample_ensemble(cfg.steps, args.seed, args.samples)?;
        for r in &records {
            writeln!(out, "{}", to_json_string(&record_json(r, false)))?;
        }
        let stats = ensemble_stats(&records, args.seed)?;
        json!({
            "mode": "sampling",
            "rng": "ChaCha20, seed_from_u64(seed), stream = trajectory index",
            "seed": stats.rng_seed,
            "n_samples": stats.n_samples,
            "outcome_frequencies": stats.outcome_frequencies,
            "mean_state": matrix(stats.mean_state.matrix()),
            "nonselective_state": matrix(target.matrix()),
            "trace_distance": trace_norm_distance(&stats.mean_state, &target)?,
        })
    };
    writeln!(summary, "{}", to_json_string(&s))?;
    Ok(())
}

pub fn schedule(figure: &str, horizon: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let figure: Figure = figure.parse().map_err(|e: nmchain::Error| CliError::Config(e.to_string()))?;
    let s = CollisionSchedule::generate(figure, horizon).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(out, "{}", s.to_json(Some(figure)))?;
    Ok(())
}
