//! Selective chains: the molecule leaving its last collision is read out in
//! the computational basis, and the system state is conditioned on the
//! outcome.
//!
//! Two views are available for the overlap models. The embedding view reads
//! the Kraus label of the memory+system map; the sliding view measures the
//! released molecule in the direct simulation. Both give the same outcome
//! distribution.
//!
//! Sampling uses ChaCha20 seeded with `seed_from_u64(seed)` and stream
//! `index`, so trajectory `index` is reproducible on any platform and
//! independent of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::chains::{build_embedding, markov_kraus, ChainModel, ChainState, SlidingWindow, MEM, SYS};
use crate::channels::{branch, KrausSet, MIN_BRANCH_PROBABILITY};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, DensityMatrix};

pub const MAX_ENUMERATION_STEPS: usize = 20;
/// Above this many steps enumeration requires a positive pruning threshold.
pub const EXACT_ENUMERATION_STEPS: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum View {
    /// Kraus map of the system (Markov) or memory+system (overlap models).
    #[default]
    Embedding,
    /// Direct simulation of the collision schedule.
    Sliding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<usize>,
    pub log_probability: f64,
    /// Conditional probability of each outcome given the ones before it.
    pub step_probabilities: Vec<f64>,
    /// System state after the last step.
    pub final_state: DensityMatrix,
    /// System state after every step, when requested.
    pub conditional_states: Option<Vec<DensityMatrix>>,
}

impl TrajectoryRecord {
    pub fn probability(&self) -> f64 {
        self.log_probability.exp()
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub records: Vec<TrajectoryRecord>,
    /// Total probability of the branches dropped by pruning.
    pub pruned_mass: f64,
}

impl Enumeration {
    /// Probability-weighted sum of the branch states.
    pub fn average_state(&self) -> Result<DensityMatrix> {
        let first = self
            .records
            .first()
            .ok_or_else(|| Error::BranchLimit("no branch survived pruning".into()))?;
        let mut acc = ComplexMatrix::zeros(first.final_state.dim(), first.final_state.dim());
        for r in &self.records {
            acc = &acc + &r.final_state.matrix().scale_real(r.probability());
        }
        DensityMatrix::new_unchecked(acc, &[SYS])
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub n_samples: usize,
    pub mean_state: DensityMatrix,
    /// `outcome_frequencies[t][λ]`: how many samples gave `λ` at step `t + 1`.
    pub outcome_frequencies: Vec<Vec<usize>>,
    pub rng_seed: u64,
}

#[derive(Clone, Debug)]
enum Engine {
    /// Kraus set on the whole state; `compound` states carry a memory slot.
    Kraus { kraus: KrausSet, compound: bool },
    Sliding(SlidingWindow),
}

#[derive(Clone, Debug)]
enum EngineState {
    Kraus(DensityMatrix),
    Sliding(ChainState),
}

impl EngineState {
    fn system(&self) -> DensityMatrix {
        match self {
            EngineState::Kraus(rho) if rho.n_qubits() == 1 => rho.clone(),
            EngineState::Kraus(rho) => rho.partial_trace(&[SYS]).expect("compound has a system slot"),
            EngineState::Sliding(s) => s.system_marginal(),
        }
    }
}

/// A selective chain ready to be enumerated or sampled.
#[derive(Clone, Debug)]
pub struct SelectiveChain {
    engine: Engine,
    initial: EngineState,
    max_steps: usize,
}

impl SelectiveChain {
    /// Embedding view with the memory in `|0><0|`; custom models use the
    /// sliding view.
    pub fn new(model: &ChainModel, rho0: &DensityMatrix, t_max: usize) -> Result<Self> {
        let mem0 = DensityMatrix::qubit(1.0, 0.0, crate::matcore::ZERO, MEM)?;
        Self::with_options(model, rho0, &mem0, t_max, View::Embedding)
    }

    pub fn with_options(
        model: &ChainModel,
        rho0: &DensityMatrix,
        mem0: &DensityMatrix,
        t_max: usize,
        view: View,
    ) -> Result<Self> {
        model.validate()?;
        if rho0.n_qubits() != 1 || mem0.n_qubits() != 1 {
            return Err(Error::Shape("system and memory are single qubits".into()));
        }
        let rho0 = rho0.relabel(&[SYS])?;
        let sliding = matches!(model, ChainModel::Custom(_)) || view == View::Sliding;
        if sliding {
            let horizon = match model {
                ChainModel::Custom(c) => c.schedule.horizon(),
                _ => t_max + 1,
            };
            if t_max > horizon {
                return Err(Error::InvalidSchedule(format!("{t_max} steps exceed the schedule horizon {horizon}")));
            }
            let p = model.schedule(horizon)?.persistent_molecules();
            if !p.is_empty() {
                return Err(Error::Unsupported(format!(
                    "molecule(s) {p:?} are never released, so there is nothing to read out"
                )));
            }
            let sw = SlidingWindow::for_model(model, horizon)?.with_memory(mem0.clone())?;
            let initial = EngineState::Sliding(sw.initial_state(&rho0)?);
            return Ok(Self { engine: Engine::Sliding(sw), initial, max_steps: horizon });
        }
        let (kraus, initial, compound) = match model {
            ChainModel::MarkovXor { phi } => (markov_kraus(*phi), rho0, false),
            _ => (build_embedding(model)?.kraus, mem0.relabel(&[MEM])?.tensor(&rho0)?, true),
        };
        Ok(Self { engine: Engine::Kraus { kraus, compound }, initial: EngineState::Kraus(initial), max_steps: usize::MAX })
    }

    fn check_steps(&self, t_max: usize) -> Result<()> {
        if t_max > self.max_steps {
            return Err(Error::InvalidSchedule(format!("{t_max} steps exceed the horizon {}", self.max_steps)));
        }
        Ok(())
    }

    /// Branches of one step, in label order, without the vanishing ones.
    fn outcomes(&self, state: &EngineState) -> Result<Vec<(usize, f64, EngineState)>> {
        match (&self.engine, state) {
            (Engine::Kraus { kraus, .. }, EngineState::Kraus(rho)) => {
                let mut out = Vec::with_capacity(kraus.labels().len());
                for &label in kraus.labels() {
                    let (m, p) = branch(kraus, rho, label)?;
                    if p > MIN_BRANCH_PROBABILITY {
                        let next = DensityMatrix::new_unchecked(m.scale_real(1.0 / p), &slot_refs(rho))?;
                        out.push((label, p, EngineState::Kraus(next)));
                    }
                }
                Ok(out)
            }
            (Engine::Sliding(sw), EngineState::Sliding(s)) => Ok(sw
                .step_outcomes(s)?
                .into_iter()
                .map(|(l, p, s)| (l, p, EngineState::Sliding(s)))
                .collect()),
            _ => unreachable!("engine and state kinds always agree"),
        }
    }

    fn nonselective_step(&self, state: &EngineState) -> Result<EngineState> {
        match (&self.engine, state) {
            (Engine::Kraus { kraus, .. }, EngineState::Kraus(rho)) => {
                Ok(EngineState::Kraus(crate::channels::apply_kraus(kraus, rho)?))
            }
            (Engine::Sliding(sw), EngineState::Sliding(s)) => Ok(EngineState::Sliding(sw.step(s)?)),
            _ => unreachable!("engine and state kinds always agree"),
        }
    }

    /// True when the embedding view carries a memory qubit.
    pub fn is_compound(&self) -> bool {
        matches!(self.engine, Engine::Kraus { compound: true, .. })
    }

    /// System state of the non-selective chain after `t_max` steps.
    pub fn nonselective(&self, t_max: usize) -> Result<DensityMatrix> {
        self.check_steps(t_max)?;
        let mut s = self.initial.clone();
        for _ in 0..t_max {
            s = self.nonselective_step(&s)?;
        }
        Ok(s.system())
    }

    /// Every outcome sequence of length `t_max` with probability above
    /// `prune_below`.
    pub fn enumerate(&self, t_max: usize, prune_below: f64, keep_states: bool) -> Result<Enumeration> {
        self.check_steps(t_max)?;
        if t_max > MAX_ENUMERATION_STEPS {
            return Err(Error::BranchLimit(format!("{t_max} steps exceed the limit of {MAX_ENUMERATION_STEPS}")));
        }
        if t_max > EXACT_ENUMERATION_STEPS && prune_below <= 0.0 {
            return Err(Error::BranchLimit(format!(
                "more than {EXACT_ENUMERATION_STEPS} steps need a positive pruning threshold"
            )));
        }
        if !(prune_below >= 0.0) {
            return Err(Error::Parse(format!("pruning threshold must be non-negative, got {prune_below}")));
        }
        struct Partial {
            outcomes: Vec<usize>,
            probs: Vec<f64>,
            log_p: f64,
            states: Vec<DensityMatrix>,
            state: EngineState,
        }
        let mut frontier = vec![Partial {
            outcomes: vec![],
            probs: vec![],
            log_p: 0.0,
            states: vec![],
            state: self.initial.clone(),
        }];
        let mut pruned = 0.0;
        for _ in 0..t_max {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for b in frontier {
                for (label, p, s) in self.outcomes(&b.state)? {
                    let log_p = b.log_p + p.ln();
                    if log_p.exp() <= prune_below {
                        pruned += log_p.exp();
                        continue;
                    }
                    let mut outcomes = b.outcomes.clone();
                    outcomes.push(label);
                    let mut probs = b.probs.clone();
                    probs.push(p);
                    let mut states = b.states.clone();
                    if keep_states {
                        states.push(s.system());
                    }
                    next.push(Partial { outcomes, probs, log_p, states, state: s });
                }
            }
            frontier = next;
        }
        let records = frontier
            .into_iter()
            .map(|b| TrajectoryRecord {
                final_state: b.state.system(),
                outcomes: b.outcomes,
                log_probability: b.log_p,
                step_probabilities: b.probs,
                conditional_states: keep_states.then_some(b.states),
            })
            .collect();
        Ok(Enumeration { records, pruned_mass: pruned })
    }

    /// One trajectory drawn from stream `index` of `seed`.
    pub fn sample(&self, t_max: usize, seed: u64, index: u64) -> Result<TrajectoryRecord> {
        self.check_steps(t_max)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut state = self.initial.clone();
        let mut outcomes = Vec::with_capacity(t_max);
        let mut probs = Vec::with_capacity(t_max);
        let mut log_p = 0.0;
        for _ in 0..t_max {
            let branches = self.outcomes(&state)?;
            let u: f64 = rng.gen();
            let total: f64 = branches.iter().map(|b| b.1).sum();
            let mut acc = 0.0;
            let mut pick = branches.len() - 1;
            for (k, b) in branches.iter().enumerate() {
                acc += b.1 / total;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let (label, p, s) = branches.into_iter().nth(pick).expect("at least one branch");
            outcomes.push(label);
            probs.push(p);
            log_p += p.ln();
            state = s;
        }
        Ok(TrajectoryRecord {
            outcomes,
            log_probability: log_p,
            step_probabilities: probs,
            final_state: state.system(),
            conditional_states: None,
        })
    }

    /// Trajectories `0..n` of `seed`, sampled in parallel, in index order.
    pub fn sample_ensemble(&self, t_max: usize, seed: u64, n: usize) -> Result<Vec<TrajectoryRecord>> {
        (0..n as u64).into_par_iter().map(|i| self.sample(t_max, seed, i)).collect()
    }
}

fn slot_refs(rho: &DensityMatrix) -> Vec<&str> {
    rho.slots().iter().map(String::as_str).collect()
}

/// Exact enumeration in the default view.
pub fn enumerate_branches(model: &ChainModel, rho0: &DensityMatrix, t_max: usize, prune_below: f64) -> Result<Enumeration> {
    SelectiveChain::new(model, rho0, t_max)?.enumerate(t_max, prune_below, false)
}

/// Trajectory 0 of `seed` in the default view.
pub fn sample_trajectory(model: &ChainModel, rho0: &DensityMatrix, t_max: usize, seed: u64) -> Result<TrajectoryRecord> {
    SelectiveChain::new(model, rho0, t_max)?.sample(t_max, seed, 0)
}

/// Mean final state and per-step outcome histograms.
pub fn ensemble_stats(records: &[TrajectoryRecord], rng_seed: u64) -> Result<EnsembleStats> {
    let first = records.first().ok_or_else(|| Error::Shape("no trajectories to aggregate".into()))?;
    let d = first.final_state.dim();
    let steps = first.outcomes.len();
    let mut acc = ComplexMatrix::zeros(d, d);
    let mut freq: Vec<Vec<usize>> = vec![Vec::new(); steps];
    for r in records {
        if r.outcomes.len() != steps || r.final_state.dim() != d {
            return Err(Error::Shape("trajectories of different lengths or dimensions".into()));
        }
        acc = &acc + r.final_state.matrix();
        for (t, &l) in r.outcomes.iter().enumerate() {
            if freq[t].len() <= l {
                freq[t].resize(l + 1, 0);
            }
            freq[t][l] += 1;
        }
    }
    let tr = acc.trace().re;
    let mean = DensityMatrix::new_unchecked(acc.scale_real(1.0 / tr), &slot_refs(&first.final_state))?;
    Ok(EnsembleStats { n_samples: records.len(), mean_state: mean, outcome_frequencies: freq, rng_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{trace_norm_distance, C64, ZERO};

    #[test]
    fn one_step_markov_branches() {
        let phi: f64 = 0.5;
        let rho0 = DensityMatrix::qubit(1.0, 0.0, ZERO, SYS).unwrap();
        let e = enumerate_branches(&ChainModel::MarkovXor { phi }, &rho0, 1, 0.0).unwrap();
        assert_eq!(e.records.len(), 2);
        assert!((e.records[0].probability() - phi.cos().powi(2)).abs() < 1e-14);
        assert!((e.records[1].probability() - phi.sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn projective_limit_freezes() {
        let rho0 = DensityMatrix::qubit(0.3, 0.7, C64::new(0.2, 0.1), SYS).unwrap();
        let e = enumerate_branches(&ChainModel::MarkovXor { phi: 0.0 }, &rho0, 7, 0.0).unwrap();
        assert_eq!(e.records.len(), 2);
        assert!(e.records.iter().all(|r| r.outcomes.iter().all(|&l| l == r.outcomes[0])));
    }

    #[test]
    fn views_agree_in_distribution() {
        let rho0 = DensityMatrix::qubit(0.45, 0.55, C64::new(0.1, 0.3), SYS).unwrap();
        let mem0 = DensityMatrix::qubit(1.0, 0.0, ZERO, MEM).unwrap();
        for model in [ChainModel::RepeatedXor { phi: 0.4 }, ChainModel::DistributedSqrtXor { phi: 0.4 }] {
            let a = SelectiveChain::with_options(&model, &rho0, &mem0, 5, View::Embedding).unwrap();
            let b = SelectiveChain::with_options(&model, &rho0, &mem0, 5, View::Sliding).unwrap();
            let ea = a.enumerate(5, 0.0, false).unwrap();
            let eb = b.enumerate(5, 0.0, false).unwrap();
            assert_eq!(ea.records.len(), eb.records.len());
            for (x, y) in ea.records.iter().zip(&eb.records) {
                assert_eq!(x.outcomes, y.outcomes);
                assert!((x.probability() - y.probability()).abs() < 1e-12);
                assert!(trace_norm_distance(&x.final_state, &y.final_state).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let rho0 = DensityMatrix::maximally_mixed(&[SYS]).unwrap();
        let c = SelectiveChain::new(&ChainModel::DistributedSqrtXor { phi: 0.3 }, &rho0, 8).unwrap();
        assert_eq!(c.sample(8, 42, 3).unwrap(), c.sample(8, 42, 3).unwrap());
        let many = c.sample_ensemble(8, 42, 16).unwrap();
        assert_eq!(many[3], c.sample(8, 42, 3).unwrap());
        let stats = ensemble_stats(&many, 42).unwrap();
        assert!(stats.outcome_frequencies.iter().all(|f| f.iter().sum::<usize>() == 16));
    }

    #[test]
    fn enumeration_guards() {
        let rho0 = DensityMatrix::maximally_mixed(&[SYS]).unwrap();
        let m = ChainModel::MarkovXor { phi: 0.3 };
        assert!(matches!(enumerate_branches(&m, &rho0, 17, 0.0), Err(Error::BranchLimit(_))));
        assert!(matches!(enumerate_branches(&m, &rho0, 21, 1e-3), Err(Error::BranchLimit(_))));
        let e = enumerate_branches(&m, &rho0, 17, 1e-4).unwrap();
        let kept: f64 = e.records.iter().map(|r| r.probability()).sum();
        assert!((kept + e.pruned_mass - 1.0).abs() < 1e-10);
    }
}
