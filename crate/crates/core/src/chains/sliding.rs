//! Direct simulation of a collision schedule on a sliding register.
//!
//! The register holds the system and every molecule that has had its first
//! collision but not yet its last. At each step fresh molecules are tensored
//! in at the front, the step's collisions are applied in listed order, and
//! molecules whose last collision has happened are traced out (or, in the
//! selective variant, read out in the computational basis).

use crate::channels::MIN_BRANCH_PROBABILITY;
use crate::error::{Error, Result};
use crate::gates::{embed, UnitaryGate};
use crate::matcore::{partial_trace_positions, ComplexMatrix, DensityMatrix, PureState};

use super::{ChainModel, CollisionSchedule, SYS};

/// Register size limit, system included.
pub const DEFAULT_QUBIT_CAP: usize = 6;

fn mol_slot(id: i64) -> String {
    format!("mol{id}")
}

/// Joint state of the system and the open molecules after `t` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub joint: DensityMatrix,
    pub open_molecules: Vec<i64>,
    pub t: usize,
    /// Largest register (in qubits) seen so far, including mid-step.
    pub peak_qubits: usize,
}

impl ChainState {
    pub fn system_marginal(&self) -> DensityMatrix {
        self.joint.partial_trace(&[SYS]).expect("system slot is always present")
    }
}

#[derive(Clone, Debug)]
pub struct SlidingWindow {
    gate: UnitaryGate,
    schedule: CollisionSchedule,
    molecule: PureState,
    memory: DensityMatrix,
    qubit_cap: usize,
}

impl SlidingWindow {
    /// `gate` has roles `(system, molecule)`. Preloaded molecules start in
    /// `|0><0|` unless [`with_memory`](Self::with_memory) says otherwise.
    pub fn new(gate: UnitaryGate, schedule: CollisionSchedule, molecule: PureState) -> Result<Self> {
        if gate.arity() != 2 {
            return Err(Error::Shape("collision gate must act on two qubits".into()));
        }
        if molecule.dim() != 2 {
            return Err(Error::Shape("molecules are single qubits".into()));
        }
        Ok(Self {
            gate,
            schedule,
            molecule,
            memory: PureState::basis(2, 0).to_density(&["mem"])?,
            qubit_cap: DEFAULT_QUBIT_CAP,
        })
    }

    pub fn for_model(model: &ChainModel, horizon: usize) -> Result<Self> {
        model.validate()?;
        Self::new(model.collision_gate(), model.schedule(horizon)?, model.molecule())
    }

    pub fn with_memory(mut self, memory: DensityMatrix) -> Result<Self> {
        if memory.n_qubits() != 1 {
            return Err(Error::Shape("preloaded molecules are single qubits".into()));
        }
        self.memory = memory;
        Ok(self)
    }

    pub fn with_qubit_cap(mut self, cap: usize) -> Self {
        self.qubit_cap = cap;
        self
    }

    pub fn schedule(&self) -> &CollisionSchedule {
        &self.schedule
    }

    pub fn qubit_cap(&self) -> usize {
        self.qubit_cap
    }

    fn check_cap(&self, needed: usize) -> Result<()> {
        if needed > self.qubit_cap {
            return Err(Error::RegisterTooLarge { needed, cap: self.qubit_cap });
        }
        Ok(())
    }

    /// System state `rho0` with the preloaded molecules in front of it.
    pub fn initial_state(&self, rho0: &DensityMatrix) -> Result<ChainState> {
        if rho0.n_qubits() != 1 {
            return Err(Error::Shape("the system is a single qubit".into()));
        }
        let pre = self.schedule.preloaded_molecules();
        self.check_cap(pre.len() + 1)?;
        let mut slots: Vec<String> = pre.iter().map(|&m| mol_slot(m)).collect();
        slots.push(SYS.to_string());
        let mut m = ComplexMatrix::identity(1);
        for _ in &pre {
            m = m.kron(self.memory.matrix());
        }
        m = m.kron(rho0.matrix());
        let refs: Vec<&str> = slots.iter().map(String::as_str).collect();
        let joint = DensityMatrix::new_unchecked(m, &refs)?;
        let n = joint.n_qubits();
        Ok(ChainState { joint, open_molecules: pre, t: 0, peak_qubits: n })
    }

    /// Tensors in fresh molecules and applies the collisions of the next
    /// step. Returns the joint state before any molecule is released, the
    /// molecule ids in register order, and the peak size.
    fn collide(&self, state: &ChainState) -> Result<(DensityMatrix, Vec<i64>, usize)> {
        let t = state.t;
        if t >= self.schedule.horizon() {
            return Err(Error::InvalidSchedule(format!(
                "step {t} lies beyond the horizon {}",
                self.schedule.horizon()
            )));
        }
        let mut fresh: Vec<i64> = Vec::new();
        for e in self.schedule.events_at(t) {
            if !state.open_molecules.contains(&e.mol) && !fresh.contains(&e.mol) {
                if self.schedule.first_event(e.mol) != Some(t) {
                    return Err(Error::InvalidSchedule(format!(
                        "molecule {} collides at t={t} after being released",
                        e.mol
                    )));
                }
                fresh.push(e.mol);
            }
        }
        let needed = state.joint.n_qubits() + fresh.len();
        self.check_cap(needed)?;

        let mut matrix = state.joint.matrix().clone();
        let mut slots: Vec<String> = state.joint.slots().to_vec();
        let mut ids = state.open_molecules.clone();
        for &m in fresh.iter().rev() {
            matrix = self.molecule.projector().kron(&matrix);
            slots.insert(0, mol_slot(m));
            ids.insert(0, m);
        }
        let refs: Vec<&str> = slots.iter().map(String::as_str).collect();
        for e in self.schedule.events_at(t) {
            let slot = mol_slot(e.mol);
            let u = embed(&self.gate, &refs, &[SYS, slot.as_str()])?;
            matrix = matrix.conjugate_by(u.matrix());
        }
        let joint = DensityMatrix::new_unchecked(matrix, &refs)?;
        Ok((joint, ids, needed.max(state.peak_qubits)))
    }

    fn closing(&self, ids: &[i64], t: usize) -> Vec<i64> {
        let mut c: Vec<i64> = ids.iter().copied().filter(|&m| self.schedule.last_event(m) == Some(t)).collect();
        c.sort_unstable();
        c
    }

    /// Non-selective step: closing molecules are traced out.
    pub fn step(&self, state: &ChainState) -> Result<ChainState> {
        let (joint, ids, peak) = self.collide(state)?;
        let closing = self.closing(&ids, state.t);
        let keep_ids: Vec<i64> = ids.iter().copied().filter(|m| !closing.contains(m)).collect();
        let mut keep: Vec<String> = keep_ids.iter().map(|&m| mol_slot(m)).collect();
        keep.push(SYS.to_string());
        let refs: Vec<&str> = keep.iter().map(String::as_str).collect();
        let joint = joint.partial_trace(&refs)?;
        Ok(ChainState { joint, open_molecules: keep_ids, t: state.t + 1, peak_qubits: peak })
    }

    /// Number of molecules read out at step `t`; a selective label at that
    /// step ranges over `0..2^n`.
    pub fn closing_count(&self, t: usize) -> usize {
        self.schedule
            .molecules()
            .into_iter()
            .filter(|&m| self.schedule.last_event(m) == Some(t))
            .count()
    }

    fn check_selective(&self) -> Result<()> {
        let p = self.schedule.persistent_molecules();
        if !p.is_empty() {
            return Err(Error::Unsupported(format!(
                "molecule(s) {p:?} collide at every step and are never released for readout"
            )));
        }
        Ok(())
    }

    /// All readout branches of the next step with probability above
    /// [`MIN_BRANCH_PROBABILITY`]. Labels pack the closing molecules' bits in
    /// ascending id order, lowest id most significant.
    pub fn step_outcomes(&self, state: &ChainState) -> Result<Vec<(usize, f64, ChainState)>> {
        self.check_selective()?;
        let (joint, ids, peak) = self.collide(state)?;
        let closing = self.closing(&ids, state.t);
        let keep_ids: Vec<i64> = ids.iter().copied().filter(|m| !closing.contains(m)).collect();
        let n = joint.n_qubits();
        let pos_of = |m: i64| ids.iter().position(|&x| x == m).unwrap();
        let closing_pos: Vec<usize> = closing.iter().map(|&m| pos_of(m)).collect();
        let mut keep_pos: Vec<usize> = keep_ids.iter().map(|&m| pos_of(m)).collect();
        keep_pos.push(n - 1);
        keep_pos.sort_unstable();
        let keep_slots: Vec<String> = keep_pos.iter().map(|&p| joint.slots()[p].clone()).collect();
        let open: Vec<i64> = keep_pos[..keep_pos.len() - 1].iter().map(|&p| ids[p]).collect();
        let refs: Vec<&str> = keep_slots.iter().map(String::as_str).collect();

        let d = joint.dim();
        let mut out = Vec::new();
        for label in 0..(1usize << closing.len()) {
            // project the closing molecules onto their bit pattern
            let matches = |idx: usize| {
                closing_pos.iter().enumerate().all(|(j, &p)| {
                    let want = (label >> (closing.len() - 1 - j)) & 1;
                    (idx >> (n - 1 - p)) & 1 == want
                })
            };
            let projected = ComplexMatrix::from_fn(d, d, |r, c| {
                if matches(r) && matches(c) {
                    joint.matrix()[(r, c)]
                } else {
                    crate::matcore::ZERO
                }
            });
            let p = projected.trace().re;
            if p <= MIN_BRANCH_PROBABILITY {
                continue;
            }
            let reduced = partial_trace_positions(&projected, n, &keep_pos).scale_real(1.0 / p);
            let st = DensityMatrix::new_unchecked(reduced, &refs)?;
            out.push((
                label,
                p,
                ChainState { joint: st, open_molecules: open.clone(), t: state.t + 1, peak_qubits: peak },
            ));
        }
        Ok(out)
    }

    /// Conditional state for one readout label and its probability.
    pub fn step_selective(&self, state: &ChainState, label: usize) -> Result<(ChainState, f64)> {
        let branches = self.step_outcomes(state)?;
        let k = self.closing_count(state.t);
        if label >= (1usize << k) {
            return Err(Error::Shape(format!("label {label} out of range for {k} readout bit(s)")));
        }
        match branches.into_iter().find(|(l, _, _)| *l == label) {
            Some((_, p, s)) => Ok((s, p)),
            None => Err(Error::ZeroProbability { label, probability: 0.0 }),
        }
    }

    /// The initial state followed by `steps` non-selective steps.
    pub fn run(&self, rho0: &DensityMatrix, steps: usize) -> Result<Vec<ChainState>> {
        let mut states = vec![self.initial_state(rho0)?];
        for _ in 0..steps {
            let next = self.step(states.last().unwrap())?;
            states.push(next);
        }
        Ok(states)
    }
}
