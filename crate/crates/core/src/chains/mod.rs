//! The collision-model chains.
//!
//! Three concrete models share one molecule preparation `cos φ|0> + sin φ|1>`:
//!
//! * [`ChainModel::MarkovXor`]: one XOR collision per molecule.
//! * [`ChainModel::RepeatedXor`]: two XOR collisions per molecule, overlapping
//!   with the next molecule. Equivalent to a Markov chain of the
//!   memory+system pair driven by `XOR·SWAP·XOR`.
//! * [`ChainModel::DistributedSqrtXor`]: the same overlap pattern with each
//!   XOR split into two `√XOR` halves.
//!
//! Arbitrary gates and schedules go through [`ChainModel::Custom`] and the
//! sliding-window engine.

mod embedding;
mod schedule;
mod sliding;

pub use embedding::{
    build_embedding, delta, embedded_step, embedded_step_closed_form, embedding_for_gate,
    memory_overlap, memory_states, repeated_xor_invariants, stationary_state,
    stationary_state_iterated, DeltaParam, Embedding, ITERATION_MAX_STEPS, ITERATION_TOL,
};
pub use schedule::{CollisionEvent, CollisionSchedule, Figure};
pub use sliding::{ChainState, SlidingWindow, DEFAULT_QUBIT_CAP};

use crate::channels::{computational_basis, kraus_from_collision, map_tomography, KrausSet, LinearMap};
use crate::error::{Error, Result};
use crate::gates::{embed, molecule_state, sqrt_xor_gate, xor_gate, MoleculeSpec, UnitaryGate};
use crate::matcore::{ComplexMatrix, DensityMatrix, PureState, C64};

pub const SYS: &str = "sys";
pub const MEM: &str = "mem";
pub const MOL: &str = "mol";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    MarkovXor,
    RepeatedXor,
    DistributedSqrtXor,
    Custom,
}

/// A user-defined chain: a two-qubit collision gate in `|system, molecule>`
/// role order, a schedule, and the fresh-molecule state.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomChain {
    pub gate: UnitaryGate,
    pub schedule: CollisionSchedule,
    pub molecule: PureState,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChainModel {
    MarkovXor { phi: f64 },
    RepeatedXor { phi: f64 },
    DistributedSqrtXor { phi: f64 },
    Custom(CustomChain),
}

impl ChainModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ChainModel::MarkovXor { .. } => ModelKind::MarkovXor,
            ChainModel::RepeatedXor { .. } => ModelKind::RepeatedXor,
            ChainModel::DistributedSqrtXor { .. } => ModelKind::DistributedSqrtXor,
            ChainModel::Custom(_) => ModelKind::Custom,
        }
    }

    pub fn phi(&self) -> Option<f64> {
        match *self {
            ChainModel::MarkovXor { phi }
            | ChainModel::RepeatedXor { phi }
            | ChainModel::DistributedSqrtXor { phi } => Some(phi),
            ChainModel::Custom(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChainModel::Custom(c) => {
                if c.gate.arity() != 2 {
                    return Err(Error::Shape("custom collision gate must act on two qubits".into()));
                }
                if c.molecule.dim() != 2 {
                    return Err(Error::Shape("molecules are single qubits".into()));
                }
                Ok(())
            }
            _ => {
                let phi = self.phi().unwrap();
                if phi.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parse(format!("phi must be finite, got {phi}")))
                }
            }
        }
    }

    /// Two-qubit collision gate, roles `(system, molecule)`.
    pub fn collision_gate(&self) -> UnitaryGate {
        match self {
            ChainModel::MarkovXor { .. } | ChainModel::RepeatedXor { .. } => xor_gate(),
            ChainModel::DistributedSqrtXor { .. } => sqrt_xor_gate(),
            ChainModel::Custom(c) => c.gate.clone(),
        }
    }

    pub fn molecule(&self) -> PureState {
        match self {
            ChainModel::Custom(c) => c.molecule.clone(),
            _ => molecule_state(MoleculeSpec { phi: self.phi().unwrap() }),
        }
    }

    /// Canonical schedule of the model over `horizon` steps; custom models
    /// return their own schedule.
    pub fn schedule(&self, horizon: usize) -> Result<CollisionSchedule> {
        match self {
            ChainModel::MarkovXor { .. } => CollisionSchedule::generate(Figure::Markov, horizon),
            ChainModel::RepeatedXor { .. } | ChainModel::DistributedSqrtXor { .. } => {
                CollisionSchedule::generate(Figure::Overlap, horizon)
            }
            ChainModel::Custom(c) => Ok(c.schedule.clone()),
        }
    }
}

/// Kraus pair of the single-XOR chain: `diag(c, s)` and `diag(s, c)`.
pub fn markov_kraus(phi: f64) -> KrausSet {
    let u = embed(&xor_gate(), &[MOL, SYS], &[SYS, MOL]).expect("two-slot register");
    kraus_from_collision(&u, &molecule_state(MoleculeSpec { phi }), &computational_basis(2))
        .expect("XOR collision has a complete Kraus pair")
}

/// One step of the single-XOR chain: populations stay, the coherence is
/// multiplied by `sin 2φ`.
pub fn markov_xor_step(rho: &DensityMatrix, phi: f64) -> Result<DensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::Shape(format!("expected one qubit, got {}", rho.n_qubits())));
    }
    let k = (2.0 * phi).sin();
    let m = rho.matrix();
    let out = ComplexMatrix::from_rows(&[vec![m[(0, 0)], m[(0, 1)] * k], vec![m[(1, 0)] * k, m[(1, 1)]]])?;
    DensityMatrix::from_parts(out, rho.slots().to_vec())
}

/// Limit of the single-XOR chain: the dephased initial state.
pub fn markov_xor_fixed_point(rho0: &DensityMatrix, phi: f64) -> Result<DensityMatrix> {
    if rho0.n_qubits() != 1 {
        return Err(Error::Shape(format!("expected one qubit, got {}", rho0.n_qubits())));
    }
    if (2.0 * phi).sin().abs() >= 1.0 - 1e-15 {
        return Err(Error::NonContracting(format!("|sin 2φ| = 1 at φ = {phi}")));
    }
    let m = rho0.matrix();
    let out = ComplexMatrix::diag(&[m[(0, 0)], m[(1, 1)]]);
    DensityMatrix::from_parts(out, rho0.slots().to_vec())
}

/// Reduced system maps `M(0) = id, M(1), …, M(t_max)` of the chain started
/// from `system ⊗ mem0` (preloaded molecules in `mem0`), reconstructed by
/// tomography of the sliding-window engine.
pub fn reduced_maps(model: &ChainModel, mem0: &DensityMatrix, t_max: usize) -> Result<Vec<LinearMap>> {
    let horizon = match model {
        ChainModel::Custom(c) => {
            if t_max > c.schedule.horizon() {
                return Err(Error::InvalidSchedule(format!(
                    "{t_max} steps exceed the schedule horizon {}",
                    c.schedule.horizon()
                )));
            }
            c.schedule.horizon()
        }
        _ => t_max + 1,
    };
    let sw = SlidingWindow::for_model(model, horizon)?.with_memory(mem0.clone())?;
    let mut maps = vec![LinearMap::identity(2)];
    for t in 1..=t_max {
        let m = map_tomography(
            |rho| {
                let mut s = sw.initial_state(&rho.relabel(&[SYS])?)?;
                for _ in 0..t {
                    s = sw.step(&s)?;
                }
                Ok(s.system_marginal())
            },
            2,
        )?;
        maps.push(m);
    }
    Ok(maps)
}

pub(crate) fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}
