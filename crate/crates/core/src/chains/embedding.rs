//! Satellite-memory embedding of the overlapping double-collision chains.
//!
//! The molecule that has collided once is kept as a memory qubit. One step of
//! the memory+system pair is the three-qubit collision
//! `U = G_sys-mol · SWAP_mol-mem · G_sys-mol` on `|mol, mem, sys>` with a fresh
//! molecule, followed by tracing out (or reading out) the molecule slot.

use crate::channels::{apply_kraus, computational_basis, kraus_from_collision, KrausSet};
use crate::error::{Error, Result};
use crate::gates::{embed, swap_gate, UnitaryGate};
use crate::matcore::{
    matrix_trace_distance, ComplexMatrix, DensityMatrix, PureState, C64, I, ONE, ZERO,
};

use super::{real, ChainModel, MEM, MOL, SYS};

/// Successive-state trace distance that counts as stationary.
pub const ITERATION_TOL: f64 = 1e-13;
pub const ITERATION_MAX_STEPS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct Embedding {
    /// `U` on `|mol, mem, sys>`.
    pub collision: UnitaryGate,
    /// `U` times the molecule preparation, the matrix whose left column
    /// blocks are the Kraus operators.
    pub prepared: UnitaryGate,
    /// Two operators on `|mem, sys>`, labelled by the molecule readout.
    pub kraus: KrausSet,
}

/// The `Δ` combination of compound-state entries that contracts by `sin 2φ`
/// per step in the distributed-√XOR chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaParam(pub C64);

/// A unitary taking `|0>` to the given qubit state.
fn preparation(psi: &PureState) -> ComplexMatrix {
    let a = psi.amplitudes()[0];
    let b = psi.amplitudes()[1];
    ComplexMatrix::from_rows(&[vec![a, -b.conj()], vec![b, a.conj()]]).expect("2x2")
}

/// Embedding for an arbitrary collision gate (roles `system, molecule`).
pub fn embedding_for_gate(gate: &UnitaryGate, molecule: &PureState) -> Result<Embedding> {
    if gate.arity() != 2 || molecule.dim() != 2 {
        return Err(Error::Shape("embedding needs a two-qubit gate and a qubit molecule".into()));
    }
    let reg = [MOL, MEM, SYS];
    let g = embed(gate, &reg, &[SYS, MOL])?;
    let sw = embed(&swap_gate(), &reg, &[MOL, MEM])?;
    let u = g.matrix().matmul(sw.matrix()).matmul(g.matrix());
    let collision = UnitaryGate::new(u, &reg)?;
    let prep = preparation(molecule).kron(&ComplexMatrix::identity(4));
    let prepared = UnitaryGate::new(collision.matrix().matmul(&prep), &reg)?;
    let kraus = kraus_from_collision(&collision, molecule, &computational_basis(2))?;
    Ok(Embedding { collision, prepared, kraus })
}

pub fn build_embedding(model: &ChainModel) -> Result<Embedding> {
    match model {
        ChainModel::RepeatedXor { .. } | ChainModel::DistributedSqrtXor { .. } => {
            model.validate()?;
            embedding_for_gate(&model.collision_gate(), &model.molecule())
        }
        _ => Err(Error::Unsupported(format!("{:?} has no single-qubit satellite embedding", model.kind()))),
    }
}

fn check_compound(rho: &DensityMatrix) -> Result<()> {
    if rho.n_qubits() != 2 {
        return Err(Error::Shape(format!(
            "compound state must have two qubits, got {}",
            rho.n_qubits()
        )));
    }
    Ok(())
}

/// One step of the memory+system Markov chain through the Kraus pair.
pub fn embedded_step(model: &ChainModel, rho_tilde: &DensityMatrix) -> Result<DensityMatrix> {
    check_compound(rho_tilde)?;
    apply_kraus(&build_embedding(model)?.kraus, rho_tilde)
}

/// The same step written entry by entry.
pub fn embedded_step_closed_form(model: &ChainModel, rho_tilde: &DensityMatrix) -> Result<DensityMatrix> {
    check_compound(rho_tilde)?;
    let r = rho_tilde.matrix();
    let a = r[(0, 0)] + r[(2, 2)];
    let b = r[(1, 1)] + r[(3, 3)];
    let out = match *model {
        ChainModel::RepeatedXor { phi } => {
            let (s, c) = phi.sin_cos();
            let cm = r[(0, 3)] + r[(2, 1)];
            let cp = r[(3, 0)] + r[(1, 2)];
            let (cc, ss, cs) = (c * c, s * s, c * s);
            ComplexMatrix::from_rows(&[
                vec![a * cc, cm * cs, a * cs, cm * cc],
                vec![cp * cs, b * ss, cp * ss, b * cs],
                vec![a * cs, cm * ss, a * ss, cm * cs],
                vec![cp * cc, b * cs, cp * cs, b * cc],
            ])?
        }
        ChainModel::DistributedSqrtXor { phi } => {
            let (s, c) = phi.sin_cos();
            let beta = C64::from_polar(0.5, phi);
            let bb = beta.conj();
            let d = delta(rho_tilde).0;
            let dc = d.conj();
            ComplexMatrix::from_rows(&[
                vec![a * c * c, beta * d * c, a * c * s, I * bb * d * c],
                vec![bb * dc * c, b * 0.5, bb * dc * s, I * 2.0 * bb * bb * b],
                vec![a * c * s, beta * d * s, a * s * s, I * bb * d * s],
                vec![-I * beta * dc * c, -I * 2.0 * beta * beta * b, -I * beta * dc * s, b * 0.5],
            ])?
        }
        _ => return Err(Error::Unsupported("closed-form recursion exists for the two overlap models only".into())),
    };
    DensityMatrix::from_parts(out, rho_tilde.slots().to_vec())
}

/// `Δ = −i(ρ̃₀₁ + ρ̃₂₃) + (ρ̃₀₃ + ρ̃₂₁)`.
pub fn delta(rho_tilde: &DensityMatrix) -> DeltaParam {
    let r = rho_tilde.matrix();
    DeltaParam(-I * (r[(0, 1)] + r[(2, 3)]) + (r[(0, 3)] + r[(2, 1)]))
}

/// Conserved quantities of the repeated-XOR chain:
/// `ρ̃₀₀+ρ̃₂₂`, `ρ̃₁₁+ρ̃₃₃` and `ρ̃₀₃+ρ̃₂₁`.
pub fn repeated_xor_invariants(rho_tilde: &DensityMatrix) -> [C64; 3] {
    let r = rho_tilde.matrix();
    [r[(0, 0)] + r[(2, 2)], r[(1, 1)] + r[(3, 3)], r[(0, 3)] + r[(2, 1)]]
}

/// Memory states paired with system `|0>` and `|1>` in the stationary state.
pub fn memory_states(model: &ChainModel) -> Result<(PureState, PureState)> {
    let (s, c) = match *model {
        ChainModel::RepeatedXor { phi } | ChainModel::DistributedSqrtXor { phi } => phi.sin_cos(),
        _ => return Err(Error::Unsupported("memory states exist for the two overlap models only".into())),
    };
    let psi = PureState::new(vec![real(c), real(s)])?;
    let psi_prime = match *model {
        ChainModel::RepeatedXor { .. } => PureState::new(vec![real(s), real(c)])?,
        ChainModel::DistributedSqrtXor { phi } => {
            let h = 0.5f64.sqrt();
            PureState::new(vec![real(h), -I * C64::from_polar(h, 2.0 * phi)])?
        }
        _ => unreachable!(),
    };
    Ok((psi, psi_prime))
}

/// `|<Ψ_φ|Ψ'_φ>|`; zero would make the memory effectively classical.
pub fn memory_overlap(model: &ChainModel) -> Result<f64> {
    let (a, b) = memory_states(model)?;
    Ok(a.inner(&b).norm())
}

/// Closed-form stationary memory+system state reached from `mem0 ⊗ rho0`:
/// `ρ⁰₀₀ |Ψ><Ψ| ⊗ |0><0| + ρ⁰₁₁ |Ψ'><Ψ'| ⊗ |1><1|` in `|mem, sys>` order.
pub fn stationary_state(model: &ChainModel, rho0: &DensityMatrix, mem0: &DensityMatrix) -> Result<DensityMatrix> {
    model.validate()?;
    if rho0.n_qubits() != 1 || mem0.n_qubits() != 1 {
        return Err(Error::Shape("stationary state needs one-qubit system and memory states".into()));
    }
    match *model {
        ChainModel::RepeatedXor { .. } => {
            // the invariant ρ̃₀₃+ρ̃₂₁ of the product start must vanish
            let sx = mem0.entry(0, 1) + mem0.entry(1, 0);
            let corr = sx * rho0.entry(0, 1);
            if corr.norm() > 1e-12 {
                return Err(Error::ClosedFormInapplicable(format!(
                    "memory <σx> = {:.3e} couples to the system coherence; iterate the embedded chain instead",
                    sx.re
                )));
            }
        }
        ChainModel::DistributedSqrtXor { phi } => {
            if (2.0 * phi).sin().abs() >= 1.0 - 1e-15 {
                return Err(Error::NonContracting(format!("Δ does not decay at φ = {phi}")));
            }
        }
        _ => return Err(Error::Unsupported("stationary closed forms exist for the two overlap models only".into())),
    }
    let (psi, psi_prime) = memory_states(model)?;
    let p0 = ComplexMatrix::diag(&[ONE, ZERO]);
    let p1 = ComplexMatrix::diag(&[ZERO, ONE]);
    let m = &psi.projector().kron(&p0).scale(rho0.entry(0, 0))
        + &psi_prime.projector().kron(&p1).scale(rho0.entry(1, 1));
    DensityMatrix::new_unchecked(m, &[MEM, SYS])
}

/// Power iteration of the embedded chain until successive states agree
/// within [`ITERATION_TOL`] in trace distance. Returns the state and the
/// number of steps taken.
pub fn stationary_state_iterated(model: &ChainModel, rho_tilde0: &DensityMatrix) -> Result<(DensityMatrix, usize)> {
    check_compound(rho_tilde0)?;
    let k = build_embedding(model)?.kraus;
    let mut rho = rho_tilde0.clone();
    for step in 1..=ITERATION_MAX_STEPS {
        let next = apply_kraus(&k, &rho)?;
        let change = matrix_trace_distance(next.matrix(), rho.matrix())?;
        rho = next;
        if change < ITERATION_TOL {
            return Ok((rho, step));
        }
    }
    Err(Error::NonContracting(format!("no stationary state within {ITERATION_MAX_STEPS} steps")))
}
