//! Collision gates and molecule preparation.
//!
//! Two-qubit gates are stored in `|control, target>` order. The collision
//! models always use the system qubit as control and the molecule as target
//! (`XOR_sys-mol`); this is the only reading under which `U·exp(iφσ_y)` in the
//! `|mol, sys>` basis has the known 4×4 form with columns `(c,0,s,0)`,
//! `(0,s,0,c)`, `(-s,0,c,0)` and `(0,c,0,-s)`.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, PureState, C64, ONE, ZERO};

const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    matrix: ComplexMatrix,
    slot_roles: Vec<String>,
}

impl UnitaryGate {
    pub fn new(matrix: ComplexMatrix, slot_roles: &[&str]) -> Result<Self> {
        let dim = 1usize << slot_roles.len();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "{} roles need a {dim}x{dim} matrix, got {}x{}",
                slot_roles.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dev = matrix.unitary_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix, slot_roles: slot_roles.iter().map(|s| s.to_string()).collect() })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn arity(&self) -> usize {
        self.slot_roles.len()
    }

    pub fn slot_roles(&self) -> &[String] {
        &self.slot_roles
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn then_after(&self, other: &UnitaryGate) -> Result<UnitaryGate> {
        if self.arity() != other.arity() {
            return Err(Error::Shape("gate arities differ".into()));
        }
        let roles: Vec<&str> = self.slot_roles.iter().map(String::as_str).collect();
        UnitaryGate::new(self.matrix.matmul(&other.matrix), &roles)
    }
}

/// Preparation angle of a reservoir molecule.
///
/// Angles in `[0, π/2]` are canonical; other finite values are accepted as is.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoleculeSpec {
    pub phi: f64,
}

/// The rotation `[[cos φ, −sin φ], [sin φ, cos φ]]` that takes `|0>` to
/// `cos φ|0> + sin φ|1>`. It is written `exp(iφσ_y)` in the collision-model
/// literature; with the usual `σ_y` that exponential is its transpose.
pub fn molecule_rotation(phi: f64) -> ComplexMatrix {
    let (s, c) = phi.sin_cos();
    ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]]).expect("2x2")
}

pub fn molecule_state(spec: MoleculeSpec) -> PureState {
    let (s, c) = spec.phi.sin_cos();
    PureState::new(vec![C64::new(c, 0.0), C64::new(s, 0.0)]).expect("unit norm")
}

pub fn xor_gate() -> UnitaryGate {
    let m = ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
    .expect("4x4");
    UnitaryGate::new(m, &["control", "target"]).expect("unitary")
}

pub fn swap_gate() -> UnitaryGate {
    let m = ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
    .expect("4x4");
    UnitaryGate::new(m, &["a", "b"]).expect("unitary")
}

/// `√(i/2)`, the principal root `e^{iπ/4}/√2`.
pub fn sqrt_half_i() -> C64 {
    C64::from_polar(0.5f64.sqrt(), FRAC_PI_4)
}

/// Controlled `√X`: identity on control 0, and
/// `√(i/2)·[[1, −i], [−i, 1]]` on control 1. Squares to [`xor_gate`].
pub fn sqrt_xor_gate() -> UnitaryGate {
    let r = sqrt_half_i();
    let mi = C64::new(0.0, -1.0);
    let m = ComplexMatrix::from_rows(&[
        vec![ONE, ZERO, ZERO, ZERO],
        vec![ZERO, ONE, ZERO, ZERO],
        vec![ZERO, ZERO, r, mi * r],
        vec![ZERO, ZERO, mi * r, r],
    ])
    .expect("4x4");
    UnitaryGate::new(m, &["control", "target"]).expect("unitary")
}

pub fn identity_gate(arity: usize) -> UnitaryGate {
    let roles: Vec<String> = (0..arity).map(|i| format!("q{i}")).collect();
    let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
    UnitaryGate::new(ComplexMatrix::identity(1 << arity), &roles).expect("identity")
}

/// Lifts `gate` onto a larger register. `acting_on[k]` names the register slot
/// that plays the gate's `k`-th role; the first register slot is the most
/// significant index bit.
pub fn embed(gate: &UnitaryGate, register_slots: &[&str], acting_on: &[&str]) -> Result<UnitaryGate> {
    if acting_on.len() != gate.arity() {
        return Err(Error::InvalidSlots(format!(
            "gate of arity {} placed on {} slots",
            gate.arity(),
            acting_on.len()
        )));
    }
    let mut positions = Vec::with_capacity(acting_on.len());
    for name in acting_on {
        let p = register_slots
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::InvalidSlots(format!("slot {name:?} not in register")))?;
        if positions.contains(&p) {
            return Err(Error::InvalidSlots(format!("slot {name:?} used twice")));
        }
        positions.push(p);
    }
    for (i, s) in register_slots.iter().enumerate() {
        if register_slots[..i].contains(s) {
            return Err(Error::InvalidSlots(format!("register slot {s:?} repeated")));
        }
    }
    let matrix = embed_matrix(gate.matrix(), register_slots.len(), &positions);
    UnitaryGate::new(matrix, register_slots)
}

/// Embeds a `2^k`-dimensional operator acting on register `positions`.
pub(crate) fn embed_matrix(g: &ComplexMatrix, n: usize, positions: &[usize]) -> ComplexMatrix {
    let k = positions.len();
    let dim = 1usize << n;
    let masks: Vec<usize> = positions.iter().map(|&p| 1usize << (n - 1 - p)).collect();
    let local_of = |full: usize| -> usize {
        masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(full & m != 0))
    };
    let with_local = |full: usize, local: usize| -> usize {
        let mut out = full;
        for (j, &m) in masks.iter().enumerate() {
            if (local >> (k - 1 - j)) & 1 == 1 {
                out |= m;
            } else {
                out &= !m;
            }
        }
        out
    };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let gi = local_of(col);
        for go in 0..(1usize << k) {
            let a = g[(go, gi)];
            if a != ZERO {
                out[(with_local(col, go), col)] += a;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::tensor;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// `U·exp(iφσ_y)` for the single-XOR model in `|mol, sys>`, entered by hand.
    fn printed_markov(phi: f64) -> ComplexMatrix {
        let (s, c) = phi.sin_cos();
        ComplexMatrix::from_real_rows(&[
            &[c, 0.0, -s, 0.0],
            &[0.0, s, 0.0, c],
            &[s, 0.0, c, 0.0],
            &[0.0, c, 0.0, -s],
        ])
        .unwrap()
    }

    fn markov_assembled(phi: f64) -> ComplexMatrix {
        let u = embed(&xor_gate(), &["mol", "sys"], &["sys", "mol"]).unwrap();
        u.matrix().matmul(&tensor(&molecule_rotation(phi), &ComplexMatrix::identity(2)))
    }

    #[test]
    fn molecule_states() {
        let z = molecule_state(MoleculeSpec { phi: 0.0 });
        assert_eq!(z.amplitudes(), &[r(1.0), r(0.0)]);
        let one = molecule_state(MoleculeSpec { phi: std::f64::consts::FRAC_PI_2 });
        assert!((one.amplitudes()[0]).norm() < 1e-16 && (one.amplitudes()[1] - r(1.0)).norm() < 1e-16);
        let plus = molecule_state(MoleculeSpec { phi: FRAC_PI_4 });
        let h = 0.5f64.sqrt();
        assert!((plus.amplitudes()[0] - r(h)).norm() < 1e-15);
        assert!((plus.amplitudes()[1] - r(h)).norm() < 1e-15);
        for phi in [0.1, 0.7, 2.0] {
            let rot0 = molecule_rotation(phi).column(0);
            let st = molecule_state(MoleculeSpec { phi });
            for (a, b) in rot0.iter().zip(st.amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn xor_acts_with_system_control() {
        let u = embed(&xor_gate(), &["mol", "sys"], &["sys", "mol"]).unwrap();
        // |mol=0, sys=1> -> |mol=1, sys=1>
        assert_eq!(u.matrix()[(3, 1)], r(1.0));
        assert_eq!(u.matrix()[(0, 0)], r(1.0));
        assert!(xor_gate().matrix().matmul(xor_gate().matrix()).max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
    }

    #[test]
    fn markov_collision_matrix_matches_printed_form() {
        for phi in [std::f64::consts::PI / 6.0, 0.4, 0.0, 1.3] {
            assert!(markov_assembled(phi).max_abs_diff(&printed_markov(phi)) < 1e-15);
            let col0 = markov_assembled(phi).column(0);
            let (s, c) = phi.sin_cos();
            assert_eq!(col0, vec![r(c), r(0.0), r(s), r(0.0)]);
        }
    }

    #[test]
    fn swap_examples() {
        let s = swap_gate();
        assert_eq!(s.matrix()[(2, 1)], r(1.0)); // |01> -> |10>
        assert_eq!(s.matrix()[(3, 3)], r(1.0));
        assert_eq!(s.matrix().matmul(s.matrix()), ComplexMatrix::identity(4));
    }

    #[test]
    fn sqrt_xor_squares_to_xor() {
        let g = sqrt_xor_gate();
        let sq = g.matrix().matmul(g.matrix());
        assert!(sq.max_abs_diff(xor_gate().matrix()) < 1e-15);
        assert!((g.matrix()[(2, 2)] - C64::from_polar(0.5f64.sqrt(), FRAC_PI_4)).norm() < 1e-16);
        assert!(g.matrix().block(0..2, 0..2).max_abs_diff(&ComplexMatrix::identity(2)) == 0.0);
        assert!(g.matrix().block(0..2, 2..4).max_abs() == 0.0);
    }

    #[test]
    fn all_gates_are_unitary() {
        for g in [xor_gate(), swap_gate(), sqrt_xor_gate(), identity_gate(3)] {
            assert!(g.matrix().unitary_deviation() < 1e-12);
        }
    }

    #[test]
    fn embedding_identity_and_errors() {
        let slots = ["mol", "mem", "sys"];
        let e = embed(&identity_gate(1), &slots, &["mem"]).unwrap();
        assert_eq!(e.matrix(), &ComplexMatrix::identity(8));
        assert!(matches!(
            embed(&xor_gate(), &slots, &["sys", "sys"]),
            Err(Error::InvalidSlots(_))
        ));
        assert!(matches!(
            embed(&xor_gate(), &slots, &["sys", "bath"]),
            Err(Error::InvalidSlots(_))
        ));
        assert!(matches!(embed(&xor_gate(), &slots, &["sys"]), Err(Error::InvalidSlots(_))));
    }

    #[test]
    fn embedding_matches_statevector_oracle() {
        // Apply XOR(sys -> mol) on |mol, mem, sys> by direct bit manipulation.
        let u = embed(&xor_gate(), &["mol", "mem", "sys"], &["sys", "mol"]).unwrap();
        for input in 0..8usize {
            let sys = input & 1;
            let expected = input ^ (sys << 2);
            for out in 0..8usize {
                let want = if out == expected { 1.0 } else { 0.0 };
                assert_eq!(u.matrix()[(out, input)], r(want));
            }
        }
    }
}
