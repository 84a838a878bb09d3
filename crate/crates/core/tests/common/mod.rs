//! Shared helpers for the integration tests: a brute-force statevector
//! simulation of a whole collision schedule.

#![allow(dead_code)]

use nmchain::chains::CollisionSchedule;
use nmchain::matcore::{ComplexMatrix, DensityMatrix, C64};

/// Applies a 4×4 gate in `(control, target)` order to qubits `c` and `tq` of
/// an `n`-qubit statevector (qubit 0 most significant).
fn apply_two_qubit(v: &mut [C64], n: usize, g: &ComplexMatrix, c: usize, tq: usize) {
    let mc = 1usize << (n - 1 - c);
    let mt = 1usize << (n - 1 - tq);
    for base in 0..v.len() {
        if base & (mc | mt) != 0 {
            continue;
        }
        let idx = [base, base | mt, base | mc, base | mc | mt];
        let amps = idx.map(|i| v[i]);
        for (r, &i) in idx.iter().enumerate() {
            v[i] = (0..4).map(|k| g[(r, k)] * amps[k]).sum();
        }
    }
}

/// System state after `t` steps of `schedule`, every molecule held in the
/// register from the start and traced out only at the end.
///
/// Molecules with negative ids start in `mem0`, the others in `molecule`.
/// The system starts in `rho0` and is evolved through the two basis vectors
/// `|0>`, `|1>` by linearity.
pub fn brute_force_system(
    gate: &ComplexMatrix,
    schedule: &CollisionSchedule,
    molecule: [C64; 2],
    mem0: [C64; 2],
    rho0: &DensityMatrix,
    t: usize,
) -> ComplexMatrix {
    let mut ids: Vec<i64> = schedule.events().iter().filter(|e| e.t < t).map(|e| e.mol).collect();
    ids.sort_unstable();
    ids.dedup();
    let m = ids.len();
    let n = m + 1;
    let dim = 1usize << n;
    let mut images: Vec<Vec<C64>> = Vec::new();
    for sys in 0..2 {
        // product state, molecules first
        let mut v = vec![C64::new(1.0, 0.0)];
        for id in &ids {
            let q = if *id < 0 { mem0 } else { molecule };
            v = v.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
        }
        let s = if sys == 0 { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] };
        v = v.iter().flat_map(|a| s.iter().map(move |b| a * b)).collect();
        assert_eq!(v.len(), dim);
        for step in 0..t {
            for e in schedule.events().iter().filter(|e| e.t == step) {
                let q = ids.iter().position(|&x| x == e.mol).unwrap();
                apply_two_qubit(&mut v, n, gate, m, q);
            }
        }
        images.push(v);
    }
    ComplexMatrix::from_fn(2, 2, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let w = rho0.entry(i, j);
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut s = C64::new(0.0, 0.0);
                for env in 0..(dim / 2) {
                    s += images[i][env * 2 + a] * images[j][env * 2 + b].conj();
                }
                acc += w * s;
            }
        }
        acc
    })
}
