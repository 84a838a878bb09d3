//! Correlations between the system and its satellite memory.
//!
//! Two-qubit states are taken in `|mem, sys>` slot order. The memory is the
//! measured side by default: `J(S:M) = H(S) − Σ_j p_j H(S | Π_j^M)`, maximized
//! over rank-1 projective measurements `{Π, 1 − Π}` on the memory.

use rayon::prelude::*;

use crate::chains::{
    stationary_state, stationary_state_iterated, ChainModel, ModelKind, MEM, SYS,
};
use crate::error::{Error, Result};
use crate::matcore::{entropy_of_spectrum, eigvals_hermitian, ComplexMatrix, DensityMatrix, C64, ZERO};

pub const GRID_THETA: usize = 64;
pub const GRID_PSI: usize = 128;
pub const SIMPLEX_TOL: f64 = 1e-9;
const SIMPLEX_MAX_ITER: usize = 5000;
/// Discord above this marks quantum non-Markovianity.
pub const DEFAULT_DISCORD_THRESHOLD: f64 = 1e-6;

/// Which qubit of a `|mem, sys>` pair is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MeasuredSide {
    /// Slot 0.
    #[default]
    Memory,
    /// Slot 1.
    System,
}

/// `Π₀ = |n><n|` with `|n> = cos(θ/2)|0> + e^{iψ} sin(θ/2)|1>`, `Π₁ = 1 − Π₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectivePair {
    pub theta: f64,
    pub psi: f64,
}

impl ProjectivePair {
    pub fn new(theta: f64, psi: f64) -> Self {
        Self { theta, psi }
    }

    pub fn computational() -> Self {
        Self { theta: 0.0, psi: 0.0 }
    }

    pub fn projectors(&self) -> [ComplexMatrix; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let n = [C64::new(c, 0.0), C64::from_polar(s, self.psi)];
        let p0 = ComplexMatrix::outer(&n, &n);
        let p1 = &ComplexMatrix::identity(2) - &p0;
        [p0, p1]
    }

    /// Same measurement with `θ ∈ [0, π]` and `ψ ∈ [0, 2π)`; `Π₀`/`Π₁` may swap.
    pub fn canonical(&self) -> Self {
        let tau = std::f64::consts::TAU;
        let mut theta = self.theta.rem_euclid(tau);
        let mut psi = self.psi;
        if theta > std::f64::consts::PI {
            theta = tau - theta;
            psi += std::f64::consts::PI;
        }
        Self { theta, psi: psi.rem_euclid(tau) }
    }
}

fn check_pair(rho: &DensityMatrix) -> Result<()> {
    if rho.n_qubits() != 2 {
        return Err(Error::Shape(format!("expected a two-qubit state, got {} qubits", rho.n_qubits())));
    }
    Ok(())
}

/// Entropy in bits of a 2×2 Hermitian matrix with the given trace normalization.
fn qubit_entropy(m: &ComplexMatrix) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).sqrt();
    entropy_of_spectrum(&[(tr + disc) / 2.0, (tr - disc) / 2.0])
}

/// Unnormalized state of the unmeasured qubit after outcome `Π`.
fn conditional(m: &ComplexMatrix, pi: &ComplexMatrix, side: MeasuredSide) -> ComplexMatrix {
    // ρ[(a, s), (b, s')] with `a, b` on the measured qubit
    let idx = |a: usize, s: usize| match side {
        MeasuredSide::Memory => 2 * a + s,
        MeasuredSide::System => 2 * s + a,
    };
    ComplexMatrix::from_fn(2, 2, |s, sp| {
        let mut acc = ZERO;
        for a in 0..2 {
            for b in 0..2 {
                acc += pi[(b, a)] * m[(idx(a, s), idx(b, sp))];
            }
        }
        acc
    })
}

fn unmeasured_marginal(m: &ComplexMatrix, side: MeasuredSide) -> ComplexMatrix {
    conditional(m, &ComplexMatrix::identity(2), side)
}

fn measured_marginal(m: &ComplexMatrix, side: MeasuredSide) -> ComplexMatrix {
    let other = match side {
        MeasuredSide::Memory => MeasuredSide::System,
        MeasuredSide::System => MeasuredSide::Memory,
    };
    unmeasured_marginal(m, other)
}

/// `Σ_j p_j H(ρ_{S|j})` for one measurement.
fn average_conditional_entropy(m: &ComplexMatrix, pair: &ProjectivePair, side: MeasuredSide) -> f64 {
    pair.projectors()
        .iter()
        .map(|pi| {
            let c = conditional(m, pi, side);
            let p = c.trace().re;
            if p <= 0.0 {
                0.0
            } else {
                p * qubit_entropy(&c.scale_real(1.0 / p))
            }
        })
        .sum()
}

/// `I(S:M) = H(S) + H(M) − H(S,M)` in bits.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    check_pair(rho)?;
    let m = rho.matrix();
    let hs = qubit_entropy(&unmeasured_marginal(m, MeasuredSide::Memory));
    let hm = qubit_entropy(&measured_marginal(m, MeasuredSide::Memory));
    let joint = entropy_of_spectrum(&eigvals_hermitian(&m.hermitian_part())?);
    Ok(hs + hm - joint)
}

/// Classical correlation for one fixed measurement on `side`.
pub fn classical_correlation_fixed(rho: &DensityMatrix, pair: &ProjectivePair, side: MeasuredSide) -> Result<f64> {
    check_pair(rho)?;
    let m = rho.matrix();
    Ok(qubit_entropy(&unmeasured_marginal(m, side)) - average_conditional_entropy(m, pair, side))
}

/// Maximal classical correlation over projective measurements on `side`,
/// with the maximizing measurement.
pub fn classical_correlation(rho: &DensityMatrix, side: MeasuredSide) -> Result<(f64, ProjectivePair)> {
    check_pair(rho)?;
    let m = rho.matrix();
    let h_unmeasured = qubit_entropy(&unmeasured_marginal(m, side));
    let cost = |x: [f64; 2]| average_conditional_entropy(m, &ProjectivePair::new(x[0], x[1]), side);

    let dt = std::f64::consts::PI / GRID_THETA as f64;
    let dp = std::f64::consts::TAU / GRID_PSI as f64;
    let grid: Vec<(f64, [f64; 2])> = (0..GRID_THETA * GRID_PSI)
        .into_par_iter()
        .map(|k| {
            let x = [(k / GRID_PSI) as f64 * dt, (k % GRID_PSI) as f64 * dp];
            (cost(x), x)
        })
        .collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].0.total_cmp(&grid[b].0).then(a.cmp(&b)));

    let mut best = grid[order[0]];
    for &k in order.iter().take(3) {
        let refined = nelder_mead(&cost, grid[k].1, [dt, dp]);
        if refined.0 < best.0 {
            best = refined;
        }
    }
    let pair = ProjectivePair::new(best.1[0], best.1[1]).canonical();
    Ok((h_unmeasured - best.0, pair))
}

/// Minimizes `f` from `start` with initial simplex steps `step`, until every
/// vertex lies within [`SIMPLEX_TOL`] of the best one.
fn nelder_mead(f: &impl Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2]) -> (f64, [f64; 2]) {
    let mut s: Vec<(f64, [f64; 2])> = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]]
        .into_iter()
        .map(|x| (f(x), x))
        .collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..SIMPLEX_MAX_ITER {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = s[1..]
            .iter()
            .map(|v| (v.1[0] - s[0].1[0]).abs().max((v.1[1] - s[0].1[1]).abs()))
            .fold(0.0, f64::max);
        if spread < SIMPLEX_TOL {
            break;
        }
        let centroid = lerp(s[0].1, s[1].1, 0.5);
        let worst = s[2];
        let xr = lerp(centroid, worst.1, -1.0);
        let fr = f(xr);
        if fr < s[0].0 {
            let xe = lerp(centroid, worst.1, -2.0);
            let fe = f(xe);
            s[2] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < s[1].0 {
            s[2] = (fr, xr);
        } else {
            let (xc, fc) = if fr < worst.0 {
                let x = lerp(centroid, xr, 0.5);
                (x, f(x))
            } else {
                let x = lerp(centroid, worst.1, 0.5);
                (x, f(x))
            };
            if fc < worst.0.min(fr) {
                s[2] = (fc, xc);
            } else {
                let b = s[0].1;
                for v in s.iter_mut().skip(1) {
                    let x = lerp(b, v.1, 0.5);
                    *v = (f(x), x);
                }
            }
        }
    }
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s[0]
}

/// `I − J` with the measurement on `side`; raw, not clamped.
pub fn discord(rho: &DensityMatrix, side: MeasuredSide) -> Result<f64> {
    Ok(mutual_information(rho)? - classical_correlation(rho, side)?.0)
}

/// Smallest eigenvalue of the partial transpose on `slot`.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix, slot: &str) -> Result<f64> {
    let pt = rho.partial_transpose(slot)?;
    Ok(eigvals_hermitian(&pt.hermitian_part())?.last().copied().unwrap_or(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Markovian,
    ClassicalNm,
    QuantumNm,
    /// Non-Markovian, but no two-qubit stationary state to measure.
    Unresolved,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Markovian => "Markovian",
            Classification::ClassicalNm => "classical NM",
            Classification::QuantumNm => "quantum NM",
            Classification::Unresolved => "NM (measures not computed)",
        }
    }
}

/// Counts and measures of non-Markovianity. The measures are `None` when the
/// satellite memory is not a single qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct NMReport {
    pub count_qubits: usize,
    pub mutual_info: Option<f64>,
    pub classical_j: Option<f64>,
    pub discord: Option<f64>,
    /// `J` in the computational basis of the measured qubit.
    pub fixed_basis_j: Option<f64>,
    pub classification: Classification,
    pub argmax_basis: Option<ProjectivePair>,
}

#[derive(Clone, Debug)]
pub struct NmOptions {
    pub memory: DensityMatrix,
    pub threshold: f64,
    pub side: MeasuredSide,
    /// Horizon of the schedule used for the satellite count.
    pub horizon: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            memory: DensityMatrix::qubit(1.0, 0.0, ZERO, MEM).expect("|0><0|"),
            threshold: DEFAULT_DISCORD_THRESHOLD,
            side: MeasuredSide::Memory,
            horizon: 12,
        }
    }
}

/// Stationary memory+system state of an overlap model, from the closed form
/// when it applies and by iteration otherwise.
pub fn stationary_compound(model: &ChainModel, rho0: &DensityMatrix, mem0: &DensityMatrix) -> Result<DensityMatrix> {
    match stationary_state(model, rho0, mem0) {
        Err(Error::ClosedFormInapplicable(_)) => {
            let start = mem0.relabel(&[MEM])?.tensor(&rho0.relabel(&[SYS])?)?;
            Ok(stationary_state_iterated(model, &start)?.0)
        }
        other => other,
    }
}

/// Report for `model` started from system state `rho0`.
pub fn nm_report(model: &ChainModel, rho0: &DensityMatrix, opts: &NmOptions) -> Result<NMReport> {
    let count = model.schedule(opts.horizon)?.satellite_count();
    let mut report = NMReport {
        count_qubits: count,
        mutual_info: None,
        classical_j: None,
        discord: None,
        fixed_basis_j: None,
        classification: Classification::Unresolved,
        argmax_basis: None,
    };
    match model.kind() {
        ModelKind::MarkovXor => {
            report.mutual_info = Some(0.0);
            report.classical_j = Some(0.0);
            report.discord = Some(0.0);
            report.fixed_basis_j = Some(0.0);
            report.classification = Classification::Markovian;
        }
        ModelKind::RepeatedXor | ModelKind::DistributedSqrtXor => {
            let st = stationary_compound(model, rho0, &opts.memory)?;
            let i = mutual_information(&st)?;
            let (j, basis) = classical_correlation(&st, opts.side)?;
            let d = i - j;
            report.mutual_info = Some(i);
            report.classical_j = Some(j);
            report.discord = Some(d);
            report.fixed_basis_j = Some(classical_correlation_fixed(&st, &ProjectivePair::computational(), opts.side)?);
            report.argmax_basis = Some(basis);
            report.classification =
                if d > opts.threshold { Classification::QuantumNm } else { Classification::ClassicalNm };
        }
        ModelKind::Custom => {
            if count == 0 {
                report.classification = Classification::Markovian;
            }
        }
    }
    Ok(report)
}
