//! Completely positive maps: Kraus sets, superoperators, Choi matrices and the
//! divisibility test.
//!
//! Superoperators act on column-stacked density matrices,
//! `vec(ρ)[i + j·d] = ρ_ij`, so that `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use crate::error::{Error, Result};
use crate::gates::UnitaryGate;
use crate::matcore::{
    eigvals_hermitian, inverse, min_singular_value, ComplexMatrix, DensityMatrix, PureState, C64,
    I, ONE, ZERO,
};

pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Default tolerance on the smallest Choi eigenvalue.
pub const DEFAULT_CP_TOL: f64 = 1e-9;
/// Below this smallest singular value a map counts as non-invertible.
pub const SINGULAR_CUTOFF: f64 = 1e-10;
/// Largest Choi non-Hermiticity attributed to round-off.
pub const CHOI_HERMITIAN_TOL: f64 = 1e-10;
/// Outcomes less likely than this cannot be conditioned on.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

/// Kraus operators `M_λ` with `Σ M_λ† M_λ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
    labels: Vec<usize>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>, labels: Vec<usize>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::Shape("empty Kraus set".into()))?;
        let d = first.cols();
        if labels.len() != operators.len() {
            return Err(Error::Shape("one label per operator is required".into()));
        }
        if operators.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::Shape("Kraus operators must share one square shape".into()));
        }
        let set = Self { operators, labels };
        let dev = set.completeness_deviation();
        if dev > COMPLETENESS_TOL {
            return Err(Error::Incomplete(dev));
        }
        Ok(set)
    }

    /// Labels `0, 1, ...` in operator order.
    pub fn from_operators(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..operators.len()).collect();
        Self::new(operators, labels)
    }

    pub fn identity(dim: usize) -> Self {
        Self { operators: vec![ComplexMatrix::identity(dim)], labels: vec![0] }
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.operators[0].rows()
    }

    pub fn operator(&self, label: usize) -> Option<&ComplexMatrix> {
        self.labels.iter().position(|&l| l == label).map(|i| &self.operators[i])
    }

    pub fn completeness_deviation(&self) -> f64 {
        let d = self.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for m in &self.operators {
            sum = &sum + &m.dagger().matmul(m);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }
}

/// `M_λ = <λ| U |Ψ>` for a collision unitary whose most significant slot is
/// the molecule. The operators act on the remaining slots.
pub fn kraus_from_collision(
    u: &UnitaryGate,
    molecule: &PureState,
    readout_basis: &[PureState],
) -> Result<KrausSet> {
    let big = u.matrix().rows();
    let dm = molecule.dim();
    if big % dm != 0 || big == dm {
        return Err(Error::Shape(format!(
            "a {dm}-dimensional molecule does not split a {big}-dimensional collision"
        )));
    }
    if readout_basis.len() != dm || readout_basis.iter().any(|b| b.dim() != dm) {
        return Err(Error::Shape(format!("readout basis must hold {dm} vectors of length {dm}")));
    }
    let mut dev = 0.0_f64;
    for (i, a) in readout_basis.iter().enumerate() {
        for (j, b) in readout_basis.iter().enumerate() {
            let want = if i == j { ONE } else { ZERO };
            dev = dev.max((a.inner(b) - want).norm());
        }
    }
    if dev > 1e-12 {
        return Err(Error::NonOrthonormalBasis(dev));
    }
    let dr = big / dm;
    let um = u.matrix();
    let psi = molecule.amplitudes();
    let operators = readout_basis
        .iter()
        .map(|lam| {
            let l = lam.amplitudes();
            ComplexMatrix::from_fn(dr, dr, |r, c| {
                let mut acc = ZERO;
                for a in 0..dm {
                    for b in 0..dm {
                        acc += l[a].conj() * um[(a * dr + r, b * dr + c)] * psi[b];
                    }
                }
                acc
            })
        })
        .collect();
    KrausSet::from_operators(operators)
}

/// Computational basis `|0>, |1>, ...` of dimension `dim`.
pub fn computational_basis(dim: usize) -> Vec<PureState> {
    (0..dim).map(|i| PureState::basis(dim, i)).collect()
}

fn check_dims(k: &KrausSet, rho: &DensityMatrix) -> Result<()> {
    if k.dim() != rho.dim() {
        return Err(Error::Shape(format!(
            "Kraus operators of dimension {} applied to a {}-dimensional state",
            k.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// `Σ M_λ ρ M_λ†`.
pub fn apply_kraus(k: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dims(k, rho)?;
    let d = rho.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for m in k.operators() {
        out = &out + &rho.matrix().conjugate_by(m);
    }
    DensityMatrix::from_parts(out, rho.slots().to_vec())
}

/// Unnormalized branch `M_λ ρ M_λ†` and its probability.
pub fn branch(k: &KrausSet, rho: &DensityMatrix, label: usize) -> Result<(ComplexMatrix, f64)> {
    check_dims(k, rho)?;
    let m = k
        .operator(label)
        .ok_or_else(|| Error::Shape(format!("no Kraus operator labelled {label}")))?;
    let out = rho.matrix().conjugate_by(m);
    let p = out.trace().re;
    Ok((out, p))
}

/// Conditional state `M_λ ρ M_λ† / p_λ` together with `p_λ`.
pub fn apply_selective(k: &KrausSet, rho: &DensityMatrix, label: usize) -> Result<(DensityMatrix, f64)> {
    let (out, p) = branch(k, rho, label)?;
    if p <= MIN_BRANCH_PROBABILITY {
        return Err(Error::ZeroProbability { label, probability: p });
    }
    let state = DensityMatrix::from_parts(out.scale_real(1.0 / p), rho.slots().to_vec())?;
    Ok((state, p))
}

/// Superoperator on column-stacked `d×d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    superop: ComplexMatrix,
    dim: usize,
}

impl LinearMap {
    pub fn new(superop: ComplexMatrix) -> Result<Self> {
        let n = superop.rows();
        let dim = (n as f64).sqrt().round() as usize;
        if !superop.is_square() || dim * dim != n {
            return Err(Error::Shape(format!(
                "superoperator of shape {}x{} is not d²×d²",
                superop.rows(),
                superop.cols()
            )));
        }
        Ok(Self { superop, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self { superop: ComplexMatrix::identity(dim * dim), dim }
    }

    pub fn superop(&self) -> &ComplexMatrix {
        &self.superop
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(rho.rows(), self.dim, "map dimension mismatch");
        let v = ComplexMatrix::new(self.dim * self.dim, 1, vectorize(rho)).expect("finite");
        unvectorize(&self.superop.matmul(&v).column(0), self.dim)
    }

    /// Largest change of `Tr` over the matrix-unit basis.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let tr: C64 = (0..d).map(|k| self.superop[(k + k * d, i + j * d)]).sum();
                let want = if i == j { ONE } else { ZERO };
                dev = dev.max((tr - want).norm());
            }
        }
        dev
    }
}

pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    let d = m.rows();
    let mut v = vec![ZERO; d * m.cols()];
    for j in 0..m.cols() {
        for i in 0..d {
            v[i + j * d] = m[(i, j)];
        }
    }
    v
}

pub fn unvectorize(v: &[C64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| v[i + j * dim])
}

/// `Σ conj(M) ⊗ M`.
pub fn map_from_kraus(k: &KrausSet) -> LinearMap {
    let d = k.dim();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for m in k.operators() {
        s = &s + &m.conj().kron(m);
    }
    LinearMap { superop: s, dim: d }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &LinearMap, b: &LinearMap) -> Result<LinearMap> {
    if a.dim != b.dim {
        return Err(Error::Shape(format!("maps on dimensions {} and {}", a.dim, b.dim)));
    }
    Ok(LinearMap { superop: a.superop.matmul(&b.superop), dim: a.dim })
}

/// The transpose map, a positive but not completely positive map.
pub fn transpose_map(dim: usize) -> LinearMap {
    let mut s = ComplexMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            s[(j + i * dim, i + j * dim)] = ONE;
        }
    }
    LinearMap { superop: s, dim }
}

/// `C = Σ_ij |i><j| ⊗ M(|i><j|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Smallest eigenvalue, or `None` if the map does not preserve Hermiticity.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        if self.matrix.hermitian_deviation() > CHOI_HERMITIAN_TOL {
            return None;
        }
        let w = eigvals_hermitian(&self.matrix).ok()?;
        w.last().copied()
    }
}

pub fn choi(m: &LinearMap) -> ChoiMatrix {
    let d = m.dim;
    let s = &m.superop;
    let matrix = ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        s[(k + l * d, i + j * d)]
    });
    ChoiMatrix { matrix }
}

pub fn is_cp(c: &ChoiMatrix, tol: f64) -> bool {
    c.min_eigenvalue().is_some_and(|w| w >= -tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divisibility {
    /// A CP intermediate map exists.
    Exists,
    /// The unique intermediate map is not CP.
    NotCp,
    /// The earlier map is numerically singular; no verdict.
    Indeterminate,
}

impl Divisibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Divisibility::Exists => "true",
            Divisibility::NotCp => "false",
            Divisibility::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DivisibilityStep {
    pub verdict: Divisibility,
    pub intermediate: Option<LinearMap>,
    /// Smallest Choi eigenvalue of the intermediate map; negative values
    /// witness non-divisibility.
    pub min_choi_eig: Option<f64>,
}

/// Tests whether `m_t = N ∘ m_prev` with a CP map `N`.
pub fn divisibility_step(m_t: &LinearMap, m_prev: &LinearMap, tol: f64) -> Result<DivisibilityStep> {
    if m_t.dim != m_prev.dim {
        return Err(Error::Shape(format!("maps on dimensions {} and {}", m_t.dim, m_prev.dim)));
    }
    let sigma = min_singular_value(&m_prev.superop)?;
    if sigma <= SINGULAR_CUTOFF {
        return Ok(DivisibilityStep {
            verdict: Divisibility::Indeterminate,
            intermediate: None,
            min_choi_eig: None,
        });
    }
    let inv = inverse(&m_prev.superop)?;
    let intermediate = LinearMap { superop: m_t.superop.matmul(&inv), dim: m_t.dim };
    let c = choi(&intermediate);
    // inversion amplifies round-off by up to 1/σ_min
    let allowed = CHOI_HERMITIAN_TOL / sigma.min(1.0);
    let deviation = c.matrix.hermitian_deviation();
    if deviation > allowed {
        return Ok(DivisibilityStep {
            verdict: Divisibility::Indeterminate,
            intermediate: Some(intermediate),
            min_choi_eig: None,
        });
    }
    let min = eigvals_hermitian(&c.matrix.hermitian_part())?.last().copied();
    let verdict = if min.is_some_and(|w| w >= -tol) { Divisibility::Exists } else { Divisibility::NotCp };
    Ok(DivisibilityStep { verdict, intermediate: Some(intermediate), min_choi_eig: min })
}

/// Reconstructs a linear map from its action on density matrices.
///
/// Off-diagonal matrix units are recovered from
/// `|i><j| = P₊ + i·P₊ᵢ − ½(1+i)(|i><i| + |j><j|)` with
/// `P₊ = |+><+|`, `P₊ᵢ = |+i><+i|` on the `{i, j}` pair.
pub fn map_tomography<F>(mut evolve: F, dim: usize) -> Result<LinearMap>
where
    F: FnMut(&DensityMatrix) -> Result<DensityMatrix>,
{
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Shape(format!("tomography dimension {dim}")));
    }
    let n = dim.trailing_zeros() as usize;
    let names: Vec<String> = (0..n).map(|k| format!("q{k}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut run = |psi: Vec<C64>| -> Result<ComplexMatrix> {
        let state = PureState::normalized(psi)?.to_density(&names)?;
        Ok(evolve(&state)?.into_matrix())
    };

    let mut diag = Vec::with_capacity(dim);
    for i in 0..dim {
        diag.push(run(PureState::basis(dim, i).amplitudes().to_vec())?);
    }
    let mut s = ComplexMatrix::zeros(dim * dim, dim * dim);
    let put = |s: &mut ComplexMatrix, i: usize, j: usize, image: &ComplexMatrix| {
        for (r, z) in vectorize(image).into_iter().enumerate() {
            s[(r, i + j * dim)] = z;
        }
    };
    for i in 0..dim {
        put(&mut s, i, i, &diag[i]);
    }
    let half_one_plus_i = C64::new(0.5, 0.5);
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let mut plus = vec![ZERO; dim];
            plus[i] = ONE;
            plus[j] = ONE;
            let mut plus_i = vec![ZERO; dim];
            plus_i[i] = ONE;
            plus_i[j] = I;
            let a = run(plus)?;
            let b = run(plus_i)?;
            let pops = &diag[i] + &diag[j];
            let image = &(&a + &b.scale(I)) - &pops.scale(half_one_plus_i);
            put(&mut s, i, j, &image);
        }
    }
    LinearMap::new(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{embed, molecule_state, xor_gate, MoleculeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn markov_kraus(phi: f64) -> KrausSet {
        let u = embed(&xor_gate(), &["mol", "sys"], &["sys", "mol"]).unwrap();
        kraus_from_collision(&u, &molecule_state(MoleculeSpec { phi }), &computational_basis(2))
            .unwrap()
    }

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn markov_xor_kraus_blocks() {
        let phi: f64 = 0.37;
        let (s, c) = phi.sin_cos();
        let k = markov_kraus(phi);
        assert!(k.operators()[0].max_abs_diff(&ComplexMatrix::diag(&[r(c), r(s)])) < 1e-15);
        assert!(k.operators()[1].max_abs_diff(&ComplexMatrix::diag(&[r(s), r(c)])) < 1e-15);
        assert!(k.completeness_deviation() < 1e-12);
    }

    #[test]
    fn rejects_bad_readout_and_incomplete_sets() {
        let u = embed(&xor_gate(), &["mol", "sys"], &["sys", "mol"]).unwrap();
        let mol = molecule_state(MoleculeSpec { phi: 0.2 });
        let skew = vec![PureState::basis(2, 0), PureState::normalized(vec![r(1.0), r(1.0)]).unwrap()];
        assert!(matches!(kraus_from_collision(&u, &mol, &skew), Err(Error::NonOrthonormalBasis(_))));
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(matches!(KrausSet::from_operators(vec![half]), Err(Error::Incomplete(_))));
    }

    #[test]
    fn apply_kraus_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = DensityMatrix::random(&mut rng, &["sys"]).unwrap();
        let same = apply_kraus(&KrausSet::identity(2), &rho).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-16);

        let decoupled = apply_kraus(&markov_kraus(std::f64::consts::FRAC_PI_4), &rho).unwrap();
        assert!(decoupled.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let phi = 0.3;
        let out = apply_kraus(&markov_kraus(phi), &rho).unwrap();
        assert!((out.entry(0, 1) - rho.entry(0, 1) * (2.0 * phi).sin()).norm() < 1e-15);
        assert!((out.entry(0, 0) - rho.entry(0, 0)).norm() < 1e-15);
        out.validate().unwrap();

        let two = DensityMatrix::maximally_mixed(&["a", "b"]).unwrap();
        assert!(matches!(apply_kraus(&markov_kraus(phi), &two), Err(Error::Shape(_))));
    }

    #[test]
    fn selective_examples() {
        let rho = DensityMatrix::qubit(0.3, 0.7, ZERO, "sys").unwrap();
        let (state, p) = apply_selective(&markov_kraus(0.0), &rho, 0).unwrap();
        assert!((p - 0.3).abs() < 1e-15);
        let z0 = PureState::basis(2, 0).projector();
        assert!(state.matrix().max_abs_diff(&z0) < 1e-15);

        let phi = 0.5;
        let ket0 = PureState::basis(2, 0).to_density(&["sys"]).unwrap();
        let (state, p) = apply_selective(&markov_kraus(phi), &ket0, 0).unwrap();
        assert!((p - phi.cos().powi(2)).abs() < 1e-15);
        assert!(state.matrix().max_abs_diff(ket0.matrix()) < 1e-15);

        let err = apply_selective(&markov_kraus(0.0), &ket0, 1).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { label: 1, .. }));
    }

    #[test]
    fn selective_branches_average_to_non_selective() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = DensityMatrix::random(&mut rng, &["sys"]).unwrap();
        let k = markov_kraus(0.8);
        let mut avg = ComplexMatrix::zeros(2, 2);
        let mut total = 0.0;
        for &l in k.labels() {
            let (st, p) = apply_selective(&k, &rho, l).unwrap();
            avg = &avg + &st.matrix().scale_real(p);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!(avg.max_abs_diff(apply_kraus(&k, &rho).unwrap().matrix()) < 1e-14);
    }

    #[test]
    fn compose_with_identity_and_iterated_markov() {
        let phi = 0.2;
        let m = map_from_kraus(&markov_kraus(phi));
        assert_eq!(compose(&m, &LinearMap::identity(2)).unwrap(), m);
        let mut acc = LinearMap::identity(2);
        for _ in 0..5 {
            acc = compose(&m, &acc).unwrap();
        }
        let rho = DensityMatrix::qubit(0.4, 0.6, C64::new(0.3, -0.1), "s").unwrap();
        let out = acc.apply(rho.matrix());
        assert!((out[(0, 1)] - rho.entry(0, 1) * (2.0 * phi).sin().powi(5)).norm() < 1e-15);
    }

    #[test]
    fn compose_matches_pairwise_kraus_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = markov_kraus(0.3);
        let u = embed(&crate::gates::sqrt_xor_gate(), &["mol", "sys"], &["sys", "mol"]).unwrap();
        let b = kraus_from_collision(&u, &molecule_state(MoleculeSpec { phi: 0.9 }), &computational_basis(2)).unwrap();
        let composed = compose(&map_from_kraus(&a), &map_from_kraus(&b)).unwrap();
        let rho = DensityMatrix::random(&mut rng, &["s"]).unwrap();
        let mut brute = ComplexMatrix::zeros(2, 2);
        for ma in a.operators() {
            for mb in b.operators() {
                brute = &brute + &rho.matrix().conjugate_by(&ma.matmul(mb));
            }
        }
        assert!(composed.apply(rho.matrix()).max_abs_diff(&brute) < 1e-14);
    }

    #[test]
    fn choi_of_identity_and_transpose() {
        let c = choi(&LinearMap::identity(2));
        let mut omega = ComplexMatrix::zeros(4, 4);
        for &(r0, c0) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            omega[(r0, c0)] = ONE;
        }
        assert_eq!(c.matrix(), &omega);
        assert!(is_cp(&c, DEFAULT_CP_TOL));
        // Choi of transpose is the swap; eigenvalue -1.
        let t = choi(&transpose_map(2));
        assert!((t.min_eigenvalue().unwrap() + 1.0).abs() < 1e-14);
        assert!(!is_cp(&t, DEFAULT_CP_TOL));
        assert!(is_cp(&choi(&map_from_kraus(&markov_kraus(0.4))), DEFAULT_CP_TOL));
    }

    #[test]
    fn divisibility_cases() {
        let m = map_from_kraus(&markov_kraus(0.3));
        let m2 = compose(&m, &m).unwrap();
        let step = divisibility_step(&m2, &m, DEFAULT_CP_TOL).unwrap();
        assert_eq!(step.verdict, Divisibility::Exists);
        assert!(step.intermediate.unwrap().superop().max_abs_diff(m.superop()) < 1e-12);

        let singular = LinearMap::new(ComplexMatrix::zeros(4, 4)).unwrap();
        let step = divisibility_step(&m, &singular, DEFAULT_CP_TOL).unwrap();
        assert_eq!(step.verdict, Divisibility::Indeterminate);
        assert!(step.intermediate.is_none() && step.min_choi_eig.is_none());

        // transpose after identity: intermediate is the transpose itself
        let step = divisibility_step(&transpose_map(2), &LinearMap::identity(2), DEFAULT_CP_TOL).unwrap();
        assert_eq!(step.verdict, Divisibility::NotCp);
        assert!(step.min_choi_eig.unwrap() < -0.5);
    }

    #[test]
    fn tomography_reproduces_kraus_map() {
        let k = markov_kraus(0.45);
        let direct = map_from_kraus(&k);
        let tomo = map_tomography(|rho| apply_kraus(&k, rho), 2).unwrap();
        assert!(tomo.superop().max_abs_diff(direct.superop()) < 1e-12);
        let id = map_tomography(|rho| Ok(rho.clone()), 4).unwrap();
        assert!(id.superop().max_abs_diff(&ComplexMatrix::identity(16)) < 1e-14);
        assert!(tomo.trace_preservation_deviation() < 1e-12);
    }

    #[test]
    fn tomography_of_markov_xor_fixes_diagonal() {
        let phi = 0.6;
        let k = markov_kraus(phi);
        let tomo = map_tomography(|rho| apply_kraus(&k, rho), 2).unwrap();
        for i in 0..2 {
            let mut e = ComplexMatrix::zeros(2, 2);
            e[(i, i)] = ONE;
            assert!(tomo.apply(&e).max_abs_diff(&e) < 1e-14);
        }
        assert!((tomo.superop()[(2, 2)] - r((2.0 * phi).sin())).norm() < 1e-14);
    }
}
