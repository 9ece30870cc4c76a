//! Exact Heisenberg evolution of the open mixed-field Ising chain
//!
//! `H = J Σ_{n<N} Z_n Z_{n+1} + hx Σ_n X_n + hz Σ_n Z_n`
//!
//! by dense diagonalization. This is the ground truth every circuit result is
//! checked against. Site `n` is bit `n - 1` of the dense basis index, the same
//! little-endian layout the circuit simulator uses for system qubits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator, PauliString, SizeDistribution};

/// Largest chain the dense backend accepts.
pub const MAX_DENSE_SITES: usize = 12;

const HERMITIAN_TOLERANCE: f64 = 1e-10;
const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub j: f64,
    pub hx: f64,
    pub hz: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n: 5,
            j: 1.0,
            hx: 1.0,
            hz: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "chain needs at least 2 sites, got {}",
                self.n
            )));
        }
        for (name, v) in [("J", self.j), ("hx", self.hx), ("hz", self.hz)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Same chain with `hz = 0`, the transverse-field Ising model.
    pub fn transverse_field(self) -> Self {
        Self { hz: 0.0, ..self }
    }
}

/// A dense `2^N x 2^N` complex matrix over `N` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    sites: usize,
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{}, not square",
                dim,
                matrix.ncols()
            )));
        }
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::NotPowerOfTwo(dim));
        }
        Ok(Self {
            sites: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    /// Dense matrix of a Pauli string.
    pub fn from_pauli(p: &PauliString) -> Result<Self> {
        check_dense_sites(p.width())?;
        let dim = 1usize << p.width();
        let (x, z, ny) = p.xz_masks();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[((i ^ x as usize), i)] = pauli_phase(i, z, ny);
        }
        Ok(Self {
            sites: p.width(),
            matrix: m,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOLERANCE
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

fn check_dense_sites(n: usize) -> Result<()> {
    if n > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            what: "sites (dense backend)",
            requested: n,
            cap: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

/// Phase `ph` in `P|i⟩ = ph |i ⊕ x⟩` for a string with Z-type mask `z` and
/// `ny` Y factors: `i^{ny} (-1)^{popcount(i & z)}`.
#[inline]
fn pauli_phase(i: usize, z: u64, ny: u32) -> Complex64 {
    let sign_flips = (i as u64 & z).count_ones();
    crate::pauli::Phase::from_exponent(((ny + 2 * sign_flips) % 4) as u8).to_complex()
}

/// Dense Hamiltonian of the open chain.
pub fn build_hamiltonian(params: &ModelParams) -> Result<DenseOperator> {
    params.validate()?;
    check_dense_sites(params.n)?;
    let n = params.n;
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let spin = |site: usize| if (i >> site) & 1 == 0 { 1.0 } else { -1.0 };
        let zz: f64 = (0..n - 1).map(|s| spin(s) * spin(s + 1)).sum();
        let z: f64 = (0..n).map(spin).sum();
        m[(i, i)] = Complex64::new(params.j * zz + params.hz * z, 0.0);
        for s in 0..n {
            m[(i ^ (1 << s), i)] += Complex64::new(params.hx, 0.0);
        }
    }
    DenseOperator::from_matrix(m)
}

/// Eigendecomposition of a Hermitian `H`, reused across evolution times.
pub struct HeisenbergEvolver {
    sites: usize,
    energies: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl HeisenbergEvolver {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        let err = h.hermiticity_error();
        if err >= HERMITIAN_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian is not Hermitian (max |H - H†| = {err:e})"
            )));
        }
        let eig = SymmetricEigen::try_new(h.matrix.clone(), 1e-14, 0)
            .ok_or_else(|| Error::Invariant("eigensolver failed to converge".into()))?;
        Ok(Self {
            sites: h.sites,
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `O(t) = e^{iHt} O(0) e^{-iHt}`.
    pub fn evolve(&self, o0: &DenseOperator, t: f64) -> Result<DenseOperator> {
        if o0.sites != self.sites {
            return Err(Error::WidthMismatch {
                left: self.sites,
                right: o0.sites,
            });
        }
        if t == 0.0 {
            return Ok(o0.clone());
        }
        let v = &self.vectors;
        // In the eigenbasis the conjugation is entrywise: W_ab e^{i(E_a - E_b)t}.
        let mut w = v.adjoint() * &o0.matrix * v;
        for b in 0..w.ncols() {
            for a in 0..w.nrows() {
                let phase = (self.energies[a] - self.energies[b]) * t;
                w[(a, b)] *= Complex64::from_polar(1.0, phase);
            }
        }
        Ok(DenseOperator {
            sites: self.sites,
            matrix: v * w * v.adjoint(),
        })
    }
}

/// One-shot [`HeisenbergEvolver::evolve`].
pub fn heisenberg_evolve(o0: &DenseOperator, h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    HeisenbergEvolver::new(h)?.evolve(o0, t)
}

/// `C_k = 2^{-N} tr(O P_k)` for every Pauli string. For Hermitian `O` the
/// coefficients are checked to be real and stored as such.
pub fn pauli_coefficients(o: &DenseOperator) -> Result<PauliOperator> {
    let n = o.sites;
    check_dense_sites(n)?;
    let dim = o.dim();
    let hermitian = o.is_hermitian();
    let norm = 1.0 / dim as f64;
    let m = &o.matrix;
    let mut op = PauliOperator::new(n)?;
    for p in PauliString::enumerate(n)? {
        let (x, z, ny) = p.xz_masks();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            acc += m[(i, i ^ x as usize)] * pauli_phase(i, z, ny);
        }
        let mut c = acc * norm;
        if hermitian {
            if c.im.abs() > HERMITIAN_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "Hermitian operator has complex coefficient {c} on {p}"
                )));
            }
            c = Complex64::new(c.re, 0.0);
        }
        op.insert(p, c)?;
    }
    Ok(op)
}

/// Oracle values at one time point.
#[derive(Clone, Debug, PartialEq)]
pub struct OraclePoint {
    pub t: f64,
    pub average_size: f64,
    pub distribution: SizeDistribution,
    /// Operator density at sites `1..=N`.
    pub densities: Vec<f64>,
}

/// Exact size curve of the seed `pauli` at 1-based `site` over `t_grid`.
pub fn reference_size_curve(
    params: &ModelParams,
    site: usize,
    pauli: Pauli,
    t_grid: &[f64],
) -> Result<Vec<OraclePoint>> {
    let h = build_hamiltonian(params)?;
    let evolver = HeisenbergEvolver::new(&h)?;
    let seed = PauliString::single(params.n, site, pauli)?;
    if seed.is_identity() {
        return Err(Error::InvalidParameter(
            "seed Pauli must be X, Y or Z".into(),
        ));
    }
    let o0 = DenseOperator::from_pauli(&seed)?;
    t_grid
        .par_iter()
        .map(|&t| {
            let ot = evolver.evolve(&o0, t)?;
            let coeffs = pauli_coefficients(&ot)?;
            let weight = coeffs.total_weight();
            if (weight - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "Pauli weight {weight} at t = {t} is not conserved"
                )));
            }
            Ok(OraclePoint {
                t,
                average_size: coeffs.average_size()?,
                distribution: coeffs.size_distribution()?,
                densities: coeffs.operator_densities()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(n: usize, hx: f64, hz: f64) -> ModelParams {
        ModelParams { n, j: 1.0, hx, hz }
    }

    fn frob(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).norm()
    }

    fn seed(n: usize, site: usize, p: Pauli) -> DenseOperator {
        DenseOperator::from_pauli(&PauliString::single(n, site, p).unwrap()).unwrap()
    }

    #[test]
    fn zz_only_hamiltonian_is_diagonal() {
        let h = build_hamiltonian(&params(2, 0.0, 0.0)).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(
            [1.0, -1.0, -1.0, 1.0]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        ));
        assert_eq!(h.matrix(), &expected);
    }

    #[test]
    fn hamiltonian_matches_pauli_sum() {
        // Independent construction from dense Pauli strings.
        let p = ModelParams {
            n: 4,
            j: 0.7,
            hx: 1.1,
            hz: 0.3,
        };
        let dense = |s: &str| {
            DenseOperator::from_pauli(&s.parse().unwrap())
                .unwrap()
                .into_matrix()
        };
        let mut expected = DMatrix::<Complex64>::zeros(16, 16);
        for s in ["ZZII", "IZZI", "IIZZ"] {
            expected += dense(s) * Complex64::new(p.j, 0.0);
        }
        for s in ["XIII", "IXII", "IIXI", "IIIX"] {
            expected += dense(s) * Complex64::new(p.hx, 0.0);
        }
        for s in ["ZIII", "IZII", "IIZI", "IIIZ"] {
            expected += dense(s) * Complex64::new(p.hz, 0.0);
        }
        let h = build_hamiltonian(&p).unwrap();
        assert!(frob(h.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn hamiltonian_properties() {
        let h = build_hamiltonian(&params(5, 1.0, 0.3)).unwrap();
        assert_eq!(h.dim(), 32);
        assert!(h.is_hermitian());
        assert!(h.trace().norm() < 1e-12);
        assert!(matches!(
            build_hamiltonian(&params(13, 1.0, 0.0)),
            Err(Error::TooLarge { .. })
        ));
        assert!(build_hamiltonian(&params(1, 1.0, 0.0)).is_err());
        assert!(build_hamiltonian(&ModelParams {
            hx: f64::NAN,
            ..params(3, 1.0, 0.0)
        })
        .is_err());
    }

    #[test]
    fn dense_pauli_site_layout() {
        // X on site 1 flips bit 0.
        let x1 = seed(2, 1, Pauli::X);
        assert_eq!(x1.matrix()[(1, 0)], Complex64::new(1.0, 0.0));
        let y2 = seed(2, 2, Pauli::Y);
        // Y|0⟩ = i|1⟩ on bit 1
        assert_eq!(y2.matrix()[(2, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(y2.matrix()[(0, 2)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let h = build_hamiltonian(&params(4, 1.0, 0.3)).unwrap();
        let o0 = seed(4, 2, Pauli::X);
        assert_eq!(heisenberg_evolve(&o0, &h, 0.0).unwrap(), o0);
    }

    #[test]
    fn conserved_operator_is_static() {
        let h = build_hamiltonian(&params(4, 0.0, 0.5)).unwrap();
        let o0 = seed(4, 1, Pauli::Z);
        for t in [0.3, 1.0, 7.5] {
            let ot = heisenberg_evolve(&o0, &h, t).unwrap();
            assert!(frob(ot.matrix(), o0.matrix()) < 1e-10);
        }
    }

    #[test]
    fn evolution_preserves_frobenius_norm_and_reverses() {
        let h = build_hamiltonian(&params(5, 1.0, 0.3)).unwrap();
        let ev = HeisenbergEvolver::new(&h).unwrap();
        let o0 = seed(5, 3, Pauli::X);
        for t in [0.5, 2.0, 9.0] {
            let ot = ev.evolve(&o0, t).unwrap();
            let tr = (ot.matrix() * ot.matrix()).trace() / 32.0;
            assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(ot.is_hermitian());
            let back = ev.evolve(&ot, -t).unwrap();
            assert!(frob(back.matrix(), o0.matrix()) < 1e-9);
        }
    }

    #[test]
    fn evolution_matches_series_exponential() {
        // Oracle: U = e^{-iHt} by Taylor series with many terms at small t.
        let h = build_hamiltonian(&params(3, 1.0, 0.3)).unwrap();
        let t = 0.4;
        let dim = h.dim();
        let a = h.matrix() * Complex64::new(0.0, -t);
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        let mut term = u.clone();
        for k in 1..40 {
            term = &term * &a / Complex64::new(k as f64, 0.0);
            u += &term;
        }
        let o0 = seed(3, 2, Pauli::X);
        let expected = u.adjoint() * o0.matrix() * &u;
        let got = heisenberg_evolve(&o0, &h, t).unwrap();
        assert!(frob(got.matrix(), &expected) < 1e-11);
    }

    #[test]
    fn coefficients_of_single_pauli() {
        let x3 = seed(5, 3, Pauli::X);
        let c = pauli_coefficients(&x3).unwrap();
        assert_eq!(c.len(), 1);
        let p: PauliString = "IIXII".parse().unwrap();
        assert_eq!(c.coefficient(&p), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn coefficients_reconstruct_random_hermitian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dim = 8;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let o = DenseOperator::from_matrix(herm.clone()).unwrap();
        let coeffs = pauli_coefficients(&o).unwrap();
        assert!(coeffs.terms().all(|(_, c)| c.im == 0.0));
        let mut rebuilt = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, c) in coeffs.terms() {
            rebuilt += DenseOperator::from_pauli(p).unwrap().into_matrix() * *c;
        }
        assert!(frob(&rebuilt, &herm) < 1e-9);
    }

    #[test]
    fn coefficients_reject_bad_dimension() {
        let m = DMatrix::<Complex64>::zeros(6, 6);
        assert!(matches!(
            DenseOperator::from_matrix(m),
            Err(Error::NotPowerOfTwo(6))
        ));
    }

    #[test]
    fn evolved_coefficients_are_real_and_traceless() {
        let h = build_hamiltonian(&params(4, 1.0, 0.3)).unwrap();
        let ot = heisenberg_evolve(&seed(4, 2, Pauli::X), &h, 1.7).unwrap();
        let c = pauli_coefficients(&ot).unwrap();
        assert!((c.total_weight() - 1.0).abs() < 1e-9);
        let id = PauliString::identity(4).unwrap();
        assert!(c.coefficient(&id).norm() < 1e-10);
        assert!(ot.trace().norm() / 16.0 < 1e-10);
    }

    #[test]
    fn curve_starts_at_size_one() {
        let curve = reference_size_curve(&params(5, 1.0, 0.3), 3, Pauli::X, &[0.0, 1.0]).unwrap();
        assert_eq!(curve[0].average_size, 1.0);
        assert_eq!(
            curve[0].distribution.probs(),
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(curve[0].densities, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let d: f64 = curve[1].densities.iter().sum();
        assert!((d - curve[1].average_size).abs() < 1e-12);
    }

    #[test]
    fn curve_shapes_for_integrable_and_chaotic_chains() {
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let tfim = reference_size_curve(&params(5, 1.0, 0.0), 3, Pauli::X, &grid).unwrap();
        let sizes: Vec<f64> = tfim.iter().map(|p| p.average_size).collect();
        let dip = (0..sizes.len())
            .flat_map(|i| (i + 1..sizes.len()).map(move |j| (i, j)))
            .map(|(i, j)| sizes[i] - sizes[j])
            .fold(f64::MIN, f64::max);
        assert!(
            dip > 0.2,
            "integrable curve should oscillate, max drop {dip}"
        );

        let mfim = reference_size_curve(&params(5, 1.0, 0.3), 3, Pauli::X, &grid).unwrap();
        let sizes: Vec<f64> = mfim.iter().map(|p| p.average_size).collect();
        let max = sizes.iter().cloned().fold(f64::MIN, f64::max);
        let tail = &sizes[3 * sizes.len() / 4..];
        let tail_avg = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((max - tail_avg) / max < 0.15);
    }
}
