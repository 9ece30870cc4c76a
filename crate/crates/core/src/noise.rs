//! Single-qubit depolarizing noise
//!
//! `ρ → (1 - p) ρ + (p/3)(XρX + YρY + ZρZ)`
//!
//! applied independently to every qubit a gate touches, right after the gate.
//! Two backends: an exact density matrix for small registers, and stochastic
//! Pauli trajectories that insert a uniformly random X, Y or Z with
//! probability `p` per touched qubit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, Gate, GateKind, Protocol, Segment};
use crate::error::{Error, Result};
use crate::kernels;
use crate::pauli::{Pauli, SizeDistribution};
use crate::simulator::{
    distribution_from_probabilities, readout_from_probabilities, SizeReadout, StateVector,
};

/// Which protocol stages receive noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NoiseScope {
    /// Every gate: preparation, evolution, insertion and decoding.
    #[default]
    All,
    /// Only the Trotterized sandwich; Bell preparation and decoding are ideal.
    TrotterOnly,
}

impl NoiseScope {
    pub fn name(self) -> &'static str {
        match self {
            NoiseScope::All => "all",
            NoiseScope::TrotterOnly => "trotter-only",
        }
    }
}

impl std::str::FromStr for NoiseScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(NoiseScope::All),
            "trotter-only" => Ok(NoiseScope::TrotterOnly),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise scope '{other}' (expected 'all' or 'trotter-only')"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    p: f64,
    scope: NoiseScope,
}

impl NoiseModel {
    pub fn new(p: f64, scope: NoiseScope) -> Result<Self> {
        check_rate(p)?;
        Ok(Self { p, scope })
    }

    pub fn noiseless() -> Self {
        Self {
            p: 0.0,
            scope: NoiseScope::All,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scope(&self) -> NoiseScope {
        self.scope
    }

    /// Same scope at rate `factor · p`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.p * factor, self.scope)
    }

    /// Depolarizing rate used on gates of `segment`.
    pub fn rate_for(&self, segment: Segment) -> f64 {
        match (self.scope, segment) {
            (NoiseScope::TrotterOnly, Segment::Prep | Segment::Decode) => 0.0,
            _ => self.p,
        }
    }
}

fn check_rate(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing rate must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Row-major density matrix stored as a `2n`-qubit vector: entry `ρ[r, c]`
/// lives at index `(r << n) | c`, so a left factor acts on bits `n..2n` and
/// a right factor on bits `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Largest register the dense backend accepts (dimension 1024).
    pub const MAX_QUBITS: usize = 10;

    fn check_size(num_qubits: usize) -> Result<()> {
        if num_qubits == 0 || num_qubits > Self::MAX_QUBITS {
            return Err(Error::TooLarge {
                what: "qubits (density matrix)",
                requested: num_qubits,
                cap: Self::MAX_QUBITS,
            });
        }
        Ok(())
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::check_size(num_qubits)?;
        let mut data = vec![Complex64::new(0.0, 0.0); 1 << (2 * num_qubits)];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, data })
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = state.num_qubits();
        Self::check_size(n)?;
        let amps = state.amplitudes();
        let mut data = Vec::with_capacity(1 << (2 * n));
        for r in amps {
            for c in amps {
                data.push(r * c.conj());
            }
        }
        Ok(Self {
            num_qubits: n,
            data,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row << self.num_qubits) | col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Diagonal of `ρ` as real probabilities.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// `ρ → U ρ U†`.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        for &q in gate.qubits() {
            self.check_qubit(q)?;
        }
        kernels::apply_gate(&mut self.data, gate, self.num_qubits, false);
        kernels::apply_gate(&mut self.data, gate, 0, true);
        Ok(())
    }

    /// Depolarizing channel with rate `p` on `qubit`.
    pub fn depolarize(&mut self, qubit: usize, p: f64) -> Result<()> {
        check_rate(p)?;
        self.check_qubit(qubit)?;
        if p > 0.0 {
            kernels::depolarize(&mut self.data, qubit + self.num_qubits, qubit, p);
        }
        Ok(())
    }

    /// Applies each gate followed by depolarizing at rate `p` on every qubit
    /// the gate touches.
    pub fn run_noisy(&mut self, circuit: &Circuit, p: f64) -> Result<()> {
        check_rate(p)?;
        if circuit.num_qubits() > self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: circuit.num_qubits() - 1,
                num_qubits: self.num_qubits,
            });
        }
        let n = self.num_qubits;
        // Single-qubit channels on distinct qubits commute, so each qubit
        // accumulates its gate-plus-noise maps until a two-qubit gate needs it.
        let noise = kernels::super_depolarize(p);
        let mut pending: Vec<Option<kernels::Super4>> = vec![None; n];
        for g in circuit.gates() {
            for &q in g.qubits() {
                self.check_qubit(q)?;
            }
            if let Some(u) = kernels::single_qubit_matrix(g.kind(), g.angle()) {
                let q = g.qubits()[0];
                let step = kernels::super_compose(&noise, &kernels::super_unitary(&u));
                let prev = pending[q].unwrap_or_else(kernels::super_identity);
                pending[q] = Some(kernels::super_compose(&step, &prev));
                continue;
            }
            for &q in g.qubits() {
                if let Some(s) = pending[q].take() {
                    kernels::dm_superop(&mut self.data, n, q, &s);
                }
            }
            if g.kind() == GateKind::Rzz {
                let (a, b) = (g.qubits()[0], g.qubits()[1]);
                kernels::dm_rzz_noisy(&mut self.data, n, a, b, g.angle(), p);
            } else {
                self.apply_gate(g)?;
                for &q in g.qubits() {
                    self.depolarize(q, p)?;
                }
            }
        }
        for (q, s) in pending.into_iter().enumerate() {
            if let Some(s) = s {
                kernels::dm_superop(&mut self.data, n, q, &s);
            }
        }
        Ok(())
    }

    fn pairs(&self) -> Result<usize> {
        if !self.num_qubits.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "Bell readout needs an even register, got {} qubits",
                self.num_qubits
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::NotNormalized(tr.re));
        }
        Ok(self.num_qubits / 2)
    }

    /// Size expectation of an already-decoded density matrix.
    pub fn size_expectation(&self) -> Result<SizeReadout> {
        let n = self.pairs()?;
        Ok(readout_from_probabilities(n, &self.diagonal()))
    }

    /// Size distribution of an already-decoded density matrix.
    pub fn size_distribution(&self) -> Result<SizeDistribution> {
        let n = self.pairs()?;
        Ok(distribution_from_probabilities(n, &self.diagonal()))
    }
}

/// Runs the protocol from `|0…0⟩⟨0…0|` with exact depolarizing noise. The
/// returned matrix is in the decoded frame.
pub fn run_noisy_dm(protocol: &Protocol, noise: &NoiseModel) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero(protocol.num_qubits())?;
    for (segment, circuit) in protocol.segments() {
        rho.run_noisy(circuit, noise.rate_for(segment))?;
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::Invariant(format!("noisy run lost trace: {tr}")));
    }
    Ok(rho)
}

/// Trajectory-averaged size estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n_traj`.
    pub stderr: f64,
    /// Average of the per-trajectory exact size distributions.
    pub distribution: SizeDistribution,
    /// Per-site densities averaged over trajectories.
    pub densities: Vec<f64>,
    pub n_traj: usize,
    /// Total number of inserted Pauli errors across all trajectories.
    pub inserted_errors: u64,
}

struct Trajectory {
    readout: SizeReadout,
    distribution: SizeDistribution,
    errors: u64,
}

const RANDOM_PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn run_trajectory(
    protocol: &Protocol,
    noise: &NoiseModel,
    seed: u64,
    index: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut state = StateVector::zero(protocol.num_qubits())?;
    let mut errors = 0u64;
    for (segment, circuit) in protocol.segments() {
        let p = noise.rate_for(segment);
        for g in circuit.gates() {
            state.apply_gate(g)?;
            if p == 0.0 {
                continue;
            }
            for &q in g.qubits() {
                if rng.gen::<f64>() < p {
                    let pauli = RANDOM_PAULIS[rng.gen_range(0..3)];
                    state.apply_gate(&Gate::pauli(pauli, q).expect("non-identity"))?;
                    errors += 1;
                }
            }
        }
    }
    let frame = crate::simulator::Frame::Decoded;
    Ok(Trajectory {
        readout: state.exact_size_expectation(frame)?,
        distribution: state.exact_size_distribution(frame)?,
        errors,
    })
}

/// Neumaier-compensated sum in iteration order.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Averages `n_traj` stochastic pure-state runs of the protocol. Trajectory
/// `k` draws from its own ChaCha stream `k` of `seed`, so the result does not
/// depend on scheduling.
pub fn run_noisy_trajectories(
    protocol: &Protocol,
    noise: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEstimate> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory".into(),
        ));
    }
    let runs: Vec<Trajectory> = (0..n_traj as u64)
        .into_par_iter()
        .map(|k| run_trajectory(protocol, noise, seed, k))
        .collect::<Result<_>>()?;

    let n = protocol.sites();
    let count = n_traj as f64;
    let mean = compensated_sum(runs.iter().map(|r| r.readout.average)) / count;
    let var = if n_traj > 1 {
        compensated_sum(runs.iter().map(|r| (r.readout.average - mean).powi(2))) / (count - 1.0)
    } else {
        0.0
    };
    let densities = (0..n)
        .map(|q| compensated_sum(runs.iter().map(|r| r.readout.densities[q])) / count)
        .collect();
    let probs = (0..=n)
        .map(|l| compensated_sum(runs.iter().map(|r| r.distribution.prob(l))) / count)
        .collect();
    Ok(TrajectoryEstimate {
        mean,
        stderr: (var / count).sqrt(),
        distribution: SizeDistribution::from_raw(probs),
        densities,
        n_traj,
        inserted_errors: runs.iter().map(|r| r.errors).sum(),
    })
}
