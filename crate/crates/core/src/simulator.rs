//! Dense statevector engine on `2N` qubits with Bell-measurement readout.
//!
//! Amplitudes are little-endian: qubit 0 is the least significant bit of the
//! basis index. After decoding, the basis index `i` of a `2N`-qubit register
//! splits into `z = i & (2^N - 1)` (system qubits) and `x = i >> N`
//! (ancillas); pair `n` is non-identity iff bit `n - 1` of `z | x` is set.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{bell_decode, decode_symbol, Circuit, Gate, Protocol};
use crate::error::{Error, Result};
use crate::kernels;
use crate::pauli::{Pauli, SizeDistribution};

const STATE_NORM_TOLERANCE: f64 = 1e-8;

/// Whether a state still needs Bell decoding before readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// Bell basis; readout applies the decode circuit to a copy first.
    PreDecode,
    /// Already decoded to computational bits.
    Decoded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Exact averaged size and its per-site decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeReadout {
    pub average: f64,
    /// Operator density at sites `1..=N`; sums to `average`.
    pub densities: Vec<f64>,
}

/// One sampled Bell measurement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShotRecord {
    symbols: Vec<Pauli>,
}

impl ShotRecord {
    pub fn new(symbols: Vec<Pauli>) -> Self {
        Self { symbols }
    }

    /// Decoded Pauli on pairs `1..=N`.
    pub fn symbols(&self) -> &[Pauli] {
        &self.symbols
    }

    pub fn size(&self) -> usize {
        self.symbols.iter().filter(|p| !p.is_identity()).count()
    }
}

impl StateVector {
    /// Largest register the statevector engine allocates.
    pub const MAX_QUBITS: usize = 26;

    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > Self::MAX_QUBITS {
            return Err(Error::TooLarge {
                what: "qubits (statevector)",
                requested: num_qubits,
                cap: Self::MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::NotPowerOfTwo(len));
        }
        let s = Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        };
        s.check_normalized()?;
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > STATE_NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        kernels::apply_gate(&mut self.amps, gate, 0, false);
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: circuit.num_qubits() - 1,
                num_qubits: self.num_qubits,
            });
        }
        for g in circuit.gates() {
            kernels::apply_gate(&mut self.amps, g, 0, false);
        }
        Ok(())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn pairs(&self) -> Result<usize> {
        if !self.num_qubits.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "Bell readout needs an even register, got {} qubits",
                self.num_qubits
            )));
        }
        Ok(self.num_qubits / 2)
    }

    /// Computational-basis probabilities after decoding.
    pub fn decoded_probabilities(&self, frame: Frame) -> Result<Vec<f64>> {
        let n = self.pairs()?;
        self.check_normalized()?;
        let probs = match frame {
            Frame::Decoded => self.amps.iter().map(|a| a.norm_sqr()).collect(),
            Frame::PreDecode => {
                let mut decoded = self.clone();
                decoded.run(&bell_decode(n))?;
                decoded.amps.iter().map(|a| a.norm_sqr()).collect()
            }
        };
        Ok(probs)
    }

    /// Expectation of `M = Σ_n (1 - |B⁰_n⟩⟨B⁰_n|)` and its per-pair terms.
    pub fn exact_size_expectation(&self, frame: Frame) -> Result<SizeReadout> {
        let n = self.pairs()?;
        Ok(readout_from_probabilities(
            n,
            &self.decoded_probabilities(frame)?,
        ))
    }

    /// Probability of each measured size `0..=N`.
    pub fn exact_size_distribution(&self, frame: Frame) -> Result<SizeDistribution> {
        let n = self.pairs()?;
        Ok(distribution_from_probabilities(
            n,
            &self.decoded_probabilities(frame)?,
        ))
    }

    /// Draws `shots` i.i.d. Bell measurements; identical seeds give identical
    /// records.
    pub fn sample_shots(&self, frame: Frame, shots: usize, seed: u64) -> Result<Vec<ShotRecord>> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be >= 1".into()));
        }
        let n = self.pairs()?;
        let probs = self.decoded_probabilities(frame)?;
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = (0..shots)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() * acc;
                let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
                shot_from_index(n, idx)
            })
            .collect();
        Ok(records)
    }
}

/// Decoded per-pair symbols of basis index `idx`.
pub fn shot_from_index(n: usize, idx: usize) -> ShotRecord {
    let symbols = (0..n)
        .map(|q| decode_symbol((idx >> q) & 1 == 1, (idx >> (q + n)) & 1 == 1))
        .collect();
    ShotRecord { symbols }
}

/// Bitmask over pairs that decode to a non-identity Pauli.
#[inline]
pub(crate) fn support_mask(n: usize, idx: usize) -> usize {
    let low = (1usize << n) - 1;
    (idx & low) | ((idx >> n) & low)
}

pub(crate) fn readout_from_probabilities(n: usize, probs: &[f64]) -> SizeReadout {
    // Probabilities are renormalized so round-off in the amplitudes does not
    // leak into exact integer sizes.
    let total: f64 = probs.iter().sum();
    let mut densities = vec![0.0; n];
    for (idx, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let p = p / total;
        let mut mask = support_mask(n, idx);
        while mask != 0 {
            let q = mask.trailing_zeros() as usize;
            densities[q] += p;
            mask &= mask - 1;
        }
    }
    SizeReadout {
        average: densities.iter().sum(),
        densities,
    }
}

pub(crate) fn distribution_from_probabilities(n: usize, probs: &[f64]) -> SizeDistribution {
    let total: f64 = probs.iter().sum();
    let mut out = vec![0.0; n + 1];
    for (idx, &p) in probs.iter().enumerate() {
        out[support_mask(n, idx).count_ones() as usize] += p / total;
    }
    SizeDistribution::from_raw(out)
}

/// Runs the full protocol noiselessly from `|0…0⟩`; the result is decoded.
pub fn run_protocol(protocol: &Protocol) -> Result<StateVector> {
    let mut state = StateVector::zero(protocol.num_qubits())?;
    for (_, seg) in protocol.segments() {
        state.run(seg)?;
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!(
            "protocol run lost normalization: {norm}"
        )));
    }
    Ok(state)
}
