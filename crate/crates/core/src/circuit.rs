//! Protocol circuits on `2N` qubits.
//!
//! Layout: system site `n` (1-based) lives on qubit `n - 1` and its ancilla on
//! qubit `n - 1 + N`. Rotation conventions are `RX(θ) = exp(-iθX/2)`,
//! `RZ(θ) = exp(-iθZ/2)` and `RZZ(θ) = exp(-iθ Z⊗Z/2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oracle::ModelParams;
use crate::pauli::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    Cnot,
    Rx,
    Rz,
    Rzz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Rzz => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz | GateKind::Rzz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Rzz => "RZZ",
        }
    }

    pub fn from_pauli(p: Pauli) -> Option<Self> {
        match p {
            Pauli::I => None,
            Pauli::X => Some(GateKind::X),
            Pauli::Y => Some(GateKind::Y),
            Pauli::Z => Some(GateKind::Z),
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "CNOT" => GateKind::Cnot,
            "RX" => GateKind::Rx,
            "RZ" => GateKind::Rz,
            "RZZ" => GateKind::Rzz,
            other => return Err(Error::InvalidGate(format!("unknown gate kind '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    angle: f64,
}

impl Gate {
    /// Checked constructor; `qubits` must match the arity of `kind`.
    pub fn new(kind: GateKind, qubits: &[usize], angle: f64) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} takes {} qubit(s), got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        if kind.arity() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} on repeated qubit {}",
                kind.name(),
                qubits[0]
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidGate(format!("non-finite angle {angle}")));
        }
        let angle = if kind.is_rotation() { angle } else { 0.0 };
        let second = if kind.arity() == 2 {
            qubits[1]
        } else {
            qubits[0]
        };
        Ok(Self {
            kind,
            qubits: [qubits[0], second],
            angle,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::one(GateKind::H, q, 0.0)
    }

    pub fn x(q: usize) -> Self {
        Self::one(GateKind::X, q, 0.0)
    }

    pub fn y(q: usize) -> Self {
        Self::one(GateKind::Y, q, 0.0)
    }

    pub fn z(q: usize) -> Self {
        Self::one(GateKind::Z, q, 0.0)
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rx, q, theta)
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rz, q, theta)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, &[control, target], 0.0).expect("distinct CNOT qubits")
    }

    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::new(GateKind::Rzz, &[a, b], theta).expect("distinct RZZ qubits")
    }

    pub fn pauli(p: Pauli, q: usize) -> Option<Self> {
        GateKind::from_pauli(p).map(|k| Self::one(k, q, 0.0))
    }

    fn one(kind: GateKind, q: usize, angle: f64) -> Self {
        Self::new(kind, &[q], angle).expect("valid single-qubit gate")
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    /// Rotation angle in radians; zero for fixed gates.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn inverse(&self) -> Self {
        Self {
            angle: if self.kind.is_rotation() {
                -self.angle
            } else {
                self.angle
            },
            ..*self
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        if self.kind.is_rotation() {
            // `{:?}` is the shortest representation that round-trips
            write!(f, " {:?}", self.angle)?;
        }
        Ok(())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut fields = line.split_whitespace();
        let kind: GateKind = fields
            .next()
            .ok_or_else(|| Error::InvalidGate("empty line".into()))?
            .parse()?;
        let mut qubits = Vec::with_capacity(2);
        for _ in 0..kind.arity() {
            let field = fields
                .next()
                .ok_or_else(|| Error::InvalidGate(format!("missing qubit for {}", kind.name())))?;
            qubits.push(
                field
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidGate(format!("bad qubit '{field}': {e}")))?,
            );
        }
        let angle = if kind.is_rotation() {
            let field = fields
                .next()
                .ok_or_else(|| Error::InvalidGate(format!("missing angle for {}", kind.name())))?;
            field
                .parse::<f64>()
                .map_err(|e| Error::InvalidGate(format!("bad angle '{field}': {e}")))?
        } else {
            0.0
        };
        if let Some(extra) = fields.next() {
            return Err(Error::InvalidGate(format!("unexpected field '{extra}'")));
        }
        Gate::new(kind, &qubits, angle)
    }
}

/// An ordered gate list on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::WidthMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Reversed gate order with rotation angles negated.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Total number of (gate, qubit) incidences.
    pub fn qubit_touches(&self) -> usize {
        self.gates.iter().map(|g| g.qubits().len()).sum()
    }

    /// Line-oriented text form: a `QUBITS n` header, then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.num_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`Circuit::to_text`] output. Blank lines and `#` comments are
    /// skipped.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            match circuit.as_mut() {
                None => {
                    let n = line
                        .strip_prefix("QUBITS")
                        .map(str::trim)
                        .ok_or_else(|| parse_err("expected 'QUBITS <n>' header".into()))?
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad qubit count: {e}")))?;
                    circuit = Some(Circuit::new(n));
                }
                Some(c) => {
                    let gate: Gate = line.parse().map_err(|e: Error| parse_err(e.to_string()))?;
                    c.push(gate).map_err(|e| parse_err(e.to_string()))?;
                }
            }
        }
        circuit.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'QUBITS <n>' header".into(),
        })
    }
}

/// One first-order step `e^{-iH_z dt} e^{-iH_x dt}` on system qubits `0..N`:
/// RZZ on neighbouring pairs, RZ on every site, then RX on every site.
pub fn trotter_step(params: &ModelParams, dt: f64) -> Circuit {
    let n = params.n;
    let mut c = Circuit::new(n);
    for q in 0..n.saturating_sub(1) {
        c.gates.push(Gate::rzz(q, q + 1, 2.0 * params.j * dt));
    }
    for q in 0..n {
        c.gates.push(Gate::rz(q, 2.0 * params.hz * dt));
    }
    for q in 0..n {
        c.gates.push(Gate::rx(q, 2.0 * params.hx * dt));
    }
    c
}

/// `r` Trotter steps of size `t / r`, approximating `e^{-iHt}`.
pub fn trotter_block(params: &ModelParams, t: f64, r: usize) -> Result<Circuit> {
    if r == 0 {
        return Err(Error::InvalidParameter("Trotter steps must be >= 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite time {t}")));
    }
    let step = trotter_step(params, t / r as f64);
    let mut c = Circuit::new(params.n);
    c.gates.reserve(step.len() * r);
    for _ in 0..r {
        c.gates.extend_from_slice(&step.gates);
    }
    Ok(c)
}

/// Everything needed to build the Heisenberg sandwich `V† P V`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSpec {
    pub params: ModelParams,
    pub t: f64,
    pub r: usize,
    /// 1-based site of the seed Pauli.
    pub insert_site: usize,
    pub insert_pauli: Pauli,
}

impl EvolutionSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.r == 0 {
            return Err(Error::InvalidParameter("Trotter steps must be >= 1".into()));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "evolution time must be finite and >= 0, got {}",
                self.t
            )));
        }
        if self.insert_site == 0 || self.insert_site > self.params.n {
            return Err(Error::SiteOutOfRange {
                site: self.insert_site,
                width: self.params.n,
            });
        }
        if self.insert_pauli == Pauli::I {
            return Err(Error::InvalidParameter(
                "seed Pauli must be X, Y or Z".into(),
            ));
        }
        Ok(())
    }
}

/// `[trotter_step]^r`, the seed Pauli on its system qubit, then the exact
/// adjoint of the first block. Acting on a state this is `O_r(t) |ψ⟩` with
/// `O_r(t) = V† P V`, `V ≈ e^{-iHt}`.
pub fn heisenberg_sandwich(spec: &EvolutionSpec) -> Result<Circuit> {
    spec.validate()?;
    let forward = trotter_block(&spec.params, spec.t, spec.r)?;
    let mut c = Circuit::new(spec.params.n);
    c.gates.reserve(2 * forward.len() + 1);
    c.gates.extend_from_slice(&forward.gates);
    c.gates.push(
        Gate::pauli(spec.insert_pauli, spec.insert_site - 1).expect("validated non-identity"),
    );
    c.gates.extend(forward.adjoint().gates);
    Ok(c)
}

/// `H(n)` then `CNOT(n, n+N)` for every pair; maps `|0…0⟩` to `⊗_n |B⁰_n⟩`.
pub fn bell_prep(n: usize) -> Circuit {
    let mut c = Circuit::new(2 * n);
    for q in 0..n {
        c.gates.push(Gate::h(q));
        c.gates.push(Gate::cnot(q, q + n));
    }
    c
}

/// `CNOT(n, n+N)` then `H(n)` for every pair. Afterwards pair `n` reads
/// `(z, x) = (qubit n, qubit n+N)`: `(0,0) → I`, `(0,1) → X`, `(1,1) → Y`,
/// `(1,0) → Z`.
pub fn bell_decode(n: usize) -> Circuit {
    let mut c = Circuit::new(2 * n);
    for q in 0..n {
        c.gates.push(Gate::cnot(q, q + n));
        c.gates.push(Gate::h(q));
    }
    c
}

/// Maps a decoded bit pair to the Pauli it labels.
pub fn decode_symbol(z: bool, x: bool) -> Pauli {
    match (z, x) {
        (false, false) => Pauli::I,
        (false, true) => Pauli::X,
        (true, true) => Pauli::Y,
        (true, false) => Pauli::Z,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Prep,
    Evolution,
    Decode,
}

/// The three stages of the measurement protocol on `2N` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    n: usize,
    prep: Circuit,
    evolution: Circuit,
    decode: Circuit,
}

impl Protocol {
    /// Bell preparation, an arbitrary evolution on the `N` system qubits and
    /// Bell decoding.
    pub fn with_evolution(n: usize, evolution: Circuit) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one site".into()));
        }
        if evolution.num_qubits() > n {
            return Err(Error::InvalidParameter(format!(
                "evolution acts on {} qubits but the system has {n}",
                evolution.num_qubits()
            )));
        }
        let evolution = Circuit {
            num_qubits: 2 * n,
            gates: evolution.gates,
        };
        Ok(Self {
            n,
            prep: bell_prep(n),
            evolution,
            decode: bell_decode(n),
        })
    }

    pub fn new(spec: &EvolutionSpec) -> Result<Self> {
        Self::with_evolution(spec.params.n, heisenberg_sandwich(spec)?)
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n
    }

    pub fn segment(&self, segment: Segment) -> &Circuit {
        match segment {
            Segment::Prep => &self.prep,
            Segment::Evolution => &self.evolution,
            Segment::Decode => &self.decode,
        }
    }

    pub fn segments(&self) -> [(Segment, &Circuit); 3] {
        [
            (Segment::Prep, &self.prep),
            (Segment::Evolution, &self.evolution),
            (Segment::Decode, &self.decode),
        ]
    }

    /// Prep, evolution and decode concatenated.
    pub fn full(&self) -> Circuit {
        let mut c = Circuit::new(self.num_qubits());
        for (_, seg) in self.segments() {
            c.gates.extend_from_slice(&seg.gates);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> ModelParams {
        ModelParams {
            n,
            j: 1.0,
            hx: 1.0,
            hz: 0.3,
        }
    }

    fn spec(n: usize, t: f64, r: usize) -> EvolutionSpec {
        EvolutionSpec {
            params: params(n),
            t,
            r,
            insert_site: 3.min(n),
            insert_pauli: Pauli::X,
        }
    }

    #[test]
    fn adjoint_examples() {
        let c = Circuit::from_gates(1, [Gate::rx(0, 0.4)]).unwrap();
        assert_eq!(c.adjoint().gates(), &[Gate::rx(0, -0.4)]);
        let c = Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap();
        assert_eq!(c.adjoint().gates(), &[Gate::cnot(0, 1), Gate::h(0)]);
        let c = heisenberg_sandwich(&spec(4, 1.3, 7)).unwrap();
        assert_eq!(c.adjoint().adjoint(), c);
    }

    #[test]
    fn bell_prep_layout() {
        assert_eq!(bell_prep(1).gates(), &[Gate::h(0), Gate::cnot(0, 1)]);
        let c = bell_prep(3);
        assert_eq!(c.num_qubits(), 6);
        for pair in c.gates().chunks(2) {
            let q = pair[0].qubits()[0];
            assert_eq!(pair[0], Gate::h(q));
            assert_eq!(pair[1], Gate::cnot(q, q + 3));
        }
        let d = bell_decode(3);
        for pair in d.gates().chunks(2) {
            let q = pair[1].qubits()[0];
            assert_eq!(pair[0], Gate::cnot(q, q + 3));
            assert_eq!(pair[1], Gate::h(q));
        }
    }

    #[test]
    fn trotter_gates_stay_on_system_qubits() {
        for n in 2..=6 {
            let c = trotter_block(&params(n), 2.0, 5).unwrap();
            assert!(c.gates().iter().flat_map(|g| g.qubits()).all(|&q| q < n));
            let s = heisenberg_sandwich(&spec(n, 2.0, 5)).unwrap();
            assert!(s.gates().iter().flat_map(|g| g.qubits()).all(|&q| q < n));
        }
    }

    #[test]
    fn trotter_step_angles() {
        let p = ModelParams {
            n: 3,
            j: 0.5,
            hx: 2.0,
            hz: -1.0,
        };
        let c = trotter_step(&p, 0.1);
        let kinds: Vec<_> = c.gates().iter().map(|g| g.kind()).collect();
        use GateKind::*;
        assert_eq!(kinds, [Rzz, Rzz, Rz, Rz, Rz, Rx, Rx, Rx]);
        assert!((c.gates()[0].angle() - 0.1).abs() < 1e-15);
        assert!((c.gates()[2].angle() + 0.2).abs() < 1e-15);
        assert!((c.gates()[5].angle() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sandwich_gate_count() {
        for n in 2..=6 {
            for r in [1, 3, 10] {
                let c = heisenberg_sandwich(&spec(n, 1.0, r)).unwrap();
                assert_eq!(c.len(), 2 * r * (n - 1 + 2 * n) + 1);
            }
        }
    }

    #[test]
    fn sandwich_structure() {
        let s = spec(3, 0.7, 4);
        let c = heisenberg_sandwich(&s).unwrap();
        let half = (c.len() - 1) / 2;
        assert_eq!(c.gates()[half], Gate::x(2));
        let forward = Circuit::from_gates(3, c.gates()[..half].iter().copied()).unwrap();
        let backward = Circuit::from_gates(3, c.gates()[half + 1..].iter().copied()).unwrap();
        assert_eq!(forward.adjoint(), backward);
    }

    #[test]
    fn sandwich_validation() {
        let mut s = spec(3, 1.0, 1);
        s.insert_site = 4;
        assert!(matches!(
            heisenberg_sandwich(&s),
            Err(Error::SiteOutOfRange { .. })
        ));
        s.insert_site = 0;
        assert!(heisenberg_sandwich(&s).is_err());
        let mut s = spec(3, 1.0, 0);
        assert!(heisenberg_sandwich(&s).is_err());
        s.r = 1;
        s.t = -1.0;
        assert!(heisenberg_sandwich(&s).is_err());
        s.t = 1.0;
        s.insert_pauli = Pauli::I;
        assert!(heisenberg_sandwich(&s).is_err());
    }

    #[test]
    fn gate_validation() {
        assert!(Gate::new(GateKind::Cnot, &[1, 1], 0.0).is_err());
        assert!(Gate::new(GateKind::Rx, &[0], f64::NAN).is_err());
        assert!(Gate::new(GateKind::H, &[0, 1], 0.0).is_err());
        let mut c = Circuit::new(2);
        assert!(matches!(
            c.push(Gate::cnot(0, 2)),
            Err(Error::QubitOutOfRange { qubit: 2, .. })
        ));
    }

    #[test]
    fn text_format_golden() {
        let c = Circuit::from_gates(
            3,
            [
                Gate::h(0),
                Gate::cnot(0, 2),
                Gate::rx(1, 0.02),
                Gate::rzz(0, 1, -0.5),
                Gate::y(2),
            ],
        )
        .unwrap();
        let text = c.to_text();
        assert_eq!(
            text,
            "QUBITS 3\nH 0\nCNOT 0 2\nRX 1 0.02\nRZZ 0 1 -0.5\nY 2\n"
        );
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
    }

    #[test]
    fn text_format_round_trips_trotter_angles() {
        let c = Protocol::new(&spec(3, 1.234567, 9)).unwrap().full();
        assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn text_format_errors_carry_line_numbers() {
        let err = Circuit::from_text("QUBITS 2\nH 0\n\nRX 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = Circuit::from_text("QUBITS 2\nCNOT 0 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(Circuit::from_text("H 0\n").is_err());
        assert!(Circuit::from_text("").is_err());
    }

    #[test]
    fn protocol_segments() {
        let p = Protocol::new(&spec(4, 1.0, 2)).unwrap();
        assert_eq!(p.num_qubits(), 8);
        let total: usize = p.segments().iter().map(|(_, c)| c.len()).sum();
        assert_eq!(p.full().len(), total);
        assert_eq!(p.segment(Segment::Prep), &bell_prep(4));
        assert_eq!(p.segment(Segment::Decode), &bell_decode(4));
    }
}
