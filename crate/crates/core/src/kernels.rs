//! In-place amplitude kernels shared by the statevector and the vectorized
//! density matrix. Qubit `q` is bit `q` of the basis index (little-endian).

use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};

pub(crate) type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Visits every index pair `(i0, i1)` differing only in bit `q`, `i0` having
/// the bit clear.
#[inline]
fn for_each_pair(len: usize, q: usize, mut f: impl FnMut(usize, usize)) {
    let stride = 1usize << q;
    let mut base = 0;
    while base < len {
        for i0 in base..base + stride {
            f(i0, i0 + stride);
        }
        base += stride << 1;
    }
}

pub(crate) fn apply_mat2(amps: &mut [Complex64], q: usize, m: &Mat2) {
    for_each_pair(amps.len(), q, |i0, i1| {
        let (a, b) = (amps[i0], amps[i1]);
        amps[i0] = m[0][0] * a + m[0][1] * b;
        amps[i1] = m[1][0] * a + m[1][1] * b;
    });
}

pub(crate) fn apply_diag(amps: &mut [Complex64], q: usize, d0: Complex64, d1: Complex64) {
    let mask = 1usize << q;
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { d0 } else { d1 };
    }
}

pub(crate) fn apply_x(amps: &mut [Complex64], q: usize) {
    for_each_pair(amps.len(), q, |i0, i1| amps.swap(i0, i1));
}

pub(crate) fn apply_y(amps: &mut [Complex64], q: usize, conj: bool) {
    // Y = [[0, -i], [i, 0]]
    let i = if conj {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    };
    for_each_pair(amps.len(), q, |i0, i1| {
        let (a, b) = (amps[i0], amps[i1]);
        amps[i0] = -i * b;
        amps[i1] = i * a;
    });
}

pub(crate) fn apply_z(amps: &mut [Complex64], q: usize) {
    let mask = 1usize << q;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask != 0 {
            *a = -*a;
        }
    }
}

pub(crate) fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    for_each_pair(amps.len(), target, |i0, i1| {
        if i0 & cmask != 0 {
            amps.swap(i0, i1);
        }
    });
}

/// Multiplies by `even` where bits `a` and `b` agree and by `odd` otherwise.
pub(crate) fn apply_parity_phase(
    amps: &mut [Complex64],
    a: usize,
    b: usize,
    even: Complex64,
    odd: Complex64,
) {
    for (i, amp) in amps.iter_mut().enumerate() {
        let parity = ((i >> a) ^ (i >> b)) & 1;
        *amp *= if parity == 0 { even } else { odd };
    }
}

fn h_matrix() -> Mat2 {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

fn rx_matrix(theta: f64, conj: bool) -> Mat2 {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let off = if conj {
        Complex64::new(0.0, s)
    } else {
        Complex64::new(0.0, -s)
    };
    [[c, off], [off, c]]
}

/// `e^{-iθ/2}` and `e^{+iθ/2}`, conjugated on request.
fn half_phases(theta: f64, conj: bool) -> (Complex64, Complex64) {
    let sign = if conj { -1.0 } else { 1.0 };
    (
        Complex64::from_polar(1.0, -sign * theta / 2.0),
        Complex64::from_polar(1.0, sign * theta / 2.0),
    )
}

/// Applies `gate` (or its entrywise complex conjugate) with every qubit index
/// shifted by `offset`.
pub(crate) fn apply_gate(amps: &mut [Complex64], gate: &Gate, offset: usize, conj: bool) {
    let q = gate.qubits()[0] + offset;
    match gate.kind() {
        GateKind::H => apply_mat2(amps, q, &h_matrix()),
        GateKind::X => apply_x(amps, q),
        GateKind::Y => apply_y(amps, q, conj),
        GateKind::Z => apply_z(amps, q),
        GateKind::Cnot => apply_cnot(amps, q, gate.qubits()[1] + offset),
        GateKind::Rx => apply_mat2(amps, q, &rx_matrix(gate.angle(), conj)),
        GateKind::Rz => {
            let (d0, d1) = half_phases(gate.angle(), conj);
            apply_diag(amps, q, d0, d1)
        }
        GateKind::Rzz => {
            let (even, odd) = half_phases(gate.angle(), conj);
            apply_parity_phase(amps, q, gate.qubits()[1] + offset, even, odd)
        }
    }
}

/// Dense 2x2 matrix of a single-qubit gate; `None` for two-qubit kinds.
pub(crate) fn single_qubit_matrix(kind: GateKind, angle: f64) -> Option<Mat2> {
    let i = Complex64::new(0.0, 1.0);
    Some(match kind {
        GateKind::H => h_matrix(),
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -i], [i, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::Rx => rx_matrix(angle, false),
        GateKind::Rz => {
            let (d0, d1) = half_phases(angle, false);
            [[d0, ZERO], [ZERO, d1]]
        }
        GateKind::Cnot | GateKind::Rzz => return None,
    })
}

/// Single-qubit depolarizing channel on a vectorized density matrix whose
/// row bit is `row_q` and column bit is `col_q`.
///
/// On each 2x2 block `[[a, b], [c, d]]` the channel maps populations to
/// `(1 - 2p/3) a + (2p/3) d` and scales coherences by `1 - 4p/3`.
pub(crate) fn depolarize(amps: &mut [Complex64], row_q: usize, col_q: usize, p: f64) {
    let keep = 1.0 - 2.0 * p / 3.0;
    let swap = 2.0 * p / 3.0;
    let shrink = 1.0 - 4.0 * p / 3.0;
    let rmask = 1usize << row_q;
    let cmask = 1usize << col_q;
    for i in 0..amps.len() {
        if i & (rmask | cmask) != 0 {
            continue;
        }
        let (ia, ib, ic, id) = (i, i | cmask, i | rmask, i | rmask | cmask);
        let (a, d) = (amps[ia], amps[id]);
        amps[ia] = a * keep + d * swap;
        amps[id] = a * swap + d * keep;
        amps[ib] *= shrink;
        amps[ic] *= shrink;
    }
}

/// Index with zero bits inserted at positions `lo < hi`.
#[inline(always)]
fn spread(i: usize, lo: usize, hi: usize) -> usize {
    let i = ((i >> lo) << (lo + 1)) | (i & ((1 << lo) - 1));
    ((i >> hi) << (hi + 1)) | (i & ((1 << hi) - 1))
}

/// Depolarizing weights `(keep, swap, shrink)` for rate `p`.
#[inline]
fn channel_weights(p: f64) -> (f64, f64, f64) {
    (1.0 - 2.0 * p / 3.0, 2.0 * p / 3.0, 1.0 - 4.0 * p / 3.0)
}

/// Single-qubit superoperator on the block `(m00, m01, m10, m11)`, where
/// `m_rc` has row bit `r` and column bit `c`.
pub(crate) type Super4 = [[Complex64; 4]; 4];

pub(crate) fn super_identity() -> Super4 {
    let mut s = [[ZERO; 4]; 4];
    for (k, row) in s.iter_mut().enumerate() {
        row[k] = ONE;
    }
    s
}

/// `m → U m U†`.
pub(crate) fn super_unitary(u: &Mat2) -> Super4 {
    let mut s = [[ZERO; 4]; 4];
    for r in 0..2 {
        for c in 0..2 {
            for r2 in 0..2 {
                for c2 in 0..2 {
                    s[2 * r + c][2 * r2 + c2] = u[r][r2] * u[c][c2].conj();
                }
            }
        }
    }
    s
}

pub(crate) fn super_depolarize(p: f64) -> Super4 {
    let (keep, swap, shrink) = channel_weights(p);
    let mut s = [[ZERO; 4]; 4];
    s[0][0] = keep.into();
    s[0][3] = swap.into();
    s[3][0] = swap.into();
    s[3][3] = keep.into();
    s[1][1] = shrink.into();
    s[2][2] = shrink.into();
    s
}

/// `a ∘ b`: apply `b` first.
pub(crate) fn super_compose(a: &Super4, b: &Super4) -> Super4 {
    let mut s = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            s[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    s
}

/// Applies a single-qubit superoperator on qubit `q` of a vectorized
/// `n`-qubit density matrix.
pub(crate) fn dm_superop(data: &mut [Complex64], n: usize, q: usize, s: &Super4) {
    let (col, row) = (1usize << q, 1usize << (q + n));
    for i in 0..data.len() >> 2 {
        let base = spread(i, q, q + n);
        let idx = [base, base | col, base | row, base | row | col];
        let m = [data[idx[0]], data[idx[1]], data[idx[2]], data[idx[3]]];
        for (k, &dst) in idx.iter().enumerate() {
            let r = &s[k];
            data[dst] = r[0] * m[0] + r[1] * m[1] + r[2] * m[2] + r[3] * m[3];
        }
    }
}

/// Index with zero bits inserted at the ascending positions `pos`.
#[inline(always)]
fn spread4(mut i: usize, pos: &[usize; 4]) -> usize {
    for &p in pos {
        i = ((i >> p) << (p + 1)) | (i & ((1 << p) - 1));
    }
    i
}

/// Depolarizes one qubit inside a 16-entry block; `col` and `row` are the
/// block-index bits of that qubit.
#[inline(always)]
fn depolarize_block(m: &mut [Complex64; 16], col: usize, row: usize, w: (f64, f64, f64)) {
    let (keep, swap, shrink) = w;
    for k in 0..16 {
        if k & (col | row) != 0 {
            continue;
        }
        let (a, d) = (m[k], m[k | col | row]);
        m[k] = a * keep + d * swap;
        m[k | col | row] = a * swap + d * keep;
        m[k | col] *= shrink;
        m[k | row] *= shrink;
    }
}

/// `ρ → D_p^{(a)} D_p^{(b)} (R ρ R†)` with `R = RZZ(θ)` on qubits `a`, `b`,
/// one pass over 16-entry blocks.
pub(crate) fn dm_rzz_noisy(
    data: &mut [Complex64],
    n: usize,
    a: usize,
    b: usize,
    theta: f64,
    p: f64,
) {
    // Entry (r, c) picks up e^{-iθ/2 (s_r - s_c)}, s = ±1 the parity sign of
    // the row and column bits.
    let forward = Complex64::from_polar(1.0, -theta);
    let backward = forward.conj();
    let (lo, hi) = (a.min(b), a.max(b));
    let pos = [lo, hi, lo + n, hi + n];
    // block-index bits: 1 col a, 2 col b, 4 row a, 8 row b
    let offsets: [usize; 16] = std::array::from_fn(|k| {
        (k & 1) << a | ((k >> 1) & 1) << b | ((k >> 2) & 1) << (a + n) | ((k >> 3) & 1) << (b + n)
    });
    let phases: [Option<Complex64>; 16] = std::array::from_fn(|k| {
        let cp = (k ^ (k >> 1)) & 1;
        let rp = ((k >> 2) ^ (k >> 3)) & 1;
        match (rp, cp) {
            (0, 1) => Some(forward),
            (1, 0) => Some(backward),
            _ => None,
        }
    });
    let w = channel_weights(p);
    for i in 0..data.len() >> 4 {
        let base = spread4(i, &pos);
        let mut m: [Complex64; 16] = std::array::from_fn(|k| data[base | offsets[k]]);
        for (v, ph) in m.iter_mut().zip(&phases) {
            if let Some(ph) = ph {
                *v *= ph;
            }
        }
        if p > 0.0 {
            depolarize_block(&mut m, 1, 4, w);
            depolarize_block(&mut m, 2, 8, w);
        }
        for (k, v) in m.iter().enumerate() {
            data[base | offsets[k]] = *v;
        }
    }
}
