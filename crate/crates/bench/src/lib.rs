//! Fixtures shared by the benchmarks.

use opsize::{EvolutionSpec, ModelParams, Pauli, Protocol};

/// Protocol for `X` on the middle site of an `n`-site chain at the default
/// couplings.
pub fn protocol(n: usize, t: f64, r: usize) -> Protocol {
    Protocol::new(&EvolutionSpec {
        params: ModelParams {
            n,
            ..ModelParams::default()
        },
        t,
        r,
        insert_site: n.div_ceil(2),
        insert_pauli: Pauli::X,
    })
    .expect("valid fixture")
}
