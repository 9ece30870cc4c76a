//! Experiment configuration, runners and CSV output.
//!
//! A config is a TOML document with dotted sections:
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [model]
//! n = 5
//! j = 1.0
//! hx = 1.0
//! hz = 0.0
//!
//! [operator]
//! site = 3
//! pauli = "X"
//!
//! [evolution]
//! t_max = 10.0
//! dt_grid = 0.25
//! dt_trotter = 0.1
//!
//! [noise]
//! p = [1e-4, 1e-3]
//! scope = "all"
//! backend = "dm"
//!
//! [mitigation]
//! n_c = [1, 2, 3, 4]
//! ```
//!
//! Unknown keys are rejected. Every runner is deterministic for a fixed
//! config: points are computed in parallel but written in grid order, and
//! trajectory seeds are derived from the base seed, `t` and the noise scale.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{EvolutionSpec, Protocol};
use crate::error::{Error, Result};
use crate::mitigation::{richardson_weights, MitigationPlan};
use crate::noise::{run_noisy_dm, run_noisy_trajectories, NoiseModel, NoiseScope};
use crate::oracle::{reference_size_curve, ModelParams, OraclePoint, MAX_DENSE_SITES};
use crate::pauli::{Pauli, SizeDistribution};
use crate::simulator::{run_protocol, Frame};

/// Largest chain the dm backend accepts (`2N` qubits).
pub const MAX_DM_SITES: usize = crate::noise::DensityMatrix::MAX_QUBITS / 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Measurement shots for the noiseless path; exact readout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub mitigation: MitigationSection,
    #[serde(default)]
    pub trotter: TrotterSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub j: f64,
    pub hx: f64,
    pub hz: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            n: p.n,
            j: p.j,
            hx: p.hx,
            hz: p.hz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    /// 1-based site.
    pub site: usize,
    pub pauli: String,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self {
            site: 3,
            pauli: "X".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Grid spacing on `[0, t_max]`; ignored when `t_list` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_grid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    /// Fixed number of Trotter steps for every `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Trotter step; `r = max(1, round(t / dt_trotter))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_trotter: Option<f64>,
}

fn default_t_max() -> f64 {
    10.0
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            dt_grid: Some(0.25),
            t_list: None,
            r: None,
            dt_trotter: Some(0.1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Statevector,
    Dm,
    Trajectory,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Statevector => "statevector",
            Backend::Dm => "dm",
            Backend::Trajectory => "trajectory",
        }
    }

    /// dm when the `2N`-qubit density matrix fits, trajectories otherwise.
    pub fn auto(n: usize) -> Self {
        if n <= MAX_DM_SITES {
            Backend::Dm
        } else {
            Backend::Trajectory
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statevector" => Ok(Backend::Statevector),
            "dm" => Ok(Backend::Dm),
            "trajectory" => Ok(Backend::Trajectory),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected statevector, dm or trajectory)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Rates for `noise`; the first entry is the base rate for `mitigate`.
    pub p: Vec<f64>,
    #[serde(default = "default_scope")]
    pub scope: String,
    /// Chosen from the chain length when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
}

fn default_scope() -> String {
    NoiseScope::All.name().into()
}

fn default_n_traj() -> usize {
    1000
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            p: vec![1e-4, 1e-3],
            scope: default_scope(),
            backend: None,
            n_traj: default_n_traj(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSection {
    /// Preset plans `c = (1, …, n_c + 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<Vec<usize>>,
    /// One custom plan with these scale factors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

impl Default for MitigationSection {
    fn default() -> Self {
        Self {
            n_c: Some(vec![1, 2, 3, 4]),
            c: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterSection {
    /// Steps for the `ε(t)` sweep.
    pub r_fixed: usize,
    /// Time for the `ε(r)` sweep.
    pub t_fixed: f64,
    pub r_list: Vec<usize>,
}

impl Default for TrotterSection {
    fn default() -> Self {
        Self {
            r_fixed: 100,
            t_fixed: 2.0,
            r_list: vec![25, 50, 100, 200, 400],
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: default_out(),
            shots: None,
            model: ModelSection::default(),
            operator: OperatorSection::default(),
            evolution: EvolutionSection::default(),
            noise: NoiseSection::default(),
            mitigation: MitigationSection::default(),
            trotter: TrotterSection::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    /// Parses and validates a TOML document. Syntax errors carry the line
    /// and column of the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            n: self.model.n,
            j: self.model.j,
            hx: self.model.hx,
            hz: self.model.hz,
        }
    }

    pub fn pauli(&self) -> Result<Pauli> {
        let p: Pauli = self.operator.pauli.parse().map_err(|_| {
            Error::Config(format!(
                "operator.pauli: unknown Pauli '{}'",
                self.operator.pauli
            ))
        })?;
        if p == Pauli::I {
            return Err(Error::Config("operator.pauli must be X, Y or Z".into()));
        }
        Ok(p)
    }

    pub fn scope(&self) -> Result<NoiseScope> {
        self.noise
            .scope
            .parse()
            .map_err(|e: Error| Error::Config(format!("noise.scope: {e}")))
    }

    pub fn backend(&self) -> Backend {
        self.noise
            .backend
            .unwrap_or_else(|| Backend::auto(self.model.n))
    }

    /// Time grid: `t_list` verbatim, else `k · dt_grid` for `k = 0..=t_max/dt_grid`.
    pub fn t_grid(&self) -> Result<Vec<f64>> {
        let ev = &self.evolution;
        let grid = match (&ev.t_list, ev.dt_grid) {
            (Some(list), _) => list.clone(),
            (None, Some(dt)) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::Config(format!(
                        "evolution.dt_grid must be > 0, got {dt}"
                    )));
                }
                if !(ev.t_max >= 0.0 && ev.t_max.is_finite()) {
                    return Err(Error::Config(format!(
                        "evolution.t_max must be >= 0, got {}",
                        ev.t_max
                    )));
                }
                let steps = (ev.t_max / dt + 1e-9).floor() as usize;
                (0..=steps).map(|k| k as f64 * dt).collect()
            }
            (None, None) => {
                return Err(Error::Config("evolution needs t_list or dt_grid".into()));
            }
        };
        if grid.is_empty() {
            return Err(Error::Config("evolution time grid is empty".into()));
        }
        if let Some(t) = grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::Config(format!(
                "evolution times must be finite and >= 0, got {t}"
            )));
        }
        Ok(grid)
    }

    /// Trotter steps used at time `t`.
    pub fn steps_at(&self, t: f64) -> Result<usize> {
        match (self.evolution.r, self.evolution.dt_trotter) {
            (Some(_), Some(_)) => Err(Error::Config(
                "evolution: give either r or dt_trotter, not both".into(),
            )),
            (Some(0), None) => Err(Error::Config("evolution.r must be >= 1".into())),
            (Some(r), None) => Ok(r),
            (None, Some(dt)) if dt > 0.0 && dt.is_finite() => {
                Ok(((t / dt).round() as usize).max(1))
            }
            (None, Some(dt)) => Err(Error::Config(format!(
                "evolution.dt_trotter must be > 0, got {dt}"
            ))),
            (None, None) => Err(Error::Config("evolution needs r or dt_trotter".into())),
        }
    }

    /// Mitigation plans in config order.
    pub fn plans(&self) -> Result<Vec<MitigationPlan>> {
        let wrap = |e: Error| Error::Config(format!("mitigation: {e}"));
        match (&self.mitigation.n_c, &self.mitigation.c) {
            (Some(_), Some(_)) => Err(Error::Config(
                "mitigation: give either n_c or c, not both".into(),
            )),
            (Some(list), None) if !list.is_empty() => list
                .iter()
                .map(|&n_c| MitigationPlan::preset(n_c).map_err(wrap))
                .collect(),
            (None, Some(c)) => Ok(vec![richardson_weights(c).map_err(wrap)?]),
            _ => Err(Error::Config(
                "mitigation needs a non-empty n_c list or a c list".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params();
        params
            .validate()
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        if self.operator.site == 0 || self.operator.site > params.n {
            return Err(Error::Config(format!(
                "operator.site {} out of range 1..={}",
                self.operator.site, params.n
            )));
        }
        self.pauli()?;
        self.scope()?;
        let grid = self.t_grid()?;
        for &t in &grid {
            self.steps_at(t)?;
        }
        if 2 * params.n > crate::simulator::StateVector::MAX_QUBITS {
            return Err(Error::Config(format!(
                "model.n = {} needs {} qubits; the statevector cap is {}",
                params.n,
                2 * params.n,
                crate::simulator::StateVector::MAX_QUBITS
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be >= 1 when given".into()));
        }
        if self.noise.p.is_empty() {
            return Err(Error::Config("noise.p must list at least one rate".into()));
        }
        if let Some(p) = self.noise.p.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::Config(format!(
                "noise.p entries must lie in [0, 1], got {p}"
            )));
        }
        match self.backend() {
            Backend::Dm if params.n > MAX_DM_SITES => {
                return Err(Error::Config(format!(
                    "dm backend supports n <= {MAX_DM_SITES}, got {}",
                    params.n
                )));
            }
            Backend::Trajectory if self.noise.n_traj == 0 => {
                return Err(Error::Config("noise.n_traj must be >= 1".into()));
            }
            _ => {}
        }
        let plans = self.plans()?;
        let base = self.noise.p[0];
        for plan in &plans {
            if let Some(c) = plan.scales().iter().find(|c| **c * base > 1.0) {
                return Err(Error::Config(format!(
                    "mitigation scale {c} times base rate {base} exceeds 1"
                )));
            }
        }
        let tr = &self.trotter;
        if tr.r_fixed == 0 || tr.r_list.is_empty() || tr.r_list.contains(&0) {
            return Err(Error::Config("trotter: step counts must be >= 1".into()));
        }
        if !(tr.t_fixed >= 0.0 && tr.t_fixed.is_finite()) {
            return Err(Error::Config(format!(
                "trotter.t_fixed must be >= 0, got {}",
                tr.t_fixed
            )));
        }
        Ok(())
    }

    fn spec(&self, t: f64, r: usize) -> Result<EvolutionSpec> {
        Ok(EvolutionSpec {
            params: self.params(),
            t,
            r,
            insert_site: self.operator.site,
            insert_pauli: self.pauli()?,
        })
    }

    fn oracle(&self, grid: &[f64]) -> Result<Option<Vec<OraclePoint>>> {
        if self.model.n > MAX_DENSE_SITES {
            return Ok(None);
        }
        reference_size_curve(&self.params(), self.operator.site, self.pauli()?, grid).map(Some)
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric column; empty cells become `NaN`.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[k].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Output of one runner: named CSV files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub tables: Vec<(String, Table)>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes every table as `<dir>/<name>`, returning the paths.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.tables
            .iter()
            .map(|(name, table)| {
                let path = dir.join(name);
                table.write(&path)?;
                Ok(path)
            })
            .collect()
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// splitmix64 finalizer over the base seed and two 64-bit words.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ a) ^ b)
}

/// Seed of the trajectory run at time `t` and rate `p`.
pub fn point_seed(seed: u64, t: f64, p: f64) -> u64 {
    derive_seed(seed, t.to_bits(), p.to_bits())
}

/// One size estimate from some backend.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub average: f64,
    pub stderr: f64,
    pub densities: Vec<f64>,
    pub distribution: SizeDistribution,
    pub backend: Backend,
    /// Seed actually consumed, if any.
    pub seed: Option<u64>,
}

fn noiseless_estimate(protocol: &Protocol, shots: Option<usize>, seed: u64) -> Result<Estimate> {
    let state = run_protocol(protocol)?;
    let readout = state.exact_size_expectation(Frame::Decoded)?;
    let distribution = state.exact_size_distribution(Frame::Decoded)?;
    let (average, stderr, used) = match shots {
        None => (readout.average, 0.0, None),
        Some(shots) => {
            let sizes: Vec<f64> = state
                .sample_shots(Frame::Decoded, shots, seed)?
                .iter()
                .map(|s| s.size() as f64)
                .collect();
            let count = sizes.len() as f64;
            let mean = sizes.iter().sum::<f64>() / count;
            let var = if sizes.len() > 1 {
                sizes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            (mean, (var / count).sqrt(), Some(seed))
        }
    };
    Ok(Estimate {
        average,
        stderr,
        densities: readout.densities,
        distribution,
        backend: Backend::Statevector,
        seed: used,
    })
}

/// Size estimate of `protocol` under `noise` on `backend`. A zero rate always
/// takes the noiseless statevector path.
pub fn estimate(
    protocol: &Protocol,
    noise: &NoiseModel,
    backend: Backend,
    n_traj: usize,
    seed: u64,
) -> Result<Estimate> {
    if noise.p() == 0.0 {
        return noiseless_estimate(protocol, None, seed);
    }
    match backend {
        Backend::Statevector => Err(Error::Config(
            "the statevector backend cannot simulate p > 0; use dm or trajectory".into(),
        )),
        Backend::Dm => {
            let rho = run_noisy_dm(protocol, noise)?;
            let readout = rho.size_expectation()?;
            Ok(Estimate {
                average: readout.average,
                stderr: 0.0,
                densities: readout.densities,
                distribution: rho.size_distribution()?,
                backend,
                seed: None,
            })
        }
        Backend::Trajectory => {
            let est = run_noisy_trajectories(protocol, noise, n_traj, seed)?;
            Ok(Estimate {
                average: est.mean,
                stderr: est.stderr,
                densities: est.densities,
                distribution: est.distribution,
                backend,
                seed: Some(seed),
            })
        }
    }
}

fn size_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "L_bell", "L_oracle", "stderr", "r", "p", "backend"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n).map(|k| format!("density_{k}")));
    h.push("seed".into());
    h.push("scope".into());
    h
}

struct SizeRow<'a> {
    t: f64,
    est: &'a Estimate,
    oracle: Option<f64>,
    r: usize,
    p: f64,
    scope: NoiseScope,
}

fn size_row(row: SizeRow<'_>) -> Vec<String> {
    let mut v = vec![
        num(row.t),
        num(row.est.average),
        opt_num(row.oracle),
        num(row.est.stderr),
        row.r.to_string(),
        num(row.p),
        row.est.backend.name().to_string(),
    ];
    v.extend(row.est.densities.iter().map(|d| num(*d)));
    v.push(row.est.seed.map(|s| s.to_string()).unwrap_or_default());
    v.push(row.scope.name().to_string());
    v
}

fn push_distribution(table: &mut Table, t: f64, p: f64, source: &str, d: &SizeDistribution) {
    for (size, prob) in d.probs().iter().enumerate() {
        table.push(vec![
            num(t),
            size.to_string(),
            num(*prob),
            num(p),
            source.to_string(),
        ]);
    }
}

fn distribution_table() -> Table {
    Table::new(["t", "size", "prob", "p", "source"])
}

/// Noiseless size growth: oracle and circuit curves with distributions.
///
/// Writes `size_growth.csv` and `size_growth_dist.csv`.
pub fn exp_size_growth(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.t_grid()?;
    let oracle = cfg.oracle(&grid)?;
    let scope = cfg.scope()?;
    let estimates: Vec<(usize, Estimate)> = grid
        .par_iter()
        .map(|&t| {
            let r = cfg.steps_at(t)?;
            let protocol = Protocol::new(&cfg.spec(t, r)?)?;
            let seed = point_seed(cfg.seed, t, 0.0);
            Ok((r, noiseless_estimate(&protocol, cfg.shots, seed)?))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(size_header(cfg.model.n));
    let mut dist = distribution_table();
    for (k, (&t, (r, est))) in grid.iter().zip(&estimates).enumerate() {
        let o = oracle.as_ref().map(|o| &o[k]);
        table.push(size_row(SizeRow {
            t,
            est,
            oracle: o.map(|o| o.average_size),
            r: *r,
            p: 0.0,
            scope,
        }));
        push_distribution(&mut dist, t, 0.0, "circuit", &est.distribution);
        if let Some(o) = o {
            push_distribution(&mut dist, t, 0.0, "oracle", &o.distribution);
        }
    }
    Ok(Report {
        tables: vec![
            ("size_growth.csv".into(), table),
            ("size_growth_dist.csv".into(), dist),
        ],
    })
}

/// Least-squares fit of `ε ≈ a·x + b·y` with `a, b ≥ 0`.
pub fn fit_envelope(x: &[f64], y: &[f64], eps: &[f64]) -> (f64, f64) {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));
    let (xe, ye) = (dot(x, eps), dot(y, eps));
    let det = xx * yy - xy * xy;
    if det > 1e-300 * xx.max(yy).max(1.0) {
        let a = (xe * yy - ye * xy) / det;
        let b = (ye * xx - xe * xy) / det;
        if a >= 0.0 && b >= 0.0 {
            return (a, b);
        }
    }
    // Best boundary solution with one coefficient pinned to zero.
    let only_a = if xx > 0.0 { (xe / xx).max(0.0) } else { 0.0 };
    let only_b = if yy > 0.0 { (ye / yy).max(0.0) } else { 0.0 };
    let resid = |a: f64, b: f64| {
        x.iter()
            .zip(y)
            .zip(eps)
            .map(|((xi, yi), e)| (e - a * xi - b * yi).powi(2))
            .sum::<f64>()
    };
    if resid(only_a, 0.0) <= resid(0.0, only_b) {
        (only_a, 0.0)
    } else {
        (0.0, only_b)
    }
}

/// Least-squares slope of `ln ε` against `ln r`.
pub fn loglog_slope(r: &[f64], eps: &[f64]) -> f64 {
    let lx: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = eps.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn circuit_size(cfg: &ExperimentConfig, t: f64, r: usize) -> Result<f64> {
    let protocol = Protocol::new(&cfg.spec(t, r)?)?;
    Ok(run_protocol(&protocol)?
        .exact_size_expectation(Frame::Decoded)?
        .average)
}

/// Trotter error `ε = |L_circuit − L_oracle|` against `t` at `trotter.r_fixed`
/// and against `r` at `trotter.t_fixed`.
///
/// Writes `trotter_vs_t.csv` and `trotter_vs_r.csv`; each carries its own
/// fit of `a·(t/r) + b·(t³/r²)`.
pub fn exp_trotter_error(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.model.n > MAX_DENSE_SITES {
        return Err(Error::Config(format!(
            "trotter-error needs the dense oracle (n <= {MAX_DENSE_SITES})"
        )));
    }
    let tr = &cfg.trotter;
    let grid = cfg.t_grid()?;
    let oracle = cfg.oracle(&grid)?.expect("n checked");
    let r = tr.r_fixed;
    let by_t: Vec<f64> = grid
        .par_iter()
        .map(|&t| circuit_size(cfg, t, r))
        .collect::<Result<_>>()?;

    let fixed = cfg.oracle(&[tr.t_fixed])?.expect("n checked")[0].average_size;
    let by_r: Vec<f64> = tr
        .r_list
        .par_iter()
        .map(|&r| circuit_size(cfg, tr.t_fixed, r))
        .collect::<Result<_>>()?;

    let header = [
        "t",
        "r",
        "L_circuit",
        "L_oracle",
        "epsilon",
        "fit_a",
        "fit_b",
    ];
    let mut vs_t = Table::new(header);
    let eps_t: Vec<f64> = by_t
        .iter()
        .zip(&oracle)
        .map(|(l, o)| (l - o.average_size).abs())
        .collect();
    let rf = r as f64;
    let xs: Vec<f64> = grid.iter().map(|t| t / rf).collect();
    let ys: Vec<f64> = grid.iter().map(|t| t.powi(3) / (rf * rf)).collect();
    let (a, b) = fit_envelope(&xs, &ys, &eps_t);
    for (k, &t) in grid.iter().enumerate() {
        vs_t.push(vec![
            num(t),
            r.to_string(),
            num(by_t[k]),
            num(oracle[k].average_size),
            num(eps_t[k]),
            num(a),
            num(b),
        ]);
    }

    let mut vs_r = Table::new(header.iter().copied().chain(["slope"]));
    let eps_r: Vec<f64> = by_r.iter().map(|l| (l - fixed).abs()).collect();
    let t = tr.t_fixed;
    let rs: Vec<f64> = tr.r_list.iter().map(|&r| r as f64).collect();
    let xs: Vec<f64> = rs.iter().map(|r| t / r).collect();
    let ys: Vec<f64> = rs.iter().map(|r| t.powi(3) / (r * r)).collect();
    let (a, b) = fit_envelope(&xs, &ys, &eps_r);
    let slope = loglog_slope(&rs, &eps_r);
    for (k, &r) in tr.r_list.iter().enumerate() {
        vs_r.push(vec![
            num(t),
            r.to_string(),
            num(by_r[k]),
            num(fixed),
            num(eps_r[k]),
            num(a),
            num(b),
            num(slope),
        ]);
    }
    Ok(Report {
        tables: vec![
            ("trotter_vs_t.csv".into(), vs_t),
            ("trotter_vs_r.csv".into(), vs_r),
        ],
    })
}

/// Noisy size curves for every rate in `noise.p`.
///
/// Writes `noise.csv` and `noise_dist.csv`.
pub fn exp_noise(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.t_grid()?;
    let oracle = cfg.oracle(&grid)?;
    let scope = cfg.scope()?;
    let backend = cfg.backend();
    let points: Vec<(f64, f64)> = cfg
        .noise
        .p
        .iter()
        .flat_map(|&p| grid.iter().map(move |&t| (p, t)))
        .collect();
    let estimates: Vec<(usize, Estimate)> = points
        .par_iter()
        .map(|&(p, t)| {
            let r = cfg.steps_at(t)?;
            let protocol = Protocol::new(&cfg.spec(t, r)?)?;
            let noise = NoiseModel::new(p, scope)?;
            let seed = point_seed(cfg.seed, t, p);
            Ok((
                r,
                estimate(&protocol, &noise, backend, cfg.noise.n_traj, seed)?,
            ))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(size_header(cfg.model.n));
    let mut dist = distribution_table();
    for (k, (&(p, t), (r, est))) in points.iter().zip(&estimates).enumerate() {
        let o = oracle.as_ref().map(|o| &o[k % grid.len()]);
        table.push(size_row(SizeRow {
            t,
            est,
            oracle: o.map(|o| o.average_size),
            r: *r,
            p,
            scope,
        }));
        push_distribution(&mut dist, t, p, est.backend.name(), &est.distribution);
    }
    Ok(Report {
        tables: vec![("noise.csv".into(), table), ("noise_dist.csv".into(), dist)],
    })
}

/// Zero-noise extrapolation at base rate `noise.p[0]` for every plan.
///
/// Estimates at each distinct scaled rate are computed once per `t` and shared
/// between plans. Writes `mitigation.csv`.
pub fn exp_mitigation(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.t_grid()?;
    let oracle = cfg.oracle(&grid)?;
    let scope = cfg.scope()?;
    let backend = cfg.backend();
    let plans = cfg.plans()?;
    let base = cfg.noise.p[0];

    let mut scales: Vec<f64> = vec![1.0];
    for plan in &plans {
        for &c in plan.scales() {
            if !scales.contains(&c) {
                scales.push(c);
            }
        }
    }
    let points: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&t| scales.iter().map(move |&c| (t, c)))
        .collect();
    let estimates: Vec<Estimate> = points
        .par_iter()
        .map(|&(t, c)| {
            let r = cfg.steps_at(t)?;
            let protocol = Protocol::new(&cfg.spec(t, r)?)?;
            let p = c * base;
            let noise = NoiseModel::new(p, scope)?;
            estimate(
                &protocol,
                &noise,
                backend,
                cfg.noise.n_traj,
                point_seed(cfg.seed, t, p),
            )
        })
        .collect::<Result<_>>()?;
    let noiseless: Vec<f64> = grid
        .par_iter()
        .map(|&t| circuit_size(cfg, t, cfg.steps_at(t)?))
        .collect::<Result<_>>()?;

    let mut table = Table::new([
        "t",
        "n_c",
        "scales",
        "L_mitigated",
        "stderr",
        "L_unmitigated",
        "L_noiseless",
        "L_oracle",
        "r",
        "p",
        "backend",
        "seed",
        "scope",
    ]);
    for (k, &t) in grid.iter().enumerate() {
        let at = &estimates[k * scales.len()..(k + 1) * scales.len()];
        let lookup = |c: f64| {
            &at[scales
                .iter()
                .position(|s| *s == c)
                .expect("scale collected")]
        };
        let unmitigated = lookup(1.0);
        for plan in &plans {
            let est: Vec<&Estimate> = plan.scales().iter().map(|&c| lookup(c)).collect();
            let values: Vec<f64> = est.iter().map(|e| e.average).collect();
            let errs: Vec<f64> = est.iter().map(|e| e.stderr).collect();
            let scales_text = plan
                .scales()
                .iter()
                .map(|c| num(*c))
                .collect::<Vec<_>>()
                .join(";");
            table.push(vec![
                num(t),
                plan.n_c().to_string(),
                scales_text,
                num(plan.mitigate(&values)?),
                num(plan.mitigated_stderr(&errs)?),
                num(unmitigated.average),
                num(noiseless[k]),
                opt_num(oracle.as_ref().map(|o| o[k].average_size)),
                cfg.steps_at(t)?.to_string(),
                num(base),
                est[0].backend.name().to_string(),
                cfg.seed.to_string(),
                scope.name().to_string(),
            ]);
        }
    }
    Ok(Report {
        tables: vec![("mitigation.csv".into(), table)],
    })
}

/// Human-readable summary of a validated config.
pub fn describe(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let grid = cfg.t_grid()?;
    let mut s = String::new();
    let m = &cfg.model;
    let _ = writeln!(s, "model: n={} J={} hx={} hz={}", m.n, m.j, m.hx, m.hz);
    let _ = writeln!(s, "operator: {}_{}", cfg.pauli()?, cfg.operator.site);
    let _ = writeln!(
        s,
        "grid: {} points on [{}, {}]",
        grid.len(),
        grid[0],
        grid[grid.len() - 1]
    );
    let _ = writeln!(
        s,
        "noise: p={:?} scope={} backend={}",
        cfg.noise.p,
        cfg.scope()?.name(),
        cfg.backend().name()
    );
    let plans: Vec<usize> = cfg.plans()?.iter().map(|p| p.n_c()).collect();
    let _ = writeln!(s, "mitigation: n_c={plans:?}");
    Ok(s)
}
