//! JSON scenario and Bell-config files, result records, CSV tables.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bell::{grid_points, Angles, BellConfig, ChshResult, GridScale, SweepParam, SweepRow};
use crate::collapse::{projective_qubit, softened_projectors, DelayModel, KrausSet};
use crate::engine::{Engine, InitialState, OutcomeDistribution, ReductionEvent, SampleCounts, Scenario, Truncation};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, PureState, SiteDims, C64};
use crate::spacetime::SpacetimePoint;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A site position: full `[x, y, z]` or a bare `x` on a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Position {
    Line(f64),
    Space([f64; 3]),
}

impl Position {
    fn coords(self) -> [f64; 3] {
        match self {
            Position::Line(x) => [x, 0.0, 0.0],
            Position::Space(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    PerturbedSinglet { eps: f64 },
    /// Complex amplitudes as `[re, im]` pairs in big-endian site order.
    Amplitudes(Vec<[f64; 2]>),
    /// A computational basis state given by per-site digits.
    Basis(Vec<usize>),
    Mixture(Vec<MixtureComponent>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: InitialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KrausSpec {
    Projective { theta: f64 },
    Softened { theta: f64, eta: f64 },
    /// Operators as row-major matrices of `[re, im]` entries.
    Explicit(Vec<Vec<Vec<[f64; 2]>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub site: usize,
    /// Optional; must match the site's position when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub t: f64,
    pub kraus: KrausSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Exact,
    Sample { trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dims: Vec<usize>,
    pub site_positions: Vec<Position>,
    pub initial: InitialSpec,
    pub events: Vec<EventSpec>,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: ModeSpec,
}

fn default_engine() -> Engine {
    Engine::Causal
}

fn default_mode() -> ModeSpec {
    ModeSpec::Exact
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Validation { path: inner, message } => Error::invalid(format!("{path}.{inner}"), message),
        other => Error::invalid(path, other.to_string()),
    }
}

fn complex(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

impl InitialSpec {
    fn build_pure(&self, dims: &SiteDims, path: &str) -> Result<PureState> {
        match self {
            InitialSpec::PerturbedSinglet { eps } => {
                if dims.as_slice() != [2, 2] {
                    return Err(Error::invalid(path, "perturbed_singlet needs dims [2, 2]"));
                }
                crate::collapse::perturbed_singlet(*eps).map_err(at(path))
            }
            InitialSpec::Amplitudes(a) => PureState::new(dims.clone(), complex(a)).map_err(at(path)),
            InitialSpec::Basis(digits) => PureState::basis(dims.clone(), digits).map_err(at(path)),
            InitialSpec::Mixture(_) => Err(Error::invalid(path, "mixtures cannot be nested")),
        }
    }

    pub fn build(&self, dims: &SiteDims) -> Result<InitialState> {
        match self {
            InitialSpec::Mixture(comps) => comps
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let state = c.state.build_pure(dims, &format!("initial.mixture[{i}].state"))?;
                    Ok((c.weight, state))
                })
                .collect::<Result<Vec<_>>>()
                .map(InitialState::Mixture),
            pure => pure.build_pure(dims, "initial").map(InitialState::Pure),
        }
    }
}

impl KrausSpec {
    pub fn build(&self) -> Result<KrausSet> {
        match self {
            KrausSpec::Projective { theta } => {
                if !theta.is_finite() {
                    return Err(Error::param("theta must be finite"));
                }
                Ok(projective_qubit(*theta))
            }
            KrausSpec::Softened { theta, eta } => {
                if !theta.is_finite() {
                    return Err(Error::param("theta must be finite"));
                }
                softened_projectors(*theta, *eta)
            }
            KrausSpec::Explicit(ops) => {
                let mats = ops
                    .iter()
                    .map(|rows| Matrix::from_rows(rows.iter().map(|r| complex(r)).collect()))
                    .collect::<Result<Vec<_>>>()?;
                KrausSet::new(mats)
            }
        }
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text, "scenario")
    }

    /// Validates everything and builds the engine-facing scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let dims = SiteDims::new(self.dims.clone()).map_err(at("dims"))?;
        let positions: Vec<[f64; 3]> = self.site_positions.iter().map(|p| p.coords()).collect();
        let initial = self.initial.build(&dims)?;
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let path = format!("events[{i}]");
                let kraus = e.kraus.build().map_err(at(&format!("{path}.kraus")))?;
                let site_pos = positions.get(e.site).copied().ok_or_else(|| {
                    Error::invalid(format!("{path}.site"), format!("no site {} in site_positions", e.site))
                })?;
                let mut x = site_pos;
                for (axis, given) in [e.x, e.y, e.z].into_iter().enumerate() {
                    if let Some(v) = given {
                        x[axis] = v;
                    }
                }
                Ok(ReductionEvent::new(e.site, SpacetimePoint::new(x, e.t), Arc::new(kraus)))
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(dims, positions, initial, events)
    }
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::invalid(
            format!("{what}:{}:{}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// `start:stop:steps[:lin|log]`
    pub grid: String,
}

/// Bell/sweep configuration file; missing keys take the harness defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    #[serde(alias = "L")]
    pub separation: Option<f64>,
    pub arrival_time: Option<f64>,
    pub angles: Option<[f64; 4]>,
    /// Applied to both wings unless `delay_a`/`delay_b` override.
    pub delay: Option<DelayModel>,
    pub delay_a: Option<DelayModel>,
    pub delay_b: Option<DelayModel>,
    pub engine: Option<Engine>,
    pub trials: Option<u64>,
    pub exact: Option<bool>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl BellFile {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text, "config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_json(&read_text(path)?, &path.display().to_string())
    }

    /// Overlays the file's keys on `base`.
    pub fn apply(&self, base: BellConfig) -> BellConfig {
        let mut c = base;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(eps, eta, separation, arrival_time, engine, trials, exact, seed);
        if let Some([a, a_prime, b, b_prime]) = self.angles {
            c.angles = Angles { a, a_prime, b, b_prime };
        }
        if let Some(d) = self.delay {
            c.delay_a = d;
            c.delay_b = d;
        }
        if let Some(d) = self.delay_a {
            c.delay_a = d;
        }
        if let Some(d) = self.delay_b {
            c.delay_b = d;
        }
        c
    }
}

/// Parses `start:stop:steps[:lin|log]`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::invalid("grid", format!("{msg} in {spec:?} (expected start:stop:steps[:lin|log])"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad("wrong number of fields"));
    }
    let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
    let stop: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
    let steps: usize = parts[2].parse().map_err(|_| bad("bad step count"))?;
    let scale = match parts.get(3).copied().unwrap_or("lin") {
        "lin" => GridScale::Lin,
        "log" => GridScale::Log,
        _ => return Err(bad("scale must be lin or log")),
    };
    grid_points(start, stop, steps, scale).map_err(|e| Error::invalid("grid", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub outcomes: Vec<usize>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEntry {
    pub outcomes: Vec<usize>,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// Output of `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tool: String,
    pub version: String,
    pub engine: Engine,
    pub seed: u64,
    pub mode: ModeSpec,
    pub events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<DistributionEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<CountEntry>>,
    pub total_probability: f64,
    pub truncated_mass: f64,
    pub zero_norm: Vec<Truncation>,
    pub timing: Timing,
}

impl ResultRecord {
    pub fn exact(engine: Engine, seed: u64, events: usize, dist: &OutcomeDistribution, elapsed: f64) -> Self {
        ResultRecord {
            tool: TOOL.into(),
            version: VERSION.into(),
            engine,
            seed,
            mode: ModeSpec::Exact,
            events,
            distribution: Some(
                dist.entries
                    .iter()
                    .map(|(k, &p)| DistributionEntry {
                        outcomes: k.clone(),
                        probability: p,
                    })
                    .collect(),
            ),
            counts: None,
            total_probability: dist.total(),
            truncated_mass: dist.truncated_mass,
            zero_norm: dist.truncations.clone(),
            timing: Timing { elapsed_seconds: elapsed },
        }
    }

    pub fn sampled(engine: Engine, seed: u64, events: usize, counts: &SampleCounts, elapsed: f64) -> Self {
        ResultRecord {
            tool: TOOL.into(),
            version: VERSION.into(),
            engine,
            seed,
            mode: ModeSpec::Sample { trials: counts.trials },
            events,
            distribution: None,
            counts: Some(
                counts
                    .counts
                    .iter()
                    .map(|(k, &n)| CountEntry {
                        outcomes: k.clone(),
                        count: n,
                        frequency: n as f64 / counts.trials as f64,
                    })
                    .collect(),
            ),
            total_probability: 1.0,
            truncated_mass: 0.0,
            zero_norm: Vec::new(),
            timing: Timing { elapsed_seconds: elapsed },
        }
    }

    /// CSV with one row per outcome tuple; tuples are space-separated labels.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::invalid("csv", e.to_string());
        if let Some(dist) = &self.distribution {
            out.write_record(["outcomes", "probability"]).map_err(err)?;
            for e in dist {
                out.write_record([tuple_label(&e.outcomes), e.probability.to_string()])
                    .map_err(err)?;
            }
        }
        if let Some(counts) = &self.counts {
            out.write_record(["outcomes", "count", "frequency"]).map_err(err)?;
            for e in counts {
                out.write_record([tuple_label(&e.outcomes), e.count.to_string(), e.frequency.to_string()])
                    .map_err(err)?;
            }
        }
        out.flush().map_err(|e| Error::invalid("csv", e.to_string()))
    }
}

pub fn tuple_label(outcomes: &[usize]) -> String {
    outcomes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Output of `bell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellRecord {
    pub tool: String,
    pub version: String,
    pub config: BellConfig,
    pub result: ChshResult,
    pub timing: Timing,
}

pub const BELL_CSV_HEADER: [&str; 13] = [
    "s",
    "s_stderr",
    "e_ab",
    "e_ab_stderr",
    "e_ab_prime",
    "e_ab_prime_stderr",
    "e_a_prime_b",
    "e_a_prime_b_stderr",
    "e_a_prime_b_prime",
    "e_a_prime_b_prime_stderr",
    "p_spacelike",
    "p_spacelike_stderr",
    "trials",
];

impl BellRecord {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let r = &self.result;
        let mut row = vec![r.s.value.to_string(), r.s.stderr.to_string()];
        for e in r.correlations() {
            row.push(e.value.to_string());
            row.push(e.stderr.to_string());
        }
        row.push(r.p_spacelike.value.to_string());
        row.push(r.p_spacelike.stderr.to_string());
        row.push(r.trials.to_string());
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::invalid("csv", e.to_string());
        out.write_record(BELL_CSV_HEADER).map_err(err)?;
        out.write_record(&row).map_err(err)?;
        out.flush().map_err(|e| Error::invalid("csv", e.to_string()))
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::invalid("csv", e.to_string());
    out.write_record(crate::bell::SWEEP_CSV_HEADER).map_err(err)?;
    for r in rows {
        let row = [
            r.param,
            r.p_spacelike,
            r.p_spacelike_stderr,
            r.p_spacelike_closed_form,
            r.s_direct,
            r.s_direct_stderr,
            r.s_mixture_prediction,
        ];
        out.write_record(row.iter().map(f64::to_string)).map_err(err)?;
    }
    out.flush().map_err(|e| Error::invalid("csv", e.to_string()))
}
