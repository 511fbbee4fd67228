//! Two-wing Bell/CHSH experiments on a (near-)singlet.
//!
//! Outcome labels map to spin values `0 → +1`, `1 → −1`, so
//! `E = P(00) + P(11) − P(01) − P(10)` and
//! `S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)`.
//!
//! Both photons reach their detectors at `arrival_time`; each wing's collapse
//! happens a delay later, drawn independently per wing and per trial. Every
//! trial therefore re-derives whether the two collapses are spacelike.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{
    check_separation, perturbed_singlet, projective_qubit, sample_delay, softened_projectors,
    spacelike_probability_exact, DelayModel, KrausSet, WING_A, WING_B,
};
use crate::engine::{
    distribution, event_relation, sample_run, Engine, InitialState, OutcomeDistribution,
    ReductionEvent, Scenario,
};
use crate::error::{Error, Result};
use crate::linalg::SiteDims;
use crate::rng;
use crate::spacetime::{CausalRelation, SpacetimePoint};

/// Measurement angles `(a, a′)` on wing A and `(b, b′)` on wing B, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Angles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Angles {
    /// Maximizes `S` for the singlet, whose correlation is `−cos(θ_A − θ_B)`:
    /// `S = +2√2`.
    pub fn optimal() -> Self {
        Angles {
            a: 0.0,
            a_prime: FRAC_PI_2,
            b: 5.0 * PI / 4.0,
            b_prime: 3.0 * PI / 4.0,
        }
    }

    /// The four `(θ_A, θ_B)` settings in CHSH order.
    pub fn settings(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }

    fn is_finite(&self) -> bool {
        [self.a, self.a_prime, self.b, self.b_prime]
            .iter()
            .all(|x| x.is_finite())
    }
}

const CHSH_SIGNS: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellConfig {
    /// Corner amplitude of the perturbed singlet.
    pub eps: f64,
    /// Projector softening; `0` means projective.
    pub eta: f64,
    /// Wing separation `L` in light-seconds.
    pub separation: f64,
    pub arrival_time: f64,
    pub angles: Angles,
    pub delay_a: DelayModel,
    pub delay_b: DelayModel,
    pub engine: Engine,
    /// Geometry (and, when sampling, outcome) realizations.
    pub trials: u64,
    /// Use exact distributions per geometry instead of sampled outcomes.
    pub exact: bool,
    pub seed: u64,
}

impl Default for BellConfig {
    fn default() -> Self {
        BellConfig {
            eps: 1e-3,
            eta: 0.0,
            separation: 3e-5,
            arrival_time: 0.0,
            angles: Angles::optimal(),
            delay_a: DelayModel::Deterministic { delta0: 0.0 },
            delay_b: DelayModel::Deterministic { delta0: 0.0 },
            engine: Engine::Causal,
            trials: 10_000,
            exact: true,
            seed: 0,
        }
    }
}

impl BellConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eps) {
            return Err(Error::param(format!("eps must lie in [0, 0.5), got {}", self.eps)));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::param(format!("eta must lie in [0, 1), got {}", self.eta)));
        }
        if self.engine == Engine::Causal && self.eta == 0.0 && self.eps == 0.0 {
            return Err(Error::param(
                "causal engine with projective measurements needs eps > 0 (or eta > 0)",
            ));
        }
        check_separation(self.separation)?;
        if !self.arrival_time.is_finite() {
            return Err(Error::param("arrival_time must be finite"));
        }
        if !self.angles.is_finite() {
            return Err(Error::param("angles must be finite"));
        }
        self.delay_a.validate()?;
        self.delay_b.validate()?;
        if self.trials == 0 && self.needs_trials() {
            return Err(Error::param("trials must be positive"));
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        [self.delay_a, self.delay_b]
            .iter()
            .any(|d| matches!(d, DelayModel::Exponential { .. }))
    }

    fn needs_trials(&self) -> bool {
        self.is_stochastic() || !self.exact
    }

    fn kraus(&self, theta: f64) -> Result<Arc<KrausSet>> {
        Ok(Arc::new(if self.eta > 0.0 {
            softened_projectors(theta, self.eta)?
        } else {
            projective_qubit(theta)
        }))
    }
}

/// Two qubits at `(0,0,0)` and `(L,0,0)`; event 0 is wing A's collapse at
/// `arrival_time + δ_A`, event 1 wing B's at `arrival_time + δ_B`.
pub fn build_bell_scenario(config: &BellConfig, delays: (f64, f64), setting: (f64, f64)) -> Result<Scenario> {
    let l = config.separation;
    Scenario::new(
        SiteDims::qubits(2)?,
        vec![[0.0; 3], [l, 0.0, 0.0]],
        InitialState::Pure(perturbed_singlet(config.eps)?),
        vec![
            ReductionEvent::new(
                0,
                SpacetimePoint::on_line(0.0, config.arrival_time + delays.0),
                config.kraus(setting.0)?,
            ),
            ReductionEvent::new(
                1,
                SpacetimePoint::on_line(l, config.arrival_time + delays.1),
                config.kraus(setting.1)?,
            ),
        ],
    )
}

/// `P(00) + P(11) − P(01) − P(10)` for events 0 and 1.
pub fn correlation_from(dist: &OutcomeDistribution) -> f64 {
    dist.entries
        .iter()
        .map(|(k, p)| if k[0] == k[1] { *p } else { -*p })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub e_ab: Estimate,
    pub e_ab_prime: Estimate,
    pub e_a_prime_b: Estimate,
    pub e_a_prime_b_prime: Estimate,
    pub s: Estimate,
    pub p_spacelike: Estimate,
    /// Geometry realizations averaged over (1 for a fixed exact geometry).
    pub trials: u64,
}

impl ChshResult {
    pub fn correlations(&self) -> [Estimate; 4] {
        [self.e_ab, self.e_ab_prime, self.e_a_prime_b, self.e_a_prime_b_prime]
    }
}

struct Trial {
    spacelike: bool,
    values: Vec<f64>,
}

fn sample_delays(config: &BellConfig, trial: u64) -> (f64, f64) {
    let da = sample_delay(&config.delay_a, &mut rng::stream(config.seed, &[trial, WING_A]));
    let db = sample_delay(&config.delay_b, &mut rng::stream(config.seed, &[trial, WING_B]));
    (da, db)
}

fn run_trial(config: &BellConfig, trial: u64, delays: (f64, f64), settings: &[(f64, f64)]) -> Result<Trial> {
    let mut spacelike = false;
    let values = settings
        .iter()
        .enumerate()
        .map(|(k, &setting)| {
            let scenario = build_bell_scenario(config, delays, setting)?;
            spacelike = event_relation(&scenario, 0, 1)? == CausalRelation::Spacelike;
            if config.exact {
                Ok(correlation_from(&distribution(&scenario, config.engine)?))
            } else {
                let outcome_seed = rng::derive_seed(config.seed, &[trial, 2 + k as u64]);
                let o = sample_run(&scenario, config.engine, outcome_seed)?;
                Ok(if o[0] == o[1] { 1.0 } else { -1.0 })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trial { spacelike, values })
}

fn run_trials(config: &BellConfig, settings: &[(f64, f64)]) -> Result<Vec<Trial>> {
    config.validate()?;
    if !config.needs_trials() {
        let delays = match (config.delay_a, config.delay_b) {
            (DelayModel::Deterministic { delta0: a }, DelayModel::Deterministic { delta0: b }) => (a, b),
            _ => unreachable!("deterministic delays when no trials are needed"),
        };
        return Ok(vec![run_trial(config, 0, delays, settings)?]);
    }
    let trials: Vec<Result<Trial>> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i, sample_delays(config, i), settings))
        .collect();
    trials.into_iter().collect()
}

/// Mean and standard error of the mean, summed in index order.
fn estimate(xs: impl ExactSizeIterator<Item = f64> + Clone) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if xs.len() < 2 {
        return Estimate { value: mean, stderr: 0.0 };
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// `E(θ_A, θ_B)` under `config`.
pub fn correlation(config: &BellConfig, setting: (f64, f64)) -> Result<Estimate> {
    let trials = run_trials(config, &[setting])?;
    Ok(estimate(trials.iter().map(|t| t.values[0])))
}

pub fn chsh(config: &BellConfig) -> Result<ChshResult> {
    let trials = run_trials(config, &config.angles.settings())?;
    let e = |k: usize| estimate(trials.iter().map(move |t| t.values[k]));
    let s = estimate(trials.iter().map(|t| {
        t.values
            .iter()
            .zip(CHSH_SIGNS)
            .map(|(v, sign)| sign * v)
            .sum::<f64>()
    }));
    let p = estimate(trials.iter().map(|t| if t.spacelike { 1.0 } else { 0.0 }));
    Ok(ChshResult {
        e_ab: e(0),
        e_ab_prime: e(1),
        e_a_prime_b: e(2),
        e_a_prime_b_prime: e(3),
        s,
        p_spacelike: p,
        trials: trials.len() as u64,
    })
}

/// Exact `S` with both collapses at fixed delays.
fn fixed_geometry_s(config: &BellConfig, delays: (f64, f64)) -> Result<f64> {
    let fixed = BellConfig {
        delay_a: DelayModel::Deterministic { delta0: delays.0 },
        delay_b: DelayModel::Deterministic { delta0: delays.1 },
        exact: true,
        ..config.clone()
    };
    Ok(chsh(&fixed)?.s.value)
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Wing separation `L` (light-seconds).
    #[serde(rename = "L", alias = "separation", alias = "l")]
    L,
    /// Exponential collapse rate `λ` (s⁻¹), applied to both wings.
    Lambda,
}

/// One CSV row of a sweep. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub p_spacelike: f64,
    pub p_spacelike_stderr: f64,
    pub p_spacelike_closed_form: f64,
    pub s_direct: f64,
    pub s_direct_stderr: f64,
    pub s_mixture_prediction: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 7] = [
    "param",
    "p_spacelike",
    "p_spacelike_stderr",
    "p_spacelike_closed_form",
    "s_direct",
    "s_direct_stderr",
    "s_mixture_prediction",
];

/// Evaluates [`chsh`] at every grid value.
///
/// Each row also carries the two-geometry mixture prediction
/// `(1 − p)·S_timelike + p·S_spacelike`, with `p` from the closed form for the
/// configured delay models and the two `S` values computed exactly. All grid
/// points share `config.seed`, so delay draws are common across the grid.
pub fn sweep(config: &BellConfig, param: SweepParam, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    grid.iter()
        .map(|&value| {
            let cfg = match param {
                SweepParam::L => BellConfig {
                    separation: value,
                    ..config.clone()
                },
                SweepParam::Lambda => BellConfig {
                    delay_a: DelayModel::Exponential { rate: value },
                    delay_b: DelayModel::Exponential { rate: value },
                    ..config.clone()
                },
            };
            cfg.validate()?;
            let r = chsh(&cfg)?;
            let p = spacelike_probability_exact(&cfg.delay_a, &cfg.delay_b, cfg.separation);
            let s_timelike = fixed_geometry_s(&cfg, (0.0, 2.0 * cfg.separation))?;
            let s_spacelike = fixed_geometry_s(&cfg, (0.0, 0.0))?;
            Ok(SweepRow {
                param: value,
                p_spacelike: r.p_spacelike.value,
                p_spacelike_stderr: r.p_spacelike.stderr,
                p_spacelike_closed_form: p,
                s_direct: r.s.value,
                s_direct_stderr: r.s.stderr,
                s_mixture_prediction: (1.0 - p) * s_timelike + p * s_spacelike,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Lin,
    Log,
}

/// `steps` points from `start` to `stop` inclusive.
pub fn grid_points(start: f64, stop: f64, steps: usize, scale: GridScale) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::param("grid needs at least one step"));
    }
    if !(start.is_finite() && stop.is_finite()) {
        return Err(Error::param("grid bounds must be finite"));
    }
    if scale == GridScale::Log && !(start > 0.0 && stop > 0.0) {
        return Err(Error::param("log grid bounds must be positive"));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == 0 {
                return start;
            }
            if i == steps - 1 {
                return stop;
            }
            let f = i as f64 / last;
            match scale {
                GridScale::Lin => start + f * (stop - start),
                GridScale::Log => (start.ln() + f * (stop.ln() - start.ln())).exp(),
            }
        })
        .collect())
}
