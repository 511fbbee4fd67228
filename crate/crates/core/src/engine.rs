//! Causal and standard collapse engines over a finite schedule of reduction events.
//!
//! Both engines walk the events in global coordinate-time order (ties by site
//! index) and branch over outcomes. They differ only in which earlier
//! reductions shape the state an event is applied to:
//!
//! * causal: the events in the event's closed past light cone;
//! * standard: every earlier event in the global order.
//!
//! Branches whose local state is annihilated are not renormalized; their weight
//! is reported as `truncated_mass` together with the offending chain.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::KrausSet;
use crate::error::{ChainLink, Error, Result, ZeroNormChain};
use crate::linalg::{apply_and_norm, normalize, PureState, SiteDims};
use crate::rng;
use crate::spacetime::{past_cone_filter, relate, time_order, CausalRelation, Located, SpacetimePoint};

pub type EventId = usize;

/// Largest number of outcome tuples exact enumeration will visit.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

/// Tolerance on mixture weights summing to one.
pub const TOL_WEIGHTS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Causal,
    Standard,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Causal => "causal",
            Engine::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReductionEvent {
    id: EventId,
    pub site: usize,
    pub point: SpacetimePoint,
    pub kraus: Arc<KrausSet>,
}

impl ReductionEvent {
    /// The id is assigned when the event is placed in a [`Scenario`].
    pub fn new(site: usize, point: SpacetimePoint, kraus: Arc<KrausSet>) -> Self {
        ReductionEvent {
            id: usize::MAX,
            site,
            point,
            kraus,
        }
    }

    pub fn id(&self) -> EventId {
        self.id
    }
}

impl Located for ReductionEvent {
    fn point(&self) -> &SpacetimePoint {
        &self.point
    }

    fn site(&self) -> usize {
        self.site
    }
}

#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(PureState),
    /// Convex combination of pure states, weights summing to one.
    Mixture(Vec<(f64, PureState)>),
}

impl InitialState {
    pub fn components(&self) -> Vec<(f64, &PureState)> {
        match self {
            InitialState::Pure(s) => vec![(1.0, s)],
            InitialState::Mixture(c) => c.iter().map(|(w, s)| (*w, s)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    dims: SiteDims,
    site_positions: Vec<[f64; 3]>,
    initial: InitialState,
    events: Vec<ReductionEvent>,
}

impl Scenario {
    pub fn new(
        dims: SiteDims,
        site_positions: Vec<[f64; 3]>,
        initial: InitialState,
        events: Vec<ReductionEvent>,
    ) -> Result<Self> {
        if site_positions.len() != dims.n_sites() {
            return Err(Error::invalid(
                "site_positions",
                format!("{} positions for {} sites", site_positions.len(), dims.n_sites()),
            ));
        }
        for (i, p) in site_positions.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("site_positions[{i}]"), "non-finite coordinate"));
            }
        }
        match &initial {
            InitialState::Pure(s) => check_initial_dims(&dims, s, "initial")?,
            InitialState::Mixture(comps) => {
                if comps.is_empty() {
                    return Err(Error::invalid("initial.mixture", "no components"));
                }
                let mut total = 0.0;
                for (i, (w, s)) in comps.iter().enumerate() {
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(Error::invalid(
                            format!("initial.mixture[{i}].weight"),
                            format!("weight must be finite and >= 0, got {w}"),
                        ));
                    }
                    check_initial_dims(&dims, s, &format!("initial.mixture[{i}].state"))?;
                    total += w;
                }
                if (total - 1.0).abs() > TOL_WEIGHTS {
                    return Err(Error::invalid(
                        "initial.mixture",
                        format!("weights sum to {total}, expected 1"),
                    ));
                }
            }
        }
        let mut events = events;
        for (id, ev) in events.iter_mut().enumerate() {
            ev.id = id;
            let path = format!("events[{id}]");
            if ev.site >= dims.n_sites() {
                return Err(Error::invalid(
                    format!("{path}.site"),
                    format!("site {} out of range for {} sites", ev.site, dims.n_sites()),
                ));
            }
            if !ev.point.is_finite() {
                return Err(Error::invalid(path, "non-finite coordinate"));
            }
            if ev.point.x != site_positions[ev.site] {
                return Err(Error::invalid(
                    path,
                    format!(
                        "event position {:?} differs from site {} position {:?}",
                        ev.point.x, ev.site, site_positions[ev.site]
                    ),
                ));
            }
            if ev.kraus.dim() != dims.dim(ev.site) {
                return Err(Error::invalid(
                    format!("{path}.kraus"),
                    format!(
                        "operators are {0}x{0}, site {1} has dimension {2}",
                        ev.kraus.dim(),
                        ev.site,
                        dims.dim(ev.site)
                    ),
                ));
            }
        }
        for (i, a) in events.iter().enumerate() {
            for b in &events[i + 1..] {
                if a.site == b.site && a.point.t == b.point.t {
                    return Err(Error::invalid(
                        format!("events[{}]", b.id),
                        format!("same site and time as events[{}]", a.id),
                    ));
                }
                if a.point == b.point {
                    return Err(Error::invalid(
                        format!("events[{}]", b.id),
                        format!("same spacetime point as events[{}]", a.id),
                    ));
                }
            }
        }
        Ok(Scenario {
            dims,
            site_positions,
            initial,
            events,
        })
    }

    pub fn dims(&self) -> &SiteDims {
        &self.dims
    }

    pub fn site_positions(&self) -> &[[f64; 3]] {
        &self.site_positions
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn events(&self) -> &[ReductionEvent] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> Result<&ReductionEvent> {
        self.events
            .get(id)
            .ok_or_else(|| Error::param(format!("no event with id {id}")))
    }

    /// Point of `site` at time `t`.
    pub fn point_at(&self, site: usize, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(self.site_positions[site], t)
    }

    /// Same scenario with a different initial state.
    pub fn with_initial(&self, initial: InitialState) -> Result<Self> {
        Scenario::new(
            self.dims.clone(),
            self.site_positions.clone(),
            initial,
            self.events.clone(),
        )
    }

    /// Keeps only the listed events (renumbered in the given order).
    pub fn retain_events(&self, keep: &[EventId]) -> Result<Self> {
        let events = keep
            .iter()
            .map(|&id| self.event(id).cloned())
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(
            self.dims.clone(),
            self.site_positions.clone(),
            self.initial.clone(),
            events,
        )
    }

    /// Number of full outcome tuples, as a float to survive overflow.
    pub fn tuple_count(&self) -> f64 {
        self.events.iter().map(|e| e.kraus.len() as f64).product()
    }

    fn pure_initial(&self) -> Result<&PureState> {
        match &self.initial {
            InitialState::Pure(s) => Ok(s),
            InitialState::Mixture(_) => Err(Error::param(
                "local states are defined per pure component; pick one with with_initial",
            )),
        }
    }
}

fn check_initial_dims(dims: &SiteDims, s: &PureState, path: &str) -> Result<()> {
    if s.dims() != dims {
        return Err(Error::invalid(
            path,
            format!("state dims {:?} differ from scenario dims {:?}", s.dims().as_slice(), dims.as_slice()),
        ));
    }
    Ok(())
}

/// Recorded outcomes of some set of events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PastData {
    assignments: BTreeMap<EventId, usize>,
}

impl PastData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, event: EventId, outcome: usize) -> &mut Self {
        self.assignments.insert(event, outcome);
        self
    }

    pub fn get(&self, event: EventId) -> Option<usize> {
        self.assignments.get(&event).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, usize)> + '_ {
        self.assignments.iter().map(|(&e, &o)| (e, o))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl FromIterator<(EventId, usize)> for PastData {
    fn from_iter<I: IntoIterator<Item = (EventId, usize)>>(iter: I) -> Self {
        PastData {
            assignments: iter.into_iter().collect(),
        }
    }
}

/// Applies `steps` to `initial` in the given order, renormalizing after each.
pub fn reduce_sequence<'a>(
    initial: &PureState,
    steps: impl IntoIterator<Item = (&'a ReductionEvent, usize)>,
    target: Option<EventId>,
) -> Result<PureState> {
    let mut state = initial.clone();
    let mut chain = Vec::new();
    for (ev, outcome) in steps {
        if outcome >= ev.kraus.len() {
            return Err(Error::param(format!(
                "outcome {outcome} out of range for event {} ({} outcomes)",
                ev.id,
                ev.kraus.len()
            )));
        }
        chain.push(ChainLink {
            event: ev.id,
            outcome,
        });
        let (v, n) = apply_and_norm(&ev.kraus.on_site(ev.site, outcome), &state)?;
        state = normalize(state.dims(), v, n).map_err(|e| match e {
            Error::ZeroNormState(mut z) => {
                z.target = target;
                z.chain = chain.clone();
                Error::ZeroNormState(z)
            }
            other => other,
        })?;
    }
    Ok(state)
}

fn outcome_probabilities(kraus: &KrausSet, site: usize, state: &PureState) -> Result<Vec<f64>> {
    (0..kraus.len())
        .map(|j| apply_and_norm(&kraus.on_site(site, j), state).map(|(_, n)| n))
        .collect()
}

/// State at `target` built from `past` restricted to `target`'s past light cone.
///
/// Outcomes recorded for events outside the cone are ignored.
pub fn local_state(scenario: &Scenario, target: &SpacetimePoint, past: &PastData) -> Result<PureState> {
    local_state_for(scenario, target, past, None)
}

fn local_state_for(
    scenario: &Scenario,
    target: &SpacetimePoint,
    past: &PastData,
    target_id: Option<EventId>,
) -> Result<PureState> {
    let cone = past_cone_filter(target, &scenario.events);
    let steps = cone
        .into_iter()
        .map(|ev| {
            past.get(ev.id)
                .map(|o| (ev, o))
                .ok_or_else(|| Error::param(format!("no outcome recorded for past-cone event {}", ev.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    reduce_sequence(scenario.pure_initial()?, steps, target_id)
}

/// Causal-theory outcome probabilities of `event` given its past-cone data.
pub fn event_probabilities(scenario: &Scenario, event: EventId, past: &PastData) -> Result<Vec<f64>> {
    let ev = scenario.event(event)?;
    let state = local_state_for(scenario, &ev.point, past, Some(event))?;
    outcome_probabilities(&ev.kraus, ev.site, &state)
}

/// Standard-theory outcome probabilities of `event` given the outcomes of every
/// event that precedes it in the global time order.
pub fn standard_event_probabilities(
    scenario: &Scenario,
    event: EventId,
    history: &PastData,
) -> Result<Vec<f64>> {
    let schedule = Schedule::new(scenario, Engine::Standard);
    let ev = scenario.event(event)?;
    let steps = schedule.context[event]
        .iter()
        .map(|&id| {
            history
                .get(id)
                .map(|o| (&scenario.events[id], o))
                .ok_or_else(|| Error::param(format!("no outcome recorded for earlier event {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let state = reduce_sequence(scenario.pure_initial()?, steps, Some(event))?;
    outcome_probabilities(&ev.kraus, ev.site, &state)
}

/// Processing order plus, per event, the earlier events that shape its state.
struct Schedule {
    order: Vec<EventId>,
    context: Vec<Vec<EventId>>,
}

impl Schedule {
    fn new(scenario: &Scenario, engine: Engine) -> Self {
        let events = &scenario.events;
        let mut order: Vec<EventId> = (0..events.len()).collect();
        order.sort_by(|&a, &b| time_order(&events[a], &events[b]));
        let context = match engine {
            Engine::Causal => events
                .iter()
                .map(|e| past_cone_filter(&e.point, events).iter().map(|p| p.id).collect())
                .collect(),
            Engine::Standard => {
                let mut ctx = vec![Vec::new(); events.len()];
                for (k, &id) in order.iter().enumerate() {
                    ctx[id] = order[..k].to_vec();
                }
                ctx
            }
        };
        Schedule { order, context }
    }

    fn probabilities(
        &self,
        scenario: &Scenario,
        initial: &PureState,
        event: EventId,
        outcomes: &[Option<usize>],
    ) -> Result<Vec<f64>> {
        let steps = self.context[event].iter().map(|&id| {
            (
                &scenario.events[id],
                outcomes[id].expect("context events precede the target in processing order"),
            )
        });
        let state = reduce_sequence(initial, steps, Some(event))?;
        let ev = &scenario.events[event];
        outcome_probabilities(&ev.kraus, ev.site, &state)
    }
}

/// Weight lost to an annihilated local state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub mass: f64,
    pub diagnostic: ZeroNormChain,
}

/// Joint outcome probabilities keyed by outcome tuples indexed by event id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeDistribution {
    pub entries: BTreeMap<Vec<usize>, f64>,
    pub truncated_mass: f64,
    pub truncations: Vec<Truncation>,
}

impl OutcomeDistribution {
    pub fn probability(&self, outcomes: &[usize]) -> f64 {
        self.entries.get(outcomes).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_partial(&self) -> bool {
        !self.truncations.is_empty()
    }

    /// Marginal distribution of one event's outcome over the surviving mass.
    pub fn marginal(&self, event: EventId) -> Vec<f64> {
        let mut out = Vec::new();
        for (tuple, p) in &self.entries {
            let o = tuple[event];
            if out.len() <= o {
                out.resize(o + 1, 0.0);
            }
            out[o] += p;
        }
        out
    }

    fn accumulate(&mut self, other: OutcomeDistribution, weight: f64) {
        for (k, p) in other.entries {
            *self.entries.entry(k).or_insert(0.0) += weight * p;
        }
        self.truncated_mass += weight * other.truncated_mass;
        self.truncations.extend(other.truncations.into_iter().map(|mut t| {
            t.mass *= weight;
            t
        }));
    }
}

fn check_budget(scenario: &Scenario) -> Result<()> {
    let tuples = scenario.tuple_count();
    if tuples > ENUMERATION_BUDGET as f64 {
        return Err(Error::Budget {
            tuples,
            limit: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

fn enumerate_pure(scenario: &Scenario, schedule: &Schedule, initial: &PureState) -> OutcomeDistribution {
    struct Walk<'a> {
        scenario: &'a Scenario,
        schedule: &'a Schedule,
        initial: &'a PureState,
        outcomes: Vec<Option<usize>>,
        out: OutcomeDistribution,
    }

    impl Walk<'_> {
        fn visit(&mut self, k: usize, weight: f64) {
            let Some(&event) = self.schedule.order.get(k) else {
                let key = self.outcomes.iter().map(|o| o.expect("all events assigned")).collect();
                *self.out.entries.entry(key).or_insert(0.0) += weight;
                return;
            };
            match self
                .schedule
                .probabilities(self.scenario, self.initial, event, &self.outcomes)
            {
                Ok(probs) => {
                    for (j, p) in probs.into_iter().enumerate() {
                        let w = weight * p;
                        if w == 0.0 {
                            continue;
                        }
                        self.outcomes[event] = Some(j);
                        self.visit(k + 1, w);
                    }
                    self.outcomes[event] = None;
                }
                Err(Error::ZeroNormState(diag)) => {
                    self.out.truncated_mass += weight;
                    self.out.truncations.push(Truncation {
                        mass: weight,
                        diagnostic: *diag,
                    });
                }
                Err(other) => unreachable!("validated scenario produced {other}"),
            }
        }
    }

    let mut walk = Walk {
        scenario,
        schedule,
        initial,
        outcomes: vec![None; scenario.events.len()],
        out: OutcomeDistribution::default(),
    };
    walk.visit(0, 1.0);
    walk.out
}

/// Exact joint distribution under `engine`; mixtures are averaged componentwise.
pub fn mixture_distribution(scenario: &Scenario, engine: Engine) -> Result<OutcomeDistribution> {
    check_budget(scenario)?;
    let schedule = Schedule::new(scenario, engine);
    let mut out = OutcomeDistribution::default();
    for (w, psi) in scenario.initial.components() {
        if w == 0.0 {
            continue;
        }
        out.accumulate(enumerate_pure(scenario, &schedule, psi), w);
    }
    Ok(out)
}

pub fn causal_distribution(scenario: &Scenario) -> Result<OutcomeDistribution> {
    mixture_distribution(scenario, Engine::Causal)
}

pub fn standard_distribution(scenario: &Scenario) -> Result<OutcomeDistribution> {
    mixture_distribution(scenario, Engine::Standard)
}

pub fn distribution(scenario: &Scenario, engine: Engine) -> Result<OutcomeDistribution> {
    mixture_distribution(scenario, engine)
}

fn draw<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

/// One realization of the scenario under `engine`, deterministic given `seed`.
pub fn sample_run(scenario: &Scenario, engine: Engine, seed: u64) -> Result<Vec<usize>> {
    let schedule = Schedule::new(scenario, engine);
    sample_with(scenario, &schedule, &mut rng::stream(seed, &[]))
}

fn sample_with<R: Rng + ?Sized>(scenario: &Scenario, schedule: &Schedule, rng: &mut R) -> Result<Vec<usize>> {
    let comps = scenario.initial.components();
    let initial = if comps.len() == 1 {
        comps[0].1
    } else {
        let weights: Vec<f64> = comps.iter().map(|c| c.0).collect();
        comps[draw(rng, &weights)].1
    };
    let mut outcomes = vec![None; scenario.events.len()];
    for &event in &schedule.order {
        let probs = schedule.probabilities(scenario, initial, event, &outcomes)?;
        outcomes[event] = Some(draw(rng, &probs));
    }
    Ok(outcomes.into_iter().map(|o| o.expect("every event drawn")).collect())
}

/// Empirical outcome counts from `trials` independent runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampleCounts {
    pub trials: u64,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

impl SampleCounts {
    pub fn frequency(&self, outcomes: &[usize]) -> f64 {
        self.counts.get(outcomes).copied().unwrap_or(0) as f64 / self.trials as f64
    }
}

/// Runs `trials` samples in parallel; trial `i` uses the seed derived from
/// `(seed, i)`, so results do not depend on thread count. The first failing
/// trial (lowest index) aborts the batch.
pub fn sample_counts(scenario: &Scenario, engine: Engine, trials: u64, seed: u64) -> Result<SampleCounts> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let schedule = Schedule::new(scenario, engine);
    let runs: Vec<Result<Vec<usize>>> = (0..trials)
        .into_par_iter()
        .map(|i| sample_with(scenario, &schedule, &mut rng::stream(seed, &[i])))
        .collect();
    let mut counts = BTreeMap::new();
    for run in runs {
        *counts.entry(run?).or_insert(0) += 1;
    }
    Ok(SampleCounts { trials, counts })
}

/// Causal relation between two events of a scenario (`a` relative to `b`).
pub fn event_relation(scenario: &Scenario, a: EventId, b: EventId) -> Result<CausalRelation> {
    Ok(relate(&scenario.event(a)?.point, &scenario.event(b)?.point))
}

/// True when every pair of events is causally (not spacelike) related.
pub fn is_causal_chain(scenario: &Scenario) -> bool {
    let ev = &scenario.events;
    ev.iter().enumerate().all(|(i, a)| {
        ev[i + 1..]
            .iter()
            .all(|b| relate(&a.point, &b.point) != CausalRelation::Spacelike)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::{perturbed_singlet, projective_qubit};

    fn bell(eps: f64, t_a: f64, t_b: f64, sep: f64) -> Scenario {
        let k = Arc::new(projective_qubit(0.0));
        Scenario::new(
            SiteDims::qubits(2).unwrap(),
            vec![[0.0; 3], [sep, 0.0, 0.0]],
            InitialState::Pure(perturbed_singlet(eps).unwrap()),
            vec![
                ReductionEvent::new(0, SpacetimePoint::on_line(0.0, t_a), k.clone()),
                ReductionEvent::new(1, SpacetimePoint::on_line(sep, t_b), k),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_past_gives_initial() {
        let s = bell(0.0, 1.0, 1.0, 1e-4);
        let psi = local_state(&s, &SpacetimePoint::on_line(0.0, 0.5), &PastData::new()).unwrap();
        assert_eq!(&psi, s.pure_initial().unwrap());
    }

    #[test]
    fn local_state_after_one_wing() {
        let s = bell(0.0, 1.0, 1.0, 1e-4);
        let past: PastData = [(0, 0)].into_iter().collect();
        // just after A, still outside B's future cone
        let at_a = SpacetimePoint::on_line(0.0, 1.0 + 1e-5);
        let psi = local_state(&s, &at_a, &past).unwrap();
        let want = PureState::basis(s.dims().clone(), &[0, 1]).unwrap();
        assert!(psi.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn both_wings_zero_annihilates() {
        let s = bell(0.0, 1.0, 1.0, 1e-4);
        let past: PastData = [(0, 0), (1, 0)].into_iter().collect();
        let later = SpacetimePoint::on_line(0.0, 2.0);
        match local_state(&s, &later, &past) {
            Err(Error::ZeroNormState(z)) => {
                assert_eq!(z.chain.len(), 2);
                assert_eq!(z.chain[1], ChainLink { event: 1, outcome: 0 });
            }
            other => panic!("expected ZeroNormState, got {other:?}"),
        }
    }

    #[test]
    fn missing_past_outcome_is_an_error() {
        let s = bell(0.0, 1.0, 1.0, 1e-4);
        let later = SpacetimePoint::on_line(0.0, 2.0);
        assert!(matches!(local_state(&s, &later, &PastData::new()), Err(Error::Param(_))));
    }

    #[test]
    fn event_probability_examples() {
        let s = bell(0.0, 1.0, 1.0, 1e-4);
        let p = event_probabilities(&s, 0, &PastData::new()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        let past: PastData = [(0, 0)].into_iter().collect();
        // spacelike: B does not see A
        let p = event_probabilities(&s, 1, &past).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        // timelike: B after A's light reaches it
        let t = bell(0.0, 1.0, 2.0, 1e-4);
        let p = event_probabilities(&t, 1, &past).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_event_distribution_matches_probabilities() {
        let s = bell(1e-3, 1.0, 1.0, 1e-4).retain_events(&[0]).unwrap();
        let d = causal_distribution(&s).unwrap();
        let p = event_probabilities(&s, 0, &PastData::new()).unwrap();
        assert_eq!(d.probability(&[0]), p[0]);
        assert_eq!(d.probability(&[1]), p[1]);
    }

    #[test]
    fn standard_exact_singlet() {
        let d = standard_distribution(&bell(0.0, 1.0, 1.0, 1e-4)).unwrap();
        assert_eq!(d.probability(&[0, 0]), 0.0);
        assert_eq!(d.probability(&[1, 1]), 0.0);
        assert!((d.probability(&[0, 1]) - 0.5).abs() < 1e-15);
        assert!((d.probability(&[1, 0]) - 0.5).abs() < 1e-15);
        assert_eq!(d.truncated_mass, 0.0);
    }

    #[test]
    fn trivial_event_sample() {
        let s = Scenario::new(
            SiteDims::qubits(1).unwrap(),
            vec![[0.0; 3]],
            InitialState::Pure(PureState::basis(SiteDims::qubits(1).unwrap(), &[1]).unwrap()),
            vec![ReductionEvent::new(0, SpacetimePoint::on_line(0.0, 0.0), Arc::new(KrausSet::trivial(2)))],
        )
        .unwrap();
        for seed in 0..5 {
            assert_eq!(sample_run(&s, Engine::Causal, seed).unwrap(), vec![0]);
        }
    }

    #[test]
    fn scenario_validation() {
        let k = Arc::new(projective_qubit(0.0));
        let dims = SiteDims::qubits(2).unwrap();
        let init = InitialState::Pure(perturbed_singlet(0.0).unwrap());
        let pos = vec![[0.0; 3], [1.0, 0.0, 0.0]];
        let mk = |events| Scenario::new(dims.clone(), pos.clone(), init.clone(), events);
        // wrong position for site
        assert!(mk(vec![ReductionEvent::new(1, SpacetimePoint::on_line(0.0, 0.0), k.clone())]).is_err());
        // site out of range
        assert!(mk(vec![ReductionEvent::new(2, SpacetimePoint::on_line(0.0, 0.0), k.clone())]).is_err());
        // same site same time
        assert!(mk(vec![
            ReductionEvent::new(0, SpacetimePoint::on_line(0.0, 0.0), k.clone()),
            ReductionEvent::new(0, SpacetimePoint::on_line(0.0, 0.0), k.clone()),
        ])
        .is_err());
        // kraus dimension
        assert!(mk(vec![ReductionEvent::new(
            0,
            SpacetimePoint::on_line(0.0, 0.0),
            Arc::new(KrausSet::trivial(3))
        )])
        .is_err());
        // mixture weights
        let bad = InitialState::Mixture(vec![(0.6, perturbed_singlet(0.0).unwrap())]);
        assert!(Scenario::new(dims.clone(), pos.clone(), bad, vec![]).is_err());
        // site positions count
        assert!(Scenario::new(dims.clone(), vec![[0.0; 3]], init.clone(), vec![]).is_err());
    }

    #[test]
    fn budget_enforced() {
        let k = Arc::new(projective_qubit(0.0));
        let events = (0..21)
            .map(|i| ReductionEvent::new(0, SpacetimePoint::on_line(0.0, i as f64), k.clone()))
            .collect();
        let s = Scenario::new(
            SiteDims::qubits(1).unwrap(),
            vec![[0.0; 3]],
            InitialState::Pure(PureState::basis(SiteDims::qubits(1).unwrap(), &[0]).unwrap()),
            events,
        )
        .unwrap();
        assert!(matches!(causal_distribution(&s), Err(Error::Budget { .. })));
        assert_eq!(sample_run(&s, Engine::Causal, 0).unwrap(), vec![0; 21]);
    }
}
