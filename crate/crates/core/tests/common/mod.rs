#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use causal_qt::collapse::{projective_basis, softened_basis, KrausSet};
use causal_qt::engine::{InitialState, ReductionEvent, Scenario};
use causal_qt::linalg::{Matrix, PureState, SiteDims, C64};
use causal_qt::spacetime::SpacetimePoint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const TWO_SQRT2: f64 = 2.0 * std::f64::consts::SQRT_2;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

// Dense reference linear algebra, deliberately naive.

pub type Dense = Vec<Vec<C64>>;

pub fn dense(m: &Matrix) -> Dense {
    m.rows().map(|r| r.to_vec()).collect()
}

pub fn dense_identity(d: usize) -> Dense {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![C64::new(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// `I ⊗ … ⊗ m ⊗ … ⊗ I`, site 0 leftmost.
pub fn full_operator(m: &Matrix, site: usize, dims: &[usize]) -> Dense {
    let mut acc = vec![vec![C64::new(1.0, 0.0)]];
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == site { dense(m) } else { dense_identity(d) };
        acc = kron(&acc, &factor);
    }
    acc
}

pub fn matvec(a: &Dense, v: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Textbook joint probabilities `‖A_{j_n} ⋯ A_{j_1} ψ‖²` for operators applied
/// in the listed order. Keys are outcome tuples in list order.
pub fn oracle_joint(psi: &[C64], dims: &[usize], steps: &[(usize, &KrausSet)]) -> BTreeMap<Vec<usize>, f64> {
    let lifted: Vec<Vec<Dense>> = steps
        .iter()
        .map(|(site, k)| k.ops().iter().map(|m| full_operator(m, *site, dims)).collect())
        .collect();
    let mut out = BTreeMap::new();
    let mut tuple = vec![0usize; steps.len()];
    loop {
        let mut v = psi.to_vec();
        for (ops, &j) in lifted.iter().zip(&tuple) {
            v = matvec(&ops[j], &v);
        }
        out.insert(tuple.clone(), norm_sq(&v));
        // odometer over outcome labels
        let mut k = steps.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < steps[k].1.len() {
                break;
            }
            tuple[k] = 0;
        }
    }
}

// Random inputs.

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_complex(rng)).collect()
}

pub fn random_matrix<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    Matrix::from_fn(d, |_, _| random_complex(rng))
}

pub fn random_state<R: Rng>(rng: &mut R, dims: &SiteDims) -> PureState {
    let v = random_vector(rng, dims.total());
    PureState::normalized(dims.clone(), v).unwrap()
}

/// Gram-Schmidt on random vectors.
pub fn random_basis<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v = random_vector(rng, d);
        for b in &basis {
            let overlap: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

pub fn random_kraus<R: Rng>(rng: &mut R, d: usize) -> KrausSet {
    let basis = random_basis(rng, d);
    if rng.random_bool(0.5) {
        projective_basis(&basis).unwrap()
    } else {
        softened_basis(&basis, rng.random_range(0.05..0.5)).unwrap()
    }
}

pub fn random_position<R: Rng>(rng: &mut R) -> [f64; 3] {
    [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ]
}

pub fn random_dims<R: Rng>(rng: &mut R, sites: usize, max_dim: usize) -> SiteDims {
    SiteDims::new((0..sites).map(|_| rng.random_range(2..=max_dim)).collect()).unwrap()
}

pub fn event_at(positions: &[[f64; 3]], site: usize, t: f64, kraus: KrausSet) -> ReductionEvent {
    ReductionEvent::new(site, SpacetimePoint::new(positions[site], t), Arc::new(kraus))
}

/// Sites scattered in a unit cube, events at random sites and times.
pub fn random_scenario<R: Rng>(rng: &mut R, sites: usize, max_dim: usize, n_events: usize) -> Scenario {
    let dims = random_dims(rng, sites, max_dim);
    let positions: Vec<[f64; 3]> = (0..sites).map(|_| random_position(rng)).collect();
    let events = (0..n_events)
        .map(|_| {
            let site = rng.random_range(0..sites);
            let t = rng.random_range(0.0..3.0);
            event_at(&positions, site, t, random_kraus(rng, dims.dim(site)))
        })
        .collect();
    let initial = InitialState::Pure(random_state(rng, &dims));
    Scenario::new(dims, positions, initial, events).unwrap()
}

/// Every event strictly inside the future cone of its predecessor.
pub fn random_chain<R: Rng>(rng: &mut R, sites: usize, max_dim: usize, n_events: usize) -> Scenario {
    let dims = random_dims(rng, sites, max_dim);
    let positions: Vec<[f64; 3]> = (0..sites).map(|_| random_position(rng)).collect();
    let mut events = Vec::with_capacity(n_events);
    let mut prev: Option<(usize, f64)> = None;
    for _ in 0..n_events {
        let site = rng.random_range(0..sites);
        let t = match prev {
            None => rng.random_range(0.0..1.0),
            Some((s, t0)) => {
                let d: f64 = positions[s]
                    .iter()
                    .zip(&positions[site])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                t0 + d + rng.random_range(0.01..0.5)
            }
        };
        events.push(event_at(&positions, site, t, random_kraus(rng, dims.dim(site))));
        prev = Some((site, t));
    }
    let initial = InitialState::Pure(random_state(rng, &dims));
    Scenario::new(dims, positions, initial, events).unwrap()
}

pub fn dist_max_diff(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!("criterion {id}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

pub fn rebuild(s: &Scenario, events: Vec<ReductionEvent>) -> Scenario {
    Scenario::new(s.dims().clone(), s.site_positions().to_vec(), s.initial().clone(), events).unwrap()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// One randomized local-causality case on a 3-site scenario: the target's
/// event probabilities must be bit-identical after removing, adding, and
/// re-assigning events spacelike to it. Returns the number of spacelike
/// events touched.
pub fn local_causality_case(seed: u64) -> Result<usize, String> {
    use causal_qt::engine::{event_probabilities, PastData};
    use causal_qt::spacetime::{relate, CausalRelation};

    let mut r = rng(seed);
    let n = r.random_range(3..=7);
    let s = random_scenario(&mut r, 3, 3, n);
    let target = r.random_range(0..n);
    let tp = s.events()[target].point;
    let outcomes: Vec<usize> = s.events().iter().map(|e| r.random_range(0..e.kraus.len())).collect();
    let past: PastData = outcomes.iter().copied().enumerate().collect();
    let base = event_probabilities(&s, target, &past).map_err(|e| e.to_string())?;
    let spacelike: Vec<usize> = (0..n)
        .filter(|&i| relate(&s.events()[i].point, &tp) == CausalRelation::Spacelike)
        .collect();
    let check = |label: &str, got: Vec<f64>| -> Result<(), String> {
        if bits(&got) == bits(&base) {
            Ok(())
        } else {
            Err(format!("seed {seed}: {label} changed {base:?} -> {got:?}"))
        }
    };

    // removal
    let keep: Vec<usize> = (0..n).filter(|i| !spacelike.contains(i)).collect();
    let removed = s.retain_events(&keep).unwrap();
    let new_target = keep.iter().position(|&i| i == target).unwrap();
    let past_removed: PastData = keep.iter().enumerate().map(|(k, &i)| (k, outcomes[i])).collect();
    check("removal", event_probabilities(&removed, new_target, &past_removed).map_err(|e| e.to_string())?)?;

    // addition
    let positions = s.site_positions().to_vec();
    let mut events = s.events().to_vec();
    let mut past_added = past.clone();
    let mut added = 0;
    for _ in 0..r.random_range(1..=3) {
        let site = r.random_range(0..3);
        let d: f64 = positions[site]
            .iter()
            .zip(&tp.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d == 0.0 {
            continue;
        }
        let t = tp.t + r.random_range(-0.99..0.99) * d;
        let k = random_kraus(&mut r, s.dims().dim(site));
        past_added.insert(events.len(), r.random_range(0..k.len()));
        events.push(event_at(&positions, site, t, k));
        added += 1;
    }
    let grown = rebuild(&s, events);
    for i in n..grown.events().len() {
        assert_eq!(relate(&grown.events()[i].point, &tp), CausalRelation::Spacelike);
    }
    check("addition", event_probabilities(&grown, target, &past_added).map_err(|e| e.to_string())?)?;

    // re-assignment of operators and recorded outcomes
    let mut events = s.events().to_vec();
    let mut past_reassigned = past.clone();
    for &i in &spacelike {
        let k = random_kraus(&mut r, s.dims().dim(events[i].site));
        past_reassigned.insert(i, r.random_range(0..k.len()));
        events[i].kraus = Arc::new(k);
    }
    let reassigned = rebuild(&s, events);
    check(
        "re-assignment",
        event_probabilities(&reassigned, target, &past_reassigned).map_err(|e| e.to_string())?,
    )?;
    Ok(spacelike.len() + added)
}

/// One random totally ordered scenario: returns the largest per-entry gap
/// between the causal and standard distributions, and between the causal
/// distribution and the textbook oracle.
pub fn chain_equivalence_case(seed: u64) -> (f64, f64) {
    use causal_qt::engine::{causal_distribution, is_causal_chain, standard_distribution};

    let mut r = rng(seed);
    let sites = r.random_range(2..=3);
    let n = r.random_range(1..=4);
    let s = random_chain(&mut r, sites, 3, n);
    assert!(is_causal_chain(&s));
    let causal = causal_distribution(&s).unwrap();
    let standard = standard_distribution(&s).unwrap();
    let psi = match s.initial() {
        InitialState::Pure(p) => p.amplitudes().to_vec(),
        InitialState::Mixture(_) => unreachable!(),
    };
    let steps: Vec<(usize, &KrausSet)> = s.events().iter().map(|e| (e.site, &*e.kraus)).collect();
    let oracle = oracle_joint(&psi, s.dims().as_slice(), &steps);
    (
        dist_max_diff(&causal.entries, &standard.entries),
        dist_max_diff(&causal.entries, &oracle),
    )
}
