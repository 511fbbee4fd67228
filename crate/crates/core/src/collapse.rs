//! Reduction-operator sets, initial states and collapse-delay models.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, PureState, SiteDims, SiteOperator, C64, ONE, ZERO};
use crate::rng;

/// Allowed deviation of `Σ A_j†A_j` from the identity (max entrywise modulus).
pub const TOL_COMPLETE: f64 = 1e-9;

/// A complete set of reduction operators on one site's internal space.
///
/// Outcome labels are the operator indices `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<Matrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<Matrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::param("a Kraus set needs at least one operator"))?;
        let dim = first.dim();
        for (j, a) in ops.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::dim(format!(
                    "operator {j} is {0}x{0}, operator 0 is {dim}x{dim}",
                    a.dim()
                )));
            }
            if !a.is_finite() {
                return Err(Error::param(format!("operator {j} has non-finite entries")));
            }
        }
        let dev = completeness_deviation(&ops);
        if !(dev <= TOL_COMPLETE) {
            return Err(Error::param(format!(
                "operators are not complete: |sum A^dag A - I| = {dev:e} > {TOL_COMPLETE:e}"
            )));
        }
        Ok(KrausSet { ops })
    }

    /// The single-outcome set `{I}`; always yields outcome 0.
    pub fn trivial(dim: usize) -> Self {
        KrausSet {
            ops: vec![Matrix::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ops(&self) -> &[Matrix] {
        &self.ops
    }

    pub fn op(&self, outcome: usize) -> &Matrix {
        &self.ops[outcome]
    }

    pub fn on_site(&self, site: usize, outcome: usize) -> SiteOperator {
        SiteOperator::new(site, self.ops[outcome].clone())
    }
}

/// Max entrywise modulus of `Σ_j A_j†A_j − I`.
pub fn completeness_deviation(ops: &[Matrix]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let dim = first.dim();
    let sum = ops
        .iter()
        .map(|a| a.adjoint().matmul(a))
        .fold(Matrix::zeros(dim), |acc, m| acc.add(&m));
    sum.max_abs_diff(&Matrix::identity(dim))
}

fn qubit_basis(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(s, 0.0), C64::new(-c, 0.0)],
    ]
}

/// Projectors onto `cos(θ/2)|0⟩ + sin(θ/2)|1⟩` (outcome 0) and its orthogonal
/// complement (outcome 1). `θ = 0` is the computational basis.
pub fn projective_qubit(theta: f64) -> KrausSet {
    let b = qubit_basis(theta);
    let ops = b.iter().map(|v| Matrix::outer(v, v)).collect();
    KrausSet { ops }
}

/// `A_j = √((1−η)P_j + (η/2)I)` for the two `θ`-basis projectors.
///
/// Both operators have eigenvalues `√(1−η/2)` and `√(η/2)`, so neither has a
/// kernel.
pub fn softened_projectors(theta: f64, eta: f64) -> Result<KrausSet> {
    let b = qubit_basis(theta);
    softened_basis(&[b[0].to_vec(), b[1].to_vec()], eta)
}

/// Rank-one projectors onto an orthonormal basis of a `d`-dimensional site.
pub fn projective_basis(basis: &[Vec<C64>]) -> Result<KrausSet> {
    check_basis(basis)?;
    KrausSet::new(basis.iter().map(|v| Matrix::outer(v, v)).collect())
}

/// `A_j = √((1−η)P_j + (η/d)I)` for an orthonormal basis; reduces to
/// [`softened_projectors`] when `d = 2`.
pub fn softened_basis(basis: &[Vec<C64>], eta: f64) -> Result<KrausSet> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param(format!("eta must lie in (0, 1), got {eta}")));
    }
    check_basis(basis)?;
    let d = basis.len() as f64;
    let on = (1.0 - eta + eta / d).sqrt();
    let off = (eta / d).sqrt();
    let eye = Matrix::identity(basis.len());
    let ops = basis
        .iter()
        .map(|v| {
            let p = Matrix::outer(v, v);
            // on·P + off·(I − P)
            p.scale(C64::new(on - off, 0.0)).add(&eye.scale(C64::new(off, 0.0)))
        })
        .collect();
    KrausSet::new(ops)
}

fn check_basis(basis: &[Vec<C64>]) -> Result<()> {
    let d = basis.len();
    if d < 2 {
        return Err(Error::param("a measurement basis needs at least two vectors"));
    }
    for (i, u) in basis.iter().enumerate() {
        if u.len() != d {
            return Err(Error::dim(format!("basis vector {i} has length {}, expected {d}", u.len())));
        }
        for (j, v) in basis.iter().enumerate() {
            let ip: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let want = if i == j { ONE } else { ZERO };
            if (ip - want).norm() > TOL_COMPLETE {
                return Err(Error::param(format!("basis vectors {i} and {j} are not orthonormal")));
            }
        }
    }
    Ok(())
}

/// Two qubits in `ε|00⟩ + s|01⟩ − s|10⟩ + ε|11⟩` with `s = √(1−2ε²)/√2`.
///
/// `ε = 0` is the exact singlet.
pub fn perturbed_singlet(eps: f64) -> Result<PureState> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::param(format!("eps must lie in [0, 0.5), got {eps}")));
    }
    let s = (1.0 - 2.0 * eps * eps).sqrt() * FRAC_1_SQRT_2;
    let e = C64::new(eps, 0.0);
    PureState::new(
        SiteDims::qubits(2)?,
        vec![e, C64::new(s, 0.0), C64::new(-s, 0.0), e],
    )
}

/// Time between a particle entering a detector and the collapse it triggers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayModel {
    Deterministic { delta0: f64 },
    Exponential { rate: f64 },
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DelayModel::Deterministic { delta0 } if !(delta0.is_finite() && delta0 >= 0.0) => {
                Err(Error::param(format!("delta0 must be finite and >= 0, got {delta0}")))
            }
            DelayModel::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::param(format!("rate must be finite and > 0, got {rate}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DelayModel::Deterministic { delta0 } => delta0,
            DelayModel::Exponential { rate } => 1.0 / rate,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            DelayModel::Deterministic { delta0 } => {
                if x >= delta0 {
                    1.0
                } else {
                    0.0
                }
            }
            DelayModel::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }
}

/// Draws one delay from the caller's stream.
pub fn sample_delay<R: Rng + ?Sized>(model: &DelayModel, rng: &mut R) -> f64 {
    match *model {
        DelayModel::Deterministic { delta0 } => delta0,
        DelayModel::Exponential { rate } => Exp::new(rate)
            .expect("rate validated positive")
            .sample(rng),
    }
}

pub const WING_A: u64 = 0;
pub const WING_B: u64 = 1;

/// Monte Carlo estimate of `P(|δ_A − δ_B| < L)` with both wings using `model`.
pub fn spacelike_probability(
    model: &DelayModel,
    separation: f64,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    spacelike_probability_pair(model, model, separation, n_trials, seed)
}

/// As [`spacelike_probability`] with a separate delay model per wing.
/// Each wing draws from its own stream derived from `(seed, wing)`.
pub fn spacelike_probability_pair(
    model_a: &DelayModel,
    model_b: &DelayModel,
    separation: f64,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::param("n_trials must be positive"));
    }
    check_separation(separation)?;
    model_a.validate()?;
    model_b.validate()?;
    let mut rng_a = rng::stream(seed, &[WING_A]);
    let mut rng_b = rng::stream(seed, &[WING_B]);
    let hits = (0..n_trials)
        .filter(|_| {
            let da = sample_delay(model_a, &mut rng_a);
            let db = sample_delay(model_b, &mut rng_b);
            (da - db).abs() < separation
        })
        .count();
    Ok(hits as f64 / n_trials as f64)
}

pub(crate) fn check_separation(separation: f64) -> Result<()> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::param(format!(
            "wing separation must be finite and > 0, got {separation}"
        )));
    }
    Ok(())
}

/// Closed form of `P(|δ_A − δ_B| < L)` for independent wing delays.
pub fn spacelike_probability_exact(model_a: &DelayModel, model_b: &DelayModel, separation: f64) -> f64 {
    use DelayModel::*;
    match (*model_a, *model_b) {
        (Deterministic { delta0: a }, Deterministic { delta0: b }) => {
            if (a - b).abs() < separation {
                1.0
            } else {
                0.0
            }
        }
        (Deterministic { delta0 }, other @ Exponential { .. })
        | (other @ Exponential { .. }, Deterministic { delta0 }) => {
            other.cdf(delta0 + separation) - other.cdf((delta0 - separation).max(0.0))
        }
        (Exponential { rate: la }, Exponential { rate: lb }) => {
            // P(X − Y > L) = λ_b/(λ_a+λ_b)·e^{−λ_a L}, and symmetrically
            let tail = (lb * (-la * separation).exp() + la * (-lb * separation).exp()) / (la + lb);
            1.0 - tail
        }
    }
}
