//! Minkowski geometry with `c = 1`: time in seconds, distance in light-seconds.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub x: [f64; 3],
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: [f64; 3], t: f64) -> Self {
        SpacetimePoint { x, t }
    }

    /// A point on the x axis.
    pub fn on_line(x: f64, t: f64) -> Self {
        SpacetimePoint { x: [x, 0.0, 0.0], t }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|c| c.is_finite())
    }
}

/// How `P` sits relative to `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalRelation {
    /// `P` is in the closed past light cone of `Q`.
    Past,
    Future,
    Spacelike,
    Coincident,
}

impl CausalRelation {
    pub fn reversed(self) -> Self {
        match self {
            CausalRelation::Past => CausalRelation::Future,
            CausalRelation::Future => CausalRelation::Past,
            other => other,
        }
    }
}

/// `(t_Q − t_P)² − ‖x_Q − x_P‖²`.
pub fn interval_sq(p: &SpacetimePoint, q: &SpacetimePoint) -> f64 {
    let dt = q.t - p.t;
    let dx2: f64 = p.x.iter().zip(&q.x).map(|(a, b)| (b - a) * (b - a)).sum();
    dt * dt - dx2
}

pub fn spatial_distance(p: &SpacetimePoint, q: &SpacetimePoint) -> f64 {
    p.x.iter()
        .zip(&q.x)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// Lightlike separation counts as causal.
pub fn relate(p: &SpacetimePoint, q: &SpacetimePoint) -> CausalRelation {
    if p == q {
        return CausalRelation::Coincident;
    }
    let s = interval_sq(p, q);
    if s < 0.0 {
        CausalRelation::Spacelike
    } else if p.t < q.t {
        CausalRelation::Past
    } else if p.t > q.t {
        CausalRelation::Future
    } else {
        // equal times with s >= 0 forces equal positions; only non-finite input lands here
        CausalRelation::Coincident
    }
}

pub fn is_spacelike(p: &SpacetimePoint, q: &SpacetimePoint) -> bool {
    relate(p, q) == CausalRelation::Spacelike
}

/// Something that happens at a site and a spacetime point.
pub trait Located {
    fn point(&self) -> &SpacetimePoint;
    fn site(&self) -> usize;
}

/// Global processing order: coordinate time, ties broken by site index.
pub fn time_order<E: Located>(a: &E, b: &E) -> Ordering {
    a.point()
        .t
        .total_cmp(&b.point().t)
        .then(a.site().cmp(&b.site()))
}

/// Events in the closed past light cone of `p`, in time order.
pub fn past_cone_filter<'a, E: Located>(p: &SpacetimePoint, events: &'a [E]) -> Vec<&'a E> {
    let mut cone: Vec<&E> = events
        .iter()
        .filter(|e| relate(e.point(), p) == CausalRelation::Past)
        .collect();
    cone.sort_by(|a, b| time_order(*a, *b));
    cone
}
