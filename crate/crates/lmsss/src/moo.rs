//! Pareto machinery for the two-objective minimization problem: dominance,
//! fast non-dominated sorting, crowding distance, exact 2-D hypervolume,
//! inverted generational distance and reference-front merging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in objective space: feature ratio and classification loss, both
/// minimized, both in `[0,1]` for well-formed solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Selected features divided by total features.
    pub feature_ratio: f64,
    /// Classification loss (1 - F1 or error rate, per configuration).
    pub loss: f64,
}

impl ObjectiveVector {
    pub fn new(feature_ratio: f64, loss: f64) -> Self {
        ObjectiveVector { feature_ratio, loss }
    }

    fn coords(&self) -> [f64; 2] {
        [self.feature_ratio, self.loss]
    }

    /// Exact equality of both coordinates (objectives are ratios of counts,
    /// so exact comparison is meaningful).
    pub fn same_point(&self, other: &ObjectiveVector) -> bool {
        self.feature_ratio == other.feature_ratio && self.loss == other.loss
    }
}

/// Pareto dominance for minimization: `a` dominates `b` when it is no worse
/// in every objective and strictly better in at least one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (a, b) = (a.coords(), b.coords());
    let no_worse = a.iter().zip(&b).all(|(x, y)| x <= y);
    let better = a.iter().zip(&b).any(|(x, y)| x < y);
    no_worse && better
}

/// A set of mutually non-dominated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    points: Vec<ObjectiveVector>,
}

impl Front {
    /// Builds the strict front of a raw point set: deduplicate exactly
    /// identical points, then keep the non-dominated ones.
    pub fn from_points(points: &[ObjectiveVector]) -> Front {
        let mut unique: Vec<ObjectiveVector> = Vec::new();
        for p in points {
            if !unique.iter().any(|u| u.same_point(p)) {
                unique.push(*p);
            }
        }
        let survivors: Vec<ObjectiveVector> = unique
            .iter()
            .filter(|p| !unique.iter().any(|q| dominates(q, p)))
            .copied()
            .collect();
        Front { points: survivors }
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fast non-dominated sorting by dominance counting; rank 0 is the Pareto
/// front, rank k the non-dominated set once ranks below k are removed.
/// Returns the ranks as index lists; every input index appears exactly once.
pub fn non_dominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut ranks = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        ranks.push(std::mem::replace(&mut current, next));
    }
    ranks
}

/// NSGA-II crowding distance over one front.
///
/// Computed on the distinct objective vectors: per objective, the extreme
/// distinct vectors get infinity and interior ones accumulate
/// `(next - prev) / (max - min)`; a zero-range objective contributes 0.
/// Points that share an identical objective vector with another point all
/// receive 0, which both matches the zero-neighbor-gap reading and keeps the
/// output permutation-equivariant.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }

    // Index of each point's distinct vector, and that vector's multiplicity.
    let mut distinct: Vec<ObjectiveVector> = Vec::new();
    let mut vector_of: Vec<usize> = Vec::with_capacity(n);
    for p in front {
        match distinct.iter().position(|d| d.same_point(p)) {
            Some(k) => vector_of.push(k),
            None => {
                distinct.push(*p);
                vector_of.push(distinct.len() - 1);
            }
        }
    }
    let mut multiplicity = vec![0usize; distinct.len()];
    for &k in &vector_of {
        multiplicity[k] += 1;
    }

    let m = distinct.len();
    let mut distance = vec![0.0f64; m];
    if m <= 2 {
        distance.iter_mut().for_each(|d| *d = f64::INFINITY);
    } else {
        for objective in 0..2 {
            let value = |k: usize| distinct[k].coords()[objective];
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap().then(a.cmp(&b)));
            let range = value(order[m - 1]) - value(order[0]);
            distance[order[0]] = f64::INFINITY;
            distance[order[m - 1]] = f64::INFINITY;
            if range > 0.0 {
                for w in 1..m - 1 {
                    let k = order[w];
                    if distance[k].is_finite() {
                        distance[k] += (value(order[w + 1]) - value(order[w - 1])) / range;
                    }
                }
            }
        }
    }

    vector_of
        .iter()
        .map(|&k| if multiplicity[k] > 1 { 0.0 } else { distance[k] })
        .collect()
}

/// Exact hypervolume dominated by a 2-D front and bounded by `reference`:
/// the area of the union of boxes `[point, reference]`. Points that do not
/// strictly improve on the reference in both objectives contribute nothing.
pub fn hypervolume_2d(front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let mut points: Vec<ObjectiveVector> = front
        .iter()
        .filter(|p| p.feature_ratio < reference.feature_ratio && p.loss < reference.loss)
        .copied()
        .collect();
    if points.is_empty() {
        return 0.0;
    }
    // Sweep by ascending feature ratio; only strictly decreasing losses
    // extend the staircase.
    points.sort_by(|a, b| {
        a.feature_ratio
            .partial_cmp(&b.feature_ratio)
            .unwrap()
            .then(a.loss.partial_cmp(&b.loss).unwrap())
    });
    let mut area = 0.0;
    let mut best_loss = f64::INFINITY;
    let mut i = 0;
    while i < points.len() {
        let p = points[i];
        if p.loss < best_loss {
            // Width to the next point that improves the staircase, else to
            // the reference.
            let next_x = points[i + 1..]
                .iter()
                .find(|q| q.loss < p.loss)
                .map(|q| q.feature_ratio)
                .unwrap_or(reference.feature_ratio);
            area += (next_x - p.feature_ratio) * (reference.loss - p.loss);
            best_loss = p.loss;
        }
        i += 1;
    }
    area
}

/// Mean distance from each reference point to its nearest front point.
/// Lower is better; zero means the reference is covered exactly.
pub fn igd(front: &[ObjectiveVector], reference: &[ObjectiveVector]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("empty IGD reference front".into()));
    }
    if front.is_empty() {
        return Err(Error::InvalidArgument("empty front in IGD".into()));
    }
    let total: f64 = reference
        .iter()
        .map(|r| {
            front
                .iter()
                .map(|p| {
                    let dx = p.feature_ratio - r.feature_ratio;
                    let dy = p.loss - r.loss;
                    (dx * dx + dy * dy).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference.len() as f64)
}

/// [`igd`] that scores an empty front as infinitely far instead of erroring.
pub fn igd_or_infinity(front: &[ObjectiveVector], reference: &[ObjectiveVector]) -> Result<f64> {
    if front.is_empty() && !reference.is_empty() {
        return Ok(f64::INFINITY);
    }
    igd(front, reference)
}

/// Merges several point sets into the reference front used by IGD: union,
/// exact-equality deduplication, then the rank-0 set.
pub fn merge_reference_front(fronts: &[Vec<ObjectiveVector>]) -> Result<Front> {
    let union: Vec<ObjectiveVector> = fronts.iter().flatten().copied().collect();
    if union.is_empty() {
        return Err(Error::InvalidArgument("no points to merge into a reference front".into()));
    }
    Ok(Front::from_points(&union))
}
