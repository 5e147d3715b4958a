//! Dörfler marking: find a small set `ℳ` of indices with
//! `Σ_{τ∈ℳ} η_τ² ≥ θ Σ_τ η_τ²`.

use crate::error::MarkError;
use crate::estimate::LocalIndicators;
use crate::mesh::{ElementSet, Mesh};
use serde::{Deserialize, Serialize};

/// Relative slack in the Dörfler inequality, absorbing summation-order
/// rounding.
pub const DOERFLER_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkingStrategy {
    /// Sort and take the shortest prefix: minimal cardinality.
    Greedy,
    /// Bucket by powers of two: linear time, at most twice the minimal
    /// cardinality.
    Binning,
}

impl MarkingStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkingStrategy::Greedy => "greedy",
            MarkingStrategy::Binning => "binning",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedSet {
    /// Positions into the indicator list, ascending.
    pub indices: Vec<usize>,
    pub theta: f64,
    pub strategy: MarkingStrategy,
    /// `Σ_ℳ / Σ_total`, or 0 when the total vanishes.
    pub achieved: f64,
}

impl MarkedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_theta(theta: f64) -> Result<(), MarkError> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(MarkError::InvalidTheta(theta))
    }
}

fn target(values: &[f64], theta: f64) -> (f64, f64) {
    let total: f64 = values.iter().sum();
    (total, theta * total - DOERFLER_SLACK * total)
}

fn finish(mut indices: Vec<usize>, values: &[f64], theta: f64, strategy: MarkingStrategy, total: f64) -> MarkedSet {
    indices.sort_unstable();
    let sum: f64 = indices.iter().map(|&i| values[i]).sum();
    MarkedSet {
        indices,
        theta,
        strategy,
        achieved: if total > 0.0 { sum / total } else { 0.0 },
    }
}

/// Minimal-cardinality Dörfler set of squared contributions `values`; ties
/// are broken by ascending position.
pub fn greedy(values: &[f64], theta: f64) -> Result<MarkedSet, MarkError> {
    check_theta(theta)?;
    let (total, goal) = target(values, theta);
    if !(total > 0.0) {
        return Ok(finish(Vec::new(), values, theta, MarkingStrategy::Greedy, total));
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut sum = 0.0;
    let mut chosen = Vec::new();
    for i in order {
        if sum >= goal {
            break;
        }
        sum += values[i];
        chosen.push(i);
    }
    Ok(finish(chosen, values, theta, MarkingStrategy::Greedy, total))
}

/// Bucket of a positive value: its binary exponent, so that values within
/// one bucket differ by less than a factor two.
fn exponent(v: f64) -> i32 {
    ((v.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

/// Dörfler set from power-of-two buckets: whole buckets in descending order,
/// then the last bucket in ascending position until the bulk criterion holds.
/// Every bucket taken before the last one holds values at least half of any
/// value outside, which bounds the result by twice the minimal cardinality.
pub fn binning(values: &[f64], theta: f64) -> Result<MarkedSet, MarkError> {
    check_theta(theta)?;
    let (total, goal) = target(values, theta);
    if !(total > 0.0) {
        return Ok(finish(Vec::new(), values, theta, MarkingStrategy::Binning, total));
    }
    let top = values.iter().filter(|&&v| v > 0.0).map(|&v| exponent(v)).max().unwrap();
    let n_buckets = 2100usize;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
    let mut sums = vec![0.0; n_buckets];
    for (i, &v) in values.iter().enumerate() {
        if v > 0.0 {
            let b = ((top - exponent(v)) as usize).min(n_buckets - 1);
            buckets[b].push(i);
            sums[b] += v;
        }
    }
    let mut sum = 0.0;
    let mut chosen = Vec::new();
    for (bucket, bucket_sum) in buckets.iter().zip(&sums) {
        if sum >= goal {
            break;
        }
        if sum + bucket_sum < goal {
            chosen.extend_from_slice(bucket);
            sum += bucket_sum;
            continue;
        }
        for &i in bucket {
            if sum >= goal {
                break;
            }
            sum += values[i];
            chosen.push(i);
        }
    }
    Ok(finish(chosen, values, theta, MarkingStrategy::Binning, total))
}

pub fn mark(strategy: MarkingStrategy, ind: &LocalIndicators, theta: f64) -> Result<MarkedSet, MarkError> {
    let values = ind.squared_values();
    match strategy {
        MarkingStrategy::Greedy => greedy(&values, theta),
        MarkingStrategy::Binning => binning(&values, theta),
    }
}

pub fn mark_greedy(ind: &LocalIndicators, theta: f64) -> Result<MarkedSet, MarkError> {
    mark(MarkingStrategy::Greedy, ind, theta)
}

pub fn mark_binning(ind: &LocalIndicators, theta: f64) -> Result<MarkedSet, MarkError> {
    mark(MarkingStrategy::Binning, ind, theta)
}

/// Union of the support elements of the marked indices.
pub fn elements_to_refine(mesh: &Mesh, marked: &MarkedSet, ind: &LocalIndicators) -> Result<ElementSet, MarkError> {
    let mut out = Vec::new();
    for &i in &marked.indices {
        let entry = ind.entries.get(i).ok_or(MarkError::DanglingIndex(i))?;
        for &t in entry.support() {
            if t as usize >= mesh.num_triangles() {
                return Err(MarkError::DanglingIndex(i));
            }
            out.push(t);
        }
    }
    Ok(out.into_iter().collect())
}

/// Minimal Dörfler cardinality by exhaustive search over all subsets.
pub fn brute_force_doerfler(values: &[f64], theta: f64) -> Result<usize, MarkError> {
    check_theta(theta)?;
    const MAX: usize = 20;
    if values.len() > MAX {
        return Err(MarkError::TooLarge { max: MAX, got: values.len() });
    }
    let (total, goal) = target(values, theta);
    if !(total > 0.0) {
        return Ok(0);
    }
    // Subset sums by adding the lowest member to the sum of the others.
    let n = values.len();
    let mut sums = vec![0.0f64; 1 << n];
    let mut best = n;
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + values[low];
        let size = mask.count_ones() as usize;
        if size < best && sums[mask] >= goal {
            best = size;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{EstimatorKind, Indicator};
    use crate::mesh::unit_square;

    #[test]
    fn greedy_examples() {
        let v = [4.0, 1.0, 1.0, 1.0, 1.0];
        let m = greedy(&v, 0.5).unwrap();
        assert_eq!(m.indices, vec![0]);
        assert_eq!(brute_force_doerfler(&v, 0.5).unwrap(), 1);
        assert_eq!(greedy(&[1.0; 10], 0.3).unwrap().len(), 3);
        let m = greedy(&[3.0, 0.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(m.indices, vec![0, 2, 3]);
        assert!(greedy(&[0.0; 4], 0.5).unwrap().is_empty());
        assert_eq!(greedy(&[1.0], 0.0).unwrap_err(), MarkError::InvalidTheta(0.0));
    }

    #[test]
    fn ties_prefer_lower_positions() {
        let m = greedy(&[1.0, 2.0, 2.0, 2.0], 0.4).unwrap();
        assert_eq!(m.indices, vec![1, 2]);
    }

    #[test]
    fn binning_examples() {
        assert_eq!(binning(&[4.0, 1.0, 1.0, 1.0, 1.0], 0.5).unwrap().indices, vec![0]);
        assert_eq!(binning(&[0.0, 7.0, 0.0], 0.9).unwrap().indices, vec![1]);
        let v = [1.0, 1.5, 1.2, 1.9, 1.1, 1.3];
        let b = binning(&v, 0.1).unwrap();
        let g = greedy(&v, 0.1).unwrap();
        assert!(b.len() <= 2 * g.len());
        assert!(b.achieved >= 0.1 - 1e-12);
    }

    #[test]
    fn brute_force_edge_cases() {
        assert_eq!(brute_force_doerfler(&[0.0; 5], 0.5).unwrap(), 0);
        assert_eq!(brute_force_doerfler(&[1.0, 2.0, 3.0], 1.0).unwrap(), 3);
        assert!(brute_force_doerfler(&[1.0; 21], 0.5).is_err());
    }

    #[test]
    fn facet_indices_map_to_both_neighbours() {
        let m = unit_square().uniform_refine();
        let e = (0..m.num_edges()).find(|&e| !m.is_boundary_edge(e)).unwrap();
        let (t1, t2) = m.edge_triangles(e);
        let ind = LocalIndicators {
            mesh_id: m.id(),
            estimator: EstimatorKind::Zz,
            entries: vec![
                Indicator::element(t1, 1.0),
                Indicator::facet(e as u32, 1.0, t1, t2),
            ],
        };
        let marked = MarkedSet {
            indices: vec![0, 1],
            theta: 1.0,
            strategy: MarkingStrategy::Greedy,
            achieved: 1.0,
        };
        let set = elements_to_refine(&m, &marked, &ind).unwrap();
        assert_eq!(set, ElementSet::from_iter([t1, t2.unwrap()]));
        let bad = MarkedSet { indices: vec![7], ..marked };
        assert_eq!(elements_to_refine(&m, &bad, &ind).unwrap_err(), MarkError::DanglingIndex(7));
    }
}
