use std::cmp::Ordering;

use super::{ControllerError, ObjectivePoint};

/// Nondominated subset of `points`, ordered by energy ascending.
///
/// `p` is dropped when some `q` has `quality >= p.quality` and
/// `energy <= p.energy` with one of them strict. Exact duplicates keep only
/// their first occurrence.
pub fn pareto_front(points: &[ObjectivePoint]) -> Result<Vec<ObjectivePoint>, ControllerError> {
    if points.is_empty() {
        return Err(ControllerError::EmptyPoints);
    }
    if let Some(p) = points.iter().find(|p| !(p.quality.is_finite() && p.energy.is_finite())) {
        return Err(ControllerError::NonFinitePoint(p.config.to_string()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    // energy ascending, quality descending, then input order
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.energy
            .partial_cmp(&pb.energy)
            .unwrap_or(Ordering::Equal)
            .then(pb.quality.partial_cmp(&pa.quality).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut front = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for i in order {
        if points[i].quality > best {
            best = points[i].quality;
            front.push(points[i]);
        }
    }
    Ok(front)
}
