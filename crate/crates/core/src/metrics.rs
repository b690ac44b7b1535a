//! Pareto archive, exact hypervolume, supported-point classification and the
//! brute-force reference front.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NrpInstance, Point, Solution};

/// Largest `n + m` accepted by [`brute_force_front`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("instance too large for enumeration: n + m = {0} exceeds {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// Added; carries how many archived points it evicted.
    Added(usize),
    Duplicate,
    Dominated,
}

/// Mutually non-dominated images with one solution each, ascending in f1
/// (hence descending in f2).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParetoArchive {
    entries: Vec<(Point, Solution)>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.entries.iter().map(|(p, _)| *p).collect()
    }

    pub fn entries(&self) -> &[(Point, Solution)] {
        &self.entries
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.entries.binary_search_by(|(q, _)| q.f1.cmp(&p.f1)).is_ok_and(|i| self.entries[i].0 == *p)
    }

    pub fn solution(&self, p: &Point) -> Option<&Solution> {
        let i = self.entries.binary_search_by(|(q, _)| q.f1.cmp(&p.f1)).ok()?;
        (self.entries[i].0 == *p).then(|| &self.entries[i].1)
    }

    /// Inserts unless an archived point weakly dominates `p`; evicts the
    /// points `p` dominates. The first solution seen for an image is kept.
    pub fn insert(&mut self, p: Point, sol: Solution) -> Insertion {
        let pos = self.entries.partition_point(|(q, _)| *q < p);
        if self.entries.get(pos).is_some_and(|(q, _)| *q == p) {
            return Insertion::Duplicate;
        }
        if pos > 0 && self.entries[pos - 1].0.f2 <= p.f2 {
            return Insertion::Dominated;
        }
        let end = pos + self.entries[pos..].iter().take_while(|(q, _)| q.f2 >= p.f2).count();
        let evicted = end - pos;
        self.entries.splice(pos..end, std::iter::once((p, sol)));
        Insertion::Added(evicted)
    }

    pub fn hypervolume(&self, nadir: Point) -> i128 {
        sweep(&self.points(), nadir)
    }
}

/// Non-dominated subset, deduplicated, ascending in f1.
pub fn pareto_filter(points: &[Point]) -> Vec<Point> {
    let mut sorted = points.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out: Vec<Point> = Vec::new();
    for p in sorted {
        // sorted by (f1, f2): p survives iff it beats the best f2 so far
        if out.last().is_none_or(|q| p.f2 < q.f2) {
            out.push(p);
        }
    }
    out
}

fn sweep(front: &[Point], nadir: Point) -> i128 {
    let mut total = 0i128;
    for (i, p) in front.iter().enumerate() {
        let right = front.get(i + 1).map_or(nadir.f1, |q| q.f1.min(nadir.f1));
        let width = (right - p.f1).max(0) as i128;
        let height = (nadir.f2 - p.f2).max(0) as i128;
        total += width * height;
    }
    total
}

/// Area dominated by `points` and bounded by `nadir`. Points beyond the
/// nadir in either coordinate contribute nothing.
pub fn hypervolume(points: &[Point], nadir: Point) -> i128 {
    sweep(&pareto_filter(points), nadir)
}

fn cross(o: &Point, a: &Point, b: &Point) -> i128 {
    let (ax, ay) = ((a.f1 - o.f1) as i128, (a.f2 - o.f2) as i128);
    let (bx, by) = ((b.f1 - o.f1) as i128, (b.f2 - o.f2) as i128);
    ax * by - ay * bx
}

/// Flags the points of a front that lie on its lower-left convex hull,
/// including points in the middle of a hull edge. `front` must be a
/// non-dominated set; the flags follow ascending f1 order of `front` as
/// given after sorting, which is the archive order.
pub fn classify_supported(front: &[Point]) -> Vec<bool> {
    let pts = pareto_filter(front);
    debug_assert_eq!(pts.len(), front.len(), "front must be non-dominated");
    let mut hull: Vec<Point> = Vec::new();
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let mut k = 0;
    pts.iter()
        .map(|p| {
            while k + 1 < hull.len() && hull[k + 1].f1 < p.f1 {
                k += 1;
            }
            match hull.get(k + 1) {
                Some(next) => cross(&hull[k], next, p) == 0,
                None => hull[k] == *p,
            }
        })
        .collect()
}

/// The supported subset of a front.
pub fn supported_points(front: &[Point]) -> Vec<Point> {
    let pts = pareto_filter(front);
    classify_supported(&pts).into_iter().zip(pts).filter(|(s, _)| *s).map(|(_, p)| p).collect()
}

/// The exact front of a small instance: every prerequisite-closed
/// requirement set, with every stakeholder whose requests it covers.
pub fn brute_force_front(inst: &NrpInstance) -> Result<ParetoArchive, MetricsError> {
    let n = inst.n_requirements();
    let m = inst.n_stakeholders();
    if n + m > BRUTE_FORCE_LIMIT {
        return Err(MetricsError::TooLarge(n + m));
    }
    let mut prereq = vec![0u32; n];
    for &(i, j) in inst.precedence() {
        prereq[j - 1] |= 1 << (i - 1);
    }
    let wants: Vec<u32> =
        inst.requests().iter().map(|ids| ids.iter().fold(0u32, |acc, &i| acc | 1 << (i - 1))).collect();

    // best (f1, mask) per reachable cost keeps the enumeration allocation-free
    let mut best: Vec<(Point, u32)> = Vec::new();
    for mask in 0u32..1 << n {
        let closed = (0..n).all(|j| mask >> j & 1 == 0 || prereq[j] & !mask == 0);
        if !closed {
            continue;
        }
        let cost: i64 = (0..n).filter(|&j| mask >> j & 1 == 1).map(|j| inst.costs()[j]).sum();
        let sat: i64 = (0..m).filter(|&k| wants[k] & !mask == 0).map(|k| inst.weights()[k]).sum();
        best.push((Point::new(-sat, cost), mask));
    }
    best.sort_by_key(|(p, mask)| (*p, *mask));
    let mut archive = ParetoArchive::new();
    for (p, mask) in best {
        let r: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
        let s: Vec<bool> = (0..m).map(|k| wants[k] & !mask == 0).collect();
        archive.insert(p, Solution { r, s });
    }
    Ok(archive)
}

/// Running hypervolume against a fixed reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvTracker {
    pub nadir: Point,
    pub current: i128,
    pub total: Option<i128>,
}

impl HvTracker {
    pub fn new(nadir: Point, total: Option<i128>) -> Self {
        HvTracker { nadir, current: 0, total }
    }

    pub fn update(&mut self, archive: &ParetoArchive) -> i128 {
        self.current = archive.hypervolume(self.nadir);
        self.current
    }

    pub fn fraction(&self) -> Option<f64> {
        self.total.map(|t| if t == 0 { 1.0 } else { self.current as f64 / t as f64 })
    }

    /// Percentage of the total with three decimals, exact rounding.
    pub fn percent(&self) -> Option<String> {
        self.total.map(|t| percent_string(self.current, t, 3))
    }
}

/// `100 · num / den` rendered with `decimals` digits, rounded half up.
/// A zero denominator reads as 100%.
pub fn percent_string(num: i128, den: i128, decimals: u32) -> String {
    let unit = 10i128.pow(decimals);
    let scaled = if den == 0 { 100 * unit } else { (2 * num * 100 * unit + den) / (2 * den) };
    if decimals == 0 {
        format!("{scaled}")
    } else {
        format!("{}.{:0width$}", scaled / unit, scaled % unit, width = decimals as usize)
    }
}
