//! Partitions adapted to the slope changes of a concave function.
//!
//! Starting from a uniform grid of `r` cells of width `L / r`, every kink with
//! slope drop at least `M / r` is added together with its neighbours at
//! distance `delta = L / r^2`; then each cell over which the slope still falls
//! by more than `2M / r` is split where the drop reaches that level (again with
//! `delta` neighbours); cells whose midpoint is a kink are split so that both
//! new midpoints are smooth. Points marked red are left ends of cells of
//! length at most `2 delta`. A final sweep thins the points so that every gap
//! is at least `delta / 2`.

use serde::{Deserialize, Serialize};

use super::{is_kink, transition, LogConcave};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub points: Vec<f64>,
    pub red_flags: Vec<bool>,
}

impl Partition {
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a < b) || m == 0 {
            return Err(Error::invalid("partition", format!("cannot split [{a}, {b}] into {m} cells")));
        }
        let points = (0..=m).map(|i| grid_point(a, b, i, m)).collect();
        Ok(Self {
            points,
            red_flags: vec![false; m + 1],
        })
    }

    /// Builds a partition from arbitrary points, which must be strictly increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("partition", "points must be strictly increasing, at least 2"));
        }
        let red_flags = vec![false; points.len()];
        Ok(Self { points, red_flags })
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn min_gap(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    /// Largest gap to the right of a red point; zero if none is red.
    pub fn max_red_gap(&self) -> f64 {
        (0..self.cells())
            .filter(|&i| self.red_flags[i])
            .map(|i| self.points[i + 1] - self.points[i])
            .fold(0.0, f64::max)
    }
}

fn grid_point(a: f64, b: f64, i: usize, m: usize) -> f64 {
    if i == m {
        b
    } else {
        a + (b - a) * i as f64 / m as f64
    }
}

/// Sorted point set with colours, merged on insertion.
struct Points(Vec<(f64, bool)>);

impl Points {
    fn insert(&mut self, x: f64, red: bool) {
        match self.0.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(i) => self.0[i].1 |= red,
            Err(i) => self.0.insert(i, (x, red)),
        }
    }
}

struct Setup {
    a: f64,
    b: f64,
    r: usize,
    delta: f64,
    drop: f64,
    kinks: Vec<f64>,
}

fn setup(w: &dyn LogConcave, a: f64, b: f64, r: usize) -> Result<Setup> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid("interval", format!("[{a}, {b}] is not a proper interval")));
    }
    if r == 0 {
        return Err(Error::invalid("r", "must be at least 1"));
    }
    let drop = w.right_derivative(a) - w.left_derivative(b);
    if !drop.is_finite() {
        return Err(Error::Numeric(format!(
            "one-sided derivatives at the ends of [{a}, {b}] are not finite; shrink the interval"
        )));
    }
    if drop < 0.0 {
        return Err(Error::invalid(
            "concavity",
            format!("slope rises by {} across [{a}, {b}]", -drop),
        ));
    }
    let width = b - a;
    let kinks = w.kinks().into_iter().filter(|&k| k > a && k < b).collect();
    Ok(Setup {
        a,
        b,
        r,
        delta: width / (r * r) as f64,
        drop,
        kinks,
    })
}

impl Setup {
    fn inside(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Adds `x` and its `delta` neighbours, colouring `x` and `x - delta`.
    fn add_with_neighbours(&self, pts: &mut Points, x: f64) {
        pts.insert(x, true);
        let left = x - self.delta;
        if self.inside(left) {
            pts.insert(left, true);
        }
        let right = x + self.delta;
        if self.inside(right) {
            pts.insert(right, false);
        }
    }

    fn candidate(&self, w: &dyn LogConcave) -> Points {
        let (a, b, r) = (self.a, self.b, self.r);
        let mut pts = Points((0..=r).map(|i| (grid_point(a, b, i, r), false)).collect());
        if self.drop <= 0.0 {
            return pts;
        }
        let unit = self.drop / r as f64;

        for &k in &self.kinks {
            let jump = w.left_derivative(k) - w.right_derivative(k);
            if jump > 0.0 && jump >= unit {
                self.add_with_neighbours(&mut pts, k);
            }
        }

        let base: Vec<f64> = pts.0.iter().map(|p| p.0).collect();
        for cell in base.windows(2) {
            let (mut left, right) = (cell[0], cell[1]);
            for _ in 0..4 * r + 8 {
                let start = w.right_derivative(left);
                if !(start - w.left_derivative(right) > 2.0 * unit) {
                    break;
                }
                let y = transition(|x| start - w.left_derivative(x) > 2.0 * unit, left, right);
                // `transition` returns the first point past the level; step back
                // to the last point where the drop is still within it.
                let y = if start - w.left_derivative(y) > 2.0 * unit {
                    y.next_down()
                } else {
                    y
                };
                if !(y > left && y < right) {
                    break;
                }
                self.add_with_neighbours(&mut pts, y);
                left = y;
            }
        }

        let mut split = Points(Vec::with_capacity(pts.0.len() + 8));
        for (i, &(x, red)) in pts.0.iter().enumerate() {
            split.0.push((x, red));
            if let Some(&(next, _)) = pts.0.get(i + 1) {
                if is_kink(&self.kinks, 0.5 * (x + next)) {
                    if let Some(cut) = self.smooth_split(x, next) {
                        split.0.push((cut, false));
                    }
                }
            }
        }
        split
    }

    /// A cut of `[u, v]` leaving both parts at least a third of the cell with
    /// smooth midpoints.
    fn smooth_split(&self, u: f64, v: f64) -> Option<f64> {
        let len = v - u;
        [0.4, 0.6, 0.45, 0.55, 0.35, 0.65, 0.5]
            .iter()
            .map(|t| u + t * len)
            .find(|&c| !is_kink(&self.kinks, 0.5 * (u + c)) && !is_kink(&self.kinks, 0.5 * (c + v)))
    }

    /// `eps` at half its allowed range, moved until both new midpoints are smooth.
    fn offset(&self, limit: f64, smooth: impl Fn(f64) -> bool) -> f64 {
        [0.5, 0.25, 0.75, 0.375, 0.625]
            .iter()
            .map(|t| t * limit)
            .find(|&e| smooth(e))
            .unwrap_or(0.5 * limit)
    }

    fn thin(&self, mut pts: Vec<(f64, bool)>) -> Vec<(f64, bool)> {
        let (b, delta) = (self.b, self.delta);
        let mut cur = 0usize;
        loop {
            let x = pts[cur].0;
            if b - x <= delta {
                let last = pts.len() - 1;
                if cur < last {
                    pts.drain(cur + 1..last);
                }
                break;
            }
            let y = pts
                .iter()
                .position(|p| p.0 > x + delta)
                .expect("the right end lies beyond x + delta");
            if y > cur + 1 {
                pts.drain(cur + 1..y);
                let yv = pts[cur + 1].0;
                let limit = delta.min(yv - x - delta);
                let e = self.offset(limit, |e| {
                    let s = x + delta + e;
                    !is_kink(&self.kinks, 0.5 * (s + yv)) && !is_kink(&self.kinks, 0.5 * (s + x))
                });
                pts[cur].1 = true;
                pts.insert(cur + 1, (x + delta + e, false));
            }
            cur += 1;
        }

        // Step 4: the last interior point sits within `delta` of `b`.
        if pts.len() > 2 && pts[cur].0 != b {
            let y = pts[cur - 1].0;
            pts.remove(cur);
            if b - y > 2.0 * delta {
                let limit = (b - y - 2.0 * delta).min(delta);
                let e = self.offset(limit, |e| !is_kink(&self.kinks, 0.5 * (y + b - delta - e)));
                pts.insert(cur, (b - delta - e, true));
            } else {
                pts[cur - 1].1 = true;
                pts.insert(cur, ((y + b) / 2.0, true));
            }
        } else if pts[cur].0 != b {
            // Only `a` precedes: the interval itself is shorter than delta.
            pts.truncate(cur + 1);
            pts.push((b, false));
        }
        pts
    }
}

fn into_partition(pts: Vec<(f64, bool)>) -> Partition {
    let (points, mut red_flags): (Vec<f64>, Vec<bool>) = pts.into_iter().unzip();
    // The right end never starts a cell.
    *red_flags.last_mut().unwrap() = false;
    Partition { points, red_flags }
}

/// The refined point set before thinning: uniform grid, kinks, slope-drop
/// points and midpoint splits.
pub fn candidate_partition(w: &dyn LogConcave, a: f64, b: f64, r: usize) -> Result<Partition> {
    let s = setup(w, a, b, r)?;
    Ok(into_partition(s.candidate(w).0))
}

/// A partition of `[a, b]` with at most `14 r + 1` cells, all gaps at least
/// `(b - a) / (2 r^2)`, on which the midpoint interpolant of `w` is within
/// `O(M (b - a) / m^2)` of `w`, where `M = w'_+(a) - w'_-(b)`.
pub fn build_partition(w: &dyn LogConcave, a: f64, b: f64, r: usize) -> Result<Partition> {
    let s = setup(w, a, b, r)?;
    let pts = s.candidate(w).0;
    Ok(into_partition(s.thin(pts)))
}
