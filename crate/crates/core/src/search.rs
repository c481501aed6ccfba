//! Deterministic derivative-free global maximization over a box.
//!
//! The global phase is DIRECT-style rectangle subdivision: the unit cube is
//! split into thirds along its longest sides, and each round divides every
//! rectangle that is potentially optimal for some Lipschitz constant (lower
//! right convex hull of value against size). The remaining budget goes to a
//! compass search around the incumbent. Dimensions may be restricted to a
//! lattice (`lower + k * step`); points are snapped before evaluation and a
//! cache keeps snapped duplicates from spending budget.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// One search coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    pub lower: f64,
    pub upper: f64,
    /// Restricts values to `lower + k * step`.
    pub step: Option<f64>,
}

impl Dimension {
    pub fn continuous(lower: f64, upper: f64) -> Self {
        Dimension {
            lower,
            upper,
            step: None,
        }
    }

    pub fn lattice(lower: f64, upper: f64, step: f64) -> Self {
        Dimension {
            lower,
            upper,
            step: Some(step),
        }
    }

    pub fn pinned(value: f64) -> Self {
        Dimension::continuous(value, value)
    }

    /// Clamps into the box and snaps to the lattice.
    pub fn coerce(&self, v: f64) -> f64 {
        let v = v.clamp(self.lower, self.upper);
        match self.step {
            Some(step) => {
                let k = math::round((v - self.lower) / step);
                let mut snapped = self.lower + k * step;
                if snapped > self.upper {
                    snapped -= step;
                }
                snapped.max(self.lower)
            }
            None => v,
        }
    }

    fn lattice_points(&self) -> Option<usize> {
        self.step
            .map(|s| math::floor((self.upper - self.lower) / s + 1e-9) as usize + 1)
    }

    fn is_free(&self) -> bool {
        match self.lattice_points() {
            Some(k) => k > 1,
            None => self.upper > self.lower,
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best value seen up to and including this evaluation.
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

struct Evaluator<'d, F> {
    objective: F,
    dims: &'d [Dimension],
    free: Vec<usize>,
    cache: BTreeMap<Vec<u64>, f64>,
    limit: usize,
    trace: Vec<TraceEntry>,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Evaluator<'_, F> {
    fn to_box(&self, unit: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.dims.iter().map(|d| d.coerce(d.lower)).collect();
        for (k, &d) in self.free.iter().enumerate() {
            let dim = &self.dims[d];
            x[d] = dim.coerce(dim.lower + unit[k] * (dim.upper - dim.lower));
        }
        x
    }

    fn to_unit(&self, point: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&d| {
                let dim = &self.dims[d];
                ((dim.coerce(point[d]) - dim.lower) / (dim.upper - dim.lower)).clamp(0.0, 1.0)
            })
            .collect()
    }

    fn exhausted(&self) -> bool {
        self.trace.len() >= self.limit
    }

    /// Evaluates a box point; `Ok(None)` once the budget is spent.
    fn eval_box(&mut self, raw: &[f64]) -> Result<Option<f64>> {
        let x: Vec<f64> = raw.iter().zip(self.dims).map(|(&v, d)| d.coerce(v)).collect();
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(&v) = self.cache.get(&key) {
            return Ok(Some(v));
        }
        if self.exhausted() {
            return Ok(None);
        }
        let value = (self.objective)(&x)?;
        if !value.is_finite() {
            return Err(Error::InvalidParams(alloc::format!(
                "objective returned {value}"
            )));
        }
        self.cache.insert(key, value);
        if self.best.as_ref().map_or(true, |(_, b)| value > *b) {
            self.best = Some((x.clone(), value));
        }
        let best_so_far = self.best.as_ref().map(|(_, b)| *b).unwrap_or(value);
        self.trace.push(TraceEntry {
            point: x,
            value,
            best_so_far,
        });
        Ok(Some(value))
    }

    fn eval_unit(&mut self, unit: &[f64]) -> Result<Option<f64>> {
        let x = self.to_box(unit);
        self.eval_box(&x)
    }
}

#[derive(Debug, Clone)]
struct Rect {
    center: Vec<f64>,
    levels: Vec<u32>,
    value: f64,
}

impl Rect {
    fn half_diagonal(&self) -> f64 {
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        0.5 * math::sqrt(sorted.iter().map(|&l| math::powi(3.0, -2 * l as i32)).sum())
    }
}

/// Maximizes `objective` over `dims` with at most `budget` evaluations.
///
/// `seeds` are evaluated first (snapped into the box). When every free
/// dimension is a lattice and the full grid fits in the budget, the grid is
/// enumerated exhaustively instead.
pub fn global_search<F>(
    objective: F,
    dims: &[Dimension],
    seeds: &[Vec<f64>],
    budget: usize,
) -> Result<SearchResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    for (k, d) in dims.iter().enumerate() {
        let step_ok = d.step.map_or(true, |s| s.is_finite() && s > 0.0);
        if !(d.lower.is_finite() && d.upper.is_finite() && d.lower <= d.upper && step_ok) {
            return Err(Error::EmptyBox(k));
        }
    }
    let free: Vec<usize> = (0..dims.len()).filter(|&k| dims[k].is_free()).collect();
    let required = free.len() + 1;
    if budget < required {
        return Err(Error::BudgetTooSmall { budget, required });
    }
    for s in seeds {
        if s.len() != dims.len() {
            return Err(Error::InvalidParams("seed has wrong dimension".into()));
        }
    }

    let mut ev = Evaluator {
        objective,
        dims,
        free,
        cache: BTreeMap::new(),
        limit: budget,
        trace: Vec::new(),
        best: None,
    };
    for s in seeds {
        ev.eval_box(s)?;
    }

    let grid: Option<usize> = ev.free.iter().try_fold(1usize, |acc, &d| {
        dims[d].lattice_points().and_then(|k| acc.checked_mul(k))
    });
    match grid {
        Some(size) if size <= budget => enumerate_grid(&mut ev)?,
        _ => {
            // Two thirds of the budget go to local refinement; if that
            // converges early, the rest alternates with the global phase.
            let reserve = (budget * 2 / 3).max(2 * ev.free.len()).min(budget - ev.trace.len().min(budget));
            let mut rects = Vec::new();
            ev.limit = budget - reserve;
            direct(&mut ev, &mut rects)?;
            loop {
                let before = ev.trace.len();
                ev.limit = budget;
                compass(&mut ev)?;
                if ev.exhausted() {
                    break;
                }
                ev.limit = ev.trace.len() + ((budget - ev.trace.len()) / 2).max(1);
                direct(&mut ev, &mut rects)?;
                if ev.trace.len() == before {
                    break;
                }
            }
        }
    }

    let (best_point, best_value) = match ev.best.take() {
        Some(b) => b,
        None => {
            // Only possible when every evaluation was a cache hit, i.e. never.
            let x = ev.to_box(&vec![0.5; ev.free.len()]);
            let v = ev.eval_box(&x)?.unwrap_or(f64::NEG_INFINITY);
            (x, v)
        }
    };
    Ok(SearchResult {
        best_point,
        best_value,
        evaluations: ev.trace.len(),
        trace: ev.trace,
    })
}

fn enumerate_grid<F: FnMut(&[f64]) -> Result<f64>>(ev: &mut Evaluator<'_, F>) -> Result<()> {
    let counts: Vec<usize> = ev.free.iter().map(|&d| ev.dims[d].lattice_points().unwrap()).collect();
    let mut idx = vec![0usize; counts.len()];
    loop {
        let mut x: Vec<f64> = ev.dims.iter().map(|d| d.coerce(d.lower)).collect();
        for (k, &d) in ev.free.iter().enumerate() {
            let dim = &ev.dims[d];
            x[d] = dim.coerce(dim.lower + idx[k] as f64 * dim.step.unwrap());
        }
        if ev.eval_box(&x)?.is_none() {
            return Ok(());
        }
        // Odometer increment, last coordinate fastest.
        let mut k = counts.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Indices of potentially optimal rectangles (minimizing `-value`).
fn potentially_optimal(rects: &[Rect]) -> Vec<usize> {
    const EPSILON: f64 = 1e-4;
    // Best rectangle per distinct size.
    let mut groups: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for (k, r) in rects.iter().enumerate() {
        let mut key = r.levels.clone();
        key.sort_unstable();
        groups
            .entry(key)
            .and_modify(|b| {
                if -r.value < -rects[*b].value {
                    *b = k;
                }
            })
            .or_insert(k);
    }
    let mut pts: Vec<(f64, f64, usize)> = groups
        .values()
        .map(|&k| (rects[k].half_diagonal(), -rects[k].value, k))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));

    let g_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    // Largest rectangle attaining the minimum.
    let start = pts.iter().rposition(|p| p.1 == g_min).unwrap();
    let candidates = &pts[start..];

    // Lower convex hull, left to right.
    let mut hull: Vec<(f64, f64, usize)> = Vec::new();
    for &p in candidates {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let threshold = g_min - EPSILON * g_min.abs();
    let mut chosen = Vec::new();
    for (h, &(d, g, k)) in hull.iter().enumerate() {
        let ok = match hull.get(h + 1) {
            None => true,
            Some(&(dn, gn, _)) => {
                let slope = (gn - g) / (dn - d);
                g - slope * d <= threshold
            }
        };
        if ok {
            chosen.push(k);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Runs subdivision rounds until `ev.limit`; `rects` carries the partition
/// across calls so the global phase can resume.
fn direct<F: FnMut(&[f64]) -> Result<f64>>(ev: &mut Evaluator<'_, F>, rects: &mut Vec<Rect>) -> Result<()> {
    let n = ev.free.len();
    if n == 0 {
        ev.eval_unit(&[])?;
        return Ok(());
    }
    if rects.is_empty() {
        let center = vec![0.5; n];
        let Some(value) = ev.eval_unit(&center)? else {
            return Ok(());
        };
        rects.push(Rect {
            center,
            levels: vec![0; n],
            value,
        });
    }
    const MAX_LEVEL: u32 = 30;
    let max_rounds = 4 * ev.limit + 16;
    for _ in 0..max_rounds {
        if ev.exhausted() {
            break;
        }
        let selected = potentially_optimal(rects);
        let mut progressed = false;
        for k in selected {
            let parent = rects[k].clone();
            let min_level = *parent.levels.iter().min().unwrap();
            if min_level >= MAX_LEVEL {
                continue;
            }
            let delta = math::powi(3.0, -(min_level as i32 + 1));
            let split_dims: Vec<usize> = (0..n).filter(|&i| parent.levels[i] == min_level).collect();
            let mut samples = Vec::with_capacity(split_dims.len());
            for &i in &split_dims {
                let mut plus = parent.center.clone();
                plus[i] += delta;
                let mut minus = parent.center.clone();
                minus[i] -= delta;
                let (Some(vp), Some(vm)) = (ev.eval_unit(&plus)?, ev.eval_unit(&minus)?) else {
                    return Ok(());
                };
                samples.push((i, plus, vp, minus, vm));
            }
            // Divide along the best-scoring directions first so the best
            // children keep the largest boxes.
            samples.sort_by(|a, b| {
                let wa = a.2.max(a.4);
                let wb = b.2.max(b.4);
                wb.partial_cmp(&wa).unwrap().then(a.0.cmp(&b.0))
            });
            let mut levels = parent.levels.clone();
            for (i, plus, vp, minus, vm) in samples {
                levels[i] += 1;
                rects.push(Rect {
                    center: plus,
                    levels: levels.clone(),
                    value: vp,
                });
                rects.push(Rect {
                    center: minus,
                    levels: levels.clone(),
                    value: vm,
                });
            }
            rects[k].levels = levels;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    Ok(())
}

fn compass<F: FnMut(&[f64]) -> Result<f64>>(ev: &mut Evaluator<'_, F>) -> Result<()> {
    let n = ev.free.len();
    let Some((best_x, mut best_v)) = ev.best.clone() else {
        return Ok(());
    };
    let mut x = ev.to_unit(&best_x);
    // Per-coordinate steps grow on success and shrink on failure, which
    // lets the search cross the flat stretches of piecewise-constant scores.
    let mut steps = vec![1.0 / 6.0; n];
    while steps.iter().any(|&s| s >= 1e-4) && !ev.exhausted() {
        let sweep_start = x.clone();
        for d in 0..n {
            if steps[d] < 1e-4 {
                continue;
            }
            let mut moved = false;
            for sign in [1.0, -1.0] {
                loop {
                    let mut y = x.clone();
                    y[d] = (y[d] + sign * steps[d]).clamp(0.0, 1.0);
                    if y[d] == x[d] {
                        break;
                    }
                    match ev.eval_unit(&y)? {
                        None => return Ok(()),
                        Some(v) if v > best_v => {
                            best_v = v;
                            x = y;
                            moved = true;
                            steps[d] = (steps[d] * 2.0).min(0.5);
                        }
                        Some(_) => break,
                    }
                }
                if moved {
                    break;
                }
            }
            if !moved {
                steps[d] *= 0.5;
            }
        }
        // Pattern move: keep going in the direction the sweep took.
        let delta: Vec<f64> = x.iter().zip(&sweep_start).map(|(&a, &b)| a - b).collect();
        loop {
            let y: Vec<f64> = x.iter().zip(&delta).map(|(&a, &d)| (a + d).clamp(0.0, 1.0)).collect();
            if y == x {
                break;
            }
            match ev.eval_unit(&y)? {
                None => return Ok(()),
                Some(v) if v > best_v => {
                    best_v = v;
                    x = y;
                }
                Some(_) => break,
            }
        }
    }
    Ok(())
}
