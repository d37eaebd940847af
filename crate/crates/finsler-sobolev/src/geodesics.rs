//! Spray geodesics, curve length and the forward Finslerian distance with
//! tiered providers: closed form, directed-grid Dijkstra, curve descent.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::metric::{norm, FinslerMetric, Point};

#[derive(Debug, Clone)]
pub struct CurveSample {
    pub t: f64,
    pub point: Point,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub samples: Vec<CurveSample>,
}

#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub curve: Curve,
    /// Set when the trajectory left the metric domain and was cut short.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    ClosedForm,
    GridDijkstra,
    CurveDescent,
}

#[derive(Debug, Clone, Copy)]
pub struct DistanceProvider {
    pub tier: Tier,
    pub grid_n: usize,
    pub descent_iters: usize,
}

impl DistanceProvider {
    pub fn closed_form() -> Self {
        Self {
            tier: Tier::ClosedForm,
            grid_n: 64,
            descent_iters: 8,
        }
    }

    pub fn grid_dijkstra(grid_n: usize) -> Result<Self> {
        if grid_n < 8 {
            return Err(Error::InvalidArgument("grid resolution must be >= 8".into()));
        }
        Ok(Self {
            tier: Tier::GridDijkstra,
            grid_n,
            descent_iters: 8,
        })
    }

    pub fn curve_descent(grid_n: usize, descent_iters: usize) -> Result<Self> {
        if grid_n < 8 || descent_iters < 1 {
            return Err(Error::InvalidArgument(
                "need grid resolution >= 8 and descent iterations >= 1".into(),
            ));
        }
        Ok(Self {
            tier: Tier::CurveDescent,
            grid_n,
            descent_iters,
        })
    }

    pub fn describe(&self) -> &'static str {
        match self.tier {
            Tier::ClosedForm => "closed_form",
            Tier::GridDijkstra => "grid_dijkstra",
            Tier::CurveDescent => "curve_descent",
        }
    }
}

/// Classical fixed-step RK4 on the first-order spray system
/// xd = y, yd = -2 G(x, y).
pub fn integrate_geodesic(
    metric: &FinslerMetric,
    start: &Point,
    velocity: &[f64],
    total_time: f64,
    steps: usize,
) -> Result<GeodesicResult> {
    if steps < 16 {
        return Err(Error::InvalidArgument("need at least 16 steps".into()));
    }
    if norm(velocity) == 0.0 {
        return Err(Error::InvalidArgument("start velocity must be nonzero".into()));
    }
    metric.domain_check(&start.coords)?;
    let n = metric.dimension();
    let h = total_time / steps as f64;
    let mut x = start.coords.clone();
    let mut y = velocity.to_vec();
    let mut samples = vec![CurveSample {
        t: 0.0,
        point: Point::new(x.clone())?,
        velocity: y.clone(),
    }];
    let mut truncated = false;
    let deriv = |x: &[f64], y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let g = metric.spray(x, y)?;
        Ok((y.to_vec(), g.iter().map(|c| -2.0 * c).collect()))
    };
    'outer: for step in 0..steps {
        let (k1x, k1y) = deriv(&x, &y)?;
        let ax: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1x[i]).collect();
        let ay: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1y[i]).collect();
        if !metric.domain_contains(&ax) {
            truncated = true;
            break 'outer;
        }
        let (k2x, k2y) = deriv(&ax, &ay)?;
        let bx: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2x[i]).collect();
        let by: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2y[i]).collect();
        if !metric.domain_contains(&bx) {
            truncated = true;
            break 'outer;
        }
        let (k3x, k3y) = deriv(&bx, &by)?;
        let cx: Vec<f64> = (0..n).map(|i| x[i] + h * k3x[i]).collect();
        let cy: Vec<f64> = (0..n).map(|i| y[i] + h * k3y[i]).collect();
        if !metric.domain_contains(&cx) {
            truncated = true;
            break 'outer;
        }
        let (k4x, k4y) = deriv(&cx, &cy)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            y[i] += h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
        }
        if !metric.domain_contains(&x) {
            truncated = true;
            break 'outer;
        }
        samples.push(CurveSample {
            t: (step + 1) as f64 * h,
            point: Point::new(x.clone())?,
            velocity: y.clone(),
        });
    }
    Ok(GeodesicResult {
        curve: Curve { samples },
        truncated,
    })
}

/// L(sigma) = int F(sigma, sigmad) dt by composite trapezoid over the stored
/// parameterization.
pub fn curve_length(metric: &FinslerMetric, curve: &Curve) -> Result<f64> {
    if curve.samples.len() < 2 {
        return Err(Error::InvalidArgument("curve needs at least 2 samples".into()));
    }
    let mut total = 0.0;
    let mut prev_f = metric.eval(&curve.samples[0].point.coords, &curve.samples[0].velocity)?;
    for pair in curve.samples.windows(2) {
        let dt = pair[1].t - pair[0].t;
        if dt <= 0.0 {
            return Err(Error::InvalidArgument(
                "curve parameters must be strictly increasing".into(),
            ));
        }
        let f = metric.eval(&pair[1].point.coords, &pair[1].velocity)?;
        total += 0.5 * dt * (prev_f + f);
        prev_f = f;
    }
    Ok(total)
}

/// Max relative drift of the Finslerian speed along a curve.
pub fn speed_drift(metric: &FinslerMetric, curve: &Curve) -> Result<f64> {
    let f0 = metric.eval(&curve.samples[0].point.coords, &curve.samples[0].velocity)?;
    let mut worst: f64 = 0.0;
    for s in &curve.samples {
        let f = metric.eval(&s.point.coords, &s.velocity)?;
        worst = worst.max((f - f0).abs() / f0);
    }
    Ok(worst)
}

/// Forward distance d(x1, x2). Not symmetric in general.
pub fn distance(
    metric: &FinslerMetric,
    x1: &Point,
    x2: &Point,
    provider: &DistanceProvider,
) -> Result<f64> {
    metric.domain_check(&x1.coords)?;
    metric.domain_check(&x2.coords)?;
    if x1.coords == x2.coords {
        return Ok(0.0);
    }
    match provider.tier {
        Tier::ClosedForm => metric
            .closed_form_distance(&x1.coords, &x2.coords)?
            .ok_or_else(|| Error::NoClosedForm(metric.name())),
        Tier::GridDijkstra => Ok(dijkstra_distance(metric, &x1.coords, &x2.coords, provider.grid_n)?.0),
        Tier::CurveDescent => {
            let (upper, path) = dijkstra_distance(metric, &x1.coords, &x2.coords, provider.grid_n)?;
            let refined = descend_polyline(metric, path, provider.descent_iters)?;
            Ok(upper.min(refined))
        }
    }
}

pub fn forward_ball_indicator(
    metric: &FinslerMetric,
    center: &Point,
    radius: f64,
    x: &Point,
    provider: &DistanceProvider,
) -> Result<bool> {
    if radius < 0.0 {
        return Err(Error::InvalidArgument("radius must be nonnegative".into()));
    }
    Ok(distance(metric, center, x, provider)? < radius)
}

#[derive(PartialEq)]
struct HeapKey(f64);

impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Directed Dijkstra on the axis-aligned grid spanned by the two endpoints.
///
/// The grid is the bounding box of {x1, x2}; endpoints land exactly on corner
/// nodes, axes of zero extent collapse. Edges are directed with weight
/// F(midpoint, dx), which handles irreversibility naturally. Returns an upper
/// bound on d and the realizing node path.
fn dijkstra_distance(
    metric: &FinslerMetric,
    x1: &[f64],
    x2: &[f64],
    grid_n: usize,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = x1.len();
    // per-axis node coordinates
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for ax in 0..n {
        let lo = x1[ax].min(x2[ax]);
        let hi = x1[ax].max(x2[ax]);
        if (hi - lo) < 1e-14 {
            axes.push(vec![x1[ax]]);
        } else {
            axes.push(
                (0..=grid_n)
                    .map(|i| lo + (hi - lo) * i as f64 / grid_n as f64)
                    .collect(),
            );
        }
    }
    let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let count: usize = sizes.iter().product();
    let coords = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        let mut c = vec![0.0; n];
        for ax in (0..n).rev() {
            c[ax] = axes[ax][rem % sizes[ax]];
            rem /= sizes[ax];
        }
        c
    };
    let index_of = |x: &[f64]| -> usize {
        let mut idx = 0;
        for ax in 0..n {
            let i = axes[ax]
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - x[ax]).abs().total_cmp(&(*b - x[ax]).abs()))
                .map(|(i, _)| i)
                .unwrap();
            idx = idx * sizes[ax] + i;
        }
        idx
    };
    let active: Vec<bool> = sizes.iter().map(|s| *s > 1).collect();
    let stencil = stencil_offsets(n, &active);

    let src = index_of(x1);
    let dst = index_of(x2);
    let mut dist = vec![f64::INFINITY; count];
    let mut prev = vec![usize::MAX; count];
    let mut done = vec![false; count];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((HeapKey(0.0), src)));
    while let Some(Reverse((HeapKey(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        let xu = coords(u);
        'edges: for off in &stencil {
            let mut idx = 0;
            let mut rem = u;
            let mut digits = vec![0usize; n];
            for ax in (0..n).rev() {
                digits[ax] = rem % sizes[ax];
                rem /= sizes[ax];
            }
            for ax in 0..n {
                let ni = digits[ax] as isize + off[ax];
                if ni < 0 || ni as usize >= sizes[ax] {
                    continue 'edges;
                }
                idx = idx * sizes[ax] + ni as usize;
            }
            let v = idx;
            if done[v] {
                continue;
            }
            let xv = coords(v);
            let mid: Vec<f64> = xu.iter().zip(&xv).map(|(a, b)| 0.5 * (a + b)).collect();
            if !metric.domain_contains(&mid) || !metric.domain_contains(&xv) {
                continue;
            }
            let delta: Vec<f64> = xv.iter().zip(&xu).map(|(b, a)| b - a).collect();
            let w = metric.eval(&mid, &delta)?;
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Reverse((HeapKey(nd), v)));
            }
        }
    }
    if !dist[dst].is_finite() {
        return Err(Error::Unreachable(format!(
            "no grid path from {x1:?} to {x2:?} (domain truncation)"
        )));
    }
    let mut path = Vec::new();
    let mut cur = dst;
    while cur != usize::MAX {
        path.push(coords(cur));
        if cur == src {
            break;
        }
        cur = prev[cur];
    }
    path.reverse();
    Ok((dist[dst], path))
}

fn stencil_offsets(n: usize, active: &[bool]) -> Vec<Vec<isize>> {
    fn gcd(a: isize, b: isize) -> isize {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let range: Vec<isize> = match n {
        1 => vec![-1, 0, 1],
        2 => vec![-2, -1, 0, 1, 2],
        _ => vec![-1, 0, 1],
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let off: Vec<isize> = (0..n)
            .map(|ax| if active[ax] { range[idx[ax]] } else { 0 })
            .collect();
        let nonzero = off.iter().any(|c| *c != 0);
        if nonzero {
            let g = off.iter().fold(0isize, |acc, c| gcd(acc, *c));
            if g == 1 && !out.contains(&off) {
                out.push(off);
            }
        }
        // odometer
        let mut ax = 0;
        loop {
            if ax == n {
                return out;
            }
            idx[ax] += 1;
            if idx[ax] < range.len() {
                break;
            }
            idx[ax] = 0;
            ax += 1;
        }
    }
}

/// Coordinate descent on the interior vertices of a polyline with fixed
/// endpoints, used only to tighten the Dijkstra upper bound.
fn descend_polyline(
    metric: &FinslerMetric,
    path: Vec<Vec<f64>>,
    iters: usize,
) -> Result<f64> {
    let n = metric.dimension();
    // resample to a fixed vertex budget
    let verts = 33.min(path.len().max(2) * 2 - 1).max(3);
    let mut poly = resample_polyline(&path, verts);
    let seg_len = |a: &[f64], b: &[f64]| -> Result<f64> {
        // 4-panel midpoint along the straight segment
        let mut total = 0.0;
        let delta: Vec<f64> = b.iter().zip(a).map(|(x, y)| (x - y) / 4.0).collect();
        for k in 0..4 {
            let mid: Vec<f64> = (0..a.len())
                .map(|i| a[i] + (k as f64 + 0.5) * delta[i])
                .collect();
            if !metric.domain_contains(&mid) {
                return Ok(f64::INFINITY);
            }
            total += metric.eval(&mid, &delta)?;
        }
        Ok(total)
    };
    let total_len = |poly: &[Vec<f64>]| -> Result<f64> {
        let mut acc = 0.0;
        for pair in poly.windows(2) {
            acc += seg_len(&pair[0], &pair[1])?;
        }
        Ok(acc)
    };
    let extent = poly
        .first()
        .unwrap()
        .iter()
        .zip(poly.last().unwrap())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max)
        .max(1e-6);
    let mut best = total_len(&poly)?;
    let mut step = extent / verts as f64;
    for _ in 0..iters {
        for v in 1..(poly.len() - 1) {
            for ax in 0..n {
                for dir in [-1.0, 1.0] {
                    let old = poly[v][ax];
                    poly[v][ax] = old + dir * step;
                    if metric.domain_contains(&poly[v]) {
                        let cand = total_len(&poly)?;
                        if cand < best {
                            best = cand;
                            continue;
                        }
                    }
                    poly[v][ax] = old;
                }
            }
        }
        step *= 0.5;
    }
    Ok(best)
}

fn resample_polyline(path: &[Vec<f64>], verts: usize) -> Vec<Vec<f64>> {
    if path.len() < 2 {
        return path.to_vec();
    }
    let mut cum = vec![0.0];
    for pair in path.windows(2) {
        let d: Vec<f64> = pair[1].iter().zip(&pair[0]).map(|(b, a)| b - a).collect();
        cum.push(cum.last().unwrap() + norm(&d));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return vec![path[0].clone(), path[path.len() - 1].clone()];
    }
    (0..verts)
        .map(|i| {
            let target = total * i as f64 / (verts - 1) as f64;
            let seg = cum.partition_point(|c| *c < target).min(path.len() - 1).max(1);
            let t0 = cum[seg - 1];
            let t1 = cum[seg];
            let frac = if t1 > t0 { (target - t0) / (t1 - t0) } else { 0.0 };
            path[seg - 1]
                .iter()
                .zip(&path[seg])
                .map(|(a, b)| a + frac * (b - a))
                .collect()
        })
        .collect()
}
