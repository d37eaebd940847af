//! Constructive approximation machinery: the distance-based truncation
//! sequence, mollifiers and discrete convolution, boundary translation,
//! partitions of unity and the convergence experiments built from them.

use rayon::prelude::*;

use crate::bundle::{pairwise_sum, sphere_volume, Domain, DomainKind, FiberQuadrature};
use crate::error::{Error, Result};
use crate::geodesics::{distance, DistanceProvider};
use crate::metric::{norm, FinslerMetric, Point};
use crate::report::{ensure_monotone_params, Table};
use crate::sobolev::{gradient_lp_norm_sm, lp_norm_sm, ScalarField, Smoothness};

/// The cutoff profile: 1 for t <= 0, 1 - t on (0, 1), 0 for t >= 1.
/// Continuous, nonincreasing, differentiable away from {0, 1} with
/// sup |f'| = 1.
pub fn truncation_profile(t: f64) -> f64 {
    (1.0 - t).clamp(0.0, 1.0)
}

fn truncation_profile_slope(t: f64) -> f64 {
    if t > 0.0 && t < 1.0 {
        -1.0
    } else {
        0.0
    }
}

/// The truncation sequence phi_j(x) = phi(x) f(d(x0, x) - j): equal to phi on
/// the forward ball B+(j), zero outside B+(j+1).
#[derive(Clone)]
pub struct TruncationSequence {
    pub phi: ScalarField,
    pub center: Point,
    pub provider: DistanceProvider,
}

impl TruncationSequence {
    pub fn new(phi: ScalarField, center: Point, provider: DistanceProvider) -> Self {
        Self {
            phi,
            center,
            provider,
        }
    }

    /// phi_j for index j >= 1.
    pub fn term(&self, metric: &FinslerMetric, j: usize) -> Result<ScalarField> {
        truncate(&self.phi, metric, &self.center, j, &self.provider)
    }

    /// phi_j - phi, the quantity whose norms the density experiment tracks.
    pub fn difference(&self, metric: &FinslerMetric, j: usize) -> Result<ScalarField> {
        if j < 1 {
            return Err(Error::InvalidArgument("truncation index must be >= 1".into()));
        }
        let phi = self.phi.clone();
        let metric = metric.clone();
        let x0 = self.center.clone();
        let provider = self.provider;
        let jf = j as f64;
        let dist_at = move |x: &[f64]| -> f64 {
            let p = Point::new(x.to_vec()).expect("grid point");
            distance(&metric, &x0, &p, &provider).expect("distance in experiment domain")
        };
        let value = {
            let phi = phi.clone();
            let dist_at = dist_at.clone();
            move |x: &[f64]| {
                let s = dist_at(x) - jf;
                phi.value(x) * (truncation_profile(s) - 1.0)
            }
        };
        let gradient = move |x: &[f64]| {
            let d = dist_at(x);
            let s = d - jf;
            let f = truncation_profile(s);
            let fp = truncation_profile_slope(s);
            let mut g: Vec<f64> = phi.gradient(x).iter().map(|c| (f - 1.0) * c).collect();
            if fp != 0.0 {
                let dd = distance_gradient_fd(&dist_at, x);
                let v = phi.value(x);
                for (gi, di) in g.iter_mut().zip(&dd) {
                    *gi += v * fp * di;
                }
            }
            g
        };
        Ok(
            ScalarField::new(format!("{}_({j})-diff", self.phi.name), Smoothness::Piecewise, value)
                .with_gradient(gradient),
        )
    }
}

fn distance_gradient_fd(dist_at: &(impl Fn(&[f64]) -> f64 + Clone), x: &[f64]) -> Vec<f64> {
    let h = 1e-6 * (1.0 + norm(x));
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (dist_at(&xp) - dist_at(&xm)) / (2.0 * h)
        })
        .collect()
}

/// phi_j(x) = phi(x) f(d(x0, x) - j), tagged piecewise: its kink set lies on
/// the two metric spheres d = j and d = j + 1.
pub fn truncate(
    phi: &ScalarField,
    metric: &FinslerMetric,
    x0: &Point,
    j: usize,
    provider: &DistanceProvider,
) -> Result<ScalarField> {
    if j < 1 {
        return Err(Error::InvalidArgument("truncation index must be >= 1".into()));
    }
    metric.domain_check(&x0.coords)?;
    let phi = phi.clone();
    let metric = metric.clone();
    let x0 = x0.clone();
    let provider = *provider;
    let jf = j as f64;
    let name = format!("{}_({j})", phi.name);
    let dist_at = move |x: &[f64]| -> f64 {
        let p = Point::new(x.to_vec()).expect("grid point");
        distance(&metric, &x0, &p, &provider).expect("distance in experiment domain")
    };
    let value = {
        let phi = phi.clone();
        let dist_at = dist_at.clone();
        move |x: &[f64]| phi.value(x) * truncation_profile(dist_at(x) - jf)
    };
    let gradient = move |x: &[f64]| {
        let s = dist_at(x) - jf;
        let f = truncation_profile(s);
        let fp = truncation_profile_slope(s);
        let mut g: Vec<f64> = phi.gradient(x).iter().map(|c| f * c).collect();
        if fp != 0.0 {
            let dd = distance_gradient_fd(&dist_at, x);
            let v = phi.value(x);
            for (gi, di) in g.iter_mut().zip(&dd) {
                *gi += v * fp * di;
            }
        }
        g
    };
    Ok(ScalarField::new(name, Smoothness::Piecewise, value).with_gradient(gradient))
}

/// The standard bump kernel J_eps(x) = eps^{-n} C_n exp(1/(|x/eps|^2 - 1)),
/// zero outside |x| < eps, unit mass.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    pub eps: f64,
    pub dimension: usize,
    pub normalization: f64,
}

impl MollifierSpec {
    pub fn new(eps: f64, dimension: usize) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument("mollifier eps must be positive".into()));
        }
        if dimension == 0 || dimension > 3 {
            return Err(Error::InvalidArgument("dimension must be 1..=3".into()));
        }
        Ok(Self {
            eps,
            dimension,
            normalization: bump_normalization(dimension),
        })
    }

    pub fn kernel(&self, x: &[f64]) -> f64 {
        let r = norm(x) / self.eps;
        if r >= 1.0 {
            return 0.0;
        }
        self.eps.powi(-(self.dimension as i32)) * self.normalization
            * (1.0 / (r * r - 1.0)).exp()
    }
}

/// 1 / int_{R^n} exp(1/(|x|^2-1)) dx by radial Simpson quadrature.
fn bump_normalization(n: usize) -> f64 {
    let surface = match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!(),
    };
    let m = 4096;
    let h = 1.0 / m as f64;
    let f = |r: f64| {
        if r >= 1.0 {
            0.0
        } else {
            r.powi(n as i32 - 1) * (1.0 / (r * r - 1.0)).exp()
        }
    };
    let mut acc = f(0.0) + f(1.0);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    1.0 / (surface * acc * h / 3.0)
}

/// Field samples on the midpoint grid of a box or torus domain.
#[derive(Debug, Clone)]
pub struct GridField {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn sample(field: &ScalarField, domain: &Domain) -> Self {
        let values = (0..domain.cell_count())
            .map(|i| match domain.cell_center(i) {
                Some(x) => field.value(&x),
                None => 0.0,
            })
            .collect();
        Self {
            domain: domain.clone(),
            values,
        }
    }

    pub fn from_values(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::InvalidArgument("value count does not match grid".into()));
        }
        Ok(Self { domain, values })
    }

    fn shape(&self) -> Vec<usize> {
        self.domain.resolution.clone()
    }

    fn index(&self, ij: &[isize]) -> Option<usize> {
        let shape = self.shape();
        let periodic = self.domain.kind == DomainKind::Torus;
        let mut idx = 0usize;
        for (ax, &i) in ij.iter().enumerate() {
            let s = shape[ax] as isize;
            let i = if periodic { i.rem_euclid(s) } else { i };
            if i < 0 || i >= s {
                return None;
            }
            idx = idx * shape[ax] + i as usize;
        }
        Some(idx)
    }

    fn decompose(&self, idx: usize) -> Vec<isize> {
        let shape = self.shape();
        let mut rem = idx;
        let mut ij = vec![0isize; shape.len()];
        for ax in (0..shape.len()).rev() {
            ij[ax] = (rem % shape[ax]) as isize;
            rem /= shape[ax];
        }
        ij
    }

    /// Classical L^p norm over the grid with the flat cell measure,
    /// optionally insetting `margin` from box boundaries.
    pub fn lp_norm(&self, p: f64, margin: f64) -> f64 {
        let vol = self.domain.cell_volume();
        let terms: Vec<f64> = (0..self.values.len())
            .filter(|i| self.in_margin(*i, margin))
            .map(|i| self.values[i].abs().powf(p) * vol)
            .collect();
        pairwise_sum(&terms).powf(1.0 / p)
    }

    fn in_margin(&self, idx: usize, margin: f64) -> bool {
        if margin <= 0.0 || self.domain.kind == DomainKind::Torus {
            return true;
        }
        match self.domain.cell_center(idx) {
            None => false,
            Some(x) => x
                .iter()
                .zip(&self.domain.lo)
                .zip(&self.domain.hi)
                .all(|((c, lo), hi)| *c >= lo + margin && *c <= hi - margin),
        }
    }

    /// Central-difference gradient magnitude per cell (one-sided at box
    /// edges, wrapped on the torus).
    pub fn gradient_magnitude(&self) -> GridField {
        let shape = self.shape();
        let h = self.domain.spacing();
        let values: Vec<f64> = (0..self.values.len())
            .map(|idx| {
                let ij = self.decompose(idx);
                let mut sq = 0.0;
                for ax in 0..shape.len() {
                    let mut up = ij.clone();
                    let mut dn = ij.clone();
                    up[ax] += 1;
                    dn[ax] -= 1;
                    let d = match (self.index(&up), self.index(&dn)) {
                        (Some(u), Some(d)) => (self.values[u] - self.values[d]) / (2.0 * h[ax]),
                        (Some(u), None) => (self.values[u] - self.values[idx]) / h[ax],
                        (None, Some(d)) => (self.values[idx] - self.values[d]) / h[ax],
                        (None, None) => 0.0,
                    };
                    sq += d * d;
                }
                sq.sqrt()
            })
            .collect();
        GridField {
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        GridField {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Discrete convolution J_eps * u by direct summation over the kernel
/// stencil, with the stencil weights normalized to unit mass. Box domains
/// extend u by zero, the torus wraps.
pub fn mollify(u: &GridField, spec: &MollifierSpec) -> Result<GridField> {
    let h = u.domain.spacing();
    let max_h = h.iter().cloned().fold(0.0, f64::max);
    if max_h >= spec.eps / 4.0 {
        return Err(Error::EpsilonBelowResolution {
            eps: spec.eps,
            spacing: max_h,
        });
    }
    let n = u.domain.dim();
    // stencil offsets within the kernel support
    let radii: Vec<isize> = h.iter().map(|hh| (spec.eps / hh).ceil() as isize).collect();
    let mut offsets: Vec<(Vec<isize>, f64)> = Vec::new();
    let mut idx = vec![-radii[0]; n];
    for ax in 1..n {
        idx[ax] = -radii[ax];
    }
    'gen: loop {
        let disp: Vec<f64> = (0..n).map(|ax| idx[ax] as f64 * h[ax]).collect();
        let w = spec.kernel(&disp);
        if w > 0.0 {
            offsets.push((idx.clone(), w));
        }
        for ax in 0..n {
            idx[ax] += 1;
            if idx[ax] <= radii[ax] {
                continue 'gen;
            }
            idx[ax] = -radii[ax];
        }
        break;
    }
    let total: f64 = offsets.iter().map(|(_, w)| w).sum();
    for (_, w) in offsets.iter_mut() {
        *w /= total;
    }
    let values: Vec<f64> = (0..u.values.len())
        .into_par_iter()
        .map(|i| {
            let ij = u.decompose(i);
            let mut acc = 0.0;
            for (off, w) in &offsets {
                let shifted: Vec<isize> = ij.iter().zip(off).map(|(a, b)| a - b).collect();
                if let Some(j) = u.index(&shifted) {
                    acc += w * u.values[j];
                }
            }
            acc
        })
        .collect();
    Ok(GridField {
        domain: u.domain.clone(),
        values,
    })
}

/// Rows (eps, lp_err, h1p_err, young_ratio) for a strictly decreasing eps
/// list. lp_err is the classical L^p difference; h1p_err carries the
/// c_{n-1}^{1/p} sphere-bundle factor and is measured on the interior inset
/// by the largest eps (full grid on the torus).
pub fn mollification_convergence(
    u: &GridField,
    p: f64,
    eps_list: &[f64],
) -> Result<Table> {
    ensure_monotone_params(eps_list, false)?;
    let n = u.domain.dim();
    let c = sphere_volume(n).powf(1.0 / p);
    let margin = eps_list.first().copied().unwrap_or(0.0);
    let u_norm = u.lp_norm(p, 0.0);
    let mut table = Table::new(&["eps", "lp_err", "h1p_err", "young_ratio"]);
    table.meta("domain", u.domain.describe());
    table.meta("p", p);
    table.meta("h1p_convention", "c_{n-1}^{1/p} * (lp + grad_lp), interior inset by max eps");
    for &eps in eps_list {
        let spec = MollifierSpec::new(eps, n)?;
        let v = mollify(u, &spec)?;
        let diff = v.sub(u);
        let lp_err = diff.lp_norm(p, 0.0);
        let h1p_err = c * (diff.lp_norm(p, margin) + diff.gradient_magnitude().lp_norm(p, margin));
        let young = if u_norm > 0.0 {
            v.lp_norm(p, 0.0) / u_norm
        } else {
            0.0
        };
        table.push_row(&[eps, lp_err, h1p_err, young]);
    }
    Ok(table)
}

/// h_m(x) = u(x^1 - 1/m, x^2, ...), the inward half-ball translation.
pub fn boundary_translate(u: &ScalarField, m: usize) -> Result<ScalarField> {
    if m < 1 {
        return Err(Error::InvalidArgument("translation index m must be >= 1".into()));
    }
    let shift = 1.0 / m as f64;
    let u2 = u.clone();
    let u3 = u.clone();
    let field = ScalarField::new(
        format!("{}<-1/{m}", u.name),
        u.smoothness,
        move |x: &[f64]| {
            let mut xs = x.to_vec();
            xs[0] -= shift;
            u2.value(&xs)
        },
    );
    Ok(if u.has_gradient() {
        field.with_gradient(move |x: &[f64]| {
            let mut xs = x.to_vec();
            xs[0] -= shift;
            u3.gradient(&xs)
        })
    } else {
        field
    })
}

/// Smooth partition of unity from normalized tensor-product bumps on boxes.
/// Errors with an uncovered sample point when the cover misses part of the
/// region.
pub fn partition_of_unity(
    region: &Domain,
    cover: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<ScalarField>> {
    if cover.is_empty() {
        return Err(Error::InvalidArgument("empty cover".into()));
    }
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = cover.to_vec();
    let total_bump = {
        let boxes = boxes.clone();
        move |x: &[f64]| -> f64 { boxes.iter().map(|b| box_bump(b, x)).sum() }
    };
    for i in 0..region.cell_count() {
        if let Some(x) = region.cell_center(i) {
            if total_bump(&x) <= 0.0 {
                return Err(Error::NotCovering(x));
            }
        }
    }
    Ok((0..boxes.len())
        .map(|i| {
            let boxes = boxes.clone();
            ScalarField::new(format!("partition_{i}"), Smoothness::Smooth, move |x: &[f64]| {
                let total: f64 = boxes.iter().map(|b| box_bump(b, x)).sum();
                if total <= 0.0 {
                    0.0
                } else {
                    box_bump(&boxes[i], x) / total
                }
            })
        })
        .collect())
}

fn box_bump(b: &(Vec<f64>, Vec<f64>), x: &[f64]) -> f64 {
    let mut prod = 1.0;
    for ((lo, hi), c) in b.0.iter().zip(&b.1).zip(x) {
        let t = (c - lo) / (hi - lo);
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        prod *= (-1.0 / (t * (1.0 - t))).exp();
    }
    prod
}

/// Truncation-sequence convergence: rows (j, ||phi_j - phi||_{L^p(SM)},
/// ||grad(phi_j - phi)||_{L^p(SM)}, H_1^p sum) for j = 1..=j_max.
pub fn density_experiment(
    metric: &FinslerMetric,
    phi: &ScalarField,
    p: f64,
    j_max: usize,
    center: &Point,
    provider: &DistanceProvider,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<Table> {
    if j_max < 1 {
        return Err(Error::InvalidArgument("j_max must be >= 1".into()));
    }
    let seq = TruncationSequence::new(phi.clone(), center.clone(), *provider);
    let mut table = Table::new(&["j", "lp_sm", "grad_lp_sm", "h1p"]);
    table.meta("metric", metric.name());
    table.meta("field", &phi.name);
    table.meta("p", p);
    table.meta("provider", provider.describe());
    table.meta("domain", domain.describe());
    for j in 1..=j_max {
        let diff = seq.difference(metric, j)?;
        let lp = lp_norm_sm(metric, &diff, p, domain, rule)?;
        let grad = gradient_lp_norm_sm(metric, &diff, p, domain, rule)?;
        table.push_row(&[j as f64, lp, grad, lp + grad]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::dot;
    use std::f64::consts::PI;

    #[test]
    fn profile_values() {
        assert_eq!(truncation_profile(-1.0), 1.0);
        assert_eq!(truncation_profile(0.5), 0.5);
        assert_eq!(truncation_profile(2.0), 0.0);
        assert_eq!(truncation_profile(0.0), 1.0);
        assert_eq!(truncation_profile(1.0), 0.0);
    }

    #[test]
    fn truncate_sandwich_values() {
        let eu = FinslerMetric::euclidean(2).unwrap();
        let phi = ScalarField::gaussian();
        let x0 = Point::new(vec![0.0, 0.0]).unwrap();
        let cf = DistanceProvider::closed_form();
        let phi2 = truncate(&phi, &eu, &x0, 2, &cf).unwrap();
        let inside = [1.0, 0.0];
        assert!((phi2.value(&inside) - phi.value(&inside)).abs() < 1e-15);
        let mid = [2.5, 0.0];
        assert!((phi2.value(&mid) - 0.5 * phi.value(&mid)).abs() < 1e-15);
        assert_eq!(phi2.value(&[4.0, 0.0]), 0.0);
    }

    #[test]
    fn truncate_pointwise_bound_and_leibniz() {
        let eu = FinslerMetric::euclidean(2).unwrap();
        let phi = ScalarField::gaussian();
        let x0 = Point::new(vec![0.0, 0.0]).unwrap();
        let cf = DistanceProvider::closed_form();
        let phi1 = truncate(&phi, &eu, &x0, 1, &cf).unwrap();
        let mut k = 0u32;
        for i in 0..100 {
            for j in 0..100 {
                let x = [-4.0 + 8.0 * (i as f64 + 0.5) / 100.0, -4.0 + 8.0 * (j as f64 + 0.5) / 100.0];
                assert!(phi1.value(&x).abs() <= phi.value(&x).abs() + 1e-15);
                // Leibniz bound |grad phi_j| <= |grad phi| + |phi| sup|f'|
                let g = norm(&phi1.gradient(&x));
                let bound = norm(&phi.gradient(&x)) + phi.value(&x).abs();
                assert!(g <= bound + 1e-9, "at {x:?}: {g} vs {bound}");
                k += 1;
            }
        }
        assert_eq!(k, 10_000);
    }

    #[test]
    fn mollifier_kernel_axioms() {
        for n in 1..=2 {
            for eps in [0.5, 0.25] {
                let spec = MollifierSpec::new(eps, n).unwrap();
                // vanishes at the support boundary
                let mut edge = vec![0.0; n];
                edge[0] = eps;
                assert_eq!(spec.kernel(&edge), 0.0);
                // unit mass by an independent midpoint lattice sum
                let m = 400;
                let h = 2.0 * eps / m as f64;
                let mut mass = 0.0;
                let mut idx = vec![0usize; n];
                'sum: loop {
                    let x: Vec<f64> =
                        (0..n).map(|ax| -eps + (idx[ax] as f64 + 0.5) * h).collect();
                    mass += spec.kernel(&x) * h.powi(n as i32);
                    for ax in 0..n {
                        idx[ax] += 1;
                        if idx[ax] < m {
                            continue 'sum;
                        }
                        idx[ax] = 0;
                    }
                    break;
                }
                assert!((mass - 1.0).abs() < 1e-6, "n={n} eps={eps}: {mass}");
            }
        }
    }

    #[test]
    fn kernel_center_value_matches_radial_normalization_oracle() {
        let spec = MollifierSpec::new(1.0, 2).unwrap();
        // independent oracle: 2 pi int_0^1 r e^{1/(r^2-1)} dr by midpoint
        let m = 200_000;
        let h = 1.0 / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) * h;
            acc += r * (1.0 / (r * r - 1.0)).exp() * h;
        }
        let c2 = 1.0 / (2.0 * PI * acc);
        assert!((spec.kernel(&[0.0, 0.0]) - c2 * (-1.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn mollify_reproduces_constants_and_linears() {
        let dom = Domain::new_box(vec![-1.0, -1.0], vec![1.0, 1.0], vec![64]).unwrap();
        let spec = MollifierSpec::new(0.25, 2).unwrap();
        let c = GridField::sample(&ScalarField::from_catalog("one").unwrap(), &dom);
        let mc = mollify(&c, &spec).unwrap();
        for (i, v) in mc.values.iter().enumerate() {
            if mc.in_margin(i, 0.3) {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
        let lin = GridField::sample(&ScalarField::coordinate(), &dom);
        let ml = mollify(&lin, &spec).unwrap();
        for i in 0..ml.values.len() {
            if ml.in_margin(i, 0.3) {
                assert!((ml.values[i] - lin.values[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mollify_step_midpoint_is_half() {
        let dom = Domain::new_box(vec![-1.0], vec![1.0], vec![512]).unwrap();
        let spec = MollifierSpec::new(0.125, 1).unwrap();
        let s = GridField::sample(&ScalarField::step(), &dom);
        let ms = mollify(&s, &spec).unwrap();
        // cells straddling the jump sit at -h/2 and +h/2; the kernel is even,
        // so their smoothed values average to 1/2
        let h = dom.spacing()[0];
        let i = (1.0 / h).round() as usize - 1;
        let near = 0.5 * (ms.values[i] + ms.values[i + 1]);
        assert!((near - 0.5).abs() < 1e-3, "{near}");
        // monotone through the smoothing zone
        for k in (i - 40)..(i + 40) {
            assert!(ms.values[k + 1] >= ms.values[k] - 1e-12);
        }
        // untouched far from the jump
        assert_eq!(ms.values[ms.values.len() / 4], 0.0);
    }

    #[test]
    fn mollify_refuses_coarse_grids() {
        let dom = Domain::new_box(vec![0.0, 0.0], vec![1.0, 1.0], vec![8]).unwrap();
        let u = GridField::sample(&ScalarField::gaussian(), &dom);
        let spec = MollifierSpec::new(0.2, 2).unwrap();
        assert!(matches!(
            mollify(&u, &spec),
            Err(Error::EpsilonBelowResolution { .. })
        ));
    }

    #[test]
    fn mollification_errors_decrease() {
        let dom = Domain::new_box(vec![-4.0, -4.0], vec![4.0, 4.0], vec![320]).unwrap();
        let u = GridField::sample(&ScalarField::gaussian(), &dom);
        let t = mollification_convergence(&u, 2.0, &[0.5, 0.25, 0.125]).unwrap();
        let lp = t.column(1);
        let h1 = t.column(2);
        let young = t.column(3);
        assert!(lp[0] > lp[1] && lp[1] > lp[2], "{lp:?}");
        assert!(h1[0] > h1[1] && h1[1] > h1[2], "{h1:?}");
        assert!(young.iter().all(|y| *y <= 1.0 + 1e-6), "{young:?}");
    }

    #[test]
    fn mollification_of_zero_is_zero() {
        let dom = Domain::new_box(vec![-1.0, -1.0], vec![1.0, 1.0], vec![128]).unwrap();
        let u = GridField::sample(&ScalarField::zero(), &dom);
        let t = mollification_convergence(&u, 2.0, &[0.25, 0.125]).unwrap();
        assert!(t.column(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn translate_fields() {
        let u = ScalarField::coordinate();
        let h = boundary_translate(&u, 10).unwrap();
        assert!((h.value(&[0.5, 0.2]) - 0.4).abs() < 1e-15);
        let c = ScalarField::from_catalog("one").unwrap();
        let hc = boundary_translate(&c, 3).unwrap();
        assert_eq!(hc.value(&[0.1, 0.9]), 1.0);
    }

    #[test]
    fn translate_l2_error_decays_linearly() {
        // u = sin(pi x^1) on the half-ball rectangle proxy [-1,0]x[0,1]
        let u = ScalarField::new("sinpix", Smoothness::Smooth, |x: &[f64]| (PI * x[0]).sin());
        let dom = Domain::new_box(vec![-1.0, 0.0], vec![0.0, 1.0], vec![128]).unwrap();
        let mut errs = Vec::new();
        for m in [5usize, 10, 20, 40] {
            let h = boundary_translate(&u, m).unwrap();
            let gf = GridField::sample(
                &{
                    let u = u.clone();
                    let h = h.clone();
                    ScalarField::new("diff", Smoothness::Smooth, move |x: &[f64]| {
                        h.value(x) - u.value(x)
                    })
                },
                &dom,
            );
            errs.push(gf.lp_norm(2.0, 0.0));
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.1, "{errs:?}");
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let region = Domain::new_box(vec![0.0, 0.0], vec![1.0, 1.0], vec![100]).unwrap();
        // 2x2 overlapping cover
        let cover = vec![
            (vec![-0.1, -0.1], vec![0.6, 0.6]),
            (vec![0.4, -0.1], vec![1.1, 0.6]),
            (vec![-0.1, 0.4], vec![0.6, 1.1]),
            (vec![0.4, 0.4], vec![1.1, 1.1]),
        ];
        let parts = partition_of_unity(&region, &cover).unwrap();
        for i in 0..region.cell_count() {
            let x = region.cell_center(i).unwrap();
            let total: f64 = parts.iter().map(|a| a.value(&x)).sum();
            assert!((total - 1.0).abs() < 1e-12, "at {x:?}");
            for a in &parts {
                let v = a.value(&x);
                assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn single_box_partition_is_one() {
        let region = Domain::new_box(vec![0.0], vec![1.0], vec![64]).unwrap();
        let parts = partition_of_unity(&region, &[(vec![-0.2], vec![1.2])]).unwrap();
        for i in 0..64 {
            let x = region.cell_center(i).unwrap();
            assert!((parts[0].value(&x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_reports_uncovered_point() {
        let region = Domain::new_box(vec![0.0], vec![1.0], vec![64]).unwrap();
        let r = partition_of_unity(&region, &[(vec![-0.2], vec![0.5])]);
        assert!(matches!(r, Err(Error::NotCovering(_))));
    }

    #[test]
    fn density_rows_vanish_for_compact_support() {
        // a bump supported inside the unit forward ball
        let phi = ScalarField::new("innerbump", Smoothness::Smooth, |x: &[f64]| {
            let r2 = dot(x, x) / 0.64;
            if r2 >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - r2)).exp()
            }
        });
        let eu = FinslerMetric::euclidean(2).unwrap();
        let dom = Domain::new_box(vec![-2.0, -2.0], vec![2.0, 2.0], vec![32]).unwrap();
        let rule = FiberQuadrature::new(2, 16).unwrap();
        let t = density_experiment(
            &eu,
            &phi,
            2.0,
            3,
            &Point::new(vec![0.0, 0.0]).unwrap(),
            &DistanceProvider::closed_form(),
            &dom,
            &rule,
        )
        .unwrap();
        for v in t.column(3) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn density_gaussian_converges() {
        let eu = FinslerMetric::euclidean(2).unwrap();
        let dom = Domain::new_box(vec![-6.0, -6.0], vec![6.0, 6.0], vec![96]).unwrap();
        let rule = FiberQuadrature::new(2, 32).unwrap();
        let t = density_experiment(
            &eu,
            &ScalarField::gaussian(),
            2.0,
            4,
            &Point::new(vec![0.0, 0.0]).unwrap(),
            &DistanceProvider::closed_form(),
            &dom,
            &rule,
        )
        .unwrap();
        let h1 = t.column(3);
        for w in h1.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{h1:?}");
        }
        assert!(h1[3] < 1e-3, "{h1:?}");
    }
}
