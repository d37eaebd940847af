//! Desk-scale experiment drivers: the shrinking-fiber integrability
//! dichotomy, the non-density sharpness bound, the torus Dirichlet problem
//! and its mollified approximants, and the comparison-norm ratio.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::approx::{mollification_convergence, GridField};
use crate::bundle::{pairwise_sum, Domain, FiberQuadrature};
use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::report::Table;
use crate::sobolev::{gs_norm, sobolev_norm, ScalarField, Smoothness, SobolevSpec};

/// Sphere bundle over the strip R x (0, 1) whose fiber over (x1, x2) is a
/// circle of radius e^{-(x1)^2}, carrying arc-length measure. The fiber
/// measure 2 pi e^{-(x1)^2} is integrable over the strip while the base
/// measure is not, so constant functions lie in L^1(SM) but not L^1(M).
#[derive(Debug, Clone, Copy)]
pub struct ShrinkingFiberModel;

impl ShrinkingFiberModel {
    /// Fiber circumference over x1.
    pub fn fiber_measure(x1: f64) -> f64 {
        2.0 * PI * (-x1 * x1).exp()
    }

    /// Sampled infimum of the fiber measure over [-L, L]; attained at the
    /// strip ends, about 2 pi e^{-L^2}.
    pub fn stry(l: f64, nodes_per_unit: usize) -> f64 {
        let h = 1.0 / nodes_per_unit as f64;
        let steps = (2.0 * l * nodes_per_unit as f64).round() as usize;
        let mut inf = Self::fiber_measure(l).min(Self::fiber_measure(-l));
        for i in 0..steps {
            inf = inf.min(Self::fiber_measure(-l + (i as f64 + 0.5) * h));
        }
        inf
    }
}

/// Integrals of the constant function 1 over the truncated strip
/// [-L, L] x (0, 1): against the sphere-bundle measure (converges in L) and
/// the base measure (grows like 2L).
///
/// The x spacing is fixed at 1/nodes_per_unit rather than scaled with L, so
/// node sets for different L nest and differences of sm values are pure tail
/// integrals. Powers of two for nodes_per_unit keep the base integral exact.
pub fn fiber_decay_example(l: f64, nodes_per_unit: usize) -> Result<(f64, f64)> {
    if l < 1.0 {
        return Err(Error::InvalidArgument("strip half-length L must be >= 1".into()));
    }
    if nodes_per_unit < 8 {
        return Err(Error::InvalidArgument("need at least 8 nodes per unit".into()));
    }
    let h = 1.0 / nodes_per_unit as f64;
    let nx = (2.0 * l * nodes_per_unit as f64).round() as usize;
    let ny = 16usize;
    let hy = 1.0 / ny as f64;
    // integrand independent of x2: the y sum contributes a factor of 1
    let terms: Vec<f64> = (0..nx)
        .map(|i| {
            let x = -l + (i as f64 + 0.5) * h;
            ShrinkingFiberModel::fiber_measure(x) * h * (ny as f64 * hy)
        })
        .collect();
    let sm = pairwise_sum(&terms);
    let m = nx as f64 * h * (ny as f64 * hy);
    Ok((sm, m))
}

/// Lower bound 1/(2 + 2^{1/p'}) on the H_1^p distance from the step function
/// to any C^1 field on [-1,1] x [0,1], with 1/p + 1/p' = 1.
pub fn sharpness_bound(p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let pow = if p <= 1.0 {
        1.0
    } else {
        2.0_f64.powf((p - 1.0) / p)
    };
    Ok(1.0 / (2.0 + pow))
}

/// For each ramp width w, the H_1^p(W) distance from the step field to the
/// C^1 cubic ramp of width w on W = [-1,1] x [0,1]; every row should sit above
/// `sharpness_bound(p)` up to quadrature error.
pub fn sharpness_experiment(p: f64, widths: &[f64], resolution: usize) -> Result<(Table, f64)> {
    if widths.iter().any(|w| *w <= 0.0 || *w > 1.0) {
        return Err(Error::InvalidArgument("ramp widths must lie in (0, 1]".into()));
    }
    if resolution < 16 || resolution % 2 != 0 {
        return Err(Error::InvalidArgument(
            "sharpness grid resolution must be even and >= 16".into(),
        ));
    }
    let bound = sharpness_bound(p)?;
    let u = ScalarField::step();
    // midpoint grid on W; even resolution keeps nodes off the jump at x1 = 0
    let nx = 2 * resolution;
    let ny = resolution / 2;
    let hx = 2.0 / nx as f64;
    let hy = 1.0 / ny as f64;
    let mut table = Table::new(&["w", "h1p_err", "lp_err", "grad_lp_err"]);
    table.meta("domain", "box[-1,1]x[0,1]");
    table.meta("p", p);
    table.meta("field", "step");
    table.meta("bound", bound);
    for &w in widths {
        let ramp = ScalarField::ramp(w);
        let mut lp_terms = Vec::with_capacity(nx * ny);
        let mut grad_terms = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let x1 = -1.0 + (i as f64 + 0.5) * hx;
            let x = [x1, 0.5];
            let e = u.value(&x) - ramp.value(&x);
            // the step's weak gradient vanishes off the jump set
            let de = ramp.gradient(&x)[0];
            lp_terms.push(e.abs().powf(p) * hx * hy * ny as f64);
            grad_terms.push(de.abs().powf(p) * hx * hy * ny as f64);
        }
        let lp = pairwise_sum(&lp_terms).powf(1.0 / p);
        let grad = pairwise_sum(&grad_terms).powf(1.0 / p);
        table.push_row(&[w, lp + grad, lp, grad]);
    }
    Ok((table, bound))
}

/// Spectral solution of the Dirichlet equation Delta u = f on the flat
/// square torus [0, 2 pi)^2, Delta being the divergence of the gradient.
#[derive(Clone)]
pub struct DirichletSolution {
    /// Solution samples on the n x n midpoint grid.
    pub grid: GridField,
    /// Periodic bilinear interpolant of the samples.
    pub field: ScalarField,
    /// sup-norm of Delta u - f on the grid, with Delta applied spectrally.
    pub residual: f64,
}

pub fn dirichlet_solve_torus(f: &ScalarField, n: usize) -> Result<DirichletSolution> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(
            "torus grid size must be a power of two >= 16".into(),
        ));
    }
    let domain = Domain::new_torus(vec![2.0 * PI, 2.0 * PI], vec![n])?;
    let samples = GridField::sample(f, &domain);
    let mean = pairwise_sum(&samples.values) / (n * n) as f64;
    if mean.abs() >= 1e-10 {
        return Err(Error::Hypothesis(format!(
            "the source must have zero mean over the torus; got {mean:e}"
        )));
    }
    let mut spectrum: Vec<Complex<f64>> = samples
        .values
        .iter()
        .map(|v| Complex::new(*v, 0.0))
        .collect();
    fft2(&mut spectrum, n, false);
    let freq = |i: usize| -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    let mut u_hat = spectrum.clone();
    for (idx, c) in u_hat.iter_mut().enumerate() {
        let k1 = freq(idx / n);
        let k2 = freq(idx % n);
        let k2norm = k1 * k1 + k2 * k2;
        *c = if k2norm == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            *c / (-k2norm)
        };
    }
    let mut u_vals = u_hat.clone();
    fft2(&mut u_vals, n, true);
    let values: Vec<f64> = u_vals.iter().map(|c| c.re / (n * n) as f64).collect();
    // residual through the same transform pair
    let mut lap = u_hat;
    for (idx, c) in lap.iter_mut().enumerate() {
        let k1 = freq(idx / n);
        let k2 = freq(idx % n);
        *c *= -(k1 * k1 + k2 * k2);
    }
    fft2(&mut lap, n, true);
    let residual = lap
        .iter()
        .zip(&samples.values)
        .map(|(c, f)| (c.re / (n * n) as f64 - f).abs())
        .fold(0.0, f64::max);
    let grid = GridField::from_values(domain, values)?;
    let field = bilinear_interpolant("dirichlet_u", &grid);
    Ok(DirichletSolution {
        grid,
        field,
        residual,
    })
}

fn bilinear_interpolant(name: &str, grid: &GridField) -> ScalarField {
    let values = grid.values.clone();
    let n = grid.domain.resolution[0];
    let h = grid.domain.spacing();
    let lo = grid.domain.lo.clone();
    ScalarField::new(name, Smoothness::DiscreteGrid, move |x: &[f64]| {
        let mut corner = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for ax in 0..2 {
            let t = (x[ax] - lo[ax]) / h[ax] - 0.5;
            let base = t.floor();
            corner[ax] = (base.rem_euclid(n as f64)) as usize % n;
            frac[ax] = t - base;
        }
        let at = |i: usize, j: usize| values[(i % n) * n + (j % n)];
        let (i, j) = (corner[0], corner[1]);
        let (s, t) = (frac[0], frac[1]);
        at(i, j) * (1.0 - s) * (1.0 - t)
            + at(i + 1, j) * s * (1.0 - t)
            + at(i, j + 1) * (1.0 - s) * t
            + at(i + 1, j + 1) * s * t
    })
}

/// In-place 2D FFT on an n x n row-major grid. No normalization is applied;
/// divide by n^2 after a forward/inverse round trip.
fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// Checks int grad u . grad v + int f v = 0 on the torus against `count`
/// seeded trigonometric test fields; returns the largest defect. The gradient
/// of u is taken spectrally, the lattice sum is exact for trigonometric
/// polynomials below the Nyquist frequency.
pub fn dirichlet_weak_form_defect(
    solution: &DirichletSolution,
    f: &ScalarField,
    count: usize,
    seed: u64,
) -> Result<f64> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let n = solution.grid.domain.resolution[0];
    let cell = solution.grid.domain.cell_volume();
    let mut spectrum: Vec<Complex<f64>> = solution
        .grid
        .values
        .iter()
        .map(|v| Complex::new(*v, 0.0))
        .collect();
    fft2(&mut spectrum, n, false);
    let freq = |i: usize| -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    let mut gx = spectrum.clone();
    let mut gy = spectrum;
    for idx in 0..n * n {
        let k1 = freq(idx / n);
        let k2 = freq(idx % n);
        gx[idx] *= Complex::new(0.0, k1);
        gy[idx] *= Complex::new(0.0, k2);
    }
    fft2(&mut gx, n, true);
    fft2(&mut gy, n, true);
    let scale = 1.0 / (n * n) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (k1, k2) = (rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64);
        let (m1, m2) = (rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64);
        let v = move |x: &[f64]| a * (k1 * x[0] + k2 * x[1]).sin() + b * (m1 * x[0] + m2 * x[1]).cos();
        let dv = move |x: &[f64]| {
            let s = a * (k1 * x[0] + k2 * x[1]).cos();
            let c = -b * (m1 * x[0] + m2 * x[1]).sin();
            [s * k1 + c * m1, s * k2 + c * m2]
        };
        let terms: Vec<f64> = (0..n * n)
            .map(|idx| {
                let x = solution.grid.domain.cell_center(idx).unwrap();
                let g = dv(&x);
                (gx[idx].re * scale * g[0] + gy[idx].re * scale * g[1] + f.value(&x) * v(&x)) * cell
            })
            .collect();
        worst = worst.max(pairwise_sum(&terms).abs());
    }
    Ok(worst)
}

/// Mollified approximants of a torus Dirichlet solution: rows
/// (eps, lp_err, h1p_err, young_ratio), decreasing toward the grid floor.
pub fn dirichlet_approximation(u: &GridField, eps_list: &[f64]) -> Result<Table> {
    let mut table = mollification_convergence(u, 2.0, eps_list)?;
    table.meta("laplacian", "divergence of gradient");
    Ok(table)
}

/// H_1^2 norm next to the reversible comparison norm, with their ratio.
pub fn compare_gs(
    metric: &FinslerMetric,
    u: &ScalarField,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<(f64, f64, f64)> {
    let spec = SobolevSpec::new(1, 2.0)?;
    let ours = sobolev_norm(metric, u, &spec, domain, rule)?;
    let gs = gs_norm(metric, u, domain, rule)?;
    Ok((ours, gs, ours / gs))
}
