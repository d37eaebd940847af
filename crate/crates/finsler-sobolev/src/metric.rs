//! The metric zoo: concrete Finsler structures with known closed forms.
//!
//! Every metric here is defined on a single global chart: a box in R^n for
//! the flat families, the open unit ball for the Funk metric. Dimensions are
//! capped at n <= 3.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Guard margin for the Funk unit-ball domain: queries with |x| > 1 - FUNK_GUARD error.
pub const FUNK_GUARD: f64 = 1e-9;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension {} not in 1..=3",
                coords.len()
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coordinates {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.dim() {
            return Err(Error::InvalidArgument(format!(
                "vector dimension {} does not match base dimension {}",
                components.len(),
                base.dim()
            )));
        }
        if !components.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite components {components:?}"
            )));
        }
        Ok(Self { base, components })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conformal factor lambda(x) for metrics F = e^{lambda} |y|, with analytic gradient.
#[derive(Clone)]
pub struct ConformalFactor {
    pub name: String,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl ConformalFactor {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }

    /// lambda(x) = scale * x^1.
    pub fn linear(scale: f64) -> Self {
        Self::new(
            format!("linear({scale})"),
            move |x: &[f64]| scale * x[0],
            move |x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[0] = scale;
                g
            },
        )
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformalFactor({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum MetricKind {
    Euclidean,
    ConformalRiemannian(ConformalFactor),
    Randers { a: DMatrix<f64>, b: Vec<f64> },
    Funk,
    QuarticPerturbed { epsilon: f64 },
    Reversed(Box<FinslerMetric>),
}

#[derive(Debug, Clone)]
pub struct FinslerMetric {
    dimension: usize,
    kind: MetricKind,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=3")));
    }
    Ok(())
}

impl FinslerMetric {
    pub fn euclidean(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            dimension: n,
            kind: MetricKind::Euclidean,
        })
    }

    pub fn conformal(n: usize, factor: ConformalFactor) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            dimension: n,
            kind: MetricKind::ConformalRiemannian(factor),
        })
    }

    /// Randers metric F = sqrt(a(y,y)) + b.y with constant coefficients.
    ///
    /// Requires a symmetric positive definite and |b|_a < 1, which guarantees
    /// F > 0 for y != 0 and a positive definite fundamental tensor.
    pub fn randers(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        check_dim(n)?;
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "Randers a must be {n}x{n}"
            )));
        }
        let max_asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (a[(i, j)] - a[(j, i)]).abs())
            .fold(0.0_f64, f64::max);
        if max_asym > 1e-12 {
            return Err(Error::MetricValidity("Randers a is not symmetric".into()));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::MetricValidity("Randers a is not positive definite".into()))?;
        // |b|_a = sqrt(b . a^{-1} b)
        let bvec = nalgebra::DVector::from_column_slice(&b);
        let ainv_b = chol.solve(&bvec);
        let b_norm = bvec.dot(&ainv_b).sqrt();
        if b_norm >= 1.0 {
            return Err(Error::MetricValidity(format!(
                "Randers |b|_a = {b_norm} must be < 1"
            )));
        }
        Ok(Self {
            dimension: n,
            kind: MetricKind::Randers { a, b },
        })
    }

    /// Randers with a = identity.
    pub fn randers_euclidean(b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        check_dim(n)?;
        Self::randers(DMatrix::identity(n, n), b)
    }

    /// Funk metric on the open unit ball of R^n.
    pub fn funk(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            dimension: n,
            kind: MetricKind::Funk,
        })
    }

    /// F^2 = |y|^2 + eps (y^1)^4 / |y|^2: reversible, non-Riemannian, flat.
    pub fn quartic_perturbed(n: usize, epsilon: f64) -> Result<Self> {
        check_dim(n)?;
        if !(0.0..=0.2).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "quartic epsilon {epsilon} must lie in [0, 0.2]"
            )));
        }
        Ok(Self {
            dimension: n,
            kind: MetricKind::QuarticPerturbed { epsilon },
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MetricKind::Euclidean => "euclidean".into(),
            MetricKind::ConformalRiemannian(f) => format!("conformal[{}]", f.name),
            MetricKind::Randers { b, .. } => format!("randers[b={b:?}]"),
            MetricKind::Funk => "funk".into(),
            MetricKind::QuarticPerturbed { epsilon } => format!("quartic[eps={epsilon}]"),
            MetricKind::Reversed(m) => format!("reversed[{}]", m.name()),
        }
    }

    pub fn is_reversible(&self) -> bool {
        match &self.kind {
            MetricKind::Euclidean
            | MetricKind::ConformalRiemannian(_)
            | MetricKind::QuarticPerturbed { .. } => true,
            MetricKind::Randers { b, .. } => b.iter().all(|c| *c == 0.0),
            MetricKind::Funk => false,
            MetricKind::Reversed(m) => m.is_reversible(),
        }
    }

    pub fn domain_contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            MetricKind::Funk => norm(x) <= 1.0 - FUNK_GUARD,
            MetricKind::Reversed(m) => m.domain_contains(x),
            _ => true,
        }
    }

    pub fn domain_check(&self, x: &[f64]) -> Result<()> {
        if self.domain_contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                point: x.to_vec(),
                reason: "Funk metric lives on the open unit ball".into(),
            })
        }
    }

    /// F(x, y).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.domain_check(x)?;
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            MetricKind::Euclidean => norm(y),
            MetricKind::ConformalRiemannian(f) => f.value(x).exp() * norm(y),
            MetricKind::Randers { a, b } => {
                let mut quad = 0.0;
                for i in 0..y.len() {
                    for j in 0..y.len() {
                        quad += a[(i, j)] * y[i] * y[j];
                    }
                }
                quad.sqrt() + dot(b, y)
            }
            MetricKind::Funk => {
                let x2 = dot(x, x);
                let y2 = dot(y, y);
                let xy = dot(x, y);
                let denom = 1.0 - x2;
                (((denom * y2 + xy * xy).sqrt()) + xy) / denom
            }
            MetricKind::QuarticPerturbed { epsilon } => {
                let y2 = dot(y, y);
                if y2 == 0.0 {
                    0.0
                } else {
                    (y2 + epsilon * y[0].powi(4) / y2).sqrt()
                }
            }
            MetricKind::Reversed(m) => {
                let neg: Vec<f64> = y.iter().map(|c| -c).collect();
                m.eval_unchecked(x, &neg)
            }
        }
    }

    pub fn eval_tv(&self, v: &TangentVector) -> Result<f64> {
        self.eval(&v.base.coords, &v.components)
    }

    /// Fundamental tensor g_ij(x, y) = 1/2 Hess_y F^2.
    ///
    /// Analytic for Euclidean, conformal, Randers and the quartic
    /// perturbation; central finite differences of F^2/2 for the rest.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.domain_check(x)?;
        if y.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidArgument(
                "fundamental tensor undefined at y = 0".into(),
            ));
        }
        let n = self.dimension;
        let g = match &self.kind {
            MetricKind::Euclidean => DMatrix::identity(n, n),
            MetricKind::ConformalRiemannian(f) => {
                DMatrix::identity(n, n) * (2.0 * f.value(x)).exp()
            }
            MetricKind::Randers { a, b } => {
                // g = (F/alpha)(a - ay ay^T / alpha^2) + l l^T, l_i = (ay)_i/alpha + b_i
                let mut ay = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        ay[i] += a[(i, j)] * y[j];
                    }
                }
                let alpha = dot(&ay, y).sqrt();
                let f_val = alpha + dot(b, y);
                let mut g = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let ell_i = ay[i] / alpha + b[i];
                        let ell_j = ay[j] / alpha + b[j];
                        g[(i, j)] = (f_val / alpha) * (a[(i, j)] - ay[i] * ay[j] / (alpha * alpha))
                            + ell_i * ell_j;
                    }
                }
                g
            }
            MetricKind::QuarticPerturbed { epsilon } => {
                // g = I + eps [6 y1^2 e1 e1^T / r^2
                //              - 4 y1^3 (e1 y^T + y e1^T) / r^4
                //              - y1^4 I / r^4 + 4 y1^4 y y^T / r^6]
                let r2 = dot(y, y);
                let y1 = y[0];
                let mut g = DMatrix::identity(n, n);
                g[(0, 0)] += epsilon * 6.0 * y1 * y1 / r2;
                for i in 0..n {
                    let t = epsilon * 4.0 * y1.powi(3) * y[i] / (r2 * r2);
                    g[(0, i)] -= t;
                    g[(i, 0)] -= t;
                    g[(i, i)] -= epsilon * y1.powi(4) / (r2 * r2);
                    for j in 0..n {
                        g[(i, j)] += epsilon * 4.0 * y1.powi(4) * y[i] * y[j] / (r2 * r2 * r2);
                    }
                }
                g
            }
            MetricKind::Reversed(m) => {
                let neg: Vec<f64> = y.iter().map(|c| -c).collect();
                return m.fundamental_tensor(x, &neg);
            }
            _ => self.fd_fundamental_tensor(x, y),
        };
        // SPD check: an indefinite result signals an invalid zoo parameterization.
        if g.clone().cholesky().is_none() {
            return Err(Error::MetricValidity(format!(
                "fundamental tensor not positive definite for {} at x={x:?}, y={y:?}",
                self.name()
            )));
        }
        Ok(g)
    }

    fn fd_fundamental_tensor(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = self.dimension;
        let h = f64::EPSILON.cbrt() * norm(y).max(1.0);
        let phi = |yy: &[f64]| {
            let f = self.eval_unchecked(x, yy);
            0.5 * f * f
        };
        let mut g = DMatrix::zeros(n, n);
        let p0 = phi(y);
        for i in 0..n {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[i] += h;
            ym[i] -= h;
            g[(i, i)] = (phi(&yp) - 2.0 * p0 + phi(&ym)) / (h * h);
            for j in (i + 1)..n {
                let mut ypp = y.to_vec();
                let mut ypm = y.to_vec();
                let mut ymp = y.to_vec();
                let mut ymm = y.to_vec();
                ypp[i] += h;
                ypp[j] += h;
                ypm[i] += h;
                ypm[j] -= h;
                ymp[i] -= h;
                ymp[j] += h;
                ymm[i] -= h;
                ymm[j] -= h;
                let v = (phi(&ypp) - phi(&ypm) - phi(&ymp) + phi(&ymm)) / (4.0 * h * h);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// det g_ij / F^n at (x, theta): the fiber density of the chart-form
    /// sphere-bundle integral.
    pub fn fiber_density(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let g = self.fundamental_tensor(x, theta)?;
        let f = self.eval(x, theta)?;
        Ok(g.determinant() / f.powi(self.dimension as i32))
    }

    /// Spray coefficients G^i(x, y); geodesics solve xdd + 2G(x, xd) = 0.
    pub fn spray(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.domain_check(x)?;
        let n = self.dimension;
        match &self.kind {
            MetricKind::Euclidean
            | MetricKind::Randers { .. }
            | MetricKind::QuarticPerturbed { .. } => Ok(vec![0.0; n]),
            MetricKind::ConformalRiemannian(fac) => {
                // G^i = (y . grad lambda) y^i - 1/2 |y|^2 d_i lambda
                let gl = fac.grad(x);
                let ydl = dot(y, &gl);
                let y2 = dot(y, y);
                Ok((0..n).map(|i| ydl * y[i] - 0.5 * y2 * gl[i]).collect())
            }
            // Funk metrics are projectively flat with G^i = 1/2 F y^i.
            MetricKind::Funk => {
                let f = self.eval_unchecked(x, y);
                Ok(y.iter().map(|c| 0.5 * f * c).collect())
            }
            MetricKind::Reversed(m) => {
                let neg: Vec<f64> = y.iter().map(|c| -c).collect();
                m.spray(x, &neg)
            }
        }
    }

    /// The metric with F~(x, y) = F(x, -y). Involution.
    pub fn reverse(&self) -> FinslerMetric {
        let kind = match &self.kind {
            MetricKind::Euclidean => MetricKind::Euclidean,
            MetricKind::ConformalRiemannian(f) => MetricKind::ConformalRiemannian(f.clone()),
            MetricKind::QuarticPerturbed { epsilon } => MetricKind::QuarticPerturbed {
                epsilon: *epsilon,
            },
            MetricKind::Randers { a, b } => MetricKind::Randers {
                a: a.clone(),
                b: b.iter().map(|c| -c).collect(),
            },
            MetricKind::Funk => MetricKind::Reversed(Box::new(self.clone())),
            MetricKind::Reversed(m) => return (**m).clone(),
        };
        FinslerMetric {
            dimension: self.dimension,
            kind,
        }
    }

    /// Exact distance where the zoo provides one, None otherwise.
    ///
    /// The flat families (Euclidean, Randers, quartic) have straight-line
    /// geodesics, so d(x1, x2) = F(x2 - x1). Funk uses the boundary-ray
    /// formula d(x1, x2) = ln(|x1 - a| / |x2 - a|) with a the exit point of
    /// the ray from x1 through x2.
    pub fn closed_form_distance(&self, x1: &[f64], x2: &[f64]) -> Result<Option<f64>> {
        self.domain_check(x1)?;
        self.domain_check(x2)?;
        let delta: Vec<f64> = x2.iter().zip(x1).map(|(b, a)| b - a).collect();
        match &self.kind {
            MetricKind::Euclidean
            | MetricKind::Randers { .. }
            | MetricKind::QuarticPerturbed { .. } => Ok(Some(self.eval_unchecked(x1, &delta))),
            MetricKind::Funk => {
                if norm(&delta) == 0.0 {
                    return Ok(Some(0.0));
                }
                // largest t with |x1 + t delta| = 1
                let aa = dot(&delta, &delta);
                let bb = 2.0 * dot(x1, &delta);
                let cc = dot(x1, x1) - 1.0;
                let t = (-bb + (bb * bb - 4.0 * aa * cc).sqrt()) / (2.0 * aa);
                let exit: Vec<f64> = x1.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                let d1: Vec<f64> = x1.iter().zip(&exit).map(|(a, e)| a - e).collect();
                let d2: Vec<f64> = x2.iter().zip(&exit).map(|(a, e)| a - e).collect();
                Ok(Some((norm(&d1) / norm(&d2)).ln()))
            }
            MetricKind::Reversed(m) => m.closed_form_distance(x2, x1),
            MetricKind::ConformalRiemannian(_) => Ok(None),
        }
    }
}

/// Sup over sample points and fiber directions of |F(x, th) - F(x, -th)|
/// over Euclidean-unit directions th.
pub fn reversibility_defect(metric: &FinslerMetric, sample_points: &[Point]) -> Result<f64> {
    if sample_points.is_empty() {
        return Err(Error::InvalidArgument(
            "reversibility_defect needs at least one sample point".into(),
        ));
    }
    let dirs = unit_directions(metric.dimension(), 720);
    let mut sup: f64 = 0.0;
    for p in sample_points {
        for th in &dirs {
            let fp = metric.eval(&p.coords, th)?;
            let neg: Vec<f64> = th.iter().map(|c| -c).collect();
            let fm = metric.eval(&p.coords, &neg)?;
            sup = sup.max((fp - fm).abs());
        }
    }
    Ok(sup)
}

/// Max relative deviation of F(x, lam y) from lam F(x, y).
pub fn check_homogeneity(
    metric: &FinslerMetric,
    samples: &[TangentVector],
    lambdas: &[f64],
) -> Result<f64> {
    if lambdas.iter().any(|l| *l <= 0.0) {
        return Err(Error::InvalidArgument("lambdas must be positive".into()));
    }
    let mut worst: f64 = 0.0;
    for v in samples {
        let f = metric.eval(&v.base.coords, &v.components)?;
        if f == 0.0 {
            continue;
        }
        for lam in lambdas {
            let scaled: Vec<f64> = v.components.iter().map(|c| lam * c).collect();
            let fs = metric.eval(&v.base.coords, &scaled)?;
            worst = worst.max((fs - lam * f).abs() / (lam * f));
        }
    }
    Ok(worst)
}

/// A deterministic scan of (near-)uniform unit directions on S^{n-1}.
pub fn unit_directions(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..resolution)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let m = (resolution as f64).sqrt().ceil() as usize;
            let mut out = Vec::new();
            for i in 0..m {
                // offset to avoid the poles
                let phi = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                for j in 0..(2 * m) {
                    let psi = std::f64::consts::PI * j as f64 / m as f64;
                    out.push(vec![
                        phi.sin() * psi.cos(),
                        phi.sin() * psi.sin(),
                        phi.cos(),
                    ]);
                }
            }
            out
        }
        _ => unreachable!("dimension capped at 3"),
    }
}

#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub max_homogeneity_deviation: f64,
    pub max_tensor_asymmetry: f64,
    pub min_tensor_eigenvalue: f64,
    pub min_f_positive: f64,
}

/// Metric-axiom sweep over the given (x, y) samples.
pub fn validate_samples(
    metric: &FinslerMetric,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<ValidityReport> {
    let lambdas = [0.5, 2.0, 10.0];
    let mut max_dev: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut min_f = f64::INFINITY;
    for (x, y) in samples {
        let f = metric.eval(x, y)?;
        min_f = min_f.min(f);
        for lam in lambdas {
            let scaled: Vec<f64> = y.iter().map(|c| lam * c).collect();
            let fs = metric.eval(x, &scaled)?;
            max_dev = max_dev.max((fs - lam * f).abs() / (lam * f));
        }
        let g = metric.fundamental_tensor(x, y)?;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                max_asym = max_asym.max((g[(i, j)] - g[(j, i)]).abs());
            }
        }
        let eig = g.symmetric_eigenvalues();
        min_eig = min_eig.min(eig.min());
    }
    Ok(ValidityReport {
        max_homogeneity_deviation: max_dev,
        max_tensor_asymmetry: max_asym,
        min_tensor_eigenvalue: min_eig,
        min_f_positive: min_f,
    })
}
