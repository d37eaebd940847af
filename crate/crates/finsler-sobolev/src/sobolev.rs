//! L^p and H_k^p norms of scalar fields, k in {0, 1}, plus the comparison
//! norm built from the dual Finsler norm of the gradient.
//!
//! For pullback fields u = u o pi the vertical derivative vanishes, the
//! horizontal frame reduces delta u/delta x^i to the plain partial, and the
//! Sasakian inner product of horizontal lifts contracts with g^{ij}. No
//! connection coefficients are needed at first order.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bundle::{integrate_m, integrate_sm, Domain, FiberQuadrature};
use crate::error::{Error, Result};
use crate::metric::{dot, norm, FinslerMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    Piecewise,
    DiscreteGrid,
}

/// A function on the base manifold, with an optional analytic gradient.
/// Fields without one are differentiated by central differences with step
/// 1e-6 (1 + |x|).
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    pub smoothness: Smoothness,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        smoothness: Smoothness,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            smoothness,
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        let h = 1e-6 * (1.0 + norm(x));
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (self.value(&xp) - self.value(&xm)) / (2.0 * h)
            })
            .collect()
    }

    pub fn zero() -> Self {
        Self::new("zero", Smoothness::Smooth, |_| 0.0).with_gradient(|x| vec![0.0; x.len()])
    }

    /// e^{-|x|^2}
    pub fn gaussian() -> Self {
        Self::new("gaussian", Smoothness::Smooth, |x| (-dot(x, x)).exp()).with_gradient(|x| {
            let v = (-dot(x, x)).exp();
            x.iter().map(|c| -2.0 * c * v).collect()
        })
    }

    /// x^1
    pub fn coordinate() -> Self {
        Self::new("coordinate", Smoothness::Smooth, |x| x[0]).with_gradient(|x| {
            let mut g = vec![0.0; x.len()];
            g[0] = 1.0;
            g
        })
    }

    /// 1 for x^1 > 0, 0 otherwise; gradient 0 away from the jump.
    pub fn step() -> Self {
        Self::new(
            "step",
            Smoothness::Piecewise,
            |x| if x[0] > 0.0 { 1.0 } else { 0.0 },
        )
        .with_gradient(|x| vec![0.0; x.len()])
    }

    /// C^1 cubic ramp of width w centered at x^1 = 0: smoothstep((x^1 + w/2)/w).
    pub fn ramp(w: f64) -> Self {
        let val = move |x: &[f64]| {
            let t = ((x[0] + 0.5 * w) / w).clamp(0.0, 1.0);
            t * t * (3.0 - 2.0 * t)
        };
        Self::new(format!("ramp({w})"), Smoothness::Smooth, val).with_gradient(move |x| {
            let t = (x[0] + 0.5 * w) / w;
            let mut g = vec![0.0; x.len()];
            if (0.0..=1.0).contains(&t) {
                g[0] = 6.0 * t * (1.0 - t) / w;
            }
            g
        })
    }

    /// cos(x^1)
    pub fn cos1() -> Self {
        Self::new("cos1", Smoothness::Smooth, |x| x[0].cos()).with_gradient(|x| {
            let mut g = vec![0.0; x.len()];
            g[0] = -x[0].sin();
            g
        })
    }

    /// cos(x^1) cos(x^2)
    pub fn cos1cos2() -> Self {
        Self::new("cos1cos2", Smoothness::Smooth, |x| x[0].cos() * x[1].cos()).with_gradient(|x| {
            vec![-x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin()]
        })
    }

    /// Named catalog used by the CLI: gaussian, coordinate, step, ramp(w),
    /// zero, one, cos1, cos1cos2.
    pub fn from_catalog(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Self::gaussian()),
            "coordinate" | "x1" => Some(Self::coordinate()),
            "step" => Some(Self::step()),
            "zero" => Some(Self::zero()),
            "one" => Some(
                Self::new("one", Smoothness::Smooth, |_| 1.0)
                    .with_gradient(|x| vec![0.0; x.len()]),
            ),
            "cos1" => Some(Self::cos1()),
            "cos1cos2" => Some(Self::cos1cos2()),
            _ => {
                let name = name.trim();
                if let Some(rest) = name.strip_prefix("ramp(") {
                    let w: f64 = rest.strip_suffix(')')?.parse().ok()?;
                    if w > 0.0 && w <= 1.0 {
                        return Some(Self::ramp(w));
                    }
                }
                None
            }
        }
    }
}

/// The pair (k, p) selecting the H_k^p norm; k in {0, 1}, p >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevSpec {
    pub k: usize,
    pub p: f64,
}

impl SobolevSpec {
    pub fn new(k: usize, p: f64) -> Result<Self> {
        if k > 1 {
            return Err(Error::UnsupportedOrder(k));
        }
        if p < 1.0 {
            return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
        }
        Ok(Self { k, p })
    }
}

/// |grad u|(x, y) = sqrt(g^{ij}(x, y) d_i u d_j u); 0-homogeneous in y, and
/// independent of y for Riemannian metrics.
pub fn horizontal_gradient_norm(
    metric: &FinslerMetric,
    u: &ScalarField,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let g = metric.fundamental_tensor(x, y)?;
    let du = u.gradient(x);
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::MetricValidity("singular fundamental tensor".into()))?;
    let rhs = nalgebra::DVector::from_column_slice(&du);
    let w = chol.solve(&rhs);
    Ok(rhs.dot(&w).max(0.0).sqrt())
}

/// (int_SM |u|^p dV_SM)^{1/p}
pub fn lp_norm_sm(
    metric: &FinslerMetric,
    u: &ScalarField,
    p: f64,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let v = integrate_sm(metric, domain, |x, _| Ok(u.value(x).abs().powf(p)), rule)?;
    Ok(v.max(0.0).powf(1.0 / p))
}

/// (int_M |u|^p dV_F)^{1/p}
pub fn lp_norm_m(
    metric: &FinslerMetric,
    u: &ScalarField,
    p: f64,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let v = integrate_m(metric, domain, |x| Ok(u.value(x).abs().powf(p)), rule)?;
    Ok(v.max(0.0).powf(1.0 / p))
}

/// (int_SM |grad u|^p dV_SM)^{1/p}
pub fn gradient_lp_norm_sm(
    metric: &FinslerMetric,
    u: &ScalarField,
    p: f64,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<f64> {
    let v = integrate_sm(
        metric,
        domain,
        |x, th| Ok(horizontal_gradient_norm(metric, u, x, th)?.powf(p)),
        rule,
    )?;
    Ok(v.max(0.0).powf(1.0 / p))
}

/// ||u|| = sum_{j=0..k} (int_SM |grad^j u|^p dV_SM)^{1/p}
pub fn sobolev_norm(
    metric: &FinslerMetric,
    u: &ScalarField,
    spec: &SobolevSpec,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<f64> {
    if spec.k > 1 {
        return Err(Error::UnsupportedOrder(spec.k));
    }
    let mut total = lp_norm_sm(metric, u, spec.p, domain, rule)?;
    if spec.k == 1 {
        total += gradient_lp_norm_sm(metric, u, spec.p, domain, rule)?;
    }
    Ok(total)
}

/// Dual norm F*(x, xi) = max { xi . y : F(x, y) = 1 }, by a coarse fiber scan
/// refined with golden-section search (n = 2).
pub fn dual_norm(metric: &FinslerMetric, x: &[f64], xi: &[f64]) -> Result<f64> {
    if norm(xi) == 0.0 {
        return Ok(0.0);
    }
    let n = metric.dimension();
    let pay = |theta: &[f64]| -> Result<f64> {
        let f = metric.eval(x, theta)?;
        Ok(dot(xi, theta) / f)
    };
    match n {
        1 => {
            let a = pay(&[1.0])?;
            let b = pay(&[-1.0])?;
            Ok(a.max(b))
        }
        2 => {
            let h = |t: f64| pay(&[t.cos(), t.sin()]);
            // seed at the Euclidean-normalized gradient direction, plus a scan
            let mut best_t = xi[1].atan2(xi[0]);
            let mut best = h(best_t)?;
            for k in 0..64 {
                let t = 2.0 * PI * k as f64 / 64.0;
                let v = h(t)?;
                if v > best {
                    best = v;
                    best_t = t;
                }
            }
            // golden-section on the bracketing arc
            let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
            let mut lo = best_t - 2.0 * PI / 64.0;
            let mut hi = best_t + 2.0 * PI / 64.0;
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let mut fc = h(c)?;
            let mut fd = h(d)?;
            for _ in 0..80 {
                if fc > fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = h(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = h(d)?;
                }
            }
            Ok(best.max(fc).max(fd))
        }
        3 => {
            let mut best = f64::NEG_INFINITY;
            for th in crate::metric::unit_directions(3, 16384) {
                best = best.max(pay(&th)?);
            }
            Ok(best)
        }
        _ => unreachable!(),
    }
}

/// The closed-reversible comparison norm:
/// (int_M u^2 dV_F)^{1/2} + (int_M F*(du)^2 dV_F)^{1/2}.
///
/// Refused for irreversible metrics; for those the expression is not even a
/// vector-space norm.
pub fn gs_norm(
    metric: &FinslerMetric,
    u: &ScalarField,
    domain: &Domain,
    rule: &FiberQuadrature,
) -> Result<f64> {
    if !metric.is_reversible() {
        return Err(Error::Irreversible(format!(
            "the comparison norm is defined for reversible metrics; {} is not",
            metric.name()
        )));
    }
    let l2 = integrate_m(metric, domain, |x| Ok(u.value(x).powi(2)), rule)?;
    let grad = integrate_m(
        metric,
        domain,
        |x| {
            let du = u.gradient(x);
            Ok(dual_norm(metric, x, &du)?.powi(2))
        },
        rule,
    )?;
    Ok(l2.max(0.0).sqrt() + grad.max(0.0).sqrt())
}
