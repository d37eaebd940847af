//! Flat `key = value` run configuration: UTF-8 text, `#` comments, every
//! problem reported with its line number, and all problems reported at once.

use crate::bundle::{Domain, FiberQuadrature};
use crate::error::Result;
use crate::geodesics::DistanceProvider;
use crate::metric::{ConformalFactor, FinslerMetric};
use crate::sobolev::{ScalarField, SobolevSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parsed and validated run parameters with defaults filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: String,

    pub metric_kind: String,
    pub metric_dim: usize,
    pub metric_b: Vec<f64>,
    pub metric_epsilon: f64,
    pub metric_lambda: f64,

    pub domain_kind: String,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub domain_res: usize,
    pub domain_radius: f64,

    pub fiber_res: usize,
    pub sobolev_k: usize,
    pub sobolev_p: f64,

    pub distance_tier: String,
    pub distance_grid_n: usize,
    pub distance_iters: usize,

    pub field: String,

    pub density_jmax: usize,
    pub mollify_eps: Vec<f64>,

    pub fiber_decay_l: f64,
    pub fiber_decay_nodes: usize,

    pub sharpness_widths: Vec<f64>,
    pub sharpness_res: usize,

    pub dirichlet_n: usize,
    pub dirichlet_f: String,
    pub dirichlet_eps: Vec<f64>,

    pub geodesic_start: Vec<f64>,
    pub geodesic_velocity: Vec<f64>,
    pub geodesic_time: f64,
    pub geodesic_steps: usize,

    pub check_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "norm".into(),
            metric_kind: "euclidean".into(),
            metric_dim: 2,
            metric_b: Vec::new(),
            metric_epsilon: 0.1,
            metric_lambda: 0.0,
            domain_kind: "box".into(),
            domain_lo: vec![-6.0, -6.0],
            domain_hi: vec![6.0, 6.0],
            domain_res: 128,
            domain_radius: 1.0,
            fiber_res: 64,
            sobolev_k: 1,
            sobolev_p: 2.0,
            distance_tier: "closed_form".into(),
            distance_grid_n: 64,
            distance_iters: 8,
            field: "gaussian".into(),
            density_jmax: 8,
            mollify_eps: vec![2.0, 1.0, 0.5],
            fiber_decay_l: 5.0,
            fiber_decay_nodes: 256,
            sharpness_widths: (1..=10).map(|k| k as f64 / 10.0).collect(),
            sharpness_res: 400,
            dirichlet_n: 512,
            dirichlet_f: "cos1".into(),
            dirichlet_eps: vec![0.5, 0.25, 0.125, 0.0625],
            geodesic_start: vec![0.0, 0.0],
            geodesic_velocity: vec![1.0, 0.0],
            geodesic_time: 1.0,
            geodesic_steps: 128,
            check_samples: 200,
        }
    }
}

const EXPERIMENTS: &[&str] = &[
    "norm",
    "density",
    "mollify",
    "geodesic",
    "fiber-decay",
    "sharpness",
    "dirichlet",
    "check",
];
const METRIC_KINDS: &[&str] = &["euclidean", "conformal", "randers", "funk", "reversed-funk", "quartic"];
const TIERS: &[&str] = &["closed_form", "grid_dijkstra", "curve_descent"];

pub fn parse_config(text: &str) -> std::result::Result<RunConfig, Vec<ConfigIssue>> {
    let mut cfg = RunConfig::default();
    let mut issues = Vec::new();
    let mut saw_b = false;
    let mut randers_line = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(ConfigIssue {
                line: lineno,
                message: format!("expected 'key = value', got '{line}'"),
            });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let mut issue = |message: String| {
            issues.push(ConfigIssue {
                line: lineno,
                message,
            })
        };
        match key {
            "experiment" => {
                if EXPERIMENTS.contains(&value) {
                    cfg.experiment = value.into();
                } else {
                    issue(format!(
                        "unknown experiment '{value}' (one of {EXPERIMENTS:?})"
                    ));
                }
            }
            "metric.kind" => {
                if METRIC_KINDS.contains(&value) {
                    cfg.metric_kind = value.into();
                    if value == "randers" {
                        randers_line = lineno;
                    }
                } else {
                    issue(format!("unknown metric kind '{value}' (one of {METRIC_KINDS:?})"));
                }
            }
            "metric.dim" => match parse_usize(value) {
                Some(d) if (1..=3).contains(&d) => cfg.metric_dim = d,
                _ => issue(format!("metric.dim '{value}' must be an integer in 1..=3")),
            },
            "metric.b" => match parse_list(value) {
                Some(v) if !v.is_empty() => {
                    cfg.metric_b = v;
                    saw_b = true;
                }
                _ => issue(format!("metric.b '{value}' must be a comma-separated number list")),
            },
            "metric.epsilon" => match parse_f64(value) {
                Some(e) if (0.0..=0.2).contains(&e) => cfg.metric_epsilon = e,
                _ => issue(format!("metric.epsilon '{value}' must lie in [0, 0.2]")),
            },
            "metric.lambda" => match parse_f64(value) {
                Some(l) => cfg.metric_lambda = l,
                None => issue(format!("metric.lambda '{value}' is not a number")),
            },
            "domain.kind" => match value {
                "box" | "ball" | "torus" => cfg.domain_kind = value.into(),
                _ => issue(format!("unknown domain kind '{value}' (box, ball, torus)")),
            },
            "domain.lo" => match parse_list(value) {
                Some(v) if !v.is_empty() => cfg.domain_lo = v,
                _ => issue(format!("domain.lo '{value}' must be a number list")),
            },
            "domain.hi" => match parse_list(value) {
                Some(v) if !v.is_empty() => cfg.domain_hi = v,
                _ => issue(format!("domain.hi '{value}' must be a number list")),
            },
            "domain.res" => match parse_usize(value) {
                Some(r) if r >= 8 => cfg.domain_res = r,
                _ => issue(format!("domain.res '{value}' must be an integer >= 8")),
            },
            "domain.radius" => match parse_f64(value) {
                Some(r) if r > 0.0 => cfg.domain_radius = r,
                _ => issue(format!("domain.radius '{value}' must be positive")),
            },
            "fiber.res" => match parse_usize(value) {
                Some(r) if r >= 4 => cfg.fiber_res = r,
                _ => issue(format!("fiber.res '{value}' must be an integer >= 4")),
            },
            "sobolev.k" => match parse_usize(value) {
                Some(k) if k <= 1 => cfg.sobolev_k = k,
                Some(k) => issue(format!("unsupported order k={k}; only k in {{0, 1}}")),
                None => issue(format!("sobolev.k '{value}' is not an integer")),
            },
            "sobolev.p" => match parse_f64(value) {
                Some(p) if p >= 1.0 => cfg.sobolev_p = p,
                _ => issue(format!("sobolev.p '{value}' must be a number >= 1")),
            },
            "distance.tier" => {
                if TIERS.contains(&value) {
                    cfg.distance_tier = value.into();
                } else {
                    issue(format!("unknown distance tier '{value}' (one of {TIERS:?})"));
                }
            }
            "distance.grid_n" => match parse_usize(value) {
                Some(g) if g >= 8 => cfg.distance_grid_n = g,
                _ => issue(format!("distance.grid_n '{value}' must be an integer >= 8")),
            },
            "distance.iters" => match parse_usize(value) {
                Some(it) if it >= 1 => cfg.distance_iters = it,
                _ => issue(format!("distance.iters '{value}' must be an integer >= 1")),
            },
            "field" => {
                if ScalarField::from_catalog(value).is_some() {
                    cfg.field = value.into();
                } else {
                    issue(format!("unknown field '{value}' in the catalog"));
                }
            }
            "density.jmax" => match parse_usize(value) {
                Some(j) if j >= 1 => cfg.density_jmax = j,
                _ => issue(format!("density.jmax '{value}' must be an integer >= 1")),
            },
            "mollify.eps" => match parse_list(value) {
                Some(v) if v.iter().all(|e| *e > 0.0) && !v.is_empty() => cfg.mollify_eps = v,
                _ => issue(format!("mollify.eps '{value}' must be a positive number list")),
            },
            "fiber_decay.L" => match parse_f64(value) {
                Some(l) if l >= 1.0 => cfg.fiber_decay_l = l,
                _ => issue(format!("fiber_decay.L '{value}' must be a number >= 1")),
            },
            "fiber_decay.nodes_per_unit" => match parse_usize(value) {
                Some(v) if v >= 8 => cfg.fiber_decay_nodes = v,
                _ => issue(format!("fiber_decay.nodes_per_unit '{value}' must be >= 8")),
            },
            "sharpness.widths" => match parse_list(value) {
                Some(v) if v.iter().all(|w| *w > 0.0 && *w <= 1.0) && !v.is_empty() => {
                    cfg.sharpness_widths = v
                }
                _ => issue(format!("sharpness.widths '{value}' must be numbers in (0, 1]")),
            },
            "sharpness.res" => match parse_usize(value) {
                Some(r) if r >= 16 && r % 2 == 0 => cfg.sharpness_res = r,
                _ => issue(format!("sharpness.res '{value}' must be an even integer >= 16")),
            },
            "dirichlet.n" => match parse_usize(value) {
                Some(v) if v >= 16 && v.is_power_of_two() => cfg.dirichlet_n = v,
                _ => issue(format!("dirichlet.n '{value}' must be a power of two >= 16")),
            },
            "dirichlet.f" => {
                if ScalarField::from_catalog(value).is_some() {
                    cfg.dirichlet_f = value.into();
                } else {
                    issue(format!("unknown field '{value}' in the catalog"));
                }
            }
            "dirichlet.eps" => match parse_list(value) {
                Some(v) if v.iter().all(|e| *e > 0.0) && !v.is_empty() => cfg.dirichlet_eps = v,
                _ => issue(format!("dirichlet.eps '{value}' must be a positive number list")),
            },
            "geodesic.start" => match parse_list(value) {
                Some(v) if !v.is_empty() => cfg.geodesic_start = v,
                _ => issue(format!("geodesic.start '{value}' must be a number list")),
            },
            "geodesic.velocity" => match parse_list(value) {
                Some(v) if !v.is_empty() => cfg.geodesic_velocity = v,
                _ => issue(format!("geodesic.velocity '{value}' must be a number list")),
            },
            "geodesic.time" => match parse_f64(value) {
                Some(t) if t > 0.0 => cfg.geodesic_time = t,
                _ => issue(format!("geodesic.time '{value}' must be positive")),
            },
            "geodesic.steps" => match parse_usize(value) {
                Some(s) if s >= 16 => cfg.geodesic_steps = s,
                _ => issue(format!("geodesic.steps '{value}' must be an integer >= 16")),
            },
            "check.samples" => match parse_usize(value) {
                Some(s) if s >= 100 => cfg.check_samples = s,
                _ => issue(format!("check.samples '{value}' must be an integer >= 100")),
            },
            other => issue(format!("unknown key '{other}'")),
        }
    }
    if cfg.metric_kind == "randers" && !saw_b {
        issues.push(ConfigIssue {
            line: randers_line,
            message: "metric.kind = randers requires metric.b".into(),
        });
    }
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(issues)
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

fn parse_usize(s: &str) -> Option<usize> {
    s.parse().ok()
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|p| parse_f64(p.trim())).collect()
}

impl RunConfig {
    pub fn build_metric(&self) -> Result<FinslerMetric> {
        match self.metric_kind.as_str() {
            "euclidean" => FinslerMetric::euclidean(self.metric_dim),
            "conformal" => FinslerMetric::conformal(
                self.metric_dim,
                ConformalFactor::linear(self.metric_lambda),
            ),
            "randers" => FinslerMetric::randers_euclidean(self.metric_b.clone()),
            "funk" => FinslerMetric::funk(self.metric_dim),
            "reversed-funk" => Ok(FinslerMetric::funk(self.metric_dim)?.reverse()),
            "quartic" => FinslerMetric::quartic_perturbed(self.metric_dim, self.metric_epsilon),
            other => unreachable!("metric kind '{other}' validated at parse time"),
        }
    }

    pub fn build_domain(&self) -> Result<Domain> {
        match self.domain_kind.as_str() {
            "box" => Domain::new_box(
                self.domain_lo.clone(),
                self.domain_hi.clone(),
                vec![self.domain_res],
            ),
            "ball" => Domain::new_ball(self.domain_radius, self.metric_dim, vec![self.domain_res]),
            "torus" => {
                let periods: Vec<f64> = self
                    .domain_hi
                    .iter()
                    .zip(&self.domain_lo)
                    .map(|(h, l)| h - l)
                    .collect();
                Domain::new_torus(periods, vec![self.domain_res])
            }
            other => unreachable!("domain kind '{other}' validated at parse time"),
        }
    }

    pub fn build_rule(&self) -> Result<FiberQuadrature> {
        FiberQuadrature::new(self.metric_dim, self.fiber_res)
    }

    pub fn build_provider(&self) -> Result<DistanceProvider> {
        match self.distance_tier.as_str() {
            "closed_form" => Ok(DistanceProvider::closed_form()),
            "grid_dijkstra" => DistanceProvider::grid_dijkstra(self.distance_grid_n),
            "curve_descent" => {
                DistanceProvider::curve_descent(self.distance_grid_n, self.distance_iters)
            }
            other => unreachable!("distance tier '{other}' validated at parse time"),
        }
    }

    pub fn build_field(&self) -> ScalarField {
        ScalarField::from_catalog(&self.field).expect("field name validated at parse time")
    }

    pub fn build_sobolev(&self) -> Result<SobolevSpec> {
        SobolevSpec::new(self.sobolev_k, self.sobolev_p)
    }

    /// Metadata lines sufficient to reproduce a run.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("experiment".into(), self.experiment.clone()),
            ("metric".into(), self.metric_kind.clone()),
            ("dim".into(), self.metric_dim.to_string()),
            (
                "domain".into(),
                format!(
                    "{}[{:?}..{:?}]res{}",
                    self.domain_kind, self.domain_lo, self.domain_hi, self.domain_res
                ),
            ),
            ("fiber_res".into(), self.fiber_res.to_string()),
            ("k".into(), self.sobolev_k.to_string()),
            ("p".into(), self.sobolev_p.to_string()),
            ("provider".into(), self.distance_tier.clone()),
            ("field".into(), self.field.clone()),
        ]
    }
}
