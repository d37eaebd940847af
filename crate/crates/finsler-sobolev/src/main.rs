use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use finsler_sobolev::approx::{density_experiment, mollification_convergence, GridField};
use finsler_sobolev::bundle::stry_constant;
use finsler_sobolev::config::{parse_config, RunConfig};
use finsler_sobolev::experiments::{
    dirichlet_approximation, dirichlet_solve_torus, dirichlet_weak_form_defect,
    fiber_decay_example, sharpness_experiment, ShrinkingFiberModel,
};
use finsler_sobolev::geodesics::{curve_length, integrate_geodesic, speed_drift};
use finsler_sobolev::metric::{reversibility_defect, validate_samples, Point};
use finsler_sobolev::report::Table;
use finsler_sobolev::sobolev::{
    gradient_lp_norm_sm, lp_norm_sm, sobolev_norm, ScalarField,
};

#[derive(Parser)]
#[command(name = "finsler-sobolev", about = "Finslerian Sobolev-norm experiments", version)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker thread count for the quadrature layer.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L^p and H_k^p norms of the configured field.
    Norm,
    /// Truncation-sequence convergence table.
    Density,
    /// Mollification convergence table on the configured domain.
    Mollify,
    /// Integrate a spray geodesic and report its samples.
    Geodesic,
    /// Counterexample reproductions.
    Counterexample {
        #[command(subcommand)]
        which: Counterexample,
    },
    /// Spectral Dirichlet solve on the flat torus plus mollified approximants.
    Dirichlet {
        /// Grid size (power of two >= 16).
        #[arg(long)]
        n: Option<usize>,
        /// Source field from the catalog.
        #[arg(long)]
        f: Option<String>,
    },
    /// Metric validity sweep: homogeneity, tensor positivity, reversibility,
    /// admissible constant.
    Check,
}

#[derive(Subcommand)]
enum Counterexample {
    /// Shrinking-fiber integrability dichotomy on the strip.
    FiberDecay {
        /// Strip half-length.
        #[arg(long = "L")]
        l: Option<f64>,
    },
    /// Non-density lower bound for the step field.
    Sharpness {
        /// Integrability exponent.
        #[arg(long)]
        p: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("config error: --threads must be positive");
            return ExitCode::from(2);
        }
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let text = match &cli.config {
        None => String::new(),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("config error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(issues) => {
            for issue in issues {
                eprintln!("config error: {issue}");
            }
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = apply_overrides(&mut cfg, &cli.command) {
        eprintln!("config error: {msg}");
        return ExitCode::from(2);
    }
    match run(&cfg) {
        Ok(mut table) => {
            for (k, v) in cfg.echo() {
                table.metadata.insert(0, (k, v));
            }
            match &cli.out {
                Some(path) => {
                    if let Err(e) = table.write_atomic(path) {
                        eprintln!("numerical run failed: {e}");
                        return ExitCode::from(3);
                    }
                }
                None => print!("{}", table.to_csv()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("numerical run failed: {e}");
            ExitCode::from(3)
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, cmd: &Command) -> Result<(), String> {
    cfg.experiment = match cmd {
        Command::Norm => "norm".into(),
        Command::Density => "density".into(),
        Command::Mollify => "mollify".into(),
        Command::Geodesic => "geodesic".into(),
        Command::Check => "check".into(),
        Command::Counterexample { which } => match which {
            Counterexample::FiberDecay { l } => {
                if let Some(l) = l {
                    if *l < 1.0 {
                        return Err(format!("--L {l} must be >= 1"));
                    }
                    cfg.fiber_decay_l = *l;
                }
                "fiber-decay".into()
            }
            Counterexample::Sharpness { p } => {
                if let Some(p) = p {
                    if *p < 1.0 {
                        return Err(format!("--p {p} must be >= 1"));
                    }
                    cfg.sobolev_p = *p;
                }
                "sharpness".into()
            }
        },
        Command::Dirichlet { n, f } => {
            if let Some(n) = n {
                if *n < 16 || !n.is_power_of_two() {
                    return Err(format!("--n {n} must be a power of two >= 16"));
                }
                cfg.dirichlet_n = *n;
            }
            if let Some(f) = f {
                if ScalarField::from_catalog(f).is_none() {
                    return Err(format!("unknown field '{f}' in the catalog"));
                }
                cfg.dirichlet_f = f.clone();
            }
            "dirichlet".into()
        }
    };
    Ok(())
}

fn run(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    match cfg.experiment.as_str() {
        "norm" => run_norm(cfg),
        "density" => run_density(cfg),
        "mollify" => run_mollify(cfg),
        "geodesic" => run_geodesic(cfg),
        "fiber-decay" => run_fiber_decay(cfg),
        "sharpness" => {
            let (table, _) = sharpness_experiment(
                cfg.sobolev_p,
                &cfg.sharpness_widths,
                cfg.sharpness_res,
            )?;
            Ok(table)
        }
        "dirichlet" => run_dirichlet(cfg),
        "check" => run_check(cfg),
        other => unreachable!("experiment '{other}' validated at parse time"),
    }
}

fn run_norm(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let metric = cfg.build_metric()?;
    let domain = cfg.build_domain()?;
    let rule = cfg.build_rule()?;
    let spec = cfg.build_sobolev()?;
    let u = cfg.build_field();
    let mut table = Table::new(&["quantity", "value"]);
    let lp = lp_norm_sm(&metric, &u, spec.p, &domain, &rule)?;
    table.push_labeled_row("lp_sm", &[lp]);
    if spec.k == 1 {
        let grad = gradient_lp_norm_sm(&metric, &u, spec.p, &domain, &rule)?;
        table.push_labeled_row("grad_lp_sm", &[grad]);
    }
    let total = sobolev_norm(&metric, &u, &spec, &domain, &rule)?;
    table.push_labeled_row("sobolev", &[total]);
    Ok(table)
}

fn run_density(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let metric = cfg.build_metric()?;
    let domain = cfg.build_domain()?;
    let rule = cfg.build_rule()?;
    let provider = cfg.build_provider()?;
    let u = cfg.build_field();
    let center = Point::new(vec![0.0; cfg.metric_dim])?;
    density_experiment(
        &metric,
        &u,
        cfg.sobolev_p,
        cfg.density_jmax,
        &center,
        &provider,
        &domain,
        &rule,
    )
}

fn run_mollify(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let domain = cfg.build_domain()?;
    let u = GridField::sample(&cfg.build_field(), &domain);
    mollification_convergence(&u, cfg.sobolev_p, &cfg.mollify_eps)
}

fn run_geodesic(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let metric = cfg.build_metric()?;
    let start = Point::new(cfg.geodesic_start.clone())?;
    let res = integrate_geodesic(
        &metric,
        &start,
        &cfg.geodesic_velocity,
        cfg.geodesic_time,
        cfg.geodesic_steps,
    )?;
    let n = cfg.metric_dim;
    let mut header: Vec<String> = vec!["t".into()];
    for i in 1..=n {
        header.push(format!("x{i}"));
    }
    for i in 1..=n {
        header.push(format!("v{i}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(&header_refs);
    table.meta("length", curve_length(&metric, &res.curve)?);
    table.meta("speed_drift", speed_drift(&metric, &res.curve)?);
    table.meta("truncated", res.truncated);
    for s in &res.curve.samples {
        let mut row = vec![s.t];
        row.extend_from_slice(&s.point.coords);
        row.extend_from_slice(&s.velocity);
        table.push_row(&row);
    }
    Ok(table)
}

fn run_fiber_decay(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let mut table = Table::new(&["L", "sm_integral", "m_integral"]);
    table.meta("model", "shrinking-fiber strip");
    table.meta("nodes_per_unit", cfg.fiber_decay_nodes);
    table.meta(
        "stry_at_max_L",
        ShrinkingFiberModel::stry(cfg.fiber_decay_l, cfg.fiber_decay_nodes),
    );
    let lmax = cfg.fiber_decay_l.floor() as usize;
    for l in 1..=lmax.max(1) {
        let (sm, m) = fiber_decay_example(l as f64, cfg.fiber_decay_nodes)?;
        table.push_row(&[l as f64, sm, m]);
    }
    if cfg.fiber_decay_l.fract() > 0.0 {
        let (sm, m) = fiber_decay_example(cfg.fiber_decay_l, cfg.fiber_decay_nodes)?;
        table.push_row(&[cfg.fiber_decay_l, sm, m]);
    }
    Ok(table)
}

fn run_dirichlet(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    let f = ScalarField::from_catalog(&cfg.dirichlet_f).expect("validated");
    let sol = dirichlet_solve_torus(&f, cfg.dirichlet_n)?;
    let defect = dirichlet_weak_form_defect(&sol, &f, 20, 17)?;
    let mut table = dirichlet_approximation(&sol.grid, &cfg.dirichlet_eps)?;
    table.meta("source", &cfg.dirichlet_f);
    table.meta("n", cfg.dirichlet_n);
    table.meta("residual", format!("{:e}", sol.residual));
    table.meta("weak_form_defect", format!("{defect:e}"));
    Ok(table)
}

fn run_check(cfg: &RunConfig) -> finsler_sobolev::error::Result<Table> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let metric = cfg.build_metric()?;
    let domain = cfg.build_domain()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5_eed5);
    let n = cfg.metric_dim;
    let mut samples = Vec::new();
    let mut points = Vec::new();
    while samples.len() < cfg.check_samples {
        let x: Vec<f64> = domain
            .lo
            .iter()
            .zip(&domain.hi)
            .map(|(a, b)| rng.gen_range(*a..*b))
            .collect();
        if !metric.domain_contains(&x) {
            continue;
        }
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if y.iter().all(|c| c.abs() < 1e-3) {
            continue;
        }
        points.push(Point::new(x.clone())?);
        samples.push((x, y));
    }
    let report = validate_samples(&metric, &samples)?;
    let defect = reversibility_defect(&metric, &points)?;
    let stry = stry_constant(&metric, &domain, cfg.check_samples)?;
    let mut table = Table::new(&["property", "value"]);
    table.meta("samples", cfg.check_samples);
    table.push_labeled_row("max_homogeneity_deviation", &[report.max_homogeneity_deviation]);
    table.push_labeled_row("max_tensor_asymmetry", &[report.max_tensor_asymmetry]);
    table.push_labeled_row("min_tensor_eigenvalue", &[report.min_tensor_eigenvalue]);
    table.push_labeled_row("min_f_positive", &[report.min_f_positive]);
    table.push_labeled_row("reversibility_defect", &[defect]);
    table.push_labeled_row("stry_constant", &[stry]);
    Ok(table)
}
