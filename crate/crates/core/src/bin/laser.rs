use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use laser_core::custom::{
    fdr_factorization, finite_bayes_ci, macro_inference, reb_inference, reproducibility_report, AdjustMethod,
    CustomConfig, Customizer, EbConfig, NullMethod,
};
use laser_core::data::{load_csv, replicate_pair, simulate_funnel, CsvSchema, Dataset, FunnelConfig};
use laser_core::engines::locfdr::LocfdrFit;
use laser_core::engines::{Bh, EngineKind, GlobalEngine, Locfdr};
use laser_core::regress::Selector;
use laser_core::relevance::{bootstrap_relevance, RelevanceModel};
use laser_core::report::{self, fmt, Provenance};
use laser_core::{stats, Error, ErrorClass};

/// Customized large-scale inference with relevance functions and LASERs.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
/// 3 numerical failure. LASER_THREADS bounds the worker pool.
#[derive(Parser, Debug)]
#[command(name = "laser", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write simulated funnel data.
    Simulate(SimulateArgs),
    /// Relevance diagnostics: CUST, rel, N_rel and d_x curves per target.
    Diagnose(RunArgs),
    /// Draw LASER samples at each target.
    Laser(RunArgs),
    /// Customized fdr for one case.
    Micro(RunArgs),
    /// Customized inference for every case.
    Macro(RunArgs),
    /// Relevance-integrated empirical Bayes for one case.
    Reb(RunArgs),
    /// Discovery overlap between two simulated replications.
    Replicate(ReplicateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Model to simulate (only `funnel`).
    #[arg(default_value = "funnel")]
    model: String,
    #[arg(long, required_unless_present = "pair")]
    seed: Option<u64>,
    /// Write two replications sharing the covariate design.
    #[arg(long, requires = "seeds")]
    pair: bool,
    #[arg(long, num_args = 2, value_names = ["SEED1", "SEED2"])]
    seeds: Option<Vec<u64>>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Origin {
    /// Input CSV with covariate columns and a score column.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Simulate funnel data with this seed instead of reading a file.
    #[arg(long)]
    funnel: Option<u64>,
}

#[derive(Args, Debug)]
struct Source {
    #[command(flatten)]
    origin: Origin,
    /// Score column in the input CSV.
    #[arg(long, default_value = "z")]
    z_column: String,
    /// Covariate columns (comma separated); default is every other column.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct Options {
    /// z-basis size.
    #[arg(short, long, default_value_t = 6)]
    m: usize,
    /// Polynomial degree per covariate.
    #[arg(short, long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value = "bic")]
    selector: Selector,
    /// Drop pairwise covariate interactions.
    #[arg(long)]
    no_interactions: bool,
    #[arg(long, default_value = "locfdr")]
    engine: EngineKind,
    #[arg(long = "null", default_value = "laser")]
    null_method: NullMethod,
    /// Regression adjustment of the scores: ols, smoother or none.
    #[arg(long)]
    adjust: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    bags: usize,
    /// LASER size (default N).
    #[arg(long)]
    laser_size: Option<usize>,
    /// Bootstrap replicates (diagnose bands, reb finite-Bayes cycles).
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Target covariate profile, comma separated for several covariates.
    /// Repeatable.
    #[arg(long = "target", value_name = "X")]
    targets: Vec<String>,
    /// Target score for micro and reb.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug)]
struct ReplicateArgs {
    #[arg(long, num_args = 2, required = true, value_names = ["SEED1", "SEED2"])]
    seeds: Vec<u64>,
    /// Compare global instead of customized discoveries.
    #[arg(long)]
    global: bool,
    #[command(flatten)]
    opts: Options,
}

/// Effective settings echoed into every output and hashed.
#[derive(Debug, Serialize)]
struct RunConfig {
    subcommand: String,
    input: Option<String>,
    funnel: Option<FunnelConfig>,
    targets: Vec<Vec<f64>>,
    z: Option<f64>,
    engine: EngineKind,
    alpha: f64,
    bootstrap: Option<usize>,
    custom: CustomConfig,
}

fn fail(class: ErrorClass, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("laser: {msg}");
    ExitCode::from(match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Ok(v) = std::env::var("LASER_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return fail(ErrorClass::Usage, format!("LASER_THREADS must be a positive integer, got {v:?}")),
        }
    }
    let result = match cli.cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Diagnose(a) => diagnose(a),
        Cmd::Laser(a) => laser(a),
        Cmd::Micro(a) => micro(a),
        Cmd::Macro(a) => macro_cmd(a),
        Cmd::Reb(a) => reb(a),
        Cmd::Replicate(a) => replicate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.class(), e),
    }
}

type Result<T> = laser_core::Result<T>;

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_target(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad target {s:?}")))).collect()
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.model != "funnel" {
        return Err(usage(format!("unknown model {:?}", a.model)));
    }
    prepare_out(&a.out)?;
    if a.pair {
        let s = a.seeds.ok_or_else(|| usage("--pair needs --seeds SEED1 SEED2"))?;
        let base = FunnelConfig::default();
        let (d1, d2) = replicate_pair(&base, s[0], s[1])?;
        for (seed, d) in [(s[0], d1), (s[1], d2)] {
            let cfg = FunnelConfig::with_seed(seed);
            let prov = Provenance::new(seed, &cfg)?;
            let path = a.out.join(format!("funnel_seed{seed}.csv"));
            report::write_dataset(&path, &prov, &d)?;
            println!("{} rows -> {}", d.len(), path.display());
        }
        return Ok(());
    }
    let seed = a.seed.ok_or_else(|| usage("--seed is required"))?;
    let cfg = FunnelConfig::with_seed(seed);
    let data = simulate_funnel(&cfg)?;
    let prov = Provenance::new(seed, &cfg)?;
    let path = a.out.join(format!("funnel_seed{seed}.csv"));
    report::write_dataset(&path, &prov, &data)?;
    println!("{} rows -> {}", data.len(), path.display());
    Ok(())
}

struct Run {
    data: Dataset,
    config: RunConfig,
    targets: Vec<Vec<f64>>,
    prov: Provenance,
}

fn custom_config(o: &Options, seed: u64, default_adjust: Option<AdjustMethod>) -> Result<CustomConfig> {
    let mut c = CustomConfig::with_seed(seed);
    c.relevance.m = o.m;
    c.relevance.k = o.k;
    c.relevance.selector = o.selector;
    c.relevance.interactions = !o.no_interactions;
    c.null_method = o.null_method;
    c.adjust = match o.adjust.as_deref() {
        None => default_adjust,
        Some("none") => None,
        Some(s) => Some(s.parse()?),
    };
    c.laser_size = o.laser_size;
    c.bags = o.bags;
    c.relevance.validate()?;
    if !(o.alpha > 0.0 && o.alpha < 1.0) {
        return Err(usage(format!("alpha {} outside (0, 1)", o.alpha)));
    }
    Ok(c)
}

fn setup(cmd: &str, a: &RunArgs, stochastic: bool, default_adjust: Option<AdjustMethod>) -> Result<Run> {
    let seed = match (a.opts.seed, stochastic) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => return Err(usage(format!("{cmd} needs --seed"))),
    };
    let (data, funnel) = match (&a.source.origin.input, a.source.origin.funnel) {
        (Some(path), None) => {
            let mut schema = CsvSchema::with_z(&a.source.z_column);
            schema.covariates = a.source.covariates.clone();
            (load_csv(path, &schema)?, None)
        }
        (None, Some(s)) => {
            let cfg = FunnelConfig::with_seed(s);
            (simulate_funnel(&cfg)?, Some(cfg))
        }
        _ => return Err(usage("give exactly one of --input or --funnel")),
    };
    let targets = a.targets.iter().map(|t| parse_target(t)).collect::<Result<Vec<_>>>()?;
    if let Some(t) = targets.iter().find(|t| t.len() != data.p()) {
        return Err(usage(format!("target has {} values, data has {} covariates", t.len(), data.p())));
    }
    let custom = custom_config(&a.opts, seed, default_adjust)?;
    let config = RunConfig {
        subcommand: cmd.into(),
        input: a.source.origin.input.as_ref().map(|p| p.display().to_string()),
        funnel,
        targets: targets.clone(),
        z: a.z,
        engine: a.opts.engine,
        alpha: a.opts.alpha,
        bootstrap: a.opts.bootstrap,
        custom,
    };
    let prov = Provenance::new(seed, &config)?;
    prepare_out(&a.opts.out)?;
    Ok(Run { data, config, targets, prov })
}

fn need_targets(run: &Run, cmd: &str) -> Result<()> {
    if run.targets.is_empty() {
        return Err(usage(format!("{cmd} needs at least one --target")));
    }
    Ok(())
}

fn engine(kind: EngineKind, c: &CustomConfig) -> Box<dyn GlobalEngine> {
    match kind {
        EngineKind::Locfdr => Box::new(Locfdr { config: c.locfdr }),
        EngineKind::Bh => Box::new(Bh { window: c.locfdr.window }),
    }
}

fn label(x: &[f64]) -> String {
    x.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg)?;
    Ok(())
}

fn diagnose(a: RunArgs) -> Result<()> {
    let run = setup("diagnose", &a, a.opts.bootstrap.is_some(), None)?;
    need_targets(&run, "diagnose")?;
    let c = &run.config.custom;
    let model = RelevanceModel::fit(&run.data, &c.relevance)?;
    let n = run.data.len();
    let grid = stats::linspace(0.0, 1.0, 101);
    let mut table = Vec::new();
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for x in &run.targets {
        let local = model.at(x)?;
        let cust = local.cust();
        let status = if local.is_flat() { "flat" } else { "customized" };
        let d = local.density_on_grid(&grid);
        let bands = match a.opts.bootstrap {
            Some(b) => Some(bootstrap_relevance(&run.data, &c.relevance, x, &grid, b, run.prov.seed)?),
            None => None,
        };
        for (i, u) in grid.iter().enumerate() {
            let (lo, hi) = bands.as_ref().map_or((f64::NAN, f64::NAN), |b| (b.lower[i], b.upper[i]));
            curves.push(vec![label(x), fmt(*u), fmt(d[i]), fmt(lo), fmt(hi)]);
        }
        table.push(vec![
            label(x),
            fmt(cust),
            fmt(laser_core::relevance::rel(cust)),
            fmt(laser_core::relevance::n_rel(cust, n)),
            status.to_string(),
        ]);
        if a.opts.plot {
            let mut series: Vec<(&str, &[f64])> = vec![("d_x", &d)];
            if let Some(b) = &bands {
                series.push(("lower", &b.lower));
                series.push(("upper", &b.upper));
            }
            let svg = report::svg_plot(&format!("relevance at x = {}", label(x)), "u", &grid, &series);
            write_svg(&a.opts.out.join(format!("relevance_{}.svg", label(x).replace(',', "_"))), &svg)?;
        }
        println!("x={} {status} CUST={} N_rel={:.1}", label(x), fmt(cust), laser_core::relevance::n_rel(cust, n));
        summaries.push(json!({
            "x": x,
            "status": status,
            "cust": cust,
            "rel": laser_core::relevance::rel(cust),
            "n_rel": laser_core::relevance::n_rel(cust, n),
            "coefficients": local.coefficients(),
            "bootstrap_replicates": bands.as_ref().map(|b| b.replicates),
            "bootstrap_skipped": bands.as_ref().map(|b| b.skipped),
        }));
    }
    let out = &a.opts.out;
    report::write_table(
        &out.join("relevance_summary.csv"),
        &run.prov,
        &["x", "cust", "rel", "n_rel", "status"],
        table,
    )?;
    report::write_table(&out.join("relevance_curves.csv"), &run.prov, &["x", "u", "d", "lower", "upper"], curves)?;
    let body = json!({
        "n": n,
        "selected_terms": model.selected_terms(),
        "targets": summaries,
    });
    report::write_json(&out.join("diagnose.json"), &report::summary_json("diagnose", &run.prov, &run.config, body)?)
}

fn laser(a: RunArgs) -> Result<()> {
    let run = setup("laser", &a, true, None)?;
    need_targets(&run, "laser")?;
    let cz = Customizer::new(&run.data, &run.config.custom)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for x in &run.targets {
        let shift = cz.shift(x);
        for (b, l) in cz.lasers(x)?.iter().enumerate() {
            rows.extend(
                l.samples.iter().enumerate().map(|(i, s)| vec![label(x), b.to_string(), i.to_string(), fmt(s + shift)]),
            );
            summaries.push(json!({
                "x": x,
                "bag": b,
                "size": l.len(),
                "proposals": l.proposals,
                "acceptance_rate": l.acceptance_rate,
                "stream": l.stream,
                "flat": l.flat,
            }));
            println!(
                "x={} bag={b} n={} acceptance={:.4}{}",
                label(x),
                l.len(),
                l.acceptance_rate,
                if l.flat { " flat" } else { "" }
            );
        }
    }
    let out = &a.opts.out;
    report::write_table(&out.join("laser.csv"), &run.prov, &["x", "bag", "draw", "z"], rows)?;
    report::write_json(
        &out.join("laser.json"),
        &report::summary_json("laser", &run.prov, &run.config, json!({ "samples": summaries }))?,
    )
}

fn micro(a: RunArgs) -> Result<()> {
    let run = setup("micro", &a, true, None)?;
    need_targets(&run, "micro")?;
    let z = a.z.ok_or_else(|| usage("micro needs --z"))?;
    let c = &run.config.custom;
    let cz = Customizer::new(&run.data, c)?;
    let global_fit = LocfdrFit::fit(cz.scores(), &c.locfdr)?;
    let global_null = cz.global_null()?;
    let mut rows = Vec::new();
    let mut cases = Vec::new();
    for x in &run.targets {
        let cf = cz.customized_fdr(x)?;
        let fdr = cf.fdr_at(z);
        let null = cz.relevant_null(x, c.null_method)?;
        let y = z - cf.shift;
        let global_fdr = global_fit.fdr(y);
        let factor = match cz.local(x)? {
            Some(local) => {
                let mut working = null;
                working.mu0 -= cf.shift;
                Some(fdr_factorization(global_fdr, &working, &global_null, &local, y))
            }
            None => None,
        };
        for i in 0..cf.curve.z.len() {
            rows.push(vec![
                label(x),
                fmt(cf.curve.z[i]),
                fmt(cf.curve.fdr[i]),
                fmt(cf.curve.f[i]),
                fmt(cf.curve.f0[i]),
            ]);
        }
        if a.opts.plot {
            let svg = report::svg_plot(
                &format!("customized fdr at x = {}", label(x)),
                "z",
                &cf.curve.z,
                &[("fdr", &cf.curve.fdr)],
            );
            write_svg(&a.opts.out.join(format!("fdr_{}.svg", label(x).replace(',', "_"))), &svg)?;
        }
        println!(
            "x={} z={} fdr={} global_fdr={} dps={:.3}{}",
            label(x),
            fmt(z),
            fmt(fdr),
            fmt(global_fdr),
            laser_core::custom::dps(fdr),
            if cf.flat { " flat" } else { "" }
        );
        cases.push(json!({
            "x": x,
            "z": z,
            "fdr": fdr,
            "global_fdr": global_fdr,
            "dps": laser_core::custom::dps(fdr),
            "flat": cf.flat,
            "relevant_null": null,
            "factorization": factor,
            "acceptance_rate": cf.acceptance_rate,
        }));
    }
    let out = &a.opts.out;
    report::write_table(&out.join("micro_curves.csv"), &run.prov, &["x", "z", "fdr", "f", "f0"], rows)?;
    let body = json!({ "global_null": global_null, "cases": cases });
    report::write_json(&out.join("micro.json"), &report::summary_json("micro", &run.prov, &run.config, body)?)
}

fn macro_cmd(a: RunArgs) -> Result<()> {
    let run = setup("macro", &a, true, None)?;
    let c = &run.config.custom;
    let eng = engine(run.config.engine, c);
    let cz = Customizer::new(&run.data, c)?;
    let rep = macro_inference(&cz, eng.as_ref(), run.config.alpha)?;
    let out = &a.opts.out;
    report::write_cases(&out.join("macro_cases.csv"), &run.prov, &rep)?;
    let groups = rep.groups.iter().map(|g| {
        vec![
            label(&g.x),
            g.cases.to_string(),
            (g.flat as u8).to_string(),
            fmt(g.cust),
            fmt(g.n_rel),
            fmt(g.null.mu0),
            fmt(g.null.sigma0),
            fmt(g.null.pi0),
            fmt(g.acceptance_rate),
        ]
    });
    report::write_table(
        &out.join("macro_groups.csv"),
        &run.prov,
        &["x", "cases", "flat", "cust", "n_rel", "mu0", "sigma0", "pi0", "acceptance_rate"],
        groups,
    )?;
    print_counts(&rep);
    let body = json!({
        "engine": rep.engine,
        "mode": rep.mode,
        "threshold": rep.threshold,
        "rejections": rep.rejections,
        "true_signals": rep.true_signals,
        "true_discoveries": rep.true_discoveries,
        "false_discoveries": rep.false_discoveries,
        "misses": rep.misses,
    });
    report::write_json(&out.join("macro.json"), &report::summary_json("macro", &run.prov, &run.config, body)?)
}

fn print_counts(rep: &laser_core::custom::InferenceReport) {
    let opt = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
    println!(
        "{} {} R={} true={} false={} miss={}",
        rep.mode,
        rep.engine,
        rep.rejections,
        opt(rep.true_discoveries),
        opt(rep.false_discoveries),
        opt(rep.misses)
    );
}

fn reb(a: RunArgs) -> Result<()> {
    let run = setup("reb", &a, true, Some(AdjustMethod::Ols))?;
    need_targets(&run, "reb")?;
    let z = a.z.ok_or_else(|| usage("reb needs --z"))?;
    let c = &run.config.custom;
    let cz = Customizer::new(&run.data, c)?;
    let eb = EbConfig::default();
    let mut rows = Vec::new();
    let mut cases = Vec::new();
    for x in &run.targets {
        let r = reb_inference(&cz, x, z, &eb)?;
        let fb = match a.opts.bootstrap {
            Some(b) => Some(finite_bayes_ci(&cz, x, r.y0, b, &eb)?),
            None => None,
        };
        for i in 0..r.prior.grid.len() {
            rows.push(vec![
                label(x),
                fmt(r.prior.grid[i]),
                fmt(r.prior.grid[i] + r.shift),
                fmt(r.prior.weights[i]),
                fmt(r.posterior_y.mass[i]),
            ]);
        }
        if a.opts.plot {
            let svg = report::svg_plot(
                &format!("rEB at x = {}, z = {}", label(x), fmt(z)),
                "theta (z-domain)",
                &r.posterior_z.grid,
                &[("prior", &r.prior.weights), ("posterior", &r.posterior_z.mass)],
            );
            write_svg(&a.opts.out.join(format!("reb_{}.svg", label(x).replace(',', "_"))), &svg)?;
        }
        println!(
            "x={} z={} shift={} sigma={} posterior_y={} estimate={} hpd{:.0}=({}, {}){}",
            label(x),
            fmt(z),
            fmt(r.shift),
            fmt(r.sigma),
            fmt(r.posterior_y.mean),
            fmt(r.posterior_z.mean),
            100.0 * r.posterior_z.level,
            fmt(r.posterior_z.hpd.0),
            fmt(r.posterior_z.hpd.1),
            if r.flat { " flat" } else { "" }
        );
        cases.push(json!({
            "x": x,
            "z": z,
            "y": r.y0,
            "shift": r.shift,
            "sigma": r.sigma,
            "flat": r.flat,
            "bags": r.bags,
            "prior_mean": r.prior.mean(),
            "posterior_y_mean": r.posterior_y.mean,
            "estimate": r.posterior_z.mean,
            "mode": r.posterior_z.mode,
            "hpd": r.posterior_z.hpd,
            "hpd_level": r.posterior_z.level,
            "finite_bayes": fb.as_ref().map(|f| json!({
                "cycles": f.cycles,
                "failed": f.failed,
                "mean": f.posterior_z.mean,
                "hpd": f.posterior_z.hpd,
            })),
        }));
    }
    let out = &a.opts.out;
    report::write_table(&out.join("reb.csv"), &run.prov, &["x", "theta_y", "theta_z", "prior", "posterior"], rows)?;
    let body = json!({ "adjustment": c.adjust, "cases": cases });
    report::write_json(&out.join("reb.json"), &report::summary_json("reb", &run.prov, &run.config, body)?)
}

fn replicate(a: ReplicateArgs) -> Result<()> {
    let (s1, s2) = (a.seeds[0], a.seeds[1]);
    let custom = custom_config(&a.opts, a.opts.seed.unwrap_or(s1), None)?;
    let base = FunnelConfig::default();
    let config = RunConfig {
        subcommand: "replicate".into(),
        input: None,
        funnel: Some(base.clone()),
        targets: Vec::new(),
        z: None,
        engine: a.opts.engine,
        alpha: a.opts.alpha,
        bootstrap: None,
        custom,
    };
    let prov = Provenance::new(config.custom.seed, &json!({ "run": &config, "seeds": [s1, s2] }))?;
    prepare_out(&a.opts.out)?;
    let (d1, d2) = replicate_pair(&base, s1, s2)?;
    let eng = engine(config.engine, &config.custom);
    let rep = reproducibility_report(&d1, &d2, &config.custom, eng.as_ref(), config.alpha, !a.global)?;
    let mode = if a.global { "global" } else { "customized" };
    println!(
        "{mode} first={} second={} both={} true_in_both={}",
        rep.first.len(),
        rep.second.len(),
        rep.intersection.len(),
        rep.true_in_intersection.map_or("-".into(), |v| v.to_string())
    );
    let body = json!({
        "seeds": [s1, s2],
        "mode": mode,
        "first": rep.first,
        "second": rep.second,
        "intersection": rep.intersection,
        "true_in_intersection": rep.true_in_intersection,
        "false_in_intersection": rep.false_in_intersection,
    });
    report::write_json(&a.opts.out.join("replicate.json"), &report::summary_json("replicate", &prov, &config, body)?)
}
