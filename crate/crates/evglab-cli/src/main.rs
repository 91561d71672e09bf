//! `evglab`: batch front end for the experiment suite.
//!
//! Exit status: 0 when every hard check passes, 1 when one fails, 2 for a malformed config or
//! command line, 3 for I/O failures, 4 when a solver aborts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evglab::config::{CheckGroup, Config, ManifoldConfig};
use evglab::plot::{self, Scale, Selector};
use evglab::suite::{self, SuiteOutput};
use evglab::{LabError, Table};

#[derive(Parser, Debug)]
#[command(name = "evglab", version, about = "Heat kernels, Green functions and Moser-Trudinger functionals on model manifolds")]
struct Cli {
    /// TOML experiment config; without it the default run on flat three-space is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid refinement factor, overriding `run.resolution`.
    #[arg(long, global = true)]
    resolution: Option<f64>,
    /// Worker threads, overriding `run.jobs` (0 lets rayon decide).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Volume geometry and admissibility.
    Manifold(Target),
    /// Tilde transform of the volume remainder.
    Tilde(Target),
    /// Radial heat kernel.
    Heat(Target),
    /// Green functions and Riesz potentials.
    Green(Target),
    /// Rearrangement, Talenti comparison and kernel conditions.
    Rearrange(Target),
    /// Moser-Trudinger sharpness sweeps and the Moser family.
    MtSharpness(MtArgs),
    /// Every check group configured in the config file.
    Suite,
    /// Draw an SVG line chart from a table CSV written by a run.
    Plot(PlotArgs),
}

/// Replaces the configured manifolds by a single one when `--family` is given.
#[derive(Args, Debug, Clone)]
struct Target {
    /// euclidean, exp_taper or poly_taper.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Cone parameter of the tapered families.
    #[arg(long)]
    c: Option<f64>,
    /// Decay exponent of poly_taper.
    #[arg(long)]
    a: Option<f64>,
}

#[derive(Args, Debug)]
struct MtArgs {
    #[command(flatten)]
    target: Target,
    /// Orders to sweep; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<usize>,
    /// Outer radii of the extremal families, increasing.
    #[arg(long, value_delimiter = ',')]
    r_list: Vec<f64>,
    /// Multipliers of the exponential constant.
    #[arg(long, value_delimiter = ',')]
    theta_list: Vec<f64>,
    /// Multipliers of the denominator power.
    #[arg(long, value_delimiter = ',')]
    denom_list: Vec<f64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Table CSV from a run directory.
    table: PathBuf,
    /// Columns to draw, `x:y[:group]`.
    #[arg(long)]
    select: String,
    /// Linear x axis (default log).
    #[arg(long)]
    linear_x: bool,
    /// Linear y axis (default log).
    #[arg(long)]
    linear_y: bool,
    /// Chart title; defaults to the table stem.
    #[arg(long)]
    title: Option<String>,
    /// SVG path; defaults to `<table stem>_<y>_vs_<x>.svg` next to the table.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("evglab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Config(_) => 2,
        LabError::Io(_) => 3,
        LabError::InvalidParameter(_) | LabError::Geometry(_) | LabError::Quadrature { .. } | LabError::RootBracket(_) | LabError::Solver(_) => 4,
    }
}

fn run(cli: Cli) -> evglab::Result<bool> {
    if let Cmd::Plot(p) = &cli.cmd {
        plot_cmd(p)?;
        return Ok(true);
    }
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(o) = cli.out {
        cfg.run.out = o;
    }
    if let Some(r) = cli.resolution {
        cfg.run.resolution = r;
    }
    if let Some(j) = cli.jobs {
        cfg.run.jobs = j;
    }
    let single = |cfg: &mut Config, g: CheckGroup, t: &Target| -> evglab::Result<()> {
        cfg.run.checks = vec![g];
        retarget(cfg, t)
    };
    match &cli.cmd {
        Cmd::Manifold(t) => single(&mut cfg, CheckGroup::Manifold, t)?,
        Cmd::Tilde(t) => single(&mut cfg, CheckGroup::Tilde, t)?,
        Cmd::Heat(t) => single(&mut cfg, CheckGroup::Heat, t)?,
        Cmd::Green(t) => single(&mut cfg, CheckGroup::Green, t)?,
        Cmd::Rearrange(t) => single(&mut cfg, CheckGroup::Rearrange, t)?,
        Cmd::MtSharpness(m) => {
            single(&mut cfg, CheckGroup::Mt, &m.target)?;
            if !m.alpha.is_empty() {
                cfg.mt.alphas = m.alpha.clone();
            }
            if !m.r_list.is_empty() {
                cfg.mt.r_list = m.r_list.clone();
            }
            if !m.theta_list.is_empty() {
                cfg.mt.theta = m.theta_list.clone();
            }
            if !m.denom_list.is_empty() {
                cfg.mt.denom = m.denom_list.clone();
            }
        }
        Cmd::Suite | Cmd::Plot(_) => {}
    }
    cfg.validate()?;
    let out = suite::run_with_jobs(&cfg)?;
    out.write(&cfg.run.out)?;
    print_summary(&out, &cfg.run.out);
    Ok(out.hard_pass())
}

fn retarget(cfg: &mut Config, t: &Target) -> evglab::Result<()> {
    let Some(family) = &t.family else {
        if t.c.is_some() || t.a.is_some() {
            return Err(LabError::Config("--c and --a need --family".into()));
        }
        return Ok(());
    };
    let mut mc = ManifoldConfig::euclidean(t.n);
    mc.id = format!("{family}{}", t.n);
    mc.family = family.clone();
    mc.c = t.c;
    mc.a = t.a;
    cfg.manifolds = vec![mc];
    Ok(())
}

fn print_summary(out: &SuiteOutput, dir: &Path) {
    let (mut hard, mut soft, mut failed_soft) = (0, 0, 0);
    for r in out.reports() {
        for c in &r.records {
            match c.kind {
                evglab::Kind::Hard => hard += 1,
                evglab::Kind::Soft => {
                    soft += 1;
                    failed_soft += usize::from(!c.pass);
                }
            }
        }
    }
    let failures = out.failures();
    for f in &failures {
        println!("FAIL {f}");
    }
    println!(
        "{} hard checks, {} failed; {} soft checks, {} annotated; reports in {}",
        hard,
        failures.len(),
        soft,
        failed_soft,
        dir.display()
    );
}

fn plot_cmd(p: &PlotArgs) -> evglab::Result<()> {
    let text = std::fs::read_to_string(&p.table)?;
    let table = Table::from_csv(&text).ok_or_else(|| LabError::Config(format!("{}: empty table", p.table.display())))?;
    let lin = |on: bool| if on { Scale::Linear } else { Scale::Log };
    let sel = Selector::parse(&p.select).map_err(|e| LabError::Config(e.to_string()))?.with_scales(lin(p.linear_x), lin(p.linear_y));
    let stem = p.table.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let title = p.title.clone().unwrap_or_else(|| stem.clone());
    let svg = plot::plot_table(&table, &sel, &title).map_err(|e| LabError::Config(e.to_string()))?;
    let path = p.output.clone().unwrap_or_else(|| p.table.with_file_name(format!("{stem}_{}.svg", plot::slug(&sel))));
    std::fs::write(&path, svg)?;
    println!("{}", path.display());
    Ok(())
}
