use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qhgeom::report::pipeline::{run_acceptance, run_stages, STAGES};
use qhgeom::report::{ArtifactWriter, ExperimentConfig, Manifest};
use qhgeom::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qhgeom", version, about = "Quasihyperbolic geometry experiments on rasterized planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Domain raster and Whitney cubes.
    Gallery(Opts),
    /// Quasihyperbolic distances, lower bounds and the thin-triangle estimate.
    Metrics(Opts),
    /// Ball separation, Gehring-Hayman, tail and deformed-metric constants.
    Properties(Opts),
    /// Core/tentacle decomposition at each level.
    Decompose(Opts),
    /// Error decay of the smooth approximant.
    Approx(Opts),
    /// Every stage in order.
    Report(Opts),
    /// Acceptance criteria (all of them when none is given).
    Accept {
        #[arg(value_parser = clap::value_parser!(u32).range(1..=9))]
        criteria: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "QHGEOM_OUT")]
        out: Option<PathBuf>,
    },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args, Clone)]
struct Opts {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fixture: Option<String>,
    /// Cells per unit length.
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    teeth: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Bitmap for `--fixture pbm`.
    #[arg(long)]
    path: Option<PathBuf>,
    /// Base point x0 as `x,y`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    base_point: Option<Vec<f64>>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated levels m.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated exponents p.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    triangles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; each command writes into its own subdirectory.
    #[arg(long, env = "QHGEOM_OUT")]
    out: Option<PathBuf>,
}

impl Opts {
    fn config(&self) -> qhgeom::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let f = &mut c.fixture;
        if let Some(v) = &self.fixture {
            f.name = v.clone();
        }
        set(&mut f.resolution, self.resolution);
        f.radius = self.radius.or(f.radius);
        f.side = self.side.or(f.side);
        f.teeth = self.teeth.or(f.teeth);
        f.spacing = self.spacing.or(f.spacing);
        f.path = self.path.clone().or(f.path.take());
        if let Some(b) = &self.base_point {
            f.base_point = Some([b[0], b[1]]);
        }
        let g = &mut c.geometry;
        set(&mut g.c0, self.c0);
        set(&mut g.c, self.c);
        set(&mut g.r, self.r);
        set(&mut g.eps, self.eps);
        set(&mut g.levels, self.levels.clone());
        set(&mut c.approx.k, self.k);
        set(&mut c.approx.p, self.p.clone());
        set(&mut c.sampling.pairs, self.pairs);
        set(&mut c.sampling.triangles, self.triangles);
        set(&mut c.sampling.seed, self.seed);
        set(&mut c.output.dir, self.out.clone());
        c.validate()?;
        Ok(c)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn manifest(command: &str, cfg: &ExperimentConfig) -> Manifest {
    Manifest {
        command: command.into(),
        fixture: cfg.fixture.name.clone(),
        h: cfg.h(),
        k: cfg.approx.k,
        p: cfg.approx.p.clone(),
        seed: cfg.sampling.seed,
        files: vec![],
        failures: vec![],
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("usage error: {e}");
    ExitCode::from(2)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (name, opts) = match cli.command {
        Command::Gallery(o) => ("gallery", o),
        Command::Metrics(o) => ("metrics", o),
        Command::Properties(o) => ("properties", o),
        Command::Decompose(o) => ("decompose", o),
        Command::Approx(o) => ("approx", o),
        Command::Report(o) => ("report", o),
        Command::Accept { criteria, seed, out } => return accept(criteria, seed, out),
    };
    let cfg = match opts.config() {
        Ok(c) => c,
        Err(e @ (Error::Config { .. } | Error::Io(_))) => return Ok(usage(e)),
        Err(e) => return Err(e.into()),
    };
    let stages: Vec<&str> = if name == "report" { STAGES.to_vec() } else { vec![name] };
    let dir = cfg.output.dir.join(name);
    let mut w = ArtifactWriter::new(&dir, manifest(name, &cfg)).with_context(|| format!("creating {}", dir.display()))?;
    w.write("config.toml", cfg.to_toml().as_bytes())?;
    if let Err(e) = run_stages(&cfg, &stages, &mut w) {
        if let Error::Config { .. } = e {
            return Ok(usage(e));
        }
        w.fail("pipeline", e.to_string(), cfg.sampling.seed);
    }
    let m = w.finish()?;
    for f in &m.failures {
        eprintln!("FAIL {}: {} (seed {})", f.check, f.detail, f.seed);
    }
    println!("{} files written to {}", m.files.len() + 1, dir.display());
    Ok(if m.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn accept(criteria: Vec<u32>, seed: u64, out: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let ids = if criteria.is_empty() { (1..=9).collect() } else { criteria };
    let mut cfg = ExperimentConfig::default();
    cfg.sampling.seed = seed;
    let dir = out.unwrap_or(cfg.output.dir.clone()).join("accept");
    let mut w = ArtifactWriter::new(&dir, manifest("accept", &cfg))?;
    for id in ids {
        match run_acceptance(id, seed, &mut w) {
            Ok(r) => print!("{}", r.render()),
            Err(e) => {
                println!("criterion {id} FAIL error: {e}");
                w.fail(&format!("criterion {id}"), e.to_string(), seed);
            }
        }
    }
    let m = w.finish()?;
    Ok(if m.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
