//! Command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};

use fvmm::error::{ConfigError, Error, SolverError};
use fvmm::geometry::Vec2;
use fvmm::io::{sample_line, sha256_hex, write_line_csv, write_vtk, AuditLog, RunManifest, Series, Timings};
use fvmm::mesh::MeshMode;
use fvmm::scenario::{case_config, compare_reduced_full, CaseConfig, ScenarioFile};
use fvmm::solver::Simulation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Reduced,
    Full,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "fvmm", version, about = "Two-phase flow with a moving fracture")]
struct Cli {
    /// Built-in case 1, 2 or 3.
    #[arg(long, conflicts_with = "scenario")]
    case: Option<u32>,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Defaults to the scenario file's mode, else `reduced`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// End time in seconds.
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Bulk cells per unit length; the target edge length is its inverse.
    #[arg(long, default_value_t = 64)]
    resolution: u32,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Plot-over-line: `diag` or `x0,y0,x1,y1`. Repeatable.
    #[arg(long)]
    line: Vec<String>,
    /// Samples per line.
    #[arg(long, default_value_t = 513)]
    samples: usize,
    /// Recorded in the manifest for randomized property runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of steps to run; 0 writes the initial snapshot only.
    #[arg(long)]
    steps: Option<usize>,
    /// Snapshot interval in steps.
    #[arg(long, default_value_t = 10)]
    output_every: usize,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) => Failure::Solver(e.into()),
            Error::Io(_) => Failure::Solver(e.into()),
            _ => Failure::Config(e.into()),
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Solver(e.into())
}

fn parse_line(spec: &str) -> anyhow::Result<(String, [Vec2<f64>; 2])> {
    if spec == "diag" {
        return Ok(("diag".into(), [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)]));
    }
    let v: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--line `{spec}`: expected `diag` or four numbers"))?;
    if v.len() != 4 {
        bail!("--line `{spec}`: expected four numbers, got {}", v.len());
    }
    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        bail!("--line `{spec}`: endpoints must lie in the unit square");
    }
    let name = format!("line{}", v.iter().map(|x| format!("_{x}")).collect::<String>());
    Ok((name, [Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3])]))
}

struct Resolved {
    config: CaseConfig<f64>,
    label: String,
    hash: String,
}

fn resolve(cli: &Cli, mode: MeshMode) -> Result<Resolved, Failure> {
    if cli.resolution == 0 {
        return Err(config_err(ConfigError::InvalidField { field: "resolution".into(), message: "must be positive".into() }));
    }
    let h = 1.0 / cli.resolution as f64;
    let (mut config, label, hash) = match (&cli.scenario, cli.case) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario {}", path.display()))
                .map_err(Failure::Config)?;
            let file = ScenarioFile::parse(&text).map_err(config_err)?;
            let mut c = file.to_config(mode, h).map_err(config_err)?;
            c.problem.mode = mode;
            (c, path.display().to_string(), sha256_hex(text.as_bytes()))
        }
        (None, Some(case)) => {
            let c = case_config(case, mode, h).map_err(config_err)?;
            (c, format!("case {case}"), String::new())
        }
        (None, None) => return Err(config_err(anyhow::anyhow!("one of --case or --scenario is required"))),
    };
    if let Some(t) = cli.tend {
        if !(t > 0.0) {
            return Err(config_err(ConfigError::InvalidField { field: "tend".into(), message: "must be positive".into() }));
        }
        config.t_end = t;
        config.dt = t / 100.0;
    }
    if let Some(dt) = cli.dt {
        if !(dt > 0.0 && dt <= config.t_end) {
            return Err(config_err(ConfigError::InvalidField {
                field: "dt".into(),
                message: format!("must lie in (0, {}]", config.t_end),
            }));
        }
        config.dt = dt;
    }
    let hash = if hash.is_empty() {
        let json = serde_json::to_string(&config).map_err(config_err)?;
        sha256_hex(json.as_bytes())
    } else {
        hash
    };
    Ok(Resolved { config, label, hash })
}

fn mode_name(mode: MeshMode) -> &'static str {
    match mode {
        MeshMode::Reduced => "reduced",
        MeshMode::Full => "full",
    }
}

/// Runs one mode into `dir` and returns the final simulation.
fn run_mode(cli: &Cli, mode: MeshMode, dir: &Path, lines: &[(String, [Vec2<f64>; 2])]) -> Result<Simulation<f64>, Failure> {
    let start = Instant::now();
    let Resolved { config, label, hash } = resolve(cli, mode)?;
    let (mesh, state) = config.initialize()?;
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut sim = Simulation::new(config.problem.clone(), mesh, state);
    let steps = cli.steps.unwrap_or_else(|| config.num_steps());
    let mut timings = Timings { setup_seconds: start.elapsed().as_secs_f64(), ..Default::default() };
    log::info!("{label}: {} mode, {} cells, {steps} steps", mode_name(mode), sim.mesh.num_cells());

    let mut bulk_series = Series::default();
    let mut iface_series = Series::default();
    let mut snapshot = |sim: &Simulation<f64>, k: usize, timings: &mut Timings| -> Result<(), Failure> {
        let t = Instant::now();
        let names = write_vtk(&sim.mesh, &sim.state, dir, &format!("step_{k:05}"))?;
        bulk_series.push(names[0].clone(), sim.state.time);
        iface_series.push(names[1].clone(), sim.state.time);
        timings.output_seconds += t.elapsed().as_secs_f64();
        Ok(())
    };
    snapshot(&sim, 0, &mut timings)?;

    let audit_file = File::create(dir.join("audit.jsonl")).map_err(io_err)?;
    let mut audit = AuditLog::new(BufWriter::new(audit_file));
    let every = cli.output_every.max(1);
    let mut failure = None;
    for k in 1..=steps {
        let t = Instant::now();
        match sim.step(config.dt) {
            Ok(reports) => {
                for r in &reports {
                    audit.record(r)?;
                }
                timings.solve_seconds += t.elapsed().as_secs_f64();
                if k % every == 0 || k == steps {
                    snapshot(&sim, k, &mut timings)?;
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    audit.flush()?;
    bulk_series.write(&dir.join("bulk.vtk.series"))?;
    iface_series.write(&dir.join("interface.vtk.series"))?;
    for (name, [a, b]) in lines {
        let rows = sample_line(&sim.mesh, &sim.state, *a, *b, cli.samples);
        let f = File::create(dir.join(format!("{name}.csv"))).map_err(io_err)?;
        write_line_csv(BufWriter::new(f), &rows)?;
    }
    let manifest = RunManifest {
        scenario: label,
        scenario_hash: hash,
        mode: mode_name(mode).into(),
        resolution: config.problem.numerics.h,
        t_end: config.t_end,
        dt: config.dt,
        steps,
        newton: config.problem.numerics.newton,
        output_dir: dir.display().to_string(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        seed: cli.seed,
        timings,
    };
    manifest.write(&dir.join("manifest.json"))?;
    if let Some(e) = failure {
        return Err(Failure::Solver(solver_failure(e, dir)));
    }
    Ok(sim)
}

fn solver_failure(e: SolverError, dir: &Path) -> anyhow::Error {
    let last = std::fs::read_to_string(dir.join("audit.jsonl"))
        .ok()
        .and_then(|s| s.lines().last().map(str::to_string))
        .unwrap_or_else(|| "none".into());
    anyhow::anyhow!("{e}\nlast accepted step: {last}")
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let lines = cli.line.iter().map(|l| parse_line(l)).collect::<anyhow::Result<Vec<_>>>().map_err(Failure::Config)?;
    let mode = match (cli.mode, &cli.scenario) {
        (Some(m), _) => m,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario {}", path.display()))
                .map_err(Failure::Config)?;
            match ScenarioFile::parse(&text).map_err(config_err)?.mode {
                Some(MeshMode::Full) => ModeArg::Full,
                _ => ModeArg::Reduced,
            }
        }
        (None, None) => ModeArg::Reduced,
    };
    let modes: &[MeshMode] = match mode {
        ModeArg::Reduced => &[MeshMode::Reduced],
        ModeArg::Full => &[MeshMode::Full],
        ModeArg::Both => &[MeshMode::Reduced, MeshMode::Full],
    };
    // validate before doing any work
    resolve(cli, modes[0])?;
    std::fs::create_dir_all(&cli.out).map_err(io_err)?;
    let single = modes.len() == 1;
    let mut sims = Vec::new();
    for &m in modes {
        let dir = if single { cli.out.clone() } else { cli.out.join(mode_name(m)) };
        sims.push(run_mode(cli, m, &dir, &lines)?);
    }
    if let [r, f] = sims.as_slice() {
        let Some(schedule) = r.problem.schedule else { return Ok(()) };
        for (name, line) in &lines {
            let cmp = compare_reduced_full((&r.mesh, &r.state), (&f.mesh, &f.state), &schedule, *line, cli.samples)
                .map_err(config_err)?;
            let path = cli.out.join(format!("compare_{name}.csv"));
            let mut text = String::from("# fvmm reduced-vs-full v1\narclength,x,y,in_fracture,reduced,full\n");
            for row in &cmp.rows {
                text += &format!(
                    "{:e},{:e},{:e},{},{:e},{:e}\n",
                    row.arclength, row.x, row.y, row.in_fracture as u8, row.reduced, row.full
                );
            }
            std::fs::write(&path, text).map_err(io_err)?;
            println!("{name}: relative L1 saturation difference {:.4e}", cmp.relative_l1());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(2)
        }
    }
}
