//! Experiment driver: `brinkman-fosls run <experiment> [options]`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adapt::{adaptive_loop_with, AdaptRecord, Refinement, SolveOptions};
use crate::analysis::recover_pressure;
use crate::mesh::{parse_fields, TriangleMesh};
use crate::problems::{Experiment, RefinementMode};
use crate::solver::PcgOptions;
use crate::spaces::{build_space, Coefficients, FeFunction, FeSpace, SpaceKind};
use crate::tensor::Vector;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "dof,est,estJ,errU,errM,normDivU,iters";

#[derive(Debug, Parser)]
#[command(name = "brinkman-fosls", version, about = "Least-squares FEM experiments for the Brinkman problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write one CSV table per (t, mode).
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// locking | poiseuille | lshape
    #[arg(value_name = "EXPERIMENT")]
    pub name: Option<String>,
    #[arg(long = "experiment", conflicts_with = "name")]
    pub experiment: Option<String>,
    /// Comma separated; defaults to the experiment's list.
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Option<Vec<f64>>,
    /// standard | augmented (default: augmented)
    #[arg(long)]
    pub space: Option<String>,
    /// uniform | adaptive (default: all modes of the experiment)
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    pub theta: f64,
    /// Stop after the first mesh with at least this many unknowns.
    #[arg(long = "max-dofs")]
    pub max_dofs: Option<f64>,
    #[arg(long = "quad-degree", default_value_t = 6)]
    pub quad_degree: usize,
    #[arg(long = "cg-tol", default_value_t = 1e-10)]
    pub cg_tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also dump mesh and solution of the last step.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub t_values: Vec<f64>,
    pub space: SpaceKind,
    pub modes: Vec<RefinementMode>,
    pub theta: f64,
    pub max_dofs: usize,
    pub quad_degree: usize,
    pub cg_tol: f64,
    pub out: PathBuf,
    pub dump: bool,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        let spec = experiment.spec();
        Self {
            experiment,
            t_values: spec.t_values,
            space: SpaceKind::Augmented,
            modes: spec.modes,
            theta: 0.25,
            max_dofs: spec.max_dofs,
            quad_degree: 6,
            cg_tol: 1e-10,
            out: PathBuf::from("."),
            dump: false,
        }
    }

    pub fn from_args(args: RunArgs) -> Result<Self> {
        let name = args
            .name
            .or(args.experiment)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::InvalidConfig("missing experiment name".into()))?;
        let mut cfg = RunConfig::new(name.parse()?);
        if let Some(t) = args.t {
            cfg.t_values = t;
        }
        if let Some(s) = args.space {
            cfg.space = s.parse()?;
        }
        if let Some(m) = args.mode {
            cfg.modes = vec![m.parse()?];
        }
        if let Some(d) = args.max_dofs {
            if !(d.is_finite() && d >= 1.0) {
                return Err(Error::InvalidConfig(format!("max dofs {d} must be a positive count")));
            }
            cfg.max_dofs = d.round() as usize;
        }
        cfg.theta = args.theta;
        cfg.quad_degree = args.quad_degree;
        cfg.cg_tol = args.cg_tol;
        cfg.out = args.out;
        cfg.dump = args.dump;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() {
            return Err(Error::InvalidConfig("empty t list".into()));
        }
        if let Some(&t) = self.t_values.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidParameter(t));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta {} outside (0, 1]", self.theta)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("cg tolerance {} must be positive", self.cg_tol)));
        }
        crate::quadrature::quadrature_rule(self.quad_degree)?;
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            pcg: PcgOptions {
                tol: self.cg_tol,
                max_iter: None,
            },
            quad_degree: self.quad_degree,
            ..SolveOptions::default()
        }
    }
}

/// `<exp>_<mode>_<t>` with `t` in `{:e}` notation, e.g. `locking_uniform_1e-3`.
pub fn run_stem(experiment: Experiment, mode: RefinementMode, t: f64) -> String {
    format!("{}_{}_{:e}", experiment.name(), mode.name(), t)
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(r: &AdaptRecord) -> String {
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        r.dofs,
        fmt_float(r.est),
        fmt_float(r.est_j),
        opt(r.err_u),
        opt(r.err_m),
        fmt_float(r.norm_div_u),
        r.iterations
    )
}

pub fn write_csv<W: Write>(mut w: W, records: &[AdaptRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Parses a table written by [`write_csv`] into `(dof, est, estJ, errU, errM, normDivU, iters)`.
#[allow(clippy::type_complexity)]
pub fn read_csv(path: &Path) -> Result<Vec<(usize, f64, f64, Option<f64>, Option<f64>, f64, usize)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("expected 7 columns in `{line}`")));
            }
            Ok((int(f[0])?, num(f[1])?, num(f[2])?, opt(f[3])?, opt(f[4])?, num(f[5])?, int(f[6])?))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub t: f64,
    pub mode: RefinementMode,
    pub csv: PathBuf,
    pub records: Vec<AdaptRecord>,
}

/// Runs every `(t, mode)` pair of `cfg`. Solver failures for one `t` are
/// reported on stderr and the remaining runs continue.
pub fn run(cfg: &RunConfig) -> Result<Vec<RunOutcome>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let opts = cfg.solve_options();
    let mut outcomes = Vec::new();
    for &t in &cfg.t_values {
        for &mode in &cfg.modes {
            let stem = run_stem(cfg.experiment, mode, t);
            let refinement = match mode {
                RefinementMode::Uniform => Refinement::Uniform,
                RefinementMode::Adaptive => Refinement::Dorfler(cfg.theta),
            };
            let result = cfg.experiment.problem(t).and_then(|problem| {
                let run = adaptive_loop_with(
                    &problem,
                    cfg.experiment.initial_mesh(),
                    cfg.space,
                    refinement,
                    cfg.max_dofs,
                    &opts,
                    |r, _| {
                        if !r.converged {
                            eprintln!("warning: {stem}: PCG did not converge at {} dofs", r.dofs);
                        }
                    },
                )?;
                if cfg.dump {
                    let space = build_space(&run.mesh, run.kind);
                    dump_solution(&space, &run.solution, t, &cfg.out.join(&stem))?;
                }
                Ok(run.records)
            });
            match result {
                Ok(records) => {
                    let csv = cfg.out.join(format!("{stem}.csv"));
                    write_csv(BufWriter::new(File::create(&csv)?), &records)?;
                    outcomes.push(RunOutcome { t, mode, csv, records });
                }
                Err(e) => eprintln!("error: {stem}: {e}"),
            }
        }
    }
    Ok(outcomes)
}

/// Writes `nodes.txt`, `elements.txt`, `coefficients.txt`, `velocity.txt`
/// (one `u1 u2` row per vertex) and `pressure.txt` (one `mean p0 p1 p2` row per
/// element, vertex values in element order) into `dir`.
pub fn dump_solution(space: &FeSpace, field: &FeFunction, t: f64, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mesh = space.mesh();
    mesh.save(&dir.join("nodes.txt"), &dir.join("elements.txt"))?;

    let coeffs = field.to_coefficients(space);
    let mut w = BufWriter::new(File::create(dir.join("coefficients.txt"))?);
    writeln!(w, "{} {:e}", space.kind().name(), t)?;
    for c in &coeffs.values {
        writeln!(w, "{}", fmt_float(*c))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join("velocity.txt"))?);
    for u in &field.velocity {
        writeln!(w, "{} {}", fmt_float(u[0]), fmt_float(u[1]))?;
    }
    w.flush()?;

    let p = recover_pressure(mesh, field, t);
    let mut w = BufWriter::new(File::create(dir.join("pressure.txt"))?);
    for (v, mean) in p.values.iter().zip(p.element_means()) {
        writeln!(w, "{} {} {} {}", fmt_float(mean), fmt_float(v[0]), fmt_float(v[1]), fmt_float(v[2]))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Dump {
    pub mesh: TriangleMesh,
    pub kind: SpaceKind,
    pub t: f64,
    pub coefficients: Vec<f64>,
    pub velocity: Vec<Vector>,
}

impl Dump {
    /// The discrete field on `space` (built from [`Dump::mesh`] and [`Dump::kind`]).
    pub fn field(&self, space: &FeSpace) -> Result<FeFunction> {
        let c = Coefficients {
            kind: self.kind,
            values: self.coefficients.clone(),
        };
        FeFunction::from_coefficients(space, &c, Some(&self.velocity))
    }
}

pub fn load_dump(dir: &Path) -> Result<Dump> {
    let mesh = TriangleMesh::load(&dir.join("nodes.txt"), &dir.join("elements.txt"))?;
    let mut lines = BufReader::new(File::open(dir.join("coefficients.txt"))?).lines();
    let head = lines.next().ok_or_else(|| Error::Parse("empty coefficient file".into()))??;
    let mut it = head.split_whitespace();
    let kind: SpaceKind = it.next().unwrap_or("").parse()?;
    let t: f64 = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad coefficient header `{head}`")))?;
    let mut coefficients = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            coefficients.push(parse_fields::<f64>(&line, 1)?[0]);
        }
    }
    let mut velocity = Vec::new();
    for line in BufReader::new(File::open(dir.join("velocity.txt"))?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            let f = parse_fields::<f64>(&line, 2)?;
            velocity.push([f[0], f[1]]);
        }
    }
    Ok(Dump {
        mesh,
        kind,
        t,
        coefficients,
        velocity,
    })
}

const USAGE: &str = "usage: brinkman-fosls run <locking|poiseuille|lshape> [--t LIST] [--space standard|augmented] \
[--mode uniform|adaptive] [--theta F] [--max-dofs N] [--quad-degree K] [--cg-tol F] [--out DIR] [--dump]";

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let Command::Run(args) = cli.command;
    if args.name.as_deref().or(args.experiment.as_deref()).unwrap_or("").is_empty() {
        eprintln!("{USAGE}");
        return 2;
    }
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match run(&cfg) {
        Ok(outcomes) => {
            for o in &outcomes {
                let last = o.records.last().expect("at least one step");
                println!(
                    "{}: {} steps, {} dofs, est {:.3e}",
                    o.csv.display(),
                    o.records.len(),
                    last.dofs,
                    last.est
                );
            }
            if outcomes.len() == cfg.t_values.len() * cfg.modes.len() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stem_format() {
        assert_eq!(run_stem(Experiment::Locking, RefinementMode::Uniform, 1e-3), "locking_uniform_1e-3");
        assert_eq!(run_stem(Experiment::Poiseuille, RefinementMode::Adaptive, 5e-3), "poiseuille_adaptive_5e-3");
        assert_eq!(run_stem(Experiment::Lshape, RefinementMode::Adaptive, 1.0), "lshape_adaptive_1e0");
    }

    #[test]
    fn parse_run_args() {
        let cli = Cli::try_parse_from([
            "x", "run", "locking", "--t", "1e-3,0.1", "--space", "standard", "--mode", "uniform", "--max-dofs", "2e4",
        ])
        .unwrap();
        let Command::Run(args) = cli.command;
        let cfg = RunConfig::from_args(args).unwrap();
        assert_eq!(cfg.t_values, vec![1e-3, 0.1]);
        assert_eq!(cfg.space, SpaceKind::Standard);
        assert_eq!(cfg.modes, vec![RefinementMode::Uniform]);
        assert_eq!(cfg.max_dofs, 20_000);
    }

    #[test]
    fn rejects_bad_config() {
        for extra in [["--t", "0"], ["--t", "2"], ["--theta", "0"], ["--space", "p2"]] {
            let cli = Cli::try_parse_from(["x", "run", "lshape", extra[0], extra[1]]).unwrap();
            let Command::Run(args) = cli.command;
            assert!(RunConfig::from_args(args).is_err(), "{extra:?}");
        }
    }

    #[test]
    fn missing_name_exits_with_two() {
        assert_eq!(main_with_args(["x", "run"]), 2);
        assert_eq!(main_with_args(["x", "run", ""]), 2);
    }
}
