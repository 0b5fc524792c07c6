//! Command-line front end.
//!
//! Every parameter is a flag on [`RunConfig`]; a JSON file passed with
//! `--config` holds the same fields and overrides the flags. All inputs are
//! parsed and validated before any computation, and output files are written
//! atomically, so a bad config leaves nothing behind.
//!
//! Exit codes: 0 success, 1 an acceptance criterion failed, 2 invalid input or
//! config, 3 a solver or certification failure.

use crate::acceptance::{self, Options};
use crate::discrimination::{advantage_ratio, optimal_binary_task, random_search, DiscriminationTask};
use crate::error::{Error, Result};
use crate::fock::{hilbert_gallery, make_state_with_cap, DEFAULT_TAIL_CAP};
use crate::free_sets::{CoherentGrid, FreeSetModel, FreeSetTag};
use crate::io::{matrix_to_bytes, matrix_to_json, read_matrix};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::measures::{
    cat_mixture, cat_robustness, closed_form, l1_norm, pseudo_inverse_upper, schmidt_robustness, ClosedFormKind,
    Method, RobustnessBounds,
};
use crate::report::{to_csv, to_json, variant_name, Envelope, Metadata, Record};
use crate::solver::{
    dual_lower, feasible_point_upper, feasible_point_upper_correlated, sandwich, SolverConfig, Witness,
};
use crate::{DensityOperator, State, StateSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "cvrobust",
    version,
    about = "Generalized robustness of bosonic quantum resources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON file with RunConfig fields; its values override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for `<command>.<format>` when --output is absent.
    #[arg(long, global = true, env = "CVROBUST_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Robustness of one state: closed form when known, numerical bracket otherwise.
    Measure,
    /// Certified bracket from cutting planes and the dual witness.
    Sandwich,
    /// Lower bound from a witness matrix file.
    Witness,
    /// Advantage ratio of a witness-built or file-supplied discrimination task.
    Discriminate,
    /// Table over a parameter family (squeezed, cat-plus, gallery).
    Sweep,
    /// Hilbert-matrix gallery checks across truncations.
    Gallery,
    /// Runs the acceptance suite.
    ReproduceAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Measure => "measure",
            Command::Sandwich => "sandwich",
            Command::Witness => "witness",
            Command::Discriminate => "discriminate",
            Command::Sweep => "sweep",
            Command::Gallery => "gallery",
            Command::ReproduceAll => "reproduce-all",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Squeezed,
    CatPlus,
    Gallery,
}

/// Run parameters; unset fields take per-command defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// State, e.g. `fock:3`, `coherent:1.5`, `squeezed:0.5`, `cat+:1`, `tmsv:lambda=0.5`.
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// classical | incoherent | separable (default classical).
    #[arg(long, global = true)]
    pub free: Option<String>,
    /// Fock levels per mode (default 40).
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Largest tolerated discarded probability (default 1e-8).
    #[arg(long, global = true)]
    pub tail_cap: Option<f64>,
    /// Coherent grid radius (default 6).
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Coherent grid radial step (default 0.1).
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Coherent grid points per ring (default 64).
    #[arg(long, global = true)]
    pub angles: Option<usize>,
    /// Relative gap at which the sandwich stops (default 1e-3).
    #[arg(long, global = true)]
    pub gap_tol: Option<f64>,
    /// Eigenvalue tolerance of the cutting planes (default 1e-9).
    #[arg(long, global = true)]
    pub cut_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_cuts: Option<usize>,
    #[arg(long, global = true)]
    pub max_refinements: Option<usize>,
    /// Product points discretizing the separable set (default 200).
    #[arg(long, global = true)]
    pub product_points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Witness matrix: read by witness/discriminate, written by sandwich.
    #[arg(long, global = true)]
    pub witness: Option<PathBuf>,
    /// Discrimination task JSON for discriminate.
    #[arg(long, global = true)]
    pub task: Option<PathBuf>,
    /// Seeded random tasks evaluated by discriminate.
    #[arg(long, global = true)]
    pub random_tasks: Option<usize>,
    /// Branches of each random task (default 2).
    #[arg(long, global = true)]
    pub branches: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    /// Sweep parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Gallery truncations, comma separated (default 50,100,200,400).
    #[arg(long, global = true, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Plain CSV plot data for sweep: x followed by one column per quantity.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// measure: run the numerical bracket even when a closed form is known.
    #[arg(long, global = true)]
    #[serde(default)]
    pub solve: bool,
    /// reproduce-all: one refinement round and no determinism rerun.
    #[arg(long, global = true)]
    #[serde(default)]
    pub quick: bool,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig {
            $($f: $top.$f.or($base.$f),)*
            solve: $top.solve || $base.solve,
            quick: $top.quick || $base.quick,
        }
    };
}

impl RunConfig {
    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; state, free, dim, tail_cap, radius, step, angles, gap_tol, cut_tol, max_cuts,
            max_refinements, product_points, seed, format, output, witness, task, random_tasks, branches,
            family, values, dims, plot)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Validated parameters shared by the commands.
struct Resolved {
    cfg: RunConfig,
    format: Format,
    seed: u64,
    solver: SolverConfig,
    grid: CoherentGrid,
    tail_cap: f64,
}

impl Resolved {
    fn new(cfg: RunConfig) -> Result<Self> {
        let seed = cfg.seed.unwrap_or(0);
        let d = SolverConfig::default();
        let solver = SolverConfig {
            cut_tol: cfg.cut_tol.unwrap_or(d.cut_tol),
            max_cuts: cfg.max_cuts.unwrap_or(d.max_cuts),
            gap_tol: cfg.gap_tol.unwrap_or(d.gap_tol),
            max_refinements: cfg.max_refinements.unwrap_or(d.max_refinements),
            product_points: cfg.product_points.unwrap_or(d.product_points),
            seed,
            ..d
        };
        solver.validate()?;
        let grid = CoherentGrid::new(
            cfg.radius.unwrap_or(6.0),
            cfg.step.unwrap_or(0.1),
            cfg.angles.unwrap_or(64),
        )?;
        let tail_cap = cfg.tail_cap.unwrap_or(DEFAULT_TAIL_CAP);
        if !(tail_cap > 0.0 && tail_cap < 1.0) {
            return Err(Error::Config(format!("tail_cap {tail_cap} outside (0, 1)")));
        }
        if cfg.dim == Some(0) {
            return Err(Error::Config("dim must be positive".into()));
        }
        Ok(Self {
            format: cfg.format.unwrap_or_default(),
            seed,
            solver,
            grid,
            tail_cap,
            cfg,
        })
    }

    fn dim(&self, default: usize) -> usize {
        self.cfg.dim.unwrap_or(default)
    }

    fn spec(&self) -> Result<StateSpec> {
        let s = self
            .cfg
            .state
            .as_deref()
            .ok_or_else(|| Error::Config("--state is required".into()))?;
        s.parse()
    }

    fn free(&self) -> Result<FreeSetTag> {
        self.cfg.free.as_deref().unwrap_or("classical").parse()
    }

    fn state(&self, spec: &StateSpec, default_dim: usize) -> Result<State> {
        make_state_with_cap(spec, self.dim(default_dim), self.tail_cap)
    }

    fn model(&self, tag: FreeSetTag, rho: &DensityOperator) -> Result<FreeSetModel> {
        Ok(match tag {
            FreeSetTag::Classical => {
                if rho.is_bipartite() {
                    return Err(Error::Config("the classical set is single-mode here".into()));
                }
                FreeSetModel::classical(self.grid.clone())
            }
            FreeSetTag::Incoherent => FreeSetModel::incoherent(),
            FreeSetTag::Separable => match rho.dims() {
                [a, b] => FreeSetModel::separable((*a, *b)),
                _ => return Err(Error::NotBipartite),
            },
        })
    }

    fn meta(&self, rho_dims: &[usize], tail: f64, method: &str, tol: f64) -> Metadata {
        Metadata::new(rho_dims.to_vec(), tail, method, tol)
    }
}

/// Rendered output of a command.
pub struct Execution {
    pub command: Command,
    pub text: String,
    /// Main output file; `None` means stdout.
    pub destination: Option<PathBuf>,
    /// Extra files (path, contents) written next to the main output.
    pub attachments: Vec<(PathBuf, Attachment)>,
    /// False only when an acceptance criterion failed.
    pub passed: bool,
}

pub enum Attachment {
    Text(String),
    Matrix(CMatrix),
}

/// Parses the config and runs the command without touching the filesystem
/// beyond reading inputs.
pub fn execute(cli: &Cli) -> Result<Execution> {
    let mut cfg = cli.run.clone();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg = cfg.overlay(RunConfig::from_json(&text)?);
    }
    let r = Resolved::new(cfg)?;
    let ext = match r.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let destination = r.cfg.output.clone().or_else(|| {
        cli.output_dir
            .as_ref()
            .map(|d| d.join(format!("{}.{ext}", cli.command.name())))
    });
    let mut attachments = Vec::new();
    let mut passed = true;
    let records = match cli.command {
        Command::Measure => measure(&r)?,
        Command::Sandwich => cmd_sandwich(&r, &mut attachments)?,
        Command::Witness => cmd_witness(&r)?,
        Command::Discriminate => discriminate(&r)?,
        Command::Sweep => sweep(&r, &mut attachments)?,
        Command::Gallery => gallery_records(&r.cfg.dims.clone().unwrap_or(vec![50, 100, 200, 400]))?,
        Command::ReproduceAll => {
            let report = acceptance::run_all(
                &Options {
                    quick: r.cfg.quick,
                    seed: r.seed,
                },
                |o, t| eprintln!("{} ({:.1}s)", o.summary(), t.as_secs_f64()),
            );
            passed = report.passed;
            let text = match r.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let flat: Vec<Record> = report
                        .criteria
                        .iter()
                        .flat_map(|c| {
                            c.records.iter().cloned().map(move |mut rec| {
                                rec.label = format!("criterion{}/{}", c.id, rec.label);
                                rec
                            })
                        })
                        .collect();
                    to_csv(&flat)?
                }
            };
            return Ok(Execution {
                command: cli.command,
                text,
                destination,
                attachments,
                passed,
            });
        }
    };
    let text = match r.format {
        Format::Json => to_json(&Envelope::new(cli.command.name(), records))?,
        Format::Csv => to_csv(&records)?,
    };
    Ok(Execution {
        command: cli.command,
        text,
        destination,
        attachments,
        passed,
    })
}

fn bound_records(
    label: &str,
    b: &RobustnessBounds,
    reference: Option<(f64, ClosedFormKind)>,
    meta: impl Fn(Method) -> Metadata,
) -> Vec<Record> {
    let mut lower = Record::new(label, "lower", b.lower, meta(b.lower_method));
    let mut upper = Record::new(label, "upper", b.upper, meta(b.upper_method));
    if let Some((v, kind)) = reference {
        upper = upper.against(v);
        if kind == ClosedFormKind::Exact {
            lower = lower.against(v);
        }
    }
    vec![lower, upper]
}

fn measure(r: &Resolved) -> Result<Vec<Record>> {
    let spec = r.spec()?;
    let tag = r.free()?;
    let state = r.state(&spec, 40)?;
    let rho = state.density();
    let model = r.model(tag, &rho)?;
    let cf = closed_form(&spec, tag).ok();
    let reference = cf.map(|c| (c.value, c.kind));
    let label = format!("{spec}/{}", tag.name());
    let exact_known = cf.is_some_and(|c| c.kind == ClosedFormKind::Exact);
    let (bounds, tol) = match (&state, tag) {
        _ if exact_known && !r.cfg.solve => (cf.expect("checked").bounds(), 0.0),
        (State::Pure(psi), FreeSetTag::Separable) => (schmidt_robustness(psi)?, 1e-12),
        _ => (sandwich(&rho, &model, &r.solver)?.bounds, r.solver.gap_tol),
    };
    Ok(bound_records(&label, &bounds, reference, |m| {
        r.meta(rho.dims(), rho.tail_weight(), &variant_name(&m), tol)
    }))
}

fn cmd_sandwich(r: &Resolved, attachments: &mut Vec<(PathBuf, Attachment)>) -> Result<Vec<Record>> {
    let spec = r.spec()?;
    let tag = r.free()?;
    let rho = r.state(&spec, 40)?.density();
    let model = r.model(tag, &rho)?;
    let rep = sandwich(&rho, &model, &r.solver)?;
    let label = format!("{spec}/{}", tag.name());
    let reference = closed_form(&spec, tag).ok().map(|c| (c.value, c.kind));
    let meta = |m: &str| r.meta(rho.dims(), rho.tail_weight(), m, r.solver.gap_tol);
    let mut out = bound_records(&label, &rep.bounds, reference, |m| meta(&variant_name(&m)));
    let termination = variant_name(&rep.termination);
    out.push(Record::new(&label, "lp_value", rep.lp_value, meta(&termination)));
    for (q, v) in [
        ("iterations", rep.iterations),
        ("cuts", rep.cuts),
        ("refinements", rep.refinements),
        ("discretization", rep.discretization),
    ] {
        out.push(Record::new(&label, q, v as f64, meta(&termination)));
    }
    if let Some(path) = &r.cfg.witness {
        attachments.push((path.clone(), Attachment::Matrix(rep.witness.operator.clone())));
    }
    Ok(out)
}

fn load_witness(r: &Resolved) -> Result<CMatrix> {
    let path = r
        .cfg
        .witness
        .as_ref()
        .ok_or_else(|| Error::Config("--witness is required".into()))?;
    read_matrix(path).map_err(|e| match e {
        Error::Io(e) => Error::Config(format!("{}: {e}", path.display())),
        other => other,
    })
}

fn cmd_witness(r: &Resolved) -> Result<Vec<Record>> {
    let spec = r.spec()?;
    let tag = r.free()?;
    let w = load_witness(r)?;
    let rho = r.state(&spec, w.nrows())?.density();
    if w.nrows() != rho.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{}-level witness for a {}-level state",
            w.nrows(),
            rho.dim()
        )));
    }
    let model = r.model(tag, &rho)?;
    let candidate = Witness::evaluate(w, &model)?;
    let b = dual_lower(&rho, &model, &candidate)?;
    let label = format!("{spec}/{}", tag.name());
    let cert = variant_name(&candidate.free_value.certification);
    let meta = |m: &str| r.meta(rho.dims(), rho.tail_weight(), m, model.tolerance);
    Ok(vec![
        Record::new(
            &label,
            "expectation",
            candidate.expectation(rho.matrix()),
            meta("trace"),
        ),
        Record::new(&label, "free_value", candidate.free_value.value, meta(&cert)),
        Record::new(&label, "lower", b.lower, meta(&variant_name(&b.lower_method))).check(b.certified),
    ])
}

fn discriminate(r: &Resolved) -> Result<Vec<Record>> {
    let spec = r.spec()?;
    let tag = r.free()?;
    let (task, dim) = match (&r.cfg.task, &r.cfg.witness) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let task: DiscriminationTask =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("task: {e}")))?;
            let d = task.dim();
            (Some(task), d)
        }
        (None, Some(_)) => (None, load_witness(r)?.nrows()),
        (None, None) => (None, r.dim(40)),
    };
    let rho = r.state(&spec, dim)?.density();
    if rho.dim() != dim {
        return Err(Error::ShapeMismatch(format!(
            "{dim}-level task for a {}-level state",
            rho.dim()
        )));
    }
    let model = r.model(tag, &rho)?;
    let task = match task {
        Some(t) => Some(t),
        None if r.cfg.witness.is_some() => {
            let w = Witness::evaluate(load_witness(r)?, &model)?.rescale()?;
            Some(optimal_binary_task(&w)?)
        }
        None => None,
    };
    if task.is_none() && r.cfg.random_tasks.is_none() {
        return Err(Error::Config(
            "discriminate needs --task, --witness or --random-tasks".into(),
        ));
    }
    let label = format!("{spec}/{}", tag.name());
    let meta = |m: &str| r.meta(rho.dims(), rho.tail_weight(), m, model.tolerance);
    let mut out = Vec::new();
    if let Some(task) = task {
        let a = advantage_ratio(&rho, &task, &model)?;
        let cert = variant_name(&a.free_maximizer.certification);
        out.push(Record::new(&label, "p_success", a.p_rho, meta("trace")));
        out.push(Record::new(&label, "p_free_best", a.p_free_best, meta(&cert)));
        out.push(Record::new(&label, "advantage_ratio", a.ratio, meta(&cert)));
    }
    if let Some(n) = r.cfg.random_tasks {
        let branches = r.cfg.branches.unwrap_or(2);
        if branches == 0 {
            return Err(Error::Config("branches must be positive".into()));
        }
        for (k, a) in random_search(&rho, &model, branches, n, r.seed)?.iter().enumerate() {
            let cert = variant_name(&a.free_maximizer.certification);
            out.push(Record::new(
                format!("{label}/task{k}"),
                "advantage_ratio",
                a.ratio,
                meta(&cert),
            ));
        }
    }
    Ok(out)
}

fn sweep(r: &Resolved, attachments: &mut Vec<(PathBuf, Attachment)>) -> Result<Vec<Record>> {
    let family = r
        .cfg
        .family
        .ok_or_else(|| Error::Config("--family is required".into()))?;
    let grid = |from: f64, step: f64, n: usize| (0..n).map(|k| from + step * k as f64).collect::<Vec<f64>>();
    let (records, xs): (Vec<Record>, Vec<(f64, usize)>) = match family {
        Family::Squeezed => {
            let values = r.cfg.values.clone().unwrap_or_else(|| grid(0.1, 0.1, 10));
            let dim = r.dim(64);
            let model = FreeSetModel::classical(r.grid.clone());
            let rows = values
                .par_iter()
                .map(|&x| -> Result<Vec<Record>> {
                    let rho = make_state_with_cap(&StateSpec::Squeezed { r: x }, dim, r.tail_cap)?.density();
                    let b = sandwich(&rho, &model, &r.solver)?.bounds;
                    let label = format!("squeezed:{x}");
                    let meta = |m: Method| r.meta(rho.dims(), rho.tail_weight(), &variant_name(&m), r.solver.gap_tol);
                    Ok(bound_records(
                        &label,
                        &b,
                        Some((x.abs().exp(), ClosedFormKind::Exact)),
                        meta,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            flatten_rows(&values, rows)
        }
        Family::CatPlus => {
            let values = r.cfg.values.clone().unwrap_or_else(|| grid(0.5, 0.5, 6));
            let dim = r.dim(60);
            let rows = values
                .par_iter()
                .map(|&a| -> Result<Vec<Record>> {
                    let state = make_state_with_cap(&StateSpec::CatPlus { alpha: a }, dim, r.tail_cap)?;
                    let psi = state.pure().expect("cat states are pure");
                    let up = pseudo_inverse_upper(psi, &cat_mixture(a, dim)?)?;
                    let meta = r.meta(
                        &[dim],
                        psi.tail_weight(),
                        &variant_name(&Method::PseudoInverse),
                        up.cutoff,
                    );
                    Ok(vec![
                        Record::new(format!("cat+:{a}"), "upper", up.value, meta).against(cat_robustness(a, true))
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            flatten_rows(&values, rows)
        }
        Family::Gallery => {
            let dims = r.cfg.dims.clone().unwrap_or(vec![50, 100, 200, 400]);
            let rows = dims
                .iter()
                .map(|&d| gallery_records(&[d]))
                .collect::<Result<Vec<_>>>()?;
            flatten_rows(&dims.iter().map(|&d| d as f64).collect::<Vec<_>>(), rows)
        }
    };
    if let Some(path) = &r.cfg.plot {
        attachments.push((path.clone(), Attachment::Text(plot_table(&records, &xs))));
    }
    Ok(records)
}

/// Concatenates per-parameter rows, remembering which x each record belongs to.
fn flatten_rows(xs: &[f64], rows: Vec<Vec<Record>>) -> (Vec<Record>, Vec<(f64, usize)>) {
    let mut records = Vec::new();
    let mut owners = Vec::new();
    for (&x, row) in xs.iter().zip(rows) {
        owners.push((x, row.len()));
        records.extend(row);
    }
    (records, owners)
}

/// Wide CSV: `x` then one column per distinct `label-suffix/quantity`, in first-seen order.
fn plot_table(records: &[Record], owners: &[(f64, usize)]) -> String {
    let column = |r: &Record| {
        let suffix = r.label.split_once(':').map_or("", |(head, _)| head);
        format!("{suffix}_{}", r.quantity)
    };
    let mut columns: Vec<String> = Vec::new();
    for r in records {
        let c = column(r);
        if !columns.contains(&c) {
            columns.push(c);
        }
    }
    let mut out = String::from("x");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    let mut at = 0;
    for &(x, n) in owners {
        let mut row = vec![String::new(); columns.len()];
        for r in &records[at..at + n] {
            let k = columns.iter().position(|c| *c == column(r)).expect("collected above");
            row[k] = r.value.to_string();
        }
        at += n;
        out.push_str(&format!("{x},{}\n", row.join(",")));
    }
    out
}

fn gallery_records(dims: &[usize]) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for &dim in dims {
        let g = hilbert_gallery(dim)?;
        let diag = CVector::from_iterator(dim, g.diagonal.iter().map(|&x| C64::new(x, 0.0)));
        let free_diag = DensityOperator::new(vec![dim], CMatrix::from_diagonal(&diag), 0.0)?;
        for (name, omega, rho) in [
            ("plus", &g.omega_plus, &g.rho_plus),
            ("minus", &g.omega_minus, &g.rho_minus),
        ] {
            let label = format!("gallery_{name}:{dim}");
            let meta = |m: &str| Metadata::new(vec![dim], 0.0, m, crate::fock::PSD_TOL);
            out.push(Record::new(
                &label,
                "omega_min_eigenvalue",
                linalg::min_eigenvalue(omega.matrix()),
                meta("eigendecomposition"),
            ));
            out.push(Record::new(
                &label,
                "rho_negativity",
                rho.negativity(),
                meta("partial_transpose"),
            ));
            out.push(Record::new(
                &label,
                "omega_l1_norm",
                l1_norm(omega.matrix()),
                meta("entrywise"),
            ));
            let sep = feasible_point_upper_correlated(rho, &g.separable_average(), 2.0)?;
            out.push(Record::new(&label, "separable_upper", sep, meta("feasible_point")));
            let inc = feasible_point_upper(omega, &free_diag, 2.0)?;
            out.push(Record::new(&label, "incoherent_upper", inc, meta("feasible_point")));
        }
    }
    Ok(out)
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible
        | Error::Rejected(_)
        | Error::GridTooCoarse { .. }
        | Error::OutsideSupport(_)
        | Error::CutoffSensitive { .. }
        | Error::TruncationUnsound(_)
        | Error::ZeroWitness
        | Error::NoClosedForm(_) => 3,
        _ => 2,
    }
}

/// Writes `contents` beside `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Runs the command and writes its outputs; the return value is the exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let exec = match execute(cli) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = write_outputs(&exec) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if exec.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_outputs(exec: &Execution) -> Result<()> {
    for (path, att) in &exec.attachments {
        let bytes = match att {
            Attachment::Text(t) => t.clone().into_bytes(),
            Attachment::Matrix(m) if path.extension().is_some_and(|e| e == "bin") => matrix_to_bytes(m),
            Attachment::Matrix(m) => matrix_to_json(m).into_bytes(),
        };
        write_atomic(path, &bytes)?;
    }
    match &exec.destination {
        Some(path) => write_atomic(path, exec.text.as_bytes()),
        None => Ok(std::io::stdout().write_all(exec.text.as_bytes())?),
    }
}
