//! Command-line front end: JSON jobs in, JSON/CSV/text reports out.
//!
//! Exit codes: 0 success, 1 schema or usage error, 2 precondition failure,
//! 3 verification-suite failure.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kahlerdec::error::Error;
use kahlerdec::geometry::{nabla_omega, realize_pointwise, RealizeMode};
use kahlerdec::hspace::{decompose, module_dimensions, project_to_hspace, DEFAULT_TOL};
use kahlerdec::invariants::psi_vector;
use kahlerdec::job::JobSpec;
use kahlerdec::verify::{run_suite, Mutation, SuiteOptions, SuiteReport};
use kahlerdec::{HermitianSpace, Kind, Tensor3};

#[derive(Parser)]
#[command(
    name = "kahlerdec",
    version,
    about = "Decomposition, classification and pointwise realization of \
             covariant-derivative Kähler tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a tensor (or a chart evaluated at the origin).
    Classify(IoArgs),
    /// Full four-component decomposition with dense components.
    Decompose(IoArgs),
    /// Dimension table for a list of spaces.
    Dims(IoArgs),
    /// The four quadratic invariants of a tensor.
    Invariants(IoArgs),
    /// Realize a tensor at a point by deforming the structure or metric.
    Realize(IoArgs),
    /// Run the property-verification suite over a grid of spaces.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct IoArgs {
    /// Job JSON file; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Presence tolerance for class flags (overrides the job options).
    #[arg(long)]
    tol: Option<f64>,
    /// Finite-difference step (overrides the job options).
    #[arg(long)]
    h: Option<f64>,
    /// Random seed (overrides the job options).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Grid dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 6, 8])]
    dims: Vec<usize>,
    /// Random tensors per space.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    h: f64,
    /// Deliberately inject a defect (non-vacuity check).
    #[arg(long, value_enum, hide = true)]
    mutate: Option<MutateArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MutateArg {
    Pi3Sign,
}

#[derive(Serialize)]
struct SpaceDesc {
    m: usize,
    p: usize,
    q: usize,
    kind: Kind,
}

impl SpaceDesc {
    fn of(space: &HermitianSpace) -> Self {
        let (p, q) = space.signature();
        SpaceDesc {
            m: space.dim(),
            p,
            q,
            kind: space.kind(),
        }
    }
}

#[derive(Serialize)]
struct ClassifyOut {
    space: SpaceDesc,
    tol: f64,
    label: String,
    named_class: Option<String>,
    flags: [bool; 4],
    norms: [f64; 4],
    tau1: Vec<f64>,
    residual_membership: f64,
    residual_reconstruction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<[Vec<f64>; 4]>,
}

#[derive(Serialize)]
struct InvariantsOut {
    space: SpaceDesc,
    psi: [f64; 4],
}

#[derive(Serialize)]
struct DimsRow {
    m: usize,
    p: usize,
    q: usize,
    kind: Kind,
    dim_h: usize,
    dim_w1: usize,
    dim_w2: usize,
    dim_w3: usize,
    dim_w4: usize,
    dim_u3: usize,
    sum_check: usize,
}

fn read_job(args: &IoArgs) -> Result<JobSpec, Error> {
    let text = match &args.input {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Error::Schema(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    JobSpec::from_json(&text)
}

fn emit(args_output: &Option<PathBuf>, text: String) -> Result<(), Error> {
    match args_output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Schema(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// The input tensor of a job: explicit entries, or the covariant derivative
/// of the K\u{e4}hler form of the declared chart at the origin (projected
/// onto the constrained space to strip finite-difference noise).
fn job_tensor(job: &JobSpec, space: &HermitianSpace, h: f64) -> Result<Tensor3, Error> {
    if job.tensor.is_some() {
        return job.tensor(space.dim());
    }
    if let Some(chart_spec) = &job.chart {
        let chart = chart_spec.build(space)?;
        let fd = nabla_omega(&chart, &vec![0.0; chart.dim()], h)?;
        return project_to_hspace(&fd, chart.space());
    }
    Err(Error::Schema(
        "job needs a \"tensor\" or \"chart\" block".into(),
    ))
}

fn pick<T: Copy>(flag: Option<T>, job: Option<T>, default: T) -> T {
    flag.or(job).unwrap_or(default)
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Para => "para",
        Kind::Pseudo => "pseudo",
    }
}

fn render_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Schema(e.to_string()))
}

fn classify_out(job: &JobSpec, args: &IoArgs, with_components: bool) -> Result<ClassifyOut, Error> {
    let space = job.space()?;
    let h = pick(args.h, job.options.h, 1e-4);
    let tol = pick(args.tol, job.options.tol, DEFAULT_TOL);
    let tensor = job_tensor(job, &space, h)?;
    let report = decompose(&tensor, &space, tol)?;
    Ok(ClassifyOut {
        space: SpaceDesc::of(&space),
        tol,
        label: report.label.subset_string(),
        named_class: report.label.name.clone(),
        flags: report.label.flags,
        norms: report.norms,
        tau1: report.tau1.clone(),
        residual_membership: report.residual_membership,
        residual_reconstruction: report.residual_reconstruction,
        components: with_components.then(|| {
            let comp = |i: usize| report.components[i].data().to_vec();
            [comp(0), comp(1), comp(2), comp(3)]
        }),
    })
}

fn render_classify(out: &ClassifyOut, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => render_json(out),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            s.push_str(&format!("label,{}\n", out.label));
            if let Some(name) = &out.named_class {
                s.push_str(&format!("named_class,{name}\n"));
            }
            for (i, n) in out.norms.iter().enumerate() {
                s.push_str(&format!("norm_w{},{n}\n", i + 1));
            }
            s.push_str(&format!("residual_membership,{}\n", out.residual_membership));
            Ok(s)
        }
        Format::Text => {
            let mut s = format!(
                "space: m={} signature=({},{}) kind={}\n",
                out.space.m,
                out.space.p,
                out.space.q,
                kind_name(out.space.kind)
            );
            s.push_str(&format!("label: {}\n", out.label));
            if let Some(name) = &out.named_class {
                s.push_str(&format!("named class: {name}\n"));
            }
            s.push_str(&format!(
                "component norms: W1={:.6e} W2={:.6e} W3={:.6e} W4={:.6e}\n",
                out.norms[0], out.norms[1], out.norms[2], out.norms[3]
            ));
            s.push_str(&format!(
                "residuals: membership={:.3e} reconstruction={:.3e} (tol={:.1e})",
                out.residual_membership, out.residual_reconstruction, out.tol
            ));
            Ok(s)
        }
    }
}

fn cmd_classify(args: &IoArgs, with_components: bool) -> Result<(), Error> {
    let job = read_job(args)?;
    let out = classify_out(&job, args, with_components)?;
    emit(&args.output, render_classify(&out, args.format)?)
}

fn cmd_dims(args: &IoArgs) -> Result<(), Error> {
    let job = read_job(args)?;
    let specs = match (&job.spaces, &job.space) {
        (Some(list), _) => list.clone(),
        (None, Some(single)) => vec![*single],
        (None, None) => return Err(Error::Schema("dims needs \"spaces\" or \"space\"".into())),
    };
    let mut rows = Vec::new();
    for spec in &specs {
        let space = spec.build()?;
        let dims = module_dimensions(&space);
        let (p, q) = space.signature();
        rows.push(DimsRow {
            m: space.dim(),
            p,
            q,
            kind: space.kind(),
            dim_h: dims.dim_h,
            dim_w1: dims.dim_w[0],
            dim_w2: dims.dim_w[1],
            dim_w3: dims.dim_w[2],
            dim_w4: dims.dim_w[3],
            dim_u3: dims.dim_u3,
            sum_check: dims.dim_w.iter().sum(),
        });
    }
    let text = match args.format {
        Format::Json => render_json(&rows)?,
        Format::Csv | Format::Text => {
            let mut s =
                String::from("m,p,q,kind,dimH,dimW1,dimW2,dimW3,dimW4,dimU3,sum_check\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.m,
                    r.p,
                    r.q,
                    kind_name(r.kind),
                    r.dim_h,
                    r.dim_w1,
                    r.dim_w2,
                    r.dim_w3,
                    r.dim_w4,
                    r.dim_u3,
                    r.sum_check
                ));
            }
            s
        }
    };
    emit(&args.output, text)
}

fn cmd_invariants(args: &IoArgs) -> Result<(), Error> {
    let job = read_job(args)?;
    let space = job.space()?;
    let h = pick(args.h, job.options.h, 1e-4);
    let tensor = job_tensor(&job, &space, h)?;
    let out = InvariantsOut {
        space: SpaceDesc::of(&space),
        psi: psi_vector(&tensor, &space)?,
    };
    let text = match args.format {
        Format::Json => render_json(&out)?,
        Format::Csv => {
            let mut s = String::from("invariant,value\n");
            for (i, v) in out.psi.iter().enumerate() {
                s.push_str(&format!("psi{},{v}\n", i + 1));
            }
            s
        }
        Format::Text => format!(
            "psi1={:.12e}\npsi2={:.12e}\npsi3={:.12e}\npsi4={:.12e}",
            out.psi[0], out.psi[1], out.psi[2], out.psi[3]
        ),
    };
    emit(&args.output, text)
}

fn cmd_realize(args: &IoArgs) -> Result<(), Error> {
    let job = read_job(args)?;
    let space = job.space()?;
    let h = pick(args.h, job.options.h, 1e-4);
    let mode = job.mode.unwrap_or(RealizeMode::VaryJ);
    let target = job.tensor(space.dim())?;
    let (_, report) = realize_pointwise(&target, &space, mode, h)?;
    let text = match args.format {
        Format::Json => render_json(&report)?,
        Format::Csv => format!(
            "key,value\nachieved_error,{}\nsolver_residual,{}\nh,{}\n",
            report.achieved_error, report.solver_residual, report.h
        ),
        Format::Text => format!(
            "mode: {:?}\nchart family: {:?} (bump radius {})\nsolver residual: {:.3e}\n\
             achieved error: {:.3e} at h={:.1e}{}",
            report.mode,
            report.family,
            report.bump_radius,
            report.solver_residual,
            report.achieved_error,
            report.h,
            match report.variant {
                Some(v) => format!("\nsign variant selected: {v:?}"),
                None => String::new(),
            }
        ),
    };
    emit(&args.output, text)
}

fn render_suite(report: &SuiteReport, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => render_json(report),
        Format::Csv => {
            let mut s = String::from("property,passed,residual,threshold\n");
            for r in &report.results {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.name, r.passed, r.residual, r.threshold
                ));
            }
            Ok(s)
        }
        Format::Text => {
            let mut s = String::new();
            for r in &report.results {
                s.push_str(&format!(
                    "{} {:32} residual {:10.3e} (threshold {:.1e})\n",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.residual,
                    r.threshold
                ));
            }
            s.push_str(if report.passed {
                "suite: PASS"
            } else {
                "suite: FAIL"
            });
            Ok(s)
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Error> {
    let opts = SuiteOptions {
        dims: args.dims.clone(),
        samples: args.samples,
        seed: args.seed,
        h: args.h,
        mutation: args.mutate.map(|MutateArg::Pi3Sign| Mutation::FlipPi3Sign),
    };
    let report = run_suite(&opts)?;
    emit(&args.output, render_suite(&report, args.format)?)?;
    Ok(report.passed)
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Schema(_) | Error::MalformedString(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path with success
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match &cli.command {
        Command::Classify(args) => cmd_classify(args, false).map(|()| true),
        Command::Decompose(args) => cmd_classify(args, true).map(|()| true),
        Command::Dims(args) => cmd_dims(args).map(|()| true),
        Command::Invariants(args) => cmd_invariants(args).map(|()| true),
        Command::Realize(args) => cmd_realize(args).map(|()| true),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
