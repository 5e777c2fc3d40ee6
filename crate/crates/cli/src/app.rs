//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ranksets::sim::{
    erratic_coverage_curves, large_p_study, run_design, SimDesign, StudyConfig, ThetaDesign,
};
use ranksets::{tau_best, tau_worst, BootstrapConfig, FamilyKind, Method, RankInterval};
use serde::Serialize;

use crate::analyze::{analyze_many, AnalyzeOptions, Report, Targets};
use crate::compare::compare_methods;
use crate::dataset::{ingest, Dataset, Format};
use crate::error::{CliError, Result};
use crate::group::{group_small, GroupSpec};
use crate::plotdata::write_plotdata;

#[derive(Debug, Parser)]
#[command(
    name = "ranksets",
    version,
    about = "Confidence sets for the ranks of multinomial probabilities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank confidence sets for every category of every group.
    Analyze(AnalyzeCmd),
    /// Monte Carlo coverage and length of the procedures.
    Simulate(SimulateCmd),
    /// Categories that may be among the tau best (or worst).
    TauBest(TauCmd),
    /// Percent of cells where one method's sets are strictly wider than another's.
    Compare(CompareCmd),
    /// Plot-ready CSV of estimates, standard errors and rank sets.
    Plotdata(PlotCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Count table with columns group,category,count.
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Drop categories with zero count.
    #[arg(long)]
    pub drop_zero: bool,
    /// Merge categories into "Other": a share threshold in (0, 1) or a comma-separated list of names.
    #[arg(long, value_parser = parse_group_spec)]
    pub group_small: Option<GroupSpec>,
}

#[derive(Debug, Args)]
pub struct InferenceArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// lower, upper or two_sided.
    #[arg(long, default_value = "two_sided", value_parser = parse_kind)]
    pub kind: FamilyKind,
    #[arg(long, default_value_t = 10_000)]
    pub boot_samples: usize,
    #[arg(long, env = "RANKSETS_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl InferenceArgs {
    fn boot(&self) -> BootstrapConfig {
        BootstrapConfig {
            samples: self.boot_samples,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Emit::Table)]
    pub emit: Emit,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// One or more of exactBonf, exactHolm, CP, boot, bootStud, naive.
    #[arg(long, value_delimiter = ',', default_value = "exactHolm", value_parser = parse_method)]
    pub method: Vec<Method>,
    /// marginal, simultaneous (alias all) or single:<category>.
    #[arg(long, default_value = "marginal", value_parser = parse_targets)]
    pub targets: Targets,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TauCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub tau: usize,
    /// Report the tau worst instead.
    #[arg(long)]
    pub worst: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "exactHolm", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value_t = 10_000)]
    pub boot_samples: usize,
    #[arg(long, env = "RANKSETS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, value_delimiter = ',', default_value = "exactHolm,exactBonf,CP,boot,bootStud", value_parser = parse_method)]
    pub method: Vec<Method>,
    #[arg(long, default_value = "marginal", value_parser = parse_targets)]
    pub targets: Targets,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PlotCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, value_delimiter = ',', default_value = "exactHolm,exactBonf,CP,boot,bootStud", value_parser = parse_method)]
    pub method: Vec<Method>,
    #[arg(long, default_value = "marginal", value_parser = parse_targets)]
    pub targets: Targets,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(subcommand)]
    pub design: SimDesignCmd,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, global = true, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    pub boot_samples: usize,
    #[arg(long, global = true, env = "RANKSETS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        default_value = "exactBonf,exactHolm,CP,boot,bootStud,naive",
        value_parser = parse_method
    )]
    pub method: Vec<Method>,
    /// csv or json; table prints csv.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimDesignCmd {
    /// theta = (1 - kappa)/7 + kappa * theta_AES, n = round(tau * 234).
    Aes {
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Override the implied sample size.
        #[arg(long)]
        n: Option<u64>,
        /// 1-based categories to report; all when omitted.
        #[arg(long, value_delimiter = ',')]
        categories: Vec<usize>,
    },
    /// Uniform probabilities over p categories.
    Uniform {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        categories: Vec<usize>,
    },
    /// Given probabilities.
    Fixed {
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        categories: Vec<usize>,
    },
    /// theta = (pi, pi, 1 - 2 pi) over grids of pi and n.
    Erratic {
        #[arg(long, value_delimiter = ',', default_value = "0.01")]
        pi: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "10,11,12,13,14,15,16,17,18,19,20"
        )]
        n: Vec<u64>,
    },
    /// Uniform probabilities over grids of p and n; coverage of the first category.
    LargeP {
        #[arg(long, value_delimiter = ',', default_value = "20,50")]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "20,50,100,200")]
        n: Vec<u64>,
    },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_group_spec(s: &str) -> std::result::Result<GroupSpec, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<FamilyKind, String> {
    s.parse().map_err(|e: ranksets::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: ranksets::Error| e.to_string())
}

fn parse_targets(s: &str) -> std::result::Result<Targets, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(cmd) => run_analyze(cmd),
        Command::Simulate(cmd) => run_simulate(cmd),
        Command::TauBest(cmd) => run_tau(cmd),
        Command::Compare(cmd) => run_compare(cmd),
        Command::Plotdata(cmd) => run_plotdata(cmd),
    }
}

pub fn load(input: &InputArgs) -> Result<Dataset> {
    let dataset = ingest(&input.input, input.format, input.drop_zero)?;
    match &input.group_small {
        Some(spec) => dataset.try_map(|g| group_small(&g.sample, spec)),
        None => Ok(dataset),
    }
}

fn with_output<F>(out: &Option<PathBuf>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io("<output>", e)
}

fn write_table(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut dyn Write, cells: Vec<&str>| -> io::Result<()> {
        let text: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:w$}"))
            .collect();
        writeln!(out, "{}", text.join("  ").trim_end())
    };
    line(out, header.to_vec())?;
    for row in rows {
        line(out, row.iter().map(String::as_str).collect())?;
    }
    Ok(())
}

fn write_csv_rows<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(stdout_err)
}

fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::input(e.to_string()))?;
    writeln!(out).map_err(stdout_err)
}

#[derive(Serialize)]
struct FlatRow<'a> {
    method: &'a str,
    group: &'a str,
    category: &'a str,
    count: u64,
    theta_hat: f64,
    se: f64,
    rank: usize,
    lo: usize,
    hi: usize,
}

fn flat_rows(reports: &[Report]) -> Vec<FlatRow<'_>> {
    reports
        .iter()
        .flat_map(|r| {
            r.rows.iter().map(move |row| FlatRow {
                method: r.method.name(),
                group: &row.group,
                category: &row.category,
                count: row.count,
                theta_hat: row.theta_hat,
                se: row.se,
                rank: row.rank,
                lo: row.lo,
                hi: row.hi,
            })
        })
        .collect()
}

fn run_analyze(cmd: AnalyzeCmd) -> Result<()> {
    let dataset = load(&cmd.input)?;
    let options = AnalyzeOptions {
        kind: cmd.inference.kind,
        alpha: cmd.inference.alpha,
        targets: cmd.targets,
        boot: cmd.inference.boot(),
    };
    let reports = analyze_many(&dataset, &cmd.method, &options)?;
    with_output(&cmd.output.out, |out| match cmd.output.emit {
        Emit::Json => write_json(out, &reports),
        Emit::Csv => write_csv_rows(out, &flat_rows(&reports)),
        Emit::Table => {
            let rows: Vec<Vec<String>> = flat_rows(&reports)
                .iter()
                .map(|r| {
                    vec![
                        r.method.to_string(),
                        r.group.to_string(),
                        r.category.to_string(),
                        r.count.to_string(),
                        format!("{:.3}", r.theta_hat),
                        format!("{:.3}", r.se),
                        r.rank.to_string(),
                        RankInterval { lo: r.lo, hi: r.hi }.to_string(),
                    ]
                })
                .collect();
            let header = [
                "method",
                "group",
                "category",
                "count",
                "theta_hat",
                "se",
                "rank",
                "rank set",
            ];
            write_table(out, &header, &rows).map_err(stdout_err)
        }
    })
}

#[derive(Serialize)]
struct TauRow {
    group: String,
    direction: String,
    tau: usize,
    category: String,
    theta_hat: f64,
    lo: usize,
    hi: usize,
    member: bool,
}

fn run_tau(cmd: TauCmd) -> Result<()> {
    let dataset = load(&cmd.input)?;
    let config = BootstrapConfig {
        samples: cmd.boot_samples,
        seed: cmd.seed,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for g in dataset.groups() {
        let (set, ranks) = if cmd.worst {
            tau_worst(&g.sample, cmd.tau, cmd.alpha, cmd.method, &config)?
        } else {
            tau_best(&g.sample, cmd.tau, cmd.alpha, cmd.method, &config)?
        };
        let theta = g.sample.theta_hat();
        for (j, label) in g.sample.labels().iter().enumerate() {
            let iv = ranks.interval(j).expect("all categories are targets");
            rows.push(TauRow {
                group: g.name.clone(),
                direction: set.direction.to_string(),
                tau: cmd.tau,
                category: label.clone(),
                theta_hat: theta[j],
                lo: iv.lo,
                hi: iv.hi,
                member: set.contains(j),
            });
        }
    }
    with_output(&cmd.output.out, |out| match cmd.output.emit {
        Emit::Json => write_json(out, &rows),
        Emit::Csv => write_csv_rows(out, &rows),
        Emit::Table => {
            let mut current: Option<&str> = None;
            for r in &rows {
                if current != Some(&r.group) {
                    let members: Vec<&str> = rows
                        .iter()
                        .filter(|x| x.group == r.group && x.member)
                        .map(|x| x.category.as_str())
                        .collect();
                    writeln!(
                        out,
                        "{} ({} {}): {}",
                        r.group,
                        r.direction,
                        r.tau,
                        members.join(", ")
                    )
                    .map_err(stdout_err)?;
                    current = Some(&r.group);
                }
            }
            Ok(())
        }
    })
}

fn run_compare(cmd: CompareCmd) -> Result<()> {
    let dataset = load(&cmd.input)?;
    let options = AnalyzeOptions {
        kind: cmd.inference.kind,
        alpha: cmd.inference.alpha,
        targets: cmd.targets,
        boot: cmd.inference.boot(),
    };
    let reports = analyze_many(&dataset, &cmd.method, &options)?;
    let matrix = compare_methods(&reports)?;
    with_output(&cmd.output.out, |out| match cmd.output.emit {
        Emit::Json => write_json(out, &matrix),
        Emit::Csv => matrix.write_csv(out),
        Emit::Table => matrix.write_table(out).map_err(stdout_err),
    })
}

fn run_plotdata(cmd: PlotCmd) -> Result<()> {
    let dataset = load(&cmd.input)?;
    let options = AnalyzeOptions {
        kind: cmd.inference.kind,
        alpha: cmd.inference.alpha,
        targets: cmd.targets,
        boot: cmd.inference.boot(),
    };
    let reports = analyze_many(&dataset, &cmd.method, &options)?;
    with_output(&cmd.out, |out| write_plotdata(&reports, out))
}

fn one_based(categories: &[usize], p: usize) -> Result<Option<Vec<usize>>> {
    if categories.is_empty() {
        return Ok(None);
    }
    categories
        .iter()
        .map(|&c| {
            if c == 0 || c > p {
                Err(CliError::input(format!("category {c} outside 1..={p}")))
            } else {
                Ok(c - 1)
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn run_simulate(cmd: SimulateCmd) -> Result<()> {
    let study = StudyConfig {
        alpha: cmd.alpha,
        reps: cmd.reps,
        boot_samples: cmd.boot_samples,
        master_seed: cmd.seed,
    };
    let emit = |out: &mut dyn Write, rows: &dyn ErasedRows| match cmd.emit {
        Emit::Json => rows.json(out),
        Emit::Csv | Emit::Table => rows.csv(out),
    };
    let (theta, n, categories) = match &cmd.design {
        SimDesignCmd::Erratic { pi, n } => {
            let rows = erratic_coverage_curves(pi, n, &study)?;
            return with_output(&cmd.out, |out| emit(out, &rows));
        }
        SimDesignCmd::LargeP { p, n } => {
            let rows = large_p_study(p, n, &cmd.method, &study)?;
            return with_output(&cmd.out, |out| emit(out, &rows));
        }
        SimDesignCmd::Aes {
            kappa,
            tau,
            n,
            categories,
        } => (
            ThetaDesign::Aes {
                kappa: *kappa,
                tau: *tau,
            },
            *n,
            categories,
        ),
        SimDesignCmd::Uniform { p, n, categories } => {
            (ThetaDesign::Uniform { p: *p }, Some(*n), categories)
        }
        SimDesignCmd::Fixed {
            theta,
            n,
            categories,
        } => (
            ThetaDesign::Fixed {
                theta: theta.clone(),
            },
            Some(*n),
            categories,
        ),
    };
    let p = theta.theta()?.len();
    let mut design = SimDesign::new(theta.to_string(), theta, cmd.method.clone());
    design.n = n;
    design.alpha = cmd.alpha;
    design.reps = cmd.reps;
    design.boot_samples = cmd.boot_samples;
    design.master_seed = cmd.seed;
    design.categories = one_based(categories, p)?;
    let report = run_design(&design)?;
    if let Some(exact) = report.n_rounded_from {
        eprintln!("note: n = {} rounded from {exact}", report.n);
    }
    with_output(&cmd.out, |out| emit(out, &report.rows))
}

/// Lets the simulate branches share one writer closure.
trait ErasedRows {
    fn csv(&self, out: &mut dyn Write) -> Result<()>;
    fn json(&self, out: &mut dyn Write) -> Result<()>;
}

impl<T: Serialize> ErasedRows for Vec<T> {
    fn csv(&self, out: &mut dyn Write) -> Result<()> {
        write_csv_rows(out, self)
    }

    fn json(&self, out: &mut dyn Write) -> Result<()> {
        write_json(out, self)
    }
}
