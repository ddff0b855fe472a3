//! Command-line front end. [`parse_and_dispatch`] does all the work and
//! returns what would be printed, so the binary is a thin wrapper.

use std::ffi::OsString;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    classical_cesaro_hopf_image, commutation_obstruction_check, inner_faithfulness_scan, mc_trace_state,
    stationarity_check_classical, thoma_stationarity_check, StationarityMode, SURVIVAL_SAMPLES,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::latin::{admissible_squares, enumerate, hopf_image_group, to_permutations, SparseLatinSquare};
use crate::magic::{
    normalized_trace, orbit_decomposition, quasi_transitivity, rank_pattern, unitarity_defect, MatrixJson,
    PatternSource,
};
use crate::models::{
    canonical_word, eval_word, family_magic, parse_raw_word, sample_point, validate_point, word_trace, InducedModel,
    ModelFamily, ModelPoint,
};
use crate::perm::{check_normal_orbits, orbit_partition, CoordinateWord, PermutationGroup, DEFAULT_CAP};
use crate::selftest::{self, SelftestConfig};
use crate::tol;

pub const DEFAULT_SEED: u64 = selftest::DEFAULT_SEED;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "quasiflat",
    version,
    about = "Quasi-flat models of quantum permutation groups"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Overrides the command's tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Overrides the command's sample count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Orbits of a permutation group, or of sampled points of a model family.
    Orbits(OrbitsArgs),
    /// Sparse Latin squares.
    #[command(subcommand)]
    Latin(LatinCommand),
    /// Points, words and traces of model families.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Faithfulness, stationarity and convergence checks.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Runs the acceptance criteria.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitsArgs {
    /// Group file or fixture name.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    pub group: Option<String>,
    /// Also check that the orbits of this normal subgroup have equal sizes.
    #[arg(long, requires = "group")]
    pub normal: Option<String>,
    /// Model family, inline JSON or file.
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatinCommand {
    /// All sparse Latin squares of size N with K symbols.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Squares whose permutations generate a subgroup of G.
    Admissible {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        group: String,
        #[arg(long)]
        count_only: bool,
    },
    /// The group generated by a square's permutations.
    Group {
        #[arg(long)]
        square: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelCommand {
    /// A random point of the family.
    Sample {
        #[arg(long)]
        family: String,
    },
    /// π(γ) at a point, with the closed-form and direct traces.
    Eval {
        #[arg(long)]
        family: String,
        #[arg(long)]
        word: String,
        /// Point file; sampled from the seed when omitted.
        #[arg(long)]
        point: Option<String>,
    },
    /// Monte Carlo estimate of the trace state on a word.
    Trace {
        #[arg(long)]
        family: String,
        #[arg(long)]
        word: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzeCommand {
    /// Survival of every canonical word up to a length.
    Faithful {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Haar moments against the classical model average.
    Stationary {
        #[arg(long)]
        group: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        exact: bool,
        /// Longest coordinate word.
        #[arg(long, default_value_t = 2)]
        max_degree: usize,
    },
    /// Cesàro averages of the square's walk against its Hopf image.
    Cesaro {
        #[arg(long)]
        square: String,
        #[arg(long, default_value_t = 10_000)]
        kmax: usize,
    },
    /// Stationarity of the induced-representation model.
    Thoma {
        #[arg(long)]
        group: String,
        #[arg(long)]
        subgroup: String,
    },
    /// Commuting-generators negative control.
    Obstruction {
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Run a single criterion.
    #[arg(long)]
    pub criterion: Option<u8>,
}

/// What a run printed and how it ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    pass: bool,
    body: Value,
    /// Plain rendering used in text mode instead of the key listing.
    plain: Option<String>,
}

impl Report {
    fn checked(pass: bool, body: impl Serialize) -> Result<Self> {
        Ok(Report {
            pass,
            body: to_value(body)?,
            plain: None,
        })
    }

    fn generative(body: impl Serialize) -> Result<Self> {
        Self::checked(true, body)
    }
}

fn to_value(x: impl Serialize) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Parameter(e.to_string()))
}

fn read_text(arg: &str) -> Result<String> {
    std::fs::read_to_string(arg).map_err(|e| Error::Parameter(format!("cannot read {arg}: {e}")))
}

/// Inline JSON when the argument starts with `{` or `[`, a file otherwise.
fn json_arg<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        read_text(arg)?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("bad {what} {arg}: {e}")))
}

fn family_arg(arg: &str) -> Result<ModelFamily> {
    let f: ModelFamily = json_arg(arg, "family")?;
    f.validate()?;
    Ok(f)
}

/// A fixture name, or a group file / inline JSON.
fn group_arg(arg: &str) -> Result<PermutationGroup> {
    if !Path::new(arg).exists() {
        if let Some(g) = fixtures::by_name(arg) {
            return Ok(g);
        }
    }
    json_arg(arg, "group")
}

fn word_arg(family: &ModelFamily, arg: &str) -> Result<crate::models::ReducedWord> {
    canonical_word(family, &parse_raw_word(arg)?)
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_dispatch<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let format = if cli.json { Format::Json } else { cli.format };
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                code: 2,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    };
    let config = to_value(&cli).unwrap_or(Value::Null);
    let envelope = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "pass": report.pass,
        "report": report.body,
    });
    let stdout = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&envelope).expect("values serialize");
            s.push('\n');
            s
        }
        Format::Text => render_text(&report),
        Format::Csv => render_csv(&report.body),
    };
    Outcome {
        code: if report.pass { 0 } else { 1 },
        stdout,
        stderr: String::new(),
    }
}

fn render_text(report: &Report) -> String {
    if let Some(plain) = &report.plain {
        return format!("{plain}\n");
    }
    let mut out = format!("pass: {}\n", report.pass);
    match &report.body {
        Value::Object(map) => {
            for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "pass") {
                match v {
                    Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object) => {
                        out.push_str(&format!("{k}:\n"));
                        for item in items.iter().filter_map(Value::as_object) {
                            let cells: Vec<String> = item.iter().map(|(k, v)| format!("{k}={}", compact(v))).collect();
                            out.push_str(&format!("  {}\n", cells.join(" ")));
                        }
                    }
                    _ => out.push_str(&format!("{k}: {}\n", compact(v))),
                }
            }
        }
        other => out.push_str(&format!("{}\n", compact(other))),
    }
    out
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// The first array of records in the report as a table, or the report
/// itself as a single row.
fn render_csv(body: &Value) -> String {
    let rows: Vec<&serde_json::Map<String, Value>> = match body {
        Value::Object(map) => map
            .values()
            .find_map(|v| match v {
                Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object) => {
                    Some(items.iter().filter_map(Value::as_object).collect())
                }
                _ => None,
            })
            .unwrap_or_else(|| vec![map]),
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        _ => Vec::new(),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        let header: Vec<&str> = first.keys().map(String::as_str).collect();
        writer.write_record(&header).expect("in-memory write");
        for row in &rows {
            let cells: Vec<String> = header
                .iter()
                .map(|k| row.get(*k).map(compact).unwrap_or_default())
                .collect();
            writer.write_record(&cells).expect("in-memory write");
        }
    } else {
        writer.write_record([compact(body)]).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn dispatch(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Orbits(args) => orbits(cli, args),
        Command::Latin(cmd) => latin(cmd),
        Command::Model(cmd) => model(cli, cmd),
        Command::Analyze(cmd) => analyze(cli, cmd),
        Command::Selftest(args) => {
            let cfg = SelftestConfig {
                seed: cli.seed,
                tol: cli.tol,
            };
            match args.criterion {
                Some(id) => {
                    let r = selftest::run_criterion(id, &cfg);
                    Report::checked(r.pass, r)
                }
                None => {
                    let r = selftest::run(&cfg);
                    Report::checked(r.pass, r)
                }
            }
        }
    }
}

fn one_based(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| b.iter().map(|x| x + 1).collect()).collect()
}

fn orbits(cli: &Cli, args: &OrbitsArgs) -> Result<Report> {
    if let Some(family) = &args.family {
        let family = family_arg(family)?;
        let n = cli.samples.unwrap_or(10).max(1);
        let points = (0..n as u64)
            .map(|s| family_magic(&family, &sample_point(&family, cli.seed.wrapping_add(s))?))
            .collect::<Result<Vec<_>>>()?;
        let tolerance = cli.tol.unwrap_or(tol::VALIDATION);
        let d = orbit_decomposition(PatternSource::Samples {
            points: &points,
            threshold: tolerance,
        })?;
        let ranks = rank_pattern(&points[0], tolerance)?;
        let pass = d.diagnostic.is_none() && ranks == d.epsilon;
        return Report::checked(
            pass,
            json!({
                "orbits": one_based(&d.blocks),
                "quasi_transitivity": quasi_transitivity(&d),
                "epsilon": d.epsilon,
                "rank_pattern": ranks,
                "diagnostic": d.diagnostic,
                "samples": n,
            }),
        );
    }
    let group = group_arg(args.group.as_deref().expect("clap enforces group or family"))?;
    let blocks = orbit_partition(&group);
    let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let common = sizes.iter().all(|&s| s == sizes[0]).then_some(sizes[0]);
    let mut body = json!({
        "order": group.order(),
        "orbits": one_based(&blocks),
        "sizes": sizes,
        "quasi_transitivity": common,
        "transitive": group.is_transitive(),
    });
    let mut pass = true;
    if let Some(h) = &args.normal {
        let h = group_arg(h)?;
        let verdict = check_normal_orbits(&group, &h)?;
        pass = verdict.equal_sizes;
        body["normal_subgroup"] = to_value(verdict)?;
    }
    Report::checked(pass, body)
}

fn latin(cmd: &LatinCommand) -> Result<Report> {
    let listing = |squares: Vec<SparseLatinSquare>, count_only: bool| -> Result<Report> {
        let count = squares.len();
        if count_only {
            return Ok(Report {
                pass: true,
                body: json!({ "count": count }),
                plain: Some(count.to_string()),
            });
        }
        let rows: Vec<Value> = squares.iter().map(|s| json!({ "square": s })).collect();
        Report::generative(json!({ "count": count, "squares": rows }))
    };
    match cmd {
        LatinCommand::Enumerate { n, k, count_only } => {
            if *k > *n || *k == 0 {
                return Err(Error::Parameter(format!("need 1 <= K <= N, got N={n}, K={k}")));
            }
            listing(enumerate(*n, *k).collect(), *count_only)
        }
        LatinCommand::Admissible {
            n,
            k,
            group,
            count_only,
        } => {
            let g = group_arg(group)?;
            listing(admissible_squares(*n, *k, &g)?, *count_only)
        }
        LatinCommand::Group { square } => {
            let square: SparseLatinSquare = json_arg(square, "square")?;
            let group = hopf_image_group(&square, DEFAULT_CAP)?;
            Report::generative(json!({
                "permutations": to_permutations(&square),
                "order": group.order(),
                "elements": group.elements(),
            }))
        }
    }
}

fn model(cli: &Cli, cmd: &ModelCommand) -> Result<Report> {
    match cmd {
        ModelCommand::Sample { family } => {
            let family = family_arg(family)?;
            Report::generative(sample_point(&family, cli.seed)?)
        }
        ModelCommand::Eval { family, word, point } => {
            let family = family_arg(family)?;
            let w = word_arg(&family, word)?;
            let point: ModelPoint = match point {
                Some(p) => json_arg(p, "point")?,
                None => sample_point(&family, cli.seed)?,
            };
            validate_point(&family, &point)?;
            let m = eval_word(&family, &point, &w)?;
            let direct = normalized_trace(&m);
            let closed = word_trace(&family, &point, &w)?;
            let gap = (closed - direct).norm();
            Report::checked(
                gap < cli.tol.unwrap_or(tol::VALIDATION),
                json!({
                    "word": w,
                    "matrix": MatrixJson(m.clone()),
                    "trace_closed_form": closed,
                    "trace_direct": direct,
                    "trace_gap": gap,
                    "unitarity_defect": unitarity_defect(&m),
                }),
            )
        }
        ModelCommand::Trace { family, word } => {
            let family = family_arg(family)?;
            let w = word_arg(&family, word)?;
            let est = mc_trace_state(&family, &w, cli.samples.unwrap_or(10_000), cli.seed)?;
            Report::generative(json!({ "word": w, "estimate": est }))
        }
    }
}

fn analyze(cli: &Cli, cmd: &AnalyzeCommand) -> Result<Report> {
    match cmd {
        AnalyzeCommand::Faithful { family, max_len } => {
            let family = family_arg(family)?;
            let r = inner_faithfulness_scan(
                &family,
                *max_len,
                cli.samples.unwrap_or(SURVIVAL_SAMPLES),
                cli.tol.unwrap_or(tol::STATISTICAL),
                cli.seed,
            )?;
            Report::checked(r.pass, r)
        }
        AnalyzeCommand::Stationary {
            group,
            k,
            exact,
            max_degree,
        } => {
            let g = group_arg(group)?;
            let words = CoordinateWord::all_up_to(g.degree(), *max_degree);
            let mode = if *exact {
                StationarityMode::Exact
            } else {
                StationarityMode::MonteCarlo {
                    samples: cli.samples.unwrap_or(10_000),
                    seed: cli.seed,
                }
            };
            let r = stationarity_check_classical(&g, *k, &words, mode)?;
            Report::checked(r.pass, r)
        }
        AnalyzeCommand::Cesaro { square, kmax } => {
            let square: SparseLatinSquare = json_arg(square, "square")?;
            let r = classical_cesaro_hopf_image(&square, *kmax, cli.tol.unwrap_or(tol::STATISTICAL))?;
            Report::checked(r.pass, r)
        }
        AnalyzeCommand::Thoma { group, subgroup } => {
            let g = group_arg(group)?;
            let h = group_arg(subgroup)?;
            let model = InducedModel::new(g.clone(), h)?;
            let r = thoma_stationarity_check(&model, g.elements(), cli.tol.unwrap_or(tol::CONSTRUCTION))?;
            Report::checked(r.pass, r)
        }
        AnalyzeCommand::Obstruction { k } => {
            let r = commutation_obstruction_check(
                *k,
                cli.samples.unwrap_or(SURVIVAL_SAMPLES),
                cli.tol.unwrap_or(tol::STATISTICAL),
                cli.seed,
            )?;
            Report::checked(r.pass, r)
        }
    }
}
