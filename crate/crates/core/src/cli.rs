//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad input (schema, parse, I/O), 2 cap exceeded,
//! 3 alignment violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::align::{build_receive_model, verify_alignment, Scheme, StreamAllocation, Weighting, DEFAULT_COLUMN_CAP};
use crate::directions::{build_directions, direction_counts, Family, GeneratorIndex, SetKind, DEFAULT_DIRECTION_CAP};
use crate::lattice::{min_distance_in, whitened_matrix, SearchBox, DEFAULT_CODEBOOK_CAP, DEFAULT_ENUM_CAP};
use crate::net_model::{sample_channel, ConfigFile, NetworkConfig, NetworkKind};
use crate::regions::{inner_region, outer_region, parse_rational, total_dof_formulas, DofPoint, Rational};
use crate::sim::{run_link_experiment, BoxKind, ExperimentPlan, SLOPE_CSV_HEADER};
use crate::{allocate_streams, Error, Result};

const CSV_HELP: &str = "CSV layouts:
  regions --vertices   one column per DoF variable, one vertex per row
  formulas             label,value,witness
  directions           family,E,D,D_ext
  simulate             P0,P,receiver,Q,lambda,d_min,bound,useful_symbols,rate,
                       empirical_err,ci_lo,ci_hi,slope_P0,slope_P
  mindist --dump-model '#' layout lines, then one row of A per receive antenna
Every CSV starts with a '# config_sha256=...,seed=...' comment line.";

#[derive(Debug, Parser)]
#[command(name = "rialign", version, about = "Real interference alignment experiments", after_help = CSV_HELP)]
pub struct Cli {
    /// Network configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Experiment seed; overrides the seed stored in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Bound on D + D' per stream.
    #[arg(long, global = true, default_value_t = DEFAULT_DIRECTION_CAP)]
    pub cap_directions: u64,
    /// Bound on distance-enumeration candidates.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUM_CAP)]
    pub cap_enum: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoxArg {
    Uniform,
    Structural,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Achievable and outer DoF regions, with optional queries.
    Regions {
        /// Comma-separated point to test, e.g. "1/2,1/2".
        #[arg(long)]
        contains: Option<String>,
        /// Comma-separated linear objective to maximise.
        #[arg(long, conflicts_with = "maximize_sum")]
        maximize: Option<String>,
        /// Maximise the total DoF.
        #[arg(long)]
        maximize_sum: bool,
        /// List the vertices.
        #[arg(long)]
        vertices: bool,
    },
    /// Direction counts and, within the cap, the direction list.
    Directions {
        #[arg(long)]
        n: u32,
    },
    /// Certify alignment at every receiver.
    AlignCheck {
        #[arg(long)]
        n: u32,
        /// DoF point; one stream per message when omitted.
        #[arg(long)]
        point: Option<String>,
    },
    /// Exhaustive minimum distance of one receiver's generator matrix.
    Mindist {
        #[arg(long)]
        n: u32,
        /// 1-based receiver.
        #[arg(long, default_value_t = 1)]
        receiver: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Keep only the leading columns.
        #[arg(long)]
        columns: Option<usize>,
        #[arg(long, value_enum, default_value_t = BoxArg::Uniform)]
        r#box: BoxArg,
        /// Measure distance in the noise-whitened metric.
        #[arg(long)]
        whiten: bool,
        #[arg(long)]
        point: Option<String>,
        /// Also write the receive model (generator matrix and column layout) as CSV.
        #[arg(long)]
        dump_model: Option<PathBuf>,
    },
    /// Power sweep with ML decoding at every receiver. With --out, the
    /// other format is written beside it (same stem, .csv or .json).
    Simulate {
        #[arg(long)]
        n: u32,
        /// DoF point; the symmetric closed-form witness when omitted.
        #[arg(long)]
        point: Option<String>,
        /// Comma-separated P0 grid.
        #[arg(long, default_value = "1e2,1e3,1e4,1e5,1e6,1e7,1e8")]
        p0: String,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = BoxArg::Structural)]
        r#box: BoxArg,
        #[arg(long, default_value_t = DEFAULT_CODEBOOK_CAP)]
        cap_codebook: u64,
    },
    /// Closed-form total-DoF values that apply to the configuration.
    Formulas,
}

/// Parse arguments, run, print, and return the process exit code.
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
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } => 2,
        Error::AlignmentViolation(_) => 3,
        _ => 1,
    }
}

struct Context {
    file: ConfigFile,
    config: NetworkConfig,
    seed: u64,
    hash: String,
}

impl Context {
    fn meta(&self) -> Value {
        json!({
            "config_sha256": self.hash,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::to_value(&self.file).expect("config serializes"),
        })
    }

    fn csv_header(&self) -> String {
        format!("# config_sha256={},seed={}\n", self.hash, self.seed)
    }
}

fn load(cli: &Cli) -> Result<Context> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    let file = ConfigFile::from_json(&text)?;
    let config = file.to_config()?;
    let digest = Sha256::digest(file.to_json().as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Context {
        seed: cli.seed.unwrap_or(file.seed),
        file,
        config,
        hash,
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let ctx = load(cli)?;
    let artifact = pool.install(|| dispatch(cli, &ctx))?;
    match &cli.out {
        Some(path) => std::fs::write(path, artifact)?,
        None => std::io::stdout().write_all(artifact.as_bytes())?,
    }
    Ok(())
}

fn parse_list(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(parse_rational).collect()
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(|r| r.to_string()).collect()
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// Stream allocation for a point, or one stream per message.
fn allocation(config: &NetworkConfig, point: Option<&str>) -> Result<StreamAllocation> {
    match point {
        Some(p) => allocate_streams(config, &parse_list(p)?),
        None => {
            let count = match config.kind() {
                NetworkKind::X => config.num_rx() * config.num_tx(),
                _ => config.num_tx(),
            };
            Ok(StreamAllocation {
                rho: 1,
                dbar: vec![1; count],
                dof_point: Vec::new(),
            })
        }
    }
}

fn dispatch(cli: &Cli, ctx: &Context) -> Result<String> {
    let config = &ctx.config;
    match &cli.command {
        Command::Formulas => {
            let rows = total_dof_formulas(config)?;
            match cli.format {
                Format::Json => {
                    let list: Vec<Value> = rows
                        .iter()
                        .map(|r| {
                            json!({
                                "label": r.label,
                                "value": r.value.to_string(),
                                "witness": r.witness.as_deref().map(rationals),
                                "row": format!("{} = {}", r.label, r.value),
                            })
                        })
                        .collect();
                    Ok(to_json_text(&json!({"meta": ctx.meta(), "formulas": list})))
                }
                Format::Csv => {
                    let mut out = ctx.csv_header();
                    out.push_str("label,value,witness\n");
                    for r in rows {
                        let witness = r.witness.as_deref().map(|w| rationals(w).join(" ")).unwrap_or_default();
                        out.push_str(&format!("\"{}\",{},{}\n", r.label, r.value, witness));
                    }
                    Ok(out)
                }
            }
        }
        Command::Regions {
            contains,
            maximize,
            maximize_sum,
            vertices,
        } => {
            let inner = inner_region(config)?;
            let outer = match (config.kind(), config.uniform_antennas()) {
                (NetworkKind::Ic, Some((m, n))) => Some(outer_region(config.num_tx(), m, n)?),
                _ => None,
            };
            if cli.format == Format::Csv {
                if !vertices {
                    return Err(Error::InvalidArgument("CSV output for regions requires --vertices".into()));
                }
                let mut out = ctx.csv_header();
                out.push_str(&inner.vertices_csv()?);
                return Ok(out);
            }
            let mut regions = Vec::new();
            for region in std::iter::once(&inner).chain(outer.as_ref()) {
                let mut v = region.to_json();
                if let Some(p) = contains {
                    v["contains"] = json!(region.contains(&parse_list(p)?)?);
                }
                let objective: Option<DofPoint> = match (maximize, maximize_sum) {
                    (Some(o), _) => Some(parse_list(o)?),
                    (None, true) => Some(vec![Rational::from_integer(1.into()); region.dim()]),
                    _ => None,
                };
                if let Some(obj) = objective {
                    let (value, point) = region.maximize(&obj)?;
                    v["maximize"] = json!({"value": value.to_string(), "point": rationals(&point)});
                }
                if *vertices {
                    let list: Vec<Vec<String>> = region.vertices()?.iter().map(|p| rationals(p)).collect();
                    v["vertices"] = json!(list);
                }
                regions.push(v);
            }
            Ok(to_json_text(&json!({"meta": ctx.meta(), "regions": regions})))
        }
        Command::Directions { n } => {
            let counts = direction_counts(config, *n)?;
            if cli.format == Format::Csv {
                let mut out = ctx.csv_header();
                out.push_str("family,E,D,D_ext\n");
                for c in &counts {
                    out.push_str(&format!("{},{},{},{}\n", family_label(c.family), c.generators, c.base, c.extended));
                }
                return Ok(out);
            }
            let mut families = Vec::new();
            for c in &counts {
                let generators: Vec<[usize; 4]> = GeneratorIndex::new(config, c.family)?
                    .coords()
                    .iter()
                    .map(|g| [g.rx + 1, g.tx + 1, g.rx_ant + 1, g.tx_ant + 1])
                    .collect();
                let mut v = json!({
                    "family": family_label(c.family),
                    "generators": generators,
                    "E": c.generators,
                    "D": c.base.to_string(),
                    "D_ext": c.extended.to_string(),
                });
                v["directions"] = match build_directions(config, *n, c.family, 1, false, SetKind::Base, cli.cap_directions) {
                    Ok(sets) => sets[0].to_json(),
                    Err(Error::CapExceeded { .. }) => Value::Null,
                    Err(e) => return Err(e),
                };
                families.push(v);
            }
            Ok(to_json_text(&json!({"meta": ctx.meta(), "n": n, "families": families})))
        }
        Command::AlignCheck { n, point } => {
            let alloc = allocation(config, point.as_deref())?;
            let channel = sample_channel(config, ctx.seed);
            let scheme = Scheme::new(config, &channel, *n, &alloc, ctx.seed, cli.cap_directions)?;
            let mut reports = Vec::new();
            let mut total_violations = 0;
            for j in 0..config.num_rx() {
                let rep = verify_alignment(&scheme, j)?;
                eprintln!("receiver {}: checked {}, violations: {}", j + 1, rep.checked, rep.violations.len());
                total_violations += rep.violations.len();
                reports.push(json!({
                    "receiver": j + 1,
                    "checked": rep.checked,
                    "violations": rep.violations.len(),
                    "occupied": rep.occupied,
                    "group_sizes": rep.group_sizes,
                    "first_violation": rep.violations.first().map(|v| json!({
                        "message": v.message.label(),
                        "stream": v.stream + 1,
                        "generator": [v.generator.rx + 1, v.generator.tx + 1, v.generator.rx_ant + 1, v.generator.tx_ant + 1],
                        "exponents": v.exponents,
                    })),
                }));
            }
            eprintln!("violations: {total_violations}");
            let text = to_json_text(&json!({
                "meta": ctx.meta(),
                "n": n,
                "violations": total_violations,
                "receivers": reports,
            }));
            if total_violations > 0 {
                // still emit the report before failing
                if let Some(path) = &cli.out {
                    std::fs::write(path, &text)?;
                } else {
                    print!("{text}");
                }
                return Err(Error::AlignmentViolation(format!("{total_violations} interfering monomials outside their alignment set")));
            }
            Ok(text)
        }
        Command::Mindist {
            n,
            receiver,
            q,
            delta,
            columns,
            r#box,
            whiten,
            point,
            dump_model,
        } => {
            if *receiver == 0 || *receiver > config.num_rx() {
                return Err(Error::InvalidArgument(format!("receiver {receiver} outside 1..={}", config.num_rx())));
            }
            let alloc = allocation(config, point.as_deref())?;
            let channel = sample_channel(config, ctx.seed);
            let scheme = Scheme::new(config, &channel, *n, &alloc, ctx.seed, cli.cap_directions)?;
            let model = build_receive_model(&scheme, receiver - 1, Weighting::Random(ctx.seed), DEFAULT_COLUMN_CAP)?;
            if let Some(path) = dump_model {
                std::fs::write(path, format!("{}{}", ctx.csv_header(), model.to_csv()))?;
            }
            let full = if *whiten { whitened_matrix(&model)? } else { model.a().clone() };
            let m = columns.unwrap_or(full.ncols());
            if m == 0 || m > full.ncols() {
                return Err(Error::InvalidArgument(format!("--columns must lie in 1..={}", full.ncols())));
            }
            let a = full.columns(0, m).into_owned();
            let search = match r#box {
                BoxArg::Uniform => SearchBox::Uniform(*q),
                BoxArg::Structural => SearchBox::Radii(model.radii(*q)[..m].to_vec()),
            };
            let report = min_distance_in(&a, &search, *q, *delta, cli.cap_enum)?;
            Ok(to_json_text(&json!({
                "meta": ctx.meta(),
                "n": n,
                "receiver": receiver,
                "columns": m,
                "whitened": whiten,
                "report": serde_json::to_value(&report)?,
            })))
        }
        Command::Simulate {
            n,
            point,
            p0,
            epsilon,
            delta,
            trials,
            r#box,
            cap_codebook,
        } => {
            let dof_point = match point {
                Some(p) => parse_list(p)?,
                None => total_dof_formulas(config)?
                    .into_iter()
                    .find_map(|r| r.witness)
                    .ok_or_else(|| Error::InvalidArgument("no default DoF point for this network; pass --point".into()))?,
            };
            let grid = p0
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad power value {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut plan = ExperimentPlan::new(config.clone(), *n, dof_point, ctx.seed);
            plan.p0_grid = grid;
            plan.epsilon = *epsilon;
            plan.delta_slack = *delta;
            plan.trials = *trials;
            plan.search = match r#box {
                BoxArg::Uniform => BoxKind::Uniform,
                BoxArg::Structural => BoxKind::Structural,
            };
            plan.direction_cap = cli.cap_directions;
            plan.codebook_cap = *cap_codebook;
            plan.enum_cap = cli.cap_enum;
            let report = run_link_experiment(&plan)?;
            let mut csv = ctx.csv_header();
            let body = report.to_csv();
            debug_assert!(body.starts_with(SLOPE_CSV_HEADER));
            csv.push_str(&body);
            let json = to_json_text(&json!({
                "meta": ctx.meta(),
                "n": n,
                "dof_point": rationals(&plan.dof_point),
                "report": serde_json::to_value(&report)?,
            }));
            let (primary, other, ext) = match cli.format {
                Format::Csv => (csv, json, "json"),
                Format::Json => (json, csv, "csv"),
            };
            // with --out, the other format goes next to it
            if let Some(path) = &cli.out {
                std::fs::write(path.with_extension(ext), other)?;
            }
            Ok(primary)
        }
    }
}

fn family_label(f: Family) -> String {
    match f {
        Family::Shared => "shared".into(),
        Family::Target(j) => format!("target {}", j + 1),
    }
}
