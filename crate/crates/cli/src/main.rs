use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use feathom::{
    asc_curve, bottleneck_distance, build_skeleton, build_weighted_graph, count_matrices,
    diagram_stats, distance_matrix, format_number, grid_csv, influence_vector_from_config,
    landscape_norm, music_stats_grid, parse_featured_series, parse_prices, persistence_landscape,
    skeleton_json, stability_check, stock_preprocess, tasc_curve, ActivationChoice, AnomalyCurve,
    DiagramPoint, FeatureConfig, FeatureSet, FeaturedSeries, InfluenceVector, LandscapeNorm,
    PersistenceConfig, PersistenceDiagram, PipelineConfig, EMPTY0, EMPTY1,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "feathom",
    version,
    about = "Persistent homology of featured time series"
)]
struct Cli {
    /// Worker threads for window and grid parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vertex and edge order, edge frequencies and count matrices.
    Graph(GraphArgs),
    /// Pairwise distances between observed symbols.
    Distances(MetricArgs),
    /// Rips persistence diagrams.
    Ph(PhArgs),
    /// Persistence landscape of one dimension of a diagram file.
    Landscape(LandscapeArgs),
    /// Bottleneck distance between two diagram files.
    Bottleneck(BottleneckArgs),
    /// Anomaly score curve over sliding windows.
    Asc(AscArgs),
    /// Product of several anomaly score curves.
    Tasc(TascArgs),
    /// Diagram statistics over a grid of two influences.
    MusicGrid(GridArgs),
    /// Empirical check of the stability bound for two influence vectors.
    Stability(StabilityArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rho {
    Auto,
    Raw,
}

fn existing_file(s: &str) -> std::result::Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad number in {s}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Args)]
struct SeriesArgs {
    /// Featured series CSV with header `t,value,f0,f1`.
    #[arg(long, value_parser = existing_file)]
    input: PathBuf,

    /// Feature schema (JSON or TOML with `features0`, `features1`).
    #[arg(long, value_parser = existing_file)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct InfluenceArgs {
    /// Influence values (JSON or TOML with `g0`, `g1` maps).
    #[arg(long, value_parser = existing_file)]
    g: Option<PathBuf>,

    /// Override one influence, e.g. `--set 4=5`. Repeatable.
    #[arg(long = "set", value_parser = parse_assignment)]
    overrides: Vec<(String, f64)>,

    #[arg(long, value_enum, default_value = "auto")]
    activation: Rho,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PhArgs {
    #[command(flatten)]
    metric: MetricArgs,

    /// Top simplex dimension; diagrams cover the dimensions below it.
    #[arg(long, default_value_t = feathom::DEFAULT_MAX_DIM)]
    max_dim: usize,

    /// Also write dimension-1 representative cycles as JSON to this file.
    #[arg(long)]
    reps: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Diagram CSV `dim,birth,death`.
    #[arg(long, value_parser = existing_file)]
    diagram: PathBuf,

    #[arg(long, default_value_t = 1)]
    dim: usize,

    /// Replace infinite deaths by this value instead of dropping them.
    #[arg(long)]
    cap: Option<f64>,

    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BottleneckArgs {
    #[arg(long, value_parser = existing_file)]
    a: PathBuf,

    #[arg(long, value_parser = existing_file)]
    b: PathBuf,

    #[arg(long, default_value_t = 1)]
    dim: usize,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false, args = ["prices", "input"])]
struct AscArgs {
    /// Price CSV `date,close`; binned into log-return classes.
    #[arg(long, value_parser = existing_file)]
    prices: Option<PathBuf>,

    /// Featured series CSV, used as is.
    #[arg(long, value_parser = existing_file)]
    input: Option<PathBuf>,

    #[arg(long, value_parser = existing_file, requires = "input")]
    schema: Option<PathBuf>,

    #[arg(long, default_value_t = 30)]
    bins: usize,

    #[arg(long, default_value_t = 4)]
    delta_bins: usize,

    #[arg(long)]
    window: usize,

    #[arg(long, default_value_t = 1)]
    step: usize,

    #[arg(long)]
    cap: Option<f64>,

    #[command(flatten)]
    influence: InfluenceArgs,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TascArgs {
    /// Curve CSVs `start_index,start_date,score`.
    #[arg(long, num_args = 1.., required = true, value_parser = existing_file)]
    curves: Vec<PathBuf>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    series: SeriesArgs,

    /// Zeroth feature varied along x.
    #[arg(long)]
    feature_a: String,

    /// First feature varied along y.
    #[arg(long)]
    feature_b: String,

    /// `start:stop:step` or a comma list.
    #[arg(long, value_parser = parse_values)]
    xs: Values,

    #[arg(long, value_parser = parse_values)]
    ys: Values,

    #[arg(long, value_enum, default_value = "auto")]
    activation: Rho,

    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    series: SeriesArgs,

    #[arg(long, value_parser = existing_file)]
    g: PathBuf,

    #[arg(long, value_parser = existing_file)]
    g2: PathBuf,

    #[arg(long, value_enum, default_value = "auto")]
    activation: Rho,

    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    dims: Vec<usize>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> std::result::Result<Values, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {t:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err("range needs start <= stop and a positive step".into());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(Values((0..=n).map(|i| start + i as f64 * step).collect()))
        }
        [_] => s
            .split(',')
            .map(num)
            .collect::<std::result::Result<_, _>>()
            .map(Values),
        _ => Err(format!("expected start:stop:step or a comma list, got {s}")),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout"),
    }
}

fn load_config(path: &Path) -> Result<FeatureConfig> {
    FeatureConfig::from_path(path).with_context(|| format!("reading {}", path.display()))
}

fn load_series(args: &SeriesArgs) -> Result<(FeaturedSeries, FeatureConfig)> {
    let cfg = match &args.schema {
        Some(p) => load_config(p)?,
        None => FeatureConfig::default(),
    };
    let schema = Arc::new(cfg.schema()?);
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let series = parse_featured_series(BufReader::new(file), schema)
        .with_context(|| format!("reading {}", args.input.display()))?;
    Ok((series, cfg))
}

/// Layers influences: schema file, then `--g` file, then `--set`.
fn influence(
    schema: &FeatureSet,
    base: &FeatureConfig,
    args: &InfluenceArgs,
) -> Result<InfluenceVector> {
    let mut merged = FeatureConfig {
        g0: base.g0.clone(),
        g1: base.g1.clone(),
        ..Default::default()
    };
    if let Some(p) = &args.g {
        let extra = load_config(p)?;
        merged.g0.extend(extra.g0);
        merged.g1.extend(extra.g1);
    }
    apply_overrides(schema, &mut merged, &args.overrides)?;
    Ok(influence_vector_from_config(&merged, schema)?)
}

fn apply_overrides(
    schema: &FeatureSet,
    cfg: &mut FeatureConfig,
    sets: &[(String, f64)],
) -> Result<()> {
    for (name, v) in sets {
        if name == EMPTY0 || schema.index0(name).is_some() {
            cfg.g0.insert(name.clone(), *v);
        } else if name == EMPTY1 || schema.index1(name).is_some() {
            cfg.g1.insert(name.clone(), *v);
        } else {
            bail!("schema error: unknown feature {name} in --set");
        }
    }
    Ok(())
}

fn vertex_cap() -> Result<usize> {
    match std::env::var("FEATHOM_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("FEATHOM_CAP must be a positive integer, got {v:?}")),
        Err(_) => Ok(feathom::DEFAULT_VERTEX_CAP),
    }
}

fn pipeline_config(rho: Rho, max_dim: usize, reps: bool) -> Result<PipelineConfig> {
    let activation = match rho {
        Rho::Auto => ActivationChoice::Auto,
        Rho::Raw => ActivationChoice::Raw,
    };
    let persistence = PersistenceConfig {
        max_dim,
        vertex_cap: vertex_cap()?,
        representatives: reps,
    };
    Ok(PipelineConfig {
        activation,
        persistence,
        cap_infinite: None,
    })
}

fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    PersistenceDiagram::from_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(format_number(x))
    }
}

fn points_json(points: &[DiagramPoint]) -> serde_json::Value {
    points
        .iter()
        .map(|p| serde_json::json!({"dim": p.dim, "birth": json_number(p.birth), "death": json_number(p.death)}))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph(args) => {
            let (series, _) = load_series(&args.series)?;
            let skeleton = build_skeleton(&series)?;
            let cm = count_matrices(&series, &skeleton);
            write_output(
                args.out.as_deref(),
                &(skeleton_json(&skeleton, &cm)? + "\n"),
            )
        }
        Command::Distances(args) => {
            let (series, cfg) = load_series(&args.series)?;
            let g = influence(series.schema(), &cfg, &args.influence)?;
            let pc = pipeline_config(args.influence.activation, feathom::DEFAULT_MAX_DIM, false)?;
            let (graph, _) = build_weighted_graph(&series, &g)?;
            let d = distance_matrix(&graph, &pc.activation.resolve(&graph))?;
            let text = match args.out.format {
                Format::Csv => d.to_csv(),
                Format::Json => {
                    let rows: Vec<&[f64]> = (0..d.len()).map(|i| d.row(i)).collect();
                    to_json(&serde_json::json!({"labels": d.labels(), "distances": rows}))?
                }
            };
            write_output(args.out.out.as_deref(), &text)
        }
        Command::Ph(args) => {
            let m = &args.metric;
            let (series, cfg) = load_series(&m.series)?;
            let g = influence(series.schema(), &cfg, &m.influence)?;
            let pc = pipeline_config(m.influence.activation, args.max_dim, args.reps.is_some())?;
            let a = feathom::analyze(&series, &g, &pc)?;
            if let Some(path) = &args.reps {
                let text = a.diagram.reps_json(a.distances.labels())? + "\n";
                std::fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let text = match m.out.format {
                Format::Csv => a.diagram.to_csv(),
                Format::Json => to_json(&points_json(a.diagram.points()))?,
            };
            write_output(m.out.out.as_deref(), &text)
        }
        Command::Landscape(args) => {
            let dgm = read_diagram(&args.diagram)?;
            let points = match args.cap {
                Some(c) => feathom::cap_infinite(&dgm.dim(args.dim), c),
                None => dgm.finite(args.dim),
            };
            let l = persistence_landscape(&points);
            let text = match args.out.format {
                Format::Csv => l.to_csv(),
                Format::Json => to_json(&serde_json::json!({
                    "levels": l.levels(),
                    "sup_sum": landscape_norm(&l, LandscapeNorm::SupSum),
                    "l1_sum": landscape_norm(&l, LandscapeNorm::L1Sum),
                    "stats": diagram_stats(&points),
                }))?,
            };
            write_output(args.out.out.as_deref(), &text)
        }
        Command::Bottleneck(args) => {
            let (a, b) = (read_diagram(&args.a)?, read_diagram(&args.b)?);
            let d = bottleneck_distance(&a.dim(args.dim), &b.dim(args.dim));
            write_output(None, &format!("{}\n", format_number(d)))
        }
        Command::Asc(args) => {
            let (series, cfg) = match (&args.prices, &args.input) {
                (Some(p), _) => {
                    let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    let prices = parse_prices(BufReader::new(file))
                        .with_context(|| format!("reading {}", p.display()))?;
                    (
                        stock_preprocess(&prices, args.bins, args.delta_bins)?,
                        FeatureConfig::default(),
                    )
                }
                (None, Some(input)) => load_series(&SeriesArgs {
                    input: input.clone(),
                    schema: args.schema.clone(),
                })?,
                (None, None) => unreachable!("clap requires one source"),
            };
            let g = influence(series.schema(), &cfg, &args.influence)?;
            let mut pc =
                pipeline_config(args.influence.activation, feathom::DEFAULT_MAX_DIM, false)?;
            pc.cap_infinite = args.cap;
            let curve = asc_curve(&series, &g, args.window, args.step, &pc)?;
            if !curve.flagged.is_empty() {
                log::warn!(
                    "{} windows scored 0 because their graph was degenerate",
                    curve.flagged.len()
                );
            }
            write_output(args.out.as_deref(), &curve.to_csv())
        }
        Command::Tasc(args) => {
            let curves = args
                .curves
                .iter()
                .map(|p| {
                    let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    AnomalyCurve::from_csv(BufReader::new(file))
                        .with_context(|| format!("reading {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            write_output(args.out.as_deref(), &tasc_curve(&curves)?.to_csv())
        }
        Command::MusicGrid(args) => {
            let (series, _) = load_series(&args.series)?;
            let pc = pipeline_config(args.activation, feathom::DEFAULT_MAX_DIM, true)?;
            let cells = music_stats_grid(
                &series,
                &args.feature_a,
                &args.feature_b,
                &args.xs.0,
                &args.ys.0,
                &pc,
            )?;
            let text = match args.out.format {
                Format::Csv => grid_csv(&cells),
                Format::Json => to_json(&cells)?,
            };
            write_output(args.out.out.as_deref(), &text)
        }
        Command::Stability(args) => {
            let (series, cfg) = load_series(&args.series)?;
            let base = FeatureConfig {
                g0: cfg.g0.clone(),
                g1: cfg.g1.clone(),
                ..Default::default()
            };
            let vector = |path: &Path| -> Result<InfluenceVector> {
                let extra = load_config(path)?;
                let mut merged = base.clone();
                merged.g0.extend(extra.g0);
                merged.g1.extend(extra.g1);
                Ok(influence_vector_from_config(&merged, series.schema())?)
            };
            let (g, g2) = (vector(&args.g)?, vector(&args.g2)?);
            let pc = pipeline_config(args.activation, feathom::DEFAULT_MAX_DIM, false)?;
            let report = stability_check(&series, &g, &g2, &pc, &args.dims)?;
            write_output(args.out.as_deref(), &(report.to_json()? + "\n"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
