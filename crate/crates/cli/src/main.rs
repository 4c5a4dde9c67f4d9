use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use flatflow::balance::{self, GoodDirectionParams, PartitionParams, PointSet};
use flatflow::constants::{self, Empirical};
use flatflow::flow::{self, Budget, DirectedPoint};
use flatflow::saddle::{self, SaddleCensus};
use flatflow::spreading::{self, SpreadConfig, StartSpec};
use flatflow::{projection, unfold, Error, Point, RationalPolygon, Surface};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser, Debug)]
#[command(name = "flatflow", version, about = "Straight-line flow on translation surfaces")]
struct Cli {
    /// JSON run file `{"command": [...], "args": {...}}`; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to FLATFLOW_THREADS).
    #[arg(long, global = true, env = "FLATFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate or construct surfaces.
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Edge crossings of one geodesic, as CSV.
    Trace(TraceArgs),
    /// Induced interval exchange, or a hitting set with `--hits`.
    Iet(IetArgs),
    /// Saddle connections up to length T, as CSV.
    Saddle(SaddleArgs),
    /// Bad-direction set around short saddle connections.
    Omega(OmegaArgs),
    /// z-adic statistics of a point set.
    Balance(BalanceArgs),
    /// Constant ledger and parameter choices for a target epsilon.
    Constants(ConstantsArgs),
    /// Cell occupancy experiment over sampled directions.
    Spread(SpreadArgs),
    /// Star discrepancy of a point set or hitting set.
    Discrepancy(DiscrepancyArgs),
}

#[derive(Subcommand, Debug)]
enum SurfaceCmd {
    /// Check a surface file and print its invariants.
    #[command(args_override_self = true)]
    Validate { file: PathBuf },
    /// Unfold a rational polygon into a translation surface.
    #[command(args_override_self = true)]
    Unfold {
        /// Vertices as `x,y;x,y;...`, counterclockwise.
        #[arg(long, allow_hyphen_values = true)]
        vertices: String,
        #[arg(long, default_value_t = 48)]
        max_den: i64,
        /// Rescale to area 1.
        #[arg(long)]
        normalize: bool,
    },
}

#[derive(Args, Debug)]
struct StartArgs {
    #[arg(long, default_value_t = 0)]
    face: usize,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TraceArgs {
    #[arg(long)]
    surface: PathBuf,
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, conflicts_with = "max_hits")]
    max_time: Option<f64>,
    #[arg(long)]
    max_hits: Option<usize>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct IetArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Emit the first M hitting points from (face, x, y) instead of the branches.
    #[arg(long)]
    hits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    face: usize,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SaddleArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long = "T")]
    t: f64,
    #[arg(long, default_value_t = saddle::NODE_BUDGET)]
    budget: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct OmegaArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    n: f64,
    #[arg(long, default_value_t = 16.0)]
    c0: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BalanceArgs {
    /// Newline-separated points in [0, 1).
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value_t = 4)]
    z: u64,
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Crowding factor A; with `--m1` adds the anti-crowdedness verdict.
    #[arg(long = "A", requires = "m1")]
    a: Option<f64>,
    #[arg(long = "M1")]
    m1: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ConstantsArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long = "N", default_value_t = 1.0)]
    n: f64,
    /// Counting constant; fitted from a census up to `--fit-T` when absent.
    #[arg(long)]
    c_star: Option<f64>,
    #[arg(long = "fit-T", default_value_t = 16.0)]
    fit_t: f64,
    #[arg(long)]
    c5: Option<f64>,
    #[arg(long)]
    c6: Option<f64>,
    /// Scale of the transport seeds used to measure c5 and c6.
    #[arg(long, default_value_t = 4)]
    n0: u32,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Also build the good-direction set with this many scales.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    z1: u32,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SpreadArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long = "T")]
    t: f64,
    #[arg(long, default_value_t = 256)]
    dirs: usize,
    /// Random starts per direction; a fixed start is used with `--start-x/--start-y`.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    start_face: usize,
    #[arg(long, requires = "start_y")]
    start_x: Option<f64>,
    #[arg(long)]
    start_y: Option<f64>,
    /// Rescale the surface to area 1 first.
    #[arg(long)]
    normalize: bool,
    /// Write the flattened CSV instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DiscrepancyArgs {
    #[arg(long, conflicts_with = "surface")]
    points: Option<PathBuf>,
    #[arg(long, requires_all = ["theta", "m", "x", "y"])]
    surface: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    face: usize,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
}

struct Run {
    seed: u64,
    threads: Option<usize>,
    surface_hash: Option<String>,
    out: Option<PathBuf>,
}

impl Run {
    fn load_surface(&mut self, path: &Path) -> anyhow::Result<Surface> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.surface_hash = Some(hex::encode(Sha256::digest(&bytes)));
        let text = String::from_utf8(bytes).context("surface file is not UTF-8")?;
        Ok(Surface::from_json(&text)?)
    }

    fn emit(&self, body: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }

    fn emit_json<S: Serialize>(&self, value: &S) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.emit(&s)
    }
}

fn read_points(path: &Path) -> anyhow::Result<PointSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pts = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().with_context(|| format!("bad point {l:?}")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(PointSet::new(pts)?)
}

fn parse_vertices(s: &str) -> anyhow::Result<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p.split_once(',').ok_or_else(|| anyhow!("vertex {p:?} is not x,y"))?;
            Ok(Point::new(x.trim().parse()?, y.trim().parse()?))
        })
        .collect()
}

#[derive(Serialize)]
struct SurfaceSummary {
    faces: usize,
    edges: usize,
    area: f64,
    genus: usize,
    cone_angles: Vec<f64>,
    c2: f64,
    c3: f64,
    c4: f64,
    c7: f64,
}

#[derive(Serialize)]
struct OmegaOut {
    n: f64,
    c0: f64,
    measure: f64,
    intervals: flatflow::IntervalUnion,
}

#[derive(Serialize)]
struct ConstantsOut {
    ledger: Vec<constants::LedgerEntry>,
    transport: Option<constants::TransportRates>,
    fit: Option<saddle::CountingFit>,
    parameters: constants::ParameterChoice,
    good_directions: Option<balance::GoodDirections>,
}

#[derive(Serialize)]
struct DiscrepancyOut {
    m: usize,
    star_discrepancy: f64,
}

fn dispatch(cmd: Command, run: &mut Run) -> anyhow::Result<()> {
    match cmd {
        Command::Surface(SurfaceCmd::Validate { file }) => {
            let s = run.load_surface(&file)?;
            run.emit_json(&SurfaceSummary {
                faces: s.faces().len(),
                edges: s.edge_count(),
                area: s.area(),
                genus: s.genus(),
                cone_angles: s.singularities().iter().map(|c| c.cone_angle).collect(),
                c2: s.c2(),
                c3: s.c3(),
                c4: s.c4(),
                c7: s.c7(),
            })
        }
        Command::Surface(SurfaceCmd::Unfold { vertices, max_den, normalize }) => {
            let poly = RationalPolygon::from_vertices(parse_vertices(&vertices)?, max_den)?;
            let mut s = unfold::unfold_rational_polygon(&poly)?;
            if normalize {
                s = s.normalize_area();
            }
            let mut body = s.to_json();
            body.push('\n');
            run.emit(&body)
        }
        Command::Trace(a) => {
            let s = run.load_surface(&a.surface)?;
            let budget = match (a.max_time, a.max_hits) {
                (Some(t), _) => Budget::MaxTime(t),
                (None, Some(h)) => Budget::MaxHits(h),
                (None, None) => return Err(Error::InvalidParameter("give --max-time or --max-hits".into()).into()),
            };
            let start = DirectedPoint::new(a.start.face, Point::new(a.start.x, a.start.y), a.start.theta);
            run.emit(&flow::trace(&s, start, budget)?.to_csv())
        }
        Command::Iet(a) => {
            let s = run.load_surface(&a.surface)?;
            match a.hits {
                Some(m) => {
                    let (x, y) = a.x.zip(a.y).ok_or_else(|| Error::InvalidParameter("--hits needs --x and --y".into()))?;
                    let start = DirectedPoint::new(a.face, Point::new(x, y), a.theta);
                    run.emit(&projection::hitting_set(&s, start, m)?.to_lines())
                }
                None => {
                    let mut body = projection::induced_iet(&s, a.theta)?.to_json();
                    body.push('\n');
                    run.emit(&body)
                }
            }
        }
        Command::Saddle(a) => {
            let s = run.load_surface(&a.surface)?;
            let recs = saddle::enumerate_with_budget(&s, a.t, a.budget)?;
            run.emit(&saddle::saddle_csv(&recs))
        }
        Command::Omega(a) => {
            let s = run.load_surface(&a.surface)?;
            let u = saddle::omega_set(&s, a.n, a.c0)?;
            run.emit_json(&OmegaOut { n: a.n, c0: a.c0, measure: u.measure(), intervals: u })
        }
        Command::Balance(a) => {
            let x = read_points(&a.points)?;
            let params = PartitionParams::new(a.z, a.p)?;
            let crowd = a.a.zip(a.m1);
            run.emit_json(&balance::balance_report(&x, &params, a.delta, crowd)?)
        }
        Command::Constants(a) => {
            if !(a.eps > 0.0 && a.eps < 1.0) {
                return Err(Error::InvalidParameter(format!("ε = {} must lie in (0, 1)", a.eps)).into());
            }
            let s = run.load_surface(&a.surface)?;
            let (c_star, fit) = match a.c_star {
                Some(c) => (c, None),
                None => {
                    let census = SaddleCensus::new(&s, a.fit_t)?;
                    let ladder: Vec<f64> = (1..=8).map(|i| a.fit_t * i as f64 / 8.0).collect();
                    let fit = saddle::fit_counting_constant(&census, &ladder);
                    (fit.c_star, Some(fit))
                }
            };
            let c0 = (16.0 * c_star / (std::f64::consts::PI * a.eps)).max(4.0);
            let (c5, c6, transport) = match (a.c5, a.c6) {
                (Some(c5), Some(c6)) => (c5, c6, None),
                _ => {
                    let dirs = spreading::sample_directions(a.samples, run.seed);
                    let r = constants::measure_transport_rates(&s, c0, a.n0, &dirs)?;
                    (a.c5.unwrap_or(r.c5), a.c6.unwrap_or(r.c6), Some(r))
                }
            };
            let k = constants::derive_constants(&s, Empirical { c_star, c5, c6 }, a.eps)?;
            let parameters = constants::choose_parameters(&k, a.n)?;
            let good_directions = a
                .k
                .map(|kk| {
                    let gp = GoodDirectionParams { n1: a.n.log2(), z1: a.z1, k: kk, c0: k.c0, eta: a.eps / 2.0 };
                    balance::good_directions(&s, gp, a.eps, saddle::NODE_BUDGET)
                })
                .transpose()?;
            run.emit_json(&ConstantsOut { ledger: k.ledger(), transport, fit, parameters, good_directions })
        }
        Command::Spread(a) => {
            let mut s = run.load_surface(&a.surface)?;
            if a.normalize {
                s = s.normalize_area();
            }
            let starts = match (a.start_x, a.start_y) {
                (Some(x), Some(y)) => StartSpec::Fixed { face: a.start_face, x, y },
                _ => StartSpec::Random { count: a.starts },
            };
            let cfg = SpreadConfig { n: a.n, epsilon: a.eps, t: a.t, directions: a.dirs, seed: run.seed, starts };
            let report = spreading::spread_experiment(&s, cfg, None)?;
            if a.csv {
                run.emit(&report.to_csv())
            } else {
                run.emit_json(&report)
            }
        }
        Command::Discrepancy(a) => {
            let pts: Vec<f64> = match (&a.points, &a.surface) {
                (Some(p), _) => read_points(p)?.points().to_vec(),
                (None, Some(path)) => {
                    let s = run.load_surface(path)?;
                    let (theta, m, x, y) = (a.theta.unwrap(), a.m.unwrap(), a.x.unwrap(), a.y.unwrap());
                    projection::hitting_set(&s, DirectedPoint::new(a.face, Point::new(x, y), theta), m)?.points
                }
                (None, None) => return Err(Error::InvalidParameter("give --points or --surface".into()).into()),
            };
            run.emit_json(&DiscrepancyOut { m: pts.len(), star_discrepancy: spreading::star_discrepancy(&pts)? })
        }
    }
}

const SUBCOMMANDS: [&str; 9] = ["surface", "trace", "iet", "saddle", "omega", "balance", "constants", "spread", "discrepancy"];

/// Merges a run file into the argument list: its command words are used when
/// none are given, and its flags are placed before the command-line flags so
/// that the latter take precedence.
fn expand_config(argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let mut argv = argv;
    let path = if let Some(v) = argv[pos].strip_prefix("--config=") {
        let v = v.to_string();
        argv.remove(pos);
        v
    } else {
        argv.remove(pos);
        if pos >= argv.len() {
            return Err(anyhow!("--config needs a path"));
        }
        argv.remove(pos)
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
    let cfg: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let words: Vec<String> = match cfg.get("command") {
        Some(serde_json::Value::String(s)) => s.split_whitespace().map(String::from).collect(),
        Some(serde_json::Value::Array(a)) => a.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
        _ => Vec::new(),
    };
    let mut flags = Vec::new();
    if let Some(serde_json::Value::Object(map)) = cfg.get("args") {
        for (k, v) in map {
            match v {
                serde_json::Value::Bool(true) => flags.push(format!("--{k}")),
                serde_json::Value::Bool(false) | serde_json::Value::Null => {}
                serde_json::Value::String(s) => flags.push(format!("--{k}={s}")),
                other => flags.push(format!("--{k}={other}")),
            }
        }
    }
    let cmd_at = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())).map(|i| i + 1);
    let mut out = Vec::new();
    match cmd_at {
        Some(i) => {
            let mut end = i + 1;
            if argv[i] == "surface" && end < argv.len() && !argv[end].starts_with('-') {
                end += 1;
            }
            if argv[i] == "surface" && argv.get(i + 1).map(String::as_str) == Some("validate") && end < argv.len() && !argv[end].starts_with('-') {
                end += 1;
            }
            out.extend_from_slice(&argv[..end]);
            out.extend(flags);
            out.extend_from_slice(&argv[end..]);
        }
        None => {
            out.extend_from_slice(&argv);
            out.extend(words);
            out.extend(flags);
        }
    }
    Ok(out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExhausted(_)) => 3,
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = Cli::parse_from(argv.clone());
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let mut run = Run { seed: cli.seed, threads: cli.threads, surface_hash: None, out: cli.out.clone() };
    let result = dispatch(cli.command, &mut run);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    eprintln!(
        "# flatflow {} | surface_sha256={} | seed={} | threads={} | args={} | unix_time={}",
        env!("CARGO_PKG_VERSION"),
        run.surface_hash.as_deref().unwrap_or("-"),
        run.seed,
        run.threads.unwrap_or_else(rayon::current_num_threads),
        argv[1..].join(" "),
        stamp,
    );
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
