//! Command-line front end: every subcommand writes JSON (structured results)
//! or CSV (tables and plot data) headed by the tool version, the seed and an
//! echo of the configuration.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use latbabai_core::babai::{is_babai_error, nearest_plane};
use latbabai_core::error2d::{self, ReducedBasis2D};
use latbabai_core::error3d::{self, CellType, ScanRecord};
use latbabai_core::io::read_lattice;
use latbabai_core::lattice::{cvp_bruteforce, packing_density, GramMatrix};
use latbabai_core::protocol::{self, SourceModel};
use latbabai_core::reduction::{
    conorms, is_minkowski_reduced, lagrange_gauss_reduce, superbase_to_minkowski, to_obtuse_superbase, vonorms,
};
use latbabai_core::LatticeError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "latbabai", version, about = "Nearest-plane lattice decoding: error probability and protocols")]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Override the output format (tables default to CSV, reports to JSON).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Gram matrix, Minkowski test and reduced / obtuse forms of a basis.
    Reduce(LatticeArgs),
    /// Nearest-plane decoding of one target, compared with the exact closest point.
    Babai(BabaiArgs),
    /// Planar error probability, from a lattice file or from `(a, b)`.
    Pe2d(Pe2dArgs),
    /// Three-dimensional error probability over basis orderings.
    Pe3d(Pe3dArgs),
    /// Packing density and error probability of the reference lattices (CSV).
    Table1,
    /// Random scan restricted to nearly degenerate cells (CSV).
    Table2Scan(ScanArgs),
    /// Level curves of the planar error probability (CSV).
    Levels(LevelsArgs),
    /// Random reduced obtuse superbases with their error probability (CSV).
    RandomScan(ScanArgs),
    /// Simulate the centralized or interactive decoding protocol.
    ProtocolSim(ProtocolArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LatticeArgs {
    /// Lattice JSON file `{ "n": .., "columns": [[..], ..] }`.
    #[arg(long)]
    pub lattice: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BabaiArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    /// Target vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct Pe2dArgs {
    /// Lattice JSON file; reduced to `{(1, 0), (a, b)}` first.
    #[arg(long, alias = "lattice", conflicts_with_all = ["a", "b", "polar"])]
    pub basis: Option<PathBuf>,
    #[arg(long, requires = "b", allow_hyphen_values = true, conflicts_with = "polar")]
    pub a: Option<f64>,
    #[arg(long, requires = "a")]
    pub b: Option<f64>,
    /// `theta,rho` with `(a, b) = rho (cos theta, sin theta)`.
    #[arg(long, value_delimiter = ',', value_name = "THETA,RHO")]
    pub polar: Option<Vec<f64>>,
    /// Also estimate by Monte Carlo with this many samples.
    #[arg(long, default_value_t = 0)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct Pe3dArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    /// Evaluate only the given column order.
    #[arg(long)]
    pub no_search: bool,
    #[arg(long, default_value_t = 0)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep lattices with packing density at least this.
    #[arg(long, default_value_t = error3d::DEFAULT_DENSITY_FLOOR)]
    pub floor: f64,
    /// Basis parameters are drawn uniformly from `[-range, range]`.
    #[arg(long, default_value_t = error3d::DEFAULT_RANGE)]
    pub range: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LevelsArgs {
    /// Levels `k` of the curves `P_e = k`, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = error2d::DEFAULT_LEVELS.to_vec())]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1.5)]
    pub b_max: f64,
    /// Emit the full `P_e` surface on a grid instead of level curves.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Centralized,
    Interactive,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Standard normal.
    Gauss,
}

#[derive(Debug, Args, Serialize)]
pub struct ProtocolArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long, default_value_t = 1.0 / 256.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = SourceArg::Uniform)]
    pub source: SourceArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest denominator accepted when rationalizing `v_ml / v_mm`.
    #[arg(long, default_value_t = protocol::DEFAULT_MAX_DEN)]
    pub max_den: u64,
}

/// Process exit status for a failed run: 3 for numeric failures (enumeration
/// limits, irrational ratios, attempt caps), 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<LatticeError>() {
        Some(e) if e.is_numeric() => 3,
        _ => 2,
    }
}

fn header(cli: &Cli, seed: Option<u64>) -> Value {
    json!({
        "tool": "latbabai",
        "version": VERSION,
        "seed": seed,
        "config": cli,
    })
}

/// One line per header field, each prefixed with `#`.
pub fn csv_header_lines(header: &Value) -> String {
    format!(
        "# latbabai {}\n# seed: {}\n# config: {}\n",
        header["version"].as_str().unwrap_or_default(),
        header["seed"],
        header["config"]
    )
}

fn write_csv<T: Serialize>(header: &Value, rows: &[T]) -> anyhow::Result<String> {
    let mut out = csv_header_lines(header);
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    out.push_str(&String::from_utf8(w.into_inner()?)?);
    Ok(out)
}

fn write_json(header: Value, result: Value) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(&json!({ "header": header, "result": result }))?;
    s.push('\n');
    Ok(s)
}

/// Flat row of the reference-lattice table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub lattice: String,
    pub cell_type: CellType,
    pub p01: f64,
    pub p02: f64,
    pub p03: f64,
    pub p23: f64,
    pub p13: f64,
    pub p12: f64,
    pub density: f64,
    pub pe: f64,
    pub pe_max_ordering: f64,
}

/// Flat row of a random scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub trial: u64,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub attempts: u64,
    pub p01: f64,
    pub p02: f64,
    pub p03: f64,
    pub p23: f64,
    pub p13: f64,
    pub p12: f64,
    pub density: f64,
    pub pe: f64,
    pub cell_type: CellType,
    pub approx_cell_type: CellType,
}

impl From<&ScanRecord> for ScanRow {
    fn from(r: &ScanRecord) -> Self {
        let [a, b, c, d, e] = r.params;
        let [p01, p02, p03, p23, p13, p12] = r.selling;
        Self {
            trial: r.trial,
            seed: r.seed,
            a,
            b,
            c,
            d,
            e,
            attempts: r.attempts,
            p01,
            p02,
            p03,
            p23,
            p13,
            p12,
            density: r.density,
            pe: r.pe,
            cell_type: r.cell_type,
            approx_cell_type: r.approx_cell_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: f64,
    pub a: f64,
    pub b: f64,
    pub pe: f64,
}

fn gram_rows(g: &GramMatrix) -> Vec<Vec<f64>> {
    (0..g.dim()).map(|i| (0..g.dim()).map(|j| g.get(i, j)).collect()).collect()
}

fn reduce(args: &LatticeArgs) -> anyhow::Result<Value> {
    let basis = read_lattice(&args.lattice)?;
    let gram = basis.gram();
    let mut out = json!({
        "n": basis.dim(),
        "gram": gram_rows(&gram),
        "volume": basis.volume(),
        "packing_density": packing_density(&basis)?,
    });
    let report = is_minkowski_reduced(&gram)?;
    out["minkowski"] = json!(report.reduced);
    out["violated"] = json!(report.violated);
    if basis.dim() == 2 {
        let g = lagrange_gauss_reduce(&basis)?;
        out["gauss_reduced_columns"] = json!(g.basis.columns());
        out["gauss_transform"] = json!(g.transform);
    }
    if basis.dim() <= 3 {
        match to_obtuse_superbase(&basis) {
            Ok(sb) => {
                out["superbase"] = json!(sb.vectors());
                out["selling"] = json!(sb.selling_params());
                out["minkowski_from_superbase"] = json!(superbase_to_minkowski(&sb)?.columns());
                if basis.dim() == 3 {
                    out["selling_table_order"] = json!(sb.selling_table_order()?);
                    let c = conorms(&sb)?;
                    out["conorms"] = json!(c.values);
                    out["vonorms"] = json!(vonorms(&sb)?.values);
                    out["cell_type"] = json!(error3d::classify_cell(&c, error3d::CONORM_TOL)?);
                }
            }
            Err(e) => out["superbase_error"] = json!(e.to_string()),
        }
    }
    Ok(out)
}

fn babai(args: &BabaiArgs) -> anyhow::Result<Value> {
    let basis = read_lattice(&args.lattice)?;
    if args.x.len() != basis.dim() {
        return Err(LatticeError::DimensionMismatch {
            expected: basis.dim(),
            got: args.x.len(),
        }
        .into());
    }
    let (rot, upper) = basis.qr_upper();
    let y = rot.apply_inverse(&args.x);
    let b = nearest_plane(&upper, &y);
    let babai_point = basis.point(b.as_slice());
    let exact = cvp_bruteforce(&basis, &args.x, None)?;
    Ok(json!({
        "coeffs": b,
        "point": babai_point.embedding,
        "distance": babai_point.distance_to(&args.x),
        "exact_coeffs": exact.point.coeffs,
        "exact_point": exact.point.embedding,
        "exact_distance": exact.distance,
        "is_error": is_babai_error(&basis, &args.x)?,
    }))
}

fn pe2d(args: &Pe2dArgs) -> anyhow::Result<Value> {
    let polar = match args.polar.as_deref() {
        Some(&[theta, rho]) => Some((theta, rho)),
        Some(_) => bail!(LatticeError::InvalidArgument("--polar takes theta,rho".into())),
        None => None,
    };
    let (basis, rb) = match (&args.basis, args.a, args.b) {
        (None, None, None) if polar.is_some() => {
            let (theta, rho) = polar.unwrap();
            let rb = ReducedBasis2D::new(rho * theta.cos(), rho * theta.sin())?;
            (rb.basis(), rb)
        }
        (Some(path), _, _) => {
            let basis = read_lattice(path)?;
            let rb = ReducedBasis2D::from_basis(&basis)?;
            (basis, rb)
        }
        (None, Some(a), Some(b)) => {
            let rb = ReducedBasis2D::new(a, b)?;
            (rb.basis(), rb)
        }
        _ => bail!(LatticeError::InvalidArgument("give --basis, --a with --b, or --polar".into())),
    };
    let mut out = json!({
        "given_basis": {
            "pe_geometric": error2d::pe_geometric_2d(&basis)?,
        },
        "reduced": {
            "a": rb.canonical().a,
            "b": rb.canonical().b,
            "pe_closed_form": error2d::pe_closed_form(&rb),
            "pe_geometric": error2d::pe_geometric_2d(&rb.canonical().basis())?,
            "packing_density": error2d::packing_density_2d(&rb),
            "voronoi_vertices": error2d::voronoi_polygon_2d(&rb).vertices,
            "relevant_vectors": error2d::relevant_vectors_2d(&rb.canonical()),
        },
    });
    if args.mc_samples > 0 {
        out["given_basis"]["monte_carlo"] = json!(error3d::mc_pe_oracle(&basis, args.mc_samples, args.seed)?);
    }
    Ok(out)
}

fn pe3d(args: &Pe3dArgs) -> anyhow::Result<Value> {
    let basis = read_lattice(&args.lattice)?;
    let report = error3d::pe_3d(&basis, !args.no_search)?;
    let mut out = serde_json::to_value(&report)?;
    if args.mc_samples > 0 {
        let order = report.best_order;
        let best = basis.permuted(&order)?;
        out["monte_carlo_best_order"] = json!(error3d::mc_pe_oracle(&best, args.mc_samples, args.seed)?);
    }
    Ok(out)
}

pub fn table1_rows() -> anyhow::Result<Vec<Table1Row>> {
    Ok(error3d::table1()?
        .into_iter()
        .map(|r| {
            let [p01, p02, p03, p23, p13, p12] = r.selling;
            Table1Row {
                lattice: r.name.to_string(),
                cell_type: r.cell_type,
                p01,
                p02,
                p03,
                p23,
                p13,
                p12,
                density: r.density,
                pe: r.pe,
                pe_max_ordering: r.per_ordering.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect())
}

fn scan_rows(args: &ScanArgs, near_degenerate_only: bool) -> anyhow::Result<Vec<ScanRow>> {
    let summary = error3d::scan_random(args.trials, args.floor, args.seed, args.range)?;
    Ok(summary
        .records
        .iter()
        .filter(|r| !near_degenerate_only || r.approx_cell_type != CellType::TruncatedOctahedron)
        .map(ScanRow::from)
        .collect())
}

fn level_rows(args: &LevelsArgs) -> Vec<LevelRow> {
    let pts = if args.grid {
        error2d::pe_grid(args.resolution, args.b_max)
    } else {
        error2d::level_curve_data(&args.levels, args.resolution, args.b_max)
    };
    pts.into_iter()
        .map(|p| LevelRow {
            level: p.level,
            a: p.a,
            b: p.b,
            pe: p.pe,
        })
        .collect()
}

fn protocol_sim(args: &ProtocolArgs) -> anyhow::Result<Value> {
    let basis = read_lattice(&args.lattice)?;
    let (_, upper) = basis.qr_upper();
    let n = basis.dim();
    let src = match args.source {
        SourceArg::Uniform => SourceModel::Uniform { low: 0.0, high: 1.0 },
        SourceArg::Gauss => SourceModel::Gaussian { mean: 0.0, std: 1.0 },
    };
    let sources = vec![src; n];
    match args.model {
        ModelArg::Centralized => {
            let profile = protocol::rationalize(&upper, args.max_den)?;
            let r = protocol::centralized_total_rate(&sources, &upper, args.alpha, &profile, args.samples, args.seed)?;
            Ok(json!({
                "model": "centralized",
                "rate_bound": r.rate_bound,
                "empirical_rate": r.empirical_rate,
                "side_info_bits": r.side_info_bound,
                "decode_mismatches": r.decode_mismatches,
                "q": profile.q_m,
                "details": r,
            }))
        }
        ModelArg::Interactive => {
            let r = protocol::interactive_simulate(&sources, &upper, args.alpha, args.samples, args.seed)?;
            Ok(json!({
                "model": "interactive",
                "rate_bound": r.approx_rate,
                "empirical_rate": r.empirical_rate,
                "side_info_bits": 0.0,
                "decode_mismatches": r.decode_mismatches + r.disagreements,
                "details": r,
            }))
        }
    }
}

fn table<T: Serialize>(cli: &Cli, seed: Option<u64>, rows: &[T]) -> anyhow::Result<String> {
    let h = header(cli, seed);
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&h, rows),
        Format::Json => write_json(h, serde_json::to_value(rows)?),
    }
}

fn report(cli: &Cli, seed: Option<u64>, result: Value) -> anyhow::Result<String> {
    if cli.format == Some(Format::Csv) {
        bail!(LatticeError::InvalidArgument("this subcommand only emits JSON".into()));
    }
    write_json(header(cli, seed), result)
}

/// Runs the parsed command and returns the text to emit.
pub fn render(cli: &Cli) -> anyhow::Result<String> {
    match &cli.command {
        Command::Reduce(a) => report(cli, None, reduce(a)?),
        Command::Babai(a) => report(cli, None, babai(a)?),
        Command::Pe2d(a) => report(cli, Some(a.seed), pe2d(a)?),
        Command::Pe3d(a) => report(cli, Some(a.seed), pe3d(a)?),
        Command::Table1 => table(cli, None, &table1_rows()?),
        Command::Table2Scan(a) => table(cli, Some(a.seed), &scan_rows(a, true)?),
        Command::RandomScan(a) => table(cli, Some(a.seed), &scan_rows(a, false)?),
        Command::Levels(a) => table(cli, None, &level_rows(a)),
        Command::ProtocolSim(a) => report(cli, Some(a.seed), protocol_sim(a)?),
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LATBABAI_THREADS") {
        let threads: usize = v
            .parse()
            .map_err(|_| LatticeError::InvalidArgument(format!("LATBABAI_THREADS={v} is not a count")))?;
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let text = render(cli)?;
    match &cli.output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
