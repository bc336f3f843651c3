//! Command-line driver: single experiments, table sweeps, figure export.
//!
//! Exit codes are a stable contract: 0 success, 1 numeric or solver failure,
//! 2 usage error. Structured errors go to stderr; payloads go to `--out` or
//! stdout so runs can be piped.

use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::metrics::{
    amli_experiment, figure_experiment, grid_svg_string, two_grid_experiment, ExperimentKind,
    ExperimentRecord, RunParams, CSV_HEADER,
};
use crate::problems::{ProblemSpec, Scheme};
use crate::rng;

const TAG_TABLE_CELL: u64 = 0x5442;
const TAG_FIGURE: u64 = 0x4647;

/// Parses an angle given symbolically ("pi", "pi/4", "-pi/8") or as a float
/// in radians. Returns the value and a canonical label for records.
pub fn parse_angle(input: &str) -> Result<(f64, String)> {
    let label: String = input.trim().chars().filter(|c| !c.is_whitespace()).collect();
    let (negative, body) = match label.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, label.as_str()),
    };
    let magnitude = if body == "pi" {
        std::f64::consts::PI
    } else if let Some(denom) = body.strip_prefix("pi/") {
        let k: f64 = denom
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad angle {input:?}")))?;
        if k == 0.0 || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("bad angle {input:?}")));
        }
        std::f64::consts::PI / k
    } else {
        body.parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad angle {input:?}")))?
    };
    let value = if negative { -magnitude } else { magnitude };
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("angle {input:?} is not finite")));
    }
    Ok((value, label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
    Mm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableId {
    #[value(name = "fd-2grid")]
    Fd2Grid,
    #[value(name = "fe-2grid")]
    Fe2Grid,
    #[value(name = "fd-amli")]
    FdAmli,
    #[value(name = "fe-amli")]
    FeAmli,
}

impl TableId {
    fn scheme(self) -> Scheme {
        match self {
            TableId::Fd2Grid | TableId::FdAmli => Scheme::Fd7,
            TableId::Fe2Grid | TableId::FeAmli => Scheme::Fe9,
        }
    }

    fn kind(self) -> ExperimentKind {
        match self {
            TableId::Fd2Grid | TableId::Fe2Grid => ExperimentKind::TwoGrid,
            TableId::FdAmli | TableId::FeAmli => ExperimentKind::Amli,
        }
    }

    fn name(self) -> &'static str {
        match self {
            TableId::Fd2Grid => "fd-2grid",
            TableId::Fe2Grid => "fe-2grid",
            TableId::FdAmli => "fd-amli",
            TableId::FeAmli => "fe-amli",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bamg",
    version,
    about = "Bootstrap AMG experiments on rotated anisotropic diffusion problems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure the two-grid convergence rate for one problem.
    Twogrid(RunArgs),
    /// Bootstrap a hierarchy and solve a random right-hand side with
    /// AMLI-preconditioned flexible CG.
    Amli(RunArgs),
    /// Reproduce a result table over the standard angle/strength sweep.
    Table(TableArgs),
    /// Render coarse-grid and interpolation-pattern figures as SVG.
    Figures(FigureArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Discretization scheme: fd7 or fe9.
    #[arg(long, default_value = "fd7", value_parser = parse_scheme)]
    scheme: Scheme,
    /// Grid intervals per side (unknowns are the interior (n-1)^2 nodes).
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Rotation angle: "pi/4", "-pi/8", or radians.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    alpha: String,
    /// Anisotropy strength in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Interpolation caliber (max coarse points per F-row).
    #[arg(long, default_value_t = 2)]
    caliber: usize,
    /// Strength-graph neighborhood depth d.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Search depth for interpolatory sets (0 means depth + 2).
    #[arg(long, default_value_t = 0)]
    ls_depth: usize,
    /// Strength retention threshold in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// CR acceptance threshold on the F-relaxation rate.
    #[arg(long, default_value_t = 0.7)]
    delta: f64,
    /// CR relaxation sweeps per measurement.
    #[arg(long, default_value_t = 5)]
    nu: usize,
    /// Caliber penalization exponent base.
    #[arg(long, default_value_t = 1.5)]
    gamma: f64,
    /// Number of test vectors.
    #[arg(long, default_value_t = 8)]
    tvs: usize,
    /// Relaxation sweeps per test vector (0 picks 40 two-grid, 8 multilevel).
    #[arg(long, default_value_t = 0)]
    tv_sweeps: usize,
    /// Level budget for multilevel runs (0 derives it from n).
    #[arg(long, default_value_t = 0)]
    levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; relative paths land in $BAMG_OUT_DIR when set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Payload format: json record, csv line, or mm (Matrix Market of A).
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Which table to reproduce.
    #[arg(long = "table-id", value_enum)]
    table_id: TableId,
    /// Grid sizes to sweep; defaults to 32 for two-grid tables and
    /// 32,64,128 for multilevel tables.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (default <table-id>.csv in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[arg(long, default_value = "fd7", value_parser = parse_scheme)]
    scheme: Scheme,
    /// Grid intervals per side; capped at 64 to keep figures readable.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Angles to draw.
    #[arg(long, value_delimiter = ',', default_values_t = default_angles(), allow_hyphen_values = true)]
    alpha: Vec<String>,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Interpolation caliber for the drawn segments.
    #[arg(long, default_value_t = 1)]
    caliber: usize,
    /// Strength-graph depths to draw (one figure per angle and depth).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
    depth: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the SVG files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// svg writes figures plus their json records; json writes records only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Svg)]
    format: OutputFormat,
}

fn default_angles() -> Vec<String> {
    vec!["0".into(), "pi/4".into(), "-pi/4".into(), "pi/8".into()]
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    s.parse()
}

/// Parses arguments from the process environment and runs one command.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Error::InvalidParameter(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Twogrid(args) => run_single(args, ExperimentKind::TwoGrid),
        Command::Amli(args) => run_single(args, ExperimentKind::Amli),
        Command::Table(args) => run_table(args),
        Command::Figures(args) => run_figures(args),
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os("BAMG_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve_out(requested: &Path) -> PathBuf {
    if requested.is_absolute() {
        requested.to_path_buf()
    } else {
        out_dir().join(requested)
    }
}

fn params_from(args: &RunArgs, kind: ExperimentKind) -> Result<RunParams> {
    let (alpha, label) = parse_angle(&args.alpha)?;
    let spec = ProblemSpec::new(args.scheme, args.n, alpha, args.eps)?;
    let mut params = match kind {
        ExperimentKind::TwoGrid => RunParams::two_grid_defaults(spec, &label, args.seed),
        ExperimentKind::Amli => RunParams::amli_defaults(spec, &label, args.seed),
    };
    params.caliber = args.caliber;
    params.depth = args.depth;
    params.d_ls = if args.ls_depth == 0 { args.depth + 2 } else { args.ls_depth };
    params.theta = args.theta;
    params.delta = args.delta;
    params.nu = args.nu;
    params.gamma = args.gamma;
    params.k = args.tvs;
    if args.tv_sweeps > 0 {
        params.tv_sweeps = args.tv_sweeps;
    }
    params.levels = args.levels;
    Ok(params)
}

fn emit(payload: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let path = resolve_out(path);
            std::fs::write(&path, payload)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{payload}"),
    }
    Ok(())
}

fn run_single(args: RunArgs, kind: ExperimentKind) -> Result<()> {
    let params = params_from(&args, kind)?;
    if args.format == OutputFormat::Mm {
        let a = params.spec.assemble()?;
        let default_name = format!("{}_n{}.mtx", params.spec.scheme, params.spec.n);
        let path = resolve_out(args.out.as_deref().unwrap_or(Path::new(&default_name)));
        let file = std::fs::File::create(&path)?;
        a.write_matrix_market(BufWriter::new(file))?;
        eprintln!("wrote {}", path.display());
        return Ok(());
    }
    if args.format == OutputFormat::Svg {
        return Err(Error::InvalidParameter(
            "svg output belongs to the figures subcommand".into(),
        ));
    }
    let record = match kind {
        ExperimentKind::TwoGrid => two_grid_experiment(&params)?,
        ExperimentKind::Amli => amli_experiment(&params)?,
    };
    for row in &record.cr_trace {
        eprintln!(
            "cr round {}: |C| {} -> rho_f {:.3}, {} candidates, {} selected",
            row.round, row.c_size, row.rho_f, row.candidates, row.selected
        );
    }
    eprintln!("{}", summarize(&record));
    let payload = match args.format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => format!("{CSV_HEADER}\n{}\n", record.to_csv_line()),
        OutputFormat::Svg | OutputFormat::Mm => unreachable!(),
    };
    emit(&payload, args.out.as_deref())
}

fn summarize(record: &ExperimentRecord) -> String {
    match record.kind {
        ExperimentKind::TwoGrid => format!(
            "rho {}  coarse fraction {}  gamma_o {:.2}  rho_f {}",
            record
                .report
                .rho
                .map_or_else(|| "-".into(), |r| format!("{r:.4}")),
            record
                .report
                .coarse_fraction
                .map_or_else(|| "-".into(), |f| format!("{f:.3}")),
            record.report.gamma_o,
            record
                .rho_f
                .map_or_else(|| "-".into(), |r| format!("{r:.3}")),
        ),
        ExperimentKind::Amli => format!(
            "iterations {}  levels {}  gamma_g {:.2}  gamma_o {:.2}  restarts {}",
            record
                .report
                .iterations
                .map_or_else(|| "-".into(), |i| i.to_string()),
            record.levels.len(),
            record.report.gamma_g,
            record.report.gamma_o,
            record.report.fcg_restarts,
        ),
    }
}

/// One cell of a table sweep; failures keep their error text so a bad cell
/// never aborts the table.
#[derive(Debug)]
pub struct TableCell {
    pub n: usize,
    pub caliber: usize,
    pub alpha_label: String,
    pub epsilon: f64,
    pub outcome: std::result::Result<ExperimentRecord, String>,
}

#[derive(Debug)]
pub struct TableResult {
    pub id: TableId,
    pub cells: Vec<TableCell>,
}

pub const TABLE_ANGLES: [&str; 4] = ["0", "pi/4", "-pi/4", "pi/8"];
pub const TABLE_EPSILONS: [f64; 3] = [0.1, 1e-4, 0.0];

/// Runs the full sweep for one table id: angles x strengths x sizes, and
/// both calibers for the two-grid tables.
pub fn run_table_id(id: TableId, sizes: &[usize], base_seed: u64) -> TableResult {
    let kind = id.kind();
    let calibers: &[usize] = match kind {
        ExperimentKind::TwoGrid => &[1, 2],
        ExperimentKind::Amli => &[2],
    };
    let mut cells = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        for &caliber in calibers {
            for (ei, &epsilon) in TABLE_EPSILONS.iter().enumerate() {
                for (ai, &angle) in TABLE_ANGLES.iter().enumerate() {
                    let coords = ((si as u64) << 48)
                        | ((caliber as u64) << 40)
                        | ((ei as u64) << 32)
                        | ai as u64;
                    let seed = rng::derive2(base_seed, TAG_TABLE_CELL, coords);
                    let outcome = table_cell(id, n, caliber, angle, epsilon, seed)
                        .map_err(|e| e.to_string());
                    cells.push(TableCell {
                        n,
                        caliber,
                        alpha_label: angle.to_string(),
                        epsilon,
                        outcome,
                    });
                }
            }
        }
    }
    TableResult { id, cells }
}

fn table_cell(
    id: TableId,
    n: usize,
    caliber: usize,
    angle: &str,
    epsilon: f64,
    seed: u64,
) -> Result<ExperimentRecord> {
    let (alpha, label) = parse_angle(angle)?;
    let spec = ProblemSpec::new(id.scheme(), n, alpha, epsilon)?;
    match id.kind() {
        ExperimentKind::TwoGrid => {
            let mut params = RunParams::two_grid_defaults(spec, &label, seed);
            params.caliber = caliber;
            two_grid_experiment(&params)
        }
        ExperimentKind::Amli => {
            let mut params = RunParams::amli_defaults(spec, &label, seed);
            params.caliber = caliber;
            amli_experiment(&params)
        }
    }
}

impl TableResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for cell in &self.cells {
            match &cell.outcome {
                Ok(record) => {
                    out.push_str(&record.to_csv_line());
                    out.push('\n');
                }
                Err(msg) => {
                    let scheme = self.id.scheme();
                    let clean = msg.replace([',', '\n'], ";");
                    out.push_str(&format!(
                        "{},{},{},{},{},,,,,,,error: {}\n",
                        scheme, cell.n, cell.alpha_label, cell.epsilon, cell.caliber, clean
                    ));
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("table {}\n", self.id.name());
        let mut variants: Vec<(usize, usize)> = self
            .cells
            .iter()
            .map(|c| (c.n, c.caliber))
            .collect();
        variants.sort_unstable();
        variants.dedup();
        out.push_str(&format!("{:<8}{:<8}", "eps", "alpha"));
        for &(n, c) in &variants {
            out.push_str(&format!("{:<22}", format!("N={n} c={c}")));
        }
        out.push('\n');
        for &epsilon in &TABLE_EPSILONS {
            for angle in TABLE_ANGLES {
                out.push_str(&format!("{:<8}{:<8}", format!("{epsilon}"), angle));
                for &(n, c) in &variants {
                    let cell = self.cells.iter().find(|x| {
                        x.n == n && x.caliber == c && x.alpha_label == angle && x.epsilon == epsilon
                    });
                    let text = match cell.map(|x| &x.outcome) {
                        Some(Ok(record)) => render_cell(record),
                        Some(Err(msg)) => {
                            let mut m = format!("err: {msg}");
                            m.truncate(20);
                            m
                        }
                        None => "-".to_string(),
                    };
                    out.push_str(&format!("{text:<22}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn render_cell(record: &ExperimentRecord) -> String {
    match record.kind {
        ExperimentKind::TwoGrid => {
            let rho = record.report.rho.unwrap_or(f64::NAN);
            if record.params.caliber >= 2 {
                format!(
                    "{:.2} ({:.2}, {:.1})",
                    rho,
                    record.report.coarse_fraction.unwrap_or(f64::NAN),
                    record.report.gamma_o
                )
            } else {
                format!("{rho:.2}")
            }
        }
        ExperimentKind::Amli => format!(
            "{} ({:.2}, {:.1})",
            record
                .report
                .iterations
                .map_or_else(|| "-".into(), |i| i.to_string()),
            record.report.gamma_g,
            record.report.gamma_o
        ),
    }
}

fn run_table(args: TableArgs) -> Result<()> {
    let sizes: Vec<usize> = if args.sizes.is_empty() {
        match args.table_id.kind() {
            ExperimentKind::TwoGrid => vec![32],
            ExperimentKind::Amli => vec![32, 64, 128],
        }
    } else {
        args.sizes.clone()
    };
    let result = run_table_id(args.table_id, &sizes, args.seed);
    for cell in &result.cells {
        if let Err(msg) = &cell.outcome {
            eprintln!(
                "cell (N={}, c={}, alpha={}, eps={}) failed: {msg}",
                cell.n, cell.caliber, cell.alpha_label, cell.epsilon
            );
        }
    }
    let default_name = format!("{}.csv", args.table_id.name());
    let path = resolve_out(args.out.as_deref().unwrap_or(Path::new(&default_name)));
    std::fs::write(&path, result.to_csv())?;
    eprintln!("wrote {}", path.display());
    print!("{}", result.to_text());
    Ok(())
}

/// File stem for one figure: angle label with '/' and '-' made path-safe.
fn figure_stem(scheme: Scheme, label: &str, depth: usize, caliber: usize) -> String {
    let safe: String = label
        .chars()
        .map(|c| match c {
            '/' => '_',
            '-' => 'm',
            other => other,
        })
        .collect();
    format!("grid_{scheme}_alpha_{safe}_d{depth}_c{caliber}")
}

fn run_figures(args: FigureArgs) -> Result<()> {
    if args.n > 64 {
        return Err(Error::InvalidParameter(format!(
            "figures need n <= 64 to stay readable, got {}",
            args.n
        )));
    }
    if args.format != OutputFormat::Svg && args.format != OutputFormat::Json {
        return Err(Error::InvalidParameter(
            "figures write svg or json records".into(),
        ));
    }
    let dir = args
        .out
        .as_deref()
        .map(resolve_out)
        .unwrap_or_else(out_dir);
    std::fs::create_dir_all(&dir)?;
    for (ai, angle) in args.alpha.iter().enumerate() {
        let (alpha, label) = parse_angle(angle)?;
        for &depth in &args.depth {
            let spec = ProblemSpec::new(args.scheme, args.n, alpha, args.eps)?;
            let seed = rng::derive2(args.seed, TAG_FIGURE, ((ai as u64) << 8) | depth as u64);
            let mut params = RunParams::two_grid_defaults(spec, &label, seed);
            params.caliber = args.caliber;
            params.depth = depth;
            params.d_ls = depth + 2;
            let record = figure_experiment(&params)?;
            let stem = figure_stem(args.scheme, &label, depth, args.caliber);
            let mut json = serde_json::to_string_pretty(&record).expect("record serializes");
            json.push('\n');
            std::fs::write(dir.join(format!("{stem}.json")), &json)?;
            if args.format == OutputFormat::Svg {
                let svg_path = dir.join(format!("{stem}.svg"));
                std::fs::write(&svg_path, grid_svg_string(&record))?;
                eprintln!("wrote {}", svg_path.display());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::default_level_count;
    use std::f64::consts::PI;

    #[test]
    fn angles_parse_symbolically() {
        assert_eq!(parse_angle("0").unwrap(), (0.0, "0".to_string()));
        let (v, label) = parse_angle("pi/4").unwrap();
        assert!((v - PI / 4.0).abs() < 1e-15);
        assert_eq!(label, "pi/4");
        let (v, label) = parse_angle("-pi/4").unwrap();
        assert!((v + PI / 4.0).abs() < 1e-15);
        assert_eq!(label, "-pi/4");
        let (v, _) = parse_angle("pi").unwrap();
        assert!((v - PI).abs() < 1e-15);
        let (v, _) = parse_angle("-pi/8").unwrap();
        assert!((v + PI / 8.0).abs() < 1e-15);
        let (v, _) = parse_angle("0.7853981633974483").unwrap();
        assert!((v - PI / 4.0).abs() < 1e-15);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/x").is_err());
    }

    #[test]
    fn cli_parses_the_documented_flags() {
        let cli = Cli::try_parse_from([
            "bamg", "twogrid", "--scheme", "fd7", "--n", "32", "--alpha", "-pi/4", "--eps",
            "1e-4", "--caliber", "2", "--seed", "7",
        ])
        .unwrap();
        match cli.command {
            Command::Twogrid(args) => {
                assert_eq!(args.n, 32);
                assert_eq!(args.alpha, "-pi/4");
                assert_eq!(args.caliber, 2);
                assert_eq!(args.seed, 7);
                let params = params_from(&args, ExperimentKind::TwoGrid).unwrap();
                assert_eq!(params.tv_sweeps, 40);
                assert_eq!(params.d_ls, 4);
                assert!((params.spec.alpha + PI / 4.0).abs() < 1e-15);
            }
            _ => panic!("expected twogrid"),
        }
    }

    #[test]
    fn amli_defaults_reduce_the_sweep_count() {
        let cli = Cli::try_parse_from(["bamg", "amli", "--n", "64"]).unwrap();
        match cli.command {
            Command::Amli(args) => {
                let params = params_from(&args, ExperimentKind::Amli).unwrap();
                assert_eq!(params.tv_sweeps, 8);
                assert_eq!(params.levels, 0);
                assert_eq!(default_level_count(params.spec.n), 4);
            }
            _ => panic!("expected amli"),
        }
    }

    #[test]
    fn unknown_table_id_is_a_parse_error() {
        let err = Cli::try_parse_from(["bamg", "table", "--table-id", "fd-3grid"]);
        assert!(err.is_err());
    }

    #[test]
    fn table_csv_keeps_going_past_bad_cells() {
        let result = TableResult {
            id: TableId::Fd2Grid,
            cells: vec![TableCell {
                n: 32,
                caliber: 2,
                alpha_label: "pi/4".into(),
                epsilon: 0.1,
                outcome: Err("boom, with comma".into()),
            }],
        };
        let csv = result.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("fd7,32,pi/4,0.1,2,"));
        assert!(lines[1].contains("error: boom; with comma"));
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        let text = result.to_text();
        assert!(text.contains("err: boom"));
    }

    #[test]
    fn figure_stems_are_path_safe() {
        assert_eq!(
            figure_stem(Scheme::Fd7, "-pi/4", 2, 1),
            "grid_fd7_alpha_mpi_4_d2_c1"
        );
        assert!(!figure_stem(Scheme::Fe9, "pi/8", 1, 2).contains('/'));
    }

    #[test]
    fn small_run_smoke_test() {
        let cli = Cli::try_parse_from([
            "bamg", "twogrid", "--n", "8", "--tvs", "6", "--tv-sweeps", "10", "--format", "csv",
        ])
        .unwrap();
        match cli.command {
            Command::Twogrid(args) => {
                let params = params_from(&args, ExperimentKind::TwoGrid).unwrap();
                let record = two_grid_experiment(&params).unwrap();
                assert!(!record.params.spec.scheme.to_string().is_empty());
                assert!(record.report.rho.unwrap() < 1.0);
                assert!(record.levels[1].n > 0);
            }
            _ => panic!("expected twogrid"),
        }
    }
}
