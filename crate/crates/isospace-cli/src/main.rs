//! The `isospace` binary: list the catalogued games, resolve constrained
//! spaces and solve the games on them, render cross-space comparison
//! tables, sample correlation curves, report information measures, and
//! spot-check analytic payoffs by simulation.
//!
//! Output is deterministic: identical invocations produce identical bytes
//! (simulation included — the seed is part of the invocation), so runs
//! diff cleanly.  `ISOSPACE_THREADS` caps the worker pool; table cells may
//! be solved in parallel but assembly order is fixed.
//!
//! Exit codes: 0 success, 2 usage (unknown game, family, or spec item),
//! 3 computation failure, 4 verification failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isospace::catalog::{self, GameParams};
use isospace::gamemodel::{GameDefinition, NodeTag, SpaceSpec};
use isospace::infomeasures;
use isospace::poly::format_rat_human;
use isospace::probspace::ResolvedSpace;
use isospace::solver::{self, ComparisonTable};
use isospace::{parse_rat, rat, rat_to_f64, Error, Rat};

#[derive(Parser)]
#[command(
    name = "isospace",
    version,
    about = "Exact analysis of finite games on isomorphically constrained probability spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the catalogued games with their space families and tables.
    List(ListArgs),
    /// Resolve a constrained space and solve the game on it.
    Analyze(AnalyzeArgs),
    /// Cross table of equilibria: one space family against another.
    Table(TableArgs),
    /// Sample a one-parameter curve of constrained optima as CSV.
    Curve(CurveArgs),
    /// Information measures of a constrained space at a point.
    Measure(MeasureArgs),
    /// Simulate the equilibrium and compare sampled to analytic payoffs.
    Verify(VerifyArgs),
    /// Write a game definition in the JSON game format.
    Export(ExportArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Catalogued game name (see `isospace list`).
    game: Option<String>,
    /// Stage count for `ipd`, face count for `dice`.
    #[arg(short = 'N', long = "stages", value_name = "N")]
    n: Option<u32>,
    /// Pot size for `ultimatum`.
    #[arg(short = 'M', long = "pot", value_name = "M")]
    m: Option<u32>,
    /// Load the game from a JSON game file instead of the catalogue.
    #[arg(long, value_name = "PATH", conflicts_with = "game")]
    game_file: Option<PathBuf>,
}

impl GameArgs {
    fn load(&self) -> Result<GameDefinition, CliError> {
        match (&self.game, &self.game_file) {
            (Some(name), None) => {
                let params = GameParams { n: self.n, m: self.m };
                Ok(catalog::get_game(name, &params)?)
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
            }
            _ => Err(CliError::Usage(
                "name a catalogued game or pass --game-file".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Args)]
struct ListArgs {
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Comma-separated constraints: `param=value`, `move=copy:<m>`,
    /// `move=anti:<m>`, `move=const:<v>`, `rho=<r>`, or presets
    /// (`identity`, `X=MKV`, `Y=ALLD`, ...).
    #[arg(long, default_value = "B")]
    spec: String,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Registered table name (see `isospace list`); picks both axes and
    /// the orientation.
    #[arg(long)]
    family: Option<String>,
    /// Row space family.  Explicit axes assume the rows vary the first
    /// player; registered tables know their own orientation.
    #[arg(long, requires = "cols")]
    rows: Option<String>,
    /// Column space family.
    #[arg(long, requires = "rows")]
    cols: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    /// Payoff maximum over the correlation surface, per rho.
    RhoSweep,
    /// Entropy maximum over the correlation surface, per rho.
    EntropyMax,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(value_enum)]
    kind: CurveKind,
    /// Game whose payoff is swept (`rho-sweep` only; needs a designated
    /// correlation pair).
    #[arg(long, default_value = "dtree")]
    game: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 9)]
    steps: usize,
    /// Search grid density per axis.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Space constraints (same mini-language as `analyze`).
    #[arg(long, default_value = "B")]
    spec: String,
    /// Point to evaluate at, as `name=value,...` over the free parameters;
    /// unlisted parameters default to 1/2.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Space constraints (same mini-language as `analyze`).
    #[arg(long, default_value = "B")]
    spec: String,
    /// Number of simulated plays.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the report to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Run(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        // Bad names and bad constraint values are the caller's input;
        // everything else is a failure of the computation itself.
        match e {
            Error::UnknownGame(_)
            | Error::UnknownFamily(_)
            | Error::BadParams(_)
            | Error::UnknownParam(_)
            | Error::UnknownMove(_)
            | Error::OutOfRangeParam(_)
            | Error::UnsupportedConstraint(_)
            | Error::ContradictoryConstraints(_)
            | Error::InvalidInput(_) => CliError::Usage(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn init_threads() {
    if let Ok(raw) = std::env::var("ISOSPACE_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring ISOSPACE_THREADS={raw:?}"),
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::List(args) => cmd_list(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Table(args) => cmd_table(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Measure(args) => cmd_measure(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Export(args) => cmd_export(args),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Run(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- spec DSL

/// Build a [`SpaceSpec`] from the comma-separated constraint language.
///
/// Items: `param=value` fixes a behavioural parameter to an exact rational;
/// `move=copy:<m>` / `move=anti:<m>` / `move=const:<v>` tie a whole move to
/// another move (or a constant) at every history; `rho=<r>` fixes the
/// correlation of the game's designated move pair; `X=<preset>` /
/// `Y=<preset>` apply a named per-player space, and side-free names
/// (`identity`, `B`, `IND`, `free`) leave the space unconstrained.
fn parse_spec(game: &GameDefinition, text: &str) -> Result<SpaceSpec, CliError> {
    let mut spec = SpaceSpec::free(text);
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((key, value)) = item.split_once('=') else {
            spec = merge_keep_label(spec, preset_for(game, None, item)?);
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "X" || key == "Y" {
            let player = usize::from(key == "Y");
            spec = merge_keep_label(spec, preset_for(game, Some(player), value)?);
        } else if key == "rho" {
            let (x, y) = catalog::correlation_moves(game).ok_or_else(|| {
                CliError::Usage(format!(
                    "{} has no designated correlation pair",
                    game.name
                ))
            })?;
            let rho: f64 = value
                .parse()
                .map_err(|_| CliError::Usage(format!("bad correlation {value:?}")))?;
            spec = spec.with_correlation(x, y, rho);
        } else if let Some(src) = value.strip_prefix("copy:") {
            spec = spec.with_uniform(key, NodeTag::Copy(src.trim().to_string()));
        } else if let Some(src) = value.strip_prefix("anti:") {
            spec = spec.with_uniform(key, NodeTag::Anti(src.trim().to_string()));
        } else if let Some(v) = value.strip_prefix("const:") {
            let v: u8 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad constant in {item:?}")))?;
            spec = spec.with_uniform(key, NodeTag::Value(v));
        } else {
            let v = parse_rat(value)
                .map_err(|_| CliError::Usage(format!("cannot read {item:?} as `param=value`")))?;
            spec = spec.with_fix(key, v);
        }
    }
    Ok(spec)
}

fn merge_keep_label(base: SpaceSpec, add: SpaceSpec) -> SpaceSpec {
    let label = base.label.clone();
    let mut merged = base.merge(&add);
    merged.label = label;
    merged
}

fn preset_for(
    game: &GameDefinition,
    side: Option<usize>,
    name: &str,
) -> Result<SpaceSpec, CliError> {
    match side {
        Some(player) => Ok(catalog::preset_spec(game, player, name)?),
        None => match name {
            "B" | "IND" | "identity" | "free" => Ok(SpaceSpec::free(name)),
            "MKV" | "TFT" | "ALLD" if game.players.len() > 1 => Err(CliError::Usage(format!(
                "preset {name} binds one player's moves: write X={name} or Y={name}"
            ))),
            _ if game.players.len() == 1 => Ok(catalog::preset_spec(game, 0, name)?),
            _ => Err(CliError::Usage(format!(
                "unknown spec item {name:?}: use param=value, move=copy:<m>|anti:<m>|const:<v>, \
                 rho=<r>, or a preset"
            ))),
        },
    }
}

// -------------------------------------------------------------------- list

fn cmd_list(args: &ListArgs) -> Result<(), CliError> {
    let entries = catalog::list();
    let text = match args.format {
        Format::Md => {
            let mut out = String::new();
            for e in entries {
                out.push_str(&format!("{:<14}{}\n", e.name, e.summary));
                out.push_str(&format!(
                    "{:<14}players {} | families {}",
                    "",
                    e.players.join(", "),
                    e.families.join(", ")
                ));
                if !e.tables.is_empty() {
                    out.push_str(&format!(" | tables {}", e.tables.join(", ")));
                }
                if !e.params.is_empty() {
                    out.push_str(&format!(" | {}", e.params));
                }
                out.push('\n');
            }
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["game", "players", "families", "tables", "params"])
                .expect("csv header");
            for e in entries {
                w.write_record([
                    e.name,
                    &e.players.join(" "),
                    &e.families.join(" "),
                    &e.tables.join(" "),
                    e.params,
                ])
                .expect("csv record");
            }
            String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "name": e.name,
                        "summary": e.summary,
                        "players": e.players,
                        "params": e.params,
                        "families": e.families,
                        "tables": e.tables,
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&rows).expect("json"))
        }
    };
    emit(&text, args.output.as_deref())
}

// ----------------------------------------------------------------- analyze

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let game = args.game.load()?;
    let spec = parse_spec(&game, &args.spec)?;
    let rs = game.resolve_spec(&solver::rewrite_correlation(&game, &spec)?)?;
    let pays = game.expected_payoff_resolved(&rs);
    let eqs = solver::solve_all(&game, &spec)?;
    let namer = rs.namer();
    let text = match args.format {
        Format::Md => {
            let mut out = String::new();
            out.push_str(&format!("# {} on `{}`\n\n", game.name, args.spec));
            out.push_str(&rs.describe());
            out.push_str("\nexpected payoffs\n");
            for (player, poly) in game.players.iter().zip(&pays) {
                out.push_str(&format!("  {player}: {}\n", poly.display_with(&namer)));
            }
            out.push_str(&format!("\nequilibria ({})\n", eqs.len()));
            for (i, eq) in eqs.iter().enumerate() {
                out.push_str(&format!("  {}. {eq}\n", i + 1));
            }
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["spec".to_string(), "kind".to_string()];
            header.extend(game.players.iter().map(|p| format!("payoff{p}")));
            header.push("point".to_string());
            w.write_record(&header).expect("csv header");
            for eq in &eqs {
                let mut rec = vec![args.spec.clone(), eq.kind.to_string()];
                rec.extend(eq.payoffs.iter().map(format_rat_human));
                let pt: Vec<String> = eq
                    .point
                    .iter()
                    .map(|(n, v)| format!("{n}={}", format_rat_human(v)))
                    .collect();
                rec.push(pt.join(" "));
                w.write_record(&rec).expect("csv record");
            }
            String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
        }
        Format::Json => {
            let payoffs: Vec<serde_json::Value> = game
                .players
                .iter()
                .zip(&pays)
                .map(|(p, poly)| {
                    serde_json::json!({"player": p, "polynomial": poly.display_with(&namer)})
                })
                .collect();
            let value = serde_json::json!({
                "game": game.name,
                "players": game.players,
                "spec": args.spec,
                "dimension": rs.n_free(),
                "parameters": rs.free_names(),
                "payoffs": payoffs,
                "equilibria": eqs,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("json"))
        }
    };
    emit(&text, args.output.as_deref())
}

// ------------------------------------------------------------------- table

fn cmd_table(args: &TableArgs) -> Result<(), CliError> {
    let game = args.game.load()?;
    let (rows, cols, row_player) = table_axes(&game, args)?;
    let table = solver::comparison_table(&game, &rows, &cols)?;
    // Meta-stability compares payoffs against row and column deviations,
    // reading rows as the first player's choice; tables laid out with the
    // second player on the rows are checked transposed.
    let meta: Vec<(usize, usize)> = if row_player == 1 {
        solver::meta_equilibria(&transpose(&table))
            .into_iter()
            .map(|(i, j)| (j, i))
            .collect()
    } else {
        solver::meta_equilibria(&table)
    };
    let text = match args.format {
        Format::Md => {
            let mut out = format!("# {} : {rows} x {cols}\n\n", game.name);
            out.push_str(&table.to_markdown());
            out.push_str("\nmeta-stable cells\n");
            if meta.is_empty() {
                out.push_str("  (none)\n");
            }
            for &(i, j) in &meta {
                let pays: Vec<String> = table.cells[i][j]
                    .iter()
                    .map(|eq| {
                        let ps: Vec<String> = eq.payoffs.iter().map(format_rat_human).collect();
                        format!("({})", ps.join(", "))
                    })
                    .collect();
                out.push_str(&format!(
                    "  {} x {}: {}\n",
                    table.rows[i].label,
                    table.cols[j].label,
                    pays.join("; ")
                ));
            }
            out
        }
        Format::Csv => table.to_csv(),
        Format::Json => {
            let value = serde_json::json!({
                "table": table.to_json(),
                "meta_stable": meta,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("json"))
        }
    };
    emit(&text, args.output.as_deref())
}

fn table_axes(game: &GameDefinition, args: &TableArgs) -> Result<(String, String, usize), CliError> {
    if let (Some(rows), Some(cols)) = (&args.rows, &args.cols) {
        return Ok((rows.clone(), cols.clone(), 0));
    }
    let name = args.family.as_deref().ok_or_else(|| {
        CliError::Usage("pick a registered table with --family, or give --rows and --cols".into())
    })?;
    let defs = catalog::reference_tables(game)?;
    let def = defs.iter().find(|t| t.name == name).ok_or_else(|| {
        let known: Vec<&str> = defs.iter().map(|t| t.name).collect();
        CliError::Usage(if known.is_empty() {
            format!("{} has no registered tables", game.name)
        } else {
            format!(
                "{} has no table {name:?} (registered: {})",
                game.name,
                known.join(", ")
            )
        })
    })?;
    Ok((def.rows.to_string(), def.cols.to_string(), def.row_player))
}

fn transpose(t: &ComparisonTable) -> ComparisonTable {
    ComparisonTable {
        game: t.game.clone(),
        players: t.players.clone(),
        rows: t.cols.clone(),
        cols: t.rows.clone(),
        cells: (0..t.cols.len())
            .map(|j| (0..t.rows.len()).map(|i| t.cells[i][j].clone()).collect())
            .collect(),
    }
}

// ------------------------------------------------------------------- curve

fn cmd_curve(args: &CurveArgs) -> Result<(), CliError> {
    let steps = args.steps.max(1);
    let rhos: Vec<f64> = if steps == 1 {
        vec![args.from]
    } else {
        (0..steps)
            .map(|i| args.from + (args.to - args.from) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut out = String::new();
    match args.kind {
        CurveKind::RhoSweep => {
            let game = catalog::get_game(&args.game, &GameParams::default())?;
            if catalog::correlation_moves(&game).is_none() {
                return Err(CliError::Usage(format!(
                    "{} has no designated correlation pair to sweep",
                    game.name
                )));
            }
            let payoff = game
                .expected_payoff(&SpaceSpec::free("B"))?
                .into_iter()
                .next()
                .expect("games have at least one player");
            out.push_str("rho,p,q,r,value\n");
            for rho in rhos {
                let ([p, q, r], value) = solver::correlated_payoff_maximum(&payoff, rho, args.grid)?;
                out.push_str(&format!(
                    "{rho:.6},{p:.6},{q:.6},{r:.6},{value:.6}\n"
                ));
            }
        }
        CurveKind::EntropyMax => {
            out.push_str("rho,p,q,r,entropy\n");
            for rho in rhos {
                let ([p, q, r], h) = solver::entropy_max_under_rho_argmax(rho);
                out.push_str(&format!("{rho:.6},{p:.6},{q:.6},{r:.6},{h:.6}\n"));
            }
        }
    }
    emit(&out, args.output.as_deref())
}

// ----------------------------------------------------------------- measure

fn cmd_measure(args: &MeasureArgs) -> Result<(), CliError> {
    let game = args.game.load()?;
    let spec = parse_spec(&game, &args.spec)?;
    let rs = game.resolve_spec(&solver::rewrite_correlation(&game, &spec)?)?;
    let point = measure_point(&rs, args.at.as_deref())?;
    let dist = rs.joint_distribution(&point)?;
    let probs: Vec<f64> = dist.iter().map(|(_, p)| rat_to_f64(p)).collect();
    let entropy = infomeasures::entropy(&probs)?;
    let paired = dist.first().is_some_and(|(o, _)| o.len() >= 2);
    let mi = if paired {
        Some(infomeasures::mutual_information(&dist, 0, 1)?)
    } else {
        None
    };
    let corr = if paired {
        infomeasures::correlation(&dist, 0, 1).ok()
    } else {
        None
    };
    let fisher = infomeasures::fisher_information(&rs, &point);

    let names = rs.free_names();
    let point_items: Vec<String> = names
        .iter()
        .zip(&point)
        .map(|(n, v)| format!("{n}={}", format_rat_human(v)))
        .collect();
    let text = match args.format {
        Format::Md => {
            let mut out = String::new();
            out.push_str(&format!("# measure {} on `{}`\n\n", game.name, args.spec));
            out.push_str(&format!("dimension: {}\n", rs.n_free()));
            out.push_str(&format!("point: {}\n\n", point_items.join(", ")));
            out.push_str("joint observable distribution\n");
            for (outcome, p) in &dist {
                out.push_str(&format!(
                    "  ({}): {}\n",
                    outcome
                        .iter()
                        .map(u8::to_string)
                        .collect::<Vec<_>>()
                        .join(", "),
                    format_rat_human(p)
                ));
            }
            out.push_str(&format!("\nentropy: {entropy:.6}\n"));
            if let Some(mi) = mi {
                out.push_str(&format!("mutual information (first pair): {mi:.6}\n"));
            }
            if let Some(c) = corr {
                out.push_str(&format!("correlation (first pair): {c:.6}\n"));
            }
            match &fisher {
                Ok(fm) if fm.dim > 0 => {
                    out.push_str("\nfisher information\n");
                    for i in 0..fm.dim {
                        let row: Vec<String> =
                            (0..fm.dim).map(|j| format_rat_human(fm.get(i, j))).collect();
                        out.push_str(&format!("  [{}]\n", row.join(", ")));
                    }
                }
                Ok(_) => {}
                Err(e) => out.push_str(&format!("\nfisher information: unavailable ({e})\n")),
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("key,value\n");
            out.push_str(&format!("dimension,{}\n", rs.n_free()));
            for (n, v) in names.iter().zip(&point) {
                out.push_str(&format!("point.{n},{}\n", format_rat_human(v)));
            }
            out.push_str(&format!("entropy,{entropy:.6}\n"));
            if let Some(mi) = mi {
                out.push_str(&format!("mutual_information,{mi:.6}\n"));
            }
            if let Some(c) = corr {
                out.push_str(&format!("correlation,{c:.6}\n"));
            }
            if let Ok(fm) = &fisher {
                for i in 0..fm.dim {
                    for j in 0..fm.dim {
                        out.push_str(&format!(
                            "fisher.{i}.{j},{}\n",
                            format_rat_human(fm.get(i, j))
                        ));
                    }
                }
            }
            out
        }
        Format::Json => {
            let dist_json: Vec<serde_json::Value> = dist
                .iter()
                .map(|(o, p)| serde_json::json!({"outcome": o, "probability": format_rat_human(p)}))
                .collect();
            let fisher_json = match &fisher {
                Ok(fm) => serde_json::json!(fm.to_f64()),
                Err(_) => serde_json::Value::Null,
            };
            let value = serde_json::json!({
                "game": game.name,
                "spec": args.spec,
                "dimension": rs.n_free(),
                "point": names.iter().zip(&point)
                    .map(|(n, v)| serde_json::json!([n, format_rat_human(v)]))
                    .collect::<Vec<_>>(),
                "distribution": dist_json,
                "entropy": entropy,
                "mutual_information": mi,
                "correlation": corr,
                "fisher": fisher_json,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("json"))
        }
    };
    emit(&text, args.output.as_deref())
}

fn measure_point(rs: &ResolvedSpace, at: Option<&str>) -> Result<Vec<Rat>, CliError> {
    let names = rs.free_names();
    let mut point: Vec<Rat> = vec![rat(1, 2); names.len()];
    if let Some(text) = at {
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--at items are name=value, got {item:?}"))
            })?;
            let idx = names.iter().position(|n| *n == name.trim()).ok_or_else(|| {
                CliError::Usage(format!(
                    "{:?} is not a free parameter here (free: {})",
                    name.trim(),
                    names.join(", ")
                ))
            })?;
            point[idx] = parse_rat(value.trim())?;
        }
    }
    rs.check_point(&point)
        .map_err(|e| CliError::Usage(format!("point outside the space: {e}")))?;
    Ok(point)
}

// ------------------------------------------------------------------ verify

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let game = args.game.load()?;
    let spec = parse_spec(&game, &args.spec)?;
    let eq = solver::constrained_equilibrium(&game, &spec)?;
    let point: Vec<Rat> = eq.point.iter().map(|(_, v)| v.clone()).collect();
    let stats = solver::monte_carlo_verify(&game, &spec, &point, args.samples, args.seed)?;

    let mut out = String::new();
    out.push_str(&format!("# verify {} on `{}`\n\n", game.name, args.spec));
    out.push_str(&format!("equilibrium: {eq}\n"));
    out.push_str(&format!("samples: {} (seed {})\n\n", args.samples, args.seed));
    let mut worst = 0.0f64;
    for ((player, analytic), (mean, stderr)) in
        game.players.iter().zip(&eq.payoffs).zip(&stats)
    {
        let exact = rat_to_f64(analytic);
        let z = z_score(*mean, *stderr, exact);
        worst = worst.max(z);
        out.push_str(&format!(
            "{player}: analytic {}, sampled {mean:.6} +/- {stderr:.6}, z = {z:.2}\n",
            format_rat_human(analytic)
        ));
    }
    emit(&out, args.output.as_deref())?;
    if worst > 5.0 {
        return Err(CliError::Verification(format!(
            "sampled payoffs disagree with analytic values (worst z = {worst:.2})"
        )));
    }
    Ok(())
}

fn z_score(mean: f64, stderr: f64, exact: f64) -> f64 {
    if stderr > 0.0 {
        (mean - exact).abs() / stderr
    } else if (mean - exact).abs() < 1e-9 {
        0.0
    } else {
        f64::INFINITY
    }
}

// ------------------------------------------------------------------ export

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let game = args.game.load()?;
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&game).map_err(|e| CliError::Run(e.to_string()))?
    );
    emit(&text, args.output.as_deref())
}

