use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use intermap_core::metrics::BatchError;
use intermap_core::{
    generate_fixture, report_all, FixtureError, FixtureSpec, Layer, Palette, RegimePlan,
    RenderSpec, Thresholds, UserOrdering,
};
use thiserror::Error;

use crate::api::{self, ApiError};
use crate::load::{load_snapshot, LoadError};
use crate::service::{self, ServiceConfig, ServiceError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "intermap",
    version,
    about = "Interaction-matrix analytics for coded forum discussions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus CSV and account for every line.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Print the ingest report as JSON.
        #[arg(long)]
        report: bool,
        /// Write accepted records back out in canonical order.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus with exact totals.
    GenerateFixture {
        #[arg(long)]
        forums: usize,
        #[arg(long)]
        users: usize,
        #[arg(long)]
        interactions: usize,
        /// leader_dominated, dispersed, reciprocal, mixed, or a comma list
        /// with one regime per forum.
        #[arg(long, default_value = "mixed")]
        regime: RegimePlan,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Destination CSV; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List forums as JSON.
    List {
        #[arg(long)]
        data: PathBuf,
    },
    /// Print one forum's matrix as JSON.
    Matrix {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        forum: String,
        #[arg(long, default_value = "first_appearance")]
        order: UserOrdering,
    },
    /// Print one forum's pattern report as JSON.
    Metrics {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        forum: String,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Print a pattern report per forum, one JSON object per line.
    MetricsAll {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Render one forum's matrix as SVG.
    Render {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        forum: String,
        #[arg(long, default_value = "frequency")]
        layer: Layer,
        /// Destination SVG; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "first_appearance")]
        order: UserOrdering,
        #[command(flatten)]
        style: StyleArgs,
    },
    /// Serve the corpus over HTTP.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        style: StyleArgs,
    },
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Minimum partner breadth for a scan line, in (0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    alpha: f64,
    /// Top-2 share at which a forum counts as leader-dominated, in [0, 1].
    #[arg(long, default_value_t = 0.75, value_parser = closed_unit)]
    tau_share: f64,
    /// Forums smaller than this are indeterminate.
    #[arg(long, default_value_t = 5)]
    min_users: usize,
    /// Forums smaller than this report no scan lines.
    #[arg(long, default_value_t = 4)]
    scan_min_users: usize,
}

impl From<&ThresholdArgs> for Thresholds {
    fn from(a: &ThresholdArgs) -> Self {
        Self {
            alpha: a.alpha,
            tau_share: a.tau_share,
            min_users: a.min_users,
            scan_min_users: a.scan_min_users,
        }
    }
}

#[derive(Debug, Args)]
struct StyleArgs {
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(u32).range(4..))]
    cell_px: u32,
    #[arg(long, default_value = "blues")]
    palette: Palette,
    #[arg(long)]
    no_labels: bool,
    #[arg(long)]
    no_legend: bool,
    /// Largest forum that will be drawn.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(2..))]
    max_users: u64,
}

impl StyleArgs {
    fn spec(&self, layer: Layer) -> RenderSpec {
        RenderSpec {
            layer,
            cell_px: self.cell_px,
            palette: self.palette,
            show_labels: !self.no_labels,
            show_legend: !self.no_legend,
            max_render_users: self.max_users as usize,
        }
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn closed_unit(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot start runtime: {0}")]
    Runtime(io::Error),
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let _ = write!(err, "{text}");
                    if !text.contains("Usage:") {
                        let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                    }
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(|source| CliError::Write {
            path: p.to_owned(),
            source,
        }),
        None => out.write_all(body).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<intermap_core::DatasetSnapshot, CliError> {
    let (snapshot, report) = load_snapshot(path)?;
    if !report.rejected.is_empty() {
        let _ = writeln!(
            err,
            "warning: {} line(s) of {} rejected; see `intermap ingest --report`",
            report.rejected.len(),
            path.display()
        );
    }
    Ok(snapshot)
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            input,
            report: want_report,
            output,
        } => {
            let (snapshot, report) = load_snapshot(&input)?;
            if want_report {
                let body = format!(
                    "{}\n",
                    serde_json::to_string(&report).expect("report serializes")
                );
                emit(out, None, body.as_bytes())?;
            } else {
                for r in &report.rejected {
                    let _ = writeln!(err, "line {}: {} ({})", r.line, r.error, r.error.code());
                }
                let _ = writeln!(
                    err,
                    "accepted {}, rejected {}, forums {}, users {}",
                    report.accepted,
                    report.rejected.len(),
                    report.forums_seen,
                    report.users_seen
                );
            }
            if let Some(path) = output {
                emit(out, Some(&path), snapshot.to_csv_string().as_bytes())?;
            }
        }
        Command::GenerateFixture {
            forums,
            users,
            interactions,
            regime,
            seed,
            output,
        } => {
            let snapshot = generate_fixture(&FixtureSpec {
                forum_count: forums,
                user_count: users,
                interaction_count: interactions,
                regimes: regime,
                seed,
            })?;
            emit(out, output.as_deref(), snapshot.to_csv_string().as_bytes())?;
        }
        Command::List { data } => {
            let snapshot = load(&data, err)?;
            emit(out, None, api::forums_json(&snapshot).as_bytes())?;
        }
        Command::Matrix { data, forum, order } => {
            let snapshot = load(&data, err)?;
            emit(
                out,
                None,
                api::matrix_json(&snapshot, &forum, order)?.as_bytes(),
            )?;
        }
        Command::Metrics {
            data,
            forum,
            thresholds,
        } => {
            let snapshot = load(&data, err)?;
            let body = api::metrics_json(&snapshot, &forum, &(&thresholds).into())?;
            emit(out, None, body.as_bytes())?;
        }
        Command::MetricsAll { data, thresholds } => {
            let snapshot = load(&data, err)?;
            let mut body = String::new();
            for report in report_all(&snapshot, &(&thresholds).into())? {
                body.push_str(&report.to_json());
                body.push('\n');
            }
            emit(out, None, body.as_bytes())?;
        }
        Command::Render {
            data,
            forum,
            layer,
            output,
            order,
            style,
        } => {
            let snapshot = load(&data, err)?;
            let svg = api::render_svg(&snapshot, &forum, order, &style.spec(layer))?;
            emit(out, output.as_deref(), svg.as_bytes())?;
        }
        Command::Serve {
            data,
            port,
            bind,
            thresholds,
            style,
        } => {
            let _ = tracing_subscriber::fmt()
                .with_writer(io::stderr)
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .try_init();
            let config = ServiceConfig {
                data_path: data,
                port,
                bind_address: bind,
                thresholds: (&thresholds).into(),
                render: style.spec(Layer::default()),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Runtime)?;
            runtime.block_on(service::serve(config))?;
        }
    }
    Ok(())
}
