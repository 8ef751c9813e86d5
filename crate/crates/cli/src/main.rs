use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use histwhois::config::ServerConfig;
use histwhois::eval::{evaluate_disagreement, EvalQuery, Granularity, ReferenceTable};
use histwhois::ingest::FilterPolicy;
use histwhois::protocol::answer_query;
use histwhois::query::query_file;
use histwhois::server::{serve, EngineHandle};
use histwhois::{build_snapshot, BuildConfig, Day, OutputFormat, Snapshot};

#[derive(Parser)]
#[command(name = "histwhois", version, about = "Historic IP to AS / organization attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sealed snapshot from raw prefix-to-AS and AS2ORG files
    Build(BuildArgs),
    /// Serve a snapshot over the whois line protocol
    Serve(ServeArgs),
    /// Answer queries offline, one-off or from a file
    Query(QueryArgs),
    /// Measure attribution disagreement against a reference table
    Eval(EvalArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Directory with AS2ORG snapshots
    #[arg(long)]
    as2org: PathBuf,
    /// Directory with IPv4 pfx2as files
    #[arg(long)]
    pfx2as_v4: Option<PathBuf>,
    /// Directory with IPv6 pfx2as files
    #[arg(long)]
    pfx2as_v6: Option<PathBuf>,
    /// First pfx2as date to replay (YYYYMMDD)
    #[arg(long)]
    from: Option<String>,
    /// Last pfx2as date to replay (YYYYMMDD)
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = 8)]
    v4_min_len: u8,
    #[arg(long, default_value_t = 24)]
    v4_max_len: u8,
    #[arg(long, default_value_t = 18)]
    v6_min_len: u8,
    #[arg(long, default_value_t = 48)]
    v6_max_len: u8,
    /// Snapshot output path
    #[arg(long, short)]
    out: PathBuf,
    /// Build report path; writes `<path>` (TSV) and `<path>.json`
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<std::net::SocketAddr>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    contact: Option<String>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, short)]
    snapshot: PathBuf,
    /// File of `<target> [YYYYMMDD]` lines, `-` for stdin
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Use the verbose JSON schema
    #[arg(long)]
    verbose_format: bool,
    /// One-off query target
    target: Option<String>,
    /// One-off query date (YYYYMMDD)
    date: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, short)]
    snapshot: PathBuf,
    /// Reference table: `unit<TAB>asn[,asn...]`
    #[arg(long)]
    reference: PathBuf,
    /// Queries: `<target> <YYYYMM|YYYYMMDD>`
    #[arg(long)]
    queries: PathBuf,
    /// Output prefix; writes `<prefix>.tsv`, `<prefix>.tuples.tsv` and `<prefix>.json`
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24)]
    v4_unit: u8,
    #[arg(long, default_value_t = 48)]
    v6_unit: u8,
}

/// Exit code 1: bad input. Exit code 2: build failure.
enum Failure {
    Input(anyhow::Error),
    Build(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn parse_day(s: &Option<String>) -> Result<Option<Day>, Failure> {
    s.as_deref().map(Day::parse_compact).transpose().map_err(input)
}

fn load_snapshot(path: &Path) -> Result<Snapshot, Failure> {
    Snapshot::load(path)
        .with_context(|| format!("loading snapshot {}", path.display()))
        .map_err(Failure::Input)
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, Failure> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display())).map_err(Failure::Input)?;
    Ok(Box::new(BufReader::new(f)))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Input)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_build(args: BuildArgs) -> Outcome {
    let config = BuildConfig {
        pfx2as_v4: args.pfx2as_v4,
        pfx2as_v6: args.pfx2as_v6,
        as2org: args.as2org,
        from: parse_day(&args.from)?,
        to: parse_day(&args.to)?,
        policy: FilterPolicy {
            v4_min_len: args.v4_min_len,
            v4_max_len: args.v4_max_len,
            v6_min_len: args.v6_min_len,
            v6_max_len: args.v6_max_len,
            ..FilterPolicy::default()
        },
    };
    let (snapshot, report) = build_snapshot(&config).map_err(|e| Failure::Build(e.into()))?;
    let checksum = snapshot
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::Build)?;
    if let Some(path) = args.report {
        write_file(&path, &report.to_tsv())?;
        write_file(&with_suffix(&path, ".json"), &serde_json::to_string_pretty(&report).map_err(input)?)?;
    }
    if report.failed_files > 0 {
        warn!("{} input files could not be read", report.failed_files);
    }
    println!(
        "{}\t{}..{}\tsha256:{}",
        args.out.display(),
        snapshot.meta.first_day,
        snapshot.meta.last_day,
        checksum
    );
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Outcome {
    let mut config = match &args.config {
        Some(path) => ServerConfig::from_file(path).map_err(input)?,
        None => ServerConfig::default(),
    };
    config.apply_env(|k| std::env::var(k).ok()).map_err(input)?;
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    if let Some(snapshot) = args.snapshot {
        config.snapshot = Some(snapshot);
    }
    if let Some(contact) = args.contact {
        config.contact = contact;
    }
    let snapshot_path = config
        .snapshot
        .clone()
        .ok_or_else(|| input(anyhow!("no snapshot configured (--snapshot or HISTWHOIS_SNAPSHOT)")))?;
    let config = Arc::new(config);
    let engines = Arc::new(EngineHandle::loading());

    let rt = tokio::runtime::Runtime::new().map_err(input)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .with_context(|| format!("binding {}", config.listen))
            .map_err(Failure::Input)?;
        spawn_loader(Arc::clone(&engines), snapshot_path.clone());
        spawn_reloader(Arc::clone(&engines), snapshot_path);
        serve(listener, engines, config).await.map_err(input)
    })
}

fn spawn_loader(engines: Arc<EngineHandle>, path: PathBuf) {
    tokio::task::spawn_blocking(move || match Snapshot::load(&path) {
        Ok(snapshot) => {
            engines.swap(snapshot.engine);
            info!("snapshot {} loaded", path.display());
        }
        Err(e) => error!("loading {}: {e}", path.display()),
    });
}

#[cfg(unix)]
fn spawn_reloader(engines: Arc<EngineHandle>, path: PathBuf) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
        while hup.recv().await.is_some() {
            info!("SIGHUP: reloading {}", path.display());
            spawn_loader(Arc::clone(&engines), path.clone());
        }
    });
}

#[cfg(not(unix))]
fn spawn_reloader(_: Arc<EngineHandle>, _: PathBuf) {}

fn cmd_query(args: QueryArgs) -> Outcome {
    let snapshot = load_snapshot(&args.snapshot)?;
    let engine = &snapshot.engine;
    let format = if args.verbose_format {
        OutputFormat::JsonVerbose
    } else {
        OutputFormat::JsonShort
    };
    if let Some(target) = args.target {
        let line = match args.date {
            Some(date) => format!("{target} {date}"),
            None => target,
        };
        let json = answer_query(engine, &line, format, true).map_err(input)?;
        println!("{json}");
        return Ok(());
    }
    let reader = open_input(args.input.as_deref().unwrap_or(Path::new("-")))?;
    let writer: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display())).map_err(Failure::Input)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let stats = query_file(engine, reader, writer, format).map_err(input)?;
    info!(
        "{} queries, {} errors, {:.0} lookups/s",
        stats.queries,
        stats.errors,
        stats.per_second()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Outcome {
    let snapshot = load_snapshot(&args.snapshot)?;
    let granularity = Granularity {
        v4: args.v4_unit,
        v6: args.v6_unit,
    };
    let (reference, bad_refs) = ReferenceTable::parse(open_input(&args.reference)?, granularity).map_err(input)?;
    if bad_refs > 0 {
        warn!("{bad_refs} malformed reference lines skipped");
    }
    let mut queries = Vec::new();
    for (n, line) in open_input(&args.queries)?.lines().enumerate() {
        let line = line.map_err(input)?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match EvalQuery::parse(&line) {
            Ok(q) => queries.push(q),
            Err(e) => warn!("queries line {}: {e}", n + 1),
        }
    }
    let report = evaluate_disagreement(&snapshot.engine, &reference, &queries, granularity);
    write_file(&with_suffix(&args.out, ".tsv"), &report.to_tsv())?;
    write_file(&with_suffix(&args.out, ".tuples.tsv"), &report.tuples_tsv())?;
    write_file(&with_suffix(&args.out, ".json"), &serde_json::to_string_pretty(&report).map_err(input)?)?;
    print!("{}", report.to_tsv());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; --help and --version are not
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Query(a) => cmd_query(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Build(e)) => {
            eprintln!("build error: {e:#}");
            ExitCode::from(2)
        }
    }
}
