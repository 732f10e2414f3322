use std::io::{BufRead, Write};
use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ephemera_cli::bench::{self, CreationConfig, ServerBenchConfig};
use ephemera_cli::manage::{format_keys, update};
use ephemera_cli::view::{open_protected, read_input, unlock, FixedAnswer, PromptSolver};
use ephemera_cli::{
    publish, CaptchaSolver, CliError, HttpKeyApi, KeyApi, KeySelector, LocalKeyApi, LocalServer,
    PublishJob,
};
use ephemera_core::recompress::SiteProfile;
use ephemera_core::stego::{EmbedMode, Protection};
use ephemera_keyserver::api::Credentials;
use ephemera_keyserver::{ExpiryUpdate, KeyService, ServerConfig, SystemClock};

const DEFAULT_KEYSERVER: &str = "http://127.0.0.1:8750";

#[derive(Parser)]
#[command(name = "ephemera", version, about = "Publish images that expire")]
struct Cli {
    /// Keyserver base URL.
    #[arg(long, global = true, env = "EPHEMERA_KEYSERVER")]
    keyserver: Option<String>,
    /// Account name for publishing and key management.
    #[arg(long, global = true, env = "EPHEMERA_USER")]
    user: Option<String>,
    /// Account password; prompted for when absent.
    #[arg(long, global = true, env = "EPHEMERA_PASSWORD", hide_env_values = true)]
    password: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt images and hide them in upload-ready covers.
    Publish(PublishArgs),
    /// Recover the image hidden in a protected JPEG.
    View(ViewArgs),
    /// Change when a published key expires.
    Update(UpdateArgs),
    /// Inspect your published keys.
    Keys {
        #[command(subcommand)]
        command: KeysCommand,
    },
    /// Create an account or check credentials.
    Account {
        #[command(subcommand)]
        command: AccountCommand,
    },
    /// Measure publishing, viewing or keyserver throughput.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Two-bit luminance symbols; survives recompression.
    Bits,
    /// Comment segments; for sites that keep files untouched.
    Header,
}

#[derive(Args)]
struct PublishArgs {
    /// Expiration: RFC 3339, or +N followed by m, h or d. Omit to decide later.
    #[arg(long, value_parser = parse_expiry)]
    expires: Option<DateTime<Utc>>,
    #[arg(long, default_value = "")]
    description: String,
    #[arg(long, value_enum, default_value = "bits")]
    mode: Mode,
    /// Site profile: a builtin name or one defined in --profiles.
    #[arg(long, default_value = "facebook")]
    profile: String,
    /// TOML file with extra site profiles.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Ask viewers to solve a CAPTCHA before releasing the key.
    #[arg(long)]
    captcha: bool,
    #[arg(short, long, default_value = ".")]
    output_dir: PathBuf,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct ViewArgs {
    /// Protected JPEG: a path or an http(s) URL.
    input: String,
    /// Where to write the recovered image.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Answer for a CAPTCHA instead of prompting.
    #[arg(long)]
    captcha_answer: Option<String>,
}

#[derive(Args)]
struct UpdateArgs {
    /// Key id, or description[|created[|expires]].
    #[arg(long)]
    key: KeySelector,
    /// New expiration: RFC 3339, +N[m|h|d], or `now`.
    #[arg(long, value_parser = parse_update)]
    expires: ExpiryUpdate,
}

#[derive(Subcommand)]
enum KeysCommand {
    List,
}

#[derive(Subcommand)]
enum AccountCommand {
    Register,
    Login,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Creation,
    Extraction,
    Server,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 50)]
    max_images: usize,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value = "facebook")]
    profile: String,
    #[arg(long, default_value_t = 10_000)]
    sessions: usize,
    #[arg(long, default_value_t = 8)]
    concurrency: usize,
    #[arg(long, default_value_t = 10)]
    duration_secs: u64,
}

fn parse_expiry(s: &str) -> Result<DateTime<Utc>, String> {
    if let Some(rel) = s.strip_prefix('+') {
        let (num, unit) = rel.split_at(rel.len().saturating_sub(1));
        let n: i64 = num.parse().map_err(|_| format!("bad duration {s:?}"))?;
        let d = match unit {
            "m" => chrono::Duration::minutes(n),
            "h" => chrono::Duration::hours(n),
            "d" => chrono::Duration::days(n),
            _ => return Err(format!("unit of {s:?} must be m, h or d")),
        };
        return Ok(Utc::now() + d);
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("{s:?}: {e}"))
}

fn parse_update(s: &str) -> Result<ExpiryUpdate, String> {
    if s.eq_ignore_ascii_case("now") {
        return Ok(ExpiryUpdate::Now);
    }
    parse_expiry(s).map(ExpiryUpdate::At)
}

fn prompt(label: &str) -> Result<String, CliError> {
    eprint!("{label}: ");
    std::io::stderr().flush().ok();
    let mut line = String::new();
    std::io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| CliError::io("stdin", e))?;
    Ok(line.trim_end_matches(['\r', '\n']).to_owned())
}

impl Cli {
    fn keyserver_url(&self) -> String {
        self.keyserver
            .clone()
            .unwrap_or_else(|| DEFAULT_KEYSERVER.into())
    }

    fn credentials(&self) -> Result<Credentials, CliError> {
        let username = match &self.user {
            Some(u) => u.clone(),
            None => prompt("user")?,
        };
        let password = match &self.password {
            Some(p) => p.clone(),
            None => prompt("password")?,
        };
        Ok(Credentials { username, password })
    }

    fn login(&self, api: &dyn KeyApi) -> Result<String, CliError> {
        Ok(api.login(&self.credentials()?)?.token)
    }
}

fn default_view_output(input: &str) -> PathBuf {
    let name = input.rsplit('/').next().unwrap_or(input);
    let stem = Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let stem = stem.strip_suffix(".ephemera").unwrap_or(&stem).to_owned();
    PathBuf::from(format!("{stem}.plain.jpg"))
}

fn run_publish(cli: &Cli, args: &PublishArgs) -> Result<(), CliError> {
    let profile = SiteProfile::resolve(&args.profile, args.profiles.as_deref())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let url = cli.keyserver_url();
    let api = HttpKeyApi::new(&url)?;
    let token = cli.login(&api)?;
    let job = PublishJob {
        inputs: args.files.clone(),
        expires: args.expires,
        description: args.description.clone(),
        mode: match args.mode {
            Mode::Bits => EmbedMode::LuminanceBits,
            Mode::Header => EmbedMode::HeaderSegments,
        },
        profile,
        keyserver_url: url,
        captcha_required: args.captcha,
        output_dir: args.output_dir.clone(),
    };
    let report = publish(&job, &api, &token)?;
    for img in &report.images {
        println!(
            "{}  key {}  ({} -> {} bytes of image)",
            img.output.display(),
            hex::encode(img.key_id),
            img.source.display(),
            img.plaintext_len
        );
    }
    Ok(())
}

fn run_view(cli: &Cli, args: &ViewArgs) -> Result<(), CliError> {
    let bytes = read_input(&args.input)?;
    let opened = open_protected(&bytes)?;
    let url = cli
        .keyserver
        .clone()
        .unwrap_or_else(|| opened.envelope.keyserver_url.clone());
    let api = HttpKeyApi::new(&url)?;
    let mut solver: Box<dyn CaptchaSolver> = match &args.captcha_answer {
        Some(a) => Box::new(FixedAnswer(a.clone())),
        None => Box::new(PromptSolver),
    };
    let plain = unlock(&opened, &api, solver.as_mut())?;
    let out = args
        .output
        .clone()
        .unwrap_or_else(|| default_view_output(&args.input));
    std::fs::write(&out, &plain).map_err(|e| CliError::io(&out, e))?;
    let how = match opened.protection {
        Protection::BitEmbedded => format!(
            "luminance bits, {} symbols corrected",
            opened.corrected_symbols
        ),
        _ => "header segments".into(),
    };
    println!("{} ({how})", out.display());
    Ok(())
}

fn local_bench_service() -> Result<(LocalKeyApi, String), CliError> {
    let config = ServerConfig {
        account_per_minute: u32::MAX,
        account_range_per_minute: u32::MAX,
        getkey_per_minute: u32::MAX,
        getkey_range_per_minute: u32::MAX,
        pbkdf2_iterations: 1_000,
        ..ServerConfig::default()
    };
    let service = KeyService::new(&config, Arc::new(SystemClock))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let api = LocalKeyApi::new(Arc::new(service), IpAddr::V4(Ipv4Addr::LOCALHOST));
    let cred = Credentials {
        username: "bench".into(),
        password: "bench-password".into(),
    };
    api.register(&cred)?;
    let token = api.login(&cred)?.token;
    Ok((api, token))
}

fn run_bench(cli: &Cli, args: &BenchArgs) -> Result<(), CliError> {
    let profile =
        SiteProfile::builtin(&args.profile).map_err(|e| CliError::Usage(e.to_string()))?;
    match args.suite {
        Suite::Creation | Suite::Extraction => {
            let (local, local_token);
            let remote;
            let (api, token, url): (&dyn KeyApi, String, String) = match &cli.keyserver {
                Some(url) => {
                    remote = HttpKeyApi::new(url)?;
                    let t = cli.login(&remote)?;
                    (&remote, t, url.clone())
                }
                None => {
                    (local, local_token) = local_bench_service()?;
                    (&local, local_token, "local:".into())
                }
            };
            let cfg = CreationConfig {
                max_images: args.max_images,
                reps: args.reps,
                profile,
                keyserver_url: url.clone(),
            };
            let source = bench::bench_source(&cfg.profile, &url)?;
            if matches!(args.suite, Suite::Creation) {
                let report = bench::creation_suite(&cfg, api, &token, &source)?;
                print!("{}", report.table());
                println!(
                    "header faster at every count: {}",
                    report.header_always_faster()
                );
            } else {
                print!(
                    "{}",
                    bench::extraction_suite(&cfg, api, &token, &source)?.table()
                );
            }
        }
        Suite::Server => {
            let cfg = ServerBenchConfig {
                sessions: args.sessions,
                concurrency: args.concurrency,
                duration: Duration::from_secs(args.duration_secs),
                ..ServerBenchConfig::default()
            };
            let report = match &cli.keyserver {
                Some(url) => bench::server_suite(url, url, &cfg)?,
                None => {
                    let load = LocalServer::start(&ServerConfig {
                        getkey_per_minute: u32::MAX,
                        getkey_range_per_minute: u32::MAX,
                        account_per_minute: u32::MAX,
                        account_range_per_minute: u32::MAX,
                        pbkdf2_iterations: 1_000,
                        ..ServerConfig::default()
                    })?;
                    let limited = LocalServer::start(&ServerConfig {
                        pbkdf2_iterations: 1_000,
                        ..ServerConfig::default()
                    })?;
                    bench::server_suite(&load.url, &limited.url, &cfg)?
                }
            };
            print!("{}", report.table());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Publish(args) => run_publish(cli, args),
        Command::View(args) => run_view(cli, args),
        Command::Update(args) => {
            let api = HttpKeyApi::new(&cli.keyserver_url())?;
            let token = cli.login(&api)?;
            let (id, when) = update(&api, &token, &args.key, args.expires)?;
            println!("{}  expires {}", hex::encode(id), when.to_rfc3339());
            Ok(())
        }
        Command::Keys {
            command: KeysCommand::List,
        } => {
            let api = HttpKeyApi::new(&cli.keyserver_url())?;
            let token = cli.login(&api)?;
            print!("{}", format_keys(&api.list_keys(&token)?));
            Ok(())
        }
        Command::Account { command } => {
            let api = HttpKeyApi::new(&cli.keyserver_url())?;
            let cred = cli.credentials()?;
            match command {
                AccountCommand::Register => println!("account {}", api.register(&cred)?),
                AccountCommand::Login => {
                    let r = api.login(&cred)?;
                    println!(
                        "credentials ok; token valid until {}",
                        r.expires_at.to_rfc3339()
                    );
                }
            }
            Ok(())
        }
        Command::Bench(args) => run_bench(cli, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Expired(at)) => {
            eprintln!("{}", CliError::Expired(at));
            eprintln!("The publisher's chosen expiration date has passed; the image can no longer be viewed.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
