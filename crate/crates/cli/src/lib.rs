//! Library half of the `ebpred` command-line tool.
//!
//! [`run`] takes an argument vector, so the whole tool can be driven
//! in-process from tests.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

pub use cli::Cli;
pub use error::CliError;

use config::{
    effective_settings, file_hash, parse_config, to_tokens, verify_inputs, ConfigFile, Manifest,
};

/// Position of `--config` among the arguments after the subcommand.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_owned());
        }
    }
    None
}

/// Splice a config file's values in front of the user's own flags.
fn expand(argv: Vec<String>) -> Result<(Vec<String>, Option<ConfigFile>), CliError> {
    if argv.len() < 2 || argv[1].starts_with('-') {
        return Ok((argv, None));
    }
    let Some(path) = config_path(&argv[2..]) else {
        return Ok((argv, None));
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&argv[1]) else {
        return Ok((argv, None));
    };
    let cfg = parse_config(&io::read_text(path.as_ref())?, &path)?;
    let tokens = to_tokens(&cfg, sub, &path)?;
    let mut out = Vec::with_capacity(argv.len() + tokens.len());
    out.extend_from_slice(&argv[..2]);
    out.extend(tokens);
    out.extend_from_slice(&argv[2..]);
    Ok((out, Some(cfg)))
}

fn with_threads<F>(threads: Option<usize>, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(f),
    }
}

/// Parse `argv` (program name first) and run the chosen subcommand.
pub fn run<I, S>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let (argv, cfg) = expand(argv)?;
    let cmd = Cli::command();
    let matches = match cmd.clone().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::Usage(
                first.trim_start_matches("error: ").to_owned(),
            ));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = cmd.find_subcommand(name).expect("parsed subcommand exists");

    let settings = effective_settings(sub, sub_matches);
    if let Some(cfg) = &cfg {
        verify_inputs(cfg, &settings)?;
    }
    let inputs = cli
        .command
        .inputs()
        .into_iter()
        .map(|(k, p)| Ok((k.to_owned(), file_hash(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = Manifest {
        command: name.to_owned(),
        settings,
        inputs,
    };
    with_threads(cli.command.run_args().threads, || {
        commands::execute(&cli.command, &manifest)
    })
}

/// `error[CODE]: message` on a single line.
pub fn error_line(e: &CliError) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
        src = s.source();
    }
    format!("error[{}]: {}", e.code(), msg.replace('\n', " "))
}
