//! The `diavgeia` command line and HTTP chat service.

pub mod cli;
pub mod commands;
pub mod config;
pub mod server;

use clap::Parser;

use cli::{Cli, Format};

/// Parses `args`, runs the command and prints its output. Returns the
/// process exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let ctx = commands::Ctx { config_file: cli.config.clone(), format: cli.format };
    // Settings are validated up front so commands that ignore them still reject a bad file.
    let result = config::load(cli.config.as_deref(), |k| std::env::var(k).ok(), Default::default())
        .and_then(|_| commands::run(&ctx, cli.command));
    match result {
        Ok(out) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON value serializes")),
                Format::Table => print!("{}", out.text),
            }
            0
        }
        Err(e) => {
            match cli.format {
                Format::Json => eprintln!("{}", serde_json::json!({"error": format!("{e:#}")})),
                Format::Table => eprintln!("error: {e:#}"),
            }
            1
        }
    }
}
