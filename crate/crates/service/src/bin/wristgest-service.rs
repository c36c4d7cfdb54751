use clap::Parser;
use wristgest_service::{run, ServeOptions};

/// Serve live gesture events over HTTP.
#[derive(Parser)]
#[command(name = "wristgest-service", version)]
struct Cli {
    #[command(flatten)]
    opts: ServeOptions,
    /// TOML file with the same keys as the flags
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    let cli = Cli::parse();
    let opts = match cli.config.as_deref().map(load_config).transpose() {
        Ok(file) => cli.opts.merged(file.unwrap_or_default()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    if let Err(e) = run(opts).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    // A blocked stdin reader would otherwise keep the runtime alive.
    std::process::exit(0);
}

fn load_config(path: &std::path::Path) -> Result<ServeOptions, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
