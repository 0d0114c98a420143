//! Scripted chat-completions endpoint for offline runs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use webrec::extract::mock::{MockScript, MockServer};

#[derive(Debug, Parser)]
#[command(
    name = "webrec-mock",
    version,
    about = "Serve scripted chat-completions responses"
)]
struct Args {
    /// JSON script: responses keyed by page id, optional failures and delay.
    #[arg(long)]
    script: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8787")]
    addr: String,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let text = std::fs::read_to_string(&args.script)
        .with_context(|| format!("reading {}", args.script.display()))?;
    let script: MockScript = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.script.display()))?;
    let server = MockServer::start(script, &args.addr)?;
    println!("{}", server.url());
    server.join();
    Ok(())
}
