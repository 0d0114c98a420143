mod extract;
mod ingest;
mod report;
mod represent;
pub(crate) mod score;
mod synth;

use anyhow::{Context, Result};

use crate::{Cli, Command, Outcome};

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .context("starting worker pool")?;
    pool.install(|| match &cli.command {
        Command::Ingest(args) => ingest::run(args),
        Command::Represent(args) => represent::run(args),
        Command::Extract(args) => extract::run(args),
        Command::Score(args) => score::run(args),
        Command::Synth(args) => synth::run(args),
        Command::Report(args) => report::run(args),
    })
}
