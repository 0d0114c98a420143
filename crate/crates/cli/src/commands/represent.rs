use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use webrec::represent::{render, FlatStyle, RenderOptions, Representation, TokenizerSpec};

use crate::store::{write_atomic, Store};
use crate::{Outcome, RenderArgs, RepresentArgs, StyleArg, TokenizerArg};

pub const TOKENS_CSV: &str = "tokens.csv";

impl RenderArgs {
    pub fn options(&self) -> RenderOptions {
        RenderOptions {
            flat_style: match self.style {
                StyleArg::Indexed => FlatStyle::Indexed,
                StyleArg::Compact => FlatStyle::Compact,
            },
            tokenizer: match self.tokenizer {
                TokenizerArg::Chars4 => TokenizerSpec::default(),
                TokenizerArg::Ws => TokenizerSpec::whitespace_punct(),
            },
        }
    }
}

#[derive(Serialize)]
struct TokenRow<'a> {
    page_id: &'a str,
    representation: &'a str,
    tokenizer: &'a str,
    tokens: usize,
    chars: usize,
}

pub fn run(args: &RepresentArgs) -> Result<Outcome> {
    let store = Store::open(&args.store)?;
    let opts = args.render.options();
    let ids: Vec<&str> = store.page_ids().collect();
    let results: Vec<Result<Vec<Representation>>> = ids
        .par_iter()
        .map(|id| {
            let tree = store.slim_tree(id)?;
            let reps: Vec<Representation> = args
                .format
                .iter()
                .map(|f| render(&tree, f.kind(), &opts))
                .collect();
            for rep in &reps {
                let path = args.out.join(format!("{id}.{}", rep.kind.file_suffix()));
                write_atomic(&path, rep.payload.as_bytes())?;
            }
            Ok(reps)
        })
        .collect();

    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut totals = vec![(0usize, 0usize); args.format.len()];
    let mut skipped = 0;
    for (id, result) in ids.iter().zip(results) {
        match result {
            Ok(reps) => {
                for (rep, total) in reps.iter().zip(totals.iter_mut()) {
                    csv.serialize(TokenRow {
                        page_id: id,
                        representation: rep.kind.as_str(),
                        tokenizer: opts.tokenizer.method_name(),
                        tokens: rep.token_estimate,
                        chars: rep.payload.chars().count(),
                    })?;
                    total.0 += rep.token_estimate;
                    total.1 += 1;
                }
            }
            Err(e) => {
                log::warn!("skipping page {id}: {e:#}");
                skipped += 1;
            }
        }
    }
    write_atomic(&args.out.join(TOKENS_CSV), &csv.into_inner()?)?;
    for (format, (sum, n)) in args.format.iter().zip(totals) {
        let avg = if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        println!(
            "{:<18} average tokens {avg:.1} over {n} page(s)",
            format.kind().as_str()
        );
    }
    Ok(Outcome::from_skipped(skipped))
}
