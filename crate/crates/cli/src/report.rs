use std::path::PathBuf;

use clap::Args;
use fadet_core::{Error, ReportDocument, Result};

use crate::args::write_file;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Machine reports (report.json). Several are merged column-wise, in order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the merged machine report instead of the text table.
    #[arg(long)]
    pub json: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ReportArgs) -> Result<()> {
    let docs = args
        .inputs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ReportDocument::from_json(&text)
                .map_err(|e| Error::Protocol(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = ReportDocument::merge(docs)?;
    let text = if args.json {
        merged.to_json()?
    } else {
        merged.render_text()
    };
    match &args.out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
