//! Result serialization: every JSON document embeds the command name, the
//! library version, and the fully resolved configuration, so a run can be
//! replayed byte-for-byte.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    #[serde(flatten)]
    result: &'a R,
}

/// Writes `{command, version, config, ...result}` as pretty JSON to the
/// path, or stdout when no path is given.
pub fn write_json<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    result: &R,
    path: Option<&Path>,
) -> CliResult<()> {
    let doc = Envelope {
        command,
        version: VERSION,
        config,
        result,
    };
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)?;
            writeln!(f, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Writes CSV rows to the path or stdout; the header line is skipped when
/// empty.
pub fn write_csv(header: &str, rows: &[String], path: Option<&Path>) -> CliResult<()> {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    if !header.is_empty() {
        text.push_str(header);
        text.push('\n');
    }
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
