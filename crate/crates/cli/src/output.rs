use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Core(purcellkit::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<purcellkit::Error> for CliError {
    fn from(e: purcellkit::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    result: &'a T,
}

pub fn to_json<T: Serialize>(command: &str, result: &T) -> CliResult<Vec<u8>> {
    let env = Envelope {
        schema_version: purcellkit::SCHEMA_VERSION,
        command,
        result,
    };
    let mut buf = serde_json::to_vec_pretty(&env)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes the JSON envelope to `out`, or to stdout.
pub fn emit<T: Serialize>(command: &str, result: &T, out: Option<&Path>) -> CliResult {
    let buf = to_json(command, result)?;
    match out {
        Some(p) => write_atomic(p, &buf),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(&buf)?;
            so.flush()?;
            Ok(())
        }
    }
}

/// Write-then-rename in the target's directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

pub fn write_atomic_with<F>(path: &Path, f: F) -> CliResult
where
    F: FnOnce(&mut Vec<u8>) -> purcellkit::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_atomic(path, &buf)
}
