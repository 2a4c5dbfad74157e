//! Artifact serialization and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use subvoter_core::{Error, Result, VERSION};

use crate::args::RunConfig;

/// Directory that relative `--out` paths resolve against.
pub const OUTPUT_DIR_VAR: &str = "SUBVOTER_OUTPUT_DIR";

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

pub fn json<T: Serialize>(config: &RunConfig, result: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Artifact { version: VERSION, config, result }).map_err(to_io)?;
    s.push('\n');
    Ok(s)
}

/// `# version` and `# config` comment lines followed by the rows.
pub fn csv<R: Serialize>(config: &RunConfig, rows: &[R]) -> Result<String> {
    let mut out = header(config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(to_io)?;
    }
    let bytes = w.into_inner().map_err(|e| to_io(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Two-column `key,value` CSV over the flattened JSON of `result`.
pub fn csv_flat<T: Serialize>(config: &RunConfig, result: &T) -> Result<String> {
    let mut rows = Vec::new();
    flatten("", &serde_json::to_value(result).map_err(to_io)?, &mut rows);
    #[derive(Serialize)]
    struct Row {
        key: String,
        value: String,
    }
    let rows: Vec<Row> = rows.into_iter().map(|(key, value)| Row { key, value }).collect();
    csv(config, &rows)
}

pub fn header(config: &RunConfig) -> Result<String> {
    Ok(format!("# {VERSION}\n# config {}\n", serde_json::to_string(config).map_err(to_io)?))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn to_io<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes to `out` (resolved) or to standard output.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(&resolve(p), contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening() {
        let v = serde_json::json!({"a": {"b": 1, "c": [2.5, null]}, "d": "x"});
        let mut rows = Vec::new();
        flatten("", &v, &mut rows);
        let keys: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(keys, ["a.b", "a.c.0", "a.c.1", "d"]);
        assert_eq!(rows[1].1, "2.5");
        assert_eq!(rows[2].1, "");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
