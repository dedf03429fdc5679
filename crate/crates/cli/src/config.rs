//! Config-file flags are spliced into argv right after the subcommand path,
//! ahead of the user's own flags, so explicit flags override them.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

const GLOBAL_WITH_VALUE: [&str; 3] = ["--jobs", "--config", "--log-level"];
const NESTED: [&str; 1] = ["metrics"];

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn load_table(path: &Path) -> Result<serde_json::Map<String, serde_json::Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: serde_json::Value = if is_json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?
    } else {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        serde_json::to_value(table).map_err(|e| CliError::Validation(e.to_string()))?
    };
    match value {
        serde_json::Value::Object(map) => Ok(map),
        _ => Err(CliError::Validation(
            "config file must hold a table of flags".into(),
        )),
    }
}

fn scalar(key: &str, v: &serde_json::Value) -> Result<String, CliError> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        _ => Err(CliError::Validation(format!(
            "config key {key:?}: unsupported value {v}"
        ))),
    }
}

fn flags_from_table(
    map: &serde_json::Map<String, serde_json::Value>,
) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(CliError::Validation(
                "config files cannot nest --config".into(),
            ));
        }
        match value {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|v| scalar(key, v))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(key, other)?.into());
            }
        }
    }
    Ok(out)
}

/// Index just past the subcommand path (`generate`, `metrics eer`, ...).
fn subcommand_end(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    let mut depth = 0;
    let mut nested = false;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if s.starts_with('-') {
            i += 1;
            continue;
        }
        depth += 1;
        if depth == 1 && NESTED.contains(&s.as_ref()) {
            nested = true;
            i += 1;
            continue;
        }
        if depth == 1 || nested {
            return Some(i + 1);
        }
        i += 1;
    }
    None
}

/// Returns argv with config-file flags inserted, or argv unchanged when no
/// `--config` is given.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let flags = flags_from_table(&load_table(Path::new(&path))?)?;
    let Some(at) = subcommand_end(&argv) else {
        return Ok(argv);
    };
    let mut out = argv[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}
