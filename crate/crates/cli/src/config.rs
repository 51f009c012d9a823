//! JSON config files overlaid by command-line flags. Config keys and flag
//! names correspond one-to-one (`--n-trees` sets `n_trees`); flags win.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

fn object(v: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{what} must be a JSON object"))),
    }
}

/// Merges `config` (if any) and the non-null flag values into `P`, rejecting
/// keys that `P` does not have.
pub fn resolve<P, F>(config: Option<&Path>, flags: &F) -> Result<(P, Value), CliError>
where
    P: DeserializeOwned + Serialize + Default,
    F: Serialize,
{
    let known = object(to_value(&P::default())?, "params")?;
    let mut merged = Map::new();
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        merged = object(v, &format!("{}", path.display()))?;
        if let Some(k) = merged.keys().find(|k| !known.contains_key(*k)) {
            return Err(CliError::Usage(format!("{}: unknown key `{k}`", path.display())));
        }
    }
    for (k, v) in object(to_value(flags)?, "flags")? {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let merged = Value::Object(merged);
    let params: P = serde_json::from_value(merged)
        .map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))?;
    let resolved = to_value(&params)?;
    Ok((params, resolved))
}

fn to_value<T: Serialize>(t: &T) -> Result<Value, CliError> {
    serde_json::to_value(t).map_err(|e| CliError::Internal(e.to_string()))
}
