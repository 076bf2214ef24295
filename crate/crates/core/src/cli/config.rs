//! Configuration assembly: JSON file, then environment, then flags.
//!
//! Sources are merged as JSON values and deserialized once into the typed
//! configuration, so unknown keys and invalid values fail in one place.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::analysis::SeedSource;
use crate::kernels::ModelPreset;
use crate::Error;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "EVONET_SEED";

/// Top-level JSON object of `path`, or an empty object.
pub fn load(path: Option<&Path>) -> Result<Map<String, Value>, Error> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text)? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Config(format!("{} must hold a JSON object", path.display()))),
    }
}

pub fn set<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

pub fn set_default(map: &mut Map<String, Value>, key: &str, value: Value) {
    map.entry(key.to_string()).or_insert(value);
}

/// Nested object at `key`, created if absent.
pub fn object<'a>(map: &'a mut Map<String, Value>, key: &str) -> Result<&'a mut Map<String, Value>, Error> {
    map.entry(key.to_string())
        .or_insert_with(|| Value::Object(Map::new()))
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("\"{key}\" must be a JSON object")))
}

/// Fills seed-graph defaults of a preset given by flags: `m0 = m + 1` and a
/// circulant seed of degree `m` for the deletion models, `m0 = m` otherwise.
pub fn complete_preset(preset: &mut Map<String, Value>) {
    let Some(m) = preset.get("m").and_then(Value::as_u64) else {
        return;
    };
    let rewiring = preset.get("variant").and_then(Value::as_str).is_some_and(|v| v.contains("rewire"));
    if rewiring {
        set_default(preset, "m0", m.into());
    } else {
        set_default(preset, "m0", (m + 1).into());
        let m0 = preset.get("m0").and_then(Value::as_u64).unwrap_or(m + 1);
        set_default(preset, "N0", (m0 * m).into());
    }
}

/// Replaces a `"preset"` entry by the `"params"` and `"law"` it implies.
pub fn expand_preset(map: &mut Map<String, Value>) -> Result<(), Error> {
    let Some(value) = map.remove("preset") else {
        return Ok(());
    };
    if map.contains_key("params") || map.contains_key("law") {
        return Err(Error::Config("give either a preset or params and law, not both".into()));
    }
    let preset: ModelPreset = serde_json::from_value(value)?;
    let (params, law) = preset.kernels();
    map.insert("params".into(), serde_json::to_value(params)?);
    map.insert("law".into(), serde_json::to_value(law)?);
    Ok(())
}

/// Applies seed precedence flag, environment, file, default 0.
pub fn resolve_seed(map: &mut Map<String, Value>, flag: Option<u64>) -> Result<(u64, Option<SeedSource>), Error> {
    let env = match std::env::var(SEED_ENV) {
        Ok(s) => Some(s.trim().parse::<u64>().map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {s:?}")))?),
        Err(_) => None,
    };
    let (seed, source) = if let Some(s) = flag {
        (s, Some(SeedSource::Flag))
    } else if let Some(s) = env {
        (s, Some(SeedSource::Environment))
    } else if let Some(v) = map.get("seed") {
        let s = v.as_u64().ok_or_else(|| Error::Config("seed must be an unsigned integer".into()))?;
        (s, Some(SeedSource::ConfigFile))
    } else {
        (0, None)
    };
    map.insert("seed".into(), seed.into());
    Ok((seed, source))
}

pub fn parse<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, Error> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))
}
