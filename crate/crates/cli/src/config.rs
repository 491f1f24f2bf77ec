use std::path::Path;

use rerand::simlab::StudyConfig;
use serde_json::{Map, Value};

use crate::failure::Failure;

pub const SECTIONS: [&str; 4] = ["benchmark", "estimate", "infer", "sensitivity"];
pub const SWEEP_KEYS: [&str; 2] = ["deltas", "etas"];
pub const DEFAULT_DELTAS: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 10.0];
pub const DEFAULT_ETAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// A study configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub study: StudyConfig,
    pub deltas: Option<Vec<f64>>,
    pub etas: Option<Vec<f64>>,
}

impl Resolved {
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.study).expect("study config serializes");
        if let Value::Object(m) = &mut v {
            if let Some(d) = &self.deltas {
                m.insert("deltas".into(), serde_json::json!(d));
            }
            if let Some(e) = &self.etas {
                m.insert("etas".into(), serde_json::json!(e));
            }
        }
        v
    }
}

pub fn study_keys() -> Vec<String> {
    match serde_json::to_value(StudyConfig::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => unreachable!("study config serializes to an object"),
    }
}

fn command_defaults(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    match command {
        "infer" => {
            m.insert("methods".into(), serde_json::json!(["cr", "lgr"]));
        }
        "sensitivity" => {
            m.insert("methods".into(), serde_json::json!(["lgr"]));
            m.insert("deltas".into(), serde_json::json!(DEFAULT_DELTAS));
            m.insert("etas".into(), serde_json::json!(DEFAULT_ETAS));
        }
        _ => {}
    }
    m
}

/// Parsed config file: either a TOML study file or a JSON run manifest.
pub struct FileLayers {
    pub top: Map<String, Value>,
    pub section: Map<String, Value>,
}

pub fn read_config_file(path: &Path, command: &str) -> Result<FileLayers, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return from_manifest(&text, path, command);
    }
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| Failure::input(format!("cannot parse config {}: {e}", path.display())))?;
    let root = match serde_json::to_value(table) {
        Ok(Value::Object(m)) => m,
        _ => return Err(Failure::input("config root must be a table")),
    };
    split_sections(root, command)
}

fn from_manifest(text: &str, path: &Path, command: &str) -> Result<FileLayers, Failure> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("cannot parse manifest {}: {e}", path.display())))?;
    if v.get("command").and_then(Value::as_str) != Some(command) {
        return Err(Failure::input(format!(
            "manifest {} was written by a different command",
            path.display()
        )));
    }
    match v.get("config") {
        Some(Value::Object(m)) => Ok(FileLayers {
            top: m.clone(),
            section: Map::new(),
        }),
        _ => Err(Failure::input(format!("manifest {} has no config object", path.display()))),
    }
}

fn split_sections(root: Map<String, Value>, command: &str) -> Result<FileLayers, Failure> {
    let known = study_keys();
    let mut unknown = Vec::new();
    let mut top = Map::new();
    let mut section = Map::new();
    for (key, value) in root {
        if SECTIONS.contains(&key.as_str()) {
            let Value::Object(inner) = value else {
                unknown.push(key);
                continue;
            };
            for (k, v) in inner {
                let ok = known.contains(&k) || (key == "sensitivity" && SWEEP_KEYS.contains(&k.as_str()));
                if !ok {
                    unknown.push(format!("{key}.{k}"));
                } else if key == command {
                    section.insert(k, v);
                }
            }
        } else if known.contains(&key) {
            top.insert(key, value);
        } else {
            unknown.push(key);
        }
    }
    if !unknown.is_empty() {
        return Err(Failure::input(format!("unknown config key(s): {}", unknown.join(", "))));
    }
    Ok(FileLayers { top, section })
}

/// Merges, lowest precedence first: built-in defaults, command defaults,
/// file top level, file command section, command-line flags.
pub fn resolve(command: &str, file: Option<FileLayers>, flags: Map<String, Value>) -> Result<Resolved, Failure> {
    let mut merged = command_defaults(command);
    if let Some(f) = file {
        merged.extend(f.top);
        merged.extend(f.section);
    }
    merged.extend(flags);
    let invalid = |e: serde_json::Error| Failure::input(format!("invalid config: {e}"));
    let mut sweep = |key: &str| -> Result<Option<Vec<f64>>, Failure> {
        match merged.remove(key) {
            Some(v) if command == "sensitivity" => Ok(Some(serde_json::from_value(v).map_err(invalid)?)),
            _ => Ok(None),
        }
    };
    let deltas = sweep("deltas")?;
    let etas = sweep("etas")?;
    let study: StudyConfig = serde_json::from_value(Value::Object(merged)).map_err(invalid)?;
    let resolved = Resolved { study, deltas, etas };
    resolved.study.validate()?;
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers(text: &str, command: &str) -> Result<FileLayers, Failure> {
        let table: toml::Table = toml::from_str(text).unwrap();
        match serde_json::to_value(table).unwrap() {
            Value::Object(m) => split_sections(m, command),
            _ => unreachable!(),
        }
    }

    #[test]
    fn precedence() {
        let f = layers("reps = 10\nn = 50\n[estimate]\nreps = 20\n[infer]\nreps = 30\n", "estimate").unwrap();
        let mut flags = Map::new();
        flags.insert("n".into(), serde_json::json!(60));
        let r = resolve("estimate", Some(f), flags).unwrap();
        assert_eq!((r.study.reps, r.study.n), (20, 60));
        assert!(r.deltas.is_none());
    }

    #[test]
    fn unknown_keys_listed() {
        let err = layers("nn = 1\n[sensitivity]\ndeltas = [1.0]\nbogus = 2\n[other]\nx = 1\n", "benchmark")
            .err()
            .unwrap();
        assert_eq!(err.code, 2);
        for key in ["nn", "sensitivity.bogus", "other"] {
            assert!(err.message.contains(key), "{}", err.message);
        }
    }

    #[test]
    fn command_defaults_apply() {
        let r = resolve("infer", None, Map::new()).unwrap();
        assert_eq!(r.study.methods.len(), 2);
        let s = resolve("sensitivity", None, Map::new()).unwrap();
        assert_eq!(s.deltas.unwrap(), DEFAULT_DELTAS.to_vec());
    }

    #[test]
    fn bad_values_are_input_errors() {
        let f = layers("reps = 1\n", "benchmark").unwrap();
        assert_eq!(resolve("benchmark", Some(f), Map::new()).err().unwrap().code, 2);
        let f = layers("n = \"many\"\n", "benchmark").unwrap();
        assert_eq!(resolve("benchmark", Some(f), Map::new()).err().unwrap().code, 2);
    }
}
