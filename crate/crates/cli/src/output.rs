use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::Experiment;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn cx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn cx_list(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().map(|&z| cx(z)).collect())
}

/// Writes files under the output directory, stamping each with the tool
/// version and the config hash.
pub struct Sink {
    dir: PathBuf,
    hash: String,
    command: String,
    exp: Value,
}

impl Sink {
    pub fn new(exp: &Experiment, command: &str) -> Result<Self> {
        fs::create_dir_all(&exp.out).with_context(|| format!("cannot create output directory {}", exp.out.display()))?;
        Ok(Sink {
            dir: exp.out.clone(),
            hash: exp.hash(),
            command: command.to_string(),
            exp: serde_json::to_value(exp)?,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `body` (a JSON object) with an added `meta` entry. Keys come
    /// out sorted because `serde_json` maps are ordered.
    pub fn json(&self, name: &str, mut body: Value) -> Result<PathBuf> {
        let meta = json!({
            "tool": "hill-cli",
            "version": VERSION,
            "command": self.command,
            "config_sha256": self.hash,
            "config": self.exp,
        });
        body.as_object_mut().expect("JSON body is an object").insert("meta".into(), meta);
        let mut text = serde_json::to_string_pretty(&body)?;
        text.push('\n');
        write(&self.path(name), text.as_bytes())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut buf = format!("# hill-cli {VERSION} command={} config={}\n", self.command, self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        write(&self.path(name), &buf)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path.to_path_buf())
}

/// Shortest round-trip decimal form, so repeated runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys_are_sorted() {
        let v = json!({"zeta": 1, "alpha": {"y": 2, "b": 3}});
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"alpha":{"b":3,"y":2},"zeta":1}"#);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 9.869604401089358, 0.0, 1e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
