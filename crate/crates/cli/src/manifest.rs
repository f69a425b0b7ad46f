//! `key = value` record of a run, enough to re-execute it.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use eikonal_core::io::parse_key_values;

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Relative paths in `args` resolve against this directory.
    pub cwd: PathBuf,
    pub threads: usize,
    /// Command line after the program name, without `--threads` and `--out`.
    pub args: Vec<String>,
    pub out: PathBuf,
    /// Resolved parameters, for reading; replay uses `args`.
    pub params: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub timings: Vec<(String, Duration)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            ("command".to_string(), self.command.clone()),
            ("version".to_string(), self.version.clone()),
            ("cwd".to_string(), self.cwd.display().to_string()),
            ("threads".to_string(), self.threads.to_string()),
            ("out".to_string(), self.out.display().to_string()),
            ("args".to_string(), self.args.len().to_string()),
        ];
        for (i, a) in self.args.iter().enumerate() {
            lines.push((format!("arg.{i}"), a.clone()));
        }
        for (k, v) in &self.params {
            lines.push((format!("param.{k}"), v.clone()));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            lines.push((format!("output.{i}"), o.clone()));
        }
        for (k, t) in &self.timings {
            lines.push((format!("time.{k}_ms"), format!("{:.3}", t.as_secs_f64() * 1e3)));
        }
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).cloned().ok_or_else(|| anyhow!("manifest has no `{k}`"));
        let n: usize = get("args")?.parse().context("`args` is not a count")?;
        let args = (0..n).map(|i| get(&format!("arg.{i}"))).collect::<Result<Vec<_>>>()?;
        let collect = |prefix: &str| -> Vec<(String, String)> {
            map.iter()
                .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), v.clone())))
                .collect()
        };
        let mut outputs: Vec<(usize, String)> = collect("output.")
            .into_iter()
            .map(|(k, v)| k.parse().map(|i| (i, v)).context("bad output index"))
            .collect::<Result<_>>()?;
        outputs.sort();
        let timings = collect("time.")
            .into_iter()
            .filter_map(|(k, v)| {
                let ms: f64 = v.parse().ok()?;
                Some((k.trim_end_matches("_ms").to_string(), Duration::from_secs_f64(ms / 1e3)))
            })
            .collect();
        Ok(Self {
            command: get("command")?,
            version: get("version")?,
            cwd: PathBuf::from(get("cwd")?),
            threads: get("threads")?.parse().context("`threads` is not a count")?,
            args,
            out: PathBuf::from(get("out")?),
            params: collect("param."),
            outputs: outputs.into_iter().map(|(_, v)| v).collect(),
            timings,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Drops `--threads` and `--out` (with their values) from a command line and
/// returns the rest. Values containing line breaks cannot be recorded.
pub fn strip_run_flags(args: &[String]) -> Result<Vec<String>> {
    let mut kept = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a.contains('\n') || a.contains('\r') {
            bail!("argument `{}` contains a line break", a.escape_debug());
        }
        if a == "--threads" || a == "--out" {
            it.next();
            continue;
        }
        if a.starts_with("--threads=") || a.starts_with("--out=") {
            continue;
        }
        kept.push(a.clone());
    }
    Ok(kept)
}
