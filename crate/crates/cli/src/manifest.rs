//! Flat `key=value` run manifests.
//!
//! Keys other than the bookkeeping ones are the subcommand's flags with
//! dashes replaced by underscores, so a manifest converts straight back into
//! an argument list.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const ARTIFACT: &str = "sparse-softmax";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const BOOKKEEPING: [&str; 4] = ["artifact", "artifact_version", "subcommand", "outputs"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub subcommand: String,
    /// Resolved flag values in flag order.
    pub flags: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            flags: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn flag(mut self, key: &str, value: impl ToString) -> Self {
        self.flags.push((key.replace('-', "_"), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "artifact={ARTIFACT}");
        let _ = writeln!(s, "artifact_version={ARTIFACT_VERSION}");
        let _ = writeln!(s, "subcommand={}", self.subcommand);
        for (k, v) in &self.flags {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "outputs={}", self.outputs.join(","));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut manifest = Manifest::new("");
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("manifest line {}: expected key=value", i + 1))?;
            match k {
                "artifact" if v != ARTIFACT => bail!("manifest is not from {ARTIFACT}: {v}"),
                "subcommand" => manifest.subcommand = v.to_string(),
                "outputs" => {
                    manifest.outputs = v.split(',').filter(|s| !s.is_empty()).map(String::from).collect()
                }
                _ if BOOKKEEPING.contains(&k) => {}
                _ => manifest.flags.push((k.to_string(), v.to_string())),
            }
        }
        if manifest.subcommand.is_empty() {
            bail!("manifest has no subcommand");
        }
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Self::parse(&text)
    }

    /// Argument list reproducing the run, with `out` optionally replaced.
    pub fn to_args(&self, out: Option<&Path>) -> Vec<String> {
        let mut args = vec![ARTIFACT.to_string(), self.subcommand.clone()];
        for (k, v) in &self.flags {
            let flag = format!("--{}", k.replace('_', "-"));
            match (k.as_str(), v.as_str()) {
                ("out", _) if out.is_some() => {}
                (_, "true") => args.push(flag),
                (_, "false") => {}
                _ => {
                    args.push(flag);
                    args.push(v.clone());
                }
            }
        }
        if let Some(out) = out {
            args.push("--out".into());
            args.push(out.display().to_string());
        }
        args
    }
}
