//! Canonical run configuration: every command reduces to one of these, and
//! its text form is embedded in each report.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub omega: Option<String>,
    pub k: Option<u32>,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    pub features_removed: bool,
    pub normalize: bool,
    pub tower: Option<String>,
    /// Command-specific settings as sorted `key=value` pairs.
    pub extra: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> RunConfig {
        RunConfig {
            command: command.into(),
            inputs: Vec::new(),
            omega: None,
            k: None,
            seeds: Vec::new(),
            output: None,
            features_removed: false,
            normalize: false,
            tower: None,
            extra: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.extra.binary_search_by(|(k, _)| k.as_str().cmp(key)) {
            Ok(i) => self.extra[i].1 = value,
            Err(i) => self.extra.insert(i, (key.into(), value)),
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command = {}", self.command)?;
        let inputs: Vec<String> = self.inputs.iter().map(|p| p.display().to_string()).collect();
        writeln!(f, "inputs = {}", inputs.join(";"))?;
        writeln!(f, "omega = {}", self.omega.as_deref().unwrap_or(""))?;
        writeln!(f, "k = {}", self.k.map(|k| k.to_string()).unwrap_or_default())?;
        writeln!(f, "seeds = {}", join(&self.seeds))?;
        writeln!(f, "output = {}", self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default())?;
        writeln!(f, "features_removed = {}", self.features_removed)?;
        writeln!(f, "normalize = {}", self.normalize)?;
        writeln!(f, "tower = {}", self.tower.as_deref().unwrap_or(""))?;
        for (k, v) in &self.extra {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut cfg = RunConfig::new("");
        let mut seen_command = false;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .or_else(|| line.strip_suffix(" =").map(|k| (k, "")))
                .ok_or_else(|| format!("line {}: expected `key = value`", idx + 1))?;
            let opt = |v: &str| (!v.is_empty()).then(|| v.to_string());
            let flag = |v: &str| v.parse::<bool>().map_err(|_| format!("line {}: `{key}` must be true or false", idx + 1));
            match key {
                "command" => {
                    cfg.command = value.into();
                    seen_command = true;
                }
                "inputs" => cfg.inputs = value.split(';').filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
                "omega" => cfg.omega = opt(value),
                "k" => cfg.k = opt(value).map(|v| v.parse().map_err(|_| format!("line {}: bad k", idx + 1))).transpose()?,
                "seeds" => {
                    cfg.seeds = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| format!("line {}: bad seed `{s}`", idx + 1)))
                        .collect::<Result<_, _>>()?
                }
                "output" => cfg.output = opt(value).map(PathBuf::from),
                "features_removed" => cfg.features_removed = flag(value)?,
                "normalize" => cfg.normalize = flag(value)?,
                "tower" => cfg.tower = opt(value),
                other => cfg.set(other, value),
            }
        }
        if !seen_command {
            return Err("missing `command`".into());
        }
        Ok(cfg)
    }
}
