//! Flat `key=value` settings merged from defaults, a config file and flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use lcdep::induction::TrainConfig;

/// Keys accepted in configuration files.
const KNOWN: [&str; 17] = [
    "seed",
    "jobs",
    "pos_column",
    "max_len",
    "strip_punct",
    "system",
    "measure",
    "lang",
    "bounds",
    "trials",
    "sentence",
    "beam",
    "bound",
    "epochs",
    "features",
    "punct",
    "relax",
];

fn known(key: &str) -> bool {
    KNOWN.contains(&key) || TrainConfig::KEYS.contains(&key)
}

/// Reads a configuration file; blank lines and `#` comments are skipped.
pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), no + 1))?;
        let k = k.trim().replace('-', "_");
        if !known(&k) {
            bail!("{}:{}: unknown key `{k}`", path.display(), no + 1);
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

/// Default settings of a command; the keys are also the ones it echoes.
pub fn defaults(command: &str) -> Vec<(&'static str, String)> {
    let pairs = |xs: &[(&'static str, &str)]| xs.iter().map(|(k, v)| (*k, v.to_string())).collect::<Vec<_>>();
    let mut out = pairs(&[("seed", "1"), ("jobs", "0")]);
    let input = pairs(&[("pos_column", "coarse"), ("max_len", "none"), ("strip_punct", "false")]);
    let depth = pairs(&[("system", "left-corner"), ("measure", "depth-re"), ("relax", "1"), ("lang", "-")]);
    match command {
        "input" => return input,
        "analyze-depth" => out.extend([input, depth].concat()),
        "coverage" => out.extend([input, depth, pairs(&[("bounds", "1,2,3,4,5")])].concat()),
        "random-baseline" => out.extend([input, depth, pairs(&[("trials", "1")])].concat()),
        "oracle-trace" => out.extend([input, pairs(&[("system", "left-corner"), ("sentence", "none")])].concat()),
        "train-dmv" => {
            out.extend(input);
            out.extend(TrainConfig::default().entries());
        }
        "parse" => {
            let p = pairs(&[("beam", "8"), ("bound", "none"), ("measure", "depth-re"), ("relax", "1")]);
            out.extend([input, p].concat());
        }
        "eval-uas" => out.extend(pairs(&[("punct", "false")])),
        "train-supervised" => {
            let p = pairs(&[("system", "left-corner"), ("features", "full"), ("beam", "8"), ("epochs", "10")]);
            out.extend([input, p].concat());
        }
        _ => unreachable!("unknown command {command}"),
    }
    out
}

/// Parses a comma-separated list of positive integers.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| anyhow!("bad list entry `{x}`"))).collect()
}

/// Resolved settings of one run.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
    order: Vec<&'static str>,
}

impl Settings {
    /// Defaults, overridden by the file, overridden by flags that were given.
    ///
    /// File keys that the command does not use are ignored.
    pub fn resolve(
        defaults: &[(&'static str, String)],
        file: &BTreeMap<String, String>,
        flags: &[(&'static str, Option<String>)],
    ) -> Result<Settings> {
        let mut s = Settings::default();
        for (k, v) in defaults {
            s.order.push(k);
            s.values.insert(k, file.get(*k).cloned().unwrap_or_else(|| v.clone()));
        }
        for (k, v) in flags {
            if let (Some(v), Some(slot)) = (v, s.values.get_mut(k)) {
                *slot = v.clone();
            }
        }
        Ok(s)
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| anyhow!("missing setting `{key}`"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get_str(key)?;
        v.parse().map_err(|_| anyhow!("bad value `{v}` for `{key}`"))
    }

    /// Like [`Settings::get`] with `none` read as absent.
    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key)? {
            "none" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    /// `# key=value` lines in default order.
    pub fn echo(&self) -> String {
        self.order.iter().map(|k| format!("# {k}={}\n", self.values[k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults() {
        let mut file = BTreeMap::new();
        file.insert("beam".to_string(), "4".to_string());
        file.insert("epochs".to_string(), "3".to_string());
        let s = Settings::resolve(&defaults("train-supervised"), &file, &[("epochs", Some("7".into()))]).unwrap();
        assert_eq!(s.get::<usize>("beam").unwrap(), 4);
        assert_eq!(s.get::<usize>("epochs").unwrap(), 7);
        assert_eq!(s.get_str("system").unwrap(), "left-corner");
        assert!(s.echo().contains("# epochs=7\n"));
    }

    #[test]
    fn none_reads_as_absent() {
        let s = Settings::resolve(&defaults("parse"), &BTreeMap::new(), &[]).unwrap();
        assert_eq!(s.get_opt::<usize>("bound").unwrap(), None);
        assert_eq!(parse_list("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn train_dmv_defaults_cover_every_training_key() {
        let keys: Vec<&str> = defaults("train-dmv").into_iter().map(|(k, _)| k).collect();
        assert!(TrainConfig::KEYS.iter().all(|k| keys.contains(k)));
    }
}
