//! `key = value` config files for the global options.

use std::path::{Path, PathBuf};

use duffing_kg::Error;

/// Global settings; `None` means "not set here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Globals {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Globals {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Globals) -> Globals {
        Globals {
            rel_tol: self.rel_tol.or(base.rel_tol),
            abs_tol: self.abs_tol.or(base.abs_tol),
            t_max: self.t_max.or(base.t_max),
            seed: self.seed.or(base.seed),
            threads: self.threads.or(base.threads),
            out: self.out.or(base.out),
        }
    }
}

/// Parse config text. Blank lines and `#` comments are skipped; keys may use
/// `-` or `_`.
pub fn parse(text: &str) -> Result<Globals, Error> {
    let mut g = Globals::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Config { line: i + 1, msg };
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim().trim_matches('"');
        let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
        match key.as_str() {
            "rel_tol" => g.rel_tol = Some(num(value)?),
            "abs_tol" => g.abs_tol = Some(num(value)?),
            "t_max" => g.t_max = Some(num(value)?),
            "seed" => g.seed = Some(value.parse().map_err(|e| err(format!("seed: {e}")))?),
            "threads" => g.threads = Some(value.parse().map_err(|e| err(format!("threads: {e}")))?),
            "out" => g.out = Some(PathBuf::from(value)),
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    Ok(g)
}

pub fn load(path: &Path) -> Result<Globals, Error> {
    parse(&std::fs::read_to_string(path)?)
}
