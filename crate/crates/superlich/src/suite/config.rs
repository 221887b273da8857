//! Suite configuration: a small key-value file format plus programmatic
//! overrides. Unknown keys are config errors that name the offending key.
//!
//! Recognized keys:
//!   geometries  = flat-r2, sphere-s2, ...      (default: whole catalog)
//!   identities  = thm-4-2, eq-1-1, ...         (default: all identities)
//!   families    = none, a0, a2, full-mix       (filter; default: all)
//!   twistings   = flat, random                 (filter; default: all)
//!   seeds       = 0, 1, 2       or   0..4      (default: 0)
//!   sections    = 20
//!   points      = 20
//!   w_plus      = 1
//!   w_minus     = 1
//!   parallel    = true
//!   report      = path/to/report.jsonl
//!   tolerance   = 1e-6             (global override)
//!   tolerance.thm-4-2 = 1e-7       (per-identity override)

use crate::{Error, Result};
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Clone, Debug)]
pub struct Config {
    pub geometries: Vec<String>,
    pub identities: Vec<String>,
    pub families: Option<Vec<String>>,
    pub twistings: Option<Vec<String>>,
    pub seeds: Vec<u64>,
    pub sections: usize,
    pub points: usize,
    pub w_plus: usize,
    pub w_minus: usize,
    pub parallel: bool,
    pub report: Option<PathBuf>,
    pub global_tolerance: Option<f64>,
    pub tolerance_overrides: HashMap<String, f64>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            geometries: crate::geometry::catalog::GEOMETRY_IDS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            identities: super::IDENTITY_IDS.iter().map(|s| s.to_string()).collect(),
            families: None,
            twistings: None,
            seeds: vec![0],
            sections: 20,
            points: 20,
            w_plus: 1,
            w_minus: 1,
            parallel: true,
            report: None,
            global_tolerance: None,
            tolerance_overrides: HashMap::new(),
        }
    }
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let value = value.trim();
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range start: {lo}")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range end: {hi}")))?;
        if hi < lo {
            return Err(Error::Config(format!("empty seed range: {value}")));
        }
        return Ok((lo..=hi).collect());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad seed: {s}")))
        })
        .collect()
}

impl Config {
    pub fn apply_line(&mut self, line: &str) -> Result<()> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(());
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key = value, got: {line}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "geometries" | "geometry" => self.geometries = parse_list(value),
            "identities" | "identity" => self.identities = parse_list(value),
            "families" | "family" => self.families = Some(parse_list(value)),
            "twistings" | "twisting" => self.twistings = Some(parse_list(value)),
            "seeds" | "seed" => self.seeds = parse_seeds(value)?,
            "sections" => {
                self.sections = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sections count: {value}")))?
            }
            "points" => {
                self.points = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad points count: {value}")))?
            }
            "w_plus" => {
                self.w_plus = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad w_plus: {value}")))?
            }
            "w_minus" => {
                self.w_minus = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad w_minus: {value}")))?
            }
            "parallel" => {
                self.parallel = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad parallel flag: {value}")))?
            }
            "report" => self.report = Some(PathBuf::from(value)),
            "tolerance" => {
                self.global_tolerance = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad tolerance: {value}")))?,
                )
            }
            _ => {
                if let Some(identity) = key.strip_prefix("tolerance.") {
                    let tol: f64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad tolerance: {value}")))?;
                    self.tolerance_overrides.insert(identity.to_string(), tol);
                } else {
                    return Err(Error::Config(format!("unknown config key: {key}")));
                }
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        for line in text.lines() {
            self.apply_line(line)?;
        }
        Ok(())
    }

    /// Validate referenced ids against the catalogs.
    pub fn validate(&self) -> Result<()> {
        for g in &self.geometries {
            if !crate::geometry::catalog::GEOMETRY_IDS.contains(&g.as_str()) {
                return Err(Error::Config(format!("unknown geometry id: {g}")));
            }
        }
        for i in &self.identities {
            if !super::IDENTITY_IDS.contains(&i.as_str()) {
                return Err(Error::Config(format!("unknown identity id: {i}")));
            }
        }
        if let Some(fams) = &self.families {
            for f in fams {
                if crate::superconn::Family::parse(f).is_none() {
                    return Err(Error::Config(format!("unknown family: {f}")));
                }
            }
        }
        if let Some(tws) = &self.twistings {
            for t in tws {
                if t != "flat" && t != "random" {
                    return Err(Error::Config(format!("unknown twisting preset: {t}")));
                }
            }
        }
        for ident in self.tolerance_overrides.keys() {
            if !super::IDENTITY_IDS.contains(&ident.as_str()) {
                return Err(Error::Config(format!(
                    "tolerance override for unknown identity: {ident}"
                )));
            }
        }
        if self.w_plus == 0 || self.w_minus == 0 {
            return Err(Error::Config(
                "both twisting ranks must be at least one".into(),
            ));
        }
        if self.sections == 0 || self.points == 0 {
            return Err(Error::Config("sections and points must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_rejects_unknown_keys() {
        let mut cfg = Config::default();
        cfg.apply_line("# a comment").unwrap();
        cfg.apply_line("geometries = sphere-s2, torus-t4").unwrap();
        cfg.apply_line("seeds = 0..4").unwrap();
        cfg.apply_line("tolerance.thm-4-2 = 1e-7").unwrap();
        assert_eq!(cfg.geometries, vec!["sphere-s2", "torus-t4"]);
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(cfg.tolerance_overrides["thm-4-2"], 1e-7);
        assert!(cfg.apply_line("frobnicate = 7").is_err());
        cfg.validate().unwrap();

        cfg.apply_line("identity = no-such-identity").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("no-such-identity"));
    }
}
