//! Key-value run configuration for `kg-run` and `linearizability`.
//!
//! One `key = value` pair per line; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use tmlab_core::kg::{CauchyData, KgConfig, RadialGrid};

use crate::spec::ShapeSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct KgRunConfig {
    pub radius: f64,
    pub dr: f64,
    pub dt: f64,
    pub t_final: f64,
    pub p: u32,
    pub save_every: usize,
    pub kappa: f64,
    pub u0: ShapeSpec,
    pub u1: ShapeSpec,
}

const KEYS: [&str; 9] = ["R", "dr", "dt", "T", "p", "save_every", "kappa", "u0", "u1"];

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("line {}: expected `key = value`", no + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Parse(format!("line {}: unknown key `{k}`", no + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Parse(format!("line {}: duplicate key `{k}`", no + 1)));
        }
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    map.get(key).map(|v| v.parse::<T>().map_err(|e| CliError::Parse(format!("{key}: {e}")))).transpose()
}

impl KgRunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = parse_pairs(text)?;
        let required = |key: &str| -> Result<f64, CliError> {
            field(&map, key)?.ok_or_else(|| CliError::Parse(format!("missing key `{key}`")))
        };
        let radius = required("R")?;
        let dr = required("dr")?;
        let cfg = KgRunConfig {
            radius,
            dr,
            dt: field(&map, "dt")?.unwrap_or(dr / 4.0),
            t_final: required("T")?,
            p: field(&map, "p")?.unwrap_or(1),
            save_every: field(&map, "save_every")?.unwrap_or(16),
            kappa: field(&map, "kappa")?.unwrap_or(1.0),
            u0: field(&map, "u0")?.unwrap_or(ShapeSpec(None)),
            u1: field(&map, "u1")?.unwrap_or(ShapeSpec(None)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (k, v) in
            [("R", self.radius), ("dr", self.dr), ("dt", self.dt), ("T", self.t_final), ("kappa", self.kappa)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Parse(format!("{k} = {v} must be positive")));
            }
        }
        if self.save_every == 0 {
            return Err(CliError::Parse("save_every must be positive".into()));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "R = {}", self.radius);
        let _ = writeln!(out, "dr = {}", self.dr);
        let _ = writeln!(out, "dt = {}", self.dt);
        let _ = writeln!(out, "T = {}", self.t_final);
        let _ = writeln!(out, "p = {}", self.p);
        let _ = writeln!(out, "save_every = {}", self.save_every);
        let _ = writeln!(out, "kappa = {}", self.kappa);
        let _ = writeln!(out, "u0 = {}", self.u0);
        let _ = writeln!(out, "u1 = {}", self.u1);
        out
    }

    pub fn grid(&self) -> Result<RadialGrid, CliError> {
        Ok(RadialGrid::new(self.radius, self.dr)?)
    }

    pub fn data(&self) -> Result<CauchyData, CliError> {
        Ok(CauchyData::from_shapes(self.grid()?, self.u0.0, self.u1.0))
    }

    pub fn schedule(&self) -> KgConfig {
        let mut c = KgConfig::new(self.p, self.dt, self.t_final);
        c.save_every = self.save_every;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str =
        "# pulse\nR = 12\ndr = 0.015625\nT = 10 # long\np = 2\nu0 = smooth-bump:amp=0.25,radius=1\n";

    #[test]
    fn defaults_and_round_trip() {
        let cfg = KgRunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.dt, 0.015625 / 4.0);
        assert_eq!(cfg.save_every, 16);
        assert_eq!(cfg.u1, ShapeSpec(None));
        let text = cfg.emit();
        assert_eq!(KgRunConfig::parse(&text).unwrap(), cfg);
        assert_eq!(KgRunConfig::parse(&text).unwrap().emit(), text);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(KgRunConfig::parse("R = 1\ndr = 0.1\n").is_err());
        assert!(KgRunConfig::parse("R = 1\ndr = 0.1\nT = 1\nfoo = 2\n").is_err());
        assert!(KgRunConfig::parse("R = 1\nR = 2\ndr = 0.1\nT = 1\n").is_err());
        assert!(KgRunConfig::parse("R = 1\ndr = -0.1\nT = 1\n").is_err());
        assert!(KgRunConfig::parse("R = 1\ndr = 0.1\nT\n").is_err());
    }
}
