//! Textual specs for fixtures and profiles: `kind:key=value,key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use tmlab_core::fixtures::RadialShape;
use tmlab_core::Profile;

use crate::CliError;

fn split_spec(text: &str) -> Result<(&str, BTreeMap<&str, f64>), CliError> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut args = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("expected key=value in {text:?}, got {item:?}")))?;
        let v: f64 = v.trim().parse().map_err(|e| CliError::Parse(format!("{k} in {text:?}: {e}")))?;
        args.insert(k.trim(), v);
    }
    Ok((kind.trim(), args))
}

fn take(args: &mut BTreeMap<&str, f64>, key: &str, spec: &str) -> Result<f64, CliError> {
    args.remove(key).ok_or_else(|| CliError::Parse(format!("missing `{key}` in {spec:?}")))
}

fn no_extra(args: &BTreeMap<&str, f64>, spec: &str) -> Result<(), CliError> {
    match args.keys().next() {
        Some(k) => Err(CliError::Parse(format!("unknown key `{k}` in {spec:?}"))),
        None => Ok(()),
    }
}

/// A radial fixture, or the zero field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec(pub Option<RadialShape>);

impl FromStr for ShapeSpec {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let (kind, mut a) = split_spec(text)?;
        let shape = match kind {
            "zero" => None,
            "gaussian" => Some(RadialShape::Gaussian {
                amp: take(&mut a, "amp", text)?,
                sigma: take(&mut a, "sigma", text)?,
            }),
            "bump" => Some(RadialShape::Bump {
                amp: take(&mut a, "amp", text)?,
                radius: take(&mut a, "radius", text)?,
            }),
            "smooth-bump" => Some(RadialShape::SmoothBump {
                amp: take(&mut a, "amp", text)?,
                radius: take(&mut a, "radius", text)?,
            }),
            "moser" => Some(RadialShape::Moser {
                a: take(&mut a, "a", text)?,
                radius: take(&mut a, "radius", text)?,
            }),
            "disk" => Some(RadialShape::Disk {
                amp: take(&mut a, "amp", text)?,
                radius: take(&mut a, "radius", text)?,
            }),
            other => return Err(CliError::Parse(format!("unknown shape `{other}`"))),
        };
        no_extra(&a, text)?;
        Ok(ShapeSpec(shape))
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(f, "zero"),
            Some(RadialShape::Gaussian { amp, sigma }) => write!(f, "gaussian:amp={amp},sigma={sigma}"),
            Some(RadialShape::Bump { amp, radius }) => write!(f, "bump:amp={amp},radius={radius}"),
            Some(RadialShape::SmoothBump { amp, radius }) => {
                write!(f, "smooth-bump:amp={amp},radius={radius}")
            }
            Some(RadialShape::Moser { a, radius }) => write!(f, "moser:a={a},radius={radius}"),
            Some(RadialShape::Disk { amp, radius }) => write!(f, "disk:amp={amp},radius={radius}"),
        }
    }
}

/// `moser:a=..,amp=..` or a path to a profile CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Moser { a: f64, amp: f64 },
    File(String),
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile, CliError> {
        match self {
            ProfileSpec::Moser { a, amp } => Ok(Profile::moser(*a, *amp)?),
            ProfileSpec::File(path) => Ok(Profile::load(path)?),
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(ProfileSpec::File(path.to_string()));
        }
        let (kind, mut a) = split_spec(text)?;
        if kind != "moser" {
            return Err(CliError::Parse(format!("unknown profile `{kind}`")));
        }
        let spec = ProfileSpec::Moser { a: take(&mut a, "a", text)?, amp: a.remove("amp").unwrap_or(1.0) };
        no_extra(&a, text)?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_round_trip() {
        for text in [
            "zero",
            "gaussian:amp=1,sigma=0.5",
            "smooth-bump:amp=0.3,radius=1",
            "moser:a=2,radius=0.5",
            "disk:amp=2,radius=1",
            "bump:amp=0.4,radius=1",
        ] {
            let s: ShapeSpec = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
    }

    #[test]
    fn shape_errors() {
        assert!(matches!("cone:amp=1".parse::<ShapeSpec>(), Err(CliError::Parse(_))));
        assert!(matches!("disk:amp=1".parse::<ShapeSpec>(), Err(CliError::Parse(_))));
        assert!(matches!("disk:amp=1,radius=1,x=2".parse::<ShapeSpec>(), Err(CliError::Parse(_))));
        assert!(matches!("disk:amp=one,radius=1".parse::<ShapeSpec>(), Err(CliError::Parse(_))));
    }

    #[test]
    fn profile_specs() {
        assert_eq!("moser:a=2".parse::<ProfileSpec>().unwrap(), ProfileSpec::Moser { a: 2.0, amp: 1.0 });
        assert_eq!("file:psi.csv".parse::<ProfileSpec>().unwrap(), ProfileSpec::File("psi.csv".into()));
    }
}
