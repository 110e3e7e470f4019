//! Named surfaces as written in experiment configs: `ball(r=1)`,
//! `ellipsoid(2,1,1)`, `parabola(0.25)`, `parabola(c=1, orientation=down)`,
//! `plane()`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Hypersurface, Orientation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SurfaceSpec {
    Ball { radius: f64 },
    Ellipsoid { semi_axes: Vec<f64> },
    Parabola { scale: f64, upward: bool },
    Plane,
}

impl SurfaceSpec {
    /// Dimension forced by the surface itself, if any.
    pub fn implied_dim(&self) -> Option<usize> {
        match self {
            SurfaceSpec::Ellipsoid { semi_axes } => Some(semi_axes.len()),
            SurfaceSpec::Parabola { .. } => Some(2),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SurfaceSpec::Ball { .. } | SurfaceSpec::Ellipsoid { .. })
    }

    pub fn build(&self, dim: usize) -> Result<Hypersurface> {
        if let Some(d) = self.implied_dim() {
            if d != dim {
                return Err(Error::InvalidInput(format!("{self} lives in dimension {d}, not {dim}")));
            }
        }
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
        }
        let surface = match self {
            SurfaceSpec::Ball { radius } => Hypersurface::ball(dim, *radius),
            SurfaceSpec::Ellipsoid { semi_axes } => Hypersurface::ellipsoid(semi_axes),
            SurfaceSpec::Parabola { scale, upward } => {
                let o = if *upward { Orientation::AlongGradient } else { Orientation::AgainstGradient };
                Hypersurface::parabola(*scale).with_orientation(o)
            }
            SurfaceSpec::Plane => Hypersurface::plane(dim),
        };
        Ok(surface.with_label(self.to_string()))
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Ball { radius } => write!(f, "ball(r={radius})"),
            SurfaceSpec::Ellipsoid { semi_axes } => {
                let axes: Vec<String> = semi_axes.iter().map(|a| a.to_string()).collect();
                write!(f, "ellipsoid({})", axes.join(","))
            }
            SurfaceSpec::Parabola { scale, upward: true } => write!(f, "parabola({scale})"),
            SurfaceSpec::Parabola { scale, upward: false } => write!(f, "parabola(c={scale},orientation=down)"),
            SurfaceSpec::Plane => write!(f, "plane()"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be a positive number, got {v}")))
    }
}

impl FromStr for SurfaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse surface `{s}`; expected name(args)"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let inner = &s[open + 1..s.len() - 1];

        let mut positional = Vec::new();
        let mut named = Vec::new();
        for arg in inner.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            match arg.split_once('=') {
                Some((k, v)) => named.push((k.trim().to_ascii_lowercase(), v.trim().to_string())),
                None => positional.push(arg.to_string()),
            }
        }
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::InvalidInput(format!("`{v}` is not a number in `{s}`")))
        };
        let unknown = |k: &str| Error::InvalidInput(format!("unknown parameter `{k}` in `{s}`"));

        match name.as_str() {
            "ball" | "sphere" | "disk" => {
                let mut radius = 1.0;
                if let Some(p) = positional.first() {
                    radius = num(p)?;
                }
                for (k, v) in &named {
                    match k.as_str() {
                        "r" | "radius" => radius = num(v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(SurfaceSpec::Ball { radius: positive("radius", radius)? })
            }
            "ellipsoid" => {
                if let Some((k, _)) = named.first() {
                    return Err(unknown(k));
                }
                let semi_axes = positional
                    .iter()
                    .map(|p| num(p).and_then(|a| positive("semi-axis", a)))
                    .collect::<Result<Vec<_>>>()?;
                if semi_axes.len() < 2 {
                    return Err(Error::InvalidInput(format!("`{s}` needs at least two semi-axes")));
                }
                Ok(SurfaceSpec::Ellipsoid { semi_axes })
            }
            "parabola" => {
                let mut scale = 0.25;
                let mut upward = true;
                if let Some(p) = positional.first() {
                    scale = num(p)?;
                }
                for (k, v) in &named {
                    match k.as_str() {
                        "c" | "scale" => scale = num(v)?,
                        "orientation" => {
                            upward = match v.to_ascii_lowercase().as_str() {
                                "up" | "upward" => true,
                                "down" | "downward" => false,
                                _ => return Err(Error::InvalidInput(format!("orientation must be up or down in `{s}`"))),
                            }
                        }
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(SurfaceSpec::Parabola { scale: positive("parabola scale", scale)?, upward })
            }
            "plane" => {
                if let Some(p) = positional.first() {
                    return Err(unknown(p));
                }
                if let Some((k, _)) = named.first() {
                    return Err(unknown(k));
                }
                Ok(SurfaceSpec::Plane)
            }
            _ => Err(Error::InvalidInput(format!("unknown surface `{name}`"))),
        }
    }
}

impl TryFrom<String> for SurfaceSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SurfaceSpec> for String {
    fn from(s: SurfaceSpec) -> String {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_registry_names() {
        assert_eq!("ball(r=1)".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::Ball { radius: 1.0 });
        assert_eq!("sphere(2.5)".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::Ball { radius: 2.5 });
        assert_eq!(
            "ellipsoid(2, 1, 1)".parse::<SurfaceSpec>().unwrap(),
            SurfaceSpec::Ellipsoid { semi_axes: vec![2.0, 1.0, 1.0] }
        );
        assert_eq!(
            "parabola(c=1, orientation=down)".parse::<SurfaceSpec>().unwrap(),
            SurfaceSpec::Parabola { scale: 1.0, upward: false }
        );
        assert_eq!("plane()".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::Plane);
    }

    #[test]
    fn display_round_trips() {
        for s in ["ball(r=1)", "ellipsoid(2,1,0.5)", "parabola(0.25)", "parabola(c=1,orientation=down)", "plane()"] {
            let spec: SurfaceSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<SurfaceSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn rejects_malformed_specs() {
        for s in ["ball", "ball(r=-1)", "torus(1,2)", "ellipsoid(1)", "parabola(k=2)", "ball(r=x)"] {
            assert!(s.parse::<SurfaceSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn dimension_must_match() {
        let p: SurfaceSpec = "parabola(1)".parse().unwrap();
        assert!(p.build(3).is_err());
        assert_eq!(p.build(2).unwrap().dim(), 2);
    }
}
