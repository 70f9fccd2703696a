//! One-dimensional evaluation grids for the inequality scans.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    /// Equal ratios between neighbours; needs `0 < min`.
    Geometric,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "lin" | "linear" => Ok(Self::Uniform),
            "geometric" | "geom" | "log" => Ok(Self::Geometric),
            other => Err(Error::Input(format!("unknown spacing `{other}`"))),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Geometric => "geometric",
        })
    }
}

/// `count` points from `min` to `max` inclusive. Each pinned point replaces
/// its nearest interior neighbour, so the point count never changes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pins: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let axis = Self {
            name: name.to_string(),
            min,
            max,
            count,
            spacing,
            pins: Vec::new(),
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn uniform(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(name, min, max, count, Spacing::Uniform)
    }

    pub fn geometric(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(name, min, max, count, Spacing::Geometric)
    }

    /// Pins outside `[min, max]` are dropped.
    pub fn pin(mut self, point: f64) -> Self {
        self.pins.push(point);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Input(format!("axis {}: bounds must be finite", self.name)));
        }
        if !(self.min < self.max) {
            return Err(Error::Input(format!(
                "axis {}: need min < max, got {}..{}",
                self.name, self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(Error::Input(format!(
                "axis {}: need at least 2 points, got {}",
                self.name, self.count
            )));
        }
        if self.spacing == Spacing::Geometric && self.min <= 0.0 {
            return Err(Error::Input(format!(
                "axis {}: geometric spacing needs min > 0, got {}",
                self.name, self.min
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        let last = (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 {
                    self.min
                } else if i == n - 1 {
                    self.max
                } else {
                    let s = i as f64 / last;
                    match self.spacing {
                        Spacing::Uniform => self.min + (self.max - self.min) * s,
                        Spacing::Geometric => self.min * (self.max / self.min).powf(s),
                    }
                }
            })
            .collect();
        for &p in &self.pins {
            if !(p > self.min && p < self.max) || n < 3 || pts.contains(&p) {
                continue;
            }
            let nearest = (1..n - 1)
                .min_by(|&a, &b| (pts[a] - p).abs().total_cmp(&(pts[b] - p).abs()))
                .expect("interior point");
            // Keep the grid strictly increasing.
            if pts[nearest - 1] < p && p < pts[nearest + 1] {
                pts[nearest] = p;
            }
        }
        pts
    }

    /// Parse `MIN:MAX:COUNT[:spacing]`, keeping this axis's spacing when omitted.
    pub fn with_override(&self, spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(Error::Input(format!(
                "grid override `{spec}` must look like MIN:MAX:COUNT[:spacing]"
            )));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad number `{s}` in `{spec}`: {e}")))
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Input(format!("bad count `{}` in `{spec}`: {e}", parts[2])))?;
        let spacing = match parts.get(3) {
            Some(s) => s.parse()?,
            None => self.spacing,
        };
        let mut axis = Self::new(&self.name, num(parts[0])?, num(parts[1])?, count, spacing)?;
        axis.pins = self.pins.clone();
        Ok(axis)
    }

    pub fn describe(&self) -> String {
        format!(
            "{}=[{}, {}] x{} {}",
            self.name, self.min, self.max, self.count, self.spacing
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        for spacing in [Spacing::Uniform, Spacing::Geometric] {
            let a = Axis::new("u", 0.3, 12.0, 400, spacing).unwrap();
            let p = a.points();
            assert_eq!(p.len(), 400);
            assert_eq!(p[0], 0.3);
            assert_eq!(p[399], 12.0);
            assert!(p.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn pins_replace_neighbours() {
        let a = Axis::uniform("t", 1.0, 4.0, 10).unwrap().pin(2.0).pin(std::f64::consts::E);
        let p = a.points();
        assert_eq!(p.len(), 10);
        assert!(p.contains(&2.0));
        assert!(p.contains(&std::f64::consts::E));
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn overrides_parse_and_validate() {
        let a = Axis::geometric("s", 1.0, 8.0, 400).unwrap();
        let b = a.with_override("1:4:50").unwrap();
        assert_eq!((b.min, b.max, b.count, b.spacing), (1.0, 4.0, 50, Spacing::Geometric));
        let c = a.with_override("-1:4:50:uniform").unwrap();
        assert_eq!(c.spacing, Spacing::Uniform);
        assert!(a.with_override("-1:4:50").is_err());
        assert!(a.with_override("4:1:50").is_err());
        assert!(a.with_override("1:4:1").is_err());
        assert!(a.with_override("1:4").is_err());
        assert!(a.with_override("1:4:5:cubic").is_err());
    }
}
