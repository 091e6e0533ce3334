//! Coordinate charts: named coordinates with domain boxes and optional
//! periods. Forms, fields and maps all carry a shared [`ChartRef`].

use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type ChartRef = Arc<Chart>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// `Some(p)` marks the coordinate periodic with period `p`; grids then
    /// sample a half-open fundamental interval and distances wrap.
    pub period: Option<f64>,
}

impl CoordSpec {
    pub fn interval(name: &str, min: f64, max: f64) -> Self {
        CoordSpec {
            name: name.to_owned(),
            min,
            max,
            period: None,
        }
    }

    pub fn periodic(name: &str, period: f64) -> Self {
        CoordSpec {
            name: name.to_owned(),
            min: 0.0,
            max: period,
            period: Some(period),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<CoordSpec>,
}

impl Chart {
    pub fn new(name: &str, coords: Vec<CoordSpec>) -> ChartRef {
        assert!(!coords.is_empty(), "charts need at least one coordinate");
        Arc::new(Chart {
            name: name.to_owned(),
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_names(&self) -> Vec<&str> {
        self.coords.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    /// Charts are compared by name and coordinate list, not by pointer, so
    /// that objects reconstructed from scenario files interoperate.
    pub fn same_as(&self, other: &Chart) -> bool {
        self.name == other.name
            && self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(other.coords.iter())
                .all(|(a, b)| a.name == b.name)
    }

    /// Componentwise distance with periodic wrapping.
    pub fn wrapped_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dim());
        debug_assert_eq!(b.len(), self.dim());
        let mut acc = 0.0;
        for (i, spec) in self.coords.iter().enumerate() {
            let mut d = (a[i] - b[i]).abs();
            if let Some(p) = spec.period {
                d = d.rem_euclid(p);
                d = d.min(p - d);
            }
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Displacement `a - b` with each periodic component mapped to
    /// `(-p/2, p/2]`.
    pub fn wrapped_displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.coords
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let mut d = a[i] - b[i];
                if let Some(p) = spec.period {
                    d = d.rem_euclid(p);
                    if d > p / 2.0 {
                        d -= p;
                    }
                }
                d
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_distance_on_torus() {
        let chart = Chart::new(
            "t2",
            vec![CoordSpec::periodic("x", 1.0), CoordSpec::periodic("y", 1.0)],
        );
        let d = chart.wrapped_distance(&[0.05, 0.0], &[0.95, 0.0]);
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn wrapped_displacement_signs() {
        let chart = Chart::new(
            "c",
            vec![
                CoordSpec::periodic("x", 2.0),
                CoordSpec::interval("r", 0.0, 1.0),
            ],
        );
        let d = chart.wrapped_displacement(&[1.9, 0.3], &[0.1, 0.5]);
        assert!((d[0] - -0.2).abs() < 1e-12);
        assert!((d[1] - -0.2).abs() < 1e-12);
    }
}
