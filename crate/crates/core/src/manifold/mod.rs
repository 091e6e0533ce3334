//! Chart complexes: a set of coordinate charts, identification maps between
//! them, and per-chart orientation forms. Verification grids sample chart
//! domains; descent checks certify that a form or field given on a chart is
//! well defined on the quotient carved out by the identifications.
//!
//! The quotient representation is deliberately minimal: one fundamental
//! domain per chart plus explicit identification maps. Periodic coordinates
//! get their translation map installed automatically; monodromy-type gluings
//! are added by the model constructors. All verifications are pointwise plus
//! pullback/pushforward consistency, which this representation supports
//! exactly.

mod builtins;

pub use builtins::{
    builtin_carriere, builtin_local_chart, builtin_t3_contact, builtin_trivial_open_book,
    CarriereModel, ModelError, OpenBookModel, T3Contact,
};

use crate::chart::{Chart, ChartRef};
use crate::exterior::{GeomError, GeomObject, KForm, SmoothMap};
use crate::verify::report::{GridMeta, ReportBuilder, Verdict, VerificationReport};
use std::collections::BTreeMap;

/// Sampling plan for one chart: per-coordinate counts plus a boundary
/// avoidance margin (a fraction of the span, applied to non-periodic
/// coordinates). Periodic coordinates sample a half-open fundamental
/// interval.
#[derive(Debug, Clone)]
pub struct Grid {
    counts: Vec<usize>,
    margin: f64,
    domain: Option<Vec<(f64, f64)>>,
}

impl Grid {
    pub const DEFAULT_MARGIN: f64 = 0.05;

    pub fn uniform(dim: usize, n: usize) -> Grid {
        assert!(n >= 2, "grids need at least 2 samples per coordinate");
        Grid {
            counts: vec![n; dim],
            margin: Grid::DEFAULT_MARGIN,
            domain: None,
        }
    }

    /// 32 samples per axis up to dimension 3, 8 above that.
    pub fn default_for(chart: &Chart) -> Grid {
        let n = if chart.dim() <= 3 { 32 } else { 8 };
        Grid::uniform(chart.dim(), n)
    }

    pub fn with_counts(counts: Vec<usize>) -> Grid {
        assert!(counts.iter().all(|&n| n >= 2));
        Grid {
            counts,
            margin: Grid::DEFAULT_MARGIN,
            domain: None,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Grid {
        self.margin = margin;
        self
    }

    /// Restrict sampling to an explicit box (used for gluing collars).
    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Grid {
        self.domain = Some(domain);
        self
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Cartesian sample points over the chart domain.
    pub fn points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let dim = chart.dim();
        assert_eq!(
            self.counts.len(),
            dim,
            "grid counts must match chart dimension"
        );
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for (i, spec) in chart.coords.iter().enumerate() {
            let n = self.counts[i];
            let axis = if let Some(domain) = &self.domain {
                let (lo, hi) = domain[i];
                linspace_inclusive(lo, hi, n)
            } else if spec.period.is_some() {
                let step = (spec.max - spec.min) / n as f64;
                (0..n).map(|k| spec.min + step * k as f64).collect()
            } else {
                let span = spec.max - spec.min;
                let lo = spec.min + self.margin * span;
                let hi = spec.max - self.margin * span;
                linspace_inclusive(lo, hi, n)
            };
            axes.push(axis);
        }
        let total: usize = self.counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        loop {
            out.push((0..dim).map(|i| axes[i][idx[i]]).collect());
            let mut k = dim;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn meta(&self, chart: &Chart) -> GridMeta {
        GridMeta {
            chart: chart.name.clone(),
            counts: self.counts.clone(),
            margin: self.margin,
            points: self.counts.iter().product(),
        }
    }
}

fn linspace_inclusive(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

/// Argmax sample of a residual sweep: the point and the value there.
type WorstPoint = Option<(Vec<f64>, f64)>;

/// Charts, identifications, orientation forms and default parameter
/// bindings for one manifold model.
#[derive(Debug, Clone, Default)]
pub struct ChartComplex {
    charts: BTreeMap<String, ChartRef>,
    identifications: Vec<SmoothMap>,
    orientations: BTreeMap<String, KForm>,
    pub params: BTreeMap<String, f64>,
}

impl ChartComplex {
    pub fn new() -> ChartComplex {
        ChartComplex::default()
    }

    /// Add a chart with its orientation form. Translation identifications
    /// for periodic coordinates are installed automatically.
    pub fn add_chart(&mut self, chart: ChartRef, orientation: KForm) -> Result<(), GeomError> {
        assert!(
            orientation.degree() == chart.dim() && orientation.chart().same_as(&chart),
            "orientation must be a top-degree form on the chart"
        );
        for spec in &chart.coords {
            if let Some(p) = spec.period {
                self.identifications
                    .push(SmoothMap::translation(chart.clone(), &spec.name, p)?);
            }
        }
        self.orientations.insert(chart.name.clone(), orientation);
        self.charts.insert(chart.name.clone(), chart);
        Ok(())
    }

    pub fn add_identification(&mut self, map: SmoothMap) {
        assert!(
            self.charts.contains_key(&map.source().name)
                && self.charts.contains_key(&map.target().name),
            "identification endpoints must be declared charts"
        );
        self.identifications.push(map);
    }

    pub fn chart(&self, name: &str) -> Option<&ChartRef> {
        self.charts.get(name)
    }

    pub fn charts(&self) -> impl Iterator<Item = &ChartRef> {
        self.charts.values()
    }

    pub fn identifications(&self) -> &[SmoothMap] {
        &self.identifications
    }

    pub fn orientation(&self, chart_name: &str) -> Option<&KForm> {
        self.orientations.get(chart_name)
    }

    /// Check that every orientation form is nowhere zero on its default
    /// verification grid.
    pub fn validate_orientations(&self) -> Result<(), GeomError> {
        for (name, orient) in &self.orientations {
            let chart = &self.charts[name];
            let compiled = orient.compile(&self.params)?;
            let grid = Grid::default_for(chart);
            for p in grid.points(chart) {
                let v = compiled.max_abs_at(&p);
                if v <= 0.0 || v.is_nan() {
                    return Err(GeomError::Expr(crate::expr::ExprError::Domain(format!(
                        "orientation form on `{name}` vanishes at {p:?}"
                    ))));
                }
            }
        }
        Ok(())
    }

    /// Does `object`, given on a single chart, descend to the quotient?
    ///
    /// Every self-identification of the object's chart is tested: a form must
    /// satisfy `F^* a = a`, a field must satisfy `dF(V(p)) = V(F(p))`, on all
    /// grid samples. Pass iff the largest residual stays below `tol`.
    pub fn check_descends(
        &self,
        object: &GeomObject,
        grid: &Grid,
        tol: f64,
    ) -> Result<VerificationReport, GeomError> {
        let chart = object.chart();
        if !self.charts.contains_key(&chart.name) {
            return Err(GeomError::ChartMismatch {
                expected: "a chart declared in the complex".into(),
                found: chart.name.clone(),
            });
        }
        let mut builder =
            ReportBuilder::new(&format!("descends({})", object.kind())).grid(grid.meta(chart));
        let points = grid.points(chart);
        let mut worst = 0.0f64;
        let mut checked = 0usize;
        for map in &self.identifications {
            if !(map.is_self_map() && map.source().same_as(chart)) {
                continue;
            }
            checked += 1;
            let (residual, witness) = self.map_residual(map, object, object, &points)?;
            builder.add_residual(&map.name, residual);
            if residual > worst {
                worst = residual;
            }
            if residual > tol {
                if let Some((p, v)) = witness {
                    builder.add_witness(&chart.name, &p, v, &format!("violates `{}`", map.name));
                }
            }
        }
        if checked == 0 {
            builder.add_note("no self-identifications on this chart; descent is vacuous".into());
        }
        let verdict = if worst <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(builder.finish(verdict, worst))
    }

    /// Cross-chart compatibility of two representatives under one
    /// identification map: `F^*(target rep) = source rep` for forms,
    /// pushforward matching for fields. Sampling honors the map's domain
    /// restriction (e.g. a collar band).
    pub fn check_map_match(
        &self,
        map: &SmoothMap,
        source_rep: &GeomObject,
        target_rep: &GeomObject,
        grid: &Grid,
        tol: f64,
    ) -> Result<VerificationReport, GeomError> {
        let chart = map.source();
        let grid = match &map.domain {
            Some(domain) => grid.clone().with_domain(domain.clone()),
            None => grid.clone(),
        };
        let points = grid.points(chart);
        let (residual, witness) = self.map_residual(map, source_rep, target_rep, &points)?;
        let mut builder = ReportBuilder::new(&format!("matches_under({})", map.name))
            .grid(grid.meta(chart))
            .residual(&map.name, residual);
        if residual > tol {
            if let Some((p, v)) = witness {
                builder.add_witness(
                    &chart.name,
                    &p,
                    v,
                    &format!("mismatch under `{}`", map.name),
                );
            }
        }
        let verdict = if residual <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(builder.finish(verdict, residual))
    }

    /// Largest mismatch of `F` carrying `source_rep` onto `target_rep` over
    /// the given points, with the argmax point.
    fn map_residual(
        &self,
        map: &SmoothMap,
        source_rep: &GeomObject,
        target_rep: &GeomObject,
        points: &[Vec<f64>],
    ) -> Result<(f64, WorstPoint), GeomError> {
        let mut worst = 0.0f64;
        let mut at: Option<(Vec<f64>, f64)> = None;
        match (source_rep, target_rep) {
            (GeomObject::Form(src), GeomObject::Form(tgt)) => {
                let delta = map.pullback(tgt)?.sub(src)?;
                let compiled = delta.compile(&self.params)?;
                for p in points {
                    let r = compiled.max_abs_at(p);
                    if !r.is_finite() || r > worst {
                        worst = if r.is_finite() { r } else { f64::MAX };
                        at = Some((p.clone(), worst));
                        if !r.is_finite() {
                            break;
                        }
                    }
                }
            }
            (GeomObject::Field(src), GeomObject::Field(tgt)) => {
                let cmap = map.compile(&self.params)?;
                let csrc = src.compile(&self.params)?;
                let ctgt = tgt.compile(&self.params)?;
                for p in points {
                    let pushed = cmap.pushforward(p, &csrc.eval(p));
                    let image = cmap.apply(p);
                    let there = ctgt.eval(&image);
                    let r = pushed
                        .iter()
                        .zip(there.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if !r.is_finite() || r > worst {
                        worst = if r.is_finite() { r } else { f64::MAX };
                        at = Some((p.clone(), worst));
                        if !r.is_finite() {
                            break;
                        }
                    }
                }
            }
            _ => {
                return Err(GeomError::WrongDegree {
                    need: "matching object kinds (both forms or both fields)".into(),
                    got: 0,
                })
            }
        }
        Ok((worst, at))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::CoordSpec;
    use crate::expr::Expr;

    #[test]
    fn grid_sampling_respects_margin_and_periodicity() {
        let chart = Chart::new(
            "c",
            vec![
                CoordSpec::interval("r", 0.0, 1.0),
                CoordSpec::periodic("phi", 1.0),
            ],
        );
        let grid = Grid::with_counts(vec![3, 4]);
        let pts = grid.points(&chart);
        assert_eq!(pts.len(), 12);
        for p in &pts {
            assert!(p[0] >= 0.05 - 1e-12 && p[0] <= 0.95 + 1e-12);
            assert!(p[1] >= 0.0 && p[1] < 1.0);
        }
    }

    #[test]
    fn periodic_translation_auto_added_and_constant_form_descends() {
        let chart = Chart::new("t1", vec![CoordSpec::periodic("x", 1.0)]);
        let mut cc = ChartComplex::new();
        let orient = KForm::coordinate_differential(chart.clone(), "x").unwrap();
        cc.add_chart(chart.clone(), orient).unwrap();
        assert_eq!(cc.identifications().len(), 1);

        let dx = KForm::coordinate_differential(chart.clone(), "x").unwrap();
        let report = cc
            .check_descends(&GeomObject::Form(dx), &Grid::uniform(1, 16), 1e-9)
            .unwrap();
        assert!(report.passed());

        // x itself (as a 0-form) does not descend: x+1 != x.
        let f = KForm::function(chart, Expr::coord("x"));
        let report = cc
            .check_descends(&GeomObject::Form(f), &Grid::uniform(1, 16), 1e-9)
            .unwrap();
        assert!(!report.passed());
        assert!(!report.witnesses.is_empty());
        assert!((report.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_chart_is_an_error() {
        let cc = ChartComplex::new();
        let chart = Chart::new("orphan", vec![CoordSpec::interval("x", 0.0, 1.0)]);
        let f = KForm::function(chart, Expr::one());
        assert!(cc
            .check_descends(&GeomObject::Form(f), &Grid::uniform(1, 2), 1e-9)
            .is_err());
    }
}
