//! Differential forms over a coordinate chart and the calculus operators:
//! wedge product, exterior derivative, contraction (interior product), Lie
//! derivative via Cartan's formula, and pullback along smooth maps.
//!
//! A [`KForm`] stores its coefficients sparsely, keyed by strictly increasing
//! multi-indices over the chart coordinates; an absent key is a zero
//! coefficient and a degree above the chart dimension is the zero form. All
//! sign bookkeeping happens through permutation parity at operation time.
//! Chart dimensions here are tiny, so clarity wins over packing.

use crate::chart::{Chart, ChartRef};
use crate::expr::{CompiledExpr, Expr, ExprError};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("chart mismatch: expected `{expected}`, found `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("operation needs degree {need}, form has degree {got}")]
    WrongDegree { need: String, got: usize },
    #[error("unknown coordinate `{0}` on chart")]
    UnknownCoordinate(String),
    #[error("smooth map must provide exactly one component per target coordinate, missing `{0}`")]
    MissingComponent(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Multi-index: strictly increasing coordinate indices, length = degree.
pub type MultiIndex = Vec<usize>;

/// Degree-k differential form with symbolic coefficients.
#[derive(Debug, Clone)]
pub struct KForm {
    chart: ChartRef,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, Expr>,
}

impl KForm {
    pub fn zero(chart: ChartRef, degree: usize) -> KForm {
        KForm {
            chart,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// 0-form (scalar function).
    pub fn function(chart: ChartRef, value: Expr) -> KForm {
        let mut form = KForm::zero(chart, 0);
        form.insert(vec![], value);
        form
    }

    /// The coordinate differential `dx` for a named coordinate.
    pub fn coordinate_differential(chart: ChartRef, coord: &str) -> Result<KForm, GeomError> {
        let idx = chart
            .coord_index(coord)
            .ok_or_else(|| GeomError::UnknownCoordinate(coord.to_owned()))?;
        let mut form = KForm::zero(chart, 1);
        form.insert(vec![idx], Expr::one());
        Ok(form)
    }

    /// 1-form from `(coordinate, coefficient)` pairs.
    pub fn one_form(chart: ChartRef, terms: &[(&str, Expr)]) -> Result<KForm, GeomError> {
        let mut form = KForm::zero(chart.clone(), 1);
        for (coord, coeff) in terms {
            let idx = chart
                .coord_index(coord)
                .ok_or_else(|| GeomError::UnknownCoordinate((*coord).to_owned()))?;
            form.add_to(vec![idx], coeff.clone());
        }
        Ok(form)
    }

    pub fn from_coeffs(
        chart: ChartRef,
        degree: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, Expr)>,
    ) -> KForm {
        let mut form = KForm::zero(chart, degree);
        for (idx, c) in coeffs {
            form.add_to(idx, c);
        }
        form
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Expr> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &[usize]) -> Option<&Expr> {
        self.coeffs.get(idx)
    }

    /// Symbolically zero (no stored coefficients after simplification).
    pub fn is_symbolically_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of the volume multi-index for a top-degree form.
    pub fn top_coeff(&self) -> Option<&Expr> {
        if self.degree == self.dim() {
            self.coeffs.get(&(0..self.dim()).collect::<Vec<_>>())
        } else {
            None
        }
    }

    fn insert(&mut self, idx: MultiIndex, coeff: Expr) {
        debug_assert_eq!(idx.len(), self.degree);
        debug_assert!(
            idx.windows(2).all(|w| w[0] < w[1]),
            "multi-index must increase"
        );
        debug_assert!(idx.iter().all(|&i| i < self.dim()));
        if self.degree > self.dim() {
            return;
        }
        let c = coeff.simplify();
        if !c.is_zero_const() {
            self.coeffs.insert(idx, c);
        }
    }

    fn add_to(&mut self, idx: MultiIndex, coeff: Expr) {
        let merged = match self.coeffs.remove(&idx) {
            Some(existing) => existing + coeff,
            None => coeff,
        };
        self.insert(idx, merged);
    }

    fn check_same_chart(&self, other: &Chart) -> Result<(), GeomError> {
        if self.chart.same_as(other) {
            Ok(())
        } else {
            Err(GeomError::ChartMismatch {
                expected: self.chart.name.clone(),
                found: other.name.clone(),
            })
        }
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.check_same_chart(&other.chart)?;
        if self.degree != other.degree {
            return Err(GeomError::WrongDegree {
                need: format!("{}", self.degree),
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.add_to(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.add(&other.scale_const(-1.0))
    }

    pub fn scale(&self, factor: &Expr) -> KForm {
        let mut out = KForm::zero(self.chart.clone(), self.degree);
        for (idx, c) in &self.coeffs {
            out.insert(idx.clone(), factor.clone() * c.clone());
        }
        out
    }

    pub fn scale_const(&self, factor: f64) -> KForm {
        self.scale(&Expr::constant(factor))
    }

    /// Wedge product. Bilinear, graded-anticommutative; degrees add.
    pub fn wedge(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.check_same_chart(&other.chart)?;
        let mut out = KForm::zero(self.chart.clone(), self.degree + other.degree);
        if out.degree > self.dim() {
            return Ok(out);
        }
        for (ia, ca) in &self.coeffs {
            for (ib, cb) in &other.coeffs {
                if let Some((merged, sign)) = merge_indices(ia, ib) {
                    let signed = if sign > 0 {
                        ca.clone() * cb.clone()
                    } else {
                        (ca.clone() * cb.clone()).neg()
                    };
                    out.add_to(merged, signed);
                }
            }
        }
        Ok(out)
    }

    /// `n`-fold wedge power (used for the contact volume `alpha ^ (d alpha)^n`).
    pub fn wedge_power(&self, n: usize) -> Result<KForm, GeomError> {
        if n == 0 {
            return Ok(KForm::function(self.chart.clone(), Expr::one()));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// Exterior derivative; exact coefficient differentiation, degree `k+1`.
    pub fn exterior_derivative(&self) -> Result<KForm, GeomError> {
        let names = self.chart.coord_names();
        let mut out = KForm::zero(self.chart.clone(), self.degree + 1);
        if out.degree > self.dim() {
            return Ok(out);
        }
        for (idx, coeff) in &self.coeffs {
            for (j, name) in names.iter().enumerate() {
                if idx.contains(&j) {
                    continue;
                }
                let dc = coeff.differentiate(name)?;
                if dc.is_zero_const() {
                    continue;
                }
                let (pos, mut new_idx) = insert_index(idx, j);
                let signed = if pos % 2 == 0 { dc } else { dc.neg() };
                out.add_to(std::mem::take(&mut new_idx), signed);
            }
        }
        Ok(out)
    }

    /// Interior product with a vector field; degree drops by one.
    pub fn contract(&self, v: &VecField) -> Result<KForm, GeomError> {
        self.check_same_chart(&v.chart)?;
        if self.degree == 0 {
            return Err(GeomError::WrongDegree {
                need: ">= 1".into(),
                got: 0,
            });
        }
        let mut out = KForm::zero(self.chart.clone(), self.degree - 1);
        for (idx, coeff) in &self.coeffs {
            for (pos, &i) in idx.iter().enumerate() {
                let Some(comp) = v.component_by_index(i) else {
                    continue;
                };
                let mut reduced = idx.clone();
                reduced.remove(pos);
                let term = coeff.clone() * comp.clone();
                out.add_to(reduced, if pos % 2 == 0 { term } else { term.neg() });
            }
        }
        Ok(out)
    }

    /// Lie derivative via Cartan's formula `L_V = i_V d + d i_V`.
    /// For 0-forms this reduces to `i_V d`.
    pub fn lie_derivative(&self, v: &VecField) -> Result<KForm, GeomError> {
        self.check_same_chart(&v.chart)?;
        let term1 = self.exterior_derivative()?.contract(v)?;
        if self.degree == 0 {
            return Ok(term1);
        }
        let term2 = self.contract(v)?.exterior_derivative()?;
        term1.add(&term2)
    }

    /// Compile every coefficient against the chart's coordinate order.
    pub fn compile(&self, params: &BTreeMap<String, f64>) -> Result<CompiledForm, GeomError> {
        let names = self.chart.coord_names();
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (idx, c) in &self.coeffs {
            terms.push((idx.clone(), c.compile(&names, params)?));
        }
        Ok(CompiledForm {
            degree: self.degree,
            dim: self.dim(),
            terms,
        })
    }

    /// Map coefficients through `f` (chart and indices unchanged).
    pub fn map_coeffs(&self, mut f: impl FnMut(&Expr) -> Expr) -> KForm {
        let mut out = KForm::zero(self.chart.clone(), self.degree);
        for (idx, c) in &self.coeffs {
            out.insert(idx.clone(), f(c));
        }
        out
    }

    /// Coefficient table in the scenario-file encoding: comma-separated
    /// coordinate names mapped to expression strings.
    pub fn to_coeff_strings(&self) -> BTreeMap<String, String> {
        let names = self.chart.coord_names();
        self.coeffs
            .iter()
            .map(|(idx, c)| {
                let key: Vec<&str> = idx.iter().map(|&i| names[i]).collect();
                (key.join(","), c.to_string())
            })
            .collect()
    }
}

/// Merge two strictly increasing index sets; `None` when they intersect.
/// The sign is the parity of the merge permutation.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(MultiIndex, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a-entries.
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, if inversions % 2 == 0 { 1 } else { -1 }))
}

/// Insert `j` into a strictly increasing index set; returns the insertion
/// position (parity gives the sign of `dx_j ^ dx_I`).
fn insert_index(idx: &[usize], j: usize) -> (usize, MultiIndex) {
    let pos = idx.iter().take_while(|&&i| i < j).count();
    let mut out = Vec::with_capacity(idx.len() + 1);
    out.extend_from_slice(&idx[..pos]);
    out.push(j);
    out.extend_from_slice(&idx[pos..]);
    (pos, out)
}

/// Vector field with symbolic components; absent components are zero.
#[derive(Debug, Clone)]
pub struct VecField {
    chart: ChartRef,
    comps: BTreeMap<String, Expr>,
}

impl VecField {
    pub fn new(chart: ChartRef, comps: &[(&str, Expr)]) -> Result<VecField, GeomError> {
        let mut map = BTreeMap::new();
        for (name, e) in comps {
            if chart.coord_index(name).is_none() {
                return Err(GeomError::UnknownCoordinate((*name).to_owned()));
            }
            let e = e.simplify();
            if !e.is_zero_const() {
                map.insert((*name).to_owned(), e);
            }
        }
        Ok(VecField { chart, comps: map })
    }

    /// The coordinate field `d/d<coord>`.
    pub fn coordinate_field(chart: ChartRef, coord: &str) -> Result<VecField, GeomError> {
        VecField::new(chart, &[(coord, Expr::one())])
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn components(&self) -> &BTreeMap<String, Expr> {
        &self.comps
    }

    pub fn component_by_index(&self, idx: usize) -> Option<&Expr> {
        let name = &self.chart.coords.get(idx)?.name;
        self.comps.get(name)
    }

    pub fn scale(&self, factor: &Expr) -> VecField {
        let comps = self
            .comps
            .iter()
            .map(|(k, v)| (k.clone(), (factor.clone() * v.clone()).simplify()))
            .collect();
        VecField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn add(&self, other: &VecField) -> Result<VecField, GeomError> {
        if !self.chart.same_as(&other.chart) {
            return Err(GeomError::ChartMismatch {
                expected: self.chart.name.clone(),
                found: other.chart.name.clone(),
            });
        }
        let mut comps = self.comps.clone();
        for (k, v) in &other.comps {
            let merged = match comps.remove(k) {
                Some(e) => (e + v.clone()).simplify(),
                None => v.clone(),
            };
            if !merged.is_zero_const() {
                comps.insert(k.clone(), merged);
            }
        }
        Ok(VecField {
            chart: self.chart.clone(),
            comps,
        })
    }

    pub fn compile(&self, params: &BTreeMap<String, f64>) -> Result<CompiledField, GeomError> {
        let names = self.chart.coord_names();
        let mut comps = Vec::with_capacity(names.len());
        for name in &names {
            comps.push(match self.comps.get(*name) {
                Some(e) => Some(e.compile(&names, params)?),
                None => None,
            });
        }
        Ok(CompiledField { comps })
    }

    /// Component table in the scenario-file encoding.
    pub fn to_component_strings(&self) -> BTreeMap<String, String> {
        self.comps
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }
}

/// Smooth map between charts given by one component expression (in source
/// coordinates) per target coordinate. `domain` optionally restricts where
/// an identification is meant to hold (e.g. a gluing collar).
#[derive(Debug, Clone)]
pub struct SmoothMap {
    pub name: String,
    source: ChartRef,
    target: ChartRef,
    comps: Vec<Expr>,
    pub domain: Option<Vec<(f64, f64)>>,
}

impl SmoothMap {
    pub fn new(
        name: &str,
        source: ChartRef,
        target: ChartRef,
        comps: &[(&str, Expr)],
    ) -> Result<SmoothMap, GeomError> {
        let mut ordered = Vec::with_capacity(target.dim());
        for spec in &target.coords {
            let found = comps
                .iter()
                .find(|(n, _)| *n == spec.name)
                .ok_or_else(|| GeomError::MissingComponent(spec.name.clone()))?;
            ordered.push(found.1.clone().simplify());
        }
        Ok(SmoothMap {
            name: name.to_owned(),
            source,
            target,
            comps: ordered,
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> SmoothMap {
        self.domain = Some(domain);
        self
    }

    pub fn identity(chart: ChartRef) -> SmoothMap {
        let comps = chart.coords.iter().map(|c| Expr::coord(&c.name)).collect();
        SmoothMap {
            name: "identity".into(),
            source: chart.clone(),
            target: chart,
            comps,
            domain: None,
        }
    }

    /// Self-map translating one coordinate by a constant.
    pub fn translation(chart: ChartRef, coord: &str, delta: f64) -> Result<SmoothMap, GeomError> {
        if chart.coord_index(coord).is_none() {
            return Err(GeomError::UnknownCoordinate(coord.to_owned()));
        }
        let comps = chart
            .coords
            .iter()
            .map(|c| {
                if c.name == coord {
                    Expr::coord(&c.name) + Expr::constant(delta)
                } else {
                    Expr::coord(&c.name)
                }
            })
            .collect();
        Ok(SmoothMap {
            name: format!("shift_{coord}"),
            source: chart.clone(),
            target: chart,
            comps,
            domain: None,
        })
    }

    pub fn source(&self) -> &ChartRef {
        &self.source
    }

    pub fn target(&self) -> &ChartRef {
        &self.target
    }

    pub fn is_self_map(&self) -> bool {
        self.source.same_as(&self.target)
    }

    pub fn component(&self, target_coord: &str) -> Option<&Expr> {
        self.target
            .coord_index(target_coord)
            .map(|i| &self.comps[i])
    }

    /// Pullback of a form on the target chart to the source chart:
    /// substitute components into coefficients and wedge the differentials
    /// of the components. Commutes with the exterior derivative.
    pub fn pullback(&self, form: &KForm) -> Result<KForm, GeomError> {
        if !form.chart().same_as(&self.target) {
            return Err(GeomError::ChartMismatch {
                expected: self.target.name.clone(),
                found: form.chart().name.clone(),
            });
        }
        let subs: BTreeMap<String, Expr> = self
            .target
            .coords
            .iter()
            .zip(self.comps.iter())
            .map(|(spec, comp)| (spec.name.clone(), comp.clone()))
            .collect();

        // Differentials of the components, as 1-forms on the source chart.
        let mut comp_differentials: Vec<Option<KForm>> = Vec::with_capacity(self.target.dim());
        for comp in &self.comps {
            let mut df = KForm::zero(self.source.clone(), 1);
            for (j, name) in self.source.coord_names().iter().enumerate() {
                let dc = comp.differentiate(name)?;
                if !dc.is_zero_const() {
                    df.add_to(vec![j], dc);
                }
            }
            comp_differentials.push(Some(df));
        }

        let mut out = KForm::zero(self.source.clone(), form.degree());
        if form.degree() > self.source.dim() {
            return Ok(out);
        }
        for (idx, coeff) in form.coeffs() {
            let pulled_coeff = coeff.substitute(&subs);
            let mut wedge = KForm::function(self.source.clone(), pulled_coeff);
            for &i in idx {
                wedge = wedge.wedge(comp_differentials[i].as_ref().unwrap())?;
            }
            out = out.add(&wedge)?;
        }
        Ok(out)
    }

    /// Compile the map and its Jacobian for numeric use.
    pub fn compile(&self, params: &BTreeMap<String, f64>) -> Result<CompiledMap, GeomError> {
        let names = self.source.coord_names();
        let mut comps = Vec::with_capacity(self.comps.len());
        let mut jac = Vec::with_capacity(self.comps.len());
        for comp in &self.comps {
            comps.push(comp.compile(&names, params)?);
            let mut row = Vec::with_capacity(names.len());
            for name in &names {
                row.push(comp.differentiate(name)?.compile(&names, params)?);
            }
            jac.push(row);
        }
        Ok(CompiledMap { comps, jac })
    }
}

/// A form or a field; scenario objects and descent checks handle both.
#[derive(Debug, Clone)]
pub enum GeomObject {
    Form(KForm),
    Field(VecField),
}

impl GeomObject {
    pub fn chart(&self) -> &ChartRef {
        match self {
            GeomObject::Form(f) => f.chart(),
            GeomObject::Field(v) => v.chart(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeomObject::Form(_) => "form",
            GeomObject::Field(_) => "field",
        }
    }
}

/// Numeric evaluator for a form's coefficients.
#[derive(Debug)]
pub struct CompiledForm {
    pub degree: usize,
    pub dim: usize,
    terms: Vec<(MultiIndex, CompiledExpr)>,
}

impl CompiledForm {
    pub fn coeffs_at(&self, point: &[f64]) -> Vec<(&[usize], f64)> {
        self.terms
            .iter()
            .map(|(idx, c)| (idx.as_slice(), c.eval(point)))
            .collect()
    }

    /// Largest absolute coefficient value at a point.
    pub fn max_abs_at(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(_, c)| c.eval(point).abs())
            .fold(0.0, f64::max)
    }

    /// Value of the form on `k` tangent vectors at `point`.
    pub fn apply_to_vectors(&self, point: &[f64], vectors: &[Vec<f64>]) -> f64 {
        debug_assert_eq!(vectors.len(), self.degree);
        let k = self.degree;
        if k == 0 {
            return self.terms.first().map_or(0.0, |(_, c)| c.eval(point));
        }
        let mut acc = 0.0;
        for (idx, coeff) in &self.terms {
            // det of the k x k minor: rows = idx, columns = vectors.
            let mut m = nalgebra::DMatrix::<f64>::zeros(k, k);
            for (r, &row) in idx.iter().enumerate() {
                for (c, v) in vectors.iter().enumerate() {
                    m[(r, c)] = v[row];
                }
            }
            acc += coeff.eval(point) * m.determinant();
        }
        acc
    }

    /// Skew matrix `omega(d_i, d_j)` of a 2-form at a point.
    pub fn skew_matrix_at(&self, point: &[f64]) -> nalgebra::DMatrix<f64> {
        debug_assert_eq!(self.degree, 2);
        let mut m = nalgebra::DMatrix::<f64>::zeros(self.dim, self.dim);
        for (idx, coeff) in &self.terms {
            let v = coeff.eval(point);
            m[(idx[0], idx[1])] = v;
            m[(idx[1], idx[0])] = -v;
        }
        m
    }
}

/// Numeric evaluator for a vector field.
#[derive(Debug)]
pub struct CompiledField {
    comps: Vec<Option<CompiledExpr>>,
}

impl CompiledField {
    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.comps
            .iter()
            .map(|c| c.as_ref().map_or(0.0, |e| e.eval(point)))
            .collect()
    }
}

/// Numeric evaluator for a smooth map and its Jacobian.
#[derive(Debug)]
pub struct CompiledMap {
    comps: Vec<CompiledExpr>,
    jac: Vec<Vec<CompiledExpr>>,
}

impl CompiledMap {
    pub fn apply(&self, point: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(point)).collect()
    }

    pub fn jacobian(&self, point: &[f64]) -> nalgebra::DMatrix<f64> {
        let rows = self.jac.len();
        let cols = self.jac.first().map_or(0, Vec::len);
        nalgebra::DMatrix::from_fn(rows, cols, |i, j| self.jac[i][j].eval(point))
    }

    pub fn pushforward(&self, point: &[f64], v: &[f64]) -> Vec<f64> {
        let j = self.jacobian(point);
        let v = nalgebra::DVector::from_column_slice(v);
        (j * v).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::CoordSpec;

    fn box3() -> ChartRef {
        Chart::new(
            "box",
            vec![
                CoordSpec::interval("x", 0.0, 1.0),
                CoordSpec::interval("y", 0.0, 1.0),
                CoordSpec::interval("z", 0.0, 1.0),
            ],
        )
    }

    fn dx(chart: &ChartRef, c: &str) -> KForm {
        KForm::coordinate_differential(chart.clone(), c).unwrap()
    }

    #[test]
    fn wedge_antisymmetry() {
        let chart = box3();
        let dxdx = dx(&chart, "x").wedge(&dx(&chart, "x")).unwrap();
        assert!(dxdx.is_symbolically_zero());

        let dxdy = dx(&chart, "x").wedge(&dx(&chart, "y")).unwrap();
        let dydx = dx(&chart, "y").wedge(&dx(&chart, "x")).unwrap();
        let sum = dxdy.add(&dydx).unwrap();
        assert!(sum.is_symbolically_zero(), "dx^dy + dy^dx should cancel");
    }

    #[test]
    fn wedge_chart_mismatch_errors() {
        let a = dx(&box3(), "x");
        let other = Chart::new("other", vec![CoordSpec::interval("u", 0.0, 1.0)]);
        let b = dx(&other, "u");
        assert!(matches!(a.wedge(&b), Err(GeomError::ChartMismatch { .. })));
    }

    #[test]
    fn exterior_derivative_product_rule() {
        // d(x dy) = dx ^ dy
        let chart = box3();
        let form = dx(&chart, "y").scale(&Expr::coord("x"));
        let d = form.exterior_derivative().unwrap();
        assert_eq!(d.degree(), 2);
        let c = d.coeff(&[0, 1]).expect("dx^dy coefficient");
        assert_eq!(c.as_const(), Some(1.0));
        assert_eq!(d.coeffs().len(), 1);
    }

    #[test]
    fn d_squared_is_zero_symbolically_on_smooth_coeffs() {
        let chart = box3();
        let form = KForm::one_form(
            chart.clone(),
            &[
                ("x", Expr::sin(Expr::coord("y") * Expr::coord("z"))),
                ("y", Expr::coord("x") * Expr::coord("x") * Expr::coord("z")),
            ],
        )
        .unwrap();
        let dd = form
            .exterior_derivative()
            .unwrap()
            .exterior_derivative()
            .unwrap();
        assert!(dd.is_symbolically_zero(), "dd = {:?}", dd.coeffs());
    }

    #[test]
    fn contraction_dual_pairing() {
        let chart = box3();
        let dz = dx(&chart, "z");
        let ez = VecField::coordinate_field(chart.clone(), "z").unwrap();
        let pairing = dz.contract(&ez).unwrap();
        assert_eq!(pairing.coeff(&[]).and_then(Expr::as_const), Some(1.0));
    }

    #[test]
    fn contraction_on_scalar_errors() {
        let chart = box3();
        let f = KForm::function(chart.clone(), Expr::coord("x"));
        let v = VecField::coordinate_field(chart, "x").unwrap();
        assert!(matches!(f.contract(&v), Err(GeomError::WrongDegree { .. })));
    }

    #[test]
    fn contraction_alternating_signs() {
        // i_V (dx ^ dy) = V_x dy - V_y dx
        let chart = box3();
        let omega = dx(&chart, "x").wedge(&dx(&chart, "y")).unwrap();
        let v = VecField::new(
            chart.clone(),
            &[("x", Expr::constant(2.0)), ("y", Expr::constant(3.0))],
        )
        .unwrap();
        let c = omega.contract(&v).unwrap();
        assert_eq!(c.coeff(&[1]).and_then(Expr::as_const), Some(2.0));
        assert_eq!(c.coeff(&[0]).and_then(Expr::as_const), Some(-3.0));
    }

    #[test]
    fn lie_derivative_of_constant_form_along_constant_field() {
        let chart = box3();
        let form = dx(&chart, "x");
        let v = VecField::coordinate_field(chart, "x").unwrap();
        let l = form.lie_derivative(&v).unwrap();
        assert!(l.is_symbolically_zero());
    }

    #[test]
    fn pullback_along_identity() {
        let chart = box3();
        let form = dx(&chart, "x").scale(&Expr::cos(Expr::coord("z")));
        let id = SmoothMap::identity(chart);
        let pulled = id.pullback(&form).unwrap();
        let diff = pulled.sub(&form).unwrap();
        assert!(diff.is_symbolically_zero());
    }

    #[test]
    fn pullback_of_projection_differential() {
        // pi(b, r, phi) = phi pulls dphi_base back to dphi.
        let tube = Chart::new(
            "tube",
            vec![
                CoordSpec::periodic("theta", 1.0),
                CoordSpec::interval("r", 0.0, 1.0),
                CoordSpec::periodic("phi", std::f64::consts::TAU),
            ],
        );
        let base = Chart::new(
            "base",
            vec![CoordSpec::periodic("s", std::f64::consts::TAU)],
        );
        let pi = SmoothMap::new(
            "pi",
            tube.clone(),
            base.clone(),
            &[("s", Expr::coord("phi"))],
        )
        .unwrap();
        let ds = KForm::coordinate_differential(base, "s").unwrap();
        let pulled = pi.pullback(&ds).unwrap();
        let dphi = KForm::coordinate_differential(tube, "phi").unwrap();
        assert!(pulled.sub(&dphi).unwrap().is_symbolically_zero());
    }

    #[test]
    fn pullback_commutes_with_d_on_an_instance() {
        let chart = box3();
        let other = Chart::new(
            "src",
            vec![
                CoordSpec::interval("u", 0.0, 1.0),
                CoordSpec::interval("v", 0.0, 1.0),
            ],
        );
        let f = SmoothMap::new(
            "f",
            other.clone(),
            chart.clone(),
            &[
                ("x", Expr::coord("u") * Expr::coord("v")),
                ("y", Expr::sin(Expr::coord("u"))),
                ("z", Expr::coord("v")),
            ],
        )
        .unwrap();
        let alpha = dx(&chart, "y").scale(&Expr::coord("x"));
        let lhs = f.pullback(&alpha.exterior_derivative().unwrap()).unwrap();
        let rhs = f.pullback(&alpha).unwrap().exterior_derivative().unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        // Symbolic cancellation may leave a residue the simplifier cannot
        // see; check numerically on a few points.
        let compiled = diff.compile(&BTreeMap::new()).unwrap();
        for p in [[0.2, 0.3], [0.7, 0.9], [0.5, 0.1]] {
            assert!(compiled.max_abs_at(&p) < 1e-12);
        }
    }

    #[test]
    fn coeff_strings_round_trip_through_the_parser() {
        use crate::expr::{parse_expr, SymbolTable};
        let chart = box3();
        let omega = dx(&chart, "x")
            .scale(&(Expr::coord("y") + Expr::constant(2.0)))
            .wedge(&dx(&chart, "z"))
            .unwrap();
        let table = SymbolTable::new(&["x", "y", "z"], &[], &[]);
        let mut rebuilt = KForm::zero(chart.clone(), 2);
        for (key, src) in omega.to_coeff_strings() {
            let idx: Vec<usize> = key
                .split(',')
                .map(|n| chart.coord_index(n).unwrap())
                .collect();
            rebuilt = rebuilt
                .add(&KForm::from_coeffs(
                    chart.clone(),
                    2,
                    [(idx, parse_expr(&src, &table).unwrap())],
                ))
                .unwrap();
        }
        let delta = rebuilt
            .sub(&omega)
            .unwrap()
            .compile(&BTreeMap::new())
            .unwrap();
        for p in [[0.1, 0.2, 0.3], [0.9, 0.4, 0.6]] {
            assert!(delta.max_abs_at(&p) < 1e-12);
        }

        let v = VecField::new(
            chart.clone(),
            &[
                ("x", Expr::sin(Expr::coord("z"))),
                ("y", Expr::constant(-2.0)),
            ],
        )
        .unwrap();
        let strings = v.to_component_strings();
        assert_eq!(strings["y"], "-2");
        assert!(strings["x"].contains("sin"));
    }

    #[test]
    fn apply_to_vectors_matches_determinant() {
        let chart = box3();
        let omega = dx(&chart, "x").wedge(&dx(&chart, "y")).unwrap();
        let compiled = omega.compile(&BTreeMap::new()).unwrap();
        let v1 = vec![1.0, 0.0, 0.0];
        let v2 = vec![0.0, 2.0, 0.0];
        let val = compiled.apply_to_vectors(&[0.5, 0.5, 0.5], &[v1, v2]);
        assert!((val - 2.0).abs() < 1e-14);
    }
}
