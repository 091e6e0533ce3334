//! TOML scenario files.
//!
//! A scenario declares a model (built-in by name, or an inline chart
//! complex), optional parameters and bump profiles, named objects with
//! expression-string coefficients, and a task list. The full grammar is
//! documented in `docs/scenario-format.md`; the shape in brief:
//!
//! ```toml
//! name = "demo"
//! model = "local-chart"            # or { builtin = "carriere", matrix = [[2,1],[1,1]] }
//!
//! [grid]
//! samples = 16                     # per-axis sample count
//! tolerance = 1e-9                 # residual tolerance
//! seed = 0                         # randomized suites
//!
//! [params]
//! k = 2.5                          # symbolic parameters, bound at evaluation
//!
//! [[bumps]]
//! name = "f"
//! flat_end = 0.25
//! class = "polynomial-c2"          # or "exponential-flat"
//!
//! [[objects]]
//! name = "beta"
//! kind = "form"                    # or "field"
//! chart = "box"
//! coeffs = { "y" = "k * x", "z" = "1" }   # multi-index -> expression
//!
//! [[tasks]]
//! op = "is_contact"
//! form = "beta"
//! ```
//!
//! Multi-index keys are comma-separated coordinate names in chart order
//! (`"x,y"` for a 2-form component); the empty key addresses the scalar
//! coefficient of a 0-form. Inline complexes replace `model` with
//! `[[charts]]` and `[[identifications]]` tables.

use super::{ModelBundle, Scenario, ScenarioError, Task};
use crate::chart::{Chart, CoordSpec};
use crate::expr::{parse_expr, BumpClass, BumpSpec, Expr, SymbolTable};
use crate::exterior::{GeomObject, KForm, SmoothMap, VecField};
use crate::manifold::ChartComplex;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    model: Option<RawModel>,
    #[serde(default)]
    charts: Vec<RawChart>,
    #[serde(default)]
    identifications: Vec<RawIdentification>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    bumps: Vec<RawBump>,
    grid: Option<RawGrid>,
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    tasks: Vec<Task>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawModel {
    Name(String),
    Detailed {
        builtin: String,
        matrix: Option<[[i64; 2]; 2]>,
        dim: Option<usize>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    name: String,
    coords: Vec<RawCoord>,
    /// Coefficient expression of the orientation form against
    /// `dx_1 ^ ... ^ dx_n`; defaults to `1`.
    orientation: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoord {
    name: String,
    min: Option<f64>,
    max: Option<f64>,
    period: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIdentification {
    name: String,
    source: String,
    target: String,
    map: BTreeMap<String, String>,
    domain: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBump {
    name: String,
    flat_end: f64,
    class: Option<BumpClass>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    samples: Option<usize>,
    tolerance: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    name: String,
    kind: String,
    chart: String,
    #[serde(default)]
    coeffs: BTreeMap<String, String>,
    #[serde(default)]
    components: BTreeMap<String, String>,
}

/// Load a scenario from a file path.
pub fn load_path(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(
        &text,
        path.file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario"),
    )
}

/// Parse scenario text. Parse and validation problems carry a location
/// when the TOML layer provides one.
pub fn load_str(text: &str, default_name: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        message: e.message().to_owned(),
        location: e.span().map(|span| line_col(text, span.start)),
    })?;
    lower(raw, default_name)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn lower(raw: RawScenario, default_name: &str) -> Result<Scenario, ScenarioError> {
    let mut model = match (&raw.model, raw.charts.is_empty()) {
        (Some(RawModel::Name(name)), _) => ModelBundle::from_builtin(name, None, None)?,
        (
            Some(RawModel::Detailed {
                builtin,
                matrix,
                dim,
            }),
            _,
        ) => ModelBundle::from_builtin(builtin, *matrix, *dim)?,
        (None, false) => inline_model(&raw)?,
        (None, true) => {
            return Err(ScenarioError::Parse {
                message: "scenario needs a `model` or inline `[[charts]]`".into(),
                location: None,
            })
        }
    };
    for (k, v) in &raw.params {
        model.complex.params.insert(k.clone(), *v);
    }

    let mut bumps: BTreeMap<String, BumpSpec> = BTreeMap::new();
    for b in &raw.bumps {
        let spec =
            BumpSpec::new(b.flat_end, b.class.unwrap_or(BumpClass::PolynomialC2)).map_err(|e| {
                ScenarioError::BadObject {
                    name: b.name.clone(),
                    reason: e.to_string(),
                }
            })?;
        bumps.insert(b.name.clone(), spec);
    }

    for obj in &raw.objects {
        let parsed = lower_object(obj, &model.complex, &bumps)?;
        model.objects.insert(obj.name.clone(), parsed);
    }

    // Validate task references eagerly so unknown names fail at load time.
    for (index, task) in raw.tasks.iter().enumerate() {
        validate_task(task, index, &model)?;
    }

    let grid = raw.grid.as_ref();
    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| default_name.to_owned()),
        description: raw.description.unwrap_or_default(),
        model,
        grid_samples: grid.and_then(|g| g.samples),
        tolerance: grid.and_then(|g| g.tolerance),
        seed: grid.and_then(|g| g.seed).unwrap_or(0),
        tasks: raw.tasks,
    })
}

fn inline_model(raw: &RawScenario) -> Result<ModelBundle, ScenarioError> {
    let mut complex = ChartComplex::new();
    let empty_bumps = BTreeMap::new();
    for rc in &raw.charts {
        let coords: Vec<CoordSpec> = rc
            .coords
            .iter()
            .map(|c| match c.period {
                Some(p) => CoordSpec::periodic(&c.name, p),
                None => CoordSpec::interval(&c.name, c.min.unwrap_or(0.0), c.max.unwrap_or(1.0)),
            })
            .collect();
        let chart = Chart::new(&rc.name, coords);
        let table = symbol_table(&chart, &raw.params, &empty_bumps);
        let coeff = match &rc.orientation {
            Some(src) => parse_in(src, &table, &rc.name)?,
            None => Expr::one(),
        };
        let mut orientation = KForm::function(chart.clone(), coeff);
        for spec in &chart.coords {
            orientation =
                orientation.wedge(&KForm::coordinate_differential(chart.clone(), &spec.name)?)?;
        }
        complex.add_chart(chart, orientation)?;
    }
    for ri in &raw.identifications {
        let source = complex
            .chart(&ri.source)
            .ok_or_else(|| ScenarioError::BadObject {
                name: ri.name.clone(),
                reason: format!("unknown source chart `{}`", ri.source),
            })?
            .clone();
        let target = complex
            .chart(&ri.target)
            .ok_or_else(|| ScenarioError::BadObject {
                name: ri.name.clone(),
                reason: format!("unknown target chart `{}`", ri.target),
            })?
            .clone();
        let table = symbol_table(&source, &raw.params, &empty_bumps);
        let mut comps: Vec<(String, Expr)> = Vec::new();
        for spec in &target.coords {
            let src = ri
                .map
                .get(&spec.name)
                .ok_or_else(|| ScenarioError::BadObject {
                    name: ri.name.clone(),
                    reason: format!("missing component for target coordinate `{}`", spec.name),
                })?;
            comps.push((spec.name.clone(), parse_in(src, &table, &ri.name)?));
        }
        let comps_ref: Vec<(&str, Expr)> =
            comps.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
        let mut map = SmoothMap::new(&ri.name, source, target, &comps_ref)?;
        if let Some(domain) = &ri.domain {
            map = map.with_domain(domain.iter().map(|d| (d[0], d[1])).collect());
        }
        complex.add_identification(map);
    }
    complex.validate_orientations()?;
    Ok(ModelBundle {
        name: "inline".into(),
        complex,
        objects: BTreeMap::new(),
        carriere: None,
        open_book: None,
    })
}

fn symbol_table(
    chart: &Chart,
    params: &BTreeMap<String, f64>,
    bumps: &BTreeMap<String, BumpSpec>,
) -> SymbolTable {
    SymbolTable::from_owned(
        chart.coords.iter().map(|c| c.name.clone()).collect(),
        params.keys().cloned().collect(),
        bumps.clone(),
    )
}

fn parse_in(src: &str, table: &SymbolTable, owner: &str) -> Result<Expr, ScenarioError> {
    parse_expr(src, table).map_err(|e| ScenarioError::BadObject {
        name: owner.to_owned(),
        reason: format!("in `{src}`: {e}"),
    })
}

fn lower_object(
    obj: &RawObject,
    complex: &ChartComplex,
    bumps: &BTreeMap<String, BumpSpec>,
) -> Result<GeomObject, ScenarioError> {
    let chart = complex
        .chart(&obj.chart)
        .ok_or_else(|| ScenarioError::BadObject {
            name: obj.name.clone(),
            reason: format!("unknown chart `{}`", obj.chart),
        })?
        .clone();
    let table = symbol_table(&chart, &complex.params, bumps);
    match obj.kind.as_str() {
        "form" => {
            let mut coeffs: Vec<(Vec<usize>, Expr)> = Vec::new();
            let mut degree: Option<usize> = None;
            for (key, src) in &obj.coeffs {
                let idx = parse_multi_index(key, &chart, &obj.name)?;
                match degree {
                    None => degree = Some(idx.len()),
                    Some(d) if d == idx.len() => {}
                    Some(d) => {
                        return Err(ScenarioError::BadObject {
                            name: obj.name.clone(),
                            reason: format!(
                                "mixed degrees: key `{key}` has length {}, expected {d}",
                                idx.len()
                            ),
                        })
                    }
                }
                coeffs.push((idx, parse_in(src, &table, &obj.name)?));
            }
            let degree = degree.ok_or_else(|| ScenarioError::BadObject {
                name: obj.name.clone(),
                reason: "a form needs at least one coefficient".into(),
            })?;
            Ok(GeomObject::Form(KForm::from_coeffs(chart, degree, coeffs)))
        }
        "field" => {
            let mut comps = Vec::new();
            for (coord, src) in &obj.components {
                comps.push((coord.as_str(), parse_in(src, &table, &obj.name)?));
            }
            Ok(GeomObject::Field(VecField::new(chart, &comps)?))
        }
        other => Err(ScenarioError::BadObject {
            name: obj.name.clone(),
            reason: format!("unknown kind `{other}` (expected `form` or `field`)"),
        }),
    }
}

/// `"x,z"` -> sorted coordinate indices; must be strictly increasing in
/// chart order. The empty key is the 0-form coefficient.
fn parse_multi_index(key: &str, chart: &Chart, owner: &str) -> Result<Vec<usize>, ScenarioError> {
    if key.is_empty() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for part in key.split(',') {
        let part = part.trim();
        let idx = chart
            .coord_index(part)
            .ok_or_else(|| ScenarioError::BadObject {
                name: owner.to_owned(),
                reason: format!("unknown coordinate `{part}` in multi-index `{key}`"),
            })?;
        out.push(idx);
    }
    if !out.windows(2).all(|w| w[0] < w[1]) {
        return Err(ScenarioError::BadObject {
            name: owner.to_owned(),
            reason: format!(
                "multi-index `{key}` must list coordinates in strictly increasing chart order"
            ),
        });
    }
    Ok(out)
}

fn validate_task(task: &Task, index: usize, model: &ModelBundle) -> Result<(), ScenarioError> {
    let object = |name: &str| -> Result<(), ScenarioError> {
        if model.objects.contains_key(name) {
            Ok(())
        } else {
            Err(ScenarioError::UnknownObject {
                task: index,
                name: name.to_owned(),
            })
        }
    };
    match task {
        Task::IsContact { form }
        | Task::IsPresymplectic { form }
        | Task::IsConfoliation { form }
        | Task::IsPresymplecticConfoliation { form } => object(form),
        Task::IsConnection { form, field } => {
            object(form)?;
            object(field)
        }
        Task::BasicExactnessWitness {
            omega,
            primitive,
            field,
        } => {
            object(omega)?;
            object(primitive)?;
            object(field)
        }
        Task::CheckDescends { object: name } => object(name),
        Task::OrbitIntegral { field, form, .. } => {
            object(field)?;
            object(form)
        }
        Task::NontrivialityWitness { .. } => Ok(()),
        Task::Contactize { phi, eta } => {
            object(phi)?;
            object(eta)
        }
        Task::ConfoliationContactize { alpha, eta } => {
            object(alpha)?;
            object(eta)
        }
        Task::GlueOpenBook { .. } => {
            if model.open_book.is_none() {
                return Err(ScenarioError::WrongModel {
                    task: index,
                    need: "trivial-open-book",
                });
            }
            Ok(())
        }
        Task::CarriereContact { .. } => {
            if model.carriere.is_none() {
                return Err(ScenarioError::WrongModel {
                    task: index,
                    need: "carriere",
                });
            }
            Ok(())
        }
        Task::GeodesibleDemo | Task::ConfoliationCrossCheck { .. } => Ok(()),
        Task::ExpectFail { inner }
        | Task::ExpectReject { inner, .. }
        | Task::ExpectInconclusive { inner } => validate_task(inner, index, model),
    }
}
