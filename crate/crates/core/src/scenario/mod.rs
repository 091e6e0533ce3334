//! Scenarios: a model (built-in or inline chart complex), named objects,
//! and an ordered task list of checks and constructions. Scenarios load
//! from TOML text (see [`format`]) or come from the built-in registry;
//! execution produces one structured record per task.

pub mod builtins;
pub mod format;

pub use builtins::{load_builtin, model_catalog, scenario_catalog, CatalogEntry};
pub use format::{load_path, load_str};

use crate::construct::{
    assemble_geodesible_demo, carriere_contact, confoliation_contactize, contactize,
    glue_open_book, ConstructError, GlueConfig,
};
use crate::expr::{BumpSpec, Expr};
use crate::exterior::{GeomError, GeomObject, KForm, VecField};
use crate::manifold::{
    builtin_carriere, builtin_local_chart, builtin_t3_contact, builtin_trivial_open_book,
    CarriereModel, ChartComplex, Grid, ModelError, OpenBookModel,
};
use crate::verify::{
    basic_exactness_witness, is_confoliation, is_connection, is_contact, is_presymplectic,
    is_presymplectic_confoliation, nontriviality_witness, orbit_integral, HomologyAssertion,
    OrbitOptions, OrbitOutcome, OrbitResult, Tolerances, Verdict, VerifyError,
};
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", location.map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    Parse {
        message: String,
        location: Option<(usize, usize)>,
    },
    #[error("unknown built-in model `{0}`")]
    UnknownModel(String),
    #[error("task {task} references unknown object `{name}`")]
    UnknownObject { task: usize, name: String },
    #[error("task {task} needs a {need} model")]
    WrongModel { task: usize, need: &'static str },
    #[error("object `{name}` is invalid: {reason}")]
    BadObject { name: String, reason: String },
    #[error("task {task} references orbit `{name}` before it was saved")]
    UnknownOrbit { task: usize, name: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

/// A loaded model with its registered objects.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub name: String,
    pub complex: ChartComplex,
    pub objects: BTreeMap<String, GeomObject>,
    pub carriere: Option<CarriereModel>,
    pub open_book: Option<OpenBookModel>,
}

impl ModelBundle {
    pub fn from_builtin(
        name: &str,
        matrix: Option<[[i64; 2]; 2]>,
        dim: Option<usize>,
    ) -> Result<ModelBundle, ScenarioError> {
        match name {
            "carriere" => {
                let m = builtin_carriere(matrix.unwrap_or([[2, 1], [1, 1]]))?;
                let mut objects = BTreeMap::new();
                objects.insert("alpha1".into(), GeomObject::Form(m.alpha1.clone()));
                objects.insert("alpha2".into(), GeomObject::Form(m.alpha2.clone()));
                objects.insert(
                    "dalpha1".into(),
                    GeomObject::Form(m.alpha1.exterior_derivative()?),
                );
                objects.insert(
                    "dalpha2".into(),
                    GeomObject::Form(m.alpha2.exterior_derivative()?),
                );
                objects.insert("v1".into(), GeomObject::Form(m.v1.clone()));
                objects.insert("v2".into(), GeomObject::Form(m.v2.clone()));
                objects.insert("mu1".into(), GeomObject::Field(m.mu1.clone()));
                objects.insert("mu2".into(), GeomObject::Field(m.mu2.clone()));
                objects.insert("reeb".into(), GeomObject::Field(m.reeb.clone()));
                objects.insert(
                    "dt".into(),
                    GeomObject::Form(KForm::coordinate_differential(m.chart.clone(), "t")?),
                );
                Ok(ModelBundle {
                    name: "carriere".into(),
                    complex: m.complex.clone(),
                    objects,
                    carriere: Some(m),
                    open_book: None,
                })
            }
            "t3-contact" => {
                let m = builtin_t3_contact();
                let mut objects = BTreeMap::new();
                objects.insert("alpha".into(), GeomObject::Form(m.alpha.clone()));
                objects.insert(
                    "dalpha".into(),
                    GeomObject::Form(m.alpha.exterior_derivative()?),
                );
                objects.insert("reeb".into(), GeomObject::Field(m.reeb.clone()));
                Ok(ModelBundle {
                    name: "t3-contact".into(),
                    complex: m.complex,
                    objects,
                    carriere: None,
                    open_book: None,
                })
            }
            "trivial-open-book" => {
                let m = builtin_trivial_open_book();
                let mut objects = BTreeMap::new();
                objects.insert("alpha".into(), GeomObject::Form(m.alpha.clone()));
                objects.insert("x_b".into(), GeomObject::Field(m.x_b.clone()));
                objects.insert("alpha_tube".into(), GeomObject::Form(m.alpha_tube.clone()));
                objects.insert("x_b_tube".into(), GeomObject::Field(m.x_b_tube.clone()));
                Ok(ModelBundle {
                    name: "trivial-open-book".into(),
                    complex: m.complex.clone(),
                    objects,
                    carriere: None,
                    open_book: Some(m),
                })
            }
            "local-chart" => {
                let complex = builtin_local_chart(dim.unwrap_or(3))?;
                Ok(ModelBundle {
                    name: "local-chart".into(),
                    complex,
                    objects: BTreeMap::new(),
                    carriere: None,
                    open_book: None,
                })
            }
            other => Err(ScenarioError::UnknownModel(other.to_owned())),
        }
    }

    fn form(&self, task: usize, name: &str) -> Result<&KForm, ScenarioError> {
        match self.objects.get(name) {
            Some(GeomObject::Form(f)) => Ok(f),
            Some(GeomObject::Field(_)) => Err(ScenarioError::BadObject {
                name: name.to_owned(),
                reason: "expected a form, found a field".into(),
            }),
            None => Err(ScenarioError::UnknownObject {
                task,
                name: name.to_owned(),
            }),
        }
    }

    fn field(&self, task: usize, name: &str) -> Result<&VecField, ScenarioError> {
        match self.objects.get(name) {
            Some(GeomObject::Field(v)) => Ok(v),
            Some(GeomObject::Form(_)) => Err(ScenarioError::BadObject {
                name: name.to_owned(),
                reason: "expected a field, found a form".into(),
            }),
            None => Err(ScenarioError::UnknownObject {
                task,
                name: name.to_owned(),
            }),
        }
    }

    fn object(&self, task: usize, name: &str) -> Result<&GeomObject, ScenarioError> {
        self.objects
            .get(name)
            .ok_or_else(|| ScenarioError::UnknownObject {
                task,
                name: name.to_owned(),
            })
    }
}

/// Homology assertion referencing saved orbits by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssertionSpec {
    NullHomologous {
        orbit: String,
        justification: String,
    },
    SameClass {
        first: String,
        second: String,
        justification: String,
    },
}

/// One executable task. The `expect_*` wrappers turn an anticipated failure,
/// rejection or inconclusive outcome into a passing record, so negative
/// controls can live inside a suite whose exit contract is "all pass".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    IsContact {
        form: String,
    },
    IsPresymplectic {
        form: String,
    },
    IsConfoliation {
        form: String,
    },
    IsPresymplecticConfoliation {
        form: String,
    },
    IsConnection {
        form: String,
        field: String,
    },
    BasicExactnessWitness {
        omega: String,
        primitive: String,
        field: String,
    },
    CheckDescends {
        object: String,
    },
    OrbitIntegral {
        field: String,
        form: String,
        seed: Vec<f64>,
        max_time: Option<f64>,
        closure_tol: Option<f64>,
        save: Option<String>,
    },
    NontrivialityWitness {
        orbits: Vec<String>,
        assertion: AssertionSpec,
        threshold: Option<f64>,
    },
    Contactize {
        phi: String,
        eta: String,
    },
    ConfoliationContactize {
        alpha: String,
        eta: String,
    },
    GlueOpenBook {
        band: Option<[f64; 2]>,
        flat_end: Option<f64>,
    },
    CarriereContact {
        epsilon: f64,
    },
    GeodesibleDemo,
    ConfoliationCrossCheck {
        instances: usize,
    },
    ExpectFail {
        inner: Box<Task>,
    },
    ExpectReject {
        inner: Box<Task>,
        check: Option<String>,
    },
    ExpectInconclusive {
        inner: Box<Task>,
    },
}

impl Task {
    pub fn op_name(&self) -> String {
        match self {
            Task::IsContact { .. } => "is_contact".into(),
            Task::IsPresymplectic { .. } => "is_presymplectic".into(),
            Task::IsConfoliation { .. } => "is_confoliation".into(),
            Task::IsPresymplecticConfoliation { .. } => "is_presymplectic_confoliation".into(),
            Task::IsConnection { .. } => "is_connection".into(),
            Task::BasicExactnessWitness { .. } => "basic_exactness_witness".into(),
            Task::CheckDescends { .. } => "check_descends".into(),
            Task::OrbitIntegral { .. } => "orbit_integral".into(),
            Task::NontrivialityWitness { .. } => "nontriviality_witness".into(),
            Task::Contactize { .. } => "contactize".into(),
            Task::ConfoliationContactize { .. } => "confoliation_contactize".into(),
            Task::GlueOpenBook { .. } => "glue_open_book".into(),
            Task::CarriereContact { .. } => "carriere_contact".into(),
            Task::GeodesibleDemo => "geodesible_demo".into(),
            Task::ConfoliationCrossCheck { .. } => "confoliation_cross_check".into(),
            Task::ExpectFail { inner } => format!("expect_fail({})", inner.op_name()),
            Task::ExpectReject { inner, .. } => format!("expect_reject({})", inner.op_name()),
            Task::ExpectInconclusive { inner } => {
                format!("expect_inconclusive({})", inner.op_name())
            }
        }
    }

    fn target(&self) -> String {
        match self {
            Task::IsContact { form }
            | Task::IsPresymplectic { form }
            | Task::IsConfoliation { form }
            | Task::IsPresymplecticConfoliation { form } => form.clone(),
            Task::IsConnection { form, field } => format!("{form},{field}"),
            Task::BasicExactnessWitness {
                omega,
                primitive,
                field,
            } => {
                format!("{omega},{primitive},{field}")
            }
            Task::CheckDescends { object } => object.clone(),
            Task::OrbitIntegral { field, form, .. } => format!("{field},{form}"),
            Task::NontrivialityWitness { orbits, .. } => orbits.join(","),
            Task::Contactize { phi, eta } => format!("{phi},{eta}"),
            Task::ConfoliationContactize { alpha, eta } => format!("{alpha},{eta}"),
            Task::GlueOpenBook { .. } => "open-book".into(),
            Task::CarriereContact { epsilon } => format!("epsilon={epsilon}"),
            Task::GeodesibleDemo => "pipeline".into(),
            Task::ConfoliationCrossCheck { instances } => format!("instances={instances}"),
            Task::ExpectFail { inner }
            | Task::ExpectReject { inner, .. }
            | Task::ExpectInconclusive { inner } => inner.target(),
        }
    }
}

/// A fully loaded scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: ModelBundle,
    pub grid_samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub tasks: Vec<Task>,
}

/// Runtime overrides (CLI flags win over scenario settings).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunConfig {
    pub grid_samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub index: usize,
    pub op: String,
    pub target: String,
    pub verdict: Verdict,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub scenario: String,
    pub all_passed: bool,
    pub records: Vec<TaskRecord>,
}

struct ExecCtx<'a> {
    scenario: &'a Scenario,
    grid_samples: Option<usize>,
    tol: Tolerances,
    seed: u64,
    orbits: BTreeMap<String, OrbitResult>,
    orbit_order: Vec<String>,
}

impl<'a> ExecCtx<'a> {
    fn grid_for(&self, chart: &crate::chart::Chart) -> Grid {
        match self.grid_samples {
            Some(n) => Grid::uniform(chart.dim(), n),
            None => Grid::default_for(chart),
        }
    }
}

pub fn run_scenario(scenario: &Scenario, config: &RunConfig) -> Result<RunOutcome, ScenarioError> {
    let mut tol = Tolerances::default();
    if let Some(t) = config.tolerance.or(scenario.tolerance) {
        tol.residual = t;
    }
    let mut ctx = ExecCtx {
        scenario,
        grid_samples: config.grid_samples.or(scenario.grid_samples),
        tol,
        seed: config.seed.unwrap_or(scenario.seed),
        orbits: BTreeMap::new(),
        orbit_order: Vec::new(),
    };
    let mut records = Vec::with_capacity(scenario.tasks.len());
    let mut all_passed = true;
    for (index, task) in scenario.tasks.iter().enumerate() {
        let (verdict, detail) = run_task(&mut ctx, index, task)?;
        all_passed &= verdict == Verdict::Pass;
        records.push(TaskRecord {
            index,
            op: task.op_name(),
            target: task.target(),
            verdict,
            detail,
        });
    }
    Ok(RunOutcome {
        scenario: scenario.name.clone(),
        all_passed,
        records,
    })
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report serialization is infallible")
}

fn run_task(
    ctx: &mut ExecCtx,
    index: usize,
    task: &Task,
) -> Result<(Verdict, serde_json::Value), ScenarioError> {
    let model = &ctx.scenario.model;
    let cc = &model.complex;
    match task {
        Task::IsContact { form } => {
            let f = model.form(index, form)?;
            let report = is_contact(f, cc, &ctx.grid_for(f.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::IsPresymplectic { form } => {
            let f = model.form(index, form)?;
            let report = is_presymplectic(f, cc, &ctx.grid_for(f.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::IsConfoliation { form } => {
            let f = model.form(index, form)?;
            let report = is_confoliation(f, cc, &ctx.grid_for(f.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::IsPresymplecticConfoliation { form } => {
            let f = model.form(index, form)?;
            let report = is_presymplectic_confoliation(f, cc, &ctx.grid_for(f.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::IsConnection { form, field } => {
            let f = model.form(index, form)?;
            let v = model.field(index, field)?;
            let report = is_connection(f, v, cc, &ctx.grid_for(f.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::BasicExactnessWitness {
            omega,
            primitive,
            field,
        } => {
            let w = model.form(index, omega)?;
            let p = model.form(index, primitive)?;
            let r = model.field(index, field)?;
            let report = basic_exactness_witness(w, p, r, cc, &ctx.grid_for(p.chart()), &ctx.tol)?;
            Ok((report.verdict, json(&report)))
        }
        Task::CheckDescends { object } => {
            let obj = model.object(index, object)?;
            let report = cc.check_descends(obj, &ctx.grid_for(obj.chart()), ctx.tol.residual)?;
            Ok((report.verdict, json(&report)))
        }
        Task::OrbitIntegral {
            field,
            form,
            seed,
            max_time,
            closure_tol,
            save,
        } => {
            let v = model.field(index, field)?;
            let f = model.form(index, form)?;
            let mut opts = OrbitOptions::default();
            if let Some(t) = max_time {
                opts.max_time = *t;
            }
            if let Some(c) = closure_tol {
                opts.closure_tol = *c;
            }
            let outcome = orbit_integral(v, f, seed, cc, &opts)?;
            let verdict = match &outcome {
                OrbitOutcome::Closed(result) => {
                    if let Some(name) = save {
                        ctx.orbits.insert(name.clone(), *result);
                        ctx.orbit_order.push(name.clone());
                    }
                    Verdict::Pass
                }
                OrbitOutcome::NoReturn { .. } => Verdict::Inconclusive,
            };
            Ok((verdict, json(&outcome)))
        }
        Task::NontrivialityWitness {
            orbits,
            assertion,
            threshold,
        } => {
            let mut resolved = Vec::with_capacity(orbits.len());
            for name in orbits {
                let orbit = ctx
                    .orbits
                    .get(name)
                    .ok_or_else(|| ScenarioError::UnknownOrbit {
                        task: index,
                        name: name.clone(),
                    })?;
                resolved.push(*orbit);
            }
            let position = |name: &str| -> Result<usize, ScenarioError> {
                orbits
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| ScenarioError::UnknownOrbit {
                        task: index,
                        name: name.to_owned(),
                    })
            };
            let assertion = match assertion {
                AssertionSpec::NullHomologous {
                    orbit,
                    justification,
                } => HomologyAssertion::NullHomologous {
                    orbit: position(orbit)?,
                    justification: justification.clone(),
                },
                AssertionSpec::SameClass {
                    first,
                    second,
                    justification,
                } => HomologyAssertion::SameClass {
                    first: position(first)?,
                    second: position(second)?,
                    justification: justification.clone(),
                },
            };
            let verdict = nontriviality_witness(
                &resolved,
                &assertion,
                OrbitOptions::default().closure_tol,
                threshold.unwrap_or(1e-6),
            )?;
            let v = if verdict.certified {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok((v, json(&verdict)))
        }
        Task::Contactize { phi, eta } => {
            let p = model.form(index, phi)?;
            let e = model.form(index, eta)?;
            let result = contactize(p, e, cc, &ctx.grid_for(p.chart()), &ctx.tol)?;
            Ok((result.report.verdict, json(&result)))
        }
        Task::ConfoliationContactize { alpha, eta } => {
            let a = model.form(index, alpha)?;
            let e = model.form(index, eta)?;
            let result = confoliation_contactize(a, e, cc, &ctx.grid_for(a.chart()), &ctx.tol)?;
            Ok((result.report.verdict, json(&result)))
        }
        Task::GlueOpenBook { band, flat_end } => {
            let Some(ob) = &model.open_book else {
                return Err(ScenarioError::WrongModel {
                    task: index,
                    need: "trivial-open-book",
                });
            };
            let mut cfg = GlueConfig::default();
            if let Some([a, b]) = band {
                cfg.band = (*a, *b);
            }
            if let Some(e) = flat_end {
                cfg.f_spec = BumpSpec::new(*e, cfg.f_spec.class).map_err(GeomError::from)?;
                cfg.g_spec = BumpSpec::new(*e, cfg.g_spec.class).map_err(GeomError::from)?;
            }
            let glued = glue_open_book(ob, &cfg, &ctx.grid_for(&ob.tube), &ctx.tol)?;
            Ok((glued.report.verdict, json(&glued.report)))
        }
        Task::CarriereContact { epsilon } => {
            let Some(m) = &model.carriere else {
                return Err(ScenarioError::WrongModel {
                    task: index,
                    need: "carriere",
                });
            };
            let (_, report) = carriere_contact(m, *epsilon)?;
            Ok((report.verdict, json(&report)))
        }
        Task::GeodesibleDemo => {
            let demo = assemble_geodesible_demo()?;
            let verdict = if demo.passed {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok((verdict, json(&demo)))
        }
        Task::ConfoliationCrossCheck { instances } => {
            let (verdict, detail) = cross_check(ctx, *instances)?;
            Ok((verdict, detail))
        }
        Task::ExpectFail { inner } => {
            let (verdict, detail) = run_task(ctx, index, inner)?;
            let v = if verdict == Verdict::Fail {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok((
                v,
                serde_json::json!({ "expected": "fail", "inner": detail }),
            ))
        }
        Task::ExpectInconclusive { inner } => {
            let (verdict, detail) = run_task(ctx, index, inner)?;
            let v = if verdict == Verdict::Inconclusive {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok((
                v,
                serde_json::json!({ "expected": "inconclusive", "inner": detail }),
            ))
        }
        Task::ExpectReject { inner, check } => match run_task(ctx, index, inner) {
            Err(ScenarioError::Construct(ConstructError::RejectedInput { check: got, report })) => {
                let matches = check.as_deref().map_or(true, |want| want == got);
                let v = if matches {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                Ok((
                    v,
                    serde_json::json!({
                        "expected": "rejected-input",
                        "rejected_check": got,
                        "report": json(&*report),
                    }),
                ))
            }
            Ok((_, detail)) => Ok((
                Verdict::Fail,
                serde_json::json!({ "expected": "rejected-input", "inner": detail }),
            )),
            Err(other) => Err(other),
        },
    }
}

/// Randomized agreement check of the two confoliation characterizations on
/// affine 1-forms over a 3-dimensional box chart. Instances whose derivative
/// is rank-deficient are redrawn; verdicts of the wedge route and of the
/// kernel route must agree on every kept instance.
fn cross_check(
    ctx: &ExecCtx,
    instances: usize,
) -> Result<(Verdict, serde_json::Value), ScenarioError> {
    let cc = builtin_local_chart(3)?;
    let chart = cc.chart("box").expect("box chart").clone();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
    let grid = Grid::uniform(3, 6);
    let tol = ctx.tol;
    let mut kept = 0usize;
    let mut agreements = 0usize;
    let mut disagreements = Vec::new();
    let mut attempts = 0usize;
    while kept < instances && attempts < instances * 20 {
        attempts += 1;
        let mut coeffs = Vec::new();
        for name in ["x", "y", "z"] {
            let mut terms = vec![Expr::constant(rng.random_range(-1.0..1.0))];
            for other in ["x", "y", "z"] {
                terms.push(Expr::constant(rng.random_range(-1.0..1.0)) * Expr::coord(other));
            }
            coeffs.push((name, Expr::sum(terms)));
        }
        let alpha = KForm::one_form(chart.clone(), &coeffs)?;
        let d_alpha = alpha.exterior_derivative()?;
        let presym = is_presymplectic(&d_alpha, &cc, &grid, &tol)?;
        if !presym.passed() {
            continue;
        }
        kept += 1;
        let refined = is_presymplectic_confoliation(&alpha, &cc, &grid, &tol)?;
        let weak = is_confoliation(&alpha, &cc, &grid, &tol)?;
        let route_kernel = refined.passed();
        let route_wedge = weak.passed() && presym.passed();
        if route_kernel == route_wedge {
            agreements += 1;
        } else {
            disagreements.push(serde_json::json!({
                "instance": kept,
                "kernel_route": route_kernel,
                "wedge_route": route_wedge,
            }));
        }
    }
    let verdict = if kept == instances && disagreements.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok((
        verdict,
        serde_json::json!({
            "instances": kept,
            "agreements": agreements,
            "disagreements": disagreements,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_object_is_a_load_or_run_error() {
        let scenario = Scenario {
            name: "t".into(),
            description: String::new(),
            model: ModelBundle::from_builtin("t3-contact", None, None).unwrap(),
            grid_samples: Some(4),
            tolerance: None,
            seed: 0,
            tasks: vec![Task::IsContact {
                form: "nonexistent".into(),
            }],
        };
        let err = run_scenario(&scenario, &RunConfig::default()).unwrap_err();
        assert!(matches!(err, ScenarioError::UnknownObject { .. }));
    }

    #[test]
    fn t3_contact_task_passes() {
        let scenario = Scenario {
            name: "t".into(),
            description: String::new(),
            model: ModelBundle::from_builtin("t3-contact", None, None).unwrap(),
            grid_samples: Some(8),
            tolerance: None,
            seed: 0,
            tasks: vec![
                Task::IsContact {
                    form: "alpha".into(),
                },
                Task::ExpectFail {
                    inner: Box::new(Task::BasicExactnessWitness {
                        omega: "dalpha".into(),
                        primitive: "alpha".into(),
                        field: "reeb".into(),
                    }),
                },
            ],
        };
        let outcome = run_scenario(&scenario, &RunConfig::default()).unwrap();
        assert!(outcome.all_passed, "{outcome:?}");
        assert_eq!(outcome.records.len(), 2);
    }

    #[test]
    fn determinism_byte_identical_records() {
        let scenario = load_builtin("t3-contact-control").unwrap();
        let config = RunConfig {
            grid_samples: Some(8),
            ..Default::default()
        };
        let a = serde_json::to_string(&run_scenario(&scenario, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&run_scenario(&scenario, &config).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
