//! Built-in scenario and model catalog.

use super::{ModelBundle, Scenario, ScenarioError, Task};
use crate::expr::Expr;
use crate::exterior::{GeomObject, KForm};

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
}

/// Built-in scenarios, alphabetized.
pub fn scenario_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "carriere-suite",
            description: "mapping-torus checks: descent, structure identity consumers, basic \
                          exactness, confoliations and the contact perturbation",
        },
        CatalogEntry {
            name: "confoliation-cross-check",
            description: "randomized agreement of the wedge and kernel confoliation \
                          characterizations",
        },
        CatalogEntry {
            name: "contactize-local",
            description: "contactization and confoliation deformation on the local box chart",
        },
        CatalogEntry {
            name: "geodesible-demo",
            description: "open-book gluing pipeline: connection, closed orbit, nontriviality \
                          witness",
        },
        CatalogEntry {
            name: "t3-contact-control",
            description: "positive contact control on the 3-torus",
        },
    ]
}

/// Built-in models, alphabetized.
pub fn model_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "carriere",
            description: "mapping torus of a hyperbolic SL(2,Z) matrix with eigen-covector \
                          forms (default matrix [[2,1],[1,1]])",
        },
        CatalogEntry {
            name: "local-chart",
            description: "odd-dimensional coordinate box, no identifications (default dim 3)",
        },
        CatalogEntry {
            name: "t3-contact",
            description: "standard contact 3-torus with its Reeb field",
        },
        CatalogEntry {
            name: "trivial-open-book",
            description: "3-sphere open book: circle binding, solid-torus tube, identity \
                          monodromy page bundle",
        },
    ]
}

/// Load a built-in scenario by name.
pub fn load_builtin(name: &str) -> Option<Scenario> {
    let result = match name {
        "carriere-suite" => carriere_suite(),
        "confoliation-cross-check" => cross_check_suite(),
        "contactize-local" => contactize_local(),
        "geodesible-demo" => geodesible_demo(),
        "t3-contact-control" => t3_control(),
        _ => return None,
    };
    Some(result.expect("built-in scenarios construct without errors"))
}

fn carriere_suite() -> Result<Scenario, ScenarioError> {
    let model = ModelBundle::from_builtin("carriere", None, None)?;
    let tasks = vec![
        Task::CheckDescends {
            object: "alpha1".into(),
        },
        Task::CheckDescends {
            object: "alpha2".into(),
        },
        Task::CheckDescends {
            object: "dt".into(),
        },
        Task::CheckDescends {
            object: "reeb".into(),
        },
        Task::ExpectFail {
            inner: Box::new(Task::CheckDescends {
                object: "v1".into(),
            }),
        },
        Task::IsPresymplectic {
            form: "dalpha1".into(),
        },
        Task::IsPresymplectic {
            form: "dalpha2".into(),
        },
        Task::BasicExactnessWitness {
            omega: "dalpha1".into(),
            primitive: "alpha1".into(),
            field: "mu2".into(),
        },
        Task::ExpectFail {
            inner: Box::new(Task::IsContact {
                form: "alpha1".into(),
            }),
        },
        Task::IsPresymplecticConfoliation {
            form: "alpha1".into(),
        },
        Task::IsPresymplecticConfoliation {
            form: "alpha2".into(),
        },
        Task::IsConfoliation { form: "dt".into() },
        Task::ExpectFail {
            inner: Box::new(Task::IsPresymplecticConfoliation { form: "dt".into() }),
        },
        Task::ExpectFail {
            inner: Box::new(Task::IsConnection {
                form: "alpha1".into(),
                field: "mu2".into(),
            }),
        },
        Task::CarriereContact { epsilon: 0.1 },
        Task::ExpectFail {
            inner: Box::new(Task::CarriereContact { epsilon: 0.0 }),
        },
        Task::ExpectReject {
            inner: Box::new(Task::Contactize {
                phi: "alpha1".into(),
                eta: "alpha2".into(),
            }),
            check: Some("is_connection".into()),
        },
        Task::ExpectInconclusive {
            inner: Box::new(Task::OrbitIntegral {
                field: "mu2".into(),
                form: "alpha1".into(),
                seed: vec![0.2, 0.3, 0.4],
                max_time: Some(50.0),
                closure_tol: None,
                save: None,
            }),
        },
    ];
    Ok(Scenario {
        name: "carriere-suite".into(),
        description: "mapping-torus verification suite".into(),
        model,
        grid_samples: None,
        tolerance: None,
        seed: 0,
        tasks,
    })
}

fn t3_control() -> Result<Scenario, ScenarioError> {
    let model = ModelBundle::from_builtin("t3-contact", None, None)?;
    let tasks = vec![
        Task::IsContact {
            form: "alpha".into(),
        },
        Task::IsConfoliation {
            form: "alpha".into(),
        },
        Task::IsPresymplectic {
            form: "dalpha".into(),
        },
        Task::CheckDescends {
            object: "alpha".into(),
        },
        Task::ExpectFail {
            inner: Box::new(Task::BasicExactnessWitness {
                omega: "dalpha".into(),
                primitive: "alpha".into(),
                field: "reeb".into(),
            }),
        },
    ];
    Ok(Scenario {
        name: "t3-contact-control".into(),
        description: "positive contact control".into(),
        model,
        grid_samples: None,
        tolerance: None,
        seed: 0,
        tasks,
    })
}

fn geodesible_demo() -> Result<Scenario, ScenarioError> {
    let model = ModelBundle::from_builtin("trivial-open-book", None, None)?;
    let tasks = vec![
        Task::IsConnection {
            form: "alpha".into(),
            field: "x_b".into(),
        },
        Task::GlueOpenBook {
            band: None,
            flat_end: None,
        },
        Task::GeodesibleDemo,
    ];
    Ok(Scenario {
        name: "geodesible-demo".into(),
        description: "open-book gluing pipeline".into(),
        model,
        grid_samples: Some(12),
        tolerance: None,
        seed: 0,
        tasks,
    })
}

fn contactize_local() -> Result<Scenario, ScenarioError> {
    let mut model = ModelBundle::from_builtin("local-chart", None, Some(3))?;
    let chart = model.complex.chart("box").expect("box chart").clone();
    let phi = KForm::one_form(chart.clone(), &[("y", Expr::coord("x"))])?;
    let eta = KForm::coordinate_differential(chart.clone(), "z")?;
    let shifted = KForm::one_form(chart, &[("y", Expr::coord("x") + Expr::one())])?;
    model.objects.insert("phi".into(), GeomObject::Form(phi));
    model.objects.insert("eta".into(), GeomObject::Form(eta));
    model
        .objects
        .insert("alpha_shifted".into(), GeomObject::Form(shifted));
    let tasks = vec![
        Task::Contactize {
            phi: "phi".into(),
            eta: "eta".into(),
        },
        Task::ConfoliationContactize {
            alpha: "alpha_shifted".into(),
            eta: "eta".into(),
        },
        Task::ExpectFail {
            inner: Box::new(Task::IsContact {
                form: "alpha_shifted".into(),
            }),
        },
    ];
    Ok(Scenario {
        name: "contactize-local".into(),
        description: "deformation constructions on the box chart".into(),
        model,
        grid_samples: Some(6),
        tolerance: None,
        seed: 0,
        tasks,
    })
}

fn cross_check_suite() -> Result<Scenario, ScenarioError> {
    let model = ModelBundle::from_builtin("local-chart", None, Some(3))?;
    Ok(Scenario {
        name: "confoliation-cross-check".into(),
        description: "randomized characterization agreement".into(),
        model,
        grid_samples: Some(6),
        tolerance: None,
        seed: 0,
        tasks: vec![Task::ConfoliationCrossCheck { instances: 20 }],
    })
}
