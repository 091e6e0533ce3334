//! Shared generators and oracles for the property and acceptance suites.
//!
//! The flow-transport oracle here is deliberately independent of the
//! symbolic Lie-derivative path it checks: it never calls
//! `lie_derivative`, only the numeric flow of the field (single
//! Runge-Kutta steps) and finite-difference Jacobians.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reeb_core::chart::{Chart, ChartRef, CoordSpec};
use reeb_core::expr::Expr;
use reeb_core::exterior::{CompiledField, CompiledForm, KForm, SmoothMap, VecField};
use std::collections::BTreeMap;

pub fn chart(dim: usize) -> ChartRef {
    let names: Vec<String> = (0..dim).map(|i| format!("x{}", i + 1)).collect();
    Chart::new(
        "box",
        names
            .iter()
            .map(|n| CoordSpec::interval(n, 0.0, 1.0))
            .collect(),
    )
}

pub fn coord_names(chart: &Chart) -> Vec<String> {
    chart.coords.iter().map(|c| c.name.clone()).collect()
}

/// Random smooth expression with values and first derivatives of order one:
/// sums, damped products, sine/cosine waves of affine arguments.
pub fn tame_expr(rng: &mut ChaCha8Rng, coords: &[String], depth: u32) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return match rng.random_range(0..3) {
            0 => Expr::constant(rng.random_range(-1.5..1.5)),
            _ => Expr::coord(&coords[rng.random_range(0..coords.len())]),
        };
    }
    match rng.random_range(0..6) {
        0 => tame_expr(rng, coords, depth - 1) + tame_expr(rng, coords, depth - 1),
        1 => tame_expr(rng, coords, depth - 1) - tame_expr(rng, coords, depth - 1),
        2 => {
            Expr::constant(0.5)
                * tame_expr(rng, coords, depth - 1)
                * tame_expr(rng, coords, depth - 1)
        }
        3 => Expr::sin(tame_expr(rng, coords, depth - 1)),
        4 => Expr::cos(tame_expr(rng, coords, depth - 1)),
        _ => Expr::powi(tame_expr(rng, coords, depth - 1), 2) * Expr::constant(0.5),
    }
}

/// Strictly increasing random multi-index of length `k` into `0..dim`.
fn multi_index(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..dim).collect();
    for i in (1..all.len()).rev() {
        all.swap(i, rng.random_range(0..=i));
    }
    let mut idx: Vec<usize> = all.into_iter().take(k).collect();
    idx.sort_unstable();
    idx
}

pub fn random_form(rng: &mut ChaCha8Rng, chart: &ChartRef, degree: usize, terms: usize) -> KForm {
    let names = coord_names(chart);
    let coeffs = (0..terms)
        .map(|_| {
            (
                multi_index(rng, chart.dim(), degree),
                tame_expr(rng, &names, 3),
            )
        })
        .collect::<Vec<_>>();
    KForm::from_coeffs(chart.clone(), degree, coeffs)
}

pub fn random_field(rng: &mut ChaCha8Rng, chart: &ChartRef) -> VecField {
    let names = coord_names(chart);
    let comps: Vec<(String, Expr)> = names
        .iter()
        .map(|n| (n.clone(), tame_expr(rng, &names, 3)))
        .collect();
    let refs: Vec<(&str, Expr)> = comps.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
    VecField::new(chart.clone(), &refs).unwrap()
}

/// Random smooth map between equal-dimension charts: coordinates plus
/// damped trigonometric perturbations, so it stays a diffeomorphism-like
/// map on the sample box.
pub fn random_map(rng: &mut ChaCha8Rng, source: &ChartRef, target: &ChartRef) -> SmoothMap {
    let src_names = coord_names(source);
    let comps: Vec<(String, Expr)> = target
        .coords
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let base = Expr::coord(&src_names[i % src_names.len()]);
            let bump = Expr::constant(rng.random_range(-0.3..0.3))
                * Expr::sin(tame_expr(rng, &src_names, 2));
            (spec.name.clone(), base + bump)
        })
        .collect();
    let refs: Vec<(&str, Expr)> = comps.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
    SmoothMap::new("random", source.clone(), target.clone(), &refs).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.15..0.85)).collect()
}

pub fn no_params() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

/// Largest absolute coefficient of `form` over `points`.
pub fn max_residual(form: &KForm, points: &[Vec<f64>]) -> f64 {
    let compiled = form.compile(&no_params()).unwrap();
    points
        .iter()
        .map(|p| compiled.max_abs_at(p))
        .fold(0.0, f64::max)
}

/// One classical Runge-Kutta step of the flow of `field`.
pub fn flow_step(field: &CompiledField, p: &[f64], h: f64) -> Vec<f64> {
    let n = p.len();
    let k1 = field.eval(p);
    let y2: Vec<f64> = (0..n).map(|i| p[i] + 0.5 * h * k1[i]).collect();
    let k2 = field.eval(&y2);
    let y3: Vec<f64> = (0..n).map(|i| p[i] + 0.5 * h * k2[i]).collect();
    let k3 = field.eval(&y3);
    let y4: Vec<f64> = (0..n).map(|i| p[i] + h * k3[i]).collect();
    let k4 = field.eval(&y4);
    (0..n)
        .map(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Finite-difference Jacobian of the time-`h` flow map at `p`.
fn flow_jacobian(field: &CompiledField, p: &[f64], h: f64, delta: f64) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[j] += delta;
        minus[j] -= delta;
        let fp = flow_step(field, &plus, h);
        let fm = flow_step(field, &minus, h);
        (fp[i] - fm[i]) / (2.0 * delta)
    })
}

/// Value of the pullback of `form` under the time-`h` flow, evaluated on the
/// coordinate frame `e_I` at `p`.
fn flow_pullback_component(
    form: &CompiledForm,
    field: &CompiledField,
    p: &[f64],
    h: f64,
    idx: &[usize],
) -> f64 {
    let q = flow_step(field, p, h);
    let jac = flow_jacobian(field, p, h, 1e-5);
    let pushed: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| jac.column(i).iter().copied().collect())
        .collect();
    form.apply_to_vectors(&q, &pushed)
}

/// Central-difference flow transport: the `idx` component of
/// `(Phi_h^* a - Phi_{-h}^* a) / 2h` at `p`. Independent oracle for the
/// Lie derivative.
pub fn flow_transport_component(
    form: &CompiledForm,
    field: &CompiledField,
    p: &[f64],
    h: f64,
    idx: &[usize],
) -> f64 {
    let plus = flow_pullback_component(form, field, p, h, idx);
    let minus = flow_pullback_component(form, field, p, -h, idx);
    (plus - minus) / (2.0 * h)
}
