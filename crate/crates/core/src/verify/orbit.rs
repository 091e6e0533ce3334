//! Flow integration with simultaneous line-integral accumulation and
//! first-return detection.
//!
//! The flow of `V` is integrated with classical fourth-order Runge-Kutta
//! under step-doubling error control; the line integral of a 1-form along
//! the trajectory rides along as an extra state component, `ds = eta(V) dt`.
//! Return detection uses the section through the seed orthogonal to the
//! initial velocity: once the trajectory has left a capture ball and crosses
//! the section inward-to-outward near the seed, the crossing time is
//! bisected to machine precision and accepted if the wrapped distance to the
//! seed is within the closure tolerance.

use super::VerifyError;
use crate::exterior::{GeomError, KForm, VecField};
use crate::manifold::ChartComplex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrbitOptions {
    pub max_time: f64,
    pub closure_tol: f64,
    /// Target local truncation error per step.
    pub local_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            max_time: 100.0,
            closure_tol: 1e-6,
            local_tol: 1e-9,
            initial_step: 1e-3,
            max_step: 0.05,
            min_step: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrbitResult {
    /// Wrapped distance between the detected return point and the seed.
    pub closure_residual: f64,
    pub period: f64,
    /// Line integral of the 1-form along one closed pass.
    pub integral: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OrbitOutcome {
    Closed(OrbitResult),
    /// No first return within `max_time`: inconclusive, not a failure.
    NoReturn {
        time: f64,
        min_distance: f64,
        steps: usize,
    },
}

impl OrbitOutcome {
    pub fn closed(&self) -> Option<&OrbitResult> {
        match self {
            OrbitOutcome::Closed(r) => Some(r),
            OrbitOutcome::NoReturn { .. } => None,
        }
    }
}

const VANISH_TOL: f64 = 1e-12;

/// Integrate the flow of `v` from `seed`, accumulating the line integral of
/// `eta`, until the first return to the seed (within `opts.closure_tol`) or
/// `opts.max_time`.
pub fn orbit_integral(
    v: &VecField,
    eta: &KForm,
    seed: &[f64],
    cc: &ChartComplex,
    opts: &OrbitOptions,
) -> Result<OrbitOutcome, VerifyError> {
    if eta.degree() != 1 {
        return Err(VerifyError::WrongDegree {
            need: 1,
            got: eta.degree(),
        });
    }
    let chart = v.chart().clone();
    if !chart.same_as(eta.chart()) {
        return Err(VerifyError::Geom(GeomError::ChartMismatch {
            expected: chart.name.clone(),
            found: eta.chart().name.clone(),
        }));
    }
    let dim = chart.dim();
    assert_eq!(seed.len(), dim, "seed dimension must match the chart");

    let field = v.compile(&cc.params)?;
    // eta(V) as a scalar integrand.
    let integrand_expr = eta
        .contract(v)?
        .coeff(&[])
        .cloned()
        .unwrap_or_else(crate::expr::Expr::zero);
    let integrand = integrand_expr
        .compile(&chart.coord_names(), &cc.params)
        .map_err(GeomError::from)?;

    // Augmented RHS: position followed by the running integral.
    let rhs = |y: &[f64], out: &mut [f64]| {
        let vel = field.eval(&y[..dim]);
        out[..dim].copy_from_slice(&vel);
        out[dim] = integrand.eval(&y[..dim]);
    };

    let v0 = field.eval(seed);
    let v0_norm = norm(&v0);
    if v0_norm < VANISH_TOL {
        return Err(VerifyError::FieldVanishes(seed.to_vec()));
    }
    let normal: Vec<f64> = v0.iter().map(|x| x / v0_norm).collect();
    let section = |y: &[f64]| -> f64 {
        let disp = chart.wrapped_displacement(&y[..dim], seed);
        dot(&disp, &normal)
    };

    let arm_radius = (100.0 * opts.closure_tol).max(1e-3);
    let mut armed = false;
    let mut min_distance = f64::INFINITY;

    let mut y = vec![0.0; dim + 1];
    y[..dim].copy_from_slice(seed);
    let mut t = 0.0;
    let mut h = opts.initial_step;
    let mut steps = 0usize;

    while t < opts.max_time && steps < opts.max_steps {
        h = h.min(opts.max_time - t).min(opts.max_step);
        if h < opts.min_step {
            return Err(VerifyError::StepUnderflow(t));
        }
        // Step doubling: one full step vs two half steps.
        let full = rk4_step(&rhs, &y, h);
        let half = rk4_step(&rhs, &rk4_step(&rhs, &y, h / 2.0), h / 2.0);
        let err = full
            .iter()
            .zip(half.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / 15.0;
        let scale = opts.local_tol * (1.0 + y.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        if err > scale && h > opts.min_step * 2.0 {
            h *= (scale / err).powf(0.2).clamp(0.2, 0.9);
            continue;
        }

        let y_new = half;
        steps += 1;
        let velocity = field.eval(&y_new[..dim]);
        if norm(&velocity) < VANISH_TOL {
            return Err(VerifyError::FieldVanishes(y_new[..dim].to_vec()));
        }

        let dist_new = chart.wrapped_distance(&y_new[..dim], seed);
        if armed {
            min_distance = min_distance.min(dist_new);
        } else if dist_new > 2.0 * arm_radius {
            armed = true;
        }

        let g_old = section(&y);
        let g_new = section(&y_new);
        if armed && g_old < 0.0 && g_new >= 0.0 {
            // Bisect the crossing within this step; the distance test
            // happens at the crossing itself, not at step endpoints.
            let (mut lo, mut hi) = (0.0f64, h);
            let mut y_cross = y_new.clone();
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let y_mid = rk4_step(&rhs, &y, mid);
                if section(&y_mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                    y_cross = y_mid;
                }
            }
            let residual = chart.wrapped_distance(&y_cross[..dim], seed);
            if residual <= opts.closure_tol {
                return Ok(OrbitOutcome::Closed(OrbitResult {
                    closure_residual: residual,
                    period: t + hi,
                    integral: y_cross[dim],
                    steps,
                }));
            }
            min_distance = min_distance.min(residual);
        }

        y = y_new;
        t += h;
        if err > 0.0 {
            h *= (scale / err).powf(0.2).clamp(0.5, 5.0);
        } else {
            h *= 5.0;
        }
    }

    Ok(OrbitOutcome::NoReturn {
        time: t,
        min_distance,
        steps,
    })
}

fn rk4_step(rhs: &impl Fn(&[f64], &mut [f64]), y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    rhs(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(&tmp, &mut k4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, CoordSpec};
    use crate::expr::Expr;
    use crate::exterior::{KForm, VecField};
    use crate::manifold::{builtin_carriere, builtin_local_chart, ChartComplex};
    use std::f64::consts::TAU;

    #[test]
    fn circle_flow_integrates_to_two_pi() {
        // V = d/dphi on a 2 pi circle, eta = dphi.
        let chart = Chart::new("c", vec![CoordSpec::periodic("phi", TAU)]);
        let mut cc = ChartComplex::new();
        cc.add_chart(
            chart.clone(),
            KForm::coordinate_differential(chart.clone(), "phi").unwrap(),
        )
        .unwrap();
        let v = VecField::coordinate_field(chart.clone(), "phi").unwrap();
        let eta = KForm::coordinate_differential(chart, "phi").unwrap();
        let outcome = orbit_integral(&v, &eta, &[0.25], &cc, &OrbitOptions::default()).unwrap();
        let orbit = outcome.closed().expect("circle orbit must close");
        assert!(
            (orbit.integral - TAU).abs() < 1e-6,
            "integral {}",
            orbit.integral
        );
        assert!((orbit.period - TAU).abs() < 1e-6);
        assert!(orbit.closure_residual < 1e-6);
    }

    #[test]
    fn irrational_linear_flow_never_returns() {
        let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
        let eta = m.alpha2.clone();
        let outcome = orbit_integral(
            &m.mu2,
            &eta,
            &[0.2, 0.3, 0.4],
            &m.complex,
            &OrbitOptions {
                max_time: 50.0,
                ..OrbitOptions::default()
            },
        )
        .unwrap();
        match outcome {
            OrbitOutcome::NoReturn { min_distance, .. } => {
                assert!(min_distance > 1e-6, "irrational line came back too close");
            }
            OrbitOutcome::Closed(o) => panic!("irrational flow closed: {o:?}"),
        }
    }

    #[test]
    fn closed_form_integrates_to_zero_on_contractible_orbit() {
        // Rotation field in the (x, y) plane of the box, eta = dx (closed):
        // the loop integral vanishes.
        let cc = builtin_local_chart(3).unwrap();
        let chart = cc.chart("box").unwrap().clone();
        let v = VecField::new(
            chart.clone(),
            &[
                ("x", (Expr::coord("y") - Expr::constant(0.5)).neg()),
                ("y", Expr::coord("x") - Expr::constant(0.5)),
            ],
        )
        .unwrap();
        let eta = KForm::coordinate_differential(chart, "x").unwrap();
        let outcome =
            orbit_integral(&v, &eta, &[0.7, 0.5, 0.5], &cc, &OrbitOptions::default()).unwrap();
        let orbit = outcome.closed().expect("rotation orbit closes");
        assert!(
            orbit.integral.abs() < 1e-6,
            "Stokes violation: {}",
            orbit.integral
        );
        assert!((orbit.period - TAU).abs() < 1e-5);
    }

    #[test]
    fn vanishing_field_is_rejected() {
        let cc = builtin_local_chart(3).unwrap();
        let chart = cc.chart("box").unwrap().clone();
        let v = VecField::new(chart.clone(), &[("x", Expr::zero())]).unwrap();
        let eta = KForm::coordinate_differential(chart, "x").unwrap();
        let err =
            orbit_integral(&v, &eta, &[0.5, 0.5, 0.5], &cc, &OrbitOptions::default()).unwrap_err();
        assert!(matches!(err, VerifyError::FieldVanishes(_)));
    }
}
