//! Grid-based checkers for the defining conditions: contact,
//! presymplectic, confoliation (plain and presymplectic), connection form,
//! basic-exactness witness, plus closed-orbit line integrals and the
//! nontriviality witness they feed.
//!
//! Every checker sweeps a [`Grid`] over the relevant chart, records
//! per-subcondition residuals and the worst sample point, and returns a
//! [`VerificationReport`]. Strict positivity means margin above
//! `strict_positive`; the weak `>= 0` checks accept margins above
//! `-strict_positive`, which separates contact forms from the confoliation
//! boundary cases.

pub mod orbit;
pub mod report;

pub use orbit::{orbit_integral, OrbitOptions, OrbitOutcome, OrbitResult};
pub use report::{GridMeta, ReportBuilder, Tolerances, Verdict, VerificationReport, Witness};

use crate::exterior::{GeomError, KForm, VecField};
use crate::manifold::{ChartComplex, Grid};
use crate::pointwise::{PointwiseError, SkewMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("chart `{0}` has even dimension {1}; checks need an odd-dimensional model")]
    EvenDimension(String, usize),
    #[error("no orientation form declared for chart `{0}`")]
    MissingOrientation(String),
    #[error("form must have degree {need}, got {got}")]
    WrongDegree { need: usize, got: usize },
    #[error("vector field vanishes near the orbit at {0:?}")]
    FieldVanishes(Vec<f64>),
    #[error("orbit step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("orbit {index} is not closed: residual {residual} exceeds tolerance {tol}")]
    OrbitNotClosed {
        index: usize,
        residual: f64,
        tol: f64,
    },
    #[error("homology assertion references orbit {0}, but only {1} orbits were given")]
    BadOrbitIndex(usize, usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Pointwise(#[from] PointwiseError),
}

fn odd_half_dim(cc: &ChartComplex, form: &KForm) -> Result<usize, VerifyError> {
    let chart = form.chart();
    let dim = chart.dim();
    if dim % 2 == 0 {
        return Err(VerifyError::EvenDimension(chart.name.clone(), dim));
    }
    if cc.chart(&chart.name).is_none() {
        return Err(VerifyError::Geom(GeomError::ChartMismatch {
            expected: "a chart declared in the complex".into(),
            found: chart.name.clone(),
        }));
    }
    Ok((dim - 1) / 2)
}

fn orientation<'a>(cc: &'a ChartComplex, form: &KForm) -> Result<&'a KForm, VerifyError> {
    cc.orientation(&form.chart().name)
        .ok_or_else(|| VerifyError::MissingOrientation(form.chart().name.clone()))
}

/// Pointwise ratio of the top form `alpha ^ (d alpha)^n` against the
/// orientation form: the contact/confoliation margin function.
fn positivity_sweep(
    alpha: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
) -> Result<(f64, Vec<f64>), VerifyError> {
    let n = odd_half_dim(cc, alpha)?;
    let orient = orientation(cc, alpha)?;
    let top = alpha.wedge(&alpha.exterior_derivative()?.wedge_power(n)?)?;
    let top_c = top.compile(&cc.params)?;
    let orient_c = orient.compile(&cc.params)?;
    let chart = alpha.chart();
    let idx: Vec<usize> = (0..chart.dim()).collect();

    let mut min_ratio = f64::INFINITY;
    let mut at = vec![];
    for p in grid.points(chart) {
        let t = top_c
            .coeffs_at(&p)
            .iter()
            .find(|(i, _)| *i == idx.as_slice())
            .map_or(0.0, |(_, v)| *v);
        let o = orient_c
            .coeffs_at(&p)
            .iter()
            .find(|(i, _)| *i == idx.as_slice())
            .map_or(0.0, |(_, v)| *v);
        let ratio = t / o;
        if !ratio.is_finite() {
            return Ok((f64::NAN, p));
        }
        if ratio < min_ratio {
            min_ratio = ratio;
            at = p;
        }
    }
    Ok((min_ratio, at))
}

/// Is `alpha ^ (d alpha)^n` strictly positive against the orientation?
pub fn is_contact(
    alpha: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let (margin, at) = positivity_sweep(alpha, cc, grid)?;
    let chart = alpha.chart();
    let mut builder = ReportBuilder::new("is_contact")
        .grid(grid.meta(chart))
        .residual("min_ratio", margin);
    let pass = margin.is_finite() && margin > tol.strict_positive;
    if !pass {
        builder.add_witness(
            &chart.name,
            &at,
            margin,
            "minimum ratio against orientation",
        );
    }
    Ok(builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin))
}

/// Weak positivity: `alpha ^ (d alpha)^n >= 0` up to tolerance.
pub fn is_confoliation(
    alpha: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let (margin, at) = positivity_sweep(alpha, cc, grid)?;
    let chart = alpha.chart();
    let mut builder = ReportBuilder::new("is_confoliation")
        .grid(grid.meta(chart))
        .residual("min_ratio", margin);
    let pass = margin.is_finite() && margin >= -tol.strict_positive;
    if !pass {
        builder.add_witness(
            &chart.name,
            &at,
            margin,
            "minimum ratio against orientation",
        );
    }
    Ok(builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin))
}

/// Closedness plus maximal rank `2n` at every sample point.
pub fn is_presymplectic(
    omega: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    if omega.degree() != 2 {
        return Err(VerifyError::WrongDegree {
            need: 2,
            got: omega.degree(),
        });
    }
    let n = odd_half_dim(cc, omega)?;
    let chart = omega.chart();
    let mut builder = ReportBuilder::new("is_presymplectic").grid(grid.meta(chart));

    let d_omega = omega.exterior_derivative()?.compile(&cc.params)?;
    let omega_c = omega.compile(&cc.params)?;

    let mut closed_res = 0.0f64;
    let mut closed_at = vec![];
    let mut min_rank = usize::MAX;
    let mut rank_at = vec![];
    let mut split_warnings = 0usize;
    for p in grid.points(chart) {
        let r = d_omega.max_abs_at(&p);
        if r > closed_res {
            closed_res = r;
            closed_at = p.clone();
        }
        let skew = SkewMatrix::from_compiled_at(&omega_c, &p)?;
        let (rank, warned) = skew.rank(tol.rank_rel);
        if warned {
            split_warnings += 1;
        }
        if rank < min_rank {
            min_rank = rank;
            rank_at = p;
        }
    }
    builder.add_residual("d_omega", closed_res);
    builder.add_residual("min_rank", min_rank as f64);
    if split_warnings > 0 {
        builder.add_note(format!(
            "rank tolerance split a singular-value pair at {split_warnings} points"
        ));
    }
    let closed_ok = closed_res < tol.residual;
    let rank_ok = min_rank == 2 * n;
    if !closed_ok {
        builder.add_witness(&chart.name, &closed_at, closed_res, "d(omega) residual");
    }
    if !rank_ok {
        builder.add_witness(
            &chart.name,
            &rank_at,
            min_rank as f64,
            &format!("rank {min_rank} below maximal {}", 2 * n),
        );
    }
    let verdict = if closed_ok && rank_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(builder.finish(verdict, closed_res))
}

/// Presymplectic confoliation: `d alpha` presymplectic and
/// `alpha(R) >= 0` along the co-oriented kernel field of `d alpha`. The
/// wedge-ratio characterization is computed as a cross-check and any
/// disagreement of the two routes is reported.
pub fn is_presymplectic_confoliation(
    alpha: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let n = odd_half_dim(cc, alpha)?;
    let chart = alpha.chart();
    let mut builder = ReportBuilder::new("is_presymplectic_confoliation").grid(grid.meta(chart));

    let d_alpha = alpha.exterior_derivative()?;
    let presym = is_presymplectic(&d_alpha, cc, grid, tol)?;
    builder.add_residual(
        "d_omega",
        presym.residuals.get("d_omega").copied().unwrap_or(0.0),
    );
    builder.add_residual(
        "min_rank",
        presym.residuals.get("min_rank").copied().unwrap_or(0.0),
    );

    // Kernel route: min alpha(R) over the grid, R co-oriented.
    let orient = orientation(cc, alpha)?;
    let orient_c = orient.compile(&cc.params)?;
    let alpha_c = alpha.compile(&cc.params)?;
    let d_alpha_c = d_alpha.compile(&cc.params)?;
    let mut min_pairing = f64::INFINITY;
    let mut pairing_at = vec![];
    let rank_max = presym.residuals.get("min_rank").copied().unwrap_or(0.0) as usize == 2 * n;
    if rank_max {
        for p in grid.points(chart) {
            let skew = SkewMatrix::from_compiled_at(&d_alpha_c, &p)?;
            let vol = |frame: &[Vec<f64>]| orient_c.apply_to_vectors(&p, frame);
            let r = skew.kernel_direction(tol.rank_rel, Some(&vol))?;
            let pairing = alpha_c.apply_to_vectors(&p, &[r.iter().copied().collect()]);
            if pairing < min_pairing {
                min_pairing = pairing;
                pairing_at = p;
            }
        }
    } else {
        min_pairing = f64::NEG_INFINITY;
    }
    builder.add_residual("min_alpha_of_kernel", min_pairing);

    // Wedge route for the cross-check.
    let (wedge_margin, _) = positivity_sweep(alpha, cc, grid)?;
    builder.add_residual("min_wedge_ratio", wedge_margin);

    let kernel_ok = min_pairing.is_finite() && min_pairing >= -tol.strict_positive;
    let pass = presym.passed() && kernel_ok;
    let wedge_route_pass =
        presym.passed() && wedge_margin.is_finite() && wedge_margin >= -tol.strict_positive;
    if pass != wedge_route_pass {
        builder.add_note(format!(
            "characterization mismatch: kernel route {} but wedge route {}",
            if pass { "passes" } else { "fails" },
            if wedge_route_pass { "passes" } else { "fails" },
        ));
    }
    if !pass {
        if !presym.passed() {
            for w in &presym.witnesses {
                builder.add_witness(&w.chart, &w.point, w.value, &w.what);
            }
        } else {
            builder.add_witness(
                &chart.name,
                &pairing_at,
                min_pairing,
                "alpha on kernel field",
            );
        }
    }
    let verdict = if pass != wedge_route_pass {
        Verdict::Inconclusive
    } else if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(builder.finish(verdict, min_pairing.min(f64::MAX)))
}

/// Connection-form conditions: `i_V d eta = 0` and `eta(V) = 1` on the
/// grid. The induced Lie-derivative residual is reported as a consistency
/// line (Cartan combination of the two checked quantities).
pub fn is_connection(
    eta: &KForm,
    v: &VecField,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    if eta.degree() != 1 {
        return Err(VerifyError::WrongDegree {
            need: 1,
            got: eta.degree(),
        });
    }
    let chart = eta.chart();
    let mut builder = ReportBuilder::new("is_connection").grid(grid.meta(chart));

    let contraction = eta
        .exterior_derivative()?
        .contract(v)?
        .compile(&cc.params)?;
    let pairing_form = eta.contract(v)?;
    let pairing = pairing_form
        .coeff(&[])
        .cloned()
        .unwrap_or_else(crate::expr::Expr::zero);
    let pairing_c = pairing
        .compile(&chart.coord_names(), &cc.params)
        .map_err(GeomError::from)?;
    let lie = eta.lie_derivative(v)?.compile(&cc.params)?;

    let mut res_contraction = 0.0f64;
    let mut at_contraction = vec![];
    let mut res_pairing = 0.0f64;
    let mut at_pairing = vec![];
    let mut res_lie = 0.0f64;
    for p in grid.points(chart) {
        let rc = contraction.max_abs_at(&p);
        if rc > res_contraction {
            res_contraction = rc;
            at_contraction = p.clone();
        }
        let rp = (pairing_c.eval(&p) - 1.0).abs();
        if rp > res_pairing {
            res_pairing = rp;
            at_pairing = p.clone();
        }
        res_lie = res_lie.max(lie.max_abs_at(&p));
    }
    builder.add_residual("iota_v_d_eta", res_contraction);
    builder.add_residual("eta_of_v_minus_one", res_pairing);
    builder.add_residual("lie_derivative", res_lie);

    let pass = res_contraction < tol.residual && res_pairing < tol.residual;
    if res_contraction >= tol.residual {
        builder.add_witness(
            &chart.name,
            &at_contraction,
            res_contraction,
            "i_V d eta residual",
        );
    }
    if res_pairing >= tol.residual {
        builder.add_witness(&chart.name, &at_pairing, res_pairing, "eta(V) - 1 residual");
    }
    let margin = res_contraction.max(res_pairing);
    Ok(builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin))
}

/// Certify `[omega]_b = 0` by a primitive: `d phi = omega`, `phi(R) = 0`
/// and `i_R d phi = 0` (so `phi` is basic for the kernel foliation).
pub fn basic_exactness_witness(
    omega: &KForm,
    phi: &KForm,
    r: &VecField,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let chart = phi.chart();
    let mut builder = ReportBuilder::new("basic_exactness_witness").grid(grid.meta(chart));

    let d_phi = phi.exterior_derivative()?;
    let exactness = d_phi.sub(omega)?.compile(&cc.params)?;
    let pairing_form = phi.contract(r)?;
    let pairing = pairing_form
        .coeff(&[])
        .cloned()
        .unwrap_or_else(crate::expr::Expr::zero);
    let pairing_c = pairing
        .compile(&chart.coord_names(), &cc.params)
        .map_err(GeomError::from)?;
    let basic = d_phi.contract(r)?.compile(&cc.params)?;

    let mut res = [0.0f64; 3];
    let mut at: [Vec<f64>; 3] = [vec![], vec![], vec![]];
    for p in grid.points(chart) {
        let values = [
            exactness.max_abs_at(&p),
            pairing_c.eval(&p).abs(),
            basic.max_abs_at(&p),
        ];
        for (i, v) in values.into_iter().enumerate() {
            if v > res[i] {
                res[i] = v;
                at[i] = p.clone();
            }
        }
    }
    builder.add_residual("d_phi_minus_omega", res[0]);
    builder.add_residual("phi_of_r", res[1]);
    builder.add_residual("iota_r_d_phi", res[2]);
    let names = ["d phi - omega", "phi(R)", "i_R d phi"];
    let mut pass = true;
    for i in 0..3 {
        if res[i] >= tol.residual {
            pass = false;
            builder.add_witness(&chart.name, &at[i], res[i], names[i]);
        }
    }
    let margin = res.into_iter().fold(0.0f64, f64::max);
    Ok(builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin))
}

/// Caller-supplied homology facts consumed by the nontriviality witness;
/// they are input assertions with a recorded justification, never computed.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomologyAssertion {
    NullHomologous {
        orbit: usize,
        justification: String,
    },
    SameClass {
        first: usize,
        second: usize,
        justification: String,
    },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NontrivialityVerdict {
    pub certified: bool,
    pub reason: String,
    pub threshold: f64,
}

/// `[d eta]_b != 0` certification from closed-orbit line integrals: one
/// null-homologous orbit with a nonzero integral, or two orbits in the same
/// class with different integrals.
pub fn nontriviality_witness(
    orbits: &[OrbitResult],
    assertion: &HomologyAssertion,
    closure_tol: f64,
    threshold: f64,
) -> Result<NontrivialityVerdict, VerifyError> {
    let closed = |index: usize| -> Result<&OrbitResult, VerifyError> {
        let orbit = orbits
            .get(index)
            .ok_or(VerifyError::BadOrbitIndex(index, orbits.len()))?;
        if orbit.closure_residual > closure_tol {
            return Err(VerifyError::OrbitNotClosed {
                index,
                residual: orbit.closure_residual,
                tol: closure_tol,
            });
        }
        Ok(orbit)
    };
    Ok(match assertion {
        HomologyAssertion::NullHomologous {
            orbit,
            justification,
        } => {
            let o = closed(*orbit)?;
            if o.integral.abs() > threshold {
                NontrivialityVerdict {
                    certified: true,
                    reason: format!(
                        "null-homologous orbit ({justification}) carries integral {} != 0",
                        o.integral
                    ),
                    threshold,
                }
            } else {
                NontrivialityVerdict {
                    certified: false,
                    reason: format!(
                        "orbit integral {} is below the threshold {threshold}",
                        o.integral
                    ),
                    threshold,
                }
            }
        }
        HomologyAssertion::SameClass {
            first,
            second,
            justification,
        } => {
            let a = closed(*first)?;
            let b = closed(*second)?;
            let gap = (a.integral - b.integral).abs();
            if gap > threshold {
                NontrivialityVerdict {
                    certified: true,
                    reason: format!(
                        "homologous orbits ({justification}) carry different integrals: {} vs {}",
                        a.integral, b.integral
                    ),
                    threshold,
                }
            } else {
                NontrivialityVerdict {
                    certified: false,
                    reason: format!("integral gap {gap} is below the threshold {threshold}"),
                    threshold,
                }
            }
        }
    })
}
