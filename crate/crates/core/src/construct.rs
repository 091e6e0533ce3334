//! Constructive routines: contactization of presymplectic data, open-book
//! gluing of geodesible fields, confoliation-to-contact deformation, and the
//! mapping-torus contact perturbation.
//!
//! Parameter searches ("large enough" / "small enough" constants) run as
//! deterministic doubling or halving sweeps with a bisection refinement for
//! the reported threshold, so the chosen constants are reproducible,
//! testable numbers.

use crate::expr::{BumpSpec, Expr};
use crate::exterior::{GeomError, GeomObject, KForm, VecField};
use crate::manifold::{CarriereModel, ChartComplex, Grid, OpenBookModel};
use crate::pointwise::{PointwiseError, SkewMatrix};
use crate::verify::{
    is_connection, is_contact, is_presymplectic, is_presymplectic_confoliation,
    nontriviality_witness, orbit_integral, HomologyAssertion, NontrivialityVerdict, OrbitOptions,
    OrbitOutcome, ReportBuilder, Tolerances, Verdict, VerificationReport, VerifyError,
};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("rejected input: precondition `{check}` failed")]
    RejectedInput {
        check: String,
        report: Box<VerificationReport>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parameter search failed: no value in the sweep satisfied `{condition}`")]
    SearchFailed {
        condition: String,
        trace: Vec<SearchStep>,
    },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Pointwise(#[from] PointwiseError),
}

/// One probe of a parameter search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchStep {
    pub value: f64,
    pub passed: bool,
    pub margin: f64,
}

/// Outcome of a deformation: the produced form, the chosen parameter, the
/// bisection-refined threshold estimate and the verification evidence.
#[derive(Debug, Clone, Serialize)]
pub struct DeformationResult {
    #[serde(skip)]
    pub form: KForm,
    pub parameter: f64,
    pub threshold: f64,
    pub report: VerificationReport,
    pub trace: Vec<SearchStep>,
}

/// Tolerance of the closed-form Reeb identity check after contactization.
pub const REEB_IDENTITY_TOL: f64 = 1e-8;
const SEARCH_CAP: u32 = 20;
const BISECTION_STEPS: u32 = 10;

/// Pointwise connection check of `eta` against the co-oriented unit kernel
/// field of `d_base`: `eta(R) = 1` and `i_R d eta = 0` on the grid. Also
/// reports the minimum of `phi(R)` when `phi` is supplied.
fn kernel_connection_check(
    d_base: &KForm,
    eta: &KForm,
    phi: Option<&KForm>,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<VerificationReport, ConstructError> {
    let chart = eta.chart();
    let orient = cc
        .orientation(&chart.name)
        .ok_or_else(|| VerifyError::MissingOrientation(chart.name.clone()))?;
    let orient_c = orient.compile(&cc.params)?;
    let d_base_c = d_base.compile(&cc.params)?;
    let eta_c = eta.compile(&cc.params)?;
    let d_eta_c = eta.exterior_derivative()?.compile(&cc.params)?;
    let phi_c = phi.map(|f| f.compile(&cc.params)).transpose()?;

    let mut builder = ReportBuilder::new("connection_along_kernel").grid(grid.meta(chart));
    let mut res_pairing = 0.0f64;
    let mut at_pairing = vec![];
    let mut res_contraction = 0.0f64;
    let mut at_contraction = vec![];
    let mut min_phi = f64::INFINITY;
    let mut at_phi = vec![];
    for p in grid.points(chart) {
        let skew = SkewMatrix::from_compiled_at(&d_base_c, &p)?;
        let vol = |frame: &[Vec<f64>]| orient_c.apply_to_vectors(&p, frame);
        let r = skew.kernel_direction(tol.rank_rel, Some(&vol))?;
        let r_vec: Vec<f64> = r.iter().copied().collect();

        let pairing = (eta_c.apply_to_vectors(&p, std::slice::from_ref(&r_vec)) - 1.0).abs();
        if pairing > res_pairing {
            res_pairing = pairing;
            at_pairing = p.clone();
        }
        let d_eta_skew = SkewMatrix::from_compiled_at(&d_eta_c, &p)?;
        let contraction = (d_eta_skew.matrix() * &r).abs().max();
        if contraction > res_contraction {
            res_contraction = contraction;
            at_contraction = p.clone();
        }
        if let Some(phi_c) = &phi_c {
            let v = phi_c.apply_to_vectors(&p, &[r_vec]);
            if v < min_phi {
                min_phi = v;
                at_phi = p.clone();
            }
        }
    }
    builder.add_residual("eta_of_kernel_minus_one", res_pairing);
    builder.add_residual("iota_kernel_d_eta", res_contraction);
    let mut pass = res_pairing < tol.residual && res_contraction < tol.residual;
    if res_pairing >= tol.residual {
        builder.add_witness(&chart.name, &at_pairing, res_pairing, "eta(R) - 1");
    }
    if res_contraction >= tol.residual {
        builder.add_witness(&chart.name, &at_contraction, res_contraction, "i_R d eta");
    }
    if phi_c.is_some() {
        builder.add_residual("min_phi_of_kernel", min_phi);
        if min_phi < -tol.strict_positive || min_phi.is_nan() {
            pass = false;
            builder.add_witness(&chart.name, &at_phi, min_phi, "phi(R) below zero");
        }
    }
    let margin = res_pairing.max(res_contraction);
    Ok(builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin))
}

fn reject(check: &str, report: VerificationReport) -> ConstructError {
    ConstructError::RejectedInput {
        check: check.to_owned(),
        report: Box::new(report),
    }
}

/// `beta = K phi + eta` made contact by growing `K`.
///
/// Preconditions (each failure rejects the input naming the check):
/// `d phi` is presymplectic, `phi` is nonnegative on the co-oriented kernel
/// field `R` of `d phi`, and `eta` is a connection form along `R`. The
/// smallest passing `K` from the doubling sweep `1, 2, 4, ...` is returned,
/// with a bisection estimate of the contact threshold, and the closed-form
/// Reeb identity `reeb(beta) = R / (K phi(R) + 1)` is verified pointwise.
pub fn contactize(
    phi: &KForm,
    eta: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<DeformationResult, ConstructError> {
    let d_phi = phi.exterior_derivative()?;
    let presym = is_presymplectic(&d_phi, cc, grid, tol)?;
    if !presym.passed() {
        return Err(reject("is_presymplectic", presym));
    }
    let kernel_check = kernel_connection_check(&d_phi, eta, Some(phi), cc, grid, tol)?;
    if !kernel_check.passed() {
        return Err(reject("is_connection", kernel_check));
    }

    let beta_of = |k: f64| -> Result<KForm, GeomError> { phi.scale_const(k).add(eta) };
    let mut trace = Vec::new();
    let mut chosen = None;
    let mut k = 1.0f64;
    for _ in 0..=SEARCH_CAP {
        let beta = beta_of(k)?;
        let report = is_contact(&beta, cc, grid, tol)?;
        trace.push(SearchStep {
            value: k,
            passed: report.passed(),
            margin: report.margin,
        });
        if report.passed() {
            chosen = Some((k, beta, report));
            break;
        }
        k *= 2.0;
    }
    let Some((k, beta, contact_report)) = chosen else {
        return Err(ConstructError::SearchFailed {
            condition: "is_contact".into(),
            trace,
        });
    };

    // Threshold refinement between the last failing and first passing value.
    let mut lo = if k == 1.0 { 0.0 } else { k / 2.0 };
    let mut hi = k;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid == 0.0 {
            break;
        }
        let report = is_contact(&beta_of(mid)?, cc, grid, tol)?;
        trace.push(SearchStep {
            value: mid,
            passed: report.passed(),
            margin: report.margin,
        });
        if report.passed() {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Reeb identity: reeb(beta) = R / (K phi(R) + 1) pointwise.
    let chart = beta.chart();
    let orient_c = cc.orientation(&chart.name).unwrap().compile(&cc.params)?;
    let d_phi_c = d_phi.compile(&cc.params)?;
    let phi_c = phi.compile(&cc.params)?;
    let mut reeb_residual = 0.0f64;
    let mut reeb_at = vec![];
    for p in grid.points(chart) {
        let skew = SkewMatrix::from_compiled_at(&d_phi_c, &p)?;
        let vol = |frame: &[Vec<f64>]| orient_c.apply_to_vectors(&p, frame);
        let r = skew.kernel_direction(tol.rank_rel, Some(&vol))?;
        let r_vec: Vec<f64> = r.iter().copied().collect();
        let scale = k * phi_c.apply_to_vectors(&p, &[r_vec]) + 1.0;
        let expected = r / scale;
        let computed = crate::pointwise::reeb_of_contact(&beta, &p, &cc.params)?;
        let residual = (&computed - &expected).abs().max();
        if residual > reeb_residual {
            reeb_residual = residual;
            reeb_at = p;
        }
    }

    let mut builder = ReportBuilder::new("contactize")
        .grid(grid.meta(chart))
        .residual("min_ratio", contact_report.margin)
        .residual("reeb_identity", reeb_residual);
    let pass = contact_report.passed() && reeb_residual < REEB_IDENTITY_TOL;
    if reeb_residual >= REEB_IDENTITY_TOL {
        builder.add_witness(
            &chart.name,
            &reeb_at,
            reeb_residual,
            "Reeb identity residual",
        );
    }
    let report = builder
        .note(format!("smallest passing K = {k}, threshold estimate {hi}"))
        .finish(
            if pass { Verdict::Pass } else { Verdict::Fail },
            contact_report.margin,
        );

    Ok(DeformationResult {
        form: beta,
        parameter: k,
        threshold: hi,
        report,
        trace,
    })
}

/// `alpha + epsilon eta` made contact by shrinking `epsilon`.
///
/// Preconditions: `alpha` is a presymplectic confoliation form and `eta` a
/// connection form along the kernel field of `d alpha`. The sweep halves
/// from 1 down to `2^-20` and keeps the largest passing value.
pub fn confoliation_contactize(
    alpha: &KForm,
    eta: &KForm,
    cc: &ChartComplex,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<DeformationResult, ConstructError> {
    let pre = is_presymplectic_confoliation(alpha, cc, grid, tol)?;
    if !pre.passed() {
        return Err(reject("is_presymplectic_confoliation", pre));
    }
    let d_alpha = alpha.exterior_derivative()?;
    let kernel_check = kernel_connection_check(&d_alpha, eta, None, cc, grid, tol)?;
    if !kernel_check.passed() {
        return Err(reject("is_connection", kernel_check));
    }

    let mut trace = Vec::new();
    let mut eps = 1.0f64;
    for _ in 0..=SEARCH_CAP {
        let candidate = alpha.add(&eta.scale_const(eps))?;
        let report = is_contact(&candidate, cc, grid, tol)?;
        trace.push(SearchStep {
            value: eps,
            passed: report.passed(),
            margin: report.margin,
        });
        if report.passed() {
            let threshold = eps;
            let final_report = ReportBuilder::new("confoliation_contactize")
                .grid(grid.meta(alpha.chart()))
                .residual("min_ratio", report.margin)
                .note(format!("largest passing epsilon = {eps}"))
                .finish(Verdict::Pass, report.margin);
            return Ok(DeformationResult {
                form: candidate,
                parameter: eps,
                threshold,
                report: final_report,
                trace,
            });
        }
        eps /= 2.0;
    }
    Err(ConstructError::SearchFailed {
        condition: "is_contact".into(),
        trace,
    })
}

/// Bump-profile configuration for the open-book gluing.
///
/// The default construction splits the transition band `[a, b]` into thirds:
/// `g` climbs to 1/2 on the first third, `f` makes its full climb on the
/// middle third while `g` sits at 1/2, and `g` finishes on the last third.
/// That layout enforces the constraint `g = 1/2 wherever f' != 0` by
/// construction; custom profiles are validated against the same constraint.
#[derive(Debug, Clone)]
pub struct GlueConfig {
    pub f_spec: BumpSpec,
    pub g_spec: BumpSpec,
    pub band: (f64, f64),
    /// Optional explicit `(f, g)` profiles in the radial coordinate `r`.
    pub custom_profiles: Option<(Expr, Expr)>,
}

impl Default for GlueConfig {
    fn default() -> Self {
        GlueConfig {
            f_spec: BumpSpec::default(),
            g_spec: BumpSpec::default(),
            band: (0.1, 0.9),
            custom_profiles: None,
        }
    }
}

impl GlueConfig {
    /// Build and validate the `(f, g)` profiles.
    pub fn profiles(&self) -> Result<(Expr, Expr), ConstructError> {
        let (a, b) = self.band;
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(ConstructError::Config(format!(
                "transition band must satisfy 0 < a < b < 1, got [{a}, {b}]"
            )));
        }
        let (f, g) = match &self.custom_profiles {
            Some((f, g)) => (f.clone(), g.clone()),
            None => {
                let third = (b - a) / 3.0;
                let (a1, b1) = (a + third, a + 2.0 * third);
                let r = Expr::coord("r");
                let rescale = |lo: f64, hi: f64| {
                    (r.clone() - Expr::constant(lo)) * Expr::constant(1.0 / (hi - lo))
                };
                let f = Expr::bump("f", self.f_spec, rescale(a1, b1));
                let g_lo = Expr::bump("g_lo", self.g_spec, rescale(a, a1));
                let g_hi = Expr::bump("g_hi", self.g_spec, rescale(b1, b));
                let g = Expr::constant(0.5) * g_lo + Expr::constant(0.5) * g_hi;
                (f, g)
            }
        };
        self.validate(&f, &g)?;
        Ok((f, g))
    }

    /// Sampled validation of the flat bands and of `g = 1/2` on the closure
    /// of `{f' != 0}`.
    fn validate(&self, f: &Expr, g: &Expr) -> Result<(), ConstructError> {
        let (a, b) = self.band;
        let f_prime = f.differentiate("r").map_err(GeomError::from)?;
        let coords = ["r"];
        let params = BTreeMap::new();
        let fc = f.compile(&coords, &params).map_err(GeomError::from)?;
        let gc = g.compile(&coords, &params).map_err(GeomError::from)?;
        let fpc = f_prime.compile(&coords, &params).map_err(GeomError::from)?;
        let n = 10_000;
        for i in 0..=n {
            let r = i as f64 / n as f64;
            let p = [r];
            let (fv, gv, fpv) = (fc.eval(&p), gc.eval(&p), fpc.eval(&p));
            if r < a && (fv.abs() > 1e-12 || gv.abs() > 1e-12) {
                return Err(ConstructError::Config(format!(
                    "profiles must vanish on [0, {a}), violated at r = {r}"
                )));
            }
            if r > b && ((fv - 1.0).abs() > 1e-12 || (gv - 1.0).abs() > 1e-12) {
                return Err(ConstructError::Config(format!(
                    "profiles must equal 1 on ({b}, 1], violated at r = {r}"
                )));
            }
            if fpv.abs() > 1e-12 && (gv - 0.5).abs() > 1e-12 {
                return Err(ConstructError::Config(format!(
                    "g must equal 1/2 wherever f' != 0, violated at r = {r} (g = {gv})"
                )));
            }
        }
        Ok(())
    }
}

/// The glued pair on the tube and page-bundle charts.
#[derive(Debug, Clone)]
pub struct GluedPair {
    pub v_tube: VecField,
    pub eta_tube: KForm,
    pub v_pages: VecField,
    pub eta_pages: KForm,
    /// `V / eta(V)`: the connection-normalized field on the tube. Dividing
    /// the field preserves both connection conditions; dividing the form
    /// instead would add `d(1/w) ^ eta` to the derivative and break
    /// `i_V d eta = 0` exactly where the pairing varies.
    pub v_normalized: VecField,
    /// The pairing `eta(V) = f g + (1 - f)(1 - g)` as a function of `r`.
    pub pairing: Expr,
    pub f: Expr,
    pub g: Expr,
    pub report: VerificationReport,
}

/// Extend the binding pair of an open book to the tube and page bundle:
/// `eta = f(r) dphi + (1 - f(r)) alpha`, `V = g(r) dphi-field +
/// (1 - g(r)) X_B`, flat near the binding and standard near the boundary.
pub fn glue_open_book(
    ob: &OpenBookModel,
    cfg: &GlueConfig,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<GluedPair, ConstructError> {
    let (f, g) = cfg.profiles()?;
    let cc = &ob.complex;

    // Binding pair must already be a connection.
    let binding_grid = Grid::uniform(1, 32);
    let binding = is_connection(&ob.alpha, &ob.x_b, cc, &binding_grid, tol)?;
    if !binding.passed() {
        return Err(reject("is_connection", binding));
    }

    let tube = &ob.tube;
    let d_phi = KForm::coordinate_differential(tube.clone(), "phi")?;
    let one = Expr::one();
    let eta_tube = d_phi
        .scale(&f)
        .add(&ob.alpha_tube.scale(&(one.clone() - f.clone())))?;
    let phi_field = VecField::coordinate_field(tube.clone(), "phi")?;
    let v_tube = phi_field
        .scale(&g)
        .add(&ob.x_b_tube.scale(&(one.clone() - g.clone())))?;

    let v_pages = VecField::coordinate_field(ob.pages.clone(), "phi")?;
    let eta_pages = KForm::coordinate_differential(ob.pages.clone(), "phi")?;

    let mut builder = ReportBuilder::new("glue_open_book").grid(grid.meta(tube));
    let mut pass = true;

    // i_V d eta vanishes under the g = 1/2 constraint, and matches the
    // closed-form f'(r) (1 - 2 g(r)) dr.
    let contraction = eta_tube.exterior_derivative()?.contract(&v_tube)?;
    let f_prime = f.differentiate("r").map_err(GeomError::from)?;
    let formula = KForm::coordinate_differential(tube.clone(), "r")?
        .scale(&(f_prime * (Expr::one() - Expr::constant(2.0) * g.clone())));
    let contraction_c = contraction.compile(&cc.params)?;
    let vs_formula_c = contraction.sub(&formula)?.compile(&cc.params)?;

    // Pairing eta(V) and its closed form.
    let pairing =
        (f.clone() * g.clone() + (one.clone() - f.clone()) * (one.clone() - g.clone())).simplify();
    let pairing_direct = eta_tube
        .contract(&v_tube)?
        .coeff(&[])
        .cloned()
        .unwrap_or_else(Expr::zero);
    let coords = tube.coord_names();
    let pairing_c = pairing_direct
        .compile(&coords, &cc.params)
        .map_err(GeomError::from)?;
    let pairing_formula_c = (pairing_direct.clone() - pairing.clone())
        .compile(&coords, &cc.params)
        .map_err(GeomError::from)?;

    let mut res_contraction = 0.0f64;
    let mut at_contraction = vec![];
    let mut res_formula = 0.0f64;
    let mut min_pairing = f64::INFINITY;
    let mut res_pairing_formula = 0.0f64;
    for p in grid.points(tube) {
        let rc = contraction_c.max_abs_at(&p);
        if rc > res_contraction {
            res_contraction = rc;
            at_contraction = p.clone();
        }
        res_formula = res_formula.max(vs_formula_c.max_abs_at(&p));
        min_pairing = min_pairing.min(pairing_c.eval(&p));
        res_pairing_formula = res_pairing_formula.max(pairing_formula_c.eval(&p).abs());
    }
    builder.add_residual("iota_v_d_eta", res_contraction);
    builder.add_residual("iota_v_d_eta_vs_formula", res_formula);
    builder.add_residual("min_pairing", min_pairing);
    builder.add_residual("pairing_vs_formula", res_pairing_formula);
    if res_contraction >= tol.residual {
        pass = false;
        builder.add_witness(&tube.name, &at_contraction, res_contraction, "i_V d eta");
    }
    if res_formula >= tol.residual || res_pairing_formula >= tol.residual {
        pass = false;
        builder.add_note("closed-form identities for i_V d eta or eta(V) violated".into());
    }
    if min_pairing <= 0.0 || min_pairing.is_nan() {
        pass = false;
        builder.add_note("pairing eta(V) is not positive".into());
    }

    // Flat-band identities: (V, eta) = (X_B, alpha) inside, (dphi-field,
    // dphi) outside. These are exact because the profiles evaluate to
    // literal 0 and 1 there.
    let (a, b) = cfg.band;
    let inner = grid.clone().with_domain(vec![
        (0.0, std::f64::consts::TAU),
        (0.02, a * 0.99),
        (0.0, std::f64::consts::TAU),
    ]);
    let outer = grid.clone().with_domain(vec![
        (0.0, std::f64::consts::TAU),
        (b + (1.0 - b) * 0.01, 1.0),
        (0.0, std::f64::consts::TAU),
    ]);
    let eta_minus_alpha = eta_tube.sub(&ob.alpha_tube)?.compile(&cc.params)?;
    let eta_minus_dphi = eta_tube.sub(&d_phi)?.compile(&cc.params)?;
    let v_minus_xb = v_tube
        .add(&ob.x_b_tube.scale(&Expr::constant(-1.0)))?
        .compile(&cc.params)?;
    let v_minus_phi = v_tube
        .add(&phi_field.scale(&Expr::constant(-1.0)))?
        .compile(&cc.params)?;
    let max_field = |c: &crate::exterior::CompiledField, pts: &[Vec<f64>]| {
        pts.iter()
            .map(|p| c.eval(p).iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .fold(0.0, f64::max)
    };
    let inner_pts = inner.points(tube);
    let outer_pts = outer.points(tube);
    let flat_inner_eta = inner_pts
        .iter()
        .map(|p| eta_minus_alpha.max_abs_at(p))
        .fold(0.0, f64::max);
    let flat_outer_eta = outer_pts
        .iter()
        .map(|p| eta_minus_dphi.max_abs_at(p))
        .fold(0.0, f64::max);
    let flat_inner_v = max_field(&v_minus_xb, &inner_pts);
    let flat_outer_v = max_field(&v_minus_phi, &outer_pts);
    builder.add_residual("flat_inner_eta", flat_inner_eta);
    builder.add_residual("flat_inner_v", flat_inner_v);
    builder.add_residual("flat_outer_eta", flat_outer_eta);
    builder.add_residual("flat_outer_v", flat_outer_v);
    if flat_inner_eta > 0.0 || flat_inner_v > 0.0 || flat_outer_eta > 0.0 || flat_outer_v > 0.0 {
        pass = false;
        builder.add_note("flat-band identities are not exact".into());
    }

    // Collar matching with the page-bundle pair.
    let collar_eta = cc.check_map_match(
        &ob.collar,
        &GeomObject::Form(eta_tube.clone()),
        &GeomObject::Form(eta_pages.clone()),
        grid,
        tol.residual,
    )?;
    let collar_v = cc.check_map_match(
        &ob.collar,
        &GeomObject::Field(v_tube.clone()),
        &GeomObject::Field(v_pages.clone()),
        grid,
        tol.residual,
    )?;
    builder.add_residual("collar_eta", collar_eta.margin);
    builder.add_residual("collar_v", collar_v.margin);
    pass &= collar_eta.passed() && collar_v.passed();

    // Connection-normalized pair: divide the field by the pairing.
    let v_normalized = v_tube.scale(&Expr::powi(pairing.clone(), -1));
    let normalized = is_connection(&eta_tube, &v_normalized, cc, grid, tol)?;
    builder.add_residual(
        "normalized_iota",
        normalized
            .residuals
            .get("iota_v_d_eta")
            .copied()
            .unwrap_or(0.0),
    );
    builder.add_residual(
        "normalized_pairing",
        normalized
            .residuals
            .get("eta_of_v_minus_one")
            .copied()
            .unwrap_or(0.0),
    );
    builder.add_residual(
        "normalized_lie",
        normalized
            .residuals
            .get("lie_derivative")
            .copied()
            .unwrap_or(0.0),
    );
    pass &= normalized.passed();

    // Page-bundle pair is a connection on its own chart.
    let pages_connection = is_connection(&eta_pages, &v_pages, cc, grid, tol)?;
    pass &= pages_connection.passed();

    let margin = min_pairing;
    let report = builder.finish(if pass { Verdict::Pass } else { Verdict::Fail }, margin);
    Ok(GluedPair {
        v_tube,
        eta_tube,
        v_pages,
        eta_pages,
        v_normalized,
        pairing,
        f,
        g,
        report,
    })
}

/// Contact perturbation of the mapping torus: `phi_eps = alpha1 + eps
/// alpha2`. The eigen-labeling of the model already makes
/// `alpha1 ^ alpha2 ^ dt` positively oriented, so the contact volume is the
/// constant `2 eps ln(lambda)` multiple of that reference top form; the
/// report carries the sampled ratio statistics.
pub fn carriere_contact(
    model: &CarriereModel,
    eps: f64,
) -> Result<(KForm, VerificationReport), ConstructError> {
    if eps < 0.0 {
        return Err(ConstructError::Config(format!(
            "perturbation size must be nonnegative, got {eps}"
        )));
    }
    let tol = Tolerances::default();
    let grid = Grid::default_for(&model.chart);
    let cc = &model.complex;
    let phi_eps = model.alpha1.add(&model.alpha2.scale_const(eps))?;
    let contact = is_contact(&phi_eps, cc, &grid, &tol)?;

    // Reference top form alpha1 ^ alpha2 ^ dt and the pointwise ratio.
    let dt = KForm::coordinate_differential(model.chart.clone(), "t")?;
    let reference = model.alpha1.wedge(&model.alpha2)?.wedge(&dt)?;
    let top = phi_eps.wedge(&phi_eps.exterior_derivative()?)?;
    let reference_c = reference.compile(&cc.params)?;
    let top_c = top.compile(&cc.params)?;
    let idx: Vec<usize> = (0..3).collect();
    let mut ratios = Vec::new();
    for p in grid.points(&model.chart) {
        let t = top_c
            .coeffs_at(&p)
            .iter()
            .find(|(i, _)| *i == idx.as_slice())
            .map_or(0.0, |(_, v)| *v);
        let r = reference_c
            .coeffs_at(&p)
            .iter()
            .find(|(i, _)| *i == idx.as_slice())
            .map_or(0.0, |(_, v)| *v);
        ratios.push(t / r);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let expected = 2.0 * eps * model.lambda.ln();

    let mut builder = ReportBuilder::new("carriere_contact")
        .grid(grid.meta(&model.chart))
        .residual("min_ratio", contact.margin)
        .residual("ratio_mean", mean)
        .residual("ratio_std", var.sqrt())
        .residual("ratio_vs_expected", (mean - expected).abs())
        .note(format!(
            "expected constant ratio 2 eps ln(lambda) = {expected}"
        ));
    for w in &contact.witnesses {
        builder.add_witness(&w.chart, &w.point, w.value, &w.what);
    }
    let report = builder.finish(contact.verdict, contact.margin);
    Ok((phi_eps, report))
}

/// End-to-end pipeline: binding connection on the trivial open book, glued
/// pair, closed orbit in the outer flat band, and the basic-cohomology
/// nontriviality witness from its line integral.
#[derive(Debug, Serialize)]
pub struct DemoResult {
    pub stages: Vec<(String, VerificationReport)>,
    pub orbit: OrbitOutcome,
    pub witness: NontrivialityVerdict,
    pub passed: bool,
}

pub fn assemble_geodesible_demo() -> Result<DemoResult, ConstructError> {
    let tol = Tolerances::default();
    let ob = crate::manifold::builtin_trivial_open_book();
    let grid = Grid::uniform(3, 16);
    let mut stages = Vec::new();
    let mut passed = true;

    let binding = is_connection(&ob.alpha, &ob.x_b, &ob.complex, &Grid::uniform(1, 32), &tol)?;
    passed &= binding.passed();
    stages.push(("binding_connection".to_string(), binding));

    let glued = glue_open_book(&ob, &GlueConfig::default(), &grid, &tol)?;
    passed &= glued.report.passed();
    stages.push(("glue_open_book".to_string(), glued.report.clone()));

    let normalized = is_connection(
        &glued.eta_tube,
        &glued.v_normalized,
        &ob.complex,
        &grid,
        &tol,
    )?;
    passed &= normalized.passed();
    stages.push(("normalized_connection".to_string(), normalized));

    // Closed orbit in the outer flat band, where V = dphi-field and
    // eta = dphi: one circle of length 2 pi.
    let opts = OrbitOptions::default();
    let seed = [0.0, 0.95, 0.0];
    let orbit = orbit_integral(&glued.v_tube, &glued.eta_tube, &seed, &ob.complex, &opts)?;
    let witness = match orbit.closed() {
        Some(result) => {
            let assertion = HomologyAssertion::NullHomologous {
                orbit: 0,
                justification: "the phi-circle at fixed (theta, r) bounds the disk \
                                {theta} x {radius <= r} inside the solid-torus tube"
                    .into(),
            };
            nontriviality_witness(&[*result], &assertion, opts.closure_tol, 1e-6)?
        }
        None => NontrivialityVerdict {
            certified: false,
            reason: "no closed orbit found in the outer band".into(),
            threshold: 1e-6,
        },
    };
    passed &= orbit.closed().is_some() && witness.certified;

    Ok(DemoResult {
        stages,
        orbit,
        witness,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin_carriere, builtin_local_chart};
    use std::f64::consts::TAU;

    fn local3() -> (ChartComplex, crate::chart::ChartRef) {
        let cc = builtin_local_chart(3).unwrap();
        let chart = cc.chart("box").unwrap().clone();
        (cc, chart)
    }

    #[test]
    fn contactize_linear_example() {
        // phi = x dy, eta = dz: beta = K x dy + dz is contact with K = 1 and
        // Reeb field d/dz.
        let (cc, chart) = local3();
        let phi = KForm::one_form(chart.clone(), &[("y", Expr::coord("x"))]).unwrap();
        let eta = KForm::coordinate_differential(chart.clone(), "z").unwrap();
        let grid = Grid::uniform(3, 6);
        let result = contactize(&phi, &eta, &cc, &grid, &Tolerances::default()).unwrap();
        assert_eq!(result.parameter, 1.0);
        assert!(result.report.passed());
        // Contact volume coefficient equals K.
        assert!((result.report.residuals["min_ratio"] - 1.0).abs() < 1e-12);
        assert!(result.report.residuals["reeb_identity"] < REEB_IDENTITY_TOL);
        // Monotonicity along the trace and beyond.
        for step in &result.trace {
            if step.value >= result.parameter {
                assert!(step.passed);
            }
        }
        for k in [2.0, 4.0] {
            let beta = phi.scale_const(k).add(&eta).unwrap();
            assert!(is_contact(&beta, &cc, &grid, &Tolerances::default())
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn contactize_reeb_identity_with_nonzero_phi_pairing() {
        // phi = x dy + c dz pairs with the kernel field: phi(d/dz) = c, so
        // the closed-form Reeb field is d/dz scaled by 1/(K c + 1).
        let (cc, chart) = local3();
        let c = 0.5;
        let phi = KForm::one_form(
            chart.clone(),
            &[("y", Expr::coord("x")), ("z", Expr::constant(c))],
        )
        .unwrap();
        let eta = KForm::coordinate_differential(chart, "z").unwrap();
        let grid = Grid::uniform(3, 6);
        let result = contactize(&phi, &eta, &cc, &grid, &Tolerances::default()).unwrap();
        assert!(result.report.passed(), "{:?}", result.report);
        assert!(result.report.residuals["reeb_identity"] < REEB_IDENTITY_TOL);
        let k = result.parameter;
        let reeb = crate::pointwise::reeb_of_contact(
            &result.form,
            &[0.4, 0.6, 0.5],
            &std::collections::BTreeMap::new(),
        )
        .unwrap();
        let expected = 1.0 / (k * c + 1.0);
        assert!(
            (reeb[2] - expected).abs() < 1e-10,
            "reeb {reeb:?} vs {expected}"
        );
    }

    #[test]
    fn contactize_rejects_mapping_torus_inputs() {
        let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
        let err = contactize(
            &m.alpha1,
            &m.alpha2,
            &m.complex,
            &Grid::uniform(3, 6),
            &Tolerances::default(),
        )
        .unwrap_err();
        match err {
            ConstructError::RejectedInput { check, .. } => assert_eq!(check, "is_connection"),
            other => panic!("expected rejected input, got {other:?}"),
        }
    }

    #[test]
    fn confoliation_contactize_linear_example() {
        // alpha = (x + 1) dy is a presymplectic confoliation with kernel
        // d/dz; alpha + eps dz is contact for every eps > 0.
        let (cc, chart) = local3();
        let alpha =
            KForm::one_form(chart.clone(), &[("y", Expr::coord("x") + Expr::one())]).unwrap();
        let eta = KForm::coordinate_differential(chart.clone(), "z").unwrap();
        let grid = Grid::uniform(3, 6);
        let result =
            confoliation_contactize(&alpha, &eta, &cc, &grid, &Tolerances::default()).unwrap();
        assert_eq!(
            result.parameter, 1.0,
            "largest epsilon in the sweep passes first"
        );
        assert!(result.report.passed());
        // Top coefficient equals eps.
        assert!((result.report.residuals["min_ratio"] - 1.0).abs() < 1e-12);

        // eps = 0 is the confoliation boundary: margin 0, not contact.
        let report = is_contact(&alpha, &cc, &grid, &Tolerances::default()).unwrap();
        assert!(!report.passed());
        assert!(report.margin.abs() < 1e-12);
    }

    #[test]
    fn confoliation_contactize_rejects_mapping_torus() {
        let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
        for eta in [
            m.alpha2.clone(),
            KForm::coordinate_differential(m.chart.clone(), "t").unwrap(),
        ] {
            let err = confoliation_contactize(
                &m.alpha1,
                &eta,
                &m.complex,
                &Grid::uniform(3, 6),
                &Tolerances::default(),
            )
            .unwrap_err();
            match err {
                ConstructError::RejectedInput { check, .. } => {
                    assert_eq!(check, "is_connection");
                }
                other => panic!("expected rejected input, got {other:?}"),
            }
        }
    }

    #[test]
    fn glue_config_constraint_violation_is_rejected() {
        // f and g sharing one bump violates g = 1/2 on supp f'.
        let bad = GlueConfig {
            custom_profiles: Some((
                Expr::bump("f", BumpSpec::default(), Expr::coord("r")),
                Expr::bump("g", BumpSpec::default(), Expr::coord("r")),
            )),
            band: (0.2, 0.8),
            ..GlueConfig::default()
        };
        assert!(matches!(bad.profiles(), Err(ConstructError::Config(_))));

        let bad_band = GlueConfig {
            band: (0.9, 0.1),
            ..GlueConfig::default()
        };
        assert!(matches!(
            bad_band.profiles(),
            Err(ConstructError::Config(_))
        ));
    }

    #[test]
    fn glue_open_book_default_config() {
        let ob = crate::manifold::builtin_trivial_open_book();
        let grid = Grid::uniform(3, 12);
        let glued =
            glue_open_book(&ob, &GlueConfig::default(), &grid, &Tolerances::default()).unwrap();
        assert!(glued.report.passed(), "{:?}", glued.report);
        assert!(glued.report.residuals["iota_v_d_eta"] < 1e-9);
        assert!(glued.report.residuals["iota_v_d_eta_vs_formula"] < 1e-9);
        assert!((glued.report.residuals["min_pairing"] - 0.5).abs() < 1e-12);
        assert_eq!(glued.report.residuals["flat_inner_eta"], 0.0);
        assert_eq!(glued.report.residuals["flat_outer_v"], 0.0);
        // Connection pass forces the Lie residual below twice the tolerance
        // (Cartan combination of the two checked conditions).
        assert!(glued.report.residuals["normalized_lie"] < 2e-9);

        // Pairing is exactly 1/2 at a mid-band point and 1 on flat bands.
        let coords = ob.tube.coord_names();
        let pairing = glued.pairing.compile(&coords, &ob.complex.params).unwrap();
        let mid = 0.5 * (0.1 + 0.9);
        assert!((pairing.eval(&[0.0, mid, 0.0]) - 0.5).abs() < 1e-12);
        assert!((pairing.eval(&[0.0, 0.05, 0.0]) - 1.0).abs() < 1e-12);
        assert!((pairing.eval(&[0.0, 0.95, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn demo_pipeline_passes_end_to_end() {
        let demo = assemble_geodesible_demo().unwrap();
        assert!(
            demo.passed,
            "stages: {:?}",
            demo.stages
                .iter()
                .map(|(n, r)| (n.clone(), r.verdict))
                .collect::<Vec<_>>()
        );
        let orbit = demo.orbit.closed().expect("outer-band orbit closes");
        assert!((orbit.integral - TAU).abs() < 1e-6);
        assert!(demo.witness.certified);
    }

    #[test]
    fn carriere_contact_ratio_scales_linearly() {
        let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
        let ln_lambda = m.lambda.ln();
        for eps in [1.0, 0.1, 0.01] {
            let (_, report) = carriere_contact(&m, eps).unwrap();
            assert!(report.passed(), "eps = {eps}: {report:?}");
            let expected = 2.0 * eps * ln_lambda;
            assert!(
                (report.residuals["ratio_mean"] - expected).abs() < 1e-9,
                "eps = {eps}: mean {} vs {expected}",
                report.residuals["ratio_mean"]
            );
            assert!(report.residuals["ratio_std"] < 1e-9);
        }
        // Boundary case eps = 0: fails with zero margin.
        let (_, report) = carriere_contact(&m, 0.0).unwrap();
        assert!(!report.passed());
        assert!(report.margin.abs() < 1e-10);
        // Negative eps is rejected outright.
        assert!(matches!(
            carriere_contact(&m, -0.5),
            Err(ConstructError::Config(_))
        ));
    }
}
