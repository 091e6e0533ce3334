//! Built-in manifold models.
//!
//! * [`builtin_carriere`] — the mapping torus of a hyperbolic toral
//!   automorphism, with its eigen-covector 1-forms and kernel fields.
//! * [`builtin_trivial_open_book`] — the 3-sphere presented as an open book
//!   with circle binding, solid-torus tube and identity-monodromy page
//!   bundle.
//! * [`builtin_local_chart`] — a plain odd-dimensional coordinate box.
//! * [`builtin_t3_contact`] — the standard contact 3-torus, the positive
//!   control for the contact checker.

use super::ChartComplex;
use crate::chart::{Chart, ChartRef, CoordSpec};
use crate::expr::Expr;
use crate::exterior::{GeomError, GeomObject, KForm, SmoothMap, VecField};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("matrix is not a hyperbolic torus automorphism: need det = 1 and trace > 2, got det = {det}, trace = {trace}")]
    NotHyperbolic { det: i64, trace: i64 },
    #[error("local chart dimension must be odd and at least 3, got {0}")]
    BadDimension(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Mapping torus `T^2 x R / (x, t) ~ (A x, t + 1)` of a hyperbolic
/// `A` in SL(2, Z), with the eigen-structure needed by every check.
///
/// Labeling convention (forced by invariance under the gluing map, and
/// recorded in `convention`): `mu1` spans the contracting eigendirection
/// (eigenvalue `1/lambda`), `mu2` the expanding one (eigenvalue `lambda`),
/// and `v1`, `v2` is the dual covector basis, so `v1 ∘ A = v1 / lambda`.
/// Then `alpha1 = lambda^t v1` and `alpha2 = lambda^-t v2` are invariant
/// under the identification, `d alpha1 = ln(lambda) dt ^ alpha1`, and the
/// kernel of `d alpha1` is spanned by `mu2`. The raw eigen objects `mu_i`,
/// `v_i` live on the covering chart only and deliberately fail descent; the
/// invariant section of the kernel line is `reeb = lambda^t mu2`. Eigenvector
/// signs are chosen so `(mu1, mu2)` is positively oriented in `(x, y)`,
/// which makes `alpha1 ^ alpha2 ^ dt` a positive multiple of the
/// orientation form.
#[derive(Debug, Clone)]
pub struct CarriereModel {
    pub matrix: [[i64; 2]; 2],
    /// Larger eigenvalue of the matrix (> 1), numerically.
    pub lambda: f64,
    /// The eigenvalue as a symbolic parameter, bound in `complex.params`.
    pub lambda_expr: Expr,
    pub complex: ChartComplex,
    pub chart: ChartRef,
    pub mu1: VecField,
    pub mu2: VecField,
    pub v1: KForm,
    pub v2: KForm,
    pub alpha1: KForm,
    pub alpha2: KForm,
    /// Invariant Reeb section of `ker d alpha1`: `lambda^t mu2`.
    pub reeb: VecField,
    pub convention: String,
}

impl CarriereModel {
    /// Objects that are well defined on the quotient and must pass descent.
    pub fn quotient_objects(&self) -> Vec<(&'static str, GeomObject)> {
        let dt = KForm::coordinate_differential(self.chart.clone(), "t").unwrap();
        vec![
            ("alpha1", GeomObject::Form(self.alpha1.clone())),
            ("alpha2", GeomObject::Form(self.alpha2.clone())),
            ("dt", GeomObject::Form(dt)),
            ("reeb", GeomObject::Field(self.reeb.clone())),
        ]
    }
}

/// Build the mapping-torus model for `A`, rejecting non-hyperbolic input.
pub fn builtin_carriere(matrix: [[i64; 2]; 2]) -> Result<CarriereModel, ModelError> {
    let [[a, b], [c, d]] = matrix;
    let det = a * d - b * c;
    let trace = a + d;
    if det != 1 || trace <= 2 {
        return Err(ModelError::NotHyperbolic { det, trace });
    }
    // det = 1 with integer entries and trace > 2 forces b != 0 (otherwise
    // a d = 1 pins the trace to +-2).
    debug_assert!(b != 0);

    let tr = trace as f64;
    let lambda_value = (tr + (tr * tr - 4.0).sqrt()) / 2.0;
    let lambda = Expr::param("lambda");
    let lambda_inv = Expr::powi(lambda.clone(), -1);

    let chart = Chart::new(
        "torus",
        vec![
            CoordSpec::periodic("x", 1.0),
            CoordSpec::periodic("y", 1.0),
            CoordSpec::interval("t", 0.0, 1.0),
        ],
    );

    // Eigenvectors (b, lambda - a) and (b, 1/lambda - a); flip mu1 when
    // b < 0 so (mu1, mu2) is positively oriented.
    let (af, bf) = (a as f64, b as f64);
    let sign = if b > 0 { 1.0 } else { -1.0 };
    let mu2_x = Expr::constant(bf);
    let mu2_y = lambda.clone() - Expr::constant(af);
    let mu1_x = Expr::constant(sign * bf);
    let mu1_y = (lambda_inv.clone() - Expr::constant(af)) * Expr::constant(sign);

    let mu1 = VecField::new(chart.clone(), &[("x", mu1_x.clone()), ("y", mu1_y.clone())])?;
    let mu2 = VecField::new(chart.clone(), &[("x", mu2_x.clone()), ("y", mu2_y.clone())])?;

    // Dual covector basis from the inverse of the eigenvector matrix.
    let det_e = (mu1_x.clone() * mu2_y.clone() - mu1_y.clone() * mu2_x.clone()).simplify();
    let det_inv = Expr::powi(det_e, -1);
    let v1 = KForm::one_form(
        chart.clone(),
        &[
            ("x", (mu2_y.clone() * det_inv.clone()).simplify()),
            ("y", (mu2_x.clone().neg() * det_inv.clone()).simplify()),
        ],
    )?;
    let v2 = KForm::one_form(
        chart.clone(),
        &[
            ("x", (mu1_y.clone().neg() * det_inv.clone()).simplify()),
            ("y", (mu1_x.clone() * det_inv).simplify()),
        ],
    )?;

    let lambda_pow_t = Expr::pow(lambda.clone(), Expr::coord("t"));
    let lambda_pow_neg_t = Expr::pow(lambda.clone(), Expr::coord("t").neg());
    let alpha1 = v1.scale(&lambda_pow_t);
    let alpha2 = v2.scale(&lambda_pow_neg_t);
    let reeb = mu2.scale(&lambda_pow_t);

    let mut complex = ChartComplex::new();
    complex.params.insert("lambda".into(), lambda_value);
    let orientation = volume_form(&chart)?;
    complex.add_chart(chart.clone(), orientation)?;
    let monodromy = SmoothMap::new(
        "monodromy",
        chart.clone(),
        chart.clone(),
        &[
            (
                "x",
                Expr::constant(af) * Expr::coord("x") + Expr::constant(bf) * Expr::coord("y"),
            ),
            (
                "y",
                Expr::constant(c as f64) * Expr::coord("x")
                    + Expr::constant(d as f64) * Expr::coord("y"),
            ),
            ("t", Expr::coord("t") + Expr::one()),
        ],
    )?;
    complex.add_identification(monodromy);

    let convention = format!(
        "mu1 = contracting eigendirection (eigenvalue 1/lambda), mu2 = expanding \
         (eigenvalue lambda), eigenvector signs oriented so det(mu1, mu2) > 0; \
         alpha1 = lambda^t v1 and alpha2 = lambda^-t v2 are the identifications-invariant \
         scalings (lambda = {lambda_value})"
    );

    Ok(CarriereModel {
        matrix,
        lambda: lambda_value,
        lambda_expr: lambda,
        complex,
        chart,
        mu1,
        mu2,
        v1,
        v2,
        alpha1,
        alpha2,
        reeb,
        convention,
    })
}

/// `dx_1 ^ ... ^ dx_n` for a chart.
fn volume_form(chart: &ChartRef) -> Result<KForm, GeomError> {
    let mut acc = KForm::function(chart.clone(), Expr::one());
    for spec in &chart.coords {
        acc = acc.wedge(&KForm::coordinate_differential(chart.clone(), &spec.name)?)?;
    }
    Ok(acc)
}

/// Plain odd-dimensional box chart `[0,1]^dim`, no identifications.
/// Coordinates are `x, y, z` in dimension 3 and `x1..xn` above.
pub fn builtin_local_chart(dim: usize) -> Result<ChartComplex, ModelError> {
    if dim % 2 == 0 || dim < 3 {
        return Err(ModelError::BadDimension(dim));
    }
    let names: Vec<String> = if dim == 3 {
        vec!["x".into(), "y".into(), "z".into()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    };
    let chart = Chart::new(
        "box",
        names
            .iter()
            .map(|n| CoordSpec::interval(n, 0.0, 1.0))
            .collect(),
    );
    let mut complex = ChartComplex::new();
    let orientation = volume_form(&chart)?;
    complex.add_chart(chart, orientation)?;
    Ok(complex)
}

/// The standard contact 3-torus: all coordinates periodic with period 1,
/// `alpha = cos(2 pi z) dx - sin(2 pi z) dy`, whose contact volume is the
/// constant `2 pi` multiple of the orientation form.
#[derive(Debug, Clone)]
pub struct T3Contact {
    pub complex: ChartComplex,
    pub chart: ChartRef,
    pub alpha: KForm,
    /// `cos(2 pi z) d/dx - sin(2 pi z) d/dy`, the Reeb field of `alpha`.
    pub reeb: VecField,
}

pub fn builtin_t3_contact() -> T3Contact {
    let chart = Chart::new(
        "t3",
        vec![
            CoordSpec::periodic("x", 1.0),
            CoordSpec::periodic("y", 1.0),
            CoordSpec::periodic("z", 1.0),
        ],
    );
    let two_pi_z = Expr::constant(TAU) * Expr::coord("z");
    let alpha = KForm::one_form(
        chart.clone(),
        &[
            ("x", Expr::cos(two_pi_z.clone())),
            ("y", Expr::sin(two_pi_z.clone()).neg()),
        ],
    )
    .unwrap();
    let reeb = VecField::new(
        chart.clone(),
        &[
            ("x", Expr::cos(two_pi_z.clone())),
            ("y", Expr::sin(two_pi_z).neg()),
        ],
    )
    .unwrap();
    let mut complex = ChartComplex::new();
    let orientation = volume_form(&chart).unwrap();
    complex.add_chart(chart.clone(), orientation).unwrap();
    T3Contact {
        complex,
        chart,
        alpha,
        reeb,
    }
}

/// The 3-sphere as an open book with circle binding and disk pages,
/// identity monodromy.
///
/// Charts:
/// * `binding` — the circle, coordinate `theta` (period `2 pi`);
/// * `tube` — binding times disk, `(theta, r, phi)` with `r` in `[0, 1]`
///   and fibration angle `phi` (period `2 pi`);
/// * `pages` — page times circle, polar page coordinates `(rho, psi)` with
///   the same fibration angle `phi`; the page boundary `rho = 1` meets the
///   tube boundary `r = 1`.
///
/// The collar identification glues the outer tube band `r in [0.9, 1]` to
/// the pages chart by `rho = 2 - r`, `psi = theta`, `phi = phi`. The
/// fibration projection is defined on the tube by `s = phi`.
#[derive(Debug, Clone)]
pub struct OpenBookModel {
    pub complex: ChartComplex,
    pub binding: ChartRef,
    pub tube: ChartRef,
    pub pages: ChartRef,
    pub base: ChartRef,
    /// Binding field `d/d theta` with its connection form `d theta`.
    pub x_b: VecField,
    pub alpha: KForm,
    /// Lifts of the binding pair to the tube chart.
    pub x_b_tube: VecField,
    pub alpha_tube: KForm,
    /// Fibration projection `tube -> base circle`, `s = phi`.
    pub fibration: SmoothMap,
    /// Collar identification `tube -> pages` on `r in [0.9, 1]`.
    pub collar: SmoothMap,
    /// Start of the collar band in `r`.
    pub collar_start: f64,
}

pub fn builtin_trivial_open_book() -> OpenBookModel {
    let binding = Chart::new("binding", vec![CoordSpec::periodic("theta", TAU)]);
    let tube = Chart::new(
        "tube",
        vec![
            CoordSpec::periodic("theta", TAU),
            CoordSpec::interval("r", 0.0, 1.0),
            CoordSpec::periodic("phi", TAU),
        ],
    );
    let collar_start = 0.9;
    let pages = Chart::new(
        "pages",
        vec![
            CoordSpec::interval("rho", 0.0, 1.1),
            CoordSpec::periodic("psi", TAU),
            CoordSpec::periodic("phi", TAU),
        ],
    );
    let base = Chart::new("base", vec![CoordSpec::periodic("s", TAU)]);

    let x_b = VecField::coordinate_field(binding.clone(), "theta").unwrap();
    let alpha = KForm::coordinate_differential(binding.clone(), "theta").unwrap();
    let x_b_tube = VecField::coordinate_field(tube.clone(), "theta").unwrap();
    let alpha_tube = KForm::coordinate_differential(tube.clone(), "theta").unwrap();

    let fibration = SmoothMap::new(
        "fibration",
        tube.clone(),
        base.clone(),
        &[("s", Expr::coord("phi"))],
    )
    .unwrap();

    let collar = SmoothMap::new(
        "collar",
        tube.clone(),
        pages.clone(),
        &[
            ("rho", Expr::constant(2.0) - Expr::coord("r")),
            ("psi", Expr::coord("theta")),
            ("phi", Expr::coord("phi")),
        ],
    )
    .unwrap()
    .with_domain(vec![(0.0, TAU), (collar_start, 1.0), (0.0, TAU)]);

    let mut complex = ChartComplex::new();
    complex
        .add_chart(
            binding.clone(),
            KForm::coordinate_differential(binding.clone(), "theta").unwrap(),
        )
        .unwrap();
    // Polar-area weights keep the orientation forms honest volume forms;
    // grids keep away from the axes where they vanish.
    let tube_orient = volume_form(&tube).unwrap().scale(&Expr::coord("r"));
    complex.add_chart(tube.clone(), tube_orient).unwrap();
    let pages_orient = volume_form(&pages).unwrap().scale(&Expr::coord("rho"));
    complex.add_chart(pages.clone(), pages_orient).unwrap();
    complex
        .add_chart(
            base.clone(),
            KForm::coordinate_differential(base.clone(), "s").unwrap(),
        )
        .unwrap();
    complex.add_identification(collar.clone());

    OpenBookModel {
        complex,
        binding,
        tube,
        pages,
        base,
        x_b,
        alpha,
        x_b_tube,
        alpha_tube,
        fibration,
        collar,
        collar_start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Grid;
    use rand::Rng;
    use rand::SeedableRng;

    // Larger root of the characteristic polynomial x^2 - 3x + 1 of
    // [[2,1],[1,1]], and its logarithm.
    const LAMBDA: f64 = 2.618033988749895;
    const LN_LAMBDA: f64 = 0.962423650119207;

    fn model() -> CarriereModel {
        builtin_carriere([[2, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn carriere_rejects_non_hyperbolic() {
        assert!(matches!(
            builtin_carriere([[1, 1], [0, 1]]),
            Err(ModelError::NotHyperbolic { trace: 2, .. })
        ));
        assert!(matches!(
            builtin_carriere([[2, 1], [1, 2]]),
            Err(ModelError::NotHyperbolic { det: 3, .. })
        ));
    }

    #[test]
    fn carriere_eigendata_matches_characteristic_polynomial() {
        let m = model();
        assert!((m.lambda - LAMBDA).abs() < 1e-12);
        // Eigenvector directions (1, lambda - 2) and (1, 1/lambda - 2).
        let params = &m.complex.params;
        let mu2 = m.mu2.compile(params).unwrap().eval(&[0.0, 0.0, 0.0]);
        assert!((mu2[1] / mu2[0] - (LAMBDA - 2.0)).abs() < 1e-12);
        let mu1 = m.mu1.compile(params).unwrap().eval(&[0.0, 0.0, 0.0]);
        assert!((mu1[1] / mu1[0] - (1.0 / LAMBDA - 2.0)).abs() < 1e-12);
        // A mu2 = lambda mu2.
        let a_mu2 = [2.0 * mu2[0] + mu2[1], mu2[0] + mu2[1]];
        assert!((a_mu2[0] - LAMBDA * mu2[0]).abs() < 1e-12);
        assert!((a_mu2[1] - LAMBDA * mu2[1]).abs() < 1e-12);
    }

    #[test]
    fn dual_pairing_holds_pointwise() {
        let m = model();
        let params = &m.complex.params;
        let v1 = m.v1.compile(params).unwrap();
        let v2 = m.v2.compile(params).unwrap();
        let mu1 = m.mu1.compile(params).unwrap();
        let mu2 = m.mu2.compile(params).unwrap();
        let p = [0.3, 0.7, 0.4];
        let pair =
            |form: &crate::exterior::CompiledForm, vec: Vec<f64>| form.apply_to_vectors(&p, &[vec]);
        assert!((pair(&v1, mu1.eval(&p)) - 1.0).abs() < 1e-12);
        assert!(pair(&v1, mu2.eval(&p)).abs() < 1e-12);
        assert!(pair(&v2, mu1.eval(&p)).abs() < 1e-12);
        assert!((pair(&v2, mu2.eval(&p)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha1_kills_mu2_at_random_points() {
        let m = model();
        let params = &m.complex.params;
        let alpha1 = m.alpha1.compile(params).unwrap();
        let mu2 = m.mu2.compile(params).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = [
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ];
            let v = alpha1.apply_to_vectors(&p, &[mu2.eval(&p)]);
            assert!(v.abs() < 1e-12, "alpha1(mu2) = {v} at {p:?}");
        }
    }

    #[test]
    fn invariant_objects_descend_raw_covector_does_not() {
        let m = model();
        let grid = Grid::uniform(3, 8);
        for (name, obj) in m.quotient_objects() {
            let report = m.complex.check_descends(&obj, &grid, 1e-9).unwrap();
            assert!(
                report.passed(),
                "{name} failed descent: margin {}",
                report.margin
            );
        }
        // The unscaled covector transforms with an eigenvalue factor.
        let report = m
            .complex
            .check_descends(&GeomObject::Form(m.v1.clone()), &grid, 1e-9)
            .unwrap();
        assert!(!report.passed());
        // Residual scale is |1/lambda - 1| times the covector size.
        assert!(report.margin > 0.1);
    }

    #[test]
    fn wrong_power_scaling_fails_descent() {
        let m = model();
        // lambda^t v2 flips the required transformation law.
        let wrong =
            m.v2.scale(&Expr::pow(m.lambda_expr.clone(), Expr::coord("t")));
        let grid = Grid::uniform(3, 6);
        let report = m
            .complex
            .check_descends(&GeomObject::Form(wrong), &grid, 1e-9)
            .unwrap();
        assert!(!report.passed());
        assert!(report.margin > (LAMBDA - 1.0) * 0.01);
    }

    #[test]
    fn structure_identity_d_alpha1() {
        // d alpha1 = ln(lambda) dt ^ alpha1 (and the mirror for alpha2).
        let m = model();
        let params = &m.complex.params;
        let dt = KForm::coordinate_differential(m.chart.clone(), "t").unwrap();
        let d1 = m.alpha1.exterior_derivative().unwrap();
        let ref1 = dt
            .wedge(&m.alpha1)
            .unwrap()
            .scale(&Expr::ln(m.lambda_expr.clone()));
        let delta1 = d1.sub(&ref1).unwrap().compile(params).unwrap();

        let d2 = m.alpha2.exterior_derivative().unwrap();
        let ref2 = dt
            .wedge(&m.alpha2)
            .unwrap()
            .scale(&Expr::ln(m.lambda_expr.clone()).neg());
        let delta2 = d2.sub(&ref2).unwrap().compile(params).unwrap();

        for p in Grid::uniform(3, 8).points(&m.chart) {
            assert!(delta1.max_abs_at(&p) < 1e-12);
            assert!(delta2.max_abs_at(&p) < 1e-12);
        }
        let _ = LN_LAMBDA;
    }

    #[test]
    fn local_chart_dimensions() {
        let c3 = builtin_local_chart(3).unwrap();
        let names: Vec<_> = c3
            .chart("box")
            .unwrap()
            .coord_names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(names, vec!["x", "y", "z"]);
        let c5 = builtin_local_chart(5).unwrap();
        assert_eq!(c5.chart("box").unwrap().dim(), 5);
        assert!(matches!(
            builtin_local_chart(4),
            Err(ModelError::BadDimension(4))
        ));
        assert!(matches!(
            builtin_local_chart(1),
            Err(ModelError::BadDimension(1))
        ));
    }

    #[test]
    fn t3_contact_volume_is_two_pi() {
        let t3 = builtin_t3_contact();
        let top = t3
            .alpha
            .wedge(&t3.alpha.exterior_derivative().unwrap())
            .unwrap();
        let compiled = top.compile(&t3.complex.params).unwrap();
        for p in Grid::uniform(3, 8).points(&t3.chart) {
            let coeffs = compiled.coeffs_at(&p);
            assert_eq!(coeffs.len(), 1);
            assert!((coeffs[0].1 - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn t3_alpha_descends() {
        let t3 = builtin_t3_contact();
        let report = t3
            .complex
            .check_descends(
                &GeomObject::Form(t3.alpha.clone()),
                &Grid::uniform(3, 16),
                1e-9,
            )
            .unwrap();
        assert!(report.passed());
    }

    #[test]
    fn open_book_collar_matches_for_fibration_angle() {
        let ob = builtin_trivial_open_book();
        let dphi_tube = KForm::coordinate_differential(ob.tube.clone(), "phi").unwrap();
        let dphi_pages = KForm::coordinate_differential(ob.pages.clone(), "phi").unwrap();
        let report = ob
            .complex
            .check_map_match(
                &ob.collar,
                &GeomObject::Form(dphi_tube),
                &GeomObject::Form(dphi_pages),
                &Grid::uniform(3, 6),
                1e-9,
            )
            .unwrap();
        assert!(report.passed());

        let dphi_field_tube = VecField::coordinate_field(ob.tube.clone(), "phi").unwrap();
        let dphi_field_pages = VecField::coordinate_field(ob.pages.clone(), "phi").unwrap();
        let report = ob
            .complex
            .check_map_match(
                &ob.collar,
                &GeomObject::Field(dphi_field_tube),
                &GeomObject::Field(dphi_field_pages),
                &Grid::uniform(3, 6),
                1e-9,
            )
            .unwrap();
        assert!(report.passed());
    }

    #[test]
    fn open_book_declared_objects_descend() {
        let ob = builtin_trivial_open_book();
        let objects = [
            GeomObject::Form(ob.alpha.clone()),
            GeomObject::Field(ob.x_b.clone()),
            GeomObject::Form(ob.alpha_tube.clone()),
            GeomObject::Field(ob.x_b_tube.clone()),
        ];
        for obj in objects {
            let grid = Grid::uniform(obj.chart().dim(), 6);
            let report = ob.complex.check_descends(&obj, &grid, 1e-9).unwrap();
            assert!(report.passed(), "{:?} failed descent", obj.kind());
        }
    }

    #[test]
    fn open_book_fibration_pulls_back_base_angle() {
        let ob = builtin_trivial_open_book();
        let ds = KForm::coordinate_differential(ob.base.clone(), "s").unwrap();
        let pulled = ob.fibration.pullback(&ds).unwrap();
        let dphi = KForm::coordinate_differential(ob.tube.clone(), "phi").unwrap();
        assert!(pulled.sub(&dphi).unwrap().is_symbolically_zero());
    }

    #[test]
    fn orientations_nowhere_zero() {
        builtin_trivial_open_book()
            .complex
            .validate_orientations()
            .unwrap();
        model().complex.validate_orientations().unwrap();
        builtin_t3_contact()
            .complex
            .validate_orientations()
            .unwrap();
    }
}
