//! Scalar symbolic expressions over named coordinates and parameters.
//!
//! An [`Expr`] is an immutable tree. Nodes are constants, coordinate and
//! parameter symbols, sums, products, powers, `exp`/`ln`/`sin`/`cos`, and
//! references to bump (cutoff) functions. Trees support exact partial
//! differentiation, best-effort simplification and numeric evaluation; for
//! grid sweeps an expression compiles to an index-resolved program evaluated
//! on coordinate slices without name lookups.
//!
//! Coordinates and parameters are both free symbols; they differ only in
//! role. Parameters (monodromy eigenvalue, deformation sizes, contactization
//! constants) stay symbolic through every construction and are bound at
//! evaluation time, so a single symbolic object serves parameter sweeps.
//! Differentiation is always with respect to a coordinate; asking for a
//! derivative along a symbol that occurs as a parameter is an error.

mod bump;
mod parse;
mod simplify;

pub use bump::{BumpClass, BumpSpec};
pub use parse::{parse_expr, ParseError, SymbolTable};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unknown coordinate `{0}` (bound as a parameter in this expression)")]
    NotACoordinate(String),
    #[error("unassigned symbol `{0}`")]
    Unassigned(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value while evaluating `{0}`")]
    NonFinite(String),
    #[error("derivative of order {order} is not available for the {class} bump class")]
    UnsupportedDerivative { class: &'static str, order: u32 },
    #[error("invalid bump specification: {0}")]
    InvalidBump(String),
}

/// Expression node. Constructed through [`Expr`]; not matched on directly by
/// most callers.
#[derive(Debug)]
pub enum Node {
    Const(f64),
    Coord(String),
    Param(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow {
        base: Expr,
        exp: Expr,
    },
    Exp(Expr),
    Ln(Expr),
    Sin(Expr),
    Cos(Expr),
    Bump {
        name: String,
        spec: BumpSpec,
        deriv: u32,
        arg: Expr,
    },
}

/// Immutable scalar expression; cheap to clone (shared subtrees).
#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(v: f64) -> Expr {
        debug_assert!(v.is_finite(), "expression constants must be finite");
        Expr(Arc::new(Node::Const(v)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn coord(name: &str) -> Expr {
        Expr(Arc::new(Node::Coord(name.to_owned())))
    }

    pub fn param(name: &str) -> Expr {
        Expr(Arc::new(Node::Param(name.to_owned())))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Sum(terms))),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Product(factors))),
        }
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        Expr(Arc::new(Node::Pow { base, exp }))
    }

    pub fn powi(base: Expr, n: i32) -> Expr {
        Expr::pow(base, Expr::constant(f64::from(n)))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr(Arc::new(Node::Exp(arg)))
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr(Arc::new(Node::Ln(arg)))
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr(Arc::new(Node::Sin(arg)))
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr(Arc::new(Node::Cos(arg)))
    }

    pub fn bump(name: &str, spec: BumpSpec, arg: Expr) -> Expr {
        Expr(Arc::new(Node::Bump {
            name: name.to_owned(),
            spec,
            deriv: 0,
            arg,
        }))
    }

    fn bump_deriv(name: &str, spec: BumpSpec, deriv: u32, arg: Expr) -> Expr {
        Expr(Arc::new(Node::Bump {
            name: name.to_owned(),
            spec,
            deriv,
            arg,
        }))
    }

    #[allow(clippy::should_implement_trait)] // also provided via std::ops::Neg below
    pub fn neg(self) -> Expr {
        Expr::product(vec![Expr::constant(-1.0), self])
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 0.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Free coordinate names of the tree (union over children).
    pub fn free_coords(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Node::Coord(name) = n {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Parameter names of the tree.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Node::Param(name) = n {
                out.insert(name.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Param(_) => {}
            Node::Sum(children) | Node::Product(children) => {
                for c in children {
                    c.visit(f);
                }
            }
            Node::Pow { base, exp } => {
                base.visit(f);
                exp.visit(f);
            }
            Node::Exp(a) | Node::Ln(a) | Node::Sin(a) | Node::Cos(a) => a.visit(f),
            Node::Bump { arg, .. } => arg.visit(f),
        }
    }

    /// Exact partial derivative with respect to the coordinate `coord`.
    ///
    /// Errors if `coord` occurs in the tree as a parameter: parameters are
    /// evaluation-time bindings, not directions one can differentiate along.
    pub fn differentiate(&self, coord: &str) -> Result<Expr, ExprError> {
        if self.params().contains(coord) {
            return Err(ExprError::NotACoordinate(coord.to_owned()));
        }
        Ok(self.diff_inner(coord).simplify())
    }

    fn diff_inner(&self, coord: &str) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Param(_) => Expr::zero(),
            Node::Coord(name) => {
                if name == coord {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(terms) => Expr::sum(terms.iter().map(|t| t.diff_inner(coord)).collect()),
            Node::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, fi) in factors.iter().enumerate() {
                    let mut fs: Vec<Expr> = Vec::with_capacity(factors.len());
                    for (j, fj) in factors.iter().enumerate() {
                        if i == j {
                            fs.push(fi.diff_inner(coord));
                        } else {
                            fs.push(fj.clone());
                        }
                    }
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Pow { base, exp } => {
                if let Some(n) = exp.as_const() {
                    // d(a^n) = n a^(n-1) a'
                    Expr::product(vec![
                        Expr::constant(n),
                        Expr::pow(base.clone(), Expr::constant(n - 1.0)),
                        base.diff_inner(coord),
                    ])
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let term1 = Expr::product(vec![exp.diff_inner(coord), Expr::ln(base.clone())]);
                    let term2 = Expr::product(vec![
                        exp.clone(),
                        base.diff_inner(coord),
                        Expr::powi(base.clone(), -1),
                    ]);
                    Expr::product(vec![self.clone(), Expr::sum(vec![term1, term2])])
                }
            }
            Node::Exp(a) => Expr::product(vec![self.clone(), a.diff_inner(coord)]),
            Node::Ln(a) => Expr::product(vec![Expr::powi(a.clone(), -1), a.diff_inner(coord)]),
            Node::Sin(a) => Expr::product(vec![Expr::cos(a.clone()), a.diff_inner(coord)]),
            Node::Cos(a) => Expr::product(vec![
                Expr::constant(-1.0),
                Expr::sin(a.clone()),
                a.diff_inner(coord),
            ]),
            Node::Bump {
                name,
                spec,
                deriv,
                arg,
            } => Expr::product(vec![
                Expr::bump_deriv(name, *spec, deriv + 1, arg.clone()),
                arg.diff_inner(coord),
            ]),
        }
    }

    /// Numeric evaluation with explicit coordinate and parameter assignments.
    pub fn eval(
        &self,
        coords: &BTreeMap<String, f64>,
        params: &BTreeMap<String, f64>,
    ) -> Result<f64, ExprError> {
        let v = self.eval_inner(coords, params)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite(self.to_string()))
        }
    }

    fn eval_inner(
        &self,
        coords: &BTreeMap<String, f64>,
        params: &BTreeMap<String, f64>,
    ) -> Result<f64, ExprError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Coord(name) => coords
                .get(name)
                .copied()
                .ok_or_else(|| ExprError::Unassigned(name.clone())),
            Node::Param(name) => params
                .get(name)
                .copied()
                .ok_or_else(|| ExprError::Unassigned(name.clone())),
            Node::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_inner(coords, params)?;
                }
                Ok(acc)
            }
            Node::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval_inner(coords, params)?;
                }
                Ok(acc)
            }
            Node::Pow { base, exp } => {
                let b = base.eval_inner(coords, params)?;
                let e = exp.eval_inner(coords, params)?;
                let v = b.powf(e);
                if v.is_nan() {
                    return Err(ExprError::Domain(format!("{b}^{e} is undefined")));
                }
                Ok(v)
            }
            Node::Exp(a) => Ok(a.eval_inner(coords, params)?.exp()),
            Node::Ln(a) => {
                let v = a.eval_inner(coords, params)?;
                if v <= 0.0 {
                    return Err(ExprError::Domain(format!("ln of non-positive value {v}")));
                }
                Ok(v.ln())
            }
            Node::Sin(a) => Ok(a.eval_inner(coords, params)?.sin()),
            Node::Cos(a) => Ok(a.eval_inner(coords, params)?.cos()),
            Node::Bump {
                spec, deriv, arg, ..
            } => {
                let x = arg.eval_inner(coords, params)?;
                spec.value(x, *deriv)
            }
        }
    }

    /// Replace coordinate symbols by expressions (used by pullbacks).
    /// Parameters and constants are untouched.
    pub fn substitute(&self, subs: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Param(_) => self.clone(),
            Node::Coord(name) => subs.get(name).cloned().unwrap_or_else(|| self.clone()),
            Node::Sum(terms) => Expr::sum(terms.iter().map(|t| t.substitute(subs)).collect()),
            Node::Product(fs) => Expr::product(fs.iter().map(|f| f.substitute(subs)).collect()),
            Node::Pow { base, exp } => Expr::pow(base.substitute(subs), exp.substitute(subs)),
            Node::Exp(a) => Expr::exp(a.substitute(subs)),
            Node::Ln(a) => Expr::ln(a.substitute(subs)),
            Node::Sin(a) => Expr::sin(a.substitute(subs)),
            Node::Cos(a) => Expr::cos(a.substitute(subs)),
            Node::Bump {
                name,
                spec,
                deriv,
                arg,
            } => Expr::bump_deriv(name, *spec, *deriv, arg.substitute(subs)),
        }
    }

    /// Best-effort simplification. The result is numerically equal to the
    /// input on its domain; `0*x`, `x+0`, `x^0` and structural cancellation
    /// `a - a` are guaranteed to collapse. Full canonicalization is not
    /// attempted; identity checks elsewhere fall back to numeric grids.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Resolve coordinate names against `coords` and bind parameter values,
    /// producing a program evaluated on plain coordinate slices.
    pub fn compile(
        &self,
        coords: &[&str],
        params: &BTreeMap<String, f64>,
    ) -> Result<CompiledExpr, ExprError> {
        Ok(CompiledExpr {
            prog: self.compile_inner(coords, params)?,
        })
    }

    fn compile_inner(
        &self,
        coords: &[&str],
        params: &BTreeMap<String, f64>,
    ) -> Result<CNode, ExprError> {
        Ok(match self.node() {
            Node::Const(c) => CNode::Const(*c),
            Node::Coord(name) => {
                let idx = coords
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| ExprError::Unassigned(name.clone()))?;
                CNode::Var(idx)
            }
            Node::Param(name) => CNode::Const(
                *params
                    .get(name)
                    .ok_or_else(|| ExprError::Unassigned(name.clone()))?,
            ),
            Node::Sum(terms) => CNode::Sum(
                terms
                    .iter()
                    .map(|t| t.compile_inner(coords, params))
                    .collect::<Result<_, _>>()?,
            ),
            Node::Product(fs) => CNode::Product(
                fs.iter()
                    .map(|f| f.compile_inner(coords, params))
                    .collect::<Result<_, _>>()?,
            ),
            Node::Pow { base, exp } => {
                let b = Box::new(base.compile_inner(coords, params)?);
                match exp.as_const() {
                    Some(n) if n.fract() == 0.0 && n.abs() <= 64.0 => CNode::PowI(b, n as i32),
                    _ => CNode::Pow(b, Box::new(exp.compile_inner(coords, params)?)),
                }
            }
            Node::Exp(a) => CNode::Exp(Box::new(a.compile_inner(coords, params)?)),
            Node::Ln(a) => CNode::Ln(Box::new(a.compile_inner(coords, params)?)),
            Node::Sin(a) => CNode::Sin(Box::new(a.compile_inner(coords, params)?)),
            Node::Cos(a) => CNode::Cos(Box::new(a.compile_inner(coords, params)?)),
            Node::Bump {
                spec, deriv, arg, ..
            } => CNode::Bump {
                spec: *spec,
                deriv: *deriv,
                arg: Box::new(arg.compile_inner(coords, params)?),
            },
        })
    }

    /// Structural ordering used to canonicalize sums and products. Total on
    /// valid expressions (constants are finite by invariant).
    pub(crate) fn structural_cmp(&self, other: &Expr) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        fn rank(n: &Node) -> u8 {
            match n {
                Node::Const(_) => 0,
                Node::Coord(_) => 1,
                Node::Param(_) => 2,
                Node::Sum(_) => 3,
                Node::Product(_) => 4,
                Node::Pow { .. } => 5,
                Node::Exp(_) => 6,
                Node::Ln(_) => 7,
                Node::Sin(_) => 8,
                Node::Cos(_) => 9,
                Node::Bump { .. } => 10,
            }
        }
        let (a, b) = (self.node(), other.node());
        rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
            (Node::Const(x), Node::Const(y)) => x.total_cmp(y),
            (Node::Coord(x), Node::Coord(y)) | (Node::Param(x), Node::Param(y)) => x.cmp(y),
            (Node::Sum(xs), Node::Sum(ys)) | (Node::Product(xs), Node::Product(ys)) => {
                for (x, y) in xs.iter().zip(ys.iter()) {
                    let ord = x.structural_cmp(y);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                xs.len().cmp(&ys.len())
            }
            (Node::Pow { base: b1, exp: e1 }, Node::Pow { base: b2, exp: e2 }) => {
                b1.structural_cmp(b2).then_with(|| e1.structural_cmp(e2))
            }
            (Node::Exp(x), Node::Exp(y))
            | (Node::Ln(x), Node::Ln(y))
            | (Node::Sin(x), Node::Sin(y))
            | (Node::Cos(x), Node::Cos(y)) => x.structural_cmp(y),
            (
                Node::Bump {
                    name: n1,
                    spec: s1,
                    deriv: d1,
                    arg: a1,
                },
                Node::Bump {
                    name: n2,
                    spec: s2,
                    deriv: d2,
                    arg: a2,
                },
            ) => n1
                .cmp(n2)
                .then_with(|| s1.order_key().cmp(&s2.order_key()))
                .then_with(|| d1.cmp(d2))
                .then_with(|| a1.structural_cmp(a2)),
            _ => unreachable!("rank already distinguished the variants"),
        })
    }

    pub fn structurally_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.structural_cmp(other) == std::cmp::Ordering::Equal
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs.neg()])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, Expr::powi(rhs, -1)])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Precedence levels: 0 sum, 1 product, 2 power, 3 atom.
        fn write_at(e: &Expr, level: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let this = match e.node() {
                Node::Const(_) | Node::Coord(_) | Node::Param(_) => 3,
                Node::Sum(_) => 0,
                Node::Product(_) => 1,
                Node::Pow { .. } => 2,
                _ => 3,
            };
            let parens = this < level;
            if parens {
                write!(f, "(")?;
            }
            match e.node() {
                Node::Const(c) => write!(f, "{c}")?,
                Node::Coord(n) | Node::Param(n) => write!(f, "{n}")?,
                Node::Sum(ts) => {
                    for (i, t) in ts.iter().enumerate() {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        write_at(t, 1, f)?;
                    }
                }
                Node::Product(fs) => {
                    for (i, x) in fs.iter().enumerate() {
                        if i > 0 {
                            write!(f, "*")?;
                        }
                        write_at(x, 2, f)?;
                    }
                }
                Node::Pow { base, exp } => {
                    write_at(base, 3, f)?;
                    write!(f, "^")?;
                    write_at(exp, 3, f)?;
                }
                Node::Exp(a) => {
                    write!(f, "exp(")?;
                    write_at(a, 0, f)?;
                    write!(f, ")")?;
                }
                Node::Ln(a) => {
                    write!(f, "ln(")?;
                    write_at(a, 0, f)?;
                    write!(f, ")")?;
                }
                Node::Sin(a) => {
                    write!(f, "sin(")?;
                    write_at(a, 0, f)?;
                    write!(f, ")")?;
                }
                Node::Cos(a) => {
                    write!(f, "cos(")?;
                    write_at(a, 0, f)?;
                    write!(f, ")")?;
                }
                Node::Bump {
                    name, deriv, arg, ..
                } => {
                    write!(f, "bump({name}")?;
                    for _ in 0..*deriv {
                        write!(f, "'")?;
                    }
                    write!(f, ", ")?;
                    write_at(arg, 0, f)?;
                    write!(f, ")")?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        write_at(self, 0, f)
    }
}

/// Index-resolved program for fast repeated evaluation on grid points.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    prog: CNode,
}

#[derive(Debug, Clone)]
enum CNode {
    Const(f64),
    Var(usize),
    Sum(Vec<CNode>),
    Product(Vec<CNode>),
    Pow(Box<CNode>, Box<CNode>),
    PowI(Box<CNode>, i32),
    Exp(Box<CNode>),
    Ln(Box<CNode>),
    Sin(Box<CNode>),
    Cos(Box<CNode>),
    Bump {
        spec: BumpSpec,
        deriv: u32,
        arg: Box<CNode>,
    },
}

impl CompiledExpr {
    /// Raw evaluation; domain violations surface as NaN/inf, which callers
    /// check with [`f64::is_finite`].
    pub fn eval(&self, point: &[f64]) -> f64 {
        Self::eval_node(&self.prog, point)
    }

    fn eval_node(n: &CNode, p: &[f64]) -> f64 {
        match n {
            CNode::Const(c) => *c,
            CNode::Var(i) => p[*i],
            CNode::Sum(ts) => ts.iter().map(|t| Self::eval_node(t, p)).sum(),
            CNode::Product(fs) => fs.iter().map(|f| Self::eval_node(f, p)).product(),
            CNode::Pow(b, e) => Self::eval_node(b, p).powf(Self::eval_node(e, p)),
            CNode::PowI(b, k) => Self::eval_node(b, p).powi(*k),
            CNode::Exp(a) => Self::eval_node(a, p).exp(),
            CNode::Ln(a) => Self::eval_node(a, p).ln(),
            CNode::Sin(a) => Self::eval_node(a, p).sin(),
            CNode::Cos(a) => Self::eval_node(a, p).cos(),
            CNode::Bump { spec, deriv, arg } => spec
                .value(Self::eval_node(arg, p), *deriv)
                .unwrap_or(f64::NAN),
        }
    }
}
