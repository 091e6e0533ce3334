//! Best-effort structural simplification.
//!
//! Bottom-up rewrite: flatten nested sums/products, fold constants, drop
//! identities, cancel structurally equal terms in sums by collecting their
//! numeric coefficients. Sums and products are put in a canonical order so
//! that equal subtrees produced along different derivation paths compare
//! equal. Anything beyond that (factoring, trig identities, rational
//! normal forms) is out of scope; identity checking elsewhere is numeric.

use super::{Expr, Node};

pub(super) fn simplify(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Coord(_) | Node::Param(_) => e.clone(),
        Node::Sum(terms) => simplify_sum(terms),
        Node::Product(factors) => simplify_product(factors),
        Node::Pow { base, exp } => simplify_pow(&simplify(base), &simplify(exp)),
        Node::Exp(a) => {
            let a = simplify(a);
            match a.as_const() {
                Some(c) => fold_unary(c.exp()).unwrap_or_else(|| Expr::exp(a)),
                None => Expr::exp(a),
            }
        }
        Node::Ln(a) => {
            let a = simplify(a);
            match a.as_const() {
                Some(c) if c > 0.0 => fold_unary(c.ln()).unwrap_or_else(|| Expr::ln(a)),
                _ => Expr::ln(a),
            }
        }
        Node::Sin(a) => {
            let a = simplify(a);
            match a.as_const() {
                Some(c) => fold_unary(c.sin()).unwrap_or_else(|| Expr::sin(a)),
                None => Expr::sin(a),
            }
        }
        Node::Cos(a) => {
            let a = simplify(a);
            match a.as_const() {
                Some(c) => fold_unary(c.cos()).unwrap_or_else(|| Expr::cos(a)),
                None => Expr::cos(a),
            }
        }
        Node::Bump {
            name,
            spec,
            deriv,
            arg,
        } => {
            let arg = simplify(arg);
            if let Some(c) = arg.as_const() {
                if let Ok(v) = spec.value(c, *deriv) {
                    return Expr::constant(v);
                }
            }
            Expr(std::sync::Arc::new(Node::Bump {
                name: name.clone(),
                spec: *spec,
                deriv: *deriv,
                arg,
            }))
        }
    }
}

fn fold_unary(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::constant(v))
}

fn simplify_sum(terms: &[Expr]) -> Expr {
    // Flatten, split each term into (coefficient, core), merge equal cores.
    let mut constant = 0.0;
    let mut collected: Vec<(Expr, f64)> = Vec::new();

    fn push(collected: &mut Vec<(Expr, f64)>, core: Expr, coeff: f64) {
        for (c, acc) in collected.iter_mut() {
            if c.structurally_eq(&core) {
                *acc += coeff;
                return;
            }
        }
        collected.push((core, coeff));
    }

    fn walk(e: &Expr, scale: f64, constant: &mut f64, collected: &mut Vec<(Expr, f64)>) {
        let s = simplify(e);
        match s.node() {
            Node::Const(c) => *constant += scale * c,
            Node::Sum(inner) => {
                for t in inner {
                    walk(t, scale, constant, collected);
                }
            }
            _ => {
                let (coeff, core) = split_coefficient(&s);
                match core.node() {
                    // Distribute the numeric coefficient over an inner sum so
                    // -1*(a + b) cancels against separate a, b terms.
                    Node::Sum(inner) => {
                        for t in inner {
                            walk(t, scale * coeff, constant, collected);
                        }
                    }
                    Node::Const(c) => *constant += scale * coeff * c,
                    _ => push(collected, core, scale * coeff),
                }
            }
        }
    }

    for t in terms {
        walk(t, 1.0, &mut constant, &mut collected);
    }

    let mut out: Vec<Expr> = Vec::new();
    collected.sort_by(|a, b| a.0.structural_cmp(&b.0));
    for (core, coeff) in collected {
        if coeff == 0.0 {
            continue;
        }
        if coeff == 1.0 {
            out.push(core);
        } else {
            out.push(prepend_coefficient(coeff, core));
        }
    }
    if constant != 0.0 || out.is_empty() {
        out.insert(0, Expr::constant(constant));
    }
    Expr::sum(out)
}

/// Split a (simplified, non-sum) term into numeric coefficient and core.
fn split_coefficient(e: &Expr) -> (f64, Expr) {
    match e.node() {
        Node::Product(fs) => {
            let mut coeff = 1.0;
            let mut rest: Vec<Expr> = Vec::new();
            for f in fs {
                match f.as_const() {
                    Some(c) => coeff *= c,
                    None => rest.push(f.clone()),
                }
            }
            (coeff, Expr::product(rest))
        }
        Node::Const(c) => (*c, Expr::one()),
        _ => (1.0, e.clone()),
    }
}

fn prepend_coefficient(coeff: f64, core: Expr) -> Expr {
    match core.node() {
        Node::Product(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::constant(coeff));
            v.extend(fs.iter().cloned());
            Expr::product(v)
        }
        _ => Expr::product(vec![Expr::constant(coeff), core]),
    }
}

fn simplify_product(factors: &[Expr]) -> Expr {
    let mut constant = 1.0;
    let mut rest: Vec<Expr> = Vec::new();

    fn walk(e: &Expr, constant: &mut f64, rest: &mut Vec<Expr>) {
        let s = simplify(e);
        match s.node() {
            Node::Const(c) => *constant *= c,
            Node::Product(inner) => {
                for f in inner {
                    walk(f, constant, rest);
                }
            }
            _ => rest.push(s),
        }
    }

    for f in factors {
        walk(f, &mut constant, &mut rest);
    }

    if constant == 0.0 {
        return Expr::zero();
    }
    rest.sort_by(|a, b| a.structural_cmp(b));
    if rest.is_empty() {
        return Expr::constant(constant);
    }
    if constant != 1.0 {
        rest.insert(0, Expr::constant(constant));
    }
    Expr::product(rest)
}

fn simplify_pow(base: &Expr, exp: &Expr) -> Expr {
    if let Some(e) = exp.as_const() {
        if e == 0.0 {
            return Expr::one();
        }
        if e == 1.0 {
            return base.clone();
        }
        if let Some(b) = base.as_const() {
            let v = b.powf(e);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
    }
    if let Some(b) = base.as_const() {
        if b == 1.0 {
            return Expr::one();
        }
    }
    Expr::pow(base.clone(), exp.clone())
}
