//! Symbolic differentiation with constant folding.

use super::{BinOp, Expr, ExprKind, Func};

fn is_const(e: &Expr, v: f64) -> bool {
    e.as_const() == Some(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        (Some(x), None) if x == 0.0 => b,
        (None, Some(y)) if y == 0.0 => a,
        _ => Expr::add(a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x - y),
        (Some(x), None) if x == 0.0 => neg(b),
        (None, Some(y)) if y == 0.0 => a,
        _ => Expr::sub(a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::constant(0.0),
        (Some(x), None) if x == 1.0 => b,
        (None, Some(y)) if y == 1.0 => a,
        (Some(x), None) if x == -1.0 => neg(b),
        (None, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::mul(a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
        (Some(x), _) if x == 0.0 => Expr::constant(0.0),
        (None, Some(y)) if y == 1.0 => a,
        _ => Expr::div(a, b),
    }
}

fn neg(a: Expr) -> Expr {
    match a.kind() {
        ExprKind::Const(c) => Expr::constant(-c),
        ExprKind::Neg(inner) => inner.clone(),
        _ => Expr::neg(a),
    }
}

impl Expr {
    /// Symbolic partial derivative with respect to `x{var}`.
    pub fn differentiate(&self, var: usize) -> Expr {
        if !self.vars().contains(var) {
            return Expr::constant(0.0);
        }
        match self.kind() {
            ExprKind::Const(_) => Expr::constant(0.0),
            ExprKind::Var(i) => Expr::constant(if *i == var { 1.0 } else { 0.0 }),
            ExprKind::Neg(a) => neg(a.differentiate(var)),
            ExprKind::Func(f, a) => {
                let da = a.differentiate(var);
                if is_const(&da, 0.0) {
                    return Expr::constant(0.0);
                }
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, a.clone()),
                    Func::Cos => neg(Expr::func(Func::Sin, a.clone())),
                    Func::Tan => {
                        let c = Expr::func(Func::Cos, a.clone());
                        div(Expr::constant(1.0), mul(c.clone(), c))
                    }
                    Func::Asin | Func::Acos => {
                        // (1 - a²)^(-1/2) written with exp/log
                        let one_minus = sub(Expr::constant(1.0), mul(a.clone(), a.clone()));
                        let r = Expr::func(
                            Func::Exp,
                            mul(Expr::constant(-0.5), Expr::func(Func::Log, one_minus)),
                        );
                        if *f == Func::Asin {
                            r
                        } else {
                            neg(r)
                        }
                    }
                    Func::Atan => div(
                        Expr::constant(1.0),
                        add(Expr::constant(1.0), mul(a.clone(), a.clone())),
                    ),
                    Func::Exp => self.clone(),
                    Func::Log => div(Expr::constant(1.0), a.clone()),
                };
                mul(outer, da)
            }
            ExprKind::Binary(op, a, b) => {
                let (da, db) = (a.differentiate(var), b.differentiate(var));
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a.clone(), db)),
                    BinOp::Div => div(
                        sub(mul(da, b.clone()), mul(a.clone(), db)),
                        mul(b.clone(), b.clone()),
                    ),
                }
            }
        }
    }
}
