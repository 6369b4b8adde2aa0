//! Transition-function expressions: parsing, evaluation, symbolic
//! differentiation, interval evaluation, root isolation and decomposition
//! into a syntax tree with univariate leaves.

mod diff;
mod interval;
mod parse;
mod roots;
mod tree;

use std::fmt;
use std::sync::Arc;

pub use interval::Interval;
pub use parse::parse;
pub use roots::{find_sign_changes, Root, SignChanges, DEFAULT_ROOT_TOL};
pub use tree::{decompose_to_syntax_tree, normalize_negation, SyntaxTree, TreeOp};

/// Errors raised while building or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("bad variable `{text}` at byte {pos}: indices start at x1")]
    BadVariable { text: String, pos: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unresolved root cluster near [{lo}, {hi}]")]
    RootCluster { lo: f64, hi: f64 },
}

/// Elementary functions allowed in the dynamics language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Asin,
        Func::Acos,
        Func::Atan,
        Func::Exp,
        Func::Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn apply(self, v: f64) -> Result<f64, ExprError> {
        let r = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => {
                if v.cos() == 0.0 {
                    return Err(ExprError::Domain(format!("tan pole at {v}")));
                }
                v.tan()
            }
            Func::Asin | Func::Acos => {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(ExprError::Domain(format!("{} of {v}", self.name())));
                }
                if self == Func::Asin {
                    v.asin()
                } else {
                    v.acos()
                }
            }
            Func::Atan => v.atan(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err(ExprError::Domain(format!("log of {v}")));
                }
                v.ln()
            }
        };
        Ok(r)
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Set of variable indices (1-based, at most 63).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn single(i: usize) -> VarSet {
        assert!((1..64).contains(&i), "variable index {i} out of range");
        VarSet(1u64 << i)
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1u64 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..64).filter(move |&i| self.contains(i))
    }

    pub fn max(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(63 - self.0.leading_zeros() as usize)
        }
    }
}

/// Node kinds of an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Const(f64),
    /// 1-based variable index.
    Var(usize),
    Neg(Expr),
    Func(Func, Expr),
    Binary(BinOp, Expr, Expr),
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    vars: VarSet,
}

/// Immutable, cheaply clonable expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.kind == other.0.kind
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Const(c) => write!(f, "Const({c:?})"),
            ExprKind::Var(i) => write!(f, "Var({i})"),
            ExprKind::Neg(a) => write!(f, "Neg({a:?})"),
            ExprKind::Func(fun, a) => write!(f, "{:?}({a:?})", fun),
            ExprKind::Binary(op, a, b) => write!(f, "{op:?}({a:?}, {b:?})"),
        }
    }
}

impl Expr {
    fn new(kind: ExprKind) -> Expr {
        let vars = match &kind {
            ExprKind::Const(_) => VarSet::EMPTY,
            ExprKind::Var(i) => VarSet::single(*i),
            ExprKind::Neg(a) | ExprKind::Func(_, a) => a.vars(),
            ExprKind::Binary(_, a, b) => a.vars().union(b.vars()),
        };
        Expr(Arc::new(Node { kind, vars }))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::new(ExprKind::Const(c))
    }

    pub fn var(i: usize) -> Expr {
        Expr::new(ExprKind::Var(i))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::new(ExprKind::Neg(a))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::new(ExprKind::Func(f, a))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Binary(op, a, b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Free variables of the expression.
    pub fn vars(&self) -> VarSet {
        self.0.vars
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind() {
            ExprKind::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// The single free variable, if the expression is univariate.
    pub fn univariate_var(&self) -> Option<usize> {
        if self.vars().len() == 1 {
            self.vars().max()
        } else {
            None
        }
    }

    /// IEEE double evaluation; `x[i-1]` is the value of variable `xi`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ExprError> {
        match self.kind() {
            ExprKind::Const(c) => Ok(*c),
            ExprKind::Var(i) => x
                .get(i - 1)
                .copied()
                .ok_or_else(|| ExprError::Domain(format!("no value for x{i}"))),
            ExprKind::Neg(a) => Ok(-a.evaluate(x)?),
            ExprKind::Func(f, a) => f.apply(a.evaluate(x)?),
            ExprKind::Binary(op, a, b) => {
                let (u, v) = (a.evaluate(x)?, b.evaluate(x)?);
                Ok(match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => {
                        if v == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        u / v
                    }
                })
            }
        }
    }

    /// Evaluates a univariate (or constant) expression at a scalar.
    pub fn eval_scalar(&self, t: f64) -> Result<f64, ExprError> {
        match self.univariate_var() {
            Some(i) => {
                let mut x = vec![0.0; i];
                x[i - 1] = t;
                self.evaluate(&x)
            }
            None => self.evaluate(&[]),
        }
    }

    /// Replaces every occurrence of `xi` by `x(map[i])`.
    pub fn rename_vars(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        match self.kind() {
            ExprKind::Const(_) => self.clone(),
            ExprKind::Var(i) => Expr::var(map(*i)),
            ExprKind::Neg(a) => Expr::neg(a.rename_vars(map)),
            ExprKind::Func(f, a) => Expr::func(*f, a.rename_vars(map)),
            ExprKind::Binary(op, a, b) => Expr::binary(*op, a.rename_vars(map), b.rename_vars(map)),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Var(_) => 1,
            ExprKind::Neg(a) | ExprKind::Func(_, a) => 1 + a.size(),
            ExprKind::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Prints a number so that `parse` reads back the identical value.
fn fmt_number(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized concrete syntax accepted by [`parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Const(c) => fmt_number(*c, f),
            ExprKind::Var(i) => write!(f, "x{i}"),
            ExprKind::Neg(a) => write!(f, "-({a})"),
            ExprKind::Func(fun, a) => write!(f, "{}({a})", fun.name()),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unicycle_term_evaluates_like_calculator() {
        let e = parse("x4 * cos(x3)").unwrap();
        let v = e.evaluate(&[0.0, 0.0, 2.1, 1.5]).unwrap();
        assert_eq!(v, 1.5 * 2.1f64.cos());
    }

    #[test]
    fn simple_evaluations() {
        assert_eq!(parse("cos(x1)").unwrap().evaluate(&[0.0]).unwrap(), 1.0);
        assert_eq!(parse("x1+x2").unwrap().evaluate(&[2.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            parse("log(x1)").unwrap().evaluate(&[-1.0]),
            Err(ExprError::Domain(_))
        ));
        assert!(matches!(
            parse("1/x1").unwrap().evaluate(&[0.0]),
            Err(ExprError::Domain(_))
        ));
    }

    #[test]
    fn free_variables_are_cached() {
        let e = parse("x4 * cos(x3) + 2").unwrap();
        assert_eq!(e.vars().iter().collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(parse("sin(x2)").unwrap().univariate_var(), Some(2));
        assert_eq!(parse("3").unwrap().univariate_var(), None);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "-x1 + 0.1*sin(x3)",
            "x4*cos(x3)",
            "-(2)",
            "-2 * x1 / (x2 - 1e-7)",
        ] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src}");
        }
        let c = Expr::constant(-2.5);
        assert_eq!(parse(&c.to_string()).unwrap(), c);
    }
}
