//! Decomposition of an expression into a tree of rational operations over
//! univariate leaves.

use super::{BinOp, Expr, ExprKind};

/// Operator carried by an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl From<BinOp> for TreeOp {
    fn from(op: BinOp) -> Self {
        match op {
            BinOp::Add => TreeOp::Add,
            BinOp::Sub => TreeOp::Sub,
            BinOp::Mul => TreeOp::Mul,
            BinOp::Div => TreeOp::Div,
        }
    }
}

impl From<TreeOp> for BinOp {
    fn from(op: TreeOp) -> Self {
        match op {
            TreeOp::Add => BinOp::Add,
            TreeOp::Sub => BinOp::Sub,
            TreeOp::Mul => BinOp::Mul,
            TreeOp::Div => BinOp::Div,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntaxTree {
    /// A constant or a function of exactly one variable.
    Leaf(Expr),
    /// Left fold of `op` over the children, in source order.
    Node {
        op: TreeOp,
        children: Vec<SyntaxTree>,
        func: Expr,
    },
    /// A multivariate argument under an elementary function; not boundable.
    Opaque(Expr),
}

impl SyntaxTree {
    /// The sub-expression this node represents.
    pub fn func(&self) -> &Expr {
        match self {
            SyntaxTree::Leaf(e) | SyntaxTree::Opaque(e) => e,
            SyntaxTree::Node { func, .. } => func,
        }
    }

    pub fn op(&self) -> Option<TreeOp> {
        match self {
            SyntaxTree::Node { op, .. } => Some(*op),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SyntaxTree::Node { children, .. } => children.len(),
            _ => 0,
        }
    }

    pub fn children(&self) -> &[SyntaxTree] {
        match self {
            SyntaxTree::Node { children, .. } => children,
            _ => &[],
        }
    }

    /// Rebuilds the expression by folding each node's operator over its children.
    ///
    /// A negated multivariate operand is represented as `0 - e`.
    pub fn reassemble(&self) -> Expr {
        match self {
            SyntaxTree::Leaf(e) | SyntaxTree::Opaque(e) => e.clone(),
            SyntaxTree::Node { op, children, .. } => {
                let mut it = children.iter().map(|c| c.reassemble());
                let first = it.next().expect("internal node has children");
                it.fold(first, |acc, c| Expr::binary((*op).into(), acc, c))
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            SyntaxTree::Leaf(e) => out.push(e),
            SyntaxTree::Opaque(_) => {}
            SyntaxTree::Node { children, .. } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
        }
    }
}

/// Rewrites negation of multivariate operands as `0 - e`, which is the form
/// [`SyntaxTree::reassemble`] produces.
pub fn normalize_negation(e: &Expr) -> Expr {
    match e.kind() {
        ExprKind::Const(_) | ExprKind::Var(_) => e.clone(),
        ExprKind::Neg(a) if a.vars().len() > 1 => {
            Expr::sub(Expr::constant(0.0), normalize_negation(a))
        }
        ExprKind::Neg(a) => Expr::neg(normalize_negation(a)),
        ExprKind::Func(f, a) => Expr::func(*f, normalize_negation(a)),
        ExprKind::Binary(op, a, b) => {
            Expr::binary(*op, normalize_negation(a), normalize_negation(b))
        }
    }
}

/// Collapses maximal univariate subtrees into leaves.
pub fn decompose_to_syntax_tree(e: &Expr) -> SyntaxTree {
    if e.vars().len() <= 1 {
        return SyntaxTree::Leaf(e.clone());
    }
    match e.kind() {
        ExprKind::Neg(a) => SyntaxTree::Node {
            op: TreeOp::Sub,
            children: vec![
                SyntaxTree::Leaf(Expr::constant(0.0)),
                decompose_to_syntax_tree(a),
            ],
            func: e.clone(),
        },
        ExprKind::Func(..) => SyntaxTree::Opaque(e.clone()),
        ExprKind::Binary(op, a, b) => {
            let top: TreeOp = (*op).into();
            let mut children = match decompose_to_syntax_tree(a) {
                SyntaxTree::Node {
                    op: inner,
                    children,
                    ..
                } if inner == top && !matches!(a.kind(), ExprKind::Neg(_)) => children,
                other => vec![other],
            };
            children.push(decompose_to_syntax_tree(b));
            SyntaxTree::Node {
                op: top,
                children,
                func: e.clone(),
            }
        }
        ExprKind::Const(_) | ExprKind::Var(_) => unreachable!("handled as univariate"),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn unicycle_product_splits_into_two_leaves() {
        let t = decompose_to_syntax_tree(&parse("x4*cos(x3)").unwrap());
        assert_eq!(t.op(), Some(TreeOp::Mul));
        assert_eq!(t.arity(), 2);
        assert_eq!(t.children()[0], SyntaxTree::Leaf(parse("x4").unwrap()));
        assert_eq!(t.children()[1], SyntaxTree::Leaf(parse("cos(x3)").unwrap()));
    }

    #[test]
    fn univariate_sum_is_one_leaf() {
        let e = parse("sin(x1) + x1*x1").unwrap();
        assert_eq!(decompose_to_syntax_tree(&e), SyntaxTree::Leaf(e));
    }

    #[test]
    fn constant_is_a_leaf() {
        let t = decompose_to_syntax_tree(&parse("3.5").unwrap());
        assert!(matches!(t, SyntaxTree::Leaf(ref c) if c.as_const() == Some(3.5)));
    }

    #[test]
    fn left_chains_flatten() {
        let e = parse("x1 - x2 - x3").unwrap();
        let t = decompose_to_syntax_tree(&e);
        assert_eq!(t.arity(), 3);
        assert_eq!(t.reassemble(), e);
    }

    #[test]
    fn right_nesting_is_kept() {
        let e = parse("x1 - (x2 - x3)").unwrap();
        let t = decompose_to_syntax_tree(&e);
        assert_eq!(t.arity(), 2);
        assert_eq!(t.children()[1].arity(), 2);
        assert_eq!(t.reassemble(), e);
    }

    #[test]
    fn negated_product_reassembles_after_normalization() {
        let e = parse("-(x1*x2) + x3").unwrap();
        let t = decompose_to_syntax_tree(&e);
        assert_eq!(t.reassemble(), normalize_negation(&e));
    }

    #[test]
    fn multivariate_function_argument_is_opaque() {
        let t = decompose_to_syntax_tree(&parse("sin(x1 + x2)").unwrap());
        assert!(matches!(t, SyntaxTree::Opaque(_)));
    }
}
