//! Root isolation for univariate expressions by interval subdivision.

use super::{Expr, ExprError, Interval};

/// Default isolation width.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
const MAX_UNRESOLVED_LEAVES: usize = 200_000;

/// An isolated root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Interval of undetermined sign the root was isolated in.
    pub bracket: Interval,
    /// Whether the sign differs on the two flanking subintervals.
    pub crossing: bool,
}

/// Result of [`find_sign_changes`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignChanges {
    pub roots: Vec<Root>,
    /// The expression evaluated to the zero interval everywhere.
    pub identically_zero: bool,
}

impl SignChanges {
    pub fn points(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.x).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Pos,
    Neg,
    Zero,
    Unknown,
}

struct Search<'a> {
    e: &'a Expr,
    /// Derivative of `e`, for the centred form and flat-piece detection.
    d: Option<Expr>,
    tol: f64,
    leaves: Vec<(f64, f64, Class)>,
    unresolved: usize,
}

impl Search<'_> {
    fn visit(&mut self, a: f64, b: f64) -> Result<(), ExprError> {
        let r = match self.range(a, b) {
            Ok(r) => r,
            // overestimation can cross a singularity that splitting removes
            Err(_) if b - a > self.tol && 0.5 * (a + b) > a && 0.5 * (a + b) < b => {
                let m = 0.5 * (a + b);
                self.visit(a, m)?;
                return self.visit(m, b);
            }
            Err(e) => return Err(e),
        };
        let class = if let Some(c) = self.flat_class(a, b) {
            c
        } else if r.lo > 0.0 {
            Class::Pos
        } else if r.hi < 0.0 {
            Class::Neg
        } else if r.lo >= -1e-300 && r.hi <= 1e-300 {
            Class::Zero
        } else if b - a <= self.tol {
            Class::Unknown
        } else {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                self.push(a, b, Class::Unknown)?;
                return Ok(());
            }
            self.visit(a, m)?;
            return self.visit(m, b);
        };
        self.push(a, b, class)
    }

    /// Natural interval extension intersected with the centred form.
    fn range(&self, a: f64, b: f64) -> Result<Interval, ExprError> {
        let x = Interval { lo: a, hi: b };
        let natural = self.e.interval_scalar(x)?;
        let Some(d) = &self.d else {
            return Ok(natural);
        };
        let m = 0.5 * (a + b);
        let centred = match (
            self.e.interval_scalar(Interval::point(m)),
            d.interval_scalar(x),
        ) {
            (Ok(fm), Ok(dx)) => fm.add(&dx.mul(&Interval {
                lo: a - m,
                hi: b - m,
            })),
            _ => return Ok(natural),
        };
        let (lo, hi) = (natural.lo.max(centred.lo), natural.hi.min(centred.hi));
        Ok(if lo <= hi {
            Interval { lo, hi }
        } else {
            natural
        })
    }

    /// Sign of `e` on `[a, b]` when the derivative vanishes there, so `e`
    /// is constant and its value at the midpoint decides.
    fn flat_class(&self, a: f64, b: f64) -> Option<Class> {
        let dx = self
            .d
            .as_ref()?
            .interval_scalar(Interval { lo: a, hi: b })
            .ok()?;
        if !(dx.lo >= -1e-300 && dx.hi <= 1e-300) {
            return None;
        }
        let v = self.e.eval_scalar(0.5 * (a + b)).ok()?;
        Some(if v > 0.0 {
            Class::Pos
        } else if v < 0.0 {
            Class::Neg
        } else {
            Class::Zero
        })
    }

    fn push(&mut self, a: f64, b: f64, class: Class) -> Result<(), ExprError> {
        if class == Class::Unknown {
            self.unresolved += 1;
            if self.unresolved > MAX_UNRESOLVED_LEAVES {
                return Err(ExprError::RootCluster { lo: a, hi: b });
            }
        }
        match self.leaves.last_mut() {
            Some(last) if last.2 == class && last.1 == a => last.1 = b,
            _ => self.leaves.push((a, b, class)),
        }
        Ok(())
    }
}

fn point_sign(e: &Expr, t: f64) -> f64 {
    match e.eval_scalar(t) {
        Ok(v) if v > 0.0 => 1.0,
        Ok(v) if v < 0.0 => -1.0,
        _ => 0.0,
    }
}

/// Isolates the zeros of a univariate expression on `iv` to width `tol`.
///
/// Roots closer than `tol` to each other are reported once. Tangential zeros
/// (no sign change) are reported with `crossing == false`.
pub fn find_sign_changes(e: &Expr, iv: Interval, tol: f64) -> Result<SignChanges, ExprError> {
    // outward rounding keeps the interval of `c - c` off zero; decide constants pointwise
    if e.vars().is_empty() {
        let v = e.evaluate(&[])?;
        return Ok(SignChanges {
            roots: Vec::new(),
            identically_zero: v == 0.0,
        });
    }
    let mut s = Search {
        e,
        d: e.univariate_var().map(|v| e.differentiate(v)),
        tol: tol.max(f64::EPSILON * iv.mag()),
        leaves: Vec::new(),
        unresolved: 0,
    };
    s.visit(iv.lo, iv.hi)?;
    let leaves = s.leaves;
    if leaves.iter().all(|l| l.2 == Class::Zero) {
        return Ok(SignChanges {
            roots: Vec::new(),
            identically_zero: true,
        });
    }
    let mut roots = Vec::new();
    for (idx, &(a, b, class)) in leaves.iter().enumerate() {
        if matches!(class, Class::Pos | Class::Neg) {
            continue;
        }
        let left = if idx > 0 {
            Some(leaves[idx - 1].2)
        } else {
            None
        };
        let right = leaves.get(idx + 1).map(|l| l.2);
        let crossing = matches!(
            (left, right),
            (Some(Class::Pos), Some(Class::Neg)) | (Some(Class::Neg), Some(Class::Pos))
        );
        let x = if crossing {
            bisect(e, a, b, tol)
        } else {
            0.5 * (a + b)
        };
        roots.push(Root {
            x,
            bracket: Interval { lo: a, hi: b },
            crossing,
        });
    }
    Ok(SignChanges {
        roots,
        identically_zero: false,
    })
}

fn bisect(e: &Expr, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let sa = point_sign(e, a);
    let sb = point_sign(e, b);
    if sa == 0.0 {
        return a;
    }
    if sb == 0.0 || sa == sb {
        return if sb == 0.0 { b } else { 0.5 * (a + b) };
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let sm = point_sign(e, m);
        if sm == 0.0 {
            return m;
        }
        if sm == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
