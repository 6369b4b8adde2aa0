//! Closed intervals with outward-inflated arithmetic.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{BinOp, Expr, ExprError, ExprKind, Func};

const REL_INFLATE: f64 = 1e-12;
/// Overshoot past the domain edge of asin/acos that is clipped instead of rejected.
const DOMAIN_SLACK: f64 = 1e-9;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn widen(lo: f64, hi: f64) -> Interval {
    let pad = |v: f64| REL_INFLATE * v.abs() + f64::MIN_POSITIVE;
    Interval {
        lo: lo - pad(lo),
        hi: hi + pad(hi),
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        widen(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        widen(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        widen(lo, hi)
    }

    /// Square with the dependency between the factors taken into account.
    pub fn sqr(&self) -> Interval {
        let (a, b) = (self.lo * self.lo, self.hi * self.hi);
        if self.contains_zero() {
            widen(0.0, a.max(b)).clamp_lo(0.0)
        } else {
            widen(a.min(b), a.max(b)).clamp_lo(0.0)
        }
    }

    fn clamp_lo(self, v: f64) -> Interval {
        Interval {
            lo: self.lo.max(v),
            hi: self.hi,
        }
    }

    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            widen(self.lo * c, self.hi * c)
        } else {
            widen(self.hi * c, self.lo * c)
        }
    }

    pub fn div(&self, o: &Interval) -> Result<Interval, ExprError> {
        if o.contains_zero() {
            return Err(ExprError::Domain(format!(
                "denominator range [{}, {}] contains 0",
                o.lo, o.hi
            )));
        }
        let r = widen(1.0 / o.hi, 1.0 / o.lo);
        Ok(self.mul(&r))
    }

    /// Image of the interval under an elementary function.
    pub fn apply(&self, f: Func) -> Result<Interval, ExprError> {
        let (lo, hi) = (self.lo, self.hi);
        match f {
            Func::Sin => Ok(trig_range(lo, hi, FRAC_PI_2, f64::sin)),
            Func::Cos => Ok(trig_range(lo, hi, 0.0, f64::cos)),
            Func::Tan => {
                // poles at π/2 + kπ
                let k_lo = ((lo - FRAC_PI_2) / PI).floor();
                let k_hi = ((hi - FRAC_PI_2) / PI).floor();
                if k_lo != k_hi || (hi - lo) >= PI {
                    return Err(ExprError::Domain(format!(
                        "tan over [{lo}, {hi}] crosses a pole"
                    )));
                }
                Ok(widen(lo.tan(), hi.tan()))
            }
            Func::Asin | Func::Acos => {
                if lo < -1.0 - DOMAIN_SLACK || hi > 1.0 + DOMAIN_SLACK {
                    return Err(ExprError::Domain(format!(
                        "{} over [{lo}, {hi}] leaves [-1, 1]",
                        f.name()
                    )));
                }
                let (a, b) = (lo.max(-1.0), hi.min(1.0));
                if f == Func::Asin {
                    Ok(widen(a.asin(), b.asin()))
                } else {
                    Ok(widen(b.acos(), a.acos()))
                }
            }
            Func::Atan => Ok(widen(lo.atan(), hi.atan())),
            Func::Exp => {
                let r = widen(lo.exp(), hi.exp());
                Ok(Interval {
                    lo: r.lo.max(0.0),
                    hi: r.hi,
                })
            }
            Func::Log => {
                if lo <= 0.0 {
                    return Err(ExprError::Domain(format!("log over [{lo}, {hi}]")));
                }
                Ok(widen(lo.ln(), hi.ln()))
            }
        }
    }
}

/// Range of `g` over `[lo, hi]` where `g` has maxima at `shift + 2kπ` and
/// minima at `shift + (2k+1)π`.
fn trig_range(lo: f64, hi: f64, shift: f64, g: fn(f64) -> f64) -> Interval {
    if !(lo.is_finite() && hi.is_finite()) || hi - lo >= 2.0 * PI {
        return Interval { lo: -1.0, hi: 1.0 };
    }
    let (a, b) = (g(lo), g(hi));
    let mut rlo = a.min(b);
    let mut rhi = a.max(b);
    let (slo, shi) = (lo - shift, hi - shift);
    let mut k = (slo / PI).ceil();
    while k * PI <= shi {
        if (k as i64).rem_euclid(2) == 0 {
            rhi = 1.0;
        } else {
            rlo = -1.0;
        }
        k += 1.0;
    }
    let r = widen(rlo, rhi);
    Interval {
        lo: r.lo.max(-1.0),
        hi: r.hi.min(1.0),
    }
}

impl Expr {
    /// Sound enclosure of the expression's range over a box; `bx[i-1]` bounds `xi`.
    pub fn interval_evaluate(&self, bx: &[Interval]) -> Result<Interval, ExprError> {
        match self.kind() {
            ExprKind::Const(c) => Ok(Interval::point(*c)),
            ExprKind::Var(i) => bx
                .get(i - 1)
                .copied()
                .ok_or_else(|| ExprError::Domain(format!("no interval for x{i}"))),
            ExprKind::Neg(a) => Ok(a.interval_evaluate(bx)?.neg()),
            ExprKind::Func(f, a) => a.interval_evaluate(bx)?.apply(*f),
            ExprKind::Binary(op, a, b) => {
                let (u, v) = (a.interval_evaluate(bx)?, b.interval_evaluate(bx)?);
                match op {
                    BinOp::Add => Ok(u.add(&v)),
                    BinOp::Sub => Ok(u.sub(&v)),
                    BinOp::Mul if a == b => Ok(u.sqr()),
                    BinOp::Mul => Ok(u.mul(&v)),
                    BinOp::Div => u.div(&v),
                }
            }
        }
    }

    /// Interval evaluation of a univariate (or constant) expression.
    pub fn interval_scalar(&self, iv: Interval) -> Result<Interval, ExprError> {
        match self.univariate_var() {
            Some(i) => {
                let mut bx = vec![Interval::point(0.0); i];
                bx[i - 1] = iv;
                self.interval_evaluate(&bx)
            }
            None => self.interval_evaluate(&[]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn cos_over_symmetric_interval() {
        let r = parse("cos(x1)")
            .unwrap()
            .interval_evaluate(&[Interval::new(-1.0, 1.0)])
            .unwrap();
        assert!(r.lo <= 1f64.cos() && r.hi >= 1.0);
        assert!(r.lo > 0.5);
    }

    #[test]
    fn four_corner_product() {
        let b = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
        let r = parse("x1*x2").unwrap().interval_evaluate(&b).unwrap();
        assert!(r.lo <= -1.0 && r.lo > -1.0 - 1e-9);
        assert!(r.hi >= 1.0 && r.hi < 1.0 + 1e-9);
    }

    #[test]
    fn sin_extrema_detected() {
        let r = Interval::new(1.0, 2.0).apply(Func::Sin).unwrap();
        assert!(r.hi >= 1.0 - 1e-15);
        let r = Interval::new(4.0, 5.0).apply(Func::Sin).unwrap();
        assert!(r.lo <= -1.0 + 1e-15);
        let r = Interval::new(0.1, 0.2).apply(Func::Sin).unwrap();
        assert!(r.lo <= 0.1f64.sin() && r.hi >= 0.2f64.sin() && r.hi < 0.3);
    }

    #[test]
    fn domain_failures() {
        assert!(Interval::new(-1.0, 1.0).apply(Func::Log).is_err());
        assert!(Interval::new(1.0, 2.0).apply(Func::Tan).is_err());
        assert!(Interval::new(0.0, 2.0).apply(Func::Asin).is_err());
        assert!(Interval::new(1.0, 2.0)
            .div(&Interval::new(-1.0, 1.0))
            .is_err());
    }
}
