//! Orientation and in-sphere predicates with a double-double fallback and
//! simulation-of-simplicity tie breaking.

use std::cmp::Ordering;

/// Relative magnitude below which the f64 determinant is recomputed.
const REFINE_REL: f64 = 1e-7;
/// Relative magnitude below which a refined determinant counts as zero.
const ZERO_REL: f64 = 1e-24;
/// In-sphere values this small relative to the row norms are treated as
/// cospherical. Coordinate differences are rounded before the determinant,
/// so exact zeros are not reliably observable.
const COSPHERICAL_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::two_sum(s.hi, s.lo + t.hi);
        Dd::two_sum(r.hi, r.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        Dd::two_sum(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::two_sum(q1, q2).add(Dd::from(q3))
    }

    fn abs_cmp(self, o: Dd) -> Ordering {
        let a = if self.hi < 0.0 { self.neg() } else { self };
        let b = if o.hi < 0.0 { o.neg() } else { o };
        (a.hi, a.lo)
            .partial_cmp(&(b.hi, b.lo))
            .unwrap_or(Ordering::Equal)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn det_f64(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| {
                m[a][c]
                    .abs()
                    .partial_cmp(&m[b][c].abs())
                    .unwrap_or(Ordering::Equal)
            })
            .expect("nonempty");
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    det
}

fn det_dd(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut m: Vec<Vec<Dd>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| Dd::from(v)).collect())
        .collect();
    let mut det = Dd::from(1.0);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs_cmp(m[b][c]))
            .expect("nonempty");
        if m[p][c].hi == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = det.neg();
        }
        det = det.mul(m[c][c]);
        for r in c + 1..n {
            let f = m[r][c].div(m[c][c]);
            for k in c..n {
                let t = f.mul(m[c][k]);
                m[r][k] = m[r][k].sub(t);
            }
        }
    }
    det.value()
}

/// Determinant of a square matrix with a refined recomputation when the
/// f64 result is small relative to the Hadamard bound. Values below the
/// zero threshold are returned as exactly zero.
pub fn robust_det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    let scale: f64 = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    if scale == 0.0 {
        return 0.0;
    }
    let mut work = rows.to_vec();
    let d = det_f64(&mut work);
    if d.abs() >= REFINE_REL * scale {
        return d;
    }
    let d = det_dd(rows);
    if d.abs() <= ZERO_REL * scale {
        0.0
    } else {
        d
    }
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign of `det [[p_j, 1]]` over the given points (rows in order).
pub fn orient(points: &[&[f64]]) -> i32 {
    let n = points.len() - 1;
    let p0 = points[0];
    let rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let s = sign(robust_det(&rows));
    if n % 2 == 1 {
        -s
    } else {
        s
    }
}

/// Unperturbed in-sphere determinant `det [[r_j - q, |r_j - q|^2]]`.
pub fn insphere_raw(simplex: &[&[f64]], q: &[f64]) -> f64 {
    robust_det(&insphere_rows(simplex, q))
}

fn insphere_rows(simplex: &[&[f64]], q: &[f64]) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = simplex
        .iter()
        .map(|r| {
            let mut row: Vec<f64> = r.iter().zip(q).map(|(a, b)| a - b).collect();
            let h = row.iter().map(|v| v * v).sum();
            row.push(h);
            row
        })
        .collect();
    rows
}

/// Whether `q` lies strictly inside the circumsphere of `simplex` under the
/// index-keyed perturbation: lifted heights are raised by `ε^(rank)` with
/// lower keys dominating.
pub fn in_sphere_sos(simplex: &[&[f64]], simplex_keys: &[usize], q: &[f64], q_key: usize) -> bool {
    let o_s = orient(simplex);
    debug_assert!(o_s != 0, "degenerate simplex");
    let rows = insphere_rows(simplex, q);
    // the determinant equals +-vol * (R^2 - |q - c|^2); compare the power
    // of q against the squared distances to the simplex instead of the
    // Hadamard bound, which is far too loose for large simplices
    let volume = robust_det(
        &simplex[1..]
            .iter()
            .map(|p| p.iter().zip(simplex[0]).map(|(a, b)| a - b).collect())
            .collect::<Vec<Vec<f64>>>(),
    );
    let reach = rows.iter().map(|r| r[r.len() - 1]).fold(0.0, f64::max);
    let o = robust_det(&rows);
    let raw = if o.abs() <= COSPHERICAL_REL * volume.abs() * reach {
        0
    } else {
        sign(o)
    };
    let o_pert = if raw != 0 {
        raw
    } else {
        let n = simplex.len() - 1;
        let mut all: Vec<(&[f64], usize)> = simplex
            .iter()
            .copied()
            .zip(simplex_keys.iter().copied())
            .collect();
        all.push((q, q_key));
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by_key(|&j| all[j].1);
        let mut decided = 0;
        for j in order {
            let rest: Vec<&[f64]> = all
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, p)| p.0)
                .collect();
            let o = orient(&rest);
            if o != 0 {
                decided = if (j + n) % 2 == 0 { o } else { -o };
                break;
            }
        }
        decided
    };
    o_pert * o_s > 0
}
