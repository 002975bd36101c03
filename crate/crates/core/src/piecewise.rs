//! Piecewise-affine functions on `[0,1]` with rational breakpoints.

use num::{One, Signed, Zero};

use crate::rational::Rational;

/// `x ↦ slope·x + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub slope: Rational,
    pub offset: Rational,
}

impl Affine {
    pub fn new(slope: Rational, offset: Rational) -> Self {
        Affine { slope, offset }
    }

    pub fn constant(c: Rational) -> Self {
        Affine::new(Rational::zero(), c)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine::new(&self.slope * &inner.slope, &self.slope * &inner.offset + &self.offset)
    }

    pub fn add(&self, other: &Affine) -> Affine {
        Affine::new(&self.slope + &other.slope, &self.offset + &other.offset)
    }

    pub fn scale(&self, c: &Rational) -> Affine {
        Affine::new(&self.slope * c, &self.offset * c)
    }

    /// Exact `∫_lo^hi`.
    pub fn integral(&self, lo: &Rational, hi: &Rational) -> Rational {
        let two = Rational::from_integer(2.into());
        &self.slope * (hi * hi - lo * lo) / two + &self.offset * (hi - lo)
    }

    /// Exact `∫_lo^hi self·other`.
    pub fn product_integral(&self, other: &Affine, lo: &Rational, hi: &Rational) -> Rational {
        let (a, b, c, d) = (&self.slope, &self.offset, &other.slope, &other.offset);
        let antideriv = |x: &Rational| {
            let x2 = x * x;
            let x3 = &x2 * x;
            a * c * x3 / Rational::from_integer(3.into())
                + (a * d + b * c) * x2 / Rational::from_integer(2.into())
                + b * d * x
        };
        antideriv(hi) - antideriv(lo)
    }
}

/// Function on `[0,1]`, affine on each `[xs[k], xs[k+1]]`.
///
/// Breakpoint values follow the right piece (the last piece owns `1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseAffine {
    xs: Vec<Rational>,
    pieces: Vec<Affine>,
}

impl PiecewiseAffine {
    pub fn new(xs: Vec<Rational>, pieces: Vec<Affine>) -> Self {
        assert_eq!(xs.len(), pieces.len() + 1);
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "breakpoints must increase");
        PiecewiseAffine { xs, pieces }
    }

    pub fn constant(c: Rational) -> Self {
        PiecewiseAffine::new(vec![Rational::zero(), Rational::one()], vec![Affine::constant(c)])
    }

    /// Continuous interpolant through `(xs[k], ys[k])`.
    pub fn from_nodes(xs: Vec<Rational>, ys: Vec<Rational>) -> Self {
        assert_eq!(xs.len(), ys.len());
        let pieces = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| {
                let slope = (&y[1] - &y[0]) / (&x[1] - &x[0]);
                let offset = &y[0] - &slope * &x[0];
                Affine::new(slope, offset)
            })
            .collect();
        PiecewiseAffine::new(xs, pieces)
    }

    /// Step function with `values[k]` on `[xs[k], xs[k+1])`.
    pub fn step(xs: Vec<Rational>, values: Vec<Rational>) -> Self {
        PiecewiseAffine::new(xs, values.into_iter().map(Affine::constant).collect())
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.xs
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    /// Index of the piece owning `x`.
    pub fn piece_index(&self, x: &Rational) -> usize {
        let k = self.xs.partition_point(|b| b <= x);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.pieces[self.piece_index(x)].eval(x)
    }

    pub fn integral(&self) -> Rational {
        self.pieces
            .iter()
            .zip(self.xs.windows(2))
            .map(|(p, w)| p.integral(&w[0], &w[1]))
            .sum()
    }

    /// `∫ self·weight` over the common domain.
    pub fn weighted_integral(&self, weight: &PiecewiseAffine) -> Rational {
        let xs = merge_breakpoints(&self.xs, &weight.xs);
        xs.windows(2)
            .map(|w| {
                let mid = midpoint(&w[0], &w[1]);
                let f = &self.pieces[self.piece_index(&mid)];
                let g = &weight.pieces[weight.piece_index(&mid)];
                f.product_integral(g, &w[0], &w[1])
            })
            .sum()
    }

    /// Sup of `|f|` over the domain (one-sided limits included).
    pub fn sup_abs(&self) -> Rational {
        let mut best = Rational::zero();
        for (p, w) in self.pieces.iter().zip(self.xs.windows(2)) {
            for x in w {
                let v = p.eval(x).abs();
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    pub fn min_value(&self) -> Rational {
        self.pieces
            .iter()
            .zip(self.xs.windows(2))
            .flat_map(|(p, w)| [p.eval(&w[0]), p.eval(&w[1])])
            .min()
            .expect("nonempty")
    }

    /// Pointwise `a·self + b·other`.
    pub fn lin(&self, a: &Rational, other: &PiecewiseAffine, b: &Rational) -> PiecewiseAffine {
        let xs = merge_breakpoints(&self.xs, &other.xs);
        let pieces = xs
            .windows(2)
            .map(|w| {
                let mid = midpoint(&w[0], &w[1]);
                self.pieces[self.piece_index(&mid)]
                    .scale(a)
                    .add(&other.pieces[other.piece_index(&mid)].scale(b))
            })
            .collect();
        PiecewiseAffine::new(xs, pieces).simplified()
    }

    pub fn max(&self, other: &PiecewiseAffine) -> PiecewiseAffine {
        self.select(other, true)
    }

    pub fn min(&self, other: &PiecewiseAffine) -> PiecewiseAffine {
        self.select(other, false)
    }

    fn select(&self, other: &PiecewiseAffine, want_max: bool) -> PiecewiseAffine {
        let base = merge_breakpoints(&self.xs, &other.xs);
        let mut xs = vec![base[0].clone()];
        let mut pieces = Vec::new();
        for w in base.windows(2) {
            let mid = midpoint(&w[0], &w[1]);
            let f = &self.pieces[self.piece_index(&mid)];
            let g = &other.pieces[other.piece_index(&mid)];
            let mut cuts = vec![w[0].clone()];
            let dslope = &f.slope - &g.slope;
            if !dslope.is_zero() {
                let cross = (&g.offset - &f.offset) / dslope;
                if cross > w[0] && cross < w[1] {
                    cuts.push(cross);
                }
            }
            cuts.push(w[1].clone());
            for c in cuts.windows(2) {
                let m = midpoint(&c[0], &c[1]);
                let pick_f = (f.eval(&m) >= g.eval(&m)) == want_max;
                pieces.push(if pick_f { f.clone() } else { g.clone() });
                xs.push(c[1].clone());
            }
        }
        PiecewiseAffine::new(xs, pieces).simplified()
    }

    /// Merges neighbouring pieces carrying the same affine map.
    pub fn simplified(self) -> PiecewiseAffine {
        let mut xs = vec![self.xs[0].clone()];
        let mut pieces: Vec<Affine> = Vec::new();
        for (p, x) in self.pieces.into_iter().zip(self.xs.into_iter().skip(1)) {
            if pieces.last() == Some(&p) {
                *xs.last_mut().expect("nonempty") = x;
            } else {
                pieces.push(p);
                xs.push(x);
            }
        }
        PiecewiseAffine { xs, pieces }
    }
}

pub(crate) fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / Rational::from_integer(2.into())
}

pub(crate) fn merge_breakpoints(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut xs: Vec<Rational> = a.iter().chain(b.iter()).cloned().collect();
    xs.sort();
    xs.dedup();
    xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn tent_integral_and_sup() {
        let tent = PiecewiseAffine::from_nodes(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(0, 1), q(1, 1), q(0, 1)]);
        assert_eq!(tent.integral(), q(1, 2));
        assert_eq!(tent.sup_abs(), q(1, 1));
        assert_eq!(tent.eval(&q(1, 4)), q(1, 2));
        let square = tent.weighted_integral(&tent);
        assert_eq!(square, q(1, 3));
    }

    #[test]
    fn max_inserts_crossings() {
        let up = PiecewiseAffine::from_nodes(vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]);
        let down = PiecewiseAffine::from_nodes(vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]);
        let hi = up.max(&down);
        assert_eq!(hi.breakpoints(), &[q(0, 1), q(1, 2), q(1, 1)]);
        assert_eq!(hi.integral(), q(3, 4));
        assert_eq!(up.min(&down).integral(), q(1, 4));
        let diff = up.lin(&q(1, 1), &down, &q(-1, 1));
        assert_eq!(diff.integral(), q(0, 1));
        assert_eq!(diff.pieces().len(), 1);
    }
}
