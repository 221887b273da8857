//! Matrix-valued fields on a chart, evaluated pointwise together with first
//! and second coordinate derivatives on demand. Coefficient fields are
//! closures, not grids: identities are checked at sampled points and the only
//! discretization anywhere is in the finite-difference cross-check oracles.

use crate::geometry::Point;
use crate::jet::Jet;
use crate::linalg::{CMat, C64};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// How many derivative levels an evaluation must carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Val,
    D1,
    D2,
}

impl Order {
    pub fn levels(self) -> usize {
        match self {
            Order::Val => 0,
            Order::D1 => 1,
            Order::D2 => 2,
        }
    }

    pub fn raise(self) -> Order {
        match self {
            Order::Val => Order::D1,
            Order::D1 => Order::D2,
            Order::D2 => panic!(
                "derivative order exceeded: a third metric/coefficient derivative was requested"
            ),
        }
    }
}

/// Value, gradient and Hessian of a matrix field at a point. `d` has length
/// n at order >= D1, `h` has length n*n (row-major, symmetric) at order D2.
#[derive(Clone, Debug)]
pub struct MatJet {
    pub n: usize,
    pub order: Order,
    pub val: CMat,
    pub d: Vec<CMat>,
    pub h: Vec<CMat>,
}

impl MatJet {
    pub fn constant(n: usize, order: Order, val: CMat) -> MatJet {
        let (rows, cols) = (val.rows, val.cols);
        let d = if order >= Order::D1 {
            vec![CMat::zeros(rows, cols); n]
        } else {
            Vec::new()
        };
        let h = if order >= Order::D2 {
            vec![CMat::zeros(rows, cols); n * n]
        } else {
            Vec::new()
        };
        MatJet {
            n,
            order,
            val,
            d,
            h,
        }
    }

    pub fn zeros(n: usize, order: Order, rows: usize, cols: usize) -> MatJet {
        MatJet::constant(n, order, CMat::zeros(rows, cols))
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> &CMat {
        &self.h[i * self.n + j]
    }

    pub fn add(&self, other: &MatJet) -> MatJet {
        self.zip(other, CMat::add)
    }

    pub fn sub(&self, other: &MatJet) -> MatJet {
        self.zip(other, CMat::sub)
    }

    fn zip(&self, other: &MatJet, f: impl Fn(&CMat, &CMat) -> CMat) -> MatJet {
        assert_eq!(self.order, other.order);
        assert_eq!(self.n, other.n);
        MatJet {
            n: self.n,
            order: self.order,
            val: f(&self.val, &other.val),
            d: self.d.iter().zip(&other.d).map(|(a, b)| f(a, b)).collect(),
            h: self.h.iter().zip(&other.h).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn neg(&self) -> MatJet {
        self.map(|m| m.neg())
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> MatJet {
        MatJet {
            n: self.n,
            order: self.order,
            val: f(&self.val),
            d: self.d.iter().map(&f).collect(),
            h: self.h.iter().map(&f).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> MatJet {
        self.map(|m| m.scale(s))
    }

    /// Leibniz product of two matrix jets of equal order.
    pub fn mul(&self, other: &MatJet) -> MatJet {
        assert_eq!(self.order, other.order);
        assert_eq!(self.n, other.n);
        let n = self.n;
        let val = self.val.mul(&other.val);
        let mut d = Vec::new();
        let mut h = Vec::new();
        if self.order >= Order::D1 {
            for mu in 0..n {
                d.push(self.d[mu].mul(&other.val).add(&self.val.mul(&other.d[mu])));
            }
        }
        if self.order >= Order::D2 {
            for mu in 0..n {
                for nu in 0..n {
                    let mut t = self.hess(mu, nu).mul(&other.val);
                    t = t.add(&self.d[mu].mul(&other.d[nu]));
                    t = t.add(&self.d[nu].mul(&other.d[mu]));
                    t = t.add(&self.val.mul(other.hess(mu, nu)));
                    h.push(t);
                }
            }
        }
        MatJet {
            n,
            order: self.order,
            val,
            d,
            h,
        }
    }

    /// Leibniz product with a scalar jet (full second-order jet).
    pub fn scale_jet(&self, s: &Jet<C64>) -> MatJet {
        let n = self.n;
        let val = self.val.scale(s.v);
        let mut d = Vec::new();
        let mut h = Vec::new();
        if self.order >= Order::D1 {
            for mu in 0..n {
                d.push(self.d[mu].scale(s.v).add(&self.val.scale(s.d[mu])));
            }
        }
        if self.order >= Order::D2 {
            for mu in 0..n {
                for nu in 0..n {
                    let mut t = self.hess(mu, nu).scale(s.v);
                    t.add_scaled(&self.d[mu], s.d[nu]);
                    t.add_scaled(&self.d[nu], s.d[mu]);
                    t.add_scaled(&self.val, s.h[mu][nu]);
                    h.push(t);
                }
            }
        }
        MatJet {
            n,
            order: self.order,
            val,
            d,
            h,
        }
    }

    pub fn commutator(&self, other: &MatJet) -> MatJet {
        self.mul(other).sub(&other.mul(self))
    }

    /// Extract the jet of the partial derivative d_mu of the field; drops one
    /// derivative level.
    pub fn partial(&self, mu: usize) -> MatJet {
        assert!(self.order >= Order::D1, "partial of a value-only jet");
        let order = match self.order {
            Order::D1 => Order::Val,
            Order::D2 => Order::D1,
            Order::Val => unreachable!(),
        };
        let val = self.d[mu].clone();
        let d = if order >= Order::D1 {
            (0..self.n).map(|nu| self.hess(mu, nu).clone()).collect()
        } else {
            Vec::new()
        };
        MatJet {
            n: self.n,
            order,
            val,
            d,
            h: Vec::new(),
        }
    }
}

type FieldFn = Arc<dyn Fn(&Point, Order) -> MatJet + Send + Sync>;

/// A smooth matrix-valued field on a chart.
#[derive(Clone)]
pub struct MatField {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    f: FieldFn,
}

impl MatField {
    pub fn from_fn(
        n: usize,
        rows: usize,
        cols: usize,
        f: impl Fn(&Point, Order) -> MatJet + Send + Sync + 'static,
    ) -> MatField {
        MatField {
            n,
            rows,
            cols,
            f: Arc::new(f),
        }
    }

    pub fn constant(n: usize, m: CMat) -> MatField {
        let (rows, cols) = (m.rows, m.cols);
        MatField::from_fn(n, rows, cols, move |_, order| {
            MatJet::constant(n, order, m.clone())
        })
    }

    pub fn zero(n: usize, rows: usize, cols: usize) -> MatField {
        MatField::constant(n, CMat::zeros(rows, cols))
    }

    pub fn eval(&self, x: &Point, order: Order) -> MatJet {
        (self.f)(x, order)
    }

    pub fn value(&self, x: &Point) -> CMat {
        self.eval(x, Order::Val).val
    }

    pub fn add(&self, other: &MatField) -> MatField {
        let (a, b) = (self.clone(), other.clone());
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| {
            a.eval(x, o).add(&b.eval(x, o))
        })
    }

    pub fn sub(&self, other: &MatField) -> MatField {
        let (a, b) = (self.clone(), other.clone());
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| {
            a.eval(x, o).sub(&b.eval(x, o))
        })
    }

    pub fn neg(&self) -> MatField {
        let a = self.clone();
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| a.eval(x, o).neg())
    }

    pub fn mul(&self, other: &MatField) -> MatField {
        assert_eq!(self.cols, other.rows);
        let (a, b) = (self.clone(), other.clone());
        MatField::from_fn(self.n, self.rows, other.cols, move |x, o| {
            a.eval(x, o).mul(&b.eval(x, o))
        })
    }

    pub fn commutator(&self, other: &MatField) -> MatField {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn scale(&self, s: C64) -> MatField {
        let a = self.clone();
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| {
            a.eval(x, o).scale(s)
        })
    }

    pub fn scale_field(&self, s: &ScalarField) -> MatField {
        let (a, sf) = (self.clone(), s.clone());
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| {
            a.eval(x, o).scale_jet(&sf.eval(x))
        })
    }

    /// The field x -> d_mu(self)(x); evaluating it at order k costs order k+1
    /// of the underlying field.
    pub fn partial(&self, mu: usize) -> MatField {
        let a = self.clone();
        MatField::from_fn(self.n, self.rows, self.cols, move |x, o| {
            a.eval(x, o.raise()).partial(mu)
        })
    }

    /// Memoize evaluations per (point, order). Worth it for fields whose
    /// closure trees are deep and which get evaluated repeatedly at the same
    /// sample points (connection coefficients, quantized forms).
    pub fn cached(&self) -> MatField {
        let inner = self.clone();
        let cache: Arc<Mutex<HashMap<([u64; crate::jet::MAX_DIM], usize), MatJet>>> =
            Arc::new(Mutex::new(HashMap::new()));
        MatField::from_fn(self.n, self.rows, self.cols, move |x, order| {
            let key = (x.bits(), order.levels());
            if let Some(hit) = cache.lock().unwrap().get(&key) {
                return hit.clone();
            }
            let v = inner.eval(x, order);
            cache.lock().unwrap().insert(key, v.clone());
            v
        })
    }

    /// Apply a pointwise linear map (e.g. a Kronecker embedding) to the field.
    pub fn map_linear(
        &self,
        rows: usize,
        cols: usize,
        f: impl Fn(&CMat) -> CMat + Send + Sync + 'static,
    ) -> MatField {
        let a = self.clone();
        MatField::from_fn(self.n, rows, cols, move |x, o| a.eval(x, o).map(&f))
    }

    pub fn lincomb(terms: &[(C64, MatField)]) -> MatField {
        assert!(!terms.is_empty());
        let n = terms[0].1.n;
        let (rows, cols) = (terms[0].1.rows, terms[0].1.cols);
        let terms: Vec<(C64, MatField)> = terms.to_vec();
        MatField::from_fn(n, rows, cols, move |x, o| {
            let mut acc = MatJet::zeros(n, o, rows, cols);
            for (s, t) in &terms {
                acc = acc.add(&t.eval(x, o).scale(*s));
            }
            acc
        })
    }
}

type ScalarFn = Arc<dyn Fn(&Point) -> Jet<C64> + Send + Sync>;

/// Complex scalar field carrying its full second-order jet.
#[derive(Clone)]
pub struct ScalarField {
    pub n: usize,
    f: ScalarFn,
}

impl ScalarField {
    pub fn from_fn(n: usize, f: impl Fn(&Point) -> Jet<C64> + Send + Sync + 'static) -> ScalarField {
        ScalarField { n, f: Arc::new(f) }
    }

    pub fn constant(n: usize, v: C64) -> ScalarField {
        ScalarField::from_fn(n, move |_| Jet::constant(n, v))
    }

    pub fn eval(&self, x: &Point) -> Jet<C64> {
        (self.f)(x)
    }
}

/// Seeded random trigonometric scalar field: bounded entries, frequencies at
/// most two, smooth with bounded derivatives, reproducible from the seed.
pub fn random_scalar_field(n: usize, rng: &mut impl rand::Rng) -> ScalarField {
    #[derive(Clone, Copy)]
    struct Term {
        amp: C64,
        freq: [f64; crate::jet::MAX_DIM],
        phase: f64,
    }
    let terms: Vec<Term> = (0..3)
        .map(|_| {
            let mut freq = [0.0; crate::jet::MAX_DIM];
            for f in freq.iter_mut().take(n) {
                *f = rng.gen_range(-2i32..=2) as f64;
            }
            Term {
                amp: C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                freq,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();
    let norm: f64 = terms.iter().map(|t| t.amp.norm()).sum::<f64>().max(1.0);
    ScalarField::from_fn(n, move |x| {
        let mut acc = Jet::constant(n, C64::new(0.0, 0.0));
        for t in &terms {
            let mut arg = Jet::constant(n, C64::new(t.phase, 0.0));
            for mu in 0..n {
                arg = arg + Jet::coord(n, x.xs[mu], mu).scale(C64::new(t.freq[mu], 0.0));
            }
            acc = acc + arg.sin().scale(t.amp / norm);
        }
        acc
    })
}

/// Random matrix field with independent trig-polynomial entries.
pub fn random_matrix_field(
    n: usize,
    rows: usize,
    cols: usize,
    rng: &mut impl rand::Rng,
) -> MatField {
    let entries: Vec<ScalarField> = (0..rows * cols)
        .map(|_| random_scalar_field(n, rng))
        .collect();
    MatField::from_fn(n, rows, cols, move |x, order| {
        let jets: Vec<Jet<C64>> = entries.iter().map(|e| e.eval(x)).collect();
        let mut out = MatJet::zeros(n, order, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let jet = &jets[i * cols + j];
                out.val.set(i, j, jet.v);
                if order >= Order::D1 {
                    for mu in 0..n {
                        out.d[mu].set(i, j, jet.d[mu]);
                    }
                }
                if order >= Order::D2 {
                    for mu in 0..n {
                        for nu in 0..n {
                            out.h[mu * n + nu].set(i, j, jet.h[mu][nu]);
                        }
                    }
                }
            }
        }
        out
    })
}
