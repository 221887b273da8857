//! Finite-dimensional complex Clifford algebra in an orthonormal frame, with
//! the convention v*w + w*v = -2 g(v,w): generators square to -Id and are
//! anti-Hermitian. The quantization map sends a wedge of frame covectors to
//! the ordered product of the corresponding generators.

use crate::linalg::{c, CMat, Parity, C64};
use crate::{Error, Result};
use std::collections::BTreeMap;

fn pauli() -> (CMat, CMat, CMat) {
    let sx = CMat::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let sy = CMat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => c(0.0, -1.0),
        (1, 0) => c(0.0, 1.0),
        _ => c(0.0, 0.0),
    });
    let sz = CMat::from_fn(2, 2, |i, j| {
        if i == j {
            c(if i == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    (sx, sy, sz)
}

/// Matrix representation of Cl(n) on spinors of dimension 2^{n/2}, together
/// with the chirality involution and the precomputed blade images.
#[derive(Clone, Debug)]
pub struct CliffordRep {
    pub n: usize,
    pub dim_s: usize,
    pub gammas: Vec<CMat>,
    pub chirality: CMat,
    blades: Vec<CMat>,
}

/// Iterated-tensor construction of the generators. Deterministic in n.
pub fn build_gammas(n: usize) -> Result<CliffordRep> {
    if n % 2 != 0 || n < 2 || n > 8 {
        return Err(Error::Dimension(format!(
            "Clifford dimension must be even and within 2..=8, got {n}"
        )));
    }
    let m = n / 2;
    let (sx, sy, sz) = pauli();
    let id2 = CMat::identity(2);
    let dim_s = 1 << m;

    // Hermitian anticommuting set squaring to +Id, then multiplied by i.
    let mut gammas = Vec::with_capacity(n);
    for a in 0..n {
        let k = a / 2; // which tensor slot carries the Pauli factor
        let mut factors: Vec<&CMat> = Vec::with_capacity(m);
        for slot in 0..m {
            factors.push(if slot < k {
                &sz
            } else if slot == k {
                if a % 2 == 0 {
                    &sx
                } else {
                    &sy
                }
            } else {
                &id2
            });
        }
        let mut mat = factors[0].clone();
        for f in &factors[1..] {
            mat = mat.kron(f);
        }
        gammas.push(mat.scale(c(0.0, 1.0)));
    }

    // chirality = (-i)^{n/2} gamma^1 ... gamma^n; squares to Id and
    // anticommutes with every generator. The prefactor is validated by the
    // invariant tests, not imposed from outside.
    let mut chirality = CMat::identity(dim_s);
    for g in &gammas {
        chirality = chirality.mul(g);
    }
    let minus_i = c(0.0, -1.0);
    let mut pref = c(1.0, 0.0);
    for _ in 0..m {
        pref *= minus_i;
    }
    chirality = chirality.scale(pref);

    // blade images for every subset of generators, ascending index order
    let mut blades = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let mut b = CMat::identity(dim_s);
        for a in 0..n {
            if mask & (1 << a) != 0 {
                b = b.mul(&gammas[a]);
            }
        }
        blades.push(b);
    }

    Ok(CliffordRep {
        n,
        dim_s,
        gammas,
        chirality,
        blades,
    })
}

impl CliffordRep {
    /// Product of generators selected by the bitmask, in ascending order.
    pub fn blade(&self, mask: u32) -> &CMat {
        &self.blades[mask as usize]
    }

    /// Clifford action of a covector given by orthonormal-frame components.
    pub fn c_covector(&self, comps: &[C64]) -> CMat {
        assert_eq!(comps.len(), self.n);
        let mut out = CMat::zeros(self.dim_s, self.dim_s);
        for (a, &v) in comps.iter().enumerate() {
            out.add_scaled(&self.gammas[a], v);
        }
        out
    }
}

/// Exterior-algebra element in an orthonormal frame: sparse map from blade
/// bitmask to coefficient. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    pub n: usize,
    pub terms: BTreeMap<u32, C64>,
}

/// Sign of merging two disjoint ascending blades, None if they intersect.
fn merge_sign(a: u32, b: u32) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut sign = 1.0;
    let mut bb = b;
    while bb != 0 {
        let low = bb.trailing_zeros();
        // transpositions needed to move this factor past the tail of `a`
        let higher = (a >> (low + 1)).count_ones();
        if higher % 2 == 1 {
            sign = -sign;
        }
        bb &= bb - 1;
    }
    Some(sign)
}

impl Multivector {
    pub fn zero(n: usize) -> Multivector {
        Multivector {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(n: usize, v: C64) -> Multivector {
        let mut m = Multivector::zero(n);
        m.insert(0, v);
        m
    }

    /// Basis blade e^{a1} ^ ... ^ e^{ak} for strictly increasing 0-based
    /// indices.
    pub fn basis_blade(n: usize, idx: &[usize]) -> Multivector {
        assert!(idx.windows(2).all(|w| w[0] < w[1]), "blade indices must increase");
        let mut mask = 0u32;
        for &i in idx {
            assert!(i < n);
            mask |= 1 << i;
        }
        let mut m = Multivector::zero(n);
        m.insert(mask, c(1.0, 0.0));
        m
    }

    pub fn covector(n: usize, comps: &[C64]) -> Multivector {
        let mut m = Multivector::zero(n);
        for (a, &v) in comps.iter().enumerate() {
            m.insert(1 << a, v);
        }
        m
    }

    fn insert(&mut self, mask: u32, v: C64) {
        if v.norm_sqr() == 0.0 {
            return;
        }
        let entry = self.terms.entry(mask).or_insert(c(0.0, 0.0));
        *entry += v;
        if entry.norm_sqr() == 0.0 {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &Multivector) -> Multivector {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (&mask, &v) in &other.terms {
            out.insert(mask, v);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Multivector {
        let mut out = Multivector::zero(self.n);
        for (&mask, &v) in &self.terms {
            out.insert(mask, v * s);
        }
        out
    }

    pub fn wedge(&self, other: &Multivector) -> Multivector {
        assert_eq!(self.n, other.n);
        let mut out = Multivector::zero(self.n);
        for (&ma, &va) in &self.terms {
            for (&mb, &vb) in &other.terms {
                if let Some(sign) = merge_sign(ma, mb) {
                    out.insert(ma | mb, va * vb * c(sign, 0.0));
                }
            }
        }
        out
    }
}

/// The quantization map on exterior-algebra elements: each ascending blade
/// goes to the ordered product of generators, extended linearly. Degree zero
/// lands on multiples of the identity.
pub fn quantize(v: &Multivector, rep: &CliffordRep) -> Result<CMat> {
    if v.n != rep.n {
        return Err(Error::Dimension(format!(
            "multivector dimension {} does not match representation dimension {}",
            v.n, rep.n
        )));
    }
    let mut out = CMat::zeros(rep.dim_s, rep.dim_s);
    for (&mask, &coeff) in &v.terms {
        out.add_scaled(rep.blade(mask), coeff);
    }
    Ok(out)
}

/// c2(v (x) w) = c(v) c(w) on covectors given in the orthonormal frame.
/// Equals quantize(v ^ w) - <v,w> Id.
pub fn c2(v: &[C64], w: &[C64], rep: &CliffordRep) -> Result<CMat> {
    if v.len() != rep.n || w.len() != rep.n {
        return Err(Error::Dimension(format!(
            "covector length {} / {} does not match representation dimension {}",
            v.len(),
            w.len(),
            rep.n
        )));
    }
    Ok(rep.c_covector(v).mul(&rep.c_covector(w)))
}

/// Supercommutator of parity-homogeneous matrices. Missing parity flags are
/// inferred from the chirality involution; genuinely mixed input is an error.
pub fn supercommutator(
    rep: &CliffordRep,
    a: &CMat,
    pa: Option<Parity>,
    b: &CMat,
    pb: Option<Parity>,
) -> Result<CMat> {
    let resolve = |m: &CMat, p: Option<Parity>| -> Result<Parity> {
        match p {
            Some(p) => Ok(p),
            None => m.parity_wrt(&rep.chirality, 1e-10).ok_or_else(|| {
                Error::Evaluation(
                    "matrix is not parity-homogeneous and no parity flag was given".into(),
                )
            }),
        }
    };
    let pa = resolve(a, pa)?;
    let pb = resolve(b, pb)?;
    Ok(a.supercommutator(pa, b, pb))
}
