//! Endomorphism-valued differential forms on a chart and their graded
//! algebra: wedge with Koszul signs, inner derivative, metric evaluation, the
//! pointwise tensor product, quantization of forms through the vielbein, the
//! canonical covariant-constant one-form and the projection built from it.
//!
//! A degree-k form stores one matrix field per strictly increasing
//! multi-index; the full antisymmetric coefficient array is recovered by sign
//! lookup. The fiber is E = S (x) W with S the spinor space and W a graded
//! twisting space. Values commuting with the Clifford action in the graded
//! sense are embedded as chi^{|w|} (x) w, which realizes the graded tensor
//! product of algebras on plain matrices.

use crate::clifford::CliffordRep;
use crate::fields::{MatField, MatJet, Order};
use crate::geometry::{ChartGeometry, GeometryJet, Point};
use crate::jet::Jet;
use crate::linalg::{c, CMat, Parity, C64};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// combinatorics

/// Strictly increasing k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Sort an index tuple, returning the permutation sign, or None on repeats.
pub fn sort_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in (i + 1..v.len()).rev() {
            if v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// Sign of the shuffle (s1, s2) relative to the sorted union; both inputs
/// sorted and disjoint.
fn shuffle_sign(s1: &[usize], s2: &[usize]) -> f64 {
    let mut inv = 0usize;
    for &a in s1 {
        for &b in s2 {
            if a > b {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// fiber

/// The Clifford module fiber E = S (x) W with its gradings and the
/// precomputed Clifford blades acting on E.
pub struct Fiber {
    pub rep: Arc<CliffordRep>,
    pub w_plus: usize,
    pub w_minus: usize,
    pub dim_w: usize,
    pub dim_e: usize,
    pub tau_w: CMat,
    pub chi_e: CMat,
    pub tau_e: CMat,
    blades_e: Vec<CMat>,
    gamma_pairs: Vec<CMat>,
}

impl Fiber {
    pub fn new(rep: Arc<CliffordRep>, w_plus: usize, w_minus: usize) -> Arc<Fiber> {
        // w_minus = 0 gives the trivial (purely even) twisting of pure
        // spinors; the odd commutant is then zero-dimensional.
        assert!(w_plus >= 1, "the even twisting rank must be positive");
        let dim_w = w_plus + w_minus;
        let dim_e = rep.dim_s * dim_w;
        let id_w = CMat::identity(dim_w);
        let tau_w = CMat::from_fn(dim_w, dim_w, |i, j| {
            if i == j {
                c(if i < w_plus { 1.0 } else { -1.0 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let chi_e = rep.chirality.kron(&id_w);
        let tau_e = rep.chirality.kron(&tau_w);
        let blades_e: Vec<CMat> = (0..(1u32 << rep.n))
            .map(|m| rep.blade(m).kron(&id_w))
            .collect();
        let n = rep.n;
        let gamma_pairs = (0..n * n)
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                blades_e[1 << a].mul(&blades_e[1 << b])
            })
            .collect();
        Arc::new(Fiber {
            rep,
            w_plus,
            w_minus,
            dim_w,
            dim_e,
            tau_w,
            chi_e,
            tau_e,
            blades_e,
            gamma_pairs,
        })
    }

    pub fn n(&self) -> usize {
        self.rep.n
    }

    /// Blade of the spinor factor extended by the identity on W.
    pub fn blade_e(&self, mask: u32) -> &CMat {
        &self.blades_e[mask as usize]
    }

    pub fn gamma_e(&self, a: usize) -> &CMat {
        &self.blades_e[1 << a]
    }

    /// Ordered product gamma^a gamma^b extended to E.
    pub fn gamma_pair_e(&self, a: usize, b: usize) -> &CMat {
        &self.gamma_pairs[a * self.rep.n + b]
    }

    /// Embedding of End(W) into the graded commutant of the Clifford action:
    /// even w goes to Id (x) w, odd w to chi (x) w. The embedded operator
    /// supercommutes with every c(v).
    pub fn embed_endw(&self, w: &CMat, parity: Parity) -> CMat {
        match parity {
            Parity::Even => CMat::identity(self.rep.dim_s).kron(w),
            Parity::Odd => self.rep.chirality.kron(w),
        }
    }

    pub fn embed_endw_field(&self, w: &MatField, parity: Parity) -> MatField {
        let left = match parity {
            Parity::Even => CMat::identity(self.rep.dim_s),
            Parity::Odd => self.rep.chirality.clone(),
        };
        w.map_linear(self.dim_e, self.dim_e, move |m| left.kron(m))
    }

    /// Project a W-endomorphism onto its grading-even or grading-odd part.
    pub fn project_w_parity(&self, m: &CMat, p: Parity) -> CMat {
        let conj = self.tau_w.mul(m).mul(&self.tau_w);
        match p {
            Parity::Even => m.add(&conj).scale(c(0.5, 0.0)),
            Parity::Odd => m.sub(&conj).scale(c(0.5, 0.0)),
        }
    }
}

// ---------------------------------------------------------------------------
// bundle: chart + fiber, with the geometry-derived matrix fields

/// A Clifford module over a chart: all field constructors that mix geometry
/// with the fiber live here.
#[derive(Clone)]
pub struct Bundle {
    pub geom: Arc<ChartGeometry>,
    pub fiber: Arc<Fiber>,
}

fn full_jet(n: usize, v: f64, d: impl Fn(usize) -> f64, h: impl Fn(usize, usize) -> f64) -> Jet<C64> {
    let mut out = Jet::constant(n, C64::new(v, 0.0));
    for mu in 0..n {
        out.d[mu] = C64::new(d(mu), 0.0);
        for nu in 0..n {
            out.h[mu][nu] = C64::new(h(mu, nu), 0.0);
        }
    }
    out
}

impl Bundle {
    pub fn new(geom: Arc<ChartGeometry>, fiber: Arc<Fiber>) -> Bundle {
        assert_eq!(geom.n, fiber.n(), "chart and fiber dimensions must match");
        Bundle { geom, fiber }
    }

    pub fn n(&self) -> usize {
        self.geom.n
    }

    pub fn dim_e(&self) -> usize {
        self.fiber.dim_e
    }

    pub fn jet(&self, x: &Point) -> Arc<GeometryJet> {
        self.geom.jet_at(x).expect("geometry evaluation failed")
    }

    pub fn g_jet(&self, jet: &GeometryJet, m: usize, nu: usize) -> Jet<C64> {
        full_jet(
            jet.n,
            jet.g[m][nu],
            |s| jet.dg[s][m][nu],
            |s, t| jet.d2g[s][t][m][nu],
        )
    }

    pub fn g_inv_jet(&self, jet: &GeometryJet, m: usize, nu: usize) -> Jet<C64> {
        full_jet(
            jet.n,
            jet.g_inv[m][nu],
            |s| jet.dg_inv[s][m][nu],
            |s, t| jet.d2g_inv[s][t][m][nu],
        )
    }

    pub fn h_jet(&self, jet: &GeometryJet, m: usize, a: usize) -> Jet<C64> {
        full_jet(
            jet.n,
            jet.h[m][a],
            |s| jet.dh[s][m][a],
            |s, t| jet.d2h[s][t][m][a],
        )
    }

    /// Clifford action of the coordinate coframe: c(dx^m) = h^m_a gamma^a.
    pub fn c_dx(&self, mu: usize) -> MatField {
        let this = self.clone();
        let (n, dim) = (self.n(), self.dim_e());
        MatField::from_fn(n, dim, dim, move |x, order| {
            let jet = this.jet(x);
            let mut acc = MatJet::zeros(n, order, dim, dim);
            for a in 0..n {
                let hj = this.h_jet(&jet, mu, a);
                let base = MatJet::constant(n, order, this.fiber.gamma_e(a).clone());
                acc = acc.add(&base.scale_jet(&hj));
            }
            acc
        })
    }

    /// Spinor-connection coefficient acting on E:
    /// omega_m = (1/4) omega_{m a b} gamma^a gamma^b (x) Id_W.
    /// Supports value and first-derivative evaluation.
    pub fn spin_omega(&self, mu: usize) -> MatField {
        let this = self.clone();
        let (n, dim) = (self.n(), self.dim_e());
        MatField::from_fn(n, dim, dim, move |x, order| {
            assert!(
                order <= Order::D1,
                "derivative order exceeded: second derivatives of the spin connection"
            );
            let jet = this.jet(x);
            let mut out = MatJet::zeros(n, order, dim, dim);
            for a in 0..n {
                for b in 0..n {
                    let gg = this.fiber.gamma_pair_e(a, b);
                    out.val.add_scaled(gg, c(0.25 * jet.omega[mu][a][b], 0.0));
                    if order >= Order::D1 {
                        for t in 0..n {
                            out.d[t].add_scaled(gg, c(0.25 * jet.domega[t][mu][a][b], 0.0));
                        }
                    }
                }
            }
            out
        })
    }

    /// The canonical one-form gamma = -(1/n) g_{mn} dx^m (x) c(dx^n); its
    /// Clifford image is the identity and it is covariant constant.
    pub fn gamma_canonical(&self) -> EndForm {
        let n = self.n();
        let comps = (0..n)
            .map(|m| {
                let this = self.clone();
                let dim = self.dim_e();
                MatField::from_fn(n, dim, dim, move |x, order| {
                    let jet = this.jet(x);
                    let mut acc = MatJet::zeros(n, order, dim, dim);
                    for nu in 0..n {
                        let gj = this.g_jet(&jet, m, nu).scale(C64::new(-1.0 / n as f64, 0.0));
                        acc = acc.add(&this.c_dx(nu).eval(x, order).scale_jet(&gj));
                    }
                    acc
                })
                .cached()
            })
            .collect();
        EndForm {
            n,
            dim: self.dim_e(),
            degree: 1,
            parity: Parity::Even,
            comps,
        }
    }

    /// Clifford action of the Riemann tensor, a two-form with values in the
    /// image of the quantization map:
    /// c(R)_{mn} = -(1/4) R_{ab mn} gamma^a gamma^b (x) Id_W.
    /// The sign is pinned operationally against the curvature of the spinor
    /// connection (and, downstream, the +r/4 term on the unit sphere) given
    /// this crate's sphere-positive scalar-curvature convention.
    /// Value-only evaluation.
    pub fn clifford_riemann(&self) -> EndForm {
        let n = self.n();
        let sets = combinations(n, 2);
        let comps = sets
            .iter()
            .map(|s| {
                let (m, nu) = (s[0], s[1]);
                let this = self.clone();
                let dim = self.dim_e();
                MatField::from_fn(n, dim, dim, move |x, order| {
                    assert!(
                        order == Order::Val,
                        "derivative order exceeded: derivatives of the curvature action"
                    );
                    let jet = this.jet(x);
                    let rab = crate::geometry::riemann_orthonormal(&jet);
                    let mut out = MatJet::zeros(n, order, dim, dim);
                    for a in 0..n {
                        for b in 0..n {
                            let gg = this.fiber.gamma_pair_e(a, b);
                            out.val.add_scaled(gg, c(-0.25 * rab[a][b][m][nu], 0.0));
                        }
                    }
                    out
                })
            })
            .collect();
        EndForm {
            n,
            dim: self.dim_e(),
            degree: 2,
            parity: Parity::Even,
            comps,
        }
    }
}

// ---------------------------------------------------------------------------
// forms

/// Degree-k endomorphism-valued form. `parity` is the total Z2 parity (form
/// degree plus endomorphism parity); components are stored for strictly
/// increasing multi-indices in lexicographic order. Degrees above the chart
/// dimension are legal and identically zero.
#[derive(Clone)]
pub struct EndForm {
    pub n: usize,
    pub dim: usize,
    pub degree: usize,
    pub parity: Parity,
    pub comps: Vec<MatField>,
}

impl EndForm {
    pub fn zero(n: usize, dim: usize, degree: usize, parity: Parity) -> EndForm {
        let count = combinations(n, degree).len();
        EndForm {
            n,
            dim,
            degree,
            parity,
            comps: vec![MatField::zero(n, dim, dim); count],
        }
    }

    pub fn from_comps(
        n: usize,
        dim: usize,
        degree: usize,
        parity: Parity,
        comps: Vec<MatField>,
    ) -> EndForm {
        assert_eq!(comps.len(), combinations(n, degree).len());
        EndForm {
            n,
            dim,
            degree,
            parity,
            comps,
        }
    }

    /// A degree-0 form from its single component.
    pub fn scalar(parity: Parity, field: MatField) -> EndForm {
        EndForm {
            n: field.n,
            dim: field.rows,
            degree: 0,
            parity,
            comps: vec![field],
        }
    }

    pub fn value_parity(&self) -> Parity {
        self.parity.add(Parity::from_usize(self.degree))
    }

    pub fn is_vacuous(&self) -> bool {
        self.degree > self.n
    }

    pub fn sets(&self) -> Vec<Vec<usize>> {
        combinations(self.n, self.degree)
    }

    fn set_index(&self, sorted: &[usize]) -> usize {
        self.sets()
            .iter()
            .position(|s| s == sorted)
            .expect("multi-index out of range")
    }

    pub fn comp(&self, sorted: &[usize]) -> &MatField {
        &self.comps[self.set_index(sorted)]
    }

    /// Evaluate the antisymmetric coefficient for an arbitrary index tuple.
    pub fn eval_coeff(&self, idx: &[usize], x: &Point, order: Order) -> MatJet {
        match sort_sign(idx) {
            None => MatJet::zeros(self.n, order, self.dim, self.dim),
            Some((sorted, sign)) => self
                .comp(&sorted)
                .eval(x, order)
                .scale(c(sign, 0.0)),
        }
    }

    pub fn add(&self, other: &EndForm) -> EndForm {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.parity, other.parity);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.add(b))
            .collect();
        EndForm {
            n: self.n,
            dim: self.dim,
            degree: self.degree,
            parity: self.parity,
            comps,
        }
    }

    pub fn sub(&self, other: &EndForm) -> EndForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> EndForm {
        self.scale(c(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> EndForm {
        EndForm {
            n: self.n,
            dim: self.dim,
            degree: self.degree,
            parity: self.parity,
            comps: self.comps.iter().map(|f| f.scale(s)).collect(),
        }
    }

    /// Graded product: degrees and parities add and the endomorphism factor
    /// of the left operand moves past the form factor of the right one with
    /// the Koszul sign (-1)^{|m| k2}.
    pub fn wedge(&self, other: &EndForm) -> EndForm {
        assert_eq!(self.n, other.n);
        assert_eq!(self.dim, other.dim);
        let n = self.n;
        let degree = self.degree + other.degree;
        let parity = self.parity.add(other.parity);
        if degree > n {
            return EndForm {
                n,
                dim: self.dim,
                degree,
                parity,
                comps: Vec::new(),
            };
        }
        let koszul = self
            .value_parity()
            .koszul(Parity::from_usize(other.degree));
        let (k1, dim) = (self.degree, self.dim);
        let comps = combinations(n, degree)
            .into_iter()
            .map(|target| {
                let mut parts: Vec<(f64, MatField, MatField)> = Vec::new();
                for pick in combinations(degree, k1) {
                    let s1: Vec<usize> = pick.iter().map(|&i| target[i]).collect();
                    let s2: Vec<usize> = (0..degree)
                        .filter(|i| !pick.contains(i))
                        .map(|i| target[i])
                        .collect();
                    let sign = shuffle_sign(&s1, &s2) * koszul;
                    parts.push((sign, self.comp(&s1).clone(), other.comp(&s2).clone()));
                }
                MatField::from_fn(n, dim, dim, move |x, o| {
                    let mut acc = MatJet::zeros(n, o, dim, dim);
                    for (sign, a, b) in &parts {
                        acc = acc.add(&a.eval(x, o).mul(&b.eval(x, o)).scale(c(*sign, 0.0)));
                    }
                    acc
                })
            })
            .collect();
        EndForm {
            n,
            dim: self.dim,
            degree,
            parity,
            comps,
        }
    }

    /// Inner derivative with respect to the coordinate vector field d_j.
    pub fn contract_coord(&self, j: usize) -> crate::Result<EndForm> {
        if self.degree == 0 {
            return Err(crate::Error::Dimension(
                "cannot contract a degree-zero form".into(),
            ));
        }
        let n = self.n;
        let degree = self.degree - 1;
        let parity = self.parity.flip();
        if self.is_vacuous() {
            return Ok(EndForm {
                n,
                dim: self.dim,
                degree,
                parity,
                comps: if degree > n {
                    Vec::new()
                } else {
                    vec![MatField::zero(n, self.dim, self.dim); combinations(n, degree).len()]
                },
            });
        }
        let comps = combinations(n, degree)
            .into_iter()
            .map(|rest| {
                if rest.contains(&j) {
                    MatField::zero(n, self.dim, self.dim)
                } else {
                    let below = rest.iter().filter(|&&r| r < j).count();
                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    let mut full: Vec<usize> = rest.clone();
                    full.push(j);
                    let (sorted, _) = sort_sign(&full).unwrap();
                    self.comp(&sorted).scale(c(sign, 0.0))
                }
            })
            .collect();
        Ok(EndForm {
            n,
            dim: self.dim,
            degree,
            parity,
            comps,
        })
    }

    /// Inner derivative with a constant-coefficient vector field.
    pub fn contract_vec(&self, coeffs: &[C64]) -> crate::Result<EndForm> {
        let mut acc: Option<EndForm> = None;
        for (j, &cj) in coeffs.iter().enumerate() {
            let term = self.contract_coord(j)?.scale(cj);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        Ok(acc.expect("empty vector field"))
    }
}

/// Inhomogeneous sum of forms, at most one term per degree.
#[derive(Clone)]
pub struct FormSum {
    pub n: usize,
    pub dim: usize,
    pub terms: Vec<EndForm>,
}

impl FormSum {
    pub fn zero(n: usize, dim: usize) -> FormSum {
        FormSum {
            n,
            dim,
            terms: Vec::new(),
        }
    }

    pub fn from_forms(forms: Vec<EndForm>) -> FormSum {
        assert!(!forms.is_empty());
        let mut out = FormSum::zero(forms[0].n, forms[0].dim);
        for f in forms {
            out = out.add_form(&f);
        }
        out
    }

    pub fn add_form(&self, form: &EndForm) -> FormSum {
        if form.is_vacuous() {
            return self.clone();
        }
        let mut terms = self.terms.clone();
        match terms.iter_mut().find(|t| t.degree == form.degree) {
            Some(t) => *t = t.add(form),
            None => {
                terms.push(form.clone());
                terms.sort_by_key(|t| t.degree);
            }
        }
        FormSum {
            n: self.n,
            dim: self.dim,
            terms,
        }
    }

    pub fn add(&self, other: &FormSum) -> FormSum {
        let mut out = self.clone();
        for t in &other.terms {
            out = out.add_form(t);
        }
        out
    }

    pub fn sub(&self, other: &FormSum) -> FormSum {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> FormSum {
        FormSum {
            n: self.n,
            dim: self.dim,
            terms: self.terms.iter().map(|t| t.scale(s)).collect(),
        }
    }

    pub fn wedge(&self, other: &FormSum) -> FormSum {
        let mut out = FormSum::zero(self.n, self.dim);
        for a in &self.terms {
            for b in &other.terms {
                let w = a.wedge(b);
                if !w.is_vacuous() {
                    out = out.add_form(&w);
                }
            }
        }
        out
    }

    pub fn square(&self) -> FormSum {
        self.wedge(self)
    }

    pub fn degree_part(&self, k: usize) -> Option<&EndForm> {
        self.terms.iter().find(|t| t.degree == k)
    }

    pub fn contract_coord(&self, j: usize) -> crate::Result<FormSum> {
        let mut out = FormSum::zero(self.n, self.dim);
        for t in &self.terms {
            if t.degree == 0 {
                continue; // contraction annihilates degree zero
            }
            out = out.add_form(&t.contract_coord(j)?);
        }
        Ok(out)
    }

    /// Common total parity of the terms, if homogeneous.
    pub fn total_parity(&self) -> Option<Parity> {
        let mut p = None;
        for t in &self.terms {
            match p {
                None => p = Some(t.parity),
                Some(q) if q == t.parity => {}
                _ => return None,
            }
        }
        p
    }
}

// ---------------------------------------------------------------------------
// tensor fields (T*M (x) T*M (x) End E)

/// Pointwise field of two-cotensor endomorphism values, no antisymmetry.
#[derive(Clone)]
pub struct TensorEndField {
    pub n: usize,
    pub dim: usize,
    pub comps: Vec<Vec<MatField>>,
}

impl TensorEndField {
    pub fn from_comps(comps: Vec<Vec<MatField>>) -> TensorEndField {
        let n = comps.len();
        let dim = comps[0][0].rows;
        TensorEndField { n, dim, comps }
    }

    pub fn add(&self, other: &TensorEndField) -> TensorEndField {
        let comps = (0..self.n)
            .map(|m| {
                (0..self.n)
                    .map(|nu| self.comps[m][nu].add(&other.comps[m][nu]))
                    .collect()
            })
            .collect();
        TensorEndField::from_comps(comps)
    }

    pub fn sub(&self, other: &TensorEndField) -> TensorEndField {
        let comps = (0..self.n)
            .map(|m| {
                (0..self.n)
                    .map(|nu| self.comps[m][nu].sub(&other.comps[m][nu]))
                    .collect()
            })
            .collect();
        TensorEndField::from_comps(comps)
    }

    /// Metric evaluation g^{mn} t_{mn}.
    pub fn ev_g(&self, bundle: &Bundle) -> MatField {
        let this = self.clone();
        let b = bundle.clone();
        let (n, dim) = (self.n, self.dim);
        MatField::from_fn(n, dim, dim, move |x, order| {
            let jet = b.jet(x);
            let mut acc = MatJet::zeros(n, order, dim, dim);
            for m in 0..n {
                for nu in 0..n {
                    let gj = b.g_inv_jet(&jet, m, nu);
                    acc = acc.add(&this.comps[m][nu].eval(x, order).scale_jet(&gj));
                }
            }
            acc
        })
    }

    /// Quantize the two covector slots in order: c(dx^m) c(dx^n) t_{mn}.
    pub fn c2_quantize(&self, bundle: &Bundle) -> MatField {
        let this = self.clone();
        let b = bundle.clone();
        let (n, dim) = (self.n, self.dim);
        MatField::from_fn(n, dim, dim, move |x, order| {
            let mut acc = MatJet::zeros(n, order, dim, dim);
            let cdx: Vec<MatJet> = (0..n).map(|m| b.c_dx(m).eval(x, order)).collect();
            for m in 0..n {
                for nu in 0..n {
                    let t = this.comps[m][nu].eval(x, order);
                    acc = acc.add(&cdx[m].mul(&cdx[nu]).mul(&t));
                }
            }
            acc
        })
    }
}

/// Pointwise product in the tensor algebra: (a . b)_{mn} = a_m b_n for
/// one-forms, with no antisymmetrization.
pub fn dot(a: &EndForm, b: &EndForm) -> TensorEndField {
    assert_eq!(a.degree, 1);
    assert_eq!(b.degree, 1);
    let n = a.n;
    let comps = (0..n)
        .map(|m| {
            (0..n)
                .map(|nu| a.comps[m].mul(&b.comps[nu]))
                .collect()
        })
        .collect();
    TensorEndField::from_comps(comps)
}

// ---------------------------------------------------------------------------
// quantization

/// Determinant of a k x k matrix of scalar jets by Laplace expansion.
fn jet_det(k: usize, m: &[Vec<Jet<C64>>]) -> Jet<C64> {
    if k == 1 {
        return m[0][0];
    }
    let n = m[0][0].n;
    let mut acc = Jet::constant(n, C64::new(0.0, 0.0));
    for i in 0..k {
        let minor: Vec<Vec<Jet<C64>>> = (0..k)
            .filter(|&r| r != i)
            .map(|r| (1..k).map(|cc| m[r][cc]).collect())
            .collect();
        let term = m[i][0] * jet_det(k - 1, &minor);
        if i % 2 == 0 {
            acc = acc + term;
        } else {
            acc = acc - term;
        }
    }
    acc
}

/// Quantization of a single form: coefficients are pushed to the orthonormal
/// frame through the vielbein (minor determinants of h), then each ascending
/// frame blade acts by its gamma product from the left.
pub fn quantize_form(alpha: &EndForm, bundle: &Bundle) -> MatField {
    let n = alpha.n;
    let dim = alpha.dim;
    if alpha.is_vacuous() {
        return MatField::zero(n, dim, dim);
    }
    if alpha.degree == 0 {
        return alpha.comps[0].clone();
    }
    let alpha = alpha.clone();
    let b = bundle.clone();
    MatField::from_fn(n, dim, dim, move |x, order| {
        let jet = b.jet(x);
        let k = alpha.degree;
        let hj: Vec<Vec<Jet<C64>>> = (0..n)
            .map(|m| (0..n).map(|a| b.h_jet(&jet, m, a)).collect())
            .collect();
        let sets = combinations(n, k);
        let coord_jets: Vec<MatJet> = sets
            .iter()
            .map(|s| alpha.comp(s).eval(x, order))
            .collect();
        let mut acc = MatJet::zeros(n, order, dim, dim);
        for aset in &sets {
            // orthonormal coefficient = sum over coordinate sets of the
            // vielbein minor determinant times the coordinate coefficient
            let mut coeff = MatJet::zeros(n, order, dim, dim);
            for (mi, mset) in sets.iter().enumerate() {
                let minor: Vec<Vec<Jet<C64>>> = mset
                    .iter()
                    .map(|&m| aset.iter().map(|&a| hj[m][a]).collect())
                    .collect();
                let det = jet_det(k, &minor);
                coeff = coeff.add(&coord_jets[mi].scale_jet(&det));
            }
            let mut mask = 0u32;
            for &a in aset {
                mask |= 1 << a;
            }
            let blade = b.fiber.blade_e(mask).clone();
            acc = acc.add(&coeff.map(|m| blade.mul(m)));
        }
        acc
    })
    .cached()
}

/// Linear extension of the quantization map to inhomogeneous sums.
pub fn quantize_sum(alpha: &FormSum, bundle: &Bundle) -> MatField {
    let mut acc = MatField::zero(alpha.n, alpha.dim, alpha.dim);
    for t in &alpha.terms {
        acc = acc.add(&quantize_form(t, bundle));
    }
    acc.cached()
}

/// beta(alpha) = dx^k (x) c(i(d_k) alpha), in the coordinate frame.
pub fn beta(alpha: &FormSum, bundle: &Bundle) -> EndForm {
    let n = alpha.n;
    let total = alpha.total_parity().expect("beta needs parity-homogeneous input");
    let comps = (0..n)
        .map(|kidx| {
            let contracted = alpha.contract_coord(kidx).expect("contraction failed");
            quantize_sum(&contracted, bundle).cached()
        })
        .collect();
    EndForm {
        n,
        dim: alpha.dim,
        degree: 1,
        parity: total,
        comps,
    }
}

/// The projection onto one-forms: g(alpha) = mu(gamma) c(alpha), i.e.
/// dx^nu (x) gamma_nu c(alpha). Satisfies c(g(alpha)) = c(alpha) and
/// g(g(alpha)) = g(alpha).
pub fn g_projection(alpha: &FormSum, bundle: &Bundle) -> EndForm {
    let total = alpha.total_parity().expect("projection needs parity-homogeneous input");
    let gamma = bundle.gamma_canonical();
    let q = quantize_sum(alpha, bundle);
    let comps = (0..alpha.n)
        .map(|nu| gamma.comps[nu].mul(&q).cached())
        .collect();
    EndForm {
        n: alpha.n,
        dim: alpha.dim,
        degree: 1,
        parity: total,
        comps,
    }
}

// ---------------------------------------------------------------------------
// connections on E and covariant derivatives of forms

/// A connection on E given by its coefficient matrix fields:
/// nabla_m = d_m + omega_m.
#[derive(Clone)]
pub struct EConnection {
    pub n: usize,
    pub dim: usize,
    pub omega: Vec<MatField>,
}

impl EConnection {
    pub fn new(omega: Vec<MatField>) -> EConnection {
        let n = omega.len();
        let dim = omega[0].rows;
        EConnection { n, dim, omega }
    }

    /// Induced covariant derivative on endomorphism fields:
    /// d_m f + [omega_m, f].
    pub fn cov_end(&self, mu: usize, f: &MatField) -> MatField {
        f.partial(mu).add(&self.omega[mu].commutator(f))
    }

    /// Shift by an endomorphism-valued one-form.
    pub fn shifted(&self, theta: &EndForm) -> EConnection {
        assert_eq!(theta.degree, 1);
        let omega = (0..self.n)
            .map(|m| self.omega[m].add(&theta.comps[m]).cached())
            .collect();
        EConnection::new(omega)
    }

    /// Curvature two-form R_{mn} = d_m omega_n - d_n omega_m +
    /// [omega_m, omega_n].
    pub fn curvature(&self) -> EndForm {
        let n = self.n;
        let comps = combinations(n, 2)
            .into_iter()
            .map(|s| {
                let (m, nu) = (s[0], s[1]);
                self.omega[nu]
                    .partial(m)
                    .sub(&self.omega[m].partial(nu))
                    .add(&self.omega[m].commutator(&self.omega[nu]))
            })
            .collect();
        EndForm {
            n,
            dim: self.dim,
            degree: 2,
            parity: Parity::Even,
            comps,
        }
    }
}

/// Exterior covariant derivative of a form:
/// (d alpha)_S = sum_{i in S} (-1)^{pos(i)} nabla_i alpha_{S minus i}.
pub fn ext_cov_deriv(alpha: &EndForm, conn: &EConnection) -> EndForm {
    let n = alpha.n;
    let degree = alpha.degree + 1;
    let parity = alpha.parity.flip();
    if degree > n || alpha.is_vacuous() {
        return EndForm {
            n,
            dim: alpha.dim,
            degree,
            parity,
            comps: if degree > n {
                Vec::new()
            } else {
                vec![MatField::zero(n, alpha.dim, alpha.dim); combinations(n, degree).len()]
            },
        };
    }
    let comps = combinations(n, degree)
        .into_iter()
        .map(|target| {
            let mut acc: Option<MatField> = None;
            for (pos, &i) in target.iter().enumerate() {
                let rest: Vec<usize> = target
                    .iter()
                    .copied()
                    .filter(|&r| r != i)
                    .collect();
                let mut term = conn.cov_end(i, alpha.comp(&rest));
                if pos % 2 == 1 {
                    term = term.neg();
                }
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            acc.unwrap()
        })
        .collect();
    EndForm {
        n,
        dim: alpha.dim,
        degree,
        parity,
        comps,
    }
}

pub fn ext_cov_deriv_sum(alpha: &FormSum, conn: &EConnection) -> FormSum {
    let mut out = FormSum::zero(alpha.n, alpha.dim);
    for t in &alpha.terms {
        let d = ext_cov_deriv(t, conn);
        if !d.is_vacuous() {
            out = out.add_form(&d);
        }
    }
    out
}

/// Covariant derivative of a one-form as a two-cotensor field:
/// (nabla alpha)_{mn} = d_m alpha_n - Gamma^s_{nm} alpha_s +
/// [omega_m, alpha_n]. Supports value and first-derivative evaluation.
pub fn nabla_one_form(
    alpha: &EndForm,
    conn: &EConnection,
    geom: &Arc<ChartGeometry>,
) -> TensorEndField {
    assert_eq!(alpha.degree, 1);
    let n = alpha.n;
    let dim = alpha.dim;
    let comps = (0..n)
        .map(|m| {
            (0..n)
                .map(|nu| {
                    let alpha = alpha.clone();
                    let conn = conn.clone();
                    let geom = geom.clone();
                    MatField::from_fn(n, dim, dim, move |x, order| {
                        assert!(
                            order <= Order::D1,
                            "derivative order exceeded: second derivatives of nabla(one-form)"
                        );
                        let jet = geom.jet_at(x).expect("geometry evaluation failed");
                        let base = conn.cov_end(m, &alpha.comps[nu]).eval(x, order);
                        let mut acc = base;
                        for s in 0..n {
                            let aj = alpha.comps[s].eval(x, order);
                            let mut scaled = aj.scale(c(-jet.gamma[s][nu][m], 0.0));
                            if order >= Order::D1 {
                                let av = alpha.comps[s].eval(x, Order::Val);
                                for t in 0..n {
                                    scaled.d[t] = scaled.d[t].add(
                                        &av.val.scale(c(-jet.dgamma[t][s][nu][m], 0.0)),
                                    );
                                }
                            }
                            acc = acc.add(&scaled);
                        }
                        acc
                    })
                })
                .collect()
        })
        .collect();
    TensorEndField::from_comps(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gammas;
    use crate::fields::random_matrix_field;
    use crate::geometry::catalog::by_id;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_bundle(geom_id: &str) -> Bundle {
        let geom = by_id(geom_id).unwrap();
        let rep = Arc::new(build_gammas(geom.n).unwrap());
        let fiber = Fiber::new(rep, 1, 1);
        Bundle::new(geom, fiber)
    }

    fn random_endform(
        bundle: &Bundle,
        degree: usize,
        total: Parity,
        rng: &mut ChaCha8Rng,
    ) -> EndForm {
        // values in the graded commutant with the parity demanded by the
        // total parity and the degree
        let vp = total.add(Parity::from_usize(degree));
        let n = bundle.n();
        let comps = combinations(n, degree)
            .iter()
            .map(|_| {
                let raw = random_matrix_field(n, bundle.fiber.dim_w, bundle.fiber.dim_w, rng);
                let fiber = bundle.fiber.clone();
                let projected = raw.map_linear(fiber.dim_w, fiber.dim_w, {
                    let fiber = fiber.clone();
                    move |m| fiber.project_w_parity(m, vp)
                });
                bundle.fiber.embed_endw_field(&projected, vp)
            })
            .collect();
        EndForm::from_comps(n, bundle.dim_e(), degree, total, comps)
    }

    /// Naive full-permutation wedge oracle for the graded product.
    fn wedge_oracle(
        a: &EndForm,
        b: &EndForm,
        target: &[usize],
        x: &Point,
    ) -> CMat {
        let k1 = a.degree;
        let k2 = b.degree;
        let k = k1 + k2;
        let koszul = a.value_parity().koszul(Parity::from_usize(k2));
        let mut acc = CMat::zeros(a.dim, a.dim);
        // sum over all permutations of the target tuple with signs
        let mut perm: Vec<usize> = (0..k).collect();
        let mut signs_and_perms = Vec::new();
        permutations(&mut perm, 0, &mut signs_and_perms);
        for (sign, p) in signs_and_perms {
            let i1: Vec<usize> = p[..k1].iter().map(|&i| target[i]).collect();
            let i2: Vec<usize> = p[k1..].iter().map(|&i| target[i]).collect();
            let va = a.eval_coeff(&i1, x, Order::Val).val;
            let vb = b.eval_coeff(&i2, x, Order::Val).val;
            acc.add_scaled(&va.mul(&vb), c(sign, 0.0));
        }
        let norm = (1..=k1).product::<usize>() * (1..=k2).product::<usize>();
        acc.scale(c(koszul / norm as f64, 0.0))
    }

    fn permutations(v: &mut Vec<usize>, start: usize, out: &mut Vec<(f64, Vec<usize>)>) {
        if start == v.len() {
            // parity of the permutation by inversion count
            let mut inv = 0;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    if v[i] > v[j] {
                        inv += 1;
                    }
                }
            }
            out.push((if inv % 2 == 0 { 1.0 } else { -1.0 }, v.clone()));
            return;
        }
        for i in start..v.len() {
            v.swap(start, i);
            permutations(v, start + 1, out);
            v.swap(start, i);
        }
    }

    #[test]
    fn wedge_identity_and_antisymmetry() {
        let bundle = test_bundle("flat-r2");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let alpha = random_endform(&bundle, 1, Parity::Odd, &mut rng);
        let id0 = EndForm::scalar(
            Parity::Even,
            MatField::constant(2, CMat::identity(bundle.dim_e())),
        );
        let w = id0.wedge(&alpha);
        let x = Point::new(&[0.2, 0.4]);
        for (i, comp) in w.comps.iter().enumerate() {
            assert!(comp.value(&x).sub(&alpha.comps[i].value(&x)).max_abs() < 1e-13);
        }

        // scalar-valued one-forms anticommute: coefficient of dx1 ^ dx2
        let m = CMat::identity(bundle.dim_e());
        let dx1 = EndForm::from_comps(
            2,
            bundle.dim_e(),
            1,
            Parity::Odd,
            vec![MatField::constant(2, m.clone()), MatField::zero(2, m.rows, m.rows)],
        );
        let dx2 = EndForm::from_comps(
            2,
            bundle.dim_e(),
            1,
            Parity::Odd,
            vec![MatField::zero(2, m.rows, m.rows), MatField::constant(2, m.clone())],
        );
        let w12 = dx1.wedge(&dx2);
        let w21 = dx2.wedge(&dx1);
        let v12 = w12.comps[0].value(&x);
        let v21 = w21.comps[0].value(&x);
        assert!(v12.add(&v21).max_abs() < 1e-13);
        assert!(v12.sub(&m).max_abs() < 1e-13);
    }

    #[test]
    fn wedge_matches_permutation_oracle() {
        let bundle = test_bundle("torus-t4");
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = Point::new(&[0.3, -0.2, 0.5, 0.1]);
        for (d1, d2, p1, p2) in [
            (2usize, 2usize, Parity::Odd, Parity::Odd),
            (1, 2, Parity::Even, Parity::Odd),
            (2, 1, Parity::Odd, Parity::Even),
            (0, 3, Parity::Odd, Parity::Even),
        ] {
            let a = random_endform(&bundle, d1, p1, &mut rng);
            let b = random_endform(&bundle, d2, p2, &mut rng);
            let w = a.wedge(&b);
            for target in combinations(4, d1 + d2) {
                let got = w.comp(&target).value(&x);
                let want = wedge_oracle(&a, &b, &target, &x);
                assert!(
                    got.sub(&want).max_abs() < 1e-11,
                    "wedge mismatch at {target:?} for degrees {d1},{d2}"
                );
            }
        }
    }

    /// Scalar-valued form of a given degree with random smooth coefficients.
    fn random_scalar_form(bundle: &Bundle, degree: usize, rng: &mut ChaCha8Rng) -> EndForm {
        let n = bundle.n();
        let dim = bundle.dim_e();
        let comps = combinations(n, degree)
            .iter()
            .map(|_| {
                let f = crate::fields::random_scalar_field(n, rng);
                MatField::constant(n, CMat::identity(dim)).scale_field(&f)
            })
            .collect();
        EndForm::from_comps(n, dim, degree, Parity::from_usize(degree), comps)
    }

    #[test]
    fn wedge_graded_symmetry_on_scalar_forms() {
        // commuting values: a ^ b = (-1)^{k l} b ^ a
        let bundle = test_bundle("torus-t4");
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let x = Point::new(&[0.2, -0.4, 0.7, 0.1]);
        for (k, l) in [(1usize, 1usize), (1, 2), (2, 2), (1, 3)] {
            let a = random_scalar_form(&bundle, k, &mut rng);
            let b = random_scalar_form(&bundle, l, &mut rng);
            let ab = a.wedge(&b);
            let ba = b.wedge(&a);
            let sign = if (k * l) % 2 == 0 { 1.0 } else { -1.0 };
            for (ci, _) in combinations(4, k + l).iter().enumerate() {
                let lhs = ab.comps[ci].value(&x);
                let rhs = ba.comps[ci].value(&x).scale(c(sign, 0.0));
                assert!(
                    lhs.sub(&rhs).max_abs() < 1e-12,
                    "graded symmetry failed at degrees ({k},{l})"
                );
            }
        }
    }

    #[test]
    fn contraction_is_an_odd_derivation() {
        // i_X(a ^ b) = (i_X a) ^ b + (-1)^k a ^ (i_X b) on scalar forms
        let bundle = test_bundle("torus-t4");
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let x = Point::new(&[0.3, 0.5, -0.2, 0.8]);
        let coeffs: Vec<C64> = (0..4)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        for (k, l) in [(1usize, 1usize), (1, 2), (2, 2)] {
            let a = random_scalar_form(&bundle, k, &mut rng);
            let b = random_scalar_form(&bundle, l, &mut rng);
            let lhs = a.wedge(&b).contract_vec(&coeffs).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = a
                .contract_vec(&coeffs)
                .unwrap()
                .wedge(&b)
                .add(&a.wedge(&b.contract_vec(&coeffs).unwrap()).scale(c(sign, 0.0)));
            for (ci, _) in combinations(4, k + l - 1).iter().enumerate() {
                assert!(
                    lhs.comps[ci]
                        .value(&x)
                        .sub(&rhs.comps[ci].value(&x))
                        .max_abs()
                        < 1e-12,
                    "Leibniz rule failed at degrees ({k},{l})"
                );
            }
        }
    }

    #[test]
    fn contraction_basics() {
        let bundle = test_bundle("torus-t4");
        let dim = bundle.dim_e();
        let m = CMat::identity(dim).scale(c(2.0, 1.0));
        // alpha = dx^0 ^ dx^1 (x) m
        let mut comps = vec![MatField::zero(4, dim, dim); combinations(4, 2).len()];
        comps[0] = MatField::constant(4, m.clone());
        let alpha = EndForm::from_comps(4, dim, 2, Parity::Odd, comps);
        let x = Point::new(&[0.0; 4]);

        let i0 = alpha.contract_coord(0).unwrap();
        // result should be dx^1 (x) m
        assert!(i0.comps[1].value(&x).sub(&m).max_abs() < 1e-13);
        assert!(i0.comps[0].value(&x).max_abs() < 1e-13);

        let i2 = alpha.contract_coord(2).unwrap();
        for comp in &i2.comps {
            assert!(comp.value(&x).max_abs() < 1e-13);
        }

        // degree-zero contraction is an error
        let zero = EndForm::scalar(Parity::Even, MatField::constant(4, m));
        assert!(zero.contract_coord(0).is_err());
    }

    #[test]
    fn double_contraction_vanishes() {
        let bundle = test_bundle("torus-t4");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = random_endform(&bundle, 3, Parity::Odd, &mut rng);
        let coeffs: Vec<C64> = (0..4)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let once = alpha.contract_vec(&coeffs).unwrap();
        let twice = once.contract_vec(&coeffs).unwrap();
        let x = Point::new(&[0.1, 0.2, -0.3, 0.4]);
        for comp in &twice.comps {
            assert!(comp.value(&x).max_abs() < 1e-12);
        }
    }

    #[test]
    fn ev_g_examples_and_loop_oracle() {
        let bundle = test_bundle("sphere-s2");
        let dim = bundle.dim_e();
        let x = Point::new(&[0.4, -0.7]);
        let jet = bundle.jet(&x);

        // t = g (x) Id contracts to n Id
        let t = TensorEndField::from_comps(
            (0..2)
                .map(|m| {
                    (0..2)
                        .map(|nu| {
                            let b = bundle.clone();
                            MatField::from_fn(2, dim, dim, move |x, o| {
                                let jet = b.jet(x);
                                MatJet::constant(2, o, CMat::identity(dim))
                                    .scale_jet(&b.g_jet(&jet, m, nu))
                            })
                        })
                        .collect()
                })
                .collect(),
        );
        let v = t.ev_g(&bundle).value(&x);
        assert!(v.sub(&CMat::identity(dim).scale(c(2.0, 0.0))).max_abs() < 1e-12);

        // random t evaluated against an explicit double loop
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = TensorEndField::from_comps(
            (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| random_matrix_field(2, dim, dim, &mut rng))
                        .collect()
                })
                .collect(),
        );
        let got = t.ev_g(&bundle).value(&x);
        let mut want = CMat::zeros(dim, dim);
        for m in 0..2 {
            for nu in 0..2 {
                want.add_scaled(&t.comps[m][nu].value(&x), c(jet.g_inv[m][nu], 0.0));
            }
        }
        assert!(got.sub(&want).max_abs() < 1e-13);

        // flat off-diagonal slot contracts to zero
        let flat = test_bundle("flat-r2");
        let mut comps: Vec<Vec<MatField>> =
            vec![vec![MatField::zero(2, dim, dim); 2], vec![MatField::zero(2, dim, dim); 2]];
        comps[0][1] = MatField::constant(2, CMat::identity(dim));
        let t = TensorEndField::from_comps(comps);
        assert!(t.ev_g(&flat).value(&Point::new(&[0.0, 0.0])).max_abs() < 1e-13);
    }

    #[test]
    fn dot_slots_and_symmetry() {
        let bundle = test_bundle("flat-r2");
        let dim = bundle.dim_e();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m1 = CMat::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), 0.0));
        let m2 = CMat::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), 0.0));
        let a = EndForm::from_comps(
            2,
            dim,
            1,
            Parity::Odd,
            vec![MatField::constant(2, m1.clone()), MatField::zero(2, dim, dim)],
        );
        let b = EndForm::from_comps(
            2,
            dim,
            1,
            Parity::Odd,
            vec![MatField::zero(2, dim, dim), MatField::constant(2, m2.clone())],
        );
        let t = dot(&a, &b);
        let x = Point::new(&[0.0, 0.0]);
        assert!(t.comps[0][1].value(&x).sub(&m1.mul(&m2)).max_abs() < 1e-13);
        assert!(t.comps[0][0].value(&x).max_abs() < 1e-13);
        assert!(t.comps[1][0].value(&x).max_abs() < 1e-13);
        assert!(t.comps[1][1].value(&x).max_abs() < 1e-13);
    }

    #[test]
    fn quantize_degree_zero_and_flat_blade() {
        let bundle = test_bundle("flat-r2");
        let dim = bundle.dim_e();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_matrix_field(2, dim, dim, &mut rng);
        let alpha = EndForm::scalar(Parity::Even, phi.clone());
        let q = quantize_form(&alpha, &bundle);
        let x = Point::new(&[0.3, 0.3]);
        assert!(q.value(&x).sub(&phi.value(&x)).max_abs() < 1e-13);

        // dx^0 ^ dx^1 (x) Id quantizes to gamma^0 gamma^1 on a flat chart
        let mut comps = vec![MatField::zero(2, dim, dim); 1];
        comps[0] = MatField::constant(2, CMat::identity(dim));
        let two = EndForm::from_comps(2, dim, 2, Parity::Even, comps);
        let q = quantize_form(&two, &bundle).value(&x);
        let want = bundle.fiber.gamma_e(0).mul(bundle.fiber.gamma_e(1));
        assert!(q.sub(&want).max_abs() < 1e-13);
    }

    #[test]
    fn quantize_linearity() {
        let bundle = test_bundle("sphere-s2");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_endform(&bundle, 2, Parity::Odd, &mut rng);
        let b = random_endform(&bundle, 2, Parity::Odd, &mut rng);
        let (sa, sb) = (c(1.3, -0.2), c(-0.4, 0.9));
        let lin = quantize_form(&a.scale(sa).add(&b.scale(sb)), &bundle);
        let split = quantize_form(&a, &bundle)
            .scale(sa)
            .add(&quantize_form(&b, &bundle).scale(sb));
        for x in bundle.geom.sample_points(5, 2) {
            assert!(lin.value(&x).sub(&split.value(&x)).max_abs() < 1e-12);
        }
    }

    /// Gram-Schmidt orthonormalization of the coordinate coframe against the
    /// inverse metric; independent route to the frame-conversion matrix.
    fn gram_schmidt_h(jet: &GeometryJet) -> Vec<Vec<f64>> {
        let n = jet.n;
        // rows: expansion of the orthonormal covectors in dx^mu
        let mut e_rows: Vec<Vec<f64>> = Vec::new();
        for a in 0..n {
            let mut v = vec![0.0; n];
            v[a] = 1.0;
            for prev in &e_rows {
                let mut ip = 0.0;
                for m in 0..n {
                    for nu in 0..n {
                        ip += v[m] * prev[nu] * jet.g_inv[m][nu];
                    }
                }
                for m in 0..n {
                    v[m] -= ip * prev[m];
                }
            }
            let mut norm = 0.0;
            for m in 0..n {
                for nu in 0..n {
                    norm += v[m] * v[nu] * jet.g_inv[m][nu];
                }
            }
            let norm = norm.sqrt();
            for comp in v.iter_mut() {
                *comp /= norm;
            }
            e_rows.push(v);
        }
        // e_rows[a][mu] expands e^a in dx^mu; the inverse expansion
        // dx^m = h^m_a e^a means h = (e_rows)^{-T}
        let mut hh = vec![vec![0.0; n]; n];
        for m in 0..n {
            // solve (e_rows)^T y = unit_m, i.e. sum_a e_rows[a][mu] y[a] = delta_{mu m}
            // since e_rows is lower triangular in (a, mu), its transpose is upper
            let mut y = vec![0.0; n];
            for a in (0..n).rev() {
                let mut s = if a == m { 1.0 } else { 0.0 };
                for b in a + 1..n {
                    s -= e_rows[b][a] * y[b];
                }
                y[a] = s / e_rows[a][a];
            }
            for a in 0..n {
                hh[m][a] = y[a];
            }
        }
        hh
    }

    #[test]
    fn quantize_frame_paths_agree() {
        // vielbein (triangular square root) path vs Gram-Schmidt path
        for id in ["sphere-s2", "perturbed-r4"] {
            let bundle = test_bundle(id);
            let n = bundle.n();
            for x in bundle.geom.sample_points(6, 3) {
                let jet = bundle.jet(&x);
                let hh = gram_schmidt_h(&jet);
                for m in 0..n {
                    for a in 0..n {
                        assert!(
                            (hh[m][a] - jet.h[m][a]).abs() < 1e-9,
                            "frame conversion mismatch at ({m},{a}): {} vs {}",
                            hh[m][a],
                            jet.h[m][a]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn beta_hand_expansion_flat() {
        let bundle = test_bundle("flat-r2");
        let dim = bundle.dim_e();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = CMat::from_fn(2, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let w = bundle.fiber.project_w_parity(&w, Parity::Odd);
        let m = bundle.fiber.embed_endw(&w, Parity::Odd);
        // alpha = dx^0 ^ dx^1 (x) m, total odd
        let comps = vec![MatField::constant(2, m.clone())];
        let alpha = EndForm::from_comps(2, dim, 2, Parity::Odd, comps);
        let sum = FormSum::from_forms(vec![alpha]);
        let b = beta(&sum, &bundle);
        let x = Point::new(&[0.5, -0.5]);
        // by hand: beta = dx^0 (x) (gamma^1 m) - dx^1 (x) (gamma^0 m)
        let want0 = bundle.fiber.gamma_e(1).mul(&m);
        let want1 = bundle.fiber.gamma_e(0).mul(&m).neg();
        assert!(b.comps[0].value(&x).sub(&want0).max_abs() < 1e-12);
        assert!(b.comps[1].value(&x).sub(&want1).max_abs() < 1e-12);

        // degree-0 input has vanishing beta
        let phi = EndForm::scalar(Parity::Odd, MatField::constant(2, m));
        let b0 = beta(&FormSum::from_forms(vec![phi]), &bundle);
        assert!(b0.comps[0].value(&x).max_abs() < 1e-13);
        assert!(b0.comps[1].value(&x).max_abs() < 1e-13);
    }
}
