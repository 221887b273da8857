//! Differential operators of order at most two on sections of E, the Dirac
//! operators determined by superconnections, and the assembled right-hand
//! sides of the decomposition identities. Operator equality is checked
//! weakly: both sides applied to seeded smooth test sections at sampled
//! points, with the pointwise C2 seminorm of the section in the denominator.

use crate::fields::{random_matrix_field, MatField, MatJet, Order};
use crate::forms::{
    beta, dot, ext_cov_deriv, nabla_one_form, quantize_form, quantize_sum, Bundle, EConnection,
};
use crate::linalg::{c, CMat, Parity};
use crate::superconn::{associated_connection, cdiff, varpi, Superconnection};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded smooth probe section of E, reproducible from its seed.
#[derive(Clone)]
pub struct TestSection {
    pub seed: u64,
    pub field: MatField,
}

impl TestSection {
    pub fn random(bundle: &Bundle, seed: u64) -> TestSection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(29));
        let field = random_matrix_field(bundle.n(), bundle.dim_e(), 1, &mut rng);
        TestSection { seed, field }
    }

    /// A section with definite parity under the total grading involution.
    pub fn random_parity(bundle: &Bundle, seed: u64, parity: Parity) -> TestSection {
        let base = TestSection::random(bundle, seed);
        let tau = bundle.fiber.tau_e.clone();
        let dim = bundle.dim_e();
        let field = base.field.map_linear(dim, 1, move |v| {
            let proj = tau.mul(v);
            match parity {
                Parity::Even => v.add(&proj).scale(c(0.5, 0.0)),
                Parity::Odd => v.sub(&proj).scale(c(0.5, 0.0)),
            }
        });
        TestSection { seed, field }
    }

    pub fn jet(&self, x: &crate::geometry::Point) -> MatJet {
        self.field.eval(x, Order::D2)
    }
}

/// Pointwise C2 seminorm of a section jet: value plus first plus second
/// derivative norms.
pub fn c2_seminorm(jet: &MatJet) -> f64 {
    let mut s = jet.val.fro_norm();
    for d in &jet.d {
        s += d.fro_norm();
    }
    for h in &jet.h {
        s += h.fro_norm();
    }
    s
}

/// Coefficient values of an operator at a point.
pub struct CoeffVals {
    pub a: Option<Vec<Vec<CMat>>>,
    pub b: Vec<CMat>,
    pub c: CMat,
}

/// Differential operator a^{mn} d_m d_n + b^m d_m + c0 with matrix
/// coefficient fields; a is symmetric and absent for first-order operators.
#[derive(Clone)]
pub struct DiffOp2 {
    pub n: usize,
    pub dim: usize,
    pub a: Option<Vec<Vec<MatField>>>,
    pub b: Vec<MatField>,
    pub c0: MatField,
}

impl DiffOp2 {
    pub fn first_order(b: Vec<MatField>, c0: MatField) -> DiffOp2 {
        let n = b.len();
        let dim = c0.rows;
        DiffOp2 {
            n,
            dim,
            a: None,
            b,
            c0,
        }
    }

    pub fn zero_order(c0: MatField, n: usize) -> DiffOp2 {
        let dim = c0.rows;
        DiffOp2 {
            n,
            dim,
            a: None,
            b: vec![MatField::zero(n, dim, dim); n],
            c0,
        }
    }

    pub fn is_first_order(&self) -> bool {
        self.a.is_none()
    }

    /// Add an endomorphism field to the zero-order coefficient.
    pub fn plus_endo(&self, f: &MatField) -> DiffOp2 {
        DiffOp2 {
            n: self.n,
            dim: self.dim,
            a: self.a.clone(),
            b: self.b.clone(),
            c0: self.c0.add(f),
        }
    }

    pub fn eval_coeffs(&self, x: &crate::geometry::Point) -> CoeffVals {
        let a = self.a.as_ref().map(|rows| {
            rows.iter()
                .map(|r| r.iter().map(|f| f.value(x)).collect())
                .collect()
        });
        let b = self.b.iter().map(|f| f.value(x)).collect();
        CoeffVals {
            a,
            b,
            c: self.c0.value(x),
        }
    }

    /// Apply coefficient values to a section 2-jet.
    pub fn apply(coeffs: &CoeffVals, sjet: &MatJet) -> CMat {
        let n = sjet.n;
        let mut out = coeffs.c.mul(&sjet.val);
        for mu in 0..n {
            out = out.add(&coeffs.b[mu].mul(&sjet.d[mu]));
        }
        if let Some(a) = &coeffs.a {
            for mu in 0..n {
                for nu in 0..n {
                    out = out.add(&a[mu][nu].mul(sjet.hess(mu, nu)));
                }
            }
        }
        out
    }

    /// Composite of two first-order operators, with coefficients obtained by
    /// the product rule.
    pub fn compose(p: &DiffOp2, q: &DiffOp2) -> Result<DiffOp2> {
        if !p.is_first_order() || !q.is_first_order() {
            return Err(Error::Evaluation(
                "operator composition overflows order two".into(),
            ));
        }
        let n = p.n;
        let mut a: Vec<Vec<MatField>> = Vec::new();
        for mu in 0..n {
            let mut row = Vec::new();
            for nu in 0..n {
                let sym = p.b[mu]
                    .mul(&q.b[nu])
                    .add(&p.b[nu].mul(&q.b[mu]))
                    .scale(c(0.5, 0.0));
                row.push(sym);
            }
            a.push(row);
        }
        let b = (0..n)
            .map(|nu| {
                let mut acc = p.b[nu].mul(&q.c0).add(&p.c0.mul(&q.b[nu]));
                for mu in 0..n {
                    acc = acc.add(&p.b[mu].mul(&q.b[nu].partial(mu)));
                }
                acc
            })
            .collect();
        let mut c0 = p.c0.mul(&q.c0);
        for mu in 0..n {
            c0 = c0.add(&p.b[mu].mul(&q.c0.partial(mu)));
        }
        Ok(DiffOp2 {
            n,
            dim: p.dim,
            a: Some(a),
            b,
            c0,
        })
    }

    /// Apply a first-order operator to a section-like field, producing a new
    /// field. The independent path for the composition oracle.
    pub fn apply_to_field(&self, s: &MatField) -> MatField {
        assert!(self.is_first_order());
        let mut acc = self.c0.mul(s);
        for mu in 0..self.n {
            acc = acc.add(&self.b[mu].mul(&s.partial(mu)));
        }
        acc
    }
}

/// Max over sampled sections and points of
/// |(p - q) s|(x) / (1 + |s|_{C2,x}).
pub fn weak_residual(
    p: &DiffOp2,
    q: &DiffOp2,
    sections: &[TestSection],
    points: &[crate::geometry::Point],
    parallel: bool,
) -> f64 {
    crate::par::map_max(points.len(), parallel, |pi| {
        let x = &points[pi];
        let cp = p.eval_coeffs(x);
        let cq = q.eval_coeffs(x);
        let mut worst = 0.0f64;
        for s in sections {
            let sj = s.jet(x);
            let diff = DiffOp2::apply(&cp, &sj).sub(&DiffOp2::apply(&cq, &sj));
            let denom = 1.0 + c2_seminorm(&sj);
            worst = worst.max(diff.fro_norm() / denom);
        }
        worst
    })
    .max(0.0)
}

/// Max pointwise difference of the coefficient fields of two operators.
pub fn coefficient_residual(p: &DiffOp2, q: &DiffOp2, points: &[crate::geometry::Point]) -> f64 {
    let mut worst = 0.0f64;
    for x in points {
        let cp = p.eval_coeffs(x);
        let cq = q.eval_coeffs(x);
        for mu in 0..p.n {
            worst = worst.max(cp.b[mu].sub(&cq.b[mu]).max_abs());
        }
        worst = worst.max(cp.c.sub(&cq.c).max_abs());
        match (&cp.a, &cq.a) {
            (Some(pa), Some(qa)) => {
                for mu in 0..p.n {
                    for nu in 0..p.n {
                        worst = worst.max(pa[mu][nu].sub(&qa[mu][nu]).max_abs());
                    }
                }
            }
            (None, None) => {}
            (Some(pa), None) => {
                for row in pa {
                    for m in row {
                        worst = worst.max(m.max_abs());
                    }
                }
            }
            (None, Some(qa)) => {
                for row in qa {
                    for m in row {
                        worst = worst.max(m.max_abs());
                    }
                }
            }
        }
    }
    worst
}

/// A value-only endomorphism field built from pointwise geometry data.
fn geom_endo_field(
    bundle: &Bundle,
    f: impl Fn(&crate::geometry::GeometryJet) -> f64 + Send + Sync + 'static,
) -> MatField {
    let b = bundle.clone();
    let (n, dim) = (bundle.n(), bundle.dim_e());
    MatField::from_fn(n, dim, dim, move |x, order| {
        assert!(
            order == Order::Val,
            "derivative order exceeded: geometry scalar fields are value-only"
        );
        let jet = b.jet(x);
        MatJet::constant(n, order, CMat::identity(dim).scale(c(f(&jet), 0.0)))
    })
}

/// The Dirac operator of a superconnection:
/// D s = c(dx^m)(d_m + omega_m) s + c(Abar) s.
pub fn dirac(a: &Superconnection) -> DiffOp2 {
    let bundle = &a.bundle;
    let conn = a.clifford_connection();
    let mut op = dirac_from_connection(&conn, bundle);
    if !a.abar.terms.is_empty() {
        op = op.plus_endo(&quantize_sum(&a.abar, bundle));
    }
    op
}

/// The Dirac operator of an arbitrary connection on E.
pub fn dirac_from_connection(conn: &EConnection, bundle: &Bundle) -> DiffOp2 {
    let n = bundle.n();
    let b: Vec<MatField> = (0..n).map(|mu| bundle.c_dx(mu).cached()).collect();
    let mut c0 = MatField::zero(n, bundle.dim_e(), bundle.dim_e());
    for mu in 0..n {
        c0 = c0.add(&bundle.c_dx(mu).mul(&conn.omega[mu]));
    }
    DiffOp2::first_order(b, c0.cached())
}

/// Connection laplacian -g^{mn}(nabla_m nabla_n - Gamma^s_{mn} nabla_s).
pub fn connection_laplacian(conn: &EConnection, bundle: &Bundle) -> DiffOp2 {
    let n = bundle.n();
    let dim = bundle.dim_e();
    let a: Vec<Vec<MatField>> = (0..n)
        .map(|mu| {
            (0..n)
                .map(|nu| {
                    let b = bundle.clone();
                    MatField::from_fn(n, dim, dim, move |x, order| {
                        let jet = b.jet(x);
                        MatJet::constant(n, order, CMat::identity(dim))
                            .scale_jet(&b.g_inv_jet(&jet, mu, nu).scale(c(-1.0, 0.0)))
                    })
                })
                .collect()
        })
        .collect();
    let b_coeff: Vec<MatField> = (0..n)
        .map(|sigma| {
            let b = bundle.clone();
            let conn = conn.clone();
            MatField::from_fn(n, dim, dim, move |x, order| {
                assert!(
                    order == Order::Val,
                    "derivative order exceeded: laplacian coefficients are value-only"
                );
                let jet = b.jet(x);
                let mut acc = CMat::zeros(dim, dim);
                for nu in 0..n {
                    acc.add_scaled(&conn.omega[nu].value(x), c(-2.0 * jet.g_inv[sigma][nu], 0.0));
                }
                let mut trace_gamma = 0.0;
                for mu in 0..n {
                    for nu in 0..n {
                        trace_gamma += jet.g_inv[mu][nu] * jet.gamma[sigma][mu][nu];
                    }
                }
                let id = CMat::identity(dim).scale(c(trace_gamma, 0.0));
                MatJet::constant(n, order, acc.add(&id))
            })
        })
        .collect();
    let c0 = {
        let b = bundle.clone();
        let conn = conn.clone();
        MatField::from_fn(n, dim, dim, move |x, order| {
            assert!(
                order == Order::Val,
                "derivative order exceeded: laplacian coefficients are value-only"
            );
            let jet = b.jet(x);
            let omega_jets: Vec<MatJet> = (0..n)
                .map(|m| conn.omega[m].eval(x, Order::D1))
                .collect();
            let mut acc = CMat::zeros(dim, dim);
            for mu in 0..n {
                for nu in 0..n {
                    let mut term = omega_jets[nu].d[mu]
                        .add(&omega_jets[mu].val.mul(&omega_jets[nu].val));
                    for s in 0..n {
                        term.add_scaled(&omega_jets[s].val, c(-jet.gamma[s][mu][nu], 0.0));
                    }
                    acc.add_scaled(&term, c(-jet.g_inv[mu][nu], 0.0));
                }
            }
            MatJet::constant(n, order, acc)
        })
    };
    DiffOp2 {
        n,
        dim,
        a: Some(a),
        b: b_coeff,
        c0,
    }
}

/// Right-hand side of the classical decomposition for a Clifford connection:
/// laplacian + r/4 + c(twisting curvature), the twisting curvature taken
/// directly from the W-connection.
pub fn rhs_classical(a: &Superconnection) -> Result<DiffOp2> {
    if !a.abar.terms.is_empty() {
        return Err(Error::Evaluation(
            "the classical right-hand side requires a vanishing connection-free part".into(),
        ));
    }
    let bundle = &a.bundle;
    let conn = a.clifford_connection();
    let lap = connection_laplacian(&conn, bundle);
    let r4 = geom_endo_field(bundle, |jet| jet.r_m / 4.0);
    let twist = quantize_form(&a.twisting.curvature_w(), bundle);
    Ok(lap.plus_endo(&r4).plus_endo(&twist))
}

/// Right-hand side of the decomposition for an arbitrary connection:
/// laplacian of the corrected connection, plus the quantized curvature, plus
/// the deviation terms.
pub fn rhs_connection(conn: &EConnection, bundle: &Bundle) -> DiffOp2 {
    let w = varpi(conn, bundle);
    let hat = conn.shifted(&w);
    let lap = connection_laplacian(&hat, bundle);
    let curv = quantize_form(&conn.curvature(), bundle);
    let grad_term = nabla_one_form(&w, conn, &bundle.geom).ev_g(bundle);
    let square_term = dot(&w, &w).ev_g(bundle);
    lap.plus_endo(&curv)
        .plus_endo(&grad_term)
        .plus_endo(&square_term)
}

/// Right-hand side of the supersymmetric decomposition:
/// laplacian of the connection corrected by beta(Abar), plus r/4, plus the
/// quantized twisting supercurvature, plus c(Abar)^2 - c(Abar^2), plus
/// ev_g(beta . beta).
pub fn rhs_super(a: &Superconnection) -> DiffOp2 {
    let bundle = &a.bundle;
    let conn = a.clifford_connection();
    let r4 = geom_endo_field(bundle, |jet| jet.r_m / 4.0);
    let twist = quantize_sum(&crate::superconn::twisting_supercurvature(a), bundle);
    if a.abar.terms.is_empty() {
        let lap = connection_laplacian(&conn, bundle);
        return lap.plus_endo(&r4).plus_endo(&twist);
    }
    let bet = beta(&a.abar, bundle);
    let hat = conn.shifted(&bet);
    let lap = connection_laplacian(&hat, bundle);
    let p_alg = cdiff(a);
    let p_beta = dot(&bet, &bet).ev_g(bundle);
    lap.plus_endo(&r4)
        .plus_endo(&twist)
        .plus_endo(&p_alg)
        .plus_endo(&p_beta)
}

/// The endomorphism collecting the purely algebraic terms of the
/// supersymmetric decomposition, computed through the assembly pipeline.
pub fn pipeline_p(a: &Superconnection) -> MatField {
    let bundle = &a.bundle;
    if a.abar.terms.is_empty() {
        return MatField::zero(bundle.n(), bundle.dim_e(), bundle.dim_e());
    }
    let bet = beta(&a.abar, bundle);
    cdiff(a).add(&dot(&bet, &bet).ev_g(bundle))
}

/// Closed form of that endomorphism for a two-form-only connection-free part
/// A_[2] = 1/2 dx^i ^ dx^j (x) w_{ij} with odd values in the graded
/// commutant:
/// P = 1/2 g^{ij} g^{kl} w_{ik} w_{jl}.
/// The two-form terms of the quantized square cancel against the beta-square
/// contraction once the values anticommute with the Clifford action, leaving
/// only the double metric trace.
pub fn getzler_p(a: &Superconnection) -> Result<MatField> {
    for t in &a.abar.terms {
        if t.degree != 0 && t.degree != 2 {
            return Err(Error::Evaluation(format!(
                "the closed form requires components of degree 0 and 2 only, found degree {}",
                t.degree
            )));
        }
    }
    let a2 = match a.abar.degree_part(2) {
        Some(f) => f.clone(),
        None => {
            return Ok(MatField::zero(
                a.bundle.n(),
                a.bundle.dim_e(),
                a.bundle.dim_e(),
            ))
        }
    };
    let bundle = a.bundle.clone();
    let (n, dim) = (bundle.n(), bundle.dim_e());
    Ok(MatField::from_fn(n, dim, dim, move |x, order| {
        assert!(
            order == Order::Val,
            "derivative order exceeded: the closed-form endomorphism is value-only"
        );
        let jet = bundle.jet(x);
        // full antisymmetric coefficient array
        let mut w = vec![vec![CMat::zeros(dim, dim); n]; n];
        for (ci, set) in crate::forms::combinations(n, 2).iter().enumerate() {
            let v = a2.comps[ci].value(x);
            w[set[0]][set[1]] = v.clone();
            w[set[1]][set[0]] = v.neg();
        }
        let mut acc = CMat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                let gij = jet.g_inv[i][j];
                if gij == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        let ww = w[i][k].mul(&w[j][l]);
                        acc.add_scaled(&ww, c(0.5 * gij * jet.g_inv[k][l], 0.0));
                    }
                }
            }
        }
        MatJet::constant(n, order, acc)
    }))
}

/// Assembly of the simple-type decomposition for A = nabla + Phi:
/// laplacian + r/4 + c(twisting curvature) + c(d Phi) + Phi^2.
pub fn rhs_simple_type(a: &Superconnection) -> Result<DiffOp2> {
    let phi = match a.abar.degree_part(0) {
        Some(f) => f.clone(),
        None => {
            return Err(Error::Evaluation(
                "the simple-type right-hand side requires a degree-zero part".into(),
            ))
        }
    };
    for t in &a.abar.terms {
        if t.degree != 0 {
            return Err(Error::Evaluation(
                "the simple-type right-hand side allows a degree-zero part only".into(),
            ));
        }
    }
    let bundle = &a.bundle;
    let conn = a.clifford_connection();
    let lap = connection_laplacian(&conn, bundle);
    let r4 = geom_endo_field(bundle, |jet| jet.r_m / 4.0);
    let twist = quantize_form(&a.twisting.curvature_w(), bundle);
    let dphi = quantize_form(&ext_cov_deriv(&phi, &conn), bundle);
    let phi2 = phi.comps[0].mul(&phi.comps[0]);
    Ok(lap
        .plus_endo(&r4)
        .plus_endo(&twist)
        .plus_endo(&dphi)
        .plus_endo(&phi2))
}

/// Dirac operator of the associated connection; coincides with the Dirac
/// operator of the superconnection itself.
pub fn dirac_associated(a: &Superconnection) -> DiffOp2 {
    dirac_from_connection(&associated_connection(a), &a.bundle)
}

/// The square of the Dirac operator as an order-two operator.
pub fn dirac_squared(a: &Superconnection) -> DiffOp2 {
    let d = dirac(a);
    DiffOp2::compose(&d, &d).expect("Dirac operators are first order")
}
