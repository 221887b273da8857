//! Superconnections on E = S (x) W. The connection part is always the
//! Clifford connection induced by the spin connection and a grading-
//! preserving connection on W; the connection-free part is an inhomogeneous
//! odd form with values in the graded commutant of the Clifford action.
//! This module assembles the curvature expansion, the difference between
//! quantizing-then-squaring and squaring-then-quantizing, the associated
//! ordinary connection, the deviation one-form of an arbitrary connection,
//! and the twisting part of the supercurvature.

use crate::fields::{random_matrix_field, MatField, MatJet, Order};
use crate::forms::{
    ext_cov_deriv_sum, g_projection, quantize_sum, Bundle, EConnection, EndForm, FormSum,
};
use crate::geometry::GeometryJet;
use crate::linalg::{c, Parity, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// twisting bundle

/// Grading-preserving connection data on the twisting space W.
#[derive(Clone)]
pub struct Twisting {
    pub bundle: Bundle,
    pub omega_w: Vec<MatField>,
    pub desc: String,
}

impl Twisting {
    pub fn flat(bundle: &Bundle) -> Twisting {
        let n = bundle.n();
        let dw = bundle.fiber.dim_w;
        Twisting {
            bundle: bundle.clone(),
            omega_w: (0..n).map(|_| MatField::zero(n, dw, dw)).collect(),
            desc: "flat".into(),
        }
    }

    /// Seeded random smooth connection on W, projected onto the grading-even
    /// part so the connection respects the splitting of W.
    pub fn random(bundle: &Bundle, seed: u64) -> Twisting {
        let n = bundle.n();
        let dw = bundle.fiber.dim_w;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x51ed_2701).wrapping_add(3));
        let omega_w = (0..n)
            .map(|_| {
                let raw = random_matrix_field(n, dw, dw, &mut rng);
                let fiber = bundle.fiber.clone();
                raw.map_linear(dw, dw, move |m| fiber.project_w_parity(m, Parity::Even))
            })
            .collect();
        Twisting {
            bundle: bundle.clone(),
            omega_w,
            desc: format!("random-seeded:{seed}"),
        }
    }

    /// Curvature of the W-connection, embedded into End E.
    pub fn curvature_w(&self) -> EndForm {
        let n = self.bundle.n();
        let comps = crate::forms::combinations(n, 2)
            .into_iter()
            .map(|s| {
                let (m, nu) = (s[0], s[1]);
                let rw = self.omega_w[nu]
                    .partial(m)
                    .sub(&self.omega_w[m].partial(nu))
                    .add(&self.omega_w[m].commutator(&self.omega_w[nu]));
                self.bundle.fiber.embed_endw_field(&rw, Parity::Even)
            })
            .collect();
        EndForm::from_comps(n, self.bundle.dim_e(), 2, Parity::Even, comps)
    }
}

// ---------------------------------------------------------------------------
// superconnection

/// The connection-free-part families exercised by the suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    None,
    A0,
    A2,
    FullMix,
}

impl Family {
    pub fn id(self) -> &'static str {
        match self {
            Family::None => "none",
            Family::A0 => "a0",
            Family::A2 => "a2",
            Family::FullMix => "full-mix",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "none" => Some(Family::None),
            "a0" => Some(Family::A0),
            "a2" => Some(Family::A2),
            "full-mix" => Some(Family::FullMix),
            _ => None,
        }
    }
}

/// A Clifford superconnection: the Clifford connection determined by the spin
/// connection and the W-connection, plus a total-odd connection-free part
/// with values supercommuting with the Clifford action.
#[derive(Clone)]
pub struct Superconnection {
    pub bundle: Bundle,
    pub twisting: Twisting,
    pub abar: FormSum,
}

/// Random degree-k component with values in the graded commutant; total
/// parity odd, so the value parity is opposite to the degree parity.
pub fn random_commutant_form(bundle: &Bundle, degree: usize, rng: &mut ChaCha8Rng) -> EndForm {
    let vp = Parity::Odd.add(Parity::from_usize(degree));
    let n = bundle.n();
    let dw = bundle.fiber.dim_w;
    let comps = crate::forms::combinations(n, degree)
        .iter()
        .map(|_| {
            let raw = random_matrix_field(n, dw, dw, rng);
            let fiber = bundle.fiber.clone();
            let projected = raw.map_linear(dw, dw, {
                let fiber = fiber.clone();
                move |m| fiber.project_w_parity(m, vp)
            });
            bundle.fiber.embed_endw_field(&projected, vp)
        })
        .collect();
    EndForm::from_comps(n, bundle.dim_e(), degree, Parity::Odd, comps)
}

impl Superconnection {
    pub fn new(bundle: Bundle, twisting: Twisting, abar: FormSum) -> Superconnection {
        for t in &abar.terms {
            assert_eq!(
                t.parity,
                Parity::Odd,
                "connection-free components must be total-odd"
            );
        }
        Superconnection {
            bundle,
            twisting,
            abar,
        }
    }

    /// Seeded connection-free part for one of the suite families.
    pub fn with_family(
        bundle: &Bundle,
        twisting: Twisting,
        family: Family,
        seed: u64,
    ) -> Superconnection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0xa076_1d64).wrapping_add(11));
        let degrees: Vec<usize> = match family {
            Family::None => vec![],
            Family::A0 => vec![0],
            Family::A2 => vec![2],
            Family::FullMix => vec![0, 2, 3, 4],
        };
        let mut abar = FormSum::zero(bundle.n(), bundle.dim_e());
        for d in degrees {
            if d > bundle.n() {
                continue;
            }
            abar = abar.add_form(&random_commutant_form(bundle, d, &mut rng));
        }
        Superconnection::new(bundle.clone(), twisting, abar)
    }

    /// Coefficients of the Clifford connection on E: spin part tensored with
    /// the identity plus the W-connection.
    pub fn clifford_connection(&self) -> EConnection {
        clifford_connection(&self.bundle, &self.twisting)
    }

    /// Curvature of the connection part.
    pub fn curvature_e(&self) -> EndForm {
        self.clifford_connection().curvature()
    }
}

pub fn clifford_connection(bundle: &Bundle, twisting: &Twisting) -> EConnection {
    let n = bundle.n();
    let omega = (0..n)
        .map(|mu| {
            let spin = bundle.spin_omega(mu);
            let w = bundle
                .fiber
                .embed_endw_field(&twisting.omega_w[mu], Parity::Even);
            spin.add(&w).cached()
        })
        .collect();
    EConnection::new(omega)
}

/// Supercurvature by the three-term split: curvature of the connection part,
/// exterior covariant derivative of the connection-free part, and its square.
pub fn supercurvature(a: &Superconnection) -> FormSum {
    let conn = a.clifford_connection();
    let r = a.curvature_e();
    let dabar = ext_cov_deriv_sum(&a.abar, &conn);
    let abar2 = a.abar.square();
    FormSum::from_forms(vec![r]).add(&dabar).add(&abar2)
}

/// Supercommutator in the graded form algebra.
pub fn form_supercommutator(a: &EndForm, b: &EndForm) -> FormSum {
    let sign = a.parity.koszul(b.parity);
    let ab = a.wedge(b);
    let ba = b.wedge(a).scale(c(-sign, 0.0));
    let mut out = FormSum::zero(a.n, a.dim);
    if !ab.is_vacuous() {
        out = out.add_form(&ab);
    }
    if !ba.is_vacuous() {
        out = out.add_form(&ba);
    }
    out
}

/// c(Abar)^2 - c(Abar^2): the failure of the quantization map to be an
/// algebra homomorphism on the connection-free part. Independent of the
/// degree-zero component.
pub fn cdiff(a: &Superconnection) -> MatField {
    let q = quantize_sum(&a.abar, &a.bundle);
    let q2 = q.mul(&q);
    let qsq = quantize_sum(&a.abar.square(), &a.bundle);
    q2.sub(&qsq)
}

/// The associated ordinary connection: the connection part shifted by the
/// projection of the connection-free part onto one-forms.
pub fn associated_connection(a: &Superconnection) -> EConnection {
    let conn = a.clifford_connection();
    if a.abar.terms.is_empty() {
        return conn;
    }
    let shift = g_projection(&a.abar, &a.bundle);
    conn.shifted(&shift)
}

/// Deviation of an arbitrary connection from being a Clifford connection:
/// varpi_n = -1/2 g_{nk} dx^n (x) c(dx^m) ([nabla_m, c(dx^k)] + c(dx^s) Gamma^k_{sm}).
/// Vanishes exactly on Clifford connections.
pub fn varpi(conn: &EConnection, bundle: &Bundle) -> EndForm {
    let n = bundle.n();
    let dim = bundle.dim_e();
    // deviation field D^k_m = d_m c(dx^k) + [omega_m, c(dx^k)] + c(dx^s) Gamma^k_{sm}
    let dev: Vec<Vec<MatField>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|m| {
                    let base = bundle
                        .c_dx(k)
                        .partial(m)
                        .add(&conn.omega[m].commutator(&bundle.c_dx(k)));
                    let b = bundle.clone();
                    let corr = MatField::from_fn(n, dim, dim, move |x, order| {
                        assert!(
                            order <= Order::D1,
                            "derivative order exceeded: second derivatives of the deviation one-form"
                        );
                        let jet = b.jet(x);
                        let mut acc = MatJet::zeros(n, order, dim, dim);
                        for s in 0..n {
                            acc = acc.add(&scale_by_christoffel(
                                &b.c_dx(s).eval(x, order),
                                &jet,
                                k,
                                s,
                                m,
                            ));
                        }
                        acc
                    });
                    base.add(&corr)
                })
                .collect()
        })
        .collect();
    // inner_k = c(dx^m) D^k_m is independent of the form index
    let inner: Vec<MatField> = (0..n)
        .map(|k| {
            let b = bundle.clone();
            let dev_k = dev[k].clone();
            MatField::from_fn(n, dim, dim, move |x, order| {
                let mut acc = MatJet::zeros(n, order, dim, dim);
                for m in 0..n {
                    acc = acc.add(&b.c_dx(m).eval(x, order).mul(&dev_k[m].eval(x, order)));
                }
                acc
            })
            .cached()
        })
        .collect();
    let comps = (0..n)
        .map(|nu| {
            let b = bundle.clone();
            let inner = inner.clone();
            MatField::from_fn(n, dim, dim, move |x, order| {
                let jet = b.jet(x);
                let mut acc = MatJet::zeros(n, order, dim, dim);
                for k in 0..n {
                    let gj = b.g_jet(&jet, nu, k).scale(C64::new(-0.5, 0.0));
                    acc = acc.add(&inner[k].eval(x, order).scale_jet(&gj));
                }
                acc
            })
            .cached()
        })
        .collect();
    EndForm::from_comps(n, dim, 1, Parity::Odd, comps)
}

/// Multiply a matrix jet by Gamma^k_{sm}, tracking one derivative level.
fn scale_by_christoffel(f: &MatJet, jet: &GeometryJet, k: usize, s: usize, m: usize) -> MatJet {
    let mut out = f.scale(c(jet.gamma[k][s][m], 0.0));
    if f.order >= Order::D1 {
        for t in 0..f.n {
            out.d[t] = out.d[t].add(&f.val.scale(c(jet.dgamma[t][k][s][m], 0.0)));
        }
    }
    out
}

/// Twisting part of the supercurvature: F(A) minus the Clifford action of the
/// Riemann tensor.
pub fn twisting_supercurvature(a: &Superconnection) -> FormSum {
    let f = supercurvature(a);
    let cr = a.bundle.clifford_riemann();
    f.sub(&FormSum::from_forms(vec![cr]))
}

/// Random grading-preserving one-form used to build non-Clifford connections.
pub fn random_even_one_form(bundle: &Bundle, rng: &mut ChaCha8Rng) -> EndForm {
    let n = bundle.n();
    let de = bundle.dim_e();
    let comps = (0..n)
        .map(|_| {
            let raw = random_matrix_field(n, de, de, rng);
            let tau = bundle.fiber.tau_e.clone();
            raw.map_linear(de, de, move |m| {
                m.add(&tau.mul(m).mul(&tau)).scale(c(0.5, 0.0))
            })
        })
        .collect();
    EndForm::from_comps(n, de, 1, Parity::Odd, comps)
}

// ---------------------------------------------------------------------------
// E-valued forms: the operator-application oracle for the curvature split

/// An E-valued inhomogeneous form with smooth coefficients; the probe object
/// on which superconnections act as operators.
#[derive(Clone)]
pub struct FormSection {
    pub n: usize,
    pub dim: usize,
    /// comps[k] holds the degree-k components, one column field per
    /// increasing multi-index.
    pub comps: Vec<Vec<MatField>>,
}

impl FormSection {
    pub fn zero(n: usize, dim: usize) -> FormSection {
        let comps = (0..=n)
            .map(|k| vec![MatField::zero(n, dim, 1); crate::forms::combinations(n, k).len()])
            .collect();
        FormSection { n, dim, comps }
    }

    pub fn random(bundle: &Bundle, seed: u64) -> FormSection {
        let n = bundle.n();
        let dim = bundle.dim_e();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491).wrapping_add(77));
        let comps = (0..=n)
            .map(|k| {
                (0..crate::forms::combinations(n, k).len())
                    .map(|_| random_matrix_field(n, dim, 1, &mut rng))
                    .collect()
            })
            .collect();
        FormSection { n, dim, comps }
    }

    pub fn add(&self, other: &FormSection) -> FormSection {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.add(y)).collect())
            .collect();
        FormSection {
            n: self.n,
            dim: self.dim,
            comps,
        }
    }

    fn comp(&self, k: usize, sorted: &[usize]) -> &MatField {
        let idx = crate::forms::combinations(self.n, k)
            .iter()
            .position(|s| s == sorted)
            .expect("multi-index out of range");
        &self.comps[k][idx]
    }

    /// Left action of an endomorphism-valued form, with the Koszul sign for
    /// the value moving past the section's form factor.
    pub fn apply_endform(&self, alpha: &EndForm) -> FormSection {
        let n = self.n;
        let mut out = FormSection::zero(n, self.dim);
        if alpha.is_vacuous() {
            return out;
        }
        let ka = alpha.degree;
        let vp = alpha.value_parity();
        for ks in 0..=n {
            let kt = ka + ks;
            if kt > n {
                continue;
            }
            let koszul = vp.koszul(Parity::from_usize(ks));
            for (ti, target) in crate::forms::combinations(n, kt).iter().enumerate() {
                let mut parts: Vec<(f64, MatField, MatField)> = Vec::new();
                for pick in crate::forms::combinations(kt, ka) {
                    let s1: Vec<usize> = pick.iter().map(|&i| target[i]).collect();
                    let s2: Vec<usize> = (0..kt)
                        .filter(|i| !pick.contains(i))
                        .map(|i| target[i])
                        .collect();
                    let mut inv = 0usize;
                    for &a in &s1 {
                        for &b in &s2 {
                            if a > b {
                                inv += 1;
                            }
                        }
                    }
                    let sign = koszul * if inv % 2 == 0 { 1.0 } else { -1.0 };
                    parts.push((sign, alpha.comp(&s1).clone(), self.comp(ks, &s2).clone()));
                }
                let dim = self.dim;
                let term = MatField::from_fn(n, dim, 1, move |x, o| {
                    let mut acc = MatJet::zeros(n, o, dim, 1);
                    for (sign, a, s) in &parts {
                        acc = acc.add(&a.eval(x, o).mul(&s.eval(x, o)).scale(c(*sign, 0.0)));
                    }
                    acc
                });
                out.comps[kt][ti] = out.comps[kt][ti].add(&term);
            }
        }
        out
    }

    /// Exterior covariant derivative of the section.
    pub fn apply_conn(&self, conn: &EConnection) -> FormSection {
        let n = self.n;
        let mut out = FormSection::zero(n, self.dim);
        for ks in 0..n {
            let kt = ks + 1;
            for (ti, target) in crate::forms::combinations(n, kt).iter().enumerate() {
                let mut acc: Option<MatField> = None;
                for (pos, &i) in target.iter().enumerate() {
                    let rest: Vec<usize> = target.iter().copied().filter(|&r| r != i).collect();
                    let covariant = self
                        .comp(ks, &rest)
                        .partial(i)
                        .add(&conn.omega[i].mul(self.comp(ks, &rest)));
                    let term = if pos % 2 == 1 {
                        covariant.neg()
                    } else {
                        covariant
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
                out.comps[kt][ti] = acc.unwrap();
            }
        }
        out
    }

    /// Full superconnection action: exterior covariant derivative plus the
    /// connection-free part acting through the graded module structure.
    pub fn apply_superconnection(&self, a: &Superconnection) -> FormSection {
        let mut out = self.apply_conn(&a.clifford_connection());
        for t in &a.abar.terms {
            out = out.add(&self.apply_endform(t));
        }
        out
    }
}

/// Apply every term of a form sum to a section (a curvature acting as an
/// operator on E-valued forms).
pub fn apply_formsum_to_section(f: &FormSum, s: &FormSection) -> FormSection {
    let mut out = FormSection::zero(s.n, s.dim);
    for t in &f.terms {
        out = out.add(&s.apply_endform(t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gammas;
    use crate::forms::{beta, dot, ext_cov_deriv, nabla_one_form, quantize_form, Fiber};
    use crate::geometry::catalog::by_id;
    use crate::geometry::Point;
    use crate::linalg::CMat;
    use std::sync::Arc;

    fn bundle(id: &str) -> Bundle {
        let geom = by_id(id).unwrap();
        let rep = Arc::new(build_gammas(geom.n).unwrap());
        Bundle::new(geom, Fiber::new(rep, 1, 1))
    }

    fn points(b: &Bundle, count: usize, seed: u64) -> Vec<Point> {
        b.geom.sample_points(count, seed)
    }

    fn random_odd_sum(b: &Bundle, seed: u64) -> FormSum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = FormSum::zero(b.n(), b.dim_e());
        for d in 0..=b.n().min(3) {
            sum = sum.add_form(&random_commutant_form(b, d, &mut rng));
        }
        sum
    }

    #[test]
    fn canonical_one_form_quantizes_to_identity() {
        for id in ["flat-r2", "sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            let gamma = b.gamma_canonical();
            let q = quantize_form(&gamma, &b);
            for x in points(&b, 5, 1) {
                let v = q.value(&x);
                assert!(
                    v.sub(&CMat::identity(b.dim_e())).max_abs() < 1e-12,
                    "canonical one-form does not quantize to the identity on {id}"
                );
            }
        }
    }

    #[test]
    fn canonical_one_form_is_covariant_constant() {
        for id in ["sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            let gamma = b.gamma_canonical();
            let conn = clifford_connection(&b, &Twisting::flat(&b));
            let nab = nabla_one_form(&gamma, &conn, &b.geom);
            for x in points(&b, 5, 2) {
                for m in 0..b.n() {
                    for nu in 0..b.n() {
                        let v = nab.comps[m][nu].value(&x);
                        assert!(
                            v.max_abs() < 1e-8,
                            "nabla gamma != 0 on {id}: {}",
                            v.max_abs()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn g_projection_properties() {
        for id in ["sphere-s2", "torus-t4"] {
            let b = bundle(id);
            let alpha = random_odd_sum(&b, 3);
            let proj = g_projection(&alpha, &b);
            let q_alpha = quantize_sum(&alpha, &b);
            let q_proj = quantize_form(&proj, &b);
            let proj2 = g_projection(&FormSum::from_forms(vec![proj.clone()]), &b);
            for x in points(&b, 5, 4) {
                // c(g(alpha)) = c(alpha), exactly
                assert!(q_proj.value(&x).sub(&q_alpha.value(&x)).max_abs() < 1e-11);
                // g is a projection
                for nu in 0..b.n() {
                    let a = proj.comps[nu].value(&x);
                    let bb = proj2.comps[nu].value(&x);
                    assert!(a.sub(&bb).max_abs() < 1e-11);
                }
            }
            // degree-0 input: the projection is gamma times the value
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let phi = random_commutant_form(&b, 0, &mut rng);
            let proj_phi = g_projection(&FormSum::from_forms(vec![phi.clone()]), &b);
            let gamma = b.gamma_canonical();
            for x in points(&b, 3, 5) {
                for nu in 0..b.n() {
                    let want = gamma.comps[nu].value(&x).mul(&phi.comps[0].value(&x));
                    assert!(proj_phi.comps[nu].value(&x).sub(&want).max_abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn curvature_split_matches_operator_composition() {
        // the three-term curvature split against A(A(s)) on random sections
        for id in ["sphere-s2", "conformal-r2"] {
            let b = bundle(id);
            let tw = Twisting::random(&b, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            let abar = FormSum::zero(b.n(), b.dim_e())
                .add_form(&random_commutant_form(&b, 0, &mut rng))
                .add_form(&random_commutant_form(&b, 2, &mut rng));
            let a = Superconnection::new(b.clone(), tw, abar);
            let f = supercurvature(&a);
            for seed in 0..3u64 {
                let s = FormSection::random(&b, seed);
                let lhs = apply_formsum_to_section(&f, &s);
                let rhs = s.apply_superconnection(&a).apply_superconnection(&a);
                for x in points(&b, 3, seed + 10) {
                    for k in 0..=b.n() {
                        for (ci, _) in crate::forms::combinations(b.n(), k).iter().enumerate() {
                            let lv = lhs.comps[k][ci].value(&x);
                            let rv = rhs.comps[k][ci].value(&x);
                            assert!(
                                lv.sub(&rv).max_abs() < 1e-8,
                                "curvature operator mismatch on {id} degree {k}: {}",
                                lv.sub(&rv).max_abs()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn curvature_expansion_rows() {
        // degree-by-degree rows of the expansion for a full mix in dim 4
        let b = bundle("perturbed-r4");
        let tw = Twisting::random(&b, 1);
        let conn = clifford_connection(&b, &tw);
        let a = Superconnection::with_family(&b, tw, Family::FullMix, 7);
        let f = supercurvature(&a);
        let a0 = a.abar.degree_part(0).unwrap();
        let a2 = a.abar.degree_part(2).unwrap();
        let a3 = a.abar.degree_part(3).unwrap();
        let a4 = a.abar.degree_part(4).unwrap();
        let r = a.curvature_e();

        let row0 = a0.wedge(a0);
        let row1 = ext_cov_deriv(a0, &conn);
        let row2 = form_supercommutator(a0, a2).add(&FormSum::from_forms(vec![r]));
        let row3 = form_supercommutator(a0, a3)
            .add(&FormSum::from_forms(vec![ext_cov_deriv(a2, &conn)]));
        let row4 = form_supercommutator(a0, a4).add(&FormSum::from_forms(vec![
            ext_cov_deriv(a3, &conn),
            a2.wedge(a2),
        ]));

        for x in points(&b, 3, 8) {
            let check = |want: &FormSum, deg: usize| {
                let got = f.degree_part(deg).unwrap();
                let want = want.degree_part(deg).unwrap();
                for (ci, _) in crate::forms::combinations(4, deg).iter().enumerate() {
                    let gv = got.comps[ci].value(&x);
                    let wv = want.comps[ci].value(&x);
                    assert!(
                        gv.sub(&wv).max_abs() < 1e-8,
                        "expansion row {deg} mismatch: {}",
                        gv.sub(&wv).max_abs()
                    );
                }
            };
            check(&FormSum::from_forms(vec![row0.clone()]), 0);
            check(&FormSum::from_forms(vec![row1.clone()]), 1);
            check(&row2, 2);
            check(&row3, 3);
            check(&row4, 4);
        }
    }

    #[test]
    fn quantization_square_difference() {
        // the closed expansion of c(Abar)^2 - c(Abar^2) over pairs of
        // components of degree at least two, and its A0-independence
        let b = bundle("torus-t4");
        let tw = Twisting::flat(&b);
        let a = Superconnection::with_family(&b, tw.clone(), Family::FullMix, 3);
        let lhs = cdiff(&a);

        let mut rhs = MatField::zero(4, b.dim_e(), b.dim_e());
        for i in [2usize, 3, 4] {
            for j in [2usize, 3, 4] {
                let ai = match a.abar.degree_part(i) {
                    Some(f) => f.clone(),
                    None => continue,
                };
                let aj = match a.abar.degree_part(j) {
                    Some(f) => f.clone(),
                    None => continue,
                };
                let qq = quantize_form(&ai, &b).mul(&quantize_form(&aj, &b));
                let prod = ai.wedge(&aj);
                let qprod = if prod.is_vacuous() {
                    MatField::zero(4, b.dim_e(), b.dim_e())
                } else {
                    quantize_form(&prod, &b)
                };
                rhs = rhs.add(&qq.sub(&qprod));
            }
        }
        for x in points(&b, 5, 12) {
            assert!(
                lhs.value(&x).sub(&rhs.value(&x)).max_abs() < 1e-10,
                "square-difference expansion residual {}",
                lhs.value(&x).sub(&rhs.value(&x)).max_abs()
            );
        }

        // perturbing the degree-zero part leaves the difference unchanged
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let other_a0 = random_commutant_form(&b, 0, &mut rng);
        let shifted = Superconnection::new(b.clone(), tw, a.abar.add_form(&other_a0));
        let lhs2 = cdiff(&shifted);
        for x in points(&b, 5, 13) {
            assert!(lhs2.value(&x).sub(&lhs.value(&x)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn four_dimensional_expansion() {
        // explicit term list in dimension four with graded brackets
        let b = bundle("perturbed-r4");
        let a = Superconnection::with_family(&b, Twisting::flat(&b), Family::FullMix, 21);
        let lhs = cdiff(&a);
        let q = |f: &EndForm| quantize_form(f, &b);
        let a2 = a.abar.degree_part(2).unwrap();
        let a3 = a.abar.degree_part(3).unwrap();
        let a4 = a.abar.degree_part(4).unwrap();
        let (q2, q3, q4) = (q(a2), q(a3), q(a4));
        // all quantized components are odd, so the graded brackets
        // are anticommutators
        let anti = |x: &MatField, y: &MatField| x.mul(y).add(&y.mul(x));
        let rhs = q2
            .mul(&q2)
            .add(&q3.mul(&q3))
            .add(&q4.mul(&q4))
            .sub(&q(&a2.wedge(a2)))
            .add(&anti(&q2, &q3))
            .add(&anti(&q2, &q4))
            .add(&anti(&q3, &q4));
        for x in points(&b, 5, 17) {
            let res = lhs.value(&x).sub(&rhs.value(&x)).max_abs();
            assert!(res < 1e-10, "dimension-four expansion residual {res}");
        }
    }

    #[test]
    fn one_form_bracket_identity() {
        // beta(a) = g(a) - 1/2 g_{sn} dx^s (x) c(dx^m)[g(a)_m, c(dx^n)]
        for id in ["sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            let alpha = random_odd_sum(&b, 41);
            let bet = beta(&alpha, &b);
            let proj = g_projection(&alpha, &b);
            for x in points(&b, 5, 18) {
                let jet = b.jet(&x);
                let cdx: Vec<CMat> = (0..b.n()).map(|m| b.c_dx(m).value(&x)).collect();
                let projv: Vec<CMat> = (0..b.n()).map(|m| proj.comps[m].value(&x)).collect();
                for s in 0..b.n() {
                    let mut corr = CMat::zeros(b.dim_e(), b.dim_e());
                    for nu in 0..b.n() {
                        let mut inner = CMat::zeros(b.dim_e(), b.dim_e());
                        for m in 0..b.n() {
                            // the projected components are even: plain commutator
                            inner = inner.add(&cdx[m].mul(&projv[m].commutator(&cdx[nu])));
                        }
                        corr.add_scaled(&inner, c(-0.5 * jet.g[s][nu], 0.0));
                    }
                    let want = projv[s].add(&corr);
                    let got = bet.comps[s].value(&x);
                    assert!(
                        got.sub(&want).max_abs() < 1e-10,
                        "one-form bracket identity residual {} on {id}",
                        got.sub(&want).max_abs()
                    );
                }
            }
        }
    }

    #[test]
    fn projection_square_identity() {
        // c(g(a)^2) + ev_g(g(a).g(a)) = c(a)^2 + 2 ev_g(beta(a).g(a))
        for id in ["sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            for seed in 0..3u64 {
                let alpha = random_odd_sum(&b, 100 + seed);
                let proj = g_projection(&alpha, &b);
                let bet = beta(&alpha, &b);
                let lhs =
                    quantize_form(&proj.wedge(&proj), &b).add(&dot(&proj, &proj).ev_g(&b));
                let q = quantize_sum(&alpha, &b);
                let rhs = q.mul(&q).add(&dot(&bet, &proj).ev_g(&b).scale(c(2.0, 0.0)));
                for x in points(&b, 4, 19 + seed) {
                    let res = lhs.value(&x).sub(&rhs.value(&x)).max_abs();
                    assert!(
                        res < 1e-8,
                        "projection square identity residual {res} on {id}"
                    );
                }
            }
        }
    }

    #[test]
    fn projection_derivative_identity() {
        // c2(nabla g(a)) = c(d a) - ev_g nabla beta(a)
        for id in ["sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            let tw = Twisting::random(&b, 2);
            let conn = clifford_connection(&b, &tw);
            for seed in 0..2u64 {
                let alpha = random_odd_sum(&b, 200 + seed);
                let proj = g_projection(&alpha, &b);
                let lhs = nabla_one_form(&proj, &conn, &b.geom).c2_quantize(&b);
                let d_alpha = ext_cov_deriv_sum(&alpha, &conn);
                let bet = beta(&alpha, &b);
                let rhs = quantize_sum(&d_alpha, &b)
                    .sub(&nabla_one_form(&bet, &conn, &b.geom).ev_g(&b));
                for x in points(&b, 4, 23 + seed) {
                    let res = lhs.value(&x).sub(&rhs.value(&x)).max_abs();
                    assert!(
                        res < 1e-6,
                        "projection derivative identity residual {res} on {id}"
                    );
                }
            }
        }
    }

    #[test]
    fn curvature_comparison() {
        // c(R^{assoc} - F(A)) against its four-term expansion
        for id in ["sphere-s2", "torus-t4"] {
            let b = bundle(id);
            let tw = Twisting::random(&b, 3);
            let a = Superconnection::with_family(&b, tw, Family::A2, 5);
            let r_assoc = associated_connection(&a).curvature();
            let f = supercurvature(&a);
            let diff = FormSum::from_forms(vec![r_assoc]).sub(&f);
            let lhs = quantize_sum(&diff, &b);

            let proj = g_projection(&a.abar, &b);
            let bet = beta(&a.abar, &b);
            let conn = a.clifford_connection();
            let rhs = cdiff(&a)
                .add(&nabla_one_form(&proj.sub(&bet), &conn, &b.geom).ev_g(&b))
                .add(&dot(&bet, &proj).ev_g(&b).scale(c(2.0, 0.0)))
                .sub(&dot(&proj, &proj).ev_g(&b));
            for x in points(&b, 4, 29) {
                let res = lhs.value(&x).sub(&rhs.value(&x)).max_abs();
                assert!(res < 1e-6, "curvature comparison residual {res} on {id}");
            }
        }
    }

    #[test]
    fn deviation_one_form_cases() {
        let b = bundle("sphere-s2");
        let tw = Twisting::random(&b, 4);
        let conn = clifford_connection(&b, &tw);
        // Clifford connection: deviation vanishes
        let w = varpi(&conn, &b);
        for x in points(&b, 4, 31) {
            for nu in 0..b.n() {
                assert!(w.comps[nu].value(&x).max_abs() < 1e-8);
            }
        }

        // associated connection of a superconnection: varpi = beta - g
        let a = Superconnection::with_family(&b, tw, Family::A2, 9);
        let conn_a = associated_connection(&a);
        let w = varpi(&conn_a, &b);
        let want = beta(&a.abar, &b).sub(&g_projection(&a.abar, &b));
        for x in points(&b, 4, 37) {
            for nu in 0..b.n() {
                let res = w.comps[nu]
                    .value(&x)
                    .sub(&want.comps[nu].value(&x))
                    .max_abs();
                assert!(res < 1e-8, "deviation mismatch {res}");
            }
        }

        // flat chart, shift commuting with the Clifford action: deviation 0
        let bf = bundle("flat-r2");
        let connf = clifford_connection(&bf, &Twisting::flat(&bf));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let wmat = crate::fields::random_matrix_field(2, 2, 2, &mut rng);
        let even = bf.fiber.embed_endw_field(
            &wmat.map_linear(2, 2, {
                let fiber = bf.fiber.clone();
                move |m| fiber.project_w_parity(m, Parity::Even)
            }),
            Parity::Even,
        );
        let mut comps = vec![MatField::zero(2, bf.dim_e(), bf.dim_e()); 2];
        comps[0] = even;
        let shift = EndForm::from_comps(2, bf.dim_e(), 1, Parity::Odd, comps);
        let w = varpi(&connf.shifted(&shift), &bf);
        for x in points(&bf, 4, 41) {
            for nu in 0..2 {
                assert!(w.comps[nu].value(&x).max_abs() < 1e-9);
            }
        }
    }

    #[test]
    fn twisting_curvature_cases() {
        // flat chart, flat W: everything vanishes
        let b = bundle("torus-t4");
        let a = Superconnection::with_family(&b, Twisting::flat(&b), Family::None, 0);
        let f = twisting_supercurvature(&a);
        for x in points(&b, 3, 43) {
            for t in &f.terms {
                for comp in &t.comps {
                    assert!(comp.value(&x).max_abs() < 1e-10);
                }
            }
        }

        // flat chart, curved W: twisting curvature is the W-curvature
        let tw = Twisting::random(&b, 6);
        let a = Superconnection::new(b.clone(), tw.clone(), FormSum::zero(4, b.dim_e()));
        let f = twisting_supercurvature(&a);
        let want = tw.curvature_w();
        let got = f.degree_part(2).expect("degree-2 part");
        for x in points(&b, 3, 47) {
            for (ci, _) in crate::forms::combinations(4, 2).iter().enumerate() {
                let res = got.comps[ci]
                    .value(&x)
                    .sub(&want.comps[ci].value(&x))
                    .max_abs();
                assert!(res < 1e-9, "twisting curvature residual {res}");
            }
        }

        // curved chart, trivial twisting: the full curvature is the Clifford
        // action of the Riemann tensor
        let bs = bundle("sphere-s2");
        let a = Superconnection::new(
            bs.clone(),
            Twisting::flat(&bs),
            FormSum::zero(2, bs.dim_e()),
        );
        let f = supercurvature(&a);
        let cr = bs.clifford_riemann();
        let got = f.degree_part(2).expect("degree-2 part");
        for x in points(&bs, 5, 53) {
            let res = got.comps[0]
                .value(&x)
                .sub(&cr.comps[0].value(&x))
                .max_abs();
            assert!(res < 1e-8, "curvature action residual {res}");
        }

        // and the twisting values supercommute with the Clifford action
        let tws = Twisting::random(&bs, 7);
        let a = Superconnection::with_family(&bs, tws, Family::A2, 11);
        let fes = twisting_supercurvature(&a);
        for x in points(&bs, 3, 59) {
            for t in &fes.terms {
                let vp = t.value_parity();
                for comp in &t.comps {
                    let v = comp.value(&x);
                    for m in 0..bs.n() {
                        let cm = bs.c_dx(m).value(&x);
                        let res = v.supercommutator(vp, &cm, Parity::Odd).max_abs();
                        assert!(res < 1e-8, "twisting values do not supercommute: {res}");
                    }
                }
            }
        }
    }

    #[test]
    fn second_exterior_derivative_is_curvature_bracket() {
        let b = bundle("sphere-s2");
        let tw = Twisting::random(&b, 12);
        let conn = clifford_connection(&b, &tw);
        let r = conn.curvature();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let alpha = random_commutant_form(&b, 0, &mut rng);
        let dd = ext_cov_deriv(&ext_cov_deriv(&alpha, &conn), &conn);
        let bracket = form_supercommutator(&r, &alpha);
        let want = bracket.degree_part(2).unwrap();
        for x in points(&b, 4, 67) {
            let res = dd.comps[0]
                .value(&x)
                .sub(&want.comps[0].value(&x))
                .max_abs();
            assert!(res < 1e-8, "second derivative vs curvature bracket: {res}");
        }
        // trivial case: constant scalar on a flat chart
        let bf = bundle("flat-r2");
        let connf = clifford_connection(&bf, &Twisting::flat(&bf));
        let id0 = EndForm::scalar(
            Parity::Even,
            MatField::constant(2, CMat::identity(bf.dim_e())),
        );
        let d = ext_cov_deriv(&id0, &connf);
        for x in points(&bf, 2, 71) {
            for comp in &d.comps {
                assert!(comp.value(&x).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn spin_connection_compatibility() {
        // [nabla_m, c(dx^k)] = -c(dx^s) Gamma^k_{sm} through the matrix fields
        for id in ["sphere-s2", "perturbed-r4"] {
            let b = bundle(id);
            let conn = clifford_connection(&b, &Twisting::flat(&b));
            for x in points(&b, 5, 73) {
                let jet = b.jet(&x);
                for k in 0..b.n() {
                    for m in 0..b.n() {
                        let lhs = b
                            .c_dx(k)
                            .partial(m)
                            .add(&conn.omega[m].commutator(&b.c_dx(k)))
                            .eval(&x, Order::Val)
                            .val;
                        let mut rhs = CMat::zeros(b.dim_e(), b.dim_e());
                        for s in 0..b.n() {
                            rhs.add_scaled(&b.c_dx(s).value(&x), c(-jet.gamma[k][s][m], 0.0));
                        }
                        let res = lhs.sub(&rhs).max_abs();
                        assert!(res < 1e-8, "compatibility residual {res} on {id}");
                    }
                }
            }
        }
    }
}
