//! Coordinate-chart Riemannian data. A chart is a smooth metric field
//! evaluated in second-order jet arithmetic; everything else (Christoffel
//! symbols, curvature, vielbein, spin connection) is derived pointwise and
//! cached per point.
//!
//! Conventions, fixed once here:
//! - Gamma^s_{mn} = 1/2 g^{sr} (d_m g_{rn} + d_n g_{rm} - d_r g_{mn})
//! - R^k_{lmn} = d_m Gamma^k_{nl} - d_n Gamma^k_{ml}
//!   + Gamma^k_{ms} Gamma^s_{nl} - Gamma^k_{ns} Gamma^s_{ml}
//! - Ricci_{ln} = R^m_{lmn}, r = g^{ln} Ricci_{ln}; the unit round 2-sphere
//!   has r = +2.
//! - The vielbein is the lower-triangular square root of the inverse metric,
//!   h h^T = g^{-1}, so c(dx^m) = h^m_a gamma^a.
//! - omega_{m a b} = -e^a_k (d_m h^k_b + Gamma^k_{sm} h^s_b), which makes the
//!   induced spinor connection satisfy
//!   [nabla_m, c(dx^k)] = -c(dx^s) Gamma^k_{sm}.

pub mod catalog;

use crate::jet::{Jet, MAX_DIM};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub xs: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Point {
        assert!(coords.len() <= MAX_DIM);
        let mut xs = [0.0; MAX_DIM];
        xs[..coords.len()].copy_from_slice(coords);
        Point {
            n: coords.len(),
            xs,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.xs[..self.n]
    }

    pub fn bits(&self) -> [u64; MAX_DIM] {
        let mut k = [0u64; MAX_DIM];
        for i in 0..MAX_DIM {
            k[i] = self.xs[i].to_bits();
        }
        k
    }
}

pub type A2 = Vec<Vec<f64>>;
pub type A3 = Vec<Vec<Vec<f64>>>;
pub type A4 = Vec<Vec<Vec<Vec<f64>>>>;

pub fn a2(n: usize) -> A2 {
    vec![vec![0.0; n]; n]
}
pub fn a3(n: usize) -> A3 {
    vec![vec![vec![0.0; n]; n]; n]
}
pub fn a4(n: usize) -> A4 {
    vec![vec![vec![vec![0.0; n]; n]; n]; n]
}

/// Metric evaluated as a matrix of second-order jets.
pub type MetricJets = Vec<Vec<Jet<f64>>>;
pub type MetricFn = Arc<dyn Fn(&Point) -> MetricJets + Send + Sync>;

/// All pointwise geometric data derived from the metric 2-jet at one point.
#[derive(Clone, Debug)]
pub struct GeometryJet {
    pub n: usize,
    pub x: Point,
    pub g: A2,
    pub dg: A3,   // dg[s][m][n] = d_s g_{mn}
    pub d2g: A4,  // d2g[s][t][m][n]
    pub g_inv: A2,
    pub dg_inv: A3,
    pub d2g_inv: A4,
    pub gamma: A3,  // gamma[k][m][n] = Gamma^k_{mn}
    pub dgamma: A4, // dgamma[t][k][m][n] = d_t Gamma^k_{mn}
    pub riemann: A4, // fully lowered R_{klmn}
    pub ricci: A2,
    pub r_m: f64,
    pub h: A2,   // h[m][a], lower triangular in (m, a)
    pub dh: A3,  // dh[t][m][a]
    pub d2h: A4, // d2h[t][u][m][a]
    pub e: A2,   // e[a][m], inverse of h
    pub de: A3,  // de[t][a][m]
    pub omega: A3,  // omega[m][a][b], antisymmetric in (a, b)
    pub domega: A4, // domega[t][m][a][b]
}

/// Invert a matrix of jets by Gauss-Jordan elimination with partial pivoting
/// on the value part.
fn jet_mat_inverse(n: usize, a: &[Vec<Jet<f64>>]) -> Result<Vec<Vec<Jet<f64>>>> {
    let mut work: Vec<Vec<Jet<f64>>> = a.to_vec();
    let mut inv: Vec<Vec<Jet<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(n, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, work[r][col].v.abs()))
            .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pivot_val < 1e-12 {
            return Err(Error::Factorization(
                "singular matrix in jet inversion".into(),
            ));
        }
        work.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pr = work[col][col].recip();
        for j in 0..n {
            work[col][j] = work[col][j] * pr;
            inv[col][j] = inv[col][j] * pr;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[r][col];
            if f.v == 0.0 && f.d[..n].iter().all(|&x| x == 0.0) {
                continue;
            }
            for j in 0..n {
                work[r][j] = work[r][j] - f * work[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Ok(inv)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix
/// of jets.
fn jet_cholesky(n: usize, a: &[Vec<Jet<f64>>]) -> Result<Vec<Vec<Jet<f64>>>> {
    let mut l: Vec<Vec<Jet<f64>>> = (0..n)
        .map(|_| (0..n).map(|_| Jet::constant(n, 0.0)).collect())
        .collect();
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if s.v <= 0.0 {
                    return Err(Error::Factorization(format!(
                        "metric is not positive-definite (pivot {} at index {i})",
                        s.v
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Assemble the full geometric jet from the metric 2-jets at a point. Shared
/// by the algorithmic-differentiation path and the finite-difference oracle.
pub fn geometry_jet_from_metric(n: usize, x: Point, mj: &MetricJets) -> Result<GeometryJet> {
    for m in 0..n {
        for nu in 0..n {
            if (mj[m][nu].v - mj[nu][m].v).abs() > 1e-9 {
                return Err(Error::Evaluation("metric is not symmetric".into()));
            }
        }
    }

    let mut g = a2(n);
    let mut dg = a3(n);
    let mut d2g = a4(n);
    for m in 0..n {
        for nu in 0..n {
            g[m][nu] = mj[m][nu].v;
            for s in 0..n {
                dg[s][m][nu] = mj[m][nu].d[s];
                for t in 0..n {
                    d2g[s][t][m][nu] = mj[m][nu].h[s][t];
                }
            }
        }
    }

    let ginv_j = jet_mat_inverse(n, mj)?;
    let mut g_inv = a2(n);
    let mut dg_inv = a3(n);
    let mut d2g_inv = a4(n);
    for m in 0..n {
        for nu in 0..n {
            g_inv[m][nu] = ginv_j[m][nu].v;
            for s in 0..n {
                dg_inv[s][m][nu] = ginv_j[m][nu].d[s];
                for t in 0..n {
                    d2g_inv[s][t][m][nu] = ginv_j[m][nu].h[s][t];
                }
            }
        }
    }

    let mut gamma = a3(n);
    let mut dgamma = a4(n);
    for k in 0..n {
        for m in 0..n {
            for nu in 0..n {
                let mut v = 0.0;
                for r in 0..n {
                    v += 0.5 * g_inv[k][r] * (dg[m][r][nu] + dg[nu][r][m] - dg[r][m][nu]);
                }
                gamma[k][m][nu] = v;
                for t in 0..n {
                    let mut dv = 0.0;
                    for r in 0..n {
                        dv += 0.5 * dg_inv[t][k][r]
                            * (dg[m][r][nu] + dg[nu][r][m] - dg[r][m][nu]);
                        dv += 0.5 * g_inv[k][r]
                            * (d2g[t][m][r][nu] + d2g[t][nu][r][m] - d2g[t][r][m][nu]);
                    }
                    dgamma[t][k][m][nu] = dv;
                }
            }
        }
    }

    // Riemann with one index up, then lowered
    let mut riemann_up = a4(n);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                for nu in 0..n {
                    let mut v = dgamma[m][k][nu][l] - dgamma[nu][k][m][l];
                    for s in 0..n {
                        v += gamma[k][m][s] * gamma[s][nu][l] - gamma[k][nu][s] * gamma[s][m][l];
                    }
                    riemann_up[k][l][m][nu] = v;
                }
            }
        }
    }
    let mut riemann = a4(n);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                for nu in 0..n {
                    let mut v = 0.0;
                    for t in 0..n {
                        v += g[k][t] * riemann_up[t][l][m][nu];
                    }
                    riemann[k][l][m][nu] = v;
                }
            }
        }
    }
    let mut ricci = a2(n);
    for l in 0..n {
        for nu in 0..n {
            let mut v = 0.0;
            for m in 0..n {
                v += riemann_up[m][l][m][nu];
            }
            ricci[l][nu] = v;
        }
    }
    let mut r_m = 0.0;
    for l in 0..n {
        for nu in 0..n {
            r_m += g_inv[l][nu] * ricci[l][nu];
        }
    }

    // vielbein: lower-triangular square root of the inverse metric
    let l_fac = jet_cholesky(n, &ginv_j)?;
    let mut h = a2(n);
    let mut dh = a3(n);
    let mut d2h = a4(n);
    for m in 0..n {
        for aa in 0..n {
            h[m][aa] = l_fac[m][aa].v;
            for t in 0..n {
                dh[t][m][aa] = l_fac[m][aa].d[t];
                for u in 0..n {
                    d2h[t][u][m][aa] = l_fac[m][aa].h[t][u];
                }
            }
        }
    }

    // e = h^{-1} by forward substitution columnwise, de = -e dh e
    let mut e = a2(n);
    for j in 0..n {
        // solve h * col = unit_j; col[m] = (h^{-1})_{m j}
        let mut col = vec![0.0; n];
        for m in 0..n {
            let mut s = if m == j { 1.0 } else { 0.0 };
            for k in 0..m {
                s -= h[m][k] * col[k];
            }
            col[m] = s / h[m][m];
        }
        for m in 0..n {
            e[m][j] = col[m];
        }
    }

    let mut de = a3(n);
    for t in 0..n {
        for aa in 0..n {
            for m in 0..n {
                let mut v = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        v -= e[aa][p] * dh[t][p][q] * e[q][m];
                    }
                }
                de[t][aa][m] = v;
            }
        }
    }

    // spin connection coefficients and their first derivatives
    let mut omega = a3(n);
    let mut domega = a4(n);
    for m in 0..n {
        for aa in 0..n {
            for b in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    let mut cov = dh[m][k][b];
                    for s in 0..n {
                        cov += gamma[k][s][m] * h[s][b];
                    }
                    v -= e[aa][k] * cov;
                }
                omega[m][aa][b] = v;
                for t in 0..n {
                    let mut dv = 0.0;
                    for k in 0..n {
                        let mut cov = dh[m][k][b];
                        let mut dcov = d2h[t][m][k][b];
                        for s in 0..n {
                            cov += gamma[k][s][m] * h[s][b];
                            dcov += dgamma[t][k][s][m] * h[s][b] + gamma[k][s][m] * dh[t][s][b];
                        }
                        dv -= de[t][aa][k] * cov + e[aa][k] * dcov;
                    }
                    domega[t][m][aa][b] = dv;
                }
            }
        }
    }

    Ok(GeometryJet {
        n,
        x,
        g,
        dg,
        d2g,
        g_inv,
        dg_inv,
        d2g_inv,
        gamma,
        dgamma,
        riemann,
        ricci,
        r_m,
        h,
        dh,
        d2h,
        e,
        de,
        omega,
        domega,
    })
}

/// Orthonormal-frame components of the lowered Riemann tensor on the first
/// index pair: R_{ab mn} = R_{kl mn} h^k_a h^l_b.
pub fn riemann_orthonormal(jet: &GeometryJet) -> A4 {
    let n = jet.n;
    let mut out = a4(n);
    for aa in 0..n {
        for b in 0..n {
            for m in 0..n {
                for nu in 0..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            v += jet.riemann[k][l][m][nu] * jet.h[k][aa] * jet.h[l][b];
                        }
                    }
                    out[aa][b][m][nu] = v;
                }
            }
        }
    }
    out
}

/// A coordinate chart with a smooth metric field and a sampling box.
pub struct ChartGeometry {
    pub id: String,
    pub n: usize,
    metric: MetricFn,
    pub sample_lo: [f64; MAX_DIM],
    pub sample_hi: [f64; MAX_DIM],
    cache: Mutex<HashMap<[u64; MAX_DIM], Arc<GeometryJet>>>,
}

impl ChartGeometry {
    pub fn new(
        id: &str,
        n: usize,
        metric: MetricFn,
        sample_lo: [f64; MAX_DIM],
        sample_hi: [f64; MAX_DIM],
    ) -> ChartGeometry {
        ChartGeometry {
            id: id.to_string(),
            n,
            metric,
            sample_lo,
            sample_hi,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn metric_jets(&self, x: &Point) -> MetricJets {
        (self.metric)(x)
    }

    /// Full geometric data at a point, cached.
    pub fn jet_at(&self, x: &Point) -> Result<Arc<GeometryJet>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&x.bits()) {
            return Ok(hit.clone());
        }
        let mj = (self.metric)(x);
        let jet = Arc::new(geometry_jet_from_metric(self.n, *x, &mj)?);
        self.cache
            .lock()
            .unwrap()
            .insert(x.bits(), jet.clone());
        Ok(jet)
    }

    /// Seeded uniform sample points inside the chart's sampling box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        (0..count)
            .map(|_| {
                let mut xs = [0.0; MAX_DIM];
                for i in 0..self.n {
                    xs[i] = rng.gen_range(self.sample_lo[i]..self.sample_hi[i]);
                }
                Point { n: self.n, xs }
            })
            .collect()
    }
}

/// Metric 2-jets obtained by central finite differences of the metric values.
/// The independent cross-check path for the derivative engine.
pub fn fd_metric_jets(geom: &ChartGeometry, x: &Point, step: f64) -> MetricJets {
    let n = geom.n;
    let value = |p: &Point| -> A2 {
        let mj = geom.metric_jets(p);
        let mut out = a2(n);
        for i in 0..n {
            for j in 0..n {
                out[i][j] = mj[i][j].v;
            }
        }
        out
    };
    let shift = |p: &Point, mu: usize, s: f64| -> Point {
        let mut q = *p;
        q.xs[mu] += s;
        q
    };
    let g0 = value(x);
    let mut out: MetricJets = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(n, g0[i][j])).collect())
        .collect();
    for mu in 0..n {
        let gp = value(&shift(x, mu, step));
        let gm = value(&shift(x, mu, -step));
        for i in 0..n {
            for j in 0..n {
                out[i][j].d[mu] = (gp[i][j] - gm[i][j]) / (2.0 * step);
                out[i][j].h[mu][mu] = (gp[i][j] - 2.0 * g0[i][j] + gm[i][j]) / (step * step);
            }
        }
        for nu in 0..mu {
            let gpp = value(&shift(&shift(x, mu, step), nu, step));
            let gpm = value(&shift(&shift(x, mu, step), nu, -step));
            let gmp = value(&shift(&shift(x, mu, -step), nu, step));
            let gmm = value(&shift(&shift(x, mu, -step), nu, -step));
            for i in 0..n {
                for j in 0..n {
                    let mixed =
                        (gpp[i][j] - gpm[i][j] - gmp[i][j] + gmm[i][j]) / (4.0 * step * step);
                    out[i][j].h[mu][nu] = mixed;
                    out[i][j].h[nu][mu] = mixed;
                }
            }
        }
    }
    out
}
