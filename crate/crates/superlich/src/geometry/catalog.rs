//! Built-in chart catalog. Every geometry is a closed-form metric field;
//! the exact formulas are part of the crate's public contract and are
//! documented in the README.

use super::{ChartGeometry, MetricFn, Point};
use crate::jet::Jet;
use crate::{Error, Result};
use std::sync::Arc;

pub const GEOMETRY_IDS: &[&str] = &[
    "flat-r2",
    "conformal-r2",
    "sphere-s2",
    "torus-t4",
    "perturbed-r4",
];

fn delta_metric(n: usize) -> MetricFn {
    Arc::new(move |_: &Point| {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Jet::constant(n, if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect()
    })
}

/// g = e^{2 phi} delta on R^2 with phi = 0.1 x^1 (harmonic).
fn conformal_r2() -> MetricFn {
    Arc::new(|x: &Point| {
        let j1 = Jet::<f64>::coord(2, x.xs[0], 0);
        let conf = j1.scale(0.2).exp();
        (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| if i == j { conf } else { Jet::constant(2, 0.0) })
                    .collect()
            })
            .collect()
    })
}

/// Unit round 2-sphere in stereographic coordinates:
/// g = 4 / (1 + |x|^2)^2 delta.
fn sphere_s2() -> MetricFn {
    Arc::new(|x: &Point| {
        let j1 = Jet::<f64>::coord(2, x.xs[0], 0);
        let j2 = Jet::<f64>::coord(2, x.xs[1], 1);
        let denom = Jet::constant(2, 1.0) + j1 * j1 + j2 * j2;
        let conf = (denom * denom).recip().scale(4.0);
        (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| if i == j { conf } else { Jet::constant(2, 0.0) })
                    .collect()
            })
            .collect()
    })
}

/// g_{mn} = delta_{mn} + 0.05 sin(x^m + x^n + 0.7 (m+1)(n+1)) on R^4.
/// The perturbation is symmetric and small enough to keep g positive-definite
/// everywhere.
fn perturbed_r4() -> MetricFn {
    Arc::new(|x: &Point| {
        let coords: Vec<Jet<f64>> = (0..4).map(|m| Jet::coord(4, x.xs[m], m)).collect();
        (0..4)
            .map(|m| {
                (0..4)
                    .map(|nu| {
                        let phase = 0.7 * ((m + 1) * (nu + 1)) as f64;
                        let arg = coords[m] + coords[nu] + Jet::constant(4, phase);
                        let pert = arg.sin().scale(0.05);
                        if m == nu {
                            Jet::constant(4, 1.0) + pert
                        } else {
                            pert
                        }
                    })
                    .collect()
            })
            .collect()
    })
}

pub fn by_id(id: &str) -> Result<Arc<ChartGeometry>> {
    let geom = match id {
        "flat-r2" => ChartGeometry::new("flat-r2", 2, delta_metric(2), [-1.0; 4], [1.0; 4]),
        "conformal-r2" => {
            ChartGeometry::new("conformal-r2", 2, conformal_r2(), [-1.0; 4], [1.0; 4])
        }
        "sphere-s2" => ChartGeometry::new("sphere-s2", 2, sphere_s2(), [-1.2; 4], [1.2; 4]),
        "torus-t4" => ChartGeometry::new("torus-t4", 4, delta_metric(4), [-1.0; 4], [1.0; 4]),
        "perturbed-r4" => {
            ChartGeometry::new("perturbed-r4", 4, perturbed_r4(), [-1.0; 4], [1.0; 4])
        }
        _ => {
            return Err(Error::Config(format!("unknown geometry id: {id}")));
        }
    };
    Ok(Arc::new(geom))
}
