//! Pointwise algebra of the degenerate Clifford action on Lambda H* (x) S_v
//! for a split cotangent space H* (+) V*: horizontal covectors act by
//! exterior multiplication, vertical ones by the Clifford action of the
//! vertical factor, carried past the exterior grading. The degenerate
//! relation m0(a) m0(b) + m0(b) m0(a) = -2 g(a_V, b_V) then holds with the
//! pairing vanishing on the horizontal space.

use crate::clifford::{build_gammas, CliffordRep};
use crate::linalg::{c, CMat, C64};
use crate::{Error, Result};

/// Split cotangent model: h horizontal directions acting on the exterior
/// algebra, v vertical directions acting on vertical spinors.
pub struct SplitSpace {
    pub h: usize,
    pub v: usize,
    pub vertical_rep: CliffordRep,
    pub dim_lambda: usize,
    pub dim_total: usize,
    exterior: Vec<CMat>,
    lambda_parity: CMat,
}

/// A covector split into horizontal and vertical components.
#[derive(Clone, Debug)]
pub struct SplitCovector {
    pub horizontal: Vec<C64>,
    pub vertical: Vec<C64>,
}

impl SplitSpace {
    pub fn new(h: usize, v: usize) -> Result<SplitSpace> {
        if h == 0 || h > 6 {
            return Err(Error::Dimension(format!(
                "horizontal dimension must lie in 1..=6, got {h}"
            )));
        }
        let vertical_rep = build_gammas(v)?;
        let dim_lambda = 1 << h;
        // exterior multiplication by the basis covectors on subsets of 1..h
        let exterior = (0..h)
            .map(|alpha| {
                let mut m = CMat::zeros(dim_lambda, dim_lambda);
                for subset in 0u32..(dim_lambda as u32) {
                    if subset & (1 << alpha) != 0 {
                        continue;
                    }
                    let below = (subset & ((1 << alpha) - 1)).count_ones();
                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    m.set((subset | (1 << alpha)) as usize, subset as usize, c(sign, 0.0));
                }
                m
            })
            .collect();
        let lambda_parity = CMat::from_fn(dim_lambda, dim_lambda, |i, j| {
            if i == j {
                c(if (i as u32).count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let dim_total = dim_lambda * vertical_rep.dim_s;
        Ok(SplitSpace {
            h,
            v,
            vertical_rep,
            dim_lambda,
            dim_total,
            exterior,
            lambda_parity,
        })
    }

    /// Exterior multiplication by a horizontal covector, extended to the
    /// total space.
    pub fn epsilon(&self, horizontal: &[C64]) -> CMat {
        assert_eq!(horizontal.len(), self.h);
        let mut m = CMat::zeros(self.dim_lambda, self.dim_lambda);
        for (alpha, &coeff) in horizontal.iter().enumerate() {
            m.add_scaled(&self.exterior[alpha], coeff);
        }
        m.kron(&CMat::identity(self.vertical_rep.dim_s))
    }

    /// Vertical Clifford action carried past the exterior grading.
    pub fn vertical_action(&self, vertical: &[C64]) -> CMat {
        assert_eq!(vertical.len(), self.v);
        self.lambda_parity
            .kron(&self.vertical_rep.c_covector(vertical))
    }

    /// Total grading involution of the split space.
    pub fn total_grading(&self) -> CMat {
        self.lambda_parity.kron(&self.vertical_rep.chirality)
    }

    /// The degenerate pairing: the vertical inner product only.
    pub fn degenerate_pairing(&self, a: &SplitCovector, b: &SplitCovector) -> C64 {
        a.vertical
            .iter()
            .zip(&b.vertical)
            .map(|(x, y)| x * y)
            .sum()
    }
}

/// The degenerate Clifford action: exterior multiplication on the horizontal
/// part plus the vertical Clifford action, extended linearly.
pub fn m0(a: &SplitCovector, space: &SplitSpace) -> Result<CMat> {
    if a.horizontal.len() != space.h || a.vertical.len() != space.v {
        return Err(Error::Dimension(format!(
            "covector split ({}, {}) does not match the space split ({}, {})",
            a.horizontal.len(),
            a.vertical.len(),
            space.h,
            space.v
        )));
    }
    Ok(space
        .epsilon(&a.horizontal)
        .add(&space.vertical_action(&a.vertical)))
}

/// The quantization map restricted to covectors: the sum of the two partial
/// actions. Agrees with m0 on pure and mixed covectors.
pub fn m0_quantize_restricted(a: &SplitCovector, space: &SplitSpace) -> Result<CMat> {
    if a.horizontal.len() != space.h || a.vertical.len() != space.v {
        return Err(Error::Dimension("covector split mismatch".into()));
    }
    let zero_v = vec![c(0.0, 0.0); space.v];
    let zero_h = vec![c(0.0, 0.0); space.h];
    let horizontal_part = m0(
        &SplitCovector {
            horizontal: a.horizontal.clone(),
            vertical: zero_v,
        },
        space,
    )?;
    let vertical_part = m0(
        &SplitCovector {
            horizontal: zero_h,
            vertical: a.vertical.clone(),
        },
        space,
    )?;
    Ok(horizontal_part.add(&vertical_part))
}
