//! Exact-signature linear algebra for ℝ⁵₁ and its complexification.
//!
//! The Lorentz inner product is
//! ⟨x,y⟩ = x₀y₀ + x₁y₁ + x₂y₂ + x₃y₃ − x₄y₄,
//! i.e. sign pattern (+,+,+,+,−) with the minus on the last coordinate.
//! No other signatures are supported.

mod expm;
mod mat;

pub use expm::expm;
pub use mat::{so41_membership_residual, CMat5, Mat5};

use crate::error::Error;
use crate::tol;
use crate::{Result, C64};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Signature signs (+,+,+,+,−) as a constant.
pub const SIGNATURE: [f64; 5] = [1.0, 1.0, 1.0, 1.0, -1.0];

/// Real 5-vector in ℝ⁵₁, coordinate order (x₀,…,x₄).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec5(pub [f64; 5]);

/// Complex 5-vector in ℂ⁵₁.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CVec5(pub [C64; 5]);

impl Vec5 {
    pub const ZERO: Vec5 = Vec5([0.0; 5]);

    /// Standard basis vector e_k.
    pub fn basis(k: usize) -> Vec5 {
        let mut v = [0.0; 5];
        v[k] = 1.0;
        Vec5(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Euclidean norm (all-plus), used for scale-aware tolerances.
    pub fn norm_euclid(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn complexify(&self) -> CVec5 {
        CVec5(self.0.map(|c| C64::new(c, 0.0)))
    }
}

impl CVec5 {
    pub const ZERO: CVec5 = CVec5([C64::new(0.0, 0.0); 5]);

    pub fn conj(&self) -> CVec5 {
        CVec5(self.0.map(|c| c.conj()))
    }

    pub fn re(&self) -> Vec5 {
        Vec5(self.0.map(|c| c.re))
    }

    pub fn im(&self) -> Vec5 {
        Vec5(self.0.map(|c| c.im))
    }

    pub fn norm_euclid(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Add for Vec5 {
    type Output = Vec5;
    fn add(self, o: Vec5) -> Vec5 {
        let mut v = self.0;
        for (a, b) in v.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        Vec5(v)
    }
}

impl Sub for Vec5 {
    type Output = Vec5;
    fn sub(self, o: Vec5) -> Vec5 {
        let mut v = self.0;
        for (a, b) in v.iter_mut().zip(o.0.iter()) {
            *a -= b;
        }
        Vec5(v)
    }
}

impl Mul<f64> for Vec5 {
    type Output = Vec5;
    fn mul(self, s: f64) -> Vec5 {
        Vec5(self.0.map(|c| c * s))
    }
}

impl Neg for Vec5 {
    type Output = Vec5;
    fn neg(self) -> Vec5 {
        Vec5(self.0.map(|c| -c))
    }
}

impl Add for CVec5 {
    type Output = CVec5;
    fn add(self, o: CVec5) -> CVec5 {
        let mut v = self.0;
        for (a, b) in v.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        CVec5(v)
    }
}

impl Sub for CVec5 {
    type Output = CVec5;
    fn sub(self, o: CVec5) -> CVec5 {
        let mut v = self.0;
        for (a, b) in v.iter_mut().zip(o.0.iter()) {
            *a -= b;
        }
        CVec5(v)
    }
}

impl Mul<C64> for CVec5 {
    type Output = CVec5;
    fn mul(self, s: C64) -> CVec5 {
        CVec5(self.0.map(|c| c * s))
    }
}

impl Mul<f64> for CVec5 {
    type Output = CVec5;
    fn mul(self, s: f64) -> CVec5 {
        CVec5(self.0.map(|c| c * s))
    }
}

impl Neg for CVec5 {
    type Output = CVec5;
    fn neg(self) -> CVec5 {
        CVec5(self.0.map(|c| -c))
    }
}

/// Lorentz inner product ⟨x,y⟩ = x₀y₀ + x₁y₁ + x₂y₂ + x₃y₃ − x₄y₄.
pub fn lorentz_inner(x: &Vec5, y: &Vec5) -> f64 {
    x.0[0] * y.0[0] + x.0[1] * y.0[1] + x.0[2] * y.0[2] + x.0[3] * y.0[3] - x.0[4] * y.0[4]
}

/// Complex bilinear extension of the Lorentz product (no conjugation).
/// The hermitian form is obtained by conjugating one argument at call sites.
pub fn complex_bilinear_inner(z: &CVec5, w: &CVec5) -> C64 {
    z.0[0] * w.0[0] + z.0[1] * w.0[1] + z.0[2] * w.0[2] + z.0[3] * w.0[3] - z.0[4] * w.0[4]
}

/// Bilinear pairing of a complex vector against a real one.
pub fn inner_cr(z: &CVec5, y: &Vec5) -> C64 {
    z.0[0] * y.0[0] + z.0[1] * y.0[1] + z.0[2] * y.0[2] + z.0[3] * y.0[3] - z.0[4] * y.0[4]
}

/// True iff x is future pointing, i.e. ⟨x,e₄⟩ < 0 (x₄ > 0).
pub fn is_future_pointing(x: &Vec5) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::Domain(
            "is_future_pointing: zero vector has no causal orientation".into(),
        ));
    }
    Ok(x.0[4] > 0.0)
}

/// Scale the representative of a future null line so its last component is 1
/// (the euclidean-lift normalization onto the conic section x₄ = 1).
///
/// Requires ⟨x,x⟩ = 0 within the scale-aware tolerance and x₄ > 0.
pub fn null_line_normalize(x: &Vec5) -> Result<Vec5> {
    let n2 = x.norm_euclid();
    let q = lorentz_inner(x, x);
    if q.abs() > tol::NULL_MEMBERSHIP_REL * n2 * n2 {
        return Err(Error::Domain(format!(
            "null_line_normalize: input is not null, <x,x> = {q:.6e} (scale {:.3e})",
            n2 * n2
        )));
    }
    if x.0[4] <= 0.0 {
        return Err(Error::CausalOrientation(format!(
            "null_line_normalize: x4 = {:.6e} is not future pointing",
            x.0[4]
        )));
    }
    Ok(*x * (1.0 / x.0[4]))
}
