//! Real and complex 5×5 matrices with the η = diag(1,1,1,1,−1) machinery.
//!
//! A `Mat5` is interpreted column-major as an ordered frame (F₀,…,F₄); an
//! element of SO(4,1) satisfies FᵀηF = η.

use super::{lorentz_inner, CVec5, Vec5};
use crate::error::Error;
use crate::{Result, C64};
use std::ops::{Add, Mul, Neg, Sub};

/// Real 5×5 matrix, stored as an array of columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat5 {
    pub cols: [Vec5; 5],
}

/// Complex 5×5 matrix, stored as an array of columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat5 {
    pub cols: [CVec5; 5],
}

impl Default for Mat5 {
    fn default() -> Self {
        Mat5::zero()
    }
}

impl Default for CMat5 {
    fn default() -> Self {
        CMat5::zero()
    }
}

impl Mat5 {
    pub fn zero() -> Mat5 {
        Mat5 {
            cols: [Vec5::ZERO; 5],
        }
    }

    pub fn identity() -> Mat5 {
        let mut m = Mat5::zero();
        for k in 0..5 {
            m.cols[k].0[k] = 1.0;
        }
        m
    }

    pub fn eta() -> Mat5 {
        let mut m = Mat5::identity();
        m.cols[4].0[4] = -1.0;
        m
    }

    pub fn from_rows(rows: [[f64; 5]; 5]) -> Mat5 {
        let mut m = Mat5::zero();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.cols[j].0[i] = v;
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j].0[i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.cols[j].0[i] = v;
    }

    pub fn col(&self, j: usize) -> Vec5 {
        self.cols[j]
    }

    pub fn transpose(&self) -> Mat5 {
        let mut t = Mat5::zero();
        for i in 0..5 {
            for j in 0..5 {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &Vec5) -> Vec5 {
        let mut out = Vec5::ZERO;
        for j in 0..5 {
            for i in 0..5 {
                out.0[i] += self.get(i, j) * v.0[j];
            }
        }
        out
    }

    pub fn mul_cvec(&self, v: &CVec5) -> CVec5 {
        let mut out = CVec5::ZERO;
        for j in 0..5 {
            for i in 0..5 {
                out.0[i] += v.0[j] * self.get(i, j);
            }
        }
        out
    }

    /// Max-absolute-entry norm.
    pub fn norm_max(&self) -> f64 {
        self.cols
            .iter()
            .flat_map(|c| c.0.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// 1-norm (max column sum), used by the exponential scaling heuristic.
    pub fn norm_one(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.0.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    /// Inverse of an η-orthogonal matrix: F⁻¹ = ηFᵀη, exact for group
    /// elements and well-conditioned for near-members.
    pub fn inverse_orthogonal(&self) -> Mat5 {
        let mut t = self.transpose();
        // eta * t * eta: negate row 4 and column 4 (entry (4,4) twice).
        for j in 0..5 {
            t.cols[j].0[4] = -t.cols[j].0[4];
        }
        for i in 0..5 {
            t.cols[4].0[i] = -t.cols[4].0[i];
        }
        t
    }

    /// General inverse by Gaussian elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat5> {
        let mut a = *self;
        let mut inv = Mat5::identity();
        for k in 0..5 {
            let mut p = k;
            for r in k + 1..5 {
                if a.get(r, k).abs() > a.get(p, k).abs() {
                    p = r;
                }
            }
            if a.get(p, k).abs() < 1e-300 {
                return Err(Error::Degeneracy("singular 5x5 matrix".into()));
            }
            if p != k {
                for j in 0..5 {
                    let (x, y) = (a.get(k, j), a.get(p, j));
                    a.set(k, j, y);
                    a.set(p, j, x);
                    let (x, y) = (inv.get(k, j), inv.get(p, j));
                    inv.set(k, j, y);
                    inv.set(p, j, x);
                }
            }
            let d = a.get(k, k);
            for j in 0..5 {
                a.set(k, j, a.get(k, j) / d);
                inv.set(k, j, inv.get(k, j) / d);
            }
            for r in 0..5 {
                if r != k {
                    let f = a.get(r, k);
                    if f != 0.0 {
                        for j in 0..5 {
                            a.set(r, j, a.get(r, j) - f * a.get(k, j));
                            inv.set(r, j, inv.get(r, j) - f * inv.get(k, j));
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    pub fn complexify(&self) -> CMat5 {
        CMat5 {
            cols: self.cols.map(|c| c.complexify()),
        }
    }

    pub fn det(&self) -> f64 {
        det5(self)
    }
}

/// Determinant by LU with partial pivoting.
fn det5(m: &Mat5) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for k in 0..5 {
        let mut p = k;
        for r in k + 1..5 {
            if a.get(r, k).abs() > a.get(p, k).abs() {
                p = r;
            }
        }
        if a.get(p, k) == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..5 {
                let (x, y) = (a.get(k, j), a.get(p, j));
                a.set(k, j, y);
                a.set(p, j, x);
            }
            det = -det;
        }
        det *= a.get(k, k);
        for r in k + 1..5 {
            let f = a.get(r, k) / a.get(k, k);
            for j in k..5 {
                a.set(r, j, a.get(r, j) - f * a.get(k, j));
            }
        }
    }
    det
}

impl Mul for Mat5 {
    type Output = Mat5;
    fn mul(self, rhs: Mat5) -> Mat5 {
        let mut out = Mat5::zero();
        for j in 0..5 {
            out.cols[j] = self.mul_vec(&rhs.cols[j]);
        }
        out
    }
}

impl Add for Mat5 {
    type Output = Mat5;
    fn add(self, rhs: Mat5) -> Mat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] + rhs.cols[j];
        }
        out
    }
}

impl Sub for Mat5 {
    type Output = Mat5;
    fn sub(self, rhs: Mat5) -> Mat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] - rhs.cols[j];
        }
        out
    }
}

impl Mul<f64> for Mat5 {
    type Output = Mat5;
    fn mul(self, s: f64) -> Mat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] * s;
        }
        out
    }
}

impl Neg for Mat5 {
    type Output = Mat5;
    fn neg(self) -> Mat5 {
        self * -1.0
    }
}

/// Max-norm of FᵀηF − η; zero exactly for SO(4,1) (and O(4,1)) elements.
pub fn so41_membership_residual(f: &Mat5) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let target = if i == j {
                if i == 4 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            };
            let v = lorentz_inner(&f.cols[i], &f.cols[j]) - target;
            worst = worst.max(v.abs());
        }
    }
    worst
}

impl Mat5 {
    /// Preserves time orientation iff the e₄-column stays future pointing.
    pub fn preserves_time_orientation(&self) -> bool {
        self.get(4, 4) > 0.0
    }

    /// Project back onto O(4,1) by the η-polar Newton iteration
    /// X ← ½(X + ηX^{-T}η), quadratically convergent near the group.
    pub fn reorthogonalize(&self, iterations: usize) -> Result<Mat5> {
        let mut x = *self;
        let eta = Mat5::eta();
        for _ in 0..iterations {
            let xinv_t = x.inverse()?.transpose();
            x = (x + eta * xinv_t * eta) * 0.5;
        }
        Ok(x)
    }

    /// Hyperbolic boost by angle s in the (x₃,x₄)-plane.
    pub fn boost34(s: f64) -> Mat5 {
        let mut m = Mat5::identity();
        m.set(3, 3, s.cosh());
        m.set(4, 4, s.cosh());
        m.set(3, 4, s.sinh());
        m.set(4, 3, s.sinh());
        m
    }
}

impl CMat5 {
    pub fn zero() -> CMat5 {
        CMat5 {
            cols: [CVec5::ZERO; 5],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.cols[j].0[i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.cols[j].0[i] = v;
    }

    pub fn col(&self, j: usize) -> CVec5 {
        self.cols[j]
    }

    pub fn conj(&self) -> CMat5 {
        CMat5 {
            cols: self.cols.map(|c| c.conj()),
        }
    }

    pub fn re(&self) -> Mat5 {
        Mat5 {
            cols: self.cols.map(|c| c.re()),
        }
    }

    pub fn im(&self) -> Mat5 {
        Mat5 {
            cols: self.cols.map(|c| c.im()),
        }
    }

    pub fn mul_cvec(&self, v: &CVec5) -> CVec5 {
        let mut out = CVec5::ZERO;
        for j in 0..5 {
            for i in 0..5 {
                out.0[i] += self.get(i, j) * v.0[j];
            }
        }
        out
    }

    pub fn norm_max(&self) -> f64 {
        self.cols
            .iter()
            .flat_map(|c| c.0.iter())
            .fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn commutator(&self, other: &CMat5) -> CMat5 {
        *self * *other - *other * *self
    }

    /// Residual ‖Aᵀη + ηA‖_max of membership in the complexified Lorentz
    /// Lie algebra so(4,1)ᶜ.
    pub fn lie_algebra_residual(&self) -> f64 {
        let sig = super::SIGNATURE;
        let mut worst = 0.0f64;
        for i in 0..5 {
            for j in 0..5 {
                // (Aᵀη)_{ij} = A_{ji} η_{jj}; (ηA)_{ij} = η_{ii} A_{ij}
                let v = self.get(j, i) * sig[j] + self.get(i, j) * sig[i];
                worst = worst.max(v.norm());
            }
        }
        worst
    }
}

impl Mul for CMat5 {
    type Output = CMat5;
    fn mul(self, rhs: CMat5) -> CMat5 {
        let mut out = CMat5::zero();
        for j in 0..5 {
            out.cols[j] = self.mul_cvec(&rhs.cols[j]);
        }
        out
    }
}

impl Add for CMat5 {
    type Output = CMat5;
    fn add(self, rhs: CMat5) -> CMat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] + rhs.cols[j];
        }
        out
    }
}

impl Sub for CMat5 {
    type Output = CMat5;
    fn sub(self, rhs: CMat5) -> CMat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] - rhs.cols[j];
        }
        out
    }
}

impl Mul<C64> for CMat5 {
    type Output = CMat5;
    fn mul(self, s: C64) -> CMat5 {
        let mut out = self;
        for j in 0..5 {
            out.cols[j] = out.cols[j] * s;
        }
        out
    }
}
