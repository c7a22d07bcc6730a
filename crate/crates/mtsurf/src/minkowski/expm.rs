//! Matrix exponential by scaling-and-squaring with the Padé(13) approximant
//! (Higham 2005). For 5×5 real matrices this costs a handful of products and
//! one linear solve and delivers near machine-precision relative accuracy.

use super::mat::Mat5;

// Padé(13) numerator coefficients b₀..b₁₃ (Higham 2005, Table 10.4 scheme).
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371920351148152;

/// exp(M) for a real 5×5 matrix.
pub fn expm(m: &Mat5) -> Mat5 {
    let norm = m.norm_one();
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = *m * (1.0 / (1u64 << s) as f64);

    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a2 * a4;
    let id = Mat5::identity();

    // U = A [A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I]
    let w1 = a6 * B[13] + a4 * B[11] + a2 * B[9];
    let u = a * (a6 * w1 + a6 * B[7] + a4 * B[5] + a2 * B[3] + id * B[1]);
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let w2 = a6 * B[12] + a4 * B[10] + a2 * B[8];
    let v = a6 * w2 + a6 * B[6] + a4 * B[4] + a2 * B[2] + id * B[0];

    // exp(A) ≈ (V - U)⁻¹ (V + U)
    let mut r = (v - u)
        .inverse()
        .expect("Pade denominator is nonsingular for scaled inputs")
        * (v + u);

    for _ in 0..s {
        r = r * r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::so41_membership_residual;

    #[test]
    fn exp_zero_is_identity() {
        assert!((expm(&Mat5::zero()) - Mat5::identity()).norm_max() < 1e-15);
    }

    #[test]
    fn exp_diagonal() {
        let mut d = Mat5::zero();
        let vals = [0.3, -1.7, 2.0, 0.0, -0.2];
        for (k, &v) in vals.iter().enumerate() {
            d.set(k, k, v);
        }
        let e = expm(&d);
        for (k, &v) in vals.iter().enumerate() {
            assert!((e.get(k, k) - v.exp()).abs() < 1e-14 * v.exp().max(1.0));
        }
        assert!(e.get(0, 1).abs() < 1e-16);
    }

    #[test]
    fn exp_rotation_block() {
        // generator of a rotation in the (x0,x1)-plane by angle t
        let t = 1.23456;
        let mut g = Mat5::zero();
        g.set(0, 1, -t);
        g.set(1, 0, t);
        let e = expm(&g);
        assert!((e.get(0, 0) - t.cos()).abs() < 1e-14);
        assert!((e.get(1, 0) - t.sin()).abs() < 1e-14);
        assert!((e.get(0, 1) + t.sin()).abs() < 1e-14);
    }

    #[test]
    fn exp_boost_generator_lands_in_group() {
        // generator of a boost in the (x3,x4)-plane: exp = cosh/sinh block
        let s = 2.4;
        let mut g = Mat5::zero();
        g.set(3, 4, s);
        g.set(4, 3, s);
        let e = expm(&g);
        assert!((e.get(3, 3) - s.cosh()).abs() < 1e-12 * s.cosh());
        assert!((e.get(3, 4) - s.sinh()).abs() < 1e-12 * s.cosh());
        assert!(so41_membership_residual(&e) < 1e-12 * s.cosh() * s.cosh());
    }

    #[test]
    fn exp_additivity_for_commuting_arguments() {
        // same generator at two scales: exp(a G) exp(b G) = exp((a+b) G)
        let mut g = Mat5::zero();
        g.set(0, 1, -0.8);
        g.set(1, 0, 0.8);
        g.set(2, 3, 0.5);
        g.set(3, 2, -0.5);
        let lhs = expm(&(g * 0.7)) * expm(&(g * 1.9));
        let rhs = expm(&(g * 2.6));
        assert!((lhs - rhs).norm_max() < 1e-13);
    }

    #[test]
    fn scaling_branch_large_norm() {
        let mut g = Mat5::zero();
        g.set(0, 1, -20.0);
        g.set(1, 0, 20.0);
        let e = expm(&g);
        assert!((e.get(0, 0) - 20.0f64.cos()).abs() < 2e-12);
    }
}
