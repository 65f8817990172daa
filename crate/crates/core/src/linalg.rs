//! Small dense complex linear algebra on 2x2 and 3x3 matrices.

use crate::projgeom::{C64, ONE, ZERO};

pub type V2 = [C64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2(pub [[C64; 2]; 2]);

impl M2 {
    pub const IDENTITY: M2 = M2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn from_cols(a: V2, b: V2) -> Self {
        M2([[a[0], b[0]], [a[1], b[1]]])
    }

    pub fn col(&self, j: usize) -> V2 {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn mul(&self, o: &M2) -> M2 {
        let a = &self.0;
        let b = &o.0;
        M2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn apply(&self, v: &V2) -> V2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn sub(&self, o: &M2) -> M2 {
        let mut r = self.0;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e -= o.0[i][j];
            }
        }
        M2(r)
    }

    pub fn scale(&self, s: C64) -> M2 {
        M2(self.0.map(|row| row.map(|e| e * s)))
    }

    pub fn inverse(&self) -> Option<M2> {
        let d = self.det();
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let a = &self.0;
        Some(M2([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]))
    }

    pub fn solve(&self, b: &V2) -> Option<V2> {
        self.inverse().map(|inv| inv.apply(b))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Singular values `(s_max, s_min)`.
    pub fn singular_values(&self) -> (f64, f64) {
        let f2 = self.frobenius().powi(2);
        let d = self.det().norm();
        // s1^2 + s2^2 = f2, s1 s2 = d
        let disc = ((f2 * f2 - 4.0 * d * d).max(0.0)).sqrt();
        let s1 = ((f2 + disc) / 2.0).sqrt();
        let s2 = if s1 > 0.0 { d / s1 } else { 0.0 };
        (s1, s2)
    }

    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Eigenvalues ordered by decreasing modulus.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - 4.0 * d).sqrt();
        // avoid cancellation: pick the root with the larger modulus first
        let q = if (t + disc).norm() >= (t - disc).norm() { (t + disc) / 2.0 } else { (t - disc) / 2.0 };
        let other = if q.norm() > 0.0 { d / q } else { t - q };
        if q.norm() >= other.norm() {
            (q, other)
        } else {
            (other, q)
        }
    }

    /// Unit eigenvector for eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: C64) -> V2 {
        let a = self.0[0][0] - lambda;
        let b = self.0[0][1];
        let c = self.0[1][0];
        let d = self.0[1][1] - lambda;
        // null vector of [[a, b], [c, d]]: use the row with the larger norm
        let v = if a.norm_sqr() + b.norm_sqr() >= c.norm_sqr() + d.norm_sqr() {
            if a.norm() + b.norm() == 0.0 { [ONE, ZERO] } else { [b, -a] }
        } else {
            [d, -c]
        };
        normalize2(&v)
    }
}

pub fn norm2(v: &V2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn normalize2(v: &V2) -> V2 {
    let n = norm2(v);
    [v[0] / n, v[1] / n]
}

/// Hermitian inner product `<a, b> = sum a_i conj(b_i)`.
pub fn inner2(a: &V2, b: &V2) -> C64 {
    a[0] * b[0].conj() + a[1] * b[1].conj()
}

/// Sine of the angle between two complex lines in C^2.
pub fn line_angle_sin(a: &V2, b: &V2) -> f64 {
    let a = normalize2(a);
    let b = normalize2(b);
    (a[0] * b[1] - a[1] * b[0]).norm().min(1.0)
}

/// One step of the complex QR (Gram–Schmidt) re-orthonormalization used by
/// the Lyapunov cocycle: returns `(Q', |R_11|, |R_22|)` with `M Q = Q' R`.
pub fn qr_step(m: &M2, q: &M2) -> (M2, f64, f64) {
    let prod = m.mul(q);
    let a = prod.col(0);
    let b = prod.col(1);
    let r11 = norm2(&a);
    let e1 = if r11 > 0.0 { [a[0] / r11, a[1] / r11] } else { [ONE, ZERO] };
    let proj = inner2(&b, &e1);
    let w = [b[0] - proj * e1[0], b[1] - proj * e1[1]];
    let r22 = norm2(&w);
    let e2 = if r22 > 1e-300 * (1.0 + r11) {
        [w[0] / r22, w[1] / r22]
    } else {
        // orthogonal complement of e1
        [-e1[1].conj(), e1[0].conj()]
    };
    (M2::from_cols(e1, e2), r11, r22)
}

pub fn det3(m: &[[C64; 3]; 3]) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
