//! Points of S³, deterministic sampling, and stereographic projection to ℝ³.
//!
//! Orientation convention: S³ is oriented as the boundary of the unit ball in
//! ℝ⁴ with the outward normal first, i.e. a tangent frame `(a, b, c)` at `s`
//! is positive iff `det[s, a, b, c] > 0`. [`Stereographic`] always builds its
//! frame so that the projection is orientation preserving onto standard ℝ³.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec4 = [f64; 4];
pub type Vec3 = [f64; 3];

pub fn dot4(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm4(a: &Vec4) -> f64 {
    dot4(a, a).sqrt()
}

pub fn dist4(a: &Vec4, b: &Vec4) -> f64 {
    norm4(&sub4(a, b))
}

pub fn sub4(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn scale4(a: &Vec4, c: f64) -> Vec4 {
    a.map(|t| t * c)
}

pub fn axpy4(a: &Vec4, c: f64, b: &Vec4) -> Vec4 {
    [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn det3(m: &[Vec3; 3]) -> f64 {
    dot3(&m[0], &cross3(&m[1], &m[2]))
}

/// Determinant of the 4×4 matrix whose rows are `r`.
pub fn det4(r: &[Vec4; 4]) -> f64 {
    let mut total = 0.0;
    for col in 0..4 {
        let minor: [Vec3; 3] = std::array::from_fn(|i| {
            let row = &r[i + 1];
            let mut m = [0.0; 3];
            let mut k = 0;
            for (j, val) in row.iter().enumerate() {
                if j != col {
                    m[k] = *val;
                    k += 1;
                }
            }
            m
        });
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * r[0][col] * det3(&minor);
    }
    total
}

/// The vector `c` with `c · w = det[r0; r1; r2; w]` for all `w`.
pub fn cross4(r: &[Vec4; 3]) -> Vec4 {
    std::array::from_fn(|k| {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        det4(&[r[0], r[1], r[2], e])
    })
}

/// A point of the unit 3-sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint(Vec4);

impl SpherePoint {
    /// Radially projects a nonzero vector onto S³.
    pub fn normalize(v: Vec4) -> Option<Self> {
        let n = norm4(&v);
        (n > 1e-300 && n.is_finite()).then(|| Self(scale4(&v, 1.0 / n)))
    }

    /// Accepts `v` only if it already lies on S³ to within 1e-9.
    pub fn new(v: Vec4) -> Option<Self> {
        ((norm4(&v) - 1.0).abs() < 1e-9).then_some(Self(v))
    }

    pub fn coords(&self) -> &Vec4 {
        &self.0
    }

    pub fn antipode(&self) -> Self {
        Self(scale4(&self.0, -1.0))
    }
}

/// Maps the unit box `[0,1)³` onto S³ through Hopf coordinates.
///
/// The map pushes Lebesgue measure on the box forward to the uniform measure
/// on S³ (total volume 2π²), which is why it is used both for low-discrepancy
/// sampling and for the importance grid of the helicity integral.
pub fn hopf_box_to_sphere(t: f64, a: f64, b: f64) -> Vec4 {
    let (sa, ca) = (2.0 * PI * a).sin_cos();
    let (sb, cb) = (2.0 * PI * b).sin_cos();
    let r1 = (1.0 - t).max(0.0).sqrt();
    let r2 = t.max(0.0).sqrt();
    [r1 * ca, r1 * sa, r2 * cb, r2 * sb]
}

pub const SPHERE_VOLUME: f64 = 2.0 * PI * PI;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// The first `n` points of a Halton (2, 3, 5) sequence mapped onto S³.
pub fn halton_sphere(n: usize) -> Vec<SpherePoint> {
    (1..=n as u64)
        .map(|i| {
            SpherePoint(hopf_box_to_sphere(
                radical_inverse(i, 2),
                radical_inverse(i, 3),
                radical_inverse(i, 5),
            ))
        })
        .collect()
}

/// Stereographic projection of S³ minus a pole onto ℝ³.
#[derive(Clone, Debug)]
pub struct Stereographic {
    pole: Vec4,
    frame: [Vec4; 3],
}

impl Stereographic {
    pub fn new(pole: SpherePoint) -> Self {
        let n = *pole.coords();
        let mut frame: Vec<Vec4> = Vec::with_capacity(3);
        // Gram-Schmidt against the pole, taking standard basis vectors in
        // order of least alignment with it.
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()));
        for &k in &order {
            if frame.len() == 3 {
                break;
            }
            let mut e = [0.0; 4];
            e[k] = 1.0;
            e = axpy4(&e, -dot4(&e, &n), &n);
            for f in &frame {
                e = axpy4(&e, -dot4(&e, f), f);
            }
            let len = norm4(&e);
            if len > 1e-6 {
                frame.push(scale4(&e, 1.0 / len));
            }
        }
        let mut frame: [Vec4; 3] = [frame[0], frame[1], frame[2]];
        // Orientation preserving iff det[n, e1, e2, e3] < 0 (at the antipode
        // the outward normal is -n and de_i maps to e_i / 2).
        if det4(&[n, frame[0], frame[1], frame[2]]) > 0.0 {
            frame[2] = scale4(&frame[2], -1.0);
        }
        Self { pole: n, frame }
    }

    pub fn pole(&self) -> SpherePoint {
        SpherePoint(self.pole)
    }

    pub fn forward(&self, s: &SpherePoint) -> Result<Vec3> {
        let s = s.coords();
        let denom = 1.0 - dot4(s, &self.pole);
        if denom < 1e-14 {
            return Err(Error::AtPole);
        }
        Ok(self.frame.map(|e| dot4(s, &e) / denom))
    }

    pub fn inverse(&self, x: &Vec3) -> SpherePoint {
        let r2 = dot3(x, x);
        let d = r2 + 1.0;
        let mut s = scale4(&self.pole, (r2 - 1.0) / d);
        for (xi, e) in x.iter().zip(&self.frame) {
            s = axpy4(&s, 2.0 * xi / d, e);
        }
        SpherePoint(s)
    }

    /// Columns `∂s/∂X_j` of the inverse projection's 4×3 Jacobian.
    pub fn inverse_jacobian(&self, x: &Vec3) -> [Vec4; 3] {
        let r2 = dot3(x, x);
        let d = r2 + 1.0;
        let mut num = scale4(&self.pole, r2 - 1.0);
        for (xi, e) in x.iter().zip(&self.frame) {
            num = axpy4(&num, 2.0 * xi, e);
        }
        std::array::from_fn(|j| {
            let dn = axpy4(&scale4(&self.pole, 2.0 * x[j]), 2.0, &self.frame[j]);
            let top = axpy4(&scale4(&dn, d), -2.0 * x[j], &num);
            scale4(&top, 1.0 / (d * d))
        })
    }

    /// Length scale factor of the inverse projection at `x`.
    pub fn conformal_factor(x: &Vec3) -> f64 {
        2.0 / (1.0 + dot3(x, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pole() -> SpherePoint {
        SpherePoint::normalize([0.3, -0.5, 0.2, 0.7]).unwrap()
    }

    #[test]
    fn antipode_maps_to_origin() {
        let st = Stereographic::new(pole());
        let x = st.forward(&pole().antipode()).unwrap();
        assert!(norm3(&x) < 1e-12);
        assert_eq!(st.forward(&pole()), Err(Error::AtPole));
    }

    #[test]
    fn round_trip() {
        let st = Stereographic::new(pole());
        for s in halton_sphere(200) {
            let x = st.forward(&s).unwrap();
            let back = st.inverse(&x);
            assert!(dist4(back.coords(), s.coords()) < 1e-12);
        }
    }

    #[test]
    fn equator_maps_to_unit_sphere() {
        let st = Stereographic::new(pole());
        let n = *pole().coords();
        for s in halton_sphere(50) {
            let e = axpy4(s.coords(), -dot4(s.coords(), &n), &n);
            let e = SpherePoint::normalize(e).unwrap();
            assert!((norm3(&st.forward(&e).unwrap()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_and_orientation() {
        let st = Stereographic::new(pole());
        let x = [0.4, -0.8, 1.3];
        let jac = st.inverse_jacobian(&x);
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = scale4(&sub4(st.inverse(&xp).coords(), st.inverse(&xm).coords()), 0.5 / h);
            assert!(dist4(&fd, &jac[j]) < 1e-8);
        }
        let s = *st.inverse(&x).coords();
        assert!(det4(&[s, jac[0], jac[1], jac[2]]) > 0.0);
        // Conformality: columns orthogonal with length 2/(1+|x|^2).
        let lam = Stereographic::conformal_factor(&x);
        for i in 0..3 {
            assert!((norm4(&jac[i]) - lam).abs() < 1e-12);
            for k in 0..i {
                assert!(dot4(&jac[i], &jac[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halton_points_are_on_sphere_and_spread() {
        let pts = halton_sphere(4000);
        let mean = pts.iter().fold([0.0; 4], |acc, p| axpy4(&acc, 1.0, p.coords()));
        for p in &pts {
            assert!((norm4(p.coords()) - 1.0).abs() < 1e-12);
        }
        assert!(norm4(&mean) / 4000.0 < 0.02);
    }

    #[test]
    fn cross4_is_orthogonal() {
        let r = [[1.0, 2.0, 0.5, -1.0], [0.0, 1.0, 3.0, 2.0], [2.0, -1.0, 1.0, 0.0]];
        let c = cross4(&r);
        for row in &r {
            assert!(dot4(row, &c).abs() < 1e-12);
        }
        assert!(det4(&[r[0], r[1], r[2], c]) > 0.0);
    }
}
