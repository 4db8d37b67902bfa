//! Small fixed-size vectors and matrices.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Canonical basis vector `e_j`, `j` in `0..3`.
    pub fn basis(j: usize) -> Self {
        let mut v = [T::zero(); 3];
        v[j] = T::one();
        Self::from(v)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Self {
        self.scale(T::one() / self.norm())
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_diff(self, o: Self) -> T {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl<T: Real> From<[T; 3]> for Vec3<T> {
    fn from(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Real> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn new(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::new([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn scalar(s: T) -> Self {
        let mut r = Self::identity();
        for i in 0..3 {
            r.m[i][i] = s;
        }
        r
    }

    /// The antipodal map `x -> -x`.
    pub fn antipodal() -> Self {
        Self::scalar(-T::one())
    }

    /// Right-handed rotation by `angle` about `axis` (Rodrigues).
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let k = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Self::new([
            [
                c + k.x * k.x * t,
                k.x * k.y * t - k.z * s,
                k.x * k.z * t + k.y * s,
            ],
            [
                k.y * k.x * t + k.z * s,
                c + k.y * k.y * t,
                k.y * k.z * t - k.x * s,
            ],
            [
                k.z * k.x * t - k.y * s,
                k.z * k.y * t + k.x * s,
                c + k.z * k.z * t,
            ],
        ])
    }

    pub fn transpose(&self) -> Self {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[j][i];
            }
        }
        r
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Self::new(r)
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let r = |i: usize| self.m[i][0] * v.x + self.m[i][1] * v.y + self.m[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn scale(&self, s: T) -> Self {
        let mut r = *self;
        r.m.iter_mut().flatten().for_each(|e| *e = *e * s);
        r
    }

    /// Largest entry of `|M^T M - I|`.
    pub fn orthogonality_defect(&self) -> T {
        let p = self.transpose().mul_mat(self);
        let id = Self::identity();
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((p.m[i][j] - id.m[i][j]).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        let e = |j| Vec3::<f64>::basis(j);
        assert_eq!(e(0).cross(e(1)), e(2));
        assert_eq!(e(1).cross(e(2)), e(0));
    }

    #[test]
    fn rotation_is_orthogonal_with_unit_determinant() {
        let r = Mat3::<f64>::rotation(Vec3::new(1.0, -2.0, 0.5), 0.7);
        assert!(r.orthogonality_defect() < 1e-15);
        assert!((r.det() - 1.0).abs() < 1e-15);
        let q = Mat3::rotation(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        assert!(
            q.mul_vec(Vec3::new(1.0, 0.0, 0.0))
                .max_abs_diff(Vec3::new(0.0, 1.0, 0.0))
                < 1e-15
        );
    }
}
