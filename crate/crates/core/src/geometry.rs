//! Planar geometry: points, simplices, circumcenters, robust predicates and
//! convex clipping used by the conservative projection.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Rotation by -90 degrees: the right-hand normal of a direction.
    #[inline]
    pub fn perp_right(self) -> Self {
        Self::new(self.y, -self.x)
    }

    /// Rotation by +90 degrees.
    #[inline]
    pub fn perp_left(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    #[inline]
    pub fn midpoint(self, o: Self) -> Self {
        Self::new((self.x + o.x) * T::half(), (self.y + o.y) * T::half())
    }

    #[inline]
    pub fn to_f64(self) -> Vec2<f64> {
        Vec2::new(self.x.to_f64_lossy(), self.y.to_f64_lossy())
    }

    #[inline]
    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }

    #[inline]
    fn coord(self) -> robust::Coord<f64> {
        robust::Coord { x: self.x.to_f64_lossy(), y: self.y.to_f64_lossy() }
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Scalar> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Symmetric 2x2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Scalar> Tensor2<T> {
    pub fn isotropic(k: T) -> Self {
        Self { xx: k, xy: T::zero(), yy: k }
    }

    #[inline]
    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// `aᵀ K b`
    #[inline]
    pub fn bilinear(&self, a: Vec2<T>, b: Vec2<T>) -> T {
        a.dot(self.apply(b))
    }

    pub fn eigenvalues(&self) -> (T, T) {
        let tr = self.xx + self.yy;
        let det = self.xx * self.yy - self.xy * self.xy;
        let disc = (tr * tr * T::lit(0.25) - det).max(T::zero()).sqrt();
        (tr * T::half() - disc, tr * T::half() + disc)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.eigenvalues().0 > T::zero()
    }
}

/// Sign of the orientation of `(a, b, c)`: positive for counter-clockwise.
/// Exact (adaptive-precision) evaluation.
#[inline]
pub fn orient2d<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
#[inline]
pub fn incircle<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> f64 {
    robust::incircle(a.coord(), b.coord(), c.coord(), d.coord())
}

/// Signed area, positive for counter-clockwise vertex order.
#[inline]
pub fn signed_area<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).cross(c - a) * T::half()
}

/// Circumcenter of a triangle.
pub fn circumcenter<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
    if orient2d(a, b, c) == 0.0 {
        return Err(GeometryError::Degenerate);
    }
    let ba = b - a;
    let ca = c - a;
    let d = T::two() * ba.cross(ca);
    let b2 = ba.norm2();
    let c2 = ca.norm2();
    let ux = (ca.y * b2 - ba.y * c2) / d;
    let uy = (ba.x * c2 - ca.x * b2) / d;
    Ok(a + Vec2::new(ux, uy))
}

/// Circumcenter of a segment (its midpoint).
#[inline]
pub fn segment_circumcenter<T: Scalar>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    a.midpoint(b)
}

/// Inradius-to-circumradius ratio scaled so an equilateral triangle scores 1.
pub fn radius_ratio<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area = signed_area(a, b, c);
    if area <= T::zero() {
        return T::zero();
    }
    let s = (la + lb + lc) * T::half();
    let r_in = area / s;
    let r_circ = la * lb * lc / (T::lit(4.0) * area);
    T::two() * r_in / r_circ
}

/// Ratio of longest to shortest edge.
pub fn edge_ratio<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    let l = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
    let max = l[0].max(l[1]).max(l[2]);
    let min = l[0].min(l[1]).min(l[2]);
    if min <= T::zero() {
        T::infinity()
    } else {
        max / min
    }
}

/// Signed polygon area (shoelace), positive for counter-clockwise order.
pub fn polygon_area<T: Scalar>(poly: &[Vec2<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let o = poly[0];
    let mut acc = T::zero();
    for i in 1..poly.len() - 1 {
        acc += (poly[i] - o).cross(poly[i + 1] - o);
    }
    acc * T::half()
}

/// Clips a convex polygon by the half-plane to the left of the directed
/// line `a -> b` (Sutherland-Hodgman step).
fn clip_half_plane<T: Scalar>(poly: &[Vec2<T>], a: Vec2<T>, b: Vec2<T>) -> Vec<Vec2<T>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    if n == 0 {
        return out;
    }
    let side = |p: Vec2<T>| orient2d(a, b, p);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let sp = side(p);
        let sq = side(q);
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            let d = b - a;
            let fp = d.cross(p - a);
            let fq = d.cross(q - a);
            let t = fp / (fp - fq);
            out.push(p.lerp(q, t));
        }
    }
    out
}

/// Area of the intersection of two counter-clockwise triangles.
pub fn triangle_intersection_area<T: Scalar>(t1: [Vec2<T>; 3], t2: [Vec2<T>; 3]) -> T {
    let mut poly: Vec<Vec2<T>> = t1.to_vec();
    for i in 0..3 {
        poly = clip_half_plane(&poly, t2[i], t2[(i + 1) % 3]);
        if poly.len() < 3 {
            return T::zero();
        }
    }
    polygon_area(&poly).max(T::zero())
}

/// Closed point-in-triangle test for a counter-clockwise triangle.
pub fn point_in_triangle<T: Scalar>(p: Vec2<T>, t: [Vec2<T>; 3]) -> bool {
    orient2d(t[0], t[1], p) >= 0.0 && orient2d(t[1], t[2], p) >= 0.0 && orient2d(t[2], t[0], p) >= 0.0
}

/// Whether the open segments `p1-p2` and `q1-q2` cross properly.
pub fn segments_cross<T: Scalar>(p1: Vec2<T>, p2: Vec2<T>, q1: Vec2<T>, q2: Vec2<T>) -> bool {
    let d1 = orient2d(p1, p2, q1);
    let d2 = orient2d(p1, p2, q2);
    let d3 = orient2d(q1, q2, p1);
    let d4 = orient2d(q1, q2, p2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Parameter range `(t0, t1)` of the segment `a + t (b - a)`, `t in [0,1]`,
/// that lies inside the counter-clockwise triangle, if any.
pub fn clip_segment_to_triangle<T: Scalar>(a: Vec2<T>, b: Vec2<T>, tri: [Vec2<T>; 3]) -> Option<(T, T)> {
    let mut t0 = T::zero();
    let mut t1 = T::one();
    let d = b - a;
    for i in 0..3 {
        let e0 = tri[i];
        let e1 = tri[(i + 1) % 3];
        let e = e1 - e0;
        // inside: e x (p - e0) >= 0
        let f0 = e.cross(a - e0);
        let fd = e.cross(d);
        if fd == T::zero() {
            if f0 < T::zero() {
                return None;
            }
            continue;
        }
        let t = -f0 / fd;
        if fd > T::zero() {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    #[test]
    fn circumcenter_right_triangle_is_hypotenuse_midpoint() {
        let c = circumcenter(v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)).unwrap();
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circumcenter_isosceles() {
        // |c - p_i|^2 equal: x = 1, (y)^2 + 1 = (3 - y)^2 -> y = 4/3
        let c = circumcenter(v(0.0, 0.0), v(2.0, 0.0), v(1.0, 3.0)).unwrap();
        assert!((c.x - 1.0).abs() < 1e-15);
        assert!((c.y - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn circumcenter_equilateral_is_centroid() {
        let s3 = 3f64.sqrt();
        let (a, b, c) = (v(0.0, 0.0), v(1.0, 0.0), v(0.5, s3 / 2.0));
        let cc = circumcenter(a, b, c).unwrap();
        let centroid = v(0.5, s3 / 6.0);
        assert!((cc - centroid).norm() < 1e-15);
    }

    #[test]
    fn circumcenter_rejects_collinear() {
        assert_eq!(circumcenter(v(0.0, 0.0), v(1.0, 1.0), v(2.0, 2.0)), Err(GeometryError::Degenerate));
    }

    #[test]
    fn circumcenter_f32() {
        let c = circumcenter(Vec2::new(0f32, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 3.0)).unwrap();
        assert!((c.y - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn intersection_of_identical_triangles() {
        let t = [v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)];
        assert!((triangle_intersection_area(t, t) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intersection_of_halves() {
        let t1 = [v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)];
        let t2 = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0)];
        // overlap is triangle (0,0),(1,0),(0.5,0.5)
        assert!((triangle_intersection_area(t1, t2) - 0.25).abs() < 1e-15);
        let far = [v(5.0, 5.0), v(6.0, 5.0), v(5.0, 6.0)];
        assert_eq!(triangle_intersection_area(t1, far), 0.0);
    }

    #[test]
    fn radius_ratio_equilateral_is_one() {
        let s3 = 3f64.sqrt();
        let r = radius_ratio(v(0.0, 0.0), v(1.0, 0.0), v(0.5, s3 / 2.0));
        assert!((r - 1.0).abs() < 1e-12);
        let sliver = radius_ratio(v(0.0, 0.0), v(1.0, 0.0), v(0.5, 0.01));
        assert!(sliver < 0.1);
    }

    #[test]
    fn segment_clip() {
        let tri = [v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)];
        let (t0, t1) = clip_segment_to_triangle(v(-1.0, 0.25), v(1.0, 0.25), tri).unwrap();
        assert!((t0 - 0.5).abs() < 1e-15 && (t1 - 0.875).abs() < 1e-15);
        assert!(clip_segment_to_triangle(v(-1.0, 2.0), v(1.0, 2.0), tri).is_none());
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_cross(v(0.0, 0.0), v(1.0, 1.0), v(0.0, 1.0), v(1.0, 0.0)));
        assert!(!segments_cross(v(0.0, 0.0), v(1.0, 1.0), v(1.0, 1.0), v(2.0, 0.0)));
    }
}
