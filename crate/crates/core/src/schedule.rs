//! Prescribed fracture geometry: a straight segment through a fixed center
//! whose half-length and aperture evolve in time.

use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::Vec2;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractureSchedule<T> {
    pub center: Vec2<T>,
    /// Unit tangent `τ`; the interface normal is `τ` rotated by -90°.
    pub direction: Vec2<T>,
    /// Half-length at `t = 0`.
    pub r0: T,
    pub v_prolong: T,
    pub d0: T,
    pub v_squeeze: T,
}

impl<T: Scalar> FractureSchedule<T> {
    /// Diagonal fracture through `(0.5, 0.5)` with `R₀ = 0.25`.
    pub fn diagonal(d0: T, v_prolong: T, v_squeeze: T) -> Self {
        let s = T::half().sqrt();
        Self {
            center: Vec2::new(T::half(), T::half()),
            direction: Vec2::new(s, s),
            r0: T::lit(0.25),
            v_prolong,
            d0,
            v_squeeze,
        }
    }

    /// `R(t) = R₀ + t v_prolong`
    #[inline]
    pub fn half_length(&self, t: T) -> T {
        self.r0 + t * self.v_prolong
    }

    /// `d₀ - t v_squeeze`
    #[inline]
    pub fn aperture_factor(&self, t: T) -> T {
        self.d0 - t * self.v_squeeze
    }

    /// Aperture at distance `r` from the center. The square-root argument is
    /// clamped to `[0, 1]`.
    #[inline]
    pub fn aperture_at_radius(&self, r: T, t: T) -> T {
        let x = r - self.half_length(t);
        self.aperture_factor(t) * (T::one() - x * x).clamp_to(T::zero(), T::one()).sqrt()
    }

    /// Aperture at a point of `Γ(t)`.
    pub fn aperture_at(&self, p: Vec2<T>, t: T) -> Result<T, MeshError> {
        let (u, w) = self.local(p);
        let tol = T::lit(1e-9);
        if w.abs() > tol || u.abs() > self.half_length(t) + tol {
            return Err(MeshError::OffInterface);
        }
        Ok(self.aperture_at_radius(u.abs(), t))
    }

    /// Unit normal `τ` rotated by -90°.
    #[inline]
    pub fn normal(&self) -> Vec2<T> {
        self.direction.perp_right()
    }

    /// Tangential and normal coordinates `(u, w)`: `p = c + u τ + w τ⊥`
    /// with `τ⊥` the +90° rotation of `τ`.
    #[inline]
    pub fn local(&self, p: Vec2<T>) -> (T, T) {
        let d = p - self.center;
        (d.dot(self.direction), d.dot(self.direction.perp_left()))
    }

    #[inline]
    pub fn global(&self, u: T, w: T) -> Vec2<T> {
        self.center + self.direction * u + self.direction.perp_left() * w
    }

    /// Tip position; `end` is `-1` or `+1`.
    #[inline]
    pub fn tip(&self, end: i8, t: T) -> Vec2<T> {
        self.global(T::lit(end as f64) * self.half_length(t), T::zero())
    }

    /// Whether the schedule keeps a positive half-length and aperture on `[0, t_end]`.
    pub fn is_admissible(&self, t_end: T) -> bool {
        let ok = |t: T| self.half_length(t) > T::zero() && self.aperture_factor(t) > T::zero();
        ok(T::zero()) && ok(t_end)
    }
}
