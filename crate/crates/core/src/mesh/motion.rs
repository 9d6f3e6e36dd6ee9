//! Vertex velocities derived from the fracture schedule.
//!
//! Vertices on the interface or on the resolved fracture boundary hit their
//! exact target positions at `t1`; their tangential motion decays linearly
//! with the distance from the moving tip. Other interior vertices copy the
//! velocity of the nearest such driver, decayed linearly to zero at the
//! blending radius. Domain corners and sides never move.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::scalar::Scalar;
use crate::schedule::FractureSchedule;

use super::VertexRole;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionOptions<T> {
    /// Radius over which driven velocities decay to zero.
    pub blend_radius: T,
}

/// Velocities moving every vertex from its position at `t0` to its target
/// at `t1`. Dead vertices may be passed; they get some finite velocity.
pub fn compute_velocities<T: Scalar>(
    roles: &[VertexRole],
    pts: &[Vec2<T>],
    schedule: &FractureSchedule<T>,
    t0: T,
    t1: T,
    opts: &MotionOptions<T>,
) -> Vec<Vec2<T>> {
    let dt = t1 - t0;
    let mut vel = vec![Vec2::zero(); pts.len()];
    if dt <= T::zero() {
        return vel;
    }
    let rho = opts.blend_radius;
    let r0 = schedule.half_length(t0);
    let r1 = schedule.half_length(t1);
    let shift = r1 - r0;
    let half = |u: T, t: T| schedule.aperture_at_radius(u.abs(), t) * T::half();
    // tangential target of a point at u, decayed from the nearer end
    let slide = |u: T| {
        let e = if u < T::zero() { -T::one() } else { T::one() };
        let dist = (r0 - u.abs()).abs();
        let f = (T::one() - dist / rho).max(T::zero());
        u + e * f * shift
    };
    let mut drivers: Vec<usize> = Vec::new();
    for (v, role) in roles.iter().enumerate() {
        let (u, w) = schedule.local(pts[v]);
        let target = match *role {
            VertexRole::Corner | VertexRole::DomainSide(_) | VertexRole::Free => continue,
            VertexRole::Tip(e) => schedule.tip(e, t1),
            VertexRole::Interface => schedule.global(slide(u), T::zero()),
            VertexRole::StripSide(s) => {
                let u1 = slide(u);
                schedule.global(u1, T::lit(s as f64) * half(u1, t1))
            }
            VertexRole::StripCorner(e, s) => {
                let u1 = T::lit(e as f64) * r1;
                schedule.global(u1, T::lit(s as f64) * half(r1, t1))
            }
            VertexRole::StripEnd(e) => {
                let frac = ratio(w, half(r0, t0));
                schedule.global(T::lit(e as f64) * r1, frac * half(r1, t1))
            }
            VertexRole::StripInterior => {
                let frac = ratio(w, half(u.abs().min(r0), t0));
                let u1 = slide(u);
                schedule.global(u1, frac * half(u1.abs().min(r1), t1))
            }
        };
        let disp = target - pts[v];
        // displacements at roundoff level are kept static
        if disp.norm() > T::lit(4.0) * T::epsilon() * pts[v].norm().max(T::one()) {
            vel[v] = disp / dt;
        }
        drivers.push(v);
    }
    if drivers.is_empty() {
        return vel;
    }
    // bucket drivers on a grid of cell size rho
    let key = |p: Vec2<T>| {
        (
            (p.x / rho).floor().to_i64().unwrap_or(0),
            (p.y / rho).floor().to_i64().unwrap_or(0),
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for &d in &drivers {
        grid.entry(key(pts[d])).or_default().push(d);
    }
    for (v, role) in roles.iter().enumerate() {
        if *role != VertexRole::Free {
            continue;
        }
        let (ki, kj) = key(pts[v]);
        let mut best: Option<(T, usize)> = None;
        for dj in -1..=1 {
            for di in -1..=1 {
                if let Some(list) = grid.get(&(ki + di, kj + dj)) {
                    for &d in list {
                        let dist = (pts[d] - pts[v]).norm();
                        if best.map_or(true, |(bd, bi)| dist < bd || (dist == bd && d < bi)) {
                            best = Some((dist, d));
                        }
                    }
                }
            }
        }
        if let Some((dist, d)) = best {
            let f = (T::one() - dist / rho).max(T::zero());
            vel[v] = vel[d] * f;
        }
    }
    vel
}

fn ratio<T: Scalar>(w: T, half: T) -> T {
    if half > T::zero() {
        (w / half).clamp_to(-T::one(), T::one())
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tip_reaches_schedule() {
        let s = FractureSchedule::<f64>::diagonal(0.01, 0.25, 0.0);
        let pts = vec![s.tip(-1, 0.0), s.tip(1, 0.0), s.center, s.global(0.3, 0.0), s.global(0.3, 0.5)];
        let roles = vec![VertexRole::Tip(-1), VertexRole::Tip(1), VertexRole::Interface, VertexRole::Free, VertexRole::Free];
        let opts = MotionOptions { blend_radius: 0.1 };
        let v = compute_velocities(&roles, &pts, &s, 0.0, 1.0, &opts);
        assert!((pts[1] + v[1] - s.tip(1, 1.0)).norm() < 1e-15);
        assert!((pts[0] + v[0] - s.tip(-1, 1.0)).norm() < 1e-15);
        // far from the tips nothing moves
        assert_eq!(v[2], Vec2::zero());
        assert_eq!(v[4], Vec2::zero());
        // decayed copy of the tip velocity at distance 0.05
        assert!((v[3] - v[1] * 0.5).norm() < 1e-12);
    }

    #[test]
    fn strip_boundary_follows_aperture() {
        let s = FractureSchedule::<f64>::diagonal(0.01, 0.0, 0.005);
        let p = s.global(0.1, 0.5 * s.aperture_at_radius(0.1, 0.0));
        let c = s.global(0.25, -0.5 * s.aperture_at_radius(0.25, 0.0));
        let roles = vec![VertexRole::StripSide(1), VertexRole::StripCorner(1, -1)];
        let v = compute_velocities(&roles, &[p, c], &s, 0.0, 0.5, &MotionOptions { blend_radius: 0.05 });
        let (u, w) = s.local(p + v[0] * 0.5);
        assert!((u - 0.1).abs() < 1e-14);
        assert!((w - 0.5 * s.aperture_at_radius(0.1, 0.5)).abs() < 1e-15);
        let (u, w) = s.local(c + v[1] * 0.5);
        assert!((u - 0.25).abs() < 1e-14);
        assert!((w + 0.5 * s.aperture_factor(0.5)).abs() < 1e-15);
    }
}
