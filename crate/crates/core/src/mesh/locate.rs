//! Point location and averaging of cell-wise fields along segments.

use crate::geometry::{clip_segment_to_triangle, orient2d, Vec2};
use crate::scalar::Scalar;

use super::{BulkState, MeshGeometry, MovingMesh, Neighbor, Region};

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Clone, Debug)]
pub struct CellLocator<T> {
    lo: Vec2<T>,
    cell: T,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
}

impl<T: Scalar> CellLocator<T> {
    pub fn new(mesh: &MovingMesh<T>, pts: &[Vec2<T>]) -> Self {
        let lo = mesh.domain.lo;
        let ext = mesh.domain.hi - lo;
        let n = ((mesh.num_cells() as f64).sqrt().ceil() as usize).max(1);
        let cell = ext.x.max(ext.y) / T::lit(n as f64);
        let nx = ((ext.x / cell).ceil().to_usize().unwrap_or(1)).max(1);
        let ny = ((ext.y / cell).ceil().to_usize().unwrap_or(1)).max(1);
        let mut loc = Self { lo, cell, nx, ny, bins: vec![Vec::new(); nx * ny] };
        for (c, t) in mesh.triangles.iter().enumerate() {
            let p = [pts[t[0]], pts[t[1]], pts[t[2]]];
            let min = Vec2::new(p[0].x.min(p[1].x).min(p[2].x), p[0].y.min(p[1].y).min(p[2].y));
            let max = Vec2::new(p[0].x.max(p[1].x).max(p[2].x), p[0].y.max(p[1].y).max(p[2].y));
            let (i0, j0) = loc.bin(min);
            let (i1, j1) = loc.bin(max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.bins[j * nx + i].push(c);
                }
            }
        }
        loc
    }

    fn bin(&self, p: Vec2<T>) -> (usize, usize) {
        let f = |x: T, n: usize| {
            let k = (x / self.cell).floor().to_i64().unwrap_or(0);
            k.clamp(0, n as i64 - 1) as usize
        };
        (f(p.x - self.lo.x, self.nx), f(p.y - self.lo.y, self.ny))
    }

    /// Candidate cells whose bounding boxes may overlap the box of `a`, `b`.
    pub fn candidates(&self, a: Vec2<T>, b: Vec2<T>) -> Vec<usize> {
        let (i0, j0) = self.bin(Vec2::new(a.x.min(b.x), a.y.min(b.y)));
        let (i1, j1) = self.bin(Vec2::new(a.x.max(b.x), a.y.max(b.y)));
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.bins[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Lowest-index cell whose closure contains `p`.
    pub fn locate(&self, mesh: &MovingMesh<T>, pts: &[Vec2<T>], p: Vec2<T>) -> Option<usize> {
        let (i, j) = self.bin(p);
        let mut best: Option<usize> = None;
        for &c in &self.bins[j * self.nx + i] {
            let t = mesh.triangles[c];
            if orient2d(pts[t[0]], pts[t[1]], p) >= 0.0
                && orient2d(pts[t[1]], pts[t[2]], p) >= 0.0
                && orient2d(pts[t[2]], pts[t[0]], p) >= 0.0
            {
                best = Some(best.map_or(c, |b: usize| b.min(c)));
            }
        }
        best
    }
}

/// Cell containing `p`, ties broken toward the lower cell index.
pub fn sample_cell<T: Scalar>(mesh: &MovingMesh<T>, p: Vec2<T>) -> Option<usize> {
    CellLocator::new(mesh, &mesh.points).locate(mesh, &mesh.points, p)
}

/// Length-weighted cells crossed by the segment `a-b`; weights sum to the
/// covered fraction of the segment.
pub fn segment_weights<T: Scalar>(
    mesh: &MovingMesh<T>,
    pts: &[Vec2<T>],
    locator: &CellLocator<T>,
    a: Vec2<T>,
    b: Vec2<T>,
) -> Vec<(usize, T)> {
    let mut out = Vec::new();
    for c in locator.candidates(a, b) {
        if let Some((t0, t1)) = clip_segment_to_triangle(a, b, mesh.triangle(c, pts)) {
            if t1 > t0 {
                out.push((c, t1 - t0));
            }
        }
    }
    out
}

/// Averages of a full-dimensional solution across the fracture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentAverage<T> {
    pub saturation: T,
    pub pressure: T,
    /// Tangential component of the reconstructed cell velocity, if given.
    pub velocity: Option<T>,
    /// False when the segment leaves the fracture subdomain.
    pub inside: bool,
}

/// Averages `S`, `P` and optionally the tangential velocity over the segment
/// of length `d` centered at `s` along the unit `normal`.
#[allow(clippy::too_many_arguments)]
pub fn segment_average<T: Scalar>(
    mesh: &MovingMesh<T>,
    pts: &[Vec2<T>],
    locator: &CellLocator<T>,
    bulk: &BulkState<T>,
    cell_velocity: Option<&[Vec2<T>]>,
    s: Vec2<T>,
    d: T,
    normal: Vec2<T>,
) -> SegmentAverage<T> {
    let a = s - normal * (d * T::half());
    let b = s + normal * (d * T::half());
    let w = segment_weights(mesh, pts, locator, a, b);
    let total: T = w.iter().map(|(_, x)| *x).sum();
    let mut inside = total > T::zero();
    let (mut sat, mut pre) = (T::zero(), T::zero());
    let mut vel = T::zero();
    let tangent = normal.perp_left();
    for &(c, x) in &w {
        if mesh.regions[c] != Region::Fracture {
            inside = false;
        }
        sat += bulk.saturation[c] * x;
        pre += bulk.pressure[c] * x;
        if let Some(v) = cell_velocity {
            vel += v[c].dot(tangent) * x;
        }
    }
    if total > T::zero() {
        sat /= total;
        pre /= total;
        vel /= total;
    }
    SegmentAverage { saturation: sat, pressure: pre, velocity: cell_velocity.map(|_| vel), inside }
}

/// Cell velocities reconstructed from integrated facet fluxes (positive from
/// plus to minus): `v_K = Σ_F v_F (m_F - x_K) / |K|`, exact for constant
/// velocity fields.
pub fn cell_velocities<T: Scalar>(mesh: &MovingMesh<T>, geom: &MeshGeometry<T>, facet_flux: &[T]) -> Vec<Vec2<T>> {
    let mut out = vec![Vec2::zero(); mesh.num_cells()];
    for (f, facet) in mesh.facets.iter().enumerate() {
        let m = geom.facet_mid[f];
        out[facet.plus] += (m - geom.cell_center[facet.plus]) * facet_flux[f];
        if let Neighbor::Cell(c) = facet.minus {
            out[c] -= (m - geom.cell_center[c]) * facet_flux[f];
        }
    }
    for (c, v) in out.iter_mut().enumerate() {
        *v = *v / geom.cell_area[c];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_lattice;

    #[test]
    fn sample_tie_break_lower_index() {
        let m = build_unit_square_lattice::<f64>(4).unwrap();
        // a horizontal interior facet, whose midpoint is exactly on it
        let f = m
            .facets
            .iter()
            .find(|f| matches!(f.minus, Neighbor::Cell(_)) && m.points[f.v[0]].y == m.points[f.v[1]].y)
            .unwrap();
        let p = m.points[f.v[0]].midpoint(m.points[f.v[1]]);
        let c = sample_cell(&m, p).unwrap();
        let other = match f.minus {
            Neighbor::Cell(x) => x,
            _ => unreachable!(),
        };
        assert_eq!(c, f.plus.min(other));
    }

    #[test]
    fn segment_average_examples() {
        let mut m = build_unit_square_lattice::<f64>(8).unwrap();
        for r in m.regions.iter_mut() {
            *r = Region::Fracture;
        }
        let loc = CellLocator::new(&m, &m.points);
        let n = m.num_cells();
        let g = m.geometry().unwrap();
        let ones = BulkState { saturation: vec![1.0; n], pressure: vec![0.0; n] };
        let a = segment_average(&m, &m.points, &loc, &ones, None, Vec2::new(0.5, 0.5), 0.3, Vec2::new(0.0, 1.0));
        assert!((a.saturation - 1.0).abs() < 1e-14);
        assert!(a.inside);
        // 0.2 below a lattice row, 0.6 above, segment symmetric about the row
        let y = m.points.iter().map(|p| p.y).min_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs())).unwrap();
        let halves = BulkState {
            saturation: (0..n).map(|c| if g.cell_center[c].y < y { 0.2 } else { 0.6 }).collect(),
            pressure: vec![0.0; n],
        };
        let b = segment_average(&m, &m.points, &loc, &halves, None, Vec2::new(0.31, y), 0.05, Vec2::new(0.0, 1.0));
        assert!((b.saturation - 0.4).abs() < 1e-12, "{}", b.saturation);
    }

    #[test]
    fn constant_velocity_reconstruction() {
        let m = build_unit_square_lattice::<f64>(6).unwrap();
        let g = m.geometry().unwrap();
        let u = Vec2::new(0.3, -1.2);
        let flux: Vec<f64> = g.facet_normal.iter().map(|n| u.dot(*n)).collect();
        let v = cell_velocities(&m, &g, &flux);
        for w in v {
            assert!((w - u).norm() < 1e-12);
        }
    }
}
