//! Moving conforming triangulation with an embedded interface polyline.

mod generate;
mod locate;
mod motion;
mod remesh;
mod tri;

pub use generate::{
    build_fracture_mesh, build_strip_mesh, build_unit_square_lattice, delaunay_mesh, FractureMeshOptions, MeshMode,
    StripSize,
};
pub use locate::{cell_velocities, sample_cell, segment_average, segment_weights, CellLocator, SegmentAverage};
pub use motion::{compute_velocities, MotionOptions};
pub use remesh::{remesh, Remeshed, RemeshLog, RemeshOptions, VelocityFn};
pub use tri::{CellData, ComponentRecord, IfaceData, Location, TriMesh};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::{circumcenter, edge_ratio, orient2d, radius_ratio, signed_area, Vec2};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    #[default]
    Bulk,
    /// Resolved fracture subdomain (full-dimensional mode only).
    Fracture,
}

impl Region {
    pub fn index(self) -> usize {
        match self {
            Region::Bulk => 0,
            Region::Fracture => 1,
        }
    }
}

/// How a vertex is allowed to move and be edited.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexRole {
    Corner,
    DomainSide(Side),
    Free,
    /// Interior vertex of the interface polyline.
    Interface,
    /// Interface tip, `-1` or `+1`.
    Tip(i8),
    /// On a long side of the resolved fracture; the sign selects the side.
    StripSide(i8),
    /// On a flat end of the resolved fracture.
    StripEnd(i8),
    /// Corner of the resolved fracture: `(end, side)`.
    StripCorner(i8, i8),
    /// Inside the resolved fracture.
    StripInterior,
}

impl VertexRole {
    pub fn is_fixed(self) -> bool {
        matches!(self, VertexRole::Corner | VertexRole::DomainSide(_))
    }
}

/// Tag of a constrained edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeTag {
    Interface,
    Strip,
    Domain(Side),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary(Side),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetKind {
    Interior,
    /// Coincides with the interface element of the given index.
    Interface(usize),
    Boundary(Side),
}

/// A triangle edge. `v` is ordered counter-clockwise in the plus cell, so
/// the normal `(v1 - v0)` rotated by -90° points from plus to minus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Facet {
    pub v: [usize; 2],
    pub plus: usize,
    pub minus: Neighbor,
    pub kind: FacetKind,
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain<T> {
    pub lo: Vec2<T>,
    pub hi: Vec2<T>,
}

impl<T: Scalar> Domain<T> {
    pub fn unit() -> Self {
        Self { lo: Vec2::zero(), hi: Vec2::new(T::one(), T::one()) }
    }

    /// Side whose outward normal best matches `n`.
    pub fn side_of_normal(n: Vec2<T>) -> Side {
        if n.x.abs() >= n.y.abs() {
            if n.x > T::zero() {
                Side::Right
            } else {
                Side::Left
            }
        } else if n.y > T::zero() {
            Side::Top
        } else {
            Side::Bottom
        }
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn area(&self) -> T {
        (self.hi.x - self.lo.x) * (self.hi.y - self.lo.y)
    }
}

/// Cell-wise saturation and pressure on the bulk triangles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BulkState<T> {
    pub saturation: Vec<T>,
    pub pressure: Vec<T>,
}

/// Element-wise values on the interface.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterfaceState<T> {
    pub saturation: Vec<T>,
    pub pressure: Vec<T>,
    pub aperture: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct MovingMesh<T> {
    pub domain: Domain<T>,
    pub points: Vec<Vec2<T>>,
    pub velocities: Vec<Vec2<T>>,
    pub roles: Vec<VertexRole>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Interface elements, ordered from tip `-1` to tip `+1`.
    pub interface: Vec<[usize; 2]>,
    pub constrained: HashMap<(usize, usize), EdgeTag>,
    pub facets: Vec<Facet>,
    /// Facet index of edge `i` (opposite vertex `i`) of each cell.
    pub cell_facets: Vec<[usize; 3]>,
    /// Facet index of each interface element.
    pub interface_facets: Vec<usize>,
}

/// Geometric quantities of a mesh at one vertex configuration.
#[derive(Clone, Debug)]
pub struct MeshGeometry<T> {
    pub cell_area: Vec<T>,
    pub cell_center: Vec<Vec2<T>>,
    /// Area-weighted normal from plus to minus.
    pub facet_normal: Vec<Vec2<T>>,
    pub facet_mid: Vec<Vec2<T>>,
    pub iface_length: Vec<T>,
    pub iface_mid: Vec<Vec2<T>>,
    pub iface_tangent: Vec<Vec2<T>>,
}

impl<T: Scalar> MovingMesh<T> {
    /// Assembles a mesh and derives facets and the ordered interface.
    pub fn new(
        domain: Domain<T>,
        points: Vec<Vec2<T>>,
        roles: Vec<VertexRole>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        constrained: HashMap<(usize, usize), EdgeTag>,
    ) -> Result<Self, MeshError> {
        let n = points.len();
        let mut mesh = Self {
            domain,
            velocities: vec![Vec2::zero(); n],
            points,
            roles,
            triangles,
            regions,
            interface: Vec::new(),
            constrained,
            facets: Vec::new(),
            cell_facets: Vec::new(),
            interface_facets: Vec::new(),
        };
        mesh.rebuild()?;
        Ok(mesh)
    }

    pub fn num_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn num_interface(&self) -> usize {
        self.interface.len()
    }

    pub fn triangle(&self, c: usize, pts: &[Vec2<T>]) -> [Vec2<T>; 3] {
        let t = self.triangles[c];
        [pts[t[0]], pts[t[1]], pts[t[2]]]
    }

    /// Positions after moving every vertex for `dt` with its velocity.
    pub fn predicted(&self, dt: T) -> Vec<Vec2<T>> {
        self.points.iter().zip(&self.velocities).map(|(p, v)| *p + *v * dt).collect()
    }

    /// Recomputes facets and the interface ordering from the triangles.
    pub fn rebuild(&mut self) -> Result<(), MeshError> {
        let mut half: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(self.triangles.len() * 3);
        for (c, t) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let a = t[(i + 1) % 3];
                let b = t[(i + 2) % 3];
                if half.insert((a, b), (c, i)).is_some() {
                    return Err(MeshError::ConnectivityMismatch(format!("duplicate half-edge ({a}, {b})")));
                }
            }
        }
        self.interface = self.order_interface()?;
        let mut iface_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, &[a, b]) in self.interface.iter().enumerate() {
            iface_of.insert((a, b), e);
        }
        self.facets.clear();
        self.cell_facets = vec![[usize::MAX; 3]; self.triangles.len()];
        self.interface_facets = vec![usize::MAX; self.interface.len()];
        for (c, t) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                if self.cell_facets[c][i] != usize::MAX {
                    continue;
                }
                let a = t[(i + 1) % 3];
                let b = t[(i + 2) % 3];
                let fid = self.facets.len();
                let facet = match half.get(&(b, a)).copied() {
                    Some((c2, j)) => {
                        self.cell_facets[c2][j] = fid;
                        let tag = self.constrained.get(&edge_key(a, b)).copied();
                        let iface = if tag == Some(EdgeTag::Interface) {
                            Some(iface_of.get(&(a, b)).map(|&e| (e, true)).or_else(|| iface_of.get(&(b, a)).map(|&e| (e, false))))
                        } else {
                            None
                        };
                        match iface {
                            Some(Some((e, forward))) => {
                                self.interface_facets[e] = fid;
                                // plus cell lies left of the element direction
                                let (plus, minus, v) = if forward { (c, c2, [a, b]) } else { (c2, c, [b, a]) };
                                Facet { v, plus, minus: Neighbor::Cell(minus), kind: FacetKind::Interface(e) }
                            }
                            Some(None) => {
                                return Err(MeshError::ConnectivityMismatch(format!(
                                    "interface edge ({a}, {b}) not on the interface polyline"
                                )))
                            }
                            None => {
                                let (plus, minus, v) = if c < c2 { (c, c2, [a, b]) } else { (c2, c, [b, a]) };
                                Facet { v, plus, minus: Neighbor::Cell(minus), kind: FacetKind::Interior }
                            }
                        }
                    }
                    None => {
                        let n = (self.points[b] - self.points[a]).perp_right();
                        let side = match self.constrained.get(&edge_key(a, b)) {
                            Some(EdgeTag::Domain(s)) => *s,
                            _ => Domain::side_of_normal(n),
                        };
                        Facet { v: [a, b], plus: c, minus: Neighbor::Boundary(side), kind: FacetKind::Boundary(side) }
                    }
                };
                self.cell_facets[c][i] = fid;
                self.facets.push(facet);
            }
        }
        if self.interface_facets.iter().any(|&f| f == usize::MAX) {
            return Err(MeshError::ConnectivityMismatch("interface element without bulk facet".into()));
        }
        Ok(())
    }

    fn order_interface(&self) -> Result<Vec<[usize; 2]>, MeshError> {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for (&(a, b), tag) in &self.constrained {
            if *tag == EdgeTag::Interface {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        if adj.is_empty() {
            return Ok(Vec::new());
        }
        let start = (0..self.roles.len())
            .find(|&v| self.roles[v] == VertexRole::Tip(-1) && adj.contains_key(&v))
            .ok_or_else(|| MeshError::ConnectivityMismatch("interface without tip".into()))?;
        let mut out = Vec::with_capacity(adj.len());
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next: Vec<usize> = adj[&cur].iter().copied().filter(|&n| n != prev).collect();
            match next.len() {
                0 => break,
                1 => {
                    out.push([cur, next[0]]);
                    prev = cur;
                    cur = next[0];
                }
                _ => return Err(MeshError::ConnectivityMismatch("branching interface".into())),
            }
            if out.len() > adj.len() {
                return Err(MeshError::ConnectivityMismatch("cyclic interface".into()));
            }
        }
        if out.len() + 1 != adj.len() {
            return Err(MeshError::ConnectivityMismatch("disconnected interface".into()));
        }
        Ok(out)
    }

    /// Geometry at the given vertex positions.
    pub fn geometry_at(&self, pts: &[Vec2<T>]) -> Result<MeshGeometry<T>, MeshError> {
        let nc = self.triangles.len();
        let mut cell_area = Vec::with_capacity(nc);
        let mut cell_center = Vec::with_capacity(nc);
        let mut bad = Vec::new();
        for (c, t) in self.triangles.iter().enumerate() {
            let (a, b, d) = (pts[t[0]], pts[t[1]], pts[t[2]]);
            if orient2d(a, b, d) <= 0.0 {
                bad.push(c);
                cell_area.push(T::zero());
                cell_center.push(a);
                continue;
            }
            cell_area.push(signed_area(a, b, d));
            cell_center.push(circumcenter(a, b, d)?);
        }
        if !bad.is_empty() {
            return Err(MeshError::WouldDegenerate(bad));
        }
        let facet_normal = self.facets.iter().map(|f| (pts[f.v[1]] - pts[f.v[0]]).perp_right()).collect();
        let facet_mid = self.facets.iter().map(|f| pts[f.v[0]].midpoint(pts[f.v[1]])).collect();
        let mut iface_length = Vec::with_capacity(self.interface.len());
        let mut iface_mid = Vec::with_capacity(self.interface.len());
        let mut iface_tangent = Vec::with_capacity(self.interface.len());
        for &[a, b] in &self.interface {
            let d = pts[b] - pts[a];
            let l = d.norm();
            iface_length.push(l);
            iface_mid.push(pts[a].midpoint(pts[b]));
            iface_tangent.push(d / l);
        }
        Ok(MeshGeometry { cell_area, cell_center, facet_normal, facet_mid, iface_length, iface_mid, iface_tangent })
    }

    pub fn geometry(&self) -> Result<MeshGeometry<T>, MeshError> {
        self.geometry_at(&self.points)
    }

    /// Swept area of every facet between two vertex configurations, signed
    /// positive when the plus cell grows.
    pub fn facet_swept_volumes(&self, p0: &[Vec2<T>], p1: &[Vec2<T>]) -> Vec<T> {
        self.facets
            .iter()
            .map(|f| swept_volume(p0[f.v[0]], p0[f.v[1]], p1[f.v[0]], p1[f.v[1]]))
            .collect()
    }

    /// Largest relative violation of the discrete geometric conservation law.
    pub fn dgcl_residual(&self, p0: &[Vec2<T>], p1: &[Vec2<T>]) -> T {
        let sv = self.facet_swept_volumes(p0, p1);
        let mut sum = vec![T::zero(); self.triangles.len()];
        for (f, facet) in self.facets.iter().enumerate() {
            sum[facet.plus] += sv[f];
            if let Neighbor::Cell(m) = facet.minus {
                sum[m] -= sv[f];
            }
        }
        let mut worst = T::zero();
        for (c, t) in self.triangles.iter().enumerate() {
            let a0 = signed_area(p0[t[0]], p0[t[1]], p0[t[2]]);
            let a1 = signed_area(p1[t[0]], p1[t[1]], p1[t[2]]);
            worst = worst.max((sum[c] - (a1 - a0)).abs() / a1.abs());
        }
        worst
    }

    /// Moves all vertices by `dt` times their velocity. Refuses when any
    /// triangle would lose positive orientation.
    pub fn move_vertices(&mut self, dt: T) -> Result<(), MeshError> {
        let next = self.predicted(dt);
        let bad = self.inverted_cells(&next);
        if !bad.is_empty() {
            return Err(MeshError::WouldDegenerate(bad));
        }
        self.points = next;
        Ok(())
    }

    pub fn inverted_cells(&self, pts: &[Vec2<T>]) -> Vec<usize> {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) <= 0.0)
            .map(|(c, _)| c)
            .collect()
    }

    /// Total area of cells in a region.
    pub fn region_area(&self, region: Region) -> T {
        self.triangles
            .iter()
            .zip(&self.regions)
            .filter(|(_, r)| **r == region)
            .map(|(t, _)| signed_area(self.points[t[0]], self.points[t[1]], self.points[t[2]]))
            .sum()
    }

    /// Cells adjacent through facets, including across interface facets.
    pub fn cell_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(3); self.triangles.len()];
        for f in &self.facets {
            if let Neighbor::Cell(m) = f.minus {
                out[f.plus].push(m);
                out[m].push(f.plus);
            }
        }
        out
    }

    /// Unique undirected edges with their lengths at `pts`.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        self.facets.iter().map(|f| f.v).collect()
    }
}

/// Signed area swept by the segment `a0 b0` moving linearly to `a1 b1`,
/// positive when it moves along `(b - a)` rotated by -90°.
///
/// Exact for linear vertex motion: the swept region is the ruled surface
/// between both positions, whose signed area is the shoelace area of the
/// quadrilateral `a0 b0 b1 a1` up to orientation.
#[inline]
pub fn swept_volume<T: Scalar>(a0: Vec2<T>, b0: Vec2<T>, a1: Vec2<T>, b1: Vec2<T>) -> T {
    // relative to a0 to limit cancellation
    let b0r = b0 - a0;
    let a1r = a1 - a0;
    let b1r = b1 - a0;
    // shoelace of (a0, b0, b1, a1) with a0 at the origin
    let area = b0r.cross(b1r) + b1r.cross(a1r);
    -area * T::half()
}

/// Thresholds of the remeshing indicator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityThresholds<T> {
    pub min_radius_ratio: T,
    pub max_edge_ratio: T,
    /// Edges shorter than this multiple of the local target are coarsened.
    pub short_edge: T,
    /// Edges longer than this multiple of the local target are bisected.
    pub long_edge: T,
}

impl<T: Scalar> Default for QualityThresholds<T> {
    fn default() -> Self {
        Self {
            min_radius_ratio: T::lit(0.25),
            max_edge_ratio: T::lit(4.0),
            short_edge: T::lit(0.45),
            long_edge: T::lit(1.6),
        }
    }
}

/// Target edge length as a function of position.
pub trait SizeField<T>: Sync {
    fn size(&self, p: Vec2<T>) -> T;
}

#[derive(Clone, Copy, Debug)]
pub struct UniformSize<T>(pub T);

impl<T: Scalar> SizeField<T> for UniformSize<T> {
    fn size(&self, _: Vec2<T>) -> T {
        self.0
    }
}

#[derive(Clone, Debug, Default)]
pub struct QualityReport<T> {
    /// Radius ratio per cell (1 for equilateral, 0 for degenerate).
    pub score: Vec<T>,
    pub bad_cells: Vec<usize>,
    pub inverted: Vec<usize>,
    pub short_edges: Vec<[usize; 2]>,
    pub long_edges: Vec<[usize; 2]>,
}

impl<T> QualityReport<T> {
    pub fn needs_remesh(&self) -> bool {
        !(self.bad_cells.is_empty() && self.inverted.is_empty() && self.short_edges.is_empty() && self.long_edges.is_empty())
    }
}

/// Flags cells and edges violating the thresholds at the given positions.
pub fn quality_indicator<T: Scalar>(
    mesh: &MovingMesh<T>,
    pts: &[Vec2<T>],
    size: &dyn SizeField<T>,
    th: &QualityThresholds<T>,
) -> QualityReport<T> {
    let mut rep = QualityReport { score: Vec::with_capacity(mesh.num_cells()), ..Default::default() };
    for (c, t) in mesh.triangles.iter().enumerate() {
        let (a, b, d) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        if orient2d(a, b, d) <= 0.0 {
            rep.inverted.push(c);
            rep.score.push(T::zero());
            continue;
        }
        let rr = radius_ratio(a, b, d);
        rep.score.push(rr);
        if rr < th.min_radius_ratio || edge_ratio(a, b, d) > th.max_edge_ratio {
            rep.bad_cells.push(c);
        }
    }
    for f in &mesh.facets {
        let (a, b) = (pts[f.v[0]], pts[f.v[1]]);
        let len = (b - a).norm();
        let target = size.size(a.midpoint(b));
        if len < th.short_edge * target {
            rep.short_edges.push(f.v);
        } else if len > th.long_edge * target {
            rep.long_edges.push(f.v);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    fn single() -> MovingMesh<f64> {
        let mut c = HashMap::new();
        c.insert(edge_key(0, 1), EdgeTag::Domain(Side::Bottom));
        MovingMesh::new(
            Domain::unit(),
            vec![v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)],
            vec![VertexRole::Corner; 3],
            vec![[0, 1, 2]],
            vec![Region::Bulk],
            c,
        )
        .unwrap()
    }

    #[test]
    fn swept_volume_examples() {
        let a = v(0.0, 0.0);
        let b = v(1.0, 0.0);
        assert_eq!(swept_volume(a, b, a, b), 0.0);
        // moving along +y is against the -90° normal (0,-1)
        let up = swept_volume(a, b, a + v(0.0, 1.0), b + v(0.0, 1.0));
        assert!((up + 1.0).abs() < 1e-15);
        let half = swept_volume(a, b, a + v(0.0, 1.0), b);
        assert!((half.abs() - 0.5).abs() < 1e-15);
        // dense time quadrature of s·n over the moving segment
        let n = 2000;
        let mut q = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) / n as f64;
            let vel = v(0.0, 1.0) * (1.0 - s);
            q += vel.dot(v(0.0, -1.0)) / n as f64;
        }
        assert!((half - q).abs() < 1e-12);
    }

    #[test]
    fn move_vertices_examples() {
        let mut m = single();
        m.move_vertices(1.0).unwrap();
        assert_eq!(m.points, single().points);
        m.velocities[2] = v(0.0, 1.0);
        let p0 = m.points.clone();
        m.move_vertices(1.0).unwrap();
        let g = m.geometry().unwrap();
        assert!((g.cell_area[0] - 1.0).abs() < 1e-15);
        assert!(m.dgcl_residual(&p0, &m.points) < 1e-15);
        m.velocities[2] = v(0.0, -3.0);
        assert_eq!(m.move_vertices(1.0), Err(MeshError::WouldDegenerate(vec![0])));
    }

    #[test]
    fn facet_orientation_single() {
        let m = single();
        assert_eq!(m.facets.len(), 3);
        for f in &m.facets {
            assert!(matches!(f.kind, FacetKind::Boundary(_)));
        }
        let bottom = m.facets.iter().find(|f| f.v == [0, 1]).unwrap();
        assert_eq!(bottom.kind, FacetKind::Boundary(Side::Bottom));
    }

    #[test]
    fn quality_flags_sliver() {
        let mut c = HashMap::new();
        c.insert(edge_key(0, 1), EdgeTag::Domain(Side::Bottom));
        let m = MovingMesh::new(
            Domain::unit(),
            vec![v(0.0, 0.0), v(1.0, 0.0), v(0.5, 0.01)],
            vec![VertexRole::Free; 3],
            vec![[0, 1, 2]],
            vec![Region::Bulk],
            c,
        )
        .unwrap();
        let rep = quality_indicator(&m, &m.points, &UniformSize(1.0), &QualityThresholds::default());
        assert_eq!(rep.bad_cells, vec![0]);
    }
}
