//! Initial meshes: the unit square with the interface seeded along `Γ(0)`
//! (reduced mode) or with the fracture resolved as a thin subdomain (full
//! mode), plus small structured meshes used by tests.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::{circumcenter, radius_ratio, Vec2};
use crate::scalar::Scalar;
use crate::schedule::FractureSchedule;

use super::tri::{IfaceData, Location, TriMesh, NONE};
use super::{edge_key, Domain, EdgeTag, MovingMesh, Region, SizeField, UniformSize, VertexRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshMode {
    /// Interface as a polyline of bulk facets.
    Reduced,
    /// Fracture resolved as the subdomain `|w| <= d/2`.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractureMeshOptions<T> {
    /// Bulk target edge length.
    pub h: T,
    pub mode: MeshMode,
    /// Refinement factor at the fracture boundary in full mode.
    pub refinement: T,
    /// Growth of the target size with distance from the fracture.
    pub grading: T,
    /// Geometry time.
    pub time: T,
    /// Radius ratio below which generation refines a triangle.
    pub min_radius_ratio: T,
    pub max_insertions: usize,
}

impl<T: Scalar> FractureMeshOptions<T> {
    pub fn new(h: T, mode: MeshMode) -> Self {
        Self {
            h,
            mode,
            refinement: T::lit(4.0),
            grading: T::lit(0.3),
            time: T::zero(),
            min_radius_ratio: T::lit(0.45),
            max_insertions: 500_000,
        }
    }
}

/// Target size graded away from the resolved fracture.
#[derive(Clone, Copy, Debug)]
pub struct StripSize<T> {
    pub schedule: FractureSchedule<T>,
    pub time: T,
    pub h: T,
    pub h_fine: T,
    pub grading: T,
}

impl<T: Scalar> StripSize<T> {
    /// Distance from `p` to the fracture subdomain at `self.time`.
    pub fn distance(&self, p: Vec2<T>) -> T {
        let (u, w) = self.schedule.local(p);
        let r = self.schedule.half_length(self.time);
        let du = (u.abs() - r).max(T::zero());
        let half = self.schedule.aperture_at_radius(u.abs().min(r), self.time) * T::half();
        let dw = (w.abs() - half).max(T::zero());
        (du * du + dw * dw).sqrt()
    }
}

impl<T: Scalar> SizeField<T> for StripSize<T> {
    fn size(&self, p: Vec2<T>) -> T {
        (self.h_fine + self.grading * self.distance(p)).min(self.h)
    }
}

/// Conforming mesh of the unit square for a diagonal fracture.
///
/// Bulk vertices sit on an equilateral lattice aligned with the fracture
/// line. In reduced mode the interface vertices are lattice points of the
/// row through the center. In full mode the fracture boundary is sampled at
/// `h / refinement` and the transition is filled by Delaunay refinement.
pub fn build_fracture_mesh<T: Scalar>(
    schedule: &FractureSchedule<T>,
    opts: &FractureMeshOptions<T>,
) -> Result<MovingMesh<T>, MeshError> {
    let domain = Domain::unit();
    let mut tm = TriMesh::new_domain(domain);
    let t = opts.time;
    let r = schedule.half_length(t);
    insert_boundary(&mut tm, opts.h);

    // lattice spacing matching the interface subdivision
    let n_iface = (T::two() * r / opts.h).round().to_usize().unwrap_or(2).max(2);
    let hl = T::two() * r / T::lit(n_iface as f64);
    let row = hl * T::lit(3f64.sqrt() / 2.0);
    let size_fine = opts.h / opts.refinement;
    let strip = StripSize { schedule: *schedule, time: t, h: opts.h, h_fine: size_fine, grading: opts.grading };

    match opts.mode {
        MeshMode::Reduced => {
            let mut chain = Vec::with_capacity(n_iface + 1);
            for k in 0..=n_iface {
                let u = -r + hl * T::lit(k as f64);
                let role = match k {
                    0 => VertexRole::Tip(-1),
                    k if k == n_iface => VertexRole::Tip(1),
                    _ => VertexRole::Interface,
                };
                let p = if k == 0 {
                    schedule.tip(-1, t)
                } else if k == n_iface {
                    schedule.tip(1, t)
                } else {
                    schedule.global(u, T::zero())
                };
                let v = tm
                    .insert_point(p, role)
                    .ok_or_else(|| MeshError::Irreparable("interface vertex insertion failed".into()))?;
                chain.push(v);
            }
            insert_lattice(&mut tm, schedule, hl, row, |u, w| {
                !(w == T::zero() && u.abs() < r + hl * T::half())
            });
            for k in 0..n_iface {
                tm.enforce_segment(chain[k], chain[k + 1], EdgeTag::Interface, VertexRole::Interface, 0)?;
            }
            refine(&mut tm, &UniformSize(opts.h), opts, &|_| false)?;
            let keys: Vec<(usize, usize)> = tm
                .constrained
                .iter()
                .filter(|(_, tag)| **tag == EdgeTag::Interface)
                .map(|(k, _)| *k)
                .collect();
            for k in keys {
                tm.iface.insert(k, IfaceData::default());
            }
        }
        MeshMode::Full => {
            let (sides, ends) = insert_strip(&mut tm, schedule, t, size_fine)?;
            insert_lattice(&mut tm, schedule, hl, row, |u, w| {
                let p = schedule.global(u, w);
                strip.distance(p) >= opts.h
            });
            for chain in &sides {
                let s = match tm.roles[chain[1]] {
                    VertexRole::StripSide(s) => s,
                    _ => 1,
                };
                for k in 0..chain.len() - 1 {
                    tm.enforce_segment(chain[k], chain[k + 1], EdgeTag::Strip, VertexRole::StripSide(s), 0)?;
                }
            }
            for (e, chain) in ends.iter().enumerate() {
                let e = if e == 0 { -1 } else { 1 };
                for k in 0..chain.len() - 1 {
                    tm.enforce_segment(chain[k], chain[k + 1], EdgeTag::Strip, VertexRole::StripEnd(e), 0)?;
                }
            }
            let inside = |p: Vec2<T>| strip.distance(p) == T::zero();
            refine(&mut tm, &strip, opts, &inside)?;
            snap_strip(&mut tm, schedule, t);
            mark_fracture_region(&mut tm, schedule.center)?;
        }
    }
    let (mesh, _, _) = tm.to_mesh()?;
    Ok(mesh)
}

/// Boundary vertices at spacing close to `h` on every side.
fn insert_boundary<T: Scalar>(tm: &mut TriMesh<T>, h: T) {
    let d = tm.domain;
    let nx = ((d.hi.x - d.lo.x) / h).ceil().to_usize().unwrap_or(1).max(1);
    let ny = ((d.hi.y - d.lo.y) / h).ceil().to_usize().unwrap_or(1).max(1);
    for k in 1..nx {
        let x = d.lo.x + (d.hi.x - d.lo.x) * T::lit(k as f64 / nx as f64);
        tm.insert_point(Vec2::new(x, d.lo.y), VertexRole::DomainSide(super::Side::Bottom));
        tm.insert_point(Vec2::new(x, d.hi.y), VertexRole::DomainSide(super::Side::Top));
    }
    for k in 1..ny {
        let y = d.lo.y + (d.hi.y - d.lo.y) * T::lit(k as f64 / ny as f64);
        tm.insert_point(Vec2::new(d.lo.x, y), VertexRole::DomainSide(super::Side::Left));
        tm.insert_point(Vec2::new(d.hi.x, y), VertexRole::DomainSide(super::Side::Right));
    }
}

/// Equilateral lattice in fracture coordinates; rows parallel to the
/// fracture, row 0 through the center. Points closer than `0.6 hl` to the
/// domain boundary or rejected by `keep` are skipped.
fn insert_lattice<T: Scalar>(
    tm: &mut TriMesh<T>,
    schedule: &FractureSchedule<T>,
    hl: T,
    row: T,
    keep: impl Fn(T, T) -> bool,
) {
    let d = tm.domain;
    let reach = ((d.hi - d.lo).norm() * T::half() / row).ceil().to_i64().unwrap_or(0) + 1;
    let ureach = ((d.hi - d.lo).norm() * T::half() / hl).ceil().to_i64().unwrap_or(0) + 1;
    let margin = hl * T::lit(0.6);
    for j in -reach..=reach {
        let w = row * T::lit(j as f64);
        let off = if j.rem_euclid(2) == 1 { hl * T::half() } else { T::zero() };
        for i in -ureach..=ureach {
            let u = hl * T::lit(i as f64) + off;
            if !keep(u, w) {
                continue;
            }
            let p = schedule.global(u, w);
            if p.x - d.lo.x < margin || d.hi.x - p.x < margin || p.y - d.lo.y < margin || d.hi.y - p.y < margin {
                continue;
            }
            tm.insert_point(p, VertexRole::Free);
        }
    }
}

/// Boundary vertices of the resolved fracture. Returns the two side chains
/// (from end -1 to end +1) and the two end chains (from side -1 to side +1).
#[allow(clippy::type_complexity)]
fn insert_strip<T: Scalar>(
    tm: &mut TriMesh<T>,
    schedule: &FractureSchedule<T>,
    t: T,
    h: T,
) -> Result<([Vec<usize>; 2], [Vec<usize>; 2]), MeshError> {
    let r = schedule.half_length(t);
    let ns = (T::two() * r / h).ceil().to_usize().unwrap_or(1).max(1);
    let half_end = schedule.aperture_factor(t) * T::half();
    let ne = (T::two() * half_end / h).ceil().to_usize().unwrap_or(1).max(1);
    let fail = || MeshError::Irreparable("fracture boundary vertex insertion failed".into());
    let mut sides: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut corner = [[NONE; 2]; 2];
    for (si, s) in [-1i8, 1].into_iter().enumerate() {
        for k in 0..=ns {
            let u = -r + T::two() * r * T::lit(k as f64 / ns as f64);
            let (u, role) = match k {
                0 => (-r, VertexRole::StripCorner(-1, s)),
                k if k == ns => (r, VertexRole::StripCorner(1, s)),
                _ => (u, VertexRole::StripSide(s)),
            };
            let w = T::lit(s as f64) * schedule.aperture_at_radius(u.abs(), t) * T::half();
            let v = tm.insert_point(schedule.global(u, w), role).ok_or_else(fail)?;
            if k == 0 {
                corner[0][si] = v;
            }
            if k == ns {
                corner[1][si] = v;
            }
            sides[si].push(v);
        }
    }
    let mut ends: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (ei, e) in [-1i8, 1].into_iter().enumerate() {
        let u = T::lit(e as f64) * r;
        ends[ei].push(corner[ei][0]);
        for m in 1..ne {
            let w = -half_end + T::two() * half_end * T::lit(m as f64 / ne as f64);
            let v = tm.insert_point(schedule.global(u, w), VertexRole::StripEnd(e)).ok_or_else(fail)?;
            ends[ei].push(v);
        }
        ends[ei].push(corner[ei][1]);
    }
    Ok((sides, ends))
}

/// Splits constrained edges facing an angle of at least 90°, so every
/// circumcenter lies on the same side of a constrained edge as its cell.
fn fix_encroached<T: Scalar>(tm: &mut TriMesh<T>, budget: &mut usize) {
    loop {
        let mut hits = Vec::new();
        for t in tm.alive_triangles() {
            for i in 0..3 {
                let (a, b) = tm.edge(t, i);
                if !tm.is_constrained(a, b) {
                    continue;
                }
                let c = tm.tris[t][i];
                if (tm.pts[a] - tm.pts[c]).dot(tm.pts[b] - tm.pts[c]) <= T::zero() {
                    hits.push((a, b));
                }
            }
        }
        if hits.is_empty() || *budget == 0 {
            return;
        }
        let mut progress = false;
        for (a, b) in hits {
            if let Some((t, i)) = tm.find_edge(a, b) {
                if tm.split_constrained(t, i).is_some() {
                    progress = true;
                    *budget = budget.saturating_sub(1);
                }
            }
        }
        if !progress {
            return;
        }
    }
}

/// Delaunay refinement by circumcenter insertion until every triangle meets
/// the radius-ratio bound and its circumradius is below `0.8 size`.
fn refine<T: Scalar>(
    tm: &mut TriMesh<T>,
    size: &dyn SizeField<T>,
    opts: &FractureMeshOptions<T>,
    inside: &dyn Fn(Vec2<T>) -> bool,
) -> Result<(), MeshError> {
    let mut budget = opts.max_insertions;
    let mut skip: HashSet<[usize; 3]> = HashSet::new();
    let role_of = |_: &TriMesh<T>, p: Vec2<T>, _: usize| {
        if inside(p) {
            VertexRole::StripInterior
        } else {
            VertexRole::Free
        }
    };
    let is_bad = |tm: &TriMesh<T>, t: usize| {
        let v = tm.tris[t];
        let (a, b, c) = (tm.pts[v[0]], tm.pts[v[1]], tm.pts[v[2]]);
        if radius_ratio(a, b, c) < opts.min_radius_ratio {
            return true;
        }
        match circumcenter(a, b, c) {
            Ok(cc) => {
                let g = (a + b + c) / T::three();
                (cc - a).norm() > T::lit(0.8) * size.size(g)
            }
            Err(_) => true,
        }
    };
    loop {
        fix_encroached(tm, &mut budget);
        let bad: Vec<usize> = tm.alive_triangles().filter(|&t| is_bad(tm, t)).collect();
        let mut progress = false;
        for t in bad {
            if budget == 0 {
                break;
            }
            if !tm.alive[t] || !is_bad(tm, t) {
                continue;
            }
            let mut key = tm.tris[t];
            key.sort_unstable();
            if skip.contains(&key) {
                continue;
            }
            if tm.insert_circumcenter(t, &role_of).is_some() {
                budget -= 1;
                progress = true;
            } else {
                skip.insert(key);
            }
        }
        if !progress || budget == 0 {
            break;
        }
    }
    if budget == 0 {
        log::warn!("mesh refinement stopped at the insertion cap");
    }
    Ok(())
}

/// Moves fracture side vertices created by edge splits onto the analytic
/// boundary when that keeps their stars valid.
fn snap_strip<T: Scalar>(tm: &mut TriMesh<T>, schedule: &FractureSchedule<T>, t: T) {
    for v in 0..tm.pts.len() {
        if !tm.vertex_alive[v] {
            continue;
        }
        let s = match tm.roles[v] {
            VertexRole::StripSide(s) => s,
            _ => continue,
        };
        let (u, _) = schedule.local(tm.pts[v]);
        let w = T::lit(s as f64) * schedule.aperture_at_radius(u.abs(), t) * T::half();
        let target = schedule.global(u, w);
        let old = tm.pts[v];
        tm.pts[v] = target;
        let ok = tm.star(v).iter().all(|&c| {
            let x = tm.tris[c];
            tm.valid(x[0], x[1], x[2])
        });
        if !ok {
            tm.pts[v] = old;
        }
    }
}

/// Marks the cells enclosed by fracture boundary edges around `seed`.
fn mark_fracture_region<T: Scalar>(tm: &mut TriMesh<T>, seed: Vec2<T>) -> Result<(), MeshError> {
    let start = match tm.locate(seed) {
        Location::Inside(t) | Location::OnEdge(t, _) => t,
        Location::OnVertex(v) => tm.star(v)[0],
        Location::Outside => return Err(MeshError::Irreparable("fracture center outside the domain".into())),
    };
    let mut queue = VecDeque::from([start]);
    tm.cells[start].region = Region::Fracture;
    while let Some(t) = queue.pop_front() {
        for i in 0..3 {
            let nb = tm.nbr[t][i];
            if nb == NONE || tm.cells[nb].region == Region::Fracture {
                continue;
            }
            let (a, b) = tm.edge(t, i);
            if tm.constrained.get(&edge_key(a, b)) == Some(&EdgeTag::Strip) {
                continue;
            }
            tm.cells[nb].region = Region::Fracture;
            queue.push_back(nb);
        }
    }
    Ok(())
}

/// Delaunay mesh of the unit square on an equilateral lattice with
/// horizontal rows, `n` cells per side.
pub fn build_unit_square_lattice<T: Scalar>(n: usize) -> Result<MovingMesh<T>, MeshError> {
    let n = n.max(1);
    let h = T::one() / T::lit(n as f64);
    let ny = (T::lit(n as f64) / T::lit(3f64.sqrt() / 2.0)).round().to_usize().unwrap_or(1).max(1);
    let hy = T::one() / T::lit(ny as f64);
    let mut pts = Vec::new();
    for j in 0..=ny {
        let y = hy * T::lit(j as f64);
        if j % 2 == 0 {
            for i in 0..=n {
                pts.push(Vec2::new(h * T::lit(i as f64), y));
            }
        } else {
            pts.push(Vec2::new(T::zero(), y));
            for i in 0..n {
                pts.push(Vec2::new(h * (T::lit(i as f64) + T::half()), y));
            }
            pts.push(Vec2::new(T::one(), y));
        }
    }
    delaunay_mesh(Domain::unit(), &pts)
}

/// A single row of near-equilateral triangles covering `[0, length] x [0, H]`
/// with `H = (√3/2) length / n`; a one-dimensional column for transport tests.
pub fn build_strip_mesh<T: Scalar>(length: T, n: usize) -> Result<MovingMesh<T>, MeshError> {
    let n = n.max(1);
    let h = length / T::lit(n as f64);
    let height = h * T::lit(3f64.sqrt() / 2.0);
    let mut pts = Vec::new();
    for i in 0..=n {
        pts.push(Vec2::new(h * T::lit(i as f64), T::zero()));
    }
    pts.push(Vec2::new(T::zero(), height));
    for i in 0..n {
        pts.push(Vec2::new(h * (T::lit(i as f64) + T::half()), height));
    }
    pts.push(Vec2::new(length, height));
    delaunay_mesh(Domain { lo: Vec2::zero(), hi: Vec2::new(length, height) }, &pts)
}

/// Delaunay triangulation of the given points inside a rectangle (points on
/// the rectangle sides become boundary vertices), with boundary edges split
/// until no boundary edge faces an angle of 90° or more.
pub fn delaunay_mesh<T: Scalar>(domain: Domain<T>, pts: &[Vec2<T>]) -> Result<MovingMesh<T>, MeshError> {
    let mut tm = TriMesh::new_domain(domain);
    for &p in pts {
        tm.insert_point(p, VertexRole::Free);
    }
    let mut budget = 100_000;
    fix_encroached(&mut tm, &mut budget);
    let (mesh, _, _) = tm.to_mesh()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::orient2d;
    use crate::mesh::{quality_indicator, FacetKind, Neighbor, QualityThresholds};

    fn check_delaunay(m: &MovingMesh<f64>) {
        let g = m.geometry().unwrap();
        for (c, t) in m.triangles.iter().enumerate() {
            assert!(orient2d(m.points[t[0]], m.points[t[1]], m.points[t[2]]) > 0.0, "cell {c}");
        }
        // every interior facet has nonnegative circumcenter distance sum
        for (f, facet) in m.facets.iter().enumerate() {
            if let Neighbor::Cell(mn) = facet.minus {
                let n = g.facet_normal[f];
                let d = (g.cell_center[mn] - g.cell_center[facet.plus]).dot(n);
                assert!(d >= -1e-12, "facet {f}: {d}");
            }
        }
    }

    #[test]
    fn lattice_is_delaunay_and_covers_square() {
        let m = build_unit_square_lattice::<f64>(8).unwrap();
        check_delaunay(&m);
        let area: f64 = m.geometry().unwrap().cell_area.iter().sum();
        assert!((area - 1.0).abs() < 1e-13);
        let boundary = m.facets.iter().filter(|f| matches!(f.kind, FacetKind::Boundary(_))).count();
        assert!(boundary >= 32);
    }

    #[test]
    fn strip_is_one_row() {
        let m = build_strip_mesh::<f64>(1.0, 10).unwrap();
        check_delaunay(&m);
        assert_eq!(m.num_cells(), 21);
    }

    #[test]
    fn reduced_mesh_conforms_to_interface() {
        let s = FractureSchedule::<f64>::diagonal(0.01, 0.25, 0.0);
        let m = build_fracture_mesh(&s, &FractureMeshOptions::new(1.0 / 16.0, MeshMode::Reduced)).unwrap();
        check_delaunay(&m);
        assert_eq!(m.num_interface(), 8);
        let first = m.interface[0][0];
        assert_eq!(m.roles[first], VertexRole::Tip(-1));
        assert!((m.points[first] - s.tip(-1, 0.0)).norm() < 1e-15);
        for (e, &f) in m.interface_facets.iter().enumerate() {
            assert_eq!(m.facets[f].kind, FacetKind::Interface(e));
            let [a, b] = m.interface[e];
            let mut k = m.facets[f].v;
            k.sort_unstable();
            let mut l = [a, b];
            l.sort_unstable();
            assert_eq!(k, l);
        }
        let rep = quality_indicator(&m, &m.points, &UniformSize(1.0 / 16.0), &QualityThresholds::default());
        assert!(rep.bad_cells.is_empty(), "{:?}", rep.bad_cells);
    }

    #[test]
    fn full_mesh_resolves_fracture() {
        let s = FractureSchedule::<f64>::diagonal(0.01, 0.25, 0.0);
        let m = build_fracture_mesh(&s, &FractureMeshOptions::new(1.0 / 16.0, MeshMode::Full)).unwrap();
        check_delaunay(&m);
        let exact: f64 = {
            // ∫ d(u) du over [-R, R] by fine midpoint rule
            let n = 20000;
            let r = 0.25;
            (0..n).map(|i| {
                let u = -r + 2.0 * r * (i as f64 + 0.5) / n as f64;
                s.aperture_at_radius(u.abs(), 0.0) * 2.0 * r / n as f64
            }).sum()
        };
        let area = m.region_area(Region::Fracture);
        assert!((area - exact).abs() < 1e-3 * exact, "{area} vs {exact}");
        // fracture boundary vertices on the analytic boundary
        for (v, role) in m.roles.iter().enumerate() {
            if let VertexRole::StripSide(sg) = role {
                let (u, w) = s.local(m.points[v]);
                let target = sg.signum() as f64 * s.aperture_at_radius(u.abs(), 0.0) / 2.0;
                assert!((w - target).abs() < 1e-10);
            }
        }
    }
}
