//! Remeshing between time steps: coarsening by vertex removal, edge
//! bisection and flips, each followed by a conservative projection of the
//! affected cells.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::{edge_ratio, radius_ratio, Vec2};
use crate::scalar::Scalar;

use super::tri::{ComponentRecord, TriMesh};
use super::{
    quality_indicator, BulkState, InterfaceState, MovingMesh, QualityThresholds, Region, SizeField,
    VertexRole,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemeshOptions<T> {
    pub thresholds: QualityThresholds<T>,
    pub max_passes: usize,
}

impl<T: Scalar> Default for RemeshOptions<T> {
    fn default() -> Self {
        Self { thresholds: QualityThresholds::default(), max_passes: 4 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RemeshLog<T> {
    pub passes: usize,
    pub removed: usize,
    pub inserted: usize,
    pub flips: usize,
    pub components: Vec<ComponentRecord<T>>,
}

impl<T: Scalar> RemeshLog<T> {
    /// Largest relative bulk mass defect over all components.
    pub fn max_bulk_defect(&self) -> T {
        self.components
            .iter()
            .map(|c| {
                let scale = c.old_mass.abs().max(c.old_volume * T::epsilon());
                if scale > T::zero() {
                    (c.new_mass - c.old_mass).abs() / scale
                } else {
                    T::zero()
                }
            })
            .fold(T::zero(), T::max)
    }

    /// Largest relative interface mass defect over all components.
    pub fn max_interface_defect(&self) -> T {
        self.components
            .iter()
            .filter(|c| c.old_iface_mass != T::zero())
            .map(|c| (c.new_iface_mass - c.old_iface_mass).abs() / c.old_iface_mass.abs())
            .fold(T::zero(), T::max)
    }
}

/// Result of [`remesh`] when edits were made.
#[derive(Clone, Debug)]
pub struct Remeshed<T> {
    pub mesh: MovingMesh<T>,
    pub bulk: BulkState<T>,
    pub interface: InterfaceState<T>,
    pub log: RemeshLog<T>,
}

/// Recomputes vertex velocities after topological edits.
pub type VelocityFn<'a, T> = dyn Fn(&[VertexRole], &[Vec2<T>]) -> Vec<Vec2<T>> + 'a;

/// Checks the mesh at its predicted positions `points + dt velocities` and
/// repairs it by local edits at the current positions. Returns `None` when
/// nothing is flagged.
#[allow(clippy::too_many_arguments)]
pub fn remesh<T: Scalar>(
    mesh: &MovingMesh<T>,
    bulk: &BulkState<T>,
    iface: &InterfaceState<T>,
    dt: T,
    porosity: [T; 2],
    size: &dyn SizeField<T>,
    opts: &RemeshOptions<T>,
    velocity: &VelocityFn<'_, T>,
) -> Result<Option<Remeshed<T>>, MeshError> {
    let pred = mesh.predicted(dt);
    if !quality_indicator(mesh, &pred, size, &opts.thresholds).needs_remesh() {
        return Ok(None);
    }
    let mut tm = TriMesh::from_mesh(mesh, bulk, iface, dt, porosity);
    let mut log = RemeshLog::default();
    improve(&mut tm, size, opts, velocity, &mut log);
    log.components = std::mem::take(&mut tm.components);
    let (mesh, bulk, interface) = tm.to_mesh()?;
    let bad = mesh.inverted_cells(&mesh.predicted(dt));
    if !bad.is_empty() {
        return Err(MeshError::WouldDegenerate(bad));
    }
    Ok(Some(Remeshed { mesh, bulk, interface, log }))
}

/// Edge length at predicted positions.
fn pred_len<T: Scalar>(tm: &TriMesh<T>, a: usize, b: usize) -> T {
    (tm.pred(a) - tm.pred(b)).norm()
}

fn unique_edges<T: Scalar>(tm: &TriMesh<T>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for t in tm.alive_triangles() {
        for i in 0..3 {
            let (a, b) = tm.edge(t, i);
            if a < b || tm.nbr[t][i] == super::tri::NONE {
                out.push((a, b));
            }
        }
    }
    out
}

/// Candidate order for removing an endpoint of a short edge.
fn removal_rank(role: VertexRole) -> Option<u8> {
    match role {
        VertexRole::Free | VertexRole::StripInterior => Some(0),
        VertexRole::Interface | VertexRole::StripSide(_) | VertexRole::StripEnd(_) => Some(1),
        VertexRole::DomainSide(_) => Some(2),
        VertexRole::Corner | VertexRole::Tip(_) | VertexRole::StripCorner(..) => None,
    }
}

fn cell_is_bad<T: Scalar>(tm: &TriMesh<T>, t: usize, th: &QualityThresholds<T>) -> bool {
    let v = tm.tris[t];
    if !tm.valid(v[0], v[1], v[2]) {
        return true;
    }
    let (a, b, c) = (tm.pred(v[0]), tm.pred(v[1]), tm.pred(v[2]));
    radius_ratio(a, b, c) < th.min_radius_ratio || edge_ratio(a, b, c) > th.max_edge_ratio
}

fn flagged<T: Scalar>(tm: &TriMesh<T>, size: &dyn SizeField<T>, th: &QualityThresholds<T>) -> bool {
    if tm.alive_triangles().any(|t| cell_is_bad(tm, t, th)) {
        return true;
    }
    unique_edges(tm).into_iter().any(|(a, b)| {
        let l = pred_len(tm, a, b);
        let s = size.size(tm.pred(a).midpoint(tm.pred(b)));
        l < th.short_edge * s || l > th.long_edge * s
    })
}

/// Runs up to `max_passes` rounds of collapse, bisection, cell repair and
/// Delaunay flips on `tm`, refreshing velocities after each round.
pub(crate) fn improve<T: Scalar>(
    tm: &mut TriMesh<T>,
    size: &dyn SizeField<T>,
    opts: &RemeshOptions<T>,
    velocity: &VelocityFn<'_, T>,
    log: &mut RemeshLog<T>,
) {
    let th = &opts.thresholds;
    for _ in 0..opts.max_passes {
        if !flagged(tm, size, th) {
            break;
        }
        log.passes += 1;
        // coarsen
        for (a, b) in unique_edges(tm) {
            if !(tm.vertex_alive[a] && tm.vertex_alive[b]) || tm.find_edge(a, b).is_none() {
                continue;
            }
            let l = pred_len(tm, a, b);
            if l >= th.short_edge * size.size(tm.pred(a).midpoint(tm.pred(b))) {
                continue;
            }
            let mut cand: Vec<(u8, usize)> =
                [a, b].iter().filter_map(|&v| removal_rank(tm.roles[v]).map(|r| (r, v))).collect();
            cand.sort_unstable();
            for (_, v) in cand {
                if tm.remove_vertex(v) {
                    log.removed += 1;
                    break;
                }
            }
        }
        // refine
        for (a, b) in unique_edges(tm) {
            if !(tm.vertex_alive[a] && tm.vertex_alive[b]) {
                continue;
            }
            let l = pred_len(tm, a, b);
            if l <= th.long_edge * size.size(tm.pred(a).midpoint(tm.pred(b))) {
                continue;
            }
            if let Some((t, i)) = tm.find_edge(a, b) {
                let role = tm.constrained_role(t, i).unwrap_or_else(|| interior_role(tm, t));
                if tm.split_edge(t, i, role).is_some() {
                    log.inserted += 1;
                }
            }
        }
        // repair remaining bad cells
        let bad: Vec<usize> = tm.alive_triangles().filter(|&t| cell_is_bad(tm, t, th)).collect();
        let mut touched: HashSet<usize> = HashSet::new();
        for t in bad {
            if !tm.alive[t] || !cell_is_bad(tm, t, th) {
                continue;
            }
            let verts = tm.tris[t];
            if verts.iter().any(|v| touched.contains(v)) {
                continue;
            }
            if try_flip(tm, t) {
                log.flips += 1;
                touched.extend(verts);
                continue;
            }
            // remove the removable vertex with the smallest predicted angle
            // neighborhood, i.e. the one opposite the shortest edge
            let mut cand: Vec<(u8, T, usize)> = (0..3)
                .filter_map(|k| {
                    let v = verts[k];
                    let (a, b) = (verts[(k + 1) % 3], verts[(k + 2) % 3]);
                    let near = pred_len(tm, v, a).min(pred_len(tm, v, b));
                    removal_rank(tm.roles[v]).map(|r| (r, near, v))
                })
                .collect();
            cand.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal)));
            for (_, _, v) in cand {
                if tm.remove_vertex(v) {
                    log.removed += 1;
                    touched.extend(verts);
                    break;
                }
            }
        }
        tm.legalize_all();
        let roles = tm.roles.clone();
        let pts = tm.pts.clone();
        tm.vel = velocity(&roles, &pts);
    }
}

fn interior_role<T: Scalar>(tm: &TriMesh<T>, t: usize) -> VertexRole {
    if tm.cells[t].region == Region::Fracture {
        VertexRole::StripInterior
    } else {
        VertexRole::Free
    }
}

/// Flips the longest unconstrained edge of `t` if that raises the worse
/// predicted quality of the pair.
fn try_flip<T: Scalar>(tm: &mut TriMesh<T>, t: usize) -> bool {
    let v = tm.tris[t];
    let mut edges: Vec<(T, usize)> = (0..3)
        .map(|i| {
            let (a, b) = tm.edge(t, i);
            (pred_len(tm, a, b), i)
        })
        .collect();
    edges.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    for (_, i) in edges {
        let u = tm.nbr[t][i];
        let (a, b) = tm.edge(t, i);
        if u == super::tri::NONE || tm.is_constrained(a, b) {
            continue;
        }
        let Some(j) = tm.edge_index(u, b, a) else { continue };
        let c = v[i];
        let d = tm.tris[u][j];
        if !(tm.valid(c, a, d) && tm.valid(d, b, c)) {
            continue;
        }
        let before = quality_or_zero(tm, c, a, b).min(quality_or_zero(tm, d, b, a));
        let after = tm.quality(c, a, d).min(tm.quality(d, b, c));
        if after > before && tm.flip(t, i).is_some() {
            return true;
        }
    }
    false
}

fn quality_or_zero<T: Scalar>(tm: &TriMesh<T>, a: usize, b: usize, c: usize) -> T {
    if tm.valid(a, b, c) {
        tm.quality(a, b, c)
    } else {
        T::zero()
    }
}
