//! Editable triangulation with neighbor links, used for mesh generation and
//! remeshing. Every topological edit replaces a cavity of old triangles by
//! new triangles covering the same region, and projects cell values
//! conservatively from the old onto the new triangles.

use std::collections::{HashMap, HashSet};

use crate::error::MeshError;
use crate::geometry::{
    circumcenter, incircle, orient2d, radius_ratio, signed_area, triangle_intersection_area, Vec2,
};
use crate::scalar::Scalar;

use super::{edge_key, BulkState, Domain, EdgeTag, InterfaceState, MovingMesh, Region, VertexRole};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellData<T> {
    pub s: T,
    pub p: T,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IfaceData<T> {
    pub s: T,
    pub p: T,
    pub d: T,
}

/// Mass bookkeeping of one conservative projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentRecord<T> {
    pub old_cells: usize,
    pub new_cells: usize,
    pub old_volume: T,
    pub new_volume: T,
    /// `Σ φ S |K|` before and after.
    pub old_mass: T,
    pub new_mass: T,
    /// `Σ d φ S_Γ |K_Γ|` before and after (interface merges).
    pub old_iface_mass: T,
    pub new_iface_mass: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside(usize),
    OnEdge(usize, usize),
    OnVertex(usize),
    Outside,
}

enum Projection {
    /// New triangle `k` lies inside old triangle `parent[k]`.
    Inherit(Vec<usize>),
    /// Exact intersection areas.
    Intersect,
}

#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    pub domain: Domain<T>,
    pub pts: Vec<Vec2<T>>,
    pub vel: Vec<Vec2<T>>,
    pub roles: Vec<VertexRole>,
    pub vertex_alive: Vec<bool>,
    pub tris: Vec<[usize; 3]>,
    /// Neighbor across edge `i` (opposite vertex `i`).
    pub nbr: Vec<[usize; 3]>,
    pub alive: Vec<bool>,
    pub cells: Vec<CellData<T>>,
    vtri: Vec<usize>,
    free: Vec<usize>,
    pub constrained: HashMap<(usize, usize), EdgeTag>,
    pub iface: HashMap<(usize, usize), IfaceData<T>>,
    /// Positions used for the second validity check are `pts + dt * vel`.
    pub dt: T,
    pub porosity: [T; 2],
    pub components: Vec<ComponentRecord<T>>,
    /// Project values and record components on every edit. Off while
    /// generating a mesh, where cells carry no data yet.
    pub track: bool,
    hint: usize,
    walk_seed: u64,
}

impl<T: Scalar> TriMesh<T> {
    /// Two triangles covering the rectangular domain.
    pub fn new_domain(domain: Domain<T>) -> Self {
        let pts = vec![domain.lo, Vec2::new(domain.hi.x, domain.lo.y), domain.hi, Vec2::new(domain.lo.x, domain.hi.y)];
        let mut m = Self {
            domain,
            vel: vec![Vec2::zero(); 4],
            roles: vec![VertexRole::Corner; 4],
            vertex_alive: vec![true; 4],
            pts,
            tris: Vec::new(),
            nbr: Vec::new(),
            alive: Vec::new(),
            cells: Vec::new(),
            vtri: vec![NONE; 4],
            free: Vec::new(),
            constrained: HashMap::new(),
            iface: HashMap::new(),
            dt: T::zero(),
            porosity: [T::one(), T::one()],
            components: Vec::new(),
            track: false,
            hint: 0,
            walk_seed: 0x9e37_79b9_7f4a_7c15,
        };
        let t0 = m.push_tri([0, 1, 2], CellData::default());
        let t1 = m.push_tri([0, 2, 3], CellData::default());
        // edge opposite vertex 1 of t0 is (2,0); edge opposite vertex 2 of t1 is (0,2)
        m.nbr[t0][1] = t1;
        m.nbr[t1][2] = t0;
        m.constrained.insert(edge_key(0, 1), EdgeTag::Domain(super::Side::Bottom));
        m.constrained.insert(edge_key(1, 2), EdgeTag::Domain(super::Side::Right));
        m.constrained.insert(edge_key(2, 3), EdgeTag::Domain(super::Side::Top));
        m.constrained.insert(edge_key(3, 0), EdgeTag::Domain(super::Side::Left));
        m
    }

    /// Editable copy of a mesh with its cell and interface values.
    pub fn from_mesh(mesh: &MovingMesh<T>, bulk: &BulkState<T>, iface: &InterfaceState<T>, dt: T, porosity: [T; 2]) -> Self {
        let nv = mesh.points.len();
        let mut m = Self {
            domain: mesh.domain,
            pts: mesh.points.clone(),
            vel: mesh.velocities.clone(),
            roles: mesh.roles.clone(),
            vertex_alive: vec![true; nv],
            tris: mesh.triangles.clone(),
            nbr: vec![[NONE; 3]; mesh.triangles.len()],
            alive: vec![true; mesh.triangles.len()],
            cells: (0..mesh.triangles.len())
                .map(|c| CellData { s: bulk.saturation[c], p: bulk.pressure[c], region: mesh.regions[c] })
                .collect(),
            vtri: vec![NONE; nv],
            free: Vec::new(),
            constrained: mesh.constrained.clone(),
            iface: HashMap::new(),
            dt,
            porosity,
            components: Vec::new(),
            track: true,
            hint: 0,
            walk_seed: 0x9e37_79b9_7f4a_7c15,
        };
        for f in &mesh.facets {
            if let super::Neighbor::Cell(mn) = f.minus {
                let p = f.plus;
                let ip = m.edge_index(p, f.v[0], f.v[1]).expect("facet edge in plus cell");
                let im = m.edge_index(mn, f.v[1], f.v[0]).expect("facet edge in minus cell");
                m.nbr[p][ip] = mn;
                m.nbr[mn][im] = p;
            }
        }
        for (c, t) in m.tris.iter().enumerate() {
            for &v in t {
                m.vtri[v] = c;
            }
        }
        for (e, &[a, b]) in mesh.interface.iter().enumerate() {
            m.iface.insert(
                edge_key(a, b),
                IfaceData { s: iface.saturation[e], p: iface.pressure[e], d: iface.aperture[e] },
            );
        }
        m
    }

    #[inline]
    pub fn pred(&self, v: usize) -> Vec2<T> {
        self.pts[v] + self.vel[v] * self.dt
    }

    pub fn num_alive(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn alive_triangles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tris.len()).filter(|&t| self.alive[t])
    }

    /// Index `i` such that edge `i` of `t` is the directed edge `(a, b)`.
    #[inline]
    pub fn edge_index(&self, t: usize, a: usize, b: usize) -> Option<usize> {
        let v = self.tris[t];
        (0..3).find(|&i| v[(i + 1) % 3] == a && v[(i + 2) % 3] == b)
    }

    #[inline]
    pub fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        let v = self.tris[t];
        (v[(i + 1) % 3], v[(i + 2) % 3])
    }

    pub fn is_constrained(&self, a: usize, b: usize) -> bool {
        self.constrained.contains_key(&edge_key(a, b))
    }

    fn push_tri(&mut self, v: [usize; 3], data: CellData<T>) -> usize {
        let id = if let Some(id) = self.free.pop() {
            self.tris[id] = v;
            self.nbr[id] = [NONE; 3];
            self.alive[id] = true;
            self.cells[id] = data;
            id
        } else {
            self.tris.push(v);
            self.nbr.push([NONE; 3]);
            self.alive.push(true);
            self.cells.push(data);
            self.tris.len() - 1
        };
        for &x in &v {
            self.vtri[x] = id;
        }
        self.hint = id;
        id
    }

    pub fn add_vertex(&mut self, p: Vec2<T>, vel: Vec2<T>, role: VertexRole) -> usize {
        self.pts.push(p);
        self.vel.push(vel);
        self.roles.push(role);
        self.vertex_alive.push(true);
        self.vtri.push(NONE);
        self.pts.len() - 1
    }

    /// Positive orientation at both the current and the predicted positions.
    #[inline]
    pub fn valid(&self, a: usize, b: usize, c: usize) -> bool {
        orient2d(self.pts[a], self.pts[b], self.pts[c]) > 0.0
            && (self.dt == T::zero() || orient2d(self.pred(a), self.pred(b), self.pred(c)) > 0.0)
    }

    /// Radius ratio at the predicted positions.
    pub fn quality(&self, a: usize, b: usize, c: usize) -> T {
        radius_ratio(self.pred(a), self.pred(b), self.pred(c))
    }

    fn tri_area(&self, t: usize) -> T {
        let v = self.tris[t];
        signed_area(self.pts[v[0]], self.pts[v[1]], self.pts[v[2]])
    }

    fn phi(&self, r: Region) -> T {
        self.porosity[r.index()]
    }

    /// Replaces the cavity `old` by `new`, relinks neighbors and projects
    /// cell values. Returns the ids of the new triangles.
    fn replace(&mut self, old: &[usize], new: &[([usize; 3], Region)], proj: Projection) -> Vec<usize> {
        let proj = if self.track { proj } else { Projection::Inherit(vec![0; new.len()]) };
        let old_set: HashSet<usize> = old.iter().copied().collect();
        let mut boundary: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in old {
            for i in 0..3 {
                let nb = self.nbr[t][i];
                if nb == NONE || !old_set.contains(&nb) {
                    boundary.insert(self.edge(t, i), nb);
                }
            }
        }
        let old_geom: Vec<([Vec2<T>; 3], CellData<T>, T)> = old
            .iter()
            .map(|&t| {
                let v = self.tris[t];
                ([self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]], self.cells[t], self.tri_area(t))
            })
            .collect();
        for &t in old {
            self.alive[t] = false;
            self.free.push(t);
        }
        // values
        let new_geom: Vec<[Vec2<T>; 3]> = new.iter().map(|(v, _)| [self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]]).collect();
        let new_area: Vec<T> = new_geom.iter().map(|g| signed_area(g[0], g[1], g[2])).collect();
        let mut data: Vec<CellData<T>> = Vec::with_capacity(new.len());
        match proj {
            Projection::Inherit(parent) => {
                for (k, (_, r)) in new.iter().enumerate() {
                    let o = old_geom[parent[k]].1;
                    data.push(CellData { s: o.s, p: o.p, region: *r });
                }
            }
            Projection::Intersect => {
                let no = old_geom.len();
                let nn = new.len();
                let mut a = vec![T::zero(); nn * no];
                let mut col = vec![T::zero(); no];
                for (k, g) in new_geom.iter().enumerate() {
                    for (o, og) in old_geom.iter().enumerate() {
                        let x = triangle_intersection_area(*g, og.0);
                        a[k * no + o] = x;
                        col[o] += x;
                    }
                }
                for (k, (_, r)) in new.iter().enumerate() {
                    let mut mass = T::zero();
                    let mut pres = T::zero();
                    let mut cover = T::zero();
                    for (o, og) in old_geom.iter().enumerate() {
                        let x = a[k * no + o];
                        if x == T::zero() || col[o] == T::zero() {
                            continue;
                        }
                        let w = x * og.2 / col[o];
                        mass += self.phi(og.1.region) * og.1.s * w;
                        pres += og.1.p * x;
                        cover += x;
                    }
                    let s = mass / (self.phi(*r) * new_area[k]);
                    let p = if cover > T::zero() { pres / cover } else { T::zero() };
                    data.push(CellData { s, p, region: *r });
                }
            }
        }
        let old_volume: T = old_geom.iter().map(|g| g.2).sum();
        let old_mass: T = old_geom.iter().map(|g| self.phi(g.1.region) * g.1.s * g.2).sum();
        let new_volume: T = new_area.iter().copied().sum();
        let new_mass: T = data.iter().zip(&new_area).map(|(d, a)| self.phi(d.region) * d.s * *a).sum();
        if self.track {
            self.components.push(ComponentRecord {
                old_cells: old.len(),
                new_cells: new.len(),
                old_volume,
                new_volume,
                old_mass,
                new_mass,
                old_iface_mass: T::zero(),
                new_iface_mass: T::zero(),
            });
        }
        let ids: Vec<usize> = new.iter().zip(data).map(|((v, _), d)| self.push_tri(*v, d)).collect();
        // relink
        let mut half: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &t in &ids {
            for i in 0..3 {
                half.insert(self.edge(t, i), (t, i));
            }
        }
        for &t in &ids {
            for i in 0..3 {
                let (a, b) = self.edge(t, i);
                if let Some(&(u, _)) = half.get(&(b, a)) {
                    self.nbr[t][i] = u;
                } else {
                    // pieces of a split domain edge have no outer neighbor
                    let nb = boundary.get(&(a, b)).copied().unwrap_or(NONE);
                    self.nbr[t][i] = nb;
                    if nb != NONE {
                        let j = self.edge_index(nb, b, a).expect("outer neighbor shares edge");
                        self.nbr[nb][j] = t;
                    }
                }
            }
        }
        ids
    }

    /// Locates `p` by a remembering stochastic walk from the last hint.
    pub fn locate(&mut self, p: Vec2<T>) -> Location {
        let mut t = self.hint;
        if t >= self.tris.len() || !self.alive[t] {
            t = match self.alive.iter().position(|a| *a) {
                Some(t) => t,
                None => return Location::Outside,
            };
        }
        let limit = 4 * self.tris.len() + 16;
        'walk: for _ in 0..limit {
            self.walk_seed = self.walk_seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            let start = (self.walk_seed >> 33) as usize % 3;
            for k in 0..3 {
                let i = (start + k) % 3;
                let (a, b) = self.edge(t, i);
                if orient2d(self.pts[a], self.pts[b], p) < 0.0 {
                    let nb = self.nbr[t][i];
                    if nb == NONE {
                        return Location::Outside;
                    }
                    t = nb;
                    continue 'walk;
                }
            }
            self.hint = t;
            return self.classify(t, p);
        }
        // fall back to a scan
        for t in 0..self.tris.len() {
            if !self.alive[t] {
                continue;
            }
            if (0..3).all(|i| {
                let (a, b) = self.edge(t, i);
                orient2d(self.pts[a], self.pts[b], p) >= 0.0
            }) {
                self.hint = t;
                return self.classify(t, p);
            }
        }
        Location::Outside
    }

    fn classify(&self, t: usize, p: Vec2<T>) -> Location {
        let v = self.tris[t];
        for &x in &v {
            if self.pts[x] == p {
                return Location::OnVertex(x);
            }
        }
        for i in 0..3 {
            let (a, b) = self.edge(t, i);
            if orient2d(self.pts[a], self.pts[b], p) == 0.0 {
                return Location::OnEdge(t, i);
            }
        }
        Location::Inside(t)
    }

    /// Inserts a vertex at `p`, splitting the containing triangle or edge,
    /// then restores the Delaunay property around it. The velocity is
    /// interpolated linearly from the containing triangle. Returns `None`
    /// if `p` is outside, coincides with a vertex or would create an
    /// invalid triangle.
    pub fn insert_point(&mut self, p: Vec2<T>, role: VertexRole) -> Option<usize> {
        match self.locate(p) {
            Location::Inside(t) => {
                let v = self.tris[t];
                let vel = self.interpolate_velocity(t, p);
                let x = self.add_vertex(p, vel, role);
                if !(self.valid(v[0], v[1], x) && self.valid(v[1], v[2], x) && self.valid(v[2], v[0], x)) {
                    self.vertex_alive[x] = false;
                    return None;
                }
                let r = self.cells[t].region;
                let ids = self.replace(&[t], &[([v[0], v[1], x], r), ([v[1], v[2], x], r), ([v[2], v[0], x], r)], Projection::Inherit(vec![0, 0, 0]));
                let stack = ids.iter().map(|&t| (t, 2)).collect();
                self.legalize(stack);
                Some(x)
            }
            Location::OnEdge(t, i) => {
                let role = match role {
                    VertexRole::Free | VertexRole::StripInterior => self.constrained_role(t, i).unwrap_or(role),
                    _ => role,
                };
                self.split_edge_at(t, i, p, None, role)
            }
            _ => None,
        }
    }

    fn interpolate_velocity(&self, t: usize, p: Vec2<T>) -> Vec2<T> {
        let v = self.tris[t];
        let (a, b, c) = (self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]);
        let area = signed_area(a, b, c);
        let la = signed_area(p, b, c) / area;
        let lb = signed_area(a, p, c) / area;
        let lc = T::one() - la - lb;
        self.vel[v[0]] * la + self.vel[v[1]] * lb + self.vel[v[2]] * lc
    }

    /// Finds a triangle containing the directed edge `(a, b)`.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let start = self.vtri[a];
        if start == NONE {
            return None;
        }
        for t in self.star(a) {
            if let Some(i) = self.edge_index(t, a, b) {
                return Some((t, i));
            }
            if let Some(i) = self.edge_index(t, b, a) {
                let nb = self.nbr[t][i];
                if nb != NONE {
                    if let Some(j) = self.edge_index(nb, a, b) {
                        return Some((nb, j));
                    }
                }
            }
        }
        None
    }

    /// Triangles around a vertex.
    pub fn star(&self, v: usize) -> Vec<usize> {
        let start = self.vtri[v];
        if start == NONE || !self.alive[start] {
            return Vec::new();
        }
        let mut out = vec![start];
        // counter-clockwise
        let mut t = start;
        loop {
            let k = self.tris[t].iter().position(|&x| x == v).expect("vertex in star triangle");
            let nb = self.nbr[t][(k + 1) % 3];
            if nb == NONE {
                break;
            }
            if nb == start {
                return out;
            }
            out.push(nb);
            t = nb;
        }
        // clockwise from the start for open stars
        let mut t = start;
        loop {
            let k = self.tris[t].iter().position(|&x| x == v).expect("vertex in star triangle");
            let nb = self.nbr[t][(k + 2) % 3];
            if nb == NONE {
                break;
            }
            out.insert(0, nb);
            t = nb;
        }
        out
    }

    /// Splits the edge `i` of `t` at its midpoint.
    pub fn split_edge(&mut self, t: usize, i: usize, role: VertexRole) -> Option<usize> {
        let (a, b) = self.edge(t, i);
        let p = self.pts[a].midpoint(self.pts[b]);
        let vel = (self.vel[a] + self.vel[b]) * T::half();
        self.split_edge_at(t, i, p, Some(vel), role)
    }

    /// Splits edge `i` of `t` at `p`, which must lie inside the union of the
    /// two adjacent triangles.
    fn split_edge_at(&mut self, t: usize, i: usize, p: Vec2<T>, vel: Option<Vec2<T>>, role: VertexRole) -> Option<usize> {
        let (a, b) = self.edge(t, i);
        let c = self.tris[t][i];
        let u = self.nbr[t][i];
        let vel = vel.unwrap_or_else(|| {
            let la = (p - self.pts[b]).norm() / (self.pts[a] - self.pts[b]).norm();
            self.vel[a] * la + self.vel[b] * (T::one() - la)
        });
        let x = self.add_vertex(p, vel, role);
        let mut ok = self.valid(c, a, x) && self.valid(c, x, b);
        let d = if u != NONE {
            let j = self.edge_index(u, b, a).expect("neighbor shares edge");
            let d = self.tris[u][j];
            ok = ok && self.valid(d, b, x) && self.valid(d, x, a);
            Some(d)
        } else {
            None
        };
        if !ok {
            self.vertex_alive[x] = false;
            return None;
        }
        let rt = self.cells[t].region;
        let ids = match d {
            Some(d) => {
                let ru = self.cells[u].region;
                self.replace(
                    &[t, u],
                    &[([c, a, x], rt), ([c, x, b], rt), ([d, b, x], ru), ([d, x, a], ru)],
                    Projection::Inherit(vec![0, 0, 1, 1]),
                )
            }
            None => self.replace(&[t], &[([c, a, x], rt), ([c, x, b], rt)], Projection::Inherit(vec![0, 0])),
        };
        if let Some(tag) = self.constrained.remove(&edge_key(a, b)) {
            self.constrained.insert(edge_key(a, x), tag);
            self.constrained.insert(edge_key(x, b), tag);
            if let Some(data) = self.iface.remove(&edge_key(a, b)) {
                self.iface.insert(edge_key(a, x), data);
                self.iface.insert(edge_key(x, b), data);
            }
        }
        // edges opposite x: index of vertex x in each new triangle
        let stack = ids
            .iter()
            .map(|&t| (t, self.tris[t].iter().position(|&y| y == x).unwrap()))
            .collect();
        self.legalize(stack);
        Some(x)
    }

    /// Whether edge `i` of `t` violates the Delaunay criterion at the
    /// predicted positions and can be flipped.
    fn should_flip(&self, t: usize, i: usize) -> bool {
        let u = self.nbr[t][i];
        if u == NONE {
            return false;
        }
        let (a, b) = self.edge(t, i);
        if self.is_constrained(a, b) {
            return false;
        }
        let c = self.tris[t][i];
        let j = match self.edge_index(u, b, a) {
            Some(j) => j,
            None => return false,
        };
        let d = self.tris[u][j];
        if incircle(self.pred(c), self.pred(a), self.pred(b), self.pred(d)) <= 0.0 {
            return false;
        }
        self.valid(c, a, d) && self.valid(d, b, c)
    }

    /// Flips edge `i` of `t`. Returns the two new triangles.
    pub fn flip(&mut self, t: usize, i: usize) -> Option<[usize; 2]> {
        let u = self.nbr[t][i];
        if u == NONE {
            return None;
        }
        let (a, b) = self.edge(t, i);
        if self.is_constrained(a, b) {
            return None;
        }
        let c = self.tris[t][i];
        let j = self.edge_index(u, b, a)?;
        let d = self.tris[u][j];
        if !(self.valid(c, a, d) && self.valid(d, b, c)) {
            return None;
        }
        let r = self.cells[t].region;
        let ids = self.replace(&[t, u], &[([c, a, d], r), ([d, b, c], r)], Projection::Intersect);
        Some([ids[0], ids[1]])
    }

    /// Lawson flips starting from the given edges.
    pub fn legalize(&mut self, mut stack: Vec<(usize, usize)>) {
        let mut guard = 0usize;
        while let Some((t, i)) = stack.pop() {
            guard += 1;
            if guard > 100_000 {
                log::warn!("Lawson flip cap reached");
                break;
            }
            if !self.alive[t] || !self.should_flip(t, i) {
                continue;
            }
            if let Some([n0, n1]) = self.flip(t, i) {
                for &n in &[n0, n1] {
                    for k in 0..3 {
                        stack.push((n, k));
                    }
                }
            }
        }
    }

    /// Lawson flips over every edge.
    pub fn legalize_all(&mut self) {
        let stack = self.alive_triangles().flat_map(|t| (0..3).map(move |i| (t, i))).collect();
        self.legalize(stack);
    }

    /// Ensures the segment `a-b` is a mesh edge by recursive midpoint
    /// insertion, and tags it.
    pub fn enforce_segment(&mut self, a: usize, b: usize, tag: EdgeTag, role: VertexRole, depth: usize) -> Result<(), MeshError> {
        if self.find_edge(a, b).is_some() {
            self.constrained.insert(edge_key(a, b), tag);
            return Ok(());
        }
        if depth > 24 {
            return Err(MeshError::Irreparable(format!("cannot recover segment ({a}, {b})")));
        }
        let m = self.pts[a].midpoint(self.pts[b]);
        let x = match self.locate(m) {
            Location::OnVertex(x) => x,
            _ => self
                .insert_point(m, role)
                .ok_or_else(|| MeshError::Irreparable(format!("midpoint insertion failed on ({a}, {b})")))?,
        };
        self.enforce_segment(a, x, tag, role, depth + 1)?;
        self.enforce_segment(x, b, tag, role, depth + 1)
    }

    /// Removes vertex `v` and retriangulates its star. Vertices on a chain
    /// of two constrained edges with the same tag (interface, fracture
    /// boundary, straight domain side) are removed by joining the chain.
    /// Returns `false` without changes when no valid retriangulation exists.
    pub fn remove_vertex(&mut self, v: usize) -> bool {
        if !self.vertex_alive[v] || matches!(self.roles[v], VertexRole::Corner | VertexRole::Tip(_) | VertexRole::StripCorner(..)) {
            return false;
        }
        let star = self.star(v);
        if star.is_empty() {
            return false;
        }
        // ring in counter-clockwise order around v
        let mut ring: Vec<usize> = Vec::with_capacity(star.len() + 1);
        for &t in &star {
            let k = self.tris[t].iter().position(|&x| x == v).unwrap();
            ring.push(self.tris[t][(k + 1) % 3]);
        }
        let last = star[star.len() - 1];
        let kl = self.tris[last].iter().position(|&x| x == v).unwrap();
        let closing = self.tris[last][(kl + 2) % 3];
        let closed = closing == ring[0];
        if !closed {
            ring.push(closing);
        }
        let cons: Vec<(usize, EdgeTag)> = ring
            .iter()
            .filter_map(|&w| self.constrained.get(&edge_key(v, w)).map(|t| (w, *t)))
            .collect();
        let mut polys: Vec<(Vec<usize>, Region)> = Vec::new();
        let mut chord: Option<(usize, usize, EdgeTag)> = None;
        if closed {
            match cons.len() {
                0 => {
                    let r = self.cells[star[0]].region;
                    if star.iter().any(|&t| self.cells[t].region != r) {
                        return false;
                    }
                    polys.push((ring.clone(), r));
                }
                2 if cons[0].1 == cons[1].1
                    && matches!(
                        (cons[0].1, self.roles[v]),
                        (EdgeTag::Interface, VertexRole::Interface)
                            | (EdgeTag::Strip, VertexRole::StripSide(_) | VertexRole::StripEnd(_))
                    ) =>
                {
                    let (a, b) = (cons[0].0, cons[1].0);
                    let ia = ring.iter().position(|&x| x == a).unwrap();
                    let ib = ring.iter().position(|&x| x == b).unwrap();
                    let n = ring.len();
                    let arc = |from: usize, to: usize| {
                        let mut out = Vec::new();
                        let mut k = from;
                        loop {
                            out.push(ring[k]);
                            if k == to {
                                break;
                            }
                            k = (k + 1) % n;
                        }
                        out
                    };
                    let region_of = |first: usize, second: usize, this: &Self| {
                        // triangle (v, first, second) is in the star
                        star.iter()
                            .find(|&&t| {
                                let k = this.tris[t].iter().position(|&x| x == v).unwrap();
                                this.tris[t][(k + 1) % 3] == first && this.tris[t][(k + 2) % 3] == second
                            })
                            .map(|&t| this.cells[t].region)
                    };
                    let p1 = arc(ia, ib);
                    let p2 = arc(ib, ia);
                    let r1 = match region_of(p1[0], p1[1], self) {
                        Some(r) => r,
                        None => return false,
                    };
                    let r2 = match region_of(p2[0], p2[1], self) {
                        Some(r) => r,
                        None => return false,
                    };
                    if p1.len() < 3 || p2.len() < 3 {
                        return false;
                    }
                    polys.push((p1, r1));
                    polys.push((p2, r2));
                    chord = Some((a, b, cons[0].1));
                }
                _ => return false,
            }
        } else {
            // open star on the domain boundary: both boundary edges must be collinear
            let a = ring[0];
            let b = *ring.last().unwrap();
            let side = match (self.constrained.get(&edge_key(v, a)), self.constrained.get(&edge_key(v, b))) {
                (Some(EdgeTag::Domain(s1)), Some(EdgeTag::Domain(s2))) if s1 == s2 => *s1,
                _ => return false,
            };
            if orient2d(self.pts[b], self.pts[v], self.pts[a]) != 0.0 || cons.len() != 2 {
                return false;
            }
            let r = self.cells[star[0]].region;
            if star.iter().any(|&t| self.cells[t].region != r) {
                return false;
            }
            polys.push((ring.clone(), r));
            chord = Some((a, b, EdgeTag::Domain(side)));
        }
        let mut new: Vec<([usize; 3], Region)> = Vec::new();
        for (poly, r) in &polys {
            match self.triangulate_polygon(poly) {
                Some(tris) => new.extend(tris.into_iter().map(|t| (t, *r))),
                None => return false,
            }
        }
        // interface merge before the cavity replacement changes adjacency
        let mut iface_mass = (T::zero(), T::zero());
        if let Some((a, b, tag)) = chord {
            self.constrained.remove(&edge_key(v, a));
            self.constrained.remove(&edge_key(v, b));
            self.constrained.insert(edge_key(a, b), tag);
            if tag == EdgeTag::Interface {
                let d1 = self.iface.remove(&edge_key(a, v)).unwrap_or_default();
                let d2 = self.iface.remove(&edge_key(v, b)).unwrap_or_default();
                let l1 = (self.pts[v] - self.pts[a]).norm();
                let l2 = (self.pts[b] - self.pts[v]).norm();
                let l = (self.pts[b] - self.pts[a]).norm();
                let phi = self.porosity[Region::Fracture.index()];
                let w1 = d1.d * l1;
                let w2 = d2.d * l2;
                let merged = IfaceData {
                    s: (w1 * d1.s + w2 * d2.s) / (w1 + w2),
                    p: (l1 * d1.p + l2 * d2.p) / (l1 + l2),
                    d: (w1 + w2) / l,
                };
                iface_mass = (phi * (w1 * d1.s + w2 * d2.s), phi * merged.d * merged.s * l);
                self.iface.insert(edge_key(a, b), merged);
            }
        }
        let ids = self.replace(&star, &new, Projection::Intersect);
        if let (true, Some(rec)) = (self.track, self.components.last_mut()) {
            rec.old_iface_mass = iface_mass.0;
            rec.new_iface_mass = iface_mass.1;
        }
        self.vertex_alive[v] = false;
        self.vtri[v] = NONE;
        let stack = ids.iter().flat_map(|&t| (0..3).map(move |i| (t, i))).collect();
        self.legalize(stack);
        true
    }

    /// Ear-clipping triangulation of a counter-clockwise simple polygon,
    /// choosing at each stage the valid ear of best predicted quality.
    fn triangulate_polygon(&self, poly: &[usize]) -> Option<Vec<[usize; 3]>> {
        let mut rest: Vec<usize> = poly.to_vec();
        let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
        while rest.len() > 3 {
            let n = rest.len();
            let mut best: Option<(usize, T)> = None;
            for k in 0..n {
                let (a, b, c) = (rest[(k + n - 1) % n], rest[k], rest[(k + 1) % n]);
                if !self.valid(a, b, c) {
                    continue;
                }
                let blocked = rest.iter().any(|&x| {
                    x != a && x != b && x != c && {
                        let inside = |p: &dyn Fn(usize) -> Vec2<T>| {
                            orient2d(p(a), p(b), p(x)) >= 0.0 && orient2d(p(b), p(c), p(x)) >= 0.0 && orient2d(p(c), p(a), p(x)) >= 0.0
                        };
                        inside(&|i| self.pts[i]) || inside(&|i| self.pred(i))
                    }
                });
                if blocked {
                    continue;
                }
                let q = self.quality(a, b, c);
                if best.map_or(true, |(_, bq)| q > bq) {
                    best = Some((k, q));
                }
            }
            let (k, _) = best?;
            let n = rest.len();
            out.push([rest[(k + n - 1) % n], rest[k], rest[(k + 1) % n]]);
            rest.remove(k);
        }
        if rest.len() == 3 {
            if !self.valid(rest[0], rest[1], rest[2]) {
                return None;
            }
            out.push([rest[0], rest[1], rest[2]]);
        }
        Some(out)
    }

    /// Inserts the circumcenter of `t` at the current positions, or splits
    /// a constrained edge it would encroach. Returns the new vertex.
    pub fn insert_circumcenter(&mut self, t: usize, role_of: &dyn Fn(&Self, Vec2<T>, usize) -> VertexRole) -> Option<usize> {
        let v = self.tris[t];
        let cc = circumcenter(self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]).ok()?;
        if !self.domain.contains(cc) {
            let (e, i) = self.longest_constrained_edge(t)?;
            return self.split_constrained(e, i);
        }
        // check the path from t to the circumcenter for constrained edges
        if let Some((e, i)) = self.encroached_near(t, cc) {
            return self.split_constrained(e, i);
        }
        let loc = self.locate(cc);
        let host = match loc {
            Location::Inside(h) | Location::OnEdge(h, _) => h,
            _ => return None,
        };
        let role = role_of(self, cc, host);
        self.insert_point(cc, role)
    }

    fn longest_constrained_edge(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, T)> = None;
        for i in 0..3 {
            let (a, b) = self.edge(t, i);
            if self.is_constrained(a, b) {
                let l = (self.pts[a] - self.pts[b]).norm();
                if best.map_or(true, |(_, bl)| l > bl) {
                    best = Some((i, l));
                }
            }
        }
        best.map(|(i, _)| (t, i))
    }

    /// Constrained edge near `t` whose diametral circle contains `p`, or
    /// which separates `t` from `p`.
    fn encroached_near(&mut self, t: usize, p: Vec2<T>) -> Option<(usize, usize)> {
        // walk towards p, stopping at constrained edges
        let mut cur = t;
        for _ in 0..64 {
            let mut moved = false;
            for i in 0..3 {
                let (a, b) = self.edge(cur, i);
                if orient2d(self.pts[a], self.pts[b], p) < 0.0 {
                    if self.is_constrained(a, b) {
                        return Some((cur, i));
                    }
                    let nb = self.nbr[cur][i];
                    if nb == NONE {
                        return None;
                    }
                    cur = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        // diametral circles of constrained edges of the host and its neighbors
        let mut cands = vec![cur];
        cands.extend(self.nbr[cur].iter().copied().filter(|&x| x != NONE));
        for &c in &cands {
            for i in 0..3 {
                let (a, b) = self.edge(c, i);
                if self.is_constrained(a, b) && (self.pts[a] - p).dot(self.pts[b] - p) < T::zero() {
                    return Some((c, i));
                }
            }
        }
        None
    }

    /// Role of a vertex placed on edge `i` of `t` if that edge is constrained.
    pub fn constrained_role(&self, t: usize, i: usize) -> Option<VertexRole> {
        let (a, b) = self.edge(t, i);
        Some(match self.constrained.get(&edge_key(a, b))? {
            EdgeTag::Interface => VertexRole::Interface,
            EdgeTag::Domain(s) => VertexRole::DomainSide(*s),
            EdgeTag::Strip => strip_role(self.roles[a], self.roles[b]),
        })
    }

    /// Splits a constrained edge at its midpoint with the role implied by its tag.
    pub fn split_constrained(&mut self, t: usize, i: usize) -> Option<usize> {
        let role = self.constrained_role(t, i)?;
        self.split_edge(t, i, role)
    }

    /// Compacts into a [`MovingMesh`] plus cell and interface values.
    pub fn to_mesh(&self) -> Result<(MovingMesh<T>, BulkState<T>, InterfaceState<T>), MeshError> {
        let mut map = vec![NONE; self.pts.len()];
        let mut points = Vec::new();
        let mut velocities = Vec::new();
        let mut roles = Vec::new();
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        let mut bulk = BulkState::default();
        for t in self.alive_triangles() {
            let mut tri = [0; 3];
            for (k, &v) in self.tris[t].iter().enumerate() {
                if map[v] == NONE {
                    map[v] = points.len();
                    points.push(self.pts[v]);
                    velocities.push(self.vel[v]);
                    roles.push(self.roles[v]);
                }
                tri[k] = map[v];
            }
            triangles.push(tri);
            regions.push(self.cells[t].region);
            bulk.saturation.push(self.cells[t].s);
            bulk.pressure.push(self.cells[t].p);
        }
        let constrained: HashMap<(usize, usize), EdgeTag> = self
            .constrained
            .iter()
            .filter(|((a, b), _)| map[*a] != NONE && map[*b] != NONE)
            .map(|(&(a, b), &tag)| (edge_key(map[a], map[b]), tag))
            .collect();
        let mut mesh = MovingMesh::new(self.domain, points, roles, triangles, regions, constrained)?;
        mesh.velocities = velocities;
        let mut iface = InterfaceState::default();
        let mut inv = vec![NONE; mesh.points.len()];
        for (old, &new) in map.iter().enumerate() {
            if new != NONE {
                inv[new] = old;
            }
        }
        for &[a, b] in &mesh.interface {
            let d = self
                .iface
                .get(&edge_key(inv[a], inv[b]))
                .copied()
                .ok_or_else(|| MeshError::ConnectivityMismatch("interface element without data".into()))?;
            iface.saturation.push(d.s);
            iface.pressure.push(d.p);
            iface.aperture.push(d.d);
        }
        Ok((mesh, bulk, iface))
    }

    /// `Σ φ S |K|` over alive cells.
    pub fn bulk_mass(&self) -> T {
        self.alive_triangles().map(|t| self.phi(self.cells[t].region) * self.cells[t].s * self.tri_area(t)).sum()
    }

    /// `Σ d φ S_Γ |K_Γ|`.
    pub fn interface_mass(&self) -> T {
        let phi = self.porosity[Region::Fracture.index()];
        self.iface
            .iter()
            .map(|(&(a, b), d)| phi * d.d * d.s * (self.pts[a] - self.pts[b]).norm())
            .sum()
    }

    /// Checks neighbor symmetry and positive orientation (debug aid).
    pub fn check(&self) -> Result<(), MeshError> {
        for t in self.alive_triangles() {
            let v = self.tris[t];
            if orient2d(self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]) <= 0.0 {
                return Err(MeshError::WouldDegenerate(vec![t]));
            }
            for i in 0..3 {
                let nb = self.nbr[t][i];
                let (a, b) = self.edge(t, i);
                if nb == NONE {
                    if !matches!(self.constrained.get(&edge_key(a, b)), Some(EdgeTag::Domain(_))) {
                        return Err(MeshError::ConnectivityMismatch(format!("open edge ({a}, {b})")));
                    }
                    continue;
                }
                if !self.alive[nb] || self.edge_index(nb, b, a).is_none() {
                    return Err(MeshError::ConnectivityMismatch(format!("bad neighbor of {t}")));
                }
            }
        }
        Ok(())
    }
}

/// Role of a vertex inserted on a fracture boundary edge.
pub(crate) fn strip_role(a: VertexRole, b: VertexRole) -> VertexRole {
    use VertexRole::*;
    match (a, b) {
        (StripSide(s), _) | (_, StripSide(s)) => StripSide(s),
        (StripEnd(e), _) | (_, StripEnd(e)) => StripEnd(e),
        (StripCorner(e1, s1), StripCorner(e2, s2)) if e1 != e2 && s1 == s2 => StripSide(s1),
        (StripCorner(e, _), _) | (_, StripCorner(e, _)) => StripEnd(e),
        _ => StripInterior,
    }
}
