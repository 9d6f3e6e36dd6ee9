//! Residual of one implicit step on a fixed pair of vertex configurations.
//!
//! Unknowns are interleaved `(S, P)` per bulk cell, followed by `(S_Γ, P_Γ)`
//! per interface element. All rows are integrated over the cell: saturation
//! rows carry volume rates, pressure rows carry net outflow minus sources.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::fluxes::{
    dirichlet_flux, geometric_flux, godunov_flux, gravity_offset, half_resistance, tangential_velocity,
    transmissibility, FacetContext, InterfaceCoupling, PreparedFlux, TangentialSide, TpfaSide,
};
use crate::fluxes::generalized_godunov_prepared;
use crate::geometry::{Tensor2, Vec2};
use crate::mesh::{FacetKind, MeshGeometry, MovingMesh, Neighbor, Region, Side};
use crate::physics::{FluxFunction, MediumParams, Mobilities, PhaseParams, RelPermLaw};
use crate::scalar::Scalar;
use crate::schedule::FractureSchedule;

/// Fluids, media and gravity of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Materials<T> {
    pub fluids: PhaseParams<T>,
    pub bulk: MediumParams<T>,
    pub fracture_porosity: T,
    pub fracture_law: RelPermLaw,
    pub gravity: Vec2<T>,
}

impl<T: Scalar> Materials<T> {
    /// Fracture medium at aperture `d`.
    pub fn fracture_medium(&self, d: T) -> MediumParams<T> {
        MediumParams {
            porosity: self.fracture_porosity,
            permeability: Tensor2::isotropic(fracture_permeability(d)),
            law: self.fracture_law,
        }
    }
}

/// Parallel-plate permeability `d² / 12`.
#[inline]
pub fn fracture_permeability<T: Scalar>(d: T) -> T {
    d * d / T::lit(12.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition<T> {
    NoFlow,
    /// Fixed pressure; `saturation` is the outer state entering on inflow.
    Dirichlet { pressure: T, saturation: T },
}

/// One condition per side of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions<T> {
    pub bottom: BoundaryCondition<T>,
    pub right: BoundaryCondition<T>,
    pub top: BoundaryCondition<T>,
    pub left: BoundaryCondition<T>,
}

impl<T: Scalar> BoundaryConditions<T> {
    pub fn no_flow() -> Self {
        Self {
            bottom: BoundaryCondition::NoFlow,
            right: BoundaryCondition::NoFlow,
            top: BoundaryCondition::NoFlow,
            left: BoundaryCondition::NoFlow,
        }
    }

    pub fn side(&self, s: Side) -> BoundaryCondition<T> {
        match s {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }

    pub fn is_pure_neumann(&self) -> bool {
        Side::ALL.iter().all(|&s| self.side(s) == BoundaryCondition::NoFlow)
    }
}

/// Volumetric source rates `[q_w, q_nw]` in 1/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sources<T> {
    pub bulk: [T; 2],
    /// Applied inside the fracture: per unit area of resolved fracture
    /// cells, or per unit `d·length` on the interface.
    pub fracture: [T; 2],
}

#[inline]
pub fn s_index(c: usize) -> usize {
    2 * c
}

#[inline]
pub fn p_index(c: usize) -> usize {
    2 * c + 1
}

/// Per-facet fluxes reported to an observer during evaluation: the total
/// velocity flux and the wetting flux leaving the plus side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FacetFlux<T> {
    pub total: T,
    pub wetting: T,
}

/// Frozen data of one step: geometry at both times, media, old state.
#[derive(Clone, Debug)]
pub struct StepSystem<'a, T> {
    pub mesh: &'a MovingMesh<T>,
    pub geom: MeshGeometry<T>,
    pub materials: &'a Materials<T>,
    pub boundary: &'a BoundaryConditions<T>,
    pub dt: T,
    /// Cell whose pressure row is replaced by `P = 0`.
    pub pin: Option<usize>,
    area_old: Vec<T>,
    /// Swept area per unit time, positive when the plus cell grows.
    rate: Vec<T>,
    /// `m_F - m_K` for the plus and minus side of every facet.
    dist: Vec<[Vec2<T>; 2]>,
    medium: Vec<MediumParams<T>>,
    /// Integrated sources `[q_w, q_nw] |K|`.
    cell_q: Vec<[T; 2]>,
    s_old: Vec<T>,
    // interface
    d_old: Vec<T>,
    d_new: Vec<T>,
    len_old: Vec<T>,
    sg_old: Vec<T>,
    iface_q: Vec<[T; 2]>,
    /// Aperture, tangential displacement rate and unit direction at the
    /// vertex shared by elements `e` and `e + 1`.
    vertex_d: Vec<T>,
    vertex_rate: Vec<T>,
    vertex_tau: Vec<Vec2<T>>,
    pub aperture_floor_hits: std::cell::Cell<usize>,
}

/// Old state and schedule data needed to freeze a step.
pub struct StepInput<'a, T> {
    pub old_points: &'a [Vec2<T>],
    pub bulk_saturation: &'a [T],
    pub iface_saturation: &'a [T],
    pub iface_aperture: &'a [T],
    pub schedule: Option<&'a FractureSchedule<T>>,
    pub t_new: T,
    pub sources: &'a Sources<T>,
}

/// Side vector from a cell to a facet midpoint: the circumcenter distance
/// when it points out of the cell through the facet, else the centroid
/// distance.
fn one_sided<T: Scalar>(center: Vec2<T>, centroid: Vec2<T>, mid: Vec2<T>, outward: Vec2<T>) -> Vec2<T> {
    let d = mid - center;
    let dc = mid - centroid;
    if d.dot(outward) > T::lit(0.05) * dc.dot(outward) {
        d
    } else {
        dc
    }
}

/// Unit-mobility, unit-area resistance of a side.
fn geometric_resistance<T: Scalar>(d: Vec2<T>, outward: Vec2<T>, k: &Tensor2<T>) -> T {
    half_resistance(T::one(), T::one(), d, outward, k)
}

/// `max λ / min λ` of the total mobility over both laws on a grid of `[0, 1]`.
fn mobility_spread<T: Scalar>(a: RelPermLaw, b: RelPermLaw, fluids: &PhaseParams<T>) -> T {
    // both laws, since a facet may separate bulk and fracture cells
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    for law in [a, b] {
        for i in 0..=1000 {
            let l = Mobilities::new(T::lit(i as f64 / 1000.0), law, fluids).total();
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    // grid minimum may miss the true one slightly
    hi / lo * T::lit(1.01)
}

#[inline]
fn gravity_term<T: Scalar>(n: Vec2<T>, k: &Tensor2<T>, fluids: &PhaseParams<T>, g: Vec2<T>) -> T {
    n.dot(k.apply(g)) * (fluids.density_nw - fluids.density_w)
}

impl<'a, T: Scalar> StepSystem<'a, T> {
    /// Freezes a step; `mesh.points` must hold the positions at `t_{n+1}`.
    pub fn new(
        mesh: &'a MovingMesh<T>,
        materials: &'a Materials<T>,
        boundary: &'a BoundaryConditions<T>,
        dt: T,
        input: &StepInput<'_, T>,
    ) -> Result<Self, SolverError> {
        let geom = mesh.geometry_at(&mesh.points)?;
        let old_geom_area: Vec<T> = mesh
            .triangles
            .iter()
            .map(|t| crate::geometry::signed_area(input.old_points[t[0]], input.old_points[t[1]], input.old_points[t[2]]))
            .collect();
        let rate: Vec<T> = mesh.facet_swept_volumes(input.old_points, &mesh.points).into_iter().map(|v| v / dt).collect();
        let centroid: Vec<Vec2<T>> = mesh
            .triangles
            .iter()
            .map(|t| (mesh.points[t[0]] + mesh.points[t[1]] + mesh.points[t[2]]) / T::three())
            .collect();

        // media and sources per cell
        let t1 = input.t_new;
        let mut medium = Vec::with_capacity(mesh.num_cells());
        let mut cell_q = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let a = geom.cell_area[c];
            match mesh.regions[c] {
                Region::Bulk => {
                    medium.push(materials.bulk);
                    cell_q.push([input.sources.bulk[0] * a, input.sources.bulk[1] * a]);
                }
                Region::Fracture => {
                    let d = match input.schedule {
                        Some(s) => {
                            let (u, _) = s.local(centroid[c]);
                            s.aperture_at_radius(u.abs().min(s.half_length(t1)), t1)
                        }
                        None => T::zero(),
                    };
                    medium.push(materials.fracture_medium(d.max(T::lit(crate::fluxes::APERTURE_FLOOR))));
                    cell_q.push([input.sources.fracture[0] * a, input.sources.fracture[1] * a]);
                }
            }
        }

        // side vectors with fallbacks for non-Delaunay pairs
        let mut dist = Vec::with_capacity(mesh.facets.len());
        let kappa = mobility_spread(materials.bulk.law, materials.fracture_law, &materials.fluids);
        for (f, facet) in mesh.facets.iter().enumerate() {
            let mid = geom.facet_mid[f];
            let n = geom.facet_normal[f];
            let p = facet.plus;
            let dp = one_sided(geom.cell_center[p], centroid[p], mid, n);
            let entry = match facet.minus {
                Neighbor::Boundary(_) => [dp, Vec2::zero()],
                Neighbor::Cell(m) => {
                    if matches!(facet.kind, FacetKind::Interface(_)) {
                        [dp, one_sided(geom.cell_center[m], centroid[m], mid, -n)]
                    } else {
                        let cp = mid - geom.cell_center[p];
                        let cm = mid - geom.cell_center[m];
                        let unit = n / n.norm();
                        let rp = geometric_resistance(cp, unit, &medium[p].permeability);
                        let rm = geometric_resistance(cm, -unit, &medium[m].permeability);
                        // a negative side must stay dominated for every
                        // admissible pair of mobilities
                        let sum = if rp < T::zero() || rm < T::zero() {
                            rp.max(rm) / kappa + rp.min(rm)
                        } else {
                            rp + rm
                        };
                        let gp = mid - centroid[p];
                        let gm = mid - centroid[m];
                        let fallback = geometric_resistance(gp, unit, &medium[p].permeability)
                            + geometric_resistance(gm, -unit, &medium[m].permeability);
                        if sum > T::lit(0.05) * fallback {
                            [cp, cm]
                        } else {
                            [gp, gm]
                        }
                    }
                }
            };
            dist.push(entry);
        }

        // interface data
        let ne = mesh.num_interface();
        let mut d_new = Vec::with_capacity(ne);
        let mut len_old = Vec::with_capacity(ne);
        let mut iface_q = Vec::with_capacity(ne);
        let aperture = |p: Vec2<T>| match input.schedule {
            Some(s) => {
                let (u, _) = s.local(p);
                s.aperture_at_radius(u.abs().min(s.half_length(t1)), t1)
            }
            None => T::zero(),
        };
        for (e, &[a, b]) in mesh.interface.iter().enumerate() {
            let d = aperture(geom.iface_mid[e]);
            d_new.push(d);
            len_old.push((input.old_points[b] - input.old_points[a]).norm());
            let dl = d * geom.iface_length[e];
            iface_q.push([input.sources.fracture[0] * dl, input.sources.fracture[1] * dl]);
        }
        let mut vertex_d = Vec::new();
        let mut vertex_rate = Vec::new();
        let mut vertex_tau = Vec::new();
        for e in 0..ne.saturating_sub(1) {
            let v = mesh.interface[e][1];
            debug_assert_eq!(v, mesh.interface[e + 1][0]);
            let tau = (geom.iface_mid[e + 1] - geom.iface_mid[e]).normalized();
            vertex_d.push(aperture(mesh.points[v]));
            vertex_rate.push((mesh.points[v] - input.old_points[v]).dot(tau) / dt);
            vertex_tau.push(tau);
        }

        let pin = if boundary.is_pure_neumann() && mesh.num_cells() > 0 { Some(0) } else { None };
        Ok(Self {
            mesh,
            geom,
            materials,
            boundary,
            dt,
            pin,
            area_old: old_geom_area,
            rate,
            dist,
            medium,
            cell_q,
            s_old: input.bulk_saturation.to_vec(),
            d_old: input.iface_aperture.to_vec(),
            d_new,
            len_old,
            sg_old: input.iface_saturation.to_vec(),
            iface_q,
            vertex_d,
            vertex_rate,
            vertex_tau,
            aperture_floor_hits: std::cell::Cell::new(0),
        })
    }

    pub fn num_unknowns(&self) -> usize {
        2 * (self.mesh.num_cells() + self.mesh.num_interface())
    }

    /// Apertures `d^{n+1}` of the interface elements.
    pub fn new_apertures(&self) -> &[T] {
        &self.d_new
    }

    pub fn cell_medium(&self, c: usize) -> &MediumParams<T> {
        &self.medium[c]
    }

    /// Integrated wetting and nonwetting sources at `t_{n+1}`.
    pub fn injected_rate(&self) -> [T; 2] {
        let mut q = [T::zero(); 2];
        for s in self.cell_q.iter().chain(self.iface_q.iter()) {
            q[0] += s[0];
            q[1] += s[1];
        }
        q
    }

    /// Wetting-phase volume `Σ φ S |K| + Σ φ_f d S_Γ |K_Γ|` at `t_{n+1}`.
    pub fn mass(&self, x: &[T]) -> T {
        let nc = self.mesh.num_cells();
        let mut m = T::zero();
        for c in 0..nc {
            m += self.medium[c].porosity * x[s_index(c)] * self.geom.cell_area[c];
        }
        for e in 0..self.mesh.num_interface() {
            m += self.materials.fracture_porosity * self.d_new[e] * x[s_index(nc + e)] * self.geom.iface_length[e];
        }
        m
    }

    /// Wetting-phase volume of the old state at `t_n`.
    pub fn old_mass(&self) -> T {
        let mut m = T::zero();
        for c in 0..self.mesh.num_cells() {
            m += self.medium[c].porosity * self.s_old[c] * self.area_old[c];
        }
        for e in 0..self.mesh.num_interface() {
            m += self.materials.fracture_porosity * self.d_old[e] * self.sg_old[e] * self.len_old[e];
        }
        m
    }

    /// Residual at `x`.
    pub fn residual(&self, x: &[T], out: &mut [T]) -> Result<(), SolverError> {
        self.evaluate(x, out, |_, _| {})
    }

    /// Residual at `x`, reporting every facet flux to `observe`.
    pub fn evaluate(
        &self,
        x: &[T],
        out: &mut [T],
        mut observe: impl FnMut(usize, FacetFlux<T>),
    ) -> Result<(), SolverError> {
        let mesh = self.mesh;
        let nc = mesh.num_cells();
        let fluids = &self.materials.fluids;
        let g = self.materials.gravity;
        let inv_dt = T::one() / self.dt;
        out.iter_mut().for_each(|r| *r = T::zero());

        for c in 0..nc {
            let phi = self.medium[c].porosity;
            out[s_index(c)] = phi * (x[s_index(c)] * self.geom.cell_area[c] - self.s_old[c] * self.area_old[c]) * inv_dt
                - self.cell_q[c][0];
            out[p_index(c)] = -(self.cell_q[c][0] + self.cell_q[c][1]);
        }

        for (f, facet) in mesh.facets.iter().enumerate() {
            let p = facet.plus;
            let n = self.geom.facet_normal[f];
            let sp = x[s_index(p)];
            let pp = x[p_index(p)];
            let mp = &self.medium[p];
            match (facet.kind, facet.minus) {
                (FacetKind::Boundary(side), _) => {
                    let BoundaryCondition::Dirichlet { pressure, saturation } = self.boundary.side(side) else {
                        continue;
                    };
                    let area = n.norm();
                    let unit = n / area;
                    let d = self.dist[f][0];
                    let mob = Mobilities::new(sp, mp.law, fluids);
                    let r = half_resistance(mob.total(), area, d, unit, &mp.permeability);
                    let tk = T::one() / r;
                    let gk = gravity_offset(&mob, fluids, d, g);
                    let v = dirichlet_flux(tk, gk, pp, pressure);
                    let ff = FluxFunction::new(mp.law, fluids, v, gravity_term(n, &mp.permeability, fluids, g));
                    let w = godunov_flux(sp, saturation, &ff);
                    out[s_index(p)] += w;
                    out[p_index(p)] += v;
                    observe(f, FacetFlux { total: v, wetting: w });
                }
                (FacetKind::Interior, Neighbor::Cell(m)) => {
                    let sm = x[s_index(m)];
                    let mm = &self.medium[m];
                    let ctx = FacetContext {
                        normal: n,
                        plus: TpfaSide { distance: self.dist[f][0], medium: *mp },
                        minus: TpfaSide { distance: self.dist[f][1], medium: *mm },
                    };
                    let tr = transmissibility(sp, sm, &ctx, fluids, g).map_err(crate::error::FluxError::from)?;
                    let v = -tr.t_f * (x[p_index(m)] - pp - tr.g_f);
                    let fp = FluxFunction::new(mp.law, fluids, v, gravity_term(n, &mp.permeability, fluids, g));
                    let w = if mp.law == mm.law && mp.permeability == mm.permeability {
                        godunov_flux(sp, sm, &fp)
                    } else {
                        let fm = FluxFunction::new(mm.law, fluids, v, gravity_term(n, &mm.permeability, fluids, g));
                        generalized_godunov_prepared(sp, sm, &PreparedFlux::new(&fp), &PreparedFlux::new(&fm))?
                    };
                    let h = geometric_flux(sp, sm, self.rate[f], mp.porosity, mm.porosity);
                    out[s_index(p)] += w + h;
                    out[s_index(m)] -= w + h;
                    out[p_index(p)] += v;
                    out[p_index(m)] -= v;
                    observe(f, FacetFlux { total: v, wetting: w });
                }
                (FacetKind::Interface(e), Neighbor::Cell(m)) => {
                    let ie = nc + e;
                    let sm = x[s_index(m)];
                    let sg = x[s_index(ie)];
                    let mm = &self.medium[m];
                    let area = n.norm();
                    let unit = n / area;
                    let (dp, dm) = (self.dist[f][0], self.dist[f][1]);
                    let mobp = Mobilities::new(sp, mp.law, fluids);
                    let mobm = Mobilities::new(sm, mm.law, fluids);
                    let mobg = Mobilities::new(sg, self.materials.fracture_law, fluids);
                    let tp = T::one() / half_resistance(mobp.total(), area, dp, unit, &mp.permeability);
                    let tm = T::one() / half_resistance(mobm.total(), area, dm, -unit, &mm.permeability);
                    let d = self.d_new[e];
                    if d < T::lit(crate::fluxes::APERTURE_FLOOR) {
                        self.aperture_floor_hits.set(self.aperture_floor_hits.get() + 1);
                    }
                    let kf = fracture_permeability(d.max(T::lit(crate::fluxes::APERTURE_FLOOR)));
                    let coupling = InterfaceCoupling::new(
                        tp,
                        tm,
                        gravity_offset(&mobp, fluids, dp, g),
                        gravity_offset(&mobm, fluids, dm, g),
                        d,
                        mobg.total(),
                        mobg.gravity_fraction(fluids),
                        kf,
                        area,
                        unit,
                        g,
                    );
                    let (vp, vm) = coupling.fluxes(pp, x[p_index(ie)], x[p_index(m)]);
                    let kf_t = Tensor2::isotropic(kf);
                    let side = |s: T, v: T, normal: Vec2<T>, medium: &MediumParams<T>| -> Result<T, SolverError> {
                        let fb = FluxFunction::new(medium.law, fluids, v, gravity_term(normal, &medium.permeability, fluids, g));
                        let ff = FluxFunction::new(self.materials.fracture_law, fluids, v, gravity_term(normal, &kf_t, fluids, g));
                        Ok(generalized_godunov_prepared(s, sg, &PreparedFlux::new(&fb), &PreparedFlux::new(&ff))?)
                    };
                    let wp = side(sp, vp, n, mp)?;
                    let wm = side(sm, vm, -n, mm)?;
                    let h = geometric_flux(sp, sm, self.rate[f], mp.porosity, mm.porosity);
                    out[s_index(p)] += wp + h;
                    out[s_index(m)] += wm - h;
                    out[p_index(p)] += vp;
                    out[p_index(m)] += vm;
                    out[s_index(ie)] -= wp + wm;
                    out[p_index(ie)] -= vp + vm;
                    observe(f, FacetFlux { total: vp, wetting: wp });
                }
                (_, Neighbor::Boundary(_)) => {}
            }
        }

        self.interface_rows(x, out);

        if let Some(c) = self.pin {
            out[p_index(c)] = x[p_index(c)];
        }
        Ok(())
    }

    fn interface_rows(&self, x: &[T], out: &mut [T]) {
        let mesh = self.mesh;
        let nc = mesh.num_cells();
        let ne = mesh.num_interface();
        if ne == 0 {
            return;
        }
        let fluids = &self.materials.fluids;
        let g = self.materials.gravity;
        let law = self.materials.fracture_law;
        let phi = self.materials.fracture_porosity;
        let inv_dt = T::one() / self.dt;
        for e in 0..ne {
            let ie = nc + e;
            let l1 = self.geom.iface_length[e];
            out[s_index(ie)] += phi * (self.d_new[e] * x[s_index(ie)] * l1 - self.d_old[e] * self.sg_old[e] * self.len_old[e])
                * inv_dt
                - self.iface_q[e][0];
            out[p_index(ie)] -= self.iface_q[e][0] + self.iface_q[e][1];
        }
        let floor = T::lit(crate::fluxes::APERTURE_FLOOR);
        let side = |e: usize| {
            let s = x[s_index(nc + e)];
            let d = self.d_new[e].max(floor);
            let mob = Mobilities::new(s, law, fluids);
            TangentialSide {
                saturation: s,
                pressure: x[p_index(nc + e)],
                aperture: d,
                conductance: mob.total() * fracture_permeability(d),
                half_length: self.geom.iface_length[e] * T::half(),
                gravity_fraction: mob.gravity_fraction(fluids),
            }
        };
        for k in 0..ne - 1 {
            let (i, j) = (k, k + 1);
            let (si, sj) = (side(i), side(j));
            let tau = self.vertex_tau[k];
            let dv = self.vertex_d[k].max(floor);
            let g_tau = g.dot(tau);
            let flux = tangential_velocity(&si, &sj, dv, g_tau);
            let gt = fracture_permeability(dv) * (fluids.density_nw - fluids.density_w) * g_tau;
            let ff = FluxFunction::new(law, fluids, flux / dv, gt);
            let w = dv * godunov_flux(si.saturation, sj.saturation, &ff);
            let h = geometric_flux(si.saturation, sj.saturation, self.vertex_rate[k], phi * dv, phi * dv);
            out[s_index(nc + i)] += w + h;
            out[s_index(nc + j)] -= w + h;
            out[p_index(nc + i)] += flux;
            out[p_index(nc + j)] -= flux;
        }
    }

    /// Dependency graph over cells and interface elements: every residual
    /// row of a node depends only on the unknowns of the node and its
    /// neighbors.
    pub fn dependency_graph(&self) -> Vec<Vec<usize>> {
        let mesh = self.mesh;
        let nc = mesh.num_cells();
        let ne = mesh.num_interface();
        let mut adj = vec![Vec::new(); nc + ne];
        let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
            if !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        };
        for facet in &mesh.facets {
            if let Neighbor::Cell(m) = facet.minus {
                link(facet.plus, m, &mut adj);
                if let FacetKind::Interface(e) = facet.kind {
                    link(facet.plus, nc + e, &mut adj);
                    link(m, nc + e, &mut adj);
                }
            }
        }
        for e in 0..ne.saturating_sub(1) {
            link(nc + e, nc + e + 1, &mut adj);
        }
        adj
    }

    /// Wetting and total flux leaving through Dirichlet boundaries.
    pub fn boundary_outflow(&self, x: &[T]) -> Result<[T; 2], SolverError> {
        let mut out = vec![T::zero(); x.len()];
        let mut q = [T::zero(); 2];
        let facets = &self.mesh.facets;
        self.evaluate(x, &mut out, |f, flux| {
            if matches!(facets[f].kind, FacetKind::Boundary(_)) {
                q[0] += flux.wetting;
                q[1] += flux.total;
            }
        })?;
        Ok(q)
    }

    /// Total velocity flux per facet, leaving the plus side.
    pub fn facet_velocities(&self, x: &[T]) -> Result<Vec<T>, SolverError> {
        let mut out = vec![T::zero(); x.len()];
        let mut v = vec![T::zero(); self.mesh.facets.len()];
        self.evaluate(x, &mut out, |f, flux| v[f] = flux.total)?;
        Ok(v)
    }
}

/// Packs bulk and interface values into the interleaved unknown vector.
pub fn pack<T: Scalar>(bulk_s: &[T], bulk_p: &[T], iface_s: &[T], iface_p: &[T]) -> Vec<T> {
    let mut x = Vec::with_capacity(2 * (bulk_s.len() + iface_s.len()));
    for (s, p) in bulk_s.iter().zip(bulk_p).chain(iface_s.iter().zip(iface_p)) {
        x.push(*s);
        x.push(*p);
    }
    x
}

/// Inverse of [`pack`]: `(bulk S, bulk P, interface S, interface P)`.
pub fn unpack<T: Scalar>(x: &[T], nc: usize) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
    let n = x.len() / 2;
    let s: Vec<T> = (0..n).map(|i| x[2 * i]).collect();
    let p: Vec<T> = (0..n).map(|i| x[2 * i + 1]).collect();
    (s[..nc].to_vec(), p[..nc].to_vec(), s[nc..].to_vec(), p[nc..].to_vec())
}
