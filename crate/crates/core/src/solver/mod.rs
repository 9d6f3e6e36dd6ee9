//! The coupled implicit moving-mesh time step.

mod assembly;
mod newton;

pub use assembly::{
    fracture_permeability, p_index, pack, s_index, unpack, BoundaryCondition, BoundaryConditions, FacetFlux, Materials,
    Sources, StepInput, StepSystem,
};
pub use newton::{color_distance2, fd_jacobian, newton_solve, JacobianPattern, NewtonOptions, NewtonOutcome};

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::geometry::{signed_area, Vec2};
use crate::mesh::{
    compute_velocities, remesh, BulkState, InterfaceState, MeshMode, MotionOptions, MovingMesh, RemeshOptions,
    SizeField, StripSize, UniformSize, VertexRole,
};
use crate::scalar::Scalar;
use crate::schedule::FractureSchedule;

/// Discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics<T> {
    /// Bulk target edge length.
    pub h: T,
    /// Refinement factor at the resolved fracture boundary.
    pub refinement: T,
    pub grading: T,
    /// Blending radius of the bulk vertex motion, in units of `h`.
    pub blend_factor: T,
    pub remesh: RemeshOptions<T>,
    pub newton: NewtonOptions,
    pub max_halvings: usize,
}

impl<T: Scalar> Numerics<T> {
    pub fn new(h: T) -> Self {
        Self {
            h,
            refinement: T::lit(4.0),
            grading: T::lit(0.3),
            blend_factor: T::lit(3.0),
            remesh: RemeshOptions::default(),
            newton: NewtonOptions::default(),
            max_halvings: 5,
        }
    }
}

/// Everything the step needs besides mesh and state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem<T> {
    pub materials: Materials<T>,
    pub boundary: BoundaryConditions<T>,
    pub sources: Sources<T>,
    /// `None` keeps the mesh static.
    pub schedule: Option<FractureSchedule<T>>,
    pub mode: MeshMode,
    pub numerics: Numerics<T>,
}

impl<T: Scalar> Problem<T> {
    pub fn porosity(&self) -> [T; 2] {
        [self.materials.bulk.porosity, self.materials.fracture_porosity]
    }

    /// Target size field used by the remeshing indicator at time `t`.
    pub fn size_field(&self, t: T) -> Box<dyn SizeField<T> + '_> {
        let h = self.numerics.h;
        match (self.mode, self.schedule) {
            (MeshMode::Full, Some(schedule)) => Box::new(StripSize {
                schedule,
                time: t,
                h,
                h_fine: h / self.numerics.refinement,
                grading: self.numerics.grading,
            }),
            _ => Box::new(UniformSize(h)),
        }
    }

    pub fn motion(&self) -> MotionOptions<T> {
        MotionOptions { blend_radius: self.numerics.blend_factor * self.numerics.h }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState<T> {
    pub bulk: BulkState<T>,
    pub interface: InterfaceState<T>,
    pub time: T,
}

impl<T: Scalar> SystemState<T> {
    /// Wetting-phase volume on `mesh` at its current positions.
    pub fn mass(&self, mesh: &MovingMesh<T>, porosity: [T; 2]) -> T {
        let mut m = T::zero();
        for (c, t) in mesh.triangles.iter().enumerate() {
            let a = signed_area(mesh.points[t[0]], mesh.points[t[1]], mesh.points[t[2]]);
            m += porosity[mesh.regions[c].index()] * self.bulk.saturation[c] * a;
        }
        for (e, &[a, b]) in mesh.interface.iter().enumerate() {
            let l = (mesh.points[b] - mesh.points[a]).norm();
            m += porosity[1] * self.interface.aperture[e] * self.interface.saturation[e] * l;
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RemeshSummary {
    pub passes: usize,
    pub removed: usize,
    pub inserted: usize,
    pub flips: usize,
    pub components: usize,
    pub bulk_defect: f64,
    pub interface_defect: f64,
}

/// Audit record of one accepted step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    /// Wetting volume injected by sources during the step.
    pub injected: f64,
    /// Wetting volume leaving through Dirichlet boundaries.
    pub outflow: f64,
    /// `|after - before - injected + outflow| / max(after, before)`.
    pub mass_defect: f64,
    pub dgcl: f64,
    pub remesh: Option<RemeshSummary>,
    pub halvings: usize,
    pub cells: usize,
    pub interface_elements: usize,
    pub aperture_floor_hits: usize,
}

fn velocities<T: Scalar>(problem: &Problem<T>, roles: &[VertexRole], pts: &[Vec2<T>], t0: T, t1: T) -> Vec<Vec2<T>> {
    match &problem.schedule {
        Some(s) => compute_velocities(roles, pts, s, t0, t1, &problem.motion()),
        None => vec![Vec2::zero(); pts.len()],
    }
}

/// One step from `state.time` to `t1`: remesh if the predicted geometry is
/// flagged, move the vertices, update apertures, solve, audit.
pub fn advance<T: Scalar>(
    problem: &Problem<T>,
    mesh: &MovingMesh<T>,
    state: &SystemState<T>,
    t1: T,
) -> Result<(MovingMesh<T>, SystemState<T>, StepReport), SolverError> {
    let t0 = state.time;
    let dt = t1 - t0;
    let porosity = problem.porosity();
    let mass_before = state.mass(mesh, porosity);
    let mut mesh = mesh.clone();
    let mut bulk = state.bulk.clone();
    let mut iface = state.interface.clone();
    let mut summary = None;

    if problem.schedule.is_some() {
        mesh.velocities = velocities(problem, &mesh.roles, &mesh.points, t0, t1);
        let size = problem.size_field(t1);
        let vf = |roles: &[VertexRole], pts: &[Vec2<T>]| velocities(problem, roles, pts, t0, t1);
        if let Some(r) = remesh(&mesh, &bulk, &iface, dt, porosity, size.as_ref(), &problem.numerics.remesh, &vf)? {
            summary = Some(RemeshSummary {
                passes: r.log.passes,
                removed: r.log.removed,
                inserted: r.log.inserted,
                flips: r.log.flips,
                components: r.log.components.len(),
                bulk_defect: r.log.max_bulk_defect().to_f64_lossy(),
                interface_defect: r.log.max_interface_defect().to_f64_lossy(),
            });
            mesh = r.mesh;
            bulk = r.bulk;
            iface = r.interface;
            mesh.velocities = velocities(problem, &mesh.roles, &mesh.points, t0, t1);
        }
    }

    let p0 = mesh.points.clone();
    mesh.move_vertices(dt)?;
    let dgcl = mesh.dgcl_residual(&p0, &mesh.points).to_f64_lossy();

    let input = StepInput {
        old_points: &p0,
        bulk_saturation: &bulk.saturation,
        iface_saturation: &iface.saturation,
        iface_aperture: &iface.aperture,
        schedule: problem.schedule.as_ref(),
        t_new: t1,
        sources: &problem.sources,
    };
    let system = StepSystem::new(&mesh, &problem.materials, &problem.boundary, dt, &input)?;
    let nc = mesh.num_cells();
    let mut x = pack(&bulk.saturation, &bulk.pressure, &iface.saturation, &iface.pressure);
    let pattern = JacobianPattern::new(system.dependency_graph());
    let project = |x: &mut [T]| {
        for c in 0..nc {
            x[s_index(c)] = x[s_index(c)].clamp_to(T::zero(), T::one());
        }
        for i in nc..x.len() / 2 {
            x[s_index(i)] = x[s_index(i)].max(T::zero());
        }
    };
    project(&mut x);
    let outcome = newton_solve(&mut x, &pattern, |x, r| system.residual(x, r), project, &problem.numerics.newton)?;

    let mass_after = system.mass(&x);
    let q = system.injected_rate();
    let injected = dt * q[0];
    let outflow = dt * system.boundary_outflow(&x)?[0];
    let scale = mass_after.abs().max(mass_before.abs()).max(T::min_positive_value());
    let defect = ((mass_after - mass_before - injected + outflow).abs() / scale).to_f64_lossy();

    let (s, p, sg, pg) = unpack(&x, nc);
    let report = StepReport {
        step: 0,
        time: t1.to_f64_lossy(),
        dt: dt.to_f64_lossy(),
        newton_iterations: outcome.iterations,
        residual: outcome.residual,
        mass_before: mass_before.to_f64_lossy(),
        mass_after: mass_after.to_f64_lossy(),
        injected: injected.to_f64_lossy(),
        outflow: outflow.to_f64_lossy(),
        mass_defect: defect,
        dgcl,
        remesh: summary,
        halvings: 0,
        cells: nc,
        interface_elements: mesh.num_interface(),
        aperture_floor_hits: system.aperture_floor_hits.get(),
    };
    let d_new = system.new_apertures().to_vec();
    drop(system);
    let state = SystemState {
        bulk: BulkState { saturation: s, pressure: p },
        interface: InterfaceState { saturation: sg, pressure: pg, aperture: d_new },
        time: t1,
    };
    Ok((mesh, state, report))
}

/// A running simulation owning its mesh and state.
#[derive(Clone, Debug)]
pub struct Simulation<T> {
    pub problem: Problem<T>,
    pub mesh: MovingMesh<T>,
    pub state: SystemState<T>,
    pub steps: usize,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(problem: Problem<T>, mesh: MovingMesh<T>, state: SystemState<T>) -> Self {
        Self { problem, mesh, state, steps: 0 }
    }

    pub fn mass(&self) -> T {
        self.state.mass(&self.mesh, self.problem.porosity())
    }

    /// Advances by `dt`, halving rejected steps up to `max_halvings` times.
    /// Returns one report per accepted substep.
    pub fn step(&mut self, dt: T) -> Result<Vec<StepReport>, SolverError> {
        let mut reports = Vec::new();
        let t1 = self.state.time + dt;
        self.attempt(t1, 0, &mut reports)?;
        Ok(reports)
    }

    fn attempt(&mut self, t1: T, depth: usize, reports: &mut Vec<StepReport>) -> Result<(), SolverError> {
        match advance(&self.problem, &self.mesh, &self.state, t1) {
            Ok((mesh, state, mut report)) => {
                self.steps += 1;
                report.step = self.steps;
                report.halvings = depth;
                self.mesh = mesh;
                self.state = state;
                reports.push(report);
                Ok(())
            }
            Err(e) => {
                if depth >= self.problem.numerics.max_halvings {
                    log::error!("step to t = {t1} failed: {e}");
                    return Err(SolverError::StepAborted { halvings: depth, time: t1.to_f64_lossy() });
                }
                log::warn!("step to t = {t1} rejected ({e}), halving");
                let mid = (self.state.time + t1) * T::half();
                self.attempt(mid, depth + 1, reports)?;
                self.attempt(t1, depth + 1, reports)
            }
        }
    }
}
