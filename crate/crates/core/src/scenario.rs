//! Built-in experiments, scenario files and the reduced/full comparison.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error};
use crate::geometry::{Tensor2, Vec2};
use crate::mesh::{
    build_fracture_mesh, build_strip_mesh, segment_average, sample_cell, BulkState, CellLocator, FractureMeshOptions,
    InterfaceState, MeshMode, MovingMesh, Region,
};
use crate::physics::{fractional_flow, MediumParams, PhaseParams, RelPermLaw};
use crate::scalar::Scalar;
use crate::schedule::FractureSchedule;
use crate::solver::{BoundaryCondition, BoundaryConditions, Materials, Numerics, Problem, Sources, SystemState};

/// Standard gravity, pointing in `-y`.
pub const GRAVITY: f64 = 9.81;

/// Fluids and media shared by all built-in cases.
pub fn reference_materials<T: Scalar>(gravity: bool) -> Materials<T> {
    Materials {
        fluids: PhaseParams::reference(),
        bulk: MediumParams { porosity: T::one(), permeability: Tensor2::isotropic(T::lit(1e-8)), law: RelPermLaw::Quadratic },
        fracture_porosity: T::one(),
        fracture_law: RelPermLaw::Quadratic,
        gravity: if gravity { Vec2::new(T::zero(), -T::lit(GRAVITY)) } else { Vec2::zero() },
    }
}

/// A ready-to-run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig<T> {
    /// Built-in case id, 0 for custom configurations.
    pub case: u32,
    pub problem: Problem<T>,
    pub t_end: T,
    pub dt: T,
    /// Initial bulk and fracture saturation.
    pub initial_saturation: T,
}

impl<T: Scalar> CaseConfig<T> {
    pub fn mode(&self) -> MeshMode {
        self.problem.mode
    }

    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Builds the mesh and the initial state.
    pub fn initialize(&self) -> Result<(MovingMesh<T>, SystemState<T>), Error> {
        let schedule = self.problem.schedule.ok_or_else(|| ConfigError::InvalidField {
            field: "schedule".into(),
            message: "fracture configurations need a schedule".into(),
        })?;
        let n = &self.problem.numerics;
        let mut opts = FractureMeshOptions::new(n.h, self.problem.mode);
        opts.refinement = n.refinement;
        opts.grading = n.grading;
        let mesh = build_fracture_mesh(&schedule, &opts)?;
        let state = initial_state(&mesh, Some(&schedule), self.initial_saturation, T::zero());
        Ok((mesh, state))
    }
}

/// Constant saturation, zero pressure, apertures from the schedule.
pub fn initial_state<T: Scalar>(
    mesh: &MovingMesh<T>,
    schedule: Option<&FractureSchedule<T>>,
    saturation: T,
    t: T,
) -> SystemState<T> {
    let nc = mesh.num_cells();
    let ne = mesh.num_interface();
    let aperture = mesh
        .interface
        .iter()
        .map(|&[a, b]| match schedule {
            Some(s) => {
                let (u, _) = s.local(mesh.points[a].midpoint(mesh.points[b]));
                s.aperture_at_radius(u.abs().min(s.half_length(t)), t)
            }
            None => T::zero(),
        })
        .collect();
    SystemState {
        bulk: BulkState { saturation: vec![saturation; nc], pressure: vec![T::zero(); nc] },
        interface: InterfaceState { saturation: vec![saturation; ne], pressure: vec![T::zero(); ne], aperture },
        time: t,
    }
}

/// Configuration of built-in case 1, 2 or 3 at bulk resolution `h`.
pub fn case_config<T: Scalar>(case: u32, mode: MeshMode, h: T) -> Result<CaseConfig<T>, ConfigError> {
    let top = BoundaryCondition::Dirichlet { pressure: T::zero(), saturation: T::zero() };
    let (materials, boundary, sources, schedule, s0) = match case {
        1 => (
            reference_materials(false),
            BoundaryConditions::no_flow(),
            Sources::default(),
            FractureSchedule::diagonal(T::lit(0.1), T::lit(0.25), T::zero()),
            T::one(),
        ),
        2 | 3 => {
            let v_prolong = if case == 2 { T::lit(0.25) } else { T::zero() };
            let v_squeeze = if case == 2 { T::zero() } else { T::lit(0.005) };
            (
                reference_materials(true),
                BoundaryConditions { top, ..BoundaryConditions::no_flow() },
                Sources { bulk: [T::zero(); 2], fracture: [T::lit(10.0); 2] },
                FractureSchedule::diagonal(T::lit(0.01), v_prolong, v_squeeze),
                T::zero(),
            )
        }
        other => return Err(ConfigError::UnknownCase(other)),
    };
    let t_end = T::one();
    Ok(CaseConfig {
        case,
        problem: Problem { materials, boundary, sources, schedule: Some(schedule), mode, numerics: Numerics::new(h) },
        t_end,
        dt: t_end / T::lit(100.0),
        initial_saturation: s0,
    })
}

/// Mesh, initial state and configuration of a built-in case.
pub fn build_case<T: Scalar>(
    case: u32,
    mode: MeshMode,
    h: T,
) -> Result<(MovingMesh<T>, SystemState<T>, CaseConfig<T>), Error> {
    let config = case_config(case, mode, h)?;
    let (mesh, state) = config.initialize()?;
    Ok((mesh, state, config))
}

// ---------------------------------------------------------------------------
// scenario files

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub case: u32,
    pub mode: Option<MeshMode>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub mesh: MeshSection,
    pub schedule: Option<ScheduleSection>,
    pub materials: Option<MaterialsSection>,
    pub sources: Option<Sources<f64>>,
    pub boundary: Option<BoundarySection>,
    #[serde(default)]
    pub newton: NewtonSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub h: Option<f64>,
    pub refinement: Option<f64>,
    pub grading: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub d0: Option<f64>,
    pub v_prolong: Option<f64>,
    pub v_squeeze: Option<f64>,
    pub r0: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    pub density_w: Option<f64>,
    pub density_nw: Option<f64>,
    pub viscosity_w: Option<f64>,
    pub viscosity_nw: Option<f64>,
    pub porosity: Option<f64>,
    pub permeability: Option<f64>,
    pub fracture_porosity: Option<f64>,
    pub gravity: Option<f64>,
    pub initial_saturation: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub bottom: Option<BoundaryCondition<f64>>,
    pub right: Option<BoundaryCondition<f64>>,
    pub top: Option<BoundaryCondition<f64>>,
    pub left: Option<BoundaryCondition<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSection {
    pub max_iterations: Option<usize>,
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidField { field: field.into(), message: message.into() }
}

fn positive(field: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(invalid(field, format!("must be positive, got {x}"))),
        _ => Ok(v),
    }
}

fn fraction(field: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !(0.0..=1.0).contains(&x) => Err(invalid(field, format!("must lie in [0, 1], got {x}"))),
        _ => Ok(v),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// The built-in case with every given field overridden.
    pub fn to_config<T: Scalar>(&self, default_mode: MeshMode, default_h: T) -> Result<CaseConfig<T>, ConfigError> {
        let lit = T::lit;
        let h = positive("mesh.h", self.mesh.h)?.map(lit).unwrap_or(default_h);
        let mut c = case_config(self.case, self.mode.unwrap_or(default_mode), h)?;
        if let Some(t) = positive("time.t_end", self.time.t_end)? {
            c.t_end = lit(t);
            c.dt = c.t_end / T::lit(100.0);
        }
        if let Some(dt) = positive("time.dt", self.time.dt)? {
            c.dt = lit(dt);
        }
        let n = &mut c.problem.numerics;
        if let Some(r) = positive("mesh.refinement", self.mesh.refinement)? {
            n.refinement = lit(r);
        }
        if let Some(g) = positive("mesh.grading", self.mesh.grading)? {
            n.grading = lit(g);
        }
        if let Some(x) = self.newton.max_iterations {
            n.newton.max_iterations = x;
        }
        if let Some(x) = positive("newton.atol", self.newton.atol)? {
            n.newton.atol = x;
        }
        if let Some(x) = positive("newton.rtol", self.newton.rtol)? {
            n.newton.rtol = x;
        }
        if let Some(s) = &self.schedule {
            let sch = c.problem.schedule.as_mut().expect("built-in cases carry a schedule");
            if let Some(x) = positive("schedule.d0", s.d0)? {
                sch.d0 = lit(x);
            }
            if let Some(x) = positive("schedule.r0", s.r0)? {
                sch.r0 = lit(x);
            }
            if let Some(x) = s.v_prolong {
                sch.v_prolong = lit(x);
            }
            if let Some(x) = s.v_squeeze {
                sch.v_squeeze = lit(x);
            }
            if !sch.is_admissible(c.t_end) {
                return Err(invalid("schedule", "fracture degenerates or leaves the domain before t_end"));
            }
        }
        if let Some(m) = &self.materials {
            let mat = &mut c.problem.materials;
            let f = &mut mat.fluids;
            for (field, value, slot) in [
                ("materials.density_w", m.density_w, &mut f.density_w),
                ("materials.density_nw", m.density_nw, &mut f.density_nw),
                ("materials.viscosity_w", m.viscosity_w, &mut f.viscosity_w),
                ("materials.viscosity_nw", m.viscosity_nw, &mut f.viscosity_nw),
            ] {
                if let Some(x) = positive(field, value)? {
                    *slot = lit(x);
                }
            }
            if let Some(x) = fraction("materials.porosity", positive("materials.porosity", m.porosity)?)? {
                mat.bulk.porosity = lit(x);
            }
            if let Some(x) = positive("materials.permeability", m.permeability)? {
                mat.bulk.permeability = Tensor2::isotropic(lit(x));
            }
            if let Some(x) =
                fraction("materials.fracture_porosity", positive("materials.fracture_porosity", m.fracture_porosity)?)?
            {
                mat.fracture_porosity = lit(x);
            }
            if let Some(g) = m.gravity {
                mat.gravity = Vec2::new(T::zero(), -lit(g));
            }
            if let Some(s) = fraction("materials.initial_saturation", m.initial_saturation)? {
                c.initial_saturation = lit(s);
            }
        }
        if let Some(s) = &self.sources {
            let cv = |a: [f64; 2]| [lit(a[0]), lit(a[1])];
            c.problem.sources = Sources { bulk: cv(s.bulk), fracture: cv(s.fracture) };
        }
        if let Some(b) = &self.boundary {
            let bc = &mut c.problem.boundary;
            for (field, value, slot) in [
                ("boundary.bottom", b.bottom, &mut bc.bottom),
                ("boundary.right", b.right, &mut bc.right),
                ("boundary.top", b.top, &mut bc.top),
                ("boundary.left", b.left, &mut bc.left),
            ] {
                match value {
                    None => {}
                    Some(BoundaryCondition::NoFlow) => *slot = BoundaryCondition::NoFlow,
                    Some(BoundaryCondition::Dirichlet { pressure, saturation }) => {
                        fraction(field, Some(saturation))?;
                        *slot = BoundaryCondition::Dirichlet { pressure: lit(pressure), saturation: lit(saturation) };
                    }
                }
            }
        }
        if c.num_steps() == 0 {
            return Err(invalid("time.dt", "larger than t_end"));
        }
        Ok(c)
    }
}

// ---------------------------------------------------------------------------
// reduced versus full comparison

/// One sample of a plot-over-line comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub arclength: f64,
    pub x: f64,
    pub y: f64,
    /// Whether the sample lies on the fracture.
    pub in_fracture: bool,
    pub reduced: f64,
    pub full: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub time: f64,
    pub rows: Vec<ComparisonRow>,
    /// `∫ |S_reduced - S_full| ds`
    pub l1_difference: f64,
    /// `∫ |S_full| ds`
    pub l1_full: f64,
}

impl Comparison {
    pub fn relative_l1(&self) -> f64 {
        if self.l1_full > 0.0 {
            self.l1_difference / self.l1_full
        } else {
            self.l1_difference
        }
    }

    /// Largest `|ΔS|` over samples farther than `margin` from both tips.
    pub fn max_deviation_away_from_tips(&self, schedule: &FractureSchedule<f64>, margin: f64) -> f64 {
        let tips = [schedule.tip(-1, self.time), schedule.tip(1, self.time)];
        self.rows
            .iter()
            .filter(|r| tips.iter().all(|t| (Vec2::new(r.x, r.y) - *t).norm() > margin))
            .map(|r| (r.reduced - r.full).abs())
            .fold(0.0, f64::max)
    }
}

/// Reduced-model saturation at `p`: the interface element for points on
/// the fracture, the containing bulk cell otherwise.
fn reduced_value<T: Scalar>(mesh: &MovingMesh<T>, state: &SystemState<T>, p: Vec2<T>, on_fracture: bool) -> Option<T> {
    if on_fracture {
        let best = mesh.interface.iter().enumerate().min_by(|(_, x), (_, y)| {
            let dx = segment_distance(p, mesh.points[x[0]], mesh.points[x[1]]);
            let dy = segment_distance(p, mesh.points[y[0]], mesh.points[y[1]]);
            dx.partial_cmp(&dy).unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some((e, _)) = best {
            return Some(state.interface.saturation[e]);
        }
    }
    sample_cell(mesh, p).map(|c| state.bulk.saturation[c])
}

fn segment_distance<T: Scalar>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let l2 = ab.dot(ab);
    let t = if l2 > T::zero() { ((p - a).dot(ab) / l2).clamp_to(T::zero(), T::one()) } else { T::zero() };
    (p - (a + ab * t)).norm()
}

/// Samples both solutions at `n` equidistant points of the segment `a-b`.
/// Inside the fracture the full solution is averaged across the aperture.
pub fn compare_reduced_full<T: Scalar>(
    reduced: (&MovingMesh<T>, &SystemState<T>),
    full: (&MovingMesh<T>, &SystemState<T>),
    schedule: &FractureSchedule<T>,
    line: [Vec2<T>; 2],
    n: usize,
) -> Result<Comparison, ConfigError> {
    let (rm, rs) = reduced;
    let (fm, fs) = full;
    let (tr, tf) = (rs.time.to_f64_lossy(), fs.time.to_f64_lossy());
    if (tr - tf).abs() > 1e-9 * tr.abs().max(1.0) {
        return Err(ConfigError::TimeMismatch(tr, tf));
    }
    let t = rs.time;
    let n = n.max(2);
    let locator = CellLocator::new(fm, &fm.points);
    let len = (line[1] - line[0]).norm();
    let ds = len / T::lit((n - 1) as f64);
    let normal = schedule.normal();
    let mut rows = Vec::with_capacity(n);
    let (mut l1, mut norm) = (0.0, 0.0);
    for i in 0..n {
        let s = ds * T::lit(i as f64);
        let p = line[0] + (line[1] - line[0]) * (s / len);
        let (u, w) = schedule.local(p);
        let radius = schedule.half_length(t);
        let on_fracture = w.abs() <= T::lit(1e-12) && u.abs() < radius;
        let r = reduced_value(rm, rs, p, on_fracture).unwrap_or(T::zero());
        let d = if on_fracture { schedule.aperture_at_radius(u.abs(), t) } else { T::zero() };
        let f = if on_fracture && d > T::lit(1e-12) {
            let avg = segment_average(fm, &fm.points, &locator, &fs.bulk, None, p, d, normal);
            avg.saturation
        } else {
            locator.locate(fm, &fm.points, p).map(|c| fs.bulk.saturation[c]).unwrap_or(T::zero())
        };
        let wgt = if i == 0 || i == n - 1 { ds * T::half() } else { ds }.to_f64_lossy();
        let (rf, ff) = (r.to_f64_lossy(), f.to_f64_lossy());
        l1 += wgt * (rf - ff).abs();
        norm += wgt * ff.abs();
        rows.push(ComparisonRow {
            arclength: s.to_f64_lossy(),
            x: p.x.to_f64_lossy(),
            y: p.y.to_f64_lossy(),
            in_fracture: on_fracture,
            reduced: rf,
            full: ff,
        });
    }
    Ok(Comparison { time: tr, rows, l1_difference: l1, l1_full: norm })
}

/// Whether `mesh` has resolved fracture cells.
pub fn has_fracture_cells<T>(mesh: &MovingMesh<T>) -> bool {
    mesh.regions.contains(&Region::Fracture)
}

// ---------------------------------------------------------------------------
// Buckley-Leverett column

/// Horizontal displacement column: wetting fluid enters on the left. The
/// default run ends when the front has crossed about two thirds of it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnConfig {
    pub length: f64,
    pub cells: usize,
    pub permeability: f64,
    pub pressure_drop: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for ColumnConfig {
    fn default() -> Self {
        Self { length: 1.0, cells: 50, permeability: 1.0, pressure_drop: 1.0, t_end: 2.5, steps: 100 }
    }
}

impl ColumnConfig {
    pub fn problem<T: Scalar>(&self) -> Problem<T> {
        let mut materials = reference_materials::<T>(false);
        materials.bulk.permeability = Tensor2::isotropic(T::lit(self.permeability));
        let h = T::lit(self.length / self.cells as f64);
        Problem {
            materials,
            boundary: BoundaryConditions {
                left: BoundaryCondition::Dirichlet { pressure: T::lit(self.pressure_drop), saturation: T::one() },
                right: BoundaryCondition::Dirichlet { pressure: T::zero(), saturation: T::zero() },
                ..BoundaryConditions::no_flow()
            },
            sources: Sources::default(),
            schedule: None,
            mode: MeshMode::Reduced,
            numerics: Numerics::new(h),
        }
    }

    pub fn initialize<T: Scalar>(&self) -> Result<(MovingMesh<T>, SystemState<T>), Error> {
        let mesh = build_strip_mesh(T::lit(self.length), self.cells)?;
        let state = initial_state(&mesh, None, T::zero(), T::zero());
        Ok((mesh, state))
    }
}

/// Saturation behind the Buckley-Leverett shock: the tangency point
/// `f(S) / S = f'(S)` of the fractional-flow curve, found by bisection.
pub fn welge_saturation(law: RelPermLaw, fluids: &PhaseParams<f64>) -> f64 {
    let f = |s: f64| fractional_flow(s, law, fluids).unwrap_or(0.0);
    let g = |s: f64| {
        let e = 1e-7;
        let df = (f((s + e).min(1.0)) - f((s - e).max(0.0))) / ((s + e).min(1.0) - (s - e).max(0.0));
        f(s) / s - df
    };
    // g < 0 below the tangency point, g > 0 above
    let (mut lo, mut hi) = (1e-3, 1.0 - 1e-9);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Front position of a column solution: the largest `x` at which the
/// saturation profile, linearly interpolated between cell centroids,
/// reaches `level`.
pub fn front_position<T: Scalar>(mesh: &MovingMesh<T>, saturation: &[T], level: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = mesh
        .triangles
        .iter()
        .zip(saturation)
        .map(|(t, s)| {
            let x = (mesh.points[t[0]].x + mesh.points[t[1]].x + mesh.points[t[2]].x) / T::lit(3.0);
            (x.to_f64_lossy(), s.to_f64_lossy())
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average cells sharing a centroid abscissa
    let mut merged: Vec<(f64, f64, usize)> = Vec::new();
    for (x, s) in pts {
        match merged.last_mut() {
            Some(m) if (m.0 - x).abs() < 1e-12 => {
                m.1 += s;
                m.2 += 1;
            }
            _ => merged.push((x, s, 1)),
        }
    }
    let prof: Vec<(f64, f64)> = merged.into_iter().map(|(x, s, k)| (x, s / k as f64)).collect();
    let mut front = 0.0;
    for w in prof.windows(2) {
        let ((x0, s0), (x1, s1)) = (w[0], w[1]);
        if s0 >= level && s1 < level {
            front = x0 + (x1 - x0) * (s0 - level) / (s0 - s1);
        }
    }
    if let Some(&(x, s)) = prof.last() {
        if s >= level {
            front = x;
        }
    }
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_case_is_rejected() {
        assert_eq!(case_config::<f64>(4, MeshMode::Reduced, 0.1).unwrap_err(), ConfigError::UnknownCase(4));
    }

    #[test]
    fn case_constants() {
        let c1 = case_config::<f64>(1, MeshMode::Reduced, 0.1).unwrap();
        let s = c1.problem.schedule.unwrap();
        assert!((s.half_length(1.0) - 0.5).abs() < 1e-15);
        assert!((s.aperture_at_radius(0.0, 1.0) - 0.1 * 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(c1.problem.materials.gravity, Vec2::zero());
        assert!(c1.problem.boundary.is_pure_neumann());
        assert_eq!(c1.initial_saturation, 1.0);
        let c2 = case_config::<f64>(2, MeshMode::Full, 0.1).unwrap();
        assert!((c2.problem.schedule.unwrap().aperture_at_radius(0.0, 0.0) - 0.009682458365518543).abs() < 1e-12);
        assert_eq!(c2.problem.sources.fracture, [10.0, 10.0]);
        assert_eq!(c2.initial_saturation, 0.0);
        assert!(matches!(c2.problem.boundary.top, BoundaryCondition::Dirichlet { .. }));
        let c3 = case_config::<f64>(3, MeshMode::Reduced, 0.1).unwrap();
        assert!((c3.problem.schedule.unwrap().aperture_factor(1.0) - 0.005).abs() < 1e-15);
        assert_eq!(c3.num_steps(), 100);
    }

    #[test]
    fn scenario_overrides() {
        let text = r#"
case = 2
mode = "full"
[time]
t_end = 0.5
[mesh]
h = 0.05
[schedule]
d0 = 0.02
[boundary.left]
kind = "dirichlet"
pressure = 1.0
saturation = 0.5
"#;
        let f = ScenarioFile::parse(text).unwrap();
        let c = f.to_config::<f64>(MeshMode::Reduced, 1.0 / 64.0).unwrap();
        assert_eq!(c.mode(), MeshMode::Full);
        assert_eq!(c.t_end, 0.5);
        assert_eq!(c.dt, 0.005);
        assert_eq!(c.problem.numerics.h, 0.05);
        assert_eq!(c.problem.schedule.unwrap().d0, 0.02);
        assert_eq!(c.problem.boundary.left, BoundaryCondition::Dirichlet { pressure: 1.0, saturation: 0.5 });
    }

    #[test]
    fn scenario_errors_name_the_field() {
        let e = ScenarioFile::parse("case = 1\n[mesh]\nh = -1.0\n").unwrap().to_config::<f64>(MeshMode::Reduced, 0.1);
        assert!(matches!(e, Err(ConfigError::InvalidField { ref field, .. }) if field == "mesh.h"));
        let e = ScenarioFile::parse("case = 1\nbogus = 3\n");
        assert!(matches!(e, Err(ConfigError::Parse(ref m)) if m.contains("bogus")));
    }

    #[test]
    fn welge_point_is_tangent() {
        let fl = PhaseParams::<f64>::reference();
        let s = welge_saturation(RelPermLaw::Quadratic, &fl);
        // closed form for quadratic laws: S* = sqrt(M / (1 + M)) with M = μ_w / μ_nw
        let m = 0.1f64;
        assert!((s - (m / (1.0 + m)).sqrt()).abs() < 1e-6, "{s}");
    }

    #[test]
    fn identical_runs_have_zero_discrepancy() {
        let (mesh, mut state, config) = build_case::<f64>(2, MeshMode::Full, 0.1).unwrap();
        for (c, s) in state.bulk.saturation.iter_mut().enumerate() {
            *s = (c as f64 * 0.37).sin().abs();
        }
        let sched = config.problem.schedule.unwrap();
        let line = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)];
        let cmp = compare_reduced_full((&mesh, &state), (&mesh, &state), &sched, line, 50);
        // the reduced sampler reads the interface there, which full meshes lack
        let cmp = cmp.unwrap();
        for r in cmp.rows.iter().filter(|r| !r.in_fracture) {
            assert_eq!(r.reduced, r.full);
        }
        let mut other = state.clone();
        other.time = 0.5;
        assert!(matches!(
            compare_reduced_full((&mesh, &state), (&mesh, &other), &sched, line, 10),
            Err(ConfigError::TimeMismatch(..))
        ));
    }
}
