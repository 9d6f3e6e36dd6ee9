//! Independent oracles shared by the oracle suite and the acceptance target.
//! Each function returns the worst discrepancy it observed.

#![allow(dead_code)]

use fvmm::fluxes::{
    dirichlet_flux, generalized_godunov, godunov_flux, tpfa_flux, FacetContext, InterfaceCoupling, TpfaSide,
};
use fvmm::geometry::{circumcenter, signed_area, Tensor2, Vec2};
use fvmm::mesh::{
    build_fracture_mesh, delaunay_mesh, swept_volume, BulkState, Domain, FractureMeshOptions, InterfaceState,
    MeshMode, MovingMesh, Neighbor, TriMesh, VertexRole,
};
use fvmm::physics::{FluxFunction, MediumParams, Mobilities, PhaseParams, RelPermLaw};
use fvmm::schedule::FractureSchedule;
use fvmm::solver::SystemState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn point(r: &mut impl Rng) -> Vec2<f64> {
    Vec2::new(r.gen(), r.gen())
}

fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.gen::<f64>()).exp()
}

// ---------------------------------------------------------------------------
// moving triangles

/// A counter-clockwise triangle moved linearly so it stays positively
/// oriented, with area at least `1e-3` at both ends.
pub fn random_moving_triangle(r: &mut impl Rng) -> ([Vec2<f64>; 3], [Vec2<f64>; 3]) {
    loop {
        let mut t0 = [point(r), point(r), point(r)];
        if signed_area(t0[0], t0[1], t0[2]) < 0.0 {
            t0.swap(1, 2);
        }
        let t1 = t0.map(|p| p + Vec2::new(r.gen_range(-0.2..0.2), r.gen_range(-0.2..0.2)));
        if signed_area(t0[0], t0[1], t0[2]) > 1e-3 && signed_area(t1[0], t1[1], t1[2]) > 1e-3 {
            return (t0, t1);
        }
    }
}

/// `max |Σ swept - (|K¹| - |K⁰|)| / |K¹|` over `n` random moving triangles.
pub fn dgcl_worst(seed: u64, n: usize) -> f64 {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let (p0, p1) = random_moving_triangle(&mut r);
            let swept: f64 = (0..3).map(|i| swept_volume(p0[i], p0[(i + 1) % 3], p1[i], p1[(i + 1) % 3])).sum();
            let a0 = signed_area(p0[0], p0[1], p0[2]);
            let a1 = signed_area(p1[0], p1[1], p1[2]);
            (swept - (a1 - a0)).abs() / a1
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// conservative projection

/// Reduced fracture mesh with random cell and interface values.
pub fn random_state_mesh(r: &mut impl Rng, h: f64) -> (MovingMesh<f64>, SystemState<f64>) {
    let s = FractureSchedule::diagonal(0.05, 0.25, 0.0);
    let mesh = build_fracture_mesh(&s, &FractureMeshOptions::new(h, MeshMode::Reduced)).unwrap();
    let nc = mesh.num_cells();
    let ni = mesh.num_interface();
    let state = SystemState {
        bulk: BulkState {
            saturation: (0..nc).map(|_| r.gen()).collect(),
            pressure: (0..nc).map(|_| r.gen_range(-1.0..1.0)).collect(),
        },
        interface: InterfaceState {
            saturation: (0..ni).map(|_| r.gen()).collect(),
            pressure: (0..ni).map(|_| r.gen_range(-1.0..1.0)).collect(),
            aperture: (0..ni).map(|_| r.gen_range(0.01..0.05)).collect(),
        },
        time: 0.0,
    };
    (mesh, state)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionReport {
    pub events: usize,
    pub splits: usize,
    pub removals: usize,
    /// Worst per-component relative bulk mass defect.
    pub bulk: f64,
    /// Worst per-component relative interface mass defect.
    pub interface: f64,
    /// Relative defect of the total mass recomputed on the final mesh.
    pub total: f64,
}

/// Applies `events` random edits (edge bisection or vertex removal with
/// hole retriangulation) and checks every recorded component.
pub fn projection_worst(seed: u64, events: usize) -> ProjectionReport {
    let mut r = rng(seed);
    let (mesh, state) = random_state_mesh(&mut r, 0.1);
    let porosity = [r.gen_range(0.2..1.0), r.gen_range(0.2..1.0)];
    let total0 = state.mass(&mesh, porosity);
    let mut tm = TriMesh::from_mesh(&mesh, &state.bulk, &state.interface, 0.0, porosity);
    let mut rep = ProjectionReport::default();
    let mut guard = 0;
    while rep.events < events {
        guard += 1;
        assert!(guard < 100 * events, "too few successful edits");
        let before = tm.components.len();
        let done = if r.gen_bool(0.5) {
            let alive: Vec<usize> = tm.alive_triangles().collect();
            let t = alive[r.gen_range(0..alive.len())];
            let i = r.gen_range(0..3);
            let (a, b) = tm.edge(t, i);
            if (tm.pts[a] - tm.pts[b]).norm() < 0.01 {
                continue;
            }
            let ok = match tm.constrained_role(t, i) {
                Some(_) => tm.split_constrained(t, i).is_some(),
                None => tm.split_edge(t, i, VertexRole::Free).is_some(),
            };
            rep.splits += ok as usize;
            ok
        } else {
            let v = r.gen_range(0..tm.pts.len());
            let ok = tm.vertex_alive[v] && tm.remove_vertex(v);
            rep.removals += ok as usize;
            ok
        };
        if !done {
            continue;
        }
        assert!(tm.components.len() > before, "edit without a projection record");
        for c in &tm.components[before..] {
            rep.bulk = rep.bulk.max((c.new_mass - c.old_mass).abs() / c.old_mass.abs());
            if c.old_iface_mass != 0.0 {
                rep.interface =
                    rep.interface.max((c.new_iface_mass - c.old_iface_mass).abs() / c.old_iface_mass.abs());
            }
        }
        tm.check().unwrap();
        rep.events += 1;
    }
    let (m, bulk, interface) = tm.to_mesh().unwrap();
    let st = SystemState { bulk, interface, time: 0.0 };
    rep.total = (st.mass(&m, porosity) - total0).abs() / total0;
    rep
}

// ---------------------------------------------------------------------------
// two-point fluxes

pub fn random_delaunay(seed: u64, n: usize) -> MovingMesh<f64> {
    let mut r = rng(seed);
    let pts: Vec<Vec2<f64>> = (0..n).map(|_| Vec2::new(r.gen_range(0.02..0.98), r.gen_range(0.02..0.98))).collect();
    delaunay_mesh(Domain::unit(), &pts).unwrap()
}

fn circumcenters(m: &MovingMesh<f64>) -> Vec<Vec2<f64>> {
    m.triangles.iter().map(|t| circumcenter(m.points[t[0]], m.points[t[1]], m.points[t[2]]).unwrap()).collect()
}

fn facet_geometry(m: &MovingMesh<f64>, f: usize) -> (Vec2<f64>, Vec2<f64>) {
    let [a, b] = m.facets[f].v;
    let (pa, pb) = (m.points[a], m.points[b]);
    ((pb - pa).perp_right(), pa.midpoint(pb))
}

/// Integrated outward facet fluxes of every cell for the pressure
/// `p(x)` sampled at circumcenters; boundary facets use the exact value at
/// the facet midpoint.
fn cell_divergence(
    m: &MovingMesh<f64>,
    s: f64,
    k: f64,
    fluids: &PhaseParams<f64>,
    gravity: Vec2<f64>,
    p: impl Fn(Vec2<f64>) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let cc = circumcenters(m);
    let medium = MediumParams { porosity: 1.0, permeability: Tensor2::isotropic(k), law: RelPermLaw::Quadratic };
    let mut div = vec![0.0; m.num_cells()];
    let mut flux = Vec::with_capacity(m.facets.len());
    for (f, facet) in m.facets.iter().enumerate() {
        let (normal, mid) = facet_geometry(m, f);
        let plus = TpfaSide { distance: mid - cc[facet.plus], medium };
        let v = match facet.minus {
            Neighbor::Cell(mn) => {
                let ctx = FacetContext { normal, plus, minus: TpfaSide { distance: mid - cc[mn], medium } };
                let v = tpfa_flux(p(cc[facet.plus]), p(cc[mn]), s, s, &ctx, fluids, gravity).unwrap();
                div[mn] -= v;
                v
            }
            Neighbor::Boundary(_) => {
                let mob = Mobilities::new(s, RelPermLaw::Quadratic, fluids);
                let d = plus.distance;
                let t = mob.total() * normal.norm() * k / d.norm();
                let g = mob.gravity_fraction(fluids) * d.dot(gravity);
                dirichlet_flux(t, g, p(cc[facet.plus]), p(mid))
            }
        };
        div[facet.plus] += v;
        flux.push(v);
    }
    (div, flux)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TpfaReport {
    pub cells: usize,
    /// Worst `|Σ v_F|` per cell for a linear field (zero source).
    pub linear_divergence: f64,
    /// Worst `|v_F - (-K λ ∇p · n |F|)|`.
    pub linear_flux: f64,
    /// Worst `|v_F|` in the discrete hydrostatic state, relative to the
    /// largest flux the same pressure drives without gravity.
    pub hydrostatic: f64,
}

pub fn tpfa_worst(seed: u64, points: usize) -> TpfaReport {
    let m = random_delaunay(seed, points);
    let mut r = rng(seed ^ 0x5eed);
    let fluids = PhaseParams::reference();
    let grad = Vec2::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
    let p0 = r.gen_range(-1.0..1.0);
    let k = r.gen_range(0.5..2.0);
    let (div, flux) = cell_divergence(&m, 1.0, k, &fluids, Vec2::zero(), |x| p0 + grad.dot(x));
    let lambda = Mobilities::new(1.0, RelPermLaw::Quadratic, &fluids).total();
    let linear_flux = (0..m.facets.len())
        .map(|f| (flux[f] + lambda * k * grad.dot(facet_geometry(&m, f).0)).abs())
        .fold(0.0, f64::max);
    // hydrostatic: P = G(S) g·x for a constant saturation
    let s = r.gen_range(0.05..0.95);
    let g = Vec2::new(0.0, -9.81);
    let gf = Mobilities::new(s, RelPermLaw::Quadratic, &fluids).gravity_fraction(&fluids);
    let (_, hflux) = cell_divergence(&m, s, k, &fluids, g, |x| gf * g.dot(x));
    let (_, pflux) = cell_divergence(&m, s, k, &fluids, Vec2::zero(), |x| gf * g.dot(x));
    let max_abs = |v: &[f64]| v.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
    TpfaReport {
        cells: m.num_cells(),
        linear_divergence: div.iter().fold(0.0, |a, b| a.max(b.abs())),
        linear_flux,
        hydrostatic: max_abs(&hflux) / max_abs(&pflux),
    }
}

// ---------------------------------------------------------------------------
// Godunov fluxes

pub fn random_fluids(r: &mut impl Rng) -> PhaseParams<f64> {
    PhaseParams {
        density_w: r.gen_range(500.0..1500.0),
        density_nw: r.gen_range(100.0..1000.0),
        viscosity_w: log_uniform(r, 0.2, 5.0),
        viscosity_nw: log_uniform(r, 0.2, 20.0),
    }
}

fn random_law(r: &mut impl Rng) -> RelPermLaw {
    if r.gen_bool(0.5) {
        RelPermLaw::Linear
    } else {
        RelPermLaw::Quadratic
    }
}

pub fn random_flux(r: &mut impl Rng) -> FluxFunction<f64> {
    let f = random_fluids(r);
    FluxFunction::new(random_law(r), &f, r.gen_range(-5.0..5.0), r.gen_range(-20.0..20.0))
}

/// Extremum of `f` over `n + 1` equidistant points between the states.
pub fn brute_godunov(s_plus: f64, s_minus: f64, f: &FluxFunction<f64>, n: usize) -> f64 {
    let (a, b) = if s_plus <= s_minus { (s_plus, s_minus) } else { (s_minus, s_plus) };
    let values = (0..=n).map(|i| f.eval(a + (b - a) * i as f64 / n as f64));
    if s_plus <= s_minus {
        values.fold(f64::INFINITY, f64::min)
    } else {
        values.fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Worst `|closed - brute| / (1 + |brute|)`.
pub fn godunov_worst(seed: u64, tuples: usize, grid: usize) -> f64 {
    let mut r = rng(seed);
    (0..tuples)
        .map(|_| {
            let f = random_flux(&mut r);
            let (a, b) = (r.gen::<f64>(), r.gen::<f64>());
            let got = godunov_flux(a, b, &f);
            let expect = brute_godunov(a, b, &f, grid);
            (got - expect).abs() / (1.0 + expect.abs())
        })
        .fold(0.0, f64::max)
}

/// Worst mismatch between the generalized flux and both one-sided Godunov
/// fluxes at an intermediate state found by an independent bisection.
pub fn generalized_worst(seed: u64, tuples: usize) -> f64 {
    let mut r = rng(seed);
    (0..tuples)
        .map(|_| {
            let fluids = random_fluids(&mut r);
            let v = r.gen_range(-5.0..5.0);
            let fp = FluxFunction::new(random_law(&mut r), &fluids, v, r.gen_range(-20.0..20.0));
            let fm = FluxFunction::new(random_law(&mut r), &fluids, v, r.gen_range(-20.0..20.0));
            let (sp, sm) = (r.gen::<f64>(), r.gen::<f64>());
            let g = generalized_godunov(sp, sm, &fp, &fm).unwrap();
            let h = |s: f64| godunov_flux(sp, s, &fp) - godunov_flux(s, sm, &fm);
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if h(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let star = if h(lo).abs() < h(hi).abs() { lo } else { hi };
            (g - godunov_flux(sp, star, &fp)).abs().max((g - godunov_flux(star, sm, &fm)).abs())
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// bulk-fracture coupling

/// Gaussian elimination with partial pivoting.
pub fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
    for k in 0..N {
        let piv = (k..N).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..N {
            let m = a[i][k] / a[k][k];
            for j in k..N {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = [0.0; N];
    for k in (0..N).rev() {
        let s: f64 = (k + 1..N).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Dense solution of the local system
///
/// ```text
/// -T⁺ (P|γ⁺ - P⁺ - G⁺) = -T_Γ ((P_Γ - P|γ⁺) + 2 (P_Γ - m) + G_Γ)
/// -T⁻ (P|γ⁻ - P⁻ - G⁻) = -T_Γ ((P_Γ - P|γ⁻) + 2 (P_Γ - m) - G_Γ)
/// m = (P|γ⁺ + P|γ⁻) / 2
/// ```
///
/// returning the two one-sided fluxes into the fracture. The unknowns are
/// the drops `α = P|γ⁺ - P⁺ - G⁺`, `β = P|γ⁻ - P⁻ - G⁻` and the shifted
/// mean `μ = (α + β) / 2`; solving for the traces themselves loses the
/// small drop against a large pressure when `T± ≫ T_Γ`.
pub fn coupling_by_elimination(c: &InterfaceCoupling<f64>, pp: f64, pg: f64, pm: f64) -> (f64, f64) {
    let (tp, tm, tg) = (c.t_plus, c.t_minus, c.t_gamma);
    let (qp, qm) = (pp + c.g_plus, pm + c.g_minus);
    let a = [[tp + tg, 0.0, 2.0 * tg], [0.0, tm + tg, 2.0 * tg], [-0.5, -0.5, 1.0]];
    let b = [tg * (3.0 * pg + c.g_gamma - 2.0 * qp - qm), tg * (3.0 * pg - c.g_gamma - 2.0 * qm - qp), 0.0];
    let [alpha, beta, _] = solve_dense(a, b);
    (-tp * alpha, -tm * beta)
}

pub fn random_coupling(r: &mut impl Rng) -> InterfaceCoupling<f64> {
    InterfaceCoupling {
        t_plus: log_uniform(r, 1e-3, 1e3),
        t_minus: log_uniform(r, 1e-3, 1e3),
        t_gamma: log_uniform(r, 1e-3, 1e3),
        g_plus: r.gen_range(-10.0..10.0),
        g_minus: r.gen_range(-10.0..10.0),
        g_gamma: r.gen_range(-10.0..10.0),
    }
}

/// Worst relative difference of both coupling fluxes against the oracle.
pub fn coupling_worst(seed: u64, tuples: usize) -> f64 {
    let mut r = rng(seed);
    (0..tuples)
        .map(|_| {
            let c = random_coupling(&mut r);
            let (pp, pg, pm) = (r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0));
            let (vp, vm) = c.fluxes(pp, pg, pm);
            let (ep, em) = coupling_by_elimination(&c, pp, pg, pm);
            ((vp - ep) / ep).abs().max(((vm - em) / em).abs())
        })
        .fold(0.0, f64::max)
}
