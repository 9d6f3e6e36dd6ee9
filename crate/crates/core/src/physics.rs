//! Constitutive laws of the capillarity-free fractional-flow formulation.
//!
//! Saturation `S` always refers to the wetting phase. Mobilities are
//! `λ_α = k_α(S) / μ_α`, the fractional flow is `f = λ_w / λ` and the
//! gravity-weighted density is `G = (λ_w ρ_w + λ_nw ρ_nw) / λ`.

use serde::{Deserialize, Serialize};

use crate::error::PhysicsError;
use crate::geometry::Tensor2;
use crate::scalar::Scalar;

/// Saturations within this distance outside `[0, 1]` are clamped silently.
pub const SATURATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Wetting,
    NonWetting,
}

/// Relative permeability law `k_w(S) = S^p`, `k_nw(S) = (1 - S)^p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelPermLaw {
    Linear,
    #[default]
    Quadratic,
}

impl RelPermLaw {
    pub fn exponent(self) -> i32 {
        match self {
            RelPermLaw::Linear => 1,
            RelPermLaw::Quadratic => 2,
        }
    }

    #[inline]
    pub fn k_w<T: Scalar>(self, s: T) -> T {
        match self {
            RelPermLaw::Linear => s,
            RelPermLaw::Quadratic => s * s,
        }
    }

    #[inline]
    pub fn k_nw<T: Scalar>(self, s: T) -> T {
        let r = T::one() - s;
        match self {
            RelPermLaw::Linear => r,
            RelPermLaw::Quadratic => r * r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams<T> {
    pub density_w: T,
    pub density_nw: T,
    pub viscosity_w: T,
    pub viscosity_nw: T,
}

impl<T: Scalar> PhaseParams<T> {
    /// Densities 1000 / 500 kg/m³, viscosities 1 / 10 Pa·s.
    pub fn reference() -> Self {
        Self {
            density_w: T::lit(1000.0),
            density_nw: T::lit(500.0),
            viscosity_w: T::one(),
            viscosity_nw: T::lit(10.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.density_w > T::zero()
            && self.density_nw > T::zero()
            && self.viscosity_w > T::zero()
            && self.viscosity_nw > T::zero()
    }

    pub fn density(&self, phase: Phase) -> T {
        match phase {
            Phase::Wetting => self.density_w,
            Phase::NonWetting => self.density_nw,
        }
    }

    pub fn viscosity(&self, phase: Phase) -> T {
        match phase {
            Phase::Wetting => self.viscosity_w,
            Phase::NonWetting => self.viscosity_nw,
        }
    }

    /// `ρ_nw - ρ_w`
    pub fn density_difference(&self) -> T {
        self.density_nw - self.density_w
    }
}

/// Porous medium of one subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumParams<T> {
    pub porosity: T,
    pub permeability: Tensor2<T>,
    pub law: RelPermLaw,
}

impl<T: Scalar> MediumParams<T> {
    pub fn is_valid(&self) -> bool {
        self.porosity > T::zero()
            && self.porosity <= T::one()
            && self.permeability.is_positive_definite()
    }
}

/// Validates and clamps a saturation into `[0, 1]`.
pub fn checked_saturation<T: Scalar>(s: T) -> Result<T, PhysicsError> {
    let tol = T::lit(SATURATION_TOLERANCE);
    if !(s >= -tol && s <= T::one() + tol) {
        return Err(PhysicsError::SaturationOutOfRange(s.to_f64_lossy()));
    }
    Ok(s.clamp_to(T::zero(), T::one()))
}

#[inline]
fn mobility_unchecked<T: Scalar>(s: T, phase: Phase, law: RelPermLaw, fluids: &PhaseParams<T>) -> T {
    match phase {
        Phase::Wetting => law.k_w(s) / fluids.viscosity_w,
        Phase::NonWetting => law.k_nw(s) / fluids.viscosity_nw,
    }
}

pub fn mobility<T: Scalar>(s: T, phase: Phase, law: RelPermLaw, fluids: &PhaseParams<T>) -> Result<T, PhysicsError> {
    Ok(mobility_unchecked(checked_saturation(s)?, phase, law, fluids))
}

pub fn total_mobility<T: Scalar>(s: T, law: RelPermLaw, fluids: &PhaseParams<T>) -> Result<T, PhysicsError> {
    let s = checked_saturation(s)?;
    Ok(mobility_unchecked(s, Phase::Wetting, law, fluids) + mobility_unchecked(s, Phase::NonWetting, law, fluids))
}

pub fn fractional_flow<T: Scalar>(s: T, law: RelPermLaw, fluids: &PhaseParams<T>) -> Result<T, PhysicsError> {
    Ok(Mobilities::new(checked_saturation(s)?, law, fluids).fractional_flow())
}

pub fn gravity_fraction<T: Scalar>(s: T, law: RelPermLaw, fluids: &PhaseParams<T>) -> Result<T, PhysicsError> {
    Ok(Mobilities::new(checked_saturation(s)?, law, fluids).gravity_fraction(fluids))
}

/// Normal component of the saturation flux `F(S, v)·n`, with
/// `gravity_term = nᵀ K (ρ_nw - ρ_w) g` precomputed for the facet.
pub fn flux_normal<T: Scalar>(
    s: T,
    v_n: T,
    gravity_term: T,
    law: RelPermLaw,
    fluids: &PhaseParams<T>,
) -> Result<T, PhysicsError> {
    let s = checked_saturation(s)?;
    Ok(FluxFunction::new(law, fluids, v_n, gravity_term).eval(s))
}

/// Both phase mobilities at one saturation.
#[derive(Clone, Copy, Debug)]
pub struct Mobilities<T> {
    pub wetting: T,
    pub non_wetting: T,
}

impl<T: Scalar> Mobilities<T> {
    /// Evaluates at `s` clamped into `[0, 1]`.
    #[inline]
    pub fn new(s: T, law: RelPermLaw, fluids: &PhaseParams<T>) -> Self {
        let s = s.clamp_to(T::zero(), T::one());
        Self {
            wetting: mobility_unchecked(s, Phase::Wetting, law, fluids),
            non_wetting: mobility_unchecked(s, Phase::NonWetting, law, fluids),
        }
    }

    #[inline]
    pub fn total(&self) -> T {
        self.wetting + self.non_wetting
    }

    #[inline]
    pub fn fractional_flow(&self) -> T {
        self.wetting / self.total()
    }

    #[inline]
    pub fn gravity_fraction(&self, fluids: &PhaseParams<T>) -> T {
        (self.wetting * fluids.density_w + self.non_wetting * fluids.density_nw) / self.total()
    }
}

/// `S -> F(S, v)·n` for a fixed facet velocity and gravity term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxFunction<T> {
    pub law: RelPermLaw,
    /// `1 / μ_w`
    pub inv_mu_w: T,
    /// `1 / μ_nw`
    pub inv_mu_nw: T,
    pub v_n: T,
    pub gravity_term: T,
}

impl<T: Scalar> FluxFunction<T> {
    pub fn new(law: RelPermLaw, fluids: &PhaseParams<T>, v_n: T, gravity_term: T) -> Self {
        Self {
            law,
            inv_mu_w: T::one() / fluids.viscosity_w,
            inv_mu_nw: T::one() / fluids.viscosity_nw,
            v_n,
            gravity_term,
        }
    }

    /// Evaluates at `s` clamped into `[0, 1]`.
    #[inline]
    pub fn eval(&self, s: T) -> T {
        let s = s.clamp_to(T::zero(), T::one());
        let lw = self.law.k_w(s) * self.inv_mu_w;
        let lnw = self.law.k_nw(s) * self.inv_mu_nw;
        let f = lw / (lw + lnw);
        f * (self.v_n - lnw * self.gravity_term)
    }

    /// The unique interior critical point on `(0, 1)`, if any.
    ///
    /// With `a = 1/μ_w`, `b = 1/μ_nw` and exponent `p`, the derivative is a
    /// positive multiple of `v + gt (a S^(p+1) - b (1-S)^(p+1))`, which is
    /// strictly monotone in `S`, so at most one interior root exists. It is
    /// found in closed form (quadratic for `p = 1`, Cardano for `p = 2`)
    /// and polished with two Newton steps.
    pub fn critical_point(&self) -> Option<T> {
        let gt = self.gravity_term;
        if gt == T::zero() {
            return None;
        }
        let a = self.inv_mu_w;
        let b = self.inv_mu_nw;
        let c = self.v_n / gt;
        let p = self.law.exponent();
        let phi = |s: T| c + a * s.powi(p + 1) - b * (T::one() - s).powi(p + 1);
        // Monotone: a root exists on (0,1) iff the endpoint values differ in sign.
        let (f0, f1) = (phi(T::zero()), phi(T::one()));
        if f0 == T::zero() || f1 == T::zero() || (f0 > T::zero()) == (f1 > T::zero()) {
            return None;
        }
        let mut s = match self.law {
            RelPermLaw::Linear => {
                // (a - b) S² + 2b S + (c - b) = 0
                let qa = a - b;
                let qb = T::two() * b;
                let qc = c - b;
                if qa.abs() <= T::epsilon() * (a + b) {
                    -qc / qb
                } else {
                    let disc = (qb * qb - T::lit(4.0) * qa * qc).max(T::zero()).sqrt();
                    let q = -T::half() * (qb + qb.signum() * disc);
                    let r1 = q / qa;
                    let r2 = if q != T::zero() { qc / q } else { r1 };
                    if r1 >= T::zero() && r1 <= T::one() {
                        r1
                    } else {
                        r2
                    }
                }
            }
            RelPermLaw::Quadratic => {
                // (a+b) S³ - 3b S² + 3b S + (c - b) = 0
                let big_a = a + b;
                let bb = -T::three() * b / big_a;
                let cc = T::three() * b / big_a;
                let dd = (c - b) / big_a;
                let pp = cc - bb * bb / T::three();
                let qq = T::two() * bb * bb * bb / T::lit(27.0) - bb * cc / T::three() + dd;
                let disc = (qq * qq * T::lit(0.25) + pp * pp * pp / T::lit(27.0)).max(T::zero());
                let sq = disc.sqrt();
                let sign = if qq >= T::zero() { T::one() } else { -T::one() };
                let u = (-qq * T::half() - sign * sq).cbrt();
                let y = if u == T::zero() { T::zero() } else { u - pp / (T::three() * u) };
                y - bb / T::three()
            }
        };
        let pf = T::lit((p + 1) as f64);
        for _ in 0..2 {
            let d = pf * (a * s.powi(p) + b * (T::one() - s).powi(p));
            if d > T::zero() {
                s -= phi(s) / d;
            }
        }
        let s = s.clamp_to(T::zero(), T::one());
        (s > T::zero() && s < T::one()).then_some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fluids() -> PhaseParams<f64> {
        PhaseParams::reference()
    }

    #[test]
    fn mobility_examples() {
        let f = fluids();
        assert!((mobility(0.5, Phase::Wetting, RelPermLaw::Quadratic, &f).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(mobility(0.0, Phase::Wetting, RelPermLaw::Quadratic, &f).unwrap(), 0.0);
        assert!((mobility(0.5, Phase::NonWetting, RelPermLaw::Quadratic, &f).unwrap() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn mobility_rejects_out_of_range() {
        let f = fluids();
        assert!(mobility(1.0 + 1e-13, Phase::Wetting, RelPermLaw::Quadratic, &f).is_ok());
        assert_eq!(
            mobility(1.1, Phase::Wetting, RelPermLaw::Quadratic, &f),
            Err(PhysicsError::SaturationOutOfRange(1.1))
        );
        assert!(fractional_flow(-0.01, RelPermLaw::Linear, &f).is_err());
        assert!(fractional_flow(f64::NAN, RelPermLaw::Linear, &f).is_err());
    }

    #[test]
    fn fractional_flow_examples() {
        let f = fluids();
        assert_eq!(fractional_flow(0.0, RelPermLaw::Quadratic, &f).unwrap(), 0.0);
        assert_eq!(fractional_flow(1.0, RelPermLaw::Quadratic, &f).unwrap(), 1.0);
        // 0.25 / (0.25 + 0.025)
        assert!((fractional_flow(0.5, RelPermLaw::Quadratic, &f).unwrap() - 10.0 / 11.0).abs() < 1e-14);
        let equal = PhaseParams { viscosity_nw: 1.0, ..f };
        assert!((fractional_flow(0.3, RelPermLaw::Linear, &equal).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn gravity_fraction_examples() {
        let f = fluids();
        assert_eq!(gravity_fraction(1.0, RelPermLaw::Quadratic, &f).unwrap(), 1000.0);
        assert_eq!(gravity_fraction(0.0, RelPermLaw::Quadratic, &f).unwrap(), 500.0);
        let expected = (0.25 * 1000.0 + 0.025 * 500.0) / 0.275;
        assert!((gravity_fraction(0.5, RelPermLaw::Quadratic, &f).unwrap() - expected).abs() < 1e-11);
        assert!((expected - 954.545_454_545_454_5).abs() < 1e-9);
    }

    #[test]
    fn flux_normal_examples() {
        let f = fluids();
        assert_eq!(flux_normal(0.0, 2.0, 10.0, RelPermLaw::Quadratic, &f).unwrap(), 0.0);
        assert_eq!(flux_normal(1.0, 2.0, 10.0, RelPermLaw::Quadratic, &f).unwrap(), 2.0);
        let expected = (10.0 / 11.0) * 2.0 - (10.0 / 11.0) * 0.025 * 10.0;
        assert!((flux_normal(0.5, 2.0, 10.0, RelPermLaw::Quadratic, &f).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.590_909_090_909).abs() < 1e-11);
    }

    #[test]
    fn grid_scan_bounds() {
        let f = fluids();
        for law in [RelPermLaw::Linear, RelPermLaw::Quadratic] {
            for i in 0..=10_000 {
                let s = i as f64 / 10_000.0;
                let ff = fractional_flow(s, law, &f).unwrap();
                assert!((0.0..=1.0).contains(&ff));
                assert!(total_mobility(s, law, &f).unwrap() > 0.0);
                let g = gravity_fraction(s, law, &f).unwrap();
                assert!((500.0..=1000.0).contains(&g));
            }
        }
    }

    #[test]
    fn flux_without_gravity_is_monotone() {
        let f = fluids();
        for law in [RelPermLaw::Linear, RelPermLaw::Quadratic] {
            let ff = FluxFunction::new(law, &f, 2.0, 0.0);
            let mut prev = ff.eval(0.0);
            for i in 1..=10_000 {
                let cur = ff.eval(i as f64 / 10_000.0);
                assert!(cur >= prev);
                prev = cur;
            }
        }
    }

    /// Unit viscosities: the shape plotted for the non-monotone flux.
    fn unit_viscosity() -> PhaseParams<f64> {
        PhaseParams { viscosity_nw: 1.0, ..fluids() }
    }

    #[test]
    fn reference_flux_has_single_interior_extremum() {
        let f = unit_viscosity();
        for law in [RelPermLaw::Linear, RelPermLaw::Quadratic] {
            let ff = FluxFunction::new(law, &f, 2.0, 10.0);
            let n = 10_000;
            let mut sign_changes = 0;
            let mut prev_sign = 0i32;
            for i in 0..n {
                let a = ff.eval(i as f64 / n as f64);
                let b = ff.eval((i + 1) as f64 / n as f64);
                let s = if b > a { 1 } else if b < a { -1 } else { 0 };
                if s != 0 {
                    if prev_sign != 0 && s != prev_sign {
                        sign_changes += 1;
                    }
                    prev_sign = s;
                }
            }
            assert_eq!(sign_changes, 1, "{law:?}");
        }
    }

    #[test]
    fn critical_point_matches_dense_scan() {
        let f = fluids();
        for law in [RelPermLaw::Linear, RelPermLaw::Quadratic] {
            for &(v, g) in &[(2.0, 10.0), (-1.0, 3.0), (0.5, -20.0), (5.0, 1.0)] {
                let ff = FluxFunction::new(law, &f, v, g);
                let n = 200_000;
                let mut best = (0.0, f64::NEG_INFINITY);
                let mut worst = (0.0, f64::INFINITY);
                for i in 0..=n {
                    let s = i as f64 / n as f64;
                    let y = ff.eval(s);
                    if y > best.1 {
                        best = (s, y);
                    }
                    if y < worst.1 {
                        worst = (s, y);
                    }
                }
                match ff.critical_point() {
                    Some(c) => {
                        let interior = if best.0 > 0.0 && best.0 < 1.0 { best.0 } else { worst.0 };
                        assert!((c - interior).abs() < 1e-4, "{law:?} {v} {g}: {c} vs {interior}");
                    }
                    None => {
                        for (s, _) in [best, worst] {
                            assert!(s == 0.0 || s == 1.0, "{law:?} {v} {g}: missed extremum at {s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn f32_evaluation() {
        let f = PhaseParams::<f32>::reference();
        let v = fractional_flow(0.5f32, RelPermLaw::Quadratic, &f).unwrap();
        assert!((v - 10.0 / 11.0).abs() < 1e-6);
        let unit = PhaseParams { viscosity_nw: 1.0f32, ..f };
        let c = FluxFunction::new(RelPermLaw::Quadratic, &unit, 2.0, 10.0).critical_point().unwrap();
        let c64 = FluxFunction::new(RelPermLaw::Quadratic, &unit_viscosity(), 2.0, 10.0).critical_point().unwrap();
        assert!((c as f64 - c64).abs() < 1e-5);
    }

    #[test]
    fn medium_validation() {
        let m = MediumParams { porosity: 1.0, permeability: Tensor2::isotropic(1e-8), law: RelPermLaw::Quadratic };
        assert!(m.is_valid());
        let bad = MediumParams { porosity: 0.0, ..m };
        assert!(!bad.is_valid());
        let indefinite = MediumParams { permeability: Tensor2 { xx: 1.0, xy: 2.0, yy: 1.0 }, ..m };
        assert!(!indefinite.is_valid());
    }
}
