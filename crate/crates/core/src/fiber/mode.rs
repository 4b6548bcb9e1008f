//! Exact HE11 solution of a step-index cylindrical waveguide.
//!
//! Fields are taken ∝ exp(i(φ + βz − ωt)) (the circularly polarized member
//! of the HE11 pair; the quasi-linear modes have the same radial power
//! distribution after azimuthal averaging). With U = a·h, W = a·q and
//! h² = k²n1² − β², q² = β² − k²n2², the hybrid-mode eigenvalue equation is
//!
//! (Ĵ + K̂)(Ĵ + (n2²/n1²) K̂) = (1/U² + 1/W²)(1/U² + n2²/(n1² W²)),
//! Ĵ = J1'(U)/(U J1(U)), K̂ = K1'(W)/(W K1(W)).
//!
//! It is solved in the pole-free form obtained by multiplying through by
//! U² J1(U)², bracketed by a sign-change scan, bisected, then secant-polished.
//! Power fractions use closed-form radial integrals of Bessel products.

use std::f64::consts::PI;

use serde::Serialize;

use super::bessel::{bessel_j, bessel_k_scaled};
use super::guidance::{v_number, FiberSpec};
use crate::error::{Error, Result};

/// Bracket keeps n_eff this far inside (n2, n1).
pub const INDEX_EPS: f64 = 1e-9;

const SCAN_POINTS: usize = 2000;
/// First two ν = 1 roots always lie below this U.
const SCAN_U_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub spec: FiberSpec,
    pub n_eff: f64,
    /// β in rad/m.
    pub propagation_constant: f64,
    /// Fraction of guided power travelling outside the glass.
    pub evanescent_fraction: f64,
    /// |E(a⁺)|² / max |E|² for the quasi-linear mode on its polarization axis.
    pub surface_intensity_ratio: f64,
    /// Relative residual of the eigenvalue equation at the root.
    pub residual: f64,
    pub u: f64,
    pub w: f64,
    /// Effective mode area ∫|E|² dA / |E(a⁺)|² on the polarization axis, nm².
    pub surface_effective_area_nm2: f64,
    /// Hz amplitude relative to Ez (Hz = i·b·Ez shape, impedance units).
    hz_ratio: f64,
}

/// Real field amplitudes at radius r. For the circular mode the physical
/// phases are E_r, H_φ, H_z ∝ i; the others are in phase with E_z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFields {
    pub e_r: f64,
    pub e_phi: f64,
    pub e_z: f64,
    pub h_r: f64,
    pub h_phi: f64,
    pub h_z: f64,
}

impl ModeFields {
    pub fn intensity(&self) -> f64 {
        self.e_r * self.e_r + self.e_phi * self.e_phi + self.e_z * self.e_z
    }

    /// Cycle-averaged axial Poynting flux (arbitrary units).
    pub fn axial_flux(&self) -> f64 {
        0.5 * (self.e_r * self.h_phi - self.e_phi * self.h_r)
    }
}

struct Eigen {
    k: f64,
    v: f64,
    r: f64,
}

impl Eigen {
    fn new(spec: &FiberSpec) -> Self {
        Eigen {
            k: spec.k0(),
            v: v_number(spec),
            r: (spec.n2 / spec.n1).powi(2),
        }
    }

    fn w_of(&self, u: f64) -> f64 {
        (self.v * self.v - u * u).max(0.0).sqrt()
    }

    /// Pole-free characteristic function and its term scale.
    fn eval(&self, u: f64) -> (f64, f64) {
        let w = self.w_of(u);
        let j0 = bessel_j(0, u);
        let j1 = bessel_j(1, u);
        let j2 = bessel_j(2, u);
        let jp = 0.5 * (j0 - j2);
        let k1 = bessel_k_scaled(1.0, w);
        let kq = -(bessel_k_scaled(0.0, w) + bessel_k_scaled(2.0, w)) / (2.0 * w * k1);
        let uj = u * j1;
        let t1 = (jp + uj * kq) * (jp + self.r * uj * kq);
        let t2 = j1 * j1 * (1.0 + u * u / (w * w)) * (1.0 / (u * u) + self.r / (w * w));
        (t1 - t2, t1.abs() + t2.abs())
    }
}

/// U values of the lowest ν = 1 hybrid-mode roots, ascending. The first is
/// HE11; the second (EH11 or HE12 family) exists only above V ≈ 3.83.
pub fn hybrid_roots(spec: &FiberSpec, max_roots: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let eq = Eigen::new(spec);
    let ka = eq.k * spec.radius_nm;
    let n1 = spec.n1;
    let n2 = spec.n2;
    let u_lo = ka * (n1 * n1 - (n1 - INDEX_EPS).powi(2)).sqrt();
    let u_hi = ka * (n1 * n1 - (n2 + INDEX_EPS).powi(2)).max(0.0).sqrt();
    if !(u_hi > u_lo) {
        return Err(Error::Bracket(format!(
            "empty bracket: V = {:.3e} too small for n_eff resolution",
            eq.v
        )));
    }
    let top = u_hi.min(SCAN_U_LIMIT);
    let f = |u: f64| eq.eval(u).0;
    let mut roots = Vec::new();
    let mut prev_u = u_lo;
    let mut prev_f = f(u_lo);
    for i in 1..=SCAN_POINTS {
        let u = u_lo + (top - u_lo) * i as f64 / SCAN_POINTS as f64;
        let fu = f(u);
        if prev_f == 0.0 {
            roots.push(prev_u);
        } else if prev_f.signum() != fu.signum() && fu != 0.0 {
            roots.push(refine(&f, prev_u, u, prev_f));
        }
        if roots.len() >= max_roots {
            break;
        }
        prev_u = u;
        prev_f = fu;
    }
    Ok(roots)
}

fn refine(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    // Secant polish inside the final bracket.
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f(x0), f(x1));
    let mut best = if f0.abs() < f1.abs() { x0 } else { x1 };
    for _ in 0..8 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 >= lo.min(hi) - 1e-15 && x2 <= hi.max(lo) + 1e-15) {
            break;
        }
        let f2 = f(x2);
        if f2.abs() < f(best).abs() {
            best = x2;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if f2 == 0.0 {
            break;
        }
    }
    best
}

/// Solves the fundamental HE11 mode.
pub fn solve_he11(spec: &FiberSpec) -> Result<ModeSolution> {
    let roots = hybrid_roots(spec, 1)?;
    let u = *roots.first().ok_or_else(|| {
        let eq = Eigen::new(spec);
        Error::Bracket(format!(
            "no sign change for V = {:.6}, n1 = {}, n2 = {}; F(lo) = {:.3e}",
            eq.v,
            spec.n1,
            spec.n2,
            eq.eval(1e-6_f64.min(eq.v * 0.5)).0
        ))
    })?;
    ModeSolution::from_root(spec, u)
}

/// Propagation constants (1/nm) of HE11 and of the next ν = 1 mode, falling
/// back to the radiation line k·n2 below that mode's cutoff.
pub fn two_mode_betas(spec: &FiberSpec) -> Result<(f64, f64)> {
    let roots = hybrid_roots(spec, 2)?;
    let k = spec.k0();
    let ka = k * spec.radius_nm;
    let beta = |u: f64| ((k * spec.n1).powi(2) - (u / spec.radius_nm).powi(2)).sqrt();
    let first = *roots
        .first()
        .ok_or_else(|| Error::Bracket(format!("no HE11 root at ka = {ka:.4}")))?;
    let second = roots.get(1).map_or(k * spec.n2, |&u| beta(u));
    Ok((beta(first), second))
}

impl ModeSolution {
    fn from_root(spec: &FiberSpec, u: f64) -> Result<Self> {
        let eq = Eigen::new(spec);
        let (g, scale) = eq.eval(u);
        let residual = g.abs() / scale;
        let w = eq.w_of(u);
        let a = spec.radius_nm;
        let k = eq.k;
        let h = u / a;
        let q = w / a;
        let beta = ((k * spec.n1).powi(2) - h * h).sqrt();
        let n_eff = beta / k;
        if !(n_eff > spec.n2 && n_eff < spec.n1) {
            return Err(Error::Numerical(format!(
                "n_eff {n_eff} outside ({}, {})",
                spec.n2, spec.n1
            )));
        }

        let j0 = bessel_j(0, u);
        let j1 = bessel_j(1, u);
        let j2 = bessel_j(2, u);
        let j3 = bessel_j(3, u);
        let k0 = bessel_k_scaled(0.0, w);
        let k1 = bessel_k_scaled(1.0, w);
        let k2 = bessel_k_scaled(2.0, w);
        let k3 = bessel_k_scaled(3.0, w);

        let jhat = 0.5 * (j0 - j2) / (u * j1);
        let khat = -(k0 + k2) / (2.0 * w * k1);
        let s = 1.0 / (u * u) + 1.0 / (w * w);
        let b = beta * s / (k * (jhat + khat));

        let n1s = spec.n1 * spec.n1;
        let n2s = spec.n2 * spec.n2;
        let p = beta - k * b;
        let m = beta + k * b;
        let pp_in = k * n1s - beta * b;
        let mm_in = k * n1s + beta * b;
        let pp_out = k * n2s - beta * b;
        let mm_out = k * n2s + beta * b;

        // ∫_0^a r J_m(hr)² dr = a²/2 (J_m² − J_{m−1} J_{m+1}) and
        // ∫_a^∞ r K_m(qr)² dr = a²/2 (K_{m−1} K_{m+1} − K_m²); the common
        // a²/2 factor is dropped.
        let i00 = j0 * j0 + j1 * j1;
        let i22 = j2 * j2 - j1 * j3;
        let i11 = j1 * j1 - j0 * j2;
        let o00 = (k1 * k1 - k0 * k0) / (k1 * k1);
        let o22 = (k1 * k3 - k2 * k2) / (k1 * k1);
        let o11 = (k0 * k2 - k1 * k1) / (k1 * k1);
        let din = 4.0 * h * h * j1 * j1;
        let dout = 4.0 * q * q;

        let p_in = (p * pp_in * i00 + m * mm_in * i22) / din;
        let p_out = (p * pp_out * o00 + m * mm_out * o22) / dout;
        let evanescent_fraction = p_out / (p_in + p_out);

        let e_in = 2.0 * (p * p * i00 + m * m * i22) / din + i11 / (j1 * j1);
        let e_out = 2.0 * (p * p * o00 + m * m * o22) / dout + o11;

        let mut sol = ModeSolution {
            spec: *spec,
            n_eff,
            propagation_constant: beta * 1e9,
            evanescent_fraction,
            surface_intensity_ratio: 1.0,
            residual,
            u,
            w,
            surface_effective_area_nm2: 0.0,
            hz_ratio: b,
        };
        // Quasi-linear HE11 = sum of the ν = ±1 modes: |E|² ∝
        // (E_r² + E_z²) cos²φ + E_φ² sin²φ, largest on the polarization axis
        // just outside the glass for sub-wavelength fibers.
        let surface = sol.fields(a * (1.0 + 1e-12));
        let on_axis = |f: &ModeFields| f.e_r * f.e_r + f.e_z * f.e_z;
        let peak_inside = (0..=400)
            .map(|i| {
                let f = sol.fields(a * i as f64 / 400.0 * (1.0 - 1e-12));
                on_axis(&f).max(f.e_phi * f.e_phi)
            })
            .fold(0.0f64, f64::max);
        let at_surface = on_axis(&surface);
        sol.surface_intensity_ratio = at_surface / peak_inside.max(at_surface);
        // Azimuthal mean of the quasi-linear intensity is twice the circular
        // one; its peak is 2·at_surface in the same units.
        sol.surface_effective_area_nm2 = PI * a * a * (e_in + e_out) / (2.0 * at_surface);
        if !(0.0..=1.0).contains(&sol.evanescent_fraction) {
            return Err(Error::Numerical(format!(
                "evanescent fraction {} out of [0, 1]",
                sol.evanescent_fraction
            )));
        }
        Ok(sol)
    }

    /// β in 1/nm.
    pub fn beta_per_nm(&self) -> f64 {
        self.propagation_constant * 1e-9
    }

    /// Field decay length 1/q outside the glass, nm.
    pub fn decay_length_nm(&self) -> f64 {
        self.spec.radius_nm / self.w
    }

    /// Field amplitudes at radius `r_nm`, normalized to E_z(a) = 1.
    pub fn fields(&self, r_nm: f64) -> ModeFields {
        let spec = &self.spec;
        let a = spec.radius_nm;
        let k = spec.k0();
        let beta = self.beta_per_nm();
        let b = self.hz_ratio;
        let p = beta - k * b;
        let m = beta + k * b;
        if r_nm < a {
            let h = self.u / a;
            let x = h * r_nm;
            let (j0, j1, j2) = (bessel_j(0, x), bessel_j(1, x), bessel_j(2, x));
            let n1s = spec.n1 * spec.n1;
            let pp = k * n1s - beta * b;
            let mm = k * n1s + beta * b;
            let j1a = bessel_j(1, self.u);
            let d = 2.0 * h * j1a;
            ModeFields {
                e_r: (p * j0 - m * j2) / d,
                e_phi: (-p * j0 - m * j2) / d,
                e_z: j1 / j1a,
                h_r: (pp * j0 + mm * j2) / d,
                h_phi: (pp * j0 - mm * j2) / d,
                h_z: b * j1 / j1a,
            }
        } else {
            let q = self.w / a;
            let y = q * r_nm;
            let decay = (-(y - self.w)).exp();
            let k1a = bessel_k_scaled(1.0, self.w);
            let kr = |nu: f64| bessel_k_scaled(nu, y) * decay / k1a;
            let (k0, k1, k2) = (kr(0.0), kr(1.0), kr(2.0));
            let n2s = spec.n2 * spec.n2;
            let pp = k * n2s - beta * b;
            let mm = k * n2s + beta * b;
            let d = 2.0 * q;
            ModeFields {
                e_r: (p * k0 + m * k2) / d,
                e_phi: (-p * k0 + m * k2) / d,
                e_z: k1,
                h_r: (pp * k0 - mm * k2) / d,
                h_phi: (pp * k0 + mm * k2) / d,
                h_z: b * k1,
            }
        }
    }
}

/// Scalar estimate of the fraction of a surface dipole's emission captured
/// by the guided mode: half the resonant cross-section of a randomly
/// oriented dipole, λ²/(2π), divided by the surface effective area, with
/// the evanescent intensity decaying as exp(−2d/Λ) for an emitter
/// `offset_nm` from the surface (Λ the field decay length). An
/// order-of-magnitude design aid only.
pub fn coupling_efficiency_estimate(mode: &ModeSolution, offset_nm: f64) -> Result<f64> {
    if !(offset_nm >= 0.0) {
        return Err(Error::invalid("offset_nm", "must be >= 0"));
    }
    let lambda = mode.spec.wavelength_nm;
    let at_surface = lambda * lambda / (4.0 * PI * mode.surface_effective_area_nm2);
    let decay = (-2.0 * offset_nm / mode.decay_length_nm()).exp();
    Ok((at_surface * decay).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::sellmeier_silica;

    fn silica(radius_nm: f64, lambda: f64) -> FiberSpec {
        FiberSpec::air_clad(radius_nm, sellmeier_silica(lambda).unwrap(), lambda).unwrap()
    }

    #[test]
    fn he11_bounds_and_residual() {
        let sol = solve_he11(&silica(150.0, 600.0)).unwrap();
        assert!(sol.n_eff > 1.0 && sol.n_eff < sol.spec.n1);
        assert!(sol.residual < 1e-10, "{}", sol.residual);
        assert!(sol.evanescent_fraction > 0.0 && sol.evanescent_fraction < 1.0);
    }

    #[test]
    fn matches_independent_reference() {
        // Frozen from a separate solver: 4×4 boundary-matching determinant
        // root plus adaptive quadrature of the Poynting flux.
        let sol = solve_he11(&FiberSpec::air_clad(150.0, 1.458, 600.0).unwrap()).unwrap();
        assert!((sol.n_eff - 1.091_174_863_86).abs() < 1e-9, "{}", sol.n_eff);
        assert!((sol.evanescent_fraction - 0.511_418_571_6).abs() < 1e-8);
    }

    #[test]
    fn tangential_fields_are_continuous() {
        for &(a, l) in &[(150.0, 600.0), (250.0, 852.0), (400.0, 780.0)] {
            let sol = solve_he11(&silica(a, l)).unwrap();
            let inside = sol.fields(a * (1.0 - 1e-13));
            let outside = sol.fields(a * (1.0 + 1e-13));
            let tol = 1e-8 * (1.0 + inside.e_phi.abs() + inside.h_phi.abs());
            assert!((inside.e_z - outside.e_z).abs() < 1e-8);
            assert!((inside.h_z - outside.h_z).abs() < tol);
            assert!(
                (inside.e_phi - outside.e_phi).abs() < tol,
                "{inside:?} {outside:?}"
            );
            assert!(
                (inside.h_phi - outside.h_phi).abs() < tol,
                "{inside:?} {outside:?}"
            );
            // Normal D is continuous: n1² E_r(a⁻) = n2² E_r(a⁺).
            let n1s = sol.spec.n1 * sol.spec.n1;
            assert!((n1s * inside.e_r - outside.e_r).abs() < 1e-8 * outside.e_r.abs());
        }
    }

    #[test]
    fn weak_guidance_matches_lp01() {
        // Δ → 0: HE11 tends to LP01, whose eigenvalue equation is
        // U J1(U)/J0(U) = W K1(W)/K0(W) and whose outside power fraction is
        // (U²/V²)(1 − K0²/K1²).
        let spec = FiberSpec::new(8000.0, 1.4505, 1.45, 1550.0).unwrap();
        let sol = solve_he11(&spec).unwrap();
        let (u, w) = (sol.u, sol.w);
        let lhs = u * bessel_j(1, u) / bessel_j(0, u);
        let rhs = w * bessel_k_scaled(1.0, w) / bessel_k_scaled(0.0, w);
        assert!((lhs - rhs).abs() < 1e-3, "{lhs} vs {rhs}");
        let k0 = bessel_k_scaled(0.0, w);
        let k1 = bessel_k_scaled(1.0, w);
        let lp01 = u * u / (u * u + w * w) * (1.0 - k0 * k0 / (k1 * k1));
        assert!(
            (sol.evanescent_fraction - lp01).abs() < 1e-3,
            "{} vs {lp01}",
            sol.evanescent_fraction
        );
    }

    #[test]
    fn second_root_appears_above_cutoff() {
        let thin = silica(150.0, 600.0);
        let (b1, b2) = two_mode_betas(&thin).unwrap();
        assert!((b2 - thin.k0()).abs() < 1e-15);
        assert!(b1 > b2);
        let thick = silica(1000.0, 600.0);
        assert!(hybrid_roots(&thick, 2).unwrap().len() == 2);
        let (b1, b2) = two_mode_betas(&thick).unwrap();
        assert!(b1 > b2 && b2 > thick.k0());
    }

    #[test]
    fn coupling_decays_with_offset() {
        let sol = solve_he11(&silica(150.0, 600.0)).unwrap();
        let b0 = coupling_efficiency_estimate(&sol, 0.0).unwrap();
        let lam = sol.decay_length_nm();
        let b1 = coupling_efficiency_estimate(&sol, lam).unwrap();
        // Random-orientation surface emitters on such fibers couple a few
        // tens of percent into the guided mode.
        assert!(b0 > 0.1 && b0 < 0.5, "{b0}");
        assert!((b0 / b1 - std::f64::consts::E.powi(2)).abs() < 1e-9);
        assert!(coupling_efficiency_estimate(&sol, 1e6).unwrap() < 1e-12);
        assert!(coupling_efficiency_estimate(&sol, -1.0).is_err());
    }

    #[test]
    fn thinner_fiber_couples_better() {
        let thin = solve_he11(&silica(150.0, 600.0)).unwrap();
        let thick = solve_he11(&silica(300.0, 600.0)).unwrap();
        assert!(
            coupling_efficiency_estimate(&thin, 0.0).unwrap()
                > coupling_efficiency_estimate(&thick, 0.0).unwrap()
        );
    }

    #[test]
    fn nanofiber_field_peaks_at_surface() {
        let sol = solve_he11(&silica(150.0, 600.0)).unwrap();
        assert_eq!(sol.surface_intensity_ratio, 1.0);
        let fat = solve_he11(&silica(1000.0, 600.0)).unwrap();
        assert!(fat.surface_intensity_ratio < 0.5);
    }

    fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &impl Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol * whole.abs(), 24)
    }

    #[test]
    fn evanescent_fraction_matches_flux_quadrature() {
        for (radius, lambda) in [
            (150.0, 600.0),
            (100.0, 600.0),
            (250.0, 800.0),
            (400.0, 1550.0),
        ] {
            let mode = solve_he11(&silica(radius, lambda)).unwrap();
            let flux = |r: f64| mode.fields(r).axial_flux() * r;
            let inside = adaptive_simpson(&flux, 0.0, radius, 1e-9);
            let outer = radius + 60.0 * mode.decay_length_nm();
            let outside = adaptive_simpson(&flux, radius, outer, 1e-9);
            let oracle = outside / (inside + outside);
            assert!(
                (oracle - mode.evanescent_fraction).abs() < 1e-4,
                "a = {radius}: quadrature {oracle} vs closed form {}",
                mode.evanescent_fraction
            );
        }
    }

    #[test]
    fn sweep_bounds_and_monotonicity() {
        let mut prev = 0.0;
        for i in 0..50 {
            let radius = 400.0 - 6.0 * i as f64;
            let mode = solve_he11(&silica(radius, 600.0)).unwrap();
            assert!(mode.n_eff > mode.spec.n2 && mode.n_eff < mode.spec.n1);
            assert!(mode.residual < 1e-10, "{}", mode.residual);
            assert!(mode.evanescent_fraction > prev, "a = {radius}");
            prev = mode.evanescent_fraction;
        }
        let thin = solve_he11(&silica(70.0, 600.0)).unwrap();
        assert!(
            thin.evanescent_fraction > 0.95,
            "{}",
            thin.evanescent_fraction
        );
        // Deep in the weak-guidance limit n_eff − n2 drops below the bracket ε.
        assert!(matches!(
            solve_he11(&silica(40.0, 600.0)),
            Err(Error::Bracket(_))
        ));
        let mut prev = 0.0;
        for i in 0..20 {
            let lambda = 450.0 + 50.0 * i as f64;
            let mode = solve_he11(&silica(200.0, lambda)).unwrap();
            assert!(mode.evanescent_fraction > prev, "λ = {lambda}");
            prev = mode.evanescent_fraction;
        }
    }
}
