//! Explicit ground states `(αQ_ω, βQ_ω)` and their variational identities.

use std::sync::Arc;

use serde::Serialize;

use crate::direction::{maximize_f, DirectionPoint};
use crate::error::{Error, Result};
use crate::model::{functionals, gn_check, FieldPair, Grid, ModelParams};
use crate::quadrature;

/// Largest admissible `Q_ω(L/2)`.
pub const TAIL_THRESHOLD: f64 = 1e-12;

const RESIDUAL_ACCEPT: f64 = 1e-8;

/// `ln sech z`, finite for every real z.
fn ln_sech(z: f64) -> f64 {
    let a = z.abs();
    std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p()
}

/// `Q_ω(x) = ((k+1)ω sech²(k√ω x))^{1/(2k)}`, the positive even solution of
/// `−Q'' + ωQ − Q^{2k+1} = 0`.
pub fn scalar_q(omega: f64, k: u32, x: f64) -> f64 {
    let kf = k as f64;
    let z = kf * omega.sqrt() * x;
    (((kf + 1.0) * omega).ln() / (2.0 * kf) + ln_sech(z) / kf).exp()
}

/// `∫_ℝ sech^{2/k}(x) dx`.
pub fn sech_power_integral(k: u32) -> f64 {
    let kf = k as f64;
    let hi = (20.0 * kf).max(40.0);
    2.0 * quadrature::adaptive(|x| (2.0 * ln_sech(x) / kf).exp(), 0.0, hi, 1e-12)
}

/// A sampled solitary-wave profile `(αQ_ω, βQ_ω)`.
#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: u32,
    /// `F` at the direction used, the quarter-circle maximum for ground states.
    pub f_max: f64,
    pub direction: DirectionPoint,
    pub pair: FieldPair,
}

impl GroundStateProfile {
    pub fn closed_form(&self, x: f64) -> (f64, f64) {
        let q = scalar_q(self.omega, self.k, x);
        (self.alpha * q, self.beta * q)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.pair.grid()
    }

    /// The same branch at another wave speed, sampled on the same grid.
    pub fn rescaled(&self, omega: f64) -> Result<GroundStateProfile> {
        sample(self.k, omega, self.grid().clone(), self.direction, self.f_max)
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            omega: self.omega,
            alpha: self.alpha,
            beta: self.beta,
            k: self.k,
            f_max: self.f_max,
            direction: self.direction,
        }
    }
}

/// Serializable description of a profile without the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: u32,
    pub f_max: f64,
    pub direction: DirectionPoint,
}

fn sample(k: u32, omega: f64, grid: Arc<Grid>, direction: DirectionPoint, f_value: f64) -> Result<GroundStateProfile> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    let tail = scalar_q(omega, k, 0.5 * grid.length());
    if tail >= TAIL_THRESHOLD {
        return Err(Error::DomainTruncation { tail, threshold: TAIL_THRESHOLD });
    }
    let scale = f_value.powf(-1.0 / (2.0 * k as f64));
    let (alpha, beta) = (scale * direction.x0, scale * direction.y0);
    let pair = FieldPair::from_fn(grid, |x| {
        let q = scalar_q(omega, k, x);
        (alpha * q, beta * q)
    })?;
    Ok(GroundStateProfile { omega, alpha, beta, k, f_max: f_value, direction, pair })
}

/// Builds the ground state along a maximizing direction.
pub fn build_ground_state(
    params: &ModelParams,
    omega: f64,
    grid: Arc<Grid>,
    direction: &DirectionPoint,
) -> Result<GroundStateProfile> {
    let set = maximize_f(params, 1024)?;
    let band = 1e-9 * (1.0 + set.f_max);
    if direction.f_value < set.f_max - band {
        return Err(Error::NotAMaximizer(format!(
            "F = {} is below the maximum {}",
            direction.f_value, set.f_max
        )));
    }
    build_critical_state(params, omega, grid, direction)
}

/// Builds `(αQ_ω, βQ_ω)` for any critical direction of F.
pub fn build_critical_state(
    params: &ModelParams,
    omega: f64,
    grid: Arc<Grid>,
    direction: &DirectionPoint,
) -> Result<GroundStateProfile> {
    let dir = DirectionPoint::from_xy(params, direction.x0, direction.y0)?;
    if dir.lagrange_residual >= RESIDUAL_ACCEPT {
        return Err(Error::NotAMaximizer(format!(
            "Lagrange residual {:e} is not below {RESIDUAL_ACCEPT:e}",
            dir.lagrange_residual
        )));
    }
    if !(dir.f_value > 0.0) {
        return Err(Error::NotAMaximizer("F vanishes along the direction".into()));
    }
    sample(params.k, omega, grid, dir, dir.f_value)
}

/// `max |u'' − ωu + f(u,v)| ∨ |v'' − ωv + g(u,v)|`.
pub fn elliptic_residual(params: &ModelParams, omega: f64, pair: &FieldPair) -> f64 {
    let grid = pair.grid();
    let uxx = grid.derivative(pair.u(), 2);
    let vxx = grid.derivative(pair.v(), 2);
    let (f, g) = params.fg_fields(pair.u(), pair.v());
    let mut worst: f64 = 0.0;
    for j in 0..grid.n() {
        worst = worst
            .max((uxx[j] - omega * pair.u()[j] + f[j]).abs())
            .max((vxx[j] - omega * pair.v()[j] + g[j]).abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevReport {
    /// Relative residuals of identities (i)–(v).
    pub residuals: [f64; 5],
    /// Signed absolute defects `lhs − rhs` of (i)–(v).
    pub defects: [f64; 5],
    /// Largest mismatch between (iii)–(v) and their values implied by (i), (ii).
    pub consistency: f64,
    /// `‖∂ₓ·‖² / ‖·‖²`, equal to `k/(k+2)` at solutions.
    pub gradient_ratio: f64,
    pub trivial: bool,
}

impl PohozaevReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// Pohozaev-type identities at the unit-speed normalization.
pub fn pohozaev_report(params: &ModelParams, pair: &FieldPair) -> PohozaevReport {
    let r = functionals(params, pair);
    let (n, d, p) = (r.l2_sq, r.grad_sq, r.p);
    if n == 0.0 {
        return PohozaevReport {
            residuals: [0.0; 5],
            defects: [0.0; 5],
            consistency: 0.0,
            gradient_ratio: 0.0,
            trivial: true,
        };
    }
    let k = params.kf();
    let pairs = [
        (n + d, (2.0 * k + 2.0) * p),
        (n - d, 2.0 * p),
        (d, k / (k + 2.0) * n),
        (p, n / (k + 2.0)),
        (p, d / k),
    ];
    let defects = pairs.map(|(l, r)| l - r);
    let residuals = pairs.map(|(l, r)| rel(l, r));
    let [e1, e2, e3, e4, e5] = defects;
    let implied = [
        (e1 - (k + 1.0) * e2) / (k + 2.0),
        -(e1 + e2) / (2.0 * k + 4.0),
        -(e1 - e2) / (2.0 * k),
    ];
    let consistency = (e3 - implied[0]).abs().max((e4 - implied[1]).abs()).max((e5 - implied[2]).abs()) / n;
    PohozaevReport { residuals, defects, consistency, gradient_ratio: d / n, trivial: false }
}

fn require_unit_speed(gs: &GroundStateProfile) -> Result<()> {
    if gs.omega != 1.0 {
        return Err(Error::NotUnitSpeed(gs.omega));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpConstant {
    pub kopt: f64,
    /// `K‖Φ‖^{k+2}‖∂ₓΦ‖^{k−2}`, equal to `2/k`.
    pub identity_value: f64,
    pub identity_rel_error: f64,
    /// `J(Φ)` by quadrature.
    pub j_value: f64,
    /// `((k+2)/2)(k/(k+2))^{k/2}‖Φ‖^{2k}`.
    pub j_closed_form: f64,
    /// `lhs/rhs` of the Gagliardo–Nirenberg bound at the ground state.
    pub gn_ratio: f64,
}

/// Sharp Gagliardo–Nirenberg constant from a unit-speed ground state.
pub fn sharp_constant(params: &ModelParams, gs: &GroundStateProfile) -> Result<SharpConstant> {
    require_unit_speed(gs)?;
    let k = params.kf();
    let r = functionals(params, &gs.pair);
    let norm = r.l2_sq.sqrt();
    let grad = r.grad_sq.sqrt();
    let kopt = (2.0 / (k + 2.0)) * ((k + 2.0) / k).powf(k / 2.0) / norm.powf(2.0 * k);
    let identity_value = kopt * norm.powf(k + 2.0) * grad.powf(k - 2.0);
    let j_value = r.j_quotient.ok_or(Error::NotInCone { p: r.p, threshold: 0.0 })?;
    let j_closed_form = 0.5 * (k + 2.0) * (k / (k + 2.0)).powf(k / 2.0) * norm.powf(2.0 * k);
    let gn = gn_check(params, &gs.pair, kopt);
    Ok(SharpConstant {
        kopt,
        identity_value,
        identity_rel_error: rel(identity_value, 2.0 / k),
        j_value,
        j_closed_form,
        gn_ratio: gn.lhs / gn.rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NehariLevel {
    pub omega_n: f64,
    pub lambda1: f64,
    pub s_of_gs: f64,
    pub p_tilde_of_gs: f64,
    /// `(k/(k+2))‖Φ‖²`.
    pub omega_n_closed_form: f64,
    /// Largest relative mismatch among `S`, `P̃` and `λ₁`.
    pub max_rel_error: f64,
}

pub fn nehari_level_check(params: &ModelParams, gs: &GroundStateProfile) -> Result<NehariLevel> {
    require_unit_speed(gs)?;
    let k = params.kf();
    let r = functionals(params, &gs.pair);
    let omega_n = r.i_action;
    let lambda1 = (2.0 * k + 2.0) / k * omega_n;
    let max_rel_error = rel(r.s, lambda1).max(rel(r.p_tilde, lambda1)).max(rel(r.s, r.p_tilde));
    Ok(NehariLevel {
        omega_n,
        lambda1,
        s_of_gs: r.s,
        p_tilde_of_gs: r.p_tilde,
        omega_n_closed_form: k / (k + 2.0) * r.l2_sq,
        max_rel_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSecond {
    pub omega: f64,
    pub closed_form: f64,
    pub finite_difference: f64,
    pub rel_difference: f64,
    /// `Λ'(ω) = M(φ_ω, ψ_ω)`.
    pub lambda_prime: f64,
    pub sech_integral: f64,
}

/// Closed-form and finite-difference `Λ''(ω)` for `Λ(ω) = E + ωM` along the scaling family.
pub fn lambda_second_derivative(params: &ModelParams, omega: f64, gs1: &GroundStateProfile) -> Result<LambdaSecond> {
    require_unit_speed(gs1)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    if params.k < 2 {
        return Err(Error::InvalidParams("Lambda'' requires k >= 2".into()));
    }
    let k = params.kf();
    let integral = sech_power_integral(params.k);
    let closed_form = 0.5 * gs1.f_max.powf(-1.0 / k) * (k + 1.0).powf(1.0 / k) / k
        * (1.0 / k - 0.5)
        * omega.powf(1.0 / k - 1.5)
        * integral;

    let big_lambda = |w: f64| -> Result<(f64, f64)> {
        let r = functionals(params, &gs1.rescaled(w)?.pair);
        Ok((r.energy + w * r.mass, r.mass))
    };
    let h = 1e-3 * omega;
    let (lp, _) = big_lambda(omega + h)?;
    let (l0, m0) = big_lambda(omega)?;
    let (lm, _) = big_lambda(omega - h)?;
    let finite_difference = (lp - 2.0 * l0 + lm) / (h * h);
    let rel_difference = if closed_form == 0.0 {
        finite_difference.abs()
    } else {
        (finite_difference - closed_form).abs() / closed_form.abs()
    };
    Ok(LambdaSecond {
        omega,
        closed_form,
        finite_difference,
        rel_difference,
        lambda_prime: m0,
        sech_integral: integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::{interior_roots, root_direction};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fam2() -> ModelParams {
        ModelParams::focusing(2, 1.0, 4.0, 1.0, 1.0).unwrap()
    }

    fn fam3() -> ModelParams {
        ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap()
    }

    /// Unit-speed ground state; `n = 2048` gives the resolved reference grid.
    fn ground(params: &ModelParams, n: usize) -> GroundStateProfile {
        let set = maximize_f(params, 1024).unwrap();
        let length = if n >= 2048 { 20.0 * PI } else { 64.0 * PI };
        build_ground_state(params, 1.0, Grid::new(n, length).unwrap(), &set.points[0]).unwrap()
    }

    #[test]
    fn q_values() {
        assert!((scalar_q(1.0, 2, 0.0) - 3f64.powf(0.25)).abs() < 1e-15);
        for &(w, x) in &[(0.3, 1.7), (4.0, -0.4), (2.2, 3.0)] {
            for k in 1..=4 {
                let lhs = scalar_q(w, k, x);
                let rhs = w.powf(1.0 / (2.0 * k as f64)) * scalar_q(1.0, k, w.sqrt() * x);
                assert!((lhs - rhs).abs() < 1e-14 * rhs);
            }
        }
        assert!(scalar_q(1.0, 3, 200.0) > 0.0);
        assert!(scalar_q(1.0, 3, 1.0) < scalar_q(1.0, 3, 0.5));
        assert_eq!(scalar_q(1.0, 3, 1.5), scalar_q(1.0, 3, -1.5));
    }

    #[test]
    fn q_solves_scalar_equation() {
        let h = 1e-4;
        for k in 1..=3u32 {
            for j in 0..20 {
                let x = -3.0 + 0.31 * j as f64;
                let q = |x| scalar_q(1.0, k, x);
                let qxx = (q(x + h) - 2.0 * q(x) + q(x - h)) / (h * h);
                let r = -qxx + q(x) - q(x).powi(2 * k as i32 + 1);
                assert!(r.abs() < 1e-6, "k={k} x={x} r={r}");
            }
        }
    }

    #[test]
    fn sech_integrals() {
        assert!((sech_power_integral(1) - 2.0).abs() < 1e-12);
        assert!((sech_power_integral(2) - PI).abs() < 1e-12);
    }

    #[test]
    fn amplitudes() {
        let gs = ground(&fam2(), 1024);
        assert!((gs.alpha - 8f64.powf(-0.25)).abs() < 1e-12);
        assert!((gs.beta - gs.alpha).abs() < 1e-15);
        let gs3 = ground(&fam3(), 1024);
        assert!((gs3.alpha - 9f64.powf(-1.0 / 6.0)).abs() < 1e-12);
        let axes = ModelParams::focusing(3, 1.0, 1.0, 0.0, 0.0).unwrap();
        let g = build_ground_state(&axes, 1.0, Grid::new(1024, 64.0 * PI).unwrap(), &DirectionPoint::from_theta(&axes, 0.0)).unwrap();
        assert_eq!(g.alpha, 1.0);
        assert_eq!(g.beta, 0.0);
        assert!(gs.pair.linf_distance(&FieldPair::from_fn(gs.grid().clone(), |x| gs.closed_form(x)).unwrap()) == 0.0);
    }

    #[test]
    fn rejects_non_maximizers_and_short_domains() {
        let p = fam3();
        let grid = Grid::new(1024, 64.0 * PI).unwrap();
        let axis = DirectionPoint::from_theta(&p, 0.0);
        assert!(matches!(build_ground_state(&p, 1.0, grid.clone(), &axis), Err(Error::NotAMaximizer(_))));
        assert!(build_critical_state(&p, 1.0, grid, &axis).is_ok());
        let short = Grid::new(256, 10.0).unwrap();
        let diag = DirectionPoint::from_theta(&p, std::f64::consts::FRAC_PI_4);
        assert!(matches!(build_ground_state(&p, 1.0, short, &diag), Err(Error::DomainTruncation { .. })));
        let off = DirectionPoint::from_theta(&p, 0.3);
        assert!(build_critical_state(&p, 1.0, Grid::new(1024, 64.0 * PI).unwrap(), &off).is_err());
    }

    #[test]
    fn identities_on_resolved_grid() {
        for p in [fam2(), fam3()] {
            let gs = ground(&p, 2048);
            assert!(elliptic_residual(&p, 1.0, &gs.pair) < 1e-8);
            let rep = pohozaev_report(&p, &gs.pair);
            assert!(rep.max_residual() < 1e-8, "{rep:?}");
            assert!(rep.consistency < 1e-13);
            let sc = sharp_constant(&p, &gs).unwrap();
            assert!(sc.identity_rel_error < 1e-8);
            assert!((sc.j_value * sc.kopt - 1.0).abs() < 1e-8);
            assert!((sc.gn_ratio - 1.0).abs() < 1e-6);
            let nl = nehari_level_check(&p, &gs).unwrap();
            assert!(nl.max_rel_error < 1e-8);
            assert!((nl.omega_n - nl.omega_n_closed_form).abs() < 1e-8 * nl.omega_n);
            let k = p.kf();
            assert!((nl.s_of_gs / functionals(&p, &gs.pair).l2_sq - (2.0 * k + 2.0) / (k + 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn k2_reference_values() {
        let p = fam2();
        let gs = ground(&p, 2048);
        let q_sq: f64 = 3f64.sqrt() * FRAC_PI_2;
        let norm_sq = 2.0 * gs.alpha * gs.alpha * q_sq;
        let r = functionals(&p, &gs.pair);
        assert!((r.l2_sq - norm_sq).abs() < 1e-12 * norm_sq);
        let sc = sharp_constant(&p, &gs).unwrap();
        assert!((sc.kopt - 1.0 / (norm_sq * norm_sq)).abs() < 1e-10);
        assert!((sc.kopt - 0.270_189_823_0).abs() < 1e-9);
        let nl = nehari_level_check(&p, &gs).unwrap();
        assert!((nl.omega_n - 0.5 * norm_sq).abs() < 1e-10);
        assert!((nl.omega_n - 0.961_912_372_6).abs() < 1e-9);
    }

    #[test]
    fn zero_and_scaled_pairs() {
        let p = fam2();
        let gs = ground(&p, 1024);
        let z = FieldPair::zeros(gs.grid().clone());
        assert_eq!(elliptic_residual(&p, 1.0, &z), 0.0);
        assert!(pohozaev_report(&p, &z).trivial);
        assert!(elliptic_residual(&p, 1.0, &gs.pair.scaled(1.1)) > 1e-2);
        let bump = FieldPair::from_fn(gs.grid().clone(), |x| ((-x * x / 3.0).exp(), (-x * x / 3.0).exp())).unwrap();
        assert!(pohozaev_report(&p, &bump).residuals[2] > 0.1);
    }

    #[test]
    fn scaling_family_and_mass() {
        let p = fam2();
        let gs = ground(&p, 2048);
        let set = maximize_f(&p, 1024).unwrap();
        for w in [0.25f64, 1.0, 4.0] {
            // the box shrinks with the profile so every speed sees the same resolution
            let grid = Grid::new(2048, 20.0 * PI / w.sqrt()).unwrap();
            let g = build_ground_state(&p, w, grid, &set.points[0]).unwrap();
            let direct = FieldPair::from_fn(g.grid().clone(), |x| {
                let (u, v) = gs.closed_form(w.sqrt() * x);
                (w.powf(0.25) * u, w.powf(0.25) * v)
            })
            .unwrap();
            assert!(g.pair.linf_distance(&direct) < 1e-14);
            assert!(elliptic_residual(&p, w, &g.pair) < 1e-8);
            assert!(((g.alpha * g.alpha + g.beta * g.beta) - g.f_max.powf(-0.5)).abs() < 1e-12);
        }
        let q_only = FieldPair::from_fn(gs.grid().clone(), |x| (scalar_q(1.0, 2, x), 0.0)).unwrap();
        let m = functionals(&p, &gs.pair).mass;
        let mq = functionals(&p, &q_only).mass;
        assert!((m - (gs.alpha.powi(2) + gs.beta.powi(2)) * mq).abs() < 1e-12 * m);
        assert!(sharp_constant(&p, &gs.rescaled(2.0).unwrap()).is_err());
    }

    #[test]
    fn ground_state_has_least_action() {
        let p = fam3();
        let grid = Grid::new(2048, 20.0 * PI).unwrap();
        let gs = ground(&p, 2048);
        let i_gs = functionals(&p, &gs.pair).i_action;
        let mut others = vec![DirectionPoint::from_theta(&p, 0.0), DirectionPoint::from_theta(&p, FRAC_PI_2)];
        others.extend(interior_roots(&p).unwrap().into_iter().map(|r| root_direction(&p, r)));
        for d in others {
            let s = build_critical_state(&p, 1.0, grid.clone(), &d).unwrap();
            assert!(elliptic_residual(&p, 1.0, &s.pair) < 1e-8);
            assert!(i_gs < functionals(&p, &s.pair).i_action);
        }
    }

    #[test]
    fn lambda_second() {
        let gs = ground(&fam2(), 2048);
        let l = lambda_second_derivative(&fam2(), 1.0, &gs).unwrap();
        assert_eq!(l.closed_form, 0.0);
        assert!(l.finite_difference.abs() < 1e-7);

        let gs3 = ground(&fam3(), 2048);
        let l = lambda_second_derivative(&fam3(), 1.0, &gs3).unwrap();
        assert!(l.closed_form < 0.0);
        assert!(l.rel_difference < 1e-5, "{l:?}");
        let m4 = functionals(&fam3(), &gs3.rescaled(4.0).unwrap().pair).mass;
        let m1 = functionals(&fam3(), &gs3.pair).mass;
        assert!((m4 / m1 - 4f64.powf(-1.0 / 6.0)).abs() < 1e-8);
    }
}
