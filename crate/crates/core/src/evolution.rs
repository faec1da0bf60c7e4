//! Pseudospectral time integration of
//! `u_t + u_xxx + μ f(u,v)_x = 0`, `v_t + v_xxx + μ g(u,v)_x = 0`.
//!
//! In Fourier space `ŵ_t = iξ³ŵ − iμξ N̂(w)`. The dispersive part is handled
//! exactly, either by exponential time differencing (ETDRK4, default) or by an
//! integrating factor (IF-RK4).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::direction::maximize_f;
use crate::error::{Error, Result};
use crate::groundstate::{build_ground_state, GroundStateProfile};
use crate::model::{functionals, FieldPair, Grid, ModelParams, Mu};

/// Blow-up threshold on `‖∂ₓ(u,v)‖²`.
pub const G_BLOWUP: f64 = 1e8;

const CONTOUR_POINTS: usize = 64;
const FILTER_STRENGTH: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Etdrk4,
    IfRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the modes kept in the nonlinear term.
    #[serde(default = "default_dealias")]
    pub dealias: f64,
    /// Order of the exponential filter on the nonlinear term; `None` disables it.
    #[serde(default)]
    pub filter_order: Option<u32>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

fn default_dealias() -> f64 {
    1.0
}

fn default_record_every() -> usize {
    10
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        EvolveOptions {
            dt,
            t_end,
            dealias: default_dealias(),
            filter_order: None,
            record_every: default_record_every(),
            scheme: Scheme::Etdrk4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidOptions(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidOptions(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dealias > 0.0 && self.dealias <= 1.0) {
            return Err(Error::InvalidOptions(format!("dealias must lie in (0, 1], got {}", self.dealias)));
        }
        if let Some(p) = self.filter_order {
            if p < 4 || p % 2 != 0 {
                return Err(Error::InvalidOptions(format!("filter_order must be even and >= 4, got {p}")));
            }
        }
        if self.record_every < 1 {
            return Err(Error::InvalidOptions("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// One monitor record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖∂ₓ(u,v)‖²`.
    pub g: f64,
    /// Observer output, e.g. the orbital distance.
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowUp { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Final state, or the last healthy one after a blow-up.
    pub final_pair: FieldPair,
    pub final_time: f64,
    pub outcome: Outcome,
    pub steps: usize,
}

impl Trajectory {
    /// Turns a blow-up into an error.
    pub fn completed(self) -> Result<Trajectory> {
        match self.outcome {
            Outcome::Completed => Ok(self),
            Outcome::BlowUp { t } => Err(Error::BlowUp(t)),
        }
    }

    /// Relative drifts of mass and energy over the recorded samples.
    ///
    /// Energy is normalized by `max(|E₀|, ½‖∂ₓw₀‖²)` since `E` can vanish.
    pub fn drifts(&self) -> (f64, f64) {
        let first = self.samples[0];
        let m_scale = first.mass.abs().max(f64::MIN_POSITIVE);
        let e_scale = first.energy.abs().max(0.5 * first.g).max(f64::MIN_POSITIVE);
        let mut dm: f64 = 0.0;
        let mut de: f64 = 0.0;
        for s in &self.samples {
            dm = dm.max((s.mass - first.mass).abs() / m_scale);
            de = de.max((s.energy - first.energy).abs() / e_scale);
        }
        (dm, de)
    }
}

/// `h·mean(φ(z + r_j))` over a full circle of radius one around `z`.
fn contour_mean(z: Complex64, h: f64, phi: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..CONTOUR_POINTS {
        let angle = 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
        acc += phi(z + Complex64::from_polar(1.0, angle));
    }
    acc * (h / CONTOUR_POINTS as f64)
}

enum Coefficients {
    Etd {
        e: Vec<Complex64>,
        e2: Vec<Complex64>,
        q: Vec<Complex64>,
        f1: Vec<Complex64>,
        f2: Vec<Complex64>,
        f3: Vec<Complex64>,
    },
    If {
        e: Vec<Complex64>,
        e2: Vec<Complex64>,
    },
}

/// Time stepper holding the spectral state.
pub struct Evolver {
    params: ModelParams,
    grid: Arc<Grid>,
    dt: f64,
    uh: Vec<Complex64>,
    vh: Vec<Complex64>,
    /// `−iμξ` times dealias mask and filter.
    nl_symbol: Vec<Complex64>,
    coeffs: Coefficients,
    steps: usize,
}

impl Evolver {
    /// `dt` may be negative for backward integration.
    pub fn new(params: &ModelParams, pair0: &FieldPair, dt: f64, opts: &EvolveOptions) -> Result<Evolver> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidOptions(format!("dt must be finite and nonzero, got {dt}")));
        }
        let grid = pair0.grid().clone();
        let n = grid.n();
        let mu = params.mu.sign();
        let cutoff = opts.dealias * (n / 2) as f64;
        let nl_symbol: Vec<Complex64> = (0..n)
            .map(|m| {
                let index = if m < n / 2 { m as f64 } else { (n - m) as f64 };
                let mut weight = if index <= cutoff { 1.0 } else { 0.0 };
                if let Some(p) = opts.filter_order {
                    weight *= (-FILTER_STRENGTH * (index / cutoff).powi(p as i32)).exp();
                }
                Complex64::new(0.0, -mu * grid.odd_wavenumbers()[m] * weight)
            })
            .collect();
        let lin: Vec<Complex64> = grid
            .odd_wavenumbers()
            .iter()
            .map(|k| Complex64::new(0.0, k * k * k))
            .collect();
        let e: Vec<Complex64> = lin.iter().map(|l| (l * dt).exp()).collect();
        let e2: Vec<Complex64> = lin.iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        let coeffs = match opts.scheme {
            Scheme::IfRk4 => Coefficients::If { e, e2 },
            Scheme::Etdrk4 => {
                let z: Vec<Complex64> = lin.iter().map(|l| l * dt).collect();
                let one = Complex64::new(1.0, 0.0);
                let q = z.iter().map(|&z| contour_mean(z, dt, |w| ((w * 0.5).exp() - one) / w)).collect();
                let f1 = z
                    .iter()
                    .map(|&z| contour_mean(z, dt, |w| (-4.0 - w + w.exp() * (4.0 - 3.0 * w + w * w)) / (w * w * w)))
                    .collect();
                let f2 = z
                    .iter()
                    .map(|&z| contour_mean(z, dt, |w| (2.0 + w + w.exp() * (w - 2.0)) / (w * w * w)))
                    .collect();
                let f3 = z
                    .iter()
                    .map(|&z| contour_mean(z, dt, |w| (-4.0 - 3.0 * w - w * w + w.exp() * (4.0 - w)) / (w * w * w)))
                    .collect();
                Coefficients::Etd { e, e2, q, f1, f2, f3 }
            }
        };
        Ok(Evolver {
            params: *params,
            uh: grid.forward(pair0.u()),
            vh: grid.forward(pair0.v()),
            grid,
            dt,
            nl_symbol,
            coeffs,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn pair(&self) -> FieldPair {
        let u = self.grid.inverse_real(&self.uh);
        let v = self.grid.inverse_real(&self.vh);
        FieldPair::new(self.grid.clone(), u, v).unwrap_or_else(|_| FieldPair::zeros(self.grid.clone()))
    }

    fn is_finite(&self) -> bool {
        self.uh.iter().chain(&self.vh).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `‖∂ₓ(u,v)‖²` from the spectral state.
    pub fn grad_sq(&self) -> f64 {
        self.grid.grad_sq_from_spectrum(&self.uh) + self.grid.grad_sq_from_spectrum(&self.vh)
    }

    fn nonlinear(&self, uh: &[Complex64], vh: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let u = self.grid.inverse_real(uh);
        let v = self.grid.inverse_real(vh);
        let (f, g) = self.params.fg_fields(&u, &v);
        let mut fh = self.grid.forward(&f);
        let mut gh = self.grid.forward(&g);
        for ((a, b), s) in fh.iter_mut().zip(gh.iter_mut()).zip(&self.nl_symbol) {
            *a *= s;
            *b *= s;
        }
        (fh, gh)
    }

    pub fn step(&mut self) {
        let (uh, vh) = (self.uh.clone(), self.vh.clone());
        let (nu, nv) = self.nonlinear(&uh, &vh);
        let n = uh.len();
        match &self.coeffs {
            Coefficients::Etd { e, e2, q, f1, f2, f3 } => {
                let comb = |w: &[Complex64], nw: &[Complex64]| -> Vec<Complex64> {
                    (0..n).map(|m| e2[m] * w[m] + q[m] * nw[m]).collect()
                };
                let au = comb(&uh, &nu);
                let av = comb(&vh, &nv);
                let (nau, nav) = self.nonlinear(&au, &av);
                let bu = comb(&uh, &nau);
                let bv = comb(&vh, &nav);
                let (nbu, nbv) = self.nonlinear(&bu, &bv);
                let cu: Vec<Complex64> = (0..n).map(|m| e2[m] * au[m] + q[m] * (2.0 * nbu[m] - nu[m])).collect();
                let cv: Vec<Complex64> = (0..n).map(|m| e2[m] * av[m] + q[m] * (2.0 * nbv[m] - nv[m])).collect();
                let (ncu, ncv) = self.nonlinear(&cu, &cv);
                for m in 0..n {
                    self.uh[m] = e[m] * uh[m] + f1[m] * nu[m] + 2.0 * f2[m] * (nau[m] + nbu[m]) + f3[m] * ncu[m];
                    self.vh[m] = e[m] * vh[m] + f1[m] * nv[m] + 2.0 * f2[m] * (nav[m] + nbv[m]) + f3[m] * ncv[m];
                }
            }
            Coefficients::If { e, e2 } => {
                let h = self.dt;
                let stage = |w: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
                    (0..n).map(|m| e2[m] * (w[m] + c * k[m])).collect()
                };
                let u2 = stage(&uh, &nu, 0.5 * h);
                let v2 = stage(&vh, &nv, 0.5 * h);
                let (k2u, k2v) = self.nonlinear(&u2, &v2);
                let u3: Vec<Complex64> = (0..n).map(|m| e2[m] * uh[m] + 0.5 * h * k2u[m]).collect();
                let v3: Vec<Complex64> = (0..n).map(|m| e2[m] * vh[m] + 0.5 * h * k2v[m]).collect();
                let (k3u, k3v) = self.nonlinear(&u3, &v3);
                let u4: Vec<Complex64> = (0..n).map(|m| e[m] * uh[m] + h * e2[m] * k3u[m]).collect();
                let v4: Vec<Complex64> = (0..n).map(|m| e[m] * vh[m] + h * e2[m] * k3v[m]).collect();
                let (k4u, k4v) = self.nonlinear(&u4, &v4);
                for m in 0..n {
                    self.uh[m] = e[m] * uh[m]
                        + h / 6.0 * (e[m] * nu[m] + 2.0 * e2[m] * (k2u[m] + k3u[m]) + k4u[m]);
                    self.vh[m] = e[m] * vh[m]
                        + h / 6.0 * (e[m] * nv[m] + 2.0 * e2[m] * (k2v[m] + k3v[m]) + k4v[m]);
                }
            }
        }
        self.steps += 1;
    }

    fn healthy(&self) -> bool {
        self.is_finite() && self.grad_sq() <= G_BLOWUP
    }
}

fn sample(params: &ModelParams, t: f64, pair: &FieldPair, d: Option<f64>) -> Sample {
    let r = functionals(params, pair);
    Sample { t, mass: r.mass, energy: r.energy, g: r.grad_sq, d }
}

/// Ten steps from the initial data; rejects steps that visibly destabilize.
fn probe(params: &ModelParams, pair0: &FieldPair, opts: &EvolveOptions) -> Result<()> {
    if pair0.is_zero() {
        return Ok(());
    }
    let mut ev = Evolver::new(params, pair0, opts.dt, opts)?;
    let m0 = 0.5 * pair0.l2_sq();
    let g0 = pair0.grad_sq();
    for _ in 0..10 {
        ev.step();
        if !ev.is_finite() {
            return Err(Error::StepTooLarge(format!("non-finite state within 10 steps of dt = {}", opts.dt)));
        }
    }
    let p = ev.pair();
    let m1 = 0.5 * p.l2_sq();
    let g1 = p.grad_sq();
    if (m1 - m0).abs() > 1e-4 * m0 || g1 > 2.0 * g0 + 1e-12 {
        return Err(Error::StepTooLarge(format!(
            "10-step probe with dt = {}: mass {m0:e} -> {m1:e}, G {g0:e} -> {g1:e}",
            opts.dt
        )));
    }
    Ok(())
}

pub fn evolve(params: &ModelParams, pair0: &FieldPair, opts: &EvolveOptions) -> Result<Trajectory> {
    evolve_observed(params, pair0, opts, |_, _| None)
}

/// Evolves and calls `observer(t, state)` at every record; its output lands in `Sample::d`.
pub fn evolve_observed(
    params: &ModelParams,
    pair0: &FieldPair,
    opts: &EvolveOptions,
    mut observer: impl FnMut(f64, &FieldPair) -> Option<f64>,
) -> Result<Trajectory> {
    opts.validate()?;
    probe(params, pair0, opts)?;
    let mut ev = Evolver::new(params, pair0, opts.dt, opts)?;
    let total = opts.steps();
    let mut samples = vec![sample(params, 0.0, pair0, observer(0.0, pair0))];
    let mut last_healthy = pair0.clone();
    let mut last_time = 0.0;
    for s in 1..=total {
        ev.step();
        if !ev.healthy() {
            return Ok(Trajectory {
                samples,
                final_pair: last_healthy,
                final_time: last_time,
                outcome: Outcome::BlowUp { t: ev.time() },
                steps: s,
            });
        }
        if s % opts.record_every == 0 || s == total {
            let pair = ev.pair();
            let t = ev.time();
            let d = observer(t, &pair);
            samples.push(sample(params, t, &pair, d));
            last_healthy = pair;
            last_time = t;
        }
    }
    Ok(Trajectory {
        samples,
        final_pair: ev.pair(),
        final_time: ev.time(),
        outcome: Outcome::Completed,
        steps: total,
    })
}

fn require_focusing(params: &ModelParams) -> Result<()> {
    if params.mu != Mu::Focusing {
        return Err(Error::InvalidParams("solitary waves require mu = +1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TravelingWave {
    /// Largest relative L² distance to the translated profile.
    pub error: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub samples: Vec<Sample>,
}

/// Evolves `gs` and compares with `gs(x − ωt)` at every record.
pub fn traveling_wave_error(
    params: &ModelParams,
    omega: f64,
    gs: &GroundStateProfile,
    opts: &EvolveOptions,
) -> Result<TravelingWave> {
    require_focusing(params)?;
    if (gs.omega - omega).abs() > 1e-14 * omega {
        return Err(Error::InvalidParams(format!("profile speed {} differs from omega {omega}", gs.omega)));
    }
    let norm = gs.pair.l2_sq().sqrt();
    let traj = evolve_observed(params, &gs.pair, opts, |t, pair| {
        Some(pair.l2_distance(&gs.pair.translated(omega * t)) / norm)
    })?
    .completed()?;
    let error = traj.samples.iter().filter_map(|s| s.d).fold(0.0, f64::max);
    let (mass_drift, energy_drift) = traj.drifts();
    Ok(TravelingWave { error, mass_drift, energy_drift, samples: traj.samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwpThresholds {
    #[serde(rename = "A")]
    pub a_const: f64,
    #[serde(rename = "B")]
    pub b_const: f64,
    pub m: f64,
    /// `(Bm)^{−1/(m−1)}`; absent at `k = 2`.
    pub gamma_trap: Option<f64>,
    /// `(k/(k+2))‖Φ‖^{4k/(k−2)}/‖w₀‖^{2(k+2)/(k−2)}`, the same number by the closed form.
    pub gamma_closed_form: Option<f64>,
    pub hip1_holds: bool,
    pub hip2_holds: bool,
    /// hip2 holds with equality within `1e-10` relative.
    pub hip2_boundary: bool,
    /// `G(0) < γ`, evaluated independently of hip2.
    pub g0_below_gamma: bool,
    /// `A < (1 − 1/m)γ`, evaluated independently of hip1.
    pub a_below_trap_level: bool,
    /// `A/(1 − K‖w₀‖⁴)` at `k = 2`.
    pub g_bound: Option<f64>,
    /// `‖w₀‖/‖Φ‖`.
    pub norm_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwpReport {
    #[serde(flatten)]
    pub thresholds: GwpThresholds,
    pub g0: f64,
    pub g_max: f64,
    pub g_trace: Vec<(f64, f64)>,
    pub trapped: bool,
    pub outcome: Outcome,
    pub samples: Vec<Sample>,
}

const BOUNDARY_BAND: f64 = 1e-10;

fn strictly_below(lhs: f64, rhs: f64) -> (bool, bool) {
    let boundary = (lhs - rhs).abs() <= BOUNDARY_BAND * rhs.abs().max(lhs.abs());
    (lhs < rhs && !boundary, boundary)
}

/// Threshold quantities for initial data `pair0` against the unit-speed ground state.
pub fn gwp_thresholds(params: &ModelParams, pair0: &FieldPair, gs1: &GroundStateProfile) -> Result<GwpThresholds> {
    require_focusing(params)?;
    if params.k < 2 {
        return Err(Error::NoThresholdNeeded(params.k));
    }
    if gs1.omega != 1.0 {
        return Err(Error::NotUnitSpeed(gs1.omega));
    }
    let k = params.kf();
    let r0 = functionals(params, pair0);
    let rp = functionals(params, &gs1.pair);
    let norm0 = r0.l2_sq.sqrt();
    let norm_phi = rp.l2_sq.sqrt();
    let kopt = (2.0 / (k + 2.0)) * ((k + 2.0) / k).powf(k / 2.0) / norm_phi.powf(2.0 * k);
    let a_const = 2.0 * r0.energy;
    let b_const = kopt * norm0.powf(k + 2.0);
    let m = k / 2.0;
    let norm_ratio = norm0 / norm_phi;

    if params.k == 2 {
        let (below, boundary) = strictly_below(norm0, norm_phi);
        let denom = 1.0 - kopt * norm0.powi(4);
        return Ok(GwpThresholds {
            a_const,
            b_const,
            m,
            gamma_trap: None,
            gamma_closed_form: None,
            hip1_holds: below,
            hip2_holds: below,
            hip2_boundary: boundary,
            g0_below_gamma: denom > 0.0 && !boundary,
            a_below_trap_level: denom > 0.0 && !boundary,
            g_bound: (denom > 0.0).then(|| a_const / denom),
            norm_ratio,
        });
    }

    let kk = params.k as i32;
    let e_phi = rp.energy;
    let hip1_lhs = r0.mass.powi(kk + 2) * r0.energy.powi(kk - 2);
    let hip1_rhs = rp.mass.powi(kk + 2) * e_phi.powi(kk - 2);
    let (hip1_holds, _) = strictly_below(hip1_lhs, hip1_rhs);
    let hip2_lhs = r0.grad_sq.sqrt().powf(k - 2.0) * norm0.powf(k + 2.0);
    let hip2_rhs = rp.grad_sq.sqrt().powf(k - 2.0) * norm_phi.powf(k + 2.0);
    let (hip2_holds, hip2_boundary) = strictly_below(hip2_lhs, hip2_rhs);

    let gamma = if b_const > 0.0 { (b_const * m).powf(-1.0 / (m - 1.0)) } else { f64::INFINITY };
    let gamma_closed = (norm0 > 0.0).then(|| {
        k / (k + 2.0) * norm_phi.powf(4.0 * k / (k - 2.0)) / norm0.powf(2.0 * (k + 2.0) / (k - 2.0))
    });
    let (g0_below_gamma, _) = strictly_below(r0.grad_sq, gamma);
    let (a_below_trap_level, _) = strictly_below(a_const, (1.0 - 1.0 / m) * gamma);
    Ok(GwpThresholds {
        a_const,
        b_const,
        m,
        gamma_trap: Some(gamma),
        gamma_closed_form: gamma_closed,
        hip1_holds,
        hip2_holds,
        hip2_boundary,
        g0_below_gamma,
        a_below_trap_level,
        g_bound: None,
        norm_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceSweep {
    pub pairs: usize,
    pub below: usize,
    pub above: usize,
    pub boundary: usize,
    /// Pairs where `hip2` and `G(0) < γ` disagree.
    pub hip2_mismatches: usize,
    /// Pairs where `hip1` and `A < (1 − 1/m)γ` disagree.
    pub hip1_mismatches: usize,
}

/// Two-bump pair with random widths, centres and mixing, rescaled so that the
/// hip2 ratio is log-uniform in `[1/3, 3]`.
pub fn random_threshold_pair(
    params: &ModelParams,
    gs1: &GroundStateProfile,
    rng: &mut impl Rng,
) -> Result<FieldPair> {
    let grid = gs1.grid().clone();
    let (w1, w2) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
    let (c1, c2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
    let shape = FieldPair::from_fn(grid, |x| {
        (theta.cos() / (w1 * (x - c1)).cosh(), theta.sin() / (w2 * (x - c2)).cosh())
    })?;
    let k = params.kf();
    let hip2 = |p: &FieldPair| p.grad_sq().sqrt().powf(k - 2.0) * p.l2_sq().sqrt().powf(k + 2.0);
    let target = 3f64.powf(rng.gen_range(-1.0..1.0));
    let scale = (target * hip2(&gs1.pair) / hip2(&shape)).powf(1.0 / (2.0 * k));
    Ok(shape.scaled(scale))
}

/// Agreement of the two threshold formulations on `count` seeded random pairs.
pub fn gwp_equivalence_sweep(
    params: &ModelParams,
    gs1: &GroundStateProfile,
    count: usize,
    seed: u64,
) -> Result<EquivalenceSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = EquivalenceSweep { pairs: count, below: 0, above: 0, boundary: 0, hip2_mismatches: 0, hip1_mismatches: 0 };
    for _ in 0..count {
        let pair = random_threshold_pair(params, gs1, &mut rng)?;
        let th = gwp_thresholds(params, &pair, gs1)?;
        if th.hip2_boundary {
            sweep.boundary += 1;
            continue;
        }
        if th.hip2_holds {
            sweep.below += 1;
        } else {
            sweep.above += 1;
        }
        if th.hip2_holds != th.g0_below_gamma {
            sweep.hip2_mismatches += 1;
        }
        if th.hip1_holds != th.a_below_trap_level {
            sweep.hip1_mismatches += 1;
        }
    }
    Ok(sweep)
}

/// Threshold analysis plus a run recording whether `G(t)` stays trapped.
pub fn gwp_monitor(
    params: &ModelParams,
    pair0: &FieldPair,
    gs1: &GroundStateProfile,
    opts: &EvolveOptions,
) -> Result<GwpReport> {
    let thresholds = gwp_thresholds(params, pair0, gs1)?;
    let traj = evolve(params, pair0, opts)?;
    let g_trace: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.g)).collect();
    let g0 = g_trace[0].1;
    let g_max = g_trace.iter().map(|x| x.1).fold(0.0, f64::max);
    let healthy = traj.outcome == Outcome::Completed;
    let trapped = healthy
        && match (thresholds.gamma_trap, thresholds.g_bound) {
            (Some(gamma), _) => {
                if g0 < gamma {
                    g_trace.iter().all(|x| x.1 < gamma)
                } else {
                    g_trace.iter().all(|x| x.1 > gamma)
                }
            }
            (None, Some(bound)) => g_trace.iter().all(|x| x.1 <= bound * (1.0 + 1e-8)),
            (None, None) => false,
        };
    Ok(GwpReport { thresholds, g0, g_max, g_trace, trapped, outcome: traj.outcome, samples: traj.samples })
}

/// `min_s ‖w − φ(· − s)‖_{H¹}` with the profile supplied by its spectrum.
pub struct OrbitalDistance {
    grid: Arc<Grid>,
    ph: Vec<Complex64>,
    qh: Vec<Complex64>,
    weight: Vec<f64>,
}

impl OrbitalDistance {
    pub fn new(profile: &FieldPair) -> Self {
        let grid = profile.grid().clone();
        let weight: Vec<f64> = grid.odd_wavenumbers().iter().map(|k| 1.0 + k * k).collect();
        let ph = grid.forward(profile.u());
        let qh = grid.forward(profile.v());
        OrbitalDistance { grid, ph, qh, weight }
    }

    /// `(distance, optimal shift)`.
    pub fn distance(&self, pair: &FieldPair) -> (f64, f64) {
        let grid = &self.grid;
        let n = grid.n();
        let nyq = grid.nyquist_index();
        let uh = grid.forward(pair.u());
        let vh = grid.forward(pair.v());
        let c: Vec<Complex64> = (0..n)
            .map(|m| self.weight[m] * (uh[m] * self.ph[m].conj() + vh[m] * self.qh[m].conj()))
            .collect();

        // correlation on grid shifts
        let mut buf = c.clone();
        buf[nyq] = Complex64::new(c[nyq].re, 0.0);
        grid.inverse_complex(&mut buf);
        let j = (0..n).fold(0, |best, i| if buf[i].re > buf[best].re { i } else { best });
        let jj = if j > n / 2 { j as f64 - n as f64 } else { j as f64 };
        let mut s = jj * grid.dx();

        let ks = grid.wavenumbers();
        let corr = |s: f64| -> (f64, f64, f64) {
            let (mut c0, mut c1, mut c2) = (0.0, 0.0, 0.0);
            for m in 0..n {
                let k = ks[m];
                if m == nyq {
                    let (sn, cs) = (k * s).sin_cos();
                    c0 += c[m].re * cs;
                    c1 -= c[m].re * k * sn;
                    c2 -= c[m].re * k * k * cs;
                } else {
                    let z = c[m] * Complex64::from_polar(1.0, k * s);
                    c0 += z.re;
                    c1 -= k * z.im;
                    c2 -= k * k * z.re;
                }
            }
            (c0, c1, c2)
        };
        let mut best = corr(s).0;
        for _ in 0..30 {
            let (_, c1, c2) = corr(s);
            if c2 >= 0.0 {
                break;
            }
            let step = (-c1 / c2).clamp(-grid.dx(), grid.dx());
            let trial = s + step;
            let val = corr(trial).0;
            if val < best {
                break;
            }
            best = val;
            s = trial;
            if step.abs() < 1e-15 * grid.length() {
                break;
            }
        }
        // direct evaluation avoids cancellation in the expanded square
        let mut d2 = 0.0;
        for m in 0..n {
            let k = ks[m];
            let phase = if m == nyq {
                Complex64::new((k * s).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -k * s)
            };
            d2 += self.weight[m] * ((uh[m] - phase * self.ph[m]).norm_sqr() + (vh[m] - phase * self.qh[m]).norm_sqr());
        }
        ((d2 * grid.dx() / n as f64).sqrt(), s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub omega: f64,
    pub eps: f64,
    pub d0: f64,
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    /// `max d(t)/d(0)`, absent when `d(0) = 0`.
    pub max_ratio: Option<f64>,
    pub max_distance: f64,
    /// First recorded time with `d > 10·d(0)`.
    pub first_exceed_10x: Option<f64>,
}

/// Evolves `(1+ε)(φ_ω, ψ_ω)` and records the orbital H¹ distance to the wave.
pub fn instability_experiment(
    params: &ModelParams,
    omega: f64,
    eps: f64,
    grid: Arc<Grid>,
    opts: &EvolveOptions,
) -> Result<InstabilityReport> {
    require_focusing(params)?;
    if !(0.0..=0.05).contains(&eps) {
        return Err(Error::InvalidOptions(format!("eps must lie in [0, 0.05], got {eps}")));
    }
    let set = maximize_f(params, 1024)?;
    let gs = build_ground_state(params, omega, grid, &set.points[0])?;
    let metric = OrbitalDistance::new(&gs.pair);
    let pair0 = gs.pair.scaled(1.0 + eps);
    let traj = evolve_observed(params, &pair0, opts, |_, pair| Some(metric.distance(pair).0))?;
    let d0 = traj.samples[0].d.unwrap_or(0.0);
    let ds: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.d.unwrap_or(0.0))).collect();
    let max_distance = ds.iter().map(|x| x.1).fold(0.0, f64::max);
    let max_ratio = (d0 > 0.0).then(|| max_distance / d0);
    let first_exceed_10x = if d0 > 0.0 { ds.iter().find(|x| x.1 > 10.0 * d0).map(|x| x.0) } else { None };
    Ok(InstabilityReport {
        omega,
        eps,
        d0,
        samples: traj.samples,
        outcome: traj.outcome,
        max_ratio,
        max_distance,
        first_exceed_10x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fam2() -> ModelParams {
        ModelParams::focusing(2, 1.0, 4.0, 1.0, 1.0).unwrap()
    }

    fn gs(params: &ModelParams, n: usize, length: f64) -> GroundStateProfile {
        let set = maximize_f(params, 1024).unwrap();
        build_ground_state(params, 1.0, Grid::new(n, length).unwrap(), &set.points[0]).unwrap()
    }

    #[test]
    fn options_validation() {
        assert!(EvolveOptions::new(0.0, 1.0).validate().is_err());
        assert!(EvolveOptions::new(1e-3, -1.0).validate().is_err());
        assert!(EvolveOptions { dealias: 0.0, ..EvolveOptions::new(1e-3, 1.0) }.validate().is_err());
        assert!(EvolveOptions { filter_order: Some(5), ..EvolveOptions::new(1e-3, 1.0) }.validate().is_err());
        assert!(EvolveOptions { filter_order: Some(36), ..EvolveOptions::new(1e-3, 1.0) }.validate().is_ok());
        assert_eq!(EvolveOptions::new(1e-3, 1.0).steps(), 1000);
    }

    #[test]
    fn etd_coefficients_limit() {
        // at z → 0: Q → h/2, f1 = f3 → h/6, f2 → h/6
        let h = 0.1;
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let q = contour_mean(z, h, |w| ((w * 0.5).exp() - one) / w);
        let f2 = contour_mean(z, h, |w| (2.0 + w + w.exp() * (w - 2.0)) / (w * w * w));
        assert!((q.re - h / 2.0).abs() < 1e-14 && q.im.abs() < 1e-14);
        assert!((f2.re - h / 6.0).abs() < 1e-14);
    }

    #[test]
    fn zero_stays_zero() {
        let p = fam2();
        let z = FieldPair::zeros(Grid::new(64, 20.0).unwrap());
        let t = evolve(&p, &z, &EvolveOptions::new(1e-2, 0.5)).unwrap();
        assert!(t.final_pair.is_zero());
        assert!(t.samples.iter().all(|s| s.mass == 0.0 && s.g == 0.0));
    }

    #[test]
    fn linear_wave_is_exact() {
        // small amplitude: the dispersive flow e^{iξ³t} is applied exactly
        let p = ModelParams::focusing(1, 1.0, 0.0, 0.0, 0.0).unwrap();
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let eps = 1e-9;
        let pair0 = FieldPair::from_fn(grid.clone(), |x| (eps * (3.0 * x).sin(), 0.0)).unwrap();
        let t = evolve(&p, &pair0, &EvolveOptions { record_every: 100, ..EvolveOptions::new(1e-2, 1.0) }).unwrap();
        let exact = FieldPair::from_fn(grid, |x| (eps * (3.0 * (x + 9.0)).sin(), 0.0)).unwrap();
        assert!(t.final_pair.linf_distance(&exact) < 1e-12 * 1e3 * eps);
    }

    #[test]
    fn time_reversal() {
        let p = fam2();
        let g = gs(&p, 512, 20.0 * PI);
        let pair0 = g.pair.scaled(0.9);
        let opts = EvolveOptions::new(1e-3, 0.5);
        let mut fwd = Evolver::new(&p, &pair0, opts.dt, &opts).unwrap();
        for _ in 0..opts.steps() {
            fwd.step();
        }
        let mid = fwd.pair();
        let mut back = Evolver::new(&p, &mid, -opts.dt, &opts).unwrap();
        for _ in 0..opts.steps() {
            back.step();
        }
        let rel = back.pair().l2_distance(&pair0) / pair0.l2_sq().sqrt();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn translation_equivariance() {
        let p = fam2();
        let g = gs(&p, 512, 20.0 * PI);
        let pair0 = FieldPair::from_fn(g.grid().clone(), |x| {
            let (u, v) = g.closed_form(x);
            (u * (1.0 + 0.1 * x.sin()), 0.8 * v)
        })
        .unwrap();
        let opts = EvolveOptions { record_every: 50, ..EvolveOptions::new(1e-3, 0.2) };
        let mut a = Vec::new();
        evolve_observed(&p, &pair0, &opts, |_, w| {
            a.push(w.rolled(8));
            None
        })
        .unwrap();
        let mut i = 0;
        evolve_observed(&p, &pair0.rolled(8), &opts, |_, w| {
            assert!(w.linf_distance(&a[i]) < 1e-12);
            i += 1;
            None
        })
        .unwrap();
        assert_eq!(i, a.len());
    }

    #[test]
    fn defocusing_gradient_bound() {
        let p = ModelParams::new(2, 1.0, 4.0, 1.0, 1.0, Mu::Defocusing).unwrap();
        let grid = Grid::new(256, 40.0).unwrap();
        let pair0 = FieldPair::from_fn(grid, |x| ((-x * x).exp(), 0.5 * (-(x - 1.0).powi(2)).exp())).unwrap();
        let e0 = functionals(&p, &pair0).energy;
        let t = evolve(&p, &pair0, &EvolveOptions { record_every: 5, ..EvolveOptions::new(1e-3, 1.0) }).unwrap();
        assert!(t.samples.iter().all(|s| s.g <= 2.0 * e0 * (1.0 + 1e-9)));
    }

    #[test]
    fn orbital_distance_recovers_shift() {
        let p = ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap();
        let g = gs(&p, 1024, 20.0 * PI);
        let metric = OrbitalDistance::new(&g.pair);
        for s in [0.0, 0.3337, -2.71, 5.0 * g.grid().dx()] {
            let (d, shift) = metric.distance(&g.pair.translated(s));
            assert!(d < 1e-9, "s={s} d={d}");
            assert!((shift - s).abs() < 1e-9);
        }
        let (d, _) = metric.distance(&g.pair.scaled(1.01));
        let expect = 0.01 * g.pair.h1_sq().sqrt();
        assert!((d - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn gwp_k1_is_informational() {
        let p = ModelParams::focusing(1, 1.0, 0.0, 0.0, 0.0).unwrap();
        let g = gs(&p, 256, 20.0 * PI);
        assert!(matches!(gwp_thresholds(&p, &g.pair, &g), Err(Error::NoThresholdNeeded(1))));
    }

    #[test]
    fn threshold_formulations_agree() {
        let p = ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap();
        let g = gs(&p, 1024, 20.0 * PI);
        let sweep = gwp_equivalence_sweep(&p, &g, 40, 7).unwrap();
        assert_eq!(sweep.hip2_mismatches, 0);
        assert_eq!(sweep.hip1_mismatches, 0, "{sweep:?}");
        assert!(sweep.below > 0 && sweep.above > 0);
    }

    #[test]
    fn gwp_boundary_at_ground_state() {
        let p = ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap();
        let g = gs(&p, 2048, 20.0 * PI);
        let th = gwp_thresholds(&p, &g.pair, &g).unwrap();
        assert!(!th.hip2_holds && th.hip2_boundary);
        let half = gwp_thresholds(&p, &g.pair.scaled(0.5), &g).unwrap();
        assert!(half.hip1_holds && half.hip2_holds && half.g0_below_gamma && half.a_below_trap_level);
        let (a, b) = (half.gamma_trap.unwrap(), half.gamma_closed_form.unwrap());
        assert!((a - b).abs() < 1e-9 * b);
    }
}
