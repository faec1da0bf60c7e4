//! Maximization of `F = (2k+2)H` over the quarter unit circle and the
//! closed-form regime tables for the symmetric parameter families.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

const TIE_BAND: f64 = 1e-9;
const MERGE_RADIUS: f64 = 1e-6;
const GOLDEN_TOL: f64 = 1e-12;

/// A point `(cos θ, sin θ)` of the quarter circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionPoint {
    pub x0: f64,
    pub y0: f64,
    pub theta: f64,
    pub f_value: f64,
    pub lagrange_residual: f64,
}

impl DirectionPoint {
    pub fn from_theta(params: &ModelParams, theta: f64) -> DirectionPoint {
        let (x0, y0) = if theta == 0.0 {
            (1.0, 0.0)
        } else if theta == FRAC_PI_2 {
            (0.0, 1.0)
        } else if theta == FRAC_PI_4 {
            (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
        } else {
            (theta.cos(), theta.sin())
        };
        Self::build(params, x0, y0, theta)
    }

    /// Normalizes a nonzero vector of the closed first quadrant.
    pub fn from_xy(params: &ModelParams, x: f64, y: f64) -> Result<DirectionPoint> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 || (x == 0.0 && y == 0.0) {
            return Err(Error::InvalidParams(format!(
                "direction ({x}, {y}) is not a nonzero point of the first quadrant"
            )));
        }
        let r = x.hypot(y);
        let (x0, y0) = if x == y { (FRAC_1_SQRT_2, FRAC_1_SQRT_2) } else { (x / r, y / r) };
        Ok(Self::build(params, x0, y0, y0.atan2(x0)))
    }

    fn build(params: &ModelParams, x0: f64, y0: f64, theta: f64) -> DirectionPoint {
        let mut p = DirectionPoint { x0, y0, theta, f_value: params.big_f(x0, y0), lagrange_residual: 0.0 };
        p.lagrange_residual = lagrange_residual(params, &p);
        p
    }
}

/// The numerical maximizer set of F.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizerSet {
    pub points: Vec<DirectionPoint>,
    pub f_max: f64,
    pub multiplicity: usize,
}

/// Residual of the stationarity system with multiplier `(k+1)F`.
pub fn lagrange_residual(params: &ModelParams, point: &DirectionPoint) -> f64 {
    let (x0, y0) = (point.x0, point.y0);
    let k1 = params.kf() + 1.0;
    let (f, g) = params.fg(x0, y0);
    let theta_l = k1 * params.big_f(x0, y0);
    (k1 * f - theta_l * x0).abs().max((k1 * g - theta_l * y0).abs())
}

fn f_theta(params: &ModelParams, theta: f64) -> f64 {
    params.big_f(theta.cos(), theta.sin())
}

/// `(dF/dθ, d²F/dθ²)`.
fn f_theta_derivs(params: &ModelParams, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let deg = params.degree() as f64;
    let (f, g) = params.fg(c, s);
    let h = params.hessian(c, s);
    let f_t = -h[0][0] * s + h[0][1] * c;
    let g_t = -h[1][0] * s + h[1][1] * c;
    let d1 = deg * (-f * s + g * c);
    let d2 = deg * (-f_t * s - f * c + g_t * c - g * s);
    (d1, d2)
}

fn golden_max(params: &ModelParams, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f_theta(params, x1);
    let mut f2 = f_theta(params, x2);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f_theta(params, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f_theta(params, x1);
        }
    }
    0.5 * (lo + hi)
}

/// Newton steps on `dF/dθ = 0`, kept only while they stay in the bracket.
fn polish(params: &ModelParams, theta: f64, lo: f64, hi: f64) -> f64 {
    let mut t = theta;
    for _ in 0..8 {
        let (d1, d2) = f_theta_derivs(params, t);
        if d2 >= 0.0 || d1 == 0.0 {
            break;
        }
        let next = t - d1 / d2;
        if !(lo..=hi).contains(&next) {
            break;
        }
        if (next - t).abs() < 1e-16 {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// Dense θ-scan with golden-section refinement of every local-maximum bracket.
pub fn maximize_f(params: &ModelParams, scan_points: usize) -> Result<MaximizerSet> {
    if scan_points < 256 {
        return Err(Error::InvalidOptions(format!("scan_points must be >= 256, got {scan_points}")));
    }
    let step = FRAC_PI_2 / scan_points as f64;
    let thetas: Vec<f64> = (0..=scan_points)
        .map(|j| if j == scan_points { FRAC_PI_2 } else { j as f64 * step })
        .collect();
    let values: Vec<f64> = thetas.iter().map(|&t| f_theta(params, t)).collect();

    let mut candidates: Vec<(f64, f64, bool)> = vec![
        (0.0, values[0], true),
        (FRAC_PI_2, values[scan_points], true),
    ];
    if params.is_swap_symmetric() {
        candidates.push((FRAC_PI_4, f_theta(params, FRAC_PI_4), true));
    }
    for j in 0..=scan_points {
        let left = if j > 0 { values[j - 1] } else { f64::NEG_INFINITY };
        let right = if j < scan_points { values[j + 1] } else { f64::NEG_INFINITY };
        if values[j] >= left && values[j] >= right {
            let lo = thetas[j.saturating_sub(1)];
            let hi = thetas[(j + 1).min(scan_points)];
            let t = polish(params, golden_max(params, lo, hi), lo, hi);
            candidates.push((t, f_theta(params, t), false));
        }
    }

    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let band = TIE_BAND * (1.0 + best.abs());
    let mut kept: Vec<(f64, f64, bool)> = candidates.into_iter().filter(|c| c.1 >= best - band).collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut clusters: Vec<(f64, f64, bool)> = Vec::new();
    for c in kept {
        match clusters.last_mut() {
            Some(last) if (c.0 - last.0).abs() < MERGE_RADIUS => {
                // exact anchors win against refined points
                let replace = match (last.2, c.2) {
                    (true, false) => false,
                    (false, true) => true,
                    _ => c.1 > last.1,
                };
                if replace {
                    *last = c;
                }
            }
            _ => clusters.push(c),
        }
    }

    let points: Vec<DirectionPoint> = clusters.iter().map(|c| DirectionPoint::from_theta(params, c.0)).collect();
    let f_max = points.iter().map(|p| p.f_value).fold(f64::NEG_INFINITY, f64::max);
    Ok(MaximizerSet { multiplicity: points.len(), points, f_max })
}

/// Regime of the closed-form parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Axes,
    AxesAndDiagonal,
    Diagonal,
    UniqueDiagonalK2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeClassification {
    pub case: Regime,
    pub predicted_directions: Vec<(f64, f64)>,
    /// `a(2^k − 1 − 2γ(k+1)/k)` for the `k > 2` family.
    pub threshold: Option<f64>,
    pub gamma: f64,
}

/// Family membership: returns `γ = c/a` when the parameters are covered.
fn family_gamma(params: &ModelParams) -> Result<f64> {
    let ModelParams { k, a, b, c, d, .. } = *params;
    if k == 2 {
        if a > 0.0 && b > 0.0 && c == a && d == a {
            return Ok(1.0);
        }
        return Err(Error::Unclassified("k = 2 requires a = c = d > 0 and b > 0".into()));
    }
    if k < 2 {
        return Err(Error::Unclassified(format!("k = {k} is outside both families")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Unclassified("requires a > 0 and b > 0".into()));
    }
    if c != d {
        return Err(Error::Unclassified("requires c = d".into()));
    }
    let gamma = c / a;
    if gamma > 0.0 {
        if k % 2 == 1 {
            return Err(Error::Unclassified(format!("gamma > 0 is only covered for even k (k = {k})")));
        }
        let bound = 2f64.powi(k as i32 - 1) - k as f64 / 2.0;
        if gamma >= bound {
            return Err(Error::Unclassified(format!("gamma = {gamma} must be below {bound}")));
        }
    }
    Ok(gamma)
}

pub fn classify_regime(params: &ModelParams) -> Result<RegimeClassification> {
    let gamma = family_gamma(params)?;
    let diag = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    if params.k == 2 {
        return Ok(RegimeClassification {
            case: Regime::UniqueDiagonalK2,
            predicted_directions: vec![diag],
            threshold: None,
            gamma,
        });
    }
    let k = params.kf();
    let t = params.a * (2f64.powi(params.k as i32) - 1.0 - 2.0 * gamma * (k + 1.0) / k);
    let b = params.b;
    let (case, predicted_directions) = if (t - b).abs() <= 1e-12 * t.abs().max(b) {
        (Regime::AxesAndDiagonal, vec![(1.0, 0.0), diag, (0.0, 1.0)])
    } else if t > b {
        (Regime::Axes, vec![(1.0, 0.0), (0.0, 1.0)])
    } else {
        (Regime::Diagonal, vec![diag])
    };
    Ok(RegimeClassification { case, predicted_directions, threshold: Some(t), gamma })
}

fn interior_poly(params: &ModelParams, gamma: f64, r: f64) -> f64 {
    let k = params.k as i32;
    let p: f64 = (0..k).map(|j| r.powi(2 * j)).sum();
    params.a * p - params.b * r.powi(k - 1) - params.a * gamma * (r * r + 1.0) * r.powi(k - 2)
}

/// Positive roots `r ≠ 1` of the interior critical-point equation.
pub fn interior_roots(params: &ModelParams) -> Result<Vec<f64>> {
    let gamma = family_gamma(params)?;
    let brackets = 10_000;
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let rs: Vec<f64> = (0..=brackets)
        .map(|j| (lo + (hi - lo) * j as f64 / brackets as f64).exp())
        .collect();
    let q = |r: f64| interior_poly(params, gamma, r);
    let mut roots = Vec::new();
    let mut prev = q(rs[0]);
    for j in 1..rs.len() {
        let cur = q(rs[j]);
        if prev == 0.0 {
            roots.push(rs[j - 1]);
        } else if prev * cur < 0.0 {
            let (mut a, mut b) = (rs[j - 1], rs[j]);
            let mut qa = prev;
            while b - a > 1e-12 * b.max(1.0) {
                let m = 0.5 * (a + b);
                let qm = q(m);
                if qm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if qa * qm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    qa = qm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = cur;
    }
    roots.retain(|r| (r - 1.0).abs() > 1e-9);
    Ok(roots)
}

/// The critical direction `(r, 1)/√(1+r²)` associated with a root.
pub fn root_direction(params: &ModelParams, r: f64) -> DirectionPoint {
    let s = (1.0 + r * r).sqrt();
    DirectionPoint::from_theta(params, (1.0 / s).atan2(r / s))
}
