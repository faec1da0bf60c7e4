use serde::Serialize;

use crate::error::{Error, Result};

use super::{FieldPair, ModelParams};

/// Conserved and variational functionals of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalRecord {
    /// `½‖(u,v)‖²`.
    pub mass: f64,
    /// `½‖∂ₓ(u,v)‖² − μP`.
    pub energy: f64,
    /// `∫H(u,v)`.
    pub p: f64,
    /// `(2k+2)P`.
    pub p_tilde: f64,
    /// `‖(u,v)‖²_{H¹}`.
    pub s: f64,
    /// `S/2 − μP`.
    pub i_action: f64,
    /// `‖·‖^{k+2}‖∂ₓ·‖^k/(2P)`, only when the pair lies in the cone.
    pub j_quotient: Option<f64>,
    pub l2_sq: f64,
    pub grad_sq: f64,
}

/// Membership threshold for `P > 0`.
pub fn p_tolerance(pair: &FieldPair) -> f64 {
    1e-12 * (1.0 + pair.l2_sq())
}

fn potential(params: &ModelParams, pair: &FieldPair) -> f64 {
    pair.grid().integrate(&params.h_fields(pair.u(), pair.v()))
}

fn weinstein(params: &ModelParams, l2_sq: f64, grad_sq: f64, p: f64) -> f64 {
    let k = params.kf();
    l2_sq.sqrt().powf(k + 2.0) * grad_sq.sqrt().powf(k) / (2.0 * p)
}

pub fn functionals(params: &ModelParams, pair: &FieldPair) -> FunctionalRecord {
    let mu = params.mu.sign();
    let l2_sq = pair.l2_sq();
    let grad_sq = pair.grad_sq();
    let p = potential(params, pair);
    let s = l2_sq + grad_sq;
    let j_quotient = (p > p_tolerance(pair)).then(|| weinstein(params, l2_sq, grad_sq, p));
    FunctionalRecord {
        mass: 0.5 * l2_sq,
        energy: 0.5 * grad_sq - mu * p,
        p,
        p_tilde: params.degree() as f64 * p,
        s,
        i_action: 0.5 * s - mu * p,
        j_quotient,
        l2_sq,
        grad_sq,
    }
}

/// The Weinstein-type quotient J, refusing pairs outside the cone.
pub fn j_quotient(params: &ModelParams, pair: &FieldPair) -> Result<f64> {
    let rec = functionals(params, pair);
    rec.j_quotient.ok_or(Error::NotInCone { p: rec.p, threshold: p_tolerance(pair) })
}

/// Scaling `ℓ` that places `ℓ·(u,v)` on the Nehari manifold `S = P̃`.
pub fn nehari_scale(params: &ModelParams, pair: &FieldPair) -> Result<f64> {
    let rec = functionals(params, pair);
    let threshold = p_tolerance(pair);
    if rec.p <= threshold {
        return Err(Error::NotInCone { p: rec.p, threshold });
    }
    Ok((rec.s / rec.p_tilde).powf(1.0 / (2.0 * params.kf())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GnCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Gagliardo–Nirenberg bound `2P(|u|,|v|) ≤ K‖·‖^{k+2}‖∂ₓ·‖^k`.
pub fn gn_check(params: &ModelParams, pair: &FieldPair, kopt: f64) -> GnCheck {
    let k = params.kf();
    let lhs = 2.0 * potential(params, &pair.abs());
    let rhs = kopt * pair.l2_sq().sqrt().powf(k + 2.0) * pair.grad_sq().sqrt().powf(k);
    GnCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-8) }
}
