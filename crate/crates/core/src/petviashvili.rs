//! Stabilized fixed-point solver for `−u'' + ωu = f(u,v)`, `−v'' + ωv = g(u,v)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::direction::maximize_f;
use crate::error::{Error, Result};
use crate::groundstate::{build_ground_state, GroundStateProfile};
use crate::model::{functionals, FieldPair, Grid, ModelParams};

#[derive(Debug, Clone)]
pub struct PetviashviliOptions {
    pub max_iter: usize,
    /// Stop once the successive-iterate L∞ difference drops below this.
    pub tol: f64,
    pub gamma_exp: f64,
    pub init: FieldPair,
}

impl PetviashviliOptions {
    /// Standard exponent `(2k+1)/(2k)`, `tol = 1e-12`, 500 iterations.
    pub fn new(params: &ModelParams, init: FieldPair) -> Self {
        PetviashviliOptions { max_iter: 500, tol: 1e-12, gamma_exp: params.petviashvili_gamma(), init }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOptions(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidOptions("max_iter must be >= 1".into()));
        }
        if !(self.gamma_exp > 1.0) {
            return Err(Error::InvalidOptions(format!("gamma_exp must exceed 1, got {}", self.gamma_exp)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PetviashviliOutcome {
    pub pair: FieldPair,
    pub iterations: usize,
    /// Stabilization factor of the first iterate.
    pub m_first: f64,
    /// Stabilization factor of the last iterate.
    pub m_last: f64,
    pub last_update: f64,
}

/// Seed `(x₀ sech x, y₀ sech x)` along a direction of the quarter circle.
pub fn sech_seed(grid: Arc<Grid>, x0: f64, y0: f64) -> Result<FieldPair> {
    FieldPair::from_fn(grid, |x| {
        let s = 1.0 / x.cosh();
        (x0 * s, y0 * s)
    })
}

fn spectral_inner(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum();
    s * grid.dx() / grid.n() as f64
}

pub fn solve_elliptic(
    params: &ModelParams,
    omega: f64,
    grid: Arc<Grid>,
    opts: &PetviashviliOptions,
) -> Result<PetviashviliOutcome> {
    opts.validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    if **opts.init.grid() != *grid {
        return Err(Error::GridMismatch("seed lives on a different grid".into()));
    }
    let seed_p = functionals(params, &opts.init).p;
    if opts.init.is_zero() || !(seed_p > 0.0) {
        return Err(Error::NotInCone { p: seed_p, threshold: 0.0 });
    }

    let symbol: Vec<f64> = grid.wavenumbers().iter().map(|k| omega + k * k).collect();
    let mut u = opts.init.u().to_vec();
    let mut v = opts.init.v().to_vec();
    let mut m_first = f64::NAN;
    let mut update = f64::INFINITY;

    for it in 1..=opts.max_iter {
        let uh = grid.forward(&u);
        let vh = grid.forward(&v);
        let (f, g) = params.fg_fields(&u, &v);
        let fh = grid.forward(&f);
        let gh = grid.forward(&g);

        let numer: f64 = uh
            .iter()
            .zip(&vh)
            .zip(&symbol)
            .map(|((a, b), s)| s * (a.norm_sqr() + b.norm_sqr()))
            .sum::<f64>()
            * grid.dx()
            / grid.n() as f64;
        let denom = spectral_inner(&grid, &uh, &fh) + spectral_inner(&grid, &vh, &gh);
        let m = numer / denom;
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::LeftCone(m));
        }
        if it == 1 {
            m_first = m;
        }
        let factor = m.powf(opts.gamma_exp);
        let next_uh: Vec<Complex64> = fh.iter().zip(&symbol).map(|(c, s)| c * (factor / s)).collect();
        let next_vh: Vec<Complex64> = gh.iter().zip(&symbol).map(|(c, s)| c * (factor / s)).collect();
        let nu = grid.inverse_real(&next_uh);
        let nv = grid.inverse_real(&next_vh);

        update = nu
            .iter()
            .zip(&u)
            .chain(nv.iter().zip(&v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let amplitude = nu.iter().chain(&nv).map(|x| x.abs()).fold(0.0, f64::max);
        if !update.is_finite() {
            return Err(Error::LeftCone(m));
        }
        if amplitude < 1e-150 {
            return Err(Error::Collapsed(it));
        }
        u = nu;
        v = nv;
        if update < opts.tol {
            return Ok(PetviashviliOutcome {
                pair: FieldPair::new(grid, u, v)?,
                iterations: it,
                m_first,
                m_last: m,
                last_update: update,
            });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, last_update: update })
}

/// Position of the maximum of `u² + v²`, refined by a parabola through the
/// discrete peak and its neighbours.
pub fn peak_position(pair: &FieldPair) -> f64 {
    let grid = pair.grid();
    let n = grid.n();
    let w: Vec<f64> = pair.u().iter().zip(pair.v()).map(|(a, b)| a * a + b * b).collect();
    let j = (0..n).fold(0, |best, i| if w[i] > w[best] { i } else { best });
    let (ym, y0, yp) = (w[(j + n - 1) % n], w[j], w[(j + 1) % n]);
    let curv = ym - 2.0 * y0 + yp;
    let offset = if curv < 0.0 { 0.5 * (ym - yp) / curv } else { 0.0 };
    grid.x()[j] + offset * grid.dx()
}

/// Translates the pair so that its peak sits at `x = 0`.
pub fn peak_centered(pair: &FieldPair) -> FieldPair {
    pair.translated(-peak_position(pair))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    pub linf_distance: f64,
    pub i_gap: f64,
    pub iterations: usize,
    pub m_last: f64,
    pub i_numerical: f64,
    pub i_characterized: f64,
}

/// Compares the oracle with the characterized profile of the first maximizer.
pub fn cross_check(params: &ModelParams, omega: f64, grid: Arc<Grid>) -> Result<CrossCheck> {
    let set = maximize_f(params, 1024)?;
    let dir = set.points[0];
    let gs: GroundStateProfile = build_ground_state(params, omega, grid.clone(), &dir)?;
    let seed = sech_seed(grid.clone(), dir.x0, dir.y0)?;
    let out = solve_elliptic(params, omega, grid, &PetviashviliOptions::new(params, seed))?;
    Ok(compare(params, &out, &gs))
}

/// Peak-aligned comparison of an iteration result with a characterized profile.
pub fn compare(params: &ModelParams, out: &PetviashviliOutcome, gs: &GroundStateProfile) -> CrossCheck {
    let numerical = peak_centered(&out.pair);
    let characterized = peak_centered(&gs.pair);
    let i_numerical = functionals(params, &out.pair).i_action;
    let i_characterized = functionals(params, &gs.pair).i_action;
    CrossCheck {
        linf_distance: numerical.linf_distance(&characterized),
        i_gap: (i_numerical - i_characterized).abs(),
        iterations: out.iterations,
        m_last: out.m_last,
        i_numerical,
        i_characterized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{elliptic_residual, pohozaev_report};
    use std::f64::consts::PI;

    fn fam2() -> ModelParams {
        ModelParams::focusing(2, 1.0, 4.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn converges_to_diagonal_state() {
        let p = fam2();
        let grid = Grid::new(2048, 20.0 * PI).unwrap();
        let c = cross_check(&p, 1.0, grid).unwrap();
        assert!(c.linf_distance < 1e-8, "{c:?}");
        assert!(c.i_gap < 1e-8);
        assert!((c.m_last - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_state_is_a_fixed_point() {
        let p = fam2();
        let grid = Grid::new(2048, 20.0 * PI).unwrap();
        let set = maximize_f(&p, 1024).unwrap();
        let gs = build_ground_state(&p, 1.0, grid.clone(), &set.points[0]).unwrap();
        let opts = PetviashviliOptions { tol: 1e-10, ..PetviashviliOptions::new(&p, gs.pair.clone()) };
        let out = solve_elliptic(&p, 1.0, grid, &opts).unwrap();
        assert!(out.iterations <= 2);
        assert!((out.m_first - 1.0).abs() < 1e-10);
        assert!(elliptic_residual(&p, 1.0, &out.pair) < 10.0 * opts.tol);
        assert!(pohozaev_report(&p, &out.pair).max_residual() < 100.0 * opts.tol);
    }

    #[test]
    fn translation_equivariance() {
        let p = fam2();
        let grid = Grid::new(512, 20.0 * PI).unwrap();
        let seed = sech_seed(grid.clone(), 1.0, 0.8).unwrap();
        let base = solve_elliptic(&p, 1.0, grid.clone(), &PetviashviliOptions::new(&p, seed.clone())).unwrap();
        let moved = solve_elliptic(&p, 1.0, grid, &PetviashviliOptions::new(&p, seed.rolled(17))).unwrap();
        assert!(base.pair.rolled(17).linf_distance(&moved.pair) < 1e-12);
    }

    #[test]
    fn i_gap_is_translation_invariant() {
        let p = fam2();
        let grid = Grid::new(1024, 20.0 * PI).unwrap();
        let set = maximize_f(&p, 1024).unwrap();
        let gs = build_ground_state(&p, 1.0, grid.clone(), &set.points[0]).unwrap();
        let seed = sech_seed(grid.clone(), 1.0, 1.0).unwrap();
        let out = solve_elliptic(&p, 1.0, grid, &PetviashviliOptions::new(&p, seed)).unwrap();
        let a = compare(&p, &out, &gs);
        let moved = PetviashviliOutcome { pair: out.pair.rolled(17), ..out.clone() };
        let b = compare(&p, &moved, &gs);
        assert!((a.i_gap - b.i_gap).abs() < 1e-12);
        assert!(b.linf_distance < 1e-8);
    }

    #[test]
    fn axis_family_selects_a_branch() {
        let p = ModelParams::focusing(3, 1.0, 1.0, 0.0, 0.0).unwrap();
        let grid = Grid::new(2048, 20.0 * PI).unwrap();
        let seed = sech_seed(grid.clone(), 1.0, 0.9).unwrap();
        let out = solve_elliptic(&p, 1.0, grid, &PetviashviliOptions { max_iter: 3000, ..PetviashviliOptions::new(&p, seed) }).unwrap();
        assert!(elliptic_residual(&p, 1.0, &out.pair) < 1e-8);
        let umax = out.pair.u().iter().cloned().fold(0.0, f64::max);
        let vmax = out.pair.v().iter().cloned().fold(0.0, f64::max);
        // either one component has died out or the iterate sits on the diagonal
        assert!(vmax < 1e-8 * umax || umax < 1e-8 * vmax || (umax - vmax).abs() < 1e-8);
    }

    #[test]
    fn input_errors() {
        let p = fam2();
        let grid = Grid::new(256, 20.0 * PI).unwrap();
        let zero = FieldPair::zeros(grid.clone());
        assert!(matches!(
            solve_elliptic(&p, 1.0, grid.clone(), &PetviashviliOptions::new(&p, zero)),
            Err(Error::NotInCone { .. })
        ));
        let seed = sech_seed(grid.clone(), 1.0, 1.0).unwrap();
        let opts = PetviashviliOptions { max_iter: 2, ..PetviashviliOptions::new(&p, seed.clone()) };
        assert!(matches!(solve_elliptic(&p, 1.0, grid.clone(), &opts), Err(Error::NoConvergence { .. })));
        let bad = PetviashviliOptions { gamma_exp: 1.0, ..PetviashviliOptions::new(&p, seed) };
        assert!(solve_elliptic(&p, 1.0, grid, &bad).is_err());
    }
}
