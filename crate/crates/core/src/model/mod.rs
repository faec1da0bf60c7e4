//! Hamiltonian density, field containers and the variational functionals.

mod field;
mod functionals;
mod grid;

pub use field::FieldPair;
pub use functionals::{functionals, gn_check, j_quotient, nehari_scale, p_tolerance, FunctionalRecord, GnCheck};
pub use grid::Grid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Mu {
    Focusing,
    Defocusing,
}

impl Mu {
    pub fn sign(self) -> f64 {
        match self {
            Mu::Focusing => 1.0,
            Mu::Defocusing => -1.0,
        }
    }
}

impl TryFrom<i8> for Mu {
    type Error = String;

    fn try_from(value: i8) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(Mu::Focusing),
            -1 => Ok(Mu::Defocusing),
            other => Err(format!("mu must be +1 or -1, got {other}")),
        }
    }
}

impl From<Mu> for i8 {
    fn from(mu: Mu) -> i8 {
        match mu {
            Mu::Focusing => 1,
            Mu::Defocusing => -1,
        }
    }
}

/// One term `coef * x^pu * y^pv` of the density.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Monomial {
    pub coef: f64,
    pub pu: i32,
    pub pv: i32,
}

impl Monomial {
    #[inline]
    fn value(&self, x: f64, y: f64) -> f64 {
        self.coef * x.powi(self.pu) * y.powi(self.pv)
    }

    #[inline]
    fn du(&self, x: f64, y: f64) -> f64 {
        if self.pu == 0 {
            0.0
        } else {
            self.coef * self.pu as f64 * x.powi(self.pu - 1) * y.powi(self.pv)
        }
    }

    #[inline]
    fn dv(&self, x: f64, y: f64) -> f64 {
        if self.pv == 0 {
            0.0
        } else {
            self.coef * self.pv as f64 * x.powi(self.pu) * y.powi(self.pv - 1)
        }
    }
}

/// Physical constants of the coupled system.
///
/// The density is
/// `H = a/(2k+2)(u^{2k+2}+v^{2k+2}) + b/(k+1)(uv)^{k+1} + c/k u^{k+2}v^k + d/k u^k v^{k+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mu: Mu,
}

/// Density and its first derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub h: f64,
    pub f: f64,
    pub g: f64,
    /// `(2k+2) H`.
    pub big_f: f64,
}

impl ModelParams {
    pub fn new(k: u32, a: f64, b: f64, c: f64, d: f64, mu: Mu) -> Result<Self> {
        let p = ModelParams { k, a, b, c, d, mu };
        p.validate()?;
        Ok(p)
    }

    /// Focusing parameters, the common case.
    pub fn focusing(k: u32, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(k, a, b, c, d, Mu::Focusing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        if self.k > 32 {
            return Err(Error::InvalidParams(format!("k = {} is unreasonably large", self.k)));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.a == 0.0 && self.b == 0.0 && self.c == 0.0 && self.d == 0.0 {
            return Err(Error::InvalidParams("a, b, c, d are all zero".into()));
        }
        Ok(())
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// Homogeneity degree of H, `2k+2`.
    pub fn degree(&self) -> u32 {
        2 * self.k + 2
    }

    /// Stabilization exponent `(2k+1)/(2k)` of the Petviashvili iteration.
    pub fn petviashvili_gamma(&self) -> f64 {
        (2.0 * self.kf() + 1.0) / (2.0 * self.kf())
    }

    /// True when `c = d`, so that H is symmetric under `u <-> v`.
    pub fn is_swap_symmetric(&self) -> bool {
        self.c == self.d
    }

    pub(crate) fn monomials(&self) -> [Monomial; 5] {
        let k = self.k as i32;
        let kf = self.kf();
        let deg = 2 * k + 2;
        [
            Monomial { coef: self.a / deg as f64, pu: deg, pv: 0 },
            Monomial { coef: self.a / deg as f64, pu: 0, pv: deg },
            Monomial { coef: self.b / (kf + 1.0), pu: k + 1, pv: k + 1 },
            Monomial { coef: self.c / kf, pu: k + 2, pv: k },
            Monomial { coef: self.d / kf, pu: k, pv: k + 2 },
        ]
    }

    pub fn h(&self, x: f64, y: f64) -> f64 {
        self.monomials().iter().map(|m| m.value(x, y)).sum()
    }

    /// `(H_u, H_v)`.
    pub fn fg(&self, x: f64, y: f64) -> (f64, f64) {
        self.monomials()
            .iter()
            .fold((0.0, 0.0), |(f, g), m| (f + m.du(x, y), g + m.dv(x, y)))
    }

    /// `F = (2k+2) H`.
    pub fn big_f(&self, x: f64, y: f64) -> f64 {
        self.degree() as f64 * self.h(x, y)
    }

    /// Second derivatives `[[H_uu, H_uv], [H_uv, H_vv]]`.
    pub fn hessian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for m in self.monomials() {
            let (pu, pv) = (m.pu as f64, m.pv as f64);
            if m.pu >= 2 {
                out[0][0] += m.coef * pu * (pu - 1.0) * x.powi(m.pu - 2) * y.powi(m.pv);
            }
            if m.pv >= 2 {
                out[1][1] += m.coef * pv * (pv - 1.0) * x.powi(m.pu) * y.powi(m.pv - 2);
            }
            if m.pu >= 1 && m.pv >= 1 {
                out[0][1] += m.coef * pu * pv * x.powi(m.pu - 1) * y.powi(m.pv - 1);
            }
        }
        out[1][0] = out[0][1];
        out
    }

    /// Pointwise nonlinearities on sampled fields.
    pub fn fg_fields(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ms = self.monomials();
        let mut f = vec![0.0; u.len()];
        let mut g = vec![0.0; u.len()];
        for j in 0..u.len() {
            let (x, y) = (u[j], v[j]);
            let mut fj = 0.0;
            let mut gj = 0.0;
            for m in &ms {
                if m.coef != 0.0 {
                    fj += m.du(x, y);
                    gj += m.dv(x, y);
                }
            }
            f[j] = fj;
            g[j] = gj;
        }
        (f, g)
    }

    pub fn h_fields(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        u.iter().zip(v).map(|(&x, &y)| self.h(x, y)).collect()
    }
}

/// Evaluates H, f, g and F at a single point.
pub fn eval_density(params: &ModelParams, x: f64, y: f64) -> Result<DensityValue> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite(format!("density evaluated at ({x}, {y})")));
    }
    let h = params.h(x, y);
    let (f, g) = params.fg(x, y);
    Ok(DensityValue {
        h,
        f,
        g,
        big_f: params.degree() as f64 * h,
    })
}
