//! Surface energy densities `gamma(p1, p2, -1)` for the graph setting:
//! evaluation, gradient in `p`, Hessian in `p` and Wulff shape sampling.
//!
//! Three densities are built in: the isotropic area integrand
//! `sqrt(1 + |p|^2)`, a quadratic form `sqrt(1 + p^T G p)` with symmetric
//! positive definite `G`, and the regularised 1-norm-like density
//! `sum_i sqrt(P_i^2 + eps * |P|^2)` over the full vector `P = (p1, p2, -1)`.
//! All derivative formulas are closed form; finite differences appear only
//! in test oracles.

use crate::error::{Error, Result};

/// Slope argument of the energy density; the third component of the full
/// vector is fixed at -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientVec {
    pub p1: f64,
    pub p2: f64,
}

impl GradientVec {
    pub fn new(p1: f64, p2: f64) -> GradientVec {
        GradientVec { p1, p2 }
    }

    pub fn norm_sq(&self) -> f64 {
        self.p1 * self.p1 + self.p2 * self.p2
    }
}

/// Symmetric 2x2 matrix of second partials of `gamma` in `(p1, p2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian2 {
    pub e11: f64,
    pub e12: f64,
    pub e21: f64,
    pub e22: f64,
}

impl Hessian2 {
    pub fn identity() -> Hessian2 {
        Hessian2 {
            e11: 1.0,
            e12: 0.0,
            e21: 0.0,
            e22: 1.0,
        }
    }

    /// Matrix-vector product.
    #[inline]
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.e11 * v.0 + self.e12 * v.1,
            self.e21 * v.0 + self.e22 * v.1,
        )
    }

    /// Smaller eigenvalue of the symmetrised matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let s = 0.5 * (self.e12 + self.e21);
        let tr = self.e11 + self.e22;
        let disc = (0.5 * (self.e11 - self.e22)).powi(2) + s * s;
        0.5 * tr - disc.sqrt()
    }
}

/// Evaluator bundle for one surface energy density.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceEnergy {
    /// `gamma = sqrt(1 + |p|^2)`, the isotropic problem.
    Isotropic,
    /// `gamma = sqrt(1 + p^T G p)` with `G` symmetric positive definite.
    QuadraticForm { g11: f64, g12: f64, g22: f64 },
    /// `gamma = sum_{i=1..3} sqrt(P_i^2 + eps_abs * |P|^2)`, `P = (p, -1)`.
    RegularizedAbs { eps_abs: f64 },
}

impl SurfaceEnergy {
    pub fn isotropic() -> SurfaceEnergy {
        SurfaceEnergy::Isotropic
    }

    /// Checks positive definiteness (both eigenvalues > 0) at construction.
    pub fn quadratic_form(g11: f64, g12: f64, g22: f64) -> Result<SurfaceEnergy> {
        let det = g11 * g22 - g12 * g12;
        if !(g11 > 0.0 && det > 0.0) || !(g11.is_finite() && g12.is_finite() && g22.is_finite()) {
            return Err(Error::Contract(format!(
                "quadratic form matrix [[{g11}, {g12}], [{g12}, {g22}]] is not symmetric positive definite"
            )));
        }
        Ok(SurfaceEnergy::QuadraticForm { g11, g12, g22 })
    }

    pub fn regularized_abs(eps_abs: f64) -> Result<SurfaceEnergy> {
        if !(eps_abs > 0.0 && eps_abs.is_finite()) {
            return Err(Error::Contract(format!(
                "eps_abs must be positive, got {eps_abs}"
            )));
        }
        Ok(SurfaceEnergy::RegularizedAbs { eps_abs })
    }

    /// `gamma(p1, p2, -1)`.
    #[inline]
    pub fn gamma(&self, p: GradientVec) -> f64 {
        match *self {
            SurfaceEnergy::Isotropic => (1.0 + p.norm_sq()).sqrt(),
            SurfaceEnergy::QuadraticForm { g11, g12, g22 } => {
                let q = g11 * p.p1 * p.p1 + 2.0 * g12 * p.p1 * p.p2 + g22 * p.p2 * p.p2;
                (1.0 + q).sqrt()
            }
            SurfaceEnergy::RegularizedAbs { eps_abs } => {
                gamma_abs_full(eps_abs, [p.p1, p.p2, -1.0])
            }
        }
    }

    /// 1-homogeneous evaluation on a full 3-vector, used by the homogeneity
    /// property and by Wulff shape sampling.
    pub fn gamma_full(&self, pv: [f64; 3]) -> f64 {
        let [q1, q2, q3] = pv;
        match *self {
            SurfaceEnergy::Isotropic => (q1 * q1 + q2 * q2 + q3 * q3).sqrt(),
            SurfaceEnergy::QuadraticForm { g11, g12, g22 } => {
                let q = g11 * q1 * q1 + 2.0 * g12 * q1 * q2 + g22 * q2 * q2;
                (q3 * q3 + q).sqrt()
            }
            SurfaceEnergy::RegularizedAbs { eps_abs } => gamma_abs_full(eps_abs, pv),
        }
    }

    /// `(d gamma / d p1, d gamma / d p2)` at `(p1, p2, -1)`.
    #[inline]
    pub fn grad_p(&self, p: GradientVec) -> (f64, f64) {
        match *self {
            SurfaceEnergy::Isotropic => {
                let q = (1.0 + p.norm_sq()).sqrt();
                (p.p1 / q, p.p2 / q)
            }
            SurfaceEnergy::QuadraticForm { g11, g12, g22 } => {
                let gp1 = g11 * p.p1 + g12 * p.p2;
                let gp2 = g12 * p.p1 + g22 * p.p2;
                let gam = (1.0 + gp1 * p.p1 + gp2 * p.p2).sqrt();
                (gp1 / gam, gp2 / gam)
            }
            SurfaceEnergy::RegularizedAbs { eps_abs } => {
                let pv = [p.p1, p.p2, -1.0];
                let s = pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2];
                let mut g = [0.0f64; 2];
                for j in 0..3 {
                    let f = (pv[j] * pv[j] + eps_abs * s).sqrt();
                    for (i, gi) in g.iter_mut().enumerate() {
                        let a = if i == j { pv[i] } else { 0.0 } + eps_abs * pv[i];
                        *gi += a / f;
                    }
                }
                (g[0], g[1])
            }
        }
    }

    /// Second partials of `gamma` in `(p1, p2)` at `(p1, p2, -1)`.
    #[inline]
    pub fn hessian(&self, p: GradientVec) -> Hessian2 {
        match *self {
            SurfaceEnergy::Isotropic => {
                let q2 = 1.0 + p.norm_sq();
                let q = q2.sqrt();
                let q3 = q2 * q;
                Hessian2 {
                    e11: (1.0 - p.p1 * p.p1 / q2) / q,
                    e12: -p.p1 * p.p2 / q3,
                    e21: -p.p1 * p.p2 / q3,
                    e22: (1.0 - p.p2 * p.p2 / q2) / q,
                }
            }
            SurfaceEnergy::QuadraticForm { g11, g12, g22 } => {
                let gp1 = g11 * p.p1 + g12 * p.p2;
                let gp2 = g12 * p.p1 + g22 * p.p2;
                let gam = (1.0 + gp1 * p.p1 + gp2 * p.p2).sqrt();
                let gam3 = gam * gam * gam;
                Hessian2 {
                    e11: g11 / gam - gp1 * gp1 / gam3,
                    e12: g12 / gam - gp1 * gp2 / gam3,
                    e21: g12 / gam - gp2 * gp1 / gam3,
                    e22: g22 / gam - gp2 * gp2 / gam3,
                }
            }
            SurfaceEnergy::RegularizedAbs { eps_abs } => {
                // gamma = sum_j f_j, f_j = sqrt(P_j^2 + eps*|P|^2):
                // d2 f_j / dp_i dp_l
                //   = (delta_ij delta_lj + eps delta_il)/f_j - a_j^i a_j^l / f_j^3
                // with a_j^i = delta_ij P_j + eps p_i.
                let pv = [p.p1, p.p2, -1.0];
                let s = pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2];
                let mut h = [[0.0f64; 2]; 2];
                for j in 0..3 {
                    let f = (pv[j] * pv[j] + eps_abs * s).sqrt();
                    let f3 = f * f * f;
                    let a = [
                        if j == 0 { pv[0] } else { 0.0 } + eps_abs * pv[0],
                        if j == 1 { pv[1] } else { 0.0 } + eps_abs * pv[1],
                    ];
                    for i in 0..2 {
                        for l in 0..2 {
                            let lin = if i == j && l == j { 1.0 } else { 0.0 }
                                + if i == l { eps_abs } else { 0.0 };
                            h[i][l] += lin / f - a[i] * a[l] / f3;
                        }
                    }
                }
                Hessian2 {
                    e11: h[0][0],
                    e12: h[0][1],
                    e21: h[1][0],
                    e22: h[1][1],
                }
            }
        }
    }

    /// Planar cross-section of the Wulff shape through the `q3 = 0` plane,
    /// sampled as a closed polyline ordered by angle. For each ray direction
    /// `theta_k = 2 pi k / n_samples` the boundary point is the radial
    /// intersection with all sampled support half planes
    /// `{x : x . q <= gamma(q)}`.
    pub fn wulff_boundary(&self, n_samples: usize) -> Result<Vec<(f64, f64)>> {
        if n_samples < 8 {
            return Err(Error::Contract(format!(
                "wulff_boundary needs n_samples >= 8, got {n_samples}"
            )));
        }
        let dirs: Vec<(f64, f64)> = (0..n_samples)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
                (th.cos(), th.sin())
            })
            .collect();
        let support: Vec<f64> = dirs
            .iter()
            .map(|&(q1, q2)| self.gamma_full([q1, q2, 0.0]))
            .collect();
        Ok(dirs
            .iter()
            .map(|&(r1, r2)| {
                let mut t = f64::INFINITY;
                for (&(q1, q2), &s) in dirs.iter().zip(&support) {
                    let proj = r1 * q1 + r2 * q2;
                    if proj > 0.0 {
                        t = t.min(s / proj);
                    }
                }
                (t * r1, t * r2)
            })
            .collect())
    }
}

fn gamma_abs_full(eps_abs: f64, pv: [f64; 3]) -> f64 {
    let s = pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2];
    pv.iter().map(|&pi| (pi * pi + eps_abs * s).sqrt()).sum()
}
