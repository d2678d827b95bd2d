//! Manufactured-solution machinery: the analytic field
//!
//! ```text
//! zeta(x, y, t) = cos(pi t) r^(-2n) (x^n - r^n)(y^n - r^n) exp(-sigma (x^2 + y^2))
//! ```
//!
//! its derivatives, the forcing term that turns it into the exact solution
//! of the forced flow, discrete space-time norms and the experimental order
//! of convergence.
//!
//! The forcing is
//!
//! ```text
//! F(zeta) = Q(zeta) div( E_gamma grad w_gamma(zeta)
//!           - 1/2 w_gamma^2 / Q^3 grad zeta ) + d zeta / dt
//! ```
//!
//! where `w_gamma(zeta) = Q H_gamma` is pointwise evaluable in closed form
//! through the chain rule; the remaining outer divergence (and the gradient
//! of `w_gamma` inside the flux) are central differences with a step
//! `delta` far below the mesh size, keeping the evaluation error
//! `O(delta^2)` two orders below the spatial truncation error.

use crate::anisotropy::{GradientVec, SurfaceEnergy};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::spatial::Forcing;

/// Parameters of the manufactured field on the centred square
/// `[-r, r]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaParams {
    r: f64,
    n: u32,
    sigma: f64,
}

impl ZetaParams {
    /// `n` must be even so the field vanishes on the whole boundary.
    pub fn new(r: f64, n: u32, sigma: f64) -> Result<ZetaParams> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Contract(format!(
                "zeta half-width r must be positive, got {r}"
            )));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "zeta exponent n must be a positive even integer, got {n}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Contract(format!(
                "zeta decay rate sigma must be positive, got {sigma}"
            )));
        }
        Ok(ZetaParams { r, n, sigma })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for ZetaParams {
    fn default() -> ZetaParams {
        ZetaParams {
            r: 4.0,
            n: 2,
            sigma: 1.0,
        }
    }
}

/// Time-independent factor of `zeta` and its derivatives at one point;
/// `zeta = cos(pi t) * s` and every spatial derivative scales the same way.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpatialSample {
    pub s: f64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub sxy: f64,
    pub syy: f64,
}

impl ZetaParams {
    /// Closed-form spatial factor and derivatives at `(x, y)`.
    pub fn spatial(&self, x: f64, y: f64) -> SpatialSample {
        let n = self.n as i32;
        let nf = self.n as f64;
        let sig = self.sigma;
        let c = self.r.powi(-2 * n);
        let rn = self.r.powi(n);

        let a = x.powi(n) - rn;
        let da = nf * x.powi(n - 1);
        let dda = nf * (nf - 1.0) * x.powi(n - 2);
        let b = y.powi(n) - rn;
        let db = nf * y.powi(n - 1);
        let ddb = nf * (nf - 1.0) * y.powi(n - 2);
        let e = (-sig * (x * x + y * y)).exp();

        let gx = da - 2.0 * sig * x * a;
        let gy = db - 2.0 * sig * y * b;
        SpatialSample {
            s: c * a * b * e,
            sx: c * b * e * gx,
            sy: c * a * e * gy,
            sxx: c * b * e * (dda - 4.0 * sig * x * da + (4.0 * sig * sig * x * x - 2.0 * sig) * a),
            sxy: c * e * gx * gy,
            syy: c * a * e * (ddb - 4.0 * sig * y * db + (4.0 * sig * sig * y * y - 2.0 * sig) * b),
        }
    }
}

/// `zeta(x, y, t)`.
pub fn zeta(p: &ZetaParams, x: f64, y: f64, t: f64) -> f64 {
    (std::f64::consts::PI * t).cos() * p.spatial(x, y).s
}

/// `d zeta / dt`.
pub fn zeta_dt(p: &ZetaParams, x: f64, y: f64, t: f64) -> f64 {
    let pi = std::f64::consts::PI;
    -pi * (pi * t).sin() * p.spatial(x, y).s
}

/// `grad zeta` at `(x, y, t)`.
pub fn zeta_grad(p: &ZetaParams, x: f64, y: f64, t: f64) -> (f64, f64) {
    let c = (std::f64::consts::PI * t).cos();
    let s = p.spatial(x, y);
    (c * s.sx, c * s.sy)
}

/// `w_gamma(zeta) = Q(zeta) H_gamma(zeta)` in closed form: the divergence
/// of `grad_p gamma (grad zeta, -1)` expands through the chain rule to the
/// Frobenius pairing of the gamma-Hessian with the zeta-Hessian.
pub fn w_of_zeta(energy: &SurfaceEnergy, p: &ZetaParams, x: f64, y: f64, t: f64) -> f64 {
    let c = (std::f64::consts::PI * t).cos();
    w_from_sample(energy, &p.spatial(x, y), c)
}

#[inline]
fn w_from_sample(energy: &SurfaceEnergy, s: &SpatialSample, c: f64) -> f64 {
    let zx = c * s.sx;
    let zy = c * s.sy;
    let q = (1.0 + zx * zx + zy * zy).sqrt();
    let e = energy.hessian(GradientVec::new(zx, zy));
    let h = e.e11 * c * s.sxx + (e.e12 + e.e21) * c * s.sxy + e.e22 * c * s.syy;
    q * h
}

/// Flux vector `E_gamma grad w - 1/2 w^2 / Q^3 grad zeta` at one point;
/// `grad w` by central differences with step `delta`.
#[inline]
fn flux_at(
    energy: &SurfaceEnergy,
    p: &ZetaParams,
    x: f64,
    y: f64,
    t: f64,
    delta: f64,
) -> (f64, f64) {
    let c = (std::f64::consts::PI * t).cos();
    let s = p.spatial(x, y);
    let zx = c * s.sx;
    let zy = c * s.sy;
    let q = (1.0 + zx * zx + zy * zy).sqrt();
    let wv = w_from_sample(energy, &s, c);
    let gw1 = (w_from_sample(energy, &p.spatial(x + delta, y), c)
        - w_from_sample(energy, &p.spatial(x - delta, y), c))
        / (2.0 * delta);
    let gw2 = (w_from_sample(energy, &p.spatial(x, y + delta), c)
        - w_from_sample(energy, &p.spatial(x, y - delta), c))
        / (2.0 * delta);
    let e = energy.hessian(GradientVec::new(zx, zy));
    let coef = 0.5 * wv * wv / (q * q * q);
    (
        e.e11 * gw1 + e.e12 * gw2 - coef * zx,
        e.e21 * gw1 + e.e22 * gw2 - coef * zy,
    )
}

/// Forcing term making `zeta` the exact solution of the forced flow.
/// `delta` is the differencing step of the outer divergence; evaluation
/// error is `O(delta^2)`.
pub fn forcing(energy: &SurfaceEnergy, p: &ZetaParams, x: f64, y: f64, t: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let c = (std::f64::consts::PI * t).cos();
    let s = p.spatial(x, y);
    let zx = c * s.sx;
    let zy = c * s.sy;
    let q = (1.0 + zx * zx + zy * zy).sqrt();
    let div = (flux_at(energy, p, x + delta, y, t, delta).0
        - flux_at(energy, p, x - delta, y, t, delta).0)
        / (2.0 * delta)
        + (flux_at(energy, p, x, y + delta, t, delta).1
            - flux_at(energy, p, x, y - delta, t, delta).1)
            / (2.0 * delta);
    q * div + zeta_dt(p, x, y, t)
}

// point layout of the per-node probe table
const PT_C: usize = 0;
const PT_E: usize = 1;
const PT_W: usize = 2;
const PT_N: usize = 3;
const PT_S: usize = 4;
const PT_E2: usize = 5;
const PT_W2: usize = 6;
const PT_N2: usize = 7;
const PT_S2: usize = 8;
const PT_NE: usize = 9;
const PT_SE: usize = 10;
const PT_NW: usize = 11;
const PT_SW: usize = 12;
const PT_COUNT: usize = 13;

/// Grid-aware forcing evaluator. The time dependence of `zeta` is a scalar
/// factor, so the spatial samples at all differencing probes of every
/// interior node can be computed once and reused at every stage time.
pub struct MmsForcing {
    grid: Grid,
    params: ZetaParams,
    energy: SurfaceEnergy,
    delta: f64,
    samples: Vec<[SpatialSample; PT_COUNT]>,
}

impl MmsForcing {
    /// Default differencing step `min(h1, h2) / 100`.
    pub fn new(grid: Grid, params: ZetaParams, energy: SurfaceEnergy) -> MmsForcing {
        let delta = grid.h1().min(grid.h2()) / 100.0;
        MmsForcing::with_delta(grid, params, energy, delta)
    }

    pub fn with_delta(
        grid: Grid,
        params: ZetaParams,
        energy: SurfaceEnergy,
        delta: f64,
    ) -> MmsForcing {
        assert!(delta > 0.0, "differencing step must be positive");
        let (n1, n2) = (grid.n1(), grid.n2());
        let d = delta;
        let offsets: [(f64, f64); PT_COUNT] = [
            (0.0, 0.0),
            (d, 0.0),
            (-d, 0.0),
            (0.0, d),
            (0.0, -d),
            (2.0 * d, 0.0),
            (-2.0 * d, 0.0),
            (0.0, 2.0 * d),
            (0.0, -2.0 * d),
            (d, d),
            (d, -d),
            (-d, d),
            (-d, -d),
        ];
        let mut samples = Vec::with_capacity((n1 - 1) * (n2 - 1));
        for j in 1..n2 {
            for i in 1..n1 {
                let (x, y) = (grid.x(i), grid.y(j));
                let mut node = [SpatialSample::default(); PT_COUNT];
                for (k, (dx, dy)) in offsets.iter().enumerate() {
                    node[k] = params.spatial(x + dx, y + dy);
                }
                samples.push(node);
            }
        }
        MmsForcing {
            grid,
            params,
            energy,
            delta,
            samples,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn params(&self) -> &ZetaParams {
        &self.params
    }
}

impl Forcing for MmsForcing {
    fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        forcing(&self.energy, &self.params, x, y, t, self.delta)
    }

    fn eval_node(&self, i: usize, j: usize, _x: f64, _y: f64, t: f64) -> f64 {
        debug_assert!(self.grid.is_interior(i, j));
        let node = &self.samples[(j - 1) * (self.grid.n1() - 1) + (i - 1)];
        let pi = std::f64::consts::PI;
        let c = (pi * t).cos();
        let d2 = 2.0 * self.delta;

        let mut w = [0.0f64; PT_COUNT];
        for (k, s) in node.iter().enumerate() {
            w[k] = w_from_sample(&self.energy, s, c);
        }
        let flux = |p: usize, gw1: f64, gw2: f64, comp2: bool| -> f64 {
            let s = &node[p];
            let zx = c * s.sx;
            let zy = c * s.sy;
            let q = (1.0 + zx * zx + zy * zy).sqrt();
            let e = self.energy.hessian(GradientVec::new(zx, zy));
            let coef = 0.5 * w[p] * w[p] / (q * q * q);
            if comp2 {
                e.e21 * gw1 + e.e22 * gw2 - coef * zy
            } else {
                e.e11 * gw1 + e.e12 * gw2 - coef * zx
            }
        };
        let fe = flux(
            PT_E,
            (w[PT_E2] - w[PT_C]) / d2,
            (w[PT_NE] - w[PT_SE]) / d2,
            false,
        );
        let fw = flux(
            PT_W,
            (w[PT_C] - w[PT_W2]) / d2,
            (w[PT_NW] - w[PT_SW]) / d2,
            false,
        );
        let fn_ = flux(
            PT_N,
            (w[PT_NE] - w[PT_NW]) / d2,
            (w[PT_N2] - w[PT_C]) / d2,
            true,
        );
        let fs = flux(
            PT_S,
            (w[PT_SE] - w[PT_SW]) / d2,
            (w[PT_C] - w[PT_S2]) / d2,
            true,
        );
        let div = (fe - fw) / d2 + (fn_ - fs) / d2;

        let sc = &node[PT_C];
        let zx = c * sc.sx;
        let zy = c * sc.sy;
        let q = (1.0 + zx * zx + zy * zy).sqrt();
        q * div - pi * (pi * t).sin() * sc.s
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub err_l1: f64,
    pub err_l2: f64,
    pub err_linf: f64,
}

/// Discrete space-time norms of `u^h - reference` over uniformly spaced
/// snapshots `t_k = t_0 + k tau`, `k = 0..M`:
///
/// ```text
/// L1   = sum_ijk tau |diff| h1 h2
/// L2   = (sum_ijk tau diff^2 h1 h2)^(1/2)
/// Linf = max |diff|
/// ```
///
/// summed over the full grid closure.
pub fn spacetime_norms(
    snapshots: &[(f64, GridFunction)],
    reference: impl Fn(f64, f64, f64) -> f64,
) -> Result<(f64, f64, f64)> {
    if snapshots.len() < 2 {
        return Err(Error::Contract(format!(
            "space-time norms need at least two snapshot levels, got {}",
            snapshots.len()
        )));
    }
    let tau = snapshots[1].0 - snapshots[0].0;
    if !(tau > 0.0) {
        return Err(Error::Contract("snapshot times must increase".into()));
    }
    for k in 1..snapshots.len() {
        let dt = snapshots[k].0 - snapshots[k - 1].0;
        if (dt - tau).abs() > 1e-9 * tau.max(1.0) {
            return Err(Error::Contract(format!(
                "snapshot spacing is not uniform: step {k} has dt = {dt:.6e}, expected tau = {tau:.6e}"
            )));
        }
        if snapshots[k].1.grid() != snapshots[0].1.grid() {
            return Err(Error::GridMismatch("space-time norm snapshots".into()));
        }
    }

    let g = snapshots[0].1.grid();
    let cell = g.h1() * g.h2();
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut linf: f64 = 0.0;
    for (t, u) in snapshots {
        for j in 0..=g.n2() {
            for i in 0..=g.n1() {
                let diff = u.get(i, j) - reference(g.x(i), g.y(j), *t);
                l1 += tau * diff.abs() * cell;
                l2 += tau * diff * diff * cell;
                linf = linf.max(diff.abs());
            }
        }
    }
    Ok((l1, l2.sqrt(), linf))
}

/// Experimental order of convergence `log(err1/err2) / log(h1/h2)`.
pub fn eoc(err1: f64, err2: f64, h1: f64, h2: f64) -> Result<f64> {
    if !(err1 > 0.0 && err2 > 0.0) {
        return Err(Error::Contract(format!(
            "EOC needs positive errors, got {err1} and {err2}"
        )));
    }
    if !(h1 > 0.0 && h2 > 0.0) || h1 == h2 {
        return Err(Error::Contract(format!(
            "EOC needs distinct positive mesh sizes, got {h1} and {h2}"
        )));
    }
    Ok((err1 / err2).ln() / (h1 / h2).ln())
}
