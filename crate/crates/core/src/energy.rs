//! Discrete scalar products on the doubled-index grid, the discrete Green
//! formula as a testable identity, the discrete Willmore energy and a
//! dissipation monitor.
//!
//! The doubled grid carries the nodal values at even index pairs and
//! two-point midpoint averages at half (odd) indices; finite differences on
//! it step by half a cell, `U_f(k) = 2 (U_(k+1) - U_k) / h`. Summation by
//! parts of the one-sided differences gives, with the bracket products
//! defined below,
//!
//! ```text
//! 2 (grad_h u, v)_h = -(u, grad_h v)_c + boundary sums
//! ```
//!
//! which is the grid Green formula (the one-sided pairs `f./b.` sum to
//! twice the centred difference, hence the factor 2 on the left). These
//! pieces only exist on square grids; the solver itself stays general.

use crate::anisotropy::SurfaceEnergy;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::spatial::{cell_q, mean_curvature};

/// Grid function on the doubled-index lattice `k, l = 0..2N` of a square
/// grid: even-even entries are nodal values, odd entries two-point
/// midpoint averages.
#[derive(Debug, Clone)]
pub struct DoubledField {
    n: usize,
    h: f64,
    values: Vec<f64>,
}

impl DoubledField {
    /// Requires a square grid (`n1 = n2`, `h1 = h2`).
    #[allow(clippy::manual_div_ceil)] // (k +- 1)/2 mirrors the half-index notation
    pub fn from_grid_function(u: &GridFunction) -> Result<DoubledField> {
        let g = u.grid();
        if g.n1() != g.n2() || (g.h1() - g.h2()).abs() > 1e-12 * g.h1().max(g.h2()) {
            return Err(Error::Contract(format!(
                "doubled-index fields need a square grid, got {}x{} cells with h = ({}, {})",
                g.n1(),
                g.n2(),
                g.h1(),
                g.h2()
            )));
        }
        let n = g.n1();
        let m = 2 * n + 1;
        let mut values = vec![0.0; m * m];
        for l in 0..m {
            for k in 0..m {
                let v = match (k % 2, l % 2) {
                    (0, 0) => u.get(k / 2, l / 2),
                    (1, 0) => 0.5 * (u.get((k - 1) / 2, l / 2) + u.get((k + 1) / 2, l / 2)),
                    (0, 1) => 0.5 * (u.get(k / 2, (l - 1) / 2) + u.get(k / 2, (l + 1) / 2)),
                    _ => 0.5 * (u.get((k - 1) / 2, (l - 1) / 2) + u.get((k + 1) / 2, (l + 1) / 2)),
                };
                values[l * m + k] = v;
            }
        }
        Ok(DoubledField {
            n,
            h: g.h1(),
            values,
        })
    }

    /// Cells per axis of the base grid.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Largest valid doubled index, `2N`.
    pub fn top(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        debug_assert!(k <= self.top() && l <= self.top());
        self.values[l * (self.top() + 1) + k]
    }

    /// Forward difference in the first index, `2 (U_(k+1,l) - U_(k,l)) / h`.
    #[inline]
    pub fn fx(&self, k: usize, l: usize) -> f64 {
        2.0 * (self.get(k + 1, l) - self.get(k, l)) / self.h
    }

    /// Backward difference in the first index.
    #[inline]
    pub fn bx(&self, k: usize, l: usize) -> f64 {
        2.0 * (self.get(k, l) - self.get(k - 1, l)) / self.h
    }

    #[inline]
    pub fn fy(&self, k: usize, l: usize) -> f64 {
        2.0 * (self.get(k, l + 1) - self.get(k, l)) / self.h
    }

    #[inline]
    pub fn by(&self, k: usize, l: usize) -> f64 {
        2.0 * (self.get(k, l) - self.get(k, l - 1)) / self.h
    }

    /// Centred difference, `(U_(k+1,l) - U_(k-1,l)) / h`; needs `1 <= k <= 2N-1`.
    #[inline]
    pub fn cx(&self, k: usize, l: usize) -> f64 {
        0.5 * (self.fx(k, l) + self.bx(k, l))
    }

    #[inline]
    pub fn cy(&self, k: usize, l: usize) -> f64 {
        0.5 * (self.fy(k, l) + self.by(k, l))
    }
}

/// `[F, G]_pq^PQ = (h^2 / 4) sum_(k=p..P, l=q..Q) F_kl G_kl` with inclusive
/// bounds.
pub fn bracket(
    f: &DoubledField,
    g: &DoubledField,
    p: usize,
    q: usize,
    pp: usize,
    qq: usize,
) -> Result<f64> {
    if f.n != g.n {
        return Err(Error::GridMismatch("bracket fields".into()));
    }
    if p > pp || q > qq || pp > f.top() || qq > f.top() {
        return Err(Error::Contract(format!(
            "bracket bounds [{p}..{pp}] x [{q}..{qq}] are inverted or exceed 0..{}",
            f.top()
        )));
    }
    Ok(bracket_fn(f.h, p, q, pp, qq, |k, l| {
        f.get(k, l) * g.get(k, l)
    }))
}

#[inline]
fn bracket_fn(
    h: f64,
    p: usize,
    q: usize,
    pp: usize,
    qq: usize,
    term: impl Fn(usize, usize) -> f64,
) -> f64 {
    let w = h * h / 4.0;
    let mut sum = 0.0;
    for l in q..=qq {
        for k in p..=pp {
            sum += term(k, l);
        }
    }
    w * sum
}

/// The discrete scalar products of one field pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Products {
    /// `(f, g)_h = [F, G]_11^(2N-1, 2N-1)`.
    pub h: f64,
    /// `(F, G_c.)_c = [F, G_f.]_(0,1) + [F, G_b.]_(1,1)^(2N, 2N-1)`.
    pub c_x: f64,
    /// `(F, G_.c)_c`, the transposed form.
    pub c_y: f64,
}

pub fn products_h_and_c(f: &DoubledField, g: &DoubledField) -> Result<Products> {
    if f.n != g.n {
        return Err(Error::GridMismatch("product fields".into()));
    }
    let t = f.top();
    Ok(Products {
        h: bracket(f, g, 1, 1, t - 1, t - 1)?,
        c_x: bracket_fn(f.h, 0, 1, t - 1, t - 1, |k, l| f.get(k, l) * g.fx(k, l))
            + bracket_fn(f.h, 1, 1, t, t - 1, |k, l| f.get(k, l) * g.bx(k, l)),
        c_y: bracket_fn(f.h, 1, 0, t - 1, t - 1, |k, l| f.get(k, l) * g.fy(k, l))
            + bracket_fn(f.h, 1, 1, t - 1, t, |k, l| f.get(k, l) * g.by(k, l)),
    })
}

/// `(bold F, grad_h G)_c` for a vector field given by components.
pub fn product_c_grad(
    fx_comp: &DoubledField,
    fy_comp: &DoubledField,
    g: &DoubledField,
) -> Result<f64> {
    let px = products_h_and_c(fx_comp, g)?;
    let py = products_h_and_c(fy_comp, g)?;
    Ok(px.c_x + py.c_y)
}

/// Residual of the grid Green formula, evaluated by independent summation
/// routes on both sides.
///
/// With `v` nonzero on the boundary this is the full identity
/// `2 (grad_h u, v)_h + (u, grad_h v)_c - boundary sums`; for `v` vanishing
/// on the whole boundary it is the zero-boundary corollary with `p == 1`:
/// `(div_h(grad_h u), v)_h + (grad_h u, grad_h v)_c / 2`.
pub fn green_residual(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch("green_residual fields".into()));
    }
    let uu = DoubledField::from_grid_function(u)?;
    let vv = DoubledField::from_grid_function(v)?;
    let t = uu.top();
    let h = uu.h;

    let v_zero_boundary = u.grid().boundary_nodes().all(|(i, j)| v.get(i, j) == 0.0);

    if v_zero_boundary {
        // components of grad_h u on the doubled grid, one-sided at the ends
        let gx = |k: usize, l: usize| -> f64 {
            if k == 0 {
                uu.fx(0, l)
            } else if k == t {
                uu.bx(t, l)
            } else {
                uu.cx(k, l)
            }
        };
        let gy = |k: usize, l: usize| -> f64 {
            if l == 0 {
                uu.fy(k, 0)
            } else if l == t {
                uu.by(k, t)
            } else {
                uu.cy(k, l)
            }
        };
        let lhs = bracket_fn(h, 1, 1, t - 1, t - 1, |k, l| {
            let div = (gx(k + 1, l) - gx(k - 1, l)) / h + (gy(k, l + 1) - gy(k, l - 1)) / h;
            div * vv.get(k, l)
        });
        let c_x = bracket_fn(h, 0, 1, t - 1, t - 1, |k, l| gx(k, l) * vv.fx(k, l))
            + bracket_fn(h, 1, 1, t, t - 1, |k, l| gx(k, l) * vv.bx(k, l));
        let c_y = bracket_fn(h, 1, 0, t - 1, t - 1, |k, l| gy(k, l) * vv.fy(k, l))
            + bracket_fn(h, 1, 1, t - 1, t, |k, l| gy(k, l) * vv.by(k, l));
        return Ok((lhs + 0.5 * (c_x + c_y)).abs());
    }

    let lhs = bracket_fn(h, 1, 1, t - 1, t - 1, |k, l| {
        (uu.cx(k, l) + uu.cy(k, l)) * vv.get(k, l)
    });
    let p = products_h_and_c(&uu, &vv)?;
    let mut bdry = 0.0;
    for l in 1..t {
        bdry += 0.5
            * h
            * ((uu.get(t - 1, l) + uu.get(t, l)) * vv.get(t, l)
                - (uu.get(0, l) + uu.get(1, l)) * vv.get(0, l));
    }
    for k in 1..t {
        bdry += 0.5
            * h
            * ((uu.get(k, t - 1) + uu.get(k, t)) * vv.get(k, t)
                - (uu.get(k, 0) + uu.get(k, 1)) * vv.get(k, 0));
    }
    Ok((2.0 * lhs + (p.c_x + p.c_y) - bdry).abs())
}

/// Discrete anisotropic Willmore energy
/// `sum_interior H_gamma^2 Q h1 h2` (no 1/2 prefactor; the dissipation
/// identity tracks this unhalved quantity).
pub fn willmore_energy(u: &GridFunction, energy: &SurfaceEnergy) -> Result<f64> {
    let g = u.grid();
    let mut sum = 0.0;
    for (i, j) in g.interior() {
        let h = mean_curvature(u, energy, i, j)?;
        let q = cell_q(u, i, j)?;
        sum += h * h * q;
    }
    Ok(sum * g.h1() * g.h2())
}

/// One step of the discrete dissipation functional
/// `sum_interior ((u_next - u_prev)/dt)^2 / Q h1 h2`, with `Q` sampled from
/// the supplied cell field.
pub fn dissipation_step(
    u_prev: &GridFunction,
    u_next: &GridFunction,
    dt: f64,
    q_field: &GridFunction,
) -> Result<f64> {
    if u_prev.grid() != u_next.grid() || u_prev.grid() != q_field.grid() {
        return Err(Error::GridMismatch("dissipation_step fields".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Contract(format!(
            "dissipation_step needs dt > 0, got {dt}"
        )));
    }
    let g = u_prev.grid();
    let mut sum = 0.0;
    for (i, j) in g.interior() {
        let rate = (u_next.get(i, j) - u_prev.get(i, j)) / dt;
        sum += rate * rate / q_field.get(i, j);
    }
    Ok(sum * g.h1() * g.h2())
}

/// Energy diagnostics at one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// Discrete `(H_gamma^2, Q)_h`.
    pub willmore: f64,
    /// Discrete `((u_t)^2, 1/Q)_h` over the last accepted step.
    pub dissipation: f64,
    /// Energy increase since the run start, clipped below at zero.
    pub drift: f64,
}

/// Accumulates energy reports along a trajectory of accepted steps.
pub struct EnergyMonitor {
    energy: SurfaceEnergy,
    initial: Option<f64>,
    prev: Option<(f64, GridFunction)>,
    reports: Vec<EnergyReport>,
}

impl EnergyMonitor {
    pub fn new(energy: SurfaceEnergy) -> EnergyMonitor {
        EnergyMonitor {
            energy,
            initial: None,
            prev: None,
            reports: Vec::new(),
        }
    }

    /// Record the state after an accepted step (or the initial state).
    pub fn record(&mut self, t: f64, u: &GridFunction) -> Result<EnergyReport> {
        let willmore = willmore_energy(u, &self.energy)?;
        let initial = *self.initial.get_or_insert(willmore);
        let dissipation = match &self.prev {
            Some((t_prev, u_prev)) if t > *t_prev => {
                let mut q = GridFunction::zeros(*u.grid());
                for (i, j) in u.grid().interior() {
                    q.set(i, j, cell_q(u, i, j)?);
                }
                dissipation_step(u_prev, u, t - t_prev, &q)?
            }
            _ => 0.0,
        };
        let report = EnergyReport {
            t,
            willmore,
            dissipation,
            drift: (willmore - initial).max(0.0),
        };
        self.prev = Some((t, u.clone()));
        self.reports.push(report);
        Ok(report)
    }

    pub fn reports(&self) -> &[EnergyReport] {
        &self.reports
    }
}
