//! Complementary finite volume spatial operator: edge and cell area
//! elements `Q`, discrete anisotropic mean curvature `H_gamma`, the
//! auxiliary field `w = Q * H_gamma`, boundary condition application and
//! the full semidiscrete right-hand side
//!
//! ```text
//! du_ij/dt = -Q_ij / (h1 h2) * sum_edges l * (E grad_h w . nu
//!            - 1/2 * w_e^2 / Q_e^3 * grad_h u . nu)  + F(x_i, y_j, t)
//! ```
//!
//! accumulated over the four dual-volume edges of every interior node.
//! Boundary nodes carry rhs = 0; their values are imposed by the boundary
//! condition, not evolved.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::anisotropy::{GradientVec, Hessian2, SurfaceEnergy};
use crate::error::{Error, Result};
use crate::grid::{edge_gradient, h_edge_gradient, v_edge_gradient, EdgeId, Grid, GridFunction};

/// Threshold below which the normal Hessian entry in a Neumann `w`
/// extraction is treated as degenerate and the extraction falls back to a
/// zero-normal-gradient copy.
const NEUMANN_DEGENERACY_EPS: f64 = 1e-12;

/// Boundary values for one field, addressed either per boundary node (in
/// the `Grid::boundary_nodes` order) or as a function of `(x, y, t)`.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    PerNode(Vec<f64>),
    TimeDependent(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
}

impl BoundaryData {
    pub fn zero() -> BoundaryData {
        BoundaryData::Constant(0.0)
    }

    fn eval(&self, ordinal: usize, x: f64, y: f64, t: f64) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::PerNode(v) => v[ordinal],
            BoundaryData::TimeDependent(f) => f(x, y, t),
        }
    }

    fn validate(&self, grid: &Grid, what: &str) -> Result<()> {
        if let BoundaryData::PerNode(v) = self {
            if v.len() != grid.boundary_count() {
                return Err(Error::Contract(format!(
                    "{what}: boundary array has {} entries, the grid boundary has {} nodes",
                    v.len(),
                    grid.boundary_count()
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(f, "Constant({c})"),
            BoundaryData::PerNode(v) => write!(f, "PerNode(len = {})", v.len()),
            BoundaryData::TimeDependent(_) => write!(f, "TimeDependent(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    /// `u = g1`, `w = g2` on the boundary.
    Dirichlet { g1: BoundaryData, g2: BoundaryData },
    /// `du/dnu = 0` and `(E grad w) . nu = 0` on the boundary, in the
    /// discrete forms of the dual mesh.
    NeumannHomogeneous,
}

impl BoundaryCondition {
    pub fn zero_dirichlet() -> BoundaryCondition {
        BoundaryCondition::Dirichlet {
            g1: BoundaryData::zero(),
            g2: BoundaryData::zero(),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if let BoundaryCondition::Dirichlet { g1, g2 } = self {
            g1.validate(grid, "dirichlet g1")?;
            g2.validate(grid, "dirichlet g2")?;
        }
        Ok(())
    }
}

/// Pointwise forcing term. Solvers call `eval_node` with both the node
/// indices and coordinates, which lets grid-aware implementations use
/// precomputed per-node data.
pub trait Forcing: Send + Sync {
    fn eval(&self, x: f64, y: f64, t: f64) -> f64;

    fn eval_node(&self, _i: usize, _j: usize, x: f64, y: f64, t: f64) -> f64 {
        self.eval(x, y, t)
    }
}

impl<F> Forcing for F
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self(x, y, t)
    }
}

/// Anisotropy, boundary conditions and optional forcing over a grid: the
/// data defining the semidiscrete ODE system.
pub struct FlowProblem {
    grid: Grid,
    energy: SurfaceEnergy,
    bc: BoundaryCondition,
    forcing: Option<Arc<dyn Forcing>>,
    w_bc_fallbacks: AtomicUsize,
}

impl FlowProblem {
    pub fn new(
        grid: Grid,
        energy: SurfaceEnergy,
        bc: BoundaryCondition,
        forcing: Option<Arc<dyn Forcing>>,
    ) -> Result<FlowProblem> {
        bc.validate(&grid)?;
        Ok(FlowProblem {
            grid,
            energy,
            bc,
            forcing,
            w_bc_fallbacks: AtomicUsize::new(0),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn energy(&self) -> &SurfaceEnergy {
        &self.energy
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn forcing(&self) -> Option<&Arc<dyn Forcing>> {
        self.forcing.as_ref()
    }

    /// Times the Neumann `w` extraction hit a degenerate normal Hessian
    /// entry and fell back to a plain copy.
    pub fn w_bc_fallback_count(&self) -> usize {
        self.w_bc_fallbacks.load(Ordering::Relaxed)
    }
}

/// `sqrt(1 + |grad_h u|^2)` on a dual-volume edge; always `>= 1`.
pub fn edge_q(u: &GridFunction, e: &EdgeId) -> Result<f64> {
    let (g1, g2) = edge_gradient(u, e)?;
    Ok((1.0 + g1 * g1 + g2 * g2).sqrt())
}

/// Arithmetic mean of the four edge `Q` values of the dual volume of the
/// interior node `(i, j)`.
pub fn cell_q(u: &GridFunction, i: usize, j: usize) -> Result<f64> {
    let g = u.grid();
    if !g.is_interior(i, j) {
        return Err(Error::OutsideClosure {
            i: i as i64,
            j: j as i64,
            n1: g.n1(),
            n2: g.n2(),
        });
    }
    let mut sum = 0.0;
    for dir in crate::grid::EdgeDir::ALL {
        let e = EdgeId::new(g, i, j, dir)?;
        sum += edge_q(u, &e)?;
    }
    Ok(0.25 * sum)
}

/// Discrete anisotropic mean curvature: divergence stencil of
/// `grad_p gamma` evaluated at the four edge gradients of the dual volume.
pub fn mean_curvature(u: &GridFunction, energy: &SurfaceEnergy, i: usize, j: usize) -> Result<f64> {
    let g = u.grid();
    if !g.is_interior(i, j) {
        return Err(Error::OutsideClosure {
            i: i as i64,
            j: j as i64,
            n1: g.n1(),
            n2: g.n2(),
        });
    }
    let east = energy.grad_p(edge_grad_vec(u, i, j, true)).0;
    let west = energy.grad_p(edge_grad_vec(u, i - 1, j, true)).0;
    let north = energy.grad_p(edge_grad_vec(u, i, j, false)).1;
    let south = energy.grad_p(edge_grad_vec(u, i, j - 1, false)).1;
    Ok((east - west) / g.h1() + (north - south) / g.h2())
}

/// Two-point average of `w` across an edge.
pub fn edge_w(w: &GridFunction, e: &EdgeId) -> Result<f64> {
    let g = w.grid();
    let (i, j) = e.node();
    if !g.is_interior(i, j) {
        return Err(Error::BoundaryStencil { i, j });
    }
    let (ni, nj) = e.neighbour();
    Ok(0.5 * (w.get(i, j) + w.get(ni, nj)))
}

/// Full 2x2 Hessian of `gamma` evaluated at the edge gradient of `u`.
pub fn edge_hessian(u: &GridFunction, energy: &SurfaceEnergy, e: &EdgeId) -> Result<Hessian2> {
    let (g1, g2) = edge_gradient(u, e)?;
    Ok(energy.hessian(GradientVec::new(g1, g2)))
}

/// `w = Q * H_gamma` on interior nodes, boundary values per the boundary
/// condition. Expects `u` with boundary values already applied.
pub fn w_field(
    u: &GridFunction,
    energy: &SurfaceEnergy,
    bc: &BoundaryCondition,
    t: f64,
) -> Result<GridFunction> {
    let ex = edge_sweep_horizontal(u, energy);
    let ey = edge_sweep_vertical(u, energy);
    let mut w = w_interior_from_edges(u.grid(), &ex, &ey);
    apply_bc_w(bc, u, energy, &mut w, t);
    Ok(w)
}

#[derive(Clone, Copy, Default)]
struct EdgeData {
    /// Edge gradient of `u`.
    g1: f64,
    g2: f64,
    /// `sqrt(1 + |g|^2)`.
    q: f64,
    /// Normal component of `grad_p gamma` at the edge gradient: the `p1`
    /// part on vertical segments, the `p2` part on horizontal ones.
    gp: f64,
}

/// Edge data on the dual-mesh segments between `(i, j)` and `(i+1, j)`,
/// `i = 0..n1-1`, `j = 1..n2-1`, indexed `(j - 1) * n1 + i`.
fn edge_sweep_horizontal(u: &GridFunction, energy: &SurfaceEnergy) -> Vec<EdgeData> {
    let g = u.grid();
    let n1 = g.n1();
    let mut data = vec![EdgeData::default(); n1 * (g.n2() - 1)];
    data.par_chunks_mut(n1).enumerate().for_each(|(j0, row)| {
        let j = j0 + 1;
        for (i, slot) in row.iter_mut().enumerate() {
            let (g1, g2) = h_edge_gradient(u, i, j);
            let q = (1.0 + g1 * g1 + g2 * g2).sqrt();
            let gp = energy.grad_p(GradientVec::new(g1, g2)).0;
            *slot = EdgeData { g1, g2, q, gp };
        }
    });
    data
}

/// Edge data on the dual-mesh segments between `(i, j)` and `(i, j+1)`,
/// `i = 1..n1-1`, `j = 0..n2-1`, indexed `j * (n1 - 1) + (i - 1)`.
fn edge_sweep_vertical(u: &GridFunction, energy: &SurfaceEnergy) -> Vec<EdgeData> {
    let g = u.grid();
    let n1 = g.n1();
    let mut data = vec![EdgeData::default(); (n1 - 1) * g.n2()];
    data.par_chunks_mut(n1 - 1)
        .enumerate()
        .for_each(|(j, row)| {
            for (i0, slot) in row.iter_mut().enumerate() {
                let (g1, g2) = v_edge_gradient(u, i0 + 1, j);
                let q = (1.0 + g1 * g1 + g2 * g2).sqrt();
                let gp = energy.grad_p(GradientVec::new(g1, g2)).1;
                *slot = EdgeData { g1, g2, q, gp };
            }
        });
    data
}

fn w_interior_from_edges(grid: &Grid, ex: &[EdgeData], ey: &[EdgeData]) -> GridFunction {
    let (n1, n2) = (grid.n1(), grid.n2());
    let (h1, h2) = (grid.h1(), grid.h2());
    let mut w = GridFunction::zeros(*grid);
    let row_len = n1 + 1;
    w.values_mut()[row_len..row_len * n2]
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(j0, row)| {
            let j = j0 + 1;
            for i in 1..n1 {
                let east = &ex[(j - 1) * n1 + i];
                let west = &ex[(j - 1) * n1 + i - 1];
                let north = &ey[j * (n1 - 1) + i - 1];
                let south = &ey[(j - 1) * (n1 - 1) + i - 1];
                let h = (east.gp - west.gp) / h1 + (north.gp - south.gp) / h2;
                let q = 0.25 * (east.q + west.q + north.q + south.q);
                row[i] = q * h;
            }
        });
    w
}

/// Impose boundary values on `u`: Dirichlet data sampled at time `t`, or
/// the zero-normal-difference copy for the homogeneous Neumann condition.
pub fn apply_bc_u(bc: &BoundaryCondition, u: &mut GridFunction, t: f64) {
    let g = *u.grid();
    let (n1, n2) = (g.n1(), g.n2());
    match bc {
        BoundaryCondition::Dirichlet { g1, .. } => {
            for (ordinal, (i, j)) in g.boundary_nodes().enumerate() {
                u.set(i, j, g1.eval(ordinal, g.x(i), g.y(j), t));
            }
        }
        BoundaryCondition::NeumannHomogeneous => {
            // rows first over interior columns, then full columns: the
            // second pass propagates already reflected row values into the
            // corners, leaving the diagonal copy u[0,0] = u[1,1] etc.
            for i in 1..n1 {
                let lo = u.get(i, 1);
                let hi = u.get(i, n2 - 1);
                u.set(i, 0, lo);
                u.set(i, n2, hi);
            }
            for j in 0..=n2 {
                let lo = u.get(1, j);
                let hi = u.get(n1 - 1, j);
                u.set(0, j, lo);
                u.set(n1, j, hi);
            }
        }
    }
}

/// Impose boundary values on `w`. Under the Neumann condition the boundary
/// value is solved from the discrete relation `(E grad_h w) . nu = 0` on
/// the adjacent dual-volume edge: the tangential difference is a
/// first-order one-sided stencil over already-known interior values and
/// the boundary value is extracted from the normal difference term.
/// Returns the number of degenerate normal entries that fell back to a
/// plain zero-normal-gradient copy.
pub fn apply_bc_w(
    bc: &BoundaryCondition,
    u: &GridFunction,
    energy: &SurfaceEnergy,
    w: &mut GridFunction,
    t: f64,
) -> usize {
    let g = *u.grid();
    let (n1, n2) = (g.n1(), g.n2());
    let (h1, h2) = (g.h1(), g.h2());
    match bc {
        BoundaryCondition::Dirichlet { g2, .. } => {
            for (ordinal, (i, j)) in g.boundary_nodes().enumerate() {
                w.set(i, j, g2.eval(ordinal, g.x(i), g.y(j), t));
            }
            0
        }
        BoundaryCondition::NeumannHomogeneous => {
            let mut fallbacks = 0usize;
            // first-order one-sided tangential difference over the first
            // interior line, forward except at the far end
            let one_sided = |a: f64, b: f64, h: f64| (b - a) / h;
            for j in 1..n2 {
                let tl = if j < n2 - 1 {
                    one_sided(w.get(1, j), w.get(1, j + 1), h2)
                } else {
                    one_sided(w.get(1, j - 1), w.get(1, j), h2)
                };
                let e = energy.hessian(edge_grad_vec(u, 0, j, true));
                if e.e11.abs() < NEUMANN_DEGENERACY_EPS {
                    fallbacks += 1;
                    w.set(0, j, w.get(1, j));
                } else {
                    w.set(0, j, w.get(1, j) + h1 * e.e12 * tl / e.e11);
                }

                let tr = if j < n2 - 1 {
                    one_sided(w.get(n1 - 1, j), w.get(n1 - 1, j + 1), h2)
                } else {
                    one_sided(w.get(n1 - 1, j - 1), w.get(n1 - 1, j), h2)
                };
                let e = energy.hessian(edge_grad_vec(u, n1 - 1, j, true));
                if e.e11.abs() < NEUMANN_DEGENERACY_EPS {
                    fallbacks += 1;
                    w.set(n1, j, w.get(n1 - 1, j));
                } else {
                    w.set(n1, j, w.get(n1 - 1, j) - h1 * e.e12 * tr / e.e11);
                }
            }
            for i in 1..n1 {
                let tb = if i < n1 - 1 {
                    one_sided(w.get(i, 1), w.get(i + 1, 1), h1)
                } else {
                    one_sided(w.get(i - 1, 1), w.get(i, 1), h1)
                };
                let e = energy.hessian(edge_grad_vec(u, i, 0, false));
                if e.e22.abs() < NEUMANN_DEGENERACY_EPS {
                    fallbacks += 1;
                    w.set(i, 0, w.get(i, 1));
                } else {
                    w.set(i, 0, w.get(i, 1) + h2 * e.e21 * tb / e.e22);
                }

                let tt = if i < n1 - 1 {
                    one_sided(w.get(i, n2 - 1), w.get(i + 1, n2 - 1), h1)
                } else {
                    one_sided(w.get(i - 1, n2 - 1), w.get(i, n2 - 1), h1)
                };
                let e = energy.hessian(edge_grad_vec(u, i, n2 - 1, false));
                if e.e22.abs() < NEUMANN_DEGENERACY_EPS {
                    fallbacks += 1;
                    w.set(i, n2, w.get(i, n2 - 1));
                } else {
                    w.set(i, n2, w.get(i, n2 - 1) - h2 * e.e21 * tt / e.e22);
                }
            }
            // corners: diagonal copy from the nearest interior node
            let c = [
                w.get(1, 1),
                w.get(n1 - 1, 1),
                w.get(1, n2 - 1),
                w.get(n1 - 1, n2 - 1),
            ];
            w.set(0, 0, c[0]);
            w.set(n1, 0, c[1]);
            w.set(0, n2, c[2]);
            w.set(n1, n2, c[3]);
            fallbacks
        }
    }
}

#[inline]
fn edge_grad_vec(u: &GridFunction, i: usize, j: usize, horizontal: bool) -> GradientVec {
    let (g1, g2) = if horizontal {
        h_edge_gradient(u, i, j)
    } else {
        v_edge_gradient(u, i, j)
    };
    GradientVec::new(g1, g2)
}

/// Apply the boundary condition to a state pair `(u, w)` at time `t`.
/// Returns the number of degenerate Neumann `w` extractions.
pub fn apply_bc(
    problem: &FlowProblem,
    u: &mut GridFunction,
    w: &mut GridFunction,
    t: f64,
) -> Result<usize> {
    if u.grid() != &problem.grid || w.grid() != &problem.grid {
        return Err(Error::GridMismatch("apply_bc state fields".into()));
    }
    apply_bc_u(&problem.bc, u, t);
    let fallbacks = apply_bc_w(&problem.bc, u, &problem.energy, w, t);
    problem
        .w_bc_fallbacks
        .fetch_add(fallbacks, Ordering::Relaxed);
    Ok(fallbacks)
}

/// Semidiscrete time derivative at every interior node; boundary nodes
/// carry zero. Dirichlet data is imposed on a working copy at each
/// evaluation (it may be time dependent); under the Neumann condition the
/// boundary entries of the state are trusted as-is and the run loop
/// re-applies the reflection after every accepted step, which keeps affine
/// states exact equilibria.
pub fn rhs(problem: &FlowProblem, u: &GridFunction, t: f64) -> Result<GridFunction> {
    if u.grid() != &problem.grid {
        return Err(Error::GridMismatch("rhs state field".into()));
    }
    let out = rhs_values(problem, u.values(), t)?;
    GridFunction::from_values(problem.grid, out)
}

/// `rhs` on a raw state vector, the form consumed by the time integrator.
pub fn rhs_values(problem: &FlowProblem, state: &[f64], t: f64) -> Result<Vec<f64>> {
    let g = problem.grid;
    let (n1, n2) = (g.n1(), g.n2());
    let (h1, h2) = (g.h1(), g.h2());
    if state.len() != g.node_count() {
        return Err(Error::GridMismatch(format!(
            "state length {} does not match grid node count {}",
            state.len(),
            g.node_count()
        )));
    }

    let mut ub = GridFunction::from_values_unchecked(g, state.to_vec());
    if matches!(problem.bc, BoundaryCondition::Dirichlet { .. }) {
        apply_bc_u(&problem.bc, &mut ub, t);
    }

    let ex = edge_sweep_horizontal(&ub, &problem.energy);
    let ey = edge_sweep_vertical(&ub, &problem.energy);
    let mut w = w_interior_from_edges(&g, &ex, &ey);
    let fallbacks = apply_bc_w(&problem.bc, &ub, &problem.energy, &mut w, t);
    problem
        .w_bc_fallbacks
        .fetch_add(fallbacks, Ordering::Relaxed);

    // normal flux per edge: (E grad_h w) . nu - w_e^2 / (2 Q_e^3) * grad_h u . nu
    // with nu the positive axis direction; signs enter in the divergence
    let mut flux_x = vec![0.0f64; n1 * (n2 - 1)];
    flux_x.par_chunks_mut(n1).enumerate().for_each(|(j0, row)| {
        let j = j0 + 1;
        for (i, slot) in row.iter_mut().enumerate() {
            let ed = &ex[j0 * n1 + i];
            let e = problem.energy.hessian(GradientVec::new(ed.g1, ed.g2));
            let (gw1, gw2) = h_edge_gradient(&w, i, j);
            let we = 0.5 * (w.get(i, j) + w.get(i + 1, j));
            let q3 = ed.q * ed.q * ed.q;
            *slot = e.e11 * gw1 + e.e12 * gw2 - 0.5 * we * we / q3 * ed.g1;
        }
    });
    let mut flux_y = vec![0.0f64; (n1 - 1) * n2];
    flux_y
        .par_chunks_mut(n1 - 1)
        .enumerate()
        .for_each(|(j, row)| {
            for (i0, slot) in row.iter_mut().enumerate() {
                let ed = &ey[j * (n1 - 1) + i0];
                let e = problem.energy.hessian(GradientVec::new(ed.g1, ed.g2));
                let (gw1, gw2) = v_edge_gradient(&w, i0 + 1, j);
                let we = 0.5 * (w.get(i0 + 1, j) + w.get(i0 + 1, j + 1));
                let q3 = ed.q * ed.q * ed.q;
                *slot = e.e21 * gw1 + e.e22 * gw2 - 0.5 * we * we / q3 * ed.g2;
            }
        });

    // flux divergence per dual volume, scaled by -Q_ij / (h1 h2)
    let mut out = vec![0.0f64; g.node_count()];
    let row_len = n1 + 1;
    let forcing = problem.forcing.as_deref();
    out[row_len..row_len * n2]
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(j0, row)| {
            let j = j0 + 1;
            let y = g.y(j);
            for i in 1..n1 {
                let east = &ex[(j - 1) * n1 + i];
                let west = &ex[(j - 1) * n1 + i - 1];
                let north = &ey[j * (n1 - 1) + i - 1];
                let south = &ey[(j - 1) * (n1 - 1) + i - 1];
                let q = 0.25 * (east.q + west.q + north.q + south.q);
                let div = h2 * (flux_x[(j - 1) * n1 + i] - flux_x[(j - 1) * n1 + i - 1])
                    + h1 * (flux_y[j * (n1 - 1) + i - 1] - flux_y[(j - 1) * (n1 - 1) + i - 1]);
                let mut v = -q / (h1 * h2) * div;
                if let Some(f) = forcing {
                    v += f.eval_node(i, j, g.x(i), y, t);
                }
                row[i] = v;
            }
        });

    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        let i = k % row_len;
        let j = k / row_len;
        return Err(Error::Divergence { i, j, t });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::EdgeDir;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn grid(n: usize, half: f64) -> Grid {
        Grid::from_bounds(-half, half, -half, half, n, n).unwrap()
    }

    fn random_field(g: Grid, seed: u64) -> GridFunction {
        let mut rng = StdRng::seed_from_u64(seed);
        GridFunction::from_fn(g, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn edge_q_on_simple_fields() {
        let g = grid(6, 1.0);
        let c = GridFunction::from_fn(g, |_, _| 4.0);
        let e = EdgeId::new(&g, 2, 3, EdgeDir::East).unwrap();
        assert_relative_eq!(edge_q(&c, &e).unwrap(), 1.0);

        let ux = GridFunction::from_fn(g, |x, _| x);
        assert_relative_eq!(edge_q(&ux, &e).unwrap(), 2.0f64.sqrt(), epsilon = 1e-13);

        let plane = GridFunction::from_fn(g, |x, y| x + 2.0 * y);
        for dir in EdgeDir::ALL {
            let e = EdgeId::new(&g, 3, 3, dir).unwrap();
            assert_relative_eq!(edge_q(&plane, &e).unwrap(), 6.0f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn cell_q_is_edge_average() {
        let g = grid(6, 1.0);
        let u = random_field(g, 3);
        let direct: f64 = EdgeDir::ALL
            .iter()
            .map(|&d| edge_q(&u, &EdgeId::new(&g, 2, 2, d).unwrap()).unwrap())
            .sum::<f64>()
            / 4.0;
        assert_relative_eq!(cell_q(&u, 2, 2).unwrap(), direct, epsilon = 1e-15);
        assert!(cell_q(&u, 0, 2).is_err());

        let zero = GridFunction::zeros(g);
        assert_relative_eq!(cell_q(&zero, 3, 3).unwrap(), 1.0);
        let ux = GridFunction::from_fn(g, |x, _| x);
        assert_relative_eq!(cell_q(&ux, 3, 3).unwrap(), 2.0f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn q_values_never_drop_below_one() {
        let g = grid(6, 1.0);
        for seed in 0..5u64 {
            let u = random_field(g, 100 + seed);
            for (i, j) in g.interior() {
                assert!(cell_q(&u, i, j).unwrap() >= 1.0);
                for dir in EdgeDir::ALL {
                    let e = EdgeId::new(&g, i, j, dir).unwrap();
                    assert!(edge_q(&u, &e).unwrap() >= 1.0);
                }
            }
        }
    }

    #[test]
    fn mean_curvature_vanishes_on_planes() {
        let g = grid(8, 2.0);
        let plane = GridFunction::from_fn(g, |x, y| 0.3 + 1.2 * x - 0.7 * y);
        for se in [
            SurfaceEnergy::isotropic(),
            SurfaceEnergy::quadratic_form(2.0, 1.0, 1.0).unwrap(),
            SurfaceEnergy::regularized_abs(0.1).unwrap(),
        ] {
            for (i, j) in [(1usize, 1usize), (4, 4), (7, 7), (2, 6)] {
                assert!(mean_curvature(&plane, &se, i, j).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_curvature_of_paraboloid_converges() {
        // analytic oracle: H(u) = (lap u (1+|du|^2) - du^T D2u du) / Q^3 = 2
        // at the origin for u = (x^2+y^2)/2; Richardson check on a ladder
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let g = grid(n, 1.0);
            let u = GridFunction::from_fn(g, |x, y| 0.5 * (x * x + y * y));
            let h = mean_curvature(&u, &SurfaceEnergy::isotropic(), n / 2, n / 2).unwrap();
            errs.push((h - 2.0).abs());
        }
        assert!(errs[0] < 0.1, "coarse error {}", errs[0]);
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.5, "observed order {order}, errors {errs:?}");

        // anisotropic oracle: div(G grad u / gamma_G) at 0 = trace(G) = 3
        let qf = SurfaceEnergy::quadratic_form(2.0, 0.0, 1.0).unwrap();
        let g = grid(32, 1.0);
        let u = GridFunction::from_fn(g, |x, y| 0.5 * (x * x + y * y));
        let h = mean_curvature(&u, &qf, 16, 16).unwrap();
        assert!((h - 3.0).abs() < 0.01, "H = {h}");
    }

    #[test]
    fn edge_w_is_two_point_average() {
        let g = grid(4, 1.0);
        let mut w = GridFunction::from_fn(g, |_, _| 7.0);
        let e = EdgeId::new(&g, 1, 1, EdgeDir::East).unwrap();
        assert_relative_eq!(edge_w(&w, &e).unwrap(), 7.0);
        w.set(1, 1, 1.0);
        w.set(2, 1, 3.0);
        assert_relative_eq!(edge_w(&w, &e).unwrap(), 2.0);

        let r = random_field(g, 11);
        for dir in EdgeDir::ALL {
            let e = EdgeId::new(&g, 2, 2, dir).unwrap();
            let (ni, nj) = e.neighbour();
            assert_relative_eq!(
                edge_w(&r, &e).unwrap(),
                0.5 * (r.get(2, 2) + r.get(ni, nj)),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn edge_hessian_composes_gradient_and_hessian() {
        let g = grid(5, 1.0);
        let zero = GridFunction::zeros(g);
        let e = EdgeId::new(&g, 2, 2, EdgeDir::North).unwrap();
        let h = edge_hessian(&zero, &SurfaceEnergy::isotropic(), &e).unwrap();
        assert_relative_eq!(h.e11, 1.0);
        assert_relative_eq!(h.e22, 1.0);
        assert_relative_eq!(h.e12, 0.0);

        let qf = SurfaceEnergy::quadratic_form(3.0, 1.0, 2.0).unwrap();
        let h = edge_hessian(&zero, &qf, &e).unwrap();
        assert_relative_eq!(h.e11, 3.0);
        assert_relative_eq!(h.e12, 1.0);
        assert_relative_eq!(h.e22, 2.0);

        let u = random_field(g, 5);
        let grad = edge_gradient(&u, &e).unwrap();
        let expect = qf.hessian(GradientVec::new(grad.0, grad.1));
        let got = edge_hessian(&u, &qf, &e).unwrap();
        assert_relative_eq!(got.e11, expect.e11);
        assert_relative_eq!(got.e12, expect.e12);
        assert_relative_eq!(got.e22, expect.e22);
    }

    #[test]
    fn w_field_zero_dirichlet_zero_state() {
        let g = grid(6, 1.0);
        let u = GridFunction::zeros(g);
        let w = w_field(
            &u,
            &SurfaceEnergy::isotropic(),
            &BoundaryCondition::zero_dirichlet(),
            0.0,
        )
        .unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn w_field_affine_neumann_vanishes() {
        let g = grid(6, 1.0);
        let u = GridFunction::from_fn(g, |x, y| 1.0 + 0.8 * x - 0.4 * y);
        let w = w_field(
            &u,
            &SurfaceEnergy::isotropic(),
            &BoundaryCondition::NeumannHomogeneous,
            0.0,
        )
        .unwrap();
        for (i, j) in g.nodes() {
            assert!(w.get(i, j).abs() < 1e-13, "w({i},{j}) = {}", w.get(i, j));
        }
    }

    #[test]
    fn w_field_paraboloid_composes_oracles() {
        let g = grid(16, 1.0);
        let u = GridFunction::from_fn(g, |x, y| 0.5 * (x * x + y * y));
        let se = SurfaceEnergy::isotropic();
        let w = w_field(&u, &se, &BoundaryCondition::NeumannHomogeneous, 0.0).unwrap();
        let (i, j) = (8usize, 8usize);
        let expect = cell_q(&u, i, j).unwrap() * mean_curvature(&u, &se, i, j).unwrap();
        assert_relative_eq!(w.get(i, j), expect, epsilon = 1e-14);
    }

    #[test]
    fn dirichlet_bc_imposes_data_exactly() {
        let g = grid(5, 1.0);
        let problem = FlowProblem::new(
            g,
            SurfaceEnergy::isotropic(),
            BoundaryCondition::zero_dirichlet(),
            None,
        )
        .unwrap();
        let mut u = random_field(g, 1);
        let mut w = random_field(g, 2);
        apply_bc(&problem, &mut u, &mut w, 0.0).unwrap();
        for (i, j) in g.boundary_nodes() {
            assert_eq!(u.get(i, j), 0.0);
            assert_eq!(w.get(i, j), 0.0);
        }
    }

    #[test]
    fn neumann_bc_constant_state() {
        let g = grid(5, 1.0);
        let problem = FlowProblem::new(
            g,
            SurfaceEnergy::isotropic(),
            BoundaryCondition::NeumannHomogeneous,
            None,
        )
        .unwrap();
        let mut u = GridFunction::from_fn(g, |_, _| 2.5);
        let mut w = GridFunction::zeros(g);
        apply_bc(&problem, &mut u, &mut w, 0.0).unwrap();
        assert!(u.values().iter().all(|&v| v == 2.5));
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn neumann_w_extraction_mirrors_even_fields() {
        // u even-symmetric about x = 0 on a symmetric grid: the extracted
        // left boundary w equals the mirrored right boundary column
        let n = 8;
        let g = grid(n, 1.0);
        let u0 = random_field(g, 9);
        let mut u = GridFunction::zeros(g);
        for j in 0..=n {
            for i in 0..=n {
                let v = 0.5 * (u0.get(i, j) + u0.get(n - i, j));
                u.set(i, j, v);
            }
        }
        let se = SurfaceEnergy::isotropic();
        let mut ub = u.clone();
        apply_bc_u(&BoundaryCondition::NeumannHomogeneous, &mut ub, 0.0);
        let w = w_field(&ub, &se, &BoundaryCondition::NeumannHomogeneous, 0.0).unwrap();
        for j in 0..=n {
            assert!(
                (w.get(0, j) - w.get(n, j)).abs() < 1e-12,
                "row {j}: {} vs {}",
                w.get(0, j),
                w.get(n, j)
            );
        }
    }

    #[test]
    fn rhs_zero_state_zero_dirichlet() {
        let g = grid(6, 1.0);
        let problem = FlowProblem::new(
            g,
            SurfaceEnergy::isotropic(),
            BoundaryCondition::zero_dirichlet(),
            None,
        )
        .unwrap();
        let u = GridFunction::zeros(g);
        let out = rhs(&problem, &u, 0.0).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_affine_neumann_is_equilibrium() {
        // non-square cells exercise the general h1 != h2 stencils
        for g in [
            grid(7, 2.0),
            Grid::new(-1.0, -2.0, 2.4, 3.0, 6, 8).unwrap(),
        ] {
            for se in [
                SurfaceEnergy::isotropic(),
                SurfaceEnergy::quadratic_form(2.0, 1.0, 1.0).unwrap(),
            ] {
                let problem =
                    FlowProblem::new(g, se, BoundaryCondition::NeumannHomogeneous, None).unwrap();
                let u = GridFunction::from_fn(g, |x, y| 0.2 - 0.9 * x + 0.35 * y);
                let out = rhs(&problem, &u, 0.0).unwrap();
                for (i, j) in g.interior() {
                    assert!(
                        out.get(i, j).abs() < 1e-11,
                        "rhs({i},{j}) = {}",
                        out.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn rhs_translation_invariant_under_neumann() {
        let g = grid(6, 1.0);
        let problem = FlowProblem::new(
            g,
            SurfaceEnergy::quadratic_form(2.0, 0.0, 1.0).unwrap(),
            BoundaryCondition::NeumannHomogeneous,
            None,
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        let u = GridFunction::from_fn(g, |_, _| rng.random_range(-0.25..0.25));
        let mut shifted = u.clone();
        for v in shifted.values_mut() {
            *v += 3.0;
        }
        let a = rhs(&problem, &u, 0.0).unwrap();
        let b = rhs(&problem, &shifted, 0.0).unwrap();
        for (i, j) in g.interior() {
            assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-11);
        }
    }

    #[test]
    fn flux_antisymmetry_via_shared_edges() {
        // east flux of (i,j) equals minus the west flux of (i+1,j): both
        // sides of a shared edge see identical gradients, Q, E and w_e
        let g = grid(6, 1.0);
        let se = SurfaceEnergy::quadratic_form(2.0, 1.0, 1.0).unwrap();
        let u = random_field(g, 33);
        let w = w_field(&u, &se, &BoundaryCondition::NeumannHomogeneous, 0.0).unwrap();
        for (i, j) in [(2usize, 2usize), (3, 4), (1, 1)] {
            let east = EdgeId::new(&g, i, j, EdgeDir::East).unwrap();
            let west = EdgeId::new(&g, i + 1, j, EdgeDir::West).unwrap();
            let flux = |e: &EdgeId, nu: (f64, f64)| -> f64 {
                let (gu1, gu2) = edge_gradient(&u, e).unwrap();
                let (gw1, gw2) = edge_gradient(&w, e).unwrap();
                let eh = edge_hessian(&u, &se, e).unwrap();
                let q = edge_q(&u, e).unwrap();
                let we = edge_w(&w, e).unwrap();
                let (f1, f2) = eh.apply((gw1, gw2));
                (f1 - 0.5 * we * we / (q * q * q) * gu1) * nu.0
                    + (f2 - 0.5 * we * we / (q * q * q) * gu2) * nu.1
            };
            let fe = flux(&east, (1.0, 0.0));
            let fw = flux(&west, (-1.0, 0.0));
            assert!((fe + fw).abs() <= 1e-12, "{fe} vs {fw}");
        }
    }

    #[test]
    fn isotropic_curvature_matches_independent_stencil() {
        // independently coded isotropic stencil div(grad u / Q) over the
        // same edge geometry
        let g = grid(6, 1.0);
        let u = random_field(g, 55);
        let iso = SurfaceEnergy::isotropic();
        for (i, j) in g.interior() {
            let flux = |e: &EdgeId| -> (f64, f64) {
                let (g1, g2) = edge_gradient(&u, e).unwrap();
                let q = (1.0 + g1 * g1 + g2 * g2).sqrt();
                (g1 / q, g2 / q)
            };
            let east = flux(&EdgeId::new(&g, i, j, EdgeDir::East).unwrap()).0;
            let west = flux(&EdgeId::new(&g, i, j, EdgeDir::West).unwrap()).0;
            let north = flux(&EdgeId::new(&g, i, j, EdgeDir::North).unwrap()).1;
            let south = flux(&EdgeId::new(&g, i, j, EdgeDir::South).unwrap()).1;
            let independent = (east - west) / g.h1() + (north - south) / g.h2();
            let h = mean_curvature(&u, &iso, i, j).unwrap();
            assert!((h - independent).abs() <= 1e-12);
        }
    }

    #[test]
    fn rhs_detects_divergence() {
        let g = grid(5, 1.0);
        let problem = FlowProblem::new(
            g,
            SurfaceEnergy::isotropic(),
            BoundaryCondition::NeumannHomogeneous,
            None,
        )
        .unwrap();
        let mut values = vec![0.0; g.node_count()];
        values[g.idx(2, 2)] = f64::MAX; // overflows in the Q^3 products
        let err = rhs_values(&problem, &values, 0.25).unwrap_err();
        match err {
            Error::Divergence { t, .. } => assert_relative_eq!(t, 0.25),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn per_node_dirichlet_data_is_validated() {
        let g = grid(5, 1.0);
        let bad = BoundaryCondition::Dirichlet {
            g1: BoundaryData::PerNode(vec![0.0; 3]),
            g2: BoundaryData::zero(),
        };
        assert!(FlowProblem::new(g, SurfaceEnergy::isotropic(), bad, None).is_err());
    }
}
