//! Numerical grid, its closure and boundary, the dual finite volume mesh and
//! the low-level stencil evaluations (edge derivatives, corner averages)
//! every other module builds on.
//!
//! Nodes live at `(x_origin + i*h1, y_origin + j*h2)` for `0 <= i <= n1`,
//! `0 <= j <= n2`. Interior nodes are `1..n1 x 1..n2`; each interior node
//! owns a dual finite volume of size `h1 x h2` centred at the node. Grid
//! functions are stored j-outer / i-inner so CSV output is deterministic.

use crate::error::{Error, Result};

/// Rectangular node lattice with dual finite volume geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_origin: f64,
    y_origin: f64,
    l1: f64,
    l2: f64,
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
}

impl Grid {
    /// Grid over `[x_origin, x_origin + l1] x [y_origin, y_origin + l2]`
    /// with `n1 x n2` cells per axis. Requires `n1, n2 >= 2` and positive
    /// edge lengths.
    pub fn new(
        x_origin: f64,
        y_origin: f64,
        l1: f64,
        l2: f64,
        n1: usize,
        n2: usize,
    ) -> Result<Grid> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Contract(format!(
                "grid needs at least 2 cells per axis, got n1 = {n1}, n2 = {n2}"
            )));
        }
        if !(l1 > 0.0 && l1.is_finite()) || !(l2 > 0.0 && l2.is_finite()) {
            return Err(Error::Contract(format!(
                "grid edge lengths must be positive and finite, got l1 = {l1}, l2 = {l2}"
            )));
        }
        if !x_origin.is_finite() || !y_origin.is_finite() {
            return Err(Error::Contract("grid origin must be finite".into()));
        }
        Ok(Grid {
            x_origin,
            y_origin,
            l1,
            l2,
            n1,
            n2,
            h1: l1 / n1 as f64,
            h2: l2 / n2 as f64,
        })
    }

    /// Grid over `[x_min, x_max] x [y_min, y_max]`.
    pub fn from_bounds(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        n1: usize,
        n2: usize,
    ) -> Result<Grid> {
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::Contract(format!(
                "domain bounds must satisfy x_min < x_max and y_min < y_max, \
                 got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Grid::new(x_min, y_min, x_max - x_min, y_max - y_min, n1, n2)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn x_origin(&self) -> f64 {
        self.x_origin
    }

    pub fn y_origin(&self) -> f64 {
        self.y_origin
    }

    /// x-coordinate of node column `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_origin + i as f64 * self.h1
    }

    /// y-coordinate of node row `j`.
    pub fn y(&self, j: usize) -> f64 {
        self.y_origin + j as f64 * self.h2
    }

    /// Nodes in the closure, `(n1 + 1) * (n2 + 1)`.
    pub fn node_count(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    /// Nodes on the boundary of the closure.
    pub fn boundary_count(&self) -> usize {
        2 * (self.n1 + 1) + 2 * (self.n2 - 1)
    }

    /// Flat index of node `(i, j)`; j-outer, i-inner.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n1 && j <= self.n2);
        j * (self.n1 + 1) + i
    }

    #[inline]
    pub fn in_closure(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && i <= self.n1 as i64 && j <= self.n2 as i64
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 1 && i < self.n1 && j >= 1 && j < self.n2
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i <= self.n1 && j <= self.n2 && !self.is_interior(i, j)
    }

    /// Interior nodes in j-outer / i-inner order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n1, n2) = (self.n1, self.n2);
        (1..n2).flat_map(move |j| (1..n1).map(move |i| (i, j)))
    }

    /// All closure nodes in j-outer / i-inner order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n1, n2) = (self.n1, self.n2);
        (0..=n2).flat_map(move |j| (0..=n1).map(move |i| (i, j)))
    }

    /// Boundary nodes in j-outer / i-inner order. This order defines the
    /// layout of per-node Dirichlet data arrays.
    pub fn boundary_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let g = *self;
        self.nodes().filter(move |&(i, j)| g.is_boundary(i, j))
    }
}

/// Scalar field sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> GridFunction {
        GridFunction {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Sample `f(x, y)` at every node of the closure.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> GridFunction {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..=grid.n2() {
            for i in 0..=grid.n1() {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        GridFunction { grid, values }
    }

    /// Internal constructor bypassing the finiteness scan; solver pipelines
    /// check their own output instead.
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> GridFunction {
        debug_assert_eq!(values.len(), grid.node_count());
        GridFunction { grid, values }
    }

    /// Wrap an existing value vector; checks length and finiteness.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.node_count() {
            return Err(Error::Contract(format!(
                "value count {} does not match grid node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let i = k % (grid.n1() + 1);
            let j = k / (grid.n1() + 1);
            return Err(Error::Divergence { i, j, t: f64::NAN });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute value over interior nodes.
    pub fn max_abs_interior(&self) -> f64 {
        self.grid
            .interior()
            .map(|(i, j)| self.get(i, j).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for GridFunction {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[self.grid.idx(i, j)]
    }
}

impl std::ops::IndexMut<(usize, usize)> for GridFunction {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }
}

/// Direction of one of the four dual-volume boundary segments of an
/// interior node, named after the neighbour node it faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeDir {
    East,
    North,
    West,
    South,
}

impl EdgeDir {
    pub const ALL: [EdgeDir; 4] = [EdgeDir::East, EdgeDir::North, EdgeDir::West, EdgeDir::South];

    /// Offset to the neighbour node across the edge.
    pub fn offset(self) -> (i64, i64) {
        match self {
            EdgeDir::East => (1, 0),
            EdgeDir::North => (0, 1),
            EdgeDir::West => (-1, 0),
            EdgeDir::South => (0, -1),
        }
    }

    /// Outer unit normal of the dual volume on this edge.
    pub fn normal(self) -> (f64, f64) {
        match self {
            EdgeDir::East => (1.0, 0.0),
            EdgeDir::North => (0.0, 1.0),
            EdgeDir::West => (-1.0, 0.0),
            EdgeDir::South => (0.0, -1.0),
        }
    }
}

/// One dual-volume boundary segment: the edge of the finite volume of the
/// interior node `(i, j)` facing `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId {
    i: usize,
    j: usize,
    dir: EdgeDir,
}

impl EdgeId {
    /// Requires the owner node to be interior, which keeps every stencil
    /// node of the edge inside the closure.
    pub fn new(grid: &Grid, i: usize, j: usize, dir: EdgeDir) -> Result<EdgeId> {
        if !grid.is_interior(i, j) {
            return Err(Error::BoundaryStencil { i, j });
        }
        let (di, dj) = dir.offset();
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if !grid.in_closure(ni, nj) {
            return Err(Error::OutsideClosure {
                i: ni,
                j: nj,
                n1: grid.n1(),
                n2: grid.n2(),
            });
        }
        Ok(EdgeId { i, j, dir })
    }

    pub fn node(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn dir(&self) -> EdgeDir {
        self.dir
    }

    /// Neighbour node across the edge.
    pub fn neighbour(&self) -> (usize, usize) {
        let (di, dj) = self.dir.offset();
        ((self.i as i64 + di) as usize, (self.j as i64 + dj) as usize)
    }

    /// Length of the edge segment: `h2` for east/west edges, `h1` for
    /// north/south ones.
    pub fn length(&self, grid: &Grid) -> f64 {
        match self.dir {
            EdgeDir::East | EdgeDir::West => grid.h2(),
            EdgeDir::North | EdgeDir::South => grid.h1(),
        }
    }
}

/// Four-point average of `u` over the cell corner `(i + sx/2, j + sy/2)`:
/// `(u_ij + u_(i+sx)j + u_i(j+sy) + u_(i+sx)(j+sy)) / 4` with `sx, sy` in
/// `{-1, +1}`.
pub fn corner_average(u: &GridFunction, i: usize, j: usize, sx: i8, sy: i8) -> Result<f64> {
    if !(sx == 1 || sx == -1) || !(sy == 1 || sy == -1) {
        return Err(Error::Contract(format!(
            "corner_average signs must be +-1, got sx = {sx}, sy = {sy}"
        )));
    }
    let g = u.grid();
    let (ii, jj) = (i as i64 + sx as i64, j as i64 + sy as i64);
    if !g.in_closure(i as i64, j as i64) {
        return Err(Error::OutsideClosure {
            i: i as i64,
            j: j as i64,
            n1: g.n1(),
            n2: g.n2(),
        });
    }
    if !g.in_closure(ii, jj) {
        return Err(Error::OutsideClosure {
            i: ii,
            j: jj,
            n1: g.n1(),
            n2: g.n2(),
        });
    }
    Ok(corner_average_unchecked(u, i, j, ii as usize, jj as usize))
}

#[inline]
fn corner_average_unchecked(u: &GridFunction, i: usize, j: usize, ii: usize, jj: usize) -> f64 {
    // canonical summation order so the average is bit-identical no matter
    // which of the four nodes owns the stencil
    let (i0, i1) = (i.min(ii), i.max(ii));
    let (j0, j1) = (j.min(jj), j.max(jj));
    0.25 * ((u.get(i0, j0) + u.get(i1, j0)) + (u.get(i0, j1) + u.get(i1, j1)))
}

/// Finite difference approximation of `(d u / d x1, d u / d x2)` at the
/// midpoint of the edge: the normal component by a two-point difference
/// across the edge, the tangential component by differencing the two corner
/// averages adjacent to the edge.
pub fn edge_gradient(u: &GridFunction, e: &EdgeId) -> Result<(f64, f64)> {
    let g = u.grid();
    let (i, j) = e.node();
    if !g.is_interior(i, j) {
        return Err(Error::BoundaryStencil { i, j });
    }
    Ok(edge_gradient_unchecked(u, i, j, e.dir()))
}

/// Stencil arithmetic shared by the checked operation and the solver sweeps.
/// Caller guarantees `(i, j)` interior.
#[inline]
pub(crate) fn edge_gradient_unchecked(
    u: &GridFunction,
    i: usize,
    j: usize,
    dir: EdgeDir,
) -> (f64, f64) {
    let g = u.grid();
    let (h1, h2) = (g.h1(), g.h2());
    match dir {
        EdgeDir::East => {
            let dx1 = (u.get(i + 1, j) - u.get(i, j)) / h1;
            let ne = corner_average_unchecked(u, i, j, i + 1, j + 1);
            let se = corner_average_unchecked(u, i, j, i + 1, j - 1);
            (dx1, (ne - se) / h2)
        }
        EdgeDir::West => {
            let dx1 = (u.get(i, j) - u.get(i - 1, j)) / h1;
            let nw = corner_average_unchecked(u, i, j, i - 1, j + 1);
            let sw = corner_average_unchecked(u, i, j, i - 1, j - 1);
            (dx1, (nw - sw) / h2)
        }
        EdgeDir::North => {
            let dx2 = (u.get(i, j + 1) - u.get(i, j)) / h2;
            let ne = corner_average_unchecked(u, i, j, i + 1, j + 1);
            let nw = corner_average_unchecked(u, i, j, i - 1, j + 1);
            ((ne - nw) / h1, dx2)
        }
        EdgeDir::South => {
            let dx2 = (u.get(i, j) - u.get(i, j - 1)) / h2;
            let se = corner_average_unchecked(u, i, j, i + 1, j - 1);
            let sw = corner_average_unchecked(u, i, j, i - 1, j - 1);
            ((se - sw) / h1, dx2)
        }
    }
}

/// Gradient on the vertical dual-mesh segment between nodes `(i, j)` and
/// `(i + 1, j)`; the same numbers as `edge_gradient` for the east edge of
/// `(i, j)` and the west edge of `(i + 1, j)`. Valid for `0 <= i < n1`,
/// `1 <= j < n2`.
#[inline]
pub(crate) fn h_edge_gradient(u: &GridFunction, i: usize, j: usize) -> (f64, f64) {
    let g = u.grid();
    debug_assert!(i < g.n1() && j >= 1 && j < g.n2());
    let dx1 = (u.get(i + 1, j) - u.get(i, j)) / g.h1();
    let north = corner_average_unchecked(u, i, j, i + 1, j + 1);
    let south = corner_average_unchecked(u, i, j, i + 1, j - 1);
    (dx1, (north - south) / g.h2())
}

/// Gradient on the horizontal dual-mesh segment between nodes `(i, j)` and
/// `(i, j + 1)`. Valid for `1 <= i < n1`, `0 <= j < n2`.
#[inline]
pub(crate) fn v_edge_gradient(u: &GridFunction, i: usize, j: usize) -> (f64, f64) {
    let g = u.grid();
    debug_assert!(i >= 1 && i < g.n1() && j < g.n2());
    let dx2 = (u.get(i, j + 1) - u.get(i, j)) / g.h2();
    let east = corner_average_unchecked(u, i, j, i + 1, j + 1);
    let west = corner_average_unchecked(u, i, j, i - 1, j + 1);
    ((east - west) / g.h1(), dx2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(0.0, 0.0, 1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn node_coordinates_and_counts() {
        let g = Grid::new(-1.0, 2.0, 2.0, 1.0, 4, 2).unwrap();
        assert_relative_eq!(g.h1(), 0.5);
        assert_relative_eq!(g.h2(), 0.5);
        assert_relative_eq!(g.x(0), -1.0);
        assert_relative_eq!(g.x(4), 1.0);
        assert_relative_eq!(g.y(2), 3.0);
        assert_eq!(g.node_count(), 15);
        assert_eq!(g.boundary_count(), 12);
        assert_eq!(g.boundary_nodes().count(), 12);
        assert_eq!(g.interior().count(), 3);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(0.0, 0.0, 1.0, 1.0, 1, 4).is_err());
        assert!(Grid::new(0.0, 0.0, -1.0, 1.0, 4, 4).is_err());
        assert!(Grid::from_bounds(1.0, 1.0, 0.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn storage_is_j_outer_i_inner() {
        let g = unit_grid(3);
        let u = GridFunction::from_fn(g, |x, y| x + 10.0 * y);
        // idx(i, j) = j * 4 + i on a 3x3-cell grid
        assert_eq!(g.idx(2, 1), 6);
        assert_relative_eq!(u.values()[6], u.get(2, 1));
    }

    #[test]
    fn from_values_rejects_non_finite() {
        let g = unit_grid(2);
        let mut v = vec![0.0; g.node_count()];
        v[4] = f64::NAN;
        assert!(GridFunction::from_values(g, v).is_err());
    }

    #[test]
    fn corner_average_constant_field() {
        let g = unit_grid(4);
        let u = GridFunction::from_fn(g, |_, _| 3.5);
        assert_relative_eq!(corner_average(&u, 1, 1, 1, 1).unwrap(), 3.5);
    }

    #[test]
    fn corner_average_hand_case() {
        // u_ij = 0, u_(i+1)j = 1, u_i(j+1) = 1, u_(i+1)(j+1) = 2 -> 1.0
        let g = unit_grid(2);
        let mut u = GridFunction::zeros(g);
        u.set(1, 1, 0.0);
        u.set(2, 1, 1.0);
        u.set(1, 2, 1.0);
        u.set(2, 2, 2.0);
        assert_relative_eq!(corner_average(&u, 1, 1, 1, 1).unwrap(), 1.0);
    }

    #[test]
    fn corner_average_matches_direct_sums() {
        // direct four-term summation oracle on a random 4x4-cell field
        let g = unit_grid(4);
        let mut state = 88172645463325252u64;
        let mut rnd = move || {
            // xorshift64
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let u = GridFunction::from_fn(g, |_, _| rnd());
        for (i, j) in [(1usize, 1usize), (2, 2), (3, 3), (2, 1)] {
            for (sx, sy) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                let ii = (i as i64 + sx as i64) as usize;
                let jj = (j as i64 + sy as i64) as usize;
                let direct = 0.25 * (u.get(i, j) + u.get(ii, j) + u.get(i, jj) + u.get(ii, jj));
                assert_relative_eq!(corner_average(&u, i, j, sx, sy).unwrap(), direct);
            }
        }
    }

    #[test]
    fn corner_average_errors_name_offending_node() {
        let g = unit_grid(2);
        let u = GridFunction::zeros(g);
        let err = corner_average(&u, 0, 0, -1, 1).unwrap_err();
        match err {
            Error::OutsideClosure { i, j, .. } => {
                assert_eq!((i, j), (-1, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_gradient_reproduces_linear_fields() {
        let g = Grid::new(0.0, 0.0, 2.0, 3.0, 5, 6).unwrap();
        let ux = GridFunction::from_fn(g, |x, _| x);
        let uy = GridFunction::from_fn(g, |_, y| y);
        for dir in EdgeDir::ALL {
            let e = EdgeId::new(&g, 2, 3, dir).unwrap();
            let (gx1, gx2) = edge_gradient(&ux, &e).unwrap();
            assert_relative_eq!(gx1, 1.0, epsilon = 1e-13);
            assert_relative_eq!(gx2, 0.0, epsilon = 1e-13);
            let (gy1, gy2) = edge_gradient(&uy, &e).unwrap();
            assert_relative_eq!(gy1, 0.0, epsilon = 1e-13);
            assert_relative_eq!(gy2, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn edge_gradient_bilinear_hand_stencils() {
        // u = x*y on h1 = h2 = 0.5; direct stencil arithmetic oracle at (2, 2),
        // i.e. (x, y) = (1, 1). East: dx1 = (1.5*1 - 1*1)/0.5 = 1, dx2 = corner
        // averages ((1.25*1.25 + ...) expanded below).
        let g = Grid::new(0.0, 0.0, 2.0, 2.0, 4, 4).unwrap();
        let u = GridFunction::from_fn(g, |x, y| x * y);
        let ca = |i: usize, j: usize, sx: i8, sy: i8| corner_average(&u, i, j, sx, sy).unwrap();

        let east = EdgeId::new(&g, 2, 2, EdgeDir::East).unwrap();
        let (d1, d2) = edge_gradient(&u, &east).unwrap();
        assert_relative_eq!(d1, (u.get(3, 2) - u.get(2, 2)) / 0.5);
        assert_relative_eq!(d2, (ca(2, 2, 1, 1) - ca(2, 2, 1, -1)) / 0.5);
        // analytic check: d/dx(xy) = y = 1 at the east edge midpoint
        assert_relative_eq!(d1, 1.0);
        assert_relative_eq!(d2, 1.25);

        let south = EdgeId::new(&g, 2, 2, EdgeDir::South).unwrap();
        let (d1, d2) = edge_gradient(&u, &south).unwrap();
        assert_relative_eq!(d1, (ca(2, 2, 1, -1) - ca(2, 2, -1, -1)) / 0.5);
        assert_relative_eq!(d2, (u.get(2, 2) - u.get(2, 1)) / 0.5);
        assert_relative_eq!(d1, 0.75);
        assert_relative_eq!(d2, 1.0);
    }

    #[test]
    fn edge_ids_reject_non_interior_owners() {
        let g = unit_grid(3);
        assert!(EdgeId::new(&g, 0, 1, EdgeDir::East).is_err());
        assert!(EdgeId::new(&g, 3, 1, EdgeDir::East).is_err());
        assert!(EdgeId::new(&g, 1, 1, EdgeDir::East).is_ok());
    }

    proptest! {
        #[test]
        fn edge_gradient_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            seed in any::<u64>(),
        ) {
            let g = unit_grid(5);
            let mut s = seed | 1;
            let mut rnd = move || {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let u = GridFunction::from_fn(g, |_, _| rnd());
            let v = GridFunction::from_fn(g, |_, _| rnd());
            let mut au_bv = GridFunction::zeros(g);
            for j in 0..=g.n2() {
                for i in 0..=g.n1() {
                    au_bv.set(i, j, a * u.get(i, j) + b * v.get(i, j));
                }
            }
            for (i, j) in [(1usize, 1usize), (2, 3), (4, 4), (3, 2)] {
                for dir in EdgeDir::ALL {
                    let e = EdgeId::new(&g, i, j, dir).unwrap();
                    let (cu1, cu2) = edge_gradient(&u, &e).unwrap();
                    let (cv1, cv2) = edge_gradient(&v, &e).unwrap();
                    let (c1, c2) = edge_gradient(&au_bv, &e).unwrap();
                    let scale = 1.0 + c1.abs().max(c2.abs());
                    prop_assert!((c1 - (a * cu1 + b * cv1)).abs() <= 1e-13 * scale);
                    prop_assert!((c2 - (a * cu2 + b * cv2)).abs() <= 1e-13 * scale);
                }
            }
        }

        #[test]
        fn edge_gradient_exact_on_affine(
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
            delta in -2.0f64..2.0,
        ) {
            let g = Grid::new(-1.0, -1.0, 2.0, 2.0, 4, 5).unwrap();
            let u = GridFunction::from_fn(g, |x, y| alpha + beta * x + delta * y);
            for (i, j) in [(1usize, 1usize), (2, 2), (3, 4), (1, 3)] {
                for dir in EdgeDir::ALL {
                    let e = EdgeId::new(&g, i, j, dir).unwrap();
                    let (d1, d2) = edge_gradient(&u, &e).unwrap();
                    prop_assert!((d1 - beta).abs() <= 1e-13 * (1.0 + beta.abs()));
                    prop_assert!((d2 - delta).abs() <= 1e-13 * (1.0 + delta.abs()));
                }
            }
        }

        #[test]
        fn corner_average_is_symmetric(seed in any::<u64>()) {
            let g = unit_grid(4);
            let mut s = seed | 1;
            let mut rnd = move || {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let u = GridFunction::from_fn(g, |_, _| rnd());
            for (i, j) in [(1usize, 1usize), (2, 2), (1, 2)] {
                let a = corner_average(&u, i, j, 1, 1).unwrap();
                let b = corner_average(&u, i + 1, j + 1, -1, -1).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
