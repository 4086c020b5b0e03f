//! Uniform tensor grids of Gauss-Lobatto points.
//!
//! The second-order scheme uses the two-point Gauss-Lobatto rule on every
//! cell, so the grid points are the cell vertices (`N = k + 1` per axis). The
//! fourth-order scheme uses the three-point rule on cells of width `2h`, which
//! adds the cell midpoints (`N = 2k + 1` per axis, always odd).
//!
//! Documentation uses 1-based indices `i, j = 1..=N`; storage is 0-based and
//! flattened row-major with `i` running fastest: the 1-based point `(i, j)`
//! lives at 1-based flat index `(j - 1) * N + i`, i.e. 0-based `j * N + i`.

use crate::error::{Error, Result};

/// Spatial order of the scheme; selects the Gauss-Lobatto rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    /// Q1 elements with 2-point Gauss-Lobatto quadrature.
    Second,
    /// Q2 elements with 3-point Gauss-Lobatto quadrature.
    Fourth,
}

impl Order {
    pub fn from_u32(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Order::Second),
            4 => Ok(Order::Fourth),
            other => Err(Error::config(format!("order must be 2 or 4, got {other}"))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
        }
    }

    /// Grid points per axis for `cells` elements.
    pub fn points_for_cells(self, cells: usize) -> usize {
        match self {
            Order::Second => cells + 1,
            Order::Fourth => 2 * cells + 1,
        }
    }

    /// Elements per axis for a grid with `points` points per axis.
    pub fn cells_for_points(self, points: usize) -> Result<usize> {
        match self {
            Order::Second if points >= 2 => Ok(points - 1),
            Order::Fourth if points >= 3 && points % 2 == 1 => Ok((points - 1) / 2),
            _ => Err(Error::config(format!(
                "{points} points per axis is not a valid order-{} grid",
                self.as_u32()
            ))),
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u32())
    }
}

/// Role of a grid point within its element(s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointKind {
    /// Vertex of a Q1 mesh (second-order grids).
    Vertex,
    /// Q2 element vertex: every index odd (1-based).
    Knot,
    /// Midpoint of a 1D Q2 element.
    Midpoint,
    /// Center of an edge parallel to the x-axis: `i` even, `j` odd.
    EdgeCenterX,
    /// Center of an edge parallel to the y-axis: `i` odd, `j` even.
    EdgeCenterY,
    /// Q2 cell center: both indices even.
    CellCenter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PointType {
    pub kind: PointKind,
    pub on_boundary: bool,
}

/// Immutable uniform grid on an interval or a rectangle.
#[derive(Clone, Debug)]
pub struct Grid {
    dimension: usize,
    bounds: Vec<(f64, f64)>,
    cells: usize,
    order: Order,
    points_per_axis: usize,
    spacing: f64,
    point_types: Vec<PointType>,
    weights: Vec<f64>,
    axis_weights: Vec<f64>,
}

/// Builds a uniform grid with `cells_per_axis` elements along every axis.
///
/// In 2D the two axes must have the same width so that the spacing is
/// isotropic; the stencils share a single `h`.
pub fn build_grid(
    bounds: &[(f64, f64)],
    cells_per_axis: usize,
    order: Order,
    dimension: usize,
) -> Result<Grid> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::config(format!("dimension must be 1 or 2, got {dimension}")));
    }
    if bounds.len() != dimension {
        return Err(Error::config(format!(
            "expected {dimension} axis bounds, got {}",
            bounds.len()
        )));
    }
    if cells_per_axis == 0 {
        return Err(Error::config("cells per axis must be at least 1"));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::config(format!("degenerate axis bounds [{lo}, {hi}]")));
        }
    }
    let points_per_axis = order.points_for_cells(cells_per_axis);
    let intervals = (points_per_axis - 1) as f64;
    let spacing = (bounds[0].1 - bounds[0].0) / intervals;
    if dimension == 2 {
        let hy = (bounds[1].1 - bounds[1].0) / intervals;
        if (hy - spacing).abs() > 1e-12 * spacing {
            return Err(Error::config(format!(
                "non-isotropic spacing: hx = {spacing}, hy = {hy}"
            )));
        }
    }

    let axis_weights = axis_quadrature_weights(order, points_per_axis, spacing);
    let n_total = points_per_axis.pow(dimension as u32);
    let mut point_types = Vec::with_capacity(n_total);
    let mut weights = Vec::with_capacity(n_total);
    for flat in 0..n_total {
        let (i, j) = (flat % points_per_axis, flat / points_per_axis);
        let last = points_per_axis - 1;
        if dimension == 1 {
            point_types.push(classify_1d(order, i, last));
            weights.push(axis_weights[i]);
        } else {
            point_types.push(classify_2d(order, i, j, last));
            weights.push(axis_weights[i] * axis_weights[j]);
        }
    }

    Ok(Grid {
        dimension,
        bounds: bounds.to_vec(),
        cells: cells_per_axis,
        order,
        points_per_axis,
        spacing,
        point_types,
        weights,
        axis_weights,
    })
}

/// Lumped Gauss-Lobatto weights of the grid (one per point).
pub fn quadrature_weights(grid: &Grid) -> Vec<f64> {
    grid.weights.clone()
}

fn axis_quadrature_weights(order: Order, n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let end = i == 0 || i == n - 1;
            match order {
                Order::Second if end => h / 2.0,
                Order::Second => h,
                Order::Fourth if end => h / 3.0,
                // 0-based even index = knot
                Order::Fourth if i % 2 == 0 => 2.0 * h / 3.0,
                Order::Fourth => 4.0 * h / 3.0,
            }
        })
        .collect()
}

fn classify_1d(order: Order, i: usize, last: usize) -> PointType {
    let on_boundary = i == 0 || i == last;
    let kind = match order {
        Order::Second => PointKind::Vertex,
        Order::Fourth if i % 2 == 0 => PointKind::Knot,
        Order::Fourth => PointKind::Midpoint,
    };
    PointType { kind, on_boundary }
}

fn classify_2d(order: Order, i: usize, j: usize, last: usize) -> PointType {
    let on_boundary = i == 0 || i == last || j == 0 || j == last;
    // 0-based even is 1-based odd
    let kind = match (order, i % 2 == 0, j % 2 == 0) {
        (Order::Second, _, _) => PointKind::Vertex,
        (Order::Fourth, true, true) => PointKind::Knot,
        (Order::Fourth, false, true) => PointKind::EdgeCenterX,
        (Order::Fourth, true, false) => PointKind::EdgeCenterY,
        (Order::Fourth, false, false) => PointKind::CellCenter,
    };
    PointType { kind, on_boundary }
}

impl Grid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.point_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_types.is_empty()
    }

    /// Grid spacing `h` (half the element width for order 4).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn point_type(&self, index: usize) -> PointType {
        self.point_types[index]
    }

    pub fn point_types(&self) -> &[PointType] {
        &self.point_types
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One-dimensional weights along an axis; 2D weights are their products.
    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Coordinate of the 0-based index `i` along `axis`.
    ///
    /// Computed as `a + (b - a) * i / (N - 1)` so that nested grids agree
    /// bitwise on shared points.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        lo + ((hi - lo) * i as f64) / (self.points_per_axis - 1) as f64
    }

    /// Physical coordinates of a flat index; `y` is 0 in 1D.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.split(index);
        let x = self.coordinate(0, i);
        let y = if self.dimension == 2 { self.coordinate(1, j) } else { 0.0 };
        (x, y)
    }

    /// Flat index of the 0-based axis indices `(i, j)`; `j` is ignored in 1D.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        if self.dimension == 1 {
            i
        } else {
            j * self.points_per_axis + i
        }
    }

    /// 0-based axis indices of a flat index; `j = 0` in 1D.
    pub fn split(&self, index: usize) -> (usize, usize) {
        if self.dimension == 1 {
            (index, 0)
        } else {
            (index % self.points_per_axis, index / self.points_per_axis)
        }
    }

    /// True when the 0-based axis index is a knot position (1-based odd).
    pub fn is_knot_index(&self, i: usize) -> bool {
        match self.order {
            Order::Second => true,
            Order::Fourth => i % 2 == 0,
        }
    }

    /// True when rows at this axis index use the five-point (wide) stencil:
    /// fourth order at knot positions.
    pub fn is_wide_index(&self, i: usize) -> bool {
        self.order == Order::Fourth && i % 2 == 0
    }

    /// Coordinate of a possibly out-of-range axis index (ghost layers).
    pub fn coordinate_ext(&self, axis: usize, i: isize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        lo + ((hi - lo) * i as f64) / (self.points_per_axis - 1) as f64
    }

    /// Same shape of grid with a different number of cells.
    pub fn with_cells(&self, cells: usize) -> Result<Grid> {
        build_grid(&self.bounds, cells, self.order, self.dimension)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn order4_1d_point_types_follow_parity() {
        let g = build_grid(&[(-1.0, 1.0)], 2, Order::Fourth, 1).unwrap();
        assert_eq!(g.points_per_axis(), 5);
        assert_eq!(g.spacing(), 0.5);
        let kinds: Vec<_> = g.point_types().iter().map(|t| (t.kind, t.on_boundary)).collect();
        assert_eq!(
            kinds,
            vec![
                (PointKind::Knot, true),
                (PointKind::Midpoint, false),
                (PointKind::Knot, false),
                (PointKind::Midpoint, false),
                (PointKind::Knot, true),
            ]
        );
    }

    #[test]
    fn order2_2d_square() {
        let g = build_grid(&[(0.0, PI), (0.0, PI)], 4, Order::Second, 2).unwrap();
        assert_eq!(g.points_per_axis(), 5);
        assert_eq!(g.len(), 25);
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        assert!(!g.point_type(g.flat(2, 2)).on_boundary);
        assert!(g.point_type(g.flat(0, 3)).on_boundary);
    }

    #[test]
    fn coarse_sampling_grid_is_101_by_101() {
        let g = build_grid(&[(-4.5, 4.5), (-4.5, 4.5)], 100, Order::Second, 2).unwrap();
        assert_eq!(g.points_per_axis(), 101);
        assert_eq!(g.len(), 101 * 101);
    }

    #[test]
    fn order4_single_cell_weights() {
        let h = 0.25;
        let g = build_grid(&[(0.0, 2.0 * h)], 1, Order::Fourth, 1).unwrap();
        let w = quadrature_weights(&g);
        let expect = [h / 3.0, 4.0 * h / 3.0, h / 3.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn order4_2d_cell_center_weight_is_tensor_product() {
        let g = build_grid(&[(0.0, 1.0), (0.0, 1.0)], 3, Order::Fourth, 2).unwrap();
        let h = g.spacing();
        let idx = g.flat(3, 3);
        assert_eq!(g.point_type(idx).kind, PointKind::CellCenter);
        assert!((g.weights()[idx] - (4.0 * h / 3.0).powi(2)).abs() < 1e-15);
        assert_eq!(g.point_type(g.flat(1, 2)).kind, PointKind::EdgeCenterX);
        assert_eq!(g.point_type(g.flat(2, 1)).kind, PointKind::EdgeCenterY);
        assert_eq!(g.point_type(g.flat(2, 4)).kind, PointKind::Knot);
    }

    #[test]
    fn weights_sum_to_measure_for_all_configurations() {
        for order in [Order::Second, Order::Fourth] {
            for dim in [1, 2] {
                for k in 1..=64 {
                    let bounds = vec![(-0.7, 2.3); dim];
                    let g = build_grid(&bounds, k, order, dim).unwrap();
                    // compensated sum, so the check measures the weights and
                    // not the accumulation error of ~10^4 additions
                    let (mut sum, mut comp) = (0.0f64, 0.0f64);
                    for &w in g.weights() {
                        let t = sum + w;
                        comp += if sum.abs() >= w.abs() { (sum - t) + w } else { (w - t) + sum };
                        sum = t;
                    }
                    let sum = sum + comp;
                    assert!(
                        (sum - g.measure()).abs() <= 1e-13 * g.measure(),
                        "order {order} dim {dim} k {k}: {sum} vs {}",
                        g.measure()
                    );
                    assert!(g.weights().iter().all(|&w| w > 0.0));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(Order::from_u32(3).is_err());
        assert!(build_grid(&[(0.0, 1.0)], 0, Order::Second, 1).is_err());
        assert!(build_grid(&[(1.0, 1.0)], 2, Order::Second, 1).is_err());
        assert!(build_grid(&[(0.0, 1.0)], 2, Order::Second, 3).is_err());
        assert!(build_grid(&[(0.0, 1.0), (0.0, 2.0)], 2, Order::Second, 2).is_err());
    }

    #[test]
    fn nested_grids_share_coordinates_bitwise() {
        let coarse = build_grid(&[(-4.5, 4.5)], 10, Order::Second, 1).unwrap();
        let fine = coarse.with_cells(20).unwrap();
        for i in 0..coarse.points_per_axis() {
            assert_eq!(coarse.coordinate(0, i), fine.coordinate(0, 2 * i));
        }
    }
}
