//! Finite-difference form of the implicit Euler step.
//!
//! Every row of the system is a sum of one-dimensional line operators, one
//! per axis. Along an axis, order 2 always uses the three-point stencil;
//! order 4 uses the five-point stencil at knot indices and the three-point
//! stencil at midpoint indices. Neighbours beyond the boundary are mirrored
//! with [`ghost_map`]: `M` and `g` keep their sign, the velocity component
//! along the axis flips.
//!
//! Boundary rows also carry the normal flux term of the element assembly
//! (`-u_1/h`, `+u_N/h` for order 2; `-3u_1/(2h)`, `+3u_N/(2h)` for order 4).
//! It vanishes when the normal velocity is zero, and keeps mass exactly
//! conserved when it is not (Model 2 drifts).

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, Order};
use crate::problem::SampledFields;
use crate::sparse::{CsrMatrix, RowBuilder};

/// Result of mirroring an axis index into the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ghost {
    pub index: usize,
    /// `-1` for the velocity component normal to the reflecting boundary.
    pub velocity_sign: f64,
}

/// Mirrors a 0-based axis index across the nearest boundary node.
///
/// In 1-based terms: `0 -> 2`, `-1 -> 3`, `N+1 -> N-1`, `N+2 -> N-2`.
/// Reaching more than two points beyond the boundary is a stencil error.
pub fn ghost_map(grid: &Grid, index: isize) -> Result<Ghost> {
    reflect(grid.points_per_axis(), index)
}

fn reflect(n: usize, q: isize) -> Result<Ghost> {
    let last = n as isize - 1;
    let (index, sign) = if q < 0 {
        (-q, -1.0)
    } else if q > last {
        (2 * last - q, -1.0)
    } else {
        (q, 1.0)
    };
    if q < -2 || q > last + 2 || index < 0 || index > last {
        return Err(Error::Stencil(format!("index {q} is out of ghost range for {n} points")));
    }
    Ok(Ghost {
        index: index as usize,
        velocity_sign: sign,
    })
}

/// One stencil term: axis index after reflection, diffusion and advection
/// coefficients in finite-difference form (not yet multiplied by `dt`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Term {
    pub index: usize,
    pub diff: f64,
    pub adv: f64,
}

/// Line operator of row `p` along one axis with `n` points.
#[allow(clippy::too_many_arguments)]
pub(crate) fn line_terms(
    order: Order,
    n: usize,
    p: usize,
    h: f64,
    d: f64,
    m: &dyn Fn(usize) -> f64,
    vel: &dyn Fn(usize) -> f64,
    out: &mut Vec<Term>,
) -> Result<()> {
    out.clear();
    let pi = p as isize;
    let idx = |o: isize| reflect(n, pi + o).map(|g| g.index);
    let mm = |o: isize| reflect(n, pi + o).map(|g| m(g.index));
    let uu = |o: isize| reflect(n, pi + o).map(|g| g.velocity_sign * vel(g.index));
    let hh = h * h;
    let last = n - 1;
    let wide = order == Order::Fourth && p % 2 == 0;

    let flux = match order {
        Order::Second => 1.0,
        Order::Fourth => 1.5,
    };
    let correction = if p == 0 {
        -(flux * vel(0)) / h
    } else if p == last {
        (flux * vel(last)) / h
    } else {
        0.0
    };

    if wide {
        let c8 = d / (8.0 * hh);
        let (m_2, m_1, m0, m1, m2) = (mm(-2)?, mm(-1)?, mm(0)?, mm(1)?, mm(2)?);
        let far_l = 3.0 * (m_2 + m0) - 4.0 * m_1;
        let far_r = 3.0 * (m0 + m2) - 4.0 * m1;
        let near_l = 4.0 * m_2 + 12.0 * m0;
        let near_r = 4.0 * m2 + 12.0 * m0;
        let centre = ((m_2 + m2) + 4.0 * (m_1 + m1)) + 18.0 * m0;
        out.push(Term { index: idx(-2)?, diff: far_l * c8, adv: -uu(-2)? / (4.0 * h) });
        out.push(Term { index: idx(-1)?, diff: -(near_l * c8), adv: uu(-1)? / h });
        out.push(Term { index: p, diff: centre * c8, adv: correction });
        out.push(Term { index: idx(1)?, diff: -(near_r * c8), adv: -uu(1)? / h });
        out.push(Term { index: idx(2)?, diff: far_r * c8, adv: uu(2)? / (4.0 * h) });
    } else {
        let (m_1, m0, m1) = (mm(-1)?, mm(0)?, mm(1)?);
        let (left, centre, right) = match order {
            Order::Second => {
                let c2 = d / (2.0 * hh);
                (-((m_1 + m0) * c2), ((m_1 + m1) + 2.0 * m0) * c2, -((m0 + m1) * c2))
            }
            Order::Fourth => {
                let c4 = d / (4.0 * hh);
                (
                    -((3.0 * m_1 + m1) * c4),
                    (m_1 + m1) * (d / hh),
                    -((m_1 + 3.0 * m1) * c4),
                )
            }
        };
        out.push(Term { index: idx(-1)?, diff: left, adv: uu(-1)? / (2.0 * h) });
        out.push(Term { index: p, diff: centre, adv: correction });
        out.push(Term { index: idx(1)?, diff: right, adv: -uu(1)? / (2.0 * h) });
    }
    Ok(())
}

/// Assembled system `A_fd g^{n+1} = M g^n + dt f` and its parts.
///
/// `A_fd = Mdiag + dt * W^{-1} (A_diff + A_adv)` where `W` holds the lumped
/// quadrature weights.
#[derive(Clone, Debug)]
pub struct SchemeOperator {
    pub a_fd: CsrMatrix,
    pub weights: Vec<f64>,
    pub measure: Vec<f64>,
    pub a_diff: CsrMatrix,
    pub a_adv: CsrMatrix,
    pub dt: f64,
    pub diffusion: f64,
    pub grid: Grid,
}

impl SchemeOperator {
    pub fn order(&self) -> Order {
        self.grid.order()
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    /// Writes `A_fd` in coordinate format.
    pub fn write_coordinate<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.a_fd.write_coordinate(out)
    }
}

fn check_fields(grid: &Grid, fields: &SampledFields) -> Result<()> {
    let n = grid.len();
    for (name, len) in [
        ("measure", fields.measure.len()),
        ("u", fields.u.len()),
        ("v", fields.v.len()),
        ("source", fields.source.len()),
    ] {
        if len != n {
            return Err(Error::config(format!(
                "field {name} has {len} values but the grid has {n} points"
            )));
        }
    }
    Ok(())
}

/// Assembles the implicit Euler system for the grid's order and dimension.
pub fn assemble(grid: &Grid, fields: &SampledFields, diffusion: f64, dt: f64) -> Result<SchemeOperator> {
    check_fields(grid, fields)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("time step must be positive, got {dt}")));
    }
    if !(diffusion >= 0.0 && diffusion.is_finite()) {
        return Err(Error::config(format!("diffusion must be nonnegative, got {diffusion}")));
    }
    let n = grid.len();
    let np = grid.points_per_axis();
    let h = grid.spacing();
    let order = grid.order();
    let m = &fields.measure;
    let mut fd_rows = Vec::with_capacity(n);
    let mut diff_rows = Vec::with_capacity(n);
    let mut adv_rows = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(5);
    for k in 0..n {
        let (i, j) = grid.split(k);
        let mut fd = RowBuilder::new();
        let mut diff = RowBuilder::new();
        let mut adv = RowBuilder::new();
        fd.add(k, m[k]);
        let mut push = |terms: &[Term], col: &dyn Fn(usize) -> usize| {
            for t in terms {
                let c = col(t.index);
                fd.add(c, dt * (t.diff + t.adv));
                diff.add(c, t.diff);
                adv.add(c, t.adv);
            }
        };
        line_terms(order, np, i, h, diffusion, &|q| m[grid.flat(q, j)], &|q| fields.u[grid.flat(q, j)], &mut terms)?;
        push(&terms, &|q| grid.flat(q, j));
        if grid.dimension() == 2 {
            line_terms(order, np, j, h, diffusion, &|q| m[grid.flat(i, q)], &|q| fields.v[grid.flat(i, q)], &mut terms)?;
            push(&terms, &|q| grid.flat(i, q));
        }
        fd_rows.push(fd.entries().to_vec());
        diff_rows.push(diff.entries().to_vec());
        adv_rows.push(adv.entries().to_vec());
    }
    let w = grid.weights();
    Ok(SchemeOperator {
        a_fd: CsrMatrix::from_rows(n, fd_rows),
        weights: w.to_vec(),
        measure: m.clone(),
        a_diff: CsrMatrix::from_rows(n, diff_rows).scale_rows(w),
        a_adv: CsrMatrix::from_rows(n, adv_rows).scale_rows(w),
        dt,
        diffusion,
        grid: grid.clone(),
    })
}

/// Right-hand side `M g^n + dt f` in finite-difference form.
pub fn build_rhs(fields: &SampledFields, g_n: &[f64], dt: f64) -> Vec<f64> {
    fields
        .measure
        .iter()
        .zip(g_n)
        .zip(&fields.source)
        .map(|((m, g), f)| m * g + dt * f)
        .collect()
}

/// Discrete divergence matched to each point's stencils, in the sign
/// convention of the scheme (`(u_{i-1} - u_{i+1})/(2h)` for the narrow
/// stencil). It equals the row sums of the advection part, so
/// `A_fd 1 = M + dt * div` up to round-off in the diffusion part.
pub fn discrete_divergence(grid: &Grid, u: &[f64], v: &[f64]) -> Vec<f64> {
    let (dx, dy) = axis_divergence(grid, u, v);
    dx.iter().zip(&dy).map(|(a, b)| a + b).collect()
}

/// The x and y contributions to [`discrete_divergence`] separately; the y
/// part is zero in 1D.
pub fn axis_divergence(grid: &Grid, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let np = grid.points_per_axis();
    let h = grid.spacing();
    let mut terms = Vec::with_capacity(5);
    let one = |_: usize| 1.0;
    let mut dx = vec![0.0; grid.len()];
    let mut dy = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.split(k);
        line_terms(grid.order(), np, i, h, 0.0, &one, &|q| u[grid.flat(q, j)], &mut terms)
            .expect("in-range stencil");
        dx[k] = terms.iter().map(|t| t.adv).sum();
        if grid.dimension() == 2 {
            line_terms(grid.order(), np, j, h, 0.0, &one, &|q| v[grid.flat(i, q)], &mut terms)
                .expect("in-range stencil");
            dy[k] = terms.iter().map(|t| t.adv).sum();
        }
    }
    (dx, dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn unit_fields(n: usize) -> SampledFields {
        SampledFields::from_parts(vec![1.0; n], vec![0.0; n], vec![0.0; n])
    }

    #[test]
    fn ghost_map_examples() {
        let g = build_grid(&[(0.0, 1.0)], 2, Order::Fourth, 1).unwrap();
        // 1-based 0 -> 2
        assert_eq!(ghost_map(&g, -1).unwrap(), Ghost { index: 1, velocity_sign: -1.0 });
        // 1-based N+2 = 7 -> N-2 = 3
        assert_eq!(ghost_map(&g, 6).unwrap(), Ghost { index: 2, velocity_sign: -1.0 });
        assert_eq!(ghost_map(&g, 2).unwrap(), Ghost { index: 2, velocity_sign: 1.0 });
        assert!(matches!(ghost_map(&g, -3), Err(Error::Stencil(_))));
        assert!(matches!(ghost_map(&g, 7), Err(Error::Stencil(_))));
    }

    #[test]
    fn order2_interior_row_with_unit_measure() {
        let (d, dt) = (0.7, 0.3);
        let g = build_grid(&[(0.0, 1.0)], 8, Order::Second, 1).unwrap();
        let op = assemble(&g, &unit_fields(g.len()), d, dt).unwrap();
        let h = g.spacing();
        let r = dt * d / (h * h);
        assert!((op.a_fd.get(3, 2) + r).abs() < 1e-13 * r);
        assert!((op.a_fd.get(3, 3) - (1.0 + 2.0 * r)).abs() < 1e-13 * r);
        assert!((op.a_fd.get(3, 4) + r).abs() < 1e-13 * r);
        assert_eq!(op.a_fd.row(3).0.len(), 3);
    }

    #[test]
    fn order4_midpoint_row_with_unit_measure() {
        let (d, dt) = (1.3, 0.05);
        let g = build_grid(&[(0.0, 1.0)], 4, Order::Fourth, 1).unwrap();
        let op = assemble(&g, &unit_fields(g.len()), d, dt).unwrap();
        let h = g.spacing();
        let r = dt * d / (h * h);
        assert!((op.a_fd.get(3, 2) + r).abs() < 1e-13 * r);
        assert!((op.a_fd.get(3, 3) - (1.0 + 2.0 * r)).abs() < 1e-13 * r);
        assert!((op.a_fd.get(3, 4) + r).abs() < 1e-13 * r);
        // knot row: far neighbours get +r/4, near ones -2r
        assert!((op.a_fd.get(4, 2) - r / 4.0).abs() < 1e-13 * r);
        assert!((op.a_fd.get(4, 3) + 2.0 * r).abs() < 1e-13 * r);
        assert!((op.a_fd.get(4, 4) - (1.0 + 3.5 * r)).abs() < 1e-13 * r);
    }

    #[test]
    fn rhs_examples() {
        let mut f = unit_fields(3);
        assert_eq!(build_rhs(&f, &[1.0; 3], 0.1), vec![1.0; 3]);
        f.source = vec![1.0; 3];
        assert_eq!(build_rhs(&f, &[0.0; 3], 0.1), vec![0.1; 3]);
    }

    #[test]
    fn boundary_flux_term_restores_mass_conservation() {
        let g = build_grid(&[(0.0, 1.0)], 3, Order::Fourth, 1).unwrap();
        let n = g.len();
        let u: Vec<f64> = (0..n).map(|k| 0.3 + 0.1 * k as f64).collect();
        let f = SampledFields::from_parts(vec![1.0; n], u, vec![0.0; n]);
        let op = assemble(&g, &f, 0.4, 0.2).unwrap();
        for s in op.a_adv.column_sums().iter().chain(&op.a_diff.column_sums()) {
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_fields() {
        let g = build_grid(&[(0.0, 1.0)], 3, Order::Second, 1).unwrap();
        assert!(assemble(&g, &unit_fields(7), 1.0, 0.1).is_err());
        assert!(assemble(&g, &unit_fields(4), 1.0, 0.0).is_err());
    }
}
