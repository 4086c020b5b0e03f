//! Grid-refinement study against the manufactured steady solution.

use std::io::Write;

use crate::assembly::assemble;
use crate::error::{Error, Result};
use crate::grid::Order;
use crate::krylov::SolveOptions;
use crate::problem::{accuracy, sample, AccuracySource, Sampler};
use crate::simulate::{run, Entropy, StopRule};

/// Grid sizes (points per axis) of the reference table.
pub const TABLE_POINTS: [usize; 5] = [9, 17, 33, 65, 129];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridError {
    pub points: usize,
    pub steps: usize,
    pub dt: f64,
    /// `sqrt(h^2 sum e^2)`.
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub points: usize,
    pub l2_error: f64,
    pub l2_order: Option<f64>,
    pub linf_error: f64,
    pub linf_order: Option<f64>,
}

/// Error at `final_time` on an `points x points` grid, starting from the
/// exact solution and taking `steps` equal steps.
pub fn manufactured_error(
    order: Order,
    points: usize,
    steps: usize,
    final_time: f64,
    variant: AccuracySource,
) -> Result<GridError> {
    if steps == 0 {
        return Err(Error::config("at least one time step is required"));
    }
    let problem = accuracy(variant);
    let grid = problem.grid(order.cells_for_points(points)?, order)?;
    let fields = sample(&problem, &grid)?;
    let dt = final_time / steps as f64;
    let scheme = assemble(&grid, &fields, problem.diffusion, dt)?;
    let out = run(
        &scheme,
        &fields,
        StopRule::Steps(steps),
        Entropy::Chi2,
        &SolveOptions::default(),
    )?;
    let exact = match &problem.exact_density {
        Some(Sampler::Analytic(f)) => f.clone(),
        _ => return Err(Error::config("the accuracy problem has no closed-form solution")),
    };
    let h = grid.spacing();
    let mut sum = 0.0;
    let mut linf = 0.0f64;
    for (k, rho) in out.state.rho.iter().enumerate() {
        let (x, y) = grid.point(k);
        let e = rho - exact(x, y);
        sum += e * e;
        linf = linf.max(e.abs());
    }
    Ok(GridError {
        points,
        steps,
        dt,
        l2: (h * h * sum).sqrt(),
        linf,
    })
}

/// Runs every grid to `final_time` with `dt` as close to `h` as an integer
/// step count allows (`ceil(T / h)` steps), and computes observed orders
/// as base-2 logarithms of successive error ratios.
pub fn convergence_study(
    order: Order,
    points: &[usize],
    final_time: f64,
    variant: AccuracySource,
) -> Result<Vec<ConvergenceRow>> {
    if points.len() < 2 {
        return Err(Error::config("the convergence study needs at least two grids"));
    }
    let problem = accuracy(variant);
    let span = problem.bounds[0].1 - problem.bounds[0].0;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(points.len());
    for &n in points {
        if n < 2 {
            return Err(Error::config(format!("grid with {n} points per axis is too small")));
        }
        let h = span / (n - 1) as f64;
        let steps = (final_time / h).ceil().max(1.0) as usize;
        let e = manufactured_error(order, n, steps, final_time, variant)?;
        let prev = rows.last();
        rows.push(ConvergenceRow {
            points: n,
            l2_error: e.l2,
            l2_order: prev.map(|p| (p.l2_error / e.l2).log2()),
            linf_error: e.linf,
            linf_order: prev.map(|p| (p.linf_error / e.linf).log2()),
        });
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "N,l2_error,l2_order,linf_error,linf_order")?;
    let opt = |o: Option<f64>| o.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{},{:.16e},{}",
            r.points,
            r.l2_error,
            opt(r.l2_order),
            r.linf_error,
            opt(r.linf_order)
        )?;
    }
    Ok(())
}
