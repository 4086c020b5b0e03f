//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fokker_planck::grid::{build_grid, Grid, Order};
use fokker_planck::problem::SampledFields;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(order: Order, cells: usize) -> Grid {
    build_grid(&[(0.0, 1.0)], cells, order, 1).unwrap()
}

pub fn square(order: Order, cells: usize) -> Grid {
    build_grid(&[(0.0, 1.0), (0.0, 1.0)], cells, order, 2).unwrap()
}

/// Random positive measure in `[lo, hi]` and velocities in `[-vmax, vmax]`,
/// boundary normal components included (no zeroing).
pub fn random_fields(grid: &Grid, rng: &mut impl Rng, lo: f64, hi: f64, vmax: f64) -> SampledFields {
    let n = grid.len();
    let m: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-vmax..=vmax)).collect();
    let v: Vec<f64> = if grid.dimension() == 2 {
        (0..n).map(|_| rng.gen_range(-vmax..=vmax)).collect()
    } else {
        vec![0.0; n]
    };
    SampledFields::from_parts(m, u, v)
}

/// Element data of the one-dimensional Gauss-Lobatto basis: nodal weights
/// and `dl[a][q]`, the derivative of local basis `a` at local node `q`.
fn element_1d(order: Order, h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    match order {
        Order::Second => (vec![h / 2.0, h / 2.0], vec![vec![-1.0 / h; 2], vec![1.0 / h; 2]]),
        Order::Fourth => (
            vec![h / 3.0, 4.0 * h / 3.0, h / 3.0],
            vec![
                vec![-1.5 / h, -0.5 / h, 0.5 / h],
                vec![2.0 / h, 0.0, -2.0 / h],
                vec![-0.5 / h, 0.5 / h, 1.5 / h],
            ],
        ),
    }
}

/// Element-by-element Gauss-Lobatto assembly of the weak forms
/// `D (M grad g, grad phi_i)` and `(u g, grad phi_i)` with the lumped
/// quadrature collocated at the nodes and zero total flux on the boundary.
pub fn fem_operator(grid: &Grid, fields: &SampledFields, d: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = grid.len();
    let h = grid.spacing();
    let (w, dl) = element_1d(grid.order(), h);
    let p = w.len();
    let step = p - 1;
    let cells = grid.cells_per_axis();
    let mut kd = DMatrix::zeros(n, n);
    let mut ka = DMatrix::zeros(n, n);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    if grid.dimension() == 1 {
        for c in 0..cells {
            let base = c * step;
            for q in 0..p {
                let gq = base + q;
                for a in 0..p {
                    for b in 0..p {
                        kd[(base + a, base + b)] += d * w[q] * fields.measure[gq] * dl[a][q] * dl[b][q];
                    }
                    ka[(base + a, gq)] += w[q] * fields.u[gq] * dl[a][q];
                }
            }
        }
        return (kd, ka);
    }
    for cy in 0..cells {
        for cx in 0..cells {
            let (bx, by) = (cx * step, cy * step);
            for qb in 0..p {
                for qa in 0..p {
                    let gq = grid.flat(bx + qa, by + qb);
                    let wq = w[qa] * w[qb];
                    let grad = |a: usize, b: usize| (dl[a][qa] * delta(b, qb), delta(a, qa) * dl[b][qb]);
                    for b in 0..p {
                        for a in 0..p {
                            let i = grid.flat(bx + a, by + b);
                            let (gxi, gyi) = grad(a, b);
                            if gxi == 0.0 && gyi == 0.0 {
                                continue;
                            }
                            for b2 in 0..p {
                                for a2 in 0..p {
                                    let j = grid.flat(bx + a2, by + b2);
                                    let (gxj, gyj) = grad(a2, b2);
                                    kd[(i, j)] += d * wq * fields.measure[gq] * (gxi * gxj + gyi * gyj);
                                }
                            }
                            ka[(i, gq)] += wq * (fields.u[gq] * gxi + fields.v[gq] * gyi);
                        }
                    }
                }
            }
        }
    }
    (kd, ka)
}

/// One hand-written boundary row along an axis, without ghost indices:
/// `(axis index, dt * coefficient)` pairs, diagonal first. Repeated
/// neighbours are already merged as `2 * (dt * c)`.
pub fn explicit_boundary_line(
    order: Order,
    m: &[f64],
    u: &[f64],
    h: f64,
    d: f64,
    dt: f64,
    left: bool,
) -> Vec<(usize, f64)> {
    let n = m.len();
    let hh = h * h;
    let l = n - 1;
    match (order, left) {
        (Order::Second, true) => {
            let c2 = d / (2.0 * hh);
            vec![
                (0, dt * (((m[1] + m[1]) + 2.0 * m[0]) * c2 + -u[0] / h)),
                (1, 2.0 * (dt * (-((m[0] + m[1]) * c2) - u[1] / (2.0 * h)))),
            ]
        }
        (Order::Second, false) => {
            let c2 = d / (2.0 * hh);
            vec![
                (l, dt * (((m[l - 1] + m[l - 1]) + 2.0 * m[l]) * c2 + u[l] / h)),
                (l - 1, 2.0 * (dt * (-((m[l - 1] + m[l]) * c2) + u[l - 1] / (2.0 * h)))),
            ]
        }
        (Order::Fourth, true) => vec![
            (0, dt * (((m[2] + 4.0 * m[1]) + 9.0 * m[0]) * (d / (4.0 * hh)) + -(1.5 * u[0]) / h)),
            (1, 2.0 * (dt * (-((m[2] + 3.0 * m[0]) * (d / (2.0 * hh))) - u[1] / h))),
            (2, 2.0 * (dt * ((3.0 * (m[0] + m[2]) - 4.0 * m[1]) * (d / (8.0 * hh)) + u[2] / (4.0 * h)))),
        ],
        (Order::Fourth, false) => vec![
            (l, dt * (((m[l - 2] + 4.0 * m[l - 1]) + 9.0 * m[l]) * (d / (4.0 * hh)) + (1.5 * u[l]) / h)),
            (l - 1, 2.0 * (dt * (-((m[l - 2] + 3.0 * m[l]) * (d / (2.0 * hh))) + u[l - 1] / h))),
            (
                l - 2,
                2.0 * (dt * ((3.0 * (m[l - 2] + m[l]) - 4.0 * m[l - 1]) * (d / (8.0 * hh)) - u[l - 2] / (4.0 * h))),
            ),
        ],
    }
}

/// Hand-derived row of a 2D order-4 edge center at `(i, j)` with `i` odd
/// (midpoint along x) and `j` even and interior (knot along y): the edge
/// through it is parallel to x. Entries as `(flat index, value)`.
pub fn edge_parallel_to_x_row(grid: &Grid, f: &SampledFields, d: f64, dt: f64, i: usize, j: usize) -> Vec<(usize, f64)> {
    assert!(i % 2 == 1 && j % 2 == 0 && j >= 2 && j + 2 < grid.points_per_axis());
    let h = grid.spacing();
    let hh = h * h;
    let k = grid.flat(i, j);
    let m = |p: usize, q: usize| f.measure[grid.flat(p, q)];
    let u = |p: usize, q: usize| f.u[grid.flat(p, q)];
    let v = |p: usize, q: usize| f.v[grid.flat(p, q)];
    let c4 = d / (4.0 * hh);
    let c8 = d / (8.0 * hh);
    let x_left = dt * (-((3.0 * m(i - 1, j) + m(i + 1, j)) * c4) + u(i - 1, j) / (2.0 * h));
    let x_diag = dt * ((m(i - 1, j) + m(i + 1, j)) * (d / hh) + 0.0);
    let x_right = dt * (-((m(i - 1, j) + 3.0 * m(i + 1, j)) * c4) + -u(i + 1, j) / (2.0 * h));
    let centre = ((m(i, j - 2) + m(i, j + 2)) + 4.0 * (m(i, j - 1) + m(i, j + 1))) + 18.0 * m(i, j);
    let y_diag = dt * (centre * c8 + 0.0);
    let y_far_lo = dt * ((3.0 * (m(i, j - 2) + m(i, j)) - 4.0 * m(i, j - 1)) * c8 + -v(i, j - 2) / (4.0 * h));
    let y_near_lo = dt * (-((4.0 * m(i, j - 2) + 12.0 * m(i, j)) * c8) + v(i, j - 1) / h);
    let y_near_hi = dt * (-((4.0 * m(i, j + 2) + 12.0 * m(i, j)) * c8) + -v(i, j + 1) / h);
    let y_far_hi = dt * ((3.0 * (m(i, j) + m(i, j + 2)) - 4.0 * m(i, j + 1)) * c8 + v(i, j + 2) / (4.0 * h));
    let mut row = vec![
        (grid.flat(i - 1, j), x_left),
        (k, (m(i, j) + x_diag) + y_diag),
        (grid.flat(i + 1, j), x_right),
        (grid.flat(i, j - 2), y_far_lo),
        (grid.flat(i, j - 1), y_near_lo),
        (grid.flat(i, j + 1), y_near_hi),
        (grid.flat(i, j + 2), y_far_hi),
    ];
    row.sort_by_key(|e| e.0);
    row
}

/// Largest entrywise difference relative to the largest entry of `b`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}
