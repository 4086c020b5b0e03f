//! Problem definitions, field sampling and the built-in catalog.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::assembly::discrete_divergence;
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid, Order};

/// Scalar field `f(x, y)`; 1D problems are evaluated with `y = 0`.
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    /// Prescribed invariant measure `M` and solenoidal velocity `u`.
    Model1,
    /// General drift `b`, solved as Model 1 with `M = 1`, `u = -b`.
    Model2,
}

impl Model {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "model1" | "model-1" => Ok(Model::Model1),
            "2" | "model2" | "model-2" => Ok(Model::Model2),
            other => Err(Error::config(format!("unknown model '{other}'"))),
        }
    }
}

/// Pointwise values: either a closed-form field or one value per grid point.
#[derive(Clone)]
pub enum Sampler {
    Analytic(Field),
    Table(Vec<f64>),
}

impl Sampler {
    pub fn constant(c: f64) -> Self {
        Sampler::Analytic(field(move |_, _| c))
    }

    fn sample(&self, grid: &Grid, what: &str) -> Result<Vec<f64>> {
        match self {
            Sampler::Analytic(f) => Ok((0..grid.len())
                .map(|k| {
                    let (x, y) = grid.point(k);
                    f(x, y)
                })
                .collect()),
            Sampler::Table(values) if values.len() == grid.len() => Ok(values.clone()),
            Sampler::Table(values) => Err(Error::config(format!(
                "tabulated {what} has {} values but the grid has {} points",
                values.len(),
                grid.len()
            ))),
        }
    }
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Analytic(_) => write!(f, "Analytic"),
            Sampler::Table(v) => write!(f, "Table({} values)", v.len()),
        }
    }
}

/// Velocity description. For Model 2 the same variants describe the drift `b`.
#[derive(Clone, Debug)]
pub enum Velocity {
    Zero,
    Components { u: Sampler, v: Sampler },
    /// Stream function `psi`; `u = -psi_y`, `v = psi_x` (2D only).
    Stream(Sampler),
}

/// Source term variants for the `accuracy` manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccuracySource {
    /// `f = -div(M grad g) - u . grad g`.
    Advective,
    /// `f = -div(M grad g) - div(u g)`, consistent with the conservative
    /// advection term the schemes discretize.
    Conservative,
}

impl AccuracySource {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "advective" => Ok(AccuracySource::Advective),
            "conservative" => Ok(AccuracySource::Conservative),
            other => Err(Error::config(format!("unknown source variant '{other}'"))),
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub model: Model,
    pub dimension: usize,
    pub bounds: Vec<(f64, f64)>,
    pub diffusion: f64,
    /// Invariant measure (Model 1 only).
    pub measure: Sampler,
    /// Closed-form `(M_x, M_y)` when available.
    pub measure_gradient: Option<(Field, Field)>,
    pub velocity: Velocity,
    pub initial_density: Sampler,
    pub source: Option<Sampler>,
    pub exact_density: Option<Sampler>,
    pub final_time: f64,
    pub time_step: f64,
    /// Lower bound `eps0` required of every sampled `M_i`.
    pub measure_floor: f64,
    /// Tabulated problems fix the number of points per axis.
    pub points_per_axis: Option<usize>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("model", &self.model)
            .field("dimension", &self.dimension)
            .field("bounds", &self.bounds)
            .field("diffusion", &self.diffusion)
            .field("measure", &self.measure)
            .field("measure_gradient", &self.measure_gradient.is_some())
            .field("velocity", &self.velocity)
            .field("final_time", &self.final_time)
            .field("time_step", &self.time_step)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_MEASURE_FLOOR: f64 = 1e-10;

impl ProblemSpec {
    /// Builds a grid matching this problem.
    pub fn grid(&self, cells_per_axis: usize, order: Order) -> Result<Grid> {
        build_grid(&self.bounds, cells_per_axis, order, self.dimension)
    }

    /// Grid for a tabulated problem, with the cell count implied by the table.
    pub fn table_grid(&self, order: Order) -> Result<Grid> {
        let n = self
            .points_per_axis
            .ok_or_else(|| Error::config("problem is not tabulated"))?;
        self.grid(order.cells_for_points(n)?, order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::config(format!("dimension must be 1 or 2, got {}", self.dimension)));
        }
        if self.bounds.len() != self.dimension {
            return Err(Error::config("bounds do not match the dimension"));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::config(format!("diffusion must be nonnegative, got {}", self.diffusion)));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::config(format!("time step must be positive, got {}", self.time_step)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::config(format!("final time must be positive, got {}", self.final_time)));
        }
        if !(self.measure_floor > 0.0) {
            return Err(Error::config("measure floor must be positive"));
        }
        Ok(())
    }
}

/// Coefficients and data evaluated at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFields {
    pub measure: Vec<f64>,
    pub u: Vec<f64>,
    /// All zeros in 1D.
    pub v: Vec<f64>,
    pub rho0: Vec<f64>,
    /// All zeros when the problem has no source.
    pub source: Vec<f64>,
    /// `rho0 / M`.
    pub g0: Vec<f64>,
    pub has_source: bool,
}

impl SampledFields {
    /// Fields with the given measure and velocity, `rho0 = M` and no source.
    pub fn from_parts(measure: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Self {
        let n = measure.len();
        SampledFields {
            rho0: measure.clone(),
            g0: vec![1.0; n],
            source: vec![0.0; n],
            has_source: false,
            measure,
            u,
            v,
        }
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    /// Replaces the initial density and recomputes `g0`.
    pub fn with_initial_density(mut self, rho0: Vec<f64>) -> Self {
        self.g0 = rho0.iter().zip(&self.measure).map(|(r, m)| r / m).collect();
        self.rho0 = rho0;
        self
    }
}

/// Evaluates every sampler of `problem` on `grid`.
pub fn sample(problem: &ProblemSpec, grid: &Grid) -> Result<SampledFields> {
    problem.validate()?;
    if grid.dimension() != problem.dimension {
        return Err(Error::config(format!(
            "problem is {}D but the grid is {}D",
            problem.dimension,
            grid.dimension()
        )));
    }
    for (a, b) in grid.bounds().iter().zip(&problem.bounds) {
        let scale = (b.1 - b.0).abs();
        if (a.0 - b.0).abs() > 1e-12 * scale || (a.1 - b.1).abs() > 1e-12 * scale {
            return Err(Error::config("grid bounds differ from the problem domain"));
        }
    }
    let n = grid.len();
    let measure = match problem.model {
        Model::Model1 => {
            let m = problem.measure.sample(grid, "measure")?;
            if let Some((k, &value)) = m
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v >= problem.measure_floor))
            {
                let (x, y) = grid.point(k);
                return Err(Error::MeasurePositivity {
                    index: k,
                    x,
                    y,
                    value,
                    floor: problem.measure_floor,
                });
            }
            m
        }
        Model::Model2 => vec![1.0; n],
    };

    let (mut u, mut v) = match &problem.velocity {
        Velocity::Zero => (vec![0.0; n], vec![0.0; n]),
        Velocity::Components { u, v } => {
            let su = u.sample(grid, "u")?;
            let sv = if grid.dimension() == 2 { v.sample(grid, "v")? } else { vec![0.0; n] };
            (su, sv)
        }
        Velocity::Stream(psi) => match psi {
            Sampler::Analytic(f) => stream_velocity_raw(f.as_ref(), grid)?,
            Sampler::Table(_) => {
                return Err(Error::config("a stream function must be a closed-form field"))
            }
        },
    };
    match problem.model {
        Model::Model1 => zero_normal_velocity(grid, &mut u, &mut v),
        Model::Model2 => {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let rho0 = problem.initial_density.sample(grid, "rho0")?;
    let (source, has_source) = match &problem.source {
        Some(s) => (s.sample(grid, "source")?, true),
        None => (vec![0.0; n], false),
    };
    let g0 = rho0.iter().zip(&measure).map(|(r, m)| r / m).collect();
    Ok(SampledFields {
        measure,
        u,
        v,
        rho0,
        source,
        g0,
        has_source,
    })
}

/// Zeroes `u` on the x-boundaries and `v` on the y-boundaries.
pub fn zero_normal_velocity(grid: &Grid, u: &mut [f64], v: &mut [f64]) {
    let last = grid.points_per_axis() - 1;
    for k in 0..grid.len() {
        let (i, j) = grid.split(k);
        if i == 0 || i == last {
            u[k] = 0.0;
        }
        if grid.dimension() == 2 && (j == 0 || j == last) {
            v[k] = 0.0;
        }
    }
}

/// Largest normal velocity component on the boundary.
pub fn max_normal_velocity(grid: &Grid, u: &[f64], v: &[f64]) -> (f64, usize) {
    let last = grid.points_per_axis() - 1;
    let mut worst = (0.0, 0);
    for k in 0..grid.len() {
        let (i, j) = grid.split(k);
        if (i == 0 || i == last) && u[k].abs() > worst.0 {
            worst = (u[k].abs(), k);
        }
        if grid.dimension() == 2 && (j == 0 || j == last) && v[k].abs() > worst.0 {
            worst = (v[k].abs(), k);
        }
    }
    worst
}

/// Discretely divergence-free velocity from a stream function, with the
/// boundary normal components zeroed afterwards.
pub fn velocity_from_stream(psi: &dyn Fn(f64, f64) -> f64, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut u, mut v) = stream_velocity_raw(psi, grid)?;
    zero_normal_velocity(grid, &mut u, &mut v);
    Ok((u, v))
}

/// Stream-function velocity before boundary zeroing:
/// `u = -delta_y psi`, `v = delta_x psi`, each difference chosen by the
/// parity of the point along its own axis.
pub fn stream_velocity_raw(psi: &dyn Fn(f64, f64) -> f64, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    if grid.dimension() != 2 {
        return Err(Error::config("stream functions require a 2D grid"));
    }
    const G: usize = 2;
    let n = grid.points_per_axis();
    let ne = n + 2 * G;
    let mut ext = vec![0.0; ne * ne];
    for je in 0..ne {
        let y = grid.coordinate_ext(1, je as isize - G as isize);
        for ie in 0..ne {
            let x = grid.coordinate_ext(0, ie as isize - G as isize);
            let value = psi(x, y);
            if !value.is_finite() {
                return Err(Error::config(format!(
                    "stream function is not finite at ({x}, {y}) on the ghost layer"
                )));
            }
            ext[je * ne + ie] = value;
        }
    }
    let at = |i: usize, j: usize, di: isize, dj: isize| {
        let ie = (i + G) as isize + di;
        let je = (j + G) as isize + dj;
        ext[je as usize * ne + ie as usize]
    };
    let h = grid.spacing();
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.split(k);
        let dy = if grid.is_wide_index(j) {
            (at(i, j, 0, -2) - 4.0 * at(i, j, 0, -1) + 4.0 * at(i, j, 0, 1) - at(i, j, 0, 2)) / (4.0 * h)
        } else {
            (at(i, j, 0, 1) - at(i, j, 0, -1)) / (2.0 * h)
        };
        let dx = if grid.is_wide_index(i) {
            (at(i, j, -2, 0) - 4.0 * at(i, j, -1, 0) + 4.0 * at(i, j, 1, 0) - at(i, j, 2, 0)) / (4.0 * h)
        } else {
            (at(i, j, 1, 0) - at(i, j, -1, 0)) / (2.0 * h)
        };
        u[k] = -dy;
        v[k] = dx;
    }
    Ok((u, v))
}

/// Largest absolute discrete divergence over all grid points, using the
/// stencil that matches each point's parity and ghost reflection at the
/// boundary.
pub fn check_discrete_div_free(fields: &SampledFields, grid: &Grid) -> f64 {
    discrete_divergence(grid, &fields.u, &fields.v)
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
}

/// Names accepted by [`catalog`].
pub const CATALOG: [&str; 4] = ["accuracy", "smile", "cross", "uniform"];

/// Built-in problem by name. `dimension` only matters for `uniform`.
pub fn catalog(name: &str, dimension: usize) -> Result<ProblemSpec> {
    match name {
        "accuracy" => Ok(accuracy(AccuracySource::Conservative)),
        "smile" => Ok(smile()),
        "cross" => Ok(cross()),
        "uniform" => uniform(dimension),
        other => Err(Error::config(format!(
            "unknown problem '{other}' (known: {}, custom-table)",
            CATALOG.join(", ")
        ))),
    }
}

/// Steady manufactured solution `rho = (3 cos x cos y + 3)(2 + sin x sin y)`
/// on `[0, pi]^2` with `M = 2 + sin x sin y`, `u = (sin x cos y, cos x sin y)`.
pub fn accuracy(variant: AccuracySource) -> ProblemSpec {
    let exact = field(|x, y| (3.0 * x.cos() * y.cos() + 3.0) * (2.0 + x.sin() * y.sin()));
    ProblemSpec {
        name: "accuracy".into(),
        model: Model::Model1,
        dimension: 2,
        bounds: vec![(0.0, PI), (0.0, PI)],
        diffusion: 1.0,
        measure: Sampler::Analytic(field(|x, y| 2.0 + x.sin() * y.sin())),
        measure_gradient: Some((
            field(|x, y| x.cos() * y.sin()),
            field(|x, y| x.sin() * y.cos()),
        )),
        velocity: Velocity::Components {
            u: Sampler::Analytic(field(|x, y| x.sin() * y.cos())),
            v: Sampler::Analytic(field(|x, y| x.cos() * y.sin())),
        },
        initial_density: Sampler::Analytic(exact.clone()),
        source: Some(Sampler::Analytic(field(move |x, y| accuracy_source(variant, x, y)))),
        exact_density: Some(Sampler::Analytic(exact)),
        final_time: 1.0,
        time_step: 0.05,
        measure_floor: DEFAULT_MEASURE_FLOOR,
        points_per_axis: None,
    }
}

/// Closed-form source for the manufactured solution (`D = 1`).
pub fn accuracy_source(variant: AccuracySource, x: f64, y: f64) -> f64 {
    let (sx, cx, sy, cy) = (x.sin(), x.cos(), y.sin(), y.cos());
    let m = 2.0 + sx * sy;
    let g = 3.0 * cx * cy + 3.0;
    let div_m_grad_g = -6.0 * cx * cy * m - 6.0 * sx * cx * sy * cy;
    let u_grad_g = -3.0 * (sx * sx * cy * cy + cx * cx * sy * sy);
    let advection = match variant {
        AccuracySource::Advective => u_grad_g,
        AccuracySource::Conservative => u_grad_g + 2.0 * g * cx * cy,
    };
    -div_m_grad_g - advection
}

/// `A sin(k pi x) sin(k pi y)`.
pub fn cellular_stream(amplitude: f64, wave_number: f64) -> Field {
    field(move |x, y| amplitude * (wave_number * PI * x).sin() * (wave_number * PI * y).sin())
}

fn banana(x: f64, y: f64, cx: f64, cy: f64, r2: f64, yc: f64) -> (f64, f64, f64) {
    let q = (x - cx).powi(2) + (y - cy).powi(2) - r2;
    let t = (-20.0 * q * q - 10.0 * (y - yc).powi(2)).exp();
    let tx = t * (-80.0 * q * (x - cx));
    let ty = t * (-80.0 * q * (y - cy) - 20.0 * (y - yc));
    (t, tx, ty)
}

fn smile_target(x: f64, y: f64) -> (f64, f64, f64) {
    let a = banana(x, y, 1.2, 1.2, 0.5, 2.0);
    let b = banana(x, y, -1.2, 1.2, 0.5, 2.0);
    let c = banana(x, y, 0.0, 0.0, 2.0, -1.0);
    (a.0 + b.0 + c.0 + 0.1, a.1 + b.1 + c.1, a.2 + b.2 + c.2)
}

/// Triple-banana target density with a four-Gaussian initial density on
/// `[-4.5, 4.5]^2`, stirred by a cellular flow.
pub fn smile() -> ProblemSpec {
    ProblemSpec {
        name: "smile".into(),
        model: Model::Model1,
        dimension: 2,
        bounds: vec![(-4.5, 4.5), (-4.5, 4.5)],
        diffusion: 0.5,
        measure: Sampler::Analytic(field(|x, y| smile_target(x, y).0)),
        measure_gradient: Some((
            field(|x, y| smile_target(x, y).1),
            field(|x, y| smile_target(x, y).2),
        )),
        velocity: Velocity::Stream(Sampler::Analytic(cellular_stream(0.2, 2.0))),
        initial_density: Sampler::Analytic(field(|x, y| {
            (-16.0 * (x + 3.0).powi(2) - 4.0 * y * y).exp()
                + (-16.0 * (x - 3.0).powi(2) - 4.0 * y * y).exp()
                + (-4.0 * x * x - 16.0 * (y + 3.0).powi(2)).exp()
                + (-4.0 * x * x - 16.0 * (y - 3.0).powi(2)).exp()
                + 0.1
        })),
        source: None,
        exact_density: None,
        final_time: 5.0,
        time_step: 0.01,
        measure_floor: DEFAULT_MEASURE_FLOOR,
        points_per_axis: None,
    }
}

fn cross_target(x: f64, y: f64) -> (f64, f64, f64) {
    let a = (-(x + 3.0).powi(2) - y * y / 4.0).exp();
    let b = (-(x - 3.0).powi(2) - y * y / 4.0).exp();
    let c = 0.5 * (-4.0 * x * x - 16.0 * (y + 1.0).powi(2)).exp();
    let d = 0.5 * (-4.0 * x * x - 16.0 * (y - 1.0).powi(2)).exp();
    let value = a + b + c + d + 0.1;
    let gx = -2.0 * (x + 3.0) * a - 2.0 * (x - 3.0) * b - 8.0 * x * (c + d);
    let gy = -0.5 * y * (a + b) - 32.0 * (y + 1.0) * c - 32.0 * (y - 1.0) * d;
    (value, gx, gy)
}

/// Four-lobe target on `[-3, 3]^2` with `D = 0.5` and a unit-wave-number
/// cellular flow of amplitude 0.2.
pub fn cross() -> ProblemSpec {
    ProblemSpec {
        name: "cross".into(),
        model: Model::Model1,
        dimension: 2,
        bounds: vec![(-3.0, 3.0), (-3.0, 3.0)],
        diffusion: 0.5,
        measure: Sampler::Analytic(field(|x, y| cross_target(x, y).0)),
        measure_gradient: Some((
            field(|x, y| cross_target(x, y).1),
            field(|x, y| cross_target(x, y).2),
        )),
        velocity: Velocity::Stream(Sampler::Analytic(cellular_stream(0.2, 1.0))),
        initial_density: Sampler::Analytic(field(|x, y| {
            0.5 * (-16.0 * (x + 1.0).powi(2) - 4.0 * y * y).exp()
                + 0.5 * (-16.0 * (x - 1.0).powi(2) - 4.0 * y * y).exp()
                + (-x * x / 4.0 - (y + 3.0).powi(2)).exp()
                + (-x * x / 4.0 - (y - 3.0).powi(2)).exp()
                + 0.1
        })),
        source: None,
        exact_density: None,
        final_time: 10.0,
        time_step: 0.02,
        measure_floor: DEFAULT_MEASURE_FLOOR,
        points_per_axis: None,
    }
}

/// Pure diffusion toward the uniform measure on `[-1, 1]^d`.
pub fn uniform(dimension: usize) -> Result<ProblemSpec> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::config(format!("dimension must be 1 or 2, got {dimension}")));
    }
    let rho0 = if dimension == 1 {
        field(|x, _| 1.0 + 0.5 * (PI * x).cos())
    } else {
        field(|x, y| 1.0 + 0.5 * (PI * x).cos() * (PI * y).cos())
    };
    Ok(ProblemSpec {
        name: "uniform".into(),
        model: Model::Model1,
        dimension,
        bounds: vec![(-1.0, 1.0); dimension],
        diffusion: 1.0,
        measure: Sampler::constant(1.0),
        measure_gradient: Some((field(|_, _| 0.0), field(|_, _| 0.0))),
        velocity: Velocity::Zero,
        initial_density: Sampler::Analytic(rho0),
        source: None,
        exact_density: None,
        final_time: 1.0,
        time_step: 0.01,
        measure_floor: DEFAULT_MEASURE_FLOOR,
        points_per_axis: None,
    })
}

/// Reads a `custom-table` CSV from a file.
pub fn load_table(path: &Path, model: Model, diffusion: f64) -> Result<ProblemSpec> {
    let file = std::fs::File::open(path)?;
    read_table(file, model, diffusion)
}

/// Parses a `custom-table` CSV.
///
/// 2D header: `x,y,M,u,v,rho0`; 1D header: `x,M,u,rho0`. One row per grid
/// point in flattened order (`x` fastest). For Model 2 the `M` column is
/// ignored and the velocity columns hold the drift `b`.
pub fn read_table<R: Read>(reader: R, model: Model, diffusion: f64) -> Result<ProblemSpec> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let dimension = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y", "M", "u", "v", "rho0"] => 2,
        ["x", "M", "u", "rho0"] => 1,
        _ => {
            return Err(Error::Parse(format!(
                "unexpected header '{}'; expected 'x,y,M,u,v,rho0' or 'x,M,u,rho0'",
                header.join(",")
            )))
        }
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} columns", line + 1, record.len())));
        }
        let values = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: '{s}' is not a number", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    let count = rows.len();
    let n = if dimension == 1 {
        count
    } else {
        let r = (count as f64).sqrt().round() as usize;
        if r * r != count {
            return Err(Error::Parse(format!("{count} rows do not form a square grid")));
        }
        r
    };
    if n < 2 {
        return Err(Error::Parse("table needs at least two points per axis".into()));
    }
    let xs: Vec<f64> = (0..n).map(|i| rows[i][0]).collect();
    let mut bounds = vec![(xs[0], xs[n - 1])];
    if dimension == 2 {
        bounds.push((rows[0][1], rows[(n - 1) * n][1]));
    }
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        if !(hi > lo) {
            return Err(Error::Parse(format!("axis {axis} coordinates are not increasing")));
        }
    }
    for (k, row) in rows.iter().enumerate() {
        let (i, j) = (k % n, k / n);
        let expect = |axis: usize, idx: usize| {
            let (lo, hi) = bounds[axis];
            lo + ((hi - lo) * idx as f64) / (n - 1) as f64
        };
        let tol = 1e-9 * (bounds[0].1 - bounds[0].0);
        let ok = if dimension == 1 {
            (row[0] - expect(0, k)).abs() <= tol
        } else {
            (row[0] - expect(0, i)).abs() <= tol && (row[1] - expect(1, j)).abs() <= tol
        };
        if !ok {
            return Err(Error::Parse(format!(
                "row {} coordinates do not match a uniform grid in flattened order",
                k + 1
            )));
        }
    }
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    let (m, u, v, rho0) = if dimension == 2 {
        (column(2), column(3), column(4), column(5))
    } else {
        (column(1), column(2), vec![0.0; count], column(3))
    };
    Ok(ProblemSpec {
        name: "custom-table".into(),
        model,
        dimension,
        bounds,
        diffusion,
        measure: Sampler::Table(m),
        measure_gradient: None,
        velocity: Velocity::Components {
            u: Sampler::Table(u),
            v: Sampler::Table(v),
        },
        initial_density: Sampler::Table(rho0),
        source: None,
        exact_density: None,
        final_time: 1.0,
        time_step: 0.01,
        measure_floor: DEFAULT_MEASURE_FLOOR,
        points_per_axis: Some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_measure_at_center() {
        let p = accuracy(AccuracySource::Conservative);
        let g = p.grid(4, Order::Second).unwrap();
        let f = sample(&p, &g).unwrap();
        assert!((f.measure[g.flat(2, 2)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn model2_negates_drift_and_uses_unit_measure() {
        let mut p = uniform(2).unwrap();
        p.model = Model::Model2;
        p.measure = Sampler::constant(-5.0);
        p.velocity = Velocity::Components {
            u: Sampler::constant(1.0),
            v: Sampler::constant(0.0),
        };
        let g = p.grid(4, Order::Second).unwrap();
        let f = sample(&p, &g).unwrap();
        assert!(f.measure.iter().all(|&m| m == 1.0));
        assert!(f.u.iter().all(|&u| u == -1.0));
        assert!(f.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smile_initial_density_at_origin() {
        let p = smile();
        let g = p.grid(100, Order::Second).unwrap();
        let f = sample(&p, &g).unwrap();
        let k = g.flat(50, 50);
        assert_eq!(g.point(k), (0.0, 0.0));
        let expect = 4.0 * (-144.0f64).exp() + 0.1;
        assert!((f.rho0[k] - expect).abs() < 1e-15);
    }

    #[test]
    fn measure_floor_violation_names_point() {
        let mut p = uniform(1).unwrap();
        p.measure = Sampler::Analytic(field(|x, _| x));
        let g = p.grid(4, Order::Second).unwrap();
        match sample(&p, &g) {
            Err(Error::MeasurePositivity { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn constant_stream_gives_zero_velocity() {
        let g = build_grid(&[(0.0, 1.0), (0.0, 1.0)], 3, Order::Fourth, 2).unwrap();
        let (u, v) = velocity_from_stream(&|_, _| 2.5, &g).unwrap();
        assert!(u.iter().chain(&v).all(|&w| w == 0.0));
    }

    #[test]
    fn bilinear_stream_is_differentiated_exactly() {
        let g = build_grid(&[(-1.0, 1.0), (-1.0, 1.0)], 8, Order::Second, 2).unwrap();
        let (u, v) = velocity_from_stream(&|x, y| x * y, &g).unwrap();
        for k in 0..g.len() {
            if g.point_type(k).on_boundary {
                continue;
            }
            let (x, y) = g.point(k);
            assert!((u[k] + x).abs() < 1e-14);
            assert!((v[k] - y).abs() < 1e-14);
        }
    }

    #[test]
    fn stream_velocity_is_discretely_divergence_free() {
        for order in [Order::Second, Order::Fourth] {
            let g = build_grid(&[(-4.5, 4.5), (-4.5, 4.5)], 12, order, 2).unwrap();
            let psi = cellular_stream(0.2, 1.0);
            let (u, v) = stream_velocity_raw(psi.as_ref(), &g).unwrap();
            let div = discrete_divergence(&g, &u, &v);
            let n = g.points_per_axis();
            for k in 0..g.len() {
                let (i, j) = g.split(k);
                if i >= 2 && j >= 2 && i + 2 < n && j + 2 < n {
                    assert!(div[k].abs() < 1e-12, "order {order} point {k}: {}", div[k]);
                }
            }
        }
    }

    #[test]
    fn odd_stream_stays_divergence_free_after_zeroing() {
        let p = cross();
        for order in [Order::Second, Order::Fourth] {
            let g = p.grid(10, order).unwrap();
            let f = sample(&p, &g).unwrap();
            assert!(check_discrete_div_free(&f, &g) < 1e-12);
        }
    }

    #[test]
    fn source_variants_differ_by_g_div_u() {
        let (x, y) = (0.3f64, 1.1f64);
        let g = 3.0 * x.cos() * y.cos() + 3.0;
        let a = accuracy_source(AccuracySource::Advective, x, y);
        let c = accuracy_source(AccuracySource::Conservative, x, y);
        assert!((a - c - 2.0 * g * x.cos() * y.cos()).abs() < 1e-13);
    }

    #[test]
    fn cross_gradient_matches_difference_quotient() {
        let e = 1e-6;
        for &(x, y) in &[(0.3, -0.7), (-2.1, 1.4), (1.0, 1.0)] {
            for t in [cross_target, smile_target] {
                let (_, gx, gy) = t(x, y);
                let fx = (t(x + e, y).0 - t(x - e, y).0) / (2.0 * e);
                let fy = (t(x, y + e).0 - t(x, y - e).0) / (2.0 * e);
                assert!((gx - fx).abs() < 1e-6 * (1.0 + gx.abs()));
                assert!((gy - fy).abs() < 1e-6 * (1.0 + gy.abs()));
            }
        }
    }

    #[test]
    fn table_roundtrip_and_row_count() {
        let text = "x,M,u,rho0\n0,1,0,1\n0.5,2,0,1\n1,1,0,3\n";
        let p = read_table(text.as_bytes(), Model::Model1, 1.0).unwrap();
        assert_eq!(p.dimension, 1);
        assert_eq!(p.points_per_axis, Some(3));
        let g = p.table_grid(Order::Fourth).unwrap();
        let f = sample(&p, &g).unwrap();
        assert_eq!(f.measure, vec![1.0, 2.0, 1.0]);
        assert_eq!(f.g0, vec![1.0, 0.5, 3.0]);
        let bad = "x,y,M,u,v,rho0\n0,0,1,0,0,1\n1,0,1,0,0,1\n0,1,1,0,0,1\n";
        assert!(matches!(read_table(bad.as_bytes(), Model::Model1, 1.0), Err(Error::Parse(_))));
        let header = "x,M,rho0\n0,1,1\n";
        assert!(read_table(header.as_bytes(), Model::Model1, 1.0).is_err());
    }
}
