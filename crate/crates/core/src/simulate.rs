//! Implicit Euler time loop and per-step diagnostics.

use std::io::Write;

use crate::assembly::{build_rhs, SchemeOperator};
use crate::error::{Error, Result};
use crate::krylov::{solve_with, SolveOptions, SolveReport};
use crate::problem::SampledFields;

/// Default steady-state threshold, relative to `max rho^0`, per unit time.
pub const STEADY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub step: usize,
    pub time: f64,
    pub g: Vec<f64>,
    pub rho: Vec<f64>,
}

impl State {
    pub fn initial(fields: &SampledFields) -> Self {
        State {
            step: 0,
            time: 0.0,
            g: fields.g0.clone(),
            rho: fields.rho0.clone(),
        }
    }
}

/// Built-in convex functions for the entropy `sum w M f(g)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entropy {
    /// `f(x) = (x - 1)^2`.
    Chi2,
    /// `f(x) = x ln x - x + 1`.
    Kl,
}

impl Entropy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chi2" => Ok(Entropy::Chi2),
            "kl" => Ok(Entropy::Kl),
            other => Err(Error::config(format!("unknown entropy '{other}'"))),
        }
    }

    pub fn eval(self, x: f64) -> Result<f64> {
        match self {
            Entropy::Chi2 => Ok((x - 1.0) * (x - 1.0)),
            Entropy::Kl if x > 0.0 => Ok(x * x.ln() - x + 1.0),
            Entropy::Kl => Err(Error::Domain(format!("kl entropy needs g > 0, got {x}"))),
        }
    }
}

/// `sum_i w_i M_i f(g_i)`.
pub fn phi_entropy(state: &State, fields: &SampledFields, weights: &[f64], f: Entropy) -> Result<f64> {
    relative_entropy(&state.g, &fields.measure, weights, f, 1.0)
}

/// Entropy relative to the steady state `K M`: `sum w K M f(g / K)`.
fn relative_entropy(g: &[f64], measure: &[f64], weights: &[f64], f: Entropy, k: f64) -> Result<f64> {
    let mut e = 0.0;
    for ((&gi, &m), &w) in g.iter().zip(measure).zip(weights) {
        e += w * k * m * f.eval(gi / k)?;
    }
    Ok(e)
}

pub fn mass(rho: &[f64], weights: &[f64]) -> f64 {
    rho.iter().zip(weights).map(|(r, w)| r * w).sum()
}

/// One implicit Euler step; the previous `g` is the initial guess.
pub fn step(
    state: &State,
    scheme: &SchemeOperator,
    fields: &SampledFields,
    opts: &SolveOptions,
) -> Result<(State, SolveReport)> {
    let rhs = build_rhs(fields, &state.g, scheme.dt);
    let (g, report) = solve_with(&scheme.a_fd, &rhs, Some(&state.g), opts).map_err(|e| match e {
        Error::NonConvergence { report, .. } => Error::NonConvergence {
            report,
            step: Some(state.step + 1),
        },
        other => other,
    })?;
    let rho = g.iter().zip(&fields.measure).map(|(g, m)| g * m).collect();
    let n = state.step + 1;
    Ok((
        State {
            step: n,
            time: n as f64 * scheme.dt,
            g,
            rho,
        },
        report,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    Steps(usize),
    /// `ceil(T / dt)` steps.
    FinalTime(f64),
    /// Stops once `max |rho^{n+1} - rho^n| / dt < tol * max rho^0`.
    Steady { tol: f64, max_steps: usize },
}

impl StopRule {
    pub fn steady(max_steps: usize) -> Self {
        StopRule::Steady {
            tol: STEADY_TOLERANCE,
            max_steps,
        }
    }

    fn step_limit(self, dt: f64) -> usize {
        match self {
            StopRule::Steps(n) => n,
            StopRule::FinalTime(t) => {
                let r = t / dt;
                // a ratio within round-off of an integer counts as that integer
                let n = r.round();
                if (r - n).abs() <= 1e-9 * n.max(1.0) {
                    n as usize
                } else {
                    r.ceil() as usize
                }
            }
            StopRule::Steady { max_steps, .. } => max_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    /// `sum w (rho - K M)^2 / (K M)`.
    pub chi2: f64,
    /// Selected entropy relative to `K M`.
    pub entropy: f64,
    pub min_rho: f64,
    pub solver_iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub entropy: Entropy,
    /// `mass(rho^0) / mass(M)`: the steady state is `K M`.
    pub steady_scale: f64,
    pub reached_steady: bool,
}

impl RunTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,t,mass,chi2,entropy,min_rho,solver_iters,residual")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.6e}",
                r.step, r.time, r.mass, r.chi2, r.entropy, r.min_rho, r.solver_iterations, r.residual
            )?;
        }
        Ok(())
    }

    pub fn chi2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.chi2).collect()
    }

    /// Largest per-step mass change relative to the initial mass, after
    /// removing the exact contribution `dt sum w f` of a source.
    pub fn max_mass_drift(&self, source_mass_rate: f64, dt: f64) -> f64 {
        let m0 = self.rows.first().map_or(1.0, |r| r.mass.abs()).max(f64::MIN_POSITIVE);
        self.rows
            .windows(2)
            .map(|w| (w[1].mass - w[0].mass - dt * source_mass_rate).abs() / m0)
            .fold(0.0, f64::max)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub state: State,
}

fn diagnostics(
    state: &State,
    fields: &SampledFields,
    weights: &[f64],
    entropy: Entropy,
    k: f64,
    report: Option<&SolveReport>,
) -> Result<TraceRow> {
    Ok(TraceRow {
        step: state.step,
        time: state.time,
        mass: mass(&state.rho, weights),
        chi2: relative_entropy(&state.g, &fields.measure, weights, Entropy::Chi2, k)?,
        entropy: relative_entropy(&state.g, &fields.measure, weights, entropy, k)?,
        min_rho: state.rho.iter().copied().fold(f64::INFINITY, f64::min),
        solver_iterations: report.map_or(0, |r| r.iterations),
        residual: report.map_or(0.0, |r| r.relative_residual),
    })
}

pub fn run(
    scheme: &SchemeOperator,
    fields: &SampledFields,
    stop: StopRule,
    entropy: Entropy,
    opts: &SolveOptions,
) -> Result<RunOutput> {
    run_with_observer(scheme, fields, stop, entropy, opts, |_| Ok(()))
}

/// Like [`run`], calling `observe` on the initial state and after every step.
pub fn run_with_observer<F>(
    scheme: &SchemeOperator,
    fields: &SampledFields,
    stop: StopRule,
    entropy: Entropy,
    opts: &SolveOptions,
    mut observe: F,
) -> Result<RunOutput>
where
    F: FnMut(&State) -> Result<()>,
{
    let weights = &scheme.weights;
    let mass_m = mass(&fields.measure, weights);
    let k = mass(&fields.rho0, weights) / mass_m;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("initial mass ratio {k} is not positive")));
    }
    let mut state = State::initial(fields);
    observe(&state)?;
    let mut rows = vec![diagnostics(&state, fields, weights, entropy, k, None)?];
    let limit = stop.step_limit(scheme.dt);
    let rho_scale = fields.rho0.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut reached_steady = false;
    for _ in 0..limit {
        let (next, report) = step(&state, scheme, fields, opts)?;
        if let StopRule::Steady { tol, .. } = stop {
            let change = next
                .rho
                .iter()
                .zip(&state.rho)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            reached_steady = change / scheme.dt < tol * rho_scale;
        }
        state = next;
        observe(&state)?;
        rows.push(diagnostics(&state, fields, weights, entropy, k, Some(&report))?);
        if reached_steady {
            break;
        }
    }
    Ok(RunOutput {
        trace: RunTrace {
            rows,
            entropy,
            steady_scale: k,
            reached_steady,
        },
        state,
    })
}

/// Geometric fit of the trailing chi-squared values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayFit {
    /// `chi2_n ~ C q^n`; `rate = 1 - q`.
    Geometric { factor: f64, rate: f64 },
    /// The divergence reached exactly zero inside the window.
    Converged,
}

/// Least-squares slope of `ln chi2` against `n` over the last `window` rows.
pub fn fit_decay_rate(trace: &RunTrace, window: usize) -> Result<DecayFit> {
    if window < 3 || trace.rows.len() < 3 {
        return Err(Error::config("the decay fit needs at least three trailing steps"));
    }
    let tail = &trace.rows[trace.rows.len().saturating_sub(window)..];
    if tail.iter().any(|r| r.chi2 == 0.0) {
        return Ok(DecayFit::Converged);
    }
    if tail.iter().any(|r| !(r.chi2 > 0.0)) {
        return Err(Error::Domain("chi-squared divergence is not positive".into()));
    }
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|r| r.step as f64).sum::<f64>() / n;
    let mean_y = tail.iter().map(|r| r.chi2.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in tail {
        let dx = r.step as f64 - mean_x;
        sxy += dx * (r.chi2.ln() - mean_y);
        sxx += dx * dx;
    }
    let factor = (sxy / sxx).exp();
    Ok(DecayFit::Geometric {
        factor,
        rate: 1.0 - factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(chi2: &[f64]) -> RunTrace {
        RunTrace {
            rows: chi2
                .iter()
                .enumerate()
                .map(|(n, &c)| TraceRow {
                    step: n,
                    time: n as f64,
                    mass: 1.0,
                    chi2: c,
                    entropy: c,
                    min_rho: 1.0,
                    solver_iterations: 0,
                    residual: 0.0,
                })
                .collect(),
            entropy: Entropy::Chi2,
            steady_scale: 1.0,
            reached_steady: false,
        }
    }

    #[test]
    fn geometric_fit_is_exact() {
        let chi2: Vec<f64> = (0..40).map(|n| 3.0 * 0.93f64.powi(n)).collect();
        match fit_decay_rate(&trace_of(&chi2), 20).unwrap() {
            DecayFit::Geometric { factor, rate } => {
                assert!((factor - 0.93).abs() < 1e-10);
                assert!((rate - 0.07).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_divergence_gives_sentinel() {
        assert_eq!(fit_decay_rate(&trace_of(&[0.0; 5]), 5).unwrap(), DecayFit::Converged);
    }

    #[test]
    fn entropies() {
        assert_eq!(Entropy::Chi2.eval(1.0).unwrap(), 0.0);
        assert_eq!(Entropy::Kl.eval(1.0).unwrap(), 0.0);
        assert!(matches!(Entropy::Kl.eval(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn final_time_step_count() {
        assert_eq!(StopRule::FinalTime(1.0).step_limit(0.1), 10);
        assert_eq!(StopRule::FinalTime(1.0).step_limit(0.3), 4);
    }
}
