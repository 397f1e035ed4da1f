//! Convergence-order estimation, uniform-convergence sweeps, round-off
//! studies and figure data.

use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::kernels::{ClockedState, FlowError, KernelKind};
use crate::mpe::{build_for_order, integrate, mpe_step, MpeError, MpeScheme};
use crate::numerics::{Extended, Matrix, Precision, Real};
use crate::problems::{
    hydrogen_problem, magnus_f_series, matrix2x2_problem, radial_oscillator_problem, Problem,
    ProblemName,
};

/// Grid size used for every figure.
pub const DEFAULT_GRID_POINTS: usize = 200;

/// Errors below this multiple of the precision epsilon are treated as round-off.
pub const FLOOR_FACTOR: f64 = 100.0;

/// Double precision is said to degrade once its max error exceeds the
/// extended-precision max error by this factor.
pub const ONSET_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("need at least {min} inputs, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("step sizes must be strictly decreasing")]
    NotDecreasing,
    #[error("insufficient signal: only {usable} point(s) above the round-off floor")]
    InsufficientSignal { usable: usize },
    #[error(transparent)]
    Mpe(#[from] MpeError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub descriptor: String,
    pub precision: Precision,
    /// `(h, error)` in input order.
    pub pairs: Vec<(T, T)>,
    pub fitted_order: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    /// Pairs that survived the round-off floor.
    pub used: usize,
    /// Kernel applications per step.
    pub kernel_applications: u64,
}

/// Absolute error below which a measurement is considered round-off.
pub fn round_off_floor<T: Real>() -> f64 {
    FLOOR_FACTOR * T::epsilon().to_f64().expect("epsilon")
}

/// Least-squares slope of `log e` against `log h`, ignoring `e < floor`.
/// Returns `(slope, rms residual, points used)`.
pub fn fit_order(pairs: &[(f64, f64)], floor: f64) -> Result<(f64, f64, usize), HarnessError> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(h, e)| *e >= floor && e.is_finite() && *h > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(HarnessError::InsufficientSignal { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Ok((slope, (rss / n).sqrt(), pts.len()))
}

fn report<T: Real>(scheme: &MpeScheme, pairs: Vec<(T, T)>) -> Result<ConvergenceReport<T>, HarnessError> {
    let as_f64: Vec<(f64, f64)> =
        pairs.iter().map(|(h, e)| (h.to_f64().unwrap_or(f64::NAN), e.to_f64().unwrap_or(f64::NAN))).collect();
    let (fitted_order, fit_residual, used) = fit_order(&as_f64, round_off_floor::<T>())?;
    Ok(ConvergenceReport {
        descriptor: scheme.descriptor(),
        precision: T::PRECISION,
        pairs,
        fitted_order,
        fit_residual,
        used,
        kernel_applications: scheme.kernel_applications(),
    })
}

fn check_decreasing<T: PartialOrd>(xs: &[T]) -> Result<(), HarnessError> {
    if xs.len() < 3 {
        return Err(HarnessError::TooFew { min: 3, got: xs.len() });
    }
    if xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::NotDecreasing);
    }
    Ok(())
}

/// Error of one expansion over width `h` from the problem's initial state.
pub fn local_order<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    scheme: &MpeScheme,
    hs: &[T],
) -> Result<ConvergenceReport<T>, HarnessError> {
    check_decreasing(hs)?;
    let cs = problem.initial();
    let pairs = hs
        .iter()
        .map(|&h| Ok((h, problem.error(&mpe_step(scheme, &problem, &cs, h)?))))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    report(scheme, pairs)
}

/// Endpoint error at `t_end` for each step count. `h` is the step width.
pub fn global_order<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    scheme: &MpeScheme,
    t_end: T,
    steps: &[usize],
) -> Result<ConvergenceReport<T>, HarnessError> {
    let pairs = trajectory_errors(problem, scheme, t_end, steps)?
        .into_iter()
        .map(|(h, end, _)| (h, end))
        .collect();
    report(scheme, pairs)
}

/// Like [`global_order`] but fitted to the largest error at any state strictly
/// between start and end.
pub fn interior_order<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    scheme: &MpeScheme,
    t_end: T,
    steps: &[usize],
) -> Result<ConvergenceReport<T>, HarnessError> {
    let pairs = trajectory_errors(problem, scheme, t_end, steps)?
        .into_iter()
        .map(|(h, _, interior)| (h, interior))
        .collect();
    report(scheme, pairs)
}

/// `(h, endpoint error, max interior error)` per step count.
fn trajectory_errors<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    scheme: &MpeScheme,
    t_end: T,
    steps: &[usize],
) -> Result<Vec<(T, T, T)>, HarnessError> {
    if steps.len() < 3 {
        return Err(HarnessError::TooFew { min: 3, got: steps.len() });
    }
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::NotDecreasing);
    }
    let cs = problem.initial();
    steps
        .iter()
        .map(|&n| {
            let traj = integrate(scheme, &problem, cs.state.clone(), cs.t, t_end, n)?;
            let h = (t_end - cs.t) / T::from_usize(n).expect("step count");
            let end = problem.error(traj.last().expect("non-empty trajectory"));
            let interior = traj[1..traj.len() - 1].iter().fold(T::zero(), |m, s| m.max(problem.error(s)));
            Ok((h, end, interior))
        })
        .collect()
}

/// `points` uniformly spaced values covering `[a, b]`.
pub fn uniform_grid<T: Real>(a: T, b: T, points: usize) -> Vec<T> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let den = T::from_usize(points - 1).expect("grid size");
            (0..points).map(|i| a + (b - a) * T::from_usize(i).expect("index") / den).collect()
        }
    }
}

/// One expansion spanning the whole interval from the initial state to `t`.
pub fn single_application<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    scheme: &MpeScheme,
    t: T,
) -> Result<ClockedState<T>, HarnessError> {
    let cs = problem.initial();
    Ok(mpe_step(scheme, &problem, &cs, t - cs.t)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepColumn<T> {
    pub order: u32,
    pub descriptor: String,
    pub values: Vec<T>,
    pub errors: Vec<T>,
    pub max_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T> {
    pub problem: ProblemName,
    pub grid: Vec<T>,
    pub exact: Vec<T>,
    pub columns: Vec<SweepColumn<T>>,
}

/// Single-application observable at every grid point for each order.
/// Grid points are evaluated on the rayon pool and gathered in order.
pub fn uniform_convergence_sweep<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    orders: &[u32],
    kernel: KernelKind,
    grid: &[T],
) -> Result<SweepTable<T>, HarnessError> {
    let exact: Vec<T> = grid.iter().map(|&t| problem.observable(&problem.exact(t))).collect();
    let columns = orders
        .iter()
        .map(|&order| {
            let scheme = build_for_order(order, kernel)?;
            let values = grid
                .par_iter()
                .map(|&t| Ok(problem.observable(&single_application(problem, &scheme, t)?.state)))
                .collect::<Result<Vec<T>, HarnessError>>()?;
            let errors: Vec<T> = values.iter().zip(&exact).map(|(v, e)| (*v - *e).abs()).collect();
            let max_error = errors.iter().fold(T::zero(), |m, e| m.max(*e));
            Ok(SweepColumn { order, descriptor: scheme.descriptor(), values, errors, max_error })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(SweepTable { problem: problem.name(), grid: grid.to_vec(), exact, columns })
}

pub fn problem_in<T: Real>(name: ProblemName) -> Box<dyn Problem<T>> {
    match name {
        ProblemName::Matrix2x2 => Box::new(matrix2x2_problem()),
        ProblemName::Hydrogen => Box::new(hydrogen_problem::<T>()),
        ProblemName::Oscillator => Box::new(radial_oscillator_problem::<T>()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundoffRow {
    pub order: u32,
    pub double_max: f64,
    pub extended_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundoffStudy {
    pub problem: ProblemName,
    pub double: SweepTable<f64>,
    pub extended: SweepTable<Extended>,
    pub rows: Vec<RoundoffRow>,
    /// Smallest order whose double-precision max error exceeds the
    /// extended-precision one by [`ONSET_RATIO`].
    pub onset: Option<u32>,
}

/// The same sweep in double and extended precision.
pub fn roundoff_study(
    name: ProblemName,
    orders: &[u32],
    kernel: KernelKind,
    points: usize,
) -> Result<RoundoffStudy, HarnessError> {
    let p64 = problem_in::<f64>(name);
    let p128 = problem_in::<Extended>(name);
    let (a, b) = p64.domain();
    let double = uniform_convergence_sweep(p64.as_ref(), orders, kernel, &uniform_grid(a, b, points))?;
    let (a, b) = p128.domain();
    let extended = uniform_convergence_sweep(p128.as_ref(), orders, kernel, &uniform_grid(a, b, points))?;
    let rows: Vec<RoundoffRow> = double
        .columns
        .iter()
        .zip(&extended.columns)
        .map(|(d, e)| RoundoffRow {
            order: d.order,
            double_max: d.max_error,
            extended_max: e.max_error.to_f64().unwrap_or(f64::NAN),
        })
        .collect();
    let onset = rows.iter().find(|r| r.double_max > ONSET_RATIO * r.extended_max).map(|r| r.order);
    Ok(RoundoffStudy { problem: name, double, extended, rows, onset })
}

/// Taylor coefficients `a_0..=a_degree` at zero of a polynomial, or of a
/// function well approximated by one on `[a, b]`, from interpolation at the
/// Chebyshev nodes of that interval.
pub fn taylor_coefficients<T: Real>(
    f: impl Fn(T) -> Result<T, HarnessError>,
    degree: usize,
    a: T,
    b: T,
) -> Result<Vec<T>, HarnessError> {
    let m = degree + 1;
    let den = T::from_usize(2 * m).expect("node count");
    let (mid, half) = ((a + b) / T::lit(2), (b - a) / T::lit(2));
    let nodes: Vec<T> = (0..m)
        .map(|j| mid + half * (T::PI() * T::from_usize(2 * j + 1).expect("index") / den).cos())
        .collect();
    let mut rows = Vec::with_capacity(m * m);
    for &x in &nodes {
        let mut p = T::one();
        for _ in 0..m {
            rows.push(p);
            p = p * x;
        }
    }
    let values = nodes.iter().map(|&x| f(x)).collect::<Result<Vec<T>, _>>()?;
    let v = Matrix::from_vec(m, m, rows).map_err(FlowError::from)?;
    Ok(v.solve(&values).map_err(FlowError::from)?)
}

fn csv_header(figure: u32, problem: ProblemName, precision: Precision, kernel: KernelKind, extra: &str) -> String {
    format!(
        "# multiprod-{} figure={figure} problem={problem} precision={precision} kernel={kernel}{extra}\n",
        env!("CARGO_PKG_VERSION")
    )
}

/// `t, exact, magnus_4..10, mpe_2..10` for the matrix problem in double precision.
pub fn figure1_csv(points: usize) -> Result<String, HarnessError> {
    let p = matrix2x2_problem();
    let kernel = KernelKind::FrozenMidpoint;
    let (a, b) = Problem::<f64>::domain(&p);
    let grid = uniform_grid(a, b, points);
    let mpe_orders = [2, 4, 6, 8, 10];
    let sweep = uniform_convergence_sweep(&p, &mpe_orders, kernel, &grid)?;
    let magnus_orders = [4, 6, 8, 10];
    let schemes: Vec<String> = sweep.columns.iter().map(|c| c.descriptor.clone()).collect();
    let mut out = csv_header(1, ProblemName::Matrix2x2, Precision::Double, kernel, &format!(
        " grid={points} schemes={}",
        schemes.join(";")
    ));
    out.push_str("t,exact");
    for o in magnus_orders {
        out.push_str(&format!(",magnus_{o}"));
    }
    for o in mpe_orders {
        out.push_str(&format!(",mpe_{o}"));
    }
    out.push('\n');
    for (i, &t) in grid.iter().enumerate() {
        let mut row = vec![t.to_sci(), sweep.exact[i].to_sci()];
        for o in magnus_orders {
            row.push(magnus_f_series(t, o)?.to_sci());
        }
        row.extend(sweep.columns.iter().map(|c| c.values[i].to_sci()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// `t, exact, mpe_<order>...` for hydrogen at one precision.
pub fn figure2_csv<T: Real>(orders: &[u32], points: usize) -> Result<String, HarnessError> {
    let p = hydrogen_problem::<T>();
    let kernel = KernelKind::StrangAB;
    let (a, b) = p.domain();
    let grid = uniform_grid(a, b, points);
    let sweep = uniform_convergence_sweep(&p, orders, kernel, &grid)?;
    let schemes: Vec<String> = sweep.columns.iter().map(|c| c.descriptor.clone()).collect();
    let mut out = csv_header(2, ProblemName::Hydrogen, T::PRECISION, kernel, &format!(
        " grid={points} t_start={} schemes={}",
        p.t_start.to_sci(),
        schemes.join(";")
    ));
    out.push_str("t,exact");
    for o in orders {
        out.push_str(&format!(",mpe_{o}"));
    }
    out.push('\n');
    for (i, t) in grid.iter().enumerate() {
        let mut row = vec![t.to_sci(), sweep.exact[i].to_sci()];
        row.extend(sweep.columns.iter().map(|c| c.values[i].to_sci()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Long-format `t, order, double_error, extended_error` for hydrogen.
pub fn figure3_csv(orders: &[u32], points: usize) -> Result<(String, RoundoffStudy), HarnessError> {
    let kernel = KernelKind::StrangAB;
    let study = roundoff_study(ProblemName::Hydrogen, orders, kernel, points)?;
    let onset = study.onset.map_or("none".to_string(), |o| o.to_string());
    let mut out = csv_header(3, ProblemName::Hydrogen, Precision::Double, kernel, &format!(
        " compare=extended grid={points} onset={onset}"
    ));
    out.push_str("t,order,double_error,extended_error\n");
    for (d, e) in study.double.columns.iter().zip(&study.extended.columns) {
        for (i, t) in study.double.grid.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", t.to_sci(), d.order, d.errors[i].to_sci(), e.errors[i].to_sci()));
        }
    }
    Ok((out, study))
}

/// Kernel used for the problem's sweeps.
pub fn default_kernel(name: ProblemName) -> KernelKind {
    match name {
        ProblemName::Matrix2x2 => KernelKind::FrozenMidpoint,
        ProblemName::Hydrogen | ProblemName::Oscillator => KernelKind::StrangAB,
    }
}
