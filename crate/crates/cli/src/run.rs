//! Subcommand implementations. Each returns the complete output text so that
//! nothing is printed when a later check fails.

use multiprod::coefficients::{closed_form_weights, Parity, WeightSet};
use multiprod::harness::{
    default_kernel, figure1_csv, figure2_csv, figure3_csv, global_order, interior_order, local_order,
    ConvergenceReport, HarnessError,
};
use multiprod::kernels::{ClockedState, FlowError, KernelKind};
use multiprod::mpe::{self, build_custom, build_even, build_final_correction, build_odd, MpeError, MpeScheme};
use multiprod::numerics::{rational_to_sci, Precision, Real};
use multiprod::nystrom::{Counted, PhaseState};
use multiprod::problems::{
    hydrogen_problem, hydrogen_regularized, radial_oscillator_problem, Matrix2x2, Problem, ProblemName, Radial,
};
use multiprod::Extended;

use crate::args::{
    CoeffsArgs, Command, ConvergenceArgs, FigureArgs, IntegrateArgs, KernelArg, ModeArg, ParityArg, PrecisionArg,
    SchemeArgs, StepArgs,
};
use crate::config::{self, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{flag}: {msg}")]
    Usage { flag: &'static str, msg: String },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn usage(flag: &'static str, msg: impl Into<String>) -> Self {
        CliError::Usage { flag, msg: msg.into() }
    }
}

impl From<MpeError> for CliError {
    fn from(e: MpeError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub fn execute(cmd: &Command) -> Result<String, CliError> {
    match cmd {
        Command::Coeffs(a) => coeffs(a),
        Command::Step(a) => match a.precision {
            PrecisionArg::Double => step::<f64>(a),
            PrecisionArg::Extended => step::<Extended>(a),
        },
        Command::Integrate(a) => match a.precision {
            PrecisionArg::Double => integrate::<f64>(a),
            PrecisionArg::Extended => integrate::<Extended>(a),
        },
        Command::Convergence(a) => match a.precision {
            PrecisionArg::Double => convergence::<f64>(a),
            PrecisionArg::Extended => convergence::<Extended>(a),
        },
        Command::Figure(a) => figure(a),
    }
}

fn coeffs(a: &CoeffsArgs) -> Result<String, CliError> {
    if a.digits == 0 {
        return Err(CliError::usage("--digits", "must be at least 1"));
    }
    let ws = if let Some(ks) = &a.ks {
        if a.n.is_some() || a.final_m.is_some() {
            return Err(CliError::usage("--ks", "cannot be combined with --n or --final-m"));
        }
        let ws = closed_form_weights(ks).map_err(|e| CliError::usage("--ks", e.to_string()))?;
        match a.parity {
            Some(ParityArg::Odd) => {
                ws.with_parity(Parity::Odd).map_err(|e| CliError::usage("--parity", e.to_string()))?
            }
            _ => ws,
        }
    } else {
        let n = a.n.ok_or_else(|| CliError::usage("--n", "required unless --ks is given"))?;
        match (a.parity.unwrap_or(ParityArg::Even), a.final_m) {
            (ParityArg::Even, None) => WeightSet::even(n).map_err(|e| CliError::usage("--n", e.to_string()))?,
            (ParityArg::Odd, None) => WeightSet::odd(n).map_err(|e| CliError::usage("--n", e.to_string()))?,
            (ParityArg::Even, Some(m)) => {
                WeightSet::final_correction(m, n).map_err(|e| CliError::usage("--final-m", e.to_string()))?
            }
            (ParityArg::Odd, Some(_)) => return Err(CliError::usage("--final-m", "requires even parity")),
        }
    };
    let mut out = String::new();
    for (k, c) in ws.iter() {
        out.push_str(&format!("{k}\t{}/{}\t{}\n", c.numer(), c.denom(), rational_to_sci(c, a.digits)));
    }
    Ok(out)
}

/// Maps order, parity, kernel and node flags to a scheme.
fn resolve_scheme(a: &SchemeArgs, problem: ProblemName) -> Result<MpeScheme, CliError> {
    let odd_kernel = a.kernel == Some(KernelArg::Odd);
    let even_kernel = || a.kernel.and_then(KernelArg::even_kernel).unwrap_or_else(|| default_kernel(problem));
    let kernel_error = |e: MpeError| match e {
        MpeError::Kernel(k) => CliError::usage("--kernel", format!("kernel {k} is not symmetric")),
        other => CliError::usage("--order", other.to_string()),
    };
    if let Some(ks) = &a.ks {
        if a.final_m.is_some() {
            return Err(CliError::usage("--final-m", "cannot be combined with --ks"));
        }
        if a.parity == Some(ParityArg::Even) && odd_kernel {
            return Err(CliError::usage("--kernel", "the odd basis needs --parity odd"));
        }
        let kernel = if a.parity == Some(ParityArg::Odd) || odd_kernel {
            KernelKind::OddBasis(1)
        } else {
            even_kernel()
        };
        return build_custom(ks, kernel).map_err(|e| CliError::usage("--ks", e.to_string()));
    }
    let order = a.order.ok_or_else(|| CliError::usage("--order", "required unless --ks is given"))?;
    if order == 0 {
        return Err(CliError::usage("--order", "must be at least 1"));
    }
    let odd = order % 2 == 1;
    match a.parity {
        Some(ParityArg::Even) if odd => {
            return Err(CliError::usage("--order", format!("order {order} is odd but --parity is even")))
        }
        Some(ParityArg::Odd) if !odd => {
            return Err(CliError::usage("--order", format!("order {order} is even but --parity is odd")))
        }
        _ => {}
    }
    if odd {
        if a.kernel.is_some() && !odd_kernel {
            return Err(CliError::usage("--kernel", "odd orders use the odd basis; pass --kernel odd or omit it"));
        }
        if a.final_m.is_some() {
            return Err(CliError::usage("--final-m", "requires an even order"));
        }
        return build_odd(order.div_ceil(2)).map_err(|e| CliError::usage("--order", e.to_string()));
    }
    if odd_kernel {
        return Err(CliError::usage("--kernel", format!("the odd basis needs an odd order, got {order}")));
    }
    match a.final_m {
        Some(m) => build_final_correction(m, order / 2, even_kernel()).map_err(|e| match e {
            MpeError::Kernel(_) => kernel_error(e),
            other => CliError::usage("--final-m", other.to_string()),
        }),
        None => build_even(order / 2, even_kernel()).map_err(kernel_error),
    }
}

enum Built<T> {
    Matrix(Matrix2x2),
    Radial(Radial<T>),
}

impl<T: Real> Built<T> {
    fn new(spec: &ProblemSpec) -> Self {
        match spec.name {
            ProblemName::Matrix2x2 => Built::Matrix(Matrix2x2 { split: spec.split }),
            ProblemName::Hydrogen if spec.regularized => Built::Radial(hydrogen_regularized()),
            ProblemName::Hydrogen => Built::Radial(hydrogen_problem()),
            ProblemName::Oscillator => Built::Radial(radial_oscillator_problem()),
        }
    }

    fn problem(&self) -> &dyn Problem<T> {
        match self {
            Built::Matrix(m) => m,
            Built::Radial(r) => r,
        }
    }
}

fn parse_real<T: Real>(flag: &'static str, s: &str) -> Result<T, CliError> {
    T::parse_decimal(s)
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::usage(flag, format!("`{s}` is not a finite number")))
}

/// Problem's own initial state, or the exact state at `--t0`.
fn start<T: Real>(p: &dyn Problem<T>, t0: Option<&str>) -> Result<ClockedState<T>, CliError> {
    match t0 {
        None => Ok(p.initial()),
        Some(s) => {
            let t = parse_real::<T>("--t0", s)?;
            Ok(ClockedState::new(p.exact(t), t))
        }
    }
}

fn check_kernel<T: Real>(scheme: &MpeScheme, p: &dyn Problem<T>) -> Result<(), CliError> {
    if scheme.kernel() == KernelKind::FrozenMidpoint && !p.has_full_exp() {
        return Err(CliError::usage("--kernel", format!("{} has no frozen exponential", p.name())));
    }
    Ok(())
}

fn step<T: Real>(a: &StepArgs) -> Result<String, CliError> {
    let spec = config::resolve(&a.problem, a.t0.as_ref())?;
    let radial = match Built::<T>::new(&spec) {
        Built::Radial(r) => r,
        Built::Matrix(_) => {
            return Err(CliError::usage("--problem", "step needs a force field; use hydrogen or oscillator"))
        }
    };
    let h = parse_real::<T>("--h", &a.h)?;
    if h.is_zero() {
        return Err(CliError::usage("--h", "must be non-zero"));
    }
    let cs = start(&radial, spec.t0.as_deref())?;
    let counted = Counted::new(radial);
    let next = a.method.step(&counted, &PhaseState::from_clocked(&cs), h)?;
    let next = next.to_clocked();
    let mut out = String::from("t,q,v,error,force_evaluations\n");
    out.push_str(&format!(
        "{},{},{},{},{}\n",
        next.t.to_sci(),
        next.state[0].to_sci(),
        next.state[1].to_sci(),
        radial.error(&next).to_sci(),
        counted.count()
    ));
    Ok(out)
}

fn integrate<T: Real>(a: &IntegrateArgs) -> Result<String, CliError> {
    let spec = config::resolve(&a.problem, a.t0.as_ref())?;
    let built = Built::<T>::new(&spec);
    let p = built.problem();
    let scheme = resolve_scheme(&a.scheme, spec.name)?;
    check_kernel(&scheme, p)?;
    let cs = start(p, spec.t0.as_deref())?;
    let t1 = match &a.t1 {
        Some(s) => parse_real::<T>("--t1", s)?,
        None => p.domain().1,
    };
    if a.steps == 0 {
        return Err(CliError::usage("--steps", "must be at least 1"));
    }
    if t1 == cs.t {
        return Err(CliError::usage("--t1", "must differ from the start time"));
    }
    let traj = mpe::integrate(&scheme, &p, cs.state, cs.t, t1, a.steps)?;
    let mut out = String::from("t");
    for c in p.components() {
        out.push(',');
        out.push_str(c);
    }
    out.push_str(",error\n");
    for s in &traj {
        let mut row = vec![s.t.to_sci()];
        row.extend(s.state.iter().map(|x| x.to_sci()));
        row.push(p.error(s).to_sci());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn convergence<T: Real>(a: &ConvergenceArgs) -> Result<String, CliError> {
    let spec = config::resolve(&a.problem, None)?;
    let built = Built::<T>::new(&spec);
    let p = built.problem();
    let scheme = resolve_scheme(&a.scheme, spec.name)?;
    check_kernel(&scheme, p)?;
    let report: ConvergenceReport<T> = match a.mode {
        ModeArg::Local => {
            if a.step_counts.is_some() {
                return Err(CliError::usage("--step-counts", "only used with --mode global or interior"));
            }
            if a.t1.is_some() {
                return Err(CliError::usage("--t1", "only used with --mode global or interior"));
            }
            let hs = match &a.hs {
                Some(hs) => hs.iter().map(|s| parse_real::<T>("--hs", s)).collect::<Result<Vec<T>, _>>()?,
                None => [(2, 5), (1, 5), (1, 10), (1, 20)].iter().map(|&(n, d)| T::ratio(n, d)).collect(),
            };
            local_order(p, &scheme, &hs).map_err(|e| list_error("--hs", e))?
        }
        ModeArg::Global | ModeArg::Interior => {
            if a.hs.is_some() {
                return Err(CliError::usage("--hs", "only used with --mode local"));
            }
            let counts = a.step_counts.clone().unwrap_or_else(|| vec![4, 8, 16, 32]);
            let t_end = match &a.t1 {
                Some(s) => parse_real::<T>("--t1", s)?,
                None => p.domain().1,
            };
            let run = if a.mode == ModeArg::Global { global_order } else { interior_order };
            run(p, &scheme, t_end, &counts).map_err(|e| list_error("--step-counts", e))?
        }
    };
    let mode = match a.mode {
        ModeArg::Local => "local",
        ModeArg::Global => "global",
        ModeArg::Interior => "interior",
    };
    let mut out = format!(
        "# multiprod-{} convergence problem={} precision={} mode={mode} scheme={} fitted_order={:.6} \
         residual={:.3e} used={} kernel_applications={}\n",
        env!("CARGO_PKG_VERSION"),
        spec.name,
        report.precision,
        report.descriptor,
        report.fitted_order,
        report.fit_residual,
        report.used,
        report.kernel_applications,
    );
    out.push_str("h,error\n");
    for (h, e) in &report.pairs {
        out.push_str(&format!("{},{}\n", h.to_sci(), e.to_sci()));
    }
    Ok(out)
}

/// Malformed step lists are usage errors; everything else is numerical.
fn list_error(flag: &'static str, e: HarnessError) -> CliError {
    match e {
        HarnessError::TooFew { .. } | HarnessError::NotDecreasing => CliError::usage(flag, e.to_string()),
        other => other.into(),
    }
}

fn figure(a: &FigureArgs) -> Result<String, CliError> {
    if a.points < 2 {
        return Err(CliError::usage("--points", "need at least 2 grid points"));
    }
    if a.orders.as_ref().is_some_and(|o| o.contains(&0)) {
        return Err(CliError::usage("--orders", "orders must be at least 1"));
    }
    match a.which {
        1 => {
            if a.orders.is_some() {
                return Err(CliError::usage("--orders", "figure 1 has fixed orders"));
            }
            if a.precision.is_some() {
                return Err(CliError::usage("--precision", "figure 1 is computed in double precision"));
            }
            Ok(figure1_csv(a.points)?)
        }
        2 => {
            let orders = a.orders.clone().unwrap_or_else(|| vec![2, 4, 8, 16, 24]);
            match a.precision.map(Precision::from).unwrap_or(Precision::Double) {
                Precision::Double => Ok(figure2_csv::<f64>(&orders, a.points)?),
                Precision::Extended => Ok(figure2_csv::<Extended>(&orders, a.points)?),
            }
        }
        _ => {
            if a.precision.is_some() {
                return Err(CliError::usage("--precision", "figure 3 always compares double with extended"));
            }
            let orders = a.orders.clone().unwrap_or_else(|| (1..=10).map(|i| 8 * i).collect());
            Ok(figure3_csv(&orders, a.points)?.0)
        }
    }
}
