//! Multi-product expansions: weighted sums of kernel powers.
//!
//! An even scheme evaluates `Σ c_i K^{k_i}(h/k_i)` over a symmetric second-order
//! kernel `K`. An odd scheme evaluates `Σ c_i U_{(k_i+1)/2}(h)` over the odd
//! basis, one full-width application per member.

use rayon::prelude::*;

use crate::coefficients::{Parity, WeightError, WeightSet};
use crate::kernels::{compose_k, ClockedState, FlowError, KernelKind, SplitSystem};
use crate::numerics::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpeError {
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("kernel {0} cannot be used here")]
    Kernel(KernelKind),
    #[error("branch {index} (k = {k}) failed: {source}")]
    Branch {
        index: usize,
        k: u32,
        #[source]
        source: FlowError,
    },
    #[error("step {index} failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<MpeError>,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The expansion is applied at every step.
    PerStep,
    /// Each block runs `m` kernel steps and only its endpoint is extrapolated.
    FinalCorrection { m: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeScheme {
    kernel: KernelKind,
    weights: WeightSet,
    nominal_order: u32,
    mode: Mode,
}

impl MpeScheme {
    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn nominal_order(&self) -> u32 {
        self.nominal_order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_odd(&self) -> bool {
        matches!(self.kernel, KernelKind::OddBasis(_))
    }

    /// Kernel executed for node `k`, and how many times.
    fn branch(&self, k: u32) -> (KernelKind, u32) {
        if self.is_odd() {
            (KernelKind::OddBasis(k.div_ceil(2)), 1)
        } else {
            (self.kernel, k)
        }
    }

    /// Kernel applications per step; each odd-basis member counts once.
    pub fn kernel_applications(&self) -> u64 {
        self.weights.ks().iter().map(|&k| self.branch(k).1 as u64).sum()
    }

    /// Short label such as `even4-ab` or `odd5`.
    pub fn descriptor(&self) -> String {
        let base = match (self.is_odd(), self.mode) {
            (true, _) => format!("odd{}", self.nominal_order),
            (false, Mode::PerStep) if self.weights.parity() == Parity::Even => {
                format!("even{}-{}", self.nominal_order, self.kernel)
            }
            (false, Mode::PerStep) => format!("custom{}-{}", self.nominal_order, self.kernel),
            (false, Mode::FinalCorrection { m }) => {
                format!("final{}m{}-{}", self.nominal_order, m, self.kernel)
            }
        };
        let ks: Vec<String> = self.weights.ks().iter().map(u32::to_string).collect();
        format!("{base}[{}]", ks.join(" "))
    }
}

fn symmetric(kernel: KernelKind) -> Result<(), MpeError> {
    if kernel.is_symmetric() {
        Ok(())
    } else {
        Err(MpeError::Kernel(kernel))
    }
}

/// Order `2n` over `{1..n}`.
pub fn build_even(n: u32, kernel: KernelKind) -> Result<MpeScheme, MpeError> {
    symmetric(kernel)?;
    let weights = WeightSet::even(n)?;
    Ok(MpeScheme { kernel, weights, nominal_order: 2 * n, mode: Mode::PerStep })
}

/// Order `2n − 1` over `U_1..U_n`.
pub fn build_odd(n: u32) -> Result<MpeScheme, MpeError> {
    let weights = WeightSet::odd(n)?;
    Ok(MpeScheme {
        kernel: KernelKind::OddBasis(n),
        weights,
        nominal_order: 2 * n - 1,
        mode: Mode::PerStep,
    })
}

/// Even orders `2n` map to [`build_even`], odd orders `2n − 1` to [`build_odd`].
pub fn build_for_order(order: u32, kernel: KernelKind) -> Result<MpeScheme, MpeError> {
    match order {
        0 => Err(MpeError::Argument("order must be at least 1".into())),
        o if o % 2 == 0 => build_even(o / 2, kernel),
        o => build_odd(o.div_ceil(2)),
    }
}

/// Endpoint correction of order `2n` over `{m, n−1, .., 1}`.
pub fn build_final_correction(m: u32, n: u32, kernel: KernelKind) -> Result<MpeScheme, MpeError> {
    symmetric(kernel)?;
    let weights = WeightSet::final_correction(m, n)?;
    Ok(MpeScheme { kernel, weights, nominal_order: 2 * n, mode: Mode::FinalCorrection { m } })
}

/// Arbitrary node set. With a symmetric kernel the order is `2|ks|`; with
/// [`KernelKind::OddBasis`] the nodes must be odd and the order is `2|ks| − 1`.
pub fn build_custom(ks: &[u32], kernel: KernelKind) -> Result<MpeScheme, MpeError> {
    let weights = crate::coefficients::closed_form_weights(ks)?;
    let n = ks.len() as u32;
    match kernel {
        KernelKind::OddBasis(_) => {
            let weights = weights.with_parity(Parity::Odd)?;
            let top = ks.iter().max().copied().unwrap_or(1).div_ceil(2);
            Ok(MpeScheme {
                kernel: KernelKind::OddBasis(top),
                weights,
                nominal_order: 2 * n - 1,
                mode: Mode::PerStep,
            })
        }
        k => {
            symmetric(k)?;
            Ok(MpeScheme { kernel: k, weights, nominal_order: 2 * n, mode: Mode::PerStep })
        }
    }
}

/// Error-free product: `a·b = p + e` exactly.
#[inline]
fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `Σ w_i x_i` evaluated as if in twice the working precision.
pub fn compensated_dot<T: Real>(w: &[T], x: impl IntoIterator<Item = T>) -> T {
    let mut acc = Accumulator::default();
    for (&wi, xi) in w.iter().zip(x) {
        acc.add_product(wi, xi);
    }
    acc.value()
}

/// As [`compensated_dot`] with each weight given as an unevaluated sum `hi + lo`.
pub fn compensated_dot_pairs<T: Real>(w: &[(T, T)], x: impl IntoIterator<Item = T>) -> T {
    let mut acc = Accumulator::default();
    for (&(hi, lo), xi) in w.iter().zip(x) {
        acc.add_product(hi, xi);
        acc.add_product(lo, xi);
    }
    acc.value()
}

struct Accumulator<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for Accumulator<T> {
    fn default() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }
}

impl<T: Real> Accumulator<T> {
    #[inline]
    fn add_product(&mut self, a: T, b: T) {
        let (p, pe) = two_prod(a, b);
        let (s, se) = two_sum(self.sum, p);
        self.sum = s;
        self.carry = self.carry + (pe + se);
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

fn combine<T: Real>(weights: &[(T, T)], branches: &[ClockedState<T>], t: T) -> ClockedState<T> {
    let dim = branches[0].state.len();
    let state = (0..dim)
        .map(|j| compensated_dot_pairs(weights, branches.iter().map(|b| b.state[j])))
        .collect();
    ClockedState { state, t }
}

fn branch_states<T: Real, S: SplitSystem<T>>(
    scheme: &MpeScheme,
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
    order: &[usize],
    parallel: bool,
) -> Result<Vec<ClockedState<T>>, MpeError> {
    let ks = scheme.weights.ks();
    let one = |&i: &usize| {
        let (kernel, reps) = scheme.branch(ks[i]);
        compose_k(sys, kernel, cs, h, reps).map_err(|source| MpeError::Branch {
            index: i,
            k: ks[i],
            source,
        })
    };
    if parallel {
        order.par_iter().map(one).collect()
    } else {
        order.iter().map(one).collect()
    }
}

fn ascending(ws: &WeightSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ws.len()).collect();
    idx.sort_by_key(|&i| ws.ks()[i]);
    idx
}

fn step_impl<T: Real, S: SplitSystem<T>>(
    scheme: &MpeScheme,
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
    parallel: bool,
) -> Result<ClockedState<T>, MpeError> {
    let order = ascending(&scheme.weights);
    let all: Vec<(T, T)> = scheme.weights.cs_pairs();
    let weights: Vec<(T, T)> = order.iter().map(|&i| all[i]).collect();
    let branches = branch_states(scheme, sys, cs, h, &order, parallel)?;
    Ok(combine(&weights, &branches, cs.t + h))
}

/// One expansion over width `h`. Branches start from `cs` and are summed in
/// ascending `k` with compensated accumulation against double-word weights, so
/// weight rounding does not contribute at working precision.
pub fn mpe_step<T: Real, S: SplitSystem<T>>(
    scheme: &MpeScheme,
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, MpeError> {
    step_impl(scheme, sys, cs, h, false)
}

/// [`mpe_step`] with branches evaluated on the rayon pool. The result is
/// identical to the sequential version.
pub fn mpe_step_parallel<T: Real, S: SplitSystem<T>>(
    scheme: &MpeScheme,
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, MpeError> {
    step_impl(scheme, sys, cs, h, true)
}

/// Trajectory from `t0` to `t1` in `steps` uniform steps, starting with the
/// initial state.
///
/// In final-correction mode each step is a block: the `m` kernel substeps are
/// recorded as intermediate states and the block endpoint is replaced by the
/// extrapolated value.
pub fn integrate<T: Real, S: SplitSystem<T>>(
    scheme: &MpeScheme,
    sys: &S,
    state0: Vec<T>,
    t0: T,
    t1: T,
    steps: usize,
) -> Result<Vec<ClockedState<T>>, MpeError> {
    if steps == 0 {
        return Err(MpeError::Argument("steps must be at least 1".into()));
    }
    if t1 == t0 || !(t1 - t0).is_finite() {
        return Err(MpeError::Argument("integration interval must be non-empty and finite".into()));
    }
    let h = (t1 - t0) / T::from_usize(steps).expect("step count");
    let mut cs = ClockedState::new(state0, t0);
    let mut out = vec![cs.clone()];
    let wrap = |index| move |e: MpeError| MpeError::Step { index, source: Box::new(e) };
    for i in 0..steps {
        match scheme.mode {
            Mode::PerStep => {
                cs = mpe_step(scheme, sys, &cs, h).map_err(wrap(i))?;
                out.push(cs.clone());
            }
            Mode::FinalCorrection { m } => {
                let sub = h / T::lit(m as i64);
                let mut inner = cs.clone();
                for _ in 1..m {
                    inner = compose_k(sys, scheme.kernel, &inner, sub, 1)
                        .map_err(|source| MpeError::Branch { index: 0, k: m, source })
                        .map_err(wrap(i))?;
                    out.push(inner.clone());
                }
                cs = mpe_step(scheme, sys, &cs, h).map_err(wrap(i))?;
                out.push(cs.clone());
            }
        }
    }
    Ok(out)
}
