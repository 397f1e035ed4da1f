//! Explicit integrators for `q'' = a(q, t)` and the Hamiltonian split system.
//!
//! The third-, fifth- and seventh-order methods are closed-form reductions of
//! the odd multi-product expansions over `U_2..U_4`; stage times follow the
//! clock of the corresponding kicks.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::kernels::{ClockedState, FlowError, SplitSystem};
use crate::mpe::{mpe_step, MpeError, MpeScheme};
use crate::numerics::Real;

/// Acceleration field `a(q, t)`.
pub trait ForceField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `a(q, t)` into `out`.
    fn accel(&self, q: &[T], t: T, out: &mut [T]) -> Result<(), FlowError>;
}

impl<T: Real, F: ForceField<T> + ?Sized> ForceField<T> for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn accel(&self, q: &[T], t: T, out: &mut [T]) -> Result<(), FlowError> {
        (**self).accel(q, t, out)
    }
}

/// Counts evaluations of the wrapped field and optionally logs their arguments.
pub struct Counted<T, F> {
    inner: F,
    count: AtomicU64,
    log: Option<Mutex<Vec<(Vec<T>, T)>>>,
}

impl<T: Real, F: ForceField<T>> Counted<T, F> {
    pub fn new(inner: F) -> Self {
        Self { inner, count: AtomicU64::new(0), log: None }
    }

    pub fn with_log(inner: F) -> Self {
        Self { inner, count: AtomicU64::new(0), log: Some(Mutex::new(Vec::new())) }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    /// Evaluation points `(q, t)` in call order; empty without logging.
    pub fn evaluations(&self) -> Vec<(Vec<T>, T)> {
        self.log.as_ref().map(|l| l.lock().expect("force log").clone()).unwrap_or_default()
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
        if let Some(l) = &self.log {
            l.lock().expect("force log").clear();
        }
    }
}

impl<T: Real, F: ForceField<T>> ForceField<T> for Counted<T, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn accel(&self, q: &[T], t: T, out: &mut [T]) -> Result<(), FlowError> {
        self.count.fetch_add(1, Ordering::Relaxed);
        if let Some(l) = &self.log {
            l.lock().expect("force log").push((q.to_vec(), t));
        }
        self.inner.accel(q, t, out)
    }
}

/// Position, velocity and clock.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T> {
    pub q: Vec<T>,
    pub v: Vec<T>,
    pub t: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(q: Vec<T>, v: Vec<T>, t: T) -> Self {
        assert_eq!(q.len(), v.len(), "position and velocity dimensions differ");
        Self { q, v, t }
    }

    /// Flattened as `[q, v]`.
    pub fn to_clocked(&self) -> ClockedState<T> {
        let mut state = self.q.clone();
        state.extend_from_slice(&self.v);
        ClockedState::new(state, self.t)
    }

    pub fn from_clocked(cs: &ClockedState<T>) -> Self {
        let d = cs.state.len() / 2;
        Self { q: cs.state[..d].to_vec(), v: cs.state[d..].to_vec(), t: cs.t }
    }
}

/// `H = v²/2 + V(q)` split into the drift `A = v·∂_q` and the kick
/// `B = a(q, t)·∂_v`. The state is `[q, v]`.
pub struct Hamiltonian<F>(pub F);

impl<T: Real, F: ForceField<T>> SplitSystem<T> for Hamiltonian<F> {
    fn dim(&self) -> usize {
        2 * self.0.dim()
    }

    fn flow_a(&self, state: &mut [T], h: T) -> Result<(), FlowError> {
        let d = self.0.dim();
        let (q, v) = state.split_at_mut(d);
        for (qi, &vi) in q.iter_mut().zip(v.iter()) {
            *qi = *qi + h * vi;
        }
        Ok(())
    }

    fn flow_b(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        let d = self.0.dim();
        let (q, v) = state.split_at_mut(d);
        let mut a = vec![T::zero(); d];
        self.0.accel(q, clock, &mut a)?;
        for (vi, ai) in v.iter_mut().zip(a) {
            *vi = *vi + h * ai;
        }
        Ok(())
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

fn eval<T: Real, F: ForceField<T>>(f: &F, q: &[T], t: T) -> Result<Vec<T>, FlowError> {
    let mut a = vec![T::zero(); f.dim()];
    f.accel(q, t, &mut a)?;
    Ok(a)
}

/// `q0 + α h v0 + h² Σ β_j a_j`.
fn stage<T: Real>(s: &PhaseState<T>, h: T, alpha: T, terms: &[(T, &[T])]) -> Vec<T> {
    (0..s.q.len())
        .map(|i| {
            let kick = terms.iter().fold(T::zero(), |acc, &(b, a)| acc + b * a[i]);
            s.q[i] + alpha * h * s.v[i] + h * h * kick
        })
        .collect()
}

/// `(q0 + h v0 + h² Σ βq_j a_j, v0 + h Σ βv_j a_j)`.
fn finish<T: Real>(
    s: &PhaseState<T>,
    h: T,
    forces: &[&[T]],
    bq: &[T],
    bv: &[T],
) -> PhaseState<T> {
    let n = s.q.len();
    let mut q = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let dq = forces.iter().zip(bq).fold(T::zero(), |acc, (a, &b)| acc + b * a[i]);
        let dv = forces.iter().zip(bv).fold(T::zero(), |acc, (a, &b)| acc + b * a[i]);
        q.push(s.q[i] + h * s.v[i] + h * h * dq);
        v.push(s.v[i] + h * dv);
    }
    PhaseState { q, v, t: s.t + h }
}

fn frac<T: Real>(h: T, num: i64, den: i64) -> T {
    h * T::lit(num) / T::lit(den)
}

/// Velocity Verlet. Two evaluations.
pub fn verlet_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let half = T::ratio(1, 2);
    let a0 = eval(f, &s.q, s.t)?;
    let q1 = stage(s, h, T::one(), &[(half, &a0)]);
    let a1 = eval(f, &q1, s.t + h)?;
    Ok(finish(s, h, &[&a0, &a1], &[half, T::zero()], &[half, half]))
}

/// Second-order Runge–Kutta from the averaged first-order products. Two evaluations.
pub fn rk2_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let half = T::ratio(1, 2);
    let a0 = eval(f, &s.q, s.t)?;
    let a1 = eval(f, &stage(s, h, T::one(), &[]), s.t + h)?;
    Ok(finish(s, h, &[&a0, &a1], &[half, T::zero()], &[half, half]))
}

/// Kutta's third-order method. Three evaluations.
pub fn kutta3_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let a0 = eval(f, &s.q, s.t)?;
    let ah = eval(f, &stage(s, h, T::ratio(1, 2), &[]), s.t + frac(h, 1, 2))?;
    let a1 = eval(f, &stage(s, h, T::one(), &[(T::one(), &a0)]), s.t + h)?;
    Ok(finish(
        s,
        h,
        &[&a0, &ah, &a1],
        &[T::ratio(1, 6), T::ratio(1, 3), T::zero()],
        &[T::ratio(1, 6), T::ratio(2, 3), T::ratio(1, 6)],
    ))
}

/// Nyström's third-order method. Two evaluations.
pub fn nystrom3_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let a0 = eval(f, &s.q, s.t)?;
    let q23 = stage(s, h, T::ratio(2, 3), &[(T::ratio(2, 9), &a0)]);
    let a23 = eval(f, &q23, s.t + frac(h, 2, 3))?;
    let quarter = T::ratio(1, 4);
    Ok(finish(s, h, &[&a0, &a23], &[quarter, quarter], &[quarter, T::ratio(3, 4)]))
}

/// Third-order method that never evaluates the force at `q0`. Two evaluations.
pub fn ba3_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let a13 = eval(f, &stage(s, h, T::ratio(1, 3), &[]), s.t + frac(h, 1, 3))?;
    let a1 = eval(f, &stage(s, h, T::one(), &[(T::ratio(2, 3), &a13)]), s.t + h)?;
    Ok(finish(
        s,
        h,
        &[&a13, &a1],
        &[T::ratio(1, 2), T::zero()],
        &[T::ratio(3, 4), T::ratio(1, 4)],
    ))
}

/// Nyström's fifth-order method. Four evaluations.
pub fn nystrom5_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let a0 = eval(f, &s.q, s.t)?;
    let a23 = eval(f, &stage(s, h, T::ratio(2, 3), &[(T::ratio(2, 9), &a0)]), s.t + frac(h, 2, 3))?;
    let a25 = eval(f, &stage(s, h, T::ratio(2, 5), &[(T::ratio(2, 25), &a0)]), s.t + frac(h, 2, 5))?;
    let q45 = stage(s, h, T::ratio(4, 5), &[(T::ratio(4, 25), &a0), (T::ratio(4, 25), &a25)]);
    let a45 = eval(f, &q45, s.t + frac(h, 4, 5))?;
    let w = |xs: [i64; 4]| xs.map(|x| T::ratio(x, 192));
    Ok(finish(s, h, &[&a0, &a25, &a23, &a45], &w([23, 75, -27, 25]), &w([23, 125, -81, 125])))
}

/// Seventh-order method from the odd expansion over `U_1..U_4`. Seven evaluations.
pub fn nystrom7_step<T: Real, F: ForceField<T>>(
    f: &F,
    s: &PhaseState<T>,
    h: T,
) -> Result<PhaseState<T>, FlowError> {
    let r = T::ratio;
    let a0 = eval(f, &s.q, s.t)?;
    let a23 = eval(f, &stage(s, h, r(2, 3), &[(r(2, 9), &a0)]), s.t + frac(h, 2, 3))?;
    let a25 = eval(f, &stage(s, h, r(2, 5), &[(r(2, 25), &a0)]), s.t + frac(h, 2, 5))?;
    let a45 = eval(f, &stage(s, h, r(4, 5), &[(r(4, 25), &a0), (r(4, 25), &a25)]), s.t + frac(h, 4, 5))?;
    let a27 = eval(f, &stage(s, h, r(2, 7), &[(r(2, 49), &a0)]), s.t + frac(h, 2, 7))?;
    let a47 = eval(f, &stage(s, h, r(4, 7), &[(r(4, 49), &a0), (r(4, 49), &a27)]), s.t + frac(h, 4, 7))?;
    let q67 = stage(s, h, r(6, 7), &[(r(6, 49), &a0), (r(8, 49), &a27), (r(4, 49), &a47)]);
    let a67 = eval(f, &q67, s.t + frac(h, 6, 7))?;
    let w = |xs: [i64; 7]| xs.map(|x| T::ratio(x, 23040));
    Ok(finish(
        s,
        h,
        &[&a0, &a23, &a25, &a45, &a27, &a47, &a67],
        &w([1682, 729, -9375, -3125, 12005, 7203, 2401]),
        &w([1682, 2187, -15625, -15625, 16807, 16807, 16807]),
    ))
}

/// Explicit integrators by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Verlet,
    Rk2,
    Kutta3,
    Nystrom3,
    Ba3,
    Nystrom5,
    Nystrom7,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Verlet,
        Method::Rk2,
        Method::Kutta3,
        Method::Nystrom3,
        Method::Ba3,
        Method::Nystrom5,
        Method::Nystrom7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Verlet => "verlet",
            Method::Rk2 => "rk2",
            Method::Kutta3 => "kutta3",
            Method::Nystrom3 => "nystrom3",
            Method::Ba3 => "ba3",
            Method::Nystrom5 => "nystrom5",
            Method::Nystrom7 => "nystrom7",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Method::Verlet | Method::Rk2 => 2,
            Method::Kutta3 | Method::Nystrom3 | Method::Ba3 => 3,
            Method::Nystrom5 => 5,
            Method::Nystrom7 => 7,
        }
    }

    pub fn step<T: Real, F: ForceField<T>>(
        self,
        f: &F,
        s: &PhaseState<T>,
        h: T,
    ) -> Result<PhaseState<T>, FlowError> {
        match self {
            Method::Verlet => verlet_step(f, s, h),
            Method::Rk2 => rk2_step(f, s, h),
            Method::Kutta3 => kutta3_step(f, s, h),
            Method::Nystrom3 => nystrom3_step(f, s, h),
            Method::Ba3 => ba3_step(f, s, h),
            Method::Nystrom5 => nystrom5_step(f, s, h),
            Method::Nystrom7 => nystrom7_step(f, s, h),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Cost of one expansion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBudget {
    pub kernel_applications: u64,
    /// Every force call made by the branches.
    pub raw_force_evaluations: u64,
    /// Calls at the common starting point `(q0, t0)` counted once.
    pub shared_force_evaluations: u64,
}

/// Measures the force evaluations of one step of `scheme` from `s`.
pub fn force_budget<T: Real, F: ForceField<T>>(
    scheme: &MpeScheme,
    force: F,
    s: &PhaseState<T>,
    h: T,
) -> Result<StepBudget, MpeError> {
    let counted = Counted::with_log(force);
    let sys = Hamiltonian(&counted);
    mpe_step(scheme, &sys, &s.to_clocked(), h)?;
    let evals = counted.evaluations();
    let raw = evals.len() as u64;
    let at_start = evals.iter().filter(|(q, t)| *t == s.t && *q == s.q).count() as u64;
    Ok(StepBudget {
        kernel_applications: scheme.kernel_applications(),
        raw_force_evaluations: raw,
        shared_force_evaluations: raw - at_start + u64::from(at_start > 0),
    })
}
