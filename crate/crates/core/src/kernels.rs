//! Exponential-product kernels with Suzuki clock bookkeeping.
//!
//! A kernel is a [`Schedule`]: a list of A- and B-stages whose widths are exact
//! fractions of the step `h`. A-stages carry the clock and advance it by their
//! width; B-stages are evaluated at the current clock. For `A(t) = T + V(t)` this
//! is the ordinary splitting of `(T + D) + V(t)`, where `D` is the forward time
//! derivative.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::numerics::{NumericsError, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("coefficient is singular at clock {clock}")]
    Singular { clock: f64 },
    #[error("system does not provide {0}")]
    Capability(&'static str),
    #[error("state became non-finite")]
    NonFinite,
    #[error("state has {got} components, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A pair of exactly solvable flows over a linear state space.
///
/// `flow_a` is autonomous and owns the clock; `flow_b` may depend on the clock
/// value at which it is applied.
pub trait SplitSystem<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// `state ← e^{hA} state`.
    fn flow_a(&self, state: &mut [T], h: T) -> Result<(), FlowError>;

    /// `state ← e^{hB(clock)} state`.
    fn flow_b(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError>;

    /// `state ← e^{h(A + B)(clock)} state` with the generator frozen at `clock`.
    fn full_exp(&self, _state: &mut [T], _clock: T, _h: T) -> Result<(), FlowError> {
        Err(FlowError::Capability("a frozen-time exponential"))
    }

    fn has_full_exp(&self) -> bool {
        false
    }

    fn is_time_dependent(&self) -> bool {
        false
    }
}

impl<T: Real, S: SplitSystem<T> + ?Sized> SplitSystem<T> for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn flow_a(&self, state: &mut [T], h: T) -> Result<(), FlowError> {
        (**self).flow_a(state, h)
    }
    fn flow_b(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        (**self).flow_b(state, clock, h)
    }
    fn full_exp(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        (**self).full_exp(state, clock, h)
    }
    fn has_full_exp(&self) -> bool {
        (**self).has_full_exp()
    }
    fn is_time_dependent(&self) -> bool {
        (**self).is_time_dependent()
    }
}

/// View of a linear system in which the whole generator is the B-stage and the
/// A-stage only moves the clock.
///
/// Strang and odd-basis schedules run on this view produce products of frozen
/// exponentials `e^{w h A(t_j)}`.
#[derive(Debug, Clone, Copy)]
pub struct Frozen<S>(pub S);

impl<T: Real, S: SplitSystem<T>> SplitSystem<T> for Frozen<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn flow_a(&self, _state: &mut [T], _h: T) -> Result<(), FlowError> {
        Ok(())
    }
    fn flow_b(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        self.0.full_exp(state, clock, h)
    }
    fn full_exp(&self, state: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        self.0.full_exp(state, clock, h)
    }
    fn has_full_exp(&self) -> bool {
        self.0.has_full_exp()
    }
    fn is_time_dependent(&self) -> bool {
        self.0.is_time_dependent()
    }
}

/// State vector together with the clock value it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockedState<T> {
    pub state: Vec<T>,
    pub t: T,
}

impl<T: Real> ClockedState<T> {
    pub fn new(state: Vec<T>, t: T) -> Self {
        Self { state, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `e^{(h/2)A} e^{hB} e^{(h/2)A}`: drift–kick–drift for Hamiltonians.
    AB,
    /// `e^{(h/2)B} e^{hA} e^{(h/2)B}`: kick–drift–kick (velocity Verlet).
    BA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `e^{hA} e^{hB(t)}`.
    T1,
    StrangAB,
    StrangBA,
    /// `e^{hA(t + h/2)}`; needs [`SplitSystem::full_exp`].
    FrozenMidpoint,
    /// Odd basis member `U_n`.
    OddBasis(u32),
}

impl KernelKind {
    pub fn name(self) -> String {
        match self {
            KernelKind::T1 => "t1".into(),
            KernelKind::StrangAB => "ab".into(),
            KernelKind::StrangBA => "ba".into(),
            KernelKind::FrozenMidpoint => "midpoint".into(),
            KernelKind::OddBasis(n) => format!("odd{n}"),
        }
    }

    /// True for the time-symmetric second-order family.
    pub fn is_symmetric(self) -> bool {
        matches!(self, KernelKind::StrangAB | KernelKind::StrangBA | KernelKind::FrozenMidpoint)
    }

    pub fn schedule(self) -> Result<Schedule, FlowError> {
        let half = Ratio::new(1, 2);
        let one = Ratio::one();
        Ok(match self {
            KernelKind::T1 => Schedule::new(vec![Stage::b(one), Stage::a(one)]),
            KernelKind::StrangAB | KernelKind::FrozenMidpoint => {
                Schedule::new(vec![Stage::a(half), Stage::b(one), Stage::a(half)])
            }
            KernelKind::StrangBA => {
                Schedule::new(vec![Stage::b(half), Stage::a(one), Stage::b(half)])
            }
            KernelKind::OddBasis(0) => {
                return Err(FlowError::Argument("odd basis index must be at least 1".into()))
            }
            KernelKind::OddBasis(n) => {
                let x = 2 * n as i64 - 1;
                let mut stages = vec![Stage::b(Ratio::new(1, x))];
                for _ in 1..n {
                    stages.push(Stage::a(Ratio::new(2, x)));
                    stages.push(Stage::b(Ratio::new(2, x)));
                }
                stages.push(Stage::a(Ratio::new(1, x)));
                Schedule::new(stages)
            }
        })
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageKind {
    A,
    B,
}

/// One exponential factor; `width` is a fraction of the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stage {
    pub kind: StageKind,
    pub width: Ratio<i64>,
}

impl Stage {
    pub fn a(width: Ratio<i64>) -> Self {
        Self { kind: StageKind::A, width }
    }
    pub fn b(width: Ratio<i64>) -> Self {
        Self { kind: StageKind::B, width }
    }
}

/// Stages in application order (the rightmost factor of the product first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    stages: Vec<Stage>,
}

impl Schedule {
    /// Builds a schedule, merging adjacent stages of the same kind.
    pub fn new(stages: Vec<Stage>) -> Self {
        let mut merged: Vec<Stage> = Vec::with_capacity(stages.len());
        for s in stages {
            match merged.last_mut() {
                Some(last) if last.kind == s.kind => last.width += s.width,
                _ => merged.push(s),
            }
        }
        merged.retain(|s| !s.width.is_zero());
        Self { stages: merged }
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Total width of the clock-carrying stages.
    pub fn a_width(&self) -> Ratio<i64> {
        self.stages.iter().filter(|s| s.kind == StageKind::A).map(|s| s.width).sum()
    }

    pub fn b_stage_count(&self) -> usize {
        self.stages.iter().filter(|s| s.kind == StageKind::B).count()
    }

    /// `k` copies at width `1/k`, merged at the seams.
    pub fn power(&self, k: u32) -> Self {
        let scale = Ratio::new(1, k as i64);
        let stages = (0..k)
            .flat_map(|_| self.stages.iter().map(move |s| Stage { kind: s.kind, width: s.width * scale }))
            .collect();
        Self::new(stages)
    }

    /// Apply over a step of width `h`, advancing the clock by the A-widths.
    pub fn apply<T: Real, S: SplitSystem<T> + ?Sized>(
        &self,
        sys: &S,
        cs: &mut ClockedState<T>,
        h: T,
    ) -> Result<(), FlowError> {
        if cs.state.len() != sys.dim() {
            return Err(FlowError::Dimension { expected: sys.dim(), got: cs.state.len() });
        }
        if h.is_zero() {
            return Ok(());
        }
        let frac = |r: Ratio<i64>| h * T::lit(*r.numer()) / T::lit(*r.denom());
        let t0 = cs.t;
        let mut elapsed = Ratio::<i64>::zero();
        for stage in &self.stages {
            match stage.kind {
                StageKind::A => {
                    sys.flow_a(&mut cs.state, frac(stage.width))?;
                    elapsed += stage.width;
                }
                StageKind::B => {
                    let clock = if elapsed.is_zero() { t0 } else { t0 + frac(elapsed) };
                    sys.flow_b(&mut cs.state, clock, frac(stage.width))?;
                }
            }
        }
        cs.t = if elapsed.is_zero() { t0 } else { t0 + frac(elapsed) };
        if cs.state.iter().any(|x| !x.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        Ok(())
    }
}

fn run<T: Real, S: SplitSystem<T> + ?Sized>(
    sys: &S,
    schedule: &Schedule,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, FlowError> {
    if !h.is_finite() {
        return Err(FlowError::Argument("step must be finite".into()));
    }
    let mut out = cs.clone();
    schedule.apply(sys, &mut out, h)?;
    Ok(out)
}

/// `e^{hA} e^{hB(t)}`.
pub fn t1_step<T: Real, S: SplitSystem<T> + ?Sized>(
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, FlowError> {
    run(sys, &KernelKind::T1.schedule()?, cs, h)
}

pub fn strang_step<T: Real, S: SplitSystem<T> + ?Sized>(
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
    orientation: Orientation,
) -> Result<ClockedState<T>, FlowError> {
    let kind = match orientation {
        Orientation::AB => KernelKind::StrangAB,
        Orientation::BA => KernelKind::StrangBA,
    };
    run(sys, &kind.schedule()?, cs, h)
}

/// `e^{hA(t + h/2)}`.
pub fn frozen_midpoint_step<T: Real, S: SplitSystem<T>>(
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, FlowError> {
    compose_k(sys, KernelKind::FrozenMidpoint, cs, h, 1)
}

/// `U_n(h)`.
pub fn u_basis_step<T: Real, S: SplitSystem<T> + ?Sized>(
    sys: &S,
    cs: &ClockedState<T>,
    h: T,
    n: u32,
) -> Result<ClockedState<T>, FlowError> {
    run(sys, &KernelKind::OddBasis(n).schedule()?, cs, h)
}

/// `K^k(h/k)` for any kernel kind.
pub fn compose_k<T: Real, S: SplitSystem<T>>(
    sys: &S,
    kernel: KernelKind,
    cs: &ClockedState<T>,
    h: T,
    k: u32,
) -> Result<ClockedState<T>, FlowError> {
    if k == 0 {
        return Err(FlowError::Argument("substep count must be at least 1".into()));
    }
    let schedule = kernel.schedule()?.power(k);
    if kernel == KernelKind::FrozenMidpoint {
        if !sys.has_full_exp() {
            return Err(FlowError::Capability("a frozen-time exponential"));
        }
        run(&Frozen(sys), &schedule, cs, h)
    } else {
        run(sys, &schedule, cs, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{expm, Extended, Matrix};

    /// Constant-coefficient linear split with flows from the matrix exponential.
    struct ConstSplit {
        a: Matrix<f64>,
        b: Matrix<f64>,
    }

    impl SplitSystem<f64> for ConstSplit {
        fn dim(&self) -> usize {
            self.a.rows()
        }
        fn flow_a(&self, s: &mut [f64], h: f64) -> Result<(), FlowError> {
            Ok(expm(&self.a, h)?.apply_left(s)?)
        }
        fn flow_b(&self, s: &mut [f64], _t: f64, h: f64) -> Result<(), FlowError> {
            Ok(expm(&self.b, h)?.apply_left(s)?)
        }
        fn full_exp(&self, s: &mut [f64], _t: f64, h: f64) -> Result<(), FlowError> {
            Ok(expm(&self.a.checked_add(&self.b)?, h)?.apply_left(s)?)
        }
        fn has_full_exp(&self) -> bool {
            true
        }
    }

    /// Records every flow call.
    #[derive(Default)]
    struct Tracer {
        log: std::sync::Mutex<Vec<(char, f64, f64)>>,
    }

    impl SplitSystem<f64> for Tracer {
        fn dim(&self) -> usize {
            1
        }
        fn flow_a(&self, _s: &mut [f64], h: f64) -> Result<(), FlowError> {
            self.log.lock().unwrap().push(('A', f64::NAN, h));
            Ok(())
        }
        fn flow_b(&self, _s: &mut [f64], t: f64, h: f64) -> Result<(), FlowError> {
            self.log.lock().unwrap().push(('B', t, h));
            Ok(())
        }
        fn full_exp(&self, _s: &mut [f64], t: f64, h: f64) -> Result<(), FlowError> {
            self.log.lock().unwrap().push(('F', t, h));
            Ok(())
        }
        fn has_full_exp(&self) -> bool {
            true
        }
    }

    fn generic() -> ConstSplit {
        ConstSplit {
            a: Matrix::from_rows(&[[0.0, 1.0], [-0.3, 0.1]]).unwrap(),
            b: Matrix::from_rows(&[[0.2, 0.0], [-1.0, -0.4]]).unwrap(),
        }
    }

    fn max_diff(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn odd_basis_schedules() {
        let u2 = KernelKind::OddBasis(2).schedule().unwrap();
        let r = |n, d| Ratio::new(n, d);
        assert_eq!(
            u2.stages(),
            &[Stage::b(r(1, 3)), Stage::a(r(2, 3)), Stage::b(r(2, 3)), Stage::a(r(1, 3))]
        );
        assert_eq!(KernelKind::OddBasis(1).schedule().unwrap(), KernelKind::T1.schedule().unwrap());
        for n in 1..8 {
            let s = KernelKind::OddBasis(n).schedule().unwrap();
            assert_eq!(s.a_width(), Ratio::one());
            assert_eq!(s.b_stage_count(), n as usize);
        }
        assert!(KernelKind::OddBasis(0).schedule().is_err());
    }

    #[test]
    fn power_merges_seams() {
        let s = KernelKind::StrangBA.schedule().unwrap().power(3);
        // B½ A B A B A B½ at width 1/3
        assert_eq!(s.stages().len(), 7);
        assert_eq!(s.b_stage_count(), 4);
        assert_eq!(s.a_width(), Ratio::one());
    }

    #[test]
    fn frozen_midpoint_clocks_follow_the_substep_midpoints() {
        let tr = Tracer::default();
        let cs = ClockedState::new(vec![0.0], 0.0);
        let out = compose_k(&tr, KernelKind::FrozenMidpoint, &cs, 6.0, 3).unwrap();
        let log = tr.log.lock().unwrap();
        let clocks: Vec<f64> = log.iter().map(|e| e.1).collect();
        assert_eq!(clocks, vec![1.0, 3.0, 5.0]);
        assert!(log.iter().all(|e| e.0 == 'F' && e.2 == 2.0));
        assert_eq!(out.t, 6.0);
    }

    #[test]
    fn odd_basis_clocks() {
        let tr = Tracer::default();
        let cs = ClockedState::new(vec![0.0], 1.0);
        u_basis_step(&tr, &cs, 3.0, 2).unwrap();
        let log = tr.log.lock().unwrap();
        let b: Vec<(f64, f64)> = log.iter().filter(|e| e.0 == 'B').map(|e| (e.1, e.2)).collect();
        assert_eq!(b, vec![(1.0, 1.0), (3.0, 2.0)]);
    }

    #[test]
    fn clock_advances_exactly() {
        let sys = generic();
        for kind in [
            KernelKind::T1,
            KernelKind::StrangAB,
            KernelKind::StrangBA,
            KernelKind::FrozenMidpoint,
            KernelKind::OddBasis(3),
        ] {
            for (t0, h) in [(0.1, 0.3), (1e-6, 0.7), (2.5, -0.01)] {
                let cs = ClockedState::new(vec![1.0, 0.0], t0);
                for k in [1, 3, 7] {
                    let out = compose_k(&sys, kind, &cs, h, k).unwrap();
                    assert_eq!(out.t, t0 + h, "{kind} k={k}");
                }
            }
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let sys = generic();
        let cs = ClockedState::new(vec![0.3, -0.7], 0.25);
        for kind in [KernelKind::T1, KernelKind::StrangAB, KernelKind::OddBasis(4)] {
            assert_eq!(compose_k(&sys, kind, &cs, 0.0, 2).unwrap(), cs);
        }
    }

    #[test]
    fn strang_is_time_symmetric_and_odd_basis_is_not() {
        let sys = generic();
        let cs = ClockedState::new(vec![0.3, -0.7], 0.0);
        for o in [Orientation::AB, Orientation::BA] {
            let fwd = strang_step(&sys, &cs, 0.2, o).unwrap();
            let back = strang_step(&sys, &fwd, -0.2, o).unwrap();
            assert!(max_diff(&back.state, &cs.state) < 50.0 * f64::EPSILON);
        }
        let fwd = u_basis_step(&sys, &cs, 0.2, 2).unwrap();
        let back = u_basis_step(&sys, &fwd, -0.2, 2).unwrap();
        assert!(max_diff(&back.state, &cs.state) > 1e-4);
    }

    #[test]
    fn commuting_flows_are_exact() {
        let sys = ConstSplit {
            a: Matrix::from_rows(&[[0.5, 0.0], [0.0, -1.0]]).unwrap(),
            b: Matrix::from_rows(&[[-0.2, 0.0], [0.0, 0.3]]).unwrap(),
        };
        let cs = ClockedState::new(vec![1.0, 2.0], 0.0);
        let h = 1.0;
        let exact = [(0.3f64).exp(), 2.0 * (-0.7f64).exp()];
        for kind in [KernelKind::T1, KernelKind::StrangBA, KernelKind::OddBasis(3)] {
            let out = compose_k(&sys, kind, &cs, h, 2).unwrap();
            assert!(max_diff(&out.state, &exact) < 1e-14, "{kind}");
        }
    }

    #[test]
    fn frozen_midpoint_requires_full_exp() {
        struct NoFull;
        impl SplitSystem<Extended> for NoFull {
            fn dim(&self) -> usize {
                1
            }
            fn flow_a(&self, _: &mut [Extended], _: Extended) -> Result<(), FlowError> {
                Ok(())
            }
            fn flow_b(&self, _: &mut [Extended], _: Extended, _: Extended) -> Result<(), FlowError> {
                Ok(())
            }
        }
        let cs = ClockedState::new(vec![Extended::lit(1)], Extended::lit(0));
        assert!(matches!(
            frozen_midpoint_step(&NoFull, &cs, Extended::lit(1)),
            Err(FlowError::Capability(_))
        ));
        assert!(compose_k(&NoFull, KernelKind::T1, &cs, Extended::lit(1), 0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cs = ClockedState::new(vec![1.0], 0.0);
        assert_eq!(
            t1_step(&generic(), &cs, 0.1),
            Err(FlowError::Dimension { expected: 2, got: 1 })
        );
    }
}
