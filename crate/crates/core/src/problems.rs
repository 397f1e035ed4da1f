//! Verification problems with exact solutions, and Magnus baselines.
//!
//! * `matrix2x2`: `Y' = A(t) Y`, `A(t) = [[2, t], [0, −1]]`, `Y(0) = I`.
//! * `hydrogen`: `q'' = (1 − 2/t) q`, exact `q = t e^{−t}`.
//! * `oscillator`: `q'' = (t² − 3) q`, exact `q = t e^{−t²/2}`.

use std::fmt;
use std::str::FromStr;

use crate::kernels::{ClockedState, FlowError, SplitSystem};
use crate::nystrom::ForceField;
use crate::numerics::{expm, Matrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Matrix2x2,
    Hydrogen,
    Oscillator,
}

impl ProblemName {
    pub const ALL: [ProblemName; 3] =
        [ProblemName::Matrix2x2, ProblemName::Hydrogen, ProblemName::Oscillator];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Matrix2x2 => "matrix2x2",
            ProblemName::Hydrogen => "hydrogen",
            ProblemName::Oscillator => "oscillator",
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown problem `{s}` (expected matrix2x2|hydrogen|oscillator)"))
    }
}

/// A split system with a known solution.
pub trait Problem<T: Real>: SplitSystem<T> {
    fn name(&self) -> ProblemName;

    /// Starting state and clock.
    fn initial(&self) -> ClockedState<T>;

    /// Exact state at time `t`.
    fn exact(&self, t: T) -> Vec<T>;

    /// Scalar shown in figures: `f(t)` for the matrix problem, `q(t)` otherwise.
    fn observable(&self, state: &[T]) -> T;

    /// Interval on which the figures are drawn.
    fn domain(&self) -> (T, T);

    /// Names of the state components, in storage order.
    fn components(&self) -> &'static [&'static str];

    /// `max_i |state_i − exact_i(t)|`.
    fn error(&self, cs: &ClockedState<T>) -> T {
        let exact = self.exact(cs.t);
        cs.state.iter().zip(&exact).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Generator `A(t) = T + V(t)` for the Magnus baselines.
pub trait LinearGenerator<T: Real>: Send + Sync {
    fn constant_part(&self) -> Matrix<T>;
    fn varying_part(&self, t: T) -> Result<Matrix<T>, FlowError>;

    fn generator(&self, t: T) -> Result<Matrix<T>, FlowError> {
        Ok(self.constant_part().checked_add(&self.varying_part(t)?)?)
    }
}

/// `e^{3x} − 1 − 3x`, accurate for small `x`.
fn exp3_m1_m3<T: Real>(x: T) -> T {
    let y = T::lit(3) * x;
    if y.abs() < T::one() {
        let mut term = y * y / T::lit(2);
        let mut sum = T::zero();
        let mut n = 2;
        while term.abs() > T::epsilon() * sum.abs() || sum.is_zero() {
            sum = sum + term;
            n += 1;
            term = term * y / T::lit(n);
            if term.is_zero() {
                break;
            }
        }
        sum
    } else {
        y.exp_m1() - y
    }
}

/// Exact off-diagonal entry `f(t) = e^{−t}(e^{3t} − 1 − 3t)/9`.
pub fn matrix2x2_exact_f<T: Real>(t: T) -> T {
    (-t).exp() * exp3_m1_m3(t) / T::lit(9)
}

/// How the matrix problem is split into flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    /// The whole generator is the clocked stage; Strang kernels become the
    /// frozen midpoint exponential.
    Frozen,
    /// `T = diag(2, −1)` and the nilpotent `V(t) = [[0, t], [0, 0]]`.
    TV,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frozen" => Ok(Split::Frozen),
            "tv" => Ok(Split::TV),
            other => Err(format!("unknown split `{other}` (expected frozen|tv)")),
        }
    }
}

/// The upper-triangular 2×2 example. The state is `Y` in row-major order.
#[derive(Debug, Clone, Copy)]
pub struct Matrix2x2 {
    pub split: Split,
}

pub fn matrix2x2_problem() -> Matrix2x2 {
    Matrix2x2 { split: Split::Frozen }
}

impl Matrix2x2 {
    /// `e^{hA(s)} = [[e^{2h}, s e^{−h}(e^{3h} − 1)/3], [0, e^{−h}]]`.
    fn frozen_exp<T: Real>(s: T, h: T) -> [T; 4] {
        let three = T::lit(3);
        [(h + h).exp(), s * (-h).exp() * (three * h).exp_m1() / three, T::zero(), (-h).exp()]
    }

    fn apply<T: Real>(m: [T; 4], y: &mut [T]) {
        let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
        for col in 0..2 {
            let (y0, y1) = (y[col], y[2 + col]);
            y[col] = a * y0 + b * y1;
            y[2 + col] = c * y0 + d * y1;
        }
    }
}

impl<T: Real> SplitSystem<T> for Matrix2x2 {
    fn dim(&self) -> usize {
        4
    }

    fn flow_a(&self, y: &mut [T], h: T) -> Result<(), FlowError> {
        if self.split == Split::TV {
            Self::apply([(h + h).exp(), T::zero(), T::zero(), (-h).exp()], y);
        }
        Ok(())
    }

    fn flow_b(&self, y: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        match self.split {
            Split::TV => Self::apply([T::one(), h * clock, T::zero(), T::one()], y),
            Split::Frozen => Self::apply(Self::frozen_exp(clock, h), y),
        }
        Ok(())
    }

    fn full_exp(&self, y: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        Self::apply(Self::frozen_exp(clock, h), y);
        Ok(())
    }

    fn has_full_exp(&self) -> bool {
        true
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

impl<T: Real> Problem<T> for Matrix2x2 {
    fn name(&self) -> ProblemName {
        ProblemName::Matrix2x2
    }

    fn initial(&self) -> ClockedState<T> {
        ClockedState::new(vec![T::one(), T::zero(), T::zero(), T::one()], T::zero())
    }

    fn exact(&self, t: T) -> Vec<T> {
        vec![(t + t).exp(), matrix2x2_exact_f(t), T::zero(), (-t).exp()]
    }

    fn observable(&self, state: &[T]) -> T {
        state[1]
    }

    fn domain(&self) -> (T, T) {
        (T::zero(), T::lit(4))
    }

    fn components(&self) -> &'static [&'static str] {
        &["y11", "y12", "y21", "y22"]
    }
}

impl<T: Real> LinearGenerator<T> for Matrix2x2 {
    fn constant_part(&self) -> Matrix<T> {
        Matrix::from_vec(2, 2, vec![T::lit(2), T::zero(), T::zero(), T::lit(-1)]).expect("2x2")
    }

    fn varying_part(&self, t: T) -> Result<Matrix<T>, FlowError> {
        Ok(Matrix::from_vec(2, 2, vec![T::zero(), t, T::zero(), T::zero()])?)
    }
}

/// Magnus-derived `f(t) = t e^{−t}(e^{3t} − 1)·S(t)` with `S` truncated to the
/// given order (4, 6, 8 or 10).
pub fn magnus_f_series<T: Real>(t: T, order: u32) -> Result<T, FlowError> {
    let terms: usize = match order {
        4 => 2,
        6 => 3,
        8 => 4,
        10 => 5,
        _ => return Err(FlowError::Argument(format!("Magnus order {order} not in {{4, 6, 8, 10}}"))),
    };
    // S = 1/6 − t/12 + t³/80 − 3t⁵/1120 + 27t⁷/44800
    let coeffs: [(i64, i64, i32); 5] = [(1, 6, 0), (-1, 12, 1), (1, 80, 3), (-3, 1120, 5), (27, 44800, 7)];
    let s = coeffs[..terms].iter().fold(T::zero(), |acc, &(n, d, p)| acc + T::ratio(n, d) * t.powi(p));
    Ok(t * (-t).exp() * (T::lit(3) * t).exp_m1() * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadialKind {
    Hydrogen,
    Oscillator,
}

/// `q'' = f(t) q` written as `A(t) = [[0, 1], [0, 0]] + [[0, 0], [f(t), 0]]`.
/// The state is `[q, v]`.
#[derive(Debug, Clone, Copy)]
pub struct Radial<T> {
    pub kind: RadialKind,
    /// Clock at which integration starts; the exact state there is the initial value.
    pub t_start: T,
    /// Use the finite limit `f(t) q → −2` for a kick at `t = 0, q = 0`.
    pub regularized: bool,
}

/// Default start for the singular problem.
pub fn hydrogen_offset<T: Real>() -> T {
    T::ratio(1, 1_000_000)
}

pub fn hydrogen_problem<T: Real>() -> Radial<T> {
    Radial { kind: RadialKind::Hydrogen, t_start: hydrogen_offset(), regularized: false }
}

/// Hydrogen started at `t = 0` with the regularized first kick.
pub fn hydrogen_regularized<T: Real>() -> Radial<T> {
    Radial { kind: RadialKind::Hydrogen, t_start: T::zero(), regularized: true }
}

pub fn radial_oscillator_problem<T: Real>() -> Radial<T> {
    Radial { kind: RadialKind::Oscillator, t_start: T::zero(), regularized: false }
}

impl<T: Real> Radial<T> {
    pub fn f(&self, t: T) -> Result<T, FlowError> {
        match self.kind {
            RadialKind::Hydrogen => {
                if t.is_zero() {
                    return Err(FlowError::Singular { clock: 0.0 });
                }
                Ok(T::one() - T::lit(2) / t)
            }
            RadialKind::Oscillator => Ok(t * t - T::lit(3)),
        }
    }

    /// `f(t) q`, with the regularized limit at the singular point.
    pub fn accel_scalar(&self, q: T, t: T) -> Result<T, FlowError> {
        if self.kind == RadialKind::Hydrogen && t.is_zero() && self.regularized && q.is_zero() {
            return Ok(T::lit(-2));
        }
        Ok(self.f(t)? * q)
    }

    pub fn exact_q(&self, t: T) -> T {
        match self.kind {
            RadialKind::Hydrogen => t * (-t).exp(),
            RadialKind::Oscillator => t * (-(t * t) / T::lit(2)).exp(),
        }
    }

    pub fn exact_v(&self, t: T) -> T {
        match self.kind {
            RadialKind::Hydrogen => (T::one() - t) * (-t).exp(),
            RadialKind::Oscillator => (T::one() - t * t) * (-(t * t) / T::lit(2)).exp(),
        }
    }
}

impl<T: Real> SplitSystem<T> for Radial<T> {
    fn dim(&self) -> usize {
        2
    }

    fn flow_a(&self, s: &mut [T], h: T) -> Result<(), FlowError> {
        s[0] = s[0] + h * s[1];
        Ok(())
    }

    /// `e^{hV} = I + hV` exactly, since `V` is nilpotent.
    fn flow_b(&self, s: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        s[1] = s[1] + h * self.accel_scalar(s[0], clock)?;
        Ok(())
    }

    fn full_exp(&self, s: &mut [T], clock: T, h: T) -> Result<(), FlowError> {
        let a = self.generator(clock)?;
        expm(&a, h)?.apply_left(s)?;
        Ok(())
    }

    fn has_full_exp(&self) -> bool {
        true
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

impl<T: Real> ForceField<T> for Radial<T> {
    fn dim(&self) -> usize {
        1
    }

    fn accel(&self, q: &[T], t: T, out: &mut [T]) -> Result<(), FlowError> {
        out[0] = self.accel_scalar(q[0], t)?;
        Ok(())
    }
}

impl<T: Real> Problem<T> for Radial<T> {
    fn name(&self) -> ProblemName {
        match self.kind {
            RadialKind::Hydrogen => ProblemName::Hydrogen,
            RadialKind::Oscillator => ProblemName::Oscillator,
        }
    }

    fn initial(&self) -> ClockedState<T> {
        ClockedState::new(self.exact(self.t_start), self.t_start)
    }

    fn exact(&self, t: T) -> Vec<T> {
        vec![self.exact_q(t), self.exact_v(t)]
    }

    fn observable(&self, state: &[T]) -> T {
        state[0]
    }

    fn domain(&self) -> (T, T) {
        match self.kind {
            RadialKind::Hydrogen => (T::ratio(1, 10), T::lit(5)),
            RadialKind::Oscillator => (T::zero(), T::lit(4)),
        }
    }

    fn components(&self) -> &'static [&'static str] {
        &["q", "v"]
    }
}

impl<T: Real> LinearGenerator<T> for Radial<T> {
    fn constant_part(&self) -> Matrix<T> {
        Matrix::from_vec(2, 2, vec![T::zero(), T::one(), T::zero(), T::zero()]).expect("2x2")
    }

    fn varying_part(&self, t: T) -> Result<Matrix<T>, FlowError> {
        Ok(Matrix::from_vec(2, 2, vec![T::zero(), T::zero(), self.f(t)?, T::zero()])?)
    }
}

/// Second-order Magnus step `e^{hA(t + h/2)}`.
pub fn magnus2_step<T: Real, G: LinearGenerator<T>>(
    g: &G,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, FlowError> {
    let mut out = cs.clone();
    let a = g.generator(cs.t + h / T::lit(2))?;
    expm(&a, h)?.apply_left(&mut out.state)?;
    out.t = cs.t + h;
    Ok(out)
}

/// Gauss–Legendre constants `(c₁, c₂, c₃) = (½ − √3/6, ½ + √3/6, √3/12)`.
pub fn magnus4_constants<T: Real>() -> (T, T, T) {
    let r3 = T::lit(3).sqrt();
    let half = T::ratio(1, 2);
    (half - r3 / T::lit(6), half + r3 / T::lit(6), r3 / T::lit(12))
}

/// Fourth-order Magnus step
/// `e^{c₃h(V₂−V₁)} e^{h(T + ½(V₁+V₂))} e^{−c₃h(V₂−V₁)}` with `V_i = V(t + c_i h)`.
pub fn magnus4_step<T: Real, G: LinearGenerator<T>>(
    g: &G,
    cs: &ClockedState<T>,
    h: T,
) -> Result<ClockedState<T>, FlowError> {
    let (c1, c2, c3) = magnus4_constants::<T>();
    let v1 = g.varying_part(cs.t + c1 * h)?;
    let v2 = g.varying_part(cs.t + c2 * h)?;
    let dv = v2.checked_sub(&v1)?;
    let mid = g.constant_part().checked_add(&v1.checked_add(&v2)?.scale(&T::ratio(1, 2)))?;
    let mut out = cs.clone();
    expm(&dv, -(c3 * h))?.apply_left(&mut out.state)?;
    expm(&mid, h)?.apply_left(&mut out.state)?;
    expm(&dv, c3 * h)?.apply_left(&mut out.state)?;
    out.t = cs.t + h;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{compose_k, frozen_midpoint_step, strang_step, t1_step, u_basis_step, KernelKind, Orientation};
    use crate::numerics::Extended;
    use num_traits::Float;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn matrix2x2_exact_values() {
        assert_eq!(matrix2x2_exact_f(0.0f64), 0.0);
        let f1 = matrix2x2_exact_f(1.0f64);
        assert!((f1 - 0.657504).abs() < 1e-6, "{f1}");
        // Taylor series at small t
        let t = 1e-2f64;
        let series = t * t / 2.0 + t.powi(4) / 8.0 + t.powi(5) / 60.0 + t.powi(6) / 80.0 + t.powi(7) / 420.0
            + 31.0 * t.powi(8) / 40320.0;
        assert!(rel(matrix2x2_exact_f(t), series) < 1e-15);
        let direct = (-2.5f64).exp() * ((7.5f64).exp() - 1.0 - 7.5) / 9.0;
        assert!(rel(matrix2x2_exact_f(2.5), direct) < 1e-15);
    }

    #[test]
    fn first_order_and_odd_basis_entries() {
        let p = matrix2x2_problem();
        let cs = Problem::<f64>::initial(&p);
        for t in [0.5, 1.0, 2.0] {
            let u1 = t1_step(&p, &cs, t).unwrap();
            assert_eq!(u1.state[1], 0.0);
            let u2 = u_basis_step(&p, &cs, t, 2).unwrap();
            let expected = 2.0 / 9.0 * t * (t.exp() - (-t).exp());
            assert!(rel(u2.state[1], expected) < 1e-14, "{} vs {expected}", u2.state[1]);
        }
    }

    #[test]
    fn frozen_midpoint_gives_f2() {
        let p = matrix2x2_problem();
        for t in [0.5f64, 1.0, 4.0] {
            let out = frozen_midpoint_step(&p, &Problem::<f64>::initial(&p), t).unwrap();
            let f2 = t / 6.0 * (-t).exp() * ((3.0 * t).exp() - 1.0);
            assert!(rel(out.state[1], f2) < 1e-14);
            assert!(rel(out.state[0], (2.0 * t).exp()) < 1e-15);
            assert_eq!(out.state[2], 0.0);
        }
    }

    #[test]
    fn tv_split_strang_is_the_midpoint_product() {
        // e^{(h/2)T} e^{hV(h/2)} e^{(h/2)T} has off-diagonal e^{h/2}·(h²/2)·e^{-h/2}·... = (h²/2)e^{h/2}
        let p = Matrix2x2 { split: Split::TV };
        let h = 0.8f64;
        let out = strang_step(&p, &Problem::<f64>::initial(&p), h, Orientation::AB).unwrap();
        let expected = (h * h / 2.0) * (h / 2.0).exp();
        assert!(rel(out.state[1], expected) < 1e-15);
    }

    #[test]
    fn radial_values() {
        let h: Radial<f64> = hydrogen_problem();
        assert!((h.exact_q(1.0) - 0.367879).abs() < 1e-6);
        assert_eq!(h.f(0.0), Err(FlowError::Singular { clock: 0.0 }));
        let r: Radial<f64> = hydrogen_regularized();
        assert_eq!(r.accel_scalar(0.0, 0.0).unwrap(), -2.0);
        // f(t)·q(t) → −2 as t → 0
        let t = 1e-9;
        assert!((h.f(t).unwrap() * h.exact_q(t) + 2.0).abs() < 1e-8);
        let o: Radial<f64> = radial_oscillator_problem();
        assert_eq!(o.exact(0.0), vec![0.0, 1.0]);
        let init = Problem::<f64>::initial(&h);
        assert_eq!(init.t, 1e-6);
        assert_eq!(init.state[0], 1e-6 * (-1e-6f64).exp());
    }

    #[test]
    fn exact_solutions_satisfy_the_equation() {
        for p in [hydrogen_problem::<f64>(), radial_oscillator_problem()] {
            for t in [0.3, 1.0, 2.7] {
                let e = 1e-4;
                let qpp = (p.exact_q(t + e) - 2.0 * p.exact_q(t) + p.exact_q(t - e)) / (e * e);
                assert!((qpp - p.f(t).unwrap() * p.exact_q(t)).abs() < 1e-6);
                let qp = (p.exact_q(t + e) - p.exact_q(t - e)) / (2.0 * e);
                assert!((qp - p.exact_v(t)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn hydrogen_second_order_polynomial() {
        let p = hydrogen_regularized::<f64>();
        for t in [0.1, 0.5, 1.3] {
            let out = strang_step(&p, &Problem::<f64>::initial(&p), t, Orientation::AB).unwrap();
            let q2 = t - t * t + t * t * t / 4.0;
            assert!((out.state[0] - q2).abs() < 1e-15);
        }
        // the kick-first kernel hits the singular point without regularization
        let q = Radial { regularized: false, ..p };
        assert!(strang_step(&q, &Problem::<f64>::initial(&q), 0.1, Orientation::BA).is_err());
    }

    #[test]
    fn magnus_series() {
        assert_eq!(magnus_f_series(0.0f64, 4).unwrap(), 0.0);
        assert!(magnus_f_series(1.0f64, 5).is_err());
        // order 4 agrees with the exact f up to t⁵
        for t in [0.02f64, 0.01] {
            let d = (magnus_f_series(t, 4).unwrap() - matrix2x2_exact_f(t)).abs();
            assert!(d < 0.1 * t.powi(5), "{d:e}");
        }
        // order 10 at small t agrees through t¹⁰
        let t = 0.1f64;
        assert!((magnus_f_series(t, 10).unwrap() - matrix2x2_exact_f(t)).abs() < 1e-12);
    }

    #[test]
    fn magnus_constants_and_orders() {
        let (c1, c2, c3) = magnus4_constants::<f64>();
        assert!((c1 - 0.211325).abs() < 1e-6);
        assert!((c2 - 0.788675).abs() < 1e-6);
        assert!((c3 - 0.144338).abs() < 1e-6);

        let p = matrix2x2_problem();
        let cs = Problem::<f64>::initial(&p);
        let m2 = magnus2_step(&p, &cs, 0.7).unwrap();
        let fm = frozen_midpoint_step(&p, &cs, 0.7).unwrap();
        for (a, b) in m2.state.iter().zip(&fm.state) {
            assert!((a - b).abs() < 1e-14);
        }
        let err = |h: f64| Problem::<f64>::error(&p, &magnus4_step(&p, &cs, h).unwrap());
        let slope = (err(0.2) / err(0.1)).log2();
        assert!(slope >= 4.5, "{slope}");
    }

    #[test]
    fn constant_generator_is_exact_for_every_kernel() {
        struct Const;
        impl LinearGenerator<f64> for Const {
            fn constant_part(&self) -> Matrix<f64> {
                Matrix::from_rows(&[[0.1, 1.0], [-1.0, 0.0]]).unwrap()
            }
            fn varying_part(&self, _: f64) -> Result<Matrix<f64>, FlowError> {
                Ok(Matrix::from_rows(&[[0.0, 0.0], [-0.5, 0.2]]).unwrap())
            }
        }
        let cs = ClockedState::new(vec![1.0, 0.0], 0.0);
        let exact = expm(&Const.generator(0.0).unwrap(), 0.9).unwrap();
        for out in [magnus2_step(&Const, &cs, 0.9).unwrap(), magnus4_step(&Const, &cs, 0.9).unwrap()] {
            assert!((out.state[0] - exact[(0, 0)]).abs() < 1e-14);
            assert!((out.state[1] - exact[(1, 0)]).abs() < 1e-14);
        }
    }

    #[test]
    fn extended_precision_matrix_problem() {
        let p = matrix2x2_problem();
        let cs = Problem::<Extended>::initial(&p);
        let out = compose_k(&p, KernelKind::StrangAB, &cs, Extended::lit(1), 1).unwrap();
        let t = Extended::lit(1);
        let f2 = t / Extended::lit(6) * (-t).exp() * ((Extended::lit(3) * t).exp() - Extended::lit(1));
        assert!((out.state[1] - f2).abs() < Extended::ratio(1, 10).powi(32));
    }
}
