//! Extrapolation weights for multi-product expansions.
//!
//! For distinct substep counts `k_1..k_n` the weights solve
//! `Σ c_i = 1`, `Σ c_i k_i^{-2j} = 0` for `j = 1..n-1`, whose solution is
//! `c_i = Π_{j≠i} k_i² / (k_i² − k_j²)`. Everything here is exact.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::numerics::{rational_to_real, rational_to_real_pair, Matrix, Real};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightError {
    #[error("node list is empty")]
    Empty,
    #[error("substep counts must be positive")]
    ZeroNode,
    #[error("substep count {0} appears more than once")]
    Duplicate(u32),
    #[error("final-correction node m = {m} collides with the coarse nodes 1..={coarse}")]
    Collision { m: u32, coarse: u32 },
    #[error("odd parity requires odd substep counts, found {0}")]
    EvenNodeInOddSet(u32),
    #[error("sequence length must be at least {min}, got {got}")]
    Length { min: u32, got: u32 },
    #[error("weight system is singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    Custom,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Custom => "custom",
        })
    }
}

/// Substep counts paired with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSet {
    ks: Vec<u32>,
    cs: Vec<BigRational>,
    parity: Parity,
}

impl WeightSet {
    /// Natural sequence `{1..n}`.
    pub fn even(n: u32) -> Result<Self, WeightError> {
        closed_form_weights(&even_sequence(n)?)?.with_parity(Parity::Even)
    }

    /// Odd sequence `{1,3,..,2n-1}`.
    pub fn odd(n: u32) -> Result<Self, WeightError> {
        closed_form_weights(&odd_sequence(n)?)?.with_parity(Parity::Odd)
    }

    /// Node set `{m, n-1, .., 1}` for an endpoint correction of order `2n`.
    pub fn final_correction(m: u32, n: u32) -> Result<Self, WeightError> {
        closed_form_weights(&final_correction_sequence(m, n)?)
    }

    pub fn with_parity(mut self, parity: Parity) -> Result<Self, WeightError> {
        if parity == Parity::Odd {
            if let Some(&k) = self.ks.iter().find(|&&k| k % 2 == 0) {
                return Err(WeightError::EvenNodeInOddSet(k));
            }
        }
        self.parity = parity;
        Ok(self)
    }

    pub fn ks(&self) -> &[u32] {
        &self.ks
    }

    pub fn cs(&self) -> &[BigRational] {
        &self.cs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.ks.iter().copied().zip(&self.cs)
    }

    /// `Σ c_i k_i^{-2j}`.
    pub fn moment(&self, j: u32) -> BigRational {
        self.iter().map(|(k, c)| c * inverse_even_power(k, j)).fold(BigRational::zero(), |a, b| a + b)
    }

    /// True when the weights sum to one and the first `len − 1` even moments vanish.
    pub fn satisfies_moments(&self) -> bool {
        self.moment(0).is_one() && (1..self.len() as u32).all(|j| self.moment(j).is_zero())
    }

    /// Weights rounded once to the working precision.
    pub fn cs_as<T: Real>(&self) -> Vec<T> {
        self.cs.iter().map(rational_to_real).collect()
    }

    /// Weights as unevaluated `hi + lo` pairs.
    pub fn cs_pairs<T: Real>(&self) -> Vec<(T, T)> {
        self.cs.iter().map(rational_to_real_pair).collect()
    }

    /// Sorted by ascending substep count.
    pub fn sorted(&self) -> Self {
        let mut pairs: Vec<_> = self.ks.iter().copied().zip(self.cs.iter().cloned()).collect();
        pairs.sort_by_key(|p| p.0);
        let (ks, cs) = pairs.into_iter().unzip();
        Self { ks, cs, parity: self.parity }
    }
}

fn validate(ks: &[u32]) -> Result<(), WeightError> {
    if ks.is_empty() {
        return Err(WeightError::Empty);
    }
    let mut seen = HashSet::new();
    for &k in ks {
        if k == 0 {
            return Err(WeightError::ZeroNode);
        }
        if !seen.insert(k) {
            return Err(WeightError::Duplicate(k));
        }
    }
    Ok(())
}

fn square(k: u32) -> BigInt {
    let k = BigInt::from(k);
    &k * &k
}

fn inverse_even_power(k: u32, j: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(k).pow(2 * j))
}

/// `c_i = Π_{j≠i} k_i² / (k_i² − k_j²)`.
pub fn closed_form_weights(ks: &[u32]) -> Result<WeightSet, WeightError> {
    validate(ks)?;
    let cs = ks
        .iter()
        .enumerate()
        .map(|(i, &ki)| {
            let ki2 = square(ki);
            let (num, den) = ks.iter().enumerate().filter(|&(j, _)| j != i).fold(
                (BigInt::one(), BigInt::one()),
                |(n, d), (_, &kj)| (n * &ki2, d * (&ki2 - square(kj))),
            );
            BigRational::new(num, den)
        })
        .collect();
    Ok(WeightSet { ks: ks.to_vec(), cs, parity: Parity::Custom })
}

/// Weights from Gaussian elimination on the moment system, independent of the
/// product formula.
pub fn vandermonde_weights(ks: &[u32]) -> Result<WeightSet, WeightError> {
    validate(ks)?;
    let n = ks.len();
    let rows: Vec<Vec<BigRational>> = (0..n as u32)
        .map(|j| ks.iter().map(|&k| inverse_even_power(k, j)).collect())
        .collect();
    let system = Matrix::from_rows(&rows).map_err(|_| WeightError::Singular)?;
    let mut rhs = vec![BigRational::zero(); n];
    rhs[0] = BigRational::one();
    let cs = system.solve(&rhs).map_err(|_| WeightError::Singular)?;
    Ok(WeightSet { ks: ks.to_vec(), cs, parity: Parity::Custom })
}

pub fn even_sequence(n: u32) -> Result<Vec<u32>, WeightError> {
    if n == 0 {
        return Err(WeightError::Length { min: 1, got: 0 });
    }
    Ok((1..=n).collect())
}

pub fn odd_sequence(n: u32) -> Result<Vec<u32>, WeightError> {
    if n == 0 {
        return Err(WeightError::Length { min: 1, got: 0 });
    }
    Ok((1..=n).map(|i| 2 * i - 1).collect())
}

/// `{m, n-1, .., 1}`.
pub fn final_correction_sequence(m: u32, n: u32) -> Result<Vec<u32>, WeightError> {
    if n < 2 {
        return Err(WeightError::Length { min: 2, got: n });
    }
    if m <= n - 1 {
        return Err(WeightError::Collision { m, coarse: n - 1 });
    }
    Ok(std::iter::once(m).chain((1..n).rev()).collect())
}

/// True when consecutive weights, ordered by substep count, change sign.
pub fn alternates_in_sign(ws: &WeightSet) -> bool {
    let sorted = ws.sorted();
    sorted.cs.windows(2).all(|w| w[0].is_positive() != w[1].is_positive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rational;
    use proptest::prelude::*;

    fn rs(pairs: &[(i64, i64)]) -> Vec<BigRational> {
        pairs.iter().map(|&(n, d)| rational(n, d)).collect()
    }

    #[test]
    fn small_closed_forms() {
        assert_eq!(closed_form_weights(&[1]).unwrap().cs(), rs(&[(1, 1)]));
        assert_eq!(closed_form_weights(&[1, 2]).unwrap().cs(), rs(&[(-1, 3), (4, 3)]));
        assert_eq!(closed_form_weights(&[1, 3]).unwrap().cs(), rs(&[(-1, 8), (9, 8)]));
        assert_eq!(
            closed_form_weights(&[1, 2, 3]).unwrap().cs(),
            rs(&[(1, 24), (-16, 15), (81, 40)])
        );
        assert_eq!(
            closed_form_weights(&[1, 3, 5]).unwrap().cs(),
            rs(&[(1, 192), (-81, 128), (625, 384)])
        );
    }

    #[test]
    fn vandermonde_reproduces_printed_sets() {
        assert_eq!(
            vandermonde_weights(&[1, 2, 3, 4]).unwrap().cs(),
            rs(&[(-1, 360), (16, 45), (-729, 280), (1024, 315)])
        );
        assert_eq!(
            vandermonde_weights(&[1, 2, 3, 4, 5]).unwrap().cs(),
            rs(&[(1, 8640), (-64, 945), (6561, 4480), (-16384, 2835), (390625, 72576)])
        );
        assert_eq!(
            vandermonde_weights(&[1, 3, 5, 7, 9]).unwrap().cs(),
            rs(&[
                (1, 737280),
                (-729, 40960),
                (390625, 516096),
                (-5764801, 1474560),
                (4782969, 1146880)
            ])
        );
    }

    #[test]
    fn sequences() {
        assert_eq!(even_sequence(1).unwrap(), vec![1]);
        assert_eq!(even_sequence(5).unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(odd_sequence(2).unwrap(), vec![1, 3]);
        assert_eq!(odd_sequence(4).unwrap(), vec![1, 3, 5, 7]);
        assert!(even_sequence(0).is_err());
        assert!(odd_sequence(0).is_err());
    }

    #[test]
    fn final_correction_sets() {
        assert_eq!(final_correction_sequence(3, 2).unwrap(), vec![3, 1]);
        assert_eq!(final_correction_sequence(4, 3).unwrap(), vec![4, 2, 1]);
        assert_eq!(WeightSet::final_correction(3, 2).unwrap().cs(), rs(&[(9, 8), (-1, 8)]));
        assert_eq!(WeightSet::final_correction(5, 2).unwrap().cs(), rs(&[(25, 24), (-1, 24)]));
        let fc = WeightSet::final_correction(4, 3).unwrap();
        assert_eq!(fc.cs(), vandermonde_weights(&[4, 2, 1]).unwrap().cs());
        assert_eq!(
            final_correction_sequence(2, 3),
            Err(WeightError::Collision { m: 2, coarse: 2 })
        );
        assert!(final_correction_sequence(5, 1).is_err());
    }

    #[test]
    fn argument_errors() {
        assert_eq!(closed_form_weights(&[]), Err(WeightError::Empty));
        assert_eq!(closed_form_weights(&[1, 2, 1]), Err(WeightError::Duplicate(1)));
        assert_eq!(closed_form_weights(&[0, 2]), Err(WeightError::ZeroNode));
        assert_eq!(vandermonde_weights(&[3, 3]), Err(WeightError::Duplicate(3)));
        assert_eq!(
            closed_form_weights(&[1, 2]).unwrap().with_parity(Parity::Odd),
            Err(WeightError::EvenNodeInOddSet(2))
        );
    }

    #[test]
    fn natural_sequences_alternate_in_sign() {
        for n in 1..=10 {
            assert!(alternates_in_sign(&WeightSet::even(n).unwrap()), "even n={n}");
            assert!(alternates_in_sign(&WeightSet::odd(n).unwrap()), "odd n={n}");
        }
    }

    /// Lagrange basis polynomial for nodes `x_i = k_i^{-2}`, evaluated at zero.
    fn lagrange_at_zero(ks: &[u32], i: usize) -> BigRational {
        let x: Vec<BigRational> = ks.iter().map(|&k| inverse_even_power(k, 1)).collect();
        (0..ks.len()).filter(|&j| j != i).fold(BigRational::one(), |acc, j| {
            acc * (-&x[j]) / (&x[i] - &x[j])
        })
    }

    fn distinct_nodes(max_len: usize) -> impl Strategy<Value = Vec<u32>> {
        proptest::collection::btree_set(1u32..40, 1..=max_len)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>())
            .prop_shuffle()
    }

    proptest! {
        #[test]
        fn closed_form_matches_vandermonde(ks in distinct_nodes(10)) {
            let a = closed_form_weights(&ks).unwrap();
            let b = vandermonde_weights(&ks).unwrap();
            prop_assert_eq!(a.cs(), b.cs());
            prop_assert!(a.satisfies_moments());
        }

        #[test]
        fn weights_are_lagrange_values(ks in distinct_nodes(6)) {
            let ws = closed_form_weights(&ks).unwrap();
            for (i, c) in ws.cs().iter().enumerate() {
                prop_assert_eq!(c, &lagrange_at_zero(&ks, i));
            }
        }

        #[test]
        fn double_weights_are_nearest(n in 1u32..=6) {
            use num_traits::ToPrimitive;
            let ws = WeightSet::odd(n).unwrap();
            for (c, x) in ws.cs().iter().zip(ws.cs_as::<f64>()) {
                // both parts are below 2^53 here, so one f64 division is correctly rounded
                let num = c.numer().to_i64().unwrap();
                let den = c.denom().to_i64().unwrap();
                prop_assert!(num.abs() < 1 << 53 && den < 1 << 53);
                prop_assert_eq!(x, num as f64 / den as f64);
            }
        }
    }
}
