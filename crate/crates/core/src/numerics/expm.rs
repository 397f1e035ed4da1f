use super::matrix::Matrix;
use super::real::Real;
use super::NumericsError;

/// Largest dimension accepted by [`expm`].
pub const MAX_EXPM_DIM: usize = 8;

/// `exp(scale · m)` by scaling and squaring.
///
/// The scaled argument is halved until its 1-norm is at most 1/2, the Taylor
/// series is summed until the next term drops below `epsilon · ‖sum‖`, and the
/// result is squared back up.
pub fn expm<T: Real>(m: &Matrix<T>, scale: T) -> Result<Matrix<T>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    if n > MAX_EXPM_DIM {
        return Err(NumericsError::TooLarge(n));
    }
    if !scale.is_finite() || !m.is_finite() {
        return Err(NumericsError::Overflow);
    }
    let a = m.scale(&scale);
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(NumericsError::Overflow);
    }

    let half = T::ratio(1, 2);
    let mut squarings = 0u32;
    let mut reduced = norm;
    while reduced > half {
        reduced = reduced * half;
        squarings += 1;
        if squarings > 2048 {
            return Err(NumericsError::Overflow);
        }
    }
    let a = a.scale(&super::pow2::<T>(-(squarings as i64)));

    let eps = T::epsilon();
    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for j in 1..200 {
        term = term.checked_mul(&a)?.scale(&(T::one() / T::lit(j)));
        sum = sum.checked_add(&term)?;
        if term.norm_one() <= eps * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.checked_mul(&sum)?;
        if !sum.is_finite() {
            return Err(NumericsError::Overflow);
        }
    }
    Ok(sum)
}
