//! Scalar helpers shared by the hot loops.

/// `a^p` for `a >= 0`, taking the cheap `powi` route when `p` is a small
/// nonnegative integer (the sigma test matrix makes every modulus exponent
/// an integer or half-integer of |field| itself).
#[inline]
pub fn abs_pow(a: f64, p: f64) -> f64 {
    let n = p as i32;
    if n as f64 == p && (0..=16).contains(&n) {
        a.powi(n)
    } else {
        a.powf(p)
    }
}
