//! Modified Bessel functions of the first kind, used for closed-form
//! reference values of the composed-exponential eigenstate.

/// `I_ν(x)` for integer order by its power series.
///
/// Converges quickly for the moderate arguments used here (|x| ≲ 30).
pub fn bessel_i(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
    let mut sum = term;
    let q = half * half;
    for k in 1..500u32 {
        term *= q / (f64::from(k) * f64::from(k + order));
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}
