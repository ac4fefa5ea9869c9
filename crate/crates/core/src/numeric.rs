//! Small scalar helpers shared by the classical and quantum code.

/// Largest magnitude accepted by the logit maps before clamping.
pub const MEAN_CLAMP: f64 = 1.0 - 1e-12;

/// Compensated (Neumaier) summation with a fixed reduction order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log Σ exp(x_k)` shifted by the maximum exponent.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + neumaier_sum(values.iter().map(|&x| (x - max).exp())).ln()
}

/// `x log x` with the continuous extension `0 log 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `½ log((1+m)/(1-m))` with `|m|` clamped to [`MEAN_CLAMP`].
///
/// Accepts `|m| ≤ 1` so that saturated `tanh` values can be fed back in.
#[inline]
pub fn atanh_clamped(m: f64) -> f64 {
    let m = m.clamp(-MEAN_CLAMP, MEAN_CLAMP);
    0.5 * ((1.0 + m) / (1.0 - m)).ln()
}

/// `log(e^r + e^-r)` for `r ≥ 0` without overflow.
#[inline]
pub fn log_two_cosh(r: f64) -> f64 {
    let r = r.abs();
    r + (-2.0 * r).exp().ln_1p()
}
