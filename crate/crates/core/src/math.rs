//! Thin wrappers over `libm` so the crate builds without `std`.

pub(crate) use core::f64::consts::PI;

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn powi(base: f64, exp: i32) -> f64 {
    libm::pow(base, exp as f64)
}

/// Folds an angle onto the half-open axial range `[0, π)`.
pub(crate) fn fold_axial(angle: f64) -> f64 {
    let folded = angle - PI * floor(angle / PI);
    // Rounding can land exactly on π (or a hair below 0) for large inputs.
    if !(0.0..PI).contains(&folded) {
        0.0
    } else {
        folded
    }
}
