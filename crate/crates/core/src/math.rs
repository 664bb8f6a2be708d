//! Thin wrappers over `libm` so the crate builds without `std` and produces
//! identical results on every platform.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Round half away from zero.
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Linear interpolation with exact endpoints: `lerp(a, b, 0) == a` and
/// `lerp(a, b, 1) == b` bit for bit.
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}
