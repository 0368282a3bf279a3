//! Scalar abstraction shared by every numeric module.

use clarabel::algebra::FloatT;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the crate computes in.
///
/// Loss models and profiles only need [`num_traits::Float`]; anything that
/// reaches the conic backend additionally needs the solver's own float bound,
/// so this trait bundles both together with serde support.
pub trait Real: FloatT + Serialize + DeserializeOwned {
    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `f64` literal helper for code generic over [`num_traits::Float`].
#[inline]
pub(crate) fn flit<T: num_traits::Float>(x: f64) -> T {
    T::from(x).expect("f64 literal representable in scalar type")
}
