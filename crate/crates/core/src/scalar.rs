//! Scalar abstraction shared by the metric and neighbor-search code.
//!
//! Agreement metrics, rank statistics and k-NN distances are written once
//! against [`Scalar`] and instantiated for `f32` and `f64`. Model training,
//! explainers and experiment drivers work in `f64` directly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("value representable in scalar type")
    }

    /// Lossy conversion to `f64`, used at reporting boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Three-valued sign: -1, 0 or 1. Zero has its own sign class.
    fn sign_class(self) -> i8 {
        if self > Self::zero() {
            1
        } else if self < Self::zero() {
            -1
        } else {
            0
        }
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_class_treats_zero_separately() {
        assert_eq!(0.5f64.sign_class(), 1);
        assert_eq!((-2.0f32).sign_class(), -1);
        assert_eq!(0.0f64.sign_class(), 0);
        assert_eq!((-0.0f64).sign_class(), 0);
    }
}
