//! Scalar abstraction for the numeric parts of the toolkit.
//!
//! Model math (regressor, generator, fusion layers) is generic over the
//! floating scalar so the same code runs in f32 for training and in f64 for
//! finite-difference gradient checks.

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating scalar usable by every numeric module.
pub trait Scalar:
    Float
    + ScalarOperand
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + for<'de> serde::Deserialize<'de>
    + 'static
{
    fn from_f64_(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 -> scalar")
    }
    fn from_usize_(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize -> scalar")
    }
    fn to_f64_(self) -> f64 {
        self.to_f64().expect("scalar -> f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
