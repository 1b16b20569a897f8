use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Field the evaluation metrics are computed in.
pub trait Scalar: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    /// `num / den`, zero when `den` is zero.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync> Scalar for T {}

/// Exact rationals for checking float results.
pub type Exact = Ratio<i64>;
