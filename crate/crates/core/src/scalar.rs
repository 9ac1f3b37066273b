use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every supported scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|value - reference| <= tol * (1 + |reference|)`.
pub fn within_rel<T: Scalar>(value: T, reference: T, tol: T) -> bool {
    (value - reference).abs() <= tol * (T::one() + reference.abs())
}

/// Dot product with ascending-index accumulation.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, enough to carry
/// the rounding error of one working-precision operation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Compensated<T> {
    pub hi: T,
    pub lo: T,
}

fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum<T: Scalar>(a: T, b: T) -> Compensated<T> {
    let s = a + b;
    Compensated {
        hi: s,
        lo: b - (s - a),
    }
}

impl<T: Scalar> Compensated<T> {
    pub fn value(self) -> T {
        self.hi + self.lo
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        fast_two_sum(s, e + self.lo + other.lo)
    }

    /// Exact for powers of two.
    pub fn scale(self, k: T) -> Self {
        Compensated {
            hi: self.hi * k,
            lo: self.lo * k,
        }
    }

    pub fn div(self, m: T) -> Self {
        let q = self.hi / m;
        // exact remainder of the leading quotient
        let rem = (-q).mul_add(m, self.hi);
        fast_two_sum(q, (rem + self.lo) / m)
    }
}

/// Dot product accurate as if computed in twice the working precision.
pub(crate) fn dot_compensated<T: Scalar>(a: &[T], b: &[T]) -> Compensated<T> {
    debug_assert_eq!(a.len(), b.len());
    let (mut s, mut c) = (T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let ep = x.mul_add(y, -p);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    fast_two_sum(s, c)
}
