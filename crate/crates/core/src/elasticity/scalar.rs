//! Scalar abstraction so Hessian assembly can run on an instrumented type.

use std::cell::Cell;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub trait Real: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + AddAssign {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

thread_local! {
    static MULS: Cell<u64> = const { Cell::new(0) };
}

/// `f64` wrapper counting multiplications on the current thread.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

pub fn reset_mul_count() {
    MULS.with(|m| m.set(0));
}

pub fn mul_count() -> u64 {
    MULS.with(|m| m.get())
}

impl Add for Counted {
    type Output = Counted;
    fn add(self, o: Counted) -> Counted {
        Counted(self.0 + o.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, o: Counted) -> Counted {
        Counted(self.0 - o.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, o: Counted) -> Counted {
        MULS.with(|m| m.set(m.get() + 1));
        Counted(self.0 * o.0)
    }
}

impl Neg for Counted {
    type Output = Counted;
    fn neg(self) -> Counted {
        Counted(-self.0)
    }
}

impl AddAssign for Counted {
    fn add_assign(&mut self, o: Counted) {
        self.0 += o.0;
    }
}

impl Real for Counted {
    fn from_f64(x: f64) -> Self {
        Counted(x)
    }
    fn to_f64(self) -> f64 {
        self.0
    }
}
