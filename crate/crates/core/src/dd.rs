//! Double-double complex arithmetic for residuals and power sums that cancel
//! across many orders of magnitude.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl Dd {
    pub const ZERO: Dd = Dd {
        re: TwoFloat::from_f64(0.0),
        im: TwoFloat::from_f64(0.0),
    };

    /// Unevaluated sum `hi + lo`.
    pub fn from_parts(hi: Complex64, lo: Complex64) -> Self {
        Dd {
            re: TwoFloat::new_add(hi.re, lo.re),
            im: TwoFloat::new_add(hi.im, lo.im),
        }
    }

    pub fn hi(&self) -> Complex64 {
        Complex64::new(self.re.hi(), self.im.hi())
    }

    pub fn lo(&self) -> Complex64 {
        Complex64::new(self.re.lo(), self.im.lo())
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(f64::from(self.re), f64::from(self.im))
    }

    pub fn scale(self, k: f64) -> Dd {
        Dd {
            re: self.re * k,
            im: self.im * k,
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(self) -> Dd {
        Dd { re: -self.im, im: self.re }
    }

    pub fn conj(self) -> Dd {
        Dd { re: self.re, im: -self.im }
    }
}

impl From<Complex64> for Dd {
    fn from(z: Complex64) -> Self {
        Dd {
            re: TwoFloat::from(z.re),
            im: TwoFloat::from(z.im),
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        Dd {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        Dd {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { re: -self.re, im: -self.im }
    }
}

impl Mul<Complex64> for Dd {
    type Output = Dd;
    fn mul(self, z: Complex64) -> Dd {
        Dd {
            re: self.re * z.re - self.im * z.im,
            im: self.re * z.im + self.im * z.re,
        }
    }
}
