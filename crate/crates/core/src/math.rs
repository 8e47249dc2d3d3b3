//! Float intrinsics that work with and without `std`.
//!
//! Without `std` every function goes through `libm`; with `std` the platform
//! implementation is used.

macro_rules! unary {
    ($($name:ident => $libm:ident),*) => {$(
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    )*};
}

unary!(exp => exp, ln => log, tanh => tanh, sqrt => sqrt, floor => floor, ceil => ceil);

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powi(n)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, n as f64)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}
