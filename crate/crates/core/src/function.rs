//! Real functions on `[0, 1]`.

/// Anything that can be evaluated pointwise on `[0, 1]`.
pub trait Function1D {
    fn value(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Function1D for F {
    fn value(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Pointwise difference `f - g`.
pub struct Difference<'a, F: ?Sized, G: ?Sized>(pub &'a F, pub &'a G);

impl<F: Function1D + ?Sized, G: Function1D + ?Sized> Function1D for Difference<'_, F, G> {
    fn value(&self, t: f64) -> f64 {
        self.0.value(t) - self.1.value(t)
    }
}

/// The model exact solution `u*(s) = s^r`.
#[derive(Debug, Clone, Copy)]
pub struct PowerFunction {
    pub exponent: f64,
}

impl Function1D for PowerFunction {
    fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            if self.exponent == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            s.powf(self.exponent)
        }
    }
}
