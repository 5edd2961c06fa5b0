//! `f64` math for builds without std, backed by libm. When std is linked (the
//! `parallel` feature, or dev-dependencies in test builds) the inherent
//! methods take precedence and the import goes unused.

#[allow(dead_code)]
pub(crate) trait Float {
    fn powf(self, e: f64) -> f64;
    fn powi(self, e: i32) -> f64;
    fn sqrt(self) -> f64;
    fn ln(self) -> f64;
    fn ln_1p(self) -> f64;
    fn log2(self) -> f64;
    fn ceil(self) -> f64;
    fn floor(self) -> f64;
    fn sin(self) -> f64;
    fn cos(self) -> f64;
    fn tan(self) -> f64;
}

impl Float for f64 {
    fn powf(self, e: f64) -> f64 {
        libm::pow(self, e)
    }
    fn powi(self, e: i32) -> f64 {
        libm::pow(self, e as f64)
    }
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    fn ln(self) -> f64 {
        libm::log(self)
    }
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    fn log2(self) -> f64 {
        libm::log2(self)
    }
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    fn tan(self) -> f64 {
        libm::tan(self)
    }
}
