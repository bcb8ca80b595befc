//! Analytic vector fields used as problem data and exact solutions.
//!
//! A field carries its value and, when the problem needs them, closed-form
//! curl, divergence and a scalar potential (for gradient fields, whose edge
//! circulations are then exact differences of the potential).

use std::fmt;
use std::sync::Arc;

use crate::Vec3;

pub type VectorFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct AnalyticField {
    value: VectorFn,
    curl: Option<VectorFn>,
    div: Option<ScalarFn>,
    potential: Option<ScalarFn>,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField")
            .field("curl", &self.curl.is_some())
            .field("div", &self.div.is_some())
            .field("potential", &self.potential.is_some())
            .finish()
    }
}

impl AnalyticField {
    pub fn new(value: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            curl: None,
            div: None,
            potential: None,
        }
    }

    pub fn with_curl(mut self, curl: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.curl = Some(Arc::new(curl));
        self
    }

    pub fn with_div(mut self, div: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.div = Some(Arc::new(div));
        self
    }

    /// Declares the field to be the gradient of `potential`.
    pub fn with_potential(
        mut self,
        potential: impl Fn(&Vec3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.potential = Some(Arc::new(potential));
        self
    }

    pub fn zero() -> Self {
        Self::constant(Vec3::zeros())
    }

    pub fn constant(c: Vec3) -> Self {
        Self::new(move |_| c)
            .with_curl(|_| Vec3::zeros())
            .with_div(|_| 0.0)
            .with_potential(move |x| c.dot(x))
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        (self.value)(x)
    }

    pub fn curl(&self, x: &Vec3) -> Option<Vec3> {
        self.curl.as_ref().map(|c| c(x))
    }

    pub fn div(&self, x: &Vec3) -> Option<f64> {
        self.div.as_ref().map(|d| d(x))
    }

    pub fn potential(&self, x: &Vec3) -> Option<f64> {
        self.potential.as_ref().map(|p| p(x))
    }

    pub fn has_curl(&self) -> bool {
        self.curl.is_some()
    }

    pub fn has_div(&self) -> bool {
        self.div.is_some()
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    /// `s * self`, keeping every derivative that is available.
    pub fn scaled(&self, s: f64) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |x| v(x) * s);
        if let Some(c) = self.curl.clone() {
            out.curl = Some(Arc::new(move |x| c(x) * s));
        }
        if let Some(d) = self.div.clone() {
            out.div = Some(Arc::new(move |x| d(x) * s));
        }
        if let Some(p) = self.potential.clone() {
            out.potential = Some(Arc::new(move |x| p(x) * s));
        }
        out
    }
}
