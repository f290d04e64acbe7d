use std::sync::Arc;

/// Value, gradient and row-major Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn zeros(dim: usize) -> Self {
        Jet { value: 0.0, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }
    pub fn dim(&self) -> usize {
        self.grad.len()
    }
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }
    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
    pub fn laplacian(&self) -> f64 {
        (0..self.dim()).map(|i| self.h(i, i)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Analytic,
    GridInterpolated,
}

pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> f64;
    fn jet(&self, p: &[f64]) -> Jet;
    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.jet(p).grad
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn jet(&self, p: &[f64]) -> Jet {
        (**self).jet(p)
    }
    fn kind(&self) -> FieldKind {
        (**self).kind()
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn jet(&self, p: &[f64]) -> Jet {
        (**self).jet(p)
    }
    fn kind(&self) -> FieldKind {
        (**self).kind()
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type JetFn = Arc<dyn Fn(&[f64]) -> Jet + Send + Sync>;

/// Closed-form field given by closures.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    value: ValueFn,
    jet: JetFn,
}

impl FnField {
    pub fn new<V, J>(dim: usize, value: V, jet: J) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        J: Fn(&[f64]) -> Jet + Send + Sync + 'static,
    {
        FnField { dim, value: Arc::new(value), jet: Arc::new(jet) }
    }

    /// `c - Σ p_i²`, whose zero set is the sphere of radius `√c`.
    pub fn paraboloid(dim: usize, c: f64) -> Self {
        FnField::new(
            dim,
            move |p| c - p.iter().map(|x| x * x).sum::<f64>(),
            move |p| {
                let mut j = Jet::zeros(p.len());
                j.value = c - p.iter().map(|x| x * x).sum::<f64>();
                for i in 0..p.len() {
                    j.grad[i] = -2.0 * p[i];
                    j.hess[i * p.len() + i] = -2.0;
                }
                j
            },
        )
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }
    fn jet(&self, p: &[f64]) -> Jet {
        (self.jet)(p)
    }
}
