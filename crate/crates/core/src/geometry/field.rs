use std::sync::Arc;

use crate::geometry::{Grid, Point};

/// One value per interior cell.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must match interior cell count");
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values = grid.centers().iter().map(|&c| f(c)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| s * v).collect() }
    }

    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let w = self.grid.bilinear(p)?;
        Some(w.iter().map(|&(k, wk)| wk * self.values[k]).sum())
    }
}

/// Two components `(v1, v2)` per interior cell.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, values: Vec<[f64; 2]>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must match interior cell count");
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![[0.0; 2]; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> [f64; 2]) -> Self {
        let values = grid.centers().iter().map(|&c| f(c)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField::new(self.grid.clone(), self.values.iter().map(|v| v[k]).collect())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn interpolate(&self, p: Point) -> Option<[f64; 2]> {
        let w = self.grid.bilinear(p)?;
        let mut out = [0.0; 2];
        for &(k, wk) in &w {
            out[0] += wk * self.values[k][0];
            out[1] += wk * self.values[k][1];
        }
        Some(out)
    }
}
