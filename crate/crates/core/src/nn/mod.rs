//! Numeric building blocks: the autodiff tape and a named parameter store
//! with Adam updates.

mod tape;

pub use tape::{NodeId, Tape};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Result, ToxgenError};
use crate::scalar::Scalar;

/// Named trainable parameters plus Adam moment estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParamStore<S: Scalar> {
    names: Vec<String>,
    values: Vec<Array2<S>>,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    step: usize,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn insert(&mut self, name: &str, value: Array2<S>) {
        assert!(
            !self.names.iter().any(|n| n == name),
            "duplicate parameter {name}"
        );
        self.m.push(Array2::zeros(value.dim()));
        self.v.push(Array2::zeros(value.dim()));
        self.names.push(name.to_string());
        self.values.push(value);
    }

    /// Uniform init in [-scale, scale] from the supplied RNG.
    pub fn insert_random<R: Rng>(&mut self, name: &str, rows: usize, cols: usize, scale: f64, rng: &mut R) {
        let value = Array2::from_shape_fn((rows, cols), |_| {
            S::from_f64_(rng.gen_range(-scale..scale))
        });
        self.insert(name, value);
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ToxgenError::Config(format!("unknown parameter '{name}'")))
    }

    pub fn get(&self, name: &str) -> Result<&Array2<S>> {
        Ok(&self.values[self.index(name)?])
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Array2<S>> {
        let i = self.index(name)?;
        Ok(&mut self.values[i])
    }

    /// One Adam step over the provided gradients (missing names are left
    /// untouched).
    pub fn adam_step(&mut self, grads: &HashMap<String, Array2<S>>, lr: f64) -> Result<()> {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step as i32);
        let c2 = 1.0 - BETA2.powi(self.step as i32);
        for (name, g) in grads {
            let i = self.index(name)?;
            if g.dim() != self.values[i].dim() {
                return Err(ToxgenError::Shape(format!(
                    "gradient for '{name}' is {:?}, parameter is {:?}",
                    g.dim(),
                    self.values[i].dim()
                )));
            }
            for ((mij, vij), (pij, gij)) in self.m[i]
                .iter_mut()
                .zip(self.v[i].iter_mut())
                .zip(self.values[i].iter_mut().zip(g.iter()))
            {
                let gf = gij.to_f64_();
                if !gf.is_finite() {
                    return Err(ToxgenError::NonFinite(format!("gradient of '{name}'")));
                }
                *mij = BETA1 * *mij + (1.0 - BETA1) * gf;
                *vij = BETA2 * *vij + (1.0 - BETA2) * gf * gf;
                let upd = lr * (*mij / c1) / ((*vij / c2).sqrt() + EPS);
                *pij = *pij - S::from_f64_(upd);
            }
        }
        Ok(())
    }
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn adam_moves_against_gradient() {
        let mut store = ParamStore::<f64>::new();
        store.insert("w", array![[1.0, -1.0]]);
        let mut grads = HashMap::new();
        grads.insert("w".to_string(), array![[0.5, -0.5]]);
        store.adam_step(&grads, 0.1).unwrap();
        let w = store.get("w").unwrap();
        assert!(w[[0, 0]] < 1.0);
        assert!(w[[0, 1]] > -1.0);
    }

    #[test]
    fn rejects_unknown_and_misshapen_gradients() {
        let mut store = ParamStore::<f64>::new();
        store.insert("w", array![[0.0]]);
        let mut bad_name = HashMap::new();
        bad_name.insert("nope".to_string(), array![[1.0]]);
        assert!(store.adam_step(&bad_name, 0.1).is_err());
        let mut bad_shape = HashMap::new();
        bad_shape.insert("w".to_string(), array![[1.0, 2.0]]);
        assert!(store.adam_step(&bad_shape, 0.1).is_err());
    }
}
