use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform subdivision `a = x_0 < x_1 < … < x_N = b` with `h = (b - a)/N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    a: f64,
    b: f64,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 elements, got {n}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::invalid("b", format!("need b > a, got a = {a}, b = {b}")));
        }
        let len = b - a;
        let mut nodes: Vec<f64> = (0..=n).map(|j| a + len * (j as f64 / n as f64)).collect();
        nodes[0] = a;
        nodes[n] = b;
        Ok(Mesh {
            a,
            b,
            h: len / n as f64,
            nodes,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of elements `N`.
    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of interior nodes `N - 1` (the unknowns).
    pub fn interior(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}
