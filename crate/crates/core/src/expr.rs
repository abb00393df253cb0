//! Sparse linear and quadratic expressions over dense variable ids.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
            Sense::Ge => lhs >= rhs - tol,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// `Σ coeff·x + constant`, terms sorted by id with no duplicates or zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merges duplicate ids and drops zero coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        Self { terms: acc.into_iter().filter(|&(_, c)| c != 0.0).collect(), constant: 0.0 }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| acc + c * x[v])
    }

    pub fn eval_bits(&self, x: &[bool]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| if x[v] { acc + c } else { acc })
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// `Σ c·x + Σ q·x·y + constant` over binaries. Quadratic pairs have `i < j`;
/// squares of a binary are folded into the linear part.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadExpr {
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub constant: f64,
}

/// Accumulates terms for a [`QuadExpr`].
#[derive(Debug, Clone, Default)]
pub struct QuadBuilder {
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    constant: f64,
}

impl QuadBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_linear(&mut self, v: usize, c: f64) {
        if c != 0.0 {
            *self.linear.entry(v).or_insert(0.0) += c;
        }
    }

    pub fn add_product(&mut self, a: usize, b: usize, c: f64) {
        if c == 0.0 {
            return;
        }
        if a == b {
            self.add_linear(a, c);
        } else {
            *self.quadratic.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
        }
    }

    /// Adds `weight·(Σ terms + constant)²`.
    pub fn add_square(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        self.add_constant(weight * constant * constant);
        for (k, &(a, ca)) in terms.iter().enumerate() {
            self.add_linear(a, weight * (ca * ca + 2.0 * ca * constant));
            for &(b, cb) in &terms[k + 1..] {
                self.add_product(a, b, 2.0 * weight * ca * cb);
            }
        }
    }

    pub fn build(self) -> QuadExpr {
        QuadExpr {
            linear: self.linear.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            quadratic: self.quadratic.into_iter().filter(|&(_, c)| c != 0.0).map(|((a, b), c)| (a, b, c)).collect(),
            constant: self.constant,
        }
    }
}

impl QuadExpr {
    pub fn eval_bits(&self, x: &[bool]) -> f64 {
        let mut acc = self.constant;
        for &(v, c) in &self.linear {
            if x[v] {
                acc += c;
            }
        }
        for &(a, b, c) in &self.quadratic {
            if x[a] && x[b] {
                acc += c;
            }
        }
        acc
    }

    pub fn degree(&self) -> usize {
        if !self.quadratic.is_empty() {
            2
        } else if !self.linear.is_empty() {
            1
        } else {
            0
        }
    }

    /// Sum of the negative coefficients: a lower bound over all binary points
    /// (excluding the constant).
    pub fn negative_mass(&self) -> f64 {
        self.linear.iter().map(|t| t.1).chain(self.quadratic.iter().map(|t| t.2)).filter(|c| *c < 0.0).sum()
    }
}

pub(crate) struct DisplayLin<'a, F: Fn(usize) -> String>(pub &'a [(usize, f64)], pub F);

impl<F: Fn(usize) -> String> fmt::Display for DisplayLin<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (k, &(v, c)) in self.0.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            if k == 0 {
                if c < 0.0 {
                    f.write_str("- ")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            if mag == 1.0 {
                write!(f, "{}", (self.1)(v))?;
            } else {
                write!(f, "{mag} {}", (self.1)(v))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_terms() {
        let e = LinExpr::from_terms([(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)]);
        assert_eq!(e.terms, vec![(1, 2.5)]);
    }

    #[test]
    fn square_expansion_matches_direct() {
        let mut b = QuadBuilder::new();
        let terms = [(0, 1.0), (1, 2.0), (2, -1.0)];
        b.add_square(&terms, -1.0, 3.0);
        let q = b.build();
        for bits in 0..8u32 {
            let x: Vec<bool> = (0..3).map(|k| bits >> k & 1 == 1).collect();
            let lhs: f64 = terms.iter().map(|&(v, c)| if x[v] { c } else { 0.0 }).sum::<f64>() - 1.0;
            assert_eq!(q.eval_bits(&x), 3.0 * lhs * lhs);
        }
    }

    #[test]
    fn display() {
        let s = DisplayLin(&[(0, 1.0), (1, -2.0)], |v| format!("v{v}")).to_string();
        assert_eq!(s, "v0 - 2 v1");
        assert_eq!(DisplayLin(&[(0, -1.0)], |v| format!("v{v}")).to_string(), "- v0");
    }
}
