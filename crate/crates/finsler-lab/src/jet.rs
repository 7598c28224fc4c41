//! Forward-mode automatic differentiation on truncated multivariate Taylor
//! expansions ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a function at a point, for all
//! multi-indices of total degree up to `order`, over `num_vars` independent
//! variables. Storage is dense, indexed by graded-lexicographic rank of the
//! multi-index.
//!
//! Storage convention: coefficients are *Taylor* coefficients, i.e. the entry
//! for the multi-index mu holds (d^|mu| f / dv^mu) / mu!. Truncated
//! multiplication is then a plain convolution of coefficient tables. The
//! factorial conversion happens in exactly one place, [`Jet::extract`], which
//! returns true partial derivatives.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use once_cell::sync::OnceCell;

/// Sentinel rank for "product degree exceeds the truncation order".
const OUT_OF_RANGE: u32 = u32::MAX;

/// Shared combinatorial tables for one (num_vars, order) pair.
///
/// Multi-indices are enumerated in graded lexicographic order, so the index
/// set of any lower order is a prefix of the index set of a higher one.
#[derive(Debug)]
pub struct IndexSpace {
    num_vars: usize,
    order: usize,
    multis: Vec<Vec<u8>>,
    rank_of: HashMap<Vec<u8>, usize>,
    /// Flattened table: rank of multis[i] + multis[j], or OUT_OF_RANGE.
    prod: Vec<u32>,
    /// rank of multis[i] + e_var, or OUT_OF_RANGE. Flattened [i * num_vars + var].
    bump: Vec<u32>,
    /// mu! for each rank.
    factorial: Vec<f64>,
}

impl IndexSpace {
    fn build(num_vars: usize, order: usize) -> IndexSpace {
        assert!(num_vars >= 1, "jet needs at least one variable");
        let mut multis: Vec<Vec<u8>> = Vec::new();
        let mut current = vec![vec![0u8; num_vars]];
        multis.push(vec![0u8; num_vars]);
        for _deg in 1..=order {
            let mut next: Vec<Vec<u8>> = Vec::new();
            for m in &current {
                // Append increments in lex order without duplicates: only bump
                // variables at or after the last nonzero position.
                let start = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for v in start..num_vars {
                    let mut n = m.clone();
                    n[v] += 1;
                    next.push(n);
                }
            }
            next.sort();
            next.dedup();
            multis.extend(next.iter().cloned());
            current = next;
        }
        let degrees: Vec<u8> = multis.iter().map(|m| m.iter().sum()).collect();
        let rank_of: HashMap<Vec<u8>, usize> = multis
            .iter()
            .enumerate()
            .map(|(r, m)| (m.clone(), r))
            .collect();
        let len = multis.len();
        let mut prod = vec![OUT_OF_RANGE; len * len];
        for i in 0..len {
            for j in 0..len {
                if degrees[i] as usize + degrees[j] as usize <= order {
                    let sum: Vec<u8> = multis[i]
                        .iter()
                        .zip(&multis[j])
                        .map(|(a, b)| a + b)
                        .collect();
                    prod[i * len + j] = rank_of[&sum] as u32;
                }
            }
        }
        let mut bump = vec![OUT_OF_RANGE; len * num_vars];
        for i in 0..len {
            for v in 0..num_vars {
                if (degrees[i] as usize) < order {
                    let mut m = multis[i].clone();
                    m[v] += 1;
                    bump[i * num_vars + v] = rank_of[&m] as u32;
                }
            }
        }
        let factorial = multis
            .iter()
            .map(|m| m.iter().map(|&e| fact(e as usize)).product())
            .collect();
        IndexSpace {
            num_vars,
            order,
            multis,
            rank_of,
            prod,
            bump,
            factorial,
        }
    }

    pub fn len(&self) -> usize {
        self.multis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multis.is_empty()
    }

    pub fn multi(&self, rank: usize) -> &[u8] {
        &self.multis[rank]
    }
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

type SpaceRegistry = Mutex<HashMap<(usize, usize), Arc<IndexSpace>>>;

fn registry() -> &'static SpaceRegistry {
    static REG: OnceCell<SpaceRegistry> = OnceCell::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch (or build and cache) the index space for `(num_vars, order)`.
pub fn index_space(num_vars: usize, order: usize) -> Arc<IndexSpace> {
    let mut reg = registry().lock().unwrap();
    reg.entry((num_vars, order))
        .or_insert_with(|| Arc::new(IndexSpace::build(num_vars, order)))
        .clone()
}

/// Truncated multivariate Taylor expansion: value plus all partial
/// derivatives up to total degree `order`.
///
/// Pure value type; all operations allocate a fresh jet, so jets can be used
/// freely from multiple threads.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<IndexSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Jet of a constant function.
    pub fn constant(value: f64, num_vars: usize, order: usize) -> Jet {
        let space = index_space(num_vars, order);
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet { space, coeffs }
    }

    /// Jet of the coordinate function `v_{var_index}` evaluated at `value`.
    pub fn variable(value: f64, var_index: usize, num_vars: usize, order: usize) -> Jet {
        assert!(
            var_index < num_vars,
            "variable index {var_index} out of range for {num_vars} variables"
        );
        let mut jet = Jet::constant(value, num_vars, order);
        if order >= 1 {
            let mut multi = vec![0u8; num_vars];
            multi[var_index] = 1;
            let rank = jet.space.rank_of[&multi];
            jet.coeffs[rank] = 1.0;
        }
        jet
    }

    pub fn num_vars(&self) -> usize {
        self.space.num_vars
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// True partial derivative for the given multi-index (factorial
    /// conversion from the internal Taylor coefficient happens here).
    pub fn extract(&self, multi: &[u8]) -> f64 {
        assert_eq!(multi.len(), self.num_vars(), "multi-index length mismatch");
        let deg: usize = multi.iter().map(|&e| e as usize).sum();
        assert!(
            deg <= self.order(),
            "multi-index degree {deg} exceeds jet order {}",
            self.order()
        );
        let rank = self.space.rank_of[multi];
        self.coeffs[rank] * self.space.factorial[rank]
    }

    /// Partial derivative with respect to the listed variables, e.g.
    /// `partial(&[i, j])` is d^2 f / dv_i dv_j.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut multi = vec![0u8; self.num_vars()];
        for &v in vars {
            assert!(v < self.num_vars(), "variable index {v} out of range");
            multi[v] += 1;
        }
        self.extract(&multi)
    }

    /// Overwrite one coefficient, given as a true partial derivative.
    pub fn set_partial(&mut self, multi: &[u8], derivative: f64) {
        assert_eq!(multi.len(), self.num_vars(), "multi-index length mismatch");
        let rank = self.space.rank_of[multi];
        self.coeffs[rank] = derivative / self.space.factorial[rank];
    }

    /// Exact derivative jet with respect to one variable; the result has
    /// order `self.order() - 1`.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(var < self.num_vars(), "variable index {var} out of range");
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let target = index_space(self.num_vars(), self.order() - 1);
        let mut coeffs = vec![0.0; target.len()];
        for (rank, c) in coeffs.iter_mut().enumerate() {
            // Same prefix enumeration: multi of `target` rank is identical in
            // the source space.
            let src = self.space.bump[rank * self.space.num_vars + var];
            debug_assert_ne!(src, OUT_OF_RANGE);
            let exponent = self.space.multis[src as usize][var] as f64;
            *c = self.coeffs[src as usize] * exponent;
        }
        Jet {
            space: target,
            coeffs,
        }
    }

    /// Drop coefficients above `new_order` (coefficients kept are exact).
    pub fn truncate(&self, new_order: usize) -> Jet {
        assert!(new_order <= self.order());
        let target = index_space(self.num_vars(), new_order);
        Jet {
            coeffs: self.coeffs[..target.len()].to_vec(),
            space: target,
        }
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space)
                || (self.num_vars() == other.num_vars() && self.order() == other.order()),
            "incompatible jets: ({}, order {}) vs ({}, order {})",
            self.num_vars(),
            self.order(),
            other.num_vars(),
            other.order()
        );
    }

    /// Compose a univariate Taylor series (coefficients about `self.value()`)
    /// with this jet: result = sum_k series[k] * (self - value)^k.
    fn compose(&self, series: &[f64]) -> Jet {
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        let order = self.order();
        let mut result = Jet::constant(series[order], self.num_vars(), order);
        for k in (0..order).rev() {
            result = &result * &w;
            result.coeffs[0] += series[k];
        }
        result
    }

    /// Reciprocal 1/self. Panics if the value is zero.
    pub fn recip(&self) -> Jet {
        let a0 = self.value();
        assert!(a0 != 0.0, "division by a jet with zero value");
        let series: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / a0.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&series)
    }

    /// Square root. Panics if the value is not positive.
    pub fn sqrt(&self) -> Jet {
        assert!(
            self.value() > 0.0,
            "sqrt of a jet with non-positive value {}",
            self.value()
        );
        self.powf(0.5)
    }

    /// Real power with constant exponent. Panics if the value is not positive.
    pub fn powf(&self, r: f64) -> Jet {
        let a0 = self.value();
        assert!(
            a0 > 0.0,
            "powf of a jet with non-positive value {a0} (exponent {r})"
        );
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0; // r (r-1) ... (r-k+1) / k!
        for k in 0..=self.order() {
            series.push(binom * a0.powf(r - k as f64));
            binom *= (r - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&series)
    }

    /// Integer power; handles zero and negative bases for non-negative
    /// exponents and uses `recip` for negative ones.
    pub fn powi(&self, k: i32) -> Jet {
        if k < 0 {
            return self.recip().powi(-k);
        }
        let mut result = Jet::constant(1.0, self.num_vars(), self.order());
        for _ in 0..k {
            result = &result * self;
        }
        result
    }

    pub fn exp(&self) -> Jet {
        let e0 = self.value().exp();
        let series: Vec<f64> = (0..=self.order())
            .scan(e0, |acc, k| {
                let c = *acc;
                *acc /= k as f64 + 1.0;
                Some(c)
            })
            .collect();
        self.compose(&series)
    }

    /// Natural logarithm. Panics if the value is not positive.
    pub fn ln(&self) -> Jet {
        let a0 = self.value();
        assert!(a0 > 0.0, "log of a jet with non-positive value {a0}");
        let mut series = vec![a0.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * a0.powi(k as i32)));
        }
        self.compose(&series)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4] / fact(k)).collect();
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4] / fact(k)).collect();
        self.compose(&series)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let len = self.space.len();
        let mut coeffs = vec![0.0; len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = i * len;
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let r = self.space.prod[row + j];
                if r != OUT_OF_RANGE {
                    coeffs[r as usize] += a * b;
                }
            }
        }
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let coeffs = self.coeffs.iter().map(|a| -a).collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Scale by a plain float.
impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        let coeffs = self.coeffs.iter().map(|a| a * rhs).collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        &self * rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coordinate_jet() {
        let j = Jet::variable(2.0, 0, 2, 3);
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.partial(&[0]), 1.0);
        assert_eq!(j.partial(&[1]), 0.0);
        assert_eq!(j.partial(&[0, 0]), 0.0);

        let k = Jet::variable(0.0, 1, 2, 3);
        assert_eq!(k.value(), 0.0);
        assert_eq!(k.partial(&[1]), 1.0);
    }

    #[test]
    fn sum_of_variables_is_linear() {
        let a = Jet::variable(1.5, 0, 2, 3);
        let b = Jet::variable(-0.5, 1, 2, 3);
        let s = &a + &b;
        assert_eq!(s.value(), 1.0);
        assert_eq!(s.partial(&[0]), 1.0);
        assert_eq!(s.partial(&[1]), 1.0);
    }

    #[test]
    fn square_of_coordinate() {
        // d^2(x^2)/dx^2 = 2 at any point.
        let x = Jet::variable(3.0, 0, 1, 3);
        let sq = &x * &x;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.partial(&[0]), 6.0);
        assert_eq!(sq.partial(&[0, 0]), 2.0);
        assert_eq!(sq.partial(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn reciprocal_derivatives() {
        // 1/x at x = 2: value 0.5, d = -1/4, d^2 = 2/x^3 = 1/4.
        let x = Jet::variable(2.0, 0, 1, 3);
        let one = Jet::constant(1.0, 1, 3);
        let r = &one / &x;
        assert_relative_eq!(r.value(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(r.partial(&[0]), -0.25, epsilon = 1e-14);
        assert_relative_eq!(r.partial(&[0, 0]), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn add_neg_cancels() {
        let a = Jet::variable(1.2, 0, 3, 3);
        let b = &(&a * &a) * &a;
        let z = &b + &(-&b);
        assert!(z.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn sqrt_at_four() {
        let x = Jet::variable(4.0, 0, 1, 3);
        let s = x.sqrt();
        assert_relative_eq!(s.value(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.partial(&[0]), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn sin_maclaurin() {
        let x = Jet::variable(0.0, 0, 1, 3);
        let s = x.sin();
        assert_relative_eq!(s.value(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.partial(&[0]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.partial(&[0, 0]), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.partial(&[0, 0, 0]), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_all_orders_equal_e() {
        let x = Jet::variable(1.0, 0, 1, 3);
        let e = x.exp();
        let ee = 1.0f64.exp();
        for k in 0..=3 {
            let multi = vec![k as u8];
            assert_relative_eq!(e.extract(&multi), ee, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_partial_of_x2y() {
        // f = x^2 y at (1, 1): d^2 f / dx dy = 2x = 2.
        let x = Jet::variable(1.0, 0, 2, 3);
        let y = Jet::variable(1.0, 1, 2, 3);
        let f = &(&x * &x) * &y;
        assert_eq!(f.partial(&[0, 1]), 2.0);
        assert_eq!(f.extract(&[0, 0]), f.value());
    }

    #[test]
    fn derivative_jet_matches_shifted_coefficients() {
        // f = x^3 + x y^2 at (2, 3); df/dx = 3x^2 + y^2 = 21.
        let x = Jet::variable(2.0, 0, 2, 4);
        let y = Jet::variable(3.0, 1, 2, 4);
        let f = &x.powi(3) + &(&x * &(&y * &y));
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 3);
        assert_relative_eq!(fx.value(), 21.0, epsilon = 1e-12);
        // d^2 f / dx dy = 2y = 6 via the derivative jet.
        assert_relative_eq!(fx.partial(&[1]), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn truncate_keeps_prefix() {
        let x = Jet::variable(1.3, 0, 2, 4);
        let y = Jet::variable(0.7, 1, 2, 4);
        let f = &(&x * &y) * &(&x + &y);
        let t = f.truncate(2);
        assert_eq!(t.order(), 2);
        assert_eq!(t.partial(&[0, 1]), f.partial(&[0, 1]));
    }

    #[test]
    fn powi_negative_exponent() {
        let x = Jet::variable(2.0, 0, 1, 2);
        let p = x.powi(-2);
        assert_relative_eq!(p.value(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(p.partial(&[0]), -2.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    #[should_panic(expected = "division by a jet with zero value")]
    fn div_by_zero_value_panics() {
        let x = Jet::variable(0.0, 0, 1, 2);
        let _ = x.recip();
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn variable_index_out_of_range() {
        let _ = Jet::variable(0.0, 2, 2, 3);
    }

    #[test]
    #[should_panic(expected = "exceeds jet order")]
    fn extract_degree_overflow_panics() {
        let x = Jet::variable(1.0, 0, 2, 3);
        let _ = x.extract(&[2, 2]);
    }

    #[test]
    #[should_panic(expected = "incompatible jets")]
    fn incompatible_shapes_panic() {
        let a = Jet::variable(1.0, 0, 2, 3);
        let b = Jet::variable(1.0, 0, 3, 3);
        let _ = &a + &b;
    }
}
