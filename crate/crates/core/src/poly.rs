//! Sparse multivariate polynomials with exact differentiation, used for the
//! analytic vector fields and perturbation tensors of the identity checks.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Largest number of variables.
pub const MAX_VARS: usize = 8;

pub type Exponents = [u8; MAX_VARS];

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(nvars, &[], c)
    }

    /// `c · Π y_i^{e_i}`; missing exponents are zero.
    pub fn monomial(nvars: usize, exps: &[u8], c: f64) -> Self {
        let mut p = Self::zero(nvars);
        let mut e = [0u8; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        if c != 0.0 {
            p.terms.insert(e, c);
        }
        p
    }

    /// The coordinate `y_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = [0u8; MAX_VARS];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent of any single variable.
    pub fn max_exponent(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|e| e.iter().copied())
            .max()
            .unwrap_or(0) as usize
    }

    fn insert(&mut self, e: Exponents, c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut p = Poly::zero(self.nvars);
        if c != 0.0 {
            for (e, v) in &self.terms {
                p.terms.insert(*e, v * c);
            }
        }
        p
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                p.insert(f, v * e[i] as f64);
            }
        }
        p
    }

    /// Restriction to `y_i = value`.
    pub fn substitute(&self, i: usize, value: f64) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for (e, v) in &self.terms {
            let mut f = *e;
            f[i] = 0;
            p.insert(f, v * value.powi(e[i] as i32));
        }
        p
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e[..self.nvars]
                    .iter()
                    .zip(y)
                    .map(|(&k, x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Evaluation with a precomputed table `powers[i][k] = y_i^k`.
    pub fn eval_powers(&self, powers: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = *c;
                for (i, &k) in e[..self.nvars].iter().enumerate() {
                    if k > 0 {
                        m *= powers[i][k as usize];
                    }
                }
                m
            })
            .sum()
    }
}

/// Table `y_i^k` for `k ≤ max_exp`.
pub fn power_table(y: &[f64], max_exp: usize) -> Vec<Vec<f64>> {
    y.iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(max_exp + 1);
            let mut v = 1.0;
            for _ in 0..=max_exp {
                row.push(v);
                v *= x;
            }
            row
        })
        .collect()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, v) in &rhs.terms {
            p.insert(*e, *v);
        }
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, v) in &rhs.terms {
            p.insert(*e, -*v);
        }
        p
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut p = Poly::zero(self.nvars.max(rhs.nvars));
        for (e1, v1) in &self.terms {
            for (e2, v2) in &rhs.terms {
                let mut e = [0u8; MAX_VARS];
                for i in 0..MAX_VARS {
                    e[i] = e1[i] + e2[i];
                }
                p.insert(e, v1 * v2);
            }
        }
        p
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                self.$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

/// Derivatives of a field with `m` components of `n` variables, up to order 3.
///
/// Layout: `d1[c*n + j] = ∂_j F_c`, `d2[(c*n + j)*n + k]`, `d3[((c*n + j)*n + k)*n + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

/// A list of polynomials with all derivatives up to order 3 precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    n: usize,
    comps: Vec<Poly>,
    d1: Vec<Poly>,
    d2: Vec<Poly>,
    d3: Vec<Poly>,
    max_exp: usize,
}

impl PolyField {
    pub fn new(n: usize, comps: Vec<Poly>) -> Self {
        let d1: Vec<Poly> = comps.iter().flat_map(|p| (0..n).map(move |j| p.deriv(j))).collect();
        let d2: Vec<Poly> = d1.iter().flat_map(|p| (0..n).map(move |j| p.deriv(j))).collect();
        let d3: Vec<Poly> = d2.iter().flat_map(|p| (0..n).map(move |j| p.deriv(j))).collect();
        let max_exp = comps.iter().map(Poly::max_exponent).max().unwrap_or(0);
        PolyField {
            n,
            comps,
            d1,
            d2,
            d3,
            max_exp,
        }
    }

    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn jet(&self, y: &[f64], order: usize) -> Jet {
        let pw = power_table(y, self.max_exp.max(1));
        let ev = |ps: &[Poly]| ps.iter().map(|p| p.eval_powers(&pw)).collect::<Vec<_>>();
        Jet {
            value: ev(&self.comps),
            d1: if order >= 1 { ev(&self.d1) } else { Vec::new() },
            d2: if order >= 2 { ev(&self.d2) } else { Vec::new() },
            d3: if order >= 3 { ev(&self.d3) } else { Vec::new() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_derivatives() {
        let x = Poly::var(3, 0);
        let z = Poly::var(3, 2);
        let p = &(&x * &x) * &z + z.scale(3.0) - Poly::constant(3, 1.0);
        assert_eq!(p.degree(), 3);
        assert!((p.eval(&[2.0, 5.0, 0.5]) - (2.0 + 1.5 - 1.0)).abs() < 1e-15);
        let px = p.deriv(0);
        assert!((px.eval(&[2.0, 0.0, 0.5]) - 2.0).abs() < 1e-15);
        assert!((&p - &p).is_zero());
        let s = p.substitute(2, 0.0);
        assert!((s.eval(&[7.0, 1.0, 9.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn jet_layout() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let f = PolyField::new(2, vec![&(&x * &x) * &y, y.clone()]);
        let j = f.jet(&[2.0, 3.0], 3);
        assert_eq!(j.value, vec![12.0, 3.0]);
        assert_eq!(j.d1[0], 12.0); // ∂_x(x²y) = 2xy
        assert_eq!(j.d1[1], 4.0); // ∂_y(x²y) = x²
        assert_eq!(j.d2[1], 4.0); // ∂_x∂_y = 2x
        assert_eq!(j.d3[1], 2.0); // ∂_x∂_x∂_y = 2
        assert_eq!(j.d1[3], 1.0);
    }
}
