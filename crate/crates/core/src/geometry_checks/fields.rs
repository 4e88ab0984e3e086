use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::halfspace::{sample_points, Bubble, Dim};
use crate::poly::{Jet, Poly, PolyField};

/// Boundary conditions are checked to this tolerance, relative to the coefficient scale.
pub const ADMISSIBLE_TOL: f64 = 1e-10;
const BOUNDARY_SAMPLES: usize = 64;
const SAMPLE_EXTENT: f64 = 2.0;

/// Polynomial vector field on the closed half-space with
/// `V_n = 0` and `∂_n V_a = 0` on `y^n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleVectorField {
    dim: Dim,
    field: PolyField,
}

impl AdmissibleVectorField {
    /// Validates the boundary conditions on sampled boundary points.
    pub fn new(dim: Dim, comps: Vec<Poly>) -> Result<Self> {
        let n = dim.n;
        if comps.len() != n || comps.iter().any(|p| p.nvars() != n) {
            return Err(Error::domain(format!("vector field needs {n} components in {n} variables")));
        }
        let scale = comps
            .iter()
            .flat_map(|p| p.terms().map(|(_, c)| c.abs()))
            .fold(1.0, f64::max);
        let field = PolyField::new(n, comps);
        for y in sample_points(dim, BOUNDARY_SAMPLES, SAMPLE_EXTENT, false, 0x5eed) {
            let jet = field.jet(&y, 1);
            let normal = jet.value[n - 1].abs();
            if normal > ADMISSIBLE_TOL * scale {
                return Err(Error::domain(format!("V_n = {normal:.3e} on the boundary at {y:?}")));
            }
            for a in 0..n - 1 {
                let d = jet.d1[a * n + n - 1].abs();
                if d > ADMISSIBLE_TOL * scale {
                    return Err(Error::domain(format!("∂_n V_{a} = {d:.3e} on the boundary at {y:?}")));
                }
            }
        }
        Ok(AdmissibleVectorField { dim, field })
    }

    pub fn zero(dim: Dim) -> Self {
        let n = dim.n;
        let field = PolyField::new(n, vec![Poly::zero(n); n]);
        AdmissibleVectorField { dim, field }
    }

    /// `V = y`.
    pub fn dilation(dim: Dim) -> Self {
        let n = dim.n;
        Self::new(dim, (0..n).map(|i| Poly::var(n, i)).collect()).expect("dilation is admissible")
    }

    /// `V = e_a` for a tangential direction `a < n − 1`.
    pub fn translation(dim: Dim, a: usize) -> Result<Self> {
        let n = dim.n;
        if a + 1 >= n {
            return Err(Error::domain(format!("translation direction must be tangential, got {a}")));
        }
        let comps = (0..n)
            .map(|i| if i == a { Poly::constant(n, 1.0) } else { Poly::zero(n) })
            .collect();
        Self::new(dim, comps)
    }

    /// Random field of total degree ≤ 3 built to be admissible:
    /// `V_a = p_a(y′) + (y^n)² q_a(y)`, `V_n = y^n r(y′) + (y^n)² s(y′) + c (y^n)³`.
    pub fn random_cubic(dim: Dim, seed: u64) -> Self {
        let n = dim.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let yn = Poly::var(n, n - 1);
        let yn2 = &yn * &yn;
        let mut comps = Vec::with_capacity(n);
        for _ in 0..n - 1 {
            let p = random_poly(n, n - 1, 3, 0.5, &mut rng);
            let q = random_poly(n, n, 1, 0.5, &mut rng);
            comps.push(p + &yn2 * &q);
        }
        let r = random_poly(n, n - 1, 2, 0.5, &mut rng);
        let s = random_poly(n, n - 1, 1, 0.5, &mut rng);
        let c = rng.gen_range(-0.5..0.5);
        comps.push(&yn * &r + &yn2 * &s + (&yn2 * &yn).scale(c));
        Self::new(dim, comps).expect("random cubic field is admissible by construction")
    }

    /// Admissible field whose conformal Killing tensor satisfies the
    /// boundary relations `∂_n S_nn = −(2n/(n−2)) W⁻¹ ∂_n W S_nn` for `bubble`.
    ///
    /// On `y^n = 0` it arranges `S_nn = σ ρ₀²` with `ρ₀² = ε²(1 + T_c²) + |y′|²`.
    pub fn crafted(bubble: &Bubble, seed: u64) -> Self {
        let dim = bubble.dim;
        let n = dim.n;
        let nf = dim.nf();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let yn = Poly::var(n, n - 1);
        let yn2 = &yn * &yn;
        let mut comps = Vec::with_capacity(n);
        let mut div_p = Poly::zero(n);
        for a in 0..n - 1 {
            let p = random_poly(n, n - 1, 3, 0.5, &mut rng);
            div_p = div_p + p.deriv(a);
            let q = random_poly(n, n, 1, 0.5, &mut rng);
            comps.push(p + &yn2 * &q);
        }
        let eps = bubble.eps;
        let mut rho2 = Poly::constant(n, eps * eps * (1.0 + bubble.t_c * bubble.t_c));
        for a in 0..n - 1 {
            let ya = Poly::var(n, a);
            rho2 = rho2 + &ya * &ya;
        }
        let s = (rho2.scale(sigma) + div_p.scale(2.0 / nf)).scale(nf / (2.0 * (nf - 1.0)));
        let t = -nf * nf / (nf - 1.0) * bubble.t_c * eps * sigma;
        let c = rng.gen_range(-0.5..0.5);
        comps.push(&yn * &s + yn2.scale(0.5 * t) + (&yn2 * &yn).scale(c));
        Self::new(dim, comps).expect("crafted field is admissible by construction")
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn components(&self) -> &[Poly] {
        self.field.comps()
    }

    /// Values and derivatives up to `order ≤ 3`, laid out as in [`Jet`].
    pub fn jet(&self, y: &[f64], order: usize) -> Jet {
        self.field.jet(y, order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let comps = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(p, q)| p + q)
            .collect();
        AdmissibleVectorField {
            dim: self.dim,
            field: PolyField::new(self.dim.n, comps),
        }
    }
}

/// Trace-free polynomial perturbation `H` with `H_{in} = 0`, vanishing on
/// `y^n = 0`: `H_ab = y^n G_ab(y)` where `G` is symmetric and trace-free.
///
/// The degree is at most `d = ⌊(n−2)/2⌋`, so `H ≡ 0` when `n = 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTensor {
    dim: Dim,
    /// Full `n × n` component list, row-major.
    field: PolyField,
}

impl PerturbationTensor {
    pub fn zero(dim: Dim) -> Self {
        let n = dim.n;
        PerturbationTensor {
            dim,
            field: PolyField::new(n, vec![Poly::zero(n); n * n]),
        }
    }

    /// `H_ab = y^n C_ab` for a symmetric trace-free `(n−1) × (n−1)` matrix `C` (row-major).
    pub fn normal_linear(dim: Dim, c: &[f64]) -> Result<Self> {
        let m = dim.n - 1;
        if c.len() != m * m {
            return Err(Error::domain(format!("expected {} entries, got {}", m * m, c.len())));
        }
        let scale = c.iter().fold(1.0, |s: f64, v| s.max(v.abs()));
        let trace: f64 = (0..m).map(|a| c[a * m + a]).sum();
        let asym = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .fold(0.0, |s: f64, (a, b)| s.max((c[a * m + b] - c[b * m + a]).abs()));
        if trace.abs() > ADMISSIBLE_TOL * scale || asym > ADMISSIBLE_TOL * scale {
            return Err(Error::domain("C must be symmetric and trace-free"));
        }
        let n = dim.n;
        let g: Vec<Poly> = c.iter().map(|&v| Poly::constant(n, v)).collect();
        Ok(Self::from_tangential(dim, g))
    }

    /// Random admissible perturbation of the largest allowed degree.
    pub fn random(dim: Dim, seed: u64) -> Self {
        let n = dim.n;
        if dim.d == 0 {
            return Self::zero(dim);
        }
        let m = n - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = vec![Poly::zero(n); m * m];
        for a in 0..m {
            for b in a..m {
                let p = random_poly(n, n, dim.d - 1, 0.5, &mut rng);
                g[a * m + b] = p.clone();
                g[b * m + a] = p;
            }
        }
        let trace = (0..m).fold(Poly::zero(n), |acc, a| acc + &g[a * m + a]);
        let shift = trace.scale(1.0 / m as f64);
        for a in 0..m {
            g[a * m + a] = &g[a * m + a] - &shift;
        }
        Self::from_tangential(dim, g)
    }

    fn from_tangential(dim: Dim, g: Vec<Poly>) -> Self {
        let n = dim.n;
        let m = n - 1;
        let yn = Poly::var(n, n - 1);
        let mut comps = vec![Poly::zero(n); n * n];
        for a in 0..m {
            for b in 0..m {
                comps[a * n + b] = &yn * &g[a * m + b];
            }
        }
        PerturbationTensor {
            dim,
            field: PolyField::new(n, comps),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.field.comps().iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// Component `(i, j)` as a polynomial.
    pub fn component(&self, i: usize, j: usize) -> &Poly {
        &self.field.comps()[i * self.dim.n + j]
    }

    /// Jet of the `n²` components; component index is `i·n + j`.
    pub fn jet(&self, y: &[f64], order: usize) -> Jet {
        self.field.jet(y, order)
    }
}

/// Random polynomial in the first `vars` of `nvars` variables with total
/// degree ≤ `deg` and coefficients uniform in `[−amp, amp]`.
fn random_poly(nvars: usize, vars: usize, deg: usize, amp: f64, rng: &mut ChaCha8Rng) -> Poly {
    let mut out = Poly::zero(nvars);
    let mut exps = vec![0u8; nvars];
    fn walk(
        pos: usize,
        vars: usize,
        left: usize,
        exps: &mut Vec<u8>,
        f: &mut dyn FnMut(&[u8]),
    ) {
        if pos == vars {
            f(exps);
            return;
        }
        for e in 0..=left {
            exps[pos] = e as u8;
            walk(pos + 1, vars, left - e, exps, f);
        }
        exps[pos] = 0;
    }
    walk(0, vars, deg, &mut exps, &mut |e| {
        let c = rng.gen_range(-amp..amp);
        out = std::mem::replace(&mut out, Poly::zero(nvars)) + Poly::monomial(nvars, e, c);
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inadmissible_fields_rejected() {
        let dim = Dim::new(3).unwrap();
        // V_n = 1 violates V_n = 0.
        let bad = vec![Poly::zero(3), Poly::zero(3), Poly::constant(3, 1.0)];
        assert!(matches!(AdmissibleVectorField::new(dim, bad), Err(Error::Domain(_))));
        // V_0 = y^n violates ∂_n V_0 = 0.
        let bad = vec![Poly::var(3, 2), Poly::zero(3), Poly::zero(3)];
        assert!(AdmissibleVectorField::new(dim, bad).is_err());
        assert!(AdmissibleVectorField::translation(dim, 2).is_err());
    }

    #[test]
    fn perturbation_structure() {
        let dim = Dim::new(6).unwrap();
        let h = PerturbationTensor::random(dim, 3);
        assert!(h.degree() <= dim.d && h.degree() >= 1);
        let y = [0.3, -0.2, 0.5, 0.1, -0.4, 0.7];
        let jet = h.jet(&y, 1);
        let n = 6;
        let tr: f64 = (0..n).map(|i| jet.value[i * n + i]).sum();
        assert!(tr.abs() < 1e-14);
        for i in 0..n {
            assert_eq!(jet.value[i * n + n - 1], 0.0);
            for j in 0..n {
                assert!((jet.value[i * n + j] - jet.value[j * n + i]).abs() < 1e-15);
            }
        }
        assert!(PerturbationTensor::random(Dim::new(3).unwrap(), 1).degree() == 0);
        assert!(PerturbationTensor::normal_linear(Dim::new(4).unwrap(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).is_err());
    }
}
