use std::f64::consts::PI;

/// Adaptive Simpson rule on `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Seed with a coarse composite rule so that a lucky first estimate
    // cannot terminate the recursion early.
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let mut panels = Vec::with_capacity(PANELS);
    let mut coarse = 0.0;
    for k in 0..PANELS {
        let x0 = a + k as f64 * h;
        let x2 = if k + 1 == PANELS { b } else { x0 + h };
        let x1 = 0.5 * (x0 + x2);
        let (f0, f1, f2) = (f(x0), f(x1), f(x2));
        let s = (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2);
        coarse += s;
        panels.push((x0, x2, f0, f1, f2, s));
    }
    let tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    panels
        .into_iter()
        .map(|(x0, x2, f0, f1, f2, s)| simpson_rec(&f, x0, x2, f0, f1, f2, s, tol / PANELS as f64, 48))
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let d = m as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A weighted point set on a sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    /// Ambient dimension of the points.
    pub ambient: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Product rule on the unit sphere `S^m ⊂ ℝ^{m+1}`.
///
/// `res` Gauss–Legendre nodes per polar angle and `2·res` trapezoid nodes on
/// the final circle.
pub fn sphere_rule(m: usize, res: usize) -> SphereRule {
    let res = res.max(2);
    match m {
        0 => SphereRule {
            ambient: 1,
            points: vec![vec![-1.0], vec![1.0]],
            weights: vec![1.0, 1.0],
        },
        1 => {
            let k = 2 * res;
            let dphi = 2.0 * PI / k as f64;
            let points = (0..k)
                .map(|j| {
                    let phi = j as f64 * dphi;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            SphereRule {
                ambient: 2,
                points,
                weights: vec![dphi; k],
            }
        }
        _ => polar_product(m, res, 0.0, PI),
    }
}

/// Points `(sin θ · p, cos θ)` with `p ∈ S^{m-1}`, `θ ∈ [θ0, θ1]`.
fn polar_product(m: usize, res: usize, theta0: f64, theta1: f64) -> SphereRule {
    let inner = sphere_rule(m - 1, res);
    let gl = GaussLegendre::new(res);
    let mut points = Vec::with_capacity(res * inner.len());
    let mut weights = Vec::with_capacity(res * inner.len());
    for (theta, wt) in gl.on(theta0, theta1) {
        let (s, c) = theta.sin_cos();
        let jac = wt * s.powi(m as i32 - 1);
        for (p, wp) in inner.points.iter().zip(&inner.weights) {
            let mut x: Vec<f64> = p.iter().map(|v| s * v).collect();
            x.push(c);
            points.push(x);
            weights.push(jac * wp);
        }
    }
    SphereRule {
        ambient: m + 1,
        points,
        weights,
    }
}

/// Upper unit hemisphere `{|y| = 1, y^n ≥ 0}` in `ℝⁿ`, polar angle measured from `e_n`.
pub fn hemisphere_rule(n: usize, res: usize) -> SphereRule {
    assert!(n >= 2, "hemisphere needs n >= 2");
    polar_product(n - 1, res.max(2), 0.0, 0.5 * PI)
}

/// Unit equator `{|y| = 1, y^n = 0}` in `ℝⁿ`.
pub fn equator_rule(n: usize, res: usize) -> SphereRule {
    assert!(n >= 2, "equator needs n >= 2");
    let base = sphere_rule(n - 2, res);
    let points = base
        .points
        .into_iter()
        .map(|mut p| {
            p.push(0.0);
            p
        })
        .collect();
    SphereRule {
        ambient: n,
        points,
        weights: base.weights,
    }
}
