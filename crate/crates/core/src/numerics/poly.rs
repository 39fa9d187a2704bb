//! Real polynomials, their complex roots and inverse Laplace transforms of
//! proper rational functions by partial fractions.

use num_complex::Complex64;

/// Polynomial with real coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let out = (0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0)).collect();
        Poly::new(out)
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * k).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Taylor coefficients of the polynomial about `z0`, lowest order first.
    fn taylor(&self, z0: Complex64) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = self.0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let n = c.len();
        // Repeated synthetic division by (z - z0).
        for k in 0..n {
            for j in (k..n - 1).rev() {
                let upper = c[j + 1];
                c[j] += z0 * upper;
            }
        }
        c
    }

    /// All complex roots, by Aberth–Ehrlich iteration.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = *self.0.last().unwrap();
        let monic: Vec<f64> = self.0.iter().map(|c| c / lead).collect();
        let p = Poly(monic);
        let dp = p.derivative();
        // Cauchy bound for the initial circle.
        let radius = 1.0 + p.0[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
                Complex64::from_polar(radius, theta)
            })
            .collect();
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let pv = p.eval(z[i]);
                let dv = dp.eval(z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dv;
                let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
                let step = ratio / (1.0 - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        z
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }
}

/// One pole cluster of a partial-fraction expansion: the inverse transform
/// contributes `exp(pole·x) · Σ_k coeffs[k]·x^k`.
#[derive(Debug, Clone)]
struct PoleTerm {
    pole: Complex64,
    coeffs: Vec<Complex64>,
}

/// Inverse Laplace transform of `num(β)/den(β)` for a proper rational
/// function with real coefficients.
#[derive(Debug, Clone)]
pub struct RationalInverse {
    terms: Vec<PoleTerm>,
}

impl RationalInverse {
    /// Expands `num/den`. Roots of `den` closer than `cluster_tol` (relative)
    /// are merged into one pole of higher multiplicity.
    pub fn new(num: &Poly, den: &Poly, cluster_tol: f64) -> Self {
        assert!(num.degree() < den.degree(), "rational function must be proper");
        let lead = *den.0.last().unwrap();
        let raw = den.roots();

        let mut clusters: Vec<(Complex64, usize)> = Vec::new();
        for r in raw {
            match clusters.iter_mut().find(|(c, _)| (*c - r).norm() <= cluster_tol * (1.0 + c.norm())) {
                Some((c, m)) => {
                    *c = (*c * (*m as f64) + r) / (*m as f64 + 1.0);
                    *m += 1;
                }
                None => clusters.push((r, 1)),
            }
        }

        let terms = clusters
            .iter()
            .enumerate()
            .map(|(i, &(pole, mult))| {
                // g(β) = num(β) / (lead · Π_{j≠i} (β - r_j)^{m_j}); its Taylor
                // coefficients at the pole give the residues.
                let num_t = num.taylor(pole);
                let mut den_t = vec![Complex64::new(lead, 0.0)];
                for (j, &(other, m)) in clusters.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    for _ in 0..m {
                        // multiply by (β - other) = (pole - other) + (β - pole)
                        let mut next = vec![Complex64::new(0.0, 0.0); den_t.len() + 1];
                        for (k, c) in den_t.iter().enumerate() {
                            next[k] += c * (pole - other);
                            next[k + 1] += c;
                        }
                        den_t = next;
                    }
                }
                let g = series_div(&num_t, &den_t, mult);
                // Coefficient of x^{mult-1-k}/(mult-1-k)! is g_k.
                let mut coeffs = vec![Complex64::new(0.0, 0.0); mult];
                for (k, gk) in g.iter().enumerate() {
                    let p = mult - 1 - k;
                    coeffs[p] = gk / factorial(p);
                }
                PoleTerm { pole, coeffs }
            })
            .collect();
        RationalInverse { terms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_shifted(x, 0.0)
    }

    /// `exp(-shift·x)` times the inverse transform at `x`, evaluated without
    /// forming the unshifted exponentials.
    pub fn eval_shifted(&self, x: f64, shift: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let poly = t.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c);
                ((t.pole - shift) * x).exp() * poly
            })
            .sum::<Complex64>()
            .re
    }

    pub fn poles(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.terms.iter().map(|t| t.pole)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

// First `len` Taylor coefficients of a/b.
fn series_div(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = a.get(k).copied().unwrap_or_default();
        for (j, o) in out.iter().enumerate() {
            acc -= *o * b.get(k - j).copied().unwrap_or_default();
        }
        out.push(acc / b[0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        // (x-1)(x+2)(x-3) = x^3 - 2x^2 - 5x + 6
        let p = Poly::new(vec![6.0, -5.0, -2.0, 1.0]);
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_simple_poles() {
        // 1/((β-1)(β+1)) -> sinh(x)
        let inv = RationalInverse::new(&Poly::new(vec![1.0]), &Poly::new(vec![-1.0, 0.0, 1.0]), 1e-9);
        assert!((inv.eval(0.7) - 0.7f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn inverse_of_double_pole() {
        // 2/β^2 -> 2x
        let inv = RationalInverse::new(&Poly::new(vec![2.0]), &Poly::new(vec![0.0, 0.0, 1.0]), 1e-7);
        assert!((inv.eval(1.5) - 3.0).abs() < 1e-12);
        // (β+1)/β^2 -> 1 + x
        let inv = RationalInverse::new(&Poly::new(vec![1.0, 1.0]), &Poly::new(vec![0.0, 0.0, 1.0]), 1e-7);
        assert!((inv.eval(2.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_with_complex_poles() {
        // 1/(β^2 + 1) -> sin(x)
        let inv = RationalInverse::new(&Poly::new(vec![1.0]), &Poly::new(vec![1.0, 0.0, 1.0]), 1e-9);
        assert!((inv.eval(1.2) - 1.2f64.sin()).abs() < 1e-14);
    }
}
