//! Closed-form or sampled descriptions of the analytic functions that make up
//! an operator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::mobius;

type C64 = Complex64;

/// An analytic function, evaluable at points of its domain.
///
/// Complex numbers serialize as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    /// `Σ num_k z^k / Σ den_k z^k`, coefficients in ascending powers.
    Rational { num: Vec<C64>, den: Vec<C64> },
    /// `exp(τ(z − 1)/(z + 1))`, the singular inner factor on the disk.
    SingularInner { tau: f64 },
    /// `exp(−ε w)` on the half-plane.
    HalfPlaneDelay { epsilon: f64 },
    /// `(a z + b)/(c z + d)`.
    Mobius { a: C64, b: C64, c: C64, d: C64 },
    Product(Vec<FunctionDescriptor>),
    /// `outer(inner(z))`.
    Compose { outer: Box<FunctionDescriptor>, inner: Box<FunctionDescriptor> },
    /// Values at the nodes of an accompanying grid; no closed form.
    Samples { values: Vec<C64> },
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn horner(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(c(0.0), |acc, a| acc * z + a)
}

impl FunctionDescriptor {
    pub fn constant(v: C64) -> FunctionDescriptor {
        FunctionDescriptor::Rational { num: vec![v], den: vec![c(1.0)] }
    }

    pub fn identity() -> FunctionDescriptor {
        FunctionDescriptor::Rational { num: vec![c(0.0), c(1.0)], den: vec![c(1.0)] }
    }

    /// The involution `m(z) = (1 − z)/(1 + z)`.
    pub fn cayley() -> FunctionDescriptor {
        FunctionDescriptor::Mobius { a: c(-1.0), b: c(1.0), c: c(1.0), d: c(1.0) }
    }

    pub fn polynomial(coeffs: Vec<C64>) -> FunctionDescriptor {
        FunctionDescriptor::Rational { num: coeffs, den: vec![c(1.0)] }
    }

    pub fn compose(outer: FunctionDescriptor, inner: FunctionDescriptor) -> FunctionDescriptor {
        FunctionDescriptor::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    pub fn is_sampled(&self) -> bool {
        match self {
            FunctionDescriptor::Samples { .. } => true,
            FunctionDescriptor::Product(fs) => fs.iter().any(|f| f.is_sampled()),
            FunctionDescriptor::Compose { outer, inner } => outer.is_sampled() || inner.is_sampled(),
            _ => false,
        }
    }

    /// Value at `z`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let v = match self {
            FunctionDescriptor::Rational { num, den } => {
                let d = horner(den, z);
                if d.norm() == 0.0 {
                    return Err(Error::Domain(format!("rational function has a pole at {z}")));
                }
                horner(num, z) / d
            }
            FunctionDescriptor::SingularInner { tau } => {
                if (z + 1.0).norm() == 0.0 {
                    return Err(Error::Domain("singular inner factor is undefined at z = -1".into()));
                }
                (-tau * mobius(z)).exp()
            }
            FunctionDescriptor::HalfPlaneDelay { epsilon } => (-epsilon * z).exp(),
            FunctionDescriptor::Mobius { a, b, c: cc, d } => {
                let den = cc * z + d;
                if den.norm() == 0.0 {
                    return Err(Error::Domain(format!("Möbius map has a pole at {z}")));
                }
                (a * z + b) / den
            }
            FunctionDescriptor::Product(fs) => {
                let mut acc = c(1.0);
                for f in fs {
                    acc *= f.eval(z)?;
                }
                acc
            }
            FunctionDescriptor::Compose { outer, inner } => outer.eval(inner.eval(z)?)?,
            FunctionDescriptor::Samples { .. } => {
                return Err(Error::InvalidOperator("sampled function has no closed form to evaluate".into()))
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Domain(format!("function value at {z} is not finite")));
        }
        Ok(v)
    }

    pub fn eval_many(&self, z: &[C64]) -> Result<Vec<C64>> {
        z.iter().map(|&zi| self.eval(zi)).collect()
    }

    /// Values at grid nodes: stored samples, or closed-form evaluation at `points`.
    pub fn values_at(&self, points: &[C64]) -> Result<Vec<C64>> {
        match self {
            FunctionDescriptor::Samples { values } => {
                if values.len() != points.len() {
                    return Err(Error::IncompatibleGrid(format!(
                        "{} samples for {} grid nodes",
                        values.len(),
                        points.len()
                    )));
                }
                Ok(values.clone())
            }
            _ => self.eval_many(points),
        }
    }

    /// Poles and zeros of a rational descriptor.
    pub fn rational_poles_and_zeros(&self) -> Option<(Vec<C64>, Vec<C64>)> {
        match self {
            FunctionDescriptor::Rational { num, den } => Some((polynomial_roots(den), polynomial_roots(num))),
            _ => None,
        }
    }
}

/// Roots of `Σ p_k z^k` as eigenvalues of the companion matrix.
pub fn polynomial_roots(p: &[C64]) -> Vec<C64> {
    let mut deg = p.len();
    while deg > 0 && p[deg - 1].norm() == 0.0 {
        deg -= 1;
    }
    if deg <= 1 {
        return Vec::new();
    }
    let n = deg - 1;
    let lead = p[n];
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = c(1.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p[i] / lead;
    }
    let schur = m.schur();
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_uses_kind_and_data() {
        let d = FunctionDescriptor::compose(FunctionDescriptor::SingularInner { tau: 0.5 }, FunctionDescriptor::cayley());
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.starts_with(r#"{"kind":"compose","data":{"outer":{"kind":"singular_inner""#), "{text}");
        let back: FunctionDescriptor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let r: FunctionDescriptor = serde_json::from_str(r#"{"kind":"rational","data":{"num":[[1,0],[-0.5,0]],"den":[[1,0]]}}"#).unwrap();
        assert!((r.eval(c(2.0)).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn singular_inner_composed_with_cayley_is_a_delay() {
        let d = FunctionDescriptor::compose(FunctionDescriptor::SingularInner { tau: 0.5 }, FunctionDescriptor::cayley());
        for w in [c(0.3), C64::new(0.0, 7.0), C64::new(2.0, -1.0)] {
            assert!((d.eval(w).unwrap() - (-0.5 * w).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn evaluation_errors() {
        let r = FunctionDescriptor::Rational { num: vec![c(1.0)], den: vec![c(1.0), c(1.0)] };
        assert!(r.eval(c(-1.0)).is_err());
        let s = FunctionDescriptor::Samples { values: vec![c(1.0)] };
        assert!(s.eval(c(0.0)).is_err());
        assert!(s.values_at(&[c(0.0), c(1.0)]).is_err());
    }

    #[test]
    fn roots_of_a_cubic() {
        // (z − 2)(z + 0.5)(z − i) expanded.
        let roots_in = [c(2.0), c(-0.5), C64::new(0.0, 1.0)];
        let mut p = vec![c(1.0)];
        for r in roots_in {
            let mut next = vec![c(0.0); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            p = next;
        }
        let found = polynomial_roots(&p);
        assert_eq!(found.len(), 3);
        for r in roots_in {
            assert!(found.iter().any(|f| (f - r).norm() < 1e-10), "{r} not in {found:?}");
        }
    }
}
