//! Laguerre polynomials and the orthonormal Laguerre functions of `L²(ℝ₊)`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{csv_io, inner_product, read_triples, CausalSignal, TimeGrid};
use crate::transforms::{fourier_coeffs, h_transform, FourierCoefficients, FrequencyGrid};

type C64 = Complex64;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 512;

/// `L_n(t)` by the three-term recurrence.
pub fn laguerre_poly(n: usize, t: &[f64]) -> Result<Vec<f64>> {
    if n > MAX_DEGREE {
        return Err(Error::Domain(format!("Laguerre degree {n} exceeds {MAX_DEGREE}")));
    }
    Ok(t.iter()
        .map(|&x| {
            let (mut prev, mut cur) = (1.0, 1.0 - x);
            if n == 0 {
                return prev;
            }
            for k in 1..n {
                let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
                prev = cur;
                cur = next;
            }
            cur
        })
        .collect())
}

/// Iterates the sampled basis functions `(−1)^n √2 e^{−t} L_n(2t)` for
/// `n = 0, 1, …` on a grid, one recurrence step at a time.
struct BasisIter {
    times: Vec<f64>,
    weight: Vec<f64>,
    prev: Vec<f64>,
    cur: Vec<f64>,
    n: usize,
}

impl BasisIter {
    fn new(grid: &TimeGrid) -> BasisIter {
        let times: Vec<f64> = grid.times().collect();
        let weight = times.iter().map(|t| std::f64::consts::SQRT_2 * (-t).exp()).collect();
        let prev = vec![0.0; times.len()];
        let cur = vec![1.0; times.len()];
        BasisIter { times, weight, prev, cur, n: 0 }
    }
}

impl Iterator for BasisIter {
    type Item = Vec<C64>;

    fn next(&mut self) -> Option<Vec<C64>> {
        let sign = if self.n % 2 == 0 { 1.0 } else { -1.0 };
        let out = self.cur.iter().zip(&self.weight).map(|(l, w)| C64::new(sign * w * l, 0.0)).collect();
        let k = self.n as f64;
        for i in 0..self.times.len() {
            let x = 2.0 * self.times[i];
            let next = ((2.0 * k + 1.0 - x) * self.cur[i] - k * self.prev[i]) / (k + 1.0);
            self.prev[i] = self.cur[i];
            self.cur[i] = next;
        }
        self.n += 1;
        Some(out)
    }
}

/// The `n`-th orthonormal basis function `(−1)^n √2 e^{−t} L_n(2t)`.
pub fn basis_function(n: usize, grid: TimeGrid) -> Result<CausalSignal> {
    if n > MAX_DEGREE {
        return Err(Error::Domain(format!("basis index {n} exceeds {MAX_DEGREE}")));
    }
    let values = BasisIter::new(&grid).nth(n).unwrap();
    CausalSignal::new(grid, values)
}

/// The first `m` basis functions.
pub fn basis_functions(m: usize, grid: TimeGrid) -> Result<Vec<CausalSignal>> {
    if m > MAX_DEGREE + 1 {
        return Err(Error::Domain(format!("{m} basis functions requested, at most {}", MAX_DEGREE + 1)));
    }
    BasisIter::new(&grid).take(m).map(|v| CausalSignal::new(grid, v)).collect()
}

/// Truncated coefficient sequence `a_0, …, a_{M−1}` of a signal in the
/// Laguerre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreExpansion {
    pub coeffs: Vec<C64>,
}

impl LaguerreExpansion {
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn as_coefficients(&self) -> FourierCoefficients {
        FourierCoefficients { coeffs: self.coeffs.clone() }
    }

    /// Time signal `Σ a_n · basis_n` on a grid.
    pub fn synthesize(&self, grid: TimeGrid) -> Result<CausalSignal> {
        let mut acc = vec![C64::new(0.0, 0.0); grid.n_samples()];
        for (a, b) in self.coeffs.iter().zip(BasisIter::new(&grid)) {
            for (x, v) in acc.iter_mut().zip(b) {
                *x += a * v;
            }
        }
        CausalSignal::new(grid, acc)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "re", "im"]).map_err(csv_io)?;
        for (n, c) in self.coeffs.iter().enumerate() {
            w.write_record([n.to_string(), c.re.to_string(), c.im.to_string()]).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<LaguerreExpansion> {
        let rows = read_triples(input, "n")?;
        let mut coeffs = Vec::with_capacity(rows.len());
        for (k, (n, re, im)) in rows.into_iter().enumerate() {
            if n != k as f64 {
                return Err(Error::Parse { line: k + 2, message: format!("expected index {k}, got {n}") });
            }
            coeffs.push(C64::new(re, im));
        }
        Ok(LaguerreExpansion { coeffs })
    }
}

/// `a_n = ⟨f, basis_n⟩` for `n < m`, by time-domain quadrature.
pub fn d_map(f: &CausalSignal, m: usize) -> Result<LaguerreExpansion> {
    if m > MAX_DEGREE {
        return Err(Error::Domain(format!("at most {MAX_DEGREE} coefficients are supported, got {m}")));
    }
    let grid = *f.grid();
    let coeffs = BasisIter::new(&grid)
        .take(m)
        .map(|b| inner_product(f, &CausalSignal::new(grid, b)?))
        .collect::<Result<Vec<C64>>>()?;
    Ok(LaguerreExpansion { coeffs })
}

/// The same coefficients computed as Fourier coefficients of `H f` on a
/// uniform circle grid of `n_circle` nodes.
pub fn d_map_via_circle(f: &CausalSignal, m: usize, n_circle: usize) -> Result<LaguerreExpansion> {
    let g = h_transform(f, &FrequencyGrid::UniformCircle { n: n_circle })?;
    Ok(LaguerreExpansion { coeffs: fourier_coeffs(&g, m)?.coeffs })
}
