//! Quadrature kernels on uniform grids.
//!
//! Two rules live here. `gregory_integral` is the composite trapezoid rule
//! with Gregory end corrections, used for plain integrals of smooth sampled
//! data. `ExpKernel` integrates sampled data against `exp(-s t)` for complex
//! `s` by interpolating the samples with piecewise quartics and integrating
//! the exponential exactly on each panel (a Filon-type rule), so accuracy does
//! not degrade when `Im s * dt` is of order one.

use num_complex::Complex64;
use rustfft::FftPlanner;

type C64 = Complex64;

/// Highest number of corrected end nodes.
const GREGORY_ORDER: usize = 8;

/// Degree of the interpolating polynomial on each exponential-kernel panel.
const PANEL: usize = 4;

/// Bernoulli numbers B_2, B_4, B_6, B_8.
const BERNOULLI_EVEN: [f64; 4] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];

/// End corrections `c_0..c_{q-1}` added to the trapezoid weights at each end.
///
/// They make the corrected rule exact for polynomials of degree `< q`; the
/// conditions follow from the Euler-Maclaurin endpoint terms:
/// `sum_i c_i i^k = B_{k+1}/(k+1)` for odd `k`, and `0` for even `k`.
pub(crate) fn gregory_corrections(q: usize) -> Vec<f64> {
    assert!(q <= GREGORY_ORDER);
    if q == 0 {
        return Vec::new();
    }
    let mut a = vec![vec![0.0f64; q + 1]; q];
    for (k, row) in a.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().take(q).enumerate() {
            *cell = (i as f64).powi(k as i32);
        }
        row[q] = if k % 2 == 1 { BERNOULLI_EVEN[k / 2] / (k as f64 + 1.0) } else { 0.0 };
    }
    solve_dense(a)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..=n {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Quadrature weights (in units of the step) for `n` equispaced nodes.
pub(crate) fn gregory_weights(n: usize) -> Vec<f64> {
    match n {
        0 | 1 => return vec![0.0; n],
        _ => {}
    }
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    let q = GREGORY_ORDER.min(n / 2);
    for (i, c) in gregory_corrections(q).into_iter().enumerate() {
        w[i] += c;
        w[n - 1 - i] += c;
    }
    w
}

/// Integral of equispaced samples with step `h`.
pub(crate) fn gregory_integral(values: &[C64], h: f64) -> C64 {
    let w = gregory_weights(values.len());
    values.iter().zip(&w).map(|(v, w)| v * *w).sum::<C64>() * h
}


/// First node from which a sampled causal signal should be integrated.
///
/// Leading exact zeros are skipped. If the first nonzero sample looks like the
/// top of a jump (large compared to the next increment) integration starts
/// there. If it is negligible next to that increment it is itself the
/// zero the signal rises from. Otherwise the signal is taken to rise
/// continuously from the preceding zero sample, which is then included.
pub(crate) fn support_start<T: Copy + Into<C64>>(values: &[T]) -> usize {
    let zero = C64::new(0.0, 0.0);
    let Some(d) = values.iter().position(|v| (*v).into() != zero) else {
        return values.len();
    };
    if d == 0 {
        return 0;
    }
    if d + 1 >= values.len() {
        return d - 1;
    }
    let head = values[d].into().norm();
    let step = (values[d + 1].into() - values[d].into()).norm();
    if head > 4.0 * step || head < 1e-6 * step {
        d
    } else {
        d - 1
    }
}

/// Monomial coefficients of the Lagrange basis on nodes `0..=p`, expressed in
/// the centred variable `v = x - p/2`. Entry `[i][j]` multiplies `v^j` in `l_i`.
fn lagrange_centered(p: usize) -> Vec<Vec<f64>> {
    let c = p as f64 / 2.0;
    let nodes: Vec<f64> = (0..=p).map(|k| k as f64 - c).collect();
    (0..=p)
        .map(|i| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (k, &vk) in nodes.iter().enumerate() {
                if k == i {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (j, &a) in poly.iter().enumerate() {
                    next[j + 1] += a;
                    next[j] -= a * vk;
                }
                poly = next;
                denom *= nodes[i] - vk;
            }
            poly.iter().map(|a| a / denom).collect()
        })
        .collect()
}

/// `M_j = int_{x0}^{x1} (x - c)^j exp(-z x) dx` for `j = 0..=p`.
fn exp_moments(z: C64, c: f64, x0: f64, x1: f64, p: usize) -> [C64; PANEL + 1] {
    let mut m = [C64::new(0.0, 0.0); PANEL + 1];
    let v0 = x0 - c;
    let v1 = x1 - c;
    if z.norm() < 1.5 {
        // Power series of exp(-z (x - c)) around the panel centre.
        let pre = (-z * c).exp();
        let vmax = v0.abs().max(v1.abs());
        for (j, slot) in m.iter_mut().enumerate().take(p + 1) {
            let mut term = C64::new(1.0, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..80 {
                let e = (j + k + 1) as i32;
                let seg = (v1.powi(e) - v0.powi(e)) / e as f64;
                acc += term * seg;
                // Bound on this and every later term, independent of the
                // cancellations that zero out terms on symmetric panels.
                let bound = term.norm() * vmax.powi(e) / e as f64;
                if k > 4 && bound <= 1e-18 * acc.norm().max(1e-300) {
                    break;
                }
                term *= -z / (k as f64 + 1.0);
            }
            *slot = pre * acc;
        }
    } else {
        let e0 = (-z * x0).exp();
        let e1 = (-z * x1).exp();
        let inv = 1.0 / z;
        m[0] = (e0 - e1) * inv;
        let (mut p0, mut p1) = (1.0, 1.0);
        for j in 1..=p {
            p0 *= v0;
            p1 *= v1;
            m[j] = (e0 * p0 - e1 * p1) * inv + m[j - 1] * (j as f64) * inv;
        }
    }
    m
}

/// Weights `W_i(z) = int_{x0}^{x1} l_i(x) exp(-z x) dx` on one panel.
fn panel_weights(rule: &[Vec<f64>], z: C64, x0: f64, x1: f64) -> [C64; PANEL + 1] {
    let p = rule.len() - 1;
    let m = exp_moments(z, p as f64 / 2.0, x0, x1, p);
    let mut w = [C64::new(0.0, 0.0); PANEL + 1];
    for (i, coeffs) in rule.iter().enumerate() {
        w[i] = coeffs.iter().zip(m.iter()).map(|(a, mj)| mj * *a).sum();
    }
    w
}

/// Integrates uniformly sampled data against `exp(-s t)`.
///
/// The signal is integrated from its support start (see [`support_start`])
/// to the last sample. Complete panels of `PANEL` intervals are summed with a
/// Horner recurrence in `exp(-s PANEL h)`; leftover intervals at the end are
/// covered by a final panel anchored on the last `PANEL + 1` samples.
pub(crate) struct ExpKernel<'a> {
    values: &'a [C64],
    h: f64,
    start: usize,
    panels: usize,
    rule: Vec<Vec<f64>>,
    tail: Option<(usize, f64)>,
}

impl<'a> ExpKernel<'a> {
    pub(crate) fn new(values: &'a [C64], h: f64) -> Self {
        let start = support_start(values);
        let count = values.len() - start;
        let (degree, panels, tail) = if count >= PANEL + 1 {
            let intervals = count - 1;
            let panels = intervals / PANEL;
            let rem = intervals - panels * PANEL;
            let tail = (rem > 0).then(|| (values.len() - 1 - PANEL, (PANEL - rem) as f64));
            (PANEL, panels, tail)
        } else if count >= 2 {
            (count - 1, 1, None)
        } else {
            (0, 0, None)
        };
        ExpKernel { values, h, start, panels, rule: lagrange_centered(degree), tail }
    }

    fn degree(&self) -> usize {
        self.rule.len() - 1
    }

    fn is_empty(&self) -> bool {
        self.panels == 0
    }

    /// `int_0^T f(t) exp(-s t) dt`.
    pub(crate) fn eval(&self, s: C64) -> C64 {
        if self.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let p = self.degree();
        let h = self.h;
        let q = (-s * (p as f64 * h)).exp();
        let mut acc = [C64::new(0.0, 0.0); PANEL + 1];
        let base = &self.values[self.start..];
        for m in (0..self.panels).rev() {
            let chunk = &base[m * p..m * p + p + 1];
            for i in 0..=p {
                acc[i] = acc[i] * q + chunk[i];
            }
        }
        let w = panel_weights(&self.rule, s * h, 0.0, p as f64);
        let body: C64 = (0..=p).map(|i| w[i] * acc[i]).sum();
        let mut total = body * (-s * (self.start as f64 * h)).exp() * h;
        total += self.tail_term(s);
        total
    }

    fn tail_term(&self, s: C64) -> C64 {
        let Some((anchor, x0)) = self.tail else {
            return C64::new(0.0, 0.0);
        };
        let h = self.h;
        let w = panel_weights(&self.rule, s * h, x0, PANEL as f64);
        let local: C64 = (0..=PANEL).map(|i| w[i] * self.values[anchor + i]).sum();
        local * (-s * (anchor as f64 * h)).exp() * h
    }

    /// Evaluates at many exponents; uniform purely imaginary exponent sets go
    /// through a chirp-z evaluation of the panel sums.
    pub(crate) fn eval_many(&self, s: &[C64]) -> Vec<C64> {
        if self.is_empty() {
            return vec![C64::new(0.0, 0.0); s.len()];
        }
        match uniform_imaginary(s) {
            Some((y0, dy)) => self.eval_uniform_axis(y0, dy, s.len()),
            None => s.iter().map(|&si| self.eval(si)).collect(),
        }
    }

    /// Evaluates at `s_j = i (y0 + j dy)`, `j = 0..n`.
    pub(crate) fn eval_uniform_axis(&self, y0: f64, dy: f64, n: usize) -> Vec<C64> {
        let p = self.degree();
        let h = self.h;
        let step = p as f64 * h;
        let base = &self.values[self.start..];
        let sums: Vec<Vec<C64>> = (0..=p)
            .map(|i| {
                let x: Vec<C64> = (0..self.panels).map(|m| base[m * p + i]).collect();
                chirp_sum(&x, -y0 * step, -dy * step, n)
            })
            .collect();
        let t0 = self.start as f64 * h;
        (0..n)
            .map(|j| {
                let y = y0 + j as f64 * dy;
                let s = C64::new(0.0, y);
                let w = panel_weights(&self.rule, s * h, 0.0, p as f64);
                let body: C64 = (0..=p).map(|i| w[i] * sums[i][j]).sum();
                body * C64::from_polar(h, -y * t0) + self.tail_term(s)
            })
            .collect()
    }
}

/// Detects `s_j = i (y0 + j dy)` to rounding accuracy.
fn uniform_imaginary(s: &[C64]) -> Option<(f64, f64)> {
    let n = s.len();
    if n < 64 {
        return None;
    }
    let y0 = s[0].im;
    let dy = (s[n - 1].im - y0) / (n - 1) as f64;
    if dy == 0.0 {
        return None;
    }
    let tol = 1e-12;
    let ok = s.iter().enumerate().all(|(j, v)| {
        let scale = 1.0 + v.norm();
        v.re.abs() <= tol * scale && (v.im - (y0 + j as f64 * dy)).abs() <= tol * scale
    });
    ok.then_some((y0, dy))
}

/// `out_k = sum_m x_m exp(i m (alpha + beta k))` for `k = 0..k_out`.
///
/// Bluestein's identity `m k = (m^2 + k^2 - (k - m)^2) / 2` turns the sum into
/// a convolution evaluated with FFTs.
pub(crate) fn chirp_sum(x: &[C64], alpha: f64, beta: f64, k_out: usize) -> Vec<C64> {
    let m_len = x.len();
    if m_len == 0 || k_out == 0 {
        return vec![C64::new(0.0, 0.0); k_out];
    }
    if m_len * k_out <= 4096 {
        return (0..k_out)
            .map(|k| {
                let ang = alpha + beta * k as f64;
                x.iter()
                    .enumerate()
                    .map(|(m, v)| v * C64::from_polar(1.0, ang * m as f64))
                    .sum()
            })
            .collect();
    }
    let chirp = |n: i64| C64::from_polar(1.0, 0.5 * beta * (n as f64) * (n as f64));
    let len = (m_len + k_out - 1).next_power_of_two();
    let mut a = vec![C64::new(0.0, 0.0); len];
    for (m, v) in x.iter().enumerate() {
        a[m] = v * C64::from_polar(1.0, alpha * m as f64) * chirp(m as i64);
    }
    let mut b = vec![C64::new(0.0, 0.0); len];
    for n in 0..k_out {
        b[n] = chirp(n as i64).conj();
    }
    for n in 1..m_len {
        b[len - n] = chirp(n as i64).conj();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= bi;
    }
    inv.process(&mut a);
    let scale = 1.0 / len as f64;
    (0..k_out).map(|k| a[k] * scale * chirp(k as i64)).collect()
}
