//! Harmonic-oscillator eigenfunctions and Franck–Condon factors between
//! scaled and displaced oscillators.

use crate::linalg::Mat;

const RESCALE: f64 = 1e150;
const FLUSH: f64 = 1e-200;

/// Normalized Hermite functions `ψ_k(ξ)`, `k = 0..n`, at the points `xi`.
///
/// Returns an `xi.len() × n` matrix. The three-term recurrence carries a
/// separate exponent so that high orders far from the origin do not
/// underflow through `exp(-ξ²/2)`.
pub fn hermite_functions(n: usize, xi: &[f64]) -> Mat<f64> {
    let mut out = Mat::zeros(xi.len(), n);
    if n == 0 {
        return out;
    }
    let norm0 = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in xi.iter().enumerate() {
        let mut log_scale = -0.5 * x * x;
        let mut prev = 0.0;
        let mut cur = norm0;
        out[(i, 0)] = cur * log_scale.exp();
        for k in 1..n {
            let kf = k as f64;
            let next = (2.0 / kf).sqrt() * x * cur - ((kf - 1.0) / kf).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
            }
            out[(i, k)] = cur * log_scale.exp();
        }
    }
    out
}

/// Oscillator parameters used by the overlap recursion.
#[derive(Debug, Clone, Copy)]
struct Recursion {
    u: f64,
    v: f64,
    gamma: f64,
    s00: f64,
}

impl Recursion {
    /// Oscillator 1 has length `a1` centred at 0, oscillator 2 length `a2` centred at `d`.
    fn new(a1: f64, a2: f64, d: f64) -> Recursion {
        let rho = a1 / a2;
        let s2 = a1 * a1 + a2 * a2;
        Recursion {
            u: 0.5 * (rho + 1.0 / rho),
            v: 0.5 * (rho - 1.0 / rho),
            gamma: d / (std::f64::consts::SQRT_2 * a1),
            s00: (2.0 * a1 * a2 / s2).sqrt() * (-d * d / (2.0 * s2)).exp(),
        }
    }

    /// `S(m, 0)` for `m = 0..rows`.
    fn first_column(&self, rows: usize) -> Vec<f64> {
        let mut col = vec![0.0; rows];
        if rows == 0 {
            return col;
        }
        col[0] = self.s00;
        for m in 0..rows - 1 {
            let prev = if m > 0 { col[m - 1] } else { 0.0 };
            let mf = m as f64;
            col[m + 1] = flush((self.v * mf.sqrt() * prev - self.gamma * col[m]) / (self.u * (mf + 1.0).sqrt()));
        }
        col
    }

    /// Column `n + 1` from column `n`; the result is one row shorter.
    fn next_column(&self, cur: &[f64], n: usize, next: &mut Vec<f64>) {
        let rows = cur.len() - 1;
        next.clear();
        let inv = 1.0 / ((n + 1) as f64).sqrt();
        for m in 0..rows {
            let mf = m as f64;
            let up = if m > 0 { cur[m - 1] } else { 0.0 };
            let val = self.u * mf.sqrt() * up - self.v * (mf + 1.0).sqrt() * cur[m + 1] + self.gamma * cur[m];
            next.push(flush(val * inv));
        }
    }
}

#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH {
        0.0
    } else {
        x
    }
}

/// Overlap matrix `S(m, n) = ⟨m; a2, d | n; a1, 0⟩`, `rows × cols`.
///
/// Rows index oscillator 2 (length `a2`, centre `d`), columns oscillator 1.
/// Each column follows from the previous one by a two-term ladder relation,
/// so no factorials appear and the cost is `O((rows + cols)·cols)`.
pub fn harmonic_overlaps(a1: f64, a2: f64, d: f64, rows: usize, cols: usize) -> Mat<f64> {
    let rec = Recursion::new(a1, a2, d);
    let mut out = Mat::zeros(rows, cols);
    if cols == 0 || rows == 0 {
        return out;
    }
    let mut cur = rec.first_column(rows + cols);
    let mut next = Vec::with_capacity(cur.len());
    for n in 0..cols {
        out.col_mut(n).copy_from_slice(&cur[..rows]);
        if n + 1 < cols {
            rec.next_column(&cur, n, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    out
}

/// Diagonal `S(n, n)` for `n = 0..count`, in `O(count)` memory.
pub fn harmonic_overlap_diagonal(a1: f64, a2: f64, d: f64, count: usize) -> Vec<f64> {
    let rec = Recursion::new(a1, a2, d);
    let mut diag = Vec::with_capacity(count);
    if count == 0 {
        return diag;
    }
    let mut cur = rec.first_column(2 * count + 1);
    let mut next = Vec::with_capacity(cur.len());
    for n in 0..count {
        diag.push(cur[n]);
        if n + 1 < count {
            rec.next_column(&cur, n, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    diag
}
