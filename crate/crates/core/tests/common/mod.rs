//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_bp::decimation::CicConfig;

/// Cascade of `order` length-`R*M` running sums at the input rate, then
/// every `R`-th sample starting at `R - 1`.
pub fn boxcar_oracle(bits: &[i8], cfg: &CicConfig) -> Vec<i64> {
    let len = (cfg.rate_change * cfg.differential_delay) as usize;
    let mut x: Vec<i64> = bits.iter().map(|&b| b as i64).collect();
    for _ in 0..cfg.order {
        let mut y = vec![0i64; x.len()];
        let mut window = 0i64;
        for n in 0..x.len() {
            window += x[n];
            if n >= len {
                window -= x[n - len];
            }
            y[n] = window;
        }
        x = y;
    }
    let r = cfg.rate_change as usize;
    x.into_iter().skip(r - 1).step_by(r).collect()
}

pub fn random_bits(n: usize, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect()
}

/// Centre deflection coefficient `w_c D / (p a^4)` of a clamped unit square
/// from the 13-point biharmonic stencil on an `(n+1) x (n+1)` grid. Clamped
/// edges use mirrored ghost nodes (`w_-1 = w_1`), which only adds to the
/// diagonal, so the system stays symmetric positive definite and is solved
/// by banded Cholesky.
pub fn fd_clamped_alpha(n: usize) -> f64 {
    let m = n - 1; // interior nodes per side
    let h = 1.0 / n as f64;
    let size = m * m;
    let bw = 2 * m; // lower bandwidth
    let idx = |i: usize, j: usize| i * m + j;
    // band[r][d] = A[r][r - d]
    let mut band = vec![vec![0.0f64; bw + 1]; size];
    let mut add = |r: usize, c: usize, v: f64| {
        if c <= r {
            band[r][r - c] += v;
        }
    };
    for i in 0..m {
        for j in 0..m {
            let r = idx(i, j);
            let mut diag = 20.0;
            // second neighbours along each axis; off-grid ones mirror onto
            // the node itself
            for (di, dj) in [(-2i64, 0i64), (2, 0), (0, -2), (0, 2)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii == -2 || jj == -2 || ii == m as i64 + 1 || jj == m as i64 + 1 {
                    diag += 1.0;
                } else if ii >= 0 && jj >= 0 && ii < m as i64 && jj < m as i64 {
                    add(r, idx(ii as usize, jj as usize), 1.0);
                }
            }
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii >= 0 && jj >= 0 && ii < m as i64 && jj < m as i64 {
                    add(r, idx(ii as usize, jj as usize), -8.0);
                }
            }
            for (di, dj) in [(-1i64, -1i64), (-1, 1), (1, -1), (1, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii >= 0 && jj >= 0 && ii < m as i64 && jj < m as i64 {
                    add(r, idx(ii as usize, jj as usize), 2.0);
                }
            }
            add(r, r, diag);
        }
    }
    // banded Cholesky, L stored in place
    for r in 0..size {
        for d in (1..=bw.min(r)).rev() {
            let c = r - d;
            let mut s = band[r][d];
            for k in (d + 1)..=bw.min(r) {
                let kk = r - k; // column index shared by rows r and c
                if c - kk <= bw {
                    s -= band[r][k] * band[c][c - kk];
                }
            }
            band[r][d] = s / band[c][0];
        }
        let s = band[r][0] - band[r][1..=bw.min(r)].iter().map(|v| v * v).sum::<f64>();
        band[r][0] = s.sqrt();
    }
    // L y = b with b = h^4 (unit load, unit rigidity), then L^T w = y
    let mut y = vec![h.powi(4); size];
    for r in 0..size {
        let mut s = y[r];
        for k in 1..=bw.min(r) {
            s -= band[r][k] * y[r - k];
        }
        y[r] = s / band[r][0];
    }
    for r in (0..size).rev() {
        let mut s = y[r];
        for k in 1..=bw.min(size - 1 - r) {
            s -= band[r + k][k] * y[r + k];
        }
        y[r] = s / band[r][0];
    }
    y[idx(m / 2, m / 2)]
}
