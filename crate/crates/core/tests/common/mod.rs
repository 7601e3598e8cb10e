#![allow(dead_code)]

use mimo_assoc::channel::{drop_users, square_layout};
use mimo_assoc::numeric::stream_rng;
use mimo_assoc::{ChannelStats, LinearProgram, NetworkScenario};
use rand::Rng;

/// Solves `M z = r` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        let scale = m[piv][col].abs();
        if scale < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[row][c] -= f * m[col][c];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * z[c]).sum();
        z[row] = (r[row] - s) / m[row][row];
    }
    Some(z)
}

fn next_subset(idx: &mut [usize], total: usize) -> bool {
    let n = idx.len();
    for i in (0..n).rev() {
        if idx[i] < total - n + i {
            idx[i] += 1;
            for j in i + 1..n {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum of `c^T x` over `A x <= b, x >= 0` by enumerating every vertex:
/// each choice of `n` active constraints among the `m + n` rows and bounds.
/// `None` when no vertex is feasible. Only valid for bounded programs.
pub fn brute_force_min(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let total = m + n;
    let constraint = |j: usize| -> (Vec<f64>, f64) {
        if j < m {
            (lp.rows[j].clone(), lp.rhs[j])
        } else {
            let mut e = vec![0.0; n];
            e[j - m] = -1.0;
            (e, 0.0)
        }
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let (rows, rhs): (Vec<_>, Vec<_>) = idx.iter().map(|&j| constraint(j)).unzip();
        if let Some(x) = solve_dense(rows, rhs) {
            let feasible = x.iter().all(|&v| v >= -1e-9 * (1.0 + v.abs()))
                && (0..m).all(|j| {
                    let act: f64 = lp.rows[j].iter().zip(&x).map(|(a, x)| a * x).sum();
                    let mag: f64 = lp.rows[j].iter().zip(&x).map(|(a, x)| (a * x).abs()).sum::<f64>() + lp.rhs[j].abs();
                    act - lp.rhs[j] <= 1e-9 * (1.0 + mag)
                });
            if feasible {
                let obj: f64 = lp.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
        if !next_subset(&mut idx, total) {
            break;
        }
    }
    best
}

/// A bounded random LP: entries in `[-1, 1]`, a cap row `sum x <= 10`, and a
/// right-hand side built around a nonnegative point so most draws are
/// feasible; some are infeasible because of the negative slack range.
pub fn random_bounded_lp(seed: u64, n: usize, m: usize) -> LinearProgram {
    let mut rng = stream_rng(seed, 0);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut rhs: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&x0).map(|(a, x)| a * x).sum::<f64>() + rng.random_range(-0.3..1.0))
        .collect();
    rows.push(vec![1.0; n]);
    rhs.push(10.0);
    let cost = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    LinearProgram::new(cost, rows, rhs).unwrap()
}

/// A default-parameter drop with `k` users.
pub fn default_drop(seed: u64, k: usize, m: usize) -> (NetworkScenario, ChannelStats) {
    let mut rng = stream_rng(seed, 0);
    let bs = square_layout(1.0);
    let users = drop_users(&mut rng, &bs, k, 0.01);
    let s = NetworkScenario::with_defaults(m, bs, users);
    let st = ChannelStats::draw(&s, &mut rng).unwrap();
    (s, st)
}
