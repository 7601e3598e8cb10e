//! Monte-Carlo estimator of the MRT downlink SINR built directly from
//! sampled channel vectors, used to cross-check the closed form in
//! [`crate::se::sinr_mrt`].
//!
//! For user `k` the estimator assembles
//!
//! ```text
//!                  sum_i rho_ik |E{h_ik^H w_ik}|^2
//! ----------------------------------------------------------------------
//! sum_i rho_ik Var{h_ik^H w_ik} + sum_i sum_{t != k} rho_it E{|h_ik^H w_it|^2} + sigma2
//! ```
//!
//! with every expectation replaced by a sample mean. The mean of
//! `h_ik^H w_ik` uses `e_ik^H w_ik` as a regression control variate: it has
//! zero mean because the estimation error is independent of the estimate,
//! and it carries most of the sampling noise when estimation is poor.
//! Samples are grouped into fixed-size batches with their own RNG stream, so
//! results do not depend on the thread count, and standard errors come from
//! the spread of the batch estimates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStats, NetworkScenario};
use crate::numeric::stream_rng;
use crate::se::PowerAllocation;
use crate::{Error, Result};

/// Draws per batch; each batch has its own RNG stream.
pub const BATCH_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub num_samples: usize,
    pub rng_seed: u64,
}

impl McConfig {
    pub fn new(num_samples: usize, rng_seed: u64) -> Result<Self> {
        if num_samples == 0 {
            return Err(Error::Domain("num_samples must be at least 1".into()));
        }
        Ok(Self { num_samples, rng_seed })
    }
}

/// One realization of every estimate and true channel, indexed `(bs, user)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub num_bs: usize,
    pub num_users: usize,
    pub num_antennas: usize,
    estimates: Vec<Complex64>,
    channels: Vec<Complex64>,
}

impl ChannelSample {
    fn offset(&self, bs: usize, user: usize) -> usize {
        (bs * self.num_users + user) * self.num_antennas
    }

    pub fn estimate(&self, bs: usize, user: usize) -> &[Complex64] {
        let o = self.offset(bs, user);
        &self.estimates[o..o + self.num_antennas]
    }

    pub fn channel(&self, bs: usize, user: usize) -> &[Complex64] {
        let o = self.offset(bs, user);
        &self.channels[o..o + self.num_antennas]
    }

    /// Estimation error `e = h_hat - h`.
    pub fn error(&self, bs: usize, user: usize) -> Vec<Complex64> {
        self.estimate(bs, user)
            .iter()
            .zip(self.channel(bs, user))
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// Fills `out` with i.i.d. `CN(0, variance)` entries.
fn fill_cn<R: Rng + ?Sized>(rng: &mut R, variance: f64, out: &mut [Complex64]) {
    let s = (0.5 * variance).sqrt();
    for z in out {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = Complex64::new(s * re, s * im);
    }
}

fn check_stats(stats: &ChannelStats, scenario: &NetworkScenario) -> Result<()> {
    let shape = (scenario.num_bs(), scenario.num_users());
    if stats.beta.shape() != shape || stats.gamma.shape() != shape {
        return Err(Error::Dimension(format!("channel stats are not {}x{}", shape.0, shape.1)));
    }
    Ok(())
}

/// Draws `h_hat ~ CN(0, gamma I)` and an independent error
/// `e ~ CN(0, (beta - gamma) I)` for every `(bs, user)`, and returns them
/// with the true channel `h = h_hat - e`.
pub fn sample_channel_pair<R: Rng + ?Sized>(
    stats: &ChannelStats,
    scenario: &NetworkScenario,
    rng: &mut R,
) -> Result<ChannelSample> {
    check_stats(stats, scenario)?;
    let (l, k, m) = (scenario.num_bs(), scenario.num_users(), scenario.num_antennas);
    let mut estimates = vec![Complex64::default(); l * k * m];
    let mut channels = vec![Complex64::default(); l * k * m];
    let mut err = vec![Complex64::default(); m];
    for i in 0..l {
        for t in 0..k {
            let o = (i * k + t) * m;
            let (b, g) = (stats.beta[(i, t)], stats.gamma[(i, t)]);
            fill_cn(rng, g, &mut estimates[o..o + m]);
            fill_cn(rng, (b - g).max(0.0), &mut err);
            for j in 0..m {
                channels[o + j] = estimates[o + j] - err[j];
            }
        }
    }
    Ok(ChannelSample {
        num_bs: l,
        num_users: k,
        num_antennas: m,
        estimates,
        channels,
    })
}

/// MRT precoder `h_hat / sqrt(M gamma)`, normalized by the average estimate
/// norm rather than the realized one.
pub fn mrt_precoder(estimate: &[Complex64], gamma: f64, num_antennas: usize) -> Result<Vec<Complex64>> {
    if !(gamma > 0.0) || num_antennas == 0 {
        return Err(Error::Domain(format!("MRT needs gamma > 0 and M >= 1, got {gamma}, {num_antennas}")));
    }
    let scale = 1.0 / (num_antennas as f64 * gamma).sqrt();
    Ok(estimate.iter().map(|z| z * scale).collect())
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrEstimate {
    pub user: usize,
    pub sinr: Estimate,
    /// `|E{h_ik^H w_ik}|^2` per BS.
    pub desired: Vec<Estimate>,
    /// `Var{h_ik^H w_ik}` per BS.
    pub uncertainty: Vec<Estimate>,
    /// `E{|h_ik^H w_it|^2}`, indexed `[bs][t]`; the `t = user` entries are zero.
    pub cross: Vec<Vec<Estimate>>,
}

/// Running sums for one user.
#[derive(Debug, Clone)]
struct Accum {
    /// `h_ik^H w_ik` per BS.
    a_sum: Vec<Complex64>,
    a_abs2: Vec<f64>,
    /// Control `e_ik^H w_ik`, zero mean because the error is independent of
    /// the estimate.
    y_sum: Vec<Complex64>,
    y_abs2: Vec<f64>,
    ay_sum: Vec<Complex64>,
    cross: Vec<f64>,
    count: usize,
}

impl Accum {
    fn new(l: usize, k: usize) -> Self {
        Self {
            a_sum: vec![Complex64::default(); l],
            a_abs2: vec![0.0; l],
            y_sum: vec![Complex64::default(); l],
            y_abs2: vec![0.0; l],
            ay_sum: vec![Complex64::default(); l],
            cross: vec![0.0; l * k],
            count: 0,
        }
    }

    fn merge(&mut self, other: &Accum) {
        fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        add(&mut self.a_sum, &other.a_sum);
        add(&mut self.a_abs2, &other.a_abs2);
        add(&mut self.y_sum, &other.y_sum);
        add(&mut self.y_abs2, &other.y_abs2);
        add(&mut self.ay_sum, &other.ay_sum);
        add(&mut self.cross, &other.cross);
        self.count += other.count;
    }

    /// Mean of `a` adjusted with the regression control variate.
    fn controlled_mean(&self, i: usize) -> Complex64 {
        let n = self.count as f64;
        let a_mean = self.a_sum[i] / n;
        let y_mean = self.y_sum[i] / n;
        let y_var = self.y_abs2[i] / n - y_mean.norm_sqr();
        if !(y_var > 0.0) {
            return a_mean;
        }
        let cov = self.ay_sum[i] / n - a_mean * y_mean.conj();
        a_mean - cov / y_var * y_mean
    }
}

/// Term values derived from one set of sums.
struct Terms {
    desired: Vec<f64>,
    uncertainty: Vec<f64>,
    cross: Vec<f64>,
    sinr: f64,
}

struct Setup<'a> {
    stats: &'a ChannelStats,
    rho: &'a crate::numeric::Matrix,
    l: usize,
    k: usize,
    m: usize,
    noise: f64,
}

impl Setup<'_> {
    fn terms(&self, acc: &Accum, user: usize) -> Terms {
        let n = acc.count as f64;
        let (l, k) = (self.l, self.k);
        let mut desired = vec![0.0; l];
        let mut uncertainty = vec![0.0; l];
        let mut cross = vec![0.0; l * k];
        let mut signal = 0.0;
        let mut interference = self.noise;
        for i in 0..l {
            desired[i] = acc.controlled_mean(i).norm_sqr();
            let raw_mean = acc.a_sum[i] / n;
            let centered = acc.a_abs2[i] - n * raw_mean.norm_sqr();
            uncertainty[i] = if acc.count > 1 { (centered / (n - 1.0)).max(0.0) } else { 0.0 };
            let r = self.rho[(i, user)];
            signal += r * desired[i];
            interference += r * uncertainty[i];
            for t in (0..k).filter(|&t| t != user) {
                cross[i * k + t] = acc.cross[i * k + t] / n;
                interference += self.rho[(i, t)] * cross[i * k + t];
            }
        }
        let sinr = if signal == 0.0 { 0.0 } else { signal / interference };
        Terms {
            desired,
            uncertainty,
            cross,
            sinr,
        }
    }

    /// Sums over `draws` draws of batch `batch` for `users`.
    fn run_batch(&self, users: &[usize], seed: u64, batch: usize, draws: usize) -> Vec<Accum> {
        let (l, k, m) = (self.l, self.k, self.m);
        let mut rng = stream_rng(seed, batch as u64);
        let mut accs: Vec<Accum> = users.iter().map(|_| Accum::new(l, k)).collect();

        // estimates are needed for served pairs and for the users' own links
        let needed: Vec<bool> = (0..l * k)
            .map(|p| self.rho.as_slice()[p] > 0.0 || users.contains(&(p % k)))
            .collect();
        let mut hhat = vec![Complex64::default(); l * k * m];
        let mut err = vec![Complex64::default(); m];
        let mut h = vec![Complex64::default(); m];
        let inv_norm: Vec<f64> = (0..l * k)
            .map(|p| {
                let g = self.stats.gamma.as_slice()[p];
                if g > 0.0 {
                    1.0 / (m as f64 * g).sqrt()
                } else {
                    0.0
                }
            })
            .collect();

        for _ in 0..draws {
            for p in 0..l * k {
                if needed[p] {
                    fill_cn(&mut rng, self.stats.gamma.as_slice()[p], &mut hhat[p * m..(p + 1) * m]);
                }
            }
            for (u, &user) in users.iter().enumerate() {
                let acc = &mut accs[u];
                for i in 0..l {
                    let own_p = i * k + user;
                    let var = (self.stats.beta.as_slice()[own_p] - self.stats.gamma.as_slice()[own_p]).max(0.0);
                    fill_cn(&mut rng, var, &mut err);
                    let own = &hhat[own_p * m..(own_p + 1) * m];
                    for j in 0..m {
                        h[j] = own[j] - err[j];
                    }
                    for t in 0..k {
                        let p = i * k + t;
                        if t != user && self.rho.as_slice()[p] <= 0.0 {
                            continue;
                        }
                        let w = &hhat[p * m..(p + 1) * m];
                        let z = dot_conj(&h, w) * inv_norm[p];
                        if t == user {
                            let y = dot_conj(&err, w) * inv_norm[p];
                            acc.a_sum[i] += z;
                            acc.a_abs2[i] += z.norm_sqr();
                            acc.y_sum[i] += y;
                            acc.y_abs2[i] += y.norm_sqr();
                            acc.ay_sum[i] += z * y.conj();
                        } else {
                            acc.cross[p] += z.norm_sqr();
                        }
                    }
                }
                acc.count += 1;
            }
        }
        accs
    }
}

/// `x^H y`.
fn dot_conj(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex64::new(re, im)
}

fn batch_sizes(n: usize) -> Vec<usize> {
    let full = n / BATCH_DRAWS;
    let mut sizes = vec![BATCH_DRAWS; full];
    if n % BATCH_DRAWS != 0 {
        sizes.push(n % BATCH_DRAWS);
    }
    sizes
}

fn std_error(values: &[f64]) -> f64 {
    let nb = values.len();
    if nb < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / nb as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (var / nb as f64).sqrt()
}

/// Monte-Carlo SINR estimates for `users` from the same channel draws.
///
/// Standard errors are the spread of per-batch estimates, so they are
/// infinite when fewer than two batches are run.
pub fn estimate_sinr_users(
    stats: &ChannelStats,
    alloc: &PowerAllocation,
    scenario: &NetworkScenario,
    users: &[usize],
    cfg: &McConfig,
) -> Result<Vec<SinrEstimate>> {
    check_stats(stats, scenario)?;
    let (l, k, m) = (scenario.num_bs(), scenario.num_users(), scenario.num_antennas);
    if alloc.matrix().shape() != (l, k) {
        return Err(Error::Dimension(format!("allocation is not {l}x{k}")));
    }
    if let Some(&u) = users.iter().find(|&&u| u >= k) {
        return Err(Error::Dimension(format!("user {u} out of range for K={k}")));
    }
    if cfg.num_samples == 0 {
        return Err(Error::Domain("num_samples must be at least 1".into()));
    }
    let rho = alloc.matrix();
    if let Some(p) = (0..l * k).find(|&p| rho.as_slice()[p] > 0.0 && !(stats.gamma.as_slice()[p] > 0.0)) {
        return Err(Error::Domain(format!(
            "power on link (bs {}, user {}) whose estimate variance is zero",
            p / k,
            p % k
        )));
    }
    let setup = Setup {
        stats,
        rho,
        l,
        k,
        m,
        noise: scenario.noise_dl,
    };

    let sizes = batch_sizes(cfg.num_samples);
    let run = |(b, &n): (usize, &usize)| setup.run_batch(users, cfg.rng_seed, b, n);
    #[cfg(feature = "parallel")]
    let batches: Vec<Vec<Accum>> = {
        use rayon::prelude::*;
        sizes.par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let batches: Vec<Vec<Accum>> = sizes.iter().enumerate().map(run).collect();

    let mut out = Vec::with_capacity(users.len());
    for (u, &user) in users.iter().enumerate() {
        let mut total = Accum::new(l, k);
        for b in &batches {
            total.merge(&b[u]);
        }
        let pooled = setup.terms(&total, user);
        let per_batch: Vec<Terms> = batches.iter().map(|b| setup.terms(&b[u], user)).collect();
        let se_of = |f: &dyn Fn(&Terms) -> f64| std_error(&per_batch.iter().map(f).collect::<Vec<_>>());

        let desired = (0..l)
            .map(|i| Estimate {
                value: pooled.desired[i],
                std_error: se_of(&|t| t.desired[i]),
            })
            .collect();
        let uncertainty = (0..l)
            .map(|i| Estimate {
                value: pooled.uncertainty[i],
                std_error: se_of(&|t| t.uncertainty[i]),
            })
            .collect();
        let cross = (0..l)
            .map(|i| {
                (0..k)
                    .map(|t| Estimate {
                        value: pooled.cross[i * k + t],
                        std_error: if t == user { 0.0 } else { se_of(&|x| x.cross[i * k + t]) },
                    })
                    .collect()
            })
            .collect();
        out.push(SinrEstimate {
            user,
            sinr: Estimate {
                value: pooled.sinr,
                std_error: se_of(&|t| t.sinr),
            },
            desired,
            uncertainty,
            cross,
        });
    }
    Ok(out)
}

/// Monte-Carlo SINR estimate for one user.
pub fn estimate_sinr_terms(
    stats: &ChannelStats,
    alloc: &PowerAllocation,
    scenario: &NetworkScenario,
    user: usize,
    cfg: &McConfig,
) -> Result<SinrEstimate> {
    Ok(estimate_sinr_users(stats, alloc, scenario, &[user], cfg)?.remove(0))
}

/// Monte-Carlo SINR estimates for every user.
pub fn estimate_sinr_all(
    stats: &ChannelStats,
    alloc: &PowerAllocation,
    scenario: &NetworkScenario,
    cfg: &McConfig,
) -> Result<Vec<SinrEstimate>> {
    let users: Vec<usize> = (0..scenario.num_users()).collect();
    estimate_sinr_users(stats, alloc, scenario, &users, cfg)
}
