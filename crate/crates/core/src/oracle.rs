//! Brute-force validators. Each recomputes its quantity from first
//! principles (simulation, finite differences or exhaustive search) rather
//! than through the routines it checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::covertness::solve_x2;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::sensing::SensingModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub samples: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, samples: usize, max_deviation: f64, tolerance: f64, seed: u64) -> Self {
        OracleReport { name: name.into(), samples, max_deviation, tolerance, pass: max_deviation <= tolerance, seed }
    }
}

/// Monte-Carlo detection error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub dep: f64,
    pub std_err: f64,
    pub p_fa: f64,
    pub p_md: f64,
    pub trials: usize,
}

fn cn(rng: &mut ChaCha8Rng, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

const BLOCK: usize = 4096;

/// Simulates the warden's product likelihood-ratio test
/// `∏ p₀(y_l) / ∏ p₁(y_l) ≷ 1` under both hypotheses.
pub fn mdep_monte_carlo(lambda0: f64, lambda1: f64, channel_uses: usize, trials: usize, seed: u64) -> Result<McEstimate> {
    if !(lambda0 > 0.0 && lambda1 > 0.0) {
        return Err(Error::NumericalDomain("powers must be positive".into()));
    }
    if trials < 10_000 {
        return Err(Error::invalid(format!("need at least 10^4 trials, got {trials}")));
    }
    if channel_uses == 0 {
        return Err(Error::invalid("channel_uses must be positive"));
    }
    let log_lr = |ys: &[C64]| -> f64 {
        ys.iter()
            .map(|y| {
                let p0 = (-y.norm_sqr() / lambda0).exp() / (PI * lambda0);
                let p1 = (-y.norm_sqr() / lambda1).exp() / (PI * lambda1);
                p0.ln() - p1.ln()
            })
            .sum()
    };
    let blocks = trials.div_ceil(BLOCK);
    let (fa, md) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BLOCK.min(trials - b * BLOCK);
            let mut ys = vec![C64::new(0.0, 0.0); channel_uses];
            let (mut fa, mut md) = (0usize, 0usize);
            for _ in 0..n {
                ys.iter_mut().for_each(|y| *y = cn(&mut rng, lambda0));
                // ties go to H0
                if log_lr(&ys) < 0.0 {
                    fa += 1;
                }
                ys.iter_mut().for_each(|y| *y = cn(&mut rng, lambda1));
                if log_lr(&ys) >= 0.0 {
                    md += 1;
                }
            }
            (fa, md)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let (p_fa, p_md) = (fa as f64 / n, md as f64 / n);
    let std_err = (p_fa * (1.0 - p_fa) / n + p_md * (1.0 - p_md) / n).sqrt();
    Ok(McEstimate { dep: p_fa + p_md, std_err, p_fa, p_md, trials })
}

fn ula(theta: f64, n: usize, spacing: f64, wavelength: f64) -> CVec {
    CVec::from_fn(n, |k, _| C64::from_polar(1.0, 2.0 * PI * spacing * k as f64 * theta.sin() / wavelength))
}

/// Hermitian square root through the eigendecomposition of a PSD matrix.
fn psd_sqrt(w: &CMat) -> CMat {
    let eig = w.clone().symmetric_eigen();
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Fisher information of the warden angle with the complex echo gain as a
/// nuisance, from central differences of the noiseless echo
/// `α b(θ) a(θ)^H X`, `XX^H = L·W`.
pub fn fim_numeric(model: &SensingModel, w: &CMat, h_step: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h_step) {
        return Err(Error::invalid(format!("finite-difference step {h_step:e} outside [1e-7, 1e-4]")));
    }
    if w.shape() != (model.n_tx, model.n_tx) {
        return Err(Error::dims("W does not match the transmit array"));
    }
    let x = psd_sqrt(w) * C64::new((model.snapshots as f64).sqrt(), 0.0);
    let mean = |theta: f64, gain: C64| -> CMat {
        let a = ula(theta, model.n_tx, model.spacing, model.wavelength);
        let b = ula(theta, model.n_rx, model.spacing, model.wavelength);
        (b * a.adjoint() * &x) * gain
    };
    let (th, g) = (model.theta_hat, C64::new(model.alpha_echo, 0.0));
    let step_g = h_step * model.alpha_echo.max(1e-300);
    let d_theta = (mean(th + h_step, g) - mean(th - h_step, g)) / C64::new(2.0 * h_step, 0.0);
    let d_re = (mean(th, g + step_g) - mean(th, g - step_g)) / C64::new(2.0 * step_g, 0.0);
    let d_im = (mean(th, g + C64::new(0.0, step_g)) - mean(th, g - C64::new(0.0, step_g))) / C64::new(2.0 * step_g, 0.0);
    let derivs = [d_theta, d_re, d_im];
    let mut fim = nalgebra::Matrix3::<f64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let inner: C64 = derivs[i].iter().zip(derivs[j].iter()).map(|(a, b)| a.conj() * b).sum();
            fim[(i, j)] = 2.0 * inner.re / model.sigma_a2;
        }
    }
    let nuisance = fim.fixed_view::<2, 2>(1, 1).into_owned();
    let cross = fim.fixed_view::<1, 2>(0, 1).into_owned();
    let inv = nuisance
        .try_inverse()
        .ok_or_else(|| Error::Unidentifiable(nuisance.determinant()))?;
    let eff = fim[(0, 0)] - (cross * inv * cross.transpose())[(0, 0)];
    if !(eff > 0.0) {
        return Err(Error::Unidentifiable(eff));
    }
    Ok(eff)
}

/// Best design found by [`grid_search_small`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridBest {
    pub rate: f64,
    pub v: CVec,
    pub w_b: CVec,
    pub w_c: CVec,
    pub evaluated: usize,
}

fn normalized(x: CVec) -> Option<CVec> {
    let n = x.norm();
    (n > 1e-300).then(|| x / C64::new(n, 0.0))
}

/// Exhaustive search over quantized RIS phases (first element pinned, since
/// a common phase changes nothing) and a grid of beam directions mixing
/// maximum-ratio and warden-nulling directions. Carol takes all power Bob
/// leaves, and Bob's power is the largest one satisfying QoS and covertness.
pub fn grid_search_small(cfg: &SystemConfig, ch: &ChannelSet, phase_levels: usize, beam_grid: usize) -> Result<GridBest> {
    let m = ch.n_ris();
    let n = ch.n_tx();
    if m > 4 || n > 3 || phase_levels == 0 || phase_levels > 16 || beam_grid < 2 {
        return Err(Error::invalid("grid search is limited to M ≤ 4, n_tx ≤ 3, 1..=16 phase levels, ≥ 2 beam points"));
    }
    let x2 = solve_x2(cfg.epsilon, cfg.channel_uses)?;
    let rho = cfg.qos_rate.exp2() - 1.0;
    let h = &ch.h_aw;
    let mix: Vec<f64> = (0..beam_grid).map(|i| i as f64 / (beam_grid - 1) as f64).collect();
    let combos = phase_levels.pow((m - 1) as u32);

    let best = (0..combos)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rest = idx;
            let v = CVec::from_fn(m, |k, _| {
                if k == 0 {
                    return C64::new(1.0, 0.0);
                }
                let level = rest % phase_levels;
                rest /= phase_levels;
                C64::from_polar(1.0, 2.0 * PI * level as f64 / phase_levels as f64)
            });
            let g_b = ch.g_b.adjoint() * &v;
            let g_c = ch.g_c.adjoint() * &v;
            let mrt_b = normalized(g_b.clone())?;
            let null_b = normalized(&g_b - h * (h.dotc(&g_b) / h.norm_squared()));
            let mrt_c = normalized(g_c.clone());
            let mut local: Option<(f64, CVec, CVec)> = None;
            for &s in &mix {
                let d_b = match &null_b {
                    Some(z) => normalized(&mrt_b * C64::new(1.0 - s, 0.0) + z * C64::new(s, 0.0)),
                    None => Some(mrt_b.clone()),
                };
                let Some(d_b) = d_b else { continue };
                for &r in &mix {
                    let d_c = match &mrt_c {
                        Some(c) => normalized(c * C64::new(1.0 - r, 0.0) + &mrt_b * C64::new(r, 0.0)),
                        None => Some(mrt_b.clone()),
                    };
                    let Some(d_c) = d_c else { continue };
                    let gain = |g: &CVec, d: &CVec| g.dotc(d).norm_sqr();
                    let mut p_max = cfg.power;
                    if rho > 0.0 {
                        for (g, noise) in [(&g_b, cfg.sigma_b2), (&g_c, cfg.sigma_c2)] {
                            let (a, b) = (gain(g, &d_c), gain(g, &d_b));
                            p_max = p_max.min((cfg.power * a - rho * noise) / (a + rho * b));
                        }
                    }
                    let (hb, hc) = (gain(h, &d_b), gain(h, &d_c));
                    let denom = hb + (x2 - 1.0) * hc;
                    if denom > 0.0 {
                        p_max = p_max.min((x2 - 1.0) * (cfg.power * hc + cfg.sigma_w2) / denom);
                    }
                    if !(p_max >= 0.0) {
                        continue;
                    }
                    let rate = (1.0 + p_max * gain(&g_b, &d_b) / cfg.sigma_b2).log2();
                    if local.as_ref().is_none_or(|(best, _, _)| rate > *best) {
                        let w_b = &d_b * C64::new(p_max.sqrt(), 0.0);
                        let w_c = &d_c * C64::new((cfg.power - p_max).sqrt(), 0.0);
                        local = Some((rate, w_b, w_c));
                    }
                }
            }
            local.map(|(rate, w_b, w_c)| (rate, idx, v, w_b, w_c))
        })
        // ties broken by grid index for determinism
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });

    match best {
        Some((rate, _, v, w_b, w_c)) => Ok(GridBest { rate, v, w_b, w_c, evaluated: combos * beam_grid * beam_grid }),
        None => Err(Error::Infeasible("no grid point satisfies QoS and covertness".into())),
    }
}

/// Worst sampled covert ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSample {
    pub worst_ratio: f64,
    pub worst_offset: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Draws warden angle offsets uniformly over `[−r, r]`, always including
/// both endpoints and zero, and evaluates `λ₁/λ₀` on the exact channel.
pub fn robustness_sampler(
    cfg: &SystemConfig,
    w_b: &CVec,
    w_c: &CVec,
    half_width: f64,
    samples: usize,
    seed: u64,
) -> Result<RobustnessSample> {
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 10^3 samples, got {samples}")));
    }
    if !(half_width >= 0.0 && half_width.is_finite()) {
        return Err(Error::invalid("half width must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = vec![-half_width, 0.0, half_width];
    offsets.extend((0..samples).map(|_| rng.random_range(-1.0..=1.0) * half_width));
    let amp = (cfg.beta_w / cfg.d_aw.powf(cfg.alpha_w)).sqrt();
    let mut worst = (1.0, 0.0);
    for d in offsets {
        let h = ula(cfg.theta_w_hat + d, cfg.n_tx, cfg.element_spacing, cfg.wavelength) * C64::new(amp, 0.0);
        let l0 = h.dotc(w_c).norm_sqr() + cfg.sigma_w2;
        let ratio = (l0 + h.dotc(w_b).norm_sqr()) / l0;
        if ratio > worst.0 {
            worst = (ratio, d);
        }
    }
    Ok(RobustnessSample { worst_ratio: worst.0, worst_offset: worst.1, samples: samples + 3, seed })
}

/// Sizes of the built-in validation suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub mc_triples: usize,
    pub mc_trials: usize,
    pub pinsker_triples: usize,
    pub fim_instances: usize,
    pub tiny_instances: usize,
    pub robust_runs: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            mc_triples: 20,
            mc_trials: 200_000,
            pinsker_triples: 10_000,
            fim_instances: 20,
            tiny_instances: 3,
            robust_runs: 2,
            seed: 2024,
        }
    }
}

/// Random `(λ₀, λ₁, L)` with `λ₁/λ₀ ∈ [1, 1 + spread]`.
pub fn random_triples(count: usize, spread: f64, max_l: usize, seed: u64) -> Vec<(f64, f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let l0 = 10f64.powf(rng.random_range(-3.0..3.0));
            let l1 = l0 * (1.0 + spread * rng.random::<f64>());
            (l0, l1, rng.random_range(1..=max_l))
        })
        .collect()
}

/// Random PSD matrix `GG^H/n` with a random rank in `1..=n`.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let r = rng.random_range(1..=n);
    let g = CMat::from_fn(n, r, |_, _| cn(rng, 1.0));
    &g * g.adjoint() / C64::new(n as f64, 0.0)
}

/// Three-element, three-antenna variant of the small profile.
pub fn tiny_config() -> SystemConfig {
    let mut cfg = SystemConfig::desk();
    cfg.n_tx = 3;
    cfg
}

/// Runs every oracle against its target and reports one line each.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<OracleReport>> {
    use crate::covertness::{dep_exact, pinsker_bound};
    use crate::optimizer::{solve_p1, solve_p2};
    use crate::sensing::crb;

    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for (i, &(l0, l1, l)) in random_triples(opts.mc_triples, 0.5, 30, opts.seed).iter().enumerate() {
        let exact = dep_exact(l0, l1, l)?.dep;
        let mc = mdep_monte_carlo(l0, l1, l, opts.mc_trials, opts.seed + i as u64)?;
        let dev = (mc.dep - exact).abs();
        worst = worst.max(if mc.std_err > 0.0 { dev / mc.std_err } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
    }
    out.push(OracleReport::new("mdep_monte_carlo vs dep_exact (standard errors)", opts.mc_triples, worst, 3.0, opts.seed));

    let mut worst: f64 = 0.0;
    for &(l0, l1, l) in &random_triples(opts.pinsker_triples, 5.0, 100, opts.seed + 1) {
        worst = worst.max(pinsker_bound(l0, l1, l)? - dep_exact(l0, l1, l)?.dep);
    }
    out.push(OracleReport::new("Pinsker lower bound on dep_exact", opts.pinsker_triples, worst, 1e-12, opts.seed + 1));

    let cfg = SystemConfig::desk();
    let model = SensingModel::from_config(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.fim_instances {
        let w = random_psd(cfg.n_tx, &mut rng);
        let c = crb(&model, &w)?;
        worst = worst.max((1.0 / fim_numeric(&model, &w, 1e-6)? - c).abs() / c);
    }
    out.push(OracleReport::new("crb vs 1/fim_numeric (relative)", opts.fim_instances, worst, 1e-2, opts.seed + 2));

    let tiny = tiny_config();
    let mut worst: f64 = 0.0;
    for k in 0..opts.tiny_instances {
        let ch = ChannelSet::generate(&tiny, opts.seed + 100 + k as u64)?;
        let grid = grid_search_small(&tiny, &ch, 16, 20)?;
        let rate = solve_p1(&tiny, &ch, &tiny.solver)?.covert_rate;
        worst = worst.max((grid.rate - rate) / grid.rate);
    }
    out.push(OracleReport::new("solve_p1 vs grid_search_small (relative shortfall)", opts.tiny_instances, worst, 0.05, opts.seed + 100));

    let mut worst: f64 = 0.0;
    for k in 0..opts.robust_runs {
        let seed = opts.seed + 200 + k as u64;
        let ch = ChannelSet::generate(&cfg, seed)?;
        let sol = solve_p2(&cfg, &ch, &model, &cfg.solver)?;
        let half = 3.0 * sol.achieved_crb.unwrap_or(0.0).sqrt();
        let s = robustness_sampler(&cfg, &sol.wb_vec, &sol.wc_vec, half, 10_000, seed)?;
        worst = worst.max(s.worst_ratio / sol.x2 - 1.0);
    }
    out.push(OracleReport::new("robustness_sampler on sensing-based solutions (ratio excess over x2)", opts.robust_runs, worst, 1e-3, opts.seed + 200));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::crb;

    #[test]
    fn equal_powers_never_detect() {
        let e = mdep_monte_carlo(1.0, 1.0, 10, 10_000, 1).unwrap();
        assert_eq!(e.dep, 1.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = mdep_monte_carlo(1.0, 1.5, 5, 20_000, 9).unwrap();
        let b = mdep_monte_carlo(1.0, 1.5, 5, 20_000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_few_trials() {
        assert!(mdep_monte_carlo(1.0, 2.0, 3, 100, 0).is_err());
    }

    #[test]
    fn fim_scales_with_snapshots_and_vanishes_with_power() {
        let cfg = SystemConfig::desk();
        let model = SensingModel::from_config(&cfg).unwrap();
        let w = CMat::identity(cfg.n_tx, cfg.n_tx) * C64::new(0.25, 0.0);
        let f1 = fim_numeric(&model, &w, 1e-6).unwrap();
        let mut m2 = model.clone();
        m2.snapshots *= 2;
        let f2 = fim_numeric(&m2, &w, 1e-6).unwrap();
        assert!((f2 / f1 - 2.0).abs() < 1e-6);
        let tiny = fim_numeric(&model, &(w * C64::new(1e-12, 0.0)), 1e-6).unwrap();
        assert!(tiny < 1e-11 * f1);
        let c = crb(&model, &(CMat::identity(cfg.n_tx, cfg.n_tx) * C64::new(0.25, 0.0))).unwrap();
        assert!((1.0 / f1 - c).abs() / c < 1e-2);
    }

    #[test]
    fn silent_bob_has_ratio_one() {
        let cfg = SystemConfig::desk();
        let wc = CVec::from_element(cfg.n_tx, C64::new(0.3, 0.0));
        let r = robustness_sampler(&cfg, &CVec::zeros(cfg.n_tx), &wc, 0.01, 1000, 3).unwrap();
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn endpoints_are_sampled() {
        let cfg = SystemConfig::desk();
        // beam pointed at θ̂ + r, so the worst case sits at the right endpoint
        let r = 0.05;
        let a = ula(cfg.theta_w_hat + r, cfg.n_tx, cfg.element_spacing, cfg.wavelength);
        let s = robustness_sampler(&cfg, &a, &CVec::zeros(cfg.n_tx), r, 1000, 4).unwrap();
        assert_eq!(s.worst_offset, r);
    }
}
