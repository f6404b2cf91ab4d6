use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covert_ris::channel::{steering_ula, steering_upa};
use covert_ris::convex_kit::{f_lb, f_ub, rank_one_gap};
use covert_ris::covertness::{covert_ratio, dep_exact, kl_divergence, pinsker_bound, solve_x2};
use covert_ris::experiments::{parse_config, render_config};
use covert_ris::linalg::{herm_eigen, outer, trace_prod};
use covert_ris::optimizer::{aligned_beam, extract_rank_one, offset_grid};
use covert_ris::oracle::random_psd;
use covert_ris::sensing::{crb, delta_a_approx, delta_a_exact, SensingModel};
use covert_ris::{CMat, CVec, SystemConfig, C64};

fn psd_quad(n: usize, seed: u64) -> [CMat; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [(); 4].map(|_| random_psd(n, &mut rng) * C64::new(10f64.powi((seed % 5) as i32 - 2), 0.0))
}

fn cvec(re: &[f64], im: &[f64]) -> CVec {
    CVec::from_iterator(re.len(), re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dc_bounds_sandwich_the_trace(n in 2usize..=8, seed in any::<u64>()) {
        let [a, b, a0, b0] = psd_quad(n, seed);
        let exact = trace_prod(&a, &b).re;
        let scale = 1e-9 * (a.norm() + b.norm() + a0.norm() + b0.norm()).powi(2).max(1.0);
        prop_assert!(f_lb(&a, &b, &a0, &b0).unwrap() <= exact + scale);
        prop_assert!(f_ub(&a, &b, &a0, &b0).unwrap() >= exact - scale);
        let at0 = trace_prod(&a0, &b0).re;
        prop_assert!((f_lb(&a0, &b0, &a0, &b0).unwrap() - at0).abs() <= scale);
        prop_assert!((f_ub(&a0, &b0, &a0, &b0).unwrap() - at0).abs() <= scale);
    }

    #[test]
    fn x2_solves_its_equation(eps in 0.0f64..=1.0, l in 1usize..=200) {
        let x = solve_x2(eps, l).unwrap();
        prop_assert!(x >= 1.0);
        let residual = x.ln() + 1.0 / x - 1.0 - 2.0 * eps * eps / l as f64;
        prop_assert!(residual.abs() <= 1e-12);
    }

    #[test]
    fn x2_grows_with_epsilon(e1 in 0.0f64..1.0, de in 0.0f64..0.5, l in 1usize..100) {
        let e2 = (e1 + de).min(1.0);
        prop_assert!(solve_x2(e2, l).unwrap() >= solve_x2(e1, l).unwrap());
    }

    #[test]
    fn kl_is_nonnegative_and_zero_only_at_equality(l0 in 1e-6f64..1e3, r in 1.0f64..10.0) {
        let d = kl_divergence(l0, l0 * r).unwrap();
        prop_assert!(d >= 0.0);
        if r > 1.0 + 1e-6 {
            prop_assert!(d > 0.0);
        }
        prop_assert_eq!(kl_divergence(l0, l0).unwrap(), 0.0);
    }

    #[test]
    fn dep_respects_pinsker_and_range(l0 in 1e-6f64..1e3, r in 1.0f64..20.0, l in 1usize..200) {
        let d = dep_exact(l0, l0 * r, l).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.dep));
        prop_assert!(d.dep >= pinsker_bound(l0, l0 * r, l).unwrap() - 1e-12);
    }

    #[test]
    fn dep_depends_only_on_the_ratio(l0 in 1e-6f64..1e3, k in 1e-3f64..1e3, r in 1.0f64..5.0, l in 1usize..60) {
        let a = dep_exact(l0, l0 * r, l).unwrap().dep;
        let b = dep_exact(k * l0, k * l0 * r, l).unwrap().dep;
        prop_assert!((a - b).abs() <= 1e-9);
        prop_assert!((covert_ratio(l0, l0 * r) - covert_ratio(k * l0, k * l0 * r)).abs() <= 1e-12 * r);
    }

    #[test]
    fn steering_vectors_are_unit_modulus(theta in -1.6f64..1.6, phi in -3.2f64..3.2, n in 1usize..16, m in 1usize..6) {
        let a = steering_ula(theta, n, 0.03, 0.06).unwrap();
        prop_assert_eq!(a[0], C64::new(1.0, 0.0));
        prop_assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let u = steering_upa(theta, phi, m, n, 0.03, 0.06).unwrap();
        prop_assert_eq!(u.len(), m * n);
        prop_assert!((u.norm_squared() - (m * n) as f64).abs() < 1e-9);
    }

    #[test]
    fn lifted_gain_matches_vector_gain(seed in any::<u64>(), m in 1usize..6, n in 1usize..5) {
        let g = covert_ris::channel::complex_gaussian_matrix(m, n, seed);
        let v = covert_ris::channel::complex_gaussian_matrix(m, 1, seed ^ 1).column(0).into_owned();
        let w = covert_ris::channel::complex_gaussian_matrix(n, 1, seed ^ 2).column(0).into_owned();
        let lifted = (outer(&v) * &g * outer(&w) * g.adjoint()).trace().re;
        let direct = v.dotc(&(&g * &w)).norm_sqr();
        prop_assert!((lifted - direct).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn crb_scales_inversely_with_power_and_snapshots(seed in any::<u64>(), c in 0.1f64..10.0) {
        let cfg = SystemConfig::desk();
        let model = SensingModel::from_config(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_psd(cfg.n_tx, &mut rng);
        let base = crb(&model, &w).unwrap();
        let scaled = crb(&model, &(&w * C64::new(c, 0.0))).unwrap();
        // rounding in the traces is amplified by the cancellation in the Fisher determinant
        let f = model.fisher_terms(&w).unwrap();
        let cond = f.dd * f.aa / (f.dd * f.aa - f.da.norm_sqr());
        prop_assert!((scaled * c / base - 1.0).abs() <= 1e-11 * cond.max(10.0));
        let mut twice = model.clone();
        twice.snapshots *= 2;
        prop_assert!((crb(&twice, &w).unwrap() * 2.0 / base - 1.0).abs() <= 1e-10);
        let mut noisy = model.clone();
        noisy.sigma_a2 *= c;
        prop_assert!((crb(&noisy, &w).unwrap() / (c * base) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn small_angle_form_overestimates_slightly(dtheta in -0.026f64..0.026) {
        let cfg = SystemConfig::full();
        let exact = delta_a_exact(0.0, dtheta, cfg.n_tx, cfg.element_spacing, cfg.wavelength);
        let approx = delta_a_approx(0.0, dtheta, cfg.n_tx, cfg.element_spacing, cfg.wavelength);
        prop_assert!(approx >= exact);
        if exact > 0.0 {
            prop_assert!((approx - exact) / exact <= 0.05);
        }
    }

    #[test]
    fn rank_one_extraction_round_trips(re in prop::collection::vec(-3.0f64..3.0, 1..8), seed in any::<u64>()) {
        let im: Vec<f64> = re.iter().enumerate().map(|(i, x)| ((seed >> (i % 60)) & 1) as f64 - x * 0.5).collect();
        let v = cvec(&re, &im);
        prop_assume!(v.norm() > 1e-3);
        let x = outer(&v);
        prop_assert!(rank_one_gap(&x) <= 1e-9 * x.norm());
        let u = extract_rank_one(&x, false);
        prop_assert!((outer(&u) - &x).norm() <= 1e-9 * x.norm());
        let p = extract_rank_one(&x, true);
        prop_assert!(p.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn aligned_beam_is_dominated(n in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_psd(n, &mut rng);
        let g = covert_ris::channel::complex_gaussian_matrix(n, 1, seed).column(0).into_owned();
        let b = aligned_beam(&w, &g);
        let gain_w = g.dotc(&(&w * &g)).re;
        prop_assert!((g.dotc(&b).norm_sqr() - gain_w).abs() <= 1e-9 * gain_w.max(1e-12));
        let rest = &w - outer(&b);
        prop_assert!(*herm_eigen(&rest).values.last().unwrap() >= -1e-9 * w.norm());
    }

    #[test]
    fn offset_grid_is_symmetric(half in 0.0f64..0.1, points in 2usize..500) {
        let grid = offset_grid(half, points);
        prop_assert_eq!(grid.len() % 2, 1);
        prop_assert_eq!(grid[0], -half);
        prop_assert_eq!(*grid.last().unwrap(), half);
        prop_assert!(grid.contains(&0.0));
    }

    #[test]
    fn config_text_round_trips(eps in 0.0f64..=1.0, qos in 0.0f64..5.0, p in 0.0f64..40.0, l in 1usize..100) {
        let text = format!("profile = desk\nepsilon = {eps:?}\nqos_rate_bpshz = {qos:?}\npower_dbm = {p:?}\nchannel_uses = {l}\n");
        let cfg = parse_config(&text).unwrap();
        let back = parse_config(&render_config(&cfg)).unwrap();
        prop_assert_eq!(back.epsilon, cfg.epsilon);
        prop_assert_eq!(back.qos_rate, cfg.qos_rate);
        prop_assert_eq!(back.channel_uses, l);
        prop_assert!((back.power / cfg.power - 1.0).abs() <= 1e-12);
    }
}
