use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twrelay_core::af_optimal::{af_rate_region, af_sinr, rate_profile_solve, solve_min_power, Direction, RelayWeights};
use twrelay_core::bounds::{broadcast_bound, cutset_region, default_alpha_grid, mac_bound, waterfill};
use twrelay_core::channel::{cn_matrix, draw_channels, draw_direct_channels, ChannelSet, NetworkDims, PowerConfig};
use twrelay_core::dcm::{dcm_rates, dcm_weights, relay_transmit_power};
use twrelay_core::dmt::{cf_rates_full, compression_noise_full, fit_power_law, l_quantities, outage_curve, DmtDims, Duplex, Strategy};
use twrelay_core::harness::table::format_g9;
use twrelay_core::harness::ExperimentConfig;
use twrelay_core::numkernel::{hermitian_eigvals, hermitian_logdet2, least_singular_direction, solve_hermitian, CMatrix};

fn pd_matrix(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = cn_matrix(&mut rng, n, n);
    &x * x.adjoint() + CMatrix::identity(n, n).scale(0.1)
}

fn scalar_links(ch: &ChannelSet) -> Vec<Complex64> {
    ch.relays.iter().map(|l| l.g[(0, 0)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logdet_is_sum_of_log_eigenvalues(n in 1usize..6, seed in any::<u64>()) {
        let a = pd_matrix(n, seed);
        let direct = hermitian_logdet2(&a).unwrap();
        let eig: f64 = hermitian_eigvals(&a).unwrap().iter().map(|l| l.log2()).sum();
        prop_assert!((direct - eig).abs() < 1e-8);
    }

    #[test]
    fn least_singular_residual_ignores_phase(n in 1usize..6, seed in any::<u64>(), phi in 0.0..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = cn_matrix(&mut rng, n, n);
        let (_, r0) = least_singular_direction(&m).unwrap();
        let (_, r1) = least_singular_direction(&m.map(|z| z * Complex64::from_polar(1.0, phi))).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-10 * (1.0 + r0));
    }

    #[test]
    fn hermitian_solve_recovers_rhs(n in 1usize..6, cols in 1usize..3, seed in any::<u64>()) {
        let a = pd_matrix(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x0 = cn_matrix(&mut rng, n, cols);
        let x = solve_hermitian(&a, &(&a * &x0)).unwrap();
        prop_assert!((&x - &x0).norm() <= 1e-8 * x0.norm());
    }

    #[test]
    fn channel_csv_round_trips(m in 1usize..3, n in 1usize..3, k in 1usize..4, seed in any::<u64>()) {
        let ch = draw_channels(NetworkDims::new(m, n, k).unwrap(), seed, 0);
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelSet::read_csv(buf.as_slice(), m, n).unwrap();
        prop_assert_eq!(back, ch);
    }

    #[test]
    fn sinr_ignores_common_weight_phase(k in 1usize..5, seed in any::<u64>(), phi in 0.0..std::f64::consts::TAU) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 1);
        let w = RelayWeights::scalar(&scalar_links(&ch));
        let rot = w.scaled(Complex64::from_polar(1.0, phi));
        for d in [Direction::T1to2, Direction::T2to1] {
            let (a, b) = (af_sinr(&w, &ch, 10.0, d).unwrap(), af_sinr(&rot, &ch, 10.0, d).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_rate_ignores_receive_link_phases(k in 2usize..5, seed in any::<u64>(), beta in 0.0..=1.0f64, p1 in 0.0..std::f64::consts::TAU, p2 in 0.0..std::f64::consts::TAU) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 2);
        let pc = PowerConfig::sum(10.0, 10.0);
        let rotated = ch.rotate_receive_links(Complex64::from_polar(1.0, p1), Complex64::from_polar(1.0, p2));
        let (a, _) = rate_profile_solve(&ch, &pc, 10.0, beta).unwrap();
        let (b, _) = rate_profile_solve(&rotated, &pc, 10.0, beta).unwrap();
        prop_assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn sum_rate_grows_with_relay_budget(k in 1usize..5, seed in any::<u64>(), beta in 0.0..=1.0f64) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 3);
        let mut last = 0.0;
        for pr in [1.0, 10.0, 100.0] {
            let (r, sol) = rate_profile_solve(&ch, &PowerConfig::sum(10.0, pr), 10.0, beta).unwrap();
            prop_assert!(r >= last - 1e-6);
            prop_assert!(sol.total_power <= pr * (1.0 + 1e-9));
            last = r;
        }
    }

    #[test]
    fn min_power_falls_with_targets(k in 1usize..5, seed in any::<u64>(), g0 in 0.1..3.0f64, g1 in 0.1..3.0f64, shrink in 0.1..1.0f64) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 4);
        if let Ok(full) = solve_min_power(&ch, 10.0, g0, g1) {
            prop_assert!(full.lambda1 >= 0.0 && full.lambda2 >= 0.0);
            let total: f64 = full.per_relay_power.iter().sum();
            prop_assert!((total - full.total_power).abs() <= 1e-9 * full.total_power);
            for (a, b) in [(g0 * shrink, g1), (g0, g1 * shrink)] {
                let s = solve_min_power(&ch, 10.0, a, b).unwrap();
                prop_assert!(s.total_power <= full.total_power * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn region_samples_split_sum_rate(k in 1usize..4, seed in any::<u64>()) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 5);
        let region = af_rate_region(&ch, &PowerConfig::sum(10.0, 10.0), 10.0, &[0.0, 0.25, 0.5, 1.0]).unwrap();
        for s in &region.samples {
            prop_assert!((s.r12 - s.beta * s.r_sum).abs() < 1e-6);
            prop_assert!((s.r21 - (1.0 - s.beta) * s.r_sum).abs() < 1e-6);
        }
    }

    #[test]
    fn matching_spends_the_whole_budget(m in 1usize..3, n in 1usize..3, k in 1usize..6, seed in any::<u64>(), pr in 0.1..100.0f64) {
        let ch = draw_channels(NetworkDims::new(m, n, k).unwrap(), seed, 6);
        let pc = PowerConfig::sum(10.0, pr);
        let w = dcm_weights(&ch, &pc).unwrap();
        prop_assert!((relay_transmit_power(&ch, &w, 10.0) - pr).abs() <= 1e-9 * pr);
    }

    #[test]
    fn matching_swaps_with_terminals(m in 1usize..3, n in 1usize..3, k in 1usize..6, seed in any::<u64>()) {
        let ch = draw_channels(NetworkDims::new(m, n, k).unwrap(), seed, 7);
        let pc = PowerConfig::sum(10.0, 10.0);
        let (a, b) = (dcm_rates(&ch, &pc).unwrap(), dcm_rates(&ch.swap_terminals(), &pc).unwrap());
        prop_assert!((a.r12 - b.r21).abs() < 1e-12 && (a.r21 - b.r12).abs() < 1e-12);
    }

    #[test]
    fn matching_sits_inside_the_af_region(k in 1usize..5, seed in any::<u64>(), beta in 0.05..0.95f64) {
        let ch = draw_channels(NetworkDims::new(1, 1, k).unwrap(), seed, 8);
        let pc = PowerConfig::sum(10.0, 10.0);
        let d = dcm_rates(&ch, &pc).unwrap();
        let (r, _) = rate_profile_solve(&ch, &pc, 10.0, beta).unwrap();
        prop_assert!((d.r12 / beta).min(d.r21 / (1.0 - beta)) <= r + 1e-6);
    }

    #[test]
    fn cut_set_caps_are_ordered_in_alpha(m in 1usize..3, n in 1usize..3, k in 1usize..6, seed in any::<u64>()) {
        let ch = draw_channels(NetworkDims::new(m, n, k).unwrap(), seed, 9);
        let b = cutset_region(&ch, 10.0, 10.0, &default_alpha_grid()).unwrap();
        for v in [&b.bc12, &b.bc21, &b.mac12, &b.mac21] {
            prop_assert!(v.iter().all(|&x| x >= 0.0));
        }
        for i in 1..b.alpha_grid.len() {
            prop_assert!(b.bc12[i] >= b.bc12[i - 1] && b.bc21[i] >= b.bc21[i - 1]);
            prop_assert!(b.mac12[i] <= b.mac12[i - 1] && b.mac21[i] <= b.mac21[i - 1]);
        }
        let (bc, mac) = (broadcast_bound(&ch, 10.0, 0.5).unwrap(), mac_bound(&ch, 10.0, 0.5).unwrap());
        prop_assert!(b.contains(bc.0.min(mac.0), bc.1.min(mac.1), 1e-12));
        let d = dcm_rates(&ch, &PowerConfig::sum(10.0, 10.0)).unwrap();
        prop_assert!(d.r12 <= bc.0.min(mac.0) + 1e-9 && d.r21 <= bc.1.min(mac.1) + 1e-9);
    }

    #[test]
    fn water_level_spends_budget(eigs in prop::collection::vec(1e-3..1e3f64, 1..16), pr in 1e-3..1e3f64) {
        let nu = waterfill(&eigs, pr).unwrap();
        let used: f64 = eigs.iter().map(|l| (nu - 1.0 / l).max(0.0)).sum();
        prop_assert!((used - pr).abs() <= 1e-9 * pr.max(1.0));
    }

    #[test]
    fn cf_rate_is_sandwiched(m1 in 1usize..3, m2 in 1usize..3, mr in 1usize..3, seed in any::<u64>(), snr_db in 0.0..30.0f64) {
        let dch = draw_direct_channels(m1, m2, mr, seed, 10);
        let p = 10f64.powf(snr_db / 10.0);
        let nhat = compression_noise_full(&dch, p).unwrap();
        prop_assume!(nhat.is_finite());
        let rates = cf_rates_full(&dch, p).unwrap();
        let (at, ceiling) = (l_quantities(&dch, p, nhat).unwrap(), l_quantities(&dch, p, 0.0).unwrap());
        let floor12 = at.l12.log2() - mr as f64 * (1.0 + nhat).log2();
        let floor21 = at.l21.log2() - mr as f64 * (1.0 + nhat).log2();
        prop_assert!(floor12 <= rates.r12 + 1e-9 && rates.r12 <= ceiling.l1_r2.log2() + 1e-9);
        prop_assert!(floor21 <= rates.r21 + 1e-9 && rates.r21 <= ceiling.l2_r1.log2() + 1e-9);
        for l in [at.l1_r2, at.l2_r1, at.l12, at.l21, at.l1r_2, at.l2r_1] {
            prop_assert!(l >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn stronger_relay_links_need_less_compression(seed in any::<u64>(), s in 1.0..10.0f64) {
        let dch = draw_direct_channels(1, 1, 1, seed, 11);
        let (a, b) = (compression_noise_full(&dch, 10.0).unwrap(), compression_noise_full(&dch.with_relay_tx_gain(s), 10.0).unwrap());
        prop_assert!(b <= a * (1.0 + 1e-9));
    }

    #[test]
    fn exact_power_law_is_recovered(d in 0.2..4.0f64, c in 1e-3..1.0f64) {
        let pts: Vec<(f64, f64, f64)> = [5.0, 10.0, 15.0, 20.0].iter().map(|&s: &f64| (s, c * 10f64.powf(-d * s / 10.0), 1.0)).collect();
        prop_assert!((fit_power_law(&pts).unwrap().exponent - d).abs() < 1e-6);
    }

    #[test]
    fn outage_estimates_are_probabilities(seed in any::<u64>(), r in 0.0..1.0f64) {
        let dims = DmtDims::new(1, 1, 1, Duplex::Full).unwrap();
        let c = outage_curve(dims, r, r, &[0.0, 10.0], 500, seed, Strategy::CfFull, 1.0).unwrap();
        for pt in &c.points {
            prop_assert!(pt.events12 <= pt.trials && pt.events21 <= pt.trials);
            prop_assert!((0.0..=1.0).contains(&pt.p12()) && (0.0..=1.0).contains(&pt.p21()));
        }
    }

    #[test]
    fn printed_values_parse_back(x in prop::num::f64::NORMAL) {
        let back: f64 = format_g9(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs());
    }

    #[test]
    fn config_json_round_trips(draws in 1usize..5000, seed in any::<u64>(), p_db in -10.0..30.0f64) {
        let text = format!(r#"{{"experiment":"scaling","dims":{{"M":1,"N":1}},"power":{{"P_dB":{p_db},"P_R_dB":10}},"draws":{draws},"seed":{seed}}}"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap().resolved().unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}

#[test]
fn draws_have_unit_variance() {
    let n = 100_000u64;
    let dims = NetworkDims::new(1, 1, 1).unwrap();
    let (mut re2, mut im2) = (0.0, 0.0);
    for i in 0..n {
        let z = draw_channels(dims, 77, i).relays[0].h_r[(0, 0)];
        re2 += z.re * z.re;
        im2 += z.im * z.im;
    }
    let (re2, im2) = (re2 / n as f64, im2 / n as f64);
    assert!((re2 - 0.5).abs() < 0.02 && (im2 - 0.5).abs() < 0.02);
    assert!((re2 + im2 - 1.0).abs() < 0.02);
}

#[test]
fn draws_depend_only_on_seed_and_index() {
    let dims = NetworkDims::new(2, 2, 3).unwrap();
    assert_eq!(draw_channels(dims, 1, 5), draw_channels(dims, 1, 5));
    assert_ne!(draw_channels(dims, 1, 5), draw_channels(dims, 1, 6));
}
