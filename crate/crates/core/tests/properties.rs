mod common;

use herald_mux::analytic::{car, coincidence_at_car, mux_prediction, optimal_operating_point, AnalyticChannel};
use herald_mux::config::{parse_scenario, to_toml_string};
use herald_mux::prob::{dark_prob_per_gate, db_to_transmission};
use herald_mux::runner::{compare_mux, log_grid, MuxCompareOptions};
use herald_mux::{
    ChannelSpec, DetectorRole, DetectorSpec, LaserSpec, McSettings, MuxTopology, PairStatistics, RoutingPolicy, Scenario,
    SpectralSpec, SwitchSpec,
};
use proptest::prelude::*;

fn efficiency() -> impl Strategy<Value = f64> {
    (-4.0f64..0.0).prop_map(|x| 10f64.powf(x))
}

fn dark() -> impl Strategy<Value = f64> {
    (-8.0f64..-3.0).prop_map(|x| 10f64.powf(x))
}

proptest! {
    #[test]
    fn db_conversion_is_multiplicative_and_decreasing(a in 0.0f64..60.0, b in 0.0f64..60.0) {
        let ta = db_to_transmission(a).unwrap();
        let tb = db_to_transmission(b).unwrap();
        let tab = db_to_transmission(a + b).unwrap();
        prop_assert!((ta * tb - tab).abs() <= 1e-12 * tab);
        if a < b {
            prop_assert!(ta > tb);
        }
    }

    #[test]
    fn dark_probabilities_are_probabilities(rate in 0.0f64..1e9, rep in 1.0f64..1e9) {
        let p = dark_prob_per_gate(rate, rep).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn optimum_is_the_maximum(eta_s in efficiency(), eta_i in efficiency(), d_i in dark(), d_s in dark(), f in -3.0f64..3.0) {
        let (c_star, car_max) = optimal_operating_point(eta_s, eta_i, d_i, d_s).unwrap();
        let c = (c_star * 10f64.powf(f)).min(eta_s * eta_i);
        prop_assert!(car(c, eta_s, eta_i, d_i, d_s).unwrap() <= car_max * (1.0 + 1e-12));
    }

    /// Scaling the coincidence probability and both dark probabilities by
    /// `k` divides every channel's CAR by `k`, so the ranking of channels
    /// and the location of each optimum relative to its darks are unchanged.
    #[test]
    fn common_scaling_preserves_ranking(
        chans in prop::collection::vec((efficiency(), efficiency(), dark(), dark(), 0.01f64..1.0), 2..5),
        k in 0.1f64..10.0,
    ) {
        let base: Vec<f64> = chans.iter().map(|&(s, i, di, ds, f)| car(f * s * i * 1e-3, s, i, di, ds).unwrap()).collect();
        let scaled: Vec<f64> = chans
            .iter()
            .map(|&(s, i, di, ds, f)| car(k * f * s * i * 1e-3, s, i, (k * di).min(1.0), (k * ds).min(1.0)).unwrap())
            .collect();
        for (b, s) in base.iter().zip(&scaled) {
            if chans.iter().all(|c| k * c.2 <= 1.0 && k * c.3 <= 1.0) {
                prop_assert!((s * k - b).abs() <= 1e-9 * b);
            }
        }
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
            idx
        };
        prop_assert_eq!(order(&base), order(&scaled));
        for &(s, i, di, ds, _) in &chans {
            let (c0, _) = optimal_operating_point(s, i, di, ds).unwrap();
            let (c1, _) = optimal_operating_point(s, i, (k * k * di).min(1.0), ds).unwrap();
            if k * k * di <= 1.0 {
                prop_assert!((c1 - k * c0).abs() <= 1e-9 * k * c0);
            }
        }
    }

    #[test]
    fn reference_crossings_hit_the_target(eta_s in efficiency(), eta_i in efficiency(), d_i in dark(), d_s in dark(), frac in 0.05f64..0.95) {
        let (_, car_max) = optimal_operating_point(eta_s, eta_i, d_i, d_s).unwrap();
        let target = 1.0 + frac * (car_max - 1.0);
        if let Some((lo, hi)) = coincidence_at_car(target, eta_s, eta_i, d_i, d_s).unwrap() {
            for c in [lo, hi] {
                prop_assert!((car(c, eta_s, eta_i, d_i, d_s).unwrap() - target).abs() <= 1e-6 * target);
            }
        }
    }

    /// Adding a lowest-priority channel never lowers the multiplexed rate.
    #[test]
    fn extra_channel_never_lowers_rate(
        chans in prop::collection::vec((efficiency(), efficiency(), dark(), dark(), 0.01f64..1.0), 2..5),
    ) {
        let a: Vec<AnalyticChannel> = chans
            .iter()
            .map(|&(s, i, d_i, d_s, f)| AnalyticChannel { c: f * s * i * 1e-2, eta_s: s, eta_i: i, d_i, d_s })
            .collect();
        let labels = |n: usize| (0..n).map(|i| format!("c{i}")).collect::<Vec<_>>();
        let n = a.len();
        let small = MuxTopology::balanced_tree(&labels(n - 1), SwitchSpec::default());
        let big = MuxTopology::balanced_tree(&labels(n), SwitchSpec::default());
        let r0 = mux_prediction(&a[..n - 1], &small).unwrap().coincidence_per_pulse;
        let r1 = mux_prediction(&a, &big).unwrap().coincidence_per_pulse;
        prop_assert!(r1 >= r0);
    }

    #[test]
    fn interpolated_rate_is_bracketed(reference in 2.0f64..14.0) {
        let s = common::scenario(
            &[common::Ch { mu: 0.0128, idler_db: 19.0, signal_db: 33.0, d_i: 2.4e-5, d_s: 1.5e-5 }; 2],
            common::lossless(),
        );
        let opts = MuxCompareOptions { reference_car: reference, scales: log_grid(1e-3, 1e3, 121) };
        let r = compare_mux(&s, &[vec!["ch1".into(), "ch2".into()]], &opts).unwrap();
        let c = &r.configs[0];
        let p = c.at_reference.unwrap();
        let j = c.curve.iter().position(|q| q.scale >= p.scale).unwrap();
        let lo = c.curve[j.saturating_sub(1)].rate_hz;
        let hi = c.curve[j].rate_hz;
        prop_assert!(lo <= p.rate_hz && p.rate_hz <= hi);
        prop_assert!(c.enhancement.unwrap() >= 0.0);
    }
}

fn detector_strategy(role: DetectorRole) -> impl Strategy<Value = DetectorSpec> {
    (0.01f64..=1.0, 0.0f64..1e5, 0.1f64..10.0, 0.0f64..10.0).prop_map(move |(efficiency, dark_rate_hz, gate_window_ns, deadtime_us)| {
        DetectorSpec { efficiency, dark_rate_hz, gate_window_ns, deadtime_us, role }
    })
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (1usize..6)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(
                    (
                        1e-6f64..1.0,
                        prop::option::of(1e-4f64..1.0),
                        0.0f64..40.0,
                        0.0f64..40.0,
                        prop::option::of(1e-6f64..1e-2),
                    ),
                    n,
                ),
                prop::collection::vec(detector_strategy(DetectorRole::Herald), n),
                detector_strategy(DetectorRole::Heralded),
                (0.0f64..3.0, 0u64..200, any::<bool>(), Just(n).prop_perturb(|n, mut rng| {
                    let mut order: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        order.swap(i, rng.random_range(0..=i));
                    }
                    order
                })),
                prop::option::of((10.0f64..500.0, 10.0f64..500.0, 10.0f64..500.0, 1.0f64..60.0, 300.0f64..400.0)),
                (any::<u64>(), 1u64..1_000_000_000_000, 1u32..64, 1u32..500, prop::option::of(1u32..10), any::<bool>()),
            )
        })
        .prop_map(|(chans, herald, heralded, (loss, latency, random, order), spectral, (seed, pulses, shards, windows, cap, thermal))| {
            let channels: Vec<ChannelSpec> = chans
                .iter()
                .enumerate()
                .map(|(i, &(mu, slope, idler, signal, noise))| ChannelSpec {
                    label: format!("src-{i}"),
                    mu,
                    brightness_slope: slope,
                    eta_idler_db: idler,
                    eta_signal_db: signal,
                    max_car: None,
                    signal_noise_prob: noise,
                })
                .collect();
            let labels: Vec<String> = channels.iter().map(|c| c.label.clone()).collect();
            let policy = if random {
                RoutingPolicy::RandomUniform
            } else {
                RoutingPolicy::Priority(order.iter().map(|&i| labels[i].clone()).collect())
            };
            let topology = MuxTopology::balanced_tree(&labels, SwitchSpec { insertion_loss_db: loss, reconfig_latency_pulses: latency })
                .with_policy(policy)
                .unwrap();
            Scenario {
                laser: LaserSpec { rep_rate_hz: 76e6, wavelength_nm: 710.0, bandwidth_ghz: 300.0, pulse_duration_ps: 1.2 },
                channels,
                herald_detectors: herald,
                heralded_detector: heralded,
                topology,
                spectral: spectral.map(|(p, i, s, pm, t)| SpectralSpec {
                    pump_bandwidth_ghz: p,
                    idler_filter_bandwidth_ghz: i,
                    signal_filter_bandwidth_ghz: s,
                    phasematch_bandwidth_nm: pm,
                    center_wavelength_ref_nm: 1550.0,
                    temperature_ref_k: t,
                    tuning_slope_nm_per_k: 4.0,
                }),
                pair_statistics: if thermal { PairStatistics::Thermal } else { PairStatistics::Poisson },
                mc: McSettings { num_pulses: pulses, seed, shards, accidental_windows: windows, photon_cap: cap },
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scenario_file_round_trip(s in scenario_strategy()) {
        s.validate().unwrap();
        let text = to_toml_string(&s).unwrap();
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}
