use herald_mux::prob::{db_to_transmission, draw_pair_number, thin, PairDistribution, PairStatistics};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SIGNIFICANCE: f64 = 0.01;

fn critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - SIGNIFICANCE)
}

/// Goodness of fit of `counts` (last cell is the tail) to `probs`.
fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Two-sample statistic for histograms with the same binning.
fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    a.iter()
        .zip(b)
        .filter(|(x, y)| **x + **y > 0)
        .map(|(&x, &y)| (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64)
        .sum()
}

fn histogram(samples: impl Iterator<Item = u32>, cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells];
    for s in samples {
        h[(s as usize).min(cells - 1)] += 1;
    }
    h
}

fn pmf_cells(mu: f64, stats: PairStatistics, cells: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..cells - 1)
        .map(|n| match stats {
            PairStatistics::Poisson => {
                (-mu).exp() * mu.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>()
            }
            PairStatistics::Thermal => mu.powi(n as i32) / (1.0 + mu).powi(n as i32 + 1),
        })
        .collect();
    p.push(1.0 - p.iter().sum::<f64>());
    p
}

#[test]
fn pair_numbers_follow_their_distribution() {
    for stats in [PairStatistics::Poisson, PairStatistics::Thermal] {
        let mu = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = histogram((0..1_000_000).map(|_| draw_pair_number(mu, stats, &mut rng).unwrap()), 5);
        let x2 = chi_square(&h, &pmf_cells(mu, stats, 5));
        assert!(x2 < critical(4), "{stats:?}: chi-square {x2}");
    }
}

/// Variance over mean, with an error from 20 independent batches.
fn dispersion(stats: PairStatistics, mu: f64) -> (f64, f64) {
    let d = PairDistribution::new(mu, stats, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ratios: Vec<f64> = (0..20)
        .map(|_| {
            let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng) as f64).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            v / m
        })
        .collect();
    let m = ratios.iter().sum::<f64>() / 20.0;
    let s = (ratios.iter().map(|r| (r - m).powi(2)).sum::<f64>() / 19.0).sqrt();
    (m, s / 20f64.sqrt())
}

#[test]
fn dispersion_distinguishes_the_statistics() {
    let mu = 0.5;
    let (p, pe) = dispersion(PairStatistics::Poisson, mu);
    assert!((p - 1.0).abs() <= 3.0 * pe, "poisson {p} +- {pe}");
    let (t, te) = dispersion(PairStatistics::Thermal, mu);
    assert!((t - (1.0 + mu)).abs() <= 3.0 * te, "thermal {t} +- {te}");
}

#[test]
fn thinned_poisson_is_poisson() {
    let d = PairDistribution::new(0.01, PairStatistics::Poisson, None).unwrap();
    let direct = Poisson::new(0.005).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000_000;
    let thinned = histogram((0..n).map(|_| thin(d.sample(&mut rng), 0.5, &mut rng)), 3);
    let reference = histogram((0..n).map(|_| direct.sample(&mut rng) as u32), 3);
    let x2 = chi_square_two_sample(&thinned, &reference);
    assert!(x2 < critical(2), "chi-square {x2}: {thinned:?} vs {reference:?}");
    let x2 = chi_square(&thinned, &pmf_cells(0.005, PairStatistics::Poisson, 3));
    assert!(x2 < critical(2), "against the pmf: {x2}");
}

#[test]
fn thinning_composes_in_db() {
    let (a, b) = (1.7, 2.9);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ta = db_to_transmission(a).unwrap();
    let tb = db_to_transmission(b).unwrap();
    let tab = db_to_transmission(a + b).unwrap();
    let n = 1_000_000;
    let two_step = histogram((0..n).map(|_| thin(thin(5, ta, &mut rng), tb, &mut rng)), 6);
    let one_step = histogram((0..n).map(|_| thin(5, tab, &mut rng)), 6);
    let x2 = chi_square_two_sample(&two_step, &one_step);
    assert!(x2 < critical(5), "chi-square {x2}");
}

#[test]
fn capped_distribution_keeps_total_mass() {
    let d = PairDistribution::new(0.8, PairStatistics::Thermal, Some(3)).unwrap();
    let total: f64 = (0..=d.max_n()).map(|n| d.pmf(n)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(d.max_n(), 3);
}
