use cusplab::ergodic::{
    birkhoff_lyapunov, density_histogram, entropy_word_count, geometric_radii, local_dimension,
    sample_bernoulli_measure,
};
use cusplab::maps::OrbitStart;
use cusplab::{OpenInterval, PiecewiseMap, Point};

fn halves() -> [OpenInterval; 2] {
    [OpenInterval::new(0.0, 0.5).unwrap(), OpenInterval::new(0.5, 1.0).unwrap()]
}

fn interior_points(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().filter(|x| (0.05..=0.95).contains(x)).take(500).collect()
}

/// `h / chi` from word counts and Birkhoff sums against the pooled slope.
/// Word lengths are chosen so `log N / n` stays above the counted rate.
#[test]
fn dimension_matches_entropy_over_exponent() {
    let g = PiecewiseMap::g_alpha(0.5).unwrap();
    let conj = *g.conjugacy().unwrap();
    let radii = geometric_radii(1e-7, 0.1, 40);

    let h = entropy_word_count(&g, &halves(), OrbitStart::Invariant, 1_000_000, &[12], 1).unwrap().rates[0].1;
    let chi = birkhoff_lyapunov(&g, OrbitStart::Invariant, 1_000_000, 0, 1).unwrap().chi;
    let uniform = |n: usize, seed: u64| -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| conj.from_uniform(rng.gen())).collect()
    };
    let dim = local_dimension(&interior_points(&uniform(5_000, 5)), &uniform(1_000_000, 6), &radii)
        .unwrap()
        .pooled;
    assert!((dim - h / chi).abs() < 0.05, "acip: {dim} vs {}", h / chi);

    let h = entropy_word_count(&g, &halves(), OrbitStart::Bernoulli(0.3), 1_000_000, &[20], 1).unwrap().rates[0].1;
    let chi = birkhoff_lyapunov(&g, OrbitStart::Bernoulli(0.3), 1_000_000, 0, 1).unwrap().chi;
    let push = |xs: Vec<f64>| -> Vec<f64> { xs.iter().map(|&t| conj.from_tent(&Point::unit(t)).x()).collect() };
    let samples = push(sample_bernoulli_measure(0.3, 50, 1_000_000, 7).unwrap());
    let points = push(sample_bernoulli_measure(0.3, 50, 5_000, 8).unwrap());
    let dim = local_dimension(&interior_points(&points), &samples, &radii).unwrap().pooled;
    assert!((dim - h / chi).abs() < 0.05, "Bernoulli: {dim} vs {}", h / chi);
}

#[test]
fn acip_density_is_bounded_below_on_the_central_half() {
    let g = PiecewiseMap::g_alpha(0.5).unwrap();
    let conj = g.conjugacy().unwrap();
    let est = density_histogram(&g, OrbitStart::Invariant, 1_000_000, 100, 3).unwrap();
    let exact_min = (25..75)
        .map(|i| conj.log_density(&Point::unit(i as f64 / 100.0)).exp())
        .fold(f64::INFINITY, f64::min);
    let dens = est.densities();
    let observed = dens[25..75].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(exact_min > 0.1);
    assert!(observed > 0.5 * exact_min, "{observed} vs {exact_min}");
}
