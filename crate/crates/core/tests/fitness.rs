use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use kinetic_ga::FitnessSpec;

fn specs() -> Vec<FitnessSpec> {
    vec![
        FitnessSpec::constant(0.7).unwrap(),
        FitnessSpec::gaussian_bump(1.0, 2.0, 1.0, vec![0.0]).unwrap(),
        FitnessSpec::gaussian_bump(0.2, 5.0, 0.3, vec![1.0, -1.0, 0.5]).unwrap(),
        FitnessSpec::reciprocal_rastrigin(0.1, 10.0, 1).unwrap(),
        FitnessSpec::reciprocal_rastrigin(0.5, 3.0, 2).unwrap(),
    ]
}

fn sample(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn certified_bounds_hold_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for spec in specs() {
        let dim = spec.dim().unwrap_or(1);
        for k in 0..10_000 {
            let x = sample(&mut rng, dim, if k % 2 == 0 { 1.0 } else { 6.0 });
            let f = spec.eval(&x);
            assert!(f >= spec.f_lo() - 1e-12 && f <= spec.f_hi() + 1e-12, "{} at {x:?}: {f}", spec.name());
        }
    }
}

#[test]
fn certified_lipschitz_constant_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for spec in specs() {
        let dim = spec.dim().unwrap_or(1);
        let mut worst = 0.0f64;
        for k in 0..10_000 {
            let x = sample(&mut rng, dim, 3.0);
            let h = if k % 3 == 0 { 1e-3 } else { 0.5 };
            let y: Vec<f64> = x.iter().zip(sample(&mut rng, dim, h)).map(|(a, b)| a + b).collect();
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist > 0.0 {
                worst = worst.max((spec.eval(&x) - spec.eval(&y)).abs() / dist);
            }
        }
        assert!(worst <= spec.lip() * (1.0 + 1e-9), "{}: {worst} > {}", spec.name(), spec.lip());
    }
}

#[test]
fn derived_constants() {
    for spec in specs() {
        let (lo, hi, lip) = (spec.f_lo(), spec.f_hi(), spec.lip());
        assert!((spec.kappa() - hi / lo).abs() < 1e-12);
        let c_f = (1.0 / lo) * (1.0 + hi / lo) * (lip + 2.0 * hi);
        assert!((spec.c_f() - c_f).abs() <= 1e-12 * c_f);
    }
}
