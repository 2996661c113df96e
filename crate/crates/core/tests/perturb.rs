use cubic_dendrite::config::check_configuration;
use cubic_dendrite::numerics::{Qd, C64};
use cubic_dendrite::perturb::*;
use cubic_dendrite::poly::{seed_omega, seed_polynomial};
use cubic_dendrite::rays::RayOptions;
use cubic_dendrite::Error;

const F1: (C64, C64) = (
    C64::new(8.6656058283165, 0.059672002492800),
    C64::new(5.8731379216063, 0.020430827270432),
);

/// Real root of `p` in `[lo, hi]` by bisection; `p` must change sign on the interval.
fn bisect(p: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(p(lo) * p(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(lo) * p(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn inverse_branch_of_omega_is_the_real_preimage_near_alpha() {
    let f = seed_polynomial::<f64>();
    let cache = RegionCache::new(RayOptions::default());
    let regions = cache.regions(&f).unwrap();
    let w = inverse_branch_preimage(&f, f.a(), &regions).unwrap();
    let (c1, c2) = (f.c1().re, f.c2().re);
    let omega = seed_omega::<f64>();
    // f(z) − ω has a single sign change on [−1/2, 0]
    let root = bisect(|x| x * x * x + c2 * x * x + c1 * x - omega, -0.5, 0.0);
    assert!((w - C64::new(root, 0.0)).norm() < 1e-12, "{w} vs {root}");
}

#[test]
fn omega_chain_recomposes_forward() {
    let f = seed_polynomial::<f64>();
    let cache = RegionCache::new(RayOptions::default());
    let regions = cache.regions(&f).unwrap();
    let chain = omega_minus_chain(&f, 6, &regions).unwrap();
    assert_eq!(chain.len(), 7);
    for (m, z) in chain.iter().enumerate() {
        let back = f.iterate(*z, m).unwrap();
        assert!((back - f.a()).norm() < 1e-9, "m = {m}");
    }
    // the chain converges to α at the rate of its multiplier 9ω²
    let mult = 9.0 * seed_omega::<f64>().powi(2);
    let ratio = chain[6].norm() / chain[5].norm();
    assert!((ratio * mult - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn points_outside_w_have_no_branch() {
    let f = seed_polynomial::<f64>();
    let cache = RegionCache::new(RayOptions::default());
    let regions = cache.regions(&f).unwrap();
    // the ray 1/2 side lies outside the sector between the rays ±5/12
    let far = C64::new(-50.0, 0.0);
    assert_eq!(inverse_branch_preimage(&f, far, &regions), Err(Error::NotInW));
}

#[test]
fn first_perturbation_matches_published_coefficients() {
    let f0 = seed_polynomial::<f64>();
    let step = perturb(&f0, 2, 1, 1, &PerturbOptions::default()).unwrap();
    let (c1, c2) = step.target.coefficients();
    assert!((c1 - F1.0).norm() < 1e-9);
    assert!((c2 - F1.1).norm() < 1e-9);
    assert_eq!((step.k, step.l, step.m), (2, 3, 1));
    assert!(step.role_swap);
    // the real seed gives a conjugate pair of endpoints
    assert!(step.tie_broken);
    assert_eq!(step.candidates.len(), 2);
    assert!((step.candidates[0].0 - step.candidates[1].0.conj()).norm() < 1e-9);
    assert!(check_configuration(&step.target, 2, 3).all_pass());
    assert_eq!(step.omega_chain.len(), 2);
}

#[test]
fn extended_precision_agrees_with_double() {
    let f0 = seed_polynomial::<Qd>();
    let step = perturb(&f0, 2, 1, 1, &PerturbOptions::default()).unwrap();
    let (c1, c2) = step.target.to_f64().coefficients();
    assert!((c1 - F1.0).norm() < 1e-9 && (c2 - F1.1).norm() < 1e-9);
}

#[test]
fn zero_parameters_are_rejected() {
    let f0 = seed_polynomial::<f64>();
    let opts = PerturbOptions::default();
    assert!(matches!(perturb(&f0, 2, 1, 0, &opts), Err(Error::InvalidArgument(_))));
    assert!(matches!(perturb(&f0, 0, 1, 1, &opts), Err(Error::InvalidArgument(_))));
}
