use cubic_dendrite::config::Configuration;
use cubic_dendrite::dendrite::*;
use cubic_dendrite::numerics::{CircleAngle, C64};
use cubic_dendrite::perturb::{perturb, PerturbOptions};
use cubic_dendrite::poly::seed_polynomial;
use cubic_dendrite::rays::{potential, trace_ray, RayOptions, START_POTENTIAL};
use cubic_dendrite::Error;

fn ang(p: i128, q: u128) -> CircleAngle {
    CircleAngle::new(p, q)
}

#[test]
fn separation_is_pure_combinatorics() {
    let q = [ang(0, 1), ang(1, 4), ang(1, 2), ang(3, 4)];
    assert_eq!(separation(&q, &[ang(1, 8), ang(3, 8), ang(5, 8)]), Some([0, 1, 2]));
    assert_eq!(separation(&q, &[ang(1, 8), ang(1, 9), ang(5, 8)]), None);
    // an angle of the set itself lies in no open arc
    assert_eq!(arc_index(&q, &ang(1, 4)), None);
    assert_eq!(separation(&q, &[ang(1, 4), ang(3, 8), ang(5, 8)]), None);
    assert_eq!(arc_index(&q, &ang(7, 8)), Some(3));
}

#[test]
fn seed_critical_angles_follow_the_critical_orbit() {
    let f = seed_polynomial::<f64>();
    let crit = critical_angles(&f, 2, 1, &RayOptions::default()).unwrap();
    // ω′ is a preimage of α = 0, whose only ray is 0
    for a in crit.omega_prime {
        assert_eq!(a.triple(), CircleAngle::ZERO);
    }
    for a in crit.omega {
        assert!(crit.omega_prime.contains(&a.triple_n(2)), "{a}");
    }
    // the critical point pairs its angles
    assert_eq!(crit.omega[0].triple(), crit.omega[2].triple());
    assert_eq!(crit.omega[1].triple(), crit.omega[3].triple());
    // independent check: every ray ends near its critical point
    let opts = RayOptions::default();
    for (angles, z) in [(&crit.omega_prime[..], f.b()), (&crit.omega[..], f.a())] {
        for a in angles {
            let ray = trace_ray(&f, *a, START_POTENTIAL, DEEP_POTENTIAL, &opts).unwrap();
            assert!((ray.last_point() - z).norm() < 1e-3, "{a}");
        }
    }
}

#[test]
fn pull_back_set_splits_into_three_classes() {
    let f = seed_polynomial::<f64>();
    let crit = critical_angles(&f, 2, 1, &RayOptions::default()).unwrap();
    let sets = pull_back_set(&crit.omega, &crit.leaves()).unwrap();
    assert_eq!(sets.len(), 3);
    let mut all: Vec<CircleAngle> = sets.iter().flatten().copied().collect();
    all.sort();
    let mut expected: Vec<CircleAngle> = crit.omega.iter().flat_map(|a| a.preimages()).collect();
    expected.sort();
    assert_eq!(all, expected);
    for s in &sets {
        let mut image: Vec<CircleAngle> = s.iter().map(|a| a.triple()).collect();
        image.sort();
        assert_eq!(image, crit.omega.to_vec());
    }
}

#[test]
fn seed_branching_point_is_the_critical_point() {
    let f = seed_polynomial::<f64>();
    let opts = RayOptions::default();
    let br = locate_branching_point(&f, 2, 1, 3, &opts).unwrap();
    assert_eq!(br.j, 0);
    assert!((br.xi - f.a()).norm() < 1e-12);
    assert!(br.cluster_radius() < CLUSTER_TOLERANCE);
    let s = br.separation;
    assert!(s[0] != s[1] && s[1] != s[2] && s[0] != s[2]);
    let rep = verify_admissible(&f, Configuration::new(0, 2, 1), &br, &opts);
    assert!(rep.all_pass(), "{rep}");
    let found = find_branching_point(&f, Configuration::new(0, 2, 1), &opts).unwrap();
    assert_eq!(found.angles, br.angles);
}

#[test]
fn first_member_branching_point_maps_onto_omega() {
    let f0 = seed_polynomial::<f64>();
    let f1 = perturb(&f0, 2, 1, 1, &PerturbOptions::default()).unwrap().target;
    let opts = RayOptions::default();
    let br = locate_branching_point(&f1, 2, 3, 5, &opts).unwrap();
    // j of the new member is j + k of the seed
    assert_eq!(br.j, 2);
    let w = f1.iterate(br.xi, 2).unwrap();
    assert!((w - f1.a()).norm() < 1e-8);
    for a in br.angles {
        let ray = trace_ray(&f1, a, START_POTENTIAL, DEEP_POTENTIAL, &opts).unwrap();
        assert!((ray.last_point() - br.xi).norm() < CLUSTER_TOLERANCE, "{a}");
    }
    let rep = verify_admissible(&f1, Configuration::new(2, 2, 3), &br, &opts);
    assert!(rep.all_pass(), "{rep}");
}

#[test]
fn exact_nodal_point_needs_separation() {
    let f = seed_polynomial::<f64>();
    let br = locate_branching_point(&f, 2, 1, 3, &RayOptions::default()).unwrap();
    let np = nodal_point_exact(&br, &test_angles()).unwrap();
    assert_eq!(np.point, br.xi);
    assert_eq!(np.coincides_with, None);
    let clustered = [ang(1, 2), ang(499, 1000), ang(501, 1000)];
    assert_eq!(nodal_point_exact(&br, &clustered), Err(Error::NotSeparated));
}

#[test]
fn loop_samples_sit_on_the_equipotential() {
    let f = seed_polynomial::<f64>();
    let lp = approximate_loop(&f, 256, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    assert_eq!(lp.len(), 256);
    assert_eq!(lp.gaps(), 0);
    for p in lp.points.iter().flatten() {
        let g = potential(&f, *p);
        assert!((g / LOOP_POTENTIAL - 1.0).abs() < 1e-3, "potential {g:e}");
    }
    // real polynomial: the loop is symmetric under conjugation
    for (i, p) in lp.points.iter().enumerate().skip(1) {
        let q = lp.points[256 - i];
        assert!((p.unwrap() - q.unwrap().conj()).norm() < 1e-9);
    }
    let finer = approximate_loop(&f, 512, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    assert!(finer.max_spacing() < lp.max_spacing());
    assert!(lp.sup_distance(&finer).is_err());
}

#[test]
fn loop_nodal_point_is_near_the_branching_point() {
    let f = seed_polynomial::<f64>();
    let lp = approximate_loop(&f, 1024, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    let np = nodal_point_loop(&lp, &test_angles()).unwrap();
    assert!((np.point - f.a()).norm() < 3.0 * lp.max_spacing());
    let mut csv = Vec::new();
    lp.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1025);
}

#[test]
fn loops_below_the_sample_floor_are_rejected() {
    let f = seed_polynomial::<f64>();
    let lp = approximate_loop(&f, MIN_NODAL_SAMPLES - 1, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    assert!(nodal_point_loop(&lp, &test_angles()).is_err());
}

#[test]
fn four_sample_loop_visits_the_fixed_points() {
    let f = seed_polynomial::<f64>();
    let lp = approximate_loop(&f, 4, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    let beta = C64::new(-3.958621655489772, 0.0);
    let gamma = C64::new(-1.958621655, 0.0);
    let near = [C64::new(0.0, 0.0), gamma, beta, gamma];
    for (p, z) in lp.points.iter().zip(near) {
        // rays approach repelling fixed points quickly, so the ends sit well inside 1e-2
        assert!((p.unwrap() - z).norm() < 1e-2, "{p:?} vs {z}");
    }
    assert_eq!(lp.angles[0], CircleAngle::ZERO);
}

#[test]
fn alpha_preimage_fan_meets_at_the_second_critical_point() {
    let f = seed_polynomial::<f64>();
    let lp = approximate_loop(&f, 2048, LOOP_POTENTIAL, &RayOptions::default()).unwrap();
    let fan = [CircleAngle::ZERO, ang(1, 3), ang(2, 3)];
    let np = nodal_point_loop(&lp, &fan).unwrap();
    assert!((np.point - C64::new(-2.958621655489772, 0.0)).norm() < np.tolerance);
}
