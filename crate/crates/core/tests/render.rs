use cubic_dendrite::numerics::{CircleAngle, C64};
use cubic_dendrite::poly::seed_polynomial;
use cubic_dendrite::puzzle::build_puzzle;
use cubic_dendrite::rays::RayOptions;
use cubic_dendrite::render::*;

fn job(pixels: (u32, u32)) -> RenderJob {
    RenderJob::new(
        seed_polynomial(),
        Viewport {
            center: C64::new(-2.0, 0.0),
            width: 6.0,
            pixels,
        },
    )
}

#[test]
fn viewport_maps_pixels_both_ways() {
    let vp = job((200, 100)).viewport;
    let z = vp.point(0, 0);
    assert!((z - C64::new(-4.985, 1.485)).norm() < 1e-12);
    let (x, y) = vp.to_pixel(z);
    assert!((x - 0.5).abs() < 1e-9 && (y - 0.5).abs() < 1e-9);
}

#[test]
fn escape_count_matches_direct_iteration() {
    let f = seed_polynomial::<f64>();
    let r = f.escape_radius();
    for z in [C64::new(3.0, 2.0), C64::new(0.5, 1.0), C64::new(-4.5, 0.0)] {
        let mut w = z;
        let mut n = 0;
        while w.norm() <= r {
            w = f.eval(w);
            n += 1;
        }
        assert_eq!(escape_count(&f, z, ITERATION_BUDGET), Some(n));
    }
    // the critical points do not escape
    assert_eq!(escape_count(&f, f.a(), ITERATION_BUDGET), None);
    assert_eq!(escape_count(&f, f.b(), ITERATION_BUDGET), None);
}

#[test]
fn rendering_is_deterministic_across_thread_counts() {
    let mut j = job((120, 80));
    j.rays = vec![CircleAngle::new(1, 3), CircleAngle::new(1, 4)];
    j.markers.push(Marker {
        label: "omega".into(),
        point: seed_polynomial::<f64>().a(),
    });
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let a = pool(1).install(|| render(&j).unwrap());
    let b = pool(4).install(|| render(&j).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.skipped_rays, 0);
    assert!(a.to_ppm().starts_with(b"P6\n120 80\n255\n"));
    assert_eq!(a.to_ppm().len(), 14 + 3 * 120 * 80);
}

#[test]
fn real_polynomial_image_is_symmetric() {
    // with an even height the real axis lies between two pixel rows
    let img = render(&job((90, 60))).unwrap();
    for y in 0..30 {
        for x in 0..90 {
            assert_eq!(img.pixel(x, y), img.pixel(x, 59 - y), "({x}, {y})");
        }
    }
}

#[test]
fn overlays_use_their_colors() {
    let f = seed_polynomial::<f64>();
    let mut j = job((200, 120));
    j.markers.push(Marker {
        label: "alpha".into(),
        point: C64::new(0.0, 0.0),
    });
    let img = render(&j).unwrap();
    let (x, y) = j.viewport.to_pixel(C64::new(0.0, 0.0));
    assert_eq!(img.pixel(x as u32, y as u32), MARKER_COLOR);

    let plain = render(&job((200, 120))).unwrap();
    j.markers.clear();
    j.rays = vec![CircleAngle::new(1, 4)];
    let with_ray = render(&j).unwrap();
    let white = (0..120)
        .flat_map(|y| (0..200).map(move |x| (x, y)))
        .filter(|&(x, y)| with_ray.pixel(x, y) == RAY_COLOR && plain.pixel(x, y) != RAY_COLOR)
        .count();
    assert!(white > 20);

    j.rays.clear();
    j.puzzle = Some(build_puzzle(&f, 1, &RayOptions::default()).unwrap());
    let with_puzzle = render(&j).unwrap();
    assert_ne!(with_puzzle, plain);
}

#[test]
fn empty_viewport_is_rejected() {
    assert!(render(&job((0, 10))).is_err());
    let mut j = job((10, 10));
    j.viewport.width = f64::NAN;
    assert!(render(&j).is_err());
}
