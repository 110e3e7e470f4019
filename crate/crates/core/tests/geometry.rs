mod common;

use common::fd_shape;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reflected_flow::geometry::{calibrate_pipi_constant, check_global_k, estimate_global_k, pipi_pipi_bound_check};
use reflected_flow::linalg::{from_slice, op_norm};
use reflected_flow::{Hypersurface, Orientation, Vector};

fn surfaces() -> Vec<Hypersurface> {
    vec![
        Hypersurface::ball(3, 1.0),
        Hypersurface::ellipsoid(&[2.0, 1.0, 0.5]),
        Hypersurface::parabola(0.25),
        Hypersurface::parabola(1.0).with_orientation(Orientation::AgainstGradient),
    ]
}

#[test]
fn shape_operator_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for s in surfaces() {
        for x in s.sample_points(1.5, 50, &mut rng).unwrap() {
            let exact = s.shape_operator(&x).unwrap().matrix;
            let fd = fd_shape(&s, &x, 1e-5);
            assert!((exact - fd).abs().max() < 1e-6, "{} at {:?}", s.label(), x.as_slice());
        }
    }
}

#[test]
fn scaled_parabola_vertex_norm() {
    let s = Hypersurface::parabola(0.25);
    let op = s.shape_operator(&from_slice(&[0.0, 0.0])).unwrap();
    assert!((op_norm(&op.matrix) - 0.5).abs() < 1e-15);
}

#[test]
fn calibrated_constants_hold_on_fresh_samples() {
    for s in surfaces() {
        let est = estimate_global_k(&s, 1.5, 1.0, 2000, 1).unwrap();
        let check = check_global_k(&s, 1.5, 1.0, 2.0 * est.k, 2000, 2).unwrap();
        assert!(check.holds(), "{}: {:?}", s.label(), check.inequalities);
    }
}

#[test]
fn pipi_constant_transfers() {
    let s = Hypersurface::ellipsoid(&[1.5, 1.0, 1.0]);
    let c = calibrate_pipi_constant(&s, 2.0, 2000, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = s.sample_points(2.0, 400, &mut rng).unwrap();
    for q in pts.chunks_exact(4) {
        assert!(pipi_pipi_bound_check(&s, &q[0], &q[1], &q[2], &q[3], 2.0 * c).unwrap().holds);
    }
}

fn sphere_point() -> impl Strategy<Value = Vector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(a, b, c)| a * a + b * b + c * c > 1e-4)
        .prop_map(|(a, b, c)| from_slice(&[a, b, c]).normalize() * 2.0)
}

proptest! {
    #[test]
    fn projector_and_shape_invariants(x in sphere_point(), tilt in 0.5f64..2.0) {
        for s in [Hypersurface::ball(3, 2.0), Hypersurface::ellipsoid(&[2.0, 2.0 * tilt, 1.0])] {
            let x = s.nearest_point(&x).unwrap();
            let p = s.tangent_project(&x).unwrap();
            let pi = &p.matrix;
            prop_assert!((pi * pi - pi).abs().max() < 1e-14);
            prop_assert!((pi - pi.transpose()).abs().max() == 0.0);
            prop_assert!((op_norm(pi) - 1.0).abs() < 1e-12);
            let sh = s.shape_operator(&x).unwrap().matrix;
            prop_assert!((&sh * &p.normal).norm() < 1e-12);
            prop_assert!((&sh * pi - pi * &sh).abs().max() < 1e-12);
        }
    }
}
