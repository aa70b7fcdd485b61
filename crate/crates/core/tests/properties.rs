use std::sync::Arc;

use proptest::prelude::*;

use foliated::functional::{eval_objective, lp_norm, phi, psi};
use foliated::grid::{parse_dump, reflect_field, write_dump};
use foliated::rearrange::{
    check_h_order, defects_about, foliated_symmetrize, grid_half_planes, mollify, symmetry_report,
    two_point_rearrange,
};
use foliated::{
    build_polar_grid, FSpec, Field, HOrder, Mirror, PolarGrid, ProblemParams, RadialDomain,
};

fn grid_strategy() -> impl Strategy<Value = Arc<PolarGrid>> {
    (2usize..7, 1usize..5, prop::bool::ANY).prop_map(|(n_r, q, annulus)| {
        let dom = if annulus {
            RadialDomain::annulus(0.4, 1.0).unwrap()
        } else {
            RadialDomain::unit_disk()
        };
        build_polar_grid(dom, n_r, 4 * q).unwrap()
    })
}

fn grid_and_field() -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec(-3.0f64..3.0, g.len())
            .prop_map(move |v| Field::new(&g, v).unwrap())
    })
}

fn ring_multisets(f: &Field) -> Vec<Vec<f64>> {
    let g = f.grid();
    (0..g.n_r)
        .map(|i| {
            let mut v: Vec<f64> = (0..g.n_a).map(|j| f.get(i, j)).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect()
}

proptest! {
    #[test]
    fn psi_phi_roundtrip(x in -1e3f64..1e3, theta in 0.0f64..0.49) {
        let y = phi(psi(x, theta), theta);
        prop_assert!((y - x).abs() <= 1e-12 * x.abs().max(1e-12));
    }

    #[test]
    fn two_point_is_idempotent_permutation(f in grid_and_field(), k in 0usize..64) {
        let hs = grid_half_planes(f.grid());
        let h = hs[k % hs.len()];
        let fh = two_point_rearrange(&f, h).unwrap();
        prop_assert_eq!(ring_multisets(&f), ring_multisets(&fh));
        let again = two_point_rearrange(&fh, h).unwrap();
        prop_assert_eq!(again.values(), fh.values());
        prop_assert_eq!(check_h_order(&fh, h, 0.0).unwrap(), HOrder::IsUH);
    }

    #[test]
    fn foliated_output_is_ordered_for_every_facing_half_plane(f in grid_and_field()) {
        let s = foliated_symmetrize(&f);
        prop_assert_eq!(ring_multisets(&f), ring_multisets(&s));
        let again = foliated_symmetrize(&s);
        prop_assert_eq!(again.values(), s.values());
        for h in grid_half_planes(f.grid()) {
            if h.normal_angle.cos() > 1e-12 {
                prop_assert_eq!(check_h_order(&s, h, 0.0).unwrap(), HOrder::IsUH);
            }
        }
        prop_assert_eq!(defects_about(&s, 0).unwrap().foliated_defect, 0.0);
    }

    #[test]
    fn objective_invariant_under_grid_mirrors(f in grid_and_field(), k in 0usize..64, theta in 0.0f64..0.45) {
        let g = f.grid();
        let params = ProblemParams::new(theta, 2.5, FSpec::power_law(0.1, 2.0), g.domain).unwrap();
        let hs = grid_half_planes(g);
        let m = reflect_field(&f, Mirror::HalfPlane(hs[k % hs.len()])).unwrap();
        let (a, b) = (eval_objective(&params, &f), eval_objective(&params, &m));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let r = f.rotate_steps(k as i64);
        let c = eval_objective(&params, &r);
        prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!((lp_norm(&f, 2.5) - lp_norm(&r, 2.5)).abs() <= 1e-12);
    }

    #[test]
    fn mollify_keeps_constants_and_order(f in grid_and_field(), eps in 0.05f64..2.0, k in 0usize..64) {
        let g = f.grid();
        let c = mollify(&Field::constant(g, 1.7), eps).unwrap();
        prop_assert!(c.values().iter().all(|&x| (x - 1.7).abs() < 1e-12));
        let hs = grid_half_planes(g);
        let h = hs[k % hs.len()];
        let fh = two_point_rearrange(&f, h).unwrap();
        prop_assert_eq!(check_h_order(&mollify(&fh, eps).unwrap(), h, 1e-12).unwrap(), HOrder::IsUH);
    }

    #[test]
    fn report_is_rotation_equivariant(f in grid_and_field(), k in 0i64..16) {
        let a = symmetry_report(&f).unwrap();
        let b = symmetry_report(&f.rotate_steps(k)).unwrap();
        prop_assert!((a.foliated_defect - b.foliated_defect).abs() <= 1e-9);
    }

    #[test]
    fn dump_roundtrip(f in grid_and_field()) {
        let back = parse_dump(&write_dump(&f)).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert!(back.grid().same_layout(f.grid()));
    }
}
