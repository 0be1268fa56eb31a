use latbabai_core::babai::{nearest_plane, round_half_up};
use latbabai_core::error2d::{
    pe_closed_form, pe_closed_form_expanded, pe_geometric_2d, voronoi_cell_2d, voronoi_polygon_2d, ReducedBasis2D,
};
use latbabai_core::error3d::{superbase_from_conorms, voronoi_cell_3d, voronoi_vertices_closed_form};
use latbabai_core::lattice::UpperTriangularBasis;
use latbabai_core::protocol::{encode_all, fusion_decode, modular_decode_check, rationalize};
use latbabai_core::reduction::{conorms, vonorms, ConormSet};
use proptest::prelude::*;

fn reduced_2d() -> impl Strategy<Value = ReducedBasis2D> {
    (-0.5f64..=0.0, 0.0f64..1.0)
        .prop_map(|(a, t)| {
            let b_min = (1.0 - a * a).sqrt();
            ReducedBasis2D::new(a, b_min + t * 2.0).unwrap()
        })
}

/// Conorms of a nondegenerate obtuse superbase; about a third of the draws
/// have some conorm forced to zero so that every cell type is exercised.
fn conorm_set() -> impl Strategy<Value = ConormSet> {
    (prop::array::uniform6(0.05f64..2.0), prop::array::uniform6(0u8..6))
        .prop_map(|(mut c, zero)| {
            for (v, z) in c.iter_mut().zip(zero) {
                if z == 0 {
                    *v = 0.0;
                }
            }
            ConormSet { values: c }
        })
        .prop_filter("nondegenerate", |c| superbase_from_conorms(c).is_ok())
}

/// Upper-triangular basis whose ratios `v_ml / v_mm` are small fractions.
fn rational_upper(n: usize) -> impl Strategy<Value = UpperTriangularBasis> {
    (
        prop::collection::vec(0.3f64..3.0, n),
        prop::collection::vec((-12i64..=12, 1i64..=8), n * n),
    )
        .prop_map(move |(diag, fracs)| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|m| {
                    (0..n)
                        .map(|l| match l {
                            l if l < m => 0.0,
                            l if l == m => diag[m],
                            _ => {
                                let (p, q) = fracs[m * n + l];
                                diag[m] * p as f64 / q as f64
                            }
                        })
                        .collect()
                })
                .collect();
            UpperTriangularBasis::from_rows(&rows).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn voronoi_cell_3d_volume_and_shape(c in conorm_set()) {
        let sb = superbase_from_conorms(&c).unwrap();
        let cell = voronoi_cell_3d(&sb).unwrap();
        let det = sb.basis().unwrap().volume();
        prop_assert!((cell.volume() - det).abs() <= 1e-9 * det.max(1.0), "{} vs {}", cell.volume(), det);
        prop_assert!(cell.is_centrally_symmetric(1e-9));
        prop_assert_eq!(cell.euler_characteristic(), 2);
    }

    #[test]
    fn closed_form_vertices_lie_on_cell(c in conorm_set()) {
        let sb = superbase_from_conorms(&c).unwrap();
        let cell = voronoi_cell_3d(&sb).unwrap();
        let scale = sb.basis().unwrap().volume().cbrt();
        for v in voronoi_vertices_closed_form(&sb).unwrap() {
            prop_assert!(cell.contains(v, 1e-9 * scale));
            let nearest = cell
                .vertices
                .iter()
                .map(|w| ((w[0] - v[0]).powi(2) + (w[1] - v[1]).powi(2) + (w[2] - v[2]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8 * scale);
        }
    }

    #[test]
    fn vonorms_and_conorms_agree(c in conorm_set()) {
        let sb = superbase_from_conorms(&c).unwrap();
        let back = conorms(&sb).unwrap();
        let v = vonorms(&sb).unwrap();
        for k in 0..6 {
            prop_assert!((back.values[k] - c.values[k]).abs() < 1e-9);
        }
        // N(sum_{i in S} v_i) is the total conorm across the cut (S, complement)
        let subsets: [&[usize]; 7] = [&[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3], &[1, 2, 3]];
        for (set, vonorm) in subsets.iter().zip(v.values) {
            let cut: f64 = ConormSet::PAIRS
                .iter()
                .zip(c.values)
                .filter(|((a, b), _)| set.contains(a) != set.contains(b))
                .map(|(_, x)| x)
                .sum();
            prop_assert!((vonorm - cut).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_cell_area_is_b(rb in reduced_2d()) {
        let poly = voronoi_polygon_2d(&rb);
        prop_assert!((poly.area() - rb.b).abs() < 1e-9);
        prop_assert!(poly.is_convex_ccw(1e-12));
        let generic = voronoi_cell_2d(&rb.basis()).unwrap();
        prop_assert!((generic.area() - rb.b).abs() < 1e-9);
    }

    #[test]
    fn planar_closed_form_matches_geometry(rb in reduced_2d()) {
        let closed = pe_closed_form(&rb);
        prop_assert!((closed - pe_closed_form_expanded(&rb)).abs() < 1e-9);
        prop_assert!((closed - pe_geometric_2d(&rb.basis()).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=1.0 / 12.0 + 1e-12).contains(&closed));
    }

    #[test]
    fn fusion_decode_matches_nearest_plane(
        upper in rational_upper(3),
        x in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let profile = rationalize(&upper, 1_000).unwrap();
        let msgs = encode_all(&x, &upper, &profile);
        let fused = fusion_decode(&msgs, &upper, &profile).unwrap();
        prop_assert_eq!(fused, nearest_plane(&upper, &x));
        prop_assert!(modular_decode_check(&upper, &profile, &x).unwrap());
    }

    #[test]
    fn side_information_matches_its_definition(
        upper in rational_upper(3),
        x in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let profile = rationalize(&upper, 1_000).unwrap();
        for msg in encode_all(&x, &upper, &profile) {
            let m = msg.node;
            let q = profile.q_m[m];
            let y = x[m] / upper.get(m, m);
            prop_assert_eq!(msg.b_tilde, round_half_up(y));
            // largest s in [0, q) with round(y - s/q) = round(y)
            let by_search = (0..q).rev().find(|&s| round_half_up(y - s as f64 / q as f64) == msg.b_tilde).unwrap();
            prop_assert_eq!(msg.s, by_search);
        }
    }

    #[test]
    fn profile_is_scale_invariant(upper in rational_upper(3), scale in 0.01f64..100.0) {
        let p = rationalize(&upper, 1_000).unwrap();
        let scaled = rationalize(&upper.scaled(scale).unwrap(), 1_000).unwrap();
        prop_assert_eq!(p, scaled);
    }
}
