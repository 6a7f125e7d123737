use super::graph::{materialize, DEFAULT_MATERIALIZE_CAP};
use super::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_matches_dijkstra(space: &MetricSpace, label: &str) {
    let g = materialize(space, DEFAULT_MATERIALIZE_CAP).unwrap();
    let points = g.labels().to_vec();
    for (i, x) in points.iter().enumerate() {
        let dist = g.dijkstra(i);
        for (j, y) in points.iter().enumerate() {
            let lazy = space.distance(x, y).unwrap();
            let oracle = dist[j].unwrap();
            assert_eq!(lazy, oracle, "{label}: d({x}, {y})");
        }
    }
}

#[test]
fn line_metric_basics() {
    let sp = line_metric(4).unwrap();
    assert_eq!(sp.distance(&sp.s(), &sp.t()).unwrap(), len(4));
    assert_eq!(sp.diameter(), len(4));
    assert_eq!(sp.distance(&PointAddr::base(1), &PointAddr::base(3)).unwrap(), len(2));
    assert_eq!(sp.point_count(), 5);

    let two = line_metric(1).unwrap();
    assert_eq!(two.distance(&two.s(), &two.t()).unwrap(), len(1));

    assert!(line_metric(0).is_err());
}

#[test]
fn basic_diamond_level_one_is_a_hexagon() {
    let sp = diamond_basic(1, &[1]).unwrap();
    assert_eq!(sp.point_count(), 6);
    assert_eq!(sp.distance(&sp.s(), &sp.t()).unwrap(), len(3));
    assert_eq!(sp.diameter(), len(3));
    let g = materialize(&sp, 100).unwrap();
    assert_eq!(g.vertex_count(), 6);
    assert_eq!(g.edges().len(), 6);
    assert!(g.edges().iter().all(|(_, _, w)| *w == len(1)), "unit edges");
}

#[test]
fn basic_diamond_level_zero_is_an_edge() {
    let sp = diamond_basic(0, &[]).unwrap();
    assert_eq!(sp.point_count(), 2);
    assert_eq!(sp.distance(&sp.s(), &sp.t()).unwrap(), len(1));
}

#[test]
fn basic_diamond_matches_dijkstra() {
    let sp = diamond_basic(2, &[1, 1]).unwrap();
    assert_eq!(sp.point_count(), 30);
    assert_matches_dijkstra(&sp, "basic w=2 m=(1,1)");

    let sp = diamond_basic(1, &[2]).unwrap();
    assert_matches_dijkstra(&sp, "basic w=1 m=(2)");
}

#[test]
fn m_sequence_validation() {
    assert!(diamond_basic(1, &[]).is_err());
    assert!(diamond_basic(2, &[2, 1]).is_err());
    assert!(diamond_basic(1, &[0]).is_err());
}

#[test]
fn refined_terminal_distance_triples_per_level() {
    // alpha = 2 makes every level recursive (base level w0 = 0).
    for beta in [2u32, 4] {
        let base = diamond_refined(0, beta, len(2)).unwrap();
        assert_eq!(base.distance(&base.s(), &base.t()).unwrap(), len(beta as i64));
        for w in 1..=3u32 {
            let sp = diamond_refined(w, beta, len(2)).unwrap();
            let d = sp.distance(&sp.s(), &sp.t()).unwrap();
            assert_eq!(d, len(beta as i64 * 3i64.pow(w)));
            assert_eq!(sp.diameter(), d);
            assert!(sp.point_count() <= beta as u64 * 6u64.pow(w));
        }
    }
}

#[test]
fn refined_base_case_depends_on_alpha() {
    // With the paper coupling alpha is tiny, so desk-scale w stays the line.
    let sp = diamond_refined(4, 8, frac(1, 100)).unwrap();
    assert_eq!(sp.point_count(), 9);
    assert_eq!(sp.diameter(), len(8));
    // alpha = 1: w = 1 is still base, w = 2 has one recursive level.
    assert_eq!(diamond_refined(1, 4, len(1)).unwrap().point_count(), 5);
    assert_eq!(diamond_refined(2, 4, len(1)).unwrap().point_count(), 24);
    assert!(diamond_refined(2, 1, len(1)).is_err(), "beta >= 2");
}

#[test]
fn refined_gluing_identifications() {
    let sp = diamond_refined(1, 4, len(2)).unwrap(); // one level over line(4)
    // Inner s of copy (L,1) is the global s.
    let raw = PointAddr::new(vec![sel(Side::Left, 1)], 0);
    assert_eq!(sp.canonicalize(&raw).unwrap(), sp.s());
    // Inner s of copy (R,1) is also the global s.
    let raw = PointAddr::new(vec![sel(Side::Right, 1)], 0);
    assert_eq!(sp.canonicalize(&raw).unwrap(), sp.s());
    // Inner t of copy (R,3) is the global t (canonical form is on the left).
    let raw = PointAddr::new(vec![sel(Side::Right, 3)], 4);
    assert_eq!(sp.canonicalize(&raw).unwrap(), sp.t());
    // Junction: t of (L,1) == s of (L,2); canonical is the earlier copy.
    let a = PointAddr::new(vec![sel(Side::Left, 1)], 4);
    let b = PointAddr::new(vec![sel(Side::Left, 2)], 0);
    assert_eq!(sp.canonicalize(&b).unwrap(), a);
    // Equivalent addresses are at distance 0 even before canonicalization.
    assert_eq!(sp.distance(&a, &b).unwrap(), len(0));
    // Out-of-range rejections.
    assert!(sp.canonicalize(&PointAddr::new(vec![sel(Side::Left, 4)], 0)).is_err());
    assert!(sp.canonicalize(&PointAddr::new(vec![sel(Side::Left, 1)], 9)).is_err());
    assert!(sp.canonicalize(&PointAddr::base(0)).is_err(), "too shallow");
}

#[test]
fn refined_two_levels_matches_dijkstra() {
    for beta in [2u32, 4] {
        let sp = diamond_refined(2, beta, len(2)).unwrap();
        assert!(sp.point_count() <= beta as u64 * 36);
        assert_matches_dijkstra(&sp, "refined 2-level");
    }
}

#[test]
fn refined_random_pairs_match_dijkstra_at_depth_three() {
    let sp = diamond_refined(3, 2, len(2)).unwrap();
    let g = materialize(&sp, DEFAULT_MATERIALIZE_CAP).unwrap();
    let points = g.labels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let x = points.choose(&mut rng).unwrap();
        let y = points.choose(&mut rng).unwrap();
        let i = g.vertex_of(x).unwrap();
        let j = g.vertex_of(y).unwrap();
        let oracle = g.dijkstra(i)[j].unwrap();
        assert_eq!(sp.distance(x, y).unwrap(), oracle);
    }
}

#[test]
fn lgt_variant_structure() {
    // Level 1, m = (2): path = edge(1/2) + 4 half-scale copies + 4 full.
    let sp = lgt_variant(1, &[2]).unwrap();
    let d = sp.distance(&sp.s(), &sp.t()).unwrap();
    assert_eq!(d, frac(1, 2) + len(2) + len(4));
    assert_eq!(sp.diameter(), d);
    // The initial extra edge has length C_w/m_w <= 1.
    assert_eq!(lgt_constant(0), 1);
    assert_eq!(lgt_constant(1), 2);
    assert_eq!(lgt_constant(2), 3);
    assert_eq!(lgt_constant(3), 4);
    assert_eq!(lgt_constant(4), 6);
    // m < C_w is rejected (the edge would exceed the copy scale contract).
    assert!(lgt_variant(2, &[1, 1]).is_err());
    assert_matches_dijkstra(&sp, "lgt w=1 m=(2)");
    let sp2 = lgt_variant(2, &[2, 2]).unwrap();
    assert_matches_dijkstra(&sp2, "lgt w=2 m=(2,2)");
}

#[test]
fn lgt_scaled_copy_diameter() {
    // Second segment of the top level is a 1/m-scaled copy.
    let sp = lgt_variant(2, &[2, 3]).unwrap();
    let child = lgt_variant(1, &[2]).unwrap();
    let child_diam = child.diameter();
    // Entry and exit junctions of the first scaled copy (index 2).
    let a = PointAddr::new(vec![sel(Side::Left, 1)], 1); // end of the edge
    let b = sp
        .canonicalize(&{
            let inner = child.t();
            inner.embed(Side::Left, 2)
        })
        .unwrap();
    assert_eq!(sp.distance(&a, &b).unwrap(), child_diam / len(3));
}

#[test]
fn symmetry_and_triangle_inequality_sampled() {
    let spaces = vec![
        diamond_basic(2, &[1, 2]).unwrap(),
        diamond_refined(2, 4, len(2)).unwrap(),
        lgt_variant(2, &[2, 2]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for sp in &spaces {
        let points = sp.enumerate_points(DEFAULT_MATERIALIZE_CAP).unwrap();
        for _ in 0..10_000 {
            let x = points.choose(&mut rng).unwrap();
            let y = points.choose(&mut rng).unwrap();
            let z = points.choose(&mut rng).unwrap();
            let dxy = sp.distance(x, y).unwrap();
            let dyx = sp.distance(y, x).unwrap();
            assert_eq!(dxy, dyx, "symmetry");
            assert_eq!(dxy == len(0), x == y, "identity of indiscernibles");
            let dxz = sp.distance(x, z).unwrap();
            let dzy = sp.distance(z, y).unwrap();
            assert!(dxy <= dxz + dzy, "triangle: {x} {y} {z}");
        }
    }
}

#[test]
fn enumerate_is_canonical_and_distinct() {
    let sp = diamond_refined(2, 2, len(2)).unwrap();
    let points = sp.enumerate_points(1000).unwrap();
    assert_eq!(points.len() as u64, sp.point_count());
    for p in &points {
        assert_eq!(&sp.canonicalize(p).unwrap(), p);
    }
    for (i, x) in points.iter().enumerate() {
        for y in points.iter().skip(i + 1) {
            assert_ne!(sp.distance(x, y).unwrap(), len(0), "{x} vs {y}");
        }
    }
}

#[test]
fn materialize_cap() {
    let sp = diamond_refined(2, 4, len(2)).unwrap();
    assert!(matches!(materialize(&sp, 10), Err(crate::Error::CapExceeded { .. })));
}

#[test]
fn line_materializes_to_path_graph() {
    let sp = line_metric(4).unwrap();
    let g = materialize(&sp, 100).unwrap();
    assert_eq!(g.vertex_count(), 5);
    assert_eq!(g.edges().len(), 4);
}

#[test]
fn reflection_is_an_isometric_involution() {
    let spaces = vec![diamond_basic(2, &[1, 2]).unwrap(), diamond_refined(2, 4, len(2)).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sp in &spaces {
        assert_eq!(sp.reflect(&sp.s()).unwrap(), sp.t());
        assert_eq!(sp.reflect(&sp.t()).unwrap(), sp.s());
        let points = sp.enumerate_points(DEFAULT_MATERIALIZE_CAP).unwrap();
        for _ in 0..500 {
            let x = points.choose(&mut rng).unwrap();
            let y = points.choose(&mut rng).unwrap();
            let rx = sp.reflect(x).unwrap();
            let ry = sp.reflect(y).unwrap();
            assert_eq!(sp.reflect(&rx).unwrap(), *x, "involution");
            assert_eq!(sp.distance(&rx, &ry).unwrap(), sp.distance(x, y).unwrap());
        }
    }
    // The bounded-width variant is asymmetric under s<->t.
    let lgt = lgt_variant(1, &[2]).unwrap();
    assert!(lgt.reflect(&lgt.s()).is_err());
}

#[test]
fn descriptor_round_trip() {
    let spaces = vec![
        line_metric(4).unwrap(),
        uniform_metric(8, len(2)).unwrap(),
        diamond_basic(2, &[1, 2]).unwrap(),
        diamond_refined(3, 4, frac(1, 2)).unwrap(),
        lgt_variant(2, &[2, 3]).unwrap(),
    ];
    for sp in spaces {
        let doc = sp.descriptor();
        let back = MetricSpace::from_descriptor(&doc).unwrap();
        assert_eq!(back.kind(), sp.kind(), "{doc}");
        assert_eq!(back.unit(), sp.unit());
    }
    assert!(MetricSpace::from_descriptor("kind = nonsense\n").is_err());
}

#[test]
fn addr_display_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sp = diamond_refined(3, 4, len(2)).unwrap();
    let points = sp.enumerate_points(DEFAULT_MATERIALIZE_CAP).unwrap();
    for _ in 0..200 {
        let p = points.choose(&mut rng).unwrap();
        let s = p.to_string();
        let back: PointAddr = s.parse().unwrap();
        assert_eq!(&back, p);
    }
    assert!("L1R2:0".parse::<PointAddr>().is_err());
    assert!("L1.R2".parse::<PointAddr>().is_err());
}

#[test]
fn uniform_metric_basics() {
    let sp = uniform_metric(4, len(8)).unwrap();
    assert_eq!(sp.distance(&PointAddr::base(0), &PointAddr::base(3)).unwrap(), len(8));
    assert_eq!(sp.distance(&PointAddr::base(2), &PointAddr::base(2)).unwrap(), len(0));
    assert_eq!(sp.diameter(), len(8));
    assert!(uniform_metric(1, len(1)).is_err());
}

#[test]
fn unit_scales_distances() {
    let sp = diamond_basic(1, &[1]).unwrap().with_unit(frac(1, 3));
    assert_eq!(sp.distance(&sp.s(), &sp.t()).unwrap(), len(1));
    assert_eq!(sp.diameter(), len(1));
}

#[test]
fn edge_list_round_trip() {
    let sp = diamond_basic(1, &[1]).unwrap();
    let g = materialize(&sp, 100).unwrap();
    let text = g.export_edge_list();
    let back = ExplicitGraph::parse_edge_list(&text).unwrap();
    assert_eq!(back.vertex_count(), 6);
    // Shortest paths agree vertex-by-vertex.
    for u in 0..6 {
        let a = g.dijkstra(u);
        let b = back.dijkstra(u);
        // Vertex ids may be permuted by the export's BTreeMap ordering, so
        // compare distance multisets.
        let mut a: Vec<_> = a.into_iter().flatten().collect();
        let mut b: Vec<_> = b.into_iter().flatten().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
