use cantor_spectra_core::analysis::{detect_clusters, participation_ratio};
use cantor_spectra_core::tm::TransferMatrix;
use cantor_spectra_core::{
    assemble_hamiltonian, build_cantor_potential, sample_potential, CantorSpec, Grid, ModelParams,
    PiecewisePotential, Wavefunction,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cantor(order: u32) -> PiecewisePotential {
    build_cantor_potential(&CantorSpec::with_order(order)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sturm_count_is_monotone_and_conserves_counts(
        order in 0u32..4,
        mu in 5.0f64..120.0,
        a in -1.2f64..1.5,
        b in -1.2f64..1.5,
    ) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let p = cantor(order);
        let h = assemble_hamiltonian(&p, &ModelParams::new(mu).unwrap(), &Grid::new(600).unwrap());
        prop_assert!(h.sturm_count(lo) <= h.sturm_count(hi));
        let found = h.eigenvalues_in_range(lo, hi, 1e-10).unwrap();
        prop_assert_eq!(found.len(), h.sturm_count(hi.next_up()) - h.sturm_count(lo.next_up()));
        prop_assert!(found.iter().all(|e| *e > lo && *e <= hi + 1e-10));
    }

    #[test]
    fn node_count_is_monotone(order in 0u32..5, mu in 5.0f64..300.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = cantor(order);
        let tm = TransferMatrix::new(&p, ModelParams::new(mu).unwrap());
        prop_assert!(tm.node_count(lo) <= tm.node_count(hi));
    }

    #[test]
    fn tm_window_counts_match_node_counts(order in 0u32..4, mu in 5.0f64..80.0, a in -1.0f64..0.5, w in 0.01f64..0.5) {
        let p = cantor(order);
        let tm = TransferMatrix::new(&p, ModelParams::new(mu).unwrap());
        let (lo, hi) = (a, a + w);
        let found = tm.eigenvalues(lo, hi, 1e-12).unwrap();
        prop_assert_eq!(found.len(), tm.node_count(hi.next_up()) - tm.node_count(lo.next_up()));
    }

    #[test]
    fn clustering_is_idempotent_and_threshold_monotone(
        mut values in prop::collection::vec(-1.0f64..1.0, 0..40),
        t1 in 1e-4f64..0.5,
        t2 in 1e-4f64..0.5,
    ) {
        values.sort_by(f64::total_cmp);
        let (small, large) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let fine = detect_clusters(&values, small).unwrap();
        let coarse = detect_clusters(&values, large).unwrap();
        prop_assert!(coarse.len() <= fine.len());
        prop_assert_eq!(detect_clusters(&values, small).unwrap(), fine.clone());

        let covered: usize = fine.clusters.iter().map(|r| r.len()).sum();
        prop_assert_eq!(covered, values.len());
        for w in fine.clusters.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
            prop_assert!(values[w[1].start] - values[w[1].start - 1] > small);
        }
        for r in &fine.clusters {
            for i in r.start + 1..r.end {
                prop_assert!(values[i] - values[i - 1] <= small);
            }
        }
    }

    #[test]
    fn participation_ratio_bounds_and_sign_invariance(
        raw in prop::collection::vec(-1.0f64..1.0, 1..200),
        flips in prop::collection::vec(any::<bool>(), 200),
    ) {
        prop_assume!(raw.iter().any(|v| v.abs() > 1e-3));
        let n = raw.len();
        let h = 1.0 / (n + 1) as f64;
        let norm = (h * raw.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let values: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let psi = Wavefunction { energy: 0.0, spacing: h, values: values.clone() };
        let pr = participation_ratio(&psi).unwrap();
        prop_assert!(pr >= h * (1.0 - 1e-12) && pr <= n as f64 * h * (1.0 + 1e-12));

        let flipped = values.iter().zip(&flips).map(|(v, f)| if *f { -v } else { *v }).collect();
        let psi = Wavefunction { values: flipped, ..psi };
        prop_assert_eq!(participation_ratio(&psi).unwrap(), pr);
    }
}

#[test]
fn sampling_agrees_with_segment_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for order in 0..=8 {
        let p = cantor(order);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(0.0..=1.0);
            let expected = p
                .segments()
                .find(|s| s.start <= x && (x < s.end || s.end == 1.0))
                .unwrap()
                .value;
            assert_eq!(
                sample_potential(&p, x).unwrap(),
                expected,
                "order {order} x {x}"
            );
        }
    }
}

#[test]
fn cantor_measure_is_exact() {
    for order in 0..=10u32 {
        let p = cantor(order);
        let wells: Vec<_> = p.segments().filter(|s| s.value == -1.0).collect();
        assert_eq!(wells.len(), 1 << order);
        assert_eq!(p.segment_count(), (1 << (order + 1)) - 1);
        let width = 3f64.powi(-(order as i32));
        for w in &wells {
            assert!((w.width() - width).abs() <= 1e-15);
        }
        let measure: f64 = wells.iter().map(|w| w.width()).sum();
        assert!((measure - (2.0f64 / 3.0).powi(order as i32)).abs() <= 1e-15);
        if order >= 1 {
            assert_eq!((p.min_value(), p.max_value()), (-1.0, 1.0));
        }
    }
}
