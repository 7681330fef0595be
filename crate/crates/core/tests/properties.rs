use characterness::charmodel::{train, Class, TrainParams};
use characterness::config::PipelineConfig;
use characterness::cues::{cue_sw, ehog_from_counts, smoothed_kl, CueVector, EdgeTypeCounts, StrokeWidthStats};
use characterness::evalkit::{adaptive_fmeasure, adaptive_threshold, box_prf, pr_curve, voc_overlap, SALIENCY_BETA2};
use characterness::imgcore::{GrayImage, PixelMask, Rect};
use characterness::labeling::{energy, min_cut_label, pairwise_energy, RegionGraph};
use characterness::lines::{group_lines, mean_shift, LineFeature};
use characterness::regions::{Polarity, Region};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = RegionGraph> {
    (1..=max_n).prop_flat_map(|n| {
        let scores = prop::collection::vec(0.0..=1.0f64, n);
        let edges = prop::collection::vec((0..n, 0..n, 0.0..=1.0f64), 0..(n * 2));
        (scores, edges).prop_map(|(s, e)| {
            let e: Vec<_> = e.into_iter().filter(|(a, b, _)| a != b).collect();
            RegionGraph::from_scores(&s, e).unwrap()
        })
    })
}

fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = PixelMask> {
    prop::collection::vec(any::<bool>(), w * h).prop_map(move |b| PixelMask::from_vec(w, h, b).unwrap())
}

/// A solid rectangle of pixels; used as a stand-in glyph.
fn block(x: usize, y: usize, w: usize, h: usize) -> Region {
    let px = (y..y + h).flat_map(|yy| (x..x + w).map(move |xx| (xx, yy))).collect();
    Region::new(px, Polarity::DarkOnBright, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn min_cut_is_no_worse_than_any_labeling(g in graph_strategy(10), flips in prop::collection::vec(any::<bool>(), 10)) {
        let best = energy(&g, &min_cut_label(&g).unwrap()).unwrap();
        let other: Vec<bool> = flips[..g.len()].to_vec();
        prop_assert!(best <= energy(&g, &other).unwrap() + 1e-9);
    }

    #[test]
    fn pairwise_term_ignores_global_flip(g in graph_strategy(10), l in prop::collection::vec(any::<bool>(), 10)) {
        let l = &l[..g.len()];
        let flipped: Vec<bool> = l.iter().map(|b| !b).collect();
        prop_assert_eq!(pairwise_energy(&g, l), pairwise_energy(&g, &flipped));
    }

    #[test]
    fn edgeless_graph_thresholds_scores(scores in prop::collection::vec(prop_oneof![Just(0.5), 0.0..=1.0f64], 1..20)) {
        let g = RegionGraph::from_scores(&scores, Vec::new()).unwrap();
        let labels = min_cut_label(&g).unwrap();
        for (s, l) in scores.iter().zip(labels) {
            prop_assert_eq!(l, *s >= 0.5, "score {}", s);
        }
    }

    #[test]
    fn posterior_and_complement_sum_to_one(
        samples in prop::collection::vec((0.0..2.0f64, 0.0..12.0f64, 0.0..1.0f64, any::<bool>()), 2..60),
        probe in (-1.0..3.0f64, -1.0..14.0f64, -0.5..1.5f64),
    ) {
        let mut data: Vec<(CueVector, Class)> = samples
            .iter()
            .map(|&(a, b, c, k)| (CueVector::new(a, b, c), if k { Class::Character } else { Class::Background }))
            .collect();
        data.push((CueVector::new(0.1, 1.0, 0.1), Class::Character));
        data.push((CueVector::new(1.1, 9.0, 0.9), Class::Background));
        let model = train(&data, &TrainParams::default()).unwrap();
        let c = CueVector::new(probe.0, probe.1, probe.2);
        let p = model.posterior(&c);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + model.posterior_bg(&c) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sw_is_scale_invariant(mean in 0.1..50.0f64, var in 0.0..100.0f64, k in 0.01..100.0f64) {
        let a = cue_sw(&StrokeWidthStats { mean, variance: var, samples: 10 }).unwrap();
        let b = cue_sw(&StrokeWidthStats { mean: mean * k, variance: var * k * k, samples: 10 }).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn ehog_is_bounded_and_half_turn_symmetric(w in prop::array::uniform4(0usize..1000)) {
        prop_assume!(w.iter().sum::<usize>() > 0);
        let e = ehog_from_counts(&EdgeTypeCounts { w }).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let turned = EdgeTypeCounts { w: [w[2], w[3], w[0], w[1]] };
        prop_assert_eq!(e, ehog_from_counts(&turned).unwrap());
    }

    #[test]
    fn kl_is_nonnegative(a in prop::collection::vec(0u32..50, 8), b in prop::collection::vec(0u32..50, 8)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assert!(smoothed_kl(&a, &b).unwrap() >= -1e-12);
        prop_assert!(smoothed_kl(&a, &a).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn mean_shift_ignores_input_order(
        pts in prop::collection::vec((0.0..20.0f64, 0.0..18.0f64), 1..40),
        seed in any::<u64>(),
    ) {
        let feats: Vec<LineFeature> = pts.iter().map(|&(s, o)| LineFeature { char_scale: s, orientation: o }).collect();
        let ids = mean_shift(&feats, 2.2).unwrap();
        let mut perm: Vec<usize> = (0..feats.len()).collect();
        // deterministic shuffle from the seed
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            perm.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled: Vec<LineFeature> = perm.iter().map(|&i| feats[i]).collect();
        let ids2 = mean_shift(&shuffled, 2.2).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(ids[i], ids2[k]);
        }
    }

    #[test]
    fn lines_have_disjoint_members_and_move_with_translation(
        boxes in prop::collection::vec((0usize..120, 0usize..60, 3usize..12, 6usize..20), 2..12),
        dx in 0usize..50,
        dy in 0usize..50,
    ) {
        let params = Default::default();
        let regions: Vec<Region> = boxes.iter().map(|&(x, y, w, h)| block(x, y, w, h)).collect();
        let moved: Vec<Region> = boxes.iter().map(|&(x, y, w, h)| block(x + dx, y + dy, w, h)).collect();
        let a = group_lines(&regions, &params);
        let b = group_lines(&moved, &params);
        let mut seen = vec![false; regions.len()];
        for l in &a {
            prop_assert!(l.members.len() >= 2);
            for &m in &l.members {
                prop_assert!(!seen[m], "region {} in two lines", m);
                seen[m] = true;
                prop_assert!(l.bbox.contains(&regions[m].bbox()));
            }
        }
        prop_assert_eq!(a.len(), b.len());
        for (la, lb) in a.iter().zip(&b) {
            prop_assert_eq!(&la.members, &lb.members);
            prop_assert_eq!(lb.bbox, Rect::new(la.bbox.x + dx as i64, la.bbox.y + dy as i64, la.bbox.w, la.bbox.h));
            prop_assert!((la.angle - lb.angle).abs() < 1e-9);
        }
    }

    #[test]
    fn recall_falls_as_threshold_rises(levels in prop::collection::vec(0u8..=255, 48), gt in mask_strategy(8, 6)) {
        prop_assume!(gt.count() > 0);
        let map = GrayImage::from_vec(8, 6, levels.iter().map(|&v| v as f64).collect()).unwrap();
        let pr = pr_curve(&map, &gt).unwrap();
        prop_assert_eq!(pr.recall[0], 1.0);
        for t in 1..256 {
            prop_assert!(pr.recall[t] <= pr.recall[t - 1]);
            prop_assert!((0.0..=1.0).contains(&pr.precision[t]));
        }
        // the adaptive mask is one of the 256 curve masks
        let t = adaptive_threshold(&map).ceil() as usize;
        let a = adaptive_fmeasure(&map, &gt, SALIENCY_BETA2).unwrap();
        prop_assert_eq!(a.precision, pr.precision[t.min(255)]);
        prop_assert_eq!(a.recall, pr.recall[t.min(255)]);
    }

    #[test]
    fn voc_is_symmetric(a in mask_strategy(7, 5), b in mask_strategy(7, 5)) {
        prop_assume!(a.count() + b.count() > 0);
        let ab = voc_overlap(&a, &b).unwrap();
        prop_assert_eq!(ab, voc_overlap(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn box_scores_ignore_order(
        pred in prop::collection::vec((0i64..100, 0i64..100, 1i64..30, 1i64..30), 0..8),
        gt in prop::collection::vec((0i64..100, 0i64..100, 1i64..30, 1i64..30), 0..8),
    ) {
        let p: Vec<Rect> = pred.iter().map(|&(x, y, w, h)| Rect::new(x, y, w, h)).collect();
        let g: Vec<Rect> = gt.iter().map(|&(x, y, w, h)| Rect::new(x, y, w, h)).collect();
        let (mut pr, mut gr) = (p.clone(), g.clone());
        pr.reverse();
        gr.reverse();
        prop_assert_eq!(box_prf(&p, &g, 0.5), box_prf(&pr, &gr, 0.5));
    }

    #[test]
    fn config_survives_dump_and_load(delta in 1u8..50, gamma in 0.0..2.0f64, bw in 0.1..10.0f64, bins in 2usize..100) {
        let mut c = PipelineConfig::default();
        c.set("mser.delta", &delta.to_string()).unwrap();
        c.set("mser.gamma", &gamma.to_string()).unwrap();
        c.set("lines.bandwidth", &bw.to_string()).unwrap();
        c.set("model.bins", &bins.to_string()).unwrap();
        prop_assert_eq!(PipelineConfig::from_text(&c.dump()).unwrap(), c);
    }
}
