use pepl_wasm_demo::{lr_curve, to_rgba, MixExplorer, ThresholdTrace};

#[test]
fn threshold_trace_shapes_and_maxnorm() {
    let t = ThresholdTrace::simulate(6, 0.95, 200, 32, 4).unwrap();
    assert_eq!(t.steps(), 200);
    let tau = t.tau();
    let ct = t.class_thresholds();
    assert_eq!(ct.len(), 200 * 6);
    for (s, row) in ct.chunks(6).enumerate() {
        assert_eq!(row.iter().copied().fold(f64::MIN, f64::max), tau[s]);
    }
    assert!(t.selection_rate().iter().all(|r| (0.0..=1.0).contains(r)));
    assert!(tau[199] > tau[0], "confidence grows, so does the threshold");
    assert!(ThresholdTrace::simulate(1, 0.9, 10, 4, 0).is_err());
}

#[test]
fn lr_curve_matches_schedule_endpoints() {
    let c = lr_curve(0.01, 80, 0.1, 40, 200, 2);
    assert_eq!(c.len(), 400);
    assert!((c[0] - 0.01).abs() < 1e-15);
    assert!((c[160] - 0.001).abs() < 1e-15);
    assert_eq!(*c.last().unwrap(), 0.0);
}

#[test]
fn mix_explorer_degenerate_and_semantic_cases() {
    let m = MixExplorer::build(3, 0, 6).unwrap();
    let (h, w) = (m.height(), m.width());
    assert_eq!(m.image_rgba(0).len(), h * w * 4);
    assert_eq!(m.heatmap_rgba(1).len(), h * w * 4);

    let (ra, rb, area, _) = m.mix_rect(0, 0, 0, 0).unwrap();
    assert_eq!((ra, rb, area), (1.0, 0.0, 0.0));
    let (ra, rb, area, _) = m.mix_rect(0, 0, h, w).unwrap();
    assert_eq!((ra, rb, area), (0.0, 1.0, 1.0));

    // covering only a's marker removes far more semantic mass than area
    let b = m.marker_box(0);
    let (ra, _, area, _) = m.mix_rect(b.y0, b.x0, b.y1, b.x1).unwrap();
    assert!(1.0 - ra > 5.0 * area, "removed {} vs area {area}", 1.0 - ra);
    // reversed corners are normalized
    assert_eq!(m.mix_rect(b.y1, b.x1, b.y0, b.x0).unwrap().0, ra);

    assert!(MixExplorer::build(3, 0, 42).is_err());
}

#[test]
fn rgba_is_interleaved_and_opaque() {
    let img = pepl_core::image::Image::new(3, 1, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    assert_eq!(to_rgba(&img), vec![255, 0, 0, 255, 0, 255, 0, 255]);
}
