use dscr_demo::Scene;

#[test]
fn degrade_then_render() {
    let mut scene = Scene::new(6, 64, 1, 3.0).ok().unwrap();
    assert_eq!(scene.size(), 64);
    assert_eq!(scene.reference_rgba().ok().unwrap().len(), 64 * 64 * 4);

    let s = Scene::detector_sigmas(1);
    scene.degrade(s[0], s[1], 4).ok().unwrap();
    assert_eq!(scene.lr_size(), 16);
    assert_eq!(scene.lr_rgba().ok().unwrap().len(), 16 * 16 * 4);
    assert_eq!(scene.bicubic_rgba().ok().unwrap().len(), 64 * 64 * 4);

    let scores = scene.bicubic_scores().ok().unwrap();
    assert!(scores[0].is_finite() && scores[0] > 10.0, "{scores:?}");
    assert!(scores[1] > 0.0 && scores[1] < 1.0);
    assert!(scores[2] > -1.0 && scores[2] < 1.0);
}

#[test]
fn wider_psf_scores_lower() {
    let mut scene = Scene::new(4, 64, 2, 2.0).ok().unwrap();
    scene.degrade(0.3, 0.3, 2).ok().unwrap();
    let sharp = scene.bicubic_scores().ok().unwrap();
    scene.degrade(2.0, 2.0, 2).ok().unwrap();
    let blurry = scene.bicubic_scores().ok().unwrap();
    assert!(blurry[0] < sharp[0] && blurry[1] < sharp[1], "{sharp:?} vs {blurry:?}");
}
