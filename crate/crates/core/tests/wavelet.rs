use pleader::wavelet::{
    admissibility_constant, build_even_wavelet, build_reconstruction_wavelet, moment, perturbed_pairing,
    AnalyzingWavelet, WaveletShape,
};
use proptest::prelude::*;

/// Composite Simpson on `[-1, 1]` with `n` (even) panels, using only point
/// evaluations of the wavelet.
fn simpson<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 / n as f64;
    let mut s = f(-1.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(-1.0 + i as f64 * h);
    }
    s * h / 3.0
}

fn feasible() -> impl Strategy<Value = (u32, u32)> {
    (2u32..=6).prop_flat_map(|nv| (Just(nv), (nv - 1)..=(nv + 3)))
}

#[test]
fn fourth_moment_family_certified_by_refined_quadrature() {
    let w = build_even_wavelet(4, 5).unwrap();
    let scale = simpson(|x| w.eval(x).abs(), 1 << 14);
    for m in 0..4 {
        let coarse = simpson(|x| x.powi(m) * w.eval(x), 1 << 13);
        let fine = simpson(|x| x.powi(m) * w.eval(x), 1 << 14);
        // refinement confirms the quadrature has converged below the tolerance
        assert!((coarse - fine).abs() < 1e-9 * scale, "m = {m}");
        assert!(fine.abs() < 1e-8 * scale, "m = {m}: {fine}");
    }
    assert!(simpson(|x| x.powi(4) * w.eval(x), 1 << 14).abs() > 1e-6 * scale);
}

#[test]
fn exact_moments_of_a_low_order_wavelet() {
    let w = build_even_wavelet(2, 3).unwrap();
    assert!(moment(&w, 0).abs() < 1e-12);
    assert_eq!(moment(&w, 1), 0.0);
    let doubled = w.shape().scaled(2.0);
    for m in 0..6 {
        assert!((doubled.moment(m) - 2.0 * moment(&w, m)).abs() < 1e-12);
    }
}

/// `c_ψ = ∫_0^∞ |ψ̂(ξ)|²/ξ dξ = -∫ R(t) ln|t| dt` with `R` the autocorrelation
/// of `ψ`, valid because `∫ R = 0`.
fn spatial_admissibility(w: &AnalyzingWavelet) -> f64 {
    let n = 2048;
    let h = 2.0 / n as f64;
    let samples: Vec<f64> = (0..=n).map(|i| w.eval(-1.0 + i as f64 * h)).collect();
    let lag = |k: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..=n - k {
            let wt = if i == 0 || i == n - k { 0.5 } else { 1.0 };
            s += wt * samples[i] * samples[i + k];
        }
        s * h
    };
    // R is flat on the first cell, so ∫_0^h ln t dt is taken exactly
    let r0 = lag(0);
    let mut total = -2.0 * r0 * h * (h.ln() - 1.0);
    for k in 1..=n {
        let t = k as f64 * h;
        let wt = if k == n { 0.5 } else { 1.0 };
        total -= 2.0 * wt * lag(k) * t.ln() * h;
    }
    // trapezoid from t = h: half weight at k = 1
    total + 2.0 * 0.5 * lag(1) * h.ln() * h
}

#[test]
fn admissibility_matches_spatial_formula() {
    for (nv, s) in [(2, 2), (2, 3), (4, 5), (6, 7)] {
        let w = build_even_wavelet(nv, s).unwrap();
        let c = admissibility_constant(&w).unwrap().c_psi;
        let spatial = spatial_admissibility(&w);
        assert!((c - spatial).abs() < 2e-3 * c, "({nv},{s}): {c} vs {spatial}");
    }
    let c = admissibility_constant(&build_even_wavelet(2, 2).unwrap()).unwrap().c_psi;
    assert!((c - 0.723512).abs() < 1e-5, "{c}");
}

#[test]
fn admissibility_scales_quadratically() {
    let w = build_even_wavelet(2, 3).unwrap();
    let c = admissibility_constant(&w).unwrap().c_psi;
    for lambda in [-1.0, 2.0, 0.5] {
        let s = w.scaled(lambda);
        let cs = admissibility_constant(&s).unwrap().c_psi;
        assert!((cs - lambda * lambda * c).abs() < 1e-10 * cs.max(c), "λ = {lambda}");
    }
}

#[test]
fn reconstruction_wavelet_survives_perturbation() {
    let psi = build_even_wavelet(6, 7).unwrap();
    let phi = build_reconstruction_wavelet(&psi);
    assert!(moment(&phi, 0).abs() < 1e-12);
    assert_eq!(moment(&phi, 1), 0.0);
    assert!(phi.shape().inner_product(psi.shape()).abs() > 1e-6);
    for k in 0..=20 {
        let eps = -0.1 + 0.01 * k as f64;
        let direct = simpson(|u| phi.eval((u - eps) / (1.0 + eps)) * psi.eval(u), 1 << 14);
        let pairing = perturbed_pairing(&psi, &phi, eps);
        assert!(direct.abs() > 1e-6, "ε = {eps}");
        assert!((direct - pairing).abs() < 1e-6 * direct.abs().max(1.0), "ε = {eps}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_constructed_wavelet_is_certified((nv, s) in feasible(), xs in prop::collection::vec(-1.0f64..1.0, 1000)) {
        let w = build_even_wavelet(nv, s).unwrap();
        let scale = w.shape().l2_norm();
        for m in 0..nv {
            prop_assert!(moment(&w, m).abs() < 1e-8 * scale, "moment {}", m);
        }
        for x in xs {
            prop_assert_eq!(w.eval(x) - w.eval(-x), 0.0);
        }
        for x in [1.0, -1.0, 1.5, -3.0, 1.0 + 1e-12] {
            prop_assert_eq!(w.eval(x), 0.0);
        }
        prop_assert!(w.is_even());
    }

    #[test]
    fn sign_flip_leaves_admissibility(nv in 2u32..=4) {
        let w = build_even_wavelet(nv, nv + 1).unwrap();
        let a = admissibility_constant(&w).unwrap().c_psi;
        let b = admissibility_constant(&w.scaled(-1.0)).unwrap().c_psi;
        prop_assert_eq!(a, b);
    }
}
