use pleader::pulse::{
    band_norms, band_of, band_partition, evaluate, sample_path, sample_process, PulseIndex, PulseProcessParams,
    PulseSet,
};
use proptest::prelude::*;

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn streams_are_uncorrelated() {
    // increments of the partial sums, pooled over seeds until there are 10^4
    let mut dc = Vec::new();
    let mut db = Vec::new();
    let mut xs = Vec::new();
    let mut seed = 0;
    while dc.len() < 10_000 {
        let set = sample_process(&PulseProcessParams::new(0.5, 0.9, 16, seed).unwrap());
        let mut prev = (0.0, 0.0);
        for p in &set.pulses {
            dc.push(p.c - prev.0);
            db.push(p.b - prev.1);
            xs.push(p.x);
            prev = (p.c, p.b);
        }
        seed += 1;
    }
    assert!(correlation(&dc, &db).abs() < 0.05);
    assert!(correlation(&dc, &xs).abs() < 0.05);
    assert!(correlation(&db, &xs).abs() < 0.05);
    // unit exponential increments
    let mean = dc.iter().sum::<f64>() / dc.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn path_is_exactly_zero_off_the_supports() {
    // wide band-0 pulses often cover all of [0, 1], so look across seeds
    let mut zeros = 0;
    for seed in 0..40 {
        let params = PulseProcessParams::new(0.5, 0.9, 6, seed).unwrap();
        let set = sample_process(&params);
        let index = PulseIndex::new(&set);
        for i in 0..=4000 {
            let x = i as f64 / 4000.0;
            let covered = set.pulses.iter().any(|p| (x - p.x).abs() < 1.0 / p.dilation(set.eta));
            if !covered {
                assert_eq!(evaluate(&params, &index, x), 0.0, "seed {seed}, x = {x}");
                zeros += 1;
            }
        }
    }
    assert!(zeros > 100, "only {zeros} uncovered points");
}

#[test]
fn finer_truncation_barely_moves_a_bounded_path() {
    for seed in 1..=5 {
        let sup = |j_max| {
            let params = PulseProcessParams::new(0.5, 0.9, j_max, seed).unwrap();
            let set = sample_process(&params);
            sample_path(&params, &set, 1 << 14)
                .iter()
                .fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
        };
        let (s14, s16) = (sup(14), sup(16));
        assert!((s16 - s14).abs() < 0.01 * s14, "seed {seed}: {s14} -> {s16}");
    }
}

/// Direct Simpson quadrature of `|F_j|^p`, summing pulses without the index.
fn brute_band_norm(params: &PulseProcessParams, set: &PulseSet, members: &[usize], p: f64) -> f64 {
    let n = 1 << 16;
    let h = 1.0 / n as f64;
    let value = |x: f64| -> f64 {
        members
            .iter()
            .map(|&m| {
                let q = &set.pulses[m];
                q.amplitude(set.alpha) * params.pulse.eval(q.dilation(set.eta) * (x - q.x))
            })
            .sum::<f64>()
            .abs()
            .powf(p)
    };
    let mut s = value(0.0) + value(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * value(i as f64 * h);
    }
    (s * h / 3.0).powf(1.0 / p)
}

#[test]
fn band_norms_match_direct_quadrature() {
    let params = PulseProcessParams::new(-0.7, 0.5, 8, 4).unwrap();
    let set = sample_process(&params);
    let p = 1.2;
    let norms = band_norms(&params, &set, p).unwrap();
    let bands = band_partition(&set, set.eta);
    let mut all = Vec::new();
    for band in &bands {
        let direct = brute_band_norm(&params, &set, &band.members, p);
        let got = norms.per_band[band.j as usize];
        assert!((got - direct).abs() < 2e-3 * direct.max(1e-9), "band {}: {got} vs {direct}", band.j);
        all.extend_from_slice(&band.members);
        let partial = brute_band_norm(&params, &set, &all, p);
        let got = norms.partial_sums[band.j as usize];
        assert!((got - partial).abs() < 2e-3 * partial.max(1e-9), "partial {}: {got} vs {partial}", band.j);
    }
}

#[test]
fn band_norms_reject_inadmissible_p() {
    let params = PulseProcessParams::new(-0.7, 0.5, 8, 4).unwrap();
    let set = sample_process(&params);
    let err = band_norms(&params, &set, 3.0).unwrap_err();
    assert_eq!(err.to_string(), "p = 3 outside (1, 1.4286)");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn realizations_are_deterministic_and_well_formed(
        alpha in -1.0f64..1.0,
        eta in 0.1f64..0.99,
        j_max in 1u32..12,
        seed in any::<u64>(),
    ) {
        prop_assume!(alpha >= 0.0 || eta - 1.0 < alpha * eta);
        let params = PulseProcessParams::new(alpha, eta, j_max, seed).unwrap();
        let a = sample_process(&params);
        let b = sample_process(&params);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let limit = (eta * j_max as f64).exp2();
        let mut prev = (0.0, 0.0);
        for p in &a.pulses {
            prop_assert!(p.c > prev.0 && p.b > prev.1);
            prop_assert!(p.b < limit);
            prop_assert!((0.0..1.0).contains(&p.x));
            prop_assert!(band_of(p.dilation(eta)) <= j_max);
            prev = (p.c, p.b);
        }
        let back: PulseSet = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn out_of_range_eta_is_rejected(eta in prop_oneof![-2.0f64..=0.0, 1.0f64..3.0]) {
        let err = PulseProcessParams::new(0.5, eta, 10, 0).unwrap_err();
        prop_assert!(err.to_string().contains("eta"));
    }
}
