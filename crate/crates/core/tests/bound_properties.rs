use dynest_core::bounds::{
    concentration_bound, density_deviation_envelope, weighted_phi_sum, weighted_phi_sum_direct, BoundParams,
    MixingModel,
};
use proptest::prelude::*;

#[test]
fn closed_form_matches_direct_sum() {
    for gamma in [0.1, 0.5, 0.9, 0.99] {
        let model = MixingModel::geometric(1.7, gamma).unwrap();
        for n in [10, 1_000, 1_000_000] {
            let closed = weighted_phi_sum(&model, n).unwrap();
            let direct = weighted_phi_sum_direct(&model, n).unwrap();
            assert!(
                (closed - direct).abs() <= 1e-10 * direct,
                "gamma {gamma}, n {n}: {closed} vs {direct}"
            );
        }
    }
}

fn model() -> impl Strategy<Value = MixingModel> {
    prop_oneof![
        (0.1..10.0f64, 0.01..0.99f64).prop_map(|(c, g)| MixingModel::geometric(c, g).unwrap()),
        prop::collection::vec(0.0..2.0f64, 1..30).prop_map(|mut v| {
            v[0] += 0.1;
            MixingModel::explicit(v).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn concentration_is_monotone(m in model(), c in 0.1..5.0f64, n in 1usize..5_000, t in 0.0..20.0f64, dt in 0.0..5.0f64) {
        let b = concentration_bound(&m, c, n, t).unwrap();
        prop_assert!(b.raw >= 0.0 && b.raw <= std::f64::consts::E.powf(1.0 / std::f64::consts::E) * (1.0 + 1e-12));
        prop_assert!(concentration_bound(&m, c, n, t + dt).unwrap().raw <= b.raw);
        // Un-normalized sums spread out as n grows.
        prop_assert!(concentration_bound(&m, c, n + 1 + n / 2, t).unwrap().raw >= b.raw);
        prop_assert!(b.clipped <= 1.0 && b.clipped <= b.raw);
    }

    #[test]
    fn density_envelope_is_monotone(
        m in model(),
        n in 100usize..1_000_000,
        h in 0.001..0.2f64,
        t in 0.0..10.0f64,
        dt in 0.0..5.0f64,
        u in prop::option::of(0.4..1.0f64),
    ) {
        let mut p = BoundParams::new(n, h, 0.0, 2.0, t);
        p.u = u.map(|u| u.max(2.0 * h));
        let at = |p: &BoundParams| density_deviation_envelope(p, &m).unwrap().bound;
        let base = at(&p);
        prop_assert!(base.raw >= 0.0 && base.clipped <= 1.0);
        let mut later = p.clone();
        later.t = t + dt;
        prop_assert!(at(&later).raw <= base.raw);
        let mut larger = p.clone();
        larger.n = 2 * n;
        prop_assert!(at(&larger).raw <= base.raw);
    }
}
