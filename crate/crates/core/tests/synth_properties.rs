use fedisim::ingest::{export_bundle, load_bundle, DatasetBundle};
use fedisim::stats::{concentration, Weight};
use fedisim::synth::{generate, SynthConfig};
use proptest::prelude::*;

fn small(seed: u64) -> SynthConfig {
    let mut c = SynthConfig::desk_scale(seed);
    c.n_users = 1500;
    c.n_instances = 80;
    c.n_ases = 10;
    c
}

#[test]
fn larger_size_exponent_raises_mean_top5_share() {
    let mean_share = |exp: f64| {
        (0..20)
            .map(|seed| {
                let mut c = small(seed);
                c.instance_size_exponent = exp;
                concentration(&generate(&c).unwrap(), Weight::Users)
                    .unwrap()
                    .top_share(0.05)
                    .unwrap()
            })
            .sum::<f64>()
            / 20.0
    };
    let shares: Vec<f64> = [0.5, 1.0, 1.5, 2.0].into_iter().map(mean_share).collect();
    assert!(shares.windows(2).all(|w| w[0] <= w[1]), "{shares:?}");
}

#[test]
fn desk_preset_toml_round_trips() {
    let c = SynthConfig::desk_scale(5);
    assert_eq!(SynthConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn same_seed_same_ecosystem(seed in any::<u64>()) {
        prop_assert_eq!(generate(&small(seed)).unwrap(), generate(&small(seed)).unwrap());
    }

    /// Re-ingesting a generated ecosystem through the validating loader
    /// checks every referential and uniqueness rule.
    #[test]
    fn generated_ecosystems_are_valid(seed in any::<u64>(), p_local in 0.0f64..=1.0, uniform in any::<bool>()) {
        let mut c = small(seed);
        c.p_local_follow = p_local;
        c.uniform_targets = uniform;
        let eco = generate(&c).unwrap();
        prop_assert_eq!(eco.users().len(), c.n_users);
        prop_assert_eq!(eco.instances().len(), c.n_instances);
        prop_assert_eq!(eco.ases().len(), c.n_ases);
        let dir = tempfile::tempdir().unwrap();
        export_bundle(dir.path(), &eco, None, None).unwrap();
        let back = load_bundle(&DatasetBundle::from_dir(dir.path())).unwrap();
        prop_assert_eq!(back.ecosystem.follows().len(), eco.follows().len());
        prop_assert_eq!(back.ecosystem.toots().len(), eco.toots().len());
    }
}
