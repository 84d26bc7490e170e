mod support;

use proptest::prelude::*;
use strutskit::config::parse_framework_config;
use strutskit::persistence::{find_user, load_table, save_table, serialize_table};
use strutskit::resources::{parse_properties, MessageBundle};
use support::strategies::{
    bundle_entries, credential_instance, find_user_oracle, framework_config, table,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_survives_serialization(cfg in framework_config()) {
        let xml = cfg.to_xml();
        let parsed = parse_framework_config(&xml).map_err(|e| TestCaseError::fail(format!("{e}\n{xml}")))?;
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parse_framework_config(&parsed.to_xml()).unwrap(), parsed);
    }

    #[test]
    fn bundle_survives_serialization(entries in bundle_entries()) {
        let mut bundle = MessageBundle::new("p.properties");
        for (k, v) in &entries {
            bundle.insert(k.clone(), v.clone());
        }
        let text = bundle.serialize();
        let parsed = parse_properties("p.properties", &text).unwrap();
        prop_assert_eq!(parsed.iter().collect::<Vec<_>>(), bundle.iter().collect::<Vec<_>>());
        prop_assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn table_survives_save_and_load(t in table()) {
        let dir = tempfile::tempdir().unwrap();
        save_table(dir.path(), &t).unwrap();
        let loaded = load_table(dir.path(), "t").unwrap();
        prop_assert_eq!(&loaded, &t);
        prop_assert_eq!(serialize_table(&loaded), serialize_table(&t));
    }

    #[test]
    fn find_user_agrees_with_oracle((t, email, password) in credential_instance()) {
        prop_assert_eq!(find_user(&t, &email, &password).unwrap(), find_user_oracle(&t, &email, &password));
    }
}
