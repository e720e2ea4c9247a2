// Own test binary: it sets a process-wide environment variable.

use polycorr::campaign::config::{RunConfig, COMPONENT_DB_ENV};
use polycorr::thermo::BUNDLED_DATABASE;

#[test]
fn env_var_overrides_database() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        "component_db = \"missing.dat\"\n\
         [reference]\np1_bar = 50.0\nt1_k = 300.0\ncomposition = { CH4 = 1.0 }\n",
    )
    .unwrap();
    assert!(RunConfig::load(&config).is_err());

    // same data with a shifted methane critical temperature
    let db = dir.path().join("alt.dat");
    std::fs::write(&db, BUNDLED_DATABASE.replace("190.56", "191.0")).unwrap();
    std::env::set_var(COMPONENT_DB_ENV, &db);
    let cfg = RunConfig::load(&config).unwrap();
    std::env::remove_var(COMPONENT_DB_ENV);
    let ch4 = &cfg.reference.comp_ref.constituents()[0].component;
    assert_eq!(ch4.critical_temperature, 191.0);
}
