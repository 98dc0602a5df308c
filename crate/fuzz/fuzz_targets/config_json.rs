#![no_main]

use lattice_resonance_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // validation must reject bad values without panicking
    if let Ok(config) = ExperimentConfig::from_json(data) {
        let back = ExperimentConfig::from_json(&config.to_json()).expect("round trip");
        assert_eq!(back, config);
        assert_eq!(back.hash(), config.hash());
    }
});
