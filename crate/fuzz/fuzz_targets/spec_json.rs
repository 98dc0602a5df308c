#![no_main]

use lattice_resonance::lattice::verify_assumption;
use lattice_resonance::spec::PerturbationSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(spec) = PerturbationSpec::from_json(data) {
        let _ = verify_assumption(&spec);
        let text = spec.to_json().expect("valid spec serializes");
        let back = PerturbationSpec::from_json(&text).expect("serialized spec parses");
        assert_eq!(back, spec);
    }
});
