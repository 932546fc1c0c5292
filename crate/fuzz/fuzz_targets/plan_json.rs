#![no_main]

use libfuzzer_sys::fuzz_target;

use fuzzydr::eval::ExperimentPlan;

fuzz_target!(|data: &[u8]| {
    let _ = ExperimentPlan::parse_json(data);
});
