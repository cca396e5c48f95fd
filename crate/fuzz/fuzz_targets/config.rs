#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = vortexlab_cli::config::RunConfig::from_json(data);
});
