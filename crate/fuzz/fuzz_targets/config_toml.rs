#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use spinbus::config::ExperimentConfig;

// Parsing never panics; accepted configs digest deterministically and every
// sweep range expands to finite values.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml_str(text, Path::new("/nonexistent")) else { return };
    if let Ok(d) = cfg.digest() {
        assert_eq!(d, cfg.digest().expect("digest is deterministic"));
    }
    for span in [cfg.grid.x0, cfg.grid.tg, cfg.freq.omega, cfg.freq.x0, cfg.magnet.positions] {
        if span.points <= 10_000 {
            assert!(span.values().iter().all(|v| v.is_finite()));
        }
    }
    let _ = cfg.optimization();
});
