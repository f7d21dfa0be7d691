#![no_main]

use libfuzzer_sys::fuzz_target;
use spinbus_core::ControlVector;

// Accepted pulses are valid and their interpolant never leaves the bound.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cv) = ControlVector::from_json_str(text) else { return };
    cv.validate().expect("parsed pulses are valid");
    for i in 0..=16 {
        let v = cv.value_at(cv.tg * i as f64 / 16.0);
        assert!(v.is_finite() && v.abs() <= cv.bound * (1.0 + 1e-12));
    }
    let back = ControlVector::from_json_str(&cv.to_json_string()).unwrap();
    assert_eq!(back, cv);
});
