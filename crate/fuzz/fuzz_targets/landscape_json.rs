#![no_main]

use libfuzzer_sys::fuzz_target;
use spinbus_core::LandscapeProfile;

// Accepted files yield a profile whose splitting is finite everywhere on it
// and which survives a serialize/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(profile) = LandscapeProfile::from_json_str(text) else { return };
    for i in 0..=8 {
        let x = profile.x_start() + (profile.x_end() - profile.x_start()) * i as f64 / 8.0;
        let ev = profile.valley_splitting(x).expect("inside the profile");
        assert!(ev.is_finite() && ev >= 0.0);
    }
    let back = LandscapeProfile::from_json_str(&profile.to_json_string()).unwrap();
    assert_eq!(back, profile);
});
