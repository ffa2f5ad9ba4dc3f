//! Fixtures shared by the criterion benches.

use relay_core::fading::{FadingConfig, PowerConfig};

/// Link budget of the reference experiment: 100 MHz, 1e-12 W/Hz, 1 s slots.
pub fn reference_power(budget_w: f64) -> PowerConfig {
    PowerConfig::new(budget_w, 1e-12, 100e6, 1.0).expect("constants are valid")
}

/// Unit-mean Rayleigh fading on both links.
pub fn unit_fading(seed: u64) -> FadingConfig {
    FadingConfig::new(1.0, 1.0, seed).expect("constants are valid")
}
