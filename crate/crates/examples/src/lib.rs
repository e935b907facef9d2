//! Runnable examples, one per capability. Run any of them with
//! `cargo run --release -p learnsim-examples --example NAME`.
//!
//! | Example | Shows |
//! |---------|-------|
//! | `learning_curve` | `P_t` for a few agents and the tries needed to reach the threshold |
//! | `population` | sampling residents from the default archetypes |
//! | `small_world` | Watts-Strogatz graph statistics against a random graph |
//! | `influence` | one contact between an experienced sender and a novice |
//! | `household_load` | the half-hourly per-household demand curve of a small estate |
//! | `single_run` | one run to the horizon with daily state counts and the metrics digest |
//! | `schedule` | steering a run with scheduled commands |
//! | `load_validation` | comparing the simulated daily profile with a reference curve |
//! | `experience_effect` | energy reduction from an experienced population |
//! | `contact_rate` | how the contact rate changes the spread of experience |
//! | `discontinuance` | who stops using the meter and how their attitudes move |
//! | `custom_sweep` | sweeping any numeric parameter |
//! | `replay` | a configuration round trip that reproduces the digest |
//! | `live_session` | steering an in-process session and replaying its command log |
//! | `http_client` | the control service over HTTP, including the event stream |
//! | `custom_catalog` | running with an edited appliance catalog |
//!
//! Every example defaults to a small population so it finishes in seconds.
