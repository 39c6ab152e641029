//! Every default the runner fills in, in one place. The README reproduces
//! this table.

pub const P: f64 = 3.0;
pub const P_SUBORDINATION: f64 = 2.0;
pub const P_ADVERSARIAL: f64 = 4.0;
pub const P_JUMP: f64 = 2.0;

pub const BURKHOLDER_DIM: usize = 2;
pub const BURKHOLDER_PROBES: usize = 10_000;

pub const MART_DIM: usize = 1;
pub const MART_DEPTH: usize = 10;
pub const MART_PATHS: usize = 100_000;

pub const ADVERSARIAL_DEPTH: usize = 12;
pub const ADVERSARIAL_BUDGET: u64 = 10_000;

pub const JUMP_FAMILY: &str = "constant-modulator";
pub const JUMP_PATHS: usize = 20_000;

pub const OPNORM_BUDGET: usize = 300;
pub const HILBERT_BUDGET: usize = 1_000;
pub const HILBERT_POINTS: usize = 256;

pub const WIENER_PATHS: usize = 50_000;
pub const WIENER_STEPS: usize = 32;
pub const WIENER_INTERVALS: usize = 4;
pub const WIENER_HORIZON: f64 = 1.0;
pub const WIENER_K: usize = 1;
pub const WIENER_H: usize = 2;

/// `(experiment, parameter, default)` rows, for `umdlab defaults`.
pub fn table() -> Vec<(&'static str, &'static str, String)> {
    let s = |v: &dyn std::fmt::Display| v.to_string();
    vec![
        ("burkholder-check", "p", s(&P)),
        ("burkholder-check", "dim", s(&BURKHOLDER_DIM)),
        ("burkholder-check", "probes", s(&BURKHOLDER_PROBES)),
        ("mart-subordination", "p", s(&P_SUBORDINATION)),
        ("mart-subordination", "dim", s(&MART_DIM)),
        ("mart-subordination", "depth", s(&MART_DEPTH)),
        ("mart-subordination", "paths", s(&MART_PATHS)),
        ("mart-subordination", "factors", "tanh".into()),
        ("mart-subordination", "driver", "signs".into()),
        ("mart-adversarial", "p", s(&P_ADVERSARIAL)),
        ("mart-adversarial", "dim", s(&1)),
        ("mart-adversarial", "depth", s(&ADVERSARIAL_DEPTH)),
        ("mart-adversarial", "budget", s(&ADVERSARIAL_BUDGET)),
        ("jump-parabolic", "p", s(&P_JUMP)),
        ("jump-parabolic", "family", JUMP_FAMILY.into()),
        ("jump-parabolic", "paths", s(&JUMP_PATHS)),
        ("opnorm-search", "p", s(&P)),
        ("opnorm-search", "budget", s(&OPNORM_BUDGET)),
        ("opnorm-search", "n", "256 (d=1), 128 (d>=2)".into()),
        ("opnorm-search", "half_period", "16π".into()),
        ("hilbert-ratio", "p", s(&P)),
        ("hilbert-ratio", "budget", s(&HILBERT_BUDGET)),
        ("hilbert-ratio", "n", s(&HILBERT_POINTS)),
        ("wiener-*", "p", s(&P)),
        ("wiener-*", "paths", s(&WIENER_PATHS)),
        ("wiener-*", "steps", s(&WIENER_STEPS)),
        ("wiener-*", "intervals", s(&WIENER_INTERVALS)),
        ("wiener-*", "horizon", s(&WIENER_HORIZON)),
        ("wiener-*", "k", s(&WIENER_K)),
        ("wiener-*", "adapted", "false".into()),
        ("wiener-selfadjoint", "h", s(&WIENER_H)),
        ("wiener-selfadjoint", "antisymmetric", "false".into()),
        ("wiener-onedim", "factor", "tanh".into()),
    ]
}
