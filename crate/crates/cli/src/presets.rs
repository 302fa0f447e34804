//! Built-in parameter sets. Numerical choices (grid, dt, tolerances) live here and
//! nowhere else, so a sensitivity study is a matter of `--set`.

use crate::config::ExperimentConfig;
use crate::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig1-levels",
        r#"
kind = "spectrum1d"
citation = "1D levels versus dip position, U0=13.4, sigma=0.2; narrow ground/first crossing near x0=-4.5"
u0 = 13.4
sigma = 0.2
x0_start = -7.0
x0_end = 0.0
x0_step = 0.05
levels = 4
points = 512
half_width = 12.0
tol = 1e-9
expect = { x0_star = [-4.8, -4.2] }
"#,
    ),
    (
        "fig2-levels",
        r#"
kind = "spectrum2d"
citation = "2D levels in the frame rotating at Omega=0.6, U0=25, sigma=0.2; x0=0 levels 1.0, 1.4, 1.8, 2.2"
u0 = 25.0
sigma = 0.2
omega = 0.6
x0_start = -7.0
x0_end = 0.0
x0_step = 0.1
levels = 4
points = 128
half_width = 8.0
tol = 1e-9
expect = { x0_star = [-4.8, -4.2], e0_end = [0.999, 1.001], e1_end = [1.399, 1.401], e2_end = [1.799, 1.801], e3_end = [2.199, 2.201] }
"#,
    ),
    (
        "sweep1d-linear",
        r#"
kind = "sweep1d"
citation = "1D linear sweep x0: -7 -> 0 at speed 0.02, U0=13.4, sigma=0.2; p1 = p2 = p3 = 0.99"
u0 = 13.4
sigma = 0.2
x0_start = -7.0
x0_end = 0.0
speed = 0.02
passes = 3
initial = "relaxed"
points = 1024
half_width = 16.0
dt = 1e-3
tol = 1e-9
record_stride = 1000
expect = { p1 = [0.985, 1.0], p2 = [0.985, 1.0], p3 = [0.985, 1.0] }
"#,
    ),
    (
        "sweep1d-g-neg5",
        r#"
kind = "sweep1d"
citation = "1D attractive condensate g=-5 (about 900 Li atoms); 97.5% transfer to the first excited collective state; speed not given, 0.01 chosen"
g = -5.0
u0 = 13.4
sigma = 0.2
x0_start = -7.0
x0_end = 0.0
speed = 0.01
passes = 1
initial = "relaxed"
g_steps = 10
points = 512
half_width = 12.0
dt = 1e-3
tol = 1e-9
record_stride = 2000
expect = { p1 = [0.96, 0.99] }
"#,
    ),
    (
        "sweep1d-g50",
        r#"
kind = "sweep1d"
citation = "1D repulsive condensate g=50, U0=13.4, sigma=0.2, speed 0.6; p1 = 0.98 after one sweep, p2 = 0.82 after two"
g = 50.0
u0 = 13.4
sigma = 0.2
x0_start = -7.0
x0_end = 0.0
speed = 0.6
passes = 2
initial = "relaxed"
g_steps = 10
points = 1024
half_width = 16.0
dt = 1e-3
tol = 1e-9
record_stride = 1000
expect = { p1 = [0.97, 0.99], p2 = [0.79, 0.85] }
"#,
    ),
    (
        "spiral2d-linear",
        r#"
kind = "sweep2d"
citation = "2D spiral, U0=25, sigma=0.2, Omega=0.6, x0: -5 -> 0 at speed 0.036; Lz=1 then Lz=2 each above 99%"
u0 = 25.0
sigma = 0.2
omega = 0.6
x0_start = -5.0
x0_end = 0.0
speed = 0.036
passes = 2
initial = "trap"
points = 256
half_width = 8.0
dt = 2e-3
tol = 1e-9
record_stride = 5000
expect = { p1 = [0.99, 1.0], p2 = [0.99, 1.0] }
"#,
    ),
    (
        "spiral2d-g100",
        r#"
kind = "sweep2d"
citation = "2D spiral, g=100, U0=25, sigma=0.2, Omega=0.23, x0: -7 -> 0 at speed 0.35; vortex overlap 0.99"
g = 100.0
u0 = 25.0
sigma = 0.2
omega = 0.23
x0_start = -7.0
x0_end = 0.0
speed = 0.35
passes = 1
initial = "trap"
g_steps = 10
points = 256
half_width = 10.0
dt = 1e-3
tol = 1e-9
record_stride = 5000
expect = { p1 = [0.98, 1.0], lz1 = [0.97, 1.03] }
"#,
    ),
    (
        "spiral2d-g500",
        r#"
kind = "sweep2d"
citation = "2D spiral, g=500, U0=25, sigma=0.2, Omega=0.12, x0: -9 -> 0 at speed 0.53; vortex overlap 0.98"
g = 500.0
u0 = 25.0
sigma = 0.2
omega = 0.12
x0_start = -9.0
x0_end = 0.0
speed = 0.53
passes = 1
initial = "trap"
g_steps = 10
points = 256
half_width = 12.0
dt = 1e-3
tol = 1e-9
record_stride = 5000
expect = { p1 = [0.96, 1.0] }
"#,
    ),
    (
        "loops-g50",
        r#"
kind = "continuation"
citation = "chemical-potential branches versus x0 for g=50, U0=13.4, sigma=0.2; excited branches form loops"
g = 50.0
u0 = 13.4
sigma = 0.2
x0_start = -7.0
x0_end = 0.0
levels = 4
points = 256
half_width = 10.0
tol = 1e-10
expect = { multivalued0 = [0.0, 0.0], excited_multivalued = [1.0, 1000.0] }
"#,
    ),
    (
        "loops-g-neg1",
        r#"
kind = "continuation"
citation = "chemical-potential branches versus x0 for g=-1, U0=6.4, sigma=0.5; ground branch loop joining a dip-localized and a trap-localized state"
g = -1.0
u0 = 6.4
sigma = 0.5
x0_start = -7.0
x0_end = 0.0
levels = 2
points = 256
half_width = 10.0
tol = 1e-10
expect = { ground_loop_split = [1.0, 1.0] }
"#,
    ),
    (
        "groundstate",
        r#"
kind = "groundstate"
citation = "utility: g=50 ground state of the bare trap; Thomas-Fermi estimate (3g/2)^(2/3)/2 = 8.89"
dim = 1
g = 50.0
u0 = 0.0
sigma = 0.2
x0_start = 0.0
points = 512
half_width = 12.0
tol = 1e-9
expect = { mu = [8.4455, 9.3345] }
"#,
    ),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Validation(vec![format!("unknown preset `{name}`; see list-presets")]))?;
    let mut cfg = ExperimentConfig::from_toml(text)?;
    cfg.name = name.to_string();
    Ok(cfg)
}

pub fn all() -> Vec<ExperimentConfig> {
    PRESETS.iter().map(|(n, _)| preset(n).expect("built-in presets are valid")).collect()
}
