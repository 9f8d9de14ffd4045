use std::f64::consts::PI;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use conical_flow::cli::{Scenario, ScenarioConfig};
use conical_flow::discretization::{Field, SphereGrid};
use conical_flow::flow::{parse_snapshot, potential_text, state_from_potential, Problem};
use conical_flow::functionals::{
    a_functional, aubin_i, aubin_j, diameter, log_normalizer, mabuchi_energy, natural_variant,
    twisted_ricci_potential, normalization_mass, JPath,
};
use conical_flow::geometry::{chi_gamma, chi_gamma_derivative, DivisorData, FlowParams};
use proptest::prelude::*;

fn full() -> &'static SphereGrid {
    static G: OnceLock<SphereGrid> = OnceLock::new();
    G.get_or_init(|| SphereGrid::full(24, 16).unwrap())
}

fn poles() -> &'static Problem {
    static P: OnceLock<Problem> = OnceLock::new();
    P.get_or_init(|| {
        let g = SphereGrid::axisym(96).unwrap();
        Problem::new(g, DivisorData::poles(), FlowParams::plain(1.0, 0.5, 0.1, 0.0).unwrap()).unwrap()
    })
}

/// Low harmonics with the given coefficients: 1, x, x², √(1−x²)cos θ, √(1−x²)sin θ, (1−x²)cos 2θ.
fn harmonic(grid: &SphereGrid, c: &[f64]) -> Field {
    grid.from_fn(|k| {
        let x = 2.0 * grid.xi_at(k) - 1.0;
        let th = grid.theta_at(k);
        let r = (1.0 - x * x).max(0.0).sqrt();
        let b = [1.0, x, x * x, r * th.cos(), r * th.sin(), r * r * (2.0 * th).cos()];
        b.iter().zip(c).map(|(u, v)| u * v).sum()
    })
}

/// Scale `f` so that `1 + Δ₀f ≥ 1 − s` with `s ∈ (0, 1)`.
fn admissible(grid: &SphereGrid, f: Field, s: f64) -> Field {
    let lo = grid.laplacian(&f).unwrap().min();
    if lo < -s {
        f.map(|v| v * s / -lo)
    } else {
        f
    }
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric(a in coeffs(), b in coeffs()) {
        let g = full();
        let (f, h) = (harmonic(g, &a), harmonic(g, &b));
        let lf = g.laplacian(&f).unwrap();
        let lh = g.laplacian(&h).unwrap();
        let x = g.integrate_ratio(&h.values, &lf.values);
        let y = g.integrate_ratio(&f.values, &lh.values);
        prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        // and negative semidefinite
        prop_assert!(g.integrate_ratio(&f.values, &lf.values) <= 1e-12);
    }

    #[test]
    fn aubin_chain_is_an_identity_in_dimension_one(a in coeffs(), s in 0.05f64..0.95) {
        let g = full();
        let phi = admissible(g, harmonic(g, &a), s);
        let i = aubin_i(g, &phi).unwrap();
        let j = aubin_j(g, &phi, JPath::Linear).unwrap();
        let jq = aubin_j(g, &phi, JPath::Quadratic).unwrap();
        prop_assert!(i >= -1e-14);
        prop_assert!(j >= i / 2.0 - 1e-12 && j <= i / 2.0 + 1e-12);
        prop_assert!((j - jq).abs() <= 1e-12);
    }

    #[test]
    fn functionals_ignore_constants(a in coeffs(), s in 0.05f64..0.9, c in -5.0f64..5.0) {
        let p = poles();
        let phi = admissible(&p.grid, p.grid.from_xi(|x| a[1] * (2.0 * x - 1.0) + a[2] * (x * PI).sin()), s);
        let m0 = mabuchi_energy(p, &phi, natural_variant(p)).unwrap();
        let m1 = mabuchi_energy(p, &phi.add_scalar(c), natural_variant(p)).unwrap();
        prop_assert!((m0 - m1).abs() <= 1e-10 * (1.0 + m0.abs()));
        let i0 = aubin_i(&p.grid, &phi).unwrap();
        let i1 = aubin_i(&p.grid, &phi.add_scalar(c)).unwrap();
        prop_assert!((i0 - i1).abs() <= 1e-10 * (1.0 + i0.abs()));
    }

    #[test]
    fn ricci_potential_is_a_probability_density(a in coeffs(), s in 0.05f64..0.9) {
        let p = poles();
        let phi = admissible(&p.grid, p.grid.from_xi(|x| a[1] * (2.0 * x - 1.0) + a[3] * (3.0 * x).cos()), s);
        let st = state_from_potential(p, 0.0, &phi.add_scalar(2.0)).unwrap();
        let (u, _) = twisted_ricci_potential(p, &st);
        prop_assert!((normalization_mass(&u, &st.ratio) - 1.0).abs() < 1e-12);
        prop_assert!(a_functional(p, &st) <= 1e-14);
    }

    #[test]
    fn chi_is_increasing_and_below_its_conical_limit(
        y0 in 0.0f64..0.5, dy in 1e-6f64..0.5, gamma in 0.05f64..1.0, eps in 0.0f64..1.0
    ) {
        let (a, b) = (chi_gamma(y0, gamma, eps).unwrap(), chi_gamma(y0 + dy, gamma, eps).unwrap());
        prop_assert!(b > a);
        prop_assert!(chi_gamma_derivative(y0 + dy, gamma, eps).unwrap() > 0.0);
        let cone = (y0 + dy).powf(gamma) / (gamma * gamma);
        prop_assert!(b <= cone * (1.0 + 1e-12));
    }

    #[test]
    fn log_normalizer_is_shift_equivariant(x in prop::collection::vec(-50.0f64..50.0, 1..40), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        assert_relative_eq!(log_normalizer(&shifted), log_normalizer(&x) + c, epsilon = 1e-10, max_relative = 1e-12);
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = log_normalizer(&x);
        prop_assert!(n >= lo - 1e-12 && n <= hi + 1e-12);
    }

    #[test]
    fn diameter_scales_with_the_metric(v in prop::collection::vec(0.2f64..3.0, 96), c in 0.1f64..10.0) {
        let g = &poles().grid;
        let scaled: Vec<f64> = v.iter().map(|d| c * c * d).collect();
        assert_relative_eq!(diameter(g, &scaled), c * diameter(g, &v), max_relative = 1e-12);
    }

    #[test]
    fn snapshots_round_trip(a in coeffs(), t in 0.0f64..100.0) {
        let p = poles();
        let phi = harmonic(&p.grid, &a);
        let text = potential_text(p, t, &phi).unwrap();
        prop_assert_eq!(parse_snapshot(&text, &p.grid).unwrap(), phi);
    }

    #[test]
    fn configs_round_trip_through_json(
        gammas in prop::collection::btree_set(1u32..=100, 1..4),
        eps in prop::collection::vec(1e-3f64..1.0, 1..3),
        dt in 1e-5f64..1e-1,
        seed in any::<u64>(),
        warm in any::<bool>(),
    ) {
        let gamma: Vec<f64> = gammas.iter().map(|&g| g as f64 / 100.0).collect();
        let text = serde_json::json!({
            "scenario": "angle-sweep",
            "gamma": gamma,
            "epsilon": [eps[0]],
            "stepping": {"dt": dt},
            "seed": seed,
            "warm_start": warm,
        })
        .to_string();
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        prop_assert_eq!(cfg.scenario, Scenario::AngleSweep);
        prop_assert_eq!(&cfg.gamma, &gamma);
        let again = ScenarioConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
