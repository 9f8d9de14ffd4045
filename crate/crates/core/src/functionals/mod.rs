//! Energy functionals and geometric diagnostics evaluated on flow states.
//!
//! All averages are `(1/V)∫`, and in complex dimension one every trace is a
//! density ratio.

mod aubin;
mod diameter;
mod mabuchi;
mod normalization;
mod report;
mod ricci;

pub use aubin::{aubin_i, aubin_j, aubin_j_along, JPath};
pub use diameter::{diameter, meridian_length};
pub use mabuchi::{
    mabuchi_energy, mabuchi_forcing, mabuchi_with_forcing, natural_variant, MabuchiKind,
    MabuchiVariant,
};
pub use normalization::{log_normalizer, normalization_constant, NormalizationKind, NormalizationName};
pub use report::{reports_to_csv, write_csv, FunctionalReport, CSV_COLUMNS};
pub(crate) use ricci::mean_weighted;
pub use ricci::{
    a_functional, alpha_functional, grad_u_l2_sq, grad_u_sq, grad_u_sup, normalization_mass,
    ricci_potential_closed_form, trace_ratio, twisted_ricci_potential, twisted_scalar_field,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::SphereGrid;
    use crate::flow::{init_state, newton_stationary, BumpShape, InitialData, Problem};
    use crate::geometry::{DivisorData, DivisorPoint, FlowParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn poles(n: usize, gamma: f64, eps: f64) -> Problem {
        let g = SphereGrid::axisym(n).unwrap();
        Problem::new(g, DivisorData::poles(), FlowParams::plain(1.0, gamma, eps, 0.0).unwrap()).unwrap()
    }

    fn height(g: &SphereGrid, a: f64) -> crate::discretization::Field {
        g.from_xi(|x| a * (2.0 * x - 1.0))
    }

    #[test]
    fn aubin_i_of_first_harmonic() {
        // x = 2ξ−1 is uniform on [−1, 1] under dV₀/V and Δ₀x = −x
        let g = SphereGrid::axisym(512).unwrap();
        for a in [0.1, 0.4, 0.9] {
            let i = aubin_i(&g, &height(&g, a)).unwrap();
            assert_abs_diff_eq!(i, a * a / 3.0, epsilon = 1e-5);
            let j = aubin_j(&g, &height(&g, a), JPath::Linear).unwrap();
            assert_abs_diff_eq!(j, a * a / 6.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn aubin_i_matches_a_face_sum() {
        // (1/V)∫|∇φ|² with |∇f|² = ξ(1−ξ)f'²/2 and dV₀ = 4π dξ, summed over cell faces
        let g = SphereGrid::axisym(200).unwrap();
        let phi = g.from_xi(|x| 0.3 * (2.0 * x - 1.0));
        let h = 1.0 / g.n_xi as f64;
        let oracle: f64 = (1..g.n_xi)
            .map(|i| {
                let x = i as f64 * h;
                let d = (phi.values[i] - phi.values[i - 1]) / h;
                x * (1.0 - x) * d * d / 2.0 * h
            })
            .sum();
        assert_abs_diff_eq!(aubin_i(&g, &phi).unwrap(), oracle, epsilon = 1e-10);
        assert_eq!(aubin_i(&g, &g.constant(4.0)).unwrap(), 0.0);
        assert_eq!(aubin_j(&g, &g.constant(4.0), JPath::Linear).unwrap(), 0.0);
    }

    #[test]
    fn j_is_path_independent() {
        let g = SphereGrid::axisym(128).unwrap();
        let phi = g.from_xi(|x| 0.3 * (2.0 * x - 1.0) + 0.05 * (6.0 * x * x - 6.0 * x + 1.0));
        let psi = g.from_xi(|x| 0.02 * (x * PI).sin());
        let lin = aubin_j(&g, &phi, JPath::Linear).unwrap();
        let quad = aubin_j(&g, &phi, JPath::Quadratic).unwrap();
        let bent = aubin_j_along(&g, |t| {
            let p = phi.zip(&psi, |a, b| t * t * a + t * (1.0 - t) * b).unwrap();
            let v = phi.zip(&psi, |a, b| 2.0 * t * a + (1.0 - 2.0 * t) * b).unwrap();
            (p, v)
        })
        .unwrap();
        assert_abs_diff_eq!(lin, quad, epsilon = 1e-14);
        assert_abs_diff_eq!(lin, bent, epsilon = 1e-13);
    }

    #[test]
    fn inadmissible_potentials_are_rejected() {
        let g = SphereGrid::axisym(64).unwrap();
        let phi = height(&g, 2.0);
        assert!(matches!(aubin_i(&g, &phi), Err(crate::Error::MetricDegenerate { .. })));
        assert!(matches!(aubin_j(&g, &phi, JPath::Quadratic), Err(crate::Error::MetricDegenerate { .. })));
    }

    #[test]
    fn mabuchi_vanishes_at_zero() {
        let p = poles(128, 0.5, 0.1);
        let m = mabuchi_energy(&p, &p.grid.zeros(), natural_variant(&p)).unwrap();
        assert_eq!(m, 0.0);
        let m = mabuchi_energy(&p, &p.grid.constant(3.0), MabuchiVariant::TwistedEps).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14);
        assert!(matches!(
            mabuchi_energy(&p, &p.grid.zeros(), MabuchiVariant::BetaTwistedEps),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn mabuchi_first_variation_is_the_laplacian_of_the_flow_speed() {
        // d/ds M(φ+sv) = (1/V)∫ v Δ₀(log(1+Δ₀φ) + μφ + G) dV₀
        let p = poles(256, 0.5, 0.1);
        let g = &p.grid;
        let phi = height(g, 0.3);
        let v = g.from_xi(|x| (3.0 * x).cos());
        let rhs = p.rhs(&phi.values, &p.density_ratio(&phi.values)).unwrap();
        let lap = g.laplacian(&p.field(rhs)).unwrap();
        let predicted = g.integrate_ratio(&v.values, &lap.values) / g.volume();
        let m = |s: f64| {
            let f = phi.zip(&v, |a, b| a + s * b).unwrap();
            mabuchi_energy(&p, &f, MabuchiVariant::TwistedEps).unwrap()
        };
        let h = 1e-4;
        let fd = (m(h) - m(-h)) / (2.0 * h);
        assert!(predicted.abs() > 1e-3);
        assert_abs_diff_eq!(fd, predicted, epsilon = 1e-7);
        // and it vanishes at the stationary point
        let s = newton_stationary(&p, None).unwrap();
        let ms = |t: f64| {
            let f = s.phi.zip(&v, |a, b| a + t * b).unwrap();
            mabuchi_energy(&p, &f, MabuchiVariant::TwistedEps).unwrap()
        };
        assert_abs_diff_eq!((ms(h) - ms(-h)) / (2.0 * h), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn ricci_potential_is_normalized_and_agrees_with_closed_form() {
        let p = poles(128, 0.5, 0.1);
        let st = init_state(
            &p,
            &InitialData::Bump {
                shape: BumpShape::Height,
                amplitude: 0.4,
            },
        )
        .unwrap();
        let (u, _) = twisted_ricci_potential(&p, &st);
        assert_abs_diff_eq!(normalization_mass(&u, &st.ratio), 1.0, epsilon = 1e-13);
        let closed = ricci_potential_closed_form(&p, &st.potential()).unwrap();
        let diff = u.zip(&closed, |a, b| a - b).unwrap().sup_norm();
        assert!(diff < 1e-12, "{diff}");
        // Jensen: A ≤ 0
        assert!(a_functional(&p, &st) < 0.0);
        assert!(alpha_functional(&p, &st, true, None).is_err());
    }

    #[test]
    fn stationary_twisted_scalar_is_mu() {
        // exact discretely, up to round-off amplified by Δ₀/ρ₀ ~ n⁴ near the far pole
        for n in [128, 256, 512] {
            let p = poles(n, 0.5, 0.2);
            let s = newton_stationary(&p, None).unwrap();
            let r = twisted_scalar_field(&p, &s.phi).unwrap();
            let dev = r.map(|v| v - p.mu()).sup_norm();
            let floor = 10.0 * (n as f64).powi(4) * (f64::EPSILON + s.residual);
            assert!(dev < floor, "{n}: {dev} vs {floor}");
        }
        let flat = poles(64, 0.5, 0.0);
        assert!(twisted_scalar_field(&flat, &flat.grid.zeros()).is_err());
    }

    #[test]
    fn round_sphere_diameter_is_pi() {
        let g = SphereGrid::axisym(256).unwrap();
        let ones = vec![1.0; g.nodes()];
        assert_abs_diff_eq!(diameter(&g, &ones), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(meridian_length(&g, &ones), PI, epsilon = 1e-12);
        let f = SphereGrid::full(48, 32).unwrap();
        let d = diameter(&f, &vec![1.0; f.nodes()]);
        assert!(d >= PI - 1e-9 && d < 1.03 * PI, "{d}");
    }

    #[test]
    fn football_meridian_is_pi_over_root_beta() {
        use crate::validation::football_density;
        let g = SphereGrid::axisym(8192).unwrap();
        for beta in [0.5, 0.8] {
            let ring: Vec<f64> = (0..g.n_xi)
                .map(|i| football_density(g.xi[i], beta) / (2.0 * (1.0 - g.xi[i]).powi(2)))
                .collect();
            let l = meridian_length(&g, &ring);
            let exact = PI / beta.sqrt();
            assert!((l / exact - 1.0).abs() < 5e-3, "{beta}: {l} vs {exact}");
        }
    }

    #[test]
    fn normalization_constants_satisfy_their_equations() {
        let g = SphereGrid::full(32, 16).unwrap();
        let d = DivisorData::new(
            vec![
                DivisorPoint::finite(0.0, 0.0),
                DivisorPoint::Infinity,
                DivisorPoint::finite(1.0, 0.0),
                DivisorPoint::finite(-1.0, 0.0),
            ],
            None,
        )
        .unwrap();
        let m = d.modulus_sq(&g);
        let (beta, eps) = (0.6, 0.1);
        let c = normalization_constant(&g, &m, NormalizationKind::CBetaEps { beta, epsilon: eps }).unwrap();
        let integrand = m.map(|s| (c - (1.0 - beta) * (eps * eps + s).ln()).exp());
        assert_abs_diff_eq!(g.integrate(&integrand, None).unwrap() / g.volume(), 1.0, epsilon = 1e-12);
        let ch = normalization_constant(&g, &m, NormalizationKind::CHatBeta { beta }).unwrap();
        let integrand = m.map(|s| (ch - (1.0 - beta) * s.ln()).exp());
        assert_abs_diff_eq!(g.integrate(&integrand, None).unwrap() / g.volume(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(log_normalizer(&[2.5; 7]), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn trace_ratio_needs_positive_reference() {
        let g = SphereGrid::axisym(16).unwrap();
        let a = g.constant(2.0);
        assert_eq!(trace_ratio(&a, &g.constant(0.5)).unwrap(), 4.0);
        assert!(trace_ratio(&a, &g.zeros()).is_err());
    }

    #[test]
    fn csv_follows_column_order() {
        let p = poles(64, 0.5, 0.1);
        let st = init_state(&p, &InitialData::Constant { value: 1.0 }).unwrap();
        let r = FunctionalReport::compute(&p, &st).unwrap();
        let text = reports_to_csv(&[r.clone(), r.clone()]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row.len(), CSV_COLUMNS.len());
        assert_eq!(row[0], r.t);
        assert_eq!(row[3], r.m);
        assert_eq!(row[9], r.diam);
        assert_eq!(row[13], r.c_t);
        assert_eq!(text.lines().count(), 3);
    }
}
