use gk_heat::diagnostics::{
    decay_constants, discrete_energy, dissipation_check, energy_change, lyapunov, mode_decay_oracle, sandwich_holds,
    total_heat,
};
use gk_heat::discretization::{Grid, State};
use gk_heat::model::{MaterialParams, StepperKind};
use gk_heat::scheme::Stepper;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = MaterialParams> {
    (0.0..5e-2, 0.0..1e-2, 0.5..2.0).prop_map(|(tau, mu2, scale)| {
        MaterialParams::new(2e3 * scale, 5e2, tau, mu2, 2e3 / scale, 0.1).unwrap()
    })
}

fn state(j_max: usize, t_range: std::ops::Range<f64>) -> impl Strategy<Value = State> {
    (
        prop::collection::vec(t_range, j_max + 1),
        prop::collection::vec(-1e5..1e5, j_max),
    )
        .prop_map(|(t, q)| State::from_interior(t, &q).unwrap())
}

fn setup() -> impl Strategy<Value = (MaterialParams, Grid, State, State)> {
    (2usize..16, params(), 1e-4..5e-2).prop_flat_map(|(j, p, dt)| {
        let g = Grid::uniform(p.l, j, dt, 1).unwrap();
        (Just(p), Just(g), state(j, -30.0..30.0), state(j, -30.0..30.0))
    })
}

fn kinds(p: &MaterialParams) -> Vec<(StepperKind, MaterialParams)> {
    vec![
        (StepperKind::CoupledImplicit, *p),
        (StepperKind::VectorialAsPrinted, *p),
        (StepperKind::FourierLimit, p.fourier_limit()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn steppers_are_linear((p, g, a, b) in setup(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        for (kind, p) in kinds(&p) {
            let s = Stepper::new(kind, &p, &g).unwrap();
            let combined = s.step(&a.lin_comb(alpha, &b, beta).unwrap()).unwrap();
            let separate = s.step(&a).unwrap().lin_comb(alpha, &s.step(&b).unwrap(), beta).unwrap();
            let scale = s.step(&a).unwrap().max_abs().max(s.step(&b).unwrap().max_abs()) * (alpha.abs() + beta.abs()).max(1.0);
            prop_assert!(combined.max_abs_diff(&separate) <= 1e-10 * scale, "{kind}");
        }
    }

    #[test]
    fn boundary_fluxes_stay_zero((p, g, a, _b) in setup()) {
        for (kind, p) in kinds(&p) {
            let next = Stepper::new(kind, &p, &g).unwrap().step(&a).unwrap();
            let q = next.flux();
            prop_assert_eq!(q[0], 0.0);
            prop_assert_eq!(q[q.len() - 1], 0.0);
        }
    }

    #[test]
    fn uniform_states_are_fixed((p, g, _a, _b) in setup(), value in -100.0..100.0f64) {
        let s = State::uniform(g.j_max, value);
        for (kind, p) in kinds(&p) {
            let next = Stepper::new(kind, &p, &g).unwrap().step(&s).unwrap();
            prop_assert!(next.max_abs_diff(&s) <= 1e-13 * value.abs().max(1.0), "{kind}");
        }
    }

    #[test]
    fn coupled_step_conserves_heat(
        (p, g, _a, _b) in setup(),
        t in prop::collection::vec(5.0..40.0f64, 17),
        q in prop::collection::vec(-1e5..1e5f64, 16),
    ) {
        let j = g.j_max;
        let prev = State::from_interior(t[..=j].to_vec(), &q[..j]).unwrap();
        let next = Stepper::new(StepperKind::CoupledImplicit, &p, &g).unwrap().step(&prev).unwrap();
        let (h0, h1) = (total_heat(&prev, g.dx), total_heat(&next, g.dx));
        prop_assert!((h1 - h0).abs() <= 1e-12 * h0.abs());
    }

    #[test]
    fn coupled_step_dissipates((p, g, a, _b) in setup()) {
        let next = Stepper::new(StepperKind::CoupledImplicit, &p, &g).unwrap().step(&a).unwrap();
        let r = dissipation_check(&a, &next, &p, g.dx, g.dt);
        prop_assert!(r.ok, "lhs {} rhs {}", r.lhs, r.rhs);
    }

    #[test]
    fn energy_change_is_the_difference((p, g, a, b) in setup()) {
        let direct = discrete_energy(&b, &p, g.dx) - discrete_energy(&a, &p, g.dx);
        let scale = discrete_energy(&b, &p, g.dx) + discrete_energy(&a, &p, g.dx);
        prop_assert!((energy_change(&a, &b, &p, g.dx) - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn lyapunov_sandwich_holds_for_any_state((p, g, a, _b) in setup()) {
        let e = discrete_energy(&a, &p, g.dx);
        prop_assert!(sandwich_holds(lyapunov(&a, &p, g.dx).lcal, e, &p));
    }

    #[test]
    fn decay_constants_are_admissible(p in params()) {
        let dc = decay_constants(&p);
        prop_assert!(dc.m > 1.0);
        prop_assert!(dc.omega > 0.0 && dc.beta > 0.0);
        prop_assert!(dc.beta <= 2.0 * p.k / (p.rho * p.c));
        prop_assert!((dc.m1 - 2.0 * dc.gamma0 / dc.omega).abs() <= 1e-12 * dc.m1);
    }

    #[test]
    fn mode_roots_have_the_expected_product_and_sum(p in params(), m in 1u32..6) {
        prop_assume!(p.tau_q > 1e-6);
        let r = mode_decay_oracle(&p, m);
        let fast = r.fast.unwrap();
        let k2 = r.kappa * r.kappa;
        let product = p.k * k2 / (p.rho * p.c * p.tau_q);
        let sum = -(1.0 + p.mu2 * k2) / p.tau_q;
        prop_assert!(((r.slow * fast).re - product).abs() <= 1e-10 * product);
        prop_assert!(((r.slow + fast).re - sum).abs() <= 1e-10 * sum.abs());
        prop_assert!(r.slow.re < 0.0 && fast.re < 0.0);
        prop_assert!(r.slow.re.abs() <= fast.re.abs() + 1e-12 * fast.re.abs());
    }
}
