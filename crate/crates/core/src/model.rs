//! Material parameters, run settings and the Onsager coefficient mapping.
//!
//! A linear Guyer-Krumhansl conductor is described by
//!
//! ```text
//! rho c T_t + q_x = 0
//! tau_q q_t + q - mu2 q_xx + k T_x = 0
//! ```
//!
//! on `(0, l)` with insulated ends. `tau_q = mu2 = 0` is admitted and
//! recovers Fourier conduction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Physical coefficients of the conductor. Construct through [`MaterialParams::new`]
/// or [`validate`]; both reject inadmissible values eagerly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Mass density [kg/m^3].
    pub rho: f64,
    /// Specific heat [J/(kg K)].
    pub c: f64,
    /// Flux relaxation time [s].
    pub tau_q: f64,
    /// Squared dissipation length [m^2].
    pub mu2: f64,
    /// Thermal conductivity [W/(m K)].
    pub k: f64,
    /// Length of the rod [m].
    pub l: f64,
}

impl MaterialParams {
    pub fn new(rho: f64, c: f64, tau_q: f64, mu2: f64, k: f64, l: f64) -> Result<Self> {
        validate(Self {
            rho,
            c,
            tau_q,
            mu2,
            k,
            l,
        })
    }

    /// Reference material: a 10 cm rod with `rho c = 1e6`, `k = 2e3`,
    /// `tau_q = 8 ms` and `mu2 = 2.8e-3 m^2`.
    pub fn reference() -> Self {
        Self {
            rho: 2e3,
            c: 5e2,
            tau_q: 8e-3,
            mu2: 2.8e-3,
            k: 2e3,
            l: 0.1,
        }
    }

    /// Same material with the relaxation and non-local terms removed.
    pub fn fourier_limit(self) -> Self {
        Self {
            tau_q: 0.0,
            mu2: 0.0,
            ..self
        }
    }

    pub fn with_relaxation(self, tau_q: f64, mu2: f64) -> Result<Self> {
        validate(Self { tau_q, mu2, ..self })
    }

    /// Volumetric heat capacity `rho c`.
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.c
    }

    /// Thermal diffusivity `k / (rho c)`.
    pub fn diffusivity(&self) -> f64 {
        self.k / self.heat_capacity()
    }

    pub fn is_fourier(&self) -> bool {
        self.tau_q == 0.0 && self.mu2 == 0.0
    }
}

/// Returns `raw` unchanged if every coefficient is admissible.
///
/// `rho`, `c`, `k`, `l` must be strictly positive; `tau_q` and `mu2` may be zero.
/// Fields are checked in declaration order and the first offender is reported.
pub fn validate(raw: MaterialParams) -> Result<MaterialParams> {
    let strict = |name, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveCoefficient(name))
        }
    };
    let non_negative = |name, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveCoefficient(name))
        }
    };
    strict("rho", raw.rho)?;
    strict("c", raw.c)?;
    non_negative("tau_q", raw.tau_q)?;
    non_negative("mu2", raw.mu2)?;
    strict("k", raw.k)?;
    strict("l", raw.l)?;
    Ok(raw)
}

/// Coefficients of the Onsagerian constitutive relation
/// `(1/T + l1 q_x)_x - rho m q_t - l2 q = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsagerCoefficients {
    pub l1: f64,
    pub l2: f64,
    pub m: f64,
    /// Absolute reference temperature [K].
    pub t_ref: f64,
}

impl OnsagerCoefficients {
    pub fn new(l1: f64, l2: f64, m: f64, t_ref: f64) -> Result<Self> {
        let ok = |v: f64, strict: bool| v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
        if !ok(l1, false) {
            return Err(Error::NonPositiveCoefficient("l1"));
        }
        if !ok(l2, true) {
            return Err(Error::NonPositiveCoefficient("l2"));
        }
        if !ok(m, false) {
            return Err(Error::NonPositiveCoefficient("m"));
        }
        if !ok(t_ref, true) {
            return Err(Error::NonPositiveCoefficient("t_ref"));
        }
        Ok(Self { l1, l2, m, t_ref })
    }
}

/// Guyer-Krumhansl coefficients as produced by [`onsager_to_gk`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkCoefficients {
    pub tau_q: f64,
    pub k: f64,
    pub mu2: f64,
}

/// `tau_q = rho m / l2`, `k = 1 / (l2 T^2)`, `mu2 = l1 / l2`.
pub fn onsager_to_gk(o: &OnsagerCoefficients, rho: f64) -> GkCoefficients {
    GkCoefficients {
        tau_q: rho * o.m / o.l2,
        k: 1.0 / (o.l2 * o.t_ref * o.t_ref),
        mu2: o.l1 / o.l2,
    }
}

/// Inverse of [`onsager_to_gk`] for a given density and reference temperature.
pub fn gk_to_onsager(tau_q: f64, k: f64, mu2: f64, rho: f64, t_ref: f64) -> OnsagerCoefficients {
    let l2 = 1.0 / (k * t_ref * t_ref);
    OnsagerCoefficients {
        l1: mu2 * l2,
        l2,
        m: tau_q * l2 / rho,
        t_ref,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepperKind {
    /// Simultaneous solve of both discrete balance equations.
    #[default]
    CoupledImplicit,
    /// The matrix recursion with `C`, `D` and `B^-1`, evaluated literally.
    VectorialAsPrinted,
    /// Implicit Euler for Fourier conduction; requires `tau_q = mu2 = 0`.
    FourierLimit,
}

impl StepperKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepperKind::CoupledImplicit => "coupled_implicit",
            StepperKind::VectorialAsPrinted => "vectorial_as_printed",
            StepperKind::FourierLimit => "fourier_limit",
        }
    }
}

impl fmt::Display for StepperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepperKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "coupled_implicit" => Ok(StepperKind::CoupledImplicit),
            "vectorial_as_printed" => Ok(StepperKind::VectorialAsPrinted),
            "fourier_limit" => Ok(StepperKind::FourierLimit),
            other => Err(format!(
                "unknown stepper `{other}` (expected coupled_implicit, vectorial_as_printed or fourier_limit)"
            )),
        }
    }
}

/// Relative tolerance for `l/dx` and `t_final/dt` being integers.
pub const MESH_INTEGER_TOL: f64 = 1e-9;

/// Mesh, horizon and initial-profile settings. Temperatures are in degrees Celsius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Base temperature of the cosine profile.
    pub t_base: f64,
    /// Peak-to-peak amplitude of the cosine profile.
    pub t_fluct: f64,
    pub stepper: StepperKind,
}

impl SimulationConfig {
    pub fn new(
        dx: f64,
        dt: f64,
        t_final: f64,
        t_base: f64,
        t_fluct: f64,
        stepper: StepperKind,
    ) -> Result<Self> {
        Self {
            dx,
            dt,
            t_final,
            t_base,
            t_fluct,
            stepper,
        }
        .validated()
    }

    /// `dx = 0.2 mm`, `dt = 12 ms`, 30 s horizon, `T_b = 15`, `T_f = 30`.
    pub fn reference() -> Self {
        Self {
            dx: 2e-4,
            dt: 1.2e-2,
            t_final: 30.0,
            t_base: 15.0,
            t_fluct: 30.0,
            stepper: StepperKind::CoupledImplicit,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSetting {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidSetting {
                name: "t_final",
                reason: format!("must be at least dt = {}, got {}", self.dt, self.t_final),
            });
        }
        for (name, v) in [("T_b", self.t_base), ("T_f", self.t_fluct)] {
            if !v.is_finite() {
                return Err(Error::InvalidSetting {
                    name,
                    reason: "must be finite".into(),
                });
            }
        }
        integer_ratio("t_final/dt", self.t_final, self.dt)?;
        Ok(self)
    }
}

/// `num / den` rounded to the nearest integer, if it is one within [`MESH_INTEGER_TOL`].
pub(crate) fn integer_ratio(what: &'static str, num: f64, den: f64) -> Result<usize> {
    let ratio = num / den;
    let rounded = ratio.round();
    if rounded < 1.0 || ((ratio - rounded).abs() > MESH_INTEGER_TOL * ratio.abs()) {
        return Err(Error::NonDivisibleMesh { what, ratio });
    }
    Ok(rounded as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn reference_params_are_valid() {
        let p = MaterialParams::reference();
        assert_eq!(validate(p), Ok(p));
        assert_eq!(p.heat_capacity(), 1e6);
    }

    #[test]
    fn fourier_limit_is_valid() {
        let p = MaterialParams::reference().fourier_limit();
        assert_eq!(validate(p), Ok(p));
        assert!(p.is_fourier());
    }

    #[test]
    fn zero_conductivity_rejected() {
        let p = MaterialParams {
            k: 0.0,
            ..MaterialParams::reference()
        };
        assert_eq!(validate(p), Err(Error::NonPositiveCoefficient("k")));
    }

    #[test]
    fn first_violation_is_reported() {
        let p = MaterialParams {
            rho: -1.0,
            tau_q: -1.0,
            ..MaterialParams::reference()
        };
        assert_eq!(validate(p), Err(Error::NonPositiveCoefficient("rho")));
        let p = MaterialParams {
            tau_q: -1e-3,
            ..MaterialParams::reference()
        };
        assert_eq!(validate(p), Err(Error::NonPositiveCoefficient("tau_q")));
        let p = MaterialParams {
            l: f64::NAN,
            ..MaterialParams::reference()
        };
        assert_eq!(validate(p), Err(Error::NonPositiveCoefficient("l")));
    }

    #[test]
    fn onsager_zeros_propagate() {
        let o = OnsagerCoefficients::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(
            onsager_to_gk(&o, 1.0),
            GkCoefficients {
                tau_q: 0.0,
                k: 1.0,
                mu2: 0.0
            }
        );
    }

    #[test]
    fn onsager_direct_evaluation() {
        let o = OnsagerCoefficients::new(2.0, 4.0, 8.0, 2.0).unwrap();
        let g = onsager_to_gk(&o, 1.0);
        assert_eq!((g.tau_q, g.k, g.mu2), (2.0, 1.0 / 16.0, 0.5));
        let back = gk_to_onsager(g.tau_q, g.k, g.mu2, 1.0, 2.0);
        assert_eq!(back, o);
    }

    #[test]
    fn gk_to_onsager_examples() {
        let o = gk_to_onsager(0.0, 1.0, 0.0, 1.0, 1.0);
        assert_eq!((o.l1, o.l2, o.m), (0.0, 1.0, 0.0));
        let o = gk_to_onsager(2.0, 1.0 / 16.0, 0.5, 1.0, 2.0);
        assert_eq!((o.l1, o.l2, o.m), (2.0, 4.0, 8.0));
    }

    #[test]
    fn onsager_invariants_enforced() {
        assert!(OnsagerCoefficients::new(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(OnsagerCoefficients::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(OnsagerCoefficients::new(0.0, 1.0, -1.0, 1.0).is_err());
        assert!(OnsagerCoefficients::new(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn config_rejects_nonintegral_horizon() {
        let c = SimulationConfig {
            t_final: 1.0,
            dt: 0.3,
            ..SimulationConfig::reference()
        };
        assert!(matches!(c.validated(), Err(Error::NonDivisibleMesh { .. })));
        let c = SimulationConfig {
            t_final: 1e-3,
            ..SimulationConfig::reference()
        };
        assert!(matches!(
            c.validated(),
            Err(Error::InvalidSetting {
                name: "t_final",
                ..
            })
        ));
    }

    #[test]
    fn stepper_kind_round_trips_through_str() {
        for k in [
            StepperKind::CoupledImplicit,
            StepperKind::VectorialAsPrinted,
            StepperKind::FourierLimit,
        ] {
            assert_eq!(k.as_str().parse::<StepperKind>(), Ok(k));
        }
        assert!("dpl".parse::<StepperKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn onsager_round_trip(
            l1 in 0.0f64..1e3,
            l2 in 1e-6f64..1e6,
            m in 0.0f64..1e3,
            t_ref in 1.0f64..2e3,
            rho in 1e-1f64..1e4,
        ) {
            let o = OnsagerCoefficients::new(l1, l2, m, t_ref).unwrap();
            let g = onsager_to_gk(&o, rho);
            prop_assert!(MaterialParams::new(rho, 1.0, g.tau_q, g.mu2, g.k, 1.0).is_ok());
            let back = gk_to_onsager(g.tau_q, g.k, g.mu2, rho, t_ref);
            prop_assert!(rel(back.l1, o.l1) < 1e-14);
            prop_assert!(rel(back.l2, o.l2) < 1e-14);
            prop_assert!(rel(back.m, o.m) < 1e-14);
        }

        #[test]
        fn gk_round_trip(
            tau_q in 0.0f64..1.0,
            k in 1e-3f64..1e4,
            mu2 in 0.0f64..1e-1,
            rho in 1e-1f64..1e4,
            t_ref in 1.0f64..2e3,
        ) {
            let o = gk_to_onsager(tau_q, k, mu2, rho, t_ref);
            let g = onsager_to_gk(&o, rho);
            prop_assert!(rel(g.tau_q, tau_q) < 1e-14);
            prop_assert!(rel(g.k, k) < 1e-14);
            prop_assert!(rel(g.mu2, mu2) < 1e-14);
        }
    }
}
