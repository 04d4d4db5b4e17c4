//! Benchmark problem registry: explicit first-order IVP systems
//! `du/dt = f(u, t)`, `u(0) = g`, on `[0, X]`.
//!
//! Three systems are built in: a harmonic oscillator (linear), a driven
//! relativistic particle ("slingshot", nonlinear with a pulsed drive), and
//! the Lorenz system (chaotic). Custom systems can be constructed with
//! [`OdeSystem::new`] for tests and experiments.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

type RhsFn = Box<dyn Fn(&[f64], f64, &mut [f64]) -> Result<()> + Send + Sync>;

/// An initial-value problem with an explicit right-hand side.
pub struct OdeSystem {
    id: String,
    dimension: usize,
    initial_state: Vec<f64>,
    horizon: f64,
    params: Vec<(String, f64)>,
    rhs: RhsFn,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("id", &self.id)
            .field("dimension", &self.dimension)
            .field("horizon", &self.horizon)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl OdeSystem {
    pub fn new(
        id: impl Into<String>,
        initial_state: Vec<f64>,
        horizon: f64,
        rhs: impl Fn(&[f64], f64, &mut [f64]) -> Result<()> + Send + Sync + 'static,
    ) -> Result<Self> {
        if initial_state.is_empty() {
            return Err(Error::Dimension("initial state must be non-empty".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(OdeSystem {
            id: id.into(),
            dimension: initial_state.len(),
            initial_state,
            horizon,
            params: Vec::new(),
            rhs: Box::new(rhs),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Named parameters the system was built with (for report echoes).
    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    /// Evaluates `f(u, t)` into `out`.
    pub fn rhs(&self, u: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(u.len(), self.dimension);
        debug_assert_eq!(out.len(), self.dimension);
        (self.rhs)(u, t, out)
    }

    fn with_params(mut self, params: Vec<(String, f64)>) -> Self {
        self.params = params;
        self
    }

    /// Harmonic oscillator on `[0, 100]`: `u1' = u2`, `u2' = -omega^2 u1`,
    /// starting at `(1, 0)`.
    pub fn harmonic(omega: f64) -> Self {
        OdeSystem::new("harmonic", vec![1.0, 0.0], 100.0, move |u, _t, out| {
            let d = rhs_harmonic([u[0], u[1]], omega);
            out.copy_from_slice(&d);
            Ok(())
        })
        .expect("static construction")
        .with_params(vec![("omega".into(), omega)])
    }

    /// Lorenz system on `[0, 20]` starting at `(1, 1, 1)`.
    pub fn lorenz(sigma: f64, rho: f64, beta: f64) -> Self {
        OdeSystem::new("lorenz", vec![1.0, 1.0, 1.0], 20.0, move |u, _t, out| {
            let d = rhs_lorenz([u[0], u[1], u[2]], sigma, rho, beta);
            out.copy_from_slice(&d);
            Ok(())
        })
        .expect("static construction")
        .with_params(vec![
            ("sigma".into(), sigma),
            ("rho".into(), rho),
            ("beta".into(), beta),
        ])
    }

    /// Relativistic slingshot in the state `(h, x, y, z)`.
    pub fn slingshot(p: SlingshotParams) -> Self {
        let params = vec![
            ("epsilon".into(), p.epsilon),
            ("foil".into(), p.foil),
            ("pulse_period".into(), p.pulse_period),
            ("amplitude".into(), p.amplitude),
            ("h0".into(), p.initial_h),
        ];
        OdeSystem::new(
            "slingshot",
            vec![p.initial_h, 0.0, 0.0, 0.0],
            p.horizon,
            move |u, t, out| {
                let d = rhs_slingshot([u[0], u[1], u[2], u[3]], t, &p)?;
                out.copy_from_slice(&d);
                Ok(())
            },
        )
        .expect("static construction")
        .with_params(params)
    }

    /// Builds a registered problem (`harmonic`, `slingshot`, `lorenz`),
    /// applying named parameter overrides.
    pub fn from_id(id: &str, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut ov = overrides.clone();
        let mut take = |key: &str| ov.remove(key);
        let system = match id {
            "harmonic" => {
                let omega = take("omega").unwrap_or(1.0);
                let horizon = take("horizon").unwrap_or(100.0);
                OdeSystem::harmonic(omega).with_horizon(horizon)?
            }
            "lorenz" => {
                let sigma = take("sigma").unwrap_or(10.0);
                let rho = take("rho").unwrap_or(28.0);
                let beta = take("beta").unwrap_or(8.0 / 3.0);
                let horizon = take("horizon").unwrap_or(20.0);
                OdeSystem::lorenz(sigma, rho, beta).with_horizon(horizon)?
            }
            "slingshot" => {
                let mut p = SlingshotParams::default();
                if let Some(v) = take("epsilon") {
                    p.epsilon = v;
                }
                if let Some(v) = take("foil") {
                    p.foil = v;
                }
                if let Some(v) = take("pulse_period") {
                    p.pulse_period = v;
                }
                if let Some(v) = take("amplitude") {
                    p.amplitude = v;
                }
                if let Some(v) = take("h0") {
                    p.initial_h = v;
                }
                if let Some(v) = take("horizon") {
                    p.horizon = v;
                }
                p.validate()?;
                OdeSystem::slingshot(p)
            }
            other => {
                return Err(Error::config(format!(
                    "unknown problem '{other}' (expected harmonic, slingshot, or lorenz)"
                )))
            }
        };
        if let Some(key) = ov.keys().next() {
            return Err(Error::config(format!(
                "unknown override '{key}' for problem '{id}'"
            )));
        }
        Ok(system)
    }
}

/// Parameters of the slingshot system.
///
/// Defaults: `epsilon = 4π`, foil thickness `0.01·2π`, pulse period 1,
/// horizon four periods, drive amplitude 1, initial `h = γ - u_x = 1`
/// (particle at rest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlingshotParams {
    pub epsilon: f64,
    pub foil: f64,
    pub pulse_period: f64,
    pub horizon: f64,
    pub amplitude: f64,
    pub initial_h: f64,
}

impl Default for SlingshotParams {
    fn default() -> Self {
        SlingshotParams {
            epsilon: 4.0 * PI,
            foil: 0.01 * 2.0 * PI,
            pulse_period: 1.0,
            horizon: 4.0,
            amplitude: 1.0,
            initial_h: 1.0,
        }
    }
}

impl SlingshotParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("foil", self.foil),
            ("pulse_period", self.pulse_period),
            ("horizon", self.horizon),
            ("amplitude", self.amplitude),
            ("h0", self.initial_h),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!(
                    "slingshot parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Drive envelope `(a_y, a_z)` at time `t`; zero outside `[0, horizon]`.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        if !(0.0..=self.horizon).contains(&t) {
            return (0.0, 0.0);
        }
        let s2 = (PI * t / self.horizon).sin().powi(2);
        let phase = 2.0 * PI * t / self.pulse_period;
        (
            self.amplitude * phase.sin() * s2,
            self.amplitude * phase.cos() * s2,
        )
    }
}

/// `(u2, -omega^2 u1)`.
pub fn rhs_harmonic(u: [f64; 2], omega: f64) -> [f64; 2] {
    [u[1], -omega * omega * u[0]]
}

/// Closed-form harmonic solution `(cos(omega t), -sin(omega t))` for the
/// initial state `(1, 0)`.
pub fn harmonic_exact(t: f64, omega: f64) -> [f64; 2] {
    [(omega * t).cos(), -(omega * t).sin()]
}

/// Classic Lorenz right-hand side.
pub fn rhs_lorenz(u: [f64; 3], sigma: f64, rho: f64, beta: f64) -> [f64; 3] {
    [
        sigma * (u[1] - u[0]),
        u[0] * (rho - u[2]) - u[1],
        u[0] * u[1] - beta * u[2],
    ]
}

/// Slingshot right-hand side in the state `(h, x, y, z)`.
///
/// Fails if `h <= 0` or `1 + b <= 0`, where
/// `b = (1 + u_perp^2 - h^2) / (2 h^2)`.
pub fn rhs_slingshot(state: [f64; 4], t: f64, p: &SlingshotParams) -> Result<[f64; 4]> {
    let [h, x, y, z] = state;
    if !(h > 0.0) {
        return Err(Error::RhsDomain {
            t,
            detail: format!("h = {h} must stay positive"),
        });
    }
    let (ay, az) = p.envelope(t);
    let uy = ay - p.epsilon * y;
    let uz = az - p.epsilon * z;
    let up2 = uy * uy + uz * uz;
    let b = (1.0 + up2 - h * h) / (2.0 * h * h);
    let one_b = 1.0 + b;
    if !(one_b > 0.0) {
        return Err(Error::RhsDomain {
            t,
            detail: format!("1 + b = {one_b} must stay positive"),
        });
    }
    let ex = p.epsilon * (x / (4.0 * p.foil)).tanh();
    Ok([
        (ex - p.epsilon * up2 / (1.0 + up2)) / one_b,
        b / one_b,
        uy / (h * one_b),
        uz / (h * one_b),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn harmonic_rhs_values() {
        assert_eq!(rhs_harmonic([1.0, 0.0], 1.0), [0.0, -1.0]);
        assert_eq!(rhs_harmonic([0.0, 0.0], 1.0), [0.0, 0.0]);
        // on the exact trajectory at t = 1
        let u = harmonic_exact(1.0, 1.0);
        let d = rhs_harmonic(u, 1.0);
        assert!((d[0] - (-(1.0_f64).sin())).abs() < 1e-15);
        assert!((d[1] - (-(1.0_f64).cos())).abs() < 1e-15);
    }

    #[test]
    fn harmonic_exact_values() {
        assert_eq!(harmonic_exact(0.0, 1.0), [1.0, 0.0]);
        let q = harmonic_exact(std::f64::consts::FRAC_PI_2, 1.0);
        assert!(q[0].abs() < 1e-15 && (q[1] + 1.0).abs() < 1e-15);
        let far = harmonic_exact(100.0, 1.0);
        assert!((far[0] - 0.8623188722876839).abs() < 1e-15);
        assert!((far[1] - 0.5063656411097588).abs() < 1e-15);
    }

    #[test]
    fn harmonic_energy_and_linearity() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..1000 {
            let t = rng.gen_range(0.0..200.0);
            let u = harmonic_exact(t, 1.0);
            assert!((u[0] * u[0] + u[1] * u[1] - 1.0).abs() < 4.0 * f64::EPSILON);
            let a = rng.gen_range(-3.0..3.0);
            let scaled = rhs_harmonic([a * u[0], a * u[1]], 1.0);
            let base = rhs_harmonic(u, 1.0);
            assert!((scaled[0] - a * base[0]).abs() < 1e-14);
            assert!((scaled[1] - a * base[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn lorenz_rhs_values() {
        let d = rhs_lorenz([1.0, 1.0, 1.0], 10.0, 28.0, 8.0 / 3.0);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 26.0);
        assert!((d[2] - (1.0 - 8.0 / 3.0)).abs() < 1e-15);
        assert_eq!(rhs_lorenz([0.0; 3], 10.0, 28.0, 8.0 / 3.0), [0.0; 3]);
        // nontrivial equilibrium
        let c = -(8.0 / 3.0 * 27.0_f64).sqrt();
        let e = rhs_lorenz([c, c, 27.0], 10.0, 28.0, 8.0 / 3.0);
        for v in e {
            assert!(v.abs() < 1e-12, "equilibrium residual {v}");
        }
    }

    /// Divergence of the Lorenz flow is -(sigma + 1 + beta) everywhere;
    /// checked by finite differences at random states.
    #[test]
    fn lorenz_divergence_constant() {
        let (sg, rho, beta) = (10.0, 28.0, 8.0 / 3.0);
        let expected = -(sg + 1.0 + beta);
        let h = 1e-6;
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let s = [
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-25.0..25.0),
                rng.gen_range(0.0..45.0),
            ];
            let mut trace = 0.0;
            for i in 0..3 {
                let mut hi = s;
                let mut lo = s;
                hi[i] += h;
                lo[i] -= h;
                trace += (rhs_lorenz(hi, sg, rho, beta)[i] - rhs_lorenz(lo, sg, rho, beta)[i])
                    / (2.0 * h);
            }
            assert!((trace - expected).abs() < 1e-5, "trace {trace}");
        }
    }

    #[test]
    fn slingshot_at_rest_origin_is_stationary_at_t0() {
        let p = SlingshotParams::default();
        let d = rhs_slingshot([1.0, 0.0, 0.0, 0.0], 0.0, &p).unwrap();
        assert_eq!(d, [0.0, 0.0, 0.0, 0.0]);
    }

    /// Frozen from an independent scalar evaluation of the chain at
    /// t = T_L/4 with unit amplitude.
    #[test]
    fn slingshot_quarter_period_frozen_values() {
        let p = SlingshotParams::default();
        let (ay, az) = p.envelope(0.25);
        assert!((ay - (PI / 16.0).sin().powi(2)).abs() < 1e-16);
        assert!(az.abs() < 1e-17); // cos(pi/2) is ~6e-17 in f64
        let d = rhs_slingshot([1.0, 0.0, 0.0, 0.0], 0.25, &p).unwrap();
        let frozen = [
            -0.018163923705093402,
            0.0007237664790104357,
            0.03803268702298915,
            2.3288304212838366e-18,
        ];
        for (got, want) in d.iter().zip(frozen) {
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "got {got}, frozen {want}"
            );
        }
    }

    #[test]
    fn slingshot_b_zero_cases() {
        let p = SlingshotParams::default();
        // u_perp = 0 and h = 1 => b = 0 => dx/dt = 0 (outside the pulse)
        let d = rhs_slingshot([1.0, 0.3, 0.0, 0.0], 5.0, &p).unwrap();
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn slingshot_envelope_support() {
        let p = SlingshotParams::default();
        let (a0, b0) = p.envelope(0.0);
        let (a1, b1) = p.envelope(p.horizon);
        assert_eq!(a0, 0.0);
        assert!(b0.abs() < 1e-30);
        assert!(a1.abs() < 1e-15 && b1.abs() < 1e-15);
        assert_eq!(p.envelope(p.horizon + 0.5), (0.0, 0.0));
        assert_eq!(p.envelope(-0.5), (0.0, 0.0));
    }

    #[test]
    fn slingshot_domain_errors() {
        let p = SlingshotParams::default();
        assert!(matches!(
            rhs_slingshot([0.0, 0.0, 0.0, 0.0], 0.0, &p),
            Err(Error::RhsDomain { .. })
        ));
        assert!(matches!(
            rhs_slingshot([-1.0, 0.0, 0.0, 0.0], 0.3, &p),
            Err(Error::RhsDomain { .. })
        ));
        // h large enough that 1 + b goes non-positive
        assert!(rhs_slingshot([2.0, 0.0, 0.0, 0.0], 0.0, &p).is_err());
    }

    /// The trainers consume the operator with the opposite sign convention
    /// (`N = -f`). One audit per registered problem: an independently coded
    /// `N` agrees with `-f` at random states.
    #[test]
    fn sign_convention_audit() {
        let mut rng = StdRng::seed_from_u64(17);
        let harmonic = OdeSystem::harmonic(1.0);
        let lorenz = OdeSystem::lorenz(10.0, 28.0, 8.0 / 3.0);
        let slingshot = OdeSystem::slingshot(SlingshotParams::default());
        for _ in 0..200 {
            let u = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let mut f = [0.0; 2];
            harmonic.rhs(&u, 0.0, &mut f).unwrap();
            let n_op = [-u[1], u[0]]; // N[u] for u'' = -u written first order
            assert_eq!([-f[0], -f[1]], n_op);

            let u = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(0.0..40.0),
            ];
            let mut f = [0.0; 3];
            lorenz.rhs(&u, 0.0, &mut f).unwrap();
            let n_op = [
                -10.0 * (u[1] - u[0]),
                -(u[0] * (28.0 - u[2]) - u[1]),
                -(u[0] * u[1] - 8.0 / 3.0 * u[2]),
            ];
            for i in 0..3 {
                assert_eq!(-f[i], n_op[i]);
            }

            let s = [
                rng.gen_range(0.5..1.5),
                rng.gen_range(-0.1..0.1),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            ];
            let t = rng.gen_range(0.0..4.0);
            let mut f = [0.0; 4];
            if slingshot.rhs(&s, t, &mut f).is_ok() {
                // the operator chain written out again, independently of rhs_slingshot
                let p = SlingshotParams::default();
                let s2 = (PI * t / p.horizon).sin().powi(2);
                let ay = p.amplitude * (2.0 * PI * t / p.pulse_period).sin() * s2;
                let az = p.amplitude * (2.0 * PI * t / p.pulse_period).cos() * s2;
                let (uy, uz) = (ay - p.epsilon * s[2], az - p.epsilon * s[3]);
                let up2 = uy * uy + uz * uz;
                let b = (1.0 + up2 - s[0] * s[0]) / (2.0 * s[0] * s[0]);
                let ex = p.epsilon * (s[1] / (4.0 * p.foil)).tanh();
                let n_op = [
                    -((ex - p.epsilon * up2 / (1.0 + up2)) / (1.0 + b)),
                    -(b / (1.0 + b)),
                    -(uy / (s[0] * (1.0 + b))),
                    -(uz / (s[0] * (1.0 + b))),
                ];
                for i in 0..4 {
                    assert_eq!(-f[i], n_op[i]);
                }
            }
        }
    }

    #[test]
    fn from_id_rejects_unknown() {
        let empty = BTreeMap::new();
        assert!(OdeSystem::from_id("pendulum", &empty).is_err());
        let mut bad = BTreeMap::new();
        bad.insert("mass".to_string(), 2.0);
        assert!(OdeSystem::from_id("harmonic", &bad).is_err());
    }

    #[test]
    fn from_id_applies_overrides() {
        let mut ov = BTreeMap::new();
        ov.insert("omega".to_string(), 2.5);
        ov.insert("horizon".to_string(), 7.0);
        let sys = OdeSystem::from_id("harmonic", &ov).unwrap();
        assert_eq!(sys.horizon(), 7.0);
        let mut f = [0.0; 2];
        sys.rhs(&[1.0, 0.0], 0.0, &mut f).unwrap();
        assert_eq!(f[1], -6.25);
    }
}
