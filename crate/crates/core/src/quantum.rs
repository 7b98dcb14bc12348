//! GHZ-state correlators by direct 8-dimensional state-vector arithmetic and
//! a derivative-free optimizer over measurement directions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::context::{Context, Party};
use crate::inequalities::InequalityKind;

pub const NORM_TOLERANCE: f64 = 1e-12;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("direction for {party}{setting} has norm {norm}, not 1")]
    NotUnit { party: Party, setting: u8, norm: f64 },
}

/// Bloch direction from polar angle `theta` and azimuth `phi`.
pub fn direction(theta: f64, phi: f64) -> Vec3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Two unit vectors per party, for settings 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings {
    vectors: [[Vec3; 2]; 3],
}

impl MeasurementSettings {
    pub fn new(vectors: [[Vec3; 2]; 3]) -> Result<Self, QuantumError> {
        for party in Party::ALL {
            for setting in 0..2u8 {
                let v = vectors[party.index()][setting as usize];
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(QuantumError::NotUnit {
                        party,
                        setting,
                        norm,
                    });
                }
            }
        }
        Ok(MeasurementSettings { vectors })
    }

    /// Twelve angles ordered `(theta, phi)` for A0, A1, B0, B1, C0, C1.
    pub fn from_angles(angles: &[f64; 12]) -> Self {
        let vectors = std::array::from_fn(|p| {
            std::array::from_fn(|s| {
                let k = 4 * p + 2 * s;
                direction(angles[k], angles[k + 1])
            })
        });
        MeasurementSettings { vectors }
    }

    /// Directions in the x-y plane with the given azimuths.
    pub fn in_plane(azimuths: [[f64; 2]; 3]) -> Self {
        let vectors = azimuths.map(|pair| pair.map(|phi| [phi.cos(), phi.sin(), 0.0]));
        MeasurementSettings { vectors }
    }

    pub fn vector(&self, party: Party, setting: u8) -> Vec3 {
        self.vectors[party.index()][setting as usize]
    }
}

impl Serialize for MeasurementSettings {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for party in Party::ALL {
            for s in 0..2u8 {
                map.serialize_entry(&format!("{}{}", party, s), &self.vector(party, s))?;
            }
        }
        map.end()
    }
}

type Op2 = [[Complex64; 2]; 2];
type Op8 = [[Complex64; 8]; 8];

/// `n . sigma` for a Bloch vector `n`.
pub fn pauli_dot(n: Vec3) -> Op2 {
    let [x, y, z] = n;
    [
        [Complex64::new(z, 0.0), Complex64::new(x, -y)],
        [Complex64::new(x, y), Complex64::new(-z, 0.0)],
    ]
}

fn identity2() -> Op2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// `a (x) b (x) c`, party A being the most significant qubit.
pub fn kron3(a: &Op2, b: &Op2, c: &Op2) -> Op8 {
    let mut out = [[Complex64::new(0.0, 0.0); 8]; 8];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a[i >> 2][j >> 2] * b[(i >> 1) & 1][(j >> 1) & 1] * c[i & 1][j & 1];
        }
    }
    out
}

/// `(|000> + |111>) / sqrt 2`, optionally times a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GhzState {
    amps: [Complex64; 8],
}

impl GhzState {
    pub fn new() -> Self {
        GhzState::with_phase(0.0)
    }

    pub fn with_phase(phase: f64) -> Self {
        let h = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
        let mut amps = [Complex64::new(0.0, 0.0); 8];
        amps[0] = h;
        amps[7] = h;
        GhzState { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; 8] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<psi| op |psi>`, real part.
    pub fn expectation(&self, op: &Op8) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (i, row) in op.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, entry) in row.iter().enumerate() {
                acc += entry * self.amps[j];
            }
            total += self.amps[i].conj() * acc;
        }
        total.re
    }
}

impl Default for GhzState {
    fn default() -> Self {
        GhzState::new()
    }
}

/// Correlator at a full or pair context; the absent party measures identity.
pub fn correlator_in(state: &GhzState, settings: &MeasurementSettings, ctx: &Context) -> f64 {
    let factor = |p: Party| match ctx.setting(p) {
        Some(s) => pauli_dot(settings.vector(p, s)),
        None => identity2(),
    };
    state.expectation(&kron3(&factor(Party::A), &factor(Party::B), &factor(Party::C)))
}

pub fn ghz_correlator(settings: &MeasurementSettings, ctx: &Context) -> f64 {
    correlator_in(&GhzState::new(), settings, ctx)
}

pub fn evaluate_quantum(kind: InequalityKind, settings: &MeasurementSettings) -> f64 {
    let state = GhzState::new();
    kind.spec()
        .terms
        .iter()
        .map(|(ctx, sign)| f64::from(*sign) * correlator_in(&state, settings, ctx))
        .sum()
}

/// Optimizer knobs; the defaults reproduce the reference values.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub starts: usize,
    /// Grid points scanned per coordinate before refinement.
    pub grid_points: usize,
    pub resolution: f64,
    pub max_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: 7,
            starts: 12,
            grid_points: 6,
            resolution: 1e-8,
            max_sweeps: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub settings: MeasurementSettings,
    pub angles: [f64; 12],
    pub value: f64,
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// Coordinate ascent from one start: each coordinate is scanned on a coarse
/// grid over its full range, then golden-section refined around the best
/// grid point.
fn ascend(objective: &dyn Fn(&[f64; 12]) -> f64, start: [f64; 12], config: &OptimizerConfig) -> ([f64; 12], f64) {
    let mut x = start;
    let mut best = objective(&x);
    let tau = std::f64::consts::TAU;
    for _ in 0..config.max_sweeps {
        let before = best;
        for k in 0..12 {
            let range = if k % 2 == 0 { std::f64::consts::PI } else { tau };
            let step = range / config.grid_points as f64;
            let eval = |v: f64| {
                let mut y = x;
                y[k] = v;
                objective(&y)
            };
            let mut centre = x[k];
            let mut centre_value = best;
            for g in 0..config.grid_points {
                let v = g as f64 * step;
                let fv = eval(v);
                if fv > centre_value {
                    centre = v;
                    centre_value = fv;
                }
            }
            let (v, fv) = golden_max(&eval, centre - step, centre + step, config.resolution);
            if fv > centre_value {
                x[k] = v;
                best = fv;
            } else {
                x[k] = centre;
                best = centre_value;
            }
        }
        if best - before < 1e-14 {
            break;
        }
    }
    (x, best)
}

/// Maximizes the GHZ value of `kind` over all twelve angles.
pub fn optimize_settings_with(kind: InequalityKind, config: &OptimizerConfig) -> Optimized {
    let objective = |a: &[f64; 12]| evaluate_quantum(kind, &MeasurementSettings::from_angles(a));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<([f64; 12], f64)> = None;
    for _ in 0..config.starts {
        let start: [f64; 12] = std::array::from_fn(|k| {
            let range = if k % 2 == 0 { std::f64::consts::PI } else { std::f64::consts::TAU };
            rng.gen::<f64>() * range
        });
        let (x, v) = ascend(&objective, start, config);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    let (angles, value) = best.expect("at least one start");
    Optimized {
        settings: MeasurementSettings::from_angles(&angles),
        angles,
        value,
    }
}

pub fn optimize_settings(kind: InequalityKind) -> (MeasurementSettings, f64) {
    let result = optimize_settings_with(kind, &OptimizerConfig::default());
    (result.settings, result.value)
}
