//! Closed-loop CSTR with an exothermic first-order reaction.
//!
//! States are outlet concentration `C_A` (kmol/m³) and temperature `T` (K);
//! time is in minutes. Two discrete PI loops, updated once per 1 s sample,
//! drive the feed flow `q` from the concentration error and the coolant
//! temperature `T_c` from the temperature error. Process noise is held
//! constant over each sample interval; measurement noise is added to the
//! recorded `[C_A, T, T_c, q]` only.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{low_pass, FaultId, FaultSpec, LabeledData, Label};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Recording interval in seconds.
pub const SAMPLE_SECONDS: f64 = 1.0;
pub const CSTR_VARIABLES: [&str; 4] = ["C_A", "T", "T_c", "q"];

/// One PI(D) loop: `u = u_nom − K₂((K₁ + T_d) ε + T_I ∫ε dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLoop {
    pub k1: f64,
    pub k2: f64,
    pub t_d: f64,
    /// Integral gain factor, 1/min.
    pub t_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CstrConfig {
    /// Vessel volume, m³.
    pub volume: f64,
    /// Feed concentration, kmol/m³.
    pub feed_concentration: f64,
    /// Feed temperature, K.
    pub feed_temperature: f64,
    /// Pre-exponential factor, 1/min.
    pub k0: f64,
    /// Activation energy over gas constant, K.
    pub activation_temperature: f64,
    /// Heat of reaction, cal/kmol (negative: exothermic).
    pub reaction_enthalpy: f64,
    /// Density, g/m³.
    pub density: f64,
    /// Heat capacity, cal/(g·K).
    pub heat_capacity: f64,
    /// Heat-transfer coefficient times area, cal/(min·K).
    pub ua: f64,
    /// Concentration setpoint, kmol/m³.
    pub setpoint_concentration: f64,
    /// Temperature setpoint, K.
    pub setpoint_temperature: f64,
    /// Nominal feed flow, m³/min; `None` solves the steady-state mass balance.
    pub q_nominal: Option<f64>,
    /// Nominal coolant temperature, K; `None` solves the energy balance.
    pub coolant_nominal: Option<f64>,
    /// Concentration loop (manipulates `q`).
    pub concentration_loop: ControlLoop,
    /// Temperature loop (manipulates `T_c`).
    pub temperature_loop: ControlLoop,
    /// RK4 step, seconds; must divide the 1 s sampling interval.
    pub dt_seconds: f64,
    /// Standard deviations of `v₁` (kmol/(m³·min)) and `v₂` (K/min).
    pub process_noise: [f64; 2],
    /// Standard deviations of the measurement noise on `[C_A, T, T_c, q]`.
    pub measurement_noise: [f64; 4],
    /// Samples simulated and discarded before recording starts.
    pub warmup_samples: usize,
    /// Retention of the first-order smoother applied to the recorded
    /// channels; `None` records the raw measurements.
    pub low_pass: Option<f64>,
    pub seed: u64,
}

impl Default for CstrConfig {
    fn default() -> Self {
        Self {
            volume: 10.0,
            feed_concentration: 2.0,
            feed_temperature: 370.0,
            k0: 1.0e10,
            activation_temperature: 8330.1,
            reaction_enthalpy: -1.3e8,
            density: 1.0e6,
            heat_capacity: 1.0,
            ua: 5.34e7,
            setpoint_concentration: 0.8,
            setpoint_temperature: 368.25,
            q_nominal: None,
            coolant_nominal: None,
            concentration_loop: ControlLoop {
                k1: 1.0,
                k2: 8.0,
                t_d: 0.0,
                t_i: 1.0,
            },
            temperature_loop: ControlLoop {
                k1: 1.0,
                k2: 3.0,
                t_d: 0.0,
                t_i: 1.0,
            },
            dt_seconds: 0.1,
            process_noise: [0.005, 0.2],
            measurement_noise: [0.005, 0.1, 0.1, 0.05],
            warmup_samples: 600,
            low_pass: Some(0.8),
            seed: 0,
        }
    }
}

impl CstrConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("volume", self.volume),
            ("k0", self.k0),
            ("activation_temperature", self.activation_temperature),
            ("density", self.density),
            ("heat_capacity", self.heat_capacity),
            ("ua", self.ua),
            ("dt_seconds", self.dt_seconds),
            ("feed_concentration", self.feed_concentration),
            ("setpoint_temperature", self.setpoint_temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.setpoint_concentration > 0.0
            && self.setpoint_concentration < self.feed_concentration)
        {
            return Err(Error::InvalidParameter(
                "concentration setpoint must lie in (0, C_Af)".into(),
            ));
        }
        self.substeps()?;
        if self
            .process_noise
            .iter()
            .chain(&self.measurement_noise)
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidParameter("noise levels must be non-negative".into()));
        }
        if let Some(r) = self.low_pass {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "low-pass retention {r} must lie in [0, 1)"
                )));
            }
        }
        Ok(())
    }

    fn substeps(&self) -> Result<usize> {
        let ratio = SAMPLE_SECONDS / self.dt_seconds;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(Error::InvalidParameter(format!(
                "dt = {} s must divide the {SAMPLE_SECONDS} s sampling interval",
                self.dt_seconds
            )));
        }
        Ok(n as usize)
    }

    fn rate(&self, t: f64) -> f64 {
        self.k0 * (-self.activation_temperature / t).exp()
    }

    /// `(q, T_c)` that hold the setpoints at steady state without noise.
    pub fn nominal_inputs(&self) -> (f64, f64) {
        let (ca, t) = (self.setpoint_concentration, self.setpoint_temperature);
        let r = self.rate(t) * ca;
        let q = self
            .q_nominal
            .unwrap_or(self.volume * r / (self.feed_concentration - ca));
        let heat = self.reaction_enthalpy / (self.density * self.heat_capacity);
        let cool = self.ua / (self.volume * self.density * self.heat_capacity);
        let tc = self.coolant_nominal.unwrap_or_else(|| {
            t - ((q / self.volume) * (self.feed_temperature - t) - heat * r) / cool
        });
        (q, tc)
    }
}

/// Simulated run with the true (noise-free) states and disturbance inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CstrTrace {
    /// Recorded `[C_A, T, T_c, q]`, after noise and optional smoothing.
    pub recorded: LabeledData,
    /// True `[C_A, T]` at each sampling instant.
    pub states: Vec<[f64; 2]>,
    /// Feed temperature at each sampling instant.
    pub feed_temperature: Vec<f64>,
    /// Vessel volume at each sampling instant.
    pub volume: Vec<f64>,
}

/// Simulates `n_samples` seconds of operation.
pub fn simulate_cstr(
    config: &CstrConfig,
    n_samples: usize,
    fault: Option<&FaultSpec>,
) -> Result<LabeledData> {
    simulate_cstr_trace(config, n_samples, fault).map(|t| t.recorded)
}

pub fn simulate_cstr_trace(
    config: &CstrConfig,
    n_samples: usize,
    fault: Option<&FaultSpec>,
) -> Result<CstrTrace> {
    config.validate()?;
    if n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(f) = fault {
        if !matches!(f.id, FaultId::F4 | FaultId::F5) {
            return Err(Error::InvalidParameter(format!(
                "fault {:?} does not apply to the CSTR",
                f.id
            )));
        }
        if f.onset_index >= n_samples {
            return Err(Error::InvalidParameter(format!(
                "fault onset {} beyond series length {n_samples}",
                f.onset_index
            )));
        }
    }

    let substeps = config.substeps()?;
    let ts = SAMPLE_SECONDS / 60.0;
    let h = ts / substeps as f64;
    let (q_nom, tc_nom) = config.nominal_inputs();
    let sp = [config.setpoint_concentration, config.setpoint_temperature];
    let heat = config.reaction_enthalpy / (config.density * config.heat_capacity);
    let cool = config.ua / (config.density * config.heat_capacity);
    let limit = 10.0 * config.setpoint_temperature;

    // disturbance inputs at time `tau` (minutes since recording start)
    let onset_time = fault.map(|f| f.onset_index as f64 * ts);
    let env = |tau: f64| -> (f64, f64) {
        let mut v = config.volume;
        let mut tf = config.feed_temperature;
        if let (Some(f), Some(t0)) = (fault, onset_time) {
            if tau >= t0 {
                match f.id {
                    FaultId::F4 => tf *= 1.0 + f.magnitude,
                    FaultId::F5 => v += f.magnitude * (tau - t0),
                    _ => {}
                }
            }
        }
        (v, tf)
    };
    let rhs = |x: [f64; 2], q: f64, tc: f64, v: f64, tf: f64, noise: [f64; 2]| -> [f64; 2] {
        let r = config.rate(x[1]) * x[0];
        [
            q / v * (config.feed_concentration - x[0]) - r + noise[0],
            q / v * (tf - x[1]) - heat * r + cool / v * (tc - x[1]) + noise[1],
        ]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = sp;
    let mut integral = [0.0; 2];
    let mut recorded = DMatrix::zeros(4, n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut feed = Vec::with_capacity(n_samples);
    let mut volume = Vec::with_capacity(n_samples);
    let loops = [config.concentration_loop, config.temperature_loop];
    let warmup = config.warmup_samples as i64;

    for s in -warmup..n_samples as i64 {
        let t = s as f64 * ts;
        let mut u = [q_nom, tc_nom];
        for i in 0..2 {
            let e = x[i] - sp[i];
            integral[i] += e * ts;
            let lp = loops[i];
            u[i] -= lp.k2 * ((lp.k1 + lp.t_d) * e + lp.t_i * integral[i]);
        }
        let (q, tc) = (u[0], u[1]);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let noise = [
            config.process_noise[0] * draw(),
            config.process_noise[1] * draw(),
        ];
        let meas: [f64; 4] = std::array::from_fn(|i| config.measurement_noise[i] * draw());

        if s >= 0 {
            let j = s as usize;
            let clean = [x[0], x[1], tc, q];
            for i in 0..4 {
                recorded[(i, j)] = clean[i] + meas[i];
            }
            states.push(x);
            let (v, tf) = env(t);
            feed.push(tf);
            volume.push(v);
        }

        for step in 0..substeps {
            let tau = t + step as f64 * h;
            let (v0, tf0) = env(tau);
            let (v1, tf1) = env(tau + 0.5 * h);
            let (v2, tf2) = env(tau + h);
            let k1 = rhs(x, q, tc, v0, tf0, noise);
            let k2 = rhs(axpy(x, 0.5 * h, k1), q, tc, v1, tf1, noise);
            let k3 = rhs(axpy(x, 0.5 * h, k2), q, tc, v1, tf1, noise);
            let k4 = rhs(axpy(x, h, k3), q, tc, v2, tf2, noise);
            for i in 0..2 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if !x.iter().all(|v| v.is_finite()) || x[1].abs() > limit || x[0] < -limit {
                return Err(Error::UnstableConfiguration { time: tau + h });
            }
        }
    }

    let mut data = DataMatrix::new(recorded)?;
    if let Some(r) = config.low_pass {
        data = low_pass(&data, r)?;
    }
    let labels: Vec<Label> = (0..n_samples)
        .map(|j| match fault {
            Some(f) if j >= f.onset_index => f.id.label(),
            _ => 0,
        })
        .collect();
    Ok(CstrTrace {
        recorded: LabeledData { data, labels },
        states,
        feed_temperature: feed,
        volume,
    })
}

fn axpy(x: [f64; 2], a: f64, k: [f64; 2]) -> [f64; 2] {
    [x[0] + a * k[0], x[1] + a * k[1]]
}
