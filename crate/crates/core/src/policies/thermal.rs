//! Lumped first-order thermal model and the linear delay-temperature law.

use serde::{Deserialize, Serialize};

use crate::Time;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    /// °C
    pub t_ambient: f64,
    /// °C
    pub t_device: f64,
    /// °C per watt
    pub r_th: f64,
    /// joules per °C
    pub c_th: f64,
    /// watts
    pub p_static: f64,
    /// joules per clock edge
    pub p_per_edge: f64,
    /// fractional delay increase per °C
    pub delay_coeff: f64,
    /// temperature at which channel delays are nominal, °C
    pub t_ref: f64,
}

impl ThermalModel {
    /// Dissipated power for `edges` clock edges over `dt` seconds.
    pub fn power(&self, edges: u64, dt: f64) -> f64 {
        self.p_static + self.p_per_edge * edges as f64 / dt
    }

    /// Power at a steady edge rate (edges per second).
    pub fn power_at_rate(&self, rate: f64) -> f64 {
        self.p_static + self.p_per_edge * rate
    }

    /// Delay multiplier at the current device temperature.
    pub fn delay_factor(&self) -> f64 {
        1.0 + self.delay_coeff * (self.t_device - self.t_ref)
    }
}

/// One explicit Euler step of `C dT/dt = P - (T - T_amb) / R`.
pub fn thermal_step(model: &ThermalModel, edges_in_window: u64, dt: f64) -> ThermalModel {
    assert!(dt > 0.0, "thermal step needs dt > 0");
    let p = model.power(edges_in_window, dt);
    let loss = (model.t_device - model.t_ambient) / model.r_th;
    ThermalModel {
        t_device: model.t_device + dt * (p - loss) / model.c_th,
        ..*model
    }
}

/// `d0 * (1 + k (T - T_ref))`, rounded to the nearest picosecond and never
/// below 1 ps.
pub fn effective_delay(d0: Time, model: &ThermalModel) -> Time {
    scale_delay(d0, model.delay_factor())
}

pub(crate) fn scale_delay(d0: Time, factor: f64) -> Time {
    let scaled = (d0.as_ps() as f64 * factor).round();
    if scaled < 1.0 {
        Time(1)
    } else {
        Time(scaled as u64)
    }
}
