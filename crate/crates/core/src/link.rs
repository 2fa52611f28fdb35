//! Ground-satellite link budget: path loss, SNR, Shannon rate and
//! per-frame transmission delay. All powers and gains are in dB.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant [dBW/(K·Hz)].
pub const BOLTZMANN_DBW: f64 = -228.6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("loss table is empty")]
    EmptyLossTable,
    #[error("transmission rate is zero")]
    ZeroRate,
    #[error("invalid link parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkRole {
    UplinkTransmitter,
    DownlinkTransmitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEndpointParams {
    pub eirp_dbw: f64,
    pub g_over_t_dbk: f64,
    pub role: LinkRole,
}

impl LinkEndpointParams {
    pub const GV_DEFAULT: Self = Self {
        eirp_dbw: 37.2,
        g_over_t_dbk: 19.19,
        role: LinkRole::UplinkTransmitter,
    };
    pub const SAT_DEFAULT: Self = Self {
        eirp_dbw: 34.9,
        g_over_t_dbk: 15.84,
        role: LinkRole::DownlinkTransmitter,
    };
}

/// Elevation-dependent loss: a constant, or `[[elevation_deg, loss_db], ...]`
/// interpolated linearly with flat extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossModel {
    Constant(f64),
    Table(Vec<[f64; 2]>),
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel::Constant(0.0)
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        match self {
            LossModel::Constant(v) if !v.is_finite() || *v < 0.0 => {
                Err(LinkError::Invalid(format!("loss {v} dB must be finite and non-negative")))
            }
            LossModel::Constant(_) => Ok(()),
            LossModel::Table(t) if t.is_empty() => Err(LinkError::EmptyLossTable),
            LossModel::Table(t) => {
                if t.iter().any(|[e, l]| !e.is_finite() || !l.is_finite() || *l < 0.0) {
                    return Err(LinkError::Invalid("loss table entries must be finite, loss ≥ 0".into()));
                }
                if t.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(LinkError::Invalid("loss table elevations must increase".into()));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, elevation_deg: f64) -> Result<f64, LinkError> {
        match self {
            LossModel::Constant(v) => Ok(*v),
            LossModel::Table(t) => {
                let (first, last) = match (t.first(), t.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return Err(LinkError::EmptyLossTable),
                };
                if elevation_deg <= first[0] {
                    return Ok(first[1]);
                }
                if elevation_deg >= last[0] {
                    return Ok(last[1]);
                }
                let i = t.partition_point(|p| p[0] <= elevation_deg);
                let ([x0, y0], [x1, y1]) = (t[i - 1], t[i]);
                Ok(y0 + (y1 - y0) * (elevation_deg - x0) / (x1 - x0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub scint_db: LossModel,
    #[serde(default)]
    pub gas_db: LossModel,
    #[serde(default = "default_boltzmann")]
    pub boltzmann_dbw: f64,
}

fn default_boltzmann() -> f64 {
    BOLTZMANN_DBW
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 30.0,
            bandwidth_hz: 10e6,
            scint_db: LossModel::default(),
            gas_db: LossModel::default(),
            boltzmann_dbw: BOLTZMANN_DBW,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.carrier_ghz > 0.0) || !self.carrier_ghz.is_finite() {
            return Err(LinkError::Invalid("carrier_ghz must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(LinkError::Invalid("bandwidth_hz must be positive".into()));
        }
        self.scint_db.validate()?;
        self.gas_db.validate()
    }
}

/// Result of one link evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub snr_db: f64,
    pub rate_bps: f64,
    pub fspl_db: f64,
    pub pl_db: f64,
}

/// Free-space path loss [dB] for carrier `f_c` [GHz] and distance `d` [km].
pub fn fspl(f_c_ghz: f64, d_km: f64) -> f64 {
    92.45 + 20.0 * f_c_ghz.log10() + 20.0 * d_km.log10()
}

/// Free-space loss plus scintillation and gas absorption at the given elevation.
pub fn path_loss(f_c_ghz: f64, d_km: f64, elevation_deg: f64, channel: &ChannelParams) -> Result<f64, LinkError> {
    Ok(fspl(f_c_ghz, d_km) + channel.scint_db.at(elevation_deg)? + channel.gas_db.at(elevation_deg)?)
}

/// Receiver SNR [dB] from EIRP, G/T, path loss, Boltzmann constant and bandwidth.
pub fn snr(tx: &LinkEndpointParams, rx: &LinkEndpointParams, pl_db: f64, channel: &ChannelParams) -> f64 {
    tx.eirp_dbw + rx.g_over_t_dbk - pl_db - channel.boltzmann_dbw - 10.0 * channel.bandwidth_hz.log10()
}

/// Shannon rate [bit/s] for bandwidth `B` [Hz] and SNR [dB].
pub fn ergodic_capacity(bandwidth_hz: f64, snr_db: f64) -> f64 {
    bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

pub fn tx_delay(n_bits: f64, rate_bps: f64) -> Result<f64, LinkError> {
    if !(rate_bps > 0.0) {
        return Err(LinkError::ZeroRate);
    }
    Ok(n_bits / rate_bps)
}

/// Full evaluation of one direction at range `d_km` and elevation.
pub fn evaluate(
    tx: &LinkEndpointParams,
    rx: &LinkEndpointParams,
    d_km: f64,
    elevation_deg: f64,
    channel: &ChannelParams,
) -> Result<LinkState, LinkError> {
    let fspl_db = fspl(channel.carrier_ghz, d_km);
    let pl_db = path_loss(channel.carrier_ghz, d_km, elevation_deg, channel)?;
    let snr_db = snr(tx, rx, pl_db, channel);
    Ok(LinkState {
        snr_db,
        rate_bps: ergodic_capacity(channel.bandwidth_hz, snr_db),
        fspl_db,
        pl_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chan() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn fspl_examples() {
        let v = fspl(30.0, 600.0);
        let hand = 92.45 + 20.0 * 30f64.log10() + 20.0 * 600f64.log10();
        assert_eq!(v, hand);
        assert!((v - 177.555).abs() < 1e-3, "{v}");
        assert!((fspl(30.0, 1200.0) - v - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((fspl(1.0, 1.0) - 92.45).abs() < 1e-12);
    }

    #[test]
    fn path_loss_examples() {
        let c = chan();
        assert_eq!(path_loss(30.0, 600.0, 45.0, &c).unwrap(), fspl(30.0, 600.0));
        let c = ChannelParams {
            scint_db: LossModel::Constant(1.0),
            gas_db: LossModel::Constant(0.5),
            ..chan()
        };
        assert!((path_loss(30.0, 600.0, 45.0, &c).unwrap() - 179.055).abs() < 1e-3);
        let table = LossModel::Table(vec![[10.0, 2.0], [90.0, 0.4]]);
        assert!((table.at(50.0).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(table.at(5.0).unwrap(), 2.0);
        assert_eq!(table.at(95.0).unwrap(), 0.4);
        let c = ChannelParams {
            gas_db: LossModel::Table(vec![]),
            ..chan()
        };
        assert_eq!(path_loss(30.0, 600.0, 45.0, &c), Err(LinkError::EmptyLossTable));
        assert_eq!(c.validate(), Err(LinkError::EmptyLossTable));
    }

    #[test]
    fn snr_examples() {
        let c = chan();
        let pl = fspl(30.0, 600.0);
        let up = snr(&LinkEndpointParams::GV_DEFAULT, &LinkEndpointParams::SAT_DEFAULT, pl, &c);
        let hand = 37.2 + 15.84 - pl + 228.6 - 70.0;
        assert!((up - hand).abs() < 1e-12);
        assert!((up - 34.08).abs() < 0.01, "{up}");
        let down = snr(&LinkEndpointParams::SAT_DEFAULT, &LinkEndpointParams::GV_DEFAULT, pl, &c);
        assert!((down - 35.13).abs() < 0.01, "{down}");
        let worse = snr(&LinkEndpointParams::GV_DEFAULT, &LinkEndpointParams::SAT_DEFAULT, pl + 3.5, &c);
        assert!((up - worse - 3.5).abs() < 1e-12);
    }

    #[test]
    fn capacity_and_delay_examples() {
        assert!((ergodic_capacity(10e6, 0.0) - 10e6).abs() < 1e-6);
        let r = ergodic_capacity(10e6, 34.08);
        assert!((r / 1.132e8 - 1.0).abs() < 1e-3, "{r}");
        let t = tx_delay(3e6, 1.132e8).unwrap();
        assert!((t - 0.0265).abs() < 1e-4, "{t}");
        assert_eq!(tx_delay(0.0, r).unwrap(), 0.0);
        assert!(tx_delay(0.1e6, r).unwrap() < tx_delay(3e6, r).unwrap());
        assert_eq!(tx_delay(1.0, 0.0), Err(LinkError::ZeroRate));
    }

    proptest! {
        #[test]
        fn capacity_increasing(a in -20.0f64..60.0, delta in 0.01f64..10.0) {
            prop_assert!(ergodic_capacity(10e6, a + delta) > ergodic_capacity(10e6, a));
        }

        #[test]
        fn snr_decreasing_in_distance(d in 300.0f64..3000.0, step in 1.0f64..500.0, el in 0.0f64..90.0) {
            let c = ChannelParams { scint_db: LossModel::Constant(0.3), gas_db: LossModel::Table(vec![[10.0, 2.0], [90.0, 0.4]]), ..chan() };
            let gv = LinkEndpointParams::GV_DEFAULT;
            let sat = LinkEndpointParams::SAT_DEFAULT;
            let a = evaluate(&gv, &sat, d, el, &c).unwrap();
            let b = evaluate(&gv, &sat, d + step, el, &c).unwrap();
            prop_assert!(b.snr_db < a.snr_db);
            prop_assert!(a.pl_db >= a.fspl_db);
        }
    }
}
