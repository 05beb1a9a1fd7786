//! RRH placement, UE drops, mobility and attachment.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{point_in_hex, HexLayout};
use crate::Real;

/// A remote radio head (transmission point).
#[derive(Debug, Clone)]
pub struct Rrh {
    pub id: usize,
    /// Position in meters.
    pub position: [Real; 2],
    /// Total transmit power in watts.
    pub tx_power_w: Real,
    pub num_antennas: usize,
    pub antenna_gain_dbi: Real,
}

/// A single-antenna user terminal.
#[derive(Debug, Clone)]
pub struct Ue {
    pub id: usize,
    pub position: [Real; 2],
    /// Unit direction vector, constant for the whole run.
    pub direction: [Real; 2],
    pub speed_mps: Real,
    pub serving_rrh: usize,
    pub antenna_gain_dbi: Real,
    pub is_edge: bool,
}

/// Place `rrh_count` RRHs on the spiral hexagonal grid.
pub fn build_layout(
    rrh_count: usize,
    circumradius_m: Real,
    tx_power_w: Real,
    num_antennas: usize,
    antenna_gain_dbi: Real,
) -> Result<(HexLayout<Real>, Vec<Rrh>)> {
    if tx_power_w <= 0.0 {
        return Err(Error::invalid_config("tx power must be positive"));
    }
    if num_antennas == 0 {
        return Err(Error::invalid_config("RRHs need at least one antenna"));
    }
    let layout = HexLayout::new(rrh_count, circumradius_m)?;
    let rrhs = layout
        .cell_positions()
        .into_iter()
        .enumerate()
        .map(|(id, position)| Rrh {
            id,
            position,
            tx_power_w,
            num_antennas,
            antenna_gain_dbi,
        })
        .collect();
    Ok((layout, rrhs))
}

/// Drop `ues_per_cell` UEs uniformly inside each RRH's hexagon, with a
/// uniformly random constant direction each.
pub fn drop_ues<R: Rng>(
    rrhs: &[Rrh],
    layout: &HexLayout<Real>,
    ues_per_cell: usize,
    speed_kmh: Real,
    rx_gain_dbi: Real,
    rng: &mut R,
) -> Result<Vec<Ue>> {
    if ues_per_cell == 0 {
        return Err(Error::invalid_config("ues_per_cell must be at least 1"));
    }
    if speed_kmh < 0.0 {
        return Err(Error::invalid_config("UE speed must be non-negative"));
    }
    let r = layout.circumradius;
    let half_w = 3f64.sqrt() * r / 2.0;
    let mut ues = Vec::with_capacity(rrhs.len() * ues_per_cell);
    for rrh in rrhs {
        for _ in 0..ues_per_cell {
            // Rejection-sample the hexagon from its bounding box.
            let position = loop {
                let x = rrh.position[0] + rng.gen_range(-half_w..=half_w);
                let y = rrh.position[1] + rng.gen_range(-r..=r);
                if point_in_hex([x, y], rrh.position, r) {
                    break [x, y];
                }
            };
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            ues.push(Ue {
                id: ues.len(),
                position,
                direction: [angle.cos(), angle.sin()],
                speed_mps: speed_kmh * 1000.0 / 3600.0,
                serving_rrh: rrh.id,
                antenna_gain_dbi: rx_gain_dbi,
                is_edge: false,
            });
        }
    }
    Ok(ues)
}

/// Advance every UE by `dt_s` seconds along its direction, wrapping
/// positions that leave the composite footprint.
pub fn advance_mobility(ues: &mut [Ue], layout: &HexLayout<Real>, dt_s: Real) {
    for ue in ues.iter_mut() {
        if ue.speed_mps == 0.0 {
            continue;
        }
        let step = ue.speed_mps * dt_s;
        let moved = [
            ue.position[0] + ue.direction[0] * step,
            ue.position[1] + ue.direction[1] * step,
        ];
        ue.position = layout.canonical(moved);
    }
}

/// Re-attach every UE to the RRH with the lowest macro-scale loss `v`,
/// keeping the incumbent on ties. Returns the ids of handed-over UEs.
pub fn update_attachment(ues: &mut [Ue], v_db: impl Fn(usize, usize) -> Real, n_rrhs: usize) -> Vec<usize> {
    let mut handovers = Vec::new();
    for ue in ues.iter_mut() {
        let mut best = ue.serving_rrh;
        let mut best_v = v_db(ue.id, ue.serving_rrh);
        for rrh in 0..n_rrhs {
            let v = v_db(ue.id, rrh);
            if v < best_v {
                best = rrh;
                best_v = v;
            }
        }
        if best != ue.serving_rrh {
            ue.serving_rrh = best;
            handovers.push(ue.id);
        }
    }
    handovers
}
