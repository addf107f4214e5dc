//! CSV output of trajectories and snapshots.

use std::io::Write;

use super::{holder_quarter_norm, snapshot_lux_norms, Trajectory};
use crate::error::Result;
use crate::orlicz::OrliczParams;

pub const TRAJECTORY_HEADER: [&str; 8] =
    ["t", "E_kin", "E_grad", "E_pot", "E_total", "u_Linf", "holder14", "lux_norm"];

/// One row per snapshot. The Luxemburg norm uses `p` of the run and the
/// given `κ`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, kappa: f64, w: W) -> Result<()> {
    let lux = snapshot_lux_norms(traj, &OrliczParams::new(traj.p, kappa))?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRAJECTORY_HEADER)?;
    for ((s, e), l) in traj.snapshots.iter().zip(&traj.energies).zip(lux) {
        let linf = s.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let row = [
            s.t,
            e.kinetic,
            e.gradient,
            e.potential,
            e.total,
            linf,
            holder_quarter_norm(&traj.grid, &s.u),
            l,
        ];
        wr.write_record(row.iter().map(|x| x.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Snapshot `k` as `r,u,ut` rows.
pub fn write_snapshot_csv<W: Write>(traj: &Trajectory, k: usize, w: W) -> Result<()> {
    let s = &traj.snapshots[k];
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["r", "u", "ut"])?;
    for j in 0..traj.grid.nodes() {
        wr.write_record([traj.grid.r(j).to_string(), s.u[j].to_string(), s.ut[j].to_string()])?;
    }
    wr.flush()?;
    Ok(())
}
