use std::io::Write;

use crate::channel::{assemble_bs_irs, assemble_irs_ue, channel_power_gain, Scenario};
use crate::manifold::OptimizationPoint;
use crate::objective::positions;
use crate::{Error, Result};

/// Channel power gain of one user as one IRS element sweeps the region.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    /// Grid coordinates along each axis, metres.
    pub axis: Vec<f64>,
    /// `gain[r][c]` with the element at `(axis[c], axis[r])`.
    pub gain: Vec<Vec<f64>>,
    pub extent: f64,
}

/// `‖h_k‖²` with element `element` moved over a `resolution × resolution`
/// grid covering the IRS region and everything else held at `x`.
pub fn gain_landscape(
    scenario: &Scenario,
    x: &OptimizationPoint,
    user: usize,
    element: usize,
    resolution: usize,
) -> Result<Landscape> {
    if resolution < 2 {
        return Err(Error::InvalidInput("landscape resolution must be >= 2".into()));
    }
    if user >= scenario.users() {
        return Err(Error::OutOfRange {
            index: user,
            len: scenario.users(),
        });
    }
    if element >= x.phi.len() {
        return Err(Error::OutOfRange {
            index: element,
            len: x.phi.len(),
        });
    }
    let extent = scenario.irs_region();
    let axis: Vec<f64> = (0..resolution)
        .map(|i| -extent / 2.0 + extent * i as f64 / (resolution - 1) as f64)
        .collect();
    let (t, mut u) = positions(x, scenario);
    let mut gain = Vec::with_capacity(resolution);
    for &y in &axis {
        let mut row = Vec::with_capacity(resolution);
        for &xc in &axis {
            u[element] = [xc, y];
            let g = assemble_bs_irs(&scenario.fri, &t, &u);
            let f = assemble_irs_ue(&scenario.fri, &u, user)?;
            row.push(channel_power_gain(&x.phi, &f, &g));
        }
        gain.push(row);
    }
    Ok(Landscape { axis, gain, extent })
}

impl Landscape {
    /// Two header lines (extent, resolution), then one whitespace-separated
    /// row per grid line.
    pub fn write_matrix<W: Write>(&self, mut out: W) -> Result<()> {
        let h = self.extent / 2.0;
        writeln!(out, "# extent {} {} {} {}", -h, h, -h, h)?;
        writeln!(out, "# resolution {}", self.axis.len())?;
        for row in &self.gain {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Cells strictly greater than all eight neighbours (edges use the
    /// neighbours that exist).
    pub fn local_maxima(&self) -> usize {
        let n = self.gain.len();
        let mut count = 0;
        for r in 0..n {
            for c in 0..n {
                let v = self.gain[r][c];
                let mut is_max = true;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 || rr >= n as i64 || cc >= n as i64 {
                            continue;
                        }
                        if self.gain[rr as usize][cc as usize] >= v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    count += 1;
                }
            }
        }
        count
    }
}
