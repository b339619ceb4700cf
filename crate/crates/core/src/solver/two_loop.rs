use super::MemoryEntry;
use crate::manifold::TangentDirection;
use crate::{Error, Result};

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            iteration: 0,
            what,
            value: v,
        })
    }
}

/// Quasi-Newton direction `−H·grad` from the stored pairs, oldest first.
///
/// The initial inverse Hessian is `⟨s, y⟩/⟨y, y⟩ · I` using the most recent
/// pair; with no memory the result is `−grad`.
pub fn two_loop_direction(grad: &TangentDirection, memory: &[MemoryEntry]) -> Result<TangentDirection> {
    let mut d = grad.clone();
    let Some(last) = memory.last() else {
        return Ok(-grad);
    };

    let mut rho = vec![0.0; memory.len()];
    for (i, e) in memory.iter().enumerate().rev() {
        rho[i] = finite(e.delta * e.s.dot(&d), "two-loop backward coefficient")?;
        d.axpy(-rho[i], &e.y);
    }

    let yy = last.y.dot(&last.y);
    let scale = finite(last.s.dot(&last.y) / yy, "two-loop scaling")?;
    d.scale_mut(scale);

    for (i, e) in memory.iter().enumerate() {
        let beta = finite(e.delta * e.y.dot(&d), "two-loop forward coefficient")?;
        d.axpy(rho[i] - beta, &e.s);
    }
    d.scale_mut(-1.0);
    Ok(d)
}
