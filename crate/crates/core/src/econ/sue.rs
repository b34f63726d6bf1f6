use super::EconError;

/// Standardized unexpected earnings for a firm's consecutive annual
/// earnings. Element `t` is `None` for the first year, which has no change.
pub fn compute_sue(earnings: &[f64]) -> Result<Vec<Option<f64>>, EconError> {
    let series: Vec<Option<f64>> = earnings.iter().map(|&e| Some(e)).collect();
    compute_sue_gapped(&series)
}

/// Like [`compute_sue`] but tolerates missing years. A change is defined
/// only where both the year and its predecessor are present.
pub fn compute_sue_gapped(earnings: &[Option<f64>]) -> Result<Vec<Option<f64>>, EconError> {
    let ue: Vec<Option<f64>> = (0..earnings.len())
        .map(|t| match (t.checked_sub(1).and_then(|p| earnings[p]), earnings[t]) {
            (Some(prev), Some(cur)) => Some(cur - prev),
            _ => None,
        })
        .collect();
    let present: Vec<f64> = ue.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(EconError::InsufficientHistory(present.len()));
    }
    if present.iter().any(|v| !v.is_finite()) {
        return Err(EconError::NonFinite("earnings".into()));
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd <= f64::EPSILON * mean.abs().max(1.0) * 16.0 {
        return Err(EconError::DegenerateSeries);
    }
    Ok(ue.iter().map(|u| u.map(|u| (u - mean) / sd)).collect())
}

/// Three-way outcome: `+1` above `tau`, `-1` below `-tau`, otherwise 0.
pub fn categorize(sue: Option<f64>, tau: f64) -> Result<i8, EconError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EconError::InvalidTau(tau));
    }
    let s = sue.filter(|s| s.is_finite()).ok_or(EconError::MissingSue)?;
    Ok(if s > tau {
        1
    } else if s < -tau {
        -1
    } else {
        0
    })
}
