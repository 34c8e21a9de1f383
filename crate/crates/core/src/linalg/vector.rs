//! Small helpers over `&[f64]`.

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a·x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn is_zero(x: &[f64]) -> bool {
    x.iter().all(|v| *v == 0.0)
}

/// `‖x − y‖ / max(‖x‖, ‖y‖)`, zero when both vectors vanish.
pub fn relative_distance(x: &[f64], y: &[f64]) -> f64 {
    let diff = norm(&sub(x, y));
    if diff == 0.0 {
        return 0.0;
    }
    diff / norm(x).max(norm(y))
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.abs().max(b.abs())
}

pub fn check_finite(x: &[f64]) -> crate::Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(crate::Error::InvalidInput(format!("entry {i} is not finite")));
    }
    Ok(())
}
