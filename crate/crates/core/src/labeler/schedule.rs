/// Number of warm-up steps: `ceil(warmup_fraction * total_steps)`, at least 1.
pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    // Guard against products like 0.1 * 70 = 7.000000000000001.
    let w = (warmup_fraction * total_steps as f64 - 1e-9).ceil();
    (w.max(1.0) as usize).min(total_steps.max(1))
}

/// Linear warm-up to `target_lr` over the first `W` steps, then inverse
/// square-root decay anchored so that step `W - 1` is exactly `target_lr`.
pub fn lr_at(step: usize, total_steps: usize, warmup_fraction: f64, target_lr: f64) -> f64 {
    let w = warmup_steps(total_steps, warmup_fraction);
    if step < w {
        target_lr * (step + 1) as f64 / w as f64
    } else {
        target_lr * (w as f64 / (step + 1) as f64).sqrt()
    }
}
