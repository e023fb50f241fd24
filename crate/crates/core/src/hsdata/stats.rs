/// Quantile of already-sorted data, linear interpolation between closest ranks
/// (position `q · (n − 1)`).
pub fn quantile_sorted(sorted: &[f32], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let a = sorted[lo] as f64;
    let b = sorted[hi] as f64;
    a + (b - a) * frac
}

pub fn sorted_copy(values: &[f32]) -> Vec<f32> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn quantile(values: &[f32], q: f64) -> f64 {
    quantile_sorted(&sorted_copy(values), q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_linear_rule() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn single_value() {
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }
}
