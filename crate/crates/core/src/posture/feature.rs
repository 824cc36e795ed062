use super::{AccelSample, PostureError, WINDOW_LEN};

/// Default gravity direction for an upright wearer.
pub const G_DEF: [f64; 3] = [0.0, 0.0, 1.0];
/// Columns at or below this norm carry no direction and are skipped.
pub const MIN_COLUMN_NORM: f64 = 1e-6;

/// One second of filtered samples, `columns[j]` being `g_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelWindow {
    pub index: usize,
    pub columns: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityFeature {
    pub index: usize,
    pub u: f64,
    /// Columns excluded from the mean for being (near) zero.
    pub degenerate: usize,
}

/// Consecutive disjoint 50-sample windows; a trailing partial window is
/// dropped.
pub fn make_windows(samples: &[AccelSample]) -> Vec<AccelWindow> {
    samples
        .chunks_exact(WINDOW_LEN)
        .enumerate()
        .map(|(index, chunk)| AccelWindow {
            index,
            columns: chunk.iter().map(|s| s.a).collect(),
        })
        .collect()
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Mean cosine between each column and [`G_DEF`].
pub fn gravity_feature(window: &AccelWindow) -> Result<GravityFeature, PostureError> {
    if window.columns.len() != WINDOW_LEN {
        return Err(PostureError::WindowLength(window.columns.len()));
    }
    let def_norm = norm(&G_DEF);
    let (mut sum, mut used) = (0.0, 0usize);
    for g in &window.columns {
        let n = norm(g);
        if n <= MIN_COLUMN_NORM || !n.is_finite() {
            continue;
        }
        let dot = g[0] * G_DEF[0] + g[1] * G_DEF[1] + g[2] * G_DEF[2];
        sum += (dot / (n * def_norm)).clamp(-1.0, 1.0);
        used += 1;
    }
    if used == 0 {
        return Err(PostureError::DegenerateWindow {
            index: window.index,
        });
    }
    Ok(GravityFeature {
        index: window.index,
        u: sum / used as f64,
        degenerate: WINDOW_LEN - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posture::sample_time;
    use proptest::prelude::*;

    fn window(cols: Vec<[f64; 3]>) -> AccelWindow {
        AccelWindow { index: 0, columns: cols }
    }

    #[test]
    fn window_counts() {
        let trace = |n: usize| -> Vec<AccelSample> {
            (0..n).map(|k| AccelSample::new(sample_time(k), [0.0, 0.0, 1.0])).collect()
        };
        assert_eq!(make_windows(&trace(500)).len(), 10);
        assert!(make_windows(&trace(49)).is_empty());
        // 592.8 s at 50 Hz.
        let w = make_windows(&trace(29_640));
        assert_eq!(w.len(), 592);
        assert_eq!(w[591].index, 591);
    }

    #[test]
    fn analytic_cases() {
        let u = |c: [f64; 3]| gravity_feature(&window(vec![c; 50])).unwrap().u;
        assert_eq!(u([0.0, 0.0, 1.0]), 1.0);
        assert_eq!(u([0.0, 0.0, -1.0]), -1.0);
        assert_eq!(u([1.0, 0.0, 0.0]), 0.0);
        let mut half = vec![[0.0, 0.0, 1.0]; 25];
        half.extend(vec![[1.0, 0.0, 0.0]; 25]);
        assert!((gravity_feature(&window(half)).unwrap().u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_columns_are_skipped_and_counted() {
        let mut cols = vec![[0.0; 3]; 10];
        cols.extend(vec![[0.0, 3.0, 3.0]; 40]);
        let f = gravity_feature(&window(cols)).unwrap();
        assert_eq!(f.degenerate, 10);
        assert!((f.u - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(
            gravity_feature(&window(vec![[0.0; 3]; 50])),
            Err(PostureError::DegenerateWindow { .. })
        ));
        assert!(gravity_feature(&window(vec![[1.0; 3]; 49])).is_err());
    }

    fn column() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-4.0f64..4.0).prop_filter("non-degenerate", |c| norm(c) > 1e-3)
    }

    proptest! {
        #[test]
        fn bounded_and_scale_invariant(
            cols in prop::collection::vec(column(), 50),
            scales in prop::collection::vec(1e-3f64..1e3, 50),
        ) {
            let f = gravity_feature(&window(cols.clone())).unwrap();
            prop_assert!(f.u.abs() <= 1.0);
            let scaled: Vec<[f64; 3]> = cols.iter().zip(&scales).map(|(c, s)| c.map(|v| v * s)).collect();
            let g = gravity_feature(&window(scaled)).unwrap();
            prop_assert!((f.u - g.u).abs() < 1e-12);
        }
    }
}
