use crate::error::{Error, Result};
use crate::grid::IntensityMap;
use crate::modes::intensity_map_moments;

/// Centred three-point moving mean; endpoints average the neighbours they have.
pub fn smooth_three_point(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            let w = &series[lo..=hi];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Horizontal cut through the intensity centroid, linearly interpolated
/// between the two bracketing rows.
fn centroid_cut(map: &IntensityMap) -> Result<(Vec<f64>, f64)> {
    let stats = intensity_map_moments(map)?;
    let g = map.grid();
    let fy =
        (stats.centroid.1 / g.dy() + g.ny() as f64 / 2.0 - 0.5).clamp(0.0, (g.ny() - 1) as f64);
    let r0 = fy.floor() as usize;
    let r1 = (r0 + 1).min(g.ny() - 1);
    let a = fy - r0 as f64;
    let cut = (0..g.nx())
        .map(|ix| (1.0 - a) * map.at(ix, r0) + a * map.at(ix, r1))
        .collect();
    let cx = stats.centroid.0 / g.dx() + g.nx() as f64 / 2.0 - 0.5;
    Ok((cut, cx))
}

/// Height of the parabola through three samples centred on a maximum.
fn refined_height(s: &[f64], i: usize) -> f64 {
    let (l, c, r) = (s[i - 1], s[i], s[i + 1]);
    let curv = l - 2.0 * c + r;
    if curv >= 0.0 {
        return c;
    }
    let off = 0.5 * (l - r) / curv;
    c - 0.25 * (l - r) * off
}

/// Central peak height over the mean of the two outer peak heights, on the
/// smoothed cut through the centroid. The central peak is the one nearest
/// the centroid; each outer peak is the highest on its side.
pub fn tem20_peak_ratio(map: &IntensityMap) -> Result<f64> {
    let (cut, cx) = centroid_cut(map)?;
    let s = smooth_three_point(&cut);
    let top = s.iter().copied().fold(0.0, f64::max);
    let floor = 1e-3 * top;
    let peaks: Vec<usize> = (1..s.len().saturating_sub(1))
        .filter(|&i| s[i] >= s[i - 1] && s[i] > s[i + 1] && s[i] > floor)
        .collect();
    if peaks.len() < 3 {
        return Err(Error::TooFewPeaks { found: peaks.len() });
    }
    let centre = *peaks
        .iter()
        .min_by(|&&a, &&b| (a as f64 - cx).abs().total_cmp(&(b as f64 - cx).abs()))
        .unwrap();
    let best = |it: &mut dyn Iterator<Item = &usize>| -> Option<f64> {
        it.map(|&i| refined_height(&s, i)).max_by(f64::total_cmp)
    };
    let left = best(&mut peaks.iter().filter(|&&i| i < centre));
    let right = best(&mut peaks.iter().filter(|&&i| i > centre));
    match (left, right) {
        (Some(l), Some(r)) => Ok(refined_height(&s, centre) / (0.5 * (l + r))),
        _ => Err(Error::TooFewPeaks { found: peaks.len() }),
    }
}
