//! Two-photon scattering by an inhomogeneous control beam.
//!
//! While the control is on, the stored coherence decays locally at
//! `Gamma(r) = gamma Omega_c^2 / (gamma^2 + Delta^2) * exp(-2 r^2 / Wc^2)`.
//! The decay acts on amplitude, so power falls at `2 Gamma`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{IntensityMap, TransverseField, TransverseGrid};
use crate::params::MemoryParams;
use crate::transport::diffusion_kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateForm {
    /// `gamma Omega^2 / (gamma^2 + Delta^2)`.
    #[default]
    Exact,
    /// `gamma (Omega / Delta)^2`, valid for `Delta >> gamma`.
    Simplified,
}

/// On-axis scattering rate for control Rabi frequency `omega_c`.
pub fn on_axis_rate(params: &MemoryParams, omega_c: f64, form: RateForm) -> f64 {
    let g = params.gamma;
    let w2 = omega_c * omega_c;
    match form {
        RateForm::Exact => g * w2 / (g * g + params.delta * params.delta),
        RateForm::Simplified => g * w2 / (params.delta * params.delta),
    }
}

/// Scattering rate sampled on a transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMap {
    grid: TransverseGrid,
    rates: Vec<f64>,
    gamma0: f64,
    control_waist: f64,
    center: (f64, f64),
}

/// Rate map of a Gaussian control beam of waist `params.control_waist`
/// centred at `center`.
pub fn scattering_rate_map(
    params: &MemoryParams,
    grid: &TransverseGrid,
    center: (f64, f64),
    form: RateForm,
) -> Result<ScatteringMap> {
    let wc = params.control_waist;
    if !(wc > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "control waist must be positive, got {wc}"
        )));
    }
    if params.delta == 0.0 {
        return Err(Error::InvalidParameter(
            "one-photon detuning must be non-zero".into(),
        ));
    }
    let gamma0 = on_axis_rate(params, params.omega_c, form);
    let rates = IntensityMap::from_fn(*grid, |x, y| {
        let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
        gamma0 * (-2.0 * r2 / (wc * wc)).exp()
    });
    Ok(ScatteringMap {
        grid: *grid,
        rates: rates.values().to_vec(),
        gamma0,
        control_waist: wc,
        center,
    })
}

impl ScatteringMap {
    /// Spatially constant rate; the limit of a very wide control beam.
    pub fn uniform(grid: &TransverseGrid, rate: f64) -> Self {
        Self {
            grid: *grid,
            rates: vec![rate; grid.len()],
            gamma0: rate,
            control_waist: f64::INFINITY,
            center: (0.0, 0.0),
        }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate_at(&self, ix: usize, iy: usize) -> f64 {
        self.rates[self.grid.index(ix, iy)]
    }

    /// Rate at the control centre.
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn control_waist(&self) -> f64 {
        self.control_waist
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }
}

/// Multiply the coherence amplitude by `exp(-Gamma(r) duration)`.
pub fn apply_scattering_burn(
    coherence: &TransverseField,
    map: &ScatteringMap,
    duration: f64,
) -> Result<TransverseField> {
    map.grid.ensure_same(coherence.grid())?;
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "burn duration must be >= 0, got {duration}"
        )));
    }
    let values = coherence
        .values()
        .iter()
        .zip(&map.rates)
        .map(|(c, &g)| c * (-g * duration).exp())
        .collect();
    TransverseField::new(*coherence.grid(), values)
}

/// Half-plane selector for a control mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x < 0`.
    Left,
    /// `x > 0`.
    Right,
    /// `y > 0`.
    Top,
    /// `y < 0`.
    Bottom,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }

    pub fn contains(self, x: f64, y: f64) -> bool {
        match self {
            Side::Left => x < 0.0,
            Side::Right => x > 0.0,
            Side::Top => y > 0.0,
            Side::Bottom => y < 0.0,
        }
    }
}

/// Where the control beam is allowed to reach.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlMask {
    Full,
    HalfPlane(Side),
    /// Lit where the raster exceeds one half.
    Raster(IntensityMap),
}

impl ControlMask {
    /// 0/1 transmission on `grid`. Fails if nothing is lit.
    pub fn values(&self, grid: &TransverseGrid) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            ControlMask::Full => vec![1.0; grid.len()],
            ControlMask::HalfPlane(side) => {
                IntensityMap::from_fn(*grid, |x, y| if side.contains(x, y) { 1.0 } else { 0.0 })
                    .values()
                    .to_vec()
            }
            ControlMask::Raster(map) => {
                grid.ensure_same(map.grid())?;
                map.values()
                    .iter()
                    .map(|&t| if t > 0.5 { 1.0 } else { 0.0 })
                    .collect()
            }
        };
        if v.iter().all(|&m| m == 0.0) {
            return Err(Error::EmptyMask);
        }
        Ok(v)
    }

    /// The complementary mask, if one exists.
    pub fn complement(&self) -> Option<ControlMask> {
        match self {
            ControlMask::Full => None,
            ControlMask::HalfPlane(s) => Some(ControlMask::HalfPlane(s.opposite())),
            ControlMask::Raster(map) => {
                let inv = map
                    .values()
                    .iter()
                    .map(|&t| if t > 0.5 { 0.0 } else { 1.0 })
                    .collect();
                IntensityMap::new(*map.grid(), inv)
                    .ok()
                    .map(ControlMask::Raster)
            }
        }
    }
}

/// Zero the scattering rate where the control is blocked.
pub fn masked_control_map(map: &ScatteringMap, mask: &ControlMask) -> Result<ScatteringMap> {
    let m = mask.values(&map.grid)?;
    let mut out = map.clone();
    for (r, k) in out.rates.iter_mut().zip(m) {
        *r *= k;
    }
    Ok(out)
}

/// Recall through a masked control: only illuminated regions re-emit.
pub fn recall_gate(field: &TransverseField, mask: &ControlMask) -> Result<TransverseField> {
    let m = mask.values(field.grid())?;
    let values = field
        .values()
        .iter()
        .zip(m)
        .map(|(v, k)| v * Complex64::new(k, 0.0))
        .collect();
    TransverseField::new(*field.grid(), values)
}

/// Operator ordering inside one storage step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitOrder {
    /// Half burn, full diffusion, half burn.
    #[default]
    Strang,
    DiffuseFirst,
    BurnFirst,
}

/// Simultaneous diffusion and control-field burn over `duration`, split into
/// `steps` equal steps.
pub fn storage_evolution(
    coherence: &TransverseField,
    map: &ScatteringMap,
    d: f64,
    duration: f64,
    control_on: bool,
    steps: usize,
) -> Result<TransverseField> {
    storage_evolution_with(
        coherence,
        map,
        d,
        duration,
        control_on,
        steps,
        SplitOrder::Strang,
    )
}

pub fn storage_evolution_with(
    coherence: &TransverseField,
    map: &ScatteringMap,
    d: f64,
    duration: f64,
    control_on: bool,
    steps: usize,
    order: SplitOrder,
) -> Result<TransverseField> {
    map.grid.ensure_same(coherence.grid())?;
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "storage evolution needs at least one step".into(),
        ));
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "storage duration must be >= 0, got {duration}"
        )));
    }
    if !control_on {
        return diffusion_kernel(d, duration, coherence.grid())?.apply(coherence);
    }
    let dt = duration / steps as f64;
    let kernel = diffusion_kernel(d, dt, coherence.grid())?;
    let mut c = coherence.clone();
    for _ in 0..steps {
        c = match order {
            SplitOrder::Strang => {
                let h = apply_scattering_burn(&c, map, 0.5 * dt)?;
                apply_scattering_burn(&kernel.apply(&h)?, map, 0.5 * dt)?
            }
            SplitOrder::DiffuseFirst => apply_scattering_burn(&kernel.apply(&c)?, map, dt)?,
            SplitOrder::BurnFirst => kernel.apply(&apply_scattering_burn(&c, map, dt)?)?,
        };
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::total_power;
    use crate::modes::{fit_gaussian_2d, gaussian_beam, hermite_gauss, ModeIndex};
    use crate::transport::apply_diffusion;
    use crate::units::mhz_to_rad_s;

    fn paper_params() -> MemoryParams {
        MemoryParams {
            gamma: mhz_to_rad_s(5.6),
            omega_c: 72e6,
            delta: 1.5e9,
            control_waist: 3e-3,
            ..MemoryParams::default()
        }
    }

    fn grid() -> TransverseGrid {
        TransverseGrid::square(96, 12e-3).unwrap()
    }

    #[test]
    fn fixture_rate() {
        let p = paper_params();
        let hand = 2.0 * std::f64::consts::PI * 5.6e6 * (72e6f64 / 1.5e9).powi(2);
        let exact = on_axis_rate(&p, p.omega_c, RateForm::Exact);
        let simple = on_axis_rate(&p, p.omega_c, RateForm::Simplified);
        assert!((simple - hand).abs() < 1e-9 * hand);
        assert!((exact - 8.1e4).abs() < 0.01 * 8.1e4, "{exact}");
        let bound = (p.gamma / p.delta).powi(2);
        assert!((simple - exact) / exact <= bound * 1.0001);
    }

    #[test]
    fn map_profile() {
        let p = paper_params();
        let g = grid();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        let wc = p.control_waist;
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let r2 = g.x(ix).powi(2) + g.y(iy).powi(2);
                let want = m.gamma0() * (-2.0 * r2 / (wc * wc)).exp();
                assert!((m.rate_at(ix, iy) - want).abs() <= 1e-8 * m.gamma0());
            }
        }
        let r = wc / 2f64.sqrt();
        let at = m.gamma0() * (-2.0 * r * r / (wc * wc)).exp();
        assert!((at - m.gamma0() / std::f64::consts::E).abs() < 1e-9 * m.gamma0());
        let dark = MemoryParams { omega_c: 0.0, ..p };
        let m0 = scattering_rate_map(&dark, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        assert!(m0.rates().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn burn_limits() {
        let p = paper_params();
        let g = grid();
        let f = gaussian_beam(1.5e-3, (0.0, 0.0), &g).unwrap();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        assert_eq!(apply_scattering_burn(&f, &m, 0.0).unwrap(), f);

        let u = ScatteringMap::uniform(&g, 8e4);
        let out = apply_scattering_burn(&f, &u, 10e-6).unwrap();
        let want = (-2.0 * 8e4 * 10e-6f64).exp();
        assert!((total_power(&out) - want).abs() < 1e-12);
        let shape = out.normalized().unwrap();
        let err = shape
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let peak = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12 * peak);
    }

    #[test]
    fn burn_flattens_the_profile() {
        let p = paper_params();
        let g = grid();
        let f = gaussian_beam(1.5e-3, (0.0, 0.0), &g).unwrap();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        let mut last = fit_gaussian_2d(&f.intensity()).unwrap().mean_sigma2();
        for t in [5e-6, 10e-6, 20e-6] {
            let s = fit_gaussian_2d(&apply_scattering_burn(&f, &m, t).unwrap().intensity())
                .unwrap()
                .mean_sigma2();
            assert!(s > last);
            last = s;
        }
    }

    #[test]
    fn control_off_is_plain_diffusion() {
        let p = paper_params();
        let g = grid();
        let f = gaussian_beam(1.5e-3, (0.0, 0.0), &g).unwrap();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        let a = storage_evolution(&f, &m, 13.2e-4, 30e-6, false, 7).unwrap();
        let b = apply_diffusion(&f, 13.2e-4, 30e-6).unwrap();
        let err = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn wide_control_decays_homogeneously() {
        let p = MemoryParams {
            control_waist: 1.0,
            ..paper_params()
        };
        let g = TransverseGrid::square(256, 12e-3).unwrap();
        let f = gaussian_beam(1.5e-3, (0.0, 0.0), &g).unwrap();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        let t = 12e-6;
        let on = storage_evolution(&f, &m, 13.2e-4, t, true, 2).unwrap();
        let off = storage_evolution(&f, &m, 13.2e-4, t, false, 2).unwrap();
        let ratio = total_power(&on) / total_power(&off);
        let want = (-2.0 * m.gamma0() * t).exp();
        assert!((ratio - want).abs() < 1e-3 * want, "{ratio} vs {want}");
    }

    #[test]
    fn masks() {
        let p = paper_params();
        let g = grid();
        let m = scattering_rate_map(&p, &g, (0.0, 0.0), RateForm::Exact).unwrap();
        assert_eq!(masked_control_map(&m, &ControlMask::Full).unwrap(), m);
        let left = masked_control_map(&m, &ControlMask::HalfPlane(Side::Left)).unwrap();
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let r = left.rate_at(ix, iy);
                if g.x(ix) > 0.0 {
                    assert_eq!(r, 0.0);
                } else {
                    assert_eq!(r, m.rate_at(ix, iy));
                }
            }
        }
        let dark = IntensityMap::new(g, vec![0.0; g.len()]).unwrap();
        assert!(matches!(
            masked_control_map(&m, &ControlMask::Raster(dark)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn gated_recall_of_tem10() {
        let g = grid();
        let f = hermite_gauss(ModeIndex::new(1, 0).unwrap(), 1.5e-3, &g).unwrap();
        let left = recall_gate(&f, &ControlMask::HalfPlane(Side::Left)).unwrap();
        let right = recall_gate(&f, &ControlMask::HalfPlane(Side::Right)).unwrap();
        let total = total_power(&f);
        assert!((total_power(&left) + total_power(&right) - total).abs() < 1e-12);
        let right_half: f64 = (0..g.ny())
            .flat_map(|iy| (g.nx() / 2..g.nx()).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| left.at(ix, iy).norm_sqr())
            .sum();
        assert_eq!(right_half, 0.0);
    }
}
