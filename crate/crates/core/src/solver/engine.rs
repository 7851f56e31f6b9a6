//! Time stepper shared by the 1+1D and 3D front ends.
//!
//! The state is one coherence (adiabatic model) or two (three-level model)
//! on `nz` longitudinal nodes times `npix` transverse pixels, stored
//! z-major. Each step:
//!
//! 1. The linear detuning/decay part is integrated exactly through an
//!    integrating factor, and the coupling to the probe by classical RK4
//!    on top of it (Lawson scheme).
//! 2. Every right-hand-side evaluation marches the probe along z from the
//!    input face with the trapezoid rule, in the frame moving with the light,
//!    applying paraxial diffraction slice by slice in 3D.
//! 3. Diffusion is applied afterwards: spectrally in the transverse plane and
//!    by finite differences along z, in a frame that follows the gradient's
//!    phase winding so the stencil only sees the smooth envelope.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Fft2, TransverseGrid};
use crate::params::MemoryParams;
use crate::units::SPEED_OF_LIGHT;

use super::pulse::PulseEnvelope;
use super::record::SpinWaveState;
use super::schedule::{GradientSchedule, Segment};
use super::AtomicModel;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const WEAK_PROBE_LIMIT: f64 = 0.1;
// Step length used while the memory is dark and no light enters.
const HOLD_STEP: f64 = 0.1e-6;

pub(crate) struct Setup<'a> {
    pub params: &'a MemoryParams,
    pub model: AtomicModel,
    pub nz: usize,
    pub dt: Option<f64>,
    pub snapshots: &'a [f64],
    pub grid: TransverseGrid,
    /// Transverse shape of the input, unit power on `grid`.
    pub mode: Vec<Complex64>,
    /// Control amplitude per pixel, relative to the on-axis value.
    pub control: Vec<f64>,
    /// Extra control gate applied from the first gradient flip onward.
    pub recall_mask: Option<Vec<f64>>,
    pub diffraction: bool,
    /// Collect the time-integrated output per pixel over the recall window.
    pub resolve_output: bool,
}

pub(crate) struct RunOutput {
    pub times: Vec<f64>,
    /// Output projected onto the input mode.
    pub projection: Vec<Complex64>,
    pub power: Vec<f64>,
    pub input_power: Vec<f64>,
    pub fluence: Vec<f64>,
    pub peak_field: Vec<Complex64>,
    pub snapshots: Vec<SpinWaveState>,
    pub recall_start: f64,
    pub step: f64,
}

struct Coeffs {
    lin: Vec<Complex64>,
    half: Vec<Complex64>,
    // Adiabatic: drive of rho12 by the probe, per pixel.
    drive: Vec<Complex64>,
    // Probe source from rho12 (adiabatic), per pixel.
    source: Vec<Complex64>,
    // Three-level: control Rabi frequency per pixel.
    omega: Vec<f64>,
    // Probe self-coupling (adiabatic).
    absorb: Complex64,
    lit: bool,
}

struct Engine<'a> {
    s: &'a Setup<'a>,
    npix: usize,
    z: Vec<f64>,
    dz: f64,
    cell: f64,
    dn: Complex64,
    fft: Option<Fft2>,
    k2: Vec<f64>,
    diffract: Vec<Complex64>,
    state: Vec<Complex64>,
    field: Vec<Complex64>,
    slice: Vec<Complex64>,
    winding: f64,
    peak_power: f64,
    warned: bool,
}

pub(crate) fn run(
    setup: &Setup,
    input: &PulseEnvelope,
    schedule: &GradientSchedule,
) -> Result<RunOutput> {
    let p = setup.params;
    if setup.nz < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 z nodes, got {}",
            setup.nz
        )));
    }
    if p.delta == 0.0 {
        return Err(Error::InvalidParameter(
            "one-photon detuning must be non-zero for the solver".into(),
        ));
    }
    p.validate()?;
    let mut e = Engine::new(setup);
    e.integrate(input, schedule)
}

impl<'a> Engine<'a> {
    fn new(s: &'a Setup<'a>) -> Self {
        let p = s.params;
        let npix = s.grid.len();
        let nz = s.nz;
        let dz = p.length / (nz - 1) as f64;
        let z = (0..nz).map(|j| -0.5 * p.length + j as f64 * dz).collect();
        let (fft, k2) = if npix > 1 {
            let kx = s.grid.kx();
            let ky = s.grid.ky();
            let mut k2 = Vec::with_capacity(npix);
            for &b in &ky {
                for &a in &kx {
                    k2.push(a * a + b * b);
                }
            }
            (Some(Fft2::new(s.grid.nx(), s.grid.ny())), k2)
        } else {
            (None, vec![0.0])
        };
        let diffract = if s.diffraction && npix > 1 && p.k0 > 0.0 {
            k2.iter()
                .map(|&k| Complex64::from_polar(1.0, -k * dz / (2.0 * p.k0)))
                .collect()
        } else {
            Vec::new()
        };
        let width = match s.model {
            AtomicModel::Adiabatic => 1,
            AtomicModel::ThreeLevel => 2,
        };
        Self {
            s,
            npix,
            z,
            dz,
            cell: s.grid.cell_area(),
            dn: p.complex_detuning(),
            fft,
            k2,
            diffract,
            state: vec![ZERO; width * nz * npix],
            field: vec![ZERO; nz * npix],
            slice: vec![ZERO; npix],
            winding: 0.0,
            peak_power: 0.0,
            warned: false,
        }
    }

    fn rho12_offset(&self) -> usize {
        match self.s.model {
            AtomicModel::Adiabatic => 0,
            AtomicModel::ThreeLevel => self.s.nz * self.npix,
        }
    }

    fn coeffs(&self, seg: &Segment, gated: bool) -> Coeffs {
        let p = self.s.params;
        let (nz, npix) = (self.s.nz, self.npix);
        let omega: Vec<f64> = (0..npix)
            .map(|q| {
                let mut w = p.omega_c * seg.control() * self.s.control[q];
                if gated {
                    if let Some(m) = &self.s.recall_mask {
                        w *= m[q];
                    }
                }
                w
            })
            .collect();
        let lit = omega.iter().any(|&w| w != 0.0);
        let dephase = p.gamma0 + p.gamma_c;
        let dn = self.dn;
        let mut lin = Vec::with_capacity(self.state.len());
        let (mut drive, mut source) = (Vec::new(), Vec::new());
        match self.s.model {
            AtomicModel::Adiabatic => {
                for &zj in &self.z {
                    for &w in &omega {
                        let w2 = w * w;
                        lin.push(
                            Complex64::new(-dephase, seg.eta * zj + p.delta0 - w2 / p.delta)
                                - I * w2 / dn,
                        );
                    }
                }
                drive = omega.iter().map(|&w| -I * p.g * w / dn).collect();
                source = omega
                    .iter()
                    .map(|&w| I * p.g * p.density * w / (SPEED_OF_LIGHT * dn))
                    .collect();
            }
            AtomicModel::ThreeLevel => {
                let l13 = Complex64::new(-p.optical_decay(), p.delta);
                lin.extend(std::iter::repeat_n(l13, nz * npix));
                for &zj in &self.z {
                    for &w in &omega {
                        lin.push(Complex64::new(
                            -dephase,
                            seg.eta * zj + p.delta0 - w * w / p.delta,
                        ));
                    }
                }
            }
        }
        Coeffs {
            half: Vec::new(),
            lin,
            drive,
            source,
            omega,
            absorb: I * p.g * p.g * p.density / (SPEED_OF_LIGHT * dn),
            lit,
        }
    }

    /// Step bound for the explicit coupling part.
    fn step_bound(&self, seg: &Segment) -> f64 {
        let p = self.s.params;
        let wmax = p.omega_c * seg.control() * self.s.control.iter().copied().fold(0.0, f64::max);
        let dn = self.dn.norm();
        let rotation = seg.eta.abs() * p.length / 2.0
            + p.delta0.abs().max((p.delta0 - p.light_shift(wmax)).abs());
        let bound = match self.s.model {
            AtomicModel::Adiabatic => {
                let collective = (p.g * wmax / dn).powi(2) * p.density / SPEED_OF_LIGHT * p.length;
                let decay = p.gamma0 + p.gamma_c + wmax * wmax * p.optical_decay() / (dn * dn);
                0.1 / collective.max(decay).max(1.0)
            }
            AtomicModel::ThreeLevel => {
                let collective = p.g * p.g * p.density / SPEED_OF_LIGHT * p.length;
                0.1 / p.delta.abs().max(wmax).max(p.gamma).max(collective)
            }
        };
        if rotation > 0.0 {
            bound.min(0.25 / rotation)
        } else {
            bound
        }
    }

    /// March the probe through the cell for coherence `rho` (rho12 in the
    /// adiabatic model, rho13 otherwise), filling `self.field`.
    fn march(&mut self, t: f64, input: &PulseEnvelope, state: &[Complex64], c: &Coeffs) {
        let (nz, npix) = (self.s.nz, self.npix);
        let p = self.s.params;
        let e0 = input.value(t);
        for q in 0..npix {
            self.field[q] = self.s.mode[q] * e0;
        }
        let h = 0.5 * self.dz;
        match self.s.model {
            AtomicModel::Adiabatic => {
                let rho = state;
                // The self-coupling is integrated exactly over each slice and
                // the source by the trapezoid rule on top of it.
                let fwd = (-c.absorb * self.dz).exp();
                for j in 0..nz - 1 {
                    let (lo, hi) = (j * npix, (j + 1) * npix);
                    for q in 0..npix {
                        self.slice[q] = (self.field[lo + q] - c.source[q] * h * rho[lo + q]) * fwd;
                    }
                    self.diffract_slice();
                    for q in 0..npix {
                        self.field[hi + q] = self.slice[q] - c.source[q] * h * rho[hi + q];
                    }
                }
            }
            AtomicModel::ThreeLevel => {
                let rho13 = &state[..nz * npix];
                let k = I * p.g * p.density / SPEED_OF_LIGHT * h;
                for j in 0..nz - 1 {
                    let (lo, hi) = (j * npix, (j + 1) * npix);
                    for q in 0..npix {
                        self.slice[q] = self.field[lo + q] + k * rho13[lo + q];
                    }
                    self.diffract_slice();
                    for q in 0..npix {
                        self.field[hi + q] = self.slice[q] + k * rho13[hi + q];
                    }
                }
            }
        }
    }

    fn diffract_slice(&mut self) {
        if self.diffract.is_empty() {
            return;
        }
        let fft = self.fft.as_ref().expect("transverse FFT");
        fft.forward(&mut self.slice);
        for (v, d) in self.slice.iter_mut().zip(&self.diffract) {
            *v *= d;
        }
        fft.inverse(&mut self.slice);
    }

    /// Right-hand side of the coupling part at time `t`.
    fn rhs(
        &mut self,
        t: f64,
        input: &PulseEnvelope,
        state: &[Complex64],
        c: &Coeffs,
        out: &mut [Complex64],
    ) {
        self.march(t, input, state, c);
        let (nz, npix) = (self.s.nz, self.npix);
        match self.s.model {
            AtomicModel::Adiabatic => {
                for j in 0..nz {
                    for q in 0..npix {
                        let i = j * npix + q;
                        out[i] = c.drive[q] * self.field[i];
                    }
                }
            }
            AtomicModel::ThreeLevel => {
                let g = self.s.params.g;
                let m = nz * npix;
                for j in 0..nz {
                    for q in 0..npix {
                        let i = j * npix + q;
                        let w = c.omega[q];
                        out[i] = I * g * self.field[i] + I * w * state[m + i];
                        out[m + i] = I * w * state[i];
                    }
                }
            }
        }
    }

    fn record(
        &mut self,
        t: f64,
        input: &PulseEnvelope,
        out: &mut RunOutput,
        prev_slice: &mut [Complex64],
        in_window: bool,
    ) {
        let (nz, npix) = (self.s.nz, self.npix);
        let last = &self.field[(nz - 1) * npix..];
        let mut proj = ZERO;
        let mut power = 0.0;
        for q in 0..npix {
            proj += self.s.mode[q].conj() * last[q];
            power += last[q].norm_sqr();
        }
        let e = input.value(t);
        if let Some(&tp) = out.times.last() {
            if in_window && self.s.resolve_output && tp >= out.recall_start {
                let w = 0.5 * (t - tp);
                for q in 0..npix {
                    out.fluence[q] += w * (prev_slice[q].norm_sqr() + last[q].norm_sqr());
                }
            }
        }
        if self.s.resolve_output {
            if in_window && power * self.cell > self.peak_power {
                self.peak_power = power * self.cell;
                out.peak_field.copy_from_slice(last);
            }
            prev_slice.copy_from_slice(last);
        }
        out.times.push(t);
        out.projection.push(proj * self.cell);
        out.power.push(power * self.cell);
        out.input_power.push(e.norm_sqr());
    }

    fn integrate(
        &mut self,
        input: &PulseEnvelope,
        schedule: &GradientSchedule,
    ) -> Result<RunOutput> {
        let t_final = schedule.t_final();
        let flip = schedule.flip_time();
        let mut cuts = schedule.breakpoints();
        cuts.extend(
            self.s
                .snapshots
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < t_final),
        );
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let support = input.support();
        let npix = self.npix;
        let mut out = RunOutput {
            times: Vec::new(),
            projection: Vec::new(),
            power: Vec::new(),
            input_power: Vec::new(),
            fluence: vec![0.0; if self.s.resolve_output { npix } else { 0 }],
            peak_field: vec![ZERO; if self.s.resolve_output { npix } else { 0 }],
            snapshots: Vec::new(),
            recall_start: flip.unwrap_or(t_final),
            step: f64::INFINITY,
        };
        let mut prev_slice = vec![ZERO; npix];
        let m = self.state.len();
        let (mut k1, mut k2, mut k3, mut k4) =
            (vec![ZERO; m], vec![ZERO; m], vec![ZERO; m], vec![ZERO; m]);
        let mut v = vec![ZERO; m];

        if self.s.snapshots.contains(&0.0) {
            out.snapshots.push(self.snapshot(0.0));
        }

        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let mid = 0.5 * (t0 + t1);
            let seg = *schedule.segment_at(mid);
            let gated = flip.is_some_and(|f| mid >= f);
            let mut c = self.coeffs(&seg, gated);
            let dark_input = support.is_none_or(|(a, b)| b <= t0 || a >= t1);
            let hold = !c.lit && dark_input && self.s.model == AtomicModel::Adiabatic;
            let hmax = if hold {
                if self.s.params.diffusion > 0.0 {
                    HOLD_STEP
                } else {
                    t1 - t0
                }
            } else {
                let bound = self.step_bound(&seg);
                match self.s.dt {
                    Some(d) if d <= bound => d,
                    Some(d) => {
                        log::info!(
                            "time step {d:.3e} s exceeds the stability bound, using {bound:.3e} s"
                        );
                        bound
                    }
                    None => bound,
                }
            };
            let n = ((t1 - t0) / hmax).ceil().max(1.0) as usize;
            let h = (t1 - t0) / n as f64;
            if !hold {
                out.step = out.step.min(h);
            }
            c.half = c.lin.iter().map(|l| (l * (0.5 * h)).exp()).collect();
            let full: Vec<Complex64> = c.half.iter().map(|a| a * a).collect();

            for s in 0..n {
                let t = t0 + s as f64 * h;
                let in_window = t >= out.recall_start;
                if hold {
                    self.field.iter_mut().for_each(|v| *v = ZERO);
                    if out.times.last().is_none_or(|&tp| t > tp) {
                        self.record(t, input, &mut out, &mut prev_slice, in_window);
                    }
                    for (u, f) in self.state.iter_mut().zip(&full) {
                        *u *= f;
                    }
                } else {
                    let state = std::mem::take(&mut self.state);
                    self.rhs(t, input, &state, &c, &mut k1);
                    if out.times.last().is_none_or(|&tp| t > tp) {
                        self.record(t, input, &mut out, &mut prev_slice, in_window);
                    }
                    for i in 0..m {
                        v[i] = c.half[i] * (state[i] + k1[i] * (0.5 * h));
                    }
                    self.rhs(t + 0.5 * h, input, &v, &c, &mut k2);
                    for i in 0..m {
                        v[i] = c.half[i] * state[i] + k2[i] * (0.5 * h);
                    }
                    self.rhs(t + 0.5 * h, input, &v, &c, &mut k3);
                    for i in 0..m {
                        v[i] = full[i] * state[i] + c.half[i] * k3[i] * h;
                    }
                    self.rhs(t + h, input, &v, &c, &mut k4);
                    let mut next = state;
                    for i in 0..m {
                        next[i] = full[i] * next[i]
                            + (full[i] * k1[i] + c.half[i] * (k2[i] + k3[i]) * 2.0 + k4[i])
                                * (h / 6.0);
                    }
                    self.state = next;
                }
                self.diffuse(h, seg.eta);
                self.winding += seg.eta * h;
                if s % 16 == 15 || s + 1 == n {
                    self.check(t + h)?;
                }
            }
            if self.s.snapshots.contains(&t1) {
                out.snapshots.push(self.snapshot(t1));
            }
        }

        // Output at the final time.
        let last_seg = *schedule.segment_at(t_final);
        let gated = flip.is_some_and(|f| t_final >= f);
        let c = self.coeffs(&last_seg, gated);
        let state = std::mem::take(&mut self.state);
        self.march(t_final, input, &state, &c);
        self.state = state;
        if out.times.last().is_none_or(|&tp| t_final > tp) {
            self.record(t_final, input, &mut out, &mut prev_slice, true);
        }
        Ok(out)
    }

    fn check(&mut self, t: f64) -> Result<()> {
        if self
            .state
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
            || self
                .field
                .iter()
                .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Unstable {
                time: t,
                detail: "non-finite coherence or field; reduce the time step or grid spacing"
                    .into(),
            });
        }
        if !self.warned {
            let off = self.rho12_offset();
            let peak = self.state[off..off + self.s.nz * self.npix]
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            if peak > WEAK_PROBE_LIMIT {
                log::warn!("max |rho12| = {peak:.3} exceeds {WEAK_PROBE_LIMIT}: weak-probe linearization is questionable");
                self.warned = true;
            }
        }
        Ok(())
    }

    fn snapshot(&self, t: f64) -> SpinWaveState {
        let (nz, npix) = (self.s.nz, self.npix);
        let off = self.rho12_offset();
        SpinWaveState {
            time: t,
            z: self.z.clone(),
            npix,
            rho12: self.state[off..off + nz * npix].to_vec(),
            rho13: match self.s.model {
                AtomicModel::Adiabatic => None,
                AtomicModel::ThreeLevel => Some(self.state[..nz * npix].to_vec()),
            },
        }
    }

    fn diffuse(&mut self, h: f64, eta: f64) {
        let d = self.s.params.diffusion;
        if d <= 0.0 {
            return;
        }
        let (nz, npix) = (self.s.nz, self.npix);
        let blocks = self.state.len() / (nz * npix);
        if let Some(fft) = &self.fft {
            let gain: Vec<f64> = self.k2.iter().map(|&k| (-d * k * h).exp()).collect();
            for chunk in self.state.chunks_mut(npix) {
                fft.forward(chunk);
                for (v, g) in chunk.iter_mut().zip(&gain) {
                    *v *= g;
                }
                fft.inverse(chunk);
            }
        }
        // Longitudinal part in the frame co-winding with the gradient phase.
        let k = self.winding + 0.5 * eta * h;
        let dz = self.dz;
        let sub = ((d * h / (dz * dz)) / 0.25)
            .max(2.0 * d * k.abs() * h / dz / 0.5)
            .ceil()
            .max(1.0) as usize;
        let hs = h / sub as f64;
        let unwind: Vec<Complex64> = self
            .z
            .iter()
            .map(|&z| Complex64::from_polar(1.0, -k * z))
            .collect();
        let damp = (-d * k * k * h).exp();
        let mut col = vec![ZERO; nz];
        let mut tmp = vec![ZERO; nz];
        for b in 0..blocks {
            let base = b * nz * npix;
            for q in 0..npix {
                for j in 0..nz {
                    col[j] = self.state[base + j * npix + q] * unwind[j];
                }
                for _ in 0..sub {
                    for j in 0..nz {
                        let l = if j == 0 { col[1] } else { col[j - 1] };
                        let r = if j == nz - 1 { col[nz - 2] } else { col[j + 1] };
                        let lap = (l - col[j] * 2.0 + r) / (dz * dz);
                        let grad = (r - l) / (2.0 * dz);
                        tmp[j] = col[j] + (lap + I * 2.0 * k * grad) * (d * hs);
                    }
                    std::mem::swap(&mut col, &mut tmp);
                }
                for j in 0..nz {
                    self.state[base + j * npix + q] = col[j] * unwind[j].conj() * damp;
                }
            }
        }
    }
}
