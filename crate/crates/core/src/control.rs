//! Synthesis of the three-tone control field.
//!
//! The Stokes tone drives 1-2 directly; the forbidden pump transition 0-2
//! is synthesized by two dispersive tones p1 (near 0-1) and p2 (near 1-2)
//! detuned by -/+ delta2. The tones carry dynamical Stark shifts of the
//! same size as the effective pump coupling, and the phase-modulation
//! (chirp) laws below cancel them so the effective three-level system stays
//! at single- and two-photon resonance throughout the pulse.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::device::DeviceModel;

#[derive(Debug, thiserror::Error)]
pub enum ControlError {
    #[error("invalid pulse parameters: {0}")]
    InvalidParams(String),
    #[error(
        "tone at {omega_tone:.4e} rad/us is too close to the {i}-{j} \
         transition at {omega_ij:.4e} rad/us: detuning {detuning:.3e} is \
         within ten peak Stark shifts"
    )]
    StarkResonance {
        i: usize,
        j: usize,
        omega_ij: f64,
        omega_tone: f64,
        detuning: f64,
    },
    #[error(
        "effective pump pole: delta2 = {delta2:.4e} rad/us sits within ten \
         peak shifts of -alpha = {minus_alpha:.4e} rad/us"
    )]
    PumpPole { delta2: f64, minus_alpha: f64 },
    #[error("coupling matrix element Q_{i}{j} vanishes; cannot set drive amplitude")]
    VanishingMatrixElement { i: usize, j: usize },
    #[error("the chirp law needs at least {needed} device levels, got {got}")]
    NotEnoughLevels { needed: usize, got: usize },
}

/// Pulse-sequence parameters. All angular frequencies in rad/us, times in us.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseParams {
    /// Stokes peak Rabi frequency Omega_0.
    pub omega0: f64,
    /// Peak Rabi frequency Omega_r of each pump tone.
    pub omega_r: f64,
    /// Intermediate (dispersive) detuning delta2 of the two pump tones.
    pub delta2: f64,
    /// Gaussian width T.
    pub t_width: f64,
    /// Delay tau; the Stokes pulse is centred at -tau, the pump tones at +tau.
    pub tau: f64,
    /// Max[Omega_p]/Max[Omega_s] enforced at drive assembly.
    pub r_ratio: f64,
    /// Static one-photon pump detuning delta_p.
    pub delta_p: f64,
    /// Static one-photon Stokes detuning delta_s.
    pub delta_s: f64,
}

impl PulseParams {
    /// Standard sequence: delay tau = 0.6 T, symmetric drive (r = 1), zero
    /// static detunings.
    pub fn new(omega0: f64, omega_r: f64, delta2: f64, t_width: f64) -> Result<Self, ControlError> {
        let p = Self {
            omega0,
            omega_r,
            delta2,
            t_width,
            tau: 0.6 * t_width,
            r_ratio: 1.0,
            delta_p: 0.0,
            delta_s: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.t_width > 0.0) {
            return Err(ControlError::InvalidParams("t_width must be > 0".into()));
        }
        if !(self.omega0 > 0.0) || self.omega_r < 0.0 {
            return Err(ControlError::InvalidParams(
                "peak Rabi frequencies must be positive".into(),
            ));
        }
        if !(self.r_ratio > 0.0) {
            return Err(ControlError::InvalidParams("r_ratio must be > 0".into()));
        }
        let ratio = self.delta2.abs() / self.omega_r;
        if self.omega_r > 0.0 && ratio <= 1.0 {
            return Err(ControlError::InvalidParams(format!(
                "|delta2|/omega_r = {ratio:.2} is not dispersive (need > 1)"
            )));
        }
        if self.omega_r > 0.0 && ratio < 3.0 {
            log::warn!("|delta2|/omega_r = {ratio:.2} < 3: weakly dispersive regime");
        }
        Ok(())
    }

    /// Simulation window [-(tau+6T), +(tau+6T)]; all envelopes are below
    /// e^-18 ~ 1.5e-8 of peak outside it.
    pub fn window(&self) -> (f64, f64) {
        let half = self.tau + 6.0 * self.t_width;
        (-half, half)
    }

    /// Copy with both pump tones scaled by `g` (Stokes untouched).
    pub fn with_pump_scale(&self, g: f64) -> Self {
        Self { omega_r: g * self.omega_r, ..*self }
    }
}

/// Gaussian envelopes of the three Rabi frequencies at time `t`:
/// `(Omega_s, Omega_p1, Omega_p2)`.
///
/// The Stokes envelope is exp[-((t+tau)/T)^2]; the pump tones carry the 1/2
/// exponent, exp[-((t-tau)/T)^2/2], so that their product has the same
/// width T as the Stokes envelope. Stokes precedes pump: the
/// counterintuitive order.
pub fn gaussian_envelopes(p: &PulseParams, t: f64) -> (f64, f64, f64) {
    let xs = (t + p.tau) / p.t_width;
    let xp = (t - p.tau) / p.t_width;
    let s = p.omega0 * (-xs * xs).exp();
    let pk = p.omega_r * (-0.5 * xp * xp).exp();
    (s, pk, pk)
}

/// Dynamical Stark shifts `S_k(t) = -Omega_pk(t)^2/(4 delta2)` of the
/// dispersive pump tones in the three-level picture.
pub fn stark_shifts_flux(p: &PulseParams, t: f64) -> (f64, f64) {
    let (_, p1, p2) = gaussian_envelopes(p, t);
    (-p1 * p1 / (4.0 * p.delta2), -p2 * p2 / (4.0 * p.delta2))
}

/// Prefactor convention for the two-photon effective pump.
///
/// The full-dynamics fit of the two-photon Rabi frequency (see the pump
/// calibration tests) matches `Omega_p1 Omega_p2/(2 delta2)`, which also
/// reproduces the quoted effective peaks and the saturation value
/// `-alpha/2 (Omega_r/delta2)^2`. The quarter variant is kept as an
/// alternate code path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpPrefactor {
    #[default]
    HalfDelta2,
    QuarterDelta2,
}

impl PumpPrefactor {
    fn denom(self, delta2: f64) -> f64 {
        match self {
            Self::HalfDelta2 => 2.0 * delta2,
            Self::QuarterDelta2 => 4.0 * delta2,
        }
    }
}

/// Two-photon effective pump `Omega_p(t) = -Omega_p1 Omega_p2/(2 delta2)`
/// for a strongly anharmonic (flux-type) device.
pub fn effective_pump_flux(p: &PulseParams, t: f64) -> f64 {
    effective_pump_flux_with(p, t, PumpPrefactor::default())
}

pub fn effective_pump_flux_with(p: &PulseParams, t: f64, pf: PumpPrefactor) -> f64 {
    let (_, p1, p2) = gaussian_envelopes(p, t);
    -p1 * p2 / pf.denom(p.delta2)
}

/// Peak of [`effective_pump_flux`]: `Omega_r^2/(2|delta2|)` for delta2 < 0.
pub fn effective_pump_flux_peak(p: &PulseParams) -> f64 {
    (p.omega_r * p.omega_r / PumpPrefactor::default().denom(p.delta2)).abs()
}

/// Two-photon effective pump for a nearly harmonic device: the second
/// pathway through the neighbouring transitions interferes destructively,
/// leaving `Omega_p = -Omega_p1 Omega_p2/(2 delta2) * alpha/(alpha+delta2)`.
pub fn effective_pump_transmon(p: &PulseParams, alpha: f64, t: f64) -> Result<f64, ControlError> {
    effective_pump_transmon_with(p, alpha, t, PumpPrefactor::default())
}

pub fn effective_pump_transmon_with(
    p: &PulseParams,
    alpha: f64,
    t: f64,
    pf: PumpPrefactor,
) -> Result<f64, ControlError> {
    check_pump_pole(p, alpha)?;
    let (_, p1, p2) = gaussian_envelopes(p, t);
    Ok(-p1 * p2 / pf.denom(p.delta2) * alpha / (alpha + p.delta2))
}

/// Peak of [`effective_pump_transmon`].
pub fn effective_pump_transmon_peak(p: &PulseParams, alpha: f64) -> Result<f64, ControlError> {
    check_pump_pole(p, alpha)?;
    Ok((p.omega_r * p.omega_r / PumpPrefactor::default().denom(p.delta2) * alpha
        / (alpha + p.delta2))
        .abs())
}

fn check_pump_pole(p: &PulseParams, alpha: f64) -> Result<(), ControlError> {
    // same self-consistency margin as the Stark guard: the pole denominator
    // must exceed ten times the peak shift it multiplies
    let peak_shift = p.omega_r * p.omega_r / (4.0 * p.delta2.abs());
    if (alpha + p.delta2).abs() < 10.0f64.sqrt() * peak_shift {
        return Err(ControlError::PumpPole { delta2: p.delta2, minus_alpha: -alpha });
    }
    Ok(())
}

/// Generalized dynamical Stark shift of level `j` due to its coupling to
/// level `i` under a tone of bare amplitude `a_pk` at carrier `omega_pk`:
///
/// `S_ij = |a_pk Q_ij / 2|^2 [1/(w_ij - w_pk) + 1/(w_ij + w_pk)]`
///
/// with w_ij = E_j - E_i, antisymmetric under i-j exchange. The
/// counter-rotating denominator makes this the full
/// (Bloch-Siegert-corrected) shift.
pub fn stark_shift_general(a_pk: f64, q_ij: f64, omega_ij: f64, omega_pk: f64) -> f64 {
    let half_rabi = (a_pk * q_ij / 2.0).abs();
    half_rabi * half_rabi * (1.0 / (omega_ij - omega_pk) + 1.0 / (omega_ij + omega_pk))
}

/// Resonance guard for [`stark_shift_general`]: the formula is rejected
/// when the shift it predicts would exceed a tenth of its own detuning
/// denominator, i.e. `|w_ij - w_pk| < sqrt(10) |a_peak Q_ij / 2|`.
pub fn check_stark_resonance(
    a_peak: f64,
    q_ij: f64,
    omega_ij: f64,
    omega_pk: f64,
    ij: (usize, usize),
) -> Result<(), ControlError> {
    let half_rabi = (a_peak * q_ij / 2.0).abs();
    let detuning = (omega_ij.abs() - omega_pk.abs()).abs();
    if detuning < 10.0f64.sqrt() * half_rabi {
        return Err(ControlError::StarkResonance {
            i: ij.0,
            j: ij.1,
            omega_ij,
            omega_tone: omega_pk,
            detuning,
        });
    }
    Ok(())
}

/// One Gaussian term of a phase-modulation rate:
/// `amp * exp[-((t-center)/width)^2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRate {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianRate {
    fn rate(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.amp * (-x * x).exp()
    }

    // integral from -infinity with the error-function primitive
    fn integral(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.amp * self.width * PI.sqrt() / 2.0 * (1.0 + libm::erf(x))
    }
}

/// Phase rate plus its integral with phi(-inf) = 0.
#[derive(Clone)]
pub enum RateIntegral {
    /// Sum of Gaussian rate terms, integrated in closed form.
    GaussianSum(Vec<GaussianRate>),
    /// Arbitrary rate sampled on a dense grid, integrated by cumulative
    /// Simpson quadrature (fallback for non-Gaussian envelopes).
    Sampled(Arc<SampledIntegral>),
}

impl std::fmt::Debug for RateIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::GaussianSum(v) => write!(f, "GaussianSum({} terms)", v.len()),
            Self::Sampled(s) => write!(f, "Sampled({} nodes)", s.rates.len()),
        }
    }
}

impl RateIntegral {
    pub fn zero() -> Self {
        Self::GaussianSum(Vec::new())
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Self::GaussianSum(terms) => terms.iter().map(|g| g.rate(t)).sum(),
            Self::Sampled(s) => s.rate(t),
        }
    }

    pub fn phase(&self, t: f64) -> f64 {
        match self {
            Self::GaussianSum(terms) => terms.iter().map(|g| g.integral(t)).sum(),
            Self::Sampled(s) => s.phase(t),
        }
    }
}

/// Cumulative-Simpson integral of a sampled rate on a uniform grid.
pub struct SampledIntegral {
    t0: f64,
    dt: f64,
    rates: Vec<f64>,
    cum: Vec<f64>,
}

impl SampledIntegral {
    /// Sample `rate` on `2 n_panels + 1` nodes across `[t0, t1]`; outside
    /// the grid the rate is treated as zero (the phase saturates).
    pub fn build<F: Fn(f64) -> f64>(rate: F, t0: f64, t1: f64, n_panels: usize) -> Self {
        let n = 2 * n_panels.max(1);
        let dt = (t1 - t0) / n as f64;
        let rates: Vec<f64> = (0..=n).map(|k| rate(t0 + k as f64 * dt)).collect();
        let mut cum = vec![0.0; n + 1];
        // Simpson over each pair of intervals; odd nodes get the value of
        // the locally fitted parabola so the cumulative stays smooth
        for k in (2..=n).step_by(2) {
            let chunk = dt / 3.0 * (rates[k - 2] + 4.0 * rates[k - 1] + rates[k]);
            cum[k] = cum[k - 2] + chunk;
            cum[k - 1] = cum[k - 2]
                + dt / 12.0 * (5.0 * rates[k - 2] + 8.0 * rates[k - 1] - rates[k]);
        }
        Self { t0, dt, rates, cum }
    }

    fn rate(&self, t: f64) -> f64 {
        let n = self.rates.len() - 1;
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 || x >= n as f64 {
            return 0.0;
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        self.rates[k] * (1.0 - f) + self.rates[k + 1] * f
    }

    fn phase(&self, t: f64) -> f64 {
        let n = self.rates.len() - 1;
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return 0.0;
        }
        if x >= n as f64 {
            return self.cum[n];
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        // trapezoid correction within the cell keeps ~dt^3 local accuracy
        let r0 = self.rates[k];
        let r1 = self.rates[k + 1];
        self.cum[k] + self.dt * f * (r0 + 0.5 * f * (r1 - r0))
    }
}

/// The two phase-modulation laws phi_p2(t) and phi_s(t).
#[derive(Debug, Clone)]
pub struct ChirpLaw {
    pub p2: RateIntegral,
    pub s: RateIntegral,
}

impl ChirpLaw {
    pub fn zero() -> Self {
        Self { p2: RateIntegral::zero(), s: RateIntegral::zero() }
    }

    pub fn phi_p2_dot(&self, t: f64) -> f64 {
        self.p2.rate(t)
    }

    pub fn phi_s_dot(&self, t: f64) -> f64 {
        self.s.rate(t)
    }

    pub fn phi_p2(&self, t: f64) -> f64 {
        self.p2.phase(t)
    }

    pub fn phi_s(&self, t: f64) -> f64 {
        self.s.phase(t)
    }

    /// Largest |phi_dot| over a scan of the window.
    pub fn max_abs_rate(&self, window: (f64, f64)) -> f64 {
        let n = 2001;
        let dt = (window.1 - window.0) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                let t = window.0 + k as f64 * dt;
                self.phi_p2_dot(t).abs().max(self.phi_s_dot(t).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Chirp law for the strongly anharmonic scheme:
/// `phi_p2_dot = S1 - S2`, `phi_s_dot = -(S1 + 2 S2)`.
///
/// Inserted in the effective Hamiltonian these rates cancel the Stark-shift
/// detunings identically, restoring single- and two-photon resonance.
pub fn chirp_flux(p: &PulseParams) -> ChirpLaw {
    // S_k(t) = -(Omega_r^2/4delta2) exp[-((t-tau)/T)^2]; both pump
    // envelopes are equal
    let s_amp = -p.omega_r * p.omega_r / (4.0 * p.delta2);
    let g = |amp: f64| GaussianRate { amp, center: p.tau, width: p.t_width };
    ChirpLaw {
        // S1 - S2 kept as two terms: stays correct if the tone amplitudes
        // are ever made unequal upstream
        p2: RateIntegral::GaussianSum(vec![g(s_amp), g(-s_amp)]),
        s: RateIntegral::GaussianSum(vec![g(-3.0 * s_amp)]),
    }
}

/// Stark-shift sums Sum_{k,j} S_{ji}^k for levels i = 0, 1, 2 of a device.
/// Both pump tones share the Gaussian-squared envelope
/// exp[-((t-tau)/T)^2], so each sum collapses to a single amplitude.
fn transmon_stark_sums(device: &DeviceModel, p: &PulseParams) -> Result<[f64; 3], ControlError> {
    let omega_p1 = device.omega(0, 1) - p.delta2;
    let omega_p2 = device.omega(1, 2) - p.delta_p + p.delta2;
    let q01 = device.coupling_abs(0, 1);
    let q12 = device.coupling_abs(1, 2);
    if q01 == 0.0 {
        return Err(ControlError::VanishingMatrixElement { i: 0, j: 1 });
    }
    if q12 == 0.0 {
        return Err(ControlError::VanishingMatrixElement { i: 1, j: 2 });
    }
    // bare peak amplitudes of the two pump tones
    let amps = [(p.omega_r / q01, omega_p1), (p.omega_r / q12, omega_p2)];

    let mut sums = [0.0f64; 3];
    for (a_peak, omega_k) in amps {
        for (i, sum) in sums.iter_mut().enumerate() {
            for j in 0..device.n_levels {
                if j == i {
                    continue;
                }
                let q_ji = device.coupling_abs(j, i);
                if q_ji == 0.0 {
                    continue;
                }
                let omega_ji = device.omega(j, i);
                check_stark_resonance(a_peak, q_ji, omega_ji, omega_k, (j, i))?;
                *sum += stark_shift_general(a_peak, q_ji, omega_ji, omega_k);
            }
        }
    }
    Ok(sums)
}

/// Chirp law for the nearly harmonic scheme:
/// `phi_p2_dot = Sum_{k,j}(S_{j0}^k - S_{j2}^k)`,
/// `phi_s_dot = Sum_{k,j}(S_{j1}^k - S_{j2}^k)`,
/// summed over both pump tones and every level of the device (levels above
/// |2> contribute pure Stark shifts).
pub fn chirp_transmon(device: &DeviceModel, p: &PulseParams) -> Result<ChirpLaw, ControlError> {
    if device.n_levels < 4 {
        return Err(ControlError::NotEnoughLevels { needed: 4, got: device.n_levels });
    }
    let [s0, s1, s2] = transmon_stark_sums(device, p)?;
    let g = |amp: f64| GaussianRate { amp, center: p.tau, width: p.t_width };
    Ok(ChirpLaw {
        p2: RateIntegral::GaussianSum(vec![g(s0 - s2)]),
        s: RateIntegral::GaussianSum(vec![g(s1 - s2)]),
    })
}

/// Stark sums with level 3 (and above) excluded; quantifies what the
/// flux-style treatment misses in a nearly harmonic ladder.
pub fn chirp_transmon_three_level(
    device: &DeviceModel,
    p: &PulseParams,
) -> Result<ChirpLaw, ControlError> {
    let mut truncated = device.clone();
    truncated.n_levels = truncated.n_levels.min(3);
    let [s0, s1, s2] = transmon_stark_sums(&truncated, p)?;
    let g = |amp: f64| GaussianRate { amp, center: p.tau, width: p.t_width };
    Ok(ChirpLaw {
        p2: RateIntegral::GaussianSum(vec![g(s0 - s2)]),
        s: RateIntegral::GaussianSum(vec![g(s1 - s2)]),
    })
}

/// Which chirp law drives the phase modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Three-level Stark-shift law of the strongly anharmonic regime.
    FluxChirp,
    /// Generalized law summing the shifts of every device level.
    TransmonChirp,
    /// Phase modulation off (control experiment).
    NoChirp,
}

/// Which effective-pump formula applies to a device family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpFormula {
    Flux,
    Transmon { alpha: f64 },
}

/// Peak of the nominal (r = 1) effective pump for the given formula.
pub fn nominal_effective_peak(p: &PulseParams, formula: PumpFormula) -> Result<f64, ControlError> {
    match formula {
        PumpFormula::Flux => Ok(effective_pump_flux_peak(p)),
        PumpFormula::Transmon { alpha } => effective_pump_transmon_peak(p, alpha),
    }
}

/// Joint pump-tone scale factor g so that Max[Omega_p]/Max[Omega_s] = r.
/// Scaling both tones by g scales the effective pump (prop. to
/// Omega_p1 Omega_p2) by g^2.
pub fn pump_scale(p: &PulseParams, formula: PumpFormula) -> Result<f64, ControlError> {
    let nominal = nominal_effective_peak(p, formula)?;
    if nominal == 0.0 {
        return Err(ControlError::InvalidParams(
            "nominal effective pump vanishes; cannot apply r_ratio".into(),
        ));
    }
    Ok((p.r_ratio * p.omega0 / nominal).sqrt())
}

/// One tone of the synthesized control field.
#[derive(Debug, Clone)]
pub struct Tone {
    pub label: ToneLabel,
    /// Bare field amplitude peak (Rabi envelope divided by |Q|).
    pub amp_peak: f64,
    /// Envelope centre (us).
    pub center: f64,
    /// Gaussian width T (us).
    pub width: f64,
    /// True for the pump tones, whose exponent carries the factor 1/2.
    pub half_exponent: bool,
    /// Carrier frequency (rad/us).
    pub carrier: f64,
    /// Phase modulation phi_m(t).
    pub phase: RateIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneLabel {
    P1,
    P2,
    S,
}

impl Tone {
    /// Bare envelope A_m(t).
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        let ex = if self.half_exponent { -0.5 * x * x } else { -x * x };
        self.amp_peak * ex.exp()
    }

    /// Instantaneous field A_m(t) cos(w_m t - phi_m(t)).
    pub fn field(&self, t: f64) -> f64 {
        self.envelope(t) * (self.carrier * t - self.phase.phase(t)).cos()
    }
}

/// Reference frame a Hamiltonian or drive is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Lab,
    Interaction,
    Rotating,
}

/// The full three-tone control field.
#[derive(Debug, Clone)]
pub struct DriveSpec {
    pub tones: Vec<Tone>,
    pub frame: Frame,
}

impl DriveSpec {
    pub fn tone(&self, label: ToneLabel) -> &Tone {
        self.tones
            .iter()
            .find(|t| t.label == label)
            .expect("drive has all three tones")
    }

    /// Total field A(t) = Sum_m A_m(t) cos(w_m t - phi_m(t)).
    pub fn field(&self, t: f64) -> f64 {
        self.tones.iter().map(|tone| tone.field(t)).sum()
    }

    /// Largest carrier (rad/us), for step-size heuristics.
    pub fn max_carrier(&self) -> f64 {
        self.tones.iter().map(|t| t.carrier.abs()).fold(0.0, f64::max)
    }

    /// Largest envelope value at the window edges relative to its peak.
    pub fn boundary_leak(&self, window: (f64, f64)) -> f64 {
        self.tones
            .iter()
            .flat_map(|t| {
                [
                    t.envelope(window.0).abs() / t.amp_peak.abs(),
                    t.envelope(window.1).abs() / t.amp_peak.abs(),
                ]
            })
            .fold(0.0, f64::max)
    }
}

/// Assemble the physical drive for a device.
///
/// Carriers follow the two-photon scheme: w_p1 = w_01 - delta2,
/// w_p2 = w_12 - delta_p + delta2 (so w_p1 + w_p2 = w_02 - delta_p) and
/// w_s = w_12 - delta_s. Bare amplitudes divide the Rabi envelopes by the
/// corresponding |Q_ij|, and the pump tones are jointly rescaled so the
/// effective-pump peak is r_ratio times the Stokes peak.
pub fn assemble_drive(
    device: &DeviceModel,
    p: &PulseParams,
    chirp: &ChirpLaw,
    formula: PumpFormula,
) -> Result<DriveSpec, ControlError> {
    let q01 = device.coupling_abs(0, 1);
    let q12 = device.coupling_abs(1, 2);
    if q01 == 0.0 {
        return Err(ControlError::VanishingMatrixElement { i: 0, j: 1 });
    }
    if q12 == 0.0 {
        return Err(ControlError::VanishingMatrixElement { i: 1, j: 2 });
    }
    let g = pump_scale(p, formula)?;
    let omega_r = g * p.omega_r;

    let adiabaticity = p.r_ratio * p.omega0 * p.t_width;
    if adiabaticity < 10.0 {
        log::warn!(
            "adiabaticity figure peak(Omega_eff) T = {adiabaticity:.1} < 10; \
             transfer may be incomplete"
        );
    }
    let scaled = p.with_pump_scale(g);
    scaled.validate()?;

    let tones = vec![
        Tone {
            label: ToneLabel::P1,
            amp_peak: omega_r / q01,
            center: p.tau,
            width: p.t_width,
            half_exponent: true,
            carrier: device.omega(0, 1) - p.delta2,
            phase: RateIntegral::zero(),
        },
        Tone {
            label: ToneLabel::P2,
            amp_peak: omega_r / q12,
            center: p.tau,
            width: p.t_width,
            half_exponent: true,
            carrier: device.omega(1, 2) - p.delta_p + p.delta2,
            phase: chirp.p2.clone(),
        },
        Tone {
            label: ToneLabel::S,
            amp_peak: p.omega0 / q12,
            center: -p.tau,
            width: p.t_width,
            half_exponent: false,
            carrier: device.omega(1, 2) - p.delta_s,
            phase: chirp.s.clone(),
        },
    ];
    Ok(DriveSpec { tones, frame: Frame::Lab })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_transmon_hamiltonian, diagonalize, TransmonSpec};
    use crate::units::{ghz, mhz, to_mhz};

    fn fig2a_params() -> PulseParams {
        // Omega_r/2pi = 200 MHz, delta2 = -5 Omega_r, T = 0.12 us, and the
        // Stokes peak matched to the effective pump peak (r = 1)
        let omega_r = mhz(200.0);
        let delta2 = -5.0 * omega_r;
        let omega0 = omega_r * omega_r / (2.0 * delta2.abs());
        PulseParams::new(omega0, omega_r, delta2, 0.12).unwrap()
    }

    fn transmon_model_6() -> crate::device::DeviceModel {
        let spec = TransmonSpec {
            e_c: ghz(0.212),
            e_j_over_e_c: 49.0,
            charge_bias_qg: 0.5,
            charge_cutoff: 100,
        };
        let (h0, q) = build_transmon_hamiltonian(&spec).unwrap();
        diagonalize(&h0, &q, 6).unwrap()
    }

    #[test]
    fn envelope_peaks_and_counterintuitive_order() {
        let p = fig2a_params();
        let (s, _, _) = gaussian_envelopes(&p, -p.tau);
        assert!((s - p.omega0).abs() < 1e-12 * p.omega0);
        let (_, p1, p2) = gaussian_envelopes(&p, p.tau);
        assert!((p1 - p.omega_r).abs() < 1e-12 * p.omega_r);
        assert!((p2 - p.omega_r).abs() < 1e-12 * p.omega_r);
        // Stokes leads the effective pump (the bare tones are an order of
        // magnitude stronger than the Stokes; the comparison is between
        // Omega_s and the two-photon Omega_p)
        let (s_early, _, _) = gaussian_envelopes(&p, -p.tau);
        assert!(s_early > effective_pump_flux(&p, -p.tau).abs());
        let (s_late, _, _) = gaussian_envelopes(&p, p.tau);
        assert!(s_late < effective_pump_flux(&p, p.tau).abs());
    }

    #[test]
    fn pump_product_has_stokes_width() {
        let p = fig2a_params();
        // product drops to e^-1 of its peak one width after the pump centre
        let (_, p1, p2) = gaussian_envelopes(&p, p.tau + p.t_width);
        let peak = p.omega_r * p.omega_r;
        assert!((p1 * p2 / peak - (-1.0f64).exp()).abs() < 1e-12);
        // envelope symmetry: the pump product as a function of t - tau
        // equals (Omega_r^2/Omega_0) times the Stokes envelope as a
        // function of t + tau
        for dt in [-0.1, -0.03, 0.0, 0.05, 0.21] {
            let (_, p1, p2) = gaussian_envelopes(&p, p.tau + dt);
            let (s, _, _) = gaussian_envelopes(&p, -p.tau + dt);
            let lhs = p1 * p2;
            let rhs = s * p.omega_r * p.omega_r / p.omega0;
            assert!((lhs - rhs).abs() < 1e-10 * lhs.max(rhs));
        }
    }

    #[test]
    fn stark_shift_values_at_peak() {
        let p = fig2a_params();
        let (s1, s2) = stark_shifts_flux(&p, p.tau);
        // S_k = -Omega_r^2/(4 delta2) = +Omega_r/20 = 2pi x 10 MHz
        assert!((to_mhz(s1) - 10.0).abs() < 1e-9);
        assert!((s1 - s2).abs() < 1e-12 * s1.abs());
        // far from the pulse the shifts vanish
        let (s1, _) = stark_shifts_flux(&p, p.tau - 20.0 * p.t_width);
        assert!(s1.abs() < 1e-12);
        // odd in delta2
        let flipped = PulseParams { delta2: -p.delta2, ..p };
        let (s1f, _) = stark_shifts_flux(&flipped, p.tau);
        assert!((s1f + 10.0 * std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn effective_pump_reproduces_quoted_peak_and_pulse_area() {
        let p = fig2a_params();
        let peak = effective_pump_flux(&p, p.tau);
        assert!((to_mhz(peak) - 20.0).abs() < 1e-9, "peak = {} MHz", to_mhz(peak));
        assert!((effective_pump_flux_peak(&p) - peak.abs()).abs() < 1e-12 * peak.abs());
        // Omega_0 T = 15 at T = 0.12 us
        assert!((peak * p.t_width - 15.0).abs() < 0.1);
        // either tone off kills the pump
        let (_, p1, _) = gaussian_envelopes(&p, p.tau - 30.0 * p.t_width);
        assert!(p1 < 1e-12 * p.omega_r);
    }

    #[test]
    fn general_stark_reduces_to_dispersive_form() {
        // two-level check at |delta2|/Omega = 5: rotating part matches
        // +/- Omega^2/(4 delta), the counter-rotating part is exactly the
        // independently summed Bloch-Siegert term
        let omega01 = ghz(5.0);
        let omega = mhz(200.0);
        let delta = 5.0 * omega;
        let omega_d = omega01 - delta;
        // unit coupling: bare amplitude = Rabi frequency
        let s_full = stark_shift_general(omega, 1.0, omega01, omega_d);
        let s_rwa = omega * omega / (4.0 * delta);
        let s_bs = (omega / 2.0) * (omega / 2.0) / (omega01 + omega_d);
        assert!((s_full - (s_rwa + s_bs)).abs() < 1e-9 * s_full.abs());
        // at omega_d ~ omega01 the counter-rotating term is ~delta/(2 omega01)
        assert!((s_full / s_rwa - 1.0).abs() < 0.15);
        // antisymmetry under i <-> j (omega_ij -> -omega_ij)
        let s_swap = stark_shift_general(omega, 1.0, -omega01, omega_d);
        assert!((s_swap + s_full).abs() < 1e-12 * s_full.abs());
        // zero amplitude, zero shift
        assert_eq!(stark_shift_general(0.0, 1.0, omega01, omega_d), 0.0);
    }

    #[test]
    fn stark_resonance_guard_trips_near_resonance() {
        let omega01 = ghz(5.0);
        let rabi = mhz(100.0);
        // carrier within sqrt(10) half-Rabi of the transition
        let near = omega01 - rabi / 2.0;
        assert!(check_stark_resonance(rabi, 1.0, omega01, near, (0, 1)).is_err());
        let far = omega01 - 20.0 * rabi;
        assert!(check_stark_resonance(rabi, 1.0, omega01, far, (0, 1)).is_ok());
    }

    #[test]
    fn transmon_pump_limits() {
        let p = fig2a_params();
        // alpha -> -infinity recovers the flux form
        let huge = -ghz(500.0);
        let pump = effective_pump_transmon(&p, huge, p.tau).unwrap();
        let flux = effective_pump_flux(&p, p.tau);
        assert!((pump / flux - 1.0).abs() < 3e-3, "ratio {}", pump / flux);
        // quarter prefactor is half the fitted value
        let quarter =
            effective_pump_transmon_with(&p, huge, p.tau, PumpPrefactor::QuarterDelta2)
                .unwrap();
        assert!((quarter * 2.0 / pump - 1.0).abs() < 1e-12);
        // pole at delta2 = -alpha rejected
        let err = effective_pump_transmon(&p, -p.delta2, p.tau);
        assert!(matches!(err, Err(ControlError::PumpPole { .. })));
    }

    #[test]
    fn flux_chirp_cancels_stark_detunings_identically() {
        let p = fig2a_params();
        let chirp = chirp_flux(&p);
        let (w0, w1) = p.window();
        for k in 0..=200 {
            let t = w0 + (w1 - w0) * k as f64 / 200.0;
            let (s1, s2) = stark_shifts_flux(&p, t);
            // equal pump tones: phi_p2_dot vanishes identically
            assert!(chirp.phi_p2_dot(t).abs() < 1e-12 * s1.abs().max(1e-300));
            // phi_s_dot = -3S for the common shift S
            assert!((chirp.phi_s_dot(t) + 3.0 * s1).abs() < 1e-12 * s1.abs().max(1e-300));
            // two-photon detuning delta(t) = phi_p2_dot - phi_s_dot - (S2+2S1)
            let delta = chirp.phi_p2_dot(t) - chirp.phi_s_dot(t) - (s2 + 2.0 * s1);
            assert!(delta.abs() <= 1e-12 * s1.abs().max(1e-300), "t={t}: {delta:e}");
            // one-photon detuning delta_p(t) = phi_p2_dot + S2 - S1
            let delta_p = chirp.phi_p2_dot(t) + s2 - s1;
            assert!(delta_p.abs() <= 1e-12 * s1.abs().max(1e-300));
        }
    }

    #[test]
    fn closed_form_phase_matches_quadrature() {
        let p = fig2a_params();
        let chirp = chirp_flux(&p);
        let (w0, w1) = p.window();
        // integrate the same rate numerically on a dense grid
        let sampled = SampledIntegral::build(|t| chirp.phi_s_dot(t), w0, w1, 60_000);
        let scale = chirp.phi_s(w1).abs();
        for k in 0..=97 {
            let t = w0 + (w1 - w0) * k as f64 / 97.0;
            let diff = (sampled.phase(t) - chirp.phi_s(t)).abs();
            assert!(diff < 1e-10 * scale.max(1.0), "t={t}: diff={diff:e}");
        }
    }

    #[test]
    fn slow_modulation_bound() {
        let p = fig2a_params();
        let chirp = chirp_flux(&p);
        let max_rate = chirp.max_abs_rate(p.window());
        // the Stokes rate peaks at 3/4 Omega_r^2/(2|delta2|), comfortably
        // below twice the effective coupling and far below |delta2|
        let omega_eff = effective_pump_flux_peak(&p);
        assert!(max_rate <= 2.0 * omega_eff);
        assert!((max_rate - 1.5 * omega_eff).abs() < 1e-3 * omega_eff);
        assert!(max_rate * 10.0 < p.delta2.abs());
    }

    #[test]
    fn transmon_chirp_needs_level_three() {
        // four-level device so the full-vs-truncated difference is exactly
        // the level-3 contribution
        let mut device = transmon_model_6();
        device.n_levels = 4;
        let alpha = device.anharmonicity_alpha.unwrap();
        let omega_r = mhz(195.0);
        let p = PulseParams::new(mhz(3.9), omega_r, -5.0 * omega_r, 0.6).unwrap();
        let full = chirp_transmon(&device, &p).unwrap();
        let truncated = chirp_transmon_three_level(&device, &p).unwrap();
        // removing level |3> changes the pump chirp rate at peak; oracle is
        // the direct term-by-term sum of the level-3 contributions
        let q23 = device.coupling_abs(2, 3);
        let q03 = device.coupling_abs(0, 3);
        let q12 = device.coupling_abs(1, 2);
        let q01 = device.coupling_abs(0, 1);
        let w_p1 = device.omega(0, 1) - p.delta2;
        let w_p2 = device.omega(1, 2) + p.delta2;
        let mut expected_from_3 = 0.0;
        for (a, w) in [(p.omega_r / q01, w_p1), (p.omega_r / q12, w_p2)] {
            let s30 = stark_shift_general(a, q03, device.omega(3, 0), w);
            let s32 = stark_shift_general(a, q23, device.omega(3, 2), w);
            expected_from_3 += s30 - s32;
        }
        let diff = full.phi_p2_dot(p.tau) - truncated.phi_p2_dot(p.tau);
        assert!(diff.abs() > 1e-3 * full.phi_p2_dot(p.tau).abs().max(1e-300));
        assert!(
            (diff - expected_from_3).abs() < 1e-9 * expected_from_3.abs(),
            "diff {diff:e} vs oracle {expected_from_3:e}"
        );
        let _ = alpha;
        // no drive, no chirp
        let quiet = PulseParams { omega_r: 0.0, ..p };
        let chirp0 = chirp_transmon(&device, &quiet).unwrap();
        assert_eq!(chirp0.phi_p2_dot(p.tau), 0.0);
        assert_eq!(chirp0.phi_s_dot(p.tau), 0.0);
    }

    #[test]
    fn assembled_drive_satisfies_carrier_constraint() {
        let device = transmon_model_6();
        let alpha = device.anharmonicity_alpha.unwrap();
        let omega_r = mhz(195.0);
        let p = PulseParams::new(mhz(3.9), omega_r, -5.0 * omega_r, 0.6).unwrap();
        let chirp = chirp_transmon(&device, &p).unwrap();
        let drive =
            assemble_drive(&device, &p, &chirp, PumpFormula::Transmon { alpha }).unwrap();
        let w_p1 = drive.tone(ToneLabel::P1).carrier;
        let w_p2 = drive.tone(ToneLabel::P2).carrier;
        let w02 = device.omega(0, 2);
        assert!(((w_p1 + w_p2) - w02).abs() < 1e-9 * w02);
        // envelopes negligible at the window edges
        assert!(drive.boundary_leak(p.window()) < 1e-6);

        // r = 2 scales both pump amplitudes by sqrt(2) relative to r = 1
        let p2 = PulseParams { r_ratio: 2.0, ..p };
        let chirp2 = chirp_transmon(&device, &p2.with_pump_scale(
            pump_scale(&p2, PumpFormula::Transmon { alpha }).unwrap(),
        )).unwrap();
        let drive2 =
            assemble_drive(&device, &p2, &chirp2, PumpFormula::Transmon { alpha }).unwrap();
        let ratio = drive2.tone(ToneLabel::P1).amp_peak / drive.tone(ToneLabel::P1).amp_peak;
        assert!((ratio - 2.0f64.sqrt()).abs() < 1e-9, "ratio = {ratio}");
        let ratio2 = drive2.tone(ToneLabel::P2).amp_peak / drive.tone(ToneLabel::P2).amp_peak;
        assert!((ratio2 - 2.0f64.sqrt()).abs() < 1e-9);
        // Stokes untouched
        assert_eq!(drive2.tone(ToneLabel::S).amp_peak, drive.tone(ToneLabel::S).amp_peak);
    }

    #[test]
    fn nondispersive_params_rejected() {
        let omega_r = mhz(200.0);
        assert!(PulseParams::new(mhz(20.0), omega_r, -0.5 * omega_r, 0.12).is_err());
        assert!(PulseParams::new(mhz(20.0), omega_r, -5.0 * omega_r, -0.1).is_err());
    }
}
