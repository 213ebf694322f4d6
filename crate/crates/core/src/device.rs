//! Undriven circuit Hamiltonians of the two device families and their
//! reduction to a truncated eigenbasis model.
//!
//! The flux qudit is a four-junction SQUID written in the charge basis of
//! its three independent islands; the transmon is a Cooper-pair box on a
//! single island. Both couple to the control field through an operator `Q`
//! (loop current / island charge) that is parity-odd at the symmetry point,
//! so `Q_ii = Q_02 = 0` there and the direct pump transition is forbidden.

use ndarray::{Array1, Array2, s};
use num_complex::Complex64 as C64;
use std::f64::consts::{PI, TAU};

use crate::linalg::{self, LinalgError};

#[derive(Debug, thiserror::Error)]
pub enum DeviceError {
    #[error("invalid device spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("requested {requested} levels but Hamiltonian dimension is {dim}")]
    TooManyLevels { requested: usize, dim: usize },
    #[error(
        "charge cutoff too small: low-lying splittings shift by {shift:.3e} \
         (relative) between cutoff {cutoff} and {cutoff_next}"
    )]
    CutoffNotConverged {
        cutoff: usize,
        cutoff_next: usize,
        shift: f64,
    },
    #[error(
        "bias response nonlinear at the probed step: halving the step moves \
         the derivative estimate by {deviation:.3e} (relative)"
    )]
    NonlinearBias { deviation: f64 },
    #[error("bias derivative of E1 - E0 vanishes; correlation ratio undefined")]
    DegenerateBiasResponse,
}

/// Four-junction flux qudit parameters. Angular frequencies in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FluxQubitSpec {
    /// Single-electron charging energy of the big junctions.
    pub e_c: f64,
    /// Josephson-to-charging energy ratio of the big junctions.
    pub e_j_over_e_c: f64,
    /// Size ratio of the small junction to the big ones (the junction α,
    /// distinct from the transmon anharmonicity).
    pub junction_asymmetry: f64,
    /// External flux bias in units of the flux quantum.
    pub flux_bias_f: f64,
    /// Charge states per island; the basis size is `charge_cutoff³`.
    pub charge_cutoff: usize,
}

impl FluxQubitSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.e_c > 0.0) {
            return Err(DeviceError::InvalidSpec("e_c must be > 0".into()));
        }
        if !(self.e_j_over_e_c > 0.0) {
            return Err(DeviceError::InvalidSpec("e_j_over_e_c must be > 0".into()));
        }
        if !(self.junction_asymmetry > 0.0 && self.junction_asymmetry < 1.0) {
            return Err(DeviceError::InvalidSpec(
                "junction_asymmetry must lie in (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.flux_bias_f) {
            return Err(DeviceError::InvalidSpec("flux_bias_f must lie in [0, 1]".into()));
        }
        if self.charge_cutoff % 2 == 0 || self.charge_cutoff < 5 {
            return Err(DeviceError::InvalidSpec(
                "charge_cutoff must be odd and >= 5".into(),
            ));
        }
        if self.charge_cutoff > 17 {
            return Err(DeviceError::InvalidSpec(
                "charge_cutoff > 17 exceeds the dense-diagonalization budget".into(),
            ));
        }
        Ok(())
    }

    pub fn e_j(&self) -> f64 {
        self.e_c * self.e_j_over_e_c
    }
}

/// Transmon (capacitively shunted Cooper-pair box) parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransmonSpec {
    /// Charging energy (rad/µs).
    pub e_c: f64,
    pub e_j_over_e_c: f64,
    /// Gate-charge bias.
    pub charge_bias_qg: f64,
    /// Number of charge states in the basis.
    pub charge_cutoff: usize,
}

impl TransmonSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.e_c > 0.0) {
            return Err(DeviceError::InvalidSpec("e_c must be > 0".into()));
        }
        if !(self.e_j_over_e_c >= 1.0) {
            return Err(DeviceError::InvalidSpec("e_j_over_e_c must be >= 1".into()));
        }
        if self.charge_cutoff < 20 {
            return Err(DeviceError::InvalidSpec("charge_cutoff must be >= 20".into()));
        }
        Ok(())
    }

    pub fn e_j(&self) -> f64 {
        self.e_c * self.e_j_over_e_c
    }
}

/// Truncated eigenbasis description of a device: sorted energies and the
/// coupling operator rotated into the eigenbasis.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    /// Eigenenergies, ascending (rad/µs).
    pub energies: Array1<f64>,
    /// Coupling operator in the eigenbasis, `n_levels x n_levels`.
    pub coupling: Array2<C64>,
    pub n_levels: usize,
    /// ω_12 - ω_01, when at least three levels are kept.
    pub anharmonicity_alpha: Option<f64>,
    /// ω_23 - ω_12, when at least four levels are kept.
    pub anharmonicity_beta: Option<f64>,
}

impl DeviceModel {
    /// Transition frequency E_j - E_i (rad/µs).
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// |Q_ij|.
    pub fn coupling_abs(&self, i: usize, j: usize) -> f64 {
        self.coupling[[i, j]].norm()
    }

    /// Copy with the level-1 and level-2 energies shifted by quasistatic
    /// stray detunings; higher levels and the coupling are untouched.
    pub fn with_level_shifts(&self, delta_tilde: f64, delta_p_tilde: f64) -> Self {
        let mut m = self.clone();
        if m.n_levels > 1 {
            m.energies[1] += delta_tilde;
        }
        if m.n_levels > 2 {
            m.energies[2] += delta_p_tilde;
        }
        m
    }

    /// Largest |Q_nm| with n+m even, relative to the largest |Q_nm| overall.
    /// Zero (to numerical precision) at a symmetry point.
    pub fn selection_rule_violation(&self) -> f64 {
        let mut max_even = 0.0f64;
        let mut max_all = 0.0f64;
        for n in 0..self.n_levels {
            for m in 0..self.n_levels {
                let q = self.coupling[[n, m]].norm();
                max_all = max_all.max(q);
                if (n + m) % 2 == 0 {
                    max_even = max_even.max(q);
                }
            }
        }
        if max_all == 0.0 { 0.0 } else { max_even / max_all }
    }
}

/// Index helpers for the three-island charge basis.
struct FluxBasis {
    m: usize,
    half: i64,
}

impl FluxBasis {
    fn new(cutoff: usize) -> Self {
        Self { m: cutoff, half: (cutoff as i64 - 1) / 2 }
    }

    fn dim(&self) -> usize {
        self.m * self.m * self.m
    }

    fn charges(&self, idx: usize) -> (i64, i64, i64) {
        let m = self.m;
        let i3 = idx % m;
        let i2 = (idx / m) % m;
        let i1 = idx / (m * m);
        (
            i1 as i64 - self.half,
            i2 as i64 - self.half,
            i3 as i64 - self.half,
        )
    }

    fn index(&self, n1: i64, n2: i64, n3: i64) -> Option<usize> {
        let h = self.half;
        if n1.abs() > h || n2.abs() > h || n3.abs() > h {
            return None;
        }
        let m = self.m as i64;
        Some((((n1 + h) * m + (n2 + h)) * m + (n3 + h)) as usize)
    }
}

/// Undriven Hamiltonian and drive-coupling operator of the flux qudit in
/// the three-island charge basis.
///
/// The charging term uses the inverse capacitance matrix of the loop (big
/// junctions C, small junction αC), the three big junctions contribute the
/// usual nearest-neighbour cos φ_j terms, and the small junction couples
/// all three islands simultaneously with a flux-dependent phase. `Q` is the
/// exact first derivative of the Hamiltonian with respect to the drive
/// amplitude at zero drive, i.e. `-2πα E_J sin(Σφ_j - 2πf)`, proportional
/// to the loop current.
pub fn build_flux_hamiltonian(
    spec: &FluxQubitSpec,
) -> Result<(Array2<C64>, Array2<C64>), DeviceError> {
    spec.validate()?;
    let basis = FluxBasis::new(spec.charge_cutoff);
    let dim = basis.dim();
    let e_c = spec.e_c;
    let e_j = spec.e_j();
    let alpha = spec.junction_asymmetry;

    let mut h0 = Array2::<C64>::zeros((dim, dim));
    let mut q = Array2::<C64>::zeros((dim, dim));

    // cos(Σφ - 2πf) splits into triple-raise and triple-lower parts
    let phase = C64::from_polar(1.0, -TAU * spec.flux_bias_f);
    let jj_small = C64::new(-alpha * e_j / 2.0, 0.0) * phase;
    // dH/dA at A = 0: -2πα E_J sin(Σφ - 2πf)
    let q_raise = C64::i() * PI * alpha * e_j * phase;

    let kin_diag = 4.0 * e_c * (1.0 + 2.0 * alpha) / (1.0 + 3.0 * alpha);
    let kin_cross = -8.0 * e_c * alpha / (1.0 + 3.0 * alpha);

    for idx in 0..dim {
        let (n1, n2, n3) = basis.charges(idx);
        let (x1, x2, x3) = (n1 as f64, n2 as f64, n3 as f64);
        h0[[idx, idx]] = C64::new(
            kin_diag * (x1 * x1 + x2 * x2 + x3 * x3)
                + kin_cross * (x1 * x2 + x1 * x3 + x2 * x3),
            0.0,
        );
        // big junctions: -E_J/2 on each single-island raise
        for (d1, d2, d3) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
            if let Some(up) = basis.index(n1 + d1, n2 + d2, n3 + d3) {
                h0[[up, idx]] += C64::new(-e_j / 2.0, 0.0);
                h0[[idx, up]] += C64::new(-e_j / 2.0, 0.0);
            }
        }
        // small junction: simultaneous raise of all three islands
        if let Some(up) = basis.index(n1 + 1, n2 + 1, n3 + 1) {
            h0[[up, idx]] += jj_small;
            h0[[idx, up]] += jj_small.conj();
            q[[up, idx]] += q_raise;
            q[[idx, up]] += q_raise.conj();
        }
    }
    Ok((h0, q))
}

/// Undriven Hamiltonian and charge-coupling operator of the transmon in
/// the single-island charge basis.
///
/// `H0` is tridiagonal (cos φ couples n ↔ n±1) and `Q = -8 E_C (n̂ - q_g)`
/// is diagonal. For even basis sizes the charge window is centred so that
/// the q_g = 1/2 parity m → 1-m maps the basis onto itself, making the
/// selection rule exact at finite cutoff.
pub fn build_transmon_hamiltonian(
    spec: &TransmonSpec,
) -> Result<(Array2<C64>, Array2<C64>), DeviceError> {
    spec.validate()?;
    let dim = spec.charge_cutoff;
    let n_min = 1 - (dim as i64 + 1) / 2;
    let e_c = spec.e_c;
    let e_j = spec.e_j();
    let qg = spec.charge_bias_qg;

    let mut h0 = Array2::<C64>::zeros((dim, dim));
    let mut q = Array2::<C64>::zeros((dim, dim));
    for k in 0..dim {
        let n = (n_min + k as i64) as f64;
        h0[[k, k]] = C64::new(4.0 * e_c * (n - qg) * (n - qg), 0.0);
        q[[k, k]] = C64::new(-8.0 * e_c * (n - qg), 0.0);
        if k + 1 < dim {
            h0[[k + 1, k]] = C64::new(-e_j / 2.0, 0.0);
            h0[[k, k + 1]] = C64::new(-e_j / 2.0, 0.0);
        }
    }
    Ok((h0, q))
}

/// Diagonalize `H0`, rotate `Q` into the eigenbasis and truncate to the
/// lowest `n_levels`.
///
/// Eigenvector gauge: the largest-magnitude component of each kept
/// eigenvector is made real and positive, so coupling matrix elements (and
/// hence chirp-law signs) are reproducible. Quasi-degenerate levels, where
/// that convention is ill-defined, are reported with a warning.
pub fn diagonalize(
    h0: &Array2<C64>,
    q: &Array2<C64>,
    n_levels: usize,
) -> Result<DeviceModel, DeviceError> {
    let dim = h0.nrows();
    if n_levels == 0 || n_levels > dim {
        return Err(DeviceError::TooManyLevels { requested: n_levels, dim });
    }
    let (vals, vecs) = linalg::eigh(h0)?;
    let energies = vals.slice(s![..n_levels]).to_owned();

    let spread = (vals[dim - 1] - vals[0]).abs().max(f64::MIN_POSITIVE);
    for j in 1..n_levels {
        if (energies[j] - energies[j - 1]).abs() < 1e-12 * spread {
            log::warn!(
                "levels {} and {} are quasi-degenerate; eigenvector phase \
                 convention is ill-defined",
                j - 1,
                j
            );
        }
    }

    let mut kept = vecs.slice(s![.., ..n_levels]).to_owned();
    for mut col in kept.columns_mut() {
        let (kmax, zmax) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(k, z)| (k, *z))
            .expect("non-empty eigenvector");
        let _ = kmax;
        if zmax.norm() > 0.0 {
            let u = zmax.conj() / zmax.norm();
            col.mapv_inplace(|z| z * u);
        }
    }

    let coupling = kept.t().mapv(|z| z.conj()).dot(&q.dot(&kept));
    let anharmonicity_alpha = (n_levels >= 3)
        .then(|| (energies[2] - energies[1]) - (energies[1] - energies[0]));
    let anharmonicity_beta = (n_levels >= 4)
        .then(|| (energies[3] - energies[2]) - (energies[2] - energies[1]));

    Ok(DeviceModel {
        energies,
        coupling,
        n_levels,
        anharmonicity_alpha,
        anharmonicity_beta,
    })
}

fn splittings(vals: &Array1<f64>, n_levels: usize) -> Vec<f64> {
    (1..n_levels).map(|j| vals[j] - vals[0]).collect()
}

/// Relative shift of the lowest `n_levels` splittings when the flux-qudit
/// charge cutoff is increased by 2. Errors above `tol` (default 1e-8).
pub fn flux_cutoff_convergence(
    spec: &FluxQubitSpec,
    n_levels: usize,
    tol: Option<f64>,
) -> Result<f64, DeviceError> {
    let tol = tol.unwrap_or(1e-8);
    let (h_a, _) = build_flux_hamiltonian(spec)?;
    let e_a = linalg::eigvalsh(&h_a)?;
    drop(h_a);
    let mut bigger = *spec;
    bigger.charge_cutoff += 2;
    let (h_b, _) = build_flux_hamiltonian(&bigger)?;
    let e_b = linalg::eigvalsh(&h_b)?;
    let shift = max_splitting_shift(&e_a, &e_b, n_levels);
    if shift > tol {
        return Err(DeviceError::CutoffNotConverged {
            cutoff: spec.charge_cutoff,
            cutoff_next: spec.charge_cutoff + 2,
            shift,
        });
    }
    Ok(shift)
}

/// Transmon analogue of [`flux_cutoff_convergence`].
pub fn transmon_cutoff_convergence(
    spec: &TransmonSpec,
    n_levels: usize,
    tol: Option<f64>,
) -> Result<f64, DeviceError> {
    let tol = tol.unwrap_or(1e-8);
    let (h_a, _) = build_transmon_hamiltonian(spec)?;
    let e_a = linalg::eigvalsh(&h_a)?;
    let mut bigger = *spec;
    bigger.charge_cutoff += 2;
    let (h_b, _) = build_transmon_hamiltonian(&bigger)?;
    let e_b = linalg::eigvalsh(&h_b)?;
    let shift = max_splitting_shift(&e_a, &e_b, n_levels);
    if shift > tol {
        return Err(DeviceError::CutoffNotConverged {
            cutoff: spec.charge_cutoff,
            cutoff_next: spec.charge_cutoff + 2,
            shift,
        });
    }
    Ok(shift)
}

// Splittings E_j - E_0 are compared instead of raw eigenvalues: the overall
// offset is gauge and would mask shifts at the 1e-8 level.
fn max_splitting_shift(e_a: &Array1<f64>, e_b: &Array1<f64>, n_levels: usize) -> f64 {
    let sa = splittings(e_a, n_levels);
    let sb = splittings(e_b, n_levels);
    let scale = sa.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    sa.iter()
        .zip(sb.iter())
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Sensitivity of the two lowest splittings to a bias parameter.
#[derive(Debug, Clone, Copy)]
pub struct BiasSensitivity {
    /// d(E_1 - E_0)/dx (rad/µs per unit bias).
    pub de1_dx: f64,
    /// d(E_2 - E_0)/dx.
    pub de2_dx: f64,
    /// a = de2_dx / de1_dx; stray detunings then satisfy δ̃_p = a δ̃.
    pub correlation_a: f64,
    /// Relative change of the estimates when the step is halved.
    pub nonlinearity: f64,
}

/// Bias parameter against which the spectrum is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasParam {
    EjOverEc,
    FluxBias,
    ChargeBias,
}

/// Central-difference sensitivity for an arbitrary spectrum function
/// returning `(E_0, E_1, E_2)` at bias `x`. The step is validated by
/// halving; deviations above 1% flag a nonlinear response.
pub fn bias_sensitivity_fn<F>(
    spectrum: F,
    x0: f64,
    step: f64,
) -> Result<BiasSensitivity, DeviceError>
where
    F: Fn(f64) -> Result<[f64; 3], DeviceError>,
{
    let diff = |h: f64| -> Result<(f64, f64), DeviceError> {
        let ep = spectrum(x0 + h)?;
        let em = spectrum(x0 - h)?;
        let d1 = ((ep[1] - ep[0]) - (em[1] - em[0])) / (2.0 * h);
        let d2 = ((ep[2] - ep[0]) - (em[2] - em[0])) / (2.0 * h);
        Ok((d1, d2))
    };
    let (d1_full, d2_full) = diff(step)?;
    let (d1_half, d2_half) = diff(step / 2.0)?;
    let scale = d1_half.abs().max(d2_half.abs()).max(f64::MIN_POSITIVE);
    let nonlinearity = ((d1_full - d1_half).abs().max((d2_full - d2_half).abs())) / scale;
    if nonlinearity > 0.01 {
        return Err(DeviceError::NonlinearBias { deviation: nonlinearity });
    }
    if d1_half == 0.0 {
        return Err(DeviceError::DegenerateBiasResponse);
    }
    Ok(BiasSensitivity {
        de1_dx: d1_half,
        de2_dx: d2_half,
        correlation_a: d2_half / d1_half,
        nonlinearity,
    })
}

/// [`bias_sensitivity_fn`] for a flux qudit.
pub fn flux_bias_sensitivity(
    spec: &FluxQubitSpec,
    bias: BiasParam,
    step: f64,
) -> Result<BiasSensitivity, DeviceError> {
    let base = *spec;
    let (x0, apply): (f64, Box<dyn Fn(f64) -> FluxQubitSpec>) = match bias {
        BiasParam::EjOverEc => (
            base.e_j_over_e_c,
            Box::new(move |x| FluxQubitSpec { e_j_over_e_c: x, ..base }),
        ),
        BiasParam::FluxBias => (
            base.flux_bias_f,
            Box::new(move |x| FluxQubitSpec { flux_bias_f: x, ..base }),
        ),
        BiasParam::ChargeBias => {
            return Err(DeviceError::InvalidSpec(
                "charge bias is not a flux-qudit parameter".into(),
            ))
        }
    };
    bias_sensitivity_fn(
        |x| {
            let (h0, _) = build_flux_hamiltonian(&apply(x))?;
            let e = linalg::eigvalsh(&h0)?;
            Ok([e[0], e[1], e[2]])
        },
        x0,
        step,
    )
}

/// [`bias_sensitivity_fn`] for a transmon.
pub fn transmon_bias_sensitivity(
    spec: &TransmonSpec,
    bias: BiasParam,
    step: f64,
) -> Result<BiasSensitivity, DeviceError> {
    let base = *spec;
    let (x0, apply): (f64, Box<dyn Fn(f64) -> TransmonSpec>) = match bias {
        BiasParam::EjOverEc => (
            base.e_j_over_e_c,
            Box::new(move |x| TransmonSpec { e_j_over_e_c: x, ..base }),
        ),
        BiasParam::ChargeBias => (
            base.charge_bias_qg,
            Box::new(move |x| TransmonSpec { charge_bias_qg: x, ..base }),
        ),
        BiasParam::FluxBias => {
            return Err(DeviceError::InvalidSpec(
                "flux bias is not a transmon parameter".into(),
            ))
        }
    };
    bias_sensitivity_fn(
        |x| {
            let (h0, _) = build_transmon_hamiltonian(&apply(x))?;
            let e = linalg::eigvalsh(&h0)?;
            Ok([e[0], e[1], e[2]])
        },
        x0,
        step,
    )
}
