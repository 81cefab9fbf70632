//! Brute-force master-equation oracle on a truncated two-mode Fock space.
//!
//! The qubit-conditioned Hamiltonian is proportional to `sigma_z` and the
//! loss channels act on the modes alone, so the four qubit sectors of the
//! density matrix never mix: each block `rho_ss'` obeys
//!
//! ```text
//! d rho_ss' / dt = -i (H_s rho - rho H_s') + gamma_a D[a] rho + gamma_b D[b] rho
//! ```
//!
//! with `H_+- = +-(chi a'a + omega b'b + kappa (a b' + a' b))`. Evolving the
//! four blocks independently (fixed-step RK4, fixed summation order, mandatory
//! step-doubling gate) gives a numerically exact reference for the
//! coherent-state closed forms: `f(t)` is read off the `-+` block and the
//! readout probability off its trace.
//!
//! Tensor ordering: cavity index varies slower, `index = i_a * n_b + i_b`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64 as C64;
// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

use crate::coherent::{Branch, DynamicsError, InitialAmplitudes};
use crate::dissipative::{damped_amplitudes_closed, DampingParams};
use crate::linalg::{is_positive_semidefinite, CMat, CsrMatrix};
use crate::params::EffectiveModel;

/// Fock-space cutoff per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    pub cavity_levels: usize,
    pub nems_levels: usize,
}

/// Coherent-state weight allowed beyond the cutoff at construction time.
pub const CONSTRUCTION_LEAKAGE_TOL: f64 = 1e-8;
/// Leakage at which a single coherent vector is refused.
pub const VECTOR_LEAKAGE_TOL: f64 = 1e-6;
/// Step-doubling gate threshold for the block integrator.
pub const STEP_GATE_TOL: f64 = 1e-6;

impl FockTruncation {
    pub fn new(cavity_levels: usize, nems_levels: usize) -> Result<Self, OracleError> {
        if cavity_levels < 2 {
            return Err(OracleError::InvalidCutoff {
                name: "cavity_levels",
                value: cavity_levels,
            });
        }
        if nems_levels < 2 {
            return Err(OracleError::InvalidCutoff {
                name: "nems_levels",
                value: nems_levels,
            });
        }
        Ok(Self {
            cavity_levels,
            nems_levels,
        })
    }

    pub fn dim(&self) -> usize {
        self.cavity_levels * self.nems_levels
    }

    /// Joint index of `|i_a, i_b>`.
    pub fn index(&self, cavity: usize, nems: usize) -> usize {
        debug_assert!(cavity < self.cavity_levels && nems < self.nems_levels);
        cavity * self.nems_levels + nems
    }

    /// Reject cutoffs that would truncate a coherent state of the given
    /// amplitude magnitudes by more than [`CONSTRUCTION_LEAKAGE_TOL`].
    pub fn validate_leakage(
        &self,
        max_cavity_amp: f64,
        max_nems_amp: f64,
    ) -> Result<(), OracleError> {
        for (levels, amp) in [
            (self.cavity_levels, max_cavity_amp),
            (self.nems_levels, max_nems_amp),
        ] {
            let leakage = coherent_leakage(amp, levels);
            if leakage >= CONSTRUCTION_LEAKAGE_TOL {
                return Err(OracleError::CutoffTooSmall {
                    levels,
                    amplitude: amp,
                    leakage,
                    tol: CONSTRUCTION_LEAKAGE_TOL,
                });
            }
        }
        Ok(())
    }
}

/// Probability weight of a coherent state beyond the first `levels` number
/// states: `1 - sum_{n < levels} e^{-|amp|^2} |amp|^{2n} / n!`.
pub fn coherent_leakage(amp_abs: f64, levels: usize) -> f64 {
    let mean = amp_abs * amp_abs;
    let mut term = (-mean).exp();
    let mut kept = 0.0f64;
    for n in 0..levels {
        kept += term;
        term *= mean / (n as f64 + 1.0);
    }
    (1.0 - kept).max(0.0)
}

/// A truncated, unit-normalized coherent state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentVector {
    pub components: Vec<C64>,
    /// Factor the raw truncated vector was multiplied by to restore unit norm.
    pub renormalization: f64,
}

pub fn coherent_vector(amp: C64, levels: usize) -> Result<CoherentVector, OracleError> {
    let leakage = coherent_leakage(amp.norm(), levels);
    if leakage > VECTOR_LEAKAGE_TOL {
        return Err(OracleError::CutoffTooSmall {
            levels,
            amplitude: amp.norm(),
            leakage,
            tol: VECTOR_LEAKAGE_TOL,
        });
    }
    let mut components = Vec::with_capacity(levels);
    let mut term = C64::new((-0.5 * amp.norm_sqr()).exp(), 0.0);
    for n in 0..levels {
        components.push(term);
        term *= amp / (n as f64 + 1.0).sqrt();
    }
    let norm = components.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let renormalization = 1.0 / norm;
    for z in &mut components {
        *z *= renormalization;
    }
    Ok(CoherentVector {
        components,
        renormalization,
    })
}

/// Tensor product `|cavity> (x) |nems>` on the joint space.
pub fn joint_coherent_vector(
    trunc: &FockTruncation,
    cavity_amp: C64,
    nems_amp: C64,
) -> Result<Vec<C64>, OracleError> {
    let cavity = coherent_vector(cavity_amp, trunc.cavity_levels)?;
    let nems = coherent_vector(nems_amp, trunc.nems_levels)?;
    let mut joint = Vec::with_capacity(trunc.dim());
    for a in &cavity.components {
        for b in &nems.components {
            joint.push(a * b);
        }
    }
    Ok(joint)
}

/// Dense mode operators on the joint truncated space.
pub struct ModeOperators {
    /// Annihilation operator of the cavity mode, `a (x) 1`.
    pub lowering_cavity: CMat,
    /// Annihilation operator of the resonator mode, `1 (x) b`.
    pub lowering_nems: CMat,
    /// Number operator `a'a (x) 1`.
    pub number_cavity: CMat,
    /// Number operator `1 (x) b'b`.
    pub number_nems: CMat,
    /// Exchange term `a b' + a' b`.
    pub exchange: CMat,
}

pub fn mode_operators(trunc: &FockTruncation) -> ModeOperators {
    ModeOperators {
        lowering_cavity: lowering_csr(trunc, Mode::Cavity).to_dense(),
        lowering_nems: lowering_csr(trunc, Mode::Nems).to_dense(),
        number_cavity: CMat::from_fn(trunc.dim(), |i, j| {
            if i == j {
                C64::new((i / trunc.nems_levels) as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        number_nems: CMat::from_fn(trunc.dim(), |i, j| {
            if i == j {
                C64::new((i % trunc.nems_levels) as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        exchange: exchange_csr(trunc).to_dense(),
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Cavity,
    Nems,
}

fn lowering_csr(trunc: &FockTruncation, mode: Mode) -> CsrMatrix {
    let nb = trunc.nems_levels;
    let mut triplets = Vec::new();
    for ia in 0..trunc.cavity_levels {
        for ib in 0..nb {
            let row = trunc.index(ia, ib);
            match mode {
                Mode::Cavity => {
                    if ia + 1 < trunc.cavity_levels {
                        let col = trunc.index(ia + 1, ib);
                        triplets.push((row, col, C64::new(((ia + 1) as f64).sqrt(), 0.0)));
                    }
                }
                Mode::Nems => {
                    if ib + 1 < nb {
                        let col = trunc.index(ia, ib + 1);
                        triplets.push((row, col, C64::new(((ib + 1) as f64).sqrt(), 0.0)));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(trunc.dim(), triplets)
}

/// `a b' + a' b`: real, symmetric, two entries per row at most.
fn exchange_csr(trunc: &FockTruncation) -> CsrMatrix {
    let mut triplets = Vec::new();
    for ia in 0..trunc.cavity_levels {
        for ib in 0..trunc.nems_levels {
            let row = trunc.index(ia, ib);
            // a b' |ia+1, ib-1> component: <ia, ib| a b' |ia+1, ib-1>.
            if ia + 1 < trunc.cavity_levels && ib > 0 {
                let col = trunc.index(ia + 1, ib - 1);
                let val = (((ia + 1) * ib) as f64).sqrt();
                triplets.push((row, col, C64::new(val, 0.0)));
            }
            // a' b |ia-1, ib+1> component.
            if ia > 0 && ib + 1 < trunc.nems_levels {
                let col = trunc.index(ia - 1, ib + 1);
                let val = ((ia * (ib + 1)) as f64).sqrt();
                triplets.push((row, col, C64::new(val, 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(trunc.dim(), triplets)
}

/// Qubit sector of a density-matrix block, fixing the Hamiltonian signs on
/// the two sides: `d rho / dt = -i (s H rho - s' rho H) + dissipators`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
}

impl Sector {
    fn signs(self) -> (f64, f64) {
        match self {
            Sector::PlusPlus => (1.0, 1.0),
            Sector::MinusMinus => (-1.0, -1.0),
            Sector::PlusMinus => (1.0, -1.0),
            Sector::MinusPlus => (-1.0, 1.0),
        }
    }
}

/// The four qubit-sector blocks of the joint density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladBlocks {
    pub plus_plus: CMat,
    pub minus_minus: CMat,
    pub plus_minus: CMat,
    pub minus_plus: CMat,
}

impl LindbladBlocks {
    /// All four blocks start from the same pure product projector.
    pub fn initial(trunc: &FockTruncation, init: &InitialAmplitudes) -> Result<Self, OracleError> {
        let psi = joint_coherent_vector(trunc, init.cavity, init.nems)?;
        let projector = CMat::outer(&psi, &psi);
        Ok(Self {
            plus_plus: projector.clone(),
            minus_minus: projector.clone(),
            plus_minus: projector.clone(),
            minus_plus: projector,
        })
    }
}

/// Scratch matrices for one block's RK4 step; one per worker thread.
pub struct BlockScratch {
    k: CMat,
    stage: CMat,
    acc: CMat,
}

impl BlockScratch {
    pub fn new(dim: usize) -> Self {
        Self {
            k: CMat::zeros(dim),
            stage: CMat::zeros(dim),
            acc: CMat::zeros(dim),
        }
    }
}

/// Precomputed operators and rates for stepping blocks.
pub struct BlockEvolver {
    trunc: FockTruncation,
    exchange: CsrMatrix,
    /// `sqrt(i_a + 1)` where the cavity shift stays inside the cutoff, else 0.
    cavity_scale: Vec<f64>,
    /// Same for the resonator mode.
    nems_scale: Vec<f64>,
    /// `-i s h_diag[i] - (gamma_a n_a[i] + gamma_b n_b[i]) / 2` for `s = +1`.
    diag_plus: Vec<C64>,
    /// Same for `s = -1`.
    diag_minus: Vec<C64>,
    kappa: f64,
    cavity_rate: f64,
    nems_rate: f64,
    dt_max: f64,
}

impl BlockEvolver {
    pub fn new(
        model: &EffectiveModel,
        damping: &DampingParams,
        trunc: FockTruncation,
        dt_max: f64,
    ) -> Result<Self, OracleError> {
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(OracleError::BadGrid {
                reason: "dt must be positive and finite",
            });
        }
        let dim = trunc.dim();
        let nb = trunc.nems_levels;
        let mut cavity_scale = vec![0.0f64; dim];
        let mut nems_scale = vec![0.0f64; dim];
        let mut diag_plus = vec![C64::new(0.0, 0.0); dim];
        let mut diag_minus = vec![C64::new(0.0, 0.0); dim];
        for ia in 0..trunc.cavity_levels {
            for ib in 0..nb {
                let i = trunc.index(ia, ib);
                if ia + 1 < trunc.cavity_levels {
                    cavity_scale[i] = ((ia + 1) as f64).sqrt();
                }
                if ib + 1 < nb {
                    nems_scale[i] = ((ib + 1) as f64).sqrt();
                }
                let h_diag = model.chi * ia as f64 + model.omega * ib as f64;
                let decay =
                    0.5 * (damping.cavity_rate * ia as f64 + damping.nems_rate * ib as f64);
                diag_plus[i] = C64::new(-decay, -h_diag);
                diag_minus[i] = C64::new(-decay, h_diag);
            }
        }
        Ok(Self {
            trunc,
            exchange: exchange_csr(&trunc),
            cavity_scale,
            nems_scale,
            diag_plus,
            diag_minus,
            kappa: model.kappa,
            cavity_rate: damping.cavity_rate,
            nems_rate: damping.nems_rate,
            dt_max,
        })
    }

    pub fn truncation(&self) -> &FockTruncation {
        &self.trunc
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    /// Master-equation right-hand side for one sector, written into `out`.
    ///
    /// Term order is fixed (diagonal map, left exchange, right exchange, two
    /// sandwiches) so results are bitwise reproducible.
    fn rhs(&self, sector: Sector, rho: &CMat, out: &mut CMat) {
        let (s_left, s_right) = sector.signs();
        let n = self.trunc.dim();
        let left_diag = if s_left > 0.0 {
            &self.diag_plus
        } else {
            &self.diag_minus
        };
        let right_diag = if s_right > 0.0 {
            &self.diag_plus
        } else {
            &self.diag_minus
        };
        {
            let src = rho.data();
            let dst = out.data_mut();
            for i in 0..n {
                let li = left_diag[i];
                let src_row = &src[i * n..(i + 1) * n];
                let dst_row = &mut dst[i * n..(i + 1) * n];
                for j in 0..n {
                    dst_row[j] = (li + right_diag[j].conj()) * src_row[j];
                }
            }
        }
        let hop_left = C64::new(0.0, -s_left * self.kappa);
        self.exchange.mul_dense_acc(hop_left, rho, out);
        let hop_right = C64::new(0.0, s_right * self.kappa);
        // The exchange operator is symmetric, so it serves as its own
        // transpose for the right product.
        self.exchange.dense_mul_transposed_acc(hop_right, rho, out);
        lowering_sandwich_acc(
            &self.cavity_scale,
            self.trunc.nems_levels,
            self.cavity_rate,
            rho,
            out,
        );
        lowering_sandwich_acc(&self.nems_scale, 1, self.nems_rate, rho, out);
    }

    /// One classic RK4 step of size `dt`.
    pub fn step_block(&self, sector: Sector, rho: &mut CMat, dt: f64, scratch: &mut BlockScratch) {
        let BlockScratch { k, stage, acc } = scratch;
        self.rhs(sector, rho, k);
        acc.assign_sum_scaled(rho, dt / 6.0, k);
        stage.assign_sum_scaled(rho, dt / 2.0, k);
        self.rhs(sector, stage, k);
        acc.add_scaled(C64::new(dt / 3.0, 0.0), k);
        stage.assign_sum_scaled(rho, dt / 2.0, k);
        self.rhs(sector, stage, k);
        acc.add_scaled(C64::new(dt / 3.0, 0.0), k);
        stage.assign_sum_scaled(rho, dt, k);
        self.rhs(sector, stage, k);
        acc.add_scaled(C64::new(dt / 6.0, 0.0), k);
        core::mem::swap(rho, acc);
    }

    fn advance_block_with_dt(
        &self,
        sector: Sector,
        rho: &mut CMat,
        span: f64,
        dt_max: f64,
        scratch: &mut BlockScratch,
    ) {
        if span <= 0.0 {
            return;
        }
        let n_sub = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / n_sub as f64;
        for _ in 0..n_sub {
            self.step_block(sector, rho, dt, scratch);
        }
    }

    /// Advance one block over `span >= 0` in uniform sub-steps of at most
    /// `dt_max`.
    pub fn advance_block(
        &self,
        sector: Sector,
        rho: &mut CMat,
        span: f64,
        scratch: &mut BlockScratch,
    ) {
        self.advance_block_with_dt(sector, rho, span, self.dt_max, scratch);
    }

    /// Advance all four blocks sequentially.
    pub fn advance_all(&self, blocks: &mut LindbladBlocks, span: f64, scratch: &mut BlockScratch) {
        self.advance_block(Sector::PlusPlus, &mut blocks.plus_plus, span, scratch);
        self.advance_block(Sector::MinusMinus, &mut blocks.minus_minus, span, scratch);
        self.advance_block(Sector::PlusMinus, &mut blocks.plus_minus, span, scratch);
        self.advance_block(Sector::MinusPlus, &mut blocks.minus_plus, span, scratch);
    }

    /// Measure the step-doubling error over one interval: advance a copy at
    /// `dt_max` and another at `dt_max / 2`, return the worst block deviation.
    pub fn step_doubling_error(&self, blocks: &LindbladBlocks, span: f64) -> f64 {
        let mut scratch = BlockScratch::new(self.trunc.dim());
        let mut worst = 0.0f64;
        for (sector, block) in [
            (Sector::PlusPlus, &blocks.plus_plus),
            (Sector::MinusMinus, &blocks.minus_minus),
            (Sector::PlusMinus, &blocks.plus_minus),
            (Sector::MinusPlus, &blocks.minus_plus),
        ] {
            let mut coarse = block.clone();
            self.advance_block_with_dt(sector, &mut coarse, span, self.dt_max, &mut scratch);
            let mut fine = block.clone();
            self.advance_block_with_dt(sector, &mut fine, span, self.dt_max / 2.0, &mut scratch);
            worst = worst.max(coarse.max_abs_diff(&fine));
        }
        worst
    }
}

/// `out[i][j] += gamma * scale[i] * scale[j] * rho[i + stride][j + stride]`,
/// the `A rho A'` sandwich for a truncated lowering operator whose only
/// nonzeros sit `stride` places off the diagonal.
fn lowering_sandwich_acc(scale: &[f64], stride: usize, gamma: f64, rho: &CMat, out: &mut CMat) {
    if gamma == 0.0 {
        return;
    }
    let n = rho.dim();
    let src = rho.data();
    let dst = out.data_mut();
    for i in 0..n {
        let si = scale[i];
        if si == 0.0 {
            continue;
        }
        let shifted_row = &src[(i + stride) * n..(i + stride + 1) * n];
        let dst_row = &mut dst[i * n..(i + 1) * n];
        let gi = gamma * si;
        for j in 0..n {
            let sj = scale[j];
            if sj != 0.0 {
                dst_row[j] += (gi * sj) * shifted_row[j + stride];
            }
        }
    }
}

/// Failures of the oracle pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleError {
    /// A Fock cutoff below two levels cannot host the dynamics.
    InvalidCutoff { name: &'static str, value: usize },
    /// A coherent state does not fit under the cutoff.
    CutoffTooSmall {
        levels: usize,
        amplitude: f64,
        leakage: f64,
        tol: f64,
    },
    /// The step-doubling gate failed; rerun with the suggested step.
    StepTooCoarse { error: f64, suggested_dt: f64 },
    /// The requested time grid is unusable.
    BadGrid { reason: &'static str },
    /// A closed-form prediction failed.
    Dynamics(DynamicsError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::InvalidCutoff { name, value } => {
                write!(f, "{name} = {value} but the oracle needs at least 2 levels")
            }
            OracleError::CutoffTooSmall {
                levels,
                amplitude,
                leakage,
                tol,
            } => write!(
                f,
                "cutoff {levels} leaks {leakage:.3e} of |amp| = {amplitude} (tolerance {tol:.1e}); raise the cutoff"
            ),
            OracleError::StepTooCoarse {
                error,
                suggested_dt,
            } => write!(
                f,
                "halving dt moves the solution by {error:.3e} (> {STEP_GATE_TOL:.1e}); retry with dt <= {suggested_dt:.3e}"
            ),
            OracleError::BadGrid { reason } => write!(f, "bad time grid: {reason}"),
            OracleError::Dynamics(e) => write!(f, "closed-form prediction failed: {e}"),
        }
    }
}

impl core::error::Error for OracleError {}

impl From<DynamicsError> for OracleError {
    fn from(e: DynamicsError) -> Self {
        OracleError::Dynamics(e)
    }
}

/// Extracted observables of one oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub times: Vec<f64>,
    pub f_numeric: Vec<C64>,
    pub p_minus_numeric: Vec<f64>,
    pub fidelity_pp: Vec<f64>,
    pub fidelity_mm: Vec<f64>,
}

/// Conservation and consistency metrics accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDiagnostics {
    /// Worst `|tr rho - 1|` over the diagonal blocks.
    pub max_trace_drift: f64,
    /// Worst Hermiticity defect of the diagonal blocks.
    pub max_hermiticity_defect: f64,
    /// Worst deviation of the `-+` block from the adjoint of the `+-` block.
    pub max_adjoint_mismatch: f64,
    /// Whether every sampled diagonal block passed the shifted Cholesky
    /// positivity check (smallest eigenvalue above `-1e-8`).
    pub diagonal_blocks_positive: bool,
    /// Error measured by the mandatory step-doubling gate.
    pub step_doubling_error: f64,
}

/// The decoherence function read off the `-+` block against the predicted
/// branch amplitudes: `f = <alpha_-, beta_-| rho_mp |alpha_+, beta_+>`.
pub fn extract_f(
    blocks: &LindbladBlocks,
    trunc: &FockTruncation,
    minus_amplitudes: (C64, C64),
    plus_amplitudes: (C64, C64),
) -> Result<C64, OracleError> {
    let bra = joint_coherent_vector(trunc, minus_amplitudes.0, minus_amplitudes.1)?;
    let ket = joint_coherent_vector(trunc, plus_amplitudes.0, plus_amplitudes.1)?;
    Ok(blocks.minus_plus.expectation(&bra, &ket))
}

/// Numerical readout probability `(1 + Re tr rho_mp) / 2`.
pub fn p_minus_numeric(blocks: &LindbladBlocks) -> f64 {
    0.5 * (1.0 + blocks.minus_plus.trace().re)
}

/// Overlap of a diagonal block with the predicted pure coherent product.
pub fn ansatz_fidelity(
    block: &CMat,
    trunc: &FockTruncation,
    amplitudes: (C64, C64),
) -> Result<f64, OracleError> {
    let psi = joint_coherent_vector(trunc, amplitudes.0, amplitudes.1)?;
    Ok(block.expectation(&psi, &psi).re)
}

/// Evolve the blocks over `t_grid` and hand each grid point to `on_point`.
///
/// The callback receives `(index, t, blocks)`. `advance` performs one span
/// advance of all four blocks; [`BlockEvolver::advance_all`] is the
/// sequential choice, a threaded driver may fan the blocks out instead (the
/// per-block arithmetic is identical either way).
pub fn evolve_blocks_with<A, F>(
    evolver: &BlockEvolver,
    init: &InitialAmplitudes,
    t_grid: &[f64],
    mut advance: A,
    mut on_point: F,
) -> Result<OracleDiagnostics, OracleError>
where
    A: FnMut(&BlockEvolver, &mut LindbladBlocks, f64),
    F: FnMut(usize, f64, &LindbladBlocks),
{
    validate_grid(t_grid)?;
    let trunc = *evolver.truncation();
    let max_amp = init.total_energy().sqrt();
    trunc.validate_leakage(max_amp, max_amp)?;

    let mut blocks = LindbladBlocks::initial(&trunc, init)?;
    let mut diagnostics = OracleDiagnostics {
        max_trace_drift: 0.0,
        max_hermiticity_defect: 0.0,
        max_adjoint_mismatch: 0.0,
        diagonal_blocks_positive: true,
        step_doubling_error: 0.0,
    };

    // The mandatory gate: measure the first positive interval at dt and dt/2.
    let mut previous = 0.0f64;
    let mut gated = false;
    for &t in t_grid {
        let span = t - previous;
        if span > 0.0 {
            diagnostics.step_doubling_error = evolver.step_doubling_error(&blocks, span);
            if diagnostics.step_doubling_error > STEP_GATE_TOL {
                let shrink = (STEP_GATE_TOL / diagnostics.step_doubling_error).powf(0.25);
                return Err(OracleError::StepTooCoarse {
                    error: diagnostics.step_doubling_error,
                    suggested_dt: 0.8 * evolver.dt_max() * shrink,
                });
            }
            gated = true;
        }
        if gated {
            break;
        }
    }

    let n_points = t_grid.len();
    let check_every = (n_points / 4).max(1);
    for (idx, &t) in t_grid.iter().enumerate() {
        let span = t - previous;
        if span > 0.0 {
            advance(evolver, &mut blocks, span);
        }
        previous = t;

        for diag in [&blocks.plus_plus, &blocks.minus_minus] {
            diagnostics.max_trace_drift = diagnostics
                .max_trace_drift
                .max((diag.trace() - C64::new(1.0, 0.0)).norm());
            diagnostics.max_hermiticity_defect = diagnostics
                .max_hermiticity_defect
                .max(diag.hermiticity_defect());
        }
        diagnostics.max_adjoint_mismatch = diagnostics
            .max_adjoint_mismatch
            .max(blocks.plus_minus.adjoint_mismatch(&blocks.minus_plus));
        if idx % check_every == 0 || idx + 1 == n_points {
            for diag in [&blocks.plus_plus, &blocks.minus_minus] {
                if !is_positive_semidefinite(diag, 1e-8) {
                    diagnostics.diagonal_blocks_positive = false;
                }
            }
        }

        on_point(idx, t, &blocks);
    }
    Ok(diagnostics)
}

fn validate_grid(t_grid: &[f64]) -> Result<(), OracleError> {
    if t_grid.is_empty() {
        return Err(OracleError::BadGrid {
            reason: "empty time grid",
        });
    }
    let mut previous = -0.0f64;
    for &t in t_grid {
        if !t.is_finite() || t < 0.0 {
            return Err(OracleError::BadGrid {
                reason: "grid times must be finite and nonnegative",
            });
        }
        if t < previous {
            return Err(OracleError::BadGrid {
                reason: "grid times must be nondecreasing",
            });
        }
        previous = t;
    }
    Ok(())
}

/// Full sequential oracle run: evolve, extract `f`, the readout probability
/// and the ansatz fidelities at every grid point.
pub fn run_oracle(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    trunc: FockTruncation,
    t_grid: &[f64],
    dt: f64,
) -> Result<(OracleReport, OracleDiagnostics), OracleError> {
    let mut scratch = BlockScratch::new(trunc.dim());
    run_oracle_with(init, model, damping, trunc, t_grid, dt, |ev, blocks, span| {
        ev.advance_all(blocks, span, &mut scratch)
    })
}

/// [`run_oracle`] with a caller-supplied block driver, so the four sectors
/// can be advanced on worker threads. The driver must advance every block by
/// exactly `span`; results are identical to the sequential driver because the
/// blocks never interact.
pub fn run_oracle_with<A>(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    trunc: FockTruncation,
    t_grid: &[f64],
    dt: f64,
    advance: A,
) -> Result<(OracleReport, OracleDiagnostics), OracleError>
where
    A: FnMut(&BlockEvolver, &mut LindbladBlocks, f64),
{
    let evolver = BlockEvolver::new(model, damping, trunc, dt)?;
    let mut report = OracleReport {
        times: t_grid.to_vec(),
        f_numeric: Vec::with_capacity(t_grid.len()),
        p_minus_numeric: Vec::with_capacity(t_grid.len()),
        fidelity_pp: Vec::with_capacity(t_grid.len()),
        fidelity_mm: Vec::with_capacity(t_grid.len()),
    };
    let mut extraction_error = None;
    let diagnostics = evolve_blocks_with(
        &evolver,
        init,
        t_grid,
        advance,
        |_, t, blocks| {
            if extraction_error.is_some() {
                return;
            }
            let plus = damped_amplitudes_closed(init, model, damping, t, Branch::Plus);
            let minus = damped_amplitudes_closed(init, model, damping, t, Branch::Minus);
            let plus_amps = (plus.cavity, plus.nems);
            let minus_amps = (minus.cavity, minus.nems);
            match extract_f(blocks, &trunc, minus_amps, plus_amps) {
                Ok(f) => report.f_numeric.push(f),
                Err(e) => {
                    extraction_error = Some(e);
                    return;
                }
            }
            report.p_minus_numeric.push(p_minus_numeric(blocks));
            match ansatz_fidelity(&blocks.plus_plus, &trunc, plus_amps) {
                Ok(fid) => report.fidelity_pp.push(fid),
                Err(e) => {
                    extraction_error = Some(e);
                    return;
                }
            }
            match ansatz_fidelity(&blocks.minus_minus, &trunc, minus_amps) {
                Ok(fid) => report.fidelity_mm.push(fid),
                Err(e) => extraction_error = Some(e),
            }
        },
    )?;
    if let Some(e) = extraction_error {
        return Err(e);
    }
    Ok((report, diagnostics))
}
