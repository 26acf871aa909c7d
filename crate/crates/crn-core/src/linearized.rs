//! The linearized relaxation operator around a stationary state, its matrix
//! exponential, response curves, and the adaptation metrics Sensitivity and
//! inverse Precision.
//!
//! Multiplicative perturbations u (c = (1 + eps u) cbar) relax as
//! u(t) = e^{tA} u(0). For detailed-balance kinetics the similarity
//! transform A_y = D^{1/2} A D^{-1/2} (D = diag(cbar)) is symmetric negative
//! semidefinite, so the exponential comes from one eigendecomposition; the
//! general operator goes through Pade scaling-and-squaring.

use crate::dynamics::{GeneralKineticParams, KineticParams};
use crate::error::CrnError;
use crate::network::{stoichiometric_matrix, Network};
use crate::rational::rat_to_f64;
use crate::Result;
use nalgebra::{Complex, DMatrix, DVector};
use std::sync::OnceLock;

/// How the operator was derived, which fixes the exponential algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    DetailedBalance,
    General,
}

/// The |S| x |S| relaxation matrix acting on multiplicative perturbations.
#[derive(Debug)]
pub struct LinearOperator {
    pub matrix: DMatrix<f64>,
    pub kind: OperatorKind,
    pub cbar: Vec<f64>,
    pub species_names: Vec<String>,
    /// Exact dimension of the conserved space (|S| - rank N).
    nullity: usize,
    sym: OnceLock<SymParts>,
    complex_eigs: OnceLock<Vec<Complex<f64>>>,
}

#[derive(Debug)]
struct SymParts {
    /// Eigenvalues of the symmetrized operator, ascending.
    eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors (columns), matching `eigenvalues`.
    vectors: DMatrix<f64>,
    /// Marks the `nullity` eigenvalues closest to zero.
    zero_mode: Vec<bool>,
}

/// Samples of one matrix-exponential entry on a log-spaced time grid.
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub input: usize,
    pub output: usize,
}

impl ResponseCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// A located supremum of the response, with the matching minimum for
/// diagnostics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Sensitivity {
    pub value: f64,
    pub at_time: f64,
    pub min_value: f64,
    pub min_time: f64,
    /// Set when the maximum sits at the sampling horizon, which suggests the
    /// window was too short.
    pub at_boundary: bool,
}

/// Builds the detailed-balance relaxation operator
/// A_ss' = -(1/cbar_s) sum_r N_sr k_r N_s'r.
pub fn linearize_db(net: &Network, params: &KineticParams) -> Result<LinearOperator> {
    params.check_dims(net)?;
    let sm = stoichiometric_matrix(net);
    let n = net.num_species();
    let nf = DMatrix::from_fn(n, net.num_reactions(), |s, r| rat_to_f64(&sm.entries[(s, r)]));
    let mut matrix = DMatrix::zeros(n, n);
    for s in 0..n {
        for sp in 0..n {
            let mut acc = 0.0;
            for r in 0..net.num_reactions() {
                acc += nf[(s, r)] * params.k[r] * nf[(sp, r)];
            }
            matrix[(s, sp)] = -acc / params.cbar[s];
        }
    }
    Ok(LinearOperator {
        matrix,
        kind: OperatorKind::DetailedBalance,
        cbar: params.cbar.clone(),
        species_names: net.species_names(),
        nullity: n - sm.entries.rank(),
        sym: OnceLock::new(),
        complex_eigs: OnceLock::new(),
    })
}

/// Builds the general mass-action relaxation operator at a stationary state:
/// A_ss' = -(1/cbar_s) sum_r N_sr (alpha_s'r kplus_r cbar^alpha_r
///                                - beta_s'r kminus_r cbar^beta_r).
pub fn linearize_general(
    net: &Network,
    cbar: &[f64],
    params: &GeneralKineticParams,
) -> Result<LinearOperator> {
    params.check_dims(net)?;
    if cbar.len() != net.num_species() || cbar.iter().any(|&c| !(c > 0.0)) {
        return Err(CrnError::Domain("stationary state must be strictly positive".into()));
    }
    let sm = stoichiometric_matrix(net);
    let n = net.num_species();
    let monomial = |exps: &[crate::Rat]| -> f64 {
        exps.iter()
            .enumerate()
            .map(|(s, e)| cbar[s].powf(rat_to_f64(e)))
            .product()
    };
    let mut matrix = DMatrix::zeros(n, n);
    for (r, rx) in net.reactions.iter().enumerate() {
        let fwd = params.kplus[r] * monomial(&rx.alpha);
        let bwd = params.kminus[r] * monomial(&rx.beta);
        for s in 0..n {
            let nsr = rat_to_f64(&rx.alpha[s]) - rat_to_f64(&rx.beta[s]);
            if nsr == 0.0 {
                continue;
            }
            for sp in 0..n {
                let term = rat_to_f64(&rx.alpha[sp]) * fwd - rat_to_f64(&rx.beta[sp]) * bwd;
                matrix[(s, sp)] -= nsr * term / cbar[s];
            }
        }
    }
    Ok(LinearOperator {
        matrix,
        kind: OperatorKind::General,
        cbar: cbar.to_vec(),
        species_names: net.species_names(),
        nullity: n - sm.entries.rank(),
        sym: OnceLock::new(),
        complex_eigs: OnceLock::new(),
    })
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nullity(&self) -> usize {
        self.nullity
    }

    fn sym_parts(&self) -> Result<&SymParts> {
        debug_assert_eq!(self.kind, OperatorKind::DetailedBalance);
        if let Some(parts) = self.sym.get() {
            return Ok(parts);
        }
        let n = self.dim();
        let sqrt_c: Vec<f64> = self.cbar.iter().map(|c| c.sqrt()).collect();
        let mut ay = DMatrix::zeros(n, n);
        for s in 0..n {
            for sp in 0..n {
                ay[(s, sp)] = sqrt_c[s] * self.matrix[(s, sp)] / sqrt_c[sp];
            }
        }
        // symmetrize away rounding asymmetry before the eigensolve
        let ay = 0.5 * (&ay + ay.transpose());
        let eig = nalgebra::SymmetricEigen::new(ay);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_fn(n, |j, _| eig.eigenvalues[order[j]]);
        let mut vectors = DMatrix::zeros(n, n);
        for (j, &src) in order.iter().enumerate() {
            vectors.set_column(j, &eig.eigenvectors.column(src));
        }
        // the `nullity` eigenvalues of largest value (closest to zero) are
        // the exact zero modes; sanity-check the spectral gap
        let mut zero_mode = vec![false; n];
        for j in n - self.nullity..n {
            zero_mode[j] = true;
        }
        let lam_max = eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        for (j, &is_zero) in zero_mode.iter().enumerate() {
            if is_zero && eigenvalues[j].abs() > 1e-6 * lam_max {
                return Err(CrnError::Numerics(format!(
                    "conserved mode carries eigenvalue {:.3e}, expected ~0",
                    eigenvalues[j]
                )));
            }
        }
        let parts = SymParts { eigenvalues, vectors, zero_mode };
        let _ = self.sym.set(parts);
        Ok(self.sym.get().expect("just set"))
    }

    fn complex_eigenvalues(&self) -> &[Complex<f64>] {
        self.complex_eigs.get_or_init(|| {
            let v = self.matrix.clone().complex_eigenvalues();
            v.iter().copied().collect()
        })
    }

    /// Magnitudes of the largest and the smallest structurally nonzero
    /// eigenvalues.
    pub fn eigen_magnitudes(&self) -> Result<(f64, f64)> {
        let mags: Vec<f64> = match self.kind {
            OperatorKind::DetailedBalance => {
                self.sym_parts()?.eigenvalues.iter().map(|l| l.abs()).collect()
            }
            OperatorKind::General => {
                self.complex_eigenvalues().iter().map(|l| l.norm()).collect()
            }
        };
        let lam_max = mags.iter().cloned().fold(0.0f64, f64::max);
        if lam_max == 0.0 {
            return Err(CrnError::Numerics("the relaxation operator is zero".into()));
        }
        // separate structural zeros from the genuine spectrum by count,
        // falling back to a relative threshold for the general kind
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let cut = match self.kind {
            OperatorKind::DetailedBalance => self.nullity,
            OperatorKind::General => sorted.iter().take_while(|&&m| m <= 1e-9 * lam_max).count(),
        };
        let lam_min = sorted
            .get(cut)
            .copied()
            .filter(|&m| m > 0.0)
            .ok_or_else(|| CrnError::Numerics("no nonzero eigenvalues".into()))?;
        Ok((lam_max, lam_min))
    }

    /// Sampling window scaled to the spectrum: fast transients resolved at
    /// 0.01 of the fastest scale, plateaus covered to 100 of the slowest.
    pub fn time_window(&self) -> Result<(f64, f64)> {
        let (lam_max, lam_min) = self.eigen_magnitudes()?;
        Ok((0.01 / lam_max, 100.0 / lam_min))
    }

    /// e^{tA} for t >= 0.
    pub fn matrix_exponential(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0) {
            return Err(CrnError::Domain("matrix exponential time must be non-negative".into()));
        }
        let n = self.dim();
        match self.kind {
            OperatorKind::DetailedBalance => {
                let parts = self.sym_parts()?;
                let mut scaled = DMatrix::zeros(n, n);
                for j in 0..n {
                    let lam = effective_eigenvalue(parts, j);
                    let factor = (t * lam).exp();
                    for s in 0..n {
                        scaled[(s, j)] = parts.vectors[(s, j)] * factor;
                    }
                }
                let core = &scaled * parts.vectors.transpose();
                let mut out = DMatrix::zeros(n, n);
                for s in 0..n {
                    for sp in 0..n {
                        out[(s, sp)] = (self.cbar[sp] / self.cbar[s]).sqrt() * core[(s, sp)];
                    }
                }
                Ok(out)
            }
            OperatorKind::General => Ok((&self.matrix * t).exp()),
        }
    }

    /// Cheap repeated evaluation of (e^{tA})_{output,input}.
    pub fn entry_evaluator(&self, input: usize, output: usize) -> Result<impl Fn(f64) -> f64 + '_> {
        let (osc, isc) = (self.cbar[output], self.cbar[input]);
        let pref = (isc / osc).sqrt();
        let db = match self.kind {
            OperatorKind::DetailedBalance => {
                let parts = self.sym_parts()?;
                let n = self.dim();
                let terms: Vec<(f64, f64)> = (0..n)
                    .map(|j| {
                        (parts.vectors[(output, j)] * parts.vectors[(input, j)],
                         effective_eigenvalue(parts, j))
                    })
                    .collect();
                Some(terms)
            }
            OperatorKind::General => None,
        };
        Ok(move |t: f64| -> f64 {
            match &db {
                Some(terms) => {
                    pref * terms.iter().map(|&(w, lam)| w * (t * lam).exp()).sum::<f64>()
                }
                None => {
                    let e = (&self.matrix * t).exp();
                    e[(output, input)]
                }
            }
        })
    }
}

/// Structural zero modes count exactly as zero; rounding noise on the
/// dissipative side is clamped to keep e^{t lambda} bounded for large t.
fn effective_eigenvalue(parts: &SymParts, j: usize) -> f64 {
    if parts.zero_mode[j] {
        0.0
    } else {
        parts.eigenvalues[j].min(0.0)
    }
}

/// Log-spaced samples of (e^{tA})_{oi} over the operator's natural window
/// (or to `t_max_override`), preceded by the t = 0 point.
pub fn response_curve(
    op: &LinearOperator,
    input: usize,
    output: usize,
    t_max_override: Option<f64>,
    samples: usize,
) -> Result<ResponseCurve> {
    if input == output {
        return Err(CrnError::Domain("input and output species must differ".into()));
    }
    if samples < 2 {
        return Err(CrnError::Domain("need at least two samples".into()));
    }
    let (t_min, mut t_max) = op.time_window()?;
    if let Some(tm) = t_max_override {
        if !(tm > 0.0) {
            return Err(CrnError::Domain("t_max must be positive".into()));
        }
        t_max = tm;
    }
    let f = op.entry_evaluator(input, output)?;
    let mut times = Vec::with_capacity(samples + 1);
    let mut values = Vec::with_capacity(samples + 1);
    times.push(0.0);
    values.push(0.0);
    let log_min = t_min.ln();
    let log_max = t_max.ln();
    for j in 0..samples {
        let t = (log_min + (log_max - log_min) * j as f64 / (samples - 1) as f64).exp();
        let v = f(t);
        if !v.is_finite() {
            return Err(CrnError::Numerics(format!("response diverged at t = {t:.3e}")));
        }
        times.push(t);
        values.push(v);
    }
    Ok(ResponseCurve { times, values, input, output })
}

/// The Sensitivity sup_{t>=0} (e^{tA})_{oi}, located by a coarse log-grid
/// scan refined with golden-section search around the leading local maxima.
/// The signed minimum over the window is reported alongside.
pub fn sensitivity(op: &LinearOperator, input: usize, output: usize) -> Result<Sensitivity> {
    if input == output {
        return Err(CrnError::Domain("input and output species must differ".into()));
    }
    let (t_min, t_max) = op.time_window()?;
    let f = op.entry_evaluator(input, output)?;
    let samples = 1200;
    let log_min = t_min.ln();
    let log_max = t_max.ln();
    let xs: Vec<f64> = (0..samples)
        .map(|j| log_min + (log_max - log_min) * j as f64 / (samples - 1) as f64)
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x.exp())).collect();
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(CrnError::Numerics("response curve is not finite".into()));
    }

    // local maxima of the sampled curve (with both endpoints as candidates)
    let mut candidates: Vec<usize> = (0..samples)
        .filter(|&j| {
            let left_ok = j == 0 || vs[j] >= vs[j - 1];
            let right_ok = j == samples - 1 || vs[j] >= vs[j + 1];
            left_ok && right_ok
        })
        .collect();
    candidates.sort_by(|&a, &b| vs[b].total_cmp(&vs[a]));
    candidates.truncate(3);

    let mut best_v = 0.0; // the t = 0 value of an off-diagonal entry
    let mut best_t = 0.0;
    for &j in &candidates {
        let lo = if j == 0 { log_min - 2.0 } else { xs[j - 1] };
        let hi = if j == samples - 1 { log_max } else { xs[j + 1] };
        let (x_star, v_star) = golden_max(&f, lo, hi);
        if v_star > best_v {
            best_v = v_star;
            best_t = x_star.exp();
        }
    }
    let (min_idx, min_v) = vs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, &v)| (j, v))
        .expect("nonempty grid");
    let at_boundary = best_t >= 0.97 * t_max;
    Ok(Sensitivity {
        value: best_v,
        at_time: best_t,
        min_value: min_v.min(0.0),
        min_time: xs[min_idx].exp(),
        at_boundary,
    })
}

/// Golden-section maximization of f(e^x) over [lo, hi] in log-time.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let mut f1 = f(x1.exp());
    let mut f2 = f(x2.exp());
    for _ in 0..90 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - PHI * (b - a);
            f1 = f(x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + PHI * (b - a);
            f2 = f(x2.exp());
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// The long-time limit of (e^{tA})_{oi}: spectral projection onto the
/// conserved modes for detailed-balance operators, a convergence-checked
/// long-horizon evaluation for general ones (which must have no eigenvalue
/// with positive real part).
pub fn inverse_precision_limit(op: &LinearOperator, input: usize, output: usize) -> Result<f64> {
    if input == output {
        return Err(CrnError::Domain("input and output species must differ".into()));
    }
    match op.kind {
        OperatorKind::DetailedBalance => {
            let parts = op.sym_parts()?;
            let pref = (op.cbar[input] / op.cbar[output]).sqrt();
            let value = (0..op.dim())
                .filter(|&j| parts.zero_mode[j])
                .map(|j| parts.vectors[(output, j)] * parts.vectors[(input, j)])
                .sum::<f64>()
                * pref;
            Ok(value)
        }
        OperatorKind::General => {
            let eigs = op.complex_eigenvalues();
            let lam_max = eigs.iter().map(|l| l.norm()).fold(0.0f64, f64::max);
            if let Some(bad) = eigs.iter().find(|l| l.re > 1e-8 * lam_max) {
                return Err(CrnError::Numerics(format!(
                    "diverging mode with eigenvalue {:.3e} + {:.3e}i",
                    bad.re, bad.im
                )));
            }
            let (_, lam_min) = op.eigen_magnitudes()?;
            let t_end = 1e4 / lam_min;
            let f = op.entry_evaluator(input, output)?;
            let v_end = f(t_end);
            let v_prev = f(t_end / 10.0);
            if (v_end - v_prev).abs() > 1e-6 * v_end.abs().max(1.0) {
                return Err(CrnError::Numerics(format!(
                    "long-time response has not converged: {v_prev:.9e} vs {v_end:.9e}"
                )));
            }
            Ok(v_end)
        }
    }
}
