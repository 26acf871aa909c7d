//! Construction of stationary states whose inverse Precision comes within a
//! requested gap of the combinatorial maximum.
//!
//! Starting from the optimal conserved elementary vector u* (scaled to
//! u_i = 1) and its paired basis families, the procedure perturbs u and w
//! with a geometric cascade of small multiples of family members until both
//! vectors share a support with componentwise matching signs; the stationary
//! state is then read off as cbar_s = w_s / u_s (and w_i / (u_i - 1) at the
//! input). Every step runs in exact rational arithmetic; floating point
//! appears only in the exported result.

use crate::error::CrnError;
use crate::matroid::{basis_decomposition, max_inv_precision, ElementaryVector};
use crate::network::StoichMatrix;
use crate::rational::{rat_from_f64, rat_to_f64, sign, Rat};
use crate::Result;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// A synthesized stationary state with its certificate data.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisResult {
    /// Stationary state, gauge-fixed so that min(cbar) * max(cbar) = 1.
    pub cbar: Vec<f64>,
    /// Conserved-space vector of the feasible triple.
    pub u: Vec<f64>,
    /// Stoichiometric-space vector of the feasible triple.
    pub w: Vec<f64>,
    /// Perturbation magnitude used per species, keyed by species name.
    pub deltas: BTreeMap<String, f64>,
    /// Inverse Precision attained at `cbar` (equals u[output]).
    pub achieved: f64,
    /// The combinatorial maximum the construction approaches.
    #[serde(rename = "maxInvP")]
    pub max_inv_p: f64,
}

/// Componentwise sign compatibility of a candidate pair (u, w): equal signs
/// away from the input, and sign(u_i - 1) = sign(w_i) at the input, with
/// zero matching zero. Returns the violating species indices.
pub fn verify_sign_conditions(u: &[f64], w: &[f64], input: usize) -> (bool, Vec<usize>) {
    assert_eq!(u.len(), w.len());
    let mut violations = Vec::new();
    for s in 0..u.len() {
        let lhs = if s == input { u[s] - 1.0 } else { u[s] };
        if sign_f64(lhs) != sign_f64(w[s]) {
            violations.push(s);
        }
    }
    (violations.is_empty(), violations)
}

fn sign_f64(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn sign_conditions_exact(u: &[Rat], w: &[Rat], input: usize) -> bool {
    (0..u.len()).all(|s| {
        let lhs = if s == input { &u[s] - Rat::one() } else { u[s].clone() };
        sign(&lhs) == sign(&w[s])
    })
}

/// Synthesizes a stationary state approaching the maximal inverse Precision:
/// `achieved >= maxInvP - epsilon`, verified exactly. A zero maximum returns
/// the degenerate result (zero vectors, unit state).
pub fn synthesize_cbar(
    sm: &StoichMatrix,
    input: usize,
    output: usize,
    epsilon: f64,
) -> Result<SynthesisResult> {
    let n = sm.entries.nrows();
    let names = sm.species_names.clone();
    let cert = max_inv_precision(sm, input, output);
    if cert.value <= Rat::zero() {
        return Ok(SynthesisResult {
            cbar: vec![1.0; n],
            u: vec![0.0; n],
            w: vec![0.0; n],
            deltas: BTreeMap::new(),
            achieved: 0.0,
            max_inv_p: cert.value_f64(),
        });
    }
    if !(epsilon > 0.0) {
        return Err(CrnError::Domain("epsilon must be positive".into()));
    }
    let eps = rat_from_f64(epsilon).ok_or_else(|| CrnError::Domain("epsilon must be finite".into()))?;
    if eps >= cert.value {
        return Err(CrnError::Domain(
            "epsilon must be smaller than the maximal inverse Precision".into(),
        ));
    }

    let ustar = cert.witness_u.as_ref().expect("positive maximum carries a witness");
    let dec = basis_decomposition(sm, ustar, input)?;
    let umax = ustar
        .coords
        .iter()
        .map(|x| if x < &Rat::zero() { -x.clone() } else { x.clone() })
        .max()
        .expect("witness is nonzero");

    let mut delta_first = &eps / (Rat::from_integer(2.into()) * &umax);
    for _attempt in 0..6 {
        if let Some(result) =
            run_cascade(sm, &names, ustar, &dec, input, output, &cert.value, &eps, &delta_first)?
        {
            return Ok(result);
        }
        // achieved fell short of the gap; restart with a smaller cascade
        delta_first /= Rat::from_integer(10.into());
    }
    Err(CrnError::Numerics(
        "sign-repair cascade failed to reach the requested optimality gap".into(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_cascade(
    sm: &StoichMatrix,
    names: &[String],
    ustar: &ElementaryVector,
    dec: &crate::matroid::BasisDecomposition,
    input: usize,
    output: usize,
    max_value: &Rat,
    eps: &Rat,
    delta_first: &Rat,
) -> Result<Option<SynthesisResult>> {
    let n = sm.entries.nrows();
    let shrink_budget = 60;
    let cascade_ratio = Rat::new(1.into(), 100.into());

    let mut deltas: BTreeMap<String, f64> = BTreeMap::new();
    let delta_i = delta_first.clone();
    let mut u: Vec<Rat> = ustar.coords.iter().map(|x| x * (Rat::one() - &delta_i)).collect();
    let w_o_member = dec.w_family.get(&output).ok_or_else(|| {
        CrnError::Numerics("output species missing from the stoichiometric family".into())
    })?;
    let mut w: Vec<Rat> = w_o_member.coords.iter().map(|x| x * &ustar.coords[output]).collect();
    deltas.insert(names[input].clone(), rat_to_f64(&delta_i));

    let mut delta = delta_i.clone();
    loop {
        let need_u: Vec<usize> = (0..n).filter(|&s| !w[s].is_zero() && u[s].is_zero()).collect();
        let need_w: Vec<usize> = (0..n).filter(|&s| !u[s].is_zero() && w[s].is_zero()).collect();
        let Some((&s, via_u)) =
            need_u.first().map(|s| (s, true)).or_else(|| need_w.first().map(|s| (s, false)))
        else {
            break;
        };

        let member = if via_u {
            dec.u_family.get(&s).ok_or_else(|| {
                CrnError::Numerics(format!("no conserved family member for species {s}"))
            })?
        } else {
            dec.w_family.get(&s).ok_or_else(|| {
                CrnError::Numerics(format!("no stoichiometric family member for species {s}"))
            })?
        };
        let target_sign = if via_u { sign(&w[s]) } else { sign(&u[s]) };
        debug_assert_ne!(target_sign, 0);

        let mut step = &delta * &cascade_ratio;
        let mut applied = false;
        for _round in 0..shrink_budget {
            let signed = if target_sign > 0 { step.clone() } else { -step.clone() };
            let (cand_u, cand_w) = if via_u {
                let cand: Vec<Rat> =
                    u.iter().zip(&member.coords).map(|(x, m)| x + m * &signed).collect();
                (cand, w.clone())
            } else {
                let cand: Vec<Rat> =
                    w.iter().zip(&member.coords).map(|(x, m)| x + m * &signed).collect();
                (u.clone(), cand)
            };
            if cascade_state_ok(&u, &w, &cand_u, &cand_w, input) {
                u = cand_u;
                w = cand_w;
                deltas.insert(names[s].clone(), rat_to_f64(&signed));
                delta = step.clone();
                applied = true;
                break;
            }
            step /= Rat::from_integer(2.into());
        }
        if !applied {
            return Err(CrnError::Numerics(
                "shrink budget exhausted while repairing sign conditions".into(),
            ));
        }
    }

    if !sign_conditions_exact(&u, &w, input) {
        return Err(CrnError::Numerics("cascade terminated with mismatched signs".into()));
    }
    let achieved = u[output].clone();
    if &(max_value - &achieved) > eps {
        return Ok(None); // restart with a smaller first delta
    }

    // read off the stationary state; species outside the common support are
    // free and fixed at the gauge value 1
    let mut cbar: Vec<Rat> = vec![Rat::one(); n];
    for s in 0..n {
        if s == input {
            let denom = &u[s] - Rat::one();
            debug_assert!(!denom.is_zero());
            cbar[s] = &w[s] / denom;
        } else if !u[s].is_zero() {
            cbar[s] = &w[s] / &u[s];
        }
    }
    if cbar.iter().any(|c| c <= &Rat::zero()) {
        return Err(CrnError::Numerics("synthesized state has a nonpositive component".into()));
    }

    // gauge: rescale cbar (and w with it) so min*max = 1 geometrically;
    // u and the achieved value are invariant
    let cbar_f: Vec<f64> = cbar.iter().map(rat_to_f64).collect();
    let minc = cbar_f.iter().cloned().fold(f64::INFINITY, f64::min);
    let maxc = cbar_f.iter().cloned().fold(0.0f64, f64::max);
    let lambda = 1.0 / (minc * maxc).sqrt();

    Ok(Some(SynthesisResult {
        cbar: cbar_f.iter().map(|c| c * lambda).collect(),
        u: u.iter().map(rat_to_f64).collect(),
        w: w.iter().map(|x| rat_to_f64(x) * lambda).collect(),
        deltas,
        achieved: rat_to_f64(&achieved),
        max_inv_p: rat_to_f64(max_value),
    }))
}

/// A candidate cascade step is acceptable when no previously nonzero entry
/// of either vector flips sign and all previously matched sign pairs stay
/// matched.
fn cascade_state_ok(u: &[Rat], w: &[Rat], cand_u: &[Rat], cand_w: &[Rat], input: usize) -> bool {
    for s in 0..u.len() {
        if !u[s].is_zero() && sign(&cand_u[s]) != sign(&u[s]) {
            return false;
        }
        if !w[s].is_zero() && sign(&cand_w[s]) != sign(&w[s]) {
            return false;
        }
        // pairs that were sign-matched must stay matched
        let was_matched = if s == input { !w[s].is_zero() } else { !u[s].is_zero() && !w[s].is_zero() };
        if was_matched {
            let lhs = if s == input { cand_u[s].clone() - Rat::one() } else { cand_u[s].clone() };
            if sign(&lhs) != sign(&cand_w[s]) {
                return false;
            }
        }
    }
    true
}
