//! Structural classifiers and bound checks: homogeneity detection, the
//! closed-form Precision of homogeneous networks, the square-root Sensitivity
//! bound, the subsystem-based lower bound on maximal Sensitivity, a
//! consolidated per-parameter-point report, and the seeded property suites
//! behind the `verify` command.

use crate::dynamics::{GeneralKineticParams, KineticParams, ParamSet};
use crate::error::CrnError;
use crate::linearized::{
    inverse_precision_limit, linearize_db, linearize_general, sensitivity, LinearOperator,
    Sensitivity,
};
use crate::matroid::{
    conservation_basis, elementary_vectors, inverse_precision_algebraic, max_inv_precision,
    stoich_range_basis, SpaceKind,
};
use crate::network::{stoichiometric_matrix, Network};
use crate::par::maybe_par_map;
use crate::rational::{rat_to_f64, Rat};
use crate::Result;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// The common reaction shape order: Some(kappa) when every reaction converts
/// kappa units of one species into kappa units of another.
pub fn homogeneous_order(net: &Network) -> Option<u32> {
    let mut order: Option<Rat> = None;
    for rx in &net.reactions {
        let reactants: Vec<usize> =
            (0..net.num_species()).filter(|&s| !rx.alpha[s].is_zero()).collect();
        let products: Vec<usize> =
            (0..net.num_species()).filter(|&s| !rx.beta[s].is_zero()).collect();
        if reactants.len() != 1 || products.len() != 1 || reactants[0] == products[0] {
            return None;
        }
        let kappa = rx.alpha[reactants[0]].clone();
        if rx.beta[products[0]] != kappa {
            return None;
        }
        match &order {
            None => order = Some(kappa),
            Some(k) if *k == kappa => {}
            _ => return None,
        }
    }
    let kappa = order?;
    if !kappa.is_integer() {
        return None;
    }
    u32::try_from(kappa.to_integer()).ok().filter(|&k| k > 0)
}

/// Closed-form Precision of a homogeneous network: sum(cbar) / cbar_i,
/// independent of the output species and of the rates.
pub fn homogeneous_precision_exact(net: &Network, cbar: &[Rat], input: usize) -> Result<Rat> {
    if homogeneous_order(net).is_none() {
        return Err(CrnError::Domain("network is not homogeneous".into()));
    }
    if cbar.len() != net.num_species() {
        return Err(CrnError::Dimension("cbar length must match the species count".into()));
    }
    let total: Rat = cbar.iter().fold(Rat::zero(), |acc, x| acc + x);
    Ok(total / &cbar[input])
}

/// Floating-point variant of [`homogeneous_precision_exact`].
pub fn homogeneous_precision(net: &Network, cbar: &[f64], input: usize) -> Result<f64> {
    if homogeneous_order(net).is_none() {
        return Err(CrnError::Domain("network is not homogeneous".into()));
    }
    if cbar.len() != net.num_species() {
        return Err(CrnError::Dimension("cbar length must match the species count".into()));
    }
    Ok(cbar.iter().sum::<f64>() / cbar[input])
}

/// The parameter-point Sensitivity bound sqrt(cbar_i / cbar_o).
pub fn sensitivity_sqrt_bound(cbar: &[f64], input: usize, output: usize) -> f64 {
    (cbar[input] / cbar[output]).sqrt()
}

/// A subsystem witnessing the best lower bound on maximal Sensitivity.
#[derive(Debug, Clone, Serialize)]
pub struct SubsystemBound {
    /// max over nonempty reaction subsets of the subsystem's maximal inverse
    /// Precision.
    pub value: f64,
    /// Reaction indices of the witnessing subsystem.
    pub reactions: Vec<usize>,
    /// Reaction labels of the witnessing subsystem.
    pub labels: Vec<String>,
}

/// Sweeps all nonempty reaction subsets and maximizes the subsystem's
/// combinatorial inverse-Precision bound; this lower-bounds the maximal
/// Sensitivity of the full network. Guarded by `cap` on the reaction count.
pub fn max_sensitivity_lower_bound(
    net: &Network,
    input: usize,
    output: usize,
    cap: usize,
) -> Result<SubsystemBound> {
    let nr = net.num_reactions();
    if nr > cap {
        return Err(CrnError::CapExceeded(format!(
            "{nr} reactions would need {} subsystems (cap {cap})",
            (1u128 << nr) - 1
        )));
    }
    let masks: Vec<usize> = (1..(1usize << nr)).collect();
    let values: Vec<Rat> = maybe_par_map(&masks, |&mask| {
        let idx: Vec<usize> = (0..nr).filter(|r| mask & (1 << r) != 0).collect();
        let sub = net.restrict_to(&idx);
        max_inv_precision(&stoichiometric_matrix(&sub), input, output).value
    });
    // deterministic reduction in ascending mask order
    let mut best = Rat::zero();
    let mut best_mask = 0usize;
    for (&mask, value) in masks.iter().zip(&values) {
        if *value > best {
            best = value.clone();
            best_mask = mask;
        }
    }
    let reactions: Vec<usize> = (0..nr).filter(|r| best_mask & (1 << r) != 0).collect();
    let labels = reactions.iter().map(|&r| net.reaction_label(r)).collect();
    Ok(SubsystemBound { value: rat_to_f64(&best), reactions, labels })
}

/// One named bound with its applicability, verdict, and signed margin
/// (positive margin = satisfied with room).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub applicable: bool,
    pub holds: bool,
    pub margin: f64,
}

/// Measured adaptation metrics for one parameter point together with every
/// applicable structural bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub sensitivity: Sensitivity,
    pub inv_precision: f64,
    pub sqrt_bound: Option<f64>,
    pub homogeneous_order: Option<u32>,
    pub max_inv_precision: f64,
    pub checks: Vec<BoundCheck>,
}

const SLACK: f64 = 1e-9;

/// Builds the linear operator for the parameter set, measures S and inverse
/// Precision, and evaluates all applicable bounds.
pub fn check_all_bounds(
    net: &Network,
    params: &ParamSet,
    input: usize,
    output: usize,
) -> Result<BoundReport> {
    let op = operator_for(net, params)?;
    let s = sensitivity(&op, input, output)?;
    let inv_p = inverse_precision_limit(&op, input, output)?;
    let sm = stoichiometric_matrix(net);
    let max_inv = max_inv_precision(&sm, input, output);
    let max_inv_f = max_inv.value_f64();
    let kappa = homogeneous_order(net);
    let is_db = matches!(params, ParamSet::DetailedBalance(_));

    let mut checks = Vec::new();
    let sqrt_bound = if is_db {
        let bound = sensitivity_sqrt_bound(&op.cbar, input, output);
        checks.push(BoundCheck {
            name: "sensitivity <= sqrt(cbar_i/cbar_o)".into(),
            applicable: true,
            holds: s.value <= bound * (1.0 + SLACK),
            margin: bound - s.value,
        });
        Some(bound)
    } else {
        None
    };

    checks.push(BoundCheck {
        name: "sensitivity >= inverse precision".into(),
        applicable: inv_p >= 0.0,
        holds: inv_p < 0.0 || s.value >= inv_p - SLACK,
        margin: s.value - inv_p,
    });

    let homog_applicable = kappa.is_some() && is_db;
    checks.push(BoundCheck {
        name: "homogeneous sensitivity <= 1".into(),
        applicable: homog_applicable,
        holds: !homog_applicable || s.value <= 1.0 + SLACK,
        margin: 1.0 - s.value,
    });

    let uni_applicable = kappa == Some(1)
        && matches!(params, ParamSet::MassAction { kinetics, .. } if kinetics.reversible());
    checks.push(BoundCheck {
        name: "reversible unimolecular sensitivity <= 1".into(),
        applicable: uni_applicable,
        holds: !uni_applicable || s.value <= 1.0 + SLACK,
        margin: 1.0 - s.value,
    });

    if is_db {
        checks.push(BoundCheck {
            name: "inverse precision <= combinatorial maximum".into(),
            applicable: true,
            holds: inv_p <= max_inv_f + SLACK,
            margin: max_inv_f - inv_p,
        });
        let alg = inverse_precision_algebraic(&sm, &op.cbar, input, output)?.inv_precision;
        checks.push(BoundCheck {
            name: "spectral limit matches algebraic inverse precision".into(),
            applicable: true,
            holds: (inv_p - alg).abs() <= 1e-8,
            margin: 1e-8 - (inv_p - alg).abs(),
        });
        if kappa.is_some() {
            let formula = homogeneous_precision(net, &op.cbar, input)?.recip();
            checks.push(BoundCheck {
                name: "homogeneous closed-form inverse precision".into(),
                applicable: true,
                holds: (inv_p - formula).abs() <= 1e-8,
                margin: 1e-8 - (inv_p - formula).abs(),
            });
        }
    }

    Ok(BoundReport {
        sensitivity: s,
        inv_precision: inv_p,
        sqrt_bound,
        homogeneous_order: kappa,
        max_inv_precision: max_inv_f,
        checks,
    })
}

/// Builds the relaxation operator appropriate for the parameter set.
pub fn operator_for(net: &Network, params: &ParamSet) -> Result<LinearOperator> {
    match params {
        ParamSet::DetailedBalance(p) => linearize_db(net, p),
        ParamSet::MassAction { cbar: Some(c), kinetics } => linearize_general(net, c, kinetics),
        ParamSet::MassAction { cbar: None, .. } => Err(CrnError::Domain(
            "general mass-action analysis needs the stationary state (cbar)".into(),
        )),
    }
}

/// Log-uniform detailed-balance parameters over [1e-3, 1e3].
pub fn random_db_params(net: &Network, rng: &mut ChaCha8Rng) -> KineticParams {
    let log_uniform =
        |rng: &mut ChaCha8Rng| -> f64 { 10f64.powf(rng.random_range(-3.0..3.0)) };
    let cbar = (0..net.num_species()).map(|_| log_uniform(rng)).collect();
    let k = (0..net.num_reactions()).map(|_| log_uniform(rng)).collect();
    KineticParams::new(cbar, k).expect("sampled parameters are positive")
}

/// Log-uniform strictly positive forward/backward rate pairs.
pub fn random_reversible_rates(net: &Network, rng: &mut ChaCha8Rng) -> GeneralKineticParams {
    let log_uniform =
        |rng: &mut ChaCha8Rng| -> f64 { 10f64.powf(rng.random_range(-3.0..3.0)) };
    let kplus = (0..net.num_reactions()).map(|_| log_uniform(rng)).collect();
    let kminus = (0..net.num_reactions()).map(|_| log_uniform(rng)).collect();
    GeneralKineticParams::new(kplus, kminus).expect("sampled rates are positive")
}

/// Steady state of a reversible unimolecular network under general
/// mass-action rates: the positive flux-balance solution normalized to a
/// total equal to the species count.
pub fn unimolecular_steady_state(net: &Network, params: &GeneralKineticParams) -> Result<Vec<f64>> {
    if homogeneous_order(net) != Some(1) {
        return Err(CrnError::Domain("network is not unimolecular".into()));
    }
    params.check_dims(net)?;
    let n = net.num_species();
    let mut flux = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (r, rx) in net.reactions.iter().enumerate() {
        let s = (0..n).find(|&s| !rx.alpha[s].is_zero()).expect("unimolecular reactant");
        let sp = (0..n).find(|&s| !rx.beta[s].is_zero()).expect("unimolecular product");
        flux[(s, s)] -= params.kplus[r];
        flux[(s, sp)] += params.kminus[r];
        flux[(sp, sp)] -= params.kminus[r];
        flux[(sp, s)] += params.kplus[r];
    }
    // replace the last balance row with the normalization
    for sp in 0..n {
        flux[(n - 1, sp)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = n as f64;
    let c = flux
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CrnError::Numerics("flux balance is singular (network disconnected?)".into()))?;
    if c.iter().any(|&x| !(x > 0.0)) {
        return Err(CrnError::Numerics("flux balance produced a nonpositive state".into()));
    }
    Ok(c.as_slice().to_vec())
}

/// Outcome of one seeded property suite.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Worst signed margin seen across trials (negative = violation).
    pub worst_margin: f64,
}

/// Aggregated result of all applicable property suites for one network.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub input: String,
    pub output: String,
    pub outcomes: Vec<PropertyOutcome>,
    pub passed: bool,
}

/// Runs every property suite applicable to the network: combinatorial
/// duality and enumeration oracle once, bound checks over `trials` random
/// detailed-balance parameter points, the reversible-unimolecular bound when
/// the network is unimolecular, and nonlinear conservation/free-energy
/// invariants on up to 20 random trajectories.
pub fn verify_properties(
    net: &Network,
    input: usize,
    output: usize,
    trials: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let sm = stoichiometric_matrix(net);
    let mut outcomes = Vec::new();

    // duality of the two combinatorial characterizations, recomputed here
    // directly from the elementary-vector lists
    {
        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        let stoich = elementary_vectors(&stoich_range_basis(&sm), SpaceKind::Stoichiometric);
        let one = Rat::from_integer(1.into());
        let via_u = cons
            .iter()
            .filter_map(|ev| ev.rescaled(input, &one).map(|s| s.coords[output].clone()))
            .fold(Rat::zero(), Rat::max);
        let via_w = stoich
            .iter()
            .filter_map(|ev| ev.rescaled(output, &(-one.clone())).map(|s| s.coords[input].clone()))
            .fold(Rat::zero(), Rat::max);
        let cert = max_inv_precision(&sm, input, output);
        let agree = via_u == via_w && via_u == cert.value;
        outcomes.push(PropertyOutcome {
            name: "max inverse Precision duality".into(),
            trials: 1,
            failures: usize::from(!agree),
            worst_margin: rat_to_f64(&(&via_u - &via_w)),
        });
    }

    // enumeration equals the exhaustive-support oracle at desk scale
    if net.num_species() <= 10 {
        let mut failures = 0;
        for (basis, kind) in [
            (stoich_range_basis(&sm), SpaceKind::Stoichiometric),
            (conservation_basis(&sm), SpaceKind::Conservation),
        ] {
            let mut got: Vec<Vec<usize>> =
                elementary_vectors(&basis, kind).into_iter().map(|e| e.support).collect();
            got.sort();
            let mut brute = exhaustive_circuit_supports(&basis, net.num_species());
            brute.sort();
            if got != brute {
                failures += 1;
            }
        }
        outcomes.push(PropertyOutcome {
            name: "circuit enumeration vs exhaustive oracle".into(),
            trials: 2,
            failures,
            worst_margin: if failures == 0 { 0.0 } else { -1.0 },
        });
    }

    // bound suites over random detailed-balance parameter points
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sqrt_failures = 0;
    let mut sqrt_margin = f64::INFINITY;
    let mut sp_failures = 0;
    let mut sp_margin = f64::INFINITY;
    let mut alg_failures = 0;
    let mut alg_margin = f64::INFINITY;
    let mut maxinv_failures = 0;
    let mut maxinv_margin = f64::INFINITY;
    let kappa = homogeneous_order(net);
    let mut homog_failures = 0;
    let mut homog_margin = f64::INFINITY;
    let max_inv = rat_to_f64(&max_inv_precision(&sm, input, output).value);

    for _ in 0..trials {
        let params = random_db_params(net, &mut rng);
        let op = linearize_db(net, &params)?;
        let s = sensitivity(&op, input, output)?;
        let lim = inverse_precision_limit(&op, input, output)?;
        let alg = inverse_precision_algebraic(&sm, &params.cbar, input, output)?.inv_precision;

        let bound = sensitivity_sqrt_bound(&params.cbar, input, output);
        let margin = bound * (1.0 + SLACK) - s.value;
        sqrt_margin = sqrt_margin.min(margin);
        if margin < 0.0 {
            sqrt_failures += 1;
        }

        if lim >= 0.0 {
            let margin = s.value - lim + SLACK;
            sp_margin = sp_margin.min(margin);
            if margin < 0.0 {
                sp_failures += 1;
            }
        }

        let margin = 1e-8 - (lim - alg).abs();
        alg_margin = alg_margin.min(margin);
        if margin < 0.0 {
            alg_failures += 1;
        }

        let margin = max_inv + SLACK - alg;
        maxinv_margin = maxinv_margin.min(margin);
        if margin < 0.0 {
            maxinv_failures += 1;
        }

        if kappa.is_some() {
            let margin = 1.0 + SLACK - s.value;
            homog_margin = homog_margin.min(margin);
            if margin < 0.0 {
                homog_failures += 1;
            }
        }
    }
    outcomes.push(PropertyOutcome {
        name: "sensitivity sqrt bound".into(),
        trials,
        failures: sqrt_failures,
        worst_margin: sqrt_margin,
    });
    outcomes.push(PropertyOutcome {
        name: "sensitivity >= nonnegative inverse precision".into(),
        trials,
        failures: sp_failures,
        worst_margin: sp_margin,
    });
    outcomes.push(PropertyOutcome {
        name: "spectral vs algebraic inverse precision".into(),
        trials,
        failures: alg_failures,
        worst_margin: alg_margin,
    });
    outcomes.push(PropertyOutcome {
        name: "inverse precision below combinatorial maximum".into(),
        trials,
        failures: maxinv_failures,
        worst_margin: maxinv_margin,
    });
    if kappa.is_some() {
        outcomes.push(PropertyOutcome {
            name: "homogeneous sensitivity <= 1".into(),
            trials,
            failures: homog_failures,
            worst_margin: homog_margin,
        });
    }

    // reversible unimolecular networks also bound S <= 1 without detailed
    // balance
    if kappa == Some(1) {
        let mut failures = 0;
        let mut worst = f64::INFINITY;
        for _ in 0..trials {
            let rates = random_reversible_rates(net, &mut rng);
            let cbar = unimolecular_steady_state(net, &rates)?;
            let op = linearize_general(net, &cbar, &rates)?;
            let s = sensitivity(&op, input, output)?;
            let margin = 1.0 + SLACK - s.value;
            worst = worst.min(margin);
            if margin < 0.0 {
                failures += 1;
            }
        }
        outcomes.push(PropertyOutcome {
            name: "reversible unimolecular sensitivity <= 1".into(),
            trials,
            failures,
            worst_margin: worst,
        });
    }

    // nonlinear invariants: conserved totals and free-energy descent
    {
        let runs = trials.min(20);
        let cons = conservation_basis(&sm);
        let opts = crate::dynamics::IntegratorOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        let mut cons_failures = 0;
        let mut cons_margin = f64::INFINITY;
        let mut lyap_failures = 0;
        let mut lyap_margin = f64::INFINITY;
        for _ in 0..runs {
            let tame = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-2.0..2.0));
            let cbar: Vec<f64> = (0..net.num_species()).map(|_| tame(&mut rng)).collect();
            let k: Vec<f64> = (0..net.num_reactions()).map(|_| tame(&mut rng)).collect();
            let params = KineticParams::new(cbar.clone(), k).expect("positive");
            let c0: Vec<f64> = cbar
                .iter()
                .map(|c| c * rng.random_range(-1.0..1.0f64).exp())
                .collect();
            let op = linearize_db(net, &params)?;
            let (_, t_max) = op.time_window()?;
            let grid: Vec<f64> = std::iter::once(0.0)
                .chain((0..=60).map(|j| t_max * 10f64.powf(-6.0 + 0.1 * j as f64)))
                .collect();
            let traj = crate::dynamics::simulate(
                net,
                &ParamSet::DetailedBalance(params.clone()),
                &c0,
                &grid,
                &opts,
            )?;
            for u in &cons {
                let uf: Vec<f64> = u.iter().map(rat_to_f64).collect();
                let t0: f64 = uf.iter().zip(&traj.states[0]).map(|(a, b)| a * b).sum();
                for state in &traj.states {
                    let t: f64 = uf.iter().zip(state).map(|(a, b)| a * b).sum();
                    let margin = 1e-8 * t0.abs().max(1.0) - (t - t0).abs();
                    cons_margin = cons_margin.min(margin);
                    if margin < 0.0 {
                        cons_failures += 1;
                    }
                }
            }
            let mut last = f64::INFINITY;
            for state in &traj.states {
                let f = crate::dynamics::free_energy(state, &params.cbar)?;
                let margin = last + 1e-9 - f;
                if last.is_finite() {
                    lyap_margin = lyap_margin.min(margin);
                    if margin < 0.0 {
                        lyap_failures += 1;
                    }
                }
                last = f;
            }
        }
        outcomes.push(PropertyOutcome {
            name: "conserved totals along trajectories".into(),
            trials: runs,
            failures: cons_failures,
            worst_margin: cons_margin,
        });
        outcomes.push(PropertyOutcome {
            name: "free energy non-increasing".into(),
            trials: runs,
            failures: lyap_failures,
            worst_margin: lyap_margin,
        });
    }

    let passed = outcomes.iter().all(|o| o.failures == 0);
    Ok(VerifyReport {
        seed,
        input: net.species[input].name.clone(),
        output: net.species[output].name.clone(),
        outcomes,
        passed,
    })
}

/// Brute-force circuit supports: every subset that carries a vector of the
/// space while none of its proper subsets does.
fn exhaustive_circuit_supports(basis: &[Vec<Rat>], n: usize) -> Vec<Vec<usize>> {
    use crate::exact::RatMat;
    let dim = basis.len();
    if dim == 0 {
        return Vec::new();
    }
    let dim_within = |mask: u32| -> usize {
        let rows: Vec<Vec<Rat>> = (0..n)
            .filter(|s| mask & (1 << s) == 0)
            .map(|s| basis.iter().map(|b| b[s].clone()).collect())
            .collect();
        if rows.is_empty() {
            dim
        } else {
            dim - RatMat::from_rows(rows).rank()
        }
    };
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if dim_within(mask) >= 1 {
            let minimal = (0..n)
                .filter(|s| mask & (1 << s) != 0)
                .all(|s| dim_within(mask & !(1 << s)) == 0);
            if minimal {
                out.push((0..n).filter(|s| mask & (1 << s) != 0).collect());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use crate::rational::{rat, ratio};

    fn example_a() -> Network {
        parse_network("2 X1 <-> X2 + X3\nX2 <-> X3").unwrap()
    }

    fn uni() -> Network {
        parse_network("X1 <-> X2\nX2 <-> X3\nX1 <-> X3\nX1 <-> X4\nX4 <-> X3").unwrap()
    }

    #[test]
    fn homogeneity_detection() {
        assert_eq!(homogeneous_order(&uni()), Some(1));
        assert_eq!(homogeneous_order(&example_a()), None);
        let k2 = parse_network("2 X1 <-> 2 X2\n2 X2 <-> 2 X3").unwrap();
        assert_eq!(homogeneous_order(&k2), Some(2));
        // mixed orders do not qualify
        let mixed = parse_network("X1 <-> X2\n2 X2 <-> 2 X3").unwrap();
        assert_eq!(homogeneous_order(&mixed), None);
    }

    #[test]
    fn homogeneous_precision_values() {
        let net = uni();
        let p = homogeneous_precision_exact(&net, &[rat(20), rat(50), rat(1), rat(20)], 0).unwrap();
        assert_eq!(p, ratio(91, 20));
        let pf = homogeneous_precision(&net, &[3.0, 3.0, 3.0, 3.0], 0).unwrap();
        assert!((pf - 4.0).abs() < 1e-12);
        assert!(homogeneous_precision(&example_a(), &[1.0, 1.0, 1.0], 0).is_err());
    }

    #[test]
    fn homogeneous_precision_matches_algebraic_solve() {
        let net = uni();
        let sm = stoichiometric_matrix(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let cbar: Vec<f64> =
                (0..4).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
            let formula = homogeneous_precision(&net, &cbar, 0).unwrap().recip();
            for o in 1..4 {
                let alg = inverse_precision_algebraic(&sm, &cbar, 0, o).unwrap().inv_precision;
                assert!((alg - formula).abs() <= 1e-10 * formula.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sqrt_bound_basics() {
        assert!((sensitivity_sqrt_bound(&[4.0, 1.0], 0, 1) - 2.0).abs() < 1e-15);
        assert_eq!(sensitivity_sqrt_bound(&[3.0, 3.0], 0, 1), 1.0);
        let a = sensitivity_sqrt_bound(&[4.0, 9.0], 0, 1);
        let b = sensitivity_sqrt_bound(&[40.0, 90.0], 0, 1);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn subsystem_bound_example_b() {
        // the n-fold version of the first reaction gives the bound n
        for n in [2i64, 3, 5] {
            let net =
                parse_network(&format!("{n} X1 <-> X2 + X3\nX2 <-> X3")).unwrap();
            let bound = max_sensitivity_lower_bound(&net, 0, 2, 20).unwrap();
            assert!((bound.value - n as f64).abs() < 1e-12);
            assert_eq!(bound.reactions, vec![0]);
        }
    }

    #[test]
    fn subsystem_bound_example_a_output_three() {
        let bound = max_sensitivity_lower_bound(&example_a(), 0, 2, 20).unwrap();
        assert!((bound.value - 2.0).abs() < 1e-12);
        assert_eq!(bound.reactions, vec![0]);
    }

    #[test]
    fn subsystem_cap_guard() {
        let net = example_a();
        assert!(matches!(
            max_sensitivity_lower_bound(&net, 0, 1, 1),
            Err(CrnError::CapExceeded(_))
        ));
    }

    #[test]
    fn bound_report_example_a() {
        let net = example_a();
        let params = ParamSet::DetailedBalance(
            KineticParams::new(vec![15.0, 1.0, 10.0], vec![10.0, 0.1]).unwrap(),
        );
        let report = check_all_bounds(&net, &params, 0, 1).unwrap();
        assert!((report.sensitivity.value - 1.44).abs() < 0.01);
        assert!((report.inv_precision - 0.58).abs() < 0.01);
        assert!((report.sqrt_bound.unwrap() - 15f64.sqrt()).abs() < 1e-12);
        assert_eq!(report.max_inv_precision, 1.0);
        assert!(report.checks.iter().all(|c| !c.applicable || c.holds));
    }

    #[test]
    fn bound_report_unimolecular() {
        let net = uni();
        let params = ParamSet::DetailedBalance(
            KineticParams::new(vec![20.0, 50.0, 1.0, 20.0], vec![5.0, 0.01, 5.0, 30.0, 0.1])
                .unwrap(),
        );
        let report = check_all_bounds(&net, &params, 0, 1).unwrap();
        assert_eq!(report.homogeneous_order, Some(1));
        assert!(report.sensitivity.value <= 1.0 + 1e-9);
        assert!((report.inv_precision - 20.0 / 91.0).abs() < 1e-9);
        assert!(report.checks.iter().all(|c| !c.applicable || c.holds));
    }

    #[test]
    fn unimolecular_steady_state_balances() {
        let net = uni();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rates = random_reversible_rates(&net, &mut rng);
        let cbar = unimolecular_steady_state(&net, &rates).unwrap();
        let rates_at = crate::dynamics::mass_action_rates(&net, &rates, &cbar).unwrap();
        // net production of each species vanishes
        let sm = stoichiometric_matrix(&net);
        for s in 0..net.num_species() {
            let prod: f64 = (0..net.num_reactions())
                .map(|r| rat_to_f64(&sm.entries[(s, r)]) * rates_at[r])
                .sum();
            assert!(prod.abs() < 1e-9, "species {s} unbalanced: {prod}");
        }
    }

    #[test]
    fn verify_suite_passes_on_example_a() {
        let report = verify_properties(&example_a(), 0, 1, 20, 42).unwrap();
        assert!(report.passed, "{:#?}", report.outcomes);
    }

    #[test]
    fn verify_suite_passes_on_unimolecular() {
        let report = verify_properties(&uni(), 0, 1, 10, 42).unwrap();
        assert!(report.passed, "{:#?}", report.outcomes);
        assert!(report
            .outcomes
            .iter()
            .any(|o| o.name == "reversible unimolecular sensitivity <= 1"));
    }

    #[test]
    fn subsystem_rates_vanishing_approaches_subsystem_sensitivity() {
        // freezing the second reaction with ever-smaller rates drives the
        // full response toward the one-reaction subsystem's supremum
        let net = example_a();
        let cbar = vec![100.0, 100_000.0, 0.01];
        let sub_params = KineticParams::new(cbar.clone(), vec![10.0, 1.0]).unwrap();
        let sub = net.restrict_to(&[0]);
        let sub_op = linearize_db(&sub, &KineticParams::new(cbar.clone(), vec![10.0]).unwrap())
            .unwrap();
        let s_sub = sensitivity(&sub_op, 0, 2).unwrap();
        let mut last_gap = f64::INFINITY;
        for eta in [1e-3, 1e-6, 1e-9] {
            let k = vec![sub_params.k[0], sub_params.k[0] * eta];
            let op =
                linearize_db(&net, &KineticParams::new(cbar.clone(), k).unwrap()).unwrap();
            let s_full = sensitivity(&op, 0, 2).unwrap();
            let gap = (s_full.value - s_sub.value).abs() / s_sub.value;
            assert!(gap <= last_gap + 1e-12);
            last_gap = gap;
        }
        assert!(last_gap < 0.05, "gap {last_gap}");
    }
}
