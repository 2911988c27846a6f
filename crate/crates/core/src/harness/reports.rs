use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::analytics::{
    alpha_opt, alpha_th, daa_analyze, daa_beta_lower, deflationary_payoff_gap,
    gamblers_ruin_closed_form, gamblers_ruin_monte_carlo, gamblers_ruin_oracle, qf_analyze,
    qf_eta_bound, qf_eta_bound_flat, smb_beta_lower, tw_discount_closed_form, tw_utilities,
    QfParams,
};
use crate::chain::{BlockId, RewardFamily, Transaction, TxId};
use crate::hash::KeyedHash;
use crate::mining::SimConfig;
use crate::pragthos::{
    c1_filter, epsilon_g_bound, k_th_compute, poi_inclusion_probability, simulate_poi_windows,
};
use crate::strategies::StrategyKind;

fn flatten(out: &mut Map<String, Value>, prefix: &str, v: Value) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(out, &format!("{prefix}.{k}"), v);
            }
        }
        v => {
            out.insert(prefix.to_string(), v);
        }
    }
}

fn put<T: Serialize>(out: &mut Map<String, Value>, key: &str, v: T) {
    if let Ok(v) = serde_json::to_value(v) {
        flatten(out, key, v);
    }
}

/// Every closed-form quantity that applies to `config`, as one flat object.
///
/// `horizon` supplies `(p_fr, delta)` for the deflationary horizons; they are
/// skipped without it or without a geometric reward schedule.
pub fn bounds_report(config: &SimConfig, horizon: Option<(f64, f64)>) -> Map<String, Value> {
    let mut out = Map::new();
    let pop = &config.population;
    let tau = config.epoch.tau_min;
    put(&mut out, "daa.beta_lower_tau_0.25", daa_beta_lower(0.25));
    put(&mut out, "daa.beta_lower_tau_0.5", daa_beta_lower(0.5));
    put(&mut out, "daa.beta_lower", daa_beta_lower(tau));

    let (r1, r2, alpha) = match &config.strategies.adversary {
        StrategyKind::DifficultyAltering { r1, r2, alpha, .. } => (*r1, *r2, *alpha),
        _ => (0.0, 1.0, pop.beta_adv.max(1e-9) / tau),
    };
    let theta = config.epoch.target_block_interval * pop.n as f64 * pop.q as f64;
    if let Ok(a) = daa_analyze(pop.beta_adv, tau, r1, r2, alpha, theta, 0.1) {
        put(&mut out, "daa", a);
    }

    if let Ok(s) = smb_beta_lower(pop.beta_hon, pop.beta_rat) {
        put(&mut out, "smb", s);
    }
    if let Ok(s) = smb_beta_lower(1.0 - pop.beta_adv, 0.0) {
        put(&mut out, "smb.beta_lower_no_rational", s.beta_lower);
    }

    let rho = config.externality.rho;
    let k = match &config.strategies.adversary {
        StrategyKind::QuickFork { k, .. } => *k,
        _ => 1,
    };
    let r_block = config.rewards.r0;
    let chi = config.mining_cost_per_block;
    let eta = if chi > 0.0 {
        r_block / chi
    } else {
        f64::INFINITY
    };
    let vartheta = config.rewards.next_phase_ratio(0).unwrap_or(1.0);
    let qp = QfParams {
        n: pop.n as u64,
        beta_hon: pop.beta_hon,
        beta_rat: pop.beta_rat,
        beta_adv: pop.beta_adv,
        eta,
        vartheta,
        rho,
        k,
    };
    if let Ok(q) = qf_analyze(&qp) {
        put(&mut out, "qf", q);
    }

    if let Ok(kt) = k_th_compute(pop.beta_hon, rho, config.pragthos.mu) {
        put(&mut out, "pcmod.k_th", kt);
        put(
            &mut out,
            "pcmod.inclusion",
            poi_inclusion_probability(pop.beta_hon, kt.floor as f64),
        );
    }

    if let Some(w) = &config.transactions {
        let total = w.count as f64 * w.fee;
        put(&mut out, "tx.total_fee", total);
        put(&mut out, "tx.l", config.pragthos.l);
        put(
            &mut out,
            "tx.epsilon_g_bound",
            epsilon_g_bound(total, config.pragthos.l),
        );
    }

    if let (Some((p_fr, delta)), RewardFamily::Geometric { vartheta }) =
        (horizon, &config.rewards.family)
    {
        if let Ok(a) = alpha_th(p_fr, *vartheta) {
            put(&mut out, "horizon.alpha_th", a);
        }
        if let Ok(a) = alpha_opt(p_fr, delta, *vartheta) {
            put(&mut out, "horizon.alpha_opt", a);
            let lam = config.rewards.capital_lambda as f64;
            put(
                &mut out,
                "horizon.gap_at_alpha_opt",
                deflationary_payoff_gap(p_fr, delta, *vartheta, lam, r_block, 1.0, a),
            );
        }
    }
    out
}

/// One formula checked against an independent computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub formula: f64,
    pub oracle: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn new(name: &str, formula: f64, oracle: f64, tolerance: f64) -> Self {
        let delta = (formula - oracle).abs();
        Self {
            name: name.to_string(),
            formula,
            oracle,
            delta,
            tolerance,
            pass: delta <= tolerance,
        }
    }
}

/// Runs every brute-force oracle and reports how far each formula is from it.
pub fn oracle_report(seed: u64) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Absorption DP over the whole grid; report the worst cell.
    let mut worst = (0.0, 0.0, 0.0f64);
    for phi in (1..=19).map(|i| i as f64 * 0.05) {
        for rho in 2..=12 {
            for k in 0..=rho {
                let (c, o) = (
                    gamblers_ruin_closed_form(phi, rho, k),
                    gamblers_ruin_oracle(phi, rho, k),
                );
                if (c - o).abs() >= worst.2 {
                    worst = (c, o, (c - o).abs());
                }
            }
        }
    }
    checks.push(OracleCheck::new(
        "gamblers_ruin.grid_worst",
        worst.0,
        worst.1,
        1e-9,
    ));
    checks.push(OracleCheck::new(
        "gamblers_ruin.monte_carlo(0.8,6,2)",
        gamblers_ruin_closed_form(0.8, 6, 2),
        gamblers_ruin_monte_carlo(&mut rng, 0.8, 6, 2, 100_000),
        0.01,
    ));

    let mut residual: f64 = 0.0;
    for tau in (0..50).map(|i| i as f64 * 0.01) {
        let b = daa_beta_lower(tau);
        residual = residual.max((b * b - (3.0 + tau) * b + (1.0 + tau)).abs());
    }
    checks.push(OracleCheck::new(
        "daa.beta_lower.quadratic_residual",
        residual,
        0.0,
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for n in [2u64, 5, 10, 50, 100] {
        for bh in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45] {
            let (a, b) = (qf_eta_bound(n, bh, 1.0), qf_eta_bound_flat(n, bh));
            if a.is_finite() && b.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
    }
    checks.push(OracleCheck::new(
        "qf.eta_bound.reduction",
        worst,
        0.0,
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for bh in [0.0, 0.1, 0.25, 0.5, 0.75, 1.0] {
        for br in [0.0, 0.1, 0.25] {
            if let Ok(s) = smb_beta_lower(bh, br) {
                worst = worst.max((s.beta_lower - s.selfish_threshold).abs());
            }
        }
    }
    checks.push(OracleCheck::new("smb.threshold_forms", worst, 0.0, 1e-12));

    let fees = vec![1.0; 10];
    if let Ok(t) = tw_utilities(&fees, 0, 0.9, 0.01, 10, 10_000) {
        checks.push(OracleCheck::new(
            "tx_withholding.discount_sum",
            t.discount_sum,
            tw_discount_closed_form(0.9, 0.01, 10),
            1e-9,
        ));
    }

    // Enumerate 2^16 payout addresses for one transaction and parent.
    let l = 8;
    let h = KeyedHash::new(seed);
    let tx = Transaction::normal(TxId(h.hash(&[b"oracle-tx"])), 1.0, vec![]).expect("valid fee");
    let parent = BlockId(h.hash(&[b"oracle-parent"]));
    let trials = 1u32 << 16;
    let hits = (0..trials)
        .filter(|i| c1_filter(&h, &tx, &h.hash(&[b"dest", &i.to_le_bytes()]), &parent, l))
        .count();
    let p = 0.5f64.powi(l as i32);
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    checks.push(OracleCheck::new(
        "c1_filter.acceptance(l=8)",
        p,
        hits as f64 / trials as f64,
        3.0 * sigma,
    ));

    if let Ok(kt) = k_th_compute(0.4, 6, 0.2) {
        let exact = poi_inclusion_probability(0.4, kt.floor as f64).exact;
        checks.push(OracleCheck::new(
            "poi.window_inclusion",
            exact,
            simulate_poi_windows(&mut rng, 0.4, kt.floor, 100_000),
            0.02,
        ));
    }

    // Defining inequalities on a grid: count violations.
    let mut violations = 0u32;
    let mut cells = 0u32;
    for p_fr in [0.05, 0.1, 0.2, 0.3, 0.5] {
        for delta in [0.01, 0.05, 0.1, 0.3] {
            for vt in [0.3, 0.5, 0.7, 0.9, 0.95] {
                cells += 1;
                let Ok(a) = alpha_opt(p_fr, delta, vt) else {
                    violations += 1;
                    continue;
                };
                let target = delta / (p_fr + delta);
                let ok_def = vt.powi(a as i32) < target && target <= vt.powi(a as i32 - 1);
                let gap = |a2| deflationary_payoff_gap(p_fr, delta, vt, 1.0, 1.0, 1.0, a2);
                // On the boundary target = vt^(a-1) the earlier gap is exactly zero.
                let boundary = (vt.powi(a as i32 - 1) - target).abs() < 1e-12;
                let ok_gap = gap(a) >= 0.0 && (a == 1 || boundary || gap(a - 1) < 0.0);
                let ok_th = alpha_th(p_fr, vt)
                    .map(|t| {
                        let x = 1.0 - p_fr;
                        vt.powi(t as i32) < x && x <= vt.powi(t as i32 - 1)
                    })
                    .unwrap_or(false);
                if !(ok_def && ok_gap && ok_th) {
                    violations += 1;
                }
            }
        }
    }
    checks.push(OracleCheck::new(
        &format!("horizon.defining_inequalities({cells} cells)"),
        violations as f64,
        0.0,
        0.0,
    ));
    checks
}
