use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, ScenarioSpec};
use super::output::RunRecord;
use super::stats::{mean_ci, wilson, Interval};
use super::HarnessError;
use crate::analytics::utility_aggregate;
use crate::mining::{run, AttackOutcome, FlagKind, ScenarioResult, SimConfig};
use crate::party::{Party, PerParty};
use crate::pragthos::epsilon_g_bound;
use crate::strategies::StrategyKind;

/// Metric names usable in an `[expected]` band.
pub const METRICS: [&str; 14] = [
    "success_rate",
    "success_ci_lower",
    "success_ci_upper",
    "adv_revenue_share",
    "adv_revenue_share_ci_lower",
    "adv_revenue_share_ci_upper",
    "adv_block_share",
    "adv_block_share_ci_lower",
    "adv_block_share_ci_upper",
    "rp_join_rate",
    "security_flag_rate",
    "theta_final_mean",
    "payoff_adv_mean",
    "u_d_mean",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub metric: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Aggregate over the repetitions of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub runs: u64,
    pub errors: u64,
    pub successes: u64,
    pub failures: u64,
    pub success_rate: f64,
    pub success_ci: (f64, f64),
    pub payoff: PerParty<Interval>,
    /// Adversary share of final-chain coin income, net of bribes.
    pub adv_revenue_share: Interval,
    /// Adversary share of final-chain blocks.
    pub adv_block_share: Interval,
    pub blocks_total: PerParty<u64>,
    pub rp_join_rate: f64,
    pub security_flag_rate: f64,
    pub theta_final_mean: f64,
    pub u_d: Interval,
    pub u_a: Interval,
    pub goldfinger_mean: Option<f64>,
    pub poi_valid_reveals: u64,
    pub verdict: Option<Verdict>,
}

impl Summary {
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "success_rate" => self.success_rate,
            "success_ci_lower" => self.success_ci.0,
            "success_ci_upper" => self.success_ci.1,
            "adv_revenue_share" => self.adv_revenue_share.mean,
            "adv_revenue_share_ci_lower" => self.adv_revenue_share.lo,
            "adv_revenue_share_ci_upper" => self.adv_revenue_share.hi,
            "adv_block_share" => self.adv_block_share.mean,
            "adv_block_share_ci_lower" => self.adv_block_share.lo,
            "adv_block_share_ci_upper" => self.adv_block_share.hi,
            "rp_join_rate" => self.rp_join_rate,
            "security_flag_rate" => self.security_flag_rate,
            "theta_final_mean" => self.theta_final_mean,
            "payoff_adv_mean" => self.payoff.adversary.mean,
            "u_d_mean" => self.u_d.mean,
            _ => return None,
        })
    }
}

/// Withholding gain for one filter width.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TxGapRow {
    /// Filter width; `None` runs without the inclusion filter.
    pub l: Option<u32>,
    pub reps: u64,
    pub gap: Interval,
    pub max_gap: f64,
    /// `total withheld fee / 2^l`.
    pub bound: Option<f64>,
    pub gap_ok: Option<bool>,
    pub filter_evaluations: u64,
    pub filter_passes: u64,
    pub pass_rate: f64,
    pub expected_pass_rate: Option<f64>,
    /// Within three standard errors of `2^-l`.
    pub pass_rate_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub summaries: Vec<Summary>,
    pub tx_gap: Vec<TxGapRow>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl ScenarioReport {
    /// `Some(true)` when every checked band or built-in bound held.
    pub fn verdict(&self) -> Option<bool> {
        let mut checked = false;
        let mut ok = true;
        for s in &self.summaries {
            if let Some(v) = &s.verdict {
                checked = true;
                ok &= v.pass;
            }
        }
        for row in &self.tx_gap {
            for c in [row.gap_ok, row.pass_rate_ok].into_iter().flatten() {
                checked = true;
                ok &= c;
            }
        }
        checked.then_some(ok)
    }
}

fn timed(config: &SimConfig) -> (Result<ScenarioResult, crate::mining::SimError>, u64) {
    let t = Instant::now();
    let r = run(config);
    (r, t.elapsed().as_millis() as u64)
}

/// Runs every repetition of `config` on the current rayon pool, in seed order.
fn repetitions(
    spec: &ScenarioSpec,
    config: &SimConfig,
) -> Vec<(u64, Result<ScenarioResult, String>, u64)> {
    (0..spec.repetitions)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.rng_seed = spec.seed(i);
            let (r, ms) = timed(&c);
            (c.rng_seed, r.map_err(|e| e.to_string()), ms)
        })
        .collect()
}

/// Runs a scenario (all sweep points) with `jobs` worker threads.
///
/// The aggregate depends only on the spec: results are gathered in seed
/// order before any reduction.
pub fn run_scenario(spec: &ScenarioSpec, jobs: usize) -> Result<ScenarioReport, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Output(e.to_string()))?;
    let mut report = ScenarioReport {
        name: spec.name.clone(),
        summaries: Vec::new(),
        tx_gap: Vec::new(),
        records: Vec::new(),
    };
    for (label, point) in spec.points()? {
        let name = match &label {
            Some(l) => format!("{}[{l}]", spec.name),
            None => spec.name.clone(),
        };
        match &spec.experiment {
            Experiment::Standard => {
                let results = pool.install(|| repetitions(&point, &point.config));
                let mut ok = Vec::with_capacity(results.len());
                for (seed, r, ms) in results {
                    match r {
                        Ok(res) => {
                            report.records.push(RunRecord::from_result(&name, &res, ms));
                            ok.push(res);
                        }
                        Err(e) => {
                            warn!("{name} seed {seed}: {e}");
                            report.records.push(RunRecord::error(&name, seed, ms));
                        }
                    }
                }
                let errors = point.repetitions - ok.len() as u64;
                let mut s = summarize(&name, &ok, errors, &point.config);
                if let Some(b) = &spec.expected {
                    let value = s.metric(&b.metric).unwrap_or(f64::NAN);
                    s.verdict = Some(Verdict {
                        metric: b.metric.clone(),
                        value,
                        lower: b.lower,
                        upper: b.upper,
                        pass: value >= b.lower && value <= b.upper,
                    });
                }
                report.summaries.push(s);
            }
            Experiment::TxGap { ls } => {
                let mut widths: Vec<Option<u32>> = vec![None];
                widths.extend(ls.iter().map(|l| Some(*l)));
                for l in widths {
                    let (row, recs) = pool.install(|| tx_gap(&point, &name, l))?;
                    report.records.extend(recs);
                    report.tx_gap.push(row);
                }
            }
        }
    }
    Ok(report)
}

/// Aggregates finished runs.
pub fn summarize(
    name: &str,
    results: &[ScenarioResult],
    errors: u64,
    config: &SimConfig,
) -> Summary {
    let n = results.len() as u64;
    let runs = n + errors;
    let successes = results
        .iter()
        .filter(|r| r.attack_outcome == AttackOutcome::Succeeded)
        .count() as u64;
    let failures = results
        .iter()
        .filter(|r| r.attack_outcome == AttackOutcome::Failed)
        .count() as u64;
    let col = |f: &dyn Fn(&ScenarioResult) -> f64| -> Vec<f64> { results.iter().map(f).collect() };
    let payoff = PerParty {
        honest: mean_ci(&col(&|r| r.per_party_payoff[Party::Honest])),
        rational: mean_ci(&col(&|r| r.per_party_payoff[Party::Rational])),
        adversary: mean_ci(&col(&|r| r.per_party_payoff[Party::Adversary])),
    };
    let mut blocks_total = PerParty::<u64>::default();
    for r in results {
        for p in Party::ALL {
            blocks_total[p] += r.blocks_by_party[p];
        }
    }
    let utilities: Vec<_> = results
        .iter()
        .map(|r| utility_aggregate(r, &config.population))
        .collect();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let has_overlay = matches!(
        config.strategies.overlay,
        Some(StrategyKind::GoldfingerOverlay { .. })
    );
    Summary {
        scenario: name.to_string(),
        runs,
        errors,
        successes,
        failures,
        success_rate: if runs == 0 {
            0.0
        } else {
            successes as f64 / runs as f64
        },
        success_ci: wilson(successes, runs),
        payoff,
        adv_revenue_share: mean_ci(&col(&|r| r.adversary_revenue_share())),
        adv_block_share: mean_ci(&col(&|r| r.adversary_block_share())),
        blocks_total,
        rp_join_rate: frac(
            results
                .iter()
                .filter(|r| r.rp_decisions.iter().any(|d| d.joined))
                .count(),
        ),
        security_flag_rate: frac(
            results
                .iter()
                .filter(|r| {
                    r.flagged_events
                        .iter()
                        .any(|e| e.kind == FlagKind::Security)
                })
                .count(),
        ),
        theta_final_mean: col(&|r| r.theta_final).iter().sum::<f64>() / n.max(1) as f64,
        u_d: mean_ci(&utilities.iter().filter_map(|u| u.u_d).collect::<Vec<_>>()),
        u_a: mean_ci(&utilities.iter().filter_map(|u| u.u_a).collect::<Vec<_>>()),
        goldfinger_mean: has_overlay.then(|| {
            results
                .iter()
                .filter_map(|r| r.goldfinger_value)
                .sum::<f64>()
                / n.max(1) as f64
        }),
        poi_valid_reveals: results.iter().map(|r| r.poi.reveals_valid).sum(),
        verdict: None,
    }
}

/// Paired runs per seed: the rational party withholds, then gossips.
fn tx_gap(
    spec: &ScenarioSpec,
    name: &str,
    l: Option<u32>,
) -> Result<(TxGapRow, Vec<RunRecord>), HarnessError> {
    let mut base = spec.config.clone();
    let Some(w) = base.transactions else {
        return Err(HarnessError::Validation {
            field: "transactions".into(),
            constraint: "the tx-gap experiment needs a [transactions] table".into(),
        });
    };
    base.pragthos.tx_inclusion = l.is_some();
    if let Some(l) = l {
        base.pragthos.l = l;
    }
    let tag = match l {
        Some(l) => format!("l={l}"),
        None => "unfiltered".to_string(),
    };
    let mut withhold = base.clone();
    withhold.strategies.rational = StrategyKind::TransactionWithholding;
    let mut gossip = base;
    gossip.strategies.rational = StrategyKind::Honest;

    let pairs: Vec<_> = (0..spec.repetitions)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed(i);
            let mut a = withhold.clone();
            a.rng_seed = seed;
            let mut b = gossip.clone();
            b.rng_seed = seed;
            (seed, timed(&a), timed(&b))
        })
        .collect();

    let mut gaps = Vec::with_capacity(pairs.len());
    let mut records = Vec::with_capacity(2 * pairs.len());
    let (mut evals, mut passes) = (0u64, 0u64);
    for (seed, (a, ma), (b, mb)) in pairs {
        let na = format!("{name}[{tag},withhold]");
        let nb = format!("{name}[{tag},gossip]");
        match (a, b) {
            (Ok(a), Ok(b)) => {
                gaps.push(a.per_party_payoff.rational - b.per_party_payoff.rational);
                evals += a.filter.evaluations + b.filter.evaluations;
                passes += a.filter.passes + b.filter.passes;
                records.push(RunRecord::from_result(&na, &a, ma));
                records.push(RunRecord::from_result(&nb, &b, mb));
            }
            (a, b) => {
                warn!("{name} seed {seed}: paired run failed");
                records.push(match a {
                    Ok(a) => RunRecord::from_result(&na, &a, ma),
                    Err(_) => RunRecord::error(&na, seed, ma),
                });
                records.push(match b {
                    Ok(b) => RunRecord::from_result(&nb, &b, mb),
                    Err(_) => RunRecord::error(&nb, seed, mb),
                });
            }
        }
    }
    let gap = mean_ci(&gaps);
    let total_fee = w.count as f64 * w.fee;
    let bound = l.map(|l| epsilon_g_bound(total_fee, l));
    let expected = l.map(|l| 0.5f64.powi(l as i32));
    let pass_rate = if evals == 0 {
        0.0
    } else {
        passes as f64 / evals as f64
    };
    let pass_rate_ok = expected.map(|p| {
        let sigma = (p * (1.0 - p) / evals.max(1) as f64).sqrt();
        (pass_rate - p).abs() <= 3.0 * sigma
    });
    Ok((
        TxGapRow {
            l,
            reps: gaps.len() as u64,
            gap,
            max_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            bound,
            gap_ok: bound.map(|b| gap.mean <= b),
            filter_evaluations: evals,
            filter_passes: passes,
            pass_rate,
            expected_pass_rate: expected,
            pass_rate_ok,
        },
        records,
    ))
}
