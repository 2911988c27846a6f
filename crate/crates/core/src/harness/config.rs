use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use super::HarnessError;
use crate::chain::{EpochParams, RewardFamily, RewardSchedule};
use crate::mining::{
    ExternalityConfig, MinerPopulation, NetworkMode, PragthosConfig, SimConfig, StrategyBindings,
    TimestampRule, TxWorkload,
};
use crate::party::Party;
use crate::strategies::StrategyKind;

/// A parameter that was not in the file and took its documented default.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefaultApplied {
    pub path: String,
    pub value: String,
}

impl fmt::Display for DefaultApplied {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} (default)", self.path, self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    /// Dotted key path into the scenario file, e.g. `population.beta_adv`.
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedBand {
    pub metric: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// Independent repetitions of one configuration.
    Standard,
    /// Paired withhold/gossip runs per seed, once per filter width.
    TxGap { ls: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub description: Option<String>,
    pub config: SimConfig,
    pub repetitions: u64,
    pub seed_base: u64,
    pub sweep: Option<Sweep>,
    pub expected: Option<ExpectedBand>,
    pub experiment: Experiment,
    /// `(p_fr, delta)` for the deflationary horizons in the bounds report.
    pub horizon: Option<(f64, f64)>,
    /// Every default that was filled in, in resolution order.
    pub defaults: Vec<DefaultApplied>,
    /// The parsed document, kept so sweeps can re-resolve single points.
    #[serde(skip)]
    pub(crate) document: Table,
}

impl ScenarioSpec {
    /// Seed of repetition `i`.
    pub fn seed(&self, i: u64) -> u64 {
        self.seed_base.wrapping_add(i)
    }

    /// One fully resolved spec per sweep value (or just this one).
    pub fn points(&self) -> Result<Vec<(Option<String>, ScenarioSpec)>, HarnessError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(None, self.clone())]);
        };
        let mut out = Vec::with_capacity(sweep.values.len());
        for v in &sweep.values {
            let mut doc = self.document.clone();
            doc.remove("sweep");
            set_path(&mut doc, &sweep.path, v.clone())?;
            if sweep.path == "population.beta_adv" {
                // Keep the shares summing to one: honest miners absorb the change.
                if let Some(Value::Table(p)) = doc.get_mut("population") {
                    p.remove("beta_hon");
                }
            }
            let label = format!("{}={}", sweep.path, v);
            let mut spec = resolve(doc, &self.name)?;
            // Overrides applied after parsing carry over to every point.
            spec.repetitions = self.repetitions;
            spec.seed_base = self.seed_base;
            out.push((Some(label), spec));
        }
        Ok(out)
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parses scenario text; `source` names it in error messages.
pub fn parse_config_str(text: &str, source: &str) -> Result<ScenarioSpec, HarnessError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        HarnessError::Parse {
            origin: source.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let spec = resolve(doc, source)?;
    for d in &spec.defaults {
        info!("{}: {d}", spec.name);
    }
    Ok(spec)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

fn set_path(doc: &mut Table, path: &str, value: Value) -> Result<(), HarnessError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| HarnessError::Validation {
            field: "sweep.path".into(),
            constraint: "must name a key".into(),
        })?;
    let mut cur = doc;
    for p in parts {
        let entry = cur.entry(p).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Validation {
                field: "sweep.path".into(),
                constraint: format!("`{p}` in `{path}` is not a table"),
            })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Reads keys from the document, remembering which ones were used and which
/// fell back to defaults.
struct Resolver {
    doc: Table,
    used: BTreeSet<String>,
    /// Keys whose whole subtree is parsed in one go.
    atomic: BTreeSet<String>,
    defaults: Vec<DefaultApplied>,
}

fn invalid(field: &str, constraint: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

impl Resolver {
    fn lookup(&self, path: &str) -> Option<&Value> {
        let mut parts = path.split('.');
        let mut cur = self.doc.get(parts.next()?)?;
        for p in parts {
            cur = cur.as_table()?.get(p)?;
        }
        Some(cur)
    }

    fn present(&self, path: &str) -> bool {
        self.lookup(path).is_some()
    }

    fn parse<T: DeserializeOwned>(&mut self, path: &str) -> Result<Option<T>, HarnessError> {
        let Some(v) = self.lookup(path).cloned() else {
            return Ok(None);
        };
        self.used.insert(path.to_string());
        // Integers are accepted where reals are expected.
        let v = match v {
            Value::Integer(i) if std::any::type_name::<T>() == "f64" => Value::Float(i as f64),
            other => other,
        };
        v.try_into::<T>()
            .map(Some)
            .map_err(|e| invalid(path, e.message().trim().to_string()))
    }

    fn get<T: DeserializeOwned + fmt::Debug>(
        &mut self,
        path: &str,
        default: T,
    ) -> Result<T, HarnessError> {
        match self.parse(path)? {
            Some(v) => Ok(v),
            None => {
                self.note(path, format!("{default:?}"));
                Ok(default)
            }
        }
    }

    fn opt<T: DeserializeOwned>(&mut self, path: &str) -> Result<Option<T>, HarnessError> {
        let v = self.parse(path)?;
        if v.is_none() {
            self.note(path, "none".into());
        }
        Ok(v)
    }

    fn atomic<T: DeserializeOwned>(&mut self, path: &str) -> Result<Option<T>, HarnessError> {
        self.atomic.insert(path.to_string());
        self.parse(path)
    }

    fn note(&mut self, path: &str, value: String) {
        self.defaults.push(DefaultApplied {
            path: path.to_string(),
            value,
        });
    }

    fn unknown_keys(&self) -> Vec<String> {
        let mut out = Vec::new();
        walk(&self.doc, "", &mut |path| {
            let known = self.used.contains(path)
                || self
                    .atomic
                    .iter()
                    .any(|a| path.starts_with(&format!("{a}.")) || a == path);
            if !known {
                out.push(path.to_string());
            }
        });
        out
    }
}

fn walk(t: &Table, prefix: &str, f: &mut impl FnMut(&str)) {
    for (k, v) in t {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(sub) if !sub.is_empty() => walk(sub, &path, f),
            _ => f(&path),
        }
    }
}

fn parse_party(path: &str, s: &str) -> Result<Party, HarnessError> {
    match s {
        "honest" => Ok(Party::Honest),
        "rational" => Ok(Party::Rational),
        "adversary" => Ok(Party::Adversary),
        _ => Err(invalid(
            path,
            format!("expected honest, rational or adversary, got `{s}`"),
        )),
    }
}

fn resolve(doc: Table, source: &str) -> Result<ScenarioSpec, HarnessError> {
    let mut r = Resolver {
        doc: doc.clone(),
        used: BTreeSet::new(),
        atomic: BTreeSet::new(),
        defaults: Vec::new(),
    };

    let name: String = r
        .parse("name")?
        .ok_or_else(|| invalid("name", "is required"))?;
    let description: Option<String> = r.parse("description")?;
    let repetitions: u64 = r.get("repetitions", 100)?;
    let seed_base: u64 = r.get("seed_base", 0)?;
    if repetitions == 0 {
        return Err(invalid("repetitions", "must be at least 1"));
    }

    // population
    let n: u32 = r.get("population.n", 100)?;
    let q: u32 = r.get("population.q", 1)?;
    let beta_rat: f64 = r.get("population.beta_rat", 0.0)?;
    let beta_adv: f64 = r.get("population.beta_adv", 0.0)?;
    let beta_hon: f64 = match r.parse("population.beta_hon")? {
        Some(b) => b,
        None => {
            let b = 1.0 - beta_rat - beta_adv;
            r.note(
                "population.beta_hon",
                format!("{b} (1 - beta_rat - beta_adv)"),
            );
            b
        }
    };
    let population = MinerPopulation {
        beta_hon,
        beta_rat,
        beta_adv,
        n,
        q,
    };

    let epoch = EpochParams {
        lambda: r.get("epoch.lambda", 2016)?,
        tau_min: r.get("epoch.tau_min", 0.25)?,
        tau_max: r.get("epoch.tau_max", 4.0)?,
        target_block_interval: r.get("epoch.target_block_interval", 10.0)?,
    };

    let r0: f64 = r.get("rewards.r0", 50.0)?;
    let capital_lambda = match r.parse::<u64>("rewards.capital_lambda")? {
        Some(c) => c,
        None => {
            r.note("rewards.capital_lambda", "none (a single phase)".into());
            u64::MAX
        }
    };
    let family = match r.atomic::<RewardFamily>("rewards.family")? {
        Some(f) => f,
        None => {
            r.note("rewards.family", "constant".into());
            RewardFamily::Constant
        }
    };
    let rewards = RewardSchedule {
        r0,
        capital_lambda,
        family,
    };

    let d = ExternalityConfig::default();
    let externality = ExternalityConfig {
        e_fairness: r.get("externality.e_fairness", d.e_fairness)?,
        e_security: r.get("externality.e_security", d.e_security)?,
        rho: r.get("externality.rho", d.rho)?,
        fairness_bribe_multiple: r.get(
            "externality.fairness_bribe_multiple",
            d.fairness_bribe_multiple,
        )?,
        fairness_window: r.opt("externality.fairness_window")?,
    };

    let initial_difficulty: f64 = r.get("mining.initial_difficulty", 1.0)?;
    let mining_cost_per_block: f64 = r.get("mining.cost_per_block", 0.0)?;
    let cost_per_query: f64 = r.get("mining.cost_per_query", 0.0)?;
    let base_rate = match r.parse::<f64>("mining.base_rate")? {
        Some(b) => b,
        None => {
            let b = SimConfig::calibrated_base_rate(&population, &epoch);
            r.note(
                "mining.base_rate",
                format!("{b} (one block per target interval)"),
            );
            b
        }
    };

    let max_rounds: u64 = r.get("run.max_rounds", 100_000)?;
    let stop_at_height: Option<u64> = r.opt("run.stop_at_height")?;
    let stop_on_outcome: bool = r.get("run.stop_on_outcome", true)?;
    let network: NetworkMode = r.get("run.network", NetworkMode::Immediate)?;
    let timestamp_rule: TimestampRule = r.get("run.timestamp_rule", TimestampRule::Unchecked)?;
    let smb_tie_split: bool = r.get("run.smb_tie_split", false)?;
    let participation_check: bool = r.get("run.participation_check", true)?;
    let export_chain: Option<PathBuf> = r.opt("run.export_chain")?;

    let dp = PragthosConfig::default();
    let pragthos = PragthosConfig {
        pc_mod: r.get("pragthos.pc_mod", dp.pc_mod)?,
        tau_clamp: r.get("pragthos.tau_clamp", dp.tau_clamp)?,
        tx_inclusion: r.get("pragthos.tx_inclusion", dp.tx_inclusion)?,
        mu: r.get("pragthos.mu", dp.mu)?,
        l: r.get("pragthos.l", dp.l)?,
        diversion: r.get("pragthos.diversion", dp.diversion)?,
    };

    // The stretch factor defaults to the attacker's optimum beta_adv / tau_min.
    if r.lookup("strategies.adversary.kind")
        .and_then(Value::as_str)
        == Some("difficulty-altering")
        && !r.present("strategies.adversary.alpha")
    {
        let tau_min = if pragthos.tau_clamp {
            epoch.tau_min.max(0.5)
        } else {
            epoch.tau_min
        };
        let alpha = beta_adv / tau_min;
        if let Some(Value::Table(t)) = r
            .doc
            .get_mut("strategies")
            .and_then(|s| s.get_mut("adversary"))
        {
            t.insert("alpha".into(), Value::Float(alpha));
        }
        r.note(
            "strategies.adversary.alpha",
            format!("{alpha} (beta_adv / tau_min)"),
        );
    }
    let strategy = |r: &mut Resolver, path: &str| -> Result<StrategyKind, HarnessError> {
        match r.atomic::<StrategyKind>(path)? {
            Some(k) => Ok(k),
            None => {
                r.note(path, "honest".into());
                Ok(StrategyKind::Honest)
            }
        }
    };
    let rational = strategy(&mut r, "strategies.rational")?;
    let adversary = strategy(&mut r, "strategies.adversary")?;
    let overlay: Option<StrategyKind> = r.atomic("strategies.overlay")?;
    if overlay.is_none() {
        r.note("strategies.overlay", "none".into());
    }

    let transactions = if r.present("transactions") {
        let recipient: String = r.get("transactions.recipient", "rational".to_string())?;
        Some(TxWorkload {
            count: r.get("transactions.count", 64)?,
            fee: r.get("transactions.fee", 1.0)?,
            recipient: parse_party("transactions.recipient", &recipient)?,
            resend_prob: r.get("transactions.resend_prob", 0.05)?,
        })
    } else {
        r.note("transactions", "none".into());
        None
    };

    let sweep = if r.present("sweep") {
        let path: String = r
            .parse("sweep.path")?
            .ok_or_else(|| invalid("sweep.path", "is required"))?;
        let values = if r.present("sweep.values") {
            r.atomic::<Vec<Value>>("sweep.values")?.unwrap_or_default()
        } else {
            let start: f64 = r
                .parse("sweep.start")?
                .ok_or_else(|| invalid("sweep", "needs values or start/stop/step"))?;
            let stop: f64 = r
                .parse("sweep.stop")?
                .ok_or_else(|| invalid("sweep.stop", "is required with start"))?;
            let step: f64 = r
                .parse("sweep.step")?
                .ok_or_else(|| invalid("sweep.step", "is required with start"))?;
            if !(step > 0.0) || stop < start {
                return Err(invalid("sweep.step", "need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
            // Round to the step's precision so 0.4 + 3 * 0.01 prints as 0.43.
            (0..count)
                .map(|i| Value::Float(((start + i as f64 * step) * 1e9).round() / 1e9))
                .collect()
        };
        if values.is_empty() {
            return Err(invalid("sweep.values", "must not be empty"));
        }
        Some(Sweep { path, values })
    } else {
        None
    };

    let expected = if r.present("expected") {
        Some(ExpectedBand {
            metric: r
                .parse("expected.metric")?
                .ok_or_else(|| invalid("expected.metric", "is required"))?,
            lower: r.get("expected.lower", f64::NEG_INFINITY)?,
            upper: r.get("expected.upper", f64::INFINITY)?,
        })
    } else {
        None
    };

    let experiment = match r.parse::<String>("experiment.kind")?.as_deref() {
        None | Some("standard") => Experiment::Standard,
        Some("tx-gap") => Experiment::TxGap {
            ls: r.get("experiment.ls", vec![4, 8, 12])?,
        },
        Some(other) => {
            return Err(invalid(
                "experiment.kind",
                format!("unknown experiment `{other}`"),
            ))
        }
    };

    let horizon = if r.present("horizon") {
        let p_fr: f64 = r
            .parse("horizon.p_fr")?
            .ok_or_else(|| invalid("horizon.p_fr", "is required"))?;
        let delta: f64 = r
            .parse("horizon.delta")?
            .ok_or_else(|| invalid("horizon.delta", "is required"))?;
        if !(0.0..1.0).contains(&p_fr) || !(delta > 0.0) {
            return Err(invalid("horizon", "need 0 <= p_fr < 1 and delta > 0"));
        }
        Some((p_fr, delta))
    } else {
        None
    };

    if let Some(k) = r.unknown_keys().into_iter().next() {
        return Err(invalid(&k, format!("unknown key in {source}")));
    }

    let config = SimConfig {
        population,
        epoch,
        initial_difficulty,
        rewards,
        externality,
        mining_cost_per_block,
        cost_per_query,
        base_rate,
        max_rounds,
        stop_at_height,
        stop_on_outcome,
        rng_seed: seed_base,
        network,
        timestamp_rule,
        smb_tie_split,
        participation_check,
        strategies: StrategyBindings {
            rational,
            adversary,
            overlay,
        },
        pragthos,
        transactions,
        export_chain,
    };
    config
        .validate()
        .map_err(|e| invalid("config", e.to_string()))?;
    if let Some(b) = &expected {
        if !super::METRICS.contains(&b.metric.as_str()) {
            return Err(invalid(
                "expected.metric",
                format!(
                    "unknown metric `{}`; known: {}",
                    b.metric,
                    super::METRICS.join(", ")
                ),
            ));
        }
    }

    Ok(ScenarioSpec {
        name,
        description,
        config,
        repetitions,
        seed_base,
        sweep,
        expected,
        experiment,
        horizon,
        defaults: r.defaults,
        document: doc,
    })
}
