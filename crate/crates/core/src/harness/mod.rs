//! Experiment orchestration: train/validate/test protocols, hyperparameter
//! grids with best-config selection, reference oracles and bound checks.

mod bounds;
mod oracle;

pub use bounds::{
    brute_weight_mass, chernoff_rows, ladder_rows, model_config, poisson_tail, verify_bounds, BoundCheck,
    BoundReport, ChernoffRow, LadderRow,
};
pub use oracle::{
    closed_form_sum_omega_sq, oracle_matches, oracle_sum_omega_sq, sort_matches, ORACLE_MAX_HISTORY,
    ORACLE_MAX_NODES,
};

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner_apst::{ApstConfig, ApstState, InsertPolicy, Mode, RoundRecord, SuffixWeights};
use crate::learner_pst::{pst_predict, PstLearner};
use crate::multiclass::MulticlassState;
use crate::sequences::{sign_of, Alphabet, Dataset, Segment};
use crate::weighting::WeightParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Pst,
    Apst,
    ApstMc,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Pst => "pst",
            ModelKind::Apst => "apst",
            ModelKind::ApstMc => "apst-mc",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pst" => Ok(ModelKind::Pst),
            "apst" => Ok(ModelKind::Apst),
            "apst-mc" => Ok(ModelKind::ApstMc),
            other => Err(Error::Domain(format!("unknown model {other:?}"))),
        }
    }
}

/// A learner to be trained: the classical PST, a binary aPST, or the
/// one-tree-per-class multiclass aPST.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    Pst,
    Apst { config: ApstConfig },
    ApstMc { config: ApstConfig, tau_gamma_factor: f64 },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Pst => ModelKind::Pst,
            ModelSpec::Apst { .. } => ModelKind::Apst,
            ModelSpec::ApstMc { .. } => ModelKind::ApstMc,
        }
    }

    pub fn config(&self) -> Option<&ApstConfig> {
        match self {
            ModelSpec::Pst => None,
            ModelSpec::Apst { config } | ModelSpec::ApstMc { config, .. } => Some(config),
        }
    }
}

/// A live learner. Serializes to the hypothesis files read back by
/// `verify-bounds` and `inspect-tree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "state", rename_all = "kebab-case")]
pub enum Model {
    Pst(PstLearner),
    Apst(ApstState),
    ApstMc(MulticlassState),
}

impl Model {
    pub fn new(spec: &ModelSpec, alphabet: Alphabet, input_dim: usize) -> Result<Self> {
        match *spec {
            ModelSpec::Pst => {
                require_binary(alphabet, "pst")?;
                Ok(Model::Pst(PstLearner::new(alphabet, input_dim)))
            }
            ModelSpec::Apst { config } => {
                require_binary(alphabet, "apst")?;
                Ok(Model::Apst(ApstState::new(config, alphabet, input_dim)?))
            }
            ModelSpec::ApstMc {
                config,
                tau_gamma_factor,
            } => Ok(Model::ApstMc(
                MulticlassState::new(config, alphabet, input_dim)?.with_tau_gamma_factor(tau_gamma_factor)?,
            )),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Pst(_) => ModelKind::Pst,
            Model::Apst(_) => ModelKind::Apst,
            Model::ApstMc(_) => ModelKind::ApstMc,
        }
    }

    /// Plays round `t` of `ds`. With `learn = false` the model only predicts
    /// and the record carries the loss it would have suffered.
    pub fn play(&mut self, ds: &Dataset, t: usize, learn: bool) -> Result<RoundRecord> {
        let (x, history, y) = (ds.x(t), ds.history(t), ds.output[t - 1]);
        match self {
            Model::Pst(m) if learn => m.step(x, history, y),
            Model::Apst(m) if learn => m.step(x, history, y),
            Model::ApstMc(m) if learn => m.step(x, history, y),
            Model::Pst(m) => {
                let (h, _) = pst_predict(&m.hyp, x, history)?;
                Ok(frozen_binary(t, h, sign_of(y)))
            }
            Model::Apst(m) => {
                let p = m.predict(x, history)?;
                let mut rec = frozen_binary(t, p.h, sign_of(y));
                rec.matches_count = p.matches.len();
                rec.sum_omega_sq = p.sum_omega_sq;
                rec.d_after = m.reported_depth();
                rec.p_after = m.p_acc;
                rec.l_after = m.l_acc;
                Ok(rec)
            }
            Model::ApstMc(m) => {
                let p = m.predict(x, history)?;
                let hy = p.scores[y as usize];
                let loss = p
                    .scores
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != y as usize)
                    .map(|(_, &hk)| hk + 1.0 - hy)
                    .fold(0.0, f64::max);
                Ok(RoundRecord {
                    t,
                    h: p.scores[p.y_hat as usize],
                    y_hat: p.y_hat as i64,
                    y: y as i64,
                    loss: if p.y_hat == y { 0.0 } else { loss },
                    tau: 0.0,
                    updated: false,
                    d_after: m.max_depth(),
                    p_after: 0.0,
                    l_after: 0.0,
                    matches_count: p.matches_count,
                    sum_omega_sq: p.masses.iter().copied().fold(0.0, f64::max),
                    scores: Some(p.scores),
                })
            }
        }
    }

    /// Final depth `d_T` as reported in result tables.
    pub fn depth(&self) -> usize {
        match self {
            Model::Pst(m) => m.hyp.tree.max_depth(),
            Model::Apst(m) => m.reported_depth(),
            Model::ApstMc(m) => m.max_depth(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Model::Pst(m) => m.hyp.tree.node_count(),
            Model::Apst(m) => m.hyp.tree.node_count(),
            Model::ApstMc(m) => m.node_count(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::from_json_deep(text)
    }
}

fn require_binary(alphabet: Alphabet, model: &str) -> Result<()> {
    if alphabet.is_binary() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "model {model} needs a binary alphabet, got K = {}",
            alphabet.size()
        )))
    }
}

fn frozen_binary(t: usize, h: f64, y_sign: f64) -> RoundRecord {
    RoundRecord {
        t,
        h,
        y_hat: if h >= 0.0 { 1 } else { -1 },
        y: y_sign as i64,
        loss: (1.0 - y_sign * h).max(0.0),
        tau: 0.0,
        updated: false,
        d_after: 0,
        p_after: 0.0,
        l_after: 0.0,
        matches_count: 0,
        sum_omega_sq: 0.0,
        scores: None,
    }
}

/// The geometric-weight configuration that makes the aPST bound machinery
/// apply to the classical PST (`epsilon = 0`, `gamma = 1`).
pub fn pst_equivalent_config() -> ApstConfig {
    let params = WeightParams::new(1.0, 0.5, 0).expect("valid constants");
    ApstConfig::unbounded(params).with_weights(SuffixWeights::Geometric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// 40% train, 20% validation, 40% test.
    #[serde(rename = "synthetic-402040")]
    Synthetic402040,
    /// 30% train, 70% test.
    #[serde(rename = "real-3070")]
    Real3070,
}

impl Protocol {
    pub fn fractions(self) -> &'static [f64] {
        match self {
            Protocol::Synthetic402040 => &[0.4, 0.2, 0.4],
            Protocol::Real3070 => &[0.3, 0.7],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Synthetic402040 => "synthetic-402040",
            Protocol::Real3070 => "real-3070",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProtocolOptions {
    /// Stop updating after the training segment.
    pub freeze_after_train: bool,
}

/// One result row: a model configuration evaluated on one seed's stream.
/// Accuracies count only uncorrupted positions when a mask is present and
/// are `NaN` when a segment has no countable position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: u64,
    pub model: ModelKind,
    pub mode: Option<Mode>,
    pub lambda: Option<f64>,
    pub xi: Option<f64>,
    pub epsilon: Option<usize>,
    pub protocol: Protocol,
    pub train_fraction: f64,
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub test_acc: f64,
    pub final_depth: usize,
    pub node_count: usize,
    pub updates: usize,
    pub runtime_ms: f64,
}

impl ReportRow {
    /// Score used for model selection: validation accuracy, or training
    /// accuracy when the protocol has no validation segment.
    pub fn selection_score(&self) -> f64 {
        self.val_acc.unwrap_or(self.train_acc)
    }

    fn params_key(&self) -> (f64, f64, usize) {
        (
            self.lambda.unwrap_or(0.0),
            self.xi.unwrap_or(0.0),
            self.epsilon.unwrap_or(0),
        )
    }
}

/// Full result of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub row: ReportRow,
    pub trace: Vec<RoundRecord>,
    pub model: Model,
}

fn accuracy(ds: &Dataset, trace: &[RoundRecord], seg: Segment) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for t in seg.rounds() {
        if ds.is_clean(t) {
            total += 1;
            let rec = &trace[t - 1];
            hits += usize::from(rec.y_hat == rec.y);
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

/// Runs one model online over the whole stream and scores each segment on
/// its own rounds. Later segments keep the full preceding history.
pub fn run_protocol_full(
    ds: &Dataset,
    spec: &ModelSpec,
    protocol: Protocol,
    opts: ProtocolOptions,
    seed: u64,
) -> Result<ProtocolRun> {
    let segments = ds.split(protocol.fractions())?;
    let train = segments[0];
    let start = Instant::now();
    let mut model = Model::new(spec, ds.alphabet, ds.input.dim())?;
    let mut trace = Vec::with_capacity(ds.len());
    for t in 1..=ds.len() {
        let learn = !opts.freeze_after_train || t <= train.end;
        trace.push(model.play(ds, t, learn)?);
    }
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let (val, test) = match protocol {
        Protocol::Synthetic402040 => (Some(segments[1]), segments[2]),
        Protocol::Real3070 => (None, segments[1]),
    };
    let config = spec.config();
    let row = ReportRow {
        seed,
        model: spec.kind(),
        mode: config.map(|c| c.mode),
        lambda: config.map(|c| c.params.lambda),
        xi: config.map(|c| c.params.xi),
        epsilon: config.map(|c| c.params.epsilon),
        protocol,
        train_fraction: protocol.fractions()[0],
        train_len: train.len(),
        val_len: val.map_or(0, |s| s.len()),
        test_len: test.len(),
        train_acc: accuracy(ds, &trace, train),
        val_acc: val.map(|s| accuracy(ds, &trace, s)),
        test_acc: accuracy(ds, &trace, test),
        final_depth: model.depth(),
        node_count: model.node_count(),
        updates: trace.iter().filter(|r| r.updated).count(),
        runtime_ms,
    };
    Ok(ProtocolRun { row, trace, model })
}

pub fn run_protocol(
    ds: &Dataset,
    spec: &ModelSpec,
    protocol: Protocol,
    opts: ProtocolOptions,
    seed: u64,
) -> Result<ReportRow> {
    Ok(run_protocol_full(ds, spec, protocol, opts, seed)?.row)
}

/// Hyperparameter grid. Every model in `models` except `pst` is crossed
/// with `lambdas x xis x epsilons`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub xis: Vec<f64>,
    pub epsilons: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub mode: Mode,
    pub insert_policy: InsertPolicy,
    pub tau_gamma_factor: f64,
}

impl GridSpec {
    pub fn binary_default() -> Self {
        Self {
            lambdas: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            xis: vec![0.5, 0.7, 0.9, 0.99],
            epsilons: vec![0, 1],
            models: vec![ModelKind::Apst],
            mode: Mode::SelfBounded,
            insert_policy: InsertPolicy::ExactOnly,
            tau_gamma_factor: 2.0,
        }
    }

    pub fn multiclass_default() -> Self {
        Self {
            epsilons: vec![0, 1, 2],
            models: vec![ModelKind::ApstMc],
            ..Self::binary_default()
        }
    }

    pub fn default_for(alphabet: Alphabet) -> Self {
        if alphabet.is_binary() {
            Self::binary_default()
        } else {
            Self::multiclass_default()
        }
    }

    /// Model specs in deterministic order: models as listed, then lambda,
    /// xi and epsilon in list order.
    pub fn specs(&self) -> Result<Vec<ModelSpec>> {
        let mut out = Vec::new();
        for &kind in &self.models {
            if kind == ModelKind::Pst {
                out.push(ModelSpec::Pst);
                continue;
            }
            for &lambda in &self.lambdas {
                for &xi in &self.xis {
                    for &eps in &self.epsilons {
                        let config = ApstConfig::new(WeightParams::new(lambda, xi, eps)?, self.mode)
                            .with_insert_policy(self.insert_policy);
                        config.validate()?;
                        out.push(match kind {
                            ModelKind::Apst => ModelSpec::Apst { config },
                            _ => ModelSpec::ApstMc {
                                config,
                                tau_gamma_factor: self.tau_gamma_factor,
                            },
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Domain("empty grid".into()));
        }
        Ok(out)
    }
}

/// Runs every grid point on every `(seed, dataset)` pair. Rows come back in
/// dataset order, then grid order, regardless of `jobs`.
pub fn grid_search(
    datasets: &[(u64, Dataset)],
    grid: &GridSpec,
    protocol: Protocol,
    opts: ProtocolOptions,
    jobs: usize,
) -> Result<Vec<ReportRow>> {
    let specs = grid.specs()?;
    let tasks: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..specs.len()).map(move |s| (d, s)))
        .collect();
    let run = |&(d, s): &(usize, usize)| {
        let (seed, ds) = &datasets[d];
        run_protocol(ds, &specs[s], protocol, opts, *seed)
    };
    if jobs <= 1 {
        return tasks.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| tasks.par_iter().map(run).collect())
}

/// Best row per seed among `rows`: highest selection score, then smaller
/// final depth, then lexicographically smaller `(lambda, xi, epsilon)`.
pub fn select_best(rows: &[ReportRow]) -> Vec<&ReportRow> {
    let mut best: BTreeMap<u64, &ReportRow> = BTreeMap::new();
    for row in rows {
        let better = match best.get(&row.seed) {
            None => true,
            Some(cur) => {
                let (a, b) = (row.selection_score(), cur.selection_score());
                let a = if a.is_nan() { f64::NEG_INFINITY } else { a };
                let b = if b.is_nan() { f64::NEG_INFINITY } else { b };
                a > b
                    || (a == b && row.final_depth < cur.final_depth)
                    || (a == b
                        && row.final_depth == cur.final_depth
                        && row.params_key().partial_cmp(&cur.params_key()) == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            best.insert(row.seed, row);
        }
    }
    best.into_values().collect()
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for `n < 2`).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPick {
    pub seed: u64,
    pub lambda: Option<f64>,
    pub xi: Option<f64>,
    pub epsilon: Option<usize>,
    pub selection_acc: f64,
    pub test_acc: f64,
    pub final_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub seeds: usize,
    pub mean_test_acc: f64,
    pub sd_test_acc: f64,
    pub mean_final_depth: f64,
    pub picks: Vec<BestPick>,
    /// How often each lambda was selected, keyed by its decimal form.
    pub best_lambda_histogram: BTreeMap<String, usize>,
}

/// Per-model best-config aggregation over seeds.
pub fn summarize(rows: &[ReportRow]) -> Vec<ModelSummary> {
    let mut kinds: Vec<ModelKind> = rows.iter().map(|r| r.model).collect();
    kinds.sort();
    kinds.dedup();
    kinds
        .into_iter()
        .map(|kind| {
            let subset: Vec<ReportRow> = rows.iter().filter(|r| r.model == kind).cloned().collect();
            let picks = select_best(&subset);
            let accs: Vec<f64> = picks.iter().map(|r| r.test_acc).collect();
            let (mean, sd) = mean_sd(&accs);
            let depths: Vec<f64> = picks.iter().map(|r| r.final_depth as f64).collect();
            let mut hist = BTreeMap::new();
            for r in &picks {
                if let Some(l) = r.lambda {
                    *hist.entry(format!("{l}")).or_insert(0) += 1;
                }
            }
            ModelSummary {
                model: kind,
                seeds: picks.len(),
                mean_test_acc: mean,
                sd_test_acc: sd,
                mean_final_depth: mean_sd(&depths).0,
                picks: picks
                    .iter()
                    .map(|r| BestPick {
                        seed: r.seed,
                        lambda: r.lambda,
                        xi: r.xi,
                        epsilon: r.epsilon,
                        selection_acc: r.selection_score(),
                        test_acc: r.test_acc,
                        final_depth: r.final_depth,
                    })
                    .collect(),
                best_lambda_histogram: hist,
            }
        })
        .collect()
}

/// CSV with one row per (config, seed) in a fixed column order.
pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Domain(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(format!("csv: {e}")))
}
