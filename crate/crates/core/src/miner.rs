//! The discovery loop.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::candidates::{generate_candidates, CandidateConfig, CandidateNet, Pattern, PatternSet};
use crate::log::{ActivityLabel, EventLog, LogError};
use crate::net::{
    PathMode, Provenance, Soundness, WorkflowNet, DEFAULT_PATH_BUDGET, DEFAULT_STATE_BUDGET,
};
use crate::ordering::{make_order, OrderingStrategy};
use crate::quality::{evaluate, evaluate_exact, QualityScore, DEFAULT_LOOKAHEAD};
use crate::rational::{format_rational, to_f64, Rational};
use crate::reduction::{reduce, search_space_ratio, NodeSet};
use crate::rules::RuleApplication;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub strategy: OrderingStrategy,
    /// Causal-strength threshold for predecessors and successors.
    pub threshold: Rational,
    /// Share of traces the kept variants must cover.
    pub coverage: Rational,
    pub max_subset_size: usize,
    pub patterns: PatternSet,
    pub path_budget: usize,
    pub lookahead: usize,
    pub soundness_budget: usize,
    /// Scoring threads; 1 scores sequentially.
    pub jobs: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            strategy: OrderingStrategy::FREQUENCY,
            threshold: Rational::new(9, 10),
            coverage: Rational::new(95, 100),
            max_subset_size: 3,
            patterns: PatternSet::all(),
            path_budget: DEFAULT_PATH_BUDGET,
            lookahead: DEFAULT_LOOKAHEAD,
            soundness_budget: DEFAULT_STATE_BUDGET,
            jobs: 1,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let bad = |m: &str| Err(DiscoveryError::Config(m.to_owned()));
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        if self.threshold < zero || self.threshold > one {
            return bad("threshold must lie in [0, 1]");
        }
        if self.coverage <= zero || self.coverage > one {
            return bad("coverage must lie in (0, 1]");
        }
        if self.max_subset_size == 0 {
            return bad("max subset size must be at least 1");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("the log is empty after variant filtering")]
    EmptyLog,
    #[error("iteration {iteration}: no candidate net for activity `{activity}`")]
    NoCandidates {
        iteration: usize,
        activity: ActivityLabel,
    },
    #[error("iteration {iteration}: {message}")]
    Invariant { iteration: usize, message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub i: usize,
    pub activity: ActivityLabel,
    pub v_size: usize,
    /// Node count of the net the activity was inserted into.
    pub net_nodes: usize,
    /// Exact search-space ratio, as `n/d`.
    pub ratio: String,
    pub ratio_value: f64,
    pub provenance: Provenance,
    pub candidates: usize,
    pub pattern: Pattern,
    pub applications: Vec<RuleApplication>,
    pub fitness: f64,
    pub precision: f64,
    pub f1: f64,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscoveryReport {
    pub schema: u32,
    pub strategy: OrderingStrategy,
    pub threshold: String,
    pub coverage: String,
    pub traces: u64,
    pub variants: usize,
    pub kept_traces: u64,
    pub kept_variants: usize,
    pub order: Vec<ActivityLabel>,
    pub disconnected_order: bool,
    pub iterations: Vec<IterationRecord>,
    /// Scores of the final net on the filtered log.
    pub final_score: Option<QualityScore>,
    pub total_millis: f64,
}

impl DiscoveryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Copy with every wall-clock field set to zero.
    pub fn without_durations(&self) -> DiscoveryReport {
        let mut r = self.clone();
        r.total_millis = 0.0;
        for it in &mut r.iterations {
            it.millis = 0.0;
        }
        r
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "i",
            "activity",
            "v_size",
            "ratio",
            "provenance",
            "candidates",
            "fitness",
            "precision",
            "f1",
            "millis",
        ])
        .expect("in-memory write");
        for it in &self.iterations {
            w.write_record([
                it.i.to_string(),
                it.activity.to_string(),
                it.v_size.to_string(),
                it.ratio.clone(),
                it.provenance.as_str().to_owned(),
                it.candidates.to_string(),
                format!("{:.6}", it.fitness),
                format!("{:.6}", it.precision),
                format!("{:.6}", it.f1),
                format!("{:.3}", it.millis),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

struct Scored {
    index: usize,
    fitness: BigRational,
    precision: BigRational,
    f1: BigRational,
}

fn compare(a: &Scored, b: &Scored, cands: &[CandidateNet]) -> Ordering {
    // better sorts first
    b.f1.cmp(&a.f1)
        .then_with(|| b.fitness.cmp(&a.fitness))
        .then_with(|| {
            cands[a.index]
                .net
                .net
                .len()
                .cmp(&cands[b.index].net.net.len())
        })
        .then_with(|| cands[a.index].key.cmp(&cands[b.index].key))
}

fn score_all(cands: &[CandidateNet], log: &EventLog, lookahead: usize, jobs: usize) -> Vec<Scored> {
    let score = |(index, c): (usize, &CandidateNet)| {
        let (fitness, precision, f1) = evaluate_exact(&c.net, log, lookahead);
        Scored {
            index,
            fitness,
            precision,
            f1,
        }
    };
    if jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => return pool.install(|| cands.par_iter().enumerate().map(score).collect()),
            Err(e) => {
                log::warn!("could not start {jobs} scoring threads ({e}); scoring sequentially")
            }
        }
    }
    cands.iter().enumerate().map(score).collect()
}

/// The best candidate on `log`: highest F1, then fitness, then fewest nodes,
/// then smallest canonical form. `None` for an empty input.
pub fn select_best(
    candidates: &[CandidateNet],
    log: &EventLog,
    lookahead: usize,
) -> Option<(usize, QualityScore)> {
    let scored = score_all(candidates, log, lookahead, 1);
    pick(&scored, candidates)
}

fn pick(scored: &[Scored], cands: &[CandidateNet]) -> Option<(usize, QualityScore)> {
    let best = scored.iter().min_by(|a, b| compare(a, b, cands))?;
    let f = |x: &BigRational| x.to_f64().unwrap_or(0.0);
    Some((
        best.index,
        QualityScore {
            fitness: f(&best.fitness),
            precision: f(&best.precision),
            f1: f(&best.f1),
        },
    ))
}

fn check_invariant(
    wf: &WorkflowNet,
    placed: &[ActivityLabel],
    iteration: usize,
    budget: usize,
) -> Result<(), DiscoveryError> {
    let fail = |message: String| Err(DiscoveryError::Invariant { iteration, message });
    if let Err(e) = wf.validate() {
        return fail(e.to_string());
    }
    if !wf.is_free_choice() {
        return fail("the net is not free-choice".into());
    }
    let mut labels: Vec<&ActivityLabel> = wf.visible_labels();
    labels.sort();
    let mut expected: Vec<&ActivityLabel> = placed.iter().collect();
    expected.sort();
    if labels != expected {
        return fail(format!(
            "visible labels {labels:?} differ from placed activities {expected:?}"
        ));
    }
    match wf.soundness(budget) {
        Soundness::Sound => Ok(()),
        Soundness::Indeterminate { explored } => {
            log::warn!("iteration {iteration}: soundness undecided after {explored} markings");
            Ok(())
        }
        Soundness::Unsound(why) => fail(format!("the net is unsound: {why}")),
    }
}

/// Discovers a workflow net from `log`, one activity per iteration.
pub fn discover(
    log: &EventLog,
    config: &DiscoveryConfig,
) -> Result<(WorkflowNet, DiscoveryReport), DiscoveryError> {
    config.validate()?;
    let started = Instant::now();
    let filtered = log.filter_variants(config.coverage)?;
    if filtered.is_empty() || filtered.activities().is_empty() {
        return Err(DiscoveryError::EmptyLog);
    }
    let order = make_order(&filtered, config.strategy);
    log::info!("activity order: {}", order.as_strs().join(", "));
    let cand_config = CandidateConfig {
        max_subset_size: config.max_subset_size,
        patterns: config.patterns.clone(),
        soundness_budget: config.soundness_budget,
    };
    let mode = PathMode::Exact {
        budget: config.path_budget,
    };

    let mut wf = WorkflowNet::initial();
    let mut placed: Vec<ActivityLabel> = Vec::new();
    let mut iterations = Vec::with_capacity(order.len());
    for (k, a) in order.activities.iter().enumerate() {
        let i = k + 1;
        let t0 = Instant::now();
        placed.push(a.clone());
        let keep: BTreeSet<ActivityLabel> = placed.iter().cloned().collect();
        let log_i = filtered.project(&keep);

        let mut v = reduce(a, &log_i, &wf, config.threshold, mode);
        let mut cands = generate_candidates(&wf, &v, a, &cand_config);
        if cands.is_empty() && v.provenance != Provenance::Fallback {
            log::warn!(
                "iteration {i}: no candidates inside the reduced space; retrying on the whole net"
            );
            v = NodeSet::everything(&wf);
            cands = generate_candidates(&wf, &v, a, &cand_config);
        }
        let ratio = search_space_ratio(&v, &wf).map_err(|e| DiscoveryError::Invariant {
            iteration: i,
            message: e.to_string(),
        })?;
        let scored = score_all(&cands, &log_i, config.lookahead, config.jobs);
        let Some((best, score)) = pick(&scored, &cands) else {
            return Err(DiscoveryError::NoCandidates {
                iteration: i,
                activity: a.clone(),
            });
        };
        let net_nodes = wf.net.len();
        let count = cands.len();
        let chosen = cands.swap_remove(best);
        wf = chosen.net;
        check_invariant(&wf, &placed, i, config.soundness_budget)?;
        log::info!(
            "iteration {i}: added {a} by {} among {count} candidates, |V| = {}, f1 = {:.4}",
            chosen.pattern,
            v.len(),
            score.f1
        );
        iterations.push(IterationRecord {
            i,
            activity: a.clone(),
            v_size: v.len(),
            net_nodes,
            ratio: format_rational(&ratio),
            ratio_value: to_f64(&ratio),
            provenance: v.provenance,
            candidates: count,
            pattern: chosen.pattern,
            applications: chosen.applications,
            fitness: score.fitness,
            precision: score.precision,
            f1: score.f1,
            millis: t0.elapsed().as_secs_f64() * 1000.0,
        });
    }

    let final_score = Some(evaluate(&wf, &filtered, config.lookahead));
    let report = DiscoveryReport {
        schema: REPORT_SCHEMA,
        strategy: config.strategy,
        threshold: format_rational(&config.threshold),
        coverage: format_rational(&config.coverage),
        traces: log.num_traces(),
        variants: log.num_variants(),
        kept_traces: filtered.num_traces(),
        kept_variants: filtered.num_variants(),
        order: order.activities,
        disconnected_order: order.disconnected,
        iterations,
        final_score,
        total_millis: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok((wf, report))
}
