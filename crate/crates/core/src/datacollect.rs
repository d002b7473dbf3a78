//! Random-action convergence data, clustering, and threshold fitting.
//!
//! Each step of a trial measures what every admissible level change would
//! have achieved from the same state, then moves on by a random one. The
//! resulting points are clustered by previous residual ratio within each
//! level, and the winning action per cluster is turned into the two
//! thresholds of the level controller.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Deserialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::csvfmt::{self, real};
use crate::problems::poisson_1d;
use crate::schemes::{level_scheme, MAX_LEVEL};
use crate::solver::{run_cycle, SolverState, StoppingNorm, Thresholds};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Increase,
    Keep,
    Decrease,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Increase, Action::Keep, Action::Decrease];

    pub fn name(self) -> &'static str {
        match self {
            Action::Increase => "increase",
            Action::Keep => "keep",
            Action::Decrease => "decrease",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Level reached from `level`, or `None` when off the ladder.
    pub fn apply(self, level: usize) -> Option<usize> {
        match self {
            Action::Increase if level < MAX_LEVEL => Some(level + 1),
            Action::Keep => Some(level),
            Action::Decrease if level > 0 => Some(level - 1),
            _ => None,
        }
    }
}

/// One candidate cycle measured during collection.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DataPoint {
    pub trial: usize,
    pub step: usize,
    pub action: Action,
    pub avg_rate: f64,
    /// Level before the action.
    pub level: usize,
    pub prev_ratio: f64,
    pub size: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub res_before: f64,
    pub res_after: f64,
}

/// How many points to gather for each problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// Stop once this many points exist per size (the last trial is cut).
    PointsPerSize(usize),
    TrialsPerSize(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectConfig {
    pub sizes: Vec<usize>,
    pub budget: Budget,
    pub target_tol: f64,
    pub seed: u64,
    /// Guard against trials that never reach the tolerance.
    pub max_steps: usize,
}

pub const DEFAULT_SIZES: [usize; 15] = [2, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 200, 300, 400];

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_SIZES.to_vec(),
            budget: Budget::PointsPerSize(20_000),
            target_tol: 1e-8,
            seed: 0,
            max_steps: 10_000,
        }
    }
}

fn size_seed(seed: u64, index: usize) -> u64 {
    let mut s = SplitMix64::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    s.random()
}

/// Runs trials on `poisson_1d(N)` for each size, in parallel over sizes.
///
/// Output is ordered by size, then trial and step, and depends only on the
/// configuration.
pub fn collect(cfg: &CollectConfig) -> Result<Vec<DataPoint>> {
    if cfg.sizes.is_empty() {
        return Err(Error::Invalid("collect needs at least one size".into()));
    }
    if !(cfg.target_tol > 0.0) {
        return Err(Error::Invalid(format!("target_tol {} must be positive", cfg.target_tol)));
    }
    let per_size: Vec<Vec<DataPoint>> = cfg
        .sizes
        .par_iter()
        .enumerate()
        .map(|(k, &n)| collect_size(n, cfg, size_seed(cfg.seed, k)))
        .collect::<Result<_>>()?;
    Ok(per_size.into_iter().flatten().collect())
}

fn collect_size(n: usize, cfg: &CollectConfig, seed: u64) -> Result<Vec<DataPoint>> {
    let problem = poisson_1d(n)?;
    let (a, b) = (&problem.matrix, &problem.rhs);
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut trial = 0;
    loop {
        match cfg.budget {
            Budget::PointsPerSize(p) if out.len() >= p => break,
            Budget::TrialsPerSize(t) if trial >= t => break,
            _ => {}
        }
        let mut state = SolverState::new(a, b, problem.x0.clone(), StoppingNorm::AbsoluteL2)?;
        run_cycle(a, b, &mut state, level_scheme(0)?)?;
        let mut step = 0;
        while state.residual >= cfg.target_tol && step < cfg.max_steps {
            let prev_ratio = state.prev_residual_ratio.unwrap_or(0.0);
            let mut outcomes = Vec::with_capacity(3);
            for action in Action::ALL {
                let Some(next) = action.apply(state.level) else {
                    continue;
                };
                let mut trial_state = state.clone();
                trial_state.level = next;
                let scheme = level_scheme(next)?;
                let stats = run_cycle(a, b, &mut trial_state, scheme)?;
                if let Some(ratio) = stats.ratio.filter(|r| *r > 0.0) {
                    out.push(DataPoint {
                        trial,
                        step,
                        action,
                        avg_rate: -ratio.ln() / scheme.m as f64,
                        level: state.level,
                        prev_ratio,
                        size: n,
                        m: scheme.m,
                        res_before: stats.residual_before,
                        res_after: stats.residual_after,
                    });
                }
                outcomes.push(trial_state);
            }
            if outcomes.is_empty() {
                break;
            }
            state = outcomes.swap_remove(rng.random_range(0..outcomes.len()));
            if state.residual == 0.0 {
                break;
            }
            step += 1;
        }
        trial += 1;
    }
    if let Budget::PointsPerSize(p) = cfg.budget {
        out.truncate(p);
    }
    Ok(out)
}

pub fn write_points<W: Write>(points: &[DataPoint], mut w: W) -> Result<()> {
    csvfmt::header(
        &mut w,
        &[
            "trial",
            "step",
            "action",
            "avg_rate",
            "level",
            "prev_ratio",
            "size",
            "M",
            "res_before",
            "res_after",
        ],
    )?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            p.trial,
            p.step,
            p.action.name(),
            real(p.avg_rate),
            p.level,
            real(p.prev_ratio),
            p.size,
            p.m,
            real(p.res_before),
            real(p.res_after)
        )?;
    }
    Ok(())
}

pub fn read_points<R: std::io::Read>(r: R) -> Result<Vec<DataPoint>> {
    let mut rdr = csvfmt::reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Mean, confidence half-width, and count of one action's rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionStats {
    pub mean: f64,
    pub half_width: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub level: usize,
    pub mean_ratio: f64,
    pub count: usize,
    /// Indexed increase, keep, decrease; `None` when the action is absent.
    pub per_action: [Option<ActionStats>; 3],
    /// `None` when the confidence intervals do not separate a winner.
    pub best_action: Option<Action>,
}

impl ClusterSummary {
    pub fn stats(&self, action: Action) -> Option<ActionStats> {
        self.per_action[action.index()]
    }
}

/// Two-sided normal critical value; exactly 1.96 at 95%.
pub fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Invalid(format!("confidence {confidence} outside (0, 1)")));
    }
    if confidence == 0.95 {
        return Ok(1.96);
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

fn action_stats(rates: &[f64], z: f64) -> Option<ActionStats> {
    let k = rates.len();
    if k == 0 {
        return None;
    }
    let mean = rates.iter().sum::<f64>() / k as f64;
    let half_width = if k < 2 {
        f64::INFINITY
    } else {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        z * var.sqrt() / (k as f64).sqrt()
    };
    Some(ActionStats {
        mean,
        half_width,
        count: k,
    })
}

/// The action whose interval lies strictly above every other present
/// action's interval, if any. Needs at least two actions.
fn best_action(per_action: &[Option<ActionStats>; 3]) -> Option<Action> {
    let present: Vec<(Action, ActionStats)> = Action::ALL
        .iter()
        .filter_map(|&a| per_action[a.index()].map(|s| (a, s)))
        .collect();
    if present.len() < 2 {
        return None;
    }
    let &(top, s) = present
        .iter()
        .max_by(|x, y| x.1.mean.total_cmp(&y.1.mean))?;
    let low = s.mean - s.half_width;
    present
        .iter()
        .filter(|(a, _)| *a != top)
        .all(|(_, o)| low > o.mean + o.half_width)
        .then_some(top)
}

/// Groups by level, sorts by previous ratio, and summarises consecutive
/// chunks of `n_set` points. A trailing chunk is kept when it holds at least
/// a tenth of `n_set`.
pub fn aggregate(points: &[DataPoint], n_set: usize, confidence: f64) -> Result<Vec<ClusterSummary>> {
    if points.is_empty() {
        return Err(Error::NoData);
    }
    if n_set == 0 {
        return Err(Error::Invalid("n_set must be positive".into()));
    }
    let z = z_value(confidence)?;
    let mut by_level: BTreeMap<usize, Vec<&DataPoint>> = BTreeMap::new();
    for p in points {
        by_level.entry(p.level).or_default().push(p);
    }
    let mut out = Vec::new();
    for (level, mut group) in by_level {
        // A total order makes the chunking independent of input order.
        group.sort_by(|a, b| {
            a.prev_ratio
                .total_cmp(&b.prev_ratio)
                .then(a.size.cmp(&b.size))
                .then(a.trial.cmp(&b.trial))
                .then(a.step.cmp(&b.step))
                .then(a.action.cmp(&b.action))
                .then(a.avg_rate.total_cmp(&b.avg_rate))
        });
        for chunk in group.chunks(n_set) {
            if chunk.len() < n_set && chunk.len() * 10 < n_set {
                continue;
            }
            let mut rates: [Vec<f64>; 3] = Default::default();
            for p in chunk {
                rates[p.action.index()].push(p.avg_rate);
            }
            let per_action = [
                action_stats(&rates[0], z),
                action_stats(&rates[1], z),
                action_stats(&rates[2], z),
            ];
            out.push(ClusterSummary {
                level,
                mean_ratio: chunk.iter().map(|p| p.prev_ratio).sum::<f64>() / chunk.len() as f64,
                count: chunk.len(),
                best_action: best_action(&per_action),
                per_action,
            });
        }
    }
    Ok(out)
}

pub fn write_clusters<W: Write>(clusters: &[ClusterSummary], mut w: W) -> Result<()> {
    let mut cols = vec!["level", "mean_ratio", "count", "best_action"];
    let names = [
        ["increase_mean", "increase_hw", "increase_n"],
        ["keep_mean", "keep_hw", "keep_n"],
        ["decrease_mean", "decrease_hw", "decrease_n"],
    ];
    for n in &names {
        cols.extend_from_slice(n);
    }
    csvfmt::header(&mut w, &cols)?;
    for c in clusters {
        write!(
            w,
            "{},{},{},{}",
            c.level,
            real(c.mean_ratio),
            c.count,
            c.best_action.map_or("inconclusive", Action::name)
        )?;
        for s in &c.per_action {
            match s {
                Some(s) => write!(w, ",{},{},{}", real(s.mean), real(s.half_width), s.count)?,
                None => write!(w, ",,,0")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

fn labelled(clusters: &[ClusterSummary]) -> Result<Vec<(f64, Action)>> {
    let mut v: Vec<(f64, Action)> = clusters
        .iter()
        .filter_map(|c| c.best_action.map(|a| (c.mean_ratio, a)))
        .collect();
    let missing: Vec<&str> = Action::ALL
        .iter()
        .filter(|a| !v.iter().any(|(_, b)| b == *a))
        .map(|a| a.name())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAction(missing.join(", ")));
    }
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(v)
}

/// Midpoint thresholds for perfectly ordered bands.
///
/// Conclusive clusters must satisfy keep < decrease < increase in mean
/// ratio. Then `t_hi` sits midway between the largest decrease and smallest
/// increase ratio and `t_lo` midway between the largest keep and smallest
/// decrease ratio. Any overlap is reported with the offending clusters.
pub fn fit_thresholds(clusters: &[ClusterSummary]) -> Result<Thresholds> {
    let v = labelled(clusters)?;
    let band = |a: Action| v.iter().filter(move |(_, b)| *b == a).map(|(r, _)| *r);
    let max = |a: Action| band(a).fold(f64::NEG_INFINITY, f64::max);
    let min = |a: Action| band(a).fold(f64::INFINITY, f64::min);
    let (keep_hi, dec_lo, dec_hi, inc_lo) = (
        max(Action::Keep),
        min(Action::Decrease),
        max(Action::Decrease),
        min(Action::Increase),
    );
    if keep_hi < dec_lo && dec_hi < inc_lo {
        return Ok(Thresholds {
            hi: (dec_hi + inc_lo) / 2.0,
            lo: (keep_hi + dec_lo) / 2.0,
        });
    }
    let violators: Vec<String> = v
        .iter()
        .filter(|(r, a)| match a {
            Action::Keep => *r >= dec_lo,
            Action::Decrease => *r <= keep_hi || *r >= inc_lo,
            Action::Increase => *r <= dec_hi,
        })
        .map(|(r, a)| format!("{}@{:.4}", a.name(), r))
        .collect();
    Err(Error::NotSeparable(violators.join(" ")))
}

/// Thresholds minimising misclassified conclusive clusters.
///
/// Clusters are sorted by mean ratio and split into keep, decrease, and
/// increase bands, each nonempty, so that the fewest clusters fall outside
/// their label's band. Ties go to the split with the widest combined gaps.
/// Thresholds are the midpoints at the two cuts, so on ordered data this
/// agrees with [`fit_thresholds`].
pub fn fit_thresholds_robust(clusters: &[ClusterSummary]) -> Result<Thresholds> {
    let v = labelled(clusters)?;
    let k = v.len();
    // prefix[a][i]: clusters labelled a among the first i.
    let mut prefix = vec![[0usize; 3]; k + 1];
    for (i, (_, a)) in v.iter().enumerate() {
        prefix[i + 1] = prefix[i];
        prefix[i + 1][a.index()] += 1;
    }
    let count = |a: Action, from: usize, to: usize| prefix[to][a.index()] - prefix[from][a.index()];
    let gap = |i: usize| v[i].0 - v[i - 1].0;
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for i in 1..k {
        for j in i + 1..k {
            let correct = count(Action::Keep, 0, i) + count(Action::Decrease, i, j) + count(Action::Increase, j, k);
            let errors = k - correct;
            let margin = gap(i) + gap(j);
            let better = match best {
                None => true,
                Some((e, m, _, _)) => errors < e || (errors == e && margin > m),
            };
            if better {
                best = Some((errors, margin, i, j));
            }
        }
    }
    let (_, _, i, j) = best.ok_or_else(|| Error::NotSeparable("fewer than three conclusive clusters".into()))?;
    Ok(Thresholds {
        hi: (v[j - 1].0 + v[j].0) / 2.0,
        lo: (v[i - 1].0 + v[i].0) / 2.0,
    })
}

pub fn write_thresholds<W: Write>(t: &Thresholds, mut w: W) -> Result<()> {
    writeln!(w, "t_hi={}", real(t.hi))?;
    writeln!(w, "t_lo={}", real(t.lo))?;
    Ok(())
}

pub fn read_thresholds<R: BufRead>(r: R) -> Result<Thresholds> {
    let (mut hi, mut lo) = (None, None);
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected key=value, got `{line}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Invalid(format!("bad threshold `{value}`: {e}")))?;
        match key.trim() {
            "t_hi" => hi = Some(value),
            "t_lo" => lo = Some(value),
            other => return Err(Error::Invalid(format!("unknown key `{other}`"))),
        }
    }
    match (hi, lo) {
        (Some(hi), Some(lo)) if lo <= hi => Ok(Thresholds { hi, lo }),
        (Some(hi), Some(lo)) => Err(Error::Invalid(format!("t_lo {lo} exceeds t_hi {hi}"))),
        _ => Err(Error::Invalid("thresholds need both t_hi and t_lo".into())),
    }
}
