//! Benchmark harness: run a set of algorithms over a set of situations and
//! aggregate per-algorithm percentage metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjunction::ScreeningConfig;
use crate::optimize::{solve, Algorithm, CrossEntropyConfig, GridSearchConfig, Solution};
use crate::reward::RewardConfig;
use crate::session::{DangerousSituation, Maneuver, SessionResult};
use crate::Result;

/// Everything the sweep needs besides the situations themselves.
#[derive(Debug, Clone, Default)]
pub struct BenchConfig {
    pub reward: RewardConfig,
    pub grid_search: GridSearchConfig,
    pub cross_entropy: CrossEntropyConfig,
    pub screening: ScreeningConfig,
    /// Base seed; each (situation, algorithm) cell derives its own stream.
    pub seed: u64,
    /// When false, the top-10% test uses an absolute reward difference of
    /// 0.1 instead of 10% of the best magnitude.
    pub top10_relative: bool,
}

impl BenchConfig {
    pub fn new() -> Self {
        Self {
            top10_relative: true,
            ..Default::default()
        }
    }
}

/// Outcome of one (situation, algorithm) cell. Failures are recorded, never
/// propagated: a failed cell simply satisfies no metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub situation: usize,
    pub algorithm: Algorithm,
    pub maneuvers: Option<Vec<Maneuver>>,
    pub result: Option<SessionResult>,
    pub error: Option<String>,
}

impl BenchCell {
    fn from_outcome(situation: usize, algorithm: Algorithm, outcome: Result<Solution>) -> Self {
        match outcome {
            Ok(s) => BenchCell {
                situation,
                algorithm,
                maneuvers: Some(s.maneuvers),
                result: Some(s.result),
                error: None,
            },
            Err(e) => BenchCell {
                situation,
                algorithm,
                maneuvers: None,
                result: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn reward(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.reward.total)
    }
}

/// One row of the metrics table; percentages over the situation set.
/// Overcome columns are None for the algorithm's own row (and when the
/// reference algorithm did not run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algorithm: Algorithm,
    pub top10_pct: f64,
    pub leq_thr_pct: f64,
    pub overcome_baseline_pct: Option<f64>,
    pub overcome_gs_pct: Option<f64>,
    pub pc_leq_1e4_pct: f64,
    pub pc_leq_2e4_pct: f64,
    pub pc_leq_1e3_pct: f64,
}

/// Full sweep output: the cell matrix plus the aggregated metrics.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub algorithms: Vec<Algorithm>,
    /// cells[situation][algorithm-index]
    pub cells: Vec<Vec<BenchCell>>,
    pub metrics: Vec<MetricsRow>,
}

/// Derives a per-cell RNG seed from the base seed and the cell coordinates
/// (splitmix64-style mixing, stable across platforms).
fn cell_seed(base: u64, situation: usize, algorithm: usize) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(1 + situation as u64))
        .wrapping_add(0xbf58476d1ce4e5b9u64.wrapping_mul(1 + algorithm as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Evaluates every (situation, algorithm) pair exactly once, in parallel,
/// deterministically for a given seed; then computes the metrics table.
pub fn run_benchmark(
    situations: &[DangerousSituation],
    algorithms: &[Algorithm],
    cfg: &BenchConfig,
) -> Result<BenchReport> {
    if situations.is_empty() || algorithms.is_empty() {
        return Err(crate::Error::InvalidInput(
            "benchmark needs at least one situation and one algorithm".into(),
        ));
    }
    let coords: Vec<(usize, usize)> = (0..situations.len())
        .flat_map(|s| (0..algorithms.len()).map(move |a| (s, a)))
        .collect();
    let mut flat: Vec<BenchCell> = coords
        .par_iter()
        .map(|&(s, a)| {
            let ce = CrossEntropyConfig {
                rng_seed: cell_seed(cfg.seed, s, a),
                ..cfg.cross_entropy
            };
            let outcome = solve(
                &situations[s],
                algorithms[a],
                &cfg.grid_search,
                &ce,
                &cfg.reward,
                &cfg.screening,
            );
            BenchCell::from_outcome(s, algorithms[a], outcome)
        })
        .collect();
    let mut cells: Vec<Vec<BenchCell>> = Vec::with_capacity(situations.len());
    for _ in 0..situations.len() {
        let rest = flat.split_off(algorithms.len());
        cells.push(flat);
        flat = rest;
    }
    let metrics = compute_metrics(&cells, algorithms, cfg);
    Ok(BenchReport {
        algorithms: algorithms.to_vec(),
        cells,
        metrics,
    })
}

/// Aggregates the metric columns from a rectangular cell matrix.
pub fn compute_metrics(
    cells: &[Vec<BenchCell>],
    algorithms: &[Algorithm],
    cfg: &BenchConfig,
) -> Vec<MetricsRow> {
    let n = cells.len() as f64;
    let idx_of = |target: Algorithm| algorithms.iter().position(|a| *a == target);
    let baseline_idx = idx_of(Algorithm::Baseline);
    let gs_idx = idx_of(Algorithm::Gs);

    let mut rows = Vec::with_capacity(algorithms.len());
    for (a, algorithm) in algorithms.iter().enumerate() {
        let mut top10 = 0usize;
        let mut leq_thr = 0usize;
        let mut oc_baseline = 0usize;
        let mut oc_gs = 0usize;
        let mut pc1 = 0usize;
        let mut pc2 = 0usize;
        let mut pc3 = 0usize;
        for row in cells {
            let cell = &row[a];
            let Some(result) = &cell.result else { continue };
            let reward = result.reward.total;

            let best = row
                .iter()
                .filter_map(BenchCell::reward)
                .fold(f64::NEG_INFINITY, f64::max);
            let slack = if cfg.top10_relative {
                0.1 * best.abs()
            } else {
                0.1
            };
            if reward >= best - slack {
                top10 += 1;
            }
            if within_thresholds(result, &cfg.reward) {
                leq_thr += 1;
            }
            if let Some(b) = baseline_idx {
                if let Some(other) = row[b].reward() {
                    if b != a && reward > other {
                        oc_baseline += 1;
                    }
                }
            }
            if let Some(g) = gs_idx {
                if let Some(other) = row[g].reward() {
                    if g != a && reward > other {
                        oc_gs += 1;
                    }
                }
            }
            if result.total_probability <= 1e-4 {
                pc1 += 1;
            }
            if result.total_probability <= 2e-4 {
                pc2 += 1;
            }
            if result.total_probability <= 1e-3 {
                pc3 += 1;
            }
        }
        let pct = |count: usize| 100.0 * count as f64 / n;
        rows.push(MetricsRow {
            algorithm: *algorithm,
            top10_pct: pct(top10),
            leq_thr_pct: pct(leq_thr),
            overcome_baseline_pct: match baseline_idx {
                Some(b) if b != a => Some(pct(oc_baseline)),
                _ => None,
            },
            overcome_gs_pct: match gs_idx {
                Some(g) if g != a => Some(pct(oc_gs)),
                _ => None,
            },
            pc_leq_1e4_pct: pct(pc1),
            pc_leq_2e4_pct: pct(pc2),
            pc_leq_1e3_pct: pct(pc3),
        });
    }
    rows
}

/// True when all seven penalized components sit at or below their thresholds.
pub fn within_thresholds(result: &SessionResult, reward: &RewardConfig) -> bool {
    result.total_probability <= reward.collision_probability_threshold
        && result.fuel <= reward.fuel_threshold
        && result.deviations.a.abs() <= reward.dev_a_threshold
        && result.deviations.e.abs() <= reward.dev_e_threshold
        && result.deviations.i.abs() <= reward.dev_i_threshold
        && result.deviations.raan.abs() <= reward.dev_raan_threshold
        && result.deviations.argp.abs() <= reward.dev_argp_threshold
}

fn fmt_pct(v: f64) -> String {
    format!("{v}")
}

/// Renders the metrics table as CSV with one row per algorithm; byte-stable
/// for identical inputs. Undefined overcome columns print as "-".
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(
        "algorithm,top10_pct,leq_thr_pct,overcome_baseline_pct,overcome_gs_pct,pc_leq_1e4_pct,pc_leq_2e4_pct,pc_leq_1e3_pct\n",
    );
    for row in rows {
        let dash = |v: &Option<f64>| v.map(fmt_pct).unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.algorithm.id(),
            fmt_pct(row.top10_pct),
            fmt_pct(row.leq_thr_pct),
            dash(&row.overcome_baseline_pct),
            dash(&row.overcome_gs_pct),
            fmt_pct(row.pc_leq_1e4_pct),
            fmt_pct(row.pc_leq_2e4_pct),
            fmt_pct(row.pc_leq_1e3_pct),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardBreakdown;
    use crate::session::Deviations;

    fn fake_result(reward_total: f64, pc: f64) -> SessionResult {
        SessionResult {
            total_probability: pc,
            fuel: 0.0,
            deviations: Deviations {
                a: 0.0,
                e: 0.0,
                i: 0.0,
                raan: 0.0,
                argp: 0.0,
                mean_anomaly: 0.0,
            },
            conjunctions: vec![],
            reward: RewardBreakdown {
                collision_probability: 0.0,
                fuel: 0.0,
                dev_a: 0.0,
                dev_e: 0.0,
                dev_i: 0.0,
                dev_raan: 0.0,
                dev_argp: 0.0,
                dev_mean_anomaly: 0.0,
                total: reward_total,
            },
        }
    }

    fn cell(situation: usize, algorithm: Algorithm, reward: f64, pc: f64) -> BenchCell {
        BenchCell {
            situation,
            algorithm,
            maneuvers: Some(vec![]),
            result: Some(fake_result(reward, pc)),
            error: None,
        }
    }

    #[test]
    fn top10_is_relative_to_best_magnitude() {
        // Rewards -1.0 (best), -1.05 (within 10% of |best|), -2.0 (outside).
        let algorithms = [Algorithm::Gs, Algorithm::GsCe, Algorithm::Baseline];
        let cells = vec![vec![
            cell(0, Algorithm::Gs, -1.0, 0.0),
            cell(0, Algorithm::GsCe, -1.05, 0.0),
            cell(0, Algorithm::Baseline, -2.0, 0.0),
        ]];
        let cfg = BenchConfig::new();
        let rows = compute_metrics(&cells, &algorithms, &cfg);
        assert_eq!(rows[0].top10_pct, 100.0);
        assert_eq!(rows[1].top10_pct, 100.0);
        assert_eq!(rows[2].top10_pct, 0.0);
        // The best algorithm always gets the flag.
        assert!(rows[0].top10_pct >= rows[1].top10_pct);
    }

    #[test]
    fn overcome_self_is_undefined() {
        let algorithms = [Algorithm::Gs];
        let cells = vec![vec![cell(0, Algorithm::Gs, -1.0, 0.0)]];
        let cfg = BenchConfig::new();
        let rows = compute_metrics(&cells, &algorithms, &cfg);
        assert_eq!(rows[0].overcome_gs_pct, None);
        assert_eq!(rows[0].overcome_baseline_pct, None);
        let csv = metrics_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().contains(",-,-,"));
    }

    #[test]
    fn zero_probability_fills_all_pc_columns() {
        let algorithms = [Algorithm::Gs];
        let cells = vec![vec![cell(0, Algorithm::Gs, -1.0, 0.0)]];
        let rows = compute_metrics(&cells, &algorithms, &BenchConfig::new());
        assert_eq!(rows[0].pc_leq_1e4_pct, 100.0);
        assert_eq!(rows[0].pc_leq_2e4_pct, 100.0);
        assert_eq!(rows[0].pc_leq_1e3_pct, 100.0);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let algorithms = [Algorithm::Gs, Algorithm::GsCe];
        let s0 = vec![
            cell(0, Algorithm::Gs, -1.0, 0.0),
            cell(0, Algorithm::GsCe, -0.9, 0.0),
        ];
        let s1 = vec![
            cell(1, Algorithm::Gs, -3.0, 2e-4),
            cell(1, Algorithm::GsCe, -2.0, 1e-5),
        ];
        let cfg = BenchConfig::new();
        let forward = compute_metrics(&[s0.clone(), s1.clone()], &algorithms, &cfg);
        let reversed = compute_metrics(&[s1, s0], &algorithms, &cfg);
        assert_eq!(forward, reversed);
    }

    #[test]
    fn failed_cells_satisfy_nothing() {
        let algorithms = [Algorithm::Gs, Algorithm::GsCe];
        let failed = BenchCell {
            situation: 0,
            algorithm: Algorithm::GsCe,
            maneuvers: None,
            result: None,
            error: Some("boom".into()),
        };
        let cells = vec![vec![cell(0, Algorithm::Gs, -1.0, 0.0), failed]];
        let rows = compute_metrics(&cells, &algorithms, &BenchConfig::new());
        assert_eq!(rows[1].top10_pct, 0.0);
        assert_eq!(rows[1].pc_leq_1e3_pct, 0.0);
    }

    #[test]
    fn leq_thr_implies_reward_at_least_minus_seven() {
        let reward_cfg = RewardConfig::default();
        let result = fake_result(-1.0, 5e-5);
        assert!(within_thresholds(&result, &reward_cfg));
        // Each of the seven components is at worst -1 at its threshold, so a
        // within-thresholds outcome rescored through the reward is >= -7.
        let scored = crate::reward::total_reward(
            result.total_probability,
            result.fuel,
            &result.deviations,
            &reward_cfg,
        );
        assert!(scored.total >= -7.0);
    }
}
