//! Metric aggregation across episodes and the plot-ready CSV outputs.

use std::io::Write;

use crate::error::{Error, Result};

use super::{EpisodeLog, TrainingEpisode};

/// Distribution summary of one client's expected query MSE at its query
/// instants, pooled over episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientAggregate {
    pub client: usize,
    pub kind: String,
    pub query_count: usize,
    pub mse_mean: f64,
    pub mse_p5: f64,
    pub mse_p25: f64,
    pub mse_p50: f64,
    pub mse_p75: f64,
    pub mse_p95: f64,
    /// Mean realized squared response error (for calibration checks).
    pub realized_mse_mean: f64,
}

/// Deterministic summary of a batch of episode logs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub policy: String,
    pub scenario: String,
    pub episodes: usize,
    pub clients: Vec<ClientAggregate>,
    /// Mean of −reward over slots with at least one active query.
    pub overall_cost_mean: f64,
    /// Per-sensor mean decision-time age of information.
    pub aoi_mean: Vec<f64>,
    /// Mean trace of the posterior covariance (state-estimation MSE).
    pub state_mse_trace_mean: f64,
}

/// Percentile by linear interpolation on the sorted sample.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Pool logs into per-client MSE distributions, overall cost, per-sensor AoI
/// means and the mean posterior trace.
pub fn aggregate(policy: &str, scenario: &str, logs: &[EpisodeLog]) -> Result<AggregateReport> {
    if logs.is_empty() {
        return Err(Error::InvalidArgument(
            "aggregate needs at least one episode log".into(),
        ));
    }
    let sensor_count = logs[0]
        .slots
        .first()
        .map(|s| s.aoi.len())
        .ok_or_else(|| Error::InvalidArgument("empty episode log".into()))?;

    let mut per_client: Vec<(usize, String, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut cost_sum = 0.0;
    let mut cost_slots = 0usize;
    let mut aoi_sums = vec![0.0f64; sensor_count];
    let mut psi_sum = 0.0;
    let mut slot_count = 0usize;

    for log in logs {
        for slot in &log.slots {
            slot_count += 1;
            psi_sum += slot.psi_trace;
            for (n, age) in slot.aoi.iter().enumerate() {
                aoi_sums[n] += *age as f64;
            }
            if !slot.queries.is_empty() {
                cost_sum += -slot.reward;
                cost_slots += 1;
            }
            for q in &slot.queries {
                let entry = match per_client.iter_mut().find(|(c, ..)| *c == q.client) {
                    Some(e) => e,
                    None => {
                        per_client.push((q.client, q.kind.to_string(), Vec::new(), Vec::new()));
                        per_client.last_mut().unwrap()
                    }
                };
                entry.2.push(q.expected_mse);
                entry.3.push(q.squared_error);
            }
        }
    }
    per_client.sort_by_key(|(c, ..)| *c);

    let clients = per_client
        .into_iter()
        .map(|(client, kind, mut expected, realized)| {
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = expected.len();
            ClientAggregate {
                client,
                kind,
                query_count: n,
                mse_mean: expected.iter().sum::<f64>() / n as f64,
                mse_p5: percentile(&expected, 5.0),
                mse_p25: percentile(&expected, 25.0),
                mse_p50: percentile(&expected, 50.0),
                mse_p75: percentile(&expected, 75.0),
                mse_p95: percentile(&expected, 95.0),
                realized_mse_mean: realized.iter().sum::<f64>() / n as f64,
            }
        })
        .collect();

    Ok(AggregateReport {
        policy: policy.to_string(),
        scenario: scenario.to_string(),
        episodes: logs.len(),
        clients,
        overall_cost_mean: if cost_slots > 0 {
            cost_sum / cost_slots as f64
        } else {
            0.0
        },
        aoi_mean: aoi_sums
            .into_iter()
            .map(|s| s / slot_count as f64)
            .collect(),
        state_mse_trace_mean: psi_sum / slot_count as f64,
    })
}

/// Aggregate CSV: one row per (policy, client); sensor columns are 1-based.
pub fn write_aggregate_csv<W: Write>(reports: &[AggregateReport], mut out: W) -> Result<()> {
    let sensors = reports.first().map(|r| r.aoi_mean.len()).unwrap_or(0);
    let aoi_cols: Vec<String> = (1..=sensors).map(|n| format!("aoi_mean_{n}")).collect();
    writeln!(
        out,
        "policy,scenario,query_kind,mse_mean,mse_p5,mse_p25,mse_p50,mse_p75,mse_p95,overall_cost_mean,{}",
        aoi_cols.join(",")
    )?;
    for report in reports {
        let aoi: Vec<String> = report.aoi_mean.iter().map(|v| v.to_string()).collect();
        for client in &report.clients {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                report.policy,
                report.scenario,
                client.kind,
                client.mse_mean,
                client.mse_p5,
                client.mse_p25,
                client.mse_p50,
                client.mse_p75,
                client.mse_p95,
                report.overall_cost_mean,
                aoi.join(",")
            )?;
        }
    }
    Ok(())
}

/// Slot-level CSV: one row per (episode, slot); the action column is 1-based.
pub fn write_slots_csv<W: Write>(logs: &[EpisodeLog], mut out: W) -> Result<()> {
    let sensors = logs
        .first()
        .and_then(|l| l.slots.first())
        .map(|s| s.aoi.len())
        .unwrap_or(0);
    let aoi_cols: Vec<String> = (1..=sensors).map(|n| format!("aoi_{n}")).collect();
    writeln!(
        out,
        "episode,slot,action,delivered,reward,psi_trace,{}",
        aoi_cols.join(",")
    )?;
    for log in logs {
        for slot in &log.slots {
            let aoi: Vec<String> = slot.aoi.iter().map(|v| v.to_string()).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                log.episode,
                slot.slot,
                slot.action + 1,
                u8::from(slot.delivered),
                slot.reward,
                slot.psi_trace,
                aoi.join(",")
            )?;
        }
    }
    Ok(())
}

/// Query-level CSV: one row per answered query. The estimate and truth
/// columns are empty for the vector-valued state query.
pub fn write_queries_csv<W: Write>(logs: &[EpisodeLog], mut out: W) -> Result<()> {
    writeln!(
        out,
        "episode,slot,client,kind,estimate,true_value,squared_error,expected_mse"
    )?;
    for log in logs {
        for slot in &log.slots {
            for q in &slot.queries {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    log.episode,
                    slot.slot,
                    q.client + 1,
                    q.kind,
                    q.estimate.map(|v| v.to_string()).unwrap_or_default(),
                    q.true_value.map(|v| v.to_string()).unwrap_or_default(),
                    q.squared_error,
                    q.expected_mse
                )?;
            }
        }
    }
    Ok(())
}

/// Training-curve CSV: one row per training episode.
pub fn write_training_curve_csv<W: Write>(curve: &[TrainingEpisode], mut out: W) -> Result<()> {
    writeln!(
        out,
        "episode,temperature,train_steps,mean_loss,total_reward"
    )?;
    for point in curve {
        writeln!(
            out,
            "{},{},{},{},{}",
            point.episode,
            point.temperature,
            point.train_steps,
            point.mean_loss,
            point.total_reward
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{QueryRecord, SlotRecord};

    fn slot(t: u64, reward: f64, with_query: bool) -> SlotRecord {
        SlotRecord {
            slot: t,
            action: 0,
            delivered: true,
            reward,
            psi_trace: 1.0,
            aoi: vec![1, 2],
            queries: if with_query {
                vec![QueryRecord {
                    client: 0,
                    kind: "max",
                    estimate: Some(0.0),
                    true_value: Some(0.0),
                    squared_error: 0.1,
                    expected_mse: -reward,
                    alpha: 1.0,
                }]
            } else {
                Vec::new()
            },
        }
    }

    #[test]
    fn percentile_interpolates_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
        assert_eq!(percentile(&v, 25.0), 1.75);
    }

    #[test]
    fn constant_cost_aggregates_to_itself() {
        let log = EpisodeLog {
            episode: 0,
            slots: (0..10).map(|t| slot(t, -2.0, true)).collect(),
        };
        let report = aggregate("maf", "test", &[log]).unwrap();
        assert_eq!(report.overall_cost_mean, 2.0);
        assert_eq!(report.clients[0].mse_mean, 2.0);
        assert_eq!(report.clients[0].mse_p50, 2.0);
    }

    #[test]
    fn queryless_slots_do_not_enter_the_cost() {
        let log = EpisodeLog {
            episode: 0,
            slots: vec![
                slot(0, -3.0, true),
                slot(1, 0.0, false),
                slot(2, -1.0, true),
            ],
        };
        let report = aggregate("maf", "test", &[log]).unwrap();
        assert_eq!(report.overall_cost_mean, 2.0);
    }

    #[test]
    fn duplicated_logs_aggregate_identically() {
        let log = EpisodeLog {
            episode: 0,
            slots: (0..20).map(|t| slot(t, -(t as f64), t % 3 == 0)).collect(),
        };
        let single = aggregate("maf", "test", std::slice::from_ref(&log)).unwrap();
        let again = aggregate("maf", "test", std::slice::from_ref(&log)).unwrap();
        assert_eq!(single, again);
        // duplication leaves every pooled mean unchanged (interpolated
        // percentiles may shift with the sample count)
        let double = aggregate("maf", "test", &[log.clone(), log]).unwrap();
        assert_eq!(single.overall_cost_mean, double.overall_cost_mean);
        assert_eq!(single.clients[0].mse_mean, double.clients[0].mse_mean);
        assert_eq!(single.aoi_mean, double.aoi_mean);
        assert_eq!(single.state_mse_trace_mean, double.state_mse_trace_mean);
    }

    #[test]
    fn csv_headers_are_stable() {
        let log = EpisodeLog {
            episode: 0,
            slots: vec![slot(0, -1.0, true)],
        };
        let report = aggregate("maf", "test", std::slice::from_ref(&log)).unwrap();
        let mut buf = Vec::new();
        write_aggregate_csv(&[report], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "policy,scenario,query_kind,mse_mean,mse_p5,mse_p25,mse_p50,mse_p75,mse_p95,overall_cost_mean,aoi_mean_1,aoi_mean_2"
        ));
        let mut buf = Vec::new();
        write_slots_csv(std::slice::from_ref(&log), &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("episode,slot,action,delivered,reward,psi_trace,aoi_1,aoi_2"));
        let mut buf = Vec::new();
        write_queries_csv(&[log], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(
            "episode,slot,client,kind,estimate,true_value,squared_error,expected_mse"
        ));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(aggregate("maf", "test", &[]).is_err());
    }
}
