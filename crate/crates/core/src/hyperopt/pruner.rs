use super::{Direction, PrunerConfig, Trial, TrialState};

/// Median rule: prune when past warm-up, at least `n_min_trials` complete
/// trials reported at `step`, and `value` is strictly worse than their median.
pub fn median_should_prune(
    trials: &[Trial],
    direction: Direction,
    cfg: &PrunerConfig,
    step: u64,
    value: f64,
) -> bool {
    if step < cfg.n_warmup_steps {
        return false;
    }
    let mut peers: Vec<f64> = trials
        .iter()
        .filter(|t| t.state == TrialState::Complete)
        .filter_map(|t| t.value_at(step))
        .collect();
    if peers.is_empty() || peers.len() < cfg.n_min_trials {
        return false;
    }
    peers.sort_by(f64::total_cmp);
    let mid = peers.len() / 2;
    let median = if peers.len() % 2 == 1 { peers[mid] } else { 0.5 * (peers[mid - 1] + peers[mid]) };
    direction.score(value) < direction.score(median)
}
