use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{ServiceReport, Table};
use super::ServiceError;
use crate::rng::{seeded, stream};
use crate::scenario::ServiceKind;
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicAction {
    ServeOldest = 0,
    ServeMostUrgent = 1,
    ServeShortest = 2,
    Idle = 3,
}

impl TicAction {
    pub const ALL: [TicAction; 4] =
        [TicAction::ServeOldest, TicAction::ServeMostUrgent, TicAction::ServeShortest, TicAction::Idle];
}

const OCC_BUCKETS: usize = 5;
const SLACK_BUCKETS: usize = 4;
const N_STATES: usize = OCC_BUCKETS * SLACK_BUCKETS * 2;
const DL_SIZE_BITS: u32 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicConfig {
    pub episodes: u32,
    pub episode_slots: u32,
    pub eval_slots: u32,
    /// Held-out evaluation episodes per run.
    pub eval_episodes: u32,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub discount: f64,
    /// Per-slot uplink request probability of each uplink sensor.
    pub ul_rate: f64,
    pub ul_deadline: u32,
    /// Deadline of the downlink response triggered by each delivered uplink.
    pub dl_deadline: u32,
}

impl Default for TicConfig {
    fn default() -> Self {
        TicConfig {
            episodes: 1500,
            episode_slots: 60,
            eval_slots: 200,
            eval_episodes: 3,
            epsilon: 0.1,
            learning_rate: 0.1,
            discount: 0.5,
            ul_rate: 0.16,
            ul_deadline: 8,
            dl_deadline: 2,
        }
    }
}

impl TicConfig {
    fn validate(&self) -> Result<(), ServiceError> {
        let ok = self.episode_slots > 0
            && self.eval_slots > 0
            && self.eval_episodes > 0
            && (0.0..=1.0).contains(&self.epsilon)
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && (0.0..1.0).contains(&self.discount)
            && (0.0..=1.0).contains(&self.ul_rate)
            && self.ul_deadline > 0
            && self.dl_deadline > 0;
        if ok {
            Ok(())
        } else {
            Err(ServiceError::Invalid(format!("tic config {self:?}")))
        }
    }
}

/// Tabular action values over (occupancy bucket, slack bucket, direction).
/// One decision per gateway and slot picks the rule used for all of that
/// slot's service opportunities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<[f64; 4]>,
}

impl Default for QTable {
    fn default() -> Self {
        QTable { values: vec![[0.0; 4]; N_STATES] }
    }
}

impl QTable {
    /// Best action; ties go to the lowest index, so a zero table serves
    /// the oldest packet.
    pub fn greedy(&self, state: usize) -> TicAction {
        let q = &self.values[state];
        let mut best = 0;
        for a in 1..4 {
            if q[a] > q[best] {
                best = a;
            }
        }
        TicAction::ALL[best]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Fifo,
    Greedy(&'a QTable),
}

#[derive(Debug, Clone, Copy)]
struct TPacket {
    src: usize,
    created: u32,
    deadline: u32,
    size: u32,
    downlink: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub generated: u64,
    pub hits: u64,
    pub drops: u64,
}

impl EpisodeStats {
    pub fn loss(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.drops as f64 / self.generated as f64
        }
    }

    pub fn episode_return(&self) -> i64 {
        self.hits as i64 - self.drops as i64
    }
}

struct Learner<'a> {
    q: &'a mut QTable,
    rng: ChaCha8Rng,
    epsilon: f64,
    lr: f64,
    gamma: f64,
    /// Per gateway: last (state, action, reward so far).
    pending: Vec<Option<(usize, usize, f64)>>,
    /// Reward credited to updates this episode.
    credited: f64,
}

impl Learner<'_> {
    fn update(&mut self, s: usize, a: usize, r: f64, next: Option<usize>) {
        self.credited += r;
        let target = r + next.map_or(0.0, |n| self.gamma * self.q.values[n].iter().cloned().fold(f64::MIN, f64::max));
        let q = &mut self.q.values[s][a];
        *q += self.lr * (target - *q);
    }

    fn decide(&mut self, g: usize, state: usize) -> TicAction {
        if let Some((s, a, r)) = self.pending[g].take() {
            self.update(s, a, r, Some(state));
        }
        if self.rng.random_bool(self.epsilon) {
            TicAction::ALL[self.rng.random_range(0..4)]
        } else {
            self.q.greedy(state)
        }
    }

    fn finish(&mut self) {
        for g in 0..self.pending.len() {
            if let Some((s, a, r)) = self.pending[g].take() {
                self.update(s, a, r, None);
            }
        }
    }
}

enum Driver<'a, 'q> {
    Fixed(Policy<'a>),
    Learn(Learner<'q>),
}

impl Driver<'_, '_> {
    fn decide(&mut self, g: usize, state: usize) -> TicAction {
        match self {
            Driver::Fixed(Policy::Fifo) => TicAction::ServeOldest,
            Driver::Fixed(Policy::Greedy(q)) => q.greedy(state),
            Driver::Learn(l) => l.decide(g, state),
        }
    }

    fn record(&mut self, g: usize, state: usize, action: TicAction, reward: f64) {
        if let Driver::Learn(l) = self {
            l.pending[g] = Some((state, action as usize, reward));
        }
    }

    fn penalise(&mut self, g: usize, amount: f64) {
        if let Driver::Learn(l) = self {
            if let Some(p) = l.pending[g].as_mut() {
                p.2 -= amount;
            }
        }
    }
}

fn state_of(q: &[TPacket], now: u32, buffer: usize) -> usize {
    let occ = (q.len() * OCC_BUCKETS / buffer.max(1)).min(OCC_BUCKETS - 1);
    let slack = q.iter().map(|p| p.deadline.saturating_sub(now)).min().unwrap_or(0);
    let sb = match slack {
        0 => 0,
        1 => 1,
        2..=3 => 2,
        _ => 3,
    };
    let oldest = pick(q, TicAction::ServeOldest).is_some_and(|i| q[i].downlink);
    (occ * SLACK_BUCKETS + sb) * 2 + usize::from(oldest)
}

fn pick(q: &[TPacket], action: TicAction) -> Option<usize> {
    let key = |p: &TPacket| -> (u32, u32, usize) {
        match action {
            TicAction::ServeOldest => (p.created, p.deadline, p.src),
            TicAction::ServeMostUrgent => (p.deadline, p.created, p.src),
            TicAction::ServeShortest => (p.size, p.created, p.src),
            TicAction::Idle => (0, 0, 0),
        }
    };
    if action == TicAction::Idle {
        return None;
    }
    (0..q.len()).min_by_key(|&i| key(&q[i]))
}

fn run_episode(topo: &SimConfig, tc: &TicConfig, seed: u64, slots: u32, driver: &mut Driver) -> EpisodeStats {
    let n = topo.n_sensors;
    let k = (topo.ul_fraction * n as f64).round() as usize;
    let mut ids: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut seeded(seed, stream::UL_SELECTION));
    let mut active = ids[..k.min(n)].to_vec();
    active.sort_unstable();
    let mut rngs: Vec<ChaCha8Rng> = active.iter().map(|&s| seeded(seed, stream::SENSOR_BASE + s as u64)).collect();

    let mut queues: Vec<Vec<TPacket>> = vec![Vec::with_capacity(topo.buffer_capacity); topo.n_gateways];
    let mut responses: Vec<usize> = Vec::new();
    let mut st = EpisodeStats::default();

    for t in 0..slots {
        let mut arrivals: Vec<TPacket> = responses
            .drain(..)
            .map(|src| TPacket { src, created: t, deadline: t + tc.dl_deadline, size: DL_SIZE_BITS, downlink: true })
            .collect();
        for (i, &s) in active.iter().enumerate() {
            let rng = &mut rngs[i];
            if rng.random_bool(tc.ul_rate) {
                let size = rng.random_range(1..=topo.payload_limit_bits);
                arrivals.push(TPacket { src: s, created: t, deadline: t + tc.ul_deadline, size, downlink: false });
            }
        }
        for p in arrivals {
            st.generated += 1;
            let g = topo.gateway_of(p.src);
            if queues[g].len() >= topo.buffer_capacity {
                st.drops += 1;
                driver.penalise(g, 1.0);
            } else {
                queues[g].push(p);
            }
        }

        for (g, q) in queues.iter_mut().enumerate() {
            if q.is_empty() {
                continue;
            }
            let s = state_of(q, t, topo.buffer_capacity);
            let a = driver.decide(g, s);
            let mut served = 0.0;
            for _ in 0..topo.gateway_capacity {
                let Some(i) = pick(q, a) else { break };
                let p = q.swap_remove(i);
                st.hits += 1;
                served += 1.0;
                if !p.downlink {
                    responses.push(p.src);
                }
            }
            driver.record(g, s, a, served);
        }

        for (g, q) in queues.iter_mut().enumerate() {
            let before = q.len();
            q.retain(|p| p.deadline > t);
            let lost = before - q.len();
            if lost > 0 {
                st.drops += lost as u64;
                driver.penalise(g, lost as f64);
            }
        }
    }
    for (g, q) in queues.iter().enumerate() {
        if !q.is_empty() {
            st.drops += q.len() as u64;
            driver.penalise(g, q.len() as f64);
        }
    }
    // responses owed for the last slot's deliveries are never generated
    if let Driver::Learn(l) = driver {
        l.finish();
    }
    st
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicEval {
    pub seed: u64,
    pub trained: EpisodeStats,
    pub fifo: EpisodeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicResult {
    pub seed: u64,
    pub episodes: u32,
    pub untrained: bool,
    pub training_returns: Vec<i64>,
    /// Sum of the rewards the learner was credited, per training episode.
    pub credited_rewards: Vec<f64>,
    pub q: QTable,
    pub evals: Vec<TicEval>,
}

impl TicResult {
    pub fn trained_loss(&self) -> f64 {
        mean(self.evals.iter().map(|e| e.trained.loss()))
    }

    pub fn fifo_loss(&self) -> f64 {
        mean(self.evals.iter().map(|e| e.fifo.loss()))
    }

    pub fn report(&self) -> ServiceReport {
        let mut r = ServiceReport::new(ServiceKind::Tic, "TIC scheduling vs FIFO", self.seed)
            .metric("trained_loss", self.trained_loss())
            .metric("fifo_loss", self.fifo_loss())
            .metric("episodes", self.episodes as f64);
        if self.untrained {
            r.flags.push("untrained".into());
        }
        r.table = Some(Table {
            columns: ["eval_seed", "trained_loss", "fifo_loss", "trained_return", "fifo_return"]
                .map(String::from)
                .to_vec(),
            rows: self
                .evals
                .iter()
                .map(|e| {
                    vec![
                        e.seed.to_string(),
                        format!("{:.4}", e.trained.loss()),
                        format!("{:.4}", e.fifo.loss()),
                        e.trained.episode_return().to_string(),
                        e.fifo.episode_return().to_string(),
                    ]
                })
                .collect(),
        });
        r
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn derive_seed(seed: u64, tag: u64, i: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (tag << 48) ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains a Q-learning scheduler on `topo` and compares it with FIFO on
/// held-out episodes. Zero episodes leaves the table at zero (FIFO
/// behaviour) and flags the result as untrained.
pub fn run_tic(topo: &SimConfig, tc: &TicConfig, seed: u64) -> Result<TicResult, ServiceError> {
    topo.validate()?;
    tc.validate()?;
    let mut q = QTable::default();
    let mut training_returns = Vec::with_capacity(tc.episodes as usize);
    let mut credited_rewards = Vec::with_capacity(tc.episodes as usize);
    {
        let mut driver = Driver::Learn(Learner {
            q: &mut q,
            rng: seeded(seed, stream::TIC_EXPLORATION),
            epsilon: tc.epsilon,
            lr: tc.learning_rate,
            gamma: tc.discount,
            pending: vec![None; topo.n_gateways],
            credited: 0.0,
        });
        for e in 0..tc.episodes {
            let st = run_episode(topo, tc, derive_seed(seed, 1, e as u64), tc.episode_slots, &mut driver);
            training_returns.push(st.episode_return());
            if let Driver::Learn(l) = &mut driver {
                credited_rewards.push(l.credited);
                l.credited = 0.0;
            }
        }
    }
    let evals = (0..tc.eval_episodes)
        .map(|i| {
            let s = derive_seed(seed, 2, i as u64);
            let trained = run_episode(topo, tc, s, tc.eval_slots, &mut Driver::Fixed(Policy::Greedy(&q)));
            let fifo = run_episode(topo, tc, s, tc.eval_slots, &mut Driver::Fixed(Policy::Fifo));
            TicEval { seed: s, trained, fifo }
        })
        .collect();
    Ok(TicResult {
        seed,
        episodes: tc.episodes,
        untrained: tc.episodes == 0,
        training_returns,
        credited_rewards,
        q,
        evals,
    })
}

/// Runs one episode under a fixed policy.
pub fn evaluate_policy(topo: &SimConfig, tc: &TicConfig, seed: u64, policy: Policy) -> EpisodeStats {
    run_episode(topo, tc, seed, tc.eval_slots, &mut Driver::Fixed(policy))
}
