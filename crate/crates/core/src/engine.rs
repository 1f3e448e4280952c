//! Discrete-time flow simulation.
//!
//! Each step runs five phases in order:
//!
//! 1. injection: every active, incomplete flow offers
//!    `min(feeder weight, load - delivered - in_flight)` units to its feeder edge;
//! 2. forwarding: every edge serves its FIFO queue first, then the flows that
//!    reached it this step in a freshly shuffled order, each up to the remaining
//!    weight budget; the excess is dropped or queued;
//! 3. delivery: units crossing a router→target edge are delivered;
//! 4. plasticity: every non-fixed edge that carried data is potentiated or
//!    depressed from this step's jam bits; Oja's activity term is the number
//!    of units the edge actually transmitted;
//! 5. completion bookkeeping.
//!
//! Data is store-and-forward: units that cross an edge at step `t` wait at its
//! head node and compete for the next edge at step `t + 1`.

use std::collections::{HashSet, VecDeque};
use std::mem;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::plasticity::{decide_action, PlasticityAction, UpdateRule};
use crate::routing::{FlowId, PathFinder, RoutingError};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::topology::{EdgeId, NetworkGraph, NodeId, NodeRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CongestionModel {
    Drop,
    Queue,
}

impl CongestionModel {
    pub fn name(self) -> &'static str {
        match self {
            CongestionModel::Drop => "drop",
            CongestionModel::Queue => "queue",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("duplicate {0}")]
    DuplicateFlow(FlowId),
    #[error("traffic window [{start}, {end}] is empty")]
    EmptyWindow { start: u64, end: u64 },
}

/// A flow to simulate: `load` units from `source` to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub source: NodeId,
    pub target: NodeId,
    pub load: u64,
}

/// Extra flows that inject only during steps `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficWindow {
    pub start: u64,
    pub end: u64,
    pub flows: Vec<FlowSpec>,
}

/// Totals for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub t: u64,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Units inserted into queues this step.
    pub queued: u64,
    /// Flows allowed to inject this step.
    pub active_flows: u32,
    /// Mean feeder-edge weight over the active flows, as used for injection.
    pub mean_source_weight: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowStats {
    pub id: FlowId,
    pub load: u64,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued_total: u64,
    pub in_flight: u64,
    pub path_length: usize,
    /// Number of steps taken to deliver the whole load.
    pub completion_time: Option<u64>,
    pub scheduled: bool,
}

impl FlowStats {
    pub fn is_complete(&self) -> bool {
        self.completion_time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: Vec<StepReport>,
    pub flows: Vec<FlowStats>,
}

#[derive(Debug, Clone, Copy)]
struct Parcel {
    flow: u32,
    hop: u32,
    units: u64,
}

#[derive(Debug, Clone)]
struct EdgeState {
    weight: u32,
    fixed: bool,
    queue: VecDeque<Parcel>,
    demand: u64,
    sent: u64,
    jam: bool,
}

#[derive(Debug, Clone)]
struct FlowState {
    id: FlowId,
    path: Vec<EdgeId>,
    load: u64,
    injected: u64,
    delivered: u64,
    dropped: u64,
    queued_total: u64,
    in_flight: u64,
    completion: Option<u64>,
    window: Option<(u64, u64)>,
}

impl FlowState {
    fn injecting_at(&self, t: u64) -> bool {
        self.completion.is_none() && self.window.is_none_or(|(s, e)| s <= t && t <= e)
    }

    fn finished_at(&self, t: u64) -> bool {
        self.completion.is_some() || self.window.is_some_and(|(_, e)| t > e && self.in_flight == 0)
    }

    fn stats(&self) -> FlowStats {
        FlowStats {
            id: self.id,
            load: self.load,
            injected: self.injected,
            delivered: self.delivered,
            dropped: self.dropped,
            queued_total: self.queued_total,
            in_flight: self.in_flight,
            path_length: self.path.len(),
            completion_time: self.completion,
            scheduled: self.window.is_some(),
        }
    }
}

pub struct Engine {
    graph: NetworkGraph,
    capacity: u32,
    rule: UpdateRule,
    model: CongestionModel,
    routing_seed: u64,
    rng: ChaCha8Rng,
    t: u64,
    edges: Vec<EdgeState>,
    flows: Vec<FlowState>,
    flow_ids: HashSet<FlowId>,
    arrivals: Vec<Vec<Parcel>>,
    next_arrivals: Vec<Vec<Parcel>>,
    /// (flow, hop) of every parcel an edge transmitted this step.
    sent_log: Vec<Vec<(u32, u32)>>,
    next_pending: Vec<u32>,
    in_next: Vec<bool>,
    in_work: Vec<bool>,
}

impl Engine {
    /// Routes the flows and sets every edge weight to the capacity.
    pub fn new(
        graph: &NetworkGraph,
        flows: &[FlowSpec],
        rule: UpdateRule,
        model: CongestionModel,
        seed: u64,
    ) -> Result<Self, EngineError> {
        let capacity = graph.capacity();
        let edges = graph
            .edges()
            .iter()
            .map(|&(_, head)| EdgeState {
                weight: capacity,
                fixed: graph.role(head) == NodeRole::Target,
                queue: VecDeque::new(),
                demand: 0,
                sent: 0,
                jam: false,
            })
            .collect();
        let m = graph.edges().len();
        let mut engine = Self {
            graph: graph.clone(),
            capacity,
            rule,
            model,
            routing_seed: derive_seed(seed, stream::ROUTING, 0),
            rng: rng_from_seed(derive_seed(seed, stream::ENGINE, 0)),
            t: 0,
            edges,
            flows: Vec::with_capacity(flows.len()),
            flow_ids: HashSet::with_capacity(flows.len()),
            arrivals: vec![Vec::new(); m],
            next_arrivals: vec![Vec::new(); m],
            sent_log: vec![Vec::new(); m],
            next_pending: Vec::new(),
            in_next: vec![false; m],
            in_work: vec![false; m],
        };
        engine.add_flows(flows, None)?;
        Ok(engine)
    }

    fn add_flows(&mut self, specs: &[FlowSpec], window: Option<(u64, u64)>) -> Result<(), EngineError> {
        for spec in specs {
            if self.flow_ids.contains(&spec.id) || specs.iter().filter(|s| s.id == spec.id).count() > 1 {
                return Err(EngineError::DuplicateFlow(spec.id));
            }
        }
        let mut finder = PathFinder::new(&self.graph, self.routing_seed);
        let mut routed = Vec::with_capacity(specs.len());
        for spec in specs {
            let path = finder.path(spec.source, spec.target).map_err(|cause| RoutingError::Flow {
                flow: spec.id,
                cause: Box::new(cause),
            })?;
            routed.push(FlowState {
                id: spec.id,
                path: path.edges().to_vec(),
                load: spec.load,
                injected: 0,
                delivered: 0,
                dropped: 0,
                queued_total: 0,
                in_flight: 0,
                completion: (spec.load == 0).then_some(0),
                window,
            });
        }
        self.flow_ids.extend(specs.iter().map(|s| s.id));
        self.flows.extend(routed);
        Ok(())
    }

    /// Adds flows that inject only inside their window. Data they leave in the
    /// network when the window closes still drains normally.
    pub fn apply_traffic_schedule(&mut self, schedule: &[TrafficWindow]) -> Result<(), EngineError> {
        let mut ids = HashSet::new();
        for window in schedule {
            if window.start > window.end {
                return Err(EngineError::EmptyWindow { start: window.start, end: window.end });
            }
            for f in &window.flows {
                if !ids.insert(f.id) || self.flow_ids.contains(&f.id) {
                    return Err(EngineError::DuplicateFlow(f.id));
                }
            }
        }
        for window in schedule {
            self.add_flows(&window.flows, Some((window.start, window.end)))?;
        }
        Ok(())
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn rule(&self) -> &UpdateRule {
        &self.rule
    }

    pub fn model(&self) -> CongestionModel {
        self.model
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn weight(&self, edge: EdgeId) -> u32 {
        self.edges[edge.index()].weight
    }

    pub fn weights(&self) -> impl Iterator<Item = u32> + '_ {
        self.edges.iter().map(|e| e.weight)
    }

    pub fn is_fixed(&self, edge: EdgeId) -> bool {
        self.edges[edge.index()].fixed
    }

    pub fn queued_units(&self, edge: EdgeId) -> u64 {
        self.edges[edge.index()].queue.iter().map(|p| p.units).sum()
    }

    pub fn flow_path(&self, index: usize) -> &[EdgeId] {
        &self.flows[index].path
    }

    pub fn flow_stats(&self) -> Vec<FlowStats> {
        self.flows.iter().map(FlowState::stats).collect()
    }

    /// Whether no flow will ever inject or move data again.
    pub fn all_finished(&self) -> bool {
        self.flows.iter().all(|f| f.finished_at(self.t))
    }

    /// Recounts the data held in queues and in transit and checks it against
    /// each flow's counters.
    pub fn audit(&self) -> Result<(), String> {
        let mut held = vec![0u64; self.flows.len()];
        for p in self.arrivals.iter().flatten().chain(self.edges.iter().flat_map(|e| e.queue.iter())) {
            held[p.flow as usize] += p.units;
        }
        for (f, &h) in self.flows.iter().zip(&held) {
            if h != f.in_flight {
                return Err(format!("{}: {} units held, {} counted in flight", f.id, h, f.in_flight));
            }
            if f.injected != f.delivered + f.dropped + f.in_flight {
                return Err(format!(
                    "{}: injected {} != delivered {} + dropped {} + in flight {}",
                    f.id, f.injected, f.delivered, f.dropped, f.in_flight
                ));
            }
            if f.delivered > f.load {
                return Err(format!("{}: delivered {} exceeds load {}", f.id, f.delivered, f.load));
            }
        }
        Ok(())
    }

    pub fn step(&mut self) -> StepReport {
        let t = self.t;
        let mut report = StepReport { t, ..StepReport::default() };

        let mut work = mem::take(&mut self.next_pending);
        for &e in &work {
            self.in_next[e as usize] = false;
            self.in_work[e as usize] = true;
        }

        // Injection.
        let mut weight_sum = 0u64;
        for (i, flow) in self.flows.iter_mut().enumerate() {
            if !flow.injecting_at(t) {
                continue;
            }
            let feeder = flow.path[0].index();
            let w = self.edges[feeder].weight as u64;
            report.active_flows += 1;
            weight_sum += w;
            let offer = w.min(flow.load - flow.delivered - flow.in_flight);
            if offer == 0 {
                continue;
            }
            flow.injected += offer;
            flow.in_flight += offer;
            report.injected += offer;
            self.arrivals[feeder].push(Parcel { flow: i as u32, hop: 0, units: offer });
            if !self.in_work[feeder] {
                self.in_work[feeder] = true;
                work.push(feeder as u32);
            }
        }
        if report.active_flows > 0 {
            report.mean_source_weight = Some(weight_sum as f64 / report.active_flows as f64);
        }

        // Forwarding and delivery.
        work.sort_unstable();
        for &e in &work {
            self.forward(e as usize, &mut report);
        }

        // Plasticity.
        for &e in &work {
            let e = e as usize;
            let edge = &self.edges[e];
            if edge.fixed {
                continue;
            }
            let contributed = self.sent_log[e].iter().any(|&(f, hop)| {
                let path = &self.flows[f as usize].path;
                path.get(hop as usize + 1).is_some_and(|next| self.edges[next.index()].jam)
            });
            let action = decide_action(edge.jam, contributed, !contributed, edge.sent > 0)
                .expect("complementary downstream flags");
            if action != PlasticityAction::None {
                let w = self.rule.apply(action, edge.weight, edge.sent, self.capacity);
                self.edges[e].weight = w;
            }
        }
        for &e in &work {
            let e = e as usize;
            let edge = &mut self.edges[e];
            edge.jam = false;
            edge.demand = 0;
            edge.sent = 0;
            self.sent_log[e].clear();
            self.in_work[e] = false;
        }

        // Completion.
        for flow in &mut self.flows {
            if flow.completion.is_none() && flow.delivered == flow.load {
                flow.completion = Some(t + 1);
            }
        }

        mem::swap(&mut self.arrivals, &mut self.next_arrivals);
        self.t += 1;
        report
    }

    fn forward(&mut self, e: usize, report: &mut StepReport) {
        let mut fresh = mem::take(&mut self.arrivals[e]);
        let weight = self.edges[e].weight as u64;
        let queued: u64 = self.edges[e].queue.iter().map(|p| p.units).sum();
        let demand = queued + fresh.iter().map(|p| p.units).sum::<u64>();
        let mut budget = weight;

        while budget > 0 {
            let Some(head) = self.edges[e].queue.front_mut() else {
                break;
            };
            let send = head.units.min(budget);
            let parcel = Parcel { units: send, ..*head };
            head.units -= send;
            if head.units == 0 {
                self.edges[e].queue.pop_front();
            }
            budget -= send;
            self.transmit(e, parcel, report);
        }

        fresh.shuffle(&mut self.rng);
        for p in fresh.drain(..) {
            let send = p.units.min(budget);
            if send > 0 {
                budget -= send;
                self.transmit(e, Parcel { units: send, ..p }, report);
            }
            let excess = p.units - send;
            if excess == 0 {
                continue;
            }
            let flow = &mut self.flows[p.flow as usize];
            match self.model {
                CongestionModel::Drop => {
                    flow.dropped += excess;
                    flow.in_flight -= excess;
                    report.dropped += excess;
                }
                CongestionModel::Queue => {
                    flow.queued_total += excess;
                    report.queued += excess;
                    let queue = &mut self.edges[e].queue;
                    match queue.back_mut() {
                        Some(back) if back.flow == p.flow && back.hop == p.hop => back.units += excess,
                        _ => queue.push_back(Parcel { units: excess, ..p }),
                    }
                }
            }
        }
        self.arrivals[e] = fresh;

        let edge = &mut self.edges[e];
        edge.demand = demand;
        edge.jam = demand > weight;
        if !edge.queue.is_empty() {
            self.mark_next(e);
        }
    }

    fn transmit(&mut self, e: usize, parcel: Parcel, report: &mut StepReport) {
        self.edges[e].sent += parcel.units;
        self.sent_log[e].push((parcel.flow, parcel.hop));
        let flow = &mut self.flows[parcel.flow as usize];
        let next_hop = parcel.hop as usize + 1;
        match flow.path.get(next_hop) {
            None => {
                flow.delivered += parcel.units;
                flow.in_flight -= parcel.units;
                report.delivered += parcel.units;
            }
            Some(&next) => {
                let next = next.index();
                let bucket = &mut self.next_arrivals[next];
                match bucket.last_mut() {
                    Some(last) if last.flow == parcel.flow => last.units += parcel.units,
                    _ => bucket.push(Parcel { hop: next_hop as u32, ..parcel }),
                }
                self.mark_next(next);
            }
        }
    }

    fn mark_next(&mut self, e: usize) {
        if !self.in_next[e] {
            self.in_next[e] = true;
            self.next_pending.push(e as u32);
        }
    }

    /// Steps until every flow has finished or `max_steps` steps have run.
    pub fn run(&mut self, max_steps: u64) -> RunReport {
        let mut steps = Vec::new();
        while (steps.len() as u64) < max_steps && !self.all_finished() {
            steps.push(self.step());
        }
        RunReport { steps, flows: self.flow_stats() }
    }

    /// Like [`Engine::run`], calling `observe` after every step.
    pub fn run_observed(&mut self, max_steps: u64, mut observe: impl FnMut(&Engine, &StepReport)) -> RunReport {
        let mut steps = Vec::new();
        while (steps.len() as u64) < max_steps && !self.all_finished() {
            let report = self.step();
            observe(self, &report);
            steps.push(report);
        }
        RunReport { steps, flows: self.flow_stats() }
    }
}
