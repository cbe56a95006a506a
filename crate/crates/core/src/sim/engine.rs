use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::metrics::{
    group_goodput, group_plr, FlowReport, GroupReport, QueueAudit, QueueCounters, RunReport,
};
use crate::red::{RedQueue, Verdict};
use crate::scenario::Scenario;
use crate::tcp::{Segment, TcpConfig, TcpReceiver, TcpSender};

use super::event::EventQueue;
use super::time::SimTime;
use super::topology::{build_dumbbell, LinkSpec, NodeId, Topology};

#[derive(Debug)]
enum Event {
    FlowStart(usize),
    Arrival { node: NodeId, segment: Segment },
    ServiceComplete(usize),
    Timer(usize),
    MeasurementBoundary,
}

struct Link {
    spec: LinkSpec,
    queue: VecDeque<Segment>,
    in_service: Option<Segment>,
    red: Option<RedQueue>,
    departures: u64,
    tail_drops: u64,
    max_occupancy: usize,
}

impl Link {
    fn occupancy(&self) -> usize {
        self.queue.len() + usize::from(self.in_service.is_some())
    }
}

struct Flow {
    sender: TcpSender,
    receiver: TcpReceiver,
    /// Time of the pending timer event, if one is scheduled.
    timer_event: Option<SimTime>,
    una_at_warmup: u64,
}

/// One dumbbell run. Build with [`Simulation::new`], then call [`Simulation::run`].
pub struct Simulation {
    scenario: Scenario,
    topology: Topology,
    events: EventQueue<Event>,
    links: Vec<Link>,
    flows: Vec<Flow>,
    rng: ChaCha8Rng,
    warmup: SimTime,
    end: SimTime,
    measuring: bool,
    /// Bottleneck counters per group over the whole run.
    totals_by_group: Vec<QueueCounters>,
    /// Bottleneck counters per group within the measurement interval.
    window_by_group: Vec<QueueCounters>,
    accepted_payload_by_group: Vec<u64>,
    dispatched: u64,
    causality_violations: u64,
    idle_with_backlog: u64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        let topology = build_dumbbell(scenario)?;
        let red = RedQueue::new(scenario.red.clone())?;
        let links = topology
            .links
            .iter()
            .enumerate()
            .map(|(i, spec)| Link {
                spec: spec.clone(),
                queue: VecDeque::new(),
                in_service: None,
                red: (i == topology.bottleneck).then(|| red.clone()),
                departures: 0,
                tail_drops: 0,
                max_occupancy: 0,
            })
            .collect();

        // Draw order: one start-time jitter per flow, in flow order, before
        // anything else touches the generator.
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let flows = topology
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let start = SimTime::from_secs_f64(rng.gen::<f64>() * scenario.start_jitter);
                let config = TcpConfig {
                    variant: scenario.tcp_variant,
                    mss: f.mss,
                    rcv_wnd: scenario.rcv_wnd,
                    timer_granularity: scenario.timer_granularity,
                    min_rto_ticks: scenario.min_rto_ticks,
                    initial_rto: 1.0,
                    start_time: start,
                };
                Flow {
                    sender: TcpSender::new(i, config),
                    receiver: TcpReceiver::new(i, scenario.tcp_variant),
                    timer_event: None,
                    una_at_warmup: 0,
                }
            })
            .collect::<Vec<_>>();

        let groups = scenario.groups.len();
        let mut sim = Self {
            scenario: scenario.clone(),
            topology,
            events: EventQueue::new(),
            links,
            flows,
            rng,
            warmup: SimTime::from_secs_f64(scenario.warmup),
            end: SimTime::from_secs_f64(scenario.duration),
            measuring: scenario.warmup == 0.0,
            totals_by_group: vec![QueueCounters::default(); groups],
            window_by_group: vec![QueueCounters::default(); groups],
            accepted_payload_by_group: vec![0; groups],
            dispatched: 0,
            causality_violations: 0,
            idle_with_backlog: 0,
        };
        if !sim.flows.is_empty() {
            if sim.warmup > SimTime::ZERO {
                sim.events.schedule(sim.warmup, Event::MeasurementBoundary);
            }
            for i in 0..sim.flows.len() {
                let at = sim.flows[i].sender.config().start_time;
                sim.events.schedule(at, Event::FlowStart(i));
            }
        }
        Ok(sim)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Runs until the configured duration and summarizes the measurement interval.
    pub fn run(mut self) -> Result<RunReport, SimError> {
        let mut last = SimTime::ZERO;
        loop {
            let Some(at) = self.events.peek_time() else {
                if self.flows.is_empty() {
                    break;
                }
                return Err(SimError::Stalled {
                    at: self.events.now().as_secs_f64(),
                    flows: self.flows.len(),
                });
            };
            if at > self.end {
                break;
            }
            let (now, _, event) = self.events.pop().expect("peeked");
            if now < last {
                self.causality_violations += 1;
            }
            last = now;
            self.dispatched += 1;
            self.dispatch(now, event);
            let b = &self.links[self.topology.bottleneck];
            if b.in_service.is_none() && !b.queue.is_empty() {
                self.idle_with_backlog += 1;
            }
        }
        Ok(self.report())
    }

    fn dispatch(&mut self, now: SimTime, event: Event) {
        match event {
            Event::FlowStart(f) => {
                let out = self.flows[f].sender.start(now);
                self.transmit(f, out, now);
            }
            Event::Arrival { node, segment } => self.arrive(node, segment, now),
            Event::ServiceComplete(l) => self.complete_service(l, now),
            Event::Timer(f) => self.timer(f, now),
            Event::MeasurementBoundary => {
                self.measuring = true;
                for flow in &mut self.flows {
                    flow.una_at_warmup = flow.sender.snd_una();
                }
            }
        }
    }

    fn transmit(&mut self, flow: usize, segments: Vec<Segment>, now: SimTime) {
        let link = self.topology.sender_access[flow];
        for seg in segments {
            self.enqueue(link, seg, now);
        }
        self.sync_timer(flow);
    }

    fn sync_timer(&mut self, flow: usize) {
        let f = &mut self.flows[flow];
        if let Some(deadline) = f.sender.timer_deadline() {
            if f.timer_event.is_none_or(|pending| pending > deadline) {
                f.timer_event = Some(deadline);
                self.events.schedule(deadline, Event::Timer(flow));
            }
        }
    }

    fn timer(&mut self, flow: usize, now: SimTime) {
        let f = &mut self.flows[flow];
        if f.timer_event != Some(now) {
            return;
        }
        f.timer_event = None;
        if matches!(f.sender.timer_deadline(), Some(d) if d <= now) {
            let seg = f.sender.on_timeout(now);
            self.transmit(flow, vec![seg], now);
        } else {
            self.sync_timer(flow);
        }
    }

    fn arrive(&mut self, node: NodeId, segment: Segment, now: SimTime) {
        match node {
            NodeId::Sender(f) => {
                let out = self.flows[f].sender.on_ack(&segment, now);
                self.transmit(f, out, now);
            }
            NodeId::Receiver(f) => {
                let ack = self.flows[f].receiver.receiver_on_data(&segment);
                let link = self.topology.receiver_access[f];
                self.enqueue(link, ack, now);
            }
            NodeId::Router1 | NodeId::Router2 => {
                let link = self
                    .topology
                    .next_link(node, segment.flow, segment.is_ack)
                    .expect("routers forward every packet");
                self.enqueue(link, segment, now);
            }
        }
    }

    fn enqueue(&mut self, link_idx: usize, segment: Segment, now: SimTime) {
        let link = &mut self.links[link_idx];
        if let Some(red) = link.red.as_mut() {
            debug_assert_eq!(
                red.state().q,
                link.queue.len() + usize::from(link.in_service.is_some())
            );
            let u: f64 = self.rng.gen();
            let decision = red.on_packet_arrival(segment.wire_size(), u);
            let group = self.topology.flows[segment.flow].group;
            self.totals_by_group[group].record(decision.verdict);
            if self.measuring {
                self.window_by_group[group].record(decision.verdict);
            }
            if decision.verdict != Verdict::Accept {
                return;
            }
            self.accepted_payload_by_group[group] += u64::from(segment.len);
        } else if link
            .spec
            .capacity
            .is_some_and(|cap| link.occupancy() >= cap)
        {
            link.tail_drops += 1;
            return;
        }
        link.queue.push_back(segment);
        link.max_occupancy = link.max_occupancy.max(link.occupancy());
        if link.in_service.is_none() {
            self.start_service(link_idx, now);
        }
    }

    fn start_service(&mut self, link_idx: usize, now: SimTime) {
        let link = &mut self.links[link_idx];
        if let Some(seg) = link.queue.pop_front() {
            let done = now + SimTime::serialization(seg.wire_size(), link.spec.rate);
            link.in_service = Some(seg);
            self.events.schedule(done, Event::ServiceComplete(link_idx));
        }
    }

    fn complete_service(&mut self, link_idx: usize, now: SimTime) {
        let link = &mut self.links[link_idx];
        let seg = link
            .in_service
            .take()
            .expect("service completion without a packet");
        link.departures += 1;
        if let Some(red) = link.red.as_mut() {
            red.on_departure();
        }
        let dest = link.spec.to;
        let arrive_at = now + link.spec.prop_delay;
        let lost = link_idx == self.topology.bottleneck
            && self.scenario.bottleneck_loss > 0.0
            && self.rng.gen::<f64>() < self.scenario.bottleneck_loss;
        if !lost {
            self.events.schedule(
                arrive_at,
                Event::Arrival {
                    node: dest,
                    segment: seg,
                },
            );
        }
        self.start_service(link_idx, now);
    }

    fn report(self) -> RunReport {
        let s = &self.scenario;
        let interval = s.duration - s.warmup;
        let flows_n = self.flows.len();
        let group_of: Vec<usize> = self.topology.flows.iter().map(|f| f.group).collect();
        let delivered: Vec<u64> = self
            .flows
            .iter()
            .map(|f| f.sender.snd_una() - f.una_at_warmup)
            .collect();
        let goodput = group_goodput(&delivered, interval, &group_of, s.groups.len());
        let mtus: Vec<u32> = s.groups.iter().map(|g| g.mtu).collect();
        let (plr, mut diagnostics) = group_plr(&self.window_by_group, &mtus);

        let groups = s
            .groups
            .iter()
            .enumerate()
            .map(|(g, spec)| GroupReport {
                mtu: spec.mtu,
                flow_count: spec.flow_count,
                goodput_bps: goodput[g],
                plr: plr[g],
                counters: self.window_by_group[g],
                accepted_payload_total: self.accepted_payload_by_group[g],
                delivered_total: self
                    .flows
                    .iter()
                    .zip(&group_of)
                    .filter(|(_, &fg)| fg == g)
                    .map(|(f, _)| f.sender.snd_una())
                    .sum(),
            })
            .collect();

        let flows = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| FlowReport {
                flow: i,
                group: group_of[i],
                mtu: self.topology.flows[i].mtu,
                delivered_bytes: delivered[i],
                goodput_bps: delivered[i] as f64 * 8.0 / interval,
                sender: f.sender.stats(),
            })
            .collect();

        let mut totals = QueueCounters::default();
        for c in &self.totals_by_group {
            totals.merge(c);
        }
        let mut window = QueueCounters::default();
        for c in &self.window_by_group {
            window.merge(c);
        }
        let b = &self.links[self.topology.bottleneck];
        let bottleneck = QueueAudit {
            counters: totals,
            departures: b.departures,
            queued_at_end: b.occupancy() as u64,
            max_occupancy: b.max_occupancy,
            buffer_cap: s.red.buffer_cap,
        };
        if self.causality_violations > 0 {
            diagnostics.push(format!(
                "{} events dispatched out of order",
                self.causality_violations
            ));
        }
        if self.idle_with_backlog > 0 {
            diagnostics.push(format!(
                "bottleneck idle with a backlog after {} events",
                self.idle_with_backlog
            ));
        }
        debug_assert_eq!(flows_n, self.topology.flow_count());

        RunReport {
            scenario_name: s.name.clone(),
            red_variant: s.red.variant,
            tcp_variant: s.tcp_variant,
            bottleneck_delay_ms: s.bottleneck_delay_ms(),
            seed: s.seed,
            interval,
            groups,
            flows,
            bottleneck,
            window,
            bottleneck_rate: s.bottleneck_rate,
            events: self.dispatched,
            causality_violations: self.causality_violations,
            idle_with_backlog: self.idle_with_backlog,
            diagnostics,
        }
    }
}

/// Builds and runs `scenario`.
pub fn run(scenario: &Scenario) -> Result<RunReport, SimError> {
    Simulation::new(scenario)?.run()
}
