//! Dumbbell builder: every sender reaches router R1 over its own access
//! link, R1 and R2 share the bottleneck, and R2 fans out to the receivers.
//! ACKs return over mirrored links; the R2 to R1 direction is a plain FIFO.

use crate::error::ConfigError;
use crate::scenario::Scenario;
use crate::tcp::HEADER_BYTES;

use super::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeId {
    Sender(usize),
    Receiver(usize),
    Router1,
    Router2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkRole {
    /// Sender to R1, data.
    SenderAccess(usize),
    /// R1 to R2, data, RED-guarded.
    Bottleneck,
    /// R2 to receiver, data.
    ReceiverEgress(usize),
    /// Receiver to R2, ACKs.
    ReceiverAccess(usize),
    /// R2 to R1, ACKs.
    ReverseBottleneck,
    /// R1 to sender, ACKs.
    SenderEgress(usize),
}

/// One simplex link and the FIFO at its head.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub role: LinkRole,
    pub from: NodeId,
    pub to: NodeId,
    /// Bits per second.
    pub rate: f64,
    pub prop_delay: SimTime,
    /// Drop-tail limit in packets; `None` for unbounded host queues.
    pub capacity: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowSpec {
    pub group: usize,
    pub mtu: u32,
    pub mss: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub links: Vec<LinkSpec>,
    pub flows: Vec<FlowSpec>,
    pub bottleneck: usize,
    pub reverse_bottleneck: usize,
    pub sender_access: Vec<usize>,
    pub sender_egress: Vec<usize>,
    pub receiver_access: Vec<usize>,
    pub receiver_egress: Vec<usize>,
}

impl Topology {
    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    /// Two routers plus one sender and one receiver per flow.
    pub fn node_count(&self) -> usize {
        2 + 2 * self.flows.len()
    }

    pub fn router_count(&self) -> usize {
        2
    }

    /// Simplex links, each direction counted separately.
    pub fn simplex_link_count(&self) -> usize {
        self.links.len()
    }

    /// Full-duplex links: one access link per host plus the bottleneck.
    pub fn duplex_link_count(&self) -> usize {
        self.links.len() / 2
    }

    /// The link a packet takes when it leaves `node`.
    pub fn next_link(&self, node: NodeId, flow: usize, is_ack: bool) -> Option<usize> {
        match (node, is_ack) {
            (NodeId::Sender(f), false) => Some(self.sender_access[f]),
            (NodeId::Router1, false) => Some(self.bottleneck),
            (NodeId::Router2, false) => Some(self.receiver_egress[flow]),
            (NodeId::Receiver(f), true) => Some(self.receiver_access[f]),
            (NodeId::Router2, true) => Some(self.reverse_bottleneck),
            (NodeId::Router1, true) => Some(self.sender_egress[flow]),
            _ => None,
        }
    }
}

pub fn build_dumbbell(scenario: &Scenario) -> Result<Topology, ConfigError> {
    scenario.validate()?;
    let access_delay = SimTime::from_secs_f64(scenario.access_prop_delay);
    let bottleneck_delay = SimTime::from_secs_f64(scenario.bottleneck_prop_delay);
    let cap = Some(scenario.red.buffer_cap);

    let flows: Vec<FlowSpec> = scenario
        .groups
        .iter()
        .enumerate()
        .flat_map(|(group, g)| {
            (0..g.flow_count).map(move |_| FlowSpec {
                group,
                mtu: g.mtu,
                mss: g.mtu - HEADER_BYTES,
            })
        })
        .collect();
    let n = flows.len();

    let mut links = Vec::with_capacity(4 * n + 2);
    let mut add = |role, from, to, rate, prop_delay, capacity| {
        links.push(LinkSpec {
            role,
            from,
            to,
            rate,
            prop_delay,
            capacity,
        });
        links.len() - 1
    };

    let bottleneck = add(
        LinkRole::Bottleneck,
        NodeId::Router1,
        NodeId::Router2,
        scenario.bottleneck_rate,
        bottleneck_delay,
        cap,
    );
    let reverse_bottleneck = add(
        LinkRole::ReverseBottleneck,
        NodeId::Router2,
        NodeId::Router1,
        scenario.bottleneck_rate,
        bottleneck_delay,
        cap,
    );
    let mut sender_access = Vec::with_capacity(n);
    let mut sender_egress = Vec::with_capacity(n);
    let mut receiver_access = Vec::with_capacity(n);
    let mut receiver_egress = Vec::with_capacity(n);
    for f in 0..n {
        let rate = scenario.access_rate;
        sender_access.push(add(
            LinkRole::SenderAccess(f),
            NodeId::Sender(f),
            NodeId::Router1,
            rate,
            access_delay,
            None,
        ));
        sender_egress.push(add(
            LinkRole::SenderEgress(f),
            NodeId::Router1,
            NodeId::Sender(f),
            rate,
            access_delay,
            cap,
        ));
        receiver_egress.push(add(
            LinkRole::ReceiverEgress(f),
            NodeId::Router2,
            NodeId::Receiver(f),
            rate,
            access_delay,
            cap,
        ));
        receiver_access.push(add(
            LinkRole::ReceiverAccess(f),
            NodeId::Receiver(f),
            NodeId::Router2,
            rate,
            access_delay,
            None,
        ));
    }

    Ok(Topology {
        links,
        flows,
        bottleneck,
        reverse_bottleneck,
        sender_access,
        sender_egress,
        receiver_access,
        receiver_egress,
    })
}
