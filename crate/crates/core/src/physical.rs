//! The physical packet network.
//!
//! Packets follow the route fixed at admission, are replicated at branching
//! nodes of tree routes, and contend for links under the Extended Nearest To
//! Origin rule: copies that have travelled fewer hops go first, ties broken by
//! admission slot and then packet id. A link serves at most `floor(c_e)`
//! copies per slot, and a copy crosses at most one link per slot.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::SlotDecision;
use crate::routing::Route;
use crate::topology::{Activation, Topology};

/// How fluid admissions become whole packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundingMode {
    /// `floor(A)` packets plus one more with probability `frac(A)`.
    #[default]
    Stochastic,
    /// Accumulate fractions per class and release whole packets.
    Carry,
}

/// A packet replica waiting to cross one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PacketCopy {
    pub hops: u32,
    pub admitted: u64,
    pub packet: u64,
    /// Node the copy sits at, the tail of the edge it waits for.
    pub node: usize,
}

/// Priority key of a copy; smaller crosses first.
pub fn ento_priority(copy: &PacketCopy) -> (u32, u64, u64) {
    (copy.hops, copy.admitted, copy.packet)
}

#[derive(Debug)]
struct PacketRecord {
    class: usize,
    route: Arc<Route>,
    /// destinations that have not yet received a copy
    missing: usize,
    copies: usize,
}

#[derive(Debug)]
pub struct PhysicalState {
    queues: Vec<BinaryHeap<Reverse<PacketCopy>>>,
    packets: HashMap<u64, PacketRecord>,
    admitted: Vec<u64>,
    delivered: Vec<u64>,
    carry: Vec<f64>,
    rounding: RoundingMode,
    rng: ChaCha8Rng,
    slot: u64,
    next_packet: u64,
    will_cross: Vec<u64>,
    offered: Vec<f64>,
    rounding_slack: Vec<f64>,
}

impl PhysicalState {
    pub fn new(edge_count: usize, class_count: usize, rounding: RoundingMode, seed: u64) -> Self {
        PhysicalState {
            queues: vec![BinaryHeap::new(); edge_count],
            packets: HashMap::new(),
            admitted: vec![0; class_count],
            delivered: vec![0; class_count],
            carry: vec![0.0; class_count],
            rounding,
            rng: ChaCha8Rng::seed_from_u64(seed),
            slot: 0,
            next_packet: 0,
            will_cross: vec![0; edge_count],
            offered: vec![0.0; edge_count],
            rounding_slack: vec![0.0; edge_count],
        }
    }

    fn whole_packets(&mut self, class: usize, amount: f64) -> u64 {
        match self.rounding {
            RoundingMode::Stochastic => {
                let base = amount.floor();
                let extra = self.rng.gen::<f64>() < amount - base;
                base as u64 + extra as u64
            }
            RoundingMode::Carry => {
                self.carry[class] += amount;
                let whole = self.carry[class].floor();
                self.carry[class] -= whole;
                whole as u64
            }
        }
    }

    /// Admits the slot's packets, each stamped with its class route, and
    /// queues one copy per route arc leaving the source.
    pub fn admit(&mut self, decision: &SlotDecision) {
        for (class, (&amount, route)) in decision.admitted.iter().zip(&decision.routes).enumerate() {
            let count = self.whole_packets(class, amount);
            for &e in route.edges() {
                self.will_cross[e] += count;
                self.rounding_slack[e] += (count as f64 - amount).abs();
            }
            self.admitted[class] += count;
            if count == 0 {
                continue;
            }
            let route = Arc::new(route.clone());
            for _ in 0..count {
                let id = self.next_packet;
                self.next_packet += 1;
                let mut copies = 0;
                for arc in route.arcs_from(route.root) {
                    self.queues[arc.edge].push(Reverse(PacketCopy {
                        hops: 0,
                        admitted: self.slot,
                        packet: id,
                        node: route.root,
                    }));
                    copies += 1;
                }
                if route.destinations().is_empty() {
                    self.delivered[class] += 1;
                    continue;
                }
                self.packets.insert(
                    id,
                    PacketRecord {
                        class,
                        route: Arc::clone(&route),
                        missing: route.destinations().len(),
                        copies,
                    },
                );
            }
        }
    }

    /// Serves every activated ON link and forwards the crossing copies.
    pub fn step(&mut self, activation: &Activation, states: &[bool], topology: &Topology) -> Result<()> {
        let mut crossings = Vec::new();
        for edge in topology.edges() {
            if !(activation.contains(edge.id) && states[edge.id]) {
                continue;
            }
            self.offered[edge.id] += edge.capacity;
            let quota = edge.capacity.floor() as usize;
            for _ in 0..quota {
                match self.queues[edge.id].pop() {
                    Some(Reverse(copy)) => crossings.push((edge.id, copy)),
                    None => break,
                }
            }
        }

        for (edge, copy) in crossings {
            let record = self
                .packets
                .get_mut(&copy.packet)
                .ok_or_else(|| Error::Fault(format!("copy of unknown packet {}", copy.packet)))?;
            let arc = record
                .route
                .arcs()
                .iter()
                .find(|a| a.edge == edge && a.tail == copy.node)
                .copied()
                .ok_or_else(|| Error::Fault(format!("packet {} waited on edge {edge} off its route", copy.packet)))?;
            record.copies -= 1;
            let is_destination = record.route.is_destination(arc.head);
            if is_destination {
                record.missing -= 1;
                if record.missing == 0 {
                    self.delivered[record.class] += 1;
                }
            }
            let mut forwarded = 0;
            for next in record.route.arcs_from(arc.head) {
                self.queues[next.edge].push(Reverse(PacketCopy {
                    hops: copy.hops + 1,
                    admitted: copy.admitted,
                    packet: copy.packet,
                    node: arc.head,
                }));
                forwarded += 1;
            }
            if forwarded == 0 && !is_destination {
                return Err(Error::Fault(format!(
                    "packet {} stranded at node {} which is neither a branch nor a destination",
                    copy.packet, arc.head
                )));
            }
            record.copies += forwarded;
            if record.copies == 0 {
                self.packets.remove(&copy.packet);
            }
        }
        self.slot += 1;
        Ok(())
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Q_e: copies waiting to cross each edge.
    pub fn queue_lengths(&self) -> Vec<usize> {
        self.queues.iter().map(|q| q.len()).collect()
    }

    pub fn total_queued(&self) -> usize {
        self.queues.iter().map(|q| q.len()).sum()
    }

    pub fn admitted(&self, class: usize) -> u64 {
        self.admitted[class]
    }

    /// R_k: packets received by every destination of their route.
    pub fn delivered(&self, class: usize) -> u64 {
        self.delivered[class]
    }

    pub fn delivered_rate(&self, class: usize, slots: u64) -> f64 {
        assert!(slots > 0, "rate over an empty horizon");
        self.delivered[class] as f64 / slots as f64
    }

    /// Copies of `class` currently queued anywhere.
    pub fn copies_in_flight(&self, class: usize) -> usize {
        self.queues
            .iter()
            .flat_map(|q| q.iter())
            .filter(|Reverse(c)| self.packets.get(&c.packet).is_some_and(|r| r.class == class))
            .count()
    }

    /// Copies at the head of each queue, in crossing order (test inspection).
    pub fn waiting(&self, edge: usize) -> Vec<PacketCopy> {
        let mut copies: Vec<PacketCopy> = self.queues[edge].iter().map(|r| r.0).collect();
        copies.sort();
        copies
    }

    /// Largest amount by which admitted-minus-offered exceeds the virtual queue
    /// plus the accumulated rounding error, over all edges. Non-positive when
    /// physical arrivals stay coupled to the virtual ones.
    pub fn coupling_excess(&self, virtual_queues: &[f64]) -> f64 {
        (0..self.queues.len())
            .map(|e| self.will_cross[e] as f64 - self.offered[e] - virtual_queues[e] - self.rounding_slack[e])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks that every queued copy waits on an edge of its own route, at
    /// the edge's tail.
    pub fn audit(&self) -> Result<()> {
        for (edge, queue) in self.queues.iter().enumerate() {
            for Reverse(copy) in queue.iter() {
                let record = self
                    .packets
                    .get(&copy.packet)
                    .ok_or_else(|| Error::Fault(format!("orphan copy of packet {}", copy.packet)))?;
                let arc = record.route.arcs().iter().find(|a| a.edge == edge);
                match arc {
                    Some(a) if a.tail == copy.node && a.depth == copy.hops => {}
                    _ => {
                        return Err(Error::Fault(format!(
                            "packet {} waits on edge {edge} off its route",
                            copy.packet
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::Router;
    use crate::topology::{validate_topology, Edge, RawInterference, RawTopology};
    use crate::traffic::{FlowKind, TrafficClass, UtilitySpec};

    fn topo(nodes: usize, edges: &[(usize, usize)], directed: bool) -> Topology {
        validate_topology(&RawTopology {
            nodes,
            directed,
            edges: edges
                .iter()
                .enumerate()
                .map(|(id, &(from, to))| Edge {
                    id,
                    from,
                    to,
                    capacity: 1.0,
                })
                .collect(),
            interference: RawInterference::None,
        })
        .unwrap()
    }

    fn class(kind: FlowKind) -> TrafficClass {
        TrafficClass {
            id: 0,
            kind,
            utility: UtilitySpec::log(1.0),
            a_max: 10.0,
        }
    }

    fn decision(t: &Topology, c: &TrafficClass, amount: f64) -> SlotDecision {
        let (route, cost) = Router::new(t, 8).shortest_route(c, &vec![0.0; t.edge_count()]).unwrap();
        SlotDecision {
            admitted: vec![amount],
            routes: vec![route],
            costs: vec![cost],
            activation: Activation::empty(t.edge_count()),
            exact_schedule: true,
        }
    }

    #[test]
    fn integer_admissions_are_exact() {
        let t = topo(2, &[(0, 1)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 1 });
        let mut s = PhysicalState::new(1, 1, RoundingMode::Stochastic, 1);
        s.admit(&decision(&t, &c, 3.0));
        assert_eq!(s.admitted(0), 3);
        s.admit(&decision(&t, &c, 0.0));
        assert_eq!(s.admitted(0), 3);
    }

    #[test]
    fn stochastic_rounding_keeps_the_mean() {
        let t = topo(2, &[(0, 1)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 1 });
        let d = decision(&t, &c, 2.0 / 3.0);
        let mut s = PhysicalState::new(1, 1, RoundingMode::Stochastic, 11);
        let slots = 100_000;
        for _ in 0..slots {
            s.admit(&d);
        }
        let mean = s.admitted(0) as f64 / slots as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn carry_rounding_tracks_fluid_total() {
        let t = topo(2, &[(0, 1)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 1 });
        let d = decision(&t, &c, 0.25);
        let mut s = PhysicalState::new(1, 1, RoundingMode::Carry, 0);
        for _ in 0..40 {
            s.admit(&d);
        }
        assert_eq!(s.admitted(0), 10);
    }

    #[test]
    fn ento_orders_by_hops_then_age() {
        let a = PacketCopy {
            hops: 10,
            admitted: 7,
            packet: 3,
            node: 0,
        };
        let b = PacketCopy {
            hops: 20,
            admitted: 1,
            packet: 1,
            node: 0,
        };
        let c = PacketCopy {
            hops: 10,
            admitted: 5,
            packet: 9,
            node: 0,
        };
        let mut heap: BinaryHeap<Reverse<PacketCopy>> = [a, b, c].into_iter().map(Reverse).collect();
        assert_eq!(heap.pop().unwrap().0, c);
        assert_eq!(heap.pop().unwrap().0, a);
        assert_eq!(heap.pop().unwrap().0, b);
        assert_eq!(
            ento_priority(&PacketCopy {
                hops: 0,
                admitted: 0,
                packet: 0,
                node: 0
            }),
            (0, 0, 0)
        );
    }

    #[test]
    fn unicast_packet_advances_one_hop_per_slot() {
        let t = topo(3, &[(0, 1), (1, 2)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 2 });
        let mut s = PhysicalState::new(2, 1, RoundingMode::Carry, 0);
        s.admit(&decision(&t, &c, 1.0));
        let all = Activation::from_edges(2, &[0, 1]);
        s.step(&all, &[true, true], &t).unwrap();
        assert_eq!(s.queue_lengths(), vec![0, 1]);
        assert_eq!(s.waiting(1)[0].hops, 1);
        s.audit().unwrap();
        s.step(&all, &[true, true], &t).unwrap();
        assert_eq!(s.delivered(0), 1);
        assert_eq!(s.total_queued(), 0);
    }

    #[test]
    fn broadcast_copies_fan_out() {
        // star: root 0 - 1, hub 1 - {2, 3}
        let t = topo(4, &[(0, 1), (1, 2), (1, 3)], false);
        let c = class(FlowKind::Broadcast { root: 0 });
        let mut s = PhysicalState::new(3, 1, RoundingMode::Carry, 0);
        s.admit(&decision(&t, &c, 1.0));
        let all = Activation::from_edges(3, &[0, 1, 2]);
        s.step(&all, &[true; 3], &t).unwrap();
        assert_eq!(s.queue_lengths(), vec![0, 1, 1]);
        assert_eq!(s.delivered(0), 0);
        s.step(&all, &[true; 3], &t).unwrap();
        assert_eq!(s.delivered(0), 1);
        assert_eq!(s.total_queued(), 0);
    }

    #[test]
    fn capacity_limits_crossings_to_the_ento_minimum() {
        let t = topo(2, &[(0, 1)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 1 });
        let mut s = PhysicalState::new(1, 1, RoundingMode::Carry, 0);
        s.admit(&decision(&t, &c, 3.0));
        let first = s.waiting(0)[0];
        s.step(&Activation::from_edges(1, &[0]), &[true], &t).unwrap();
        assert_eq!(s.delivered(0), 1);
        assert_eq!(s.total_queued(), 2);
        assert!(s.waiting(0).iter().all(|c| c.packet != first.packet));
    }

    #[test]
    fn off_links_serve_nothing() {
        let t = topo(2, &[(0, 1)], true);
        let c = class(FlowKind::Unicast { source: 0, dest: 1 });
        let mut s = PhysicalState::new(1, 1, RoundingMode::Carry, 0);
        s.admit(&decision(&t, &c, 2.0));
        s.step(&Activation::from_edges(1, &[0]), &[false], &t).unwrap();
        s.step(&Activation::empty(1), &[true], &t).unwrap();
        assert_eq!(s.total_queued(), 2);
        assert_eq!(s.delivered_rate(0, 2), 0.0);
    }

    #[test]
    fn two_node_broadcast_counts_single_receiver() {
        let t = topo(2, &[(0, 1)], false);
        let c = class(FlowKind::Broadcast { root: 0 });
        let mut s = PhysicalState::new(1, 1, RoundingMode::Carry, 0);
        let on = Activation::from_edges(1, &[0]);
        for _ in 0..5 {
            s.admit(&decision(&t, &c, 1.0));
            s.step(&on, &[true], &t).unwrap();
        }
        assert_eq!(s.delivered(0), 5);
    }
}
