use crate::physical::RoundingMode;
use crate::topology::{Edge, OnProbability, RawInterference, RawLinkProcess, RawTopology};
use crate::traffic::{RawClass, RawKind, UtilitySpec};

use super::config::{ConfigDocument, ExperimentConfig, Mode, PolicySection, RunSection, VSetting};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: &'static str,
    pub description: &'static str,
    pub document: ConfigDocument,
}

impl Instance {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_document(&self.document).expect("bundled instances are valid")
    }
}

fn edges(list: &[(usize, usize, f64)]) -> Vec<Edge> {
    list.iter()
        .enumerate()
        .map(|(id, &(from, to, capacity))| Edge { id, from, to, capacity })
        .collect()
}

fn class(id: usize, kind: RawKind, source: usize, nodes: &[usize], utility: UtilitySpec) -> RawClass {
    let set = (!nodes.is_empty()).then(|| nodes.to_vec());
    RawClass {
        id,
        kind,
        source,
        destinations: if kind == RawKind::Multicast { None } else { set.clone() },
        terminals: if kind == RawKind::Multicast { set } else { None },
        utility,
        a_max: None,
    }
}

fn document(
    name: &str,
    topology: RawTopology,
    p_on: f64,
    classes: Vec<RawClass>,
    v: f64,
    slots: u64,
) -> ConfigDocument {
    ConfigDocument {
        name: Some(name.to_string()),
        topology,
        links: RawLinkProcess {
            p_on: OnProbability::Uniform(p_on),
            seed: 0,
        },
        classes,
        policy: PolicySection {
            v: VSetting::One(v),
            ..PolicySection::default()
        },
        run: RunSection {
            slots,
            seed: 1,
            theta: 1.0,
            rounding: RoundingMode::Stochastic,
            mode: Mode::Simulate,
            out: None,
        },
    }
}

/// Three edge-disjoint paths on 8 nodes: 0-3-4-5-7 and 0-6-7 serve class 0
/// (0 to 7), 4-2-1 serves class 1 (4 to 1). Wired, unit capacities.
pub fn unicast_fig1a() -> ConfigDocument {
    let topology = RawTopology {
        nodes: 8,
        directed: true,
        edges: edges(&[
            (0, 3, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (5, 7, 1.0),
            (0, 6, 1.0),
            (6, 7, 1.0),
            (4, 2, 1.0),
            (2, 1, 1.0),
        ]),
        interference: RawInterference::None,
    };
    let classes = vec![
        class(0, RawKind::Unicast, 0, &[7], UtilitySpec::log(1.0)),
        class(1, RawKind::Unicast, 4, &[1], UtilitySpec::log(1.0)),
    ];
    document("unicast-fig1a", topology, 1.0, classes, 100.0, 100_000)
}

/// 3x3 grid under primary interference, one broadcast class rooted at a
/// corner, every link ON independently with probability `p_on`.
pub fn broadcast_grid(p_on: f64) -> ConfigDocument {
    let id = |r: usize, c: usize| 3 * r + c;
    let mut list = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            if c + 1 < 3 {
                list.push((id(r, c), id(r, c + 1), 1.0));
            }
            if r + 1 < 3 {
                list.push((id(r, c), id(r + 1, c), 1.0));
            }
        }
    }
    let topology = RawTopology {
        nodes: 9,
        directed: false,
        edges: edges(&list),
        interference: RawInterference::Primary,
    };
    let mut broadcast = class(0, RawKind::Broadcast, 0, &[], UtilitySpec::log(1.0));
    broadcast.a_max = Some(2.0);
    let name = format!("broadcast-grid-p{p_on:.1}");
    let mut doc = document(&name, topology, p_on, vec![broadcast], 50.0, 100_000);
    doc.run.rounding = RoundingMode::Carry;
    doc
}

/// One unit-capacity edge and one log-utility class across it.
pub fn single_edge() -> ConfigDocument {
    let topology = RawTopology {
        nodes: 2,
        directed: true,
        edges: edges(&[(0, 1, 1.0)]),
        interference: RawInterference::None,
    };
    let classes = vec![class(0, RawKind::Unicast, 0, &[1], UtilitySpec::log(1.0))];
    document("single-edge", topology, 1.0, classes, 1.0, 10_000)
}

/// Undirected wired 5-node ring with two chords carrying one class of each kind.
pub fn mixed_5node() -> ConfigDocument {
    let topology = RawTopology {
        nodes: 5,
        directed: false,
        edges: edges(&[
            (0, 1, 1.0),
            (1, 2, 2.0),
            (2, 3, 1.0),
            (3, 4, 1.5),
            (4, 0, 1.0),
            (0, 2, 2.0),
            (1, 3, 1.0),
        ]),
        interference: RawInterference::None,
    };
    let classes = vec![
        class(0, RawKind::Unicast, 0, &[3], UtilitySpec::log(1.0)),
        class(1, RawKind::Broadcast, 1, &[], UtilitySpec::log(2.0)),
        class(2, RawKind::Multicast, 2, &[0, 4], UtilitySpec::alpha_fair(1.0, 0.5)),
        class(3, RawKind::Anycast, 4, &[1, 2], UtilitySpec::log(0.5)),
    ];
    document("mixed-5node", topology, 1.0, classes, 10.0, 10_000)
}

pub fn bundled_instances() -> Vec<Instance> {
    let mut out = vec![
        Instance {
            name: "unicast-fig1a",
            description: "two unicast classes on three edge-disjoint paths, wired",
            document: unicast_fig1a(),
        },
        Instance {
            name: "broadcast-grid",
            description: "broadcast on a 3x3 grid, primary interference, p_on = 0.6",
            document: broadcast_grid(0.6),
        },
    ];
    for (name, p) in [
        ("broadcast-grid-p0.2", 0.2),
        ("broadcast-grid-p0.6", 0.6),
        ("broadcast-grid-p1.0", 1.0),
    ] {
        out.push(Instance {
            name,
            description: "broadcast on a 3x3 grid, primary interference",
            document: broadcast_grid(p),
        });
    }
    out.push(Instance {
        name: "single-edge",
        description: "one edge, one log-utility class; optimum ln 2",
        document: single_edge(),
    });
    out.push(Instance {
        name: "mixed-5node",
        description: "wired 5-node graph with unicast, broadcast, multicast and anycast classes",
        document: mixed_5node(),
    });
    out
}

pub fn instance(name: &str) -> Option<ExperimentConfig> {
    bundled_instances().into_iter().find(|i| i.name == name).map(|i| {
        let mut cfg = i.config();
        cfg.name = name.to_string();
        cfg
    })
}
