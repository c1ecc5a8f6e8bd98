//! A synthetic model that plays a whole design session, used to build the
//! bundled transcript and the seeded audit workspaces.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use add_core::doc::{parse_iteration_plan, IterationPlan};
use add_core::engine::{GateDecision, JournalEvent, Phase, Session};
use add_core::gateway::{Gateway, ModelRequest, ModelResponse, TranscriptWriter};
use add_core::method::step_heading;
use add_core::store::{DesignMode, Workspace, CONFIG_FILE, DRIVERS_FILE, EVENTS_FILE};
use chrono::{DateTime, Duration, Utc};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixtures_dir() -> PathBuf {
    repo_root().join("fixtures")
}

pub struct Components {
    pub container: &'static str,
    pub items: &'static [(&'static str, &'static str)],
    pub links: &'static [(&'static str, &'static str, &'static str)],
}

pub struct Sequence {
    pub heading: &'static str,
    pub actor: &'static str,
    pub steps: &'static [(&'static str, &'static str, &'static str)],
}

pub struct IterSpec {
    pub refine: &'static [&'static str],
    pub concepts: &'static [[&'static str; 3]],
    pub containers: &'static [(&'static str, &'static str)],
    pub links: &'static [(&'static str, &'static str, &'static str)],
    pub components: &'static [Components],
    pub sequences: &'static [Sequence],
    pub interfaces: &'static [&'static str],
    pub instantiation: &'static [[&'static str; 2]],
    pub decisions: &'static [[&'static str; 4]],
    pub analysis: &'static str,
}

pub struct Case {
    pub name: &'static str,
    pub intro: &'static str,
    pub drivers: String,
    pub plan: String,
    pub externals: &'static [(&'static str, &'static str)],
    pub domain: &'static str,
    /// A declared driver no iteration addresses.
    pub unplanned: Option<&'static str>,
    pub iterations: Vec<IterSpec>,
}

impl Case {
    fn plan(&self) -> IterationPlan {
        parse_iteration_plan(&self.plan).unwrap().value
    }
}

/// The defects the seeded fixtures carry, one per fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    /// A sequence participant drawn nowhere else (last iteration).
    Orphan,
    /// Steps 5 and 6 of the last iteration leave the architecture alone.
    Untouched,
    /// A component diagram for a container the container diagram lacks.
    ContainerStale,
    /// The last iteration adds no decision row.
    MissingDecisions,
    /// A sequence diagram for a driver no iteration addresses.
    ScopeCreep,
    /// Iteration 1 has no concept table.
    MissingStep4,
}

impl Defect {
    pub const ALL: [Defect; 6] = [
        Defect::Orphan,
        Defect::Untouched,
        Defect::ContainerStale,
        Defect::MissingDecisions,
        Defect::ScopeCreep,
        Defect::MissingStep4,
    ];

    pub fn fixture_name(self) -> &'static str {
        match self {
            Defect::Orphan => "orphan-element",
            Defect::Untouched => "arch-doc-untouched",
            Defect::ContainerStale => "container-stale",
            Defect::MissingDecisions => "missing-decisions",
            Defect::ScopeCreep => "scope-creep",
            Defect::MissingStep4 => "missing-step4-table",
        }
    }

    pub fn rule_id(self) -> &'static str {
        match self {
            Defect::Orphan => "R-ORPHAN_ELEMENT",
            Defect::Untouched => "R-ARCH_DOC_UNTOUCHED",
            Defect::ContainerStale => "R-CONTAINER_STALE",
            Defect::MissingDecisions => "R-MISSING_DECISIONS",
            Defect::ScopeCreep => "R-SCOPE_CREEP",
            Defect::MissingStep4 => "R-STEP4_TABLE",
        }
    }
}

/// How far the design has progressed when a document is written.
#[derive(Debug, Clone, Copy)]
struct Progress {
    iteration: u32,
    step: u8,
}

struct Model<'a> {
    case: &'a Case,
    defect: Option<Defect>,
    plan: IterationPlan,
}

impl Model<'_> {
    fn last(&self) -> u32 {
        self.plan.last_number().unwrap()
    }

    fn hit(&self, d: Defect, iteration: u32) -> bool {
        self.defect == Some(d)
            && iteration
                == match d {
                    Defect::MissingStep4 => 1,
                    _ => self.last(),
                }
    }

    fn shows_views(&self, n: u32, p: Progress) -> bool {
        if n < p.iteration {
            return !self.hit(Defect::Untouched, n);
        }
        n == p.iteration && p.step >= 5 && !self.hit(Defect::Untouched, n)
    }

    fn shows_decisions(&self, n: u32, p: Progress) -> bool {
        if self.hit(Defect::MissingDecisions, n) {
            return false;
        }
        let from = if self.hit(Defect::Untouched, n) { 7 } else { 6 };
        n < p.iteration || (n == p.iteration && p.step >= from)
    }

    fn specs_with_views(&self, p: Progress) -> impl Iterator<Item = (u32, &IterSpec)> {
        self.case
            .iterations
            .iter()
            .zip(1u32..)
            .map(|(s, n)| (n, s))
            .filter(move |(n, _)| self.shows_views(*n, p))
    }

    fn context_diagram(&self) -> String {
        let mut d = String::from("flowchart LR\n    Users[\"Users\"]:::person\n");
        let _ = writeln!(d, "    System[\"{}\"]", self.case.name);
        for (id, label) in self.case.externals {
            let _ = writeln!(d, "    {id}[\"{label}\"]:::external");
        }
        d.push_str("    Users --> System\n");
        for (id, _) in self.case.externals {
            let _ = writeln!(d, "    System --> {id}");
        }
        d
    }

    fn architecture(&self, p: Progress) -> String {
        let c = self.case;
        let mut out = format!("# Architecture: {}\n\n# 1.- Introduction\n\n{}\n", c.name, c.intro);
        out.push_str("\n# 2.- Context diagram\n\n");
        out.push_str(&fence("mermaid", &self.context_diagram()));
        out.push_str("\n# 3.- Architectural drivers\n\nThe drivers are listed in `ArchitecturalDrivers.md`; the iteration plan assigns them to iterations.\n");
        out.push_str("\n# 4.- Domain model\n\n");
        out.push_str(&fence("mermaid", c.domain));

        out.push_str("\n# 5.- Container diagram\n\n");
        let views: Vec<(u32, &IterSpec)> = self.specs_with_views(p).collect();
        if views.is_empty() {
            out.push_str("Containers are introduced by the first iteration.\n");
        } else {
            let mut d = String::from("flowchart TD\n    Users[\"Users\"]:::person\n");
            for (_, s) in &views {
                for (id, label) in s.containers {
                    let _ = writeln!(d, "    {id}[\"{label}\"]");
                }
            }
            for (id, label) in c.externals {
                let _ = writeln!(d, "    {id}[\"{label}\"]:::external");
            }
            for (_, s) in &views {
                for (a, b, l) in s.links {
                    let _ = writeln!(d, "    {a} -->|{l}| {b}");
                }
            }
            out.push_str(&fence("mermaid", &d));
        }

        out.push_str("\n# 6.- Component diagrams\n");
        let mut any = false;
        for (n, s) in &views {
            for comp in s.components {
                any = true;
                out.push_str(&component_section(comp));
            }
            if self.hit(Defect::ContainerStale, *n) {
                out.push_str(&component_section(&Components {
                    container: "Notification Service",
                    items: &[("NotificationDispatcher", "Notification Dispatcher"), ("TemplateStore", "Template Store")],
                    links: &[("NotificationDispatcher", "TemplateStore", "loads templates")],
                }));
            }
        }
        if !any {
            out.push_str("\nComponents are added as containers are refined.\n");
        }

        out.push_str("\n# 7.- Sequence diagrams\n");
        let mut any = false;
        for (n, s) in &views {
            for seq in s.sequences {
                any = true;
                out.push_str(&sequence_section(seq.heading, seq.actor, seq.steps));
            }
            let anchor = c.iterations[0].containers[0].0;
            if self.hit(Defect::Orphan, *n) {
                let driver = self.plan.get(*n).unwrap().driver_refs.last().unwrap();
                let heading = format!("{driver}: Failover to the backup region");
                let steps = [
                    ("PaymentRecoveryManager", anchor, "Initiate failover"),
                    ("PaymentRecoveryManager", anchor, "Activate backup region"),
                    ("PaymentRecoveryManager", anchor, "Update routes"),
                ];
                out.push_str(&sequence_section(&heading, "Operator", &steps));
            }
            if self.hit(Defect::ScopeCreep, *n) {
                let driver = c.unplanned.expect("case has an unplanned driver");
                let heading = format!("{driver}: Search response time");
                out.push_str(&sequence_section(&heading, "Visitor", &[("Visitor", anchor, "Search events")]));
            }
        }
        if !any {
            out.push_str("\nOne sequence diagram is added for each driver an iteration addresses.\n");
        }

        out.push_str("\n# 8.- Interfaces\n\n");
        let interfaces: Vec<&str> = views.iter().flat_map(|(_, s)| s.interfaces.iter().copied()).collect();
        if interfaces.is_empty() {
            out.push_str("Interfaces are defined as elements are instantiated.\n");
        } else {
            for i in interfaces {
                let _ = writeln!(out, "- {i}");
            }
        }

        out.push_str("\n# 9.- Design decisions\n\n| Driver | Decision | Rationale | Discarded alternative |\n| --- | --- | --- | --- |\n");
        for (n, s) in c.iterations.iter().zip(1u32..).map(|(s, n)| (n, s)) {
            if self.shows_decisions(n, p) {
                for row in s.decisions {
                    let _ = writeln!(out, "| {} | {} | {} | {} |", row[0], row[1], row[2], row[3]);
                }
            }
        }
        out
    }

    fn record(&self, n: u32, step: u8) -> String {
        let it = self.plan.get(n).unwrap();
        let s = &self.case.iterations[n as usize - 1];
        let mut out = format!("# Iteration {n}: {}\n", it.goal);
        for k in 2..=step {
            let _ = write!(out, "\n## {}\n\n", step_heading(k));
            match k {
                2 => {
                    out.push_str("Drivers selected for this iteration:\n\n");
                    for id in &it.driver_refs {
                        let _ = writeln!(out, "- {id}");
                    }
                }
                3 => {
                    for e in s.refine {
                        let _ = writeln!(out, "- **{e}**: refined in this iteration");
                    }
                }
                4 if self.hit(Defect::MissingStep4, n) => {
                    let names: Vec<&str> = s.concepts.iter().map(|r| r[0]).collect();
                    let _ = writeln!(out, "The selected concepts are {}.", names.join(", "));
                }
                4 => {
                    out.push_str("| Selected design concept | Rationale | Discarded Alternatives |\n| --- | --- | --- |\n");
                    for r in s.concepts {
                        let _ = writeln!(out, "| {} | {} | {} |", r[0], r[1], r[2]);
                    }
                }
                5 => {
                    out.push_str("| Instantiation decision | Rationale |\n| --- | --- |\n");
                    for r in s.instantiation {
                        let _ = writeln!(out, "| {} | {} |", r[0], r[1]);
                    }
                }
                6 => out.push_str("The decisions of this iteration are recorded in the architecture document.\n"),
                _ => {
                    out.push_str(s.analysis);
                    out.push('\n');
                }
            }
        }
        out
    }

    fn respond(&self, phase: Phase) -> String {
        match phase {
            Phase::ReviewDrivers => format!(
                "The drivers of the {} are complete enough to start. Priorities are set for user stories and scenarios.",
                self.case.name
            ),
            Phase::DomainModel => format!(
                "Domain model below.\n\n{}",
                file_block("Design/DomainModel.md", &format!("# Domain Model\n\n{}", fence("mermaid", self.case.domain)))
            ),
            Phase::IterationPlanning => format!("Proposed plan.\n\n{}", file_block("Design/IterationPlan.md", &self.case.plan)),
            Phase::Skeleton => format!(
                "Initial document.\n\n{}",
                file_block("Design/Architecture.md", &self.architecture(Progress { iteration: 0, step: 7 }))
            ),
            Phase::Iterating { iteration, step } => {
                let p = Progress { iteration, step };
                let record_path = format!("Design/Iteration{iteration}.md");
                let mut out = format!("Iteration {iteration}, step {step}.\n\n");
                out.push_str(&file_block(&record_path, &self.record(iteration, step)));
                let arch_changes = match step {
                    5 => self.shows_views(iteration, p),
                    6 | 7 => self.shows_decisions(iteration, p) && !self.shows_decisions(iteration, Progress { iteration, step: step - 1 }),
                    _ => false,
                };
                if arch_changes {
                    out.push_str("\n\n");
                    out.push_str(&file_block("Design/Architecture.md", &self.architecture(p)));
                }
                out
            }
            Phase::Finished => String::new(),
        }
    }
}

fn fence(tag: &str, body: &str) -> String {
    format!("```{tag}\n{}\n```\n", body.trim_end())
}

fn file_block(path: &str, content: &str) -> String {
    format!("````markdown\nfile: {path}\n{}\n````", content.trim_end())
}

fn component_section(c: &Components) -> String {
    let mut d = String::from("flowchart TD\n");
    for (id, label) in c.items {
        let _ = writeln!(d, "    {id}[\"{label}\"]");
    }
    for (a, b, l) in c.links {
        let _ = writeln!(d, "    {a} -->|{l}| {b}");
    }
    format!("\n## {} components\n\n{}", c.container, fence("mermaid", &d))
}

fn sequence_section(heading: &str, actor: &str, steps: &[(&str, &str, &str)]) -> String {
    let mut d = String::from("sequenceDiagram\n");
    let _ = writeln!(d, "    actor {actor}");
    let mut seen = vec![actor];
    for (a, b, _) in steps {
        for p in [*a, *b] {
            if !seen.contains(&p) {
                seen.push(p);
                let _ = writeln!(d, "    participant {p}");
            }
        }
    }
    for (a, b, m) in steps {
        let _ = writeln!(d, "    {a}->>{b}: {m}");
    }
    format!("\n## {heading}\n\n{}", fence("mermaid", &d))
}

/// A gateway answering every request the way a diligent (or, with a
/// defect, a forgetful) model would.
pub fn synthetic_gateway(case: &'static Case, defect: Option<Defect>) -> Gateway {
    let model = Model {
        case,
        defect,
        plan: case.plan(),
    };
    Gateway::scripted(move |req: &ModelRequest| {
        let phase: Phase = req.metadata["phase"].parse().unwrap();
        ModelResponse::stop(model.respond(phase))
    })
}

/// Plays a full session in `dir`, approving every gate.
pub fn play_session(dir: &Path, case: &'static Case, defect: Option<Defect>, transcript: Option<&Path>) -> Session {
    let ws = Workspace::scaffold(dir, DesignMode::Ddd).unwrap();
    fs::write(dir.join(DRIVERS_FILE), &case.drivers).unwrap();
    let mut gw = synthetic_gateway(case, defect);
    if let Some(t) = transcript {
        gw = gw.recording_to(TranscriptWriter::new(t));
    }
    let mut session = Session::start(ws, DesignMode::Ddd).unwrap();
    while session.phase() != Phase::Finished {
        if session.is_awaiting_gate() {
            session.record_gate(GateDecision::approve()).unwrap();
        } else {
            session.advance(&mut gw).unwrap();
        }
    }
    session
}

const FIXTURE_EPOCH: &str = "2025-01-01T00:00:00Z";

/// Rewrites journal timestamps to a fixed clock so fixtures are stable.
pub fn normalized_journal(events: &[JournalEvent]) -> String {
    let epoch: DateTime<Utc> = FIXTURE_EPOCH.parse().unwrap();
    let mut out = String::new();
    for e in events {
        let mut e = e.clone();
        e.timestamp = epoch + Duration::seconds(e.seq as i64);
        out.push_str(&serde_json::to_string(&e).unwrap());
        out.push('\n');
    }
    out
}

/// The files an audit needs: config, live artifacts and the journal.
pub fn audit_fixture_files(session: &Session) -> BTreeMap<String, String> {
    let ws = session.workspace();
    let mut files = BTreeMap::new();
    files.insert(CONFIG_FILE.to_string(), fs::read_to_string(ws.path(CONFIG_FILE)).unwrap());
    for (path, content) in ws.live_contents().unwrap() {
        files.insert(path.to_string(), content);
    }
    files.insert(EVENTS_FILE.to_string(), normalized_journal(session.journal()));
    files
}

pub fn write_files(root: &Path, files: &BTreeMap<String, String>) {
    for (rel, content) in files {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }
}

pub fn read_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read_to_string(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}

pub fn hps() -> &'static Case {
    static CASE: std::sync::OnceLock<Case> = std::sync::OnceLock::new();
    CASE.get_or_init(|| Case {
        name: "Hotel Pricing System",
        intro: "The Hotel Pricing System calculates and publishes room prices for a hotel chain and exposes them to sales channels.",
        drivers: fs::read_to_string(fixtures_dir().join("hps/ArchitecturalDrivers.md")).unwrap(),
        plan: fs::read_to_string(fixtures_dir().join("hps/IterationPlan.md")).unwrap(),
        externals: &[
            ("ChannelManager", "Channel Management System"),
            ("PropertySystem", "Property Management System"),
            ("IdentityService", "Cloud Identity Service"),
        ],
        domain: "classDiagram\n    class Hotel\n    class RoomType\n    class Rate\n    class Price\n    class User\n    Hotel --> RoomType : offers\n    Rate --> RoomType : applies to\n    Price --> Rate : derived from\n    User --> Hotel : manages",
        unplanned: None,
        iterations: vec![
            IterSpec {
                refine: &["Hotel Pricing System"],
                concepts: &[
                    ["Microservices architecture", "Independent deployment of pricing and query parts", "Modular monolith"],
                    ["Managed container platform", "Cloud-native hosting with autoscaling", "Virtual machines"],
                    ["Continuous deployment pipeline", "Every merged change reaches production automatically", "Manual releases"],
                ],
                containers: &[
                    ("WebApp", "Web Application"),
                    ("ApiGateway", "API Gateway"),
                    ("PricingService", "Pricing Service"),
                    ("QueryService", "Query Service"),
                    ("HotelService", "Hotel Management Service"),
                    ("PricingDB", "Pricing Database"),
                    ("Pipeline", "Deployment Pipeline"),
                ],
                links: &[
                    ("Users", "WebApp", "uses"),
                    ("WebApp", "ApiGateway", "calls"),
                    ("ApiGateway", "PricingService", "routes"),
                    ("ApiGateway", "QueryService", "routes"),
                    ("ApiGateway", "HotelService", "routes"),
                    ("PricingService", "PricingDB", "stores prices"),
                    ("PricingService", "ChannelManager", "publishes prices"),
                    ("HotelService", "PropertySystem", "imports hotels"),
                    ("WebApp", "IdentityService", "authenticates"),
                    ("Pipeline", "PricingService", "deploys"),
                ],
                components: &[],
                sequences: &[Sequence {
                    heading: "QA-7: Deploy a new service version",
                    actor: "Developer",
                    steps: &[
                        ("Developer", "Pipeline", "Merge change"),
                        ("Pipeline", "PricingService", "Roll out new version"),
                        ("PricingService", "Pipeline", "Report health"),
                    ],
                }],
                interfaces: &["Deployment Pipeline: `deploy(service, version)` triggered on every merge"],
                instantiation: &[
                    ["One container per service on the managed platform", "Services scale and deploy independently"],
                    ["Pipeline stage per environment", "Changes are verified before production"],
                ],
                decisions: &[
                    ["CRN-1, CON-6", "Structure the system as microservices behind an API gateway", "Pricing and query load differ widely", "Modular monolith"],
                    ["CON-2, CRN-5, QA-7", "Host on a managed container platform with a continuous deployment pipeline", "Deployments are frequent and must not interrupt service", "Virtual machines with manual releases"],
                ],
                analysis: "The initial structure and the deployment model are in place; the goal of the iteration is met.",
            },
            IterSpec {
                refine: &["Pricing Service"],
                concepts: &[
                    ["Command query responsibility segregation", "Price changes and price queries have different load", "Single shared model"],
                    ["Message broker for price publication", "Channels receive prices asynchronously and reliably", "Synchronous calls to each channel"],
                ],
                containers: &[("MessageBroker", "Message Broker")],
                links: &[
                    ("PricingService", "MessageBroker", "price changed events"),
                    ("MessageBroker", "QueryService", "price changed events"),
                ],
                components: &[Components {
                    container: "Pricing Service",
                    items: &[
                        ("PriceController", "Price Controller"),
                        ("PriceCalculator", "Price Calculator"),
                        ("RateRepository", "Rate Repository"),
                        ("PricePublisher", "Price Publisher"),
                    ],
                    links: &[
                        ("PriceController", "PriceCalculator", "calculates"),
                        ("PriceCalculator", "RateRepository", "reads rates"),
                        ("PriceController", "PricePublisher", "publishes"),
                    ],
                }],
                sequences: &[
                    Sequence {
                        heading: "HPS-2: Change prices",
                        actor: "Manager",
                        steps: &[
                            ("Manager", "WebApp", "Change base rate"),
                            ("WebApp", "ApiGateway", "PUT /rates"),
                            ("ApiGateway", "PriceController", "Forward request"),
                            ("PriceController", "PriceCalculator", "Recalculate prices"),
                            ("PriceCalculator", "RateRepository", "Load rates"),
                            ("PriceController", "PricePublisher", "Publish prices"),
                            ("PricePublisher", "MessageBroker", "Price changed event"),
                        ],
                    },
                    Sequence {
                        heading: "QA-2: Publication survives a channel outage",
                        actor: "Manager",
                        steps: &[
                            ("PricePublisher", "MessageBroker", "Price changed event"),
                            ("MessageBroker", "ChannelManager", "Deliver with retries"),
                        ],
                    },
                ],
                interfaces: &[
                    "Pricing Service: `PUT /rates/{hotel}` changes base rates and returns the recalculated prices",
                    "Message Broker: topic `price-changed` carries hotel, room type, date and price",
                ],
                instantiation: &[
                    ["Price Calculator recalculates only affected dates", "Keeps recalculation within the performance budget"],
                    ["Price Publisher writes to the broker", "Publication retries do not block price changes"],
                ],
                decisions: &[
                    ["HPS-2, QA-1", "Separate price calculation from price queries", "Calculation bursts must not slow queries", "Single shared model"],
                    ["QA-2, CON-5", "Publish prices through a message broker with retries", "Channels may be unavailable", "Synchronous calls"],
                ],
                analysis: "Price changes and publication are designed; performance and reliability scenarios are addressed.",
            },
            IterSpec {
                refine: &["Query Service"],
                concepts: &[
                    ["Read replicas and caching", "Queries dominate the load", "Querying the pricing database directly"],
                    ["Horizontal scaling behind the gateway", "Query load grows with channels", "Vertical scaling"],
                ],
                containers: &[("QueryDB", "Query Database")],
                links: &[("QueryService", "QueryDB", "reads prices")],
                components: &[Components {
                    container: "Query Service",
                    items: &[
                        ("QueryController", "Query Controller"),
                        ("PriceCache", "Price Cache"),
                        ("PriceProjection", "Price Projection"),
                    ],
                    links: &[
                        ("QueryController", "PriceCache", "reads"),
                        ("PriceProjection", "PriceCache", "refreshes"),
                    ],
                }],
                sequences: &[Sequence {
                    heading: "HPS-3: Query prices",
                    actor: "Channel",
                    steps: &[
                        ("Channel", "ApiGateway", "GET /prices"),
                        ("ApiGateway", "QueryController", "Forward request"),
                        ("QueryController", "PriceCache", "Lookup"),
                        ("PriceCache", "QueryDB", "Load on miss"),
                    ],
                }],
                interfaces: &["Query Service: `GET /prices/{hotel}?from&to` returns prices per room type and date"],
                instantiation: &[["Price Projection consumes price changed events", "Keeps the query database current"]],
                decisions: &[["HPS-3, QA-3, QA-4", "Serve queries from a cached read model that scales horizontally", "Query volume is much higher than change volume", "Single database for reads and writes"]],
                analysis: "Queries are served from a scalable read model; availability and scalability scenarios are addressed.",
            },
            IterSpec {
                refine: &["Hotel Management Service"],
                concepts: &[["Layered service", "Hotel and rate management is simple CRUD", "Event sourcing"]],
                containers: &[],
                links: &[],
                components: &[Components {
                    container: "Hotel Management Service",
                    items: &[
                        ("HotelController", "Hotel Controller"),
                        ("RateTypeManager", "Rate Type Manager"),
                        ("HotelRepository", "Hotel Repository"),
                    ],
                    links: &[
                        ("HotelController", "RateTypeManager", "manages rates"),
                        ("HotelController", "HotelRepository", "stores hotels"),
                    ],
                }],
                sequences: &[
                    Sequence {
                        heading: "HPS-4: Manage hotels",
                        actor: "Administrator",
                        steps: &[
                            ("Administrator", "WebApp", "Edit hotel"),
                            ("WebApp", "HotelController", "PUT /hotels"),
                            ("HotelController", "HotelRepository", "Save hotel"),
                        ],
                    },
                    Sequence {
                        heading: "HPS-5: Manage rates",
                        actor: "Administrator",
                        steps: &[
                            ("Administrator", "WebApp", "Edit rate type"),
                            ("WebApp", "HotelController", "PUT /rate-types"),
                            ("HotelController", "RateTypeManager", "Update rate type"),
                        ],
                    },
                ],
                interfaces: &["Hotel Management Service: `PUT /hotels/{id}` and `PUT /rate-types/{id}`"],
                instantiation: &[["Rate Type Manager validates rate rules", "Invalid rates never reach the pricing service"]],
                decisions: &[["HPS-4, HPS-5", "Implement hotel and rate management as a layered service", "Operations are simple and infrequent", "Event sourcing"]],
                analysis: "Hotels and rates can be managed; the iteration goal is met.",
            },
            IterSpec {
                refine: &["Web Application", "API Gateway"],
                concepts: &[["Token based authentication", "The cloud identity service issues tokens", "Session cookies"]],
                containers: &[("UserService", "User Service")],
                links: &[("ApiGateway", "UserService", "routes")],
                components: &[Components {
                    container: "User Service",
                    items: &[
                        ("AuthController", "Auth Controller"),
                        ("TokenValidator", "Token Validator"),
                        ("UserRepository", "User Repository"),
                    ],
                    links: &[
                        ("AuthController", "TokenValidator", "validates"),
                        ("AuthController", "UserRepository", "stores users"),
                    ],
                }],
                sequences: &[
                    Sequence {
                        heading: "HPS-1: Log in",
                        actor: "User",
                        steps: &[
                            ("User", "WebApp", "Open application"),
                            ("WebApp", "IdentityService", "Authenticate"),
                            ("WebApp", "AuthController", "Exchange token"),
                            ("AuthController", "TokenValidator", "Validate token"),
                        ],
                    },
                    Sequence {
                        heading: "HPS-6: Manage users",
                        actor: "Administrator",
                        steps: &[
                            ("Administrator", "WebApp", "Edit user"),
                            ("WebApp", "AuthController", "PUT /users"),
                            ("AuthController", "UserRepository", "Save user"),
                        ],
                    },
                ],
                interfaces: &["User Service: `POST /sessions` exchanges an identity token for an access token"],
                instantiation: &[["API Gateway checks access tokens", "Every service relies on one check"]],
                decisions: &[
                    ["QA-5, HPS-1", "Delegate authentication to the cloud identity service and validate tokens at the gateway", "Avoids storing credentials", "Own credential store"],
                    ["CON-1, HPS-6", "Serve a responsive single page web application", "Works on desktop and mobile browsers", "Native applications"],
                ],
                analysis: "Users log in through the identity service and are managed by administrators; security is addressed.",
            },
            IterSpec {
                refine: &["Pricing Service", "Query Service"],
                concepts: &[
                    ["Centralized monitoring", "Operations need one view of every service", "Per service logs only"],
                    ["Contract tests", "Services evolve independently", "End to end tests only"],
                ],
                containers: &[("Monitoring", "Monitoring Service")],
                links: &[
                    ("PricingService", "Monitoring", "metrics"),
                    ("QueryService", "Monitoring", "metrics"),
                ],
                components: &[Components {
                    container: "Monitoring Service",
                    items: &[("MetricsCollector", "Metrics Collector"), ("AlertManager", "Alert Manager")],
                    links: &[("MetricsCollector", "AlertManager", "raises alerts")],
                }],
                sequences: &[Sequence {
                    heading: "QA-8: Detect a failing service",
                    actor: "Operator",
                    steps: &[
                        ("PricingService", "MetricsCollector", "Push metrics"),
                        ("MetricsCollector", "AlertManager", "Threshold exceeded"),
                        ("AlertManager", "Operator", "Notify"),
                    ],
                }],
                interfaces: &["Monitoring Service: every service exposes `GET /metrics`"],
                instantiation: &[["Each service exposes health and metrics endpoints", "Uniform monitoring and testing"]],
                decisions: &[
                    ["QA-8", "Collect metrics centrally and alert on thresholds", "Failures are detected before customers notice", "Per service logs"],
                    ["QA-6, QA-9, CRN-4", "Use contract tests between services", "Services can change without breaking consumers", "End to end tests only"],
                ],
                analysis: "Monitoring and testing support are designed; all planned drivers are addressed.",
            },
        ],
    })
}

pub const ETS_DRIVERS: &str = "# Event Ticketing System: Architectural Drivers

## User Stories

| ID | Title | Importance | Difficulty |
| --- | --- | --- | --- |
| US012 | Ticket Selection | High | High |
| US013 | Payment Processing | High | High |
| US014 | Order Confirmation | High | Medium |

## Quality Attribute Scenarios

| ID | Title | Importance | Difficulty |
| --- | --- | --- | --- |
| QAS001 | High-Concurrency Ticket Purchase | High | High |
| QAS002 | Search Response Time | Medium | Medium |
| QAS013 | Payment Gateway Integration | High | Medium |
| QAS015 | System Recovery from Failure | High | High |

## Constraints

| ID | Title |
| --- | --- |
| CON-1 | Deploy on a public cloud |

## Concerns

| ID | Title |
| --- | --- |
| CRN-1 | Establish an overall initial system structure |

## Priorities

Primary drivers: US012, US013, US014, QAS001, QAS013 and QAS015.
";

pub const ETS_PLAN: &str = "# Iteration Plan

| Iteration | Goal | Drivers to Address |
| --- | --- | --- |
| 1 | Establish the system structure and ticket selection | CRN-1, CON-1, US012, QAS001 |
| 2 | Payment processing and recovery | US013, US014, QAS013, QAS015 |
";

pub fn ets() -> &'static Case {
    static CASE: std::sync::OnceLock<Case> = std::sync::OnceLock::new();
    CASE.get_or_init(|| Case {
        name: "Event Ticketing System",
        intro: "The Event Ticketing System sells tickets for concerts and other events.",
        drivers: ETS_DRIVERS.to_string(),
        plan: ETS_PLAN.to_string(),
        externals: &[("PaymentGateway", "Payment Gateway")],
        domain: "classDiagram\n    class Event\n    class Ticket\n    class Order\n    Order --> Ticket : contains\n    Ticket --> Event : admits to",
        unplanned: Some("QAS002"),
        iterations: vec![
            IterSpec {
                refine: &["Event Ticketing System"],
                concepts: &[["Microservices architecture", "Ticket selection scales separately", "Monolith"]],
                containers: &[
                    ("WebApp", "Web Application"),
                    ("InventoryService", "Inventory Service"),
                    ("InventoryDB", "Inventory Database"),
                ],
                links: &[
                    ("Users", "WebApp", "uses"),
                    ("WebApp", "InventoryService", "selects tickets"),
                    ("InventoryService", "InventoryDB", "reserves"),
                ],
                components: &[Components {
                    container: "Inventory Service",
                    items: &[("ReservationManager", "Reservation Manager"), ("InventoryRepository", "Inventory Repository")],
                    links: &[("ReservationManager", "InventoryRepository", "locks seats")],
                }],
                sequences: &[Sequence {
                    heading: "US012: Select tickets",
                    actor: "Buyer",
                    steps: &[
                        ("Buyer", "WebApp", "Select seats"),
                        ("WebApp", "ReservationManager", "Reserve seats"),
                        ("ReservationManager", "InventoryRepository", "Lock seats optimistically"),
                    ],
                }],
                interfaces: &["Inventory Service: `POST /reservations` holds seats for ten minutes"],
                instantiation: &[["Reservation Manager holds seats with optimistic locking", "Prevents overselling under load"]],
                decisions: &[
                    ["CRN-1, CON-1", "Deploy microservices on a public cloud", "Services scale independently", "Monolith"],
                    ["US012, QAS001", "Reserve seats with optimistic locking", "High concurrency without oversell", "Pessimistic locks"],
                ],
                analysis: "Ticket selection is designed and the structure is in place.",
            },
            IterSpec {
                refine: &["Web Application"],
                concepts: &[["Saga for order confirmation", "Payment and inventory must stay consistent", "Distributed transactions"]],
                containers: &[("PaymentService", "Payment Service"), ("OrderService", "Order Service")],
                links: &[
                    ("WebApp", "OrderService", "places orders"),
                    ("OrderService", "PaymentService", "requests payment"),
                    ("PaymentService", "PaymentGateway", "charges card"),
                ],
                components: &[Components {
                    container: "Payment Service",
                    items: &[("PaymentGatewayAdapter", "Payment Gateway Adapter"), ("PaymentProcessor", "Payment Processor")],
                    links: &[("PaymentProcessor", "PaymentGatewayAdapter", "charges")],
                }],
                sequences: &[Sequence {
                    heading: "US013: Pay for an order",
                    actor: "Buyer",
                    steps: &[
                        ("Buyer", "WebApp", "Confirm order"),
                        ("WebApp", "OrderService", "Place order"),
                        ("OrderService", "PaymentProcessor", "Charge"),
                        ("PaymentProcessor", "PaymentGatewayAdapter", "Authorize payment"),
                    ],
                }],
                interfaces: &["Payment Service: `POST /payments` charges an order"],
                instantiation: &[["Order Service runs the confirmation saga", "Rolls back reservations on payment failure"]],
                decisions: &[
                    ["US013, US014, QAS013", "Confirm orders with a saga and an adapter per payment gateway", "Consistency without distributed transactions", "Two-phase commit"],
                    ["QAS015", "Deploy in two regions with automated failover", "A region outage must not stop sales", "Single region"],
                ],
                analysis: "Payments and order confirmation are designed; recovery relies on a second region.",
            },
        ],
    })
}
