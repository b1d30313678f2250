//! Labeled transition systems for navigation and tabletop manipulation.
//!
//! Every executed action emits exactly one event proposition: the landmark
//! name for `Goto <landmark>`, and `<block>_in_<box>` for `Move <block> <box>`.
//! Costs follow a kinematic model: straight-line distance over speed, plus
//! fixed per-action overheads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ltl::{is_valid_atom_name, Trace};

/// The terminal action of every plan.
pub const DONE: &str = "DONE";

pub const ROOM_COLORS: [&str; 12] = [
    "red", "green", "blue", "yellow", "purple", "orange", "pink", "cyan", "white", "black", "gray",
    "brown",
];

/// Building footprint for generated navigation layouts, in meters.
pub const BUILDING_X: f64 = 40.0;
pub const BUILDING_Y: f64 = 24.0;
pub const FLOOR_HEIGHT: f64 = 3.5;
/// Table footprint for generated manipulation layouts, in meters.
pub const TABLE_X: f64 = 1.2;
pub const TABLE_Y: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("`{0}` is not a landmark")]
    UnknownLandmark(String),
    #[error("`{0}` is not a block")]
    UnknownBlock(String),
    #[error("`{0}` is not a box")]
    UnknownBox(String),
    #[error("block `{0}` has already been moved")]
    AlreadyMoved(String),
    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<EnvError> },
    #[error("plan must end with a single DONE")]
    MalformedPlan,
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error("environment file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Navigation,
    Manipulation,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Navigation => "navigation",
            DomainKind::Manipulation => "manipulation",
        })
    }
}

impl std::str::FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "navigation" | "nav" => Ok(DomainKind::Navigation),
            "manipulation" | "manip" => Ok(DomainKind::Manipulation),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityRole {
    Landmark,
    Block,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub role: EntityRole,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Entity {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Kinematic parameters. Speeds are in meters per time-step, overheads in
/// time-steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speeds {
    pub travel: f64,
    pub action_overhead: f64,
    #[serde(default)]
    pub pick_place_overhead: f64,
}

/// On-disk environment document (JSON). See `docs/FORMATS.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnvironmentFile {
    id: String,
    kind: DomainKind,
    #[serde(default)]
    seed: Option<u64>,
    entities: Vec<Entity>,
    initial: [f64; 3],
    speeds: Speeds,
}

/// An immutable environment: entity table, initial agent position and cost
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentFile", into = "EnvironmentFile")]
pub struct Environment {
    id: String,
    kind: DomainKind,
    seed: Option<u64>,
    entities: Vec<Entity>,
    initial: [f64; 3],
    speeds: Speeds,
    by_name: BTreeMap<String, usize>,
    landmarks: Vec<usize>,
    blocks: Vec<usize>,
    boxes: Vec<usize>,
}

impl TryFrom<EnvironmentFile> for Environment {
    type Error = EnvError;

    fn try_from(f: EnvironmentFile) -> Result<Self, Self::Error> {
        Environment::new(f.id, f.kind, f.entities, f.initial, f.speeds, f.seed)
    }
}

impl From<Environment> for EnvironmentFile {
    fn from(e: Environment) -> Self {
        EnvironmentFile {
            id: e.id,
            kind: e.kind,
            seed: e.seed,
            entities: e.entities,
            initial: e.initial,
            speeds: e.speeds,
        }
    }
}

/// Where the agent is: the initial position or an entity index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Start,
    At(usize),
}

/// Mutable part of the world. Navigation uses only `location`; manipulation
/// also tracks which blocks have been moved (arm rests at the last box).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvState {
    pub location: Location,
    pub moved: u64,
}

/// A parsed action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Goto(String),
    Move { block: String, to: String },
    Done,
}

impl Action {
    pub fn parse(text: &str) -> Result<Action, EnvError> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        match parts.as_slice() {
            ["DONE"] => Ok(Action::Done),
            ["Goto", l] => Ok(Action::Goto(l.to_string())),
            ["Move", b, x] => Ok(Action::Move {
                block: b.to_string(),
                to: x.to_string(),
            }),
            _ => Err(EnvError::UnknownAction(text.to_string())),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Goto(l) => write!(f, "Goto {l}"),
            Action::Move { block, to } => write!(f, "Move {block} {to}"),
            Action::Done => f.write_str(DONE),
        }
    }
}

/// Result of applying one action.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: EnvState,
    /// The single event proposition the action emits.
    pub event: String,
    pub cost: f64,
}

impl Environment {
    pub fn new(
        id: impl Into<String>,
        kind: DomainKind,
        entities: Vec<Entity>,
        initial: [f64; 3],
        speeds: Speeds,
        seed: Option<u64>,
    ) -> Result<Self, EnvError> {
        let mut by_name = BTreeMap::new();
        let (mut landmarks, mut blocks, mut boxes) = (Vec::new(), Vec::new(), Vec::new());
        for (i, e) in entities.iter().enumerate() {
            if !is_valid_atom_name(&e.name) {
                return Err(EnvError::Invalid(format!("bad entity name `{}`", e.name)));
            }
            if !(e.x.is_finite() && e.y.is_finite() && e.z.is_finite()) {
                return Err(EnvError::Invalid(format!(
                    "non-finite coordinates for `{}`",
                    e.name
                )));
            }
            if by_name.insert(e.name.clone(), i).is_some() {
                return Err(EnvError::Invalid(format!("duplicate entity `{}`", e.name)));
            }
            match (kind, e.role) {
                (DomainKind::Navigation, EntityRole::Landmark) => landmarks.push(i),
                (DomainKind::Manipulation, EntityRole::Block) => blocks.push(i),
                (DomainKind::Manipulation, EntityRole::Box) => boxes.push(i),
                _ => {
                    return Err(EnvError::Invalid(format!(
                        "entity `{}` has a role that does not belong to a {kind} domain",
                        e.name
                    )))
                }
            }
        }
        if blocks.len() > 64 {
            return Err(EnvError::Invalid("at most 64 blocks are supported".into()));
        }
        if !initial.iter().all(|c| c.is_finite()) {
            return Err(EnvError::Invalid("non-finite initial position".into()));
        }
        if !(speeds.travel > 0.0 && speeds.travel.is_finite())
            || !(speeds.action_overhead >= 0.0 && speeds.pick_place_overhead >= 0.0)
        {
            return Err(EnvError::Invalid(
                "speeds must be positive, overheads non-negative".into(),
            ));
        }
        let env = Environment {
            id: id.into(),
            kind,
            seed,
            entities,
            initial,
            speeds,
            by_name,
            landmarks,
            blocks,
            boxes,
        };
        // propositions must be valid atoms and distinct from entity names
        for p in env.propositions() {
            if !is_valid_atom_name(&p) {
                return Err(EnvError::Invalid(format!("bad proposition `{p}`")));
            }
        }
        Ok(env)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.by_name.get(name).map(|&i| &self.entities[i])
    }

    pub fn speeds(&self) -> Speeds {
        self.speeds
    }

    pub fn initial_position(&self) -> [f64; 3] {
        self.initial
    }

    pub fn landmarks(&self) -> impl Iterator<Item = &Entity> {
        self.landmarks.iter().map(|&i| &self.entities[i])
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Entity> {
        self.blocks.iter().map(|&i| &self.entities[i])
    }

    pub fn boxes(&self) -> impl Iterator<Item = &Entity> {
        self.boxes.iter().map(|&i| &self.entities[i])
    }

    pub fn initial_state(&self) -> EnvState {
        EnvState {
            location: Location::Start,
            moved: 0,
        }
    }

    /// Planning entities: landmarks or blocks.
    pub fn num_targets(&self) -> usize {
        match self.kind {
            DomainKind::Navigation => self.landmarks.len(),
            DomainKind::Manipulation => self.blocks.len(),
        }
    }

    /// The proposition vocabulary, in action-vocabulary order.
    pub fn propositions(&self) -> Vec<String> {
        match self.kind {
            DomainKind::Navigation => self.landmarks().map(|l| l.name.clone()).collect(),
            DomainKind::Manipulation => self
                .blocks()
                .flat_map(|b| self.boxes().map(move |x| move_event(&b.name, &x.name)))
                .collect(),
        }
    }

    /// The full action vocabulary (excluding DONE), in a fixed order.
    pub fn vocabulary(&self) -> Vec<Action> {
        match self.kind {
            DomainKind::Navigation => self
                .landmarks()
                .map(|l| Action::Goto(l.name.clone()))
                .collect(),
            DomainKind::Manipulation => self
                .blocks()
                .flat_map(|b| {
                    self.boxes().map(move |x| Action::Move {
                        block: b.name.clone(),
                        to: x.name.clone(),
                    })
                })
                .collect(),
        }
    }

    /// Actions applicable in `state` (excluding DONE), in vocabulary order.
    pub fn applicable(&self, state: &EnvState) -> Vec<Action> {
        match self.kind {
            DomainKind::Navigation => self.vocabulary(),
            DomainKind::Manipulation => self
                .blocks
                .iter()
                .enumerate()
                .filter(|(bit, _)| state.moved & (1 << bit) == 0)
                .flat_map(|(_, &b)| {
                    self.boxes.iter().map(move |&x| Action::Move {
                        block: self.entities[b].name.clone(),
                        to: self.entities[x].name.clone(),
                    })
                })
                .collect(),
        }
    }

    fn position(&self, loc: Location) -> [f64; 3] {
        match loc {
            Location::Start => self.initial,
            Location::At(i) => self.entities[i].position(),
        }
    }

    /// The event proposition `action` emits, independent of state.
    pub fn event(&self, action: &Action) -> Result<String, EnvError> {
        match (self.kind, action) {
            (DomainKind::Navigation, Action::Goto(name)) => match self.entity(name) {
                Some(e) if e.role == EntityRole::Landmark => Ok(name.clone()),
                _ => Err(EnvError::UnknownLandmark(name.clone())),
            },
            (DomainKind::Manipulation, Action::Move { block, to }) => {
                match (self.entity(block), self.entity(to)) {
                    (Some(b), Some(x))
                        if b.role == EntityRole::Block && x.role == EntityRole::Box =>
                    {
                        Ok(move_event(block, to))
                    }
                    (Some(b), _) if b.role == EntityRole::Block => {
                        Err(EnvError::UnknownBox(to.clone()))
                    }
                    _ => Err(EnvError::UnknownBlock(block.clone())),
                }
            }
            (_, a) => Err(EnvError::UnknownAction(a.to_string())),
        }
    }

    /// Applies a non-terminal action.
    pub fn apply(&self, state: &EnvState, action: &Action) -> Result<Transition, EnvError> {
        let here = self.position(state.location);
        match (self.kind, action) {
            (DomainKind::Navigation, Action::Goto(name)) => {
                let &i = self
                    .by_name
                    .get(name)
                    .filter(|&&i| self.entities[i].role == EntityRole::Landmark)
                    .ok_or_else(|| EnvError::UnknownLandmark(name.clone()))?;
                let cost = distance(here, self.entities[i].position()) / self.speeds.travel
                    + self.speeds.action_overhead;
                Ok(Transition {
                    next: EnvState {
                        location: Location::At(i),
                        moved: state.moved,
                    },
                    event: name.clone(),
                    cost,
                })
            }
            (DomainKind::Manipulation, Action::Move { block, to }) => {
                let bit = self
                    .blocks
                    .iter()
                    .position(|&b| self.entities[b].name == *block)
                    .ok_or_else(|| EnvError::UnknownBlock(block.clone()))?;
                let &x = self
                    .by_name
                    .get(to)
                    .filter(|&&i| self.entities[i].role == EntityRole::Box)
                    .ok_or_else(|| EnvError::UnknownBox(to.clone()))?;
                if state.moved & (1 << bit) != 0 {
                    return Err(EnvError::AlreadyMoved(block.clone()));
                }
                let pick = self.entities[self.blocks[bit]].position();
                let travel = distance(here, pick) + distance(pick, self.entities[x].position());
                let cost = travel / self.speeds.travel
                    + self.speeds.action_overhead
                    + self.speeds.pick_place_overhead;
                Ok(Transition {
                    next: EnvState {
                        location: Location::At(x),
                        moved: state.moved | (1 << bit),
                    },
                    event: move_event(block, to),
                    cost,
                })
            }
            (_, Action::Done) => Err(EnvError::UnknownAction(DONE.into())),
            (_, a) => Err(EnvError::UnknownAction(a.to_string())),
        }
    }

    /// Applies an action given as text.
    pub fn apply_str(&self, state: &EnvState, action: &str) -> Result<Transition, EnvError> {
        self.apply(state, &Action::parse(action)?)
    }

    /// Runs a plan; returns the event trace (DONE excluded) and total cost.
    pub fn simulate(&self, plan: &Plan) -> Result<(Trace, f64), EnvError> {
        let mut state = self.initial_state();
        let mut labels = Vec::with_capacity(plan.len());
        let mut total = 0.0;
        for (step, a) in plan.steps().iter().enumerate() {
            let t = self.apply_str(&state, a).map_err(|e| EnvError::AtStep {
                step,
                source: Box::new(e),
            })?;
            labels.push(BTreeSet::from([t.event]));
            total += t.cost;
            state = t.next;
        }
        let trace = Trace::new(self.propositions(), labels)
            .map_err(|e| EnvError::Invalid(e.to_string()))?;
        Ok((trace, total))
    }

    /// Short human-readable description (the environment text that policies
    /// receive).
    pub fn describe(&self) -> String {
        let mut s = match self.kind {
            DomainKind::Navigation => format!(
                "Navigation environment {} with {} rooms. The agent starts at ({:.2}, {:.2}, {:.2}).",
                self.id,
                self.landmarks.len(),
                self.initial[0],
                self.initial[1],
                self.initial[2]
            ),
            DomainKind::Manipulation => format!(
                "Manipulation environment {} with {} blocks and {} boxes. The arm starts at ({:.2}, {:.2}, {:.2}).",
                self.id,
                self.blocks.len(),
                self.boxes.len(),
                self.initial[0],
                self.initial[1],
                self.initial[2]
            ),
        };
        for e in &self.entities {
            s.push_str(&format!(
                " {} at ({:.2}, {:.2}, {:.2}).",
                e.name, e.x, e.y, e.z
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        serde_json::from_str(text).map_err(|e| EnvError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn move_event(block: &str, to: &str) -> String {
    format!("{block}_in_{to}")
}

/// A sequence of actions terminated by exactly one DONE.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Plan {
    actions: Vec<String>,
}

impl Plan {
    /// Builds a plan from its non-terminal steps; DONE is appended.
    pub fn from_steps<S: Into<String>>(
        steps: impl IntoIterator<Item = S>,
    ) -> Result<Self, EnvError> {
        let mut actions: Vec<String> = steps.into_iter().map(Into::into).collect();
        if actions.iter().any(|a| a == DONE) {
            return Err(EnvError::MalformedPlan);
        }
        actions.push(DONE.to_string());
        Ok(Plan { actions })
    }

    /// Non-terminal steps.
    pub fn steps(&self) -> &[String] {
        &self.actions[..self.actions.len() - 1]
    }

    /// All actions including the final DONE.
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    /// Number of non-terminal steps.
    pub fn len(&self) -> usize {
        self.actions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TryFrom<Vec<String>> for Plan {
    type Error = EnvError;

    fn try_from(mut v: Vec<String>) -> Result<Self, Self::Error> {
        if v.last().map(String::as_str) != Some(DONE) {
            return Err(EnvError::MalformedPlan);
        }
        v.pop();
        Plan::from_steps(v)
    }
}

impl From<Plan> for Vec<String> {
    fn from(p: Plan) -> Self {
        p.actions
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.actions.join("; "))
    }
}

/// Deterministic random layout for `kind`, as a function of `seed`.
///
/// Navigation: twelve color-named rooms spread over three or four floors of
/// a building. Manipulation: sixteen blocks on four racks and two boxes.
pub fn random_environment(kind: DomainKind, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e4f1_0000_0000);
    match kind {
        DomainKind::Navigation => {
            let floors = rng.gen_range(3..=4);
            let mut floor_of: Vec<usize> = (0..ROOM_COLORS.len()).map(|i| i % floors).collect();
            floor_of.shuffle(&mut rng);
            let entities = ROOM_COLORS
                .iter()
                .zip(floor_of)
                .map(|(c, floor)| Entity {
                    name: format!("{c}_room"),
                    role: EntityRole::Landmark,
                    x: round2(rng.gen_range(0.0..BUILDING_X)),
                    y: round2(rng.gen_range(0.0..BUILDING_Y)),
                    z: round2(floor as f64 * FLOOR_HEIGHT + 1.5),
                })
                .collect();
            let initial = [
                round2(rng.gen_range(0.0..BUILDING_X)),
                round2(rng.gen_range(0.0..BUILDING_Y)),
                0.0,
            ];
            let speeds = Speeds {
                travel: 0.1,
                action_overhead: 10.0,
                pick_place_overhead: 0.0,
            };
            Environment::new(
                format!("nav_{seed}"),
                kind,
                entities,
                initial,
                speeds,
                Some(seed),
            )
            .expect("generated navigation layout is valid")
        }
        DomainKind::Manipulation => {
            let mut entities = Vec::new();
            let mut slots: Vec<usize> = (0..16).collect();
            slots.shuffle(&mut rng);
            for (b, slot) in slots.into_iter().enumerate() {
                let rack = slot / 4;
                let place = slot % 4;
                entities.push(Entity {
                    name: format!("blk{b}"),
                    role: EntityRole::Block,
                    x: round2(0.15 + 0.3 * rack as f64 + rng.gen_range(-0.02..0.02)),
                    y: round2(0.1 + 0.08 * place as f64),
                    z: 0.05,
                });
            }
            for name in ["boxA", "boxB"] {
                entities.push(Entity {
                    name: name.to_string(),
                    role: EntityRole::Box,
                    x: round2(rng.gen_range(0.1..TABLE_X - 0.1)),
                    y: round2(rng.gen_range(0.5..TABLE_Y - 0.05)),
                    z: 0.0,
                });
            }
            let initial = [
                round2(rng.gen_range(0.0..TABLE_X)),
                round2(rng.gen_range(0.0..TABLE_Y)),
                0.3,
            ];
            let speeds = Speeds {
                travel: 0.005,
                action_overhead: 5.0,
                pick_place_overhead: 40.0,
            };
            Environment::new(
                format!("manip_{seed}"),
                kind,
                entities,
                initial,
                speeds,
                Some(seed),
            )
            .expect("generated manipulation layout is valid")
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
