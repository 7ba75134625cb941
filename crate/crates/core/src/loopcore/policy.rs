//! Element policies and their properties-file form.
//!
//! Every file is flat `key=value` with keys namespaced by role
//! (`monitor.variables`, `plan.precisionMin`, `kb.frequency`, ...). Lists
//! are comma-separated.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::reqmodel::{CaseKind, Preprocessing, VariableSpec};

use super::LoopError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Monitor,
    Analyze,
    Plan,
    Execute,
    KnowledgeBase,
    Sensors,
    Effectors,
}

impl Role {
    /// The five roles a complete loop needs, in setup order.
    pub const MAPE_K: [Role; 5] = [Role::Monitor, Role::Analyze, Role::Plan, Role::Execute, Role::KnowledgeBase];

    pub fn key(self) -> &'static str {
        match self {
            Role::Monitor => "monitor",
            Role::Analyze => "analyze",
            Role::Plan => "plan",
            Role::Execute => "execute",
            Role::KnowledgeBase => "knowledgeBase",
            Role::Sensors => "sensors",
            Role::Effectors => "effectors",
        }
    }

    pub fn from_key(key: &str) -> Option<Role> {
        [Role::Sensors, Role::Effectors]
            .into_iter()
            .chain(Role::MAPE_K)
            .find(|r| r.key() == key)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Role::Monitor => "Monitor",
            Role::Analyze => "Analyze",
            Role::Plan => "Plan",
            Role::Execute => "Execute",
            Role::KnowledgeBase => "KnowledgeBase",
            Role::Sensors => "Sensors",
            Role::Effectors => "Effectors",
        };
        f.write_str(name)
    }
}

/// Per-case iteration thresholds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseThresholds(BTreeMap<CaseKind, u32>);

impl CaseThresholds {
    pub fn new(default: u32) -> Self {
        Self(CaseKind::ALL.into_iter().map(|k| (k, default)).collect())
    }

    pub fn with(mut self, kind: CaseKind, value: u32) -> Self {
        self.0.insert(kind, value);
        self
    }

    pub fn get(&self, kind: CaseKind) -> u32 {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    pub fn set(&mut self, kind: CaseKind, value: u32) {
        self.0.insert(kind, value);
    }

    fn read(props: &Props, prefix: &str, mut base: Self) -> Result<Self, LoopError> {
        for kind in CaseKind::ALL {
            if let Some(v) = props.parsed::<u32>(&format!("{prefix}.{}", kind.key()))? {
                base.set(kind, v);
            }
        }
        Ok(base)
    }

    fn write(&self, out: &mut Vec<(String, String)>, prefix: &str) {
        for (kind, v) in &self.0 {
            out.push((format!("{prefix}.{}", kind.key()), v.to_string()));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorPolicy {
    pub variables: Vec<VariableSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzePolicy {
    pub algorithm: String,
    pub variables: Vec<String>,
    pub outputs: Vec<String>,
    pub min_analysis_iterations: CaseThresholds,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPolicy {
    pub precision_min: f64,
    pub recall_min: f64,
    pub fmeasure_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutePolicy {
    pub managed_elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBasePolicy {
    /// Loop iterations per simulated second.
    pub frequency: f64,
    pub min_uncertainty_iterations: CaseThresholds,
    /// Operationalization variable names of the persisted columns.
    pub variables: Vec<String>,
    /// Column names used in datasets, parallel to `variables`.
    pub columns: Vec<String>,
    /// Where fetched datasets are written as ARFF files, if anywhere.
    pub dataset_dir: Option<PathBuf>,
}

impl KnowledgeBasePolicy {
    pub fn column_for(&self, variable: &str) -> Option<&str> {
        let i = self.variables.iter().position(|v| v == variable)?;
        self.columns.get(i).map(String::as_str)
    }

    /// Column name to variable name.
    pub fn column_map(&self) -> BTreeMap<String, String> {
        self.columns.iter().cloned().zip(self.variables.iter().cloned()).collect()
    }

    pub fn period_ms(&self) -> u64 {
        (1000.0 / self.frequency).round() as u64
    }
}

/// Policy attached to one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RolePolicy {
    Monitor(MonitorPolicy),
    Analyze(AnalyzePolicy),
    Plan(PlanPolicy),
    Execute(ExecutePolicy),
    KnowledgeBase(KnowledgeBasePolicy),
}

impl RolePolicy {
    pub fn role(&self) -> Role {
        match self {
            RolePolicy::Monitor(_) => Role::Monitor,
            RolePolicy::Analyze(_) => Role::Analyze,
            RolePolicy::Plan(_) => Role::Plan,
            RolePolicy::Execute(_) => Role::Execute,
            RolePolicy::KnowledgeBase(_) => Role::KnowledgeBase,
        }
    }

    /// Why this policy cannot drive an element, if it cannot.
    pub fn problem(&self) -> Option<String> {
        match self {
            RolePolicy::Monitor(p) => {
                if p.variables.is_empty() {
                    return Some("no monitoring variables".into());
                }
                p.variables.iter().find_map(|v| v.validate().err().map(|e| e.to_string()))
            }
            RolePolicy::Analyze(p) => {
                if !p.algorithm.eq_ignore_ascii_case("jrip") {
                    Some(format!("unsupported algorithm `{}`", p.algorithm))
                } else if p.variables.is_empty() {
                    Some("no analysis variables".into())
                } else if p.folds < 2 {
                    Some(format!("folds must be at least 2, got {}", p.folds))
                } else {
                    None
                }
            }
            RolePolicy::Plan(p) => [
                ("precisionMin", p.precision_min),
                ("recallMin", p.recall_min),
                ("fMeasureMin", p.fmeasure_min),
            ]
            .into_iter()
            .find(|(_, v)| !(0.0..=1.0).contains(v))
            .map(|(k, v)| format!("{k} = {v} outside [0,1]")),
            RolePolicy::Execute(p) => p.managed_elements.is_empty().then(|| "no managed elements".into()),
            RolePolicy::KnowledgeBase(p) => {
                if !(p.frequency.is_finite() && p.frequency > 0.0) {
                    Some(format!("frequency {} must be positive", p.frequency))
                } else if p.variables.len() != p.columns.len() {
                    Some("kb.variables and kb.columns differ in length".into())
                } else {
                    None
                }
            }
        }
    }

    pub fn from_properties(role: Role, map: &HashMap<String, String>) -> Result<Self, LoopError> {
        let props = Props(map);
        let policy = match role {
            Role::Monitor => RolePolicy::Monitor(MonitorPolicy::read(&props)?),
            Role::Analyze => RolePolicy::Analyze(AnalyzePolicy::read(&props)?),
            Role::Plan => RolePolicy::Plan(PlanPolicy::read(&props)?),
            Role::Execute => RolePolicy::Execute(ExecutePolicy::read(&props)?),
            Role::KnowledgeBase => RolePolicy::KnowledgeBase(KnowledgeBasePolicy::read(&props)?),
            Role::Sensors | Role::Effectors => {
                return Err(LoopError::Policy {
                    key: role.key().into(),
                    reason: "sensors and effectors take no policy".into(),
                })
            }
        };
        Ok(policy)
    }

    pub fn to_properties(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match self {
            RolePolicy::Monitor(p) => p.write(&mut out),
            RolePolicy::Analyze(p) => p.write(&mut out),
            RolePolicy::Plan(p) => p.write(&mut out),
            RolePolicy::Execute(p) => out.push(("execute.managedElements".into(), p.managed_elements.join(","))),
            RolePolicy::KnowledgeBase(p) => p.write(&mut out),
        }
        out
    }

    pub fn load(role: Role, path: &Path) -> Result<Self, LoopError> {
        Self::from_properties(role, &read_properties(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), LoopError> {
        write_properties(path, &self.to_properties())
    }
}

struct Props<'a>(&'a HashMap<String, String>);

impl Props<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.trim())
    }

    fn required(&self, key: &str) -> Result<&str, LoopError> {
        self.get(key).ok_or_else(|| LoopError::Policy {
            key: key.into(),
            reason: "missing".into(),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, LoopError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| LoopError::Policy {
                key: key.into(),
                reason: format!("cannot parse `{raw}`"),
            }),
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(split_list)
    }
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl MonitorPolicy {
    fn read(props: &Props) -> Result<Self, LoopError> {
        let names = split_list(props.required("monitor.variables")?);
        let mut variables = Vec::with_capacity(names.len());
        for name in names {
            let key = |k: &str| format!("monitor.{name}.{k}");
            let min = props.parsed(&key("min"))?.unwrap_or(0.0);
            let max = props.parsed(&key("max"))?.unwrap_or(1.0);
            let valid_min = props.parsed(&key("validMin"))?.unwrap_or(0.0);
            let valid_max = props.parsed(&key("validMax"))?.unwrap_or(1.0);
            let preprocessing = match props.get(&key("preprocessing")) {
                None | Some("none") | Some("-") => Preprocessing::None,
                Some(other) => match other.strip_prefix("perclos:").map(str::parse) {
                    Some(Ok(window_ticks)) => Preprocessing::PerclosWindow { window_ticks },
                    _ => {
                        return Err(LoopError::Policy {
                            key: key("preprocessing"),
                            reason: format!("unknown preprocessing `{other}`"),
                        })
                    }
                },
            };
            let spec = VariableSpec::new(name.clone(), min, max, valid_min, valid_max, preprocessing)
                .map_err(|e| LoopError::Policy {
                    key: format!("monitor.{name}"),
                    reason: e.to_string(),
                })?;
            variables.push(spec);
        }
        Ok(Self { variables })
    }

    fn write(&self, out: &mut Vec<(String, String)>) {
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        out.push(("monitor.variables".into(), names.join(",")));
        for v in &self.variables {
            let key = |k: &str| format!("monitor.{}.{k}", v.name);
            out.push((key("min"), v.raw_min.to_string()));
            out.push((key("max"), v.raw_max.to_string()));
            out.push((key("validMin"), v.valid_min.to_string()));
            out.push((key("validMax"), v.valid_max.to_string()));
            let pre = match v.preprocessing {
                Preprocessing::None => "none".to_string(),
                Preprocessing::PerclosWindow { window_ticks } => format!("perclos:{window_ticks}"),
            };
            out.push((key("preprocessing"), pre));
        }
    }
}

impl AnalyzePolicy {
    fn read(props: &Props) -> Result<Self, LoopError> {
        let d = PolicySet::default_analyze();
        Ok(Self {
            algorithm: props.get("analyze.algorithm").map(String::from).unwrap_or(d.algorithm),
            variables: props.list("analyze.variables").unwrap_or(d.variables),
            outputs: props.list("analyze.outputs").unwrap_or(d.outputs),
            min_analysis_iterations: CaseThresholds::read(
                props,
                "analyze.minAnalysisIterations",
                d.min_analysis_iterations,
            )?,
            folds: props.parsed("analyze.folds")?.unwrap_or(d.folds),
            seed: props.parsed("analyze.seed")?.unwrap_or(d.seed),
        })
    }

    fn write(&self, out: &mut Vec<(String, String)>) {
        out.push(("analyze.algorithm".into(), self.algorithm.clone()));
        out.push(("analyze.variables".into(), self.variables.join(",")));
        out.push(("analyze.outputs".into(), self.outputs.join(",")));
        self.min_analysis_iterations.write(out, "analyze.minAnalysisIterations");
        out.push(("analyze.folds".into(), self.folds.to_string()));
        out.push(("analyze.seed".into(), self.seed.to_string()));
    }
}

impl PlanPolicy {
    fn read(props: &Props) -> Result<Self, LoopError> {
        let d = PolicySet::default_plan();
        Ok(Self {
            precision_min: props.parsed("plan.precisionMin")?.unwrap_or(d.precision_min),
            recall_min: props.parsed("plan.recallMin")?.unwrap_or(d.recall_min),
            fmeasure_min: props.parsed("plan.fMeasureMin")?.unwrap_or(d.fmeasure_min),
        })
    }

    fn write(&self, out: &mut Vec<(String, String)>) {
        out.push(("plan.precisionMin".into(), self.precision_min.to_string()));
        out.push(("plan.recallMin".into(), self.recall_min.to_string()));
        out.push(("plan.fMeasureMin".into(), self.fmeasure_min.to_string()));
    }
}

impl ExecutePolicy {
    fn read(props: &Props) -> Result<Self, LoopError> {
        Ok(Self {
            managed_elements: split_list(props.required("execute.managedElements")?),
        })
    }
}

impl KnowledgeBasePolicy {
    fn read(props: &Props) -> Result<Self, LoopError> {
        let d = PolicySet::default_kb();
        let variables = props.list("kb.variables").unwrap_or(d.variables);
        let columns = props.list("kb.columns").unwrap_or_else(|| variables.clone());
        Ok(Self {
            frequency: props.parsed("kb.frequency")?.unwrap_or(d.frequency),
            min_uncertainty_iterations: CaseThresholds::read(
                props,
                "kb.minUncertaintyIterations",
                d.min_uncertainty_iterations,
            )?,
            variables,
            columns,
            dataset_dir: props.get("kb.datasetDir").filter(|s| !s.is_empty()).map(PathBuf::from),
        })
    }

    fn write(&self, out: &mut Vec<(String, String)>) {
        out.push(("kb.frequency".into(), self.frequency.to_string()));
        self.min_uncertainty_iterations.write(out, "kb.minUncertaintyIterations");
        out.push(("kb.variables".into(), self.variables.join(",")));
        out.push(("kb.columns".into(), self.columns.join(",")));
        if let Some(dir) = &self.dataset_dir {
            out.push(("kb.datasetDir".into(), dir.display().to_string()));
        }
    }
}

/// One element to create: its role and the policy it runs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementAssignment {
    pub role: Role,
    pub policy_ref: String,
}

/// Structure descriptor plus the policy each element uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagerPolicy {
    pub elements: Vec<ElementAssignment>,
    /// Variables the loop monitors, as listed for the autonomic manager.
    pub variables: Vec<String>,
}

impl ManagerPolicy {
    /// One element per role, each using the policy named after its role.
    pub fn default_structure() -> Self {
        Self {
            elements: Role::MAPE_K
                .into_iter()
                .map(|role| ElementAssignment {
                    role,
                    policy_ref: role.key().to_string(),
                })
                .collect(),
            variables: PolicySet::default_kb().columns,
        }
    }

    pub fn count(&self, role: Role) -> usize {
        self.elements.iter().filter(|e| e.role == role).count()
    }

    pub fn missing_roles(&self) -> Vec<Role> {
        Role::MAPE_K.into_iter().filter(|r| self.count(*r) == 0).collect()
    }

    /// Reads `manager.<role>.count`, `manager.<role>.policy` and optional
    /// per-instance `manager.<role>.<n>.policy` overrides (n from 1).
    pub fn from_properties(map: &HashMap<String, String>) -> Result<Self, LoopError> {
        let props = Props(map);
        let mut elements = Vec::new();
        for role in Role::MAPE_K {
            let count: usize = props.parsed(&format!("manager.{}.count", role.key()))?.unwrap_or(0);
            let shared = props.get(&format!("manager.{}.policy", role.key()));
            for n in 1..=count {
                let own = props.get(&format!("manager.{}.{n}.policy", role.key()));
                let policy_ref = own.or(shared).ok_or_else(|| LoopError::Policy {
                    key: format!("manager.{}.policy", role.key()),
                    reason: format!("no policy for {role} #{n}"),
                })?;
                elements.push(ElementAssignment {
                    role,
                    policy_ref: policy_ref.to_string(),
                });
            }
        }
        Ok(Self {
            elements,
            variables: props.list("manager.variables").unwrap_or_default(),
        })
    }

    pub fn to_properties(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for role in Role::MAPE_K {
            let mine: Vec<&ElementAssignment> = self.elements.iter().filter(|e| e.role == role).collect();
            out.push((format!("manager.{}.count", role.key()), mine.len().to_string()));
            if let Some(first) = mine.first() {
                out.push((format!("manager.{}.policy", role.key()), first.policy_ref.clone()));
            }
            for (n, e) in mine.iter().enumerate().skip(1) {
                if e.policy_ref != mine[0].policy_ref {
                    out.push((format!("manager.{}.{}.policy", role.key(), n + 1), e.policy_ref.clone()));
                }
            }
        }
        out.push(("manager.variables".into(), self.variables.join(",")));
        out
    }
}

/// The manager policy and every policy it references, keyed by reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub manager: ManagerPolicy,
    pub policies: BTreeMap<String, RolePolicy>,
}

impl Default for PolicySet {
    fn default() -> Self {
        let manager = ManagerPolicy::default_structure();
        let policies = [
            RolePolicy::Monitor(Self::default_monitor()),
            RolePolicy::Analyze(Self::default_analyze()),
            RolePolicy::Plan(Self::default_plan()),
            RolePolicy::Execute(Self::default_execute()),
            RolePolicy::KnowledgeBase(Self::default_kb()),
        ]
        .into_iter()
        .map(|p| (p.role().key().to_string(), p))
        .collect();
        Self { manager, policies }
    }
}

impl PolicySet {
    /// Sensor variables as SACRE receives them: already normalized by the
    /// vehicle, with heart rate readings below 0.3 treated as faulty.
    pub fn default_monitor() -> MonitorPolicy {
        let spec = |name: &str, valid_min: f64| {
            VariableSpec::new(name, 0.0, 1.0, valid_min, 1.0, Preprocessing::None).expect("static spec")
        };
        MonitorPolicy {
            variables: vec![
                spec("perclos", 0.0),
                spec("facePosition", 0.0),
                spec("hbpm", 0.3),
                spec("hosw", 0.0),
            ],
        }
    }

    pub fn default_analyze() -> AnalyzePolicy {
        AnalyzePolicy {
            algorithm: "JRip".into(),
            variables: ["perclos", "facePosition", "hbpm", "hosw"].map(String::from).to_vec(),
            outputs: ["rules", "precision", "recall", "fMeasure"].map(String::from).to_vec(),
            min_analysis_iterations: CaseThresholds::new(0)
                .with(CaseKind::Case2a, 3)
                .with(CaseKind::Case2b, 3)
                .with(CaseKind::Case2c, 3),
            folds: crate::mining::DEFAULT_FOLDS,
            seed: 1,
        }
    }

    pub fn default_plan() -> PlanPolicy {
        PlanPolicy {
            precision_min: 0.95,
            recall_min: 0.95,
            fmeasure_min: 0.95,
        }
    }

    pub fn default_execute() -> ExecutePolicy {
        ExecutePolicy {
            managed_elements: vec!["vehicle".into()],
        }
    }

    pub fn default_kb() -> KnowledgeBasePolicy {
        KnowledgeBasePolicy {
            frequency: 14.28,
            min_uncertainty_iterations: CaseThresholds::new(3)
                .with(CaseKind::Case2a, 0)
                .with(CaseKind::Case2b, 0)
                .with(CaseKind::Case2c, 0),
            variables: ["perclos", "facePosition", "hbpm", "hosw"].map(String::from).to_vec(),
            columns: ["perclos", "facePosition", "heartBeatsPerMinute", "handsOnSteeringWheel"]
                .map(String::from)
                .to_vec(),
            dataset_dir: None,
        }
    }

    pub fn policy(&self, reference: &str) -> Option<&RolePolicy> {
        self.policies.get(reference)
    }

    /// Mutable access to the first policy of a role, for overrides.
    pub fn role_policy_mut(&mut self, role: Role) -> Option<&mut RolePolicy> {
        let reference = self.manager.elements.iter().find(|e| e.role == role)?.policy_ref.clone();
        self.policies.get_mut(&reference)
    }

    pub fn analyze_mut(&mut self) -> Option<&mut AnalyzePolicy> {
        match self.role_policy_mut(Role::Analyze)? {
            RolePolicy::Analyze(p) => Some(p),
            _ => None,
        }
    }

    pub fn kb_mut(&mut self) -> Option<&mut KnowledgeBasePolicy> {
        match self.role_policy_mut(Role::KnowledgeBase)? {
            RolePolicy::KnowledgeBase(p) => Some(p),
            _ => None,
        }
    }

    /// Reads a manager file and the role files it references, resolving
    /// relative paths against the manager file's directory.
    pub fn load(manager_path: &Path) -> Result<Self, LoopError> {
        let manager = ManagerPolicy::from_properties(&read_properties(manager_path)?)?;
        let base = manager_path.parent().unwrap_or(Path::new("."));
        let mut policies = BTreeMap::new();
        for e in &manager.elements {
            if policies.contains_key(&e.policy_ref) {
                continue;
            }
            let policy = RolePolicy::load(e.role, &base.join(&e.policy_ref))?;
            policies.insert(e.policy_ref.clone(), policy);
        }
        Ok(Self { manager, policies })
    }

    /// Writes `manager.properties` plus one file per referenced policy into
    /// `dir`. References become file names.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, LoopError> {
        fs::create_dir_all(dir).map_err(|e| LoopError::Io(e.to_string()))?;
        let mut manager = self.manager.clone();
        for e in &mut manager.elements {
            if !e.policy_ref.ends_with(".properties") {
                e.policy_ref = format!("{}.properties", e.policy_ref);
            }
        }
        for (reference, policy) in &self.policies {
            let file = if reference.ends_with(".properties") {
                reference.clone()
            } else {
                format!("{reference}.properties")
            };
            policy.save(&dir.join(file))?;
        }
        let path = dir.join("manager.properties");
        write_properties(&path, &manager.to_properties())?;
        Ok(path)
    }
}

pub fn read_properties(path: &Path) -> Result<HashMap<String, String>, LoopError> {
    let file = fs::File::open(path).map_err(|e| LoopError::Io(format!("{}: {e}", path.display())))?;
    java_properties::read(file).map_err(|e| LoopError::Policy {
        key: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn write_properties(path: &Path, entries: &[(String, String)]) -> Result<(), LoopError> {
    let map: HashMap<String, String> = entries.iter().cloned().collect();
    let file = fs::File::create(path).map_err(|e| LoopError::Io(format!("{}: {e}", path.display())))?;
    java_properties::write(file, &map).map_err(|e| LoopError::Io(e.to_string()))
}
