//! Reading models: the native JSON format and a table-driven adapter for
//! Time4sys XMI exports.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{Activation, Policy, Processor, RtModel, Task, TdmaSlot, TimeExpr};
use crate::rational::{format_rational, parse_rational, serde_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Native,
    Time4sysXmi,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub format: SourceFormat,
    pub text: String,
    /// File path or `<stdin>`.
    pub origin: String,
}

impl SourceDocument {
    pub fn native(text: impl Into<String>, origin: impl Into<String>) -> Self {
        Self { format: SourceFormat::Native, text: text.into(), origin: origin.into() }
    }

    pub fn xmi(text: impl Into<String>, origin: impl Into<String>) -> Self {
        Self { format: SourceFormat::Time4sysXmi, text: text.into(), origin: origin.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("{origin}:{line}:{column}: syntax error: {message}")]
    Syntax { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: schema error at {path}: {message}")]
    Schema { origin: String, path: String, message: String },
    #[error("{origin}: XML error: {message}")]
    Xml { origin: String, message: String },
    #[error("MISSING_MAPPING: no mapping entry for `{concept}`")]
    MissingMapping { concept: String },
    #[error("invalid mapping configuration: {0}")]
    Mapping(String),
    #[error("expected a {expected:?} document, got {found:?}")]
    WrongFormat { expected: SourceFormat, found: SourceFormat },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Syntax { .. } => "SYNTAX",
            IngestError::Schema { .. } => "SCHEMA",
            IngestError::Xml { .. } => "XML_SYNTAX",
            IngestError::MissingMapping { .. } => "MISSING_MAPPING",
            IngestError::Mapping(_) => "BAD_MAPPING",
            IngestError::WrongFormat { .. } => "WRONG_FORMAT",
        }
    }
}

// ---- native format ---------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    processors: Vec<RawProcessor>,
    #[serde(default)]
    tasks: Vec<RawTask>,
    #[serde(default)]
    dependencies: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcessor {
    name: String,
    policy: RawPolicy,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawPolicy {
    FpsPreemptive,
    FpsNonpreemptive,
    Rms,
    Tdma { slots: Vec<(String, RawTime)> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    processor: String,
    activation: RawActivation,
    bcet: RawTime,
    wcet: RawTime,
    #[serde(default)]
    deadline: Option<RawTime>,
    #[serde(default)]
    priority: Option<i64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawActivation {
    Periodic {
        period: RawTime,
        #[serde(default)]
        offset: Option<RawTime>,
    },
    Sporadic {
        min_iat: RawTime,
        #[serde(default)]
        offset: Option<RawTime>,
    },
    Triggered,
}

/// A timing value: a number, an `"n/d"` string, or
/// `{"param": name, "interval": [lo, hi]}`.
struct RawTime(TimeExpr);

impl<'de> Deserialize<'de> for RawTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = Value::deserialize(d)?;
        time_from_json(&v).map(RawTime).map_err(D::Error::custom)
    }
}

fn time_from_json(v: &Value) -> Result<TimeExpr, String> {
    match v {
        Value::Object(map) => {
            for k in map.keys() {
                if k != "param" && k != "interval" {
                    return Err(format!("unknown field `{k}`, expected `param` or `interval`"));
                }
            }
            let name = map.get("param").and_then(Value::as_str).ok_or("parameter object needs a string `param`")?;
            if !is_identifier(name) {
                return Err(format!("`{name}` is not a valid parameter name"));
            }
            let interval = match map.get("interval") {
                None | Some(Value::Null) => None,
                Some(Value::Array(a)) if a.len() == 2 => {
                    let lo = serde_rational::from_json(&a[0])?;
                    let hi = serde_rational::from_json(&a[1])?;
                    if lo < Rational::from_integer(0) || lo > hi {
                        return Err(format!("interval [{lo}, {hi}] must satisfy 0 <= lo <= hi"));
                    }
                    Some((lo, hi))
                }
                Some(_) => return Err("`interval` must be a two-element array".into()),
            };
            Ok(TimeExpr::Param { name: name.to_string(), interval })
        }
        other => {
            let c = serde_rational::from_json(other)?;
            if c < Rational::from_integer(0) {
                return Err(format!("time value {} is negative", format_rational(&c)));
            }
            Ok(TimeExpr::Const(c))
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses the native JSON format.
///
/// Unknown keys are rejected. Per-task constant checks (non-negative
/// values, `bcet <= wcet`) are reported as schema errors at the task;
/// cross-element checks are left to [`crate::model::validate`].
pub fn parse_native(doc: &SourceDocument) -> Result<RtModel, IngestError> {
    if doc.format != SourceFormat::Native {
        return Err(IngestError::WrongFormat { expected: SourceFormat::Native, found: doc.format });
    }
    use IngestError::Schema;
    let origin = doc.origin.clone();
    let mut de = serde_json::Deserializer::from_str(&doc.text);
    let raw: RawModel = match serde_path_to_error::deserialize(&mut de) {
        Ok(r) => r,
        Err(e) => {
            let path = json_pointer(e.path());
            let inner = e.into_inner();
            return Err(match inner.classify() {
                serde_json::error::Category::Data => {
                    Schema { origin, path, message: strip_position(&inner.to_string()) }
                }
                _ => IngestError::Syntax {
                    origin,
                    line: inner.line(),
                    column: inner.column(),
                    message: strip_position(&inner.to_string()),
                },
            });
        }
    };
    if let Err(e) = de.end() {
        return Err(IngestError::Syntax {
            origin,
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        });
    }
    let mut model = RtModel::default();
    for p in raw.processors {
        let policy = match p.policy {
            RawPolicy::FpsPreemptive => Policy::FpsPreemptive,
            RawPolicy::FpsNonpreemptive => Policy::FpsNonPreemptive,
            RawPolicy::Rms => Policy::Rms,
            RawPolicy::Tdma { slots } => {
                Policy::Tdma { slots: slots.into_iter().map(|(task, len)| TdmaSlot { task, length: len.0 }).collect() }
            }
        };
        model.processors.push(Processor { name: p.name, policy });
    }
    for (i, t) in raw.tasks.into_iter().enumerate() {
        let zero = || TimeExpr::Const(Rational::from_integer(0));
        let activation = match t.activation {
            RawActivation::Periodic { period, offset } => {
                Activation::Periodic { period: period.0, offset: offset.map(|o| o.0).unwrap_or_else(zero) }
            }
            RawActivation::Sporadic { min_iat, offset } => {
                Activation::Sporadic { min_iat: min_iat.0, offset: offset.map(|o| o.0).unwrap_or_else(zero) }
            }
            RawActivation::Triggered => Activation::Triggered,
        };
        if let (Some(b), Some(w)) = (t.bcet.0.as_const(), t.wcet.0.as_const()) {
            if b > w {
                return Err(Schema {
                    origin,
                    path: format!("/tasks/{i}"),
                    message: format!(
                        "task {}: bcet {} exceeds wcet {}",
                        t.name,
                        format_rational(&b),
                        format_rational(&w)
                    ),
                });
            }
        }
        model.tasks.push(Task {
            name: t.name,
            processor: t.processor,
            activation,
            bcet: t.bcet.0,
            wcet: t.wcet.0,
            deadline: t.deadline.map(|d| d.0),
            priority: t.priority,
        });
    }
    model.dependencies = raw.dependencies;
    Ok(model)
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn parse_native_str(text: &str, origin: &str) -> Result<RtModel, IngestError> {
    parse_native(&SourceDocument::native(text, origin))
}

fn rational_json(v: &Rational) -> Value {
    if v.is_integer() {
        json!(v.to_integer())
    } else {
        json!(format_rational(v))
    }
}

fn time_json(e: &TimeExpr) -> Value {
    match e {
        TimeExpr::Const(c) => rational_json(c),
        TimeExpr::Param { name, interval: None } => json!({ "param": name }),
        TimeExpr::Param { name, interval: Some((lo, hi)) } => {
            json!({ "param": name, "interval": [rational_json(lo), rational_json(hi)] })
        }
    }
}

/// Inverse of [`parse_native`] on valid models.
pub fn native_value(model: &RtModel) -> Value {
    let processors: Vec<Value> = model
        .processors
        .iter()
        .map(|p| {
            let policy = match &p.policy {
                Policy::FpsPreemptive => json!("fps_preemptive"),
                Policy::FpsNonPreemptive => json!("fps_nonpreemptive"),
                Policy::Rms => json!("rms"),
                Policy::Tdma { slots } => json!({ "tdma": { "slots": slots
                    .iter()
                    .map(|s| json!([s.task, time_json(&s.length)]))
                    .collect::<Vec<_>>() } }),
            };
            json!({ "name": p.name, "policy": policy })
        })
        .collect();
    let tasks: Vec<Value> = model
        .tasks
        .iter()
        .map(|t| {
            let activation = match &t.activation {
                Activation::Periodic { period, offset } => {
                    json!({ "periodic": { "period": time_json(period), "offset": time_json(offset) } })
                }
                Activation::Sporadic { min_iat, offset } => {
                    json!({ "sporadic": { "min_iat": time_json(min_iat), "offset": time_json(offset) } })
                }
                Activation::Triggered => json!("triggered"),
            };
            let mut obj = serde_json::Map::new();
            obj.insert("name".into(), json!(t.name));
            obj.insert("processor".into(), json!(t.processor));
            obj.insert("activation".into(), activation);
            obj.insert("bcet".into(), time_json(&t.bcet));
            obj.insert("wcet".into(), time_json(&t.wcet));
            if let Some(d) = &t.deadline {
                obj.insert("deadline".into(), time_json(d));
            }
            if let Some(p) = t.priority {
                obj.insert("priority".into(), json!(p));
            }
            Value::Object(obj)
        })
        .collect();
    json!({
        "processors": processors,
        "tasks": tasks,
        "dependencies": model.dependencies.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

pub fn serialize_native(model: &RtModel) -> String {
    let mut s = serde_json::to_string_pretty(&native_value(model)).expect("JSON values always serialize");
    s.push('\n');
    s
}

// ---- Time4sys XMI ----------------------------------------------------------

/// Element and attribute names used to recognize Time4sys concepts.
///
/// Keys are our concepts, values the local XML names found in the export.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    #[serde(default)]
    pub elements: BTreeMap<String, String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    /// Export policy value → native policy name.
    #[serde(default)]
    pub policies: BTreeMap<String, String>,
}

/// Shipped defaults. The tag names are a best guess at the export and are
/// meant to be overridden.
pub const DEFAULT_MAPPING_TOML: &str = include_str!("../data/time4sys-mapping.toml");

impl MappingConfig {
    pub fn provisional() -> Self {
        Self::from_toml(DEFAULT_MAPPING_TOML).expect("shipped mapping parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Mapping(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Mapping(e.to_string()))
    }

    fn element(&self, concept: &str) -> Result<&str, IngestError> {
        self.elements
            .get(concept)
            .map(String::as_str)
            .ok_or_else(|| IngestError::MissingMapping { concept: format!("elements.{concept}") })
    }

    fn attr(&self, concept: &str) -> Result<&str, IngestError> {
        self.attributes
            .get(concept)
            .map(String::as_str)
            .ok_or_else(|| IngestError::MissingMapping { concept: format!("attributes.{concept}") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WarningCode {
    UnmappedElement,
    JitterIgnored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub code: WarningCode,
    pub element: String,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = match self.code {
            WarningCode::UnmappedElement => "UNMAPPED_ELEMENT",
            WarningCode::JitterIgnored => "JITTER_IGNORED",
        };
        write!(f, "warning {code} at {}: {}", self.element, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XmiImport {
    pub model: RtModel,
    pub warnings: Vec<Warning>,
}

pub fn parse_time4sys_xmi(doc: &SourceDocument, mapping: &MappingConfig) -> Result<XmiImport, IngestError> {
    if doc.format != SourceFormat::Time4sysXmi {
        return Err(IngestError::WrongFormat { expected: SourceFormat::Time4sysXmi, found: doc.format });
    }
    let origin = doc.origin.clone();
    let xml = roxmltree::Document::parse(&doc.text)
        .map_err(|e| IngestError::Xml { origin: origin.clone(), message: e.to_string() })?;

    let el_processor = mapping.element("processor")?;
    let el_task = mapping.element("task")?;
    let el_periodic = mapping.element("periodic")?;
    let el_sporadic = mapping.element("sporadic")?;
    let el_precedence = mapping.element("precedence")?;
    let a_id = mapping.attr("id")?;
    let a_name = mapping.attr("name")?;

    let schema = |node: roxmltree::Node, message: String| IngestError::Schema {
        origin: origin.clone(),
        path: element_path(node),
        message,
    };
    let attr = |node: roxmltree::Node, concept: &str| -> Result<Option<String>, IngestError> {
        let key = mapping.attr(concept)?;
        Ok(node.attributes().find(|a| a.name() == key).map(|a| a.value().to_string()))
    };
    let time_attr = |node: roxmltree::Node, concept: &str| -> Result<Option<TimeExpr>, IngestError> {
        match attr(node, concept)? {
            None => Ok(None),
            Some(text) => {
                let v = parse_rational(&text).map_err(|e| schema(node, e.to_string()))?;
                if v < Rational::from_integer(0) {
                    return Err(schema(node, format!("{concept} is negative")));
                }
                Ok(Some(TimeExpr::Const(v)))
            }
        }
    };
    let required_time = |node: roxmltree::Node, concept: &str| -> Result<TimeExpr, IngestError> {
        time_attr(node, concept)?.ok_or_else(|| schema(node, format!("missing {concept}")))
    };

    let mut warnings = Vec::new();
    let mut model = RtModel::default();
    // xmi:id → name, for processors and tasks alike.
    let mut ids: BTreeMap<String, String> = BTreeMap::new();
    for node in xml.descendants().filter(|n| n.is_element()) {
        let local = node.tag_name().name();
        if local == el_processor || local == el_task {
            let name = node
                .attributes()
                .find(|a| a.name() == a_name)
                .map(|a| a.value().to_string())
                .ok_or_else(|| schema(node, "missing name".into()))?;
            if let Some(id) = node.attributes().find(|a| a.name() == a_id) {
                ids.insert(id.value().to_string(), name.clone());
            }
        }
    }
    let resolve = |r: &str| ids.get(r).cloned().unwrap_or_else(|| r.to_string());

    let root = xml.root_element();
    for node in xml.descendants().filter(|n| n.is_element()) {
        let local = node.tag_name().name();
        let name_of = |n: roxmltree::Node| n.attributes().find(|a| a.name() == a_name).map(|a| a.value().to_string());
        if local == el_processor {
            let raw_policy = attr(node, "policy")?.unwrap_or_else(|| "fps_preemptive".into());
            let native = mapping.policies.get(&raw_policy).cloned().unwrap_or_else(|| raw_policy.to_ascii_lowercase());
            let policy = match native.as_str() {
                "fps_preemptive" => Policy::FpsPreemptive,
                "fps_nonpreemptive" => Policy::FpsNonPreemptive,
                "rms" => Policy::Rms,
                other => return Err(schema(node, format!("unsupported policy `{other}`"))),
            };
            model.processors.push(Processor { name: name_of(node).unwrap_or_default(), policy });
        } else if local == el_task {
            let host = attr(node, "host")?.ok_or_else(|| schema(node, "missing host".into()))?;
            let mut activation = Activation::Triggered;
            for child in node.children().filter(|c| c.is_element()) {
                let cl = child.tag_name().name();
                if cl == el_periodic {
                    if attr(child, "jitter")?.is_some() {
                        warnings.push(Warning {
                            code: WarningCode::JitterIgnored,
                            element: element_path(child),
                            message: "jitter is not supported and was dropped".into(),
                        });
                    }
                    activation = Activation::Periodic {
                        period: required_time(child, "period")?,
                        offset: time_attr(child, "offset")?.unwrap_or(TimeExpr::constant(0)),
                    };
                } else if cl == el_sporadic {
                    if attr(child, "jitter")?.is_some() {
                        warnings.push(Warning {
                            code: WarningCode::JitterIgnored,
                            element: element_path(child),
                            message: "jitter is not supported and was dropped".into(),
                        });
                    }
                    activation = Activation::Sporadic {
                        min_iat: required_time(child, "min_iat")?,
                        offset: time_attr(child, "offset")?.unwrap_or(TimeExpr::constant(0)),
                    };
                }
            }
            let priority = match attr(node, "priority")? {
                None => None,
                Some(p) => Some(p.trim().parse::<i64>().map_err(|_| schema(node, format!("bad priority `{p}`")))?),
            };
            model.tasks.push(Task {
                name: name_of(node).unwrap_or_default(),
                processor: resolve(&host),
                activation,
                bcet: required_time(node, "bcet")?,
                wcet: required_time(node, "wcet")?,
                deadline: time_attr(node, "deadline")?,
                priority,
            });
        } else if local == el_precedence {
            let src = attr(node, "source")?.ok_or_else(|| schema(node, "missing source".into()))?;
            let dst = attr(node, "target")?.ok_or_else(|| schema(node, "missing target".into()))?;
            model.dependencies.push((resolve(&src), resolve(&dst)));
        } else if node != root {
            let under_task = node.parent_element().is_some_and(|p| p.tag_name().name() == el_task);
            let known_child = under_task && (local == el_periodic || local == el_sporadic);
            if !known_child {
                warnings.push(Warning {
                    code: WarningCode::UnmappedElement,
                    element: element_path(node),
                    message: format!("element `{local}` has no mapping and was skipped"),
                });
            }
        }
    }
    Ok(XmiImport { model, warnings })
}

fn element_path(node: roxmltree::Node) -> String {
    let mut parts: Vec<String> = node
        .ancestors()
        .filter(|n| n.is_element())
        .map(|n| {
            let idx = n.prev_siblings().filter(|s| s.is_element() && s.tag_name() == n.tag_name()).count();
            format!("{}[{idx}]", n.tag_name().name())
        })
        .collect();
    parts.reverse();
    format!("/{}", parts.join("/"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, DiagnosticCode};

    const EXAMPLE: &str = r#"{"processors":[{"name":"CPU1","policy":"fps_preemptive"}],"tasks":[{"name":"T1","processor":"CPU1","activation":{"periodic":{"period":10,"offset":5}},"bcet":4,"wcet":5,"deadline":10,"priority":2}],"dependencies":[]}"#;

    #[test]
    fn parses_example_document() {
        let m = parse_native_str(EXAMPLE, "x.json").unwrap();
        assert_eq!(m.tasks.len(), 1);
        assert_eq!(
            m.tasks[0].activation,
            Activation::Periodic { period: TimeExpr::constant(10), offset: TimeExpr::constant(5) }
        );
        assert!(validate(m).is_ok());
    }

    #[test]
    fn decimals_are_exact() {
        let text = EXAMPLE.replace("\"wcet\":5", "\"wcet\":9.4").replace("\"bcet\":4", "\"bcet\":\"47/10\"");
        let m = parse_native_str(&text, "x").unwrap();
        assert_eq!(m.tasks[0].wcet, TimeExpr::Const(Rational::new(47, 5)));
        assert_eq!(m.tasks[0].bcet, TimeExpr::Const(Rational::new(47, 10)));
    }

    #[test]
    fn parameters_with_interval() {
        let text = EXAMPLE.replace("\"period\":10", r#""period":{"param":"T1Period","interval":[99,101]}"#);
        let m = parse_native_str(&text, "x").unwrap();
        let Activation::Periodic { period, .. } = &m.tasks[0].activation else { panic!() };
        assert_eq!(
            period,
            &TimeExpr::Param {
                name: "T1Period".into(),
                interval: Some((Rational::from_integer(99), Rational::from_integer(101)))
            }
        );
    }

    #[test]
    fn empty_tasks() {
        let m = parse_native_str(r#"{"processors":[],"tasks":[],"dependencies":[]}"#, "x").unwrap();
        assert_eq!(m, RtModel::default());
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let text = EXAMPLE.replace("\"priority\":2", "\"priority\":2,\"jitter\":1");
        match parse_native_str(&text, "x").unwrap_err() {
            IngestError::Schema { path, message, .. } => {
                assert_eq!(path, "/tasks/0/jitter");
                assert!(message.contains("jitter"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wcet_below_bcet_is_schema_error_at_task() {
        let text = EXAMPLE.replace("\"wcet\":5", "\"wcet\":3");
        match parse_native_str(&text, "x").unwrap_err() {
            IngestError::Schema { path, .. } => assert_eq!(path, "/tasks/0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_native_str("{\n  \"tasks\": [,]\n}", "bad.json").unwrap_err() {
            IngestError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_time_rejected() {
        let text = EXAMPLE.replace("\"deadline\":10", "\"deadline\":-1");
        assert!(matches!(parse_native_str(&text, "x"), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn round_trip_case_study() {
        let m = crate::casestudy::model();
        let back = parse_native_str(&serialize_native(&m), "rt").unwrap();
        assert_eq!(back, m);
    }

    const XMI: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<time4sys:Design xmlns:time4sys="http://time4sys.org/design" xmlns:xmi="http://www.omg.org/XMI">
  <hardwareResource xmi:id="hw1" name="CPU1" policy="FPS_PREEMPTIVE"/>
  <softwareResource xmi:id="sw1" name="T1" host="hw1" priority="2" bcet="4" wcet="5" deadline="10">
    <periodicPattern period="10" phase="5"/>
  </softwareResource>
</time4sys:Design>"#;

    #[test]
    fn minimal_xmi() {
        let imp = parse_time4sys_xmi(&SourceDocument::xmi(XMI, "m.xmi"), &MappingConfig::provisional()).unwrap();
        assert!(imp.warnings.is_empty(), "{:?}", imp.warnings);
        let m = validate(imp.model).unwrap();
        assert_eq!(m.tasks[0].processor, "CPU1");
        assert_eq!(
            m.tasks[0].activation,
            Activation::Periodic { period: TimeExpr::constant(10), offset: TimeExpr::constant(5) }
        );
    }

    #[test]
    fn xmi_jitter_warns() {
        let text = XMI.replace("phase=\"5\"", "phase=\"5\" jitter=\"1\"");
        let imp = parse_time4sys_xmi(&SourceDocument::xmi(text, "m.xmi"), &MappingConfig::provisional()).unwrap();
        assert_eq!(imp.warnings.len(), 1);
        assert_eq!(imp.warnings[0].code, WarningCode::JitterIgnored);
        assert_eq!(imp.model.tasks.len(), 1);
    }

    #[test]
    fn xmi_only_decorations() {
        let text = r#"<root><note text="x"/><style><color/></style></root>"#;
        let imp = parse_time4sys_xmi(&SourceDocument::xmi(text, "d.xmi"), &MappingConfig::provisional()).unwrap();
        assert_eq!(imp.model, RtModel::default());
        assert_eq!(imp.warnings.len(), 3);
        assert!(imp.warnings.iter().all(|w| w.code == WarningCode::UnmappedElement));
    }

    #[test]
    fn xmi_missing_mapping() {
        let mut cfg = MappingConfig::provisional();
        cfg.elements.remove("task");
        let err = parse_time4sys_xmi(&SourceDocument::xmi(XMI, "m.xmi"), &cfg).unwrap_err();
        assert_eq!(err.code(), "MISSING_MAPPING");
    }

    #[test]
    fn xmi_syntax_error() {
        let err = parse_time4sys_xmi(&SourceDocument::xmi("<a><b></a>", "bad.xmi"), &MappingConfig::provisional())
            .unwrap_err();
        assert_eq!(err.code(), "XML_SYNTAX");
    }

    #[test]
    fn xmi_dependencies_and_triggered() {
        let text = XMI.replace(
            "</time4sys:Design>",
            r#"<softwareResource xmi:id="sw2" name="T2" host="hw1" priority="1" bcet="1" wcet="1"/>
  <precedence source="sw1" target="sw2"/>
</time4sys:Design>"#,
        );
        let imp = parse_time4sys_xmi(&SourceDocument::xmi(text, "m.xmi"), &MappingConfig::provisional()).unwrap();
        assert_eq!(imp.model.dependencies, vec![("T1".to_string(), "T2".to_string())]);
        assert_eq!(imp.model.tasks[1].activation, Activation::Triggered);
        let codes = crate::model::diagnose(&imp.model).iter().map(|d| d.code).collect::<Vec<_>>();
        assert!(!codes.contains(&DiagnosticCode::TriggeredWithoutPredecessor));
    }
}
