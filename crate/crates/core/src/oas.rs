//! Endpoint specification ingest: the parameter tree of a JSON request body,
//! default values, and base requests for probing.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::constraint::{Literal, ParamPath};

#[derive(Debug, Error)]
pub enum OasError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported type '{ty}' at '{path}'")]
    UnsupportedType { ty: String, path: String },
    #[error("duplicate parameter name '{0}'")]
    DuplicateName(String),
    #[error("'{name}' is listed as required under '{parent}' but not declared")]
    UnknownRequired { parent: String, name: String },
    #[error("enum values on non-scalar parameter '{0}'")]
    EnumOnNonScalar(String),
    #[error("document describes no endpoint")]
    NoEndpoint,
    #[error("document describes {0} endpoints; load them with load_specs")]
    MultipleEndpoints(usize),
    #[error("unknown parameter path '{0}'")]
    UnknownPath(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    String,
    Number,
    Integer,
    Boolean,
    Array,
    Object,
}

impl DataType {
    fn parse(s: &str) -> Option<DataType> {
        Some(match s {
            "string" => DataType::String,
            "number" => DataType::Number,
            "integer" => DataType::Integer,
            "boolean" => DataType::Boolean,
            "array" => DataType::Array,
            "object" => DataType::Object,
            _ => return None,
        })
    }

    /// Whether a JSON value is acceptable for this type.
    pub fn accepts(self, v: &Value) -> bool {
        match self {
            DataType::String => v.is_string(),
            DataType::Number => v.is_number(),
            DataType::Integer => v.is_i64() || v.is_u64(),
            DataType::Boolean => v.is_boolean(),
            DataType::Array => v.is_array(),
            DataType::Object => v.is_object(),
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DataType::String => "string",
            DataType::Number => "number",
            DataType::Integer => "integer",
            DataType::Boolean => "boolean",
            DataType::Array => "array",
            DataType::Object => "object",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSpec {
    pub name: String,
    pub path: ParamPath,
    pub data_type: DataType,
    pub required: bool,
    pub enum_values: Vec<Literal>,
    pub description: String,
    /// Properties of an object, or of the items of an array of objects.
    pub children: Vec<ParameterSpec>,
    /// Scalar item type for arrays without object items.
    pub item_type: Option<DataType>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointSpec {
    pub endpoint_path: String,
    pub method: String,
    pub parameters: Vec<ParameterSpec>,
    flat_index: BTreeMap<ParamPath, ParameterSpec>,
    order: Vec<ParamPath>,
}

impl EndpointSpec {
    pub fn new(endpoint_path: impl Into<String>, method: impl Into<String>, parameters: Vec<ParameterSpec>) -> Result<Self, OasError> {
        let mut flat_index = BTreeMap::new();
        let mut order = Vec::new();
        fn walk(ps: &[ParameterSpec], idx: &mut BTreeMap<ParamPath, ParameterSpec>, order: &mut Vec<ParamPath>) -> Result<(), OasError> {
            for p in ps {
                if idx.insert(p.path.clone(), p.clone()).is_some() {
                    return Err(OasError::DuplicateName(p.path.to_string()));
                }
                order.push(p.path.clone());
                walk(&p.children, idx, order)?;
            }
            Ok(())
        }
        walk(&parameters, &mut flat_index, &mut order)?;
        Ok(EndpointSpec {
            endpoint_path: endpoint_path.into(),
            method: method.into(),
            parameters,
            flat_index,
            order,
        })
    }

    pub fn get(&self, path: &ParamPath) -> Option<&ParameterSpec> {
        self.flat_index.get(path)
    }

    pub fn contains(&self, path: &ParamPath) -> bool {
        self.flat_index.contains_key(path)
    }

    /// Every parameter in declaration (pre-order) order.
    pub fn flat(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.order.iter().map(move |p| &self.flat_index[p])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn path_catalog(&self) -> HashSet<String> {
        self.order.iter().map(|p| p.to_string()).collect()
    }
}

// ---------------------------------------------------------------------------
// Raw document model

#[derive(Debug, Default, Deserialize)]
struct RawSchema {
    #[serde(rename = "type")]
    ty: Option<String>,
    #[serde(default)]
    properties: Option<Properties>,
    #[serde(default)]
    required: Vec<String>,
    #[serde(rename = "enum", default)]
    enum_values: Vec<Value>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    items: Option<Box<RawSchema>>,
}

/// Ordered property list that rejects duplicate keys.
#[derive(Debug, Default)]
struct Properties(Vec<(String, RawSchema)>);

impl<'de> Deserialize<'de> for Properties {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Properties;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of property schemas")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Properties, A::Error> {
                let mut out: Vec<(String, RawSchema)> = Vec::new();
                while let Some((k, v)) = m.next_entry::<String, RawSchema>()? {
                    if out.iter().any(|(n, _)| *n == k) {
                        return Err(de::Error::custom(format!("duplicate property '{}'", k)));
                    }
                    out.push((k, v));
                }
                Ok(Properties(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Deserialize)]
struct SimpleDoc {
    endpoint: String,
    #[serde(default = "default_method")]
    method: String,
    schema: RawSchema,
}

fn default_method() -> String {
    "post".to_string()
}

fn convert(name: &str, path: ParamPath, raw: &RawSchema, required: bool) -> Result<ParameterSpec, OasError> {
    let ty_name = raw
        .ty
        .clone()
        .unwrap_or_else(|| if raw.properties.is_some() { "object".into() } else { "string".into() });
    let data_type = DataType::parse(&ty_name).ok_or_else(|| OasError::UnsupportedType {
        ty: ty_name.clone(),
        path: path.to_string(),
    })?;
    let enum_values: Vec<Literal> = raw.enum_values.iter().filter_map(Literal::from_json).collect();
    if !enum_values.is_empty() && !matches!(data_type, DataType::String | DataType::Number | DataType::Integer) {
        return Err(OasError::EnumOnNonScalar(path.to_string()));
    }
    let (children, item_type) = match data_type {
        DataType::Object => (convert_properties(&path, raw)?, None),
        DataType::Array => match &raw.items {
            Some(items) if items.properties.is_some() || items.ty.as_deref() == Some("object") => {
                (convert_properties(&path, items)?, None)
            }
            Some(items) => {
                let t = items.ty.as_deref().unwrap_or("string");
                let it = DataType::parse(t).ok_or_else(|| OasError::UnsupportedType {
                    ty: t.to_string(),
                    path: path.to_string(),
                })?;
                (Vec::new(), Some(it))
            }
            None => (Vec::new(), Some(DataType::String)),
        },
        _ => (Vec::new(), None),
    };
    Ok(ParameterSpec {
        name: name.to_string(),
        path,
        data_type,
        required,
        enum_values,
        description: raw.description.clone(),
        children,
        item_type,
    })
}

fn convert_properties(parent: &ParamPath, raw: &RawSchema) -> Result<Vec<ParameterSpec>, OasError> {
    let props = match &raw.properties {
        Some(p) => &p.0,
        None => return Ok(Vec::new()),
    };
    for r in &raw.required {
        if !props.iter().any(|(n, _)| n == r) {
            return Err(OasError::UnknownRequired { parent: parent.to_string(), name: r.clone() });
        }
    }
    props
        .iter()
        .map(|(name, schema)| convert(name, parent.child(name), schema, raw.required.contains(name)))
        .collect()
}

fn endpoint_from_schema(endpoint: &str, method: &str, schema: &RawSchema) -> Result<EndpointSpec, OasError> {
    let params = convert_properties(&ParamPath::new(""), schema)?;
    EndpointSpec::new(endpoint, method.to_lowercase(), params)
}

fn dup_error(e: serde_json::Error) -> OasError {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("duplicate property '") {
        if let Some(end) = rest.find('\'') {
            return OasError::DuplicateName(rest[..end].to_string());
        }
    }
    OasError::Json(e)
}

/// Loads every endpoint of a document.
///
/// Accepts either the compact form `{endpoint, method, schema}` or an
/// OpenAPI document with `paths.<path>.<method>.requestBody.content."application/json".schema`.
pub fn load_specs(document: &str) -> Result<Vec<EndpointSpec>, OasError> {
    let root: Value = serde_json::from_str(document)?;
    if root.get("paths").is_none() {
        let doc: SimpleDoc = serde_json::from_str(document).map_err(dup_error)?;
        return Ok(vec![endpoint_from_schema(&doc.endpoint, &doc.method, &doc.schema)?]);
    }
    // Re-deserialize schemas from their source text so duplicate keys are seen.
    #[derive(Deserialize)]
    struct Media {
        schema: RawSchema,
    }
    #[derive(Deserialize)]
    struct Body {
        content: BTreeMap<String, Media>,
    }
    #[derive(Deserialize)]
    struct Operation {
        #[serde(rename = "requestBody")]
        request_body: Option<Body>,
    }
    #[derive(Deserialize)]
    struct OpenApi {
        paths: BTreeMap<String, BTreeMap<String, Operation>>,
    }
    let doc: OpenApi = serde_json::from_str(document).map_err(dup_error)?;
    let mut out = Vec::new();
    for (path, ops) in &doc.paths {
        for (method, op) in ops {
            let schema = op
                .request_body
                .as_ref()
                .and_then(|b| b.content.get("application/json"))
                .map(|m| &m.schema);
            let empty = RawSchema::default();
            out.push(endpoint_from_schema(path, method, schema.unwrap_or(&empty))?);
        }
    }
    Ok(out)
}

/// Loads a document describing exactly one endpoint.
pub fn load_spec(document: &str) -> Result<EndpointSpec, OasError> {
    let mut all = load_specs(document)?;
    match all.len() {
        0 => Err(OasError::NoEndpoint),
        1 => Ok(all.pop().unwrap()),
        n => Err(OasError::MultipleEndpoints(n)),
    }
}

pub type Overrides = BTreeMap<ParamPath, Value>;

/// Probe value for a parameter: an override, else the first enum literal,
/// else a per-type default.
pub fn default_value(p: &ParameterSpec, overrides: &Overrides) -> Value {
    if let Some(v) = overrides.get(&p.path) {
        return v.clone();
    }
    if let Some(first) = p.enum_values.first() {
        return first.to_json();
    }
    match p.data_type {
        DataType::String => Value::from("str"),
        DataType::Integer => Value::from(0),
        DataType::Number => Value::from(0.0),
        DataType::Boolean => Value::Bool(true),
        DataType::Object => Value::Object(children_defaults(&p.children, overrides)),
        DataType::Array => {
            let element = if p.children.is_empty() {
                scalar_default(p.item_type.unwrap_or(DataType::String))
            } else {
                Value::Object(children_defaults(&p.children, overrides))
            };
            Value::Array(vec![element])
        }
    }
}

fn scalar_default(t: DataType) -> Value {
    match t {
        DataType::String => Value::from("str"),
        DataType::Integer => Value::from(0),
        DataType::Number => Value::from(0.0),
        DataType::Boolean => Value::Bool(true),
        DataType::Object => Value::Object(Map::new()),
        DataType::Array => Value::Array(Vec::new()),
    }
}

fn children_defaults(children: &[ParameterSpec], overrides: &Overrides) -> Map<String, Value> {
    children
        .iter()
        .map(|c| (c.name.clone(), default_value(c, overrides)))
        .collect()
}

/// Base request: every required parameter (under included parents) plus the
/// extra paths, each valued by [`default_value`].
pub fn build_base_request(e: &EndpointSpec, overrides: &Overrides, extra_paths: &[ParamPath]) -> Result<Value, OasError> {
    for p in extra_paths {
        if !e.contains(p) {
            return Err(OasError::UnknownPath(p.to_string()));
        }
    }
    Ok(Value::Object(base_children(&e.parameters, overrides, extra_paths)))
}

fn base_children(ps: &[ParameterSpec], overrides: &Overrides, extra: &[ParamPath]) -> Map<String, Value> {
    let mut out = Map::new();
    for p in ps {
        if extra.contains(&p.path) {
            out.insert(p.name.clone(), default_value(p, overrides));
            continue;
        }
        let leads_to_extra = extra.iter().any(|x| p.path.is_ancestor_of(x));
        if !(p.required || leads_to_extra) {
            continue;
        }
        let v = if let Some(v) = overrides.get(&p.path) {
            v.clone()
        } else {
            match p.data_type {
                DataType::Object => Value::Object(base_children(&p.children, overrides, extra)),
                DataType::Array if !p.children.is_empty() => {
                    Value::Array(vec![Value::Object(base_children(&p.children, overrides, extra))])
                }
                _ => default_value(p, overrides),
            }
        };
        out.insert(p.name.clone(), v);
    }
    out
}
